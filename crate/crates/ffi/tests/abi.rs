use std::ffi::CStr;
use std::path::Path;
use std::process::Command;
use std::ptr;

use wspgl1_ffi::*;

fn last_error() -> String {
    let p = wspgl1_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

struct Problem {
    op: *mut Wspgl1Operator,
    x: Vec<f64>,
    y: Vec<f64>,
    support: Vec<usize>,
}

impl Drop for Problem {
    fn drop(&mut self) {
        unsafe { wspgl1_operator_free(self.op) };
    }
}

fn problem(n: usize, big_n: usize, k: usize, seed: u64) -> Problem {
    let mut op = ptr::null_mut();
    let st = unsafe { wspgl1_operator_gaussian(n, big_n, seed, &mut op) };
    assert_eq!(st, Wspgl1Status::Ok);
    let mut x = vec![0.0; big_n];
    assert_eq!(
        unsafe { wspgl1_sparse_signal(big_n, k, seed + 1, x.as_mut_ptr()) },
        Wspgl1Status::Ok
    );
    let mut y = vec![0.0; n];
    let st = unsafe { wspgl1_operator_apply(op, x.as_ptr(), big_n, y.as_mut_ptr(), n) };
    assert_eq!(st, Wspgl1Status::Ok);
    let support = (0..big_n).filter(|&i| x[i] != 0.0).collect();
    Problem { op, x, y, support }
}

fn solve(p: &Problem, alg: Wspgl1Algorithm) -> *mut Wspgl1Result {
    let eps = 1e-6 * p.y.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut res = ptr::null_mut();
    let st = unsafe {
        wspgl1_solve(
            p.op,
            alg,
            p.y.as_ptr(),
            p.y.len(),
            eps,
            p.support.as_ptr(),
            p.support.len(),
            ptr::null(),
            &mut res,
        )
    };
    assert_eq!(st, Wspgl1Status::Ok, "{}", last_error());
    res
}

fn rel_error(res: *const Wspgl1Result, x: &[f64]) -> f64 {
    let len = unsafe { wspgl1_result_len(res) };
    assert_eq!(len, x.len());
    let mut out = vec![0.0; len];
    assert_eq!(
        unsafe { wspgl1_result_x(res, out.as_mut_ptr(), len) },
        Wspgl1Status::Ok
    );
    let num: f64 = out.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
    let den: f64 = x.iter().map(|b| b * b).sum();
    (num / den).sqrt()
}

#[test]
fn every_algorithm_recovers_an_easy_signal() {
    let p = problem(60, 200, 5, 11);
    for alg in [
        Wspgl1Algorithm::Spgl1,
        Wspgl1Algorithm::Wspgl1,
        Wspgl1Algorithm::Oracle,
        Wspgl1Algorithm::Irwl1,
    ] {
        let res = solve(&p, alg);
        unsafe {
            assert!(wspgl1_result_converged(res), "{alg:?}");
            assert!(wspgl1_result_newton_iters(res) > 0);
            assert!(wspgl1_result_products(res) > 0);
        }
        assert!(rel_error(res, &p.x) < 1e-3, "{alg:?}");
        unsafe { wspgl1_result_free(res) };
    }
}

#[test]
fn result_accessors_agree() {
    let p = problem(60, 200, 5, 3);
    let res = solve(&p, Wspgl1Algorithm::Wspgl1);
    unsafe {
        let k = wspgl1_result_support_len(res);
        assert_eq!(k, wspgl1::drivers::default_support_size(60, 200));
        let mut idx = vec![0usize; k];
        assert_eq!(
            wspgl1_result_support(res, idx.as_mut_ptr(), k),
            Wspgl1Status::Ok
        );
        assert!(idx.windows(2).all(|w| w[0] < w[1]));
        for s in &p.support {
            assert!(idx.contains(s));
        }

        let m = wspgl1_result_trace_len(res);
        assert!(m >= 2);
        let mut first = Wspgl1TracePoint::default();
        assert_eq!(
            wspgl1_result_trace_point(res, 0, &mut first),
            Wspgl1Status::Ok
        );
        assert_eq!(first.tau, 0.0);
        assert!(!first.weighted);
        let mut pt = Wspgl1TracePoint::default();
        assert_eq!(
            wspgl1_result_trace_point(res, m, &mut pt),
            Wspgl1Status::Dimension
        );
        let mut short = vec![0.0; 3];
        assert_eq!(
            wspgl1_result_x(res, short.as_mut_ptr(), 3),
            Wspgl1Status::Dimension
        );
        wspgl1_result_free(res);
    }
}

#[test]
fn operator_round_trip_and_counters() {
    let data = [1.0, 2.0, 0.0, -1.0, 3.0, 0.5];
    let mut op = ptr::null_mut();
    unsafe {
        assert_eq!(
            wspgl1_operator_from_row_major(2, 3, data.as_ptr(), &mut op),
            Wspgl1Status::Ok
        );
        assert_eq!((wspgl1_operator_rows(op), wspgl1_operator_cols(op)), (2, 3));
        let x = [1.0, 1.0, 2.0];
        let mut y = [0.0; 2];
        wspgl1_operator_apply(op, x.as_ptr(), 3, y.as_mut_ptr(), 2);
        assert_eq!(y, [3.0, 3.0]);
        let mut z = [0.0; 3];
        wspgl1_operator_apply_adjoint(op, y.as_ptr(), 2, z.as_mut_ptr(), 3);
        assert_eq!(z, [0.0, 15.0, 1.5]);
        assert_eq!(wspgl1_operator_products(op), 2);
        assert_eq!(
            wspgl1_operator_apply(op, x.as_ptr(), 2, y.as_mut_ptr(), 2),
            Wspgl1Status::Dimension
        );
        assert!(last_error().contains("length"));
        wspgl1_operator_free(op);
        wspgl1_operator_free(ptr::null_mut());
    }
}

#[test]
fn norms_and_projection() {
    let v = [3.0, -1.0, 0.5];
    let w = [1.0, 0.5, 0.25];
    let mut val = 0.0;
    unsafe {
        assert_eq!(
            wspgl1_weighted_l1(v.as_ptr(), w.as_ptr(), 3, &mut val),
            Wspgl1Status::Ok
        );
        assert_eq!(val, 3.625);
        wspgl1_weighted_l1(v.as_ptr(), ptr::null(), 3, &mut val);
        assert_eq!(val, 4.5);
        wspgl1_weighted_linf_dual(v.as_ptr(), w.as_ptr(), 3, &mut val);
        assert_eq!(val, 3.0);
        let over = [1.0, 2.0, 1.0];
        assert_eq!(
            wspgl1_weighted_l1(v.as_ptr(), over.as_ptr(), 3, &mut val),
            Wspgl1Status::InvalidArgument
        );

        let mut out = [0.0; 3];
        assert_eq!(
            wspgl1_project_weighted_l1(v.as_ptr(), ptr::null(), 3, 2.0, out.as_mut_ptr()),
            Wspgl1Status::Ok
        );
        // Soft threshold at 1 keeps only the first entry.
        assert_eq!(out, [2.0, 0.0, 0.0]);
        let bad = [1.0, -1.0, 1.0];
        assert_eq!(
            wspgl1_project_weighted_l1(v.as_ptr(), bad.as_ptr(), 3, 2.0, out.as_mut_ptr()),
            Wspgl1Status::InvalidArgument
        );
    }
}

#[test]
fn errors_are_reported_not_raised() {
    let p = problem(20, 60, 2, 5);
    let mut res = ptr::null_mut();
    unsafe {
        assert_eq!(
            wspgl1_solve(
                ptr::null(),
                Wspgl1Algorithm::Spgl1,
                p.y.as_ptr(),
                p.y.len(),
                0.0,
                ptr::null(),
                0,
                ptr::null(),
                &mut res,
            ),
            Wspgl1Status::NullPointer
        );
        assert!(last_error().contains("op"));
        assert_eq!(
            wspgl1_solve(
                p.op,
                Wspgl1Algorithm::Spgl1,
                p.y.as_ptr(),
                p.y.len(),
                f64::NAN,
                ptr::null(),
                0,
                ptr::null(),
                &mut res,
            ),
            Wspgl1Status::InvalidArgument
        );
        let mut cfg = wspgl1_driver_config_default();
        assert_eq!(cfg.omega, 0.3);
        cfg.omega = 1.5;
        assert_eq!(
            wspgl1_solve(
                p.op,
                Wspgl1Algorithm::Wspgl1,
                p.y.as_ptr(),
                p.y.len(),
                0.0,
                ptr::null(),
                0,
                &cfg,
                &mut res,
            ),
            Wspgl1Status::InvalidArgument
        );
        assert!(last_error().contains("omega"));
        assert_eq!(
            wspgl1_solve(
                p.op,
                Wspgl1Algorithm::Spgl1,
                p.y.as_ptr(),
                5,
                0.0,
                ptr::null(),
                0,
                ptr::null(),
                &mut res,
            ),
            Wspgl1Status::Dimension
        );
        assert!(res.is_null());
        assert_eq!(
            wspgl1_sparse_signal(10, 0, 1, [0.0; 10].as_mut_ptr()),
            Wspgl1Status::Dimension
        );
    }
}

#[test]
fn header_compiles_as_c() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR"));
    let header = dir.join("include/wspgl1.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in ["wspgl1_solve", "wspgl1_last_error", "WSPGL1_STATUS_OK"] {
        assert!(text.contains(name), "{name} missing from header");
    }
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"wspgl1.h\"\nint main(void) { Wspgl1DriverConfig c = wspgl1_driver_config_default(); return c.omega > 0 ? 0 : 1; }\n",
    )
    .unwrap();
    let Ok(out) = Command::new("cc")
        .arg("-fsyntax-only")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(dir.join("include"))
        .arg(&src)
        .output()
    else {
        eprintln!("no C compiler; header syntax not checked");
        return;
    };
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}
