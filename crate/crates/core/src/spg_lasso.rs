//! Spectral projected gradient for the weighted LASSO subproblem
//!
//! ```text
//! minimize ‖Au − y‖₂  subject to  ‖u‖₁,w ≤ τ
//! ```
//!
//! Internally the smooth objective is `½‖Au − y‖₂²` with gradient `−Aᵀr`.
//! Steps use the Barzilai–Borwein length `sᵀs / sᵀy`, safeguarded to
//! `[step_min, step_max]`, and a Grippo–Lampariello–Lucidi nonmonotone
//! backtracking search along the feasible direction `P(x − αg) − x`.
//! Iterates stay feasible because every trial point is a convex combination of
//! two points in the ball.

use crate::error::{check_finite, check_len, Error, Result};
use crate::linop::MeasurementOperator;
use crate::norms::{project_in_place, weighted_linf_unchecked, WeightVector};
use crate::vecops::{dot, norm2, norm_inf};

/// Growth factor and retry limit for the spectral step when the projected
/// direction shows no descent.
const STEP_GROWTH: f64 = 100.0;
const MAX_STEP_RETRIES: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct SpgConfig {
    pub max_iterations: usize,
    /// Relative duality-gap tolerance: stop when `gap / max(1, ‖r‖₂) ≤ tol`.
    pub optimality_tol: f64,
    pub step_min: f64,
    pub step_max: f64,
    /// Nonmonotone memory `M`.
    pub nonmonotone_memory: usize,
    /// Sufficient-decrease parameter `γ`.
    pub sufficient_decrease: f64,
    /// Backtracking steps allowed per iteration before giving up.
    pub max_line_search: usize,
}

impl Default for SpgConfig {
    fn default() -> Self {
        Self {
            max_iterations: 10_000,
            optimality_tol: 1e-6,
            step_min: 1e-16,
            step_max: 1e16,
            nonmonotone_memory: 3,
            sufficient_decrease: 1e-4,
            max_line_search: 50,
        }
    }
}

impl SpgConfig {
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if self.max_iterations == 0 {
            bad.push("max_iterations must be positive");
        }
        if !(self.optimality_tol > 0.0) {
            bad.push("optimality_tol must be positive");
        }
        if !(self.step_min > 0.0 && self.step_min < self.step_max) {
            bad.push("need 0 < step_min < step_max");
        }
        if self.nonmonotone_memory == 0 {
            bad.push("nonmonotone_memory must be positive");
        }
        if !(self.sufficient_decrease > 0.0 && self.sufficient_decrease < 1.0) {
            bad.push("sufficient_decrease must lie in (0, 1)");
        }
        if self.max_line_search == 0 {
            bad.push("max_line_search must be positive");
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(bad.join("; ")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpgStatus {
    /// Duality-gap test satisfied (or exact fit `r = 0`).
    Optimal,
    /// The caller's acceptance test stopped the solve early.
    Accepted,
    MaxIterations,
    /// Backtracking could not find sufficient decrease; the iterate is as
    /// good as floating point allows.
    LineSearchStalled,
}

#[derive(Debug, Clone)]
pub struct LassoSolution {
    pub x: Vec<f64>,
    /// `r = y − Ax`, recomputed from `x` on exit.
    pub residual: Vec<f64>,
    pub residual_norm: f64,
    /// `Aᵀr`, kept so callers can evaluate dual norms under other weights.
    pub correlation: Vec<f64>,
    /// `λ_w = ‖Aᵀr‖∞,w / ‖r‖₂`, zero when `r = 0`.
    pub dual_lambda: f64,
    pub duality_gap: f64,
    pub iterations: usize,
    pub products: u64,
    pub status: SpgStatus,
}

impl LassoSolution {
    pub fn converged(&self) -> bool {
        self.status == SpgStatus::Optimal
    }
}

/// Duality gap of the LASSO in the `‖r‖₂` scaling:
/// `‖r‖₂ − (⟨y, r⟩ − τ‖Aᵀr‖∞,w) / ‖r‖₂`, defined as 0 when `r = 0`.
///
/// `correlation` is `Aᵀr`. Non-negative (up to rounding) whenever `r` is the
/// residual of a feasible point.
pub fn duality_gap(
    correlation: &[f64],
    residual: &[f64],
    y: &[f64],
    w: &WeightVector,
    tau: f64,
) -> Result<f64> {
    check_len("correlation", correlation.len(), w.len())?;
    check_len("residual", residual.len(), y.len())?;
    let r_norm = norm2(residual);
    Ok(gap_unchecked(
        r_norm,
        dot(y, residual),
        weighted_linf_unchecked(correlation, w.as_slice()),
        tau,
    ))
}

fn gap_unchecked(r_norm: f64, y_dot_r: f64, dual_norm: f64, tau: f64) -> f64 {
    if r_norm == 0.0 {
        0.0
    } else {
        r_norm - (y_dot_r - tau * dual_norm) / r_norm
    }
}

/// Solves `min ‖Au − y‖₂ s.t. ‖u‖₁,w ≤ τ`, warm-started from the projection
/// of `x0` onto the ball.
pub fn solve_lasso(
    op: &MeasurementOperator,
    y: &[f64],
    w: &WeightVector,
    tau: f64,
    x0: &[f64],
    cfg: &SpgConfig,
) -> Result<LassoSolution> {
    solve_lasso_until(op, y, w, tau, x0, cfg, |_, _| false)
}

/// [`solve_lasso`] that also stops as soon as `accept(‖r‖₂, relative_gap)`
/// holds for an iterate, where `relative_gap = gap / max(1, ‖r‖₂)`. The
/// status is then [`SpgStatus::Accepted`].
pub fn solve_lasso_until(
    op: &MeasurementOperator,
    y: &[f64],
    w: &WeightVector,
    tau: f64,
    x0: &[f64],
    cfg: &SpgConfig,
    accept: impl Fn(f64, f64) -> bool,
) -> Result<LassoSolution> {
    let (n, big_n) = (op.rows(), op.cols());
    check_len("measurements", y.len(), n)?;
    check_len("weights", w.len(), big_n)?;
    check_len("initial point", x0.len(), big_n)?;
    check_finite("measurements", y)?;
    check_finite("initial point", x0)?;
    if !(tau.is_finite() && tau >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "tau must be finite and non-negative, got {tau}"
        )));
    }
    cfg.validate()?;

    let weights = w.as_slice();
    let start_products = op.products();

    let mut x = x0.to_vec();
    project_in_place(&mut x, weights, tau);
    let mut r = vec![0.0; n];
    op.apply_into(&x, &mut r)?;
    r.iter_mut().zip(y).for_each(|(ri, yi)| *ri = yi - *ri);
    // corr = Aᵀr = −∇f
    let mut corr = vec![0.0; big_n];
    op.apply_adjoint_into(&r, &mut corr)?;
    let mut f = 0.5 * dot(&r, &r);

    let mut history = vec![f; cfg.nonmonotone_memory];
    let mut status = SpgStatus::MaxIterations;
    let mut iterations = 0;

    // Initial step from the scale of the first projected-gradient move.
    let mut trial: Vec<f64> = x.iter().zip(&corr).map(|(a, c)| a + c).collect();
    project_in_place(&mut trial, weights, tau);
    let dx_norm = trial
        .iter()
        .zip(&x)
        .fold(0.0_f64, |m, (t, a)| m.max((t - a).abs()));
    let mut step = if dx_norm < 1.0 / cfg.step_max {
        cfg.step_max
    } else {
        (1.0 / dx_norm).clamp(cfg.step_min, cfg.step_max)
    };

    let mut dir = vec![0.0; big_n];
    let mut a_dir = vec![0.0; n];
    let mut r_trial = vec![0.0; n];
    let mut corr_new = vec![0.0; big_n];
    let mut retries = 0;
    // Retries use up iterations without moving, so the window is indexed by
    // accepted steps.
    let mut accepted_steps = 0;

    loop {
        let r_norm = norm2(&r);
        if r_norm == 0.0 {
            status = SpgStatus::Optimal;
            break;
        }
        let gap = gap_unchecked(
            r_norm,
            dot(y, &r),
            weighted_linf_unchecked(&corr, weights),
            tau,
        );
        let relative_gap = gap / r_norm.max(1.0);
        if relative_gap <= cfg.optimality_tol {
            status = SpgStatus::Optimal;
            break;
        }
        if accept(r_norm, relative_gap) {
            status = SpgStatus::Accepted;
            break;
        }
        if iterations >= cfg.max_iterations {
            break;
        }
        iterations += 1;

        // d = P(x + step·Aᵀr) − x
        for ((d, a), c) in dir.iter_mut().zip(&x).zip(&corr) {
            *d = a + step * c;
        }
        project_in_place(&mut dir, weights, tau);
        dir.iter_mut().zip(&x).for_each(|(d, a)| *d -= a);
        // ⟨∇f, d⟩
        let gtd = -dot(&corr, &dir);
        if !(gtd < 0.0) || norm_inf(&dir) == 0.0 {
            // A short step only resolves differences in the gradient that
            // are lost in rounding; a longer one may expose real descent.
            if step < cfg.step_max && retries < MAX_STEP_RETRIES {
                retries += 1;
                step = (step * STEP_GROWTH).min(cfg.step_max);
                continue;
            }
            status = SpgStatus::LineSearchStalled;
            break;
        }

        op.apply_into(&dir, &mut a_dir)?;
        let f_max = history.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut alpha = 1.0;
        let mut accepted = false;
        let mut f_new = f;
        for _ in 0..cfg.max_line_search {
            for ((rt, ri), ad) in r_trial.iter_mut().zip(&r).zip(&a_dir) {
                *rt = ri - alpha * ad;
            }
            f_new = 0.5 * dot(&r_trial, &r_trial);
            if f_new <= f_max + cfg.sufficient_decrease * alpha * gtd {
                accepted = true;
                break;
            }
            // Safeguarded quadratic interpolation.
            let denom = 2.0 * (f_new - f - alpha * gtd);
            let candidate = -gtd * alpha * alpha / denom;
            alpha = if denom > 0.0 && candidate >= 0.1 * alpha && candidate <= 0.9 * alpha {
                candidate
            } else {
                0.5 * alpha
            };
        }
        if !accepted {
            status = SpgStatus::LineSearchStalled;
            break;
        }
        retries = 0;

        op.apply_adjoint_into(&r_trial, &mut corr_new)?;
        // For this quadratic, s = αd and the gradient change is αAᵀAd, so
        // the BB ratio sᵀs / sᵀy is ‖d‖² / ‖Ad‖², free of cancellation.
        let ad_sq = dot(&a_dir, &a_dir);
        step = if ad_sq <= 0.0 {
            cfg.step_max
        } else {
            (dot(&dir, &dir) / ad_sq).clamp(cfg.step_min, cfg.step_max)
        };

        x.iter_mut().zip(&dir).for_each(|(a, d)| *a += alpha * d);
        std::mem::swap(&mut r, &mut r_trial);
        std::mem::swap(&mut corr, &mut corr_new);
        f = f_new;
        history[accepted_steps % cfg.nonmonotone_memory] = f;
        accepted_steps += 1;
    }

    if iterations > 0 {
        // Recompute the residual so it does not carry the updates' drift.
        op.apply_into(&x, &mut r)?;
        r.iter_mut().zip(y).for_each(|(ri, yi)| *ri = yi - *ri);
        op.apply_adjoint_into(&r, &mut corr)?;
    }
    let residual_norm = norm2(&r);
    let dual = weighted_linf_unchecked(&corr, weights);
    let dual_lambda = if residual_norm > 0.0 {
        dual / residual_norm
    } else {
        0.0
    };
    let duality_gap = gap_unchecked(residual_norm, dot(y, &r), dual, tau);

    Ok(LassoSolution {
        x,
        residual: r,
        residual_norm,
        correlation: corr,
        dual_lambda,
        duality_gap,
        iterations,
        products: op.products() - start_products,
        status,
    })
}
