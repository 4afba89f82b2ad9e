//! Newton root finding on the (weighted) Pareto curve.
//!
//! Every driver tracks `φ(τ) = ‖r_τ‖₂`, the optimal residual of the LASSO
//! subproblem at radius `τ`, and moves `τ` with the Newton update
//!
//! ```text
//! τ ← τ + (φ(τ) − ε) / λ_w,    λ_w = ‖Aᵀr‖∞,w / ‖r‖₂ = −φ′(τ)
//! ```
//!
//! until `φ(τ) = ε`. The drivers differ only in how the weights evolve:
//!
//! * [`solve_spgl1`]: all-ones weights, i.e. plain basis pursuit denoise.
//! * [`solve_wspgl1`]: all-ones for the first subproblem, then `ω` on the
//!   `k_est` largest entries of the current iterate and 1 elsewhere,
//!   re-estimated every iteration. Whenever the weights change, `τ` is
//!   re-based to `‖x‖₁,w` so the iterate sits on the new curve.
//! * [`solve_oracle_weighted`]: `ω` on a known support for the whole run.

use crate::error::{check_len, Error, Result};
use crate::linop::{Measurement, MeasurementOperator};
use crate::norms::{top_k_support, weighted_l1, weighted_linf_dual, SupportEstimate, WeightVector};
use crate::spg_lasso::{solve_lasso, solve_lasso_until, SpgConfig};
use crate::vecops::{dot, norm2};

/// A subproblem may stop once its duality gap is below this fraction of the
/// remaining residual excess `‖r‖₂ − ε`; the certified step then covers at
/// least the complementary fraction of the exact Newton step.
const INEXACT_GAP_FRACTION: f64 = 0.1;

/// Default support-estimate size `round(n / (2 ln(N/n)))`, clamped to
/// `[1, n − 1]`.
pub fn default_support_size(rows: usize, cols: usize) -> usize {
    let raw = rows as f64 / (2.0 * (cols as f64 / rows as f64).ln());
    let upper = rows.saturating_sub(1).max(1);
    if raw.is_finite() {
        (raw.round() as usize).clamp(1, upper)
    } else {
        upper
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriverConfig {
    /// Weight applied to the support estimate.
    pub omega: f64,
    /// Support-estimate size `k_est`; `None` uses [`default_support_size`].
    pub support_size: Option<usize>,
    pub max_newton_iters: usize,
    /// Root test: `|‖r‖₂ − ε| ≤ root_tol · max(1, ‖y‖₂)`.
    pub root_tol: f64,
    /// Cap on SPG iterations summed over all subproblems of one run; `None`
    /// leaves only the per-subproblem limit.
    pub iteration_budget: Option<usize>,
    pub spg: SpgConfig,
}

impl Default for DriverConfig {
    fn default() -> Self {
        Self {
            omega: 0.3,
            support_size: None,
            max_newton_iters: 40,
            root_tol: 1e-6,
            iteration_budget: Some(10_000),
            spg: SpgConfig::default(),
        }
    }
}

impl DriverConfig {
    pub fn support_size_for(&self, rows: usize, cols: usize) -> usize {
        self.support_size
            .unwrap_or_else(|| default_support_size(rows, cols))
    }

    pub fn validate(&self, rows: usize, cols: usize) -> Result<()> {
        if !(self.omega > 0.0 && self.omega <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "omega must lie in (0, 1], got {}",
                self.omega
            )));
        }
        let k = self.support_size_for(rows, cols);
        if k == 0 || (k >= rows && rows > 1) {
            return Err(Error::InvalidArgument(format!(
                "support size {k} must satisfy 0 < k < n = {rows}"
            )));
        }
        if self.max_newton_iters == 0 {
            return Err(Error::InvalidArgument(
                "max_newton_iters must be positive".into(),
            ));
        }
        if !(self.root_tol > 0.0) {
            return Err(Error::InvalidArgument("root_tol must be positive".into()));
        }
        if self.iteration_budget == Some(0) {
            return Err(Error::InvalidArgument(
                "iteration_budget must be positive".into(),
            ));
        }
        self.spg.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub tau: f64,
    pub residual_norm: f64,
    pub lambda: f64,
    /// Whether the weights in force were anything other than all-ones.
    pub weighted: bool,
    /// Counts weight changes; consecutive points with equal `segment` lie on
    /// the same Pareto curve.
    pub segment: usize,
}

/// A switch of Pareto curve: `τ` was replaced by `‖x‖₁,w` under new weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rebase {
    /// Newton iteration at which the new weights took effect.
    pub iteration: usize,
    pub old_tau: f64,
    pub new_tau: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParetoTrace {
    pub points: Vec<TracePoint>,
    pub rebases: Vec<Rebase>,
}

#[derive(Debug, Clone)]
pub struct RecoveryResult {
    pub x_hat: Vec<f64>,
    /// The `k_est` largest-magnitude entries of `x_hat`.
    pub final_support: SupportEstimate,
    /// Weights of the last subproblem solved.
    pub final_weights: WeightVector,
    pub newton_iters: usize,
    pub total_products: u64,
    pub trace: ParetoTrace,
    pub converged: bool,
}

#[derive(Debug, Clone)]
enum WeightSchedule {
    Uniform,
    Fixed(WeightVector),
    SupportDriven {
        omega: f64,
        last: Option<SupportEstimate>,
    },
}

impl WeightSchedule {
    fn initial(&self, len: usize) -> WeightVector {
        match self {
            Self::Fixed(w) => w.clone(),
            _ => WeightVector::ones(len),
        }
    }

    /// New weights for Newton iteration `t`, or `None` if unchanged.
    fn update(&mut self, t: usize, x: &[f64], k: usize) -> Result<Option<WeightVector>> {
        match self {
            Self::Uniform | Self::Fixed(_) => Ok(None),
            // The first subproblem starts from x = 0, whose top-k set is
            // arbitrary, so it runs unweighted.
            Self::SupportDriven { .. } if t == 1 => Ok(None),
            Self::SupportDriven { omega, last } => {
                let support = top_k_support(x, k)?;
                if last.as_ref() == Some(&support) {
                    return Ok(None);
                }
                let w = WeightVector::two_level(x.len(), support.indices(), *omega)?;
                *last = Some(support);
                Ok(Some(w))
            }
        }
    }
}

/// Safeguard for the Newton iteration on a single Pareto curve.
#[derive(Debug, Default)]
struct Bracket {
    /// Largest τ seen with φ(τ) > ε.
    below: Option<f64>,
    /// Smallest τ seen with φ(τ) ≤ ε.
    above: Option<f64>,
    suspect: bool,
}

impl Bracket {
    fn observe(&mut self, tau: f64, phi: f64, eps: f64, suspect: bool) {
        if phi > eps {
            self.below = Some(self.below.map_or(tau, |b| b.max(tau)));
        } else {
            self.above = Some(self.above.map_or(tau, |a| a.min(tau)));
        }
        self.suspect = suspect;
    }

    /// Replaces a non-progressing or out-of-bracket Newton proposal by the
    /// bracket midpoint when both ends are known.
    fn safeguard(&self, tau: f64, phi_above_target: bool, proposal: f64) -> f64 {
        let progress = if phi_above_target {
            proposal > tau
        } else {
            proposal < tau
        };
        let inside =
            self.below.is_none_or(|b| proposal > b) && self.above.is_none_or(|a| proposal < a);
        if progress && inside && !self.suspect {
            return proposal;
        }
        match (self.below, self.above) {
            (Some(b), Some(a)) if b < a => 0.5 * (a + b),
            _ => proposal,
        }
    }
}

fn newton_driver(
    op: &MeasurementOperator,
    meas: &Measurement,
    cfg: &DriverConfig,
    mut schedule: WeightSchedule,
) -> Result<RecoveryResult> {
    let (rows, cols) = (op.rows(), op.cols());
    check_len("measurements", meas.y.len(), rows)?;
    cfg.validate(rows, cols)?;
    let k_est = cfg.support_size_for(rows, cols);
    let start_products = op.products();

    let y = &meas.y;
    let eps = meas.epsilon;
    let y_norm = norm2(y);
    let tol = cfg.root_tol * y_norm.max(1.0);

    let mut weights = schedule.initial(cols);
    let mut x = vec![0.0; cols];
    let mut trace = ParetoTrace::default();

    if y_norm <= eps {
        trace.points.push(TracePoint {
            tau: 0.0,
            residual_norm: y_norm,
            lambda: 0.0,
            weighted: !weights.is_uniform_one(),
            segment: 0,
        });
        return Ok(RecoveryResult {
            final_support: top_k_support(&x, k_est)?,
            x_hat: x,
            final_weights: weights,
            newton_iters: 0,
            total_products: op.products() - start_products,
            trace,
            converged: true,
        });
    }

    let mut r_norm = y_norm;
    let mut y_dot_r = dot(y, y);
    let mut corr = op.apply_adjoint(y)?;
    let mut lambda = weighted_linf_dual(&corr, &weights)? / r_norm;
    let mut tau = 0.0;
    let mut segment = 0;
    trace.points.push(TracePoint {
        tau,
        residual_norm: r_norm,
        lambda,
        weighted: !weights.is_uniform_one(),
        segment,
    });

    let mut bracket = Bracket::default();
    bracket.observe(tau, r_norm, eps, false);
    let mut newton_iters = 0;
    let mut converged = false;
    let mut spg = cfg.spg.clone();
    let mut budget = cfg.iteration_budget.unwrap_or(usize::MAX);

    // Take the plain Newton step: x = 0 solves τ = 0 exactly, and right after
    // a re-base the gap of the previous curve says nothing about the new one.
    let mut exact = true;
    for t in 1..=cfg.max_newton_iters {
        if let Some(w) = schedule.update(t, &x, k_est)? {
            exact = true;
            weights = w;
            segment += 1;
            let new_tau = weighted_l1(&x, &weights)?;
            trace.rebases.push(Rebase {
                iteration: t,
                old_tau: tau,
                new_tau,
            });
            tau = new_tau;
            lambda = weighted_linf_dual(&corr, &weights)? / r_norm;
            bracket = Bracket::default();
        }
        if !(lambda > 0.0 && lambda.is_finite()) || budget == 0 {
            break;
        }

        // Newton step on the certified lower bound `‖r‖₂ − gap` of φ(τ). The
        // dual point r/‖r‖₂ makes φ ≥ (⟨y,r⟩ − τ‖Aᵀr‖∞,w)/‖r‖₂ everywhere, a
        // line of slope −λ_w, so the step cannot pass the root. At an exact
        // subproblem solution the gap is zero and this is the plain update.
        let gap = if exact {
            0.0
        } else {
            (r_norm - (y_dot_r - tau * lambda * r_norm) / r_norm).max(0.0)
        };
        // A stalled solve can leave a gap above the excess, which would send
        // τ backwards although φ(τ) > ε; the plain step is used then.
        let certified = r_norm - gap - eps;
        let excess = if certified > 0.0 || r_norm <= eps {
            certified
        } else {
            r_norm - eps
        };
        let proposal = tau + excess / lambda;
        let next_tau = bracket.safeguard(tau, r_norm > eps, proposal).max(0.0);
        if (next_tau - tau).abs() <= 4.0 * f64::EPSILON * tau.abs() {
            break;
        }

        // τ stays at or below the root, so any feasible iterate that meets
        // the root test is accepted; otherwise the subproblem only needs a
        // gap small against the remaining excess.
        spg.max_iterations = cfg.spg.max_iterations.min(budget);
        let sol = solve_lasso_until(op, y, &weights, next_tau, &x, &spg, |rn, rel_gap| {
            let root_err = rn - eps;
            root_err.abs() <= tol
                || (root_err > 0.0 && rel_gap * rn.max(1.0) <= INEXACT_GAP_FRACTION * root_err)
        })?;
        newton_iters = t;
        exact = false;
        budget = budget.saturating_sub(sol.iterations.max(1));
        // φ must not increase with τ on a fixed curve; if it did, the
        // subproblem was not solved accurately enough to trust Newton.
        let suspect = next_tau > tau && sol.residual_norm > r_norm;

        tau = next_tau;
        x = sol.x;
        r_norm = sol.residual_norm;
        y_dot_r = dot(y, &sol.residual);
        corr = sol.correlation;
        lambda = sol.dual_lambda;
        trace.points.push(TracePoint {
            tau,
            residual_norm: r_norm,
            lambda,
            weighted: !weights.is_uniform_one(),
            segment,
        });
        bracket.observe(tau, r_norm, eps, suspect);

        if r_norm == 0.0 || (r_norm - eps).abs() <= tol {
            converged = true;
            break;
        }
    }

    Ok(RecoveryResult {
        final_support: top_k_support(&x, k_est)?,
        x_hat: x,
        final_weights: weights,
        newton_iters,
        total_products: op.products() - start_products,
        trace,
        converged,
    })
}

/// Basis pursuit denoise: `min ‖u‖₁ s.t. ‖Au − y‖₂ ≤ ε`.
pub fn solve_spgl1(
    op: &MeasurementOperator,
    meas: &Measurement,
    cfg: &DriverConfig,
) -> Result<RecoveryResult> {
    newton_driver(op, meas, cfg, WeightSchedule::Uniform)
}

/// WSPGL1: weighted LASSO subproblems with a support estimate refreshed from
/// every iterate.
pub fn solve_wspgl1(
    op: &MeasurementOperator,
    meas: &Measurement,
    cfg: &DriverConfig,
) -> Result<RecoveryResult> {
    newton_driver(
        op,
        meas,
        cfg,
        WeightSchedule::SupportDriven {
            omega: cfg.omega,
            last: None,
        },
    )
}

/// Weighted BPDN with `ω` on a known support and 1 elsewhere.
pub fn solve_oracle_weighted(
    op: &MeasurementOperator,
    meas: &Measurement,
    true_support: &[usize],
    cfg: &DriverConfig,
) -> Result<RecoveryResult> {
    let w = WeightVector::two_level(op.cols(), true_support, cfg.omega)?;
    solve_weighted_bpdn(op, meas, w, cfg)
}

/// Weighted BPDN `min ‖u‖₁,w s.t. ‖Au − y‖₂ ≤ ε` with fixed weights.
pub fn solve_weighted_bpdn(
    op: &MeasurementOperator,
    meas: &Measurement,
    weights: WeightVector,
    cfg: &DriverConfig,
) -> Result<RecoveryResult> {
    check_len("weights", weights.len(), op.cols())?;
    newton_driver(op, meas, cfg, WeightSchedule::Fixed(weights))
}

/// Samples the Pareto curve `φ(τ)` of `(LS_τ,w)` on an increasing grid,
/// warm-starting each solve from the previous one.
pub fn pareto_phi(
    op: &MeasurementOperator,
    y: &[f64],
    w: &WeightVector,
    tau_grid: &[f64],
    cfg: &SpgConfig,
) -> Result<ParetoTrace> {
    if tau_grid.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(Error::InvalidArgument(
            "tau grid must be finite and non-negative".into(),
        ));
    }
    if tau_grid.windows(2).any(|p| p[1] <= p[0]) {
        return Err(Error::InvalidArgument("tau grid must be increasing".into()));
    }
    let mut x = vec![0.0; op.cols()];
    let mut trace = ParetoTrace::default();
    for &tau in tau_grid {
        let sol = solve_lasso(op, y, w, tau, &x, cfg)?;
        trace.points.push(TracePoint {
            tau,
            residual_norm: sol.residual_norm,
            lambda: sol.dual_lambda,
            weighted: !w.is_uniform_one(),
            segment: 0,
        });
        x = sol.x;
    }
    Ok(trace)
}
