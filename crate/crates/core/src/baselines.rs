//! Iteratively reweighted ℓ1 minimization.
//!
//! Pass 0 solves plain BPDN. Pass `t ≥ 1` solves weighted BPDN from scratch
//! with `wᵢ ∝ 1/(|xᵢ| + δ)` computed from the previous pass, rescaled so that
//! `max wᵢ = 1`. A common scale factor on `w` only rescales `τ`, so the
//! weighted BPDN minimizer is unchanged by the normalization.

use crate::drivers::{solve_weighted_bpdn, DriverConfig, RecoveryResult};
use crate::error::{Error, Result};
use crate::linop::{Measurement, MeasurementOperator};
use crate::norms::WeightVector;

#[derive(Debug, Clone, PartialEq)]
pub struct IrwConfig {
    pub outer_iters: usize,
    /// Stabilizer `δ` in `1/(|xᵢ| + δ)`.
    pub delta: f64,
    pub driver: DriverConfig,
}

impl Default for IrwConfig {
    fn default() -> Self {
        Self {
            outer_iters: 4,
            delta: 0.1,
            driver: DriverConfig::default(),
        }
    }
}

/// `1/(|xᵢ| + δ)` normalized to a maximum of 1.
pub fn reweight(x: &[f64], delta: f64) -> Result<WeightVector> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "delta must be positive, got {delta}"
        )));
    }
    let min_mag = x.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    let num = min_mag + delta;
    let w = x
        .iter()
        .map(|v| (num / (v.abs() + delta)).min(1.0))
        .collect();
    WeightVector::new(w)
}

pub fn solve_irwl1(
    op: &MeasurementOperator,
    meas: &Measurement,
    cfg: &IrwConfig,
) -> Result<RecoveryResult> {
    if cfg.outer_iters == 0 {
        return Err(Error::InvalidArgument(
            "outer_iters must be positive".into(),
        ));
    }
    let mut weights = WeightVector::ones(op.cols());
    let mut result = solve_weighted_bpdn(op, meas, weights, &cfg.driver)?;
    let mut total_products = result.total_products;
    let mut newton_iters = result.newton_iters;
    for _ in 1..cfg.outer_iters {
        weights = reweight(&result.x_hat, cfg.delta)?;
        result = solve_weighted_bpdn(op, meas, weights, &cfg.driver)?;
        total_products += result.total_products;
        newton_iters += result.newton_iters;
    }
    result.total_products = total_products;
    result.newton_iters = newton_iters;
    Ok(result)
}
