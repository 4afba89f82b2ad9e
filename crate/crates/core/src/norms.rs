//! Weighted ℓ1 norm, its dual, top-k support extraction and the Euclidean
//! projection onto the weighted ℓ1 ball.

use crate::error::{check_len, Error, Result};

/// Per-coordinate weights `w ∈ (0, 1]^N` defining `‖u‖₁,w = Σ wᵢ|uᵢ|`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(w: Vec<f64>) -> Result<Self> {
        if let Some((i, v)) = w
            .iter()
            .enumerate()
            .find(|(_, v)| !(**v > 0.0 && **v <= 1.0))
        {
            return Err(Error::InvalidArgument(format!(
                "weight {i} = {v} outside (0, 1]"
            )));
        }
        Ok(Self(w))
    }

    pub fn ones(len: usize) -> Self {
        Self(vec![1.0; len])
    }

    /// `ω` on `support`, 1 elsewhere.
    pub fn two_level(len: usize, support: &[usize], omega: f64) -> Result<Self> {
        let mut w = vec![1.0; len];
        for &i in support {
            if i >= len {
                return Err(Error::Dimension(format!(
                    "support index {i} out of range for length {len}"
                )));
            }
            w[i] = omega;
        }
        Self::new(w)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_uniform_one(&self) -> bool {
        self.0.iter().all(|&w| w == 1.0)
    }
}

/// Index set `Λ` of the `k` largest-magnitude entries, sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupportEstimate {
    indices: Vec<usize>,
}

impl SupportEstimate {
    pub fn new(mut indices: Vec<usize>, len: usize) -> Result<Self> {
        indices.sort_unstable();
        if indices.windows(2).any(|p| p[0] == p[1]) {
            return Err(Error::InvalidArgument(
                "support has duplicate indices".into(),
            ));
        }
        if indices.last().is_some_and(|&i| i >= len) {
            return Err(Error::Dimension(format!(
                "support index out of range for length {len}"
            )));
        }
        Ok(Self { indices })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }
}

/// `‖u‖₁,w`.
pub fn weighted_l1(u: &[f64], w: &WeightVector) -> Result<f64> {
    check_len("vector", u.len(), w.len())?;
    Ok(weighted_l1_unchecked(u, w.as_slice()))
}

pub(crate) fn weighted_l1_unchecked(u: &[f64], w: &[f64]) -> f64 {
    u.iter().zip(w).map(|(a, b)| b * a.abs()).sum()
}

/// Dual norm `‖v‖∞,w = maxᵢ |vᵢ| / wᵢ`.
pub fn weighted_linf_dual(v: &[f64], w: &WeightVector) -> Result<f64> {
    check_len("vector", v.len(), w.len())?;
    Ok(weighted_linf_unchecked(v, w.as_slice()))
}

pub(crate) fn weighted_linf_unchecked(v: &[f64], w: &[f64]) -> f64 {
    v.iter()
        .zip(w)
        .fold(0.0_f64, |m, (a, b)| m.max(a.abs() / b))
}

/// Indices of the `k` largest-magnitude entries of `u`; ties go to the lower
/// index.
pub fn top_k_support(u: &[f64], k: usize) -> Result<SupportEstimate> {
    if k > u.len() {
        return Err(Error::Dimension(format!(
            "k = {k} exceeds vector length {}",
            u.len()
        )));
    }
    let mut order: Vec<usize> = (0..u.len()).collect();
    // Stable sort keeps lower indices first among equal magnitudes.
    order.sort_by(|&a, &b| u[b].abs().total_cmp(&u[a].abs()));
    order.truncate(k);
    SupportEstimate::new(order, u.len())
}

/// Euclidean projection of `v` onto `{u : ‖u‖₁,w ≤ τ}`.
///
/// The minimizer is `uᵢ = sign(vᵢ)·max(|vᵢ| − θwᵢ, 0)` where `θ ≥ 0` solves
/// `Σ wᵢ max(|vᵢ| − θwᵢ, 0) = τ`. That map is piecewise linear in `θ` with
/// breakpoints `|vᵢ|/wᵢ`, so sorting the breakpoints locates `θ` exactly.
pub fn project_weighted_l1_ball(v: &[f64], w: &WeightVector, tau: f64) -> Result<Vec<f64>> {
    check_len("vector", v.len(), w.len())?;
    if !(tau >= 0.0) || !tau.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "ball radius must be finite and non-negative, got {tau}"
        )));
    }
    let mut out = v.to_vec();
    project_in_place(&mut out, w.as_slice(), tau);
    Ok(out)
}

pub(crate) fn project_in_place(v: &mut [f64], w: &[f64], tau: f64) {
    if tau == 0.0 {
        v.iter_mut().for_each(|a| *a = 0.0);
        return;
    }
    if weighted_l1_unchecked(v, w) <= tau {
        return;
    }

    // Treating every coordinate as active gives a lower bound on θ, and any
    // coordinate whose breakpoint is at or below a lower bound stays inactive.
    let (mass_all, wsq_all) = v
        .iter()
        .zip(w)
        .fold((0.0, 0.0), |(m, q), (a, b)| (m + b * a.abs(), q + b * b));
    let floor = ((mass_all - tau) / wsq_all).max(0.0);
    let mut order: Vec<(f64, usize)> = v
        .iter()
        .zip(w)
        .enumerate()
        .map(|(i, (a, b))| (a.abs() / b, i))
        .filter(|(bp, _)| *bp > floor)
        .collect();
    order.sort_unstable_by(|a, b| b.0.total_cmp(&a.0));

    let mut mass = 0.0; // Σ wᵢ|vᵢ| over the active set
    let mut wsq = 0.0; // Σ wᵢ² over the active set
    let mut theta = floor;
    for (j, &(_, i)) in order.iter().enumerate() {
        mass += w[i] * v[i].abs();
        wsq += w[i] * w[i];
        theta = (mass - tau) / wsq;
        let next = order.get(j + 1).map_or(floor, |p| p.0);
        if theta >= next {
            break;
        }
    }
    let theta = theta.max(0.0);
    for (a, b) in v.iter_mut().zip(w) {
        let shrunk = (a.abs() - theta * b).max(0.0);
        *a = shrunk.copysign(*a);
    }

    // Rounding can leave the result a few ulps outside the ball.
    for _ in 0..4 {
        let norm = weighted_l1_unchecked(v, w);
        if norm <= tau {
            break;
        }
        let scale = (tau / norm) * (1.0 - f64::EPSILON);
        v.iter_mut().for_each(|a| *a *= scale);
    }
}
