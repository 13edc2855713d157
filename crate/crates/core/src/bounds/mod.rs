//! Closed-form error bounds for almost-iid states and certifiers that check
//! them against explicitly constructed states.
//!
//! Every evaluator works in bits and is total on its stated domain.

mod certify;
mod family;

pub use certify::{
    aep_record, block_cmi_certify, entropy_gap_certify, eta, marginal_certify,
    renyi_defect_certify, renyi_defect_value, statistics_certify, xi_n, AepRecord, EntropyGapRow,
    RenyiDefectReport, XiReport, CERT_TOL,
};
pub use family::{DiagonalDefectFamily, DiagonalFrame};

use crate::error::{Error, Result};
use crate::linalg::least_squares;
use serde::Serialize;

/// Unchecked binary entropy; arguments outside `(0, 1)` give 0.
pub(crate) fn h2(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        0.0
    } else {
        -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
    }
}

/// `h(x) = −x log x − (1−x) log(1−x)` with `0 log 0 = 0`.
pub fn binary_entropy(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::invalid(format!(
            "binary entropy argument {x} outside [0, 1]"
        )));
    }
    Ok(h2(x))
}

/// Parameters shared by the bound evaluators.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundParams {
    pub n: usize,
    pub k: usize,
    pub r: usize,
    pub s: usize,
    pub m: usize,
    pub d: usize,
    pub d_a: usize,
    pub d_b: usize,
    pub d_ae: usize,
    pub d_ab: usize,
    pub d_abe: usize,
    pub alpha: Option<f64>,
    pub eps: f64,
    pub eps_prime: f64,
}

impl Default for BoundParams {
    fn default() -> Self {
        BoundParams {
            n: 16,
            k: 8,
            r: 1,
            s: 1,
            m: 0,
            d: 2,
            d_a: 2,
            d_b: 2,
            d_ae: 4,
            d_ab: 4,
            d_abe: 16,
            alpha: None,
            eps: 0.1,
            eps_prime: 0.1,
        }
    }
}

impl BoundParams {
    pub fn validate(&self) -> Result<()> {
        if self.r > self.n || self.s > self.n {
            return Err(Error::invalid(format!(
                "need r, s ≤ n (n={}, r={}, s={})",
                self.n, self.r, self.s
            )));
        }
        let dims = [self.d, self.d_a, self.d_b, self.d_ae, self.d_ab, self.d_abe];
        if dims.contains(&0) {
            return Err(Error::invalid("dimensions must be positive"));
        }
        for (name, e) in [("eps", self.eps), ("eps_prime", self.eps_prime)] {
            if !(e > 0.0 && e < 1.0) {
                return Err(Error::invalid(format!("{name} = {e} outside (0, 1)")));
            }
        }
        Ok(())
    }
}

fn log2(d: usize) -> f64 {
    (d as f64).log2()
}

/// `2dn/(n+k)`: trace-distance error of the classical finite de Finetti theorem.
pub fn classical_definetti_error(n: usize, k: usize, d: usize) -> Result<f64> {
    if n + k == 0 {
        return Err(Error::invalid("need n + k ≥ 1"));
    }
    Ok(2.0 * d as f64 * n as f64 / (n + k) as f64)
}

/// `2d²n/(n+k)`: trace-norm error of the quantum finite de Finetti theorem.
pub fn quantum_definetti_error(n: usize, k: usize, d: usize) -> Result<f64> {
    if n + k == 0 {
        return Err(Error::invalid("need n + k ≥ 1"));
    }
    let d = d as f64;
    Ok(2.0 * d * d * n as f64 / (n + k) as f64)
}

/// `3k^d exp(−k(r+1)/(n+k))`: error of the exponential de Finetti theorem
/// with defects of size `r`.
pub fn exp_definetti_error(n: usize, k: usize, r: usize, d: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::invalid("need k ≥ 1"));
    }
    let (n, k, r) = (n as f64, k as f64, r as f64);
    Ok(3.0 * k.powi(d as i32) * (-k * (r + 1.0) / (n + k)).exp())
}

/// Decay of the exponential de Finetti error along `k = n^{3/4}`, `r = √n`.
#[derive(Clone, Debug, Serialize)]
pub struct ScalingFit {
    /// `(n, k, r, ln ε')` per grid point.
    pub points: Vec<(usize, usize, usize, f64)>,
    /// Coefficient of `n^{1/4}` in the fit `ln ε' ≈ a n^{1/4} + b ln n + c`.
    pub rate: f64,
    /// Coefficient of `ln n` (the polynomial prefactor `k^d`).
    pub log_coefficient: f64,
}

/// Fits `ln ε'` on `n^{1/4}`, `ln n` and a constant. The decay rate `a`
/// tends to −1; the `ln n` coefficient absorbs the `k^d` prefactor.
pub fn exp_definetti_scaling(d: usize, ns: &[usize]) -> Result<ScalingFit> {
    if ns.len() < 4 {
        return Err(Error::invalid("scaling fit needs at least 4 grid points"));
    }
    let mut points = Vec::with_capacity(ns.len());
    let mut rows = Vec::with_capacity(ns.len());
    let mut y = Vec::with_capacity(ns.len());
    for &n in ns {
        let nf = n as f64;
        let k = nf.powf(0.75).round().max(1.0) as usize;
        let r = nf.sqrt().round() as usize;
        let v = exp_definetti_error(n, k, r, d)?.ln();
        points.push((n, k, r, v));
        rows.push(vec![nf.powf(0.25), nf.ln(), 1.0]);
        y.push(v);
    }
    let coef = least_squares(&rows, &y)?;
    Ok(ScalingFit {
        points,
        rate: coef[0],
        log_coefficient: coef[1],
    })
}

/// `4√(rs/n)`: trace-norm distance of an `s`-site marginal from `σ^{⊗s}`.
pub fn marginal_bound(n: usize, r: usize, s: usize) -> Result<f64> {
    if n == 0 || r > n || s > n {
        return Err(Error::invalid(format!(
            "need n ≥ 1 and r, s ≤ n (n={n}, r={r}, s={s})"
        )));
    }
    Ok(4.0 * ((r * s) as f64 / n as f64).sqrt())
}

/// Threshold `f` on `‖λ_x − P_X‖₁` exceeded with probability at most `ε`
/// when measuring an almost-iid state site by site:
/// `2√(log(1/ε)/n + (|X|/n) log(n/2+1) + h(r/n) + (2r/n) log d) + 2r/n`.
pub fn statistics_threshold(
    eps: f64,
    r: usize,
    n: usize,
    alphabet_size: usize,
    d: usize,
) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) || n == 0 || 2 * r > n || alphabet_size == 0 || d == 0 {
        return Err(Error::invalid(format!(
            "need ε ∈ (0,1), n ≥ 1, r ≤ n/2, |X|, d ≥ 1 (ε={eps}, n={n}, r={r})"
        )));
    }
    let nf = n as f64;
    let x = r as f64 / nf;
    let inner = -eps.log2() / nf
        + alphabet_size as f64 / nf * (nf / 2.0 + 1.0).log2()
        + h2(x)
        + 2.0 * x * log2(d);
    Ok(2.0 * inner.sqrt() + 2.0 * x)
}

fn check_nr(n: usize, r: usize) -> Result<f64> {
    if n == 0 || r > n {
        return Err(Error::invalid(format!(
            "need n ≥ 1 and r ≤ n (n={n}, r={r})"
        )));
    }
    Ok(r as f64 / n as f64)
}

/// Lower bound on `(1/n) H_α(A^n|B^n)` for `α > 1`:
/// `H_α(A|B)_σ − (2r/n) log d_A − α/(α−1) (h(r/n) + (2r/n) log d_AB)`.
pub fn renyi_defect_lower(
    h_alpha_sigma: f64,
    alpha: f64,
    n: usize,
    r: usize,
    d_a: usize,
    d_ab: usize,
) -> Result<f64> {
    let x = check_nr(n, r)?;
    if !(alpha > 1.0) {
        return Err(Error::invalid(format!(
            "lower bound needs α > 1, got {alpha}"
        )));
    }
    let slack = if alpha.is_infinite() {
        1.0
    } else {
        alpha / (alpha - 1.0)
    };
    Ok(h_alpha_sigma - 2.0 * x * log2(d_a) - slack * (h2(x) + 2.0 * x * log2(d_ab)))
}

/// Upper bound on `(1/n) H_α(A^n|B^n)` for `α ∈ [1/2, 1)`:
/// `H_α(A|B)_σ + (2r/n) log d_A + 1/(1−α) (h(r/n) + (2r/n) log d_AB)`.
pub fn renyi_defect_upper(
    h_alpha_sigma: f64,
    alpha: f64,
    n: usize,
    r: usize,
    d_a: usize,
    d_ab: usize,
) -> Result<f64> {
    let x = check_nr(n, r)?;
    if !(0.5..1.0).contains(&alpha) {
        return Err(Error::invalid(format!(
            "upper bound needs α ∈ [1/2, 1), got {alpha}"
        )));
    }
    Ok(h_alpha_sigma + 2.0 * x * log2(d_a) + (h2(x) + 2.0 * x * log2(d_ab)) / (1.0 - alpha))
}

/// Rényi orders attached to the defect ratio `r/n` by `1 ± 1/log(r/n)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AlphaSchedule {
    /// `1 + 1/log(r/n)` taken literally; below 1 whenever `r/n < 1`.
    pub literal: f64,
    /// `1 + 1/|log(r/n)|`, used where `α > 1` is required.
    pub above: f64,
    /// `max(1 − 1/|log(r/n)|, 1/2)`, used where `α ∈ [1/2, 1)` is required.
    pub below: f64,
    /// Set when `1 − 1/|log(r/n)|` fell below 1/2 and was clamped.
    pub below_clamped: bool,
}

pub fn alpha_schedule(n: usize, r: usize) -> Result<AlphaSchedule> {
    let x = check_nr(n, r)?;
    if r == 0 || r == n {
        return Err(Error::invalid("the α schedule needs 0 < r < n"));
    }
    let l = x.log2();
    let raw_below = 1.0 - 1.0 / l.abs();
    Ok(AlphaSchedule {
        literal: 1.0 + 1.0 / l,
        above: 1.0 + 1.0 / l.abs(),
        below: raw_below.max(0.5),
        below_clamped: raw_below < 0.5,
    })
}

/// Smoothing slack for the min-entropy direction, `α > 1`:
/// `(2r/n) log d_A + α/(α−1)(h(r/n) + (2r/n) log d_AB) + log(1/ε²)/(n(α−1)) + log(1/(1−ε²))/n`.
pub fn delta_eps(n: usize, r: usize, alpha: f64, eps: f64, d_a: usize, d_ab: usize) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::invalid(format!("ε = {eps} outside (0, 1)")));
    }
    let base = renyi_defect_lower(0.0, alpha, n, r, d_a, d_ab)?;
    let nf = n as f64;
    let tail = if alpha.is_infinite() {
        0.0
    } else {
        -(eps * eps).log2() / (alpha - 1.0)
    };
    Ok(-base + tail / nf - (1.0 - eps * eps).log2() / nf)
}

/// Smoothing slack for the max-entropy direction, `α ∈ [1/2, 1)`:
/// `(2r/n) log d_A + 1/(1−α)(h(r/n) + (2r/n) log d_AB) + α/(1−α) log(1/ε)/n`.
pub fn delta_prime_eps(
    n: usize,
    r: usize,
    alpha: f64,
    eps: f64,
    d_a: usize,
    d_ab: usize,
) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::invalid(format!("ε = {eps} outside (0, 1)")));
    }
    let base = renyi_defect_upper(0.0, alpha, n, r, d_a, d_ab)?;
    Ok(base - alpha / (1.0 - alpha) * eps.log2() / n as f64)
}

#[derive(Clone, Debug, Serialize)]
pub struct AepDeltas {
    pub delta: f64,
    pub delta_prime: f64,
    pub alpha: f64,
    pub alpha_prime: f64,
    pub schedule: AlphaSchedule,
}

/// `δ_ε` and `δ'_ε` at `params.alpha` when it lies in the respective
/// domain, otherwise at the schedule value for that direction.
pub fn aep_deltas(params: &BoundParams) -> Result<AepDeltas> {
    params.validate()?;
    if params.alpha == Some(1.0) {
        return Err(Error::invalid("α = 1 has no smoothing slack"));
    }
    let schedule = alpha_schedule(params.n, params.r)?;
    let alpha = params.alpha.filter(|&a| a > 1.0).unwrap_or(schedule.above);
    let alpha_prime = params
        .alpha
        .filter(|a| (0.5..1.0).contains(a))
        .unwrap_or(schedule.below);
    let (n, r, e) = (params.n, params.r, params.eps);
    Ok(AepDeltas {
        delta: delta_eps(n, r, alpha, e, params.d_a, params.d_ab)?,
        delta_prime: delta_prime_eps(n, r, alpha_prime, e, params.d_a, params.d_ab)?,
        alpha,
        alpha_prime,
        schedule,
    })
}

/// `ε_n = min(2√(r/n), 1)`: trace distance (`½‖·‖₁`) between the one-site
/// marginal and `σ` implied by the `s = 1` marginal bound.
pub fn entropy_gap_eps(n: usize, r: usize) -> Result<f64> {
    Ok((marginal_bound(n, r, 1)? / 2.0).min(1.0))
}

/// Upper bound on the per-copy gap `(1/n) H(A^n|B^n)_ρ − H(A|B)_σ`:
/// `2ε_n log d_A + (1+ε_n) h(ε_n/(1+ε_n))`.
pub fn entropy_gap_upper(n: usize, r: usize, d_a: usize) -> Result<f64> {
    crate::entropies::af_continuity_bound(entropy_gap_eps(n, r)?, d_a)
}

/// Lower bound on the per-copy gap from the `α > 1` Rényi bound at the
/// schedule order: `H_α(A|B)_σ − H(A|B)_σ − (2r/n) log d_A − α/(α−1)(…)`.
pub fn entropy_gap_lower(
    h_alpha_sigma: f64,
    h_sigma: f64,
    alpha: f64,
    n: usize,
    r: usize,
    d_a: usize,
    d_ab: usize,
) -> Result<f64> {
    Ok(renyi_defect_lower(h_alpha_sigma, alpha, n, r, d_a, d_ab)? - h_sigma)
}

/// `n h(2r/n) + 2r log d_AE`: bound on the conditional mutual information
/// between disjoint blocks of an almost-iid state.
pub fn block_cmi_bound(n: usize, r: usize, d_ae: usize) -> Result<f64> {
    if n == 0 || 2 * r > n {
        return Err(Error::invalid(format!(
            "need n ≥ 1 and 2r ≤ n (n={n}, r={r})"
        )));
    }
    Ok(n as f64 * h2(2.0 * r as f64 / n as f64) + 2.0 * r as f64 * log2(d_ae))
}

/// `12ε log(d_A d_B) + 6h(ε)`: continuity slack of squashed entanglement
/// at trace distance `ε`.
pub fn squashed_continuity(eps: f64, d_a: usize, d_b: usize) -> Result<f64> {
    Ok(12.0 * eps * log2(d_a * d_b) + 6.0 * binary_entropy(eps)?)
}
