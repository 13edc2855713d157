use super::{cond_renyi, h_max, h_min, split_dims, RenyiOrder, SolverConfig};
use crate::error::{Error, Result};
use crate::linalg::{c, DensityOperator, Operator, PureState, Vector};
use crate::rng;
use crate::states::{purify, random_pure};
use serde::Serialize;

/// Largest total dimension for which the ε-ball is searched directly.
pub const MAX_EXACT_SMOOTHING_DIM: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SmoothKind {
    Min,
    Max,
}

/// Certified bracket `[lower, upper]` for a smooth entropy.
///
/// `achieved` is a value attained by an explicit state in the ε-ball
/// (a lower bound for `Min`, an upper bound for `Max`), found by searching
/// over purifications `√(1−ε²)|ψ⟩ + ε|φ⟩` with `φ ⊥ ψ`.
#[derive(Clone, Debug, Serialize)]
pub struct SmoothInterval {
    pub kind: SmoothKind,
    pub eps: f64,
    pub lower: f64,
    pub upper: f64,
    pub achieved: Option<f64>,
    pub smoothing_method: Option<&'static str>,
}

impl SmoothInterval {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, x: f64, tol: f64) -> bool {
        x >= self.lower - tol && x <= self.upper + tol
    }
}

/// Offsets `ε'` for the min/max conversion, as fractions of `1 − ε`.
const EPS_PRIME_FRACTIONS: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

fn log2_inv(x: f64) -> f64 {
    -x.log2()
}

/// Lower bound on `H^ε_min` from `H_α`, `α > 1`: `H_α − log(1/ε²)/(α−1) − log(1/(1−ε²))`.
fn min_lower(h_alpha: f64, alpha: f64, eps: f64) -> f64 {
    let tail = if alpha.is_infinite() {
        0.0
    } else {
        log2_inv(eps * eps) / (alpha - 1.0)
    };
    h_alpha - tail - log2_inv(1.0 - eps * eps)
}

/// Upper bound on `H^ε_max` from `H_α`, `α ∈ [1/2, 1)`: `H_α + α/(1−α) log(1/ε)`.
fn max_upper(h_alpha: f64, alpha: f64, eps: f64) -> f64 {
    h_alpha + alpha / (1.0 - alpha) * log2_inv(eps)
}

/// Bracket from Rényi values `(α, H_α)`, all quantities scaled by `1/scale`
/// for the slack terms (use `scale = n` for per-copy values of an `n`-fold
/// tensor power whose `H_α` is additive).
fn bracket(
    values: &[(f64, f64)],
    eps: f64,
    kind: SmoothKind,
    scale: f64,
    log_d_a: f64,
) -> Result<(f64, f64)> {
    let above: Vec<(f64, f64)> = values.iter().copied().filter(|(a, _)| *a > 1.0).collect();
    let below: Vec<(f64, f64)> = values.iter().copied().filter(|(a, _)| *a < 1.0).collect();
    if above.is_empty() || below.is_empty() {
        return Err(Error::invalid("α grid needs orders on both sides of 1"));
    }
    let per = |x: f64| x / scale;
    let primes = || EPS_PRIME_FRACTIONS.iter().map(move |f| f * (1.0 - eps));
    let conversion = |e: f64, ep: f64| per(log2_inv(1.0 - (e + ep) * (e + ep)));
    let (lower, upper) = match kind {
        SmoothKind::Min => {
            let lower = above
                .iter()
                .map(|&(a, h)| h + per(min_lower(0.0, a, eps)))
                .fold(f64::NEG_INFINITY, f64::max);
            let upper = below
                .iter()
                .flat_map(|&(a, h)| primes().map(move |ep| (a, h, ep)))
                .map(|(a, h, ep)| h + per(max_upper(0.0, a, ep)) + conversion(eps, ep))
                .fold(log_d_a, f64::min);
            (lower, upper)
        }
        SmoothKind::Max => {
            let upper = below
                .iter()
                .map(|&(a, h)| h + per(max_upper(0.0, a, eps)))
                .fold(log_d_a, f64::min);
            let lower = above
                .iter()
                .flat_map(|&(a, h)| primes().map(move |ep| (a, h, ep)))
                .map(|(a, h, ep)| h + per(min_lower(0.0, a, ep)) - conversion(eps, ep))
                .fold(-log_d_a, f64::max);
            (lower, upper)
        }
    };
    Ok((lower, upper))
}

fn renyi_values(
    rho: &Operator,
    a: usize,
    alphas: &[f64],
    cfg: &SolverConfig,
) -> Result<Vec<(f64, f64)>> {
    alphas
        .iter()
        .filter(|&&x| x != 1.0)
        .map(|&x| Ok((x, cond_renyi(rho, a, RenyiOrder::new(x)?, cfg)?.value)))
        .collect()
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::invalid(format!(
            "smoothing parameter {eps} outside (0, 1)"
        )));
    }
    Ok(())
}

/// Bracket for `H^ε_min(A|B)` or `H^ε_max(A|B)` assembled from conditional
/// Rényi entropies on the grid `alphas` (`∞` allowed), plus a direct search
/// of the ε-ball when the total dimension is at most 16.
pub fn smooth_interval(
    rho: &Operator,
    a: usize,
    eps: f64,
    kind: SmoothKind,
    alphas: &[f64],
    cfg: &SolverConfig,
) -> Result<SmoothInterval> {
    check_eps(eps)?;
    let (d_a, _) = split_dims(rho.dims(), a)?;
    let values = renyi_values(rho, a, alphas, cfg)?;
    let (lower, upper) = bracket(&values, eps, kind, 1.0, (d_a as f64).log2())?;
    let mut out = SmoothInterval {
        kind,
        eps,
        lower,
        upper,
        achieved: None,
        smoothing_method: None,
    };
    if rho.dim() <= MAX_EXACT_SMOOTHING_DIM {
        out.achieved = Some(search_ball(rho, a, eps, kind, cfg)?);
        out.smoothing_method = Some("purification-search");
    }
    Ok(out)
}

/// Per-copy bracket for `σ^{⊗n}` using additivity of `H_α` under tensor
/// powers, so only single-copy Rényi entropies are computed.
pub fn smooth_interval_tensor_power(
    sigma: &Operator,
    a: usize,
    n: usize,
    eps: f64,
    kind: SmoothKind,
    alphas: &[f64],
    cfg: &SolverConfig,
) -> Result<SmoothInterval> {
    check_eps(eps)?;
    if n == 0 {
        return Err(Error::invalid("tensor power needs n ≥ 1"));
    }
    let (d_a, _) = split_dims(sigma.dims(), a)?;
    let values = renyi_values(sigma, a, alphas, cfg)?;
    let (lower, upper) = bracket(&values, eps, kind, n as f64, (d_a as f64).log2())?;
    Ok(SmoothInterval {
        kind,
        eps,
        lower,
        upper,
        achieved: None,
        smoothing_method: None,
    })
}

fn one_shot(rho: &Operator, a: usize, kind: SmoothKind, cfg: &SolverConfig) -> Result<f64> {
    Ok(match kind {
        SmoothKind::Min => h_min(rho, a)?.value,
        SmoothKind::Max => h_max(rho, a, cfg)?.value,
    })
}

/// Best `H_min` (largest) or `H_max` (smallest) over states
/// `tr_R |ψ'⟩⟨ψ'|` with `ψ' = √(1−ε²)ψ + εφ`, `φ ⊥ ψ`, `ψ` the canonical
/// purification; each such state lies in the purified-distance ε-ball.
fn search_ball(
    rho: &Operator,
    a: usize,
    eps: f64,
    kind: SmoothKind,
    cfg: &SolverConfig,
) -> Result<f64> {
    let psi = purify(&DensityOperator::from_trusted(rho.clone()))?;
    let keep: Vec<usize> = (0..rho.dims().len()).collect();
    let sign = if kind == SmoothKind::Min { 1.0 } else { -1.0 };
    let evaluate = |phi: &Vector| -> Result<f64> {
        let v = psi.amps() * c((1.0 - eps * eps).sqrt()) + phi * c(eps);
        let state = PureState::normalized(psi.dims().clone(), v)?;
        let marg = state.marginal(&keep)?;
        Ok(sign * one_shot(&marg, a, kind, cfg)?)
    };
    let orthogonal = |v: Vector| -> Option<Vector> {
        let w = &v - psi.amps() * psi.amps().dotc(&v);
        let n = w.norm();
        (n > 1e-9).then(|| w / c(n))
    };
    let mut best = sign * one_shot(rho, a, kind, cfg)?;
    let mut best_phi: Option<Vector> = None;
    let mut g = rng::stream(cfg.seed, 0x5300_7401);
    for _ in 0..24 {
        let cand = random_pure(psi.dims().clone(), &mut g)?;
        if let Some(phi) = orthogonal(cand.amps().clone()) {
            let v = evaluate(&phi)?;
            if v > best {
                best = v;
                best_phi = Some(phi);
            }
        }
    }
    // Local refinement: random perturbations of the best direction with a
    // shrinking radius.
    if let Some(mut phi) = best_phi {
        let mut radius = 0.5;
        for _ in 0..4 {
            for _ in 0..8 {
                let kick = random_pure(psi.dims().clone(), &mut g)?;
                if let Some(cand) = orthogonal(&phi + kick.amps() * c(radius)) {
                    let v = evaluate(&cand)?;
                    if v > best {
                        best = v;
                        phi = cand;
                    }
                }
            }
            radius *= 0.5;
        }
    }
    Ok(sign * best)
}
