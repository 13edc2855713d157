//! Von Neumann, Rényi and one-shot entropies, in bits.
//!
//! Bipartite inputs are split by factor count: the first `a` tensor factors
//! form system `A`, the rest form `B`. Tripartite inputs take `(a, b)` and
//! leave the remaining factors to `E`.

mod conditional;
mod divergence;
mod sdp;
mod smooth;

pub use conditional::{cond_renyi, cond_renyi_objective, MAX_SOLVER_DIM};
pub use divergence::{d_max, relative_entropy, sandwiched_divergence};
pub use sdp::{
    h_max, h_min, h_min_certificate_check, h_min_certified, solve_sdp, CertificateCheck,
    HminCertificate, SdpProblem, SdpSolution, MAX_SDP_DIM,
};
pub use smooth::{smooth_interval, smooth_interval_tensor_power, SmoothInterval, SmoothKind};

use crate::bounds::h2;
use crate::error::{Error, Result};
use crate::linalg::{eigh_matrix, Dims, Matrix, Operator, PureState};
use serde::Serialize;

/// Order of a Rényi quantity. `Half`, `One` and `Infinity` have dedicated
/// code paths; every other admissible order is `Alpha`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum RenyiOrder {
    Half,
    One,
    Infinity,
    Alpha(f64),
}

impl RenyiOrder {
    /// Accepts `α ∈ [1/2, 1) ∪ (1, ∞)` plus the limit points `1` and `∞`.
    pub fn new(alpha: f64) -> Result<Self> {
        if alpha.is_nan() || alpha < 0.5 {
            return Err(Error::invalid(format!(
                "Rényi order {alpha} outside [1/2, ∞]"
            )));
        }
        Ok(if alpha == 0.5 {
            RenyiOrder::Half
        } else if alpha == 1.0 {
            RenyiOrder::One
        } else if alpha.is_infinite() {
            RenyiOrder::Infinity
        } else {
            RenyiOrder::Alpha(alpha)
        })
    }

    pub fn value(self) -> f64 {
        match self {
            RenyiOrder::Half => 0.5,
            RenyiOrder::One => 1.0,
            RenyiOrder::Infinity => f64::INFINITY,
            RenyiOrder::Alpha(a) => a,
        }
    }
}

/// Value of an optimized entropic quantity plus solver diagnostics.
#[derive(Clone, Debug, Serialize)]
pub struct EntropyResult {
    pub value: f64,
    pub optimizer: Option<Operator>,
    pub certificate: Option<Operator>,
    pub duality_gap: Option<f64>,
    pub iterations: usize,
    /// Set when the iteration budget ran out before the tolerance was met.
    pub stale: bool,
}

impl EntropyResult {
    pub fn exact(value: f64) -> Self {
        EntropyResult {
            value,
            optimizer: None,
            certificate: None,
            duality_gap: None,
            iterations: 0,
            stale: false,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("entropy result serializes")
    }
}

/// Tolerances and budgets shared by the iterative solvers.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iters: usize,
    pub starts: usize,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol: 1e-6,
            max_iters: 5000,
            starts: 5,
            seed: 0,
        }
    }
}

/// `(d_A, d_B)` for the split after the first `a` factors.
pub fn split_dims(dims: &Dims, a: usize) -> Result<(usize, usize)> {
    if a == 0 || a >= dims.len() {
        return Err(Error::mismatch(format!(
            "cannot split {} factors after {a}",
            dims.len()
        )));
    }
    let f = dims.factors();
    Ok((f[..a].iter().product(), f[a..].iter().product()))
}

/// `−Σ λ log λ` with `0 log 0 = 0`.
pub fn entropy_of_spectrum(values: &[f64]) -> f64 {
    values
        .iter()
        .filter(|&&l| l > 0.0)
        .map(|&l| -l * l.log2())
        .sum()
}

pub fn von_neumann(rho: &Operator) -> f64 {
    entropy_of_spectrum(&eigh_matrix(rho.mat()).values)
}

/// `H(A|B) = H(AB) − H(B)`.
pub fn conditional_entropy(rho: &Operator, a: usize) -> Result<f64> {
    split_dims(rho.dims(), a)?;
    let b: Vec<usize> = (a..rho.dims().len()).collect();
    Ok(von_neumann(rho) - von_neumann(&rho.marginal(&b)?))
}

/// `I(A:B) = H(A) − H(A|B)`.
pub fn mutual_information(rho: &Operator, a: usize) -> Result<f64> {
    split_dims(rho.dims(), a)?;
    let keep_a: Vec<usize> = (0..a).collect();
    Ok(von_neumann(&rho.marginal(&keep_a)?) - conditional_entropy(rho, a)?)
}

/// `I(A:B|E) = H(A|E) − H(A|BE)` for factors split as `A = 0..a`,
/// `B = a..a+b`, `E` the rest.
pub fn cmi(rho: &Operator, a: usize, b: usize) -> Result<f64> {
    let f = rho.dims().len();
    if a == 0 || b == 0 || a + b >= f {
        return Err(Error::mismatch(format!(
            "cannot split {f} factors as ({a}, {b}, rest)"
        )));
    }
    let ae: Vec<usize> = (0..a).chain(a + b..f).collect();
    let rho_ae = rho.marginal(&ae)?;
    Ok(conditional_entropy(&rho_ae, a)? - conditional_entropy(rho, a)?)
}

/// Continuity slack `2ε log d_A + (1+ε) h(ε/(1+ε))` for conditional entropy
/// between states at trace distance at most `ε`.
pub fn af_continuity_bound(eps: f64, d_a: usize) -> Result<f64> {
    if !(0.0..=1.0).contains(&eps) || d_a == 0 {
        return Err(Error::invalid(format!(
            "continuity bound needs ε ∈ [0,1] and d_A ≥ 1, got ε={eps}, d_A={d_a}"
        )));
    }
    Ok(2.0 * eps * (d_a as f64).log2() + (1.0 + eps) * h2(eps / (1.0 + eps)))
}

/// `Σ_t ⟨Ψ_t|ρ|Ψ_t⟩ |Ψ_t⟩⟨Ψ_t|` for an orthonormal family `Ψ_t`.
pub fn pinching(rho: &Operator, basis: &[PureState]) -> Result<Operator> {
    let d = rho.dim();
    for (i, a) in basis.iter().enumerate() {
        if a.amps().len() != d {
            return Err(Error::mismatch(
                "basis vector dimension differs from the operator",
            ));
        }
        for b in &basis[..i] {
            let overlap = a.amps().dotc(b.amps()).norm();
            if overlap > 1e-10 {
                return Err(Error::invalid(format!(
                    "basis not orthonormal: overlap {overlap:e}"
                )));
            }
        }
    }
    let mut out = Matrix::zeros(d, d);
    for psi in basis {
        let v = psi.amps();
        let p = v.dotc(&(rho.mat() * v));
        out += v * v.adjoint() * p;
    }
    Operator::new(rho.dims().clone(), out)
}

/// Smallest eigenvalue of `|T| P(ρ) − ρ`, and the weight of `ρ` outside the
/// span of the basis.
pub fn pinching_inequality(rho: &Operator, basis: &[PureState]) -> Result<(f64, f64)> {
    let p = pinching(rho, basis)?;
    let m = p.scale(basis.len() as f64).sub(rho)?;
    let inside: f64 = basis
        .iter()
        .map(|psi| psi.amps().dotc(&(rho.mat() * psi.amps())).re)
        .sum();
    Ok((m.min_eigenvalue(), (rho.trace().re - inside).max(0.0)))
}
