use super::RenyiOrder;
use crate::error::{Error, Result};
use crate::linalg::{eigh_matrix, power_matrix, re_trace_product, Eigh, Matrix, Operator};

/// Weight of `ρ` outside the support of `σ` above which a divergence with
/// `α ≥ 1` is infinite.
const SUPPORT_LEAK_TOL: f64 = 1e-10;

fn same_space(rho: &Operator, sigma: &Operator) -> Result<()> {
    if rho.dims() != sigma.dims() {
        return Err(Error::mismatch(format!(
            "divergence arguments on {:?} and {:?}",
            rho.dims().factors(),
            sigma.dims().factors()
        )));
    }
    Ok(())
}

/// `tr[(1 − Π_σ) ρ]`.
fn support_leak(rho: &Matrix, sigma: &Eigh) -> f64 {
    let proj = sigma.apply(|l| {
        if l > sigma.support_cutoff() && l > 0.0 {
            1.0
        } else {
            0.0
        }
    });
    let inside = re_trace_product(&proj, rho);
    let total: f64 = rho.diagonal().iter().map(|z| z.re).sum();
    total - inside
}

/// Sandwiched Rényi divergence in bits; `+∞` when `α ≥ 1` and the support
/// of `ρ` is not contained in that of `σ`.
pub fn sandwiched_divergence(rho: &Operator, sigma: &Operator, order: RenyiOrder) -> Result<f64> {
    same_space(rho, sigma)?;
    match order {
        RenyiOrder::One => relative_entropy(rho, sigma),
        RenyiOrder::Infinity => d_max(rho, sigma),
        RenyiOrder::Half | RenyiOrder::Alpha(_) => {
            let alpha = order.value();
            if alpha > 1.0 && support_leak(rho.mat(), &eigh_matrix(sigma.mat())) > SUPPORT_LEAK_TOL
            {
                return Ok(f64::INFINITY);
            }
            let q = sandwiched_trace(&power_matrix(rho.mat(), 0.5), sigma.mat(), alpha);
            if q <= 0.0 {
                return Ok(f64::INFINITY);
            }
            Ok(q.log2() / (alpha - 1.0))
        }
    }
}

/// `tr[(σ^{(1−α)/2α} ρ σ^{(1−α)/2α})^α]`, evaluated as
/// `tr[(√ρ σ^{(1−α)/α} √ρ)^α]`, which has the same nonzero spectrum.
pub(crate) fn sandwiched_trace(sqrt_rho: &Matrix, sigma: &Matrix, alpha: f64) -> f64 {
    let s = power_matrix(sigma, (1.0 - alpha) / alpha);
    let y = sqrt_rho * s * sqrt_rho;
    let e = eigh_matrix(&y);
    let cut = e.support_cutoff();
    e.values
        .iter()
        .filter(|&&l| l > cut)
        .map(|&l| l.powf(alpha))
        .sum()
}

/// `tr[ρ (log ρ − log σ)]` in bits.
pub fn relative_entropy(rho: &Operator, sigma: &Operator) -> Result<f64> {
    same_space(rho, sigma)?;
    let es = eigh_matrix(sigma.mat());
    if support_leak(rho.mat(), &es) > SUPPORT_LEAK_TOL {
        return Ok(f64::INFINITY);
    }
    let er = eigh_matrix(rho.mat());
    let log_of = |e: &Eigh| {
        let cut = e.support_cutoff();
        e.apply(move |l| if l > cut && l > 0.0 { l.log2() } else { 0.0 })
    };
    Ok(re_trace_product(rho.mat(), &log_of(&er)) - re_trace_product(rho.mat(), &log_of(&es)))
}

/// `log λ_max(σ^{-1/2} ρ σ^{-1/2})` on the support of `σ`; `+∞` on a support
/// violation.
pub fn d_max(rho: &Operator, sigma: &Operator) -> Result<f64> {
    same_space(rho, sigma)?;
    let es = eigh_matrix(sigma.mat());
    if support_leak(rho.mat(), &es) > SUPPORT_LEAK_TOL {
        return Ok(f64::INFINITY);
    }
    let cut = es.support_cutoff();
    let inv_sqrt = es.apply(|l| {
        if l > cut && l > 0.0 {
            1.0 / l.sqrt()
        } else {
            0.0
        }
    });
    let m = &inv_sqrt * rho.mat() * &inv_sqrt;
    let top = eigh_matrix(&m).max();
    if top <= 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(top.log2())
}
