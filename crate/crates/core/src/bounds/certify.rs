//! Certifiers: evaluate a bound and the quantity it controls on an explicit
//! state, and record `lhs ≤ rhs` with the margin and a vacuity flag.

use super::family::DiagonalDefectFamily;
use super::{
    alpha_schedule, block_cmi_bound, delta_eps, delta_prime_eps, entropy_gap_eps,
    entropy_gap_lower, entropy_gap_upper, marginal_bound, renyi_defect_lower, renyi_defect_upper,
    statistics_threshold, AlphaSchedule,
};
use crate::almost_iid::Witness;
use crate::entropies::{
    cmi, cond_renyi, conditional_entropy, h_max, h_min, mutual_information, RenyiOrder,
    SolverConfig,
};
use crate::error::{Error, Result};
use crate::linalg::{DensityOperator, Operator};
use crate::record::CertificationRecord;
use crate::states::{outcome_distribution, Povm};
use serde::Serialize;

/// Numerical slack allowed on every certified inequality.
pub const CERT_TOL: f64 = 1e-9;

fn log2(d: usize) -> f64 {
    (d as f64).log2()
}

fn with_nr(rec: CertificationRecord, n: usize, r: usize) -> CertificationRecord {
    rec.with("n", n).with("r", r)
}

/// `‖tr_{n−s} ρ − σ^{⊗s}‖₁ ≤ 4√(rs/n)` on the visible state of `w`.
pub fn marginal_certify(w: &Witness, s: usize) -> Result<CertificationRecord> {
    let rhs = marginal_bound(w.n, w.r, s)?;
    let marg = w.visible_marginal(s)?;
    let target = w.sigma.op().tensor_power(s)?;
    let lhs = marg.op().sub(&target)?.trace_norm();
    Ok(with_nr(
        CertificationRecord::le("marginal_distance", "marginal-distance", lhs, rhs, CERT_TOL),
        w.n,
        w.r,
    )
    .with("s", s)
    .with("vacuous", rhs >= 2.0))
}

/// Exact probability that the empirical distribution of `n` site-wise
/// measurements is farther than `f(ε, r, n, |X|, d)` in `ℓ¹` from the
/// single-site distribution of `σ`; certified `≤ ε`.
pub fn statistics_certify(w: &Witness, povm: &Povm, eps: f64) -> Result<CertificationRecord> {
    let (n, r) = (w.n, w.r);
    let size = povm.len();
    let f = statistics_threshold(eps, r, n, size, w.visible_dim())?;
    let rho = w.visible_marginal(n)?;
    let outcomes = outcome_distribution(&rho, povm, n)?;
    let single = povm.distribution(&w.sigma)?;
    let mut exceed = 0.0;
    let mut counts = vec![0usize; size];
    for (idx, &p) in outcomes.probs.iter().enumerate() {
        counts.iter_mut().for_each(|c| *c = 0);
        let mut rest = idx;
        for _ in 0..n {
            counts[rest % size] += 1;
            rest /= size;
        }
        let l1: f64 = counts
            .iter()
            .zip(&single.probs)
            .map(|(&k, &q)| (k as f64 / n as f64 - q).abs())
            .sum();
        if l1 > f {
            exceed += p;
        }
    }
    Ok(with_nr(
        CertificationRecord::le(
            "measurement_statistics",
            "measurement-statistics",
            exceed,
            eps,
            CERT_TOL,
        ),
        n,
        r,
    )
    .with("eps", eps)
    .with("threshold", f)
    .with("vacuous", f >= 2.0))
}

/// Visible state of `w` with factors reordered to `A_1 … A_n B_1 … B_n`,
/// where the first `a` factors of each site form `A`.
fn grouped_visible(w: &Witness, a: usize) -> Result<Operator> {
    let fv = w.visible_factors();
    if a == 0 || a >= fv {
        return Err(Error::mismatch(format!(
            "cannot split {fv} visible factors after {a}"
        )));
    }
    let rho = w.visible_marginal(w.n)?;
    let order: Vec<usize> = (0..w.n)
        .flat_map(|j| j * fv..j * fv + a)
        .chain((0..w.n).flat_map(|j| j * fv + a..(j + 1) * fv))
        .collect();
    rho.op().permute_factors(&order)
}

fn site_split(sigma: &DensityOperator, a: usize) -> (usize, usize) {
    let f = sigma.dims().factors();
    (f[..a].iter().product(), f.iter().product())
}

#[derive(Clone, Debug, Serialize)]
pub struct RenyiDefectReport {
    /// `(1/n) H_α(A^n|B^n)_ρ`.
    pub value: f64,
    /// `H_α(A|B)_σ`.
    pub h_alpha_sigma: f64,
    pub bound: f64,
    pub stale: bool,
}

/// `(1/n) H_α(A^n|B^n)` on the visible state of `w`, and `H_α(A|B)_σ`.
pub fn renyi_defect_value(
    w: &Witness,
    a: usize,
    alpha: RenyiOrder,
    cfg: &SolverConfig,
) -> Result<(f64, f64, bool)> {
    let grouped = grouped_visible(w, a)?;
    let joint = cond_renyi(&grouped, a * w.n, alpha, cfg)?;
    let single = cond_renyi(w.sigma.op(), a, alpha, cfg)?;
    Ok((
        joint.value / w.n as f64,
        single.value,
        joint.stale || single.stale,
    ))
}

/// Per-copy Rényi conditional entropy against the defect-corrected bound:
/// a lower bound for `α > 1`, an upper bound for `α ∈ [1/2, 1)`.
pub fn renyi_defect_certify(
    w: &Witness,
    a: usize,
    alpha: RenyiOrder,
    cfg: &SolverConfig,
) -> Result<(CertificationRecord, RenyiDefectReport)> {
    let x = alpha.value();
    if x == 1.0 {
        return Err(Error::invalid("the Rényi bound needs α ≠ 1"));
    }
    let (d_a, d_ab) = site_split(&w.sigma, a);
    let (value, h_alpha_sigma, stale) = renyi_defect_value(w, a, alpha, cfg)?;
    let range = log2(d_a);
    let (rec, bound) = if x > 1.0 {
        let bound = renyi_defect_lower(h_alpha_sigma, x, w.n, w.r, d_a, d_ab)?;
        let rec =
            CertificationRecord::le("renyi_lower", "renyi-defect-bound", bound, value, CERT_TOL)
                .with("vacuous", bound <= -range);
        (rec, bound)
    } else {
        let bound = renyi_defect_upper(h_alpha_sigma, x, w.n, w.r, d_a, d_ab)?;
        let rec =
            CertificationRecord::le("renyi_upper", "renyi-defect-bound", value, bound, CERT_TOL)
                .with("vacuous", bound >= range);
        (rec, bound)
    };
    let rec = with_nr(rec, w.n, w.r).with("alpha", x).with("stale", stale);
    Ok((
        rec,
        RenyiDefectReport {
            value,
            h_alpha_sigma,
            bound,
            stale,
        },
    ))
}

/// One `n` of the conditional-entropy gap sweep.
#[derive(Clone, Debug, Serialize)]
pub struct EntropyGapRow {
    pub n: usize,
    /// `(1/n) H(A^n|B^n)_ρ − H(A|B)_σ`.
    pub gap: f64,
    pub upper: f64,
    pub lower: f64,
    pub alpha: f64,
    pub eps_n: f64,
}

/// Per-copy conditional-entropy gap of the family at each `n`, checked
/// against the continuity upper bound and the Rényi lower bound at the
/// schedule order `α = 1 + 1/|log(r/n)|`.
pub fn entropy_gap_certify(
    family: &DiagonalDefectFamily,
    ns: &[usize],
    cfg: &SolverConfig,
) -> Result<(Vec<CertificationRecord>, Vec<EntropyGapRow>)> {
    let sigma = family.sigma()?;
    let h_sigma = family.sigma_conditional_entropy();
    let (d_a, d_ab) = (family.d_a(), family.d_a() * family.d_b());
    let range = 2.0 * log2(d_a);
    let mut records = Vec::new();
    let mut rows = Vec::new();
    for &n in ns {
        let r = family.r;
        let gap = family.gap(n)?;
        let eps_n = entropy_gap_eps(n, r)?;
        let upper = entropy_gap_upper(n, r, d_a)?;
        let (alpha, lower) = if r == 0 {
            (f64::NAN, 0.0)
        } else {
            let alpha = alpha_schedule(n, r)?.above;
            let h_alpha = cond_renyi(sigma.op(), 1, RenyiOrder::new(alpha)?, cfg)?.value;
            (
                alpha,
                entropy_gap_lower(h_alpha, h_sigma, alpha, n, r, d_a, d_ab)?,
            )
        };
        let up = CertificationRecord::le(
            "entropy_gap_upper",
            "conditional-entropy-gap",
            gap,
            upper,
            CERT_TOL,
        )
        .with("eps_n", eps_n)
        .with("trace_distance_convention", "half-l1")
        .with("vacuous", upper >= range);
        let low = CertificationRecord::le(
            "entropy_gap_lower",
            "conditional-entropy-gap",
            lower,
            gap,
            CERT_TOL,
        )
        .with("vacuous", lower <= -range);
        let low = if alpha.is_nan() {
            low
        } else {
            low.with("alpha", alpha)
        };
        records.push(with_nr(up, n, r));
        records.push(with_nr(low, n, r));
        rows.push(EntropyGapRow {
            n,
            gap,
            upper,
            lower,
            alpha,
            eps_n,
        });
    }
    Ok((records, rows))
}

/// `I(A_1^k : A_{k+1}^{k+k'} | A_{k+k'+1}^m)` on the visible state, against
/// `n h(2r/n) + 2r log d_AE` with `d_AE` the extension site dimension.
pub fn block_cmi_certify(
    w: &Witness,
    k: usize,
    k_prime: usize,
    m: usize,
) -> Result<CertificationRecord> {
    if k == 0 || k_prime == 0 || k + k_prime > m || m > w.n {
        return Err(Error::invalid(format!(
            "need k, k' ≥ 1 and k + k' ≤ m ≤ n (k={k}, k'={k_prime}, m={m})"
        )));
    }
    let rhs = block_cmi_bound(w.n, w.r, w.site_dim())?;
    let lhs = block_cmi(w, k, k_prime, m)?;
    let trivial = 2.0 * k.min(k_prime) as f64 * log2(w.visible_dim());
    Ok(with_nr(
        CertificationRecord::le("block_cmi", "block-cmi", lhs, rhs, CERT_TOL),
        w.n,
        w.r,
    )
    .with("k", k)
    .with("k_prime", k_prime)
    .with("m", m)
    .with("vacuous", rhs >= trivial))
}

fn block_cmi(w: &Witness, k: usize, k_prime: usize, m: usize) -> Result<f64> {
    let fv = w.visible_factors();
    let rho = w.visible_marginal(m)?;
    if k + k_prime == m {
        mutual_information(rho.op(), k * fv)
    } else {
        cmi(rho.op(), k * fv, k_prime * fv)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct XiReport {
    pub n: usize,
    pub s: usize,
    /// `Σ_{i ≤ n−s} I(A_1^{i−1} : A_i | A_{n−s+1}^{n−s+ℓ})` for `ℓ = 0..=s`.
    pub per_ell: Vec<f64>,
    /// Minimizing `ℓ` and its value.
    pub ell: usize,
    pub value: f64,
}

/// Chain-rule sum of conditional mutual informations between a site and
/// its predecessors, conditioned on `ℓ` of the last `s` sites, minimized
/// over `ℓ`.
pub fn xi_n(w: &Witness, s: usize) -> Result<XiReport> {
    let n = w.n;
    if s >= n {
        return Err(Error::invalid(format!("need s < n (s={s}, n={n})")));
    }
    let fv = w.visible_factors();
    let mut per_ell = Vec::with_capacity(s + 1);
    for ell in 0..=s {
        let rho = w.visible_marginal(n - s + ell)?;
        let cond: Vec<usize> = (n - s..n - s + ell).collect();
        let mut total = 0.0;
        for i in 2..=n - s {
            let sites: Vec<usize> = (0..i).chain(cond.iter().copied()).collect();
            let keep: Vec<usize> = sites.iter().flat_map(|&j| j * fv..(j + 1) * fv).collect();
            let marg = rho.op().marginal(&keep)?;
            total += if ell == 0 {
                mutual_information(&marg, (i - 1) * fv)?
            } else {
                cmi(&marg, (i - 1) * fv, fv)?
            };
        }
        per_ell.push(total);
    }
    let (ell, value) = per_ell
        .iter()
        .copied()
        .enumerate()
        .fold(
            (0, f64::INFINITY),
            |b, (l, v)| if v < b.1 { (l, v) } else { b },
        );
    Ok(XiReport {
        n,
        s,
        per_ell,
        ell,
        value,
    })
}

/// `√(2^{−H_min(A|B)}) + √(2^{H_max(A|B)}) + 1`.
pub fn eta(sigma: &Operator, a: usize, cfg: &SolverConfig) -> Result<f64> {
    let lo = h_min(sigma, a)?.value;
    let hi = h_max(sigma, a, cfg)?.value;
    Ok((-lo).exp2().sqrt() + hi.exp2().sqrt() + 1.0)
}

/// Per-copy smooth-entropy bounds for `n` copies with `r` defects.
#[derive(Clone, Debug, Serialize)]
pub struct AepRecord {
    pub n: usize,
    pub r: usize,
    pub eps: f64,
    /// `H(A|B)_σ`.
    pub h: f64,
    pub eta: f64,
    pub alpha: f64,
    pub alpha_prime: f64,
    pub delta: f64,
    pub delta_prime: f64,
    /// `H − δ_ε − 4(α−1)(log η)²`, a lower bound on `(1/n) H^ε_min`.
    pub min_lower: f64,
    /// `H + δ'_ε + 4(1−α')(log η)²`, an upper bound on `(1/n) H^ε_max`.
    pub max_upper: f64,
    pub schedule: Option<AlphaSchedule>,
}

/// Orders used without defects, where the schedule is undefined:
/// `α = 1 ± 1/log n`.
fn defect_free_orders(n: usize) -> (f64, f64) {
    let l = (n.max(2) as f64).log2();
    (1.0 + 1.0 / l, (1.0 - 1.0 / l).max(0.5))
}

pub fn aep_record(
    sigma: &Operator,
    a: usize,
    n: usize,
    r: usize,
    eps: f64,
    cfg: &SolverConfig,
) -> Result<AepRecord> {
    let h = conditional_entropy(sigma, a)?;
    let e = eta(sigma, a, cfg)?;
    let f = sigma.dims().factors();
    let (d_a, d_ab) = (f[..a].iter().product(), f.iter().product());
    let schedule = if r > 0 {
        Some(alpha_schedule(n, r)?)
    } else {
        None
    };
    let (alpha, alpha_prime) = match schedule {
        Some(s) => (s.above, s.below),
        None => defect_free_orders(n),
    };
    let delta = delta_eps(n, r, alpha, eps, d_a, d_ab)?;
    let delta_prime = delta_prime_eps(n, r, alpha_prime, eps, d_a, d_ab)?;
    let le = e.log2();
    Ok(AepRecord {
        n,
        r,
        eps,
        h,
        eta: e,
        alpha,
        alpha_prime,
        delta,
        delta_prime,
        min_lower: h - delta - 4.0 * (alpha - 1.0) * le * le,
        max_upper: h + delta_prime + 4.0 * (1.0 - alpha_prime) * le * le,
        schedule,
    })
}
