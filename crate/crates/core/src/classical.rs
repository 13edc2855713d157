//! Sampling without replacement: exact hypergeometric identities in
//! rational arithmetic, variance facts for mixtures and almost-iid bit
//! strings, and the variance-scaling experiment separating the two.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::fit_slope;
use crate::record::CertificationRecord;
use crate::states::ClassicalDistribution;

/// `n` kept positions, `k` discarded positions, `m` ones in total.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SubsampleParams {
    pub n: u64,
    pub k: u64,
    pub m: u64,
}

impl SubsampleParams {
    pub fn new(n: u64, k: u64, m: u64) -> Result<Self> {
        if m > n + k {
            return Err(Error::invalid(format!("m = {m} exceeds n + k = {}", n + k)));
        }
        Ok(SubsampleParams { n, k, m })
    }

    fn total(&self) -> u64 {
        self.n + self.k
    }
}

/// `C(n, k)` as an exact integer, zero when `k > n`.
pub fn binomial(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

fn ratio(num: BigInt, den: BigInt) -> BigRational {
    BigRational::new(num, den)
}

fn int(x: u64) -> BigInt {
    BigInt::from(x)
}

/// `Σ_ℓ C(r, ℓ) C(s, t − ℓ) = C(r + s, t)`, checked exactly.
pub fn vandermonde_holds(r: u64, s: u64, t: u64) -> bool {
    let lhs: BigInt = (0..=t).map(|l| binomial(r, l) * binomial(s, t - l)).sum();
    lhs == binomial(r + s, t)
}

/// `p_j = C(n, j) C(k, m − j) / C(n + k, m)` for `j = 0..=min(n, m)`: the
/// number of ones among the kept positions when `m` ones are placed
/// uniformly among `n + k`.
pub fn subsample_pmf(p: SubsampleParams) -> Result<Vec<BigRational>> {
    let p = SubsampleParams::new(p.n, p.k, p.m)?;
    let den = binomial(p.total(), p.m);
    Ok((0..=p.n.min(p.m))
        .map(|j| {
            let num = if p.m - j > p.k {
                BigInt::zero()
            } else {
                binomial(p.n, j) * binomial(p.k, p.m - j)
            };
            ratio(num, den.clone())
        })
        .collect())
}

/// Floating-point view of [`subsample_pmf`], labelled by `j`.
pub fn subsample_distribution(p: SubsampleParams) -> Result<ClassicalDistribution> {
    let pmf = subsample_pmf(p)?;
    let labels = (0..pmf.len()).map(|j| j.to_string()).collect();
    let probs = pmf.iter().map(|x| x.to_f64().unwrap_or(f64::NAN)).collect();
    ClassicalDistribution::new(labels, probs)
}

/// `nm/(n+k)`.
pub fn subsample_mean(p: SubsampleParams) -> Result<BigRational> {
    let p = SubsampleParams::new(p.n, p.k, p.m)?;
    if p.total() == 0 {
        return Err(Error::invalid("mean needs n + k ≥ 1"));
    }
    Ok(ratio(int(p.n) * int(p.m), int(p.total())))
}

/// `kmn(n+k−m) / ((n+k−1)(n+k)²)`.
pub fn subsample_variance(p: SubsampleParams) -> Result<BigRational> {
    let p = SubsampleParams::new(p.n, p.k, p.m)?;
    let t = p.total();
    if t <= 1 {
        return Err(Error::invalid("variance needs n + k ≥ 2"));
    }
    let num = int(p.k) * int(p.m) * int(p.n) * int(t - p.m);
    Ok(ratio(num, int(t - 1) * int(t) * int(t)))
}

/// `E[X²] = n(n−1)m(m−1)/((n+k)(n+k−1)) + nm/(n+k)`.
pub fn subsample_second_moment(p: SubsampleParams) -> Result<BigRational> {
    let p = SubsampleParams::new(p.n, p.k, p.m)?;
    let t = p.total();
    if t <= 1 {
        return Err(Error::invalid("second moment needs n + k ≥ 2"));
    }
    let pair = ratio(
        int(p.n) * int(p.n.saturating_sub(1)) * int(p.m) * int(p.m.saturating_sub(1)),
        int(t) * int(t - 1),
    );
    Ok(pair + ratio(int(p.n) * int(p.m), int(t)))
}

/// Exact mean, variance and second moment of a pmf on `0, 1, 2, …`.
pub fn pmf_moments(pmf: &[BigRational]) -> (BigRational, BigRational, BigRational) {
    let mut mean = BigRational::zero();
    let mut second = BigRational::zero();
    for (j, pj) in pmf.iter().enumerate() {
        let x = BigRational::from_integer(int(j as u64));
        mean += pj * &x;
        second += pj * &x * &x;
    }
    let var = &second - &mean * &mean;
    (mean, var, second)
}

fn float_moments(p: &[f64]) -> (f64, f64) {
    let mean: f64 = p.iter().enumerate().map(|(x, &w)| x as f64 * w).sum();
    let var = p
        .iter()
        .enumerate()
        .map(|(x, &w)| w * (x as f64 - mean).powi(2))
        .sum();
    (mean, var)
}

/// `Var[tp + (1−t)q] ≥ t Var[p] + (1−t) Var[q]` for distributions on the
/// integers `0, 1, …` (index = value).
pub fn mixture_variance_check(
    p: &ClassicalDistribution,
    q: &ClassicalDistribution,
    t: f64,
) -> Result<CertificationRecord> {
    if p.len() != q.len() {
        return Err(Error::mismatch("distributions over different ranges"));
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::invalid(format!("mixing weight {t} outside [0, 1]")));
    }
    let mix: Vec<f64> = p
        .probs
        .iter()
        .zip(&q.probs)
        .map(|(a, b)| t * a + (1.0 - t) * b)
        .collect();
    let (_, vp) = float_moments(&p.probs);
    let (_, vq) = float_moments(&q.probs);
    let (_, vm) = float_moments(&mix);
    Ok(CertificationRecord::le(
        "mixture_variance",
        "mixture-variance",
        t * vp + (1.0 - t) * vq,
        vm,
        1e-12,
    )
    .with("t", t))
}

/// `(n − r) q(1 − q)`: variance of the number of ones in `n` bits of which
/// `n − r` are iid Bernoulli(`q`) and `r` are arbitrary.
pub fn almost_iid_variance_lower_bound(q: f64, n: u64, r: u64) -> Result<f64> {
    if r > n || !(0.0..=1.0).contains(&q) {
        return Err(Error::invalid(format!(
            "need r ≤ n and q ∈ [0,1] (n={n}, r={r}, q={q})"
        )));
    }
    Ok((n - r) as f64 * q * (1.0 - q))
}

#[derive(Clone, Debug, Serialize)]
pub struct NogoRow {
    pub n: u64,
    pub k: u64,
    pub m: u64,
    pub r: u64,
    pub var_p: f64,
    pub mixture_bound: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct NogoTable {
    pub alpha: f64,
    pub rows: Vec<NogoRow>,
    pub slope_var: f64,
    pub slope_bound: f64,
    /// `k = ⌊n^α⌋`, `m = ⌊(n+k)/2⌋`, `r = ⌊n^{1/3}⌋`.
    pub rounding: &'static str,
}

impl NogoTable {
    /// Slope checks plus the variance separation at the largest `n`.
    pub fn records(&self) -> Vec<CertificationRecord> {
        let last = self.rows.last().expect("non-empty grid");
        vec![
            CertificationRecord::le(
                "nogo_slope_var",
                "variance-separation",
                (self.slope_var - self.alpha).abs(),
                0.1,
                0.0,
            )
            .with("alpha", self.alpha)
            .with("slope", self.slope_var),
            CertificationRecord::le(
                "nogo_slope_bound",
                "variance-separation",
                (self.slope_bound - 1.0).abs(),
                0.05,
                0.0,
            )
            .with("alpha", self.alpha)
            .with("slope", self.slope_bound),
            CertificationRecord::le(
                "nogo_separation",
                "variance-separation",
                last.var_p,
                last.mixture_bound,
                0.0,
            )
            .with("n", last.n)
            .with("alpha", self.alpha)
            .with("ratio", last.var_p / last.mixture_bound),
        ]
    }

    pub fn csv(&self) -> String {
        let mut out = String::from("n,k,m,r,var_p,mixture_bound\n");
        for r in &self.rows {
            out += &format!(
                "{},{},{},{},{},{}\n",
                r.n,
                r.k,
                r.m,
                r.r,
                crate::record::fmt(r.var_p),
                crate::record::fmt(r.mixture_bound)
            );
        }
        out
    }

    /// Slope metadata for the JSON sidecar.
    pub fn sidecar_json(&self) -> String {
        serde_json::json!({
            "alpha": self.alpha,
            "slope_var": self.slope_var,
            "slope_bound": self.slope_bound,
            "rounding": self.rounding,
        })
        .to_string()
    }
}

/// Subsample variance with `k = n^α` discarded positions and half the
/// positions set, against the almost-iid sum-variance bound `(n−r)/4`.
/// The first grows like `n^α`, the second like `n`.
pub fn nogo_scaling_experiment(alpha: f64, n_grid: &[u64]) -> Result<NogoTable> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!("α = {alpha} outside (0, 1)")));
    }
    if n_grid.len() < 4 {
        return Err(Error::invalid("slope fit needs at least 4 grid points"));
    }
    if n_grid.windows(2).any(|w| w[1] <= w[0]) || n_grid[0] < 2 {
        return Err(Error::invalid(
            "grid must be strictly increasing and start at n ≥ 2",
        ));
    }
    let mut rows = Vec::with_capacity(n_grid.len());
    for &n in n_grid {
        let nf = n as f64;
        let k = (nf.powf(alpha) + 1e-9).floor() as u64;
        let m = (n + k) / 2;
        let r = (nf.cbrt() + 1e-9).floor() as u64;
        let var_p = subsample_variance(SubsampleParams::new(n, k, m)?)?
            .to_f64()
            .unwrap_or(f64::NAN);
        let mixture_bound = almost_iid_variance_lower_bound(0.5, n, r)?;
        rows.push(NogoRow {
            n,
            k,
            m,
            r,
            var_p,
            mixture_bound,
        });
    }
    let ln_n: Vec<f64> = rows.iter().map(|r| (r.n as f64).ln()).collect();
    let ln_v: Vec<f64> = rows.iter().map(|r| r.var_p.ln()).collect();
    let ln_b: Vec<f64> = rows.iter().map(|r| r.mixture_bound.ln()).collect();
    Ok(NogoTable {
        alpha,
        slope_var: fit_slope(&ln_n, &ln_v)?,
        slope_bound: fit_slope(&ln_n, &ln_b)?,
        rows,
        rounding: "floor",
    })
}
