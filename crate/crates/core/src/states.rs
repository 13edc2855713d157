//! States, measurements and classical distributions.

use rand::RngExt;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    c, DensityOperator, Dims, Matrix, Operator, PureState, Vector, C64, ONE, ZERO,
};
use crate::rng::Prng;

/// Largest outcome alphabet `|X|^n` that is enumerated exhaustively.
pub const MAX_OUTCOMES: usize = 65536;

#[derive(Clone, Debug)]
pub struct Povm {
    elements: Vec<Operator>,
    labels: Vec<String>,
}

impl Povm {
    pub fn new(elements: Vec<Operator>, labels: Vec<String>) -> Result<Self> {
        if elements.is_empty() || elements.len() != labels.len() {
            return Err(Error::invalid("POVM needs one label per element"));
        }
        let dims = elements[0].dims().clone();
        let mut sum = Operator::zeros(dims.clone());
        for m in &elements {
            if m.dims() != &dims {
                return Err(Error::mismatch("POVM elements act on different spaces"));
            }
            if !m.is_hermitian(1e-10) {
                return Err(Error::NotHermitian(crate::linalg::hermitian_deviation(
                    m.mat(),
                )));
            }
            let min = m.min_eigenvalue();
            if min < -1e-10 {
                return Err(Error::NotPositive(min));
            }
            sum = sum.add(m)?;
        }
        let dev = sum.sub(&Operator::identity(dims))?.max_abs();
        if dev > 1e-10 {
            return Err(Error::invalid(format!(
                "POVM elements sum to identity only within {dev:e}"
            )));
        }
        Ok(Povm { elements, labels })
    }

    /// Projective measurement in the standard basis of `C^d`.
    pub fn computational(d: usize) -> Self {
        let dims = Dims::single(d);
        let elements = (0..d)
            .map(|i| {
                PureState::basis(dims.clone(), i)
                    .and_then(|p| p.projector())
                    .expect("basis projector")
            })
            .collect();
        Povm {
            elements,
            labels: (0..d).map(|i| i.to_string()).collect(),
        }
    }

    pub fn elements(&self) -> &[Operator] {
        &self.elements
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn site_dim(&self) -> usize {
        self.elements[0].dim()
    }

    /// Single-site distribution `P_X(x) = tr[M_x σ]`.
    pub fn distribution(&self, sigma: &DensityOperator) -> Result<ClassicalDistribution> {
        outcome_distribution(sigma, self, 1)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassicalDistribution {
    pub labels: Vec<String>,
    pub probs: Vec<f64>,
}

impl ClassicalDistribution {
    pub fn new(labels: Vec<String>, probs: Vec<f64>) -> Result<Self> {
        if labels.len() != probs.len() {
            return Err(Error::mismatch("labels and probabilities differ in length"));
        }
        if let Some(p) = probs.iter().find(|p| !(**p >= 0.0)) {
            return Err(Error::invalid(format!("negative or NaN probability {p}")));
        }
        let s: f64 = probs.iter().sum();
        if (s - 1.0).abs() > 1e-12 * (probs.len() as f64).max(1.0) {
            return Err(Error::NotNormalized(s));
        }
        Ok(ClassicalDistribution { labels, probs })
    }

    pub fn from_probs(probs: Vec<f64>) -> Result<Self> {
        let labels = (0..probs.len()).map(|i| i.to_string()).collect();
        ClassicalDistribution::new(labels, probs)
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// `‖p − q‖₁` over aligned outcomes.
    pub fn l1_distance(&self, other: &ClassicalDistribution) -> Result<f64> {
        if self.len() != other.len() {
            return Err(Error::mismatch("distributions over different alphabets"));
        }
        Ok(self
            .probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .sum())
    }

    /// Draw `count` outcome indices by inverse-CDF sampling.
    pub fn sample(&self, count: usize, rng: &mut Prng) -> Vec<usize> {
        let mut cdf = Vec::with_capacity(self.len());
        let mut acc = 0.0;
        for p in &self.probs {
            acc += p;
            cdf.push(acc);
        }
        (0..count)
            .map(|_| {
                let u: f64 = rng.random::<f64>() * acc;
                cdf.partition_point(|&x| x <= u).min(self.len() - 1)
            })
            .collect()
    }
}

/// Canonical purification `Σ_i √λ_i |e_i⟩|i⟩_E`: eigenvalues descending,
/// first nonzero entry of each `e_i` real positive, `dim E = rank ρ`.
pub fn purify(rho: &DensityOperator) -> Result<PureState> {
    let rank = rank(rho);
    purify_into(rho, rank)
}

pub fn rank(rho: &DensityOperator) -> usize {
    let e = rho.op().eigh();
    let cut = e.support_cutoff();
    e.values.iter().filter(|&&l| l > cut).count()
}

/// Canonical purification padded to an environment of dimension `d_e ≥ rank`.
pub fn purify_into(rho: &DensityOperator, d_e: usize) -> Result<PureState> {
    let e = rho.op().eigh();
    let cut = e.support_cutoff();
    let d = rho.dim();
    let mut order: Vec<usize> = (0..d).filter(|&k| e.values[k] > cut).collect();
    order.reverse();
    if order.len() > d_e {
        return Err(Error::invalid(format!(
            "environment of dimension {d_e} cannot purify rank {}",
            order.len()
        )));
    }
    let mut amps = Vector::zeros(d * d_e);
    let wsum: f64 = order.iter().map(|&k| e.values[k]).sum();
    for (i, &k) in order.iter().enumerate() {
        let mut v = e.vectors.column(k).into_owned();
        if let Some(first) = v.iter().find(|z| z.norm() > 1e-12).copied() {
            let phase = first.conj() / c(first.norm());
            v *= phase;
        }
        let w = (e.values[k] / wsum).sqrt();
        for a in 0..d {
            amps[a * d_e + i] = v[a] * c(w);
        }
    }
    let dims = rho.dims().concat(&Dims::single(d_e));
    PureState::normalized(Dims::new(dims.factors().to_vec())?, amps)
}

/// Diagonal embedding `Σ_x p(x)|x⟩⟨x|`.
pub fn embed_classical(p: &ClassicalDistribution) -> Result<DensityOperator> {
    let op = Operator::diagonal(Dims::single(p.len()), &p.probs)?;
    Ok(DensityOperator::from_trusted(op))
}

/// Distribution of `n` sequential single-site measurements on an `n`-site
/// state. Outcome labels join site labels with commas, last site fastest.
pub fn outcome_distribution(
    rho: &DensityOperator,
    povm: &Povm,
    n: usize,
) -> Result<ClassicalDistribution> {
    let d = povm.site_dim();
    if rho.dim() != d.pow(n as u32) {
        return Err(Error::mismatch(format!(
            "state of dimension {} is not {n} sites of dimension {d}",
            rho.dim()
        )));
    }
    let count = povm
        .len()
        .checked_pow(n as u32)
        .filter(|&c| c <= MAX_OUTCOMES);
    let count = count.ok_or_else(|| {
        Error::invalid(format!(
            "{}^{n} outcomes exceed the enumeration budget",
            povm.len()
        ))
    })?;
    let mut probs = Vec::with_capacity(count);
    measure_sites(rho.mat(), povm, d, n, &mut probs);
    if let Some(p) = probs.iter().find(|&&p| p < -1e-10) {
        return Err(Error::NotPositive(*p));
    }
    let probs: Vec<f64> = probs.into_iter().map(|p| p.max(0.0)).collect();
    let total: f64 = probs.iter().sum();
    let probs = probs.into_iter().map(|p| p / total).collect();
    let labels = outcome_labels(povm.labels(), n);
    ClassicalDistribution::new(labels, probs)
}

fn outcome_labels(site: &[String], n: usize) -> Vec<String> {
    let mut labels = vec![String::new()];
    for k in 0..n {
        let mut next = Vec::with_capacity(labels.len() * site.len());
        for l in &labels {
            for s in site {
                next.push(if k == 0 {
                    s.clone()
                } else {
                    format!("{l},{s}")
                });
            }
        }
        labels = next;
    }
    labels
}

fn measure_sites(rho: &Matrix, povm: &Povm, d: usize, n: usize, out: &mut Vec<f64>) {
    if n == 0 {
        out.push(rho[(0, 0)].re);
        return;
    }
    let rest = rho.nrows() / d;
    for m in povm.elements() {
        let mm = m.mat();
        let mut red = Matrix::zeros(rest, rest);
        for a in 0..d {
            for b in 0..d {
                let w = mm[(a, b)];
                if w == ZERO {
                    continue;
                }
                red += rho.view((b * rest, a * rest), (rest, rest)) * w;
            }
        }
        measure_sites(&red, povm, d, n - 1, out);
    }
}

/// Empirical frequencies of outcome indices over an alphabet of `size`.
pub fn frequency_distribution(outcomes: &[usize], size: usize) -> Result<ClassicalDistribution> {
    if outcomes.is_empty() {
        return Err(Error::invalid("empty outcome sequence"));
    }
    let mut counts = vec![0usize; size];
    for &x in outcomes {
        if x >= size {
            return Err(Error::invalid(format!(
                "outcome {x} outside alphabet of size {size}"
            )));
        }
        counts[x] += 1;
    }
    let n = outcomes.len() as f64;
    ClassicalDistribution::from_probs(counts.into_iter().map(|k| k as f64 / n).collect())
}

/// Expansion `Θ = Σ_j α_j |Ψ_j⟩ ⊗ |h_j⟩` of a vector on `A ⊗ H` in an
/// orthonormal basis of `A`, with `α_j ≥ 0` and unit `h_j`.
#[derive(Clone, Debug)]
pub struct BasisDecomposition {
    pub alphas: Vec<C64>,
    pub components: Vec<Vector>,
    pub residual: f64,
}

pub fn preferred_basis_decomposition(
    theta: &Vector,
    basis: &[Vector],
) -> Result<BasisDecomposition> {
    let da = basis
        .first()
        .map(|b| b.len())
        .ok_or_else(|| Error::invalid("empty basis"))?;
    if !theta.len().is_multiple_of(da) {
        return Err(Error::mismatch(
            "vector length is not a multiple of the basis dimension",
        ));
    }
    let dh = theta.len() / da;
    let mut alphas = Vec::with_capacity(basis.len());
    let mut components = Vec::with_capacity(basis.len());
    let mut recon = Vector::zeros(theta.len());
    for psi in basis {
        let mut h = Vector::zeros(dh);
        for a in 0..da {
            let w = psi[a].conj();
            for k in 0..dh {
                h[k] += w * theta[a * dh + k];
            }
        }
        let alpha = h.norm();
        if alpha > 0.0 {
            h /= c(alpha);
        }
        recon += psi.kronecker(&h) * c(alpha);
        alphas.push(c(alpha));
        components.push(h);
    }
    let residual = (theta - recon).norm();
    Ok(BasisDecomposition {
        alphas,
        components,
        residual,
    })
}

fn gaussian_matrix(rows: usize, cols: usize, rng: &mut Prng) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        C64::new(re, im)
    })
}

/// `GG†/tr(GG†)` for a `d × rank` complex Gaussian `G`.
pub fn random_density(dims: Dims, rank: Option<usize>, rng: &mut Prng) -> Result<DensityOperator> {
    let d = dims.total();
    let k = rank.unwrap_or(d);
    if k == 0 || k > d {
        return Err(Error::invalid(format!("rank {k} outside 1..={d}")));
    }
    let g = gaussian_matrix(d, k, rng);
    DensityOperator::normalize(Operator::new(dims, &g * g.adjoint())?)
}

pub fn random_pure(dims: Dims, rng: &mut Prng) -> Result<PureState> {
    let g = gaussian_matrix(dims.total(), 1, rng);
    PureState::normalized(dims, g.column(0).into_owned())
}

/// Haar-random unitary from the QR decomposition of a Gaussian matrix.
pub fn random_unitary(d: usize, rng: &mut Prng) -> Matrix {
    let g = gaussian_matrix(d, d, rng);
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    let mut u = q;
    for j in 0..d {
        let z = r[(j, j)];
        let ph = if z.norm() > 0.0 { z / c(z.norm()) } else { ONE };
        for i in 0..d {
            u[(i, j)] *= ph;
        }
    }
    u
}

/// Two-qubit Bell basis `Φ⁺, Φ⁻, Ψ⁺, Ψ⁻`.
pub fn bell_basis() -> [Vector; 4] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let v = |a: [f64; 4]| Vector::from_iterator(4, a.iter().map(|&x| c(x * h)));
    [
        v([1.0, 0.0, 0.0, 1.0]),
        v([1.0, 0.0, 0.0, -1.0]),
        v([0.0, 1.0, 1.0, 0.0]),
        v([0.0, 1.0, -1.0, 0.0]),
    ]
}

pub fn singlet() -> PureState {
    PureState::new(Dims::new(vec![2, 2]).unwrap(), bell_basis()[3].clone()).unwrap()
}

pub fn bell_pair() -> PureState {
    PureState::new(Dims::new(vec![2, 2]).unwrap(), bell_basis()[0].clone()).unwrap()
}

/// Two-qubit state diagonal in the Bell basis with the given weights.
pub fn bell_diagonal(weights: [f64; 4]) -> Result<DensityOperator> {
    let mut m = Matrix::zeros(4, 4);
    for (w, b) in weights.iter().zip(bell_basis().iter()) {
        m += b * b.adjoint() * c(*w);
    }
    DensityOperator::new(Operator::new(Dims::new(vec![2, 2])?, m)?)
}
