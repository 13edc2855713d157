use super::divergence::sandwiched_trace;
use super::{
    conditional_entropy, h_max, h_min, split_dims, EntropyResult, RenyiOrder, SolverConfig,
};
use crate::error::{Error, Result};
use crate::linalg::{c, eigh_matrix, power_matrix, Dims, Matrix, Operator};
use crate::rng;
use crate::states::random_density;

/// Largest total dimension accepted by the iterative solver.
pub const MAX_SOLVER_DIM: usize = 4096;

/// Smallest eigenvalue kept on the compressed `B` space during projection.
const EIG_FLOOR: f64 = 1e-12;

/// `I_A ⊗ x`.
pub(crate) fn identity_kron(d_a: usize, x: &Matrix) -> Matrix {
    let d_b = x.nrows();
    let mut out = Matrix::zeros(d_a * d_b, d_a * d_b);
    for a in 0..d_a {
        out.view_mut((a * d_b, a * d_b), (d_b, d_b)).copy_from(x);
    }
    out
}

/// `tr_A x` for `x` on `A ⊗ B`.
pub(crate) fn trace_a(x: &Matrix, d_a: usize, d_b: usize) -> Matrix {
    let mut out = Matrix::zeros(d_b, d_b);
    for a in 0..d_a {
        out += x.view((a * d_b, a * d_b), (d_b, d_b));
    }
    out
}

/// `(I_A ⊗ V)† x (I_A ⊗ V)` for `V` with orthonormal columns.
fn compress_b(x: &Matrix, d_a: usize, v: &Matrix) -> Matrix {
    let (d_b, k) = v.shape();
    let mut out = Matrix::zeros(d_a * k, d_a * k);
    for a in 0..d_a {
        for b in 0..d_a {
            let block = x.view((a * d_b, b * d_b), (d_b, d_b));
            out.view_mut((a * k, b * k), (k, k))
                .copy_from(&(v.adjoint() * block * v));
        }
    }
    out
}

/// Euclidean projection onto `{σ : σ ⪰ floor·I, tr σ = 1}`.
fn project_to_states(x: &Matrix, floor: f64) -> Matrix {
    let e = eigh_matrix(x);
    let k = e.values.len();
    let budget = 1.0 - floor * k as f64;
    let shifted: Vec<f64> = e.values.iter().map(|l| l - floor).collect();
    let mut sorted = shifted.clone();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut acc = 0.0;
    let mut tau = 0.0;
    for (i, &s) in sorted.iter().enumerate() {
        acc += s;
        let t = (acc - budget) / (i + 1) as f64;
        if s - t > 0.0 {
            tau = t;
        }
    }
    e.apply(|l| (l - floor - tau).max(0.0) + floor)
}

/// Frobenius inner product `Re tr(a† b)`.
fn inner(a: &Matrix, b: &Matrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

/// Smooth objective `σ ↦ D_α(ρ ‖ I_A ⊗ σ)` for finite `α ≠ 1`.
struct Objective {
    sqrt_rho: Matrix,
    d_a: usize,
    alpha: f64,
}

impl Objective {
    fn value(&self, sigma: &Matrix) -> f64 {
        let q = sandwiched_trace(&self.sqrt_rho, &identity_kron(self.d_a, sigma), self.alpha);
        if q <= 0.0 {
            return f64::INFINITY;
        }
        q.log2() / (self.alpha - 1.0)
    }

    /// Value and gradient. With `β = (1−α)/α`, `Y = √ρ (I⊗σ^β) √ρ` and
    /// `M = √ρ Y^{α−1} √ρ`, `dQ = α tr[tr_A(M) d(σ^β)]`; the derivative of the
    /// matrix power is the divided-difference (Daleckii–Krein) formula in the
    /// eigenbasis of `σ`.
    fn value_and_gradient(&self, sigma: &Matrix) -> (f64, Matrix) {
        let alpha = self.alpha;
        let beta = (1.0 - alpha) / alpha;
        let es = eigh_matrix(sigma);
        let k = es.values.len();
        let s_beta = es.apply(|l| l.max(EIG_FLOOR).powf(beta));
        let y = &self.sqrt_rho * identity_kron(self.d_a, &s_beta) * &self.sqrt_rho;
        let ey = eigh_matrix(&y);
        let cut = ey.support_cutoff();
        let q: f64 = ey
            .values
            .iter()
            .filter(|&&l| l > cut)
            .map(|&l| l.powf(alpha))
            .sum();
        let y_pow = ey.apply(|l| if l > cut { l.powf(alpha - 1.0) } else { 0.0 });
        let m = &self.sqrt_rho * y_pow * &self.sqrt_rho;
        let g = trace_a(&m, self.d_a, k);
        let u = &es.vectors;
        let mut gt = u.adjoint() * g * u;
        let s: Vec<f64> = es.values.iter().map(|l| l.max(EIG_FLOOR)).collect();
        for i in 0..k {
            for j in 0..k {
                let (si, sj) = (s[i], s[j]);
                let dd = if (si - sj).abs() <= 1e-10 * si.max(sj) {
                    beta * (0.5 * (si + sj)).powf(beta - 1.0)
                } else {
                    (si.powf(beta) - sj.powf(beta)) / (si - sj)
                };
                gt[(i, j)] *= c(dd);
            }
        }
        let dq = u * gt * u.adjoint() * c(alpha);
        let value = q.log2() / (alpha - 1.0);
        let grad = dq * c(1.0 / ((alpha - 1.0) * std::f64::consts::LN_2 * q));
        (value, crate::linalg::hermitian_part(&grad))
    }
}

struct Descent {
    sigma: Matrix,
    value: f64,
    iterations: usize,
    converged: bool,
}

/// Projected gradient descent with Barzilai–Borwein initial steps and
/// Armijo backtracking.
fn descend(obj: &Objective, start: Matrix, cfg: &SolverConfig) -> Descent {
    let mut sigma = project_to_states(&start, EIG_FLOOR);
    let (mut f, mut g) = obj.value_and_gradient(&sigma);
    let mut step = 1.0;
    let mut prev: Option<(Matrix, Matrix)> = None;
    let mut small = 0;
    for it in 0..cfg.max_iters {
        if let Some((ps, pg)) = &prev {
            let ds = &sigma - ps;
            let dg = &g - pg;
            let sy = inner(&ds, &dg);
            if sy > 1e-300 {
                step = (inner(&ds, &ds) / sy).clamp(1e-10, 1e10);
            }
        }
        let mut t = step;
        let mut accepted = None;
        for _ in 0..60 {
            let cand = project_to_states(&(&sigma - &g * c(t)), EIG_FLOOR);
            let d = &cand - &sigma;
            let fc = obj.value(&cand);
            if fc <= f + inner(&g, &d) + inner(&d, &d) / (2.0 * t) + 1e-15 * f.abs() {
                accepted = Some((cand, fc, d));
                break;
            }
            t *= 0.5;
        }
        let Some((cand, fc, d)) = accepted else {
            return Descent {
                sigma,
                value: f,
                iterations: it,
                converged: true,
            };
        };
        let moved = d.norm();
        let decrease = f - fc;
        prev = Some((sigma, g));
        sigma = cand;
        let (fv, gv) = obj.value_and_gradient(&sigma);
        f = fv;
        g = gv;
        if decrease.abs() <= 1e-4 * cfg.tol && moved <= 1e-7 {
            small += 1;
            if small >= 3 {
                return Descent {
                    sigma,
                    value: f,
                    iterations: it + 1,
                    converged: true,
                };
            }
        } else {
            small = 0;
        }
    }
    Descent {
        sigma,
        value: f,
        iterations: cfg.max_iters,
        converged: false,
    }
}

/// `D_α(ρ_AB ‖ I_A ⊗ σ_B)` for a given `σ_B`.
pub fn cond_renyi_objective(rho: &Operator, a: usize, alpha: f64, sigma_b: &Matrix) -> Result<f64> {
    let (d_a, d_b) = split_dims(rho.dims(), a)?;
    if sigma_b.nrows() != d_b {
        return Err(Error::mismatch("σ_B dimension"));
    }
    let lifted = Operator::new(rho.dims().clone(), identity_kron(d_a, sigma_b))?;
    super::sandwiched_divergence(rho, &lifted, RenyiOrder::new(alpha)?)
}

/// `H_α(A|B) = −min_σ D_α(ρ_AB ‖ I_A ⊗ σ_B)`.
///
/// `One` and `Infinity` use the von Neumann and semidefinite paths, `Half`
/// the fidelity maximization. Other orders run multi-start projected
/// gradient on the states of `B`, restricted to the support of `ρ_B`
/// (mass outside it can only increase the divergence).
pub fn cond_renyi(
    rho: &Operator,
    a: usize,
    order: RenyiOrder,
    cfg: &SolverConfig,
) -> Result<EntropyResult> {
    let (d_a, d_b) = split_dims(rho.dims(), a)?;
    match order {
        RenyiOrder::One => {
            let b: Vec<usize> = (a..rho.dims().len()).collect();
            let mut r = EntropyResult::exact(conditional_entropy(rho, a)?);
            r.optimizer = Some(rho.marginal(&b)?);
            return Ok(r);
        }
        RenyiOrder::Infinity => return h_min(rho, a),
        RenyiOrder::Half => return h_max(rho, a, cfg),
        RenyiOrder::Alpha(_) => {}
    }
    if rho.dim() > MAX_SOLVER_DIM {
        return Err(Error::BudgetExceeded {
            dim: rho.dim(),
            max: MAX_SOLVER_DIM,
        });
    }
    let alpha = order.value();
    let rho_b = trace_a(rho.mat(), d_a, d_b);
    let eb = eigh_matrix(&rho_b);
    let cut = eb.support_cutoff();
    let support: Vec<usize> = (0..d_b).filter(|&i| eb.values[i] > cut).collect();
    let k = support.len();
    let v = Matrix::from_fn(d_b, k, |i, j| eb.vectors[(i, support[j])]);
    let rho_c = if k < d_b {
        compress_b(rho.mat(), d_a, &v)
    } else {
        rho.mat().clone()
    };
    let obj = Objective {
        sqrt_rho: power_matrix(&rho_c, 0.5),
        d_a,
        alpha,
    };

    let mut starts = vec![
        Matrix::from_diagonal(&nalgebra::DVector::from_iterator(
            k,
            support.iter().map(|&i| c(eb.values[i])),
        )),
        Matrix::identity(k, k) * c(1.0 / k as f64),
    ];
    let mut g = rng::stream(cfg.seed, 0x5eed_c0d3);
    while starts.len() < cfg.starts.max(1) {
        starts.push(random_density(Dims::single(k), None, &mut g)?.mat().clone());
    }
    starts.truncate(cfg.starts.max(1));

    let mut best: Option<Descent> = None;
    let mut iterations = 0;
    for s in starts {
        let d = descend(&obj, s, cfg);
        iterations += d.iterations;
        if best.as_ref().is_none_or(|b| d.value < b.value) {
            best = Some(d);
        }
    }
    let best = best.expect("at least one start");
    if !best.value.is_finite() {
        return Err(Error::NonConvergence(
            "conditional Rényi objective is not finite".into(),
        ));
    }
    let full = if k < d_b {
        &v * &best.sigma * v.adjoint()
    } else {
        best.sigma.clone()
    };
    let b_dims = Dims::unbounded(rho.dims().factors()[a..].to_vec())?;
    Ok(EntropyResult {
        value: -best.value,
        optimizer: Some(Operator::new(b_dims, full)?),
        certificate: None,
        duality_gap: None,
        iterations,
        stale: !best.converged,
    })
}
