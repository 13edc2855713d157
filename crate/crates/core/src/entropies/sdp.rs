use super::conditional::{identity_kron, trace_a};
use super::{split_dims, EntropyResult, SolverConfig};
use crate::error::{Error, Result};
use crate::linalg::{
    c, eigh_matrix, hermitian_part, power_matrix, re_trace_product, DensityOperator, Dims, Matrix,
    Operator,
};
use nalgebra::{Cholesky, DMatrix, DVector};

/// Largest total dimension for the certified semidefinite path.
pub const MAX_SDP_DIM: usize = 256;

/// Target for the certified duality gap of `h_min`.
pub const HMIN_GAP_TOL: f64 = 1e-6;

/// `min ⟨C, X⟩` subject to `⟨A_i, X⟩ = b_i`, `X ⪰ 0`, with dual
/// `max b·y` subject to `C − Σ y_i A_i ⪰ 0`. All matrices Hermitian.
#[derive(Clone, Debug)]
pub struct SdpProblem {
    pub c: Matrix,
    pub a: Vec<Matrix>,
    pub b: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct SdpSolution {
    pub x: Matrix,
    pub y: Vec<f64>,
    pub s: Matrix,
    pub primal: f64,
    pub dual: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn inner(a: &Matrix, b: &Matrix) -> f64 {
    re_trace_product(a, b)
}

fn frob(a: &Matrix) -> f64 {
    a.norm()
}

/// Largest `t ≤ ∞` with `x + t·dx ⪰ 0`, for positive definite `x`.
fn max_step(x: &Matrix, dx: &Matrix) -> f64 {
    let Some(ch) = Cholesky::new(x.clone()) else {
        return 0.0;
    };
    let l = ch.l();
    let Some(w) = l.solve_lower_triangular(dx) else {
        return 0.0;
    };
    let Some(z) = l.solve_lower_triangular(&w.adjoint()) else {
        return 0.0;
    };
    let min = eigh_matrix(&z).min();
    if min >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / min
    }
}

/// Infeasible primal–dual path following with the HKM search direction and
/// Mehrotra's predictor–corrector step.
pub fn solve_sdp(p: &SdpProblem, tol: f64, max_iters: usize) -> Result<SdpSolution> {
    let n = p.c.nrows();
    let m = p.a.len();
    if p.b.len() != m || p.a.iter().any(|a| a.shape() != (n, n)) {
        return Err(Error::mismatch("SDP constraint shapes"));
    }
    let norm_c = frob(&p.c);
    let norm_b = p.b.iter().map(|v| v * v).sum::<f64>().sqrt();
    let sqrt_n = (n as f64).sqrt();
    let xi_x =
        p.a.iter()
            .zip(&p.b)
            .map(|(a, b)| sqrt_n * (1.0 + b.abs()) / (1.0 + frob(a)))
            .fold(10.0f64, f64::max);
    let xi_s =
        p.a.iter()
            .map(frob)
            .fold(10.0f64.max(sqrt_n).max(norm_c), f64::max);
    let mut x = Matrix::identity(n, n) * c(xi_x);
    let mut s = Matrix::identity(n, n) * c(xi_s);
    let mut y = vec![0.0; m];

    let a_star = |v: &[f64]| -> Matrix {
        let mut out = Matrix::zeros(n, n);
        for (ai, vi) in p.a.iter().zip(v) {
            out += ai * c(*vi);
        }
        out
    };
    let op_a = |z: &Matrix| -> Vec<f64> { p.a.iter().map(|ai| inner(ai, z)).collect() };

    let mut iterations = 0;
    let mut converged = false;
    for it in 0..max_iters {
        iterations = it;
        let primal = inner(&p.c, &x);
        let dual: f64 = p.b.iter().zip(&y).map(|(b, y)| b * y).sum();
        let ax = op_a(&x);
        let rp: Vec<f64> = p.b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let rd = &p.c - &s - a_star(&y);
        let pinf = rp.iter().map(|v| v * v).sum::<f64>().sqrt() / (1.0 + norm_b);
        let dinf = frob(&rd) / (1.0 + norm_c);
        let gap = (primal - dual).abs() / (1.0 + primal.abs() + dual.abs());
        if pinf < tol && dinf < tol && gap < tol {
            converged = true;
            break;
        }
        let mu = inner(&x, &s) / n as f64;

        let Some(s_chol) = Cholesky::new(hermitian_part(&s)) else {
            break;
        };
        let s_inv = s_chol.inverse();
        let mut schur = DMatrix::<f64>::zeros(m, m);
        let t: Vec<Matrix> = p.a.iter().map(|aj| &x * aj * &s_inv).collect();
        for j in 0..m {
            for i in j..m {
                let v = inner(&p.a[i], &t[j]);
                schur[(i, j)] = v;
                schur[(j, i)] = v;
            }
        }
        let Some(schur_chol) = schur.cholesky() else {
            break;
        };
        let xs = &x * &s;
        let x_rd = &x * &rd;
        let direction = |rc: &Matrix| -> (Vec<f64>, Matrix, Matrix) {
            let base = (rc - &x_rd) * &s_inv;
            let rhs = DVector::from_iterator(m, op_a(&base).iter().zip(&rp).map(|(ab, r)| r - ab));
            let dy = schur_chol.solve(&rhs);
            let dy: Vec<f64> = dy.iter().copied().collect();
            let ds = &rd - a_star(&dy);
            let dx = hermitian_part(&((rc - &x * &ds) * &s_inv));
            (dy, dx, ds)
        };
        let (_, dx_a, ds_a) = direction(&(-&xs));
        let ap = max_step(&x, &dx_a).min(1.0);
        let ad = max_step(&s, &ds_a).min(1.0);
        let mu_aff = inner(&(&x + &dx_a * c(ap)), &(&s + &ds_a * c(ad))) / n as f64;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);
        let rc = Matrix::identity(n, n) * c(sigma * mu) - &xs - &dx_a * &ds_a;
        let (dy, dx, ds) = direction(&rc);
        let ap = (0.95 * max_step(&x, &dx)).min(1.0);
        let ad = (0.95 * max_step(&s, &ds)).min(1.0);
        x = hermitian_part(&(&x + &dx * c(ap)));
        s = hermitian_part(&(&s + &ds * c(ad)));
        for (yi, di) in y.iter_mut().zip(&dy) {
            *yi += ad * di;
        }
        iterations = it + 1;
    }
    let primal = inner(&p.c, &x);
    let dual = p.b.iter().zip(&y).map(|(b, y)| b * y).sum();
    Ok(SdpSolution {
        x,
        y,
        s,
        primal,
        dual,
        iterations,
        converged,
    })
}

/// Orthonormal Hermitian basis of `d × d` matrices.
fn hermitian_basis(d: usize) -> Vec<Matrix> {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::with_capacity(d * d);
    for p in 0..d {
        let mut e = Matrix::zeros(d, d);
        e[(p, p)] = c(1.0);
        out.push(e);
    }
    for p in 0..d {
        for q in p + 1..d {
            let mut e = Matrix::zeros(d, d);
            e[(p, q)] = c(r);
            e[(q, p)] = c(r);
            out.push(e);
            let mut f = Matrix::zeros(d, d);
            f[(p, q)] = crate::linalg::C64::new(0.0, -r);
            f[(q, p)] = crate::linalg::C64::new(0.0, r);
            out.push(f);
        }
    }
    out
}

/// Certified solution of `2^{−H_min(A|B)} = min{tr σ : I_A ⊗ σ ⪰ ρ}
/// = max{tr ρX : X ⪰ 0, tr_A X ⪯ I_B}`.
#[derive(Clone, Debug)]
pub struct HminCertificate {
    /// Primal feasible, unnormalized `σ_B`.
    pub sigma: Operator,
    /// Dual feasible `X_AB`.
    pub x: Operator,
    pub primal: f64,
    pub dual: f64,
}

impl HminCertificate {
    pub fn gap(&self) -> f64 {
        self.primal - self.dual
    }
}

/// Independent recheck of an `h_min` certificate: violations of
/// `I⊗σ ⪰ ρ`, `X ⪰ 0` and `tr_A X ⪯ I`, plus the recomputed gap.
#[derive(Clone, Copy, Debug)]
pub struct CertificateCheck {
    pub primal_violation: f64,
    pub dual_psd_violation: f64,
    pub dual_constraint_violation: f64,
    pub gap: f64,
}

pub fn h_min_certificate_check(
    rho: &Operator,
    a: usize,
    cert: &HminCertificate,
) -> Result<CertificateCheck> {
    let (d_a, d_b) = split_dims(rho.dims(), a)?;
    let slack = identity_kron(d_a, cert.sigma.mat()) - rho.mat();
    let primal_violation = (-eigh_matrix(&slack).min()).max(0.0);
    let dual_psd_violation = (-eigh_matrix(cert.x.mat()).min()).max(0.0);
    let partial = trace_a(cert.x.mat(), d_a, d_b);
    let dual_constraint_violation = (eigh_matrix(&partial).max() - 1.0).max(0.0);
    let primal = cert.sigma.trace().re;
    let dual = re_trace_product(rho.mat(), cert.x.mat());
    Ok(CertificateCheck {
        primal_violation,
        dual_psd_violation,
        dual_constraint_violation,
        gap: primal - dual,
    })
}

/// Conditional min-entropy with a feasible primal/dual pair.
pub fn h_min_certified(rho: &Operator, a: usize) -> Result<(EntropyResult, HminCertificate)> {
    let (d_a, d_b) = split_dims(rho.dims(), a)?;
    if rho.dim() > MAX_SDP_DIM {
        return Err(Error::BudgetExceeded {
            dim: rho.dim(),
            max: MAX_SDP_DIM,
        });
    }
    let basis = hermitian_basis(d_b);
    let problem = SdpProblem {
        c: -rho.mat().clone(),
        a: basis.iter().map(|e| -identity_kron(d_a, e)).collect(),
        b: basis.iter().map(|e| -e.trace().re).collect(),
    };
    let sol = solve_sdp(&problem, 1e-10, 200)?;

    // Primal side: shift σ until I⊗σ ⪰ ρ holds exactly.
    let mut sigma = Matrix::zeros(d_b, d_b);
    for (e, yi) in basis.iter().zip(&sol.y) {
        sigma += e * c(*yi);
    }
    let slack_min = eigh_matrix(&(identity_kron(d_a, &sigma) - rho.mat())).min();
    if slack_min < 0.0 {
        sigma += Matrix::identity(d_b, d_b) * c(-slack_min * (1.0 + 1e-12));
    }
    let primal = sigma.trace().re;

    // Dual side: clip to PSD, then rescale so that tr_A X ⪯ I.
    let ex = eigh_matrix(&sol.x);
    let mut x = ex.apply(|l| l.max(0.0));
    let top = eigh_matrix(&trace_a(&x, d_a, d_b)).max();
    if top > 0.0 {
        x *= c(1.0 / top);
    }
    let dual = re_trace_product(rho.mat(), &x);

    let b_dims = Dims::unbounded(rho.dims().factors()[a..].to_vec())?;
    let sigma_op = Operator::new(b_dims, sigma)?;
    let x_op = Operator::new(rho.dims().clone(), x)?;
    let gap = primal - dual;
    let result = EntropyResult {
        value: -primal.log2(),
        optimizer: Some(sigma_op.scale(1.0 / primal)),
        certificate: Some(x_op.clone()),
        duality_gap: Some(gap),
        iterations: sol.iterations,
        stale: !(gap <= HMIN_GAP_TOL),
    };
    Ok((
        result,
        HminCertificate {
            sigma: sigma_op,
            x: x_op,
            primal,
            dual,
        },
    ))
}

/// `H_min(A|B) = −log min{tr σ : I_A ⊗ σ ⪰ ρ}`.
pub fn h_min(rho: &Operator, a: usize) -> Result<EntropyResult> {
    Ok(h_min_certified(rho, a)?.0)
}

/// `√F(ρ, I_A ⊗ σ)` maximized over states `σ` by alternating between the
/// polar unitary of `√ρ (I ⊗ √σ)` and the optimal `√σ` for that unitary.
fn max_root_fidelity(
    rho: &Matrix,
    d_a: usize,
    d_b: usize,
    cfg: &SolverConfig,
) -> (f64, Matrix, usize, bool) {
    let r = power_matrix(rho, 0.5);
    let rho_b = trace_a(rho, d_a, d_b);
    let mut z = power_matrix(&rho_b, 0.5);
    z /= c(z.norm());
    let mut best = 0.0;
    for it in 0..cfg.max_iters.max(1) {
        let k = &r * identity_kron(d_a, &z);
        let svd = k.svd(true, true);
        let value: f64 = svd.singular_values.iter().sum();
        let (u, vt) = (svd.u.expect("u"), svd.v_t.expect("v_t"));
        let polar = vt.adjoint() * u.adjoint();
        let h = hermitian_part(&trace_a(&(&polar * &r), d_a, d_b));
        let eh = eigh_matrix(&h);
        let pos = eh.apply(|l| l.max(0.0));
        let norm = pos.norm();
        if norm <= 0.0 {
            return (value, &z * z.adjoint(), it + 1, true);
        }
        let next = pos / c(norm);
        let done = value - best <= 1e-15 * value.max(1.0) && it > 0;
        best = best.max(value);
        z = next;
        if done {
            return (best, &z * &z, it + 1, true);
        }
    }
    (best, &z * &z, cfg.max_iters, false)
}

/// `H_max(A|B) = log max_σ F(ρ_AB, I_A ⊗ σ_B)`. The duality gap reports
/// how far the value sits below the certified upper bound
/// `−H_min(A|C)` on the canonical purification.
pub fn h_max(rho: &Operator, a: usize, cfg: &SolverConfig) -> Result<EntropyResult> {
    let (d_a, d_b) = split_dims(rho.dims(), a)?;
    let (root_f, sigma, iterations, converged) = max_root_fidelity(rho.mat(), d_a, d_b, cfg);
    let value = 2.0 * root_f.log2();
    let b_dims = Dims::unbounded(rho.dims().factors()[a..].to_vec())?;
    let mut result = EntropyResult {
        value,
        optimizer: Some(Operator::new(b_dims, hermitian_part(&sigma))?),
        certificate: None,
        duality_gap: None,
        iterations,
        stale: !converged,
    };
    let psi = crate::states::purify(&DensityOperator::from_trusted(rho.clone()))?;
    let rho_ac = psi.marginal(&(0..a).chain([rho.dims().len()]).collect::<Vec<_>>())?;
    if rho_ac.dim() <= MAX_SDP_DIM {
        let (_, cert) = h_min_certified(&rho_ac, a)?;
        result.duality_gap = Some(cert.primal.log2() - value);
    }
    Ok(result)
}
