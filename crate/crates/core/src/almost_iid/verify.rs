//! Membership checks, preferred-basis coefficients and the pinching inequality.

use super::basis::{apply_site_matrix, PreferredBasis};
use super::symmetrize::injective_placements;
use super::witness::{components, Extension, Witness, WitnessKind};
use crate::error::Result;
use crate::linalg::{c, eigh_matrix, max_abs, Dims, Matrix, PureState, Vector};
use crate::record::CertificationRecord;

pub const MEMBERSHIP_TOL: f64 = 1e-9;
pub const PINCHING_TOL: f64 = 1e-9;

/// Matrix `β_{ts} = ⟨Ψ_t|ρ_ext|Ψ_s⟩` over the preferred index set, plus an
/// upper bound on `‖(1 − Π_V) ρ_ext‖₁`.
#[derive(Clone, Debug)]
pub struct BetaMatrix {
    pub basis: PreferredBasis,
    pub beta: Matrix,
    pub support_residual: f64,
}

pub fn beta_matrix(w: &Witness) -> Result<BetaMatrix> {
    let basis = PreferredBasis::build(w.theta.amps(), w.n, w.r)?;
    let t = basis.len();
    let d = basis.site_dim();
    let ud = basis.site_basis().adjoint();
    let mut beta = Matrix::zeros(t, t);
    let mut support_residual = 0.0;
    match &w.extension {
        Extension::Placements(terms) => {
            let fps = w.factors_per_site();
            for term in terms {
                let kd = term.defect_sites(fps);
                let placements = injective_placements(w.n, kd);
                let pw = term.weight / placements.len() as f64;
                for (lambda, mut v) in components(&term.omega) {
                    for k in 0..kd {
                        apply_site_matrix(&mut v, &ud, kd, k);
                    }
                    let outside = outside_norm(&v, kd, d, w.r);
                    for pos in &placements {
                        let coeff = placement_coefficients(&basis, &v, pos, d);
                        support_residual += pw * lambda * outside;
                        beta += &coeff * coeff.adjoint() * c(pw * lambda);
                    }
                }
            }
        }
        Extension::Dense(x) => {
            let n = w.n;
            let mut rho = x.mat().clone();
            for j in 0..rho.ncols() {
                let mut col = rho.column(j).into_owned();
                for k in 0..n {
                    apply_site_matrix(&mut col, &ud, n, k);
                }
                rho.set_column(j, &col);
            }
            let mut rho = rho.adjoint();
            for j in 0..rho.ncols() {
                let mut col = rho.column(j).into_owned();
                for k in 0..n {
                    apply_site_matrix(&mut col, &ud, n, k);
                }
                rho.set_column(j, &col);
            }
            let rho = rho.adjoint();
            let idx: Vec<usize> = basis.labels().iter().map(|l| basis.flat_index(l)).collect();
            for (a, &ia) in idx.iter().enumerate() {
                for (b, &ib) in idx.iter().enumerate() {
                    beta[(a, b)] = rho[(ia, ib)];
                }
            }
            let mut inside = vec![false; rho.nrows()];
            for &i in &idx {
                inside[i] = true;
            }
            let outside: Vec<usize> = (0..rho.nrows()).filter(|&i| !inside[i]).collect();
            if !outside.is_empty() {
                let block =
                    Matrix::from_fn(outside.len(), rho.ncols(), |i, j| rho[(outside[i], j)]);
                let gram = &block * block.adjoint();
                support_residual = eigh_matrix(&gram)
                    .values
                    .iter()
                    .map(|l| l.max(0.0).sqrt())
                    .sum();
            }
        }
    }
    Ok(BetaMatrix {
        basis,
        beta,
        support_residual,
    })
}

/// Norm of the part of a `k`-site vector with more than `r` non-`θ` labels.
fn outside_norm(v: &Vector, k: usize, d: usize, r: usize) -> f64 {
    let mut sq = 0.0;
    for (idx, x) in v.iter().enumerate() {
        let mut rest = idx;
        let mut defects = 0;
        for _ in 0..k {
            defects += usize::from(rest % d != 0);
            rest /= d;
        }
        if defects > r {
            sq += x.norm_sqr();
        }
    }
    sq.sqrt()
}

/// Coefficients over the index set of one placed defect vector, given in
/// site-basis coordinates on its `k` defect sites.
fn placement_coefficients(basis: &PreferredBasis, v: &Vector, pos: &[usize], d: usize) -> Vector {
    let mut out = Vector::zeros(basis.len());
    let mut is_defect = vec![false; basis.n()];
    for &p in pos {
        is_defect[p] = true;
    }
    for (t, labels) in basis.labels().iter().enumerate() {
        if labels
            .iter()
            .enumerate()
            .any(|(p, &l)| l != 0 && !is_defect[p])
        {
            continue;
        }
        let idx = pos.iter().fold(0, |acc, &p| acc * d + labels[p]);
        out[t] = v[idx];
    }
    out
}

#[derive(Clone, Debug)]
pub struct MembershipReport {
    pub marginal_residual: f64,
    pub permutation_residual: f64,
    pub support_residual: f64,
    pub pass: bool,
    pub records: Vec<CertificationRecord>,
}

/// Check the three defining conditions of a witness:
/// the visible part reproduces the claimed state (and `θ` purifies `σ`),
/// the extension is invariant under the generators `(1 2)` and `(1 2 … n)`,
/// and the extension is supported on the span of the preferred basis.
pub fn verify_membership(w: &Witness) -> Result<MembershipReport> {
    let fv = w.visible_factors();
    let theta_marg = w.theta.marginal(&(0..fv).collect::<Vec<_>>())?;
    let mut marginal_residual = theta_marg.sub(w.sigma.op())?.max_abs();
    if let Some(claimed) = &w.claimed_visible {
        let vis = w.visible_marginal(w.n)?;
        marginal_residual = marginal_residual.max(vis.sub(claimed.op())?.max_abs());
    }
    let beta = beta_matrix(w)?;
    let permutation_residual = match w.kind {
        WitnessKind::Product => 0.0,
        WitnessKind::Symmetric => match &w.extension {
            Extension::Dense(x) => {
                let mut worst: f64 = 0.0;
                for perm in generators(w.n) {
                    let y =
                        crate::linalg::conjugate_by_permutation(x, &perm, w.factors_per_site())?;
                    worst = worst.max(y.sub(x)?.max_abs());
                }
                worst
            }
            Extension::Placements(_) => {
                let mut worst: f64 = 0.0;
                for perm in generators(w.n) {
                    let map: Vec<usize> = (0..beta.basis.len())
                        .map(|t| beta.basis.permuted_index(t, &perm))
                        .collect();
                    let permuted =
                        Matrix::from_fn(map.len(), map.len(), |a, b| beta.beta[(map[a], map[b])]);
                    worst = worst.max(max_abs(&(permuted - &beta.beta)));
                }
                worst
            }
        },
    };
    let support_residual = beta.support_residual;
    let anchor = "almost-iid-definition";
    let records = vec![
        CertificationRecord::le(
            "membership.marginal",
            anchor,
            marginal_residual,
            0.0,
            MEMBERSHIP_TOL,
        ),
        CertificationRecord::le(
            "membership.permutation",
            anchor,
            permutation_residual,
            0.0,
            MEMBERSHIP_TOL,
        )
        .with("kind", format!("{:?}", w.kind)),
        CertificationRecord::le(
            "membership.support",
            anchor,
            support_residual,
            0.0,
            MEMBERSHIP_TOL,
        ),
    ];
    let pass = records.iter().all(|r| r.pass);
    Ok(MembershipReport {
        marginal_residual,
        permutation_residual,
        support_residual,
        pass,
        records,
    })
}

/// Generators of `S_n`: the transposition of the first two sites and the full cycle.
pub fn generators(n: usize) -> Vec<Vec<usize>> {
    if n < 2 {
        return vec![];
    }
    let mut swap: Vec<usize> = (0..n).collect();
    swap.swap(0, 1);
    let cycle: Vec<usize> = (0..n).map(|i| (i + 1) % n).collect();
    if n == 2 {
        vec![swap]
    } else {
        vec![swap, cycle]
    }
}

#[derive(Clone, Debug)]
pub struct PinchingReport {
    pub index_count: usize,
    pub min_eigenvalue: f64,
    pub support_residual: f64,
    pub record: CertificationRecord,
}

/// Smallest eigenvalue of `|T| P(ρ_ext) − ρ_ext`, computed on the span of
/// the preferred basis where the extension is supported.
pub fn pinching_check(w: &Witness) -> Result<PinchingReport> {
    let beta = beta_matrix(w)?;
    let t = beta.basis.len();
    let mut m = -beta.beta.clone();
    for i in 0..t {
        m[(i, i)] += beta.beta[(i, i)] * c(t as f64);
    }
    let min = eigh_matrix(&m).min();
    let lhs = -min + beta.support_residual;
    let record = CertificationRecord::le(
        "pinching.min_eig",
        "pinching-inequality",
        lhs,
        0.0,
        PINCHING_TOL,
    )
    .with("n", w.n)
    .with("r", w.r)
    .with("index_count", t);
    Ok(PinchingReport {
        index_count: t,
        min_eigenvalue: min,
        support_residual: beta.support_residual,
        record,
    })
}

/// Largest overlap `‖Π_V (|Ψ⁻⟩_{A²} ⊗ |φ⟩_{E²})‖²` over antisymmetric `φ`,
/// for `θ = |0⟩_A|0⟩_E`, `n = 2`, `r = 1`. Any permutation-invariant
/// purification of `|Ψ⁻⟩` needs such a `φ`, so a value below one shows the
/// strict (purification-based) definition fails for `|Ψ⁻⟩`.
pub fn strict_definition_gap(d_e: usize) -> Result<f64> {
    if d_e < 2 {
        return Err(crate::Error::invalid(
            "an antisymmetric purifier needs d_E ≥ 2",
        ));
    }
    let mut theta = Vector::zeros(2 * d_e);
    theta[0] = c(1.0);
    let basis = PreferredBasis::build(&theta, 2, 1)?;
    let singlet = crate::states::singlet();
    let mut vecs: Vec<Vector> = Vec::new();
    for i in 0..d_e {
        for j in i + 1..d_e {
            let mut phi = Vector::zeros(d_e * d_e);
            phi[i * d_e + j] = c(std::f64::consts::FRAC_1_SQRT_2);
            phi[j * d_e + i] = c(-std::f64::consts::FRAC_1_SQRT_2);
            let psi = PureState::new(
                Dims::new(vec![2, 2, d_e, d_e])?,
                singlet.amps().kronecker(&phi),
            )?;
            vecs.push(psi.permute_factors(&[0, 2, 1, 3])?.amps().clone());
        }
    }
    let projected: Vec<Vector> = vecs
        .iter()
        .map(|v| {
            let coords = basis.to_site_coordinates(v);
            Vector::from_iterator(
                basis.len(),
                basis.labels().iter().map(|l| coords[basis.flat_index(l)]),
            )
        })
        .collect();
    let k = projected.len();
    let gram = Matrix::from_fn(k, k, |a, b| projected[a].dotc(&projected[b]));
    Ok(eigh_matrix(&gram).max())
}

/// Dense witness `|Ψ⁻⟩⟨Ψ⁻|_{A²} ⊗ |Ψ⁻⟩⟨Ψ⁻|_{E²}` with `θ = |0⟩|0⟩`: a
/// permutation-invariant purification that violates the support condition.
pub fn antisymmetric_purification_witness() -> Result<Witness> {
    let sigma = crate::linalg::DensityOperator::from_pure(&PureState::basis(Dims::single(2), 0)?);
    let theta = PureState::basis(Dims::new(vec![2, 2])?, 0)?;
    let s = crate::states::singlet();
    let psi = PureState::new(Dims::new(vec![2, 2, 2, 2])?, s.amps().kronecker(s.amps()))?
        .permute_factors(&[0, 2, 1, 3])?;
    let claimed = crate::linalg::DensityOperator::from_pure(&s);
    super::witness::dense_witness(sigma, theta, 2, 1, psi.projector()?, Some(claimed))
}
