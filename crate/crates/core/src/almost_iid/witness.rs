//! Witnesses: a site purification `θ` together with an extension on
//! `(V⊗E)^{⊗n}` whose visible part is the certified state.
//!
//! Extensions are kept either as a dense operator or, for the defect
//! mixtures `PERM(θθ†^{⊗(n−k)} ⊗ ω)`, as a list of placement terms that is
//! never materialized unless asked for. Marginals, preferred-basis
//! coefficients and verification all work on the structured form directly.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::symmetrize::{arrange, injective_placements, perm_symmetrize_defects};
use super::MAX_VECTOR_DIM;
use crate::error::{Error, Result};
use crate::linalg::{c, DensityOperator, Dims, Matrix, Operator, PureState, Vector, MAX_DIM};
use crate::states::{purify_into, rank};

/// Visible states up to this dimension are symmetrized independently at
/// construction and stored as the claimed state.
pub const CLAIMED_VISIBLE_MAX: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum WitnessKind {
    /// Permutation-invariant extension.
    Symmetric,
    /// Tensor products of witnesses: support condition only.
    Product,
}

/// `weight · PERM(θθ†^{⊗(n−k)} ⊗ omega)` with `omega` on `k` sites.
#[derive(Clone, Debug)]
pub struct PlacementTerm {
    pub weight: f64,
    pub omega: Operator,
}

#[derive(Clone, Debug)]
pub enum Extension {
    Dense(Operator),
    Placements(Vec<PlacementTerm>),
}

#[derive(Clone, Debug)]
pub struct Witness {
    pub sigma: DensityOperator,
    pub theta: PureState,
    pub n: usize,
    pub r: usize,
    pub extension: Extension,
    pub kind: WitnessKind,
    pub claimed_visible: Option<DensityOperator>,
}

impl PlacementTerm {
    pub fn defect_sites(&self, fps: usize) -> usize {
        self.omega.dims().len() / fps
    }
}

impl Witness {
    pub fn site_dims(&self) -> &Dims {
        self.theta.dims()
    }

    pub fn site_dim(&self) -> usize {
        self.theta.dims().total()
    }

    /// Factors per extension site (visible factors plus one purifier factor).
    pub fn factors_per_site(&self) -> usize {
        self.theta.dims().len()
    }

    pub fn visible_factors(&self) -> usize {
        self.sigma.dims().len()
    }

    pub fn d_e(&self) -> usize {
        *self.theta.dims().factors().last().unwrap()
    }

    pub fn visible_dim(&self) -> usize {
        self.sigma.dim()
    }

    fn theta_projector(&self) -> Operator {
        self.theta.projector().expect("site projector")
    }

    fn purifier_factors(&self, sites: usize) -> Vec<usize> {
        let fps = self.factors_per_site();
        (0..sites).map(|j| j * fps + fps - 1).collect()
    }

    /// Extension restricted to the first `k` sites.
    pub fn site_marginal(&self, k: usize) -> Result<Operator> {
        if k > self.n {
            return Err(Error::invalid(
                "marginal on more sites than the witness has",
            ));
        }
        let fps = self.factors_per_site();
        match &self.extension {
            Extension::Dense(x) => x.partial_trace(&(k * fps..self.n * fps).collect::<Vec<_>>()),
            Extension::Placements(terms) => {
                let fill = self.theta_projector();
                self.placement_marginal(terms, k, &fill, |o| Ok(o.clone()), fps)
            }
        }
    }

    /// Visible state on the first `k` sites.
    pub fn visible_marginal(&self, k: usize) -> Result<DensityOperator> {
        if k > self.n {
            return Err(Error::invalid(
                "marginal on more sites than the witness has",
            ));
        }
        let fps = self.factors_per_site();
        let op = match &self.extension {
            Extension::Dense(_) => self
                .site_marginal(k)?
                .partial_trace(&self.purifier_factors(k))?,
            Extension::Placements(terms) => {
                let fv = self.visible_factors();
                self.placement_marginal(
                    terms,
                    k,
                    self.sigma.op(),
                    |o| o.partial_trace(&purifiers(o, fps)),
                    fv,
                )?
            }
        };
        Ok(DensityOperator::from_trusted(op))
    }

    /// Sum over placements of the reduced state on the first `k` sites;
    /// `reduce` maps a defect operator into the output site space.
    fn placement_marginal(
        &self,
        terms: &[PlacementTerm],
        k: usize,
        fill: &Operator,
        reduce: impl Fn(&Operator) -> Result<Operator>,
        out_fps: usize,
    ) -> Result<Operator> {
        let fps = self.factors_per_site();
        let dims = Dims::new(Dims::repeat(fill.dims(), k).factors().to_vec())?;
        let mut acc = Operator::zeros(dims);
        for term in terms {
            let kd = term.defect_sites(fps);
            let reduced = reduce(&term.omega)?;
            let placements = injective_placements(self.n, kd);
            let mut groups: BTreeMap<Vec<(usize, usize)>, usize> = BTreeMap::new();
            for pos in &placements {
                let inside: Vec<(usize, usize)> = pos
                    .iter()
                    .enumerate()
                    .filter(|(_, &p)| p < k)
                    .map(|(j, &p)| (j, p))
                    .collect();
                *groups.entry(inside).or_insert(0) += 1;
            }
            for (inside, count) in groups {
                let keep: Vec<usize> = inside
                    .iter()
                    .flat_map(|&(j, _)| j * out_fps..(j + 1) * out_fps)
                    .collect();
                let part = reduced.marginal(&keep)?;
                let positions: Vec<usize> = inside.iter().map(|&(_, p)| p).collect();
                let w = term.weight * count as f64 / placements.len() as f64;
                acc = acc.add(&arrange(&part, fill, &positions, k)?.scale(w))?;
            }
        }
        Ok(acc)
    }

    /// Extension as a dense operator on `(V⊗E)^{⊗n}`.
    pub fn materialize(&self) -> Result<Operator> {
        match &self.extension {
            Extension::Dense(x) => Ok(x.clone()),
            Extension::Placements(_) => self.site_marginal(self.n),
        }
    }

    /// Pure-state decomposition `Σ w_i |v_i⟩⟨v_i|` of a structured extension.
    pub fn ensemble(&self) -> Result<Vec<(f64, Vector)>> {
        let Extension::Placements(terms) = &self.extension else {
            return Err(Error::invalid("ensemble view needs a structured extension"));
        };
        let total = self
            .site_dim()
            .checked_pow(self.n as u32)
            .filter(|&d| d <= MAX_VECTOR_DIM);
        total.ok_or_else(|| Error::invalid("extension vectors exceed the vector budget"))?;
        let fps = self.factors_per_site();
        let mut out = Vec::new();
        for term in terms {
            let kd = term.defect_sites(fps);
            let placements = injective_placements(self.n, kd);
            for (lambda, v) in components(&term.omega) {
                let mut full = v.clone();
                for _ in kd..self.n {
                    full = full.kronecker(self.theta.amps());
                }
                let dims =
                    Dims::unbounded(Dims::repeat(self.site_dims(), self.n).factors().to_vec())?;
                for pos in &placements {
                    let perm = super::symmetrize::placement_permutation(pos, self.n);
                    let pv = crate::linalg::permute_vector_sites(&full, &dims, &perm, fps)?;
                    out.push((term.weight * lambda / placements.len() as f64, pv));
                }
            }
        }
        Ok(out)
    }

    /// Convex combination `t·self + (1−t)·other` of two witnesses for the
    /// same `σ`, `θ`, `n`, `r`.
    pub fn mix(&self, t: f64, other: &Witness) -> Result<Witness> {
        if self.n != other.n
            || self.r != other.r
            || self.theta != other.theta
            || self.kind != other.kind
        {
            return Err(Error::invalid("witnesses differ in n, r, θ or kind"));
        }
        let extension = match (&self.extension, &other.extension) {
            (Extension::Placements(a), Extension::Placements(b)) => {
                let mut terms: Vec<PlacementTerm> = a
                    .iter()
                    .map(|p| PlacementTerm {
                        weight: t * p.weight,
                        omega: p.omega.clone(),
                    })
                    .collect();
                terms.extend(b.iter().map(|p| PlacementTerm {
                    weight: (1.0 - t) * p.weight,
                    omega: p.omega.clone(),
                }));
                Extension::Placements(terms)
            }
            _ => Extension::Dense(
                self.materialize()?
                    .scale(t)
                    .add(&other.materialize()?.scale(1.0 - t))?,
            ),
        };
        let claimed_visible = match (&self.claimed_visible, &other.claimed_visible) {
            (Some(a), Some(b)) => Some(a.mix(t, b)?),
            _ => None,
        };
        Ok(Witness {
            extension,
            claimed_visible,
            ..self.clone()
        })
    }
}

fn purifiers(o: &Operator, fps: usize) -> Vec<usize> {
    let sites = o.dims().len() / fps;
    (0..sites).map(|j| j * fps + fps - 1).collect()
}

/// Eigencomponents `(λ, v)` of a PSD operator above the support cutoff.
pub(crate) fn components(x: &Operator) -> Vec<(f64, Vector)> {
    if x.dim() == 1 {
        return vec![(x.trace().re, Vector::from_element(1, c(1.0)))];
    }
    let e = x.eigh();
    let cut = e.support_cutoff();
    (0..x.dim())
        .rev()
        .filter(|&k| e.values[k] > cut)
        .map(|k| (e.values[k], e.vectors.column(k).into_owned()))
        .collect()
}

fn smallest_root_at_least(target: usize, r: usize) -> usize {
    if r == 0 {
        return 1;
    }
    let mut d = 1usize;
    while d.pow(r as u32) < target {
        d += 1;
    }
    d
}

/// Purification of `omega` on `r` sites of `V ⊗ E`, factors in site order.
fn purify_on_sites(omega: &DensityOperator, r: usize, d_e: usize, fv: usize) -> Result<Operator> {
    let psi = purify_into(omega, d_e.pow(r as u32))?;
    let mut factors = omega.dims().factors().to_vec();
    factors.extend(std::iter::repeat_n(d_e, r));
    let psi = PureState::new(Dims::new(factors)?, psi.amps().clone())?;
    let order: Vec<usize> = (0..r)
        .flat_map(|j| (j * fv..(j + 1) * fv).chain(std::iter::once(r * fv + j)))
        .collect();
    psi.permute_factors(&order)?.projector()
}

/// Witness for `PERM(σ^{⊗(n−r)} ⊗ ω)` with extension
/// `PERM(θθ†^{⊗(n−r)} ⊗ ωω†)`, where `θ` and `ω` are canonical
/// purifications sharing a purifier of dimension large enough for both.
/// With `omega = None` this is the tensor-power witness of `σ^{⊗n}` (`r = 0`
/// defects, reported with the given `r`).
pub fn construct_mixture_with_defects(
    sigma: &DensityOperator,
    omega: Option<&DensityOperator>,
    n: usize,
    r: usize,
) -> Result<Witness> {
    if r > n || n == 0 {
        return Err(Error::invalid(format!(
            "need 0 ≤ r ≤ n and n ≥ 1, got n = {n}, r = {r}"
        )));
    }
    let fv = sigma.dims().len();
    let defects = omega.map(|_| r).unwrap_or(0);
    if let Some(w) = omega {
        if w.dims() != &Dims::repeat(sigma.dims(), r) {
            return Err(Error::mismatch(
                "ω must act on r copies of the visible site",
            ));
        }
    }
    let d_e = rank(sigma)
        .max(
            omega
                .map(|w| smallest_root_at_least(rank(w), r))
                .unwrap_or(1),
        )
        .max(1);
    let theta = purify_into(sigma, d_e)?;
    let omega_ext = match omega {
        Some(w) if defects > 0 => purify_on_sites(w, r, d_e, fv)?,
        _ => Operator::identity(Dims::new(vec![])?),
    };
    let claimed_visible = if sigma
        .dim()
        .checked_pow(n as u32)
        .is_some_and(|d| d <= CLAIMED_VISIBLE_MAX)
    {
        let w = match omega {
            Some(w) if defects > 0 => w.op().clone(),
            _ => Operator::identity(Dims::new(vec![])?),
        };
        Some(DensityOperator::from_trusted(perm_symmetrize_defects(
            sigma.op(),
            &w,
            n,
        )?))
    } else {
        None
    };
    Ok(Witness {
        sigma: sigma.clone(),
        theta,
        n,
        r,
        extension: Extension::Placements(vec![PlacementTerm {
            weight: 1.0,
            omega: omega_ext,
        }]),
        kind: WitnessKind::Symmetric,
        claimed_visible,
    })
}

/// Tensor-power witness of `σ^{⊗n}`.
pub fn iid_witness(sigma: &DensityOperator, n: usize) -> Result<Witness> {
    construct_mixture_with_defects(sigma, None, n, 0)
}

/// The state `|Ψ⁻⟩` as a witness with `n = 2`, `r = 1` for `σ = |0⟩⟨0|`:
/// extension `|Ψ⁻⟩⟨Ψ⁻| ⊗ |ϑϑ⟩⟨ϑϑ|` with a one-dimensional purifier.
pub fn singlet_witness() -> Result<Witness> {
    let sigma = DensityOperator::from_pure(&PureState::basis(Dims::single(2), 0)?);
    let theta = PureState::basis(Dims::new(vec![2, 1])?, 0)?;
    let psi = crate::states::singlet();
    let ext = psi.projector()?.with_dims(Dims::new(vec![2, 1, 2, 1])?)?;
    Ok(Witness {
        sigma,
        theta,
        n: 2,
        r: 1,
        extension: Extension::Dense(ext),
        kind: WitnessKind::Symmetric,
        claimed_visible: Some(DensityOperator::from_pure(&psi)),
    })
}

/// Witness with an explicit dense extension on `(V⊗E)^{⊗n}`.
pub fn dense_witness(
    sigma: DensityOperator,
    theta: PureState,
    n: usize,
    r: usize,
    extension: Operator,
    claimed_visible: Option<DensityOperator>,
) -> Result<Witness> {
    let expected = Dims::repeat(theta.dims(), n);
    if extension.dims() != &expected {
        return Err(Error::mismatch(format!(
            "extension dims {:?}, expected {:?}",
            extension.dims(),
            expected
        )));
    }
    if theta.dims().len() != sigma.dims().len() + 1
        || theta.dims().factors()[..sigma.dims().len()] != *sigma.dims().factors()
    {
        return Err(Error::mismatch(
            "θ must act on the visible site plus one purifier factor",
        ));
    }
    Ok(Witness {
        sigma,
        theta,
        n,
        r,
        extension: Extension::Dense(extension),
        kind: WitnessKind::Symmetric,
        claimed_visible,
    })
}

/// `ρ_ext^{⊗s}` as a witness on `ns` sites with `rs` defects. The result is
/// not permutation invariant across blocks and is marked [`WitnessKind::Product`].
pub fn tensor_power_witness(w: &Witness, s: usize) -> Result<Witness> {
    if s == 0 {
        return Err(Error::invalid("tensor power s must be positive"));
    }
    let ext = w.materialize()?;
    let mut out = ext.clone();
    for _ in 1..s {
        out = out.kron(&ext)?;
    }
    let claimed_visible = match &w.claimed_visible {
        Some(v) if v.dim().checked_pow(s as u32).is_some_and(|d| d <= MAX_DIM) => {
            Some(v.tensor_power(s)?)
        }
        _ => None,
    };
    Ok(Witness {
        sigma: w.sigma.clone(),
        theta: w.theta.clone(),
        n: w.n * s,
        r: w.r * s,
        extension: Extension::Dense(out),
        kind: WitnessKind::Product,
        claimed_visible,
    })
}

/// Trace out the last `m` sites; the result witnesses the marginal with the same `r`.
pub fn marginal_witness(w: &Witness, m: usize) -> Result<Witness> {
    if m == 0 || m >= w.n {
        return Err(Error::invalid(format!("cannot trace {m} of {} sites", w.n)));
    }
    let n2 = w.n - m;
    let fps = w.factors_per_site();
    let extension = match &w.extension {
        Extension::Dense(x) => {
            Extension::Dense(x.partial_trace(&(n2 * fps..w.n * fps).collect::<Vec<_>>())?)
        }
        Extension::Placements(terms) => {
            let mut grouped: BTreeMap<Vec<usize>, (f64, Operator)> = BTreeMap::new();
            let mut order: Vec<Vec<usize>> = Vec::new();
            for (ti, term) in terms.iter().enumerate() {
                let kd = term.defect_sites(fps);
                let placements = injective_placements(w.n, kd);
                let mut counts: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
                for pos in &placements {
                    let inside: Vec<usize> = (0..kd).filter(|&j| pos[j] < n2).collect();
                    *counts.entry(inside).or_insert(0) += 1;
                }
                for (inside, count) in counts {
                    let keep: Vec<usize> = inside
                        .iter()
                        .flat_map(|&j| j * fps..(j + 1) * fps)
                        .collect();
                    let part = term.omega.marginal(&keep)?;
                    let weight = term.weight * count as f64 / placements.len() as f64;
                    let mut key = vec![ti];
                    key.extend(&inside);
                    order.push(key.clone());
                    grouped.insert(key, (weight, part));
                }
            }
            Extension::Placements(
                order
                    .into_iter()
                    .map(|k| grouped.remove(&k).unwrap())
                    .map(|(weight, omega)| PlacementTerm { weight, omega })
                    .collect(),
            )
        }
    };
    let fv = w.visible_factors();
    let claimed_visible = match &w.claimed_visible {
        Some(v) => Some(v.partial_trace(&(n2 * fv..w.n * fv).collect::<Vec<_>>())?),
        None => None,
    };
    Ok(Witness {
        n: n2,
        extension,
        claimed_visible,
        ..w.clone()
    })
}

/// Move the last visible factor into the purifier: a witness for `σ_AB`
/// becomes a witness for `σ_A` with purifier `B ⊗ E`.
pub fn trace_visible_tail(w: &Witness) -> Result<Witness> {
    let fv = w.visible_factors();
    if fv < 2 {
        return Err(Error::invalid("visible site has a single factor"));
    }
    let fps = w.factors_per_site();
    let mut groups: Vec<usize> = vec![1; fv - 1];
    groups.push(2);
    let site_groups =
        |sites: usize| -> Vec<usize> { (0..sites).flat_map(|_| groups.iter().copied()).collect() };
    let extension = match &w.extension {
        Extension::Dense(x) => Extension::Dense(x.regroup(&site_groups(w.n))?),
        Extension::Placements(terms) => Extension::Placements(
            terms
                .iter()
                .map(|t| {
                    let sites = t.defect_sites(fps);
                    Ok(PlacementTerm {
                        weight: t.weight,
                        omega: t.omega.regroup(&site_groups(sites))?,
                    })
                })
                .collect::<Result<_>>()?,
        ),
    };
    let claimed_visible = match &w.claimed_visible {
        Some(v) => Some(v.partial_trace(&(0..w.n).map(|j| j * fv + fv - 1).collect::<Vec<_>>())?),
        None => None,
    };
    Ok(Witness {
        sigma: w.sigma.partial_trace(&[fv - 1])?,
        theta: w.theta.regroup(&groups)?,
        n: w.n,
        r: w.r,
        extension,
        kind: w.kind,
        claimed_visible,
    })
}

/// Isometry `G → E' ⊗ F` taking `θ` to a purification of `σ_{VE'}`.
///
/// On the support of `θ` the map is fixed by `V(⟨e_i|⊗1)θ = (⟨e_i|⊗1)θ̃`
/// over the eigenvectors `e_i` of `σ`; it is completed to an isometry by
/// Gram-Schmidt on the orthogonal complements.
fn extension_isometry(
    theta: &PureState,
    theta_ext: &PureState,
    sigma: &DensityOperator,
) -> Result<Matrix> {
    let dv = sigma.dim();
    let dg = theta.dims().total() / dv;
    let dx = theta_ext.dims().total() / dv;
    let m_theta = Matrix::from_fn(dv, dg, |v, g| theta.amps()[v * dg + g]);
    let m_ext = Matrix::from_fn(dv, dx, |v, x| theta_ext.amps()[v * dx + x]);
    let e = sigma.op().eigh();
    let cut = e.support_cutoff();
    let mut from: Vec<Vector> = Vec::new();
    let mut to: Vec<Vector> = Vec::new();
    for k in (0..dv).rev().filter(|&k| e.values[k] > cut) {
        let ek = e.vectors.column(k).map(|z| z.conj());
        let s = e.values[k].sqrt();
        from.push(m_theta.transpose() * &ek / c(s));
        to.push(m_ext.transpose() * &ek / c(s));
    }
    let from = complete_orthonormal(from, dg);
    let to = complete_orthonormal(to, dx);
    let mut v = Matrix::zeros(dx, dg);
    for (f, t) in from.iter().zip(&to) {
        v += t * f.adjoint();
    }
    Ok(v)
}

fn complete_orthonormal(mut vs: Vec<Vector>, d: usize) -> Vec<Vector> {
    for k in 0..d {
        if vs.len() == d {
            break;
        }
        let mut v = Vector::zeros(d);
        v[k] = c(1.0);
        for _ in 0..2 {
            for q in &vs {
                let p = q.dotc(&v);
                v -= q * p;
            }
        }
        let nv = v.norm();
        if nv > 1e-8 {
            vs.push(v / c(nv));
        }
    }
    vs
}

/// Extend a witness for `σ_V` to one for `σ_{VE'}` with `tr_{E'} σ_{VE'} = σ_V`,
/// by applying an isometry from the old purifier to `E' ⊗ F` on every site.
pub fn extend_witness(w: &Witness, sigma_ext: &DensityOperator) -> Result<Witness> {
    let fv = w.visible_factors();
    let vis = w.sigma.dims().factors();
    if sigma_ext.dims().len() != fv + 1 || &sigma_ext.dims().factors()[..fv] != vis {
        return Err(Error::mismatch(
            "extended state must act on the visible site plus one factor",
        ));
    }
    let traced = sigma_ext.partial_trace(&[fv])?;
    let dev = traced.sub(w.sigma.op())?.max_abs();
    if dev > 1e-9 {
        return Err(Error::invalid(format!(
            "extended state does not reduce to σ (deviation {dev:e})"
        )));
    }
    let dg = w.d_e();
    let d_new = sigma_ext.dims().factors()[fv];
    let d_f = rank(sigma_ext).max(dg.div_ceil(d_new)).max(1);
    let theta_ext = purify_into(sigma_ext, d_f)?;
    let iso = extension_isometry(&w.theta, &theta_ext, &w.sigma)?;
    let dv = w.visible_dim();
    let site_map = Matrix::identity(dv, dv).kronecker(&iso);
    let mut new_site: Vec<usize> = sigma_ext.dims().factors().to_vec();
    new_site.push(d_f);
    let new_site = Dims::new(new_site)?;
    let theta = PureState::normalized(new_site.clone(), &site_map * w.theta.amps())?;
    let lift = |x: &Operator, sites: usize| -> Result<Operator> {
        let mut big = Matrix::from_element(1, 1, c(1.0));
        for _ in 0..sites {
            big = big.kronecker(&site_map);
        }
        Operator::new(
            Dims::new(Dims::repeat(&new_site, sites).factors().to_vec())?,
            &big * x.mat() * big.adjoint(),
        )
    };
    let fps = w.factors_per_site();
    let extension = match &w.extension {
        Extension::Dense(x) => Extension::Dense(lift(x, w.n)?),
        Extension::Placements(terms) => Extension::Placements(
            terms
                .iter()
                .map(|t| {
                    Ok(PlacementTerm {
                        weight: t.weight,
                        omega: lift(&t.omega, t.defect_sites(fps))?,
                    })
                })
                .collect::<Result<_>>()?,
        ),
    };
    Ok(Witness {
        sigma: sigma_ext.clone(),
        theta,
        n: w.n,
        r: w.r,
        extension,
        kind: w.kind,
        claimed_visible: None,
    })
}

#[derive(Serialize, Deserialize)]
struct VectorJson {
    dims: Vec<usize>,
    re: Vec<f64>,
    im: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
pub struct Residuals {
    pub marginal: f64,
    pub permutation: f64,
    pub support: f64,
}

#[derive(Serialize, Deserialize)]
struct WitnessJson {
    sigma: Operator,
    theta: VectorJson,
    extension: Operator,
    n: usize,
    r: usize,
    residuals: Option<Residuals>,
}

impl Witness {
    /// JSON encoding with a materialized extension.
    pub fn to_json(&self, residuals: Option<Residuals>) -> Result<String> {
        let theta = VectorJson {
            dims: self.theta.dims().factors().to_vec(),
            re: self.theta.amps().iter().map(|z| z.re).collect(),
            im: self.theta.amps().iter().map(|z| z.im).collect(),
        };
        let j = WitnessJson {
            sigma: self.sigma.op().clone(),
            theta,
            extension: self.materialize()?,
            n: self.n,
            r: self.r,
            residuals,
        };
        serde_json::to_string(&j).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Witness> {
        let j: WitnessJson = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        if j.theta.re.len() != j.theta.im.len() {
            return Err(Error::Parse("θ re/im length mismatch".into()));
        }
        let amps = Vector::from_iterator(
            j.theta.re.len(),
            j.theta
                .re
                .iter()
                .zip(&j.theta.im)
                .map(|(&a, &b)| crate::linalg::C64::new(a, b)),
        );
        let theta = PureState::new(Dims::new(j.theta.dims)?, amps)?;
        dense_witness(
            DensityOperator::new(j.sigma)?,
            theta,
            j.n,
            j.r,
            j.extension,
            None,
        )
    }
}
