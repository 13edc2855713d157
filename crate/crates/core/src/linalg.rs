//! Dense complex linear algebra over tensor-product spaces.
//!
//! Every operator carries a [`Dims`] factorization; factor 0 is the most
//! significant index, matching the Kronecker product convention. All
//! Hermitian routines symmetrize their input as `(x + x†)/2` first, and
//! functions of an operator act only on its support, where the support
//! cutoff is `SUPPORT_RTOL * λ_max`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type Matrix = DMatrix<C64>;
pub type Vector = DVector<C64>;

/// Largest total dimension accepted by any dense constructor.
pub const MAX_DIM: usize = 8192;
/// Relative eigenvalue cutoff defining the support of a PSD operator.
pub const SUPPORT_RTOL: f64 = 1e-10;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Ordered tensor factorization of a Hilbert space.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Dims(Vec<usize>);

impl Dims {
    pub fn new(factors: Vec<usize>) -> Result<Self> {
        if factors.contains(&0) {
            return Err(Error::invalid("tensor factor of dimension zero"));
        }
        let dims = Dims(factors);
        let total = dims.checked_total().ok_or(Error::BudgetExceeded {
            dim: usize::MAX,
            max: MAX_DIM,
        })?;
        if total > MAX_DIM {
            return Err(Error::BudgetExceeded {
                dim: total,
                max: MAX_DIM,
            });
        }
        Ok(dims)
    }

    /// Factorization without the dense budget check, for structured objects
    /// that never materialize the full space.
    pub fn unbounded(factors: Vec<usize>) -> Result<Self> {
        if factors.contains(&0) {
            return Err(Error::invalid("tensor factor of dimension zero"));
        }
        Ok(Dims(factors))
    }

    pub fn single(d: usize) -> Self {
        Dims(vec![d])
    }

    pub fn repeat(site: &Dims, n: usize) -> Self {
        let mut f = Vec::with_capacity(site.len() * n);
        for _ in 0..n {
            f.extend_from_slice(&site.0);
        }
        Dims(f)
    }

    fn checked_total(&self) -> Option<usize> {
        self.0.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d))
    }

    pub fn total(&self) -> usize {
        self.0.iter().product()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn factors(&self) -> &[usize] {
        &self.0
    }

    pub fn concat(&self, other: &Dims) -> Dims {
        let mut f = self.0.clone();
        f.extend_from_slice(&other.0);
        Dims(f)
    }

    pub fn select(&self, idx: &[usize]) -> Dims {
        Dims(idx.iter().map(|&i| self.0[i]).collect())
    }

    pub(crate) fn strides(&self) -> Vec<usize> {
        let mut s = vec![1; self.0.len()];
        for k in (0..self.0.len().saturating_sub(1)).rev() {
            s[k] = s[k + 1] * self.0[k + 1];
        }
        s
    }

    /// Flat offsets of every multi-index over `subset`, enumerated row-major
    /// in the order given by `subset`.
    pub(crate) fn offsets(&self, subset: &[usize]) -> Vec<usize> {
        let strides = self.strides();
        let mut out = vec![0usize];
        for &k in subset {
            let d = self.0[k];
            let st = strides[k];
            let mut next = Vec::with_capacity(out.len() * d);
            for &o in &out {
                for i in 0..d {
                    next.push(o + i * st);
                }
            }
            out = next;
        }
        out
    }

    fn complement(&self, idx: &[usize]) -> Result<Vec<usize>> {
        let mut seen = vec![false; self.len()];
        for &i in idx {
            if i >= self.len() || seen[i] {
                return Err(Error::mismatch(format!(
                    "bad factor index set {idx:?} for {} factors",
                    self.len()
                )));
            }
            seen[i] = true;
        }
        Ok((0..self.len()).filter(|&i| !seen[i]).collect())
    }

    fn check_order(&self, order: &[usize]) -> Result<()> {
        if order.len() != self.len() {
            return Err(Error::mismatch("factor order has wrong length"));
        }
        if !self.complement(order)?.is_empty() {
            return Err(Error::mismatch("factor order is not a permutation"));
        }
        Ok(())
    }
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
#[derive(Clone, Debug)]
pub struct Eigh {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

impl Eigh {
    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    /// `V diag(f(λ)) V†`.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> Matrix {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for j in 0..n {
            let fj = f(self.values[j]);
            for i in 0..n {
                scaled[(i, j)] *= fj;
            }
        }
        scaled * self.vectors.adjoint()
    }

    pub fn support_cutoff(&self) -> f64 {
        SUPPORT_RTOL * self.max().max(0.0)
    }
}

pub fn hermitian_part(x: &Matrix) -> Matrix {
    (x + x.adjoint()) * c(0.5)
}

pub fn eigh_matrix(x: &Matrix) -> Eigh {
    let h = hermitian_part(x);
    let n = h.nrows();
    if n == 0 {
        return Eigh {
            values: vec![],
            vectors: h,
        };
    }
    let e = h.symmetric_eigen();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| e.eigenvalues[a].total_cmp(&e.eigenvalues[b]));
    let values = idx.iter().map(|&i| e.eigenvalues[i]).collect();
    let vectors = Matrix::from_fn(n, n, |r, k| e.eigenvectors[(r, idx[k])]);
    Eigh { values, vectors }
}

/// `x^p` on the support of a PSD matrix; `p = 0` gives the support projector
/// and negative `p` the pseudo-inverse power.
pub fn power_matrix(x: &Matrix, p: f64) -> Matrix {
    let e = eigh_matrix(x);
    let cut = e.support_cutoff();
    if e.max() <= 0.0 {
        return Matrix::zeros(x.nrows(), x.ncols());
    }
    e.apply(|l| {
        if l > cut {
            if p == 0.0 {
                1.0
            } else {
                l.powf(p)
            }
        } else {
            0.0
        }
    })
}

pub fn trace(x: &Matrix) -> C64 {
    x.diagonal().sum()
}

/// `Re tr(a b)` without forming the product.
pub fn re_trace_product(a: &Matrix, b: &Matrix) -> f64 {
    let n = a.nrows();
    let mut s = 0.0;
    for i in 0..n {
        for k in 0..n {
            let p = a[(i, k)] * b[(k, i)];
            s += p.re;
        }
    }
    s
}

pub fn max_abs(x: &Matrix) -> f64 {
    x.iter().fold(0.0f64, |m, z| m.max(z.norm()))
}

pub fn hermitian_deviation(x: &Matrix) -> f64 {
    max_abs(&(x - x.adjoint()))
}

pub fn trace_norm_matrix(x: &Matrix) -> f64 {
    let scale = 1.0 + max_abs(x);
    if hermitian_deviation(x) <= 1e-13 * scale {
        eigh_matrix(x).values.iter().map(|l| l.abs()).sum()
    } else {
        x.clone().singular_values().iter().sum()
    }
}

/// Dense operator on a factorized space.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    dims: Dims,
    mat: Matrix,
}

impl Operator {
    pub fn new(dims: Dims, mat: Matrix) -> Result<Self> {
        let d = dims.total();
        if d > MAX_DIM {
            return Err(Error::BudgetExceeded {
                dim: d,
                max: MAX_DIM,
            });
        }
        if mat.nrows() != d || mat.ncols() != d {
            return Err(Error::mismatch(format!(
                "matrix is {}x{} but factorization has total dimension {d}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        Ok(Operator { dims, mat })
    }

    pub fn from_parts_unchecked(dims: Dims, mat: Matrix) -> Self {
        debug_assert_eq!(mat.nrows(), dims.total());
        Operator { dims, mat }
    }

    pub fn identity(dims: Dims) -> Self {
        let d = dims.total();
        Operator {
            dims,
            mat: Matrix::identity(d, d),
        }
    }

    pub fn zeros(dims: Dims) -> Self {
        let d = dims.total();
        Operator {
            dims,
            mat: Matrix::zeros(d, d),
        }
    }

    pub fn diagonal(dims: Dims, diag: &[f64]) -> Result<Self> {
        if diag.len() != dims.total() {
            return Err(Error::mismatch("diagonal length"));
        }
        let v = DVector::from_iterator(diag.len(), diag.iter().map(|&x| c(x)));
        Operator::new(dims, Matrix::from_diagonal(&v))
    }

    pub fn dims(&self) -> &Dims {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn mat(&self) -> &Matrix {
        &self.mat
    }

    pub fn into_mat(self) -> Matrix {
        self.mat
    }

    pub fn with_dims(self, dims: Dims) -> Result<Self> {
        Operator::new(dims, self.mat)
    }

    pub fn trace(&self) -> C64 {
        trace(&self.mat)
    }

    pub fn adjoint(&self) -> Self {
        Operator {
            dims: self.dims.clone(),
            mat: self.mat.adjoint(),
        }
    }

    pub fn hermitian_part(&self) -> Self {
        Operator {
            dims: self.dims.clone(),
            mat: hermitian_part(&self.mat),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Operator {
            dims: self.dims.clone(),
            mat: &self.mat * c(s),
        }
    }

    fn same_space(&self, other: &Operator) -> Result<()> {
        if self.dims != other.dims {
            return Err(Error::mismatch(format!(
                "{:?} vs {:?}",
                self.dims, other.dims
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Operator) -> Result<Self> {
        self.same_space(other)?;
        Ok(Operator {
            dims: self.dims.clone(),
            mat: &self.mat + &other.mat,
        })
    }

    pub fn sub(&self, other: &Operator) -> Result<Self> {
        self.same_space(other)?;
        Ok(Operator {
            dims: self.dims.clone(),
            mat: &self.mat - &other.mat,
        })
    }

    pub fn mul(&self, other: &Operator) -> Result<Self> {
        self.same_space(other)?;
        Ok(Operator {
            dims: self.dims.clone(),
            mat: &self.mat * &other.mat,
        })
    }

    /// `self * other * self†`.
    pub fn conjugate(&self, other: &Operator) -> Result<Self> {
        self.same_space(other)?;
        Ok(Operator {
            dims: self.dims.clone(),
            mat: &self.mat * &other.mat * self.mat.adjoint(),
        })
    }

    pub fn kron(&self, other: &Operator) -> Result<Self> {
        let dims = self.dims.concat(&other.dims);
        Operator::new(dims, self.mat.kronecker(&other.mat))
    }

    pub fn tensor_power(&self, n: usize) -> Result<Self> {
        let dims = Dims::repeat(&self.dims, n);
        if dims.total() > MAX_DIM {
            return Err(Error::BudgetExceeded {
                dim: dims.total(),
                max: MAX_DIM,
            });
        }
        let mut out = Operator::new(Dims(vec![]), Matrix::identity(1, 1))?;
        for _ in 0..n {
            out = out.kron(self)?;
        }
        Ok(out)
    }

    /// Trace out the listed factors, keeping the rest in their original order.
    pub fn partial_trace(&self, traced: &[usize]) -> Result<Self> {
        let keep = self.dims.complement(traced)?;
        let ok = self.dims.offsets(&keep);
        let ot = self.dims.offsets(traced);
        let dk = ok.len();
        let mut out = Matrix::zeros(dk, dk);
        for j in 0..dk {
            for i in 0..dk {
                let mut s = ZERO;
                for &t in &ot {
                    s += self.mat[(ok[i] + t, ok[j] + t)];
                }
                out[(i, j)] = s;
            }
        }
        Ok(Operator {
            dims: self.dims.select(&keep),
            mat: out,
        })
    }

    /// Keep only the listed factors (in the listed order).
    pub fn marginal(&self, keep: &[usize]) -> Result<Self> {
        let traced = self.dims.complement(keep)?;
        let sorted = {
            let mut k = keep.to_vec();
            k.sort_unstable();
            k
        };
        let pt = self.partial_trace(&traced)?;
        if sorted == keep {
            return Ok(pt);
        }
        let order: Vec<usize> = keep
            .iter()
            .map(|k| sorted.iter().position(|s| s == k).unwrap())
            .collect();
        pt.permute_factors(&order)
    }

    /// Reorder tensor factors: new factor `k` is old factor `order[k]`.
    pub fn permute_factors(&self, order: &[usize]) -> Result<Self> {
        self.dims.check_order(order)?;
        let map = self.dims.offsets(order);
        let d = map.len();
        let mat = Matrix::from_fn(d, d, |i, j| self.mat[(map[i], map[j])]);
        Ok(Operator {
            dims: self.dims.select(order),
            mat,
        })
    }

    /// Merge consecutive factors into groups of the given sizes.
    pub fn regroup(&self, group_sizes: &[usize]) -> Result<Self> {
        Ok(Operator {
            dims: regroup_dims(&self.dims, group_sizes)?,
            mat: self.mat.clone(),
        })
    }

    pub fn eigh(&self) -> Eigh {
        eigh_matrix(&self.mat)
    }

    pub fn power(&self, p: f64) -> Self {
        Operator {
            dims: self.dims.clone(),
            mat: power_matrix(&self.mat, p),
        }
    }

    pub fn support_projector(&self) -> Self {
        self.power(0.0)
    }

    pub fn trace_norm(&self) -> f64 {
        trace_norm_matrix(&self.mat)
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.mat)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        hermitian_deviation(&self.mat) <= tol
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigh().min()
    }
}

pub fn regroup_dims(dims: &Dims, group_sizes: &[usize]) -> Result<Dims> {
    if group_sizes.iter().sum::<usize>() != dims.len() {
        return Err(Error::mismatch("regrouping does not cover all factors"));
    }
    let mut out = Vec::with_capacity(group_sizes.len());
    let mut k = 0;
    for &g in group_sizes {
        out.push(dims.0[k..k + g].iter().product());
        k += g;
    }
    Ok(Dims(out))
}

pub fn kron(a: &Operator, b: &Operator) -> Result<Operator> {
    a.kron(b)
}

pub fn partial_trace(x: &Operator, traced: &[usize]) -> Result<Operator> {
    x.partial_trace(traced)
}

/// Invert a permutation given as `perm[i] = π(i)`.
pub fn invert_permutation(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (i, &p) in perm.iter().enumerate() {
        inv[p] = i;
    }
    inv
}

fn check_permutation(perm: &[usize]) -> Result<()> {
    let mut seen = vec![false; perm.len()];
    for &p in perm {
        if p >= perm.len() || seen[p] {
            return Err(Error::invalid(format!("{perm:?} is not a permutation")));
        }
        seen[p] = true;
    }
    Ok(())
}

/// Operator `P_π` with `P_π |x_1..x_n⟩ = |x_{π⁻¹(1)}..x_{π⁻¹(n)}⟩`, so the
/// content of site `i` moves to site `π(i)` and `P_π P_τ = P_{π∘τ}`.
pub fn permutation_operator(perm: &[usize], site_dim: usize) -> Result<Operator> {
    check_permutation(perm)?;
    let n = perm.len();
    let dims = Dims::new(vec![site_dim; n])?;
    let order = invert_permutation(perm);
    let map = dims.offsets(&order);
    let d = dims.total();
    let mut mat = Matrix::zeros(d, d);
    for (y, &x) in map.iter().enumerate() {
        mat[(y, x)] = ONE;
    }
    Ok(Operator { dims, mat })
}

/// `P_π X P_π†` for an operator on `perm.len()` equal sites, computed by
/// index relabeling. Site `k` spans `factors_per_site` consecutive factors.
pub fn conjugate_by_permutation(
    x: &Operator,
    perm: &[usize],
    factors_per_site: usize,
) -> Result<Operator> {
    check_permutation(perm)?;
    let order = site_order(perm, factors_per_site, x.dims.len())?;
    let map = x.dims.offsets(&order);
    let d = map.len();
    let mat = Matrix::from_fn(d, d, |i, j| x.mat[(map[i], map[j])]);
    Ok(Operator {
        dims: x.dims.clone(),
        mat,
    })
}

/// `P_π |ψ⟩` for a vector on equal sites.
pub fn permute_vector_sites(
    v: &Vector,
    dims: &Dims,
    perm: &[usize],
    factors_per_site: usize,
) -> Result<Vector> {
    check_permutation(perm)?;
    let order = site_order(perm, factors_per_site, dims.len())?;
    let map = dims.offsets(&order);
    Ok(Vector::from_iterator(map.len(), map.iter().map(|&m| v[m])))
}

fn site_order(perm: &[usize], factors_per_site: usize, n_factors: usize) -> Result<Vec<usize>> {
    if perm.len() * factors_per_site != n_factors {
        return Err(Error::mismatch(
            "permutation does not match the number of sites",
        ));
    }
    let inv = invert_permutation(perm);
    let mut order = Vec::with_capacity(n_factors);
    for &src in &inv {
        for f in 0..factors_per_site {
            order.push(src * factors_per_site + f);
        }
    }
    Ok(order)
}

/// State vector on a factorized space.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    dims: Dims,
    amps: Vector,
}

impl PureState {
    pub fn new(dims: Dims, amps: Vector) -> Result<Self> {
        if amps.len() != dims.total() {
            return Err(Error::mismatch("amplitude vector length"));
        }
        let nrm = amps.norm();
        if (nrm - 1.0).abs() > 1e-9 {
            return Err(Error::NotNormalized(nrm * nrm));
        }
        Ok(PureState { dims, amps })
    }

    pub fn normalized(dims: Dims, amps: Vector) -> Result<Self> {
        let nrm = amps.norm();
        if nrm == 0.0 {
            return Err(Error::invalid("zero vector"));
        }
        PureState::new(dims, amps / c(nrm))
    }

    pub fn basis(dims: Dims, index: usize) -> Result<Self> {
        let mut v = Vector::zeros(dims.total());
        if index >= v.len() {
            return Err(Error::invalid("basis index out of range"));
        }
        v[index] = ONE;
        PureState::new(dims, v)
    }

    pub fn dims(&self) -> &Dims {
        &self.dims
    }

    pub fn amps(&self) -> &Vector {
        &self.amps
    }

    pub fn kron(&self, other: &PureState) -> PureState {
        PureState {
            dims: self.dims.concat(&other.dims),
            amps: self.amps.kronecker(&other.amps),
        }
    }

    pub fn projector(&self) -> Result<Operator> {
        Operator::new(self.dims.clone(), &self.amps * self.amps.adjoint())
    }

    pub fn permute_factors(&self, order: &[usize]) -> Result<Self> {
        self.dims.check_order(order)?;
        let map = self.dims.offsets(order);
        let amps = Vector::from_iterator(map.len(), map.iter().map(|&m| self.amps[m]));
        Ok(PureState {
            dims: self.dims.select(order),
            amps,
        })
    }

    pub fn regroup(&self, group_sizes: &[usize]) -> Result<Self> {
        Ok(PureState {
            dims: regroup_dims(&self.dims, group_sizes)?,
            amps: self.amps.clone(),
        })
    }

    /// Reduced state on `keep` (in the listed order).
    pub fn marginal(&self, keep: &[usize]) -> Result<Operator> {
        let traced = self.dims.complement(keep)?;
        reduced_from_vector(&self.amps, &self.dims, keep, &traced)
    }
}

/// `tr_traced |v⟩⟨v|`, kept factors in the order of `keep`.
pub fn reduced_from_vector(
    v: &Vector,
    dims: &Dims,
    keep: &[usize],
    traced: &[usize],
) -> Result<Operator> {
    let ok = dims.offsets(keep);
    let ot = dims.offsets(traced);
    let m = Matrix::from_fn(ok.len(), ot.len(), |i, t| v[ok[i] + ot[t]]);
    Operator::new(dims.select(keep), &m * m.adjoint())
}

/// Validated density operator: Hermitian, PSD and unit trace.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator(Operator);

pub const DENSITY_TRACE_TOL: f64 = 1e-10;
pub const DENSITY_EIG_TOL: f64 = 1e-12;

impl DensityOperator {
    pub fn new(op: Operator) -> Result<Self> {
        let dev = hermitian_deviation(op.mat());
        if dev > 1e-10 * (1.0 + op.max_abs()) {
            return Err(Error::NotHermitian(dev));
        }
        let tr = op.trace();
        if (tr.re - 1.0).abs() > DENSITY_TRACE_TOL || tr.im.abs() > DENSITY_TRACE_TOL {
            return Err(Error::NotNormalized(tr.re));
        }
        let herm = op.hermitian_part();
        let min = herm.min_eigenvalue();
        if min < -DENSITY_EIG_TOL {
            return Err(Error::NotPositive(min));
        }
        Ok(DensityOperator(herm))
    }

    /// Wrap an operator that is a density operator by construction.
    pub fn from_trusted(op: Operator) -> Self {
        DensityOperator(op.hermitian_part())
    }

    /// Hermitize and rescale to unit trace, then validate.
    pub fn normalize(op: Operator) -> Result<Self> {
        let tr = op.trace().re;
        if !(tr > 0.0) {
            return Err(Error::NotNormalized(tr));
        }
        DensityOperator::new(op.hermitian_part().scale(1.0 / tr))
    }

    pub fn from_pure(psi: &PureState) -> Self {
        DensityOperator(psi.projector().expect("pure state within budget"))
    }

    pub fn maximally_mixed(dims: Dims) -> Self {
        let d = dims.total() as f64;
        DensityOperator(Operator::identity(dims).scale(1.0 / d))
    }

    pub fn op(&self) -> &Operator {
        &self.0
    }

    pub fn into_op(self) -> Operator {
        self.0
    }

    pub fn dims(&self) -> &Dims {
        self.0.dims()
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn mat(&self) -> &Matrix {
        self.0.mat()
    }

    pub fn kron(&self, other: &DensityOperator) -> Result<Self> {
        Ok(DensityOperator(self.0.kron(&other.0)?))
    }

    pub fn tensor_power(&self, n: usize) -> Result<Self> {
        Ok(DensityOperator(self.0.tensor_power(n)?))
    }

    pub fn partial_trace(&self, traced: &[usize]) -> Result<Self> {
        Ok(DensityOperator(self.0.partial_trace(traced)?))
    }

    pub fn marginal(&self, keep: &[usize]) -> Result<Self> {
        Ok(DensityOperator(self.0.marginal(keep)?))
    }

    pub fn permute_factors(&self, order: &[usize]) -> Result<Self> {
        Ok(DensityOperator(self.0.permute_factors(order)?))
    }

    pub fn regroup(&self, group_sizes: &[usize]) -> Result<Self> {
        Ok(DensityOperator(self.0.regroup(group_sizes)?))
    }

    /// Convex combination `t·self + (1-t)·other`.
    pub fn mix(&self, t: f64, other: &DensityOperator) -> Result<Self> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::invalid("mixing weight outside [0,1]"));
        }
        Ok(DensityOperator(
            self.0.scale(t).add(&other.0.scale(1.0 - t))?,
        ))
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.0.eigh().values
    }
}

impl std::ops::Deref for DensityOperator {
    type Target = Operator;
    fn deref(&self) -> &Operator {
        &self.0
    }
}

pub fn eigh(x: &Operator) -> Eigh {
    x.eigh()
}

pub fn matrix_power(x: &Operator, p: f64) -> Operator {
    x.power(p)
}

pub fn support_projector(x: &Operator) -> Operator {
    x.support_projector()
}

pub fn trace_norm(x: &Operator) -> f64 {
    x.trace_norm()
}

/// `F(ρ,σ) = ‖√ρ √σ‖₁²`.
pub fn fidelity(rho: &Operator, sigma: &Operator) -> Result<f64> {
    rho.same_space(sigma)?;
    Ok(fidelity_matrix(rho.mat(), sigma.mat()))
}

pub fn fidelity_matrix(rho: &Matrix, sigma: &Matrix) -> f64 {
    let sq = power_matrix(rho, 0.5);
    let m = &sq * sigma * &sq;
    let root: f64 = eigh_matrix(&m)
        .values
        .iter()
        .map(|&l| l.max(0.0).sqrt())
        .sum();
    root * root
}

/// `½‖ρ−σ‖₁`.
pub fn trace_distance(rho: &Operator, sigma: &Operator) -> Result<f64> {
    Ok(0.5 * rho.sub(sigma)?.trace_norm())
}

/// `√(1 − F(ρ,σ))`.
pub fn purified_distance(rho: &Operator, sigma: &Operator) -> Result<f64> {
    Ok((1.0 - fidelity(rho, sigma)?).max(0.0).sqrt())
}

/// Row-major JSON encoding `{dims, re, im}`.
#[derive(Serialize, Deserialize)]
struct OperatorJson {
    dims: Vec<usize>,
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

impl Serialize for Operator {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let d = self.dim();
        let re = (0..d)
            .map(|i| (0..d).map(|j| self.mat[(i, j)].re).collect())
            .collect();
        let im = (0..d)
            .map(|i| (0..d).map(|j| self.mat[(i, j)].im).collect())
            .collect();
        OperatorJson {
            dims: self.dims.0.clone(),
            re,
            im,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Operator {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let j = OperatorJson::deserialize(d)?;
        let dims = Dims::new(j.dims).map_err(D::Error::custom)?;
        let n = dims.total();
        if j.re.len() != n
            || j.im.len() != n
            || j.re.iter().chain(j.im.iter()).any(|r| r.len() != n)
        {
            return Err(D::Error::custom("re/im arrays do not match dims"));
        }
        let mat = Matrix::from_fn(n, n, |r, k| C64::new(j.re[r][k], j.im[r][k]));
        Ok(Operator { dims, mat })
    }
}

impl Serialize for DensityOperator {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.0.serialize(s)
    }
}

impl<'de> Deserialize<'de> for DensityOperator {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let op = Operator::deserialize(d)?;
        DensityOperator::new(op).map_err(D::Error::custom)
    }
}

impl Operator {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("operator serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// Ordinary least squares: coefficients `c` minimizing `‖X c − y‖₂`, where
/// row `i` of `X` is `rows[i]`.
pub fn least_squares(rows: &[Vec<f64>], y: &[f64]) -> Result<Vec<f64>> {
    let p = rows.first().map(Vec::len).unwrap_or(0);
    if rows.len() != y.len() || rows.len() < p || p == 0 || rows.iter().any(|r| r.len() != p) {
        return Err(Error::invalid(
            "least squares needs at least as many equal-length rows as coefficients",
        ));
    }
    let x = DMatrix::from_fn(rows.len(), p, |i, j| rows[i][j]);
    let rhs = DVector::from_column_slice(y);
    let sol = x
        .svd(true, true)
        .solve(&rhs, 1e-14)
        .map_err(|e| Error::invalid(e.to_string()))?;
    Ok(sol.iter().copied().collect())
}

/// Slope of the least-squares line through `(x_i, y_i)`.
pub fn fit_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    let rows: Vec<Vec<f64>> = x.iter().map(|&v| vec![v, 1.0]).collect();
    Ok(least_squares(&rows, y)?[0])
}
