//! Preferred product basis of the span of `n`-site vectors with at least
//! `n − r` sites equal to a fixed site vector `θ`.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::linalg::{c, Matrix, Vector, C64, ZERO};

/// Orthonormal site basis whose first vector is `θ`, completed by
/// Gram-Schmidt over the standard basis in index order.
pub fn site_basis(theta: &Vector) -> Result<Matrix> {
    let d = theta.len();
    let nrm = theta.norm();
    if (nrm - 1.0).abs() > 1e-9 {
        return Err(Error::NotNormalized(nrm * nrm));
    }
    let mut cols: Vec<Vector> = vec![theta / c(nrm)];
    for k in 0..d {
        if cols.len() == d {
            break;
        }
        let mut v = Vector::zeros(d);
        v[k] = c(1.0);
        for _ in 0..2 {
            for q in &cols {
                let p = q.dotc(&v);
                v -= q * p;
            }
        }
        let nv = v.norm();
        if nv > 1e-8 {
            cols.push(v / c(nv));
        }
    }
    if cols.len() != d {
        return Err(Error::NonConvergence("site basis completion".into()));
    }
    Ok(Matrix::from_columns(&cols))
}

/// `Σ_{k≤r} C(n,k)(d−1)^k`, or `None` on overflow.
pub fn defect_count(n: usize, r: usize, d: usize) -> Option<u128> {
    let mut total: u128 = 0;
    for k in 0..=r.min(n) {
        let term = binomial(n, k)?.checked_mul((d as u128 - 1).checked_pow(k as u32)?)?;
        total = total.checked_add(term)?;
    }
    Some(total)
}

pub fn binomial(n: usize, k: usize) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    Some(acc)
}

/// The chain `|T| ≤ C(n,r)·d^r ≤ 2^{n h(r/n)}·d^r` as `(|T|, middle, right)`.
pub fn defect_count_chain(n: usize, r: usize, d: usize) -> (f64, f64, f64) {
    let count = defect_count(n, r, d)
        .map(|x| x as f64)
        .unwrap_or(f64::INFINITY);
    let middle =
        binomial(n, r).map(|x| x as f64).unwrap_or(f64::INFINITY) * (d as f64).powi(r as i32);
    let h = crate::bounds::h2(r as f64 / n as f64);
    let right = (n as f64 * h).exp2() * (d as f64).powi(r as i32);
    (count, middle, right)
}

#[derive(Clone, Debug)]
pub struct PreferredBasis {
    n: usize,
    r: usize,
    d: usize,
    site_basis: Matrix,
    labels: Vec<Vec<usize>>,
    lookup: HashMap<Vec<usize>, usize>,
}

/// Largest index set enumerated explicitly.
pub const MAX_INDEX_SET: u128 = 1 << 20;

impl PreferredBasis {
    /// Indices are ordered by number of defects, then defect positions
    /// lexicographically, then labels lexicographically. Label 0 is `θ`.
    pub fn build(theta: &Vector, n: usize, r: usize) -> Result<Self> {
        if r > n {
            return Err(Error::invalid(format!("r = {r} exceeds n = {n}")));
        }
        let d = theta.len();
        let count = defect_count(n, r, d).filter(|&c| c <= MAX_INDEX_SET);
        count.ok_or_else(|| Error::invalid("preferred index set too large to enumerate"))?;
        let site_basis = site_basis(theta)?;
        let mut labels = Vec::new();
        for k in 0..=r {
            for positions in combinations(n, k) {
                for defect_labels in label_tuples(k, d - 1) {
                    let mut t = vec![0usize; n];
                    for (p, l) in positions.iter().zip(&defect_labels) {
                        t[*p] = l + 1;
                    }
                    labels.push(t);
                }
            }
        }
        let lookup = labels
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Ok(PreferredBasis {
            n,
            r,
            d,
            site_basis,
            labels,
            lookup,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn site_dim(&self) -> usize {
        self.d
    }

    pub fn site_basis(&self) -> &Matrix {
        &self.site_basis
    }

    pub fn labels(&self) -> &[Vec<usize>] {
        &self.labels
    }

    pub fn index_of(&self, labels: &[usize]) -> Option<usize> {
        self.lookup.get(labels).copied()
    }

    /// The product vector `|Ψ_t⟩`.
    pub fn vector(&self, t: usize) -> Result<Vector> {
        let total = self
            .d
            .checked_pow(self.n as u32)
            .filter(|&x| x <= super::MAX_VECTOR_DIM);
        total.ok_or_else(|| Error::invalid("basis vector exceeds the vector budget"))?;
        let mut v = Vector::from_element(1, c(1.0));
        for &l in &self.labels[t] {
            v = v.kronecker(&self.site_basis.column(l).into_owned());
        }
        Ok(v)
    }

    /// Label vector with the positions permuted: the label at `p` moves to `perm[p]`.
    pub fn permuted_index(&self, t: usize, perm: &[usize]) -> usize {
        let mut out = vec![0usize; self.n];
        for (p, &l) in self.labels[t].iter().enumerate() {
            out[perm[p]] = l;
        }
        self.lookup[&out]
    }

    /// Coordinates of an `n`-site vector in the full site-basis product basis.
    pub fn to_site_coordinates(&self, v: &Vector) -> Vector {
        to_site_coordinates(v, &self.site_basis, self.n)
    }

    /// Flat product-basis index of a label vector.
    pub fn flat_index(&self, labels: &[usize]) -> usize {
        labels.iter().fold(0, |acc, &l| acc * self.d + l)
    }
}

/// Apply `U†` to each of `n` sites of a vector.
pub fn to_site_coordinates(v: &Vector, u: &Matrix, n: usize) -> Vector {
    let ud = u.adjoint();
    let mut out = v.clone();
    for k in 0..n {
        apply_site_matrix(&mut out, &ud, n, k);
    }
    out
}

/// In-place `M` on site `k` of an `n`-site vector with equal site dimension.
pub fn apply_site_matrix(v: &mut Vector, m: &Matrix, n: usize, k: usize) {
    let d = m.nrows();
    let post = d.pow((n - k - 1) as u32);
    let pre = v.len() / (d * post);
    let mut buf = vec![ZERO; d];
    for a in 0..pre {
        for b in 0..post {
            let base = a * d * post + b;
            for (i, slot) in buf.iter_mut().enumerate() {
                let mut s: C64 = ZERO;
                for j in 0..d {
                    s += m[(i, j)] * v[base + j * post];
                }
                *slot = s;
            }
            for (i, val) in buf.iter().enumerate() {
                v[base + i * post] = *val;
            }
        }
    }
}

/// Sorted `k`-subsets of `0..n` in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

/// All `k`-tuples over `0..m` in lexicographic order.
fn label_tuples(k: usize, m: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..k {
        let mut next = Vec::with_capacity(out.len() * m);
        for t in &out {
            for l in 0..m {
                let mut u = t.clone();
                u.push(l);
                next.push(u);
            }
        }
        out = next;
    }
    out
}
