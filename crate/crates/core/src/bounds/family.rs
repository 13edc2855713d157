//! Defect mixtures `PERM(σ^{⊗(n−r)} ⊗ ω)` with `σ` and `ω` diagonal in a
//! fixed product basis of `A ⊗ B`. The state is then a permutation-invariant
//! classical distribution over basis strings, so its entropies follow from
//! a sum over types instead of a `(d_A d_B)^n`-dimensional eigenproblem.

use crate::almost_iid::basis::combinations;
use crate::almost_iid::{construct_mixture_with_defects, Witness};
use crate::error::{Error, Result};
use crate::linalg::{c, DensityOperator, Dims, Matrix, Operator, Vector};
use crate::states::bell_basis;

/// Product basis of `A ⊗ B` in which the family is diagonal.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DiagonalFrame {
    /// `|a⟩|b⟩`, label `a·d_B + b`.
    Computational { d_a: usize, d_b: usize },
    /// Two-qubit Bell basis `Φ⁺, Φ⁻, Ψ⁺, Ψ⁻`.
    Bell,
}

impl DiagonalFrame {
    fn dims(self) -> (usize, usize) {
        match self {
            DiagonalFrame::Computational { d_a, d_b } => (d_a, d_b),
            DiagonalFrame::Bell => (2, 2),
        }
    }

    fn vector(self, label: usize) -> Vector {
        match self {
            DiagonalFrame::Computational { d_a, d_b } => {
                let mut v = Vector::zeros(d_a * d_b);
                v[label] = c(1.0);
                v
            }
            DiagonalFrame::Bell => bell_basis()[label].clone(),
        }
    }

    fn operator(self, weights: &[f64]) -> Result<Operator> {
        let (d_a, d_b) = self.dims();
        let mut m = Matrix::zeros(d_a * d_b, d_a * d_b);
        for (label, &w) in weights.iter().enumerate() {
            let v = self.vector(label);
            m += &v * v.adjoint() * c(w);
        }
        Operator::new(Dims::new(vec![d_a, d_b])?, m)
    }
}

#[derive(Clone, Debug)]
pub struct DiagonalDefectFamily {
    pub frame: DiagonalFrame,
    /// Site weights of `σ`, length `d_A d_B`.
    pub p: Vec<f64>,
    /// Weights of `ω` over label strings of length `r`, first site most significant.
    pub q: Vec<f64>,
    pub r: usize,
}

fn check_distribution(w: &[f64], len: usize, what: &str) -> Result<()> {
    if w.len() != len {
        return Err(Error::mismatch(format!(
            "{what} has {} weights, expected {len}",
            w.len()
        )));
    }
    if w.iter().any(|&x| !(x >= 0.0)) || (w.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
        return Err(Error::invalid(format!(
            "{what} is not a probability vector"
        )));
    }
    Ok(())
}

fn shannon(p: &[f64]) -> f64 {
    p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.log2()).sum()
}

/// All count vectors of length `alphabet` summing to `n`.
fn types(n: usize, alphabet: usize) -> Vec<Vec<usize>> {
    fn go(left: usize, slots: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if slots == 1 {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for v in 0..=left {
            cur.push(v);
            go(left - v, slots - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(n, alphabet, &mut Vec::new(), &mut out);
    out
}

fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// Shannon entropy of `PERM(p^{⊗(n−r)} ⊗ q)` with `q` a distribution on
/// strings of length `r` over an alphabet of size `p.len()`.
fn mixture_entropy(p: &[f64], q: &[f64], n: usize, r: usize) -> f64 {
    let alphabet = p.len();
    let placements = combinations(n, r);
    let mut total = 0.0;
    for t in types(n, alphabet) {
        let x: Vec<usize> = t
            .iter()
            .enumerate()
            .flat_map(|(s, &k)| std::iter::repeat_n(s, k))
            .collect();
        let mut prob = 0.0;
        for pos in &placements {
            let mut inside = vec![false; n];
            let mut qi = 0;
            for &j in pos {
                inside[j] = true;
                qi = qi * alphabet + x[j];
            }
            let fill: f64 = (0..n).filter(|&j| !inside[j]).map(|j| p[x[j]]).product();
            prob += q[qi] * fill;
        }
        prob /= placements.len() as f64;
        if prob > 0.0 {
            let ln_mult = ln_factorial(n) - t.iter().map(|&k| ln_factorial(k)).sum::<f64>();
            total -= ln_mult.exp() * prob * prob.log2();
        }
    }
    total
}

impl DiagonalDefectFamily {
    pub fn new(frame: DiagonalFrame, p: Vec<f64>, q: Vec<f64>, r: usize) -> Result<Self> {
        let (d_a, d_b) = frame.dims();
        let d = d_a * d_b;
        check_distribution(&p, d, "σ")?;
        check_distribution(&q, d.pow(r as u32), "ω")?;
        Ok(DiagonalDefectFamily { frame, p, q, r })
    }

    pub fn d_a(&self) -> usize {
        self.frame.dims().0
    }

    pub fn d_b(&self) -> usize {
        self.frame.dims().1
    }

    pub fn sigma(&self) -> Result<DensityOperator> {
        DensityOperator::new(self.frame.operator(&self.p)?)
    }

    pub fn omega(&self) -> Result<Option<DensityOperator>> {
        if self.r == 0 {
            return Ok(None);
        }
        let (d_a, d_b) = self.frame.dims();
        let dims = Dims::repeat(&Dims::new(vec![d_a, d_b])?, self.r);
        let d = self.p.len();
        let mut m = Matrix::zeros(dims.total(), dims.total());
        for (idx, &w) in self.q.iter().enumerate().filter(|(_, &w)| w > 0.0) {
            let mut v = Vector::from_element(1, c(1.0));
            for site in (0..self.r).rev() {
                v = v.kronecker(&self.frame.vector(idx / d.pow(site as u32) % d));
            }
            m += &v * v.adjoint() * c(w);
        }
        Ok(Some(DensityOperator::new(Operator::new(dims, m)?)?))
    }

    /// Witness for the `n`-site member of the family.
    pub fn witness(&self, n: usize) -> Result<Witness> {
        let sigma = self.sigma()?;
        let omega = self.omega()?;
        construct_mixture_with_defects(&sigma, omega.as_ref(), n, self.r)
    }

    /// `H(A|B)_σ`.
    pub fn sigma_conditional_entropy(&self) -> f64 {
        match self.frame {
            DiagonalFrame::Bell => shannon(&self.p) - 1.0,
            DiagonalFrame::Computational { d_a, d_b } => {
                let pb: Vec<f64> = (0..d_b)
                    .map(|b| (0..d_a).map(|a| self.p[a * d_b + b]).sum())
                    .collect();
                shannon(&self.p) - shannon(&pb)
            }
        }
    }

    /// `(1/n) H(A^n|B^n)` for `ρ = PERM(σ^{⊗(n−r)} ⊗ ω)`.
    pub fn conditional_entropy_per_copy(&self, n: usize) -> Result<f64> {
        if n < self.r || n == 0 {
            return Err(Error::invalid(format!("need n ≥ max(r, 1), got n = {n}")));
        }
        let joint = mixture_entropy(&self.p, &self.q, n, self.r);
        let b = match self.frame {
            // Every product of Bell states has maximally mixed B marginal.
            DiagonalFrame::Bell => n as f64,
            DiagonalFrame::Computational { d_a, d_b } => {
                let pb: Vec<f64> = (0..d_b)
                    .map(|b| (0..d_a).map(|a| self.p[a * d_b + b]).sum())
                    .collect();
                let d = d_a * d_b;
                let mut qb = vec![0.0; d_b.pow(self.r as u32)];
                for (idx, &w) in self.q.iter().enumerate() {
                    let mut rest = idx;
                    let mut bi = 0;
                    let mut scale = 1;
                    for _ in 0..self.r {
                        bi += (rest % d % d_b) * scale;
                        scale *= d_b;
                        rest /= d;
                    }
                    qb[bi] += w;
                }
                mixture_entropy(&pb, &qb, n, self.r)
            }
        };
        Ok((joint - b) / n as f64)
    }

    /// Per-copy gap `(1/n) H(A^n|B^n)_ρ − H(A|B)_σ`.
    pub fn gap(&self, n: usize) -> Result<f64> {
        Ok(self.conditional_entropy_per_copy(n)? - self.sigma_conditional_entropy())
    }
}
