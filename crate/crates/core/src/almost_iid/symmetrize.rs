//! Averages over site permutations.

use crate::error::{Error, Result};
use crate::linalg::{conjugate_by_permutation, Dims, Operator};

/// Ordered tuples of `k` distinct positions in `0..n`; there are `n!/(n−k)!`.
pub fn injective_placements(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    let mut used = vec![false; n];
    fn rec(n: usize, k: usize, cur: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for p in 0..n {
            if !used[p] {
                used[p] = true;
                cur.push(p);
                rec(n, k, cur, used, out);
                cur.pop();
                used[p] = false;
            }
        }
    }
    rec(n, k, &mut cur, &mut used, &mut out);
    out
}

/// Permutation sending source site `j < k` to `positions[j]` and the
/// remaining sources, in order, to the free positions in increasing order.
pub fn placement_permutation(positions: &[usize], n: usize) -> Vec<usize> {
    let mut taken = vec![false; n];
    for &p in positions {
        taken[p] = true;
    }
    let mut perm = positions.to_vec();
    perm.extend((0..n).filter(|&p| !taken[p]));
    perm
}

fn sites_of(x: &Operator, n: usize) -> Result<usize> {
    let f = x.dims().len();
    if n == 0 || !f.is_multiple_of(n) {
        return Err(Error::mismatch(format!(
            "{f} factors do not split into {n} sites"
        )));
    }
    let fps = f / n;
    let site = &x.dims().factors()[..fps];
    if x.dims().factors().chunks(fps).any(|s| s != site) {
        return Err(Error::mismatch("sites have different factorizations"));
    }
    Ok(fps)
}

/// `(1/n!) Σ_π P_π X P_π†` over `n` equal sites.
///
/// The group average is factored through the coset chain
/// `S_m = S_{m−1} · {(i m)}`, so the cost is `O(n² D²)` rather than `O(n! D²)`.
pub fn perm_symmetrize(x: &Operator, n: usize) -> Result<Operator> {
    let fps = sites_of(x, n)?;
    let mut cur = x.clone();
    for m in (2..=n).rev() {
        let mut acc = cur.clone();
        for i in 0..m - 1 {
            let mut perm: Vec<usize> = (0..n).collect();
            perm.swap(i, m - 1);
            acc = acc.add(&conjugate_by_permutation(&cur, &perm, fps)?)?;
        }
        cur = acc.scale(1.0 / m as f64);
    }
    Ok(cur)
}

/// `PERM(fill^{⊗(n−k)} ⊗ defect)` by enumerating the `n!/(n−k)!` ordered
/// placements of the `k` defect sites.
pub fn perm_symmetrize_defects(fill: &Operator, defect: &Operator, n: usize) -> Result<Operator> {
    let fps = fill.dims().len();
    if fps == 0 || !defect.dims().len().is_multiple_of(fps) {
        return Err(Error::mismatch(
            "defect operator is not a whole number of sites",
        ));
    }
    let k = defect.dims().len() / fps;
    if k > n {
        return Err(Error::invalid("more defect sites than sites"));
    }
    let placements = injective_placements(n, k);
    let dims = Dims::new(Dims::repeat(fill.dims(), n).factors().to_vec())?;
    let mut acc = Operator::zeros(dims);
    let w = 1.0 / placements.len() as f64;
    for pos in &placements {
        acc = acc.add(&arrange(defect, fill, pos, n)?.scale(w))?;
    }
    Ok(acc)
}

/// `defect` placed with its site `j` at `positions[j]`, `fill` on every other site.
pub fn arrange(
    defect: &Operator,
    fill: &Operator,
    positions: &[usize],
    n: usize,
) -> Result<Operator> {
    let fps = fill.dims().len();
    let mut x = defect.clone();
    for _ in positions.len()..n {
        x = x.kron(fill)?;
    }
    if positions.iter().enumerate().all(|(j, &p)| j == p) {
        return Ok(x);
    }
    conjugate_by_permutation(&x, &placement_permutation(positions, n), fps)
}
