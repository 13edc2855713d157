use almost_iid::classical::*;
use almost_iid::rng;
use almost_iid::states::ClassicalDistribution;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::RngExt;

fn q(a: i64, b: i64) -> BigRational {
    BigRational::new(BigInt::from(a), BigInt::from(b))
}

/// Pmf of the number of ones among the first `n` of `n + k` positions,
/// counted over all placements of `m` ones.
fn enumerate_pmf(n: u64, k: u64, m: u64) -> Vec<BigRational> {
    let total = n + k;
    let mut counts = vec![0u64; n.min(m) as usize + 1];
    let mut all = 0u64;
    for mask in 0u64..(1 << total) {
        if mask.count_ones() as u64 != m {
            continue;
        }
        all += 1;
        counts[(mask & ((1 << n) - 1)).count_ones() as usize] += 1;
    }
    counts
        .into_iter()
        .map(|c| q(c as i64, all as i64))
        .collect()
}

/// Pascal's triangle up to row `rows`.
fn pascal(rows: usize) -> Vec<Vec<BigInt>> {
    let mut t: Vec<Vec<BigInt>> = vec![vec![BigInt::one()]];
    for n in 1..=rows {
        let prev = &t[n - 1];
        let row = (0..=n)
            .map(|k| {
                let a = if k > 0 {
                    prev[k - 1].clone()
                } else {
                    BigInt::zero()
                };
                let b = if k < n {
                    prev[k].clone()
                } else {
                    BigInt::zero()
                };
                a + b
            })
            .collect();
        t.push(row);
    }
    t
}

#[test]
fn pmf_examples() {
    let p = subsample_pmf(SubsampleParams::new(2, 2, 2).unwrap()).unwrap();
    assert_eq!(p, vec![q(1, 6), q(2, 3), q(1, 6)]);
    let p = subsample_pmf(SubsampleParams::new(5, 0, 3).unwrap()).unwrap();
    assert_eq!(p, vec![q(0, 1), q(0, 1), q(0, 1), q(1, 1)]);
    let p = subsample_pmf(SubsampleParams::new(5, 4, 0).unwrap()).unwrap();
    assert_eq!(p, vec![q(1, 1)]);
    assert!(SubsampleParams::new(2, 2, 5).is_err());
}

#[test]
fn pmf_matches_enumeration() {
    for total in 0..=12u64 {
        for n in 0..=total {
            for m in 0..=total {
                let p = SubsampleParams::new(n, total - n, m).unwrap();
                assert_eq!(
                    subsample_pmf(p).unwrap(),
                    enumerate_pmf(n, total - n, m),
                    "{p:?}"
                );
            }
        }
    }
    for (n, k, m) in [(10, 10, 7), (12, 8, 10), (3, 17, 9)] {
        let p = SubsampleParams::new(n, k, m).unwrap();
        let pmf = subsample_pmf(p).unwrap();
        assert_eq!(pmf, enumerate_pmf(n, k, m));
        assert_eq!(pmf.iter().sum::<BigRational>(), BigRational::one());
    }
}

#[test]
fn moment_identities_exact() {
    for n in 0..=12u64 {
        for k in 0..=12u64 {
            for m in 0..=n + k {
                let p = SubsampleParams::new(n, k, m).unwrap();
                let pmf = subsample_pmf(p).unwrap();
                let (mean, var, second) = pmf_moments(&pmf);
                assert_eq!(pmf.iter().sum::<BigRational>(), BigRational::one());
                if n + k >= 1 {
                    assert_eq!(subsample_mean(p).unwrap(), mean, "{p:?}");
                }
                if n + k >= 2 {
                    assert_eq!(subsample_variance(p).unwrap(), var, "{p:?}");
                    assert_eq!(subsample_second_moment(p).unwrap(), second, "{p:?}");
                }
            }
        }
    }
}

#[test]
fn moment_examples() {
    let p = SubsampleParams::new(2, 2, 2).unwrap();
    assert_eq!(subsample_mean(p).unwrap(), q(1, 1));
    assert_eq!(subsample_variance(p).unwrap(), q(1, 3));
    let p = SubsampleParams::new(4, 4, 4).unwrap();
    assert_eq!(subsample_mean(p).unwrap(), q(2, 1));
    // 4·4·4·4 / (7·64) = 4/7, confirmed by the pmf moments.
    assert_eq!(subsample_variance(p).unwrap(), q(4, 7));
    assert_eq!(pmf_moments(&subsample_pmf(p).unwrap()).1, q(4, 7));
    assert_eq!(
        subsample_variance(SubsampleParams::new(3, 4, 7).unwrap()).unwrap(),
        q(0, 1)
    );
    assert!(subsample_variance(SubsampleParams::new(1, 0, 1).unwrap()).is_err());
}

#[test]
fn vandermonde_identity() {
    let t = pascal(60);
    for r in 0..=30u64 {
        for s in 0..=30u64 {
            for c in 0..=30u64 {
                assert!(vandermonde_holds(r, s, c));
            }
            for c in 0..=r {
                assert_eq!(binomial(r, c), t[r as usize][c as usize]);
            }
        }
    }
    assert_eq!(binomial(3, 5), BigInt::zero());
}

#[test]
fn mixture_variance_superadditive() {
    let point = |x: usize| {
        let mut p = vec![0.0; 2];
        p[x] = 1.0;
        ClassicalDistribution::from_probs(p).unwrap()
    };
    let rec = mixture_variance_check(&point(0), &point(1), 0.5).unwrap();
    assert!(rec.pass && (rec.rhs - 0.25).abs() < 1e-15 && rec.lhs == 0.0);
    let mut g = rng::seeded(17);
    let mut random = |len: usize| {
        let w: Vec<f64> = (0..len).map(|_| g.random::<f64>()).collect();
        let s: f64 = w.iter().sum();
        ClassicalDistribution::from_probs(w.into_iter().map(|x| x / s).collect()).unwrap()
    };
    for t in [0.0, 1.0] {
        let (a, b) = (random(6), random(6));
        let rec = mixture_variance_check(&a, &b, t).unwrap();
        assert!((rec.lhs - rec.rhs).abs() < 1e-12);
    }
    let mut tg = rng::seeded(18);
    for _ in 0..1000 {
        let (a, b) = (random(8), random(8));
        let rec = mixture_variance_check(&a, &b, tg.random::<f64>()).unwrap();
        assert!(rec.pass, "{rec:?}");
    }
}

/// Variance of the number of ones for `n` bits: the first `r` drawn jointly
/// from `defect` (index bit `i` = position `i`), the rest iid Bernoulli(`q`).
fn defect_sum_variance(q: f64, n: usize, r: usize, defect: &[f64]) -> f64 {
    let (mut m1, mut m2) = (0.0, 0.0);
    for mask in 0u64..(1 << n) {
        let head = (mask & ((1 << r) - 1)) as usize;
        let tail = mask >> r;
        let ones = tail.count_ones() as i32;
        let p = defect[head] * q.powi(ones) * (1.0 - q).powi((n - r) as i32 - ones);
        let x = mask.count_ones() as f64;
        m1 += p * x;
        m2 += p * x * x;
    }
    m2 - m1 * m1
}

#[test]
fn almost_iid_variance_bound() {
    assert_eq!(almost_iid_variance_lower_bound(0.3, 5, 5).unwrap(), 0.0);
    assert_eq!(almost_iid_variance_lower_bound(0.5, 100, 0).unwrap(), 25.0);
    assert!(almost_iid_variance_lower_bound(0.5, 3, 4).is_err());
    let mut g = rng::seeded(23);
    for trial in 0..20 {
        let r = if trial == 0 { 2 } else { 1 + trial % 4 };
        let w: Vec<f64> = (0..1 << r).map(|_| g.random::<f64>()).collect();
        let s: f64 = w.iter().sum();
        let defect: Vec<f64> = w.into_iter().map(|x| x / s).collect();
        let direct = defect_sum_variance(0.3, 10, r, &defect);
        let bound = almost_iid_variance_lower_bound(0.3, 10, r as u64).unwrap();
        assert!(direct >= bound - 1e-12, "r = {r}: {direct} < {bound}");
        if r == 2 {
            assert!((bound - 1.68).abs() < 1e-12);
        }
    }
}

#[test]
fn nogo_slopes() {
    let grid: Vec<u64> = (6..=12).map(|e| 1u64 << e).collect();
    let t = nogo_scaling_experiment(0.5, &grid).unwrap();
    assert!(t.records().iter().all(|r| r.pass), "{:?}", t.records());
    assert!((t.slope_var - 0.5).abs() < 0.1);
    assert!((t.slope_bound - 1.0).abs() < 0.05);
    let last = t.rows.last().unwrap();
    assert!(last.var_p * 10.0 < last.mixture_bound);
    let t9 = nogo_scaling_experiment(0.9, &grid).unwrap();
    assert!(t9.slope_var > t.slope_var && (t9.slope_var - 0.9).abs() < 0.1);
    assert!(nogo_scaling_experiment(0.5, &grid[..3]).is_err());
    assert!(t.csv().starts_with("n,k,m,r,var_p,mixture_bound\n"));
    assert!(t.sidecar_json().contains("\"rounding\":\"floor\""));
}
