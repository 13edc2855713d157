use almost_iid::almost_iid::{construct_mixture_with_defects, iid_witness, verify_membership};
use almost_iid::bounds::*;
use almost_iid::entropies::{conditional_entropy, RenyiOrder, SolverConfig};
use almost_iid::linalg::*;
use almost_iid::rng;
use almost_iid::states::{bell_diagonal, random_density, Povm};
use proptest::prelude::*;

fn qubit(p0: f64) -> DensityOperator {
    DensityOperator::new(Operator::diagonal(Dims::single(2), &[p0, 1.0 - p0]).unwrap()).unwrap()
}

fn h(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        0.0
    } else {
        -x * x.log2() - (1.0 - x) * (1.0 - x).log2()
    }
}

fn bell_family(r: usize) -> DiagonalDefectFamily {
    let q = if r == 0 {
        vec![1.0]
    } else {
        vec![0.1, 0.2, 0.3, 0.4]
    };
    DiagonalDefectFamily::new(DiagonalFrame::Bell, vec![0.7, 0.1, 0.1, 0.1], q, r).unwrap()
}

#[test]
fn binary_entropy_values_and_domain() {
    assert_eq!(binary_entropy(0.5).unwrap(), 1.0);
    assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
    assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
    assert!((binary_entropy(0.25).unwrap() - 0.811278).abs() < 1e-6);
    assert!(binary_entropy(-0.1).is_err());
    assert!(binary_entropy(1.5).is_err());
}

#[test]
fn definetti_formulas() {
    assert_eq!(quantum_definetti_error(100, 100, 2).unwrap(), 4.0);
    assert_eq!(classical_definetti_error(1, 0, 2).unwrap(), 4.0);
    assert!(quantum_definetti_error(5, 1_000_000_000, 2).unwrap() < 1e-6 * 2.0 * 4.0 * 5.0);
    assert!(quantum_definetti_error(0, 0, 2).is_err());
    let e = exp_definetti_error(16, 8, 4, 2).unwrap();
    assert!((e - 192.0 * (-5.0f64 / 3.0).exp()).abs() < 1e-12);
    assert!((e - 36.264).abs() < 1e-3);
    let mut prev = f64::INFINITY;
    for r in 0..100 {
        let v = exp_definetti_error(16, 8, r, 2).unwrap();
        assert!(v < prev);
        prev = v;
    }
    assert!(prev < 1e-6);
    assert!(exp_definetti_error(4, 0, 1, 2).is_err());
}

#[test]
fn exp_definetti_decay_rate() {
    let ns: Vec<usize> = (8..=16).map(|e| 1usize << e).collect();
    let fit = exp_definetti_scaling(2, &ns).unwrap();
    // k(r+1)/(n+k) = (n^{1/4} + n^{-1/4})/(1 + n^{-1/4}) ≈ n^{1/4} − 1.
    assert!((fit.rate + 1.0).abs() < 0.1, "rate {}", fit.rate);
    assert!(
        (fit.log_coefficient - 1.5).abs() < 0.2,
        "log coefficient {}",
        fit.log_coefficient
    );
    let exponent: Vec<f64> = fit
        .points
        .iter()
        .map(|&(n, k, r, _)| {
            -(k as f64) * (r as f64 + 1.0) / (n + k) as f64 / (n as f64).powf(0.25)
        })
        .collect();
    assert!(exponent.last().unwrap() < exponent.first().unwrap());
    assert!((exponent.last().unwrap() + 1.0).abs() < 0.1);
}

#[test]
fn statistics_threshold_formula() {
    let f = statistics_threshold(0.1, 0, 100, 2, 2).unwrap();
    let oracle = 2.0 * (10f64.log2() / 100.0 + 0.02 * 51f64.log2()).sqrt();
    assert!((f - oracle).abs() < 1e-12);
    // The quoted reference value 0.76596 is rounded; the exact value is 0.765945.
    assert!((f - 0.76596).abs() < 5e-5);
    assert!(statistics_threshold(0.1, 6, 10, 2, 2).is_err());
    let mut prev = f64::INFINITY;
    for e in 2..=6 {
        let n = 10usize.pow(e);
        let r = (n as f64).cbrt().floor() as usize;
        let v = statistics_threshold(0.1, r, n, 2, 2).unwrap();
        assert!(v < prev);
        prev = v;
    }
    assert!(prev < 0.1);
}

#[test]
fn alpha_schedule_readings() {
    let s = alpha_schedule(10_000, 100).unwrap();
    let l = (0.01f64).log2();
    assert!((s.literal - (1.0 + 1.0 / l)).abs() < 1e-12);
    assert!((s.literal - 0.8495).abs() < 1e-4);
    assert!(s.above > 1.0 && s.below < 1.0 && s.below >= 0.5);
    assert!(!s.below_clamped);
    assert!(alpha_schedule(4, 3).unwrap().below_clamped);
    assert!(alpha_schedule(10, 0).is_err());
}

#[test]
fn aep_deltas_terms() {
    // Without defects only the ε terms remain.
    let (eps, alpha) = (0.1f64, 2.0);
    let d = delta_eps(100, 0, alpha, eps, 2, 4).unwrap();
    let oracle = (1.0 / (eps * eps)).log2() / (100.0 * (alpha - 1.0))
        + (1.0 / (1.0 - eps * eps)).log2() / 100.0;
    assert!((d - oracle).abs() < 1e-14);
    let dp = delta_prime_eps(100, 0, 0.5, eps, 2, 4).unwrap();
    assert!((dp - (1.0 / eps).log2() / 100.0).abs() < 1e-14);
    // Full expression against direct arithmetic.
    let (n, r) = (1000usize, 10usize);
    let x = r as f64 / n as f64;
    let d = delta_eps(n, r, 1.5, eps, 2, 4).unwrap();
    let oracle = 2.0 * x
        + 3.0 * (h(x) + 2.0 * x * 2.0)
        + 2.0 * (100f64).log2() / n as f64
        + (1.0 / 0.99f64).log2() / n as f64;
    assert!((d - oracle).abs() < 1e-12);
    let params = BoundParams {
        n: 10_000,
        r: 100,
        ..Default::default()
    };
    let out = aep_deltas(&params).unwrap();
    assert!(out.alpha > 1.0 && out.alpha_prime < 1.0);
    assert!(aep_deltas(&BoundParams {
        alpha: Some(1.0),
        ..params.clone()
    })
    .is_err());
    let fixed = aep_deltas(&BoundParams {
        alpha: Some(3.0),
        ..params
    })
    .unwrap();
    assert_eq!(fixed.alpha, 3.0);
}

#[test]
fn aep_deltas_vanish() {
    let mut prev = f64::INFINITY;
    for e in 2..=8 {
        let n = 10usize.pow(e);
        let r = (n as f64).sqrt().floor() as usize;
        let p = BoundParams {
            n,
            r,
            ..Default::default()
        };
        let d = aep_deltas(&p).unwrap().delta;
        assert!(d < prev, "δ not decreasing at n = {n}");
        prev = d;
    }
    assert!(prev < 0.1);
    let mut prev = f64::INFINITY;
    for e in 2..=8 {
        let n = 10usize.pow(e);
        let r = (n as f64).cbrt().floor() as usize;
        let p = BoundParams {
            n,
            r,
            ..Default::default()
        };
        let d = aep_deltas(&p).unwrap().delta_prime;
        assert!(d < prev, "δ' not decreasing at n = {n}");
        prev = d;
    }
}

/// Marginal of `PERM(σ^{⊗(n−1)} ⊗ ω)` on `s` sites assembled directly:
/// the defect lands inside with probability `s/n`, uniformly over positions.
fn single_defect_marginal(sigma: &Operator, omega: &Operator, n: usize, s: usize) -> Operator {
    let mut acc = sigma
        .tensor_power(s)
        .unwrap()
        .scale((n - s) as f64 / n as f64);
    for j in 0..s {
        let mut term = Operator::identity(Dims::new(vec![]).unwrap());
        for i in 0..s {
            term = term.kron(if i == j { omega } else { sigma }).unwrap();
        }
        acc = acc.add(&term.scale(1.0 / n as f64)).unwrap();
    }
    acc
}

#[test]
fn marginal_against_direct_marginal() {
    let sigma = qubit(0.7);
    let mut g = rng::seeded(3);
    let omega = random_density(Dims::single(2), None, &mut g).unwrap();
    for (n, s) in [(8, 1), (12, 2), (10, 2)] {
        let w = construct_mixture_with_defects(&sigma, Some(&omega), n, 1).unwrap();
        let rec = marginal_certify(&w, s).unwrap();
        let oracle = single_defect_marginal(sigma.op(), omega.op(), n, s)
            .sub(&sigma.op().tensor_power(s).unwrap());
        assert!((rec.lhs - oracle.unwrap().trace_norm()).abs() < 1e-10);
        assert!((rec.rhs - 4.0 * (s as f64 / n as f64).sqrt()).abs() < 1e-14);
        assert!(rec.pass, "{rec:?}");
        assert_eq!(rec.metadata["vacuous"], (rec.rhs >= 2.0).to_string());
    }
    let w = iid_witness(&sigma, 6).unwrap();
    let rec = marginal_certify(&w, 3).unwrap();
    assert!(rec.lhs < 1e-12 && rec.rhs == 0.0 && rec.pass);
}

#[test]
fn statistics_certify_exact_enumeration() {
    let w = iid_witness(&qubit(0.7), 8).unwrap();
    let rec = statistics_certify(&w, &Povm::computational(2), 0.2).unwrap();
    assert!(rec.pass, "{rec:?}");
    let mut g = rng::seeded(5);
    let omega = random_density(Dims::single(2), None, &mut g).unwrap();
    let w = construct_mixture_with_defects(&qubit(0.7), Some(&omega), 8, 1).unwrap();
    for eps in [0.1, 0.3] {
        let rec = statistics_certify(&w, &Povm::computational(2), eps).unwrap();
        assert!(rec.pass, "{rec:?}");
    }
}

#[test]
fn renyi_defect_tensor_power_is_additive() {
    let mut g = rng::seeded(11);
    let sigma = random_density(Dims::new(vec![2, 2]).unwrap(), None, &mut g).unwrap();
    let w = iid_witness(&sigma, 2).unwrap();
    let cfg = SolverConfig::default();
    for alpha in [0.5, 0.75, 2.0] {
        let (value, single, _) =
            renyi_defect_value(&w, 1, RenyiOrder::new(alpha).unwrap(), &cfg).unwrap();
        assert!(
            (value - single).abs() < 1e-5,
            "α = {alpha}: {value} vs {single}"
        );
    }
}

#[test]
fn renyi_defect_witness() {
    let sigma = bell_diagonal([0.7, 0.1, 0.1, 0.1]).unwrap();
    let omega = bell_diagonal([0.1, 0.2, 0.3, 0.4]).unwrap();
    let w = construct_mixture_with_defects(&sigma, Some(&omega), 3, 1).unwrap();
    let cfg = SolverConfig::default();
    for alpha in [0.5, 2.0] {
        let (rec, report) =
            renyi_defect_certify(&w, 1, RenyiOrder::new(alpha).unwrap(), &cfg).unwrap();
        assert!(rec.pass, "{rec:?}");
        assert!(rec.margin() > 0.0);
        assert!(!report.stale);
    }
    assert!(renyi_defect_certify(&w, 1, RenyiOrder::One, &cfg).is_err());
}

#[test]
fn diagonal_family_matches_dense_entropy() {
    let grouped = |w: &almost_iid::almost_iid::Witness| {
        let n = w.n;
        let order: Vec<usize> = (0..n)
            .map(|j| 2 * j)
            .chain((0..n).map(|j| 2 * j + 1))
            .collect();
        w.visible_marginal(n)
            .unwrap()
            .op()
            .permute_factors(&order)
            .unwrap()
    };
    let classical = DiagonalDefectFamily::new(
        DiagonalFrame::Computational { d_a: 2, d_b: 2 },
        vec![0.4, 0.1, 0.2, 0.3],
        vec![0.05, 0.45, 0.35, 0.15],
        1,
    )
    .unwrap();
    for family in [bell_family(1), classical] {
        let sigma = family.sigma().unwrap();
        assert!(
            (conditional_entropy(sigma.op(), 1).unwrap() - family.sigma_conditional_entropy())
                .abs()
                < 1e-12
        );
        for n in 1..=4 {
            let w = family.witness(n).unwrap();
            let dense = conditional_entropy(&grouped(&w), n).unwrap() / n as f64;
            let typed = family.conditional_entropy_per_copy(n).unwrap();
            assert!((dense - typed).abs() < 1e-9, "n = {n}: {dense} vs {typed}");
        }
    }
    let q = vec![1.0 / 16.0; 16];
    let two =
        DiagonalDefectFamily::new(DiagonalFrame::Bell, vec![0.7, 0.1, 0.1, 0.1], q, 2).unwrap();
    let w = two.witness(3).unwrap();
    let dense = conditional_entropy(&grouped(&w), 3).unwrap() / 3.0;
    assert!((dense - two.conditional_entropy_per_copy(3).unwrap()).abs() < 1e-9);
}

#[test]
fn entropy_gap_family_values() {
    let cfg = SolverConfig::default();
    let (records, rows) = entropy_gap_certify(&bell_family(1), &[4, 6, 8, 10], &cfg).unwrap();
    assert!(records.iter().all(|r| r.pass), "{records:?}");
    assert!(
        rows.windows(2).all(|w| w[1].gap.abs() < w[0].gap.abs()),
        "{rows:?}"
    );
    for row in &rows {
        assert!((row.eps_n - (2.0 * (1.0 / row.n as f64).sqrt()).min(1.0)).abs() < 1e-14);
    }
    let (records, rows) = entropy_gap_certify(&bell_family(0), &[2, 5], &cfg).unwrap();
    assert!(records.iter().all(|r| r.pass));
    assert!(rows.iter().all(|r| r.gap.abs() < 1e-12));
}

#[test]
fn family_witnesses_verify() {
    for n in [2, 4] {
        let report = verify_membership(&bell_family(1).witness(n).unwrap()).unwrap();
        assert!(report.pass, "{:?}", report.records);
    }
}

#[test]
fn block_cmi_blocks() {
    let sigma = qubit(0.7);
    let mut g = rng::seeded(9);
    let omega = random_density(Dims::single(2), None, &mut g).unwrap();
    let w = construct_mixture_with_defects(&sigma, Some(&omega), 6, 1).unwrap();
    let rhs = 6.0 * h(2.0 / 6.0) + 2.0 * (w.site_dim() as f64).log2();
    for m in 2..=6 {
        let rec = block_cmi_certify(&w, 1, 1, m).unwrap();
        assert!(rec.pass, "{rec:?}");
        assert!(rec.lhs > 0.0);
        assert!((rec.rhs - rhs).abs() < 1e-12);
    }
    assert!(block_cmi_certify(&w, 2, 2, 3).is_err());
    let iid = iid_witness(&sigma, 6).unwrap();
    for m in 2..=6 {
        let rec = block_cmi_certify(&iid, 1, 1, m).unwrap();
        assert!(rec.lhs.abs() < 1e-9 && rec.pass);
    }
    let xi = xi_n(&w, 2).unwrap();
    assert_eq!(xi.per_ell.len(), 3);
    assert!(xi.value >= -1e-9 && xi.value == xi.per_ell[xi.ell]);
    assert!(xi_n(&iid, 2).unwrap().value.abs() < 1e-9);
}

#[test]
fn eta_and_aep_record() {
    let bell = bell_diagonal([1.0, 0.0, 0.0, 0.0]).unwrap();
    let cfg = SolverConfig::default();
    // H_min = H_max = −1 for a Bell pair.
    assert!((eta(bell.op(), 1, &cfg).unwrap() - (2f64.sqrt() + 0.5f64.sqrt() + 1.0)).abs() < 1e-5);
    let sigma = bell_diagonal([0.7, 0.1, 0.1, 0.1]).unwrap();
    let rec = aep_record(sigma.op(), 1, 1000, 10, 0.1, &cfg).unwrap();
    assert!(rec.min_lower < rec.h && rec.max_upper > rec.h);
    assert!(rec.schedule.is_some());
    let rec0 = aep_record(sigma.op(), 1, 1000, 0, 0.1, &cfg).unwrap();
    assert!(rec0.schedule.is_none() && rec0.alpha > 1.0 && rec0.alpha_prime < 1.0);
}

#[test]
fn continuity_bounds() {
    let u = entropy_gap_upper(100, 1, 2).unwrap();
    let e = 0.2;
    assert!((u - (2.0 * e + 1.2 * h(e / 1.2))).abs() < 1e-14);
    assert!((block_cmi_bound(6, 0, 4).unwrap()).abs() < 1e-15);
    assert!(block_cmi_bound(6, 4, 4).is_err());
    assert!((squashed_continuity(0.1, 2, 2).unwrap() - (2.4 + 6.0 * h(0.1))).abs() < 1e-14);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn evaluators_finite_and_nonnegative(
        n in 1usize..100_000,
        k in 1usize..100_000,
        rf in 0.0f64..0.5,
        sf in 0.0f64..1.0,
        d in 1usize..16,
        eps in 0.001f64..0.999,
        alpha_up in 1.001f64..10.0,
        alpha_down in 0.5f64..0.999,
    ) {
        let r = (rf * n as f64).floor() as usize;
        let s = (sf * n as f64).floor() as usize;
        let vals = [
            classical_definetti_error(n, k, d).unwrap(),
            quantum_definetti_error(n, k, d).unwrap(),
            exp_definetti_error(n, k, r, d).unwrap(),
            marginal_bound(n, r, s).unwrap(),
            statistics_threshold(eps, r, n, d, d).unwrap(),
            delta_eps(n, r, alpha_up, eps, d, d * d).unwrap(),
            delta_prime_eps(n, r, alpha_down, eps, d, d * d).unwrap(),
            entropy_gap_upper(n, r, d).unwrap(),
            block_cmi_bound(n, r, d * d).unwrap(),
            binary_entropy(rf).unwrap(),
        ];
        for v in vals {
            prop_assert!(v.is_finite() && v >= 0.0, "{vals:?}");
        }
    }
}
