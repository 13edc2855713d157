use almost_iid::almost_iid::basis::{binomial, defect_count, site_basis};
use almost_iid::almost_iid::symmetrize::injective_placements;
use almost_iid::almost_iid::verify::antisymmetric_purification_witness;
use almost_iid::almost_iid::*;
use almost_iid::entropies::pinching;
use almost_iid::linalg::*;
use almost_iid::rng;
use almost_iid::states::{bell_diagonal, random_density};
use proptest::prelude::*;

fn qubit(p0: f64) -> DensityOperator {
    DensityOperator::new(Operator::diagonal(Dims::single(2), &[p0, 1.0 - p0]).unwrap()).unwrap()
}

/// All permutations of `0..n` (Heap's algorithm), independent of the
/// coset-factored symmetrizer under test.
fn all_permutations(n: usize) -> Vec<Vec<usize>> {
    let mut a: Vec<usize> = (0..n).collect();
    let mut out = vec![a.clone()];
    let mut c = vec![0usize; n];
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                a.swap(0, i);
            } else {
                a.swap(c[i], i);
            }
            out.push(a.clone());
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    out
}

fn brute_symmetrize(x: &Operator, n: usize) -> Operator {
    let fps = x.dims().len() / n;
    let perms = all_permutations(n);
    let mut acc = Operator::zeros(x.dims().clone());
    for p in &perms {
        acc = acc
            .add(&conjugate_by_permutation(x, p, fps).unwrap())
            .unwrap();
    }
    acc.scale(1.0 / perms.len() as f64)
}

#[test]
fn heap_enumeration_is_complete() {
    let mut p = all_permutations(5);
    assert_eq!(p.len(), 120);
    p.sort();
    p.dedup();
    assert_eq!(p.len(), 120);
}

#[test]
fn index_set_size_and_chain() {
    assert_eq!(defect_count(4, 1, 4), Some(13));
    let (t, mid, right) = defect_count_chain(4, 1, 4);
    assert_eq!(t, 13.0);
    assert_eq!(mid, 16.0);
    assert!((right - 1024.0 / 27.0).abs() < 1e-9, "{right}");
    let theta = Vector::from_vec(vec![c(1.0), c(0.0), c(0.0), c(0.0)]);
    let b = build_preferred_basis(&theta, 4, 1).unwrap();
    assert_eq!(b.len(), 13);
    assert_eq!(b.labels()[0], vec![0, 0, 0, 0]);
    assert_eq!(b.labels()[1], vec![1, 0, 0, 0]);
    assert_eq!(b.labels()[4], vec![0, 1, 0, 0]);
}

#[test]
fn site_basis_starts_with_theta_and_is_unitary() {
    let mut g = rng::seeded(2);
    let theta = almost_iid::states::random_pure(Dims::single(5), &mut g).unwrap();
    let u = site_basis(theta.amps()).unwrap();
    assert!((u.column(0).into_owned() - theta.amps()).norm() < 1e-14);
    assert!(max_abs(&(u.adjoint() * &u - Matrix::identity(5, 5))) < 1e-13);
}

#[test]
fn basis_vectors_are_orthonormal() {
    let mut g = rng::seeded(9);
    let theta = almost_iid::states::random_pure(Dims::single(3), &mut g).unwrap();
    let b = build_preferred_basis(theta.amps(), 3, 1).unwrap();
    let vs: Vec<Vector> = (0..b.len()).map(|t| b.vector(t).unwrap()).collect();
    for i in 0..vs.len() {
        for j in 0..vs.len() {
            let ip = vs[i].dotc(&vs[j]);
            let expect = if i == j { 1.0 } else { 0.0 };
            assert!((ip - c(expect)).norm() < 1e-12);
        }
    }
}

#[test]
fn coset_symmetrizer_matches_full_enumeration() {
    let mut g = rng::seeded(21);
    for n in 2..=4 {
        let x = random_density(Dims::new(vec![2; n]).unwrap(), None, &mut g).unwrap();
        let fast = perm_symmetrize(x.op(), n).unwrap();
        let slow = brute_symmetrize(x.op(), n);
        assert!(fast.sub(&slow).unwrap().max_abs() < 1e-14, "n = {n}");
    }
}

#[test]
fn placement_symmetrizer_matches_full_enumeration() {
    let mut g = rng::seeded(8);
    let sigma = random_density(Dims::single(2), None, &mut g).unwrap();
    let omega = random_density(Dims::single(2), None, &mut g).unwrap();
    let n = 5;
    let reduced = perm_symmetrize_defects(sigma.op(), omega.op(), n).unwrap();
    let mut prod = omega.op().clone();
    for _ in 1..n {
        prod = prod.kron(sigma.op()).unwrap();
    }
    let full = brute_symmetrize(&prod, n);
    assert!(reduced.sub(&full).unwrap().max_abs() < 1e-12);
    assert_eq!(
        injective_placements(5, 2).len(),
        (binomial(5, 2).unwrap() * 2) as usize
    );
}

#[test]
fn defect_mixture_visible_state() {
    let sigma = qubit(1.0);
    let omega = qubit(0.0);
    let w = construct_mixture_with_defects(&sigma, Some(&omega), 3, 1).unwrap();
    let vis = w.visible_marginal(3).unwrap();
    let mut diag = vec![0.0; 8];
    diag[1] = 1.0 / 3.0;
    diag[2] = 1.0 / 3.0;
    diag[4] = 1.0 / 3.0;
    let expect = Operator::diagonal(Dims::new(vec![2, 2, 2]).unwrap(), &diag).unwrap();
    assert!(vis.sub(&expect).unwrap().max_abs() < 1e-15);
    let rep = verify_membership(&w).unwrap();
    assert!(rep.pass, "{rep:?}");
}

#[test]
fn structured_and_dense_views_agree() {
    let mut g = rng::seeded(4);
    let sigma = random_density(Dims::single(2), None, &mut g).unwrap();
    let omega = random_density(Dims::single(2), None, &mut g).unwrap();
    let w = construct_mixture_with_defects(&sigma, Some(&omega), 3, 1).unwrap();
    let dense = w.materialize().unwrap();
    let from_ensemble = w
        .ensemble()
        .unwrap()
        .iter()
        .fold(Matrix::zeros(dense.dim(), dense.dim()), |acc, (p, v)| {
            acc + v * v.adjoint() * c(*p)
        });
    assert!(max_abs(&(from_ensemble - dense.mat())) < 1e-14);

    let dw = Witness {
        extension: Extension::Dense(dense.clone()),
        ..w.clone()
    };
    let b1 = beta_matrix(&w).unwrap();
    let b2 = beta_matrix(&dw).unwrap();
    assert!(max_abs(&(&b1.beta - &b2.beta)) < 1e-13);
    assert!(b1.support_residual < 1e-12 && b2.support_residual < 1e-7);
    assert!(verify_membership(&dw).unwrap().pass);

    for k in 1..=3 {
        let a = w.visible_marginal(k).unwrap();
        let b = dw.visible_marginal(k).unwrap();
        assert!(a.sub(b.op()).unwrap().max_abs() < 1e-14);
    }
}

#[test]
fn pinching_compressed_matches_dense() {
    let mut g = rng::seeded(12);
    let sigma = random_density(Dims::single(2), None, &mut g).unwrap();
    let omega = random_density(Dims::single(2), None, &mut g).unwrap();
    let w = construct_mixture_with_defects(&sigma, Some(&omega), 3, 1).unwrap();
    let rho = w.materialize().unwrap();
    let basis = build_preferred_basis(w.theta.amps(), 3, 1).unwrap();
    let vecs: Vec<PureState> = (0..basis.len())
        .map(|t| PureState::new(rho.dims().clone(), basis.vector(t).unwrap()).unwrap())
        .collect();
    let p = pinching(&rho, &vecs).unwrap();
    let m = p.scale(basis.len() as f64).sub(&rho).unwrap();
    let dense_min = m.min_eigenvalue();
    let rep = pinching_check(&w).unwrap();
    assert!(rep.record.pass);
    assert!(dense_min > -1e-9);
    // The compressed operator carries the nonzero spectrum of the dense one;
    // the rest of the dense spectrum is zero.
    assert!((rep.min_eigenvalue.min(0.0) - dense_min.min(0.0)).abs() < 1e-9);
}

#[test]
fn singlet_is_relaxed_witness_but_not_strict() {
    let w = singlet_witness().unwrap();
    let rep = verify_membership(&w).unwrap();
    assert!(rep.pass, "{rep:?}");
    let strict = antisymmetric_purification_witness().unwrap();
    let rep = verify_membership(&strict).unwrap();
    assert!(rep.permutation_residual < 1e-12);
    assert!(rep.marginal_residual < 1e-12);
    assert!(
        (rep.support_residual - 0.5f64.sqrt()).abs() < 1e-9,
        "{}",
        rep.support_residual
    );
    for d_e in 2..=4 {
        let gap = strict_definition_gap(d_e).unwrap();
        assert!((gap - 0.5).abs() < 1e-9, "d_E = {d_e}: {gap}");
    }
}

#[test]
fn witness_transformations_preserve_membership() {
    let mut g = rng::seeded(31);
    let sigma = random_density(Dims::single(2), None, &mut g).unwrap();
    let omega = random_density(Dims::single(2), None, &mut g).unwrap();
    let w = construct_mixture_with_defects(&sigma, Some(&omega), 3, 1).unwrap();

    let m = marginal_witness(&w, 1).unwrap();
    assert_eq!((m.n, m.r), (2, 1));
    let rep = verify_membership(&m).unwrap();
    assert!(rep.pass, "{:?}", rep.records);
    let direct = w.visible_marginal(2).unwrap();
    assert!(
        m.visible_marginal(2)
            .unwrap()
            .sub(direct.op())
            .unwrap()
            .max_abs()
            < 1e-14
    );

    let small = construct_mixture_with_defects(&sigma, Some(&omega), 2, 1).unwrap();
    let tp = tensor_power_witness(&small, 2).unwrap();
    assert_eq!((tp.n, tp.r, tp.kind), (4, 2, WitnessKind::Product));
    assert!(verify_membership(&tp).unwrap().pass);

    let iid = iid_witness(&sigma, 3).unwrap();
    let other = construct_mixture_with_defects(&sigma, Some(&omega), 3, 1).unwrap();
    let iid_r1 = Witness {
        r: 1,
        ..iid.clone()
    };
    if iid_r1.theta == other.theta {
        let mixed = iid_r1.mix(0.3, &other).unwrap();
        assert!(verify_membership(&mixed).unwrap().pass);
    }
}

#[test]
fn convex_mixture_of_witnesses_verifies() {
    let sigma = qubit(0.8);
    let o1 = qubit(0.1);
    let o2 = qubit(0.5);
    let a = construct_mixture_with_defects(&sigma, Some(&o1), 3, 1).unwrap();
    let b = construct_mixture_with_defects(&sigma, Some(&o2), 3, 1).unwrap();
    assert_eq!(a.theta, b.theta);
    let m = a.mix(0.4, &b).unwrap();
    let rep = verify_membership(&m).unwrap();
    assert!(rep.pass, "{:?}", rep.records);
}

#[test]
fn tracing_a_visible_factor_keeps_a_witness() {
    let sigma = bell_diagonal([0.85, 0.05, 0.05, 0.05]).unwrap();
    let omega = bell_diagonal([0.1, 0.2, 0.3, 0.4]).unwrap();
    let w = construct_mixture_with_defects(&sigma, Some(&omega), 2, 1).unwrap();
    assert!(verify_membership(&w).unwrap().pass);
    let a = trace_visible_tail(&w).unwrap();
    assert_eq!(a.sigma.dims().factors(), &[2]);
    assert!(verify_membership(&a).unwrap().pass);
}

#[test]
fn extension_to_an_extra_visible_system() {
    let mut g = rng::seeded(17);
    let sigma_ae = random_density(Dims::new(vec![2, 2]).unwrap(), None, &mut g).unwrap();
    let sigma = sigma_ae.partial_trace(&[1]).unwrap();
    let omega = random_density(Dims::single(2), None, &mut g).unwrap();
    let w = construct_mixture_with_defects(&sigma, Some(&omega), 3, 1).unwrap();
    let ext = extend_witness(&w, &sigma_ae).unwrap();
    assert_eq!(ext.sigma.dims().factors(), &[2, 2]);
    assert!(verify_membership(&ext).unwrap().pass);
    let vis = ext.visible_marginal(3).unwrap();
    let back = vis.partial_trace(&[1, 3, 5]).unwrap();
    assert!(
        back.sub(w.visible_marginal(3).unwrap().op())
            .unwrap()
            .max_abs()
            < 1e-12
    );
    let single = ext.visible_marginal(1).unwrap();
    assert!((single.trace().re - 1.0).abs() < 1e-12);
}

#[test]
fn witness_json_round_trip() {
    let w = singlet_witness().unwrap();
    let s = w.to_json(None).unwrap();
    let back = Witness::from_json(&s).unwrap();
    assert_eq!(back.materialize().unwrap(), w.materialize().unwrap());
    assert!(verify_membership(&back).unwrap().pass);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn index_count_chain(n in 1usize..=12, r in 0usize..=12, d in 1usize..=5) {
        prop_assume!(r <= n);
        let (t, mid, right) = defect_count_chain(n, r, d);
        prop_assert!(t <= mid * (1.0 + 1e-12));
        prop_assert!(mid <= right * (1.0 + 1e-9));
    }

    #[test]
    fn pinching_inequality_on_random_defect_mixtures(seed in 0u64..1000, n in 2usize..=4) {
        let mut g = rng::seeded(seed);
        let sigma = random_density(Dims::single(2), None, &mut g).unwrap();
        let omega = random_density(Dims::single(2), None, &mut g).unwrap();
        let w = construct_mixture_with_defects(&sigma, Some(&omega), n, 1).unwrap();
        let rep = pinching_check(&w).unwrap();
        prop_assert!(rep.record.pass, "{:?}", rep);
    }
}
