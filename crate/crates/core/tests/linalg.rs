use almost_iid::linalg::*;
use almost_iid::rng;
use almost_iid::states::{random_density, random_pure};
use approx::assert_abs_diff_eq;
use proptest::prelude::*;

fn ket(d: usize, i: usize) -> PureState {
    PureState::basis(Dims::single(d), i).unwrap()
}

fn proj(d: usize, i: usize) -> Operator {
    ket(d, i).projector().unwrap()
}

#[test]
fn kron_of_basis_projectors() {
    let x = kron(&proj(2, 0), &proj(2, 1)).unwrap();
    let expect = Operator::diagonal(Dims::new(vec![2, 2]).unwrap(), &[0.0, 1.0, 0.0, 0.0]).unwrap();
    assert_eq!(x, expect);
    assert_eq!(x.dims().factors(), &[2, 2]);
}

#[test]
fn partial_trace_of_bell_pair_is_maximally_mixed() {
    let bell = almost_iid::states::bell_pair().projector().unwrap();
    let red = partial_trace(&bell, &[0]).unwrap();
    assert_abs_diff_eq!(
        red.sub(&Operator::identity(Dims::single(2)).scale(0.5))
            .unwrap()
            .max_abs(),
        0.0,
        epsilon = 1e-15
    );
    let red_b = bell.marginal(&[0]).unwrap();
    assert_abs_diff_eq!(red_b.mat()[(0, 0)].re, 0.5, epsilon = 1e-15);
}

#[test]
fn marginal_respects_requested_order() {
    let mut g = rng::seeded(3);
    let a = random_density(Dims::single(2), None, &mut g).unwrap();
    let b = random_density(Dims::single(3), None, &mut g).unwrap();
    let ab = a.kron(&b).unwrap();
    let ba = ab.marginal(&[1, 0]).unwrap();
    assert!(ba.sub(b.kron(&a).unwrap().op()).unwrap().max_abs() < 1e-14);
}

#[test]
fn swap_and_cycle_conventions() {
    let swap = permutation_operator(&[1, 0], 2).unwrap();
    let k01 = ket(2, 0).kron(&ket(2, 1));
    let k10 = ket(2, 1).kron(&ket(2, 0));
    assert_eq!(swap.mat() * k01.amps(), k10.amps().clone());

    let cyc = permutation_operator(&[1, 2, 0], 2).unwrap();
    let s12 = permutation_operator(&[1, 0, 2], 2).unwrap();
    let s23 = permutation_operator(&[0, 2, 1], 2).unwrap();
    let prod = s12.mul(&s23).unwrap();
    assert_eq!(cyc.mat(), prod.mat());
}

#[test]
fn conjugation_by_relabeling_matches_operator_product() {
    let mut g = rng::seeded(11);
    let x = random_density(Dims::new(vec![2, 2, 2]).unwrap(), None, &mut g).unwrap();
    let perm = [2, 0, 1];
    let p = permutation_operator(&perm, 2).unwrap();
    let direct = p.conjugate(x.op()).unwrap();
    let relabeled = conjugate_by_permutation(x.op(), &perm, 1).unwrap();
    assert!(direct.sub(&relabeled).unwrap().max_abs() < 1e-15);
}

#[test]
fn pseudo_inverse_square_root() {
    let x = Operator::diagonal(Dims::single(2), &[4.0, 0.0]).unwrap();
    let y = matrix_power(&x, -0.5);
    let expect = Operator::diagonal(Dims::single(2), &[0.5, 0.0]).unwrap();
    assert!(y.sub(&expect).unwrap().max_abs() < 1e-15);
    let p = support_projector(&x);
    assert!(
        p.sub(&Operator::diagonal(Dims::single(2), &[1.0, 0.0]).unwrap())
            .unwrap()
            .max_abs()
            < 1e-15
    );
}

#[test]
fn fidelity_and_distances_on_qubit_examples() {
    let plus =
        PureState::normalized(Dims::single(2), Vector::from_vec(vec![c(1.0), c(1.0)])).unwrap();
    let f = fidelity(&proj(2, 0), &plus.projector().unwrap()).unwrap();
    assert_abs_diff_eq!(f, 0.5, epsilon = 1e-12);
    let mixed = Operator::identity(Dims::single(2)).scale(0.5);
    assert_abs_diff_eq!(
        trace_distance(&mixed, &proj(2, 0)).unwrap(),
        0.5,
        epsilon = 1e-14
    );
    assert_abs_diff_eq!(
        purified_distance(&proj(2, 0), &proj(2, 1)).unwrap(),
        1.0,
        epsilon = 1e-12
    );
}

#[test]
fn density_validation_rejects_bad_input() {
    let bad = Operator::diagonal(Dims::single(2), &[0.7, 0.4]).unwrap();
    assert!(matches!(
        DensityOperator::new(bad),
        Err(almost_iid::Error::NotNormalized(_))
    ));
    let neg = Operator::diagonal(Dims::single(2), &[1.1, -0.1]).unwrap();
    assert!(matches!(
        DensityOperator::new(neg),
        Err(almost_iid::Error::NotPositive(_))
    ));
    assert!(matches!(
        Dims::new(vec![8192, 2]),
        Err(almost_iid::Error::BudgetExceeded { .. })
    ));
}

#[test]
fn operator_json_round_trip_is_bit_exact() {
    let mut g = rng::seeded(5);
    let x = random_density(Dims::new(vec![2, 3]).unwrap(), None, &mut g).unwrap();
    let s = x.op().to_json();
    let y = Operator::from_json(&s).unwrap();
    assert_eq!(x.op(), &y);
    assert!(s.contains("\"dims\":[2,3]"));
}

#[test]
fn trace_norm_of_non_hermitian_uses_singular_values() {
    let mut m = Matrix::zeros(2, 2);
    m[(0, 1)] = c(3.0);
    let x = Operator::new(Dims::single(2), m).unwrap();
    assert_abs_diff_eq!(x.trace_norm(), 3.0, epsilon = 1e-14);
}

fn seeded_state(seed: u64, dims: Vec<usize>) -> DensityOperator {
    let mut g = rng::seeded(seed);
    random_density(Dims::new(dims).unwrap(), None, &mut g).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn partial_trace_preserves_trace_and_positivity(seed in 0u64..10_000, da in 1usize..4, db in 1usize..4) {
        let rho = seeded_state(seed, vec![da, db]);
        let red = rho.partial_trace(&[1]).unwrap();
        prop_assert!((red.trace().re - 1.0).abs() < 1e-12);
        prop_assert!(red.min_eigenvalue() > -1e-12);
    }

    #[test]
    fn eigendecomposition_reconstructs(seed in 0u64..10_000, d in 1usize..9) {
        let rho = seeded_state(seed, vec![d]);
        let e = rho.eigh();
        let rec = e.apply(|l| l);
        prop_assert!(max_abs(&(rec - rho.mat())) <= 1e-10 * (1.0 + rho.max_abs()));
        prop_assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn fidelity_is_symmetric_and_bounded(seed in 0u64..10_000, d in 2usize..5) {
        let a = seeded_state(seed, vec![d]);
        let b = seeded_state(seed + 1, vec![d]);
        let f1 = fidelity(&a, &b).unwrap();
        let f2 = fidelity(&b, &a).unwrap();
        prop_assert!((f1 - f2).abs() < 1e-9);
        prop_assert!(f1 > -1e-12 && f1 < 1.0 + 1e-12);
        let dist = trace_distance(&a, &b).unwrap();
        prop_assert!(1.0 - f1.sqrt() <= dist + 1e-9);
        prop_assert!(dist <= (1.0 - f1).max(0.0).sqrt() + 1e-9);
    }

    #[test]
    fn pure_fidelity_is_overlap(seed in 0u64..10_000, d in 2usize..6) {
        let mut g = rng::seeded(seed);
        let a = random_pure(Dims::single(d), &mut g).unwrap();
        let b = random_pure(Dims::single(d), &mut g).unwrap();
        let f = fidelity(&a.projector().unwrap(), &b.projector().unwrap()).unwrap();
        let overlap = a.amps().dotc(b.amps()).norm_sqr();
        prop_assert!((f - overlap).abs() < 1e-7);
    }
}
