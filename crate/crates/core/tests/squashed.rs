use almost_iid::entropies::{mutual_information, SolverConfig};
use almost_iid::linalg::*;
use almost_iid::rng;
use almost_iid::squashed::*;
use almost_iid::states::{bell_diagonal, bell_pair, random_density, random_pure};

fn h(p: &[f64]) -> f64 {
    p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.log2()).sum()
}

fn two_qubits() -> Dims {
    Dims::new(vec![2, 2]).unwrap()
}

fn classical_pair() -> DensityOperator {
    DensityOperator::new(Operator::diagonal(two_qubits(), &[0.5, 0.0, 0.0, 0.5]).unwrap()).unwrap()
}

/// `H(A)` of a pure state from its Schmidt coefficients.
fn schmidt_entropy(psi: &PureState, d_a: usize, d_b: usize) -> f64 {
    let m = Matrix::from_fn(d_a, d_b, |i, j| psi.amps()[i * d_b + j]);
    let s = m.singular_values();
    h(&s.iter().map(|x| x * x).collect::<Vec<_>>())
}

#[test]
fn trivial_extension_values() {
    let mut g = rng::seeded(1);
    for _ in 0..5 {
        let psi = random_pure(two_qubits(), &mut g).unwrap();
        let rho = DensityOperator::from_pure(&psi);
        let v = squashed_upper(&ExtensionCandidate::trivial(&rho, 1).unwrap()).unwrap();
        assert!((v - schmidt_entropy(&psi, 2, 2)).abs() < 1e-10);
    }
    let bell = DensityOperator::from_pure(&bell_pair());
    let v = squashed_upper(&ExtensionCandidate::trivial(&bell, 1).unwrap()).unwrap();
    assert!((v - 1.0).abs() < 1e-12);
    let cl = classical_pair();
    let v = squashed_upper(&ExtensionCandidate::trivial(&cl, 1).unwrap()).unwrap();
    assert!((v - 0.5).abs() < 1e-12);
}

#[test]
fn classical_copy_extension_is_zero() {
    let cl = classical_pair();
    let mut diag = vec![0.0; 8];
    diag[0] = 0.5;
    diag[7] = 0.5;
    let rho =
        DensityOperator::new(Operator::diagonal(Dims::new(vec![2, 2, 2]).unwrap(), &diag).unwrap())
            .unwrap();
    let ext = ExtensionCandidate::new(rho, cl, 1, Provenance::Explicit).unwrap();
    // H(AE) + H(BE) − H(ABE) − H(E) = 1 + 1 − 1 − 1.
    assert!(squashed_upper(&ext).unwrap().abs() < 1e-12);
}

#[test]
fn marginal_mismatch_rejected() {
    let cl = classical_pair();
    let rho = DensityOperator::maximally_mixed(Dims::new(vec![2, 2, 2]).unwrap());
    assert!(ExtensionCandidate::new(rho, cl, 1, Provenance::Explicit).is_err());
}

#[test]
fn search_on_pure_and_classical_states() {
    let budget = SearchBudget::default();
    let mut g = rng::seeded(2);
    let psi = random_pure(two_qubits(), &mut g).unwrap();
    let rho = DensityOperator::from_pure(&psi);
    let ext = extension_search(&rho, 1, 2, 3, &budget).unwrap();
    assert!((squashed_upper(&ext).unwrap() - schmidt_entropy(&psi, 2, 2)).abs() < 1e-3);

    let ext = extension_search(&classical_pair(), 1, 2, 3, &budget).unwrap();
    assert!(squashed_upper(&ext).unwrap() <= 1e-3);
    assert!(matches!(
        ext.provenance,
        Provenance::Searched { seed: 3, .. }
    ));
}

#[test]
fn search_never_worse_than_trivial() {
    let budget = SearchBudget {
        restarts: 4,
        sweeps: 60,
        ..SearchBudget::default()
    };
    let mut g = rng::seeded(4);
    for _ in 0..3 {
        let rho = random_density(two_qubits(), Some(2), &mut g).unwrap();
        let half_mi = 0.5 * mutual_information(rho.op(), 1).unwrap();
        let one = squashed_upper(&extension_search(&rho, 1, 1, 0, &budget).unwrap()).unwrap();
        assert!((one - half_mi).abs() < 1e-12);
        let two = squashed_upper(&extension_search(&rho, 1, 2, 0, &budget).unwrap()).unwrap();
        assert!(two <= one + 1e-9);
        assert!(two >= -1e-9);
    }
}

#[test]
fn search_is_deterministic() {
    let budget = SearchBudget {
        restarts: 4,
        sweeps: 40,
        ..SearchBudget::default()
    };
    let rho = bell_diagonal([0.6, 0.3, 0.1, 0.0]).unwrap();
    let a = extension_search(&rho, 1, 2, 17, &budget).unwrap();
    let b = extension_search(&rho, 1, 2, 17, &budget).unwrap();
    assert_eq!(a.rho_abe.mat(), b.rho_abe.mat());
    assert_eq!(a.provenance, b.provenance);
}

#[test]
fn search_budget_enforced() {
    let budget = SearchBudget {
        max_dim: 16,
        ..SearchBudget::default()
    };
    let rho = DensityOperator::maximally_mixed(two_qubits());
    assert!(matches!(
        extension_search(&rho, 1, 2, 0, &budget),
        Err(almost_iid::Error::BudgetExceeded { .. })
    ));
}

#[test]
fn superadditivity_spot_check() {
    let budget = SearchBudget::default();
    let cl = classical_pair();
    let bd = bell_diagonal([0.8, 0.2, 0.0, 0.0]).unwrap();
    let single = squashed_upper(&extension_search(&cl, 1, 2, 5, &budget).unwrap()).unwrap()
        + squashed_upper(&extension_search(&bd, 1, 2, 5, &budget).unwrap()).unwrap();
    // Factors [A, B, A', B'] regrouped as [A, A', B, B'].
    let joint = cl
        .kron(&bd)
        .unwrap()
        .permute_factors(&[0, 2, 1, 3])
        .unwrap();
    let joint_budget = SearchBudget {
        restarts: 4,
        sweeps: 40,
        ..budget
    };
    let joint = squashed_upper(&extension_search(&joint, 2, 2, 5, &joint_budget).unwrap()).unwrap();
    assert!(joint >= single - 2e-3, "joint {joint}, single sum {single}");
}

#[test]
fn comparison_tensor_power_is_exact() {
    let cfg = SolverConfig::default();
    let bell = DensityOperator::from_pure(&bell_pair());
    let (records, rows) = squashed_comparison(
        &ExtensionCandidate::trivial(&bell, 1).unwrap(),
        None,
        0,
        &[1, 2, 3],
        &cfg,
    )
    .unwrap();
    assert!(records.iter().all(|r| r.pass));
    for row in &rows {
        assert!((row.upper_per_copy - 1.0).abs() < 1e-10);
        assert_eq!(row.certified_gap, 0.0);
    }

    let rho = bell_diagonal([0.7, 0.2, 0.1, 0.0]).unwrap();
    let ext = extension_search(
        &rho,
        1,
        2,
        1,
        &SearchBudget {
            restarts: 2,
            sweeps: 30,
            ..SearchBudget::default()
        },
    )
    .unwrap();
    let (_, rows) = squashed_comparison(&ext, None, 0, &[2, 3], &cfg).unwrap();
    for row in &rows {
        assert!((row.upper_per_copy - row.single_copy_value).abs() < 1e-9);
    }
}

#[test]
fn comparison_with_one_defect() {
    let cfg = SolverConfig::default();
    let mut g = rng::seeded(8);
    let sigma = bell_diagonal([0.7, 0.1, 0.1, 0.1]).unwrap();
    let omega = random_density(two_qubits(), None, &mut g).unwrap();
    let ext = extension_search(&sigma, 1, 2, 8, &SearchBudget::default()).unwrap();
    let (records, rows) = squashed_comparison(&ext, Some(&omega), 1, &[2, 3], &cfg).unwrap();
    assert!(records.iter().all(|r| r.pass), "{records:?}");
    let d2 = (rows[0].upper_per_copy - rows[0].single_copy_value).abs();
    let d3 = (rows[1].upper_per_copy - rows[1].single_copy_value).abs();
    assert!(d3 < d2, "n=2: {d2}, n=3: {d3}");
    assert!(
        squashed_csv(&rows).starts_with("n,upper_per_copy,single_copy_value,certified_gap,pass\n")
    );
}
