//! Default desk-scale certification suite run by `verify-all`.
//!
//! Every section is deterministic given the seed; sections that draw random
//! states use independent streams of it.

use almost_iid::almost_iid::{
    construct_mixture_with_defects, iid_witness, pinching_check, singlet_witness,
    strict_definition_gap, verify_membership, Witness,
};
use almost_iid::bounds::{
    aep_record, block_cmi_certify, entropy_gap_certify, marginal_certify, renyi_defect_certify,
    statistics_certify, DiagonalDefectFamily, DiagonalFrame, CERT_TOL,
};
use almost_iid::classical::{
    mixture_variance_check, nogo_scaling_experiment, pmf_moments, subsample_mean, subsample_pmf,
    subsample_second_moment, subsample_variance, vandermonde_holds, SubsampleParams,
};
use almost_iid::entropies::{
    cmi, conditional_entropy, h_max, h_min_certificate_check, h_min_certified, mutual_information,
    smooth_interval_tensor_power, RenyiOrder, SmoothKind, SolverConfig,
};
use almost_iid::linalg::{DensityOperator, Dims, Operator};
use almost_iid::record::CertificationRecord;
use almost_iid::rng;
use almost_iid::squashed::{
    extension_search, squashed_comparison, ExtensionCandidate, SearchBudget,
};
use almost_iid::states::{bell_pair, random_density, singlet, ClassicalDistribution, Povm};
use almost_iid::Result;
use num_traits::One;
use rand::RngExt;

/// Records produced by one group of checks.
#[derive(Clone, Debug)]
pub struct Section {
    pub name: &'static str,
    pub records: Vec<CertificationRecord>,
}

/// Stream ids of the seeded draws.
mod streams {
    pub const DEFECT: u64 = 1;
    pub const MIXTURES: u64 = 2;
    pub const ONE_SHOT: u64 = 3;
}

/// `σ_A = diag(0.7, 0.3)`.
pub fn qubit_sigma() -> DensityOperator {
    DensityOperator::new(Operator::diagonal(Dims::single(2), &[0.7, 0.3]).expect("valid dims"))
        .expect("valid state")
}

/// Seeded single-qubit defect state.
pub fn qubit_omega(seed: u64) -> Result<DensityOperator> {
    random_density(
        Dims::single(2),
        None,
        &mut rng::stream(seed, streams::DEFECT),
    )
}

/// Qubit-pair family with Bell-diagonal `σ` and one Bell-diagonal defect.
pub fn pair_family(r: usize) -> Result<DiagonalDefectFamily> {
    let q = if r == 0 {
        vec![1.0]
    } else {
        vec![0.1, 0.2, 0.3, 0.4]
    };
    DiagonalDefectFamily::new(DiagonalFrame::Bell, vec![0.7, 0.1, 0.1, 0.1], q, r)
}

/// Record with the smallest margin among `records`, annotated with the
/// number of cases it summarizes.
pub fn worst(records: Vec<CertificationRecord>) -> CertificationRecord {
    let count = records.len();
    let pass_all = records.iter().all(|r| r.pass);
    let mut w = records
        .into_iter()
        .min_by(|a, b| (a.margin() + a.tol).total_cmp(&(b.margin() + b.tol)))
        .expect("non-empty record set");
    w.pass = pass_all;
    w.with("cases", count)
}

/// Exact hypergeometric moments against their closed forms, and the
/// Vandermonde identity, over a full grid.
pub fn subsample_exactness() -> Result<Section> {
    let mut mismatches = 0usize;
    let mut cases = 0usize;
    for n in 0..=10u64 {
        for k in 0..=10u64 {
            for m in 0..=n + k {
                let p = SubsampleParams::new(n, k, m)?;
                let pmf = subsample_pmf(p)?;
                let (mean, var, second) = pmf_moments(&pmf);
                let total: num_rational::BigRational = pmf.iter().sum();
                cases += 1;
                let mut ok = total.is_one();
                if n + k >= 1 {
                    ok &= mean == subsample_mean(p)?;
                }
                if n + k >= 2 {
                    ok &= var == subsample_variance(p)? && second == subsample_second_moment(p)?;
                }
                mismatches += usize::from(!ok);
            }
        }
    }
    let mut vm = 0usize;
    for r in 0..=30 {
        for s in 0..=30 {
            for t in 0..=r + s {
                vm += usize::from(!vandermonde_holds(r, s, t));
            }
        }
    }
    Ok(Section {
        name: "subsample",
        records: vec![
            CertificationRecord::le(
                "subsample_moments",
                "subsample-moments",
                mismatches as f64,
                0.0,
                0.0,
            )
            .with("cases", cases),
            CertificationRecord::le("vandermonde", "subsample-moments", vm as f64, 0.0, 0.0),
        ],
    })
}

fn random_distribution(len: usize, g: &mut rng::Prng) -> Result<ClassicalDistribution> {
    let w: Vec<f64> = (0..len).map(|_| g.random::<f64>() + 1e-3).collect();
    let s: f64 = w.iter().sum();
    ClassicalDistribution::from_probs(w.iter().map(|x| x / s).collect())
}

/// Variance slopes of subsampled strings against almost-iid strings, and
/// superadditivity of variance under mixing on seeded pairs.
pub fn variance_separation(seed: u64) -> Result<Section> {
    let grid: Vec<u64> = (6..=12).map(|e| 1u64 << e).collect();
    let mut records = nogo_scaling_experiment(0.5, &grid)?.records();
    let mut g = rng::stream(seed, streams::MIXTURES);
    let mut mix = Vec::new();
    for _ in 0..200 {
        let len = g.random_range(2..8usize);
        let p = random_distribution(len, &mut g)?;
        let q = random_distribution(len, &mut g)?;
        let t = g.random::<f64>();
        mix.push(mixture_variance_check(&p, &q, t)?);
    }
    records.push(worst(mix));
    Ok(Section {
        name: "variance",
        records,
    })
}

/// Qubit witnesses `PERM(σ^{⊗(n−1)} ⊗ ω)` of the marginal-distance checks.
pub fn qubit_witnesses(seed: u64) -> Result<Vec<Witness>> {
    let sigma = qubit_sigma();
    let omega = qubit_omega(seed)?;
    [8, 10, 12]
        .iter()
        .map(|&n| construct_mixture_with_defects(&sigma, Some(&omega), n, 1))
        .collect()
}

pub fn marginal_distance(seed: u64) -> Result<Section> {
    let mut records = Vec::new();
    for w in qubit_witnesses(seed)? {
        for s in [1, 2] {
            records.push(marginal_certify(&w, s)?);
        }
    }
    Ok(Section {
        name: "marginal",
        records,
    })
}

pub fn measurement_statistics(seed: u64) -> Result<Section> {
    let sigma = qubit_sigma();
    let omega = qubit_omega(seed)?;
    let povm = Povm::computational(2);
    let mut records = Vec::new();
    for w in [
        iid_witness(&sigma, 8)?,
        construct_mixture_with_defects(&sigma, Some(&omega), 8, 1)?,
    ] {
        for eps in [0.1, 0.3] {
            records.push(statistics_certify(&w, &povm, eps)?);
        }
    }
    Ok(Section {
        name: "statistics",
        records,
    })
}

/// Membership of every witness used by the suite, and the pinching
/// inequality on each.
pub fn witnesses_and_pinching(seed: u64) -> Result<Section> {
    let mut ws = qubit_witnesses(seed)?;
    let sigma = qubit_sigma();
    let omega = qubit_omega(seed)?;
    ws.push(construct_mixture_with_defects(&sigma, Some(&omega), 6, 1)?);
    ws.push(iid_witness(&sigma, 6)?);
    let fam = pair_family(1)?;
    for n in [2, 3] {
        ws.push(fam.witness(n)?);
    }
    ws.push(singlet_witness()?);
    let mut records = Vec::new();
    for w in &ws {
        let m = verify_membership(w)?;
        records.extend(
            m.records
                .into_iter()
                .map(|r| r.with("n", w.n).with("r", w.r)),
        );
        records.push(pinching_check(w)?.record);
    }
    Ok(Section {
        name: "witness",
        records,
    })
}

/// Rényi orders of the smooth-entropy brackets.
pub const BRACKET_ORDERS: [f64; 6] = [0.5, 0.75, 1.1, 1.5, 2.0, f64::INFINITY];

pub const RENYI_ORDERS: [f64; 4] = [0.5, 0.75, 2.0, 4.0];

/// Per-copy conditional Rényi entropies of the qubit-pair family against
/// the defect-corrected bounds, solver tolerance `1e-5`.
pub fn renyi_defect(cfg: &SolverConfig) -> Result<Section> {
    let cfg = SolverConfig {
        tol: cfg.tol.min(1e-5),
        ..cfg.clone()
    };
    let fam = pair_family(1)?;
    let mut records = Vec::new();
    for n in [2, 3] {
        let w = fam.witness(n)?;
        for alpha in RENYI_ORDERS {
            records.push(renyi_defect_certify(&w, 1, RenyiOrder::new(alpha)?, &cfg)?.0);
        }
    }
    Ok(Section {
        name: "renyi",
        records,
    })
}

pub const GAP_GRID: [usize; 4] = [4, 6, 8, 10];

/// Conditional-entropy gap inside the certified interval, and `|g_n|`
/// nonincreasing over the grid.
pub fn entropy_gap(cfg: &SolverConfig) -> Result<Section> {
    let (mut records, rows) = entropy_gap_certify(&pair_family(1)?, &GAP_GRID, cfg)?;
    let rise = rows
        .windows(2)
        .map(|w| w[1].gap.abs() - w[0].gap.abs())
        .fold(f64::NEG_INFINITY, f64::max);
    records.push(CertificationRecord::le(
        "entropy_gap_monotone",
        "conditional-entropy-gap",
        rise,
        0.0,
        0.0,
    ));
    Ok(Section {
        name: "entropy_gap",
        records,
    })
}

/// Seeded states for the one-shot checks: `count` of each of `2⊗2`, `2⊗4`.
pub fn one_shot_states(seed: u64, count: usize) -> Result<Vec<DensityOperator>> {
    let mut g = rng::stream(seed, streams::ONE_SHOT);
    let mut out = Vec::with_capacity(2 * count);
    for f in [[2usize, 2], [2, 4]] {
        for _ in 0..count {
            out.push(random_density(Dims::new(f.to_vec())?, None, &mut g)?);
        }
    }
    Ok(out)
}

/// `H_min` certificates, `H_max` duality against `H_min` of the
/// purification, and `H_max ≥ H ≥ H_min`.
pub fn one_shot(seed: u64, cfg: &SolverConfig) -> Result<Section> {
    let (mut gaps, mut viol, mut dual, mut order) =
        (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for rho in one_shot_states(seed, 50)? {
        let (hmin, cert) = h_min_certified(rho.op(), 1)?;
        let chk = h_min_certificate_check(rho.op(), 1, &cert)?;
        gaps.push(CertificationRecord::le(
            "h_min_gap",
            "one-shot-duality",
            chk.gap,
            1e-6,
            0.0,
        ));
        let v = chk
            .primal_violation
            .max(chk.dual_psd_violation)
            .max(chk.dual_constraint_violation);
        viol.push(CertificationRecord::le(
            "h_min_feasibility",
            "one-shot-duality",
            v,
            0.0,
            1e-9,
        ));
        let hmax = h_max(rho.op(), 1, cfg)?;
        let res = hmax.duality_gap.map(f64::abs).unwrap_or(f64::INFINITY);
        dual.push(CertificationRecord::le(
            "h_max_duality",
            "one-shot-duality",
            res,
            1e-6,
            0.0,
        ));
        let h = conditional_entropy(rho.op(), 1)?;
        let worst_order = (h - hmax.value).max(hmin.value - h);
        order.push(CertificationRecord::le(
            "one_shot_ordering",
            "one-shot-duality",
            worst_order,
            0.0,
            1e-6,
        ));
    }
    Ok(Section {
        name: "one_shot",
        records: vec![worst(gaps), worst(viol), worst(dual), worst(order)],
    })
}

/// The strict purification-based definition excludes `|Ψ⁻⟩` while the
/// relaxed witness for it verifies.
pub fn definition_separation() -> Result<Section> {
    let gap = strict_definition_gap(2)?;
    let mut records = vec![
        CertificationRecord::le(
            "strict_gap_value",
            "almost-iid-definition",
            (gap - 0.5).abs(),
            0.0,
            1e-9,
        )
        .with("value", gap),
        CertificationRecord::le(
            "strict_gap_below_one",
            "almost-iid-definition",
            gap,
            1.0 - 1e-6,
            0.0,
        ),
    ];
    let m = verify_membership(&singlet_witness()?)?;
    records.extend(m.records.into_iter().map(|r| r.with("witness", "singlet")));
    Ok(Section {
        name: "definition",
        records,
    })
}

/// Block conditional mutual information against its defect bound, and
/// vanishing block CMI without defects.
pub fn block_cmi(seed: u64) -> Result<Section> {
    let sigma = qubit_sigma();
    let omega = qubit_omega(seed)?;
    let w = construct_mixture_with_defects(&sigma, Some(&omega), 6, 1)?;
    let iid = iid_witness(&sigma, 6)?;
    let mut records = Vec::new();
    for m in 2..=6 {
        records.push(block_cmi_certify(&w, 1, 1, m)?);
        let rho = iid.visible_marginal(m)?;
        let lhs = if m == 2 {
            mutual_information(rho.op(), 1)?
        } else {
            cmi(rho.op(), 1, 1)?
        };
        records.push(
            CertificationRecord::le("block_cmi_iid", "block-cmi", lhs, 1e-9, 0.0)
                .with("n", 6)
                .with("r", 0)
                .with("m", m),
        );
    }
    Ok(Section {
        name: "block_cmi",
        records,
    })
}

/// Per-copy smooth-entropy bounds: ordered around `H(A|B)`, and for
/// tensor powers the min-entropy lower bound below the Rényi bracket's
/// upper end.
pub fn aep(cfg: &SolverConfig) -> Result<Section> {
    let sigma = pair_family(0)?.sigma()?;
    let mut records = Vec::new();
    for (n, r) in [(16, 1), (64, 2), (256, 4), (8, 0), (64, 0)] {
        let rec = aep_record(sigma.op(), 1, n, r, 0.1, cfg)?;
        records.push(
            CertificationRecord::le(
                "aep_ordering",
                "smooth-entropy-bounds",
                rec.min_lower,
                rec.max_upper,
                CERT_TOL,
            )
            .with("n", n)
            .with("r", r)
            .with("eps", 0.1),
        );
        if r == 0 {
            let br = smooth_interval_tensor_power(
                sigma.op(),
                1,
                n,
                0.1,
                SmoothKind::Min,
                &BRACKET_ORDERS,
                cfg,
            )?;
            records.push(
                CertificationRecord::le(
                    "aep_min_bracket",
                    "smooth-entropy-bounds",
                    rec.min_lower,
                    br.upper,
                    CERT_TOL,
                )
                .with("n", n)
                .with("r", 0)
                .with("eps", 0.1),
            );
        }
    }
    Ok(Section {
        name: "aep",
        records,
    })
}

/// Per-copy squashed-entanglement upper bounds: a Bell pair without
/// defects gives exactly one per copy; for the Bell-diagonal pair with one
/// singlet defect the deviation from the single-copy value stays within the
/// certified gap and shrinks from `n = 2` to `n = 3`.
pub fn squashed(seed: u64, cfg: &SolverConfig) -> Result<Section> {
    let bell = DensityOperator::from_pure(&bell_pair());
    let (mut records, rows) = squashed_comparison(
        &ExtensionCandidate::trivial(&bell, 1)?,
        None,
        0,
        &[1, 2, 3],
        cfg,
    )?;
    for row in &rows {
        records.push(
            CertificationRecord::le(
                "squashed_bell_per_copy",
                "squashed-robustness",
                (row.upper_per_copy - 1.0).abs(),
                0.0,
                1e-10,
            )
            .with("n", row.n)
            .with("r", 0),
        );
    }
    // Same state, extension and defect as `squashed-demo` at this seed.
    let sigma = pair_family(0)?.sigma()?;
    let omega = DensityOperator::from_pure(&singlet());
    let ext = extension_search(&sigma, 1, 2, seed, &SearchBudget::default())?;
    let (recs, rows) = squashed_comparison(&ext, Some(&omega), 1, &[2, 3], cfg)?;
    records.extend(recs);
    let dev: Vec<f64> = rows
        .iter()
        .map(|r| (r.upper_per_copy - r.single_copy_value).abs())
        .collect();
    let mut shrink = CertificationRecord::le(
        "squashed_deviation_shrinks",
        "squashed-robustness",
        dev[1],
        dev[0],
        0.0,
    );
    shrink.pass = dev[1] < dev[0];
    records.push(shrink);
    Ok(Section {
        name: "squashed",
        records,
    })
}

/// All sections in a fixed order.
pub fn verify_all(seed: u64, cfg: &SolverConfig) -> Result<Vec<Section>> {
    Ok(vec![
        subsample_exactness()?,
        variance_separation(seed)?,
        marginal_distance(seed)?,
        measurement_statistics(seed)?,
        witnesses_and_pinching(seed)?,
        renyi_defect(cfg)?,
        entropy_gap(cfg)?,
        one_shot(seed, cfg)?,
        definition_separation()?,
        block_cmi(seed)?,
        aep(cfg)?,
        squashed(seed, cfg)?,
    ])
}
