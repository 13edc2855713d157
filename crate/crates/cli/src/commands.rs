//! Subcommand implementations. Each returns the rendered output and the
//! run status; writing and exit codes are handled by the caller.

use almost_iid::bounds::{
    aep_deltas, aep_record, alpha_schedule, binary_entropy, block_cmi_bound,
    classical_definetti_error, entropy_gap_eps, entropy_gap_upper, exp_definetti_error,
    exp_definetti_scaling, marginal_bound, quantum_definetti_error, squashed_continuity,
    statistics_threshold, BoundParams, CERT_TOL,
};
use almost_iid::classical::nogo_scaling_experiment;
use almost_iid::entropies::{
    cond_renyi, conditional_entropy, h_max, h_min_certified, mutual_information,
    smooth_interval_tensor_power, EntropyResult, RenyiOrder, SmoothKind,
};
use almost_iid::linalg::{DensityOperator, Dims, Operator};
use almost_iid::record::{fmt, CertificationRecord, SweepRow, SWEEP_HEADER};
use almost_iid::rng;
use almost_iid::squashed::{extension_search, squashed_comparison, squashed_csv, SearchBudget};
use almost_iid::states::{bell_diagonal, bell_pair, random_density, singlet};
use serde_json::{json, Value};

use crate::config::{CommandKind, Format, Settings};
use crate::output::{
    csv_header, json_metadata, metadata, record_json, record_row, records_header, rejudge,
};
use crate::suite;

/// Rendered output plus anything to write next to it.
pub struct Outcome {
    pub body: String,
    /// `(suffix, contents)` written to `<out><suffix>` when `--out` is set.
    pub sidecars: Vec<(String, String)>,
    pub failed: bool,
    pub stale: bool,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(almost_iid::Error),
}

impl From<almost_iid::Error> for CliError {
    fn from(e: almost_iid::Error) -> Self {
        CliError::Core(e)
    }
}

type CliResult<T> = Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

pub fn execute(s: &Settings) -> CliResult<Outcome> {
    match s.command {
        CommandKind::BoundsEval => bounds_eval(s),
        CommandKind::DefinettiSweep => definetti_sweep(s),
        CommandKind::Entropy => entropy(s),
        CommandKind::AepSweep => aep_sweep(s),
        CommandKind::Nogo => nogo(s),
        CommandKind::SquashedDemo => squashed_demo(s),
        CommandKind::VerifyAll => verify_all(s),
    }
}

fn bound_params(s: &Settings) -> BoundParams {
    let p = &s.params;
    let d = BoundParams::default();
    BoundParams {
        n: p.n.unwrap_or(d.n),
        k: p.k.unwrap_or(d.k),
        r: p.r.unwrap_or(d.r),
        s: p.s.unwrap_or(d.s),
        m: p.m.unwrap_or(d.m),
        d: p.d.unwrap_or(d.d),
        d_a: p.d_a.unwrap_or(d.d_a),
        d_b: p.d_b.unwrap_or(d.d_b),
        d_ae: p.d_ae.unwrap_or(d.d_ae),
        d_ab: p.d_ab.unwrap_or(d.d_ab),
        d_abe: p.d_abe.unwrap_or(d.d_abe),
        alpha: p.alpha.or(d.alpha),
        eps: p.eps.unwrap_or(d.eps),
        eps_prime: p.eps_prime.unwrap_or(d.eps_prime),
    }
}

/// Two-column `name,value` table.
fn values_output(s: &Settings, header: &str, values: &[(String, f64)], extra: Value) -> Outcome {
    let meta = metadata(s);
    let body = match s.format {
        Format::Csv => {
            let mut out = csv_header(&meta);
            out += &format!("{header}\n");
            for (k, v) in values {
                out += &format!("{k},{}\n", fmt(*v));
            }
            out
        }
        Format::Json => {
            let vals: serde_json::Map<String, Value> =
                values.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
            json!({ "metadata": json_metadata(&meta), "values": vals, "params": extra }).to_string()
                + "\n"
        }
    };
    Outcome {
        body,
        sidecars: vec![],
        failed: false,
        stale: false,
    }
}

pub const BOUNDS: [&str; 11] = [
    "binary-entropy",
    "definetti",
    "quantum-definetti",
    "exp-definetti",
    "marginal",
    "statistics",
    "alpha-schedule",
    "aep-deltas",
    "entropy-gap-upper",
    "block-cmi",
    "squashed-continuity",
];

fn bounds_eval(s: &Settings) -> CliResult<Outcome> {
    let which = s
        .params
        .which
        .as_deref()
        .ok_or_else(|| usage(format!("--which is required; one of {}", BOUNDS.join(", "))))?;
    let p = bound_params(s);
    let one = |k: &str, v: f64| vec![(k.to_string(), v)];
    let values = match which {
        "binary-entropy" => one("binary_entropy", binary_entropy(p.eps)?),
        "definetti" => one("definetti", classical_definetti_error(p.n, p.k, p.d)?),
        "quantum-definetti" => one("quantum_definetti", quantum_definetti_error(p.n, p.k, p.d)?),
        "exp-definetti" => one("exp_definetti", exp_definetti_error(p.n, p.k, p.r, p.d)?),
        "marginal" => one("marginal_distance", marginal_bound(p.n, p.r, p.s)?),
        "statistics" => {
            let alphabet = if p.m > 0 { p.m } else { p.d };
            one(
                "statistics_threshold",
                statistics_threshold(p.eps, p.r, p.n, alphabet, p.d)?,
            )
        }
        "alpha-schedule" => {
            let a = alpha_schedule(p.n, p.r)?;
            vec![
                ("literal".into(), a.literal),
                ("above".into(), a.above),
                ("below".into(), a.below),
                ("below_clamped".into(), f64::from(u8::from(a.below_clamped))),
            ]
        }
        "aep-deltas" => {
            p.validate()?;
            let a = aep_deltas(&p)?;
            vec![
                ("delta".into(), a.delta),
                ("delta_prime".into(), a.delta_prime),
                ("alpha".into(), a.alpha),
                ("alpha_prime".into(), a.alpha_prime),
            ]
        }
        "entropy-gap-upper" => {
            vec![
                ("eps_n".into(), entropy_gap_eps(p.n, p.r)?),
                (
                    "entropy_gap_upper".into(),
                    entropy_gap_upper(p.n, p.r, p.d_a)?,
                ),
            ]
        }
        "block-cmi" => one("block_cmi_bound", block_cmi_bound(p.n, p.r, p.d_ae)?),
        "squashed-continuity" => one(
            "squashed_continuity",
            squashed_continuity(p.eps, p.d_a, p.d_b)?,
        ),
        other => {
            return Err(usage(format!(
                "unknown bound '{other}'; one of {}",
                BOUNDS.join(", ")
            )))
        }
    };
    Ok(values_output(
        s,
        "quantity,value",
        &values,
        serde_json::to_value(&p).unwrap_or(Value::Null),
    ))
}

fn grid(s: &Settings, default: Vec<usize>) -> CliResult<Vec<usize>> {
    let ns = s.params.ns.clone().unwrap_or(default);
    if ns.is_empty() {
        return Err(usage("--ns must not be empty"));
    }
    Ok(ns)
}

fn definetti_sweep(s: &Settings) -> CliResult<Outcome> {
    let d = s.params.d.unwrap_or(2);
    let ns = grid(s, (4..=16).map(|e| 1usize << e).collect())?;
    let fit = exp_definetti_scaling(d, &ns)?;
    let meta = metadata(s);
    let mut rows = Vec::with_capacity(ns.len());
    for &(n, k, r, ln_e) in &fit.points {
        rows.push((
            n,
            k,
            r,
            classical_definetti_error(n, k, d)?,
            quantum_definetti_error(n, k, d)?,
            ln_e.exp(),
        ));
    }
    let body = match s.format {
        Format::Csv => {
            let mut out = csv_header(&meta);
            out += &format!("# fit: ln eps' = {} n^(1/4) + {} ln n + c\n", fmt(fit.rate), fmt(fit.log_coefficient));
            out += "n,k,r,classical,quantum,exponential\n";
            for (n, k, r, c, q, e) in rows {
                out += &format!("{n},{k},{r},{},{},{}\n", fmt(c), fmt(q), fmt(e));
            }
            out
        }
        Format::Json => json!({
            "metadata": json_metadata(&meta),
            "d": d,
            "rows": rows.iter().map(|(n, k, r, c, q, e)| json!({"n": n, "k": k, "r": r, "classical": c, "quantum": q, "exponential": e})).collect::<Vec<_>>(),
            "fit": fit,
        })
        .to_string()
            + "\n",
    };
    Ok(Outcome {
        body,
        sidecars: vec![],
        failed: false,
        stale: false,
    })
}

/// State from a preset name or an operator JSON file.
pub fn parse_state(
    spec: &str,
    seed: u64,
    stream: u64,
    d_a: usize,
    d_b: usize,
) -> CliResult<DensityOperator> {
    match spec {
        "bell" => Ok(DensityOperator::from_pure(&bell_pair())),
        "singlet" => Ok(DensityOperator::from_pure(&singlet())),
        "random" => Ok(random_density(
            Dims::new(vec![d_a, d_b])?,
            None,
            &mut rng::stream(seed, stream),
        )?),
        _ => {
            if let Some(w) = spec.strip_prefix("bell-diagonal:") {
                let ws: Vec<f64> = w
                    .split(',')
                    .map(|x| {
                        x.trim()
                            .parse::<f64>()
                            .map_err(|e| usage(format!("bad weight '{x}': {e}")))
                    })
                    .collect::<CliResult<_>>()?;
                let arr: [f64; 4] = ws
                    .try_into()
                    .map_err(|_| usage("bell-diagonal needs four weights"))?;
                return Ok(bell_diagonal(arr)?);
            }
            let text = std::fs::read_to_string(spec)
                .map_err(|e| usage(format!("cannot read state '{spec}': {e}")))?;
            let op = Operator::from_json(&text)?;
            if op.dims().len() < 2 {
                return Err(usage("state file must describe at least two factors"));
            }
            Ok(DensityOperator::new(op)?)
        }
    }
}

const DEFAULT_STATE: &str = "bell-diagonal:0.7,0.1,0.1,0.1";
pub const DEFAULT_DEFECT: &str = "singlet";

fn state(s: &Settings) -> CliResult<DensityOperator> {
    parse_state(
        s.params.state.as_deref().unwrap_or(DEFAULT_STATE),
        s.seed,
        0,
        s.params.d_a.unwrap_or(2),
        s.params.d_b.unwrap_or(2),
    )
}

fn entropy(s: &Settings) -> CliResult<Outcome> {
    let rho = state(s)?;
    let op = rho.op();
    let alpha = s.params.alpha.unwrap_or(2.0);
    let (hmin, _) = h_min_certified(op, 1)?;
    let results: Vec<(String, EntropyResult)> = vec![
        (
            "conditional_entropy".into(),
            EntropyResult::exact(conditional_entropy(op, 1)?),
        ),
        (
            "mutual_information".into(),
            EntropyResult::exact(mutual_information(op, 1)?),
        ),
        ("h_min".into(), hmin),
        ("h_max".into(), h_max(op, 1, &s.solver)?),
        (
            format!("h_alpha[{}]", fmt(alpha)),
            cond_renyi(op, 1, RenyiOrder::new(alpha)?, &s.solver)?,
        ),
    ];
    let stale = results.iter().any(|(_, r)| r.stale);
    let meta = metadata(s);
    let body = match s.format {
        Format::Csv => {
            let mut out = csv_header(&meta);
            out += "quantity,value,duality_gap,iterations,stale\n";
            for (k, r) in &results {
                let gap = r.duality_gap.map(fmt).unwrap_or_default();
                out += &format!("{k},{},{gap},{},{}\n", fmt(r.value), r.iterations, r.stale);
            }
            out
        }
        Format::Json => {
            let vals: serde_json::Map<String, Value> = results
                .iter()
                .map(|(k, r)| (k.clone(), serde_json::to_value(r).unwrap_or(Value::Null)))
                .collect();
            json!({ "metadata": json_metadata(&meta), "results": vals }).to_string() + "\n"
        }
    };
    Ok(Outcome {
        body,
        sidecars: vec![],
        failed: false,
        stale,
    })
}

/// Sweep records as CSV or JSON.
fn sweep_output(s: &Settings, records: Vec<CertificationRecord>, extra: Value) -> Outcome {
    let records: Vec<CertificationRecord> =
        records.into_iter().map(|r| rejudge(r, s.tol)).collect();
    let failed = records.iter().any(|r| !r.pass);
    let meta = metadata(s);
    let body = match s.format {
        Format::Csv => {
            let mut out = csv_header(&meta);
            out += SWEEP_HEADER;
            out.push('\n');
            for r in &records {
                out += &SweepRow::from_record(r).csv_row();
                out.push('\n');
            }
            out
        }
        Format::Json => {
            json!({
                "metadata": json_metadata(&meta),
                "records": records.iter().map(|r| record_json("", r)).collect::<Vec<_>>(),
                "data": extra,
            })
            .to_string()
                + "\n"
        }
    };
    Outcome {
        body,
        sidecars: vec![],
        failed,
        stale: false,
    }
}

fn aep_sweep(s: &Settings) -> CliResult<Outcome> {
    let sigma = state(s)?;
    let r = s.params.r.unwrap_or(1);
    let eps = s.params.eps.unwrap_or(0.1);
    let ns = grid(s, (3..=10).map(|e| 1usize << e).collect())?;
    let mut records = Vec::new();
    let mut data = Vec::new();
    for &n in &ns {
        let rec = aep_record(sigma.op(), 1, n, r, eps, &s.solver)?;
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
            .with("eps", eps)
            .with("alpha", rec.alpha),
        );
        if r == 0 {
            let br = smooth_interval_tensor_power(
                sigma.op(),
                1,
                n,
                eps,
                SmoothKind::Min,
                &suite::BRACKET_ORDERS,
                &s.solver,
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
                .with("eps", eps),
            );
        }
        data.push(serde_json::to_value(&rec).unwrap_or(Value::Null));
    }
    Ok(sweep_output(s, records, Value::Array(data)))
}

fn nogo(s: &Settings) -> CliResult<Outcome> {
    let alpha = s.params.alpha.unwrap_or(0.5);
    let grid: Vec<u64> = s
        .params
        .ns
        .clone()
        .map(|v| v.into_iter().map(|n| n as u64).collect())
        .unwrap_or_else(|| (6..=12).map(|e| 1u64 << e).collect());
    let table = nogo_scaling_experiment(alpha, &grid)?;
    let records: Vec<CertificationRecord> = table
        .records()
        .into_iter()
        .map(|r| rejudge(r, s.tol))
        .collect();
    let failed = records.iter().any(|r| !r.pass);
    let meta = metadata(s);
    let (body, sidecars) = match s.format {
        Format::Csv => {
            let mut out = csv_header(&meta);
            out += &format!(
                "# slope_var: {}\n# slope_bound: {}\n",
                fmt(table.slope_var),
                fmt(table.slope_bound)
            );
            out += &table.csv();
            (
                out,
                vec![(".json".to_string(), table.sidecar_json() + "\n")],
            )
        }
        Format::Json => (
            json!({
                "metadata": json_metadata(&meta),
                "table": table,
                "records": records.iter().map(|r| record_json("variance", r)).collect::<Vec<_>>(),
            })
            .to_string()
                + "\n",
            vec![],
        ),
    };
    Ok(Outcome {
        body,
        sidecars,
        failed,
        stale: false,
    })
}

fn squashed_demo(s: &Settings) -> CliResult<Outcome> {
    let sigma = state(s)?;
    let r = s.params.r.unwrap_or(1);
    let d_e = s.params.d_e.unwrap_or(2);
    let ns = grid(
        s,
        if r == 0 {
            vec![1, 2, 3]
        } else {
            vec![r + 1, r + 2]
        },
    )?;
    if r > 0 && ns.iter().any(|&n| n <= r) {
        return Err(usage("every n must exceed the number of defects r"));
    }
    let budget = SearchBudget {
        restarts: s.params.restarts.unwrap_or(8),
        ..SearchBudget::default()
    };
    let ext = extension_search(&sigma, 1, d_e, s.seed, &budget)?;
    let omega = if r == 0 {
        None
    } else {
        let f = sigma.dims().factors();
        let spec = s.params.defect.as_deref().unwrap_or(DEFAULT_DEFECT);
        let one = parse_state(spec, s.seed, 1, f[0], f[1..].iter().product())?;
        if one.dims() != sigma.dims() {
            return Err(usage("defect must act on the same factors as the state"));
        }
        let mut om = one.clone();
        for _ in 1..r {
            om = om.kron(&one)?;
        }
        Some(om)
    };
    let (records, rows) = squashed_comparison(&ext, omega.as_ref(), r, &ns, &s.solver)?;
    let records: Vec<CertificationRecord> =
        records.into_iter().map(|x| rejudge(x, s.tol)).collect();
    let failed = records.iter().any(|x| !x.pass);
    let meta = metadata(s);
    let body =
        match s.format {
            Format::Csv => csv_header(&meta) + &squashed_csv(&rows),
            Format::Json => json!({
                "metadata": json_metadata(&meta),
                "d_e": d_e,
                "provenance": ext.provenance,
                "rows": rows,
                "records": records.iter().map(|x| record_json("squashed", x)).collect::<Vec<_>>(),
            })
            .to_string()
                + "\n",
        };
    Ok(Outcome {
        body,
        sidecars: vec![],
        failed,
        stale: false,
    })
}

fn verify_all(s: &Settings) -> CliResult<Outcome> {
    let sections = suite::verify_all(s.seed, &s.solver)?;
    let mut failed = false;
    let mut stale = false;
    let meta = metadata(s);
    let mut csv = csv_header(&meta) + &records_header() + "\n";
    let mut js = Vec::new();
    for sec in sections {
        for r in sec.records {
            let r = rejudge(r, s.tol);
            failed |= !r.pass;
            stale |= r.metadata.get("stale").is_some_and(|v| v == "true");
            csv += &record_row(sec.name, &r);
            csv.push('\n');
            js.push(record_json(sec.name, &r));
        }
    }
    let body = match s.format {
        Format::Csv => csv,
        Format::Json => {
            json!({ "metadata": json_metadata(&meta), "records": js }).to_string() + "\n"
        }
    };
    Ok(Outcome {
        body,
        sidecars: vec![],
        failed,
        stale,
    })
}
