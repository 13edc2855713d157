//! Command-line flags, the flat JSON config file, and their merge.

use std::path::PathBuf;

use almost_iid::entropies::SolverConfig;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(
    name = "almostiid",
    version,
    about = "Almost-iid quantum states: bounds, entropies and certification"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Output file, written atomically; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Slack used to judge every certified inequality `lhs ≤ rhs + tol`.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Flat JSON file of defaults; command-line flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CommandKind {
    BoundsEval,
    DefinettiSweep,
    Entropy,
    AepSweep,
    Nogo,
    SquashedDemo,
    VerifyAll,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate one closed-form bound.
    BoundsEval(Params),
    /// De Finetti errors over a grid of n, with the exponential decay fit.
    DefinettiSweep(Params),
    /// Entropies of a two-party state.
    Entropy(Params),
    /// Smooth-entropy bounds over a grid of n.
    AepSweep(Params),
    /// Variance scaling of subsampled strings against almost-iid strings.
    Nogo(Params),
    /// Squashed-entanglement upper bounds for almost-iid and iid states.
    SquashedDemo(Params),
    /// Run every certifier at its default parameters.
    VerifyAll(Params),
}

impl Command {
    pub fn split(self) -> (CommandKind, Params) {
        match self {
            Command::BoundsEval(p) => (CommandKind::BoundsEval, p),
            Command::DefinettiSweep(p) => (CommandKind::DefinettiSweep, p),
            Command::Entropy(p) => (CommandKind::Entropy, p),
            Command::AepSweep(p) => (CommandKind::AepSweep, p),
            Command::Nogo(p) => (CommandKind::Nogo, p),
            Command::SquashedDemo(p) => (CommandKind::SquashedDemo, p),
            Command::VerifyAll(p) => (CommandKind::VerifyAll, p),
        }
    }
}

impl CommandKind {
    pub fn name(self) -> &'static str {
        match self {
            CommandKind::BoundsEval => "bounds-eval",
            CommandKind::DefinettiSweep => "definetti-sweep",
            CommandKind::Entropy => "entropy",
            CommandKind::AepSweep => "aep-sweep",
            CommandKind::Nogo => "nogo",
            CommandKind::SquashedDemo => "squashed-demo",
            CommandKind::VerifyAll => "verify-all",
        }
    }
}

/// Command-specific parameters. The same names, with `_` for `-`, are the
/// config-file keys; solver settings use the keys `entropy.tol`,
/// `entropy.max_iters` and `entropy.starts`.
#[derive(Clone, Debug, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    /// Bound to evaluate (bounds-eval).
    #[arg(long)]
    pub which: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub r: Option<usize>,
    #[arg(long)]
    pub s: Option<usize>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub d_a: Option<usize>,
    #[arg(long)]
    pub d_b: Option<usize>,
    #[arg(long)]
    pub d_ae: Option<usize>,
    #[arg(long)]
    pub d_ab: Option<usize>,
    #[arg(long)]
    pub d_abe: Option<usize>,
    #[arg(long)]
    pub d_e: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub eps_prime: Option<f64>,
    /// Comma-separated grid of n.
    #[arg(long, value_delimiter = ',')]
    pub ns: Option<Vec<usize>>,
    /// State preset: `bell`, `singlet`, `bell-diagonal:w0,w1,w2,w3`,
    /// `random` (seeded, `d_a ⊗ d_b`) or a path to an operator JSON file.
    #[arg(long)]
    pub state: Option<String>,
    /// Defect state on one site (squashed-demo); same presets as `state`.
    #[arg(long)]
    pub defect: Option<String>,
    /// Restarts of the extension search (squashed-demo).
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long)]
    #[serde(rename = "entropy.tol")]
    pub entropy_tol: Option<f64>,
    #[arg(long)]
    #[serde(rename = "entropy.max_iters")]
    pub entropy_max_iters: Option<usize>,
    #[arg(long)]
    #[serde(rename = "entropy.starts")]
    pub entropy_starts: Option<usize>,
}

const GLOBAL_KEYS: [&str; 4] = ["seed", "format", "out", "tol"];

/// Parse a flat JSON object into global settings and parameters,
/// rejecting unknown keys.
pub fn parse_config(text: &str) -> Result<(Globals, Params), String> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| format!("config is not valid JSON: {e}"))?;
    let obj = value
        .as_object()
        .ok_or("config must be a flat JSON object")?;
    let mut globals = serde_json::Map::new();
    let mut params = serde_json::Map::new();
    for (k, v) in obj {
        if GLOBAL_KEYS.contains(&k.as_str()) {
            globals.insert(k.clone(), v.clone());
        } else {
            params.insert(k.clone(), v.clone());
        }
    }
    let g: Globals = serde_json::from_value(serde_json::Value::Object(globals))
        .map_err(|e| format!("config: {e}"))?;
    let p: Params = serde_json::from_value(serde_json::Value::Object(params))
        .map_err(|e| format!("config: {e}"))?;
    Ok((g, p))
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Globals {
    pub seed: Option<u64>,
    pub format: Option<Format>,
    pub out: Option<PathBuf>,
    pub tol: Option<f64>,
}

macro_rules! overlay {
    ($dst:expr, $src:expr; $($f:ident),*) => {
        $( if $dst.$f.is_none() { $dst.$f = $src.$f.clone(); } )*
    };
}

/// Fully resolved settings of one run.
#[derive(Clone, Debug)]
pub struct Settings {
    pub command: CommandKind,
    pub seed: u64,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub tol: Option<f64>,
    pub params: Params,
    pub solver: SolverConfig,
}

pub const DEFAULT_SEED: u64 = 0;

impl Settings {
    pub fn resolve(cli: Cli, file: Option<(Globals, Params)>) -> Settings {
        let (command, mut params) = cli.command.split();
        let mut g = Globals {
            seed: cli.seed,
            format: cli.format,
            out: cli.out,
            tol: cli.tol,
        };
        if let Some((fg, fp)) = file {
            overlay!(g, fg; seed, format, out, tol);
            overlay!(params, fp; which, n, k, r, s, m, d, d_a, d_b, d_ae, d_ab, d_abe, d_e, alpha, eps, eps_prime,
                ns, state, defect, restarts, entropy_tol, entropy_max_iters, entropy_starts);
        }
        let mut solver = SolverConfig::default();
        if let Some(t) = params.entropy_tol {
            solver.tol = t;
        }
        if let Some(i) = params.entropy_max_iters {
            solver.max_iters = i;
        }
        if let Some(s) = params.entropy_starts {
            solver.starts = s;
        }
        let seed = g.seed.unwrap_or(DEFAULT_SEED);
        solver.seed = seed;
        Settings {
            command,
            seed,
            format: g.format.unwrap_or(Format::Csv),
            out: g.out,
            tol: g.tol,
            params,
            solver,
        }
    }
}
