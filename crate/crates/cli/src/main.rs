//! `telecov` command line: QFI/QCRB tables, discrimination bound reports and
//! stretching verification runs with machine-readable output.

mod output;

use std::fs;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Deserialize;

use output::{emit, sig12, Cell, Table};
use telecov::discrimination::{bound_chain, DiscriminationTask};
use telecov::error::Error;
use telecov::metrology::{channel_qfi, EstimationFamily, EstimationTask};
use telecov::specs::{parse_channel_spec, ChannelSpec};
use telecov::stretching::{
    fuzz_no_go, run_adaptive, run_stretched, AdaptiveProtocol, ProtocolRound,
};
use telecov::SqueezingParameter;

const EXIT_GATE: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_ORDERING: u8 = 3;
const EXIT_COVARIANCE: u8 = 4;

#[derive(Parser)]
#[command(
    name = "telecov",
    version,
    about = "Precision limits for noise estimation and discrimination on teleportation-covariant channels"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Per-probe QFI, adaptive QFI and QCRB over a parameter grid.
    Qfi(QfiArgs),
    /// Error-probability bound chain for a channel pair.
    Discriminate(DiscriminateArgs),
    /// Verify teleportation stretching and the no-go inequality by fuzzing.
    StretchVerify(StretchArgs),
    /// QFI sweep over a parameter grid times squeezing and probe-count lists.
    Sweep(SweepArgs),
}

#[derive(Args, Clone)]
struct CommonOut {
    /// Output path (stdout when omitted).
    #[arg(long)]
    out: Option<String>,
    /// Output format.
    #[arg(long, default_value = "csv")]
    format: String,
    /// JSON config file supplying defaults (flags take precedence).
    #[arg(long)]
    config: Option<String>,
}

#[derive(Args)]
struct QfiArgs {
    /// Channel spec: inline JSON or @file.
    #[arg(long)]
    channel: String,
    /// Parameter grid "name=lo:hi:step" (name in p | pi | nbar | w).
    #[arg(long)]
    grid: Option<String>,
    /// Number of probings.
    #[arg(long)]
    n: Option<u64>,
    /// Squeezing parameter for bosonic finite-energy evaluation.
    #[arg(long)]
    mu: Option<f64>,
    /// Finite-difference step.
    #[arg(long)]
    dtheta: Option<f64>,
    #[command(flatten)]
    common: CommonOut,
}

#[derive(Args)]
struct DiscriminateArgs {
    /// First channel spec: inline JSON or @file.
    #[arg(long)]
    channel: String,
    /// Second channel spec: inline JSON or @file.
    #[arg(long)]
    channel2: String,
    /// Copies: "3", "1,2,3" or "1..5".
    #[arg(long, default_value = "1")]
    n: String,
    /// Squeezing for finite-energy bosonic evidence.
    #[arg(long)]
    mu: Option<f64>,
    /// Fock cutoff for the finite-energy evidence.
    #[arg(long)]
    nmax: Option<usize>,
    #[command(flatten)]
    common: CommonOut,
}

#[derive(Args)]
struct StretchArgs {
    /// Channel spec: inline JSON or @file (discrete families).
    #[arg(long)]
    channel: String,
    /// Rounds per protocol (1..=3).
    #[arg(long)]
    n: Option<u64>,
    /// Random protocols for the no-go fuzz section.
    #[arg(long)]
    trials: Option<usize>,
    /// Root seed; omitted means 0 (noted in the output).
    #[arg(long)]
    seed: Option<u64>,
    /// Finite-difference step for the QFI ratios.
    #[arg(long)]
    dtheta: Option<f64>,
    #[command(flatten)]
    common: CommonOut,
}

#[derive(Args)]
struct SweepArgs {
    /// Channel spec: inline JSON or @file.
    #[arg(long)]
    channel: String,
    /// Parameter grid "name=lo:hi:step".
    #[arg(long)]
    grid: String,
    /// Probe counts, e.g. "1,10,100".
    #[arg(long, default_value = "1")]
    n: String,
    /// Squeezing values, e.g. "1,2,4" (bosonic families).
    #[arg(long)]
    mu: Option<String>,
    /// Finite-difference step.
    #[arg(long)]
    dtheta: Option<f64>,
    #[command(flatten)]
    common: CommonOut,
}

/// Defaults loadable from --config; command-line flags win.
#[derive(Default, Deserialize)]
#[serde(default)]
struct FileDefaults {
    n: Option<u64>,
    mu: Option<f64>,
    dtheta: Option<f64>,
    nmax: Option<usize>,
    seed: Option<u64>,
    trials: Option<usize>,
    format: Option<String>,
    /// QFI closed-vs-numeric gate (default 1e-2).
    qfi_gate: Option<f64>,
    /// Bound-chain ordering slack (default 1e-10).
    ordering_slack: Option<f64>,
    /// Stretching residual limit (default 1e-9).
    residual_limit: Option<f64>,
    /// No-go ratio headroom (default 1e-4).
    ratio_slack: Option<f64>,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(msg: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: msg.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::NotCovariant { .. } => EXIT_COVARIANCE,
            _ => EXIT_USAGE,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self {
            code: EXIT_USAGE,
            message: e.to_string(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Qfi(args) => cmd_qfi(args),
        Cmd::Discriminate(args) => cmd_discriminate(args),
        Cmd::StretchVerify(args) => cmd_stretch_verify(args),
        Cmd::Sweep(args) => cmd_sweep(args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn load_defaults(common: &CommonOut) -> Result<FileDefaults, Failure> {
    match &common.config {
        None => Ok(FileDefaults::default()),
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::usage(format!("config {path}: {e}")))?;
            serde_json::from_str(&text).map_err(|e| Failure::usage(format!("config {path}: {e}")))
        }
    }
}

fn read_channel(arg: &str) -> Result<ChannelSpec, Failure> {
    let text = if let Some(path) = arg.strip_prefix('@') {
        fs::read_to_string(path).map_err(|e| Failure::usage(format!("channel {path}: {e}")))?
    } else {
        arg.to_string()
    };
    Ok(parse_channel_spec(&text)?)
}

/// Parse "name=lo:hi:step" into the grid values (empty when lo > hi).
fn parse_grid(text: &str) -> Result<(String, Vec<f64>), Failure> {
    let (name, range) = text
        .split_once('=')
        .ok_or_else(|| Failure::usage("grid must look like name=lo:hi:step"))?;
    let parts: Vec<&str> = range.split(':').collect();
    if parts.len() != 3 {
        return Err(Failure::usage("grid must look like name=lo:hi:step"));
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| {
            p.parse::<f64>()
                .map_err(|_| Failure::usage(format!("bad grid number '{p}'")))
        })
        .collect::<Result<_, _>>()?;
    let (lo, hi, step) = (nums[0], nums[1], nums[2]);
    if step <= 0.0 {
        return Err(Failure::usage("grid step must be > 0"));
    }
    let mut values = Vec::new();
    let mut i = 0usize;
    loop {
        let v = lo + step * i as f64;
        if v > hi + 1e-12 {
            break;
        }
        values.push(v);
        i += 1;
    }
    Ok((name.trim().to_string(), values))
}

fn parse_n_list(text: &str) -> Result<Vec<u64>, Failure> {
    if let Some((lo, hi)) = text.split_once("..") {
        let lo: u64 = lo.parse().map_err(|_| Failure::usage("bad n range"))?;
        let hi: u64 = hi.parse().map_err(|_| Failure::usage("bad n range"))?;
        if lo == 0 || hi < lo {
            return Err(Failure::usage("n range must be 1 <= lo <= hi"));
        }
        return Ok((lo..=hi).collect());
    }
    text.split(',')
        .map(|p| {
            p.trim()
                .parse::<u64>()
                .map_err(|_| Failure::usage(format!("bad n '{p}'")))
        })
        .collect()
}

fn parse_f64_list(text: &str) -> Result<Vec<f64>, Failure> {
    text.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| Failure::usage(format!("bad number '{p}'")))
        })
        .collect()
}

/// The grid parameter name each family exposes.
fn family_param(family: EstimationFamily) -> &'static str {
    match family {
        EstimationFamily::Depolarizing | EstimationFamily::Dephasing => "p",
        EstimationFamily::Erasure { .. } => "pi",
        EstimationFamily::ThermalLoss { .. } | EstimationFamily::Amplifier { .. } => "nbar",
        EstimationFamily::AdditiveNoise => "w",
    }
}

fn family_name(family: EstimationFamily) -> &'static str {
    match family {
        EstimationFamily::Depolarizing => "depolarizing",
        EstimationFamily::Dephasing => "dephasing",
        EstimationFamily::Erasure { .. } => "erasure",
        EstimationFamily::ThermalLoss { .. } => "thermal_loss",
        EstimationFamily::Amplifier { .. } => "amplifier",
        EstimationFamily::AdditiveNoise => "additive_noise",
    }
}

fn estimation_point(spec: &ChannelSpec) -> Result<(EstimationFamily, f64), Failure> {
    spec.estimation_point().ok_or_else(|| {
        Failure::usage("channel spec does not belong to a parameterized estimation family")
    })
}

fn qfi_columns() -> Vec<&'static str> {
    vec![
        "family",
        "theta",
        "mu",
        "b_closed",
        "b_numeric",
        "relative_gap",
        "n",
        "adaptive_qfi",
        "qcrb",
    ]
}

fn qfi_row(
    family: EstimationFamily,
    theta: f64,
    n: u64,
    mu: Option<f64>,
    dtheta: f64,
) -> Result<(Vec<Cell>, Option<f64>), Failure> {
    let mut task = EstimationTask::new(family, theta, n).with_dtheta(dtheta);
    if let Some(m) = mu {
        task = task.with_mu(SqueezingParameter::new(m)?);
    }
    let r = channel_qfi(&task)?;
    let gap = r.relative_gap();
    let row = vec![
        Cell::Text(family_name(family).into()),
        Cell::Num(theta),
        mu.map(Cell::Num).unwrap_or(Cell::Empty),
        r.b_closed.map(Cell::Num).unwrap_or(Cell::Empty),
        r.b_numeric.map(Cell::Num).unwrap_or(Cell::Empty),
        gap.map(Cell::Num).unwrap_or(Cell::Empty),
        Cell::Int(n),
        Cell::Num(r.adaptive_qfi),
        Cell::Num(r.qcrb),
    ];
    Ok((row, gap))
}

fn render(table: &Table, common: &CommonOut) -> Result<(), Failure> {
    let text = match common.format.as_str() {
        "csv" => table.to_csv(),
        "json" => table.to_json(),
        other => return Err(Failure::usage(format!("unknown format '{other}'"))),
    };
    emit(&text, common.out.as_deref())?;
    Ok(())
}

fn cmd_qfi(args: QfiArgs) -> Result<u8, Failure> {
    let defaults = load_defaults(&args.common)?;
    let spec = read_channel(&args.channel)?;
    let (family, spec_theta) = estimation_point(&spec)?;
    let n = args.n.or(defaults.n).unwrap_or(1);
    let mu = args.mu.or(defaults.mu);
    let dtheta = args.dtheta.or(defaults.dtheta).unwrap_or(1e-4);

    let thetas = match &args.grid {
        Some(grid) => {
            let (name, values) = parse_grid(grid)?;
            if name != family_param(family) {
                return Err(Failure::usage(format!(
                    "grid parameter '{name}' does not match family parameter '{}'",
                    family_param(family)
                )));
            }
            values
        }
        None => vec![spec_theta],
    };

    let results: Vec<(Vec<Cell>, Option<f64>)> = thetas
        .par_iter()
        .map(|&theta| qfi_row(family, theta, n, mu, dtheta))
        .collect::<Result<_, _>>()?;

    let gate_tol = defaults.qfi_gate.unwrap_or(1e-2);
    let mut table = Table::new(qfi_columns());
    let mut gate = false;
    for (row, gap) in results {
        if let Some(g) = gap {
            gate |= g > gate_tol;
        }
        table.push(row);
    }
    render(&table, &args.common)?;
    Ok(if gate { EXIT_GATE } else { 0 })
}

fn make_task(
    spec0: &ChannelSpec,
    spec1: &ChannelSpec,
    n: u64,
    mu: Option<f64>,
    nmax: Option<usize>,
) -> Result<DiscriminationTask, Failure> {
    let mut task = match (spec0, spec1) {
        (ChannelSpec::Discrete(a), ChannelSpec::Discrete(b)) => {
            DiscriminationTask::discrete(a.clone(), b.clone(), n)?
        }
        (ChannelSpec::Bosonic(a), ChannelSpec::Bosonic(b)) => {
            DiscriminationTask::bosonic(*a, *b, n)?
        }
        _ => {
            return Err(Failure::usage(
                "channel and channel2 must both be discrete or both bosonic",
            ))
        }
    };
    if let Some(m) = mu {
        task = task.with_mu(SqueezingParameter::new(m)?);
    }
    if let Some(nm) = nmax {
        task = task.with_nmax(nm);
    }
    Ok(task)
}

fn cmd_discriminate(args: DiscriminateArgs) -> Result<u8, Failure> {
    let defaults = load_defaults(&args.common)?;
    let spec0 = read_channel(&args.channel)?;
    let spec1 = read_channel(&args.channel2)?;
    let ns = parse_n_list(&args.n)?;
    let mu = args.mu.or(defaults.mu);
    let nmax = args.nmax.or(defaults.nmax);

    let reports: Vec<telecov::discrimination::BoundReport> = ns
        .par_iter()
        .map(|&n| {
            let task = make_task(&spec0, &spec1, n, mu, nmax)?;
            Ok(bound_chain(&task)?)
        })
        .collect::<Result<_, Failure>>()?;

    let mut ordering_ok = true;
    match args.common.format.as_str() {
        "json" => {
            // Bound reports carry per-number provenance; serialize them whole.
            let values: Vec<serde_json::Value> = reports
                .iter()
                .map(|r| serde_json::to_value(r).expect("report serialization"))
                .collect();
            let text = serde_json::to_string_pretty(&values).expect("report serialization");
            emit(&text, args.common.out.as_deref())?;
        }
        "csv" => {
            let mut table = Table::new(vec![
                "n",
                "helstrom",
                "fidelity_lower",
                "pinsker_lower",
                "lower",
                "active_lower",
                "qcb_upper",
                "fidelity_upper",
                "s_star",
                "asymptotic",
                "fock_qcb",
            ]);
            for r in &reports {
                table.push(vec![
                    Cell::Int(r.n),
                    r.helstrom
                        .as_ref()
                        .map(|b| Cell::Num(b.value))
                        .unwrap_or(Cell::Empty),
                    Cell::Num(r.fidelity_lower.value),
                    r.pinsker_lower
                        .as_ref()
                        .map(|b| Cell::Num(b.value))
                        .unwrap_or(Cell::Empty),
                    Cell::Num(r.lower),
                    Cell::Text(r.active_lower.clone()),
                    Cell::Num(r.qcb_upper.value),
                    Cell::Num(r.fidelity_upper.value),
                    Cell::Num(r.s_star),
                    Cell::Text(r.asymptotic.to_string()),
                    r.fock_qcb
                        .as_ref()
                        .map(|b| Cell::Num(b.value))
                        .unwrap_or(Cell::Empty),
                ]);
            }
            render(&table, &args.common)?;
        }
        other => return Err(Failure::usage(format!("unknown format '{other}'"))),
    }
    let slack = defaults.ordering_slack.unwrap_or(1e-10);
    for r in &reports {
        ordering_ok &= r.ordering_ok(slack);
    }
    Ok(if ordering_ok { 0 } else { EXIT_ORDERING })
}

fn cmd_stretch_verify(args: StretchArgs) -> Result<u8, Failure> {
    let defaults = load_defaults(&args.common)?;
    let spec = read_channel(&args.channel)?;
    let ch = match spec {
        ChannelSpec::Discrete(ch) => ch,
        ChannelSpec::Bosonic(_) => {
            return Err(Failure::usage(
                "stretch-verify drives discrete channels only",
            ))
        }
    };
    let n = args.n.or(defaults.n).unwrap_or(2);
    if !(1..=3).contains(&n) {
        return Err(Failure::usage("n must be in 1..=3"));
    }
    let trials = args.trials.or(defaults.trials).unwrap_or(200);
    let dtheta = args.dtheta.or(defaults.dtheta).unwrap_or(1e-4);
    let (seed, seed_noted) = match args.seed.or(defaults.seed) {
        Some(s) => (s, String::new()),
        None => (0, " (default)".to_string()),
    };

    let mut lines = Vec::new();
    lines.push(format!("channel: {:?}", ch.label()));
    lines.push(format!("seed: {seed}{seed_noted}"));

    // Covariance gate first: a non-covariant channel cannot be stretched.
    let cov = telecov::channels::check_teleportation_covariance(&ch)?;
    if let telecov::channels::Covariance::NotCovariant { witness_index } = cov {
        lines.push(format!(
            "covariance: FAILED (witness teleportation unitary index {witness_index})"
        ));
        emit(&(lines.join("\n") + "\n"), args.common.out.as_deref())?;
        return Ok(EXIT_COVARIANCE);
    }
    lines.push("covariance: ok".to_string());

    // Stretching identity on a batch of random protocols.
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let identity_trials = 10usize;
    let mut max_residual: f64 = 0.0;
    for _ in 0..identity_trials {
        let d = ch.d_in();
        let dims = vec![d; (n as usize + 1).clamp(2, 3)];
        let reg_dim: usize = dims.iter().product();
        let initial = telecov::sample::random_cptp_kraus(reg_dim, 2, &mut rng);
        let mut cur = dims.clone();
        let rounds = (0..n as usize)
            .map(|i| {
                let slot = i % dims.len();
                cur[slot] = ch.d_out();
                let dim = cur.iter().product();
                ProtocolRound {
                    probe_slot: slot,
                    op: telecov::sample::random_cptp_kraus(dim, 2, &mut rng),
                }
            })
            .collect();
        let prot = AdaptiveProtocol::new(dims, initial, rounds)?;
        let direct = run_adaptive(&prot, &ch)?;
        let stretched = run_stretched(&prot, &ch)?;
        let dist = telecov::linalg::trace_distance(&direct, &stretched)?;
        max_residual = max_residual.max(dist);
    }
    lines.push(format!(
        "stretching: max trace-distance residual {:e} over {identity_trials} random protocols",
        sig12(max_residual)
    ));

    // No-go fuzz (square parameterized families only).
    let mut max_ratio: f64 = f64::NAN;
    let mut fuzz_ok = true;
    if trials > 0 {
        let point = ChannelSpec::Discrete(ch.clone()).estimation_point();
        match point {
            Some((family, theta)) if ch.d_in() == ch.d_out() => {
                let b = telecov::metrology::closed_form_b(family, theta, None)?;
                let ctor = move |t: f64| -> telecov::Result<telecov::QuantumChannel> {
                    match family {
                        EstimationFamily::Depolarizing => telecov::channels::depolarizing(t),
                        EstimationFamily::Dephasing => telecov::channels::dephasing(t),
                        _ => unreachable!("square discrete families"),
                    }
                };
                let report = fuzz_no_go(ctor, b, theta, dtheta, trials, n as usize, seed)?;
                max_ratio = report.max_ratio;
                fuzz_ok = report.max_ratio_within(defaults.ratio_slack.unwrap_or(1e-4));
                lines.push(format!(
                    "fuzz: {} trials, max QFI ratio {}, planted {}",
                    trials,
                    sig12(report.max_ratio),
                    sig12(report.planted_ratio)
                ));
            }
            _ => {
                lines.push(
                    "fuzz: skipped (needs a square depolarizing/dephasing channel)".to_string(),
                );
            }
        }
    } else {
        lines.push("fuzz: skipped (trials = 0)".to_string());
    }

    let pass = max_residual < defaults.residual_limit.unwrap_or(1e-9) && fuzz_ok;
    lines.push(format!("verdict: {}", if pass { "PASS" } else { "FAIL" }));
    let _ = max_ratio;
    emit(&(lines.join("\n") + "\n"), args.common.out.as_deref())?;
    Ok(if pass { 0 } else { EXIT_GATE })
}

fn cmd_sweep(args: SweepArgs) -> Result<u8, Failure> {
    let defaults = load_defaults(&args.common)?;
    let spec = read_channel(&args.channel)?;
    let (family, _) = estimation_point(&spec)?;
    let (name, thetas) = parse_grid(&args.grid)?;
    if name != family_param(family) {
        return Err(Failure::usage(format!(
            "grid parameter '{name}' does not match family parameter '{}'",
            family_param(family)
        )));
    }
    let ns = parse_n_list(&args.n)?;
    let dtheta = args.dtheta.or(defaults.dtheta).unwrap_or(1e-4);
    let mus: Vec<Option<f64>> = match &args.mu {
        Some(list) => parse_f64_list(list)?.into_iter().map(Some).collect(),
        None => vec![defaults.mu],
    };

    let mut points = Vec::new();
    for &theta in &thetas {
        for &mu in &mus {
            for &n in &ns {
                points.push((theta, mu, n));
            }
        }
    }
    let rows: Vec<(Vec<Cell>, Option<f64>)> = points
        .par_iter()
        .map(|&(theta, mu, n)| qfi_row(family, theta, n, mu, dtheta))
        .collect::<Result<_, _>>()?;

    let mut table = Table::new(qfi_columns());
    for (row, _) in rows {
        table.push(row);
    }
    render(&table, &args.common)?;
    Ok(0)
}
