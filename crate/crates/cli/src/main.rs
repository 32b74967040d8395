//! `cgmetro`: command-line front end for coarse-grained homodyne phase estimation.
//!
//! Every subcommand is a thin adapter around `cgmetro-core`: it resolves the
//! configuration (JSON file, flags, defaults), calls the library and writes
//! CSV with `#` metadata lines, or JSON with a `meta` block.
//!
//! Exit codes: 0 success, 2 configuration/usage error, 3 numerical failure,
//! 4 saturation-dominated campaign. Errors are reported on stderr as one JSON
//! object.

// `!(x > y)` is used deliberately so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use cgmetro::bins::{default_range, OuterMode};
use cgmetro::coarse::{binning_ratio, fisher_ratio, optimize_bins, scheme_for, Binning};
use cgmetro::estimator::reference_weights;
use cgmetro::montecarlo::{calibrate, phase_range_scan, simulate, SimCampaignConfig, SimulateConfig};
use cgmetro::quadrature::{InterferometerConfig, Phase};
use cgmetro::report;
use cgmetro::scaling::{log_grid, loglog_fit, scaling_sweep};
use cgmetro::{bin_prob_derivative, bin_probabilities, optimal_weight, Error};

/// Seed used when `--seed` is not given.
const DEFAULT_SEED: u64 = 20_240_611;
/// Reference interferometer: coherent amplitude and 3.8 dB of squeezing.
const DEFAULT_ALPHA: f64 = 5.7;
const DEFAULT_R: f64 = 0.4375;
/// Tolerance of `tables --check` against the golden weight tables.
const TABLE_TOL: f64 = 1e-3;

#[derive(Debug, Parser)]
#[command(name = "cgmetro", version, about = "Phase estimation with coarse-grained homodyne detection")]
struct Cli {
    /// JSON configuration file (campaign or simulate settings)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file (directory for `tables`); stdout when omitted
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Master seed for every random stream
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Repetitions averaged per estimate (overrides the config)
    #[arg(long, global = true)]
    nu: Option<usize>,
    /// Repeated experiments per phase (overrides the config)
    #[arg(long, global = true)]
    repeats: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum BinningArg {
    Equal,
    Optimal,
    Both,
}

impl BinningArg {
    fn expand(self) -> Vec<Binning> {
        match self {
            BinningArg::Equal => vec![Binning::Equal],
            BinningArg::Optimal => vec![Binning::Optimal],
            BinningArg::Both => vec![Binning::Equal, Binning::Optimal],
        }
    }

    fn single(self) -> Result<Binning, Failure> {
        match self {
            BinningArg::Equal => Ok(Binning::Equal),
            BinningArg::Optimal => Ok(Binning::Optimal),
            BinningArg::Both => Err(Failure::usage("this command needs --binning equal or optimal")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum OuterArg {
    Finite,
    Infinite,
}

impl From<OuterArg> for OuterMode {
    fn from(o: OuterArg) -> Self {
        match o {
            OuterArg::Finite => OuterMode::Finite,
            OuterArg::Infinite => OuterMode::Infinite,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fisher-information ratio f_M for a range of bin numbers
    FisherRatio {
        /// Bin numbers: `N`, `A..B` (inclusive) or a comma list
        #[arg(long = "M", value_parser = parse_bins, default_value = "2..10")]
        m: BinList,
        #[arg(long, value_enum, default_value_t = BinningArg::Both)]
        binning: BinningArg,
        /// Squeezing parameter; bins span 4 squeezed standard deviations
        #[arg(long)]
        r: Option<f64>,
    },
    /// Boundaries maximizing the Fisher information for M bins
    OptimizeBins {
        #[arg(long = "M", value_parser = parse_bin)]
        m: usize,
        #[arg(long, default_value_t = DEFAULT_R)]
        r: f64,
    },
    /// Optimal weight vector at one operating phase
    Weights {
        #[arg(long = "M", value_parser = parse_bin)]
        m: usize,
        #[arg(long, value_enum, default_value_t = BinningArg::Equal)]
        binning: BinningArg,
        #[arg(long, default_value_t = DEFAULT_ALPHA)]
        alpha: f64,
        #[arg(long, default_value_t = DEFAULT_R)]
        r: f64,
        #[arg(long = "phi0-deg", default_value_t = 0.0, allow_hyphen_values = true)]
        phi0_deg: f64,
        #[arg(long = "outer-mode", value_enum, default_value_t = OuterArg::Finite)]
        outer_mode: OuterArg,
    },
    /// Simulated calibration: scan, model fit, weights and calibration curve
    Calibrate {
        #[arg(long = "M", value_parser = parse_bin, default_value = "2")]
        m: usize,
        #[arg(long, value_enum, default_value_t = BinningArg::Equal)]
        binning: BinningArg,
    },
    /// Quantum and classical campaigns for every bin number and binning
    Simulate,
    /// Estimation error across phases with the estimator calibrated at phi0
    PhaseScan {
        #[arg(long = "M", value_parser = parse_bin, default_value = "2")]
        m: usize,
        #[arg(long, value_enum, default_value_t = BinningArg::Equal)]
        binning: BinningArg,
        #[arg(long = "from-deg", default_value_t = -20.0, allow_hyphen_values = true)]
        from_deg: f64,
        #[arg(long = "to-deg", default_value_t = 20.0, allow_hyphen_values = true)]
        to_deg: f64,
        #[arg(long, default_value_t = 81)]
        count: usize,
    },
    /// Error versus total photon number with an equal photon split
    ScalingSweep {
        #[arg(long = "M", value_parser = parse_bin, default_value = "2")]
        m: usize,
        #[arg(long, value_enum, default_value_t = BinningArg::Equal)]
        binning: BinningArg,
        #[arg(long = "n-min", default_value_t = 10.0)]
        n_min: f64,
        #[arg(long = "n-max", default_value_t = 1e4)]
        n_max: f64,
        #[arg(long, default_value_t = 31)]
        count: usize,
    },
    /// Optimal weight tables for M = 2..10, equal and optimal binning
    Tables {
        /// Directory with golden `weights_equal.csv` / `weights_optimal.csv` to diff against
        #[arg(long)]
        check: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct BinList(Vec<usize>);

fn parse_bin(s: &str) -> Result<usize, String> {
    let m: usize = s.trim().parse().map_err(|_| format!("not a bin number: {s:?}"))?;
    if m < 2 {
        return Err(format!("M must be >= 2, got {m}"));
    }
    Ok(m)
}

fn parse_bins(s: &str) -> Result<BinList, String> {
    let list = if let Some((a, b)) = s.split_once("..") {
        let (a, b) = (parse_bin(a)?, parse_bin(b.trim_start_matches('='))?);
        if b < a {
            return Err(format!("empty bin range {s:?}"));
        }
        (a..=b).collect()
    } else {
        s.split(',').map(parse_bin).collect::<Result<Vec<_>, _>>()?
    };
    Ok(BinList(list))
}

/// A failed invocation: exit code plus a machine-readable description.
#[derive(Debug)]
struct Failure {
    code: u8,
    kind: &'static str,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            kind: "usage",
            message: message.into(),
        }
    }

    fn numerical(message: impl Into<String>) -> Self {
        Self {
            code: 3,
            kind: "numerical",
            message: message.into(),
        }
    }

    fn saturated(message: impl Into<String>) -> Self {
        Self {
            code: 4,
            kind: "saturation",
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let (code, kind) = match &e {
            Error::InvalidParameter(_) | Error::InvalidScheme(_) => (2, "config"),
            Error::Json(_) => (2, "config"),
            Error::Io(_) => (2, "io"),
            _ => (3, "numerical"),
        };
        Self {
            code,
            kind,
            message: e.to_string(),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Self {
            code: 2,
            kind: "io",
            message: e.to_string(),
        }
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Error::from(e).into()
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            return report_failure(&Failure::usage(e.to_string().trim_end()));
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => report_failure(&f),
    }
}

fn report_failure(f: &Failure) -> ExitCode {
    let body = json!({"error": f.kind, "message": f.message, "exit_code": f.code});
    eprintln!("{body}");
    ExitCode::from(f.code)
}

fn run(cli: &Cli) -> Outcome {
    match &cli.command {
        Command::FisherRatio { m, binning, r } => cmd_fisher_ratio(cli, &m.0, *binning, *r),
        Command::OptimizeBins { m, r } => cmd_optimize_bins(cli, *m, *r),
        Command::Weights {
            m,
            binning,
            alpha,
            r,
            phi0_deg,
            outer_mode,
        } => cmd_weights(cli, *m, binning.single()?, *alpha, *r, *phi0_deg, (*outer_mode).into()),
        Command::Calibrate { m, binning } => cmd_calibrate(cli, *m, binning.single()?),
        Command::Simulate => cmd_simulate(cli),
        Command::PhaseScan {
            m,
            binning,
            from_deg,
            to_deg,
            count,
        } => cmd_phase_scan(cli, *m, binning.single()?, *from_deg, *to_deg, *count),
        Command::ScalingSweep {
            m,
            binning,
            n_min,
            n_max,
            count,
        } => cmd_scaling_sweep(cli, *m, binning.single()?, *n_min, *n_max, *count),
        Command::Tables { check } => cmd_tables(cli, check.as_deref()),
    }
}

fn command_name(cli: &Cli) -> &'static str {
    match cli.command {
        Command::FisherRatio { .. } => "fisher-ratio",
        Command::OptimizeBins { .. } => "optimize-bins",
        Command::Weights { .. } => "weights",
        Command::Calibrate { .. } => "calibrate",
        Command::Simulate => "simulate",
        Command::PhaseScan { .. } => "phase-scan",
        Command::ScalingSweep { .. } => "scaling-sweep",
        Command::Tables { .. } => "tables",
    }
}

/// Output target: a file or stdout, buffered.
fn open_output(path: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(io::BufWriter::new(fs::File::create(p)?)),
        None => Box::new(io::BufWriter::new(io::stdout().lock())),
    })
}

/// Writes CSV (metadata block, `extra` comment lines, then `body`) or a JSON
/// document `{meta, result}`.
fn emit<C, R>(
    cli: &Cli,
    seed: Option<u64>,
    config: &C,
    extra: &[(&str, String)],
    result: &R,
    body: impl FnOnce(&mut dyn Write) -> cgmetro::Result<()>,
) -> Outcome
where
    C: Serialize + ?Sized,
    R: Serialize + ?Sized,
{
    let mut out = open_output(cli.output.as_deref())?;
    match cli.format {
        Format::Csv => {
            report::write_header(&mut out, command_name(cli), seed, config)?;
            for (k, v) in extra {
                writeln!(out, "# {k}: {v}")?;
            }
            body(&mut out)?;
        }
        Format::Json => {
            let mut meta = json!({
                "version": env!("CARGO_PKG_VERSION"),
                "command": command_name(cli),
                "config": config,
            });
            if let Some(seed) = seed {
                meta["seed"] = json!(seed);
            }
            for (k, v) in extra {
                meta[*k] = json!(v);
            }
            serde_json::to_writer_pretty(&mut out, &json!({"meta": meta, "result": result}))?;
            writeln!(out)?;
        }
    }
    out.flush()?;
    Ok(())
}

fn read_config<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure {
        code: 2,
        kind: "config",
        message: format!("cannot read {}: {e}", path.display()),
    })?;
    serde_json::from_str(&text).map_err(|e| Failure {
        code: 2,
        kind: "config",
        message: format!("invalid config {}: {e}", path.display()),
    })
}

fn reject_config(cli: &Cli) -> Outcome {
    if cli.config.is_some() {
        return Err(Failure::usage(format!(
            "{} takes no --config; use its flags",
            command_name(cli)
        )));
    }
    Ok(())
}

fn cmd_fisher_ratio(cli: &Cli, ms: &[usize], binning: BinningArg, r: Option<f64>) -> Outcome {
    reject_config(cli)?;
    let mut rows = Vec::new();
    for &m in ms {
        for b in binning.expand() {
            let f = match r {
                None => binning_ratio(m, b)?,
                Some(r) => {
                    let cfg = InterferometerConfig::new(1.0, r)?;
                    fisher_ratio(&scheme_for(&cfg, m, b, OuterMode::Finite)?.scaled(r))
                }
            };
            rows.push((m, b, f));
        }
    }
    let config = json!({"M": ms, "binning": binning, "r": r});
    let result: Vec<_> = rows
        .iter()
        .map(|(m, b, f)| json!({"M": m, "binning": b, "f_M": f}))
        .collect();
    emit(cli, None, &config, &[], &result, |o| report::write_fisher_ratio(o, &rows))
}

fn cmd_optimize_bins(cli: &Cli, m: usize, r: f64) -> Outcome {
    reject_config(cli)?;
    let cfg = InterferometerConfig::new(1.0, r)?;
    let opt = optimize_bins(m, default_range(&cfg))?;
    let config = json!({"M": m, "r": r});
    let extra = [
        ("f_M", opt.ratio.to_string()),
        ("converged", opt.converged.to_string()),
    ];
    let result = json!({"scheme": opt.scheme, "f_M": opt.ratio, "converged": opt.converged});
    emit(cli, None, &config, &extra, &result, |o| {
        writeln!(o, "k,b_k")?;
        for (k, b) in opt.scheme.boundaries().iter().enumerate() {
            writeln!(o, "{},{b}", k + 1)?;
        }
        Ok(())
    })
}

fn cmd_weights(
    cli: &Cli,
    m: usize,
    binning: Binning,
    alpha: f64,
    r: f64,
    phi0_deg: f64,
    outer: OuterMode,
) -> Outcome {
    reject_config(cli)?;
    let cfg = InterferometerConfig::new(alpha, r)?;
    let scheme = scheme_for(&cfg, m, binning, outer)?;
    let phi0 = Phase::from_degrees(phi0_deg);
    let p = bin_probabilities(&cfg, phi0, &scheme);
    let dp = bin_prob_derivative(&cfg, phi0, &scheme);
    let w = optimal_weight(&p, &dp)?;
    let config = json!({"M": m, "binning": binning, "cfg": cfg, "phi0_deg": phi0_deg, "outer_mode": outer});
    let result = json!({"scheme": scheme, "w": w, "P": &p[..], "dP": &dp[..]});
    emit(cli, None, &config, &[], &result, |o| {
        writeln!(o, "k,w_k,P_k,dP_k")?;
        for k in 0..m {
            writeln!(o, "{},{},{},{}", k + 1, w[k], p[k], dp[k])?;
        }
        Ok(())
    })
}

/// Campaign settings from `--config`, or the reference interferometer with the
/// requested bins; global flags override.
fn campaign_config(cli: &Cli, m: usize, binning: Binning) -> Result<SimCampaignConfig, Failure> {
    let mut c = match &cli.config {
        Some(path) => read_config::<SimCampaignConfig>(path)?,
        None => {
            let cfg = InterferometerConfig::new(DEFAULT_ALPHA, DEFAULT_R)?;
            SimCampaignConfig::new(cfg, scheme_for(&cfg, m, binning, OuterMode::Infinite)?, cli.seed)
        }
    };
    c.master_seed = cli.seed;
    if let Some(nu) = cli.nu {
        c.nu = nu;
    }
    if let Some(repeats) = cli.repeats {
        c.repeats = repeats;
    }
    c.validate()?;
    Ok(c)
}

fn cmd_calibrate(cli: &Cli, m: usize, binning: Binning) -> Outcome {
    let c = campaign_config(cli, m, binning)?;
    let cal = calibrate(&c)?;
    let extra = [
        ("alpha_hat", cal.fit.alpha_hat.to_string()),
        ("r_hat", cal.fit.r_hat.to_string()),
        ("fit_residual", cal.fit.residual.to_string()),
        ("fit_converged", cal.fit.converged.to_string()),
        ("weights", format!("{:?}", cal.estimator.weights().as_slice())),
        ("calibration_trimmed", cal.trimmed.to_string()),
    ];
    let result = json!({"fit": cal.fit, "estimator": cal.estimator, "trimmed": cal.trimmed});
    emit(cli, Some(c.master_seed), &c, &extra, &result, |o| {
        writeln!(o, "phi_deg,g")?;
        for (phi, g) in cal.estimator.table() {
            writeln!(o, "{},{g}", phi.degrees())?;
        }
        Ok(())
    })
}

fn cmd_simulate(cli: &Cli) -> Outcome {
    let mut c = match &cli.config {
        Some(path) => read_config::<SimulateConfig>(path)?,
        None => SimulateConfig::new(InterferometerConfig::new(DEFAULT_ALPHA, DEFAULT_R)?, cli.seed),
    };
    c.master_seed = cli.seed;
    if let Some(nu) = cli.nu {
        c.nu = nu;
    }
    if let Some(repeats) = cli.repeats {
        c.repeats = repeats;
    }
    let rows = simulate(&c)?;
    let extra = [("banner", format!("nu={} repeats={}", c.nu, c.repeats))];
    emit(cli, Some(c.master_seed), &c, &extra, &rows, |o| report::write_simulate(o, &rows))?;
    let saturated: Vec<String> = rows
        .iter()
        .filter(|r| 2 * r.flags_quantum.saturated.max(r.flags_classical.saturated) > c.repeats)
        .map(|r| format!("M={} {}", r.bins, r.binning))
        .collect();
    if !saturated.is_empty() {
        return Err(Failure::saturated(format!(
            "saturation dominates for {}",
            saturated.join(", ")
        )));
    }
    Ok(())
}

fn cmd_phase_scan(
    cli: &Cli,
    m: usize,
    binning: Binning,
    from_deg: f64,
    to_deg: f64,
    count: usize,
) -> Outcome {
    if count == 0 || !(to_deg >= from_deg) {
        return Err(Failure::usage("phase grid needs count >= 1 and to-deg >= from-deg"));
    }
    let c = campaign_config(cli, m, binning)?;
    let grid: Vec<Phase> = (0..count)
        .map(|i| {
            let step = if count == 1 { 0.0 } else { (to_deg - from_deg) * i as f64 / (count - 1) as f64 };
            Phase::from_degrees(from_deg + step)
        })
        .collect();
    let reports = phase_range_scan(&c, &grid)?;
    let config = json!({"campaign": c, "from_deg": from_deg, "to_deg": to_deg, "count": count});
    emit(cli, Some(c.master_seed), &config, &[], &reports, |o| {
        report::write_campaign(o, &reports)
    })?;
    let dominated = reports.iter().filter(|r| r.saturation_dominated()).count();
    if 2 * dominated > reports.len() {
        return Err(Failure::saturated(format!(
            "saturation dominates at {dominated} of {} phases",
            reports.len()
        )));
    }
    Ok(())
}

fn cmd_scaling_sweep(
    cli: &Cli,
    m: usize,
    binning: Binning,
    n_min: f64,
    n_max: f64,
    count: usize,
) -> Outcome {
    reject_config(cli)?;
    if count < 2 || !(n_min > 0.0 && n_max > n_min) {
        return Err(Failure::usage("sweep needs count >= 2 and 0 < n-min < n-max"));
    }
    let nu = cli.nu.unwrap_or(1);
    let grid = log_grid(n_min, n_max, count);
    let rows = scaling_sweep(&grid, m, binning, nu)?;
    let ys: Vec<f64> = rows.iter().map(|r| r.dphi_m).collect();
    let (slope, _) = loglog_fit(&grid, &ys)?;
    let config = json!({"M": m, "binning": binning, "nu": nu, "n_min": n_min, "n_max": n_max, "count": count});
    emit(cli, None, &config, &[("loglog_slope", slope.to_string())], &rows, |o| {
        report::write_sweep(o, &rows)
    })
}

fn weight_rows(binning: Binning) -> Result<Vec<(usize, cgmetro::WeightVector)>, Failure> {
    (2..=report::TABLE_MAX_BINS)
        .map(|m| Ok((m, reference_weights(m, binning)?)))
        .collect()
}

fn table_file(binning: Binning) -> String {
    format!("weights_{binning}.csv")
}

fn cmd_tables(cli: &Cli, check: Option<&Path>) -> Outcome {
    reject_config(cli)?;
    let tables = [
        (Binning::Equal, weight_rows(Binning::Equal)?),
        (Binning::Optimal, weight_rows(Binning::Optimal)?),
    ];
    if cli.format == Format::Json {
        let result: Vec<_> = tables
            .iter()
            .map(|(b, rows)| json!({"binning": b, "rows": rows}))
            .collect();
        let config = json!({"phi_deg": 0.0, "range_sigma": 4.0, "outer_mode": OuterMode::Finite});
        emit(cli, None, &config, &[], &result, |_| Ok(()))?;
    } else {
        if let Some(dir) = &cli.output {
            fs::create_dir_all(dir)?;
        }
        let mut stdout = cli.output.is_none().then(|| io::BufWriter::new(io::stdout().lock()));
        for (binning, rows) in &tables {
            let config = json!({"binning": binning, "phi_deg": 0.0, "range_sigma": 4.0, "outer_mode": OuterMode::Finite});
            let mut buf = Vec::new();
            report::write_header(&mut buf, "tables", None, &config)?;
            report::write_weights_table(&mut buf, rows)?;
            match (&cli.output, stdout.as_mut()) {
                (Some(dir), _) => fs::write(dir.join(table_file(*binning)), &buf)?,
                (None, Some(out)) => out.write_all(&buf)?,
                (None, None) => unreachable!("stdout is open when no output directory is given"),
            }
        }
        if let Some(mut out) = stdout {
            out.flush()?;
        }
    }
    if let Some(dir) = check {
        for (binning, rows) in &tables {
            let path = dir.join(table_file(*binning));
            let text = fs::read_to_string(&path).map_err(|e| Failure {
                code: 2,
                kind: "config",
                message: format!("cannot read {}: {e}", path.display()),
            })?;
            let golden = report::parse_weights_table(&text)?;
            compare_table(*binning, rows, &golden)?;
        }
    }
    Ok(())
}

fn compare_table(
    binning: Binning,
    rows: &[(usize, cgmetro::WeightVector)],
    golden: &[(usize, Vec<f64>)],
) -> Outcome {
    if golden.len() != rows.len() {
        return Err(Failure::numerical(format!(
            "{binning} table has {} rows, golden has {}",
            rows.len(),
            golden.len()
        )));
    }
    for ((m, w), (gm, gw)) in rows.iter().zip(golden) {
        if m != gm {
            return Err(Failure::numerical(format!("{binning} table: row M={m} vs golden M={gm}")));
        }
        for (k, (a, b)) in w.iter().zip(gw).enumerate() {
            if (a - b).abs() > TABLE_TOL {
                return Err(Failure::numerical(format!(
                    "{binning} table M={m} w{}: {a:.6} differs from golden {b} by more than {TABLE_TOL}",
                    k + 1
                )));
            }
        }
    }
    Ok(())
}
