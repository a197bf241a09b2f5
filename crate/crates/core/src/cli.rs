//! Command-line front end: `state`, `confusion`, `qkd` and `sweep`.
//!
//! [`execute`] renders the whole artifact into memory; the binary only
//! writes it out once everything succeeded, so a failed run never leaves a
//! partial file behind.

use std::f64::consts::PI;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::circuits::PrepSettings;
use crate::detection::{self, ChannelNoise, DetectorModel, DEFAULT_GATE_WINDOW};
use crate::error::{Error, Result};
use crate::qkd::{self, QkdParams, QkdReport};
use crate::state::NORM_TOL;

#[derive(Debug, Parser)]
#[command(name = "sp2q", version, about = "Single-photon two-qubit Bell-state and QKD simulator")]
pub struct Cli {
    /// Worker threads for Monte Carlo runs (output does not depend on it).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Prepare a state and print its amplitudes and name.
    State(StateArgs),
    /// Bell-analyzer count table for the four prepared Bell states.
    Confusion(ConfusionArgs),
    /// Two-basis key exchange: sifted key size and QBER.
    Qkd(QkdArgs),
    /// Sweep a phase offset (Bell-port frequencies) or phase jitter (QBER).
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PrepArgs {
    /// Preparation HWP angle, degrees.
    #[arg(long, default_value_t = 22.5, allow_hyphen_values = true)]
    pub hwp: f64,
    /// Spatial phase on path a, radians; accepts `pi`, `pi/2`, `3pi/4`.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true, value_parser = parse_angle)]
    pub phi: f64,
    /// Insert the 45° flip plate in path a.
    #[arg(long, conflicts_with = "plate_a")]
    pub flip_a: bool,
    /// Insert the 45° flip plate in path b.
    #[arg(long, conflicts_with = "plate_b")]
    pub flip_b: bool,
    /// Insert a HWP at this angle (degrees) in path a.
    #[arg(long, allow_hyphen_values = true)]
    pub plate_a: Option<f64>,
    /// Insert a HWP at this angle (degrees) in path b.
    #[arg(long, allow_hyphen_values = true)]
    pub plate_b: Option<f64>,
}

impl PrepArgs {
    pub fn settings(&self) -> Result<PrepSettings> {
        for (name, v) in [("hwp", self.hwp), ("phi", self.phi)] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter { name, reason: "must be finite".into() });
            }
        }
        let plate_a = self.plate_a.or(self.flip_a.then_some(crate::circuits::FLIP_DEG));
        let plate_b = self.plate_b.or(self.flip_b.then_some(crate::circuits::FLIP_DEG));
        Ok(PrepSettings::new(self.hwp, self.phi).plates(plate_a, plate_b))
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct NoiseArgs {
    /// Std-dev of per-trial phase jitter on path a, radians.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub phase_sigma: f64,
    /// Deterministic phase error on path a, radians; accepts `pi` forms.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true, value_parser = parse_angle)]
    pub phase_offset: f64,
    /// Polarization misalignment in path a, degrees.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub misalign_a: f64,
    /// Polarization misalignment in path b, degrees.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub misalign_b: f64,
}

impl NoiseArgs {
    pub fn noise(&self) -> Result<ChannelNoise> {
        let n = ChannelNoise {
            phase_sigma: self.phase_sigma,
            phase_offset: self.phase_offset,
            pol_misalign_a: self.misalign_a,
            pol_misalign_b: self.misalign_b,
        };
        n.validate()?;
        Ok(n)
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DetectorArgs {
    /// Detector efficiencies: one value for all ports or four comma-separated.
    #[arg(long, default_value = "1", value_parser = parse_eta)]
    pub eta: Eta,
    /// Dark counts per second, per detector.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub dark_rate: f64,
    /// Coincidence gate window, seconds.
    #[arg(long, default_value_t = DEFAULT_GATE_WINDOW)]
    pub gate_window: f64,
    /// Probability the trigger detector heralds the photon.
    #[arg(long, default_value_t = 1.0)]
    pub herald_efficiency: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Eta(pub [f64; 4]);

fn parse_eta(s: &str) -> std::result::Result<Eta, String> {
    let values = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("bad efficiency {t:?}: {e}")))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    match values.as_slice() {
        [v] => Ok(Eta([*v; 4])),
        [a, b, c, d] => Ok(Eta([*a, *b, *c, *d])),
        _ => Err(format!("expected 1 or 4 efficiencies, got {}", values.len())),
    }
}

impl DetectorArgs {
    pub fn detector(&self) -> Result<DetectorModel> {
        let d = DetectorModel {
            eta: self.eta.0,
            dark_rate: self.dark_rate,
            gate_window: self.gate_window,
            herald_efficiency: self.herald_efficiency,
        };
        d.validate()?;
        Ok(d)
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OutputArgs {
    /// Random seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the artifact here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct StateArgs {
    #[command(flatten)]
    pub prep: PrepArgs,
    /// Emit JSON instead of text.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ConfusionArgs {
    /// Heralded trials per prepared Bell state.
    #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: u64,
    #[command(flatten)]
    pub noise: NoiseArgs,
    #[command(flatten)]
    pub detector: DetectorArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct QkdArgs {
    /// Photons sent.
    #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(1..))]
    pub photons: u64,
    /// Enable the intercept-resend eavesdropper.
    #[arg(long)]
    pub eve: bool,
    /// Also write the per-round trace CSV here.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[command(flatten)]
    pub noise: NoiseArgs,
    #[command(flatten)]
    pub detector: DetectorArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Clone, Args, Serialize)]
#[command(group(clap::ArgGroup::new("grid").required(true).args(["phi_grid", "sigma_grid"])))]
pub struct SweepArgs {
    /// Phase offsets in radians, comma-separated; accepts `pi`, `pi/2`, `3pi/4`.
    #[arg(long, value_parser = parse_grid, allow_hyphen_values = true)]
    pub phi_grid: Option<Grid>,
    /// Phase-jitter std-devs in radians for a QBER sweep.
    #[arg(long, value_parser = parse_grid)]
    pub sigma_grid: Option<Grid>,
    /// Trials (phase sweep) or photons (QBER sweep) per grid point.
    #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: u64,
    /// Eavesdropper on (QBER sweep only).
    #[arg(long)]
    pub eve: bool,
    #[command(flatten)]
    pub prep: PrepArgs,
    #[command(flatten)]
    pub detector: DetectorArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Grid(pub Vec<f64>);

fn parse_angle(token: &str) -> std::result::Result<f64, String> {
    let t = token.trim();
    let bad = |e: &dyn std::fmt::Display| format!("bad angle {t:?}: {e}");
    let Some(at) = t.find("pi") else {
        return t.parse::<f64>().map_err(|e| bad(&e));
    };
    let coef = match t[..at].trim_end_matches('*') {
        "" | "+" => 1.0,
        "-" => -1.0,
        c => c.parse::<f64>().map_err(|e| bad(&e))?,
    };
    let rest = &t[at + 2..];
    let div = match rest.strip_prefix('/') {
        Some(d) => d.parse::<f64>().map_err(|e| bad(&e))?,
        None if rest.is_empty() => 1.0,
        None => return Err(bad(&"unexpected suffix")),
    };
    Ok(coef * PI / div)
}

fn parse_grid(s: &str) -> std::result::Result<Grid, String> {
    let values =
        s.split(',').filter(|t| !t.trim().is_empty()).map(parse_angle).collect::<std::result::Result<Vec<_>, _>>()?;
    if values.is_empty() {
        return Err("grid must contain at least one point".into());
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(format!("grid value {v} is not finite"));
    }
    Ok(Grid(values))
}

/// Echo of the full invocation, stored in every JSON artifact.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig<'a, T: Serialize> {
    pub subcommand: &'static str,
    #[serde(flatten)]
    pub args: &'a T,
}

#[derive(Serialize)]
struct Artifact<'a, C: Serialize, R: Serialize> {
    config: RunConfig<'a, C>,
    result: R,
}

fn json<C: Serialize, R: Serialize>(subcommand: &'static str, args: &C, result: R) -> Result<String> {
    let mut s = serde_json::to_string_pretty(&Artifact { config: RunConfig { subcommand, args }, result })?;
    s.push('\n');
    Ok(s)
}

/// What a subcommand produced and where it goes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rendered {
    pub body: String,
    pub out: Option<PathBuf>,
    /// Additional files (e.g. a QKD trace) written alongside the main artifact.
    pub extra: Vec<(PathBuf, String)>,
}

pub fn execute(cli: &Cli) -> Result<Rendered> {
    match cli.threads {
        Some(0) => Err(Error::InvalidParameter { name: "threads", reason: "must be >= 1".into() }),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidParameter { name: "threads", reason: e.to_string() })?
            .install(|| dispatch(&cli.command)),
        None => dispatch(&cli.command),
    }
}

fn dispatch(command: &Command) -> Result<Rendered> {
    match command {
        Command::State(a) => cmd_state(a),
        Command::Confusion(a) => cmd_confusion(a),
        Command::Qkd(a) => cmd_qkd(a),
        Command::Sweep(a) => cmd_sweep(a),
    }
}

#[derive(Serialize)]
struct StateOutput {
    amplitudes: Vec<[f64; 2]>,
    probabilities: Vec<f64>,
    label: Option<String>,
}

pub fn cmd_state(args: &StateArgs) -> Result<Rendered> {
    let state = crate::circuits::prepare(&args.prep.settings()?);
    let label = state.nearest_named(NORM_TOL).map(|n| n.name());
    let body = if args.json {
        let out = StateOutput {
            amplitudes: state.amplitudes().iter().map(|a| [a.re, a.im]).collect(),
            probabilities: state.amplitudes().iter().map(|a| a.norm_sqr()).collect(),
            label,
        };
        json("state", args, out)?
    } else {
        let mut s = String::new();
        for (name, a) in ["aH", "aV", "bH", "bV"].iter().zip(state.amplitudes()) {
            s.push_str(&format!("{name} {:+.12} {:+.12}i\n", a.re, a.im));
        }
        s.push_str(&format!("label {}\n", label.as_deref().unwrap_or("-")));
        s
    };
    Ok(Rendered { body, out: None, extra: Vec::new() })
}

pub fn cmd_confusion(args: &ConfusionArgs) -> Result<Rendered> {
    let noise = args.noise.noise()?;
    let det = args.detector.detector()?;
    let table = detection::run_confusion(&detection::bell_inputs(), args.trials, &noise, &det, args.output.seed)?;
    let body = match args.format {
        Format::Csv => table.to_csv_string()?,
        Format::Json => json("confusion", args, &table)?,
    };
    Ok(Rendered { body, out: args.output.out.clone(), extra: Vec::new() })
}

fn qkd_summary_csv(r: &QkdReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "sent",
        "sifted",
        "basis_mismatch",
        "discarded_no_click",
        "discarded_multi_click",
        "key_bits",
        "bit_errors",
        "qber",
        "qber_b",
        "qber_b_prime",
        "bits_per_sifted_photon",
    ])?;
    w.write_record([
        r.sent.to_string(),
        r.sifted.to_string(),
        r.basis_mismatch.to_string(),
        r.discarded_no_click.to_string(),
        r.discarded_multi_click.to_string(),
        r.key_bits.to_string(),
        r.bit_errors.to_string(),
        r.qber.to_string(),
        r.per_basis_b.qber.to_string(),
        r.per_basis_b_prime.qber.to_string(),
        r.bits_per_sifted_photon.to_string(),
    ])?;
    Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("utf-8"))
}

pub fn cmd_qkd(args: &QkdArgs) -> Result<Rendered> {
    let params = QkdParams {
        n_photons: args.photons,
        noise: args.noise.noise()?,
        detector: args.detector.detector()?,
        eve_active: args.eve,
        seed: args.output.seed,
    };
    let mut extra = Vec::new();
    let report = match &args.trace {
        Some(path) => {
            let (report, trace) = qkd::run_qkd_traced(&params)?;
            let mut buf = Vec::new();
            qkd::write_trace_csv(&trace, &mut buf)?;
            extra.push((path.clone(), String::from_utf8(buf).expect("utf-8")));
            report
        }
        None => qkd::run_qkd(&params)?,
    };
    let body = match args.format {
        Format::Csv => qkd_summary_csv(&report)?,
        Format::Json => json("qkd", args, &report)?,
    };
    Ok(Rendered { body, out: args.output.out.clone(), extra })
}

const PORT_COLUMNS: [&str; 4] = ["psi_plus", "psi_minus", "phi_plus", "phi_minus"];

pub fn cmd_sweep(args: &SweepArgs) -> Result<Rendered> {
    let det = args.detector.detector()?;
    let seed = args.output.seed;
    let body = match (&args.phi_grid, &args.sigma_grid) {
        (Some(grid), None) => {
            let rows = detection::phase_sweep(&args.prep.settings()?, &grid.0, args.trials, &det, seed)?;
            match args.format {
                Format::Json => json("sweep", args, &rows)?,
                Format::Csv => {
                    let mut w = csv::Writer::from_writer(Vec::new());
                    let mut header = vec!["offset".to_string()];
                    header.extend(PORT_COLUMNS.iter().map(|p| format!("analytic_{p}")));
                    header.extend(PORT_COLUMNS.iter().map(|p| format!("empirical_{p}")));
                    w.write_record(&header)?;
                    for r in &rows {
                        let mut rec = vec![r.offset.to_string()];
                        rec.extend(r.analytic.iter().map(f64::to_string));
                        rec.extend(r.empirical.iter().map(f64::to_string));
                        w.write_record(&rec)?;
                    }
                    String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("utf-8")
                }
            }
        }
        (None, Some(grid)) => {
            let base = QkdParams { eve_active: args.eve, detector: det, ..QkdParams::ideal(args.trials, seed) };
            let rows = qkd::sigma_sweep(&base, &grid.0)?;
            match args.format {
                Format::Json => json("sweep", args, &rows)?,
                Format::Csv => {
                    let mut w = csv::Writer::from_writer(Vec::new());
                    w.write_record(["sigma", "analytic_qber", "qber", "qber_b", "qber_b_prime", "sifted"])?;
                    for r in &rows {
                        w.write_record([
                            r.sigma.to_string(),
                            r.analytic_qber.to_string(),
                            r.qber.to_string(),
                            r.qber_b.to_string(),
                            r.qber_b_prime.to_string(),
                            r.sifted.to_string(),
                        ])?;
                    }
                    String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("utf-8")
                }
            }
        }
        _ => return Err(Error::EmptyGrid),
    };
    Ok(Rendered { body, out: args.output.out.clone(), extra: Vec::new() })
}
