//! Command-line front end.
//!
//! ```text
//! dgsm simulate --scheme dgsm --mt 4 --mr 2 --mu 2 --mod qpsk --snr 0:2:24 --seed 7
//! dgsm bound    --scheme dmgsm --mt 5 --mr 2 --mod 4qam --power-allocation --snr 0:1:30
//! dgsm complexity --table 6
//! dgsm rate --table 9
//! ```
//!
//! Sweep output is CSV with `#`-prefixed metadata lines (the full
//! configuration as JSON on the `# config=` line) or JSON with one object
//! per SNR point.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::analysis::abep_bound;
use crate::engine::{
    run_sweep_with, BerPoint, Csi, Scheme, SweepOptions, SystemConfig, DEFAULT_MAX_FRAMES,
    DEFAULT_MIN_ERRORS,
};
use crate::modem::ModKind;
use crate::tables::{complexity_csv, throughput_csv};
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(
    name = "dgsm",
    version,
    about = "Differential GSM link-level simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Monte Carlo BER sweep.
    Simulate(SimulateArgs),
    /// Analytical union bound on the BER (D-GSM and D-MGSM only).
    Bound(BoundArgs),
    /// Detection complexity comparison table (4, 5 or 6).
    Complexity(TableArgs),
    /// Effective throughput comparison table (8 or 9).
    Rate(TableArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Modulation given as `bpsk`, `qpsk`, `<M>psk`, `<M>qam`, `psk<M>` or
/// `qam<M>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Modulation {
    pub kind: ModKind,
    pub order: usize,
}

impl FromStr for Modulation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let l = s.trim().to_ascii_lowercase().replace('-', "");
        let bad = || Error::config("mod", format!("unrecognized modulation `{s}`"));
        let (kind, digits) = match l.as_str() {
            "bpsk" => {
                return Ok(Modulation {
                    kind: ModKind::Psk,
                    order: 2,
                })
            }
            "qpsk" => {
                return Ok(Modulation {
                    kind: ModKind::Psk,
                    order: 4,
                })
            }
            _ if l.ends_with("psk") => (ModKind::Psk, &l[..l.len() - 3]),
            _ if l.ends_with("qam") => (ModKind::Qam, &l[..l.len() - 3]),
            _ if l.starts_with("psk") => (ModKind::Psk, &l[3..]),
            _ if l.starts_with("qam") => (ModKind::Qam, &l[3..]),
            _ => return Err(bad()),
        };
        let order = digits.parse().map_err(|_| bad())?;
        Ok(Modulation { kind, order })
    }
}

#[derive(Debug, Clone, Args)]
pub struct ConfigArgs {
    /// JSON file holding a full configuration; overrides the flags below.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_parser = parse_scheme, default_value = "dgsm")]
    pub scheme: Scheme,
    #[arg(long, default_value_t = 4)]
    pub mt: usize,
    #[arg(long, default_value_t = 2)]
    pub mr: usize,
    /// Active antennas; defaults to 1 for GD-SM and 2 otherwise.
    #[arg(long)]
    pub mu: Option<usize>,
    #[arg(long = "mod", value_parser = parse_mod, default_value = "qpsk")]
    pub modulation: Modulation,
    /// Normal symbols per frame.
    #[arg(long, default_value_t = 100)]
    pub k: usize,
    #[arg(long)]
    pub power_allocation: bool,
    #[arg(long)]
    pub split_mu_power: bool,
    /// differential, perfect or ls; defaults to the scheme's natural mode.
    #[arg(long, value_parser = parse_csi)]
    pub csi: Option<Csi>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

fn parse_scheme(s: &str) -> std::result::Result<Scheme, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_mod(s: &str) -> std::result::Result<Modulation, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_csi(s: &str) -> std::result::Result<Csi, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

impl ConfigArgs {
    pub fn to_config(&self) -> Result<SystemConfig> {
        let cfg = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| Error::config("config", format!("{}: {e}", path.display())))?;
                serde_json::from_str(&text).map_err(|e| Error::config("config", e.to_string()))?
            }
            None => {
                let mu = self
                    .mu
                    .unwrap_or(if self.scheme == Scheme::Gdsm { 1 } else { 2 });
                let mut cfg = SystemConfig::new(
                    self.scheme,
                    self.mt,
                    self.mr,
                    mu,
                    self.modulation.kind,
                    self.modulation.order,
                );
                cfg.k = self.k;
                cfg.power_allocation = self.power_allocation;
                cfg.split_mu_power = self.split_mu_power;
                if let Some(csi) = self.csi {
                    cfg.csi = csi;
                }
                cfg.seed = self.seed;
                cfg
            }
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Output file; standard output when omitted.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub cfg: ConfigArgs,
    /// SNR sweep in dB as start:step:stop (inclusive), or a comma list.
    #[arg(long)]
    pub snr: String,
    #[arg(long, default_value_t = DEFAULT_MIN_ERRORS)]
    pub min_errors: u64,
    #[arg(long, default_value_t = DEFAULT_MAX_FRAMES)]
    pub max_frames: u64,
    /// Worker threads (also settable through DGSM_THREADS).
    #[arg(long)]
    pub threads: Option<usize>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct BoundArgs {
    #[command(flatten)]
    pub cfg: ConfigArgs,
    #[arg(long)]
    pub snr: String,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct TableArgs {
    #[arg(long)]
    pub table: u32,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

/// Parses `start:step:stop` (inclusive), a comma list, or a single value.
pub fn parse_snr_range(s: &str) -> Result<Vec<f64>> {
    let bad = || Error::SnrRange(s.to_string());
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad());
    let parts: Vec<&str> = s.split(':').collect();
    let values = match parts.as_slice() {
        [start, step, stop] => {
            let (start, step, stop) = (num(start)?, num(step)?, num(stop)?);
            if step.is_nan() || step <= 0.0 || stop < start {
                return Err(bad());
            }
            let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
            (0..n).map(|i| start + i as f64 * step).collect()
        }
        [single] => single.split(',').map(num).collect::<Result<Vec<_>>>()?,
        _ => return Err(bad()),
    };
    if values.is_empty() {
        return Err(Error::EmptySnrList);
    }
    Ok(values)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct JsonPoint {
    snr_db: f64,
    ber: f64,
    bound: Option<f64>,
    frames: u64,
    bits: u64,
    errors: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct JsonSweep {
    command: String,
    config: SystemConfig,
    min_errors: u64,
    max_frames: u64,
    points: Vec<JsonPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct JsonBoundPoint {
    snr_db: f64,
    abep_bound: f64,
    abep_bound_clipped: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct JsonBound {
    command: String,
    config: SystemConfig,
    points: Vec<JsonBoundPoint>,
}

fn metadata_header(command: &str, cfg: &SystemConfig) -> Result<String> {
    let json = serde_json::to_string(cfg).map_err(|e| Error::Parse(e.to_string()))?;
    Ok(format!("# dgsm {command}\n# config={json}\n"))
}

/// Renders sweep results in the requested format.
pub fn render_sweep(
    cfg: &SystemConfig,
    points: &[BerPoint],
    min_errors: u64,
    max_frames: u64,
    format: Format,
) -> Result<String> {
    match format {
        Format::Csv => {
            let mut out = metadata_header("simulate", cfg)?;
            out += &format!("# min_errors={min_errors} max_frames={max_frames}\n");
            out += "snr_db,ber,bound,frames,bits,errors\n";
            for p in points {
                let bound = p.bound.map(|b| format!("{b:.6e}")).unwrap_or_default();
                out += &format!(
                    "{},{:.6e},{},{},{},{}\n",
                    p.snr_db, p.ber, bound, p.frames_run, p.bits_total, p.bit_errors
                );
            }
            Ok(out)
        }
        Format::Json => {
            let doc = JsonSweep {
                command: "simulate".into(),
                config: *cfg,
                min_errors,
                max_frames,
                points: points
                    .iter()
                    .map(|p| JsonPoint {
                        snr_db: p.snr_db,
                        ber: p.ber,
                        bound: p.bound,
                        frames: p.frames_run,
                        bits: p.bits_total,
                        errors: p.bit_errors,
                    })
                    .collect(),
            };
            serde_json::to_string_pretty(&doc)
                .map(|s| s + "\n")
                .map_err(|e| Error::Parse(e.to_string()))
        }
    }
}

pub fn render_bound(cfg: &SystemConfig, snr: &[f64], format: Format) -> Result<String> {
    let points = snr
        .iter()
        .map(|&s| {
            abep_bound(cfg, s).map(|b| JsonBoundPoint {
                snr_db: s,
                abep_bound: b.raw,
                abep_bound_clipped: b.clipped,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    match format {
        Format::Csv => {
            let mut out = metadata_header("bound", cfg)?;
            out += "snr_db,abep_bound,abep_bound_clipped\n";
            for p in &points {
                out += &format!(
                    "{},{:.6e},{:.6e}\n",
                    p.snr_db, p.abep_bound, p.abep_bound_clipped
                );
            }
            Ok(out)
        }
        Format::Json => serde_json::to_string_pretty(&JsonBound {
            command: "bound".into(),
            config: *cfg,
            points,
        })
        .map(|s| s + "\n")
        .map_err(|e| Error::Parse(e.to_string())),
    }
}

/// Recovers the configuration recorded in a CSV or JSON output file.
pub fn parse_metadata(text: &str) -> Result<SystemConfig> {
    if let Some(line) = text.lines().find_map(|l| l.strip_prefix("# config=")) {
        return serde_json::from_str(line).map_err(|e| Error::Parse(e.to_string()));
    }
    #[derive(Deserialize)]
    struct Doc {
        config: SystemConfig,
    }
    serde_json::from_str::<Doc>(text)
        .map(|d| d.config)
        .map_err(|e| Error::Parse(format!("no configuration metadata found: {e}")))
}

fn emit(out: Option<&PathBuf>, text: &str, stdout: &mut dyn Write) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text)
            .map_err(|e| Error::config("out", format!("{}: {e}", path.display()))),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| Error::config("out", e.to_string())),
    }
}

/// Executes a parsed command, writing results to `out` or the `--out` file.
pub fn execute(cli: &Cli, stdout: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Simulate(a) => {
            let cfg = a.cfg.to_config()?;
            let snr = parse_snr_range(&a.snr)?;
            let opts = SweepOptions {
                min_errors: a.min_errors,
                max_frames: a.max_frames,
                workers: a.threads,
                noiseless: false,
            };
            let points = run_sweep_with(&cfg, &snr, &opts)?;
            let text = render_sweep(&cfg, &points, a.min_errors, a.max_frames, a.output.format)?;
            emit(a.output.out.as_ref(), &text, stdout)
        }
        Command::Bound(a) => {
            let cfg = a.cfg.to_config()?;
            if !cfg.scheme.has_bound() {
                return Err(Error::config(
                    "scheme",
                    format!("no analytical bound for {}", cfg.scheme),
                ));
            }
            let snr = parse_snr_range(&a.snr)?;
            let text = render_bound(&cfg, &snr, a.output.format)?;
            emit(a.output.out.as_ref(), &text, stdout)
        }
        Command::Complexity(a) => emit(a.out.as_ref(), &complexity_csv(a.table)?, stdout),
        Command::Rate(a) => emit(a.out.as_ref(), &throughput_csv(a.table)?, stdout),
    }
}

/// Parses arguments and runs; returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(stderr, "{e}");
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            1
        }
    }
}
