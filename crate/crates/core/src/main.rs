use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use uwb_energy::config::{parse_config, RunConfig, PAPER_DEFAULTS};
use uwb_energy::gn::{snr_csv_row, SNR_CSV_HEADER};
use uwb_energy::isrs::SpanModel;
use uwb_energy::optimizer::{LaunchParam, OptimizerReport};
use uwb_energy::spectrum::{band_label, parse_band_label, BandName};
use uwb_energy::sweep::{run_scenario, run_sweep, write_sweep, ScenarioResult, TOOL_VERSION};
use uwb_energy::units::{dbm_to_mw, mw_to_dbm};
use uwb_energy::Error;

#[derive(Parser)]
#[command(
    name = "uwb-energy",
    version,
    about = "Ultra-wideband link throughput and energy-per-bit modelling"
)]
struct Cli {
    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArg {
    /// TOML run config, or `paper_defaults`.
    #[arg(long, default_value = PAPER_DEFAULTS)]
    config: String,
}

#[derive(Args)]
struct OptimizerArgs {
    /// Launch-power nodes per band.
    #[arg(long)]
    segments: Option<usize>,
    #[arg(long)]
    max_sweeps: Option<usize>,
    /// Initial pattern-search step (dB).
    #[arg(long)]
    step_init: Option<f64>,
    /// Stop once the step falls below this (dB).
    #[arg(long)]
    step_min: Option<f64>,
}

impl OptimizerArgs {
    fn apply(&self, cfg: &mut RunConfig) -> Result<(), Error> {
        let o = &mut cfg.optimizer;
        if let Some(v) = self.segments {
            o.segments = v;
        }
        if let Some(v) = self.max_sweeps {
            o.max_sweeps = v;
        }
        if let Some(v) = self.step_init {
            o.step_init_db = v;
        }
        if let Some(v) = self.step_min {
            o.step_min_db = v;
        }
        cfg.validate()
    }
}

#[derive(Subcommand)]
enum Command {
    /// Print amplifier PCE curves, a PCE lookup, or an electrical power.
    Pce {
        #[command(flatten)]
        config: ConfigArg,
        /// Device name, e.g. O-BDFA or C-EDFA; all amplifiers when omitted.
        #[arg(long)]
        amp: Option<String>,
        /// Total input power (dBm).
        #[arg(long, allow_hyphen_values = true)]
        input_dbm: Option<f64>,
        /// Total output power (dBm); prints electrical power in W.
        #[arg(long, allow_hyphen_values = true)]
        output_dbm: Option<f64>,
    },
    /// Dump the single-span ISRS power profile as CSV.
    Span {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long, default_value = "A")]
        fibre: String,
        #[arg(long, default_value = "OESCL")]
        bands: String,
        /// Flat per-channel launch power (dBm).
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        launch_dbm: f64,
        #[arg(long)]
        z_steps: Option<usize>,
        /// Write here instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Optimise and evaluate one band combination.
    Solve {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        bands: String,
        #[arg(long)]
        fibre: String,
        #[arg(long)]
        spans: usize,
        #[arg(long)]
        output_dir: Option<PathBuf>,
        #[command(flatten)]
        optimizer: OptimizerArgs,
    },
    /// Optimise and evaluate every band combination.
    Sweep {
        #[command(flatten)]
        config: ConfigArg,
        /// Fibre name; every configured fibre when omitted.
        #[arg(long)]
        fibre: Option<String>,
        /// Span count; every configured distance when omitted.
        #[arg(long)]
        spans: Option<usize>,
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Worker threads (0 = all cores); overrides config and environment.
        #[arg(long)]
        workers: Option<usize>,
        #[command(flatten)]
        optimizer: OptimizerArgs,
    },
    /// Print the built-in configuration as TOML.
    Defaults {
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    if e.is_numerical() {
        2
    } else {
        1
    }
}

fn provenance(cfg: &RunConfig) -> String {
    format!("# uwb-energy {TOOL_VERSION} config {}", cfg.hash())
}

fn emit(output: Option<&Path>, text: &str) -> Result<(), Error> {
    match output {
        Some(p) => std::fs::write(p, text).map_err(|source| Error::Io {
            path: p.display().to_string(),
            source,
        }),
        None => match std::io::stdout().lock().write_all(text.as_bytes()) {
            Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Error::Io {
                path: "<stdout>".into(),
                source: e,
            }),
            _ => Ok(()),
        },
    }
}

fn run(cmd: Command) -> Result<(), Error> {
    match cmd {
        Command::Pce {
            config,
            amp,
            input_dbm,
            output_dbm,
        } => {
            let cfg = parse_config(&config.config)?;
            let amps: Vec<_> = match &amp {
                Some(name) => {
                    let found: Vec<_> = cfg
                        .amplifiers
                        .iter()
                        .filter(|a| a.device_name().eq_ignore_ascii_case(name))
                        .collect();
                    if found.is_empty() {
                        let known: Vec<String> = cfg.amplifiers.iter().map(|a| a.device_name()).collect();
                        return Err(Error::Config(format!(
                            "unknown amplifier {name}; configured: {}",
                            known.join(", ")
                        )));
                    }
                    found
                }
                None => cfg.amplifiers.iter().collect(),
            };
            match (input_dbm, output_dbm) {
                (Some(pin), Some(pout)) => {
                    for a in amps {
                        println!("{}", a.electrical_power(dbm_to_mw(pin), dbm_to_mw(pout))?);
                    }
                }
                (Some(pin), None) => {
                    for a in amps {
                        println!("{}", a.pce.pce_at(pin)?);
                    }
                }
                (None, Some(_)) => return Err(Error::Config("--output-dbm needs --input-dbm".into())),
                (None, None) => {
                    println!("amplifier,noise_figure_db,input_dbm,pce");
                    for a in amps {
                        for (p, eta) in &a.pce.points {
                            println!("{},{},{},{}", a.device_name(), a.noise_figure_db, p, eta);
                        }
                    }
                }
            }
            Ok(())
        }
        Command::Span {
            config,
            fibre,
            bands,
            launch_dbm,
            z_steps,
            output,
        } => {
            let cfg = parse_config(&config.config)?;
            let fibre = cfg.fibre(&fibre)?;
            let grid = cfg.grid_for(&parse_band_label(&bands)?)?;
            let launch = vec![dbm_to_mw(launch_dbm); grid.len()];
            let profile = SpanModel::new(&grid, &fibre)?.propagate(&launch, z_steps.unwrap_or(cfg.link.z_steps))?;
            let mut out = String::new();
            let _ = writeln!(
                out,
                "{} fibre {} bands {} launch {launch_dbm} dBm",
                provenance(&cfg),
                fibre.name,
                band_label(&grid.bands())
            );
            out.push_str("z_km,frequency_thz,power_dbm\n");
            for (z, row) in profile.z_km.iter().zip(&profile.powers) {
                for (ch, p) in grid.channels().iter().zip(row) {
                    let _ = writeln!(out, "{z:.4},{:.6},{:.6}", ch.center_thz, mw_to_dbm(*p));
                }
            }
            emit(output.as_deref(), &out)
        }
        Command::Solve {
            config,
            bands,
            fibre,
            spans,
            output_dir,
            optimizer,
        } => {
            let mut cfg = parse_config(&config.config)?;
            optimizer.apply(&mut cfg)?;
            if spans == 0 {
                return Err(Error::Config("--spans must be >= 1".into()));
            }
            let bands = parse_band_label(&bands)?;
            let fibre = cfg.fibre(&fibre)?;
            let out = run_scenario(&cfg, &bands, &fibre, spans)?;
            let dir = output_dir.unwrap_or_else(|| PathBuf::from(&cfg.run.output_dir));
            let paths = write_solve(&dir, &cfg, &bands, &out.result, &out.launch, &out.evaluation.snrs)?;
            let r = &out.result;
            println!(
                "{} fibre {} {} spans: {} channels, {:.3} Tb/s, amp {:.3} W, trx {:.1} W, {:.4} pJ/bit amp, {:.4} pJ/bit total",
                r.label, r.fibre, r.n_spans, r.channels, r.throughput_tbps, r.amp_power_w, r.trx_power_w, r.pj_per_bit_amp, r.pj_per_bit_total
            );
            for p in paths {
                println!("wrote {}", p.display());
            }
            Ok(())
        }
        Command::Sweep {
            config,
            fibre,
            spans,
            output_dir,
            workers,
            optimizer,
        } => {
            let mut cfg = parse_config(&config.config)?;
            optimizer.apply(&mut cfg)?;
            let fibres: Vec<String> = match fibre {
                Some(f) => vec![f],
                None => cfg.fibres.iter().map(|f| f.name.clone()).collect(),
            };
            let distances = match spans {
                Some(0) => return Err(Error::Config("--spans must be >= 1".into())),
                Some(s) => vec![s],
                None => cfg.link.distances.clone(),
            };
            let workers = workers.unwrap_or_else(|| cfg.workers());
            let dir = output_dir.unwrap_or_else(|| PathBuf::from(&cfg.run.output_dir));
            for name in &fibres {
                let fibre = cfg.fibre(name)?;
                for &n in &distances {
                    let sweep = run_sweep(&cfg, &fibre, n, workers)?;
                    for e in &sweep.entries {
                        if let Some(err) = &e.error {
                            eprintln!("warning: {} failed: {err}", e.label);
                        }
                    }
                    for p in write_sweep(&dir, &sweep)? {
                        println!("wrote {}", p.display());
                    }
                }
            }
            Ok(())
        }
        Command::Defaults { output } => {
            let cfg = RunConfig::paper_defaults();
            let text = format!("{}\n{}", provenance(&cfg), cfg.to_toml()?);
            emit(output.as_deref(), &text)
        }
    }
}

#[derive(Serialize)]
struct SolveReport<'a> {
    tool_version: &'a str,
    config_hash: String,
    scenario: &'a ScenarioResult,
    launch: &'a LaunchParam,
    #[serde(skip_serializing_if = "Option::is_none")]
    optimizer: Option<&'a OptimizerReport>,
}

fn write_solve(
    dir: &Path,
    cfg: &RunConfig,
    bands: &[BandName],
    result: &ScenarioResult,
    launch: &LaunchParam,
    snrs: &[uwb_energy::gn::ChannelSnr],
) -> Result<Vec<PathBuf>, Error> {
    let io = |p: &Path| {
        let path = p.display().to_string();
        move |source| Error::Io { path, source }
    };
    std::fs::create_dir_all(dir).map_err(io(dir))?;
    let stem = format!("solve_{}_{}_{}", band_label(bands), result.fibre, result.n_spans);
    let mut csv = format!("{}\n{SNR_CSV_HEADER}\n", provenance(cfg));
    for s in snrs {
        csv.push_str(&snr_csv_row(s));
        csv.push('\n');
    }
    let report = SolveReport {
        tool_version: TOOL_VERSION,
        config_hash: cfg.hash(),
        scenario: result,
        launch,
        optimizer: result.optimizer.as_ref(),
    };
    let json = serde_json::to_string_pretty(&report).map_err(|e| Error::Parse(e.to_string()))?;
    let csv_path = dir.join(format!("{stem}.csv"));
    let json_path = dir.join(format!("{stem}.json"));
    std::fs::write(&csv_path, csv).map_err(io(&csv_path))?;
    std::fs::write(&json_path, json).map_err(io(&json_path))?;
    Ok(vec![csv_path, json_path])
}
