//! The `sbza` command line.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 bad or missing
//! input data, 3 internal invariant failure.

use crate::config::{ConfigError, RunConfig, Settings};
use crate::io::{self, IoError, Meta, ReplayEvent};
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sbza_core::eval::{default_thresholds, evaluate, label_periods, Rates};
use sbza_core::pipeline::assemble_observations;
use sbza_core::power::{avg_current, battery_life, max_beacon_period, reported_battery_life};
use sbza_core::sim::{simulate, GroundTruth, TurnSignalSample};
use sbza_core::{build_decision_map, roc_sweep, train, BeaconPacket, Detector, OperatingPoint, Record};
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Parser)]
#[command(name = "sbza", version, about = "RSSI side blind zone detector: simulate, train, evaluate")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Flat key = value configuration file.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Override one configuration key; may be repeated.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = true)]
struct TestData {
    /// Labeled records.
    #[arg(long, value_name = "FILE", conflicts_with_all = ["packets", "truth"])]
    records: Option<PathBuf>,
    /// Packet stream, used together with --truth.
    #[arg(long, value_name = "FILE", requires = "truth")]
    packets: Option<PathBuf>,
    /// Per-period ground truth for --packets.
    #[arg(long, value_name = "FILE", requires = "packets")]
    truth: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a packet stream and ground truth for one scenario.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "FILE")]
        packets: PathBuf,
        #[arg(long, value_name = "FILE")]
        truth: PathBuf,
        #[arg(long, value_name = "FILE")]
        turn_signal: Option<PathBuf>,
        /// Also write the labeled smoothed observations.
        #[arg(long, value_name = "FILE")]
        records: Option<PathBuf>,
    },
    /// Train class histograms and build the decision map for `lambda`.
    Train {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        data: TestData,
        #[arg(long, value_name = "FILE")]
        model: PathBuf,
        #[arg(long, value_name = "FILE")]
        map: Option<PathBuf>,
    },
    /// Detection and false alarm rates of a decision map on test data.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "FILE")]
        map: PathBuf,
        #[command(flatten)]
        data: TestData,
        /// Write the operating point as a one-row ROC file.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Sweep lambda from 0 to 10 in steps of 0.01.
    Roc {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "FILE")]
        model: PathBuf,
        #[command(flatten)]
        data: TestData,
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
    },
    /// Sensor mean current and battery life.
    Battery {
        #[command(flatten)]
        common: Common,
    },
    /// Longest beacon period that still delivers three beacons in the zone.
    Period {
        #[command(flatten)]
        common: Common,
    },
    /// Run the detector over a packet stream.
    Replay {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "FILE")]
        map: PathBuf,
        #[arg(long, value_name = "FILE")]
        packets: PathBuf,
        #[arg(long, value_name = "FILE")]
        turn_signal: Option<PathBuf>,
        /// Stop before this time; defaults to the end of the last period
        /// holding a packet or a turn signal sample.
        #[arg(long, value_name = "MS")]
        end_ms: Option<u64>,
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
    },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Internal(_) => 3,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Usage(e.to_string())
    }
}

fn data_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Data(format!("{}: {e}", path.display()))
}

fn read_input<T>(path: &Path, parse: impl FnOnce(&str) -> Result<T, IoError>) -> Result<T, CliError> {
    let text = io::read_text(path)
        .map_err(|e| data_error(path, e))?
        .map_err(|e| data_error(path, e))?;
    parse(&text).map_err(|e| data_error(path, e))
}

fn write_outputs(outputs: &[(&Path, &str)]) -> Result<(), CliError> {
    io::write_atomically(outputs).map_err(|e| {
        let names: Vec<String> = outputs.iter().map(|(p, _)| p.display().to_string()).collect();
        CliError::Data(format!("cannot write {}: {e}", names.join(", ")))
    })
}

fn load_config(common: &Common) -> Result<RunConfig, CliError> {
    let mut settings = Settings::new();
    if let Some(path) = &common.config {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        settings.parse_file(&path.display().to_string(), &text)?;
    }
    for pair in &common.set {
        settings.parse_override(pair)?;
    }
    Ok(settings.resolve()?)
}

fn run_meta(cfg: &RunConfig) -> Meta {
    Meta::new()
        .with("generator", concat!("sbza ", env!("CARGO_PKG_VERSION")))
        .with("scenario", cfg.scenario.scenario.as_str())
        .with("seed", cfg.seed())
        .with("config_sha256", cfg.hash())
}

/// Per-period records of the configured vehicle, with per-period packet
/// counts. Observations are rounded to 0.01 dB so that training from a
/// packet stream and from its records file agree.
fn periods_from_stream(cfg: &RunConfig, packets: &[BeaconPacket], truth: &[GroundTruth]) -> Result<Vec<sbza_core::LabeledPeriod>, String> {
    let period = cfg.scenario.beacon_period_ms;
    for (k, g) in truth.iter().enumerate() {
        if g.t_ms != k as u64 * period {
            return Err(format!(
                "truth row {} is at {} ms, expected {} ms (one row per {period} ms period from 0)",
                k + 1,
                g.t_ms,
                k as u64 * period
            ));
        }
    }
    let obs = assemble_observations(packets, &cfg.scenario.vehicle_id, period, truth.len(), cfg.noise_floor);
    let mut periods = label_periods(&obs, truth.iter().map(|g| g.class));
    for p in &mut periods {
        p.record.obs.front = p.record.obs.front.to_centi_db();
        p.record.obs.rear = p.record.obs.rear.to_centi_db();
    }
    Ok(periods)
}

fn load_test_data(cfg: &RunConfig, data: &TestData) -> Result<(Vec<Record>, Option<Vec<sbza_core::LabeledPeriod>>), CliError> {
    if let Some(path) = &data.records {
        let (_, records) = read_input(path, io::read_records)?;
        return Ok((records, None));
    }
    let (Some(pp), Some(tp)) = (&data.packets, &data.truth) else {
        return Err(CliError::Usage("give --records or both --packets and --truth".into()));
    };
    let (_, packets) = read_input(pp, io::read_packets)?;
    let (_, truth) = read_input(tp, io::read_truth)?;
    let periods = periods_from_stream(cfg, &packets, &truth).map_err(|e| data_error(tp, e))?;
    let records = periods.iter().map(|p| p.record).collect();
    Ok((records, Some(periods)))
}

fn format_rates(label: &str, lambda: &str, r: &Rates) -> String {
    format!(
        "{label:<15} {lambda:>8} {:>8.4} {:>8.4} {:>9} {:>11}",
        r.p_d, r.p_fa, r.n_target, r.n_notarget
    )
}

fn execute(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let print = |out: &mut dyn Write, s: &str| writeln!(out, "{s}").map_err(|e| CliError::Data(format!("stdout: {e}")));
    match cli.command {
        Command::Simulate {
            common,
            packets,
            truth,
            turn_signal,
            records,
        } => {
            let cfg = load_config(&common)?;
            let sim = simulate(&cfg.scenario).map_err(|e| CliError::Usage(e.to_string()))?;
            let meta = run_meta(&cfg).with("beacon_period_ms", cfg.scenario.beacon_period_ms);
            let p_text = io::write_packets(&meta, &sim.packets);
            let t_text = io::write_truth(&meta, &sim.truth);
            let s_text = turn_signal.as_ref().map(|_| io::write_turn_signal(&meta, &sim.turn_signal));
            let r_text = match &records {
                Some(_) => {
                    let periods = periods_from_stream(&cfg, &sim.packets, &sim.truth).map_err(CliError::Internal)?;
                    let recs: Vec<Record> = periods.iter().map(|p| p.record).collect();
                    Some(io::write_records(&meta, &recs))
                }
                None => None,
            };
            let mut outputs: Vec<(&Path, &str)> = vec![(&packets, &p_text), (&truth, &t_text)];
            if let (Some(p), Some(t)) = (&turn_signal, &s_text) {
                outputs.push((p, t));
            }
            if let (Some(p), Some(t)) = (&records, &r_text) {
                outputs.push((p, t));
            }
            write_outputs(&outputs)?;
            let in_zone = sim.truth.iter().filter(|g| g.class.is_target()).count();
            print(
                out,
                &format!(
                    "{} periods, {} in blind zone, {} packets",
                    sim.truth.len(),
                    in_zone,
                    sim.packets.len()
                ),
            )
        }
        Command::Train {
            common,
            data,
            model,
            map,
        } => {
            let cfg = load_config(&common)?;
            let (records, _) = load_test_data(&cfg, &data)?;
            let trained = train(&records, cfg.grid)
                .map_err(|e| CliError::Data(format!("training data: {e}")))?
                .with_smoothing(cfg.smoothing);
            let meta = run_meta(&cfg);
            let m_text = io::write_model(&meta, &trained);
            let decision = build_decision_map(&trained, cfg.lambda);
            let d_text = map.as_ref().map(|_| io::write_map(&meta, &decision));
            let mut outputs: Vec<(&Path, &str)> = vec![(&model, &m_text)];
            if let (Some(p), Some(t)) = (&map, &d_text) {
                outputs.push((p, t));
            }
            write_outputs(&outputs)?;
            print(
                out,
                &format!(
                    "trained on {} Target and {} NoTarget records; map at lambda {}: {} T, {} B, {} N",
                    trained.n_target(),
                    trained.n_notarget(),
                    cfg.lambda,
                    decision.count(sbza_core::Cell::Target),
                    decision.count(sbza_core::Cell::Boundary),
                    decision.count(sbza_core::Cell::NoTarget),
                ),
            )
        }
        Command::Evaluate {
            common,
            map,
            data,
            out: out_path,
        } => {
            let cfg = load_config(&common)?;
            let (_, decision) = read_input(&map, |t| io::read_map_for(t, &cfg.grid))?;
            let (records, periods) = load_test_data(&cfg, &data)?;
            let periods = periods.unwrap_or_else(|| {
                // without packet counts every period counts as packet-bearing
                records
                    .iter()
                    .map(|&record| sbza_core::LabeledPeriod { record, packets: 1 })
                    .collect()
            });
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed());
            let ev = evaluate(&decision, &periods, cfg.boundary_p, &mut rng)
                .map_err(|e| CliError::Data(format!("test data: {e}")))?;
            let lambda = decision.threshold().to_string();
            print(out, &format!("{:<15} {:>8} {:>8} {:>8} {:>9} {:>11}", "periods", "lambda", "p_d", "p_fa", "n_target", "n_notarget"))?;
            print(out, &format_rates("all", &lambda, &ev.all_periods))?;
            if data.records.is_none() {
                match &ev.packet_bearing {
                    Ok(r) => print(out, &format_rates("packet-bearing", &lambda, r))?,
                    Err(e) => print(out, &format!("{:<15} {e}", "packet-bearing"))?,
                }
            }
            if let Some(path) = out_path {
                let meta = run_meta(&cfg).with("boundary_p", cfg.boundary_p);
                let point = OperatingPoint::new(decision.threshold(), ev.all_periods);
                write_outputs(&[(&path, &io::write_roc(&meta, &[point]))])?;
            }
            Ok(())
        }
        Command::Roc {
            common,
            model,
            data,
            out: out_path,
        } => {
            let cfg = load_config(&common)?;
            let (_, trained) = read_input(&model, io::read_model)?;
            if trained.grid() != &cfg.grid {
                return Err(data_error(&model, "model grid differs from the configured grid"));
            }
            let (records, _) = load_test_data(&cfg, &data)?;
            let points = roc_sweep(&trained, &records, &default_thresholds())
                .map_err(|e| CliError::Data(format!("test data: {e}")))?;
            let meta = run_meta(&cfg).with("boundary", "Target");
            write_outputs(&[(&out_path, &io::write_roc(&meta, &points))])?;
            print(out, &format!("{} operating points", points.len()))
        }
        Command::Battery { common } => {
            let cfg = load_config(&common)?;
            let exact_i = avg_current(&cfg.power);
            let exact = battery_life(exact_i, &cfg.battery);
            let (rep_i, rep) = reported_battery_life(&cfg.power, &cfg.battery, cfg.current_decimals as i32);
            let d = cfg.current_decimals as usize;
            let rows = [
                ("mean current (mA)", format!("{rep_i:.d$}"), format!("{exact_i:.6}")),
                ("battery life (h)", format!("{:.0}", rep.hours), format!("{:.1}", exact.hours)),
                ("years, continuous", format!("{:.2}", rep.years_continuous), format!("{:.3}", exact.years_continuous)),
                (
                    "years, at duty cycle",
                    format!("{:.2}", rep.years_at_duty),
                    format!("{:.3}", exact.years_at_duty),
                ),
            ];
            print(out, &format!("{:<22} {:>10} {:>10}", "quantity", "reported", "exact"))?;
            for (name, a, b) in rows {
                print(out, &format!("{name:<22} {a:>10} {b:>10}"))?;
            }
            print(
                out,
                &format!(
                    "reported: mean current rounded to {d} places, years to 2; capacity {} mAh, duty cycle {:.4}",
                    cfg.battery.capacity_mah, cfg.battery.duty_cycle
                ),
            )
        }
        Command::Period { common } => {
            let cfg = load_config(&common)?;
            let p = cfg.plan;
            let t = max_beacon_period(p.zone_length_m, p.relative_speed_mps, p.delivery_ratio)
                .map_err(|e| CliError::Usage(e.to_string()))?;
            let configured = cfg.scenario.beacon_period_ms as f64 / 1000.0;
            let rows = [
                ("zone length (m)", format!("{}", p.zone_length_m)),
                ("relative speed (m/s)", format!("{}", p.relative_speed_mps)),
                ("delivery ratio", format!("{}", p.delivery_ratio)),
                ("max beacon period (s)", format!("{t:.3}")),
                ("configured period (s)", format!("{configured:.3}")),
                ("configured period ok", String::from(if configured <= t { "yes" } else { "no" })),
            ];
            for (name, v) in rows {
                print(out, &format!("{name:<22} {v:>10}"))?;
            }
            Ok(())
        }
        Command::Replay {
            common,
            map,
            packets,
            turn_signal,
            end_ms,
            out: out_path,
        } => {
            let cfg = load_config(&common)?;
            let (_, decision) = read_input(&map, |t| io::read_map_for(t, &cfg.grid))?;
            let (_, stream) = read_input(&packets, io::read_packets)?;
            let signal: Vec<TurnSignalSample> = match &turn_signal {
                Some(p) => read_input(p, io::read_turn_signal)?.1,
                None => Vec::new(),
            };
            let period = cfg.scenario.beacon_period_ms;
            let end = end_ms.unwrap_or_else(|| {
                let last = stream.last().map(|p| p.t_ms).into_iter().chain(signal.last().map(|s| s.t_ms)).max();
                last.map_or(0, |t| (t / period + 1) * period)
            });
            let mut detector = Detector::new(cfg.detector(), decision);
            let decisions = detector.replay(&stream, end, |t| signal_at(&signal, t));
            let events: Vec<ReplayEvent> = decisions
                .into_iter()
                .map(|d| ReplayEvent {
                    t_ms: d.t_ms,
                    vehicle_id: d.vehicle_id,
                    class: d.class,
                    alert: d.alert,
                })
                .collect();
            let meta = run_meta(&cfg).with("boundary_p", cfg.boundary_p);
            write_outputs(&[(&out_path, &io::write_events(&meta, &events))])?;
            let alerts = events.iter().filter(|e| e.alert != sbza_core::AlertState::None).count();
            print(out, &format!("{} decisions, {} with an alert", events.len(), alerts))
        }
    }
}

/// Turn signal state at `t`: the latest sample at or before it, off before
/// the first.
fn signal_at(samples: &[TurnSignalSample], t: u64) -> bool {
    let idx = samples.partition_point(|s| s.t_ms <= t);
    idx > 0 && samples[idx - 1].on
}

/// Runs the tool on `args` (program name first). Returns the exit code;
/// diagnostics go to `err` as a single line.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{}", e.render());
                return 0;
            }
            if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand {
                let _ = writeln!(err, "sbza: missing subcommand; see sbza --help");
                return 1;
            }
            let text = e.render().to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            let _ = writeln!(err, "sbza: {}", first.trim_start_matches("error: "));
            return 1;
        }
    };
    let result = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| execute(cli, out)));
    match result {
        Ok(Ok(())) => 0,
        Ok(Err(e)) => {
            let _ = writeln!(err, "sbza: {}", e.to_string().replace('\n', " "));
            e.exit_code()
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".to_string());
            let _ = writeln!(err, "sbza: internal error: {}", msg.replace('\n', " "));
            3
        }
    }
}
