//! The `cogterm` command-line front end.
//!
//! Data goes to `--out` (or stdout), diagnostics to stderr. Exit status is 0
//! on success, 1 on rejected input or runtime failure, 2 on usage errors.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::controller::{
    write_event_log, Controller, ControllerConfig, Repository, ScenarioScript, ThresholdMode,
};
use crate::link::{transmit_window, LinkConditions};
use crate::mapping::{
    bundled_table, load_table, map_ber_to_snr, KeyColumn, LoadOptions, LookupTable,
};
use crate::phy::{PhyProfile, ProfileSet};
use crate::testbench::{
    calibrate_on_sd_diffs, est_ber_at, measure_window, probe_window, Calibration,
    CALIBRATION_TOLERANCE,
};
use crate::{Error, Result};

pub const DEFAULT_SEEDS: [u64; 4] = [10, 40, 70, 100];
pub const DEFAULT_CALIBRATION_SEED: u64 = 1;

#[derive(Debug, Parser)]
#[command(
    name = "cogterm",
    version,
    about = "Re-modulation test bench and handover simulator"
)]
pub struct Cli {
    /// Extra or overriding profile definitions (key/value sections).
    #[arg(long, global = true, value_name = "FILE")]
    pub profiles: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// BER sweep over SNR points and data seeds, as CSV.
    Sweep(SweepArgs),
    /// Run a scenario script through the controller.
    Run(RunArgs),
    /// Find value_x for a profile at one SNR and validate it on a fresh window.
    Calibrate(CalibrateArgs),
    /// Map an estimated BER to an SNR through a lookup table.
    Map(MapArgs),
    /// Print a lookup table.
    Table(TableArgs),
}

#[derive(Debug, Args)]
pub struct ThresholdArgs {
    /// `calibrated` tunes value_x at the profile's min_snr_db; `profile`
    /// uses the stored value.
    #[arg(long, default_value = "calibrated")]
    pub thresholds: String,
    /// Explicit value_x; overrides --thresholds.
    #[arg(long)]
    pub value_x: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_CALIBRATION_SEED)]
    pub calibration_seed: u64,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub profile: String,
    /// SNR points in dB: `1,2,3` or `start:stop:step`. Defaults to the
    /// profile's lookup-table rows.
    #[arg(long)]
    pub snr: Option<String>,
    /// Comma-separated data seeds.
    #[arg(long, alias = "seed", value_delimiter = ',', default_values_t = DEFAULT_SEEDS)]
    pub seeds: Vec<u64>,
    #[arg(long)]
    pub frames: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Append log10(BER) columns.
    #[arg(long)]
    pub log10: bool,
    #[command(flatten)]
    pub thresholds: ThresholdArgs,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    pub scenario: PathBuf,
    #[arg(long)]
    pub profile: String,
    /// Simulated seconds (one cycle each).
    #[arg(long)]
    pub duration: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub frames: Option<usize>,
    /// Event log destination.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value = "repository.csv")]
    pub repo: PathBuf,
    /// Channel SNR before any scripted `set_snr`.
    #[arg(long, default_value_t = 15.0)]
    pub snr: f64,
    #[arg(long, default_value_t = 3)]
    pub grace: u32,
    #[command(flatten)]
    pub thresholds: ThresholdArgs,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[arg(long)]
    pub profile: String,
    #[arg(long, allow_hyphen_values = true)]
    pub snr: f64,
    /// Probe window seed.
    #[arg(long, default_value_t = DEFAULT_CALIBRATION_SEED)]
    pub seed: u64,
    /// Target estimated BER; defaults to the probe window's true BER.
    #[arg(long)]
    pub target: Option<f64>,
    /// Held-out validation seed; defaults to seed + 1.
    #[arg(long)]
    pub validation_seed: Option<u64>,
    #[arg(long)]
    pub frames: Option<usize>,
    #[arg(long, default_value_t = CALIBRATION_TOLERANCE)]
    pub tolerance: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MapArgs {
    #[arg(allow_hyphen_values = true)]
    pub est_ber: f64,
    /// Bundled table or profile id, or a table file path.
    pub table: String,
    #[arg(long, default_value = "estimated")]
    pub key: String,
    #[arg(long, default_value_t = crate::mapping::DEFAULT_KEY_SEED)]
    pub key_seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TableArgs {
    pub table: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `args` (including the program name) and executes the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                stderr.write_all(text.as_bytes())
            } else {
                stdout.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match execute(&cli, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            1
        }
    }
}

fn execute(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    let mut profiles = ProfileSet::bundled();
    if let Some(path) = &cli.profiles {
        profiles.load_config(path)?;
    }
    match &cli.command {
        Command::Sweep(a) => {
            with_output(a.out.as_deref(), stdout, |w| sweep(&profiles, a, w, stderr))
        }
        Command::Run(a) => with_output(a.out.as_deref(), stdout, |w| run_scenario(&profiles, a, w)),
        Command::Calibrate(a) => {
            with_output(a.out.as_deref(), stdout, |w| calibrate(&profiles, a, w))
        }
        Command::Map(a) => with_output(a.out.as_deref(), stdout, |w| map(a, w)),
        Command::Table(a) => with_output(a.out.as_deref(), stdout, |w| table(&a.table, w)),
    }
}

fn with_output(
    path: Option<&Path>,
    stdout: &mut dyn Write,
    body: impl FnOnce(&mut dyn Write) -> Result<()>,
) -> Result<()> {
    match path {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p)?);
            body(&mut w)?;
            w.flush()?;
            Ok(())
        }
        None => body(stdout),
    }
}

fn profile_with_frames(
    profiles: &ProfileSet,
    id: &str,
    frames: Option<usize>,
) -> Result<PhyProfile> {
    let mut profile = profiles.get(id)?.clone();
    if let Some(frames) = frames {
        profile.frames_per_window = frames;
        profile.validate()?;
    }
    Ok(profile)
}

/// value_x for `profile` according to the threshold flags.
pub fn resolve_value_x(profile: &PhyProfile, args: &ThresholdArgs) -> Result<f64> {
    if let Some(v) = args.value_x {
        if !(v >= 0.0) {
            return Err(Error::InvalidArgument(format!("value_x {v} must be >= 0")));
        }
        return Ok(v);
    }
    match args.thresholds.parse()? {
        ThresholdMode::Profile => Ok(profile.value_x),
        ThresholdMode::Calibrated => {
            let probe = probe_window(profile, profile.min_snr_db, args.calibration_seed)?;
            match calibrate_on_sd_diffs(
                &probe.sd_diffs(),
                probe.actual_ber(),
                CALIBRATION_TOLERANCE,
            ) {
                Ok(c) => Ok(c.value_x),
                Err(Error::Unreachable {
                    nearest_value_x, ..
                }) => Ok(nearest_value_x),
                Err(e) => Err(e),
            }
        }
    }
}

pub fn parse_snr_points(spec: &str) -> Result<Vec<f64>> {
    let bad = || Error::InvalidArgument(format!("bad SNR list `{spec}`"));
    let points: Vec<f64> = if spec.contains(':') {
        let parts: Vec<f64> = spec
            .split(':')
            .map(|p| p.trim().parse().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        let [start, stop, step] = parts[..] else {
            return Err(bad());
        };
        if !(step > 0.0) {
            return Err(bad());
        }
        let count = ((stop - start) / step + 1e-9).floor();
        if !(count >= 0.0) {
            return Err(bad());
        }
        (0..=count as usize)
            .map(|i| start + step * i as f64)
            .collect()
    } else {
        spec.split(',')
            .map(|p| p.trim().parse().map_err(|_| bad()))
            .collect::<Result<_>>()?
    };
    if points.is_empty() || points.iter().any(|p| p.is_nan()) {
        return Err(bad());
    }
    if points.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument(format!(
            "SNR points `{spec}` must be strictly increasing"
        )));
    }
    Ok(points)
}

/// One sweep output row.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub snr_db: f64,
    pub seed: u64,
    pub actual_ber: f64,
    pub estimated_ber: f64,
    pub erroneous_frames: usize,
}

/// Runs every `(snr, seed)` point; rows come back in `(snr, seed)` order.
pub fn sweep_rows(
    profile: &PhyProfile,
    snr_points: &[f64],
    seeds: &[u64],
) -> Result<Vec<SweepRow>> {
    let points: Vec<(f64, u64)> = snr_points
        .iter()
        .flat_map(|&snr| seeds.iter().map(move |&seed| (snr, seed)))
        .collect();
    points
        .par_iter()
        .map(|&(snr_db, seed)| {
            let sent = transmit_window(
                profile,
                &LinkConditions::awgn(snr_db),
                seed,
                profile.frames_per_window,
            )?;
            let m = measure_window(&sent, profile)?;
            Ok(SweepRow {
                snr_db,
                seed,
                actual_ber: m.actual_ber(),
                estimated_ber: m.result.est_ber,
                erroneous_frames: m.result.erroneous_frames,
            })
        })
        .collect()
}

fn log10_token(ber: f64) -> String {
    if ber <= 0.0 {
        "-inf".into()
    } else {
        format!("{}", ber.log10())
    }
}

fn sweep(
    profiles: &ProfileSet,
    a: &SweepArgs,
    out: &mut dyn Write,
    diag: &mut dyn Write,
) -> Result<()> {
    let mut profile = profile_with_frames(profiles, &a.profile, a.frames)?;
    let snr_points = match &a.snr {
        Some(spec) => parse_snr_points(spec)?,
        None => {
            let id = profile.lookup_table_id.as_deref().ok_or_else(|| {
                Error::InvalidArgument(format!("profile `{}` has no table; pass --snr", profile.id))
            })?;
            bundled_table(id)?.rows.iter().map(|r| r.snr_db).collect()
        }
    };
    if a.seeds.is_empty() {
        return Err(Error::InvalidArgument(
            "at least one seed is required".into(),
        ));
    }
    profile.value_x = resolve_value_x(&profile, &a.thresholds)?;
    writeln!(diag, "{}: value_x = {}", profile.id, profile.value_x)?;

    let rows = sweep_rows(&profile, &snr_points, &a.seeds)?;
    if a.log10 {
        writeln!(
            out,
            "snr,seed,actual_ber,estimated_ber,erroneous_frames,log10_actual_ber,log10_estimated_ber"
        )?;
    } else {
        writeln!(out, "snr,seed,actual_ber,estimated_ber,erroneous_frames")?;
    }
    for r in rows {
        write!(
            out,
            "{},{},{},{},{}",
            r.snr_db, r.seed, r.actual_ber, r.estimated_ber, r.erroneous_frames
        )?;
        if a.log10 {
            write!(
                out,
                ",{},{}",
                log10_token(r.actual_ber),
                log10_token(r.estimated_ber)
            )?;
        }
        writeln!(out)?;
    }
    Ok(())
}

fn run_scenario(profiles: &ProfileSet, a: &RunArgs, out: &mut dyn Write) -> Result<()> {
    let script = ScenarioScript::load(&a.scenario)?;
    let mut profiles = profiles.clone();
    if let Some(frames) = a.frames {
        let ids: Vec<String> = profiles.ids().map(str::to_string).collect();
        for id in ids {
            let p = profiles.get(&id)?.clone().with_frames_per_window(frames);
            profiles.insert(p)?;
        }
    }
    let mode: ThresholdMode = a.thresholds.thresholds.parse()?;
    if let Some(v) = a.thresholds.value_x {
        let ids: Vec<String> = profiles.ids().map(str::to_string).collect();
        for id in ids {
            let p = profiles.get(&id)?.clone().with_value_x(v);
            profiles.insert(p)?;
        }
    }
    let config = ControllerConfig {
        seed: a.seed,
        thresholds: if a.thresholds.value_x.is_some() {
            ThresholdMode::Profile
        } else {
            mode
        },
        calibration_seed: a.thresholds.calibration_seed,
        grace_cycles: a.grace,
        initial_snr_db: a.snr,
        ..ControllerConfig::default()
    };
    let repository = Repository::open(&a.repo)?;
    // Resume the clock after whatever an earlier session stored.
    let start_time_s = repository
        .records()
        .last()
        .map_or(0, |r| r.timestamp.floor().max(0.0) as u64 + 1);
    let config = ControllerConfig {
        start_time_s,
        ..config
    };
    let mut controller = Controller::new(profiles, config, repository);
    controller.select_profile(&a.profile)?;
    let events = controller.run_scenario(&script, a.duration)?;
    write_event_log(&events, out)?;
    Ok(())
}

fn calibrate(profiles: &ProfileSet, a: &CalibrateArgs, out: &mut dyn Write) -> Result<()> {
    let profile = profile_with_frames(profiles, &a.profile, a.frames)?;
    if !a.snr.is_finite() {
        return Err(Error::InvalidArgument("--snr must be finite".into()));
    }
    let probe = probe_window(&profile, a.snr, a.seed)?;
    let target = a.target.unwrap_or_else(|| probe.actual_ber());
    writeln!(out, "profile: {}", profile.id)?;
    writeln!(out, "snr_db: {}", a.snr)?;
    writeln!(out, "probe_seed: {}", a.seed)?;
    writeln!(out, "probe_actual_ber: {}", probe.actual_ber())?;
    writeln!(out, "target_ber: {target}")?;
    match calibrate_on_sd_diffs(&probe.sd_diffs(), target, a.tolerance) {
        Ok(Calibration {
            value_x,
            achieved_est_ber,
            residual,
            iterations,
            ..
        }) => {
            writeln!(out, "value_x: {value_x}")?;
            writeln!(out, "achieved_est_ber: {achieved_est_ber}")?;
            writeln!(out, "residual: {residual}")?;
            writeln!(out, "iterations: {iterations}")?;
            let validation_seed = a.validation_seed.unwrap_or(a.seed.wrapping_add(1));
            let check = probe_window(&profile, a.snr, validation_seed)?;
            let est = est_ber_at(&check.sd_diffs(), value_x);
            writeln!(out, "validation_seed: {validation_seed}")?;
            writeln!(out, "validation_est_ber: {est}")?;
            writeln!(out, "validation_residual: {}", (est - target).abs())?;
            Ok(())
        }
        Err(Error::Unreachable {
            target,
            nearest_value_x,
            achieved,
            residual,
        }) => {
            writeln!(out, "status: unreachable")?;
            writeln!(out, "nearest_value_x: {nearest_value_x}")?;
            writeln!(out, "achieved_est_ber: {achieved}")?;
            writeln!(out, "residual: {residual}")?;
            Err(Error::Unreachable {
                target,
                nearest_value_x,
                achieved,
                residual,
            })
        }
        Err(e) => Err(e),
    }
}

/// A bundled table by table/profile id, or a table file.
pub fn resolve_table(spec: &str) -> Result<LookupTable> {
    match bundled_table(spec) {
        Ok(t) => Ok(t),
        Err(Error::UnknownTable(_)) if Path::new(spec).is_file() => {
            let text = std::fs::read_to_string(spec)?;
            let id = Path::new(spec)
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or(spec);
            load_table(id, &text, &LoadOptions::default())
        }
        Err(e) => Err(e),
    }
}

fn map(a: &MapArgs, out: &mut dyn Write) -> Result<()> {
    if !(0.0..=1.0).contains(&a.est_ber) {
        return Err(Error::InvalidArgument(format!(
            "estimated BER {} outside [0, 1]",
            a.est_ber
        )));
    }
    let key: KeyColumn = a.key.parse()?;
    let table = resolve_table(&a.table)?.with_key(key, a.key_seed)?;
    writeln!(out, "{}", map_ber_to_snr(a.est_ber, &table))?;
    Ok(())
}

fn table(spec: &str, out: &mut dyn Write) -> Result<()> {
    let t = resolve_table(spec)?;
    let seeds = t.seeds();
    writeln!(out, "{}", t.id)?;
    write!(out, "{:>6}", "SNR")?;
    for s in &seeds {
        write!(out, " | {:^26}", format!("seed {s}"))?;
    }
    writeln!(out)?;
    write!(out, "{:>6}", "")?;
    for _ in &seeds {
        write!(out, " | {:>8} {:>9} {:>7}", "actual", "estimated", "frames")?;
    }
    writeln!(out)?;
    for row in &t.rows {
        write!(out, "{:>6}", row.snr_db)?;
        for s in &seeds {
            match row.per_seed.get(s) {
                Some(e) => write!(
                    out,
                    " | {:>8} {:>9} {:>7}",
                    e.actual_ber, e.estimated_ber, e.erroneous_frames
                )?,
                None => write!(out, " | {:>26}", "-")?,
            }
        }
        writeln!(out)?;
    }
    Ok(())
}
