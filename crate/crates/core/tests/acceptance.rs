//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary so every criterion is evaluated and reported even
//! when an earlier one fails. Criteria listed in `KNOWN_RED` fail on the
//! bundled data itself (see the README); they are still evaluated at full
//! strictness and reported as FAIL. The process exits non-zero on any other
//! failure, or on any failure at all when `ACCEPTANCE_STRICT` is set.

mod common;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use cogterm::cli::{self, sweep_rows};
use cogterm::controller::{
    write_event_log, Controller, ControllerConfig, EventKind, Repository, RepositoryRecord,
    ScenarioScript,
};
use cogterm::link::{transmit_window, LinkConditions};
use cogterm::mapping::{bundled_table, bundled_table_data, map_ber_to_snr};
use cogterm::phy::{generate_bits, rx_chain, tx_chain, PhyProfile, ProfileSet};
use cogterm::testbench::{calibrate_on_sd_diffs, calibrate_value_x, est_ber_at, probe_window};
use common::{binomial_sigma, bpsk_ber, raw_table_rows};

const KNOWN_RED: [u32; 1] = [2];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn tests_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests")
}

/// Integer units of 1e-4, as a printed four-decimal table sees them.
fn fixed4(x: f64) -> i64 {
    (x * 1e4).round() as i64
}

fn map_exactness() -> Outcome {
    let mut checked = 0;
    let mut wrong = Vec::new();
    for id in ["wlan80211a", "wimax"] {
        let table = bundled_table(id).unwrap();
        let raw = raw_table_rows(bundled_table_data(id).unwrap());
        let key: BTreeMap<i64, f64> = raw
            .iter()
            .filter(|r| r.1 == 10)
            .map(|r| (fixed4(r.0), r.3.parse::<f64>().unwrap()))
            .collect();
        for (snr, _, _, _, _) in &raw {
            let k = key[&fixed4(*snr)];
            let expected = key
                .iter()
                .filter(|(_, v)| fixed4(**v) == fixed4(k))
                .map(|(s, _)| *s as f64 / 1e4)
                .fold(f64::NEG_INFINITY, f64::max);
            let got = map_ber_to_snr(k, &table);
            checked += 1;
            if got != expected {
                wrong.push(format!("{id} snr {snr}: {got} != {expected}"));
            }
        }
    }
    outcome(
        wrong.is_empty(),
        format!(
            "{}/{checked} entries map back to their row {wrong:?}",
            checked - wrong.len()
        ),
    )
}

fn data_integrity() -> Outcome {
    let mut checked = 0;
    let mut bad = Vec::new();
    for id in ["wlan80211a", "wimax"] {
        for (snr, seed, _, est, frames) in raw_table_rows(bundled_table_data(id).unwrap()) {
            let decimals = est.split('.').nth(1).map_or(0, str::len) as i32;
            let scale = 10i64.pow(decimals as u32);
            // frames / 500 rounded half-up to the printed number of decimals.
            let from_count = (2 * i64::from(frames) * scale + 500) / 1000;
            let printed = (est.parse::<f64>().unwrap() * scale as f64).round() as i64;
            checked += 1;
            if from_count != printed {
                bad.push(format!("{id} snr {snr} seed {seed}: {frames}/500 vs {est}"));
            }
        }
    }
    outcome(
        bad.is_empty(),
        format!(
            "{}/{checked} rows consistent; mismatches: {bad:?}",
            checked - bad.len()
        ),
    )
}

fn channel_oracle() -> Outcome {
    let profile = PhyProfile::bpsk_stub(1000);
    let mut lines = Vec::new();
    let mut pass = true;
    for snr in [0.0, 2.0, 4.0, 6.0, 8.0] {
        let sent = transmit_window(&profile, &LinkConditions::awgn(snr), 2024, 1000).unwrap();
        let errors: usize = sent
            .iter()
            .map(|f| rx_chain(&f.received, &profile).unwrap().bit_errors(&f.bits))
            .sum();
        let ber = errors as f64 / 1e6;
        let p = bpsk_ber(snr);
        let bound = 3.0 * binomial_sigma(p, 1_000_000);
        pass &= (ber - p).abs() <= bound;
        lines.push(format!("{snr}dB {ber:.5}/{p:.5}"));
    }
    outcome(pass, lines.join(", "))
}

/// Calibrated value_x at `snr_db` matching the seed-1 probe's true BER.
fn calibrated(profile: &PhyProfile, snr_db: f64) -> f64 {
    let probe = probe_window(profile, snr_db, 1).unwrap();
    calibrate_on_sd_diffs(&probe.sd_diffs(), probe.actual_ber(), 0.01)
        .unwrap()
        .value_x
}

fn crossover() -> Outcome {
    let mut profile = PhyProfile::wlan80211a();
    profile.value_x = calibrated(&profile, 7.0);
    let snrs: Vec<f64> = (1..=11).map(f64::from).collect();
    let seeds = [10, 40, 70, 100];
    let rows = sweep_rows(&profile, &snrs, &seeds).unwrap();
    let mut problems = Vec::new();
    for seed in seeds {
        let series: Vec<_> = rows.iter().filter(|r| r.seed == seed).collect();
        let n = series.len();
        for r in &series[..2] {
            if r.estimated_ber < r.actual_ber {
                problems.push(format!("seed {seed} snr {}: est < actual", r.snr_db));
            }
        }
        for r in &series[n - 2..] {
            if r.estimated_ber > r.actual_ber + 0.02 {
                problems.push(format!("seed {seed} snr {}: est > actual + 0.02", r.snr_db));
            }
        }
        let rises: Vec<f64> = series
            .windows(2)
            .map(|w| w[1].estimated_ber - w[0].estimated_ber)
            .filter(|&d| d > 0.0)
            .collect();
        if rises.len() > 1 || rises.iter().any(|&d| d > 0.02) {
            problems.push(format!("seed {seed}: inversions {rises:?}"));
        }
    }
    outcome(
        problems.is_empty(),
        format!("value_x {:.4}, 44 points; {problems:?}", profile.value_x),
    )
}

fn threshold_monotonicity() -> Outcome {
    let mut pass = true;
    for (profile, snr) in [(PhyProfile::wlan80211a(), 7.0), (PhyProfile::wimax(), 4.0)] {
        let diffs = probe_window(&profile, snr, 10).unwrap().sd_diffs();
        let max = diffs.iter().copied().fold(0.0, f64::max);
        let curve: Vec<f64> = (0..50)
            .map(|i| est_ber_at(&diffs, 1.1 * max * i as f64 / 49.0))
            .collect();
        pass &= curve.windows(2).all(|w| w[1] <= w[0]);
        pass &= curve[0] == 1.0 && curve[49] == 0.0;
    }
    outcome(pass, "500 frames x 50 thresholds, two profiles")
}

fn calibration() -> Outcome {
    let mut pass = true;
    let mut lines = Vec::new();
    for profile in [PhyProfile::wlan80211a(), PhyProfile::wimax()] {
        let target = probe_window(&profile, profile.min_snr_db, 1)
            .unwrap()
            .actual_ber();
        let c = calibrate_value_x(&profile, profile.min_snr_db, target, 1).unwrap();
        let held_out = probe_window(&profile, profile.min_snr_db, 2).unwrap();
        let est = est_ber_at(&held_out.sd_diffs(), c.value_x);
        let residual = (est - target).abs();
        pass &= residual <= 0.02 && c.iterations <= 40;
        lines.push(format!(
            "{} target {target:.4} held-out {est:.4} in {} steps",
            profile.id, c.iterations
        ));
    }
    outcome(pass, lines.join(", "))
}

fn jamming() -> Outcome {
    let profile = PhyProfile::wimax();
    let clean = tx_chain(&generate_bits(0, &profile), &profile).unwrap();
    let amplitude = 3.0 * clean.mean_power().sqrt();
    let script =
        ScenarioScript::parse(&format!("0 set_snr 9\n30 jammer on {amplitude}\n")).unwrap();

    let mut detected = 0;
    for run in 0..100u64 {
        let mut c = Controller::new(
            ProfileSet::bundled(),
            ControllerConfig {
                seed: 1000 + run,
                ..ControllerConfig::default()
            },
            Repository::in_memory(),
        );
        c.select_profile("wimax").unwrap();
        let events = c.run_scenario(&script, 32).unwrap();
        let hit = events.iter().any(|e| {
            e.kind == EventKind::JammingDetected && (e.timestamp == 30.0 || e.timestamp == 31.0)
        });
        let early = events
            .iter()
            .any(|e| e.kind == EventKind::JammingDetected && e.timestamp < 30.0);
        if hit && !early {
            detected += 1;
        }
    }

    let quiet = ScenarioScript::parse("0 set_snr 9\n").unwrap();
    let warmup = 5.0;
    let mut c = Controller::new(
        ProfileSet::bundled(),
        ControllerConfig::default(),
        Repository::in_memory(),
    );
    c.select_profile("wimax").unwrap();
    let events = c.run_scenario(&quiet, 105).unwrap();
    let false_alarms = events
        .iter()
        .filter(|e| e.kind == EventKind::JammingDetected && e.timestamp >= warmup)
        .count();
    outcome(
        detected >= 95 && false_alarms < 5,
        format!("detected {detected}/100 at t=30..31, {false_alarms}/100 false alarms"),
    )
}

fn controller_liveness() -> Outcome {
    let script = ScenarioScript::load(&tests_dir().join("data/ramp.scn")).unwrap();
    let mut c = Controller::new(
        ProfileSet::bundled(),
        ControllerConfig::default(),
        Repository::in_memory(),
    );
    c.select_profile("wlan80211a").unwrap();
    let events = c.run_scenario(&script, 16).unwrap();
    let mut log = Vec::new();
    write_event_log(&events, &mut log).unwrap();
    let golden = std::fs::read(tests_dir().join("golden/ramp_events.log")).unwrap();

    let windows: Vec<_> = events
        .iter()
        .filter(|e| matches!(e.kind, EventKind::EstimateStored | EventKind::QualityBreach))
        .collect();
    let first_over = windows
        .iter()
        .position(|e| e.num("est_ber").unwrap() > e.num("value_y").unwrap());
    let Some(first_over) = first_over else {
        return outcome(false, "no window exceeded value_y");
    };
    let t = windows[first_over].timestamp;
    let kinds: Vec<EventKind> = events
        .iter()
        .filter(|e| e.timestamp == t)
        .map(|e| e.kind)
        .collect();
    let sequence_ok = windows[first_over].kind == EventKind::QualityBreach
        && kinds.starts_with(&[
            EventKind::QualityBreach,
            EventKind::ScanStarted,
            EventKind::HandoverInitiated,
        ]);
    let wimax_x = calibrated(&PhyProfile::wimax(), 5.0);
    let after: Vec<_> = windows.iter().filter(|e| e.timestamp > t).collect();
    let reloaded = !after.is_empty() && after.iter().all(|e| e.num("value_x") == Some(wimax_x));
    outcome(
        log == golden && sequence_ok && reloaded,
        format!(
            "breach at t={t}, golden {}, {} post-handover windows at value_x {wimax_x:.4}",
            if log == golden { "matches" } else { "differs" },
            after.len()
        ),
    )
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let ramp = tests_dir().join("data/ramp.scn").display().to_string();
    let commands: [&[&str]; 5] = [
        &["sweep", "--profile", "wimax"],
        &["calibrate", "--profile", "wlan80211a", "--snr", "7"],
        &["map", "0.0723", "wlan80211a"],
        &["table", "wlan80211a"],
        &["run", &ramp, "--profile", "wlan80211a", "--duration", "16"],
    ];
    let mut differing = Vec::new();
    for (i, cmd) in commands.iter().enumerate() {
        let mut files = Vec::new();
        for round in 0..2 {
            let out = dir.path().join(format!("{i}-{round}.out"));
            let repo = dir.path().join(format!("{i}-{round}.csv"));
            let mut args = vec!["cogterm"];
            args.extend_from_slice(cmd);
            args.extend(["--out", out.to_str().unwrap()]);
            if cmd[0] == "run" {
                args.extend(["--repo", repo.to_str().unwrap()]);
            }
            let code = cli::run(args, &mut std::io::sink(), &mut std::io::sink());
            files.push((code, std::fs::read(&out).ok(), std::fs::read(&repo).ok()));
        }
        if files[0] != files[1] || files[0].0 != 0 {
            differing.push(cmd[0]);
        }
    }
    outcome(
        differing.is_empty(),
        format!("sweep, calibrate, map, table, run; differing: {differing:?}"),
    )
}

fn repository_round_trip() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("repository.csv");
    let ids = ["wlan80211a", "wimax"];
    let mut written = Vec::new();
    {
        let mut repo = Repository::open(&path).unwrap();
        for i in 0..1000u32 {
            let r = RepositoryRecord {
                timestamp: f64::from(i),
                profile_id: ids[(i % 7 < 3) as usize].into(),
                est_ber: f64::from(i % 250) / 500.0,
                mapped_snr_db: f64::from(1 + i % 11),
                jamming: false,
            };
            repo.append(r.clone()).unwrap();
            written.push(r);
        }
    }
    let repo = Repository::open(&path).unwrap();
    let all: Vec<RepositoryRecord> = repo
        .query(None, f64::NEG_INFINITY, f64::INFINITY)
        .into_iter()
        .cloned()
        .collect();
    let mut counts_ok = true;
    for id in ids {
        let expected = written.iter().filter(|r| r.profile_id == id).count();
        let got = repo.query(Some(id), f64::NEG_INFINITY, f64::INFINITY);
        counts_ok &= got.len() == expected && got.iter().all(|r| r.profile_id == id);
    }
    outcome(
        all == written && counts_ok,
        format!("{} records reloaded in order", all.len()),
    )
}

fn main() {
    let criteria: [(u32, &str, fn() -> Outcome); 10] = [
        (1, "MAP exactness", map_exactness),
        (2, "bundled-data integrity", data_integrity),
        (3, "channel oracle", channel_oracle),
        (4, "crossover reproduction", crossover),
        (5, "threshold monotonicity", threshold_monotonicity),
        (6, "calibration", calibration),
        (7, "jamming detection", jamming),
        (8, "controller liveness", controller_liveness),
        (9, "determinism", determinism),
        (10, "repository round-trip", repository_round_trip),
    ];
    let strict = std::env::var_os("ACCEPTANCE_STRICT").is_some();
    let mut unexpected = 0;
    let mut passed = 0;
    for (n, name, check) in criteria {
        let start = Instant::now();
        let o = check();
        let secs = start.elapsed().as_secs_f64();
        let verdict = match (o.pass, KNOWN_RED.contains(&n)) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known)",
            (false, false) => "FAIL",
        };
        if o.pass {
            passed += 1;
        } else if strict || !KNOWN_RED.contains(&n) {
            unexpected += 1;
        }
        println!(
            "criterion {n:>2} {name}: {verdict} [{secs:.1}s] {}",
            o.detail
        );
    }
    println!("acceptance: {passed}/10 passed");
    if unexpected > 0 {
        std::process::exit(1);
    }
}
