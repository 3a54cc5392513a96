//! The terminal's decision loop.
//!
//! Once per simulated second the controller runs one cycle on the active
//! profile: the jamming check first, otherwise one estimation window whose
//! estimated BER is either stored in the local repository (at or below
//! `value_y`) or treated as a quality breach that triggers a spectrum scan
//! and a handover.

mod event;
mod repository;
mod scenario;

use std::collections::{BTreeMap, BTreeSet};
use std::str::FromStr;

pub use event::{write_event_log, ControllerEvent, EventKind, Scalar};
pub use repository::{Repository, RepositoryRecord};
pub use scenario::{Directive, NetworkCandidate, ScenarioScript, TimedDirective, UserClass};

use crate::channel::{window_stats, JammerSpec};
use crate::link::{transmit_window, LinkConditions};
use crate::mapping::{bundled_table, map_ber_to_snr, LookupTable, ThresholdStore, Thresholds};
use crate::phy::{PhyProfile, ProfileSet};
use crate::testbench::{
    calibrate_on_sd_diffs, detect_jamming, measure_window, probe_window, JammingState,
    CALIBRATION_TOLERANCE, DEFAULT_JAMMING_ALPHA,
};
use crate::{seed, Error, Result};

pub const JAMMING_MESSAGE: &str = "jamming signal detected";

/// Where the test bench gets `value_x` from when a profile is activated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdMode {
    /// Use the profile's stored `value_x` as is.
    Profile,
    /// Calibrate `value_x` at the profile's `min_snr_db` so the estimated
    /// BER matches the probe window's true post-decode BER.
    Calibrated,
}

impl FromStr for ThresholdMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "profile" => Ok(ThresholdMode::Profile),
            "calibrated" => Ok(ThresholdMode::Calibrated),
            other => Err(Error::InvalidArgument(format!(
                "threshold mode `{other}` (expected profile|calibrated)"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ControllerConfig {
    /// Base seed of every estimation window.
    pub seed: u64,
    pub thresholds: ThresholdMode,
    pub calibration_seed: u64,
    /// Cycles allowed after End-of-Balance before the link is dropped.
    pub grace_cycles: u32,
    pub jamming_alpha: f64,
    /// Channel SNR of a profile that has no scripted value yet.
    pub initial_snr_db: f64,
    /// Simulated time of the first cycle. Scenario times are relative to it.
    pub start_time_s: u64,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        ControllerConfig {
            seed: 1,
            thresholds: ThresholdMode::Calibrated,
            calibration_seed: 1,
            grace_cycles: 3,
            jamming_alpha: DEFAULT_JAMMING_ALPHA,
            initial_snr_db: 15.0,
            start_time_s: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum HandoverReason {
    Quality,
    EndOfBalance,
    PrimaryReclaim,
    Reconnect,
}

impl HandoverReason {
    fn as_str(self) -> &'static str {
        match self {
            HandoverReason::Quality => "quality",
            HandoverReason::EndOfBalance => "end_of_balance",
            HandoverReason::PrimaryReclaim => "primary_reclaim",
            HandoverReason::Reconnect => "reconnect",
        }
    }
}

/// Available candidates in rank order. Secondary-user candidates on
/// reclaimed spectrum are dropped.
pub fn scan_spectrum(
    candidates: &[NetworkCandidate],
    reclaimed: &BTreeSet<String>,
) -> Vec<NetworkCandidate> {
    let mut found: Vec<NetworkCandidate> = candidates
        .iter()
        .filter(|c| c.available)
        .filter(|c| !(c.user_class == UserClass::Secondary && reclaimed.contains(&c.profile_id)))
        .cloned()
        .collect();
    found.sort_by_key(|c| c.rank);
    found
}

pub struct Controller {
    profiles: ProfileSet,
    tables: BTreeMap<String, LookupTable>,
    /// Thresholds handed to the test bench on activation, filled lazily.
    memory: ThresholdStore,
    provisioned: BTreeSet<String>,
    config: ControllerConfig,

    active: Option<PhyProfile>,
    disconnected: bool,
    last_profile: Option<String>,
    channel_snr: BTreeMap<String, f64>,
    jammer: JammerSpec,
    jamming: JammingState,
    repository: Repository,

    candidates: Vec<NetworkCandidate>,
    reclaimed: BTreeSet<String>,
    barred: BTreeSet<String>,
    balance_grace: Option<u32>,
    vacate: bool,
    cycle: u64,
}

impl Controller {
    pub fn new(profiles: ProfileSet, config: ControllerConfig, repository: Repository) -> Self {
        let mut tables = BTreeMap::new();
        for p in profiles.iter() {
            if let Some(id) = &p.lookup_table_id {
                if let Ok(t) = bundled_table(id) {
                    tables.insert(id.clone(), t);
                }
            }
        }
        Controller {
            memory: ThresholdStore::from_profiles(&profiles),
            profiles,
            tables,
            provisioned: BTreeSet::new(),
            jamming: JammingState::new(config.jamming_alpha),
            config,
            active: None,
            disconnected: false,
            last_profile: None,
            channel_snr: BTreeMap::new(),
            jammer: JammerSpec::OFF,
            repository,
            candidates: Vec::new(),
            reclaimed: BTreeSet::new(),
            barred: BTreeSet::new(),
            balance_grace: None,
            vacate: false,
            cycle: 0,
        }
    }

    /// Registers (or replaces) a lookup table referenced by profiles.
    pub fn add_table(&mut self, table: LookupTable) {
        self.tables.insert(table.id.clone(), table);
    }

    pub fn select_profile(&mut self, profile_id: &str) -> Result<()> {
        let profile = self.configure(profile_id)?;
        self.channel_snr
            .entry(profile.id.clone())
            .or_insert(self.config.initial_snr_db);
        self.last_profile = Some(profile.id.clone());
        self.active = Some(profile);
        self.disconnected = false;
        self.jamming = JammingState::new(self.config.jamming_alpha);
        Ok(())
    }

    pub fn active_profile(&self) -> Option<&PhyProfile> {
        self.active.as_ref()
    }

    pub fn repository(&self) -> &Repository {
        &self.repository
    }

    pub fn now(&self) -> f64 {
        (self.config.start_time_s + self.cycle) as f64
    }

    pub fn channel_snr(&self, profile_id: &str) -> Option<f64> {
        self.channel_snr.get(profile_id).copied()
    }

    /// Thresholds the test bench would run with on `profile_id`.
    pub fn thresholds(&mut self, profile_id: &str) -> Result<Thresholds> {
        self.provision(profile_id)?;
        crate::mapping::get_thresholds(profile_id, &self.memory)
    }

    fn provision(&mut self, profile_id: &str) -> Result<()> {
        if self.provisioned.contains(profile_id) {
            return Ok(());
        }
        let profile = self.profiles.get(profile_id)?.clone();
        if self.config.thresholds == ThresholdMode::Calibrated {
            let probe = probe_window(&profile, profile.min_snr_db, self.config.calibration_seed)?;
            let value_x = match calibrate_on_sd_diffs(
                &probe.sd_diffs(),
                probe.actual_ber(),
                CALIBRATION_TOLERANCE,
            ) {
                Ok(c) => c.value_x,
                Err(Error::Unreachable {
                    nearest_value_x, ..
                }) => nearest_value_x,
                Err(e) => return Err(e),
            };
            self.memory.set(
                profile_id,
                Thresholds {
                    value_x,
                    value_y: profile.value_y,
                    min_snr_db: profile.min_snr_db,
                },
            );
        }
        self.provisioned.insert(profile_id.to_string());
        Ok(())
    }

    /// Profile as configured into the test bench: PHY from the profile set,
    /// thresholds from the threshold memory.
    fn configure(&mut self, profile_id: &str) -> Result<PhyProfile> {
        let thresholds = self.thresholds(profile_id)?;
        let mut profile = self.profiles.get(profile_id)?.clone();
        profile.value_x = thresholds.value_x;
        profile.value_y = thresholds.value_y;
        profile.min_snr_db = thresholds.min_snr_db;
        Ok(profile)
    }

    fn user_class_on(&self, profile_id: &str) -> UserClass {
        self.candidates
            .iter()
            .find(|c| c.profile_id == profile_id)
            .map_or(UserClass::Secondary, |c| c.user_class)
    }

    /// Applies a scripted stimulus at the current time.
    pub fn apply(&mut self, directive: &Directive) -> Result<Vec<ControllerEvent>> {
        let t = self.now();
        let mut events = Vec::new();
        match directive {
            Directive::SetSnr { snr_db, profile } => {
                let target = profile
                    .clone()
                    .or_else(|| self.last_profile.clone())
                    .ok_or(Error::NoProfileSelected)?;
                self.channel_snr.insert(target, *snr_db);
            }
            Directive::Jammer(spec) => self.jammer = *spec,
            Directive::EndOfBalance => {
                let current = self.active.as_ref().map(|p| p.id.clone());
                let mut e = ControllerEvent::new(EventKind::EndOfBalance, t)
                    .with("profile", current.as_deref().unwrap_or("none"))
                    .with("phase", "notified");
                if let Some(id) = current {
                    self.barred.insert(id);
                    self.balance_grace = Some(self.config.grace_cycles);
                    e = e.with("grace_cycles", self.config.grace_cycles);
                }
                events.push(e);
            }
            Directive::PrimaryReclaim { profile } => {
                let target = profile
                    .clone()
                    .or_else(|| self.active.as_ref().map(|p| p.id.clone()));
                if let Some(target) = target {
                    let on_active = self.active.as_ref().is_some_and(|p| p.id == target);
                    if on_active && self.user_class_on(&target) == UserClass::Secondary {
                        self.vacate = true;
                    }
                    self.reclaimed.insert(target);
                }
            }
            Directive::Candidates(list) => self.candidates = list.clone(),
        }
        Ok(events)
    }

    /// Swaps the active PHY profile and reloads its thresholds.
    pub fn execute_handover(
        &mut self,
        from: Option<&str>,
        chosen: &NetworkCandidate,
    ) -> Result<Vec<ControllerEvent>> {
        self.execute_handover_for(from, chosen, HandoverReason::Quality)
    }

    fn execute_handover_for(
        &mut self,
        from: Option<&str>,
        chosen: &NetworkCandidate,
        reason: HandoverReason,
    ) -> Result<Vec<ControllerEvent>> {
        if !chosen.available {
            return Err(Error::InvalidArgument(format!(
                "candidate `{}` is not available",
                chosen.profile_id
            )));
        }
        let t = self.now();
        let from = from.unwrap_or("none").to_string();
        let profile = self.configure(&chosen.profile_id)?;
        let initiated = ControllerEvent::new(EventKind::HandoverInitiated, t)
            .with("from_profile", from.as_str())
            .with("to_profile", chosen.profile_id.as_str())
            .with("reason", reason.as_str())
            .with("rank", chosen.rank);

        self.channel_snr.insert(profile.id.clone(), chosen.snr_db);
        let completed = ControllerEvent::new(EventKind::HandoverCompleted, t)
            .with("from_profile", from.as_str())
            .with("to_profile", profile.id.as_str())
            .with("value_x", profile.value_x)
            .with("value_y", profile.value_y)
            .with("min_snr_db", profile.min_snr_db)
            .with("channel_snr_db", chosen.snr_db);
        if !self.barred.contains(&profile.id) {
            self.balance_grace = None;
        }
        if !self.reclaimed.contains(&profile.id)
            || self.user_class_on(&profile.id) == UserClass::Primary
        {
            self.vacate = false;
        }
        self.last_profile = Some(profile.id.clone());
        self.active = Some(profile);
        self.disconnected = false;
        self.jamming = JammingState::new(self.config.jamming_alpha);
        Ok(vec![initiated, completed])
    }

    /// Scan plus handover to the best candidate other than the current one.
    fn scan_and_handover(
        &mut self,
        reason: HandoverReason,
        events: &mut Vec<ControllerEvent>,
    ) -> Result<bool> {
        let t = self.now();
        let current = self.active.as_ref().map(|p| p.id.clone());
        events.push(
            ControllerEvent::new(EventKind::ScanStarted, t)
                .with("from_profile", current.as_deref().unwrap_or("none"))
                .with("reason", reason.as_str()),
        );
        let choice = scan_spectrum(&self.candidates, &self.reclaimed)
            .into_iter()
            .find(|c| {
                Some(&c.profile_id) != current.as_ref() && !self.barred.contains(&c.profile_id)
            });
        match choice {
            Some(c) => {
                events.extend(self.execute_handover_for(current.as_deref(), &c, reason)?);
                Ok(true)
            }
            None => {
                events.push(
                    ControllerEvent::new(EventKind::NoNetworkAvailable, t)
                        .with("from_profile", current.as_deref().unwrap_or("none"))
                        .with("reason", reason.as_str()),
                );
                Ok(false)
            }
        }
    }

    /// One iteration of the outer loop at the current simulated second.
    pub fn run_cycle(&mut self) -> Result<Vec<ControllerEvent>> {
        if self.active.is_none() && !self.disconnected {
            return Err(Error::NoProfileSelected);
        }
        let mut events = Vec::new();
        self.handle_obligations(&mut events)?;
        if self.active.is_some() {
            self.run_window(&mut events)?;
        }
        self.cycle += 1;
        Ok(events)
    }

    fn handle_obligations(&mut self, events: &mut Vec<ControllerEvent>) -> Result<()> {
        if self.disconnected {
            self.scan_and_handover(HandoverReason::Reconnect, events)?;
            return Ok(());
        }
        if let Some(remaining) = self.balance_grace {
            if self.scan_and_handover(HandoverReason::EndOfBalance, events)? {
                return Ok(());
            }
            let remaining = remaining.saturating_sub(1);
            if remaining == 0 {
                let id = self.active.take().map(|p| p.id).unwrap_or_default();
                self.balance_grace = None;
                self.disconnected = true;
                self.vacate = false;
                events.push(
                    ControllerEvent::new(EventKind::EndOfBalance, self.now())
                        .with("profile", id.as_str())
                        .with("phase", "disconnected"),
                );
                return Ok(());
            }
            self.balance_grace = Some(remaining);
        }
        if self.vacate {
            self.scan_and_handover(HandoverReason::PrimaryReclaim, events)?;
        }
        Ok(())
    }

    fn run_window(&mut self, events: &mut Vec<ControllerEvent>) -> Result<()> {
        let t = self.now();
        let profile = self.active.clone().expect("checked by caller");
        let conditions = LinkConditions {
            snr_db: self.channel_snr[&profile.id],
            jammer: self.jammer,
        };
        let window_seed = seed::derive(self.config.seed, &[self.cycle]);
        let sent = transmit_window(
            &profile,
            &conditions,
            window_seed,
            profile.frames_per_window,
        )?;

        let stats = window_stats(sent.iter().map(|f| &f.received))?;
        let (jamming, state) = detect_jamming(&stats, &self.jamming);
        self.jamming = state;
        if jamming {
            events.push(
                ControllerEvent::new(EventKind::JammingDetected, t)
                    .with("profile", profile.id.as_str())
                    .with("d", state.d)
                    .with("sd_rx", stats.sd_strength)
                    .with("mean_strength", stats.mean_strength)
                    .with("message", JAMMING_MESSAGE),
            );
            return Ok(());
        }

        let measurement = measure_window(&sent, &profile)?;
        let mut result = measurement.result.clone();
        result.timestamp = t;
        let mapped = profile
            .lookup_table_id
            .as_ref()
            .and_then(|id| self.tables.get(id))
            .map_or(f64::NAN, |table| map_ber_to_snr(result.est_ber, table));
        result.mapped_snr_db = Some(mapped);

        let window_event = |kind| {
            ControllerEvent::new(kind, t)
                .with("profile", profile.id.as_str())
                .with("est_ber", result.est_ber)
                .with("erroneous_frames", result.erroneous_frames)
                .with("total_frames", result.total_frames)
                .with("mapped_snr_db", mapped)
                .with("value_x", profile.value_x)
                .with("value_y", profile.value_y)
                .with("actual_ber", measurement.actual_ber())
                .with("channel_snr_db", conditions.snr_db)
        };
        if result.est_ber <= profile.value_y {
            self.repository.append(RepositoryRecord {
                timestamp: t,
                profile_id: profile.id.clone(),
                est_ber: result.est_ber,
                mapped_snr_db: mapped,
                jamming: false,
            })?;
            events.push(window_event(EventKind::EstimateStored));
        } else {
            events.push(window_event(EventKind::QualityBreach));
            self.scan_and_handover(HandoverReason::Quality, events)?;
        }
        Ok(())
    }

    /// Runs one cycle per simulated second for `duration_s` seconds,
    /// applying each directive before the first cycle at or after its time.
    pub fn run_scenario(
        &mut self,
        script: &ScenarioScript,
        duration_s: u64,
    ) -> Result<Vec<ControllerEvent>> {
        let mut events = Vec::new();
        let mut pending = script.directives.iter().peekable();
        for _ in 0..duration_s {
            let elapsed = self.cycle as f64;
            while let Some(d) = pending.next_if(|d| d.time_s <= elapsed) {
                events.extend(self.apply(&d.directive).map_err(|e| Error::Scenario {
                    line: d.line,
                    reason: e.to_string(),
                })?);
            }
            events.extend(self.run_cycle()?);
        }
        Ok(events)
    }
}
