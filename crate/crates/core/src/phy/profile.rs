use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::{Error, Result};

pub const DEFAULT_FRAMES_PER_WINDOW: usize = 500;
pub const DEFAULT_WINDOW_DURATION_S: f64 = 0.05;

/// Constellation used by a profile. Every constellation is scaled to unit
/// average energy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Modulation {
    Bpsk,
    Qpsk,
    Qam16,
}

impl Modulation {
    pub fn from_order(order: u32) -> Option<Self> {
        match order {
            2 => Some(Self::Bpsk),
            4 => Some(Self::Qpsk),
            16 => Some(Self::Qam16),
            _ => None,
        }
    }

    pub fn order(self) -> u32 {
        match self {
            Self::Bpsk => 2,
            Self::Qpsk => 4,
            Self::Qam16 => 16,
        }
    }

    pub fn bits_per_symbol(self) -> usize {
        match self {
            Self::Bpsk => 1,
            Self::Qpsk => 2,
            Self::Qam16 => 4,
        }
    }
}

/// Convolutional code rate. Only rate 1 (uncoded stub) and rate 1/2
/// (K=7, 133/171 octal) are implemented.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CodeRate {
    pub numerator: u32,
    pub denominator: u32,
}

impl CodeRate {
    pub const UNCODED: CodeRate = CodeRate {
        numerator: 1,
        denominator: 1,
    };
    pub const HALF: CodeRate = CodeRate {
        numerator: 1,
        denominator: 2,
    };

    pub fn as_f64(self) -> f64 {
        f64::from(self.numerator) / f64::from(self.denominator)
    }
}

impl fmt::Display for CodeRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numerator, self.denominator)
    }
}

impl FromStr for CodeRate {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (n, d) = s
            .split_once('/')
            .ok_or_else(|| format!("code rate `{s}` is not of the form n/d"))?;
        let numerator = n
            .trim()
            .parse()
            .map_err(|_| format!("bad numerator `{n}`"))?;
        let denominator = d
            .trim()
            .parse()
            .map_err(|_| format!("bad denominator `{d}`"))?;
        Ok(CodeRate {
            numerator,
            denominator,
        })
    }
}

/// Everything needed to transmit and receive one network standard, plus the
/// thresholds the test bench applies to it.
#[derive(Debug, Clone, PartialEq)]
pub struct PhyProfile {
    pub id: String,
    pub modulation: Modulation,
    pub code_rate: CodeRate,
    pub bits_per_frame: usize,
    /// SD-difference threshold: a frame is erroneous when `sd_diff >= value_x`.
    pub value_x: f64,
    /// Acceptable estimated-BER ceiling.
    pub value_y: f64,
    pub min_snr_db: f64,
    pub lookup_table_id: Option<String>,
    pub frames_per_window: usize,
    pub window_duration_s: f64,
}

impl PhyProfile {
    /// 802.11a-like: rate-1/2 K=7 code, 16-QAM, 2100 bits per frame.
    pub fn wlan80211a() -> Self {
        PhyProfile {
            id: "wlan80211a".into(),
            modulation: Modulation::Qam16,
            code_rate: CodeRate::HALF,
            bits_per_frame: 2100,
            value_x: 0.00205,
            value_y: 0.072,
            min_snr_db: 7.0,
            lookup_table_id: Some("table_wlan80211a".into()),
            frames_per_window: DEFAULT_FRAMES_PER_WINDOW,
            window_duration_s: DEFAULT_WINDOW_DURATION_S,
        }
    }

    /// WiMAX-like: rate-1/2 K=7 code, QPSK, 300 bits per frame.
    pub fn wimax() -> Self {
        PhyProfile {
            id: "wimax".into(),
            modulation: Modulation::Qpsk,
            code_rate: CodeRate::HALF,
            bits_per_frame: 300,
            value_x: 0.0048,
            value_y: 0.076,
            min_snr_db: 5.0,
            lookup_table_id: Some("table_wimax".into()),
            frames_per_window: DEFAULT_FRAMES_PER_WINDOW,
            window_duration_s: DEFAULT_WINDOW_DURATION_S,
        }
    }

    /// Uncoded BPSK test profile with analytically checkable behaviour.
    pub fn bpsk_stub(bits_per_frame: usize) -> Self {
        PhyProfile {
            id: "bpsk_stub".into(),
            modulation: Modulation::Bpsk,
            code_rate: CodeRate::UNCODED,
            bits_per_frame,
            value_x: 0.01,
            value_y: 0.1,
            min_snr_db: 0.0,
            lookup_table_id: None,
            frames_per_window: DEFAULT_FRAMES_PER_WINDOW,
            window_duration_s: DEFAULT_WINDOW_DURATION_S,
        }
    }

    pub fn with_value_x(mut self, value_x: f64) -> Self {
        self.value_x = value_x;
        self
    }

    pub fn with_frames_per_window(mut self, frames: usize) -> Self {
        self.frames_per_window = frames;
        self
    }

    pub fn coded_bits_per_frame(&self) -> usize {
        self.bits_per_frame / self.code_rate.numerator as usize
            * self.code_rate.denominator as usize
    }

    pub fn symbols_per_frame(&self) -> usize {
        self.coded_bits_per_frame() / self.modulation.bits_per_symbol()
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |reason: String| {
            Err(Error::InvalidProfile {
                id: self.id.clone(),
                reason,
            })
        };
        if self.id.is_empty() || self.id.contains([',', ' ', '\t']) {
            return fail("id must be non-empty without commas or whitespace".into());
        }
        if self.code_rate != CodeRate::UNCODED && self.code_rate != CodeRate::HALF {
            return fail(format!("unsupported code rate {}", self.code_rate));
        }
        if self.bits_per_frame == 0 {
            return fail("bits_per_frame must be positive".into());
        }
        let num = self.code_rate.numerator as usize;
        if self.bits_per_frame % num != 0
            || self.coded_bits_per_frame() % self.modulation.bits_per_symbol() != 0
        {
            return fail(format!(
                "{} bits at rate {} do not fill whole {}-ary symbols",
                self.bits_per_frame,
                self.code_rate,
                self.modulation.order()
            ));
        }
        if !(self.value_x >= 0.0) {
            return fail(format!("value_x {} must be >= 0", self.value_x));
        }
        if !(0.0..=1.0).contains(&self.value_y) {
            return fail(format!("value_y {} must lie in [0, 1]", self.value_y));
        }
        if !self.min_snr_db.is_finite() {
            return fail("min_snr_db must be finite".into());
        }
        if self.frames_per_window == 0 {
            return fail("frames_per_window must be >= 1".into());
        }
        if !(self.window_duration_s > 0.0) {
            return fail("window_duration_s must be positive".into());
        }
        Ok(())
    }
}

/// Profile registry (the software stand-in for the PHY program memory).
#[derive(Debug, Clone, Default)]
pub struct ProfileSet {
    profiles: BTreeMap<String, PhyProfile>,
}

impl ProfileSet {
    /// The two network profiles plus the BPSK test stub.
    pub fn bundled() -> Self {
        let mut set = ProfileSet::default();
        for p in [
            PhyProfile::wlan80211a(),
            PhyProfile::wimax(),
            PhyProfile::bpsk_stub(1000),
        ] {
            set.profiles.insert(p.id.clone(), p);
        }
        set
    }

    pub fn get(&self, id: &str) -> Result<&PhyProfile> {
        self.profiles
            .get(id)
            .ok_or_else(|| Error::UnknownProfile(id.to_string()))
    }

    pub fn insert(&mut self, profile: PhyProfile) -> Result<()> {
        profile.validate()?;
        self.profiles.insert(profile.id.clone(), profile);
        Ok(())
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.profiles.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = &PhyProfile> {
        self.profiles.values()
    }

    /// Merges profiles from a key/value config file into this set.
    ///
    /// ```text
    /// [wlan80211a]
    /// modulation = 16
    /// code_rate = 1/2
    /// bits_per_frame = 2100
    /// value_x = 0.00205
    /// ```
    ///
    /// A section whose id matches an existing profile starts from that
    /// profile, so only overridden keys need to be given. New ids must supply
    /// `modulation`, `code_rate` and `bits_per_frame`.
    pub fn merge_config(&mut self, text: &str) -> Result<()> {
        for profile in parse_config(text, self)? {
            self.profiles.insert(profile.id.clone(), profile);
        }
        Ok(())
    }

    pub fn load_config(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)?;
        self.merge_config(&text)
    }
}

struct Section {
    line: usize,
    base: PhyProfile,
    keys: BTreeMap<String, (usize, String)>,
}

fn parse_config(text: &str, existing: &ProfileSet) -> Result<Vec<PhyProfile>> {
    let mut sections: Vec<Section> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let id = rest
                .strip_suffix(']')
                .ok_or_else(|| Error::Config {
                    line,
                    reason: "unterminated section header".into(),
                })?
                .trim();
            let base = existing.profiles.get(id).cloned().unwrap_or(PhyProfile {
                id: id.to_string(),
                modulation: Modulation::Bpsk,
                code_rate: CodeRate::UNCODED,
                bits_per_frame: 0,
                value_x: 0.0,
                value_y: 1.0,
                min_snr_db: 0.0,
                lookup_table_id: None,
                frames_per_window: DEFAULT_FRAMES_PER_WINDOW,
                window_duration_s: DEFAULT_WINDOW_DURATION_S,
            });
            sections.push(Section {
                line,
                base,
                keys: BTreeMap::new(),
            });
            continue;
        }
        let section = sections.last_mut().ok_or_else(|| Error::Config {
            line,
            reason: "key outside of a [profile] section".into(),
        })?;
        let (key, value) = content.split_once('=').ok_or_else(|| Error::Config {
            line,
            reason: format!("expected `key = value`, got `{content}`"),
        })?;
        let key = key.trim().to_string();
        if section.keys.contains_key(&key) {
            return Err(Error::Config {
                line,
                reason: format!("duplicate key `{key}`"),
            });
        }
        section.keys.insert(key, (line, value.trim().to_string()));
    }

    let mut out = Vec::with_capacity(sections.len());
    for section in sections {
        let fresh = !existing.profiles.contains_key(&section.base.id);
        if fresh {
            for required in ["modulation", "code_rate", "bits_per_frame"] {
                if !section.keys.contains_key(required) {
                    return Err(Error::Config {
                        line: section.line,
                        reason: format!("new profile `{}` needs `{required}`", section.base.id),
                    });
                }
            }
        }
        let mut p = section.base;
        for (key, (line, value)) in section.keys {
            let bad = |what: &str| Error::Config {
                line,
                reason: format!("bad {what} `{value}`"),
            };
            match key.as_str() {
                "modulation" => {
                    p.modulation = value
                        .parse()
                        .ok()
                        .and_then(Modulation::from_order)
                        .ok_or_else(|| bad("modulation order"))?
                }
                "code_rate" => p.code_rate = value.parse().map_err(|_| bad("code rate"))?,
                "bits_per_frame" => p.bits_per_frame = value.parse().map_err(|_| bad("integer"))?,
                "value_x" => p.value_x = value.parse().map_err(|_| bad("number"))?,
                "value_y" => p.value_y = value.parse().map_err(|_| bad("number"))?,
                "min_snr_db" => p.min_snr_db = value.parse().map_err(|_| bad("number"))?,
                "lookup_table" | "lookup_table_id" => {
                    p.lookup_table_id = (!value.is_empty()).then(|| value.clone())
                }
                "frames_per_window" => {
                    p.frames_per_window = value.parse().map_err(|_| bad("integer"))?
                }
                "window_duration_s" => {
                    p.window_duration_s = value.parse().map_err(|_| bad("number"))?
                }
                other => {
                    return Err(Error::Config {
                        line,
                        reason: format!("unknown key `{other}`"),
                    })
                }
            }
        }
        p.validate().map_err(|e| Error::Config {
            line: section.line,
            reason: e.to_string(),
        })?;
        out.push(p);
    }
    Ok(out)
}
