use std::fmt;
use std::io::{self, Write};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    JammingDetected,
    EstimateStored,
    QualityBreach,
    ScanStarted,
    HandoverInitiated,
    HandoverCompleted,
    EndOfBalance,
    NoNetworkAvailable,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::JammingDetected => "JammingDetected",
            EventKind::EstimateStored => "EstimateStored",
            EventKind::QualityBreach => "QualityBreach",
            EventKind::ScanStarted => "ScanStarted",
            EventKind::HandoverInitiated => "HandoverInitiated",
            EventKind::HandoverCompleted => "HandoverCompleted",
            EventKind::EndOfBalance => "EndOfBalance",
            EventKind::NoNetworkAvailable => "NoNetworkAvailable",
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Scalar {
    Num(f64),
    Int(u64),
    Text(String),
    Flag(bool),
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Num(v) => write!(f, "{v}"),
            Scalar::Int(v) => write!(f, "{v}"),
            Scalar::Text(s) => f.write_str(s),
            Scalar::Flag(b) => write!(f, "{b}"),
        }
    }
}

impl From<f64> for Scalar {
    fn from(v: f64) -> Self {
        Scalar::Num(v)
    }
}

impl From<usize> for Scalar {
    fn from(v: usize) -> Self {
        Scalar::Int(v as u64)
    }
}

impl From<u32> for Scalar {
    fn from(v: u32) -> Self {
        Scalar::Int(u64::from(v))
    }
}

impl From<&str> for Scalar {
    fn from(v: &str) -> Self {
        Scalar::Text(v.to_string())
    }
}

impl From<String> for Scalar {
    fn from(v: String) -> Self {
        Scalar::Text(v)
    }
}

impl From<bool> for Scalar {
    fn from(v: bool) -> Self {
        Scalar::Flag(v)
    }
}

/// One controller notification. Detail keys keep insertion order so the
/// rendered log is deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct ControllerEvent {
    pub kind: EventKind,
    pub timestamp: f64,
    pub detail: Vec<(String, Scalar)>,
}

impl ControllerEvent {
    pub fn new(kind: EventKind, timestamp: f64) -> Self {
        ControllerEvent {
            kind,
            timestamp,
            detail: Vec::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl Into<Scalar>) -> Self {
        self.detail.push((key.to_string(), value.into()));
        self
    }

    pub fn get(&self, key: &str) -> Option<&Scalar> {
        self.detail.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }

    pub fn num(&self, key: &str) -> Option<f64> {
        match self.get(key)? {
            Scalar::Num(v) => Some(*v),
            Scalar::Int(v) => Some(*v as f64),
            _ => None,
        }
    }

    pub fn text(&self, key: &str) -> Option<&str> {
        match self.get(key)? {
            Scalar::Text(s) => Some(s),
            _ => None,
        }
    }
}

/// `timestamp,kind,key=value,...`
impl fmt::Display for ControllerEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.timestamp, self.kind)?;
        for (k, v) in &self.detail {
            write!(f, ",{k}={v}")?;
        }
        Ok(())
    }
}

pub fn write_event_log<W: Write>(events: &[ControllerEvent], mut out: W) -> io::Result<()> {
    for e in events {
        writeln!(out, "{e}")?;
    }
    Ok(())
}
