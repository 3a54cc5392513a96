//! Scenario scripts: one timed directive per line.
//!
//! ```text
//! # time  directive        args
//! 0       candidates       wimax:available:9:secondary:1 wlan80211a:unavailable:12:primary:2
//! 0       set_snr          9
//! 20      set_snr          4 wlan80211a
//! 30      jammer           on 5.0
//! 40      jammer           off
//! 60      end_of_balance
//! 70      primary_reclaim  wimax
//! ```
//!
//! Candidate entries are `profile:available|unavailable:snr_db:primary|secondary:rank`.
//! `set_snr` and `primary_reclaim` default to the active profile.

use std::collections::BTreeSet;
use std::str::FromStr;

use crate::channel::JammerSpec;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UserClass {
    Primary,
    Secondary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkCandidate {
    pub profile_id: String,
    pub available: bool,
    /// Channel quality the simulation applies once this network is selected.
    pub snr_db: f64,
    pub user_class: UserClass,
    pub rank: u32,
}

impl FromStr for NetworkCandidate {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let [profile, avail, snr, class, rank] = parts[..] else {
            return Err(format!(
                "candidate `{s}` is not profile:availability:snr_db:class:rank"
            ));
        };
        if profile.is_empty() || profile.contains(',') {
            return Err(format!("bad candidate profile `{profile}`"));
        }
        let available = match avail {
            "available" | "up" | "1" => true,
            "unavailable" | "down" | "0" => false,
            other => return Err(format!("bad availability `{other}`")),
        };
        let snr_db: f64 = snr
            .parse()
            .ok()
            .filter(|v: &f64| !v.is_nan())
            .ok_or_else(|| format!("bad candidate snr `{snr}`"))?;
        let user_class = match class {
            "primary" => UserClass::Primary,
            "secondary" => UserClass::Secondary,
            other => return Err(format!("bad user class `{other}`")),
        };
        let rank = rank.parse().map_err(|_| format!("bad rank `{rank}`"))?;
        Ok(NetworkCandidate {
            profile_id: profile.to_string(),
            available,
            snr_db,
            user_class,
            rank,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Directive {
    SetSnr {
        snr_db: f64,
        profile: Option<String>,
    },
    Jammer(JammerSpec),
    EndOfBalance,
    PrimaryReclaim {
        profile: Option<String>,
    },
    Candidates(Vec<NetworkCandidate>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimedDirective {
    pub time_s: f64,
    pub directive: Directive,
    pub line: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScenarioScript {
    pub directives: Vec<TimedDirective>,
}

fn parse_directive(name: &str, args: &[&str]) -> std::result::Result<Directive, String> {
    let optional_profile = |args: &[&str]| match args {
        [] => Ok(None),
        [p] => Ok(Some(p.to_string())),
        _ => Err(format!("`{name}` takes at most one profile argument")),
    };
    match name {
        "set_snr" => {
            let (value, rest) = args
                .split_first()
                .ok_or_else(|| "set_snr needs a value in dB".to_string())?;
            let snr_db: f64 = value
                .parse()
                .ok()
                .filter(|v: &f64| !v.is_nan())
                .ok_or_else(|| format!("bad snr `{value}`"))?;
            Ok(Directive::SetSnr {
                snr_db,
                profile: optional_profile(rest)?,
            })
        }
        "jammer" => match args {
            ["on", amplitude] => {
                let amplitude: f64 = amplitude
                    .parse()
                    .ok()
                    .filter(|a: &f64| *a >= 0.0 && a.is_finite())
                    .ok_or_else(|| format!("bad jammer amplitude `{amplitude}`"))?;
                Ok(Directive::Jammer(JammerSpec::on(amplitude)))
            }
            ["off"] => Ok(Directive::Jammer(JammerSpec::OFF)),
            _ => Err("expected `jammer on <amplitude>` or `jammer off`".into()),
        },
        "end_of_balance" if args.is_empty() => Ok(Directive::EndOfBalance),
        "end_of_balance" => Err("end_of_balance takes no arguments".into()),
        "primary_reclaim" => Ok(Directive::PrimaryReclaim {
            profile: optional_profile(args)?,
        }),
        "candidates" => {
            let list = args
                .iter()
                .map(|a| a.parse::<NetworkCandidate>())
                .collect::<std::result::Result<Vec<_>, _>>()?;
            let mut ranks = BTreeSet::new();
            for c in &list {
                if !ranks.insert(c.rank) {
                    return Err(format!("duplicate candidate rank {}", c.rank));
                }
            }
            Ok(Directive::Candidates(list))
        }
        other => Err(format!("unknown directive `{other}`")),
    }
}

impl ScenarioScript {
    pub fn parse(text: &str) -> Result<Self> {
        let mut directives: Vec<TimedDirective> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let tokens: Vec<&str> = content.split_whitespace().collect();
            let err = |reason: String| Error::Scenario { line, reason };
            let [time, name, args @ ..] = &tokens[..] else {
                return Err(err("expected `<time_s> <directive> [args...]`".into()));
            };
            let time_s: f64 = time
                .parse()
                .ok()
                .filter(|t: &f64| t.is_finite() && *t >= 0.0)
                .ok_or_else(|| err(format!("bad time `{time}`")))?;
            if let Some(prev) = directives.last() {
                if time_s < prev.time_s {
                    return Err(err(format!(
                        "time {time_s} precedes previous directive at {}",
                        prev.time_s
                    )));
                }
            }
            let directive = parse_directive(name, args).map_err(err)?;
            directives.push(TimedDirective {
                time_s,
                directive,
                line,
            });
        }
        Ok(ScenarioScript { directives })
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_every_directive() {
        let s = ScenarioScript::parse(
            "# demo\n0 set_snr 9\n0 candidates wimax:available:8.5:secondary:1 wlan80211a:down:12:primary:2\n\n30 jammer on 5.0\n31 jammer off\n40 set_snr 3 wimax\n60 end_of_balance\n61 primary_reclaim\n62 candidates\n",
        )
        .unwrap();
        assert_eq!(s.directives.len(), 8);
        assert_eq!(s.directives[0].line, 2);
        assert_eq!(
            s.directives[2].directive,
            Directive::Jammer(JammerSpec::on(5.0))
        );
        match &s.directives[1].directive {
            Directive::Candidates(c) => {
                assert_eq!(c.len(), 2);
                assert!(c[0].available && !c[1].available);
                assert_eq!(c[0].user_class, UserClass::Secondary);
                assert_eq!(c[0].snr_db, 8.5);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(s.directives[7].directive, Directive::Candidates(vec![]));
    }

    #[test]
    fn rejects_with_line_numbers() {
        for (text, line) in [
            ("0 set_snr 9\n5 warp 3\n", 2),
            ("0 set_snr\n", 1),
            ("3 set_snr 9\n2 set_snr 8\n", 2),
            ("0 jammer on\n", 1),
            (
                "0 candidates wimax:available:9:secondary:1 wlan:available:9:primary:1\n",
                1,
            ),
            ("x set_snr 1\n", 1),
            ("0 end_of_balance now\n", 1),
        ] {
            match ScenarioScript::parse(text) {
                Err(Error::Scenario { line: l, .. }) => assert_eq!(l, line, "{text}"),
                other => panic!("{text}: unexpected {other:?}"),
            }
        }
    }
}
