use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};

/// Names of the profiles bundled with the crate.
pub const BUILTIN_PROFILES: [&str; 6] = ["AWGN", "EPA", "EVA", "ETU", "TDLC300", "TDLD30"];

fn builtin_source(name: &str) -> Option<&'static str> {
    Some(match name {
        "AWGN" => include_str!("../../profiles/AWGN.toml"),
        "EPA" => include_str!("../../profiles/EPA.toml"),
        "EVA" => include_str!("../../profiles/EVA.toml"),
        "ETU" => include_str!("../../profiles/ETU.toml"),
        "TDLC300" => include_str!("../../profiles/TDLC300.toml"),
        "TDLD30" => include_str!("../../profiles/TDLD30.toml"),
        _ => return None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Fading {
    /// Fixed gain `sqrt(power)`.
    None,
    Rayleigh,
    /// Line-of-sight tap with Rician K-factor in dB.
    Rician { k_db: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tap {
    pub delay_us: f64,
    pub power_db: f64,
    pub fading: Fading,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelProfile {
    name: String,
    taps: Vec<Tap>,
    doppler_hz: f64,
    /// Linear tap powers summing to one.
    powers: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfileFile {
    name: String,
    doppler_hz: f64,
    tap: Vec<TapRecord>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TapRecord {
    delay_us: f64,
    power_db: f64,
    fading: String,
    k_db: Option<f64>,
}

impl ChannelProfile {
    pub fn new(name: impl Into<String>, taps: Vec<Tap>, doppler_hz: f64) -> Result<Self> {
        let name = name.into();
        if taps.is_empty() {
            return Err(Error::config(format!("profile {name}: no taps")));
        }
        if !(doppler_hz >= 0.0 && doppler_hz.is_finite()) {
            return Err(Error::config(format!("profile {name}: bad doppler {doppler_hz}")));
        }
        for (i, t) in taps.iter().enumerate() {
            if !(t.delay_us >= 0.0 && t.delay_us.is_finite() && t.power_db.is_finite()) {
                return Err(Error::config(format!("profile {name}: tap {i} out of range")));
            }
            if i > 0 && t.delay_us <= taps[i - 1].delay_us {
                return Err(Error::config(format!(
                    "profile {name}: tap delays must be strictly increasing"
                )));
            }
            if let Fading::Rician { k_db } = t.fading {
                if !k_db.is_finite() {
                    return Err(Error::config(format!("profile {name}: bad K-factor")));
                }
            }
        }
        let lin: Vec<f64> = taps.iter().map(|t| 10f64.powf(t.power_db / 10.0)).collect();
        let total: f64 = lin.iter().sum();
        let powers = lin.into_iter().map(|p| p / total).collect();
        let profile = Self {
            name,
            taps,
            doppler_hz,
            powers,
        };
        if profile.name == "AWGN" && !profile.is_flat_static() {
            return Err(Error::config(
                "profile AWGN must be a single static tap at delay 0, power 0 dB",
            ));
        }
        Ok(profile)
    }

    pub fn awgn() -> Self {
        Self::builtin("AWGN").expect("bundled AWGN profile")
    }

    /// One of [`BUILTIN_PROFILES`].
    pub fn builtin(name: &str) -> Result<Self> {
        let src = builtin_source(name)
            .ok_or_else(|| Error::config(format!("unknown channel profile {name:?}")))?;
        Self::from_toml(src)
    }

    pub fn from_toml(src: &str) -> Result<Self> {
        let file: ProfileFile = toml::from_str(src)?;
        let taps = file
            .tap
            .into_iter()
            .map(|r| {
                let fading = match (r.fading.as_str(), r.k_db) {
                    ("none", None) => Fading::None,
                    ("rayleigh", None) => Fading::Rayleigh,
                    ("rician", Some(k_db)) => Fading::Rician { k_db },
                    (other, k) => {
                        return Err(Error::config(format!(
                            "tap fading {other:?} with k_db {k:?} is not valid"
                        )))
                    }
                };
                Ok(Tap {
                    delay_us: r.delay_us,
                    power_db: r.power_db,
                    fading,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(file.name, taps, file.doppler_hz)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&fs::read_to_string(path)?)
    }

    /// Serialize in the documented profile-file layout.
    pub fn to_toml(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "name = {:?}", self.name);
        let _ = writeln!(s, "doppler_hz = {:?}", self.doppler_hz);
        for t in &self.taps {
            let _ = writeln!(s, "\n[[tap]]");
            let _ = writeln!(s, "delay_us = {:?}", t.delay_us);
            let _ = writeln!(s, "power_db = {:?}", t.power_db);
            match t.fading {
                Fading::None => {
                    let _ = writeln!(s, "fading = \"none\"");
                }
                Fading::Rayleigh => {
                    let _ = writeln!(s, "fading = \"rayleigh\"");
                }
                Fading::Rician { k_db } => {
                    let _ = writeln!(s, "fading = \"rician\"\nk_db = {k_db:?}");
                }
            }
        }
        s
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn taps(&self) -> &[Tap] {
        &self.taps
    }

    pub fn doppler_hz(&self) -> f64 {
        self.doppler_hz
    }

    /// Normalized linear tap powers.
    pub fn powers(&self) -> &[f64] {
        &self.powers
    }

    pub fn max_delay_us(&self) -> f64 {
        self.taps.last().map_or(0.0, |t| t.delay_us)
    }

    fn is_flat_static(&self) -> bool {
        self.taps.len() == 1
            && self.taps[0].delay_us == 0.0
            && self.taps[0].power_db == 0.0
            && self.taps[0].fading == Fading::None
    }
}

/// Profile lookup: files in an optional directory shadow the bundled ones.
#[derive(Debug, Clone, Default)]
pub struct ProfileLibrary {
    dir: Option<PathBuf>,
}

impl ProfileLibrary {
    pub fn new(dir: Option<PathBuf>) -> Self {
        Self { dir }
    }

    pub fn get(&self, name: &str) -> Result<ChannelProfile> {
        if let Some(dir) = &self.dir {
            let path = dir.join(format!("{name}.toml"));
            if path.exists() {
                let p = ChannelProfile::load(&path)?;
                if p.name() != name {
                    return Err(Error::config(format!(
                        "{} declares name {:?}",
                        path.display(),
                        p.name()
                    )));
                }
                return Ok(p);
            }
        }
        ChannelProfile::builtin(name)
    }
}
