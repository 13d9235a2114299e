//! Coincidence probabilities, minima, fringes and synthetic count data.
//!
//! Count records are the interchange format between the simulator, the
//! tomography reconstruction and the Hardy analysis. On disk they are CSV
//! with header `arm1,arm2,count,duration_s`, where each arm is a setting
//! literal: a state letter (`H`, `V`, `D`, `A`, `L`, `R`), `lin:<deg>` or
//! `wp:<qwp_deg>/<hwp_deg>`.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::polarization::{analyzer_projection, linear_state, DensityMatrix, JonesVector, StateName};

/// How one arm is analyzed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AnalyzerSetting {
    Named(StateName),
    /// Linear polarizer at the given angle (degrees).
    Linear(f64),
    /// Quarter- and half-wave plate angles (degrees) ahead of a PBS.
    Waveplates {
        qwp_deg: f64,
        hwp_deg: f64,
    },
}

pub type SettingPair = (AnalyzerSetting, AnalyzerSetting);

impl AnalyzerSetting {
    pub fn jones(&self) -> JonesVector {
        match *self {
            AnalyzerSetting::Named(n) => n.state(),
            AnalyzerSetting::Linear(t) => linear_state(t),
            AnalyzerSetting::Waveplates { qwp_deg, hwp_deg } => analyzer_projection(qwp_deg, hwp_deg),
        }
    }

    fn check(&self) -> Result<()> {
        let finite = match *self {
            AnalyzerSetting::Named(_) => true,
            AnalyzerSetting::Linear(t) => t.is_finite(),
            AnalyzerSetting::Waveplates { qwp_deg, hwp_deg } => qwp_deg.is_finite() && hwp_deg.is_finite(),
        };
        if finite {
            Ok(())
        } else {
            Err(invalid(format!("analyzer setting {self} has a non-finite angle")))
        }
    }
}

impl fmt::Display for AnalyzerSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AnalyzerSetting::Named(n) => write!(f, "{n}"),
            AnalyzerSetting::Linear(t) => write!(f, "lin:{t}"),
            AnalyzerSetting::Waveplates { qwp_deg, hwp_deg } => write!(f, "wp:{qwp_deg}/{hwp_deg}"),
        }
    }
}

fn parse_angle(s: &str, literal: &str) -> Result<f64> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("bad angle in setting literal {literal:?}")))?;
    if !v.is_finite() {
        return Err(Error::Parse(format!("non-finite angle in setting literal {literal:?}")));
    }
    Ok(v)
}

impl FromStr for AnalyzerSetting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(rest) = s.strip_prefix("lin:") {
            return Ok(AnalyzerSetting::Linear(parse_angle(rest, s)?));
        }
        if let Some(rest) = s.strip_prefix("wp:") {
            let (q, h) = rest
                .split_once('/')
                .ok_or_else(|| Error::Parse(format!("setting literal {s:?} must be wp:<qwp>/<hwp>")))?;
            return Ok(AnalyzerSetting::Waveplates {
                qwp_deg: parse_angle(q, s)?,
                hwp_deg: parse_angle(h, s)?,
            });
        }
        s.parse::<StateName>()
            .map(AnalyzerSetting::Named)
            .map_err(|_| Error::Parse(format!("unknown analyzer setting literal {s:?}")))
    }
}

impl Serialize for AnalyzerSetting {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for AnalyzerSetting {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Detector and acquisition parameters for the count simulator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    /// Singles rate in arm 1, counts per second.
    #[serde(default)]
    pub singles_rate_1: f64,
    #[serde(default)]
    pub singles_rate_2: f64,
    /// Coincidence window, seconds.
    #[serde(default = "default_window")]
    pub coincidence_window: f64,
    /// Acquisition time per setting, seconds.
    #[serde(default = "default_acquisition")]
    pub acquisition_time: f64,
    #[serde(default)]
    pub rng_seed: u64,
    /// Subtract the expected accidental count from each draw (clamped at 0).
    #[serde(default)]
    pub subtract_accidentals: bool,
}

fn default_window() -> f64 {
    5.27e-9
}

fn default_acquisition() -> f64 {
    100.0
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            singles_rate_1: 0.0,
            singles_rate_2: 0.0,
            coincidence_window: default_window(),
            acquisition_time: default_acquisition(),
            rng_seed: 0,
            subtract_accidentals: false,
        }
    }
}

impl NoiseConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("singles_rate_1", self.singles_rate_1),
            ("singles_rate_2", self.singles_rate_2),
            ("coincidence_window", self.coincidence_window),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v >= 0.0) {
                return Err(invalid(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        if !(self.acquisition_time.is_finite() && self.acquisition_time > 0.0) {
            return Err(invalid(format!(
                "acquisition_time must be > 0, got {}",
                self.acquisition_time
            )));
        }
        Ok(())
    }

    /// Expected accidental coincidences per acquisition.
    pub fn accidental_mean(&self) -> f64 {
        accidental_rate(self.singles_rate_1, self.singles_rate_2, self.coincidence_window) * self.acquisition_time
    }
}

/// One acquisition: a pair of analyzer settings and the coincidences seen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountRecord {
    #[serde(rename = "arm1")]
    pub setting_1: AnalyzerSetting,
    #[serde(rename = "arm2")]
    pub setting_2: AnalyzerSetting,
    #[serde(rename = "count")]
    pub coincidences: u64,
    #[serde(rename = "duration_s")]
    pub duration: f64,
}

impl CountRecord {
    pub fn new(pair: SettingPair, coincidences: u64, duration: f64) -> Result<Self> {
        if !(duration.is_finite() && duration > 0.0) {
            return Err(invalid(format!("record duration must be > 0, got {duration}")));
        }
        Ok(Self {
            setting_1: pair.0,
            setting_2: pair.1,
            coincidences,
            duration,
        })
    }

    pub fn pair(&self) -> SettingPair {
        (self.setting_1, self.setting_2)
    }
}

/// `Tr(ρ · Π₁ ⊗ Π₂)` for the rank-1 projectors of the two settings.
pub fn coincidence_probability(rho: &DensityMatrix, s1: &AnalyzerSetting, s2: &AnalyzerSetting) -> Result<f64> {
    s1.check()?;
    s2.check()?;
    Ok(rho.expectation(&s1.jones().tensor(&s2.jones())))
}

/// Closed-form coincidence probability for linear analyzers and the pure
/// state `(|HH⟩ + ε e^{iφ}|VV⟩)/√(1+ε²)`.
pub fn linear_pair_probability(epsilon: f64, phi_deg: f64, theta1_deg: f64, theta2_deg: f64) -> f64 {
    let (s1, c1) = theta1_deg.to_radians().sin_cos();
    let (s2, c2) = theta2_deg.to_radians().sin_cos();
    let phi = phi_deg.to_radians();
    let re = c1 * c2 + epsilon * phi.cos() * s1 * s2;
    let im = epsilon * phi.sin() * s1 * s2;
    (re * re + im * im) / (1.0 + epsilon * epsilon)
}

/// Arm-2 linear angle at which coincidences vanish for `(|HH⟩ + ε|VV⟩)`
/// with arm 1 at `theta1_deg`: `tan θ₂ = −cot θ₁ / ε`.
///
/// Returns the principal branch (−90°, 90°]; the locus repeats every 180°.
pub fn minima_angle(epsilon: f64, theta1_deg: f64) -> Result<f64> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(invalid(format!("epsilon must be > 0, got {epsilon}")));
    }
    if !theta1_deg.is_finite() {
        return Err(invalid("theta1 must be finite"));
    }
    let (s, c) = theta1_deg.to_radians().sin_cos();
    if s.abs() < 1e-15 {
        return Ok(90.0);
    }
    let t = (-c / (epsilon * s)).atan().to_degrees();
    Ok(if t <= -90.0 { t + 180.0 } else { t })
}

/// Sweeps arm 2 linearly over [0°, 180°) with arm 1 fixed.
pub fn fringe(rho: &DensityMatrix, fixed: &AnalyzerSetting, n_points: usize) -> Result<Vec<(f64, f64)>> {
    if n_points < 4 {
        return Err(invalid(format!("fringe needs at least 4 points, got {n_points}")));
    }
    (0..n_points)
        .map(|k| {
            let theta = 180.0 * k as f64 / n_points as f64;
            coincidence_probability(rho, fixed, &AnalyzerSetting::Linear(theta)).map(|p| (theta, p))
        })
        .collect()
}

/// Fringe maxima at or below this are treated as identically zero.
pub const ZERO_FRINGE: f64 = 1e-15;

/// `(max − min)/(max + min)` of a fringe.
pub fn visibility(samples: &[(f64, f64)]) -> Result<f64> {
    if samples.len() < 4 {
        return Err(invalid(format!(
            "visibility needs at least 4 samples, got {}",
            samples.len()
        )));
    }
    let (lo, hi) = samples
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(_, p)| {
            (lo.min(p), hi.max(p))
        });
    // roundoff-level fringes (e.g. cos 90° ≈ 6e-17) count as all-zero
    if !(hi > ZERO_FRINGE) {
        return Err(Error::UndefinedVisibility);
    }
    Ok(((hi - lo) / (hi + lo)).clamp(0.0, 1.0))
}

/// Accidental coincidence rate `singles₁ · singles₂ · window`.
pub fn accidental_rate(singles_1: f64, singles_2: f64, window_s: f64) -> f64 {
    singles_1 * singles_2 * window_s
}

/// Draws Poisson coincidence counts for each setting pair.
///
/// The mean for pair k is `pairs_per_setting · P_k + accidentals`, where
/// `P_k` comes from [`coincidence_probability`] (clipped at 0 for
/// unphysical inputs). Output is a pure function of the inputs and
/// `noise.rng_seed`.
pub fn simulate_counts(
    rho: &DensityMatrix,
    settings: &[SettingPair],
    pairs_per_setting: f64,
    noise: &NoiseConfig,
) -> Result<Vec<CountRecord>> {
    if !(pairs_per_setting.is_finite() && pairs_per_setting >= 0.0) {
        return Err(invalid(format!(
            "pairs_per_setting must be finite and >= 0, got {pairs_per_setting}"
        )));
    }
    noise.validate()?;
    let accidental = noise.accidental_mean();
    let mut rng = ChaCha8Rng::seed_from_u64(noise.rng_seed);
    settings
        .iter()
        .map(|&(s1, s2)| {
            let p = coincidence_probability(rho, &s1, &s2)?.max(0.0);
            let mean = pairs_per_setting * p + accidental;
            let mut n = draw_poisson(&mut rng, mean)?;
            if noise.subtract_accidentals {
                n = n.saturating_sub(accidental.round() as u64);
            }
            CountRecord::new((s1, s2), n, noise.acquisition_time)
        })
        .collect()
}

fn draw_poisson(rng: &mut ChaCha8Rng, mean: f64) -> Result<u64> {
    if mean <= 0.0 {
        return Ok(0);
    }
    let dist = Poisson::new(mean).map_err(|e| Error::Numerical(format!("Poisson mean {mean}: {e}")))?;
    Ok(dist.sample(rng) as u64)
}

pub fn write_records_csv<W: Write>(w: W, records: &[CountRecord]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in records {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_records_csv<R: Read>(r: R) -> Result<Vec<CountRecord>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let headers = rdr.headers()?.clone();
    if headers.iter().ne(["arm1", "arm2", "count", "duration_s"]) {
        return Err(Error::Parse(format!(
            "expected header arm1,arm2,count,duration_s, got {}",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut out = Vec::new();
    for (i, row) in rdr.deserialize::<CountRecord>().enumerate() {
        let rec = row.map_err(|e| Error::Parse(format!("record {}: {e}", i + 1)))?;
        out.push(CountRecord::new(rec.pair(), rec.coincidences, rec.duration)?);
    }
    Ok(out)
}

pub fn records_to_csv_string(records: &[CountRecord]) -> Result<String> {
    let mut buf = Vec::new();
    write_records_csv(&mut buf, records)?;
    String::from_utf8(buf).map_err(|e| Error::Parse(e.to_string()))
}
