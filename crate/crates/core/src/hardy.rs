//! Hardy's inequality-free nonlocality test for `(|HH⟩ + ε|VV⟩)/√(1+ε²)`.
//!
//! For 0 < ε < 1 the analyzer angles
//!
//! * `tan α = √(1/ε)`, `α⊥ = α + 90°`
//! * `tan β = −(1/ε)^{3/2}`
//!
//! make `P(α, −α) = P(β, −α⊥) = P(α⊥, −β) = 0` exactly, while
//! `P(β, −β)` (the Hardy fraction) is nonzero. Any local-realistic model
//! forces the Hardy fraction to zero under those three conditions, so the
//! tested inequality is `P(β,−β) ≤ P(α,−α) + P(β,−α⊥) + P(α⊥,−β)`.
//!
//! Sign convention: [`HardyConfig::beta_deg`] stores |β| ∈ (45°, 90°); the
//! arm-1 analysis angle actually used is β = −|β|.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::measurement::{
    coincidence_probability, simulate_counts, AnalyzerSetting, CountRecord, NoiseConfig, SettingPair,
};
use crate::optimize::golden_section_max;
use crate::polarization::DensityMatrix;
use crate::source::state_from_epsilon;

const ZERO_TOL: f64 = 1e-10;
const ANGLE_MATCH_TOL: f64 = 1e-6;
/// Grid resolution of [`hardy_band`], degrees.
pub const BAND_STEP_DEG: f64 = 0.05;
/// Analyzer uncertainty used for the curve's band columns, degrees.
pub const CURVE_BAND_DEG: f64 = 0.5;

/// Hardy analysis angles for one degree of entanglement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HardyConfig {
    pub epsilon: f64,
    /// α in degrees.
    pub alpha_deg: f64,
    /// |β| in degrees; the analysis angle is −|β|.
    pub beta_deg: f64,
}

impl HardyConfig {
    /// Angles given directly (e.g. as set on an apparatus).
    pub fn from_angles(epsilon: f64, alpha_deg: f64, beta_deg: f64) -> Self {
        Self {
            epsilon,
            alpha_deg,
            beta_deg: beta_deg.abs(),
        }
    }

    pub fn beta_signed(&self) -> f64 {
        -self.beta_deg
    }

    pub fn alpha_perp(&self) -> f64 {
        self.alpha_deg + 90.0
    }

    /// The four pairs in result order: (β,−β), (α,−α), (β,−α⊥), (α⊥,−β).
    pub fn settings(&self) -> [SettingPair; 4] {
        let lin = AnalyzerSetting::Linear;
        let (a, b, ap) = (self.alpha_deg, self.beta_signed(), self.alpha_perp());
        [
            (lin(b), lin(-b)),
            (lin(a), lin(-a)),
            (lin(b), lin(-ap)),
            (lin(ap), lin(-b)),
        ]
    }

    /// Probabilities of the four settings for the pure state (ε, φ = 0).
    pub fn probabilities(&self) -> Result<[f64; 4]> {
        let rho = DensityMatrix::from_pure(&state_from_epsilon(self.epsilon, 0.0)?);
        self.probabilities_for(&rho)
    }

    pub fn probabilities_for(&self, rho: &DensityMatrix) -> Result<[f64; 4]> {
        let mut out = [0.0; 4];
        for (o, (s1, s2)) in out.iter_mut().zip(self.settings()) {
            *o = coincidence_probability(rho, &s1, &s2)?;
        }
        Ok(out)
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::DegenerateEntanglement(epsilon));
    }
    Ok(())
}

/// Solves the three zero conditions for 0 < ε < 1.
pub fn hardy_angles(epsilon: f64) -> Result<HardyConfig> {
    check_epsilon(epsilon)?;
    let inv = 1.0 / epsilon;
    let alpha = inv.sqrt().atan().to_degrees();
    let beta = inv.powf(1.5).atan().to_degrees();
    let cfg = HardyConfig {
        epsilon,
        alpha_deg: alpha,
        beta_deg: beta,
    };
    let p = cfg.probabilities()?;
    let worst = p[1].max(p[2]).max(p[3]);
    if worst >= ZERO_TOL {
        return Err(Error::Numerical(format!(
            "Hardy zero conditions not met at epsilon = {epsilon}: max probability {worst:.3e}"
        )));
    }
    Ok(cfg)
}

/// `P(β, −β)` for the pure state (ε, φ = 0) at the Hardy angles.
pub fn hardy_fraction(epsilon: f64) -> Result<f64> {
    Ok(hardy_angles(epsilon)?.probabilities()?[0])
}

/// H↔V relabelling for ε > 1: `|HH⟩ + ε|VV⟩ ∝ |VV⟩ + (1/ε)|HH⟩`, so the
/// Hardy analysis runs at 1/ε with linear angles mapped θ ↦ 90° − θ.
pub fn mirror_epsilon(epsilon: f64) -> Result<f64> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(invalid(format!("epsilon must be finite and > 0, got {epsilon}")));
    }
    Ok(1.0 / epsilon)
}

/// Maximizes [`hardy_fraction`] over (0, 1). Returns `(ε*, fraction*)`.
pub fn find_optimal_epsilon(tolerance: f64) -> Result<(f64, f64)> {
    if !(tolerance > 0.0) {
        return Err(invalid(format!("tolerance must be > 0, got {tolerance}")));
    }
    let f = |e: f64| hardy_fraction(e).unwrap_or(f64::NEG_INFINITY);
    Ok(golden_section_max(f, 1e-9, 1.0 - 1e-9, tolerance))
}

fn offsets(u: f64) -> Vec<f64> {
    let n = (u / BAND_STEP_DEG + 1e-9).floor() as i64;
    let mut v: Vec<f64> = (-n..=n).map(|k| k as f64 * BAND_STEP_DEG).collect();
    if u > n as f64 * BAND_STEP_DEG + 1e-12 {
        v.push(-u);
        v.push(u);
    }
    v
}

/// Range of `P(β + d₁, −β + d₂)` over `d₁, d₂ ∈ [−u, u]` (grid scan).
pub fn hardy_band(epsilon: f64, uncertainty_deg: f64) -> Result<(f64, f64)> {
    if !(uncertainty_deg.is_finite() && uncertainty_deg >= 0.0) {
        return Err(invalid(format!(
            "analyzer uncertainty must be >= 0, got {uncertainty_deg}"
        )));
    }
    let cfg = hardy_angles(epsilon)?;
    let rho = DensityMatrix::from_pure(&state_from_epsilon(epsilon, 0.0)?);
    let b = cfg.beta_signed();
    let grid = offsets(uncertainty_deg);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &d1 in &grid {
        for &d2 in &grid {
            let p = coincidence_probability(
                &rho,
                &AnalyzerSetting::Linear(b + d1),
                &AnalyzerSetting::Linear(-b + d2),
            )?;
            lo = lo.min(p);
            hi = hi.max(p);
        }
    }
    Ok((lo, hi))
}

/// Outcome of the Hardy inequality test on count data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HardyResult {
    /// `[p_bb, p_aa, p_ba⊥, p_a⊥b]`.
    pub probabilities: [f64; 4],
    /// `p_bb − (p_aa + p_ba⊥ + p_a⊥b)`; positive means local realism is violated.
    pub violation: f64,
    /// `|violation|` in units of its standard deviation.
    pub sigma: f64,
    pub counts: [u64; 4],
    pub totals: [f64; 4],
}

impl HardyResult {
    pub fn violates_local_realism(&self) -> bool {
        self.violation > 0.0
    }

    /// Sigma carrying the sign of the violation.
    pub fn signed_sigma(&self) -> f64 {
        self.sigma.copysign(self.violation)
    }
}

fn angle_eq(a: f64, b: f64) -> bool {
    // polarizer angles are defined modulo 180°
    let d = (a - b).rem_euclid(180.0);
    d < ANGLE_MATCH_TOL || 180.0 - d < ANGLE_MATCH_TOL
}

fn linear_angle(s: &AnalyzerSetting, which: &str) -> Result<f64> {
    match s {
        AnalyzerSetting::Linear(t) => Ok(*t),
        other => Err(invalid(format!(
            "Hardy record {which} must be a linear setting, got {other}"
        ))),
    }
}

/// Checks the four records have the (β,−β), (α,−α), (β,−α⊥), (α⊥,−β)
/// structure, returning `(α, β)` as found in the records.
fn hardy_structure(records: &[CountRecord]) -> Result<(f64, f64)> {
    let ang = |k: usize| -> Result<(f64, f64)> {
        Ok((
            linear_angle(&records[k].setting_1, &format!("{} arm 1", k + 1))?,
            linear_angle(&records[k].setting_2, &format!("{} arm 2", k + 1))?,
        ))
    };
    let (b, mb) = ang(0)?;
    let (a, ma) = ang(1)?;
    let (b2, map) = ang(2)?;
    let (ap, mb2) = ang(3)?;
    let checks = [
        ("record 1 must be (beta, -beta)", angle_eq(mb, -b)),
        ("record 2 must be (alpha, -alpha)", angle_eq(ma, -a)),
        (
            "record 3 must be (beta, -alpha_perp)",
            angle_eq(b2, b) && angle_eq(map, -(a + 90.0)),
        ),
        (
            "record 4 must be (alpha_perp, -beta)",
            angle_eq(ap, a + 90.0) && angle_eq(mb2, -b),
        ),
    ];
    for (msg, ok) in checks {
        if !ok {
            return Err(invalid(format!("Hardy records have wrong analyzer labels: {msg}")));
        }
    }
    Ok((a, b))
}

/// Evaluates the Hardy inequality on four count records ordered
/// (β,−β), (α,−α), (β,−α⊥), (α⊥,−β), each normalized by its own total
/// pair flux. Counts are treated as independent Poisson variables.
pub fn hardy_test(records: &[CountRecord], totals: &[f64]) -> Result<HardyResult> {
    if records.len() != 4 || totals.len() != 4 {
        return Err(invalid(format!(
            "Hardy test needs 4 records and 4 totals, got {} and {}",
            records.len(),
            totals.len()
        )));
    }
    if let Some(t) = totals.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
        return Err(invalid(format!("Hardy totals must be positive, got {t}")));
    }
    hardy_structure(records)?;
    let mut probabilities = [0.0; 4];
    let mut counts = [0u64; 4];
    let mut var = 0.0;
    for k in 0..4 {
        let c = records[k].coincidences;
        counts[k] = c;
        probabilities[k] = c as f64 / totals[k];
        var += c as f64 / (totals[k] * totals[k]);
    }
    let violation = probabilities[0] - probabilities[1] - probabilities[2] - probabilities[3];
    let sigma = if var > 0.0 { violation.abs() / var.sqrt() } else { 0.0 };
    Ok(HardyResult {
        probabilities,
        violation,
        sigma,
        counts,
        totals: [totals[0], totals[1], totals[2], totals[3]],
    })
}

/// One row of the Hardy-fraction-versus-ε table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HardyCurveRow {
    pub epsilon: f64,
    pub predicted: f64,
    pub band_lo: f64,
    pub band_hi: f64,
    /// NaN when no pairs are simulated.
    pub sim_pbb: f64,
    /// Signed significance of the simulated run; NaN when no pairs are simulated.
    pub sim_sigma: f64,
}

/// Per-row seed, so rows are reproducible independently of evaluation order.
pub fn row_seed(base: u64, index: usize) -> u64 {
    // splitmix64 finalizer
    let mut z = base.wrapping_add((index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Predicted Hardy fraction, its ±0.5° band and one simulated experiment
/// for each ε.
pub fn hardy_curve(epsilons: &[f64], pairs_per_setting: f64, noise: &NoiseConfig) -> Result<Vec<HardyCurveRow>> {
    epsilons
        .iter()
        .enumerate()
        .map(|(i, &eps)| {
            let cfg = hardy_angles(eps)?;
            let predicted = cfg.probabilities()?[0];
            let (band_lo, band_hi) = hardy_band(eps, CURVE_BAND_DEG)?;
            let (sim_pbb, sim_sigma) = if pairs_per_setting > 0.0 {
                let rho = DensityMatrix::from_pure(&state_from_epsilon(eps, 0.0)?);
                let recs = simulate_counts(
                    &rho,
                    &cfg.settings(),
                    pairs_per_setting,
                    &noise.with_seed(row_seed(noise.rng_seed, i)),
                )?;
                let res = hardy_test(&recs, &[pairs_per_setting; 4])?;
                (res.probabilities[0], res.signed_sigma())
            } else {
                (f64::NAN, f64::NAN)
            };
            Ok(HardyCurveRow {
                epsilon: eps,
                predicted,
                band_lo,
                band_hi,
                sim_pbb,
                sim_sigma,
            })
        })
        .collect()
}

pub fn write_curve_csv<W: Write>(w: W, rows: &[HardyCurveRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

/// Hardy measurement data as stored on disk.
///
/// Count order is (β,−β), (α,−α), (β,−α⊥), (α⊥,−β). `totals` are the pair
/// fluxes that normalize each count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardyData {
    pub epsilon: f64,
    pub alpha_deg: f64,
    pub beta_deg: f64,
    pub counts: [u64; 4],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probabilities: Option<[f64; 4]>,
    pub totals: [f64; 4],
    #[serde(default)]
    pub notes: Vec<String>,
}

impl HardyData {
    pub fn config(&self) -> HardyConfig {
        HardyConfig::from_angles(self.epsilon, self.alpha_deg, self.beta_deg)
    }

    /// Count records at the stored angles. Acquisition times are not part
    /// of the data and do not enter the significance; records carry 1 s.
    pub fn records(&self) -> Result<Vec<CountRecord>> {
        self.config()
            .settings()
            .iter()
            .zip(self.counts)
            .map(|(&p, c)| CountRecord::new(p, c, 1.0))
            .collect()
    }

    pub fn test(&self) -> Result<HardyResult> {
        hardy_test(&self.records()?, &self.totals)
    }
}

/// `count / probability`, rounded to whole pairs.
pub fn derive_totals(counts: &[u64; 4], probabilities: &[f64; 4]) -> Result<[f64; 4]> {
    let mut out = [0.0; 4];
    for k in 0..4 {
        if !(probabilities[k] > 0.0) {
            return Err(invalid(format!("probability {k} must be > 0")));
        }
        out[k] = (counts[k] as f64 / probabilities[k]).round();
    }
    Ok(out)
}
