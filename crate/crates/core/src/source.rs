//! Two-crystal downconversion source: pump controls to emitted state.
//!
//! A pump polarized at χ from vertical gives
//! `(|HH⟩ + ε e^{iφ}|VV⟩)/√(1+ε²)` with ε = tan χ. Imperfections are
//! modelled as explicit knobs that default to the ideal source.

use nalgebra::{Complex, Matrix2, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::polarization::{DensityMatrix, TwoPhotonState, C64};

/// Source settings, as read from the `source` block of a run config.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    #[serde(default = "default_chi")]
    pub chi_deg: f64,
    #[serde(default)]
    pub phi_deg: f64,
    #[serde(default)]
    pub delta_re: f64,
    #[serde(default)]
    pub delta_im: f64,
    #[serde(default = "default_attenuation")]
    pub attenuation: f64,
    /// When set, the source emits `mixed_state(gamma)` and ignores the
    /// pure-state knobs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
}

fn default_chi() -> f64 {
    45.0
}

fn default_attenuation() -> f64 {
    1.0
}

impl Default for SourceConfig {
    fn default() -> Self {
        Self {
            chi_deg: default_chi(),
            phi_deg: 0.0,
            delta_re: 0.0,
            delta_im: 0.0,
            attenuation: default_attenuation(),
            gamma: None,
        }
    }
}

impl SourceConfig {
    pub fn delta(&self) -> C64 {
        Complex::new(self.delta_re, self.delta_im)
    }

    pub fn validate(&self) -> Result<()> {
        check_chi(self.chi_deg)?;
        check_attenuation(self.attenuation)?;
        if !self.phi_deg.is_finite() {
            return Err(invalid("phi_deg must be finite"));
        }
        if !(self.delta().norm() < 1.0) {
            return Err(invalid(format!("|delta| must be < 1, got {}", self.delta().norm())));
        }
        if let Some(g) = self.gamma {
            check_gamma(g)?;
        }
        Ok(())
    }

    /// Degree of entanglement after pump attenuation.
    pub fn epsilon(&self) -> Result<f64> {
        effective_epsilon(self.chi_deg, self.attenuation)
    }

    /// Emitted pure state, or `None` for a mixed-state configuration.
    pub fn pure_state(&self) -> Result<Option<TwoPhotonState>> {
        self.validate()?;
        if self.gamma.is_some() {
            return Ok(None);
        }
        let s = state_from_epsilon(self.epsilon()?, self.phi_deg)?;
        Ok(Some(apply_crosstalk(&s, self.delta())?))
    }

    pub fn density_matrix(&self) -> Result<DensityMatrix> {
        match self.pure_state()? {
            Some(s) => Ok(DensityMatrix::from_pure(&s)),
            None => mixed_state(self.gamma.unwrap_or(0.0)),
        }
    }
}

fn check_chi(chi_deg: f64) -> Result<()> {
    if !(0.0..90.0).contains(&chi_deg) {
        return Err(invalid(format!(
            "pump angle chi must lie in [0, 90) degrees, got {chi_deg} \
             (chi = 90 gives infinite epsilon; use state_from_epsilon with 1/epsilon)"
        )));
    }
    Ok(())
}

fn check_attenuation(a: f64) -> Result<()> {
    if !(a > 0.0 && a <= 1.0) {
        return Err(invalid(format!("attenuation must lie in (0, 1], got {a}")));
    }
    Ok(())
}

fn check_gamma(g: f64) -> Result<()> {
    if !(g.is_finite() && g >= 0.0) {
        return Err(invalid(format!("gamma must be finite and >= 0, got {g}")));
    }
    Ok(())
}

/// State emitted for pump angle χ (from vertical) and phase φ, both degrees.
pub fn pump_to_state(chi_deg: f64, phi_deg: f64) -> Result<TwoPhotonState> {
    check_chi(chi_deg)?;
    state_from_epsilon(chi_deg.to_radians().tan(), phi_deg)
}

/// `(|HH⟩ + ε e^{iφ}|VV⟩)/√(1+ε²)`.
pub fn state_from_epsilon(epsilon: f64, phi_deg: f64) -> Result<TwoPhotonState> {
    if !(epsilon.is_finite() && epsilon >= 0.0) {
        return Err(invalid(format!("epsilon must be finite and >= 0, got {epsilon}")));
    }
    if !phi_deg.is_finite() {
        return Err(invalid("phi must be finite"));
    }
    let zero = Complex::new(0.0, 0.0);
    let vv = Complex::from_polar(epsilon, phi_deg.to_radians());
    TwoPhotonState::new([Complex::new(1.0, 0.0), zero, zero, vv])
}

/// Degree of entanglement when crystal 2 sees a fraction `attenuation` of
/// the pump power: the amplitude ratio scales as √attenuation.
pub fn effective_epsilon(chi_deg: f64, attenuation: f64) -> Result<f64> {
    check_chi(chi_deg)?;
    check_attenuation(attenuation)?;
    Ok(attenuation.sqrt() * chi_deg.to_radians().tan())
}

/// Replaces |V⟩ by `|V′⟩ = (|V⟩ + δ|H⟩)/√(1+|δ|²)` in both arms and
/// renormalizes. The state stays pure.
pub fn apply_crosstalk(state: &TwoPhotonState, delta: C64) -> Result<TwoPhotonState> {
    let d = delta.norm();
    if !(d < 1.0) {
        return Err(invalid(format!("|delta| must be < 1, got {d}")));
    }
    let s = 1.0 / (1.0 + d * d).sqrt();
    // columns: images of |H⟩ and |V⟩
    let t = Matrix2::new(
        Complex::new(1.0, 0.0),
        delta * s,
        Complex::new(0.0, 0.0),
        Complex::new(s, 0.0),
    );
    let a = state.as_vector();
    let mut out = Vector4::zeros();
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    out[2 * i + j] += t[(i, k)] * t[(j, l)] * a[2 * k + l];
                }
            }
        }
    }
    TwoPhotonState::from_vector(out)
}

/// `(|HH⟩⟨HH| + γ|VV⟩⟨VV|)/(1+γ)`.
pub fn mixed_state(gamma: f64) -> Result<DensityMatrix> {
    check_gamma(gamma)?;
    DensityMatrix::diagonal([1.0, 0.0, 0.0, gamma])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polarization::JonesVector;
    use approx::assert_abs_diff_eq;

    #[test]
    fn pump_examples() {
        let s = pump_to_state(45.0, 0.0).unwrap().amps();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!(s[0].re, r, epsilon = 1e-12);
        assert_abs_diff_eq!(s[3].re, r, epsilon = 1e-12);
        let s = pump_to_state(0.0, 0.0).unwrap().amps();
        assert_abs_diff_eq!(s[0].re, 1.0, epsilon = 1e-15);
        assert_eq!(s[3].norm(), 0.0);
        let s = pump_to_state(25.17, 0.0).unwrap().amps();
        assert_abs_diff_eq!(s[3].re / s[0].re, 0.470, epsilon = 5e-4);
        assert!(pump_to_state(90.0, 0.0).is_err());
        assert!(pump_to_state(-1.0, 0.0).is_err());
    }

    #[test]
    fn epsilon_parameterization() {
        let s = state_from_epsilon(0.3, 0.0).unwrap().amps();
        assert_abs_diff_eq!(s[0].re, 0.9578, epsilon = 1e-4);
        assert_abs_diff_eq!(s[3].re, 0.2873, epsilon = 1e-4);
        assert_eq!(s[1].norm() + s[2].norm(), 0.0);

        let s = state_from_epsilon(1.0, -90.0).unwrap().amps();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!(s[3].im, -r, epsilon = 1e-12);
        assert_abs_diff_eq!(s[3].re, 0.0, epsilon = 1e-12);

        assert!(state_from_epsilon(-0.1, 0.0).is_err());
        assert!(state_from_epsilon(f64::NAN, 0.0).is_err());
    }

    #[test]
    fn pump_matches_epsilon_on_grid() {
        for k in 0..20 {
            let chi = 89.0 * k as f64 / 19.0;
            let a = pump_to_state(chi, 30.0).unwrap();
            let b = state_from_epsilon(chi.to_radians().tan(), 30.0).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn attenuation() {
        assert_abs_diff_eq!(effective_epsilon(45.0, 1.0).unwrap(), 1.0, epsilon = 1e-12);
        let e = effective_epsilon(45.0, 0.98).unwrap();
        assert_abs_diff_eq!(e * e, 0.98, epsilon = 1e-12);
        assert_eq!(effective_epsilon(0.0, 0.5).unwrap(), 0.0);
        assert!(effective_epsilon(45.0, 0.0).is_err());
        assert!(effective_epsilon(45.0, 1.01).is_err());
        for chi in [5.0, 30.0, 60.0, 85.0] {
            for a in [0.1, 0.5, 0.9, 1.0] {
                let e = effective_epsilon(chi, a).unwrap();
                let t = f64::tan(f64::to_radians(chi));
                assert_abs_diff_eq!(e * e, a * t * t, epsilon = 1e-12 * (1.0 + t * t));
            }
        }
    }

    #[test]
    fn crosstalk() {
        let bell = state_from_epsilon(1.0, 0.0).unwrap();
        assert_eq!(apply_crosstalk(&bell, Complex::new(0.0, 0.0)).unwrap(), bell);

        let out = apply_crosstalk(&bell, Complex::new(0.1, 0.0)).unwrap();
        let h = JonesVector::h();
        let v = JonesVector::v();
        let p_hv = out.projection_probability(&h, &v);
        let p_vh = out.projection_probability(&v, &h);
        // brute-force expansion of |HH⟩ + |V′V′⟩
        let d: f64 = 0.1;
        let n = 1.0 + d * d;
        let amps = [1.0 + d * d / n, d / n, d / n, 1.0 / n];
        let norm: f64 = amps.iter().map(|a| a * a).sum();
        assert_abs_diff_eq!(p_hv, amps[1] * amps[1] / norm, epsilon = 1e-12);
        assert_abs_diff_eq!(p_vh, p_hv, epsilon = 1e-12);
        assert!((0.008..0.011).contains(&(p_hv + p_vh)));
        assert_abs_diff_eq!(out.norm(), 1.0, epsilon = 1e-12);

        assert!(apply_crosstalk(&bell, Complex::new(1.0, 0.0)).is_err());
    }

    #[test]
    fn mixed_examples() {
        let r = mixed_state(0.0).unwrap();
        assert_abs_diff_eq!(r.purity(), 1.0, epsilon = 1e-15);
        let r = mixed_state(1.0).unwrap();
        assert_eq!(r.diag(), [0.5, 0.0, 0.0, 0.5]);
        assert_abs_diff_eq!(r.purity(), 0.5, epsilon = 1e-15);
        let r = mixed_state(0.5).unwrap();
        assert_abs_diff_eq!(r.diag()[0], 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r.diag()[3], 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r.purity(), 5.0 / 9.0, epsilon = 1e-15);
        assert!(mixed_state(-0.5).is_err());
    }

    #[test]
    fn mixed_state_is_its_own_eigenbasis() {
        for g in [0.0, 0.3, 1.0, 4.0] {
            let r = mixed_state(g).unwrap();
            let mut diag = r.diag();
            diag.sort_by(|a, b| b.total_cmp(a));
            for (e, d) in r.eigenvalues().iter().zip(diag) {
                assert_abs_diff_eq!(*e, d, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn config_json() {
        let cfg: SourceConfig =
            serde_json::from_str(r#"{"chi_deg": 25.17, "delta_re": 0.05, "attenuation": 0.98}"#).unwrap();
        assert_eq!(cfg.phi_deg, 0.0);
        assert!(cfg.density_matrix().is_ok());
        let bad = serde_json::from_str::<SourceConfig>(r#"{"chi": 1}"#);
        assert!(bad.is_err());
        let mixed: SourceConfig = serde_json::from_str(r#"{"gamma": 1.0}"#).unwrap();
        assert_eq!(mixed.density_matrix().unwrap().diag(), [0.5, 0.0, 0.0, 0.5]);
    }
}
