//! Browser bindings for three interactive views: the Hardy fraction
//! versus ε, coincidence fringes, and a simulated tomography run.
//!
//! Results cross the boundary as flat `Float64Array`s; layouts are
//! documented on each function. The plain-Rust versions in [`ops`] carry
//! the logic and are what the native tests exercise.

use wasm_bindgen::prelude::*;

pub mod ops {
    use entangle::measurement::{fringe, visibility, AnalyzerSetting, NoiseConfig};
    use entangle::tomography::{diagnose, reconstruct, table1_scheme};
    use entangle::{hardy_angles, hardy_band, simulate_counts, state_from_epsilon, DensityMatrix, SourceConfig};

    pub type Result<T> = std::result::Result<T, String>;

    fn err(e: entangle::Error) -> String {
        e.to_string()
    }

    /// `[alpha_deg, |beta|_deg, fraction, band_lo, band_hi]`.
    pub fn hardy_point(epsilon: f64, uncertainty_deg: f64) -> Result<Vec<f64>> {
        let cfg = hardy_angles(epsilon).map_err(err)?;
        let fraction = cfg.probabilities().map_err(err)?[0];
        let (lo, hi) = hardy_band(epsilon, uncertainty_deg).map_err(err)?;
        Ok(vec![cfg.alpha_deg, cfg.beta_deg, fraction, lo, hi])
    }

    /// Predicted Hardy fraction at `n` evenly spaced ε in (0, 1):
    /// `[ε₀, f₀, ε₁, f₁, …]`.
    pub fn hardy_curve(n: usize) -> Result<Vec<f64>> {
        if n < 2 {
            return Err(format!("need at least 2 points, got {n}"));
        }
        let mut out = Vec::with_capacity(2 * n);
        for k in 1..=n {
            let eps = k as f64 / (n + 1) as f64;
            out.push(eps);
            out.push(entangle::hardy_fraction(eps).map_err(err)?);
        }
        Ok(out)
    }

    /// Arm 1 fixed at linear `fixed_deg`, arm 2 swept over [0°, 180°):
    /// `[visibility, θ₀, P₀, θ₁, P₁, …]`.
    pub fn fringe_curve(epsilon: f64, phi_deg: f64, fixed_deg: f64, n: usize) -> Result<Vec<f64>> {
        let rho = DensityMatrix::from_pure(&state_from_epsilon(epsilon, phi_deg).map_err(err)?);
        let samples = fringe(&rho, &AnalyzerSetting::Linear(fixed_deg), n).map_err(err)?;
        let v = visibility(&samples).unwrap_or(f64::NAN);
        let mut out = vec![v];
        out.extend(samples.into_iter().flat_map(|(t, p)| [t, p]));
        Ok(out)
    }

    /// Simulates 16-setting tomography of a source with crosstalk `δ` and
    /// reconstructs it. Layout: `re[16]` and `im[16]` row-major, then
    /// eigenvalues (4, descending), purity, fidelity with the ideal
    /// `(|HH⟩ + ε e^{iφ}|VV⟩)` state, trace distance to the true state.
    pub fn simulate_tomography(
        epsilon: f64,
        phi_deg: f64,
        delta_re: f64,
        delta_im: f64,
        pairs: f64,
        seed: u64,
    ) -> Result<Vec<f64>> {
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(format!("epsilon must be finite and >= 0, got {epsilon}"));
        }
        let src = SourceConfig {
            chi_deg: epsilon.atan().to_degrees(),
            phi_deg,
            delta_re,
            delta_im,
            ..SourceConfig::default()
        };
        let truth = src.density_matrix().map_err(err)?;
        let scheme = table1_scheme();
        let noise = NoiseConfig::default().with_seed(seed);
        let records = simulate_counts(&truth, scheme.settings(), pairs, &noise).map_err(err)?;
        let rho = reconstruct(&records, &scheme).map_err(err)?;
        let d = diagnose(&rho, Some((epsilon, phi_deg))).map_err(err)?;
        let m = rho.matrix();
        let mut out = Vec::with_capacity(39);
        out.extend((0..16).map(|k| m[(k / 4, k % 4)].re));
        out.extend((0..16).map(|k| m[(k / 4, k % 4)].im));
        out.extend(d.eigenvalues);
        out.push(d.purity);
        out.push(d.fidelity.unwrap_or(f64::NAN));
        out.push(rho.trace_distance(&truth));
        Ok(out)
    }
}

fn js(r: ops::Result<Vec<f64>>) -> Result<Vec<f64>, JsError> {
    r.map_err(|e| JsError::new(&e))
}

/// See [`ops::hardy_point`].
#[wasm_bindgen(js_name = hardyPoint)]
pub fn hardy_point(epsilon: f64, uncertainty_deg: f64) -> Result<Vec<f64>, JsError> {
    js(ops::hardy_point(epsilon, uncertainty_deg))
}

/// See [`ops::hardy_curve`].
#[wasm_bindgen(js_name = hardyCurve)]
pub fn hardy_curve(n: usize) -> Result<Vec<f64>, JsError> {
    js(ops::hardy_curve(n))
}

/// See [`ops::fringe_curve`].
#[wasm_bindgen(js_name = fringeCurve)]
pub fn fringe_curve(epsilon: f64, phi_deg: f64, fixed_deg: f64, n: usize) -> Result<Vec<f64>, JsError> {
    js(ops::fringe_curve(epsilon, phi_deg, fixed_deg, n))
}

/// See [`ops::simulate_tomography`]. The seed arrives as an `f64` from JS
/// and is truncated to an integer.
#[wasm_bindgen(js_name = simulateTomography)]
pub fn simulate_tomography(
    epsilon: f64,
    phi_deg: f64,
    delta_re: f64,
    delta_im: f64,
    pairs: f64,
    seed: f64,
) -> Result<Vec<f64>, JsError> {
    js(ops::simulate_tomography(
        epsilon,
        phi_deg,
        delta_re,
        delta_im,
        pairs,
        seed.max(0.0) as u64,
    ))
}

#[cfg(test)]
mod tests {
    use super::ops::*;

    #[test]
    fn hardy_point_at_operating_epsilon() {
        let p = hardy_point(0.47, 0.5).unwrap();
        assert!((p[0] - 55.567).abs() < 1e-3 && (p[1] - 72.140).abs() < 1e-3);
        assert!(p[3] <= p[2] && p[2] <= p[4]);
        assert!(hardy_point(1.0, 0.5).is_err());
    }

    #[test]
    fn hardy_curve_peaks_near_optimum() {
        let c = hardy_curve(99).unwrap();
        let (eps, f) = c
            .chunks(2)
            .map(|x| (x[0], x[1]))
            .fold((0.0, 0.0), |b, x| if x.1 > b.1 { x } else { b });
        assert!((eps - 0.46).abs() < 0.011, "{eps}");
        assert!((f - 0.0902).abs() < 1e-3);
    }

    #[test]
    fn bell_fringe_has_full_visibility() {
        let f = fringe_curve(1.0, 0.0, 45.0, 360).unwrap();
        assert_eq!(f.len(), 1 + 2 * 360);
        assert!((f[0] - 1.0).abs() < 1e-12);
        // |HH⟩ with arm 1 at V never fires: visibility undefined
        let f = fringe_curve(0.0, 0.0, 90.0, 36).unwrap();
        assert!(f[0].is_nan());
    }

    #[test]
    fn tomography_recovers_source() {
        let out = simulate_tomography(0.47, 0.0, 0.0, 0.0, 1e7, 1).unwrap();
        assert_eq!(out.len(), 39);
        let trace: f64 = [0, 5, 10, 15].iter().map(|&k| out[k]).sum();
        assert!((trace - 1.0).abs() < 1e-12);
        assert!(out[37] > 0.999, "fidelity {}", out[37]);
        assert!(out[38] < 0.01);
        let noisy = simulate_tomography(0.47, 0.0, 0.2, 0.0, 1e7, 1).unwrap();
        assert!(noisy[37] < out[37]);
        assert!(simulate_tomography(-1.0, 0.0, 0.0, 0.0, 1e3, 1).is_err());
    }
}
