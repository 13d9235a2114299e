//! Random two-photon states for sampling and statistical checks.

use nalgebra::{Complex, Matrix4, Vector4};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::polarization::{DensityMatrix, TwoPhotonState};

fn gaussian_c<R: Rng + ?Sized>(rng: &mut R) -> Complex<f64> {
    Complex::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Haar-random pure state.
pub fn pure_state<R: Rng + ?Sized>(rng: &mut R) -> TwoPhotonState {
    loop {
        let v = Vector4::from_fn(|_, _| gaussian_c(rng));
        if let Ok(s) = TwoPhotonState::from_vector(v) {
            return s;
        }
    }
}

/// Full-rank mixed state `G G† / Tr(G G†)` with Gaussian `G`.
pub fn mixed_state<R: Rng + ?Sized>(rng: &mut R) -> DensityMatrix {
    let g = Matrix4::from_fn(|_, _| gaussian_c(rng));
    let m = g * g.adjoint();
    let tr = m.trace();
    DensityMatrix::from_matrix(m / tr).expect("G G† is Hermitian with positive trace")
}

/// Hermitian, unit trace, generally indefinite.
pub fn hermitian_unit_trace<R: Rng + ?Sized>(rng: &mut R) -> DensityMatrix {
    let g = Matrix4::from_fn(|_, _| gaussian_c(rng) * 0.3);
    let mut m = (g + g.adjoint()) * Complex::new(0.5, 0.0);
    let shift = (1.0 - m.trace().re) / 4.0;
    for i in 0..4 {
        m[(i, i)] = Complex::new(m[(i, i)].re + shift, 0.0);
    }
    DensityMatrix::from_matrix(m).expect("constructed Hermitian with unit trace")
}

/// Cycles through pure, mixed and indefinite samples.
pub fn any_state<R: Rng + ?Sized>(rng: &mut R, index: usize) -> DensityMatrix {
    match index % 3 {
        0 => DensityMatrix::from_pure(&pure_state(rng)),
        1 => mixed_state(rng),
        _ => hermitian_unit_trace(rng),
    }
}
