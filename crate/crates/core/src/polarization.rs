//! Single- and two-photon polarization states.
//!
//! Basis order for two-photon objects is always (HH, HV, VH, VV), with the
//! first letter labelling arm 1. A linear analyzer at angle θ transmits
//! `cos θ |H⟩ + sin θ |V⟩`, so that the two-photon coincidence probability
//! for `(|HH⟩ + ε e^{iφ} |VV⟩)/√(1+ε²)` is
//! `|cos θ1 cos θ2 + ε e^{iφ} sin θ1 sin θ2|² / (1 + ε²)`.
//!
//! Circular states: `L = (|H⟩ + i|V⟩)/√2`, `R = (|H⟩ − i|V⟩)/√2`.

use std::fmt;

use nalgebra::{Complex, Matrix2, Matrix4, Vector2, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub type C64 = Complex<f64>;

/// Labels of the two-photon computational basis, in storage order.
pub const BASIS_LABELS: [&str; 4] = ["HH", "HV", "VH", "VV"];

const NORM_TOL: f64 = 1e-12;
const HERMITIAN_TOL: f64 = 1e-10;
const TRACE_TOL: f64 = 1e-10;

fn c(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

/// A normalized single-photon polarization state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JonesVector(Vector2<C64>);

impl JonesVector {
    /// Normalizes `(amp_h, amp_v)`. Fails for the zero vector.
    pub fn new(amp_h: C64, amp_v: C64) -> Result<Self> {
        let v = Vector2::new(amp_h, amp_v);
        let n = v.norm();
        if !n.is_finite() || n < NORM_TOL {
            return Err(invalid("Jones vector must have finite nonzero norm"));
        }
        Ok(Self(v / c(n, 0.0)))
    }

    pub fn h() -> Self {
        Self(Vector2::new(c(1.0, 0.0), c(0.0, 0.0)))
    }

    pub fn v() -> Self {
        Self(Vector2::new(c(0.0, 0.0), c(1.0, 0.0)))
    }

    pub fn amp_h(&self) -> C64 {
        self.0[0]
    }

    pub fn amp_v(&self) -> C64 {
        self.0[1]
    }

    pub fn as_vector(&self) -> &Vector2<C64> {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &JonesVector) -> C64 {
        self.0.dotc(&other.0)
    }

    pub fn apply(&self, op: &Matrix2<C64>) -> Result<Self> {
        let v = op * self.0;
        JonesVector::new(v[0], v[1])
    }

    /// Two-photon product state `|self⟩ ⊗ |other⟩`.
    pub fn tensor(&self, other: &JonesVector) -> Vector4<C64> {
        let (a, b) = (self.0, other.0);
        Vector4::new(a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1])
    }
}

/// Linear polarization at `theta_deg` from the H axis: `cos θ|H⟩ + sin θ|V⟩`.
pub fn linear_state(theta_deg: f64) -> JonesVector {
    let t = theta_deg.to_radians();
    JonesVector(Vector2::new(c(t.cos(), 0.0), c(t.sin(), 0.0)))
}

/// Named basis states H, V, D, A, L, R.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StateName {
    H,
    V,
    D,
    A,
    L,
    R,
}

impl StateName {
    pub const ALL: [StateName; 6] = [
        StateName::H,
        StateName::V,
        StateName::D,
        StateName::A,
        StateName::L,
        StateName::R,
    ];

    pub fn letter(self) -> char {
        match self {
            StateName::H => 'H',
            StateName::V => 'V',
            StateName::D => 'D',
            StateName::A => 'A',
            StateName::L => 'L',
            StateName::R => 'R',
        }
    }

    pub fn state(self) -> JonesVector {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let (h, v) = match self {
            StateName::H => (c(1.0, 0.0), c(0.0, 0.0)),
            StateName::V => (c(0.0, 0.0), c(1.0, 0.0)),
            StateName::D => (c(s, 0.0), c(s, 0.0)),
            StateName::A => (c(s, 0.0), c(-s, 0.0)),
            StateName::L => (c(s, 0.0), c(0.0, s)),
            StateName::R => (c(s, 0.0), c(0.0, -s)),
        };
        JonesVector(Vector2::new(h, v))
    }
}

impl std::str::FromStr for StateName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "H" => Ok(StateName::H),
            "V" => Ok(StateName::V),
            "D" => Ok(StateName::D),
            "A" => Ok(StateName::A),
            "L" => Ok(StateName::L),
            "R" => Ok(StateName::R),
            other => Err(invalid(format!("unknown polarization state name {other:?}"))),
        }
    }
}

impl fmt::Display for StateName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

/// Looks up a named state by its one-letter label.
pub fn named_state(name: &str) -> Result<JonesVector> {
    Ok(name.parse::<StateName>()?.state())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Waveplate {
    Half,
    Quarter,
}

/// Jones matrix of an ideal retarder with its fast axis at `angle_deg`.
///
/// Phase convention: `R(θ) · diag(1, e^{iΓ}) · R(−θ)` with Γ = π (HWP) or
/// π/2 (QWP), i.e. the fast-axis component picks up no phase. Only
/// phase-insensitive quantities depend on this choice.
pub fn waveplate_operator(kind: Waveplate, angle_deg: f64) -> Matrix2<C64> {
    let t = angle_deg.to_radians();
    let (s, co) = t.sin_cos();
    let rot = Matrix2::new(c(co, 0.0), c(-s, 0.0), c(s, 0.0), c(co, 0.0));
    let retard = match kind {
        Waveplate::Half => c(-1.0, 0.0),
        Waveplate::Quarter => c(0.0, 1.0),
    };
    let diag = Matrix2::new(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), retard);
    rot * diag * rot.transpose()
}

/// The polarization state that an analyzer built from a half-wave plate,
/// then a quarter-wave plate, then a polarizing beamsplitter transmits with
/// certainty (counted port = H).
///
/// This is `(Q · Hw)† |H⟩`, the transmitted port propagated back through the
/// plates.
pub fn analyzer_projection(qwp_deg: f64, hwp_deg: f64) -> JonesVector {
    let chain = waveplate_operator(Waveplate::Quarter, qwp_deg) * waveplate_operator(Waveplate::Half, hwp_deg);
    let v = chain.adjoint() * JonesVector::h().0;
    // unitary chain, so the norm is already 1 up to rounding
    let n = v.norm();
    JonesVector(v / c(n, 0.0))
}

/// A normalized pure two-photon polarization state over (HH, HV, VH, VV).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoPhotonState(Vector4<C64>);

impl TwoPhotonState {
    /// Normalizes the given amplitudes. Fails for the zero vector.
    pub fn new(amps: [C64; 4]) -> Result<Self> {
        Self::from_vector(Vector4::from(amps))
    }

    pub fn from_vector(v: Vector4<C64>) -> Result<Self> {
        let n = v.norm();
        if !n.is_finite() || n < NORM_TOL {
            return Err(invalid("two-photon state must have finite nonzero norm"));
        }
        Ok(Self(v / c(n, 0.0)))
    }

    pub fn product(a: &JonesVector, b: &JonesVector) -> Self {
        Self(a.tensor(b))
    }

    pub fn amps(&self) -> [C64; 4] {
        [self.0[0], self.0[1], self.0[2], self.0[3]]
    }

    pub fn as_vector(&self) -> &Vector4<C64> {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    /// `|⟨a|⟨b|ψ⟩|²`.
    pub fn projection_probability(&self, a: &JonesVector, b: &JonesVector) -> f64 {
        a.tensor(b).dotc(&self.0).norm_sqr()
    }
}

/// 4×4 Hermitian, unit-trace two-photon density matrix.
///
/// Positivity is deliberately not enforced: linear-inversion estimates can
/// carry small negative eigenvalues. See [`DensityMatrix::is_physical`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix(Matrix4<C64>);

impl DensityMatrix {
    /// Validates Hermiticity and unit trace.
    pub fn from_matrix(m: Matrix4<C64>) -> Result<Self> {
        let dev = hermitian_deviation(&m);
        if !dev.is_finite() || dev > HERMITIAN_TOL {
            return Err(Error::NotHermitian(dev));
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(invalid(format!("density matrix trace is {tr}, expected 1")));
        }
        // symmetrize away sub-tolerance rounding
        Ok(Self((m + m.adjoint()) * c(0.5, 0.0)))
    }

    /// `|ψ⟩⟨ψ|`.
    pub fn from_pure(state: &TwoPhotonState) -> Self {
        Self(state.0 * state.0.adjoint())
    }

    pub fn maximally_mixed() -> Self {
        Self(Matrix4::identity() * c(0.25, 0.0))
    }

    /// Real-diagonal matrix; entries are renormalized to unit sum.
    pub fn diagonal(diag: [f64; 4]) -> Result<Self> {
        let sum: f64 = diag.iter().sum();
        if !sum.is_finite() || sum.abs() < NORM_TOL {
            return Err(invalid("diagonal must have finite nonzero sum"));
        }
        let mut m = Matrix4::zeros();
        for (i, d) in diag.iter().enumerate() {
            m[(i, i)] = c(d / sum, 0.0);
        }
        Ok(Self(m))
    }

    pub fn matrix(&self) -> &Matrix4<C64> {
        &self.0
    }

    pub fn elem(&self, row: usize, col: usize) -> C64 {
        self.0[(row, col)]
    }

    pub fn diag(&self) -> [f64; 4] {
        [
            self.0[(0, 0)].re,
            self.0[(1, 1)].re,
            self.0[(2, 2)].re,
            self.0[(3, 3)].re,
        ]
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    /// Tr ρ².
    pub fn purity(&self) -> f64 {
        (self.0 * self.0).trace().re
    }

    /// `⟨target|ρ|target⟩`.
    pub fn fidelity_with_pure(&self, target: &TwoPhotonState) -> Result<f64> {
        let f = target.0.dotc(&(self.0 * target.0));
        if f.im.abs() > 1e-8 {
            return Err(Error::Numerical(format!("fidelity has imaginary part {}", f.im)));
        }
        Ok(f.re)
    }

    /// `⟨v|ρ|v⟩` for an arbitrary (not necessarily normalized) vector.
    pub fn expectation(&self, v: &Vector4<C64>) -> f64 {
        v.dotc(&(self.0 * v)).re
    }

    /// Eigenpairs sorted by descending eigenvalue.
    pub fn eigendecompose(&self) -> Vec<(f64, Vector4<C64>)> {
        hermitian_eigen_unchecked(&self.0)
    }

    pub fn eigenvalues(&self) -> [f64; 4] {
        let e = self.eigendecompose();
        [e[0].0, e[1].0, e[2].0, e[3].0]
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[3]
    }

    /// True when every eigenvalue is at least `-tol`.
    pub fn is_physical(&self, tol: f64) -> bool {
        self.min_eigenvalue() >= -tol
    }

    /// Half the trace norm of `self − other`.
    pub fn trace_distance(&self, other: &DensityMatrix) -> f64 {
        let diff = self.0 - other.0;
        0.5 * hermitian_eigen_unchecked(&diff)
            .iter()
            .map(|(l, _)| l.abs())
            .sum::<f64>()
    }

    pub fn max_abs_diff(&self, other: &DensityMatrix) -> f64 {
        (self.0 - other.0).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> DensityMatrixJson {
        let mut re = [[0.0; 4]; 4];
        let mut im = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                re[i][j] = self.0[(i, j)].re;
                im[i][j] = self.0[(i, j)].im;
            }
        }
        DensityMatrixJson {
            basis: BASIS_LABELS.map(String::from),
            re,
            im,
        }
    }
}

/// JSON layout of a density matrix: two row-major 4×4 arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityMatrixJson {
    #[serde(default = "default_basis")]
    pub basis: [String; 4],
    pub re: [[f64; 4]; 4],
    pub im: [[f64; 4]; 4],
}

fn default_basis() -> [String; 4] {
    BASIS_LABELS.map(String::from)
}

impl TryFrom<DensityMatrixJson> for DensityMatrix {
    type Error = Error;

    fn try_from(j: DensityMatrixJson) -> Result<Self> {
        if j.basis.iter().map(String::as_str).ne(BASIS_LABELS) {
            return Err(Error::Parse(format!(
                "unsupported basis order {:?}, expected {:?}",
                j.basis, BASIS_LABELS
            )));
        }
        let m = Matrix4::from_fn(|i, k| c(j.re[i][k], j.im[i][k]));
        DensityMatrix::from_matrix(m)
    }
}

impl Serialize for DensityMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

impl<'de> Deserialize<'de> for DensityMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = DensityMatrixJson::deserialize(d)?;
        DensityMatrix::try_from(j).map_err(serde::de::Error::custom)
    }
}

fn hermitian_deviation(m: &Matrix4<C64>) -> f64 {
    (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Eigendecomposition of a 4×4 Hermitian matrix, eigenvalues descending.
///
/// Non-Hermitian input (deviation above 1e-10) is rejected.
pub fn hermitian_eigen(m: &Matrix4<C64>) -> Result<Vec<(f64, Vector4<C64>)>> {
    let dev = hermitian_deviation(m);
    if !dev.is_finite() || dev > HERMITIAN_TOL {
        return Err(Error::NotHermitian(dev));
    }
    Ok(hermitian_eigen_unchecked(m))
}

fn hermitian_eigen_unchecked(m: &Matrix4<C64>) -> Vec<(f64, Vector4<C64>)> {
    let eig = nalgebra::SymmetricEigen::new(*m);
    let mut pairs: Vec<(f64, Vector4<C64>)> = (0..4)
        .map(|k| (eig.eigenvalues[k], eig.eigenvectors.column(k).into_owned()))
        .collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    pairs
}

/// `Σ λ |ψ⟩⟨ψ|` from eigenpairs.
pub fn reassemble(pairs: &[(f64, Vector4<C64>)]) -> Matrix4<C64> {
    pairs
        .iter()
        .fold(Matrix4::zeros(), |acc, (l, v)| acc + v * v.adjoint() * c(*l, 0.0))
}

/// Entropy of entanglement (nats) of `(|HH⟩ + ε|VV⟩)/√(1+ε²)`:
/// `ln(1+ε²) − ε² ln(ε²)/(1+ε²)`, with E(0) = E(∞) = 0.
pub fn entanglement_entropy(epsilon: f64) -> Result<f64> {
    if epsilon.is_nan() || epsilon < 0.0 {
        return Err(invalid(format!("epsilon must be >= 0, got {epsilon}")));
    }
    if epsilon == 0.0 || epsilon.is_infinite() {
        return Ok(0.0);
    }
    let e2 = epsilon * epsilon;
    Ok((1.0 + e2).ln() - e2 * e2.ln() / (1.0 + e2))
}
