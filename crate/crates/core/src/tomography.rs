//! Sixteen-setting two-photon polarization tomography by linear inversion.
//!
//! A density matrix is parameterized by 16 reals in a fixed order:
//! the four diagonal entries (HH, HV, VH, VV), then the real parts of the
//! upper off-diagonal entries (01, 02, 03, 12, 13, 23), then their imaginary
//! parts in the same order. Each setting probability `P_k = ⟨v_k|ρ|v_k⟩` is
//! linear in this vector, giving the 16×16 measurement matrix `M`; the
//! estimate is `ρ = unstack(M⁻¹ P)`.

use std::io::Read;

use nalgebra::{Complex, Matrix4, SMatrix, SVector};
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::measurement::{AnalyzerSetting, CountRecord, SettingPair};
use crate::polarization::{DensityMatrix, StateName, BASIS_LABELS};
use crate::source::state_from_epsilon;

pub type MeasurementMatrix = SMatrix<f64, 16, 16>;
pub type ParamVector = SVector<f64, 16>;

/// Upper-triangle index pairs, in parameter order.
pub const OFF_DIAGONAL: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

/// Settings with a larger condition number are rejected as degenerate by
/// [`build_measurement_matrix`].
pub const SINGULAR_CONDITION: f64 = 1e6;
/// Acceptance bound used when constructing a [`TomographyScheme`].
pub const MAX_SCHEME_CONDITION: f64 = 100.0;

const DURATION_REL_TOL: f64 = 0.01;

/// Human-readable label for parameter index `k`.
pub fn parameter_label(k: usize) -> String {
    match k {
        0..=3 => format!("rho[{0},{0}]", BASIS_LABELS[k]),
        4..=9 => {
            let (i, j) = OFF_DIAGONAL[k - 4];
            format!("Re rho[{},{}]", BASIS_LABELS[i], BASIS_LABELS[j])
        }
        10..=15 => {
            let (i, j) = OFF_DIAGONAL[k - 10];
            format!("Im rho[{},{}]", BASIS_LABELS[i], BASIS_LABELS[j])
        }
        _ => format!("param[{k}]"),
    }
}

/// Real parameter vector of a density matrix.
pub fn density_to_params(rho: &DensityMatrix) -> ParamVector {
    let mut r = ParamVector::zeros();
    for i in 0..4 {
        r[i] = rho.elem(i, i).re;
    }
    for (k, &(i, j)) in OFF_DIAGONAL.iter().enumerate() {
        r[4 + k] = rho.elem(i, j).re;
        r[10 + k] = rho.elem(i, j).im;
    }
    r
}

/// Hermitian matrix from a parameter vector.
pub fn params_to_matrix(r: &ParamVector) -> Matrix4<Complex<f64>> {
    let mut m = Matrix4::zeros();
    for i in 0..4 {
        m[(i, i)] = Complex::new(r[i], 0.0);
    }
    for (k, &(i, j)) in OFF_DIAGONAL.iter().enumerate() {
        let z = Complex::new(r[4 + k], r[10 + k]);
        m[(i, j)] = z;
        m[(j, i)] = z.conj();
    }
    m
}

fn measurement_row(pair: &SettingPair) -> [f64; 16] {
    let v = pair.0.jones().tensor(&pair.1.jones());
    let mut row = [0.0; 16];
    for i in 0..4 {
        row[i] = v[i].norm_sqr();
    }
    // conj(v_i) v_j ρ_ij + c.c. = 2 Re(c ρ_ij), c = conj(v_i) v_j
    for (k, &(i, j)) in OFF_DIAGONAL.iter().enumerate() {
        let c = v[i].conj() * v[j];
        row[4 + k] = 2.0 * c.re;
        row[10 + k] = -2.0 * c.im;
    }
    row
}

fn condition_number(m: &MeasurementMatrix) -> (f64, nalgebra::SVD<f64, nalgebra::Const<16>, nalgebra::Const<16>>) {
    let svd = m.svd(false, true);
    let max = svd.singular_values.max();
    let min = svd.singular_values.min();
    let cond = if min > 0.0 { max / min } else { f64::INFINITY };
    (cond, svd)
}

fn deficient_directions(svd: &nalgebra::SVD<f64, nalgebra::Const<16>, nalgebra::Const<16>>, threshold: f64) -> String {
    let max = svd.singular_values.max();
    let v_t = svd.v_t.as_ref().expect("right singular vectors requested");
    let mut parts = Vec::new();
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s * threshold > max {
            continue;
        }
        let row = v_t.row(k);
        let mut weights: Vec<(usize, f64)> = row.iter().map(|x| x.abs()).enumerate().collect();
        weights.sort_by(|a, b| b.1.total_cmp(&a.1));
        let names: Vec<String> = weights
            .iter()
            .take_while(|(_, w)| *w > 0.1)
            .map(|(i, w)| format!("{:.2}·{}", w, parameter_label(*i)))
            .collect();
        parts.push(format!("[{}]", names.join(" + ")));
    }
    parts.join(", ")
}

/// Builds `M` such that `P_k = Σ_j M_kj r_j` for the parameter vector `r`.
///
/// Fails with [`Error::DegenerateScheme`] when the settings do not span all
/// 16 directions (condition number above [`SINGULAR_CONDITION`]).
pub fn build_measurement_matrix(settings: &[SettingPair]) -> Result<MeasurementMatrix> {
    if settings.len() != 16 {
        return Err(invalid(format!(
            "a tomography scheme needs 16 setting pairs, got {}",
            settings.len()
        )));
    }
    let m = MeasurementMatrix::from_fn(|k, j| measurement_row(&settings[k])[j]);
    let (cond, svd) = condition_number(&m);
    if !(cond <= SINGULAR_CONDITION) {
        return Err(Error::DegenerateScheme {
            condition: cond,
            directions: deficient_directions(&svd, SINGULAR_CONDITION),
        });
    }
    Ok(m)
}

/// An ordered set of 16 setting pairs and its inverted measurement matrix.
#[derive(Debug, Clone)]
pub struct TomographyScheme {
    settings: Vec<SettingPair>,
    m: MeasurementMatrix,
    m_inv: MeasurementMatrix,
    condition: f64,
}

impl TomographyScheme {
    /// The first four settings must be a complete basis-pair family; their
    /// counts set the normalization.
    pub fn new(settings: Vec<SettingPair>) -> Result<Self> {
        let m = build_measurement_matrix(&settings)?;
        let (condition, svd) = condition_number(&m);
        if condition > MAX_SCHEME_CONDITION {
            return Err(Error::DegenerateScheme {
                condition,
                directions: deficient_directions(&svd, condition / MAX_SCHEME_CONDITION),
            });
        }
        // rows 0..4 must add up to the trace functional
        let norm_row: Vec<f64> = (0..16).map(|j| (0..4).map(|k| m[(k, j)]).sum()).collect();
        let complete = norm_row
            .iter()
            .enumerate()
            .all(|(j, &x)| (x - if j < 4 { 1.0 } else { 0.0 }).abs() < 1e-12);
        if !complete {
            return Err(invalid(
                "the first four settings must form a complete basis-pair family",
            ));
        }
        let m_inv = m
            .try_inverse()
            .ok_or_else(|| Error::Numerical("measurement matrix inversion failed".into()))?;
        Ok(Self {
            settings,
            m,
            m_inv,
            condition,
        })
    }

    pub fn settings(&self) -> &[SettingPair] {
        &self.settings
    }

    pub fn m_matrix(&self) -> &MeasurementMatrix {
        &self.m
    }

    pub fn m_inverse(&self) -> &MeasurementMatrix {
        &self.m_inv
    }

    pub fn condition_number(&self) -> f64 {
        self.condition
    }

    pub fn normalization_indices(&self) -> [usize; 4] {
        [0, 1, 2, 3]
    }

    /// `M · r(ρ)`.
    pub fn predicted_probabilities(&self, rho: &DensityMatrix) -> [f64; 16] {
        (self.m * density_to_params(rho)).into()
    }

    /// `ρ = unstack(M⁻¹ P)` for a raw probability vector.
    pub fn invert(&self, probabilities: &[f64; 16]) -> Result<DensityMatrix> {
        let r = self.m_inv * ParamVector::from_column_slice(probabilities);
        let m = params_to_matrix(&r);
        DensityMatrix::from_matrix(m)
    }
}

/// The standard 16-setting order:
/// HH, HV, VH, VV, HD, HL, DH, RH, DD, RD, RL, DR, DV, RV, VD, VL.
pub fn table1_settings() -> Vec<SettingPair> {
    use StateName::*;
    [
        (H, H),
        (H, V),
        (V, H),
        (V, V),
        (H, D),
        (H, L),
        (D, H),
        (R, H),
        (D, D),
        (R, D),
        (R, L),
        (D, R),
        (D, V),
        (R, V),
        (V, D),
        (V, L),
    ]
    .iter()
    .map(|&(a, b)| (AnalyzerSetting::Named(a), AnalyzerSetting::Named(b)))
    .collect()
}

pub fn table1_scheme() -> TomographyScheme {
    TomographyScheme::new(table1_settings()).expect("standard settings form a well-conditioned scheme")
}

/// Reads a custom scheme: CSV with header `arm1,arm2` and 16 rows.
pub fn read_scheme_csv<R: Read>(r: R) -> Result<TomographyScheme> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let headers = rdr.headers()?.clone();
    if headers.iter().ne(["arm1", "arm2"]) {
        return Err(Error::Parse("scheme file header must be arm1,arm2".into()));
    }
    let mut settings = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        let parse = |k: usize| -> Result<AnalyzerSetting> {
            row.get(k)
                .ok_or_else(|| Error::Parse(format!("scheme row {}: missing column", i + 1)))?
                .parse()
        };
        settings.push((parse(0)?, parse(1)?));
    }
    TomographyScheme::new(settings)
}

/// Counts normalized by the sum of the first four.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbabilityVector([f64; 16]);

impl ProbabilityVector {
    pub fn values(&self) -> &[f64; 16] {
        &self.0
    }
}

fn same_setting(a: &AnalyzerSetting, b: &AnalyzerSetting) -> bool {
    match (a, b) {
        (AnalyzerSetting::Named(x), AnalyzerSetting::Named(y)) => x == y,
        (AnalyzerSetting::Linear(x), AnalyzerSetting::Linear(y)) => (x - y).abs() < 1e-9,
        (
            AnalyzerSetting::Waveplates {
                qwp_deg: q1,
                hwp_deg: h1,
            },
            AnalyzerSetting::Waveplates {
                qwp_deg: q2,
                hwp_deg: h2,
            },
        ) => (q1 - q2).abs() < 1e-9 && (h1 - h2).abs() < 1e-9,
        _ => false,
    }
}

/// Validates records against the scheme (labels, order, durations) and
/// normalizes by the first four counts.
pub fn probability_vector(records: &[CountRecord], scheme: &TomographyScheme) -> Result<ProbabilityVector> {
    if records.len() != scheme.settings.len() {
        return Err(Error::SchemeMismatch(format!(
            "expected {} records, got {}",
            scheme.settings.len(),
            records.len()
        )));
    }
    for (k, (rec, want)) in records.iter().zip(&scheme.settings).enumerate() {
        if !(same_setting(&rec.setting_1, &want.0) && same_setting(&rec.setting_2, &want.1)) {
            return Err(Error::SchemeMismatch(format!(
                "record {} is {},{} but the scheme expects {},{}",
                k + 1,
                rec.setting_1,
                rec.setting_2,
                want.0,
                want.1
            )));
        }
    }
    let d0 = records[0].duration;
    if let Some(bad) = records.iter().find(|r| (r.duration - d0).abs() > DURATION_REL_TOL * d0) {
        return Err(Error::InconsistentAcquisition(format!(
            "durations differ by more than 1% ({} s vs {} s)",
            d0, bad.duration
        )));
    }
    let total: u64 = records[..4].iter().map(|r| r.coincidences).sum();
    if total == 0 {
        return Err(Error::EmptyData("the first four counts sum to zero".into()));
    }
    let total = total as f64;
    let mut p = [0.0; 16];
    for (pk, r) in p.iter_mut().zip(records) {
        *pk = r.coincidences as f64 / total;
    }
    Ok(ProbabilityVector(p))
}

/// Raw linear-inversion estimate. Positivity is not enforced.
pub fn reconstruct(records: &[CountRecord], scheme: &TomographyScheme) -> Result<DensityMatrix> {
    let p = probability_vector(records, scheme)?;
    scheme.invert(p.values())
}

/// Clips negative eigenvalues to zero and renormalizes the trace.
pub fn project_to_physical(rho: &DensityMatrix) -> DensityMatrix {
    let pairs: Vec<_> = rho.eigendecompose().into_iter().map(|(l, v)| (l.max(0.0), v)).collect();
    let total: f64 = pairs.iter().map(|(l, _)| l).sum();
    let scaled: Vec<_> = pairs.into_iter().map(|(l, v)| (l / total, v)).collect();
    let m = crate::polarization::reassemble(&scaled);
    let m = (m + m.adjoint()) * Complex::new(0.5, 0.0);
    DensityMatrix::from_matrix(m).expect("clipped spectrum reassembles to a valid density matrix")
}

/// Independent parameters of a d-dimensional state: 2d−2 if pure, d²−1 otherwise.
pub fn parameter_count(dimension: usize, pure: bool) -> Result<usize> {
    if dimension < 2 {
        return Err(invalid(format!("dimension must be >= 2, got {dimension}")));
    }
    Ok(if pure {
        2 * dimension - 2
    } else {
        dimension * dimension - 1
    })
}

/// Summary statistics reported alongside a reconstruction.
#[derive(Debug, Clone, Serialize)]
pub struct Diagnostics {
    pub eigenvalues: [f64; 4],
    pub purity: f64,
    pub min_eigenvalue: f64,
    pub is_physical: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fidelity: Option<f64>,
}

/// Tolerance for [`Diagnostics::is_physical`].
pub const PHYSICAL_TOL: f64 = 1e-9;

pub fn diagnose(rho: &DensityMatrix, target: Option<(f64, f64)>) -> Result<Diagnostics> {
    let eigenvalues = rho.eigenvalues();
    let fidelity = match target {
        Some((eps, phi)) => Some(rho.fidelity_with_pure(&state_from_epsilon(eps, phi)?)?),
        None => None,
    };
    Ok(Diagnostics {
        eigenvalues,
        purity: rho.purity(),
        min_eigenvalue: eigenvalues[3],
        is_physical: eigenvalues[3] >= -PHYSICAL_TOL,
        fidelity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measurement::coincidence_probability;
    use crate::source::mixed_state;
    use approx::assert_abs_diff_eq;

    const TABLE1: [u64; 16] = [
        34749, 324, 444, 35805, 17238, 16722, 16901, 16324, 32028, 15132, 33586, 17932, 13441, 17521, 13171, 17170,
    ];

    fn records(counts: &[u64], duration: f64) -> Vec<CountRecord> {
        table1_settings()
            .into_iter()
            .zip(counts)
            .map(|(p, &c)| CountRecord::new(p, c, duration).unwrap())
            .collect()
    }

    #[test]
    fn table1_order() {
        let s = table1_scheme();
        let lit = |k: usize| format!("{}{}", s.settings()[k].0, s.settings()[k].1);
        assert_eq!(lit(0), "HH");
        assert_eq!(lit(8), "DD");
        assert_eq!(lit(15), "VL");
        assert_eq!(s.normalization_indices(), [0, 1, 2, 3]);
        assert!(s.condition_number() < MAX_SCHEME_CONDITION);
    }

    #[test]
    fn measurement_matrix_rows_and_inverse() {
        let s = table1_scheme();
        let m = s.m_matrix();
        for j in 0..16 {
            assert_eq!(m[(0, j)], if j == 0 { 1.0 } else { 0.0 });
        }
        let id = m * s.m_inverse();
        let err = (id - MeasurementMatrix::identity()).abs().max();
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn degenerate_scheme_detected() {
        let mut settings = table1_settings();
        settings[9] = settings[8];
        match build_measurement_matrix(&settings) {
            Err(Error::DegenerateScheme { directions, .. }) => assert!(!directions.is_empty()),
            other => panic!("expected degenerate scheme, got {other:?}"),
        }
        assert!(TomographyScheme::new(settings).is_err());
        assert!(build_measurement_matrix(&table1_settings()[..15]).is_err());
    }

    #[test]
    fn incomplete_normalization_rejected() {
        let mut settings = table1_settings();
        settings.swap(3, 8);
        assert!(TomographyScheme::new(settings).is_err());
    }

    #[test]
    fn probability_vector_examples() {
        let s = table1_scheme();
        let p = probability_vector(&records(&TABLE1, 100.0), &s).unwrap();
        assert_abs_diff_eq!(p.values()[0], 34749.0 / 71322.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.values()[0], 0.48721, epsilon = 1e-5);
        assert_abs_diff_eq!(p.values()[8], 0.44907, epsilon = 1e-5);
        let p = probability_vector(&records(&[7; 16], 1.0), &s).unwrap();
        assert_eq!(&p.values()[..4], &[0.25; 4]);
    }

    #[test]
    fn probability_vector_errors() {
        let s = table1_scheme();
        let mut zero = TABLE1;
        zero[..4].fill(0);
        assert!(matches!(
            probability_vector(&records(&zero, 1.0), &s),
            Err(Error::EmptyData(_))
        ));

        let short = records(&TABLE1, 1.0)[..15].to_vec();
        assert!(matches!(probability_vector(&short, &s), Err(Error::SchemeMismatch(_))));

        let mut swapped = records(&TABLE1, 1.0);
        swapped.swap(4, 5);
        assert!(matches!(
            probability_vector(&swapped, &s),
            Err(Error::SchemeMismatch(_))
        ));

        let mut uneven = records(&TABLE1, 100.0);
        uneven[7].duration = 102.0;
        assert!(matches!(
            probability_vector(&uneven, &s),
            Err(Error::InconsistentAcquisition(_))
        ));
        uneven[7].duration = 100.5;
        assert!(probability_vector(&uneven, &s).is_ok());
    }

    #[test]
    fn ideal_bell_probabilities_invert_to_corner_matrix() {
        let s = table1_scheme();
        let p = [
            0.5, 0.0, 0.0, 0.5, 0.25, 0.25, 0.25, 0.25, 0.5, 0.25, 0.5, 0.25, 0.25, 0.25, 0.25, 0.25,
        ];
        let rho = s.invert(&p).unwrap();
        let want = DensityMatrix::from_pure(&state_from_epsilon(1.0, 0.0).unwrap());
        assert!(rho.max_abs_diff(&want) < 1e-10);
    }

    #[test]
    fn table1_diagonal_is_count_ratios() {
        let rho = reconstruct(&records(&TABLE1, 100.0), &table1_scheme()).unwrap();
        let d = rho.diag();
        for (got, c) in d.iter().zip(&TABLE1[..4]) {
            assert_abs_diff_eq!(*got, *c as f64 / 71322.0, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(rho.trace(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn predicted_probabilities_match_direct_evaluation() {
        let s = table1_scheme();
        let rho = mixed_state(0.4).unwrap();
        let direct: Vec<f64> = s
            .settings()
            .iter()
            .map(|(a, b)| coincidence_probability(&rho, a, b).unwrap())
            .collect();
        for (a, b) in s.predicted_probabilities(&rho).iter().zip(direct) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-14);
        }
    }

    #[test]
    fn projection() {
        let rho = mixed_state(0.3).unwrap();
        assert!(project_to_physical(&rho).max_abs_diff(&rho) < 1e-10);
        let raw = DensityMatrix::diagonal([1.1, 0.0, 0.0, -0.1]).unwrap();
        let p = project_to_physical(&raw);
        assert!(p.max_abs_diff(&DensityMatrix::diagonal([1.0, 0.0, 0.0, 0.0]).unwrap()) < 1e-12);
        let twice = project_to_physical(&p);
        assert!(twice.max_abs_diff(&p) < 1e-10);
    }

    #[test]
    fn parameter_counts() {
        assert_eq!(parameter_count(2, true).unwrap(), 2);
        assert_eq!(parameter_count(4, true).unwrap(), 6);
        assert_eq!(parameter_count(4, false).unwrap(), 15);
        assert_eq!(parameter_count(2, false).unwrap(), 3);
        assert!(parameter_count(1, false).is_err());
    }

    #[test]
    fn scheme_file() {
        let mut text = String::from("arm1,arm2\n");
        for (a, b) in table1_settings() {
            text.push_str(&format!("{a},{b}\n"));
        }
        let s = read_scheme_csv(text.as_bytes()).unwrap();
        assert_eq!(s.settings(), table1_scheme().settings());
        assert!(read_scheme_csv("arm1,arm2\nH,H\n".as_bytes()).is_err());
    }

    #[test]
    fn diagnostics() {
        let rho = DensityMatrix::from_pure(&state_from_epsilon(1.0, 0.0).unwrap());
        let d = diagnose(&rho, Some((1.0, 0.0))).unwrap();
        assert_abs_diff_eq!(d.fidelity.unwrap(), 1.0, epsilon = 1e-12);
        assert!(d.is_physical);
        assert_abs_diff_eq!(d.purity, 1.0, epsilon = 1e-12);
    }
}
