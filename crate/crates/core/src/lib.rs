//! Simulation and analysis of tunable polarization-entangled photon pairs.
//!
//! * [`polarization`]: Jones vectors, two-photon states, density matrices.
//! * [`source`]: pump settings and imperfections to emitted state.
//! * [`measurement`]: coincidence probabilities, minima, fringes, Poisson counts.
//! * [`tomography`]: 16-setting linear-inversion state reconstruction.
//! * [`hardy`]: Hardy angles, Hardy fraction and the local-realism test.
//! * [`repro`]: reference checks against the shipped fixture data.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fixtures;
pub mod hardy;
pub mod measurement;
pub mod optimize;
pub mod polarization;
pub mod random;
pub mod repro;
pub mod source;
pub mod tomography;

pub use error::{Error, Result};
pub use hardy::{
    find_optimal_epsilon, hardy_angles, hardy_band, hardy_curve, hardy_fraction, hardy_test, HardyConfig, HardyData,
    HardyResult,
};
pub use measurement::{
    accidental_rate, coincidence_probability, fringe, minima_angle, simulate_counts, visibility, AnalyzerSetting,
    CountRecord, NoiseConfig, SettingPair,
};
pub use polarization::{
    analyzer_projection, entanglement_entropy, linear_state, named_state, waveplate_operator, DensityMatrix,
    JonesVector, StateName, TwoPhotonState, Waveplate,
};
pub use source::{apply_crosstalk, effective_epsilon, mixed_state, pump_to_state, state_from_epsilon, SourceConfig};
pub use tomography::{
    parameter_count, probability_vector, project_to_physical, reconstruct, table1_scheme, TomographyScheme,
};
