//! Observables computed from Floquet spectra and evolved states.

pub mod fidelity;
pub mod husimi;
pub mod ldos;
pub mod overlap;
pub mod scan;
pub mod spacing;
pub mod theory;

pub use fidelity::{fidelity_series, ExponentialFit, FidelitySeries, InitialState, ShortTimeFit};
pub use husimi::{husimi, HusimiGrid};
pub use ldos::{ldos, Ldos};
pub use overlap::{eigenstate_entropy, overlap_matrix, OverlapMatrix};
pub use scan::{
    adaptive_threshold, entropy_scan, find_threshold, EntropyPoint, EntropyScan, Threshold, ThresholdSearch,
};
pub use spacing::{parity_sectors, spacing_statistics, SpacingStats};
pub use theory::{Constants, Formula, ModelKind, TheoryPrediction};
