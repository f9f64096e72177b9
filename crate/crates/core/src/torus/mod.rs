//! Spectral realization of the deformation machinery on flat tori.
pub mod conjugated;
pub mod ddj;
pub mod deform;
pub mod fourier;
pub mod hodge;
pub mod lie;
pub mod period;
pub mod spin7;
pub use conjugated::{exp_act, ConjugatedD, SeriesInfo};
pub use deform::{deform, residual_oracle, DeformationSeries, Deformer, Route};
pub use fourier::{dform, FourierCL1Field, FourierCL2Field, FourierForm, Freq};
pub use hodge::{topological_check, HodgePackage, TopologicalReport};
pub use lie::{bracket_check, lie_derivative, BracketReport};
pub use spin7::{spin7_correction, CorrectionReport, Spin7Corrector};
pub use period::{period, period_derivative, period_invariance, torelli_rank, InvarianceReport, TorelliReport};
pub use ddj::{ddj_check, sl_sequence_check, DdjReport, SequenceReport};
