//! Group towers built by iterated HNN extensions over a free-by-cyclic base.
//!
//! The crate decides the word problem by normal forms, measures lengths with
//! Cayley balls and retraction lower bounds, verifies certificate sequences,
//! constructs explicit avoidant paths and estimates divergence at small radii.
//! Numeric code is generic over [`scalar::Real`]; the aliases below fix the
//! scalar type.

pub mod certificates;
pub mod divergence;
pub mod endo;
pub mod metrics;
pub mod normal_form;
pub mod scalar;
pub mod tower;
pub mod witness;
pub mod words;

pub use certificates::{CertError, Certificate, CertificateReport, CertificateSequence, DerivedConstants, Selection};
pub use divergence::{Avoidant, AvoidanceQuery, Caps, CornerProbe, DeltaReport, DivError, Estimator};
pub use endo::{EndoError, FreeEndo};
pub use metrics::{CayleyBall, DistortionTable, Length, MetricsError, Retraction, Retractions};
pub use normal_form::{Elem, Group, NfError, NormalForm};
pub use scalar::Real;
pub use tower::{GroupSpec, TowerError};
pub use witness::{PathWitness, WitnessError, WitnessKit, WitnessReport};
pub use words::{Alphabet, Letter, Word, WordError};

pub type InverseDistortionF64 = metrics::InverseDistortion<f64>;
pub type InverseDistortionF32 = metrics::InverseDistortion<f32>;
pub type PiecewiseLinearF64 = metrics::PiecewiseLinear<f64>;
pub type ExponentReportF64 = certificates::ExponentReport<f64>;
pub type ExponentReportF32 = certificates::ExponentReport<f32>;
