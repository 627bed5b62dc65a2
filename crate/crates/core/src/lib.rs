//! Exact distribution of quantum expectation values `<psi|A|psi>` over
//! Haar-random pure states.
//!
//! A [`Spectrum`] compiles into a [`Law`] whose density, CDF, survival
//! function, characteristic function and moment generating function are
//! evaluated from a residue coefficient table. The table is generic over the
//! scalar type; the aliases below name the instantiations in use.

pub mod analysis;
pub mod error;
pub mod io;
pub mod law;
pub mod moments;
pub mod montecarlo;
pub mod quadrature;
pub mod scalar;
pub mod spectrum;
pub mod sum;

pub use error::{Error, Result};
pub use law::{
    compile_law, compile_law_auto, ExactLaw, Law, LawCoefficients, PointMassLaw, PrecisionMode,
    PrecisionPolicy,
};
pub use moments::{MomentMethod, MomentReport};
pub use montecarlo::{GofReport, SampleSet};
pub use scalar::{BigReal, ExtFloat, Field, Real};
pub use spectrum::{build_spectrum, generate, Spectrum, SpectrumKind};

/// Coefficient tables in hardware doubles.
pub type LawCoefficientsF64 = LawCoefficients<f64>;
/// Coefficient tables in hardware singles.
pub type LawCoefficientsF32 = LawCoefficients<f32>;
/// Coefficient tables with an unbounded exponent.
pub type LawCoefficientsExt = LawCoefficients<ExtFloat>;
/// Coefficient tables in software floats.
pub type LawCoefficientsBig = LawCoefficients<BigReal>;
/// Exact rational coefficient tables.
pub type LawCoefficientsExact = LawCoefficients<num_rational::BigRational>;
