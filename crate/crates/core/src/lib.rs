//! Fisher-information functionals `𝓘`, `𝓠`, `𝓓` and the log-convexity defect
//! `𝓘𝓓 - 𝓠²` for exponential families on tori, their Gaussian-envelope
//! transfers to Euclidean space, simplex wave systems, product/mixture
//! compositions and the heat flow.

pub mod asymptotics;
pub mod compose;
pub mod error;
pub mod flow;
pub mod jets;
pub mod quadrature;
pub mod report;
pub mod simplex;
mod spectral;
pub mod torus2d;
pub mod transfer;

pub use error::{Error, Result};
pub use jets::{
    integrands_at, jet_of_log_from_density_jet, FunctionalTriple, IntegrandValues, Jet, LogDensityJet,
};
pub use quadrature::{haar_average, PeriodicGrid};
pub use torus2d::{torus_functionals, TorusExpFamily, TriadWaveSystem};
pub use transfer::{euclidean_functionals, EnvelopeFamily};
