//! Fourier-pseudospectral solver for the phase-field diblock copolymer model
//! and its Navier–Stokes coupled variant on doubly periodic domains.

pub mod diagnostics;
pub mod error;
pub mod harness;
pub mod io;
pub mod model;
pub mod scheme_bcp;
pub mod scheme_ns;
pub mod solvers;
pub mod spectral;

pub use error::{GridError, KrylovError, ParamError, StepError, SweepError};
pub use model::{BcpState, ModelParams, NsState};
pub use spectral::{Grid2D, Products, ScalarField, VectorField};
