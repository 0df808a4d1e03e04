//! Matrix-valued complex differential forms on ℂ².
//!
//! The crate covers the exterior calculus of `M_n(ℂ)`-valued forms (wedge,
//! adjoint, Dolbeault operators), Hodge duality for the Euclidean and
//! Minkowski metrics, Yang-Mills curvature and currents, constructors for
//! instanton families, and variational checks of the Yang-Mills functional.

pub mod algebra;
pub mod checks;
pub mod error;
pub mod forms;
pub mod hodge;
pub mod instantons;
pub mod jet;
pub mod quadrature;
pub mod scenario;
pub mod support;
pub mod variational;
pub mod yang_mills;

pub use algebra::{CMatrix, TraceKind};
pub use error::{Error, Result};
pub use forms::{BasisIndex, DPart, DerivativeStrategy, Form, FormField, FormJet, FormValue, Generator, Point, PolyCoefficient, Wirtinger};
