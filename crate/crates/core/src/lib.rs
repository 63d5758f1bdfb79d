//! Numerical toolkit for rational inner functions on the bidisc and the
//! composition operators they induce between weighted Bergman spaces.

pub mod error;
pub mod measure;
pub mod operator;
pub mod poly;
pub mod rif;
pub mod singularity;
pub mod stability;
pub mod torus;

pub use error::{Error, Result};
pub use poly::BiPolynomial;
pub use rif::{build_pzeta, rotate_symbol, zoo, RationalInnerFunction, SymbolPair};
pub use singularity::{find_singularities, nt_limit, NtLimitReport};
pub use stability::{stability_check, zero_set_interior_check, StabilityReport};
pub use torus::{BoundaryPoint, Neighborhood};
