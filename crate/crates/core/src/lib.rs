//! Finite flat models of étale φ-modules over `l[ϖ]/ϖ^{n+1} ⊗ k`.
//!
//! The crate is layered bottom-up: finite fields and the CRT coefficient
//! ring, truncated Laurent series, φ-modules, lattices encoded as stable
//! subspaces of finite quotients, model enumeration, and the level tower.

pub mod coeff;
pub mod error;
pub mod field;
pub mod frame;
pub mod lattice;
pub mod linalg;
pub mod models;
pub mod phi_module;
pub mod rng;
pub mod series;
pub mod snf;
pub mod tower;
pub mod towers;

pub use coeff::{CoeffRing, Elem};
pub use error::{Error, Result};
pub use field::{Field, Fq};
pub use series::{LaurentSeries, SeriesMatrix};
pub use tower::{make_field_tower, FieldTower};
