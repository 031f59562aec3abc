//! Collar geometry, quadratic differentials on thin collars, model spaces
//! of holomorphic quadratic differentials and their dual bases.

pub mod acceptance;
pub mod collar;
pub mod config;
pub mod dualbasis;
pub mod error;
pub mod extended;
pub mod hexagon;
pub mod linalg;
pub mod modelspace;
pub mod qdiff;
pub mod quadrature;
pub mod special;
pub mod verify;

pub use error::{Error, Result};
