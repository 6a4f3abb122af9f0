//! Canonical conformal structure and Cartan quartic of rank-2 distributions
//! on 5-dimensional spaces, computed from the dynamics of abnormal
//! extremals and cross-checked against closed-form structural-function
//! formulas.

pub mod abnormal;
pub mod cone;
pub mod error;
pub mod expr;
pub mod frame;
pub mod linalg;
pub mod models;
pub mod projcurve;
pub mod quartic;

pub use error::{Error, Result};
