//! Square-integrable representations of locally compact groups, modulo a
//! relatively central subgroup.
//!
//! The crate works on concrete charts: the polarized and standard
//! Weyl–Heisenberg groups, the affine group `R^n ⋊ R^+` and a
//! `(3n+4)`-dimensional group whose relatively central subgroup is normal but
//! not central. On top of these it provides multipliers and central
//! extensions, sampled representations, the measure class `M_{G,K}` through
//! explicit densities, induced representations, and the generalized
//! wavelet/coherent-state transforms with their Duflo–Moore operators.

pub mod dsp;
pub mod error;
pub mod group;
pub mod induced;
pub mod io;
pub mod measures;
pub mod multiplier;
pub mod quadrature;
pub mod rep;
pub mod state;
pub mod sum;
pub mod transform;
pub mod vectors;
pub mod verify;

pub use error::{Error, Result};
pub use num_complex::Complex64;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/groups.md")]
    mod groups {}
    #[doc = include_str!("../../../book/src/multipliers.md")]
    mod multipliers {}
    #[doc = include_str!("../../../book/src/representations.md")]
    mod representations {}
    #[doc = include_str!("../../../book/src/measures.md")]
    mod measures {}
    #[doc = include_str!("../../../book/src/transforms.md")]
    mod transforms {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
