//! Pseudo-unitary evolutions on finite-dimensional Krein spaces.
//!
//! The crate builds evolutions `R(t, s)` of Klein–Gordon type equations,
//! the temporal propagator kernels (Pauli–Jordan, forward, backward, in/out
//! frequency bisolutions, Feynman and anti-Feynman inverses), and the
//! Gaussian quantization data (Bogoliubov blocks, vacuum overlaps, in-out
//! two-point functions) that go with them. A truncated Fock space serves as
//! a brute-force oracle for the quantization formulas.
//!
//! ```
//! use kreinprop::krein::{analyze_pair, check_admissible, mode_involution, KreinSpace};
//!
//! let space = KreinSpace::kg(1);
//! let s_in = check_admissible(&space, &mode_involution(1.0)).unwrap();
//! let s_out = check_admissible(&space, &mode_involution(3.0)).unwrap();
//! let pair = analyze_pair(&space, &s_in, &s_out).unwrap();
//! assert!((pair.residuals.c_norm - 0.5).abs() < 1e-12);
//! ```

pub mod error;
pub mod evolution;
pub mod kleingordon;
pub mod krein;
pub mod linalg;
pub mod quant;
pub mod random;
pub mod registry;

pub use error::{Error, Result};
pub use linalg::{CMat, CVec, C64};
