//! Numerical laboratory for the normalized first Laplace eigenvalue
//! `λ̄₁ = λ₁ · area` on the 2-torus and the Klein bottle.
//!
//! Every metric in scope is conformally flat, so each computation starts
//! from a flat representative (a [`TorusModulus`] or [`KleinModulus`]) and
//! an optional nonnegative density.
//!
//! - [`moduli`]: lattices, the fundamental domain and closed-form flat spectra.
//! - [`elliptic`]: complete elliptic integrals, Weierstrass ℘ and sphere pullbacks.
//! - [`specsolve`]: Fourier–Galerkin solver for `Δu = λ f u`.
//! - [`revolution`]: Sturm–Liouville reduction of the Klein-bottle metric of revolution.
//! - [`mobius`]: conformal group of the sphere, centering, conformal area, capacity.
//! - [`teich`]: dilatation, Teichmüller distance, eigenvalue continuity certificates.
//! - [`maximize`]: derivative-free maximization of `λ̄₁` inside a conformal class.
//! - [`verify`]: acceptance checks shared by the CLI and the test suite.

pub mod elliptic;
pub mod error;
pub mod maximize;
pub mod mobius;
pub mod moduli;
pub mod revolution;
pub mod specsolve;
pub mod teich;
pub mod verify;

pub use error::{Error, Result};
pub use moduli::{KleinModulus, Lattice, Modulus, Spectrum, Topology, TorusModulus};
pub use specsolve::ConformalFactor;
