//! Almost-isospectral partners of the hydrogen-like radial Hamiltonian.
//!
//! The crate builds one-, two- and n-parametric families of potentials
//!
//! ```text
//! V_{l-1}^{(k)}(r)  = V_{l-1}(r) - 2 (ln Φ_l^{(k)})''
//! V_{l-2}^{(km)}(r) = V_l(r) + 2 η'(r)
//! ```
//!
//! from the general (λ-dependent) Riccati solutions at the factorization
//! energies `ε_l^{(k)} = -1/(l+k)²`, `k = 0, -1, ..., -(l-1)`, and checks the
//! predicted spectra (new levels, holes) against a Sturm-bisection
//! finite-difference eigensolver that knows nothing about the construction.
//!
//! Modules, bottom-up:
//!
//! * [`specfun`]: Pochhammer symbols, Kummer's `M(a, b, z)`, lower
//!   incomplete gamma, adaptive Simpson quadrature.
//! * [`hydrogen`]: radial grid, Coulomb potential, exact levels and
//!   eigenfunctions.
//! * [`seeds`]: Φ, u and β for one `(l, k, λ)` triple.
//! * [`families`]: first/second order and chained partner potentials,
//!   intertwining operators and missing states.
//! * [`verify`]: discretization, Sturm bisection and the spectrum checks.

// `!(x > 0.0)` guards are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Index loops mirror the stencil formulas.
#![allow(clippy::needless_range_loop)]

mod crum;
pub mod error;
pub mod families;
pub mod hydrogen;
pub mod jet;
pub mod seeds;
pub mod specfun;
pub mod verify;

pub use error::{Error, Result};
pub use families::{FamilySpec, PartnerPotential, Stage};
pub use verify::{SpectrumReport, TridiagonalOperator};

pub use hydrogen::{GridFunction, RadialGrid};
pub use jet::Jet;
pub use seeds::{LambdaDomain, SeedSolution};

