//! Level-one p-adic modular form toolkit.
//!
//! The crate is organised bottom-up:
//!
//! * [`padic`]: fixed-precision arithmetic in `Z/p^N`, the ramified quadratic
//!   extension `Q_p(sqrt p)`, valuations and Newton polygons.
//! * [`qexp`]: truncated q-expansions: Eisenstein series, `Delta`, Miller
//!   bases, Hecke/U/V operators, the theta operator, p-stabilisation and
//!   congruence checks.
//! * [`upslopes`]: the `U_p` operator on a Katz basis of overconvergent forms,
//!   its characteristic series and slope sequences.
//! * [`galrep`]: symbolic mod-p local shapes on inertia, the reduction
//!   classifier for slopes below 2 and the twist-compatibility machinery.
//! * [`thetalift`]: the weight-grid search producing a classical eigenform `g`
//!   with `g = theta^(kappa-1) f (mod p)`.

pub mod error;
pub mod galrep;
mod linalg;
pub mod padic;
pub mod qexp;
pub mod thetalift;
pub mod upslopes;

pub use error::{Error, Result};
pub use padic::{NewtonPolygon, PadicScalar, RamifiedScalar, Rational, Val};
pub use qexp::{EigenformRecord, QSeries};

/// Default number of p-adic digits carried by public operations.
pub const DEFAULT_PRECISION: u32 = 10;

/// Deterministic property-test configuration shared by the unit tests.
#[cfg(test)]
pub(crate) fn test_config(cases: u32) -> proptest::test_runner::Config {
    proptest::test_runner::Config {
        cases,
        rng_seed: proptest::test_runner::RngSeed::Fixed(0x7e7a_5eed),
        failure_persistence: None,
        ..Default::default()
    }
}
