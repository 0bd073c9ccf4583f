//! Normalized Nash equilibria of generalized Nash equilibrium problems with
//! shared constraints.
//!
//! Instances are small and described in JSON with polynomial and rational
//! expressions ([`instance`], [`expr`]). Given weights `r` ([`kkt::RatioParameters`])
//! the library enumerates normalized KKT points ([`solver`]), certifies
//! constraint qualifications and nondegeneracy ([`certify`]) and sweeps the
//! ratio `r^1 / r^2` for two-player games ([`sweep`]).
//!
//! ```
//! use normnash::fixtures::load_fixture;
//! use normnash::kkt::RatioParameters;
//! use normnash::solver::{enumerate_normalized_kkt, SolveConfig};
//!
//! let (inst, _) = load_fixture("ex4_perturbed").unwrap();
//! let r = RatioParameters::uniform(2);
//! let report = enumerate_normalized_kkt(&inst, &r, &SolveConfig::new(inst.dim())).unwrap();
//! assert_eq!(report.points.len(), 1);
//! let x = &report.points[0].point.x;
//! assert!((x[0] - 2.0 / 3.0).abs() < 1e-8 && (x[1] - 1.0 / 3.0).abs() < 1e-8);
//! ```

pub mod certify;
pub mod derivcheck;
mod error;
pub mod expr;
pub mod fixtures;
pub mod instance;
pub mod kkt;
pub mod numerics;
pub mod solver;
pub mod sweep;

pub use error::{Error, Result};

// Compile and run the guide's snippets as doctests.
#[cfg(doctest)]
mod guide {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/instances.md")]
    pub mod instances {}
    #[doc = include_str!("../../../book/src/normalized_kkt.md")]
    pub mod normalized_kkt {}
    #[doc = include_str!("../../../book/src/solving.md")]
    pub mod solving {}
    #[doc = include_str!("../../../book/src/certification.md")]
    pub mod certification {}
    #[doc = include_str!("../../../book/src/sweeps.md")]
    pub mod sweeps {}
    #[doc = include_str!("../../../book/src/cli.md")]
    pub mod cli {}
}
