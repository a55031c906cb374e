//! Stopping-time analysis for collaborative file download by a two-vehicle
//! platoon from roadside base stations.
//!
//! Each round, a base station sends `m` packets to each vehicle separately, and
//! the vehicles then share everything over a perfect V2V link. Two delivery
//! schemes are modeled:
//!
//! * **feedback**: each vehicle receives packets drawn at random from those it
//!   is still missing;
//! * **network coding**: each vehicle receives random linear combinations of
//!   all `M` packets over GF(2^q), with no uplink.
//!
//! The crate provides exact stopping-time distributions for both
//! ([`analytic`]), an independent enumeration oracle for the feedback case,
//! finite-field linear algebra ([`gf2q`], [`ffmatrix`]) and a seeded Monte
//! Carlo simulator ([`sim`]).
//!
//! ```
//! use platoon::analytic::{feedback_stopping_pmf, nc_exact_pmf, ProblemSpec};
//!
//! let spec = ProblemSpec::new(10, 1, 8).unwrap();
//! let feedback = feedback_stopping_pmf(&spec);
//! let nc = nc_exact_pmf(&spec);
//! assert!((feedback.total_mass() - 1.0).abs() < 1e-9);
//! assert!(nc.mean() < feedback.mean());
//! ```

#![allow(clippy::needless_range_loop)]

pub mod analytic;
pub mod ffmatrix;
pub mod gf2q;
pub mod sim;

pub use analytic::{ProblemSpec, RoundPmf};
pub use ffmatrix::{CoeffMatrix, EchelonBasis};
pub use gf2q::{FieldContext, FieldElement};
pub use sim::{Scheme, SeededRng};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/fields.md")]
    mod fields {}
    #[doc = include_str!("../../../book/src/rank.md")]
    mod rank {}
    #[doc = include_str!("../../../book/src/feedback.md")]
    mod feedback {}
    #[doc = include_str!("../../../book/src/network-coding.md")]
    mod network_coding {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
}
