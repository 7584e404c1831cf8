//! Information-theoretic location and co-location association measures.
//!
//! Starting from a location × activity count matrix (people per occupation
//! per city, plants per industry per region, ...), this crate estimates:
//!
//! - pointwise mutual information `PMI(p_ci) = log(p_ci / (p_c p_i))` between
//!   a location and an activity, the information-theoretic counterpart of the
//!   log revealed-comparative-advantage index;
//! - the co-location distribution `p_ij` of activity pairs sampled from the
//!   same location, and the pairwise association `PMI(p_ij)`;
//! - KL-divergence aggregates: localization of an activity, specialization of
//!   a location, co-dependence of an activity, and the mutual-information
//!   system measures `MI(C,X)` and `MI(X1,X2)`.
//!
//! Estimation is Bayesian: counts are modelled as multinomial draws with a
//! Dirichlet prior (pseudocounts `alpha_ci`, uniform 1 by default), so every
//! probability estimate is strictly positive and every measure carries a
//! posterior mean and standard deviation alongside its point estimate. The
//! analytical approximations are validated against a Monte Carlo oracle that
//! samples the exact Dirichlet posterior ([`mc`]).
//!
//! | unit of analysis    | measure                  | entry point |
//! |---------------------|--------------------------|-------------|
//! | location-activity   | association              | [`location::pmi_point`] |
//! | activity            | localization             | [`aggregates::localization`] |
//! | location            | specialization           | [`aggregates::specialization`] |
//! | system              | overall specialization   | [`aggregates::mutual_information_location`] |
//! | activity-activity   | co-location association  | [`colocation::coloc_pmi`] |
//! | activity            | co-dependence            | [`aggregates::codependence`] |
//! | system              | overall co-dependence    | [`aggregates::mutual_information_coloc`] |

pub mod aggregates;
pub mod assoc;
pub mod bls;
pub mod colocation;
pub mod counts;
pub mod location;
pub mod mc;
pub mod numfmt;
pub mod output;
pub mod posterior;
pub mod svg;

pub use assoc::{AssocCell, AssocKind, AssocMatrix, LogBase};
pub use counts::{CountMatrix, CountsError, ValidationReport};
pub use posterior::{JointProbEstimate, Posterior, PosteriorError, PriorSpec};
