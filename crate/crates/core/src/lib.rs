//! Differential privacy and min-entropy leakage over adjacency graphs.
//!
//! Channels are finite row-stochastic matrices of exact rationals. The
//! crate verifies ε-differential privacy against an adjacency graph,
//! measures Rényi min-entropy leakage and binary-gain utility, evaluates
//! the closed-form bounds that hold on distance-regular and VT⁺ graphs,
//! rewrites DP matrices into symmetric canonical form, and synthesizes the
//! mechanism that attains the utility bound.
//!
//! ```
//! use dpleak_core::{bounds, graphs, mechanisms, PrivacyParameter};
//!
//! let g = graphs::build_clique(6).unwrap();
//! let pp = PrivacyParameter::from_ratio_str("1/2").unwrap();
//! let mech = mechanisms::optimal_mechanism(&g, &pp).unwrap();
//! let bound = bounds::utility_bound(&graphs::uniform_profile(&g).unwrap(), &pp);
//! assert_eq!(mech.normalization, bound.probability.unwrap());
//! ```

pub mod bounds;
pub mod channels;
pub mod error;
pub mod exact;
pub mod graphs;
pub mod io;
pub mod mechanisms;
pub mod oracle;
pub mod transforms;

pub use channels::{ChannelMatrix, DpAudit, PrivacyParameter, Prior};
pub use error::{Error, Result};
pub use exact::Rational;
pub use graphs::Graph;
