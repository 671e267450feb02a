//! AS-level path inference and decoy-router placement analytics.
//!
//! The pipeline reads BGP RIB dumps and AS relationships ([`ingest`],
//! [`topology`]), infers one path from every AS to each target prefix
//! ([`inference`]), ranks ASes by how many paths they intercept
//! ([`placement`]), picks key routers inside chosen ASes from traceroute data
//! ([`routermap`]) and reports coverage, collateral damage and cost
//! ([`analysis`]).

pub mod analysis;
pub mod cli;
pub mod error;
pub mod inference;
pub mod ingest;
pub mod placement;
pub mod routermap;
pub mod synth;
pub mod topology;
pub mod types;

pub use error::{Error, Result};
pub use types::{Asn, CountryCode, Prefix, RouterId};
