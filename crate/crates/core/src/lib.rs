//! Ranks of appearance of primes in Lucas sequences.
//!
//! The crate is organised bottom-up:
//!
//! - [`arith`]: factorisation, arithmetic functions, Legendre symbols, `Li(x)`.
//! - [`quadfield`]: exact arithmetic in `Q(sqrt(D0))` and the exponent `h`.
//! - [`lucas`]: sequence parameters, terms mod `p`, rank and index of appearance.
//! - [`density`]: exact rational densities and the series identities behind them.
//! - [`census`]: segmented, parallel, resumable prime counting.
//! - [`cli`]: the `lucas-rank` command-line front end.

pub mod arith;
pub mod census;
pub mod cli;
pub mod density;
mod error;
pub mod lucas;
pub mod quadfield;

pub use census::{CensusConfig, CensusReport, Verdict};
pub use density::{DensityBranch, DensityReport};
pub use error::{Error, Result};
pub use lucas::{LucasParams, RankRecord};
pub use quadfield::{HResult, QuadElem};
