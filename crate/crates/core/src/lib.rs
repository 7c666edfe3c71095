//! Symbol-level simulator for SISO X-networks with alternating CSIT.
//!
//! Transmitters alternate between perfect, delayed and no knowledge of the
//! channels into each receiver. The schemes here spend some slots creating
//! interference on purpose, then use delayed CSIT to replay that
//! interference exactly where it can be cancelled while it doubles as new
//! information elsewhere.
//!
//! ```
//! use altcsit::channel::{sample_channel, NoiseConfig};
//! use altcsit::schemes::{build_plan, decode, run, SchemeId, SymbolGrid};
//!
//! let id = SchemeId::Scheme1;
//! let pattern = "DD,PN,NP".parse().unwrap();
//! let channel = sample_channel(2, 2, 3, 42).unwrap();
//! let symbols = SymbolGrid::for_scheme(id, 42).unwrap();
//! let plan = build_plan(id, &pattern, &channel, &symbols).unwrap();
//! let ledger = run(&plan, &channel, &NoiseConfig::noiseless()).unwrap();
//! let got = decode(&ledger, 0, &plan, &channel).unwrap();
//! for (s, v) in got.symbols.iter().zip(&got.values) {
//!     assert!((symbols.get(*s).unwrap() - v).norm() < 1e-9);
//! }
//! ```

pub mod channel;
pub mod csit;
pub mod error;
pub mod estimation;
pub mod region;
pub mod rng;
pub mod schemes;
mod serde_complex;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/channel.md")]
    mod channel {}
    #[doc = include_str!("../../../book/src/csit.md")]
    mod csit {}
    #[doc = include_str!("../../../book/src/schemes.md")]
    mod schemes {}
    #[doc = include_str!("../../../book/src/region.md")]
    mod region {}
    #[doc = include_str!("../../../book/src/estimation.md")]
    mod estimation {}
    #[doc = include_str!("../../../README.md")]
    mod readme {}
}
