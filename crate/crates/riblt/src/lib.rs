//! Rateless set reconciliation.
//!
//! Two parties each hold a set of fixed-length byte strings. One side turns
//! its set into an unbounded stream of coded symbols; the other subtracts
//! its own stream cell by cell and peels the difference out of whatever
//! prefix it has received. Communication is proportional to the size of the
//! symmetric difference, not the sets, and neither side needs to guess the
//! difference size in advance: the requester simply stops reading once
//! decoding completes.
//!
//! The crate provides the codec ([`Encoder`], [`Decoder`]), the index
//! mapping that drives it ([`mapping`]), a byte-exact stream format
//! ([`wire`]), a two-party sync protocol over arbitrary byte transports and
//! TCP ([`session`]), a classical fixed-size table for comparison
//! ([`baseline`]), and the numeric and Monte Carlo tooling used to verify
//! the codec's communication overhead ([`analysis`], [`sim`]).

pub mod analysis;
pub mod baseline;
pub mod decoder;
pub mod encoder;
pub mod error;
pub mod mapping;
pub mod session;
pub mod sim;
mod sip;
pub mod symbol;
pub mod wire;

pub use decoder::{Decoder, Reconciliation};
pub use encoder::{Encoder, EncoderMode};
pub use error::{Error, Result};
pub use mapping::{Mapper, MappingProfile};
pub use symbol::{CodedSymbol, HashKey, HashedItem, Item};
