//! Peeling decoder over the difference stream.
//!
//! The decoder consumes the remote stream in index order, subtracts the
//! locally generated symbol for the same index, and peels: any pure cell
//! yields one difference item, which is then cancelled out of every other
//! buffered cell it maps to. Recovered items keep a live mapper so they can
//! be cancelled from cells that arrive later. Reconciliation is finished
//! exactly when cell 0 is reduced to zero, because every difference item is
//! mapped to index 0.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::encoder::{Encoder, EncoderMode};
use crate::error::{Error, Result};
use crate::mapping::{Mapper, MappingProfile};
use crate::symbol::{subtract, CodedSymbol, Direction, HashKey, HashedItem, Item};

/// Outcome of a completed reconciliation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reconciliation {
    /// Items exclusive to the remote set (difference count +1).
    pub remote_only: Vec<Item>,
    /// Items exclusive to the local set (difference count -1).
    pub local_only: Vec<Item>,
}

#[derive(Debug, Clone)]
struct Recovered {
    hashed: HashedItem,
    /// +1 if exclusive to the remote set, -1 if local.
    sign: i64,
    mapper: Mapper,
}

impl Recovered {
    fn cancel_direction(&self) -> Direction {
        if self.sign > 0 {
            Direction::Remove
        } else {
            Direction::Add
        }
    }
}

/// Streaming state machine recovering the symmetric difference.
#[derive(Debug)]
pub struct Decoder {
    key: HashKey,
    profile: MappingProfile,
    local: Encoder,
    cells: Vec<CodedSymbol>,
    worklist: Vec<usize>,
    recovered: Vec<Recovered>,
    /// (next mapped index, recovered slot) for cancelling recovered items
    /// from cells not yet received.
    future: BinaryHeap<Reverse<(u64, usize)>>,
    complete: bool,
    integrity_failed: bool,
}

impl Decoder {
    pub fn new(item_len: usize, profile: MappingProfile, key: HashKey) -> Result<Self> {
        let local = Encoder::new(item_len, profile.clone(), key, EncoderMode::Streaming)?;
        Ok(Decoder {
            key,
            profile,
            local,
            cells: Vec::new(),
            worklist: Vec::new(),
            recovered: Vec::new(),
            future: BinaryHeap::new(),
            complete: false,
            integrity_failed: false,
        })
    }

    pub fn with_local_set<I>(
        item_len: usize,
        profile: MappingProfile,
        key: HashKey,
        items: I,
    ) -> Result<Self>
    where
        I: IntoIterator<Item = Item>,
    {
        let mut d = Decoder::new(item_len, profile, key)?;
        for item in items {
            d.add_local(item)?;
        }
        Ok(d)
    }

    /// Register a local item; only possible before the first ingest.
    pub fn add_local(&mut self, item: Item) -> Result<()> {
        self.local.add(item)
    }

    pub fn item_len(&self) -> usize {
        self.local.item_len()
    }

    /// Number of remote cells consumed so far.
    pub fn cells_ingested(&self) -> u64 {
        self.cells.len() as u64
    }

    /// Difference items recovered so far (both sides).
    pub fn recovered_len(&self) -> usize {
        self.recovered.len()
    }

    /// True once cell 0 has been reduced to the zero symbol.
    pub fn is_complete(&self) -> bool {
        self.complete
    }

    pub fn integrity_failed(&self) -> bool {
        self.integrity_failed
    }

    /// Consume the next remote cell (cells must arrive in index order,
    /// starting at 0). A no-op once decoding is complete.
    pub fn ingest(&mut self, remote: &CodedSymbol) -> Result<()> {
        if self.integrity_failed {
            return Err(Error::IntegrityFailure);
        }
        if self.complete {
            return Ok(());
        }
        if remote.sum.len() != self.local.item_len() {
            return Err(Error::LengthMismatch {
                expected: self.local.item_len(),
                got: remote.sum.len(),
            });
        }

        let idx = self.cells.len() as u64;
        let local_cell = self.local.emit_next();
        let mut diff = subtract(remote, &local_cell)?;

        // Already-recovered items mapped to this index are cancelled before
        // the cell is buffered.
        while let Some(&Reverse((next, slot))) = self.future.peek() {
            if next > idx {
                break;
            }
            self.future.pop();
            let rec = &mut self.recovered[slot];
            diff.apply(&rec.hashed, rec.cancel_direction());
            let following = rec.mapper.next_index();
            self.future.push(Reverse((following, slot)));
        }

        self.cells.push(diff);
        self.worklist.push(idx as usize);
        self.peel();
        Ok(())
    }

    /// Run peeling to a fixed point over the buffered cells.
    fn peel(&mut self) {
        let max_index = (self.cells.len() - 1) as u64;
        while let Some(idx) = self.worklist.pop() {
            if !self.cells[idx].is_pure(&self.key) {
                continue;
            }
            let cell = &self.cells[idx];
            let hashed = HashedItem {
                item: Item::from(cell.sum.as_slice()),
                checksum: cell.checksum,
            };
            let sign = cell.count;

            // Re-derive the item's mapping. If it does not cover the index
            // we peeled it from, the checksum only matched by collision and
            // the session is corrupt.
            let mut mapper = Mapper::new(&hashed, &self.profile);
            let mut mapped = Vec::new();
            let mut next = mapper.next_index();
            while next <= max_index {
                mapped.push(next);
                next = mapper.next_index();
            }
            if !mapped.contains(&(idx as u64)) {
                self.integrity_failed = true;
                return;
            }

            let rec = Recovered { hashed, sign, mapper };
            for &j in &mapped {
                self.cells[j as usize].apply(&rec.hashed, rec.cancel_direction());
                self.worklist.push(j as usize);
            }
            let slot = self.recovered.len();
            self.future.push(Reverse((next, slot)));
            self.recovered.push(rec);
        }
        self.complete = !self.cells.is_empty() && self.cells[0].is_zero();
    }

    /// The recovered symmetric difference, attributed by side.
    pub fn result(&self) -> Result<Reconciliation> {
        if self.integrity_failed {
            return Err(Error::IntegrityFailure);
        }
        if !self.complete {
            return Err(Error::NotComplete);
        }
        let mut remote_only = Vec::new();
        let mut local_only = Vec::new();
        for rec in &self.recovered {
            if rec.sign > 0 {
                remote_only.push(rec.hashed.item.clone());
            } else {
                local_only.push(rec.hashed.item.clone());
            }
        }
        Ok(Reconciliation {
            remote_only,
            local_only,
        })
    }
}
