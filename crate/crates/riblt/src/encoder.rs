//! Incremental encoder: turns a set into an unbounded coded-symbol stream.
//!
//! Items sit in a min-priority queue keyed by the next index each item is
//! mapped to, so emitting the next symbol touches only the items mapped to
//! it instead of scanning the whole set. Already-emitted symbols never
//! change: the stream is append-only.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use crate::error::{Error, Result};
use crate::mapping::{Mapper, MappingProfile};
use crate::symbol::{CodedSymbol, Direction, HashKey, HashedItem, Item};

/// Whether the encoder retains the symbols it has emitted.
///
/// A cached encoder can mutate its set after emission (patching the retained
/// prefix in place) and re-serve the identical prefix to many peers. A
/// streaming encoder forgets emitted symbols and only accepts mutations
/// before the first emission.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EncoderMode {
    Streaming,
    Cached,
}

#[derive(Debug, Clone)]
struct Slot {
    hashed: HashedItem,
    mapper: Mapper,
    /// First index >= the emission frontier that this item maps to.
    next: u64,
}

/// Resumable coded-symbol generator for one set.
#[derive(Debug, Clone)]
pub struct Encoder {
    item_len: usize,
    profile: MappingProfile,
    key: HashKey,
    mode: EncoderMode,
    slots: Vec<Option<Slot>>,
    /// Checksum -> slots holding an item with that checksum.
    members: HashMap<u64, Vec<usize>>,
    queue: BinaryHeap<Reverse<(u64, usize)>>,
    next_index: u64,
    cache: Vec<CodedSymbol>,
    live: usize,
}

impl Encoder {
    pub fn new(
        item_len: usize,
        profile: MappingProfile,
        key: HashKey,
        mode: EncoderMode,
    ) -> Result<Self> {
        if item_len == 0 {
            return Err(Error::InvalidParameter("item length must be >= 1".into()));
        }
        profile.validate()?;
        Ok(Encoder {
            item_len,
            profile,
            key,
            mode,
            slots: Vec::new(),
            members: HashMap::new(),
            queue: BinaryHeap::new(),
            next_index: 0,
            cache: Vec::new(),
            live: 0,
        })
    }

    pub fn with_items<I>(
        item_len: usize,
        profile: MappingProfile,
        key: HashKey,
        mode: EncoderMode,
        items: I,
    ) -> Result<Self>
    where
        I: IntoIterator<Item = Item>,
    {
        let mut enc = Encoder::new(item_len, profile, key, mode)?;
        for item in items {
            enc.add(item)?;
        }
        Ok(enc)
    }

    pub fn item_len(&self) -> usize {
        self.item_len
    }

    pub fn profile(&self) -> &MappingProfile {
        self.profile_ref()
    }

    fn profile_ref(&self) -> &MappingProfile {
        &self.profile
    }

    pub fn key(&self) -> &HashKey {
        &self.key
    }

    pub fn mode(&self) -> EncoderMode {
        self.mode
    }

    /// Number of items currently in the set.
    pub fn len(&self) -> usize {
        self.live
    }

    pub fn is_empty(&self) -> bool {
        self.live == 0
    }

    /// Index of the next symbol [`emit_next`](Self::emit_next) will produce.
    pub fn next_index(&self) -> u64 {
        self.next_index
    }

    /// Symbols emitted so far (cached mode only).
    pub fn cached_prefix(&self) -> Option<&[CodedSymbol]> {
        match self.mode {
            EncoderMode::Cached => Some(&self.cache),
            EncoderMode::Streaming => None,
        }
    }

    fn find_member(&self, item: &Item, checksum: u64) -> Option<usize> {
        self.members.get(&checksum)?.iter().copied().find(|&slot| {
            self.slots[slot]
                .as_ref()
                .is_some_and(|s| s.hashed.item == *item)
        })
    }

    /// Add an item to the set. In cached mode the retained prefix is patched
    /// retroactively so it equals a from-scratch encoding of the new set.
    pub fn add(&mut self, item: Item) -> Result<()> {
        if item.len() != self.item_len {
            return Err(Error::LengthMismatch {
                expected: self.item_len,
                got: item.len(),
            });
        }
        if self.next_index > 0 && self.mode == EncoderMode::Streaming {
            return Err(Error::StreamingMutation);
        }
        let hashed = HashedItem::new(item, &self.key);
        if self.find_member(&hashed.item, hashed.checksum).is_some() {
            return Err(Error::InvalidParameter("duplicate item".into()));
        }

        let mut mapper = Mapper::new(&hashed, &self.profile);
        let mut next = mapper.next_index();
        while next < self.next_index {
            self.cache[next as usize].apply(&hashed, Direction::Add);
            next = mapper.next_index();
        }

        let slot = self.slots.len();
        self.members.entry(hashed.checksum).or_default().push(slot);
        self.slots.push(Some(Slot { hashed, mapper, next }));
        self.queue.push(Reverse((next, slot)));
        self.live += 1;
        Ok(())
    }

    /// Remove an item currently in the set; rejects absent items since the
    /// count bookkeeping would otherwise corrupt.
    pub fn remove(&mut self, item: &Item) -> Result<()> {
        if item.len() != self.item_len {
            return Err(Error::LengthMismatch {
                expected: self.item_len,
                got: item.len(),
            });
        }
        if self.next_index > 0 && self.mode == EncoderMode::Streaming {
            return Err(Error::StreamingMutation);
        }
        let hashed = HashedItem::new(item.clone(), &self.key);
        let slot = self
            .find_member(item, hashed.checksum)
            .ok_or(Error::ItemAbsent)?;

        // XOR the item back out of the emitted prefix.
        let mut mapper = Mapper::new(&hashed, &self.profile);
        let mut idx = mapper.next_index();
        while idx < self.next_index {
            self.cache[idx as usize].apply(&hashed, Direction::Remove);
            idx = mapper.next_index();
        }

        self.slots[slot] = None; // queue entry is dropped lazily on pop
        if let Some(bucket) = self.members.get_mut(&hashed.checksum) {
            bucket.retain(|&s| s != slot);
        }
        self.live -= 1;
        Ok(())
    }

    /// Produce the next symbol of the stream and advance the frontier.
    pub fn emit_next(&mut self) -> CodedSymbol {
        let mut symbol = CodedSymbol::zero(self.item_len);
        while let Some(&Reverse((idx, slot))) = self.queue.peek() {
            if idx > self.next_index {
                break;
            }
            debug_assert_eq!(idx, self.next_index);
            self.queue.pop();
            let Some(state) = self.slots[slot].as_mut() else {
                continue; // removed item
            };
            symbol.apply(&state.hashed, Direction::Add);
            state.next = state.mapper.next_index();
            self.queue.push(Reverse((state.next, slot)));
        }
        if self.mode == EncoderMode::Cached {
            self.cache.push(symbol.clone());
        }
        self.next_index += 1;
        symbol
    }

    /// The first `m` symbols of the stream.
    ///
    /// In cached mode this always returns the prefix starting at index 0,
    /// extending the cache as needed; in streaming mode it is `m` successive
    /// [`emit_next`](Self::emit_next) calls from the current frontier.
    pub fn emit_prefix(&mut self, m: usize) -> Vec<CodedSymbol> {
        match self.mode {
            EncoderMode::Cached => {
                while self.cache.len() < m {
                    self.emit_next();
                }
                self.cache[..m].to_vec()
            }
            EncoderMode::Streaming => (0..m).map(|_| self.emit_next()).collect(),
        }
    }

    /// The symbol at stream index `i` (cached mode only).
    pub fn symbol_at(&mut self, i: u64) -> Result<CodedSymbol> {
        if self.mode != EncoderMode::Cached {
            return Err(Error::InvalidParameter(
                "symbol_at requires a cached encoder".into(),
            ));
        }
        while (self.cache.len() as u64) <= i {
            self.emit_next();
        }
        Ok(self.cache[i as usize].clone())
    }
}
