//! Domain types and the coded-symbol algebra.
//!
//! A [`CodedSymbol`] is one cell of the rateless stream: the XOR-sum of the
//! items mapped to it, the XOR-sum of their checksums, and a signed count.
//! Cells form a group under [`add`]/[`subtract`], which is what makes
//! cell-wise subtraction of two streams equal the stream of the symmetric
//! difference.

use crate::error::{Error, Result};
use crate::sip::siphash24;

/// A fixed-length byte string; one element of the set being reconciled.
///
/// All items in one session share the same length.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Item(Vec<u8>);

impl Item {
    pub fn new(bytes: Vec<u8>) -> Self {
        Item(bytes)
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.0
    }
}

impl From<Vec<u8>> for Item {
    fn from(bytes: Vec<u8>) -> Self {
        Item(bytes)
    }
}

impl From<&[u8]> for Item {
    fn from(bytes: &[u8]) -> Self {
        Item(bytes.to_vec())
    }
}

impl<const N: usize> From<[u8; N]> for Item {
    fn from(bytes: [u8; N]) -> Self {
        Item(bytes.to_vec())
    }
}

/// 128-bit key selecting a member of the keyed hash family.
///
/// Both parties must use the same key; differing keys make all checksums
/// incomparable. The all-zero default lets two parties sync without any
/// out-of-band exchange, but offers no protection against adversarially
/// crafted items.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct HashKey(pub [u8; 16]);

impl HashKey {
    pub fn new(bytes: [u8; 16]) -> Self {
        HashKey(bytes)
    }

    fn words(&self) -> (u64, u64) {
        let k0 = u64::from_le_bytes(self.0[..8].try_into().unwrap());
        let k1 = u64::from_le_bytes(self.0[8..].try_into().unwrap());
        (k0, k1)
    }
}

/// 64-bit keyed checksum of an item: SipHash-2-4 under the session key.
pub fn keyed_hash(key: &HashKey, item: &Item) -> u64 {
    keyed_hash_bytes(key, item.as_bytes())
}

/// [`keyed_hash`] over raw bytes.
pub fn keyed_hash_bytes(key: &HashKey, bytes: &[u8]) -> u64 {
    let (k0, k1) = key.words();
    siphash24(k0, k1, bytes)
}

/// An item paired with its keyed checksum.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HashedItem {
    pub item: Item,
    pub checksum: u64,
}

impl HashedItem {
    pub fn new(item: Item, key: &HashKey) -> Self {
        let checksum = keyed_hash(key, &item);
        HashedItem { item, checksum }
    }
}

/// Whether an item is XOR-ed into or out of a cell. The byte effect is
/// identical (XOR is self-inverse); only the count moves in opposite
/// directions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Add,
    Remove,
}

/// One cell of the coded-symbol stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodedSymbol {
    pub sum: Vec<u8>,
    pub checksum: u64,
    pub count: i64,
}

impl CodedSymbol {
    /// The zero symbol for item length `item_len`.
    pub fn zero(item_len: usize) -> Self {
        CodedSymbol {
            sum: vec![0u8; item_len],
            checksum: 0,
            count: 0,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.count == 0 && self.checksum == 0 && self.sum.iter().all(|&b| b == 0)
    }

    /// XOR an item into or out of this cell.
    pub fn apply(&mut self, h: &HashedItem, direction: Direction) {
        debug_assert_eq!(h.item.len(), self.sum.len());
        for (s, b) in self.sum.iter_mut().zip(h.item.as_bytes()) {
            *s ^= b;
        }
        self.checksum ^= h.checksum;
        self.count += match direction {
            Direction::Add => 1,
            Direction::Remove => -1,
        };
    }

    /// Fallible variant of [`apply`](Self::apply) for untrusted inputs.
    pub fn try_apply(&mut self, h: &HashedItem, direction: Direction) -> Result<()> {
        if h.item.len() != self.sum.len() {
            return Err(Error::LengthMismatch {
                expected: self.sum.len(),
                got: h.item.len(),
            });
        }
        self.apply(h, direction);
        Ok(())
    }

    /// A pure cell holds exactly one item: its checksum equals the keyed
    /// hash of its sum. The count test is a cheap pre-filter.
    pub fn is_pure(&self, key: &HashKey) -> bool {
        (self.count == 1 || self.count == -1)
            && keyed_hash_bytes(key, &self.sum) == self.checksum
    }
}

/// Cell-wise difference: XOR sums and checksums, subtract counts.
pub fn subtract(a: &CodedSymbol, b: &CodedSymbol) -> Result<CodedSymbol> {
    if a.sum.len() != b.sum.len() {
        return Err(Error::LengthMismatch {
            expected: a.sum.len(),
            got: b.sum.len(),
        });
    }
    let sum = a.sum.iter().zip(&b.sum).map(|(x, y)| x ^ y).collect();
    Ok(CodedSymbol {
        sum,
        checksum: a.checksum ^ b.checksum,
        count: a.count - b.count,
    })
}

/// Count-summing dual of [`subtract`].
pub fn add(a: &CodedSymbol, b: &CodedSymbol) -> Result<CodedSymbol> {
    if a.sum.len() != b.sum.len() {
        return Err(Error::LengthMismatch {
            expected: a.sum.len(),
            got: b.sum.len(),
        });
    }
    let sum = a.sum.iter().zip(&b.sum).map(|(x, y)| x ^ y).collect();
    Ok(CodedSymbol {
        sum,
        checksum: a.checksum ^ b.checksum,
        count: a.count + b.count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_item(rng: &mut impl Rng, len: usize) -> Item {
        let mut bytes = vec![0u8; len];
        rng.fill(&mut bytes[..]);
        Item::new(bytes)
    }

    #[test]
    fn keyed_hash_is_deterministic() {
        let key = HashKey::new([7u8; 16]);
        let item = Item::from([1u8, 2, 3, 4, 5, 6, 7, 8]);
        assert_eq!(keyed_hash(&key, &item), keyed_hash(&key, &item));
    }

    #[test]
    fn different_keys_give_different_checksums() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut collisions = 0;
        for _ in 0..1000 {
            let item = random_item(&mut rng, 8);
            let k1 = HashKey::new(rng.random());
            let k2 = HashKey::new(rng.random());
            if k1 != k2 && keyed_hash(&k1, &item) == keyed_hash(&k2, &item) {
                collisions += 1;
            }
        }
        assert_eq!(collisions, 0);
    }

    #[test]
    fn output_bits_are_unbiased() {
        // Each of the 64 output bits should be ~0.5 over 1e5 random items.
        let key = HashKey::default();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        const N: usize = 100_000;
        let mut ones = [0u32; 64];
        for _ in 0..N {
            let h = keyed_hash(&key, &random_item(&mut rng, 16));
            for (bit, count) in ones.iter_mut().enumerate() {
                *count += ((h >> bit) & 1) as u32;
            }
        }
        for (bit, count) in ones.iter().enumerate() {
            let freq = *count as f64 / N as f64;
            assert!(
                (freq - 0.5).abs() < 0.01,
                "bit {bit} biased: frequency {freq}"
            );
        }
    }

    #[test]
    fn apply_from_zero_and_inverse() {
        let key = HashKey::default();
        let h = HashedItem::new(Item::from([9u8, 8, 7, 6]), &key);

        let mut cell = CodedSymbol::zero(4);
        cell.apply(&h, Direction::Add);
        assert_eq!(cell.sum, h.item.as_bytes());
        assert_eq!(cell.checksum, h.checksum);
        assert_eq!(cell.count, 1);

        cell.apply(&h, Direction::Remove);
        assert!(cell.is_zero());
    }

    #[test]
    fn apply_twice_cancels_bytes_but_not_count() {
        let key = HashKey::default();
        let h = HashedItem::new(Item::from([0xffu8; 8]), &key);
        let mut cell = CodedSymbol::zero(8);
        cell.apply(&h, Direction::Add);
        cell.apply(&h, Direction::Add);
        assert_eq!(cell.sum, vec![0u8; 8]);
        assert_eq!(cell.checksum, 0);
        assert_eq!(cell.count, 2);
    }

    #[test]
    fn apply_rejects_length_mismatch() {
        let key = HashKey::default();
        let h = HashedItem::new(Item::from([1u8, 2, 3]), &key);
        let mut cell = CodedSymbol::zero(8);
        assert!(matches!(
            cell.try_apply(&h, Direction::Add),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn subtract_self_and_zero() {
        let key = HashKey::default();
        let mut a = CodedSymbol::zero(8);
        a.apply(&HashedItem::new(Item::from([3u8; 8]), &key), Direction::Add);
        a.apply(&HashedItem::new(Item::from([5u8; 8]), &key), Direction::Add);

        assert!(subtract(&a, &a).unwrap().is_zero());
        assert_eq!(subtract(&a, &CodedSymbol::zero(8)).unwrap(), a);
    }

    #[test]
    fn pure_cell_detection() {
        let key = HashKey::default();
        let h = HashedItem::new(Item::from([42u8; 8]), &key);
        let mut cell = CodedSymbol::zero(8);
        cell.apply(&h, Direction::Add);
        assert!(cell.is_pure(&key));

        assert!(!CodedSymbol::zero(8).is_pure(&key));

        // Negated count is still pure (a cell of the difference stream).
        let mut neg = CodedSymbol::zero(8);
        neg.apply(&h, Direction::Remove);
        assert!(neg.is_pure(&key));
    }

    #[test]
    fn two_item_cells_are_not_pure() {
        // 1e6 random two-item cells; the 64-bit checksum should never
        // masquerade as a single-item hash.
        let key = HashKey::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut false_positives = 0;
        for _ in 0..1_000_000 {
            let mut cell = CodedSymbol::zero(8);
            cell.apply(&HashedItem::new(random_item(&mut rng, 8), &key), Direction::Add);
            cell.apply(&HashedItem::new(random_item(&mut rng, 8), &key), Direction::Add);
            cell.count = 1; // force past the count filter
            if cell.is_pure(&key) {
                false_positives += 1;
            }
        }
        assert_eq!(false_positives, 0);
    }
}
