//! Classical fixed-size invertible Bloom lookup table.
//!
//! Every item is mapped to `k` distinct cells chosen uniformly from a table
//! of fixed size `m`. Kept as an empirical baseline: unlike the rateless
//! stream, a fixed table decodes only within a narrow band of difference
//! sizes, and cannot be grown after the fact.

use crate::error::{Error, Result};
use crate::mapping::ItemRng;
use crate::symbol::{subtract, CodedSymbol, Direction, HashKey, HashedItem, Item};

/// The `k` distinct cell indices for an item, drawn by rejection from the
/// item-seeded generator. Deterministic given (item, key, m, k).
fn cell_indices(checksum: u64, m: usize, k: usize) -> Vec<usize> {
    let mut rng = ItemRng::new(checksum);
    let mut indices = Vec::with_capacity(k);
    while indices.len() < k {
        let idx = (rng.next_u64() % m as u64) as usize;
        if !indices.contains(&idx) {
            indices.push(idx);
        }
    }
    indices
}

/// Encode a set into a table of `m` cells, `k` cells per item.
pub fn iblt_encode(
    items: &[Item],
    m: usize,
    k: usize,
    key: &HashKey,
) -> Result<Vec<CodedSymbol>> {
    if m == 0 || k == 0 || k > m {
        return Err(Error::InvalidParameter(format!(
            "need 1 <= k <= m, got k={k}, m={m}"
        )));
    }
    let item_len = items.first().map_or(1, Item::len);
    let mut cells = vec![CodedSymbol::zero(item_len); m];
    for item in items {
        if item.len() != item_len {
            return Err(Error::LengthMismatch {
                expected: item_len,
                got: item.len(),
            });
        }
        let h = HashedItem::new(item.clone(), key);
        for idx in cell_indices(h.checksum, m, k) {
            cells[idx].apply(&h, Direction::Add);
        }
    }
    Ok(cells)
}

/// Cell-wise difference of two equally parameterized tables.
pub fn subtract_tables(a: &[CodedSymbol], b: &[CodedSymbol]) -> Result<Vec<CodedSymbol>> {
    if a.len() != b.len() {
        return Err(Error::InvalidParameter(format!(
            "table sizes differ: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    a.iter().zip(b).map(|(x, y)| subtract(x, y)).collect()
}

/// What peeling recovered before it stalled. Failure is a value: `complete`
/// is false when some cells could not be reduced to zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IbltDecodeOutcome {
    pub remote_only: Vec<Item>,
    pub local_only: Vec<Item>,
    pub complete: bool,
}

impl IbltDecodeOutcome {
    pub fn recovered(&self) -> usize {
        self.remote_only.len() + self.local_only.len()
    }
}

/// Peel a full table.
pub fn iblt_decode(cells: &[CodedSymbol], k: usize, key: &HashKey) -> IbltDecodeOutcome {
    iblt_decode_prefix(cells, cells.len(), k, key)
}

/// Peel the first cells of a table that was encoded at size `original_m`.
/// Items map to indices in `[0, original_m)`; only the cells present are
/// usable, which is how a truncated table loses items entirely.
pub fn iblt_decode_prefix(
    cells: &[CodedSymbol],
    original_m: usize,
    k: usize,
    key: &HashKey,
) -> IbltDecodeOutcome {
    let mut cells = cells.to_vec();
    let mut remote_only = Vec::new();
    let mut local_only = Vec::new();
    let mut worklist: Vec<usize> = (0..cells.len()).collect();

    while let Some(i) = worklist.pop() {
        if !cells[i].is_pure(key) {
            continue;
        }
        let hashed = HashedItem {
            item: Item::from(cells[i].sum.as_slice()),
            checksum: cells[i].checksum,
        };
        let sign = cells[i].count;
        let indices = cell_indices(hashed.checksum, original_m, k);
        if !indices.contains(&i) {
            // Checksum collision; leave the cell alone.
            continue;
        }
        let dir = if sign > 0 { Direction::Remove } else { Direction::Add };
        for idx in indices {
            if idx < cells.len() {
                cells[idx].apply(&hashed, dir);
                worklist.push(idx);
            }
        }
        if sign > 0 {
            remote_only.push(hashed.item);
        } else {
            local_only.push(hashed.item);
        }
    }

    IbltDecodeOutcome {
        remote_only,
        local_only,
        complete: cells.iter().all(CodedSymbol::is_zero),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mapping::{Mapper, MappingProfile};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeSet;

    fn random_items(rng: &mut impl Rng, n: usize) -> Vec<Item> {
        let mut set = BTreeSet::new();
        while set.len() < n {
            set.insert(Item::new(rng.random::<[u8; 8]>().to_vec()));
        }
        set.into_iter().collect()
    }

    #[test]
    fn parameter_validation() {
        let key = HashKey::default();
        assert!(iblt_encode(&[], 0, 1, &key).is_err());
        assert!(iblt_encode(&[], 4, 0, &key).is_err());
        assert!(iblt_encode(&[], 4, 5, &key).is_err());
        assert!(iblt_encode(&[], 4, 4, &key).is_ok());
    }

    #[test]
    fn k_equals_m_puts_every_item_everywhere() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let items = random_items(&mut rng, 10);
        let cells = iblt_encode(&items, 5, 5, &HashKey::default()).unwrap();
        for cell in &cells {
            assert_eq!(cell.count, items.len() as i64);
        }
    }

    #[test]
    fn degree_sum_is_n_times_k() {
        // 4 items, m=6, k=3: 12 edges in the item/cell graph.
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let items = random_items(&mut rng, 4);
        let cells = iblt_encode(&items, 6, 3, &HashKey::default()).unwrap();
        let total: i64 = cells.iter().map(|c| c.count).sum();
        assert_eq!(total, 12);
    }

    #[test]
    fn table_linearity() {
        let key = HashKey::default();
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let universe = random_items(&mut rng, 30);
        let a: Vec<Item> = universe[..20].to_vec();
        let b: Vec<Item> = universe[10..].to_vec();

        let diff = subtract_tables(
            &iblt_encode(&a, 40, 3, &key).unwrap(),
            &iblt_encode(&b, 40, 3, &key).unwrap(),
        )
        .unwrap();

        // Direct signed encoding of the difference.
        let mut expected = vec![CodedSymbol::zero(8); 40];
        for (items, dir) in [
            (&universe[..10], Direction::Add),
            (&universe[20..], Direction::Remove),
        ] {
            for item in items {
                let h = HashedItem::new(item.clone(), &key);
                for idx in cell_indices(h.checksum, 40, 3) {
                    expected[idx].apply(&h, dir);
                }
            }
        }
        assert_eq!(diff, expected);
    }

    #[test]
    fn empty_difference_decodes_trivially() {
        let key = HashKey::default();
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        let items = random_items(&mut rng, 16);
        let t = iblt_encode(&items, 48, 3, &key).unwrap();
        let out = iblt_decode(&subtract_tables(&t, &t).unwrap(), 3, &key);
        assert!(out.complete);
        assert_eq!(out.recovered(), 0);
    }

    #[test]
    fn well_sized_table_decodes_reliably() {
        // m = 2d, k = 4, d = 64.
        let key = HashKey::default();
        let mut rng = ChaCha8Rng::seed_from_u64(45);
        let mut successes = 0;
        for _ in 0..300 {
            let items = random_items(&mut rng, 64);
            let cells = iblt_encode(&items, 128, 4, &key).unwrap();
            let out = iblt_decode(&cells, 4, &key);
            if out.complete {
                assert_eq!(
                    out.remote_only.iter().cloned().collect::<BTreeSet<_>>(),
                    items.iter().cloned().collect::<BTreeSet<_>>()
                );
                successes += 1;
            }
        }
        assert!(successes as f64 / 300.0 > 0.95, "successes {successes}/300");
    }

    #[test]
    fn undersized_table_recovers_nothing() {
        // n = 2m: peeling can almost never even start.
        let key = HashKey::default();
        let mut rng = ChaCha8Rng::seed_from_u64(46);
        let mut any_recovered = 0;
        for _ in 0..300 {
            let items = random_items(&mut rng, 128);
            let cells = iblt_encode(&items, 64, 5, &key).unwrap();
            if iblt_decode(&cells, 5, &key).recovered() > 0 {
                any_recovered += 1;
            }
        }
        assert!(
            (any_recovered as f64 / 300.0) < 0.05,
            "recovered in {any_recovered}/300 trials"
        );
    }

    #[test]
    fn truncated_prefix_rederives_original_mapping() {
        let key = HashKey::default();
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        let items = random_items(&mut rng, 8);
        let cells = iblt_encode(&items, 64, 3, &key).unwrap();
        // Decoding half the table against the original m must not invent
        // items, and whatever it recovers is genuine.
        let out = iblt_decode_prefix(&cells[..32], 64, 3, &key);
        let truth: BTreeSet<Item> = items.iter().cloned().collect();
        for it in &out.remote_only {
            assert!(truth.contains(it));
        }
    }

    #[test]
    fn fixed_mapping_differs_from_rateless() {
        // The baseline draws k uniform cells; the rateless mapper always
        // covers index 0. Distinct constructions, same symbol algebra.
        let key = HashKey::default();
        let item = Item::from([5u8; 8]);
        let h = HashedItem::new(item, &key);
        let mut mapper = Mapper::new(&h, &MappingProfile::regular());
        assert_eq!(mapper.next_index(), 0);
        let uniform = cell_indices(h.checksum, 1024, 3);
        assert_eq!(uniform.len(), 3);
        assert!(uniform.iter().all(|&i| i < 1024));
    }
}
