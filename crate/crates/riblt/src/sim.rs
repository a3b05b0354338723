//! Monte Carlo measurement of communication overhead and decode progress.
//!
//! Trials synthesize the symmetric difference directly: by linearity the
//! shared portion of the two sets cancels out of the difference stream, so
//! only the d difference items (split randomly between the sides) matter.
//! One test in `tests/sync.rs` reconfirms this with real shared items.
//!
//! Every completed reconciliation is checked against direct set algebra;
//! a mismatch is a codec bug and panics the harness.
//!
//! All runs are reproducible: seeded per (d, trial) independently of the
//! parallel schedule, results merged in trial order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::baseline;
use crate::decoder::Decoder;
use crate::encoder::{Encoder, EncoderMode};
use crate::error::{Error, Result};
use crate::mapping::MappingProfile;
use crate::symbol::{HashKey, Item};

const SIM_ITEM_LEN: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct OverheadRow {
    pub d: u64,
    pub mean_overhead: f64,
    pub stddev: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProgressRow {
    pub cells_per_d: f64,
    pub mean_recovered_fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineRow {
    pub d: u64,
    pub success_rate: f64,
    pub mean_recovered_fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruncationRow {
    pub table_size: usize,
    pub used_cells: usize,
    pub success_rate: f64,
}

fn trial_rng(seed: u64, d: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(d.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(trial));
    rng
}

fn random_items(rng: &mut impl Rng, n: usize) -> Vec<Item> {
    let mut set = BTreeSet::new();
    while set.len() < n {
        set.insert(Item::new(rng.random::<[u8; SIM_ITEM_LEN]>().to_vec()));
    }
    set.into_iter().collect()
}

/// d random items split per-item between remote and local.
fn synthesize_difference(rng: &mut impl Rng, d: usize) -> (Vec<Item>, Vec<Item>) {
    let mut remote = Vec::new();
    let mut local = Vec::new();
    for item in random_items(rng, d) {
        if rng.random::<bool>() {
            remote.push(item);
        } else {
            local.push(item);
        }
    }
    (remote, local)
}

/// Stream cells into a fresh decoder until complete; returns cells consumed
/// and the per-cell recovered counts. Panics if the recovered difference
/// disagrees with the synthesized one.
fn run_trial(
    profile: &MappingProfile,
    remote: &[Item],
    local: &[Item],
    record_progress: bool,
) -> (u64, Vec<usize>) {
    let key = HashKey::default();
    let mut enc = Encoder::with_items(
        SIM_ITEM_LEN,
        profile.clone(),
        key,
        EncoderMode::Streaming,
        remote.iter().cloned(),
    )
    .expect("trial encoder");
    let mut dec = Decoder::with_local_set(SIM_ITEM_LEN, profile.clone(), key, local.iter().cloned())
        .expect("trial decoder");

    let mut progress = Vec::new();
    let mut cells = 0u64;
    while !dec.is_complete() {
        dec.ingest(&enc.emit_next()).expect("trial ingest");
        cells += 1;
        if record_progress {
            progress.push(dec.recovered_len());
        }
    }

    let rec = dec.result().expect("trial result");
    let as_set = |v: &[Item]| v.iter().cloned().collect::<BTreeSet<_>>();
    assert_eq!(
        as_set(&rec.remote_only),
        as_set(remote),
        "simulated reconciliation diverged from set algebra"
    );
    assert_eq!(as_set(&rec.local_only), as_set(local));
    (cells, progress)
}

/// Mean cells-per-difference over `trials` random differences of each size.
pub fn run_overhead(
    profile: &MappingProfile,
    d_values: &[u64],
    trials: usize,
    seed: u64,
) -> Result<Vec<OverheadRow>> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be >= 1".into()));
    }
    profile.validate()?;
    d_values
        .iter()
        .map(|&d| {
            if d == 0 {
                return Err(Error::InvalidParameter(
                    "overhead is undefined for d = 0".into(),
                ));
            }
            let overheads: Vec<f64> = (0..trials as u64)
                .into_par_iter()
                .map(|t| {
                    let mut rng = trial_rng(seed, d, t);
                    let (remote, local) = synthesize_difference(&mut rng, d as usize);
                    let (cells, _) = run_trial(profile, &remote, &local, false);
                    cells as f64 / d as f64
                })
                .collect();
            let mean = overheads.iter().sum::<f64>() / trials as f64;
            let var = if trials > 1 {
                overheads.iter().map(|o| (o - mean) * (o - mean)).sum::<f64>()
                    / (trials - 1) as f64
            } else {
                0.0
            };
            Ok(OverheadRow {
                d,
                mean_overhead: mean,
                stddev: var.sqrt(),
            })
        })
        .collect()
}

/// [`run_overhead`] with the published irregular profile.
pub fn run_irregular(d_values: &[u64], trials: usize, seed: u64) -> Result<Vec<OverheadRow>> {
    run_overhead(&MappingProfile::irregular_default(), d_values, trials, seed)
}

/// Mean recovered fraction after each received cell, for one difference
/// size. Trials that finished early contribute 1.0 from then on.
pub fn run_progress(
    profile: &MappingProfile,
    d: u64,
    trials: usize,
    seed: u64,
) -> Result<Vec<ProgressRow>> {
    if trials == 0 || d == 0 {
        return Err(Error::InvalidParameter("need trials >= 1 and d >= 1".into()));
    }
    profile.validate()?;
    let curves: Vec<Vec<usize>> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, d, t);
            let (remote, local) = synthesize_difference(&mut rng, d as usize);
            run_trial(profile, &remote, &local, true).1
        })
        .collect();

    let longest = curves.iter().map(Vec::len).max().unwrap_or(0);
    let mut rows = Vec::with_capacity(longest);
    for cell in 0..longest {
        let sum: f64 = curves
            .iter()
            .map(|c| *c.get(cell).unwrap_or(&(d as usize)) as f64 / d as f64)
            .sum();
        rows.push(ProgressRow {
            cells_per_d: (cell + 1) as f64 / d as f64,
            mean_recovered_fraction: sum / trials as f64,
        });
    }
    Ok(rows)
}

/// Success rate and recovered fraction of the fixed-size table across
/// difference sizes.
pub fn run_baseline(
    m: usize,
    k: usize,
    d_values: &[u64],
    trials: usize,
    seed: u64,
) -> Result<Vec<BaselineRow>> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be >= 1".into()));
    }
    let key = HashKey::default();
    d_values
        .iter()
        .map(|&d| {
            let outcomes: Vec<(bool, f64)> = (0..trials as u64)
                .into_par_iter()
                .map(|t| {
                    let mut rng = trial_rng(seed, d, t);
                    let items = random_items(&mut rng, d as usize);
                    let cells = baseline::iblt_encode(&items, m, k, &key).expect("baseline encode");
                    let out = baseline::iblt_decode(&cells, k, &key);
                    let fraction = if d == 0 {
                        1.0
                    } else {
                        out.recovered() as f64 / d as f64
                    };
                    (out.complete, fraction)
                })
                .collect();
            let successes = outcomes.iter().filter(|(ok, _)| *ok).count();
            let mean_fraction =
                outcomes.iter().map(|(_, f)| f).sum::<f64>() / trials as f64;
            Ok(BaselineRow {
                d,
                success_rate: successes as f64 / trials as f64,
                mean_recovered_fraction: mean_fraction,
            })
        })
        .collect()
}

/// Decode a table of `n` items from a `used_cells`-cell prefix while the
/// table itself grows: deeper truncation, lower success. Success means all
/// `n` items recovered.
pub fn run_baseline_truncated(
    n: usize,
    k: usize,
    used_cells: usize,
    table_sizes: &[usize],
    trials: usize,
    seed: u64,
) -> Result<Vec<TruncationRow>> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be >= 1".into()));
    }
    let key = HashKey::default();
    table_sizes
        .iter()
        .map(|&m| {
            if used_cells > m {
                return Err(Error::InvalidParameter(format!(
                    "prefix {used_cells} exceeds table size {m}"
                )));
            }
            let successes: usize = (0..trials as u64)
                .into_par_iter()
                .map(|t| {
                    let mut rng = trial_rng(seed, m as u64, t);
                    let items = random_items(&mut rng, n);
                    let cells = baseline::iblt_encode(&items, m, k, &key).expect("baseline encode");
                    let out = baseline::iblt_decode_prefix(&cells[..used_cells], m, k, &key);
                    usize::from(out.recovered() == n)
                })
                .sum();
            Ok(TruncationRow {
                table_size: m,
                used_cells,
                success_rate: successes as f64 / trials as f64,
            })
        })
        .collect()
}

pub fn overhead_csv(rows: &[OverheadRow]) -> String {
    let mut out = String::from("d,mean_overhead,stddev\n");
    for r in rows {
        writeln!(out, "{},{:.6},{:.6}", r.d, r.mean_overhead, r.stddev).unwrap();
    }
    out
}

pub fn progress_csv(rows: &[ProgressRow]) -> String {
    let mut out = String::from("cells_per_d,mean_recovered_fraction\n");
    for r in rows {
        writeln!(out, "{:.6},{:.6}", r.cells_per_d, r.mean_recovered_fraction).unwrap();
    }
    out
}

pub fn baseline_csv(rows: &[BaselineRow]) -> String {
    let mut out = String::from("d,success_rate,mean_recovered_fraction\n");
    for r in rows {
        writeln!(out, "{},{:.6},{:.6}", r.d, r.success_rate, r.mean_recovered_fraction).unwrap();
    }
    out
}

pub fn truncation_csv(rows: &[TruncationRow]) -> String {
    let mut out = String::from("table_size,used_cells,success_rate\n");
    for r in rows {
        writeln!(out, "{},{},{:.6}", r.table_size, r.used_cells, r.success_rate).unwrap();
    }
    out
}
