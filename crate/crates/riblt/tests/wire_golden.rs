//! Golden-bytes fixtures for the stream format.
//!
//! The committed fixtures pin every wire-visible choice at once: the keyed
//! hash, the per-item generator and its seeding, the inverse-CDF skip
//! computation, VLQ/zigzag, and the expected-count rounding. If any of them
//! drifts, re-encoding the fixture set no longer reproduces these bytes.

use std::io::Cursor;
use std::path::PathBuf;
use std::sync::Mutex;

use riblt::encoder::{Encoder, EncoderMode};
use riblt::mapping::MappingProfile;
use riblt::session;
use riblt::symbol::{CodedSymbol, HashKey, Item};
use riblt::wire;

const CELLS: u64 = 12;

fn fixture_key() -> HashKey {
    let mut k = [0u8; 16];
    for (i, b) in k.iter_mut().enumerate() {
        *b = i as u8;
    }
    HashKey::new(k)
}

fn fixture_items() -> Vec<Item> {
    (1u8..=5).map(|v| Item::from([v; 8])).collect()
}

fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

fn encode_stream(profile: MappingProfile) -> Vec<u8> {
    let items = fixture_items();
    let set_size = items.len() as u64;
    let mut enc = Encoder::with_items(
        8,
        profile.clone(),
        fixture_key(),
        EncoderMode::Streaming,
        items,
    )
    .unwrap();
    let mut bytes = Vec::new();
    wire::write_header(
        &mut bytes,
        &wire::StreamHeader {
            item_len: 8,
            set_size,
            irregular: profile.is_irregular(),
        },
    )
    .unwrap();
    for i in 0..CELLS {
        let cell = enc.emit_next();
        wire::write_cell(&mut bytes, &cell, i, set_size, &profile).unwrap();
    }
    bytes
}

fn parse_and_reserialize(bytes: &[u8], profile: &MappingProfile) -> (wire::StreamHeader, Vec<CodedSymbol>, Vec<u8>) {
    let mut r = Cursor::new(bytes);
    let header = wire::read_header(&mut r).unwrap();
    let mut cells = Vec::new();
    for i in 0..CELLS {
        cells.push(
            wire::read_cell(&mut r, i, header.set_size, header.item_len, profile).unwrap(),
        );
    }
    assert_eq!(r.position() as usize, bytes.len(), "trailing bytes in fixture");

    let mut out = Vec::new();
    wire::write_header(&mut out, &header).unwrap();
    for (i, cell) in cells.iter().enumerate() {
        wire::write_cell(&mut out, cell, i as u64, header.set_size, profile).unwrap();
    }
    (header, cells, out)
}

#[test]
fn golden_regular_stream() {
    let bytes = std::fs::read(fixture_path("stream_regular.bin")).unwrap();
    let profile = MappingProfile::regular();

    let (header, cells, reserialized) = parse_and_reserialize(&bytes, &profile);
    assert_eq!(header.item_len, 8);
    assert_eq!(header.set_size, 5);
    assert!(!header.irregular);
    assert_eq!(reserialized, bytes, "parse + re-serialize must be identity");

    // Cell 0 carries the whole set: sum is the XOR of all five items, and
    // the checksum is the XOR of their keyed hashes, computed here from an
    // independent implementation of the hash.
    assert_eq!(cells[0].sum, vec![0x01u8; 8]);
    assert_eq!(cells[0].checksum, 0xae95_3c06_fe94_9abe);
    assert_eq!(cells[0].count, 5);

    // The bytes are exactly what encoding the fixture set produces today.
    assert_eq!(encode_stream(profile), bytes);
}

#[test]
fn golden_irregular_stream() {
    let bytes = std::fs::read(fixture_path("stream_irregular.bin")).unwrap();
    let profile = MappingProfile::irregular_default();

    let (header, cells, reserialized) = parse_and_reserialize(&bytes, &profile);
    assert_eq!(header.item_len, 8);
    assert_eq!(header.set_size, 5);
    assert!(header.irregular);
    assert_eq!(reserialized, bytes);
    assert_eq!(cells[0].checksum, 0xae95_3c06_fe94_9abe);
    assert_eq!(cells[0].count, 5);

    assert_eq!(encode_stream(profile), bytes);
}

#[test]
fn golden_stream_reconciles() {
    // The fixture is a valid session stream: decode it against a local set
    // missing two of the items.
    let bytes = std::fs::read(fixture_path("stream_regular.bin")).unwrap();
    let config = session::SessionConfig::new(8).with_key(fixture_key());
    let local: Vec<Item> = fixture_items().into_iter().take(3).collect();
    let (rec, cells) = session::request(&config, local, Cursor::new(bytes)).unwrap();
    assert!(cells <= CELLS);
    let mut got = rec.remote_only.clone();
    got.sort();
    assert_eq!(got, fixture_items()[3..].to_vec());
    assert!(rec.local_only.is_empty());
}

/// Writes the fixtures. Run by hand when the wire format itself changes:
/// `cargo test -p riblt --test wire_golden -- --ignored regenerate`
#[test]
#[ignore]
fn regenerate_golden_fixtures() {
    std::fs::create_dir_all(fixture_path("")).unwrap();
    std::fs::write(
        fixture_path("stream_regular.bin"),
        encode_stream(MappingProfile::regular()),
    )
    .unwrap();
    std::fs::write(
        fixture_path("stream_irregular.bin"),
        encode_stream(MappingProfile::irregular_default()),
    )
    .unwrap();
}

#[test]
fn shared_encoder_streams_identical_bytes() {
    // Two sinks served from one cached encoder receive identical bytes.
    let items = fixture_items();
    let config = session::SessionConfig::new(8).with_key(fixture_key());
    let enc = Encoder::with_items(
        8,
        config.profile.clone(),
        config.key,
        EncoderMode::Cached,
        items,
    )
    .unwrap();
    let shared = Mutex::new(enc);

    let serve_some = |n: usize| {
        let (writer, mut reader) = session::byte_pipe(16);
        let handle = std::thread::scope(|s| {
            let h = s.spawn(|| session::respond_with_encoder(&shared, writer));
            let mut buf = vec![0u8; n];
            std::io::Read::read_exact(&mut reader, &mut buf).unwrap();
            drop(reader);
            let _ = h.join();
            buf
        });
        handle
    };

    let a = serve_some(64);
    let b = serve_some(200);
    assert_eq!(a[..], b[..64]);
}
