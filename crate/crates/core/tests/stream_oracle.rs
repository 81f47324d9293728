mod common;

use std::collections::HashSet;

use common::{preset_zoo, rows_upto};
use madvec::field::FieldSpec;
use madvec::stream::{make_stream, stream_member};
use madvec::vector::SparseVector;

const WINDOW: usize = 10;

fn mask(v: &SparseVector) -> u64 {
    v.indices().fold(0, |m, i| {
        assert!(i < 64, "index {i} too large for a mask");
        m | 1 << i
    })
}

fn from_mask(m: u64) -> SparseVector {
    SparseVector::indicator(FieldSpec::gf2(), (0..64).filter(|i| m >> i & 1 == 1))
}

/// Every vector of each preset with support in [0, 10], found by summing all
/// subsets of the rows that can contribute, against stream membership.
#[test]
fn membership_matches_enumeration() {
    let spec = FieldSpec::gf2();
    for preset in preset_zoo(spec) {
        let mut y = make_stream(&preset, spec).unwrap();
        let rows: Vec<u64> = rows_upto(&mut y, WINDOW).iter().map(mask).collect();
        let window = (1u64 << (WINDOW + 1)) - 1;
        let mut inside = HashSet::new();
        for subset in 0u64..1 << rows.len() {
            let v = (0..rows.len())
                .filter(|k| subset >> k & 1 == 1)
                .fold(0, |acc, k| acc ^ rows[k]);
            if v & !window == 0 {
                inside.insert(v);
            }
        }
        for v in 1..=window {
            let x = from_mask(v);
            let want = inside.contains(&v);
            assert_eq!(y.member(&x).unwrap(), want, "{preset:?}: {x}");
            let mut fresh = make_stream(&preset, spec).unwrap();
            if v % 97 == 0 {
                assert_eq!(stream_member(&x, &mut fresh).unwrap(), want, "{preset:?}: {x}");
            }
        }
    }
}
