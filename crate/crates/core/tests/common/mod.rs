//! Dense mod-p linear algebra, written independently of the library's sparse
//! echelon code, for checking its answers.
#![allow(dead_code)]

use madvec::field::{FieldSpec, Scalar};
use madvec::stream::{IndexSet, Preset, SubspaceStream};
use madvec::vector::SparseVector;

pub type Row = Vec<u64>;

pub fn modulus(spec: FieldSpec) -> u64 {
    match spec {
        FieldSpec::Prime(p) => p as u64,
        FieldSpec::Rationals => panic!("dense oracle works over prime fields only"),
    }
}

fn residue(s: &Scalar) -> u64 {
    match s {
        Scalar::Residue { r, .. } => *r as u64,
        Scalar::Rational(_) => panic!("rational scalar in a prime-field oracle"),
    }
}

fn pow(mut b: u64, mut e: u64, p: u64) -> u64 {
    let mut acc = 1;
    b %= p;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * b % p;
        }
        b = b * b % p;
        e >>= 1;
    }
    acc
}

fn inv(a: u64, p: u64) -> u64 {
    pow(a, p - 2, p)
}

pub fn dense(v: &SparseVector, width: usize) -> Row {
    let mut out = vec![0; width];
    for (i, c) in v.entries() {
        out[*i] = residue(c);
    }
    out
}

pub fn from_dense(spec: FieldSpec, row: &[u64]) -> SparseVector {
    let terms: Vec<(usize, i64)> = row
        .iter()
        .enumerate()
        .filter(|(_, c)| **c != 0)
        .map(|(i, c)| (i, *c as i64))
        .collect();
    SparseVector::from_ints(spec, &terms)
}

/// One more than the largest index used by any of the vectors.
pub fn width<'a>(groups: impl IntoIterator<Item = &'a [SparseVector]>) -> usize {
    groups
        .into_iter()
        .flat_map(|g| g.iter())
        .filter_map(SparseVector::max_support)
        .max()
        .map_or(1, |m| m + 1)
}

pub fn to_rows(vs: &[SparseVector], width: usize) -> Vec<Row> {
    vs.iter().map(|v| dense(v, width)).collect()
}

/// Dense rows over only the coordinates some vector uses; linear relations
/// are unchanged by dropping coordinates that are zero everywhere.
pub fn compact(groups: &[&[SparseVector]]) -> Vec<Vec<Row>> {
    let used: std::collections::BTreeSet<usize> =
        groups.iter().flat_map(|g| g.iter()).flat_map(|v| v.indices()).collect();
    let pos: std::collections::HashMap<usize, usize> = used.iter().enumerate().map(|(k, &i)| (i, k)).collect();
    let w = used.len().max(1);
    groups
        .iter()
        .map(|g| {
            g.iter()
                .map(|v| {
                    let mut out = vec![0; w];
                    for (i, c) in v.entries() {
                        out[pos[i]] = residue(c);
                    }
                    out
                })
                .collect()
        })
        .collect()
}

/// Row reduction in place; returns the nonzero rows in echelon form.
pub fn eliminate(p: u64, mut rows: Vec<Row>) -> Vec<Row> {
    let w = rows.first().map_or(0, Vec::len);
    let mut r = 0;
    for col in 0..w {
        let Some(piv) = (r..rows.len()).find(|&i| rows[i][col] != 0) else {
            continue;
        };
        rows.swap(r, piv);
        let s = inv(rows[r][col], p);
        for x in rows[r].iter_mut() {
            *x = *x * s % p;
        }
        for i in 0..rows.len() {
            if i != r && rows[i][col] != 0 {
                let f = rows[i][col];
                for j in 0..w {
                    rows[i][j] = (rows[i][j] + p * p - f * rows[r][j]) % p;
                }
            }
        }
        r += 1;
    }
    rows.truncate(r);
    rows
}

pub fn rank(p: u64, rows: &[Row]) -> usize {
    eliminate(p, rows.to_vec()).len()
}

pub fn in_span(p: u64, rows: &[Row], v: &Row) -> bool {
    let mut with = rows.to_vec();
    with.push(v.clone());
    rank(p, &with) == rank(p, rows)
}

/// Basis of span(a) ∩ span(b), by elimination on [a | a] over [b | 0].
pub fn meet(p: u64, a: &[Row], b: &[Row]) -> Vec<Row> {
    let w = a.first().or(b.first()).map_or(0, Vec::len);
    let mut rows = Vec::new();
    for r in a {
        let mut x = r.clone();
        x.extend_from_slice(r);
        rows.push(x);
    }
    for r in b {
        let mut x = r.clone();
        x.extend(std::iter::repeat(0).take(w));
        rows.push(x);
    }
    eliminate(p, rows)
        .into_iter()
        .filter(|r| r[..w].iter().all(|&c| c == 0))
        .map(|r| r[w..].to_vec())
        .collect()
}

pub fn meet_dim(p: u64, a: &[Row], b: &[Row]) -> usize {
    let mut both = a.to_vec();
    both.extend_from_slice(b);
    rank(p, a) + rank(p, b) - rank(p, &both)
}

pub fn same_space(p: u64, a: &[Row], b: &[Row]) -> bool {
    let mut both = a.to_vec();
    both.extend_from_slice(b);
    let r = rank(p, &both);
    rank(p, a) == r && rank(p, b) == r
}

pub fn max_support(rows: &[Row]) -> Option<usize> {
    rows.iter()
        .filter_map(|r| r.iter().rposition(|&c| c != 0))
        .max()
}

/// Rows of the stream with pivot ≤ top. Every vector of the subspace with
/// support in [0, top] is a combination of these.
pub fn rows_upto(s: &mut SubspaceStream, top: usize) -> Vec<SparseVector> {
    let mut out = Vec::new();
    let mut i = 0;
    while let Some(r) = s.try_row(i).unwrap() {
        if r.min_support().unwrap() > top {
            break;
        }
        out.push(r.clone());
        i += 1;
    }
    out
}

/// dim(span(xs) ∩ Y), with Y given by its stream.
pub fn span_meet_dim(spec: FieldSpec, xs: &[SparseVector], y: &mut SubspaceStream) -> usize {
    let top = xs.iter().filter_map(SparseVector::max_support).max();
    let Some(top) = top else { return 0 };
    let ys = rows_upto(y, top);
    let c = compact(&[xs, &ys]);
    meet_dim(modulus(spec), &c[0], &c[1])
}

/// Whether v lies in the subspace presented by the stream.
pub fn stream_contains(spec: FieldSpec, v: &SparseVector, y: &mut SubspaceStream) -> bool {
    let Some(top) = v.max_support() else { return true };
    let ys = rows_upto(y, top);
    let c = compact(&[std::slice::from_ref(v), &ys]);
    in_span(modulus(spec), &c[1], &c[0][0])
}

/// One or more presets of every kind.
pub fn preset_zoo(spec: FieldSpec) -> Vec<Preset> {
    let p = modulus(spec) as i64;
    vec![
        Preset::units(),
        Preset::evens(),
        Preset::odds(),
        Preset::pairs(),
        Preset::residue(1, 3),
        Preset::residue(2, 5),
        Preset::two_adic(0),
        Preset::two_adic(1),
        Preset::tail(Preset::evens(), 4),
        Preset::pattern(3, &[(0, 1), (2, p - 1)]),
        Preset::pattern(4, &[(1, 1), (2, 1), (3, 1)]),
        Preset::PerfectBranch { bits: "01".into() },
        Preset::DiagonalIndexset {
            index: IndexSet::With {
                head: vec![1, 4],
                rest: Box::new(IndexSet::Residue { r: 2, m: 7 }),
            },
        },
        Preset::DiagonalIndexset {
            index: IndexSet::AtLeast { from: 5 },
        },
        Preset::intersection(Preset::units(), Preset::residue(0, 3)),
        Preset::canonical(
            &[
                SparseVector::from_ints(spec, &[(1, 1), (4, p - 1)]),
                SparseVector::from_ints(spec, &[(2, 1), (9, 1)]),
            ],
            Some(Preset::tail(Preset::residue(0, 3), 9)),
        ),
    ]
}
