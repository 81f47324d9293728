//! Lazy row streams presenting infinite-dimensional subspaces.
//!
//! A [`SubspaceStream`] pulls rows of the reduced echelon basis of its
//! subspace on demand and caches them. Pivots strictly increase, so every
//! question about a finitely supported vector only ever needs a finite
//! prefix: `x ∈ Y` iff `x` lies in the span of the rows with pivot at most
//! `max supp x`, and `Y/M` is spanned by the rows with pivot above `M`.

mod canonical;
mod preset;

use std::collections::VecDeque;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

pub use canonical::{Canonicalizer, RawSource};
pub use preset::{branch_code, parse_bits, Generator, IndexSet, Preset};

use crate::echelon::{intersect, EchelonBasis};
use crate::error::{Error, Result};
use crate::field::{FieldSpec, Scalar};
use crate::vector::SparseVector;

/// Default cap on stream pulls when `MADVEC_MAX_STEPS` is unset.
pub const DEFAULT_MAX_STEPS: u64 = 1 << 22;

/// Budget of stream pulls shared by a stream and the streams nested inside it.
#[derive(Clone, Debug)]
pub struct Fuel {
    limit: u64,
    used: Arc<AtomicU64>,
}

impl Fuel {
    pub fn new(limit: u64) -> Self {
        Fuel {
            limit,
            used: Arc::new(AtomicU64::new(0)),
        }
    }

    /// Reads the limit from `MADVEC_MAX_STEPS`.
    pub fn from_env() -> Self {
        let limit = std::env::var("MADVEC_MAX_STEPS")
            .ok()
            .and_then(|s| s.trim().parse().ok())
            .unwrap_or(DEFAULT_MAX_STEPS);
        Fuel::new(limit)
    }

    pub fn spend(&self, steps: u64) -> Result<()> {
        let before = self.used.fetch_add(steps, Ordering::Relaxed);
        if before.saturating_add(steps) > self.limit {
            return Err(Error::FuelExhausted { limit: self.limit });
        }
        Ok(())
    }

    pub fn used(&self) -> u64 {
        self.used.load(Ordering::Relaxed)
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }
}

/// Producer of reduced echelon rows with strictly increasing pivots.
/// `Ok(None)` means the presented subspace is finite-dimensional and every
/// row has been produced.
trait RowSource: Send {
    fn next_row(&mut self, index: usize, fuel: &Fuel) -> Result<Option<SparseVector>>;
}

struct DiagonalSource {
    spec: FieldSpec,
    index: IndexSet,
    last: Option<usize>,
}

impl RowSource for DiagonalSource {
    fn next_row(&mut self, row: usize, _fuel: &Fuel) -> Result<Option<SparseVector>> {
        let n = self
            .index
            .next_after(self.last)
            .ok_or(Error::IndexOverflow { row })?;
        self.last = Some(n);
        Ok(Some(SparseVector::basis(self.spec, n)))
    }
}

struct UnitsSource {
    spec: FieldSpec,
}

impl RowSource for UnitsSource {
    fn next_row(&mut self, index: usize, _fuel: &Fuel) -> Result<Option<SparseVector>> {
        Ok(Some(SparseVector::basis(self.spec, index)))
    }
}

struct PatternSource {
    spec: FieldSpec,
    m: usize,
    terms: Vec<(usize, Scalar)>,
}

impl RowSource for PatternSource {
    fn next_row(&mut self, row: usize, _fuel: &Fuel) -> Result<Option<SparseVector>> {
        let base = row.checked_mul(self.m).ok_or(Error::IndexOverflow { row })?;
        let mut entries = Vec::with_capacity(self.terms.len());
        for (off, c) in &self.terms {
            let i = base.checked_add(*off).ok_or(Error::IndexOverflow { row })?;
            entries.push((i, c.clone()));
        }
        Ok(Some(SparseVector::from_sorted_unchecked(self.spec, entries)))
    }
}

struct BranchSource {
    spec: FieldSpec,
    bits: Vec<bool>,
}

impl RowSource for BranchSource {
    fn next_row(&mut self, row: usize, _fuel: &Fuel) -> Result<Option<SparseVector>> {
        let prefix: Vec<bool> = (0..row).map(|i| self.bits[i % self.bits.len()]).collect();
        let code = branch_code(&prefix).ok_or(Error::IndexOverflow { row })?;
        Ok(Some(SparseVector::basis(self.spec, code)))
    }
}

struct TailSource {
    inner: SubspaceStream,
    above: usize,
    next: Option<usize>,
}

impl RowSource for TailSource {
    fn next_row(&mut self, _row: usize, _fuel: &Fuel) -> Result<Option<SparseVector>> {
        let next = match self.next {
            Some(i) => i,
            None => self.inner.count_pivots_at_most(self.above)?,
        };
        let row = self.inner.try_row(next)?.cloned();
        self.next = Some(next + 1);
        Ok(row)
    }
}

struct IntersectionSource {
    left: SubspaceStream,
    right: SubspaceStream,
    last_max: Option<usize>,
}

/// Rows examined per side before an intersection search gives up.
pub const SEARCH_ROWS: usize = 4096;

impl RowSource for IntersectionSource {
    fn next_row(&mut self, _row: usize, _fuel: &Fuel) -> Result<Option<SparseVector>> {
        match first_common_above(&mut self.left, &mut self.right, self.last_max, SEARCH_ROWS)? {
            Some(v) => {
                self.last_max = v.max_support();
                Ok(Some(v))
            }
            None => Err(Error::SearchExhausted(format!(
                "no common vector above {:?} within {SEARCH_ROWS} rows of ({}) and ({})",
                self.last_max,
                self.left.describe(),
                self.right.describe()
            ))),
        }
    }
}

struct CanonicalSource<R> {
    inner: Canonicalizer<R>,
}

impl<R: RawSource> RowSource for CanonicalSource<R> {
    fn next_row(&mut self, _row: usize, fuel: &Fuel) -> Result<Option<SparseVector>> {
        self.inner.next_row(fuel)
    }
}

/// Lazily produced reduced echelon basis of a subspace.
pub struct SubspaceStream {
    spec: FieldSpec,
    preset: Option<Preset>,
    source: Box<dyn RowSource>,
    rows: Vec<SparseVector>,
    ended: bool,
    fuel: Fuel,
}

impl fmt::Debug for SubspaceStream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SubspaceStream")
            .field("spec", &self.spec)
            .field("preset", &self.preset)
            .field("produced", &self.rows.len())
            .field("ended", &self.ended)
            .finish()
    }
}

/// Instantiates a preset with its own fuel budget (see [`Fuel::from_env`]).
pub fn make_stream(preset: &Preset, spec: FieldSpec) -> Result<SubspaceStream> {
    make_stream_with_fuel(preset, spec, Fuel::from_env())
}

pub fn make_stream_with_fuel(preset: &Preset, spec: FieldSpec, fuel: Fuel) -> Result<SubspaceStream> {
    preset.validate(spec)?;
    build(preset, spec, fuel)
}

fn build(preset: &Preset, spec: FieldSpec, fuel: Fuel) -> Result<SubspaceStream> {
    let source: Box<dyn RowSource> = match preset {
        Preset::DiagonalResidue { r, m } => Box::new(DiagonalSource {
            spec,
            index: IndexSet::Residue { r: *r, m: *m },
            last: None,
        }),
        Preset::DiagonalIndexset { index } => Box::new(DiagonalSource {
            spec,
            index: index.clone(),
            last: None,
        }),
        Preset::Pattern { .. } => {
            let (m, terms) = preset.pattern_terms(spec)?;
            Box::new(PatternSource { spec, m, terms })
        }
        Preset::PerfectBranch { bits } => Box::new(BranchSource {
            spec,
            bits: parse_bits(bits)?,
        }),
        Preset::BlockFromGenerator { generator } => match generator {
            Generator::Units => Box::new(UnitsSource { spec }),
            Generator::Intersection { left, right } => Box::new(IntersectionSource {
                left: build(left, spec, fuel.clone())?,
                right: build(right, spec, fuel.clone())?,
                last_max: None,
            }),
        },
        Preset::Canonical { head, tail } => {
            let head = head
                .iter()
                .map(|v| v.decode(spec))
                .collect::<Result<VecDeque<_>>>()?;
            let tail = match tail {
                Some(t) => Some(build(t, spec, fuel.clone())?),
                None => None,
            };
            let raw = canonical::HeadThenStream {
                head,
                tail,
                tail_next: 0,
            };
            Box::new(CanonicalSource {
                inner: Canonicalizer::new(spec, raw),
            })
        }
        Preset::Tail { inner, above } => Box::new(TailSource {
            inner: build(inner, spec, fuel.clone())?,
            above: *above,
            next: None,
        }),
    };
    Ok(SubspaceStream {
        spec,
        preset: Some(preset.clone()),
        source,
        rows: Vec::new(),
        ended: false,
        fuel,
    })
}

/// Canonicalizes an arbitrary generating sequence. The resulting stream is
/// not replayable; build it twice from equal sources to compare runs.
pub fn canonicalize<R: RawSource + 'static>(spec: FieldSpec, raw: R) -> SubspaceStream {
    SubspaceStream {
        spec,
        preset: None,
        source: Box::new(CanonicalSource {
            inner: Canonicalizer::new(spec, raw),
        }),
        rows: Vec::new(),
        ended: false,
        fuel: Fuel::from_env(),
    }
}

impl SubspaceStream {
    pub fn spec(&self) -> FieldSpec {
        self.spec
    }

    pub fn preset(&self) -> Option<&Preset> {
        self.preset.as_ref()
    }

    pub fn fuel(&self) -> &Fuel {
        &self.fuel
    }

    pub fn describe(&self) -> String {
        match &self.preset {
            Some(p) => p.to_string(),
            None => "canonicalized input".into(),
        }
    }

    /// Rows produced so far.
    pub fn produced(&self) -> &[SparseVector] {
        &self.rows
    }

    /// Fresh stream over the same subspace.
    pub fn replay(&self) -> Result<SubspaceStream> {
        match &self.preset {
            Some(p) => make_stream_with_fuel(p, self.spec, Fuel::new(self.fuel.limit)),
            None => Err(Error::MalformedPreset(
                "stream was not built from a preset and cannot be replayed".into(),
            )),
        }
    }

    fn pull(&mut self) -> Result<bool> {
        if self.ended {
            return Ok(false);
        }
        self.fuel.spend(1)?;
        let index = self.rows.len();
        match self.source.next_row(index, &self.fuel)? {
            Some(row) => {
                if let Some(prev) = self.rows.last() {
                    debug_assert!(prev.min_support() < row.min_support());
                }
                debug_assert!(row.leading().is_some_and(Scalar::is_one));
                self.rows.push(row);
                Ok(true)
            }
            None => {
                self.ended = true;
                Ok(false)
            }
        }
    }

    /// Row `i`, or `None` if the subspace has dimension at most `i`.
    pub fn try_row(&mut self, i: usize) -> Result<Option<&SparseVector>> {
        while self.rows.len() <= i {
            if !self.pull()? {
                return Ok(None);
            }
        }
        Ok(Some(&self.rows[i]))
    }

    /// Row `i`; a finite-dimensional presentation running out is an error.
    pub fn row(&mut self, i: usize) -> Result<&SparseVector> {
        let have = {
            self.try_row(i)?;
            self.rows.len()
        };
        if have <= i {
            return Err(Error::StreamExhausted { rows: have });
        }
        Ok(&self.rows[i])
    }

    pub fn pivot(&mut self, i: usize) -> Result<Option<usize>> {
        Ok(self.try_row(i)?.and_then(SparseVector::min_support))
    }

    /// The first `d` rows (fewer if the subspace is smaller).
    pub fn prefix(&mut self, d: usize) -> Result<EchelonBasis> {
        if d > 0 {
            self.try_row(d - 1)?;
        }
        let n = d.min(self.rows.len());
        Ok(EchelonBasis::from_reduced_unchecked(
            self.spec,
            self.rows[..n].to_vec(),
        ))
    }

    /// Number of rows with pivot at most `k`.
    pub fn count_pivots_at_most(&mut self, k: usize) -> Result<usize> {
        let mut n = self.rows.partition_point(|r| r.min_support() <= Some(k));
        while n == self.rows.len() {
            if !self.pull()? {
                break;
            }
            if self.rows[n].min_support() <= Some(k) {
                n += 1;
            }
        }
        Ok(n)
    }

    /// Like [`count_pivots_at_most`](Self::count_pivots_at_most) but stops
    /// after `limit` rows; the flag reports whether the limit was hit.
    pub fn count_pivots_at_most_limited(&mut self, k: usize, limit: usize) -> Result<(usize, bool)> {
        let mut n = self.rows.partition_point(|r| r.min_support() <= Some(k));
        while n == self.rows.len() && n < limit {
            if !self.pull()? {
                break;
            }
            if self.rows[n].min_support() <= Some(k) {
                n += 1;
            }
        }
        Ok((n.min(limit), n >= limit))
    }

    /// Exactly the rows with pivot ≤ K; all other rows miss [0, K].
    pub fn rows_until_pivot_exceeds(&mut self, k: usize) -> Result<EchelonBasis> {
        let n = self.count_pivots_at_most(k)?;
        Ok(EchelonBasis::from_reduced_unchecked(
            self.spec,
            self.rows[..n].to_vec(),
        ))
    }

    /// Exact membership of a nonzero vector.
    pub fn member(&mut self, x: &SparseVector) -> Result<bool> {
        if x.spec() != self.spec {
            return Err(Error::mismatch(self.spec, x.spec()));
        }
        let top = x.max_support().ok_or(Error::ZeroVector)?;
        let n = self.count_pivots_at_most(top)?;
        Ok(crate::echelon::reduce_by_rows(&self.rows[..n], x).is_zero())
    }

    /// Membership that accepts the zero vector.
    pub fn contains(&mut self, x: &SparseVector) -> Result<bool> {
        if x.is_zero() {
            return Ok(true);
        }
        self.member(x)
    }

    /// First row with pivot above `m` (the first row when `m` is `None`).
    pub fn first_row_above(&mut self, m: Option<usize>) -> Result<SparseVector> {
        let i = match m {
            None => 0,
            Some(m) => self.count_pivots_at_most(m)?,
        };
        Ok(self.row(i)?.clone())
    }

    /// Presentation of Y/M, the rows with pivot above `m`.
    pub fn tail(self, m: usize) -> SubspaceStream {
        let spec = self.spec;
        let fuel = self.fuel.clone();
        let preset = self.preset.clone().map(|p| Preset::tail(p, m));
        SubspaceStream {
            spec,
            preset,
            source: Box::new(TailSource {
                inner: self,
                above: m,
                next: None,
            }),
            rows: Vec::new(),
            ended: false,
            fuel,
        }
    }
}

pub fn rows_until_pivot_exceeds(y: &mut SubspaceStream, k: usize) -> Result<EchelonBasis> {
    y.rows_until_pivot_exceeds(k)
}

pub fn stream_member(x: &SparseVector, y: &mut SubspaceStream) -> Result<bool> {
    y.member(x)
}

pub fn tail_stream(y: SubspaceStream, m: usize) -> SubspaceStream {
    y.tail(m)
}

/// Rows of `s` with pivot in `[lo, hi]`, examining at most `limit` rows.
fn rows_in_range(
    s: &mut SubspaceStream,
    lo: usize,
    hi: usize,
    limit: usize,
) -> Result<(Vec<SparseVector>, bool)> {
    let start = match lo.checked_sub(1) {
        None => 0,
        Some(below) => s.count_pivots_at_most_limited(below, limit)?.0,
    };
    let (end, saturated) = s.count_pivots_at_most_limited(hi, limit)?;
    Ok((s.produced()[start..end.max(start)].to_vec(), saturated))
}

/// First nonzero vector of ⟨A⟩ ∩ ⟨B⟩ with minimum support above `lower`,
/// normalized to leading coefficient 1.
///
/// Works in windows `[lower+1, K]` with K doubling: a common vector whose
/// support ends by K uses only rows of either side with pivots in the
/// window, so each stage is an exact finite intersection. The first stage
/// that finds anything returns the first row of its reduced basis. Gives up
/// (`None`) once either side has contributed `max_rows` rows, or both
/// presentations are exhausted.
pub fn first_common_above(
    a: &mut SubspaceStream,
    b: &mut SubspaceStream,
    lower: Option<usize>,
    max_rows: usize,
) -> Result<Option<SparseVector>> {
    if a.spec != b.spec {
        return Err(Error::mismatch(a.spec, b.spec));
    }
    let spec = a.spec;
    let lo = match lower {
        None => 0,
        Some(l) => match l.checked_add(1) {
            Some(v) => v,
            None => return Ok(None),
        },
    };
    let mut width: usize = 1;
    loop {
        let hi = lo.saturating_add(width - 1);
        let (ra, sat_a) = rows_in_range(a, lo, hi, max_rows)?;
        let (rb, sat_b) = rows_in_range(b, lo, hi, max_rows)?;
        if !ra.is_empty() && !rb.is_empty() {
            let u = EchelonBasis::from_reduced_unchecked(spec, ra);
            let v = EchelonBasis::from_reduced_unchecked(spec, rb);
            let common = intersect(&u, &v)?;
            if let Some(first) = common.rows().first() {
                return Ok(Some(first.clone()));
            }
        }
        let a_done = a.ended && a.count_pivots_at_most(hi)? == a.rows.len();
        let b_done = b.ended && b.count_pivots_at_most(hi)? == b.rows.len();
        if sat_a || sat_b || a_done || b_done || hi == usize::MAX {
            return Ok(None);
        }
        width = width.saturating_mul(2);
    }
}
