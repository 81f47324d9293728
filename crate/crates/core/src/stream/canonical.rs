//! Incremental reduced echelon form of an infinite generating sequence.

use crate::echelon::EchelonBasis;
use crate::error::Result;
use crate::field::FieldSpec;
use crate::vector::SparseVector;

use super::Fuel;

/// A producer of generating vectors.
///
/// `floor` is a lower bound on the minimum support of every vector the source
/// will still produce (`usize::MAX` once it is exhausted). The canonicalizer
/// relies on it to decide when a row can no longer change.
pub trait RawSource: Send {
    fn next_vector(&mut self, fuel: &Fuel) -> Result<Option<SparseVector>>;

    fn floor(&mut self, fuel: &Fuel) -> Result<usize>;
}

/// Emits rows of the reduced echelon form of everything the source produces.
///
/// Row `r` of the accumulated basis is final once its maximum support is
/// below the source's floor: every later input reduces to a vector whose
/// pivot is at least the floor, which can neither land before row `r` nor
/// touch any of its columns.
pub struct Canonicalizer<R> {
    raw: R,
    basis: EchelonBasis,
    emitted: usize,
    done: bool,
}

impl<R: RawSource> Canonicalizer<R> {
    pub fn new(spec: FieldSpec, raw: R) -> Self {
        Canonicalizer {
            raw,
            basis: EchelonBasis::new(spec),
            emitted: 0,
            done: false,
        }
    }

    pub fn next_row(&mut self, fuel: &Fuel) -> Result<Option<SparseVector>> {
        loop {
            if self.emitted < self.basis.dim() {
                let row = &self.basis.rows()[self.emitted];
                let settled = self.done
                    || row.max_support().expect("nonzero row") < self.raw.floor(fuel)?;
                if settled {
                    self.emitted += 1;
                    return Ok(Some(row.clone()));
                }
            } else if self.done {
                return Ok(None);
            }
            match self.raw.next_vector(fuel)? {
                Some(v) => {
                    self.basis.insert(&v)?;
                }
                None => self.done = true,
            }
        }
    }
}

/// Finite list of vectors followed by an optional row stream.
pub(crate) struct HeadThenStream {
    pub head: std::collections::VecDeque<SparseVector>,
    pub tail: Option<super::SubspaceStream>,
    pub tail_next: usize,
}

impl RawSource for HeadThenStream {
    fn next_vector(&mut self, _fuel: &Fuel) -> Result<Option<SparseVector>> {
        if let Some(v) = self.head.pop_front() {
            return Ok(Some(v));
        }
        let Some(tail) = self.tail.as_mut() else {
            return Ok(None);
        };
        let row = tail.try_row(self.tail_next)?.cloned();
        if row.is_some() {
            self.tail_next += 1;
        }
        Ok(row)
    }

    fn floor(&mut self, _fuel: &Fuel) -> Result<usize> {
        let head = self
            .head
            .iter()
            .filter_map(SparseVector::min_support)
            .min()
            .unwrap_or(usize::MAX);
        // tail rows have increasing pivots, so the next one bounds the rest
        let tail = match self.tail.as_mut() {
            Some(t) => t
                .try_row(self.tail_next)?
                .and_then(SparseVector::min_support)
                .unwrap_or(usize::MAX),
            None => usize::MAX,
        };
        Ok(head.min(tail))
    }
}
