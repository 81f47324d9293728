//! Finitely supported vectors of the countable-dimensional space E.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{FieldSpec, Scalar};

/// Sparse vector in canonical form: strictly increasing indices, nonzero
/// coefficients. The zero vector has no entries.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SparseVector {
    spec: FieldSpec,
    entries: Vec<(usize, Scalar)>,
}

impl SparseVector {
    pub fn zero(spec: FieldSpec) -> Self {
        SparseVector {
            spec,
            entries: Vec::new(),
        }
    }

    /// The basis vector e_n.
    pub fn basis(spec: FieldSpec, n: usize) -> Self {
        SparseVector {
            spec,
            entries: vec![(n, spec.one())],
        }
    }

    /// Builds a vector from arbitrary terms: duplicates are summed and zeros
    /// dropped.
    pub fn from_terms(spec: FieldSpec, mut terms: Vec<(usize, Scalar)>) -> Result<Self> {
        for (_, c) in &terms {
            if c.spec() != spec {
                return Err(Error::mismatch(spec, c.spec()));
            }
        }
        terms.sort_by_key(|(i, _)| *i);
        let mut entries: Vec<(usize, Scalar)> = Vec::with_capacity(terms.len());
        for (i, c) in terms {
            match entries.last_mut() {
                Some((j, d)) if *j == i => *d = &*d + &c,
                _ => entries.push((i, c)),
            }
        }
        entries.retain(|(_, c)| !c.is_zero());
        Ok(SparseVector { spec, entries })
    }

    /// Convenience constructor from integer coefficients.
    pub fn from_ints(spec: FieldSpec, terms: &[(usize, i64)]) -> Self {
        let terms = terms.iter().map(|&(i, c)| (i, spec.from_int(c))).collect();
        Self::from_terms(spec, terms).expect("coefficients built in the same field")
    }

    /// Sum of basis vectors e_i over the given indices.
    pub fn indicator(spec: FieldSpec, indices: impl IntoIterator<Item = usize>) -> Self {
        let terms: Vec<_> = indices.into_iter().map(|i| (i, spec.one())).collect();
        Self::from_terms(spec, terms).expect("coefficients built in the same field")
    }

    pub(crate) fn from_sorted_unchecked(spec: FieldSpec, entries: Vec<(usize, Scalar)>) -> Self {
        debug_assert!(entries.windows(2).all(|w| w[0].0 < w[1].0));
        debug_assert!(entries.iter().all(|(_, c)| !c.is_zero()));
        SparseVector { spec, entries }
    }

    pub fn spec(&self) -> FieldSpec {
        self.spec
    }

    pub fn entries(&self) -> &[(usize, Scalar)] {
        &self.entries
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn support(&self) -> BTreeSet<usize> {
        self.entries.iter().map(|(i, _)| *i).collect()
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.iter().map(|(i, _)| *i)
    }

    pub fn min_support(&self) -> Option<usize> {
        self.entries.first().map(|(i, _)| *i)
    }

    pub fn max_support(&self) -> Option<usize> {
        self.entries.last().map(|(i, _)| *i)
    }

    pub fn leading(&self) -> Option<&Scalar> {
        self.entries.first().map(|(_, c)| c)
    }

    pub fn coeff(&self, index: usize) -> Option<&Scalar> {
        self.entries
            .binary_search_by_key(&index, |(i, _)| *i)
            .ok()
            .map(|k| &self.entries[k].1)
    }

    fn check(&self, other: &SparseVector) -> Result<()> {
        if self.spec != other.spec {
            return Err(Error::mismatch(self.spec, other.spec));
        }
        Ok(())
    }

    /// self + c·other, assuming matching fields.
    pub(crate) fn add_scaled(&self, c: &Scalar, other: &SparseVector) -> SparseVector {
        if c.is_zero() || other.is_zero() {
            return self.clone();
        }
        let mut out = Vec::with_capacity(self.entries.len() + other.entries.len());
        let (mut a, mut b) = (self.entries.iter().peekable(), other.entries.iter().peekable());
        loop {
            match (a.peek(), b.peek()) {
                (Some((i, x)), Some((j, y))) => {
                    if i < j {
                        out.push((*i, x.clone()));
                        a.next();
                    } else if j < i {
                        out.push((*j, c * y));
                        b.next();
                    } else {
                        let s = x + &(c * y);
                        if !s.is_zero() {
                            out.push((*i, s));
                        }
                        a.next();
                        b.next();
                    }
                }
                (Some((i, x)), None) => {
                    out.push((*i, x.clone()));
                    a.next();
                }
                (None, Some((j, y))) => {
                    out.push((*j, c * y));
                    b.next();
                }
                (None, None) => break,
            }
        }
        SparseVector {
            spec: self.spec,
            entries: out,
        }
    }

    pub fn try_add(&self, other: &SparseVector) -> Result<SparseVector> {
        self.check(other)?;
        Ok(self.add_scaled(&self.spec.one(), other))
    }

    pub fn try_sub(&self, other: &SparseVector) -> Result<SparseVector> {
        self.check(other)?;
        Ok(self.add_scaled(&-&self.spec.one(), other))
    }

    pub fn scale(&self, c: &Scalar) -> Result<SparseVector> {
        if c.spec() != self.spec {
            return Err(Error::mismatch(self.spec, c.spec()));
        }
        if c.is_zero() {
            return Ok(SparseVector::zero(self.spec));
        }
        Ok(SparseVector {
            spec: self.spec,
            entries: self.entries.iter().map(|(i, x)| (*i, c * x)).collect(),
        })
    }

    /// Scales so that the leading coefficient is 1.
    pub fn normalized(&self) -> Result<SparseVector> {
        let lead = self.leading().ok_or(Error::ZeroVector)?;
        self.scale(&lead.inv()?)
    }

    /// Entries with index strictly below `bound`.
    pub fn restrict_below(&self, bound: usize) -> SparseVector {
        SparseVector {
            spec: self.spec,
            entries: self
                .entries
                .iter()
                .filter(|(i, _)| *i < bound)
                .cloned()
                .collect(),
        }
    }

    /// Shifts every index up by `by`, failing on overflow.
    pub fn shifted(&self, by: usize) -> Option<SparseVector> {
        let mut entries = Vec::with_capacity(self.entries.len());
        for (i, c) in &self.entries {
            entries.push((i.checked_add(by)?, c.clone()));
        }
        Some(SparseVector {
            spec: self.spec,
            entries,
        })
    }

    pub fn to_repr(&self) -> VectorRepr {
        VectorRepr {
            v: self
                .entries
                .iter()
                .map(|(i, c)| (*i, c.to_text()))
                .collect(),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self.to_repr()).expect("vector encodes")
    }

    pub fn from_json(spec: FieldSpec, value: &serde_json::Value) -> Result<Self> {
        let repr: VectorRepr = serde_json::from_value(value.clone())
            .map_err(|e| Error::MalformedVector(e.to_string()))?;
        repr.decode(spec)
    }
}

impl fmt::Display for SparseVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.entries.is_empty() {
            return f.write_str("0");
        }
        for (k, (i, c)) in self.entries.iter().enumerate() {
            if k > 0 {
                f.write_str(" + ")?;
            }
            if c.is_one() {
                write!(f, "e{i}")?;
            } else {
                write!(f, "({c})e{i}")?;
            }
        }
        Ok(())
    }
}

/// Wire form `{"v": [[index, "coeff"], ...]}`. Decoding is strict: indices
/// must increase and coefficients must be nonzero.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VectorRepr {
    pub v: Vec<(usize, String)>,
}

impl VectorRepr {
    pub fn decode(&self, spec: FieldSpec) -> Result<SparseVector> {
        let mut entries = Vec::with_capacity(self.v.len());
        for (k, (i, text)) in self.v.iter().enumerate() {
            if k > 0 && self.v[k - 1].0 >= *i {
                return Err(Error::MalformedVector(format!(
                    "indices not strictly increasing at entry {k}"
                )));
            }
            let c = spec.parse_scalar(text)?;
            if c.is_zero() {
                return Err(Error::MalformedVector(format!("zero coefficient at index {i}")));
            }
            // reject non-canonical spellings so that artifacts stay byte-comparable
            if c.to_text() != text.trim() {
                return Err(Error::MalformedVector(format!(
                    "coefficient {text:?} is not in canonical form"
                )));
            }
            entries.push((*i, c));
        }
        Ok(SparseVector { spec, entries })
    }
}

pub fn support(v: &SparseVector) -> BTreeSet<usize> {
    v.support()
}

/// `max supp x < min supp y`; both vectors must be nonzero.
pub fn block_lt(x: &SparseVector, y: &SparseVector) -> Result<bool> {
    match (x.max_support(), y.min_support()) {
        (Some(a), Some(b)) => Ok(a < b),
        _ => Err(Error::ZeroVector),
    }
}

pub fn is_block_sequence(xs: &[SparseVector]) -> bool {
    first_block_violation(xs).is_none()
}

/// Index of the first entry that is zero or not above its predecessor.
pub fn first_block_violation(xs: &[SparseVector]) -> Option<usize> {
    for (k, x) in xs.iter().enumerate() {
        if x.is_zero() {
            return Some(k);
        }
        if k > 0 && xs[k - 1].max_support() >= x.min_support() {
            return Some(k);
        }
    }
    None
}

pub fn check_block_sequence(xs: &[SparseVector]) -> Result<()> {
    match first_block_violation(xs) {
        Some(index) => Err(Error::NotBlockSequence { index }),
        None => Ok(()),
    }
}

/// Exact linear combination Σ c·v.
pub fn vec_combine(spec: FieldSpec, terms: &[(Scalar, SparseVector)]) -> Result<SparseVector> {
    let mut acc = SparseVector::zero(spec);
    for (c, v) in terms {
        if c.spec() != spec {
            return Err(Error::mismatch(spec, c.spec()));
        }
        if v.spec() != spec {
            return Err(Error::mismatch(spec, v.spec()));
        }
        acc = acc.add_scaled(c, v);
    }
    Ok(acc)
}

/// `min supp v > m`.
pub fn above(v: &SparseVector, m: usize) -> Result<bool> {
    v.min_support().map(|s| s > m).ok_or(Error::ZeroVector)
}

/// Sum of vectors sharing a field.
pub fn sum(spec: FieldSpec, xs: &[SparseVector]) -> Result<SparseVector> {
    let one = spec.one();
    let terms: Vec<_> = xs.iter().map(|x| (one.clone(), x.clone())).collect();
    vec_combine(spec, &terms)
}
