//! Field-agnostic descriptions of infinite-dimensional subspaces.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{FieldSpec, Scalar};
use crate::vector::{SparseVector, VectorRepr};

/// Index sets for diagonal subspaces ⟨e_n : n ∈ set⟩. All are infinite.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum IndexSet {
    /// n ≡ r (mod m)
    Residue { r: usize, m: usize },
    /// n + 1 = 2^k · odd
    TwoAdic { k: u32 },
    /// n ≥ from
    AtLeast { from: usize },
    /// a finite set of extra indices together with another index set
    With { head: Vec<usize>, rest: Box<IndexSet> },
}

impl IndexSet {
    fn validate(&self) -> Result<()> {
        match self {
            IndexSet::Residue { r, m } => check_residue(*r, *m),
            IndexSet::TwoAdic { k } if *k >= usize::BITS - 1 => Err(Error::MalformedPreset(
                format!("two-adic level {k} leaves no representable index"),
            )),
            IndexSet::TwoAdic { .. } | IndexSet::AtLeast { .. } => Ok(()),
            IndexSet::With { rest, .. } => rest.validate(),
        }
    }

    /// Smallest element strictly greater than `prev` (or the least element).
    pub fn next_after(&self, prev: Option<usize>) -> Option<usize> {
        let lo = match prev {
            None => 0,
            Some(p) => p.checked_add(1)?,
        };
        match self {
            IndexSet::Residue { r, m } => {
                if lo <= *r {
                    return Some(*r);
                }
                let k = (lo - r).div_ceil(*m);
                k.checked_mul(*m)?.checked_add(*r)
            }
            IndexSet::TwoAdic { k } => {
                // n = 2^k (2j + 1) − 1
                let step = 1usize.checked_shl(*k)?;
                let first = step - 1;
                if lo <= first {
                    return Some(first);
                }
                let period = step.checked_mul(2)?;
                let j = (lo - first).div_ceil(period);
                j.checked_mul(period)?.checked_add(first)
            }
            IndexSet::AtLeast { from } => Some(lo.max(*from)),
            IndexSet::With { head, rest } => {
                let h = head.iter().copied().filter(|&h| h >= lo).min();
                let t = rest.next_after(prev);
                match (h, t) {
                    (Some(a), Some(b)) => Some(a.min(b)),
                    (a, b) => a.or(b),
                }
            }
        }
    }

    pub fn contains(&self, n: usize) -> bool {
        match n.checked_sub(1) {
            None => self.next_after(None) == Some(0),
            Some(p) => self.next_after(Some(p)) == Some(n),
        }
    }
}

/// Generators of block sequences.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Generator {
    /// e_0, e_1, e_2, ...
    Units,
    /// Greedy block sequence inside the intersection of two subspaces: each
    /// term is the first common vector found above the previous term.
    Intersection { left: Box<Preset>, right: Box<Preset> },
}

/// A replayable description of a subspace, instantiated by
/// [`make_stream`](crate::stream::make_stream).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Preset {
    /// ⟨e_n : n ≡ r (mod m)⟩
    DiagonalResidue { r: usize, m: usize },
    /// ⟨e_n : n ∈ index⟩
    DiagonalIndexset { index: IndexSet },
    /// rows Σ c_j e_{m·n + offset_j}, offsets distinct and below m
    Pattern { m: usize, terms: Vec<(usize, String)> },
    /// ⟨e_{code(x↾n)} : n⟩ for the periodic binary sequence x = bits bits bits ...
    PerfectBranch { bits: String },
    /// span of a block sequence
    BlockFromGenerator { generator: Generator },
    /// reduced echelon form of the head vectors followed by the rows of `tail`
    Canonical {
        head: Vec<VectorRepr>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tail: Option<Box<Preset>>,
    },
    /// the rows of `inner` with pivot above `above`
    Tail { inner: Box<Preset>, above: usize },
}

fn check_residue(r: usize, m: usize) -> Result<()> {
    if m == 0 {
        return Err(Error::MalformedPreset("modulus must be positive".into()));
    }
    if r >= m {
        return Err(Error::MalformedPreset(format!("residue {r} not below modulus {m}")));
    }
    Ok(())
}

/// Index assigned to a finite binary string s of length n: 2^n − 1 + (s read
/// as a binary number, first bit most significant). Strings are ordered first
/// by length, then lexicographically, so codes of successive prefixes of one
/// sequence strictly increase.
pub fn branch_code(bits: &[bool]) -> Option<usize> {
    let n = bits.len();
    if n >= usize::BITS as usize {
        return None;
    }
    let val = bits.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize);
    (1usize << n).checked_sub(1)?.checked_add(val)
}

pub fn parse_bits(bits: &str) -> Result<Vec<bool>> {
    if bits.is_empty() {
        return Err(Error::MalformedPreset("perfect-branch bits must be nonempty".into()));
    }
    bits.chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            other => Err(Error::MalformedPreset(format!("bit {other:?} is not 0 or 1"))),
        })
        .collect()
}

impl Preset {
    pub fn residue(r: usize, m: usize) -> Self {
        Preset::DiagonalResidue { r, m }
    }

    pub fn evens() -> Self {
        Preset::residue(0, 2)
    }

    pub fn odds() -> Self {
        Preset::residue(1, 2)
    }

    pub fn two_adic(k: u32) -> Self {
        Preset::DiagonalIndexset {
            index: IndexSet::TwoAdic { k },
        }
    }

    pub fn units() -> Self {
        Preset::BlockFromGenerator {
            generator: Generator::Units,
        }
    }

    /// Pattern with integer coefficients.
    pub fn pattern(m: usize, terms: &[(usize, i64)]) -> Self {
        Preset::Pattern {
            m,
            terms: terms.iter().map(|&(o, c)| (o, c.to_string())).collect(),
        }
    }

    /// ⟨e_{2n} + e_{2n+1}⟩
    pub fn pairs() -> Self {
        Preset::pattern(2, &[(0, 1), (1, 1)])
    }

    pub fn tail(inner: Preset, above: usize) -> Self {
        Preset::Tail {
            inner: Box::new(inner),
            above,
        }
    }

    pub fn intersection(left: Preset, right: Preset) -> Self {
        Preset::BlockFromGenerator {
            generator: Generator::Intersection {
                left: Box::new(left),
                right: Box::new(right),
            },
        }
    }

    pub fn canonical(head: &[SparseVector], tail: Option<Preset>) -> Self {
        Preset::Canonical {
            head: head.iter().map(SparseVector::to_repr).collect(),
            tail: tail.map(Box::new),
        }
    }

    /// Checks the description against a field.
    pub fn validate(&self, spec: FieldSpec) -> Result<()> {
        match self {
            Preset::DiagonalResidue { r, m } => check_residue(*r, *m),
            Preset::DiagonalIndexset { index } => index.validate(),
            Preset::Pattern { .. } => self.pattern_terms(spec).map(|_| ()),
            Preset::PerfectBranch { bits } => parse_bits(bits).map(|_| ()),
            Preset::BlockFromGenerator { generator } => match generator {
                Generator::Units => Ok(()),
                Generator::Intersection { left, right } => {
                    left.validate(spec)?;
                    right.validate(spec)
                }
            },
            Preset::Canonical { head, tail } => {
                for v in head {
                    v.decode(spec)
                        .map_err(|e| Error::MalformedPreset(format!("head vector: {e}")))?;
                }
                match tail {
                    Some(t) => t.validate(spec),
                    None => Ok(()),
                }
            }
            Preset::Tail { inner, .. } => inner.validate(spec),
        }
    }

    /// Pattern offsets with coefficients scaled so the first is 1.
    pub(crate) fn pattern_terms(&self, spec: FieldSpec) -> Result<(usize, Vec<(usize, Scalar)>)> {
        let Preset::Pattern { m, terms } = self else {
            return Err(Error::MalformedPreset("not a pattern".into()));
        };
        if *m == 0 {
            return Err(Error::MalformedPreset("pattern period must be positive".into()));
        }
        if terms.is_empty() {
            return Err(Error::MalformedPreset("pattern needs at least one term".into()));
        }
        let mut parsed = Vec::with_capacity(terms.len());
        for (off, text) in terms {
            if off >= m {
                return Err(Error::MalformedPreset(format!(
                    "offset {off} not below period {m}"
                )));
            }
            let c = spec
                .parse_scalar(text)
                .map_err(|e| Error::MalformedPreset(e.to_string()))?;
            if c.is_zero() {
                return Err(Error::MalformedPreset(format!("zero coefficient at offset {off}")));
            }
            parsed.push((*off, c));
        }
        parsed.sort_by_key(|(o, _)| *o);
        if parsed.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::MalformedPreset("repeated pattern offset".into()));
        }
        let inv = parsed[0].1.inv()?;
        Ok((*m, parsed.into_iter().map(|(o, c)| (o, &c * &inv)).collect()))
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("preset encodes")
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        serde_json::from_value(value.clone()).map_err(|e| Error::MalformedPreset(e.to_string()))
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Preset::DiagonalResidue { r, m } => write!(f, "diag(n = {r} mod {m})"),
            Preset::DiagonalIndexset { index } => write!(f, "diag({index:?})"),
            Preset::Pattern { m, terms } => write!(f, "pattern(m={m}, {terms:?})"),
            Preset::PerfectBranch { bits } => write!(f, "branch({bits}...)"),
            Preset::BlockFromGenerator { generator } => match generator {
                Generator::Units => f.write_str("E"),
                Generator::Intersection { left, right } => write!(f, "({left}) & ({right})"),
            },
            Preset::Canonical { head, tail } => match tail {
                Some(t) => write!(f, "canonical({} head vectors, then {t})", head.len()),
                None => write!(f, "canonical({} vectors)", head.len()),
            },
            Preset::Tail { inner, above } => write!(f, "({inner})/{above}"),
        }
    }
}
