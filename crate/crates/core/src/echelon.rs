//! Reduced echelon bases of finite-dimensional subspaces.
//!
//! Pivots are leftmost: the pivot of a row is the minimum of its support.
//! Rows are kept sorted by pivot, each has leading coefficient 1, and every
//! pivot column is zero in all other rows. Two consequences are used all over
//! the crate:
//!
//! * the coefficient of a row in any member of the span can be read off at
//!   the row's pivot coordinate, so reduction is a single pass;
//! * a row with pivot > K has support disjoint from `[0, K]`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{FieldSpec, Scalar};
use crate::vector::{SparseVector, VectorRepr};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EchelonBasis {
    spec: FieldSpec,
    rows: Vec<SparseVector>,
    pivots: Vec<usize>,
}

impl EchelonBasis {
    pub fn new(spec: FieldSpec) -> Self {
        EchelonBasis {
            spec,
            rows: Vec::new(),
            pivots: Vec::new(),
        }
    }

    /// Reduced echelon basis of the span of `rows`.
    pub fn from_rows(spec: FieldSpec, rows: &[SparseVector]) -> Result<Self> {
        let mut b = EchelonBasis::new(spec);
        for r in rows {
            b.insert(r)?;
        }
        Ok(b)
    }

    /// Wraps rows that are already known to be in reduced echelon form.
    pub(crate) fn from_reduced_unchecked(spec: FieldSpec, rows: Vec<SparseVector>) -> Self {
        let pivots = rows
            .iter()
            .map(|r| r.min_support().expect("echelon rows are nonzero"))
            .collect();
        EchelonBasis { spec, rows, pivots }
    }

    pub fn spec(&self) -> FieldSpec {
        self.spec
    }

    pub fn rows(&self) -> &[SparseVector] {
        &self.rows
    }

    pub fn into_rows(self) -> Vec<SparseVector> {
        self.rows
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Largest index in the support of any row.
    pub fn max_support(&self) -> Option<usize> {
        self.rows.iter().filter_map(|r| r.max_support()).max()
    }

    fn check(&self, spec: FieldSpec) -> Result<()> {
        if self.spec != spec {
            return Err(Error::mismatch(self.spec, spec));
        }
        Ok(())
    }

    /// `v − Σ v[p]·row_p` over the pivots p in the support of v.
    pub fn reduce(&self, v: &SparseVector) -> Result<SparseVector> {
        self.check(v.spec())?;
        Ok(self.reduce_same_field(v))
    }

    pub(crate) fn reduce_same_field(&self, v: &SparseVector) -> SparseVector {
        let mut out = v.clone();
        for (row_idx, c) in self.coefficients(v) {
            out = out.add_scaled(&-&c, &self.rows[row_idx]);
        }
        out
    }

    /// (row index, coefficient at that row's pivot) for every pivot in supp v.
    fn coefficients(&self, v: &SparseVector) -> Vec<(usize, Scalar)> {
        let mut out = Vec::new();
        for (i, c) in v.entries() {
            if let Ok(k) = self.pivots.binary_search(i) {
                out.push((k, c.clone()));
            }
        }
        out
    }

    /// Adds `v` to the span; returns whether the dimension grew.
    pub fn insert(&mut self, v: &SparseVector) -> Result<bool> {
        self.check(v.spec())?;
        let r = self.reduce_same_field(v);
        if r.is_zero() {
            return Ok(false);
        }
        let r = r.normalized()?;
        let p = r.min_support().expect("nonzero");
        for row in self.rows.iter_mut() {
            if let Some(c) = row.coeff(p).cloned() {
                *row = row.add_scaled(&-&c, &r);
            }
        }
        let at = self.pivots.partition_point(|&q| q < p);
        self.pivots.insert(at, p);
        self.rows.insert(at, r);
        Ok(true)
    }

    /// Coefficients expressing `x` in the rows, as (row index, nonzero
    /// coefficient) pairs, or `None` when `x` is outside the span.
    pub fn member(&self, x: &SparseVector) -> Result<Option<Vec<(usize, Scalar)>>> {
        self.check(x.spec())?;
        if !self.reduce_same_field(x).is_zero() {
            return Ok(None);
        }
        Ok(Some(self.coefficients(x)))
    }

    pub fn contains(&self, x: &SparseVector) -> Result<bool> {
        self.check(x.spec())?;
        Ok(self.reduce_same_field(x).is_zero())
    }

    /// Rows whose pivot is at most `k`.
    pub fn rows_with_pivot_at_most(&self, k: usize) -> EchelonBasis {
        let n = self.pivots.partition_point(|&p| p <= k);
        EchelonBasis {
            spec: self.spec,
            rows: self.rows[..n].to_vec(),
            pivots: self.pivots[..n].to_vec(),
        }
    }

    /// Rows whose pivot is strictly greater than `m` (the span of all members
    /// with minimum support above `m`).
    pub fn rows_above(&self, m: usize) -> EchelonBasis {
        let n = self.pivots.partition_point(|&p| p <= m);
        EchelonBasis {
            spec: self.spec,
            rows: self.rows[n..].to_vec(),
            pivots: self.pivots[n..].to_vec(),
        }
    }

    /// Checks the reduced echelon invariants.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        for (k, row) in self.rows.iter().enumerate() {
            if row.spec() != self.spec {
                return Err(format!("row {k} has field {}", row.spec()));
            }
            let p = row.min_support().ok_or_else(|| format!("row {k} is zero"))?;
            if self.pivots.get(k) != Some(&p) {
                return Err(format!("row {k} pivot table is stale"));
            }
            if !row.leading().is_some_and(Scalar::is_one) {
                return Err(format!("row {k} leading coefficient is not 1"));
            }
            if k > 0 && self.pivots[k - 1] >= p {
                return Err(format!("pivots not increasing at row {k}"));
            }
            for (j, other) in self.rows.iter().enumerate() {
                if j != k && other.coeff(p).is_some() {
                    return Err(format!("pivot column {p} of row {k} is nonzero in row {j}"));
                }
            }
        }
        Ok(())
    }

    pub fn to_repr(&self) -> BasisRepr {
        BasisRepr {
            basis: self.rows.iter().map(SparseVector::to_repr).collect(),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self.to_repr()).expect("basis encodes")
    }
}

/// Wire form `{"basis": [vector, ...]}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisRepr {
    pub basis: Vec<VectorRepr>,
}

impl BasisRepr {
    pub fn decode_vectors(&self, spec: FieldSpec) -> Result<Vec<SparseVector>> {
        self.basis.iter().map(|v| v.decode(spec)).collect()
    }

    /// Decodes and requires the rows to already be in reduced echelon form.
    pub fn decode_reduced(&self, spec: FieldSpec) -> Result<EchelonBasis> {
        let rows = self.decode_vectors(spec)?;
        let b = EchelonBasis::from_rows(spec, &rows)?;
        if b.rows != rows {
            return Err(Error::MalformedVector(
                "basis rows are not in reduced echelon form".into(),
            ));
        }
        Ok(b)
    }
}

/// Reduction of `v` by reduced echelon rows given as a slice.
pub(crate) fn reduce_by_rows(rows: &[SparseVector], v: &SparseVector) -> SparseVector {
    let mut out = v.clone();
    for (i, c) in v.entries() {
        if let Ok(k) = rows.binary_search_by_key(&Some(*i), SparseVector::min_support) {
            out = out.add_scaled(&-c, &rows[k]);
        }
    }
    out
}

pub fn rref(spec: FieldSpec, rows: &[SparseVector]) -> Result<EchelonBasis> {
    EchelonBasis::from_rows(spec, rows)
}

pub fn member(x: &SparseVector, b: &EchelonBasis) -> Result<Option<Vec<(usize, Scalar)>>> {
    b.member(x)
}

/// Basis of the kernel of the linear map e_i ↦ vs[i], as dense coefficient
/// vectors over `vs`.
pub fn kernel(spec: FieldSpec, vs: &[SparseVector]) -> Result<Vec<Vec<Scalar>>> {
    let n = vs.len();
    // echelon (not reduced) rows keyed by pivot, each carrying the
    // combination of inputs that produced it
    let mut rows: BTreeMap<usize, (SparseVector, Vec<Scalar>)> = BTreeMap::new();
    let mut out = Vec::new();
    for (i, v) in vs.iter().enumerate() {
        if v.spec() != spec {
            return Err(Error::mismatch(spec, v.spec()));
        }
        let mut r = v.clone();
        let mut comb = vec![spec.zero(); n];
        comb[i] = spec.one();
        while let Some(p) = r.min_support() {
            let Some((row, row_comb)) = rows.get(&p) else {
                break;
            };
            let c = r.leading().expect("nonzero").clone();
            let neg = -&c;
            r = r.add_scaled(&neg, row);
            for (a, b) in comb.iter_mut().zip(row_comb) {
                *a = &*a + &(&neg * b);
            }
        }
        match r.min_support() {
            None => out.push(comb),
            Some(p) => {
                let inv = r.leading().expect("nonzero").inv()?;
                let r = r.scale(&inv)?;
                let comb = comb.iter().map(|a| a * &inv).collect();
                rows.insert(p, (r, comb));
            }
        }
    }
    Ok(out)
}

/// Exact intersection of two spans, via the kernel of the residual map
/// u ↦ reduce(u, V) on the rows of U.
pub fn intersect(u: &EchelonBasis, v: &EchelonBasis) -> Result<EchelonBasis> {
    u.check(v.spec)?;
    let spec = u.spec;
    let residuals: Vec<SparseVector> = u.rows.iter().map(|r| v.reduce_same_field(r)).collect();
    let mut out = EchelonBasis::new(spec);
    for comb in kernel(spec, &residuals)? {
        let mut w = SparseVector::zero(spec);
        for (c, row) in comb.iter().zip(&u.rows) {
            w = w.add_scaled(c, row);
        }
        out.insert(&w)?;
    }
    Ok(out)
}

/// Intersection of the span of arbitrary vectors with a basis.
pub fn intersect_span(xs: &[SparseVector], v: &EchelonBasis) -> Result<EchelonBasis> {
    let u = EchelonBasis::from_rows(v.spec, xs)?;
    intersect(&u, v)
}

pub fn sum_space(u: &EchelonBasis, v: &EchelonBasis) -> Result<EchelonBasis> {
    u.check(v.spec)?;
    let mut out = u.clone();
    for r in &v.rows {
        out.insert(r)?;
    }
    Ok(out)
}
