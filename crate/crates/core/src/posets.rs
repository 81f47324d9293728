//! Finite forcing conditions: pairs (s, F) of a block sequence and a finite
//! set of family members, and Hechler-style tables indexed by labelled pairs.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::echelon::{intersect, EchelonBasis};
use crate::error::{Error, Result};
use crate::extension::{extend_avoiding_all, extend_bound, finite_extend_bound, span_meet, ExtendOptions};
use crate::field::FieldSpec;
use crate::madlab::ADFamily;
use crate::stream::{make_stream, Preset};
use crate::vector::{check_block_sequence, SparseVector, VectorRepr};

/// (s, F): s a normalized block sequence, F member indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MAPCondition {
    pub s: Vec<SparseVector>,
    pub f: BTreeSet<usize>,
}

/// JSON: `{"field":"gf2","s":[vec,...],"F":[0,2]}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MAPConditionRepr {
    pub field: FieldSpec,
    pub s: Vec<VectorRepr>,
    #[serde(rename = "F")]
    pub f: BTreeSet<usize>,
}

impl MAPCondition {
    pub fn new(s: Vec<SparseVector>, f: impl IntoIterator<Item = usize>) -> Result<Self> {
        check_block_sequence(&s)?;
        for (i, x) in s.iter().enumerate() {
            if !x.leading().is_some_and(|c| c.is_one()) {
                return Err(Error::InvalidCondition(format!(
                    "s[{i}] does not have leading coefficient 1"
                )));
            }
        }
        Ok(MAPCondition {
            s,
            f: f.into_iter().collect(),
        })
    }

    pub fn empty() -> Self {
        MAPCondition {
            s: Vec::new(),
            f: BTreeSet::new(),
        }
    }

    pub fn to_repr(&self, spec: FieldSpec) -> MAPConditionRepr {
        MAPConditionRepr {
            field: spec,
            s: self.s.iter().map(SparseVector::to_repr).collect(),
            f: self.f.clone(),
        }
    }

    pub fn from_repr(r: &MAPConditionRepr) -> Result<Self> {
        let s = r.s.iter().map(|v| v.decode(r.field)).collect::<Result<_>>()?;
        MAPCondition::new(s, r.f.iter().copied())
    }
}

fn check_members(f: &BTreeSet<usize>, fam: &ADFamily) -> Result<()> {
    match f.iter().find(|&&i| i >= fam.len()) {
        Some(&i) => Err(Error::InvalidIndex {
            index: i,
            len: fam.len(),
        }),
        None => Ok(()),
    }
}

/// q ≤ p: q.s extends p.s, q.F ⊇ p.F, and ⟨q.s⟩ ∩ X ⊆ ⟨p.s⟩ for X ∈ p.F.
pub fn map_leq(q: &MAPCondition, p: &MAPCondition, fam: &ADFamily) -> Result<bool> {
    check_members(&q.f, fam)?;
    check_members(&p.f, fam)?;
    if q.s.len() < p.s.len() || q.s[..p.s.len()] != p.s[..] || !q.f.is_superset(&p.f) {
        return Ok(false);
    }
    let p_span = EchelonBasis::from_rows(fam.spec(), &p.s)?;
    for &m in &p.f {
        let meet = span_meet(&q.s, &mut fam.stream(m)?)?;
        for v in meet.rows() {
            if !p_span.contains(v)? {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// (s⌢x, F) with x above the extension bound of every member of F at
/// max supp s and outside every member. x comes from the sum construction
/// on the members' tails above that bound, made pairwise disjoint by the
/// family's certificates.
pub fn map_extend(p: &MAPCondition, fam: &ADFamily) -> Result<MAPCondition> {
    check_members(&p.f, fam)?;
    let spec = fam.spec();
    let top = p.s.last().and_then(SparseVector::max_support);
    let x = if p.f.is_empty() {
        SparseVector::basis(spec, top.map_or(0, |t| t + 1))
    } else {
        let idx: Vec<usize> = p.f.iter().copied().collect();
        let sub = fam.select(&idx)?;
        let (_, cut) = sub.disjoint_tails()?;
        let mut bound = cut;
        if let Some(t) = top {
            let mut m = t;
            for &i in &idx {
                m = m.max(extend_bound(&mut fam.stream(i)?, t)?);
            }
            bound = Some(bound.map_or(m, |c| c.max(m)));
        }
        let mut tails = sub
            .members()
            .iter()
            .map(|y| {
                let t = match bound {
                    Some(b) => Preset::tail(y.clone(), b),
                    None => y.clone(),
                };
                make_stream(&t, spec)
            })
            .collect::<Result<Vec<_>>>()?;
        extend_avoiding_all(&mut tails, &[], ExtendOptions::default())?.normalized()?
    };
    let mut s = p.s.clone();
    s.push(x);
    let q = MAPCondition::new(s, p.f.iter().copied())?;
    if !map_leq(&q, p, fam)? {
        return Err(Error::Postcondition {
            k: q.s.len() - 1,
            what: "extension is not below the condition".into(),
        });
    }
    Ok(q)
}

/// (s, F ∪ {member}).
pub fn map_add_member(p: &MAPCondition, member: usize, fam: &ADFamily) -> Result<MAPCondition> {
    if member >= fam.len() {
        return Err(Error::InvalidIndex {
            index: member,
            len: fam.len(),
        });
    }
    let mut q = p.clone();
    q.f.insert(member);
    Ok(q)
}

pub type Pair = (String, usize);

/// p: F_p × n_p → E, stored as one block sequence of length n_p per pair.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QCondition {
    pub spec: FieldSpec,
    pub n: usize,
    pub rows: BTreeMap<Pair, Vec<SparseVector>>,
}

/// JSON: `{"field":"gf2","F":[["a1",0]],"n":2,"rows":{"a1,0":[vec,vec]}}`;
/// `field` may be omitted on input.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QConditionRepr {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<FieldSpec>,
    #[serde(rename = "F")]
    pub f: Vec<Pair>,
    pub n: usize,
    pub rows: BTreeMap<String, Vec<VectorRepr>>,
}

fn row_key(pair: &Pair) -> String {
    format!("{},{}", pair.0, pair.1)
}

impl QCondition {
    pub fn empty(spec: FieldSpec) -> Self {
        QCondition {
            spec,
            n: 0,
            rows: BTreeMap::new(),
        }
    }

    pub fn new(spec: FieldSpec, n: usize, rows: BTreeMap<Pair, Vec<SparseVector>>) -> Result<Self> {
        for (pair, row) in &rows {
            if row.len() != n {
                return Err(Error::InvalidCondition(format!(
                    "row {} has {} entries, expected {n}",
                    row_key(pair),
                    row.len()
                )));
            }
            if row.iter().any(|v| v.spec() != spec) {
                return Err(Error::mismatch(spec, "row vector field"));
            }
            check_block_sequence(row)
                .map_err(|e| Error::InvalidCondition(format!("row {}: {e}", row_key(pair))))?;
        }
        Ok(QCondition { spec, n, rows })
    }

    pub fn pairs(&self) -> impl Iterator<Item = &Pair> {
        self.rows.keys()
    }

    pub fn to_repr(&self) -> QConditionRepr {
        QConditionRepr {
            field: Some(self.spec),
            f: self.rows.keys().cloned().collect(),
            n: self.n,
            rows: self
                .rows
                .iter()
                .map(|(k, v)| (row_key(k), v.iter().map(SparseVector::to_repr).collect()))
                .collect(),
        }
    }

    /// Decodes, using `fallback` when the file names no field.
    pub fn from_repr(r: &QConditionRepr, fallback: FieldSpec) -> Result<Self> {
        let spec = r.field.unwrap_or(fallback);
        let keys: BTreeSet<String> = r.f.iter().map(row_key).collect();
        if keys.len() != r.f.len() {
            return Err(Error::InvalidCondition("duplicate pair in F".into()));
        }
        if keys != r.rows.keys().cloned().collect() {
            return Err(Error::InvalidCondition("rows do not match F".into()));
        }
        let mut rows = BTreeMap::new();
        for pair in &r.f {
            let row = r.rows[&row_key(pair)]
                .iter()
                .map(|v| v.decode(spec))
                .collect::<Result<Vec<_>>>()?;
            rows.insert(pair.clone(), row);
        }
        QCondition::new(spec, r.n, rows)
    }
}

fn span(spec: FieldSpec, row: &[SparseVector]) -> Result<EchelonBasis> {
    EchelonBasis::from_rows(spec, row)
}

/// Pairs of p sharing a label, each pair of betas once.
fn same_label_pairs(p: &QCondition) -> Vec<(&Pair, &Pair)> {
    let keys: Vec<&Pair> = p.rows.keys().collect();
    let mut out = Vec::new();
    for (i, a) in keys.iter().enumerate() {
        for b in &keys[i + 1..] {
            if a.0 == b.0 {
                out.push((*a, *b));
            }
        }
    }
    out
}

/// q ≤ p: q's table extends p's, and for every label α and β ≠ γ with
/// (α,β), (α,γ) ∈ F_p the spans of q's rows meet exactly where p's do.
pub fn q_leq(q: &QCondition, p: &QCondition) -> Result<bool> {
    if q.spec != p.spec {
        return Err(Error::mismatch(q.spec, p.spec));
    }
    if q.n < p.n {
        return Ok(false);
    }
    for (pair, row) in &p.rows {
        match q.rows.get(pair) {
            Some(qrow) if qrow[..p.n] == row[..] => {}
            _ => return Ok(false),
        }
    }
    for (a, b) in same_label_pairs(p) {
        let before = intersect(&span(p.spec, &p.rows[a])?, &span(p.spec, &p.rows[b])?)?;
        let after = intersect(&span(q.spec, &q.rows[a])?, &span(q.spec, &q.rows[b])?)?;
        if before != after {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Adds `pair` with row (e_0, …, e_{n−1}).
pub fn q_add_pair(p: &QCondition, pair: Pair) -> Result<QCondition> {
    if p.rows.contains_key(&pair) {
        return Err(Error::DuplicatePair {
            label: pair.0,
            beta: pair.1,
        });
    }
    let mut q = p.clone();
    let row = (0..p.n).map(|i| SparseVector::basis(p.spec, i)).collect();
    q.rows.insert(pair, row);
    debug_assert!(q_leq(&q, p).unwrap_or(false));
    Ok(q)
}

/// Adds one level with every new vector above `m`. For each label the betas
/// are processed in order; the new vector for β_ℓ starts above a running
/// bound N_ℓ that dominates the extension bounds of the spans already
/// extended (β_i, i < ℓ) and of those still pending (β_j, j > ℓ), and is the
/// first basis vector there outside all of them.
pub fn q_extend_level(p: &QCondition, m: usize) -> Result<QCondition> {
    let spec = p.spec;
    let mut by_label: BTreeMap<&str, Vec<&Pair>> = BTreeMap::new();
    for pair in p.rows.keys() {
        by_label.entry(pair.0.as_str()).or_default().push(pair);
    }
    let mut q = p.clone();
    for pairs in by_label.values() {
        let mut extended: Vec<EchelonBasis> = Vec::new();
        let pending: Vec<EchelonBasis> = pairs
            .iter()
            .map(|pair| span(spec, &p.rows[*pair]))
            .collect::<Result<_>>()?;
        let mut running = pairs
            .iter()
            .flat_map(|pair| p.rows[*pair].iter().filter_map(SparseVector::max_support))
            .max()
            .map_or(m, |t| t.max(m));
        for (l, pair) in pairs.iter().enumerate() {
            let mut n_l = running;
            for y in extended.iter().chain(&pending[l + 1..]) {
                n_l = n_l.max(finite_extend_bound(y, running));
            }
            let mut t = n_l + 1;
            let x = loop {
                let e = SparseVector::basis(spec, t);
                let mut outside = !pending[l].contains(&e)?;
                for y in extended.iter().chain(&pending[l + 1..]) {
                    outside &= !y.contains(&e)?;
                }
                if outside {
                    break e;
                }
                t += 1;
            };
            running = t;
            let mut ext = pending[l].clone();
            ext.insert(&x)?;
            extended.push(ext);
            q.rows.get_mut(*pair).expect("pair present").push(x);
        }
    }
    q.n = p.n + 1;
    let q = QCondition::new(spec, q.n, q.rows)?;
    if !q_leq(&q, p)? {
        return Err(Error::Postcondition {
            k: p.n,
            what: "new level changes an intersection".into(),
        });
    }
    Ok(q)
}
