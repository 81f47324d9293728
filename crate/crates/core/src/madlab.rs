//! Almost disjoint families and the witnesses built from them.
//!
//! Members are enumerated in a fixed order; the construction schedules
//! repeat it cyclically (`n ↦ n mod len`). All witnesses carry the list of
//! finite checks that justify them, and [`verify_witness`] re-runs those
//! checks from the artifact alone.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::echelon::EchelonBasis;
use crate::error::{Error, Result};
use crate::extension::{
    extend_avoiding_all, extend_bound, extend_disjoint_one, find_cert, is_line, make_disjoint,
    span_meet, ADCertificate, ExtendOptions,
};
use crate::field::FieldSpec;
use crate::stream::{first_common_above, make_stream, Preset, SubspaceStream};
use crate::vector::{check_block_sequence, SparseVector, VectorRepr};

/// Depth at which certificates are computed when a family file has none.
pub const DEFAULT_CERT_DEPTH: usize = 32;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ADFamily {
    spec: FieldSpec,
    members: Vec<Preset>,
    certs: Vec<ADCertificate>,
}

/// Family file: `{"field": "gf2", "members": [preset, ...], "certs": [...]}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyFile {
    pub field: FieldSpec,
    pub members: Vec<Preset>,
    #[serde(default)]
    pub certs: Vec<ADCertificate>,
}

impl ADFamily {
    /// Certifies every pair at the given depth.
    pub fn certified(spec: FieldSpec, members: Vec<Preset>, depth: usize) -> Result<Self> {
        let mut streams = open(&members, spec)?;
        let mut certs = Vec::new();
        for i in 0..streams.len() {
            for j in i + 1..streams.len() {
                let (a, b) = streams.split_at_mut(j);
                certs.push(ADCertificate::certify(i, j, &mut a[i], &mut b[0], depth)?);
            }
        }
        Ok(ADFamily {
            spec,
            members,
            certs,
        })
    }

    /// Accepts given certificates after re-verifying each; every pair must be
    /// covered.
    pub fn with_certs(spec: FieldSpec, members: Vec<Preset>, certs: Vec<ADCertificate>) -> Result<Self> {
        let mut streams = open(&members, spec)?;
        for c in &certs {
            let (i, j) = c.pair;
            if i == j || i >= streams.len() || j >= streams.len() {
                return Err(Error::InvalidIndex {
                    index: i.max(j),
                    len: streams.len(),
                });
            }
            let (lo, hi) = (i.min(j), i.max(j));
            let (a, b) = streams.split_at_mut(hi);
            c.verify(&mut a[lo], &mut b[0])?;
        }
        for i in 0..members.len() {
            for j in i + 1..members.len() {
                find_cert(&certs, i, j)?;
            }
        }
        Ok(ADFamily {
            spec,
            members,
            certs,
        })
    }

    /// Builds from a file, certifying uncovered pairs at `depth`.
    pub fn from_file(file: FamilyFile, depth: usize) -> Result<Self> {
        let FamilyFile {
            field,
            members,
            mut certs,
        } = file;
        let mut streams = open(&members, field)?;
        for i in 0..members.len() {
            for j in i + 1..members.len() {
                if find_cert(&certs, i, j).is_err() {
                    let (a, b) = streams.split_at_mut(j);
                    certs.push(ADCertificate::certify(i, j, &mut a[i], &mut b[0], depth)?);
                }
            }
        }
        ADFamily::with_certs(field, members, certs)
    }

    pub fn to_file(&self) -> FamilyFile {
        FamilyFile {
            field: self.spec,
            members: self.members.clone(),
            certs: self.certs.clone(),
        }
    }

    pub fn spec(&self) -> FieldSpec {
        self.spec
    }

    pub fn members(&self) -> &[Preset] {
        &self.members
    }

    pub fn certs(&self) -> &[ADCertificate] {
        &self.certs
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Member scheduled at step n.
    pub fn schedule(&self, n: usize) -> usize {
        n % self.members.len().max(1)
    }

    pub fn stream(&self, i: usize) -> Result<SubspaceStream> {
        let p = self.members.get(i).ok_or(Error::InvalidIndex {
            index: i,
            len: self.members.len(),
        })?;
        make_stream(p, self.spec)
    }

    pub fn streams(&self) -> Result<Vec<SubspaceStream>> {
        open(&self.members, self.spec)
    }

    /// The first `n` members with their certificates.
    pub fn prefix(&self, n: usize) -> ADFamily {
        let n = n.min(self.members.len());
        ADFamily {
            spec: self.spec,
            members: self.members[..n].to_vec(),
            certs: self
                .certs
                .iter()
                .filter(|c| c.pair.0 < n && c.pair.1 < n)
                .cloned()
                .collect(),
        }
    }

    /// The subfamily on `indices` (in that order), certificates renumbered.
    pub fn select(&self, indices: &[usize]) -> Result<ADFamily> {
        for &i in indices {
            check_index(self, i)?;
        }
        let pos = |m: usize| indices.iter().position(|&i| i == m);
        let certs = self
            .certs
            .iter()
            .filter_map(|c| match (pos(c.pair.0), pos(c.pair.1)) {
                (Some(a), Some(b)) => Some(ADCertificate {
                    pair: (a, b),
                    ..c.clone()
                }),
                _ => None,
            })
            .collect();
        Ok(ADFamily {
            spec: self.spec,
            members: indices.iter().map(|&i| self.members[i].clone()).collect(),
            certs,
        })
    }

    /// Members cut down to pairwise disjoint tails.
    pub fn disjoint_tails(&self) -> Result<(Vec<Preset>, Option<usize>)> {
        make_disjoint(&self.members, &self.certs, self.spec)
    }
}

fn open(members: &[Preset], spec: FieldSpec) -> Result<Vec<SubspaceStream>> {
    members.iter().map(|p| make_stream(p, spec)).collect()
}

/// `min{k : Y_α ∩ Y_n ⊆ ⟨e_0, …, e_k⟩}` read from the certificate; 0 when the
/// certified intersection is trivial.
pub fn f_alpha(fam: &ADFamily, alpha: usize, n: usize) -> Result<usize> {
    check_index(fam, alpha)?;
    check_index(fam, n)?;
    if alpha == n {
        return Err(Error::MissingCertificate { i: alpha, j: n });
    }
    Ok(find_cert(&fam.certs, alpha, n)?.bound.unwrap_or(0))
}

/// The extension bound of member α at n.
pub fn g_alpha(fam: &ADFamily, alpha: usize, n: usize) -> Result<usize> {
    extend_bound(&mut fam.stream(alpha)?, n)
}

fn check_index(fam: &ADFamily, i: usize) -> Result<()> {
    if i >= fam.len() {
        return Err(Error::InvalidIndex {
            index: i,
            len: fam.len(),
        });
    }
    Ok(())
}

/// `max_{β≠α} f_α(β)`: the largest certified intersection bound of member α.
fn f_max(fam: &ADFamily, alpha: usize) -> Result<usize> {
    let mut m = 0;
    for beta in 0..fam.len() {
        if beta != alpha {
            m = m.max(f_alpha(fam, alpha, beta)?);
        }
    }
    Ok(m)
}

/// Value h(n) must strictly exceed for member α.
fn needed(streams: &mut [SubspaceStream], f: &[usize], alpha: usize, n: usize) -> Result<usize> {
    Ok(f[alpha].max(extend_bound(&mut streams[alpha], n)?))
}

/// h(n) = running max over n of (max over members of max(f_α, g_α(n)) + 1),
/// for n < upto.
pub fn dominating_table(fam: &ADFamily, upto: usize) -> Result<Vec<usize>> {
    let mut streams = fam.streams()?;
    let f: Vec<usize> = (0..fam.len()).map(|a| f_max(fam, a)).collect::<Result<_>>()?;
    let mut h = Vec::with_capacity(upto);
    let mut run = 0;
    for n in 0..upto {
        let mut v = n + 1;
        for a in 0..fam.len() {
            v = v.max(needed(&mut streams, &f, a, n)? + 1);
        }
        run = run.max(v);
        h.push(run);
    }
    Ok(h)
}

/// Checks `h(n) > max(f_α, g_α(n))` for every member and every n ≤ `upto`.
pub fn check_domination(fam: &ADFamily, h: &[usize], upto: usize) -> Result<()> {
    if upto >= h.len() {
        return Err(Error::TableTooShort {
            needed: upto,
            len: h.len(),
        });
    }
    let mut streams = fam.streams()?;
    let f: Vec<usize> = (0..fam.len()).map(|a| f_max(fam, a)).collect::<Result<_>>()?;
    for (n, &hn) in h.iter().enumerate().take(upto + 1) {
        for a in 0..fam.len() {
            let need = needed(&mut streams, &f, a, n)?;
            if hn <= need {
                return Err(Error::NotDominating {
                    alpha: a,
                    n,
                    h: hn,
                    needed: need + 1,
                });
            }
        }
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckKind {
    /// span(x_from, …, x_{prefix−1}) ∩ Y_k = {0}
    Disjoint,
    /// span(x_from, …, x_{prefix−1}) ∩ Y_k = ⟨x_k⟩
    Line,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Check {
    pub k: usize,
    pub from: usize,
    pub prefix: usize,
    pub kind: CheckKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Construction {
    /// block sequence whose span misses every (tail of a) member
    NonmaxFinite,
    /// x_n in member n with span ∩ member n = ⟨x_n⟩
    NonmaxCountable,
    /// dominated diagonalization; checks run against the original members
    Diagonalize,
}

/// A constructed block sequence with everything needed to re-check it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Witness {
    pub construction: Construction,
    pub field: FieldSpec,
    pub members: Vec<Preset>,
    pub certs: Vec<ADCertificate>,
    pub cut: Option<usize>,
    pub xs: Vec<VectorRepr>,
    pub checks: Vec<Check>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<Vec<usize>>,
}

impl Witness {
    pub fn vectors(&self) -> Result<Vec<SparseVector>> {
        self.xs.iter().map(|v| v.decode(self.field)).collect()
    }
}

fn reprs(xs: &[SparseVector]) -> Vec<VectorRepr> {
    xs.iter().map(SparseVector::to_repr).collect()
}

fn required_checks(construction: Construction, members: usize, len: usize, xs_spec: Option<&[usize]>) -> BTreeSet<Check> {
    let mut out = BTreeSet::new();
    match construction {
        Construction::NonmaxFinite => {
            for prefix in 1..=len {
                for k in 0..members {
                    out.insert(Check { k, from: 0, prefix, kind: CheckKind::Disjoint });
                }
            }
        }
        Construction::NonmaxCountable => {
            for prefix in 1..=len {
                for k in 0..prefix {
                    out.insert(Check { k, from: 0, prefix, kind: CheckKind::Line });
                }
            }
        }
        Construction::Diagonalize => {
            let starts = xs_spec.expect("diagonalization starts");
            for (k, &from) in starts.iter().enumerate() {
                for prefix in from + 1..=len {
                    out.insert(Check { k, from, prefix, kind: CheckKind::Disjoint });
                }
            }
        }
    }
    out
}

fn run_check(check: &Check, xs: &[SparseVector], ys: &mut [SubspaceStream]) -> Result<bool> {
    if check.from >= check.prefix || check.prefix > xs.len() || check.k >= ys.len() {
        return Ok(false);
    }
    let meet = span_meet(&xs[check.from..check.prefix], &mut ys[check.k])?;
    match check.kind {
        CheckKind::Disjoint => Ok(meet.is_empty()),
        CheckKind::Line => match xs.get(check.k) {
            Some(xk) => is_line(&meet, xk),
            None => Ok(false),
        },
    }
}

/// Witness that a finite family is not maximal: `len` vectors whose every
/// prefix span meets each member's disjoint tail trivially.
pub fn witness_nonmax_finite(fam: &ADFamily, len: usize) -> Result<Witness> {
    let (tails, cut) = fam.disjoint_tails()?;
    let mut ys = open(&tails, fam.spec)?;
    let mut xs = Vec::with_capacity(len);
    for n in 0..len {
        let x = if ys.is_empty() {
            SparseVector::basis(fam.spec, n)
        } else {
            extend_avoiding_all(&mut ys, &xs, ExtendOptions::default())?
        };
        xs.push(x);
    }
    let checks: Vec<Check> = required_checks(Construction::NonmaxFinite, fam.len(), len, None)
        .into_iter()
        .collect();
    finish(fam, Construction::NonmaxFinite, cut, xs, checks, None)
}

/// Witness against an enumerated family: x_n in member n and the span of
/// every prefix meets member n exactly in ⟨x_n⟩. Uses the first `len`
/// members.
pub fn witness_nonmax_countable(fam: &ADFamily, len: usize) -> Result<Witness> {
    if len > fam.len() {
        return Err(Error::InvalidIndex {
            index: len,
            len: fam.len(),
        });
    }
    let fam = fam.prefix(len);
    let (tails, cut) = fam.disjoint_tails()?;
    let mut ys = open(&tails, fam.spec)?;
    let mut xs = Vec::with_capacity(len);
    for _ in 0..len {
        let (_, x) = extend_disjoint_one(&mut ys, &xs, ExtendOptions::default())?;
        xs.push(x);
    }
    let checks: Vec<Check> = required_checks(Construction::NonmaxCountable, len, len, None)
        .into_iter()
        .collect();
    finish(&fam, Construction::NonmaxCountable, cut, xs, checks, None)
}

/// First index after the last scheduled occurrence of each member below
/// `len` (0 for members never scheduled, but at least 1 so x_0 is excluded).
fn diagonal_starts(fam: &ADFamily, len: usize) -> Vec<usize> {
    (0..fam.len())
        .map(|m| {
            (0..len)
                .filter(|&n| fam.schedule(n) == m)
                .max()
                .map_or(1, |last| last + 1)
        })
        .collect()
}

/// Dominated diagonalization: x_0 is the first row of member 0 and x_{n+1} the
/// first row of member s(n+1) above h(max supp x_n), on disjoint tails. For
/// each member m the span of the vectors after m's last scheduled occurrence
/// meets the original member trivially, and this is verified on every prefix.
pub fn diagonalize_under(fam: &ADFamily, h: &[usize], len: usize) -> Result<Witness> {
    if fam.is_empty() {
        return Err(Error::InvalidIndex { index: 0, len: 0 });
    }
    let (tails, cut) = fam.disjoint_tails()?;
    let mut ys = open(&tails, fam.spec)?;
    let mut xs: Vec<SparseVector> = Vec::with_capacity(len);
    let mut checked_upto: Option<usize> = None;
    for n in 0..len {
        let s = fam.schedule(n);
        let lower = match xs.last() {
            None => None,
            Some(prev) => {
                let t = prev.max_support().expect("nonzero");
                if t >= h.len() {
                    return Err(Error::TableTooShort { needed: t, len: h.len() });
                }
                if checked_upto.is_none_or(|c| c < t) {
                    check_domination(fam, h, t)?;
                    checked_upto = Some(t);
                }
                Some(h[t])
            }
        };
        xs.push(ys[s].first_row_above(lower)?);
    }
    let starts = diagonal_starts(fam, len);
    let checks: Vec<Check> = required_checks(Construction::Diagonalize, fam.len(), len, Some(&starts))
        .into_iter()
        .collect();
    finish(fam, Construction::Diagonalize, cut, xs, checks, Some(h.to_vec()))
}

fn finish(
    fam: &ADFamily,
    construction: Construction,
    cut: Option<usize>,
    xs: Vec<SparseVector>,
    checks: Vec<Check>,
    h: Option<Vec<usize>>,
) -> Result<Witness> {
    let w = Witness {
        construction,
        field: fam.spec,
        members: fam.members.clone(),
        certs: fam.certs.clone(),
        cut,
        xs: reprs(&xs),
        checks,
        h,
    };
    verify_witness(&w)?;
    Ok(w)
}

/// Re-checks a witness from scratch: certificates, the disjoint cut, the
/// block property, every listed check, the coverage of the checks the
/// construction requires, and construction-specific membership rules.
pub fn verify_witness(w: &Witness) -> Result<()> {
    let fam = ADFamily::with_certs(w.field, w.members.clone(), w.certs.clone())?;
    let (tails, cut) = fam.disjoint_tails()?;
    if cut != w.cut {
        return Err(Error::Verification(format!(
            "recorded cut {:?} differs from the certified cut {cut:?}",
            w.cut
        )));
    }
    let xs = w.vectors()?;
    check_block_sequence(&xs)?;
    let len = xs.len();
    let mut tail_streams = open(&tails, w.field)?;
    let mut original = fam.streams()?;
    let starts = diagonal_starts(&fam, len);
    let required = match w.construction {
        Construction::NonmaxCountable if len > fam.len() => {
            return Err(Error::Verification(format!(
                "{len} vectors but only {} members",
                fam.len()
            )))
        }
        Construction::Diagonalize => required_checks(w.construction, fam.len(), len, Some(&starts)),
        c => required_checks(c, fam.len(), len, None),
    };
    let listed: BTreeSet<Check> = w.checks.iter().copied().collect();
    if let Some(missing) = required.difference(&listed).next() {
        return Err(Error::Verification(format!("required check {missing:?} is missing")));
    }
    let ys = match w.construction {
        Construction::Diagonalize => &mut original,
        _ => &mut tail_streams,
    };
    for (i, check) in w.checks.iter().enumerate() {
        if !run_check(check, &xs, ys)? {
            return Err(Error::Verification(format!("check {i} ({check:?}) fails")));
        }
    }
    if w.construction == Construction::Diagonalize {
        let h = w
            .h
            .as_ref()
            .ok_or_else(|| Error::Verification("diagonalization without h table".into()))?;
        if fam.is_empty() {
            return Err(Error::Verification("diagonalization of an empty family".into()));
        }
        for (n, x) in xs.iter().enumerate() {
            let s = fam.schedule(n);
            if !tail_streams[s].member(x)? {
                return Err(Error::Verification(format!("x{n} is not in member {s}")));
            }
            if n > 0 {
                let t = xs[n - 1].max_support().expect("nonzero");
                let bound = *h.get(t).ok_or(Error::TableTooShort { needed: t, len: h.len() })?;
                if x.min_support() <= Some(bound) {
                    return Err(Error::Verification(format!("x{n} is not above h({t}) = {bound}")));
                }
            }
        }
        if len > 1 {
            let top = xs[len - 2].max_support().expect("nonzero");
            check_domination(&fam, h, top)?;
        }
    }
    Ok(())
}

/// One member's share of an H(A) certificate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HWitness {
    pub member: usize,
    pub vectors: Vec<SparseVector>,
}

/// Evidence that a block sequence meets `depth` members in at least `depth`
/// dimensions each, within the given prefix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HCertificate {
    pub depth: usize,
    pub witnesses: Vec<HWitness>,
    pub complete: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HWitnessRepr {
    pub member: usize,
    pub vectors: Vec<VectorRepr>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HCertificateRepr {
    pub depth: usize,
    pub witnesses: Vec<HWitnessRepr>,
    pub complete: bool,
}

impl HCertificate {
    pub fn to_repr(&self) -> HCertificateRepr {
        HCertificateRepr {
            depth: self.depth,
            witnesses: self
                .witnesses
                .iter()
                .map(|w| HWitnessRepr {
                    member: w.member,
                    vectors: reprs(&w.vectors),
                })
                .collect(),
            complete: self.complete,
        }
    }

    pub fn from_repr(r: &HCertificateRepr, spec: FieldSpec) -> Result<Self> {
        let witnesses = r
            .witnesses
            .iter()
            .map(|w| {
                Ok(HWitness {
                    member: w.member,
                    vectors: w.vectors.iter().map(|v| v.decode(spec)).collect::<Result<_>>()?,
                })
            })
            .collect::<Result<_>>()?;
        Ok(HCertificate {
            depth: r.depth,
            witnesses,
            complete: r.complete,
        })
    }
}

/// Searches the members, in order, for `depth` of them meeting span(xs) in at
/// least `depth` dimensions. Partial evidence is returned with
/// `complete = false`.
pub fn in_h(xs: &[SparseVector], fam: &ADFamily, depth: usize) -> Result<HCertificate> {
    let mut full = Vec::new();
    let mut best: Option<HWitness> = None;
    if depth > 0 {
        for (i, p) in fam.members.iter().enumerate() {
            let mut y = make_stream(p, fam.spec)?;
            let meet = span_meet(xs, &mut y)?;
            if meet.dim() >= depth {
                full.push(HWitness {
                    member: i,
                    vectors: meet.rows()[..depth].to_vec(),
                });
                if full.len() == depth {
                    break;
                }
            } else if meet.dim() > best.as_ref().map_or(0, |b| b.vectors.len()) {
                best = Some(HWitness {
                    member: i,
                    vectors: meet.rows().to_vec(),
                });
            }
        }
    }
    let complete = full.len() >= depth;
    if full.is_empty() {
        full.extend(best);
    }
    Ok(HCertificate {
        depth,
        witnesses: full,
        complete,
    })
}

/// Members meeting span(xs) in at least `depth` dimensions.
pub fn meeting_members(xs: &[SparseVector], fam: &ADFamily, depth: usize) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for (i, p) in fam.members.iter().enumerate() {
        let mut y = make_stream(p, fam.spec)?;
        if span_meet(xs, &mut y)?.dim() >= depth {
            out.push(i);
        }
    }
    Ok(out)
}

/// Re-checks an H certificate against the sequence and the family.
pub fn verify_h(cert: &HCertificate, xs: &[SparseVector], fam: &ADFamily) -> Result<()> {
    let spec = fam.spec;
    let x_span = EchelonBasis::from_rows(spec, xs)?;
    let mut seen = BTreeSet::new();
    for w in &cert.witnesses {
        if !seen.insert(w.member) {
            return Err(Error::Verification(format!("member {} listed twice", w.member)));
        }
        let mut y = fam.stream(w.member)?;
        let span = EchelonBasis::from_rows(spec, &w.vectors)?;
        if span.dim() != w.vectors.len() {
            return Err(Error::Verification(format!(
                "vectors for member {} are dependent",
                w.member
            )));
        }
        for v in &w.vectors {
            if !x_span.contains(v)? || !y.member(v)? {
                return Err(Error::Verification(format!(
                    "vector {v} is not in both span(X) and member {}",
                    w.member
                )));
            }
        }
    }
    let full = cert.witnesses.iter().filter(|w| w.vectors.len() >= cert.depth).count();
    if cert.complete != (full >= cert.depth) {
        return Err(Error::Verification("completeness flag does not match evidence".into()));
    }
    Ok(())
}

/// The first member containing every vector of the prefix.
pub fn in_abar(xs: &[SparseVector], fam: &ADFamily) -> Result<Option<usize>> {
    'members: for i in 0..fam.len() {
        let mut y = fam.stream(i)?;
        for x in xs {
            if !y.contains(x)? {
                continue 'members;
            }
        }
        return Ok(Some(i));
    }
    Ok(None)
}

/// A step of a diagonalization that landed in a family member.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hit {
    pub index: usize,
    pub member: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagonalization {
    pub xs: Vec<SparseVector>,
    pub hits: Vec<Hit>,
}

/// Rows of each chain link checked against the previous link.
pub const DESCENT_ROWS: usize = 8;

/// Diagonalizes a descending chain X_0 ⪰ X_1 ⪰ …: x_m lies in X_m (the last
/// link is reused past the end of the chain) with min supp ≥ m, chosen when
/// possible inside member (m + t) mod |fam| for the smallest t, so that the
/// scheduled members are met in rotation. `search_rows` bounds the
/// intersection search per attempt.
pub fn p_diagonalize(
    chain: &[Preset],
    fam: &ADFamily,
    len: usize,
    search_rows: usize,
) -> Result<Diagonalization> {
    if chain.is_empty() {
        return Err(Error::InvalidIndex { index: 0, len: 0 });
    }
    let spec = fam.spec;
    let mut links = open(chain, spec)?;
    for n in 1..links.len() {
        let (prev, cur) = links.split_at_mut(n);
        for r in 0..DESCENT_ROWS {
            let Some(row) = cur[0].try_row(r)?.cloned() else {
                break;
            };
            if !prev[n - 1].member(&row)? {
                return Err(Error::ChainDescent {
                    link: n,
                    prev: n - 1,
                    row: r,
                });
            }
        }
    }
    let mut members = fam.streams()?;
    let mut xs: Vec<SparseVector> = Vec::with_capacity(len);
    let mut hits = Vec::new();
    for m in 0..len {
        let link = m.min(links.len() - 1);
        let floor = m.checked_sub(1);
        let prev = xs.last().and_then(SparseVector::max_support);
        let lower = match (floor, prev) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        };
        let mut chosen = None;
        for t in 0..members.len() {
            let s = (m + t) % members.len();
            let mut x_link = make_stream(&chain[link], spec)?;
            if let Some(v) = first_common_above(&mut x_link, &mut members[s], lower, search_rows)? {
                chosen = Some((v, Some(s)));
                break;
            }
        }
        let (x, member) = match chosen {
            Some(c) => c,
            None => (links[link].first_row_above(lower)?, None),
        };
        if let Some(s) = member {
            hits.push(Hit { index: m, member: s });
        }
        xs.push(x);
    }
    let out = Diagonalization { xs, hits };
    verify_diagonalization(&out, chain, fam)?;
    Ok(out)
}

pub fn verify_diagonalization(d: &Diagonalization, chain: &[Preset], fam: &ADFamily) -> Result<()> {
    check_block_sequence(&d.xs)?;
    for (m, x) in d.xs.iter().enumerate() {
        if x.min_support() < Some(m) {
            return Err(Error::Verification(format!("x{m} starts below {m}")));
        }
        let link = m.min(chain.len().saturating_sub(1));
        let mut s = make_stream(&chain[link], fam.spec)?;
        if !s.member(x)? {
            return Err(Error::Verification(format!("x{m} is not in chain link {link}")));
        }
    }
    for hit in &d.hits {
        let x = d.xs.get(hit.index).ok_or(Error::InvalidIndex {
            index: hit.index,
            len: d.xs.len(),
        })?;
        if !fam.stream(hit.member)?.member(x)? {
            return Err(Error::Verification(format!(
                "x{} is not in member {}",
                hit.index, hit.member
            )));
        }
    }
    Ok(())
}
