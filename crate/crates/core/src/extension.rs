//! Extension bounds and the constructions built on them.
//!
//! Everything here returns only verified answers: postconditions are
//! re-checked with exact finite computations before a result is handed back.
//! The exact check behind all of them is [`span_meet`]: for a finite list of
//! vectors with supports in `[0, T]`, the intersection of their span with a
//! stream `Y` only involves the rows of `Y` with pivot at most `T`.

use serde::{Deserialize, Serialize};

use crate::echelon::{intersect, EchelonBasis};
use crate::error::{Error, Result};
use crate::stream::{make_stream, Preset, SubspaceStream, SEARCH_ROWS};
use crate::field::FieldSpec;
use crate::vector::{check_block_sequence, sum, SparseVector};

/// Claim that `Y_i ∩ Y_j ⊆ ⟨e_0, …, e_bound⟩`, checked on the first `depth`
/// rows of both streams. `bound` is `None` when the checked intersection is
/// trivial.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ADCertificate {
    pub pair: (usize, usize),
    pub bound: Option<usize>,
    pub depth: usize,
}

/// Intersection of the spans of the first `depth` rows of each stream.
pub fn prefix_meet(a: &mut SubspaceStream, b: &mut SubspaceStream, depth: usize) -> Result<EchelonBasis> {
    intersect(&a.prefix(depth)?, &b.prefix(depth)?)
}

impl ADCertificate {
    pub fn certify(
        i: usize,
        j: usize,
        a: &mut SubspaceStream,
        b: &mut SubspaceStream,
        depth: usize,
    ) -> Result<Self> {
        let meet = prefix_meet(a, b, depth)?;
        Ok(ADCertificate {
            pair: (i, j),
            bound: meet.max_support(),
            depth,
        })
    }

    pub fn i(&self) -> usize {
        self.pair.0
    }

    pub fn j(&self) -> usize {
        self.pair.1
    }

    pub fn covers(&self, i: usize, j: usize) -> bool {
        self.pair == (i, j) || self.pair == (j, i)
    }

    /// Recomputes the prefix intersection and checks it against the bound.
    pub fn verify(&self, a: &mut SubspaceStream, b: &mut SubspaceStream) -> Result<()> {
        let meet = prefix_meet(a, b, self.depth)?;
        let fail = |what: String| Error::BadCertificate {
            i: self.pair.0,
            j: self.pair.1,
            depth: self.depth,
            what,
        };
        match (self.bound, meet.max_support()) {
            (_, None) => Ok(()),
            (None, Some(top)) => Err(fail(format!(
                "claimed trivial, but the prefixes share a vector reaching e{top}"
            ))),
            (Some(c), Some(top)) if top > c => Err(fail(format!(
                "intersection reaches e{top}, above the bound {c}"
            ))),
            _ => Ok(()),
        }
    }
}

/// Lemma bound: `max(K, max supp of the rows with pivot ≤ K)`. For every block
/// sequence ending at or below K and every x with min supp above the bound,
/// adding x to the span enlarges its intersection with Y by ⟨x⟩ when x ∈ Y
/// and leaves it unchanged otherwise.
pub fn extend_bound(y: &mut SubspaceStream, k: usize) -> Result<usize> {
    Ok(finite_extend_bound(&y.rows_until_pivot_exceeds(k)?, k))
}

/// The same bound for a finite-dimensional subspace.
pub fn finite_extend_bound(y: &EchelonBasis, k: usize) -> usize {
    y.rows_with_pivot_at_most(k)
        .max_support()
        .map_or(k, |s| s.max(k))
}

/// Exact `span(xs) ∩ Y`.
pub fn span_meet(xs: &[SparseVector], y: &mut SubspaceStream) -> Result<EchelonBasis> {
    let spec = y.spec();
    let Some(top) = xs.iter().filter_map(SparseVector::max_support).max() else {
        return Ok(EchelonBasis::new(spec));
    };
    let u = EchelonBasis::from_rows(spec, xs)?;
    intersect(&u, &y.rows_until_pivot_exceeds(top)?)
}

/// Whether `meet` is exactly the line through the nonzero vector `x`.
pub fn is_line(meet: &EchelonBasis, x: &SparseVector) -> Result<bool> {
    Ok(meet.dim() == 1 && meet.contains(x)?)
}

#[derive(Clone, Copy, Debug)]
pub struct ExtendOptions {
    pub verify_preconditions: bool,
}

impl Default for ExtendOptions {
    fn default() -> Self {
        ExtendOptions {
            verify_preconditions: true,
        }
    }
}

/// Largest support index of the last vector, if any.
fn top_of(xs: &[SparseVector]) -> Option<usize> {
    xs.last().and_then(SparseVector::max_support)
}

/// `max_k extend_bound(Y_k, K)` for K the top of `xs`.
fn joint_bound(ys: &mut [SubspaceStream], xs: &[SparseVector]) -> Result<Option<usize>> {
    let Some(k) = top_of(xs) else {
        return Ok(None);
    };
    let mut m = k;
    for y in ys.iter_mut() {
        m = m.max(extend_bound(y, k)?);
    }
    Ok(Some(m))
}

type Violation = (usize, String, SparseVector);

/// Checks `span(xs) ∩ Y_k = ⟨x_k⟩` for `k < xs.len()` and `= {0}` for the rest.
fn line_conditions(ys: &mut [SubspaceStream], xs: &[SparseVector]) -> Result<Option<Violation>> {
    for (k, y) in ys.iter_mut().enumerate() {
        let meet = span_meet(xs, y)?;
        match xs.get(k) {
            Some(xk) => {
                if is_line(&meet, xk)? {
                    continue;
                }
                let line = EchelonBasis::from_rows(y.spec(), std::slice::from_ref(xk))?;
                let mut witness = xk.clone();
                for r in meet.rows() {
                    if !line.contains(r)? {
                        witness = r.clone();
                        break;
                    }
                }
                let what = format!(
                    "span meets member {k} in dimension {} instead of the line through x{k}",
                    meet.dim()
                );
                return Ok(Some((k, what, witness)));
            }
            None => {
                if let Some(w) = meet.rows().first() {
                    return Ok(Some((k, format!("span meets member {k} nontrivially"), w.clone())));
                }
            }
        }
    }
    Ok(None)
}

fn trivial_conditions(ys: &mut [SubspaceStream], xs: &[SparseVector]) -> Result<Option<Violation>> {
    for (k, y) in ys.iter_mut().enumerate() {
        if let Some(w) = span_meet(xs, y)?.rows().first() {
            return Ok(Some((k, format!("span meets member {k} nontrivially"), w.clone())));
        }
    }
    Ok(None)
}

fn precondition(v: Option<Violation>) -> Result<()> {
    match v {
        Some((k, what, witness)) => Err(Error::Precondition { k, what, witness }),
        None => Ok(()),
    }
}

fn postcondition(v: Option<Violation>) -> Result<()> {
    match v {
        Some((k, what, _)) => Err(Error::Postcondition { k, what }),
        None => Ok(()),
    }
}

/// Given `x_k ∈ Y_k` with `span(xs) ∩ Y_k = ⟨x_k⟩` for `k < j = xs.len()` and
/// `span(xs) ∩ Y_k = {0}` for `k ≥ j`, returns the bound M and the first row
/// of `Y_j` above M. Appending it keeps all those conditions with `⟨x_j⟩` for
/// member j. Members beyond j are optional; when present they are avoided too.
pub fn extend_disjoint_one(
    ys: &mut [SubspaceStream],
    xs: &[SparseVector],
    opts: ExtendOptions,
) -> Result<(Option<usize>, SparseVector)> {
    let j = xs.len();
    if j >= ys.len() {
        return Err(Error::InvalidIndex { index: j, len: ys.len() });
    }
    check_block_sequence(xs)?;
    if opts.verify_preconditions {
        for (k, x) in xs.iter().enumerate() {
            if !ys[k].member(x)? {
                return Err(Error::Precondition {
                    k,
                    what: format!("x{k} is not in member {k}"),
                    witness: x.clone(),
                });
            }
        }
        precondition(line_conditions(ys, xs)?)?;
    }
    let m = joint_bound(ys, xs)?;
    let next = ys[j].first_row_above(m)?;
    let mut ext = xs.to_vec();
    ext.push(next.clone());
    postcondition(line_conditions(ys, &ext)?)?;
    Ok((m, next))
}

/// Given `span(xs) ∩ Y_k = {0}` for every member, returns x above xs with
/// `span(xs, x) ∩ Y_k = {0}` for every member.
///
/// With two or more members, x is the sum of a chain `x'_0 < … < x'_n` built
/// above the joint bound by [`extend_disjoint_one`]; the sum lies in no
/// member. A single member is handled by adding to its first row above the
/// bound the first basis vector outside it.
pub fn extend_avoiding_all(
    ys: &mut [SubspaceStream],
    xs: &[SparseVector],
    opts: ExtendOptions,
) -> Result<SparseVector> {
    check_block_sequence(xs)?;
    if opts.verify_preconditions {
        precondition(trivial_conditions(ys, xs)?)?;
    }
    let m = joint_bound(ys, xs)?;
    let x = match ys.len() {
        0 => {
            let spec = xs.first().map(SparseVector::spec).unwrap_or(FieldSpec::gf2());
            SparseVector::basis(spec, m.map_or(0, |m| m + 1))
        }
        1 => {
            let y = &mut ys[0];
            let first = y.first_row_above(m)?;
            let start = first.max_support().expect("row is nonzero") + 1;
            let mut found = None;
            for t in start..start + SEARCH_ROWS {
                let e = SparseVector::basis(y.spec(), t);
                if !y.member(&e)? {
                    found = Some(first.try_add(&e)?);
                    break;
                }
            }
            found.ok_or_else(|| {
                Error::SearchExhausted(format!(
                    "member contains every basis vector in [{start}, {})",
                    start + SEARCH_ROWS
                ))
            })?
        }
        n => {
            let mut parts = vec![ys[0].first_row_above(m)?];
            for _ in 1..n {
                let (_, next) = extend_disjoint_one(ys, &parts, opts)?;
                parts.push(next);
            }
            sum(ys[0].spec(), &parts)?
        }
    };
    let mut ext = xs.to_vec();
    ext.push(x.clone());
    check_block_sequence(&ext).map_err(|_| Error::Postcondition {
        k: 0,
        what: "new vector is not above the sequence".into(),
    })?;
    postcondition(trivial_conditions(ys, &ext)?)?;
    Ok(x)
}

/// Finds the certificate for an unordered pair.
pub fn find_cert(certs: &[ADCertificate], i: usize, j: usize) -> Result<&ADCertificate> {
    certs
        .iter()
        .find(|c| c.covers(i, j))
        .ok_or(Error::MissingCertificate { i, j })
}

/// Passes to tails above the largest certified bound. Returns the new
/// presets and the cut point (`None` when every certified intersection is
/// trivial and the members are returned unchanged).
pub fn make_disjoint(
    members: &[Preset],
    certs: &[ADCertificate],
    spec: FieldSpec,
) -> Result<(Vec<Preset>, Option<usize>)> {
    let mut cut: Option<usize> = None;
    let mut depth = 0;
    for i in 0..members.len() {
        for j in i + 1..members.len() {
            let c = find_cert(certs, i, j)?;
            depth = depth.max(c.depth);
            cut = match (cut, c.bound) {
                (Some(a), Some(b)) => Some(a.max(b)),
                (a, b) => a.or(b),
            };
        }
    }
    let out: Vec<Preset> = match cut {
        None => members.to_vec(),
        Some(c) => members.iter().map(|p| Preset::tail(p.clone(), c)).collect(),
    };
    let mut streams = out
        .iter()
        .map(|p| make_stream(p, spec))
        .collect::<Result<Vec<_>>>()?;
    for i in 0..streams.len() {
        for j in i + 1..streams.len() {
            let (a, b) = streams.split_at_mut(j);
            let meet = prefix_meet(&mut a[i], &mut b[0], depth)?;
            if !meet.is_empty() {
                return Err(Error::Postcondition {
                    k: i,
                    what: format!(
                        "tails of members {i} and {j} above {cut:?} still meet at depth {depth}"
                    ),
                });
            }
        }
    }
    Ok((out, cut))
}

/// Rows checked on each side of [`cont_mod_finite_bound`].
pub const SPOT_ROWS: usize = 8;

/// For X ⊆ Y + ⟨zs⟩ with Y a block subspace, the M with X/M ⊆ Y: N is the top
/// of the zs and M = max(N, max supp of the rows of Y with pivot ≤ N). The
/// containment claim is spot-checked on the first rows of X and the
/// conclusion on the first rows of X/M.
pub fn cont_mod_finite_bound(
    x: &mut SubspaceStream,
    y: &mut SubspaceStream,
    zs: &[SparseVector],
) -> Result<usize> {
    check_block_sequence(zs)?;
    let n = zs.iter().filter_map(SparseVector::max_support).max().unwrap_or(0);
    for r in 0..SPOT_ROWS {
        let Some(row) = x.try_row(r)?.cloned() else {
            break;
        };
        let top = row.max_support().expect("row is nonzero").max(n);
        let mut w = y.rows_until_pivot_exceeds(top)?;
        for z in zs {
            w.insert(z)?;
        }
        if !w.contains(&row)? {
            return Err(Error::SpotCheck {
                row: r,
                what: format!("row {row} of X is not in Y + span(zs)"),
            });
        }
    }
    let m = extend_bound(y, n)?;
    let start = x.count_pivots_at_most(m)?;
    for r in start..start + SPOT_ROWS {
        let Some(row) = x.try_row(r)?.cloned() else {
            break;
        };
        if !y.member(&row)? {
            return Err(Error::SpotCheck {
                row: r,
                what: format!("row {row} of X/{m} is not in Y"),
            });
        }
    }
    Ok(m)
}
