//! Finite unions of blocks and the support map between block sequences of
//! vectors and block sequences of finite sets.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vector::{check_block_sequence, SparseVector};

/// A nonempty finite set of naturals. JSON: sorted integer array.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct FinBlock(BTreeSet<usize>);

impl FinBlock {
    pub fn new(elements: impl IntoIterator<Item = usize>) -> Result<Self> {
        let set: BTreeSet<usize> = elements.into_iter().collect();
        if set.is_empty() {
            return Err(Error::MalformedBlock("empty block".into()));
        }
        Ok(FinBlock(set))
    }

    pub fn singleton(n: usize) -> Self {
        FinBlock(BTreeSet::from([n]))
    }

    pub fn elements(&self) -> &BTreeSet<usize> {
        &self.0
    }

    pub fn first(&self) -> usize {
        *self.0.first().expect("nonempty")
    }

    pub fn last(&self) -> usize {
        *self.0.last().expect("nonempty")
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn is_singleton(&self) -> bool {
        self.0.len() == 1
    }

    fn union(&self, other: &FinBlock) -> FinBlock {
        FinBlock(self.0.union(&other.0).copied().collect())
    }
}

impl TryFrom<Vec<usize>> for FinBlock {
    type Error = Error;

    fn try_from(v: Vec<usize>) -> Result<Self> {
        if v.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::MalformedBlock(format!("{v:?} is not strictly increasing")));
        }
        FinBlock::new(v)
    }
}

impl From<FinBlock> for Vec<usize> {
    fn from(b: FinBlock) -> Self {
        b.0.into_iter().collect()
    }
}

impl std::fmt::Display for FinBlock {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let items: Vec<String> = self.0.iter().map(usize::to_string).collect();
        write!(f, "{{{}}}", items.join(","))
    }
}

/// Blocks with max(a_i) < min(a_{i+1}). JSON: array of blocks.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<FinBlock>", into = "Vec<FinBlock>")]
pub struct FinBlockSeq(Vec<FinBlock>);

impl FinBlockSeq {
    pub fn new(blocks: Vec<FinBlock>) -> Result<Self> {
        if let Some(i) = blocks.windows(2).position(|w| w[0].last() >= w[1].first()) {
            return Err(Error::MalformedBlock(format!(
                "block {} does not lie above block {i}",
                i + 1
            )));
        }
        Ok(FinBlockSeq(blocks))
    }

    pub fn from_sets(sets: &[&[usize]]) -> Result<Self> {
        let blocks = sets
            .iter()
            .map(|s| FinBlock::new(s.iter().copied()))
            .collect::<Result<_>>()?;
        FinBlockSeq::new(blocks)
    }

    pub fn singletons(ns: impl IntoIterator<Item = usize>) -> Result<Self> {
        FinBlockSeq::new(ns.into_iter().map(FinBlock::singleton).collect())
    }

    pub fn blocks(&self) -> &[FinBlock] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl TryFrom<Vec<FinBlock>> for FinBlockSeq {
    type Error = Error;

    fn try_from(v: Vec<FinBlock>) -> Result<Self> {
        FinBlockSeq::new(v)
    }
}

impl From<FinBlockSeq> for Vec<FinBlock> {
    fn from(s: FinBlockSeq) -> Self {
        s.0
    }
}

/// Nonempty unions of blocks among the first `upto`; 2^upto − 1 of them.
pub fn fu_enum(a: &FinBlockSeq, upto: usize) -> BTreeSet<FinBlock> {
    let blocks = &a.0[..upto.min(a.len())];
    let mut out: Vec<FinBlock> = Vec::with_capacity((1usize << blocks.len().min(24)) - 1);
    for b in blocks {
        let grown: Vec<FinBlock> = out.iter().map(|u| u.union(b)).collect();
        out.push(b.clone());
        out.extend(grown);
    }
    out.into_iter().collect()
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// The minimal common elements: every set in FU(A) ∩ FU(B) with all
/// elements below `cutoff` is a union of a nonempty subfamily of these.
///
/// Blocks of A and B below the cutoff are linked when they overlap; a linked
/// component whose A-blocks and B-blocks cover the same set is one atom.
pub fn fin_ad_atoms(a: &FinBlockSeq, b: &FinBlockSeq, cutoff: usize) -> Vec<FinBlock> {
    let a_blocks: Vec<&FinBlock> = a.0.iter().filter(|x| x.last() < cutoff).collect();
    let b_blocks: Vec<&FinBlock> = b.0.iter().filter(|x| x.last() < cutoff).collect();
    let na = a_blocks.len();
    let mut parent: Vec<usize> = (0..na + b_blocks.len()).collect();
    let mut owner_a: BTreeMap<usize, usize> = BTreeMap::new();
    for (i, blk) in a_blocks.iter().enumerate() {
        for &e in blk.elements() {
            owner_a.insert(e, i);
        }
    }
    for (j, blk) in b_blocks.iter().enumerate() {
        for e in blk.elements() {
            if let Some(&i) = owner_a.get(e) {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, na + j));
                parent[ri] = rj;
            }
        }
    }
    let mut comps: BTreeMap<usize, (BTreeSet<usize>, BTreeSet<usize>)> = BTreeMap::new();
    for (i, blk) in a_blocks.iter().enumerate() {
        let r = find(&mut parent, i);
        comps.entry(r).or_default().0.extend(blk.elements());
    }
    for (j, blk) in b_blocks.iter().enumerate() {
        let r = find(&mut parent, na + j);
        comps.entry(r).or_default().1.extend(blk.elements());
    }
    let mut atoms: Vec<FinBlock> = comps
        .into_values()
        .filter(|(sa, sb)| !sa.is_empty() && sa == sb)
        .map(|(sa, _)| FinBlock(sa))
        .collect();
    atoms.sort_by_key(FinBlock::first);
    atoms
}

/// Every element of FU(A) ∩ FU(B) whose elements are all below `cutoff`.
pub fn fin_ad_report(a: &FinBlockSeq, b: &FinBlockSeq, cutoff: usize) -> Vec<FinBlock> {
    let atoms = FinBlockSeq(fin_ad_atoms(a, b, cutoff));
    fu_enum(&atoms, atoms.len()).into_iter().collect()
}

/// (supp x_0, supp x_1, …) for a block sequence of vectors.
pub fn supp_of_blockseq(xs: &[SparseVector]) -> Result<FinBlockSeq> {
    check_block_sequence(xs)?;
    Ok(FinBlockSeq(
        xs.iter().map(|x| FinBlock(x.support())).collect(),
    ))
}

/// Union of the singleton blocks.
pub fn e_a(a: &FinBlockSeq) -> BTreeSet<usize> {
    a.0.iter().filter(|b| b.is_singleton()).map(FinBlock::first).collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BgaMember {
    pub index: usize,
    /// |E_A ∩ [0, window)|
    pub singletons: usize,
    /// window − |E_A ∩ [0, window)|: evidence for coinfiniteness
    pub missing: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BgaPair {
    pub pair: (usize, usize),
    pub overlap: usize,
    pub full_overlap: bool,
}

/// Hypothesis statistics on the window [0, depth).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BgaReport {
    pub window: usize,
    pub members: Vec<BgaMember>,
    pub pairs: Vec<BgaPair>,
}

/// Per member: how much of [0, depth) E_A covers. Per pair: the exact size of
/// E_A ∩ E_A' below depth, flagged when the two coincide there.
pub fn bga_hypotheses(fams: &[FinBlockSeq], depth: usize) -> BgaReport {
    let es: Vec<BTreeSet<usize>> = fams
        .iter()
        .map(|a| e_a(a).into_iter().filter(|&n| n < depth).collect())
        .collect();
    let members = es
        .iter()
        .enumerate()
        .map(|(index, e)| BgaMember {
            index,
            singletons: e.len(),
            missing: depth - e.len(),
        })
        .collect();
    let mut pairs = Vec::new();
    for i in 0..es.len() {
        for j in i + 1..es.len() {
            let overlap = es[i].intersection(&es[j]).count();
            pairs.push(BgaPair {
                pair: (i, j),
                overlap,
                full_overlap: overlap > 0 && es[i] == es[j],
            });
        }
    }
    BgaReport {
        window: depth,
        members,
        pairs,
    }
}

/// y_j = sum of the x_n whose supports make up a_j.
pub fn lift_supp(xs: &[SparseVector], a: &FinBlockSeq) -> Result<Vec<SparseVector>> {
    let supports = supp_of_blockseq(xs)?;
    let mut out = Vec::with_capacity(a.len());
    for (j, block) in a.0.iter().enumerate() {
        let parts: Vec<usize> = supports
            .0
            .iter()
            .enumerate()
            .filter(|(_, s)| s.first() >= block.first() && s.last() <= block.last())
            .filter(|(_, s)| s.0.is_subset(&block.0))
            .map(|(n, _)| n)
            .collect();
        let covered: BTreeSet<usize> = parts
            .iter()
            .flat_map(|&n| supports.0[n].0.iter().copied())
            .collect();
        if covered != block.0 {
            return Err(Error::Decomposition { index: j });
        }
        let mut y = xs[parts[0]].clone();
        for &n in &parts[1..] {
            y = y.try_add(&xs[n])?;
        }
        out.push(y);
    }
    Ok(out)
}
