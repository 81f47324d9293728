//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//!
//! Every claim is re-checked with the dense oracle in `common` or by
//! exhaustive enumeration, not with the library's own verifiers alone.

mod common;

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use common::*;
use madvec::cli::{run_with, verify_artifact, Artifact};
use madvec::echelon::{intersect, member, rref, sum_space};
use madvec::extension::{cont_mod_finite_bound, extend_bound};
use madvec::field::FieldSpec;
use madvec::fin::{lift_supp, FinBlock, FinBlockSeq};
use madvec::games::fuzz::{RandomI, RandomII};
use madvec::games::{play, replay_validate, strat_i_into_h, strat_ii_first_element, strat_pair_into_abar, GameKind};
use madvec::madlab::{
    dominating_table, f_alpha, g_alpha, in_abar, in_h, verify_h, verify_witness, witness_nonmax_countable,
    witness_nonmax_finite, diagonalize_under, ADFamily, CheckKind, Construction,
};
use madvec::posets::{map_add_member, map_extend, map_leq, q_add_pair, q_extend_level, q_leq, MAPCondition, QCondition};
use madvec::stream::{make_stream, IndexSet, Preset, SubspaceStream};
use madvec::vector::SparseVector;
use madvec::Error;

struct Fail(String);

impl<E: Display> From<E> for Fail {
    fn from(e: E) -> Self {
        Fail(e.to_string())
    }
}

type Outcome = Result<String, Fail>;

macro_rules! ensure {
    ($cond:expr, $($arg:tt)+) => {
        if !$cond {
            return Err(Fail(format!($($arg)+)));
        }
    };
}

fn gf(p: u32) -> FieldSpec {
    FieldSpec::prime(p).unwrap()
}

fn e(spec: FieldSpec, i: usize) -> SparseVector {
    SparseVector::basis(spec, i)
}

fn stream(p: &Preset, spec: FieldSpec) -> SubspaceStream {
    make_stream(p, spec).unwrap()
}

fn triple() -> Vec<Preset> {
    vec![Preset::evens(), Preset::odds(), Preset::pairs()]
}

fn nonzero(rng: &mut ChaCha8Rng, p: u32) -> i64 {
    rng.gen_range(1..p as i64)
}

/// A block sequence with supports inside [0, top] (possibly empty).
fn random_block_seq(rng: &mut ChaCha8Rng, spec: FieldSpec, top: usize, allow_empty: bool) -> Vec<SparseVector> {
    let p = modulus(spec) as u32;
    if allow_empty && rng.gen_bool(0.15) {
        return Vec::new();
    }
    let mut points: Vec<usize> = (0..=top).filter(|_| rng.gen_bool(0.45)).collect();
    if points.is_empty() {
        points.push(rng.gen_range(0..=top));
    }
    let mut out = Vec::new();
    let mut cur: Vec<(usize, i64)> = Vec::new();
    for (k, &i) in points.iter().enumerate() {
        cur.push((i, nonzero(rng, p)));
        if k + 1 == points.len() || rng.gen_bool(0.4) {
            out.push(SparseVector::from_ints(spec, &cur));
            cur.clear();
        }
    }
    out
}

/// A nonzero combination of the given rows.
fn random_combination(rng: &mut ChaCha8Rng, p: u64, rows: &[Row]) -> Row {
    loop {
        let mut v = vec![0; rows[0].len()];
        for r in rows {
            let c = rng.gen_range(0..p);
            for (a, b) in v.iter_mut().zip(r) {
                *a = (*a + c * b) % p;
            }
        }
        if v.iter().any(|&c| c != 0) {
            return v;
        }
    }
}

// 1 ---------------------------------------------------------------------------

fn footnote_family() -> Outcome {
    let spec = FieldSpec::gf2();
    let fam = ADFamily::certified(spec, triple(), 32)?;
    for c in fam.certs() {
        ensure!(c.bound.is_none(), "pair {:?} certified with bound {:?}", c.pair, c.bound);
    }
    let mut prefixes = Vec::new();
    for p in triple() {
        let mut s = stream(&p, spec);
        let rows: Vec<SparseVector> = (0..32).map(|i| s.row(i).unwrap().clone()).collect();
        prefixes.push(rows);
    }
    let w = width(prefixes.iter().map(Vec::as_slice));
    for i in 0..3 {
        for j in i + 1..3 {
            let d = meet_dim(2, &to_rows(&prefixes[i], w), &to_rows(&prefixes[j], w));
            ensure!(d == 0, "prefixes of members {i} and {j} meet in dimension {d}");
        }
    }
    let mut x0 = stream(&Preset::evens(), spec);
    let mut x1 = stream(&Preset::odds(), spec);
    for r in &prefixes[2][..16] {
        let top = r.max_support().unwrap();
        let mut gens = rows_upto(&mut x0, top);
        gens.extend(rows_upto(&mut x1, top));
        let w = width([&gens[..], std::slice::from_ref(r)]);
        ensure!(in_span(2, &to_rows(&gens, w), &dense(r, w)), "row {r} of X_2 is not in X_0 + X_1");
        let lib = sum_space(&x0.prefix(top + 1)?, &x1.prefix(top + 1)?)?;
        ensure!(lib.contains(r)?, "library sum misses row {r}");
    }
    Ok("pairwise meets {0} at depth 32; 16/16 rows of X_2 inside X_0 + X_1".into())
}

// 2 ---------------------------------------------------------------------------

const SWEEP_WINDOW: usize = 12;

fn extend_bound_sweep() -> Outcome {
    let mut report = Vec::new();
    for p in [2u32, 3] {
        let spec = gf(p);
        let pm = p as u64;
        let mut rng = ChaCha8Rng::seed_from_u64(0x2300 + p as u64);
        let mut samples = 0;
        let mut inside = 0;
        for preset in preset_zoo(spec) {
            let mut y = stream(&preset, spec);
            let ywin = rows_upto(&mut y, SWEEP_WINDOW);
            let w = width([&ywin[..]]).max(SWEEP_WINDOW + 1);
            let ydense = to_rows(&ywin, w);
            for k in 0..SWEEP_WINDOW {
                let m = extend_bound(&mut y, k)?;
                let expect = ywin
                    .iter()
                    .filter(|r| r.min_support().unwrap() <= k)
                    .filter_map(SparseVector::max_support)
                    .fold(k, usize::max);
                ensure!(m == expect, "{preset:?} K={k}: extend_bound {m}, oracle {expect}");
                if m >= SWEEP_WINDOW {
                    continue;
                }
                let units: Vec<Row> = (m + 1..=SWEEP_WINDOW).map(|i| dense(&e(spec, i), w)).collect();
                let high = meet(pm, &ydense, &units);
                for _ in 0..10 {
                    let xs = random_block_seq(&mut rng, spec, k, true);
                    let x = if !high.is_empty() && rng.gen_bool(0.5) {
                        random_combination(&mut rng, pm, &high)
                    } else {
                        random_combination(&mut rng, pm, &units)
                    };
                    let before = to_rows(&xs, w);
                    let mut after = before.clone();
                    after.push(x.clone());
                    let x_in = in_span(pm, &ydense, &x);
                    let d0 = meet_dim(pm, &before, &ydense);
                    let d1 = meet_dim(pm, &after, &ydense);
                    ensure!(
                        d1 == d0 + usize::from(x_in),
                        "{preset:?} over GF({p}), K={k}, M={m}: xs={xs:?}, x={x:?} ({}in Y): meet dim {d0} -> {d1}",
                        if x_in { "" } else { "not " }
                    );
                    samples += 1;
                    inside += usize::from(x_in);
                }
            }
        }
        ensure!(samples >= 1000, "only {samples} samples over GF({p})");
        report.push(format!("GF({p}): {samples} samples, {inside} with x in Y"));
    }
    Ok(format!("{}; 0 failures", report.join(", ")))
}

// 3 ---------------------------------------------------------------------------

fn nonmax_witnesses() -> Outcome {
    let spec = FieldSpec::gf2();
    let residues: Vec<Preset> = (0..6).map(|r| Preset::residue(r, 6)).collect();
    let mut finite_checks = 0;
    for members in [triple(), residues] {
        let fam = ADFamily::certified(spec, members.clone(), 32)?;
        let w = witness_nonmax_finite(&fam, 12)?;
        verify_witness(&w)?;
        let xs = w.vectors()?;
        ensure!(xs.len() == 12, "witness has {} vectors", xs.len());
        for (k, p) in members.iter().enumerate() {
            let mut y = stream(p, spec);
            for n in 1..=xs.len() {
                let d = span_meet_dim(spec, &xs[..n], &mut y);
                ensure!(d == 0, "span(x_0..x_{}) meets member {k} in dimension {d}", n - 1);
                finite_checks += 1;
            }
        }
    }
    let adic: Vec<Preset> = (0..8).map(Preset::two_adic).collect();
    let fam = ADFamily::certified(spec, adic.clone(), 32)?;
    let w = witness_nonmax_countable(&fam, 8)?;
    verify_witness(&w)?;
    let xs = w.vectors()?;
    ensure!(xs.len() == 8, "countable witness has {} vectors", xs.len());
    let mut line_checks = 0;
    for (n, p) in adic.iter().enumerate() {
        let mut y = stream(p, spec);
        ensure!(stream_contains(spec, &xs[n], &mut y), "x_{n} is not in member {n}");
        for len in 1..=xs.len() {
            let d = span_meet_dim(spec, &xs[..len], &mut y);
            let want = usize::from(len > n);
            ensure!(d == want, "span(x_0..x_{}) meets member {n} in dimension {d}, expected {want}", len - 1);
            line_checks += 1;
        }
    }
    Ok(format!("{finite_checks} trivial-meet checks, {line_checks} line checks"))
}

// 4 ---------------------------------------------------------------------------

fn paired_heads() -> Vec<Preset> {
    let spec = FieldSpec::gf2();
    (0..8)
        .map(|k| {
            let b = 2 * (k / 2);
            Preset::canonical(
                &[SparseVector::indicator(spec, [b, b + 1])],
                Some(Preset::tail(Preset::residue(k, 8), 7)),
            )
        })
        .collect()
}

fn table_for(fam: &ADFamily, len: usize) -> Result<(Vec<usize>, madvec::madlab::Witness), Fail> {
    let mut upto = 64;
    loop {
        let h = dominating_table(fam, upto)?;
        match diagonalize_under(fam, &h, len) {
            Err(Error::TableTooShort { .. }) if upto < 1 << 16 => upto *= 2,
            other => return Ok((h, other?)),
        }
    }
}

fn diagonalization_pipeline() -> Outcome {
    let spec = FieldSpec::gf2();
    let residues: Vec<Preset> = (0..8).map(|r| Preset::residue(r, 8)).collect();
    let mut notes = Vec::new();
    for (name, members) in [("residues mod 8", residues), ("paired heads", paired_heads())] {
        let fam = ADFamily::certified(spec, members.clone(), 32)?;
        let mut streams: Vec<SubspaceStream> = members.iter().map(|p| stream(p, spec)).collect();
        let (h, w) = table_for(&fam, 12)?;
        let prefixes: Vec<Vec<SparseVector>> = streams
            .iter_mut()
            .map(|s| (0..32).map(|i| s.row(i).unwrap().clone()).collect())
            .collect();
        let pw = width(prefixes.iter().map(Vec::as_slice));
        let mut nontrivial_f = 0;
        for n in 0..h.len() {
            for (a, s) in streams.iter_mut().enumerate() {
                let win = rows_upto(s, n);
                let g = win.iter().filter_map(SparseVector::max_support).fold(n, usize::max);
                ensure!(g_alpha(&fam, a, n)? == g, "{name}: g_{a}({n}) differs from oracle {g}");
                ensure!(h[n] > g, "{name}: h({n}) = {} does not dominate g_{a} = {g}", h[n]);
                if n < members.len() && n != a {
                    let m = meet(2, &to_rows(&prefixes[a], pw), &to_rows(&prefixes[n], pw));
                    let f = max_support(&m).unwrap_or(0);
                    nontrivial_f += usize::from(!m.is_empty());
                    ensure!(f_alpha(&fam, a, n)? == f, "{name}: f_{a}({n}) differs from oracle {f}");
                    ensure!(h[n] > f, "{name}: h({n}) = {} does not dominate f_{a} = {f}", h[n]);
                }
            }
        }
        verify_witness(&w)?;
        ensure!(w.construction == Construction::Diagonalize, "{name}: wrong construction");
        let xs = w.vectors()?;
        ensure!(xs.len() == 12, "{name}: {} vectors", xs.len());
        for n in 1..xs.len() {
            let top = xs[n - 1].max_support().unwrap();
            ensure!(xs[n].min_support().unwrap() > h[top], "{name}: x_{n} is not above h({top})");
        }
        // Case 1: x_n in Y_k adds exactly ⟨x_n⟩ to the meet; Case 2: it adds nothing.
        for (k, s) in streams.iter_mut().enumerate() {
            for len in 1..=xs.len() {
                let want = (0..len).filter(|&n| fam.schedule(n) == k).count();
                let d = span_meet_dim(spec, &xs[..len], s);
                ensure!(d == want, "{name}: span(x_0..x_{}) meets Y_{k} in dim {d}, expected {want}", len - 1);
            }
            let last = (0..xs.len()).filter(|&n| fam.schedule(n) == k).max();
            let from = last.map_or(1, |l| l + 1);
            ensure!(
                w.checks.iter().any(|c| c.k == k && c.from == from && c.kind == CheckKind::Disjoint) || from >= xs.len(),
                "{name}: no tail check for member {k}"
            );
            for len in from + 1..=xs.len() {
                let d = span_meet_dim(spec, &xs[from..len], s);
                ensure!(d == 0, "{name}: tail from {from} meets Y_{k}");
            }
        }
        notes.push(format!("{name}: table of {} entries, {nontrivial_f} nonzero meets", h.len()));
    }
    Ok(notes.join("; "))
}

// 5 ---------------------------------------------------------------------------

fn fin_round_trip() -> Outcome {
    let spec = gf(5);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5005);
    let mut noncontiguous = 0;
    for trial in 0..500 {
        let len = rng.gen_range(2..9);
        let mut xs = Vec::new();
        let mut at = rng.gen_range(0..3);
        for _ in 0..len {
            let size = rng.gen_range(1..4);
            let mut terms = Vec::new();
            for _ in 0..size {
                terms.push((at, nonzero(&mut rng, 5)));
                at += rng.gen_range(1..3);
            }
            xs.push(SparseVector::from_ints(spec, &terms));
            at += rng.gen_range(0..3);
        }
        let mut groups: Vec<Vec<usize>> = Vec::new();
        let mut cur = Vec::new();
        for n in 0..len {
            if rng.gen_bool(0.6) {
                cur.push(n);
            }
            if !cur.is_empty() && (n + 1 == len || rng.gen_bool(0.45)) {
                groups.push(std::mem::take(&mut cur));
            }
        }
        if groups.is_empty() {
            groups.push(vec![rng.gen_range(0..len)]);
        }
        noncontiguous += groups.iter().filter(|g| g.windows(2).any(|w| w[1] != w[0] + 1)).count();
        let blocks: Vec<FinBlock> = groups
            .iter()
            .map(|g| FinBlock::new(g.iter().flat_map(|&n| xs[n].support())).unwrap())
            .collect();
        let a = FinBlockSeq::new(blocks.clone())?;
        let ys = lift_supp(&xs, &a)?;
        ensure!(ys.len() == blocks.len(), "trial {trial}: {} lifts for {} blocks", ys.len(), blocks.len());
        let w = width([&xs[..], &ys[..]]);
        let span = to_rows(&xs, w);
        for (y, b) in ys.iter().zip(&blocks) {
            ensure!(&y.support() == b.elements(), "trial {trial}: supp {y} is not {:?}", b.elements());
            ensure!(in_span(5, &span, &dense(y, w)), "trial {trial}: {y} is not in span(X)");
        }
    }
    Ok(format!("500 pairs, {noncontiguous} non-contiguous unions"))
}

// 6 ---------------------------------------------------------------------------

fn translate(set: u32, v: u32) -> u32 {
    (0..32).filter(|a| set >> a & 1 == 1).fold(0, |acc, a| acc | 1 << (a ^ v))
}

fn closure(gens: impl IntoIterator<Item = u32>) -> u32 {
    gens.into_iter().fold(1, |s, v| if s >> v & 1 == 1 { s } else { s | translate(s, v) })
}

fn to_vec2(v: u32) -> SparseVector {
    SparseVector::indicator(FieldSpec::gf2(), (0..5).filter(|i| v >> i & 1 == 1))
}

fn to_mask(v: &SparseVector) -> u32 {
    v.indices().fold(0, |acc, i| acc | 1 << i)
}

fn basis_of(set: u32) -> Vec<u32> {
    let mut span = 1u32;
    let mut out = Vec::new();
    for v in 1..32 {
        if set >> v & 1 == 1 && span >> v & 1 == 0 {
            out.push(v);
            span |= translate(span, v);
        }
    }
    out
}

fn echelon_oracle() -> Outcome {
    let spec = FieldSpec::gf2();
    let mut seen = HashSet::from([1u32]);
    let mut todo = vec![1u32];
    while let Some(s) = todo.pop() {
        for v in 1..32 {
            if s >> v & 1 == 0 {
                let t = s | translate(s, v);
                if seen.insert(t) {
                    todo.push(t);
                }
            }
        }
    }
    let mut spaces: Vec<u32> = seen.into_iter().collect();
    spaces.sort_unstable();
    ensure!(spaces.len() == 374, "enumerated {} subspaces of GF(2)^5", spaces.len());

    let mut bases = Vec::new();
    for &s in &spaces {
        let gens: Vec<SparseVector> = basis_of(s).into_iter().map(to_vec2).collect();
        let b = rref(spec, &gens)?;
        let rows: Vec<u32> = b.rows().iter().map(to_mask).collect();
        ensure!(closure(rows.iter().copied()) == s, "rref of {s:#x} spans something else");
        for (i, r) in rows.iter().enumerate() {
            let piv = r.trailing_zeros();
            ensure!(i == 0 || piv > rows[i - 1].trailing_zeros(), "pivots of {s:#x} not increasing");
            for (j, o) in rows.iter().enumerate() {
                ensure!(i == j || o >> piv & 1 == 0, "pivot column {piv} of {s:#x} not cleared");
            }
        }
        for v in 0..32u32 {
            let got = member(&to_vec2(v), &b)?.is_some();
            ensure!(got == (s >> v & 1 == 1), "member({v:#b}) wrong for {s:#x}");
        }
        bases.push(b);
    }
    let mut pairs = 0;
    for (i, &s) in spaces.iter().enumerate() {
        for (j, &t) in spaces.iter().enumerate() {
            let m = intersect(&bases[i], &bases[j])?;
            let m_set = closure(m.rows().iter().map(to_mask));
            ensure!(m_set == s & t, "intersect {s:#x} {t:#x}");
            ensure!(m == bases[spaces.binary_search(&(s & t)).unwrap()], "intersect {s:#x} {t:#x} not canonical");
            let u = sum_space(&bases[i], &bases[j])?;
            let u_set = closure(basis_of(s).into_iter().chain(basis_of(t)));
            ensure!(closure(u.rows().iter().map(to_mask)) == u_set, "sum {s:#x} {t:#x}");
            pairs += 1;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x6006);
    for _ in 0..1000 {
        let i = rng.gen_range(0..spaces.len());
        let s = spaces[i];
        let elems: Vec<u32> = (0..32).filter(|v| s >> v & 1 == 1).collect();
        let mut gens = Vec::new();
        while closure(gens.iter().copied()) != s {
            gens.push(*elems.choose(&mut rng).unwrap());
        }
        gens.shuffle(&mut rng);
        let b = rref(spec, &gens.into_iter().map(to_vec2).collect::<Vec<_>>())?;
        ensure!(b == bases[i], "recombined basis of {s:#x} gives a different rref");
    }
    Ok(format!("374 subspaces, {pairs} ordered pairs, 1000 recombinations"))
}

// 7 ---------------------------------------------------------------------------

fn h_members_oracle(spec: FieldSpec, xs: &[SparseVector], fam: &ADFamily, depth: usize) -> usize {
    fam.members()
        .iter()
        .filter(|p| span_meet_dim(spec, xs, &mut stream(p, spec)) >= depth)
        .count()
}

fn game_reflections() -> Outcome {
    let spec = FieldSpec::gf2();
    let adic = ADFamily::certified(spec, (0..4).map(Preset::two_adic).collect(), 32)?;
    let res8 = ADFamily::certified(spec, (0..8).map(|r| Preset::residue(r, 8)).collect(), 32)?;
    let trip = ADFamily::certified(spec, triple(), 32)?;
    let mut h_plays = 0;
    let mut abar_plays = 0;
    let mut replayed = 0;
    for seed in 0..100u64 {
        let fam = if seed % 2 == 0 { &adic } else { &res8 };
        let arena = if seed % 3 == 0 { Preset::tail(Preset::units(), (seed % 5) as usize) } else { Preset::units() };
        let rng = |k: u64| ChaCha8Rng::seed_from_u64(seed * 16 + k);

        let mut i_into = strat_i_into_h(fam, &arena, 3)?;
        let g = play(GameKind::Gowers, &arena, spec, &mut i_into, &mut RandomII::new(rng(1)), 24)?;
        let mut ii_first = strat_ii_first_element(fam, &arena, 3)?;
        let f = play(GameKind::Asymptotic, &arena, spec, &mut RandomI { rng: rng(2) }, &mut ii_first, 24)?;
        for t in [&g, &f] {
            let xs = t.outcome();
            let cert = in_h(&xs, fam, 3)?;
            ensure!(cert.complete && cert.depth >= 3, "seed {seed}: {} play has no depth-3 H certificate", t.kind);
            verify_h(&cert, &xs, fam)?;
            let n = h_members_oracle(spec, &xs, fam, 3);
            ensure!(n >= 3, "seed {seed}: oracle finds only {n} members meeting the outcome in 3 dimensions");
            h_plays += 1;
        }

        let chosen = (seed % 3) as usize;
        let (mut offer, _) = strat_pair_into_abar(chosen, &trip, &Preset::units(), 3)?;
        let g = play(GameKind::Gowers, &Preset::units(), spec, &mut offer, &mut RandomII::new(rng(3)), 24)?;
        let (_, mut inside) = strat_pair_into_abar(chosen, &trip, &Preset::units(), 3)?;
        let f = play(GameKind::Asymptotic, &Preset::units(), spec, &mut RandomI { rng: rng(4) }, &mut inside, 24)?;
        for t in [&g, &f] {
            let xs = t.outcome();
            ensure!(in_abar(&xs, &trip)? == Some(chosen), "seed {seed}: {} outcome not in member {chosen}", t.kind);
            for (k, p) in triple().iter().enumerate() {
                let mut y = stream(p, spec);
                let all = xs.iter().all(|x| stream_contains(spec, x, &mut y));
                ensure!(all == (k == chosen), "seed {seed}: oracle membership in member {k} is {all}");
            }
            abar_plays += 1;
        }

        for t in [&g, &f] {
            let back = replay_validate(&t.to_repr())?;
            ensure!(&back == t, "seed {seed}: replay differs");
            replayed += 1;
        }
    }
    ensure!(abar_plays == 200 && h_plays == 200, "plays missing");
    Ok(format!("{h_plays} H plays, {abar_plays}/{abar_plays} Abar plays, {replayed} replays validated"))
}

// 8 ---------------------------------------------------------------------------

fn random_q(rng: &mut ChaCha8Rng) -> QCondition {
    let spec = FieldSpec::gf2();
    let labels: &[&str] = if rng.gen_bool(0.5) { &["a"] } else { &["a", "b"] };
    let n = rng.gen_range(0..4);
    let pools: Vec<Vec<SparseVector>> = (0..n)
        .map(|l| {
            (0..2)
                .map(|_| loop {
                    let idx: Vec<usize> = (4 * l..4 * l + 4).filter(|_| rng.gen_bool(0.5)).collect();
                    if !idx.is_empty() {
                        break SparseVector::indicator(spec, idx);
                    }
                })
                .collect()
        })
        .collect();
    let mut rows = BTreeMap::new();
    for label in labels {
        let betas = if rng.gen_bool(0.7) { 3 } else { rng.gen_range(1..3) };
        for beta in 0..betas {
            let row = pools.iter().map(|pool| pool[rng.gen_range(0..2)].clone()).collect();
            rows.insert((label.to_string(), beta * 2 + 1), row);
        }
    }
    QCondition::new(spec, n, rows).unwrap()
}

fn q_leq_oracle(q: &QCondition, p: &QCondition) -> bool {
    let w = 1 + q
        .rows
        .values()
        .flatten()
        .filter_map(SparseVector::max_support)
        .max()
        .unwrap_or(0);
    for (pair, row) in &p.rows {
        match q.rows.get(pair) {
            Some(r) if r.len() >= row.len() && r[..row.len()] == row[..] => {}
            _ => return false,
        }
    }
    for (a, ra) in &p.rows {
        for (b, rb) in &p.rows {
            if a < b && a.0 == b.0 {
                let before = meet(2, &to_rows(ra, w), &to_rows(rb, w));
                let after = meet(2, &to_rows(&q.rows[a], w), &to_rows(&q.rows[b], w));
                if !same_space(2, &before, &after) && !(before.is_empty() && after.is_empty()) {
                    return false;
                }
            }
        }
    }
    true
}

fn q_has_meet(p: &QCondition) -> bool {
    let w = 16;
    p.rows.iter().any(|(a, ra)| {
        p.rows
            .iter()
            .any(|(b, rb)| a < b && a.0 == b.0 && !meet(2, &to_rows(ra, w), &to_rows(rb, w)).is_empty())
    })
}

fn map_leq_oracle(q: &MAPCondition, p: &MAPCondition, fam: &ADFamily) -> bool {
    let spec = fam.spec();
    if q.s.len() < p.s.len() || q.s[..p.s.len()] != p.s[..] || !q.f.is_superset(&p.f) {
        return false;
    }
    p.f.iter().all(|&m| {
        let mut y = stream(&fam.members()[m], spec);
        span_meet_dim(spec, &q.s, &mut y) == span_meet_dim(spec, &p.s, &mut y)
    })
}

fn poset_laws() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x8008);
    let mut with_meets = 0;
    for i in 0..500 {
        let p = random_q(&mut rng);
        with_meets += usize::from(q_has_meet(&p));
        let m = rng.gen_range(0..20);
        let q = q_extend_level(&p, m)?;
        ensure!(q.n == p.n + 1, "condition {i}: level count {} -> {}", p.n, q.n);
        ensure!(q.rows.values().all(|r| r[p.n].min_support().unwrap() > m), "condition {i}: new level not above {m}");
        ensure!(q_leq(&q, &p)? && q_leq_oracle(&q, &p), "condition {i}: q_extend_level result not below input");
        let label = if rng.gen_bool(0.5) { "a" } else { "c" };
        let r = q_add_pair(&p, (label.to_string(), 100 + i))?;
        ensure!(q_leq(&r, &p)? && q_leq_oracle(&r, &p), "condition {i}: q_add_pair result not below input");
        let r2 = q_extend_level(&r, 0)?;
        ensure!(q_leq(&r2, &p)? && q_leq_oracle(&r2, &p), "condition {i}: composite step not below input");
    }
    ensure!(with_meets >= 100, "only {with_meets} generated conditions have a nontrivial level intersection");

    let spec = FieldSpec::gf2();
    let families = [
        ADFamily::certified(spec, triple(), 32)?,
        ADFamily::certified(spec, (0..6).map(|r| Preset::residue(r, 6)).collect(), 32)?,
        ADFamily::certified(spec, paired_heads(), 32)?,
    ];
    let mut pool: Vec<(usize, MAPCondition)> = Vec::new();
    let mut chains = 0;
    for (fi, fam) in families.iter().enumerate() {
        for c in 0..6 {
            let f: Vec<usize> = (0..fam.len()).filter(|_| rng.gen_bool(0.5)).collect();
            let mut p = MAPCondition::new(Vec::new(), f)?;
            if c % 2 == 1 {
                p = map_extend(&MAPCondition::empty(), fam)?;
                p = map_add_member(&p, c % fam.len(), fam)?;
            }
            let start = p.clone();
            for step in 0..10 {
                let q = map_extend(&p, fam)?;
                ensure!(
                    map_leq(&q, &p, fam)? && map_leq_oracle(&q, &p, fam),
                    "family {fi} chain {c}: step {step} is not below its predecessor"
                );
                pool.push((fi, q.clone()));
                p = q;
            }
            ensure!(map_leq_oracle(&p, &start, fam), "family {fi} chain {c}: end not below start");
            chains += 1;
        }
    }
    for k in 0..500 {
        let (fi, base) = pool.choose(&mut rng).unwrap().clone();
        let fam = &families[fi];
        let pick = |rng: &mut ChaCha8Rng| (0..fam.len()).filter(|_| rng.gen_bool(0.4)).collect::<BTreeSet<_>>();
        let a = MAPCondition::new(base.s.clone(), pick(&mut rng))?;
        let b = MAPCondition::new(base.s.clone(), pick(&mut rng))?;
        let joint = MAPCondition::new(base.s.clone(), a.f.union(&b.f).copied())?;
        let c = map_extend(&joint, fam)?;
        for side in [&a, &b] {
            ensure!(
                map_leq(&c, side, fam)? && map_leq_oracle(&c, side, fam),
                "sample {k}: common extension not below {:?}",
                side.f
            );
        }
    }
    Ok(format!(
        "500 Q conditions ({with_meets} with nonzero level meets), {chains} MAP chains of length 10, 500 centered pairs"
    ))
}

// 9 ---------------------------------------------------------------------------

fn block_spaces() -> Vec<Preset> {
    vec![
        Preset::evens(),
        Preset::odds(),
        Preset::residue(1, 3),
        Preset::residue(0, 4),
        Preset::two_adic(1),
        Preset::pairs(),
        Preset::pattern(3, &[(0, 1), (1, 1)]),
        Preset::pattern(4, &[(1, 1), (3, 1)]),
        Preset::PerfectBranch { bits: "01".into() },
        Preset::tail(Preset::units(), 3),
        Preset::intersection(Preset::units(), Preset::residue(2, 5)),
        Preset::DiagonalIndexset {
            index: IndexSet::With {
                head: vec![1, 2],
                rest: Box::new(IndexSet::Residue { r: 0, m: 5 }),
            },
        },
    ]
}

fn cont_mod_finite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x4007);
    let spaces = block_spaces();
    let mut rows_checked = 0;
    for inst in 0..200 {
        let spec = if inst % 2 == 0 { gf(2) } else { gf(3) };
        let pm = modulus(spec);
        let yp = spaces[inst % spaces.len()].clone();
        let mut y = stream(&yp, spec);
        let ztop = rng.gen_range(0..10);
        let zs = random_block_seq(&mut rng, spec, ztop, true);
        let low = rows_upto(&mut y, 12);
        let w = width([&zs[..], &low[..]]);
        let mut gens = to_rows(&zs, w);
        gens.extend(to_rows(&low[..low.len().min(4)], w));
        let head: Vec<SparseVector> = (0..rng.gen_range(1..4))
            .map(|_| from_dense(spec, &random_combination(&mut rng, pm, &gens)))
            .collect();
        let xp = Preset::canonical(&head, Some(Preset::tail(yp.clone(), rng.gen_range(0..15))));
        let mut x = stream(&xp, spec);
        let m = cont_mod_finite_bound(&mut x, &mut y, &zs)?;
        let n = zs.iter().filter_map(SparseVector::max_support).max().unwrap_or(0);
        let expect = low
            .iter()
            .filter(|r| r.min_support().unwrap() <= n)
            .filter_map(SparseVector::max_support)
            .fold(n, usize::max);
        ensure!(m == expect, "instance {inst}: bound {m}, oracle {expect}");
        let mut i = 0;
        let mut tail_rows = 0;
        while tail_rows < 16 {
            let r = x.row(i)?.clone();
            i += 1;
            if r.min_support().unwrap() <= m {
                continue;
            }
            ensure!(stream_contains(spec, &r, &mut y), "instance {inst}: row {r} of X/{m} is not in Y ({yp:?}, zs {zs:?})");
            tail_rows += 1;
        }
        rows_checked += tail_rows;
    }
    Ok(format!("200 instances, {rows_checked} tail rows inside Y"))
}

// 10 --------------------------------------------------------------------------

const GOLDEN: &str = "tests/golden";

fn inputs(name: &str) -> String {
    format!("{GOLDEN}/inputs/{name}")
}

fn golden_cases() -> Vec<(&'static str, Vec<String>)> {
    let i = inputs;
    let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
    vec![
        ("rref", s(&["rref", "--input", &i("vectors.json")])),
        ("intersect", s(&["intersect", "--left", &i("left.json"), "--right", &i("right.json")])),
        ("sum", s(&["intersect", "--left", &i("left.json"), "--right", &i("right.json"), "--sum"])),
        ("rref-gf3", s(&["--field", "gf3", "rref", "--input", &i("vectors-gf3.json")])),
        ("extend-bound", s(&["extend-bound", "--family", &i("triple.json"), "--member", "2", "--k", "2"])),
        ("witness-nonmax", s(&["witness", "nonmax", "--family", &i("triple.json"), "--len", "12"])),
        ("witness-countable", s(&["witness", "countable", "--family", &i("two-adic.json"), "--len", "8"])),
        ("witness-h", s(&["witness", "h", "--family", &i("two-adic.json"), "--xs", &i("units32.json")])),
        ("diagonalize", s(&["diagonalize", "--family", &i("residues8.json"), "--len", "12"])),
        ("fin-fu", s(&["fin", "fu", "--seq", &i("fin-seq.json"), "--upto", "7"])),
        ("fin-ad", s(&["fin", "ad", "--a", &i("fin-a.json"), "--b", &i("fin-b.json"), "--cutoff", "12"])),
        ("fin-lift", s(&["--field", "gf5", "fin", "lift", "--xs", &i("lift-xs.json"), "--blocks", &i("lift-blocks.json")])),
        ("fin-bga", s(&["fin", "bga", "--seqs", &i("bga-seqs.json"), "--depth", "8"])),
        (
            "game-gowers",
            s(&["game", "play", "--kind", "gowers", "--arena", &i("arena.json"), "--strat-i", "into-h", "--strat-ii", "random", "--rounds", "24", "--family", &i("two-adic.json"), "--seed", "7"]),
        ),
        (
            "game-asymptotic",
            s(&["game", "play", "--kind", "asymptotic", "--arena", &i("arena.json"), "--strat-i", "random", "--strat-ii", "pair-abar", "--rounds", "24", "--family", &i("triple.json"), "--member", "1", "--seed", "3"]),
        ),
        ("game-ladder", s(&["game", "play", "--kind", "asymptotic", "--arena", &i("arena.json"), "--strat-i", "ladder", "--strat-ii", "first-row", "--rounds", "6"])),
        ("q-extend", s(&["poset", "q-extend", "--condition", &i("q.json"), "--min", "9"])),
        ("q-add", s(&["poset", "q-add", "--condition", &i("q.json"), "--label", "a", "--beta", "5"])),
        ("map-extend", s(&["poset", "map-extend", "--condition", &i("map.json"), "--family", &i("triple.json")])),
        ("map-add", s(&["poset", "map-add", "--condition", &i("map.json"), "--family", &i("triple.json"), "--member", "2"])),
        ("verify", s(&["verify", "--witness", &format!("{GOLDEN}/witness-nonmax.json"), "--transcript", &format!("{GOLDEN}/game-gowers.json")])),
    ]
}

fn cli(args: &[String]) -> (i32, Vec<u8>, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut full = vec!["madvec".to_string()];
    full.extend(args.iter().cloned());
    let code = run_with(full, &mut out, &mut err);
    (code, out, String::from_utf8_lossy(&err).into_owned())
}

fn vec_json(v: &SparseVector) -> Value {
    serde_json::to_value(v.to_repr()).unwrap()
}

type Mutation = fn(&mut Value, &mut ChaCha8Rng);

fn pick(rng: &mut ChaCha8Rng, n: usize) -> usize {
    rng.gen_range(0..n)
}

fn top_of(v: &Value) -> usize {
    v["v"].as_array().unwrap().last().unwrap()[0].as_u64().unwrap() as usize
}

fn mutations() -> Vec<(&'static str, &'static str, &'static str, Mutation)> {
    vec![
        ("drop a required check", "witness-nonmax", "witness", |a, r| {
            let c = a["checks"].as_array_mut().unwrap();
            let k = pick(r, c.len());
            c.remove(k);
        }),
        ("drop a certificate", "witness-countable", "witness", |a, r| {
            let c = a["certs"].as_array_mut().unwrap();
            let k = pick(r, c.len());
            c.remove(k);
        }),
        ("move the cut", "witness-nonmax", "witness", |a, r| {
            a["cut"] = json!(r.gen_range(1..6));
        }),
        ("last vector inside a member", "witness-nonmax", "witness", |a, r| {
            let xs = a["xs"].as_array_mut().unwrap();
            let n = xs.len();
            let prev = top_of(&xs[n - 2]);
            let parity = pick(r, 2);
            let t = (prev + 1..).find(|t| t % 2 == parity).unwrap();
            xs[n - 1] = vec_json(&e(FieldSpec::gf2(), t));
        }),
        ("swap two members", "witness-countable", "witness", |a, r| {
            let m = a["members"].as_array_mut().unwrap();
            let i = pick(r, m.len() - 1);
            m.swap(i, i + 1);
        }),
        ("zero an h entry", "diagonalize", "witness", |a, r| {
            let k = pick(r, 4);
            a["h"][k] = json!(0);
        }),
        ("relabel the construction", "witness-nonmax", "witness", |a, _| {
            a["construction"] = json!("nonmax-countable");
        }),
        ("swap consecutive moves", "game-gowers", "transcript", |a, r| {
            let i = pick(r, 23);
            let rounds = a["rounds"].as_array_mut().unwrap();
            let x = rounds[i]["ii"].clone();
            rounds[i]["ii"] = rounds[i + 1]["ii"].clone();
            rounds[i + 1]["ii"] = x;
            a["outcome"].as_array_mut().unwrap().swap(i, i + 1);
        }),
        ("edit the outcome", "game-asymptotic", "transcript", |a, r| {
            let i = pick(r, 23);
            let next = a["outcome"][i + 1].clone();
            a["outcome"][i] = next;
        }),
        ("drop a round", "game-gowers", "transcript", |a, r| {
            let rounds = a["rounds"].as_array_mut().unwrap();
            let i = pick(r, rounds.len());
            rounds.remove(i);
        }),
        ("answer outside the offer", "game-gowers", "transcript", |a, r| {
            let i = 1 + pick(r, 22);
            let offer = Preset::from_json(&a["rounds"][i]["i"]["subspace"]).unwrap();
            let mut y = stream(&offer, FieldSpec::gf2());
            let lo = top_of(&a["rounds"][i - 1]["ii"]);
            let t = (lo + 1..).find(|&t| !y.contains(&e(FieldSpec::gf2(), t)).unwrap()).unwrap();
            let v = vec_json(&e(FieldSpec::gf2(), t));
            a["rounds"][i]["ii"] = v.clone();
            a["outcome"][i] = v;
        }),
        ("raise the H depth", "witness-h", "certificate", |a, _| {
            let d = a["certificate"]["depth"].as_u64().unwrap();
            a["certificate"]["depth"] = json!(d + 1);
        }),
        ("reassign an H witness", "witness-h", "certificate", |a, r| {
            let used: BTreeSet<u64> = a["certificate"]["witnesses"]
                .as_array()
                .unwrap()
                .iter()
                .map(|w| w["member"].as_u64().unwrap())
                .collect();
            let free: Vec<u64> = (0..8).filter(|m| !used.contains(m)).collect();
            let k = pick(r, used.len());
            a["certificate"]["witnesses"][k]["member"] = json!(free[pick(r, free.len())]);
        }),
        ("collide two new level vectors", "q-extend", "condition", |a, _| {
            let n = a["result"]["n"].as_u64().unwrap() as usize - 1;
            let v = a["result"]["rows"]["a,0"][n].clone();
            a["result"]["rows"]["a,1"][n] = v;
        }),
        ("rewrite the parent", "q-add", "condition", |a, r| {
            let last = a["parent"]["n"].as_u64().unwrap() as usize - 1;
            a["parent"]["rows"]["a,0"][last] = json!({"v": [[40 + pick(r, 5), "1"]]});
        }),
        ("lie about the level floor", "q-extend", "condition", |a, r| {
            a["min"] = json!(100 + r.gen_range(0..10));
        }),
        ("extend inside a member", "map-extend", "condition", |a, r| {
            let s = a["result"]["s"].as_array_mut().unwrap();
            let prev = if s.len() > 1 { top_of(&s[s.len() - 2]) + 1 } else { 0 };
            let parity = pick(r, 2);
            let t = (prev..).find(|t| t % 2 == parity).unwrap();
            *s.last_mut().unwrap() = vec_json(&e(FieldSpec::gf2(), t));
        }),
        ("drop a member from F", "map-add", "condition", |a, r| {
            let f = a["result"]["F"].as_array_mut().unwrap();
            let k = pick(r, f.len());
            f.remove(k);
        }),
        ("relabel the step", "map-extend", "condition", |a, _| {
            a["op"] = json!("map-add");
        }),
        ("claim a trivial meet", "family", "certificate", |a, r| {
            let c = a["certs"].as_array_mut().unwrap();
            let finite: Vec<usize> = (0..c.len()).filter(|&k| !c[k]["bound"].is_null()).collect();
            let k = finite[pick(r, finite.len())];
            c[k]["bound"] = Value::Null;
        }),
    ]
}

fn cli_goldens() -> Outcome {
    let update = std::env::var_os("UPDATE_GOLDEN").is_some();
    let tmp = tempfile::tempdir()?;
    let mut outputs: BTreeMap<&str, Value> = BTreeMap::new();
    for (name, args) in golden_cases() {
        let (code, out, err) = cli(&args);
        ensure!(code == 0, "{name}: exit {code}: {err}");
        let path = PathBuf::from(GOLDEN).join(format!("{name}.json"));
        if update {
            std::fs::write(&path, &out)?;
        }
        let want = std::fs::read(&path).map_err(|e| Fail(format!("{}: {e}", path.display())))?;
        ensure!(out == want, "{name}: output differs from {}", path.display());

        let target = tmp.path().join(format!("{name}.json"));
        let mut with_out = args.clone();
        with_out.extend(["--out".to_string(), target.display().to_string()]);
        let mut runs = Vec::new();
        for _ in 0..2 {
            let (code, _, err) = cli(&with_out);
            ensure!(code == 0, "{name} --out: exit {code}: {err}");
            let manifest = std::fs::read(tmp.path().join(format!("{name}.json.manifest.json")))?;
            runs.push((std::fs::read(&target)?, manifest));
        }
        ensure!(runs[0] == runs[1], "{name}: repeated runs differ");
        ensure!(runs[0].0 == out, "{name}: --out file differs from stdout");
        outputs.insert(name, serde_json::from_slice(&out)?);
    }

    let fam = ADFamily::certified(FieldSpec::gf2(), paired_heads(), 8)?;
    outputs.insert("family", serde_json::to_value(Artifact::Family(fam.to_file()))?);

    let mut rng = ChaCha8Rng::seed_from_u64(0x1010);
    let mut rejected = 0;
    for (what, base, flag, mutate) in mutations() {
        let original = outputs[base].clone();
        let parsed: Artifact = serde_json::from_value(original.clone())?;
        ensure!(verify_artifact(&parsed).is_ok(), "unmutated {base} fails to verify");
        let mut bad = original.clone();
        mutate(&mut bad, &mut rng);
        ensure!(bad != original, "mutation '{what}' left {base} unchanged");
        let path = tmp.path().join("mutant.json");
        std::fs::write(&path, serde_json::to_vec(&bad)?)?;
        let (code, _, err) = cli(&["verify".into(), format!("--{flag}"), path.display().to_string()]);
        ensure!(code == 1, "verify gave exit {code} for {base} after '{what}': {err}");
        rejected += 1;
    }
    ensure!(rejected == 20, "only {rejected} mutants");
    Ok(format!("{} goldens byte-identical and repeatable; 20/20 mutants rejected", golden_cases().len()))
}

// -----------------------------------------------------------------------------

struct Criterion {
    id: u32,
    name: &'static str,
    limit: Duration,
    run: fn() -> Outcome,
}

fn main() {
    std::env::set_current_dir(Path::new(env!("CARGO_MANIFEST_DIR"))).expect("package directory");
    let secs = Duration::from_secs;
    let criteria = [
        Criterion { id: 1, name: "footnote family fidelity", limit: secs(1), run: footnote_family },
        Criterion { id: 2, name: "extend_bound dichotomy sweep", limit: secs(30), run: extend_bound_sweep },
        Criterion { id: 3, name: "non-maximality witnesses", limit: secs(5), run: nonmax_witnesses },
        Criterion { id: 4, name: "dominated diagonalization", limit: secs(10), run: diagonalization_pipeline },
        Criterion { id: 5, name: "FIN lift round trip", limit: secs(10), run: fin_round_trip },
        Criterion { id: 6, name: "echelon oracle equivalence", limit: secs(30), run: echelon_oracle },
        Criterion { id: 7, name: "game strategies", limit: secs(20), run: game_reflections },
        Criterion { id: 8, name: "poset laws", limit: secs(20), run: poset_laws },
        Criterion { id: 9, name: "containment mod finite bound", limit: secs(5), run: cont_mod_finite },
        Criterion { id: 10, name: "CLI determinism and verification", limit: secs(10), run: cli_goldens },
    ];
    let only: Option<u32> = std::env::args().nth(1).and_then(|a| a.parse().ok());
    let mut failed = 0;
    for c in criteria.iter().filter(|c| only.map_or(true, |o| o == c.id)) {
        let start = Instant::now();
        let result = std::panic::catch_unwind(c.run);
        let took = start.elapsed();
        let (ok, detail) = match result {
            Ok(Ok(d)) if took <= c.limit => (true, d),
            Ok(Ok(d)) => (false, format!("{d}; over the time limit")),
            Ok(Err(Fail(why))) => (false, why),
            Err(_) => (false, "panicked".to_string()),
        };
        failed += usize::from(!ok);
        println!(
            "{} {:>2} {:<34} {:>7.2}s / {:>2}s  {}",
            if ok { "PASS" } else { "FAIL" },
            c.id,
            c.name,
            took.as_secs_f64(),
            c.limit.as_secs(),
            detail
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
