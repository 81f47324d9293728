//! The Gowers game G[X] and the asymptotic game F[X], truncated to a fixed
//! number of rounds.
//!
//! In G[X] player I offers a block subspace of the arena X (as a preset) and
//! II answers with a vector of it; in F[X] I names an integer n_k and II
//! answers with a vector of X above n_k. II's answers must increase as
//! blocks. The engine validates every move; [`replay_validate`] re-checks a
//! finished transcript from its JSON form alone.

use std::collections::HashMap;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::echelon::EchelonBasis;
use crate::error::{Error, Player, Result};
use crate::field::{FieldSpec, Scalar};
use crate::madlab::{meeting_members, ADFamily};
use crate::stream::{make_stream, Preset, SubspaceStream};
use crate::vector::{SparseVector, VectorRepr};

/// Rows of an offered subspace checked against the arena in G[X], besides
/// those needed to represent II's answer.
pub const OFFER_CHECK_ROWS: usize = 8;

/// Arena rows searched when deciding which members a strategy can use.
pub const STRATEGY_WINDOW: usize = 128;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GameKind {
    Gowers,
    Asymptotic,
}

impl std::fmt::Display for GameKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            GameKind::Gowers => "gowers",
            GameKind::Asymptotic => "asymptotic",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MoveI {
    Subspace(Preset),
    Integer(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Round {
    pub i: MoveI,
    pub ii: SparseVector,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transcript {
    pub kind: GameKind,
    pub spec: FieldSpec,
    pub arena: Preset,
    pub rounds: Vec<Round>,
}

impl Transcript {
    pub fn outcome(&self) -> Vec<SparseVector> {
        self.rounds.iter().map(|r| r.ii.clone()).collect()
    }

    pub fn to_repr(&self) -> TranscriptRepr {
        TranscriptRepr {
            game: self.kind,
            field: self.spec,
            arena: self.arena.clone(),
            rounds: self
                .rounds
                .iter()
                .map(|r| RoundRepr {
                    i: r.i.clone(),
                    ii: r.ii.to_repr(),
                })
                .collect(),
            outcome: self.rounds.iter().map(|r| r.ii.to_repr()).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoundRepr {
    pub i: MoveI,
    pub ii: VectorRepr,
}

/// Transcript JSON: `{"game","field","arena","rounds":[{"i","ii"}],"outcome"}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TranscriptRepr {
    pub game: GameKind,
    pub field: FieldSpec,
    pub arena: Preset,
    pub rounds: Vec<RoundRepr>,
    pub outcome: Vec<VectorRepr>,
}

impl TranscriptRepr {
    pub fn decode(&self) -> Result<Transcript> {
        let rounds: Vec<Round> = self
            .rounds
            .iter()
            .map(|r| {
                Ok(Round {
                    i: r.i.clone(),
                    ii: r.ii.decode(self.field)?,
                })
            })
            .collect::<Result<_>>()?;
        let outcome: Vec<SparseVector> = self
            .outcome
            .iter()
            .map(|v| v.decode(self.field))
            .collect::<Result<_>>()?;
        if outcome.len() != rounds.len() || outcome.iter().zip(&rounds).any(|(o, r)| *o != r.ii) {
            return Err(Error::Verification(
                "outcome differs from II's moves".into(),
            ));
        }
        Ok(Transcript {
            kind: self.game,
            spec: self.field,
            arena: self.arena.clone(),
            rounds,
        })
    }
}

/// What a strategy sees: the game so far.
pub struct Position<'a> {
    pub kind: GameKind,
    pub spec: FieldSpec,
    pub arena: &'a Preset,
    pub rounds: &'a [Round],
}

impl Position<'_> {
    pub fn round(&self) -> usize {
        self.rounds.len()
    }

    /// Max support of II's previous answer.
    pub fn last_top(&self) -> Option<usize> {
        self.rounds.last().and_then(|r| r.ii.max_support())
    }

    /// Every legal answer must have min support above this.
    pub fn lower_bound(&self, offer: &MoveI) -> Option<usize> {
        match offer {
            MoveI::Integer(n) => Some(self.last_top().map_or(*n, |t| t.max(*n))),
            MoveI::Subspace(_) => self.last_top(),
        }
    }
}

pub trait StrategyI {
    fn move_i(&mut self, pos: &Position) -> Result<MoveI>;
}

pub trait StrategyII {
    fn move_ii(&mut self, pos: &Position, offer: &MoveI) -> Result<SparseVector>;
}

/// Streams keyed by preset, so repeated offers are not recomputed.
#[derive(Default)]
pub struct StreamCache {
    streams: HashMap<String, SubspaceStream>,
}

impl StreamCache {
    pub fn get(&mut self, preset: &Preset, spec: FieldSpec) -> Result<&mut SubspaceStream> {
        let key = format!("{spec}:{}", preset.to_json());
        if !self.streams.contains_key(&key) {
            self.streams.insert(key.clone(), make_stream(preset, spec)?);
        }
        Ok(self.streams.get_mut(&key).expect("just inserted"))
    }
}

fn illegal(player: Player, round: usize, rule: impl Into<String>) -> Error {
    Error::IllegalMove {
        player,
        round,
        rule: rule.into(),
    }
}

/// Plays `rounds` rounds, validating each move as it is made.
pub fn play(
    kind: GameKind,
    arena: &Preset,
    spec: FieldSpec,
    strat_i: &mut dyn StrategyI,
    strat_ii: &mut dyn StrategyII,
    rounds: usize,
) -> Result<Transcript> {
    arena.validate(spec)?;
    let mut cache = StreamCache::default();
    let mut played: Vec<Round> = Vec::with_capacity(rounds);
    for k in 0..rounds {
        let pos = Position {
            kind,
            spec,
            arena,
            rounds: &played,
        };
        let offer = strat_i.move_i(&pos)?;
        match (&offer, kind) {
            (MoveI::Subspace(p), GameKind::Gowers) => {
                p.validate(spec).map_err(|e| illegal(Player::I, k, format!("offer is not a valid preset: {e}")))?;
            }
            (MoveI::Integer(_), GameKind::Asymptotic) => {}
            _ => return Err(illegal(Player::I, k, format!("wrong kind of move for the {kind} game"))),
        }
        let y = strat_ii.move_ii(&pos, &offer)?;
        if y.spec() != spec {
            return Err(illegal(Player::II, k, "vector over the wrong field"));
        }
        if y.is_zero() {
            return Err(illegal(Player::II, k, "zero vector"));
        }
        if let Some(top) = pos.last_top() {
            if y.min_support() <= Some(top) {
                return Err(illegal(Player::II, k, format!("answer does not lie above the previous answer (max support {top})")));
            }
        }
        match &offer {
            MoveI::Integer(n) => {
                if y.min_support() <= Some(*n) {
                    return Err(illegal(Player::II, k, format!("answer does not lie above n = {n}")));
                }
                if !cache.get(arena, spec)?.member(&y)? {
                    return Err(illegal(Player::II, k, "answer is not in the arena"));
                }
            }
            MoveI::Subspace(p) => {
                let top = y.max_support().expect("nonzero");
                let offer_rows = {
                    let s = cache.get(p, spec)?;
                    if !s.member(&y)? {
                        return Err(illegal(Player::II, k, "answer is not in the offered subspace"));
                    }
                    let mut rows = s.rows_until_pivot_exceeds(top)?.into_rows();
                    for r in rows.len()..OFFER_CHECK_ROWS {
                        match s.try_row(r)? {
                            Some(row) => rows.push(row.clone()),
                            None => break,
                        }
                    }
                    rows
                };
                let x = cache.get(arena, spec)?;
                for (r, row) in offer_rows.iter().enumerate() {
                    if !x.member(row)? {
                        return Err(illegal(Player::I, k, format!("row {r} of the offer is not in the arena")));
                    }
                }
            }
        }
        played.push(Round { i: offer, ii: y });
    }
    Ok(Transcript {
        kind,
        spec,
        arena: arena.clone(),
        rounds: played,
    })
}

/// Re-checks a transcript without the engine: membership is decided by
/// explicit echelon bases of the stream rows that can occur in a
/// representation of the vector.
pub fn replay_validate(t: &TranscriptRepr) -> Result<Transcript> {
    let tr = t.decode()?;
    tr.arena.validate(tr.spec)?;
    let mut arena = make_stream(&tr.arena, tr.spec)?;
    let in_stream = |s: &mut SubspaceStream, v: &SparseVector| -> Result<bool> {
        let top = v.max_support().expect("nonzero");
        let mut basis = EchelonBasis::new(tr.spec);
        let mut i = 0;
        while let Some(row) = s.try_row(i)? {
            if row.min_support() > Some(top) {
                break;
            }
            basis.insert(row)?;
            i += 1;
        }
        basis.contains(v)
    };
    let mut prev: Option<&SparseVector> = None;
    for (k, r) in tr.rounds.iter().enumerate() {
        let y = &r.ii;
        if y.is_zero() {
            return Err(illegal(Player::II, k, "zero vector"));
        }
        if let Some(p) = prev {
            if p.max_support() >= y.min_support() {
                return Err(illegal(Player::II, k, "answers are not increasing blocks"));
            }
        }
        match (&r.i, tr.kind) {
            (MoveI::Integer(n), GameKind::Asymptotic) => {
                if y.min_support() <= Some(*n) {
                    return Err(illegal(Player::II, k, format!("answer does not lie above n = {n}")));
                }
                if !in_stream(&mut arena, y)? {
                    return Err(illegal(Player::II, k, "answer is not in the arena"));
                }
            }
            (MoveI::Subspace(p), GameKind::Gowers) => {
                p.validate(tr.spec)?;
                let mut offer = make_stream(p, tr.spec)?;
                if !in_stream(&mut offer, y)? {
                    return Err(illegal(Player::II, k, "answer is not in the offered subspace"));
                }
                let top = y.max_support().expect("nonzero");
                let mut i = 0;
                while let Some(row) = offer.try_row(i)?.cloned() {
                    if i >= OFFER_CHECK_ROWS && row.min_support() > Some(top) {
                        break;
                    }
                    if !in_stream(&mut arena, &row)? {
                        return Err(illegal(Player::I, k, format!("row {i} of the offer is not in the arena")));
                    }
                    i += 1;
                }
            }
            _ => return Err(illegal(Player::I, k, "wrong kind of move")),
        }
        prev = Some(y);
    }
    Ok(tr)
}

/// I offers the arena itself every round.
pub struct ArenaOffer;

impl StrategyI for ArenaOffer {
    fn move_i(&mut self, pos: &Position) -> Result<MoveI> {
        Ok(MoveI::Subspace(pos.arena.clone()))
    }
}

/// I names n_k = k.
pub struct Ladder;

impl StrategyI for Ladder {
    fn move_i(&mut self, pos: &Position) -> Result<MoveI> {
        Ok(MoveI::Integer(pos.round()))
    }
}

/// II answers with the first row of the offer (or of the arena, in F[X])
/// that is legal.
#[derive(Default)]
pub struct FirstRow {
    cache: StreamCache,
}

impl StrategyII for FirstRow {
    fn move_ii(&mut self, pos: &Position, offer: &MoveI) -> Result<SparseVector> {
        let source = match offer {
            MoveI::Subspace(p) => p,
            MoveI::Integer(_) => pos.arena,
        };
        self.cache.get(source, pos.spec)?.first_row_above(pos.lower_bound(offer))
    }
}

/// A presentation of ⟨X⟩ ∩ Y; when X is the whole space this is Y itself.
pub fn meet_preset(arena: &Preset, member: &Preset) -> Preset {
    if *arena == Preset::units() {
        member.clone()
    } else {
        Preset::intersection(arena.clone(), member.clone())
    }
}

fn usable_members(fam: &ADFamily, arena: &Preset, depth: usize) -> Result<Vec<usize>> {
    let mut x = make_stream(arena, fam.spec())?;
    let mut rows = Vec::new();
    for i in 0..STRATEGY_WINDOW {
        match x.try_row(i)? {
            Some(r) => rows.push(r.clone()),
            None => break,
        }
    }
    let members = meeting_members(&rows, fam, depth)?;
    if members.is_empty() {
        return Err(Error::Strategy {
            round: 0,
            why: format!(
                "no member meets the first {STRATEGY_WINDOW} arena rows in {depth} dimensions"
            ),
        });
    }
    Ok(members)
}

/// I offers ⟨X⟩ ∩ Y_{s(n)} in round n, cycling through the members that meet
/// the arena in at least `depth` dimensions within its first rows.
pub struct IntoH {
    offers: Vec<Preset>,
    pub members: Vec<usize>,
}

pub fn strat_i_into_h(fam: &ADFamily, arena: &Preset, depth: usize) -> Result<IntoH> {
    let members = usable_members(fam, arena, depth)?;
    let offers = members
        .iter()
        .map(|&m| meet_preset(arena, &fam.members()[m]))
        .collect();
    Ok(IntoH { offers, members })
}

impl StrategyI for IntoH {
    fn move_i(&mut self, pos: &Position) -> Result<MoveI> {
        Ok(MoveI::Subspace(self.offers[pos.round() % self.offers.len()].clone()))
    }
}

/// II answers in F[X] with the first legal row of ⟨X⟩ ∩ Y_{s(n)}.
pub struct FirstElement {
    sources: Vec<Preset>,
    cache: StreamCache,
    pub members: Vec<usize>,
}

pub fn strat_ii_first_element(fam: &ADFamily, arena: &Preset, depth: usize) -> Result<FirstElement> {
    let members = usable_members(fam, arena, depth)?;
    let sources = members
        .iter()
        .map(|&m| meet_preset(arena, &fam.members()[m]))
        .collect();
    Ok(FirstElement {
        sources,
        cache: StreamCache::default(),
        members,
    })
}

impl StrategyII for FirstElement {
    fn move_ii(&mut self, pos: &Position, offer: &MoveI) -> Result<SparseVector> {
        let source = &self.sources[pos.round() % self.sources.len()];
        self.cache
            .get(source, pos.spec)?
            .first_row_above(pos.lower_bound(offer))
    }
}

/// I constantly offers ⟨X⟩ ∩ Y.
pub struct ConstantOffer {
    offer: Preset,
}

impl StrategyI for ConstantOffer {
    fn move_i(&mut self, _pos: &Position) -> Result<MoveI> {
        Ok(MoveI::Subspace(self.offer.clone()))
    }
}

/// II answers with the first legal row of ⟨X⟩ ∩ Y.
pub struct InsideMember {
    source: Preset,
    cache: StreamCache,
}

impl StrategyII for InsideMember {
    fn move_ii(&mut self, pos: &Position, offer: &MoveI) -> Result<SparseVector> {
        self.cache
            .get(&self.source, pos.spec)?
            .first_row_above(pos.lower_bound(offer))
    }
}

/// Strategies keeping every answer inside member `member`, for I in G[X] and
/// II in F[X].
pub fn strat_pair_into_abar(
    member: usize,
    fam: &ADFamily,
    arena: &Preset,
    depth: usize,
) -> Result<(ConstantOffer, InsideMember)> {
    let y = fam.members().get(member).ok_or(Error::InvalidIndex {
        index: member,
        len: fam.len(),
    })?;
    if !usable_members(fam, arena, depth)?.contains(&member) {
        return Err(Error::Strategy {
            round: 0,
            why: format!("member {member} does not meet the arena in {depth} dimensions"),
        });
    }
    let source = meet_preset(arena, y);
    Ok((
        ConstantOffer {
            offer: source.clone(),
        },
        InsideMember {
            source,
            cache: StreamCache::default(),
        },
    ))
}

/// Random legal opponents driven by a caller-owned generator.
pub mod fuzz {
    use super::*;

    fn random_nonzero(spec: FieldSpec, rng: &mut dyn RngCore) -> Scalar {
        match spec {
            FieldSpec::Prime(p) => spec.from_int(rng.gen_range(1..p as i64)),
            FieldSpec::Rationals => {
                let n = rng.gen_range(1..6i64) * if rng.gen_bool(0.5) { 1 } else { -1 };
                spec.ratio(n, rng.gen_range(1..4i64)).expect("nonzero denominator")
            }
        }
    }

    fn random_combination(
        s: &mut SubspaceStream,
        lower: Option<usize>,
        rng: &mut dyn RngCore,
    ) -> Result<SparseVector> {
        let mut start = 0;
        if let Some(m) = lower {
            while s.row(start)?.min_support() <= Some(m) {
                start += 1;
            }
        }
        start += rng.gen_range(0..3);
        let count = rng.gen_range(1..4);
        let spec = s.spec();
        let mut v = SparseVector::zero(spec);
        for r in start..start + count {
            let row = s.row(r)?.clone();
            v = v.try_add(&row.scale(&random_nonzero(spec, rng))?)?;
        }
        Ok(v)
    }

    /// I: in G[X] a random tail of the arena, in F[X] a random n_k.
    pub struct RandomI<R> {
        pub rng: R,
    }

    impl<R: RngCore> StrategyI for RandomI<R> {
        fn move_i(&mut self, pos: &Position) -> Result<MoveI> {
            let base = pos.last_top().map_or(0, |t| t + 1);
            let n = base + self.rng.gen_range(0..6);
            Ok(match pos.kind {
                GameKind::Gowers => MoveI::Subspace(if self.rng.gen_bool(0.3) {
                    pos.arena.clone()
                } else {
                    Preset::tail(pos.arena.clone(), n)
                }),
                GameKind::Asymptotic => MoveI::Integer(n),
            })
        }
    }

    /// II: a random combination of up to three consecutive legal rows.
    pub struct RandomII<R> {
        pub rng: R,
        cache: StreamCache,
    }

    impl<R> RandomII<R> {
        pub fn new(rng: R) -> Self {
            RandomII {
                rng,
                cache: StreamCache::default(),
            }
        }
    }

    impl<R: RngCore> StrategyII for RandomII<R> {
        fn move_ii(&mut self, pos: &Position, offer: &MoveI) -> Result<SparseVector> {
            let source = match offer {
                MoveI::Subspace(p) => p,
                MoveI::Integer(_) => pos.arena,
            };
            let s = self.cache.get(source, pos.spec)?;
            random_combination(s, pos.lower_bound(offer), &mut self.rng)
        }
    }
}
