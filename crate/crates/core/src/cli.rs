//! Command-line front end. Every command writes one JSON document (stdout or
//! `--out`) and, when `--manifest` is given or `--out` is used, a run
//! manifest with SHA-256 digests of the inputs and outputs.
//!
//! Exit codes: 0 success, 1 a claim failed to verify or a construction
//! failed, 2 malformed input or usage.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::echelon::{intersect, rref, sum_space};
use crate::error::{Error, Result};
use crate::extension::extend_bound;
use crate::field::FieldSpec;
use crate::fin::{bga_hypotheses, fin_ad_atoms, fin_ad_report, fu_enum, lift_supp, FinBlockSeq};
use crate::games::{
    fuzz::{RandomI, RandomII},
    play, replay_validate, strat_i_into_h, strat_ii_first_element, strat_pair_into_abar, ArenaOffer,
    FirstRow, GameKind, Ladder, StrategyI, StrategyII, TranscriptRepr,
};
use crate::madlab::{
    diagonalize_under, dominating_table, in_h, verify_h, verify_witness, witness_nonmax_countable,
    witness_nonmax_finite, ADFamily, FamilyFile, HCertificate, HCertificateRepr, Witness,
    DEFAULT_CERT_DEPTH,
};
use crate::posets::{
    map_add_member, map_extend, map_leq, q_add_pair, q_extend_level, q_leq, MAPCondition,
    MAPConditionRepr, QCondition, QConditionRepr,
};
use crate::stream::Preset;
use crate::vector::{SparseVector, VectorRepr};

#[derive(Parser, Debug)]
#[command(name = "madvec", version, about = "Almost disjoint families of subspaces, executably")]
struct Cli {
    /// gf<p> for a prime p, or q
    #[arg(long, global = true, default_value = "gf2")]
    field: FieldSpec,
    /// Write the result here instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Write the run manifest here (default: <out>.manifest.json when --out is set)
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Reduced echelon basis of a list of vectors
    Rref {
        #[arg(long)]
        input: PathBuf,
    },
    /// Intersection (or sum) of two spans
    Intersect {
        #[arg(long)]
        left: PathBuf,
        #[arg(long)]
        right: PathBuf,
        #[arg(long)]
        sum: bool,
    },
    /// The extension bound of one family member at K
    ExtendBound {
        #[arg(long)]
        family: PathBuf,
        #[arg(long)]
        member: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = DEFAULT_CERT_DEPTH)]
        depth: usize,
    },
    /// Non-maximality and H(A) witnesses
    Witness {
        #[command(subcommand)]
        command: WitnessCommand,
    },
    /// Dominated diagonalization against a family
    Diagonalize {
        #[arg(long)]
        family: PathBuf,
        #[arg(long)]
        len: usize,
        #[arg(long, default_value_t = DEFAULT_CERT_DEPTH)]
        depth: usize,
        /// Length of the dominating table (default: grown until it suffices)
        #[arg(long)]
        upto: Option<usize>,
    },
    /// Finite unions and the support bridge
    Fin {
        #[command(subcommand)]
        command: FinCommand,
    },
    /// Game engine
    Game {
        #[command(subcommand)]
        command: GameCommand,
    },
    /// Forcing conditions
    Poset {
        #[command(subcommand)]
        command: PosetCommand,
    },
    /// Re-check an artifact
    Verify {
        #[arg(long)]
        witness: Option<PathBuf>,
        #[arg(long)]
        transcript: Option<PathBuf>,
        #[arg(long)]
        certificate: Option<PathBuf>,
        #[arg(long)]
        condition: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
enum WitnessCommand {
    /// Block sequence whose span misses every member
    Nonmax {
        #[arg(long)]
        family: PathBuf,
        #[arg(long)]
        len: usize,
        #[arg(long, default_value_t = DEFAULT_CERT_DEPTH)]
        depth: usize,
    },
    /// x_n in member n with line intersections
    Countable {
        #[arg(long)]
        family: PathBuf,
        #[arg(long)]
        len: usize,
        #[arg(long, default_value_t = DEFAULT_CERT_DEPTH)]
        depth: usize,
    },
    /// H(A) membership evidence for a block sequence
    H {
        #[arg(long)]
        family: PathBuf,
        #[arg(long)]
        xs: PathBuf,
        #[arg(long, default_value_t = 3)]
        h_depth: usize,
        #[arg(long, default_value_t = DEFAULT_CERT_DEPTH)]
        depth: usize,
    },
}

#[derive(Subcommand, Debug)]
enum FinCommand {
    /// Finite unions of the first blocks
    Fu {
        #[arg(long)]
        seq: PathBuf,
        #[arg(long)]
        upto: usize,
    },
    /// Common finite unions below a cutoff
    Ad {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        cutoff: usize,
    },
    /// Lift a block sequence of sets to vectors of a span
    Lift {
        #[arg(long)]
        xs: PathBuf,
        #[arg(long)]
        blocks: PathBuf,
    },
    /// Singleton-set statistics for a list of block sequences
    Bga {
        #[arg(long)]
        seqs: PathBuf,
        #[arg(long)]
        depth: usize,
    },
}

#[derive(Subcommand, Debug)]
enum GameCommand {
    /// Play a truncated game
    Play {
        #[arg(long, value_parser = ["gowers", "asymptotic"])]
        kind: String,
        #[arg(long)]
        arena: PathBuf,
        /// arena | ladder | into-h | pair-abar | random
        #[arg(long)]
        strat_i: String,
        /// first-row | first-element | pair-abar | random
        #[arg(long)]
        strat_ii: String,
        #[arg(long)]
        rounds: usize,
        #[arg(long)]
        family: Option<PathBuf>,
        #[arg(long)]
        member: Option<usize>,
        /// Intersection dimension a member must show to be used by a strategy
        #[arg(long, default_value_t = 3)]
        depth: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Subcommand, Debug)]
enum PosetCommand {
    /// Add a level above --min
    QExtend {
        #[arg(long)]
        condition: PathBuf,
        #[arg(long)]
        min: usize,
    },
    /// Add a labelled pair
    QAdd {
        #[arg(long)]
        condition: PathBuf,
        #[arg(long)]
        label: String,
        #[arg(long)]
        beta: usize,
    },
    /// Extend s by one vector
    MapExtend {
        #[arg(long)]
        condition: PathBuf,
        #[arg(long)]
        family: PathBuf,
        #[arg(long, default_value_t = DEFAULT_CERT_DEPTH)]
        depth: usize,
    },
    /// Add a member to F
    MapAdd {
        #[arg(long)]
        condition: PathBuf,
        #[arg(long)]
        family: PathBuf,
        #[arg(long)]
        member: usize,
        #[arg(long, default_value_t = DEFAULT_CERT_DEPTH)]
        depth: usize,
    },
}

/// H(A) evidence together with what it is evidence about.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HArtifact {
    pub field: FieldSpec,
    pub members: Vec<Preset>,
    pub certs: Vec<crate::extension::ADCertificate>,
    pub xs: Vec<VectorRepr>,
    pub certificate: HCertificateRepr,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepOp {
    QExtend,
    QAdd,
    MapExtend,
    MapAdd,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QStep {
    pub op: StepOp,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<usize>,
    pub parent: QConditionRepr,
    pub result: QConditionRepr,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapStep {
    pub op: StepOp,
    pub family: FamilyFile,
    pub parent: MAPConditionRepr,
    pub result: MAPConditionRepr,
}

/// Everything `verify` accepts, tagged by `kind`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Artifact {
    Witness(Witness),
    Transcript(TranscriptRepr),
    Family(FamilyFile),
    HCertificate(HArtifact),
    QStep(QStep),
    MapStep(MapStep),
}

impl Artifact {
    fn kind(&self) -> &'static str {
        match self {
            Artifact::Witness(_) => "witness",
            Artifact::Transcript(_) => "transcript",
            Artifact::Family(_) => "family",
            Artifact::HCertificate(_) => "h-certificate",
            Artifact::QStep(_) => "q-step",
            Artifact::MapStep(_) => "map-step",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

/// Identifies a run by its arguments and the digests of what it read and
/// wrote. Carries no timestamps, so identical runs give identical manifests.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: Vec<String>,
    pub field: FieldSpec,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

struct Inputs {
    read: Vec<FileDigest>,
}

impl Inputs {
    fn bytes(&mut self, path: &Path) -> Result<Vec<u8>> {
        let bytes = std::fs::read(path)?;
        self.read.push(FileDigest {
            path: path.display().to_string(),
            sha256: sha256_hex(&bytes),
        });
        Ok(bytes)
    }

    fn json<T: for<'de> Deserialize<'de>>(&mut self, path: &Path) -> Result<T> {
        Ok(serde_json::from_slice(&self.bytes(path)?)?)
    }

    fn vectors(&mut self, path: &Path, spec: FieldSpec) -> Result<Vec<SparseVector>> {
        let reprs: Vec<VectorRepr> = self.json(path)?;
        reprs.iter().map(|r| r.decode(spec)).collect()
    }

    fn family(&mut self, path: &Path, depth: usize) -> Result<ADFamily> {
        ADFamily::from_file(self.json(path)?, depth)
    }
}

fn vec_json(xs: &[SparseVector]) -> Vec<VectorRepr> {
    xs.iter().map(SparseVector::to_repr).collect()
}

fn artifact_json(a: &Artifact) -> Result<Value> {
    Ok(serde_json::to_value(a)?)
}

fn strategy_i(
    name: &str,
    fam: Option<&ADFamily>,
    member: Option<usize>,
    arena: &Preset,
    depth: usize,
    seed: u64,
) -> Result<Box<dyn StrategyI>> {
    let need_fam = || fam.ok_or_else(|| Error::Strategy { round: 0, why: format!("strategy {name} needs --family") });
    Ok(match name {
        "arena" => Box::new(ArenaOffer),
        "ladder" => Box::new(Ladder),
        "into-h" => Box::new(strat_i_into_h(need_fam()?, arena, depth)?),
        "pair-abar" => {
            let m = member.ok_or_else(|| Error::Strategy { round: 0, why: "pair-abar needs --member".into() })?;
            Box::new(strat_pair_into_abar(m, need_fam()?, arena, depth)?.0)
        }
        "random" => Box::new(RandomI { rng: ChaCha8Rng::seed_from_u64(seed) }),
        other => return Err(Error::MalformedPreset(format!("unknown strategy for I: {other}"))),
    })
}

fn strategy_ii(
    name: &str,
    fam: Option<&ADFamily>,
    member: Option<usize>,
    arena: &Preset,
    depth: usize,
    seed: u64,
) -> Result<Box<dyn StrategyII>> {
    let need_fam = || fam.ok_or_else(|| Error::Strategy { round: 0, why: format!("strategy {name} needs --family") });
    Ok(match name {
        "first-row" => Box::new(FirstRow::default()),
        "first-element" => Box::new(strat_ii_first_element(need_fam()?, arena, depth)?),
        "pair-abar" => {
            let m = member.ok_or_else(|| Error::Strategy { round: 0, why: "pair-abar needs --member".into() })?;
            Box::new(strat_pair_into_abar(m, need_fam()?, arena, depth)?.1)
        }
        "random" => Box::new(RandomII::new(ChaCha8Rng::seed_from_u64(seed.wrapping_add(1)))),
        other => return Err(Error::MalformedPreset(format!("unknown strategy for II: {other}"))),
    })
}

fn read_q(inputs: &mut Inputs, path: &Path, spec: FieldSpec) -> Result<QCondition> {
    let value: Value = inputs.json(path)?;
    let repr: QConditionRepr = if value.get("kind").is_some() {
        match serde_json::from_value::<Artifact>(value)? {
            Artifact::QStep(step) => step.result,
            other => return Err(Error::MalformedPreset(format!("expected a condition, found {}", other.kind()))),
        }
    } else {
        serde_json::from_value(value)?
    };
    QCondition::from_repr(&repr, spec)
}

fn read_map(inputs: &mut Inputs, path: &Path) -> Result<MAPCondition> {
    let value: Value = inputs.json(path)?;
    let repr: MAPConditionRepr = if value.get("kind").is_some() {
        match serde_json::from_value::<Artifact>(value)? {
            Artifact::MapStep(step) => step.result,
            other => return Err(Error::MalformedPreset(format!("expected a condition, found {}", other.kind()))),
        }
    } else {
        serde_json::from_value(value)?
    };
    MAPCondition::from_repr(&repr)
}

fn execute(cli: &Cli, inputs: &mut Inputs) -> Result<Value> {
    let spec = cli.field;
    match &cli.command {
        Command::Rref { input } => {
            let xs = inputs.vectors(input, spec)?;
            let b = rref(spec, &xs)?;
            Ok(json!({"field": spec, "basis": vec_json(b.rows())}))
        }
        Command::Intersect { left, right, sum } => {
            let l = rref(spec, &inputs.vectors(left, spec)?)?;
            let r = rref(spec, &inputs.vectors(right, spec)?)?;
            let b = if *sum { sum_space(&l, &r)? } else { intersect(&l, &r)? };
            Ok(json!({"field": spec, "basis": vec_json(b.rows())}))
        }
        Command::ExtendBound { family, member, k, depth } => {
            let fam = inputs.family(family, *depth)?;
            let m = extend_bound(&mut fam.stream(*member)?, *k)?;
            Ok(json!({"M": m}))
        }
        Command::Witness { command } => match command {
            WitnessCommand::Nonmax { family, len, depth } => {
                let fam = inputs.family(family, *depth)?;
                artifact_json(&Artifact::Witness(witness_nonmax_finite(&fam, *len)?))
            }
            WitnessCommand::Countable { family, len, depth } => {
                let fam = inputs.family(family, *depth)?;
                artifact_json(&Artifact::Witness(witness_nonmax_countable(&fam, *len)?))
            }
            WitnessCommand::H { family, xs, h_depth, depth } => {
                let fam = inputs.family(family, *depth)?;
                let xs = inputs.vectors(xs, fam.spec())?;
                crate::vector::check_block_sequence(&xs)?;
                let cert = in_h(&xs, &fam, *h_depth)?;
                let file = fam.to_file();
                artifact_json(&Artifact::HCertificate(HArtifact {
                    field: file.field,
                    members: file.members,
                    certs: file.certs,
                    xs: vec_json(&xs),
                    certificate: cert.to_repr(),
                }))
            }
        },
        Command::Diagonalize { family, len, depth, upto } => {
            let fam = inputs.family(family, *depth)?;
            let w = match upto {
                Some(n) => diagonalize_under(&fam, &dominating_table(&fam, *n)?, *len)?,
                None => {
                    let mut n = 64;
                    loop {
                        match diagonalize_under(&fam, &dominating_table(&fam, n)?, *len) {
                            Err(Error::TableTooShort { .. }) if n < 1 << 20 => n *= 2,
                            other => break other?,
                        }
                    }
                }
            };
            artifact_json(&Artifact::Witness(w))
        }
        Command::Fin { command } => match command {
            FinCommand::Fu { seq, upto } => {
                let a: FinBlockSeq = inputs.json(seq)?;
                Ok(json!({"fu": fu_enum(&a, *upto)}))
            }
            FinCommand::Ad { a, b, cutoff } => {
                let a: FinBlockSeq = inputs.json(a)?;
                let b: FinBlockSeq = inputs.json(b)?;
                Ok(json!({
                    "cutoff": cutoff,
                    "atoms": fin_ad_atoms(&a, &b, *cutoff),
                    "common": fin_ad_report(&a, &b, *cutoff),
                }))
            }
            FinCommand::Lift { xs, blocks } => {
                let xs = inputs.vectors(xs, spec)?;
                let a: FinBlockSeq = inputs.json(blocks)?;
                Ok(json!({"field": spec, "ys": vec_json(&lift_supp(&xs, &a)?)}))
            }
            FinCommand::Bga { seqs, depth } => {
                let seqs: Vec<FinBlockSeq> = inputs.json(seqs)?;
                Ok(serde_json::to_value(bga_hypotheses(&seqs, *depth))?)
            }
        },
        Command::Game { command } => match command {
            GameCommand::Play { kind, arena, strat_i, strat_ii, rounds, family, member, depth, seed } => {
                let kind = if kind == "gowers" { GameKind::Gowers } else { GameKind::Asymptotic };
                let arena: Preset = Preset::from_json(&inputs.json(arena)?)?;
                let fam = match family {
                    Some(f) => Some(inputs.family(f, DEFAULT_CERT_DEPTH)?),
                    None => None,
                };
                let spec = fam.as_ref().map_or(spec, ADFamily::spec);
                let mut si = strategy_i(strat_i, fam.as_ref(), *member, &arena, *depth, *seed)?;
                let mut sii = strategy_ii(strat_ii, fam.as_ref(), *member, &arena, *depth, *seed)?;
                let t = play(kind, &arena, spec, si.as_mut(), sii.as_mut(), *rounds)?;
                artifact_json(&Artifact::Transcript(t.to_repr()))
            }
        },
        Command::Poset { command } => match command {
            PosetCommand::QExtend { condition, min } => {
                let p = read_q(inputs, condition, spec)?;
                let q = q_extend_level(&p, *min)?;
                artifact_json(&Artifact::QStep(QStep { op: StepOp::QExtend, min: Some(*min), parent: p.to_repr(), result: q.to_repr() }))
            }
            PosetCommand::QAdd { condition, label, beta } => {
                let p = read_q(inputs, condition, spec)?;
                let q = q_add_pair(&p, (label.clone(), *beta))?;
                artifact_json(&Artifact::QStep(QStep { op: StepOp::QAdd, min: None, parent: p.to_repr(), result: q.to_repr() }))
            }
            PosetCommand::MapExtend { condition, family, depth } => {
                let fam = inputs.family(family, *depth)?;
                let p = read_map(inputs, condition)?;
                let q = map_extend(&p, &fam)?;
                let spec = fam.spec();
                artifact_json(&Artifact::MapStep(MapStep { op: StepOp::MapExtend, family: fam.to_file(), parent: p.to_repr(spec), result: q.to_repr(spec) }))
            }
            PosetCommand::MapAdd { condition, family, member, depth } => {
                let fam = inputs.family(family, *depth)?;
                let p = read_map(inputs, condition)?;
                let q = map_add_member(&p, *member, &fam)?;
                let spec = fam.spec();
                artifact_json(&Artifact::MapStep(MapStep { op: StepOp::MapAdd, family: fam.to_file(), parent: p.to_repr(spec), result: q.to_repr(spec) }))
            }
        },
        Command::Verify { witness, transcript, certificate, condition } => {
            let given: Vec<(&str, &PathBuf)> = [
                ("witness", witness),
                ("transcript", transcript),
                ("certificate", certificate),
                ("condition", condition),
            ]
            .into_iter()
            .filter_map(|(k, p)| p.as_ref().map(|p| (k, p)))
            .collect();
            if given.is_empty() {
                return Err(Error::MalformedPreset("verify needs an artifact file".into()));
            }
            let mut report = Vec::new();
            for (flag, path) in given {
                let artifact: Artifact = inputs.json(path)?;
                let expected: &[&str] = match flag {
                    "witness" => &["witness"],
                    "transcript" => &["transcript"],
                    "certificate" => &["family", "h-certificate"],
                    _ => &["q-step", "map-step"],
                };
                if !expected.contains(&artifact.kind()) {
                    return Err(Error::MalformedPreset(format!("--{flag} got a {} artifact", artifact.kind())));
                }
                verify_artifact(&artifact)?;
                report.push(json!({"path": path.display().to_string(), "kind": artifact.kind(), "verified": true}));
            }
            Ok(json!({"results": report}))
        }
    }
}

/// Re-checks an artifact from its own contents.
pub fn verify_artifact(artifact: &Artifact) -> Result<()> {
    match artifact {
        Artifact::Witness(w) => verify_witness(w),
        Artifact::Transcript(t) => replay_validate(t).map(|_| ()),
        Artifact::Family(f) => ADFamily::with_certs(f.field, f.members.clone(), f.certs.clone()).map(|_| ()),
        Artifact::HCertificate(h) => {
            let fam = ADFamily::with_certs(h.field, h.members.clone(), h.certs.clone())?;
            let xs: Vec<SparseVector> = h.xs.iter().map(|v| v.decode(h.field)).collect::<Result<_>>()?;
            crate::vector::check_block_sequence(&xs)?;
            verify_h(&HCertificate::from_repr(&h.certificate, h.field)?, &xs, &fam)
        }
        Artifact::QStep(step) => {
            let spec = step.parent.field.or(step.result.field).unwrap_or(FieldSpec::gf2());
            let p = QCondition::from_repr(&step.parent, spec)?;
            let q = QCondition::from_repr(&step.result, spec)?;
            if !q_leq(&q, &p)? {
                return Err(Error::Verification("result is not below parent".into()));
            }
            match step.op {
                StepOp::QExtend => {
                    let min = step.min.ok_or_else(|| Error::Verification("q-extend step without min".into()))?;
                    if q.n != p.n + 1 || q.rows.len() != p.rows.len() {
                        return Err(Error::Verification("q-extend must add exactly one level".into()));
                    }
                    if q.rows.values().any(|r| r[p.n].min_support() <= Some(min)) {
                        return Err(Error::Verification(format!("a new vector does not lie above {min}")));
                    }
                }
                StepOp::QAdd => {
                    if q.n != p.n || q.rows.len() != p.rows.len() + 1 {
                        return Err(Error::Verification("q-add must add exactly one pair".into()));
                    }
                }
                _ => return Err(Error::Verification("map operation in a q-step".into())),
            }
            Ok(())
        }
        Artifact::MapStep(step) => {
            let f = &step.family;
            let fam = ADFamily::with_certs(f.field, f.members.clone(), f.certs.clone())?;
            if step.parent.field != fam.spec() || step.result.field != fam.spec() {
                return Err(Error::mismatch(fam.spec(), step.result.field));
            }
            let p = MAPCondition::from_repr(&step.parent)?;
            let q = MAPCondition::from_repr(&step.result)?;
            if !map_leq(&q, &p, &fam)? {
                return Err(Error::Verification("result is not below parent".into()));
            }
            let ok = match step.op {
                StepOp::MapExtend => q.s.len() == p.s.len() + 1 && q.f == p.f,
                StepOp::MapAdd => q.s == p.s && q.f.len() == p.f.len() + 1,
                _ => false,
            };
            if !ok {
                return Err(Error::Verification(format!("result does not match a {:?} step", step.op)));
            }
            Ok(())
        }
    }
}

/// Runs the tool with explicit output streams; returns the exit code.
pub fn run_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { stdout.write_all(text.as_bytes()) } else { stderr.write_all(text.as_bytes()) };
            return code;
        }
    };
    let mut inputs = Inputs { read: Vec::new() };
    let value = match execute(&cli, &mut inputs) {
        Ok(v) => v,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return if e.is_malformed_input() { 2 } else { 1 };
        }
    };
    let mut text = serde_json::to_string_pretty(&value).expect("json value encodes");
    text.push('\n');
    let mut outputs = Vec::new();
    match &cli.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &text) {
                let _ = writeln!(stderr, "error: {e}");
                return 2;
            }
            outputs.push(FileDigest {
                path: path.display().to_string(),
                sha256: sha256_hex(text.as_bytes()),
            });
        }
        None => {
            let _ = stdout.write_all(text.as_bytes());
            outputs.push(FileDigest {
                path: "-".into(),
                sha256: sha256_hex(text.as_bytes()),
            });
        }
    }
    let manifest_path = cli.manifest.clone().or_else(|| {
        cli.out.as_ref().map(|p| {
            let mut s = p.clone().into_os_string();
            s.push(".manifest.json");
            PathBuf::from(s)
        })
    });
    if let Some(path) = manifest_path {
        let manifest = RunManifest {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: args.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect(),
            field: cli.field,
            inputs: inputs.read,
            outputs,
        };
        let mut m = serde_json::to_string_pretty(&manifest).expect("manifest encodes");
        m.push('\n');
        if let Err(e) = std::fs::write(&path, m) {
            let _ = writeln!(stderr, "error: {e}");
            return 2;
        }
    }
    0
}

/// Runs with the process's stdout and stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(args, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}
