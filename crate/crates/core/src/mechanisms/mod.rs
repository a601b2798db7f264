//! Protection decisions: one interface over the fixed baselines, the
//! view-aware weighting, the neural, ant-colony and fuzzy mechanisms.

mod header;
mod viewfec;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use header::{decode_header, encode_header, HeaderError, HopHeader, HEADER_LEN, HEADER_VERSION};
pub use viewfec::{average_redundancy, rank_in_gop, viewfec_frame_ratio, viewfec_gop_redundancy, ViewFecParams};

use crate::aco::{aco_run, AcoContext, AcoError, AcoParams, ConstructionGraph, SizeClass};
use crate::channel::ErrorClass;
use crate::fec::ProtectionDecision;
use crate::fuzzy::builtin::{self, REDUNDANCY_UNIVERSE};
use crate::fuzzy::{FuzzyEngine, FuzzyError, HfsGraph};
use crate::motion::{frame_temporal_intensity, mv_ratio, score_to_class, IntensityClass, NormalizedSizes};
use crate::rnn::{RnnError, RnnModel};
use crate::video::{FrameRecord, FrameType, GopLayout, VideoTrace};

#[derive(Debug, Error, PartialEq)]
pub enum MechanismError {
    #[error("mechanism needs the {0} engine")]
    MissingEngine(&'static str),
    #[error("context lacks {0}")]
    IncompleteContext(&'static str),
    #[error("{0} has no per-hop network layer")]
    NotHierarchical(MechanismKind),
    #[error("invalid parameter: {0}")]
    BadParam(String),
    #[error("unknown mechanism {0:?}")]
    UnknownKind(String),
    #[error("nothing to average")]
    Empty,
    #[error("frame {index} outside trace of {len} frames")]
    FrameOutOfRange { index: usize, len: usize },
    #[error(transparent)]
    Header(#[from] HeaderError),
    #[error(transparent)]
    Fuzzy(#[from] FuzzyError),
    #[error(transparent)]
    Aco(#[from] AcoError),
    #[error(transparent)]
    Rnn(#[from] RnnError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum MechanismKind {
    NoFec,
    /// Same ratio on every I- and P-frame.
    VaEEP(f64),
    /// Separate ratios for I- and P-frames.
    VaUEP(f64, f64),
    ViewFec,
    NeuralFec,
    PredictiveAnts,
    UavFec,
    MintFec,
    Corvette,
    Shield,
}

pub const VAEEP_DEFAULT: f64 = 0.38;
pub const VAUEP_DEFAULT: (f64, f64) = (0.38, 0.25);

impl MechanismKind {
    pub fn name(&self) -> &'static str {
        match self {
            MechanismKind::NoFec => "NoFec",
            MechanismKind::VaEEP(_) => "VaEEP",
            MechanismKind::VaUEP(..) => "VaUEP",
            MechanismKind::ViewFec => "ViewFec",
            MechanismKind::NeuralFec => "NeuralFec",
            MechanismKind::PredictiveAnts => "PredictiveAnts",
            MechanismKind::UavFec => "UavFec",
            MechanismKind::MintFec => "MintFec",
            MechanismKind::Corvette => "Corvette",
            MechanismKind::Shield => "Shield",
        }
    }

    pub fn validate(&self) -> Result<(), MechanismError> {
        let check = |r: f64| {
            if (0.0..=1.0).contains(&r) {
                Ok(())
            } else {
                Err(MechanismError::BadParam(format!("baseline ratio {r} outside [0, 1]")))
            }
        };
        match *self {
            MechanismKind::VaEEP(r) => check(r),
            MechanismKind::VaUEP(i, p) => check(i).and(check(p)),
            _ => Ok(()),
        }
    }
}

/// `VaEEP(0.38)` and `VaUEP(0.38;0.25)`; parameters use `;` so labels stay
/// single CSV fields.
impl fmt::Display for MechanismKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MechanismKind::VaEEP(r) => write!(f, "VaEEP({r})"),
            MechanismKind::VaUEP(i, p) => write!(f, "VaUEP({i};{p})"),
            other => f.write_str(other.name()),
        }
    }
}

impl FromStr for MechanismKind {
    type Err = MechanismError;

    /// Accepts names case-insensitively, with optional parameters in
    /// parentheses separated by `;` or `,`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let unknown = || MechanismError::UnknownKind(s.to_string());
        let s = s.trim();
        let (name, args) = match s.find('(') {
            Some(i) => {
                let inner = s[i + 1..].strip_suffix(')').ok_or_else(unknown)?;
                let args = inner
                    .split([';', ','])
                    .map(|a| a.trim().parse::<f64>().map_err(|_| unknown()))
                    .collect::<Result<Vec<_>, _>>()?;
                (&s[..i], args)
            }
            None => (s, Vec::new()),
        };
        let kind = match (name.to_ascii_lowercase().as_str(), args.as_slice()) {
            ("vaeep", []) => MechanismKind::VaEEP(VAEEP_DEFAULT),
            ("vaeep", [r]) => MechanismKind::VaEEP(*r),
            ("vauep", []) => MechanismKind::VaUEP(VAUEP_DEFAULT.0, VAUEP_DEFAULT.1),
            ("vauep", [i, p]) => MechanismKind::VaUEP(*i, *p),
            (n, []) => match n {
                "nofec" => MechanismKind::NoFec,
                "viewfec" => MechanismKind::ViewFec,
                "neuralfec" => MechanismKind::NeuralFec,
                "predictiveants" => MechanismKind::PredictiveAnts,
                "uavfec" => MechanismKind::UavFec,
                "mintfec" => MechanismKind::MintFec,
                "corvette" => MechanismKind::Corvette,
                "shield" => MechanismKind::Shield,
                _ => return Err(unknown()),
            },
            _ => return Err(unknown()),
        };
        kind.validate()?;
        Ok(kind)
    }
}

impl TryFrom<String> for MechanismKind {
    type Error = MechanismError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<MechanismKind> for String {
    fn from(k: MechanismKind) -> String {
        k.to_string()
    }
}

/// Crisp network inputs of the fuzzy mechanisms.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NetInputs {
    /// Recent loss rate in percent.
    pub plr_pct: f64,
    /// Nodes per square kilometre.
    pub density_km2: Option<f64>,
    /// Distance to the next hop in metres.
    pub distance_m: Option<f64>,
    pub snr_db: Option<f64>,
}

/// Everything a decision may read about the frame, its video and the
/// network.
#[derive(Debug, Clone, PartialEq)]
pub struct MechanismContext {
    pub frame: FrameRecord,
    pub gop: GopLayout,
    pub intensity: IntensityClass,
    pub spatial: IntensityClass,
    pub sizes: NormalizedSizes,
    /// Mean temporal intensity of the predicted frames of the frame's GoP.
    pub temporal_intensity: f64,
    /// Mean total motion-vector length of the GoP's predicted frames.
    pub motion_distance: f64,
    /// Mean vector count over length of the GoP's predicted frames.
    pub gop_mv_ratio: Option<f64>,
    pub net: NetInputs,
    pub predicted_error: Option<ErrorClass>,
}

impl MechanismContext {
    /// Builds the context of frame `index`, aggregating motion over the
    /// predicted frames of its GoP.
    pub fn from_trace(
        trace: &VideoTrace,
        sizes: &NormalizedSizes,
        index: usize,
        intensity: IntensityClass,
        spatial: IntensityClass,
        net: NetInputs,
    ) -> Result<Self, MechanismError> {
        let len = trace.frames.len();
        let frame = trace
            .frames
            .get(index)
            .ok_or(MechanismError::FrameOutOfRange { index, len })?;
        let start = trace.gop.gop_start(index);
        let end = (start + trace.gop.length()).min(len);
        let predicted: Vec<&FrameRecord> = trace.frames[start..end].iter().filter(|f| f.mv_count > 0).collect();
        let n = predicted.len() as f64;
        let mean = |g: &dyn Fn(&FrameRecord) -> f64| {
            if predicted.is_empty() {
                0.0
            } else {
                predicted.iter().map(|f| g(f)).sum::<f64>() / n
            }
        };
        let ratios: Vec<f64> = predicted.iter().filter_map(|f| mv_ratio(f).ok()).collect();
        Ok(Self {
            frame: frame.clone(),
            gop: trace.gop,
            intensity,
            spatial,
            sizes: *sizes,
            temporal_intensity: mean(&|f| frame_temporal_intensity(f).0),
            motion_distance: mean(&|f| f.mv_total_distance),
            gop_mv_ratio: (!ratios.is_empty()).then(|| ratios.iter().sum::<f64>() / ratios.len() as f64),
            net,
            predicted_error: None,
        })
    }

    /// Size of the frame relative to the mean of its type.
    pub fn size_class(&self) -> SizeClass {
        let mean = match self.frame.kind {
            FrameType::I => self.sizes.mu_i,
            FrameType::P => self.sizes.mu_p,
            FrameType::B => self.sizes.mu_b,
        };
        size_class(self.frame.size_bytes as f64, mean)
    }

    /// Temporal class carried in the hop header.
    pub fn temporal_class(&self) -> IntensityClass {
        builtin::temporal_intensity()
            .best_term(self.temporal_intensity)
            .and_then(IntensityClass::from_severity)
            .unwrap_or(if self.temporal_intensity > 0.0 {
                IntensityClass::High
            } else {
                IntensityClass::Low
            })
    }

    pub fn hop_header(&self) -> HopHeader {
        HopHeader {
            frame_type: self.frame.kind,
            motion_class: self.intensity,
            spatial_class: self.spatial,
            temporal_class: self.temporal_class(),
            nhat: [self.sizes.nhat_i, self.sizes.nhat_p, self.sizes.nhat_b],
        }
    }
}

/// Small below 90 % of the type mean, Large above 110 %.
pub fn size_class(size: f64, type_mean: f64) -> SizeClass {
    if type_mean <= 0.0 {
        return SizeClass::Medium;
    }
    let r = size / type_mean;
    if r < 0.9 {
        SizeClass::Small
    } else if r > 1.1 {
        SizeClass::Large
    } else {
        SizeClass::Medium
    }
}

/// Spatial complexity from the mean I-frame size per macroblock; the cuts
/// sit between the synthetic low, medium and high motion profiles.
pub fn spatial_class(mean_i_bytes: f64, mb_count: u64) -> IntensityClass {
    let per_mb = mean_i_bytes / mb_count.max(1) as f64;
    if per_mb < 75.0 {
        IntensityClass::Low
    } else if per_mb < 86.0 {
        IntensityClass::Medium
    } else {
        IntensityClass::High
    }
}

/// Read-only decision engines shared by every decision of a run.
#[derive(Debug, Clone)]
pub struct DecisionEngines {
    pub viewfec: ViewFecParams,
    pub uavfec: FuzzyEngine,
    pub mintfec: FuzzyEngine,
    pub corvette: HfsGraph,
    pub shield: HfsGraph,
    /// Scores frames from (frame type, size, vector ratio).
    pub neural: Option<RnnModel>,
    /// Optional motion classifier of the ant mechanism, fed (size, frame
    /// type, vector count, vector length); the context class is used when
    /// absent.
    pub ants_motion: Option<RnnModel>,
    pub aco_graph: ConstructionGraph,
    pub aco_params: AcoParams,
}

impl DecisionEngines {
    pub fn builtin() -> Self {
        Self {
            viewfec: ViewFecParams::default(),
            uavfec: builtin::uavfec_engine(),
            mintfec: builtin::mintfec_engine(),
            corvette: builtin::corvette_graph(),
            shield: builtin::shield_graph(),
            neural: None,
            ants_motion: None,
            aco_graph: ConstructionGraph::new(),
            aco_params: AcoParams::default(),
        }
    }

    pub fn with_neural(mut self, model: RnnModel) -> Self {
        self.neural = Some(model);
        self
    }
}

fn map_score(score: f64) -> f64 {
    let (lo, hi) = REDUNDANCY_UNIVERSE;
    lo + (hi - lo) * score.clamp(0.0, 1.0)
}

fn require<T: Copy>(v: Option<T>, what: &'static str) -> Result<T, MechanismError> {
    v.ok_or(MechanismError::IncompleteContext(what))
}

/// External inputs of a hierarchy given the video inputs.
fn hfs_externals(
    kind: MechanismKind,
    net: &NetInputs,
    frame_type: FrameType,
    spatial: IntensityClass,
    temporal_intensity: f64,
) -> Result<Vec<(&'static str, f64)>, MechanismError> {
    let mut ext = vec![
        ("PacketLossRate", net.plr_pct),
        ("Density", require(net.density_km2, "density")?),
        ("Distance", require(net.distance_m, "distance")?),
        ("FrameType", f64::from(frame_type.code())),
        ("SpatialClass", spatial.severity() as f64),
        ("TemporalIntensity", temporal_intensity),
    ];
    match kind {
        MechanismKind::Corvette => {}
        MechanismKind::Shield => ext.push(("SNR", require(net.snr_db, "snr")?)),
        other => return Err(MechanismError::NotHierarchical(other)),
    }
    Ok(ext)
}

fn hierarchy(kind: MechanismKind, engines: &DecisionEngines) -> &HfsGraph {
    if kind == MechanismKind::Shield {
        &engines.shield
    } else {
        &engines.corvette
    }
}

/// Parity ratio for one frame. B-frames are never protected.
pub fn decide<R: Rng + ?Sized>(
    kind: MechanismKind,
    ctx: &MechanismContext,
    engines: &DecisionEngines,
    rng: &mut R,
) -> Result<ProtectionDecision, MechanismError> {
    kind.validate()?;
    let f = &ctx.frame;
    if f.kind == FrameType::B {
        return Ok(ProtectionDecision::none(f.index));
    }
    let is_i = f.kind == FrameType::I;
    let ratio = match kind {
        MechanismKind::NoFec => return Ok(ProtectionDecision::none(f.index)),
        MechanismKind::VaEEP(r) => r,
        MechanismKind::VaUEP(ri, rp) => {
            if is_i {
                ri
            } else {
                rp
            }
        }
        MechanismKind::ViewFec => {
            let p = &engines.viewfec;
            p.validate()?;
            let rank = rank_in_gop(f.index % ctx.gop.length(), &ctx.gop);
            viewfec_frame_ratio(f.kind, rank, p, p.weight(ctx.intensity))
        }
        MechanismKind::NeuralFec => {
            let model = engines.neural.as_ref().ok_or(MechanismError::MissingEngine("neural"))?;
            let ratio_feature = match mv_ratio(f) {
                Ok(r) => r,
                Err(_) => require(ctx.gop_mv_ratio, "GoP motion-vector ratio")?,
            };
            map_score(model.eval(&[f64::from(f.kind.code()), f.size_bytes as f64, ratio_feature])?)
        }
        MechanismKind::PredictiveAnts => {
            let error = require(ctx.predicted_error, "predicted error class")?;
            let motion = match &engines.ants_motion {
                Some(m) => {
                    let x = [
                        f.size_bytes as f64,
                        f64::from(f.kind.code()),
                        f.mv_count as f64,
                        f.mv_total_distance,
                    ];
                    score_to_class(m.eval(&x)?, (1.0 / 3.0, 2.0 / 3.0))
                }
                None => ctx.intensity,
            };
            let actx = AcoContext {
                motion,
                frame: f.kind,
                size: ctx.size_class(),
                error,
            };
            aco_run(&engines.aco_graph, &actx, &engines.aco_params, rng)?.ratio
        }
        MechanismKind::UavFec => {
            engines
                .uavfec
                .infer(&[("Motion", ctx.motion_distance), ("PacketLossRate", ctx.net.plr_pct)])?
                .value
        }
        MechanismKind::MintFec => {
            let s = &ctx.sizes;
            engines
                .mintfec
                .infer(&[
                    ("FrameType", f64::from(f.kind.code())),
                    ("Isz", s.nhat_i),
                    ("Psz", s.nhat_p),
                    ("Bsz", s.nhat_b),
                    ("TemporalIntensity", ctx.temporal_intensity),
                    ("PacketLossRate", ctx.net.plr_pct),
                ])?
                .value
        }
        MechanismKind::Corvette | MechanismKind::Shield => {
            let ext = hfs_externals(kind, &ctx.net, f.kind, ctx.spatial, ctx.temporal_intensity)?;
            hierarchy(kind, engines).infer(&ext)?
        }
    };
    Ok(ProtectionDecision::with_ratio(f.index, ratio))
}

/// Re-evaluates a hierarchical mechanism at a relay from the header's
/// video classes and the relay's own network inputs. The temporal class
/// enters at its term's core.
pub fn per_hop_adjust(
    kind: MechanismKind,
    header: &HopHeader,
    net: &NetInputs,
    engines: &DecisionEngines,
    frame_index: usize,
) -> Result<ProtectionDecision, MechanismError> {
    if !matches!(kind, MechanismKind::Corvette | MechanismKind::Shield) {
        return Err(MechanismError::NotHierarchical(kind));
    }
    if header.frame_type == FrameType::B {
        return Ok(ProtectionDecision::none(frame_index));
    }
    let ti = builtin::temporal_intensity().terms[header.temporal_class.severity()]
        .shape
        .core();
    let ext = hfs_externals(kind, net, header.frame_type, header.spatial_class, ti)?;
    Ok(ProtectionDecision::with_ratio(
        frame_index,
        hierarchy(kind, engines).infer(&ext)?,
    ))
}

/// Decodes a received header and adjusts.
pub fn per_hop_adjust_bytes(
    kind: MechanismKind,
    bytes: &[u8],
    net: &NetInputs,
    engines: &DecisionEngines,
    frame_index: usize,
) -> Result<ProtectionDecision, MechanismError> {
    per_hop_adjust(kind, &HopHeader::decode(bytes)?, net, engines, frame_index)
}
