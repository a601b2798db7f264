//! Scenario configuration, read from TOML.
//!
//! ```toml
//! seed = 42
//! repetitions = 3
//! mechanism = "VaEEP(0.38)"
//!
//! [trace]
//! synth = { gop_count = 5, motion = "Low" }   # or: file = "video.trace"
//!
//! [channel]
//! model = "simplified"                        # simplified | gilbert | replay
//! plr = 0.2
//! mean_burst = 2.0
//!
//! [network]
//! nodes = 40
//! side_m = 600.0
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use uepsim_core::channel::{GeParams, SimplifiedGeParams};
use uepsim_core::mechanisms::MechanismKind;
use uepsim_core::motion::IntensityClass;
use uepsim_core::video::GopLayout;

use crate::HarnessError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub seed: u64,
    #[serde(default = "one")]
    pub repetitions: usize,
    pub mechanism: MechanismKind,
    #[serde(default = "default_block_size")]
    pub block_size: usize,
    #[serde(default = "default_payload")]
    pub payload_bytes: usize,
    /// Packets over which the sender estimates the current loss rate.
    #[serde(default = "default_plr_window")]
    pub plr_window: usize,
    /// Packets of receiver feedback used to predict the next block's errors.
    #[serde(default = "default_feedback_window")]
    pub feedback_window: usize,
    pub trace: TraceConfig,
    pub channel: ChannelConfig,
    #[serde(default)]
    pub network: NetworkConfig,
}

fn one() -> usize {
    1
}
fn default_block_size() -> usize {
    uepsim_core::fec::DEFAULT_BLOCK_SIZE
}
fn default_payload() -> usize {
    1000
}
fn default_plr_window() -> usize {
    200
}
fn default_feedback_window() -> usize {
    1000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceConfig {
    pub file: Option<PathBuf>,
    pub synth: Option<SynthConfig>,
    /// Overrides the motion class derived from the trace.
    pub intensity: Option<IntensityClass>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    pub gop_count: usize,
    pub motion: IntensityClass,
    #[serde(default = "default_n")]
    pub n_ratio: usize,
    #[serde(default = "default_m")]
    pub m_ratio: usize,
    /// Defaults to the scenario seed.
    pub seed: Option<u64>,
}

fn default_n() -> usize {
    GopLayout::nineteen_two().n_ratio
}
fn default_m() -> usize {
    GopLayout::nineteen_two().m_ratio
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelModel {
    Simplified,
    Gilbert,
    Replay,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelConfig {
    pub model: ChannelModel,
    /// Target loss rate of the simplified model.
    pub plr: Option<f64>,
    #[serde(default = "default_burst")]
    pub mean_burst: f64,
    pub pg: Option<f64>,
    pub pb: Option<f64>,
    pub k: Option<f64>,
    pub r: Option<f64>,
    /// Loss trace file of the replay model.
    pub file: Option<PathBuf>,
}

fn default_burst() -> f64 {
    2.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HullMethod {
    Quick,
    Bfp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetworkConfig {
    /// `node_id,x,y[,snr_db]` file; synthetic placement when absent.
    pub positions: Option<PathBuf>,
    pub nodes: usize,
    pub side_m: f64,
    pub hull: HullMethod,
    pub strips: usize,
    pub distance_m: f64,
    /// Used when the positions carry no SNR.
    pub snr_db: f64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            positions: None,
            nodes: 40,
            side_m: 600.0,
            hull: HullMethod::Quick,
            strips: 64,
            distance_m: 200.0,
            snr_db: 15.0,
        }
    }
}

/// Resolved packet-loss source.
#[derive(Debug, Clone, PartialEq)]
pub enum ChannelSource {
    Model { params: GeParams, nominal_plr: f64 },
    Replay { path: PathBuf },
}

impl ChannelConfig {
    pub fn source(&self) -> Result<ChannelSource, Vec<String>> {
        let mut errs = Vec::new();
        let replay_fields = self.file.is_some();
        let model_fields =
            self.plr.is_some() || self.pg.is_some() || self.pb.is_some() || self.k.is_some() || self.r.is_some();
        let out = match self.model {
            ChannelModel::Simplified => {
                if replay_fields {
                    errs.push("channel.file: only valid with model = \"replay\"".into());
                }
                match self.plr {
                    None => {
                        errs.push("channel.plr: required by the simplified model".into());
                        None
                    }
                    Some(plr) => match SimplifiedGeParams::for_loss_rate(plr, self.mean_burst) {
                        Ok(p) => Some(ChannelSource::Model {
                            params: p.to_full(),
                            nominal_plr: plr,
                        }),
                        Err(e) => {
                            errs.push(format!("channel.plr/mean_burst: {e}"));
                            None
                        }
                    },
                }
            }
            ChannelModel::Gilbert => {
                if replay_fields {
                    errs.push("channel.file: only valid with model = \"replay\"".into());
                }
                let field = |v: Option<f64>, name: &str, errs: &mut Vec<String>| {
                    if v.is_none() {
                        errs.push(format!("channel.{name}: required by the gilbert model"));
                    }
                    v.unwrap_or(0.0)
                };
                let (pg, pb, k, r) = (
                    field(self.pg, "pg", &mut errs),
                    field(self.pb, "pb", &mut errs),
                    field(self.k, "k", &mut errs),
                    field(self.r, "r", &mut errs),
                );
                match GeParams::new(pg, pb, k, r) {
                    Ok(params) if errs.is_empty() => {
                        let nominal_plr = uepsim_core::channel::ge_avg_loss(&params).unwrap_or(0.0);
                        Some(ChannelSource::Model { params, nominal_plr })
                    }
                    Ok(_) => None,
                    Err(e) => {
                        errs.push(format!("channel: {e}"));
                        None
                    }
                }
            }
            ChannelModel::Replay => {
                if model_fields {
                    errs.push("channel: model parameters are not valid with model = \"replay\"".into());
                }
                match &self.file {
                    Some(p) => Some(ChannelSource::Replay { path: p.clone() }),
                    None => {
                        errs.push("channel.file: required by the replay model".into());
                        None
                    }
                }
            }
        };
        match out {
            Some(s) if errs.is_empty() => Ok(s),
            _ => Err(errs),
        }
    }
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| HarnessError::Config(vec![e.to_string()]))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Loads a config; relative paths inside it resolve against its
    /// directory.
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        if let Some(dir) = path.parent() {
            let fix = |p: &mut Option<PathBuf>| {
                if let Some(p) = p {
                    if p.is_relative() {
                        *p = dir.join(&*p);
                    }
                }
            };
            fix(&mut cfg.trace.file);
            fix(&mut cfg.channel.file);
            fix(&mut cfg.network.positions);
        }
        Ok(cfg)
    }

    /// Collects every problem, each prefixed with its field path.
    pub fn validate(&self) -> Result<(), HarnessError> {
        let mut errs = Vec::new();
        if self.repetitions == 0 {
            errs.push("repetitions: must be at least 1".to_string());
        }
        if let Err(e) = self.mechanism.validate() {
            errs.push(format!("mechanism: {e}"));
        }
        if self.block_size == 0 || self.block_size > 255 {
            errs.push("block_size: must be in 1..=255".into());
        }
        if self.payload_bytes == 0 {
            errs.push("payload_bytes: must be positive".into());
        }
        if self.plr_window == 0 {
            errs.push("plr_window: must be positive".into());
        }
        if self.feedback_window == 0 {
            errs.push("feedback_window: must be positive".into());
        }
        match (&self.trace.file, &self.trace.synth) {
            (Some(_), Some(_)) => errs.push("trace: give exactly one of file or synth, not both".into()),
            (None, None) => errs.push("trace: one of file or synth is required".into()),
            (None, Some(s)) => {
                if s.gop_count == 0 {
                    errs.push("trace.synth.gop_count: must be at least 1".into());
                }
                if let Err(e) = GopLayout::new(s.n_ratio, s.m_ratio) {
                    errs.push(format!("trace.synth: {e}"));
                }
            }
            (Some(_), None) => {}
        }
        if let Err(e) = self.channel.source() {
            errs.extend(e);
        }
        if !(self.channel.mean_burst > 1.0 && self.channel.mean_burst.is_finite()) {
            errs.push("channel.mean_burst: must exceed 1".into());
        }
        let n = &self.network;
        if n.positions.is_none() && n.nodes < 3 {
            errs.push("network.nodes: need at least 3 nodes".into());
        }
        if !(n.side_m > 0.0 && n.side_m.is_finite()) {
            errs.push("network.side_m: must be positive".into());
        }
        if n.strips == 0 {
            errs.push("network.strips: must be positive".into());
        }
        if !(n.distance_m >= 0.0 && n.distance_m.is_finite()) {
            errs.push("network.distance_m: must be non-negative".into());
        }
        if !n.snr_db.is_finite() {
            errs.push("network.snr_db: must be finite".into());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(HarnessError::Config(errs))
        }
    }

    /// True when two configs differ at most in their mechanism.
    pub fn same_setting(&self, other: &ScenarioConfig) -> bool {
        let mut o = other.clone();
        o.mechanism = self.mechanism;
        &o == self
    }
}
