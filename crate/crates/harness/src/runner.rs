//! Scenario pipeline: decide, block, encode, transmit, decode, conceal,
//! measure.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::BufReader;

use log::{debug, info};
use rand::{Rng, RngCore};
use rayon::prelude::*;
use uepsim_core::channel::{gap_stats, predict_error_class, read_loss_trace, GeChannel};
use uepsim_core::fec::{build_ffblocks, rs_decode, split_shards, FecBlock, ReedSolomon};
use uepsim_core::fuzzy::builtin;
use uepsim_core::mechanisms::{decide, spatial_class, DecisionEngines, MechanismContext, MechanismKind, NetInputs};
use uepsim_core::motion::{classify_intensity, normalize_frame_sizes, IntensityClass, IntensityClassifier};
use uepsim_core::netstate::{
    bfp_hull, density, fused_snr, quickhull, read_positions, windowed_plr, NetworkSnapshot, NodePosition,
};
use uepsim_core::qoe::{frame_copy_conceal, overhead_pct, propagate_trace_damage, QoeReport};
use uepsim_core::rnn::{rnn_train, toy_dataset, RnnTopology, DEFAULT_ITERATIONS};
use uepsim_core::video::{packetize, synthesize_video, FrameType, PixelFrame, SynthesisSpec, VideoTrace};
use uepsim_core::{rng, SimRng};

use crate::config::{ChannelSource, HullMethod, ScenarioConfig};
use crate::HarnessError;

/// Seed of the one-off neural model training; fixed so every run scores
/// frames with the same network.
pub const TRAINING_SEED: u64 = 0x5eed_0001;

// Substreams of a repetition seed.
const STREAM_CHANNEL: u64 = 1;
const STREAM_DECIDE: u64 = 2;
const STREAM_NETWORK: u64 = 3;
const STREAM_PAYLOAD: u64 = 4;

/// Video, network and engines shared by every repetition of a setting.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub trace: VideoTrace,
    pub pixels: Vec<PixelFrame>,
    pub intensity: IntensityClass,
    pub spatial: IntensityClass,
    pub density_km2: f64,
    pub snr_db: f64,
    pub engines: DecisionEngines,
}

/// Mean total vector length of predicted frames.
fn mean_motion(trace: &VideoTrace) -> f64 {
    let v: Vec<f64> = trace
        .frames
        .iter()
        .filter(|f| f.mv_count > 0)
        .map(|f| f.mv_total_distance)
        .collect();
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

fn io_err(what: &std::path::Path, e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Io(format!("{}: {e}", what.display()))
}

pub fn load_trace(cfg: &ScenarioConfig) -> Result<(VideoTrace, Vec<PixelFrame>), HarnessError> {
    if let Some(s) = &cfg.trace.synth {
        let layout = uepsim_core::video::GopLayout::new(s.n_ratio, s.m_ratio)
            .map_err(|e| HarnessError::Config(vec![format!("trace.synth: {e}")]))?;
        let spec = SynthesisSpec::new(layout, s.gop_count, s.motion, s.seed.unwrap_or(cfg.seed));
        return synthesize_video(&spec).map_err(|e| HarnessError::Sim(e.to_string()));
    }
    let path = cfg.trace.file.as_ref().expect("validated: one trace source");
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let trace = VideoTrace::read_from(BufReader::new(file)).map_err(|e| io_err(path, e))?;
    // A metadata trace carries no pixels: render content matching its
    // motion class and length.
    let motion = cfg.trace.intensity.unwrap_or_else(|| motion_class(&trace));
    let gops = trace.frames.len().div_ceil(trace.gop.length());
    let mut spec = SynthesisSpec::new(trace.gop, gops, motion, cfg.seed);
    spec.width = trace.width;
    spec.height = trace.height;
    let (_, mut pixels) = synthesize_video(&spec).map_err(|e| HarnessError::Sim(e.to_string()))?;
    pixels.truncate(trace.frames.len());
    Ok((trace, pixels))
}

fn motion_class(trace: &VideoTrace) -> IntensityClass {
    let classifier = IntensityClassifier::Fuzzy(builtin::uavfec_motion());
    classify_intensity(&[mean_motion(trace)], &classifier).unwrap_or(IntensityClass::Medium)
}

fn network_inputs(cfg: &ScenarioConfig) -> Result<(f64, f64), HarnessError> {
    let n = &cfg.network;
    let (positions, snr) = match &n.positions {
        Some(path) => {
            let file = File::open(path).map_err(|e| io_err(path, e))?;
            let rows = read_positions(BufReader::new(file)).map_err(|e| io_err(path, e))?;
            let snr = fused_snr(&rows).unwrap_or(n.snr_db);
            (rows.into_iter().map(|r| r.position).collect::<Vec<_>>(), snr)
        }
        None => {
            let mut r = rng::substream(cfg.seed, STREAM_NETWORK);
            let pts = (0..n.nodes)
                .map(|_| NodePosition::new(r.gen_range(0.0..n.side_m), r.gen_range(0.0..n.side_m)))
                .collect();
            (pts, n.snr_db)
        }
    };
    let snap = NetworkSnapshot::new(positions, 0.0, Some(snr))
        .map_err(|e| HarnessError::Config(vec![format!("network: {e}")]))?;
    let hull = match n.hull {
        HullMethod::Quick => quickhull(&snap.positions),
        HullMethod::Bfp => {
            bfp_hull(&snap.positions, n.strips).map_err(|e| HarnessError::Config(vec![format!("network: {e}")]))?
        }
    };
    let d = density(&snap, &hull).map_err(|e| HarnessError::Config(vec![format!("network: {e}")]))?;
    Ok((d * 1e6, snr))
}

/// Engines with the neural scorer trained once on the labelled toy set.
pub fn trained_engines() -> Result<DecisionEngines, HarnessError> {
    let mut r = rng::seeded(TRAINING_SEED);
    let data = toy_dataset(60, &mut r);
    let topo = RnnTopology::new(3).map_err(|e| HarnessError::Sim(e.to_string()))?;
    let model = rnn_train(topo, &data, DEFAULT_ITERATIONS, &mut r).map_err(|e| HarnessError::Sim(e.to_string()))?;
    Ok(DecisionEngines::builtin().with_neural(model))
}

pub fn prepare(cfg: &ScenarioConfig) -> Result<Prepared, HarnessError> {
    cfg.validate()?;
    let (trace, pixels) = load_trace(cfg)?;
    let intensity = cfg.trace.intensity.unwrap_or_else(|| motion_class(&trace));
    let sizes = normalize_frame_sizes(&trace).map_err(|e| HarnessError::Sim(e.to_string()))?;
    let mb_count = trace.frames.first().map_or(1, |f| f.mb_count);
    let (density_km2, snr_db) = network_inputs(cfg)?;
    info!(
        "trace: {} frames, motion {intensity}, density {density_km2:.1}/km²",
        trace.frames.len()
    );
    Ok(Prepared {
        spatial: spatial_class(sizes.mu_i, mb_count),
        trace,
        pixels,
        intensity,
        density_km2,
        snr_db,
        engines: trained_engines()?,
    })
}

/// Delivery flags for at least `needed` packet slots of a repetition.
pub fn loss_trace(cfg: &ScenarioConfig, rep_seed: u64, needed: usize) -> Result<Vec<bool>, HarnessError> {
    match cfg.channel.source().map_err(HarnessError::Config)? {
        ChannelSource::Model { params, .. } => {
            let mut r = rng::substream(rep_seed, STREAM_CHANNEL);
            let mut ch = GeChannel::stationary(params, &mut r);
            Ok(ch.trace(needed, &mut r))
        }
        ChannelSource::Replay { path } => {
            let file = File::open(&path).map_err(|e| io_err(&path, e))?;
            let t = read_loss_trace(BufReader::new(file)).map_err(|e| io_err(&path, e))?;
            if t.len() < needed {
                return Err(HarnessError::Config(vec![format!(
                    "channel.file: replay trace has {} packets, the run may need {needed}",
                    t.len()
                )]));
            }
            Ok(t)
        }
    }
}

fn nominal_plr(cfg: &ScenarioConfig, losses: &[bool]) -> f64 {
    match cfg.channel.source() {
        Ok(ChannelSource::Model { nominal_plr, .. }) => nominal_plr,
        _ => losses.iter().filter(|d| !**d).count() as f64 / losses.len().max(1) as f64,
    }
}

/// Per-repetition transmission accounting.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TransmitStats {
    pub source_bytes: u64,
    pub protected_source_bytes: u64,
    pub parity_bytes: u64,
    pub packets_sent: usize,
    pub lost_frames: BTreeSet<usize>,
}

/// Runs one repetition against a given loss realization.
pub fn run_repetition(
    cfg: &ScenarioConfig,
    mechanism: MechanismKind,
    prep: &Prepared,
    rep_seed: u64,
    losses: &[bool],
) -> Result<(QoeReport, TransmitStats), HarnessError> {
    let trace = &prep.trace;
    let sizes = normalize_frame_sizes(trace).map_err(|e| HarnessError::Sim(e.to_string()))?;
    let mut decide_rng = rng::substream(rep_seed, STREAM_DECIDE);
    let payload_seed = rng::substream(cfg.seed, STREAM_PAYLOAD).next_u64();
    let sim = |e: &dyn std::fmt::Display| HarnessError::Sim(e.to_string());

    let mut observed: Vec<bool> = Vec::with_capacity(losses.len());
    let mut stats = TransmitStats::default();
    let mut pos = 0usize;

    for frame in &trace.frames {
        let recent = windowed_plr(&observed, cfg.plr_window);
        let net = NetInputs {
            plr_pct: recent.plr * 100.0,
            density_km2: Some(prep.density_km2),
            distance_m: Some(cfg.network.distance_m),
            snr_db: Some(prep.snr_db),
        };
        let mut ctx = MechanismContext::from_trace(trace, &sizes, frame.index, prep.intensity, prep.spatial, net)
            .map_err(|e| sim(&e))?;
        let from = observed.len().saturating_sub(cfg.feedback_window);
        ctx.predicted_error = Some(predict_error_class(&gap_stats(&observed[from..]), cfg.block_size));
        let decision = decide(mechanism, &ctx, &prep.engines, &mut decide_rng).map_err(|e| sim(&e))?;

        let packets = packetize(frame, cfg.payload_bytes);
        let data = frame_payload(payload_seed, frame.index, frame.size_bytes as usize);
        let shards = split_shards(&data, packets);
        let blocks = build_ffblocks(packets, cfg.block_size, decision.ratio).map_err(|e| sim(&e))?;

        stats.source_bytes += frame.size_bytes;
        if frame.kind != FrameType::B {
            stats.protected_source_bytes += frame.size_bytes;
        }
        let mut first = 0;
        let mut frame_ok = true;
        for params in blocks {
            let source = &shards[first..first + params.k];
            first += params.k;
            let encoded = ReedSolomon::new(params)
                .and_then(|rs| rs.encode(source))
                .map_err(|e| sim(&e))?;
            stats.parity_bytes += (params.h * encoded[0].len()) as u64;
            let mut block = FecBlock::from_encoded(params, encoded, frame.index).map_err(|e| sim(&e))?;
            for i in 0..params.n {
                let delivered = *losses
                    .get(pos)
                    .ok_or_else(|| HarnessError::Sim("loss trace exhausted".into()))?;
                pos += 1;
                observed.push(delivered);
                if !delivered {
                    block.erase(i);
                }
            }
            match rs_decode(&block) {
                Ok(recovered) => {
                    if recovered != source {
                        return Err(HarnessError::Sim(format!(
                            "frame {} decoded to wrong bytes",
                            frame.index
                        )));
                    }
                }
                Err(_) => frame_ok = false,
            }
        }
        if !frame_ok {
            stats.lost_frames.insert(frame.index);
        }
        debug!(
            "frame {} {:?}: ratio {:.3}, lost {}",
            frame.index, frame.kind, decision.ratio, !frame_ok
        );
    }
    stats.packets_sent = pos;

    let damage = propagate_trace_damage(&stats.lost_frames, &trace.gop, trace.frames.len());
    let shown = frame_copy_conceal(&prep.pixels, &damage).map_err(|e| sim(&e))?;
    // Overhead is measured on the protection-eligible (I and P) traffic.
    let overhead = if stats.protected_source_bytes == 0 {
        0.0
    } else {
        overhead_pct(
            stats.protected_source_bytes + stats.parity_bytes,
            stats.protected_source_bytes,
        )
        .map_err(|e| sim(&e))?
    };
    let report = QoeReport::measure(
        &mechanism.to_string(),
        rep_seed,
        nominal_plr(cfg, losses),
        &prep.pixels,
        &shown,
        &damage,
        overhead,
    )
    .map_err(|e| sim(&e))?;
    Ok((report, stats))
}

/// Deterministic stand-in for a frame's encoded bytes.
fn frame_payload(seed: u64, index: usize, len: usize) -> Vec<u8> {
    let mut r: SimRng = rng::substream(seed, index as u64);
    let mut v = vec![0u8; len];
    r.fill_bytes(&mut v);
    v
}

/// Upper bound on the packet slots of one run (every frame at ratio 1).
pub fn max_packets(cfg: &ScenarioConfig, trace: &VideoTrace) -> usize {
    trace.frames.iter().map(|f| 2 * packetize(f, cfg.payload_bytes)).sum()
}

fn rep_seeds(cfg: &ScenarioConfig) -> Vec<u64> {
    (0..cfg.repetitions as u64).map(|r| cfg.seed.wrapping_add(r)).collect()
}

/// One report per repetition, in repetition order.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<Vec<QoeReport>, HarnessError> {
    let prep = prepare(cfg)?;
    run_prepared(cfg, cfg.mechanism, &prep)
}

fn run_prepared(
    cfg: &ScenarioConfig,
    mechanism: MechanismKind,
    prep: &Prepared,
) -> Result<Vec<QoeReport>, HarnessError> {
    let needed = max_packets(cfg, &prep.trace);
    rep_seeds(cfg)
        .into_par_iter()
        .map(|s| {
            let losses = loss_trace(cfg, s, needed)?;
            run_repetition(cfg, mechanism, prep, s, &losses).map(|(r, _)| r)
        })
        .collect()
}

/// Runs configs that differ only in their mechanism on the same video and
/// loss realizations; one row per config, averaged over repetitions.
pub fn compare_mechanisms(configs: &[ScenarioConfig]) -> Result<Vec<QoeReport>, HarnessError> {
    let base = configs
        .first()
        .ok_or_else(|| HarnessError::Config(vec!["compare: no configs".into()]))?;
    for (i, c) in configs.iter().enumerate().skip(1) {
        if !base.same_setting(c) {
            return Err(HarnessError::Config(vec![format!(
                "compare: config {i} differs from config 0 in more than the mechanism"
            )]));
        }
    }
    let prep = prepare(base)?;
    let needed = max_packets(base, &prep.trace);
    let losses: Vec<(u64, Vec<bool>)> = rep_seeds(base)
        .into_iter()
        .map(|s| loss_trace(base, s, needed).map(|l| (s, l)))
        .collect::<Result<_, _>>()?;
    configs
        .par_iter()
        .map(|c| {
            let reps: Vec<QoeReport> = losses
                .iter()
                .map(|(s, l)| run_repetition(base, c.mechanism, &prep, *s, l).map(|(r, _)| r))
                .collect::<Result<_, _>>()?;
            Ok(average_reports(&reps, base.seed))
        })
        .collect()
}

/// Mean of repetition reports; PSNR is recomputed from the mean MSE.
pub fn average_reports(reps: &[QoeReport], seed: u64) -> QoeReport {
    let n = reps.len().max(1) as f64;
    let mean = |g: fn(&QoeReport) -> f64| reps.iter().map(g).sum::<f64>() / n;
    let mean_mse = mean(|r| r.mean_mse);
    QoeReport {
        mechanism: reps.first().map(|r| r.mechanism.clone()).unwrap_or_default(),
        seed,
        plr_setting: mean(|r| r.plr_setting),
        decodable_frame_ratio: mean(|r| r.decodable_frame_ratio),
        mean_mse,
        mean_psnr_db: uepsim_core::qoe::psnr_8bit(mean_mse),
        mean_ssim: mean(|r| r.mean_ssim),
        overhead_pct: mean(|r| r.overhead_pct),
    }
}
