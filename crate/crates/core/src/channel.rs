//! Two-state Markov (Gilbert-Elliot) loss channels, their closed forms, gap
//! statistics and next-block error-class prediction.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("{name} = {value} must lie strictly inside (0, 1)")]
    Boundary { name: &'static str, value: f64 },
    #[error("{name} = {value} must lie in [0, 1]")]
    OutOfRange { name: &'static str, value: f64 },
    #[error("loss trace line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn unit(name: &'static str, value: f64) -> Result<f64, ChannelError> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(ChannelError::OutOfRange { name, value })
    }
}

fn open_unit(name: &'static str, value: f64) -> Result<f64, ChannelError> {
    if value > 0.0 && value < 1.0 {
        Ok(value)
    } else {
        Err(ChannelError::Boundary { name, value })
    }
}

/// Full Gilbert-Elliot channel. `pg` and `pb` are per-packet loss
/// probabilities in the good and bad states; `k` is P(G→B), `r` is P(B→G).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeParams {
    pub pg: f64,
    pub pb: f64,
    pub k: f64,
    pub r: f64,
}

impl GeParams {
    pub fn new(pg: f64, pb: f64, k: f64, r: f64) -> Result<Self, ChannelError> {
        Ok(Self {
            pg: unit("pg", pg)?,
            pb: unit("pb", pb)?,
            k: unit("k", k)?,
            r: unit("r", r)?,
        })
    }
}

/// Simplified model: no loss in G, certain loss in B.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimplifiedGeParams {
    pub p_gb: f64,
    pub p_bg: f64,
}

impl SimplifiedGeParams {
    pub fn new(p_gb: f64, p_bg: f64) -> Result<Self, ChannelError> {
        Ok(Self {
            p_gb: open_unit("p_gb", p_gb)?,
            p_bg: open_unit("p_bg", p_bg)?,
        })
    }

    /// Chain whose long-run loss rate is `plr` with mean loss bursts of
    /// `mean_burst` packets.
    pub fn for_loss_rate(plr: f64, mean_burst: f64) -> Result<Self, ChannelError> {
        open_unit("plr", plr)?;
        if mean_burst.is_nan() || mean_burst <= 1.0 {
            return Err(ChannelError::OutOfRange {
                name: "mean_burst",
                value: mean_burst,
            });
        }
        let p_bg = 1.0 / mean_burst;
        Self::new(p_bg * plr / (1.0 - plr), p_bg)
    }

    pub fn to_full(self) -> GeParams {
        GeParams {
            pg: 0.0,
            pb: 1.0,
            k: self.p_gb,
            r: self.p_bg,
        }
    }
}

/// Stationary probabilities `(phi_g, phi_b)` of the two states.
pub fn ge_steady_state(params: &GeParams) -> Result<(f64, f64), ChannelError> {
    let k = open_unit("k", params.k)?;
    let r = open_unit("r", params.r)?;
    Ok((r / (r + k), k / (r + k)))
}

/// Long-run loss probability `pg·phi_g + pb·phi_b`.
pub fn ge_avg_loss(params: &GeParams) -> Result<f64, ChannelError> {
    let (phi_g, phi_b) = ge_steady_state(params)?;
    Ok(params.pg * phi_g + params.pb * phi_b)
}

/// The conventional loss-rate expression for the simplified model,
/// `p_bg / (p_bg + p_gb)`.
///
/// This is the chain's *good*-state occupancy; the loss rate the chain
/// actually produces is [`simplified_bad_occupancy`]. Both are exposed and
/// reports carry both.
pub fn simplified_plr(params: &SimplifiedGeParams) -> f64 {
    params.p_bg / (params.p_bg + params.p_gb)
}

/// Stationary bad-state probability `p_gb / (p_gb + p_bg)`: the simplified
/// chain's long-run loss rate.
pub fn simplified_bad_occupancy(params: &SimplifiedGeParams) -> f64 {
    params.p_gb / (params.p_gb + params.p_bg)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ChannelState {
    Good,
    Bad,
}

/// One packet: loss is drawn from the current state, then the state moves.
pub fn channel_step<R: Rng + ?Sized>(state: ChannelState, params: &GeParams, rng: &mut R) -> (bool, ChannelState) {
    let (loss_p, leave_p) = match state {
        ChannelState::Good => (params.pg, params.k),
        ChannelState::Bad => (params.pb, params.r),
    };
    let delivered = rng.gen::<f64>() >= loss_p;
    let next = if rng.gen::<f64>() < leave_p {
        match state {
            ChannelState::Good => ChannelState::Bad,
            ChannelState::Bad => ChannelState::Good,
        }
    } else {
        state
    };
    (delivered, next)
}

/// A running channel: parameters plus current state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeChannel {
    pub params: GeParams,
    pub state: ChannelState,
}

impl GeChannel {
    pub fn new(params: GeParams, state: ChannelState) -> Self {
        Self { params, state }
    }

    /// Starts in a state drawn from the stationary distribution (Good when
    /// the chain has no stationary distribution).
    pub fn stationary<R: Rng + ?Sized>(params: GeParams, rng: &mut R) -> Self {
        let state = match ge_steady_state(&params) {
            Ok((_, phi_b)) if rng.gen::<f64>() < phi_b => ChannelState::Bad,
            _ => ChannelState::Good,
        };
        Self { params, state }
    }

    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> bool {
        let (delivered, next) = channel_step(self.state, &self.params, rng);
        self.state = next;
        delivered
    }

    /// Delivery flags of the next `packets` packets.
    pub fn trace<R: Rng + ?Sized>(&mut self, packets: usize, rng: &mut R) -> Vec<bool> {
        (0..packets).map(|_| self.step(rng)).collect()
    }
}

/// Runs of delivered (good) and lost (bad) packets, in order.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GapStats {
    pub good_gaps: Vec<usize>,
    pub bad_gaps: Vec<usize>,
    pub total_packets: usize,
    /// Whether the first packet was delivered; `None` for an empty trace.
    pub first_delivered: Option<bool>,
}

impl GapStats {
    pub fn mean_good(&self) -> f64 {
        mean(&self.good_gaps)
    }

    pub fn mean_bad(&self) -> f64 {
        mean(&self.bad_gaps)
    }

    /// Rebuilds the delivery flags from the run lengths.
    pub fn reconstruct(&self) -> Vec<bool> {
        let mut out = Vec::with_capacity(self.total_packets);
        let Some(mut flag) = self.first_delivered else {
            return out;
        };
        let (mut gi, mut bi) = (0, 0);
        loop {
            let run = if flag {
                self.good_gaps.get(gi)
            } else {
                self.bad_gaps.get(bi)
            };
            let Some(&len) = run else {
                return out;
            };
            out.extend(std::iter::repeat_n(flag, len));
            if flag {
                gi += 1;
            } else {
                bi += 1;
            }
            flag = !flag;
        }
    }
}

fn mean(v: &[usize]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<usize>() as f64 / v.len() as f64
    }
}

/// Run-length encodes a delivery trace into good and bad gaps.
pub fn gap_stats(trace: &[bool]) -> GapStats {
    let mut stats = GapStats {
        total_packets: trace.len(),
        first_delivered: trace.first().copied(),
        ..Default::default()
    };
    let mut i = 0;
    while i < trace.len() {
        let flag = trace[i];
        let start = i;
        while i < trace.len() && trace[i] == flag {
            i += 1;
        }
        if flag {
            stats.good_gaps.push(i - start);
        } else {
            stats.bad_gaps.push(i - start);
        }
    }
    stats
}

/// Predicted error occurrence in the next FEC block, in increasing severity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ErrorClass {
    /// No error expected.
    NE,
    /// Single short error.
    SSE,
    /// Single error.
    SE,
    /// Several medium errors.
    SME,
    /// Many errors.
    ME,
}

impl ErrorClass {
    pub const ALL: [ErrorClass; 5] = [
        ErrorClass::NE,
        ErrorClass::SSE,
        ErrorClass::SE,
        ErrorClass::SME,
        ErrorClass::ME,
    ];

    pub fn severity(self) -> usize {
        self as usize
    }

    pub fn from_severity(s: usize) -> Option<Self> {
        Self::ALL.get(s).copied()
    }
}

impl fmt::Display for ErrorClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl FromStr for ErrorClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|c| c.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown error class {s:?}"))
    }
}

/// Classifies the expected damage to the next block of `block_size`
/// packets from the observed gaps.
///
/// With g and b the mean good and bad gap, the block is expected to lose
/// `L = block_size · b / (g + b)` packets. Then:
///
/// | L                       | class |
/// |-------------------------|-------|
/// | no bad gap, or L < 0.5  | NE    |
/// | 0.5 ≤ L < 1             | SSE   |
/// | 1 ≤ L < 2               | SE    |
/// | 2 ≤ L ≤ block_size / 2  | SME   |
/// | L > block_size / 2      | ME    |
pub fn predict_error_class(stats: &GapStats, block_size: usize) -> ErrorClass {
    let b = stats.mean_bad();
    if stats.bad_gaps.is_empty() || b <= 0.0 {
        return ErrorClass::NE;
    }
    let g = stats.mean_good();
    let lost = block_size as f64 * b / (g + b);
    if lost < 0.5 {
        ErrorClass::NE
    } else if lost < 1.0 {
        ErrorClass::SSE
    } else if lost < 2.0 {
        ErrorClass::SE
    } else if lost <= block_size as f64 / 2.0 {
        ErrorClass::SME
    } else {
        ErrorClass::ME
    }
}

/// Writes `1` per delivered and `0` per lost packet, 80 per line.
pub fn write_loss_trace<W: Write>(mut out: W, trace: &[bool]) -> std::io::Result<()> {
    for chunk in trace.chunks(80) {
        let line: String = chunk.iter().map(|&d| if d { '1' } else { '0' }).collect();
        writeln!(out, "{line}")?;
    }
    Ok(())
}

pub fn read_loss_trace<R: BufRead>(input: R) -> Result<Vec<bool>, ChannelError> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        for c in line?.trim_end_matches('\r').chars() {
            match c {
                '1' => out.push(true),
                '0' => out.push(false),
                other => {
                    return Err(ChannelError::Parse {
                        line: i + 1,
                        reason: format!("unexpected character {other:?}"),
                    })
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn steady_state_examples() {
        let (g, b) = ge_steady_state(&GeParams::new(0.0, 1.0, 0.1, 0.4).unwrap()).unwrap();
        assert!((g - 0.8).abs() < 1e-12 && (b - 0.2).abs() < 1e-12);
        let (g, b) = ge_steady_state(&GeParams::new(0.0, 1.0, 0.3, 0.3).unwrap()).unwrap();
        assert_eq!((g, b), (0.5, 0.5));
        let (g, b) = ge_steady_state(&GeParams::new(0.0, 1.0, 0.01, 0.99).unwrap()).unwrap();
        assert!((g - 0.99).abs() < 1e-12 && (b - 0.01).abs() < 1e-12);
        assert!(ge_steady_state(&GeParams::new(0.0, 1.0, 0.0, 0.5).unwrap()).is_err());
        assert!(ge_steady_state(&GeParams::new(0.0, 1.0, 0.5, 1.0).unwrap()).is_err());
    }

    #[test]
    fn average_loss_examples() {
        let l = ge_avg_loss(&GeParams::new(0.01, 0.5, 0.1, 0.4).unwrap()).unwrap();
        assert!((l - 0.108).abs() < 1e-12);
        let l = ge_avg_loss(&GeParams::new(0.07, 0.07, 0.2, 0.6).unwrap()).unwrap();
        assert!((l - 0.07).abs() < 1e-12);
        let l = ge_avg_loss(&GeParams::new(0.0, 1.0, 0.1, 0.4).unwrap()).unwrap();
        assert!((l - 0.2).abs() < 1e-12);
    }

    #[test]
    fn average_loss_matches_simulation() {
        let p = GeParams::new(0.01, 0.5, 0.1, 0.4).unwrap();
        let mut rng = crate::rng::seeded(11);
        let mut ch = GeChannel::stationary(p, &mut rng);
        let n = 400_000;
        let lost = ch.trace(n, &mut rng).iter().filter(|d| !**d).count();
        assert!((lost as f64 / n as f64 - 0.108).abs() < 0.01);
    }

    #[test]
    fn conventional_simplified_formula() {
        let s = SimplifiedGeParams::new(0.3, 0.3).unwrap();
        assert_eq!(simplified_plr(&s), 0.5);
        let s = SimplifiedGeParams::new(0.05, 0.2).unwrap();
        assert!((simplified_plr(&s) - 0.8).abs() < 1e-12);
        assert!((simplified_bad_occupancy(&s) - 0.2).abs() < 1e-12);
        let s = SimplifiedGeParams::new(0.2, 0.05).unwrap();
        assert!((simplified_plr(&s) - 0.2).abs() < 1e-12);
    }

    #[test]
    fn target_loss_constructor() {
        let s = SimplifiedGeParams::for_loss_rate(0.2, 4.0).unwrap();
        assert!((simplified_bad_occupancy(&s) - 0.2).abs() < 1e-12);
        assert_eq!(s.p_bg, 0.25);
    }

    #[test]
    fn simplified_states_are_deterministic_in_loss() {
        let p = SimplifiedGeParams::new(0.3, 0.3).unwrap().to_full();
        let mut rng = crate::rng::seeded(3);
        for _ in 0..1000 {
            assert!(!channel_step(ChannelState::Bad, &p, &mut rng).0);
            assert!(channel_step(ChannelState::Good, &p, &mut rng).0);
        }
    }

    #[test]
    fn seeded_traces_repeat() {
        let p = GeParams::new(0.05, 0.6, 0.1, 0.3).unwrap();
        let run = || {
            let mut rng = crate::rng::seeded(99);
            GeChannel::new(p, ChannelState::Good).trace(100, &mut rng)
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn gap_examples() {
        let s = gap_stats(&[true, true, false, false, true, false]);
        assert_eq!(
            (s.good_gaps.as_slice(), s.bad_gaps.as_slice()),
            (&[2, 1][..], &[2, 1][..])
        );
        let s = gap_stats(&[true; 7]);
        assert_eq!((s.good_gaps, s.bad_gaps), (vec![7], vec![]));
        let alt: Vec<bool> = (0..6).map(|i| i % 2 == 0).collect();
        let s = gap_stats(&alt);
        assert_eq!((s.good_gaps, s.bad_gaps), (vec![1, 1, 1], vec![1, 1, 1]));
    }

    fn stats(g: usize, b: usize) -> GapStats {
        let mut t = Vec::new();
        for _ in 0..5 {
            t.extend(std::iter::repeat_n(true, g));
            t.extend(std::iter::repeat_n(false, b));
        }
        gap_stats(&t)
    }

    #[test]
    fn prediction_examples() {
        assert_eq!(predict_error_class(&gap_stats(&[true; 50]), 10), ErrorClass::NE);
        assert_eq!(predict_error_class(&stats(18, 2), 10), ErrorClass::SE);
        assert_eq!(predict_error_class(&stats(2, 2), 10), ErrorClass::SME);
        assert_eq!(predict_error_class(&stats(1, 9), 10), ErrorClass::ME);
        assert_eq!(predict_error_class(&stats(30, 2), 10), ErrorClass::SSE);
    }

    #[test]
    fn loss_trace_file_round_trip() {
        let t: Vec<bool> = (0..170).map(|i| i % 7 != 3).collect();
        let mut buf = Vec::new();
        write_loss_trace(&mut buf, &t).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().map(str::len).collect::<Vec<_>>(), [80, 80, 10]);
        assert_eq!(read_loss_trace(&buf[..]).unwrap(), t);
        assert!(read_loss_trace(&b"10x1\n"[..]).is_err());
    }

    proptest! {
        #[test]
        fn gaps_reconstruct_trace(t in proptest::collection::vec(any::<bool>(), 0..200)) {
            let s = gap_stats(&t);
            prop_assert_eq!(s.good_gaps.iter().sum::<usize>() + s.bad_gaps.iter().sum::<usize>(), t.len());
            prop_assert_eq!(s.reconstruct(), t);
        }

        #[test]
        fn prediction_monotone_in_bad_gaps(g in 1usize..40, b in 1usize..20, extra in 0usize..10) {
            let lo = predict_error_class(&stats(g, b), 10);
            let hi = predict_error_class(&stats(g, b + extra), 10);
            prop_assert!(hi >= lo);
        }
    }
}
