//! Ant colony search over the layered construction graph that maps video
//! and network context to a redundancy ratio.
//!
//! Layers: Start, motion intensity (Low/Medium/High), frame type (P/I),
//! frame size (Small/Medium/Large) and predicted error occurrence
//! (NE..ME). Arcs only join adjacent layers; an arc's length grows with the
//! severity of the node it enters, so longer tours call for more
//! redundancy.

use std::collections::HashMap;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::ErrorClass;
use crate::motion::IntensityClass;
use crate::video::FrameType;

#[derive(Debug, Error, PartialEq)]
pub enum AcoError {
    #[error("arc length {0} must be positive and finite")]
    BadLength(f64),
    #[error("no arc {0}")]
    UnknownArc(String),
    #[error("B-frames are not part of the construction graph")]
    BFrame,
    #[error("invalid parameter {name} = {value}")]
    BadParam { name: &'static str, value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SizeClass {
    Small,
    Medium,
    Large,
}

impl SizeClass {
    pub const ALL: [SizeClass; 3] = [SizeClass::Small, SizeClass::Medium, SizeClass::Large];

    pub fn severity(self) -> usize {
        self as usize
    }

    pub fn from_severity(s: usize) -> Option<Self> {
        Self::ALL.get(s).copied()
    }
}

pub const LAYER_NAMES: [&str; 5] = ["start", "motion", "type", "size", "error"];
const LAYER_LABELS: [&[&str]; 5] = [
    &["Start"],
    &["Low", "Medium", "High"],
    &["P", "I"],
    &["Small", "Medium", "Large"],
    &["NE", "SSE", "SE", "SME", "ME"],
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphNode {
    pub layer: usize,
    /// Position within the layer, in increasing severity.
    pub severity: usize,
    pub label: String,
}

impl fmt::Display for GraphNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", LAYER_NAMES[self.layer], self.label)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arc {
    pub from: usize,
    pub to: usize,
    pub length: f64,
    pub heuristic: f64,
}

/// The 14-node layered graph with per-arc lengths and pre-computed
/// heuristic information `1 / d`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstructionGraph {
    pub nodes: Vec<GraphNode>,
    pub layers: Vec<Vec<usize>>,
    lengths: Vec<Vec<Option<f64>>>,
    heuristic: Vec<Vec<f64>>,
}

/// Heuristic information of an arc of length `d`.
pub fn heuristic_info(d: f64) -> Result<f64, AcoError> {
    if d > 0.0 && d.is_finite() {
        Ok(1.0 / d)
    } else {
        Err(AcoError::BadLength(d))
    }
}

impl Default for ConstructionGraph {
    fn default() -> Self {
        Self::new()
    }
}

impl ConstructionGraph {
    /// Default lengths: entering a node of severity s (0-based) costs s + 1.
    pub fn new() -> Self {
        let mut nodes = Vec::new();
        let mut layers = Vec::new();
        for (layer, labels) in LAYER_LABELS.iter().enumerate() {
            let mut ids = Vec::new();
            for (severity, label) in labels.iter().enumerate() {
                ids.push(nodes.len());
                nodes.push(GraphNode {
                    layer,
                    severity,
                    label: label.to_string(),
                });
            }
            layers.push(ids);
        }
        let n = nodes.len();
        let mut lengths = vec![vec![None; n]; n];
        for w in layers.windows(2) {
            for &a in &w[0] {
                for &b in &w[1] {
                    lengths[a][b] = Some(nodes[b].severity as f64 + 1.0);
                }
            }
        }
        let mut g = Self {
            nodes,
            layers,
            lengths,
            heuristic: vec![vec![0.0; n]; n],
        };
        g.refresh_heuristic();
        g
    }

    fn refresh_heuristic(&mut self) {
        for (a, row) in self.lengths.iter().enumerate() {
            for (b, len) in row.iter().enumerate() {
                self.heuristic[a][b] = len.map_or(0.0, |d| 1.0 / d);
            }
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn start(&self) -> usize {
        self.layers[0][0]
    }

    /// Node id from `layer:label`, e.g. `motion:High` or `start`.
    pub fn node_by_name(&self, name: &str) -> Option<usize> {
        if name.eq_ignore_ascii_case("start") {
            return Some(self.start());
        }
        let (layer, label) = name.split_once(':')?;
        let l = LAYER_NAMES.iter().position(|n| n.eq_ignore_ascii_case(layer))?;
        self.layers[l]
            .iter()
            .copied()
            .find(|&i| self.nodes[i].label.eq_ignore_ascii_case(label))
    }

    pub fn length(&self, from: usize, to: usize) -> Option<f64> {
        self.lengths.get(from)?.get(to).copied().flatten()
    }

    pub fn set_length(&mut self, from: usize, to: usize, length: f64) -> Result<(), AcoError> {
        heuristic_info(length)?;
        match self.lengths.get_mut(from).and_then(|r| r.get_mut(to)) {
            Some(slot @ Some(_)) => {
                *slot = Some(length);
                self.refresh_heuristic();
                Ok(())
            }
            _ => Err(AcoError::UnknownArc(format!("{from}->{to}"))),
        }
    }

    /// Applies overrides keyed by arc id `layer:label->layer:label`.
    pub fn apply_overrides(&mut self, overrides: &HashMap<String, f64>) -> Result<(), AcoError> {
        let mut keys: Vec<&String> = overrides.keys().collect();
        keys.sort();
        for key in keys {
            let (a, b) = key.split_once("->").ok_or_else(|| AcoError::UnknownArc(key.clone()))?;
            let from = self
                .node_by_name(a.trim())
                .ok_or_else(|| AcoError::UnknownArc(key.clone()))?;
            let to = self
                .node_by_name(b.trim())
                .ok_or_else(|| AcoError::UnknownArc(key.clone()))?;
            self.set_length(from, to, overrides[key])?;
        }
        Ok(())
    }

    /// Outgoing arcs of `node`; empty for the last layer.
    pub fn candidate_list(&self, node: usize) -> Vec<Arc> {
        let layer = self.nodes[node].layer;
        let Some(next) = self.layers.get(layer + 1) else {
            return Vec::new();
        };
        next.iter()
            .filter_map(|&to| {
                self.length(node, to).map(|length| Arc {
                    from: node,
                    to,
                    length,
                    heuristic: self.heuristic[node][to],
                })
            })
            .collect()
    }

    pub fn tour_length(&self, tour: &[usize]) -> f64 {
        tour.windows(2)
            .map(|w| self.length(w[0], w[1]).unwrap_or(f64::INFINITY))
            .sum()
    }

    /// True when the tour starts at Start and visits one node per layer in
    /// order along existing arcs.
    pub fn is_valid_tour(&self, tour: &[usize]) -> bool {
        tour.len() == self.layers.len()
            && tour
                .iter()
                .enumerate()
                .all(|(l, &n)| n < self.nodes.len() && self.nodes[n].layer == l)
            && tour.windows(2).all(|w| self.length(w[0], w[1]).is_some())
    }

    /// Every Start-to-last-layer tour.
    pub fn all_tours(&self) -> Vec<Vec<usize>> {
        let mut tours = vec![vec![self.start()]];
        for _ in 1..self.layers.len() {
            tours = tours
                .into_iter()
                .flat_map(|t| {
                    let last = *t.last().expect("non-empty");
                    self.candidate_list(last).into_iter().map(move |a| {
                        let mut n = t.clone();
                        n.push(a.to);
                        n
                    })
                })
                .collect();
        }
        tours
    }

    /// Shortest and longest possible tour lengths.
    pub fn length_bounds(&self) -> (f64, f64) {
        self.all_tours()
            .iter()
            .map(|t| self.tour_length(t))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), l| (lo.min(l), hi.max(l)))
    }

    /// Affine map of a tour length onto the redundancy range [0.55, 1.0],
    /// clamped to [0, 1].
    pub fn length_to_ratio(&self, length: f64) -> f64 {
        let (lo, hi) = self.length_bounds();
        let t = if hi > lo { (length - lo) / (hi - lo) } else { 0.0 };
        (0.55 + 0.45 * t).clamp(0.0, 1.0)
    }
}

/// Observed classes that pin each layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AcoContext {
    pub motion: IntensityClass,
    pub frame: FrameType,
    pub size: SizeClass,
    pub error: ErrorClass,
}

impl AcoContext {
    /// Observed severity per layer (Start included).
    fn severities(&self) -> Result<[usize; 5], AcoError> {
        let frame = match self.frame {
            FrameType::P => 0,
            FrameType::I => 1,
            FrameType::B => return Err(AcoError::BFrame),
        };
        Ok([
            0,
            self.motion.severity(),
            frame,
            self.size.severity(),
            self.error.severity(),
        ])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AcoParams {
    pub ants: usize,
    pub iterations: usize,
    pub rho: f64,
    pub alpha: f64,
    pub beta: f64,
    pub tau_min: f64,
    pub tau_max: f64,
    /// Neighbours one severity step from the observed class are admissible
    /// with their length multiplied by this factor.
    pub neighbor_penalty: f64,
    pub admit_neighbors: bool,
}

impl Default for AcoParams {
    fn default() -> Self {
        Self {
            ants: 10,
            iterations: 10,
            rho: 0.5,
            alpha: 1.0,
            beta: 2.0,
            tau_min: 0.01,
            tau_max: 10.0,
            neighbor_penalty: 3.0,
            admit_neighbors: true,
        }
    }
}

impl AcoParams {
    pub fn validate(&self) -> Result<(), AcoError> {
        let bad = |name, value| Err(AcoError::BadParam { name, value });
        if self.ants == 0 {
            return bad("ants", 0.0);
        }
        if self.iterations == 0 {
            return bad("iterations", 0.0);
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return bad("rho", self.rho);
        }
        if !(self.tau_min > 0.0 && self.tau_min <= self.tau_max) {
            return bad("tau_min", self.tau_min);
        }
        if self.neighbor_penalty.is_nan() || self.neighbor_penalty < 1.0 {
            return bad("neighbor_penalty", self.neighbor_penalty);
        }
        Ok(())
    }
}

/// Pheromone per arc, kept within `[tau_min, tau_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PheromoneState {
    pub tau: Vec<Vec<f64>>,
    pub rho: f64,
    pub tau_min: f64,
    pub tau_max: f64,
}

impl PheromoneState {
    pub fn new(nodes: usize, params: &AcoParams) -> Self {
        Self {
            tau: vec![vec![1.0f64.clamp(params.tau_min, params.tau_max); nodes]; nodes],
            rho: params.rho,
            tau_min: params.tau_min,
            tau_max: params.tau_max,
        }
    }

    pub fn evaporate(&mut self) {
        for row in &mut self.tau {
            for t in row.iter_mut() {
                *t = ((1.0 - self.rho) * *t).clamp(self.tau_min, self.tau_max);
            }
        }
    }

    pub fn deposit(&mut self, tour: &[usize], amount: f64) {
        for w in tour.windows(2) {
            let t = &mut self.tau[w[0]][w[1]];
            *t = (*t + amount).clamp(self.tau_min, self.tau_max);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AcoOutcome {
    pub ratio: f64,
    pub best_tour: Vec<usize>,
    /// Raw (unpenalized) length of the best tour.
    pub best_length: f64,
}

/// Length multiplier of each node for a context; `None` when inadmissible.
fn admissibility(
    graph: &ConstructionGraph,
    ctx: &AcoContext,
    params: &AcoParams,
) -> Result<Vec<Option<f64>>, AcoError> {
    let sev = ctx.severities()?;
    Ok(graph
        .nodes
        .iter()
        .map(|n| {
            let d = n.severity.abs_diff(sev[n.layer]);
            match d {
                0 => Some(1.0),
                1 if params.admit_neighbors => Some(params.neighbor_penalty),
                _ => None,
            }
        })
        .collect())
}

/// Penalized length of a tour under a context; `None` if inadmissible.
pub fn context_tour_length(
    graph: &ConstructionGraph,
    ctx: &AcoContext,
    params: &AcoParams,
    tour: &[usize],
) -> Result<Option<f64>, AcoError> {
    let adm = admissibility(graph, ctx, params)?;
    let mut total = 0.0;
    for w in tour.windows(2) {
        let (Some(len), Some(m)) = (graph.length(w[0], w[1]), adm[w[1]]) else {
            return Ok(None);
        };
        total += len * m;
    }
    Ok(Some(total))
}

/// Runs the colony for one decision and returns the redundancy ratio of
/// the best tour found.
pub fn aco_run<R: Rng + ?Sized>(
    graph: &ConstructionGraph,
    ctx: &AcoContext,
    params: &AcoParams,
    rng: &mut R,
) -> Result<AcoOutcome, AcoError> {
    params.validate()?;
    let adm = admissibility(graph, ctx, params)?;
    let mut pher = PheromoneState::new(graph.node_count(), params);
    let mut best: Option<(Vec<usize>, f64)> = None;

    for _ in 0..params.iterations {
        let mut iter_best: Option<(Vec<usize>, f64)> = None;
        for _ in 0..params.ants {
            let mut tour = vec![graph.start()];
            let mut cost = 0.0;
            loop {
                let here = *tour.last().expect("non-empty");
                let cands: Vec<(Arc, f64)> = graph
                    .candidate_list(here)
                    .into_iter()
                    .filter_map(|a| adm[a.to].map(|m| (a, m)))
                    .collect();
                if cands.is_empty() {
                    break;
                }
                let weights: Vec<f64> = cands
                    .iter()
                    .map(|(a, m)| pher.tau[a.from][a.to].powf(params.alpha) * (a.heuristic / m).powf(params.beta))
                    .collect();
                let total: f64 = weights.iter().sum();
                let mut pick = rng.gen::<f64>() * total;
                let mut chosen = cands.len() - 1;
                for (i, w) in weights.iter().enumerate() {
                    if pick < *w {
                        chosen = i;
                        break;
                    }
                    pick -= w;
                }
                let (arc, m) = cands[chosen];
                cost += arc.length * m;
                tour.push(arc.to);
            }
            if tour.len() == graph.layers.len() && iter_best.as_ref().is_none_or(|(_, c)| cost < *c) {
                iter_best = Some((tour, cost));
            }
        }
        pher.evaporate();
        if let Some((tour, cost)) = iter_best {
            pher.deposit(&tour, 1.0 / cost);
            if best.as_ref().is_none_or(|(_, c)| cost < *c) {
                best = Some((tour, cost));
            }
        }
    }
    let (best_tour, _) = best.expect("every layer has an admissible node, so ants always finish");
    let best_length = graph.tour_length(&best_tour);
    Ok(AcoOutcome {
        ratio: graph.length_to_ratio(best_length),
        best_tour,
        best_length,
    })
}

/// Best tour by exhaustive enumeration (the colony's target).
pub fn enumerate_best(graph: &ConstructionGraph, ctx: &AcoContext, params: &AcoParams) -> Result<AcoOutcome, AcoError> {
    let mut best: Option<(Vec<usize>, f64)> = None;
    for t in graph.all_tours() {
        if let Some(c) = context_tour_length(graph, ctx, params, &t)? {
            if best.as_ref().is_none_or(|(_, bc)| c < *bc) {
                best = Some((t, c));
            }
        }
    }
    let (best_tour, _) = best.expect("the pinned tour is always admissible");
    let best_length = graph.tour_length(&best_tour);
    Ok(AcoOutcome {
        ratio: graph.length_to_ratio(best_length),
        best_tour,
        best_length,
    })
}
