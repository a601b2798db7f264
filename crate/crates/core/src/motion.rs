//! Motion and spatial features of video frames, offline Ward clustering and
//! motion-intensity classification.

use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fuzzy::LinguisticVariable;
use crate::rnn::{RnnError, RnnModel};
use crate::video::{FrameRecord, FrameType, VideoTrace};

#[derive(Debug, Error, PartialEq)]
pub enum MotionError {
    #[error("frame {0} is not a predicted frame with motion vectors")]
    NotPredicted(usize),
    #[error("frame {0} has vectors of zero total length (static frame)")]
    DegenerateStatic(usize),
    #[error("temporal intensity needs at least one macroblock")]
    NoMacroblocks,
    #[error("frame type {0} appears in the layout but has no frames")]
    MissingType(FrameType),
    #[error("clustering needs at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("requested {k} clusters from {n} samples")]
    TooManyClusters { k: usize, n: usize },
    #[error("sample {0} has non-finite or mismatched features")]
    BadFeatures(usize),
    #[error("classifier is not trained")]
    Untrained,
    #[error("classifier expects {expected} features, got {got}")]
    FeatureCount { expected: usize, got: usize },
    #[error(transparent)]
    Rnn(#[from] RnnError),
}

/// Motion intensity class and its natural resilience to packet loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum IntensityClass {
    Low,
    Medium,
    High,
}

impl IntensityClass {
    pub const ALL: [IntensityClass; 3] = [IntensityClass::Low, IntensityClass::Medium, IntensityClass::High];

    /// Loss rate up to which a sequence of this class stays watchable
    /// without protection.
    pub fn natural_resilience_plr(self) -> f64 {
        match self {
            IntensityClass::Low => 0.20,
            IntensityClass::Medium => 0.10,
            IntensityClass::High => 0.06,
        }
    }

    pub fn severity(self) -> usize {
        self as usize
    }

    pub fn from_severity(s: usize) -> Option<Self> {
        Self::ALL.get(s).copied()
    }
}

impl fmt::Display for IntensityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Vector count over total vector length of a predicted frame.
pub fn mv_ratio(frame: &FrameRecord) -> Result<f64, MotionError> {
    if frame.kind == FrameType::I || frame.mv_count == 0 {
        return Err(MotionError::NotPredicted(frame.index));
    }
    if frame.mv_total_distance <= 0.0 {
        return Err(MotionError::DegenerateStatic(frame.index));
    }
    Ok(frame.mv_count as f64 / frame.mv_total_distance)
}

pub fn macroblock_area(mb_width: u32, mb_height: u32) -> u64 {
    assert!(mb_width > 0 && mb_height > 0, "macroblock sides must be positive");
    u64::from(mb_width) * u64::from(mb_height)
}

/// Mean displaced pixel mass per macroblock.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct TemporalIntensity(pub f64);

/// Mean over macroblocks of `area × |MV|`.
pub fn temporal_intensity(per_mb: &[(f64, f64)]) -> Result<TemporalIntensity, MotionError> {
    if per_mb.is_empty() {
        return Err(MotionError::NoMacroblocks);
    }
    let sum: f64 = per_mb.iter().map(|(area, len)| area * len).sum();
    Ok(TemporalIntensity(sum / per_mb.len() as f64))
}

/// Temporal intensity from a frame's aggregates: every macroblock has the
/// frame's macroblock area, so the sum collapses to
/// `area × Σ|MV| / nMB`.
pub fn frame_temporal_intensity(frame: &FrameRecord) -> TemporalIntensity {
    if frame.mb_count == 0 {
        return TemporalIntensity(0.0);
    }
    let area = macroblock_area(frame.mb_width, frame.mb_height) as f64;
    TemporalIntensity(area * frame.mv_total_distance / frame.mb_count as f64)
}

/// Per-type mean frame sizes and their normalised fractions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizedSizes {
    pub mu_i: f64,
    pub mu_p: f64,
    pub mu_b: f64,
    pub nhat_i: f64,
    pub nhat_p: f64,
    pub nhat_b: f64,
}

impl NormalizedSizes {
    pub fn from_means(mu_i: f64, mu_p: f64, mu_b: f64) -> Self {
        let total = mu_i + mu_p + mu_b;
        let frac = |m: f64| if total > 0.0 { m / total } else { 0.0 };
        Self {
            mu_i,
            mu_p,
            mu_b,
            nhat_i: frac(mu_i),
            nhat_p: frac(mu_p),
            nhat_b: frac(mu_b),
        }
    }

    pub fn fraction(&self, kind: FrameType) -> f64 {
        match kind {
            FrameType::I => self.nhat_i,
            FrameType::P => self.nhat_p,
            FrameType::B => self.nhat_b,
        }
    }
}

pub fn normalize_frame_sizes(trace: &VideoTrace) -> Result<NormalizedSizes, MotionError> {
    let mut sums = [0.0f64; 3];
    let mut counts = [0usize; 3];
    for f in &trace.frames {
        let t = f.kind.code() as usize;
        sums[t] += f.size_bytes as f64;
        counts[t] += 1;
    }
    let mut means = [0.0f64; 3];
    for kind in [FrameType::I, FrameType::P, FrameType::B] {
        let t = kind.code() as usize;
        let in_layout = (0..trace.gop.n_ratio).any(|o| trace.gop.kind_at_offset(o) == kind);
        if counts[t] == 0 {
            if in_layout {
                return Err(MotionError::MissingType(kind));
            }
        } else {
            means[t] = sums[t] / counts[t] as f64;
        }
    }
    Ok(NormalizedSizes::from_means(means[0], means[1], means[2]))
}

/// Where to cut the dendrogram.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClusterCut {
    Clusters(usize),
    LinkageDistance(f64),
}

/// One agglomeration step. Cluster ids follow the usual convention: the
/// original samples are `0..n`, the cluster created at step `s` is `n + s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Merge {
    pub step: usize,
    pub distance: f64,
    pub left: usize,
    pub right: usize,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterModel {
    pub assignments: Vec<usize>,
    pub merges: Vec<Merge>,
    pub cluster_count: usize,
}

impl ClusterModel {
    pub fn write_assignments<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "sample_id,cluster_id")?;
        for (i, c) in self.assignments.iter().enumerate() {
            writeln!(out, "{i},{c}")?;
        }
        Ok(())
    }

    pub fn write_merges<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "step,distance,left,right")?;
        for m in &self.merges {
            writeln!(out, "{},{},{},{}", m.step, m.distance, m.left, m.right)?;
        }
        Ok(())
    }

    /// Re-cuts the stored hierarchy.
    pub fn recut(&self, cut: ClusterCut) -> Result<ClusterModel, MotionError> {
        let n = self.assignments.len();
        let merges_to_apply = match cut {
            ClusterCut::Clusters(k) => {
                if k == 0 || k > n {
                    return Err(MotionError::TooManyClusters { k, n });
                }
                n - k
            }
            ClusterCut::LinkageDistance(ld) => self.merges.iter().take_while(|m| m.distance <= ld).count(),
        };
        Ok(cut_hierarchy(n, &self.merges, merges_to_apply))
    }
}

/// Z-scores every feature dimension; constant dimensions become 0.
pub fn standardize(samples: &[Vec<f64>]) -> Vec<Vec<f64>> {
    if samples.is_empty() {
        return Vec::new();
    }
    let dims = samples[0].len();
    let n = samples.len() as f64;
    let mut mean = vec![0.0; dims];
    for s in samples {
        for (m, v) in mean.iter_mut().zip(s) {
            *m += v / n;
        }
    }
    let mut sd = vec![0.0; dims];
    for s in samples {
        for d in 0..dims {
            sd[d] += (s[d] - mean[d]).powi(2) / n;
        }
    }
    for v in &mut sd {
        *v = v.sqrt();
    }
    samples
        .iter()
        .map(|s| {
            (0..dims)
                .map(|d| if sd[d] > 0.0 { (s[d] - mean[d]) / sd[d] } else { 0.0 })
                .collect()
        })
        .collect()
}

/// Agglomerative clustering with Ward linkage over Euclidean distance.
///
/// Merge distances use the Lance-Williams recurrence for Ward's criterion,
/// so the sequence is non-decreasing. Features are used as given; call
/// [`standardize`] first to weigh dimensions equally.
pub fn ward_cluster(samples: &[Vec<f64>], cut: ClusterCut) -> Result<ClusterModel, MotionError> {
    let n = samples.len();
    if n < 2 {
        return Err(MotionError::TooFewSamples(n));
    }
    if let ClusterCut::Clusters(k) = cut {
        if k == 0 || k > n {
            return Err(MotionError::TooManyClusters { k, n });
        }
    }
    let dims = samples[0].len();
    for (i, s) in samples.iter().enumerate() {
        if s.len() != dims || s.iter().any(|v| !v.is_finite()) {
            return Err(MotionError::BadFeatures(i));
        }
    }

    let mut dist = vec![vec![0.0f64; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = samples[i]
                .iter()
                .zip(&samples[j])
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt();
            dist[i][j] = d;
            dist[j][i] = d;
        }
    }
    let mut active: Vec<bool> = vec![true; n];
    let mut size: Vec<usize> = vec![1; n];
    let mut label: Vec<usize> = (0..n).collect();
    let mut merges = Vec::with_capacity(n - 1);

    for step in 0..n - 1 {
        let mut best = (f64::INFINITY, 0, 0);
        for i in 0..n {
            if !active[i] {
                continue;
            }
            for j in (i + 1)..n {
                if active[j] && dist[i][j] < best.0 {
                    best = (dist[i][j], i, j);
                }
            }
        }
        let (d_ij, i, j) = best;
        let (ni, nj) = (size[i] as f64, size[j] as f64);
        for k in 0..n {
            if !active[k] || k == i || k == j {
                continue;
            }
            let nk = size[k] as f64;
            let d2 =
                ((ni + nk) * dist[i][k].powi(2) + (nj + nk) * dist[j][k].powi(2) - nk * d_ij.powi(2)) / (ni + nj + nk);
            let d = d2.max(0.0).sqrt();
            dist[i][k] = d;
            dist[k][i] = d;
        }
        let (left, right) = (label[i].min(label[j]), label[i].max(label[j]));
        active[j] = false;
        size[i] += size[j];
        label[i] = n + step;
        merges.push(Merge {
            step,
            distance: d_ij,
            left,
            right,
            size: size[i],
        });
    }

    let merges_to_apply = match cut {
        ClusterCut::Clusters(k) => n - k,
        ClusterCut::LinkageDistance(ld) => merges.iter().take_while(|m| m.distance <= ld).count(),
    };
    Ok(cut_hierarchy(n, &merges, merges_to_apply))
}

fn cut_hierarchy(n: usize, merges: &[Merge], apply: usize) -> ClusterModel {
    // union-find over cluster ids 0..n+apply
    let mut parent: Vec<usize> = (0..n + apply).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for m in &merges[..apply] {
        let id = n + m.step;
        let a = find(&mut parent, m.left);
        let b = find(&mut parent, m.right);
        parent[a] = id;
        parent[b] = id;
    }
    let mut ids = std::collections::HashMap::new();
    let assignments: Vec<usize> = (0..n)
        .map(|s| {
            let root = find(&mut parent, s);
            let next = ids.len();
            *ids.entry(root).or_insert(next)
        })
        .collect();
    ClusterModel {
        assignments,
        merges: merges.to_vec(),
        cluster_count: ids.len(),
    }
}

/// Mean feature vector of each cluster.
pub fn cluster_centroids(samples: &[Vec<f64>], model: &ClusterModel) -> Vec<Vec<f64>> {
    let dims = samples.first().map_or(0, Vec::len);
    let mut sums = vec![vec![0.0; dims]; model.cluster_count];
    let mut counts = vec![0usize; model.cluster_count];
    for (s, &c) in samples.iter().zip(&model.assignments) {
        counts[c] += 1;
        for (acc, v) in sums[c].iter_mut().zip(s) {
            *acc += v;
        }
    }
    sums.into_iter()
        .zip(counts)
        .map(|(s, c)| s.into_iter().map(|v| v / c.max(1) as f64).collect())
        .collect()
}

/// Maps motion features onto an [`IntensityClass`].
#[derive(Debug, Clone)]
pub enum IntensityClassifier {
    Untrained,
    /// Maximum membership over a three-term motion variable whose terms are
    /// ordered Low, Medium, High. Input: `[mv_total_distance]` (or any
    /// scalar on the variable's universe).
    Fuzzy(LinguisticVariable),
    /// Thresholded neural score.
    Rnn {
        model: RnnModel,
        cuts: (f64, f64),
    },
    /// Nearest labelled centroid.
    Centroids(Vec<(Vec<f64>, IntensityClass)>),
}

impl IntensityClassifier {
    /// Labels clusters by ascending value of feature `key`: with three
    /// clusters Low/Medium/High, with two Low and High (the merged
    /// medium/high cluster is treated as High).
    pub fn from_clusters(samples: &[Vec<f64>], model: &ClusterModel, key: usize) -> Self {
        let mut centroids = cluster_centroids(samples, model);
        centroids.sort_by(|a, b| a[key].total_cmp(&b[key]));
        let labels: Vec<IntensityClass> = match centroids.len() {
            1 => vec![IntensityClass::Medium],
            2 => vec![IntensityClass::Low, IntensityClass::High],
            k => (0..k)
                .map(|i| IntensityClass::from_severity((i * 3) / k).unwrap_or(IntensityClass::High))
                .collect(),
        };
        IntensityClassifier::Centroids(centroids.into_iter().zip(labels).collect())
    }

    pub fn classify(&self, features: &[f64]) -> Result<IntensityClass, MotionError> {
        match self {
            IntensityClassifier::Untrained => Err(MotionError::Untrained),
            IntensityClassifier::Fuzzy(var) => {
                let x = *features
                    .first()
                    .ok_or(MotionError::FeatureCount { expected: 1, got: 0 })?;
                let degrees: Vec<f64> = var.terms.iter().map(|t| t.membership(x)).collect();
                let mut best = 0;
                for (i, d) in degrees.iter().enumerate() {
                    if *d > degrees[best] {
                        best = i;
                    }
                }
                if degrees[best] <= 0.0 {
                    // outside every support: saturate toward the nearer end
                    let (lo, hi) = var.universe;
                    return Ok(if x - lo < hi - x {
                        IntensityClass::Low
                    } else {
                        IntensityClass::High
                    });
                }
                Ok(IntensityClass::from_severity(best).unwrap_or(IntensityClass::High))
            }
            IntensityClassifier::Rnn { model, cuts } => {
                let score = model.eval(features)?;
                Ok(score_to_class(score, *cuts))
            }
            IntensityClassifier::Centroids(c) => {
                if c.is_empty() {
                    return Err(MotionError::Untrained);
                }
                let dims = c[0].0.len();
                if features.len() != dims {
                    return Err(MotionError::FeatureCount {
                        expected: dims,
                        got: features.len(),
                    });
                }
                let d = |v: &[f64]| v.iter().zip(features).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
                let best = c.iter().min_by(|a, b| d(&a.0).total_cmp(&d(&b.0))).expect("non-empty");
                Ok(best.1)
            }
        }
    }
}

/// Splits a [0, 1] score into three classes at the two cut points.
pub fn score_to_class(score: f64, cuts: (f64, f64)) -> IntensityClass {
    if score < cuts.0 {
        IntensityClass::Low
    } else if score < cuts.1 {
        IntensityClass::Medium
    } else {
        IntensityClass::High
    }
}

pub fn classify_intensity(features: &[f64], classifier: &IntensityClassifier) -> Result<IntensityClass, MotionError> {
    classifier.classify(features)
}
