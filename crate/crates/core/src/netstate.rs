//! Network-condition inputs: windowed loss rate, node positions, convex
//! hulls (exact QuickHull and strip-based approximation) and density.

use std::io::BufRead;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NetError {
    #[error("hull has zero area; density is undefined")]
    ZeroArea,
    #[error("snapshot has no nodes")]
    NoNodes,
    #[error("loss rate {0} outside [0, 1]")]
    BadPlr(f64),
    #[error("strip count must be at least 1")]
    NoStrips,
    #[error("positions line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Planar position in metres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodePosition {
    pub x: f64,
    pub y: f64,
}

impl NodePosition {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

fn cross(o: NodePosition, a: NodePosition, b: NodePosition) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

fn lex(a: &NodePosition, b: &NodePosition) -> std::cmp::Ordering {
    a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSnapshot {
    pub positions: Vec<NodePosition>,
    pub recent_plr: f64,
    pub snr_db: Option<f64>,
}

impl NetworkSnapshot {
    pub fn new(positions: Vec<NodePosition>, recent_plr: f64, snr_db: Option<f64>) -> Result<Self, NetError> {
        if positions.is_empty() {
            return Err(NetError::NoNodes);
        }
        if !(0.0..=1.0).contains(&recent_plr) {
            return Err(NetError::BadPlr(recent_plr));
        }
        Ok(Self {
            positions,
            recent_plr,
            snr_db,
        })
    }
}

/// Convex polygon, counter-clockwise, starting at the lowest-leftmost
/// vertex. Collinear boundary points are not vertices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hull {
    pub vertices: Vec<NodePosition>,
    pub area: f64,
}

impl Hull {
    fn from_ccw(mut vertices: Vec<NodePosition>) -> Self {
        if let Some(start) = (0..vertices.len()).min_by(|&a, &b| lex(&vertices[a], &vertices[b])) {
            vertices.rotate_left(start);
        }
        let area = polygon_area(&vertices);
        Self { vertices, area }
    }

    /// Hull of fewer than three distinct points or of collinear points:
    /// the extreme points, zero area.
    fn degenerate(points: &[NodePosition]) -> Self {
        let lo = points.iter().min_by(|a, b| lex(a, b));
        let hi = points.iter().max_by(|a, b| lex(a, b));
        let vertices = match (lo, hi) {
            (Some(a), Some(b)) if a != b => vec![*a, *b],
            (Some(a), _) => vec![*a],
            _ => vec![],
        };
        Self { vertices, area: 0.0 }
    }
}

/// Shoelace area of a simple polygon (orientation-independent).
pub fn polygon_area(vertices: &[NodePosition]) -> f64 {
    if vertices.len() < 3 {
        return 0.0;
    }
    let mut twice = 0.0;
    for (i, a) in vertices.iter().enumerate() {
        let b = vertices[(i + 1) % vertices.len()];
        twice += a.x * b.y - b.x * a.y;
    }
    0.5 * twice.abs()
}

/// Points strictly to the right of the directed line p→q, hull vertices
/// between p and q in counter-clockwise order.
fn quickhull_side(p: NodePosition, q: NodePosition, points: &[NodePosition], out: &mut Vec<NodePosition>) {
    let mut far: Option<(NodePosition, f64)> = None;
    for &x in points {
        let d = -cross(p, q, x);
        if d > 0.0 && far.is_none_or(|(_, best)| d > best) {
            far = Some((x, d));
        }
    }
    let Some((c, _)) = far else {
        return;
    };
    let left: Vec<NodePosition> = points.iter().copied().filter(|&x| cross(p, c, x) < 0.0).collect();
    let right: Vec<NodePosition> = points.iter().copied().filter(|&x| cross(c, q, x) < 0.0).collect();
    quickhull_side(p, c, &left, out);
    out.push(c);
    quickhull_side(c, q, &right, out);
}

/// Exact convex hull by QuickHull.
pub fn quickhull(points: &[NodePosition]) -> Hull {
    if points.len() < 3 {
        return Hull::degenerate(points);
    }
    let a = *points.iter().min_by(|a, b| lex(a, b)).expect("non-empty");
    let b = *points.iter().max_by(|a, b| lex(a, b)).expect("non-empty");
    let below: Vec<NodePosition> = points.iter().copied().filter(|&x| cross(a, b, x) < 0.0).collect();
    let above: Vec<NodePosition> = points.iter().copied().filter(|&x| cross(b, a, x) < 0.0).collect();
    if below.is_empty() && above.is_empty() {
        return Hull::degenerate(points);
    }
    let mut v = vec![a];
    quickhull_side(a, b, &below, &mut v);
    v.push(b);
    quickhull_side(b, a, &above, &mut v);
    Hull::from_ccw(v)
}

/// Andrew's monotone chain; used to assemble the approximate hull.
fn monotone_chain(mut pts: Vec<NodePosition>) -> Vec<NodePosition> {
    pts.sort_by(lex);
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut lower: Vec<NodePosition> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<NodePosition> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Approximate hull: the plane is cut into `strips` vertical strips between
/// the extreme x values; one pass keeps each strip's lowest and highest
/// point plus the global leftmost and rightmost points (with their lowest
/// and highest y), and those candidates are joined into a convex polygon.
/// Every vertex is an input point, so the area never exceeds the exact one.
pub fn bfp_hull(points: &[NodePosition], strips: usize) -> Result<Hull, NetError> {
    if strips == 0 {
        return Err(NetError::NoStrips);
    }
    if points.len() < 3 {
        return Ok(Hull::degenerate(points));
    }
    let (xmin, xmax) = points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
        (lo.min(p.x), hi.max(p.x))
    });
    let width = (xmax - xmin) / strips as f64;
    let mut lows: Vec<Option<NodePosition>> = vec![None; strips];
    let mut highs: Vec<Option<NodePosition>> = vec![None; strips];
    // [left-low, left-high, right-low, right-high]
    let mut ends: [Option<NodePosition>; 4] = [None; 4];
    let keep = |slot: &mut Option<NodePosition>, p: NodePosition, better: fn(f64, f64) -> bool| {
        if slot.is_none_or(|s| better(p.y, s.y)) {
            *slot = Some(p);
        }
    };
    for &p in points {
        let s = if width > 0.0 {
            (((p.x - xmin) / width) as usize).min(strips - 1)
        } else {
            0
        };
        keep(&mut lows[s], p, |a, b| a < b);
        keep(&mut highs[s], p, |a, b| a > b);
        if p.x == xmin {
            keep(&mut ends[0], p, |a, b| a < b);
            keep(&mut ends[1], p, |a, b| a > b);
        }
        if p.x == xmax {
            keep(&mut ends[2], p, |a, b| a < b);
            keep(&mut ends[3], p, |a, b| a > b);
        }
    }
    let candidates: Vec<NodePosition> = lows.into_iter().chain(highs).chain(ends).flatten().collect();
    let v = monotone_chain(candidates);
    if v.len() < 3 {
        return Ok(Hull::degenerate(points));
    }
    let hull = Hull::from_ccw(v);
    if hull.area == 0.0 {
        return Ok(Hull::degenerate(points));
    }
    Ok(hull)
}

/// Nodes per square metre inside the hull.
pub fn density(snapshot: &NetworkSnapshot, hull: &Hull) -> Result<f64, NetError> {
    if hull.area <= 0.0 {
        return Err(NetError::ZeroArea);
    }
    Ok(snapshot.positions.len() as f64 / hull.area)
}

/// Loss rate over the most recent packets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowedPlr {
    pub plr: f64,
    /// Number of packets the estimate covers (0 for an empty trace).
    pub span: usize,
}

impl WindowedPlr {
    pub fn is_empty(&self) -> bool {
        self.span == 0
    }
}

pub fn windowed_plr(trace: &[bool], window: usize) -> WindowedPlr {
    let span = window.max(1).min(trace.len());
    if span == 0 {
        return WindowedPlr { plr: 0.0, span: 0 };
    }
    let lost = trace[trace.len() - span..].iter().filter(|d| !**d).count();
    WindowedPlr {
        plr: lost as f64 / span as f64,
        span,
    }
}

/// One row of a position snapshot file.
#[derive(Debug, Clone, PartialEq)]
pub struct PositionRow {
    pub node_id: String,
    pub position: NodePosition,
    pub snr_db: Option<f64>,
}

/// Reads `node_id,x,y[,snr_db]` lines. Blank lines and a header line whose
/// x field is not numeric are skipped.
pub fn read_positions<R: BufRead>(input: R) -> Result<Vec<PositionRow>, NetError> {
    let mut rows = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if !(3..=4).contains(&fields.len()) {
            return Err(NetError::Parse {
                line: i + 1,
                reason: format!("expected 3 or 4 fields, got {}", fields.len()),
            });
        }
        let num = |s: &str| s.parse::<f64>().ok().filter(|v| v.is_finite());
        let (Some(x), Some(y)) = (num(fields[1]), num(fields[2])) else {
            if i == 0 {
                continue;
            }
            return Err(NetError::Parse {
                line: i + 1,
                reason: "coordinates must be finite numbers".into(),
            });
        };
        let snr_db = match fields.get(3) {
            Some(s) => Some(num(s).ok_or_else(|| NetError::Parse {
                line: i + 1,
                reason: "bad snr_db".into(),
            })?),
            None => None,
        };
        rows.push(PositionRow {
            node_id: fields[0].to_string(),
            position: NodePosition::new(x, y),
            snr_db,
        });
    }
    Ok(rows)
}

/// Mean SNR over the rows that carry one.
pub fn fused_snr(rows: &[PositionRow]) -> Option<f64> {
    let v: Vec<f64> = rows.iter().filter_map(|r| r.snr_db).collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}
