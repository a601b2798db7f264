//! Built-in linguistic variables and rule bases.
//!
//! Term bounds for motion, packet loss, frame sizes and redundancy are fixed
//! reference constants. Rule tables beyond the anchor rules are filled in
//! by a severity schema (see `docs/rule-tables.md`): every term carries a
//! severity (0 = benign, 2 = harsh) and a rule's consequent is the ceiling
//! of the mean severity of its antecedent terms.

use serde::{Deserialize, Serialize};

use super::{Expr, FuzzyEngine, FuzzyTerm, HfsGraph, HfsNode, HfsSource, LinguisticVariable, MamdaniRule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BuiltinKind {
    UavFec,
    MintFec,
    Corvette,
    Shield,
}

/// A flat engine or a hierarchy, depending on the mechanism.
#[derive(Debug, Clone, PartialEq)]
pub enum BuiltinSystem {
    Engine(FuzzyEngine),
    Graph(HfsGraph),
}

impl BuiltinSystem {
    pub fn output(&self) -> &LinguisticVariable {
        match self {
            BuiltinSystem::Engine(e) => &e.output,
            BuiltinSystem::Graph(g) => &g.output_node().engine.output,
        }
    }
}

pub fn builtin_engine(kind: BuiltinKind) -> BuiltinSystem {
    match kind {
        BuiltinKind::UavFec => BuiltinSystem::Engine(uavfec_engine()),
        BuiltinKind::MintFec => BuiltinSystem::Engine(mintfec_engine()),
        BuiltinKind::Corvette => BuiltinSystem::Graph(corvette_graph()),
        BuiltinKind::Shield => BuiltinSystem::Graph(shield_graph()),
    }
}

pub const REDUNDANCY_UNIVERSE: (f64, f64) = (0.55, 1.0);

fn var(name: &str, universe: (f64, f64), terms: Vec<FuzzyTerm>) -> LinguisticVariable {
    LinguisticVariable::new(name, universe, terms).expect("valid built-in variable")
}

fn plr_variable(low: f64, med: (f64, f64), high: f64) -> LinguisticVariable {
    var(
        "PacketLossRate",
        (0.0, 100.0),
        vec![
            FuzzyTerm::triangular("LOW", 0.0, low),
            FuzzyTerm::triangular("MEDIUM", med.0, med.1),
            FuzzyTerm::triangular("HIGH", high, 100.0),
        ],
    )
}

/// Motion intensity as total motion-vector length per frame.
pub fn uavfec_motion() -> LinguisticVariable {
    var(
        "Motion",
        (0.0, 200_000.0),
        vec![
            FuzzyTerm::shoulder_left("LOW", 10_000.0, 30_000.0),
            FuzzyTerm::triangular("MEDIUM", 21_000.0, 80_000.0),
            FuzzyTerm::shoulder_right("HIGH", 60_000.0, 130_000.0),
        ],
    )
}

pub fn uavfec_plr() -> LinguisticVariable {
    plr_variable(15.0, (5.0, 30.0), 20.0)
}

pub fn mintfec_plr() -> LinguisticVariable {
    plr_variable(10.0, (5.0, 20.0), 15.0)
}

pub fn corvette_plr() -> LinguisticVariable {
    plr_variable(11.0, (5.0, 22.0), 17.0)
}

pub fn shield_plr() -> LinguisticVariable {
    plr_variable(12.0, (5.0, 23.0), 19.0)
}

pub fn redundancy() -> LinguisticVariable {
    var(
        "RedundancyAmount",
        REDUNDANCY_UNIVERSE,
        vec![
            FuzzyTerm::shoulder_left("SMALL", 0.55, 0.70),
            FuzzyTerm::triangular("MEDIUM", 0.60, 0.80),
            FuzzyTerm::triangular("LARGE", 0.75, 1.0),
        ],
    )
}

fn size_variable(name: &str, small: (f64, f64), medium: (f64, f64), large: (f64, f64)) -> LinguisticVariable {
    var(
        name,
        (0.0, 1.0),
        vec![
            FuzzyTerm::shoulder_left("SMALL", small.0, small.1),
            FuzzyTerm::triangular("MEDIUM", medium.0, medium.1),
            FuzzyTerm::shoulder_right("LARGE", large.0, large.1),
        ],
    )
}

/// Normalized I-frame size (fraction of the per-type mean sizes).
pub fn mint_isz() -> LinguisticVariable {
    size_variable("Isz", (0.274, 0.459), (0.274, 0.651), (0.502, 0.757))
}

pub fn mint_psz() -> LinguisticVariable {
    size_variable("Psz", (0.162, 0.219), (0.162, 0.325), (0.288, 0.333))
}

pub fn mint_bsz() -> LinguisticVariable {
    size_variable("Bsz", (0.081, 0.13), (0.081, 0.219), (0.205, 0.252))
}

/// Temporal intensity (mean of macroblock area × vector length).
/// Estimated bounds, not reference constants.
pub fn temporal_intensity() -> LinguisticVariable {
    var(
        "TemporalIntensity",
        (0.0, 150_000.0),
        vec![
            FuzzyTerm::shoulder_left("LOW", 5_000.0, 20_000.0),
            FuzzyTerm::triangular("MEDIUM", 13_000.0, 52_000.0),
            FuzzyTerm::shoulder_right("HIGH", 40_000.0, 85_000.0),
        ],
    )
}

/// Frame type as its numeric code (I = 0, P = 1, B = 2).
pub fn frame_type() -> LinguisticVariable {
    var(
        "FrameType",
        (-1.0, 3.0),
        vec![
            FuzzyTerm::triangular("I", -1.0, 1.0),
            FuzzyTerm::triangular("P", 0.0, 2.0),
            FuzzyTerm::triangular("B", 1.0, 3.0),
        ],
    )
}

/// A class index 0..=2 carried as a crisp number.
pub fn class_variable(name: &str) -> LinguisticVariable {
    var(
        name,
        (-1.0, 3.0),
        vec![
            FuzzyTerm::triangular("LOW", -1.0, 1.0),
            FuzzyTerm::triangular("MEDIUM", 0.0, 2.0),
            FuzzyTerm::triangular("HIGH", 1.0, 3.0),
        ],
    )
}

/// Intermediate hierarchy level on [0, 1].
pub fn level_variable(name: &str) -> LinguisticVariable {
    var(
        name,
        (0.0, 1.0),
        vec![
            FuzzyTerm::shoulder_left("LOW", 0.2, 0.5),
            FuzzyTerm::triangular("MEDIUM", 0.2, 0.8),
            FuzzyTerm::shoulder_right("HIGH", 0.5, 0.8),
        ],
    )
}

/// Node density in nodes per square kilometre.
pub fn density() -> LinguisticVariable {
    var(
        "Density",
        (0.0, 400.0),
        vec![
            FuzzyTerm::shoulder_left("SPARSE", 20.0, 60.0),
            FuzzyTerm::triangular("MODERATE", 40.0, 160.0),
            FuzzyTerm::shoulder_right("DENSE", 120.0, 250.0),
        ],
    )
}

/// Distance to the next hop in metres.
pub fn distance() -> LinguisticVariable {
    var(
        "Distance",
        (0.0, 500.0),
        vec![
            FuzzyTerm::shoulder_left("NEAR", 50.0, 150.0),
            FuzzyTerm::triangular("MEDIUM", 100.0, 300.0),
            FuzzyTerm::shoulder_right("FAR", 250.0, 400.0),
        ],
    )
}

/// Signal-to-noise ratio in dB.
pub fn snr() -> LinguisticVariable {
    var(
        "SNR",
        (-10.0, 35.0),
        vec![
            FuzzyTerm::shoulder_left("POOR", -5.0, 10.0),
            FuzzyTerm::triangular("FAIR", -5.0, 25.0),
            FuzzyTerm::shoulder_right("GOOD", 10.0, 25.0),
        ],
    )
}

/// Per-term severities of an input in the schema.
struct Axis {
    var: usize,
    severity: Vec<usize>,
}

impl Axis {
    fn ordered(var: usize) -> Self {
        Axis {
            var,
            severity: vec![0, 1, 2],
        }
    }
}

/// Cartesian rule table: one rule per combination of input terms, with
/// consequent `map(severities)` clamped to the output's term range.
fn schema_rules(
    axes: &[Axis],
    guard: Option<Expr>,
    map: impl Fn(&[usize]) -> usize,
    out_terms: usize,
) -> Vec<MamdaniRule> {
    let mut rules = Vec::new();
    let mut idx = vec![0usize; axes.len()];
    loop {
        let sev: Vec<usize> = axes.iter().zip(&idx).map(|(a, &i)| a.severity[i]).collect();
        let mut ante = guard.clone();
        for (a, &i) in axes.iter().zip(&idx) {
            let atom = Expr::Is { var: a.var, term: i };
            ante = Some(match ante {
                None => atom,
                Some(e) => e.and(atom),
            });
        }
        rules.push(MamdaniRule {
            antecedent: ante.expect("at least one axis"),
            consequent: map(&sev).min(out_terms - 1),
        });

        let mut d = axes.len();
        loop {
            if d == 0 {
                return rules;
            }
            d -= 1;
            idx[d] += 1;
            if idx[d] < axes[d].severity.len() {
                break;
            }
            idx[d] = 0;
        }
    }
}

fn ceil_mean(s: &[usize]) -> usize {
    let n = s.len();
    s.iter().sum::<usize>().div_ceil(n)
}

fn engine(
    name: &str,
    inputs: Vec<LinguisticVariable>,
    output: LinguisticVariable,
    rules: Vec<MamdaniRule>,
) -> FuzzyEngine {
    FuzzyEngine::new(name, inputs, output, rules).expect("valid built-in engine")
}

/// Motion × packet loss → redundancy (9 rules).
pub fn uavfec_engine() -> FuzzyEngine {
    let rules = schema_rules(&[Axis::ordered(0), Axis::ordered(1)], None, ceil_mean, 3);
    engine("uavFEC", vec![uavfec_motion(), uavfec_plr()], redundancy(), rules)
}

/// Frame type, per-type normalized size, temporal intensity and packet loss
/// → redundancy (81 rules). Each frame type reads its own size variable; I
/// frames get one severity step more than P and B frames.
pub fn mintfec_engine() -> FuzzyEngine {
    let inputs = vec![
        frame_type(),
        mint_isz(),
        mint_psz(),
        mint_bsz(),
        temporal_intensity(),
        mintfec_plr(),
    ];
    let mut rules = Vec::new();
    for (ft, size_var) in [(0usize, 1usize), (1, 2), (2, 3)] {
        let guard = Expr::Is { var: 0, term: ft };
        let bump = usize::from(ft == 0);
        rules.extend(schema_rules(
            &[Axis::ordered(size_var), Axis::ordered(4), Axis::ordered(5)],
            Some(guard),
            |s| ceil_mean(s) + bump,
            3,
        ));
    }
    engine("MINT-FEC", inputs, redundancy(), rules)
}

fn node(name: &str, engine: FuzzyEngine, wiring: &[(&str, HfsSource)]) -> HfsNode {
    HfsNode {
        name: name.into(),
        engine,
        wiring: wiring.iter().map(|(v, s)| (v.to_string(), s.clone())).collect(),
    }
}

fn ext(name: &str) -> HfsSource {
    HfsSource::External(name.into())
}

fn from(name: &str) -> HfsSource {
    HfsSource::Node(name.into())
}

/// Density severities: sparse networks lose connectivity, dense ones suffer
/// interference; a moderate density is the benign case.
const DENSITY_SEVERITY: [usize; 3] = [1, 0, 2];

/// Shared upper layers: the video branch and the objective node.
fn video_and_objective(network_node: &str) -> Vec<HfsNode> {
    let motion = engine(
        "motion_activity",
        vec![temporal_intensity(), class_variable("SpatialClass")],
        level_variable("MotionActivity"),
        schema_rules(&[Axis::ordered(0), Axis::ordered(1)], None, ceil_mean, 3),
    );
    let video = engine(
        "video_details",
        vec![level_variable("MotionActivity"), frame_type()],
        level_variable("VideoDetails"),
        schema_rules(
            &[
                Axis::ordered(0),
                Axis {
                    var: 1,
                    severity: vec![1, 0, 0],
                },
            ],
            None,
            |s| s[0] + s[1],
            3,
        ),
    );
    let objective = engine(
        "objective",
        vec![level_variable("GeneralNetwork"), level_variable("VideoDetails")],
        redundancy(),
        schema_rules(&[Axis::ordered(0), Axis::ordered(1)], None, ceil_mean, 3),
    );
    vec![
        node(
            "motion_activity",
            motion,
            &[
                ("TemporalIntensity", ext("TemporalIntensity")),
                ("SpatialClass", ext("SpatialClass")),
            ],
        ),
        node(
            "video_details",
            video,
            &[
                ("MotionActivity", from("motion_activity")),
                ("FrameType", ext("FrameType")),
            ],
        ),
        node(
            "objective",
            objective,
            &[
                ("GeneralNetwork", from(network_node)),
                ("VideoDetails", from("video_details")),
            ],
        ),
    ]
}

fn general_network_node() -> HfsNode {
    let e = engine(
        "general_network",
        vec![level_variable("NetworkStatus"), level_variable("Surroundings")],
        level_variable("GeneralNetwork"),
        schema_rules(&[Axis::ordered(0), Axis::ordered(1)], None, ceil_mean, 3),
    );
    node(
        "general_network",
        e,
        &[
            ("NetworkStatus", from("network_status")),
            ("Surroundings", from("surroundings")),
        ],
    )
}

/// Names of the nodes re-evaluated at every hop (the network branch).
pub const NETWORK_NODES: [&str; 3] = ["network_status", "surroundings", "general_network"];

/// CORVETTE: network status (PLR, density) and surroundings (distance) feed
/// a general-network level; temporal intensity, spatial class and frame type
/// feed a video level; both meet in the objective node.
pub fn corvette_graph() -> HfsGraph {
    let status = engine(
        "network_status",
        vec![corvette_plr(), density()],
        level_variable("NetworkStatus"),
        schema_rules(
            &[
                Axis::ordered(0),
                Axis {
                    var: 1,
                    severity: DENSITY_SEVERITY.to_vec(),
                },
            ],
            None,
            ceil_mean,
            3,
        ),
    );
    let surroundings = engine(
        "surroundings",
        vec![distance()],
        level_variable("Surroundings"),
        schema_rules(&[Axis::ordered(0)], None, ceil_mean, 3),
    );
    let mut nodes = vec![
        node(
            "network_status",
            status,
            &[("PacketLossRate", ext("PacketLossRate")), ("Density", ext("Density"))],
        ),
        node("surroundings", surroundings, &[("Distance", ext("Distance"))]),
        general_network_node(),
    ];
    nodes.extend(video_and_objective("general_network"));
    HfsGraph::new("CORVETTE", nodes).expect("valid built-in hierarchy")
}

/// SHIELD: like CORVETTE, with SNR joining PLR in the network status and
/// density moving to the surroundings next to distance.
pub fn shield_graph() -> HfsGraph {
    let status = engine(
        "network_status",
        vec![snr(), shield_plr()],
        level_variable("NetworkStatus"),
        schema_rules(
            &[
                Axis {
                    var: 0,
                    severity: vec![2, 1, 0],
                },
                Axis::ordered(1),
            ],
            None,
            ceil_mean,
            3,
        ),
    );
    let surroundings = engine(
        "surroundings",
        vec![density(), distance()],
        level_variable("Surroundings"),
        schema_rules(
            &[
                Axis {
                    var: 0,
                    severity: DENSITY_SEVERITY.to_vec(),
                },
                Axis::ordered(1),
            ],
            None,
            ceil_mean,
            3,
        ),
    );
    let mut nodes = vec![
        node(
            "network_status",
            status,
            &[("SNR", ext("SNR")), ("PacketLossRate", ext("PacketLossRate"))],
        ),
        node(
            "surroundings",
            surroundings,
            &[("Density", ext("Density")), ("Distance", ext("Distance"))],
        ),
        general_network_node(),
    ];
    nodes.extend(video_and_objective("general_network"));
    HfsGraph::new("SHIELD", nodes).expect("valid built-in hierarchy")
}
