use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{FuzzyEngine, FuzzyError};

/// Where an engine input takes its crisp value from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum HfsSource {
    External(String),
    Node(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HfsNode {
    pub name: String,
    pub engine: FuzzyEngine,
    /// One entry per engine input variable: `(variable name, source)`.
    pub wiring: Vec<(String, HfsSource)>,
}

/// Layered composition of fuzzy engines. The last node is the output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HfsGraph {
    pub name: String,
    pub nodes: Vec<HfsNode>,
    order: Vec<usize>,
}

impl HfsGraph {
    /// Validates wiring (every engine input fed exactly once, node sources
    /// exist, no cycles) and fixes an evaluation order.
    pub fn new(name: &str, nodes: Vec<HfsNode>) -> Result<Self, FuzzyError> {
        if nodes.is_empty() {
            return Err(FuzzyError::Graph("empty hierarchy".into()));
        }
        let index: HashMap<&str, usize> = nodes.iter().enumerate().map(|(i, n)| (n.name.as_str(), i)).collect();
        if index.len() != nodes.len() {
            return Err(FuzzyError::Graph("duplicate node name".into()));
        }
        for n in &nodes {
            for var in &n.engine.inputs {
                let fed = n.wiring.iter().filter(|(v, _)| *v == var.name).count();
                if fed != 1 {
                    return Err(FuzzyError::Graph(format!(
                        "input {:?} of node {:?} is fed {fed} times",
                        var.name, n.name
                    )));
                }
            }
            for (var, src) in &n.wiring {
                if n.engine.input_index(var).is_none() {
                    return Err(FuzzyError::UnknownVariable(var.clone()));
                }
                if let HfsSource::Node(s) = src {
                    if !index.contains_key(s.as_str()) {
                        return Err(FuzzyError::Graph(format!("unknown node {s:?}")));
                    }
                }
            }
        }

        // depth-first topological order
        let mut state = vec![0u8; nodes.len()];
        let mut order = Vec::with_capacity(nodes.len());
        fn visit(
            i: usize,
            nodes: &[HfsNode],
            index: &HashMap<&str, usize>,
            state: &mut [u8],
            order: &mut Vec<usize>,
        ) -> Result<(), FuzzyError> {
            match state[i] {
                2 => return Ok(()),
                1 => return Err(FuzzyError::Graph(format!("cycle through {:?}", nodes[i].name))),
                _ => {}
            }
            state[i] = 1;
            for (_, src) in &nodes[i].wiring {
                if let HfsSource::Node(s) = src {
                    visit(index[s.as_str()], nodes, index, state, order)?;
                }
            }
            state[i] = 2;
            order.push(i);
            Ok(())
        }
        for i in 0..nodes.len() {
            visit(i, &nodes, &index, &mut state, &mut order)?;
        }
        Ok(Self {
            name: name.into(),
            nodes,
            order,
        })
    }

    /// Names of the external inputs the graph expects.
    pub fn external_inputs(&self) -> Vec<String> {
        let mut names: Vec<String> = Vec::new();
        for n in &self.nodes {
            for (_, src) in &n.wiring {
                if let HfsSource::External(e) = src {
                    if !names.contains(e) {
                        names.push(e.clone());
                    }
                }
            }
        }
        names
    }

    pub fn output_node(&self) -> &HfsNode {
        self.nodes.last().expect("non-empty")
    }

    /// Evaluates every node; returns the crisp output of each by name.
    ///
    /// `fixed` pins node outputs to given values (their engines are not
    /// evaluated), which lets a caller re-run only part of the hierarchy.
    pub fn evaluate(
        &self,
        externals: &[(&str, f64)],
        fixed: &[(&str, f64)],
    ) -> Result<HashMap<String, f64>, FuzzyError> {
        let mut ext: HashMap<&str, f64> = HashMap::new();
        for &(k, v) in externals {
            if ext.insert(k, v).is_some() {
                return Err(FuzzyError::DuplicateInput(k.into()));
            }
        }
        let mut out: HashMap<String, f64> = HashMap::new();
        for &(k, v) in fixed {
            out.insert(k.to_string(), v);
        }
        for &i in &self.order {
            let node = &self.nodes[i];
            if out.contains_key(&node.name) {
                continue;
            }
            let mut assignments = Vec::with_capacity(node.wiring.len());
            for (var, src) in &node.wiring {
                let value = match src {
                    HfsSource::External(e) => {
                        *ext.get(e.as_str()).ok_or_else(|| FuzzyError::MissingInput(e.clone()))?
                    }
                    HfsSource::Node(s) => *out
                        .get(s)
                        .ok_or_else(|| FuzzyError::Graph(format!("node {s:?} not evaluated")))?,
                };
                assignments.push((var.as_str(), value));
            }
            let r = node.engine.infer(&assignments)?;
            out.insert(node.name.clone(), r.value);
        }
        Ok(out)
    }

    pub fn infer(&self, externals: &[(&str, f64)]) -> Result<f64, FuzzyError> {
        let values = self.evaluate(externals, &[])?;
        Ok(values[&self.output_node().name])
    }
}

/// Crisp output of the hierarchy's final layer.
pub fn hfs_infer(graph: &HfsGraph, externals: &[(&str, f64)]) -> Result<f64, FuzzyError> {
    graph.infer(externals)
}

#[cfg(test)]
mod tests {
    use super::super::{builtin, Expr, FuzzyTerm, LinguisticVariable, MamdaniRule};
    use super::*;

    /// Dense partition of [0, 1] by narrow triangles mapped one-to-one.
    fn identity_engine(input: &str) -> FuzzyEngine {
        let h = 0.01;
        let terms = |_: ()| -> Vec<FuzzyTerm> {
            (0..=100)
                .map(|i| {
                    let c = i as f64 * h;
                    FuzzyTerm::triangular(&format!("T{i}"), c - h, c + h)
                })
                .collect()
        };
        let x = LinguisticVariable::new(input, (-h, 1.0 + h), terms(())).unwrap();
        let y = LinguisticVariable::new("Y", (-h, 1.0 + h), terms(())).unwrap();
        let rules = (0..=100)
            .map(|i| MamdaniRule {
                antecedent: Expr::Is { var: 0, term: i },
                consequent: i,
            })
            .collect();
        FuzzyEngine::new("identity", vec![x], y, rules).unwrap()
    }

    fn level_engine() -> FuzzyEngine {
        let x = LinguisticVariable::new(
            "PacketLossRate",
            (0.0, 100.0),
            vec![
                FuzzyTerm::triangular("LOW", 0.0, 15.0),
                FuzzyTerm::triangular("MEDIUM", 5.0, 30.0),
                FuzzyTerm::triangular("HIGH", 20.0, 100.0),
            ],
        )
        .unwrap();
        let y = builtin::level_variable("Level");
        let rules = (0..3)
            .map(|i| MamdaniRule {
                antecedent: Expr::Is { var: 0, term: i },
                consequent: i,
            })
            .collect();
        FuzzyEngine::new("level", vec![x], y, rules).unwrap()
    }

    #[test]
    fn single_layer_matches_engine() {
        let e = builtin::uavfec_engine();
        let g = HfsGraph::new(
            "one",
            vec![HfsNode {
                name: "only".into(),
                engine: e.clone(),
                wiring: vec![
                    ("Motion".into(), HfsSource::External("m".into())),
                    ("PacketLossRate".into(), HfsSource::External("p".into())),
                ],
            }],
        )
        .unwrap();
        for (m, p) in [(5000.0, 3.0), (40_000.0, 18.0), (150_000.0, 70.0)] {
            let direct = e.infer(&[("Motion", m), ("PacketLossRate", p)]).unwrap().value;
            assert_eq!(hfs_infer(&g, &[("m", m), ("p", p)]).unwrap(), direct);
        }
    }

    #[test]
    fn identity_layer_reproduces_lower_output() {
        let lower = level_engine();
        let g = HfsGraph::new(
            "two",
            vec![
                HfsNode {
                    name: "lower".into(),
                    engine: lower.clone(),
                    wiring: vec![("PacketLossRate".into(), HfsSource::External("plr".into()))],
                },
                HfsNode {
                    name: "upper".into(),
                    engine: identity_engine("X"),
                    wiring: vec![("X".into(), HfsSource::Node("lower".into()))],
                },
            ],
        )
        .unwrap();
        for plr in [2.0, 7.5, 12.0, 17.5, 26.0, 45.0, 60.0, 90.0] {
            let direct = lower.infer(&[("PacketLossRate", plr)]).unwrap().value;
            let layered = hfs_infer(&g, &[("plr", plr)]).unwrap();
            assert!((direct - layered).abs() < 1e-3, "plr {plr}: {direct} vs {layered}");
        }
    }

    #[test]
    fn unfed_input_and_cycles_rejected() {
        let e = identity_engine("X");
        let unfed = HfsGraph::new(
            "u",
            vec![HfsNode {
                name: "a".into(),
                engine: e.clone(),
                wiring: vec![],
            }],
        );
        assert!(matches!(unfed, Err(FuzzyError::Graph(_))));
        let cyc = HfsGraph::new(
            "c",
            vec![
                HfsNode {
                    name: "a".into(),
                    engine: e.clone(),
                    wiring: vec![("X".into(), HfsSource::Node("b".into()))],
                },
                HfsNode {
                    name: "b".into(),
                    engine: e,
                    wiring: vec![("X".into(), HfsSource::Node("a".into()))],
                },
            ],
        );
        assert!(matches!(cyc, Err(FuzzyError::Graph(_))));
    }

    #[test]
    fn missing_external_reported() {
        let g = HfsGraph::new(
            "m",
            vec![HfsNode {
                name: "a".into(),
                engine: identity_engine("X"),
                wiring: vec![("X".into(), HfsSource::External("x".into()))],
            }],
        )
        .unwrap();
        assert_eq!(hfs_infer(&g, &[]), Err(FuzzyError::MissingInput("x".into())));
    }
}
