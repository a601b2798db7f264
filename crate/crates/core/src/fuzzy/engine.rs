use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{FuzzyError, LinguisticVariable};

/// Grid size of the centroid defuzzifier.
pub const DEFUZZ_POINTS: usize = 1000;

/// Rule antecedent over `(input variable, term)` atoms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Expr {
    Is { var: usize, term: usize },
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn and(self, other: Expr) -> Expr {
        Expr::And(Box::new(self), Box::new(other))
    }

    pub fn or(self, other: Expr) -> Expr {
        Expr::Or(Box::new(self), Box::new(other))
    }

    fn degree(&self, memberships: &[Vec<f64>]) -> f64 {
        match self {
            Expr::Is { var, term } => memberships[*var][*term],
            Expr::And(a, b) => a.degree(memberships).min(b.degree(memberships)),
            Expr::Or(a, b) => a.degree(memberships).max(b.degree(memberships)),
        }
    }

    fn check(&self, inputs: &[LinguisticVariable]) -> bool {
        match self {
            Expr::Is { var, term } => inputs.get(*var).is_some_and(|v| *term < v.terms.len()),
            Expr::And(a, b) | Expr::Or(a, b) => a.check(inputs) && b.check(inputs),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MamdaniRule {
    pub antecedent: Expr,
    /// Term index on the engine's output variable.
    pub consequent: usize,
}

/// Outcome of one inference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Inference {
    pub value: f64,
    /// False when no rule fired and the universe midpoint was returned.
    pub activated: bool,
}

/// A Mamdani rule block with its input variables and single output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzyEngine {
    pub name: String,
    pub inputs: Vec<LinguisticVariable>,
    pub output: LinguisticVariable,
    pub rules: Vec<MamdaniRule>,
}

impl FuzzyEngine {
    pub fn new(
        name: &str,
        inputs: Vec<LinguisticVariable>,
        output: LinguisticVariable,
        rules: Vec<MamdaniRule>,
    ) -> Result<Self, FuzzyError> {
        for (i, v) in inputs.iter().enumerate() {
            if inputs[..i].iter().any(|o| o.name == v.name) || v.name == output.name {
                return Err(FuzzyError::Graph(format!("duplicate variable {:?}", v.name)));
            }
        }
        for r in &rules {
            if !r.antecedent.check(&inputs) || r.consequent >= output.terms.len() {
                return Err(FuzzyError::Graph(format!(
                    "rule references a missing variable or term in {name}"
                )));
            }
        }
        Ok(Self {
            name: name.into(),
            inputs,
            output,
            rules,
        })
    }

    pub fn input_index(&self, name: &str) -> Option<usize> {
        self.inputs.iter().position(|v| v.name == name)
    }

    /// Builds the atom `name is label`.
    pub fn atom(&self, name: &str, label: &str) -> Result<Expr, FuzzyError> {
        let var = self
            .input_index(name)
            .ok_or_else(|| FuzzyError::UnknownVariable(name.into()))?;
        let term = self.inputs[var]
            .term_index(label)
            .ok_or_else(|| FuzzyError::UnknownTerm {
                variable: name.into(),
                label: label.into(),
            })?;
        Ok(Expr::Is { var, term })
    }

    /// Orders named crisp inputs by the engine's variable order.
    pub fn arrange(&self, assignments: &[(&str, f64)]) -> Result<Vec<f64>, FuzzyError> {
        let mut values: Vec<Option<f64>> = vec![None; self.inputs.len()];
        for &(name, value) in assignments {
            let i = self
                .input_index(name)
                .ok_or_else(|| FuzzyError::UnknownVariable(name.into()))?;
            if values[i].is_some() {
                return Err(FuzzyError::DuplicateInput(name.into()));
            }
            if !value.is_finite() {
                return Err(FuzzyError::NonFinite {
                    name: name.into(),
                    value,
                });
            }
            values[i] = Some(value);
        }
        values
            .into_iter()
            .zip(&self.inputs)
            .map(|(v, var)| v.ok_or_else(|| FuzzyError::MissingInput(var.name.clone())))
            .collect()
    }

    /// Activation degree of every output term (max over the rules that
    /// conclude it).
    pub fn activations(&self, crisp: &[f64]) -> Vec<f64> {
        let memberships: Vec<Vec<f64>> = self
            .inputs
            .iter()
            .zip(crisp)
            .map(|(v, &x)| v.terms.iter().map(|t| t.membership(x)).collect())
            .collect();
        let mut act = vec![0.0f64; self.output.terms.len()];
        for r in &self.rules {
            let d = r.antecedent.degree(&memberships);
            if d > act[r.consequent] {
                act[r.consequent] = d;
            }
        }
        act
    }

    /// Inference on inputs already ordered like `self.inputs`.
    pub fn infer_ordered(&self, crisp: &[f64]) -> Inference {
        let act = self.activations(crisp);
        let (lo, hi) = self.output.universe;
        if act.iter().all(|&a| a <= 0.0) {
            return Inference {
                value: 0.5 * (lo + hi),
                activated: false,
            };
        }
        let step = (hi - lo) / DEFUZZ_POINTS as f64;
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..DEFUZZ_POINTS {
            let y = lo + (i as f64 + 0.5) * step;
            let mut mu = 0.0f64;
            for (t, &a) in self.output.terms.iter().zip(&act) {
                if a > 0.0 {
                    mu = mu.max(a.min(t.membership(y)));
                }
            }
            num += mu * y;
            den += mu;
        }
        if den <= 0.0 {
            return Inference {
                value: 0.5 * (lo + hi),
                activated: false,
            };
        }
        Inference {
            value: num / den,
            activated: true,
        }
    }

    pub fn infer(&self, assignments: &[(&str, f64)]) -> Result<Inference, FuzzyError> {
        let crisp = self.arrange(assignments)?;
        Ok(self.infer_ordered(&crisp))
    }

    pub fn infer_map(&self, assignments: &HashMap<String, f64>) -> Result<Inference, FuzzyError> {
        let pairs: Vec<(&str, f64)> = assignments.iter().map(|(k, v)| (k.as_str(), *v)).collect();
        self.infer(&pairs)
    }
}

/// Runs one Mamdani inference.
pub fn infer(engine: &FuzzyEngine, assignments: &[(&str, f64)]) -> Result<Inference, FuzzyError> {
    engine.infer(assignments)
}

#[cfg(test)]
mod tests {
    use super::super::{builtin, FuzzyTerm};
    use super::*;

    fn single_rule_engine() -> FuzzyEngine {
        let mut e = builtin::uavfec_engine();
        let rule = MamdaniRule {
            antecedent: e
                .atom("Motion", "LOW")
                .unwrap()
                .and(e.atom("PacketLossRate", "LOW").unwrap()),
            consequent: e.output.term_index("SMALL").unwrap(),
        };
        e.rules = vec![rule];
        e
    }

    #[test]
    fn full_small_centroid() {
        let e = single_rule_engine();
        let out = e.infer(&[("Motion", 5000.0), ("PacketLossRate", 7.5)]).unwrap();
        assert!(out.activated);
        assert!((out.value - 0.60).abs() < 1e-3, "{}", out.value);
    }

    #[test]
    fn high_high_gives_large() {
        let e = builtin::uavfec_engine();
        let out = e.infer(&[("Motion", 150_000.0), ("PacketLossRate", 60.0)]).unwrap();
        assert!(out.value >= 0.75 && out.value <= 1.0, "{}", out.value);
    }

    #[test]
    fn no_activation_falls_back_to_midpoint() {
        let e = single_rule_engine();
        let out = e.infer(&[("Motion", 150_000.0), ("PacketLossRate", 0.0)]).unwrap();
        assert!(!out.activated);
        assert!((out.value - 0.775).abs() < 1e-12);
    }

    #[test]
    fn assignment_errors() {
        let e = builtin::uavfec_engine();
        assert_eq!(
            e.infer(&[("Motion", 1.0)]).unwrap_err(),
            FuzzyError::MissingInput("PacketLossRate".into())
        );
        assert_eq!(
            e.infer(&[("Motion", 1.0), ("Speed", 2.0)]).unwrap_err(),
            FuzzyError::UnknownVariable("Speed".into())
        );
        assert_eq!(
            e.infer(&[("Motion", 1.0), ("Motion", 2.0)]).unwrap_err(),
            FuzzyError::DuplicateInput("Motion".into())
        );
    }

    #[test]
    fn or_takes_maximum() {
        let x = LinguisticVariable::new(
            "x",
            (0.0, 10.0),
            vec![
                FuzzyTerm::shoulder_left("L", 2.0, 6.0),
                FuzzyTerm::shoulder_right("H", 4.0, 8.0),
            ],
        )
        .unwrap();
        let y = LinguisticVariable::new("y", (0.0, 1.0), vec![FuzzyTerm::triangular("M", 0.0, 1.0)]).unwrap();
        let rule = MamdaniRule {
            antecedent: Expr::Is { var: 0, term: 0 }.or(Expr::Is { var: 0, term: 1 }),
            consequent: 0,
        };
        let e = FuzzyEngine::new("or", vec![x], y, vec![rule]).unwrap();
        assert_eq!(e.activations(&[5.0]), vec![0.25f64.max(0.25)]);
        assert_eq!(e.activations(&[3.0]), vec![0.75]);
    }

    #[test]
    fn rules_must_reference_existing_terms() {
        let e = builtin::uavfec_engine();
        let bad = MamdaniRule {
            antecedent: Expr::Is { var: 7, term: 0 },
            consequent: 0,
        };
        assert!(FuzzyEngine::new("bad", e.inputs.clone(), e.output.clone(), vec![bad]).is_err());
    }
}
