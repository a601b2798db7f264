//! Declarative text format for engines.
//!
//! ```text
//! # comment
//! [engine uavFEC]
//! [input Motion 0 200000]
//! LOW shoulder_left 10000 30000
//! MEDIUM triangle 21000 80000
//! HIGH shoulder_right 60000 130000
//! [output RedundancyAmount 0.55 1]
//! SMALL shoulder_left 0.55 0.70
//! [rules]
//! if Motion is LOW and (PacketLossRate is LOW or PacketLossRate is MEDIUM) then RedundancyAmount is SMALL
//! ```
//!
//! `and` binds tighter than `or`; parentheses group.

use std::fmt::Write as _;

use super::{Expr, FuzzyEngine, FuzzyError, FuzzyTerm, LinguisticVariable, MamdaniRule, TermShape};

fn perr(line: usize, reason: impl Into<String>) -> FuzzyError {
    FuzzyError::Parse {
        line,
        reason: reason.into(),
    }
}

struct VarBlock {
    name: String,
    universe: (f64, f64),
    terms: Vec<FuzzyTerm>,
    line: usize,
}

enum Section {
    None,
    Input,
    Output,
    Rules,
}

fn parse_f64(tok: &str, line: usize) -> Result<f64, FuzzyError> {
    tok.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| perr(line, format!("expected a number, found {tok:?}")))
}

pub fn engine_from_text(text: &str) -> Result<FuzzyEngine, FuzzyError> {
    let mut name = String::from("engine");
    let mut inputs: Vec<VarBlock> = Vec::new();
    let mut output: Option<VarBlock> = None;
    let mut rule_lines: Vec<(usize, String)> = Vec::new();
    let mut section = Section::None;

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(header) = content.strip_prefix('[') {
            let header = header
                .strip_suffix(']')
                .ok_or_else(|| perr(line, "unterminated section header"))?;
            let toks: Vec<&str> = header.split_whitespace().collect();
            match toks.as_slice() {
                ["engine", n] => {
                    name = n.to_string();
                    section = Section::None;
                }
                [kind @ ("input" | "output"), n, lo, hi] => {
                    let block = VarBlock {
                        name: n.to_string(),
                        universe: (parse_f64(lo, line)?, parse_f64(hi, line)?),
                        terms: Vec::new(),
                        line,
                    };
                    if *kind == "input" {
                        inputs.push(block);
                        section = Section::Input;
                    } else {
                        if output.is_some() {
                            return Err(perr(line, "more than one output variable"));
                        }
                        output = Some(block);
                        section = Section::Output;
                    }
                }
                ["rules"] => section = Section::Rules,
                _ => return Err(perr(line, format!("unknown section [{header}]"))),
            }
            continue;
        }
        match section {
            Section::None => return Err(perr(line, "content outside a section")),
            Section::Rules => rule_lines.push((line, content.to_string())),
            Section::Input | Section::Output => {
                let toks: Vec<&str> = content.split_whitespace().collect();
                let [label, kind, a, b] = toks.as_slice() else {
                    return Err(perr(line, "term line must be: LABEL kind a b"));
                };
                let (a, b) = (parse_f64(a, line)?, parse_f64(b, line)?);
                let shape = match *kind {
                    "triangle" => TermShape::Triangular(a, b),
                    "shoulder_left" => TermShape::ShoulderLeft(a, b),
                    "shoulder_right" => TermShape::ShoulderRight(a, b),
                    other => return Err(perr(line, format!("unknown term kind {other:?}"))),
                };
                let term = FuzzyTerm::new(label, shape).map_err(|e| perr(line, e.to_string()))?;
                let block = match section {
                    Section::Input => inputs.last_mut(),
                    _ => output.as_mut(),
                };
                block.expect("section implies a block").terms.push(term);
            }
        }
    }

    let build =
        |b: VarBlock| LinguisticVariable::new(&b.name, b.universe, b.terms).map_err(|e| perr(b.line, e.to_string()));
    let output = build(output.ok_or_else(|| perr(0, "no [output] section"))?)?;
    let inputs = inputs.into_iter().map(build).collect::<Result<Vec<_>, _>>()?;

    let mut rules = Vec::with_capacity(rule_lines.len());
    for (line, text) in rule_lines {
        rules.push(parse_rule(&text, &inputs, &output).map_err(|e| match e {
            FuzzyError::Parse { reason, .. } => perr(line, reason),
            other => perr(line, other.to_string()),
        })?);
    }
    FuzzyEngine::new(&name, inputs, output, rules)
}

fn tokenize(s: &str) -> Vec<String> {
    s.replace('(', " ( ")
        .replace(')', " ) ")
        .split_whitespace()
        .map(str::to_string)
        .collect()
}

struct RuleParser<'a> {
    toks: Vec<String>,
    pos: usize,
    inputs: &'a [LinguisticVariable],
}

impl RuleParser<'_> {
    fn peek(&self) -> Option<&str> {
        self.toks.get(self.pos).map(String::as_str)
    }

    fn next(&mut self) -> Result<String, FuzzyError> {
        let t = self
            .toks
            .get(self.pos)
            .cloned()
            .ok_or_else(|| perr(0, "unexpected end of rule"))?;
        self.pos += 1;
        Ok(t)
    }

    fn expect(&mut self, word: &str) -> Result<(), FuzzyError> {
        let t = self.next()?;
        if t.eq_ignore_ascii_case(word) {
            Ok(())
        } else {
            Err(perr(0, format!("expected {word:?}, found {t:?}")))
        }
    }

    fn keyword(&self, word: &str) -> bool {
        self.peek().is_some_and(|t| t.eq_ignore_ascii_case(word))
    }

    fn expr(&mut self) -> Result<Expr, FuzzyError> {
        let mut e = self.conj()?;
        while self.keyword("or") {
            self.pos += 1;
            e = e.or(self.conj()?);
        }
        Ok(e)
    }

    fn conj(&mut self) -> Result<Expr, FuzzyError> {
        let mut e = self.factor()?;
        while self.keyword("and") {
            self.pos += 1;
            e = e.and(self.factor()?);
        }
        Ok(e)
    }

    fn factor(&mut self) -> Result<Expr, FuzzyError> {
        if self.peek() == Some("(") {
            self.pos += 1;
            let e = self.expr()?;
            self.expect(")")?;
            return Ok(e);
        }
        let name = self.next()?;
        self.expect("is")?;
        let label = self.next()?;
        let var = self
            .inputs
            .iter()
            .position(|v| v.name == name)
            .ok_or_else(|| perr(0, format!("unknown input variable {name:?}")))?;
        let term = self.inputs[var]
            .term_index(&label)
            .ok_or_else(|| perr(0, format!("variable {name:?} has no term {label:?}")))?;
        Ok(Expr::Is { var, term })
    }
}

fn parse_rule(
    text: &str,
    inputs: &[LinguisticVariable],
    output: &LinguisticVariable,
) -> Result<MamdaniRule, FuzzyError> {
    let mut p = RuleParser {
        toks: tokenize(text),
        pos: 0,
        inputs,
    };
    p.expect("if")?;
    let antecedent = p.expr()?;
    p.expect("then")?;
    let name = p.next()?;
    if name != output.name {
        return Err(perr(
            0,
            format!("consequent must name the output {:?}, found {name:?}", output.name),
        ));
    }
    p.expect("is")?;
    let label = p.next()?;
    let consequent = output
        .term_index(&label)
        .ok_or_else(|| perr(0, format!("output has no term {label:?}")))?;
    if let Some(extra) = p.peek() {
        return Err(perr(0, format!("trailing token {extra:?}")));
    }
    Ok(MamdaniRule { antecedent, consequent })
}

fn write_var(out: &mut String, kind: &str, v: &LinguisticVariable) {
    let _ = writeln!(out, "[{kind} {} {:?} {:?}]", v.name, v.universe.0, v.universe.1);
    for t in &v.terms {
        let (k, (a, b)) = match t.shape {
            TermShape::Triangular(a, b) => ("triangle", (a, b)),
            TermShape::ShoulderLeft(a, b) => ("shoulder_left", (a, b)),
            TermShape::ShoulderRight(a, b) => ("shoulder_right", (a, b)),
        };
        let _ = writeln!(out, "{} {k} {a:?} {b:?}", t.label);
    }
}

fn write_expr(out: &mut String, e: &Expr, inputs: &[LinguisticVariable], in_and: bool) {
    match e {
        Expr::Is { var, term } => {
            let v = &inputs[*var];
            let _ = write!(out, "{} is {}", v.name, v.terms[*term].label);
        }
        Expr::And(a, b) => {
            write_expr(out, a, inputs, true);
            out.push_str(" and ");
            write_expr(out, b, inputs, true);
        }
        Expr::Or(a, b) => {
            if in_and {
                out.push('(');
            }
            write_expr(out, a, inputs, false);
            out.push_str(" or ");
            write_expr(out, b, inputs, false);
            if in_and {
                out.push(')');
            }
        }
    }
}

/// Serializes an engine in the format read by [`engine_from_text`].
pub fn engine_to_text(engine: &FuzzyEngine) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "[engine {}]", engine.name);
    for v in &engine.inputs {
        write_var(&mut out, "input", v);
    }
    write_var(&mut out, "output", &engine.output);
    out.push_str("[rules]\n");
    for r in &engine.rules {
        out.push_str("if ");
        write_expr(&mut out, &r.antecedent, &engine.inputs, false);
        let _ = writeln!(
            out,
            " then {} is {}",
            engine.output.name, engine.output.terms[r.consequent].label
        );
    }
    out
}
