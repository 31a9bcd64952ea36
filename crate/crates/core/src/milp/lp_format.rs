//! CPLEX LP text format: writer and a reader for the subset the writer emits.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write;

use num_traits::{One, Signed, Zero};

use super::{LinExpr, MilpModel, Sense, VarKind};
use crate::rational::{parse_rational, to_f64, Q};

fn sanitize(name: &str) -> String {
    const EXTRA: &str = "!\"#$%&()/,.;?@_`'{}|~";
    let mut out: String = name.chars().map(|c| if c.is_ascii_alphanumeric() || EXTRA.contains(c) { c } else { '_' }).collect();
    if out.is_empty() || out.starts_with(|c: char| c.is_ascii_digit() || c == '.') {
        out.insert_str(0, "v_");
    }
    let lower = out.to_ascii_lowercase();
    if lower.starts_with('e') && lower[1..].starts_with(|c: char| c.is_ascii_digit() || c == 'e') {
        out.insert_str(0, "v_");
    }
    if matches!(lower.as_str(), "free" | "end" | "st" | "bounds" | "binaries" | "binary" | "inf" | "infinity") {
        out.insert_str(0, "v_");
    }
    out
}

fn unique_names<'a>(names: impl Iterator<Item = &'a str>) -> Vec<String> {
    let mut seen = BTreeSet::new();
    names
        .map(|n| {
            let base = sanitize(n);
            let mut cand = base.clone();
            let mut k = 1;
            while !seen.insert(cand.clone()) {
                cand = format!("{}#{}", base, k);
                k += 1;
            }
            cand
        })
        .collect()
}

fn decimal(q: &Q) -> String {
    let f = to_f64(q);
    let s = format!("{}", f);
    if s.contains('e') || s.contains("inf") || s.contains("NaN") {
        format!("{:.17e}", f)
    } else {
        s
    }
}

fn exact_in_decimal(q: &Q) -> bool {
    parse_rational(&decimal(q)).is_ok_and(|d| d == *q)
}

fn render_expr(out: &mut String, expr: &LinExpr, names: &[String], exact: bool) {
    if expr.terms.is_empty() {
        out.push_str(" 0");
        return;
    }
    for (i, (v, c)) in expr.terms.iter().enumerate() {
        let neg = c.is_negative();
        let a = c.abs();
        if i == 0 {
            out.push_str(if neg { " -" } else { "" });
        } else {
            out.push_str(if neg { " -" } else { " +" });
        }
        let coef = if exact { a.to_string() } else { decimal(&a) };
        if a.is_one() {
            let _ = write!(out, " {}", names[*v]);
        } else {
            let _ = write!(out, " {} {}", coef, names[*v]);
        }
    }
}

fn sense_str(s: Sense) -> &'static str {
    match s {
        Sense::Le => "<=",
        Sense::Ge => ">=",
        Sense::Eq => "=",
    }
}

/// Renders the model in CPLEX LP format; values that decimals cannot represent exactly
/// are repeated as rationals in `\ exact` comment lines.
pub fn export_lp(model: &MilpModel) -> String {
    let names = unique_names(model.variables.iter().map(|v| v.name.as_str()));
    let cnames = unique_names(model.constraints.iter().map(|c| c.name.as_str()));
    let mut out = String::new();
    match &model.objective {
        Some(o) => {
            out.push_str("Maximize\n obj:");
            render_expr(&mut out, o, &names, false);
            out.push('\n');
            if !o.terms.iter().all(|(_, c)| exact_in_decimal(c)) {
                out.push_str("\\ exact obj:");
                render_expr(&mut out, o, &names, true);
                out.push('\n');
            }
        }
        None => out.push_str("Minimize\n obj: 0\n"),
    }
    out.push_str("Subject To\n");
    for (c, name) in model.constraints.iter().zip(&cnames) {
        let _ = write!(out, " {}:", name);
        render_expr(&mut out, &c.expr, &names, false);
        let _ = writeln!(out, " {} {}", sense_str(c.sense), decimal(&c.rhs));
        if !exact_in_decimal(&c.rhs) || !c.expr.terms.iter().all(|(_, q)| exact_in_decimal(q)) {
            let _ = write!(out, "\\ exact {}:", name);
            render_expr(&mut out, &c.expr, &names, true);
            let _ = writeln!(out, " {} {}", sense_str(c.sense), c.rhs);
        }
    }
    out.push_str("Bounds\n");
    for (v, name) in model.variables.iter().zip(&names) {
        let (lo, hi) = v.bounds();
        let _ = writeln!(out, " {} <= {} <= {}", decimal(&lo), name, decimal(&hi));
        if !exact_in_decimal(&lo) || !exact_in_decimal(&hi) {
            let _ = writeln!(out, "\\ exact {} <= {} <= {}", lo, name, hi);
        }
    }
    if model.variables.iter().any(|v| v.is_binary()) {
        out.push_str("Binaries\n");
        for (v, name) in model.variables.iter().zip(&names) {
            if v.is_binary() {
                let _ = writeln!(out, " {}", name);
            }
        }
    }
    out.push_str("End\n");
    out
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("LP parse error on line {line}: {message}")]
pub struct LpParseError {
    pub line: usize,
    pub message: String,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Section {
    None,
    Objective,
    Constraints,
    Bounds,
    Binaries,
    End,
}

fn is_op(t: &str) -> bool {
    matches!(t, "<=" | ">=" | "=" | "<" | ">" | "=<" | "=>")
}

fn parse_sense(t: &str) -> Sense {
    match t {
        "<=" | "<" | "=<" => Sense::Le,
        ">=" | ">" | "=>" => Sense::Ge,
        _ => Sense::Eq,
    }
}

/// Splits a line into tokens, separating operators and signs.
fn tokenize(line: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let chars: Vec<char> = line.chars().collect();
    let mut i = 0;
    let flush = |cur: &mut String, out: &mut Vec<String>| {
        if !cur.is_empty() {
            out.push(core::mem::take(cur));
        }
    };
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            flush(&mut cur, &mut out);
        } else if c == '<' || c == '>' || c == '=' {
            flush(&mut cur, &mut out);
            let mut op = String::from(c);
            if i + 1 < chars.len() && matches!(chars[i + 1], '=' | '<' | '>') {
                op.push(chars[i + 1]);
                i += 1;
            }
            out.push(op);
        } else if (c == '+' || c == '-') && !(cur.ends_with('e') || cur.ends_with('E')) || (c == '+' || c == '-') && cur.is_empty() {
            flush(&mut cur, &mut out);
            out.push(String::from(c));
        } else if c == ':' {
            cur.push(c);
            flush(&mut cur, &mut out);
        } else {
            cur.push(c);
        }
        i += 1;
    }
    flush(&mut cur, &mut out);
    out
}

fn is_number(t: &str) -> bool {
    t.starts_with(|c: char| c.is_ascii_digit() || c == '.')
}

struct Reader {
    vars: BTreeMap<String, usize>,
    model: MilpModel,
    bounds: Vec<(Option<Q>, Option<Q>)>,
}

impl Reader {
    fn var(&mut self, name: &str) -> usize {
        if let Some(&v) = self.vars.get(name) {
            return v;
        }
        let id = self.model.add_continuous(name, Q::zero(), Q::zero());
        self.bounds.push((None, None));
        self.vars.insert(String::from(name), id);
        id
    }

    /// Parses `[sign] [coef] name ...` into an expression.
    fn expr(&mut self, toks: &[String], line: usize) -> Result<LinExpr, LpParseError> {
        let err = |m: &str| LpParseError { line, message: String::from(m) };
        let mut e = LinExpr::new();
        let mut i = 0;
        while i < toks.len() {
            let mut sign = Q::one();
            while i < toks.len() && (toks[i] == "+" || toks[i] == "-") {
                if toks[i] == "-" {
                    sign = -sign;
                }
                i += 1;
            }
            if i >= toks.len() {
                return Err(err("dangling sign"));
            }
            let mut coef = Q::one();
            if is_number(&toks[i]) {
                coef = parse_rational(&toks[i]).map_err(|_| err("bad coefficient"))?;
                i += 1;
                if i >= toks.len() || is_number(&toks[i]) || toks[i] == "+" || toks[i] == "-" {
                    // A bare constant: only "0" is accepted (empty objective).
                    if coef.is_zero() {
                        continue;
                    }
                    return Err(err("constant terms are not supported"));
                }
            }
            let v = self.var(&toks[i]);
            e.add(v, sign * coef);
            i += 1;
        }
        Ok(e)
    }
}

fn number(t: &str, line: usize) -> Result<Q, LpParseError> {
    parse_rational(t).map_err(|_| LpParseError { line, message: format!("bad number {:?}", t) })
}

/// Parses LP text produced by [`export_lp`] (one statement per line).
pub fn read_lp(text: &str) -> Result<MilpModel, LpParseError> {
    let mut r = Reader { vars: BTreeMap::new(), model: MilpModel::new(), bounds: Vec::new() };
    let mut section = Section::None;
    let mut maximize = true;
    let mut binaries = BTreeSet::new();
    let mut objective: Option<LinExpr> = None;
    let mut next_name = 0usize;
    // Declaration order follows the Bounds section.
    let mut in_bounds = false;
    for raw in text.lines() {
        let body = raw.split('\\').next().unwrap_or("").trim();
        let lower = body.to_ascii_lowercase();
        if matches!(lower.as_str(), "bounds" | "bound") {
            in_bounds = true;
        } else if matches!(lower.as_str(), "binaries" | "binary" | "bin" | "end" | "generals" | "general") {
            in_bounds = false;
        } else if in_bounds {
            for t in tokenize(body) {
                if !is_op(&t) && !is_number(&t) && t != "-" && t != "+" {
                    r.var(&t);
                }
            }
        }
    }
    for (ln, raw) in text.lines().enumerate() {
        let line = ln + 1;
        let body = raw.split('\\').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let lower = body.to_ascii_lowercase();
        match lower.as_str() {
            "maximize" | "maximum" | "max" => {
                section = Section::Objective;
                maximize = true;
                continue;
            }
            "minimize" | "minimum" | "min" => {
                section = Section::Objective;
                maximize = false;
                continue;
            }
            "subject to" | "such that" | "st" | "s.t." => {
                section = Section::Constraints;
                continue;
            }
            "bounds" | "bound" => {
                section = Section::Bounds;
                continue;
            }
            "binaries" | "binary" | "bin" => {
                section = Section::Binaries;
                continue;
            }
            "end" => {
                section = Section::End;
                continue;
            }
            _ => {}
        }
        let mut toks = tokenize(body);
        let mut name = None;
        if toks.first().is_some_and(|t| t.ends_with(':')) {
            let t = toks.remove(0);
            name = Some(String::from(&t[..t.len() - 1]));
        }
        match section {
            Section::Objective => {
                let e = r.expr(&toks, line)?;
                let e = if maximize { e } else { LinExpr::from_terms(e.terms.into_iter().map(|(v, c)| (v, -c))) };
                objective = Some(match objective.take() {
                    Some(mut o) => {
                        for (v, c) in e.terms {
                            o.add(v, c);
                        }
                        o
                    }
                    None => e,
                });
            }
            Section::Constraints => {
                let k = toks.iter().position(|t| is_op(t)).ok_or(LpParseError { line, message: String::from("missing relation") })?;
                if k + 2 != toks.len() && !(k + 3 == toks.len() && (toks[k + 1] == "-" || toks[k + 1] == "+")) {
                    return Err(LpParseError { line, message: String::from("malformed constraint") });
                }
                let rhs_tok = toks[toks.len() - 1].clone();
                let mut rhs = number(&rhs_tok, line)?;
                if k + 3 == toks.len() && toks[k + 1] == "-" {
                    rhs = -rhs;
                }
                let sense = parse_sense(&toks[k]);
                let expr = r.expr(&toks[..k], line)?;
                let name = name.unwrap_or_else(|| {
                    next_name += 1;
                    format!("R{}", next_name)
                });
                r.model.add_constraint(name, expr, sense, rhs);
            }
            Section::Bounds => {
                // Signs glue to numbers here.
                let mut merged: Vec<String> = Vec::new();
                let mut i = 0;
                while i < toks.len() {
                    if (toks[i] == "-" || toks[i] == "+") && i + 1 < toks.len() && is_number(&toks[i + 1]) {
                        merged.push(format!("{}{}", toks[i], toks[i + 1]));
                        i += 2;
                    } else {
                        merged.push(toks[i].clone());
                        i += 1;
                    }
                }
                let is_num = |t: &str| is_number(t) || t.starts_with('-') || t.starts_with('+');
                match merged.as_slice() {
                    [a, o1, v, o2, b] if is_op(o1) && is_op(o2) => {
                        let id = r.var(v);
                        r.bounds[id] = (Some(number(a, line)?), Some(number(b, line)?));
                    }
                    [v, o, a] if is_op(o) && is_num(a) => {
                        let id = r.var(v);
                        let x = number(a, line)?;
                        match parse_sense(o) {
                            Sense::Ge => r.bounds[id].0 = Some(x),
                            Sense::Le => r.bounds[id].1 = Some(x),
                            Sense::Eq => r.bounds[id] = (Some(x.clone()), Some(x)),
                        }
                    }
                    [a, o, v] if is_op(o) && is_num(a) => {
                        let id = r.var(v);
                        let x = number(a, line)?;
                        match parse_sense(o) {
                            Sense::Le => r.bounds[id].0 = Some(x),
                            Sense::Ge => r.bounds[id].1 = Some(x),
                            Sense::Eq => r.bounds[id] = (Some(x.clone()), Some(x)),
                        }
                    }
                    _ => return Err(LpParseError { line, message: String::from("unsupported bound") }),
                }
            }
            Section::Binaries => {
                for t in toks {
                    let id = r.var(&t);
                    binaries.insert(id);
                }
            }
            Section::None | Section::End => {
                return Err(LpParseError { line, message: String::from("text outside a section") });
            }
        }
    }
    for id in 0..r.model.variables.len() {
        if binaries.contains(&id) {
            r.model.variables[id].kind = VarKind::Binary;
            continue;
        }
        let lo = r.bounds[id].0.clone().unwrap_or_else(Q::zero);
        let Some(hi) = r.bounds[id].1.clone() else {
            return Err(LpParseError { line: 0, message: format!("variable {} has no finite upper bound", r.model.variables[id].name) });
        };
        r.model.variables[id].kind = VarKind::Continuous { lower: lo, upper: hi };
    }
    r.model.objective = objective.filter(|o| !o.terms.is_empty() || maximize);
    Ok(r.model)
}
