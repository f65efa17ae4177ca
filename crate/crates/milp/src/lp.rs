//! CPLEX-style LP text.
//!
//! Layout written here and accepted back:
//!
//! ```text
//! \ formulation: base-set
//! \ root: 1
//! Minimize
//!  obj: 0.22314355131420976 g_1_4 + 0.10536051565782631 g_1_5
//! Subject To
//!  route_1_2_1: y_1_2_1_4 - y_1_2_4_1 + y_1_2_1_5 - y_1_2_5_1 = 1
//! Bounds
//!  0 <= y_1_2_1_4 <= 1
//!  0 <= w_1_4_1_2 <= 1
//! Binaries
//!  y_1_2_1_4
//! End
//! ```
//!
//! Every variable gets a line under `Bounds`, in declaration order, which is
//! how the reader recovers that order. Numbers use the shortest decimal that
//! parses back to the same `f64`.

use std::collections::HashSet;
use std::fmt::Write as _;

use crate::error::{parse_err, MilpError, Result};
use crate::model::{Metadata, MilpModel, ModelBuilder, ObjSense, Sense, VarKind};

const TERMS_PER_LINE: usize = 6;

pub(crate) fn num(x: f64) -> String {
    if x == f64::INFINITY {
        "+inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{}", x + 0.0)
    }
}

fn expr(out: &mut String, m: &MilpModel, terms: &[(usize, f64)]) {
    for (n, &(v, c)) in terms.iter().enumerate() {
        if n > 0 && n % TERMS_PER_LINE == 0 {
            out.push_str("\n  ");
        }
        let name = &m.variables()[v].name;
        let sign = if c < 0.0 { "-" } else { "+" };
        let mag = c.abs();
        if n == 0 && c > 0.0 {
            if mag == 1.0 {
                let _ = write!(out, " {name}");
            } else {
                let _ = write!(out, " {} {name}", num(mag));
            }
        } else if mag == 1.0 {
            let _ = write!(out, " {sign} {name}");
        } else {
            let _ = write!(out, " {sign} {} {name}", num(mag));
        }
    }
}

pub fn write_lp(m: &MilpModel) -> String {
    let mut out = String::new();
    let meta = m.metadata();
    let _ = writeln!(out, "\\ formulation: {}", meta.formulation);
    if let Some(root) = &meta.root {
        let _ = writeln!(out, "\\ root: {root}");
    }
    out.push_str(match m.objective().sense {
        ObjSense::Minimize => "Minimize\n",
        ObjSense::Maximize => "Maximize\n",
    });
    out.push_str(" obj:");
    expr(&mut out, m, &m.objective().terms);
    out.push_str("\nSubject To\n");
    for c in m.constraints() {
        let _ = write!(out, " {}:", c.name);
        if c.terms.is_empty() {
            // An empty left-hand side still needs a term.
            let _ = write!(out, " 0 {}", m.variables()[0].name);
        }
        expr(&mut out, m, &c.terms);
        let _ = writeln!(out, " {} {}", c.sense.symbol(), num(c.rhs));
    }
    out.push_str("Bounds\n");
    for v in m.variables() {
        let (lo, hi) = v.bounds();
        let _ = match (lo.is_finite(), hi.is_finite()) {
            (false, false) => writeln!(out, " {} free", v.name),
            (true, false) => writeln!(out, " {} >= {}", v.name, num(lo)),
            _ => writeln!(out, " {} <= {} <= {}", num(lo), v.name, num(hi)),
        };
    }
    let binaries: Vec<&str> = m
        .variables()
        .iter()
        .filter(|v| v.is_binary())
        .map(|v| v.name.as_str())
        .collect();
    if !binaries.is_empty() {
        out.push_str("Binaries\n");
        for chunk in binaries.chunks(TERMS_PER_LINE) {
            let _ = writeln!(out, " {}", chunk.join(" "));
        }
    }
    out.push_str("End\n");
    out
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    Head,
    Objective,
    Rows,
    Bounds,
    Binaries,
    End,
}

fn section(word: &str) -> Option<Section> {
    match word.to_ascii_lowercase().as_str() {
        "minimize" | "maximize" | "minimum" | "maximum" | "min" | "max" => Some(Section::Objective),
        "subject" | "st" | "s.t." => Some(Section::Rows),
        "bounds" | "bound" => Some(Section::Bounds),
        "binaries" | "binary" | "bin" => Some(Section::Binaries),
        "end" => Some(Section::End),
        _ => None,
    }
}

fn parse_num(tok: &str, line: usize) -> Result<f64> {
    match tok {
        "+inf" | "inf" | "+infinity" | "infinity" => Ok(f64::INFINITY),
        "-inf" | "-infinity" => Ok(f64::NEG_INFINITY),
        _ => tok
            .parse::<f64>()
            .map_err(|_| parse_err(line, format!("expected a number, found `{tok}`"))),
    }
}

fn is_num(tok: &str) -> bool {
    tok.parse::<f64>().is_ok()
}

/// `[sign] [coeff] name` sequences up to a sense symbol.
fn parse_terms(toks: &[(usize, String)]) -> Result<(Vec<(String, f64)>, usize)> {
    let mut terms = Vec::new();
    let mut i = 0;
    while i < toks.len() {
        let (line, t) = (&toks[i].0, toks[i].1.as_str());
        if matches!(t, "<=" | ">=" | "=" | "=<" | "=>" | "<" | ">") {
            break;
        }
        let mut coeff = 1.0;
        let mut tok = t;
        if tok == "+" || tok == "-" {
            if tok == "-" {
                coeff = -1.0;
            }
            i += 1;
            tok = toks
                .get(i)
                .map(|x| x.1.as_str())
                .ok_or_else(|| parse_err(*line, "dangling sign"))?;
        }
        if is_num(tok) {
            coeff *= parse_num(tok, *line)?;
            i += 1;
            tok = toks
                .get(i)
                .map(|x| x.1.as_str())
                .ok_or_else(|| parse_err(*line, "coefficient without variable"))?;
        }
        terms.push((tok.to_string(), coeff));
        i += 1;
    }
    Ok((terms, i))
}

fn sense(tok: &str) -> Option<Sense> {
    match tok {
        "<=" | "=<" | "<" => Some(Sense::Le),
        ">=" | "=>" | ">" => Some(Sense::Ge),
        "=" => Some(Sense::Eq),
        _ => None,
    }
}

struct RawRow {
    name: String,
    terms: Vec<(String, f64)>,
    sense: Sense,
    rhs: f64,
    line: usize,
}

pub fn parse_lp(text: &str) -> Result<MilpModel> {
    let mut meta = Metadata::default();
    let mut obj_sense = ObjSense::Minimize;
    let mut sect = Section::Head;
    let mut obj_toks: Vec<(usize, String)> = Vec::new();
    let mut row_toks: Vec<(usize, String)> = Vec::new();
    let mut bounds: Vec<(usize, Vec<String>)> = Vec::new();
    let mut binaries: Vec<String> = Vec::new();

    for (ln, raw) in text.lines().enumerate() {
        let line = ln + 1;
        let trimmed = raw.trim();
        if let Some(comment) = trimmed.strip_prefix('\\') {
            let comment = comment.trim();
            if let Some(f) = comment.strip_prefix("formulation:") {
                meta.formulation = f.trim().to_string();
            } else if let Some(r) = comment.strip_prefix("root:") {
                meta.root = Some(r.trim().to_string());
            }
            continue;
        }
        if trimmed.is_empty() {
            continue;
        }
        let first = trimmed.split_whitespace().next().unwrap_or("");
        if !raw.starts_with(' ') {
            if let Some(s) = section(first) {
                if s == Section::Objective {
                    obj_sense = if first.to_ascii_lowercase().starts_with("max") {
                        ObjSense::Maximize
                    } else {
                        ObjSense::Minimize
                    };
                }
                sect = s;
                continue;
            }
        }
        // Split `name:` from the first term even without a space.
        let spaced = trimmed.replace(':', ": ");
        let toks = spaced.split_whitespace().map(|t| (line, t.to_string()));
        match sect {
            Section::Objective => obj_toks.extend(toks),
            Section::Rows => row_toks.extend(toks),
            Section::Bounds => bounds.push((line, toks.map(|t| t.1).collect())),
            Section::Binaries => binaries.extend(toks.map(|t| t.1)),
            Section::Head => return Err(parse_err(line, "content before the objective section")),
            Section::End => return Err(parse_err(line, "content after End")),
        }
    }
    if sect != Section::End {
        return Err(parse_err(text.lines().count(), "missing End"));
    }

    // Objective: optional `label:` then terms.
    let obj_body = match obj_toks.first() {
        Some((_, t)) if t.ends_with(':') => &obj_toks[1..],
        _ => &obj_toks[..],
    };
    let (obj_terms, used) = parse_terms(obj_body)?;
    if used != obj_body.len() {
        return Err(parse_err(obj_body[used].0, "relation in objective"));
    }

    let mut rows = Vec::new();
    let mut i = 0;
    while i < row_toks.len() {
        let (line, label) = &row_toks[i];
        let name = label
            .strip_suffix(':')
            .ok_or_else(|| parse_err(*line, format!("expected `name:`, found `{label}`")))?
            .to_string();
        let (terms, used) = parse_terms(&row_toks[i + 1..])?;
        i += 1 + used;
        let s = row_toks
            .get(i)
            .and_then(|t| sense(&t.1))
            .ok_or_else(|| parse_err(*line, format!("constraint `{name}` has no relation")))?;
        let rhs_tok = row_toks
            .get(i + 1)
            .ok_or_else(|| parse_err(*line, format!("constraint `{name}` has no right-hand side")))?;
        let rhs = parse_num(&rhs_tok.1, rhs_tok.0)?;
        i += 2;
        rows.push(RawRow {
            name,
            terms,
            sense: s,
            rhs,
            line: *line,
        });
    }

    let bin: HashSet<&str> = binaries.iter().map(|s| s.as_str()).collect();
    let mut b = ModelBuilder::new(meta);
    for (line, toks) in &bounds {
        let t: Vec<&str> = toks.iter().map(|s| s.as_str()).collect();
        let (name, lo, hi) = match t.as_slice() {
            [name, "free"] => (*name, f64::NEG_INFINITY, f64::INFINITY),
            [name, ">=", lo] => (*name, parse_num(lo, *line)?, f64::INFINITY),
            [name, "<=", hi] => (*name, 0.0, parse_num(hi, *line)?),
            [lo, "<=", name, "<=", hi] => (*name, parse_num(lo, *line)?, parse_num(hi, *line)?),
            _ => return Err(parse_err(*line, "unrecognized bound")),
        };
        let kind = if bin.contains(name) {
            if (lo, hi) != (0.0, 1.0) {
                return Err(parse_err(*line, format!("binary `{name}` with bounds [{lo}, {hi}]")));
            }
            VarKind::Binary
        } else {
            VarKind::Continuous { lo, hi }
        };
        b.add_var(name, kind)?;
    }
    for name in &binaries {
        if b.var(name).is_none() {
            b.add_var(name.as_str(), VarKind::Binary)?;
        }
    }
    let resolve = |terms: Vec<(String, f64)>, b: &mut ModelBuilder| -> Result<Vec<(usize, f64)>> {
        terms
            .into_iter()
            .map(|(n, c)| match b.var(&n) {
                Some(v) => Ok((v, c)),
                None => b.add_var(n, VarKind::Continuous { lo: 0.0, hi: f64::INFINITY }).map(|v| (v, c)),
            })
            .collect()
    };
    let obj = resolve(obj_terms, &mut b)?;
    for r in rows {
        let terms = resolve(r.terms, &mut b)?;
        b.add_constraint(r.name, terms, r.sense, r.rhs).map_err(|e| match e {
            MilpError::NameCollision(n) => parse_err(r.line, format!("duplicate constraint `{n}`")),
            other => other,
        })?;
    }
    b.set_objective(obj_sense, obj)?;
    b.build()
}
