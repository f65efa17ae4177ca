//! Free-format MPS.
//!
//! Columns are written in declaration order with `MARKER` pairs around runs
//! of binaries; every binary also gets a `BV` bound so readers that ignore
//! markers still see the domain. Formulation and root travel in `*` comments.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{parse_err, Result};
use crate::lp::num;
use crate::model::{Metadata, MilpModel, ModelBuilder, ObjSense, Sense, VarKind};

const OBJ_ROW: &str = "obj";

pub fn write_mps(m: &MilpModel) -> String {
    let mut out = String::new();
    let meta = m.metadata();
    let _ = writeln!(out, "* formulation: {}", meta.formulation);
    if let Some(root) = &meta.root {
        let _ = writeln!(out, "* root: {root}");
    }
    let name = if meta.formulation.is_empty() { "model" } else { &meta.formulation };
    let _ = writeln!(out, "NAME {name}");
    out.push_str("OBJSENSE\n");
    out.push_str(match m.objective().sense {
        ObjSense::Minimize => "    MIN\n",
        ObjSense::Maximize => "    MAX\n",
    });
    out.push_str("ROWS\n");
    let _ = writeln!(out, " N {OBJ_ROW}");
    for c in m.constraints() {
        let code = match c.sense {
            Sense::Le => "L",
            Sense::Ge => "G",
            Sense::Eq => "E",
        };
        let _ = writeln!(out, " {code} {}", c.name);
    }

    let n = m.variables().len();
    let mut columns: Vec<Vec<(&str, f64)>> = vec![Vec::new(); n];
    for &(v, c) in &m.objective().terms {
        columns[v].push((OBJ_ROW, c));
    }
    for row in m.constraints() {
        for &(v, c) in &row.terms {
            columns[v].push((row.name.as_str(), c));
        }
    }
    out.push_str("COLUMNS\n");
    let mut in_marker = false;
    for (v, var) in m.variables().iter().enumerate() {
        if var.is_binary() != in_marker {
            let tag = if var.is_binary() { "'INTORG'" } else { "'INTEND'" };
            let _ = writeln!(out, "    MARKER 'MARKER' {tag}");
            in_marker = var.is_binary();
        }
        if columns[v].is_empty() {
            let _ = writeln!(out, "    {} {OBJ_ROW} 0", var.name);
        }
        for (row, c) in &columns[v] {
            let _ = writeln!(out, "    {} {row} {}", var.name, num(*c));
        }
    }
    if in_marker {
        let _ = writeln!(out, "    MARKER 'MARKER' 'INTEND'");
    }
    out.push_str("RHS\n");
    for c in m.constraints() {
        if c.rhs != 0.0 {
            let _ = writeln!(out, "    RHS {} {}", c.name, num(c.rhs));
        }
    }
    out.push_str("BOUNDS\n");
    for v in m.variables() {
        match v.kind {
            VarKind::Binary => {
                let _ = writeln!(out, " BV BND {}", v.name);
            }
            VarKind::Continuous { lo, hi } => {
                if lo == f64::NEG_INFINITY && hi == f64::INFINITY {
                    let _ = writeln!(out, " FR BND {}", v.name);
                    continue;
                }
                if lo == hi {
                    let _ = writeln!(out, " FX BND {} {}", v.name, num(lo));
                    continue;
                }
                if lo == f64::NEG_INFINITY {
                    let _ = writeln!(out, " MI BND {}", v.name);
                } else if lo != 0.0 {
                    let _ = writeln!(out, " LO BND {} {}", v.name, num(lo));
                }
                if hi.is_finite() {
                    let _ = writeln!(out, " UP BND {} {}", v.name, num(hi));
                }
            }
        }
    }
    out.push_str("ENDATA\n");
    out
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    Head,
    ObjSense,
    Rows,
    Columns,
    Rhs,
    Bounds,
    Done,
}

pub fn parse_mps(text: &str) -> Result<MilpModel> {
    let mut meta = Metadata::default();
    let mut sect = Section::Head;
    let mut obj_sense = ObjSense::Minimize;
    let mut obj_row: Option<String> = None;
    let mut rows: Vec<(String, Sense)> = Vec::new();
    let mut row_index: HashMap<String, usize> = HashMap::new();
    let mut cols: Vec<String> = Vec::new();
    let mut col_index: HashMap<String, usize> = HashMap::new();
    let mut entries: Vec<(usize, Option<usize>, f64)> = Vec::new();
    let mut rhs: Vec<f64> = Vec::new();
    let mut bounds: HashMap<usize, (f64, f64)> = HashMap::new();
    let mut binary: Vec<bool> = Vec::new();

    for (ln, raw) in text.lines().enumerate() {
        let line = ln + 1;
        if let Some(comment) = raw.strip_prefix('*') {
            let comment = comment.trim();
            if let Some(f) = comment.strip_prefix("formulation:") {
                meta.formulation = f.trim().to_string();
            } else if let Some(r) = comment.strip_prefix("root:") {
                meta.root = Some(r.trim().to_string());
            }
            continue;
        }
        let toks: Vec<&str> = raw.split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        if !raw.starts_with(char::is_whitespace) {
            sect = match toks[0] {
                "NAME" => Section::Head,
                "OBJSENSE" => {
                    if let Some(s) = toks.get(1) {
                        obj_sense = if s.starts_with("MAX") { ObjSense::Maximize } else { ObjSense::Minimize };
                    }
                    Section::ObjSense
                }
                "ROWS" => Section::Rows,
                "COLUMNS" => Section::Columns,
                "RHS" => Section::Rhs,
                "BOUNDS" => Section::Bounds,
                "RANGES" => return Err(parse_err(line, "RANGES are not supported")),
                "ENDATA" => Section::Done,
                other => return Err(parse_err(line, format!("unknown section `{other}`"))),
            };
            continue;
        }
        let number = |tok: &str| -> Result<f64> {
            tok.parse::<f64>()
                .map_err(|_| parse_err(line, format!("expected a number, found `{tok}`")))
        };
        match sect {
            Section::ObjSense => {
                obj_sense = if toks[0].starts_with("MAX") { ObjSense::Maximize } else { ObjSense::Minimize };
            }
            Section::Rows => {
                let [code, name] = toks[..] else {
                    return Err(parse_err(line, "expected `<type> <row>`"));
                };
                let s = match code {
                    "N" => {
                        if obj_row.is_none() {
                            obj_row = Some(name.to_string());
                        }
                        continue;
                    }
                    "L" => Sense::Le,
                    "G" => Sense::Ge,
                    "E" => Sense::Eq,
                    _ => return Err(parse_err(line, format!("unknown row type `{code}`"))),
                };
                if row_index.insert(name.to_string(), rows.len()).is_some() {
                    return Err(parse_err(line, format!("duplicate row `{name}`")));
                }
                rows.push((name.to_string(), s));
                rhs.push(0.0);
            }
            Section::Columns => {
                if toks.get(1) == Some(&"'MARKER'") {
                    continue;
                }
                if toks.len() != 3 && toks.len() != 5 {
                    return Err(parse_err(line, "expected `<col> <row> <value> [<row> <value>]`"));
                }
                let col = match col_index.get(toks[0]) {
                    Some(&c) => c,
                    None => {
                        col_index.insert(toks[0].to_string(), cols.len());
                        cols.push(toks[0].to_string());
                        binary.push(false);
                        cols.len() - 1
                    }
                };
                for pair in toks[1..].chunks(2) {
                    let value = number(pair[1])?;
                    if Some(pair[0]) == obj_row.as_deref() {
                        entries.push((col, None, value));
                    } else {
                        let r = *row_index
                            .get(pair[0])
                            .ok_or_else(|| parse_err(line, format!("unknown row `{}`", pair[0])))?;
                        entries.push((col, Some(r), value));
                    }
                }
            }
            Section::Rhs => {
                if toks.len() != 3 && toks.len() != 5 {
                    return Err(parse_err(line, "expected `<set> <row> <value> [<row> <value>]`"));
                }
                for pair in toks[1..].chunks(2) {
                    let r = *row_index
                        .get(pair[0])
                        .ok_or_else(|| parse_err(line, format!("unknown row `{}`", pair[0])))?;
                    rhs[r] = number(pair[1])?;
                }
            }
            Section::Bounds => {
                if toks.len() < 3 {
                    return Err(parse_err(line, "expected `<type> <set> <col> [<value>]`"));
                }
                let col = *col_index
                    .get(toks[2])
                    .ok_or_else(|| parse_err(line, format!("unknown column `{}`", toks[2])))?;
                let b = bounds.entry(col).or_insert((0.0, f64::INFINITY));
                let value = || -> Result<f64> {
                    toks.get(3)
                        .ok_or_else(|| parse_err(line, "bound without value"))
                        .and_then(|t| number(t))
                };
                match toks[0] {
                    "BV" => binary[col] = true,
                    "UP" => b.1 = value()?,
                    "LO" => b.0 = value()?,
                    "FX" => {
                        let v = value()?;
                        *b = (v, v);
                    }
                    "FR" => *b = (f64::NEG_INFINITY, f64::INFINITY),
                    "MI" => b.0 = f64::NEG_INFINITY,
                    "PL" => b.1 = f64::INFINITY,
                    other => return Err(parse_err(line, format!("unsupported bound type `{other}`"))),
                }
            }
            Section::Head => {}
            Section::Done => return Err(parse_err(line, "content after ENDATA")),
        }
    }
    if sect != Section::Done {
        return Err(parse_err(text.lines().count(), "missing ENDATA"));
    }

    let mut b = ModelBuilder::new(meta);
    for (c, name) in cols.iter().enumerate() {
        let kind = if binary[c] {
            VarKind::Binary
        } else {
            let (lo, hi) = bounds.get(&c).copied().unwrap_or((0.0, f64::INFINITY));
            VarKind::Continuous { lo, hi }
        };
        b.add_var(name.as_str(), kind)?;
    }
    let mut row_terms: Vec<Vec<(usize, f64)>> = vec![Vec::new(); rows.len()];
    let mut obj = Vec::new();
    for (col, row, value) in entries {
        match row {
            Some(r) => row_terms[r].push((col, value)),
            None => obj.push((col, value)),
        }
    }
    for (((name, s), terms), r) in rows.into_iter().zip(row_terms).zip(rhs) {
        b.add_constraint(name, terms, s, r)?;
    }
    b.set_objective(obj_sense, obj)?;
    b.build()
}
