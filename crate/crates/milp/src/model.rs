//! Explicit mixed-integer models.

use std::collections::HashMap;

use crate::error::{MilpError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VarKind {
    Binary,
    Continuous { lo: f64, hi: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
}

impl Variable {
    pub fn is_binary(&self) -> bool {
        self.kind == VarKind::Binary
    }

    pub fn bounds(&self) -> (f64, f64) {
        match self.kind {
            VarKind::Binary => (0.0, 1.0),
            VarKind::Continuous { lo, hi } => (lo, hi),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

impl Sense {
    pub fn symbol(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        }
    }
}

/// `sum(coeff * var) sense rhs`, terms sorted by variable index.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjSense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Objective {
    pub sense: ObjSense,
    pub terms: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Metadata {
    /// Registry id of the formulation that built the model.
    pub formulation: String,
    /// Root of the logical tree flow, when the formulation has one.
    pub root: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MilpModel {
    variables: Vec<Variable>,
    constraints: Vec<Constraint>,
    objective: Objective,
    metadata: Metadata,
}

impl MilpModel {
    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn variable(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn constraint(&self, name: &str) -> Option<&Constraint> {
        self.constraints.iter().find(|c| c.name == name)
    }

    pub fn objective(&self) -> &Objective {
        &self.objective
    }

    pub fn metadata(&self) -> &Metadata {
        &self.metadata
    }

    pub fn binary_count(&self) -> usize {
        self.variables.iter().filter(|v| v.is_binary()).count()
    }

    /// Objective value of a full assignment.
    pub fn evaluate(&self, values: &[f64]) -> f64 {
        self.objective.terms.iter().map(|&(v, c)| c * values[v]).sum()
    }

    /// Names of constraints violated by `values` beyond `tol`.
    pub fn violations(&self, values: &[f64], tol: f64) -> Vec<&str> {
        let mut out = Vec::new();
        for (v, x) in self.variables.iter().zip(values) {
            let (lo, hi) = v.bounds();
            if *x < lo - tol || *x > hi + tol {
                out.push(v.name.as_str());
            }
        }
        for c in &self.constraints {
            let lhs: f64 = c.terms.iter().map(|&(v, a)| a * values[v]).sum();
            let ok = match c.sense {
                Sense::Le => lhs <= c.rhs + tol,
                Sense::Ge => lhs >= c.rhs - tol,
                Sense::Eq => (lhs - c.rhs).abs() <= tol,
            };
            if !ok {
                out.push(c.name.as_str());
            }
        }
        out
    }
}

/// Replaces every character outside `[A-Za-z0-9_]` with `_`.
pub fn sanitize(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' })
        .collect()
}

/// Incremental construction with name checks.
#[derive(Debug, Default)]
pub struct ModelBuilder {
    variables: Vec<Variable>,
    index: HashMap<String, usize>,
    constraints: Vec<Constraint>,
    row_names: HashMap<String, usize>,
    objective: Option<Objective>,
    metadata: Metadata,
}

impl ModelBuilder {
    pub fn new(metadata: Metadata) -> Self {
        ModelBuilder {
            metadata,
            ..Default::default()
        }
    }

    /// A builder holding everything in `m`, for adding rows to it.
    pub fn from_model(m: &MilpModel) -> Self {
        ModelBuilder {
            index: m.variables.iter().enumerate().map(|(i, v)| (v.name.clone(), i)).collect(),
            row_names: m.constraints.iter().enumerate().map(|(i, c)| (c.name.clone(), i)).collect(),
            variables: m.variables.clone(),
            constraints: m.constraints.clone(),
            objective: Some(m.objective.clone()),
            metadata: m.metadata.clone(),
        }
    }

    pub fn add_var(&mut self, name: impl Into<String>, kind: VarKind) -> Result<usize> {
        let name = name.into();
        if let VarKind::Continuous { lo, hi } = kind {
            if lo.is_nan() || hi.is_nan() || lo > hi || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
                return Err(MilpError::EmptyDomain { name, lo, hi });
            }
        }
        if self.index.contains_key(&name) {
            return Err(MilpError::NameCollision(name));
        }
        let id = self.variables.len();
        self.index.insert(name.clone(), id);
        self.variables.push(Variable { name, kind });
        Ok(id)
    }

    pub fn var(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn var_count(&self) -> usize {
        self.variables.len()
    }

    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        terms: impl IntoIterator<Item = (usize, f64)>,
        sense: Sense,
        rhs: f64,
    ) -> Result<()> {
        let name = name.into();
        if self.row_names.contains_key(&name) {
            return Err(MilpError::NameCollision(name));
        }
        let terms = self.canonical(terms)?;
        self.row_names.insert(name.clone(), self.constraints.len());
        self.constraints.push(Constraint {
            name,
            terms,
            sense,
            rhs: rhs + 0.0,
        });
        Ok(())
    }

    pub fn set_objective(
        &mut self,
        sense: ObjSense,
        terms: impl IntoIterator<Item = (usize, f64)>,
    ) -> Result<()> {
        let terms = self.canonical(terms)?;
        self.objective = Some(Objective { sense, terms });
        Ok(())
    }

    /// Sorts by variable, merges repeats and drops zero coefficients.
    fn canonical(&self, terms: impl IntoIterator<Item = (usize, f64)>) -> Result<Vec<(usize, f64)>> {
        let mut v: Vec<(usize, f64)> = terms.into_iter().collect();
        if let Some(&(bad, _)) = v.iter().find(|(i, _)| *i >= self.variables.len()) {
            return Err(MilpError::UnknownVariable(format!("#{bad}")));
        }
        v.sort_by_key(|t| t.0);
        let mut out: Vec<(usize, f64)> = Vec::with_capacity(v.len());
        for (i, c) in v {
            match out.last_mut() {
                Some(last) if last.0 == i => last.1 += c,
                _ => out.push((i, c)),
            }
        }
        out.retain(|t| t.1 != 0.0);
        Ok(out)
    }

    pub fn build(self) -> Result<MilpModel> {
        if self.constraints.is_empty() {
            return Err(MilpError::EmptyModel);
        }
        Ok(MilpModel {
            variables: self.variables,
            constraints: self.constraints,
            objective: self.objective.unwrap_or(Objective {
                sense: ObjSense::Minimize,
                terms: Vec::new(),
            }),
            metadata: self.metadata,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sanitize_keeps_word_characters() {
        assert_eq!(sanitize("New York-1"), "New_York_1");
        assert_eq!(sanitize("a_b9"), "a_b9");
    }

    #[test]
    fn terms_are_merged_and_sorted() {
        let mut b = ModelBuilder::new(Metadata::default());
        let x = b.add_var("x", VarKind::Binary).unwrap();
        let y = b.add_var("y", VarKind::Binary).unwrap();
        b.add_constraint("c", [(y, 1.0), (x, 2.0), (y, -1.0)], Sense::Le, 1.0).unwrap();
        let m = b.build().unwrap();
        assert_eq!(m.constraints()[0].terms, vec![(x, 2.0)]);
    }

    #[test]
    fn duplicate_names_are_rejected() {
        let mut b = ModelBuilder::new(Metadata::default());
        b.add_var("x", VarKind::Binary).unwrap();
        assert!(matches!(
            b.add_var("x", VarKind::Binary),
            Err(MilpError::NameCollision(_))
        ));
        b.add_constraint("c", [], Sense::Le, 0.0).unwrap();
        assert!(b.add_constraint("c", [], Sense::Le, 0.0).is_err());
    }

    #[test]
    fn empty_model_is_rejected() {
        let mut b = ModelBuilder::new(Metadata::default());
        b.add_var("x", VarKind::Binary).unwrap();
        assert!(matches!(b.build(), Err(MilpError::EmptyModel)));
    }

    #[test]
    fn inverted_bounds_are_rejected() {
        let mut b = ModelBuilder::new(Metadata::default());
        assert!(b
            .add_var("w", VarKind::Continuous { lo: 1.0, hi: 0.0 })
            .is_err());
    }
}
