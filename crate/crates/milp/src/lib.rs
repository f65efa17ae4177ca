//! Mixed-integer formulations of cross-layer survivability.
//!
//! [`formulations`] builds the models from an instance, [`lp`] and [`mps`]
//! read and write them, and [`solve::solve_tiny`] solves desk-scale models
//! exactly for cross-checking against the combinatorial engine.

pub mod error;
pub mod formulations;
pub mod lp;
pub mod model;
pub mod mps;
pub mod solve;

pub use error::{MilpError, Result};
pub use formulations::{
    build_base_set_model, build_max_tree_model, build_surtest_model, formulation, Formulation,
    FORMULATION_IDS,
};
pub use model::{MilpModel, ModelBuilder, ObjSense, Sense, VarKind, Variable};
pub use solve::{solve_tiny, Limits, Solution};

/// Exchange formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Lp,
    Mps,
}

impl Format {
    pub fn from_name(name: &str) -> Option<Format> {
        match name {
            "lp" => Some(Format::Lp),
            "mps" => Some(Format::Mps),
            _ => None,
        }
    }
}

pub fn write_model(m: &MilpModel, format: Format) -> String {
    match format {
        Format::Lp => lp::write_lp(m),
        Format::Mps => mps::write_mps(m),
    }
}

pub fn parse_model(text: &str, format: Format) -> Result<MilpModel> {
    match format {
        Format::Lp => lp::parse_lp(text),
        Format::Mps => mps::parse_mps(text),
    }
}
