//! Scenario files: a strict, versioned TOML schema with embedded expressions.
//!
//! Parsing happens in two passes. The TOML layer deserializes into the
//! structs below (unknown keys are rejected), keeping the source span of
//! every expression string. The second pass parses each expression in its
//! context (coordinates, flow time or jet symbols) and maps expression
//! columns back to file line and column.

mod build;
mod file;

pub use build::{LocalSetup, Model};
pub use file::{
    Assumptions, CandidateEntry, ConnectionSection, Ex, FieldGeneratorEntry, FieldLieEntry,
    GeneratorEntry, GroupSection, LieSection, LocalitySection, PathEntry, ScenarioFile,
    SectionEntry, SolverSection, SpaceSection, SCHEMA_VERSION,
};

use crate::error::Result;

/// Scenario files shipped with the crate, by file stem.
pub const BUNDLED: &[(&str, &str)] = &[
    ("z_on_r_half", include_str!("../../examples/z_on_r_half.scn")),
    ("z_on_r_periodic_candidates", include_str!("../../examples/z_on_r_periodic_candidates.scn")),
    ("trivial", include_str!("../../examples/trivial.scn")),
    ("rotation", include_str!("../../examples/rotation.scn")),
    ("rotation_invariant", include_str!("../../examples/rotation_invariant.scn")),
    ("euclidean_plane", include_str!("../../examples/euclidean_plane.scn")),
    ("z2_character", include_str!("../../examples/z2_character.scn")),
    ("z2_corrupted", include_str!("../../examples/z2_corrupted.scn")),
    ("torus_flat", include_str!("../../examples/torus_flat.scn")),
    ("lattice_z_example", include_str!("../../examples/lattice_z_example.scn")),
    ("lattice_z_restricted", include_str!("../../examples/lattice_z_restricted.scn")),
    ("lattice_planted", include_str!("../../examples/lattice_planted.scn")),
];

pub fn bundled_text(name: &str) -> Option<&'static str> {
    let stem = name.strip_suffix(".scn").unwrap_or(name);
    BUNDLED.iter().find(|(n, _)| *n == stem).map(|(_, t)| *t)
}

/// Parses and resolves a scenario file.
pub fn parse_scenario(text: &str) -> Result<ScenarioFile> {
    ScenarioFile::parse(text)
}

/// Canonical TOML text of a scenario.
pub fn print_scenario(file: &ScenarioFile) -> Result<String> {
    file.print()
}
