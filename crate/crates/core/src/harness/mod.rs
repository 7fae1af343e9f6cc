//! Scenario files, the staged pipeline and report emission. Concrete `f64`.

mod io;
mod pipeline;
mod selftest;

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::{validate_transversality, FieldQ, SupportChart, TransversalityReport};
use crate::poly::{Poly1, Poly2, Poly3};
use crate::solver::{ArcData, SolveOptions};

pub use io::{
    emit_reports, load_report, read_solution_csv, write_solution_csv, Format, CHECKS_CSV_HEADER,
    SOLUTION_CSV_HEADER,
};
pub use pipeline::{
    run_pipeline, run_pipeline_with, BranchFitEntry, BranchSection, Check, HolderSection, Provenance,
    RunReport, SolveSection, Stage, StageOutcome, TransformSection, VerifySection,
};
pub use selftest::{
    t_one_points, vekua_selftest, SelfTest, SelfTestRow, REFINEMENT_FACTOR, SELFTEST_RESOLUTIONS,
    T_ONE_REL_TOL,
};

const BUNDLED: [(&str, &str); 5] = [
    ("flat", include_str!("../../scenarios/flat.toml")),
    ("tilted-contact-0.2", include_str!("../../scenarios/tilted-contact-0.2.toml")),
    ("tilted-contact-0.4", include_str!("../../scenarios/tilted-contact-0.4.toml")),
    ("tilted-contact-0.6", include_str!("../../scenarios/tilted-contact-0.6.toml")),
    ("curved", include_str!("../../scenarios/curved.toml")),
];

pub fn bundled_names() -> Vec<&'static str> {
    BUNDLED.iter().map(|(n, _)| *n).collect()
}

pub fn bundled_source(name: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartSpec {
    pub radius: f64,
    /// Terms `(i, j, c)` of `c p1^i p2^j`.
    #[serde(default)]
    pub psi: Vec<(u32, u32, f64)>,
    /// Power coefficients of the edge curve.
    #[serde(default)]
    pub gamma: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    #[serde(default)]
    pub q1: Vec<(u32, u32, u32, f64)>,
    #[serde(default)]
    pub q2: Vec<(u32, u32, u32, f64)>,
    #[serde(default)]
    pub q3: Vec<(u32, u32, u32, f64)>,
}

/// Half-angle Fourier terms `(n, a, b)` of `a cos(n t / 2) + b sin(n t / 2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArcSpec {
    #[serde(default)]
    pub x1: Vec<(u32, f64, f64)>,
    #[serde(default)]
    pub x2: Vec<(u32, f64, f64)>,
    #[serde(default)]
    pub x3: Vec<(u32, f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeshSpec {
    pub n_radial: usize,
    pub grading: f64,
}

impl Default for MeshSpec {
    fn default() -> Self {
        Self { n_radial: 32, grading: 2.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitKind {
    /// Harmonic extension of the arc data.
    Harmonic,
    /// `rho * arc(theta)`.
    Radial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSpec {
    pub tol: f64,
    pub max_iter: usize,
    pub armijo: f64,
    pub init: InitKind,
}

impl Default for SolverSpec {
    fn default() -> Self {
        let o = SolveOptions::<f64>::default();
        Self { tol: o.tol, max_iter: o.max_iter, armijo: o.armijo, init: InitKind::Radial }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisSpec {
    pub seed: u64,
    /// Size of the admissible direction suite.
    pub directions: usize,
    pub flux_radii: Vec<f64>,
    pub bump_radius: f64,
    /// Point `(u, 0)` on the straight boundary segment used as the Hölder centre.
    pub holder_center: f64,
    /// Distance window; defaults to `[2h, 0.2]`.
    pub holder_window: Option<(f64, f64)>,
    pub branch_threshold: f64,
    pub m_max: u32,
    /// Sample radius around a branch candidate for the expansion fit.
    pub branch_radius: f64,
}

impl Default for AnalysisSpec {
    fn default() -> Self {
        Self {
            seed: 7,
            directions: 50,
            flux_radii: vec![0.02, 0.04, 0.08],
            bump_radius: 0.8,
            holder_center: 0.0,
            holder_window: None,
            branch_threshold: crate::analysis::DEFAULT_BRANCH_THRESHOLD,
            m_max: 5,
            branch_radius: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub chart: ChartSpec,
    #[serde(default)]
    pub field: FieldSpec,
    pub arc: ArcSpec,
    #[serde(default)]
    pub mesh: MeshSpec,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub analysis: AnalysisSpec,
}

impl Scenario {
    /// Parses and validates scenario text.
    pub fn from_toml(text: &str) -> Result<Self> {
        let s: Scenario = toml::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn chart(&self) -> Result<SupportChart<f64>> {
        SupportChart::new(
            Poly2::new(self.chart.psi.clone()),
            Poly1::new(self.chart.gamma.clone()),
            self.chart.radius,
        )
    }

    pub fn field(&self) -> FieldQ<f64> {
        FieldQ::new(
            Poly3::new(self.field.q1.clone()),
            Poly3::new(self.field.q2.clone()),
            Poly3::new(self.field.q3.clone()),
        )
    }

    pub fn arc(&self) -> ArcData<f64> {
        ArcData { components: [self.arc.x1.clone(), self.arc.x2.clone(), self.arc.x3.clone()] }
    }

    pub fn solve_options(&self) -> SolveOptions<f64> {
        SolveOptions {
            tol: self.solver.tol,
            max_iter: self.solver.max_iter,
            armijo: self.solver.armijo,
            ..SolveOptions::default()
        }
    }

    /// Chart normalization, transversality and parameter ranges.
    pub fn validate(&self) -> Result<TransversalityReport<f64>> {
        let bad = |m: String| Err(Error::Scenario(format!("{}: {m}", self.name)));
        if self.mesh.n_radial < 2 {
            return bad(format!("mesh.n_radial must be at least 2, got {}", self.mesh.n_radial));
        }
        if !(self.mesh.grading >= 1.0) {
            return bad(format!("mesh.grading must be >= 1, got {}", self.mesh.grading));
        }
        if !(self.solver.tol > 0.0) || self.solver.max_iter == 0 {
            return bad("solver.tol must be positive and solver.max_iter nonzero".into());
        }
        if self.analysis.m_max == 0 || !(self.analysis.branch_threshold > 0.0) {
            return bad("analysis.m_max and analysis.branch_threshold must be positive".into());
        }
        if self.analysis.holder_center.abs() >= 1.0 {
            return bad("analysis.holder_center must lie on the open segment (-1, 1)".into());
        }
        let chart = self.chart()?;
        let field = self.field();
        let rep = validate_transversality(&chart, &field, crate::geometry::DEFAULT_TRANSVERSALITY_SAMPLES)?;
        if !rep.admissible {
            return Err(Error::Transversality { q0: rep.q0 });
        }
        Ok(rep)
    }

    /// SHA-256 of the canonical serialization.
    pub fn config_hash(&self) -> String {
        let canon = toml::to_string(self).expect("scenario serializes");
        hex::encode(Sha256::digest(canon.as_bytes()))
    }
}

/// Loads a scenario file and validates it.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let text = std::fs::read_to_string(path.as_ref())?;
    Scenario::from_toml(&text)
}

/// A bundled scenario name or a path to a scenario file.
pub fn resolve_scenario(name_or_path: &str) -> Result<Scenario> {
    match bundled_source(name_or_path) {
        Some(text) => Scenario::from_toml(text),
        None if Path::new(name_or_path).exists() => load_scenario(name_or_path),
        None => Err(Error::Scenario(format!(
            "unknown scenario '{name_or_path}' (bundled: {})",
            bundled_names().join(", ")
        ))),
    }
}

#[cfg(test)]
mod tests;
