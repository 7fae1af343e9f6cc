use std::sync::Arc;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::{InitKind, Scenario};
use crate::analysis::{default_window, detect_branch_points, estimate_holder_exponent, fit_branch_expansion, BranchCandidate, ExpansionFit};
use crate::error::{Error, Result};
use crate::geometry::{FieldQ, SupportChart};
use crate::mesh::build_halfdisc_mesh;
use crate::solver::{
    boundary_flux, bump_test_function, chi_decay, conformality_defect, direction_suite, element_gradients,
    first_variation, nodal_gradients, rellich_residual, solve_stationary, ChiReport, DiscreteMap, FluxReport, Problem,
};
use crate::transform::{
    flux_identity_residual, frame_at, gradient_equivalence, node_z_field, quadratic_form_check, reflect,
    value_at, wirtinger_bar_residual,
};
use crate::solver::Where;
use crate::vekua::{HolderEstimate, HolderValue};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Solve,
    Verify,
    Transform,
    Branchfit,
    Holder,
}

impl Stage {
    pub const ALL: [Stage; 5] = [Stage::Solve, Stage::Verify, Stage::Transform, Stage::Branchfit, Stage::Holder];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Solve => "solve",
            Stage::Verify => "verify",
            Stage::Transform => "transform",
            Stage::Branchfit => "branchfit",
            Stage::Holder => "holder",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|st| st.as_str() == s)
    }
}

/// One numeric entry with the operation that produced it and its bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub op: String,
    pub value: f64,
    /// `"<="` or `">="`.
    pub relation: String,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    fn at_most(name: &str, op: &str, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            op: op.into(),
            value,
            relation: "<=".into(),
            tolerance,
            pass: value <= tolerance,
        }
    }

    fn at_least(name: &str, op: &str, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            op: op.into(),
            value,
            relation: ">=".into(),
            tolerance,
            pass: value >= tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub scenario: String,
    pub config_hash: String,
    pub seed: u64,
    pub n_radial: usize,
    pub grading: f64,
    pub nodes: usize,
    pub triangles: usize,
    pub inner_spacing: f64,
    /// `"solve"` or `"loaded"`.
    pub solution_source: String,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageOutcome {
    pub stage: Stage,
    pub ok: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveSection {
    pub energy: f64,
    pub gradient_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub active_edge_nodes: Vec<usize>,
    pub energy_history: Vec<f64>,
    pub q0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifySection {
    pub directions: usize,
    pub first_variation_min: f64,
    pub first_variation_max_consistency: f64,
    pub flux: FluxReport<f64>,
    pub chi: ChiReport<f64>,
    pub rellich_max: f64,
    pub conformality_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformSection {
    pub triangles: usize,
    pub det_b_max: f64,
    pub c_closed_vs_direct_max: f64,
    pub flux_identity_max: f64,
    pub quadratic_form_max: f64,
    pub rearranged_max: f64,
    pub ratio_min: f64,
    pub ratio_max: f64,
    /// Smallest `c` with all ratios in `[1/c, c]`.
    pub constant: f64,
    pub branch_triangles: usize,
    pub wbar_ratio_sup: f64,
    pub wbar_counted: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchFitEntry {
    pub node: usize,
    pub fit: Option<ExpansionFit<f64>>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchSection {
    pub threshold: f64,
    pub median_gradient: f64,
    pub degenerate: bool,
    pub candidates: Vec<BranchCandidate<f64>>,
    pub fits: Vec<BranchFitEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolderSection {
    pub center: [f64; 2],
    pub estimate: HolderEstimate<f64>,
    /// `(ln distance, ln difference)` over the fit window.
    pub table: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub provenance: Provenance,
    pub stages: Vec<StageOutcome>,
    pub checks: Vec<Check>,
    pub solve: Option<SolveSection>,
    pub verify: Option<VerifySection>,
    pub transform: Option<TransformSection>,
    pub branchfit: Option<BranchSection>,
    pub holder: Option<HolderSection>,
    #[serde(skip)]
    pub solution: Option<DiscreteMap<f64>>,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.stages.iter().all(|s| s.ok) && self.checks.iter().all(|c| c.pass)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

const FIRST_VARIATION_FLOOR: f64 = -1e-6;
const FLUX_TOL: f64 = 1e-3;
const CHI_MIN_SLOPE: f64 = 0.9;
const DET_TOL: f64 = 1e-12;
const C_TOL: f64 = 1e-10;
const FLUX_IDENTITY_TOL: f64 = 1e-10;
const FORM_TOL: f64 = 1e-10;
const REARRANGED_TOL: f64 = 1e-12;
const EQUIVALENCE_MAX: f64 = 10.0;
const HOLDER_MIN_ALPHA: f64 = 0.45;
const HOLDER_MIN_R2: f64 = 0.9;

pub fn run_pipeline(scenario: &Scenario, stages: &[Stage]) -> Result<RunReport> {
    run_pipeline_with(scenario, stages, None)
}

/// Runs the requested stages in dependency order. Stages after `solve` use
/// the computed solution, or `solution` when `solve` is not requested.
pub fn run_pipeline_with(
    scenario: &Scenario,
    stages: &[Stage],
    solution: Option<DiscreteMap<f64>>,
) -> Result<RunReport> {
    let tr = scenario.validate()?;
    let chart = scenario.chart()?;
    let field = scenario.field();
    let mut order: Vec<Stage> = stages.to_vec();
    order.sort();
    order.dedup();
    let mesh = match &solution {
        Some(m) if !order.contains(&Stage::Solve) => m.mesh.clone(),
        _ => Arc::new(build_halfdisc_mesh::<f64>(scenario.mesh.n_radial, scenario.mesh.grading)?),
    };
    let loaded = solution.is_some() && !order.contains(&Stage::Solve);
    let mut report = RunReport {
        provenance: Provenance {
            scenario: scenario.name.clone(),
            config_hash: scenario.config_hash(),
            seed: scenario.analysis.seed,
            n_radial: scenario.mesh.n_radial,
            grading: scenario.mesh.grading,
            nodes: mesh.node_count(),
            triangles: mesh.mesh.triangle_count(),
            inner_spacing: mesh.inner_spacing(),
            solution_source: if loaded { "loaded" } else { "solve" }.into(),
            version: env!("CARGO_PKG_VERSION").into(),
        },
        stages: Vec::new(),
        checks: Vec::new(),
        solve: None,
        verify: None,
        transform: None,
        branchfit: None,
        holder: None,
        solution: if loaded { solution } else { None },
    };
    for stage in order {
        let result = match stage {
            Stage::Solve => solve_stage(scenario, &chart, &field, mesh.clone(), tr.q0, &mut report),
            other => match report.solution.clone() {
                None => Err(Error::InvalidInput(format!(
                    "stage {} requires a solution (run solve or load one)",
                    other.as_str()
                ))),
                Some(map) => match other {
                    Stage::Verify => verify_stage(scenario, &chart, &field, &map, &mut report),
                    Stage::Transform => transform_stage(&chart, &field, &map, &mut report),
                    Stage::Branchfit => branch_stage(scenario, &map, &mut report),
                    Stage::Holder => holder_stage(scenario, &map, &mut report),
                    Stage::Solve => unreachable!(),
                },
            },
        };
        if let Err(e) = &result {
            log::warn!("stage {} failed: {e}", stage.as_str());
        }
        report.stages.push(StageOutcome {
            stage,
            ok: result.is_ok(),
            error: result.err().map(|e| e.to_string()),
        });
    }
    Ok(report)
}

fn solve_stage(
    scenario: &Scenario,
    chart: &SupportChart<f64>,
    field: &FieldQ<f64>,
    mesh: Arc<crate::mesh::HalfDiscMesh<f64>>,
    q0: f64,
    report: &mut RunReport,
) -> Result<()> {
    let arc = scenario.arc();
    let init = match scenario.solver.init {
        InitKind::Harmonic => arc.harmonic_map(mesh),
        InitKind::Radial => arc.radial_map(mesh),
    };
    let problem = Problem { chart: chart.clone(), field: field.clone() };
    let opts = scenario.solve_options();
    let (map, rep) = solve_stationary(&problem, &init, &opts)?;
    report.checks.push(Check::at_most("gradient_norm", "solve_stationary", rep.gradient_norm, opts.tol));
    report.solve = Some(SolveSection {
        energy: rep.energy,
        gradient_norm: rep.gradient_norm,
        iterations: rep.iterations,
        converged: rep.converged,
        active_edge_nodes: rep.active_edge_nodes,
        energy_history: rep.energy_history,
        q0,
    });
    report.solution = Some(map);
    Ok(())
}

fn verify_stage(
    scenario: &Scenario,
    chart: &SupportChart<f64>,
    field: &FieldQ<f64>,
    map: &DiscreteMap<f64>,
    report: &mut RunReport,
) -> Result<()> {
    let a = &scenario.analysis;
    let suite = direction_suite(map, chart, a.directions, a.seed)?;
    let (mut fv_min, mut fv_cons) = (f64::INFINITY, 0.0f64);
    for dir in &suite {
        let fv = first_variation(map, field, chart, dir)?;
        fv_min = fv_min.min(fv.value);
        fv_cons = fv_cons.max(fv.consistency);
    }
    let flux = boundary_flux(map, field, chart, bump_test_function(a.bump_radius), &a.flux_radii)?;
    let chi = chi_decay(map, chart, &a.flux_radii)?;
    let rellich = rellich_residual(map, field)?;
    let conf = conformality_defect(map);
    report.checks.push(Check::at_least("first_variation_min", "first_variation", fv_min, FIRST_VARIATION_FLOOR));
    report.checks.push(Check::at_most("flux_extrapolated", "boundary_flux", flux.extrapolated.abs(), FLUX_TOL));
    let slope = if chi.identically_satisfied { f64::INFINITY } else { chi.slope.unwrap_or(f64::NEG_INFINITY) };
    let mut chi_check = Check::at_least("chi_slope", "chi_decay", slope, CHI_MIN_SLOPE);
    if chi.identically_satisfied {
        // JSON has no infinity; an identically vanishing integrand passes.
        chi_check.value = 0.0;
        chi_check.pass = true;
    }
    report.checks.push(chi_check);
    report.verify = Some(VerifySection {
        directions: suite.len(),
        first_variation_min: fv_min,
        first_variation_max_consistency: fv_cons,
        flux,
        chi,
        rellich_max: rellich.iter().fold(0.0, |m, v| m.max(v.abs())),
        conformality_max: conf.iter().fold(0.0, |m, (a, b)| m.max(a.abs()).max(b.abs())),
    });
    Ok(())
}

fn transform_stage(
    chart: &SupportChart<f64>,
    field: &FieldQ<f64>,
    map: &DiscreteMap<f64>,
    report: &mut RunReport,
) -> Result<()> {
    let grads = element_gradients(map);
    let (mut det, mut cmax, mut flux, mut form, mut rearr) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for (t, (xu, xv)) in grads.iter().enumerate() {
        let x = value_at(map, Where::Element(t))?;
        let xw = [0, 1, 2].map(|k| Complex::new(0.5 * xu[k], -0.5 * xv[k]));
        let f = frame_at(chart, field, &x, xw)?;
        let b = crate::transform::assemble_b(chart, field, &x)?;
        det = det.max((b.det_direct - b.det_closed).norm());
        let c = crate::transform::assemble_c(chart, field, &x)?;
        for i in 0..3 {
            for j in 0..3 {
                cmax = cmax.max((c.direct[i][j] - Complex::new(c.closed[i][j], 0.0)).norm());
            }
        }
        flux = flux.max(flux_identity_residual(chart, field, &x, xu, xv)?);
        let q = quadratic_form_check(&f);
        form = form.max((q.form - q.xw_form).norm());
        rearr = rearr.max(q.rearranged_residual.norm());
    }
    let ge = gradient_equivalence(map, chart, field)?;
    let constant = if ge.min_ratio > 0.0 { ge.max_ratio.max(1.0 / ge.min_ratio) } else { f64::INFINITY };
    let z = node_z_field(map, chart, field)?;
    let wbar = wirtinger_bar_residual(&reflect(&map.mesh, &z)?);
    let checks = [
        Check::at_most("det_b_closed_vs_cofactor", "assemble_b", det, DET_TOL),
        Check::at_most("c_closed_vs_inverse", "assemble_c", cmax, C_TOL),
        Check::at_most("flux_identity", "flux_identity_residual", flux, FLUX_IDENTITY_TOL),
        Check::at_most("quadratic_form", "quadratic_form_check", form, FORM_TOL),
        Check::at_most("quadratic_rearrangement", "quadratic_form_check", rearr, REARRANGED_TOL),
        Check::at_most("gradient_equivalence_constant", "gradient_equivalence", constant, EQUIVALENCE_MAX),
    ];
    report.checks.extend(checks);
    report.transform = Some(TransformSection {
        triangles: grads.len(),
        det_b_max: det,
        c_closed_vs_direct_max: cmax,
        flux_identity_max: flux,
        quadratic_form_max: form,
        rearranged_max: rearr,
        ratio_min: ge.min_ratio,
        ratio_max: ge.max_ratio,
        constant,
        branch_triangles: ge.branch_candidates.len(),
        wbar_ratio_sup: wbar.ratio_sup,
        wbar_counted: wbar.counted,
    });
    Ok(())
}

/// Nodal `x_w = (x_u - i x_v) / 2` from area-averaged gradients.
fn nodal_xw(map: &DiscreteMap<f64>) -> Vec<[Complex<f64>; 3]> {
    nodal_gradients(map)
        .iter()
        .map(|(u, v)| [0, 1, 2].map(|k| Complex::new(0.5 * u[k], -0.5 * v[k])))
        .collect()
}

const MAX_FITTED_CANDIDATES: usize = 10;

fn branch_stage(scenario: &Scenario, map: &DiscreteMap<f64>, report: &mut RunReport) -> Result<()> {
    let a = &scenario.analysis;
    let scan = detect_branch_points(map, a.branch_threshold);
    let mut fits = Vec::new();
    if !scan.degenerate {
        let xw = nodal_xw(map);
        let nodes = map.mesh.nodes();
        for cand in scan.candidates.iter().take(MAX_FITTED_CANDIDATES) {
            let w0 = Complex::new(cand.location[0], cand.location[1]);
            let samples: Vec<_> = nodes
                .iter()
                .zip(&xw)
                .filter(|(p, _)| {
                    let d = (Complex::new(p[0], p[1]) - w0).norm();
                    d > 0.0 && d <= a.branch_radius
                })
                .map(|(p, x)| (Complex::new(p[0], p[1]), *x))
                .collect();
            let out = fit_branch_expansion(&samples, w0, a.m_max, None);
            fits.push(BranchFitEntry {
                node: cand.node,
                error: out.as_ref().err().map(|e| e.to_string()),
                fit: out.ok(),
            });
        }
    }
    report.branchfit = Some(BranchSection {
        threshold: a.branch_threshold,
        median_gradient: scan.median_gradient,
        degenerate: scan.degenerate,
        candidates: scan.candidates,
        fits,
    });
    Ok(())
}

fn holder_stage(scenario: &Scenario, map: &DiscreteMap<f64>, report: &mut RunReport) -> Result<()> {
    let mesh = &map.mesh;
    let nodes = mesh.nodes();
    let grads = nodal_gradients(map);
    let on_i = mesh.i_nodes_sorted();
    let u0 = scenario.analysis.holder_center;
    let center = *on_i
        .iter()
        .min_by(|&&a, &&b| (nodes[a][0] - u0).abs().total_cmp(&(nodes[b][0] - u0).abs()))
        .ok_or_else(|| Error::InvalidInput("mesh has no nodes on the straight segment".into()))?;
    let value = |k: usize| -> [f64; 6] {
        let (u, v) = grads[k];
        [u[0], u[1], u[2], v[0], v[1], v[2]]
    };
    let at = |k: usize| Complex::new(nodes[k][0], nodes[k][1]);
    let window = scenario.analysis.holder_window.unwrap_or_else(|| default_window(mesh.inner_spacing()));
    let samples: Vec<(Complex<f64>, [f64; 6])> =
        on_i.iter().filter(|&&k| k != center).map(|&k| (at(k), value(k))).collect();
    let c = (at(center), value(center));
    let estimate = estimate_holder_exponent(&c, &samples, Some(window))?;
    let mut table: Vec<(f64, f64)> = samples
        .iter()
        .filter_map(|(w, v)| {
            let d = (w - c.0).norm();
            let diff = v.distance(&c.1);
            (d >= window.0 && d <= window.1 && diff > 0.0).then(|| (d.ln(), diff.ln()))
        })
        .collect();
    table.sort_by(|a, b| a.0.total_cmp(&b.0));
    report.checks.push(Check::at_least("holder_alpha", "estimate_holder_exponent", estimate.alpha, HOLDER_MIN_ALPHA));
    if !estimate.unresolved {
        report.checks.push(Check::at_least("holder_fit_r2", "estimate_holder_exponent", estimate.fit_r2, HOLDER_MIN_R2));
    }
    report.holder = Some(HolderSection { center: nodes[center], estimate, table });
    Ok(())
}
