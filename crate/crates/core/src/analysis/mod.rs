//! Regularity measurements on sampled data: Hölder exponents, branch points
//! and their leading expansions, and continuous square-root liftings.

mod expansion;
mod lifting;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::fit_line;
use crate::mesh::NodeTag;
use crate::scalar::{lit, Real};
use crate::solver::{nodal_gradients, DiscreteMap};
use crate::vekua::{HolderEstimate, HolderValue};

pub use expansion::{fit_branch_expansion, ExpansionFit, DOMINANCE_MARGIN, MAX_FIT_RESIDUAL};
pub use lifting::continuous_sqrt_branch;

/// Differences below this are treated as unresolved.
pub const RESOLUTION_FLOOR: f64 = 1e-13;
pub const MIN_HOLDER_SAMPLES: usize = 20;
pub const MIN_HOLDER_DECADES: f64 = 1.5;
/// Branch threshold relative to the median gradient magnitude.
pub const DEFAULT_BRANCH_THRESHOLD: f64 = 1e-3;

/// Fit window `[2h, 0.2]` for local mesh size `h`.
pub fn default_window<T: Real>(h: T) -> (T, T) {
    (h + h, lit(0.2))
}

/// Log-log regression of `|f(w) - f(w0)|` against `|w - w0|`.
pub fn estimate_holder_exponent<T: Real, V: HolderValue<T>>(
    center: &(Complex<T>, V),
    samples: &[(Complex<T>, V)],
    window: Option<(T, T)>,
) -> Result<HolderEstimate<T>> {
    let (w0, f0) = center;
    let (lo, hi) = window.unwrap_or((T::zero(), T::infinity()));
    let pts: Vec<(T, T)> = samples
        .iter()
        .filter_map(|(w, f)| {
            let d = (w - w0).norm();
            (d > T::zero() && d >= lo && d <= hi).then(|| (d, f.distance(f0)))
        })
        .collect();
    let dmin = pts.iter().map(|p| p.0).fold(T::infinity(), T::min);
    let dmax = pts.iter().map(|p| p.0).fold(T::zero(), T::max);
    let decades = if pts.is_empty() { T::zero() } else { (dmax / dmin).log10() };
    if pts.len() < MIN_HOLDER_SAMPLES || decades < lit(MIN_HOLDER_DECADES) {
        return Err(Error::InvalidInput(format!(
            "insufficient decade span: {} samples over {:.2} decades, need {MIN_HOLDER_SAMPLES} over {MIN_HOLDER_DECADES}",
            pts.len(),
            decades.to_f64_lossy()
        )));
    }
    let used = (dmin, dmax);
    let floor = lit::<T>(RESOLUTION_FLOOR);
    if pts.iter().all(|p| p.1 < floor) {
        return Ok(HolderEstimate {
            alpha: T::one(),
            seminorm: T::zero(),
            fit_r2: T::one(),
            window: used,
            samples: pts.len(),
            unresolved: true,
        });
    }
    let (x, y): (Vec<T>, Vec<T>) = pts
        .iter()
        .filter(|p| p.1 > T::zero())
        .map(|p| (p.0.ln(), p.1.ln()))
        .unzip();
    let (intercept, slope, r2) = fit_line(&x, &y)?;
    Ok(HolderEstimate {
        alpha: slope.max(T::zero()).min(T::one()),
        seminorm: intercept.exp(),
        fit_r2: r2.max(T::zero()).min(T::one()),
        window: used,
        samples: x.len(),
        unresolved: false,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BranchClass {
    Interior,
    Boundary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchCandidate<T> {
    pub node: usize,
    pub location: [T; 2],
    pub gradient_magnitude: T,
    pub classification: BranchClass,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchScan<T> {
    pub candidates: Vec<BranchCandidate<T>>,
    pub median_gradient: T,
    /// The median gradient vanishes, so the map is numerically constant and
    /// every node is reported.
    pub degenerate: bool,
}

/// Nodal local minima of `|grad x|` below `threshold * median |grad x|`,
/// keeping the smallest within two mesh edges.
pub fn detect_branch_points<T: Real>(map: &DiscreteMap<T>, threshold: T) -> BranchScan<T> {
    let grads: Vec<T> = nodal_gradients(map)
        .iter()
        .map(|(u, v)| {
            (u.iter().chain(v).map(|c| *c * *c).sum::<T>()).sqrt()
        })
        .collect();
    let mut sorted = grads.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let median = sorted.get(sorted.len() / 2).copied().unwrap_or(T::zero());
    let nodes = map.mesh.nodes();
    let tags = map.tags();
    let candidate = |k: usize| BranchCandidate {
        node: k,
        location: nodes[k],
        gradient_magnitude: grads[k],
        classification: if tags[k] == NodeTag::Interior { BranchClass::Interior } else { BranchClass::Boundary },
    };
    if median <= T::zero() {
        log::warn!("median gradient vanishes; map is degenerate and every node is flagged");
        return BranchScan {
            candidates: (0..grads.len()).map(candidate).collect(),
            median_gradient: median,
            degenerate: true,
        };
    }
    let nbrs = map.mesh.mesh.neighbors();
    let limit = threshold * median;
    let mut minima: Vec<usize> = (0..grads.len())
        .filter(|&k| grads[k] < limit && nbrs[k].iter().all(|&j| grads[k] <= grads[j]))
        .collect();
    minima.sort_by(|&a, &b| grads[a].partial_cmp(&grads[b]).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b)));
    let mut kept: Vec<usize> = Vec::new();
    for k in minima {
        let near = kept
            .iter()
            .any(|&c| c == k || nbrs[c].contains(&k) || nbrs[c].iter().any(|&j| nbrs[j].contains(&k)));
        if !near {
            kept.push(k);
        }
    }
    BranchScan {
        candidates: kept.into_iter().map(candidate).collect(),
        median_gradient: median,
        degenerate: false,
    }
}
