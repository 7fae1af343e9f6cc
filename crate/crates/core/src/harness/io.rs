use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::RunReport;
use crate::error::{Error, Result};
use crate::mesh::{HalfDiscMesh, NodeTag};
use crate::solver::DiscreteMap;

pub const SOLUTION_CSV_HEADER: &str = "# hsurf solution v1";
pub const CHECKS_CSV_HEADER: &str = "# hsurf checks v1";
const LOGLOG_HEADER: &str = "# ln_distance ln_difference";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Gnuplot,
}

impl Format {
    pub const ALL: [Format; 3] = [Format::Json, Format::Csv, Format::Gnuplot];

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "json" => Some(Format::Json),
            "csv" => Some(Format::Csv),
            "gnuplot" => Some(Format::Gnuplot),
            _ => None,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct SolutionRow {
    u: f64,
    v: f64,
    x1: f64,
    x2: f64,
    x3: f64,
    tag: String,
}

fn csv_err(e: csv::Error) -> Error {
    Error::InvalidInput(format!("csv: {e}"))
}

/// Writes `u, v, x1, x2, x3, tag` rows, one per mesh node.
pub fn write_solution_csv(map: &DiscreteMap<f64>, path: impl AsRef<Path>) -> Result<()> {
    let mut out = Vec::new();
    out.extend_from_slice(SOLUTION_CSV_HEADER.as_bytes());
    out.push(b'\n');
    {
        let mut w = csv::Writer::from_writer(&mut out);
        for ((p, x), tag) in map.mesh.nodes().iter().zip(&map.values).zip(map.tags()) {
            w.serialize(SolutionRow { u: p[0], v: p[1], x1: x[0], x2: x[1], x3: x[2], tag: tag.as_str().into() })
                .map_err(csv_err)?;
        }
        w.flush()?;
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Reads a solution written for `mesh`; node positions and tags must match.
pub fn read_solution_csv(path: impl AsRef<Path>, mesh: Arc<HalfDiscMesh<f64>>) -> Result<DiscreteMap<f64>> {
    let text = std::fs::read_to_string(path.as_ref())?;
    let body = text
        .strip_prefix(SOLUTION_CSV_HEADER)
        .ok_or_else(|| Error::InvalidInput(format!("missing '{SOLUTION_CSV_HEADER}' header")))?;
    let mut r = csv::Reader::from_reader(body.trim_start().as_bytes());
    let mut values = Vec::with_capacity(mesh.node_count());
    for (k, row) in r.deserialize::<SolutionRow>().enumerate() {
        let row = row.map_err(csv_err)?;
        let node = mesh
            .nodes()
            .get(k)
            .ok_or_else(|| Error::InvalidInput(format!("solution has more rows than the mesh has nodes ({})", mesh.node_count())))?;
        if (node[0] - row.u).abs() > 1e-12 || (node[1] - row.v).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!("row {k}: node ({}, {}) does not match the mesh", row.u, row.v)));
        }
        if NodeTag::parse(&row.tag) != Some(mesh.tags[k]) {
            return Err(Error::InvalidInput(format!("row {k}: tag '{}' does not match the mesh", row.tag)));
        }
        values.push([row.x1, row.x2, row.x3]);
    }
    if values.len() != mesh.node_count() {
        return Err(Error::InvalidInput(format!(
            "solution has {} rows, mesh has {} nodes",
            values.len(),
            mesh.node_count()
        )));
    }
    DiscreteMap::new(mesh, values)
}

pub fn load_report(path: impl AsRef<Path>) -> Result<RunReport> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

/// Writes the requested formats into `dir` and returns the written paths.
///
/// - json: `report.json`
/// - csv: `checks.csv` and, when a solution is attached, `solution.csv`
/// - gnuplot: `holder_loglog.dat`, when the holder stage ran
pub fn emit_reports(report: &RunReport, dir: impl AsRef<Path>, formats: &[Format]) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for f in formats {
        match f {
            Format::Json => {
                let p = dir.join("report.json");
                std::fs::write(&p, report.to_json()? + "\n")?;
                written.push(p);
            }
            Format::Csv => {
                let p = dir.join("checks.csv");
                let mut out = Vec::new();
                out.extend_from_slice(CHECKS_CSV_HEADER.as_bytes());
                out.push(b'\n');
                {
                    let mut w = csv::Writer::from_writer(&mut out);
                    for c in &report.checks {
                        w.serialize(c).map_err(csv_err)?;
                    }
                    w.flush()?;
                }
                std::fs::write(&p, out)?;
                written.push(p);
                if let Some(map) = &report.solution {
                    let p = dir.join("solution.csv");
                    write_solution_csv(map, &p)?;
                    written.push(p);
                }
            }
            Format::Gnuplot => {
                if let Some(h) = &report.holder {
                    let p = dir.join("holder_loglog.dat");
                    let mut s = String::from(LOGLOG_HEADER);
                    s.push('\n');
                    for (x, y) in &h.table {
                        s.push_str(&format!("{x} {y}\n"));
                    }
                    std::fs::write(&p, s)?;
                    written.push(p);
                }
            }
        }
    }
    Ok(written)
}
