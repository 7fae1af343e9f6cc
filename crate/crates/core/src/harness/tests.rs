use super::*;
use crate::error::Error;

#[test]
fn bundled_scenarios_load_and_validate() {
    for name in bundled_names() {
        let s = resolve_scenario(name).unwrap();
        assert_eq!(s.name, name);
    }
    let flat = resolve_scenario("flat").unwrap();
    assert_eq!(flat.validate().unwrap().q0, 0.0);
    let tilted = resolve_scenario("tilted-contact-0.4").unwrap();
    assert!((tilted.validate().unwrap().q0 - 0.4).abs() < 1e-15);
    assert!(resolve_scenario("no-such-scenario").is_err());
}

fn flat_with(edit: impl Fn(&mut String)) -> Result<Scenario> {
    let mut text = bundled_source("flat").unwrap().to_string();
    edit(&mut text);
    Scenario::from_toml(&text)
}

#[test]
fn rejects_transversality_and_normalization_failures() {
    let err = flat_with(|t| *t = t.replace("[field]\n", "[field]\nq3 = [[0, 0, 0, 1.2]]\n")).unwrap_err();
    assert!(matches!(err, Error::Transversality { .. }), "{err}");
    assert!(err.to_string().contains("transversality"));
    let err = flat_with(|t| *t = t.replace("radius = 3.0\n", "radius = 3.0\ngamma = [0.1]\n")).unwrap_err();
    assert!(matches!(err, Error::Normalization(_)), "{err}");
    assert!(err.to_string().contains("normalization"));
    let err = flat_with(|t| t.push_str("\n[extra]\nkey = 1\n")).unwrap_err();
    assert!(matches!(err, Error::Toml(_)));
    let err = flat_with(|t| *t = t.replace("n_radial = 32", "n_radial = 1")).unwrap_err();
    assert!(matches!(err, Error::Scenario(_)));
}

#[test]
fn config_hash_tracks_content() {
    let a = resolve_scenario("flat").unwrap();
    let mut b = a.clone();
    assert_eq!(a.config_hash(), b.config_hash());
    b.mesh.n_radial = 40;
    assert_ne!(a.config_hash(), b.config_hash());
    assert_eq!(a.config_hash().len(), 64);
}

fn small_flat() -> Scenario {
    let mut s = resolve_scenario("flat").unwrap();
    s.mesh.n_radial = 32;
    s.analysis.directions = 6;
    s
}

#[test]
fn flat_pipeline_all_stages() {
    let rep = run_pipeline(&small_flat(), &Stage::ALL).unwrap();
    assert!(rep.passed(), "{:#?} {:#?}", rep.stages, rep.checks);
    let solve = rep.solve.as_ref().unwrap();
    assert!((solve.energy - std::f64::consts::FRAC_PI_2).abs() < 1e-4);
    let tr = rep.transform.as_ref().unwrap();
    assert!(tr.det_b_max <= 1e-12 && tr.c_closed_vs_direct_max <= 1e-10 && tr.flux_identity_max <= 1e-10);
    assert!(rep.branchfit.as_ref().unwrap().candidates.is_empty());
    assert_eq!(rep.holder.as_ref().unwrap().estimate.alpha, 1.0);
    assert_eq!(rep.stages.len(), 5);
}

#[test]
fn dependent_stage_without_solution_fails_but_pipeline_continues() {
    let rep = run_pipeline(&small_flat(), &[Stage::Holder, Stage::Verify]).unwrap();
    assert_eq!(rep.stages.len(), 2);
    assert!(rep.stages.iter().all(|s| !s.ok && s.error.as_ref().unwrap().contains("requires a solution")));
    assert!(!rep.passed());
}

#[test]
fn reports_round_trip_and_solution_reloads() {
    let s = small_flat();
    let rep = run_pipeline(&s, &[Stage::Solve, Stage::Verify, Stage::Holder]).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let files = emit_reports(&rep, dir.path(), &Format::ALL).unwrap();
    assert_eq!(files.len(), 4);
    let back = load_report(dir.path().join("report.json")).unwrap();
    assert_eq!(back.to_json().unwrap(), rep.to_json().unwrap());
    let dat = std::fs::read_to_string(dir.path().join("holder_loglog.dat")).unwrap();
    assert!(dat.lines().skip(1).all(|l| l.split_whitespace().count() == 2));
    let checks = std::fs::read_to_string(dir.path().join("checks.csv")).unwrap();
    assert!(checks.starts_with(CHECKS_CSV_HEADER));

    let mesh = rep.solution.as_ref().unwrap().mesh.clone();
    let map = read_solution_csv(dir.path().join("solution.csv"), mesh).unwrap();
    assert_eq!(map.values, rep.solution.as_ref().unwrap().values);
    let v1 = run_pipeline_with(&s, &[Stage::Verify, Stage::Transform], Some(map.clone())).unwrap();
    let v2 = run_pipeline_with(&s, &[Stage::Verify, Stage::Transform], Some(map)).unwrap();
    assert_eq!(v1.to_json().unwrap(), v2.to_json().unwrap());
    assert_eq!(v1.verify, rep.verify);
    assert_eq!(v1.provenance.solution_source, "loaded");
}

#[test]
fn solution_csv_rejects_mismatched_mesh() {
    let s = small_flat();
    let rep = run_pipeline(&s, &[Stage::Solve]).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("solution.csv");
    write_solution_csv(rep.solution.as_ref().unwrap(), &path).unwrap();
    let other = std::sync::Arc::new(crate::mesh::build_halfdisc_mesh::<f64>(9, 2.0).unwrap());
    assert!(read_solution_csv(&path, other).is_err());
    std::fs::write(&path, "u,v,x1,x2,x3,tag\n").unwrap();
    let mesh = rep.solution.as_ref().unwrap().mesh.clone();
    assert!(read_solution_csv(&path, mesh).is_err());
}

#[test]
fn runs_are_deterministic() {
    let s = small_flat();
    let a = run_pipeline(&s, &Stage::ALL).unwrap().to_json().unwrap();
    let b = run_pipeline(&s, &Stage::ALL).unwrap().to_json().unwrap();
    assert_eq!(a, b);
}

#[test]
fn vekua_selftest_small_grids() {
    let st = vekua_selftest(&[8, 16]).unwrap();
    assert_eq!(st.rows.len(), 2);
    assert!(st.t_zero_exact && st.t_one_within_tol, "{st:?}");
    assert!(st.interior_decreasing && st.boundary_decreasing, "{st:?}");
}
