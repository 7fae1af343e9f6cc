use super::*;
use crate::mesh::build_halfdisc_mesh;
use crate::poly::{Poly1, Poly2, Poly3};
use crate::solver::ArcData;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

fn c(a: f64, b: f64) -> C<f64> {
    Complex::new(a, b)
}

fn close(a: C<f64>, b: C<f64>, tol: f64) -> bool {
    (a - b).norm() <= tol
}

struct Draw {
    chart: SupportChart<f64>,
    field: FieldQ<f64>,
    p: Vec3<f64>,
    xw: [C<f64>; 3],
}

fn random_draw(rng: &mut ChaCha8Rng) -> Draw {
    loop {
        let mut u = |s: f64| rng.gen_range(-s..s);
        let psi = Poly2::new(vec![
            (2, 0, u(0.5)),
            (1, 1, u(0.5)),
            (0, 2, u(0.5)),
            (3, 0, u(0.3)),
            (1, 2, u(0.3)),
        ]);
        let gamma = Poly1::new(vec![0.0, 0.0, u(0.5), u(0.3)]);
        let lin = |u: &mut dyn FnMut(f64) -> f64| {
            Poly3::new(vec![(0, 0, 0, u(0.4)), (1, 0, 0, u(0.3)), (0, 1, 0, u(0.3)), (0, 0, 1, u(0.3))])
        };
        let field = FieldQ::new(lin(&mut u), lin(&mut u), lin(&mut u));
        let chart = SupportChart::new(psi, gamma, 0.5).unwrap();
        let (r, th) = (0.5 * u(1.0).abs().sqrt(), u(std::f64::consts::PI));
        let p = [r * th.cos(), r * th.sin(), u(0.5)];
        let xw = [c(u(1.0), u(1.0)), c(u(1.0), u(1.0)), c(u(1.0), u(1.0))];
        if eval_q(&chart, &field, &p).unwrap().abs() < 0.95 {
            return Draw { chart, field, p, xw };
        }
    }
}

#[test]
fn flat_matrices() {
    let chart = SupportChart::flat(1.0);
    let field = FieldQ::zero();
    let p = [0.1, 0.2, 0.0];
    let (a, b) = assemble_a_b(&chart, &field, &p).unwrap();
    assert_eq!(a, [[c(0.0, 0.0), c(0.0, 1.0)], [c(1.0, 0.0), c(0.0, 0.0)]]);
    assert_eq!(b, [c(0.0, 0.0), c(0.0, 0.0)]);
    assert_eq!(det2(&a), c(0.0, -1.0));
    let bb = assemble_b(&chart, &field, &p).unwrap();
    let z = c(0.0, 0.0);
    assert_eq!(bb.b, [[z, z, c(0.0, 1.0)], [c(1.0, 0.0), z, z], [z, c(1.0, 0.0), z]]);
    assert_eq!(bb.det_direct, c(0.0, 1.0));
    assert_eq!(bb.det_closed, c(0.0, 1.0));
    let cc = assemble_c(&chart, &field, &p).unwrap();
    assert_eq!(cc.closed, [[-1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);
    for i in 0..3 {
        for j in 0..3 {
            assert!(close(cc.direct[i][j], c(cc.closed[i][j], 0.0), 1e-15));
        }
    }
}

#[test]
fn a_b_by_substitution() {
    let chart = SupportChart::new(
        Poly2::new(vec![(1, 1, 1.0)]),
        Poly1::new(vec![0.0, 0.0, 0.5]),
        1.0,
    )
    .unwrap();
    let field = FieldQ::new(Poly3::zero(), Poly3::zero(), Poly3::new(vec![(0, 0, 1, 1.0)]));
    let (a, b) = assemble_a_b(&chart, &field, &[0.1, 0.2, 0.02]).unwrap();
    // psi_1 = 0.2, psi_2 = 0.1, g' = 0.1, q = 0.02.
    assert!(close(a[0][0], c(0.0, -0.2), 1e-15));
    assert!(close(a[0][1], c(0.0, 1.0), 1e-15));
    assert!(close(a[1][0], c(1.0, -0.002), 1e-15));
    assert!(close(a[1][1], c(0.21, 0.0), 1e-15));
    assert!(close(b[0], c(0.0, -0.1), 1e-15));
    assert!(close(b[1], c(0.1, 0.02), 1e-15));
}

#[test]
fn det_a_lower_bound_on_small_charts() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..10_000 {
        let d = random_draw(&mut rng);
        let (a, _) = assemble_a_b(&d.chart, &d.field, &d.p).unwrap();
        let j = d.chart.eval_chart(d.p[0], d.p[1]).unwrap();
        let (_, dg, _) = d.chart.eval_gamma(d.p[0]).unwrap();
        let q = eval_q(&d.chart, &d.field, &d.p).unwrap();
        let eps = j.grad[0].powi(2) + (j.grad[0] * j.grad[1] * dg).abs() + (q * dg).abs();
        assert!(det2(&a).norm() >= 1.0 - eps - 1e-14);
    }
}

#[test]
fn determinant_and_c_identities_on_random_draws() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for _ in 0..10_000 {
        let d = random_draw(&mut rng);
        let b = assemble_b(&d.chart, &d.field, &d.p).unwrap();
        assert!((b.det_direct - b.det_closed).norm() <= 1e-12);
        let cc = assemble_c(&d.chart, &d.field, &d.p).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((cc.direct[i][j].re - cc.closed[i][j]).abs() <= 1e-10);
                assert!(cc.direct[i][j].im.abs() <= 1e-10);
                assert_eq!(cc.closed[i][j], cc.closed[j][i]);
            }
        }
        assert!(cc.closed[2][2] > 0.0);
    }
}

#[test]
fn determinant_vanishes_linearly_as_q_reaches_one() {
    let chart = SupportChart::flat(1.0);
    for q in [0.9, 0.99, 0.999] {
        let b = assemble_b(&chart, &FieldQ::constant([0.0, 0.0, q]), &[0.0; 3]).unwrap();
        assert!(close(b.det_closed, c(0.0, 1.0 - q * q), 1e-15));
        assert!(close(b.det_direct, c(0.0, 1.0 - q * q), 1e-15));
    }
    let err = assemble_b(&chart, &FieldQ::constant([0.0, 0.0, 1.0]), &[0.0; 3]);
    assert!(matches!(err, Err(Error::Transversality { .. })));
}

#[test]
fn zeta_of_flat_and_constant_maps() {
    let mesh = Arc::new(build_halfdisc_mesh::<f64>(8, 2.0).unwrap());
    let chart = SupportChart::flat(2.0);
    let field = FieldQ::zero();
    let flat = ArcData::flat().harmonic_map(mesh.clone());
    for &k in &mesh.i_nodes_sorted() {
        let f = compute_zeta(&flat, &chart, &field, Where::Node(k)).unwrap();
        assert!(close(f.zeta[0], c(0.0, 0.0), 1e-14));
        assert!(close(f.zeta[1], c(0.5, 0.0), 1e-14));
        assert!(close(f.zeta[2], c(0.0, 0.5), 1e-14));
    }
    let k = DiscreteMap::from_fn(mesh, |_, _| [0.3, 0.1, 0.2]);
    let f = compute_zeta(&k, &chart, &field, Where::Element(3)).unwrap();
    assert!(f.zeta.iter().all(|z| z.norm() == 0.0));
}

#[test]
fn zeta_dual_path_and_quadratic_forms() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..10_000 {
        let d = random_draw(&mut rng);
        let f = frame_at(&d.chart, &d.field, &d.p, d.xw).unwrap();
        for k in 0..3 {
            assert!((f.zeta[k] - f.zeta_matrix[k]).norm() <= 1e-12);
        }
        let qf = quadratic_form_check(&f);
        assert!((qf.form - qf.xw_form).norm() <= 1e-10);
        assert!(qf.rearranged_residual.norm() <= 1e-12);
        // The completed square holds for arbitrary zeta, not only B x_w.
        let z = [0, 1, 2].map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let arb = quadratic_form_parts(&f.c, &z, &d.xw);
        assert!(arb.rearranged_residual.norm() <= 1e-12);
    }
}

#[test]
fn quadratic_form_examples() {
    let chart = SupportChart::flat(1.0);
    let field = FieldQ::zero();
    let conf = frame_at(&chart, &field, &[0.0; 3], [c(0.5, 0.0), c(0.0, 0.5), c(0.0, 0.0)]).unwrap();
    assert!(quadratic_form_check(&conf).form.norm() < 1e-16);
    assert!(quadratic_form_check(&conf).sides_difference.norm() < 1e-16);
    let non = frame_at(&chart, &field, &[0.0; 3], [c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
    let qf = quadratic_form_check(&non);
    assert!(close(qf.form, c(1.0, 0.0), 1e-15) && close(qf.xw_form, c(1.0, 0.0), 1e-15));
}

#[test]
fn flux_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    for _ in 0..1000 {
        let d = random_draw(&mut rng);
        let xu = d.xw.map(|z| 2.0 * z.re);
        let xv = d.xw.map(|z| -2.0 * z.im);
        assert!(flux_identity_residual(&d.chart, &d.field, &d.p, &xu, &xv).unwrap() <= 1e-10);
    }
    let chart = SupportChart::flat(1.0);
    let r = flux_identity_residual(&chart, &FieldQ::zero(), &[0.0; 3], &[1.0, 0.0, 0.0], &[0.0, -1.0, 0.0]);
    assert_eq!(r.unwrap(), 0.0);
    // Constant Q = (0, 0, c) on the flat chart: 2 Im z^2 = -x^1_v + c x^2_u.
    let cq = 0.4;
    let field = FieldQ::constant([0.0, 0.0, cq]);
    for (xu, xv) in [([1.0, 0.3, 0.0], [0.2, -1.0, 0.5]), ([0.0, 2.0, 1.0], [1.0, 0.0, 0.0])] {
        let f = frame_at(&chart, &field, &[0.0; 3], [0, 1, 2].map(|k| c(xu[k] / 2.0, -xv[k] / 2.0))).unwrap();
        assert!((2.0 * f.zeta[1].im - (-xv[0] + cq * xu[1])).abs() < 1e-15);
        assert!(flux_identity_residual(&chart, &field, &[0.0; 3], &xu, &xv).unwrap() < 1e-15);
    }
}

#[test]
fn gradient_equivalence_examples() {
    let mesh = Arc::new(build_halfdisc_mesh::<f64>(8, 2.0).unwrap());
    let chart = SupportChart::flat(2.0);
    let field = FieldQ::zero();
    let flat = ArcData::flat().harmonic_map(mesh.clone());
    let ge = gradient_equivalence(&flat, &chart, &field).unwrap();
    let expect = 1.0 / (2.0 * 2f64.sqrt());
    assert!((ge.min_ratio - expect).abs() < 1e-14 && (ge.max_ratio - expect).abs() < 1e-14);
    assert!(ge.branch_candidates.is_empty());
    let r = gradient_ratio(&flat, &chart, &field, Where::Point([0.1, 0.4])).unwrap().unwrap();
    assert!((r - expect).abs() < 1e-14, "{r} {expect}");
    let k = DiscreteMap::from_fn(mesh.clone(), |_, _| [0.1, 0.0, 0.0]);
    let ge = gradient_equivalence(&k, &chart, &field).unwrap();
    assert_eq!(ge.branch_candidates.len(), mesh.mesh.triangle_count());
    assert!(gradient_ratio(&k, &chart, &field, Where::Node(0)).unwrap().is_none());
}

#[test]
fn reflection_is_conjugate_symmetric() {
    let mesh = build_halfdisc_mesh::<f64>(6, 1.0).unwrap();
    let half = mesh.nodes().iter().map(|_| [c(0.5, 0.0)]).collect::<Vec<_>>();
    let r = reflect(&mesh, &half).unwrap();
    assert!(r.values.iter().all(|v| v[0] == c(0.5, 0.0)));
    let iw: Vec<[C<f64>; 1]> = mesh.nodes().iter().map(|p| [c(0.0, 1.0) * c(p[0], p[1])]).collect();
    let r = reflect(&mesh, &iw).unwrap();
    for (k, p) in r.mesh.nodes.iter().enumerate() {
        let (src, mirrored) = r.origin[k];
        if mirrored {
            // Mirrored node (u, -v): conj(i (u + i v)) = -v - i u.
            let q = mesh.nodes()[src];
            assert_eq!(r.values[k][0], c(-q[1], -q[0]));
            assert_eq!(p[1], -q[1]);
        } else {
            assert_eq!(r.values[k][0], iw[src][0]);
        }
    }
}

#[test]
fn wbar_residual_of_holomorphic_and_constant_fields() {
    let mut prev = f64::INFINITY;
    for n in [8, 16, 32] {
        let mesh = build_halfdisc_mesh::<f64>(n, 1.0).unwrap();
        let sq: Vec<[C<f64>; 1]> = mesh.nodes().iter().map(|p| [c(p[0], p[1]).powi(2)]).collect();
        let rep = wirtinger_bar_residual(&reflect(&mesh, &sq).unwrap());
        let worst = rep.dwbar.iter().fold(0.0f64, |m, &v| m.max(v));
        // The reflection of w^2 is w^2 itself, so the field is holomorphic.
        assert!(worst < prev / 1.8, "{worst} vs {prev}");
        prev = worst;
    }
    let mesh = Arc::new(build_halfdisc_mesh::<f64>(8, 2.0).unwrap());
    let flat = ArcData::flat().harmonic_map(mesh.clone());
    let z = node_z_field(&flat, &SupportChart::flat(2.0), &FieldQ::zero()).unwrap();
    let rep = wirtinger_bar_residual(&reflect(&mesh, &z).unwrap());
    assert!(rep.dwbar.iter().all(|&d| d < 1e-13));
}
