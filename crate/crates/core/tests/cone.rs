mod common;

use dist25::abnormal::{canonical_b, Chart, CotangentPoint, Dynamics};
use dist25::cone::*;
use dist25::frame::{is_cartan_frame_at, AdaptedFrame};
use dist25::models;
use dist25::expr::Rational;
use dist25::projcurve::osculating_cone_from_b;
use nalgebra::{DVector, Matrix5};
use rand::Rng;

/// Removes the `π_*h⃗ = −u₅X₁ + u₄X₂` component, using the `X₁` entry.
fn mod_h(v: &DVector<f64>, u4: f64, u5: f64) -> DVector<f64> {
    let c = -v[0] / u5;
    let mut out = v.clone();
    out[0] += c * u5;
    out[1] -= c * u4;
    out
}

/// The cone through `l₁, l₂, Q, ℬ₂` before simplification.
fn xi_from_cone_invariants(v: &FiberValues) -> Matrix5<f64> {
    let (l1, l2) = (v.l1(), v.l2());
    let mut shifted = DVector::zeros(5);
    shifted[2] = 1.0;
    // x₃ − (l₂ + (3/4)l₁)(x₅, −x₄)
    let s = [l2[0] + 0.75 * l1[0], l2[1] + 0.75 * l1[1]];
    shifted[4] = -s[0];
    shifted[3] = s[1];
    let mut m = Matrix5::zeros();
    m[(0, 4)] = 0.5;
    m[(4, 0)] = 0.5;
    m[(1, 3)] = -0.5;
    m[(3, 1)] = -0.5;
    m += &shifted * shifted.transpose() * (2.0 / 3.0);
    let l1sq = [l1[0] * l1[0], 2.0 * l1[0] * l1[1], l1[1] * l1[1]];
    let k: Vec<f64> = (0..3).map(|i| 0.7 * v.b2[i] + v.q[i] + 0.375 * l1sq[i]).collect();
    m[(4, 4)] -= k[0];
    m[(3, 3)] -= k[2];
    m[(3, 4)] += 0.5 * k[1];
    m[(4, 3)] += 0.5 * k[1];
    m
}

fn points(m: &common::Model, n: usize, seed: u64) -> Vec<[f64; 5]> {
    let mut g = common::rng(seed);
    (0..n).map(|_| m.base_point(&mut g)).collect()
}

#[test]
fn closed_form_has_signature_three_two() {
    for m in common::corpus() {
        let f = m.frame();
        for q in points(&m, 5, 40) {
            let xi = xi_closed_form(&f, &q).unwrap();
            assert_eq!(signature(&xi), (3, 2, 0), "{}", m.name);
            if m.name == "flat" {
                assert!((xi.m - QuadraticForm5::flat().m).abs().max() < 1e-15);
            }
        }
    }
}

#[test]
fn closed_form_matches_the_unsimplified_equation() {
    for m in common::corpus() {
        let f = m.frame();
        let ff = FiberFunctions::new(&f);
        for q in points(&m, 5, 41) {
            let v = ff.values_at(&q).unwrap();
            let a = xi_from_values(&v).unwrap().m;
            assert!((a - xi_from_cone_invariants(&v)).abs().max() < 1e-12, "{}", m.name);
        }
    }
}

#[test]
fn fiber_form_of_b2_matches_the_decomposition() {
    let mut g = common::rng(42);
    for m in common::corpus() {
        let f = m.frame();
        let ff = FiberFunctions::new(&f);
        let dy = Dynamics::new(&f);
        for _ in 0..10 {
            let lam = m.lambda(&mut g);
            let v = ff.values_at(&lam.q).unwrap();
            let closed = quadratic_at(&v.b2, lam.u4, lam.u5);
            let b = dy.canonical_b(&lam, lam.chart()).unwrap().b[2];
            assert!(common::rel_close(closed, b, 1e-7), "{}: {closed} vs {b}", m.name);
        }
    }
}

#[test]
fn cubic_monge_is_not_flat_at_the_origin() {
    let f = AdaptedFrame::build(&models::monge(3));
    let v = FiberFunctions::new(&f).values_at(&[0.0, 0.0, 0.0, 1.0, 0.0]).unwrap();
    assert!(v.b2.iter().any(|c| c.abs() > 1e-3));
}

#[test]
fn brackets_project_as_predicted() {
    // chart U5 uses γ₄ = 1/u₅, γ₅ = 0
    let mut g = common::rng(43);
    for m in common::corpus() {
        let f = m.frame();
        let ff = FiberFunctions::new(&f);
        for _ in 0..6 {
            let q = m.base_point(&mut g);
            let angle: f64 = g.random_range(0.3..2.8);
            let (u4, u5) = (angle.cos(), angle.sin());
            let lam = CotangentPoint::new(q, u4, u5).unwrap();
            let w = dist25::abnormal::ad_powers(&f, &lam, 3, Chart::U5).unwrap();
            let to_frame = |v: &DVector<f64>| mod_h(&f.frame_coordinates(&q, &dist25::abnormal::project(v)).unwrap(), u4, u5);
            let v = ff.values_at(&q).unwrap();
            let (l1, l2) = (linear_at(&v.l1(), u4, u5), linear_at(&v.l2(), u4, u5));
            let qv = quadratic_at(&v.q, u4, u5);
            let expect = [
                DVector::from_vec(vec![0.0, -1.0 / u5, 0.0, 0.0, 0.0]),
                DVector::from_vec(vec![0.0, l1 / u5, 1.0, 0.0, 0.0]),
                DVector::from_vec(vec![0.0, qv / u5, l2, -u5, u4]),
            ];
            for (i, e) in expect.iter().enumerate() {
                let got = to_frame(&w[i + 1]);
                assert!((&got - e).norm() <= 1e-7 * (1.0 + e.norm()), "{} w{}: {got} vs {e}", m.name, i + 1);
            }
        }
    }
}

#[test]
fn cone_section_lies_in_the_annihilator() {
    let mut g = common::rng(44);
    for m in common::corpus() {
        let f = m.frame();
        for _ in 0..5 {
            let lam = m.lambda(&mut g);
            let sec = con_lambda(&f, &lam).unwrap();
            for v in &sec.basis {
                let pairing = lam.u4 * v[3] + lam.u5 * v[4];
                assert!(pairing.abs() <= 1e-9 * (1.0 + v.norm()), "{}", m.name);
            }
            if m.name == "flat" {
                assert!(sec.b2.abs() < 1e-12);
                assert!(sec.quadric.proportional_to(&osculating_cone_from_b(0.0), 1e-12));
            }
            // cone points satisfy the fitted quadric of Ξ_q
            let xi = xi_closed_form(&f, &lam.q).unwrap();
            let x = sec.cone_point(0.7, 0.4, -1.3);
            let unit = xi.m / xi.m.norm();
            let x = &x / x.norm();
            assert!((x.transpose() * unit * &x)[0].abs() < 1e-9, "{}", m.name);
            // the s-direction is degenerate
            let y = sec.cone_point(-2.0, 0.4, -1.3);
            assert!((y.transpose() * unit * &y)[0].abs() < 1e-9 * y.norm_squared());
        }
    }
}

#[test]
fn cone_section_is_homothety_invariant() {
    let mut g = common::rng(45);
    for m in common::corpus() {
        let f = m.frame();
        for _ in 0..3 {
            let lam = m.lambda(&mut g);
            let c = g.random_range(0.3..3.0) * if g.random_bool(0.5) { -1.0 } else { 1.0 };
            let scaled = CotangentPoint::new(lam.q, c * lam.u4, c * lam.u5).unwrap();
            let (a, b) = (con_lambda(&f, &lam).unwrap(), con_lambda(&f, &scaled).unwrap());
            let ys: Vec<[f64; 3]> = (0..8)
                .map(|j| {
                    let p = 0.4 * j as f64 + 0.1;
                    let (coords, residual) = a.coordinates(&b.cone_point(0.3 * j as f64, p.cos(), p.sin()));
                    assert!(residual < 1e-9, "{}: point leaves the hyperplane", m.name);
                    [coords[1], coords[2], coords[3]]
                })
                .collect();
            assert!(fit_conic(&ys).unwrap().proportional_to(&a.quadric, 1e-7), "{}", m.name);
        }
    }
}

#[test]
fn geometric_and_closed_form_cones_agree() {
    for m in common::corpus() {
        let f = m.frame();
        for q in points(&m, 3, 46) {
            let (geo, report) = xi_geometric(&f, &q, 8, 6).unwrap();
            assert!(report.gap >= FIT_GAP);
            assert!(report.max_residual < 1e-10, "{}: {}", m.name, report.max_residual);
            let closed = xi_closed_form(&f, &q).unwrap();
            assert!(conformal_equal(&geo, &closed, 1e-5).unwrap(), "{} at {q:?}", m.name);
            if m.name == "flat" {
                assert!((geo.normalized() - QuadraticForm5::flat().normalized()).norm() < 1e-6);
            }
        }
    }
}

#[test]
fn geometric_fit_is_stable_under_denser_sampling() {
    for m in common::corpus() {
        let f = m.frame();
        let q = points(&m, 1, 47)[0];
        let (a, _) = xi_geometric(&f, &q, 8, 6).unwrap();
        let (b, _) = xi_geometric(&f, &q, 16, 12).unwrap();
        assert!((a.normalized() - b.normalized()).norm() <= 1e-6, "{}", m.name);
    }
}

#[test]
fn geometric_fit_rejects_thin_sampling() {
    let f = AdaptedFrame::build(&models::flat());
    assert!(matches!(xi_geometric(&f, &[0.0; 5], 7, 6), Err(dist25::Error::Invalid(_))));
    assert!(matches!(xi_geometric(&f, &[0.0; 5], 8, 5), Err(dist25::Error::Invalid(_))));
}

#[test]
fn degenerate_point_is_rejected() {
    let f = AdaptedFrame::build(&models::monge(3));
    let q = [0.2, 0.1, 0.3, 0.0, -0.4];
    assert!(matches!(xi_closed_form(&f, &q), Err(dist25::Error::GrowthVector { .. })));
    assert!(matches!(xi_geometric(&f, &q, 8, 6), Err(dist25::Error::GrowthVector { .. })));
}

/// `Ξ` of `new` transported to the frame of `old`: `x_old = T x_new`.
fn transported(old: &AdaptedFrame, new: &AdaptedFrame, q: &[f64]) -> (QuadraticForm5, QuadraticForm5) {
    let t = old.matrix_at(q).unwrap().lu().solve(&new.matrix_at(q).unwrap()).unwrap();
    let t = Matrix5::from_iterator(t.iter().copied());
    let a = xi_closed_form(old, q).unwrap();
    let b = xi_closed_form(new, q).unwrap();
    let pulled = QuadraticForm5::new(t.transpose() * a.m * t, FormBasis::AdaptedFrame).unwrap();
    (pulled, b)
}

#[test]
fn cone_does_not_depend_on_the_frame() {
    let r = |n, d| Rational::new(n, d);
    let base = models::monge(3);
    let old = AdaptedFrame::build(&base);
    let constant = AdaptedFrame::build(&models::change_basis(&base, [[r(2, 1), r(1, 3)], [r(-1, 2), r(1, 1)]]));
    let mixed = AdaptedFrame::build(&common::mixed_monge());
    let m = &common::corpus()[2];
    for q in points(m, 4, 48) {
        for new in [&constant, &mixed] {
            let (a, b) = transported(&old, new, &q);
            assert!(conformal_equal(&a, &b, 1e-6).unwrap(), "at {q:?}");
        }
    }
    let flat = AdaptedFrame::build(&models::flat());
    let flat_mixed = AdaptedFrame::build(&models::change_basis(&models::flat(), [[r(1, 1), r(2, 1)], [r(0, 1), r(-3, 1)]]));
    let (a, b) = transported(&flat, &flat_mixed, &[0.3, 0.1, -0.2, 0.5, 0.9]);
    assert!(conformal_equal(&a, &b, 1e-6).unwrap());
}

#[test]
fn cartan_frames_give_the_flat_cone() {
    let mut hits = 0;
    for m in common::corpus() {
        let f = m.frame();
        for q in points(&m, 4, 49) {
            if is_cartan_frame_at(&f, &q, 1e-12).unwrap() {
                hits += 1;
                let xi = xi_closed_form(&f, &q).unwrap();
                assert!((xi.m - QuadraticForm5::flat().m).abs().max() < 1e-9, "{}", m.name);
            }
        }
    }
    assert!(hits >= 4, "flat model frames are Cartan frames");
}

#[test]
fn ambient_transform_round_trip() {
    let f = AdaptedFrame::build(&models::monge(3));
    let q = [0.1, 0.2, -0.3, 1.0, 0.4];
    let xi = xi_closed_form(&f, &q).unwrap();
    let amb = xi.to_ambient(&f, &q).unwrap();
    assert_eq!(amb.basis, FormBasis::Ambient);
    let x = DVector::from_vec(vec![0.3, -1.0, 0.2, 0.5, 0.7]);
    let y = f.matrix_at(&q).unwrap() * &x;
    assert!((xi.eval(&x) - amb.eval(&y)).abs() < 1e-12);
}

#[test]
fn b2_via_one_shot_helper() {
    let f = AdaptedFrame::build(&models::flat());
    let lam = CotangentPoint::new([0.0; 5], 0.0, 1.0).unwrap();
    assert!(canonical_b(&f, &lam, Chart::U5).unwrap().b.iter().all(|b| b.abs() < 1e-12));
}
