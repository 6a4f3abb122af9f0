mod common;

use dist25::projcurve::*;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

fn random_series(g: &mut ChaCha8Rng, n: usize) -> Series {
    Series::new((0..n).map(|_| g.random_range(-1.0..1.0)).collect())
}

fn random_frame(g: &mut ChaCha8Rng, k: usize) -> DMatrix<f64> {
    DMatrix::from_fn(k, k, |r, c| if r == c { 2.0 } else { 0.0 } + g.random_range(-0.5..0.5))
}

fn random_decomp(g: &mut ChaCha8Rng, k: usize, n: usize) -> DecompJet {
    DecompJet::new((0..k - 1).map(|_| random_series(g, n)).collect())
}

/// Self-adjoint fourth-order curve: `B₁ = B₂′`.
fn random_symplectic(g: &mut ChaCha8Rng, n: usize) -> DecompJet {
    let b2 = random_series(g, n + 1);
    DecompJet::new(vec![random_series(g, n), b2.deriv(), b2])
}

fn poly_mul(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            if i + j < n {
                out[i + j] += x * y;
            }
        }
    }
    out
}

/// Taylor coefficients `0..=4` of `Q(1, α₁(t), α₂(t))`.
fn contact_defect(q: &QuadricCoeffs, alpha: &PlaneJet) -> Vec<f64> {
    let taylor = |d: &[f64; 4]| {
        let mut c = vec![0.0; 5];
        let mut f = 1.0;
        for n in 1..=4 {
            f *= n as f64;
            c[n] = d[n - 1] / f;
        }
        c
    };
    let y = [vec![1.0, 0.0, 0.0, 0.0, 0.0], taylor(&alpha.alpha1), taylor(&alpha.alpha2)];
    let m = q.matrix();
    let mut out = vec![0.0; 5];
    for i in 0..3 {
        for j in 0..3 {
            for (o, v) in out.iter_mut().zip(poly_mul(&y[i], &y[j], 5)) {
                *o += m[(i, j)] * v;
            }
        }
    }
    out
}

#[test]
fn ode_round_trip() {
    let mut g = common::rng(21);
    for k in [3, 4, 5] {
        let ode = LinearOde::new((0..k).map(|_| random_series(&mut g, 6)).collect());
        let jet = ode.jet(&random_frame(&mut g, k), k + 5).unwrap();
        assert_eq!(jet.order(), k + 5);
        let back = ode_from_jet(&jet).unwrap();
        for i in 0..k {
            for n in 0..6 {
                let (a, b) = (back.coeff(i).coeff(n).unwrap(), ode.coeff(i).coeff(n).unwrap());
                assert!((a - b).abs() < 1e-9 * (1.0 + b.abs()), "k={k} a{i}[{n}]");
            }
        }
    }
}

#[test]
fn canonical_jet_has_no_top_coefficient() {
    let mut g = common::rng(22);
    let ode = LinearOde::new((0..4).map(|_| random_series(&mut g, 8)).collect());
    let jet = ode.jet(&random_frame(&mut g, 4), 11).unwrap();
    let (canon, _) = canonicalize(&jet).unwrap();
    let again = ode_from_jet(&canon).unwrap();
    let top = again.coeff(3);
    for n in 0..top.prec() {
        assert!(top.coeff(n).unwrap().abs() < 1e-9, "order {n}");
    }
}

#[test]
fn rescaling_by_one_plus_t_keeps_coefficients() {
    let mut g = common::rng(23);
    for k in [3, 4] {
        let dec = random_decomp(&mut g, k, 6);
        let jet = dec.ode().jet(&random_frame(&mut g, k), k + 5).unwrap();
        // (1 + t)ε has derivatives ε⁽ʲ⁾ + j ε⁽ʲ⁻¹⁾
        let scaled: Vec<DVector<f64>> = (0..=jet.order())
            .map(|j| {
                let mut v = jet.derivative(j).clone();
                if j > 0 {
                    v += jet.derivative(j - 1) * j as f64;
                }
                v
            })
            .collect();
        let (_, rec) = canonicalize(&CurveJet::new(scaled).unwrap()).unwrap();
        for i in 0..k - 1 {
            for n in 0..rec.b(i).prec() {
                let (a, b) = (rec.b(i).coeff(n).unwrap(), dec.b(i).coeff(n).unwrap());
                assert!((a - b).abs() < 1e-10 * (1.0 + b.abs()), "k={k} B{i}[{n}]: {a} vs {b}");
            }
        }
    }
}

#[test]
fn ode_reparameterization_matches_faa_di_bruno() {
    let mut g = common::rng(24);
    for k in [3, 4] {
        let ode = LinearOde::new((0..k).map(|_| random_series(&mut g, 7)).collect());
        let jet = ode.jet(&random_frame(&mut g, k), k + 6).unwrap();
        let phi = ReparamJet::new(vec![g.random_range(0.5..2.0), g.random_range(-1.0..1.0), g.random_range(-1.0..1.0)]).unwrap();
        let (_, via_jet) = canonicalize(&reparameterize(&jet, &phi).unwrap()).unwrap();
        let via_ode = ode.reparameterize(&phi).canonical();
        for i in 0..k - 1 {
            for n in 0..via_jet.b(i).prec().min(via_ode.b(i).prec()) {
                let (a, b) = (via_jet.b(i).coeff(n).unwrap(), via_ode.b(i).coeff(n).unwrap());
                assert!((a - b).abs() < 1e-8 * (1.0 + b.abs()), "k={k} B{i}[{n}]");
            }
        }
    }
}

#[test]
fn identity_reparameterization() {
    let mut g = common::rng(25);
    let jet = random_decomp(&mut g, 4, 4).ode().jet(&random_frame(&mut g, 4), 7).unwrap();
    let same = reparameterize(&jet, &ReparamJet::identity()).unwrap();
    for j in 0..=jet.order() {
        assert!((same.derivative(j) - jet.derivative(j)).norm() < 1e-12 * (1.0 + jet.derivative(j).norm()));
    }
}

#[test]
fn reduction_is_regular_and_complement_free() {
    let mut g = common::rng(26);
    for _ in 0..10 {
        let dec = random_decomp(&mut g, 4, 6);
        let jet = dec.ode().jet(&random_frame(&mut g, 4), 9).unwrap();
        let a = reduce_by_point(&jet).unwrap();
        a.check_regular().unwrap();
        let other = DMatrix::from_fn(4, 3, |_, _| g.random_range(-1.0..1.0));
        let b = reduce_by_point_with(&jet, &other).unwrap();
        let (_, da) = canonicalize(&a).unwrap();
        let (_, db) = canonicalize(&b).unwrap();
        for i in 0..2 {
            for n in 0..da.b(i).prec() {
                let (x, y) = (da.b(i).coeff(n).unwrap(), db.b(i).coeff(n).unwrap());
                assert!((x - y).abs() < 1e-10 * (1.0 + x.abs()), "B{i}[{n}] {x} vs {y}");
            }
        }
    }
}

#[test]
fn reduction_through_the_tangent_fails() {
    let v = vec![DVector::from_vec(vec![1.0, 0.0, 0.0]), DVector::from_vec(vec![2.0, 0.0, 0.0]), DVector::from_vec(vec![0.0, 1.0, 0.0])];
    let complement = DMatrix::from_column_slice(3, 2, &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
    assert!(reduce_by_point_with(&CurveJet::new(v).unwrap(), &complement).is_err());
}

#[test]
fn osculating_cone_of_a_reduced_canonical_curve() {
    let mut g = common::rng(27);
    for _ in 0..20 {
        let dec = random_decomp(&mut g, 4, 4);
        let jet = dec.ode().jet(&DMatrix::identity(4, 4), 6).unwrap();
        let alpha = plane_jet(&reduce_by_point(&jet).unwrap()).unwrap();
        let b2 = dec.derivative(2, 0).unwrap();
        assert!((alpha.alpha1[2] - b2 / 4.0).abs() < 1e-12);
        assert!(alpha.alpha2[2].abs() < 1e-12);
        assert!((alpha.alpha2[3] - b2 / 5.0).abs() < 1e-12);
        let lemma = osculating_quadric_normalized(&alpha).unwrap();
        assert!(lemma.proportional_to(&osculating_cone_from_b(b2), 1e-9));
    }
}

#[test]
fn symplectic_curves_have_projective_w1_zero() {
    let mut g = common::rng(28);
    for _ in 0..5 {
        let dec = random_symplectic(&mut g, 8);
        let w1 = wilczynski_decomp(&dec, 1).unwrap();
        assert!(w1.abs() < 1e-12, "{w1}");
        let pf = projective_normalize_decomp(&dec, 3, 1.0, 0.0).unwrap();
        // B₁ = B₂′ survives normalization
        let b1 = pf.decomposition.b(1);
        for n in 0..3 {
            let d = b1.derivative_at(n).unwrap() - pf.decomposition.b(2).derivative_at(n + 1).unwrap();
            assert!(d.abs() < 1e-9, "order {n}: {d}");
        }
    }
}

#[test]
fn projective_normalization_kills_the_top_coefficient() {
    let mut g = common::rng(29);
    for k in [3, 4] {
        let dec = random_decomp(&mut g, k, 8);
        let pf = projective_normalize_decomp(&dec, 3, 1.0, 0.0).unwrap();
        let top = pf.decomposition.b(k - 2);
        for n in 0..=3 {
            assert!(top.coeff(n).unwrap().abs() < 1e-9, "k={k} order {n}");
        }
        assert_eq!(&pf.phi.derivatives()[..2], &[1.0, 0.0]);
        let already = projective_normalize_decomp(&pf.decomposition, 3, 1.0, 0.0).unwrap();
        assert!(already.phi.derivatives()[2..].iter().all(|d| d.abs() < 1e-9));
    }
}

#[test]
fn plane_invariant_matches_classical_formula() {
    // in any parameter, 𝒲₁ = B₀ − B₁′/2 for a canonical plane curve
    let mut g = common::rng(30);
    for _ in 0..10 {
        let dec = random_decomp(&mut g, 3, 8);
        let (w1, dw1) = w1_and_derivative_decomp(&dec).unwrap();
        let d = |i, n| dec.derivative(i, n).unwrap();
        assert!((w1 - (d(0, 0) - 0.5 * d(1, 1))).abs() < 1e-10);
        assert!((dw1 - (d(0, 1) - 0.5 * d(1, 2))).abs() < 1e-10);
    }
}

#[test]
fn reduction_of_constant_quartic_curve() {
    // ε⁗ = ε in unit parameter; exact rational series give 𝒲₁′ = 5/21 of 𝒲₂
    let dec = DecompJet::new(vec![Series::exact(vec![1.0]), Series::zero(), Series::zero()]);
    let jet = dec.ode().jet(&DMatrix::identity(4, 4), 12).unwrap();
    assert!((wilczynski(&jet, 2).unwrap() - 1.0).abs() < 1e-12);
    let d = w1_derivative(&reduce_by_point(&jet).unwrap(), 1e-10).unwrap();
    assert!((d - 5.0 / 21.0).abs() < 1e-9, "{d}");
}

#[test]
fn w1_derivative_requires_vanishing_w1() {
    let mut g = common::rng(31);
    let dec = random_decomp(&mut g, 3, 8);
    let jet = dec.ode().jet(&DMatrix::identity(3, 3), 10).unwrap();
    assert!(w1_derivative(&jet, 1e-8).is_err());
}

#[test]
fn invariants_scale_with_their_degree() {
    let mut g = common::rng(32);
    let c = 1.7;
    let phi = ReparamJet::new(vec![c]).unwrap();
    for (k, i) in [(3, 1), (4, 1), (4, 2), (5, 2)] {
        let dec = random_decomp(&mut g, k, 9);
        let jet = dec.ode().jet(&random_frame(&mut g, k), k + 8).unwrap();
        let a = wilczynski(&jet, i).unwrap();
        let b = wilczynski(&reparameterize(&jet, &phi).unwrap(), i).unwrap();
        assert!((b - c.powi(i as i32 + 2) * a).abs() < 1e-8 * (1.0 + a.abs()), "k={k} i={i}: {a} {b}");
    }
    // derivative of 𝒲₁ on a reduced symplectic curve: degree 4
    let dec = random_symplectic(&mut g, 9);
    let jet = dec.ode().jet(&random_frame(&mut g, 4), 11).unwrap();
    let red = reduce_by_point(&jet).unwrap();
    let a = w1_derivative(&red, 1e-8).unwrap();
    let red2 = reduce_by_point(&reparameterize(&jet, &phi).unwrap()).unwrap();
    let b = w1_derivative(&red2, 1e-8).unwrap();
    assert!((b - c.powi(4) * a).abs() < 1e-8 * (1.0 + a.abs()));
}

#[test]
fn moment_curve_invariants_vanish() {
    let v = (0..=9)
        .map(|j| DVector::from_fn(4, |r, _| if r == j { factorial(j) } else { 0.0 }))
        .collect();
    let jet = CurveJet::new(v).unwrap();
    assert_eq!(wilczynski(&jet, 1).unwrap(), 0.0);
    assert_eq!(wilczynski(&jet, 2).unwrap(), 0.0);
}

#[test]
fn too_short_jet_is_an_order_error() {
    let mut g = common::rng(33);
    let jet = random_decomp(&mut g, 4, 2).ode().jet(&DMatrix::identity(4, 4), 5).unwrap();
    assert!(matches!(wilczynski(&jet, 2), Err(dist25::Error::JetOrder { .. })));
}

fn alpha_strategy() -> impl Strategy<Value = PlaneJet> {
    (prop::array::uniform4(-1.0..1.0f64), prop::array::uniform4(-1.0..1.0f64))
        .prop_map(|(a1, a2)| PlaneJet { alpha1: a1, alpha2: a2 })
        .prop_filter("regular", |a| (a.alpha1[0] * a.alpha2[1] - a.alpha1[1] * a.alpha2[0]).abs() > 0.05)
}

fn decomp_strategy(k: usize, n: usize) -> impl Strategy<Value = DecompJet> {
    prop::collection::vec(prop::collection::vec(-1.0..1.0f64, n), k - 1)
        .prop_map(|b| DecompJet::new(b.into_iter().map(Series::new).collect()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn osculating_conic_has_fourth_order_contact(alpha in alpha_strategy()) {
        let q = osculating_quadric(&alpha).unwrap();
        let scale = q.matrix().norm();
        for c in contact_defect(&q, &alpha) {
            prop_assert!(c.abs() <= 1e-9 * scale);
        }
    }

    #[test]
    fn schwarzian_rule(k in 2usize..6, dec_seed in any::<u64>(), d in prop::array::uniform4(-1.0..1.0f64)) {
        let mut g = common::rng(dec_seed);
        let dec = random_decomp(&mut g, k, 7);
        let phi = ReparamJet::new(vec![1.0 + 0.5 * d[0], d[1], d[2], d[3]]).unwrap();
        let lhs = dec.reparameterize(&phi);
        let rhs = reparameterized_top(dec.b(k - 2), &phi, k);
        for n in 0..lhs.b(k - 2).prec().min(rhs.prec()) {
            let (a, b) = (lhs.b(k - 2).coeff(n).unwrap(), rhs.coeff(n).unwrap());
            prop_assert!((a - b).abs() <= 1e-8 * (1.0 + b.abs()), "k={} n={}: {} vs {}", k, n, a, b);
        }
    }

    #[test]
    fn wilczynski_ignores_mobius_tails(dec in decomp_strategy(4, 9), second in -1.0..1.0f64) {
        let base = projective_normalize_decomp(&dec, 3, 1.0, 0.0).unwrap();
        let tail = projective_normalize_decomp(&dec, 3, 1.0, second).unwrap();
        for i in [1, 2] {
            let a = wilczynski_projective(&base.decomposition, i).unwrap();
            let b = wilczynski_projective(&tail.decomposition, i).unwrap();
            prop_assert!((a - b).abs() <= 1e-8 * (1.0 + a.abs()), "i={}: {} vs {}", i, a, b);
        }
    }

    #[test]
    fn plane_w1_derivative_ignores_mobius_tails(dec in decomp_strategy(3, 9), second in -1.0..1.0f64) {
        let base = projective_normalize_decomp(&dec, 2, 1.0, 0.0).unwrap();
        let tail = projective_normalize_decomp(&dec, 2, 1.0, second).unwrap();
        let w = |p: &ProjectiveFrame| p.decomposition.derivative(0, 0).unwrap();
        prop_assert!((w(&base) - w(&tail)).abs() <= 1e-8 * (1.0 + w(&base).abs()));
    }
}
