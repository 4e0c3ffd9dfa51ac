use proptest::prelude::*;
use weylbox::effectivefield::{
    effective_field, effective_length, scale_function, shen_bound, BoundKind, Dim, EffectiveFieldParams,
};
use weylbox::fieldlab::{
    cubewise_gauge, curl_residual, discrete_curl, fitted_gauge_constant, gauge_from_field, gauge_gap,
    linear_gauge, modulus_of_continuity, piecewise_constant,
};
use weylbox::tessellate::tessellate_domain;
use weylbox::{GridBox64, ScalarField64, VectorField64};

fn cube(n: usize) -> GridBox64 {
    GridBox64::new([0.0; 3], [1.0; 3], [n; 3]).unwrap()
}

#[test]
fn constant_field_gauge_matches_formula() {
    let g = GridBox64::new([-1.0; 3], [1.0; 3], [7; 3]).unwrap();
    let b = VectorField64::constant(&g, [0.0, 0.0, 3.0]);
    let c = [0.2, -0.1, 0.0];
    let a = gauge_from_field(&b, c, 1e-6).unwrap();
    for i in 0..g.node_count() {
        let x = g.position(i);
        let v = a.at(i);
        assert!((v[0] + 1.5 * (x[1] - c[1])).abs() < 1e-13);
        assert!((v[1] - 1.5 * (x[0] - c[0])).abs() < 1e-13);
        assert!(v[2].abs() < 1e-13);
    }
    let zero = gauge_from_field(&VectorField64::zeros(&g), c, 1e-6).unwrap();
    assert!((0..3).all(|d| zero.component(d).iter().all(|v| *v == 0.0)));
}

#[test]
fn curl_of_gauge_converges_at_second_order() {
    let field = |x: [f64; 3]| [0.0, 0.0, (2.0 * x[0]).sin() * (1.5 * x[1]).cos() + x[0] * x[0]];
    let residual = |n: usize| {
        let g = cube(n);
        let b = VectorField64::from_fn(&g, field).unwrap();
        let a = gauge_from_field(&b, [0.5; 3], 1e-6).unwrap();
        curl_residual(&a, &b)
    };
    let (r1, r2) = (residual(9), residual(17));
    let order = (r1 / r2).log2();
    assert!(order >= 1.8, "residuals {r1} {r2}, order {order}");

    // B = (0,0,x1): the residual is below C h^2 for a modest C
    let g = cube(11);
    let b = VectorField64::from_fn(&g, |x| [0.0, 0.0, x[0]]).unwrap();
    let a = gauge_from_field(&b, [0.5; 3], 1e-6).unwrap();
    assert!(curl_residual(&a, &b) <= 10.0 * 0.01);
}

#[test]
fn piecewise_constant_examples() {
    let g = GridBox64::new([0.0, 0.0, 0.0], [1.0, 1.0, 1.0], [11, 1, 1]).unwrap();
    let w = ScalarField64::from_fn(&g, |x| x[0]).unwrap();
    let t = tessellate_domain(&g, 0.5).unwrap();
    let p = piecewise_constant(&w, &t).unwrap();
    assert!((p.get(0) - 0.25).abs() < 1e-14);
    assert!((p.get(10) - 0.75).abs() < 1e-14);
    let twice = piecewise_constant(&p, &t).unwrap();
    assert_eq!(twice.values(), p.values());

    let g = cube(9);
    let t = tessellate_domain(&g, 0.5).unwrap();
    let b = VectorField64::from_fn(&g, |x| [0.0, 0.0, 2.0 * x[0]]).unwrap();
    let p = piecewise_constant(&b, &t).unwrap();
    let dev = (0..g.node_count()).map(|i| (b.at(i)[2] - p.at(i)[2]).abs()).fold(0.0, f64::max);
    assert!((dev - 0.5).abs() < 1e-12, "{dev}");
}

#[test]
fn linear_gauge_curl_is_piecewise_field() {
    let g = cube(9);
    let t = tessellate_domain(&g, 0.5).unwrap();
    let b = VectorField64::from_fn(&g, |x| {
        let c = t.locate(x).unwrap_or(0) as f64;
        [0.3 * c, -0.2 + c, 1.0 + 0.5 * c]
    })
    .unwrap();
    let bo = piecewise_constant(&b, &t).unwrap();
    let a = linear_gauge(&bo, &t).unwrap();
    let curl = discrete_curl(&a);
    // interior nodes of each cube
    for i in 0..g.node_count() {
        let x = g.position(i);
        let Some(c) = t.locate(x) else { continue };
        if t.depth_in(c, x) < 0.2 {
            continue;
        }
        for d in 0..3 {
            assert!((curl.at(i)[d] - bo.at(i)[d]).abs() < 1e-12);
        }
    }
}

#[test]
fn continuity_modulus_examples() {
    let g = cube(11);
    let c = VectorField64::constant(&g, [1.0, 2.0, 3.0]);
    assert_eq!(modulus_of_continuity(&c, 0.4).unwrap().sigma, 0.0);

    let b = VectorField64::from_fn(&g, |x| [0.0, 0.0, x[0]]).unwrap();
    let s = modulus_of_continuity(&b, 0.3).unwrap().sigma;
    assert!(s <= 0.3 + 1e-12 && s >= 0.3 - 0.1, "{s}");
    let big = modulus_of_continuity(&b, 5.0).unwrap().sigma;
    assert!((big - 1.0).abs() < 1e-12);
    assert!(modulus_of_continuity(&b, 0.0).is_err());
}

#[test]
fn gauge_gap_scales_with_modulus() {
    let fit = |n: usize| {
        let g = cube(n);
        let t = tessellate_domain(&g, 0.5).unwrap();
        let b = VectorField64::from_fn(&g, |x| [0.0, 0.0, x[0]]).unwrap();
        let a = cubewise_gauge(&b, &t).unwrap();
        let lin = linear_gauge(&piecewise_constant(&b, &t).unwrap(), &t).unwrap();
        let gaps = gauge_gap(&a, &lin, &t).unwrap();
        assert_eq!(gaps.len(), 8);
        assert!(gauge_gap(&lin, &lin, &t).unwrap().iter().all(|v| *v == 0.0));
        let sigma = modulus_of_continuity(&b, 0.5).unwrap().sigma;
        fitted_gauge_constant(&gaps, 0.5, sigma)
    };
    let (c1, c2) = (fit(9), fit(17));
    assert!(c1 > 0.0 && c1.is_finite());
    assert!((c1 - c2).abs() / c2 < 0.2, "{c1} {c2}");

    // constant field: sigma = 0 and the gaps vanish
    let g = cube(9);
    let t = tessellate_domain(&g, 0.5).unwrap();
    let b = VectorField64::constant(&g, [0.0, 0.0, 2.0]);
    let a = cubewise_gauge(&b, &t).unwrap();
    let lin = linear_gauge(&piecewise_constant(&b, &t).unwrap(), &t).unwrap();
    assert!(gauge_gap(&a, &lin, &t).unwrap().iter().all(|v| *v < 1e-13));
}

#[test]
fn effective_field_of_constant_fields() {
    let g = cube(9);
    for p in [2.0, 3.0] {
        for dim in [Dim::Two, Dim::Three] {
            let b = VectorField64::constant(&g, [0.0, 0.0, 4.0]);
            let params = EffectiveFieldParams::new(p);
            let l = effective_length(&b, [0.5; 3], &params, dim).unwrap();
            assert!((l.length - 0.5).abs() < 1e-8 && !l.capped);
            assert!((effective_field(&b, [0.5; 3], &params, dim).unwrap() - 4.0).abs() < 1e-6);
            let b16 = VectorField64::constant(&g, [0.0, 0.0, 16.0]);
            assert!((effective_field(&b16, [0.5; 3], &params, dim).unwrap() - 16.0).abs() < 1e-6);
        }
    }
    let z = VectorField64::zeros(&g);
    let params = EffectiveFieldParams { l_max: Some(2.0), ..EffectiveFieldParams::new(2.0) };
    let l = effective_length(&z, [0.5; 3], &params, Dim::Three).unwrap();
    assert!(l.capped && l.length == 2.0);
    assert!((effective_field(&z, [0.5; 3], &params, Dim::Three).unwrap() - 0.25).abs() < 1e-14);
}

#[test]
fn effective_length_of_localized_field() {
    let g = GridBox64::new([-2.0; 3], [2.0; 3], [21; 3]).unwrap();
    let b = VectorField64::from_fn(&g, |x| {
        let r2 = x.iter().map(|v| v * v).sum::<f64>();
        [0.0, 0.0, if r2 <= 1.0 { 1.0 } else { 0.0 }]
    })
    .unwrap();
    let params = EffectiveFieldParams::new(2.0);
    let l = effective_length(&b, [0.0; 3], &params, Dim::Three).unwrap();
    assert!(!l.capped);
    let f = scale_function(&b, [0.0; 3], l.length, 2.0, Dim::Three);
    assert!(f <= 1.0 + 1e-9 && f > 1.0 - 1e-6, "{f}");
    assert!(scale_function(&b, [0.0; 3], l.length * (1.0 + 1e-6), 2.0, Dim::Three) > 1.0);
}

#[test]
fn shen_bound_examples_and_scalings() {
    let g = cube(9);
    let w = ScalarField64::constant(&g, -1.0);
    // the field extends well past the cube so that b_p = 1 everywhere on it
    let big = GridBox64::new([-2.0; 3], [3.0; 3], [11; 3]).unwrap();
    let b = VectorField64::constant(&big, [0.0, 0.0, 1.0]);
    let params = EffectiveFieldParams::new(2.0);
    let tr = shen_bound(&w, &b, 1.0, 1.0, 1.0, &params, BoundKind::Trace).unwrap();
    assert!((tr - 2.0).abs() < 1e-6, "{tr}");
    let tr2 = shen_bound(&w, &b, 1.0, 1.0, 0.5, &params, BoundKind::Trace).unwrap();
    assert!((tr2 / tr - 2.0).abs() < 1e-12);
    let c1 = shen_bound(&w, &b, 1.0, 1.0, 1.0, &params, BoundKind::Count).unwrap();
    let c2 = shen_bound(&w, &b, 1.0, 1.0, 0.5, &params, BoundKind::Count).unwrap();
    assert!((c2 / c1 - 2f64.sqrt()).abs() < 1e-12);
    let pos = ScalarField64::constant(&g, 0.3);
    assert_eq!(shen_bound(&pos, &b, 1.0, 1.0, 1.0, &params, BoundKind::Trace).unwrap(), 0.0);
    assert!(shen_bound(&w, &b, 1.0, 1.0, 0.0, &params, BoundKind::Count).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn modulus_monotone_in_r(r1 in 0.05f64..1.0, dr in 0.0f64..0.5, s in 0.5f64..3.0) {
        let g = cube(7);
        let b = VectorField64::from_fn(&g, |x| [0.0, (s * x[2]).sin(), x[0] * x[1]]).unwrap();
        let lo = modulus_of_continuity(&b, r1).unwrap().sigma;
        let hi = modulus_of_continuity(&b, r1 + dr).unwrap().sigma;
        prop_assert!(lo <= hi);
    }

    #[test]
    fn effective_field_scales_linearly(s in 0.5f64..20.0, p in 2.0f64..4.0) {
        let g = cube(5);
        let b = VectorField64::constant(&g, [0.0, 0.0, 3.0]);
        let bs = VectorField64::constant(&g, [0.0, 0.0, 3.0 * s]);
        let params = EffectiveFieldParams { l_max: Some(10.0), ..EffectiveFieldParams::new(p) };
        let v = effective_field(&b, [0.5; 3], &params, Dim::Three).unwrap();
        let vs = effective_field(&bs, [0.5; 3], &params, Dim::Three).unwrap();
        prop_assert!((vs / v - s).abs() < 1e-6 * s);
    }

    #[test]
    fn shen_bound_monotone(l1 in 0.1f64..2.0, dl in 0.0f64..2.0, w in -2.0f64..0.0, dw in 0.0f64..1.0) {
        let g = cube(5);
        let b = VectorField64::constant(&g, [0.0, 0.0, 1.0]);
        let params = EffectiveFieldParams::new(2.0);
        for kind in [BoundKind::Trace, BoundKind::Count] {
            let at = |w: f64, l: f64| shen_bound(&ScalarField64::constant(&g, w), &b, 1.0, 0.5, l, &params, kind).unwrap();
            prop_assert!(at(w, l1 + dl) <= at(w, l1) * (1.0 + 1e-12));
            prop_assert!(at(w - dw, l1) >= at(w, l1) * (1.0 - 1e-12));
        }
    }
}
