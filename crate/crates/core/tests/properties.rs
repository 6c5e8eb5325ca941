use mkf_core::geometry::{axis_horn_contains, quasi_polar_decompose, quasi_polar_reconstruct, AxisLine};
use mkf_core::hornification::{hornify, rescale_compatible, theta_action, OrbitArc};
use mkf_core::knot::{make_preset_knot, KnotKind, PresetOptions};
use mkf_core::metric::{estimate_tord, hausdorff_distance, inner_distance, GermGraph, GermGraphOptions};
use mkf_core::point::Point4;
use mkf_core::surface::dyadic_ladder;
use proptest::prelude::*;

fn point(lo: f64, hi: f64) -> impl Strategy<Value = Point4<f64>> {
    prop::array::uniform4(lo..hi).prop_map(Point4)
}

fn axis() -> impl Strategy<Value = AxisLine<f64>> {
    point(-1.0, 1.0).prop_filter_map("zero axis", |p| AxisLine::through(p).ok())
}

/// A point of `S³` away from both poles of the axis.
fn sphere_point(ell: AxisLine<f64>) -> impl Strategy<Value = Point4<f64>> {
    point(-1.0, 1.0).prop_filter_map("near a pole", move |p| {
        let u = p.normalized()?;
        (u.dot(ell.dir()).abs() < 0.95).then_some(u)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn quasi_polar_coordinates(ell in axis(), x in point(-3.0, 3.0)) {
        prop_assume!(x.norm() > 1e-3);
        let q = quasi_polar_decompose(x, &ell).unwrap();
        prop_assert!((q.t - x.norm()).abs() <= 1e-12 * q.t);
        prop_assert!((q.rho - x.dist(ell.at(q.t))).abs() <= 1e-12 * q.t);
        prop_assert!(q.rho < 2.0 * q.t);
        let y = quasi_polar_reconstruct(&q, &ell).unwrap();
        prop_assert!(x.dist(y) <= 1e-12 * q.t);
    }

    #[test]
    fn theta_action_scales_offsets((ell, x) in axis().prop_flat_map(|l| (Just(l), sphere_point(l))),
                                   t in 0.001f64..1.0, s in 0.01f64..1.0, beta in 1.0f64..3.0) {
        let rho = quasi_polar_decompose(x, &ell).unwrap().rho;
        let z = theta_action(t, x, &ell, beta).unwrap();
        let q = quasi_polar_decompose(z, &ell).unwrap();
        prop_assert!((q.t - t).abs() <= 1e-12 * t);
        prop_assert!((q.rho - t.powf(beta) * rho).abs() <= 1e-9 * t.powf(beta));
        let w = rescale_compatible(z, s, &ell, beta).unwrap();
        let direct = theta_action(s * t, x, &ell, beta).unwrap();
        prop_assert!(w.dist(direct) <= 1e-11 * s * t);
        prop_assert!((theta_action(1.0, x, &ell, beta).unwrap().dist(x)) <= 1e-12);
    }

    #[test]
    fn hausdorff_is_a_metric(a in prop::collection::vec(point(-1.0, 1.0), 1..20),
                             b in prop::collection::vec(point(-1.0, 1.0), 1..20),
                             shift in point(-0.5, 0.5)) {
        let dab = hausdorff_distance(&a, &b).unwrap();
        prop_assert_eq!(dab, hausdorff_distance(&b, &a).unwrap());
        prop_assert_eq!(hausdorff_distance(&a, &a).unwrap(), 0.0);
        let moved: Vec<_> = a.iter().map(|p| *p + shift).collect();
        prop_assert!(hausdorff_distance(&a, &moved).unwrap() <= shift.norm() * (1.0 + 1e-12));
    }
}

#[test]
fn orbit_pairs_are_beta_tangent_and_planar() {
    let ell = AxisLine::e0();
    let ladder = dyadic_ladder::<f64>(12);
    for beta in [1.25, 2.0, 2.5] {
        let k = make_preset_knot(KnotKind::FigureEight, &ell, &PresetOptions { beta, ..Default::default() }).unwrap();
        for (a, b) in [(0.2, 2.9), (4.0, 4.05)] {
            let (ga, gb) = (OrbitArc::new(&k, a, &ell, beta).unwrap(), OrbitArc::new(&k, b, &ell, beta).unwrap());
            assert!(ga.planarity_defect(&ladder).unwrap() < 1e-12);
            let e = estimate_tord(&ga.germ().sample(&ladder), &gb.germ().sample(&ladder)).unwrap();
            assert!((e.exponent - beta).abs() < 1e-3 * beta, "beta {beta}: {}", e.exponent);
            assert!(e.r_squared > 0.999_999);
        }
    }
}

#[test]
fn horn_rows_are_knot_copies_inside_the_horn() {
    let ell = AxisLine::e0();
    let ladder = dyadic_ladder::<f64>(10);
    let k = make_preset_knot(KnotKind::trefoil(), &ell, &PresetOptions { samples: 256, ..Default::default() }).unwrap();
    let x = hornify(&k, &ell, 2.0, 0.2, &ladder).unwrap();
    x.check_shells(1e-12).unwrap();
    for (row, &t) in ladder.iter().enumerate() {
        for j in (0..x.cols).step_by(17) {
            let p = x.point(j, row);
            assert!(axis_horn_contains(p, &ell, 2.0, 0.2));
            let rho = quasi_polar_decompose(p, &ell).unwrap().rho;
            let rho0 = quasi_polar_decompose(k.samples[j], &ell).unwrap().rho;
            assert!((rho - t * t * rho0).abs() <= 1e-12 * t);
        }
    }
}

#[test]
fn inner_distance_dominates_outer() {
    let ell = AxisLine::e0();
    let ladder = dyadic_ladder::<f64>(8);
    let k = make_preset_knot(KnotKind::trefoil(), &ell, &PresetOptions { samples: 128, ..Default::default() }).unwrap();
    let x = hornify(&k, &ell, 1.5, 0.2, &ladder).unwrap();
    let g = GermGraph::new(&x, &GermGraphOptions::default());
    for (a, b, row) in [(0, 64, 0), (3, 90, 4), (10, 11, 8), (5, 70, 8)] {
        let (i, j) = (g.node(a, row), g.node(b, row));
        let inner = inner_distance(&g.graph, i, j).unwrap();
        assert!(inner >= x.point(a, row).dist(x.point(b, row)) * (1.0 - 1e-12));
    }
}
