use proptest::prelude::*;

use incsafe::config::ScenarioConfig;
use incsafe::expr::{Expr, VarTable};
use incsafe::flow::{integrate, SelectionPolicy};
use incsafe::linalg::{BoxRegion, Directions};
use incsafe::scenarios::{builtin, builtin_config, example2_with};
use incsafe::svmap::{ImageSpec, Margin, PerturbMode, PerturbedSystem, SetValuedMap};
use incsafe::ConvexCompactSet;

fn interval() -> impl Strategy<Value = (f64, f64)> {
    (-50.0f64..50.0, -50.0f64..50.0).prop_map(|(a, b)| (a.min(b), a.max(b)))
}

fn planar_set() -> impl Strategy<Value = ConvexCompactSet> {
    (
        prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 1..7),
        0.0f64..2.0,
    )
        .prop_map(|(pts, r)| {
            ConvexCompactSet::new(pts.into_iter().map(|(x, y)| vec![x, y]).collect(), r).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn interval_hausdorff_is_endpoint_distance((a, b) in interval(), (c, d) in interval()) {
        let s = ConvexCompactSet::interval(a, b).unwrap();
        let t = ConvexCompactSet::interval(c, d).unwrap();
        prop_assert_eq!(s.hausdorff(&t).unwrap(), (a - c).abs().max((b - d).abs()));
        prop_assert_eq!(s.hausdorff(&t).unwrap(), t.hausdorff(&s).unwrap());
    }

    #[test]
    fn interval_contains_is_membership((a, b) in interval(), p in -60.0f64..60.0) {
        let s = ConvexCompactSet::interval(a, b).unwrap();
        prop_assert_eq!(s.contains(&[p], 0.0).unwrap(), a <= p && p <= b);
    }

    #[test]
    fn support_is_additive(p in planar_set(), q in planar_set()) {
        let sum = p.minkowski_sum(&q).unwrap();
        for d in Directions::new(2, 64).iter() {
            let lhs = sum.support(d).unwrap();
            let rhs = p.support(d).unwrap() + q.support(d).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
        }
    }

    #[test]
    fn hausdorff_is_a_metric(p in planar_set(), q in planar_set(), r in planar_set()) {
        let pq = p.hausdorff(&q).unwrap();
        prop_assert!(pq >= 0.0);
        prop_assert!(p.hausdorff(&p).unwrap() <= 1e-12);
        prop_assert!((pq - q.hausdorff(&p).unwrap()).abs() <= 1e-12);
        prop_assert!(pq <= p.hausdorff(&r).unwrap() + r.hausdorff(&q).unwrap() + 1e-9);
    }

    #[test]
    fn inflation_contains_the_set(p in planar_set(), e in 0.0f64..1.0) {
        let big = p.inflate(e);
        for pt in p.point_list() {
            prop_assert!(big.contains(&pt, 1e-12).unwrap());
        }
        prop_assert!((p.hausdorff(&big).unwrap() - e).abs() <= 1e-9);
    }

    // F(x) ⊂ F(x) + εB ⊂ co F(x + εB) + εB
    #[test]
    fn perturbations_are_nested(x1 in -10.0f64..10.0, x2 in -1.0f64..1.0, eps in 0.001f64..0.5) {
        let f = builtin("example2").unwrap().compiled.system.base().clone();
        let nominal = PerturbedSystem::nominal(f.clone());
        let image = PerturbedSystem::new(f.clone(), Margin::Constant(eps), PerturbMode::Image);
        let strong = PerturbedSystem::new(f, Margin::Constant(eps), PerturbMode::Strong);
        let x = [x1, x2];
        let (a, b, c) = (nominal.image(&x).unwrap(), image.image(&x).unwrap(), strong.image(&x).unwrap());
        for d in Directions::new(2, 64).iter() {
            let (ha, hb, hc) = (a.support(d).unwrap(), b.support(d).unwrap(), c.support(d).unwrap());
            prop_assert!(ha <= hb + 1e-12);
            prop_assert!(hb <= hc + 1e-9 * (1.0 + hc.abs()));
        }
    }

    #[test]
    fn sampled_solutions_are_deterministic_euler_chains(seed in 0u64..1000, x0 in -1.0f64..1.0) {
        let b = builtin("noisy-loop").unwrap();
        let s = b.scenario();
        let p = SelectionPolicy::RandomExtreme { seed };
        let t1 = integrate(&b.compiled.system, Some(&s.barrier), &s.region, &[x0], 0.5, 1e-2, &p).unwrap();
        let t2 = integrate(&b.compiled.system, Some(&s.barrier), &s.region, &[x0], 0.5, 1e-2, &p).unwrap();
        prop_assert_eq!(&t1, &t2);
        for k in 0..t1.velocities.len() {
            prop_assert_eq!(t1.states[k + 1][0], t1.states[k][0] + 1e-2 * t1.velocities[k][0]);
        }
    }

    // a selection of the nominal system is a selection of both perturbations
    #[test]
    fn nominal_selections_stay_admissible(x0 in 0.0f64..1.0, eps in 0.01f64..0.5) {
        let b = builtin("linear-stable").unwrap();
        let s = b.scenario();
        let nominal = PerturbedSystem::nominal(s.map.clone());
        let t = integrate(&nominal, Some(&s.barrier), &s.region, &[x0], 1.0, 1e-2, &SelectionPolicy::BAscent).unwrap();
        for mode in [PerturbMode::Image, PerturbMode::Strong] {
            let sys = PerturbedSystem::new(s.map.clone(), Margin::Constant(eps), mode);
            for (x, v) in t.states.iter().zip(&t.velocities) {
                prop_assert!(sys.image(x).unwrap().contains(v, 1e-12).unwrap());
            }
        }
    }

    #[test]
    fn config_round_trip(eps in 0.001f64..2.0, grid in 3usize..500, name in "[a-z]{1,8}") {
        let mut c = builtin_config("linear-stable").unwrap();
        c.name = name;
        c.perturbation.eps = incsafe::config::Scalar::Value(eps);
        c.grid = vec![grid];
        let back = ScenarioConfig::from_json(&c.to_json()).unwrap();
        prop_assert_eq!(back.hash(), c.hash());
        prop_assert_eq!(back, c);
    }

    #[test]
    fn example2_first_component_is_free(k in -3.0f64..3.0, x1 in -10.0f64..10.0) {
        let cfg = example2_with(&format!("{k}*x1"));
        let b = incsafe::scenarios::ScenarioBundle::from_config(cfg).unwrap();
        let img = b.compiled.system.base().image(&[x1, 0.0]).unwrap();
        prop_assert_eq!(img.point_list()[0][1], -1.0);
    }
}

#[test]
fn affine_and_expression_maps_agree() {
    let v = VarTable::state(2);
    let a = SetValuedMap::uniform(
        2,
        ImageSpec::Affine {
            a: vec![vec![1.0, 2.0], vec![-3.0, 0.5]],
            b: vec![0.25, -1.0],
            radius: 0.0,
        },
    )
    .unwrap();
    let e = SetValuedMap::uniform(
        2,
        ImageSpec::Point {
            components: vec![
                Expr::parse("x1 + 2*x2 + 0.25", &v).unwrap(),
                Expr::parse("-3*x1 + 0.5*x2 - 1", &v).unwrap(),
            ],
            radius: 0.0,
        },
    )
    .unwrap();
    let region = BoxRegion::new(vec![-2.0, -2.0], vec![2.0, 2.0]).unwrap();
    for x in region.grid(&[9, 9]) {
        let d = a.image(&x).unwrap().hausdorff(&e.image(&x).unwrap()).unwrap();
        assert!(d <= 1e-12);
    }
}
