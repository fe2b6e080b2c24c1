use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use stflow_core::lfde::{big_bang, rescale_parabolic, run_flow};
use stflow_core::measures::{self, Background};
use stflow_core::uniformize::{self, hyperbolic_disk, BoundaryValue, LiouvilleOptions};
use stflow_core::verify::check_comparison;
use stflow_core::*;

fn small_disk(h: f64) -> (Grid, Mask) {
    let g = Grid::centered(1.0 + 2.0 * h, h).unwrap();
    let m = Mask::disk(g, Point::default(), 1.0);
    (g, m)
}

fn random_field(g: Grid, rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> Field {
    Field::new(g, (0..g.len()).map(|_| rng.gen_range(lo..hi)).collect()).unwrap()
}

fn frozen(t: f64, u: Field, m: &Mask) -> FlowState {
    FlowState::new(t, u.clone(), m.clone(), BoundaryPolicy::frozen_from(&u)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn ordered_pairs_stay_ordered(seed in any::<u64>(), tau in 0.002f64..0.05) {
        let (g, m) = small_disk(1.0 / 8.0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u0 = random_field(g, &mut rng, 0.1, 4.0);
        let gap = random_field(g, &mut rng, 0.0, 1.0);
        let v0 = u0.zip_map(&gap, |a, b| a + b).unwrap();
        let stepper = ImplicitStepper::default();
        let (mut u, mut v) = (frozen(0.1, u0, &m), frozen(0.1, v0, &m));
        for _ in 0..10 {
            u = stepper.step(&u, tau).unwrap();
            v = stepper.step(&v, tau).unwrap();
            for k in m.iter() {
                prop_assert!(v.u().get(k) >= u.u().get(k) - 1e-9);
            }
        }
    }

    #[test]
    fn stepping_commutes_with_parabolic_rescaling(seed in any::<u64>(), lambda in 0.1f64..10.0) {
        let (g, m) = small_disk(1.0 / 8.0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = frozen(0.2, random_field(g, &mut rng, 0.5, 2.0), &m);
        let stepper = ImplicitStepper::default();
        let a = rescale_parabolic(&stepper.step(&s, 0.01).unwrap(), lambda).unwrap();
        let b = stepper.step(&rescale_parabolic(&s, lambda).unwrap(), lambda * 0.01).unwrap();
        prop_assert!((a.t() - b.t()).abs() <= 1e-12 * a.t());
        for k in m.iter() {
            let (x, y) = (a.u().get(k), b.u().get(k));
            prop_assert!((x - y).abs() <= 1e-8 * x.max(1.0), "cell {k}: {x} vs {y}");
        }
    }

    #[test]
    fn rescalings_compose(l1 in 0.05f64..20.0, l2 in 0.05f64..20.0) {
        let (g, _) = small_disk(1.0 / 8.0);
        let hd = hyperbolic_disk(g, Point::default(), 1.0).unwrap();
        let traj = run_flow(&ImplicitStepper::default(), &big_bang(&hd, 0.1).unwrap(), &[0.15, 0.2], 0.05).unwrap();
        let a = traj.rescaled(l1).unwrap().rescaled(l2).unwrap();
        let b = traj.rescaled(l1 * l2).unwrap();
        for (ta, tb) in a.times().iter().zip(b.times()) {
            prop_assert!((ta - tb).abs() <= 1e-12 * tb);
        }
        for (fa, fb) in a.fields().iter().zip(b.fields()) {
            for (x, y) in fa.values().iter().zip(fb.values()) {
                prop_assert!((x - y).abs() <= 1e-12 * y.abs().max(1e-300));
            }
        }
    }

    #[test]
    fn comparison_is_transitive(c in proptest::collection::vec(0.1f64..5.0, 3)) {
        let mut c = c;
        c.sort_by(f64::total_cmp);
        let (g, m) = small_disk(1.0 / 8.0);
        let flat = |v: f64| {
            let f = Field::constant(g, v);
            Trajectory::from_parts(m.clone(), BoundaryPolicy::frozen_from(&f), vec![0.1, 0.2, 0.3], vec![f.clone(), f.clone(), f]).unwrap()
        };
        let (u, v, w) = (flat(c[0]), flat(c[1]), flat(c[2]));
        let tol = 1e-12;
        let uv = check_comparison(&u, &v, 0.15, &m, tol).unwrap();
        let vw = check_comparison(&v, &w, 0.15, &m, tol).unwrap();
        let uw = check_comparison(&u, &w, 0.15, &m, tol).unwrap();
        if uv.pass && vw.pass {
            prop_assert!(uw.pass);
            prop_assert!(uw.margin >= uv.margin + vw.margin - tol);
        }
    }

    #[test]
    fn weak_start_conserves_mass(mass in 0.1f64..50.0, sigma_cells in 1.0f64..4.0, floor in 1e-8f64..1e-3) {
        let h = 1.0 / 16.0;
        let g = Grid::centered(2.0, h).unwrap();
        let set = Mask::disk(g, Point::new(0.1, -0.05), 0.5);
        let mu = measures::measure_on_perfect_set(&set, mass).unwrap();
        let s = measures::weak_start(&mu, sigma_cells * h, 0.01, &Background::Floor(floor)).unwrap();
        let full = Mask::full(g);
        let total = integrate(s.u(), &full).unwrap();
        let expected = mass + floor * full.count() as f64 * g.cell_area();
        prop_assert!((total - expected).abs() <= 1e-6 * expected, "{total} vs {expected}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn liouville_factor_grows_with_boundary_value(a in 1.0f64..4.0, d in 0.25f64..2.0) {
        let (_, m) = small_disk(1.0 / 16.0);
        let lo = uniformize::solve_liouville(&m, &BoundaryValue::Uniform(a), LiouvilleOptions::default()).unwrap();
        let hi = uniformize::solve_liouville(&m, &BoundaryValue::Uniform(a + d), LiouvilleOptions::default()).unwrap();
        for k in m.stencil_interior().iter() {
            prop_assert!(hi.factor().get(k) >= lo.factor().get(k) * (1.0 - 1e-9));
        }
    }

    #[test]
    fn properness_is_monotone_in_level(l1 in 0.5f64..50.0, l2 in 0.5f64..50.0, puncture in any::<bool>()) {
        let (lo, hi) = if l1 < l2 { (l1, l2) } else { (l2, l1) };
        let h = 1.0 / 8.0;
        let g = Grid::centered(2.5, h).unwrap();
        let p = g.cell_of(Point::new(0.01, 0.01)).unwrap();
        let times: Vec<f64> = (0..8).map(|k| 0.1 + 0.05 * k as f64).collect();
        let s = SpacetimeDomain::from_fn(g, times, 0.6, |t| {
            let mut m = Mask::disk(g, Point::default(), 1.5 + t);
            if puncture && t < 0.3 {
                m.set(p, false);
            }
            m
        })
        .unwrap();
        let factors = uniformize::slice_factors(&s, 5.0, LiouvilleOptions::default()).unwrap();
        let a = uniformize::parabolic_properness(&s, &factors, 0.05, lo).unwrap();
        let b = uniformize::parabolic_properness(&s, &factors, 0.05, hi).unwrap();
        // Sublevel sets grow with the level, so a failure persists upwards.
        prop_assert!(!b.proper || a.proper);
    }
}
