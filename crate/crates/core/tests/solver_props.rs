use eta_gap::testkit::random_corridor;
use eta_gap::{
    apply_eta_error_buffer, certificate_at, solve_min_gap, CorridorSpec, GapSolver, PairBounds,
    Section,
};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn reference() -> CorridorSpec {
    CorridorSpec::build(
        vec![
            Section::new(920.0, 60.0, 85.0),
            Section::new(520.0, 40.0, 65.0),
            Section::new(340.0, 25.0, 45.0),
            Section::new(220.0, 15.0, 30.0),
        ],
        300.0,
        None,
    )
    .unwrap()
}

fn min_sep(spec: &CorridorSpec, gap: f64) -> f64 {
    PairBounds::new(spec, 0.0, gap)
        .unwrap()
        .min_separation()
        .map_or(f64::INFINITY, |m| m.min_sep_m)
}

#[test]
fn gap_grows_with_safe_distance_on_reference_corridor() {
    let spec = reference();
    let gaps: Vec<f64> = (1..=12)
        .map(|k| solve_min_gap(&spec, 100.0 * k as f64).unwrap().gap_s)
        .collect();
    assert!(gaps.windows(2).all(|w| w[0] <= w[1]), "{gaps:?}");
}

#[test]
fn min_separation_nondecreasing_in_gap() {
    let mut rng = StdRng::seed_from_u64(99);
    for _ in 0..30 {
        let m = rng.gen_range(1..=6);
        let spec = random_corridor(&mut rng, m, 0.0);
        let total = spec.total_travel_time_s();
        let seps: Vec<f64> = (0..100)
            .map(|k| min_sep(&spec, total * k as f64 / 99.0))
            .collect();
        for w in seps.windows(2) {
            assert!(w[1] >= w[0] - 1e-9, "{} then {}", w[0], w[1]);
        }
    }
}

#[test]
fn solved_gap_is_minimal_and_certified() {
    let mut rng = StdRng::seed_from_u64(5);
    for _ in 0..50 {
        let m = rng.gen_range(1..=6);
        let spec = random_corridor(&mut rng, m, 0.0);
        let safe_d = rng.gen_range(0.0..1500.0);
        let sol = solve_min_gap(&spec, safe_d).unwrap();
        assert!(sol.gap_s <= spec.total_travel_time_s() + 1e-6);
        for c in &sol.certificate {
            assert!(c.separation_m >= safe_d - 1e-6);
        }
        if sol.gap_s > 1e-5 {
            assert!(min_sep(&spec, sol.gap_s - 1e-5) < safe_d);
        }
    }
}

#[test]
fn certified_gap_keeps_admissible_pairs_apart() {
    use eta_gap::testkit::random_admissible_trajectory;
    let mut rng = StdRng::seed_from_u64(31);
    let spec = reference();
    for safe_d in [100.0, 300.0, 700.0] {
        let gap = solve_min_gap(&spec, safe_d).unwrap().gap_s;
        for _ in 0..100 {
            let lead = random_admissible_trajectory(&mut rng, &spec, 0.0);
            let follow = random_admissible_trajectory(&mut rng, &spec, gap);
            let (start, end) = (follow.start(), lead.end());
            for k in 0..=400 {
                let t = start + (end - start) * k as f64 / 400.0;
                if t > end {
                    break;
                }
                assert!(lead.eval(t) - follow.eval(t) >= safe_d - 1e-6);
            }
        }
    }
}

#[test]
fn buffer_adds_twice_epsilon() {
    let spec = reference();
    let sol = solve_min_gap(&spec, 300.0).unwrap();
    for eps in [0.0, 0.5, 2.0] {
        let b = apply_eta_error_buffer(&spec, &sol, eps).unwrap();
        assert_eq!(b.gap_s, sol.gap_s + 2.0 * eps);
        assert_eq!(b.certificate, certificate_at(&spec, b.gap_s).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gap_nondecreasing_in_safe_distance(seed in any::<u64>(), a in 0.0..2000.0f64, b in 0.0..2000.0f64) {
        let mut rng = StdRng::seed_from_u64(seed);
        let spec = random_corridor(&mut rng, 4, 0.0);
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let g_lo = solve_min_gap(&spec, lo).unwrap().gap_s;
        let g_hi = solve_min_gap(&spec, hi).unwrap().gap_s;
        prop_assert!(g_lo <= g_hi + 2e-6);
    }

    #[test]
    fn feasibility_is_monotone(seed in any::<u64>(), safe_d in 0.0..1000.0f64, f1 in 0.0..1.0f64, f2 in 0.0..1.0f64) {
        let mut rng = StdRng::seed_from_u64(seed);
        let spec = random_corridor(&mut rng, 3, 0.0);
        let total = spec.total_travel_time_s();
        let (a, b) = if f1 <= f2 { (f1 * total, f2 * total) } else { (f2 * total, f1 * total) };
        if GapSolver::is_feasible(&spec, a, safe_d).unwrap() {
            prop_assert!(GapSolver::is_feasible(&spec, b, safe_d).unwrap());
        }
    }

    #[test]
    fn quantized_gap_sits_on_grid_above_continuous(seed in any::<u64>(), safe_d in 0.0..1000.0f64) {
        let mut rng = StdRng::seed_from_u64(seed);
        let spec = random_corridor(&mut rng, 3, 0.0);
        let sol = GapSolver::default().with_resolution(Some(0.1)).solve(&spec, safe_d).unwrap();
        prop_assert!(sol.gap_s > sol.continuous_gap_s);
        prop_assert!(sol.gap_s <= sol.continuous_gap_s + 0.1 + 1e-9);
        let steps = sol.gap_s / 0.1;
        prop_assert!((steps - steps.round()).abs() < 1e-6);
    }
}
