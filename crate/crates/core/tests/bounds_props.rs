use eta_gap::testkit::{dense_min_separation, random_admissible_trajectory, random_corridor};
use eta_gap::{
    switch_time_max_to_min, switch_time_min_to_max, BoundKind, CorridorSpec, PairBounds, Section,
    TrajectoryBound,
};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn bounds(spec: &CorridorSpec, entry: f64) -> (TrajectoryBound, TrajectoryBound) {
    let sched = spec.schedule_for(entry);
    (
        TrajectoryBound::build(spec, &sched, BoundKind::Lower).unwrap(),
        TrajectoryBound::build(spec, &sched, BoundKind::Upper).unwrap(),
    )
}

#[test]
fn admissible_trajectories_stay_inside_bounds() {
    let mut rng = StdRng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let m = rng.gen_range(1..=6);
        let spec = random_corridor(&mut rng, m, 100.0);
        let entry = rng.gen_range(-50.0..50.0);
        let (lower, upper) = bounds(&spec, entry);
        for _ in 0..20 {
            let traj = random_admissible_trajectory(&mut rng, &spec, entry);
            let probes = traj
                .times
                .iter()
                .copied()
                .chain((0..200).map(|k| entry + spec.total_travel_time_s() * k as f64 / 199.0));
            for t in probes {
                let t = t.clamp(lower.start_time_s(), lower.end_time_s());
                let x = traj.eval(t);
                worst = worst
                    .max(lower.eval(t).unwrap() - x)
                    .max(x - upper.eval(t).unwrap());
            }
        }
    }
    assert!(worst <= 1e-6, "worst bound violation {worst} m");
}

#[test]
fn bounds_meet_at_waypoints() {
    let mut rng = StdRng::seed_from_u64(11);
    for _ in 0..50 {
        let m = rng.gen_range(1..=8);
        let spec = random_corridor(&mut rng, m, 0.0);
        let (lower, upper) = bounds(&spec, 3.0);
        let sched = spec.schedule_for(3.0);
        for (t, x) in sched.cwp_times_s.iter().zip(spec.cum_lengths_m()) {
            assert!((lower.eval(*t).unwrap() - x).abs() <= 1e-9 * x.max(1.0));
            assert!((upper.eval(*t).unwrap() - x).abs() <= 1e-9 * x.max(1.0));
        }
    }
}

#[test]
fn min_separation_matches_dense_oracle() {
    let mut rng = StdRng::seed_from_u64(2024);
    let mut checked = 0;
    while checked < 40 {
        let m = rng.gen_range(1..=5);
        let spec = random_corridor(&mut rng, m, 0.0);
        let gap = rng.gen_range(0.0..spec.total_travel_time_s());
        let pair = PairBounds::new(&spec, 0.0, gap).unwrap();
        let Some(exact) = pair.min_separation() else {
            continue;
        };
        let dense =
            dense_min_separation(&spec, &pair.leader_lower, &pair.follower_upper, 20_000).unwrap();
        assert!(
            (exact.min_sep_m - dense.refined_min).abs() <= 1e-6,
            "critical {} vs dense {}",
            exact.min_sep_m,
            dense.refined_min
        );
        assert!(exact.min_sep_m <= dense.grid_min + 1e-9);
        checked += 1;
    }
}

fn section() -> impl Strategy<Value = Section> {
    (10.0..2000.0f64, 1.0..100.0f64, 0.0..60.0f64)
        .prop_map(|(l, lo, w)| Section::new(l, lo, lo + w))
}

proptest! {
    #[test]
    fn lower_never_exceeds_upper(seed in any::<u64>(), frac in 0.0..1.0f64) {
        let mut rng = StdRng::seed_from_u64(seed);
        let spec = random_corridor(&mut rng, 4, 0.0);
        let (lower, upper) = bounds(&spec, 0.0);
        let t = frac * spec.total_travel_time_s();
        prop_assert!(lower.eval(t).unwrap() <= upper.eval(t).unwrap() + 1e-9);
    }

    #[test]
    fn switch_times_cover_section(s in section(), frac in 0.0..1.0f64) {
        prop_assume!(s.v_max > s.v_min);
        let tau = s.length_m / (s.v_min + frac * (s.v_max - s.v_min));
        let lo = switch_time_min_to_max(&s, tau).unwrap();
        let hi = switch_time_max_to_min(&s, tau).unwrap();
        let scale = 1e-9 * s.length_m;
        prop_assert!((s.v_min * lo + s.v_max * (tau - lo) - s.length_m).abs() <= scale);
        prop_assert!((s.v_max * hi + s.v_min * (tau - hi) - s.length_m).abs() <= scale);
        prop_assert!((lo + hi - tau).abs() <= 1e-9 * tau);
    }

    #[test]
    fn derived_travel_time_splits_evenly(s in section()) {
        prop_assume!(s.v_max > s.v_min);
        let tau = 2.0 * s.length_m / (s.v_min + s.v_max);
        let lo = switch_time_min_to_max(&s, tau).unwrap();
        let hi = switch_time_max_to_min(&s, tau).unwrap();
        prop_assert!((lo - tau / 2.0).abs() <= 1e-9 * tau);
        prop_assert!((hi - tau / 2.0).abs() <= 1e-9 * tau);
    }

    #[test]
    fn derived_corridors_are_feasible(sections in prop::collection::vec(section(), 1..8)) {
        // Force overlap so the derived times are admissible in every section.
        let mut chain = sections.clone();
        for j in 1..chain.len() {
            let prev = chain[j - 1];
            if chain[j].v_min > prev.v_max || chain[j].v_max < prev.v_min {
                chain[j] = Section::new(chain[j].length_m, prev.v_min, prev.v_max);
            }
        }
        let spec = CorridorSpec::build(chain, 0.0, None).unwrap();
        for (j, s) in spec.sections().iter().enumerate() {
            let tau = spec.travel_time(j);
            prop_assert!(s.v_min * tau <= s.length_m * (1.0 + 1e-12));
            prop_assert!(s.length_m <= s.v_max * tau * (1.0 + 1e-12));
        }
    }

    #[test]
    fn bounds_shift_with_entry_time(seed in any::<u64>(), shift in -100.0..100.0f64, frac in 0.0..1.0f64) {
        let mut rng = StdRng::seed_from_u64(seed);
        let spec = random_corridor(&mut rng, 3, 0.0);
        let (l0, u0) = bounds(&spec, 0.0);
        let (l1, u1) = bounds(&spec, shift);
        let t = frac * spec.total_travel_time_s();
        let tol = 1e-9 * spec.total_length_m();
        let t1 = (t + shift).clamp(l1.start_time_s(), l1.end_time_s());
        prop_assert!((l0.eval(t).unwrap() - l1.eval(t1).unwrap()).abs() <= tol + 1e-6);
        prop_assert!((u0.eval(t).unwrap() - u1.eval(t1).unwrap()).abs() <= tol + 1e-6);
    }
}
