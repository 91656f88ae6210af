//! Acceleration policies.

use crate::corridor::{CorridorSpec, Schedule};

use super::{SimConfig, VehicleState};

/// Helly car-following law `λx·(Δx − D(v)) + λv·Δv` with desired spacing
/// `D(v) = D_min + T_des·v`. Returned unclamped.
pub fn helly_accel(leader: &VehicleState, follower: &VehicleState, cfg: &SimConfig) -> f64 {
    helly_raw(
        leader.position_m - follower.position_m,
        leader.speed_mps - follower.speed_mps,
        follower.speed_mps,
        cfg,
    )
}

pub(crate) fn helly_raw(
    spacing_m: f64,
    rel_speed_mps: f64,
    own_speed_mps: f64,
    cfg: &SimConfig,
) -> f64 {
    let desired = cfg.d_min_m + cfg.t_des_s * own_speed_mps;
    cfg.lambda_x * (spacing_m - desired) + cfg.lambda_v * rel_speed_mps
}

/// Clip to the acceleration bounds, then limit so one step keeps the speed
/// inside the current section's limits.
pub fn clamp_accel(accel: f64, speed_mps: f64, v_min: f64, v_max: f64, cfg: &SimConfig) -> f64 {
    let a = accel.clamp(cfg.accel_min_mps2, cfg.accel_max_mps2);
    let v_next = (speed_mps + cfg.dt_s * a).clamp(v_min, v_max);
    (v_next - speed_mps) / cfg.dt_s
}

/// Raw lead-vehicle law: relax towards the section's average required speed.
pub(crate) fn lead_raw(state: &VehicleState, spec: &CorridorSpec) -> f64 {
    let j = state.section_index;
    spec.section(j).length_m / spec.travel_time(j) - state.speed_mps
}

/// Lead-vehicle acceleration, clamped.
pub fn lead_vehicle_accel(state: &VehicleState, spec: &CorridorSpec, cfg: &SimConfig) -> f64 {
    let s = spec.section(state.section_index);
    clamp_accel(
        lead_raw(state, spec),
        state.speed_mps,
        s.v_min,
        s.v_max,
        cfg,
    )
}

/// Speed that reaches the end of the current section exactly on schedule.
/// With at most one step left, falls back to the section's limit midpoint.
pub fn schedule_target_speed(
    state: &VehicleState,
    schedule: &Schedule,
    spec: &CorridorSpec,
    now_s: f64,
    cfg: &SimConfig,
) -> f64 {
    let j = state.section_index;
    let remaining_s = schedule.cwp_times_s[j + 1] - now_s;
    if remaining_s <= cfg.dt_s {
        return spec.section(j).average_speed();
    }
    (spec.cum_lengths_m()[j + 1] - state.position_m) / remaining_s
}

pub(crate) fn tracking_raw(
    state: &VehicleState,
    schedule: &Schedule,
    spec: &CorridorSpec,
    now_s: f64,
    cfg: &SimConfig,
) -> f64 {
    schedule_target_speed(state, schedule, spec, now_s, cfg) - state.speed_mps
}

/// Schedule-tracking acceleration, clamped.
pub fn schedule_tracking_accel(
    state: &VehicleState,
    schedule: &Schedule,
    spec: &CorridorSpec,
    now_s: f64,
    cfg: &SimConfig,
) -> f64 {
    let s = spec.section(state.section_index);
    clamp_accel(
        tracking_raw(state, schedule, spec, now_s, cfg),
        state.speed_mps,
        s.v_min,
        s.v_max,
        cfg,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corridor::tests::reference_sections;
    use crate::sim::Mode;

    fn spec() -> CorridorSpec {
        CorridorSpec::build(reference_sections(), 300.0, None).unwrap()
    }

    fn vehicle(x: f64, v: f64, section: usize) -> VehicleState {
        let mut s = VehicleState::new(0, 0.0, v, 0);
        s.position_m = x;
        s.section_index = section;
        s
    }

    #[test]
    fn helly_equilibrium_is_zero() {
        let cfg = SimConfig::reference(Mode::NoEta, 300.0);
        let f = vehicle(0.0, 50.0, 0);
        let l = vehicle(300.0 + 1.2 * 50.0, 50.0, 0);
        assert!(helly_accel(&l, &f, &cfg).abs() < 1e-12);
    }

    #[test]
    fn helly_substitution_and_clip() {
        let cfg = SimConfig::reference(Mode::NoEta, 300.0);
        let f = vehicle(0.0, 50.0, 0);
        let l = vehicle(400.0, 45.0, 0);
        let a = helly_accel(&l, &f, &cfg);
        assert!((a - 25.5).abs() < 1e-12);
        assert_eq!(a.clamp(cfg.accel_min_mps2, cfg.accel_max_mps2), 2.0);
        // 60 m/s sits inside section 0 limits, so only the accel clip binds.
        assert!((clamp_accel(a, 60.0, 60.0, 85.0, &cfg) - 2.0).abs() < 1e-9);
    }

    #[test]
    fn lead_vehicle_relaxes_to_average_speed() {
        let cfg = SimConfig::reference(Mode::NoEta, 300.0);
        let spec = spec();
        assert!(lead_vehicle_accel(&vehicle(10.0, 72.5, 0), &spec, &cfg).abs() < 1e-9);
        assert!((lead_raw(&vehicle(10.0, 82.5, 0), &spec) + 10.0).abs() < 1e-9);
        assert!((lead_vehicle_accel(&vehicle(10.0, 82.5, 0), &spec, &cfg) + 3.0).abs() < 1e-9);
        assert!((lead_vehicle_accel(&vehicle(10.0, 60.0, 0), &spec, &cfg) - 2.0).abs() < 1e-9);
    }

    #[test]
    fn clamp_respects_speed_limits() {
        let cfg = SimConfig::reference(Mode::NoEta, 300.0);
        // +2 m/s² from 84.9 would exceed 85.
        assert!((clamp_accel(2.0, 84.9, 60.0, 85.0, &cfg) - 1.0).abs() < 1e-9);
        assert!((clamp_accel(-3.0, 60.1, 60.0, 85.0, &cfg) + 1.0).abs() < 1e-9);
    }

    #[test]
    fn tracking_matches_lead_policy_at_entry() {
        let cfg = SimConfig::reference(Mode::Eta, 300.0);
        let spec = spec();
        let sched = spec.schedule_for(0.0);
        let v = vehicle(0.0, 72.5, 0);
        assert!((schedule_target_speed(&v, &sched, &spec, 0.0, &cfg) - 72.5).abs() < 1e-9);
        assert!(schedule_tracking_accel(&v, &sched, &spec, 0.0, &cfg).abs() < 1e-9);
    }

    #[test]
    fn tracking_guard_near_deadline() {
        let cfg = SimConfig::reference(Mode::Eta, 300.0);
        let spec = spec();
        let sched = spec.schedule_for(0.0);
        let v = vehicle(919.0, 70.0, 0);
        let now = sched.cwp_times_s[1] - 1e-9;
        let target = schedule_target_speed(&v, &sched, &spec, now, &cfg);
        assert_eq!(target, 72.5);
        assert!(schedule_tracking_accel(&v, &sched, &spec, now, &cfg).is_finite());
    }
}
