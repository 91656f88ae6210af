use crate::corridor::{CorridorSpec, Schedule};

use super::control::{helly_raw, lead_raw, tracking_raw};
use super::report::TrajectoryRow;
use super::{
    event_rate, CollisionEvent, Mode, SimConfig, SimError, SimEvent, SimResult, VehicleState,
};

/// Admission slack for comparing planned entry times with the step clock.
const TIME_EPS: f64 = 1e-9;

/// One simulation run. Strictly sequential; independent runs share nothing.
#[derive(Debug, Clone)]
pub struct Simulation {
    cfg: SimConfig,
    spec: CorridorSpec,
    gap_s: Option<f64>,
    horizon_s: f64,
    step_index: u64,
    vehicles: Vec<VehicleState>,
    schedules: Vec<Schedule>,
    /// Acceleration applied in the last step, per vehicle (for logging).
    last_accel: Vec<f64>,
    min_sep: Option<f64>,
    collisions: Vec<CollisionEvent>,
    separation_loss_steps: usize,
    clamp_events: usize,
    trajectories: Option<Vec<TrajectoryRow>>,
}

impl Simulation {
    /// Sets up the run and admits the first vehicle at t = 0. `gap_s` is the
    /// entry spacing for [`Mode::Eta`] and ignored otherwise.
    pub fn new(cfg: SimConfig, spec: &CorridorSpec, gap_s: Option<f64>) -> Result<Self, SimError> {
        cfg.validate()?;
        let entry = spec.section(0);
        if cfg.entry_speed_mps.clamp(entry.v_min, entry.v_max) <= 0.0 {
            return Err(SimError::InvalidConfig("entry speed clamps to zero".into()));
        }
        if cfg.mode == Mode::Eta {
            match gap_s {
                Some(g) if g.is_finite() && g > 0.0 => {}
                other => return Err(SimError::InvalidGap(other.unwrap_or(f64::NAN))),
            }
        }
        let horizon_s = cfg.horizon_s.unwrap_or(
            cfg.entry_window_s + spec.total_travel_time_s() + SimConfig::HORIZON_MARGIN_S,
        );
        let trajectories = cfg.record_trajectories.then(Vec::new);
        let mut sim = Self {
            cfg,
            spec: spec.clone(),
            gap_s,
            horizon_s,
            step_index: 0,
            vehicles: Vec::new(),
            schedules: Vec::new(),
            last_accel: Vec::new(),
            min_sep: None,
            collisions: Vec::new(),
            separation_loss_steps: 0,
            clamp_events: 0,
            trajectories,
        };
        sim.admit();
        sim.check_pairs();
        sim.record();
        Ok(sim)
    }

    pub fn time_s(&self) -> f64 {
        self.step_index as f64 * self.cfg.dt_s
    }

    pub fn vehicles(&self) -> &[VehicleState] {
        &self.vehicles
    }

    pub fn schedules(&self) -> &[Schedule] {
        &self.schedules
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn horizon_s(&self) -> f64 {
        self.horizon_s
    }

    fn planned_entry(&self, index: usize) -> Option<f64> {
        let planned = index as f64 * self.gap_s?;
        (planned <= self.cfg.entry_window_s + TIME_EPS).then_some(planned)
    }

    fn entry_speed(&self) -> f64 {
        self.spec.section(0).clamp_speed(self.cfg.entry_speed_mps)
    }

    /// Nearest vehicle still in the corridor ahead of the entry waypoint.
    fn last_in_corridor(&self) -> Option<&VehicleState> {
        self.vehicles.iter().rev().find(|v| v.in_corridor())
    }

    fn push_vehicle(&mut self, entry_time_s: f64, position_m: f64) -> usize {
        let id = self.vehicles.len();
        let mut v = VehicleState::new(
            id,
            entry_time_s,
            self.entry_speed(),
            self.spec.num_sections(),
        );
        v.position_m = position_m;
        self.vehicles.push(v);
        self.schedules.push(self.spec.schedule_for(entry_time_s));
        self.last_accel.push(0.0);
        id
    }

    /// Admits whoever is due at the current time; returns their ids.
    ///
    /// ETA: vehicle `i` crosses the entry waypoint at `i·gap` (while inside
    /// the entry window), placed where it would be at the current step.
    /// No-ETA: one vehicle per step, as soon as its car-following acceleration
    /// at the entry waypoint is strictly positive.
    pub fn admit(&mut self) -> Vec<usize> {
        let now = self.time_s();
        let mut admitted = Vec::new();
        if self.vehicles.is_empty() {
            admitted.push(self.push_vehicle(now, 0.0));
        }
        match self.cfg.mode {
            Mode::Eta => {
                while let Some(planned) = self.planned_entry(self.vehicles.len()) {
                    if planned > now + TIME_EPS {
                        break;
                    }
                    let x = (self.entry_speed() * (now - planned)).max(0.0);
                    admitted.push(self.push_vehicle(planned, x));
                }
            }
            Mode::NoEta => {
                if admitted.is_empty() && now <= self.cfg.entry_window_s + TIME_EPS {
                    let v0 = self.entry_speed();
                    let go = match self.last_in_corridor() {
                        None => true,
                        Some(ahead) => {
                            helly_raw(ahead.position_m, ahead.speed_mps - v0, v0, &self.cfg) > 0.0
                        }
                    };
                    if go {
                        admitted.push(self.push_vehicle(now, 0.0));
                    }
                }
            }
        }
        admitted
    }

    fn more_entries_possible(&self) -> bool {
        match self.cfg.mode {
            Mode::Eta => self.planned_entry(self.vehicles.len()).is_some(),
            Mode::NoEta => self.time_s() <= self.cfg.entry_window_s + TIME_EPS,
        }
    }

    /// No moving vehicles and nobody left to admit.
    pub fn is_done(&self) -> bool {
        !self.more_entries_possible() && !self.vehicles.iter().any(|v| v.is_moving())
    }

    fn raw_accel(&self, idx: usize, predecessor: Option<usize>, now: f64) -> f64 {
        let v = &self.vehicles[idx];
        let follow = predecessor.map(|p| {
            let l = &self.vehicles[p];
            helly_raw(
                l.position_m - v.position_m,
                l.speed_mps - v.speed_mps,
                v.speed_mps,
                &self.cfg,
            )
        });
        match self.cfg.mode {
            Mode::NoEta => follow.unwrap_or_else(|| lead_raw(v, &self.spec)),
            Mode::Eta => {
                let track = tracking_raw(v, &self.schedules[idx], &self.spec, now, &self.cfg);
                follow.map_or(track, |f| f.min(track))
            }
        }
    }

    /// Advances one step: accelerations from the current state, forward Euler,
    /// waypoint bookkeeping, speed projection, admissions, separation checks.
    pub fn step(&mut self) -> Result<Vec<SimEvent>, SimError> {
        let now = self.time_s();
        let dt = self.cfg.dt_s;
        let mut events = Vec::new();

        let mut commands = Vec::new();
        let mut predecessor = None;
        for (idx, v) in self.vehicles.iter().enumerate() {
            if !v.in_corridor() {
                continue;
            }
            if v.is_moving() {
                let a = self
                    .raw_accel(idx, predecessor, now)
                    .clamp(self.cfg.accel_min_mps2, self.cfg.accel_max_mps2);
                commands.push((idx, a));
            }
            predecessor = Some(idx);
        }

        let cum = self.spec.cum_lengths_m().to_vec();
        let m = self.spec.num_sections();
        for (idx, a) in commands {
            let v = &mut self.vehicles[idx];
            let x0 = v.position_m;
            let v0 = v.speed_mps;
            let x1 = x0 + dt * v0;
            let mut v1 = v0 + dt * a;

            while v.section_index < m && x1 >= cum[v.section_index + 1] {
                let wp = v.section_index + 1;
                let t_cross = now + (cum[wp] - x0) / v0;
                v.cwp_times_actual.push(t_cross);
                if wp == m {
                    v.exited = true;
                    v.exit_time_s = Some(t_cross);
                    events.push(SimEvent::Exit {
                        time_s: t_cross,
                        vehicle: idx,
                    });
                    break;
                }
                v.section_index = wp;
                events.push(SimEvent::WaypointCrossing {
                    time_s: t_cross,
                    vehicle: idx,
                    waypoint: wp,
                });
            }
            if !v.exited {
                let projected = self.spec.section(v.section_index).clamp_speed(v1);
                if (projected - v1).abs() > 1e-12 {
                    events.push(SimEvent::SpeedClamp {
                        time_s: now + dt,
                        vehicle: idx,
                        from_mps: v1,
                        to_mps: projected,
                    });
                    self.clamp_events += 1;
                }
                v1 = projected;
            }
            if !x1.is_finite() || !v1.is_finite() {
                return Err(SimError::NonFinite {
                    vehicle: idx,
                    time_s: now,
                });
            }
            v.position_m = x1;
            v.speed_mps = v1;
            self.last_accel[idx] = (v1 - v0) / dt;
        }

        self.step_index += 1;
        for id in self.admit() {
            events.push(SimEvent::Entry {
                time_s: self.vehicles[id].entry_time_s,
                vehicle: id,
            });
        }
        events.extend(self.check_pairs());
        self.record();
        Ok(events)
    }

    /// Spacing of consecutive in-corridor vehicles: tracks the minimum, logs
    /// separation losses, and freezes colliding pairs.
    fn check_pairs(&mut self) -> Vec<SimEvent> {
        let now = self.time_s();
        let safe_d = self.spec.safe_d_m();
        let inside: Vec<usize> = (0..self.vehicles.len())
            .filter(|&i| self.vehicles[i].in_corridor())
            .collect();
        let mut events = Vec::new();
        for pair in inside.windows(2) {
            let (li, fi) = (pair[0], pair[1]);
            let spacing = self.vehicles[li].position_m - self.vehicles[fi].position_m;
            self.min_sep = Some(self.min_sep.map_or(spacing, |m: f64| m.min(spacing)));
            if spacing < safe_d {
                self.separation_loss_steps += 1;
                events.push(SimEvent::SeparationLoss {
                    time_s: now,
                    leader: li,
                    follower: fi,
                    spacing_m: spacing,
                });
            }
            if spacing <= 0.0 && !(self.vehicles[li].collided && self.vehicles[fi].collided) {
                let ev = CollisionEvent {
                    time_s: now,
                    leader: li,
                    follower: fi,
                    spacing_m: spacing,
                };
                self.collisions.push(ev);
                events.push(SimEvent::Collision(ev));
                for i in [li, fi] {
                    let v = &mut self.vehicles[i];
                    v.collided = true;
                    v.speed_mps = 0.0;
                }
            }
        }
        events
    }

    fn record(&mut self) {
        let now = self.time_s();
        if let Some(rows) = self.trajectories.as_mut() {
            for (idx, v) in self.vehicles.iter().enumerate() {
                if v.in_corridor() {
                    rows.push(TrajectoryRow {
                        time_s: now,
                        vehicle_id: idx,
                        position_m: v.position_m,
                        speed_mps: v.speed_mps,
                        accel_mps2: self.last_accel[idx],
                        section_index: v.section_index,
                    });
                }
            }
        }
    }

    /// Steps until every vehicle has left (and no more can enter) or the
    /// horizon is reached.
    pub fn run(mut self) -> Result<SimResult, SimError> {
        let max_steps = (self.horizon_s / self.cfg.dt_s - TIME_EPS).ceil() as u64;
        while self.step_index < max_steps && !self.is_done() {
            self.step()?;
        }
        Ok(self.finish())
    }

    fn finish(self) -> SimResult {
        let count_by = self.cfg.count_by_s.unwrap_or(f64::INFINITY);
        let mut safe_exits: Vec<f64> = self
            .vehicles
            .iter()
            .filter(|v| !v.collided)
            .filter_map(|v| v.exit_time_s)
            .filter(|&t| t <= count_by + TIME_EPS)
            .collect();
        safe_exits.sort_by(f64::total_cmp);
        let entries: Vec<f64> = self.vehicles.iter().map(|v| v.entry_time_s).collect();
        let end_time_s = self.time_s();
        SimResult {
            mode: self.cfg.mode,
            gap_s: self.gap_s.filter(|_| self.cfg.mode == Mode::Eta),
            entered: self.vehicles.len(),
            exited: self.vehicles.iter().filter(|v| v.exited).count(),
            safe_arrivals: safe_exits.len(),
            collision_events: self.collisions,
            separation_loss_steps: self.separation_loss_steps,
            speed_clamp_events: self.clamp_events,
            min_pairwise_separation_m: self.min_sep,
            arrival_rate_cwp0: event_rate(&entries),
            throughput_cwp_m: event_rate(&safe_exits),
            incomplete: self.vehicles.iter().any(|v| v.in_corridor()),
            end_time_s,
            vehicles: self.vehicles,
            trajectories: self.trajectories,
        }
    }
}

/// Runs a full simulation. `gap_s` is required in ETA mode.
pub fn run(cfg: SimConfig, spec: &CorridorSpec, gap_s: Option<f64>) -> Result<SimResult, SimError> {
    Simulation::new(cfg, spec, gap_s)?.run()
}
