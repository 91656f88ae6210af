//! Guaranteed-safe ETA gaps for vehicles flying a chain of speed-limited
//! corridor sections.
//!
//! * [`corridor`] validates geometry and derives the common section travel
//!   times and waypoint schedules.
//! * [`bounds`] builds the two extreme piecewise-affine trajectories that
//!   enclose every admissible motion.
//! * [`solver`] finds the smallest entry gap whose bound separation stays
//!   above the required distance, checking only the finitely many slope
//!   changes of the bounds.
//! * [`sim`] runs a discrete-time car-following simulation with and without
//!   ETA-gap admission.
//!
//! ```
//! use eta_gap::{solve_min_gap, CorridorSpec, Section};
//!
//! let spec = CorridorSpec::build(
//!     vec![
//!         Section::new(920.0, 60.0, 85.0),
//!         Section::new(520.0, 40.0, 65.0),
//!         Section::new(340.0, 25.0, 45.0),
//!         Section::new(220.0, 15.0, 30.0),
//!     ],
//!     300.0,
//!     None,
//! )
//! .unwrap();
//! let sol = solve_min_gap(&spec, 300.0).unwrap();
//! assert!(sol.gap_s > 13.2 && sol.gap_s < 13.3);
//! ```

pub mod bounds;
pub mod corridor;
pub mod sim;
pub mod solver;
#[cfg(feature = "testkit")]
pub mod testkit;

pub use bounds::{
    switch_time_max_to_min, switch_time_min_to_max, BoundError, BoundKind, Breakpoint,
    CriticalPoint, CriticalPointSet, TrajectoryBound,
};
pub use corridor::{
    derive_travel_times, round_to_decimals, CorridorError, CorridorSpec, Schedule, Section,
    SectionViolation,
};
pub use sim::{Mode, SimConfig, SimError, SimResult, Simulation, VehicleState};
pub use solver::{
    apply_eta_error_buffer, certificate_at, critical_time_set, min_separation, solve_min_gap,
    write_gap_table, GapSolution, GapSolver, GapTableRow, MinSeparation, PairBounds, PairWindow,
    SolveError,
};
