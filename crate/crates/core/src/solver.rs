//! Minimum ETA gap between consecutive vehicles.
//!
//! The leader's lower bound minus the follower's upper bound is a continuous
//! piecewise-affine function of time, so its minimum over the shared window is
//! attained at a slope change of either bound or at a window endpoint. That
//! turns the continuous separation constraint into a finite check, and since
//! shifting the follower later can only push its upper bound down, the check
//! is monotone in the gap. Bisection over the gap finds the smallest feasible
//! value.

use serde::Serialize;
use thiserror::Error;

use crate::bounds::{BoundError, BoundKind, TrajectoryBound};
use crate::corridor::CorridorSpec;

/// Allowed shortfall of a certificate separation below `safe_d` (meters).
pub const CERTIFICATE_TOLERANCE_M: f64 = 1e-6;

pub const DEFAULT_GAP_TOLERANCE_S: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("safe distance {0} m must be finite and >= 0")]
    InvalidSafeDistance(f64),
    #[error("ETA error buffer {0} s must be finite and >= 0")]
    InvalidEpsilon(f64),
    #[error("bisection tolerance {0} s must be finite and > 0")]
    InvalidTolerance(f64),
    #[error("gap resolution {0} s must be finite and > 0")]
    InvalidResolution(f64),
    #[error("gap {0} s must be finite and >= 0")]
    InvalidGap(f64),
    #[error(transparent)]
    Bound(#[from] BoundError),
    #[error("certificate violated at t = {time_s} s: separation {separation_m} m < {safe_d_m} m")]
    CertificateViolation {
        time_s: f64,
        separation_m: f64,
        safe_d_m: f64,
    },
}

/// Overlap of a leader/follower pair: from the follower's entry until the
/// leader's exit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairWindow {
    pub leader_entry_s: f64,
    pub follower_entry_s: f64,
    pub start_s: f64,
    pub end_s: f64,
}

impl PairWindow {
    pub fn new(spec: &CorridorSpec, leader_entry_s: f64, follower_entry_s: f64) -> Self {
        Self {
            leader_entry_s,
            follower_entry_s,
            start_s: follower_entry_s,
            end_s: leader_entry_s + spec.total_travel_time_s(),
        }
    }

    pub fn gap_s(&self) -> f64 {
        self.follower_entry_s - self.leader_entry_s
    }

    /// A follower entering no earlier than the leader's exit never shares the
    /// corridor with it.
    pub fn is_empty(&self) -> bool {
        self.start_s >= self.end_s
    }
}

/// Leader lower bound and follower upper bound for a pair scheduled `gap_s` apart.
#[derive(Debug, Clone)]
pub struct PairBounds {
    pub window: PairWindow,
    pub leader_lower: TrajectoryBound,
    pub follower_upper: TrajectoryBound,
}

impl PairBounds {
    pub fn new(spec: &CorridorSpec, leader_entry_s: f64, gap_s: f64) -> Result<Self, SolveError> {
        if !gap_s.is_finite() || gap_s < 0.0 {
            return Err(SolveError::InvalidGap(gap_s));
        }
        let follower_entry_s = leader_entry_s + gap_s;
        let leader_lower =
            TrajectoryBound::build(spec, &spec.schedule_for(leader_entry_s), BoundKind::Lower)?;
        let follower_upper =
            TrajectoryBound::build(spec, &spec.schedule_for(follower_entry_s), BoundKind::Upper)?;
        Ok(Self {
            window: PairWindow::new(spec, leader_entry_s, follower_entry_s),
            leader_lower,
            follower_upper,
        })
    }

    pub fn critical_times(&self) -> Vec<f64> {
        critical_time_set(&self.leader_lower, &self.follower_upper)
    }

    pub fn min_separation(&self) -> Option<MinSeparation> {
        min_separation(&self.leader_lower, &self.follower_upper)
    }
}

fn window_of(leader_lower: &TrajectoryBound, follower_upper: &TrajectoryBound) -> (f64, f64) {
    (follower_upper.start_time_s(), leader_lower.end_time_s())
}

/// Sorted, deduplicated slope-change times of both bounds inside the pair
/// window, with both window endpoints. Empty when the window is empty.
pub fn critical_time_set(
    leader_lower: &TrajectoryBound,
    follower_upper: &TrajectoryBound,
) -> Vec<f64> {
    let (start, end) = window_of(leader_lower, follower_upper);
    if start >= end {
        return Vec::new();
    }
    let mut times: Vec<f64> = leader_lower
        .breakpoints()
        .iter()
        .chain(follower_upper.breakpoints())
        .map(|b| b.time_s)
        .filter(|t| (start..=end).contains(t))
        .collect();
    // Endpoints are breakpoints already; pushing them keeps the guarantee
    // explicit should that ever change.
    times.push(start);
    times.push(end);
    times.sort_by(f64::total_cmp);
    times.dedup_by(|a, b| (*a - *b).abs() <= crate::bounds::BREAKPOINT_DEDUP_S);
    times
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MinSeparation {
    pub min_sep_m: f64,
    pub argmin_time_s: f64,
}

/// Separation `lower_leader(t) − upper_follower(t)` at one instant inside the window.
pub fn separation_at(
    leader_lower: &TrajectoryBound,
    follower_upper: &TrajectoryBound,
    t: f64,
) -> Result<f64, BoundError> {
    Ok(leader_lower.eval(t)? - follower_upper.eval(t)?)
}

/// Smallest bound separation over the pair window, checked at the critical
/// times only. `None` means the window is empty and the pair is trivially safe.
pub fn min_separation(
    leader_lower: &TrajectoryBound,
    follower_upper: &TrajectoryBound,
) -> Option<MinSeparation> {
    critical_time_set(leader_lower, follower_upper)
        .into_iter()
        .map(|t| MinSeparation {
            // Critical times lie inside both domains by construction.
            min_sep_m: separation_at(leader_lower, follower_upper, t)
                .expect("critical time inside both bound domains"),
            argmin_time_s: t,
        })
        .min_by(|a, b| a.min_sep_m.total_cmp(&b.min_sep_m))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CertificatePoint {
    pub time_s: f64,
    pub separation_m: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapSolution {
    pub gap_s: f64,
    pub safe_d_m: f64,
    /// Bound separation at every critical time of the pair at `gap_s`, with the
    /// leader entering at 0.
    pub certificate: Vec<CertificatePoint>,
    /// The gap reached the sum of travel times, i.e. the vehicles never share
    /// the corridor.
    pub feasible_trivial: bool,
    /// Bisection result before any grid rounding.
    pub continuous_gap_s: f64,
}

impl GapSolution {
    pub fn min_certificate_separation(&self) -> Option<f64> {
        self.certificate
            .iter()
            .map(|c| c.separation_m)
            .min_by(f64::total_cmp)
    }
}

/// Bound separations at the critical times of a pair `gap_s` apart.
pub fn certificate_at(
    spec: &CorridorSpec,
    gap_s: f64,
) -> Result<Vec<CertificatePoint>, SolveError> {
    let pair = PairBounds::new(spec, 0.0, gap_s)?;
    pair.critical_times()
        .into_iter()
        .map(|t| {
            Ok(CertificatePoint {
                time_s: t,
                separation_m: separation_at(&pair.leader_lower, &pair.follower_upper, t)?,
            })
        })
        .collect()
}

fn verified_solution(
    spec: &CorridorSpec,
    gap_s: f64,
    continuous_gap_s: f64,
    safe_d_m: f64,
) -> Result<GapSolution, SolveError> {
    let certificate = certificate_at(spec, gap_s)?;
    if let Some(bad) = certificate
        .iter()
        .find(|c| c.separation_m < safe_d_m - CERTIFICATE_TOLERANCE_M)
    {
        return Err(SolveError::CertificateViolation {
            time_s: bad.time_s,
            separation_m: bad.separation_m,
            safe_d_m,
        });
    }
    Ok(GapSolution {
        gap_s,
        safe_d_m,
        certificate,
        feasible_trivial: gap_s >= spec.total_travel_time_s(),
        continuous_gap_s,
    })
}

/// Bisection settings for [`GapSolver::solve`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapSolver {
    /// Width of the final bisection bracket, seconds.
    pub tolerance_s: f64,
    /// When set, the reported gap is the smallest multiple of this step
    /// strictly above the bisection result.
    pub resolution_s: Option<f64>,
}

impl Default for GapSolver {
    fn default() -> Self {
        Self {
            tolerance_s: DEFAULT_GAP_TOLERANCE_S,
            resolution_s: None,
        }
    }
}

impl GapSolver {
    pub fn with_resolution(mut self, resolution_s: Option<f64>) -> Self {
        self.resolution_s = resolution_s;
        self
    }

    pub fn with_tolerance(mut self, tolerance_s: f64) -> Self {
        self.tolerance_s = tolerance_s;
        self
    }

    /// Whether a gap keeps the bound separation at or above `safe_d_m`.
    pub fn is_feasible(spec: &CorridorSpec, gap_s: f64, safe_d_m: f64) -> Result<bool, SolveError> {
        let pair = PairBounds::new(spec, 0.0, gap_s)?;
        Ok(pair
            .min_separation()
            .is_none_or(|m| m.min_sep_m >= safe_d_m))
    }

    pub fn solve(&self, spec: &CorridorSpec, safe_d_m: f64) -> Result<GapSolution, SolveError> {
        if !safe_d_m.is_finite() || safe_d_m < 0.0 {
            return Err(SolveError::InvalidSafeDistance(safe_d_m));
        }
        if !self.tolerance_s.is_finite() || self.tolerance_s <= 0.0 {
            return Err(SolveError::InvalidTolerance(self.tolerance_s));
        }
        if let Some(r) = self.resolution_s {
            if !r.is_finite() || r <= 0.0 {
                return Err(SolveError::InvalidResolution(r));
            }
        }

        // The upper end is always feasible: the window is empty there.
        let mut lo = 0.0;
        let mut hi = spec.total_travel_time_s();
        let continuous = if Self::is_feasible(spec, lo, safe_d_m)? {
            lo
        } else {
            while hi - lo > self.tolerance_s {
                let mid = 0.5 * (lo + hi);
                if Self::is_feasible(spec, mid, safe_d_m)? {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            hi
        };

        let gap = match self.resolution_s {
            // 1e-9 absorbs representation error in continuous / step so an
            // exact grid value still moves up one step.
            Some(step) => {
                let n = (continuous / step + 1e-9).floor() + 1.0;
                // n / 10 lands on the nearest double to a decimal grid value,
                // n * 0.1 often does not.
                let per_second = (1.0 / step).round();
                if (per_second * step - 1.0).abs() < 1e-12 {
                    n / per_second
                } else {
                    n * step
                }
            }
            None => continuous,
        };
        verified_solution(spec, gap, continuous, safe_d_m)
    }
}

/// Smallest gap (default bisection settings) keeping the leader's lower bound
/// at least `safe_d_m` ahead of the follower's upper bound.
pub fn solve_min_gap(spec: &CorridorSpec, safe_d_m: f64) -> Result<GapSolution, SolveError> {
    GapSolver::default().solve(spec, safe_d_m)
}

/// Widens a solved gap by `2·epsilon_s` to absorb a ±epsilon ETA error at
/// the entry waypoint, and recertifies it.
pub fn apply_eta_error_buffer(
    spec: &CorridorSpec,
    solution: &GapSolution,
    epsilon_s: f64,
) -> Result<GapSolution, SolveError> {
    if !epsilon_s.is_finite() || epsilon_s < 0.0 {
        return Err(SolveError::InvalidEpsilon(epsilon_s));
    }
    verified_solution(
        spec,
        solution.gap_s + 2.0 * epsilon_s,
        solution.continuous_gap_s,
        solution.safe_d_m,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapTableRow {
    pub safe_d_m: f64,
    pub gap_s: f64,
    /// Bisection result before grid rounding and error buffer.
    pub continuous_gap_s: f64,
    pub trivial_bound_s: f64,
    pub solve_time_s: f64,
}

/// Writes `safe_d_m,gap_s,continuous_gap_s,trivial_bound_s,solve_time_s` rows.
pub fn write_gap_table<W: std::io::Write>(rows: &[GapTableRow], writer: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corridor::tests::reference_sections;
    use crate::corridor::Section;

    fn reference() -> CorridorSpec {
        CorridorSpec::build(reference_sections(), 300.0, None).unwrap()
    }

    #[test]
    fn empty_window_has_no_critical_times() {
        let spec = reference();
        let pair = PairBounds::new(&spec, 0.0, spec.total_travel_time_s()).unwrap();
        assert!(pair.window.is_empty());
        assert!(pair.critical_times().is_empty());
        assert!(pair.min_separation().is_none());
        let pair = PairBounds::new(&spec, 0.0, 50.0).unwrap();
        assert!(pair.critical_times().is_empty());
    }

    #[test]
    fn critical_times_for_reference_pair() {
        let spec = reference();
        let gap = 13.3;
        let pair = PairBounds::new(&spec, 0.0, gap).unwrap();
        let times = pair.critical_times();
        let end = spec.total_travel_time_s();

        // Independent enumeration: every breakpoint time of both bounds in window.
        let mut expected: Vec<f64> = pair
            .leader_lower
            .breakpoints()
            .iter()
            .chain(pair.follower_upper.breakpoints())
            .map(|b| b.time_s)
            .filter(|t| *t >= gap && *t <= end)
            .collect();
        expected.sort_by(f64::total_cmp);
        expected.dedup();
        assert_eq!(times, expected);
        assert!(times.len() <= 18);
        assert_eq!(times[0], gap);
        assert_eq!(*times.last().unwrap(), end);
        assert!(times.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn equal_limit_single_section_has_only_endpoints() {
        let spec = CorridorSpec::build(vec![Section::new(100.0, 10.0, 10.0)], 0.0, None).unwrap();
        let pair = PairBounds::new(&spec, 0.0, 4.0).unwrap();
        assert_eq!(pair.critical_times(), vec![4.0, 10.0]);
    }

    #[test]
    fn separation_at_follower_entry() {
        let spec = reference();
        for gap in [1.0, 5.0, 13.3, 30.0] {
            let pair = PairBounds::new(&spec, 0.0, gap).unwrap();
            let s = separation_at(&pair.leader_lower, &pair.follower_upper, gap).unwrap();
            assert_eq!(s, pair.leader_lower.eval(gap).unwrap());
        }
    }

    #[test]
    fn published_gap_is_safe_for_300m() {
        let spec = reference();
        let pair = PairBounds::new(&spec, 0.0, 13.3).unwrap();
        assert!(pair.min_separation().unwrap().min_sep_m >= 300.0);
    }

    #[test]
    fn solved_gap_is_tight() {
        let spec = reference();
        let sol = solve_min_gap(&spec, 300.0).unwrap();
        assert!(!sol.feasible_trivial);
        assert!(GapSolver::is_feasible(&spec, sol.gap_s, 300.0).unwrap());
        assert!(!GapSolver::is_feasible(&spec, sol.gap_s - 2e-6, 300.0).unwrap());
        assert!(sol.min_certificate_separation().unwrap() >= 300.0 - CERTIFICATE_TOLERANCE_M);
    }

    #[test]
    fn zero_safe_distance_still_needs_positive_gap() {
        let spec = reference();
        let sol = solve_min_gap(&spec, 0.0).unwrap();
        assert!(sol.gap_s > 0.0);
        // Grid scan at 1e-4 s: the first feasible grid point is within one step.
        let first = (0..=(spec.total_travel_time_s() * 1e4) as usize)
            .map(|k| k as f64 * 1e-4)
            .find(|&g| GapSolver::is_feasible(&spec, g, 0.0).unwrap())
            .unwrap();
        assert!(
            (first - sol.gap_s).abs() <= 1e-4 + 1e-6,
            "{first} vs {}",
            sol.gap_s
        );
    }

    #[test]
    fn identical_limits_need_no_gap_at_zero_distance() {
        let spec = CorridorSpec::build(vec![Section::new(100.0, 10.0, 10.0)], 0.0, None).unwrap();
        let sol = solve_min_gap(&spec, 0.0).unwrap();
        assert_eq!(sol.gap_s, 0.0);
        let sol = solve_min_gap(&spec, 50.0).unwrap();
        assert!((sol.gap_s - 5.0).abs() < 1e-6);
    }

    #[test]
    fn unreachable_distance_falls_back_to_trivial_gap() {
        let spec = reference();
        let sol = solve_min_gap(&spec, 5000.0).unwrap();
        assert!(sol.feasible_trivial);
        assert_eq!(sol.gap_s, spec.total_travel_time_s());
        assert!(sol.certificate.is_empty());
    }

    #[test]
    fn resolution_rounds_strictly_up() {
        let spec = CorridorSpec::build(vec![Section::new(100.0, 10.0, 10.0)], 0.0, None).unwrap();
        let solver = GapSolver::default().with_resolution(Some(0.1));
        // Continuous answer is 5.0 (to tolerance); reported gap is the next step up.
        let sol = solver.solve(&spec, 50.0).unwrap();
        assert!((sol.gap_s - 5.1).abs() < 1e-9);
        assert!((sol.continuous_gap_s - 5.0).abs() < 1e-6);
    }

    #[test]
    fn invalid_inputs() {
        let spec = reference();
        assert!(matches!(
            solve_min_gap(&spec, -1.0),
            Err(SolveError::InvalidSafeDistance(_))
        ));
        assert!(matches!(
            GapSolver::default().with_tolerance(0.0).solve(&spec, 1.0),
            Err(SolveError::InvalidTolerance(_))
        ));
        assert!(matches!(
            GapSolver::default()
                .with_resolution(Some(-0.1))
                .solve(&spec, 1.0),
            Err(SolveError::InvalidResolution(_))
        ));
        let sol = solve_min_gap(&spec, 300.0).unwrap();
        assert!(matches!(
            apply_eta_error_buffer(&spec, &sol, -0.5),
            Err(SolveError::InvalidEpsilon(_))
        ));
        assert!(PairBounds::new(&spec, 0.0, -1.0).is_err());
    }

    #[test]
    fn buffer_adds_twice_epsilon() {
        let spec = reference();
        let sol = solve_min_gap(&spec, 300.0).unwrap();
        let same = apply_eta_error_buffer(&spec, &sol, 0.0).unwrap();
        assert_eq!(same.gap_s, sol.gap_s);
        let wider = apply_eta_error_buffer(&spec, &sol, 0.5).unwrap();
        assert_eq!(wider.gap_s, sol.gap_s + 1.0);
        assert!(wider.min_certificate_separation().unwrap() >= 300.0);
    }

    #[test]
    fn gap_table_csv_columns() {
        let mut buf = Vec::new();
        write_gap_table(
            &[GapTableRow {
                safe_d_m: 300.0,
                gap_s: 13.3,
                continuous_gap_s: 13.25,
                trivial_bound_s: 42.0,
                solve_time_s: 0.5,
            }],
            &mut buf,
        )
        .unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "safe_d_m,gap_s,continuous_gap_s,trivial_bound_s,solve_time_s\n300.0,13.3,13.25,42.0,0.5\n"
        );
    }
}
