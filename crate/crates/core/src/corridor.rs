//! Corridor geometry: sections, speed limits, common section travel times and
//! the cumulative waypoint schedule shared by every other module.
//!
//! A corridor is a linear chain of sections. Section `j` runs from waypoint
//! `j` to waypoint `j + 1`; waypoint 0 sits at position 0. All vehicles spend
//! the same travel time `τ_j` in section `j`, so a vehicle's whole waypoint
//! schedule follows from its entry time.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Which section invariant a [`Section`] violated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SectionViolation {
    NonFinite,
    NonPositiveLength,
    NonPositiveSpeed,
    InvertedLimits,
}

impl std::fmt::Display for SectionViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let msg = match self {
            Self::NonFinite => "all fields must be finite",
            Self::NonPositiveLength => "length_m must be > 0",
            Self::NonPositiveSpeed => "v_min must be > 0",
            Self::InvertedLimits => "v_min must not exceed v_max",
        };
        f.write_str(msg)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CorridorError {
    #[error("corridor has no sections")]
    Empty,
    #[error("section {index}: {violation}")]
    InvalidSection {
        index: usize,
        violation: SectionViolation,
    },
    #[error(
        "sections {index} and {next}: speed limits [{lo_min}, {lo_max}] and [{hi_min}, {hi_max}] do not overlap",
        next = index + 1
    )]
    DisjointLimits {
        index: usize,
        lo_min: f64,
        lo_max: f64,
        hi_min: f64,
        hi_max: f64,
    },
    #[error(
        "section {index}: length {length_m} m is not reachable in {travel_time_s} s \
         (reachable range [{reachable_min}, {reachable_max}] m)"
    )]
    Infeasible {
        index: usize,
        length_m: f64,
        travel_time_s: f64,
        reachable_min: f64,
        reachable_max: f64,
    },
    #[error("expected {expected} travel times, got {got}")]
    TravelTimeCount { expected: usize, got: usize },
    #[error("section {index}: travel time {value} s must be finite and > 0")]
    NonPositiveTravelTime { index: usize, value: f64 },
    #[error("safe distance {0} m must be finite and >= 0")]
    InvalidSafeDistance(f64),
}

impl CorridorError {
    /// True for the geometric infeasibility errors (limits that cannot be
    /// chained, or a section that cannot be flown in its travel time), as
    /// opposed to malformed input.
    pub fn is_infeasible(&self) -> bool {
        matches!(self, Self::DisjointLimits { .. } | Self::Infeasible { .. })
    }
}

/// One corridor section between two consecutive waypoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Section {
    pub length_m: f64,
    pub v_min: f64,
    pub v_max: f64,
}

impl Section {
    pub fn new(length_m: f64, v_min: f64, v_max: f64) -> Self {
        Self {
            length_m,
            v_min,
            v_max,
        }
    }

    pub fn check(&self) -> Result<(), SectionViolation> {
        if !(self.length_m.is_finite() && self.v_min.is_finite() && self.v_max.is_finite()) {
            return Err(SectionViolation::NonFinite);
        }
        if self.length_m <= 0.0 {
            return Err(SectionViolation::NonPositiveLength);
        }
        if self.v_min <= 0.0 {
            return Err(SectionViolation::NonPositiveSpeed);
        }
        if self.v_min > self.v_max {
            return Err(SectionViolation::InvertedLimits);
        }
        Ok(())
    }

    /// Midpoint of the speed limits.
    pub fn average_speed(&self) -> f64 {
        0.5 * (self.v_min + self.v_max)
    }

    pub fn clamp_speed(&self, v: f64) -> f64 {
        v.clamp(self.v_min, self.v_max)
    }
}

fn check_sections(sections: &[Section]) -> Result<(), CorridorError> {
    if sections.is_empty() {
        return Err(CorridorError::Empty);
    }
    for (index, s) in sections.iter().enumerate() {
        s.check()
            .map_err(|violation| CorridorError::InvalidSection { index, violation })?;
    }
    Ok(())
}

/// Common section travel times `τ_j = l_j / v_avg,j` with `v_avg,j` the midpoint
/// of the section's speed limits.
pub fn derive_travel_times(sections: &[Section]) -> Result<Vec<f64>, CorridorError> {
    check_sections(sections)?;
    Ok(sections
        .iter()
        .map(|s| 2.0 * s.length_m / (s.v_min + s.v_max))
        .collect())
}

/// Rounds each value half away from zero to `decimals` places. Used when a
/// scenario wants travel times at display precision rather than full precision.
pub fn round_to_decimals(values: &[f64], decimals: u32) -> Vec<f64> {
    let scale = 10f64.powi(decimals as i32);
    values.iter().map(|v| (v * scale).round() / scale).collect()
}

/// Validated corridor definition. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct CorridorSpec {
    sections: Vec<Section>,
    travel_times_s: Vec<f64>,
    cum_lengths_m: Vec<f64>,
    safe_d_m: f64,
}

impl CorridorSpec {
    /// Validates the sections and assembles the corridor. When `travel_times`
    /// is `None` they are derived from the speed-limit midpoints.
    pub fn build(
        sections: Vec<Section>,
        safe_d_m: f64,
        travel_times: Option<Vec<f64>>,
    ) -> Result<Self, CorridorError> {
        check_sections(&sections)?;
        if !safe_d_m.is_finite() || safe_d_m < 0.0 {
            return Err(CorridorError::InvalidSafeDistance(safe_d_m));
        }
        for (index, pair) in sections.windows(2).enumerate() {
            let (a, b) = (pair[0], pair[1]);
            if a.v_max.min(b.v_max) < a.v_min.max(b.v_min) {
                return Err(CorridorError::DisjointLimits {
                    index,
                    lo_min: a.v_min,
                    lo_max: a.v_max,
                    hi_min: b.v_min,
                    hi_max: b.v_max,
                });
            }
        }

        let travel_times_s = match travel_times {
            Some(t) => {
                if t.len() != sections.len() {
                    return Err(CorridorError::TravelTimeCount {
                        expected: sections.len(),
                        got: t.len(),
                    });
                }
                if let Some((index, &value)) = t
                    .iter()
                    .enumerate()
                    .find(|(_, v)| !v.is_finite() || **v <= 0.0)
                {
                    return Err(CorridorError::NonPositiveTravelTime { index, value });
                }
                t
            }
            None => derive_travel_times(&sections)?,
        };

        for (index, (s, &tau)) in sections.iter().zip(&travel_times_s).enumerate() {
            let reachable_min = s.v_min * tau;
            let reachable_max = s.v_max * tau;
            // Relative slack so derived times (l = v_avg * τ exactly in reals)
            // never trip on the last ulp.
            let slack = 1e-12 * s.length_m;
            if s.length_m < reachable_min - slack || s.length_m > reachable_max + slack {
                return Err(CorridorError::Infeasible {
                    index,
                    length_m: s.length_m,
                    travel_time_s: tau,
                    reachable_min,
                    reachable_max,
                });
            }
        }

        let mut cum_lengths_m = Vec::with_capacity(sections.len() + 1);
        let mut acc = 0.0;
        cum_lengths_m.push(acc);
        for s in &sections {
            acc += s.length_m;
            cum_lengths_m.push(acc);
        }

        Ok(Self {
            sections,
            travel_times_s,
            cum_lengths_m,
            safe_d_m,
        })
    }

    pub fn sections(&self) -> &[Section] {
        &self.sections
    }

    pub fn section(&self, j: usize) -> &Section {
        &self.sections[j]
    }

    pub fn num_sections(&self) -> usize {
        self.sections.len()
    }

    pub fn travel_times_s(&self) -> &[f64] {
        &self.travel_times_s
    }

    pub fn travel_time(&self, j: usize) -> f64 {
        self.travel_times_s[j]
    }

    /// Waypoint positions `L_0 = 0, ..., L_m`.
    pub fn cum_lengths_m(&self) -> &[f64] {
        &self.cum_lengths_m
    }

    pub fn total_length_m(&self) -> f64 {
        self.cum_lengths_m[self.sections.len()]
    }

    /// Sum of all section travel times: the gap beyond which two vehicles are
    /// never in the corridor together.
    pub fn total_travel_time_s(&self) -> f64 {
        self.travel_times_s.iter().sum()
    }

    pub fn safe_d_m(&self) -> f64 {
        self.safe_d_m
    }

    /// Same geometry with a different separation distance.
    pub fn with_safe_d(&self, safe_d_m: f64) -> Result<Self, CorridorError> {
        if !safe_d_m.is_finite() || safe_d_m < 0.0 {
            return Err(CorridorError::InvalidSafeDistance(safe_d_m));
        }
        Ok(Self {
            safe_d_m,
            ..self.clone()
        })
    }

    /// Section containing `position_m` using half-open intervals `[L_j, L_{j+1})`.
    /// `None` once the position is at or past the final waypoint, or before the first.
    pub fn section_at(&self, position_m: f64) -> Option<usize> {
        if position_m < 0.0 || position_m >= self.total_length_m() {
            return None;
        }
        // cum_lengths is sorted; the section is the last waypoint <= position.
        let idx = self.cum_lengths_m.partition_point(|&l| l <= position_m);
        Some(idx - 1)
    }

    /// Waypoint schedule for a vehicle entering at `entry_time_s`.
    pub fn schedule_for(&self, entry_time_s: f64) -> Schedule {
        let mut cwp_times_s = Vec::with_capacity(self.sections.len() + 1);
        let mut t = entry_time_s;
        cwp_times_s.push(t);
        for tau in &self.travel_times_s {
            t += tau;
            cwp_times_s.push(t);
        }
        Schedule {
            entry_time_s,
            cwp_times_s,
        }
    }
}

/// Scheduled waypoint arrival times `T_0..T_m` for one vehicle.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub entry_time_s: f64,
    pub cwp_times_s: Vec<f64>,
}

impl Schedule {
    pub fn exit_time_s(&self) -> f64 {
        *self
            .cwp_times_s
            .last()
            .expect("schedule has at least one waypoint")
    }
}
