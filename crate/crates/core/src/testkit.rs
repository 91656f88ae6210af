//! Randomised corridors, admissible trajectories and a sampling oracle for
//! property tests. Compiled only with the `testkit` feature.
//!
//! Nothing here uses critical times: the oracle samples the bound separation
//! on a uniform grid and refines the best grid brackets numerically, so it can
//! check the finite critical-time reduction independently.

use rand::Rng;

use crate::bounds::TrajectoryBound;
use crate::corridor::{CorridorSpec, Section};

/// Random feasible corridor with `sections` sections, derived travel times.
/// Consecutive speed intervals always overlap; one section in eight has equal
/// limits.
pub fn random_corridor<R: Rng>(rng: &mut R, sections: usize, safe_d_m: f64) -> CorridorSpec {
    let mut out = Vec::with_capacity(sections);
    let mut prev: Option<(f64, f64)> = None;
    for _ in 0..sections {
        let (v_min, v_max) = match prev {
            None => {
                let lo = rng.gen_range(5.0..80.0);
                (lo, lo + rng.gen_range(0.0..40.0))
            }
            Some((a, b)) => {
                // Share a point with the previous interval.
                let p = if b > a { rng.gen_range(a..=b) } else { a };
                let lo = rng.gen_range((p - 30.0).max(1.0)..=p);
                (lo, p + rng.gen_range(0.0..30.0))
            }
        };
        let (v_min, v_max) = if rng.gen_ratio(1, 8) {
            let p = if v_max > v_min {
                rng.gen_range(v_min..=v_max)
            } else {
                v_min
            };
            // Equal limits must still overlap the previous interval.
            match prev {
                Some((a, b)) => {
                    let q = p.clamp(a, b);
                    (q, q)
                }
                None => (p, p),
            }
        } else {
            (v_min, v_max)
        };
        let length = rng.gen_range(50.0..1500.0);
        out.push(Section::new(length, v_min, v_max));
        prev = Some((v_min, v_max));
    }
    CorridorSpec::build(out, safe_d_m, None).expect("generator yields feasible corridors")
}

/// Continuous piecewise-linear trajectory given by its breakpoints.
#[derive(Debug, Clone)]
pub struct SampledTrajectory {
    pub times: Vec<f64>,
    pub positions: Vec<f64>,
}

impl SampledTrajectory {
    pub fn start(&self) -> f64 {
        self.times[0]
    }

    pub fn end(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// Linear interpolation; clamps outside the domain.
    pub fn eval(&self, t: f64) -> f64 {
        if t <= self.times[0] {
            return self.positions[0];
        }
        let n = self.times.len();
        if t >= self.times[n - 1] {
            return self.positions[n - 1];
        }
        let k = self.times.partition_point(|&x| x <= t);
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        let (x0, x1) = (self.positions[k - 1], self.positions[k]);
        if t1 == t0 {
            return x1;
        }
        x0 + (x1 - x0) * (t - t0) / (t1 - t0)
    }
}

/// Random admissible motion entering at `entry_time_s`: each section flown in
/// exactly `τ_j` with piecewise-constant speeds inside its limits. Speeds are
/// drawn freely, then pulled towards `v_min` or `v_max` so the distance covered
/// matches the section length. One draw in five is a bang-bang profile.
pub fn random_admissible_trajectory<R: Rng>(
    rng: &mut R,
    spec: &CorridorSpec,
    entry_time_s: f64,
) -> SampledTrajectory {
    let mut times = vec![entry_time_s];
    let mut positions = vec![0.0];
    let mut t = entry_time_s;
    for (j, s) in spec.sections().iter().enumerate() {
        let tau = spec.travel_time(j);
        let l = s.length_m;
        let start_x = spec.cum_lengths_m()[j];

        let pieces = rng.gen_range(1..=5);
        let mut durations: Vec<f64> = (0..pieces).map(|_| rng.gen_range(0.05..1.0)).collect();
        let total: f64 = durations.iter().sum();
        durations.iter_mut().for_each(|d| *d *= tau / total);

        let bang = rng.gen_ratio(1, 5);
        let mut speeds: Vec<f64> = (0..pieces)
            .map(|_| {
                if s.v_max <= s.v_min {
                    s.v_min
                } else if bang {
                    if rng.gen_bool(0.5) {
                        s.v_min
                    } else {
                        s.v_max
                    }
                } else {
                    rng.gen_range(s.v_min..=s.v_max)
                }
            })
            .collect();

        let dist: f64 = speeds.iter().zip(&durations).map(|(v, d)| v * d).sum();
        let lo_dist = s.v_min * tau;
        let hi_dist = s.v_max * tau;
        if dist > l && dist > lo_dist {
            let alpha = (l - lo_dist) / (dist - lo_dist);
            speeds
                .iter_mut()
                .for_each(|v| *v = s.v_min + alpha * (*v - s.v_min));
        } else if dist < l && dist < hi_dist {
            let beta = (hi_dist - l) / (hi_dist - dist);
            speeds
                .iter_mut()
                .for_each(|v| *v = s.v_max - beta * (s.v_max - *v));
        }

        let mut x = start_x;
        for (k, (v, d)) in speeds.iter().zip(&durations).enumerate() {
            t += d;
            x += v * d;
            if k + 1 == pieces {
                // Close the section exactly on the waypoint schedule.
                t = spec.schedule_for(entry_time_s).cwp_times_s[j + 1];
                x = spec.cum_lengths_m()[j + 1];
            }
            times.push(t);
            positions.push(x);
        }
    }
    SampledTrajectory { times, positions }
}

/// Largest |slope| of the bound separation, used to size refinement brackets.
fn separation_lipschitz(spec: &CorridorSpec) -> f64 {
    2.0 * spec.sections().iter().map(|s| s.v_max).fold(0.0, f64::max)
}

fn golden_min(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut best = f(a).min(f(b));
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if b - a < 1e-13 {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d);
        }
        best = best.min(fc).min(fd);
    }
    best
}

/// An affine bracket has its minimum at an endpoint, which is already sampled.
fn looks_affine(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fb: f64) -> bool {
    [0.25, 0.5, 0.75].iter().all(|&w| {
        let t = a + w * (b - a);
        (f(t) - (fa + w * (fb - fa))).abs() <= 1e-9
    })
}

/// Result of sampling the separation `leader_lower − follower_upper`.
#[derive(Debug, Clone, Copy)]
pub struct DenseMinimum {
    /// Minimum over the raw uniform grid (endpoints included).
    pub grid_min: f64,
    /// Grid minimum refined by golden-section search on every bracket that
    /// could hold the true minimum.
    pub refined_min: f64,
}

/// Uniform `samples`-point sampling of the bound separation over the pair
/// window. `None` for an empty window.
pub fn dense_min_separation(
    spec: &CorridorSpec,
    leader_lower: &TrajectoryBound,
    follower_upper: &TrajectoryBound,
    samples: usize,
) -> Option<DenseMinimum> {
    let start = follower_upper.start_time_s();
    let end = leader_lower.end_time_s();
    if start >= end {
        return None;
    }
    let sep = |t: f64| {
        let t = t.clamp(start, end);
        leader_lower.eval(t).unwrap() - follower_upper.eval(t).unwrap()
    };
    let n = samples.max(2);
    let h = (end - start) / (n - 1) as f64;
    let grid: Vec<f64> = (0..n)
        .map(|k| {
            if k + 1 == n {
                end
            } else {
                start + k as f64 * h
            }
        })
        .collect();
    let values: Vec<f64> = grid.iter().map(|&t| sep(t)).collect();
    let grid_min = values.iter().copied().fold(f64::INFINITY, f64::min);

    let slack = separation_lipschitz(spec) * h;
    let mut refined_min = grid_min;
    for k in 0..n - 1 {
        if values[k].min(values[k + 1]) <= grid_min + slack
            && !looks_affine(&sep, grid[k], grid[k + 1], values[k], values[k + 1])
        {
            refined_min = refined_min.min(golden_min(&sep, grid[k], grid[k + 1]));
        }
    }
    Some(DenseMinimum {
        grid_min,
        refined_min,
    })
}
