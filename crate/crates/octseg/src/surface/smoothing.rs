use serde::{Deserialize, Serialize};

use super::weights::WeightMatrix;
use crate::error::{Error, Result};
use crate::map::{DepthMap, Map2};

/// Iteration count and threshold schedule for [`smooth_depth_map`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothingSchedule {
    pub total_iterations: usize,
    pub dynamic_iterations: usize,
    pub divisor: f64,
    pub final_threshold: f64,
}

impl Default for SmoothingSchedule {
    fn default() -> Self {
        Self {
            total_iterations: 25,
            dynamic_iterations: 20,
            divisor: 2000.0,
            final_threshold: 1.0,
        }
    }
}

impl SmoothingSchedule {
    pub fn validate(&self) -> Result<()> {
        if self.total_iterations == 0 {
            return Err(Error::Config("smoothing needs at least one iteration".into()));
        }
        if self.dynamic_iterations > self.total_iterations {
            return Err(Error::Config(format!(
                "{} dynamic iterations exceed the total of {}",
                self.dynamic_iterations, self.total_iterations
            )));
        }
        if !(self.divisor > 0.0) || !(self.final_threshold > 0.0) {
            return Err(Error::Config(
                "threshold divisor and final threshold must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Threshold for iteration `i` (1-based): `count * i / divisor` during the
/// dynamic phase, `final_threshold` afterwards.
pub fn dynamic_threshold(count: usize, i: usize, sched: &SmoothingSchedule) -> f64 {
    if i <= sched.dynamic_iterations {
        count as f64 * i as f64 / sched.divisor
    } else {
        sched.final_threshold
    }
}

/// Weighted mean of `a(neighbour) - a(x, y)` over the in-bounds taps, or
/// `None` when no tap is in bounds. Working with differences keeps the
/// result exactly 0 on constant maps.
fn neighbour_offset(a: &DepthMap, taps: &[(isize, isize, f64)], x: usize, y: usize) -> Option<f64> {
    let (w, f) = (a.width() as isize, a.frames() as isize);
    let c = a.get(x, y);
    let mut sum = 0.0;
    let mut wsum = 0.0;
    for &(dx, dy, wt) in taps {
        let (xx, yy) = (x as isize + dx, y as isize + dy);
        if xx >= 0 && xx < w && yy >= 0 && yy < f {
            sum += wt * (a.get(xx as usize, yy as usize) - c);
            wsum += wt;
        }
    }
    (wsum != 0.0).then(|| sum / wsum)
}

/// `|W1-weighted neighbour average - a(x, y)|`.
pub fn error_distance(a: &DepthMap, w1: &WeightMatrix, at: (usize, usize)) -> f64 {
    let taps = w1.taps();
    let (x, y) = at;
    neighbour_offset(a, &taps, x, y).map_or(0.0, f64::abs)
}

/// Error distance of every entry.
pub fn error_distances(a: &DepthMap, w1: &WeightMatrix) -> Map2<f64> {
    let taps = w1.taps();
    Map2::from_fn(a.width(), a.frames(), |x, y| {
        neighbour_offset(a, &taps, x, y).map_or(0.0, f64::abs)
    })
}

/// Weight kernels and schedule for a two-phase smoothing run. The dynamic
/// phase uses `dynamic_w1`, the fixed-threshold phase `final_w1`; the
/// correcting kernels are derived by zeroing the centre.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothingConfig {
    pub schedule: SmoothingSchedule,
    pub dynamic_w1: WeightMatrix,
    pub final_w1: WeightMatrix,
}

impl SmoothingConfig {
    pub fn rpe() -> Self {
        Self {
            schedule: SmoothingSchedule::default(),
            dynamic_w1: WeightMatrix::rpe_7x7(),
            final_w1: WeightMatrix::rpe_7x7(),
        }
    }

    pub fn ilm() -> Self {
        Self {
            schedule: SmoothingSchedule::default(),
            dynamic_w1: WeightMatrix::ilm_5x5(),
            final_w1: WeightMatrix::ilm_3x3(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.schedule.validate()?;
        self.dynamic_w1.validate()?;
        self.final_w1.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmoothingOutcome {
    pub map: DepthMap,
    /// Index of the last iteration run (1-based, at most `N`).
    pub iterations_used: usize,
    /// Threshold of the last iteration run.
    pub last_threshold: f64,
    /// Total number of entry replacements over all iterations.
    pub corrections: usize,
    /// True when the run stopped before `N` with no error points left.
    pub converged: bool,
}

/// Iteratively replace error points by their correcting values.
///
/// Each iteration marks the entries whose error distance (under `w1`)
/// exceeds the iteration threshold and replaces all of them at once with
/// their `w2` correcting values, both computed from the map as it stood at
/// the start of the iteration.
///
/// An iteration that finds no error points leaves the map untouched. The run
/// stops at such an iteration once no later iteration of the schedule could
/// find one either, so the fixed-threshold tail still runs after a dynamic
/// phase whose thresholds have grown past every error distance.
pub fn smooth_depth_map(
    a: &DepthMap,
    w1: &WeightMatrix,
    w2: &WeightMatrix,
    sched: &SmoothingSchedule,
) -> SmoothingOutcome {
    smooth_phased(a, sched, |_| (w1, w2))
}

/// Two-phase smoothing with the kernels of `cfg`.
pub fn smooth_with(a: &DepthMap, cfg: &SmoothingConfig) -> SmoothingOutcome {
    let dyn2 = cfg.dynamic_w1.correcting();
    let fin2 = cfg.final_w1.correcting();
    let sched = cfg.schedule;
    smooth_phased(a, &sched, |i| {
        if i <= sched.dynamic_iterations {
            (&cfg.dynamic_w1, &dyn2)
        } else {
            (&cfg.final_w1, &fin2)
        }
    })
}

fn smooth_phased<'a>(
    a: &DepthMap,
    sched: &SmoothingSchedule,
    kernels: impl Fn(usize) -> (&'a WeightMatrix, &'a WeightMatrix),
) -> SmoothingOutcome {
    let n = sched.total_iterations.max(1);
    let count = a.len();
    let mut map = a.clone();
    let mut corrections = 0;
    let mut last_threshold = dynamic_threshold(count, 1, sched);
    for i in 1..=n {
        let (w1, w2) = kernels(i);
        let t = dynamic_threshold(count, i, sched);
        last_threshold = t;
        let ed = error_distances(&map, w1);
        let errors: Vec<usize> = ed
            .as_slice()
            .iter()
            .enumerate()
            .filter(|(_, &e)| e > t)
            .map(|(k, _)| k)
            .collect();
        if errors.is_empty() {
            if !later_iterations_can_change(&map, i, n, count, sched, &kernels) {
                return SmoothingOutcome {
                    map,
                    iterations_used: i,
                    last_threshold,
                    corrections,
                    converged: true,
                };
            }
            continue;
        }
        let taps = w2.taps();
        let w = map.width();
        let updates: Vec<(usize, f64)> = errors
            .iter()
            .filter_map(|&k| neighbour_offset(&map, &taps, k % w, k / w).map(|d| (k, map.as_slice()[k] + d)))
            .collect();
        corrections += updates.len();
        let data = map.as_mut_slice();
        for (k, v) in updates {
            data[k] = v;
        }
    }
    SmoothingOutcome {
        map,
        iterations_used: n,
        last_threshold,
        corrections,
        converged: false,
    }
}

/// Whether any iteration after `i` would find an error point in `map`.
fn later_iterations_can_change<'a>(
    map: &DepthMap,
    i: usize,
    n: usize,
    count: usize,
    sched: &SmoothingSchedule,
    kernels: &impl Fn(usize) -> (&'a WeightMatrix, &'a WeightMatrix),
) -> bool {
    // Group the remaining iterations by kernel and keep the smallest threshold.
    let mut groups: Vec<(&WeightMatrix, f64)> = Vec::new();
    for j in i + 1..=n {
        let (w1, _) = kernels(j);
        let t = dynamic_threshold(count, j, sched);
        match groups.iter_mut().find(|(m, _)| *m == w1) {
            Some(g) => g.1 = g.1.min(t),
            None => groups.push((w1, t)),
        }
    }
    groups.into_iter().any(|(w1, t)| {
        error_distances(map, w1)
            .as_slice()
            .iter()
            .any(|&e| e > t)
    })
}
