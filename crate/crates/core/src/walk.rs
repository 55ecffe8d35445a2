//! Excited random walk simulation and path statistics: first-return
//! excursions with their up-crossing counts, and level-hitting times with
//! their down-crossing counts.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::Error;
use crate::field::TrialField;
use crate::Result;

/// A stopping time observed within a finite horizon, or censored at it.
/// Censored values are never extrapolated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EventTime {
    At(u64),
    Censored,
}

impl EventTime {
    pub fn finite(self) -> Option<u64> {
        match self {
            EventTime::At(t) => Some(t),
            EventTime::Censored => None,
        }
    }

    pub fn is_censored(self) -> bool {
        matches!(self, EventTime::Censored)
    }
}

/// A realized walk path `X_0, X_1, ..., X_H` with unit steps from the
/// origin.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkTrace {
    positions: Vec<i64>,
}

impl WalkTrace {
    /// Wraps an explicit path, validating the nearest-neighbor structure.
    pub fn from_positions(positions: Vec<i64>) -> Result<Self> {
        if positions.first() != Some(&0) {
            return Err(Error::Precondition("walk paths start at the origin".into()));
        }
        for w in positions.windows(2) {
            if (w[1] - w[0]).abs() != 1 {
                return Err(Error::Precondition(format!(
                    "non-unit step {} -> {}",
                    w[0], w[1]
                )));
            }
        }
        Ok(Self { positions })
    }

    pub fn positions(&self) -> &[i64] {
        &self.positions
    }

    /// Number of steps taken.
    pub fn horizon(&self) -> u64 {
        (self.positions.len() - 1) as u64
    }

    pub fn final_position(&self) -> i64 {
        *self.positions.last().expect("nonempty by construction")
    }

    /// Visit counts per site over the whole trace (arrival at time 0
    /// counts as the first visit to the origin).
    pub fn visit_counts(&self) -> BTreeMap<i64, u64> {
        let mut counts = BTreeMap::new();
        for &x in &self.positions {
            *counts.entry(x).or_insert(0) += 1;
        }
        counts
    }
}

/// Simulates `horizon` steps of the excited random walk driven by `field`.
///
/// On the `j`-th visit to a site the walk steps right exactly when the
/// `j`-th trial of that site succeeds; the field's consumption counters
/// are reset first so they realize the visit counts.
pub fn run_walk(field: &mut TrialField, horizon: u64) -> WalkTrace {
    field.reset_consumption();
    let mut positions = Vec::with_capacity(horizon as usize + 1);
    let mut x = 0i64;
    positions.push(x);
    for _ in 0..horizon {
        x += if field.next_trial(x) { 1 } else { -1 };
        positions.push(x);
    }
    WalkTrace { positions }
}

/// Runs the walk until it first hits `level > 0`, returning the trace up
/// to and including the hit. Errors if `cap` steps pass without a hit.
pub fn run_walk_to_level(field: &mut TrialField, level: i64, cap: u64) -> Result<WalkTrace> {
    assert!(level >= 1, "level must be positive");
    field.reset_consumption();
    let mut positions = vec![0i64];
    let mut x = 0i64;
    for _ in 0..cap {
        x += if field.next_trial(x) { 1 } else { -1 };
        positions.push(x);
        if x == level {
            return Ok(WalkTrace { positions });
        }
    }
    Err(Error::WalkCapExceeded {
        cap,
        event: format!("first hit of level {level}"),
    })
}

/// Final position after `steps` steps, without storing the trace.
pub fn walk_final_position(field: &mut TrialField, steps: u64) -> i64 {
    field.reset_consumption();
    let mut x = 0i64;
    for _ in 0..steps {
        x += if field.next_trial(x) { 1 } else { -1 };
    }
    x
}

/// Whether the walk stays strictly positive for all `1 <= n <= horizon`
/// (exits early once the origin is revisited).
pub fn walk_stays_positive(field: &mut TrialField, horizon: u64) -> bool {
    field.reset_consumption();
    let mut x = 0i64;
    for _ in 0..horizon {
        x += if field.next_trial(x) { 1 } else { -1 };
        if x <= 0 {
            return false;
        }
    }
    true
}

/// First-return excursion statistics of a walk.
#[derive(Debug, Clone, PartialEq)]
pub struct ExcursionStats {
    /// The first step of the walk (+1 or -1).
    pub first_step: i64,
    /// First return time to the origin, censored at the horizon.
    pub first_return: EventTime,
    /// `up_crossings[i]` counts steps `i -> i+1` before the first return,
    /// for sites `i >= 0`.
    pub up_crossings: Vec<u64>,
}

impl ExcursionStats {
    /// Up-crossing count at site `i >= 0`.
    pub fn u(&self, site: usize) -> u64 {
        self.up_crossings.get(site).copied().unwrap_or(0)
    }

    pub fn total_up_crossings(&self) -> u64 {
        self.up_crossings.iter().sum()
    }
}

/// Extracts excursion statistics from a recorded trace.
pub fn excursion_stats(trace: &WalkTrace) -> ExcursionStats {
    let positions = trace.positions();
    assert!(positions.len() >= 2, "trace must contain at least one step");
    let first_return = positions[1..]
        .iter()
        .position(|&x| x == 0)
        .map(|idx| EventTime::At(idx as u64 + 1))
        .unwrap_or(EventTime::Censored);
    let end = first_return
        .finite()
        .unwrap_or(trace.horizon()) as usize;
    let mut up_crossings = Vec::new();
    for n in 0..end {
        let x = positions[n];
        if x >= 0 && positions[n + 1] == x + 1 {
            let i = x as usize;
            if up_crossings.len() <= i {
                up_crossings.resize(i + 1, 0);
            }
            up_crossings[i] += 1;
        }
    }
    let stats = ExcursionStats {
        first_step: positions[1],
        first_return,
        up_crossings,
    };
    debug_assert!(excursion_identity_holds(&stats));
    stats
}

/// Single-pass excursion statistics straight off a field, without storing
/// the trace; also reports the rightmost site reached before the return.
pub fn excursion_scan(field: &mut TrialField, horizon: u64) -> (ExcursionStats, i64) {
    field.reset_consumption();
    let mut x = 0i64;
    let mut max_site = 0i64;
    let mut first_step = 0i64;
    let mut first_return = EventTime::Censored;
    let mut up_crossings: Vec<u64> = Vec::new();
    for n in 0..horizon {
        let right = field.next_trial(x);
        if right && x >= 0 {
            let i = x as usize;
            if up_crossings.len() <= i {
                up_crossings.resize(i + 1, 0);
            }
            up_crossings[i] += 1;
        }
        x += if right { 1 } else { -1 };
        if n == 0 {
            first_step = x;
        }
        max_site = max_site.max(x);
        if x == 0 {
            first_return = EventTime::At(n + 1);
            break;
        }
    }
    let stats = ExcursionStats {
        first_step,
        first_return,
        up_crossings,
    };
    debug_assert!(excursion_identity_holds(&stats));
    (stats, max_site)
}

/// The time identity `T_0^+ = 2 sum_i U_i` on finite right excursions, and
/// its degenerate left-excursion form.
fn excursion_identity_holds(stats: &ExcursionStats) -> bool {
    match (stats.first_step, stats.first_return.finite()) {
        (-1, _) => stats.total_up_crossings() == 0,
        (1, Some(t)) => 2 * stats.total_up_crossings() == t,
        _ => true,
    }
}

/// Hitting statistics of a positive level.
#[derive(Debug, Clone, PartialEq)]
pub struct HittingStats {
    pub level: i64,
    /// Steps until the level is first hit, censored at the horizon.
    pub hit_time: EventTime,
    /// Steps launched from nonnegative sites before the hit.
    pub nonneg_time: u64,
    down_crossings: BTreeMap<i64, u64>,
}

impl HittingStats {
    /// Down-crossing count `D_x`: steps `x -> x-1` before the hit.
    pub fn d(&self, site: i64) -> u64 {
        self.down_crossings.get(&site).copied().unwrap_or(0)
    }

    /// Down-crossing counts in the order `D_level, D_{level-1}, ..., D_0`.
    pub fn reversed_down_crossings(&self) -> Vec<u64> {
        (0..=self.level).rev().map(|x| self.d(x)).collect()
    }

    pub fn total_down_crossings(&self) -> u64 {
        self.down_crossings.values().sum()
    }
}

/// Extracts hitting statistics for `level >= 1` from a trace.
///
/// When the hit is observed, the time identities
/// `T_n = n + 2 sum_{x <= n} D_x` and
/// `T~_n = n + 2 sum_{x=1..n} D_x + D_0` hold on every path.
pub fn hitting_stats(trace: &WalkTrace, level: i64) -> HittingStats {
    assert!(level >= 1, "level must be positive");
    let positions = trace.positions();
    let hit_time = positions
        .iter()
        .position(|&x| x == level)
        .map(|idx| EventTime::At(idx as u64))
        .unwrap_or(EventTime::Censored);
    let end = hit_time.finite().unwrap_or(trace.horizon()) as usize;
    let mut down_crossings: BTreeMap<i64, u64> = BTreeMap::new();
    let mut nonneg_time = 0u64;
    for n in 0..end {
        let x = positions[n];
        if x >= 0 {
            nonneg_time += 1;
        }
        if positions[n + 1] == x - 1 && x <= level {
            *down_crossings.entry(x).or_insert(0) += 1;
        }
    }
    let stats = HittingStats {
        level,
        hit_time,
        nonneg_time,
        down_crossings,
    };
    if let Some(t) = stats.hit_time.finite() {
        debug_assert_eq!(t, level as u64 + 2 * stats.total_down_crossings());
        let above: u64 = (1..=level).map(|x| stats.d(x)).sum();
        debug_assert_eq!(stats.nonneg_time, level as u64 + 2 * above + stats.d(0));
    }
    stats
}
