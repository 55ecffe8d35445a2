//! The backward branching process: failures before the (k+1)-th success
//! with one immigrant per generation. Its stationary law exists exactly
//! when the walk is transient to the right, and the limiting speed of the
//! walk is `1 / (1 + 2 E[Z])` under the stationary mean.

use serde::Serialize;

use crate::dist::{self, CountDistribution};
use crate::env::{CookieEnvironment, Regime, SpeedSign};
use crate::error::Error;
use crate::field::{derive_seed, TrialField};
use crate::stats::{self, ChiSquare};
use crate::walk;
use crate::Result;

/// A realized backward trajectory `Z_0 = 0, Z_1, ..., Z_g`.
#[derive(Debug, Clone, PartialEq)]
pub struct BackwardTrajectory {
    values: Vec<u64>,
}

impl BackwardTrajectory {
    pub fn values(&self) -> &[u64] {
        &self.values
    }
}

/// Failures before the `k`-th success in the trial sequence of `site`.
pub fn failures_before_kth_success(field: &TrialField, site: i64, k: u64) -> Result<u64> {
    field.site_scan(site).failures_before_kth_success(k)
}

/// Runs the backward chain on sites `1, 2, ...`: each generation adds one
/// immigrant before reproduction.
pub fn run_backward(field: &TrialField, generations: u64) -> Result<BackwardTrajectory> {
    assert!(generations >= 1);
    let mut values = Vec::with_capacity(generations as usize + 1);
    let mut current = 0u64;
    values.push(current);
    for generation in 1..=generations {
        current = field
            .site_scan(generation as i64)
            .failures_before_kth_success(current + 1)?;
        values.push(current);
    }
    Ok(BackwardTrajectory { values })
}

/// Exact one-step law of the backward chain out of state `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelRow {
    pub from_state: u64,
    pub law: CountDistribution,
}

/// Law of `Z' = F(k+1)` with masses for `0..=m_max` and the exact tail.
pub fn exact_kernel_row(env: &CookieEnvironment, k: u64, m_max: usize) -> KernelRow {
    KernelRow {
        from_state: k,
        law: dist::backward_kernel_law(env, k, m_max),
    }
}

/// Truncated stationary distribution of the backward chain.
#[derive(Debug, Clone, Serialize)]
pub struct StationaryDistribution {
    /// Truncation level `N`; masses cover states `0..=N`.
    pub truncation: usize,
    pub masses: Vec<f64>,
    /// Mass sitting in the top `1/16` window of the truncated support; a
    /// diagnostic for the truncation quality.
    pub tail_window_mass: f64,
    /// Stationary mean `E[Z]`: the second-moment balance value, with the
    /// known `N^(1-delta)` truncation bias removed by extrapolation
    /// across the last doubling.
    pub mean: f64,
    /// Direct truncated mean `sum_m m pi(m)`, kept for diagnostics; its
    /// truncation bias decays too slowly to report.
    pub mean_direct: f64,
    /// Twice the change of the extrapolated mean across the final
    /// doubling; the series of changes contracts by better than 2x per
    /// doubling, so this dominates the remaining truncation error.
    pub error_estimate: f64,
    /// Max-norm stationarity residual on the truncated space.
    pub residual: f64,
}

/// Tunables of the stationary solve.
#[derive(Debug, Clone)]
pub struct StationaryConfig {
    /// Relative tolerance on the extrapolated mean across doublings.
    pub rel_tol: f64,
    pub n_start: usize,
    /// Truncation cap. Equilibrating one level costs on the order of
    /// `N^2.5` scalar operations, which bounds practical caps near 8192.
    pub n_cap: usize,
    /// Verified stationarity-residual target per level.
    pub residual_tol: f64,
    /// Sweep budget per truncation level (scales with `N`).
    pub sweeps_per_state: usize,
}

impl StationaryConfig {
    pub fn with_rel_tol(rel_tol: f64) -> Self {
        Self {
            rel_tol,
            n_start: 64,
            n_cap: 4096,
            residual_tol: 1e-12,
            sweeps_per_state: 8,
        }
    }
}

/// Solves for the stationary law of the backward chain.
///
/// The chain is positive recurrent for total drift above 1, but its
/// stationary mean is finite only for drift above 2; below that the
/// mean-stability criterion can never be met, so such inputs fail fast
/// with a non-convergence error.
pub fn stationary_distribution(
    env: &CookieEnvironment,
    rel_tol: f64,
) -> Result<StationaryDistribution> {
    stationary_distribution_with(env, &StationaryConfig::with_rel_tol(rel_tol))
}

pub fn stationary_distribution_with(
    env: &CookieEnvironment,
    config: &StationaryConfig,
) -> Result<StationaryDistribution> {
    let delta_exact = env.total_drift_exact();
    if delta_exact <= num_rational::BigRational::from_integer(1.into()) {
        return Err(Error::Precondition(format!(
            "stationary law needs total drift > 1, environment {env} has {}",
            env.total_drift()
        )));
    }
    if delta_exact <= num_rational::BigRational::from_integer(2.into()) {
        return Err(Error::NonConvergence {
            reason: format!(
                "the stationary mean is infinite for drift <= 2 (environment {env}, \
                 drift {}); the truncated mean criterion cannot converge",
                env.total_drift()
            ),
            last: None,
        });
    }
    let delta = env.total_drift();
    // leading truncation bias of the mean is c N^(1 - delta)
    let contraction = 2f64.powf(delta - 1.0) - 1.0;

    let mut n = config.n_start.max(16);
    let mut pi: Vec<f64> = vec![0.0; n + 1];
    pi[0] = 1.0;
    let mut raws: Vec<f64> = Vec::new();
    let mut extrapolated: Vec<f64> = Vec::new();
    let mut accelerated: Vec<f64> = Vec::new();
    let trace = std::env::var_os("ERW_STATIONARY_TRACE").is_some();
    loop {
        let started = std::time::Instant::now();
        let (residual, sweeps) = power_iterate(env, &mut pi, config)?;
        let n_now = pi.len() - 1;
        let window = n_now - n_now / 16;
        let tail_window_mass: f64 = pi[window..].iter().sum();
        let mean_direct: f64 = pi.iter().enumerate().map(|(m, &w)| m as f64 * w).sum();
        let raw = moment_identity_mean(env, &pi);
        raws.push(raw);
        if raws.len() >= 2 {
            extrapolated.push(raw + (raw - raws[raws.len() - 2]) / contraction);
        }
        // the extrapolated sequence still contracts geometrically in the
        // subleading truncation order, which Aitken's delta-squared
        // removes without knowing that exponent
        if extrapolated.len() >= 3 {
            let e = &extrapolated;
            let (e0, e1, e2) = (e[e.len() - 3], e[e.len() - 2], e[e.len() - 1]);
            let d1 = e1 - e0;
            let d2 = e2 - e1;
            let curvature = d2 - d1;
            let aitken = if curvature.abs() > 1e-3 * d2.abs().max(f64::MIN_POSITIVE) {
                e2 - d2 * d2 / curvature
            } else {
                e2
            };
            accelerated.push(aitken);
        }
        let drift = match accelerated.len() {
            0 | 1 => None,
            len => Some((accelerated[len - 1] - accelerated[len - 2]).abs()),
        };
        if trace {
            eprintln!(
                "stationary {env}: N={n_now} sweeps={sweeps} residual={residual:.2e} \
                 raw={raw:.12} accel={:?} drift={drift:?} \
                 tailwin={tail_window_mass:.2e} elapsed={:.2}s",
                accelerated.last(),
                started.elapsed().as_secs_f64()
            );
        }
        if let (Some(&mean), Some(d)) = (accelerated.last(), drift) {
            if d <= 0.5 * config.rel_tol * mean.abs().max(1.0) {
                return Ok(StationaryDistribution {
                    truncation: n_now,
                    masses: pi,
                    tail_window_mass,
                    mean,
                    mean_direct,
                    error_estimate: 2.0 * d,
                    residual,
                });
            }
        }
        if 2 * n > config.n_cap {
            return Err(Error::NonConvergence {
                reason: format!(
                    "stationary mean not stable within rel_tol {} at truncation cap {n} \
                     for {env}",
                    config.rel_tol
                ),
                last: drift,
            });
        }
        n *= 2;
        pi.resize(n + 1, 0.0);
    }
}

/// One truncation level of the stationary solve; returns the verified
/// stationarity residual and the sweeps used.
///
/// Sweeps are Gauss-Seidel passes in increasing state order: the chain
/// drifts downward, so the tail profile is determined outward from the
/// bulk (as in a birth-death recurrence) and an in-place upward pass
/// propagates it across the whole level at once, where a plain power
/// sweep moves information by only a bounded number of states. Every
/// candidate is then verified against the untransposed kernel, so the
/// reported residual is the true `max_m |(pi K)(m) - pi(m)|`.
fn power_iterate(
    env: &CookieEnvironment,
    pi: &mut [f64],
    config: &StationaryConfig,
) -> Result<(f64, usize)> {
    let n = pi.len() - 1;
    let rows = KernelWindows::build(env, n);
    let columns = rows.transpose(n);
    let budget = config.sweeps_per_state * n + 512;
    let mut scratch = vec![0.0f64; n + 1];
    let mut residual = f64::INFINITY;
    let mut sweeps = 0usize;
    while sweeps < budget {
        let mut displacement = 0.0f64;
        for _ in 0..8 {
            displacement = columns.gauss_seidel_sweep(pi);
            sweeps += 1;
        }
        if displacement <= config.residual_tol * 0.25 {
            rows.apply(pi, &mut scratch);
            residual = pi
                .iter()
                .zip(scratch.iter())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            if residual <= config.residual_tol {
                return Ok((residual, sweeps));
            }
        }
    }
    Err(Error::NonConvergence {
        reason: format!(
            "stationary sweeps at truncation {n} did not reach residual {}",
            config.residual_tol
        ),
        last: Some(residual),
    })
}

/// Kernel rows restricted to a support window and renormalized over the
/// truncation, stored contiguously.
struct KernelWindows {
    starts: Vec<u32>,
    offsets: Vec<usize>,
    masses: Vec<f64>,
}

impl KernelWindows {
    fn build(env: &CookieEnvironment, n: usize) -> Self {
        let m = env.len() as u64;
        let mut starts = Vec::with_capacity(n + 1);
        let mut offsets = Vec::with_capacity(n + 2);
        let mut masses = Vec::new();
        let mut row = Vec::new();
        offsets.push(0);
        for k in 0..=n as u64 {
            let r = k + 1;
            let spread = 14.0 * (2.0 * r as f64).sqrt() + 24.0;
            let lo = (r as f64 - spread).floor().max(0.0) as u64;
            let hi = (((r as f64 + spread).ceil() as u64) + m).min(n as u64);
            row.resize((hi - lo + 1) as usize, 0.0);
            dist::failures_pmf_window(env.probs(), r, lo, hi, &mut row);
            let total: f64 = row.iter().sum();
            let inv = 1.0 / total;
            starts.push(lo as u32);
            masses.extend(row.iter().map(|&w| w * inv));
            offsets.push(masses.len());
        }
        Self {
            starts,
            offsets,
            masses,
        }
    }

    /// `next = pi K`.
    fn apply(&self, pi: &[f64], next: &mut [f64]) {
        next.fill(0.0);
        for (k, &weight) in pi.iter().enumerate() {
            if weight == 0.0 {
                continue;
            }
            let start = self.starts[k] as usize;
            let row = &self.masses[self.offsets[k]..self.offsets[k + 1]];
            for (j, &mass) in row.iter().enumerate() {
                next[start + j] += weight * mass;
            }
        }
    }

    /// Column-major copy `K(k, m)` grouped by destination `m`. Row windows
    /// have monotone endpoints, so each column is one contiguous `k`
    /// range.
    fn transpose(&self, n: usize) -> KernelColumns {
        let mut first_k = vec![u32::MAX; n + 1];
        let mut counts = vec![0usize; n + 1];
        for k in 0..=n {
            let start = self.starts[k] as usize;
            let len = self.offsets[k + 1] - self.offsets[k];
            for m in start..start + len {
                counts[m] += 1;
                first_k[m] = first_k[m].min(k as u32);
            }
        }
        let mut offsets = Vec::with_capacity(n + 2);
        offsets.push(0usize);
        for m in 0..=n {
            offsets.push(offsets[m] + counts[m]);
        }
        let mut masses = vec![0.0f64; offsets[n + 1]];
        let mut cursor = offsets.clone();
        for k in 0..=n {
            let start = self.starts[k] as usize;
            let row = &self.masses[self.offsets[k]..self.offsets[k + 1]];
            for (j, &mass) in row.iter().enumerate() {
                let m = start + j;
                // rows are visited in increasing k, so columns fill in
                // increasing k order within their contiguous range
                masses[cursor[m]] = mass;
                cursor[m] += 1;
            }
        }
        KernelColumns {
            first_k,
            offsets,
            masses,
        }
    }
}

/// Transposed kernel windows for in-place Gauss-Seidel sweeps.
struct KernelColumns {
    first_k: Vec<u32>,
    offsets: Vec<usize>,
    masses: Vec<f64>,
}

impl KernelColumns {
    /// One upward in-place sweep `pi(m) <- sum_k pi(k) K(k, m)` followed by
    /// renormalization; returns the max-norm displacement.
    fn gauss_seidel_sweep(&self, pi: &mut [f64]) -> f64 {
        let n = pi.len() - 1;
        let mut displacement = 0.0f64;
        for m in 0..=n {
            let first = self.first_k[m] as usize;
            let column = &self.masses[self.offsets[m]..self.offsets[m + 1]];
            let mut acc = 0.0;
            for (j, &mass) in column.iter().enumerate() {
                acc += pi[first + j] * mass;
            }
            displacement = displacement.max((acc - pi[m]).abs());
            pi[m] = acc;
        }
        let total: f64 = pi.iter().sum();
        let inv = 1.0 / total;
        for w in pi.iter_mut() {
            *w *= inv;
        }
        displacement
    }
}

/// Stationary mean from the second-moment balance.
///
/// Writing the one-step mean and second moment of the kernel out of state
/// `k >= M` in closed form and imposing stationarity of `E[Z^2]` leaves a
/// linear equation for `sum_{k >= M} k pi(k)` whose coefficients involve
/// only the masses `pi(0..M-1)`; those bulk masses converge rapidly under
/// truncation, unlike the direct mean whose truncation bias decays slowly
/// for drifts near 2.
fn moment_identity_mean(env: &CookieEnvironment, pi: &[f64]) -> f64 {
    let m = env.len();
    let delta = env.total_drift();
    let s1: f64 = env.probs().iter().sum();
    let c2: f64 = env
        .probs()
        .iter()
        .map(|&p| 4.0 * p * (1.0 - p))
        .sum::<f64>()
        + delta * delta;

    let mut below_mass = 0.0;
    let mut below_mean = 0.0;
    let mut below_term = 0.0;
    for k in 0..m.min(pi.len()) {
        let w = pi[k];
        let (_, e2) = dist::failures_moments(env.probs(), k as u64 + 1);
        below_mass += w;
        below_mean += w * k as f64;
        below_term += w * (e2 - (k as f64) * (k as f64));
    }
    let above_mass = (1.0 - below_mass).max(0.0);
    let b1 = (below_term + above_mass * (3.0 - 2.0 * delta - 2.0 * s1 + c2)) / (2.0 * delta - 4.0);
    below_mean + b1
}

/// First-moment stationarity balance, used as a solver diagnostic: the
/// residual `sum_{k<M} pi(k) (k - e1_k) - (1 - delta) sum_{k>=M} pi(k)`
/// vanishes on the exact stationary law.
pub fn first_moment_residual(env: &CookieEnvironment, pi: &[f64]) -> f64 {
    let m = env.len();
    let delta = env.total_drift();
    let mut below_mass = 0.0;
    let mut lhs = 0.0;
    for k in 0..m.min(pi.len()) {
        let w = pi[k];
        let (e1, _) = dist::failures_moments(env.probs(), k as u64 + 1);
        lhs += w * (k as f64 - e1);
        below_mass += w;
    }
    lhs - (1.0 - delta) * (1.0 - below_mass)
}

/// How a speed value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SpeedMethod {
    /// Zero by the ballisticity criterion (|drift| <= 2).
    TheoremZero,
    /// Reciprocal of the stationary mean formula.
    StationaryMean,
    /// Mirrored environment solved and negated.
    MirroredStationaryMean,
}

/// Speed value with its provenance, serializable as the CLI report.
#[derive(Debug, Clone, Serialize)]
pub struct SpeedReport {
    pub delta: f64,
    pub regime: Regime,
    pub v: f64,
    pub method: SpeedMethod,
    pub error_estimate: f64,
}

/// Limiting speed `lim X_n / n`.
///
/// Exactly zero for drifts in `[-2, 2]` (including the endpoint decided in
/// exact arithmetic); otherwise `1 / (1 + 2 E[Z])` via the stationary
/// solve, mirrored for leftward drifts.
pub fn speed(env: &CookieEnvironment, rel_tol: f64) -> Result<f64> {
    speed_report(env, rel_tol).map(|r| r.v)
}

pub fn speed_report(env: &CookieEnvironment, rel_tol: f64) -> Result<SpeedReport> {
    let regime = env.classify();
    let delta = env.total_drift();
    match regime.speed_sign {
        SpeedSign::Zero => Ok(SpeedReport {
            delta,
            regime,
            v: 0.0,
            method: SpeedMethod::TheoremZero,
            error_estimate: 0.0,
        }),
        SpeedSign::Positive => {
            let stat = stationary_distribution(env, rel_tol)?;
            let v = 1.0 / (1.0 + 2.0 * stat.mean);
            Ok(SpeedReport {
                delta,
                regime,
                v,
                method: SpeedMethod::StationaryMean,
                error_estimate: 2.0 * v * v * stat.error_estimate,
            })
        }
        SpeedSign::Negative => {
            let mirrored = speed_report(&env.mirror(), rel_tol)?;
            Ok(SpeedReport {
                delta,
                regime,
                v: -mirrored.v,
                method: SpeedMethod::MirroredStationaryMean,
                error_estimate: mirrored.error_estimate,
            })
        }
    }
}

/// Report of the distributional identity between reversed down-crossing
/// counts and the backward chain, plus the nonnegative-time identity.
#[derive(Debug, Clone, Serialize)]
pub struct DzReport {
    pub level: i64,
    pub samples: u64,
    /// Two-sample chi-square over binned joint vectors.
    pub joint: ChiSquare,
    /// Two-sample chi-square over the nonnegative-time law.
    pub time: ChiSquare,
    pub mean_d0: f64,
    pub mean_zn: f64,
    /// Combined standard error of the two means.
    pub mean_se: f64,
    pub alpha: f64,
    pub passed: bool,
}

/// Simulates both sides of the identity "(D_n, ..., D_0) ~ (Z_0, ..., Z_n)"
/// and tests them against each other, along with the law of the time spent
/// at nonnegative sites before hitting `n`.
pub fn dz_distribution_check(
    env: &CookieEnvironment,
    level: i64,
    samples: u64,
    seed: u64,
) -> Result<DzReport> {
    if env.total_drift_exact() < -num_rational::BigRational::from_integer(1.into()) {
        return Err(Error::Precondition(
            "the identity needs a walk that is recurrent or transient right (drift >= -1)".into(),
        ));
    }
    if !(1..=5).contains(&level) {
        return Err(Error::Precondition(format!(
            "level {level} outside the supported range 1..=5"
        )));
    }
    let coords = level as usize + 1;
    const VALUE_CAP: u64 = 3; // per-coordinate bins 0, 1, 2, >=3
    let cells = (VALUE_CAP as usize + 1).pow(coords as u32);
    let mut walk_joint = vec![0u64; cells];
    let mut chain_joint = vec![0u64; cells];
    const TIME_CAP: usize = 64;
    let mut walk_time = vec![0u64; TIME_CAP + 1];
    let mut chain_time = vec![0u64; TIME_CAP + 1];
    let mut sum_d0 = 0f64;
    let mut sum_d0_sq = 0f64;
    let mut sum_zn = 0f64;
    let mut sum_zn_sq = 0f64;

    let bin_index = |values: &[u64]| -> usize {
        values.iter().fold(0usize, |acc, &v| {
            acc * (VALUE_CAP as usize + 1) + v.min(VALUE_CAP) as usize
        })
    };

    for sample in 0..samples {
        let mut field = TrialField::new(env, derive_seed(seed, 2 * sample))?;
        let trace = walk::run_walk_to_level(&mut field, level, 1 << 34)?;
        let hits = walk::hitting_stats(&trace, level);
        let reversed = hits.reversed_down_crossings();
        walk_joint[bin_index(&reversed)] += 1;
        walk_time[(hits.nonneg_time as usize).min(TIME_CAP)] += 1;
        let d0 = hits.d(0) as f64;
        sum_d0 += d0;
        sum_d0_sq += d0 * d0;

        let field = TrialField::new(env, derive_seed(seed, 2 * sample + 1))?;
        let traj = run_backward(&field, level as u64)?;
        let z = traj.values();
        chain_joint[bin_index(z)] += 1;
        let time_functional =
            level as u64 + 2 * z[..z.len() - 1].iter().sum::<u64>() + z[z.len() - 1];
        chain_time[(time_functional as usize).min(TIME_CAP)] += 1;
        let zn = z[z.len() - 1] as f64;
        sum_zn += zn;
        sum_zn_sq += zn * zn;
    }

    let joint = stats::chi_square_homogeneity(&walk_joint, &chain_joint, 10.0);
    let time = stats::chi_square_homogeneity(&walk_time, &chain_time, 10.0);
    let nf = samples as f64;
    let mean_d0 = sum_d0 / nf;
    let mean_zn = sum_zn / nf;
    let var_d0 = (sum_d0_sq / nf - mean_d0 * mean_d0).max(0.0);
    let var_zn = (sum_zn_sq / nf - mean_zn * mean_zn).max(0.0);
    let mean_se = ((var_d0 + var_zn) / nf).sqrt();
    let alpha = 0.001;
    let passed = joint.p_value > alpha
        && time.p_value > alpha
        && (mean_d0 - mean_zn).abs() <= 3.0 * mean_se.max(1e-12);
    Ok(DzReport {
        level,
        samples,
        joint,
        time,
        mean_d0,
        mean_zn,
        mean_se,
        alpha,
        passed,
    })
}
