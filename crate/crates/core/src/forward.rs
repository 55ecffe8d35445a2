//! The forward branching process: successes before the k-th failure at
//! each site, absorbed at zero. Right excursions of the walk embed into
//! this chain, which is what makes its survival probability (times the
//! first cookie strength) the walk's escape probability.

use serde::Serialize;

use crate::dist;
pub use crate::dist::CountDistribution;
use crate::env::CookieEnvironment;
use crate::error::Error;
use crate::field::{derive_seed, TrialField};
use crate::walk::EventTime;
use crate::Result;

/// A realized forward trajectory `V_0 = 1, V_1, ...` up to absorption or a
/// generation cap. Zero is absorbing, so the recorded values stop at the
/// first zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrajectory {
    values: Vec<u64>,
    lifetime: EventTime,
}

impl ForwardTrajectory {
    pub fn values(&self) -> &[u64] {
        &self.values
    }

    /// First generation at which the population is zero, censored at the
    /// generation cap.
    pub fn lifetime(&self) -> EventTime {
        self.lifetime
    }

    /// Total progeny including the initial individual; only defined on
    /// absorbed trajectories.
    pub fn total_progeny(&self) -> Option<u64> {
        self.lifetime.finite().map(|_| self.values.iter().sum())
    }
}

/// Successes before the `k`-th failure in the trial sequence of `site`.
pub fn successes_before_kth_failure(field: &TrialField, site: i64, k: u64) -> Result<u64> {
    field.site_scan(site).successes_before_kth_failure(k)
}

/// Runs the forward chain on sites `1, 2, ...` of `field`, stopping at
/// absorption or after `max_generations` steps.
pub fn run_forward(field: &TrialField, max_generations: u64) -> Result<ForwardTrajectory> {
    assert!(max_generations >= 1);
    let mut values = vec![1u64];
    let mut current = 1u64;
    for generation in 1..=max_generations {
        current = field
            .site_scan(generation as i64)
            .successes_before_kth_failure(current)?;
        values.push(current);
        if current == 0 {
            return Ok(ForwardTrajectory {
                values,
                lifetime: EventTime::At(generation),
            });
        }
    }
    Ok(ForwardTrajectory {
        values,
        lifetime: EventTime::Censored,
    })
}

/// Exact law of one forward step from population `k >= 1`: masses of
/// "successes before the `k`-th failure" for `0..=m_max` plus the exact
/// tail.
pub fn exact_step_distribution(
    env: &CookieEnvironment,
    k: u64,
    m_max: usize,
) -> CountDistribution {
    assert!(k >= 1, "step law is defined for positive populations");
    dist::forward_kernel_law(env, k, m_max)
}

/// How a survival probability was computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SurvivalMethod {
    TruncatedSolve,
    MonteCarlo,
}

/// A survival probability with an explicit error radius.
#[derive(Debug, Clone, Serialize)]
pub struct SurvivalEstimate {
    pub method: SurvivalMethod,
    pub estimate: f64,
    /// Radius covering truncation (exact route) or sampling noise plus the
    /// threshold-misclassification proxy (Monte Carlo route).
    pub error_bound: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Tunables for the survival computations.
#[derive(Debug, Clone)]
pub struct SurvivalConfig {
    /// Initial truncation level of the exact solve.
    pub n_start: usize,
    /// Truncation cap; doubling stops here.
    pub n_cap: usize,
    /// Target bracket width of the exact solve.
    pub bracket_tol: f64,
    /// Monte Carlo episodes.
    pub episodes: u64,
    /// Population declared "escaped" by the Monte Carlo route.
    pub pop_threshold: u64,
    /// Generation cap per Monte Carlo episode.
    pub gen_cap: u64,
    pub seed: u64,
}

impl Default for SurvivalConfig {
    fn default() -> Self {
        Self {
            n_start: 64,
            n_cap: 1024,
            bracket_tol: 1e-6,
            episodes: 100_000,
            pop_threshold: 10_000,
            gen_cap: 1_000_000,
            seed: 0xC00C1E,
        }
    }
}

/// Exact truncated extinction solve.
#[derive(Debug, Clone)]
pub struct TruncatedSurvival {
    /// Truncation level actually used.
    pub truncation: usize,
    /// Survival estimate per initial population `0..=N` (above-truncation
    /// excursions counted as surviving).
    pub survival_by_state: Vec<f64>,
    /// Escape probability per initial population: reach beyond `N` before
    /// absorbing.
    pub escape_by_state: Vec<f64>,
    /// Width of the reported bracket at the chain's start state 1.
    pub width: f64,
}

/// Survival probability of the forward chain started from one individual.
pub fn survival_probability(
    env: &CookieEnvironment,
    method: SurvivalMethod,
) -> Result<SurvivalEstimate> {
    survival_probability_with(env, method, &SurvivalConfig::default())
}

pub fn survival_probability_with(
    env: &CookieEnvironment,
    method: SurvivalMethod,
    config: &SurvivalConfig,
) -> Result<SurvivalEstimate> {
    match method {
        SurvivalMethod::TruncatedSolve => {
            let mut last_estimate: Option<f64> = None;
            let mut n = config.n_start.max(16);
            loop {
                let solve = truncated_survival(env, n)?;
                let estimate = solve.survival_by_state[1];
                let drift = last_estimate.map_or(0.0, |prev| (estimate - prev).abs());
                let error_bound = solve.width + drift;
                if (error_bound < config.bracket_tol && last_estimate.is_some())
                    || n >= config.n_cap
                {
                    return Ok(SurvivalEstimate {
                        method,
                        estimate,
                        error_bound,
                        lower: (estimate - error_bound).max(0.0),
                        upper: estimate.min(1.0),
                    });
                }
                last_estimate = Some(estimate);
                n *= 2;
            }
        }
        SurvivalMethod::MonteCarlo => monte_carlo_survival(env, config),
    }
}

/// Solves the truncated extinction system on states `0..=n` exactly.
///
/// Above-truncation mass is treated as never-extinct, so the per-state
/// survival values are upper brackets; the reported width estimates the
/// escape-then-die correction by `escape(1) * survival-gap at n/2`, which
/// is a first-order heuristic rather than a proof-grade bound.
pub fn truncated_survival(env: &CookieEnvironment, n: usize) -> Result<TruncatedSurvival> {
    let n = n.max(8);
    // extinction system: u(k) = K(k,0) + sum_{1<=m<=n} K(k,m) u(m)
    // escape system:     h(k) = tail(k) + sum_{1<=m<=n} K(k,m) h(m)
    let dim = n;
    let mut matrix = vec![0.0f64; dim * dim];
    let mut rhs_u = vec![0.0f64; dim];
    let mut rhs_h = vec![0.0f64; dim];
    let mut row = vec![0.0f64; n + 1];
    let complement: Vec<f64> = env.probs().iter().map(|&p| 1.0 - p).collect();
    for k in 1..=n {
        dist::failures_pmf_window(&complement, k as u64, 0, n as u64, &mut row);
        let idx = k - 1;
        rhs_u[idx] = row[0];
        rhs_h[idx] = (1.0 - row.iter().sum::<f64>()).max(0.0);
        for m in 1..=n {
            matrix[idx * dim + (m - 1)] = -row[m];
        }
        matrix[idx * dim + idx] += 1.0;
    }
    solve_two(&mut matrix, dim, &mut rhs_u, &mut rhs_h)?;

    let mut survival_by_state = Vec::with_capacity(n + 1);
    let mut escape_by_state = Vec::with_capacity(n + 1);
    survival_by_state.push(0.0);
    escape_by_state.push(0.0);
    for k in 1..=n {
        survival_by_state.push((1.0 - rhs_u[k - 1]).clamp(0.0, 1.0));
        escape_by_state.push(rhs_h[k - 1].clamp(0.0, 1.0));
    }
    let mid_extinction = rhs_u[(n / 2).max(1) - 1].clamp(0.0, 1.0);
    let width = escape_by_state[1] * mid_extinction;
    Ok(TruncatedSurvival {
        truncation: n,
        survival_by_state,
        escape_by_state,
        width,
    })
}

/// Dense Gaussian elimination with two right-hand sides. The extinction
/// systems are strictly diagonally dominant, so no pivoting is needed.
fn solve_two(a: &mut [f64], dim: usize, b1: &mut [f64], b2: &mut [f64]) -> Result<()> {
    for col in 0..dim {
        let pivot = a[col * dim + col];
        if pivot.abs() < 1e-14 {
            return Err(Error::NonConvergence {
                reason: format!("vanishing pivot at column {col} of the extinction system"),
                last: Some(pivot),
            });
        }
        let inv = 1.0 / pivot;
        for r in (col + 1)..dim {
            let factor = a[r * dim + col] * inv;
            if factor == 0.0 {
                continue;
            }
            for c in col..dim {
                a[r * dim + c] -= factor * a[col * dim + c];
            }
            b1[r] -= factor * b1[col];
            b2[r] -= factor * b2[col];
        }
    }
    for col in (0..dim).rev() {
        let mut x1 = b1[col];
        let mut x2 = b2[col];
        for c in (col + 1)..dim {
            x1 -= a[col * dim + c] * b1[c];
            x2 -= a[col * dim + c] * b2[c];
        }
        let inv = 1.0 / a[col * dim + col];
        b1[col] = x1 * inv;
        b2[col] = x2 * inv;
    }
    Ok(())
}

/// Outcome of one Monte Carlo forward episode.
#[derive(Debug, Clone, Copy)]
pub struct ForwardProbe {
    pub died_at: Option<u64>,
    pub max_population: u64,
}

/// Runs the forward chain until absorption, the population threshold, or
/// the generation cap, tracking the largest population reached.
pub fn forward_probe(field: &TrialField, pop_threshold: u64, gen_cap: u64) -> Result<ForwardProbe> {
    let mut current = 1u64;
    let mut max_population = 1u64;
    for generation in 1..=gen_cap {
        current = field
            .site_scan(generation as i64)
            .successes_before_kth_failure(current)?;
        max_population = max_population.max(current);
        if current == 0 {
            return Ok(ForwardProbe {
                died_at: Some(generation),
                max_population,
            });
        }
        if current >= pop_threshold {
            break;
        }
    }
    Ok(ForwardProbe {
        died_at: None,
        max_population,
    })
}

fn monte_carlo_survival(env: &CookieEnvironment, config: &SurvivalConfig) -> Result<SurvivalEstimate> {
    let episodes = config.episodes.max(1);
    let mut survived = 0u64;
    let mut survived_quarter = 0u64;
    let mut undecided = 0u64;
    let quarter = (config.pop_threshold / 4).max(2);
    for episode in 0..episodes {
        let field = TrialField::new(env, derive_seed(config.seed, episode))?;
        let probe = forward_probe(&field, config.pop_threshold, config.gen_cap)?;
        if probe.died_at.is_none() {
            if probe.max_population >= config.pop_threshold {
                survived += 1;
            } else {
                undecided += 1;
                survived += 1; // alive at the cap counts as surviving
            }
        }
        if probe.max_population >= quarter {
            survived_quarter += 1;
        }
    }
    let estimate = survived as f64 / episodes as f64;
    let estimate_quarter = survived_quarter as f64 / episodes as f64;
    // radius: 3-sigma binomial noise, plus the threshold sensitivity proxy
    // and the undecided fraction as documented misclassification folds
    let se = crate::stats::binomial_se(estimate, episodes);
    let error_bound =
        3.0 * se + (estimate_quarter - estimate).abs() + undecided as f64 / episodes as f64;
    Ok(SurvivalEstimate {
        method: SurvivalMethod::MonteCarlo,
        estimate,
        error_bound,
        lower: (estimate - error_bound).max(0.0),
        upper: (estimate + error_bound).min(1.0),
    })
}

/// Exact two-route check of the excursion identity: the probability that
/// the first excursion is a right excursion of length `2k`, computed by
/// path enumeration (left side) and as `p_1` times the probability that
/// the forward chain's total progeny equals `k` (right side).
pub fn excursion_identity_oracle(env: &CookieEnvironment, k: u64) -> Result<(f64, f64)> {
    const MAX_K: u64 = 6;
    if k == 0 || k > MAX_K {
        return Err(Error::BudgetExceeded(format!(
            "excursion enumeration supports 1..={MAX_K}, got {k}"
        )));
    }
    let lhs = enumerate_excursion_probability(env, k);
    let rhs = env.probs().first().copied().unwrap_or(0.5) * total_progeny_probability(env, k);
    Ok((lhs, rhs))
}

/// Sums path probabilities over all walks with `X_1 = 1` that first return
/// to the origin at time `2k`.
fn enumerate_excursion_probability(env: &CookieEnvironment, k: u64) -> f64 {
    let len = 2 * k as usize;
    // positions are offset by +1 so the origin sits at index 1
    let mut visits: Vec<u64> = vec![0; len + 2];
    visits[1] = 1;
    let mut total = 0.0;
    recurse_excursion(env, &mut visits, 1, 0, len, 1.0, &mut total);
    total
}

fn recurse_excursion(
    env: &CookieEnvironment,
    visits: &mut [u64],
    site_idx: usize,
    step: usize,
    len: usize,
    prob: f64,
    total: &mut f64,
) {
    if step == len {
        if site_idx == 1 {
            *total += prob;
        }
        return;
    }
    let position = site_idx - 1;
    // a visit to the origin before time 2k is a premature return
    if step > 0 && position == 0 {
        return;
    }
    // too far right to make it back in the remaining steps
    if position > len - step {
        return;
    }
    let p_right = env.step_probability(visits[site_idx] as u32);
    let up = site_idx + 1;
    visits[up] += 1;
    recurse_excursion(env, visits, up, step + 1, len, prob * p_right, total);
    visits[up] -= 1;
    if site_idx >= 2 {
        // stepping below the origin cannot be part of a right excursion
        let down = site_idx - 1;
        visits[down] += 1;
        recurse_excursion(env, visits, down, step + 1, len, prob * (1.0 - p_right), total);
        visits[down] -= 1;
    }
}

/// P(total progeny of the forward chain equals `k`), by exhaustive
/// trajectory enumeration in lexicographic order with budget pruning.
fn total_progeny_probability(env: &CookieEnvironment, k: u64) -> f64 {
    let mut laws: Vec<CountDistribution> = Vec::new();
    // law of one step from population v, masses up to k
    for v in 1..=k {
        laws.push(exact_step_distribution(env, v, k as usize));
    }
    let mut total = 0.0;
    recurse_progeny(&laws, 1, 1, k, 1.0, &mut total);
    total
}

fn recurse_progeny(
    laws: &[CountDistribution],
    current: u64,
    used: u64,
    budget: u64,
    prob: f64,
    total: &mut f64,
) {
    let law = &laws[(current - 1) as usize];
    // absorb now
    if used == budget {
        *total += prob * law.masses[0];
        return;
    }
    // continue with the next population w >= 1, pruning on the budget
    for w in 1..=(budget - used) {
        let p = law.masses[w as usize];
        if p > 0.0 {
            recurse_progeny(laws, w, used + w, budget, prob * p, total);
        }
    }
}
