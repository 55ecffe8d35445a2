//! Exact laws of trial-counting variables over a cookie window followed by
//! fair coins.
//!
//! Everything here is driven by one primitive: the number of failures
//! before the `k`-th success in a sequence of independent trials whose
//! first `M` success probabilities are the cookie strengths and whose
//! remainder is fair. Its law is computed by dynamic programming over the
//! window (absorbing once the `k`-th success lands inside it) and a
//! negative-binomial completion for the fair region. The success-counting
//! variable is the same primitive on the complemented strengths.

use statrs::function::gamma::ln_gamma;

use crate::env::CookieEnvironment;

const LN_2: f64 = std::f64::consts::LN_2;

/// Exact distribution of a counting variable: point masses for counts
/// `0..=m_max` plus the exact mass beyond `m_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct CountDistribution {
    pub masses: Vec<f64>,
    pub tail: f64,
}

impl CountDistribution {
    pub fn m_max(&self) -> usize {
        self.masses.len().saturating_sub(1)
    }

    /// Total reported mass; 1 within numerical error by construction.
    pub fn total(&self) -> f64 {
        self.masses.iter().sum::<f64>() + self.tail
    }

    pub fn mean_truncated(&self) -> f64 {
        self.masses
            .iter()
            .enumerate()
            .map(|(m, &w)| m as f64 * w)
            .sum()
    }
}

/// Weighted cookie-window states after scanning all `M` cookie trials or
/// absorbing early at the `k`-th success.
struct WindowOutcome {
    /// `(failures, weight)` for scans absorbed inside the window.
    absorbed: Vec<(u64, f64)>,
    /// `(successes, failures, weight)` for scans that exhaust the window.
    open: Vec<(u64, u64, f64)>,
}

fn scan_window(probs: &[f64], k: u64) -> WindowOutcome {
    let mut absorbed = Vec::new();
    // state: weight indexed by number of successes so far (failures are
    // implied by the trial index)
    let mut open: Vec<(u64, u64, f64)> = vec![(0, 0, 1.0)];
    for &p in probs {
        let mut next = Vec::with_capacity(open.len() + 1);
        for &(s, f, w) in &open {
            let succ = w * p;
            if s + 1 == k {
                absorbed.push((f, succ));
            } else {
                next.push((s + 1, f, succ));
            }
            next.push((s, f + 1, w * (1.0 - p)));
        }
        // merge duplicate (s, f) states
        next.sort_unstable_by_key(|&(s, f, _)| (s, f));
        next.dedup_by(|a, b| {
            if a.0 == b.0 && a.1 == b.1 {
                b.2 += a.2;
                true
            } else {
                false
            }
        });
        open = next;
    }
    WindowOutcome { absorbed, open }
}

/// ln P(NB(r, 1/2) = g): `g` failures before the `r`-th success in fair
/// coins.
fn nb_ln_pmf(r: u64, g: u64) -> f64 {
    let (r, g) = (r as f64, g as f64);
    ln_gamma(g + r) - ln_gamma(g + 1.0) - ln_gamma(r) - (g + r) * LN_2
}

/// P(NB(r, 1/2) = g).
pub fn nb_pmf(r: u64, g: u64) -> f64 {
    if r == 0 {
        return if g == 0 { 1.0 } else { 0.0 };
    }
    nb_ln_pmf(r, g).exp()
}

/// P(NB(r, 1/2) > gmax), summed term by term so the reported tail is an
/// independent quantity rather than a complement.
pub fn nb_survival(r: u64, gmax: i64) -> f64 {
    if r == 0 {
        return 0.0;
    }
    if gmax < 0 {
        return 1.0;
    }
    // G > g  <=>  fewer than r successes among the first g + r trials
    let n = gmax as u64 + r;
    let nf = n as f64;
    let mut sum = 0.0;
    for t in 0..r {
        let tf = t as f64;
        let ln_term = ln_gamma(nf + 1.0) - ln_gamma(tf + 1.0) - ln_gamma(nf - tf + 1.0) - nf * LN_2;
        sum += ln_term.exp();
    }
    sum.min(1.0)
}

/// Exact law of the number of failures before the `k`-th success when the
/// first trials follow `probs` and the rest are fair.
pub fn failures_before_success_law(probs: &[f64], k: u64, m_max: usize) -> CountDistribution {
    let mut masses = vec![0.0; m_max + 1];
    let mut tail = 0.0;
    if k == 0 {
        masses[0] = 1.0;
        return CountDistribution { masses, tail };
    }
    let window = scan_window(probs, k);
    for (f, w) in window.absorbed {
        let f = f as usize;
        if f <= m_max {
            masses[f] += w;
        } else {
            tail += w;
        }
    }
    for (s, f, w) in window.open {
        let r = k - s;
        let f = f as usize;
        if f <= m_max {
            for g in 0..=(m_max - f) as u64 {
                masses[f + g as usize] += w * nb_pmf(r, g);
            }
            tail += w * nb_survival(r, (m_max - f) as i64);
        } else {
            tail += w;
        }
    }
    CountDistribution { masses, tail }
}

/// Exact law of the number of successes before the `k`-th failure: the
/// same primitive with success and failure exchanged.
pub fn successes_before_failure_law(probs: &[f64], k: u64, m_max: usize) -> CountDistribution {
    let complement: Vec<f64> = probs.iter().map(|&p| 1.0 - p).collect();
    failures_before_success_law(&complement, k, m_max)
}

/// Exact first and second moments of the failures-before-`k`-th-success
/// variable (no truncation; the fair completion enters in closed form).
pub fn failures_moments(probs: &[f64], k: u64) -> (f64, f64) {
    if k == 0 {
        return (0.0, 0.0);
    }
    let window = scan_window(probs, k);
    let mut e1 = 0.0;
    let mut e2 = 0.0;
    for (f, w) in window.absorbed {
        let f = f as f64;
        e1 += w * f;
        e2 += w * f * f;
    }
    for (s, f, w) in window.open {
        // F = f + G with G ~ NB(r, 1/2): E G = r, E G^2 = r^2 + 2r
        let r = (k - s) as f64;
        let f = f as f64;
        e1 += w * (f + r);
        e2 += w * (f * f + 2.0 * f * r + r * r + 2.0 * r);
    }
    (e1, e2)
}

/// Window pmf values `P(F = m)` for `m` in `lo..=hi`, written into `out`.
///
/// Used by the stationary solver, which regenerates kernel rows on the
/// fly; the negative-binomial factors are seeded once per window in log
/// space and extended by the stable upward recurrence.
pub fn failures_pmf_window(probs: &[f64], k: u64, lo: u64, hi: u64, out: &mut [f64]) {
    debug_assert_eq!(out.len() as u64, hi - lo + 1);
    out.fill(0.0);
    if k == 0 {
        if lo == 0 {
            out[0] = 1.0;
        }
        return;
    }
    let window = scan_window(probs, k);
    for (f, w) in window.absorbed {
        if f >= lo && f <= hi {
            out[(f - lo) as usize] += w;
        }
    }
    for (s, f, w) in window.open {
        let r = k - s;
        // F = f + g ranges over g in [max(lo - f, 0), hi - f]
        if f > hi {
            continue;
        }
        let g_lo = lo.saturating_sub(f);
        let g_hi = hi - f;
        let mut g = g_lo;
        let mut pmf = nb_pmf(r, g);
        loop {
            out[(f + g - lo) as usize] += w * pmf;
            if g == g_hi {
                break;
            }
            pmf *= (g + r) as f64 / (g + 1) as f64 * 0.5;
            g += 1;
        }
    }
}

/// Exact one-step law of the backward chain from state `z`: the law of
/// "failures before the `(z+1)`-th success".
pub fn backward_kernel_law(env: &CookieEnvironment, z: u64, m_max: usize) -> CountDistribution {
    failures_before_success_law(env.probs(), z + 1, m_max)
}

/// Exact one-step law of the forward chain from state `k >= 1`: the law of
/// "successes before the `k`-th failure".
pub fn forward_kernel_law(env: &CookieEnvironment, k: u64, m_max: usize) -> CountDistribution {
    successes_before_failure_law(env.probs(), k, m_max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fair_geometric_law() {
        // no cookies, k = 1: failures before first success ~ Geometric(1/2)
        let law = failures_before_success_law(&[], 1, 40);
        for (m, &mass) in law.masses.iter().enumerate() {
            let want = 0.5f64.powi(m as i32 + 1);
            assert!((mass - want).abs() <= 1e-14, "m={m}: {mass} vs {want}");
        }
        assert!((law.total() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn single_cookie_two_phase_law() {
        // env (p1), k = 0 state of the backward chain: P(0) = p1,
        // P(m >= 1) = (1 - p1) (1/2)^m
        let p1 = 0.7;
        let law = failures_before_success_law(&[p1], 1, 30);
        assert!((law.masses[0] - p1).abs() <= 1e-14);
        for m in 1..=30 {
            let want = (1.0 - p1) * 0.5f64.powi(m as i32);
            assert!((law.masses[m] - want).abs() <= 1e-14);
        }
        assert!((law.total() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn successes_law_first_trial_failure() {
        // env (p1), k = 1: P(S = 0) = 1 - p1
        let law = successes_before_failure_law(&[0.9], 1, 20);
        assert!((law.masses[0] - 0.1).abs() <= 1e-14);
        assert!((law.total() - 1.0).abs() <= 1e-12);

        // no cookies, k = 1: P(S = m) = (1/2)^{m+1}
        let law = successes_before_failure_law(&[], 1, 20);
        for (m, &mass) in law.masses.iter().enumerate() {
            assert!((mass - 0.5f64.powi(m as i32 + 1)).abs() <= 1e-14);
        }
    }

    #[test]
    fn rows_normalize_for_large_k() {
        let probs = [0.9, 0.8];
        for k in [1u64, 2, 3, 10, 50] {
            let law = failures_before_success_law(&probs, k, 200);
            assert!(
                (law.total() - 1.0).abs() <= 1e-12,
                "k={k}: total {}",
                law.total()
            );
            let law = successes_before_failure_law(&probs, k, 200);
            assert!((law.total() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn window_pmf_matches_full_law() {
        let probs = [0.7, 0.8, 0.9];
        for k in [1u64, 2, 5, 40] {
            let law = failures_before_success_law(&probs, k, 160);
            let (lo, hi) = (k.saturating_sub(20), k + 60);
            let mut window = vec![0.0; (hi - lo + 1) as usize];
            failures_pmf_window(&probs, k, lo, hi, &mut window);
            for (i, &v) in window.iter().enumerate() {
                let m = lo as usize + i;
                assert!((v - law.masses[m]).abs() <= 1e-13, "k={k} m={m}");
            }
        }
    }

    #[test]
    fn moments_match_law_sums() {
        let probs = [0.9, 0.8];
        for k in [1u64, 2, 3, 7] {
            let law = failures_before_success_law(&probs, k, 400);
            let mean: f64 = law
                .masses
                .iter()
                .enumerate()
                .map(|(m, &w)| m as f64 * w)
                .sum();
            let second: f64 = law
                .masses
                .iter()
                .enumerate()
                .map(|(m, &w)| (m as f64) * (m as f64) * w)
                .sum();
            let (e1, e2) = failures_moments(&probs, k);
            assert!((e1 - mean).abs() <= 1e-9, "k={k}: {e1} vs {mean}");
            assert!((e2 - second).abs() <= 1e-7, "k={k}: {e2} vs {second}");
        }
    }

    #[test]
    fn open_window_mean_is_shifted_by_drift() {
        // for k > M the mean of F(k) is k - delta
        let probs = [0.9, 0.8];
        let delta = 0.8 + 0.6;
        for k in [3u64, 5, 20] {
            let (e1, _) = failures_moments(&probs, k);
            assert!(
                (e1 - (k as f64 - delta)).abs() <= 1e-10,
                "k={k}: {e1} vs {}",
                k as f64 - delta
            );
        }
    }

    #[test]
    fn nb_survival_complements_pmf() {
        for r in [1u64, 2, 5, 17] {
            let mut cum = 0.0;
            for g in 0..60u64 {
                cum += nb_pmf(r, g);
            }
            let tail = nb_survival(r, 59);
            assert!((cum + tail - 1.0).abs() <= 1e-12, "r={r}");
        }
    }
}
