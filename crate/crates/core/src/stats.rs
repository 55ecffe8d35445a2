//! Small statistical helpers shared by the verification harness: binomial
//! error radii, one-sided Clopper-Pearson bounds, and chi-square tests.

use statrs::distribution::{Beta, ChiSquared, ContinuousCDF};

/// Standard error of a binomial frequency estimate.
pub fn binomial_se(freq: f64, n: u64) -> f64 {
    if n == 0 {
        return f64::INFINITY;
    }
    (freq.clamp(0.0, 1.0) * (1.0 - freq.clamp(0.0, 1.0)) / n as f64).sqrt()
}

/// One-sided Clopper-Pearson lower confidence bound for a binomial
/// proportion at the given confidence level.
pub fn clopper_pearson_lower(successes: u64, n: u64, confidence: f64) -> f64 {
    assert!(n > 0 && successes <= n);
    if successes == 0 {
        return 0.0;
    }
    let alpha = 1.0 - confidence;
    let beta = Beta::new(successes as f64, (n - successes) as f64 + 1.0)
        .expect("valid shape parameters");
    beta.inverse_cdf(alpha)
}

/// Upper-tail p-value of a chi-square statistic.
pub fn chi_square_p_value(statistic: f64, dof: f64) -> f64 {
    if dof <= 0.0 {
        return 1.0;
    }
    let dist = ChiSquared::new(dof).expect("positive dof");
    (1.0 - dist.cdf(statistic)).clamp(0.0, 1.0)
}

/// Result of a chi-square test.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: f64,
    pub p_value: f64,
}

/// Pearson goodness-of-fit test of observed counts against expected
/// counts. Cells with expected count below `min_expected` are pooled into
/// one remainder cell.
pub fn chi_square_goodness_of_fit(
    observed: &[u64],
    expected: &[f64],
    min_expected: f64,
) -> ChiSquare {
    assert_eq!(observed.len(), expected.len());
    let mut statistic = 0.0;
    let mut cells = 0usize;
    let mut pooled_obs = 0.0;
    let mut pooled_exp = 0.0;
    for (&o, &e) in observed.iter().zip(expected) {
        if e >= min_expected {
            statistic += (o as f64 - e).powi(2) / e;
            cells += 1;
        } else {
            pooled_obs += o as f64;
            pooled_exp += e;
        }
    }
    if pooled_exp > 0.0 {
        statistic += (pooled_obs - pooled_exp).powi(2) / pooled_exp;
        cells += 1;
    }
    let dof = (cells.max(2) - 1) as f64;
    ChiSquare {
        statistic,
        dof,
        p_value: chi_square_p_value(statistic, dof),
    }
}

/// Two-sample chi-square homogeneity test over matching count vectors.
/// Cells whose pooled count is below `min_pooled` are merged.
pub fn chi_square_homogeneity(a: &[u64], b: &[u64], min_pooled: f64) -> ChiSquare {
    assert_eq!(a.len(), b.len());
    let na: u64 = a.iter().sum();
    let nb: u64 = b.iter().sum();
    assert!(na > 0 && nb > 0);
    let (na, nb) = (na as f64, nb as f64);
    let total = na + nb;

    let mut statistic = 0.0;
    let mut cells = 0usize;
    let mut pool_a = 0.0;
    let mut pool_b = 0.0;
    let add_cell = |oa: f64, ob: f64, statistic: &mut f64, cells: &mut usize| {
        let pooled = oa + ob;
        if pooled == 0.0 {
            return;
        }
        let ea = pooled * na / total;
        let eb = pooled * nb / total;
        *statistic += (oa - ea).powi(2) / ea + (ob - eb).powi(2) / eb;
        *cells += 1;
    };
    for (&oa, &ob) in a.iter().zip(b) {
        let (oa, ob) = (oa as f64, ob as f64);
        if oa + ob >= min_pooled {
            add_cell(oa, ob, &mut statistic, &mut cells);
        } else {
            pool_a += oa;
            pool_b += ob;
        }
    }
    add_cell(pool_a, pool_b, &mut statistic, &mut cells);
    let dof = (cells.max(2) - 1) as f64;
    ChiSquare {
        statistic,
        dof,
        p_value: chi_square_p_value(statistic, dof),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;

    #[test]
    fn clopper_pearson_basics() {
        assert_eq!(clopper_pearson_lower(0, 100, 0.95), 0.0);
        let lb = clopper_pearson_lower(5, 100, 0.95);
        assert!(lb > 0.0 && lb < 0.05, "lb = {lb}");
        // more successes raise the bound
        assert!(clopper_pearson_lower(50, 100, 0.95) > lb);
    }

    #[test]
    fn chi_square_accepts_true_distribution() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let probs = [0.5, 0.25, 0.125, 0.125];
        let n = 100_000u64;
        let mut observed = [0u64; 4];
        for _ in 0..n {
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            for (i, &p) in probs.iter().enumerate() {
                acc += p;
                if u < acc {
                    observed[i] += 1;
                    break;
                }
            }
        }
        let expected: Vec<f64> = probs.iter().map(|&p| p * n as f64).collect();
        let test = chi_square_goodness_of_fit(&observed, &expected, 5.0);
        assert!(test.p_value > 0.001, "p = {}", test.p_value);
    }

    #[test]
    fn chi_square_rejects_shifted_distribution() {
        let observed = [60_000u64, 20_000, 10_000, 10_000];
        let expected = [50_000.0, 25_000.0, 12_500.0, 12_500.0];
        let test = chi_square_goodness_of_fit(&observed, &expected, 5.0);
        assert!(test.p_value < 1e-6);
    }

    #[test]
    fn homogeneity_accepts_identical_sampling() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let mut a = [0u64; 6];
        let mut b = [0u64; 6];
        for _ in 0..50_000 {
            a[rng.gen_range(0..6)] += 1;
            b[rng.gen_range(0..6)] += 1;
        }
        let test = chi_square_homogeneity(&a, &b, 5.0);
        assert!(test.p_value > 0.001, "p = {}", test.p_value);
    }

    #[test]
    fn homogeneity_rejects_different_laws() {
        let a = [10_000u64, 10_000, 10_000, 10_000];
        let b = [13_000u64, 9_000, 9_000, 9_000];
        let test = chi_square_homogeneity(&a, &b, 5.0);
        assert!(test.p_value < 1e-6);
    }
}
