//! Manual throughput probe for the simulation hot paths; the statistical
//! benchmarks live in `benches/hot_paths.rs`.

use std::time::Instant;

use erw_core::backward::{stationary_distribution_with, StationaryConfig};
use erw_core::walk::walk_final_position;
use erw_core::{derive_seed, CookieEnvironment, TrialField};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let which = args.get(1).map(String::as_str).unwrap_or("all");

    if which == "all" || which == "scan" {
        // forward-chain style consumption: long per-site scans
        let env = CookieEnvironment::parse("0.7,0.9,0.9").unwrap();
        let field = TrialField::new(&env, 42).unwrap();
        let start = Instant::now();
        let mut v = 1u64;
        let mut consumed = 0u64;
        for site in 1..=200_000i64 {
            let mut scan = field.site_scan(site);
            v = scan.successes_before_kth_failure(v.max(1)).unwrap();
            consumed += scan.consumed();
            v += 3; // keep the population growing like a supercritical chain
        }
        let dt = start.elapsed().as_secs_f64();
        println!(
            "scan: {consumed} trials in {dt:.3}s = {:.2} ns/trial",
            dt * 1e9 / consumed as f64
        );
    }

    if which == "all" || which == "walk" {
        let env = CookieEnvironment::parse("0.5").unwrap();
        let steps = 20_000_000u64;
        let start = Instant::now();
        let mut field = TrialField::new(&env, derive_seed(7, 0)).unwrap();
        let x = walk_final_position(&mut field, steps);
        let dt = start.elapsed().as_secs_f64();
        let ns = dt * 1e9 / steps as f64;
        println!("walk(recurrent): {steps} steps in {dt:.3}s = {ns:.1} ns/step (X = {x})");

        let env = CookieEnvironment::parse("0.9,0.8").unwrap();
        let start = Instant::now();
        let mut field = TrialField::new(&env, derive_seed(7, 1)).unwrap();
        let x = walk_final_position(&mut field, steps);
        let dt = start.elapsed().as_secs_f64();
        let ns = dt * 1e9 / steps as f64;
        println!("walk(transient): {steps} steps in {dt:.3}s = {ns:.1} ns/step (X = {x})");
    }

    if which == "all" || which == "stationary" {
        for (envs, tol) in [("0.8,0.9,0.9", 1e-8), ("0.9,0.8,0.9", 1e-8)] {
            let env = CookieEnvironment::parse(envs).unwrap();
            let start = Instant::now();
            let config = StationaryConfig::with_rel_tol(tol);
            match stationary_distribution_with(&env, &config) {
                Ok(stat) => println!(
                    "stationary {envs}: N={} mean={:.10} direct={:.10} err={:.2e} residual={:.2e} in {:.2}s",
                    stat.truncation,
                    stat.mean,
                    stat.mean_direct,
                    stat.error_estimate,
                    stat.residual,
                    start.elapsed().as_secs_f64()
                ),
                Err(e) => println!(
                    "stationary {envs}: FAILED after {:.2}s: {e}",
                    start.elapsed().as_secs_f64()
                ),
            }
        }
    }

    if which == "ladder" {
        // per-level timings of the stationary solve
        let env = CookieEnvironment::parse("0.7,0.9,0.9").unwrap();
        let mut config = StationaryConfig::with_rel_tol(1e-8);
        for n in [64usize, 128, 256, 512, 1024, 2048] {
            config.n_start = n;
            config.n_cap = 2 * n;
            let start = Instant::now();
            match stationary_distribution_with(&env, &config) {
                Ok(stat) => println!(
                    "N={n}: mean={:.10} direct={:.10} err={:.2e} in {:.2}s",
                    stat.mean,
                    stat.mean_direct,
                    stat.error_estimate,
                    start.elapsed().as_secs_f64()
                ),
                Err(e) => println!("N={n}: {e} in {:.2}s", start.elapsed().as_secs_f64()),
            }
        }
    }
}
