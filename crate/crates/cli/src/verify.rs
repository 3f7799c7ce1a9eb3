//! Fast self-checks. Every check is seeded from `--seed`, so two runs with
//! the same seed print the same report.

use clap::Args;
use quorum_core::channel::{
    aggregate_response, continuous_self_response, impulse_response, self_response_at, AggregateMode,
};
use quorum_core::cooperation::enumerate_partitions;
use quorum_core::params::{EnvParams, Point2, UM};
use quorum_core::popstats::{moment_from_mean, CoopProfile, ProbMode};
use quorum_core::simulator::{
    binomial_interval, brownian_calibration, degradation_calibration, impulse_fractions, run_batch, SimConfig,
};
use quorum_core::specfun::{k0, k1, ln_factorial, reg_gamma_q};

use crate::config::Resolved;
use crate::CliError;

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    /// Test hook: scale the per-step Brownian variance of the simulator
    #[arg(long, hide = true, default_value_t = 1.0)]
    pub inject_variance_scale: f64,
}

struct Check {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn brownian(cfg: &SimConfig, seed: u64) -> Check {
    let b = brownian_calibration(cfg, 400_000, seed);
    let vx = b.var_x / b.expected;
    let vy = b.var_y / b.expected;
    let cov = b.cov_xy.abs() / b.expected;
    // Relative standard error of each variance is sqrt(2/n) ≈ 0.22%.
    Check {
        name: "Brownian step variance",
        pass: (vx - 1.0).abs() < 0.015 && (vy - 1.0).abs() < 0.015 && cov < 0.015,
        detail: format!("var_x/2DΔt = {vx:.4}, var_y/2DΔt = {vy:.4}, |cov|/2DΔt = {cov:.1e}"),
    }
}

fn degradation(cfg: &SimConfig, seed: u64) -> Check {
    let n = 200_000u64;
    let m = 10;
    let surv = degradation_calibration(cfg, n, m, seed);
    let p = (-cfg.env.degradation * cfg.dt).exp();
    let (lo, hi) = binomial_interval(n, p.powi(m as i32), 0.999);
    Check {
        name: "degradation survival",
        pass: (lo..=hi).contains(&surv[m - 1]),
        detail: format!("{} of {n} alive after {m} steps, 99.9% band [{lo}, {hi}]", surv[m - 1]),
    }
}

fn self_response(env: &EnvParams) -> Result<Check, CliError> {
    let t = 20.0 / env.degradation;
    let a = self_response_at(t, env)?.mean_count;
    let b = continuous_self_response(env)?.mean_count;
    Ok(Check {
        name: "self response: time integral vs closed form",
        pass: rel(a, b) < 0.005,
        detail: format!("{a:.6} vs {b:.6} at t = 20/k"),
    })
}

fn uca(env: &EnvParams) -> Result<Check, CliError> {
    let b = Point2::from_um(25.0, 25.0);
    let e = aggregate_response(b, env, AggregateMode::Exact4D)?.mean_count;
    let u = aggregate_response(b, env, AggregateMode::Uca2D)?.mean_count;
    Ok(Check {
        name: "aggregate response: exact vs UCA",
        pass: rel(u, e) < 0.01,
        detail: format!("exact {e:.5}, uca {u:.5} at (25, 25) µm"),
    })
}

fn identities() -> Result<Check, CliError> {
    let mut fd: f64 = 0.0;
    for z in [0.1, 0.5, 1.0, 3.0, 10.0] {
        let h = 1e-5 * z;
        let d = (k0(z + h) - k0(z - h)) / (2.0 * h);
        fd = fd.max(rel(d, -k1(z)));
    }
    // p(n) for n = 0..=12.
    let p = [1, 1, 2, 3, 5, 7, 11, 15, 22, 30, 42, 56, 77];
    let mut parts = true;
    for (n, &want) in p.iter().enumerate() {
        parts &= enumerate_partitions(n)?.len() == want;
    }
    let mut mom: f64 = 0.0;
    for mean in [0.5, 4.0, 20.0] {
        for n in 1..=4 {
            let brute: f64 = (0..400u64)
                .map(|k| (k as f64).powi(n as i32) * (k as f64 * f64::ln(mean) - mean - ln_factorial(k)).exp())
                .sum();
            mom = mom.max(rel(moment_from_mean(n, mean)?, brute));
        }
    }
    let mut q: f64 = 0.0;
    for eta in [1u32, 3, 7, 15] {
        for x in [0.2, 2.0, 9.0, 30.0] {
            let s: f64 = (0..eta as u64).map(|j| (j as f64 * f64::ln(x) - x - ln_factorial(j)).exp()).sum();
            q = q.max((reg_gamma_q(eta, x)? - s).abs());
        }
    }
    Ok(Check {
        name: "special-function and combinatorial identities",
        pass: fd < 1e-6 && parts && mom < 1e-8 && q < 1e-12,
        detail: format!("K0' + K1 {fd:.1e}; partitions ok: {parts}; Poisson moments {mom:.1e}; Q vs sums {q:.1e}"),
    })
}

fn impulse(env: &EnvParams, seed: u64) -> Result<Check, CliError> {
    let b = Point2::from_um(0.0, 5.0);
    let taus = [0.005, 0.02, 0.08];
    let sim = impulse_fractions(env, b, &taus, 4_000_000, seed)?;
    let mut worst: f64 = 0.0;
    for (&t, &s) in taus.iter().zip(&sim) {
        worst = worst.max(rel(s, impulse_response(b, t, env)?.mean_count));
    }
    Ok(Check {
        name: "impulse response vs 4e6 molecules",
        pass: worst < 0.05,
        detail: format!("max relative gap {:.2}% at |b| = 5 µm", 100.0 * worst),
    })
}

fn cooperators(cfg: &SimConfig) -> Result<Check, CliError> {
    let eta = 3;
    let c = cfg.clone().with_realizations(1000);
    let sim = run_batch(&c)?.summary(eta).z;
    let an = CoopProfile::build(&c.env, ProbMode::EXACT, eta)?.mean_cooperators(eta)?;
    Ok(Check {
        name: "mean cooperators vs simulation",
        pass: rel(sim.mean, an) < 0.05,
        detail: format!("R1 = 150 µm, η = {eta}: simulated {:.3}, analytic {an:.3}", sim.mean),
    })
}

fn determinism(cfg: &SimConfig) -> Result<Check, CliError> {
    let c = cfg.clone().with_realizations(16);
    let a = run_batch(&c)?;
    let b = run_batch(&c)?;
    Ok(Check {
        name: "batch determinism",
        pass: a == b,
        detail: format!("two runs of {} realizations identical: {}", c.realizations, a == b),
    })
}

/// Print the report; true when every check passed.
pub fn run(cfg: &Resolved, a: &VerifyArgs) -> Result<bool, CliError> {
    let env = EnvParams::reference();
    let seed = cfg.seed;
    let mut sim = SimConfig::new(env).with_seed(seed);
    if !(a.inject_variance_scale > 0.0) {
        return Err(CliError::Config("variance scale must be positive".into()));
    }
    sim.step_variance_scale = a.inject_variance_scale;
    let mut pop = sim.clone();
    pop.env = env.with_pop_radius_fixed_count(150.0 * UM);
    pop.dt = quorum_core::simulator::default_dt(&pop.env);

    let checks = vec![
        brownian(&sim, seed),
        degradation(&sim, seed.wrapping_add(1)),
        self_response(&env)?,
        uca(&env)?,
        identities()?,
        impulse(&env, seed.wrapping_add(2))?,
        cooperators(&pop)?,
        determinism(&pop)?,
    ];
    let mut failed = 0;
    for c in &checks {
        if !c.pass {
            failed += 1;
        }
        println!("[{}] {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    println!("verify: {} checks, {failed} failed (seed {seed})", checks.len());
    Ok(failed == 0)
}
