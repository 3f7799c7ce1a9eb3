//! Particle-based Monte Carlo of the quorum-sensing model.
//!
//! Molecules are released at the bacteria centers at the instants of a
//! rate-q Poisson process, perform Brownian motion with diffusion
//! coefficient D, and survive each interval of length Δt with probability
//! e^{−kΔt}. Each bacterium counts the molecules within R0 of its center at
//! the sample time (its own included) and cooperates when the count reaches η.
//!
//! Two engines produce the same process:
//!
//! * [`Engine::Snapshot`] samples the state at the sample time directly. A
//!   molecule released at s is alive at t with probability e^{−k(t−s)} and
//!   sits at source + N(0, 2D(t−s)) per axis. Thinning a Poisson process
//!   leaves a Poisson process, so the survivors can be drawn as a
//!   Poisson(q(1−e^{−kt})/k) count with ages from the truncated exponential
//!   density ∝ e^{−ka} on [0, t] ([`ReleaseSampling::ThinnedPoisson`]). The
//!   literal alternative draws every exponential gap and thins
//!   ([`ReleaseSampling::ExponentialGaps`]). Both are exact in continuous time.
//! * [`Engine::Stepped`] advances every molecule by Δt at a time. It is the
//!   slow reference and the subject of the calibration checks.
//!
//! Mobile bacteria (D_b > 0) follow Brownian paths; a molecule starts from
//! its emitter's position at the release instant.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{EnvParams, Point2};
use crate::pointprocess::{
    poisson_count, realization_seed, release_times_with, sample_disk_ppp_with, stream_rng, StreamKind,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Engine {
    Snapshot,
    Stepped,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReleaseSampling {
    ThinnedPoisson,
    ExponentialGaps,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub env: EnvParams,
    /// Time step (s); used by the stepped engine and validated for both.
    pub dt: f64,
    pub t_end: f64,
    pub realizations: u64,
    pub master_seed: u64,
    /// Diffusion coefficient of the bacteria themselves (m²/s).
    pub bacteria_diffusion: f64,
    pub sample_time: f64,
    pub engine: Engine,
    pub release: ReleaseSampling,
    /// Extra bacterium at a fixed position, observation index 0. The other
    /// bacteria then form a PPP of density λ́ so the expected total stays
    /// λπR1².
    pub tagged: Option<Point2>,
    /// Multiplies the per-step displacement variance. Fault-injection hook;
    /// anything other than 1 is a deliberately wrong simulator.
    pub step_variance_scale: f64,
}

/// Default sample time: twice the ≈0.5 s after which the mean observation
/// is flat for the reference parameters.
pub const DEFAULT_SAMPLE_TIME: f64 = 1.0;

/// Largest Δt allowed for `env`: min(R0²/(40D), 0.1/k).
pub fn max_dt(env: &EnvParams) -> f64 {
    let a = env.rx_radius * env.rx_radius / (40.0 * env.diffusion);
    if env.degradation > 0.0 {
        a.min(0.1 / env.degradation)
    } else {
        a
    }
}

/// min(1e-4 s, [`max_dt`]).
pub fn default_dt(env: &EnvParams) -> f64 {
    1e-4f64.min(max_dt(env))
}

impl SimConfig {
    pub fn new(env: EnvParams) -> Self {
        SimConfig {
            dt: default_dt(&env),
            env,
            t_end: DEFAULT_SAMPLE_TIME,
            realizations: 1000,
            master_seed: 1,
            bacteria_diffusion: 0.0,
            sample_time: DEFAULT_SAMPLE_TIME,
            engine: Engine::Snapshot,
            release: ReleaseSampling::ThinnedPoisson,
            tagged: None,
            step_variance_scale: 1.0,
        }
    }

    pub fn with_realizations(mut self, n: u64) -> Self {
        self.realizations = n;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.master_seed = seed;
        self
    }

    pub fn with_times(mut self, sample_time: f64) -> Self {
        self.sample_time = sample_time;
        self.t_end = sample_time;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let e = &self.env;
        let bad = |m: String| Err(Error::ConfigInvalid(m));
        for (name, v) in [
            ("diffusion", e.diffusion),
            ("emission_rate", e.emission_rate),
            ("rx_radius", e.rx_radius),
            ("pop_radius", e.pop_radius),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return bad(format!("{name} must be positive and finite, got {v}"));
            }
        }
        if !(e.degradation >= 0.0) || !(e.density >= 0.0) {
            return bad("degradation and density must be >= 0".into());
        }
        if e.threshold == 0 {
            return bad("threshold must be >= 1".into());
        }
        if !(self.dt > 0.0) {
            return bad(format!("dt must be > 0, got {}", self.dt));
        }
        let lim = max_dt(e);
        if self.dt > lim * (1.0 + 1e-12) {
            return bad(format!("dt = {} exceeds min(R0²/(40D), 0.1/k) = {lim}", self.dt));
        }
        if !(self.sample_time > 0.0) || !(self.t_end >= self.sample_time) || !self.t_end.is_finite() {
            return bad(format!(
                "need 0 < sample_time <= t_end, got {} and {}",
                self.sample_time, self.t_end
            ));
        }
        if self.realizations == 0 {
            return bad("realizations must be >= 1".into());
        }
        if !(self.bacteria_diffusion >= 0.0) || !self.bacteria_diffusion.is_finite() {
            return bad(format!("bacteria_diffusion must be >= 0, got {}", self.bacteria_diffusion));
        }
        if !(self.step_variance_scale > 0.0) {
            return bad("step_variance_scale must be > 0".into());
        }
        if self.tagged.is_some() && e.expected_count() < 1.0 {
            return bad("a tagged bacterium needs λπR1² >= 1".into());
        }
        Ok(())
    }

    /// Density of the random (untagged) bacteria.
    fn field_density(&self) -> f64 {
        match self.tagged {
            Some(_) => self.env.reduced_density().unwrap_or(0.0),
            None => self.env.density,
        }
    }
}

/// One realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimOutcome {
    /// Initial bacteria positions (tagged bacterium first when present).
    pub positions: Vec<Point2>,
    pub per_bacterium_obs: Vec<u32>,
    pub decisions: Vec<bool>,
    pub cooperator_count: u64,
    pub realization_seed: u64,
}

impl SimOutcome {
    /// Cooperators at another threshold, from the stored observations.
    pub fn cooperators_at(&self, eta: u32) -> u64 {
        self.per_bacterium_obs.iter().filter(|&&o| o >= eta).count() as u64
    }
}

#[inline]
fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Uniform-grid index of observer positions for radius-R0 counting.
struct ObserverGrid {
    x0: f64,
    y0: f64,
    inv: f64,
    nx: i64,
    ny: i64,
    starts: Vec<u32>,
    order: Vec<u32>,
    pts: Vec<Point2>,
    r2: f64,
}

impl ObserverGrid {
    fn new(pts: &[Point2], r0: f64) -> Self {
        let (mut xmin, mut ymin, mut xmax, mut ymax) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
        for p in pts {
            xmin = xmin.min(p.x);
            ymin = ymin.min(p.y);
            xmax = xmax.max(p.x);
            ymax = ymax.max(p.y);
        }
        if pts.is_empty() {
            xmin = 0.0;
            ymin = 0.0;
            xmax = 0.0;
            ymax = 0.0;
        }
        let span = (xmax - xmin).max(ymax - ymin);
        let cell = r0.max(span / 256.0);
        let x0 = xmin - cell;
        let y0 = ymin - cell;
        let nx = ((xmax - x0) / cell).floor() as i64 + 2;
        let ny = ((ymax - y0) / cell).floor() as i64 + 2;
        let inv = 1.0 / cell;
        let ncell = (nx * ny) as usize;
        let cell_of = |p: &Point2| -> usize {
            let ix = ((p.x - x0) * inv).floor() as i64;
            let iy = ((p.y - y0) * inv).floor() as i64;
            (iy * nx + ix) as usize
        };
        let mut counts = vec![0u32; ncell + 1];
        for p in pts {
            counts[cell_of(p) + 1] += 1;
        }
        for i in 0..ncell {
            counts[i + 1] += counts[i];
        }
        let mut fill = counts.clone();
        let mut order = vec![0u32; pts.len()];
        for (i, p) in pts.iter().enumerate() {
            let c = cell_of(p);
            order[fill[c] as usize] = i as u32;
            fill[c] += 1;
        }
        ObserverGrid {
            x0,
            y0,
            inv,
            nx,
            ny,
            starts: counts,
            order,
            pts: pts.to_vec(),
            r2: r0 * r0,
        }
    }

    #[inline]
    fn count(&self, x: f64, y: f64, obs: &mut [u32]) {
        let fx = (x - self.x0) * self.inv;
        let fy = (y - self.y0) * self.inv;
        if fx < -1.0 || fy < -1.0 || fx > (self.nx + 1) as f64 || fy > (self.ny + 1) as f64 {
            return;
        }
        let ix = fx.floor() as i64;
        let iy = fy.floor() as i64;
        for cy in (iy - 1).max(0)..=(iy + 1).min(self.ny - 1) {
            for cx in (ix - 1).max(0)..=(ix + 1).min(self.nx - 1) {
                let c = (cy * self.nx + cx) as usize;
                for &k in &self.order[self.starts[c] as usize..self.starts[c + 1] as usize] {
                    let p = self.pts[k as usize];
                    let dx = x - p.x;
                    let dy = y - p.y;
                    if dx * dx + dy * dy <= self.r2 {
                        obs[k as usize] += 1;
                    }
                }
            }
        }
    }
}

/// Age of a surviving molecule: density ∝ e^{−ka} on [0, t].
#[inline]
fn survivor_age(rng: &mut ChaCha8Rng, k: f64, t: f64) -> f64 {
    let u: f64 = rng.random();
    if k * t < 1e-12 {
        return u * t;
    }
    // Inverse CDF; −expm1(−kt) keeps precision for small kt.
    -(-u * -(-k * t).exp_m1()).ln_1p() / k
}

/// Expected number of survivors at t from one emitter switched on at 0.
fn survivor_mean(q: f64, k: f64, t: f64) -> f64 {
    if k > 0.0 {
        q * -(-k * t).exp_m1() / k
    } else {
        q * t
    }
}

/// Survivor release instants (sorted ascending) for one emitter on [0, t].
fn survivor_release_times(cfg: &SimConfig, rng: &mut ChaCha8Rng, t: f64) -> Vec<f64> {
    let env = &cfg.env;
    let k = env.degradation;
    let mut out = match cfg.release {
        ReleaseSampling::ThinnedPoisson => {
            let n = poisson_count(rng, survivor_mean(env.emission_rate, k, t));
            (0..n).map(|_| t - survivor_age(rng, k, t)).collect::<Vec<_>>()
        }
        ReleaseSampling::ExponentialGaps => release_times_with(rng, env.emission_rate, t)
            .into_iter()
            .filter(|&s| {
                let u: f64 = rng.random();
                u < (-k * (t - s)).exp()
            })
            .collect(),
    };
    out.sort_by(f64::total_cmp);
    out
}

/// Observations at the sample time for bacteria starting at `initial`.
pub fn observe(cfg: &SimConfig, initial: &[Point2], seed: u64) -> Result<Vec<u32>> {
    match cfg.engine {
        Engine::Snapshot => Ok(observe_snapshot(cfg, initial, None, seed)),
        Engine::Stepped => Ok(observe_stepped(cfg, initial, None, seed)),
    }
}

/// Counts at fixed passive receivers that do not emit; `emitters` behave
/// as in [`observe`].
pub fn observe_receivers(cfg: &SimConfig, emitters: &[Point2], receivers: &[Point2], seed: u64) -> Result<Vec<u32>> {
    match cfg.engine {
        Engine::Snapshot => Ok(observe_snapshot(cfg, emitters, Some(receivers), seed)),
        Engine::Stepped => Ok(observe_stepped(cfg, emitters, Some(receivers), seed)),
    }
}

fn observe_snapshot(cfg: &SimConfig, initial: &[Point2], receivers: Option<&[Point2]>, seed: u64) -> Vec<u32> {
    let env = &cfg.env;
    let t = cfg.sample_time;
    let db = cfg.bacteria_diffusion;
    let s_mol = (2.0 * env.diffusion * cfg.step_variance_scale).sqrt();
    let s_bac = (2.0 * db).sqrt();
    let n = initial.len();

    // Release instants per emitter, and for mobile bacteria the emitter's
    // position at each instant plus its final position.
    let mut releases: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut sources: Vec<Vec<Point2>> = Vec::with_capacity(n);
    let mut finals: Vec<Point2> = Vec::with_capacity(n);
    for (j, &x0) in initial.iter().enumerate() {
        let mut rng = stream_rng(seed, StreamKind::Releases, j as u64);
        let times = survivor_release_times(cfg, &mut rng, t);
        if db > 0.0 {
            let mut mrng = stream_rng(seed, StreamKind::Motion, j as u64);
            let mut pos = x0;
            let mut last = 0.0;
            let mut src = Vec::with_capacity(times.len());
            for &s in &times {
                let sd = s_bac * (s - last).sqrt();
                pos.x += sd * normal(&mut mrng);
                pos.y += sd * normal(&mut mrng);
                last = s;
                src.push(pos);
            }
            let sd = s_bac * (t - last).sqrt();
            pos.x += sd * normal(&mut mrng);
            pos.y += sd * normal(&mut mrng);
            finals.push(pos);
            sources.push(src);
        } else {
            finals.push(x0);
        }
        releases.push(times);
    }

    let observers = receivers.unwrap_or(&finals);
    let grid = ObserverGrid::new(observers, env.rx_radius);
    let mut obs = vec![0u32; observers.len()];
    for (j, times) in releases.iter().enumerate() {
        let mut rng = stream_rng(seed, StreamKind::Molecules, j as u64);
        for (i, &s) in times.iter().enumerate() {
            let src = if db > 0.0 { sources[j][i] } else { initial[j] };
            let sd = s_mol * (t - s).sqrt();
            let x = src.x + sd * normal(&mut rng);
            let y = src.y + sd * normal(&mut rng);
            grid.count(x, y, &mut obs);
        }
    }
    obs
}

/// Literal time stepping shared by the stepped engine and the calibrations.
pub struct Stepper {
    pub sd: f64,
    pub survive: f64,
}

impl Stepper {
    pub fn new(diffusion: f64, degradation: f64, dt: f64, variance_scale: f64) -> Self {
        Stepper {
            sd: (2.0 * diffusion * dt * variance_scale).sqrt(),
            survive: (-degradation * dt).exp(),
        }
    }

    /// One Δt: returns false if the molecule degraded.
    #[inline]
    pub fn step(&self, rng: &mut ChaCha8Rng, p: &mut Point2) -> bool {
        if self.survive < 1.0 && rng.random::<f64>() >= self.survive {
            return false;
        }
        p.x += self.sd * normal(rng);
        p.y += self.sd * normal(rng);
        true
    }
}

fn observe_stepped(cfg: &SimConfig, initial: &[Point2], receivers: Option<&[Point2]>, seed: u64) -> Vec<u32> {
    let env = &cfg.env;
    let dt = cfg.dt;
    let steps = (cfg.sample_time / dt).round().max(1.0) as usize;
    let stepper = Stepper::new(env.diffusion, env.degradation, dt, cfg.step_variance_scale);
    let bac_sd = (2.0 * cfg.bacteria_diffusion * dt).sqrt();
    let n = initial.len();
    let t_stop = steps as f64 * dt;

    let release: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut rng = stream_rng(seed, StreamKind::Releases, j as u64);
            release_times_with(&mut rng, env.emission_rate, t_stop)
        })
        .collect();
    let mut next = vec![0usize; n];
    let mut bac: Vec<Point2> = initial.to_vec();
    let mut mrng = stream_rng(seed, StreamKind::Motion, 0);
    let mut rng = stream_rng(seed, StreamKind::Molecules, 0);
    let mut mols: Vec<Point2> = Vec::new();
    for step in 0..steps {
        let t1 = (step + 1) as f64 * dt;
        // Existing molecules take one full step.
        mols.retain_mut(|p| stepper.step(&mut rng, p));
        // New releases in (t0, t1] start at the emitter and cover the rest
        // of the step.
        for j in 0..n {
            while next[j] < release[j].len() && release[j][next[j]] <= t1 {
                let s = release[j][next[j]];
                next[j] += 1;
                let rem = t1 - s;
                if env.degradation > 0.0 && rng.random::<f64>() >= (-env.degradation * rem).exp() {
                    continue;
                }
                let sd = (2.0 * env.diffusion * cfg.step_variance_scale * rem).sqrt();
                mols.push(Point2 {
                    x: bac[j].x + sd * normal(&mut rng),
                    y: bac[j].y + sd * normal(&mut rng),
                });
            }
        }
        if bac_sd > 0.0 {
            for b in bac.iter_mut() {
                b.x += bac_sd * normal(&mut mrng);
                b.y += bac_sd * normal(&mut mrng);
            }
        }
    }
    let observers = receivers.unwrap_or(&bac);
    let grid = ObserverGrid::new(observers, env.rx_radius);
    let mut obs = vec![0u32; observers.len()];
    for p in &mols {
        grid.count(p.x, p.y, &mut obs);
    }
    obs
}

pub fn run_realization(cfg: &SimConfig, index: u64) -> Result<SimOutcome> {
    cfg.validate()?;
    Ok(realization(cfg, index))
}

fn realization(cfg: &SimConfig, index: u64) -> SimOutcome {
    let seed = realization_seed(cfg.master_seed, index);
    let mut rng = stream_rng(seed, StreamKind::Positions, 0);
    let mut positions = Vec::new();
    if let Some(p) = cfg.tagged {
        positions.push(p);
    }
    positions.extend(sample_disk_ppp_with(&mut rng, cfg.field_density(), cfg.env.pop_radius));
    let obs = match cfg.engine {
        Engine::Snapshot => observe_snapshot(cfg, &positions, None, seed),
        Engine::Stepped => observe_stepped(cfg, &positions, None, seed),
    };
    let eta = cfg.env.threshold;
    let decisions: Vec<bool> = obs.iter().map(|&o| o >= eta).collect();
    let cooperator_count = decisions.iter().filter(|&&d| d).count() as u64;
    SimOutcome {
        positions,
        per_bacterium_obs: obs,
        decisions,
        cooperator_count,
        realization_seed: seed,
    }
}

/// Independent realizations 0..realizations, in index order.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchResult {
    pub config: SimConfig,
    pub outcomes: Vec<SimOutcome>,
}

pub fn run_batch(cfg: &SimConfig) -> Result<BatchResult> {
    cfg.validate()?;
    let outcomes: Vec<SimOutcome> = (0..cfg.realizations)
        .into_par_iter()
        .map(|i| realization(cfg, i))
        .collect();
    Ok(BatchResult {
        config: cfg.clone(),
        outcomes,
    })
}

/// [`run_batch`] for mobile bacteria; rejects D_b < 0 like every config.
pub fn run_mobile(cfg: &SimConfig) -> Result<BatchResult> {
    run_batch(cfg)
}

/// Mean with a normal-approximation 95% interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub variance: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n: usize,
}

impl Estimate {
    pub fn from_samples<I: IntoIterator<Item = f64>>(xs: I) -> Self {
        let mut n = 0usize;
        let mut mean = 0.0;
        let mut m2 = 0.0;
        for x in xs {
            n += 1;
            let d = x - mean;
            mean += d / n as f64;
            m2 += d * (x - mean);
        }
        let variance = if n > 1 { m2 / (n - 1) as f64 } else { 0.0 };
        let half = 1.96 * (variance / n.max(1) as f64).sqrt();
        Estimate {
            mean,
            variance,
            ci_low: mean - half,
            ci_high: mean + half,
            n,
        }
    }

    pub fn std_err(&self) -> f64 {
        (self.variance / self.n.max(1) as f64).sqrt()
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.ci_low && v <= self.ci_high
    }
}

/// Wilson score interval for k successes in n trials at normal quantile z.
pub fn wilson_interval(k: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = k as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Summary of Z at one threshold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZSummary {
    pub eta: u32,
    pub z: Estimate,
    /// pmf[z] = fraction of realizations with Z = z.
    pub pmf: Vec<f64>,
    /// 95% Wilson bounds per pmf entry.
    pub pmf_ci: Vec<(f64, f64)>,
}

impl BatchResult {
    pub fn z_values(&self, eta: u32) -> Vec<u64> {
        self.outcomes.iter().map(|o| o.cooperators_at(eta)).collect()
    }

    pub fn summary(&self, eta: u32) -> ZSummary {
        let zs = self.z_values(eta);
        let n = zs.len() as u64;
        let zmax = zs.iter().copied().max().unwrap_or(0) as usize;
        let mut hist = vec![0u64; zmax + 1];
        for &z in &zs {
            hist[z as usize] += 1;
        }
        ZSummary {
            eta,
            z: Estimate::from_samples(zs.iter().map(|&z| z as f64)),
            pmf: hist.iter().map(|&h| h as f64 / n as f64).collect(),
            pmf_ci: hist.iter().map(|&h| wilson_interval(h, n, 1.96)).collect(),
        }
    }

    /// Fraction of realizations with Z ≥ z_min, with its Wilson interval.
    pub fn ccdf(&self, eta: u32, z_min: u64) -> (f64, (f64, f64)) {
        let zs = self.z_values(eta);
        let k = zs.iter().filter(|&&z| z >= z_min).count() as u64;
        let n = zs.len() as u64;
        (k as f64 / n as f64, wilson_interval(k, n, 1.96))
    }

    /// Observations of the tagged bacterium, one per realization.
    pub fn tagged_obs(&self) -> Option<Vec<u32>> {
        self.config.tagged?;
        Some(self.outcomes.iter().map(|o| o.per_bacterium_obs[0]).collect())
    }

    /// Fraction of realizations in which the tagged bacterium cooperates at η.
    pub fn tagged_coop(&self, eta: u32) -> Option<(f64, (f64, f64))> {
        let obs = self.tagged_obs()?;
        let k = obs.iter().filter(|&&o| o >= eta).count() as u64;
        let n = obs.len() as u64;
        Some((k as f64 / n as f64, wilson_interval(k, n, 1.96)))
    }

    /// Mean observation over every bacterium of every realization.
    pub fn mean_observation(&self) -> Estimate {
        Estimate::from_samples(
            self.outcomes
                .iter()
                .flat_map(|o| o.per_bacterium_obs.iter().map(|&v| v as f64)),
        )
    }
}

/// Single point source emitting `n_molecules` at τ = 0 at the origin; the
/// fraction inside the receiver at `b` at each τ in `taus` (ascending).
/// Trajectories are shared across τ: exact Gaussian increments between
/// observation times and an exponential lifetime per molecule.
pub fn impulse_fractions(env: &EnvParams, b: Point2, taus: &[f64], n_molecules: u64, seed: u64) -> Result<Vec<f64>> {
    if taus.is_empty() || taus[0] <= 0.0 || taus.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Domain("observation times must be positive and increasing".into()));
    }
    let r2 = env.rx_radius * env.rx_radius;
    let s = (2.0 * env.diffusion).sqrt();
    let sds: Vec<f64> = taus
        .iter()
        .scan(0.0, |last, &t| {
            let v = s * (t - *last).sqrt();
            *last = t;
            Some(v)
        })
        .collect();
    // Chunks of molecules use their own streams so the work can be split.
    const CHUNK: u64 = 1 << 16;
    let chunks = n_molecules.div_ceil(CHUNK);
    let counts: Vec<Vec<u64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream_rng(seed, StreamKind::Impulse, c);
            let m = CHUNK.min(n_molecules - c * CHUNK);
            let mut hits = vec![0u64; taus.len()];
            for _ in 0..m {
                let death = if env.degradation > 0.0 {
                    -(1.0 - rng.random::<f64>()).ln() / env.degradation
                } else {
                    f64::INFINITY
                };
                let (mut x, mut y) = (0.0, 0.0);
                for (i, &t) in taus.iter().enumerate() {
                    if t >= death {
                        break;
                    }
                    x += sds[i] * normal(&mut rng);
                    y += sds[i] * normal(&mut rng);
                    let dx = x - b.x;
                    let dy = y - b.y;
                    if dx * dx + dy * dy <= r2 {
                        hits[i] += 1;
                    }
                }
            }
            hits
        })
        .collect();
    let mut tot = vec![0u64; taus.len()];
    for h in counts {
        for (t, v) in tot.iter_mut().zip(h) {
            *t += v;
        }
    }
    Ok(tot.into_iter().map(|h| h as f64 / n_molecules as f64).collect())
}

/// Per-axis displacement statistics of `n_steps` single steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BrownianCalibration {
    pub var_x: f64,
    pub var_y: f64,
    pub cov_xy: f64,
    pub expected: f64,
}

pub fn brownian_calibration(cfg: &SimConfig, n_steps: u64, seed: u64) -> BrownianCalibration {
    let st = Stepper::new(cfg.env.diffusion, 0.0, cfg.dt, cfg.step_variance_scale);
    let mut rng = stream_rng(seed, StreamKind::Molecules, 0);
    let (mut sx, mut sy, mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for _ in 0..n_steps {
        let mut p = Point2 { x: 0.0, y: 0.0 };
        st.step(&mut rng, &mut p);
        sx += p.x;
        sy += p.y;
        sxx += p.x * p.x;
        syy += p.y * p.y;
        sxy += p.x * p.y;
    }
    let n = n_steps as f64;
    let (mx, my) = (sx / n, sy / n);
    BrownianCalibration {
        var_x: sxx / n - mx * mx,
        var_y: syy / n - my * my,
        cov_xy: sxy / n - mx * my,
        expected: 2.0 * cfg.env.diffusion * cfg.dt,
    }
}

/// Survivors after each of `m_steps` steps starting from `n` molecules.
pub fn degradation_calibration(cfg: &SimConfig, n: u64, m_steps: usize, seed: u64) -> Vec<u64> {
    let st = Stepper::new(cfg.env.diffusion, cfg.env.degradation, cfg.dt, cfg.step_variance_scale);
    let mut rng = stream_rng(seed, StreamKind::Molecules, 1);
    let mut alive: Vec<Point2> = vec![Point2 { x: 0.0, y: 0.0 }; n as usize];
    let mut out = Vec::with_capacity(m_steps);
    for _ in 0..m_steps {
        alive.retain_mut(|p| st.step(&mut rng, p));
        out.push(alive.len() as u64);
    }
    out
}

/// Two-sided binomial interval by exact quantiles, for calibration checks.
pub fn binomial_interval(n: u64, p: f64, coverage: f64) -> (u64, u64) {
    use statrs::distribution::{Binomial as B, DiscreteCDF};
    let d = B::new(p, n).expect("valid binomial");
    let a = (1.0 - coverage) / 2.0;
    (d.inverse_cdf(a), d.inverse_cdf(1.0 - a))
}
