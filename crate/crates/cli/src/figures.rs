//! Figure presets. Each preset fixes R1, the bacteria count and the
//! receiver geometry of one published plot; D, k, q, R0, the seed and the
//! simulation settings still come from the configuration.

use clap::{Args, ValueEnum};
use quorum_core::channel::{
    aggregate_response_at, continuous_response_at, continuous_response_nodeg, impulse_response,
    impulse_self_response, self_response_at, AggregateMode, ChannelModel, PointwiseMode,
};
use quorum_core::cooperation::CoopModel;
use quorum_core::params::{density_for_count, per_um2_to_per_m2, EnvParams, Point2, UM};
use quorum_core::pointprocess::{realization_seed, sample_disk_ppp};
use quorum_core::popstats::{ccdf_from, fit_pmf_from, moment_from_mean, CoopProfile, FitModel, ProbMode};
use quorum_core::simulator::{
    default_dt, impulse_fractions, observe, observe_receivers, run_batch, BatchResult, Estimate, SimConfig,
};
use rayon::prelude::*;

use crate::commands::positions_table;
use crate::config::Resolved;
use crate::output::{Cell, Table};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FigureId {
    /// Mean observation vs time at (10, 10) µm, R1 = 20 µm
    #[value(name = "3")]
    F3,
    /// Impulse response, 1e5 molecules, RX at (0, 5) µm and (0, 0)
    #[value(name = "5a")]
    F5a,
    /// Continuous-emission responses vs time
    #[value(name = "5b")]
    F5b,
    /// Aggregate steady-state response for R1 = 50, 100, 150 µm
    #[value(name = "6a")]
    F6a,
    /// Cooperating probability vs η
    #[value(name = "6b")]
    F6b,
    /// One realization: positions and decisions, R1 = 50 µm
    #[value(name = "7")]
    F7,
    /// Mean number of cooperators vs η
    #[value(name = "8")]
    F8,
    /// Moments vs η, R1 = 50 µm
    #[value(name = "9a")]
    F9a,
    /// Moments vs η, R1 = 100 µm
    #[value(name = "9b")]
    F9b,
    /// Moments vs η, R1 = 150 µm
    #[value(name = "9c")]
    F9c,
    /// PMF of Z, R1 = 50 µm, η = 1
    #[value(name = "10a")]
    F10a,
    /// PMF of Z, R1 = 100 µm, η = 1
    #[value(name = "10b")]
    F10b,
    /// PMF of Z, R1 = 150 µm, η = 1
    #[value(name = "10c")]
    F10c,
    /// PMF of Z, R1 = 50 µm, η = 5
    #[value(name = "10d")]
    F10d,
    /// PMF of Z, R1 = 100 µm, η = 5
    #[value(name = "10e")]
    F10e,
    /// PMF of Z, R1 = 150 µm, η = 5
    #[value(name = "10f")]
    F10f,
    /// Peak-PMF deviations of the Poisson and Gaussian fits, cases (a) to (f)
    #[value(name = "table1")]
    Table1,
    /// P(Z ≥ z_min) vs η
    #[value(name = "ccdf")]
    Ccdf,
    /// Cooperating pairs of nth nearest neighbours vs R1
    #[value(name = "11")]
    F11,
    /// Mean cooperators for mobile bacteria, D_b ∈ {0, 1e-11, 1e-9} m²/s
    #[value(name = "mobile")]
    Mobile,
}

#[derive(Debug, Clone, Args)]
pub struct FigureArgs {
    #[arg(value_enum)]
    pub id: FigureId,
    /// Threshold of the ccdf preset
    #[arg(long, default_value_t = 10)]
    pub z_min: u64,
}

const RADII_UM: [f64; 3] = [50.0, 100.0, 150.0];
const PMF_CASES: [(char, f64, u32); 6] = [
    ('a', 50.0, 1),
    ('b', 100.0, 1),
    ('c', 150.0, 1),
    ('d', 50.0, 5),
    ('e', 100.0, 5),
    ('f', 150.0, 5),
];
/// Molecules per impulse in the impulse preset.
const IMPULSE_MOLECULES: f64 = 1e5;

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
        .collect()
}

/// Configured environment with R1 set and 100 expected bacteria.
fn preset_env(cfg: &Resolved, r1_um: f64) -> Result<EnvParams, CliError> {
    let mut p = cfg.env_params()?;
    p.pop_radius = r1_um * UM;
    p.density = density_for_count(100.0, p.pop_radius);
    Ok(p)
}

fn sim_for(cfg: &Resolved, env: EnvParams, default_realizations: u64) -> Result<SimConfig, CliError> {
    let mut c = cfg.sim_config()?;
    c.env = env;
    c.dt = cfg.sim.dt.unwrap_or_else(|| default_dt(&env));
    c.realizations = cfg.sim.realizations.unwrap_or(default_realizations);
    c.validate()?;
    Ok(c)
}

/// Mean of `f(seed)` over the configured realizations, in parallel.
fn mc_mean<F>(c: &SimConfig, f: F) -> Result<Estimate, CliError>
where
    F: Fn(u64) -> quorum_core::Result<u32> + Sync,
{
    let xs: Vec<u32> = (0..c.realizations)
        .into_par_iter()
        .map(|i| f(realization_seed(c.master_seed, i)))
        .collect::<quorum_core::Result<_>>()?;
    Ok(Estimate::from_samples(xs.into_iter().map(f64::from)))
}

fn gaussian_pmf(mean: f64, var: f64, z: f64) -> f64 {
    (-(z - mean).powi(2) / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt()
}

pub fn run(cfg: &Resolved, a: &FigureArgs) -> Result<Table, CliError> {
    if cfg.sweep.is_some() {
        return Err(CliError::Config("figure presets do not take a sweep".into()));
    }
    let mut t = match a.id {
        FigureId::F3 => fig3(cfg)?,
        FigureId::F5a => fig5a(cfg)?,
        FigureId::F5b => fig5b(cfg)?,
        FigureId::F6a => fig6a(cfg)?,
        FigureId::F6b => fig6b(cfg)?,
        FigureId::F7 => fig7(cfg)?,
        FigureId::F8 => fig8(cfg)?,
        FigureId::F9a => fig9(cfg, 50.0)?,
        FigureId::F9b => fig9(cfg, 100.0)?,
        FigureId::F9c => fig9(cfg, 150.0)?,
        FigureId::F10a => fig10(cfg, 0)?,
        FigureId::F10b => fig10(cfg, 1)?,
        FigureId::F10c => fig10(cfg, 2)?,
        FigureId::F10d => fig10(cfg, 3)?,
        FigureId::F10e => fig10(cfg, 4)?,
        FigureId::F10f => fig10(cfg, 5)?,
        FigureId::Table1 => table1(cfg)?,
        FigureId::Ccdf => ccdf(cfg, a.z_min)?,
        FigureId::F11 => fig11(cfg)?,
        FigureId::Mobile => mobile(cfg)?,
    };
    let id = a.id.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default();
    t.note("figure", id);
    Ok(t)
}

fn fig3(cfg: &Resolved) -> Result<Table, CliError> {
    let mut env = cfg.env_params()?;
    env.pop_radius = 20.0 * UM;
    env.density = per_um2_to_per_m2(7.9e-2);
    let x = Point2::from_um(10.0, 10.0);
    let mut t = Table::new(&["t_s", "analytic", "sim_mean", "ci_low", "ci_high"]);
    for time in log_grid(0.01, 2.0, 16) {
        let an = aggregate_response_at(x, time, &env, true)?.mean_count;
        let mut c = sim_for(cfg, env, 1000)?;
        c.sample_time = time;
        c.t_end = time;
        // Observer at x on top of a fresh field per realization.
        let est = mc_mean(&c, |seed| {
            let mut pts = vec![x];
            pts.extend(sample_disk_ppp(&env, seed).positions);
            Ok(observe(&c, &pts, seed)?[0])
        })?;
        t.push(vec![time.into(), an.into(), est.mean.into(), est.ci_low.into(), est.ci_high.into()]);
    }
    Ok(t)
}

fn fig5a(cfg: &Resolved) -> Result<Table, CliError> {
    let env = cfg.env_params()?;
    let taus = log_grid(1e-4, 1.0, 24);
    let n_impulses = cfg.sim.realizations.unwrap_or(100);
    let n = (IMPULSE_MOLECULES as u64) * n_impulses;
    let mut t = Table::new(&["case", "b_x_um", "b_y_um", "tau_s", "analytic", "sim"]);
    for (case, b) in [("i", Point2::from_um(0.0, 5.0)), ("ii", Point2::ORIGIN)] {
        let sim = impulse_fractions(&env, b, &taus, n, cfg.seed)?;
        for (&tau, &s) in taus.iter().zip(&sim) {
            let an = if b == Point2::ORIGIN {
                impulse_self_response(tau, &env)?
            } else {
                impulse_response(b, tau, &env)?
            };
            t.push(vec![
                case.into(),
                (b.x / UM).into(),
                (b.y / UM).into(),
                tau.into(),
                (IMPULSE_MOLECULES * an.mean_count).into(),
                (IMPULSE_MOLECULES * s).into(),
            ]);
        }
    }
    t.note("molecules_per_impulse", IMPULSE_MOLECULES);
    t.note("impulses", n_impulses);
    Ok(t)
}

fn fig5b(cfg: &Resolved) -> Result<Table, CliError> {
    let env = cfg.env_params()?;
    let mut nodeg = env;
    nodeg.degradation = 0.0;
    let cases = [
        ("iii", Point2::from_um(0.0, 5.0), env),
        ("iv", Point2::from_um(5.0, 0.0), nodeg),
        ("v", Point2::ORIGIN, env),
    ];
    let mut t = Table::new(&["case", "b_x_um", "b_y_um", "k", "t_s", "analytic", "sim_mean", "ci_low", "ci_high"]);
    for (case, b, p) in cases {
        for time in log_grid(0.01, 2.0, 12) {
            let an = if b == Point2::ORIGIN {
                self_response_at(time, &p)?
            } else if p.degradation == 0.0 {
                continuous_response_nodeg(b, time, &p)?
            } else {
                continuous_response_at(b, time, &p)?
            };
            let mut c = sim_for(cfg, p, 200)?;
            c.sample_time = time;
            c.t_end = time;
            let est = mc_mean(&c, |seed| {
                if b == Point2::ORIGIN {
                    Ok(observe(&c, &[Point2::ORIGIN], seed)?[0])
                } else {
                    Ok(observe_receivers(&c, &[Point2::ORIGIN], &[b], seed)?[0])
                }
            })?;
            t.push(vec![
                case.into(),
                (b.x / UM).into(),
                (b.y / UM).into(),
                p.degradation.into(),
                time.into(),
                an.mean_count.into(),
                est.mean.into(),
                est.ci_low.into(),
                est.ci_high.into(),
            ]);
        }
    }
    Ok(t)
}

/// Receiver locations of the aggregate presets: (R1/2, R1/2) for every
/// radius and the center for R1 = 50 µm.
fn rx_locations() -> Vec<(f64, Point2)> {
    let mut v: Vec<(f64, Point2)> = RADII_UM.iter().map(|&r| (r, Point2::from_um(r / 2.0, r / 2.0))).collect();
    v.push((50.0, Point2::ORIGIN));
    v
}

fn fig6a(cfg: &Resolved) -> Result<Table, CliError> {
    let mut t = Table::new(&["r1_um", "b_x_um", "b_y_um", "exact", "uca", "sim_mean", "ci_low", "ci_high"]);
    for (r1, b) in rx_locations() {
        let env = preset_env(cfg, r1)?;
        let model = ChannelModel::new(&env);
        let (exact, uca) = if b == Point2::ORIGIN {
            (
                model.aggregate(b, AggregateMode::Center3D)?,
                model.aggregate(b, AggregateMode::CenterUcaClosed)?,
            )
        } else {
            (model.aggregate(b, AggregateMode::Exact4D)?, model.aggregate(b, AggregateMode::Uca2D)?)
        };
        let c = sim_for(cfg, env, 1000)?;
        // Passive receiver at b: the field's molecules only.
        let est = mc_mean(&c, |seed| {
            let field = sample_disk_ppp(&env, seed).positions;
            Ok(observe_receivers(&c, &field, &[b], seed)?[0])
        })?;
        t.push(vec![
            r1.into(),
            (b.x / UM).into(),
            (b.y / UM).into(),
            exact.mean_count.into(),
            uca.mean_count.into(),
            est.mean.into(),
            est.ci_low.into(),
            est.ci_high.into(),
        ]);
    }
    Ok(t)
}

fn fig6b(cfg: &Resolved) -> Result<Table, CliError> {
    let eta_max = cfg.eta();
    let mut t = Table::new(&[
        "r1_um", "x_um", "y_um", "eta", "exact", "exact_uca_kernel", "approx", "sim", "ci_low", "ci_high",
    ]);
    for (r1, x) in rx_locations() {
        let env = preset_env(cfg, r1)?;
        let exact = CoopModel::new(&env, PointwiseMode::Exact)?.prob_exact_all(x.norm(), eta_max)?;
        let uca = CoopModel::new(&env, PointwiseMode::Uca)?;
        let exact_uca = uca.prob_exact_all(x.norm(), eta_max)?;
        let mut c = sim_for(cfg, env, 1000)?;
        c.tagged = Some(x);
        let batch = run_batch(&c)?;
        for eta in 1..=eta_max {
            let i = eta as usize - 1;
            let (sim, (lo, hi)) = batch.tagged_coop(eta).expect("tagged run");
            t.push(vec![
                r1.into(),
                (x.x / UM).into(),
                (x.y / UM).into(),
                eta.into(),
                exact[i].into(),
                exact_uca[i].into(),
                uca.prob_approx(x.norm(), eta)?.into(),
                sim.into(),
                lo.into(),
                hi.into(),
            ]);
        }
    }
    Ok(t)
}

fn fig7(cfg: &Resolved) -> Result<Table, CliError> {
    let mut env = preset_env(cfg, 50.0)?;
    env.threshold = cfg.env.eta.unwrap_or(5);
    let mut c = sim_for(cfg, env, 1)?;
    c.realizations = 1;
    let batch = run_batch(&c)?;
    let o = &batch.outcomes[0];
    let mut t = positions_table(o);
    t.note("eta", env.threshold);
    t.note("cooperators", o.cooperator_count);
    Ok(t)
}

/// Simulated batch plus analytic exact means for η = 1..eta_max.
fn population(cfg: &Resolved, r1: f64, eta_max: u32) -> Result<(BatchResult, Vec<f64>), CliError> {
    let env = preset_env(cfg, r1)?;
    let batch = run_batch(&sim_for(cfg, env, 1000)?)?;
    let means = CoopProfile::build_with_tol(&env, ProbMode::EXACT, eta_max, cfg.tol)?.mean_cooperators_all()?;
    Ok((batch, means))
}

fn fig8(cfg: &Resolved) -> Result<Table, CliError> {
    let eta_max = cfg.eta();
    let mut t = Table::new(&["r1_um", "eta", "analytic_exact", "analytic_approx", "sim_mean", "ci_low", "ci_high"]);
    for r1 in RADII_UM {
        let (batch, exact) = population(cfg, r1, eta_max)?;
        let approx = CoopProfile::build_with_tol(&preset_env(cfg, r1)?, ProbMode::APPROX, eta_max, cfg.tol)?
            .mean_cooperators_all()?;
        for eta in 1..=eta_max {
            let s = batch.summary(eta).z;
            let i = eta as usize - 1;
            t.push(vec![
                r1.into(),
                eta.into(),
                exact[i].into(),
                approx[i].into(),
                s.mean.into(),
                s.ci_low.into(),
                s.ci_high.into(),
            ]);
        }
    }
    Ok(t)
}

fn fig9(cfg: &Resolved, r1: f64) -> Result<Table, CliError> {
    let eta_max = cfg.eta();
    let (batch, means) = population(cfg, r1, eta_max)?;
    let mut t = Table::new(&[
        "eta", "mean", "variance", "moment2", "moment3", "moment4", "sim_mean", "sim_variance", "sim_moment2",
        "sim_moment3", "sim_moment4",
    ]);
    for eta in 1..=eta_max {
        let m = means[eta as usize - 1];
        let zs = batch.z_values(eta);
        let n = zs.len() as f64;
        let raw = |k: i32| zs.iter().map(|&z| (z as f64).powi(k)).sum::<f64>() / n;
        let s = batch.summary(eta).z;
        t.push(vec![
            eta.into(),
            m.into(),
            m.into(),
            moment_from_mean(2, m)?.into(),
            moment_from_mean(3, m)?.into(),
            moment_from_mean(4, m)?.into(),
            s.mean.into(),
            s.variance.into(),
            raw(2).into(),
            raw(3).into(),
            raw(4).into(),
        ]);
    }
    t.note("r1_um", r1);
    Ok(t)
}

struct PeakDev {
    z: usize,
    sim: f64,
    poisson: f64,
    gaussian: f64,
}

fn peak(batch: &BatchResult, mean: f64, eta: u32) -> PeakDev {
    let s = batch.summary(eta);
    let (z, &sim) = s.pmf.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).expect("non-empty pmf");
    PeakDev {
        z,
        sim,
        poisson: fit_pmf_from(FitModel::Poisson, mean, mean, z as u64),
        gaussian: gaussian_pmf(mean, mean, z as f64),
    }
}

fn fig10(cfg: &Resolved, case: usize) -> Result<Table, CliError> {
    let (_, r1, eta) = PMF_CASES[case];
    let (batch, means) = population(cfg, r1, eta)?;
    let m = means[eta as usize - 1];
    let s = batch.summary(eta);
    let z_hi = (s.pmf.len() - 1).max((m + 5.0 * m.sqrt()).ceil() as usize);
    let mut t = Table::new(&["z", "sim_pmf", "ci_low", "ci_high", "poisson", "gaussian"]);
    for z in 0..=z_hi {
        let (sim, (lo, hi)) = match s.pmf.get(z) {
            Some(&p) => (p, s.pmf_ci[z]),
            None => (0.0, (0.0, 0.0)),
        };
        t.push(vec![
            z.into(),
            sim.into(),
            lo.into(),
            hi.into(),
            fit_pmf_from(FitModel::Poisson, m, m, z as u64).into(),
            gaussian_pmf(m, m, z as f64).into(),
        ]);
    }
    let p = peak(&batch, m, eta);
    t.note("r1_um", r1);
    t.note("eta", eta);
    t.note("peak_z", p.z);
    t.note("peak_deviation_poisson", (p.poisson - p.sim).abs() / p.sim);
    t.note("peak_deviation_gaussian", (p.gaussian - p.sim).abs() / p.sim);
    Ok(t)
}

fn table1(cfg: &Resolved) -> Result<Table, CliError> {
    let mut t = Table::new(&[
        "case", "r1_um", "eta", "peak_z", "sim_peak", "poisson", "gaussian", "dev_poisson", "dev_gaussian",
    ]);
    for r1 in RADII_UM {
        let (batch, means) = population(cfg, r1, 5)?;
        for (tag, _, eta) in PMF_CASES.iter().filter(|c| c.1 == r1) {
            let p = peak(&batch, means[*eta as usize - 1], *eta);
            t.push(vec![
                tag.to_string().into(),
                r1.into(),
                (*eta).into(),
                p.z.into(),
                p.sim.into(),
                p.poisson.into(),
                p.gaussian.into(),
                ((p.poisson - p.sim).abs() / p.sim).into(),
                ((p.gaussian - p.sim).abs() / p.sim).into(),
            ]);
        }
    }
    t.rows.sort_by(|a, b| match (&a[0], &b[0]) {
        (Cell::Text(x), Cell::Text(y)) => x.cmp(y),
        _ => std::cmp::Ordering::Equal,
    });
    Ok(t)
}

fn ccdf(cfg: &Resolved, z_min: u64) -> Result<Table, CliError> {
    let eta_max = cfg.eta();
    let mut t = Table::new(&["r1_um", "eta", "z_min", "poisson", "sim", "ci_low", "ci_high"]);
    for r1 in RADII_UM {
        let (batch, means) = population(cfg, r1, eta_max)?;
        for eta in 1..=eta_max {
            let m = means[eta as usize - 1];
            let (sim, (lo, hi)) = batch.ccdf(eta, z_min);
            t.push(vec![
                r1.into(),
                eta.into(),
                z_min.into(),
                ccdf_from(FitModel::Poisson, m, m, z_min)?.into(),
                sim.into(),
                lo.into(),
                hi.into(),
            ]);
        }
    }
    Ok(t)
}

fn fig11(cfg: &Resolved) -> Result<Table, CliError> {
    let grid = [20.0, 30.0, 50.0, 75.0, 100.0, 150.0, 200.0, 300.0, 500.0];
    let etas = [1u32, 3, 5];
    let mut t = Table::new(&["r1_um", "eta", "p1", "p2"]);
    for r1 in grid {
        let prof = CoopProfile::build_with_tol(&preset_env(cfg, r1)?, ProbMode::EXACT, 5, cfg.tol)?;
        let p1 = prof.pair_coop_count_all(1)?;
        let p2 = prof.pair_coop_count_all(2)?;
        for eta in etas {
            let i = eta as usize - 1;
            t.push(vec![r1.into(), eta.into(), p1[i].into(), p2[i].into()]);
        }
    }
    Ok(t)
}

fn mobile(cfg: &Resolved) -> Result<Table, CliError> {
    let eta_max = cfg.eta();
    let env = preset_env(cfg, 50.0)?;
    let stat = CoopProfile::build_with_tol(&env, ProbMode::EXACT, eta_max, cfg.tol)?.mean_cooperators_all()?;
    let mut t = Table::new(&["d_b", "eta", "analytic_static", "sim_mean", "ci_low", "ci_high"]);
    for db in [0.0, 1e-11, 1e-9] {
        let mut c = sim_for(cfg, env, 1000)?;
        c.bacteria_diffusion = db;
        let batch = run_batch(&c)?;
        for eta in 1..=eta_max {
            let s = batch.summary(eta).z;
            t.push(vec![
                db.into(),
                eta.into(),
                stat[eta as usize - 1].into(),
                s.mean.into(),
                s.ci_low.into(),
                s.ci_high.into(),
            ]);
        }
    }
    Ok(t)
}
