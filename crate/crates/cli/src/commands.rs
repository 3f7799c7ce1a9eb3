use std::path::PathBuf;

use clap::{Args, ValueEnum};
use quorum_core::channel::{
    aggregate_response_at, continuous_response_at, continuous_response_nodeg, continuous_response_uca,
    continuous_self_response, impulse_response, impulse_self_response, self_response_at, AggregateMode,
    ChannelModel, ChannelResult, PointwiseMode,
};
use quorum_core::cooperation::CoopModel;
use quorum_core::params::{m_to_um, EnvParams, Point2};
use quorum_core::popstats::{shape_from_mean, moment_from_mean, CoopProfile, ProbMode};
use quorum_core::simulator::run_batch;

use crate::config::Resolved;
use crate::output::{Cell, Table};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ChannelMode {
    /// Single molecule released at the origin, observed at b after t
    Impulse,
    /// Receiver centered on the emitter, after t
    ImpulseSelf,
    /// Steady state from a point source, uniform-concentration receiver
    ContinuousUca,
    /// Steady state of the receiver's own emissions
    ContinuousSelf,
    /// Point source without degradation after emitting for t
    ContinuousNodeg,
    /// Point source after emitting for t (exact receiver)
    ContinuousAt,
    /// Own emissions after emitting for t
    SelfAt,
    /// Steady state from the bacteria field, exact receiver
    AggregateExact,
    /// Steady state from the bacteria field, uniform-concentration receiver
    AggregateUca,
    /// Field steady state at the center by triple quadrature
    AggregateCenter,
    /// Field steady state at the center, closed form
    AggregateCenterUca,
    /// Field after emitting for t, own emissions included
    AggregateAt,
}

#[derive(Debug, Clone, Args)]
pub struct ChannelArgs {
    #[arg(long, value_enum)]
    pub mode: ChannelMode,
    /// Receiver x coordinate (µm)
    #[arg(long, default_value_t = 0.0)]
    pub b: f64,
    /// Receiver y coordinate (µm)
    #[arg(long, default_value_t = 0.0)]
    pub by: f64,
    /// Time (s) for the time-dependent modes
    #[arg(long)]
    pub t: Option<f64>,
}

fn need_t(a: &ChannelArgs) -> Result<f64, CliError> {
    a.t.ok_or_else(|| CliError::Config(format!("--t is required for mode {:?}", a.mode)))
}

pub fn channel_value(p: &EnvParams, a: &ChannelArgs) -> Result<ChannelResult, CliError> {
    let b = Point2::from_um(a.b, a.by);
    let model = || ChannelModel::new(p);
    Ok(match a.mode {
        ChannelMode::Impulse => impulse_response(b, need_t(a)?, p)?,
        ChannelMode::ImpulseSelf => impulse_self_response(need_t(a)?, p)?,
        ChannelMode::ContinuousUca => continuous_response_uca(b, p)?,
        ChannelMode::ContinuousSelf => continuous_self_response(p)?,
        ChannelMode::ContinuousNodeg => continuous_response_nodeg(b, need_t(a)?, p)?,
        ChannelMode::ContinuousAt => continuous_response_at(b, need_t(a)?, p)?,
        ChannelMode::SelfAt => self_response_at(need_t(a)?, p)?,
        ChannelMode::AggregateExact => model().aggregate(b, AggregateMode::Exact4D)?,
        ChannelMode::AggregateUca => model().aggregate(b, AggregateMode::Uca2D)?,
        ChannelMode::AggregateCenter => model().aggregate(b, AggregateMode::Center3D)?,
        ChannelMode::AggregateCenterUca => model().aggregate(b, AggregateMode::CenterUcaClosed)?,
        ChannelMode::AggregateAt => aggregate_response_at(b, need_t(a)?, p, true)?,
    })
}

pub fn channel(cfg: &Resolved, a: &ChannelArgs) -> Result<Table, CliError> {
    let p = cfg.env_params()?;
    let r = channel_value(&p, a)?;
    let mut t = Table::new(&["mode", "b_x_um", "b_y_um", "t_s", "mean_count", "err_est", "method"]);
    let mode = a.mode.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default();
    t.push(vec![
        mode.into(),
        a.b.into(),
        a.by.into(),
        a.t.map(Cell::Num).unwrap_or_else(|| "".into()),
        r.mean_count.into(),
        r.err_est.into(),
        format!("{:?}", r.method).into(),
    ]);
    Ok(t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KernelArg {
    Exact,
    Uca,
}

impl From<KernelArg> for PointwiseMode {
    fn from(k: KernelArg) -> Self {
        match k {
            KernelArg::Exact => PointwiseMode::Exact,
            KernelArg::Uca => PointwiseMode::Uca,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct CoopArgs {
    /// Bacterium x coordinate (µm)
    #[arg(long, default_value_t = 0.0)]
    pub x: f64,
    /// Bacterium y coordinate (µm)
    #[arg(long, default_value_t = 0.0)]
    pub y: f64,
    /// Pointwise kernel of the exact probability
    #[arg(long, value_enum, default_value_t = KernelArg::Exact)]
    pub kernel: KernelArg,
}

fn coop_model(cfg: &Resolved, p: &EnvParams, k: PointwiseMode) -> Result<CoopModel, CliError> {
    let m = CoopModel::new(p, k)?;
    Ok(match cfg.tol {
        Some(t) => {
            let spec = m.spec().with_rel(t);
            m.with_spec(spec)
        }
        None => m,
    })
}

pub fn coop_prob(cfg: &Resolved, a: &CoopArgs) -> Result<Table, CliError> {
    let p = cfg.env_params()?;
    p.check(quorum_core::Purpose::Cooperation)?;
    let x = Point2::from_um(a.x, a.y);
    if x.norm() > p.pop_radius {
        return Err(CliError::Config(format!(
            "bacterium at |x| = {} µm lies outside R1 = {} µm",
            m_to_um(x.norm()),
            m_to_um(p.pop_radius)
        )));
    }
    let eta = cfg.eta();
    let exact = coop_model(cfg, &p, a.kernel.into())?.prob_exact_all(x.norm(), eta)?;
    let approx = coop_model(cfg, &p, PointwiseMode::Uca)?;
    let mut t = Table::new(&["eta", "x_um", "y_um", "exact", "approx"]);
    for e in 1..=eta {
        t.push(vec![
            e.into(),
            a.x.into(),
            a.y.into(),
            exact[e as usize - 1].into(),
            approx.prob_approx(x.norm(), e)?.into(),
        ]);
    }
    Ok(t)
}

pub fn stats(cfg: &Resolved) -> Result<Table, CliError> {
    let p = cfg.env_params()?;
    p.check(quorum_core::Purpose::Cooperation)?;
    let eta = cfg.eta();
    let exact = CoopProfile::build_with_tol(&p, ProbMode::EXACT, eta, cfg.tol)?.mean_cooperators_all()?;
    let approx = CoopProfile::build_with_tol(&p, ProbMode::APPROX, eta, cfg.tol)?.mean_cooperators_all()?;
    let mut t = Table::new(&[
        "eta", "mean_exact", "mean_approx", "variance", "moment2", "moment3", "moment4", "skewness", "kurtosis",
    ]);
    for e in 1..=eta {
        let m = exact[e as usize - 1];
        let (sk, ku) = shape_from_mean(m).unwrap_or((f64::INFINITY, f64::INFINITY));
        t.push(vec![
            e.into(),
            m.into(),
            approx[e as usize - 1].into(),
            m.into(),
            moment_from_mean(2, m)?.into(),
            moment_from_mean(3, m)?.into(),
            moment_from_mean(4, m)?.into(),
            sk.into(),
            ku.into(),
        ]);
    }
    Ok(t)
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// Also write the first realization (positions, counts, decisions) here
    #[arg(long)]
    pub positions: Option<PathBuf>,
}

pub fn simulate(cfg: &Resolved, a: &SimulateArgs) -> Result<Table, CliError> {
    let sim = cfg.sim_config()?;
    let eta = cfg.eta();
    let batch = run_batch(&sim)?;
    let analytic = if sim.env.degradation > 0.0 && sim.env.expected_count() >= 1.0 {
        Some(CoopProfile::build_with_tol(&sim.env, ProbMode::EXACT, eta, cfg.tol)?.mean_cooperators_all()?)
    } else {
        None
    };
    let mut t = Table::new(&["eta", "analytic_exact", "sim_mean", "ci_low", "ci_high", "sim_variance", "realizations"]);
    for e in 1..=eta {
        let s = batch.summary(e);
        t.push(vec![
            e.into(),
            analytic.as_ref().map(|v| v[e as usize - 1]).unwrap_or(f64::NAN).into(),
            s.z.mean.into(),
            s.z.ci_low.into(),
            s.z.ci_high.into(),
            s.z.variance.into(),
            sim.realizations.into(),
        ]);
    }
    if sim.bacteria_diffusion > 0.0 {
        t.note("analytic_exact", "static-bacteria model; bacteria_diffusion > 0 is simulated only");
    }
    if let Some(path) = &a.positions {
        write_positions(path, &batch.outcomes[0], cfg)?;
    }
    Ok(t)
}

pub fn positions_table(o: &quorum_core::simulator::SimOutcome) -> Table {
    let mut t = Table::new(&["x_um", "y_um", "obs", "cooperator"]);
    for ((p, &obs), &d) in o.positions.iter().zip(&o.per_bacterium_obs).zip(&o.decisions) {
        t.push(vec![m_to_um(p.x).into(), m_to_um(p.y).into(), (obs as u64).into(), d.into()]);
    }
    t
}

fn write_positions(path: &std::path::Path, o: &quorum_core::simulator::SimOutcome, cfg: &Resolved) -> Result<(), CliError> {
    let t = positions_table(o);
    let f = std::fs::File::create(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    crate::output::write_table(std::io::BufWriter::new(f), &t, cfg, Some(path))
}
