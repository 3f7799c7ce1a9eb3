//! Statistics of the number of cooperators Z.
//!
//! Everything here is driven by the radial cooperating-probability profile
//! P̃(r), tabulated once per parameter set for all thresholds 1..=η_max. Under
//! the independence approximation Z is Poisson with mean E{Z} =
//! λ∫P̃(r)2πr dr, so moments, cumulants, shape statistics and the fitted
//! distributions all follow from that one number.

use std::f64::consts::PI;

use crate::channel::PointwiseMode;
use crate::cooperation::{enumerate_partitions, CoopModel};
use crate::error::{Error, Result};
use crate::params::EnvParams;
use crate::pointprocess::nn_pdf_unchecked;
use crate::quadrature::{edges_with, integrate_vec, ChebOpts, ChebTable, QuadSpec};
use crate::specfun::{erfc, ln_factorial, reg_gamma_p};

/// How the per-location cooperating probability is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbMode {
    /// Laplace-transform mixture with the given pointwise kernel.
    Exact(PointwiseMode),
    /// Poisson with the position-averaged mean, using the given kernel.
    Approx(PointwiseMode),
}

impl ProbMode {
    pub const EXACT: ProbMode = ProbMode::Exact(PointwiseMode::Exact);
    pub const APPROX: ProbMode = ProbMode::Approx(PointwiseMode::Uca);
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitModel {
    Poisson,
    Gaussian,
}

/// P̃(r) for thresholds 1..=eta_max on r ∈ [0, R1].
#[derive(Debug, Clone)]
pub struct CoopProfile {
    params: EnvParams,
    mode: ProbMode,
    eta_max: u32,
    table: ChebTable,
}

impl CoopProfile {
    pub fn build(p: &EnvParams, mode: ProbMode, eta_max: u32) -> Result<Self> {
        Self::build_with_tol(p, mode, eta_max, None)
    }

    /// [`build`](Self::build) with the relative tolerance of the field
    /// integrals overridden.
    pub fn build_with_tol(p: &EnvParams, mode: ProbMode, eta_max: u32, rel_tol: Option<f64>) -> Result<Self> {
        let model = |k| -> Result<CoopModel> {
            let m = CoopModel::new(p, k)?;
            Ok(match rel_tol {
                Some(t) => {
                    let spec = m.spec().with_rel(t);
                    m.with_spec(spec)
                }
                None => m,
            })
        };
        if eta_max == 0 {
            return Err(Error::Domain("eta_max must be >= 1".into()));
        }
        let r1 = p.pop_radius;
        let edges = [0.0, 0.5 * r1, 0.8 * r1, 0.95 * r1, r1];
        let opts = ChebOpts {
            degree: 16,
            rel_tol: 0.0,
            abs_tol: 1e-9,
            max_pieces: 256,
        };
        let dim = eta_max as usize;
        let table = match mode {
            ProbMode::Exact(k) => {
                let m = model(k)?;
                ChebTable::build(
                    |r, out: &mut [f64]| {
                        out.copy_from_slice(&m.prob_exact_all(r, eta_max)?);
                        Ok(())
                    },
                    dim,
                    &edges,
                    &opts,
                )?
            }
            ProbMode::Approx(k) => {
                let m = model(k)?;
                ChebTable::build(
                    |r, out: &mut [f64]| {
                        let mu = m.mean_observation(r)?;
                        for (i, o) in out.iter_mut().enumerate() {
                            *o = reg_gamma_p(i as u32 + 1, mu)?;
                        }
                        Ok(())
                    },
                    dim,
                    &edges,
                    &opts,
                )?
            }
        };
        Ok(CoopProfile {
            params: *p,
            mode,
            eta_max,
            table,
        })
    }

    pub fn params(&self) -> &EnvParams {
        &self.params
    }

    pub fn mode(&self) -> ProbMode {
        self.mode
    }

    pub fn eta_max(&self) -> u32 {
        self.eta_max
    }

    /// P̃ at radius `r` for every threshold; `out.len() == eta_max`.
    pub fn probs(&self, r: f64, out: &mut [f64]) {
        self.table.eval(r.clamp(0.0, self.params.pop_radius), out);
        for o in out.iter_mut() {
            *o = o.clamp(0.0, 1.0);
        }
    }

    pub fn prob(&self, r: f64, eta: u32) -> Result<f64> {
        self.check(eta)?;
        let mut v = vec![0.0; self.eta_max as usize];
        self.probs(r, &mut v);
        Ok(v[eta as usize - 1])
    }

    fn check(&self, eta: u32) -> Result<()> {
        if eta == 0 || eta > self.eta_max {
            Err(Error::Domain(format!("threshold {eta} outside 1..={}", self.eta_max)))
        } else {
            Ok(())
        }
    }

    /// E{Z} = λ∫_0^{R1} P̃(r) 2πr dr for every threshold.
    pub fn mean_cooperators_all(&self) -> Result<Vec<f64>> {
        let dim = self.eta_max as usize;
        let r1 = self.params.pop_radius;
        let res = integrate_vec(
            |r, out: &mut [f64]| {
                self.probs(r, out);
                out.iter_mut().for_each(|o| *o *= 2.0 * PI * r);
                Ok(())
            },
            dim,
            &[0.0, 0.5 * r1, 0.8 * r1, 0.95 * r1, r1],
            &QuadSpec::one_d().with_abs(1e-14 * r1 * r1),
        )?;
        Ok(res.values.iter().map(|v| self.params.density * v).collect())
    }

    pub fn mean_cooperators(&self, eta: u32) -> Result<f64> {
        self.check(eta)?;
        Ok(self.mean_cooperators_all()?[eta as usize - 1])
    }

    /// Expected number of bacteria whose n-th nearest neighbour is also a
    /// cooperator, for every threshold:
    /// λ∫ P̃(r1) ∫ P̃(r2) g_n(|r1−r2|)/(2π|r1−r2|) dA2 dA1.
    /// g_n is the infinite-plane density and is not renormalized at the rim.
    pub fn pair_coop_count_all(&self, n: u32) -> Result<Vec<f64>> {
        if n == 0 {
            return Err(Error::Domain("neighbour order n must be >= 1".into()));
        }
        let dim = self.eta_max as usize;
        let r1 = self.params.pop_radius;
        let lam = self.params.density;
        let scale = 1.0 / (lam * PI).sqrt();
        let spec = QuadSpec::new(1e-6, 0.0, 4000)?;
        let mid = spec.inner();
        let inner_most = mid.inner();
        let mut p1 = vec![0.0; dim];
        let res = integrate_vec(
            |x, out: &mut [f64]| {
                // Inner: polar coordinates (l, ψ) about r1; the 1/(2πl)
                // factor cancels the arc measure.
                let l_hi = (r1 + x).min(scale * (12.0 + 3.0 * n as f64));
                let peak = scale * ((n as f64 - 0.5).max(0.5)).sqrt();
                let l_edges = edges_with(0.0, l_hi, &[(r1 - x).abs(), peak, 2.0 * peak]);
                let inner = integrate_vec(
                    |l, o: &mut [f64]| {
                        o.iter_mut().for_each(|v| *v = 0.0);
                        if l == 0.0 {
                            return Ok(());
                        }
                        let g = nn_pdf_unchecked(n, l, lam);
                        if g == 0.0 {
                            return Ok(());
                        }
                        // |r2| ≤ R1 ⇔ cos ψ ≤ u.
                        let u = if x == 0.0 {
                            if l <= r1 {
                                1.0
                            } else {
                                -1.0
                            }
                        } else {
                            ((r1 * r1 - x * x - l * l) / (2.0 * x * l)).clamp(-1.0, 1.0)
                        };
                        let psi0 = u.acos();
                        if psi0 >= PI {
                            return Ok(());
                        }
                        let ang = integrate_vec(
                            |psi, a: &mut [f64]| {
                                let r = (x * x + l * l + 2.0 * x * l * psi.cos()).max(0.0).sqrt();
                                self.probs(r, a);
                                Ok(())
                            },
                            dim,
                            &[psi0, PI],
                            &inner_most,
                        )?;
                        for (v, a) in o.iter_mut().zip(&ang.values) {
                            *v = g * a / PI;
                        }
                        Ok(())
                    },
                    dim,
                    &l_edges,
                    &mid,
                )?;
                self.probs(x, &mut p1);
                for ((o, i), p) in out.iter_mut().zip(&inner.values).zip(&p1) {
                    *o = p * i * 2.0 * PI * x;
                }
                Ok(())
            },
            dim,
            &[0.0, 0.5 * r1, 0.8 * r1, 0.95 * r1, r1],
            &spec.with_abs(1e-12 * r1 * r1),
        )?;
        Ok(res.values.iter().map(|v| lam * v).collect())
    }
}

/// Moments and shape of Z for one mean under the Poisson approximation.
#[derive(Debug, Clone, PartialEq)]
pub struct CoopStats {
    pub mean: f64,
    pub variance: f64,
    /// E{Z^n} for n = 1..=moments.len().
    pub moments: Vec<f64>,
    /// κ(n) for n = 1..=cumulants.len().
    pub cumulants: Vec<f64>,
    pub skewness: f64,
    pub kurtosis: f64,
}

impl CoopStats {
    pub fn from_mean(mean: f64, n_max: usize) -> Result<Self> {
        if !(mean >= 0.0) || !mean.is_finite() {
            return Err(Error::Domain(format!("mean must be finite and >= 0, got {mean}")));
        }
        let moments = (1..=n_max).map(|n| moment_from_mean(n, mean)).collect::<Result<Vec<_>>>()?;
        let (skewness, kurtosis) = if mean > 0.0 {
            (mean.powf(-0.5), 1.0 / mean)
        } else {
            (f64::INFINITY, f64::INFINITY)
        };
        Ok(CoopStats {
            mean,
            variance: mean,
            moments,
            cumulants: vec![mean; n_max],
            skewness,
            kurtosis,
        })
    }
}

/// M_Z(u) = exp((e^u − 1)·E{Z}).
pub fn mgf_from_mean(u: f64, mean: f64) -> f64 {
    cgf_from_mean(u, mean).exp()
}

/// K_Z(u) = (e^u − 1)·E{Z}.
pub fn cgf_from_mean(u: f64, mean: f64) -> f64 {
    u.exp_m1() * mean
}

/// E{Z^n} = Σ_partitions n!/(∏ m_j! j!^{m_j}) E{Z}^{Σ m_j}.
pub fn moment_from_mean(n: usize, mean: f64) -> Result<f64> {
    if n == 0 {
        return Ok(1.0);
    }
    let ln_nf = ln_factorial(n as u64);
    let mut total = 0.0;
    for p in enumerate_partitions(n)? {
        let mut ln_w = ln_nf;
        let mut k = 0i32;
        for (j, &m) in p.multiplicities.iter().enumerate() {
            if m > 0 {
                ln_w -= ln_factorial(m as u64) + m as f64 * ln_factorial(j as u64 + 1);
                k += m as i32;
            }
        }
        total += ln_w.exp().round() * mean.powi(k);
    }
    Ok(total)
}

/// (β1, β2) = (κ3/κ2^{3/2}, κ4/κ2²) = (E^{-1/2}, E^{-1}).
pub fn shape_from_mean(mean: f64) -> Result<(f64, f64)> {
    if !(mean > 0.0) {
        return Err(Error::Domain("shape statistics need E{Z} > 0".into()));
    }
    Ok((mean.powf(-0.5), 1.0 / mean))
}

fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Poisson PMF, or the Gaussian density integrated over [z − ½, z + ½].
pub fn fit_pmf_from(model: FitModel, mean: f64, variance: f64, z: u64) -> f64 {
    match model {
        FitModel::Poisson => {
            if mean == 0.0 {
                return if z == 0 { 1.0 } else { 0.0 };
            }
            (z as f64 * mean.ln() - mean - ln_factorial(z)).exp()
        }
        FitModel::Gaussian => {
            if variance <= 0.0 {
                return if (mean.round() - z as f64).abs() < 0.5 { 1.0 } else { 0.0 };
            }
            let s = variance.sqrt();
            let zf = z as f64;
            normal_cdf((zf + 0.5 - mean) / s) - normal_cdf((zf - 0.5 - mean) / s)
        }
    }
}

/// P(Z ≥ z_min) under the fitted model. The Gaussian uses the same
/// continuity correction as [`fit_pmf_from`] and takes P(Z ≥ 0) = 1.
pub fn ccdf_from(model: FitModel, mean: f64, variance: f64, z_min: u64) -> Result<f64> {
    if z_min == 0 {
        return Ok(1.0);
    }
    match model {
        FitModel::Poisson => {
            if mean == 0.0 {
                return Ok(0.0);
            }
            let a = u32::try_from(z_min).map_err(|_| Error::Domain("z_min too large".into()))?;
            reg_gamma_p(a, mean)
        }
        FitModel::Gaussian => {
            if variance <= 0.0 {
                return Ok(if mean.round() >= z_min as f64 { 1.0 } else { 0.0 });
            }
            Ok(1.0 - normal_cdf((z_min as f64 - 0.5 - mean) / variance.sqrt()))
        }
    }
}

/// Sample mean of e^{uZ}: the exact MGF estimated from simulated counts.
pub fn empirical_mgf(zs: &[u64], u: f64) -> f64 {
    zs.iter().map(|&z| (u * z as f64).exp()).sum::<f64>() / zs.len() as f64
}

/// Profile and E{Z} bundled for one parameter set and threshold.
#[derive(Debug, Clone)]
pub struct PopStats {
    pub profile: CoopProfile,
    pub mean: f64,
}

impl PopStats {
    pub fn new(p: &EnvParams, mode: ProbMode) -> Result<Self> {
        let profile = CoopProfile::build(p, mode, p.threshold)?;
        let mean = profile.mean_cooperators(p.threshold)?;
        Ok(PopStats { profile, mean })
    }

    pub fn stats(&self, n_max: usize) -> Result<CoopStats> {
        CoopStats::from_mean(self.mean, n_max)
    }

    pub fn mgf(&self, u: f64) -> f64 {
        mgf_from_mean(u, self.mean)
    }

    pub fn cgf(&self, u: f64) -> f64 {
        cgf_from_mean(u, self.mean)
    }

    pub fn moment_n(&self, n: usize) -> Result<f64> {
        moment_from_mean(n, self.mean)
    }

    pub fn cumulant_n(&self, n: usize) -> Result<f64> {
        if n == 0 {
            return Err(Error::Domain("cumulant order must be >= 1".into()));
        }
        Ok(self.mean)
    }

    pub fn shape_stats(&self) -> Result<(f64, f64)> {
        shape_from_mean(self.mean)
    }

    pub fn fit_pmf(&self, model: FitModel, z: u64) -> f64 {
        fit_pmf_from(model, self.mean, self.mean, z)
    }

    pub fn ccdf(&self, model: FitModel, z_min: u64) -> Result<f64> {
        ccdf_from(model, self.mean, self.mean, z_min)
    }

    pub fn pair_coop_count(&self, n: u32) -> Result<f64> {
        Ok(self.profile.pair_coop_count_all(n)?[self.profile.eta_max as usize - 1])
    }
}

pub fn mean_cooperators(params: &EnvParams, mode: ProbMode) -> Result<f64> {
    Ok(PopStats::new(params, mode)?.mean)
}

pub fn mgf(u: f64, params: &EnvParams, mode: ProbMode) -> Result<f64> {
    Ok(mgf_from_mean(u, mean_cooperators(params, mode)?))
}

pub fn cgf(u: f64, params: &EnvParams, mode: ProbMode) -> Result<f64> {
    Ok(cgf_from_mean(u, mean_cooperators(params, mode)?))
}

pub fn moment_n(n: usize, params: &EnvParams, mode: ProbMode) -> Result<f64> {
    moment_from_mean(n, mean_cooperators(params, mode)?)
}

pub fn cumulant_n(n: usize, params: &EnvParams, mode: ProbMode) -> Result<f64> {
    PopStats::new(params, mode)?.cumulant_n(n)
}

pub fn shape_stats(params: &EnvParams, mode: ProbMode) -> Result<(f64, f64)> {
    shape_from_mean(mean_cooperators(params, mode)?)
}

pub fn fit_pmf(model: FitModel, params: &EnvParams, mode: ProbMode, z: u64) -> Result<f64> {
    Ok(PopStats::new(params, mode)?.fit_pmf(model, z))
}

pub fn ccdf(model: FitModel, params: &EnvParams, mode: ProbMode, z_min: u64) -> Result<f64> {
    PopStats::new(params, mode)?.ccdf(model, z_min)
}

pub fn pair_coop_count(n: u32, params: &EnvParams, mode: ProbMode) -> Result<f64> {
    PopStats::new(params, mode)?.pair_coop_count(n)
}
