//! Expected molecule counts inside a passive circular receiver.
//!
//! Point transmitters emit either one molecule at τ = 0 (impulse) or a
//! temporal Poisson stream of rate q (continuous). A field of transmitters is
//! a PPP on the population disk, and its mean follows from Campbell's theorem.
//!
//! The exact pointwise kernel (receiver-disk average of the K0 Green's
//! function) is costly, so [`ChannelModel`] tabulates it once as a function
//! of the transmitter distance l and reuses it for every field integral.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::params::{EnvParams, Point2};
use crate::quadrature::{
    edges_with, integrate_1d_breaks, integrate_disk_radial_kernel, integrate_disk_vec, integrate_semi_infinite,
    integrate_vec, ChebOpts, ChebTable, QuadSpec,
};
use crate::specfun::{e1, i0e, k0, k1};

/// Radius of the disk cut out around a coincident source/observer point.
/// Its analytic contribution is added back where it matters.
pub const SINGULAR_EPS: f64 = 1e-12;

/// Which formula produced a [`ChannelResult`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    ClosedForm,
    Uca,
    ExactQuadrature,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelResult {
    pub mean_count: f64,
    pub method: Method,
    /// Absolute error bound; zero for closed forms.
    pub err_est: f64,
}

impl ChannelResult {
    fn closed(v: f64) -> Self {
        ChannelResult {
            mean_count: v,
            method: Method::ClosedForm,
            err_est: 0.0,
        }
    }
}

/// Receiver model for a single transmitter at distance l.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointwiseMode {
    /// Concentration integrated over the receiver disk.
    Exact,
    /// Concentration at the receiver center times its area.
    Uca,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AggregateMode {
    /// Exact receiver integral inside a field integral (tabulated inner kernel).
    Exact4D,
    /// UCA kernel inside a field integral.
    Uca2D,
    /// Exact receiver at the disk center, as a triple integral.
    Center3D,
    /// UCA receiver at the disk center, in closed form.
    CenterUcaClosed,
}

/// Coefficients of an exponential-sum approximation I0(z) ≈ Σ α_i exp(β_i z),
/// enabling the closed-form impulse response. No coefficients ship with the
/// library; callers must provide a set valid for the z range they use.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpSumI0 {
    pub terms: Vec<(f64, f64)>,
}

fn require_deg(p: &EnvParams) -> Result<()> {
    if p.degradation > 0.0 {
        Ok(())
    } else {
        Err(Error::DegradationRequired)
    }
}

fn require_tau(tau: f64) -> Result<()> {
    if tau > 0.0 && tau.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("time must be > 0, got {tau}")))
    }
}

/// Fraction of one impulse-released molecule inside the receiver at `b`
/// after `tau`: (1/2Dτ)e^{-kτ}∫_0^{R0} r exp(-(|b|²+r²)/4Dτ) I0(|b|r/2Dτ) dr.
pub fn impulse_response(b: Point2, tau: f64, p: &EnvParams) -> Result<ChannelResult> {
    require_tau(tau)?;
    let bn = b.norm();
    let r0 = p.rx_radius;
    let four_dt = 4.0 * p.diffusion * tau;
    let two_dt = 2.0 * p.diffusion * tau;
    let decay = (-p.degradation * tau).exp();
    if bn == 0.0 {
        return impulse_self_response(tau, p);
    }
    // The integrand is a Gaussian bump of width √(2Dτ) about r = |b|.
    let w = two_dt.sqrt();
    let breaks = [bn - 4.0 * w, bn, bn + 4.0 * w];
    let f = |r: f64| {
        let z = bn * r / two_dt;
        let d = bn - r;
        r * (-(d * d) / four_dt).exp() * i0e(z)
    };
    let res = integrate_1d_breaks(f, 0.0, r0, &breaks, &QuadSpec::one_d().with_abs(1e-300))?;
    let scale = decay / two_dt;
    Ok(ChannelResult {
        mean_count: (res.value * scale).max(0.0),
        method: Method::ExactQuadrature,
        err_est: res.err_est * scale,
    })
}

/// Closed-form impulse response with I0 replaced by an exponential sum.
pub fn impulse_response_expsum(b: Point2, tau: f64, p: &EnvParams, coeffs: &ExpSumI0) -> Result<ChannelResult> {
    require_tau(tau)?;
    if coeffs.terms.is_empty() {
        return Err(Error::Domain("exponential-sum approximation needs at least one term".into()));
    }
    let bn = b.norm();
    let r0 = p.rx_radius;
    let d = p.diffusion;
    let four_dt = 4.0 * d * tau;
    let kt = p.degradation * tau;
    let sq = 2.0 * (d * tau).sqrt();
    let mut total = 0.0;
    for &(alpha, beta) in &coeffs.terms {
        let t1 = (-(r0 * r0 + bn * bn) / four_dt - kt).exp()
            * ((r0 * r0 / four_dt).exp() - (r0 * bn * beta / (2.0 * d * tau)).exp());
        let t2 = bn * beta * (d * PI).sqrt() / (2.0 * d * tau.sqrt())
            * (-(bn * bn) * (1.0 - beta * beta) / four_dt - kt).exp()
            * (crate::specfun::erf_unchecked(bn * beta / sq) + crate::specfun::erf_unchecked((r0 - bn * beta) / sq));
        total += alpha * (t1 + t2);
    }
    Ok(ChannelResult::closed(total))
}

/// e^{-kτ}(1 − e^{-R0²/4Dτ}): receiver centered on the emitter.
pub fn impulse_self_response(tau: f64, p: &EnvParams) -> Result<ChannelResult> {
    require_tau(tau)?;
    let x = p.rx_radius * p.rx_radius / (4.0 * p.diffusion * tau);
    Ok(ChannelResult::closed(
        (-p.degradation * tau).exp() * (-(-x).exp_m1()),
    ))
}

/// Steady-state count from a continuously emitting point source at distance
/// |b| under the uniform-concentration assumption: (qR0²/2D)K0(|b|√(k/D)).
pub fn continuous_response_uca(b: Point2, p: &EnvParams) -> Result<ChannelResult> {
    require_deg(p)?;
    let bn = b.norm();
    if bn == 0.0 {
        return Err(Error::Domain(
            "the UCA point response is singular at |b| = 0; use continuous_self_response".into(),
        ));
    }
    Ok(ChannelResult {
        mean_count: uca_kernel(p, bn),
        method: Method::Uca,
        err_est: 0.0,
    })
}

/// (q/k)(1 − cR0·K1(cR0)) with c = √(k/D).
pub fn continuous_self_response(p: &EnvParams) -> Result<ChannelResult> {
    require_deg(p)?;
    Ok(ChannelResult::closed(self_steady(p)))
}

fn self_steady(p: &EnvParams) -> f64 {
    let z = p.decay_const() * p.rx_radius;
    p.emission_rate / p.degradation * (1.0 - z * k1(z))
}

/// No-degradation response after emitting for time t: Γ(0, |b|²/4Dt)·qR0²/4D.
pub fn continuous_response_nodeg(b: Point2, t: f64, p: &EnvParams) -> Result<ChannelResult> {
    if p.degradation != 0.0 {
        return Err(Error::Domain("continuous_response_nodeg requires k = 0".into()));
    }
    require_tau(t)?;
    let bn = b.norm();
    if bn == 0.0 {
        return Err(Error::Domain("continuous_response_nodeg requires |b| > 0".into()));
    }
    let x = bn * bn / (4.0 * p.diffusion * t);
    let r0 = p.rx_radius;
    Ok(ChannelResult {
        mean_count: e1(x) * p.emission_rate * r0 * r0 / (4.0 * p.diffusion),
        method: Method::Uca,
        err_est: 0.0,
    })
}

/// q∫_0^t impulse(b, τ) dτ: exact receiver, emission switched on at 0.
/// Works for any k ≥ 0.
pub fn continuous_response_at(b: Point2, t: f64, p: &EnvParams) -> Result<ChannelResult> {
    require_tau(t)?;
    let bn = b.norm();
    let peak = if bn > 0.0 {
        bn * bn / (4.0 * p.diffusion)
    } else {
        p.rx_radius * p.rx_radius / (4.0 * p.diffusion)
    };
    let breaks: Vec<f64> = [peak * 0.1, peak, peak * 10.0, peak * 100.0]
        .into_iter()
        .filter(|&x| x < t)
        .collect();
    let mut failure = None;
    let f = |tau: f64| match impulse_response(b, tau, p) {
        Ok(r) => r.mean_count,
        Err(e) => {
            failure.get_or_insert(e);
            0.0
        }
    };
    let res = integrate_1d_breaks(f, 0.0, t, &breaks, &QuadSpec::one_d().with_rel(1e-7).with_abs(1e-300))?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(ChannelResult {
        mean_count: p.emission_rate * res.value,
        method: Method::ExactQuadrature,
        err_est: p.emission_rate * res.err_est,
    })
}

/// Self term after emitting for time t: q∫_0^t e^{-kτ}(1 − e^{-R0²/4Dτ}) dτ.
pub fn self_response_at(t: f64, p: &EnvParams) -> Result<ChannelResult> {
    require_tau(t)?;
    let r0sq = p.rx_radius * p.rx_radius;
    let f = |tau: f64| (-p.degradation * tau).exp() * (-(-r0sq / (4.0 * p.diffusion * tau)).exp_m1());
    let knee = r0sq / (4.0 * p.diffusion);
    let res = integrate_1d_breaks(f, 0.0, t, &[knee, 10.0 * knee], &QuadSpec::one_d())?;
    Ok(ChannelResult {
        mean_count: p.emission_rate * res.value,
        method: Method::ExactQuadrature,
        err_est: p.emission_rate * res.err_est,
    })
}

fn uca_kernel(p: &EnvParams, l: f64) -> f64 {
    let r0 = p.rx_radius;
    p.emission_rate * r0 * r0 / (2.0 * p.diffusion) * k0(p.decay_const() * l.max(SINGULAR_EPS))
}

/// Exact pointwise kernel by direct double quadrature over the receiver disk:
/// (q/2πD)∫_0^{R0}∫_0^{2π} K0(cΥ) ρ dθ dρ with Υ the distance from the
/// source to the receiver point.
fn exact_kernel_direct(p: &EnvParams, l: f64, spec: &QuadSpec) -> Result<(f64, f64)> {
    let c = p.decay_const();
    let r0 = p.rx_radius;
    let res = integrate_disk_vec(
        |rho, theta, out: &mut [f64]| {
            let u2 = l * l + rho * rho + 2.0 * l * rho * theta.cos();
            let u = u2.max(0.0).sqrt();
            out[0] = if u < SINGULAR_EPS { 0.0 } else { k0(c * u) };
            Ok(())
        },
        1,
        r0,
        &[l],
        &[0.0, PI],
        spec,
    )?;
    let mut v = 2.0 * res.values[0];
    if l < r0 {
        // ∫ K0(c s) over the excluded ε-disk.
        let z = c * SINGULAR_EPS;
        v += 2.0 * PI / (c * c) * (1.0 - z * k1(z));
    }
    let pref = p.emission_rate / (2.0 * PI * p.diffusion);
    Ok((pref * v, pref * 2.0 * res.err_ests[0]))
}

/// Tabulated exact pointwise kernel on l ∈ [0, l_max].
#[derive(Debug, Clone)]
pub struct ExactKernel {
    table: ChebTable,
    params: EnvParams,
}

impl ExactKernel {
    pub fn build(p: &EnvParams, l_max: f64) -> Result<Self> {
        require_deg(p)?;
        let r0 = p.rx_radius;
        let c = p.decay_const();
        let l_max = l_max.max(4.0 * r0);
        // Kinks at R0; beyond it ln F is close to linear in l, so moderate
        // geometric pieces suffice.
        let mut edges = vec![0.0, 0.5 * r0, r0];
        let mut x = r0;
        let step = 4.0 / c;
        while x < l_max {
            x = (x + step.max(x - r0)).min(l_max);
            edges.push(x);
        }
        let spec = QuadSpec::new(1e-11, 0.0, 4000)?;
        let opts = ChebOpts {
            degree: 16,
            rel_tol: 0.0,
            abs_tol: 1e-10,
            max_pieces: 400,
        };
        let table = ChebTable::build_scalar(|l| Ok(exact_kernel_direct(p, l, &spec)?.0.ln()), &edges, &opts)?;
        Ok(ExactKernel { table, params: *p })
    }

    pub fn l_max(&self) -> f64 {
        self.table.domain().1
    }

    pub fn eval(&self, l: f64) -> f64 {
        if l <= self.l_max() {
            self.table.eval1(l).exp()
        } else {
            exact_kernel_direct(&self.params, l, &QuadSpec::new(1e-10, 0.0, 4000).unwrap())
                .map(|v| v.0)
                .unwrap_or(f64::NAN)
        }
    }
}

/// Cached per-parameter state for repeated channel evaluations.
#[derive(Debug)]
pub struct ChannelModel {
    params: EnvParams,
    exact: OnceLock<std::result::Result<ExactKernel, Error>>,
}

impl ChannelModel {
    pub fn new(p: &EnvParams) -> Self {
        ChannelModel {
            params: *p,
            exact: OnceLock::new(),
        }
    }

    pub fn params(&self) -> &EnvParams {
        &self.params
    }

    pub fn exact_kernel(&self) -> Result<&ExactKernel> {
        self.exact
            .get_or_init(|| ExactKernel::build(&self.params, 2.0 * self.params.pop_radius * (1.0 + 1e-9)))
            .as_ref()
            .map_err(|e| e.clone())
    }

    /// Mean count from one continuously emitting bacterium at distance l.
    pub fn kernel(&self, l: f64, mode: PointwiseMode) -> Result<f64> {
        require_deg(&self.params)?;
        Ok(match mode {
            PointwiseMode::Exact => self.exact_kernel()?.eval(l),
            PointwiseMode::Uca => uca_kernel(&self.params, l),
        })
    }

    /// Kernel as a plain closure for hot loops; the exact table is built first.
    pub fn kernel_fn(&self, mode: PointwiseMode) -> Result<impl Fn(f64) -> f64 + '_> {
        require_deg(&self.params)?;
        let exact = match mode {
            PointwiseMode::Exact => Some(self.exact_kernel()?),
            PointwiseMode::Uca => None,
        };
        let p = self.params;
        Ok(move |l: f64| match exact {
            Some(t) => t.eval(l),
            None => uca_kernel(&p, l),
        })
    }

    pub fn pointwise(&self, b: Point2, r: Point2, mode: PointwiseMode) -> Result<ChannelResult> {
        require_deg(&self.params)?;
        let l = b.dist(&r);
        match mode {
            PointwiseMode::Exact => Ok(ChannelResult {
                mean_count: self.kernel(l, mode)?,
                method: Method::ExactQuadrature,
                err_est: 0.0,
            }),
            PointwiseMode::Uca => {
                if l == 0.0 {
                    return Err(Error::Domain("UCA pointwise response is singular at b = r".into()));
                }
                Ok(ChannelResult {
                    mean_count: uca_kernel(&self.params, l),
                    method: Method::Uca,
                    err_est: 0.0,
                })
            }
        }
    }

    /// ∫_{S1} kernel(|b − r|) dA, i.e. the aggregate without the λ factor.
    pub fn field_integral(&self, b: Point2, mode: PointwiseMode, spec: &QuadSpec) -> Result<(f64, f64)> {
        let kf = self.kernel_fn(mode)?;
        let res = integrate_disk_radial_kernel(
            |l, out: &mut [f64]| {
                out[0] = kf(l);
                Ok(())
            },
            1,
            self.params.pop_radius,
            b.norm(),
            spec,
        )?;
        Ok((res.values[0], res.err_ests[0]))
    }

    pub fn aggregate(&self, b: Point2, mode: AggregateMode) -> Result<ChannelResult> {
        let v = self.circular_tx(b, mode)?;
        let lambda = self.params.density;
        Ok(ChannelResult {
            mean_count: lambda * v.mean_count,
            method: v.method,
            err_est: lambda * v.err_est,
        })
    }

    /// Response to a disk-shaped source emitting q per unit area.
    pub fn circular_tx(&self, b: Point2, mode: AggregateMode) -> Result<ChannelResult> {
        let p = &self.params;
        require_deg(p)?;
        let centered = b.norm() == 0.0;
        match mode {
            AggregateMode::Exact4D | AggregateMode::Uca2D => {
                let (pm, method) = if mode == AggregateMode::Exact4D {
                    (PointwiseMode::Exact, Method::ExactQuadrature)
                } else {
                    (PointwiseMode::Uca, Method::Uca)
                };
                let spec = if mode == AggregateMode::Exact4D {
                    QuadSpec::four_d()
                } else {
                    QuadSpec::two_d()
                };
                let (v, e) = self.field_integral(b, pm, &spec)?;
                Ok(ChannelResult {
                    mean_count: v,
                    method,
                    err_est: e,
                })
            }
            AggregateMode::Center3D => {
                if !centered {
                    return Err(Error::ModeMismatch("Center3D requires b = 0".into()));
                }
                let (v, e) = center_triple(p)?;
                Ok(ChannelResult {
                    mean_count: v,
                    method: Method::ExactQuadrature,
                    err_est: e,
                })
            }
            AggregateMode::CenterUcaClosed => {
                if !centered {
                    return Err(Error::ModeMismatch("CenterUcaClosed requires b = 0".into()));
                }
                let z = p.decay_const() * p.pop_radius;
                let r0 = p.rx_radius;
                Ok(ChannelResult {
                    mean_count: p.emission_rate * PI * r0 * r0 / p.degradation * (1.0 - z * k1(z)),
                    method: Method::ClosedForm,
                    err_est: 0.0,
                })
            }
        }
    }
}

// (q/D)∫_0^{R1}∫_0^{R0}∫_0^{2π} K0(c√(r²+ρ²+2rρcosθ)) ρ r dθ dρ dr
fn center_triple(p: &EnvParams) -> Result<(f64, f64)> {
    let c = p.decay_const();
    let r0 = p.rx_radius;
    let outer = QuadSpec::new(1e-6, 0.0, 2000)?;
    let middle = outer.inner();
    let inner = middle.inner();
    let res = integrate_vec(
        |r, out: &mut [f64]| {
            let mid = integrate_vec(
                |rho, o: &mut [f64]| {
                    let th = integrate_vec(
                        |theta, o2: &mut [f64]| {
                            let u = (r * r + rho * rho + 2.0 * r * rho * theta.cos()).max(0.0).sqrt();
                            o2[0] = if u < SINGULAR_EPS { 0.0 } else { k0(c * u) };
                            Ok(())
                        },
                        1,
                        &[0.0, PI],
                        &inner,
                    )?;
                    o[0] = 2.0 * th.values[0] * rho;
                    Ok(())
                },
                1,
                &edges_with(0.0, r0, &[r]),
                &middle,
            )?;
            out[0] = mid.values[0] * r;
            Ok(())
        },
        1,
        &edges_with(0.0, p.pop_radius, &[r0]),
        &outer,
    )?;
    let pref = p.emission_rate / p.diffusion / (2.0 * PI) * 2.0 * PI;
    Ok((pref * res.values[0], pref * res.err_ests[0]))
}

pub fn pointwise_field_response(b: Point2, r: Point2, p: &EnvParams, mode: PointwiseMode) -> Result<ChannelResult> {
    require_deg(p)?;
    match mode {
        PointwiseMode::Uca => ChannelModel::new(p).pointwise(b, r, mode),
        PointwiseMode::Exact => {
            let (v, e) = exact_kernel_direct(p, b.dist(&r), &QuadSpec::new(1e-10, 0.0, 4000)?)?;
            Ok(ChannelResult {
                mean_count: v,
                method: Method::ExactQuadrature,
                err_est: e,
            })
        }
    }
}

/// Mean count at `b` from a PPP of continuously emitting transmitters with
/// density λ on the population disk.
pub fn aggregate_response(b: Point2, p: &EnvParams, mode: AggregateMode) -> Result<ChannelResult> {
    ChannelModel::new(p).aggregate(b, mode)
}

/// [`aggregate_response`] without the λ factor.
pub fn circular_tx_response(b: Point2, p: &EnvParams, mode: AggregateMode) -> Result<ChannelResult> {
    ChannelModel::new(p).circular_tx(b, mode)
}

/// Time-truncated UCA kernel: emission switched on at 0, observed at t.
fn uca_kernel_at(p: &EnvParams, l: f64, t: f64) -> Result<f64> {
    let d = p.diffusion;
    let r0 = p.rx_radius;
    let l = l.max(SINGULAR_EPS);
    if p.degradation == 0.0 {
        return Ok(e1(l * l / (4.0 * d * t)) * p.emission_rate * r0 * r0 / (4.0 * d));
    }
    // qR0²/4D ∫_{l²/4Dt}^∞ exp(−y − k l²/(4Dy)) / y dy
    let u0 = l * l / (4.0 * d * t);
    let beta = p.degradation * l * l / (4.0 * d);
    let g = |y: f64| (-y - beta / y).exp() / y;
    let peak = beta.sqrt().max(u0);
    let res = integrate_semi_infinite(g, u0, peak.max(1.0), &QuadSpec::one_d().with_abs(1e-300))?;
    Ok(res.value * p.emission_rate * r0 * r0 / (4.0 * d))
}

/// Expected total count at `b` at time t after every bacterium started
/// emitting: λ∫_{S1} UCA kernel_t dA plus the observer's own emissions.
pub fn aggregate_response_at(b: Point2, t: f64, p: &EnvParams, include_self: bool) -> Result<ChannelResult> {
    require_tau(t)?;
    let r1 = p.pop_radius;
    // The UCA time kernel only depends on l; tabulate ln of it.
    let mut edges = vec![0.0, p.rx_radius];
    let mut x = p.rx_radius;
    while x < 2.0 * r1 {
        x = (2.0 * x).min(2.0 * r1 * (1.0 + 1e-9));
        edges.push(x);
    }
    let opts = ChebOpts {
        degree: 16,
        rel_tol: 0.0,
        abs_tol: 1e-10,
        max_pieces: 400,
    };
    // ln K(l) has a log-log singularity at 0; tabulate on s = ln(l/ε).
    let s_edges: Vec<f64> = edges
        .iter()
        .map(|&l| (l.max(SINGULAR_EPS) / SINGULAR_EPS).ln())
        .collect();
    let table = ChebTable::build_scalar(
        |s| {
            let l = SINGULAR_EPS * s.exp();
            let v = uca_kernel_at(p, l, t)?;
            Ok(v.max(1e-300).ln())
        },
        &s_edges,
        &opts,
    )?;
    let res = integrate_disk_radial_kernel(
        |l, out: &mut [f64]| {
            let s = (l.max(SINGULAR_EPS) / SINGULAR_EPS).ln();
            out[0] = table.eval1(s).exp();
            Ok(())
        },
        1,
        r1,
        b.norm(),
        &QuadSpec::two_d(),
    )?;
    let mut v = p.density * res.values[0];
    let mut e = p.density * res.err_ests[0];
    if include_self {
        let s = self_response_at(t, p)?;
        v += s.mean_count;
        e += s.err_est;
    }
    Ok(ChannelResult {
        mean_count: v,
        method: Method::Uca,
        err_est: e,
    })
}

/// Smallest T on a quarter-octave grid starting at `t_start` with
/// |N(T) − N(2T)|/N(2T) < `rel` for the time-truncated aggregate response.
pub fn plateau_time(b: Point2, p: &EnvParams, t_start: f64, rel: f64) -> Result<f64> {
    require_deg(p)?;
    require_tau(t_start)?;
    let mut t = t_start;
    for _ in 0..80 {
        let a = aggregate_response_at(b, t, p, true)?.mean_count;
        let c = aggregate_response_at(b, 2.0 * t, p, true)?.mean_count;
        if ((a - c) / c).abs() < rel {
            return Ok(t);
        }
        t *= 2f64.powf(0.25);
    }
    Err(Error::NoConvergence {
        value: t,
        err_est: f64::INFINITY,
    })
}
