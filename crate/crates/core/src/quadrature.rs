//! Adaptive Gauss–Kronrod integration over intervals, half-lines and disks,
//! plus piecewise Chebyshev tables used to memoize expensive 1D integrands.
//!
//! All routines are vector valued underneath so several integrals that share
//! one integrand evaluation (the Laplace moments, for instance) cost a single
//! pass. Interval bookkeeping and summation order are fixed, so results are
//! bit-reproducible for identical inputs.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::params::{GeometryTerms, Point2};

/// Tolerances and work limit for one adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Maximum number of subintervals.
    pub max_subdiv: usize,
}

impl QuadSpec {
    pub fn new(rel_tol: f64, abs_tol: f64, max_subdiv: usize) -> Result<Self> {
        if !(rel_tol > 0.0 && rel_tol <= 1e-2) {
            return Err(Error::Domain(format!("rel_tol must lie in (0, 1e-2], got {rel_tol}")));
        }
        if !(abs_tol >= 0.0) {
            return Err(Error::Domain(format!("abs_tol must be >= 0, got {abs_tol}")));
        }
        if max_subdiv < 1 {
            return Err(Error::Domain("max_subdiv must be >= 1".into()));
        }
        Ok(QuadSpec {
            rel_tol,
            abs_tol,
            max_subdiv,
        })
    }

    /// Default for one-dimensional integrals.
    pub const fn one_d() -> Self {
        QuadSpec {
            rel_tol: 1e-8,
            abs_tol: 0.0,
            max_subdiv: 2000,
        }
    }

    /// Default for two-dimensional (disk) integrals.
    pub const fn two_d() -> Self {
        QuadSpec {
            rel_tol: 1e-6,
            abs_tol: 0.0,
            max_subdiv: 2000,
        }
    }

    /// Default for the four-fold receiver/field integral.
    pub const fn four_d() -> Self {
        QuadSpec {
            rel_tol: 1e-4,
            abs_tol: 0.0,
            max_subdiv: 2000,
        }
    }

    pub fn with_abs(mut self, abs_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self
    }

    pub fn with_rel(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    /// Spec for an integral nested inside another one. Inner noise must sit
    /// well below the outer tolerance or the outer error estimate is polluted.
    pub fn inner(&self) -> Self {
        QuadSpec {
            rel_tol: (self.rel_tol * 0.1).max(1e-14),
            abs_tol: self.abs_tol * 0.1,
            max_subdiv: self.max_subdiv,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub err_est: f64,
    pub evals: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VecQuadResult {
    pub values: Vec<f64>,
    pub err_ests: Vec<f64>,
    pub evals: usize,
}

// Kronrod 21-point abscissae (positive half) and weights; every odd entry is
// also a node of the embedded 10-point Gauss rule.
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_208_640_262_598,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

const EPMACH: f64 = f64::EPSILON;
const UFLOW: f64 = f64::MIN_POSITIVE;

struct Segment {
    a: f64,
    b: f64,
    val: Vec<f64>,
    err: Vec<f64>,
    /// Too narrow to split further.
    frozen: bool,
}

// Priority key: largest normalized error first, ties broken by index so the
// order is deterministic.
#[derive(PartialEq)]
struct Key(f64, usize);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .total_cmp(&other.0)
            .then_with(|| other.1.cmp(&self.1))
    }
}

/// Workspace reused across the 21 evaluations of one rule application.
struct Rule {
    dim: usize,
    fv: Vec<f64>,
    fc: Vec<f64>,
    resk: Vec<f64>,
    resg: Vec<f64>,
    resabs: Vec<f64>,
    fvals: Vec<f64>,
}

impl Rule {
    fn new(dim: usize) -> Self {
        Rule {
            dim,
            fv: vec![0.0; dim],
            fc: vec![0.0; dim],
            resk: vec![0.0; dim],
            resg: vec![0.0; dim],
            resabs: vec![0.0; dim],
            fvals: vec![0.0; 21 * dim],
        }
    }

    fn apply<F>(&mut self, f: &mut F, a: f64, b: f64, val: &mut [f64], err: &mut [f64]) -> Result<()>
    where
        F: FnMut(f64, &mut [f64]) -> Result<()>,
    {
        let d = self.dim;
        let centr = 0.5 * (a + b);
        let hlgth = 0.5 * (b - a);
        let dhlgth = hlgth.abs();

        f(centr, &mut self.fc)?;
        for i in 0..d {
            self.resg[i] = 0.0;
            self.resk[i] = WGK[10] * self.fc[i];
            self.resabs[i] = self.resk[i].abs();
        }
        for j in 0..10 {
            let x = hlgth * XGK[j];
            f(centr - x, &mut self.fv)?;
            self.fvals[(2 * j) * d..(2 * j + 1) * d].copy_from_slice(&self.fv);
            f(centr + x, &mut self.fv)?;
            self.fvals[(2 * j + 1) * d..(2 * j + 2) * d].copy_from_slice(&self.fv);
            for i in 0..d {
                let f1 = self.fvals[2 * j * d + i];
                let f2 = self.fvals[(2 * j + 1) * d + i];
                self.resk[i] += WGK[j] * (f1 + f2);
                self.resabs[i] += WGK[j] * (f1.abs() + f2.abs());
                if j % 2 == 1 {
                    self.resg[i] += WG[j / 2] * (f1 + f2);
                }
            }
        }
        for i in 0..d {
            let reskh = self.resk[i] * 0.5;
            let mut asc = WGK[10] * (self.fc[i] - reskh).abs();
            for j in 0..10 {
                let f1 = self.fvals[2 * j * d + i];
                let f2 = self.fvals[(2 * j + 1) * d + i];
                asc += WGK[j] * ((f1 - reskh).abs() + (f2 - reskh).abs());
            }
            let resabs = self.resabs[i] * dhlgth;
            let resasc = asc * dhlgth;
            let mut e = ((self.resk[i] - self.resg[i]) * hlgth).abs();
            if resasc != 0.0 && e != 0.0 {
                e = resasc * (200.0 * e / resasc).powf(1.5).min(1.0);
            }
            if resabs > UFLOW / (50.0 * EPMACH) {
                e = e.max(EPMACH * 50.0 * resabs);
            }
            val[i] = self.resk[i] * hlgth;
            err[i] = e;
            if !val[i].is_finite() {
                return Err(Error::Domain(format!(
                    "non-finite integrand on [{a:e}, {b:e}]"
                )));
            }
        }
        Ok(())
    }
}

/// Core adaptive routine. `edges` are the initial subinterval boundaries
/// (at least two, increasing); every component must meet
/// `err <= max(rel_tol·|value|, abs_tol)`.
pub fn integrate_vec<F>(mut f: F, dim: usize, edges: &[f64], spec: &QuadSpec) -> Result<VecQuadResult>
where
    F: FnMut(f64, &mut [f64]) -> Result<()>,
{
    if dim == 0 {
        return Err(Error::Domain("integrand dimension must be >= 1".into()));
    }
    if edges.len() < 2 || edges.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Domain(format!(
            "integration edges must be strictly increasing, got {edges:?}"
        )));
    }
    let mut rule = Rule::new(dim);
    let mut segs: Vec<Segment> = Vec::with_capacity(spec.max_subdiv.min(4096) + edges.len());
    let mut total = vec![0.0; dim];
    let mut total_err = vec![0.0; dim];
    let mut evals = 0usize;
    for w in edges.windows(2) {
        let mut val = vec![0.0; dim];
        let mut err = vec![0.0; dim];
        rule.apply(&mut f, w[0], w[1], &mut val, &mut err)?;
        evals += 21;
        for i in 0..dim {
            total[i] += val[i];
            total_err[i] += err[i];
        }
        segs.push(Segment {
            a: w[0],
            b: w[1],
            val,
            err,
            frozen: false,
        });
    }

    // Component weights so one heap key ranks vector errors.
    let weights: Vec<f64> = (0..dim)
        .map(|i| {
            let scale = (spec.rel_tol * total[i].abs()).max(spec.abs_tol);
            if scale > 0.0 {
                1.0 / scale
            } else {
                1.0
            }
        })
        .collect();
    let key_of = |s: &Segment| -> f64 {
        if s.frozen {
            return f64::NEG_INFINITY;
        }
        s.err
            .iter()
            .zip(&weights)
            .map(|(e, w)| e * w)
            .fold(0.0, f64::max)
    };
    let converged = |total: &[f64], total_err: &[f64]| -> bool {
        total
            .iter()
            .zip(total_err)
            .all(|(v, e)| *e <= (spec.rel_tol * v.abs()).max(spec.abs_tol))
    };

    let mut heap = BinaryHeap::new();
    for (i, s) in segs.iter().enumerate() {
        heap.push(Key(key_of(s), i));
    }

    let mut val_l = vec![0.0; dim];
    let mut err_l = vec![0.0; dim];
    let mut val_r = vec![0.0; dim];
    let mut err_r = vec![0.0; dim];
    while !converged(&total, &total_err) {
        if segs.len() >= spec.max_subdiv + edges.len() - 1 {
            break;
        }
        let Some(Key(k, idx)) = heap.pop() else { break };
        if k == f64::NEG_INFINITY {
            break;
        }
        let (a, b) = (segs[idx].a, segs[idx].b);
        let m = 0.5 * (a + b);
        if !(m > a && m < b) || (b - a) <= 1e3 * EPMACH * a.abs().max(b.abs()).max(UFLOW) {
            segs[idx].frozen = true;
            heap.push(Key(f64::NEG_INFINITY, idx));
            continue;
        }
        rule.apply(&mut f, a, m, &mut val_l, &mut err_l)?;
        rule.apply(&mut f, m, b, &mut val_r, &mut err_r)?;
        evals += 42;
        for i in 0..dim {
            total[i] += val_l[i] + val_r[i] - segs[idx].val[i];
            total_err[i] += err_l[i] + err_r[i] - segs[idx].err[i];
        }
        segs[idx].b = m;
        segs[idx].val.copy_from_slice(&val_l);
        segs[idx].err.copy_from_slice(&err_l);
        heap.push(Key(key_of(&segs[idx]), idx));
        segs.push(Segment {
            a: m,
            b,
            val: val_r.clone(),
            err: err_r.clone(),
            frozen: false,
        });
        let n = segs.len() - 1;
        heap.push(Key(key_of(&segs[n]), n));
    }

    // Resum from scratch in storage order: running totals drift.
    let mut values = vec![0.0; dim];
    let mut err_ests = vec![0.0; dim];
    for s in &segs {
        for i in 0..dim {
            values[i] += s.val[i];
            err_ests[i] += s.err[i];
        }
    }
    let ok = values
        .iter()
        .zip(&err_ests)
        .all(|(v, e)| *e <= (spec.rel_tol * v.abs()).max(spec.abs_tol));
    // A frozen segment means the remaining error is roundoff-dominated; accept
    // it when within a generous multiple of the target.
    let roundoff_ok = values.iter().zip(&err_ests).all(|(v, e)| {
        *e <= 10.0 * (spec.rel_tol * v.abs()).max(spec.abs_tol)
    }) && segs.iter().any(|s| s.frozen);
    if ok || roundoff_ok {
        Ok(VecQuadResult {
            values,
            err_ests,
            evals,
        })
    } else {
        let worst = (0..dim)
            .max_by(|&i, &j| (err_ests[i] * weights[i]).total_cmp(&(err_ests[j] * weights[j])))
            .unwrap_or(0);
        Err(Error::NoConvergence {
            value: values[worst],
            err_est: err_ests[worst],
        })
    }
}

fn scalar<F: FnMut(f64) -> f64>(mut f: F) -> impl FnMut(f64, &mut [f64]) -> Result<()> {
    move |x, out| {
        out[0] = f(x);
        Ok(())
    }
}

fn unpack(r: VecQuadResult) -> QuadResult {
    QuadResult {
        value: r.values[0],
        err_est: r.err_ests[0],
        evals: r.evals,
    }
}

/// ∫_a^b f. `b` may be `f64::INFINITY`, in which case τ = a + u/(1−u) maps
/// the half-line onto [0, 1).
pub fn integrate_1d<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64, spec: &QuadSpec) -> Result<QuadResult> {
    if b == f64::INFINITY {
        return integrate_semi_infinite(f, a, 1.0, spec);
    }
    integrate_1d_breaks(f, a, b, &[], spec)
}

/// ∫_a^b f with extra initial breakpoints (kinks, peaks, singularities).
/// Breakpoints outside (a, b) are ignored.
pub fn integrate_1d_breaks<F: FnMut(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    spec: &QuadSpec,
) -> Result<QuadResult> {
    if a == b {
        return Ok(QuadResult {
            value: 0.0,
            err_est: 0.0,
            evals: 0,
        });
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let edges = edges_with(lo, hi, breaks);
    let mut r = unpack(integrate_vec(scalar(f), 1, &edges, spec)?);
    r.value *= sign;
    Ok(r)
}

/// Sorted edge list lo, (breaks inside), hi.
pub fn edges_with(lo: f64, hi: f64, breaks: &[f64]) -> Vec<f64> {
    let mut e = vec![lo];
    let mut inner: Vec<f64> = breaks.iter().copied().filter(|&x| x > lo && x < hi).collect();
    inner.sort_by(f64::total_cmp);
    inner.dedup();
    e.extend(inner);
    e.push(hi);
    e
}

/// ∫_a^∞ f(τ) dτ through τ = a + scale·u/(1−u). `scale` should be near the
/// width of the region carrying most of the mass.
pub fn integrate_semi_infinite<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    scale: f64,
    spec: &QuadSpec,
) -> Result<QuadResult> {
    if !(scale > 0.0) {
        return Err(Error::Domain("semi-infinite scale must be > 0".into()));
    }
    let g = move |u: f64| {
        let w = 1.0 - u;
        let v = f(a + scale * u / w);
        if v == 0.0 {
            0.0
        } else {
            v * scale / (w * w)
        }
    };
    integrate_1d_breaks(g, 0.0, 1.0, &[], spec)
}

/// Polar-measure disk integral ∫_0^R ∫_0^{2π} f(r, φ) r dφ dr.
pub fn integrate_disk<F: FnMut(f64, f64) -> f64>(mut f: F, radius: f64, spec: &QuadSpec) -> Result<QuadResult> {
    let r = integrate_disk_vec(
        |r, phi, out: &mut [f64]| {
            out[0] = f(r, phi);
            Ok(())
        },
        1,
        radius,
        &[],
        &[0.0, 2.0 * PI],
        spec,
    )?;
    Ok(unpack(r))
}

/// Vector disk integral ∫_0^R ∫_{φ0}^{φn} f(r, φ) r dφ dr with radial
/// breakpoints and an explicit list of angular edges (first and last entry
/// give the angular range).
pub fn integrate_disk_vec<F>(
    mut f: F,
    dim: usize,
    radius: f64,
    r_breaks: &[f64],
    phi_edges: &[f64],
    spec: &QuadSpec,
) -> Result<VecQuadResult>
where
    F: FnMut(f64, f64, &mut [f64]) -> Result<()>,
{
    if !(radius > 0.0) {
        return Err(Error::NonPositive("disk radius"));
    }
    let inner_spec = spec.inner();
    let r_edges = edges_with(0.0, radius, r_breaks);
    let mut inner_evals = 0usize;
    let mut res = integrate_vec(
        |r, out: &mut [f64]| {
            let inner = integrate_vec(|phi, o: &mut [f64]| f(r, phi, o), dim, phi_edges, &inner_spec)?;
            inner_evals += inner.evals;
            for (o, v) in out.iter_mut().zip(&inner.values) {
                *o = v * r;
            }
            Ok(())
        },
        dim,
        &r_edges,
        spec,
    )?;
    res.evals = inner_evals;
    Ok(res)
}

/// Length of the part of the circle of radius `l` about a point at distance
/// `d` from the origin that lies inside the disk of radius `radius`.
pub fn arc_inside_disk(l: f64, d: f64, radius: f64) -> f64 {
    if l <= 0.0 {
        return 0.0;
    }
    if l + d <= radius {
        return 2.0 * PI * l;
    }
    if l >= radius + d || d >= radius + l {
        return 0.0;
    }
    let u = ((l * l + d * d - radius * radius) / (2.0 * l * d)).clamp(-1.0, 1.0);
    2.0 * l * u.acos()
}

/// ∫_{|r|<R} h(|x − r|) dA for a radial kernel `h` and an observation point
/// at distance `x_norm` from the disk center. Polar coordinates about x turn
/// this into ∫ h(l)·arc(l) dl with [`arc_inside_disk`] as the weight, so only
/// a 1D adaptive integral is needed. `breaks` adds kernel-specific edges.
pub fn integrate_disk_radial_kernel_breaks<F>(
    mut h: F,
    dim: usize,
    radius: f64,
    x_norm: f64,
    breaks: &[f64],
    spec: &QuadSpec,
) -> Result<VecQuadResult>
where
    F: FnMut(f64, &mut [f64]) -> Result<()>,
{
    if !(radius > 0.0) {
        return Err(Error::NonPositive("disk radius"));
    }
    if !(x_norm >= 0.0) || !x_norm.is_finite() {
        return Err(Error::Domain(format!("observation distance must be finite and >= 0, got {x_norm}")));
    }
    let hi = radius + x_norm;
    let mut b: Vec<f64> = breaks.to_vec();
    b.push((radius - x_norm).abs());
    // Geometric edges toward l = 0 where kernels are typically singular.
    let mut e = hi;
    for _ in 0..6 {
        e *= 0.1;
        b.push(e);
    }
    let edges = edges_with(0.0, hi, &b);
    integrate_vec(
        |l, out: &mut [f64]| {
            let w = arc_inside_disk(l, x_norm, radius);
            if w == 0.0 {
                out.iter_mut().for_each(|o| *o = 0.0);
                return Ok(());
            }
            h(l, out)?;
            out.iter_mut().for_each(|o| *o *= w);
            Ok(())
        },
        dim,
        &edges,
        spec,
    )
}

/// [`integrate_disk_radial_kernel_breaks`] without extra edges.
pub fn integrate_disk_radial_kernel<F>(
    h: F,
    dim: usize,
    radius: f64,
    x_norm: f64,
    spec: &QuadSpec,
) -> Result<VecQuadResult>
where
    F: FnMut(f64, &mut [f64]) -> Result<()>,
{
    integrate_disk_radial_kernel_breaks(h, dim, radius, x_norm, &[], spec)
}

/// ∫_{|r|<R1}∫_0^{2π}∫_{|r0|<R0}∫_0^{2π} inner(Ω, Υ) |r0||r| dθ d|r0| dφ d|r|
/// evaluated as four nested adaptive integrals. Exposed for cross-checks;
/// callers with an integrand depending only on Ω should memoize instead.
pub fn integrate_nested_4d<F>(inner: F, r1: f64, r0: f64, b: Point2, spec: &QuadSpec) -> Result<QuadResult>
where
    F: Fn(&GeometryTerms) -> f64,
{
    if !(r1 > 0.0) || !(r0 > 0.0) {
        return Err(Error::NonPositive("nested integral radius"));
    }
    let bn = b.norm();
    let receiver_spec = spec.inner();
    let res = integrate_disk_vec(
        |r, phi, out: &mut [f64]| {
            let l = GeometryTerms::new(bn, r, phi, 0.0, 0.0).omega.sqrt();
            // Receiver disk about the field point; singular where Υ = 0,
            // i.e. |r0| = l and θ = π.
            let v = integrate_disk_vec(
                |rho, theta, o: &mut [f64]| {
                    o[0] = inner(&GeometryTerms::new(bn, r, phi, rho, theta));
                    Ok(())
                },
                1,
                r0,
                &[l],
                &[0.0, PI],
                &receiver_spec,
            )?;
            out[0] = 2.0 * v.values[0];
            Ok(())
        },
        1,
        r1,
        &[bn],
        &[0.0, PI],
        spec,
    )?;
    Ok(QuadResult {
        value: 2.0 * res.values[0],
        err_est: 2.0 * res.err_ests[0],
        evals: res.evals,
    })
}

/// Options for [`ChebTable::build`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChebOpts {
    /// Polynomial degree per piece.
    pub degree: usize,
    /// Tail coefficients must fall below rel_tol·(max |f| on the piece).
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_pieces: usize,
}

impl Default for ChebOpts {
    fn default() -> Self {
        ChebOpts {
            degree: 16,
            rel_tol: 1e-11,
            abs_tol: 0.0,
            max_pieces: 512,
        }
    }
}

/// Piecewise Chebyshev interpolant of a vector function on [a, b].
#[derive(Debug, Clone)]
pub struct ChebTable {
    edges: Vec<f64>,
    dim: usize,
    n: usize,
    coeffs: Vec<f64>,
}

impl ChebTable {
    /// Adaptive build: each piece is bisected until the last two Chebyshev
    /// coefficients are negligible for every component. `edges` give the
    /// initial pieces (kinks of `f` belong there).
    pub fn build<F>(mut f: F, dim: usize, edges: &[f64], opts: &ChebOpts) -> Result<Self>
    where
        F: FnMut(f64, &mut [f64]) -> Result<()>,
    {
        if edges.len() < 2 || edges.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Domain("Chebyshev edges must be strictly increasing".into()));
        }
        let n = opts.degree + 1;
        let nodes: Vec<f64> = (0..n)
            .map(|j| (PI * (j as f64 + 0.5) / n as f64).cos())
            .collect();
        let mut pending: Vec<(f64, f64)> = edges.windows(2).rev().map(|w| (w[0], w[1])).collect();
        let mut done: Vec<(f64, f64, Vec<f64>)> = Vec::new();
        let mut samples = vec![0.0; n * dim];
        let mut out = vec![0.0; dim];
        while let Some((a, b)) = pending.pop() {
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            for (j, t) in nodes.iter().enumerate() {
                f(mid + half * t, &mut out)?;
                for i in 0..dim {
                    if !out[i].is_finite() {
                        return Err(Error::Domain(format!(
                            "non-finite value tabulating at {:e}",
                            mid + half * t
                        )));
                    }
                    samples[i * n + j] = out[i];
                }
            }
            let mut c = vec![0.0; n * dim];
            let mut accurate = true;
            for i in 0..dim {
                let s = &samples[i * n..(i + 1) * n];
                let ci = &mut c[i * n..(i + 1) * n];
                for (k, ck) in ci.iter_mut().enumerate() {
                    let mut acc = 0.0;
                    for (j, sj) in s.iter().enumerate() {
                        acc += sj * (PI * k as f64 * (j as f64 + 0.5) / n as f64).cos();
                    }
                    *ck = acc * 2.0 / n as f64;
                }
                ci[0] *= 0.5;
                let scale = s.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                let tol = (opts.rel_tol * scale).max(opts.abs_tol);
                let tail = ci[n - 1].abs().max(ci[n - 2].abs());
                if tail > tol {
                    accurate = false;
                }
            }
            let narrow = half <= 1e3 * f64::EPSILON * a.abs().max(b.abs());
            if accurate || narrow || done.len() + pending.len() + 2 > opts.max_pieces {
                if !accurate && !narrow {
                    return Err(Error::NoConvergence {
                        value: samples[0],
                        err_est: f64::INFINITY,
                    });
                }
                done.push((a, b, c));
            } else {
                pending.push((mid, b));
                pending.push((a, mid));
            }
        }
        done.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut edges_out = Vec::with_capacity(done.len() + 1);
        let mut coeffs = Vec::with_capacity(done.len() * n * dim);
        for (a, _, c) in &done {
            edges_out.push(*a);
            coeffs.extend_from_slice(c);
        }
        edges_out.push(done.last().map(|d| d.1).unwrap_or(edges[0]));
        Ok(ChebTable {
            edges: edges_out,
            dim,
            n,
            coeffs,
        })
    }

    pub fn build_scalar<F: FnMut(f64) -> Result<f64>>(mut f: F, edges: &[f64], opts: &ChebOpts) -> Result<Self> {
        Self::build(
            |x, out: &mut [f64]| {
                out[0] = f(x)?;
                Ok(())
            },
            1,
            edges,
            opts,
        )
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.edges[0], self.edges[self.edges.len() - 1])
    }

    pub fn pieces(&self) -> usize {
        self.edges.len() - 1
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn contains(&self, x: f64) -> bool {
        let (a, b) = self.domain();
        x >= a && x <= b
    }

    fn piece(&self, x: f64) -> usize {
        let p = self.edges.partition_point(|&e| e <= x);
        p.saturating_sub(1).min(self.pieces() - 1)
    }

    /// Evaluate all components at `x` (clamped to the domain).
    pub fn eval(&self, x: f64, out: &mut [f64]) {
        let p = self.piece(x);
        let (a, b) = (self.edges[p], self.edges[p + 1]);
        let t = ((2.0 * x - a - b) / (b - a)).clamp(-1.0, 1.0);
        let base = p * self.n * self.dim;
        for (i, o) in out.iter_mut().enumerate().take(self.dim) {
            let c = &self.coeffs[base + i * self.n..base + (i + 1) * self.n];
            *o = clenshaw(c, t);
        }
    }

    /// First component at `x`.
    pub fn eval1(&self, x: f64) -> f64 {
        let p = self.piece(x);
        let (a, b) = (self.edges[p], self.edges[p + 1]);
        let t = ((2.0 * x - a - b) / (b - a)).clamp(-1.0, 1.0);
        let base = p * self.n * self.dim;
        clenshaw(&self.coeffs[base..base + self.n], t)
    }
}

fn clenshaw(c: &[f64], t: f64) -> f64 {
    let mut b1 = 0.0;
    let mut b2 = 0.0;
    let t2 = 2.0 * t;
    for &ck in c[1..].iter().rev() {
        let b0 = ck + t2 * b1 - b2;
        b2 = b1;
        b1 = b0;
    }
    c[0] + t * b1 - b2
}
