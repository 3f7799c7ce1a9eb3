//! Spatial PPP of bacteria on the population disk, temporal PPP of releases,
//! and the seeded random streams every sampler draws from.
//!
//! Streams: a master seed is first mixed with a realization index into a
//! realization seed ([`realization_seed`]). A ChaCha8 generator keyed by that
//! seed is then split by `set_stream` into disjoint streams, one per
//! ([`StreamKind`], index) pair. Results therefore never depend on thread
//! count or on the order in which realizations are scheduled.

use std::f64::consts::PI;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Poisson};

use crate::error::{Error, Result};
use crate::params::{m_to_um, EnvParams, Point2};
use crate::specfun::ln_gamma;

/// Disjoint stream families within one realization seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum StreamKind {
    Positions = 1,
    Releases = 2,
    Molecules = 3,
    Motion = 4,
    Impulse = 5,
}

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn realization_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index.wrapping_add(0x5EED)))
}

/// Generator for stream (`kind`, `index`) of `seed`. Indices must stay below 2^56.
pub fn stream_rng(seed: u64, kind: StreamKind, index: u64) -> ChaCha8Rng {
    debug_assert!(index < 1 << 56);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((kind as u64) << 56) | index);
    rng
}

/// One realization of bacteria positions.
#[derive(Debug, Clone, PartialEq)]
pub struct DiskPPP {
    pub positions: Vec<Point2>,
    pub seed: u64,
    pub radius: f64,
}

impl DiskPPP {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// CSV with columns `x_um,y_um`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let io = |e: csv::Error| Error::Domain(format!("csv write failed: {e}"));
        wr.write_record(["x_um", "y_um"]).map_err(io)?;
        for p in &self.positions {
            wr.write_record([format!("{:.9}", m_to_um(p.x)), format!("{:.9}", m_to_um(p.y))])
                .map_err(io)?;
        }
        wr.flush().map_err(|e| Error::Domain(format!("csv flush failed: {e}")))?;
        Ok(())
    }
}

/// Uniform point on the disk of radius `r` (square-root radial transform).
pub fn uniform_in_disk<R: Rng + ?Sized>(rng: &mut R, r: f64) -> Point2 {
    let rad = r * rng.random::<f64>().sqrt();
    let phi = 2.0 * PI * rng.random::<f64>();
    Point2 { x: rad * phi.cos(), y: rad * phi.sin() }
}

/// Poisson draw that tolerates a zero mean.
pub fn poisson_count<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).map(|d| d.sample(rng) as u64).unwrap_or(0)
}

pub fn sample_disk_ppp_with<R: Rng + ?Sized>(rng: &mut R, density: f64, radius: f64) -> Vec<Point2> {
    let n = poisson_count(rng, density * PI * radius * radius);
    (0..n).map(|_| uniform_in_disk(rng, radius)).collect()
}

pub fn sample_disk_ppp(params: &EnvParams, seed: u64) -> DiskPPP {
    let mut rng = stream_rng(seed, StreamKind::Positions, 0);
    DiskPPP {
        positions: sample_disk_ppp_with(&mut rng, params.density, params.pop_radius),
        seed,
        radius: params.pop_radius,
    }
}

/// Sorted release instants on [0, t_end].
#[derive(Debug, Clone, PartialEq)]
pub struct ReleaseSchedule {
    pub times: Vec<f64>,
}

/// Exponential inter-arrival gaps with rate `q` until `t_end`.
pub fn release_times_with<R: Rng + ?Sized>(rng: &mut R, q: f64, t_end: f64) -> Vec<f64> {
    let mut out = Vec::new();
    if !(t_end > 0.0) || !(q > 0.0) {
        return out;
    }
    let gap = Exp::new(q).expect("positive rate");
    let mut t = gap.sample(rng);
    while t <= t_end {
        out.push(t);
        t += gap.sample(rng);
    }
    out
}

pub fn sample_release_times(q: f64, t_end: f64, seed: u64) -> Result<ReleaseSchedule> {
    if !(q > 0.0) {
        return Err(Error::NonPositive("emission rate"));
    }
    if !(t_end >= 0.0) {
        return Err(Error::Domain(format!("t_end must be >= 0, got {t_end}")));
    }
    let mut rng = stream_rng(seed, StreamKind::Releases, 0);
    Ok(ReleaseSchedule {
        times: release_times_with(&mut rng, q, t_end),
    })
}

/// Density of the distance to the n-th nearest point of a planar PPP:
/// 2(λπ)^n r^{2n−1} e^{−λπr²}/Γ(n).
pub fn nn_distance_pdf(n: u32, r: f64, density: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain("neighbour order n must be >= 1".into()));
    }
    if !(r >= 0.0) || !r.is_finite() {
        return Err(Error::Domain(format!("distance must be finite and >= 0, got {r}")));
    }
    if !(density > 0.0) {
        return Err(Error::NonPositive("density"));
    }
    Ok(nn_pdf_unchecked(n, r, density))
}

pub(crate) fn nn_pdf_unchecked(n: u32, r: f64, density: f64) -> f64 {
    if r == 0.0 {
        return 0.0;
    }
    let lp = density * PI;
    let nf = n as f64;
    let ln = std::f64::consts::LN_2 + nf * lp.ln() + (2.0 * nf - 1.0) * r.ln() - lp * r * r - ln_gamma(nf);
    ln.exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{per_um2_to_per_m2, UM};
    use crate::quadrature::{integrate_semi_infinite, QuadSpec};

    fn dense_small_disk() -> EnvParams {
        let mut p = EnvParams::reference();
        p.pop_radius = 20.0 * UM;
        p.density = per_um2_to_per_m2(7.9e-2);
        p
    }

    #[test]
    fn empty_when_density_zero() {
        let mut p = dense_small_disk();
        p.density = 0.0;
        assert!(sample_disk_ppp(&p, 3).is_empty());
    }

    #[test]
    fn deterministic_per_seed() {
        let p = dense_small_disk();
        assert_eq!(sample_disk_ppp(&p, 11), sample_disk_ppp(&p, 11));
        assert_ne!(sample_disk_ppp(&p, 11), sample_disk_ppp(&p, 12));
        let a = sample_release_times(1000.0, 0.3, 5).unwrap();
        assert_eq!(a, sample_release_times(1000.0, 0.3, 5).unwrap());
    }

    #[test]
    fn streams_are_distinct() {
        let a: u64 = stream_rng(1, StreamKind::Positions, 0).random();
        let b: u64 = stream_rng(1, StreamKind::Releases, 0).random();
        let c: u64 = stream_rng(1, StreamKind::Releases, 1).random();
        assert!(a != b && b != c && a != c);
        assert_ne!(realization_seed(1, 0), realization_seed(1, 1));
        assert_ne!(realization_seed(1, 0), realization_seed(2, 0));
    }

    #[test]
    fn mean_count_dense_small_disk() {
        let p = dense_small_disk();
        let n = 10_000u64;
        let total: usize = (0..n).map(|s| sample_disk_ppp(&p, s).len()).sum();
        let mean = total as f64 / n as f64;
        let expect = p.expected_count();
        assert!((expect - 99.27).abs() < 0.01);
        assert!(((mean - expect) / expect).abs() < 0.01, "{mean}");
    }

    #[test]
    fn positions_inside_and_radial_cdf() {
        let p = dense_small_disk();
        let mut r2: Vec<f64> = Vec::new();
        let mut s = 0;
        while r2.len() < 100_000 {
            for q in sample_disk_ppp(&p, s).positions {
                assert!(q.norm() <= p.pop_radius);
                r2.push((q.norm() / p.pop_radius).powi(2));
            }
            s += 1;
        }
        r2.sort_by(f64::total_cmp);
        let n = r2.len() as f64;
        let d = r2
            .iter()
            .enumerate()
            .map(|(i, &u)| ((i as f64 + 1.0) / n - u).abs().max((u - i as f64 / n).abs()))
            .fold(0.0, f64::max);
        // Asymptotic KS critical value at p = 0.01.
        assert!(d < 1.628 / n.sqrt(), "KS D = {d}");
    }

    #[test]
    fn release_counts_and_gaps() {
        let mut total = 0usize;
        let mut gaps = 0.0;
        let mut ngaps = 0usize;
        for s in 0..10_000 {
            let r = sample_release_times(1000.0, 1.0, s).unwrap();
            assert!(r.times.windows(2).all(|w| w[1] > w[0]));
            assert!(r.times.iter().all(|&t| (0.0..=1.0).contains(&t)));
            total += r.times.len();
            for w in r.times.windows(2) {
                gaps += w[1] - w[0];
                ngaps += 1;
            }
        }
        let mean = total as f64 / 1e4;
        assert!((mean - 1000.0).abs() < 10.0, "{mean}");
        assert!((gaps / ngaps as f64 * 1000.0 - 1.0).abs() < 0.01);
        assert!(sample_release_times(1000.0, 0.0, 1).unwrap().times.is_empty());
    }

    #[test]
    fn nn_pdf_normalized_and_mode() {
        let lam = per_um2_to_per_m2(7.9e-2);
        let scale = 1.0 / (lam * PI).sqrt();
        for n in [1, 2, 5] {
            let v = integrate_semi_infinite(|r| nn_distance_pdf(n, r, lam).unwrap(), 0.0, scale, &QuadSpec::one_d())
                .unwrap()
                .value;
            assert!((v - 1.0).abs() < 1e-8, "n={n}: {v}");
        }
        let mode = 1.0 / (2.0 * lam * PI).sqrt();
        let f = |r: f64| nn_distance_pdf(1, r, lam).unwrap();
        assert!(f(mode) > f(mode * 0.999) && f(mode) > f(mode * 1.001));
        assert!(nn_distance_pdf(0, scale, lam).is_err());
        assert!(nn_distance_pdf(1, -1.0, lam).is_err());
        assert!(nn_distance_pdf(1, 1.0, 0.0).is_err());
    }

    #[test]
    fn csv_roundtrip() {
        let p = dense_small_disk();
        let r = sample_disk_ppp(&p, 4);
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let mut rd = csv::Reader::from_reader(buf.as_slice());
        assert_eq!(rd.headers().unwrap(), vec!["x_um", "y_um"]);
        let back: Vec<(f64, f64)> = rd.deserialize().map(|x| x.unwrap()).collect();
        assert_eq!(back.len(), r.len());
        for (q, (x, y)) in r.positions.iter().zip(back) {
            assert!((x * UM - q.x).abs() < 1e-14 && (y * UM - q.y).abs() < 1e-14);
        }
    }
}
