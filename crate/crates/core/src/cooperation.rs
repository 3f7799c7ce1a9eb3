//! Probability that a bacterium at a fixed location observes at least η
//! molecules, averaged over the random positions of all other bacteria.
//!
//! Given the positions, the observation is Poisson with mean
//! N̄ = N̄_self + Σ_a F(|x − a|), where F is the pointwise continuous kernel.
//! Averaging over a PPP of density λ́ gives a Poisson mixture whose generating
//! function is L(1 − z) = exp(−N̄_self(1−z) − λ́∫(1 − e^{−(1−z)F}) dA), so the
//! n-th mixture weight is L(1)·c_n with c_n the Taylor coefficients of
//! exp(Σ_j a_j z^j), a_1 = (N̄_self + J_1)/1!, a_j = J_j/j!, and
//! J_j = λ́∫F^j e^{−F} dA.

use std::f64::consts::PI;

use crate::channel::{ChannelModel, PointwiseMode};
use crate::error::{Error, Result};
use crate::params::{EnvParams, Point2};
use crate::quadrature::{integrate_disk_radial_kernel, QuadSpec};
use crate::specfun::{ln_factorial, reg_gamma_p};

/// Largest n accepted by [`enumerate_partitions`].
pub const PARTITION_CAP: usize = 12;

/// Multiplicities (m_1..m_n) with Σ j·m_j = n.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PartitionTuple {
    pub multiplicities: Vec<u32>,
}

impl PartitionTuple {
    pub fn n(&self) -> usize {
        self.multiplicities
            .iter()
            .enumerate()
            .map(|(i, &m)| (i + 1) * m as usize)
            .sum()
    }
}

/// All integer partitions of `n` in multiplicity form. `n = 0` yields the
/// single empty tuple.
pub fn enumerate_partitions(n: usize) -> Result<Vec<PartitionTuple>> {
    if n > PARTITION_CAP {
        return Err(Error::CapExceeded { n, cap: PARTITION_CAP });
    }
    let mut out = Vec::new();
    let mut m = vec![0u32; n];
    fn rec(part: usize, remaining: usize, m: &mut Vec<u32>, out: &mut Vec<PartitionTuple>) {
        if remaining == 0 {
            out.push(PartitionTuple { multiplicities: m.clone() });
            return;
        }
        if part == 0 {
            return;
        }
        for k in (0..=remaining / part).rev() {
            m[part - 1] = k as u32;
            rec(part - 1, remaining - k * part, m, out);
        }
        m[part - 1] = 0;
    }
    rec(n, n, &mut m, &mut out);
    Ok(out)
}

/// Σ_{n<eta} Σ_partitions ∏ a_j^{m_j}/m_j!, the partition form of the head of
/// the mixture series. `a[j-1]` holds a_j; needs `a.len() >= eta - 1`.
pub fn series_head_partitions(a: &[f64], eta: u32) -> Result<f64> {
    let nmax = eta.saturating_sub(1) as usize;
    if a.len() < nmax {
        return Err(Error::Domain(format!("need {nmax} moments, got {}", a.len())));
    }
    let mut total = 0.0;
    for n in 0..=nmax {
        for p in enumerate_partitions(n)? {
            let mut term = 1.0;
            for (j, &mj) in p.multiplicities.iter().enumerate() {
                if mj > 0 {
                    term *= a[j].powi(mj as i32) / ln_factorial(mj as u64).exp();
                }
            }
            total += term;
        }
    }
    Ok(total)
}

/// Taylor coefficients c_0..c_nmax of exp(Σ_j a_j z^j) by the recursion
/// n·c_n = Σ_{j=1}^{n} j·a_j·c_{n−j}.
pub fn series_coefficients(a: &[f64], nmax: usize) -> Vec<f64> {
    let mut c = vec![0.0; nmax + 1];
    c[0] = 1.0;
    for n in 1..=nmax {
        let mut s = 0.0;
        for j in 1..=n.min(a.len()) {
            s += j as f64 * a[j - 1] * c[n - j];
        }
        c[n] = s / n as f64;
    }
    c
}

/// Quantities shared by every n in the cooperation sum at one location.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplaceMoments {
    /// J_j for j = 1..=jmax (index j−1).
    pub j_moments: Vec<f64>,
    /// J_j / j!, kept separately because J_j overflows for large j.
    pub scaled: Vec<f64>,
    pub self_term: f64,
    /// ln L(1).
    pub ln_l1: f64,
}

impl LaplaceMoments {
    pub fn l1(&self) -> f64 {
        self.ln_l1.exp()
    }

    /// a_j = g_j / j! with the self term folded into j = 1.
    pub fn series_terms(&self) -> Vec<f64> {
        let mut a = self.scaled.clone();
        if let Some(a1) = a.first_mut() {
            *a1 += self.self_term;
        }
        a
    }
}

/// Cooperation model at fixed parameters; caches the kernel table.
#[derive(Debug)]
pub struct CoopModel {
    channel: ChannelModel,
    mode: PointwiseMode,
    reduced: f64,
    self_term: f64,
    spec: QuadSpec,
}

impl CoopModel {
    /// `mode` selects the kernel F: disk-averaged (Exact) or center value
    /// times area (Uca).
    pub fn new(p: &EnvParams, mode: PointwiseMode) -> Result<Self> {
        if p.degradation <= 0.0 {
            return Err(Error::DegradationRequired);
        }
        let reduced = p.reduced_density()?;
        let self_term = crate::channel::continuous_self_response(p)?.mean_count;
        let spec = QuadSpec::new(1e-8, 1e-15 * PI * p.pop_radius * p.pop_radius, 4000)?;
        Ok(CoopModel {
            channel: ChannelModel::new(p),
            mode,
            reduced,
            self_term,
            spec,
        })
    }

    pub fn params(&self) -> &EnvParams {
        self.channel.params()
    }

    pub fn mode(&self) -> PointwiseMode {
        self.mode
    }

    pub fn self_term(&self) -> f64 {
        self.self_term
    }

    pub fn reduced_density(&self) -> f64 {
        self.reduced
    }

    pub fn spec(&self) -> &QuadSpec {
        &self.spec
    }

    /// Override the quadrature tolerance of the field integrals.
    pub fn with_spec(mut self, spec: QuadSpec) -> Self {
        self.spec = spec;
        self
    }

    /// exp(−s·N̄_self − λ́∫(1 − e^{−sF}) dA).
    pub fn laplace_transform(&self, s: f64, x_norm: f64) -> Result<f64> {
        if !(s >= 0.0) || !s.is_finite() {
            return Err(Error::Domain(format!("Laplace variable must be finite and >= 0, got {s}")));
        }
        let kf = self.channel.kernel_fn(self.mode)?;
        let r = integrate_disk_radial_kernel(
            |l, out: &mut [f64]| {
                out[0] = -(-s * kf(l)).exp_m1();
                Ok(())
            },
            1,
            self.params().pop_radius,
            x_norm,
            &self.spec,
        )?;
        Ok((-s * self.self_term - self.reduced * r.values[0]).exp())
    }

    /// L(1) and J_1..J_jmax from one vector integral.
    pub fn moments(&self, x_norm: f64, jmax: usize) -> Result<LaplaceMoments> {
        let kf = self.channel.kernel_fn(self.mode)?;
        let dim = jmax + 1;
        let r = integrate_disk_radial_kernel(
            |l, out: &mut [f64]| {
                let f = kf(l);
                let e = (-f).exp();
                out[0] = -(-f).exp_m1();
                // F^j e^{−F}/j!, a Poisson weight, so every component stays ≤ 1.
                let mut t = e;
                for (j, o) in out.iter_mut().enumerate().skip(1) {
                    t *= f / j as f64;
                    *o = t;
                }
                Ok(())
            },
            dim,
            self.params().pop_radius,
            x_norm,
            &self.spec,
        )?;
        let scaled: Vec<f64> = r.values[1..].iter().map(|v| self.reduced * v).collect();
        let j_moments = scaled
            .iter()
            .enumerate()
            .map(|(i, v)| v * ln_factorial(i as u64 + 1).exp())
            .collect();
        Ok(LaplaceMoments {
            j_moments,
            scaled,
            self_term: self.self_term,
            ln_l1: -self.self_term - self.reduced * r.values[0],
        })
    }

    /// Exact cooperating probability through the partition sum. η − 1 must
    /// not exceed [`PARTITION_CAP`].
    pub fn prob_exact(&self, x_norm: f64, eta: u32) -> Result<f64> {
        check_eta(eta)?;
        let n = eta as usize - 1;
        if n > PARTITION_CAP {
            return Err(Error::CapExceeded { n, cap: PARTITION_CAP });
        }
        let m = self.moments(x_norm, n.max(1))?;
        let head = series_head_partitions(&m.series_terms(), eta)?;
        Ok((1.0 - m.l1() * head).clamp(0.0, 1.0))
    }

    /// Exact probabilities for η = 1..=eta_max at once. Each value is the
    /// mixture tail L(1)·Σ_{n≥η} c_n, summed from the far end, which stays
    /// accurate when the probability is tiny. No partition cap applies.
    pub fn prob_exact_all(&self, x_norm: f64, eta_max: u32) -> Result<Vec<f64>> {
        check_eta(eta_max)?;
        let mut jmax = (2 * eta_max as usize).max(32);
        loop {
            let m = self.moments(x_norm, jmax)?;
            let c = series_coefficients(&m.series_terms(), jmax);
            let l1 = m.l1();
            let total: f64 = l1 * c.iter().sum::<f64>();
            // The mixture must be fully captured by the first jmax weights.
            if 1.0 - total < 1e-13 || jmax >= 400 {
                if 1.0 - total > 1e-9 {
                    return Err(Error::NoConvergence {
                        value: total,
                        err_est: 1.0 - total,
                    });
                }
                let mut tails = vec![0.0; jmax + 2];
                for n in (0..=jmax).rev() {
                    tails[n] = tails[n + 1] + l1 * c[n];
                }
                return Ok((1..=eta_max as usize)
                    .map(|eta| tails.get(eta).copied().unwrap_or(0.0).clamp(0.0, 1.0))
                    .collect());
            }
            jmax *= 2;
        }
    }

    /// E over positions of the aggregate mean, N̄_self + λ́∫F dA.
    pub fn mean_observation(&self, x_norm: f64) -> Result<f64> {
        let kf = self.channel.kernel_fn(self.mode)?;
        let r = integrate_disk_radial_kernel(
            |l, out: &mut [f64]| {
                out[0] = kf(l);
                Ok(())
            },
            1,
            self.params().pop_radius,
            x_norm,
            &self.spec,
        )?;
        Ok(self.self_term + self.reduced * r.values[0])
    }

    /// Poisson approximation with the mean observation: P(η, μ).
    pub fn prob_approx(&self, x_norm: f64, eta: u32) -> Result<f64> {
        check_eta(eta)?;
        reg_gamma_p(eta, self.mean_observation(x_norm)?)
    }

    /// Pointwise kernel F(l).
    pub fn kernel(&self, l: f64) -> Result<f64> {
        self.channel.kernel(l, self.mode)
    }
}

fn check_eta(eta: u32) -> Result<()> {
    if eta == 0 {
        Err(Error::Domain("threshold must be >= 1".into()))
    } else {
        Ok(())
    }
}

pub fn laplace_transform(s: f64, x: Point2, params: &EnvParams) -> Result<f64> {
    CoopModel::new(params, PointwiseMode::Exact)?.laplace_transform(s, x.norm())
}

/// Exact cooperating probability at `x` with the disk-averaged kernel.
pub fn coop_prob_exact(x: Point2, params: &EnvParams) -> Result<f64> {
    CoopModel::new(params, PointwiseMode::Exact)?.prob_exact(x.norm(), params.threshold)
}

/// Poisson approximation at `x`; `mode` picks the kernel in the mean.
pub fn coop_prob_approx(x: Point2, params: &EnvParams, mode: PointwiseMode) -> Result<f64> {
    CoopModel::new(params, mode)?.prob_approx(x.norm(), params.threshold)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::UM;
    use crate::pointprocess::{sample_disk_ppp_with, stream_rng, StreamKind};
    use crate::specfun::reg_gamma_q;

    fn partitions_count(n: usize) -> usize {
        // p(n) via Euler's recurrence as an independent oracle.
        let mut p = vec![0i64; n + 1];
        p[0] = 1;
        for i in 1..=n {
            let mut k = 1i64;
            loop {
                let g1 = (k * (3 * k - 1) / 2) as usize;
                if g1 > i {
                    break;
                }
                let sign = if k % 2 == 1 { 1 } else { -1 };
                p[i] += sign * p[i - g1];
                let g2 = (k * (3 * k + 1) / 2) as usize;
                if g2 <= i {
                    p[i] += sign * p[i - g2];
                }
                k += 1;
            }
        }
        p[n] as usize
    }

    #[test]
    fn partition_counts() {
        assert_eq!(enumerate_partitions(1).unwrap(), vec![PartitionTuple { multiplicities: vec![1] }]);
        assert_eq!(enumerate_partitions(4).unwrap().len(), 5);
        for n in 1..=12 {
            let ps = enumerate_partitions(n).unwrap();
            assert_eq!(ps.len(), partitions_count(n), "n={n}");
            assert!(ps.iter().all(|p| p.n() == n));
            let set: std::collections::HashSet<_> = ps.iter().collect();
            assert_eq!(set.len(), ps.len());
        }
        assert_eq!(enumerate_partitions(13), Err(Error::CapExceeded { n: 13, cap: 12 }));
    }

    #[test]
    fn partitions_of_six_brute_force() {
        let mut count = 0;
        let mut idx = [0u32; 6];
        loop {
            let s: u32 = idx.iter().enumerate().map(|(j, &m)| (j as u32 + 1) * m).sum();
            if s == 6 {
                count += 1;
                assert!(enumerate_partitions(6)
                    .unwrap()
                    .contains(&PartitionTuple { multiplicities: idx.to_vec() }));
            }
            let mut k = 0;
            while k < 6 {
                idx[k] += 1;
                if idx[k] <= 6 {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
            if k == 6 {
                break;
            }
        }
        assert_eq!(count, 11);
    }

    #[test]
    fn head_matches_recursion() {
        let a = [0.7, 0.3, 0.11, 0.05, 0.02, 0.013, 0.004, 0.001, 3e-4, 1e-4, 2e-5, 1e-5];
        let c = series_coefficients(&a, 12);
        for eta in 1..=13u32 {
            let h = series_head_partitions(&a, eta).unwrap();
            let r: f64 = c[..eta as usize].iter().sum();
            assert!((h - r).abs() < 1e-14 * r, "eta={eta}");
        }
        // Pure Poisson: only a_1.
        let c = series_coefficients(&[2.0], 10);
        assert!((c[3] - 8.0 / 6.0).abs() < 1e-15);
    }

    fn model(r1_um: f64, mode: PointwiseMode) -> CoopModel {
        let p = EnvParams::reference().with_pop_radius_fixed_count(r1_um * UM);
        CoopModel::new(&p, mode).unwrap()
    }

    #[test]
    fn eta_one_is_one_minus_l1() {
        let m = model(50.0, PointwiseMode::Uca);
        let x = 25.0 * UM * 2f64.sqrt();
        let p = m.prob_exact(x, 1).unwrap();
        let l = m.laplace_transform(1.0, x).unwrap();
        assert!((p - (1.0 - l)).abs() < 1e-12);
        assert!((m.laplace_transform(0.0, x).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn laplace_completely_monotone() {
        let m = model(50.0, PointwiseMode::Exact);
        let x = 25.0 * UM * 2f64.sqrt();
        let h = 0.25;
        let v: Vec<f64> = (0..8).map(|i| m.laplace_transform(i as f64 * h, x).unwrap()).collect();
        let mut d = v.clone();
        for order in 1..=3 {
            d = d.windows(2).map(|w| w[1] - w[0]).collect();
            let sign = if order % 2 == 1 { -1.0 } else { 1.0 };
            assert!(d.iter().all(|&x| sign * x > 0.0), "order {order}: {d:?}");
        }
    }

    #[test]
    fn tail_and_partition_forms_agree() {
        for mode in [PointwiseMode::Exact, PointwiseMode::Uca] {
            let m = model(50.0, mode);
            let x = 25.0 * UM * 2f64.sqrt();
            let all = m.prob_exact_all(x, 13).unwrap();
            // Different vector dimensions subdivide differently, so agreement
            // is at the quadrature tolerance.
            for eta in 1..=13u32 {
                let p = m.prob_exact(x, eta).unwrap();
                assert!((p - all[eta as usize - 1]).abs() < 1e-8, "eta={eta}: {p} vs {}", all[eta as usize - 1]);
            }
            assert!(all.windows(2).all(|w| w[1] <= w[0]));
            assert!(all[12] < 1e-2);
        }
        assert!(matches!(model(50.0, PointwiseMode::Exact).prob_exact(0.0, 14), Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn approx_basics() {
        let m = model(50.0, PointwiseMode::Uca);
        let x = 10.0 * UM;
        let mu = m.mean_observation(x).unwrap();
        assert!(((m.prob_approx(x, 1).unwrap() - (1.0 - (-mu).exp())) / (1.0 - (-mu).exp())).abs() < 1e-13);
        for eta in 1..=8 {
            let p = m.prob_approx(x, eta).unwrap();
            assert!((p - (1.0 - reg_gamma_q(eta, mu).unwrap())).abs() < 1e-14);
        }
        // q → 0 drives μ and the probability to zero.
        let mut p = *m.params();
        p.emission_rate = 1e-9;
        let tiny = CoopModel::new(&p, PointwiseMode::Uca).unwrap().prob_approx(x, 1).unwrap();
        assert!(tiny < 1e-9);
    }

    #[test]
    fn monotone_in_density_and_rate() {
        let base = EnvParams::reference().with_pop_radius_fixed_count(50.0 * UM).with_threshold(4);
        let x = 20.0 * UM;
        let eval = |p: &EnvParams| {
            let m = CoopModel::new(p, PointwiseMode::Exact).unwrap();
            (m.prob_exact(x, p.threshold).unwrap(), m.prob_approx(x, p.threshold).unwrap())
        };
        let (e0, a0) = eval(&base);
        let mut denser = base;
        denser.density *= 1.3;
        let (e1, a1) = eval(&denser);
        let mut louder = base;
        louder.emission_rate *= 1.3;
        let (e2, a2) = eval(&louder);
        assert!(e1 > e0 && a1 > a0 && e2 > e0 && a2 > a0);
    }

    /// Monte Carlo of the defining expectations: E{exp(−N̄)} and
    /// E{P(Poisson(N̄) ≥ η)} over PPP(λ́) neighbours plus the self term.
    #[test]
    fn laplace_and_probability_match_monte_carlo() {
        let m = model(50.0, PointwiseMode::Exact);
        let p = *m.params();
        let x = Point2::from_um(25.0, 25.0);
        let n = 100_000u64;
        let mut acc_l = 0.0;
        let mut acc_l2 = 0.0;
        let mut acc_p = [0.0; 6];
        for s in 0..n {
            let mut rng = stream_rng(s, StreamKind::Positions, 0);
            let pts = sample_disk_ppp_with(&mut rng, m.reduced_density(), p.pop_radius);
            let nbar: f64 = m.self_term() + pts.iter().map(|a| m.kernel(a.dist(&x)).unwrap()).sum::<f64>();
            let e = (-nbar).exp();
            acc_l += e;
            acc_l2 += e * e;
            for (k, a) in acc_p.iter_mut().enumerate() {
                *a += 1.0 - reg_gamma_q(k as u32 + 1, nbar).unwrap();
            }
        }
        let nf = n as f64;
        let mean = acc_l / nf;
        let se = ((acc_l2 / nf - mean * mean) / nf).sqrt();
        let l = m.laplace_transform(1.0, x.norm()).unwrap();
        assert!(((mean - l) / l).abs() < 0.01, "{mean} vs {l}");
        assert!((mean - l).abs() < 4.0 * se);
        for (k, a) in acc_p.iter().enumerate() {
            let mc = a / nf;
            let an = m.prob_exact(x.norm(), k as u32 + 1).unwrap();
            assert!(((mc - an) / an).abs() < 0.01, "eta={}: {mc} vs {an}", k + 1);
        }
    }
}
