//! Physical parameters, unit conversion and validation.
//!
//! Everything inside the library is SI (m, s). Users usually think in µm, so
//! [`EnvSpec`] carries µm-based values and [`validate`] converts them.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const UM: f64 = 1e-6;
pub const UM2: f64 = 1e-12;

pub fn um_to_m(x: f64) -> f64 {
    x * UM
}

pub fn m_to_um(x: f64) -> f64 {
    x / UM
}

/// Density in bacteria per µm² to bacteria per m².
pub fn per_um2_to_per_m2(x: f64) -> f64 {
    x / UM2
}

pub fn per_m2_to_per_um2(x: f64) -> f64 {
    x * UM2
}

/// Which checks [`validate`] applies beyond the basic invariants.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    Channel,
    Cooperation,
}

/// Validated, SI-unit parameters of one experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvParams {
    /// D in m²/s.
    pub diffusion: f64,
    /// k in 1/s.
    pub degradation: f64,
    /// q in molecules/s.
    pub emission_rate: f64,
    /// R0 in m.
    pub rx_radius: f64,
    /// R1 in m.
    pub pop_radius: f64,
    /// λ in bacteria/m².
    pub density: f64,
    /// η in molecules.
    pub threshold: u32,
}

impl EnvParams {
    /// Default environment: k = 10/s, R0 = 0.757 µm, q = 1000/s,
    /// D = 5.5e-10 m²/s, with 100 expected bacteria on a 50 µm disk and η = 1.
    pub fn reference() -> Self {
        let pop_radius = 50.0 * UM;
        EnvParams {
            diffusion: 5.5e-10,
            degradation: 10.0,
            emission_rate: 1000.0,
            rx_radius: 0.757 * UM,
            pop_radius,
            density: density_for_count(100.0, pop_radius),
            threshold: 1,
        }
    }

    /// Same parameters with `R1` changed and λ rescaled so that λπR1² stays put.
    pub fn with_pop_radius_fixed_count(mut self, pop_radius: f64) -> Self {
        let count = self.expected_count();
        self.pop_radius = pop_radius;
        self.density = density_for_count(count, pop_radius);
        self
    }

    pub fn with_threshold(mut self, threshold: u32) -> Self {
        self.threshold = threshold;
        self
    }

    /// √(k/D) in 1/m.
    pub fn decay_const(&self) -> f64 {
        (self.degradation / self.diffusion).sqrt()
    }

    pub fn pop_area(&self) -> f64 {
        PI * self.pop_radius * self.pop_radius
    }

    /// λπR1².
    pub fn expected_count(&self) -> f64 {
        self.density * self.pop_area()
    }

    /// λ́ = (λπR1² − 1)/(πR1²), the density of the other bacteria seen from a
    /// bacterium whose position is fixed.
    pub fn reduced_density(&self) -> Result<f64> {
        reduced_density(self)
    }

    /// Re-check invariants of an already constructed value.
    pub fn check(&self, purpose: Purpose) -> Result<()> {
        let positive = [
            (self.diffusion, "diffusion"),
            (self.emission_rate, "emission_rate"),
            (self.rx_radius, "rx_radius"),
            (self.pop_radius, "pop_radius"),
        ];
        for (v, name) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::NonPositive(name));
            }
        }
        if !(self.degradation >= 0.0 && self.degradation.is_finite()) {
            return Err(Error::Domain(format!(
                "degradation must be finite and >= 0, got {}",
                self.degradation
            )));
        }
        if !(self.density >= 0.0 && self.density.is_finite()) {
            return Err(Error::Domain(format!(
                "density must be finite and >= 0, got {}",
                self.density
            )));
        }
        if self.threshold < 1 {
            return Err(Error::NonPositive("threshold"));
        }
        if self.pop_radius <= self.rx_radius {
            return Err(Error::Domain(format!(
                "pop_radius ({:e} m) must exceed rx_radius ({:e} m)",
                self.pop_radius, self.rx_radius
            )));
        }
        if purpose == Purpose::Cooperation && self.expected_count() < 1.0 {
            return Err(Error::PopulationTooSparse(self.expected_count()));
        }
        Ok(())
    }
}

/// λ such that λπR1² = `count`.
pub fn density_for_count(count: f64, pop_radius: f64) -> f64 {
    count / (PI * pop_radius * pop_radius)
}

/// Raw, µm-based parameters as they come from a config file or the command
/// line. The threshold is a real number so non-integer input can be rejected
/// rather than silently rounded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvSpec {
    /// m²/s
    pub diffusion: f64,
    /// 1/s
    pub degradation: f64,
    /// molecules/s
    pub emission_rate: f64,
    pub rx_radius_um: f64,
    pub pop_radius_um: f64,
    /// bacteria/µm²
    pub density_per_um2: f64,
    pub threshold: f64,
}

impl Default for EnvSpec {
    fn default() -> Self {
        EnvSpec::from_params(&EnvParams::reference())
    }
}

impl EnvSpec {
    pub fn from_params(p: &EnvParams) -> Self {
        EnvSpec {
            diffusion: p.diffusion,
            degradation: p.degradation,
            emission_rate: p.emission_rate,
            rx_radius_um: m_to_um(p.rx_radius),
            pop_radius_um: m_to_um(p.pop_radius),
            density_per_um2: per_m2_to_per_um2(p.density),
            threshold: p.threshold as f64,
        }
    }
}

/// Convert raw inputs to SI and enforce every invariant.
pub fn validate(spec: &EnvSpec, purpose: Purpose) -> Result<EnvParams> {
    let t = spec.threshold;
    if !t.is_finite() || t.fract() != 0.0 {
        return Err(Error::ThresholdNotInteger(t));
    }
    if t < 1.0 {
        return Err(Error::NonPositive("threshold"));
    }
    if t > u32::MAX as f64 {
        return Err(Error::Domain(format!("threshold {t} too large")));
    }
    let p = EnvParams {
        diffusion: spec.diffusion,
        degradation: spec.degradation,
        emission_rate: spec.emission_rate,
        rx_radius: um_to_m(spec.rx_radius_um),
        pop_radius: um_to_m(spec.pop_radius_um),
        density: per_um2_to_per_m2(spec.density_per_um2),
        threshold: t as u32,
    };
    p.check(purpose)?;
    Ok(p)
}

pub fn reduced_density(p: &EnvParams) -> Result<f64> {
    let n = p.expected_count();
    if n < 1.0 {
        return Err(Error::PopulationTooSparse(n));
    }
    Ok((n - 1.0) / p.pop_area())
}

/// A point or displacement in the plane, in metres.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const ORIGIN: Point2 = Point2 { x: 0.0, y: 0.0 };

    /// Panics on non-finite input; use [`Point2::try_new`] for untrusted values.
    pub fn new(x: f64, y: f64) -> Self {
        Self::try_new(x, y).expect("non-finite coordinate")
    }

    pub fn try_new(x: f64, y: f64) -> Result<Self> {
        if x.is_finite() && y.is_finite() {
            Ok(Point2 { x, y })
        } else {
            Err(Error::Domain(format!("non-finite point ({x}, {y})")))
        }
    }

    pub fn from_um(x: f64, y: f64) -> Self {
        Self::new(um_to_m(x), um_to_m(y))
    }

    pub fn norm(&self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(&self, o: &Point2) -> f64 {
        (self.x - o.x).hypot(self.y - o.y)
    }
}

/// Ω and Υ for one point of the four-fold receiver/field integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometryTerms {
    /// Ω = |b|² + |r|² + 2|b||r|cos φ (m²)
    pub omega: f64,
    /// Υ = √(Ω + |r0|² + 2√Ω|r0|cos θ) (m)
    pub upsilon: f64,
}

impl GeometryTerms {
    pub fn new(b_norm: f64, r_norm: f64, phi: f64, r0_norm: f64, theta: f64) -> Self {
        let omega = (b_norm * b_norm + r_norm * r_norm + 2.0 * b_norm * r_norm * phi.cos()).max(0.0);
        let l = omega.sqrt();
        let upsilon = (omega + r0_norm * r0_norm + 2.0 * l * r0_norm * theta.cos())
            .max(0.0)
            .sqrt();
        GeometryTerms { omega, upsilon }
    }
}
