//! Rational tail template `|T(mu)|^2 = a^2 / (beta^2 + 4 pi^2 mu^2)`.
//!
//! The template captures the inverse-square tail behaviour typical of
//! regular spectral densities. It is exact for the OU-type family and is
//! used both to extend sampled densities beyond their band and to split
//! the Szego factor into an analytic part plus a small numeric remainder.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RationalTemplate {
    /// Amplitude `a` (so that `|T|^2 = a^2/(beta^2 + 4 pi^2 mu^2)`).
    pub amplitude: f64,
    /// Pole offset `beta > 0`.
    pub beta: f64,
}

impl RationalTemplate {
    /// Least-squares fit of `1/G'(mu) = u + v (2 pi mu)^2` over the outer
    /// half-band `[cutoff/2, cutoff]`. Exact for rational OU-type densities.
    pub fn fit<F: Fn(f64) -> f64>(density: F, cutoff: f64) -> Self {
        let n = 257;
        let (mut sx, mut sxx, mut sy, mut sxy) = (0.0, 0.0, 0.0, 0.0);
        let mut m = 0usize;
        for i in 0..n {
            let mu = cutoff / 2.0 + (cutoff / 2.0) * i as f64 / (n - 1) as f64;
            let g = density(mu);
            if g <= 0.0 {
                continue;
            }
            let x = (TWO_PI * mu).powi(2);
            let y = 1.0 / g;
            sx += x;
            sxx += x * x;
            sy += y;
            sxy += x * y;
            m += 1;
        }
        let fallback = |cutoff: f64, g_edge: f64| Self {
            amplitude: (g_edge * (1.0 + (TWO_PI * cutoff).powi(2))).sqrt().max(1e-150),
            beta: 1.0,
        };
        if m < 2 {
            return fallback(cutoff, density(cutoff).max(1e-300));
        }
        let mf = m as f64;
        let det = mf * sxx - sx * sx;
        if det.abs() < 1e-300 {
            return fallback(cutoff, density(cutoff).max(1e-300));
        }
        let u = (sy * sxx - sx * sxy) / det;
        let v = (mf * sxy - sx * sy) / det;
        if v <= 0.0 {
            return fallback(cutoff, density(cutoff).max(1e-300));
        }
        let amplitude = (1.0 / v).sqrt();
        let beta = if u > 0.0 {
            (u / v).sqrt().clamp(1e-3, 1e3)
        } else {
            1.0
        };
        Self { amplitude, beta }
    }

    /// Frequency-domain template `T(mu) = a / (beta + 2 pi i mu)`.
    pub fn eval(&self, mu: f64) -> Complex64 {
        self.amplitude / Complex64::new(self.beta, TWO_PI * mu)
    }

    /// Squared modulus `|T(mu)|^2`.
    pub fn modulus_sq(&self, mu: f64) -> f64 {
        self.amplitude * self.amplitude / (self.beta * self.beta + (TWO_PI * mu).powi(2))
    }

    /// Anticausal time kernel `T*(s) = a e^{beta s}` for `s <= 0`, zero otherwise.
    pub fn kernel(&self, s: f64) -> f64 {
        if s <= 0.0 {
            self.amplitude * (self.beta * s).exp()
        } else {
            0.0
        }
    }

    /// `int_{|mu| > cutoff} |T|^2 dmu`, the spectral mass beyond the band.
    pub fn tail_mass(&self, cutoff: f64) -> f64 {
        let a = self.amplitude;
        let b = self.beta;
        2.0 * a * a / (TWO_PI * b)
            * (std::f64::consts::FRAC_PI_2 - (TWO_PI * cutoff / b).atan())
    }

    /// `int_{-inf}^{-extent} |T*(s)|^2 ds`, the kernel energy beyond the grid.
    pub fn kernel_tail_energy(&self, extent: f64) -> f64 {
        let a = self.amplitude;
        (-2.0 * self.beta * extent).exp() * a * a / (2.0 * self.beta)
    }
}
