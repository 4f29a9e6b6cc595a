//! Uniform frequency and time grids with trapezoid quadrature helpers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Symmetric uniform frequency grid over `[-cutoff, cutoff]` with spacing
/// `spacing`. Points are `mu_j = -cutoff + j * spacing`, `j = 0..=n`, with
/// `n = 2 * cutoff / spacing` required to be an even integer so that 0 is a
/// grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    pub cutoff: f64,
    pub spacing: f64,
}

impl FrequencyGrid {
    pub fn new(cutoff: f64, spacing: f64) -> Result<Self> {
        if !(spacing > 0.0) || !spacing.is_finite() {
            return Err(Error::Configuration(format!(
                "grid spacing must be positive and finite, got {spacing}"
            )));
        }
        if !(cutoff > 0.0) || !cutoff.is_finite() {
            return Err(Error::Configuration(format!(
                "grid cutoff must be positive and finite, got {cutoff}"
            )));
        }
        let ratio = 2.0 * cutoff / spacing;
        let n = ratio.round();
        if (ratio - n).abs() > 1e-6 || (n as i64) % 2 != 0 {
            return Err(Error::Configuration(format!(
                "2*cutoff/spacing must be an even integer (cutoff={cutoff}, spacing={spacing})"
            )));
        }
        Ok(Self { cutoff, spacing })
    }

    /// Default working band: `[-64, 64]` with spacing 1/256.
    pub fn default_band() -> Self {
        Self {
            cutoff: 64.0,
            spacing: 1.0 / 256.0,
        }
    }

    /// Number of grid points (including both endpoints). Always odd.
    pub fn len(&self) -> usize {
        (2.0 * self.cutoff / self.spacing).round() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn point(&self, j: usize) -> f64 {
        -self.cutoff + j as f64 * self.spacing
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(move |j| self.point(j))
    }

    /// Trapezoid weight for point `j` (spacing absorbed by the caller).
    pub fn trapezoid_weight(&self, j: usize) -> f64 {
        if j == 0 || j == self.len() - 1 {
            0.5
        } else {
            1.0
        }
    }

    /// Composite trapezoid quadrature of `f` over the band.
    pub fn trapezoid<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        let n = self.len();
        let mut acc = 0.0;
        for j in 0..n {
            acc += self.trapezoid_weight(j) * f(self.point(j));
        }
        acc * self.spacing
    }

    /// Grid refined by halving the spacing (same cutoff).
    pub fn refined(&self) -> Self {
        Self {
            cutoff: self.cutoff,
            spacing: self.spacing / 2.0,
        }
    }
}

/// Uniform anticausal time grid `s_k = -k*h`, `k = n..=0` reversed: extent
/// `[-extent, 0]` with spacing `step`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub step: f64,
    pub extent: f64,
}

impl TimeGrid {
    pub fn new(step: f64, extent: f64) -> Result<Self> {
        if !(step > 0.0) || !step.is_finite() {
            return Err(Error::Configuration(format!(
                "time step must be positive and finite, got {step}"
            )));
        }
        if !(extent > 0.0) || !extent.is_finite() {
            return Err(Error::Configuration(format!(
                "time extent must be positive and finite, got {extent}"
            )));
        }
        let ratio = extent / step;
        if (ratio - ratio.round()).abs() > 1e-6 {
            return Err(Error::Configuration(format!(
                "extent/step must be an integer (extent={extent}, step={step})"
            )));
        }
        Ok(Self { step, extent })
    }

    /// Default kernel grid: h = 1/256, extent 40.
    pub fn default_kernel() -> Self {
        Self {
            step: 1.0 / 256.0,
            extent: 40.0,
        }
    }

    /// Number of samples on `[-extent, 0]`, endpoints included.
    pub fn len(&self) -> usize {
        (self.extent / self.step).round() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Sample time for index `k` counted from the left: `s = -extent + k*h`.
    pub fn point(&self, k: usize) -> f64 {
        -self.extent + k as f64 * self.step
    }

    pub fn refined(&self) -> Self {
        Self {
            step: self.step / 2.0,
            extent: self.extent,
        }
    }
}

/// Composite Simpson quadrature over uniformly spaced samples. Falls back to
/// trapezoid on the final interval when the sample count is even.
pub fn simpson(samples: &[f64], step: f64) -> f64 {
    let n = samples.len();
    if n < 2 {
        return 0.0;
    }
    if n == 2 {
        return 0.5 * (samples[0] + samples[1]) * step;
    }
    let pairs = (n - 1) / 2;
    let mut acc = 0.0;
    for p in 0..pairs {
        let i = 2 * p;
        acc += (samples[i] + 4.0 * samples[i + 1] + samples[i + 2]) * step / 3.0;
    }
    if (n - 1) % 2 == 1 {
        acc += 0.5 * (samples[n - 2] + samples[n - 1]) * step;
    }
    acc
}
