//! FFT-backed evaluation of oscillatory sums on commensurate uniform grids.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::template::TWO_PI;

/// Computes `S_j = sum_k f_k exp(-2 pi i mu_j t_k)` for uniform sample times
/// `t_k = t0 + k*dt` and uniform target frequencies `mu_j = mu0 + j*dmu`.
///
/// When `1/(dt*dmu)` is an integer large enough to hold both grids the sum
/// collapses to a zero-padded FFT; otherwise it falls back to the direct
/// O(n*m) evaluation.
pub fn oscillatory_sum(
    values: &[Complex64],
    t0: f64,
    dt: f64,
    mu0: f64,
    dmu: f64,
    n_mu: usize,
) -> Vec<Complex64> {
    let q_f = 1.0 / (dt * dmu);
    let q = q_f.round() as usize;
    let commensurate =
        q > 0 && (q_f - q as f64).abs() < 1e-6 * q_f && q >= values.len() && q >= n_mu;
    if !commensurate {
        return direct_sum(values, t0, dt, mu0, dmu, n_mu);
    }
    let mut buf = vec![Complex64::ZERO; q];
    for (k, &v) in values.iter().enumerate() {
        let phase = -TWO_PI * mu0 * k as f64 * dt;
        buf[k] = v * Complex64::from_polar(1.0, phase);
    }
    FftPlanner::new().plan_fft_forward(q).process(&mut buf);
    let lead = Complex64::from_polar(1.0, -TWO_PI * mu0 * t0);
    (0..n_mu)
        .map(|j| {
            let tw = Complex64::from_polar(1.0, -TWO_PI * (j as f64) * dmu * t0);
            lead * tw * buf[j % q]
        })
        .collect()
}

fn direct_sum(
    values: &[Complex64],
    t0: f64,
    dt: f64,
    mu0: f64,
    dmu: f64,
    n_mu: usize,
) -> Vec<Complex64> {
    (0..n_mu)
        .map(|j| {
            let mu = mu0 + j as f64 * dmu;
            values
                .iter()
                .enumerate()
                .map(|(k, &v)| {
                    let t = t0 + k as f64 * dt;
                    v * Complex64::from_polar(1.0, -TWO_PI * mu * t)
                })
                .sum()
        })
        .collect()
}

/// In-place forward FFT.
pub fn fft_forward(buf: &mut [Complex64]) {
    FftPlanner::new().plan_fft_forward(buf.len()).process(buf);
}

/// In-place inverse FFT including the 1/n normalization.
pub fn fft_inverse(buf: &mut [Complex64]) {
    let n = buf.len();
    FftPlanner::new().plan_fft_inverse(n).process(buf);
    let scale = 1.0 / n as f64;
    for v in buf.iter_mut() {
        *v *= scale;
    }
}

/// Signed FFT bin index: `0, 1, ..., n/2-1, -n/2, ..., -1`.
pub fn signed_bin(idx: usize, n: usize) -> i64 {
    let idx = idx as i64;
    let n = n as i64;
    if idx <= (n - 1) / 2 {
        idx
    } else {
        idx - n
    }
}
