//! Least-squares predictors built from the Szego factor.
//!
//! Whole-past prediction at lag `tau` uses the moving-average kernel
//! directly: the predictor is `X^(t+tau) = int_{-inf}^{t} c*(u-t-tau) dxi(u)`
//! and by the Ito isometry the error variance is
//! `sigma^2(tau) = int_{-tau}^0 |c*(s)|^2 ds`.
//!
//! Finite-section prediction observes the process only on an interval of
//! length `2T`; the error picks up the far-tail term
//! `int_{-inf}^{-2T-tau} |c*(s)|^2 ds`. The source display writes "t" in
//! these limits where the lag appears elsewhere; both are read as `tau`
//! here.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fourier::oscillatory_sum;
use crate::simulate::SamplePath;
use crate::szego::SzegoFactor;
use crate::template::TWO_PI;

/// Relative mask threshold for the Wiener quotient denominator.
pub const PSI_MASK_REL: f64 = 1e-8;
/// Allowed relative gap between the time- and frequency-domain error
/// variances (band truncation plus quadrature).
pub const SIGMA2_CONSISTENCY_TOL: f64 = 0.02;

/// Observation window available to the predictor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PredictionWindow {
    WholePast,
    /// Data interval of length `2 * half_length`.
    FiniteSection { half_length: f64 },
}

/// A prediction request: lag and window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictorSpec {
    pub lag: f64,
    pub window: PredictionWindow,
}

impl PredictorSpec {
    pub fn whole_past(lag: f64) -> Result<Self> {
        if !(lag > 0.0) || !lag.is_finite() {
            return Err(Error::Domain(format!("lag must be positive, got {lag}")));
        }
        Ok(Self {
            lag,
            window: PredictionWindow::WholePast,
        })
    }

    pub fn finite_section(lag: f64, half_length: f64) -> Result<Self> {
        if !(lag > 0.0) || !lag.is_finite() {
            return Err(Error::Domain(format!("lag must be positive, got {lag}")));
        }
        if !(half_length > 0.0) || !half_length.is_finite() {
            return Err(Error::Domain(format!(
                "section half-length must be positive, got {half_length}"
            )));
        }
        Ok(Self {
            lag,
            window: PredictionWindow::FiniteSection { half_length },
        })
    }
}

/// Wiener filter samples on the model's frequency grid.
#[derive(Debug, Clone)]
pub struct PsiSamples {
    pub values: Vec<Complex64>,
    /// True where `|c|` fell below the mask threshold; the value there is
    /// reported as zero but carries no meaning.
    pub masked: Vec<bool>,
    pub masked_fraction: f64,
    /// Error variance recomputed in the frequency domain,
    /// `int |e^{2 pi i tau mu} - Psi|^2 G' dmu` over the unmasked band.
    pub sigma2_freq: f64,
}

/// Output of a prediction: kernel weights, error variance, optional filter.
#[derive(Debug, Clone)]
pub struct PredictionReport {
    pub spec: PredictorSpec,
    /// Kernel weights against innovation increments: `kernel[j]` multiplies
    /// the increment at `t - j * kernel_step` when predicting `X(t + lag)`.
    pub kernel: Vec<Complex64>,
    pub kernel_step: f64,
    pub error_variance: f64,
    pub psi: Option<PsiSamples>,
}

/// Innovation increments recovered from (or driving) a path.
#[derive(Debug, Clone)]
pub struct InnovationSeries {
    pub step: f64,
    /// Time of the first increment.
    pub start: f64,
    pub increments: Vec<Complex64>,
    pub source: String,
}

impl InnovationSeries {
    /// Sample variance of the increments (should be close to `step`).
    pub fn increment_variance(&self) -> f64 {
        if self.increments.is_empty() {
            return 0.0;
        }
        self.increments.iter().map(|v| v.norm_sqr()).sum::<f64>()
            / self.increments.len() as f64
    }
}

/// Kernel value at arbitrary `s` by linear interpolation; zero for `s > 0`,
/// template extrapolation beyond the stored extent.
fn kernel_at(factor: &SzegoFactor, s: f64) -> Complex64 {
    if s > 0.0 {
        return Complex64::ZERO;
    }
    let tg = factor.time_grid;
    if s < -tg.extent {
        return factor.rot * factor.template.kernel(s);
    }
    let x = (s + tg.extent) / tg.step;
    let n = factor.c_time.len();
    let i = (x.floor() as usize).min(n - 2);
    let w = x - i as f64;
    factor.c_time[i] * (1.0 - w) + factor.c_time[i + 1] * w
}

/// Closed trapezoid of `|c*|^2` over `[s_lo, s_hi]` inside `[-L, 0]`, with
/// fractional end bins handled by interpolation.
fn kernel_energy_segment(factor: &SzegoFactor, s_lo: f64, s_hi: f64) -> f64 {
    if s_hi <= s_lo {
        return 0.0;
    }
    let tg = factor.time_grid;
    let h = tg.step;
    let y = |s: f64| kernel_at(factor, s).norm_sqr();
    let x_lo = (s_lo + tg.extent) / h;
    let x_hi = (s_hi + tg.extent) / h;
    let i_lo = (x_lo - 1e-9).ceil().max(0.0) as usize;
    let i_hi = ((x_hi + 1e-9).floor() as usize).min(factor.c_time.len() - 1);
    if i_lo > i_hi {
        // both endpoints inside one cell
        return 0.5 * (y(s_lo) + y(s_hi)) * (s_hi - s_lo);
    }
    let mut acc = 0.0;
    for i in i_lo..=i_hi {
        let w = if i == i_lo || i == i_hi { 0.5 } else { 1.0 };
        acc += w * factor.c_time[i].norm_sqr();
    }
    let mut total = if i_hi > i_lo { acc * h } else { 0.0 };
    let left_edge = tg.point(i_lo);
    if left_edge - s_lo > 1e-12 {
        total += 0.5 * (y(s_lo) + y(left_edge)) * (left_edge - s_lo);
    }
    let right_edge = tg.point(i_hi);
    if s_hi - right_edge > 1e-12 {
        total += 0.5 * (y(right_edge) + y(s_hi)) * (s_hi - right_edge);
    }
    total
}

/// Whole-past error variance `int_{-tau}^0 |c*|^2 ds`, extended by the
/// template tail when the lag exceeds the kernel extent.
fn sigma2_whole_past(factor: &SzegoFactor, tau: f64) -> f64 {
    let l = factor.time_grid.extent;
    let mut s2 = kernel_energy_segment(factor, -tau.min(l), 0.0);
    if tau > l {
        s2 += factor.template.kernel_tail_energy(l)
            - factor.template.kernel_tail_energy(tau);
    }
    s2
}

/// Far-tail energy `int_{-inf}^{-edge} |c*|^2 ds`.
fn sigma2_far_tail(factor: &SzegoFactor, edge: f64) -> f64 {
    let l = factor.time_grid.extent;
    if edge >= l {
        return factor.template.kernel_tail_energy(edge);
    }
    kernel_energy_segment(factor, -l, -edge) + factor.template.kernel_tail_energy(l)
}

/// Kernel weights `c*(-lag - j*h)` down to the stored extent.
fn shifted_kernel(factor: &SzegoFactor, lag: f64, span: Option<f64>) -> Vec<Complex64> {
    let h = factor.time_grid.step;
    let depth = span.unwrap_or(factor.time_grid.extent - lag).max(0.0);
    let n = (depth / h).floor() as usize + 1;
    (0..n)
        .map(|j| kernel_at(factor, -lag - j as f64 * h))
        .collect()
}

/// Whole-past predictor at lag `tau`.
pub fn predict_whole_past(factor: &SzegoFactor, tau: f64) -> Result<PredictionReport> {
    let spec = PredictorSpec::whole_past(tau)?;
    let sigma2 = sigma2_whole_past(factor, tau);
    let psi = prediction_function(factor, tau)?;
    let variance = factor.model.total_mass();
    // relative below a small-variance floor: both sides vanish as tau -> 0
    let rel = (sigma2 - psi.sigma2_freq).abs() / sigma2.max(1e-2 * variance);
    if rel > SIGMA2_CONSISTENCY_TOL {
        return Err(Error::Factorization(format!(
            "time/frequency error variances disagree: {sigma2:.6e} vs {:.6e}",
            psi.sigma2_freq
        )));
    }
    if !(sigma2 >= 0.0 && sigma2 <= variance * (1.0 + 1e-4)) {
        return Err(Error::Factorization(format!(
            "error variance {sigma2} outside [0, r(0) = {variance}]"
        )));
    }
    Ok(PredictionReport {
        spec,
        kernel: shifted_kernel(factor, tau, None),
        kernel_step: factor.time_grid.step,
        error_variance: sigma2,
        psi: Some(psi),
    })
}

/// Finite-section predictor: lag `tau`, data interval of length `2T`.
pub fn predict_finite_section(
    factor: &SzegoFactor,
    tau: f64,
    half_length: f64,
) -> Result<PredictionReport> {
    let spec = PredictorSpec::finite_section(tau, half_length)?;
    let sigma2 = sigma2_whole_past(factor, tau) + sigma2_far_tail(factor, 2.0 * half_length + tau);
    let variance = factor.model.total_mass();
    if !(sigma2 >= 0.0 && sigma2 <= variance * (1.0 + 1e-4)) {
        return Err(Error::Factorization(format!(
            "error variance {sigma2} outside [0, r(0) = {variance}]"
        )));
    }
    Ok(PredictionReport {
        spec,
        kernel: shifted_kernel(factor, tau, Some(2.0 * half_length)),
        kernel_step: factor.time_grid.step,
        error_variance: sigma2,
        psi: None,
    })
}

/// Wiener filter `Psi_tau(mu) = e^{2 pi i tau mu} (c - R) / c` where
/// `R(mu) = int_{-tau}^0 e^{2 pi i mu s} c*(s) ds`. The template part of `R`
/// integrates in closed form; only the remainder kernel `c* - rot a e^{beta s}`
/// is integrated numerically.
pub fn prediction_function(factor: &SzegoFactor, tau: f64) -> Result<PsiSamples> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::Domain(format!("lag must be positive, got {tau}")));
    }
    let grid = factor.model.grid;
    let h = factor.time_grid.step;
    let a = factor.template.amplitude;
    let beta = factor.template.beta;
    let rot = factor.rot;

    // remainder d(s) = c*(s) - rot * a e^{beta s} on the lattice part of
    // [-tau, 0]; the fractional end bin is added per frequency below
    let m = ((tau.min(factor.time_grid.extent)) / h).floor() as usize;
    let d_at = |s: f64| kernel_at(factor, s) - rot * a * (beta * s).exp();
    let lattice: Vec<Complex64> = (0..=m)
        .map(|k| {
            let s = -(m as f64 - k as f64) * h;
            let w = if k == 0 || k == m { 0.5 } else { 1.0 };
            d_at(s).conj() * w
        })
        .collect();
    let sums = oscillatory_sum(
        &lattice,
        -(m as f64) * h,
        h,
        -grid.cutoff,
        grid.spacing,
        grid.len(),
    );
    let frac = tau.min(factor.time_grid.extent) - m as f64 * h;
    let d_edge = d_at(-tau.min(factor.time_grid.extent));
    let d_grid = d_at(-(m as f64) * h);

    let c_max = factor.c_freq.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mask_tol = PSI_MASK_REL * c_max;
    let n = grid.len();
    let mut values = vec![Complex64::ZERO; n];
    let mut masked = vec![false; n];
    let mut n_masked = 0usize;
    let mut sigma2_freq = 0.0;
    for j in 0..n {
        let mu = grid.point(j);
        let c = factor.c_freq[j];
        if c.norm() < mask_tol {
            masked[j] = true;
            n_masked += 1;
            continue;
        }
        let z = Complex64::new(beta, TWO_PI * mu);
        let r_template = rot * a * (Complex64::ONE - (-tau * z).exp()) / z;
        let mut r_rem = sums[j].conj() * h;
        if frac > 1e-12 {
            r_rem += 0.5
                * frac
                * (d_edge * Complex64::from_polar(1.0, -TWO_PI * mu * tau)
                    + d_grid * Complex64::from_polar(1.0, -TWO_PI * mu * m as f64 * h));
        }
        let r = r_template + r_rem;
        let e_lag = Complex64::from_polar(1.0, TWO_PI * tau * mu);
        let psi = e_lag * (c - r) / c;
        values[j] = psi;
        let resid = e_lag - psi;
        sigma2_freq +=
            grid.trapezoid_weight(j) * resid.norm_sqr() * factor.model.density(mu);
    }
    if n_masked == n {
        return Err(Error::DegenerateDensity(
            "every frequency sample is below the mask threshold".into(),
        ));
    }
    sigma2_freq *= grid.spacing;
    Ok(PsiSamples {
        values,
        masked,
        masked_fraction: n_masked as f64 / n as f64,
        sigma2_freq,
    })
}

/// Index of the kernel's effective support: smallest depth (in samples from
/// `s = 0`) capturing all but `1e-8` of the kernel energy.
pub fn effective_support(factor: &SzegoFactor) -> usize {
    let n = factor.c_time.len();
    let total: f64 = factor.c_time.iter().map(|v| v.norm_sqr()).sum();
    let mut acc = 0.0;
    for depth in 0..n {
        acc += factor.c_time[n - 1 - depth].norm_sqr();
        if acc >= total * (1.0 - 1e-8) {
            return depth + 1;
        }
    }
    n
}

/// Recovers innovation increments from a path by frequency-domain division
/// by the discrete kernel transform. The circular edges are contaminated;
/// a margin of four effective supports is discarded at each end.
pub fn whiten_path(path: &SamplePath, factor: &SzegoFactor) -> Result<InnovationSeries> {
    let h = factor.time_grid.step;
    if (path.step - h).abs() > 1e-12 * h {
        return Err(Error::Usage(format!(
            "path step {} does not match the kernel step {h}",
            path.step
        )));
    }
    let margin = 4 * effective_support(factor);
    let n = path.values.len();
    if n <= 2 * margin {
        return Err(Error::InsufficientData(format!(
            "path of {n} samples cannot absorb two edge margins of {margin}"
        )));
    }
    // discrete MA kernel: X_k = sum_j c*(-j h) dxi_{k-j}
    let n_k = factor.c_time.len();
    let mut kernel_hat = vec![Complex64::ZERO; n];
    for j in 0..n_k.min(n) {
        kernel_hat[j] = factor.c_time[factor.c_time.len() - 1 - j];
    }
    crate::fourier::fft_forward(&mut kernel_hat);
    let k_max = kernel_hat.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let mut buf = path.values.clone();
    crate::fourier::fft_forward(&mut buf);
    for (b, k) in buf.iter_mut().zip(&kernel_hat) {
        if k.norm() < 1e-8 * k_max {
            *b = Complex64::ZERO;
        } else {
            *b /= k;
        }
    }
    crate::fourier::fft_inverse(&mut buf);
    let increments: Vec<Complex64> = buf[margin..n - margin].to_vec();
    Ok(InnovationSeries {
        step: h,
        start: path.start + margin as f64 * h,
        increments,
        source: format!("whitened:{}", path.label),
    })
}

/// Applies a prediction kernel to innovation increments: returns the
/// predicted value of `X(t + lag)` from data up to time `t`.
pub fn apply_predictor(
    innovations: &InnovationSeries,
    report: &PredictionReport,
    t: f64,
) -> Result<Complex64> {
    let h = report.kernel_step;
    if (innovations.step - h).abs() > 1e-12 * h {
        return Err(Error::Usage(format!(
            "innovation step {} does not match the kernel step {h}",
            innovations.step
        )));
    }
    let x = (t - innovations.start) / h;
    let idx = x.round();
    if (x - idx).abs() > 1e-6 {
        return Err(Error::Usage(format!(
            "time {t} is not on the innovation grid (start {}, step {h})",
            innovations.start
        )));
    }
    let idx = idx as i64;
    let n_k = report.kernel.len() as i64;
    let n = innovations.increments.len() as i64;
    if idx >= n || idx - (n_k - 1) < 0 {
        let lo = t - (n_k - 1) as f64 * h;
        return Err(Error::Window(format!(
            "[{lo}, {t}] (innovations cover [{}, {}])",
            innovations.start,
            innovations.start + (n - 1) as f64 * h
        )));
    }
    let mut acc = Complex64::ZERO;
    for j in 0..n_k {
        acc += report.kernel[j as usize] * innovations.increments[(idx - j) as usize];
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TimeGrid;
    use crate::specmodel::SpectralModel;
    use crate::szego::factorize;
    use approx::assert_relative_eq;

    fn ou_factor() -> SzegoFactor {
        factorize(&SpectralModel::ou_default(), TimeGrid::default_kernel()).unwrap()
    }

    #[test]
    fn whole_past_error_matches_closed_form() {
        let f = ou_factor();
        for &tau in &[0.1, 0.5, 1.0, 2.0] {
            let rep = predict_whole_past(&f, tau).unwrap();
            let exact = 1.0 - (-2.0 * tau).exp();
            assert_relative_eq!(rep.error_variance, exact, max_relative = 1e-4);
        }
    }

    #[test]
    fn error_vanishes_at_small_lag_and_saturates_at_large() {
        let f = ou_factor();
        let tiny = predict_whole_past(&f, 1e-9).unwrap();
        assert!(tiny.error_variance < 1e-8);
        let huge = predict_whole_past(&f, 100.0).unwrap();
        assert_relative_eq!(huge.error_variance, 1.0, max_relative = 1e-4);
    }

    #[test]
    fn non_positive_lag_is_a_domain_error() {
        let f = ou_factor();
        assert!(matches!(
            predict_whole_past(&f, 0.0),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            predict_whole_past(&f, -1.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn finite_section_matches_closed_form() {
        let f = ou_factor();
        let rep = predict_finite_section(&f, 1.0, 1.0).unwrap();
        let exact = (1.0 - (-2.0f64).exp()) + (-6.0f64).exp();
        assert!(
            (rep.error_variance - exact).abs() < 1e-4,
            "sigma2(1,1) = {}",
            rep.error_variance
        );
        // T -> infinity recovers the whole-past error
        let wide = predict_finite_section(&f, 1.0, 30.0).unwrap();
        let whole = predict_whole_past(&f, 1.0).unwrap();
        assert_relative_eq!(
            wide.error_variance,
            whole.error_variance,
            max_relative = 1e-9
        );
        // tau -> 0+ leaves only the far tail, e^{-4T} for OU
        let tail = predict_finite_section(&f, 1e-9, 1.0).unwrap();
        assert_relative_eq!(tail.error_variance, (-4.0f64).exp(), max_relative = 1e-3);
    }

    #[test]
    fn wiener_filter_is_constant_for_ou() {
        let f = ou_factor();
        for &tau in &[0.5, 1.0, 2.0] {
            let psi = prediction_function(&f, tau).unwrap();
            let expected = (-tau).exp();
            let dev = psi
                .values
                .iter()
                .zip(&psi.masked)
                .filter(|(_, m)| !**m)
                .map(|(v, _)| (v - Complex64::new(expected, 0.0)).norm())
                .fold(0.0, f64::max);
            assert!(dev < 1e-3, "tau={tau}: sup deviation {dev:.3e}");
            assert_eq!(psi.masked_fraction, 0.0);
        }
    }

    #[test]
    fn wiener_filter_tends_to_identity_at_small_lag() {
        let f = ou_factor();
        let psi = prediction_function(&f, 1e-6).unwrap();
        let dev = psi
            .values
            .iter()
            .map(|v| (v - Complex64::ONE).norm())
            .fold(0.0, f64::max);
        assert!(dev < 1e-3, "sup deviation from 1: {dev:.3e}");
    }

    #[test]
    fn error_variance_monotone_in_lag() {
        let f = ou_factor();
        let mut prev = 0.0;
        for i in 1..=20 {
            let tau = i as f64 * 0.25;
            let s2 = predict_whole_past(&f, tau).unwrap().error_variance;
            assert!(s2 + 1e-12 >= prev, "sigma2 not monotone at tau={tau}");
            prev = s2;
        }
    }

    #[test]
    fn finite_section_error_monotone_in_section_length() {
        let f = ou_factor();
        let whole = predict_whole_past(&f, 1.0).unwrap().error_variance;
        let mut prev = f64::INFINITY;
        for &t_half in &[0.25, 0.5, 1.0, 2.0, 4.0] {
            let s2 = predict_finite_section(&f, 1.0, t_half)
                .unwrap()
                .error_variance;
            assert!(s2 <= prev + 1e-12);
            assert!(s2 + 1e-12 >= whole);
            prev = s2;
        }
    }

    #[test]
    fn gauge_rotation_leaves_errors_and_filter_modulus_unchanged() {
        let f = ou_factor();
        let mut rotated = f.clone();
        let phase = Complex64::from_polar(1.0, 1.234);
        rotated.rot *= phase;
        for v in rotated.c_freq.iter_mut() {
            *v *= phase;
        }
        for v in rotated.c_time.iter_mut() {
            *v *= phase;
        }
        let base = predict_whole_past(&f, 1.0).unwrap();
        let rot = predict_whole_past(&rotated, 1.0).unwrap();
        assert_relative_eq!(base.error_variance, rot.error_variance, epsilon = 1e-12);
        let s_base = predict_finite_section(&f, 1.0, 1.0).unwrap();
        let s_rot = predict_finite_section(&rotated, 1.0, 1.0).unwrap();
        assert_relative_eq!(
            s_base.error_variance,
            s_rot.error_variance,
            epsilon = 1e-12
        );
        let p_base = prediction_function(&f, 1.0).unwrap();
        let p_rot = prediction_function(&rotated, 1.0).unwrap();
        for (a, b) in p_base.values.iter().zip(&p_rot.values).step_by(511) {
            assert_relative_eq!(a.norm(), b.norm(), epsilon = 1e-10);
        }
    }

    #[test]
    fn time_and_frequency_error_variances_agree() {
        let f = ou_factor();
        for &tau in &[0.1, 1.0] {
            let rep = predict_whole_past(&f, tau).unwrap();
            let psi = rep.psi.unwrap();
            let rel = (rep.error_variance - psi.sigma2_freq).abs() / rep.error_variance;
            assert!(rel < SIGMA2_CONSISTENCY_TOL, "tau={tau}: rel gap {rel:.3e}");
        }
    }

    #[test]
    fn apply_predictor_demands_coverage() {
        let f = ou_factor();
        let rep = predict_whole_past(&f, 1.0).unwrap();
        let innov = InnovationSeries {
            step: rep.kernel_step,
            start: 0.0,
            increments: vec![Complex64::ZERO; 16],
            source: "test".into(),
        };
        assert!(matches!(
            apply_predictor(&innov, &rep, 0.03125),
            Err(Error::Window(_))
        ));
    }

    #[test]
    fn apply_predictor_on_zero_innovations_is_zero() {
        let f = ou_factor();
        let rep = predict_whole_past(&f, 1.0).unwrap();
        let n = rep.kernel.len() + 64;
        let innov = InnovationSeries {
            step: rep.kernel_step,
            start: 0.0,
            increments: vec![Complex64::ZERO; n],
            source: "test".into(),
        };
        let t = (n - 1) as f64 * rep.kernel_step;
        let v = apply_predictor(&innov, &rep, t).unwrap();
        assert_eq!(v, Complex64::ZERO);
    }
}
