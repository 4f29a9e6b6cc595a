//! Gaussian sample paths via the moving-average and spectral
//! representations, plus Monte Carlo validation of predicted error
//! variances.
//!
//! Replicate RNG streams are keyed by (seed, replicate index), so results
//! are independent of scheduling and bit-identical across reruns.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fourier::{fft_forward, fft_inverse, oscillatory_sum};
use crate::predictor::{effective_support, PredictionReport};
use crate::specmodel::SpectralModel;
use crate::szego::SzegoFactor;

/// How a path was generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimulationMethod {
    MovingAverage,
    Spectral,
}

/// A simulated stationary path on a uniform time grid.
#[derive(Debug, Clone)]
pub struct SamplePath {
    pub step: f64,
    /// Time of the first retained sample.
    pub start: f64,
    pub values: Vec<Complex64>,
    pub seed: u64,
    pub method: SimulationMethod,
    /// Driving noise increments aligned with `values` (MA method only):
    /// `noise[k]` is the innovation increment at time `t_k`.
    pub noise: Option<Vec<Complex64>>,
    /// Non-fatal diagnostics (e.g. spectral aliasing).
    pub warnings: Vec<String>,
    pub label: String,
}

impl SamplePath {
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(move |k| self.start + k as f64 * self.step)
    }

    /// Empirical autocovariance at an integer lag in samples.
    pub fn autocovariance(&self, lag: usize) -> Complex64 {
        let n = self.values.len();
        if lag >= n {
            return Complex64::ZERO;
        }
        let m = n - lag;
        let mut acc = Complex64::ZERO;
        for k in 0..m {
            acc += self.values[k + lag] * self.values[k].conj();
        }
        acc / m as f64
    }
}

/// Monte Carlo summary for one predictor.
#[derive(Debug, Clone)]
pub struct McReport {
    pub n: usize,
    pub mse: f64,
    pub std_error: f64,
    pub theory: f64,
    pub z: f64,
}

fn complex_increment<R: Rng>(rng: &mut R, h: f64, real_mode: bool) -> Complex64 {
    if real_mode {
        let g: f64 = rng.sample(StandardNormal);
        Complex64::new(g * h.sqrt(), 0.0)
    } else {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im) * (h / 2.0).sqrt()
    }
}

/// Simulates a path from the moving-average representation
/// `X(t_k) = sum_j c*(s_j) dxi(t_k + s_j)` with Gaussian increments of
/// variance `h`. A warm-up prefix of one kernel effective support is
/// discarded so retained samples are stationary.
pub fn simulate_ma(
    factor: &SzegoFactor,
    n_points: usize,
    h: f64,
    seed: u64,
) -> Result<SamplePath> {
    if (h - factor.time_grid.step).abs() > 1e-12 * h {
        return Err(Error::Configuration(format!(
            "path step {h} must match the kernel step {}",
            factor.time_grid.step
        )));
    }
    if n_points < 2 {
        return Err(Error::Configuration(format!(
            "need at least 2 path points, got {n_points}"
        )));
    }
    let real_mode = factor.model.real_mode;
    let n_k = factor.c_time.len();
    let warm = effective_support(factor);
    let total = n_points + warm;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise: Vec<Complex64> = (0..total + n_k)
        .map(|_| complex_increment(&mut rng, h, real_mode))
        .collect();
    // linear convolution by zero-padded FFT: X_k = sum_j ker_j noise_{k-j}
    let mut size = 1usize;
    while size < total + 2 * n_k {
        size *= 2;
    }
    let mut a = vec![Complex64::ZERO; size];
    for j in 0..n_k {
        a[j] = factor.c_time[n_k - 1 - j];
    }
    let mut b = vec![Complex64::ZERO; size];
    b[..noise.len()].copy_from_slice(&noise);
    fft_forward(&mut a);
    fft_forward(&mut b);
    for (x, y) in a.iter_mut().zip(&b) {
        *x *= y;
    }
    fft_inverse(&mut a);
    // sample k of the path uses noise indices up to n_k - 1 + k; discard the
    // ramp-in (first n_k - 1 outputs are partial sums) plus the warm-up
    let offset = n_k - 1 + warm;
    let mut values: Vec<Complex64> = a[offset..offset + n_points].to_vec();
    if real_mode {
        for v in values.iter_mut() {
            *v = Complex64::new(v.re, 0.0);
        }
    }
    let kept_noise = noise[offset..offset + n_points].to_vec();
    Ok(SamplePath {
        step: h,
        start: 0.0,
        values,
        seed,
        method: SimulationMethod::MovingAverage,
        noise: Some(kept_noise),
        warnings: Vec::new(),
        label: format!("ma:seed={seed}"),
    })
}

/// Simulates a path from the Cramer spectral representation
/// `X(t_k) = sum_j sqrt(G'(mu_j) dmu) Z_j e^{2 pi i t_k mu_j}` with
/// independent standard complex Gaussians (Hermitian-paired in real mode).
pub fn simulate_spectral(
    model: &SpectralModel,
    n_points: usize,
    h: f64,
    seed: u64,
) -> Result<SamplePath> {
    model.validate()?;
    if n_points < 2 {
        return Err(Error::Configuration(format!(
            "need at least 2 path points, got {n_points}"
        )));
    }
    let grid = model.grid;
    let mut warnings = Vec::new();
    let nyquist = 0.5 / h;
    if grid.cutoff > nyquist {
        let beyond = grid.trapezoid(|mu| if mu.abs() > nyquist { model.density(mu) } else { 0.0 });
        warnings.push(format!(
            "band cutoff {} exceeds the Nyquist frequency {nyquist}; aliased mass fraction {:.3e}",
            grid.cutoff,
            beyond / model.band_mass()
        ));
    }
    let n = grid.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut z = vec![Complex64::ZERO; n];
    if model.real_mode {
        // Hermitian pairing: Z(-mu) = conj(Z(mu)), Z(0) real
        let mid = n / 2;
        z[mid] = Complex64::new(rng.sample::<f64, _>(StandardNormal), 0.0);
        for j in mid + 1..n {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            let v = Complex64::new(re, im) / 2f64.sqrt();
            z[j] = v;
            z[n - 1 - j] = v.conj();
        }
    } else {
        for v in z.iter_mut() {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            *v = Complex64::new(re, im) / 2f64.sqrt();
        }
    }
    let amps: Vec<Complex64> = (0..n)
        .map(|j| {
            let mu = grid.point(j);
            z[j] * (model.density(mu) * grid.spacing).sqrt()
        })
        .collect();
    // X_k = sum_j amps_j e^{2 pi i t_k mu_j} = conj(sum_j conj(amps_j) e^{-2 pi i t_k mu_j})
    let conj_amps: Vec<Complex64> = amps.iter().map(|v| v.conj()).collect();
    let sums = oscillatory_sum(&conj_amps, -grid.cutoff, grid.spacing, 0.0, h, n_points);
    let mut values: Vec<Complex64> = sums.iter().map(|v| v.conj()).collect();
    if model.real_mode {
        for v in values.iter_mut() {
            *v = Complex64::new(v.re, 0.0);
        }
    }
    Ok(SamplePath {
        step: h,
        start: 0.0,
        values,
        seed,
        method: SimulationMethod::Spectral,
        noise: None,
        warnings,
        label: format!("spectral:seed={seed}"),
    })
}

/// Monte Carlo estimate of the mean squared prediction error for the given
/// predictor. Each replicate draws fresh innovation increments, evaluates
/// the moving-average value `X(t + tau)` and the predictor's convolution
/// against the same increments, and records the squared residual.
pub fn monte_carlo_mse(
    factor: &SzegoFactor,
    report: &PredictionReport,
    n_replicates: usize,
    seed: u64,
) -> Result<McReport> {
    if n_replicates < 100 {
        return Err(Error::Configuration(format!(
            "need at least 100 replicates, got {n_replicates}"
        )));
    }
    let h = factor.time_grid.step;
    let tau = report.spec.lag;
    let lag_bins_f = tau / h;
    let lag_bins = lag_bins_f.round() as usize;
    if (lag_bins_f - lag_bins as f64).abs() > 1e-6 {
        return Err(Error::Usage(format!(
            "Monte Carlo needs the lag to sit on the time grid (tau={tau}, h={h})"
        )));
    }
    let n_k = factor.c_time.len();
    let real_mode = factor.model.real_mode;
    // increments at times t + tau - j*h for j = 0..n_k+lag_bins;
    // index 0 is the most recent (at t + tau)
    let total = n_k + lag_bins;
    let kernel = &report.kernel;
    let errors: Vec<f64> = (0..n_replicates)
        .into_par_iter()
        .map(|rep| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(rep as u64 + 1);
            let noise: Vec<Complex64> = (0..total)
                .map(|_| complex_increment(&mut rng, h, real_mode))
                .collect();
            // X(t + tau) = sum_j c*(-j h) dxi(t + tau - j h)
            let mut x = Complex64::ZERO;
            for j in 0..n_k {
                x += factor.c_time[n_k - 1 - j] * noise[j];
            }
            // prediction uses increments at t - j h, i.e. offset by lag_bins
            let mut pred = Complex64::ZERO;
            for (j, k) in kernel.iter().enumerate() {
                let idx = lag_bins + j;
                if idx < total {
                    pred += k * noise[idx];
                }
            }
            (x - pred).norm_sqr()
        })
        .collect();
    let n = errors.len() as f64;
    let mse = errors.iter().sum::<f64>() / n;
    let var = errors.iter().map(|e| (e - mse).powi(2)).sum::<f64>() / (n - 1.0);
    let std_error = (var / n).sqrt();
    let theory = report.error_variance;
    let z = (mse - theory) / std_error.max(1e-300);
    Ok(McReport {
        n: n_replicates,
        mse,
        std_error,
        theory,
        z,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{FrequencyGrid, TimeGrid};
    use crate::predictor::{
        apply_predictor, predict_finite_section, predict_whole_past, InnovationSeries,
    };
    use crate::szego::factorize;

    fn ou_factor() -> SzegoFactor {
        factorize(&SpectralModel::ou_default(), TimeGrid::default_kernel()).unwrap()
    }

    /// Batch-means standard error of the lag-k autocovariance estimate.
    fn batched_autocov(path: &SamplePath, lag: usize, batches: usize) -> (f64, f64) {
        let n = path.values.len();
        let bl = n / batches;
        let mut est = Vec::with_capacity(batches);
        for b in 0..batches {
            let lo = b * bl;
            let m = bl - lag;
            let mut acc = 0.0;
            for k in 0..m {
                acc += (path.values[lo + k + lag] * path.values[lo + k].conj()).re;
            }
            est.push(acc / m as f64);
        }
        let mean = est.iter().sum::<f64>() / batches as f64;
        let var = est.iter().map(|e| (e - mean).powi(2)).sum::<f64>()
            / (batches as f64 - 1.0);
        (mean, (var / batches as f64).sqrt())
    }

    #[test]
    fn ma_path_reproduces_ou_covariance() {
        let f = ou_factor();
        let h = f.time_grid.step;
        let path = simulate_ma(&f, 1 << 20, h, 7).unwrap();
        let lag1 = (1.0 / h).round() as usize;
        let (r0, se0) = batched_autocov(&path, 0, 32);
        assert!((r0 - 1.0).abs() < 3.0 * se0, "r0 = {r0} +- {se0}");
        let (r1, se1) = batched_autocov(&path, lag1, 32);
        let exact = (-1.0f64).exp();
        assert!((r1 - exact).abs() < 3.0 * se1, "r1 = {r1} +- {se1}");
    }

    #[test]
    fn zero_kernel_gives_zero_path() {
        let mut f = ou_factor();
        for v in f.c_time.iter_mut() {
            *v = Complex64::ZERO;
        }
        let path = simulate_ma(&f, 1024, f.time_grid.step, 1).unwrap();
        assert!(path.values.iter().all(|v| v.norm() < 1e-12));
    }

    #[test]
    fn identical_seeds_give_identical_paths() {
        let f = ou_factor();
        let h = f.time_grid.step;
        let a = simulate_ma(&f, 4096, h, 42).unwrap();
        let b = simulate_ma(&f, 4096, h, 42).unwrap();
        assert_eq!(a.values, b.values);
        let c = simulate_ma(&f, 4096, h, 43).unwrap();
        assert_ne!(a.values, c.values);
    }

    /// Mean and standard error of the lag autocovariance across replicate
    /// paths. A spectral path carries one fixed spectral draw, so the
    /// estimator fluctuation only shrinks with replicates, not path length.
    fn replicated_autocov<F: Fn(u64) -> SamplePath>(
        make: F,
        lag: usize,
        reps: u64,
    ) -> (f64, f64) {
        let est: Vec<f64> = (0..reps)
            .map(|r| make(r).autocovariance(lag).re)
            .collect();
        let mean = est.iter().sum::<f64>() / reps as f64;
        let var =
            est.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (reps as f64 - 1.0);
        (mean, (var / reps as f64).sqrt())
    }

    #[test]
    fn spectral_path_reproduces_ou_covariance() {
        let m = SpectralModel::ou_default();
        let make =
            |r: u64| simulate_spectral(&m, 1 << 15, 1.0 / 256.0, 100 + r).unwrap();
        assert!(make(0).warnings.is_empty());
        let lag = 256;
        for (k, exact) in [(0usize, 1.0), (lag, (-1.0f64).exp()), (2 * lag, (-2.0f64).exp())]
        {
            let (est, se) = replicated_autocov(make, k, 16);
            assert!(
                (est - exact).abs() < 3.0 * se.max(1e-3),
                "lag {k}: {est} vs {exact} (se {se})"
            );
        }
    }

    #[test]
    fn single_spectral_line_has_constant_modulus() {
        let grid = FrequencyGrid::new(1.0, 0.25).unwrap();
        let mut values = vec![0.0; grid.len()];
        values[2] = 4.0; // one bin alive at mu = -0.5
        let m = SpectralModel::sampled(values, grid).unwrap();
        let path = simulate_spectral(&m, 512, 1.0 / 16.0, 3).unwrap();
        let mods: Vec<f64> = path.values.iter().map(|v| v.norm()).collect();
        let first = mods[0];
        assert!(first > 0.0);
        assert!(mods.iter().all(|m| (m - first).abs() < 1e-9 * first));
    }

    #[test]
    fn spectral_aliasing_emits_warning() {
        let m = SpectralModel::ou_default();
        let path = simulate_spectral(&m, 64, 1.0 / 64.0, 5).unwrap();
        assert_eq!(path.warnings.len(), 1);
        assert!(path.warnings[0].contains("aliased"));
    }

    #[test]
    fn real_mode_paths_are_real() {
        let m = SpectralModel::ou_default().with_real_mode().unwrap();
        let f = factorize(&m, TimeGrid::default_kernel()).unwrap();
        let ma = simulate_ma(&f, 2048, f.time_grid.step, 9).unwrap();
        assert!(ma.values.iter().all(|v| v.im == 0.0));
        let sp = simulate_spectral(&m, 2048, 1.0 / 256.0, 9).unwrap();
        assert!(sp.values.iter().all(|v| v.im == 0.0));
    }

    #[test]
    fn ma_and_spectral_covariances_agree() {
        let f = ou_factor();
        let h = f.time_grid.step;
        let make_ma = |r: u64| simulate_ma(&f, 1 << 15, h, 200 + r).unwrap();
        let make_sp = |r: u64| simulate_spectral(&f.model, 1 << 15, h, 300 + r).unwrap();
        for lag in [0usize, 256] {
            let (ra, sa) = replicated_autocov(make_ma, lag, 12);
            let (rs, ss) = replicated_autocov(make_sp, lag, 12);
            let joint = (sa * sa + ss * ss).sqrt();
            assert!(
                (ra - rs).abs() < 3.0 * joint,
                "lag {lag}: {ra} vs {rs} (joint se {joint})"
            );
        }
    }

    #[test]
    fn monte_carlo_validates_whole_past_error() {
        let f = ou_factor();
        let rep = predict_whole_past(&f, 1.0).unwrap();
        let mc = monte_carlo_mse(&f, &rep, 2000, 123).unwrap();
        assert!(mc.z.abs() < 3.0, "z = {}", mc.z);
        // deterministic rerun
        let mc2 = monte_carlo_mse(&f, &rep, 2000, 123).unwrap();
        assert_eq!(mc.mse, mc2.mse);
    }

    #[test]
    fn monte_carlo_validates_finite_section_error() {
        let f = ou_factor();
        let rep = predict_finite_section(&f, 1.0, 1.0).unwrap();
        let mc = monte_carlo_mse(&f, &rep, 2000, 321).unwrap();
        assert!(mc.z.abs() < 3.0, "z = {}", mc.z);
    }

    #[test]
    fn standard_error_scales_like_inverse_sqrt_n() {
        let f = ou_factor();
        let rep = predict_whole_past(&f, 1.0).unwrap();
        let a = monte_carlo_mse(&f, &rep, 1000, 77).unwrap();
        let b = monte_carlo_mse(&f, &rep, 4000, 77).unwrap();
        let ratio = a.std_error / b.std_error;
        assert!(
            (1.2..=3.4).contains(&(ratio)),
            "se ratio for 4x replicates: {ratio}"
        );
    }

    #[test]
    fn whitening_recovers_generator_noise() {
        let f = ou_factor();
        let h = f.time_grid.step;
        let path = simulate_ma(&f, 1 << 16, h, 99).unwrap();
        let innov = crate::predictor::whiten_path(&path, &f).unwrap();
        let stored = path.noise.as_ref().unwrap();
        let margin = ((innov.start - path.start) / h).round() as usize;
        let mut num = 0.0;
        let mut den = 0.0;
        for (k, rec) in innov.increments.iter().enumerate() {
            let orig = stored[margin + k];
            num += (rec - orig).norm_sqr();
            den += orig.norm_sqr();
        }
        let rel_rms = (num / den).sqrt();
        assert!(rel_rms < 5e-2, "relative RMS {rel_rms:.3e}");
        // increment variance close to h
        let var = innov.increment_variance();
        assert!((var - h).abs() < 0.1 * h, "variance {var} vs step {h}");
    }

    #[test]
    fn whitened_increments_pass_the_whiteness_test() {
        let f = ou_factor();
        let h = f.time_grid.step;
        let path = simulate_ma(&f, 1 << 16, h, 55).unwrap();
        let innov = crate::predictor::whiten_path(&path, &f).unwrap();
        let n = innov.increments.len();
        let var = innov.increment_variance();
        // lag autocovariance of white increments: se = var / sqrt(n)
        for lag in [1usize, 2, 16] {
            let mut acc = Complex64::ZERO;
            for k in 0..n - lag {
                acc += innov.increments[k + lag] * innov.increments[k].conj();
            }
            let est = acc / (n - lag) as f64;
            let se = var / ((n - lag) as f64).sqrt();
            assert!(
                est.norm() < 3.0 * se,
                "lag {lag}: |autocov| = {:.3e}, 3se = {:.3e}",
                est.norm(),
                3.0 * se
            );
        }
    }

    #[test]
    fn whole_past_prediction_tracks_markov_form() {
        // OU whole-past predictor is e^{-tau} X(t); check on innovations
        let f = ou_factor();
        let h = f.time_grid.step;
        let tau = 1.0;
        let rep = predict_whole_past(&f, tau).unwrap();
        let path = simulate_ma(&f, 1 << 15, h, 1234).unwrap();
        let noise = path.noise.clone().unwrap();
        let innov = InnovationSeries {
            step: h,
            start: path.start,
            increments: noise,
            source: "generator".into(),
        };
        let n = path.values.len();
        let mut num = 0.0;
        let mut den = 0.0;
        let k0 = rep.kernel.len();
        for idx in (k0..n).step_by(257) {
            let t = path.start + idx as f64 * h;
            let pred = apply_predictor(&innov, &rep, t).unwrap();
            let markov = path.values[idx] * (-tau).exp();
            num += (pred - markov).norm_sqr();
            den += markov.norm_sqr();
        }
        let rel = (num / den).sqrt();
        assert!(rel < 5e-2, "relative RMS vs Markov predictor: {rel:.3e}");
    }
}
