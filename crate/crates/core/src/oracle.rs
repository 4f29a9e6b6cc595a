//! Brute-force projection oracle: best linear prediction from finitely many
//! observed values, by solving the normal equations on the covariance grid.
//! Entirely independent of the spectral factorization pipeline.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::predictor::PredictionReport;
use crate::specmodel::CovarianceFunction;

/// Dense-path condition threshold before jitter escalation.
pub const CONDITION_THRESHOLD: f64 = 1e12;
/// Jitter schedule: `JITTER_START * r(0)` escalating by 10x up to
/// `JITTER_MAX * r(0)`.
pub const JITTER_START: f64 = 1e-12;
pub const JITTER_MAX: f64 = 1e-6;
/// Default verdict tolerance for `compare` (relative).
pub const COMPARE_TOL: f64 = 1e-3;

/// A discrete projection problem: predict `X(max(times) + lag)` from the
/// observed values `X(u_j)`.
#[derive(Clone)]
pub struct OracleProblem {
    pub covariance: CovarianceFunction,
    pub lag: f64,
    /// Nominal grid spacing (metadata; `times` carries the actual grid).
    pub step: f64,
    /// Observation times, strictly increasing.
    pub times: Vec<f64>,
}

impl OracleProblem {
    pub fn new(covariance: CovarianceFunction, lag: f64, step: f64, times: Vec<f64>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::Validation("need at least one observation time".into()));
        }
        if !(step > 0.0) {
            return Err(Error::Validation(format!("grid spacing must be positive, got {step}")));
        }
        if !(lag >= 0.0) || !lag.is_finite() {
            return Err(Error::Validation(format!("lag must be non-negative, got {lag}")));
        }
        for w in times.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::Validation(
                    "observation times must be strictly increasing".into(),
                ));
            }
        }
        Ok(Self {
            covariance,
            lag,
            step,
            times,
        })
    }

    /// Uniform observation window `[lo, hi]` with spacing `step`.
    pub fn uniform_window(
        covariance: CovarianceFunction,
        lag: f64,
        step: f64,
        lo: f64,
        hi: f64,
    ) -> Result<Self> {
        let n = ((hi - lo) / step).round() as usize + 1;
        let times = (0..n).map(|j| lo + j as f64 * step).collect();
        Self::new(covariance, lag, step, times)
    }

    /// Default whole-past surrogate: window `[-20, 0]`, spacing `0.01`.
    pub fn default_whole_past(covariance: CovarianceFunction, lag: f64) -> Result<Self> {
        Self::uniform_window(covariance, lag, 0.01, -20.0, 0.0)
    }
}

/// Normal-equations solution with conditioning diagnostics.
#[derive(Debug, Clone)]
pub struct OracleSolution {
    pub lag: f64,
    pub weights: Vec<Complex64>,
    pub error_variance: f64,
    /// Condition diagnostic: exact-ish Cholesky estimate on the dense path,
    /// `r(0) * (T^{-1})_{00}` lower bound on the Levinson path.
    pub condition: f64,
    /// Diagonal jitter actually applied (0 when none was needed).
    pub jitter: f64,
    /// Every jitter level tried, in order.
    pub jitter_trace: Vec<f64>,
}

/// Solves the projection problem. Uniform grids go through the Levinson
/// recursion on the Hermitian Toeplitz system; anything else is a dense
/// Cholesky solve. Both escalate diagonal jitter on numerical breakdown.
pub fn solve_projection(problem: &OracleProblem) -> Result<OracleSolution> {
    let m = problem.times.len();
    let r = &problem.covariance;
    let r0 = r.eval(0.0).re;
    let t_obs = *problem.times.last().expect("times non-empty");
    let rho: Vec<Complex64> = problem
        .times
        .iter()
        .map(|u| r.eval(problem.lag + t_obs - u))
        .collect();

    let uniform = is_uniform(&problem.times);
    let mut jitter = 0.0;
    let mut trace = Vec::new();
    loop {
        let attempt = if let Some(d) = uniform {
            levinson_solve(r, d, m, &rho, jitter)
        } else {
            dense_solve(r, &problem.times, &rho, jitter)
        };
        match attempt {
            Some((weights, condition)) if condition <= CONDITION_THRESHOLD => {
                let inner: Complex64 = weights
                    .iter()
                    .zip(&rho)
                    .map(|(w, p)| w.conj() * p)
                    .sum();
                let error_variance = r0 - inner.re;
                if error_variance < -1e-10 * r0.max(1.0) {
                    return Err(Error::IllConditioned {
                        message: format!(
                            "projection produced negative error variance {error_variance}"
                        ),
                        jitter_trace: trace,
                    });
                }
                return Ok(OracleSolution {
                    lag: problem.lag,
                    weights,
                    error_variance: error_variance.max(0.0),
                    condition,
                    jitter,
                    jitter_trace: trace,
                });
            }
            _ => {
                jitter = if jitter == 0.0 {
                    JITTER_START * r0.max(1e-300)
                } else {
                    jitter * 10.0
                };
                if jitter > JITTER_MAX * r0.max(1e-300) {
                    return Err(Error::IllConditioned {
                        message: format!(
                            "covariance matrix still unusable at maximum jitter \
                             ({m} observations, r(0) = {r0})"
                        ),
                        jitter_trace: trace,
                    });
                }
                trace.push(jitter);
            }
        }
    }
}

fn is_uniform(times: &[f64]) -> Option<f64> {
    if times.len() < 2 {
        return Some(1.0);
    }
    let d = times[1] - times[0];
    for w in times.windows(2) {
        if ((w[1] - w[0]) - d).abs() > 1e-9 * d.abs() {
            return None;
        }
    }
    Some(d)
}

/// Levinson recursion for the Hermitian Toeplitz normal equations.
///
/// The system is `A w = rho` with `A[k][j] = r(u_j - u_k) = t_{j-k}`, i.e.
/// the transpose of `T[i][j] = t_{i-j}`; it is solved as
/// `T conj(w) = conj(rho)`.
fn levinson_solve(
    r: &CovarianceFunction,
    d: f64,
    m: usize,
    rho: &[Complex64],
    jitter: f64,
) -> Option<(Vec<Complex64>, f64)> {
    let mut t: Vec<Complex64> = (0..m).map(|k| r.eval(k as f64 * d)).collect();
    t[0] += jitter;
    let get = |i: i64| -> Complex64 {
        if i >= 0 {
            t[i as usize]
        } else {
            t[(-i) as usize].conj()
        }
    };
    let y: Vec<Complex64> = rho.iter().map(|p| p.conj()).collect();
    if t[0].norm() < 1e-300 {
        return None;
    }
    let inv_t0 = Complex64::ONE / t[0];
    let mut f = vec![inv_t0];
    let mut b = vec![inv_t0];
    let mut x = vec![y[0] * inv_t0];
    let mut max_f0 = f[0].norm();
    for n in 2..=m {
        let ef: Complex64 = (0..n - 1).map(|j| get((n - 1 - j) as i64) * f[j]).sum();
        let eb: Complex64 = (0..n - 1).map(|j| get(-(j as i64 + 1)) * b[j]).sum();
        let denom = Complex64::ONE - ef * eb;
        if denom.norm() < 1e-14 {
            return None;
        }
        let inv = Complex64::ONE / denom;
        let mut f_new = vec![Complex64::ZERO; n];
        let mut b_new = vec![Complex64::ZERO; n];
        for j in 0..n - 1 {
            f_new[j] += inv * f[j];
            b_new[j + 1] += inv * b[j];
        }
        for j in 0..n - 1 {
            f_new[j + 1] -= ef * inv * b[j];
            b_new[j] -= eb * inv * f[j];
        }
        let ex: Complex64 = (0..n - 1).map(|j| get((n - 1 - j) as i64) * x[j]).sum();
        let corr = y[n - 1] - ex;
        x.push(Complex64::ZERO);
        for j in 0..n {
            x[j] += corr * b_new[j];
        }
        f = f_new;
        b = b_new;
        max_f0 = max_f0.max(f[0].norm());
    }
    let weights: Vec<Complex64> = x.iter().map(|v| v.conj()).collect();
    let condition = (t[0].norm() * max_f0).max(1.0);
    Some((weights, condition))
}

/// Dense Cholesky solve of `A w = rho` with `A[k][j] = r(u_j - u_k)`.
fn dense_solve(
    r: &CovarianceFunction,
    times: &[f64],
    rho: &[Complex64],
    jitter: f64,
) -> Option<(Vec<Complex64>, f64)> {
    let m = times.len();
    let a = DMatrix::from_fn(m, m, |k, j| {
        let v = r.eval(times[j] - times[k]);
        if k == j {
            v + jitter
        } else {
            v
        }
    });
    let chol = a.cholesky()?;
    let diag: Vec<f64> = (0..m).map(|i| chol.l_dirty()[(i, i)].norm()).collect();
    let dmax = diag.iter().cloned().fold(0.0, f64::max);
    let dmin = diag.iter().cloned().fold(f64::INFINITY, f64::min);
    if dmin <= 0.0 {
        return None;
    }
    let condition = (dmax / dmin).powi(2);
    let rhs = nalgebra::DVector::from_iterator(m, rho.iter().cloned());
    let w = chol.solve(&rhs);
    Some((w.iter().cloned().collect(), condition))
}

/// Verdict of a formula-vs-oracle comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Consistent,
    Divergent,
}

/// Side-by-side comparison; both numbers are preserved verbatim.
#[derive(Debug, Clone)]
pub struct CompareReport {
    pub lag: f64,
    pub sigma2_formula: f64,
    pub sigma2_oracle: f64,
    pub abs_gap: f64,
    pub rel_gap: f64,
    pub tolerance: f64,
    pub verdict: Verdict,
}

/// Compares a formula-side prediction report against an oracle solution.
pub fn compare(report: &PredictionReport, oracle: &OracleSolution) -> Result<CompareReport> {
    compare_with(report, oracle, COMPARE_TOL)
}

pub fn compare_with(
    report: &PredictionReport,
    oracle: &OracleSolution,
    tolerance: f64,
) -> Result<CompareReport> {
    if (report.spec.lag - oracle.lag).abs() > 1e-12 * report.spec.lag.max(1.0) {
        return Err(Error::Usage(format!(
            "lag mismatch: report has tau = {}, oracle has tau = {}",
            report.spec.lag, oracle.lag
        )));
    }
    let sf = report.error_variance;
    let so = oracle.error_variance;
    let abs_gap = (sf - so).abs();
    let rel_gap = abs_gap / sf.abs().max(so.abs()).max(1e-300);
    let verdict = if rel_gap <= tolerance {
        Verdict::Consistent
    } else {
        Verdict::Divergent
    };
    Ok(CompareReport {
        lag: report.spec.lag,
        sigma2_formula: sf,
        sigma2_oracle: so,
        abs_gap,
        rel_gap,
        tolerance,
        verdict,
    })
}
