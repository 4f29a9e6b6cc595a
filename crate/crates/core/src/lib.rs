//! Least-squares linear prediction of weak-sense stationary continuous-time
//! processes.
//!
//! The crate works with a spectral density `G'(mu)` under the frequency
//! convention `r(t) = int e^{2 pi i t mu} G'(mu) dmu`. For regular processes
//! it computes the Szego factor `c(mu)` with `|c|^2 = G'` and anticausal
//! time kernel `c*(s)` (`s <= 0`), the whole-past and finite-section
//! prediction errors, the Wiener filter, Gaussian path simulation, and a
//! brute-force normal-equations oracle for cross-checking.

pub mod error;
pub mod fourier;
pub mod grid;
pub mod io;
pub mod oracle;
pub mod predictor;
pub mod simulate;
pub mod specmodel;
pub mod szego;
pub mod template;

pub use error::{Error, Result};
pub use grid::{FrequencyGrid, TimeGrid};
pub use specmodel::{
    covariance_from_density, density_from_covariance, szego_integral, CovarianceFunction, Family,
    Regularity, RegularityReport, SpectralModel,
};
pub use predictor::{
    apply_predictor, predict_finite_section, predict_whole_past, prediction_function,
    whiten_path, InnovationSeries, PredictionReport, PredictorSpec,
};
pub use io::RunConfig;
pub use oracle::{compare, solve_projection, CompareReport, OracleProblem, OracleSolution, Verdict};
pub use simulate::{monte_carlo_mse, simulate_ma, simulate_spectral, McReport, SamplePath};
pub use szego::{factorize, log_integral_check, verify_factor, SzegoFactor};
pub use template::RationalTemplate;
