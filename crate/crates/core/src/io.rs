//! Config grammar and file formats.
//!
//! Configs are flat `key = value` text with dotted keys; `#` starts a
//! comment. Structured reports use the same grammar so every artifact can
//! carry a leading comment header. Tables are plain CSV with one header row.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::grid::{FrequencyGrid, TimeGrid};
use crate::simulate::SimulationMethod;
use crate::specmodel::{CovarianceFunction, Family, SpectralModel, DEFAULT_DENSITY_FLOOR};

/// A full run description: density, grids, predictor lags, simulation and
/// oracle settings.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub family: Option<Family>,
    /// CSV density (`mu,density`) used when no closed-form family is given.
    pub density_path: Option<PathBuf>,
    pub grid: FrequencyGrid,
    pub time_grid: TimeGrid,
    pub floor: f64,
    /// Prediction lags, in order of appearance.
    pub taus: Vec<f64>,
    /// Finite-section half-length `T`; whole past when absent.
    pub section: Option<f64>,
    pub oracle_step: f64,
    pub oracle_window: f64,
    pub oracle_compare: bool,
    pub replicates: usize,
    pub seed: Option<u64>,
    pub path_points: usize,
    pub sim_method: SimulationMethod,
    pub compare_tol: f64,
    /// Overrides the theoretical MSE in `verify` (negative-control hook).
    pub theory_override: Option<f64>,
    pub out_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            family: None,
            density_path: None,
            grid: FrequencyGrid::default_band(),
            time_grid: TimeGrid::default_kernel(),
            floor: DEFAULT_DENSITY_FLOOR,
            taus: Vec::new(),
            section: None,
            oracle_step: 0.01,
            oracle_window: 20.0,
            oracle_compare: true,
            replicates: 10_000,
            seed: None,
            path_points: 4096,
            sim_method: SimulationMethod::MovingAverage,
            compare_tol: 1e-3,
            theory_override: None,
            out_dir: None,
        }
    }
}

fn io_err(msg: String) -> Error {
    Error::Io(std::io::Error::new(std::io::ErrorKind::InvalidData, msg))
}

fn bad_key(key: &str, detail: impl AsRef<str>) -> Error {
    Error::Configuration(format!("key `{key}`: {}", detail.as_ref()))
}

fn parse_num(key: &str, value: &str) -> Result<f64> {
    value
        .parse::<f64>()
        .map_err(|_| bad_key(key, format!("expected a number, got `{value}`")))
}

fn parse_pos(key: &str, value: &str) -> Result<f64> {
    let v = parse_num(key, value)?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(bad_key(key, format!("must be positive and finite, got `{value}`")))
    }
}

impl RunConfig {
    /// Parses the documented `key = value` grammar. Unknown keys and
    /// malformed values are configuration errors naming the key.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        // family parameters arrive in any order; resolve after the scan
        let mut family_name: Option<String> = None;
        let mut scale = 1.0;
        let mut rate = 1.0;
        let mut level = 1.0;
        let mut half_width = 1.0;
        let (mut grid_m, mut grid_dmu) = (cfg.grid.cutoff, cfg.grid.spacing);
        let (mut grid_h, mut grid_l) = (cfg.time_grid.step, cfg.time_grid.extent);

        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Configuration(format!(
                    "line {}: expected `key = value`, got `{line}`",
                    lineno + 1
                ))
            })?;
            let key = key.trim();
            let value = value.trim();
            match key {
                "family" => family_name = Some(value.to_string()),
                "density.path" => cfg.density_path = Some(PathBuf::from(value)),
                "params.scale" => scale = parse_pos(key, value)?,
                "params.rate" => rate = parse_pos(key, value)?,
                "params.level" => level = parse_pos(key, value)?,
                "params.half_width" => half_width = parse_pos(key, value)?,
                "grid.M" => grid_m = parse_pos(key, value)?,
                "grid.dmu" => grid_dmu = parse_pos(key, value)?,
                "grid.h" => grid_h = parse_pos(key, value)?,
                "grid.L" => grid_l = parse_pos(key, value)?,
                "floor" => {
                    let v = parse_num(key, value)?;
                    if !(v >= 0.0) {
                        return Err(bad_key(key, "must be non-negative"));
                    }
                    cfg.floor = v;
                }
                "predict.tau" => {
                    cfg.taus = value
                        .split(',')
                        .filter(|s| !s.trim().is_empty())
                        .map(|s| parse_pos(key, s.trim()))
                        .collect::<Result<_>>()?;
                }
                "predict.T" => cfg.section = Some(parse_pos(key, value)?),
                "oracle.h" => cfg.oracle_step = parse_pos(key, value)?,
                "oracle.window" => cfg.oracle_window = parse_pos(key, value)?,
                "oracle.compare" => {
                    cfg.oracle_compare = value
                        .parse::<bool>()
                        .map_err(|_| bad_key(key, "expected true or false"))?;
                }
                "mc.n" => {
                    cfg.replicates = parse_pos(key, value)? as usize;
                }
                "mc.theory" => cfg.theory_override = Some(parse_num(key, value)?),
                "sim.points" => {
                    cfg.path_points = parse_pos(key, value)? as usize;
                }
                "sim.method" => {
                    cfg.sim_method = match value {
                        "ma" => SimulationMethod::MovingAverage,
                        "spectral" => SimulationMethod::Spectral,
                        other => {
                            return Err(bad_key(key, format!("expected ma or spectral, got `{other}`")))
                        }
                    };
                }
                "seed" => {
                    cfg.seed = Some(
                        value
                            .parse::<u64>()
                            .map_err(|_| bad_key(key, "expected an unsigned integer"))?,
                    );
                }
                "tol.compare" => cfg.compare_tol = parse_pos(key, value)?,
                "out.dir" => cfg.out_dir = Some(PathBuf::from(value)),
                other => {
                    return Err(Error::Configuration(format!("unknown key `{other}`")));
                }
            }
        }

        cfg.grid = FrequencyGrid::new(grid_m, grid_dmu)?;
        cfg.time_grid = TimeGrid::new(grid_h, grid_l)?;
        cfg.family = match family_name.as_deref() {
            None | Some("csv") => None,
            Some("ou") => Some(Family::OuType { scale, rate }),
            Some("band_limited") => Some(Family::BandLimited { level, half_width }),
            Some("gaussian") => Some(Family::Gaussian { level }),
            Some(other) => {
                return Err(bad_key(
                    "family",
                    format!("expected ou, band_limited, gaussian, or csv, got `{other}`"),
                ))
            }
        };
        if cfg.family.is_none() && cfg.density_path.is_none() {
            return Err(Error::Configuration(
                "key `family`: missing (or provide `density.path`)".into(),
            ));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| io_err(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Builds the spectral model: closed form when a family is configured,
    /// otherwise samples resampled from the density CSV onto the grid.
    pub fn build_model(&self) -> Result<SpectralModel> {
        let model = if let Some(family) = self.family {
            SpectralModel::closed_form(family, self.grid)?
        } else {
            let path = self.density_path.as_ref().expect("validated in parse");
            let rows = read_density_csv(path)?;
            let values = self
                .grid
                .points()
                .map(|mu| interp_rows(&rows, mu))
                .collect();
            SpectralModel::sampled(values, self.grid)?
        };
        Ok(model.with_floor(self.floor))
    }

    /// Covariance used by the oracle: closed form for the OU family so the
    /// oracle stays independent of the factorization, quadrature otherwise.
    pub fn build_covariance(&self, model: &SpectralModel) -> CovarianceFunction {
        match self.family {
            Some(Family::OuType { scale, rate }) => CovarianceFunction::exponential(scale, rate),
            _ => CovarianceFunction::from_model(model),
        }
    }
}

/// Reads a `mu,density` CSV, skipping comment and header lines.
pub fn read_density_csv(path: &Path) -> Result<Vec<(f64, f64)>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| io_err(format!("cannot read {}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for raw in text.lines() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with("mu") {
            continue;
        }
        let mut parts = line.split(',');
        let mu = parts
            .next()
            .and_then(|s| s.trim().parse::<f64>().ok())
            .ok_or_else(|| io_err(format!("bad density row `{line}` in {}", path.display())))?;
        let g = parts
            .next()
            .and_then(|s| s.trim().parse::<f64>().ok())
            .ok_or_else(|| io_err(format!("bad density row `{line}` in {}", path.display())))?;
        rows.push((mu, g));
    }
    if rows.len() < 2 {
        return Err(io_err(format!(
            "density file {} needs at least two rows",
            path.display()
        )));
    }
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(rows)
}

/// Linear interpolation over sorted rows, flat beyond the covered range.
fn interp_rows(rows: &[(f64, f64)], mu: f64) -> f64 {
    if mu <= rows[0].0 {
        return rows[0].1;
    }
    if mu >= rows[rows.len() - 1].0 {
        return rows[rows.len() - 1].1;
    }
    let i = rows.partition_point(|r| r.0 <= mu);
    let (x0, y0) = rows[i - 1];
    let (x1, y1) = rows[i];
    let w = (mu - x0) / (x1 - x0);
    y0 + w * (y1 - y0)
}

/// Renders a CSV table: comment lines, one header row, then the rows.
pub fn render_table(comments: &[String], header: &str, rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    for c in comments {
        let _ = writeln!(out, "# {c}");
    }
    let _ = writeln!(out, "{header}");
    for row in rows {
        let _ = writeln!(out, "{}", row.join(","));
    }
    out
}

/// Renders a structured report in the config grammar (`key = value`).
pub fn render_report(comments: &[String], entries: &[(String, String)]) -> String {
    let mut out = String::new();
    for c in comments {
        let _ = writeln!(out, "# {c}");
    }
    for (k, v) in entries {
        let _ = writeln!(out, "{k} = {v}");
    }
    out
}

/// Canonical float formatting for artifacts: full precision, deterministic.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.17e}")
    } else {
        format!("{v}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const OU_CONFIG: &str = "\
# OU fixture
family = ou
params.scale = 1
params.rate = 1
grid.M = 64
grid.dmu = 0.00390625
grid.h = 0.00390625
grid.L = 40
predict.tau = 0.1, 0.5, 1, 2
seed = 7
";

    #[test]
    fn parses_the_ou_fixture() {
        let cfg = RunConfig::parse(OU_CONFIG).unwrap();
        assert!(matches!(cfg.family, Some(Family::OuType { .. })));
        assert_eq!(cfg.taus, vec![0.1, 0.5, 1.0, 2.0]);
        assert_eq!(cfg.seed, Some(7));
        assert_eq!(cfg.grid.cutoff, 64.0);
        assert!(cfg.section.is_none());
        cfg.build_model().unwrap();
    }

    #[test]
    fn unknown_key_is_named_in_the_error() {
        let err = RunConfig::parse("family = ou\nfrequency.M = 64\n").unwrap_err();
        assert!(err.to_string().contains("frequency.M"), "{err}");
    }

    #[test]
    fn malformed_value_is_named_in_the_error() {
        let err = RunConfig::parse("family = ou\ngrid.M = sixty-four\n").unwrap_err();
        assert!(err.to_string().contains("grid.M"), "{err}");
    }

    #[test]
    fn missing_family_is_rejected() {
        let err = RunConfig::parse("grid.M = 64\n").unwrap_err();
        assert!(err.to_string().contains("family"), "{err}");
    }

    #[test]
    fn density_csv_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("density.csv");
        let model = SpectralModel::ou_default();
        let rows: Vec<Vec<String>> = model
            .grid
            .points()
            .map(|mu| vec![fmt_f64(mu), fmt_f64(model.density(mu))])
            .collect();
        std::fs::write(&path, render_table(&[], "mu,density", &rows)).unwrap();

        let text = format!("density.path = {}\n", path.display());
        let cfg = RunConfig::parse(&text).unwrap();
        let rebuilt = cfg.build_model().unwrap();
        for mu in [-60.0, -1.0, 0.0, 0.25, 10.0] {
            let a = model.density(mu);
            let b = rebuilt.density(mu);
            assert!((a - b).abs() <= 1e-9 * a.max(1e-12), "mu={mu}: {a} vs {b}");
        }
    }

    #[test]
    fn report_rendering_is_stable() {
        let text = render_report(
            &["config_hash=abc version=0.1.0".into()],
            &[("sigma2".into(), fmt_f64(0.5))],
        );
        assert_eq!(text, "# config_hash=abc version=0.1.0\nsigma2 = 5.00000000000000000e-1\n");
    }
}
