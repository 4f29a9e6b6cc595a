//! Command-line front end: regularity check, factorization, prediction with
//! oracle comparison, path simulation, and Monte Carlo verification.
//!
//! Exit codes: 0 ok, 1 usage or validation error, 2 deterministic input,
//! 3 verification failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sha2::{Digest, Sha256};

use ctpred::io::{fmt_f64, render_report, render_table, RunConfig};
use ctpred::oracle::{compare_with, solve_projection, OracleProblem, Verdict};
use ctpred::predictor::PredictionWindow;
use ctpred::simulate::SimulationMethod;
use ctpred::szego::SzegoFactor;
use ctpred::{
    factorize, log_integral_check, monte_carlo_mse, predict_finite_section, predict_whole_past,
    simulate_ma, simulate_spectral, szego_integral, verify_factor, Error, PredictionReport,
    Regularity, SpectralModel,
};

const EXIT_USAGE: u8 = 1;
const EXIT_DETERMINISTIC: u8 = 2;
const EXIT_VERIFICATION: u8 = 3;

#[derive(Parser)]
#[command(name = "ctpred", version, about = "Linear prediction of stationary continuous-time processes")]
struct Cli {
    /// Run configuration file (`key = value` lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `out.dir` from the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// RNG seed; overrides `seed` from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify the configured density as regular or deterministic.
    Check,
    /// Compute and verify the spectral factor; write factor CSVs.
    Factorize,
    /// Evaluate prediction errors and compare against the oracle.
    Predict,
    /// Generate one Gaussian sample path.
    Simulate,
    /// Monte Carlo validation of the prediction error formulas.
    Verify,
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        let code = match err {
            Error::Deterministic { .. } => EXIT_DETERMINISTIC,
            _ => EXIT_USAGE,
        };
        Failure {
            code,
            message: err.to_string(),
        }
    }
}

fn fail(code: u8, message: impl Into<String>) -> Failure {
    Failure {
        code,
        message: message.into(),
    }
}

/// Everything a command needs: parsed config, artifact header, output dir.
struct Context {
    config: RunConfig,
    out_dir: PathBuf,
    header: Vec<String>,
    seed: Option<u64>,
}

impl Context {
    fn build(cli: &Cli) -> Result<Self, Failure> {
        let path = cli
            .config
            .as_ref()
            .ok_or_else(|| fail(EXIT_USAGE, "--config is required"))?;
        let text = std::fs::read_to_string(path)
            .map_err(|e| fail(EXIT_USAGE, format!("cannot read config {}: {e}", path.display())))?;
        let config = RunConfig::parse(&text)?;
        let seed = cli.seed.or(config.seed);
        let out_dir = cli
            .out
            .clone()
            .or_else(|| config.out_dir.clone())
            .unwrap_or_else(|| PathBuf::from("."));
        std::fs::create_dir_all(&out_dir)
            .map_err(|e| fail(EXIT_USAGE, format!("cannot create {}: {e}", out_dir.display())))?;

        // the hash covers the config text plus every CLI override so that
        // identical artifacts imply identical effective inputs
        let mut hasher = Sha256::new();
        hasher.update(text.as_bytes());
        if let Some(s) = seed {
            hasher.update(b"seed-override");
            hasher.update(s.to_le_bytes());
        }
        let hash = hex::encode(&hasher.finalize()[..8]);
        let header = vec![format!(
            "config_hash={hash} version={}",
            env!("CARGO_PKG_VERSION")
        )];
        Ok(Self {
            config,
            out_dir,
            header,
            seed,
        })
    }

    fn write(&self, name: &str, body: String) -> Result<PathBuf, Failure> {
        let path = self.out_dir.join(name);
        std::fs::write(&path, body)
            .map_err(|e| fail(EXIT_USAGE, format!("cannot write {}: {e}", path.display())))?;
        Ok(path)
    }

    fn require_seed(&self) -> Result<u64, Failure> {
        self.seed
            .ok_or_else(|| fail(EXIT_USAGE, "key `seed`: required for simulation commands"))
    }

    fn factorized(&self) -> Result<(SpectralModel, SzegoFactor), Failure> {
        let model = self.config.build_model()?;
        let factor = factorize(&model, self.config.time_grid)?;
        Ok((model, factor))
    }
}

fn cmd_check(ctx: &Context) -> Result<(), Failure> {
    let model = ctx.config.build_model()?;
    let report = szego_integral(&model)?;
    println!("classification = {:?}", report.classification);
    println!("szego_value = {}", fmt_f64(report.szego_value));
    let body = render_report(
        &ctx.header,
        &[
            ("classification".into(), format!("{:?}", report.classification)),
            ("szego_value".into(), fmt_f64(report.szego_value)),
            ("floored_value".into(), fmt_f64(report.floored_value)),
            ("sub_floor_fraction".into(), fmt_f64(report.sub_floor_fraction)),
            ("floor".into(), fmt_f64(report.floor)),
        ],
    );
    ctx.write("regularity.txt", body)?;
    if report.classification == Regularity::Deterministic {
        return Err(fail(
            EXIT_DETERMINISTIC,
            format!("deterministic process: floored Szego integral {}", report.floored_value),
        ));
    }
    Ok(())
}

fn cmd_factorize(ctx: &Context) -> Result<(), Failure> {
    let (model, factor) = ctx.factorized()?;

    let grid = model.grid;
    let c_rows: Vec<Vec<String>> = (0..grid.len())
        .map(|j| {
            let v = factor.c_freq[j];
            vec![fmt_f64(grid.point(j)), fmt_f64(v.re), fmt_f64(v.im)]
        })
        .collect();
    ctx.write("c_freq.csv", render_table(&ctx.header, "mu,re_c,im_c", &c_rows))?;

    let k_rows: Vec<Vec<String>> = (0..factor.c_time.len())
        .map(|k| {
            let v = factor.c_time[k];
            vec![fmt_f64(factor.time_grid.point(k)), fmt_f64(v.re), fmt_f64(v.im)]
        })
        .collect();
    ctx.write(
        "c_time.csv",
        render_table(&ctx.header, "s,re_cstar,im_cstar", &k_rows),
    )?;

    let diag = verify_factor(&factor, &model);
    let log_gap = log_integral_check(&factor);
    let mut entries = vec![
        ("leak_energy".into(), fmt_f64(factor.leak_energy)),
        ("plancherel_gap".into(), fmt_f64(factor.plancherel_gap)),
        ("log_integral_gap".into(), fmt_f64(log_gap)),
    ];
    for check in &diag.checks {
        entries.push((format!("check.{}", check.name), fmt_f64(check.measured)));
        entries.push((format!("check.{}.pass", check.name), check.pass.to_string()));
    }
    ctx.write("factor_diagnostics.txt", render_report(&ctx.header, &entries))?;
    println!("leak_energy = {}", fmt_f64(factor.leak_energy));
    println!("plancherel_gap = {}", fmt_f64(factor.plancherel_gap));

    if !diag.all_pass() {
        let failing: Vec<&str> = diag
            .checks
            .iter()
            .filter(|c| !c.pass)
            .map(|c| c.name)
            .collect();
        return Err(fail(
            EXIT_VERIFICATION,
            format!("factor invariants failed: {}", failing.join(", ")),
        ));
    }
    Ok(())
}

fn predict_one(
    ctx: &Context,
    factor: &SzegoFactor,
    tau: f64,
) -> Result<PredictionReport, Failure> {
    let report = match ctx.config.section {
        Some(t) => predict_finite_section(factor, tau, t)?,
        None => predict_whole_past(factor, tau)?,
    };
    Ok(report)
}

fn cmd_predict(ctx: &Context) -> Result<(), Failure> {
    let cfg = &ctx.config;
    if cfg.taus.is_empty() {
        return Err(fail(EXIT_USAGE, "key `predict.tau`: at least one lag is required"));
    }
    let (model, factor) = ctx.factorized()?;
    let covariance = cfg.build_covariance(&model);

    let mut summary: Vec<Vec<String>> = Vec::new();
    for (i, &tau) in cfg.taus.iter().enumerate() {
        let report = predict_one(ctx, &factor, tau)?;

        let kernel_name = format!("kernel_tau{i}.csv");
        let k_rows: Vec<Vec<String>> = report
            .kernel
            .iter()
            .enumerate()
            .map(|(j, v)| {
                vec![
                    fmt_f64(-(j as f64) * report.kernel_step),
                    fmt_f64(v.re),
                    fmt_f64(v.im),
                ]
            })
            .collect();
        ctx.write(&kernel_name, render_table(&ctx.header, "s,re,im", &k_rows))?;

        let psi_name = format!("psi_tau{i}.csv");
        if let Some(psi) = &report.psi {
            let rows: Vec<Vec<String>> = (0..model.grid.len())
                .map(|j| {
                    let v = psi.values[j];
                    vec![fmt_f64(model.grid.point(j)), fmt_f64(v.re), fmt_f64(v.im)]
                })
                .collect();
            ctx.write(&psi_name, render_table(&ctx.header, "mu,re,im", &rows))?;
        }

        let mut entries = vec![
            ("tau".into(), fmt_f64(tau)),
            ("sigma2".into(), fmt_f64(report.error_variance)),
            ("kernel_csv_path".into(), kernel_name.clone()),
        ];
        if let PredictionWindow::FiniteSection { half_length } = report.spec.window {
            entries.insert(1, ("T".into(), fmt_f64(half_length)));
        }
        if let Some(psi) = &report.psi {
            entries.push(("psi_csv_path".into(), psi_name.clone()));
            entries.push(("masked_fraction".into(), fmt_f64(psi.masked_fraction)));
        }

        let (oracle_cell, gap_cell, verdict_cell) = if cfg.oracle_compare {
            // finite sections are compared against the observation-span
            // oracle on [-2T, 0]; whole past against the long window
            let window = match cfg.section {
                Some(t) => 2.0 * t,
                None => cfg.oracle_window,
            };
            let problem = OracleProblem::uniform_window(
                covariance.clone(),
                tau,
                cfg.oracle_step,
                -window,
                0.0,
            )?;
            let solution = solve_projection(&problem)?;
            let cmp = compare_with(&report, &solution, cfg.compare_tol)?;

            let w_rows: Vec<Vec<String>> = problem
                .times
                .iter()
                .zip(&solution.weights)
                .map(|(u, w)| vec![fmt_f64(*u), fmt_f64(w.re), fmt_f64(w.im)])
                .collect();
            ctx.write(
                &format!("oracle_tau{i}.csv"),
                render_table(&ctx.header, "u,re_w,im_w", &w_rows),
            )?;
            entries.push(("oracle.sigma2".into(), fmt_f64(solution.error_variance)));
            entries.push(("oracle.cond".into(), fmt_f64(solution.condition)));
            entries.push(("oracle.jitter".into(), fmt_f64(solution.jitter)));

            let verdict = match cmp.verdict {
                Verdict::Consistent => "consistent",
                Verdict::Divergent => "divergent",
            };
            (
                fmt_f64(cmp.sigma2_oracle),
                fmt_f64(cmp.abs_gap),
                verdict.to_string(),
            )
        } else {
            (String::new(), String::new(), "skipped".to_string())
        };

        ctx.write(&format!("predict_tau{i}.txt"), render_report(&ctx.header, &entries))?;
        summary.push(vec![
            fmt_f64(tau),
            cfg.section.map(fmt_f64).unwrap_or_default(),
            fmt_f64(report.error_variance),
            oracle_cell,
            gap_cell,
            verdict_cell,
        ]);
    }

    let table = render_table(
        &ctx.header,
        "tau,T,sigma2_formula,sigma2_oracle,gap,verdict",
        &summary,
    );
    print!("{table}");
    ctx.write("summary.csv", table)?;
    Ok(())
}

fn cmd_simulate(ctx: &Context) -> Result<(), Failure> {
    let cfg = &ctx.config;
    let seed = ctx.require_seed()?;
    let model = cfg.build_model()?;
    let path = match cfg.sim_method {
        SimulationMethod::MovingAverage => {
            let factor = factorize(&model, cfg.time_grid)?;
            simulate_ma(&factor, cfg.path_points, cfg.time_grid.step, seed)?
        }
        SimulationMethod::Spectral => {
            simulate_spectral(&model, cfg.path_points, cfg.time_grid.step, seed)?
        }
    };
    for w in &path.warnings {
        eprintln!("warning: {w}");
    }
    let rows: Vec<Vec<String>> = path
        .times()
        .zip(&path.values)
        .map(|(t, v)| vec![fmt_f64(t), fmt_f64(v.re), fmt_f64(v.im)])
        .collect();
    ctx.write("path.csv", render_table(&ctx.header, "t,re,im", &rows))?;
    println!("path.csv: {} samples, step {}", path.values.len(), fmt_f64(path.step));
    Ok(())
}

fn cmd_verify(ctx: &Context) -> Result<(), Failure> {
    let cfg = &ctx.config;
    if cfg.taus.is_empty() {
        return Err(fail(EXIT_USAGE, "key `predict.tau`: at least one lag is required"));
    }
    let seed = ctx.require_seed()?;
    let (_, factor) = ctx.factorized()?;

    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut failures = Vec::new();
    for (i, &tau) in cfg.taus.iter().enumerate() {
        let mut report = predict_one(ctx, &factor, tau)?;
        if let Some(theory) = cfg.theory_override {
            report.error_variance = theory;
        }
        let mc = monte_carlo_mse(&factor, &report, cfg.replicates, seed.wrapping_add(i as u64))?;
        rows.push(vec![
            fmt_f64(tau),
            mc.n.to_string(),
            fmt_f64(mc.mse),
            fmt_f64(mc.std_error),
            fmt_f64(mc.theory),
            fmt_f64(mc.z),
        ]);
        if mc.z.abs() > 3.0 {
            failures.push(format!("tau={tau}: z={:.3}", mc.z));
        }
    }
    let table = render_table(&ctx.header, "tau,n,mse,stderr,theory,z", &rows);
    print!("{table}");
    ctx.write("mc_report.csv", table)?;
    if !failures.is_empty() {
        return Err(fail(
            EXIT_VERIFICATION,
            format!("Monte Carlo mismatch: {}", failures.join("; ")),
        ));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = Context::build(&cli).and_then(|ctx| match cli.command {
        Command::Check => cmd_check(&ctx),
        Command::Factorize => cmd_factorize(&ctx),
        Command::Predict => cmd_predict(&ctx),
        Command::Simulate => cmd_simulate(&ctx),
        Command::Verify => cmd_verify(&ctx),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
