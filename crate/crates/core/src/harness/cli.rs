//! Command-line front end. Exit codes: 0 all checks pass, 1 a check failed or
//! a computation errored, 2 usage or configuration error.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use super::config::{AnyCertificate, RunConfig};
use super::report::{read_acf_csv, write_acf_csv, write_json, write_trajectories_csv, Summary};
use super::{compare_certificate, estimate_decay_rate, mu_tail_checks, WindowPolicy};
use crate::certificate::KSpec;
use crate::dynamics::{
    check_invalid_fraction, ensemble_autocorrelation, sample_invariant_with_stats, simulate_ensemble, stream_rng,
};
use crate::error::{Error, Result};
use crate::gamma::{
    check_gamma3_inequality, cross_term_coefficient, verify_gamma2_identities, RandomField, ScalarField,
    StencilConfig, TEST_FIELDS,
};
use crate::lyapunov::{
    check_weight_hypotheses, drift_check, estimate_mu_k, psi_bound_check, stress_phase_points, LyapunovWeight,
};
use crate::potential::{
    check_singular_bounds, check_growth_bound_1, check_growth_bound_2, random_unit, stress_configurations, PhasePoint,
};
use crate::spectral::estimate_rho_k;

pub const THREADS_ENV: &str = "LANGEVIN_CERT_THREADS";

#[derive(Debug, Parser)]
#[command(name = "langevin-cert", version, about = "Convergence-rate certificates for kinetic Langevin dynamics")]
pub struct Cli {
    /// Overrides the seed in the config file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the certificate and write certify.json.
    Certify,
    /// Growth-bound and singular-bound sweeps.
    CheckPotential,
    /// Gamma-2 identity and inequality suite.
    GammaVerify,
    /// Drift, psi bounds, weight hypotheses and measure tails.
    LyapunovVerify,
    /// Grid estimate of the local Poincaré constant.
    Poincare,
    /// Stationary ensemble; writes trajectories.csv and acf.csv.
    Simulate,
    /// Fit the decay rate of acf.csv and compare with the certificate.
    Rate {
        /// Autocorrelation CSV; defaults to <out>/acf.csv.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Run the configured tasks and aggregate report.json.
    Report,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Certify => "certify",
            Command::CheckPotential => "check-potential",
            Command::GammaVerify => "gamma-verify",
            Command::LyapunovVerify => "lyapunov-verify",
            Command::Poincare => "poincare",
            Command::Simulate => "simulate",
            Command::Rate { .. } => "rate",
            Command::Report => "report",
        }
    }

    fn from_name(s: &str) -> Option<Self> {
        Some(match s {
            "certify" => Command::Certify,
            "check-potential" => Command::CheckPotential,
            "gamma-verify" => Command::GammaVerify,
            "lyapunov-verify" => Command::LyapunovVerify,
            "poincare" => Command::Poincare,
            "simulate" => Command::Simulate,
            "rate" => Command::Rate { input: None },
            _ => return None,
        })
    }
}

fn init_threads() {
    if let Some(n) = std::env::var(THREADS_ENV).ok().and_then(|s| s.parse::<usize>().ok()) {
        // a second initialisation in the same process is harmless
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    init_threads();
    let Some(path) = cli.config.as_deref() else {
        eprintln!("error: --config <path> is required");
        return 2;
    };
    let mut cfg = match RunConfig::load(path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Err(e) = std::fs::create_dir_all(&cli.out) {
        eprintln!("error: cannot create {}: {e}", cli.out.display());
        return 2;
    }
    match execute(&cfg, &cli.command, &cli.out) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e @ Error::Config(_)) => {
            eprintln!("error: {e}");
            2
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn execute(cfg: &RunConfig, cmd: &Command, out: &Path) -> Result<bool> {
    if let Command::Report = cmd {
        return report(cfg, out);
    }
    let (value, pass) = run_task(cfg, cmd, out)?;
    let file = out.join(format!("{}.json", cmd.name().replace('-', "_")));
    write_json(&file, &value)?;
    println!("{} {}: {}", if pass { "PASS" } else { "FAIL" }, cmd.name(), file.display());
    Ok(pass)
}

fn run_task(cfg: &RunConfig, cmd: &Command, out: &Path) -> Result<(Value, bool)> {
    match cmd {
        Command::Certify => certify(cfg),
        Command::CheckPotential => check_potential(cfg),
        Command::GammaVerify => gamma_verify(cfg),
        Command::LyapunovVerify => lyapunov_verify(cfg),
        Command::Poincare => poincare(cfg),
        Command::Simulate => simulate(cfg, out),
        Command::Rate { input } => rate(cfg, input.clone().unwrap_or_else(|| out.join("acf.csv")).as_path()),
        Command::Report => unreachable!(),
    }
}

fn report(cfg: &RunConfig, out: &Path) -> Result<bool> {
    let mut summary = Summary::default();
    for name in &cfg.tasks {
        let Some(cmd) = Command::from_name(name) else {
            return Err(Error::Config(format!("unknown task {name:?}")));
        };
        match run_task(cfg, &cmd, out) {
            Ok((v, pass)) => summary.add(name, v, pass),
            Err(e) => summary.add(name, json!({ "error": e.to_string() }), false),
        }
    }
    let file = out.join("report.json");
    summary.write(&file)?;
    let pass = summary.pass();
    println!("{} report: {}", if pass { "PASS" } else { "FAIL" }, file.display());
    Ok(pass)
}

fn mu_points(cfg: &RunConfig, n: usize) -> Result<(Vec<PhasePoint>, f64)> {
    let out = sample_invariant_with_stats(
        &cfg.potential_model()?,
        &cfg.model_params()?,
        &cfg.sampler_config(),
        n,
    )?;
    Ok((out.points, out.acceptance_rate))
}

fn certify(cfg: &RunConfig) -> Result<(Value, bool)> {
    let cert = cfg.certificate()?;
    let pass = match &cert {
        AnyCertificate::General(c) => c.invariant_failures().is_empty(),
        AnyCertificate::Villani(c) => c.sigma > 0.0,
    };
    Ok((cert.to_json(), pass))
}

fn check_potential(cfg: &RunConfig) -> Result<(Value, bool)> {
    let model = cfg.potential_model()?;
    let mp = cfg.model_params()?;
    let gc = cfg.growth_constants()?;
    let v = &cfg.verify;
    let (pts, _) = mu_points(cfg, v.samples)?;
    let base: Vec<Vec<f64>> = pts.into_iter().map(|p| p.x).collect();
    let mut rng = stream_rng(cfg.seed, 4, 0);
    let mut xs = base.clone();
    xs.extend(stress_configurations(&model, &base, v.stress, &mut rng));
    let pairs: Vec<(Vec<f64>, Vec<f64>)> = xs.iter().map(|x| (x.clone(), random_unit(&mut rng, model.dim()))).collect();
    let b1 = check_growth_bound_1(&model, &gc, mp.temperature, &pairs);
    let b2 = check_growth_bound_2(&model, &gc, &xs);
    let mut pass = b1.pass && b2.pass;
    let mut value = json!({ "growth_constants": gc, "hessian_bound": b1, "gradient_bounds": b2 });
    if model.singular_params().is_some() {
        let ap = check_singular_bounds(&model, &pairs)?;
        pass &= ap.pass;
        value["singular_bounds"] = serde_json::to_value(ap).unwrap();
    }
    value["pass"] = pass.into();
    Ok((value, pass))
}

fn gamma_verify(cfg: &RunConfig) -> Result<(Value, bool)> {
    let model = cfg.potential_model()?;
    let mp = cfg.model_params()?;
    let st = StencilConfig::default();
    let (pts, _) = mu_points(cfg, cfg.verify.points)?;
    let fields: Vec<&dyn ScalarField> = TEST_FIELDS.iter().map(|f| f as &dyn ScalarField).collect();
    let ident = verify_gamma2_identities(&model, &mp, &fields, &pts, &st, 1e-4, 1e-8)?;
    let mut rng = stream_rng(cfg.seed, 5, 0);
    let random: Vec<RandomField> = (0..cfg.verify.points).map(|i| RandomField::sample(i, model.dim(), &mut rng)).collect();
    let mut ineq_viol = 0;
    let mut min_slack = f64::INFINITY;
    for f in &random {
        let r = check_gamma3_inequality(&model, &mp, f, &pts, &st)?;
        ineq_viol += r.violations;
        min_slack = min_slack.min(r.min_slack);
    }
    let cross = cross_term_coefficient(mp.gamma)?;
    let pass = ident.pass && ineq_viol == 0 && cross.abs() <= 1e-14 * mp.gamma.max(1.0).powi(2);
    Ok((
        json!({
            "identities": ident,
            "inequality": { "fields": random.len(), "points": pts.len(), "violations": ineq_viol, "min_slack": min_slack },
            "cross_term_coefficient": cross,
            "pass": pass,
        }),
        pass,
    ))
}

fn lyapunov_verify(cfg: &RunConfig) -> Result<(Value, bool)> {
    let model = cfg.potential_model()?;
    let cert = cfg.general_certificate()?;
    let weight = LyapunovWeight::new(&model, &cert)?;
    let v = &cfg.verify;
    let (samples, acc) = mu_points(cfg, v.samples)?;
    let mut pts = samples.clone();
    let mut srng = stream_rng(cfg.seed, 6, 0);
    pts.extend(stress_phase_points(&weight, &samples, v.stress, &mut srng));
    let drift = drift_check(&weight, &pts);
    let psi = psi_bound_check(&weight, &pts)?;
    let mu = estimate_mu_k(&weight, &samples)?;
    let mut rng = stream_rng(cfg.seed, 7, 0);
    let hyp = check_weight_hypotheses(&cert, &weight, &samples, v.directions, &mut rng, &mu)?;
    let positions: Vec<Vec<f64>> = samples.iter().map(|p| p.x.clone()).collect();
    let tails = mu_tail_checks(&model, &cert, &samples, &positions, Some(acc), v.n_batches)?;
    let pass = drift.pass && psi.pass && hyp.pass && tails.verdict == super::TailVerdict::Pass;
    Ok((
        json!({
            "certificate": cert.to_json(),
            "drift": drift,
            "psi_bounds": psi,
            "weight_hypotheses": hyp,
            "mu_estimates": mu,
            "tails": tails,
            "pass": pass,
        }),
        pass,
    ))
}

fn poincare(cfg: &RunConfig) -> Result<(Value, bool)> {
    let model = cfg.potential_model()?;
    let mp = cfg.model_params()?;
    let gc = cfg.growth_constants()?;
    let (_, r2) = crate::certificate::compute_r1_r2(&gc, &mp)?;
    let sp = &cfg.spectral;
    let (rho, est) = estimate_rho_k(&model, &mp, &KSpec::new(&mp, r2), sp.points_per_axis, sp.cutoff, sp.levels)?;
    let pass = est.rho.is_finite() && (sp.levels < 3 || est.gaps_shrink());
    Ok((json!({ "rho_K": rho, "estimate": est, "pass": pass }), pass))
}

fn stationary_acf(cfg: &RunConfig) -> Result<(Vec<crate::dynamics::Trajectory>, Vec<crate::dynamics::AcfPoint>)> {
    let model = cfg.potential_model()?;
    let mp = cfg.model_params()?;
    let sim = cfg.sim_config();
    let (starts, _) = mu_points(cfg, sim.ensemble_size)?;
    let trajs = simulate_ensemble(&model, &mp, &sim, &starts)?;
    check_invalid_fraction(&trajs)?;
    let acf = ensemble_autocorrelation(&trajs, &|p: &PhasePoint| p.x[0], cfg.simulation.n_batches)?;
    Ok((trajs, acf))
}

fn simulate(cfg: &RunConfig, out: &Path) -> Result<(Value, bool)> {
    let (trajs, acf) = stationary_acf(cfg)?;
    write_trajectories_csv(&out.join("trajectories.csv"), &trajs)?;
    write_acf_csv(&out.join("acf.csv"), &acf)?;
    let invalid = trajs.iter().filter(|t| !t.valid).count();
    Ok((
        json!({
            "trajectories": trajs.len(),
            "invalid": invalid,
            "observable": "x_1",
            "files": ["trajectories.csv", "acf.csv"],
            "pass": true,
        }),
        true,
    ))
}

fn rate(cfg: &RunConfig, input: &Path) -> Result<(Value, bool)> {
    let acf = if input.exists() { read_acf_csv(input)? } else { stationary_acf(cfg)?.1 };
    let est = estimate_decay_rate("x_1", &acf, WindowPolicy::Auto { gamma: cfg.model.gamma })?;
    let sigma = cfg.certificate()?.sigma();
    let verdict = compare_certificate(sigma, &est);
    let pass = verdict.pass;
    Ok((
        json!({
            "estimate": est,
            "verdict": verdict,
            "criterion": "rate + 3 stderr >= sigma/2: the squared weighted norm decays at rate sigma and W >= 1",
            "pass": pass,
        }),
        pass,
    ))
}
