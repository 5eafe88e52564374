//! Simulation of the kinetic Langevin SDE, invariant-measure sampling and
//! autocorrelation estimates.
//!
//! Every trajectory and every sampler chain owns a ChaCha8 stream keyed by
//! `(seed, purpose, index)`, so ensembles are reproducible and independent of
//! the thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certificate::ModelParams;
use crate::error::{arg, Error, Result};
use crate::potential::{dot, PhasePoint, PotentialModel};

pub const MAX_HALVINGS: u32 = 40;

const PURPOSE_TRAJECTORY: u64 = 0;
const PURPOSE_SAMPLER: u64 = 1;
const PURPOSE_GRADIENT: u64 = 2;

/// RNG for stream `index` of a given purpose.
pub fn stream_rng(seed: u64, purpose: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((purpose << 56) | (index & ((1 << 56) - 1)));
    rng
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Baoab,
    EulerMaruyama,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub dt: f64,
    pub t_max: f64,
    pub ensemble_size: usize,
    pub seed: u64,
    /// Force magnitude that triggers subdivision of a base step. A step of
    /// size `h = dt / 2^j` is accepted while `|grad U| <= threshold * 2^j`.
    pub substep_force_threshold: f64,
    pub energy_cap: f64,
    pub scheme: Scheme,
    /// Time between recorded points.
    pub record_interval: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_max: 1.0,
            ensemble_size: 1,
            seed: 0,
            substep_force_threshold: 1e6,
            energy_cap: 1e12,
            scheme: Scheme::Baoab,
            record_interval: 0.1,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) {
            return arg("dt must be positive");
        }
        if !(self.t_max >= 0.0) {
            return arg("t_max must be nonnegative");
        }
        if self.ensemble_size == 0 {
            return arg("ensemble_size must be at least 1");
        }
        if !(self.substep_force_threshold > 0.0) {
            return arg("substep_force_threshold must be positive");
        }
        if !(self.record_interval > 0.0) {
            return arg("record_interval must be positive");
        }
        Ok(())
    }

    fn steps(&self) -> (usize, usize) {
        let n = (self.t_max / self.dt).round() as usize;
        let stride = ((self.record_interval / self.dt).round() as usize).max(1);
        (n, stride)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExitReason {
    None,
    EnergyCap,
    DomainExit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub points: Vec<PhasePoint>,
    pub valid: bool,
    pub exit: ExitReason,
}

/// Exact Ornstein-Uhlenbeck velocity update over time `h`:
/// `v <- e^(-gamma h) v + sqrt(T (1 - e^(-2 gamma h))) xi`.
pub fn ou_substep(v: &mut [f64], gamma: f64, temperature: f64, h: f64, noise: &[f64]) {
    let a = (-gamma * h).exp();
    let s = (temperature * -(-2.0 * gamma * h).exp_m1()).sqrt();
    for (vi, xi) in v.iter_mut().zip(noise) {
        *vi = a * *vi + s * xi;
    }
}

struct Work {
    g: Vec<f64>,
    noise: Vec<f64>,
}

fn force_ok(g: &[f64], limit: f64) -> bool {
    dot(g, g) <= limit * limit
}

fn fill_noise<R: Rng + ?Sized>(rng: &mut R, out: &mut [f64]) {
    for z in out.iter_mut() {
        *z = rng.sample(StandardNormal);
    }
}

/// One attempt at a step of size `h`; `false` means the step must be split.
#[allow(clippy::too_many_arguments)]
fn attempt<R: Rng + ?Sized>(
    model: &PotentialModel,
    mp: &ModelParams,
    scheme: Scheme,
    x: &mut [f64],
    v: &mut [f64],
    h: f64,
    limit: f64,
    w: &mut Work,
    rng: &mut R,
) -> bool {
    let (x0, v0) = (x.to_vec(), v.to_vec());
    let restore = |x: &mut [f64], v: &mut [f64]| {
        x.copy_from_slice(&x0);
        v.copy_from_slice(&v0);
    };
    if !model.try_gradient_into(x, &mut w.g) || !force_ok(&w.g, limit) {
        return false;
    }
    fill_noise(rng, &mut w.noise);
    match scheme {
        Scheme::Baoab => {
            for i in 0..x.len() {
                v[i] -= 0.5 * h * w.g[i];
                x[i] += 0.5 * h * v[i];
            }
            ou_substep(v, mp.gamma, mp.temperature, h, &w.noise);
            for i in 0..x.len() {
                x[i] += 0.5 * h * v[i];
            }
            if !model.in_domain(x) || !model.try_gradient_into(x, &mut w.g) || !force_ok(&w.g, limit) {
                restore(x, v);
                return false;
            }
            for i in 0..x.len() {
                v[i] -= 0.5 * h * w.g[i];
            }
        }
        Scheme::EulerMaruyama => {
            let s = (2.0 * mp.gamma * mp.temperature * h).sqrt();
            for i in 0..x.len() {
                let vi = v[i];
                v[i] += h * (-mp.gamma * vi - w.g[i]) + s * w.noise[i];
                x[i] += h * vi;
            }
            if !model.in_domain(x) {
                restore(x, v);
                return false;
            }
        }
    }
    true
}

#[allow(clippy::too_many_arguments)]
fn advance<R: Rng + ?Sized>(
    model: &PotentialModel,
    mp: &ModelParams,
    cfg: &SimConfig,
    x: &mut [f64],
    v: &mut [f64],
    depth: u32,
    w: &mut Work,
    rng: &mut R,
) -> std::result::Result<(), ExitReason> {
    let scale = 2f64.powi(depth as i32);
    let h = cfg.dt / scale;
    if attempt(model, mp, cfg.scheme, x, v, h, cfg.substep_force_threshold * scale, w, rng) {
        return Ok(());
    }
    if depth >= MAX_HALVINGS {
        return Err(ExitReason::DomainExit);
    }
    advance(model, mp, cfg, x, v, depth + 1, w, rng)?;
    advance(model, mp, cfg, x, v, depth + 1, w, rng)
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepOutcome {
    pub point: PhasePoint,
    pub exit: ExitReason,
}

/// One base step of size `cfg.dt`, recursively halved when forces are too large.
pub fn step<R: Rng + ?Sized>(
    model: &PotentialModel,
    mp: &ModelParams,
    cfg: &SimConfig,
    p: &PhasePoint,
    rng: &mut R,
) -> Result<StepOutcome> {
    if p.dim() != model.dim() || p.v.len() != model.dim() || !model.in_domain(&p.x) {
        return arg("step requires a valid phase point");
    }
    let d = model.dim();
    let mut w = Work { g: vec![0.0; d], noise: vec![0.0; d] };
    let (mut x, mut v) = (p.x.clone(), p.v.clone());
    let exit = match advance(model, mp, cfg, &mut x, &mut v, 0, &mut w, rng) {
        Ok(()) => ExitReason::None,
        Err(e) => e,
    };
    Ok(StepOutcome { point: PhasePoint { x, v }, exit })
}

/// Dynamics parameters allowing `gamma = 0` or `T = 0`, which the certificate
/// types reject but the integrator tests need.
pub fn raw_params(gamma: f64, temperature: f64, d: usize) -> ModelParams {
    ModelParams { gamma, temperature, n: 1, k: d }
}

pub fn simulate_trajectory(
    model: &PotentialModel,
    mp: &ModelParams,
    cfg: &SimConfig,
    p0: &PhasePoint,
    index: u64,
) -> Result<Trajectory> {
    cfg.validate()?;
    if p0.dim() != model.dim() || p0.v.len() != model.dim() || !model.in_domain(&p0.x) {
        return arg("initial point must be a valid phase point");
    }
    if model.hamiltonian(p0) >= cfg.energy_cap {
        return arg("energy cap must exceed the initial energy");
    }
    let mut rng = stream_rng(cfg.seed, PURPOSE_TRAJECTORY, index);
    let (n, stride) = cfg.steps();
    let d = model.dim();
    let mut w = Work { g: vec![0.0; d], noise: vec![0.0; d] };
    let (mut x, mut v) = (p0.x.clone(), p0.v.clone());
    let mut times = vec![0.0];
    let mut points = vec![p0.clone()];
    let mut exit = ExitReason::None;
    for s in 1..=n {
        if let Err(e) = advance(model, mp, cfg, &mut x, &mut v, 0, &mut w, &mut rng) {
            exit = e;
            break;
        }
        let h = 0.5 * dot(&v, &v) + model.value_unchecked(&x);
        if !(h <= cfg.energy_cap) {
            exit = ExitReason::EnergyCap;
            break;
        }
        if s % stride == 0 {
            times.push(s as f64 * cfg.dt);
            points.push(PhasePoint { x: x.clone(), v: v.clone() });
        }
    }
    Ok(Trajectory { times, points, valid: exit == ExitReason::None, exit })
}

/// One trajectory per start point, run in parallel; stream `i` drives trajectory `i`.
pub fn simulate_ensemble(
    model: &PotentialModel,
    mp: &ModelParams,
    cfg: &SimConfig,
    starts: &[PhasePoint],
) -> Result<Vec<Trajectory>> {
    starts
        .par_iter()
        .enumerate()
        .map(|(i, p)| simulate_trajectory(model, mp, cfg, p, i as u64))
        .collect()
}

/// Fails when more than 0.1% of trajectories were invalidated.
pub fn check_invalid_fraction(trajs: &[Trajectory]) -> Result<usize> {
    let bad = trajs.iter().filter(|t| !t.valid).count();
    if bad as f64 > 1e-3 * trajs.len() as f64 {
        return Err(Error::Statistics(format!(
            "{bad} of {} trajectories hit the energy cap or left the domain",
            trajs.len()
        )));
    }
    Ok(bad)
}

// ---------------------------------------------------------------------------
// Invariant measure sampling
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub seed: u64,
    pub chains: usize,
    pub burn_in: usize,
    pub thin: usize,
    /// Initial proposal standard deviation per coordinate, in units of `sqrt(T)`.
    pub proposal_scale: f64,
    /// Spacing of the deterministic line start for the singular family.
    pub start_spacing: f64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self { seed: 0, chains: 8, burn_in: 5000, thin: 10, proposal_scale: 0.5, start_spacing: 1.0 }
    }
}

/// `min(1, exp(-dU / T))`; zero for proposals outside the domain.
pub fn acceptance_probability(delta_u: f64, temperature: f64) -> f64 {
    if delta_u.is_nan() || delta_u == f64::INFINITY {
        return 0.0;
    }
    (-delta_u / temperature).exp().min(1.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplerOutput {
    pub points: Vec<PhasePoint>,
    pub acceptance_rate: f64,
    pub chains: usize,
}

fn run_chain(
    model: &PotentialModel,
    mp: &ModelParams,
    cfg: &SamplerConfig,
    chain: usize,
    count: usize,
) -> (Vec<PhasePoint>, usize, usize) {
    let mut rng = stream_rng(cfg.seed, PURPOSE_SAMPLER, chain as u64);
    let d = model.dim();
    let t = mp.temperature;
    let sd_v = t.sqrt();
    let mut x = model.line_configuration(cfg.start_spacing);
    let mut u = model.value_unchecked(&x);
    let mut scale = cfg.proposal_scale * sd_v;
    let mut prop = vec![0.0; d];
    let mut accepted = 0usize;
    let mut proposed = 0usize;
    let mut window_acc = 0usize;
    let mut out = Vec::with_capacity(count);
    let total = cfg.burn_in + count * cfg.thin.max(1);
    for it in 0..total {
        for (p, xi) in prop.iter_mut().zip(&x) {
            *p = xi + scale * rng.sample::<f64, _>(StandardNormal);
        }
        let un = model.value_unchecked(&prop);
        let acc = acceptance_probability(un - u, t);
        let take = acc >= 1.0 || rng.random::<f64>() < acc;
        if take {
            x.copy_from_slice(&prop);
            u = un;
        }
        if it < cfg.burn_in {
            window_acc += take as usize;
            if (it + 1) % 100 == 0 {
                // steer toward ~30% acceptance
                let rate = window_acc as f64 / 100.0;
                scale *= ((rate - 0.3) * 2.0).exp();
                window_acc = 0;
            }
            continue;
        }
        proposed += 1;
        accepted += take as usize;
        if (it - cfg.burn_in + 1) % cfg.thin.max(1) == 0 {
            let v: Vec<f64> = (0..d).map(|_| sd_v * rng.sample::<f64, _>(StandardNormal)).collect();
            out.push(PhasePoint { x: x.clone(), v });
        }
    }
    (out, accepted, proposed)
}

/// Draws `n` points from `mu ∝ exp(-H/T)`: exact Gaussian velocities and
/// random-walk Metropolis positions over `cfg.chains` independent chains.
pub fn sample_invariant_with_stats(
    model: &PotentialModel,
    mp: &ModelParams,
    cfg: &SamplerConfig,
    n: usize,
) -> Result<SamplerOutput> {
    if n == 0 {
        return arg("sample count must be at least 1");
    }
    if !(mp.temperature > 0.0) {
        return arg("sampling requires T > 0");
    }
    if cfg.chains == 0 {
        return arg("at least one chain is required");
    }
    let x0 = model.line_configuration(cfg.start_spacing);
    if !model.in_domain(&x0) {
        return Err(Error::Setup("starting configuration is outside the domain".into()));
    }
    let per = n.div_ceil(cfg.chains);
    let runs: Vec<_> = (0..cfg.chains)
        .into_par_iter()
        .map(|c| run_chain(model, mp, cfg, c, per))
        .collect();
    let mut points = Vec::with_capacity(per * cfg.chains);
    let (mut acc, mut prop) = (0, 0);
    for (pts, a, p) in runs {
        points.extend(pts);
        acc += a;
        prop += p;
    }
    // interleave chains so that any prefix mixes all of them
    let chains = cfg.chains;
    let mut mixed = Vec::with_capacity(n);
    for i in 0..per {
        for c in 0..chains {
            if mixed.len() < n {
                mixed.push(points[c * per + i].clone());
            }
        }
    }
    Ok(SamplerOutput { points: mixed, acceptance_rate: acc as f64 / prop.max(1) as f64, chains })
}

pub fn sample_invariant(
    model: &PotentialModel,
    mp: &ModelParams,
    cfg: &SamplerConfig,
    n: usize,
) -> Result<Vec<PhasePoint>> {
    Ok(sample_invariant_with_stats(model, mp, cfg, n)?.points)
}

// ---------------------------------------------------------------------------
// Gradient system dX = -grad U dt + sqrt(2T) dW
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradientTrajectory {
    pub times: Vec<f64>,
    pub xs: Vec<Vec<f64>>,
    pub valid: bool,
    pub exit: ExitReason,
}

fn gradient_advance<R: Rng + ?Sized>(
    model: &PotentialModel,
    temperature: f64,
    cfg: &SimConfig,
    x: &mut [f64],
    depth: u32,
    w: &mut Work,
    rng: &mut R,
) -> std::result::Result<(), ExitReason> {
    let scale = 2f64.powi(depth as i32);
    let h = cfg.dt / scale;
    let limit = cfg.substep_force_threshold * scale;
    if model.try_gradient_into(x, &mut w.g) && force_ok(&w.g, limit) {
        fill_noise(rng, &mut w.noise);
        let s = (2.0 * temperature * h).sqrt();
        let x0 = x.to_vec();
        for i in 0..x.len() {
            x[i] += -h * w.g[i] + s * w.noise[i];
        }
        if model.in_domain(x) {
            return Ok(());
        }
        x.copy_from_slice(&x0);
    }
    if depth >= MAX_HALVINGS {
        return Err(ExitReason::DomainExit);
    }
    gradient_advance(model, temperature, cfg, x, depth + 1, w, rng)?;
    gradient_advance(model, temperature, cfg, x, depth + 1, w, rng)
}

pub fn gradient_system_step<R: Rng + ?Sized>(
    model: &PotentialModel,
    temperature: f64,
    cfg: &SimConfig,
    x: &[f64],
    rng: &mut R,
) -> Result<(Vec<f64>, ExitReason)> {
    if !model.in_domain(x) {
        return arg("gradient system step requires a point in the domain");
    }
    let d = model.dim();
    let mut w = Work { g: vec![0.0; d], noise: vec![0.0; d] };
    let mut y = x.to_vec();
    let exit = match gradient_advance(model, temperature, cfg, &mut y, 0, &mut w, rng) {
        Ok(()) => ExitReason::None,
        Err(e) => e,
    };
    Ok((y, exit))
}

pub fn simulate_gradient_system(
    model: &PotentialModel,
    temperature: f64,
    cfg: &SimConfig,
    x0: &[f64],
    index: u64,
) -> Result<GradientTrajectory> {
    cfg.validate()?;
    if !model.in_domain(x0) {
        return arg("initial point must lie in the domain");
    }
    let mut rng = stream_rng(cfg.seed, PURPOSE_GRADIENT, index);
    let (n, stride) = cfg.steps();
    let d = model.dim();
    let mut w = Work { g: vec![0.0; d], noise: vec![0.0; d] };
    let mut x = x0.to_vec();
    let mut times = vec![0.0];
    let mut xs = vec![x.clone()];
    let mut exit = ExitReason::None;
    for s in 1..=n {
        if let Err(e) = gradient_advance(model, temperature, cfg, &mut x, 0, &mut w, &mut rng) {
            exit = e;
            break;
        }
        if !(model.value_unchecked(&x) <= cfg.energy_cap) {
            exit = ExitReason::EnergyCap;
            break;
        }
        if s % stride == 0 {
            times.push(s as f64 * cfg.dt);
            xs.push(x.clone());
        }
    }
    Ok(GradientTrajectory { times, xs, valid: exit == ExitReason::None, exit })
}

// ---------------------------------------------------------------------------
// Autocorrelation
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AcfPoint {
    pub t: f64,
    #[serde(rename = "C")]
    pub c: f64,
    pub stderr: f64,
}

/// Stationary autocovariance `C(t) = E[(f(p_0) - m)(f(p_t) - m)]` over an
/// ensemble of stationary-start trajectories. Standard errors come from
/// `n_batches` groups of trajectories.
pub fn ensemble_autocorrelation(
    trajs: &[Trajectory],
    f: &(dyn Fn(&PhasePoint) -> f64 + Sync),
    n_batches: usize,
) -> Result<Vec<AcfPoint>> {
    let valid: Vec<&Trajectory> = trajs.iter().filter(|t| t.valid).collect();
    let m = valid.len();
    if n_batches < 2 || m < 2 * n_batches {
        return Err(Error::Statistics(format!(
            "{m} valid trajectories are too few for {n_batches} batches"
        )));
    }
    let lags = valid.iter().map(|t| t.points.len()).min().unwrap();
    let vals: Vec<Vec<f64>> = valid
        .par_iter()
        .map(|t| t.points[..lags].iter().map(f).collect())
        .collect();
    let mean = vals.iter().flatten().sum::<f64>() / (m * lags) as f64;
    let size = m / n_batches;
    let times = &valid[0].times;
    let mut out = Vec::with_capacity(lags);
    for j in 0..lags {
        let prod: Vec<f64> = vals.iter().map(|s| (s[0] - mean) * (s[j] - mean)).collect();
        let c = prod.iter().sum::<f64>() / m as f64;
        let bm: Vec<f64> = (0..n_batches)
            .map(|b| prod[b * size..(b + 1) * size].iter().sum::<f64>() / size as f64)
            .collect();
        let bmean = bm.iter().sum::<f64>() / n_batches as f64;
        let var = bm.iter().map(|x| (x - bmean).powi(2)).sum::<f64>() / (n_batches as f64 - 1.0);
        out.push(AcfPoint { t: times[j], c, stderr: (var / n_batches as f64).sqrt() });
    }
    Ok(out)
}

/// Autocovariance of one long stationary series sampled every `dt`, for lags
/// `0..=max_lag`, with standard errors from `n_batches` contiguous blocks.
pub fn series_autocorrelation(
    series: &[f64],
    dt: f64,
    max_lag: usize,
    n_batches: usize,
) -> Result<Vec<AcfPoint>> {
    let n = series.len();
    if n_batches < 2 || n < n_batches * (max_lag + 2) {
        return Err(Error::Statistics(format!(
            "series of length {n} is too short for lag {max_lag} with {n_batches} blocks"
        )));
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let y: Vec<f64> = series.iter().map(|s| s - mean).collect();
    let block = n / n_batches;
    (0..=max_lag)
        .map(|l| {
            let c = (0..n - l).map(|i| y[i] * y[i + l]).sum::<f64>() / (n - l) as f64;
            let bm: Vec<f64> = (0..n_batches)
                .map(|b| {
                    let s = b * block;
                    (s..s + block - l).map(|i| y[i] * y[i + l]).sum::<f64>() / (block - l) as f64
                })
                .collect();
            let bmean = bm.iter().sum::<f64>() / n_batches as f64;
            let var = bm.iter().map(|x| (x - bmean).powi(2)).sum::<f64>() / (n_batches as f64 - 1.0);
            Ok(AcfPoint { t: l as f64 * dt, c, stderr: (var / n_batches as f64).sqrt() })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::SingularParams;

    #[test]
    fn ou_factor_is_exact() {
        let mut v = vec![1.5, -0.25];
        ou_substep(&mut v, 3.0, 0.0, 1e-3, &[0.7, -0.2]);
        let a = (-3.0f64 * 1e-3).exp();
        assert!((v[0] - 1.5 * a).abs() <= 1e-14);
        assert!((v[1] + 0.25 * a).abs() <= 1e-14);
    }

    #[test]
    fn metropolis_rule() {
        assert_eq!(acceptance_probability(0.0, 1.0), 1.0);
        assert_eq!(acceptance_probability(-3.0, 1.0), 1.0);
        assert!((acceptance_probability(1.0, 2.0) - (-0.5f64).exp()).abs() < 1e-16);
        assert_eq!(acceptance_probability(f64::INFINITY, 1.0), 0.0);
    }

    #[test]
    fn zero_duration_trajectory() {
        let m = PotentialModel::single_well(1).unwrap();
        let mp = raw_params(1.0, 1.0, 1);
        let cfg = SimConfig { t_max: 0.0, ..Default::default() };
        let tr = simulate_trajectory(&m, &mp, &cfg, &PhasePoint::zeros(1), 0).unwrap();
        assert_eq!(tr.points.len(), 1);
        assert!(tr.valid);
    }

    #[test]
    fn same_seed_same_path() {
        let m = PotentialModel::double_well(2).unwrap();
        let mp = raw_params(1.0, 0.5, 2);
        let cfg = SimConfig { t_max: 2.0, dt: 1e-2, seed: 9, ..Default::default() };
        let p = PhasePoint::new(vec![0.3, 0.1], vec![0.0, 1.0]).unwrap();
        let a = simulate_trajectory(&m, &mp, &cfg, &p, 4).unwrap();
        let b = simulate_trajectory(&m, &mp, &cfg, &p, 4).unwrap();
        assert_eq!(a, b);
        let c = simulate_trajectory(&m, &mp, &cfg, &p, 5).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn invalid_start_is_rejected() {
        let m = PotentialModel::singular_pair(SingularParams {
            n: 2, k: 1, a_coef: 1.0, b_coef: 1.0, a: 2, b: 6.0, ordered: true,
        })
        .unwrap();
        let mp = raw_params(1.0, 1.0, 2);
        let p = PhasePoint::new(vec![1.0, 0.0], vec![0.0, 0.0]).unwrap();
        let mut rng = stream_rng(0, 0, 0);
        assert!(step(&m, &mp, &SimConfig::default(), &p, &mut rng).is_err());
    }

    #[test]
    fn gradient_system_frozen_without_force_or_noise() {
        let m = PotentialModel::double_well(1).unwrap();
        let cfg = SimConfig { t_max: 1.0, dt: 1e-2, ..Default::default() };
        // x = 0 is a critical point
        let tr = simulate_gradient_system(&m, 0.0, &cfg, &[0.0], 0).unwrap();
        assert!(tr.xs.iter().all(|x| x[0] == 0.0));
    }

    #[test]
    fn series_acf_lag_zero_is_variance() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 7919) % 101) as f64).collect();
        let acf = series_autocorrelation(&xs, 0.5, 3, 10).unwrap();
        let m = xs.iter().sum::<f64>() / 1000.0;
        let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / 1000.0;
        assert!((acf[0].c - var).abs() < 1e-9 * var);
        assert_eq!(acf[2].t, 1.0);
        assert!(series_autocorrelation(&xs[..10], 0.5, 3, 10).is_err());
    }
}
