//! Rate fitting and comparison, weighted norms, measure-tail checks, and the
//! config/report/CLI plumbing.

pub mod cli;
pub mod config;
pub mod report;

use std::f64::consts::E;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certificate::{Certificate, ModelParams};
use crate::dynamics::AcfPoint;
use crate::error::{Error, Result};
use crate::gamma::{field_jet, ScalarField, StencilConfig};
use crate::potential::{dot, PhasePoint, PotentialModel};
use crate::stats::{batch_mean_stderr, mean};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateEstimate {
    pub observable: String,
    pub rate: f64,
    pub t_lo: f64,
    pub t_hi: f64,
    pub stderr: f64,
    pub r_squared: f64,
    pub points: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WindowPolicy {
    /// From `t >= 1/gamma` while `C > 5 stderr`, contiguously.
    Auto { gamma: f64 },
    Explicit { t_lo: f64, t_hi: f64 },
}

/// Weighted least squares fit of `log C(t)` against `t`, weights `(C/stderr)^2`.
/// When every stderr is zero the fit is unweighted with a residual-based error.
pub fn estimate_decay_rate(observable: &str, acf: &[AcfPoint], policy: WindowPolicy) -> Result<RateEstimate> {
    let window: Vec<&AcfPoint> = match policy {
        WindowPolicy::Auto { gamma } => {
            if !(gamma > 0.0) {
                return Err(Error::Argument("gamma must be positive".into()));
            }
            acf.iter()
                .skip_while(|p| p.t < 1.0 / gamma)
                .take_while(|p| p.c > 5.0 * p.stderr && p.c > 0.0)
                .collect()
        }
        WindowPolicy::Explicit { t_lo, t_hi } => {
            let w: Vec<&AcfPoint> = acf.iter().filter(|p| p.t >= t_lo && p.t <= t_hi).collect();
            if w.iter().any(|p| !(p.c > 0.0)) {
                return Err(Error::Statistics("C(t) is not positive on the requested window".into()));
            }
            w
        }
    };
    if window.len() < 2 {
        return Err(Error::Statistics(format!("fit window holds {} points", window.len())));
    }
    let unweighted = window.iter().all(|p| p.stderr == 0.0);
    let w: Vec<f64> = window
        .iter()
        .map(|p| if unweighted { 1.0 } else { (p.c / p.stderr.max(f64::MIN_POSITIVE)).powi(2) })
        .collect();
    let t: Vec<f64> = window.iter().map(|p| p.t).collect();
    let y: Vec<f64> = window.iter().map(|p| p.c.ln()).collect();
    let sw: f64 = w.iter().sum();
    let tm = w.iter().zip(&t).map(|(a, b)| a * b).sum::<f64>() / sw;
    let ym = w.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>() / sw;
    let stt: f64 = w.iter().zip(&t).map(|(a, b)| a * (b - tm).powi(2)).sum();
    let sty: f64 = w.iter().zip(&t).zip(&y).map(|((a, b), c)| a * (b - tm) * (c - ym)).sum();
    if !(stt > 0.0) {
        return Err(Error::Statistics("fit window has no time spread".into()));
    }
    let slope = sty / stt;
    let rss: f64 = (0..t.len()).map(|i| w[i] * (y[i] - ym - slope * (t[i] - tm)).powi(2)).sum();
    let tss: f64 = w.iter().zip(&y).map(|(a, c)| a * (c - ym).powi(2)).sum();
    let n = t.len();
    let stderr = if unweighted {
        if n > 2 { (rss / (n as f64 - 2.0) / stt).sqrt() } else { 0.0 }
    } else {
        (1.0 / stt).sqrt()
    };
    Ok(RateEstimate {
        observable: observable.to_string(),
        rate: -slope,
        t_lo: t[0],
        t_hi: t[n - 1],
        stderr,
        r_squared: if tss > 0.0 { 1.0 - rss / tss } else { 1.0 },
        points: n,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub pass: bool,
    pub rate: f64,
    pub stderr: f64,
    pub sigma: f64,
    pub threshold: f64,
    /// `rate - sigma/2`
    pub margin: f64,
}

/// PASS iff `rate + 3 stderr >= sigma/2`. The squared weighted norm decays at
/// `sigma`, and `W >= 1`, so amplitudes decay at `sigma/2` or faster.
pub fn compare_certificate(sigma: f64, rate: &RateEstimate) -> Verdict {
    let threshold = 0.5 * sigma;
    Verdict {
        pass: rate.rate + 3.0 * rate.stderr >= threshold,
        rate: rate.rate,
        stderr: rate.stderr,
        sigma,
        threshold,
        margin: rate.rate - threshold,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    pub value: f64,
    pub stderr: f64,
    pub weight_term: f64,
    pub gradient_term: f64,
}

/// Monte Carlo estimate of `int f^2 W dmu + zeta^-2 int (|Yf|^2 + |Zf|^2) dmu`.
pub fn weighted_h1_norm(
    f: &dyn ScalarField,
    weight: &(dyn Fn(&PhasePoint) -> Result<f64> + Sync),
    zeta_sq: f64,
    mp: &ModelParams,
    samples: &[PhasePoint],
    st: &StencilConfig,
    n_batches: usize,
) -> Result<NormEstimate> {
    if samples.len() < 2 * n_batches.max(2) {
        return Err(Error::Statistics(format!("{} samples are too few", samples.len())));
    }
    if !(zeta_sq > 0.0) {
        return Err(Error::Argument("zeta^2 must be positive".into()));
    }
    let c = crate::certificate::friction_constant(mp.gamma)?;
    let terms: Vec<(f64, f64)> = samples
        .par_iter()
        .map(|p| -> Result<(f64, f64)> {
            let j = field_jet(f, p, st);
            let y = j.grad_v();
            let z: Vec<f64> = j.grad_x().iter().zip(y).map(|(a, b)| a - c * b).collect();
            Ok((j.value * j.value * weight(p)?, (dot(y, y) + dot(&z, &z)) / zeta_sq))
        })
        .collect::<Result<_>>()?;
    let total: Vec<f64> = terms.iter().map(|(a, b)| a + b).collect();
    let first: Vec<f64> = terms.iter().map(|t| t.0).collect();
    let second: Vec<f64> = terms.iter().map(|t| t.1).collect();
    Ok(NormEstimate {
        value: mean(&total),
        stderr: batch_mean_stderr(&total, n_batches)?,
        weight_term: mean(&first),
        gradient_term: mean(&second),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailCheck {
    pub name: String,
    pub estimate: f64,
    pub stderr: f64,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailVerdict {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub checks: Vec<TailCheck>,
    pub verdict: TailVerdict,
    pub notes: Vec<String>,
}

/// `1/(10 e^4 + 1)`.
pub fn mu_kc_bound() -> f64 {
    1.0 / (10.0 * E.powi(4) + 1.0)
}

/// `kappa'' T sqrt(d) / (1 - 1/(16 sqrt(d)))`.
pub fn gradient_moment_bound(kappa2: f64, temperature: f64, d: usize) -> f64 {
    let s = (d as f64).sqrt();
    kappa2 * temperature * s / (1.0 - 1.0 / (16.0 * s))
}

fn tail_check(name: &str, xs: &[f64], bound: f64, n_batches: usize) -> Result<TailCheck> {
    let (m, se) = (mean(xs), batch_mean_stderr(xs, n_batches)?);
    Ok(TailCheck { name: name.into(), estimate: m, stderr: se, bound, pass: m - 3.0 * se <= bound })
}

/// Three measure estimates against their bounds, each passing when
/// `estimate - 3 stderr <= bound`:
/// `mu(K^c)`, `int |grad U|^2 dmu_2` and `mu_2(U >= R2)`, where `mu_2` is the
/// position marginal. `acceptance_rate` comes from the sampler; values outside
/// `[0.05, 0.95]` make the verdict inconclusive.
pub fn mu_tail_checks(
    model: &PotentialModel,
    cert: &Certificate,
    mu_samples: &[PhasePoint],
    positions: &[Vec<f64>],
    acceptance_rate: Option<f64>,
    n_batches: usize,
) -> Result<TailReport> {
    let mp = &cert.model;
    let kc: Vec<f64> = mu_samples.iter().map(|p| (!cert.contains(model, &p.x, &p.v)) as u8 as f64).collect();
    let grad_sq: Vec<f64> = positions
        .par_iter()
        .map(|x| model.gradient(x).map(|g| dot(&g, &g)))
        .collect::<Result<_>>()?;
    let high: Vec<f64> = positions.iter().map(|x| (model.value_unchecked(x) >= cert.r2) as u8 as f64).collect();
    let checks = vec![
        tail_check("mu(K^c)", &kc, mu_kc_bound(), n_batches)?,
        tail_check(
            "int |grad U|^2 dmu_2",
            &grad_sq,
            gradient_moment_bound(cert.growth.kappa2, mp.temperature, mp.d()),
            n_batches,
        )?,
        tail_check("mu_2(U >= R2)", &high, 0.5 * mu_kc_bound(), n_batches)?,
    ];
    let mut notes = Vec::new();
    let ok_sampler = match acceptance_rate {
        Some(a) if !(0.05..=0.95).contains(&a) => {
            notes.push(format!("sampler acceptance rate {a:.3} outside [0.05, 0.95]"));
            false
        }
        _ => true,
    };
    let verdict = if !ok_sampler {
        TailVerdict::Inconclusive
    } else if checks.iter().all(|c| c.pass) {
        TailVerdict::Pass
    } else {
        TailVerdict::Fail
    };
    Ok(TailReport { checks, verdict, notes })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn acf(f: impl Fn(f64) -> f64, t_max: f64, dt: f64) -> Vec<AcfPoint> {
        let n = (t_max / dt).round() as usize;
        (0..=n).map(|i| AcfPoint { t: i as f64 * dt, c: f(i as f64 * dt), stderr: 0.0 }).collect()
    }

    #[test]
    fn exact_exponential() {
        let a = acf(|t| (-0.7 * t).exp(), 5.0, 0.1);
        let r = estimate_decay_rate("x", &a, WindowPolicy::Auto { gamma: 2.0 }).unwrap();
        assert!((r.rate - 0.7).abs() < 1e-6);
        assert!(r.t_lo >= 0.5);
    }

    #[test]
    fn critical_damping_window() {
        let a = acf(|t| (1.0 + t) * (-t).exp(), 5.0, 0.1);
        let r = estimate_decay_rate("x", &a, WindowPolicy::Explicit { t_lo: 3.0, t_hi: 5.0 }).unwrap();
        assert!(r.rate >= 0.75 && r.rate <= 1.0, "{}", r.rate);
    }

    #[test]
    fn noise_only_is_an_error() {
        let a: Vec<AcfPoint> = (0..50).map(|i| AcfPoint { t: i as f64 * 0.1, c: 0.01, stderr: 0.1 }).collect();
        assert!(matches!(estimate_decay_rate("x", &a, WindowPolicy::Auto { gamma: 1.0 }), Err(Error::Statistics(_))));
    }

    #[test]
    fn verdicts() {
        let r = |rate: f64| RateEstimate {
            observable: "x".into(),
            rate,
            t_lo: 0.0,
            t_hi: 1.0,
            stderr: 1e-9,
            r_squared: 1.0,
            points: 10,
        };
        assert!(compare_certificate(0.2, &r(0.5)).pass);
        assert!(!compare_certificate(0.2, &r(0.04)).pass);
    }

    #[test]
    fn tail_bound_arithmetic() {
        assert!((mu_kc_bound() - 0.0018282153955738026).abs() < 1e-17);
        assert!((gradient_moment_bound(1.0, 1.0, 1) - 16.0 / 15.0).abs() < 1e-15);
    }
}
