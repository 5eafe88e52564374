//! The Lyapunov weight `V = exp(b H + psi)` and its checks.
//!
//! `h` is a smooth step from 0 on `U <= R1` to 1 on `U >= R2`, and
//! `psi = -delta b h(U) (v.grad U) / |grad U|^2` with `delta = 3 gamma T d / 2`
//! and `b = 1/R2`. The drift is checked in the form
//! `L*V <= -alpha V + beta_V 1_K`, the Poincaré-transfer hypotheses with
//! `W = e V + lambda`.

use std::f64::consts::E;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certificate::{Certificate, KSpec, ModelParams};
use crate::error::{Error, Result};
use crate::gamma::{apply_lstar, FnField, StencilConfig};
use crate::potential::{dot, random_unit, stress_configurations, PhasePoint, PotentialModel};

/// `s(t) = phi(t)/(phi(t) + phi(1-t))` with `phi(t) = exp(-1/t)`.
pub fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        let e = 1.0 / t - 1.0 / (1.0 - t);
        if e >= 0.0 {
            let w = (-e).exp();
            w / (1.0 + w)
        } else {
            1.0 / (1.0 + e.exp())
        }
    }
}

pub fn smooth_step_prime(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        return 0.0;
    }
    let e = 1.0 / t - 1.0 / (1.0 - t);
    let w = (-e.abs()).exp();
    // s (1 - s) = w / (1 + w)^2
    w / ((1.0 + w) * (1.0 + w)) * (1.0 / (t * t) + 1.0 / ((1.0 - t) * (1.0 - t)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LyapunovWeight {
    pub model: PotentialModel,
    pub mp: ModelParams,
    pub r1: f64,
    pub r2: f64,
    pub delta: f64,
    pub b: f64,
    pub lambda: f64,
    pub alpha: f64,
    /// Drift constant for `V` itself: `beta_exact / e`.
    pub beta_v: f64,
    pub k_spec: KSpec,
}

/// Terms of `L*V / V`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DriftTerms {
    pub kinetic: f64,
    pub confinement: f64,
    pub transport: f64,
    pub psi_friction: f64,
    pub gradient_sq: f64,
    pub constant: f64,
}

impl DriftTerms {
    pub fn total(&self) -> f64 {
        self.kinetic + self.confinement + self.transport + self.psi_friction + self.gradient_sq + self.constant
    }
}

impl LyapunovWeight {
    pub fn new(model: &PotentialModel, cert: &Certificate) -> Result<Self> {
        if model.dim() != cert.model.d() {
            return Err(Error::Argument("model dimension differs from the certificate".into()));
        }
        Ok(Self {
            model: model.clone(),
            mp: cert.model,
            r1: cert.r1,
            r2: cert.r2,
            delta: cert.delta(),
            b: cert.b(),
            lambda: cert.lambda,
            alpha: cert.alpha,
            beta_v: cert.beta_exact / E,
            k_spec: cert.k_spec,
        })
    }

    fn td(&self) -> f64 {
        self.mp.temperature * self.mp.d() as f64
    }

    pub fn h(&self, q: f64) -> f64 {
        smooth_step((q - self.r1) / (self.r2 - self.r1))
    }

    pub fn h_prime(&self, q: f64) -> f64 {
        smooth_step_prime((q - self.r1) / (self.r2 - self.r1)) / (self.r2 - self.r1)
    }

    fn gradient_checked(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self.model.try_gradient(x) {
            Some(g) if self.model.in_domain(x) => Ok(g),
            _ => Err(Error::Domain("position outside the domain".into())),
        }
    }

    fn potential(&self, x: &[f64]) -> Result<f64> {
        let u = self.model.value_unchecked(x);
        if u.is_finite() {
            Ok(u)
        } else {
            Err(Error::Domain("position outside the domain".into()))
        }
    }

    pub fn psi(&self, p: &PhasePoint) -> Result<f64> {
        let u = self.potential(&p.x)?;
        if u < self.r1 {
            return Ok(0.0);
        }
        let g = self.gradient_checked(&p.x)?;
        let g2 = dot(&g, &g);
        if g2 == 0.0 {
            return Err(Error::Singularity("grad U vanishes where U >= R1".into()));
        }
        Ok(-self.delta * self.b * self.h(u) * dot(&p.v, &g) / g2)
    }

    pub fn log_v(&self, p: &PhasePoint) -> Result<f64> {
        let h = p.kinetic() + self.potential(&p.x)?;
        Ok(self.b * h + self.psi(p)?)
    }

    /// `V`, which may be `+inf` when `log V` exceeds the f64 range.
    pub fn v(&self, p: &PhasePoint) -> Result<f64> {
        Ok(self.log_v(p)?.exp())
    }

    pub fn w(&self, p: &PhasePoint) -> Result<f64> {
        Ok(E * self.v(p)? + self.lambda)
    }

    pub fn drift_terms(&self, p: &PhasePoint) -> Result<DriftTerms> {
        let u = self.potential(&p.x)?;
        let (gm, t, b, d) = (self.mp.gamma, self.mp.temperature, self.b, self.delta);
        let v2 = dot(&p.v, &p.v);
        let mut terms = DriftTerms {
            kinetic: -b * gm * (1.0 - b * t) * v2,
            constant: gm * b * self.td(),
            ..Default::default()
        };
        if u < self.r1 {
            return Ok(terms);
        }
        let g = self.gradient_checked(&p.x)?;
        let g2 = dot(&g, &g);
        if g2 == 0.0 {
            return Err(Error::Singularity("grad U vanishes where U >= R1".into()));
        }
        let (h, hp) = (self.h(u), self.h_prime(u));
        let hv = self.model.hessian_vec(&p.x, &p.v)?;
        let vg = dot(&p.v, &g);
        let psi = -d * b * h * vg / g2;
        let v_grad_x_psi =
            -d * b * (hp * vg * vg / g2 + h * dot(&p.v, &hv) / g2 - 2.0 * h * vg * dot(&g, &hv) / (g2 * g2));
        terms.confinement = -d * b * h;
        terms.transport = -v_grad_x_psi;
        terms.psi_friction = (2.0 * b * t - 1.0) * gm * psi;
        terms.gradient_sq = gm * t * d * d * b * b * h * h / g2;
        Ok(terms)
    }

    /// `L*V / V`, assembled analytically.
    pub fn lstar_v_over_v(&self, p: &PhasePoint) -> Result<f64> {
        Ok(self.drift_terms(p)?.total())
    }

    pub fn lstar_v(&self, p: &PhasePoint) -> Result<f64> {
        Ok(self.v(p)? * self.lstar_v_over_v(p)?)
    }

    /// `L*V` by finite differences of `V`, for cross-checking.
    pub fn lstar_v_fd(&self, p: &PhasePoint, st: &StencilConfig) -> Result<f64> {
        let f = FnField { name: "V".into(), f: |q: &PhasePoint| self.v(q).unwrap_or(f64::NAN) };
        apply_lstar(&self.model, &self.mp, &f, p, st)
    }

    pub fn indicator_k(&self, p: &PhasePoint) -> bool {
        self.k_spec.contains(&self.model, &p.x, &p.v)
    }
}

pub fn indicator_k(cert: &Certificate, model: &PotentialModel, p: &PhasePoint) -> bool {
    cert.contains(model, &p.x, &p.v)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DriftReport {
    pub checked: usize,
    pub skipped: usize,
    pub inside_k: usize,
    pub violations: usize,
    pub off_k_violations: usize,
    /// min over points of `(-alpha V + beta_V 1_K + tol - L*V) / V`
    pub min_relative_margin: f64,
    pub argmin: Option<PhasePoint>,
    /// max over points outside K of `L*V/V + alpha`
    pub max_off_k_excess: f64,
    /// min of `(-alpha V + beta_V 1_K - L*V) / (alpha V)`, no tolerance
    pub min_strict_margin_over_alpha: f64,
    /// points failing the inequality without tolerance
    pub strict_violations: usize,
    pub min_log_v: f64,
    pub pass: bool,
}

/// Checks `L*V <= -alpha V + beta_V 1_K + 1e-8 (1 + |alpha V|)` at every point,
/// in ratio form so that huge `V` cannot overflow.
pub fn drift_check(weight: &LyapunovWeight, points: &[PhasePoint]) -> DriftReport {
    let rows: Vec<Option<(f64, bool, f64, f64, f64)>> = points
        .par_iter()
        .map(|p| {
            let lv = weight.log_v(p).ok()?;
            let ratio = weight.lstar_v_over_v(p).ok()?;
            let inv_v = (-lv).exp();
            let in_k = weight.indicator_k(p);
            let src = if in_k { weight.beta_v * inv_v } else { 0.0 };
            let tol = 1e-8 * (inv_v + weight.alpha);
            Some((-weight.alpha + src + tol - ratio, in_k, ratio + weight.alpha - tol, lv, (src - weight.alpha - ratio) / weight.alpha))
        })
        .collect();
    let mut rep = DriftReport {
        min_relative_margin: f64::INFINITY,
        max_off_k_excess: f64::NEG_INFINITY,
        min_log_v: f64::INFINITY,
        min_strict_margin_over_alpha: f64::INFINITY,
        ..Default::default()
    };
    for (p, row) in points.iter().zip(rows) {
        let Some((margin, in_k, excess, lv, strict)) = row else {
            rep.skipped += 1;
            continue;
        };
        rep.checked += 1;
        rep.min_strict_margin_over_alpha = rep.min_strict_margin_over_alpha.min(strict);
        if strict < 0.0 {
            rep.strict_violations += 1;
        }
        rep.min_log_v = rep.min_log_v.min(lv);
        if margin < rep.min_relative_margin {
            rep.min_relative_margin = margin;
            rep.argmin = Some(p.clone());
        }
        if margin < 0.0 {
            rep.violations += 1;
        }
        if in_k {
            rep.inside_k += 1;
        } else {
            rep.max_off_k_excess = rep.max_off_k_excess.max(excess);
            if excess > 0.0 {
                rep.off_k_violations += 1;
            }
        }
    }
    rep.pass = rep.checked > 0 && rep.violations == 0 && rep.off_k_violations == 0;
    rep
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PsiBoundReport {
    pub checked: usize,
    /// min of `b delta^2 h^2/(2|grad U|^2) + b|v|^2/2 - |psi|`
    pub min_young_slack: f64,
    /// min of `b T d h^2/36 + b|v|^2/2 - |psi|`
    pub min_uniform_slack: f64,
    pub min_log_v_plus_one: f64,
    pub pass: bool,
}

/// Global bounds on `psi` and `V >= 1/e` at the given points.
pub fn psi_bound_check(weight: &LyapunovWeight, points: &[PhasePoint]) -> Result<PsiBoundReport> {
    let rows: Vec<(f64, f64, f64)> = points
        .par_iter()
        .map(|p| -> Result<(f64, f64, f64)> {
            let psi = weight.psi(p)?;
            let u = weight.potential(&p.x)?;
            let h = weight.h(u);
            let half_v = weight.b * p.kinetic();
            let young = if u < weight.r1 {
                half_v
            } else {
                let g = weight.gradient_checked(&p.x)?;
                weight.b * weight.delta.powi(2) * h * h / (2.0 * dot(&g, &g)) + half_v
            };
            let uniform = weight.b * weight.td() * h * h / 36.0 + half_v;
            Ok((young - psi.abs(), uniform - psi.abs(), weight.log_v(p)? + 1.0))
        })
        .collect::<Result<_>>()?;
    let mut rep = PsiBoundReport {
        checked: rows.len(),
        min_young_slack: f64::INFINITY,
        min_uniform_slack: f64::INFINITY,
        min_log_v_plus_one: f64::INFINITY,
        pass: false,
    };
    for (a, b, c) in rows {
        rep.min_young_slack = rep.min_young_slack.min(a);
        rep.min_uniform_slack = rep.min_uniform_slack.min(b);
        rep.min_log_v_plus_one = rep.min_log_v_plus_one.min(c);
    }
    let tol = -1e-12;
    rep.pass = rep.checked > 0 && rep.min_young_slack >= tol && rep.min_uniform_slack >= tol && rep.min_log_v_plus_one >= tol;
    Ok(rep)
}

/// Monte Carlo estimates of `mu(K)` and `mu(K^c)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MuEstimates {
    pub mu_k: f64,
    pub mu_kc: f64,
    pub se: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct WeightHypothesesReport {
    pub w_checked: usize,
    pub w_violations: usize,
    /// min of `W |y|^2 / ((beta rho' + 1)(R/(gamma T) + |y|^2/(2T))) - 1`
    pub w_min_relative_slack: f64,
    /// `(2 beta/alpha) mu(K^c)/mu(K)` at the point estimates
    pub v_rhs: f64,
    /// same with both estimates moved 3 standard errors toward passing
    pub v_rhs_lower: f64,
    pub v_rhs_upper: f64,
    /// min over samples of `e V`
    pub min_tilde_v: f64,
    pub v_pass: bool,
    pub pass: bool,
}

/// Checks `W|y|^2 >= (beta rho' + 1)(R(x,y)/(gamma T) + |y|^2/(2T))` at each
/// sample for `directions` random unit `y` plus `y = 0`, and
/// `(2 beta/alpha) mu(K^c)/mu(K) <= e V`, allowing 3 standard errors.
pub fn check_weight_hypotheses<R: Rng + ?Sized>(
    cert: &Certificate,
    weight: &LyapunovWeight,
    samples: &[PhasePoint],
    directions: usize,
    rng: &mut R,
    mu: &MuEstimates,
) -> Result<WeightHypothesesReport> {
    let mp = &cert.model;
    let d = weight.model.dim();
    let ys: Vec<Vec<Vec<f64>>> =
        samples.iter().map(|_| (0..directions).map(|_| random_unit(rng, d)).collect()).collect();
    let factor = cert.beta * cert.rho_k_prime + 1.0;
    let rows: Vec<(usize, usize, f64)> = samples
        .par_iter()
        .zip(&ys)
        .map(|(p, dirs)| -> Result<(usize, usize, f64)> {
            let w = weight.w(p)?;
            // y = 0 gives 0 >= 0
            let (mut n, mut bad, mut min) = (1, 0, f64::INFINITY);
            for y in dirs {
                let r = crate::gamma::r_term(&weight.model, mp, &p.x, y)?;
                let rhs = factor * (r / (mp.gamma * mp.temperature) + dot(y, y) / (2.0 * mp.temperature));
                let s = w * dot(y, y) / rhs - 1.0;
                n += 1;
                min = min.min(s);
                if s < -1e-12 {
                    bad += 1;
                }
            }
            Ok((n, bad, min))
        })
        .collect::<Result<_>>()?;
    let mut rep = WeightHypothesesReport { w_min_relative_slack: f64::INFINITY, min_tilde_v: f64::INFINITY, ..Default::default() };
    for (n, bad, min) in rows {
        rep.w_checked += n;
        rep.w_violations += bad;
        rep.w_min_relative_slack = rep.w_min_relative_slack.min(min);
    }
    for p in samples {
        rep.min_tilde_v = rep.min_tilde_v.min(E * weight.v(p)?);
    }
    let two_b_a = 2.0 * cert.beta / cert.alpha;
    let ratio = |kc: f64, k: f64| if k > 0.0 { two_b_a * kc.max(0.0) / k } else { f64::INFINITY };
    rep.v_rhs = ratio(mu.mu_kc, mu.mu_k);
    rep.v_rhs_lower = ratio(mu.mu_kc - 3.0 * mu.se, mu.mu_k + 3.0 * mu.se);
    rep.v_rhs_upper = ratio(mu.mu_kc + 3.0 * mu.se, mu.mu_k - 3.0 * mu.se);
    rep.v_pass = rep.v_rhs_lower <= rep.min_tilde_v;
    rep.pass = rep.w_violations == 0 && rep.v_pass;
    Ok(rep)
}

/// Fraction of samples in `K`, with its binomial standard error.
pub fn estimate_mu_k(weight: &LyapunovWeight, samples: &[PhasePoint]) -> Result<MuEstimates> {
    if samples.is_empty() {
        return Err(Error::Statistics("no samples for mu(K)".into()));
    }
    let n = samples.len() as f64;
    let inside = samples.iter().filter(|p| weight.indicator_k(p)).count() as f64;
    let mu_k = inside / n;
    Ok(MuEstimates { mu_k, mu_kc: 1.0 - mu_k, se: (mu_k * (1.0 - mu_k) / n).sqrt() })
}

/// Stress points for the drift check: configurations pushed toward the
/// singular set or the far field, with speeds `0, 0.1, 1, 10` times the
/// velocity radius of `K`, cycled.
pub fn stress_phase_points<R: Rng + ?Sized>(
    weight: &LyapunovWeight,
    base: &[PhasePoint],
    count: usize,
    rng: &mut R,
) -> Vec<PhasePoint> {
    let model = &weight.model;
    let xs: Vec<Vec<f64>> = base.iter().map(|p| p.x.clone()).collect();
    let configs = stress_configurations(model, &xs, count, rng);
    let vcap = weight.k_spec.velocity_cap.sqrt();
    configs
        .into_iter()
        .enumerate()
        .map(|(i, x)| {
            let speed = vcap * [0.0, 0.1, 1.0, 10.0][i % 4];
            let v = random_unit(rng, model.dim()).into_iter().map(|c| c * speed).collect();
            PhasePoint { x, v }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certificate::{build_certificate, RhoK};
    use crate::potential::GrowthConstants;

    fn single_well() -> (PotentialModel, Certificate) {
        let m = PotentialModel::single_well(1).unwrap();
        let mp = ModelParams::new(1.0, 1.0, 1, 1).unwrap();
        let c = build_certificate(&m, &GrowthConstants::single_well(), &mp, RhoK::user(1.0)).unwrap();
        (m, c)
    }

    #[test]
    fn smooth_step_shape() {
        assert_eq!(smooth_step(0.0), 0.0);
        assert_eq!(smooth_step(1.0), 1.0);
        assert!((smooth_step(0.5) - 0.5).abs() < 1e-15);
        assert!((smooth_step_prime(0.5) - 2.0).abs() < 1e-14);
        let mut max = 0.0f64;
        for i in 1..100_000 {
            let t = i as f64 / 100_000.0;
            max = max.max(smooth_step_prime(t));
            assert!((smooth_step(t) + smooth_step(1.0 - t) - 1.0).abs() < 1e-14);
        }
        assert!(max <= 2.0 * (1.0 + 1e-9));
    }

    #[test]
    fn h_endpoints_and_slope() {
        let (m, c) = single_well();
        let w = LyapunovWeight::new(&m, &c).unwrap();
        assert_eq!(w.h(c.r1), 0.0);
        assert_eq!(w.h(c.r2), 1.0);
        assert!((w.h(0.5 * (c.r1 + c.r2)) - 0.5).abs() < 1e-12);
        assert!((w.h_prime(0.5 * (c.r1 + c.r2)) - 1.0 / 16.0).abs() < 1e-14);
    }

    #[test]
    fn v_at_minimum() {
        let (m, c) = single_well();
        let w = LyapunovWeight::new(&m, &c).unwrap();
        let p = PhasePoint::zeros(1);
        assert_eq!(w.v(&p).unwrap(), 1.0);
        assert_eq!(w.w(&p).unwrap(), E + c.lambda);
        assert!(w.indicator_k(&p));
    }

    #[test]
    fn psi_vanishes_below_r1_and_at_rest() {
        let (m, c) = single_well();
        let w = LyapunovWeight::new(&m, &c).unwrap();
        let below = PhasePoint::new(vec![1.0], vec![3.0]).unwrap();
        assert_eq!(w.psi(&below).unwrap(), 0.0);
        let x = (2.0 * (c.r1 + 10.0)).sqrt();
        let rest = PhasePoint::new(vec![x], vec![0.0]).unwrap();
        assert_eq!(w.psi(&rest).unwrap(), 0.0);
        let moving = PhasePoint::new(vec![x], vec![1.0]).unwrap();
        assert!(w.psi(&moving).unwrap() < 0.0);
    }

    #[test]
    fn analytic_and_fd_drift_agree() {
        let (m, c) = single_well();
        let w = LyapunovWeight::new(&m, &c).unwrap();
        let st = StencilConfig::default();
        let xm = (2.0 * (0.5 * (c.r1 + c.r2))).sqrt();
        for (x, v) in [(0.0, 0.0), (0.7, -1.3), (xm, 2.0), (xm + 1.0, -3.0)] {
            let p = PhasePoint::new(vec![x], vec![v]).unwrap();
            let a = w.lstar_v(&p).unwrap();
            let b = w.lstar_v_fd(&p, &st).unwrap();
            assert!((a - b).abs() <= 1e-6 * (1.0 + a.abs()), "{x} {v}: {a} vs {b}");
        }
    }

    #[test]
    fn indicator_boundaries() {
        let (m, c) = single_well();
        let w = LyapunovWeight::new(&m, &c).unwrap();
        let td = 1.0;
        let over = ((20.0 * E.powi(4) + 3.0) * td).sqrt();
        assert!(!w.indicator_k(&PhasePoint::new(vec![0.0], vec![over]).unwrap()));
        let edge = PhasePoint::new(vec![(2.0 * c.r2).sqrt()], vec![0.0]).unwrap();
        assert!(m.value(&edge.x).unwrap() <= c.r2);
        assert!(indicator_k(&c, &m, &edge));
    }

    #[test]
    fn drift_far_out() {
        let (m, c) = single_well();
        let w = LyapunovWeight::new(&m, &c).unwrap();
        let v = (100.0 * (20.0 * E.powi(4) + 2.0)).sqrt();
        let p = PhasePoint::new(vec![0.0], vec![v]).unwrap();
        assert!(w.lstar_v_over_v(&p).unwrap() <= -c.alpha);
        let rep = drift_check(&w, &[p, PhasePoint::zeros(1)]);
        assert!(rep.pass, "{rep:?}");
        assert_eq!(rep.inside_k, 1);
    }
}
