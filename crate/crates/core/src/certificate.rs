//! Explicit constant chain for the convergence-rate certificate.
//!
//! Given growth data of the potential, friction `gamma`, temperature `T` and a
//! local Poincaré constant `rho_K` on the centre set
//! `K = {|v|^2 <= (20e^4 + 2) T d} ∩ {U <= R2}`, the chain produces
//! `R1, R2, alpha, beta, lambda0, lambda, zeta^2` and the rate `sigma`.
//!
//! The bounded-Hessian route ([`villani_certificate`]) is a separate, simpler
//! chain driven by a global Poincaré constant.

use std::collections::BTreeMap;
use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use crate::error::{arg, Error, Result};
use crate::potential::{Family, GrowthConstants, PotentialModel};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub gamma: f64,
    pub temperature: f64,
    pub n: usize,
    pub k: usize,
}

impl ModelParams {
    pub fn new(gamma: f64, temperature: f64, n: usize, k: usize) -> Result<Self> {
        let mp = Self { gamma, temperature, n, k };
        mp.validate()?;
        Ok(mp)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return arg("gamma must be strictly positive");
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return arg("T must be strictly positive");
        }
        if self.n == 0 || self.k == 0 {
            return arg("N and k must be at least 1");
        }
        Ok(())
    }

    pub fn d(&self) -> usize {
        self.n * self.k
    }

    fn td(&self) -> f64 {
        self.temperature * self.d() as f64
    }
}

/// `c(gamma) = gamma/2 + sqrt(gamma^2/4 + 1)`, the positive root of `c^2 - gamma c - 1`.
pub fn friction_constant(gamma: f64) -> Result<f64> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return arg(format!("gamma must be positive, got {gamma}"));
    }
    Ok(0.5 * gamma + (0.25 * gamma * gamma + 1.0).sqrt())
}

/// Closed-form growth constants of the singular pair family, with
/// `eta0 = b`, `eta_inf = a`.
#[allow(clippy::too_many_arguments)]
pub fn growth_constants_singular(
    n: usize,
    k: usize,
    a_coef: f64,
    b_coef: f64,
    a: u32,
    b: f64,
    temperature: f64,
) -> Result<GrowthConstants> {
    if n == 0 || k == 0 {
        return arg("N and k must be at least 1");
    }
    if !(a_coef > 0.0 && b_coef > 0.0 && b > 0.0 && temperature > 0.0) {
        return arg("A, B, b and T must be strictly positive");
    }
    if a < 2 || a % 2 != 0 {
        return arg(format!("a = {a} must be an even integer >= 2"));
    }
    let (nf, kf, t) = (n as f64, k as f64, temperature);
    let (aa, bb) = (a_coef, b_coef);
    let af = a as f64;

    let kappa2 = nf.powf(5.0 - 8.0 / af)
        * aa
        * af
        * (af - 1.0)
        * kf
        * (128.0 * (af - 1.0) * kf * kf * t / (aa * af)).powf((af - 2.0) / af)
        + nf.powf(10.0 + 16.0 / b)
            * 4.0
            * bb
            * b
            * (b + 3.0)
            * kf
            * (512.0 * (b + 3.0) * kf * kf * t / (bb * b)).powf((b + 2.0) / b)
        + aa * aa * af * af / (8.0 * nf * nf * kf * t)
        + bb * bb * b * b * nf.powf(2.0 * b + 4.0) / (8.0 * kf * t);

    let c0 = nf.powi(3) * 4.0 * b * b / bb.powf(2.0 / b);

    let d0 = nf.powf(1.0 - 2.0 * (af - 1.0) * b / (af + b))
        * 2.0
        * aa
        * aa
        * af
        * af
        * ((aa.powf(2.0 / b) * b * b) / (bb.powf(2.0 / b) * af * af)).powf((af - 1.0) * b / (af + b));

    let c_inf = aa.powf(2.0 / af) * af * af / (2f64.powf(5.0 - 2.0 / af) * nf.powf(5.0 - 2.0 / af));

    let d_inf = nf.powf(b * (6.0 * af - 2.0) * (af - 1.0) / (af * (af + b)) + 2.0 / af - 1.0)
        * aa.powf(2.0 / af)
        * af
        * af
        * bb
        * bb
        / (8.0 * bb.powf(2.0 / af))
        * ((aa.powf(2.0 / af) * af * af) / (bb.powf(2.0 / af) * b * b)).powf(b * (af - 1.0) / (af + b))
        + 2.0 * aa * aa * af * af / nf
        + 2.0 * bb * bb * b * b * nf.powf(2.0 * b + 5.0);

    Ok(GrowthConstants { kappa2, c0, d0, c_inf, d_inf, eta0: b, eta_inf: af })
}

/// Default growth constants for a model: presets for the two wells, the closed
/// form for the singular family.
pub fn default_growth_constants(model: &PotentialModel, mp: &ModelParams) -> Result<GrowthConstants> {
    Ok(match model.family() {
        Family::SingleWell => GrowthConstants::single_well(),
        Family::DoubleWell => GrowthConstants::double_well(mp.temperature, mp.d()),
        Family::SingularPair(p) => {
            growth_constants_singular(p.n, p.k, p.a_coef, p.b_coef, p.a, p.b, mp.temperature)?
        }
    })
}

pub fn compute_r1_r2(gc: &GrowthConstants, mp: &ModelParams) -> Result<(f64, f64)> {
    if gc.eta_inf <= 1.0 {
        return arg("eta_inf must exceed 1 (R1 exponent undefined)");
    }
    let td = mp.td();
    let e4 = E.powi(4);
    let inner = ((40.0 * e4 + 4.0) * td * (gc.kappa2 + 1.0)).max(92.0 * mp.gamma * mp.gamma * td);
    let r1 = (gc.d_inf / gc.c_inf + inner / gc.c_inf).powf(1.0 / (2.0 - 2.0 / gc.eta_inf));
    Ok((r1, r1 + 32.0 * td))
}

/// `D(r) = (2 (c0 k')^2 r^(4+4/eta0) + 2 (d0 k')^2 + kappa''^2 + 2) / (gamma^2 T) + 1/(2T)`
/// with `k' = 1/(16 T d)`.
pub fn d_of_r(r: f64, gc: &GrowthConstants, mp: &ModelParams) -> f64 {
    let kp = 1.0 / (16.0 * mp.td());
    let p = 4.0 + 4.0 / gc.eta0;
    let num = 2.0 * (gc.c0 * kp).powi(2) * r.powf(p) + 2.0 * (gc.d0 * kp).powi(2) + gc.kappa2 * gc.kappa2 + 2.0;
    num / (mp.gamma * mp.gamma * mp.temperature) + 0.5 / mp.temperature
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaBeta {
    pub alpha: f64,
    pub beta: f64,
    pub beta_exact: f64,
}

pub fn compute_alpha_beta(mp: &ModelParams, r2: f64) -> Result<AlphaBeta> {
    if !(r2 > 0.0) {
        return arg("R2 must be positive");
    }
    let gtd = mp.gamma * mp.td();
    let alpha = gtd / (4.0 * r2);
    let pref = 5.0 * gtd / (4.0 * r2);
    Ok(AlphaBeta {
        alpha,
        beta: pref * E.powi(4),
        beta_exact: pref * (2.0 + 5.0 * mp.td() / r2).exp(),
    })
}

/// Smallest `lambda0` with `lambda0 >= R2 ln D(lambda0) + R2 ln(beta rho' + 1)`,
/// such that the inequality also holds for every larger value.
pub fn solve_lambda0(
    gc: &GrowthConstants,
    mp: &ModelParams,
    beta: f64,
    rho_k_prime: f64,
    r2: f64,
) -> Result<f64> {
    solve_lambda0_with(|r| d_of_r(r, gc, mp), 4.0 + 4.0 / gc.eta0, beta, rho_k_prime, r2)
}

/// Root search behind [`solve_lambda0`] for an arbitrary nondecreasing `D`.
/// `growth_power` bounds the log-derivative of `D` as `r D'(r) <= p D(r)`.
pub fn solve_lambda0_with<F: Fn(f64) -> f64>(
    d: F,
    growth_power: f64,
    beta: f64,
    rho_k_prime: f64,
    r2: f64,
) -> Result<f64> {
    if !(beta > 0.0 && rho_k_prime > 0.0 && r2 > 0.0) {
        return arg("beta, rho_K' and R2 must be positive");
    }
    let shift = r2 * (beta * rho_k_prime).ln_1p();
    let g = |a: f64| a - r2 * d(a).ln() - shift;
    let mut lo = shift;
    loop {
        if g(lo) >= 0.0 {
            return Ok(lo);
        }
        let mut hi = lo.max(r2);
        while g(hi) < 0.0 {
            hi *= 2.0;
            if !(hi < 1e300) {
                return Err(Error::Overflow("no lambda0 below 1e300".into()));
            }
        }
        let mut a = lo;
        for _ in 0..2000 {
            if hi - a <= 1e-13 * hi {
                break;
            }
            let mid = 0.5 * (a + hi);
            if g(mid) >= 0.0 {
                hi = mid;
            } else {
                a = mid;
            }
        }
        // beyond p*R2 the map a -> g(a) is increasing; scan the rest for dips
        let top = 2.0 * hi.max(growth_power * r2);
        let steps = 400;
        let ratio = (top / hi).powf(1.0 / steps as f64);
        let mut bad = None;
        let mut s = hi;
        for _ in 0..steps {
            s *= ratio;
            if g(s) < 0.0 {
                bad = Some(s);
            }
        }
        match bad {
            None => return Ok(hi),
            Some(b) => lo = b,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RhoSource {
    UserSupplied,
    SpectralEstimated,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RhoK {
    pub value: f64,
    pub source: RhoSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<serde_json::Value>,
}

impl RhoK {
    pub fn user(value: f64) -> Self {
        Self { value, source: RhoSource::UserSupplied, diagnostics: None }
    }
}

/// The centre set `K = {|v|^2 <= velocity_cap} ∩ {U <= energy_cap}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KSpec {
    pub velocity_cap: f64,
    pub energy_cap: f64,
}

impl KSpec {
    pub fn new(mp: &ModelParams, r2: f64) -> Self {
        Self { velocity_cap: (20.0 * E.powi(4) + 2.0) * mp.td(), energy_cap: r2 }
    }

    pub fn contains(&self, model: &PotentialModel, x: &[f64], v: &[f64]) -> bool {
        let v2: f64 = v.iter().map(|c| c * c).sum();
        v2 <= self.velocity_cap && model.value_unchecked(x) <= self.energy_cap
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub model: ModelParams,
    pub growth: GrowthConstants,
    pub c_gamma: f64,
    pub kappa_prime: f64,
    #[serde(rename = "R1")]
    pub r1: f64,
    #[serde(rename = "R2")]
    pub r2: f64,
    pub alpha: f64,
    pub beta: f64,
    pub beta_exact: f64,
    #[serde(rename = "rho_K")]
    pub rho_k: RhoK,
    #[serde(rename = "rho_K_prime")]
    pub rho_k_prime: f64,
    pub lambda0: f64,
    pub lambda: f64,
    pub zeta_sq: f64,
    pub sigma: f64,
    #[serde(rename = "K_spec")]
    pub k_spec: KSpec,
}

impl Certificate {
    /// Lyapunov exponent scale `b = 1/R2`.
    pub fn b(&self) -> f64 {
        1.0 / self.r2
    }

    pub fn delta(&self) -> f64 {
        1.5 * self.model.gamma * self.model.td()
    }

    pub fn contains(&self, model: &PotentialModel, x: &[f64], v: &[f64]) -> bool {
        self.k_spec.contains(model, x, v)
    }

    /// Checks the defining relations of the chain; returns the names of any that fail.
    pub fn invariant_failures(&self) -> Vec<&'static str> {
        let mut bad = Vec::new();
        let td = self.model.td();
        let brp = self.beta * self.rho_k_prime;
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs());
        if !close(self.r2, self.r1 + 32.0 * td) {
            bad.push("R2 = R1 + 32Td");
        }
        if !close(self.zeta_sq, 2.0 / (1.0 + brp)) {
            bad.push("zeta^2 = 2/(1+beta rho')");
        }
        let sig = (self.alpha / (2.0 * (1.0 + self.lambda))).min(self.model.gamma / (1.0 + brp));
        if !close(self.sigma, sig) {
            bad.push("sigma formula");
        }
        let dl = d_of_r(self.lambda0, &self.growth, &self.model);
        if self.lambda < (brp + 1.0) * dl * (1.0 - 1e-15) {
            bad.push("lambda >= (beta rho' + 1) D(lambda0)");
        }
        let rhs = self.r2 * dl.ln() + self.r2 * brp.ln_1p();
        if self.lambda0 < rhs - 1e-14 * rhs.abs() {
            bad.push("lambda0 inequality");
        }
        if !(self.sigma > 0.0) {
            bad.push("sigma > 0");
        }
        if !(self.zeta_sq > 0.0 && self.zeta_sq <= 2.0) {
            bad.push("zeta^2 in (0, 2]");
        }
        if self.r2 < 32.0 * td {
            bad.push("R2 >= 32Td");
        }
        bad
    }

    /// Formula behind each emitted field.
    pub fn provenance() -> BTreeMap<&'static str, &'static str> {
        BTreeMap::from([
            ("c_gamma", "gamma/2 + sqrt(gamma^2/4 + 1)"),
            ("kappa_prime", "1/(16 T d)"),
            ("R1", "(d_inf/c_inf + max((40e^4+4) T d (kappa''+1), 92 gamma^2 T d)/c_inf)^(1/(2-2/eta_inf))"),
            ("R2", "R1 + 32 T d"),
            ("alpha", "gamma T d/(4 R2)"),
            ("beta", "(5 gamma T d/(4 R2)) e^4"),
            ("beta_exact", "(5 gamma T d/(4 R2)) e^(2 + 5 T d/R2)"),
            ("rho_K_prime", "(4 c^2 + 4) rho_K/gamma"),
            ("lambda0", "least a with a >= R2 ln D(a) + R2 ln(beta rho_K' + 1) for all larger a"),
            ("D", "(2(c0 k')^2 r^(4+4/eta0) + 2(d0 k')^2 + kappa''^2 + 2)/(gamma^2 T) + 1/(2T)"),
            ("lambda", "(beta rho_K' + 1) D(lambda0)"),
            ("zeta_sq", "2/(1 + beta rho_K')"),
            ("sigma", "min(alpha/(2(1+lambda)), gamma/(1 + beta rho_K'))"),
            ("K_spec", "|v|^2 <= (20e^4+2) T d and U <= R2"),
        ])
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("certificate serializes");
        let prov: BTreeMap<_, _> = Self::provenance().into_iter().collect();
        v["provenance"] = serde_json::to_value(prov).unwrap();
        v["route"] = "general".into();
        v["rho_K_source"] = serde_json::to_value(self.rho_k.source).unwrap();
        v
    }
}

pub fn build_certificate(
    model: &PotentialModel,
    gc: &GrowthConstants,
    mp: &ModelParams,
    rho_k: RhoK,
) -> Result<Certificate> {
    mp.validate()?;
    gc.validate()?;
    if model.dim() != mp.d() {
        return arg(format!("model dimension {} differs from N k = {}", model.dim(), mp.d()));
    }
    if !(rho_k.value > 0.0 && rho_k.value.is_finite()) {
        return arg("rho_K must be positive and finite");
    }
    let c = friction_constant(mp.gamma)?;
    let (r1, r2) = compute_r1_r2(gc, mp)?;
    let ab = compute_alpha_beta(mp, r2)?;
    let rho_p = (4.0 * c * c + 4.0) * rho_k.value / mp.gamma;
    let lambda0 = solve_lambda0(gc, mp, ab.beta, rho_p, r2)?;
    let brp = ab.beta * rho_p;
    let lambda = (brp + 1.0) * d_of_r(lambda0, gc, mp);
    let zeta_sq = 2.0 / (1.0 + brp);
    let sigma = (ab.alpha / (2.0 * (1.0 + lambda))).min(mp.gamma / (1.0 + brp));
    if !(sigma > 0.0) || !lambda.is_finite() {
        return Err(Error::Overflow(format!("certificate degenerated: sigma = {sigma}, lambda = {lambda}")));
    }
    Ok(Certificate {
        model: *mp,
        growth: *gc,
        c_gamma: c,
        kappa_prime: 1.0 / (16.0 * mp.td()),
        r1,
        r2,
        alpha: ab.alpha,
        beta: ab.beta,
        beta_exact: ab.beta_exact,
        rho_k,
        rho_k_prime: rho_p,
        lambda0,
        lambda,
        zeta_sq,
        sigma,
        k_spec: KSpec::new(mp, r2),
    })
}

// ---------------------------------------------------------------------------
// Bounded-Hessian route
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum VillaniInput {
    /// Hessian bound `M` with `|Hess U| <= M`.
    M(f64),
    /// Constants `(kappa0, kappa0')` from which `M^2` is derived.
    Kappas { kappa0: f64, kappa0_prime: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VillaniCertificate {
    pub model: ModelParams,
    pub c_gamma: f64,
    #[serde(rename = "M_sq")]
    pub m_sq: f64,
    pub zeta_sq: f64,
    pub sigma: f64,
    pub rho: f64,
}

impl VillaniCertificate {
    pub fn to_json(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("certificate serializes");
        v["route"] = "villani".into();
        v["provenance"] = serde_json::json!({
            "c_gamma": "gamma/2 + sqrt(gamma^2/4 + 1)",
            "M_sq": "M^2, or 2 gamma^2 T kappa0 d/(4c^2) + sqrt(2d) kappa0' gamma^2/(4c^2) + kappa0'^2",
            "zeta_sq": "(2 + M^2)/(gamma^2 T) + c^2/(2T) + 1/(4T)",
            "sigma": "(gamma/4) min(1, 1/(rho zeta^2))",
        });
        v
    }
}

/// Largest admissible `kappa0`: `gamma / (2 sqrt(T + T c^2))`.
pub fn kappa0_threshold(mp: &ModelParams) -> Result<f64> {
    let c = friction_constant(mp.gamma)?;
    Ok(mp.gamma / (2.0 * (mp.temperature + mp.temperature * c * c).sqrt()))
}

pub fn villani_m_sq(mp: &ModelParams, kappa0: f64, kappa0_prime: f64) -> Result<f64> {
    let c = friction_constant(mp.gamma)?;
    let g2 = mp.gamma * mp.gamma;
    let d = mp.d() as f64;
    Ok(2.0 * g2 * mp.temperature * kappa0 * d / (4.0 * c * c)
        + (2.0 * d).sqrt() * kappa0_prime * g2 / (4.0 * c * c)
        + kappa0_prime * kappa0_prime)
}

/// The double-well constants: `kappa0` at its threshold and `kappa0' = 27/kappa0^2 + 2`.
pub fn double_well_kappas(mp: &ModelParams) -> Result<(f64, f64)> {
    let k0 = kappa0_threshold(mp)?;
    Ok((k0, 27.0 / (k0 * k0) + 2.0))
}

pub fn villani_certificate(mp: &ModelParams, input: VillaniInput, rho: f64) -> Result<VillaniCertificate> {
    mp.validate()?;
    if !(rho > 0.0) {
        return arg("rho must be positive");
    }
    let c = friction_constant(mp.gamma)?;
    let m_sq = match input {
        VillaniInput::M(m) => {
            if !(m >= 0.0 && m.is_finite()) {
                return arg("M must be finite and nonnegative");
            }
            m * m
        }
        VillaniInput::Kappas { kappa0, kappa0_prime } => {
            let thr = kappa0_threshold(mp)?;
            if !(kappa0 > 0.0 && kappa0_prime > 0.0) {
                return arg("kappa0 and kappa0' must be positive");
            }
            if kappa0 > thr * (1.0 + 1e-15) {
                return arg(format!(
                    "kappa0 = {kappa0} exceeds the admissible bound gamma/(2 sqrt(T + T c^2)) = {thr}"
                ));
            }
            villani_m_sq(mp, kappa0, kappa0_prime)?
        }
    };
    let t = mp.temperature;
    let zeta_sq = (2.0 + m_sq) / (mp.gamma * mp.gamma * t) + c * c / (2.0 * t) + 1.0 / (4.0 * t);
    let sigma = 0.25 * mp.gamma * (1.0f64).min(1.0 / (rho * zeta_sq));
    Ok(VillaniCertificate { model: *mp, c_gamma: c, m_sq, zeta_sq, sigma, rho })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mp1() -> ModelParams {
        ModelParams::new(1.0, 1.0, 1, 1).unwrap()
    }

    #[test]
    fn friction_examples() {
        assert_eq!(friction_constant(1.5).unwrap(), 2.0);
        assert!((friction_constant(2.0).unwrap() - (1.0 + 2f64.sqrt())).abs() < 1e-15);
        let big = friction_constant(1e6).unwrap() / 1e6;
        assert!((big - 1.0).abs() < 1e-6);
        assert!(friction_constant(0.0).is_err());
        assert!(friction_constant(-1.0).is_err());
    }

    #[test]
    fn structural_singular_cases() {
        let gc = growth_constants_singular(2, 3, 1.0, 1.0, 2, 6.0, 1.0).unwrap();
        assert_eq!(gc.c0, 1152.0);
        assert_eq!(gc.eta0, 6.0);
        assert_eq!(gc.eta_inf, 2.0);
        // the a = 2 first summand of kappa'' is N A a (a-1) k = 12
        let first = 2f64.powf(5.0 - 4.0) * 2.0 * 3.0 * (128.0 * 9.0 / 2.0f64).powf(0.0);
        assert_eq!(first, 12.0);
        assert!(growth_constants_singular(2, 3, 1.0, 1.0, 3, 6.0, 1.0).is_err());
    }

    #[test]
    fn r1_r2_example() {
        let gc = GrowthConstants { kappa2: 1.0, c0: 1.0, d0: 1.0, c_inf: 1.0, d_inf: 0.0, eta0: 1.0, eta_inf: 2.0 };
        let (r1, r2) = compute_r1_r2(&gc, &mp1()).unwrap();
        let e4 = 54.598_150_033_144_236;
        assert!((r1 - 2.0 * (40.0 * e4 + 4.0)).abs() < 1e-10);
        assert_eq!(r2 - r1, 32.0);
        let bad = GrowthConstants { eta_inf: 1.0, ..gc };
        assert!(compute_r1_r2(&bad, &mp1()).is_err());
    }

    #[test]
    fn d_of_r_examples() {
        let gc = GrowthConstants { kappa2: 0.0, c0: 1.0, d0: 0.0, c_inf: 1.0, d_inf: 1.0, eta0: 1.0, eta_inf: 2.0 };
        assert!((d_of_r(0.0, &gc, &mp1()) - 2.5).abs() < 1e-15);
        assert!((d_of_r(2.0, &gc, &mp1()) - 4.5).abs() < 1e-15);
    }

    #[test]
    fn alpha_beta_examples() {
        let ab = compute_alpha_beta(&mp1(), 40.0).unwrap();
        assert!((ab.alpha - 0.00625).abs() < 1e-18);
        assert!((ab.beta / ab.alpha - 5.0 * E.powi(4)).abs() < 1e-12);
        assert!(ab.beta_exact <= ab.beta);
    }

    #[test]
    fn lambda0_constant_d() {
        let dbar = 7.5;
        let (beta, rp, r2) = (0.3, 2.0, 50.0);
        let l0 = solve_lambda0_with(|_| dbar, 0.0, beta, rp, r2).unwrap();
        let expect = r2 * dbar.ln() + r2 * (beta * rp + 1.0f64).ln();
        assert!((l0 - expect).abs() <= 1e-10 * expect);
    }

    #[test]
    fn lambda0_postcondition() {
        let gc = GrowthConstants { kappa2: 2.0, c0: 1.0, d0: 1.0, c_inf: 1.0, d_inf: 1.0, eta0: 1.0, eta_inf: 2.0 };
        let mp = mp1();
        let (beta, rp, r2) = (0.1, 3.0, 40.0);
        let l0 = solve_lambda0(&gc, &mp, beta, rp, r2).unwrap();
        let g = |a: f64| a - r2 * d_of_r(a, &gc, &mp).ln() - r2 * (beta * rp + 1.0f64).ln();
        assert!(g(l0) >= 0.0);
        assert!(g(l0 - 1e-6) < 0.0);
    }

    #[test]
    fn certificate_invariants_single_well() {
        let model = PotentialModel::single_well(1).unwrap();
        let gc = GrowthConstants::single_well();
        let cert = build_certificate(&model, &gc, &mp1(), RhoK::user(1.0)).unwrap();
        assert!(cert.invariant_failures().is_empty(), "{:?}", cert.invariant_failures());
        assert!(cert.sigma > 0.0 && cert.sigma <= 1.0);
        let b = cert.b();
        assert!(b > 0.0 && b <= 1.0 / (2.0 * 1.0));
        let js = cert.to_json();
        assert_eq!(js["rho_K_source"], "user_supplied");
        assert!(js["provenance"]["sigma"].is_string());
    }

    #[test]
    fn certificate_rejects_dimension_mismatch() {
        let model = PotentialModel::single_well(2).unwrap();
        assert!(build_certificate(&model, &GrowthConstants::single_well(), &mp1(), RhoK::user(1.0)).is_err());
    }

    #[test]
    fn villani_single_well() {
        let mp = ModelParams::new(2.0, 1.0, 1, 1).unwrap();
        let v = villani_certificate(&mp, VillaniInput::M(1.0), 1.0).unwrap();
        // 60-digit reference values from tests/oracles/certificate_oracle.py
        assert!((v.zeta_sq - 3.914_213_562_373_095_0).abs() <= 1e-12 * 3.9142);
        assert!((v.sigma - 0.127_739_580_897_282_94).abs() <= 1e-12 * 0.1277);
        let far = villani_certificate(&mp, VillaniInput::M(1.0), 1e12).unwrap();
        assert!(far.sigma < 1e-12);
    }

    #[test]
    fn villani_double_well_constants() {
        let mp = ModelParams::new(2.0, 1.0, 1, 1).unwrap();
        let (k0, k0p) = double_well_kappas(&mp).unwrap();
        assert!((k0 - 0.382_683_432_365_089_77).abs() < 1e-15);
        assert!((k0p - 186.367_532_368_147_13).abs() < 1e-11);
        let m2 = villani_m_sq(&mp, k0, k0p).unwrap();
        assert!((m2 - 34_778.208_783_296_508).abs() <= 1e-12 * m2);
        let over = VillaniInput::Kappas { kappa0: k0 * 1.01, kappa0_prime: k0p };
        let err = villani_certificate(&mp, over, 1.0).unwrap_err();
        assert!(err.to_string().contains("admissible bound"));
    }
}
