//! Potential families and growth-bound checkers.
//!
//! Three families are supported: the quadratic single well, the quartic
//! double well and a singular pair interaction
//!
//! ```text
//! U(x) = sum_i A |x_i|^a + sum_{i<j} B |x_i - x_j|^(-b)
//! ```
//!
//! for `N` particles in `R^k`. Outside the domain (coincident particles, or a
//! broken ordering on the line) the value is `+inf`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{arg, Error, Result};

/// Pair separations below this are treated as coincident.
pub const COINCIDENCE_GUARD: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub x: Vec<f64>,
    pub v: Vec<f64>,
}

impl PhasePoint {
    pub fn new(x: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if x.len() != v.len() {
            return arg(format!("position has length {} but velocity has {}", x.len(), v.len()));
        }
        Ok(Self { x, v })
    }

    pub fn zeros(d: usize) -> Self {
        Self { x: vec![0.0; d], v: vec![0.0; d] }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn kinetic(&self) -> f64 {
        0.5 * dot(&self.v, &self.v)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingularParams {
    pub n: usize,
    pub k: usize,
    pub a_coef: f64,
    pub b_coef: f64,
    pub a: u32,
    pub b: f64,
    pub ordered: bool,
}

impl SingularParams {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.k == 0 {
            return arg("N and k must be at least 1");
        }
        if !(self.a_coef > 0.0 && self.b_coef > 0.0 && self.b > 0.0) {
            return arg("A, B and b must be strictly positive");
        }
        if self.a < 2 || self.a % 2 != 0 {
            return arg(format!("a = {} must be an even integer >= 2", self.a));
        }
        if self.k == 1 && !self.ordered {
            return arg("k = 1 requires the ordering constraint x_1 < ... < x_N");
        }
        if self.k > 1 && self.ordered {
            return arg("the ordering constraint is only defined for k = 1");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Family {
    SingleWell,
    DoubleWell,
    SingularPair(SingularParams),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialModel {
    family: Family,
    dim: usize,
}

impl PotentialModel {
    pub fn single_well(d: usize) -> Result<Self> {
        if d == 0 {
            return arg("dimension must be positive");
        }
        Ok(Self { family: Family::SingleWell, dim: d })
    }

    pub fn double_well(d: usize) -> Result<Self> {
        if d == 0 {
            return arg("dimension must be positive");
        }
        Ok(Self { family: Family::DoubleWell, dim: d })
    }

    pub fn singular_pair(p: SingularParams) -> Result<Self> {
        p.validate()?;
        Ok(Self { family: Family::SingularPair(p), dim: p.n * p.k })
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn singular_params(&self) -> Option<&SingularParams> {
        match &self.family {
            Family::SingularPair(p) => Some(p),
            _ => None,
        }
    }

    fn check_len(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return arg(format!("expected vector of length {}, got {}", self.dim, x.len()));
        }
        Ok(())
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        self.check_len(x)?;
        Ok(self.value_unchecked(x))
    }

    /// Same as [`value`](Self::value) without the length check.
    pub fn value_unchecked(&self, x: &[f64]) -> f64 {
        match &self.family {
            Family::SingleWell => 0.5 * dot(x, x),
            Family::DoubleWell => {
                let s = dot(x, x) - 1.0;
                0.25 * s * s
            }
            Family::SingularPair(p) => singular_value(p, x),
        }
    }

    pub fn in_domain(&self, x: &[f64]) -> bool {
        x.len() == self.dim && self.value_unchecked(x).is_finite()
    }

    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_len(x)?;
        self.try_gradient(x)
            .ok_or_else(|| Error::Domain("gradient requested outside the domain".into()))
    }

    /// Gradient, or `None` outside the domain.
    pub fn try_gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        let mut g = vec![0.0; x.len()];
        self.try_gradient_into(x, &mut g).then_some(g)
    }

    /// Writes the gradient into `g`; returns `false` outside the domain.
    pub fn try_gradient_into(&self, x: &[f64], g: &mut [f64]) -> bool {
        match &self.family {
            Family::SingleWell => {
                g.copy_from_slice(x);
                true
            }
            Family::DoubleWell => {
                let s = dot(x, x) - 1.0;
                for (gi, xi) in g.iter_mut().zip(x) {
                    *gi = s * xi;
                }
                true
            }
            Family::SingularPair(p) => singular_gradient(p, x, g),
        }
    }

    /// `H = |v|^2/2 + U(x)`.
    pub fn hamiltonian(&self, p: &PhasePoint) -> f64 {
        p.kinetic() + self.value_unchecked(&p.x)
    }

    pub fn hessian_vec(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        self.check_len(x)?;
        self.check_len(y)?;
        self.try_hessian_vec(x, y)
            .ok_or_else(|| Error::Domain("Hessian requested outside the domain".into()))
    }

    pub fn try_hessian_vec(&self, x: &[f64], y: &[f64]) -> Option<Vec<f64>> {
        match &self.family {
            Family::SingleWell => Some(y.to_vec()),
            Family::DoubleWell => {
                // (|x|^2 - 1) y + 2 x (x.y)
                let s = dot(x, x) - 1.0;
                let xy = dot(x, y);
                Some(x.iter().zip(y).map(|(xi, yi)| s * yi + 2.0 * xi * xy).collect())
            }
            Family::SingularPair(p) => singular_hessian_vec(p, x, y),
        }
    }

    /// Dense Hessian assembled column by column from Hessian-vector products.
    pub fn hessian_dense(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        let d = self.dim;
        let mut cols = Vec::with_capacity(d);
        let mut e = vec![0.0; d];
        for j in 0..d {
            e[j] = 1.0;
            cols.push(self.hessian_vec(x, &e)?);
            e[j] = 0.0;
        }
        Ok((0..d).map(|i| (0..d).map(|j| cols[j][i]).collect()).collect())
    }

    /// A deterministic in-domain starting configuration: particles on a line
    /// along the first axis with the given spacing.
    pub fn line_configuration(&self, spacing: f64) -> Vec<f64> {
        match &self.family {
            Family::SingleWell => vec![0.0; self.dim],
            Family::DoubleWell => {
                let mut x = vec![0.0; self.dim];
                x[0] = 1.0;
                x
            }
            Family::SingularPair(p) => {
                let mut x = vec![0.0; self.dim];
                let mid = (p.n as f64 - 1.0) / 2.0;
                for i in 0..p.n {
                    x[i * p.k] = (i as f64 - mid) * spacing;
                }
                x
            }
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn ordered_ok(p: &SingularParams, x: &[f64]) -> bool {
    !p.ordered || x.windows(2).all(|w| w[0] < w[1])
}

fn pair_r2(x: &[f64], k: usize, i: usize, j: usize) -> f64 {
    let (xi, xj) = (&x[i * k..(i + 1) * k], &x[j * k..(j + 1) * k]);
    xi.iter().zip(xj).map(|(a, b)| (a - b) * (a - b)).sum()
}

const GUARD_SQ: f64 = COINCIDENCE_GUARD * COINCIDENCE_GUARD;

fn singular_value(p: &SingularParams, x: &[f64]) -> f64 {
    if !ordered_ok(p, x) {
        return f64::INFINITY;
    }
    let k = p.k;
    let half_a = (p.a / 2) as i32;
    let mut u = 0.0;
    for i in 0..p.n {
        let q = &x[i * k..(i + 1) * k];
        u += p.a_coef * dot(q, q).powi(half_a);
    }
    for i in 0..p.n {
        for j in i + 1..p.n {
            let r2 = pair_r2(x, k, i, j);
            if r2 < GUARD_SQ {
                return f64::INFINITY;
            }
            u += p.b_coef * r2.powf(-0.5 * p.b);
        }
    }
    u
}

fn singular_gradient(p: &SingularParams, x: &[f64], g: &mut [f64]) -> bool {
    if !ordered_ok(p, x) {
        return false;
    }
    let k = p.k;
    let aa = p.a_coef * p.a as f64;
    let bb = p.b_coef * p.b;
    let ext_pow = ((p.a - 2) / 2) as i32;
    for i in 0..p.n {
        let q = &x[i * k..(i + 1) * k];
        let s = aa * dot(q, q).powi(ext_pow);
        for l in 0..k {
            g[i * k + l] = s * q[l];
        }
    }
    for i in 0..p.n {
        for j in i + 1..p.n {
            let r2 = pair_r2(x, k, i, j);
            if r2 < GUARD_SQ {
                return false;
            }
            let s = bb * r2.powf(-0.5 * (p.b + 2.0));
            for l in 0..k {
                let r = x[i * k + l] - x[j * k + l];
                g[i * k + l] -= s * r;
                g[j * k + l] += s * r;
            }
        }
    }
    true
}

fn singular_hessian_vec(p: &SingularParams, x: &[f64], y: &[f64]) -> Option<Vec<f64>> {
    if !ordered_ok(p, x) {
        return None;
    }
    let k = p.k;
    let aa = p.a_coef * p.a as f64;
    let bb = p.b_coef * p.b;
    let mut out = vec![0.0; x.len()];
    for i in 0..p.n {
        let q = &x[i * k..(i + 1) * k];
        let yi = &y[i * k..(i + 1) * k];
        let q2 = dot(q, q);
        let s1 = aa * q2.powi(((p.a - 2) / 2) as i32);
        let s2 = if p.a > 2 {
            aa * (p.a - 2) as f64 * q2.powi(((p.a - 4) / 2) as i32) * dot(q, yi)
        } else {
            0.0
        };
        for l in 0..k {
            out[i * k + l] += s1 * yi[l] + s2 * q[l];
        }
    }
    let mut r = vec![0.0; k];
    let mut dy = vec![0.0; k];
    for i in 0..p.n {
        for j in i + 1..p.n {
            let r2 = pair_r2(x, k, i, j);
            if r2 < GUARD_SQ {
                return None;
            }
            for l in 0..k {
                r[l] = x[i * k + l] - x[j * k + l];
                dy[l] = y[i * k + l] - y[j * k + l];
            }
            // M = -Bb [ I r^-(b+2) - (b+2) r r^T r^-(b+4) ]
            let c1 = -bb * r2.powf(-0.5 * (p.b + 2.0));
            let c2 = bb * (p.b + 2.0) * r2.powf(-0.5 * (p.b + 4.0)) * dot(&r, &dy);
            for l in 0..k {
                let m = c1 * dy[l] + c2 * r[l];
                out[i * k + l] += m;
                out[j * k + l] -= m;
            }
        }
    }
    Some(out)
}

// ---------------------------------------------------------------------------
// Growth constants and checkers
// ---------------------------------------------------------------------------

/// Growth data `(kappa'', c0, d0, c_inf, d_inf, eta0, eta_inf)` of a potential:
///
/// ```text
/// |Hess U y| <= |grad U|^2 |y| / (16 T d) + kappa'' |y|
/// c_inf U^(2 - 2/eta_inf) - d_inf <= |grad U|^2 <= c0 U^(2 + 2/eta0) + d0
/// ```
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthConstants {
    pub kappa2: f64,
    pub c0: f64,
    pub d0: f64,
    pub c_inf: f64,
    pub d_inf: f64,
    pub eta0: f64,
    pub eta_inf: f64,
}

impl GrowthConstants {
    pub fn validate(&self) -> Result<()> {
        let all = [self.kappa2, self.c0, self.d0, self.c_inf, self.d_inf, self.eta0, self.eta_inf];
        if all.iter().any(|v| !v.is_finite()) {
            return arg("growth constants must be finite");
        }
        if self.kappa2 < 0.0 {
            return arg("kappa'' must be nonnegative");
        }
        if !(self.c0 > 0.0 && self.d0 > 0.0 && self.c_inf > 0.0 && self.d_inf > 0.0) {
            return arg("c0, d0, c_inf, d_inf must be strictly positive");
        }
        if !(self.eta0 > 0.0 || self.eta0 < -1.0) {
            return arg("eta0 must lie in (-inf, -1) or (0, inf)");
        }
        if self.eta_inf <= 1.0 {
            return arg("eta_inf must exceed 1");
        }
        Ok(())
    }

    /// Constants for `U = |x|^2 / 2`.
    pub fn single_well() -> Self {
        Self { kappa2: 1.0, c0: 2.0, d0: 1.0, eta0: 1.0, c_inf: 2.0, d_inf: 1.0, eta_inf: 2.0 }
    }

    /// Constants for `U = (|x|^2 - 1)^2 / 4` at temperature `t` in dimension `d`.
    ///
    /// With `s = |x|^2`, `|grad U|^2 = s (s-1)^2` and the Hessian norm is at
    /// most `3s + 1`, so `kappa''` is the maximum of
    /// `3s + 1 - s (s-1)^2 / (16 T d)` over `s >= 0`.
    pub fn double_well(t: f64, d: usize) -> Self {
        let m = 16.0 * t * d as f64;
        let g = |s: f64| 3.0 * s + 1.0 - s * (s - 1.0) * (s - 1.0) / m;
        let s_star = (4.0 + (4.0 + 36.0 * m).sqrt()) / 6.0;
        let kappa2 = g(s_star).max(g(0.0));
        Self { kappa2, c0: 12.0, d0: 12.0, eta0: 2.0, c_inf: 4.0, d_inf: 1.0, eta_inf: 2.0 }
    }
}

fn pass_tol(scale: f64) -> f64 {
    1e-12 * scale.abs().max(1.0)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GrowthBound1Report {
    pub checked: usize,
    pub skipped: usize,
    /// max over samples of LHS - RHS
    pub max_violation: f64,
    pub worst_index: Option<usize>,
    pub violations: usize,
    pub max_hessian_gradient_ratio: Option<f64>,
    pub pass: bool,
    pub warnings: Vec<String>,
}

/// Checks `|Hess U(x) y| <= |grad U(x)|^2 |y| / (16 T d) + kappa'' |y|` on samples.
pub fn check_growth_bound_1(
    model: &PotentialModel,
    gc: &GrowthConstants,
    temperature: f64,
    samples: &[(Vec<f64>, Vec<f64>)],
) -> GrowthBound1Report {
    let kp = 1.0 / (16.0 * temperature * model.dim() as f64);
    let mut rep = GrowthBound1Report { max_violation: f64::NEG_INFINITY, ..Default::default() };
    let mut ratio = f64::NEG_INFINITY;
    for (idx, (x, y)) in samples.iter().enumerate() {
        let (g, hy) = match (model.try_gradient(x), model.try_hessian_vec(x, y)) {
            (Some(g), Some(hy)) if model.in_domain(x) => (g, hy),
            _ => {
                rep.skipped += 1;
                continue;
            }
        };
        rep.checked += 1;
        let g2 = dot(&g, &g);
        let ny = norm(y);
        let lhs = norm(&hy);
        let rhs = kp * g2 * ny + gc.kappa2 * ny;
        let viol = lhs - rhs;
        if viol > rep.max_violation {
            rep.max_violation = viol;
            rep.worst_index = Some(idx);
        }
        if viol > pass_tol(rhs) {
            rep.violations += 1;
        }
        if g2 > 0.0 && ny > 0.0 {
            ratio = ratio.max(lhs / (ny * g2));
        }
    }
    if rep.skipped > 0 {
        rep.warnings.push(format!("{} samples outside the domain were skipped", rep.skipped));
    }
    rep.max_hessian_gradient_ratio = ratio.is_finite().then_some(ratio);
    rep.pass = rep.checked > 0 && rep.violations == 0;
    rep
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GrowthBound2Report {
    pub checked: usize,
    pub skipped: usize,
    /// max of `c_inf U^(2-2/eta_inf) - d_inf - |grad U|^2`
    pub worst_lower_slack: f64,
    /// max of `|grad U|^2 - c0 U^(2+2/eta0) - d0`
    pub worst_upper_slack: f64,
    pub violations: usize,
    pub pass: bool,
    pub warnings: Vec<String>,
}

/// Checks the two-sided gradient growth bound on samples.
pub fn check_growth_bound_2(
    model: &PotentialModel,
    gc: &GrowthConstants,
    samples: &[Vec<f64>],
) -> GrowthBound2Report {
    let mut rep = GrowthBound2Report {
        worst_lower_slack: f64::NEG_INFINITY,
        worst_upper_slack: f64::NEG_INFINITY,
        ..Default::default()
    };
    let p_inf = 2.0 - 2.0 / gc.eta_inf;
    let p0 = 2.0 + 2.0 / gc.eta0;
    for x in samples {
        let u = model.value_unchecked(x);
        let g = match model.try_gradient(x) {
            Some(g) if u.is_finite() && x.len() == model.dim() => g,
            _ => {
                rep.skipped += 1;
                continue;
            }
        };
        rep.checked += 1;
        let u = u.max(0.0);
        let g2 = dot(&g, &g);
        let lower = gc.c_inf * u.powf(p_inf) - gc.d_inf;
        let upper = gc.c0 * u.powf(p0) + gc.d0;
        let ls = lower - g2;
        let us = g2 - upper;
        rep.worst_lower_slack = rep.worst_lower_slack.max(ls);
        rep.worst_upper_slack = rep.worst_upper_slack.max(us);
        if ls > pass_tol(g2) || us > pass_tol(upper) {
            rep.violations += 1;
        }
    }
    if rep.skipped > 0 {
        rep.warnings.push(format!("{} samples with U = +inf were skipped", rep.skipped));
    }
    rep.pass = rep.checked > 0 && rep.violations == 0;
    rep
}

fn require_singular(model: &PotentialModel) -> Result<&SingularParams> {
    model
        .singular_params()
        .ok_or_else(|| Error::Argument("operation requires the singular pair family".into()))
}

/// Lower bound for `|grad U(x)|` of the singular pair family.
pub fn singular_gradient_lower_bound(model: &PotentialModel, x: &[f64]) -> Result<f64> {
    let p = require_singular(model)?;
    model.check_len(x)?;
    if !model.in_domain(x) {
        return Err(Error::Domain("configuration outside the domain".into()));
    }
    let n = p.n as f64;
    let aa = p.a_coef * p.a as f64;
    let bb = p.b_coef * p.b;
    let k = p.k;
    let ext: f64 = (0..p.n)
        .map(|i| norm(&x[i * k..(i + 1) * k]).powi(p.a as i32 - 1))
        .sum();
    let mut pair = 0.0;
    for i in 0..p.n {
        for j in i + 1..p.n {
            pair += pair_r2(x, k, i, j).sqrt().powf(-p.b - 1.0);
        }
    }
    Ok(aa / (2.0 * n.powf(1.5)) * ext + bb / (2.0 * n.powf(3.5)) * pair
        - aa / n.sqrt()
        - bb * n.powf(p.b + 2.5))
}

/// Upper bound for the operator norm of `Hess U(x)` of the singular pair family.
pub fn singular_hessian_upper_bound(model: &PotentialModel, x: &[f64]) -> Result<f64> {
    let p = require_singular(model)?;
    model.check_len(x)?;
    if !model.in_domain(x) {
        return Err(Error::Domain("configuration outside the domain".into()));
    }
    let k = p.k;
    let kf = k as f64;
    let aa = p.a_coef * p.a as f64;
    let ext: f64 = (0..p.n)
        .map(|i| {
            let q = &x[i * k..(i + 1) * k];
            dot(q, q).powi(((p.a - 2) / 2) as i32)
        })
        .sum();
    let mut pair = 0.0;
    for i in 0..p.n {
        for j in i + 1..p.n {
            pair += pair_r2(x, k, i, j).powf(-0.5 * (p.b + 2.0));
        }
    }
    Ok(aa * (p.a as f64 - 1.0) * kf * ext + 4.0 * p.b_coef * p.b * (p.b + 3.0) * kf * pair)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SingularBoundsReport {
    pub checked: usize,
    pub skipped: usize,
    /// max of `lower_bound - |grad U|`
    pub worst_gradient_slack: f64,
    /// max of `|Hess U y| - bound |y|`
    pub worst_hessian_slack: f64,
    pub gradient_violations: usize,
    pub hessian_violations: usize,
    pub pass: bool,
}

/// Checks the singular-family gradient lower bound and Hessian upper bound.
pub fn check_singular_bounds(
    model: &PotentialModel,
    samples: &[(Vec<f64>, Vec<f64>)],
) -> Result<SingularBoundsReport> {
    require_singular(model)?;
    let mut rep = SingularBoundsReport {
        worst_gradient_slack: f64::NEG_INFINITY,
        worst_hessian_slack: f64::NEG_INFINITY,
        ..Default::default()
    };
    for (x, y) in samples {
        if !model.in_domain(x) {
            rep.skipped += 1;
            continue;
        }
        rep.checked += 1;
        let g = norm(&model.gradient(x)?);
        let lb = singular_gradient_lower_bound(model, x)?;
        let gs = lb - g;
        rep.worst_gradient_slack = rep.worst_gradient_slack.max(gs);
        if gs > pass_tol(g) {
            rep.gradient_violations += 1;
        }
        let hy = norm(&model.hessian_vec(x, y)?);
        let hb = singular_hessian_upper_bound(model, x)? * norm(y);
        let hs = hy - hb;
        rep.worst_hessian_slack = rep.worst_hessian_slack.max(hs);
        if hs > pass_tol(hb) {
            rep.hessian_violations += 1;
        }
    }
    rep.pass = rep.checked > 0 && rep.gradient_violations == 0 && rep.hessian_violations == 0;
    Ok(rep)
}

// ---------------------------------------------------------------------------
// Sample generation for the checkers
// ---------------------------------------------------------------------------

pub fn random_unit<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Vec<f64> {
    loop {
        let y: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let n = norm(&y);
        if n > 1e-12 {
            return y.into_iter().map(|c| c / n).collect();
        }
    }
}

/// Median pair separation over a set of configurations (1 if there are no pairs).
pub fn typical_separation(model: &PotentialModel, configs: &[Vec<f64>]) -> f64 {
    let Some(p) = model.singular_params() else { return 1.0 };
    let mut seps = Vec::new();
    for x in configs {
        for i in 0..p.n {
            for j in i + 1..p.n {
                seps.push(pair_r2(x, p.k, i, j).sqrt());
            }
        }
    }
    if seps.is_empty() {
        return 1.0;
    }
    seps.sort_by(f64::total_cmp);
    seps[seps.len() / 2]
}

/// Stress configurations: pairs pushed together down to `0.05` of the typical
/// separation, and far-field rescalings. Only in-domain configurations are kept.
pub fn stress_configurations<R: Rng + ?Sized>(
    model: &PotentialModel,
    base: &[Vec<f64>],
    count: usize,
    rng: &mut R,
) -> Vec<Vec<f64>> {
    const FRACTIONS: [f64; 6] = [1.0, 0.5, 0.25, 0.15, 0.1, 0.05];
    const SCALES: [f64; 6] = [2.0, 5.0, 10.0, 30.0, 100.0, 1000.0];
    let d = model.dim();
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0usize;
    let sep = typical_separation(model, base);
    while out.len() < count && attempts < 50 * count.max(1) {
        attempts += 1;
        let x = if base.is_empty() {
            let r = 10f64.powf(rng.random_range(-3.0..3.0));
            random_unit(rng, d).into_iter().map(|c| c * r).collect()
        } else {
            base[rng.random_range(0..base.len())].clone()
        };
        let near = match model.singular_params() {
            Some(p) if p.n >= 2 => rng.random_bool(0.5),
            _ => false,
        };
        let cand = if near {
            let p = model.singular_params().unwrap();
            let i = rng.random_range(0..p.n);
            let mut j = rng.random_range(0..p.n - 1);
            if j >= i {
                j += 1;
            }
            let (i, j) = (i.min(j), i.max(j));
            let f = FRACTIONS[rng.random_range(0..FRACTIONS.len())];
            let k = p.k;
            let r = pair_r2(&x, k, i, j).sqrt();
            let mut y = x.clone();
            for l in 0..k {
                let m = 0.5 * (x[i * k + l] + x[j * k + l]);
                let u = (x[i * k + l] - x[j * k + l]) / r;
                y[i * k + l] = m + 0.5 * f * sep * u;
                y[j * k + l] = m - 0.5 * f * sep * u;
            }
            y
        } else if base.is_empty() {
            x
        } else {
            let s = SCALES[rng.random_range(0..SCALES.len())];
            x.iter().map(|c| c * s).collect()
        };
        if model.in_domain(&cand) {
            out.push(cand);
        }
    }
    out
}
