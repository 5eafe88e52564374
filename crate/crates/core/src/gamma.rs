//! Generator, carré du champ and Gamma-2 forms.
//!
//! With `c = c(gamma)`, `Y = grad_v` and `Z = grad_x - c grad_v`:
//!
//! ```text
//! L   = v.grad_x - gamma v.grad_v - grad U.grad_v + gamma T Lap_v
//! L*  = -v.grad_x - gamma v.grad_v + grad U.grad_v + gamma T Lap_v
//! Gamma(g)    = gamma T |grad_v g|^2
//! Gamma2^Y(g) = gamma T |grad_v Yg|^2 - Yg.Zg + (gamma - c) |Yg|^2
//! Gamma2^Z(g) = gamma T |grad_v Zg|^2 + c |Zg|^2 + c (c - gamma) Yg.Zg + Hess U Yg.Zg
//! ```
//!
//! The closed forms are checked against the definition
//! `Gamma2^Y(g) = 1/2 [L |Yg|^2 - 2 Yg.Y(Lg)]` evaluated by finite differences.

use nalgebra::DVector;
use num_dual::{hessian, Dual2DVec64, DualNum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certificate::{friction_constant, ModelParams};
use crate::error::{Error, Result};
use crate::potential::{dot, PhasePoint, PotentialModel};

/// Value, gradient and Hessian of a field in the coordinates `z = (x, v)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub grad: Vec<f64>,
    /// Row-major `2d x 2d`.
    pub hess: Vec<f64>,
}

impl Jet {
    fn dim(&self) -> usize {
        self.grad.len() / 2
    }

    pub fn grad_x(&self) -> &[f64] {
        &self.grad[..self.dim()]
    }

    pub fn grad_v(&self) -> &[f64] {
        &self.grad[self.dim()..]
    }

    pub fn h(&self, i: usize, j: usize) -> f64 {
        self.hess[i * self.grad.len() + j]
    }
}

pub trait ScalarField: Sync {
    fn name(&self) -> String;
    fn value(&self, p: &PhasePoint) -> f64;
    /// Analytic derivatives, when the field provides them.
    fn jet(&self, _p: &PhasePoint) -> Option<Jet> {
        None
    }
}

/// A closure viewed as a field without analytic derivatives.
pub struct FnField<F> {
    pub name: String,
    pub f: F,
}

impl<F: Fn(&PhasePoint) -> f64 + Sync> ScalarField for FnField<F> {
    fn name(&self) -> String {
        self.name.clone()
    }
    fn value(&self, p: &PhasePoint) -> f64 {
        (self.f)(p)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StencilConfig {
    pub h_x: f64,
    pub h_v: f64,
    /// Scale steps by `max(1, |z_i|)`.
    pub relative: bool,
}

impl Default for StencilConfig {
    fn default() -> Self {
        Self { h_x: 1e-4, h_v: 1e-4, relative: true }
    }
}

impl StencilConfig {
    pub fn halved(&self) -> Self {
        Self { h_x: 0.5 * self.h_x, h_v: 0.5 * self.h_v, ..*self }
    }

    fn step(&self, p: &PhasePoint, i: usize) -> f64 {
        let d = p.dim();
        let (base, z) = if i < d { (self.h_x, p.x[i]) } else { (self.h_v, p.v[i - d]) };
        if self.relative {
            base * z.abs().max(1.0)
        } else {
            base
        }
    }
}

fn shifted(p: &PhasePoint, i: usize, h: f64) -> PhasePoint {
    let mut q = p.clone();
    let d = p.dim();
    if i < d {
        q.x[i] += h;
    } else {
        q.v[i - d] += h;
    }
    q
}

/// Finite-difference jet from values only.
pub fn fd_jet(f: &dyn Fn(&PhasePoint) -> f64, p: &PhasePoint, st: &StencilConfig) -> Jet {
    let n = 2 * p.dim();
    let f0 = f(p);
    let hs: Vec<f64> = (0..n).map(|i| st.step(p, i)).collect();
    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; n * n];
    for i in 0..n {
        let (fp, fm) = (f(&shifted(p, i, hs[i])), f(&shifted(p, i, -hs[i])));
        grad[i] = (fp - fm) / (2.0 * hs[i]);
        hess[i * n + i] = (fp - 2.0 * f0 + fm) / (hs[i] * hs[i]);
        for j in 0..i {
            let q = |a: f64, b: f64| f(&shifted(&shifted(p, i, a * hs[i]), j, b * hs[j]));
            let v = (q(1.0, 1.0) - q(1.0, -1.0) - q(-1.0, 1.0) + q(-1.0, -1.0)) / (4.0 * hs[i] * hs[j]);
            hess[i * n + j] = v;
            hess[j * n + i] = v;
        }
    }
    Jet { value: f0, grad, hess }
}

pub fn field_jet(f: &dyn ScalarField, p: &PhasePoint, st: &StencilConfig) -> Jet {
    f.jet(p).unwrap_or_else(|| fd_jet(&|q| f.value(q), p, st))
}

fn require_domain(model: &PotentialModel, p: &PhasePoint) -> Result<Vec<f64>> {
    if p.dim() != model.dim() || p.v.len() != model.dim() {
        return Err(Error::Argument("phase point dimension does not match the model".into()));
    }
    model.try_gradient(&p.x).filter(|_| model.in_domain(&p.x)).ok_or_else(|| {
        Error::Domain("phase point outside the domain".into())
    })
}

/// `L f` (sign = +1) or `L* f` (sign = -1) from a jet.
fn generator_from_jet(mp: &ModelParams, p: &PhasePoint, grad_u: &[f64], j: &Jet, sign: f64) -> f64 {
    let d = p.dim();
    let (gx, gv) = (j.grad_x(), j.grad_v());
    let lap_v: f64 = (0..d).map(|i| j.h(d + i, d + i)).sum();
    sign * (dot(&p.v, gx) - dot(grad_u, gv)) - mp.gamma * dot(&p.v, gv)
        + mp.gamma * mp.temperature * lap_v
}

pub fn apply_l(
    model: &PotentialModel,
    mp: &ModelParams,
    f: &dyn ScalarField,
    p: &PhasePoint,
    st: &StencilConfig,
) -> Result<f64> {
    let gu = require_domain(model, p)?;
    Ok(generator_from_jet(mp, p, &gu, &field_jet(f, p, st), 1.0))
}

pub fn apply_lstar(
    model: &PotentialModel,
    mp: &ModelParams,
    f: &dyn ScalarField,
    p: &PhasePoint,
    st: &StencilConfig,
) -> Result<f64> {
    let gu = require_domain(model, p)?;
    Ok(generator_from_jet(mp, p, &gu, &field_jet(f, p, st), -1.0))
}

/// `Yf = grad_v f`.
pub fn y_op(f: &dyn ScalarField, p: &PhasePoint, st: &StencilConfig) -> Vec<f64> {
    field_jet(f, p, st).grad_v().to_vec()
}

/// `Zf = grad_x f - c(gamma) grad_v f`.
pub fn z_op(mp: &ModelParams, f: &dyn ScalarField, p: &PhasePoint, st: &StencilConfig) -> Result<Vec<f64>> {
    let c = friction_constant(mp.gamma)?;
    let j = field_jet(f, p, st);
    Ok(j.grad_x().iter().zip(j.grad_v()).map(|(a, b)| a - c * b).collect())
}

/// `Gamma(f) = gamma T |grad_v f|^2`.
pub fn gamma_form(mp: &ModelParams, f: &dyn ScalarField, p: &PhasePoint, st: &StencilConfig) -> f64 {
    let y = y_op(f, p, st);
    mp.gamma * mp.temperature * dot(&y, &y)
}

/// `1/2 [L f^2 - 2 f L f]` with both generator applications by finite differences.
pub fn gamma_form_def(
    model: &PotentialModel,
    mp: &ModelParams,
    f: &dyn ScalarField,
    p: &PhasePoint,
    st: &StencilConfig,
) -> Result<f64> {
    let gu = require_domain(model, p)?;
    let sq = |q: &PhasePoint| f.value(q).powi(2);
    let l_sq = generator_from_jet(mp, p, &gu, &fd_jet(&sq, p, st), 1.0);
    let l_f = generator_from_jet(mp, p, &gu, &fd_jet(&|q| f.value(q), p, st), 1.0);
    Ok(0.5 * (l_sq - 2.0 * f.value(p) * l_f))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Which {
    Y,
    Z,
}

/// Pieces shared by the closed forms.
struct Parts {
    yg: Vec<f64>,
    zg: Vec<f64>,
    /// `|grad_v Yg|_F^2`
    dvy: f64,
    /// `|grad_v Zg|_F^2`
    dvz: f64,
}

fn parts(c: f64, j: &Jet) -> Parts {
    let d = j.dim();
    let yg = j.grad_v().to_vec();
    let zg: Vec<f64> = j.grad_x().iter().zip(j.grad_v()).map(|(a, b)| a - c * b).collect();
    let (mut dvy, mut dvz) = (0.0, 0.0);
    for i in 0..d {
        for l in 0..d {
            let a = j.h(d + l, d + i);
            let b = j.h(d + l, i) - c * a;
            dvy += a * a;
            dvz += b * b;
        }
    }
    Parts { yg, zg, dvy, dvz }
}

pub fn gamma2_closed(
    model: &PotentialModel,
    mp: &ModelParams,
    which: Which,
    f: &dyn ScalarField,
    p: &PhasePoint,
    st: &StencilConfig,
) -> Result<f64> {
    require_domain(model, p)?;
    let c = friction_constant(mp.gamma)?;
    let pt = parts(c, &field_jet(f, p, st));
    let gt = mp.gamma * mp.temperature;
    let yz = dot(&pt.yg, &pt.zg);
    Ok(match which {
        Which::Y => gt * pt.dvy - yz + (mp.gamma - c) * dot(&pt.yg, &pt.yg),
        Which::Z => {
            let hy = model.hessian_vec(&p.x, &pt.yg)?;
            gt * pt.dvz + c * dot(&pt.zg, &pt.zg) + c * (c - mp.gamma) * yz + dot(&hy, &pt.zg)
        }
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gamma2Eval {
    pub value: f64,
    /// `|value(h) - value(h/2)|`
    pub halving_gap: f64,
    pub warning: bool,
}

fn gamma2_def_once(
    model: &PotentialModel,
    mp: &ModelParams,
    which: Which,
    f: &dyn ScalarField,
    p: &PhasePoint,
    inner: &StencilConfig,
    outer: &StencilConfig,
) -> Result<f64> {
    let gu = require_domain(model, p)?;
    let c = friction_constant(mp.gamma)?;
    let op = |j: &Jet| -> Vec<f64> {
        match which {
            Which::Y => j.grad_v().to_vec(),
            Which::Z => j.grad_x().iter().zip(j.grad_v()).map(|(a, b)| a - c * b).collect(),
        }
    };
    // q = |W g|^2 with W in {Y, Z}
    let q = |r: &PhasePoint| {
        let w = op(&field_jet(f, r, inner));
        dot(&w, &w)
    };
    let l_q = generator_from_jet(mp, p, &gu, &fd_jet(&q, p, outer), 1.0);
    // Lg at nearby points, with the potential gradient re-evaluated there
    let lg = |r: &PhasePoint| match model.try_gradient(&r.x) {
        Some(g) if model.in_domain(&r.x) => generator_from_jet(mp, r, &g, &field_jet(f, r, inner), 1.0),
        _ => f64::NAN,
    };
    let n = 2 * p.dim();
    let mut grad_lg = vec![0.0; n];
    for (i, gi) in grad_lg.iter_mut().enumerate() {
        let h = outer.step(p, i);
        *gi = (lg(&shifted(p, i, h)) - lg(&shifted(p, i, -h))) / (2.0 * h);
    }
    let w_lg = op(&Jet { value: 0.0, grad: grad_lg, hess: Vec::new() });
    let w_g = op(&field_jet(f, p, inner));
    let v = 0.5 * l_q - dot(&w_g, &w_lg);
    if v.is_nan() {
        return Err(Error::Domain("finite-difference stencil left the domain".into()));
    }
    Ok(v)
}

/// Definitional Gamma-2 by finite differences of the generator, with a
/// step-halving quality estimate.
pub fn gamma2_def(
    model: &PotentialModel,
    mp: &ModelParams,
    which: Which,
    f: &dyn ScalarField,
    p: &PhasePoint,
    st: &StencilConfig,
) -> Result<Gamma2Eval> {
    let a = gamma2_def_once(model, mp, which, f, p, st, st)?;
    let b = gamma2_def_once(model, mp, which, f, p, st, &st.halved())?;
    let gap = (a - b).abs();
    Ok(Gamma2Eval { value: a, halving_gap: gap, warning: gap > 1e-4 * a.abs() + 1e-8 })
}

/// `R(x, y) = (2/gamma) |y|^2 + |Hess U(x) y|^2 / (2 gamma)`.
pub fn r_term(model: &PotentialModel, mp: &ModelParams, x: &[f64], y: &[f64]) -> Result<f64> {
    let hy = model.hessian_vec(x, y)?;
    Ok(2.0 / mp.gamma * dot(y, y) + dot(&hy, &hy) / (2.0 * mp.gamma))
}

/// `c^2 - gamma c - 1`, zero for `c = c(gamma)`.
pub fn cross_term_coefficient(gamma: f64) -> Result<f64> {
    let c = friction_constant(gamma)?;
    Ok(c * c - gamma * c - 1.0)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Gamma3Report {
    pub field: String,
    pub checked: usize,
    pub min_slack: f64,
    pub min_relative_slack: f64,
    pub violations: usize,
    pub pass: bool,
}

/// Pointwise check of
/// `Gamma2^Y + Gamma2^Z >= gamma T (|grad_v Yg|^2 + |grad_v Zg|^2) + (gamma/2) |Zg|^2 - R(x, Yg)`.
pub fn check_gamma3_inequality(
    model: &PotentialModel,
    mp: &ModelParams,
    f: &dyn ScalarField,
    points: &[PhasePoint],
    st: &StencilConfig,
) -> Result<Gamma3Report> {
    let c = friction_constant(mp.gamma)?;
    let gt = mp.gamma * mp.temperature;
    let slacks: Vec<(f64, f64)> = points
        .par_iter()
        .map(|p| -> Result<(f64, f64)> {
            let lhs = gamma2_closed(model, mp, Which::Y, f, p, st)? + gamma2_closed(model, mp, Which::Z, f, p, st)?;
            let pt = parts(c, &field_jet(f, p, st));
            let rhs = gt * (pt.dvy + pt.dvz) + 0.5 * mp.gamma * dot(&pt.zg, &pt.zg) - r_term(model, mp, &p.x, &pt.yg)?;
            let s = lhs - rhs;
            Ok((s, s / lhs.abs().max(rhs.abs()).max(1e-300)))
        })
        .collect::<Result<_>>()?;
    let mut rep = Gamma3Report {
        field: f.name(),
        checked: slacks.len(),
        min_slack: f64::INFINITY,
        min_relative_slack: f64::INFINITY,
        ..Default::default()
    };
    for (s, r) in slacks {
        rep.min_slack = rep.min_slack.min(s);
        rep.min_relative_slack = rep.min_relative_slack.min(r);
        if r < -1e-12 && s < -1e-12 {
            rep.violations += 1;
        }
    }
    rep.pass = rep.checked > 0 && rep.violations == 0;
    Ok(rep)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IdentityRow {
    pub field: String,
    pub which: String,
    pub points: usize,
    pub max_abs_disagreement: f64,
    /// max of `|def - closed| / (|closed| + 1e-8 / rtol)`
    pub max_scaled_error: f64,
    pub failures: usize,
    pub fd_warnings: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub rtol: f64,
    pub atol: f64,
    pub rows: Vec<IdentityRow>,
    pub pass: bool,
}

/// Compares definitional and closed-form Gamma-2 on every field and point.
pub fn verify_gamma2_identities(
    model: &PotentialModel,
    mp: &ModelParams,
    fields: &[&dyn ScalarField],
    points: &[PhasePoint],
    st: &StencilConfig,
    rtol: f64,
    atol: f64,
) -> Result<IdentityReport> {
    let mut rows = Vec::new();
    for f in fields {
        for which in [Which::Y, Which::Z] {
            let res: Vec<(f64, f64, bool)> = points
                .par_iter()
                .map(|p| -> Result<(f64, f64, bool)> {
                    let closed = gamma2_closed(model, mp, which, *f, p, st)?;
                    let def = gamma2_def(model, mp, which, *f, p, st)?;
                    Ok(((def.value - closed).abs(), closed.abs(), def.warning))
                })
                .collect::<Result<_>>()?;
            let mut row = IdentityRow {
                field: f.name(),
                which: format!("{which:?}"),
                points: res.len(),
                ..Default::default()
            };
            for (diff, scale, warn) in res {
                row.max_abs_disagreement = row.max_abs_disagreement.max(diff);
                row.max_scaled_error = row.max_scaled_error.max(diff / (scale + atol / rtol));
                if diff > rtol * scale + atol {
                    row.failures += 1;
                }
                row.fd_warnings += warn as usize;
            }
            rows.push(row);
        }
    }
    let pass = rows.iter().all(|r| r.failures == 0);
    Ok(IdentityReport { rtol, atol, rows, pass })
}

// ---------------------------------------------------------------------------
// Test-field library
// ---------------------------------------------------------------------------

/// The fixed library of smooth test fields. Coefficient vectors depend only on
/// the coordinate index, so the suite is reproducible in any dimension.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TestField {
    /// `a.x + b.v`
    Linear,
    /// `x.v`
    XDotV,
    /// `|v|^2`
    KineticSq,
    /// `|x|^2 + x.v`
    QuadraticMix,
    /// `x1 v1^2 + x1^3/3 + v1^3`
    Cubic,
    /// `exp(-|x|^2/2) v1`
    GaussXV1,
    /// `exp(-(|x|^2 + |v|^2)/4) x1 v1`
    GaussProduct,
    /// `sin(x1) cos(v1)`
    SinCos,
    /// `cos(w.x + u.v)`
    PlaneWave,
    /// `sin(x1 + 2 v1) exp(-|v|^2/8)`
    DampedSine,
}

pub const TEST_FIELDS: [TestField; 10] = [
    TestField::Linear,
    TestField::XDotV,
    TestField::KineticSq,
    TestField::QuadraticMix,
    TestField::Cubic,
    TestField::GaussXV1,
    TestField::GaussProduct,
    TestField::SinCos,
    TestField::PlaneWave,
    TestField::DampedSine,
];

fn coef_a(i: usize) -> f64 {
    1.0 / (i as f64 + 1.0)
}

fn coef_b(i: usize) -> f64 {
    if i % 2 == 0 { 0.5 } else { -0.5 }
}

fn coef_w(i: usize) -> f64 {
    0.7 / (i as f64 + 1.0)
}

fn coef_u(i: usize) -> f64 {
    0.3 * (i as f64 + 1.0)
}

impl TestField {
    /// Evaluates the field at `z = (x, v)` for any dual-number type.
    pub fn eval<D: DualNum<Primitive = f64>>(&self, z: &[D]) -> D {
        let d = z.len() / 2;
        let (x, v) = z.split_at(d);
        let sq = |w: &[D]| w.iter().fold(D::from(0.0), |s, a| s + a.clone() * a.clone());
        match self {
            TestField::Linear => (0..d).fold(D::from(0.0), |s, i| {
                s + x[i].clone() * coef_a(i) + v[i].clone() * coef_b(i)
            }),
            TestField::XDotV => (0..d).fold(D::from(0.0), |s, i| s + x[i].clone() * v[i].clone()),
            TestField::KineticSq => sq(v),
            TestField::QuadraticMix => {
                (0..d).fold(sq(x), |s, i| s + x[i].clone() * v[i].clone())
            }
            TestField::Cubic => {
                let (a, b) = (x[0].clone(), v[0].clone());
                a.clone() * b.powi(2) + a.powi(3) * (1.0 / 3.0) + b.powi(3)
            }
            TestField::GaussXV1 => (sq(x) * -0.5).exp() * v[0].clone(),
            TestField::GaussProduct => ((sq(x) + sq(v)) * -0.25).exp() * x[0].clone() * v[0].clone(),
            TestField::SinCos => x[0].sin() * v[0].cos(),
            TestField::PlaneWave => (0..d)
                .fold(D::from(0.0), |s, i| s + x[i].clone() * coef_w(i) + v[i].clone() * coef_u(i))
                .cos(),
            TestField::DampedSine => (x[0].clone() + v[0].clone() * 2.0).sin() * (sq(v) * -0.125).exp(),
        }
    }
}

fn coords(p: &PhasePoint) -> Vec<f64> {
    p.x.iter().chain(&p.v).copied().collect()
}

impl ScalarField for TestField {
    fn name(&self) -> String {
        format!("{self:?}")
    }

    fn value(&self, p: &PhasePoint) -> f64 {
        self.eval(&coords(p))
    }

    fn jet(&self, p: &PhasePoint) -> Option<Jet> {
        let z = DVector::from_vec(coords(p));
        let (value, g, h) = hessian(|w: DVector<Dual2DVec64>| self.eval(w.as_slice()), &z);
        let n = z.len();
        let hess = (0..n * n).map(|k| h[(k / n, k % n)]).collect();
        Some(Jet { value, grad: g.iter().copied().collect(), hess })
    }
}

/// A random smooth field `l.z + z.Qz/2 + a cos(w.z + phi)` on `z = (x, v)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomField {
    pub id: usize,
    pub lin: Vec<f64>,
    /// Row-major symmetric `2d x 2d`.
    pub quad: Vec<f64>,
    pub amp: f64,
    pub freq: Vec<f64>,
    pub phase: f64,
}

impl RandomField {
    pub fn sample<R: rand::Rng + ?Sized>(id: usize, d: usize, rng: &mut R) -> Self {
        let n = 2 * d;
        let mut u = || rng.random_range(-1.0..1.0);
        let lin = (0..n).map(|_| u()).collect();
        let mut quad = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let q = 0.5 * u();
                quad[i * n + j] = q;
                quad[j * n + i] = q;
            }
        }
        let amp = u();
        let freq = (0..n).map(|_| u()).collect();
        let phase = 3.0 * u();
        Self { id, lin, quad, amp, freq, phase }
    }

    pub fn eval<D: DualNum<Primitive = f64>>(&self, z: &[D]) -> D {
        let n = z.len();
        let mut s = D::from(0.0);
        let mut arg = D::from(self.phase);
        for i in 0..n {
            s += z[i].clone() * self.lin[i];
            arg += z[i].clone() * self.freq[i];
            for j in 0..n {
                s += z[i].clone() * z[j].clone() * (0.5 * self.quad[i * n + j]);
            }
        }
        s + arg.cos() * self.amp
    }
}

impl ScalarField for RandomField {
    fn name(&self) -> String {
        format!("random#{}", self.id)
    }

    fn value(&self, p: &PhasePoint) -> f64 {
        self.eval(&coords(p))
    }

    fn jet(&self, p: &PhasePoint) -> Option<Jet> {
        let z = DVector::from_vec(coords(p));
        let (value, g, h) = hessian(|w: DVector<Dual2DVec64>| self.eval(w.as_slice()), &z);
        let n = z.len();
        let hess = (0..n * n).map(|k| h[(k / n, k % n)]).collect();
        Some(Jet { value, grad: g.iter().copied().collect(), hess })
    }
}

/// `H(x, v) = |v|^2/2 + U(x)` with analytic derivatives from the model.
pub struct HamiltonianField<'a> {
    pub model: &'a PotentialModel,
}

impl ScalarField for HamiltonianField<'_> {
    fn name(&self) -> String {
        "Hamiltonian".into()
    }

    fn value(&self, p: &PhasePoint) -> f64 {
        self.model.hamiltonian(p)
    }

    fn jet(&self, p: &PhasePoint) -> Option<Jet> {
        let d = p.dim();
        let n = 2 * d;
        let gu = self.model.try_gradient(&p.x)?;
        let hu = self.model.hessian_dense(&p.x).ok()?;
        let mut hess = vec![0.0; n * n];
        for i in 0..d {
            for j in 0..d {
                hess[i * n + j] = hu[i][j];
            }
            hess[(d + i) * n + d + i] = 1.0;
        }
        let grad = gu.into_iter().chain(p.v.iter().copied()).collect();
        Some(Jet { value: self.value(p), grad, hess })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mp(gamma: f64, t: f64) -> ModelParams {
        ModelParams::new(gamma, t, 1, 1).unwrap()
    }

    fn pp(x: f64, v: f64) -> PhasePoint {
        PhasePoint::new(vec![x], vec![v]).unwrap()
    }

    #[test]
    fn l_of_hamiltonian() {
        let m = PotentialModel::double_well(1).unwrap();
        let mp = mp(1.3, 0.7);
        let h = HamiltonianField { model: &m };
        let st = StencilConfig::default();
        for (x, v) in [(0.3, -1.2), (1.7, 0.4), (-2.0, 2.5)] {
            let p = pp(x, v);
            let expect = 1.3 * (0.7 - v * v);
            assert!((apply_l(&m, &mp, &h, &p, &st).unwrap() - expect).abs() < 1e-12);
            assert!((apply_lstar(&m, &mp, &h, &p, &st).unwrap() - expect).abs() < 1e-12);
            let fd = FnField { name: "H".into(), f: |q: &PhasePoint| m.hamiltonian(q) };
            assert!((apply_l(&m, &mp, &fd, &p, &st).unwrap() - expect).abs() < 1e-5 * (1.0 + expect.abs()));
        }
    }

    #[test]
    fn constant_and_velocity_fields() {
        let m = PotentialModel::double_well(1).unwrap();
        let mp = mp(2.0, 1.0);
        let st = StencilConfig::default();
        let one = FnField { name: "one".into(), f: |_: &PhasePoint| 1.0 };
        let p = pp(0.4, -0.3);
        assert_eq!(apply_l(&m, &mp, &one, &p, &st).unwrap(), 0.0);
        assert_eq!(apply_lstar(&m, &mp, &one, &p, &st).unwrap(), 0.0);
        let vel = FnField { name: "v".into(), f: |q: &PhasePoint| q.v[0] };
        let u1 = (0.4f64 * 0.4 - 1.0) * 0.4;
        let lv = apply_l(&m, &mp, &vel, &p, &st).unwrap();
        assert!((lv - (-2.0 * -0.3 - u1)).abs() < 1e-8);
    }

    #[test]
    fn y_and_z_on_linear_fields() {
        let mp = mp(2.0, 1.0);
        let st = StencilConfig::default();
        let c = friction_constant(2.0).unwrap();
        let xv = FnField { name: "x+v".into(), f: |q: &PhasePoint| q.x[0] + q.v[0] };
        let p = pp(0.2, 0.9);
        assert!((y_op(&xv, &p, &st)[0] - 1.0).abs() < 1e-9);
        assert!((z_op(&mp, &xv, &p, &st).unwrap()[0] - (1.0 - c)).abs() < 1e-9);
        let x = FnField { name: "x".into(), f: |q: &PhasePoint| q.x[0] };
        assert!(y_op(&x, &p, &st)[0].abs() < 1e-12);
        assert!((z_op(&mp, &x, &p, &st).unwrap()[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn gamma_form_examples() {
        let m = PotentialModel::single_well(1).unwrap();
        let mp = mp(1.5, 0.8);
        let st = StencilConfig::default();
        let p = pp(0.5, -1.5);
        let v = FnField { name: "v".into(), f: |q: &PhasePoint| q.v[0] };
        let x = FnField { name: "x".into(), f: |q: &PhasePoint| q.x[0] };
        let v2 = FnField { name: "v2".into(), f: |q: &PhasePoint| q.v[0] * q.v[0] };
        assert!((gamma_form(&mp, &v, &p, &st) - 1.2).abs() < 1e-9);
        assert!(gamma_form(&mp, &x, &p, &st).abs() < 1e-12);
        assert!((gamma_form(&mp, &v2, &p, &st) - 4.0 * 1.2 * 2.25).abs() < 1e-7);
        let def = gamma_form_def(&m, &mp, &v2, &p, &st).unwrap();
        assert!((def - 4.0 * 1.2 * 2.25).abs() < 1e-4);
    }

    #[test]
    fn x_dot_v_single_well_routes_agree() {
        let m = PotentialModel::single_well(1).unwrap();
        let mp = mp(2.0, 1.0);
        let st = StencilConfig::default();
        let p = pp(1.0, 1.0);
        for which in [Which::Y, Which::Z] {
            let closed = gamma2_closed(&m, &mp, which, &TestField::XDotV, &p, &st).unwrap();
            let def = gamma2_def(&m, &mp, which, &TestField::XDotV, &p, &st).unwrap();
            assert!((def.value - closed).abs() <= 1e-4 * closed.abs() + 1e-8, "{which:?} {closed} {def:?}");
        }
    }

    #[test]
    fn linear_field_closed_form() {
        // Gamma2^Y of a linear field is (gamma - c)|Yf|^2 - Yf.Zf
        let m = PotentialModel::single_well(1).unwrap();
        let mp = mp(2.0, 1.0);
        let st = StencilConfig::default();
        let c = friction_constant(2.0).unwrap();
        let p = pp(-0.4, 0.6);
        let (a, b) = (1.0, 0.5);
        let expect = (2.0 - c) * b * b - b * (a - c * b);
        let closed = gamma2_closed(&m, &mp, Which::Y, &TestField::Linear, &p, &st).unwrap();
        assert!((closed - expect).abs() < 1e-13);
    }

    #[test]
    fn position_only_field_has_zero_gamma2_y() {
        let m = PotentialModel::double_well(1).unwrap();
        let mp = mp(2.0, 1.0);
        let st = StencilConfig::default();
        let f = FnField { name: "sin x".into(), f: |q: &PhasePoint| q.x[0].sin() };
        let v = gamma2_closed(&m, &mp, Which::Y, &f, &pp(0.3, 0.2), &st).unwrap();
        assert!(v.abs() < 1e-9);
    }

    #[test]
    fn cross_term_vanishes() {
        for g in [0.1, 0.5, 1.0, 2.0, 17.0, 99.0] {
            assert!(cross_term_coefficient(g).unwrap().abs() < 1e-14 * g.max(1.0) * g.max(1.0));
        }
    }

    #[test]
    fn r_term_examples() {
        let m = PotentialModel::single_well(2).unwrap();
        let mp = ModelParams::new(2.0, 1.0, 1, 2).unwrap();
        assert_eq!(r_term(&m, &mp, &[0.3, 0.1], &[0.0, 0.0]).unwrap(), 0.0);
        let y = [0.6, -0.8];
        let r = r_term(&m, &mp, &[0.3, 0.1], &y).unwrap();
        assert!((r - (1.0 + 0.25)).abs() < 1e-15);
        let r3 = r_term(&m, &mp, &[0.3, 0.1], &[1.8, -2.4]).unwrap();
        assert!((r3 - 9.0 * r).abs() < 1e-12);
    }

    #[test]
    fn gamma3_for_velocity_field() {
        let m = PotentialModel::single_well(1).unwrap();
        let mp = mp(2.0, 1.0);
        let st = StencilConfig::default();
        let v = FnField { name: "v".into(), f: |q: &PhasePoint| q.v[0] };
        let pts = vec![pp(0.1, 0.2), pp(-1.0, 3.0)];
        let rep = check_gamma3_inequality(&m, &mp, &v, &pts, &st).unwrap();
        assert!(rep.pass, "{rep:?}");
        // f = v: Yf = 1, Zf = -c; LHS = (gamma - c) + c + c^2 (c - gamma)... evaluated directly
        let c = friction_constant(2.0).unwrap();
        let lhs = (2.0 - c) + c + c * c * c + c * (c - 2.0) * -c + -c;
        let rhs = 0.5 * 2.0 * c * c - (2.0 / 2.0 + 1.0 / 4.0);
        assert!((rep.min_slack - (lhs - rhs)).abs() < 1e-6);
    }

    #[test]
    fn dual_jets_match_finite_differences() {
        let st = StencilConfig::default();
        let p = PhasePoint::new(vec![0.3, -0.7], vec![1.1, 0.4]).unwrap();
        for f in TEST_FIELDS {
            let a = f.jet(&p).unwrap();
            let b = fd_jet(&|q| f.value(q), &p, &st);
            assert!((a.value - b.value).abs() < 1e-14);
            for (x, y) in a.grad.iter().zip(&b.grad) {
                assert!((x - y).abs() < 1e-7, "{f:?}");
            }
            for (x, y) in a.hess.iter().zip(&b.hess) {
                assert!((x - y).abs() < 1e-5, "{f:?}");
            }
        }
    }
}
