//! Grid estimates of local Poincaré constants.
//!
//! On a cell-centred grid the weighted Dirichlet form
//! `sum_edges w_e (f_i - f_j)^2 / h^2` is compared with the weighted mass
//! `sum_i w_i f_i^2`, where `w_i = exp(log_w(z_i) - max)` and `w_e` is the
//! geometric mean of its endpoints. Edges leaving the masked set are dropped,
//! which gives the Neumann problem. `rho = 1/lambda_1`.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::certificate::{KSpec, ModelParams, RhoK, RhoSource};
use crate::dynamics::stream_rng;
use crate::error::{Error, Result};
use crate::potential::{PhasePoint, PotentialModel};

pub const MAX_GRID_DIM: usize = 4;
pub const MIN_POINTS_PER_AXIS: usize = 16;
/// Largest grid the iterative solver accepts.
pub const MAX_NODES: usize = 1 << 22;
/// Largest problem the dense oracle accepts.
pub const MAX_DENSE_NODES: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Axis {
    pub fn h(&self) -> f64 {
        (self.hi - self.lo) / self.n as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        self.lo + (i as f64 + 0.5) * self.h()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub axes: Vec<Axis>,
}

impl GridSpec {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        if axes.is_empty() || axes.len() > MAX_GRID_DIM {
            return Err(Error::Capability(format!(
                "grid dimension {} unsupported; at most {MAX_GRID_DIM} coordinates",
                axes.len()
            )));
        }
        for a in &axes {
            if !(a.lo < a.hi) || !a.lo.is_finite() || !a.hi.is_finite() {
                return Err(Error::Argument(format!("bad axis range [{}, {}]", a.lo, a.hi)));
            }
            if a.n < MIN_POINTS_PER_AXIS {
                return Err(Error::Argument(format!("need at least {MIN_POINTS_PER_AXIS} points per axis, got {}", a.n)));
            }
        }
        Ok(Self { axes })
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn node_count(&self) -> usize {
        self.axes.iter().map(|a| a.n).product()
    }

    pub fn refined(&self, factor: usize) -> Self {
        Self { axes: self.axes.iter().map(|a| Axis { n: a.n * factor, ..*a }).collect() }
    }

    fn coords(&self, mut idx: usize, out: &mut [f64]) {
        for (k, a) in self.axes.iter().enumerate() {
            out[k] = a.node(idx % a.n);
            idx /= a.n;
        }
    }

    /// A phase-space box covering `K`, clipped to where `H - min H <= cutoff T`.
    /// Requires `2d <= 4`.
    pub fn covering_k(
        model: &PotentialModel,
        mp: &ModelParams,
        k_spec: &KSpec,
        n: usize,
        cutoff: f64,
    ) -> Result<Self> {
        let d = model.dim();
        if 2 * d > MAX_GRID_DIM {
            return Err(Error::Capability(format!(
                "phase dimension {} exceeds the grid limit {MAX_GRID_DIM}; supply rho_K directly",
                2 * d
            )));
        }
        if !(cutoff > 0.0) {
            return Err(Error::Argument("cutoff must be positive".into()));
        }
        let t = mp.temperature;
        let vmax = k_spec.velocity_cap.sqrt().min((2.0 * cutoff * t).sqrt());
        let (lo, hi, umin) = search_box(model)?;
        let level = k_spec.energy_cap.min(umin + cutoff * t);
        let (lo, hi, _) = sublevel_box_within(model, level, &lo, &hi)?;
        let mut axes: Vec<Axis> = (0..d).map(|i| Axis { lo: lo[i], hi: hi[i], n }).collect();
        axes.extend((0..d).map(|_| Axis { lo: -vmax, hi: vmax, n }));
        Self::new(axes)
    }
}

/// The scan box `[-50, 50]^d` and the smallest value of `U` found on it.
fn search_box(model: &PotentialModel) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    let d = model.dim();
    let reach = 50.0;
    let m: usize = if d == 1 { 20_001 } else { 801 };
    let mut umin = f64::INFINITY;
    let mut x = vec![0.0; d];
    for idx in 0..m.pow(d as u32) {
        let mut r = idx;
        for xi in x.iter_mut() {
            *xi = -reach + 2.0 * reach * (r % m) as f64 / (m - 1) as f64;
            r /= m;
        }
        umin = umin.min(model.value_unchecked(&x));
    }
    if !umin.is_finite() {
        return Err(Error::Numerics("potential has no finite value on the search box".into()));
    }
    Ok((vec![-reach; d], vec![reach; d], umin))
}

/// Tight box around `{U <= level}` inside the given box, padded by one scan step.
fn sublevel_box_within(model: &PotentialModel, level: f64, lo: &[f64], hi: &[f64]) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    let d = model.dim();
    let m: usize = if d == 1 { 20_001 } else { 801 };
    let step: Vec<f64> = (0..d).map(|i| (hi[i] - lo[i]) / (m - 1) as f64).collect();
    let (mut blo, mut bhi) = (vec![f64::INFINITY; d], vec![f64::NEG_INFINITY; d]);
    let mut x = vec![0.0; d];
    let mut umin = f64::INFINITY;
    for idx in 0..m.pow(d as u32) {
        let mut r = idx;
        for i in 0..d {
            x[i] = lo[i] + step[i] * (r % m) as f64;
            r /= m;
        }
        let u = model.value_unchecked(&x);
        umin = umin.min(u);
        if u <= level {
            for i in 0..d {
                blo[i] = blo[i].min(x[i]);
                bhi[i] = bhi[i].max(x[i]);
            }
        }
    }
    if !blo[0].is_finite() {
        return Err(Error::Numerics("sublevel set is empty on the search box".into()));
    }
    for i in 0..d {
        blo[i] -= step[i];
        bhi[i] += step[i];
    }
    Ok((blo, bhi, umin))
}

/// Assembled weighted form restricted to active nodes.
#[derive(Clone, Debug)]
pub struct DiscreteForm {
    pub grid: GridSpec,
    /// Grid index of each active node.
    pub active: Vec<usize>,
    /// Normalised node weights, max 1.
    pub weights: Vec<f64>,
    /// `(i, j, w_e / h^2)` over active nodes.
    pub edges: Vec<(usize, usize, f64)>,
    pub masked: usize,
    pub components: usize,
    pub warnings: Vec<String>,
}

impl DiscreteForm {
    /// Builds the form from a log-weight and a membership mask. When the active
    /// graph is disconnected, only the component with the most mass is kept.
    pub fn assemble(
        grid: &GridSpec,
        log_w: &(dyn Fn(&[f64]) -> f64 + Sync),
        mask: &(dyn Fn(&[f64]) -> bool + Sync),
    ) -> Result<Self> {
        let total = grid.node_count();
        if total > MAX_NODES {
            return Err(Error::Capability(format!("{total} grid nodes exceed the limit {MAX_NODES}")));
        }
        let dim = grid.dim();
        let lw: Vec<f64> = (0..total)
            .into_par_iter()
            .map_init(
                || vec![0.0; dim],
                |z, idx| {
                    grid.coords(idx, z);
                    if mask(z) { log_w(z) } else { f64::NEG_INFINITY }
                },
            )
            .collect();
        let max = lw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return Err(Error::Argument("no grid node lies in the masked set".into()));
        }
        let w: Vec<f64> = lw.iter().map(|l| (l - max).exp()).collect();
        let mut slot = vec![usize::MAX; total];
        let mut active = Vec::new();
        for (idx, &wi) in w.iter().enumerate() {
            if wi > 0.0 {
                slot[idx] = active.len();
                active.push(idx);
            }
        }
        let masked = total - active.len();
        let mut edges = Vec::new();
        let mut stride = 1;
        for a in &grid.axes {
            let ih2 = 1.0 / (a.h() * a.h());
            for (s, &idx) in active.iter().enumerate() {
                if (idx / stride) % a.n + 1 < a.n {
                    let t = slot[idx + stride];
                    if t != usize::MAX {
                        edges.push((s, t, (w[idx] * w[idx + stride]).sqrt() * ih2));
                    }
                }
            }
            stride *= a.n;
        }
        let weights: Vec<f64> = active.iter().map(|&i| w[i]).collect();
        let mut form = Self { grid: grid.clone(), active, weights, edges, masked, components: 1, warnings: Vec::new() };
        form.keep_heaviest_component();
        Ok(form)
    }

    fn keep_heaviest_component(&mut self) {
        let n = self.active.len();
        let mut adj = vec![Vec::new(); n];
        for &(i, j, _) in &self.edges {
            adj[i].push(j);
            adj[j].push(i);
        }
        let mut comp = vec![usize::MAX; n];
        let mut mass = Vec::new();
        for s in 0..n {
            if comp[s] != usize::MAX {
                continue;
            }
            let c = mass.len();
            let mut m = 0.0;
            let mut stack = vec![s];
            comp[s] = c;
            while let Some(i) = stack.pop() {
                m += self.weights[i];
                for &j in &adj[i] {
                    if comp[j] == usize::MAX {
                        comp[j] = c;
                        stack.push(j);
                    }
                }
            }
            mass.push(m);
        }
        self.components = mass.len();
        if mass.len() <= 1 {
            return;
        }
        let keep = (0..mass.len()).max_by(|&a, &b| mass[a].total_cmp(&mass[b])).unwrap();
        self.warnings.push(format!(
            "masked grid graph has {} components; kept the heaviest ({:.3e} of the mass)",
            mass.len(),
            mass[keep] / mass.iter().sum::<f64>()
        ));
        let mut remap = vec![usize::MAX; n];
        let (mut active, mut weights) = (Vec::new(), Vec::new());
        for i in 0..n {
            if comp[i] == keep {
                remap[i] = active.len();
                active.push(self.active[i]);
                weights.push(self.weights[i]);
            }
        }
        self.masked += n - active.len();
        self.edges = self
            .edges
            .iter()
            .filter(|e| comp[e.0] == keep)
            .map(|&(i, j, c)| (remap[i], remap[j], c))
            .collect();
        self.active = active;
        self.weights = weights;
    }

    pub fn len(&self) -> usize {
        self.active.len()
    }

    pub fn is_empty(&self) -> bool {
        self.active.is_empty()
    }

    pub fn energy(&self, f: &[f64]) -> f64 {
        self.edges.iter().map(|&(i, j, c)| c * (f[i] - f[j]).powi(2)).sum()
    }

    pub fn mass(&self, f: &[f64]) -> f64 {
        self.weights.iter().zip(f).map(|(w, x)| w * x * x).sum()
    }

    pub fn weighted_mean(&self, f: &[f64]) -> f64 {
        let m: f64 = self.weights.iter().sum();
        self.weights.iter().zip(f).map(|(w, x)| w * x).sum::<f64>() / m
    }

    /// Coordinates of active node `s`.
    pub fn node(&self, s: usize) -> Vec<f64> {
        let mut z = vec![0.0; self.grid.dim()];
        self.grid.coords(self.active[s], &mut z);
        z
    }

    /// `out = B y` with `B = M^{-1/2} A M^{-1/2}`.
    fn apply_b(&self, isw: &[f64], y: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for &(i, j, c) in &self.edges {
            let d = c * (isw[i] * y[i] - isw[j] * y[j]);
            out[i] += isw[i] * d;
            out[j] -= isw[j] * d;
        }
    }

    fn diag_b(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.len()];
        for &(i, j, c) in &self.edges {
            d[i] += c / self.weights[i];
            d[j] += c / self.weights[j];
        }
        d
    }

    /// Dense `B = M^{-1/2} A M^{-1/2}`.
    pub fn dense_b(&self) -> Result<DMatrix<f64>> {
        let n = self.len();
        if n > MAX_DENSE_NODES {
            return Err(Error::Capability(format!("{n} nodes exceed the dense limit {MAX_DENSE_NODES}")));
        }
        let mut b = DMatrix::zeros(n, n);
        for &(i, j, c) in &self.edges {
            let s = (self.weights[i] * self.weights[j]).sqrt();
            b[(i, i)] += c / self.weights[i];
            b[(j, j)] += c / self.weights[j];
            b[(i, j)] -= c / s;
            b[(j, i)] -= c / s;
        }
        Ok(b)
    }
}

/// `form(f) / mass(f - mean)`, an upper bound on `lambda_1`.
pub fn rayleigh_quotient(form: &DiscreteForm, f: &[f64]) -> Result<f64> {
    if f.len() != form.len() {
        return Err(Error::Argument("trial vector length differs from the node count".into()));
    }
    let m = form.weighted_mean(f);
    let g: Vec<f64> = f.iter().map(|x| x - m).collect();
    let den = form.mass(&g);
    let scale = form.mass(f).max(f64::MIN_POSITIVE);
    if den <= 1e-24 * scale {
        return Err(Error::Argument("trial function is constant on the grid".into()));
    }
    Ok(form.energy(f) / den)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenResult {
    pub lambda: f64,
    /// Eigenfunction in the original (unweighted) variables.
    pub vector: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

fn dotv(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn project_out(y: &mut [f64], q: &[f64]) {
    let c = dotv(y, q);
    y.iter_mut().zip(q).for_each(|(a, b)| *a -= c * b);
}

/// Jacobi-preconditioned CG for `(B + s q q^T) y = r`.
fn pcg(form: &DiscreteForm, isw: &[f64], q: &[f64], shift: f64, diag: &[f64], rhs: &[f64], tol: f64) -> Result<Vec<f64>> {
    let n = rhs.len();
    let op = |y: &[f64], out: &mut [f64]| {
        form.apply_b(isw, y, out);
        let c = shift * dotv(q, y);
        out.iter_mut().zip(q).for_each(|(o, qi)| *o += c * qi);
    };
    let mut x = vec![0.0; n];
    let mut r = rhs.to_vec();
    let mut z: Vec<f64> = r.iter().zip(diag).map(|(a, d)| a / d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dotv(&r, &z);
    let r0 = dotv(rhs, rhs).sqrt();
    for _ in 0..(20 * n).max(1000) {
        op(&p, &mut ap);
        let pap = dotv(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::Numerics("conjugate gradient lost positivity".into()));
        }
        let a = rz / pap;
        x.iter_mut().zip(&p).for_each(|(xi, pi)| *xi += a * pi);
        r.iter_mut().zip(&ap).for_each(|(ri, api)| *ri -= a * api);
        if dotv(&r, &r).sqrt() <= tol * r0 {
            return Ok(x);
        }
        z.iter_mut().zip(&r).zip(diag).for_each(|((zi, ri), d)| *zi = ri / d);
        let rz_new = dotv(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        p.iter_mut().zip(&z).for_each(|(pi, zi)| *pi = zi + beta * *pi);
    }
    Err(Error::Numerics("conjugate gradient did not converge".into()))
}

/// Smallest nonzero eigenvalue by inverse iteration on the complement of the
/// constants, stopping when the Rayleigh quotient changes by less than `tol`
/// relatively.
pub fn smallest_nonzero_eigenvalue(form: &DiscreteForm, tol: f64) -> Result<EigenResult> {
    let n = form.len();
    if n < 2 || form.edges.is_empty() {
        return Err(Error::Argument("the form needs at least two connected nodes".into()));
    }
    let sw: Vec<f64> = form.weights.iter().map(|w| w.sqrt()).collect();
    let isw: Vec<f64> = sw.iter().map(|s| 1.0 / s).collect();
    let qn = dotv(&sw, &sw).sqrt();
    let q: Vec<f64> = sw.iter().map(|s| s / qn).collect();
    let mut diag = form.diag_b();
    let shift = diag.iter().copied().fold(0.0, f64::max);
    diag.iter_mut().zip(&q).for_each(|(d, qi)| *d += shift * qi * qi);
    let mut rng = stream_rng(0x5eed, 3, n as u64);
    let mut y: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    project_out(&mut y, &q);
    let mut by = vec![0.0; n];
    let mut prev = f64::INFINITY;
    for it in 1..=500 {
        let nrm = dotv(&y, &y).sqrt();
        y.iter_mut().for_each(|a| *a /= nrm);
        let mut next = pcg(form, &isw, &q, shift, &diag, &y, 1e-12)?;
        project_out(&mut next, &q);
        let nrm = dotv(&next, &next).sqrt();
        next.iter_mut().for_each(|a| *a /= nrm);
        form.apply_b(&isw, &next, &mut by);
        let lambda = dotv(&next, &by);
        y = next;
        if (lambda - prev).abs() <= tol * lambda.abs() {
            let residual = by.iter().zip(&y).map(|(b, v)| (b - lambda * v).powi(2)).sum::<f64>().sqrt();
            let vector = y.iter().zip(&isw).map(|(a, s)| a * s).collect();
            return Ok(EigenResult { lambda, vector, iterations: it, residual });
        }
        prev = lambda;
    }
    Err(Error::Numerics("inverse iteration did not converge".into()))
}

/// Dense oracle: the second-smallest eigenvalue of `B`.
pub fn dense_smallest_nonzero(form: &DiscreteForm) -> Result<f64> {
    let b = form.dense_b()?;
    let mut ev: Vec<f64> = SymmetricEigen::new(b).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev.get(1).copied().ok_or_else(|| Error::Argument("need at least two nodes".into()))
}

/// Closed-form `lambda_1` of the unit interval with `n` uniform cells.
pub fn uniform_interval_lambda1(n: usize) -> f64 {
    let n = n as f64;
    4.0 * n * n * (std::f64::consts::PI / (2.0 * n)).sin().powi(2)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PoincareEstimate {
    pub rho: f64,
    pub lambdas: Vec<f64>,
    pub points_per_axis: Vec<Vec<usize>>,
    pub active_nodes: Vec<usize>,
    /// `|lambda_k - lambda_{k+1}|` between successive refinements
    pub gaps: Vec<f64>,
    /// successive gap ratios; at least 2 for a resolved estimate
    pub gap_ratios: Vec<f64>,
    /// second-order extrapolation from the two finest levels
    pub richardson_lambda: f64,
    pub iterations: Vec<usize>,
    pub warnings: Vec<String>,
}

impl PoincareEstimate {
    pub fn gaps_shrink(&self) -> bool {
        !self.gap_ratios.is_empty() && self.gap_ratios.iter().all(|r| *r >= 2.0)
    }
}

/// Solves at `levels` successive doublings of `grid`; `rho` comes from the finest.
pub fn local_poincare_estimate(
    grid: &GridSpec,
    log_w: &(dyn Fn(&[f64]) -> f64 + Sync),
    mask: &(dyn Fn(&[f64]) -> bool + Sync),
    levels: usize,
) -> Result<PoincareEstimate> {
    if levels == 0 {
        return Err(Error::Argument("at least one refinement level is required".into()));
    }
    let mut est = PoincareEstimate::default();
    for l in 0..levels {
        let g = grid.refined(1 << l);
        let form = DiscreteForm::assemble(&g, log_w, mask)?;
        let eig = smallest_nonzero_eigenvalue(&form, 1e-8)?;
        est.lambdas.push(eig.lambda);
        est.points_per_axis.push(g.axes.iter().map(|a| a.n).collect());
        est.active_nodes.push(form.len());
        est.iterations.push(eig.iterations);
        est.warnings.extend(form.warnings);
    }
    est.gaps = est.lambdas.windows(2).map(|w| (w[0] - w[1]).abs()).collect();
    est.gap_ratios = est.gaps.windows(2).map(|w| w[0] / w[1]).collect();
    let last = *est.lambdas.last().unwrap();
    est.richardson_lambda = match est.lambdas.len() {
        1 => last,
        k => last + (last - est.lambdas[k - 2]) / 3.0,
    };
    if !(last > 0.0) {
        return Err(Error::Numerics("nonpositive eigenvalue".into()));
    }
    est.rho = 1.0 / last;
    if levels >= 3 && !est.gaps_shrink() {
        est.warnings.push("refinement gaps do not shrink by a factor of 2".into());
    }
    Ok(est)
}

/// `rho_K` for `mu ∝ exp(-H/T)` restricted to `K`, from a phase-space grid.
pub fn estimate_rho_k(
    model: &PotentialModel,
    mp: &ModelParams,
    k_spec: &KSpec,
    n: usize,
    cutoff: f64,
    levels: usize,
) -> Result<(RhoK, PoincareEstimate)> {
    let grid = GridSpec::covering_k(model, mp, k_spec, n, cutoff)?;
    let d = model.dim();
    let t = mp.temperature;
    let split = |z: &[f64]| PhasePoint { x: z[..d].to_vec(), v: z[d..].to_vec() };
    let log_w = |z: &[f64]| -model.hamiltonian(&split(z)) / t;
    let mask = |z: &[f64]| {
        let p = split(z);
        k_spec.contains(model, &p.x, &p.v)
    };
    let est = local_poincare_estimate(&grid, &log_w, &mask, levels)?;
    let rho = RhoK {
        value: est.rho,
        source: RhoSource::SpectralEstimated,
        diagnostics: Some(json!({
            "grid": grid,
            "cutoff_T": cutoff,
            "lambda_1": est.lambdas,
            "points_per_axis": est.points_per_axis,
            "active_nodes": est.active_nodes,
            "richardson_gaps": est.gaps,
            "gap_ratios": est.gap_ratios,
            "richardson_lambda": est.richardson_lambda,
            "warnings": est.warnings,
        })),
    };
    Ok((rho, est))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(n: usize) -> GridSpec {
        GridSpec::new(vec![Axis { lo: 0.0, hi: 1.0, n }]).unwrap()
    }

    fn flat(_: &[f64]) -> f64 {
        0.0
    }

    fn all(_: &[f64]) -> bool {
        true
    }

    #[test]
    fn uniform_matches_closed_form() {
        let form = DiscreteForm::assemble(&unit(64), &flat, &all).unwrap();
        let e = smallest_nonzero_eigenvalue(&form, 1e-12).unwrap();
        assert!((e.lambda - uniform_interval_lambda1(64)).abs() < 1e-8 * e.lambda);
        assert!((dense_smallest_nonzero(&form).unwrap() - e.lambda).abs() < 1e-8 * e.lambda);
    }

    #[test]
    fn eigenvector_is_rayleigh_minimizer() {
        let form = DiscreteForm::assemble(&unit(32), &|z: &[f64]| -z[0] * z[0], &all).unwrap();
        let e = smallest_nonzero_eigenvalue(&form, 1e-12).unwrap();
        let rq = rayleigh_quotient(&form, &e.vector).unwrap();
        assert!((rq - e.lambda).abs() < 1e-8 * e.lambda);
        let lin: Vec<f64> = (0..form.len()).map(|s| form.node(s)[0]).collect();
        assert!(rayleigh_quotient(&form, &lin).unwrap() >= e.lambda);
    }

    #[test]
    fn constant_trial_rejected() {
        let form = DiscreteForm::assemble(&unit(16), &flat, &all).unwrap();
        assert!(rayleigh_quotient(&form, &vec![2.0; 16]).is_err());
        assert_eq!(form.energy(&vec![2.0; 16]), 0.0);
    }

    #[test]
    fn capability_and_argument_errors() {
        let a = Axis { lo: 0.0, hi: 1.0, n: 16 };
        assert!(matches!(GridSpec::new(vec![a; 5]), Err(Error::Capability(_))));
        assert!(GridSpec::new(vec![Axis { n: 8, ..a }]).is_err());
        let m = PotentialModel::single_well(3).unwrap();
        let mp = ModelParams::new(1.0, 1.0, 1, 3).unwrap();
        let ks = KSpec::new(&mp, 100.0);
        assert!(matches!(GridSpec::covering_k(&m, &mp, &ks, 16, 20.0), Err(Error::Capability(_))));
    }

    #[test]
    fn disconnected_mask_warns() {
        let mask = |z: &[f64]| (z[0] - 0.5).abs() > 0.1;
        let form = DiscreteForm::assemble(&unit(40), &|z: &[f64]| z[0], &mask).unwrap();
        assert_eq!(form.components, 2);
        assert_eq!(form.warnings.len(), 1);
        assert!(form.node(0)[0] > 0.5);
    }

    #[test]
    fn two_dimensional_product() {
        // product of two unit intervals: lambda_1 equals the 1-D value
        let a = Axis { lo: 0.0, hi: 1.0, n: 16 };
        let form = DiscreteForm::assemble(&GridSpec::new(vec![a, a]).unwrap(), &flat, &all).unwrap();
        let e = smallest_nonzero_eigenvalue(&form, 1e-12).unwrap();
        assert!((e.lambda - uniform_interval_lambda1(16)).abs() < 1e-7 * e.lambda);
        assert!((dense_smallest_nonzero(&form).unwrap() - e.lambda).abs() < 1e-7 * e.lambda);
    }
}
