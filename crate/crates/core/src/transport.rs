//! Optimal-transport geometry on the rule simplex.
//!
//! Rules are nodes of a weighted graph whose conductances ω_ij decay with
//! rule distance. For a distribution p over rules the measure-dependent
//! Laplacian has off-diagonal entries −ω_ij(p_i + p_j); its pseudoinverse,
//! pulled back through the softmax Jacobian, is the metric
//! `G(ξ) = Jᵀ L(p)† J` used by the natural-gradient and proximal steps.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};

use crate::beliefs::{softmax, RuleParams};
use crate::error::{Error, Result};
use crate::metagraph::{rule_distance, RewriteRule};

/// Symmetric weighted graph over rule indices. Edges are stored once, as
/// `(i, j)` with `i < j`.
#[derive(Clone, Debug, PartialEq)]
pub struct RuleGraph {
    n: usize,
    edges: BTreeMap<(usize, usize), f64>,
}

impl RuleGraph {
    pub fn new(n: usize) -> Self {
        RuleGraph {
            n,
            edges: BTreeMap::new(),
        }
    }

    pub fn add_edge(&mut self, i: usize, j: usize, w: f64) {
        if i != j && w > 0.0 {
            self.edges.insert((i.min(j), i.max(j)), w);
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.edges.get(&(i.min(j), i.max(j))).copied().unwrap_or(0.0)
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.edges.iter().map(|(&(i, j), &w)| (i, j, w))
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let mut uf = UnionFind::new(self.n);
        for (i, j, _) in self.edges() {
            uf.union(i, j);
        }
        (1..self.n).all(|i| uf.find(i) == uf.find(0))
    }
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind((0..n).collect())
    }

    fn find(&mut self, mut i: usize) -> usize {
        while self.0[i] != i {
            self.0[i] = self.0[self.0[i]];
            i = self.0[i];
        }
        i
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.0[ra.max(rb)] = ra.min(rb);
        true
    }
}

/// Pairwise rule distances.
pub fn distance_matrix(rules: &[RewriteRule]) -> Vec<Vec<f64>> {
    let n = rules.len();
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let x = rule_distance(&rules[i], &rules[j]);
            d[i][j] = x;
            d[j][i] = x;
        }
    }
    d
}

/// Median of the off-diagonal distances, or 1 when there are none or the
/// median is zero.
pub fn median_distance(d: &[Vec<f64>]) -> f64 {
    let mut v: Vec<f64> = (0..d.len())
        .flat_map(|i| (i + 1..d.len()).map(move |j| (i, j)))
        .map(|(i, j)| d[i][j])
        .collect();
    if v.is_empty() {
        return 1.0;
    }
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    let m = if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    };
    if m > 0.0 {
        m
    } else {
        1.0
    }
}

/// Mutual k-nearest-neighbour graph with `ω = exp(−d/σ)`, made connected by
/// adding the shortest edges between components. `sigma = None` uses the
/// median pairwise distance.
pub fn build_rule_graph(rules: &[RewriteRule], k: usize, sigma: Option<f64>) -> RuleGraph {
    graph_from_distances(&distance_matrix(rules), k, sigma)
}

pub fn graph_from_distances(d: &[Vec<f64>], k: usize, sigma: Option<f64>) -> RuleGraph {
    let n = d.len();
    let sigma = sigma.unwrap_or_else(|| median_distance(d));
    let omega = |x: f64| (-x / sigma).exp();
    let mut g = RuleGraph::new(n);
    let knn: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            let mut others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
            others.sort_by(|&a, &b| d[i][a].total_cmp(&d[i][b]).then(a.cmp(&b)));
            others.truncate(k);
            others
        })
        .collect();
    for i in 0..n {
        for &j in &knn[i] {
            if knn[j].contains(&i) {
                g.add_edge(i, j, omega(d[i][j]));
            }
        }
    }
    let mut uf = UnionFind::new(n);
    for (i, j, _) in g.edges().collect::<Vec<_>>() {
        uf.union(i, j);
    }
    let mut pairs: Vec<(usize, usize)> =
        (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    pairs.sort_by(|a, b| d[a.0][a.1].total_cmp(&d[b.0][b.1]).then(a.cmp(b)));
    for (i, j) in pairs {
        if uf.union(i, j) {
            g.add_edge(i, j, omega(d[i][j]));
        }
    }
    g
}

/// `L(p) = D̃ − W̃` with `W̃_ij = ω_ij (p_i + p_j)`.
pub fn laplacian(graph: &RuleGraph, p: &[f64]) -> Result<DMatrix<f64>> {
    let n = graph.len();
    if p.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: p.len(),
        });
    }
    let mut l = DMatrix::zeros(n, n);
    for (i, j, w) in graph.edges() {
        let c = w * (p[i] + p[j]);
        l[(i, j)] -= c;
        l[(j, i)] -= c;
        l[(i, i)] += c;
        l[(j, j)] += c;
    }
    Ok(l)
}

fn check_symmetric(m: &DMatrix<f64>) -> Result<()> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            got: m.ncols(),
        });
    }
    let scale = m.amax().max(1.0);
    let asym = (m - m.transpose()).amax();
    if asym > 1e-9 * scale {
        return Err(Error::NotSymmetric(asym));
    }
    Ok(())
}

/// Symmetric eigenpairs, eigenvalues ascending.
pub fn spectrum(m: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    check_symmetric(m)?;
    let eig = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..m.nrows()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = DMatrix::from_fn(m.nrows(), m.nrows(), |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((vals, vecs))
}

/// Spectral pseudoinverse: eigenvalues above `tol·λ_max` are inverted, the
/// rest dropped.
pub fn pinv(l: &DMatrix<f64>, tol: f64) -> Result<DMatrix<f64>> {
    check_symmetric(l)?;
    let n = l.nrows();
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let eig = l.clone().symmetric_eigen();
    let lmax = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let mut out = DMatrix::zeros(n, n);
    if lmax <= 0.0 {
        return Ok(out);
    }
    for k in 0..n {
        let lam = eig.eigenvalues[k];
        if lam > tol * lmax {
            let v = eig.eigenvectors.column(k);
            out += (v * v.transpose()) / lam;
        }
    }
    Ok((&out + out.transpose()) * 0.5)
}

/// Default relative cutoff for [`pinv`].
pub const PINV_TOL: f64 = 1e-10;

/// `∂p/∂ξ = diag(p) − p pᵀ` for the softmax.
pub fn softmax_jacobian(p: &[f64]) -> DMatrix<f64> {
    let n = p.len();
    DMatrix::from_fn(n, n, |i, j| if i == j { p[i] - p[i] * p[j] } else { -p[i] * p[j] })
}

/// `G = Jᵀ L† J`, symmetrized.
pub fn metric_tensor(j: &DMatrix<f64>, ldag: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if j.nrows() != ldag.ncols() || ldag.nrows() != ldag.ncols() {
        return Err(Error::DimensionMismatch {
            expected: ldag.ncols(),
            got: j.nrows(),
        });
    }
    let g = j.transpose() * ldag * j;
    Ok((&g + g.transpose()) * 0.5)
}

/// Metric at ξ for a fixed graph.
pub fn metric_at(graph: &RuleGraph, params: &RuleParams) -> Result<DMatrix<f64>> {
    let p = softmax(&params.logits);
    let l = laplacian(graph, &p)?;
    metric_tensor(&softmax_jacobian(&p), &pinv(&l, PINV_TOL)?)
}

/// A loss on the rule simplex with a closed-form gradient in p.
pub trait Loss {
    fn value(&self, p: &[f64]) -> Result<f64>;
    fn grad_p(&self, p: &[f64]) -> Result<Vec<f64>>;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GradMode {
    Analytic,
    FiniteDifference,
}

/// Central-difference step in ξ.
pub const FD_STEP: f64 = 1e-5;

/// `∇_ξ F(p(ξ))`, either `Jᵀ ∇_p F` or by central differences.
pub fn grad_loss(params: &RuleParams, loss: &dyn Loss, mode: GradMode) -> Result<Vec<f64>> {
    match mode {
        GradMode::Analytic => {
            let p = softmax(&params.logits);
            let gp = DVector::from_vec(loss.grad_p(&p)?);
            let g = softmax_jacobian(&p).transpose() * gp;
            Ok(g.iter().copied().collect())
        }
        GradMode::FiniteDifference => {
            let f = |x: &[f64]| loss.value(&softmax(x));
            finite_difference(&params.logits, &f)
        }
    }
}

/// Central-difference gradient of `f` at `x` with step [`FD_STEP`].
pub fn finite_difference(x: &[f64], f: &dyn Fn(&[f64]) -> Result<f64>) -> Result<Vec<f64>> {
    let mut xs = x.to_vec();
    let mut out = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let orig = xs[i];
        xs[i] = orig + FD_STEP;
        let fp = f(&xs)?;
        xs[i] = orig - FD_STEP;
        let fm = f(&xs)?;
        xs[i] = orig;
        out.push((fp - fm) / (2.0 * FD_STEP));
    }
    Ok(out)
}

/// `1e-6·tr(G)/N`, floored so the system stays solvable when G vanishes.
pub fn default_ridge(g: &DMatrix<f64>) -> f64 {
    let n = g.nrows().max(1) as f64;
    (1e-6 * g.trace() / n).max(1e-12)
}

/// Solves `(G + ridge·I) δ = grad` and returns `ξ − h·δ`.
pub fn natural_step(
    params: &RuleParams,
    grad: &[f64],
    g: &DMatrix<f64>,
    h: f64,
    ridge: f64,
) -> Result<RuleParams> {
    let n = params.len();
    if grad.len() != n || g.nrows() != n || g.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: grad.len().max(g.nrows()),
        });
    }
    if !(h > 0.0) {
        return Err(Error::StepRejected(format!("step size {h}")));
    }
    let a = g + DMatrix::identity(n, n) * ridge;
    let b = DVector::from_column_slice(grad);
    let delta = match a.clone().cholesky() {
        Some(c) => c.solve(&b),
        None => a
            .lu()
            .solve(&b)
            .ok_or_else(|| Error::StepRejected("singular metric".into()))?,
    };
    if delta.iter().any(|x| !x.is_finite()) {
        return Err(Error::StepRejected("non-finite natural gradient".into()));
    }
    RuleParams::new(
        params
            .logits
            .iter()
            .zip(delta.iter())
            .map(|(x, d)| x - h * d)
            .collect(),
    )
}

/// Result of a proximal step.
#[derive(Clone, Debug, PartialEq)]
pub struct JkoOutcome {
    pub params: RuleParams,
    /// False when no iterate improved on the starting objective; `params`
    /// is then the starting point.
    pub progressed: bool,
    pub iterations: usize,
}

pub const JKO_MAX_ITERS: usize = 20;

/// Proximal step `argmin_ξ F(ξ) + (ξ−ξ_k)ᵀ G (ξ−ξ_k) / (2h)` by damped
/// Newton with backtracking. Gradient and Hessian of `F` are taken by
/// finite differences.
pub fn jko_step(
    params: &RuleParams,
    f: &dyn Fn(&[f64]) -> Result<f64>,
    g: &DMatrix<f64>,
    h: f64,
) -> Result<JkoOutcome> {
    let n = params.len();
    if g.nrows() != n || g.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: g.nrows(),
        });
    }
    if !(h > 0.0) {
        return Err(Error::StepRejected(format!("step size {h}")));
    }
    let x0 = DVector::from_column_slice(&params.logits);
    let prox = |x: &DVector<f64>| {
        let d = x - &x0;
        d.dot(&(g * &d)) / (2.0 * h)
    };
    let phi = |x: &DVector<f64>| -> Result<f64> { Ok(f(x.as_slice())? + prox(x)) };
    let phi0 = phi(&x0)?;
    let mut x = x0.clone();
    let mut fx = phi0;
    let mut iters = 0;
    const HESS_STEP: f64 = 1e-4;
    for _ in 0..JKO_MAX_ITERS {
        iters += 1;
        let gf = DVector::from_vec(finite_difference(x.as_slice(), f)?);
        let grad = &gf + g * (&x - &x0) / h;
        if grad.norm() < 1e-12 {
            break;
        }
        let mut hess = g / h;
        let mut xs = x.clone();
        for i in 0..n {
            let orig = xs[i];
            xs[i] = orig + HESS_STEP;
            let gp = DVector::from_vec(finite_difference(xs.as_slice(), f)?);
            xs[i] = orig - HESS_STEP;
            let gm = DVector::from_vec(finite_difference(xs.as_slice(), f)?);
            xs[i] = orig;
            let col = (gp - gm) / (2.0 * HESS_STEP);
            for r in 0..n {
                hess[(r, i)] += 0.5 * col[r];
                hess[(i, r)] += 0.5 * col[r];
            }
        }
        // damp until the Newton system is positive definite
        let scale = hess.amax().max(1e-12);
        let mut lambda = 0.0;
        let dir = loop {
            let m = &hess + DMatrix::identity(n, n) * lambda;
            if let Some(c) = m.cholesky() {
                break c.solve(&grad);
            }
            lambda = if lambda == 0.0 { 1e-10 * scale } else { lambda * 10.0 };
            if lambda > 1e6 * scale {
                break grad.clone() / scale;
            }
        };
        let slope = grad.dot(&dir);
        let mut t = 1.0;
        let mut moved = false;
        while t > 1e-10 {
            let cand = &x - &dir * t;
            let fc = phi(&cand)?;
            if fc <= fx - 1e-4 * t * slope {
                x = cand;
                fx = fc;
                moved = true;
                break;
            }
            t *= 0.5;
        }
        if !moved || (&dir * t).norm() < 1e-14 {
            break;
        }
    }
    if fx < phi0 {
        Ok(JkoOutcome {
            params: RuleParams::new(x.iter().copied().collect())?,
            progressed: true,
            iterations: iters,
        })
    } else {
        Ok(JkoOutcome {
            params: params.clone(),
            progressed: false,
            iterations: iters,
        })
    }
}

/// Row-per-line CSV of a matrix, full precision.
pub fn matrix_csv(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for r in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|c| format!("{:?}", m[(r, c)])).collect();
        let _ = writeln!(out, "{}", row.join(","));
    }
    out
}
