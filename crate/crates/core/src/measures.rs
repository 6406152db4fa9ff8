//! Design measures for the kernel-difference criterion
//! `φ_p(ξ) = ∫∫ ψ^p(‖x − x'‖) dξ(x) dξ(x')`.

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample as sample_indices;
use serde::{Deserialize, Serialize};

use crate::criteria::dist::{calibrate, Calibration};
use crate::design::{distance, Design, DesignSpace};
use crate::error::{positive, Error, Result};
use crate::kernels::{find_delta, DeltaPeak, ModelPair};
use crate::rng::stream_rng;

/// Support points closer than this are merged on construction.
pub const MERGE_RADIUS: f64 = 1e-10;
/// Tolerance of the idealised spike `ψ*`.
pub const SPIKE_TOL: f64 = 1e-9;

/// Support points with nonnegative weights summing to one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignMeasure {
    support: Design,
    weights: Vec<f64>,
}

impl DesignMeasure {
    /// Validates the weights and merges coincident support points.
    pub fn new(support: Design, weights: Vec<f64>) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::InvalidMeasure("empty support".into()));
        }
        if weights.len() != support.len() {
            return Err(Error::DimensionMismatch {
                expected: support.len(),
                got: weights.len(),
            });
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidMeasure("weights must be finite and nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidMeasure(format!("weights sum to {total}, not 1")));
        }
        Ok(merge(&Self { support, weights }, MERGE_RADIUS))
    }

    pub fn uniform(support: Design) -> Result<Self> {
        let n = support.len();
        Self::new(support, vec![1.0 / n as f64; n])
    }

    /// `ξ_n = (1/n) Σ δ_{x_i}`, keeping repeated points as separate atoms.
    pub fn empirical(design: &Design) -> Result<Self> {
        if design.is_empty() {
            return Err(Error::EmptyDesign);
        }
        let n = design.len();
        Ok(Self {
            support: design.clone().without_observations(),
            weights: vec![1.0 / n as f64; n],
        })
    }

    /// Drops weights below `threshold` and rescales the rest.
    pub fn pruned(&self, threshold: f64) -> Result<Self> {
        let keep: Vec<usize> = (0..self.len()).filter(|&i| self.weights[i] >= threshold).collect();
        if keep.is_empty() {
            return Err(Error::InvalidMeasure("all weights pruned".into()));
        }
        let total: f64 = keep.iter().map(|&i| self.weights[i]).sum();
        Ok(Self {
            support: self.support.subset(&keep),
            weights: keep.iter().map(|&i| self.weights[i] / total).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.support.dim()
    }

    pub fn support(&self) -> &Design {
        &self.support
    }

    pub fn point(&self, i: usize) -> &[f64] {
        self.support.point(i)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Merges support points within `radius` of each other (single linkage)
/// into their weighted centroid.
pub fn merge(xi: &DesignMeasure, radius: f64) -> DesignMeasure {
    let n = xi.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for i in 0..n {
        for j in 0..i {
            if distance(xi.point(i), xi.point(j)) <= radius {
                let (a, b) = (root(&mut parent, i), root(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let d = xi.dim();
    let mut groups: Vec<(usize, f64, Vec<f64>)> = Vec::new();
    for i in 0..n {
        let r = root(&mut parent, i);
        let w = xi.weights[i];
        let slot = match groups.iter().position(|g| g.0 == r) {
            Some(s) => s,
            None => {
                groups.push((r, 0.0, vec![0.0; d]));
                groups.len() - 1
            }
        };
        let g = &mut groups[slot];
        g.1 += w;
        for (acc, &v) in g.2.iter_mut().zip(xi.point(i)) {
            *acc += w * v;
        }
    }
    let mut coords = Vec::with_capacity(groups.len() * d);
    let mut weights = Vec::with_capacity(groups.len());
    for (r, w, sum) in groups {
        if w > 0.0 {
            coords.extend(sum.iter().map(|s| s / w));
        } else {
            coords.extend_from_slice(xi.point(r));
        }
        weights.push(w);
    }
    DesignMeasure {
        support: Design::new(d, coords).expect("finite centroids"),
        weights,
    }
}

/// Support clusters for reporting: points within `1e-3·Δ` merged.
pub fn clusters(xi: &DesignMeasure, delta: f64) -> DesignMeasure {
    merge(xi, 1e-3 * delta)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum PsiMode {
    /// `|Ψ₁(t) − Ψ₀(t)|`, optionally divided by its maximum.
    FromKernels { pair: ModelPair, normalised: bool },
    /// `ψ*(t) = 1` if `t = Δ`, else 0.
    Idealised { delta: f64 },
}

/// The kernel-difference profile with its peak cached.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsiFunction {
    mode: PsiMode,
    peak: Option<DeltaPeak>,
}

impl PsiFunction {
    pub fn from_kernels(pair: &ModelPair, normalised: bool) -> Result<Self> {
        let peak = find_delta(pair, None)?;
        Ok(Self {
            mode: PsiMode::FromKernels {
                pair: *pair,
                normalised,
            },
            peak: Some(peak),
        })
    }

    /// Unnormalised profile without locating its peak; usable when the two
    /// kernels coincide.
    pub fn raw(pair: &ModelPair) -> Result<Self> {
        pair.validate()?;
        Ok(Self {
            mode: PsiMode::FromKernels {
                pair: *pair,
                normalised: false,
            },
            peak: None,
        })
    }

    pub fn idealised(delta: f64) -> Result<Self> {
        positive("delta", delta)?;
        Ok(Self {
            mode: PsiMode::Idealised { delta },
            peak: Some(DeltaPeak { delta, psi_max: 1.0 }),
        })
    }

    pub fn mode(&self) -> &PsiMode {
        &self.mode
    }

    pub fn is_idealised(&self) -> bool {
        matches!(self.mode, PsiMode::Idealised { .. })
    }

    /// `Δ`, the maximiser of `ψ`.
    pub fn delta(&self) -> Option<f64> {
        self.peak.map(|p| p.delta)
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self.mode {
            PsiMode::Idealised { delta } => {
                if (t - delta).abs() <= SPIKE_TOL {
                    1.0
                } else {
                    0.0
                }
            }
            PsiMode::FromKernels { pair, normalised } => {
                let v = pair.psi(t);
                match (normalised, self.peak) {
                    (true, Some(p)) => v / p.psi_max,
                    _ => v,
                }
            }
        }
    }

    /// `ψ^p(t)`; the spike ignores the exponent.
    pub fn pow(&self, t: f64, p: f64) -> f64 {
        match self.mode {
            PsiMode::Idealised { .. } => self.eval(t),
            _ => self.eval(t).powf(p),
        }
    }

    /// `ψ''(t)` by central differences with step `1e-5`.
    pub fn second_derivative(&self, t: f64) -> f64 {
        let h = 1e-5;
        (self.eval(t + h) - 2.0 * self.eval(t) + self.eval(t - h)) / (h * h)
    }
}

/// `Σᵢⱼ wᵢ wⱼ ψ^p(‖xᵢ − xⱼ‖)`.
pub fn phi_p_measure(psi: &PsiFunction, xi: &DesignMeasure, p: f64) -> f64 {
    let n = xi.len();
    let mut s = 0.0;
    for i in 0..n {
        s += xi.weights[i] * xi.weights[i] * psi.pow(0.0, p);
        for j in 0..i {
            s += 2.0 * xi.weights[i] * xi.weights[j] * psi.pow(distance(xi.point(i), xi.point(j)), p);
        }
    }
    s
}

/// `∫ψ^p(‖x − x'‖) dξ(x')`.
pub fn potential(psi: &PsiFunction, xi: &DesignMeasure, x: &[f64], p: f64) -> f64 {
    (0..xi.len())
        .map(|i| xi.weights[i] * psi.pow(distance(x, xi.point(i)), p))
        .sum()
}

/// `δ_ξ(x) = ∫ψ^p(‖x − x'‖) dξ(x') − φ_p(ξ)`.
pub fn delta_xi(psi: &PsiFunction, xi: &DesignMeasure, x: &[f64], p: f64) -> f64 {
    potential(psi, xi, x, p) - phi_p_measure(psi, xi, p)
}

/// `F_p(ξ; δ_x) = 2 δ_ξ(x)`.
pub fn directional_derivative(psi: &PsiFunction, xi: &DesignMeasure, x: &[f64], p: f64) -> f64 {
    2.0 * delta_xi(psi, xi, x, p)
}

/// Outcome of checking `δ_ξ(x) ≤ 0` over a grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub max_violation: f64,
    pub worst_point: Vec<f64>,
    /// Largest `|δ_ξ|` over support points of weight above `1e-6`.
    pub support_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

pub const CONDITION_TOL: f64 = 1e-6;

pub fn check_necessary_condition(
    psi: &PsiFunction,
    xi: &DesignMeasure,
    grid: &Design,
    p: f64,
    tol: f64,
) -> Result<ConditionReport> {
    if grid.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    let phi = phi_p_measure(psi, xi, p);
    let mut worst = (0, f64::NEG_INFINITY);
    for (i, x) in grid.points().enumerate() {
        let v = potential(psi, xi, x, p) - phi;
        if v > worst.1 {
            worst = (i, v);
        }
    }
    let support_residual = (0..xi.len())
        .filter(|&i| xi.weights[i] > 1e-6)
        .map(|i| (potential(psi, xi, xi.point(i), p) - phi).abs())
        .fold(0.0, f64::max);
    Ok(ConditionReport {
        max_violation: worst.1,
        worst_point: grid.point(worst.0).to_vec(),
        support_residual,
        tolerance: tol,
        pass: worst.1 <= tol,
    })
}

/// Vertices of a regular `d`-simplex with edge `Δ`: `v₀ = 0` and
/// `v_k = centroid(v₀..v_{k−1}) + Δ√((k+1)/(2k)) e_{k−1}`, then rotated by
/// `orientation` (identity if `None`) and shifted by `anchor`.
pub fn simplex_vertices(d: usize, delta: f64, anchor: &[f64], orientation: Option<&DMatrix<f64>>) -> Result<Design> {
    if d == 0 {
        return Err(Error::InvalidParameter {
            name: "d",
            value: 0.0,
            reason: "dimension must be at least 1",
        });
    }
    positive("delta", delta)?;
    if anchor.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: anchor.len(),
        });
    }
    let mut verts: Vec<DVector<f64>> = vec![DVector::zeros(d)];
    for k in 1..=d {
        let centroid = verts.iter().fold(DVector::zeros(d), |a, v| a + v) / k as f64;
        let mut v = centroid;
        v[k - 1] += delta * ((k + 1) as f64 / (2 * k) as f64).sqrt();
        verts.push(v);
    }
    let mut coords = Vec::with_capacity((d + 1) * d);
    for v in verts {
        let r = match orientation {
            Some(q) => q * v,
            None => v,
        };
        coords.extend(r.iter().zip(anchor).map(|(a, b)| a + b));
    }
    Design::new(d, coords)
}

/// `ξ*`: weight `1/(d+1)` on each vertex of a regular simplex.
pub fn simplex_measure(d: usize, delta: f64, anchor: &[f64], orientation: Option<&DMatrix<f64>>) -> Result<DesignMeasure> {
    DesignMeasure::uniform(simplex_vertices(d, delta, anchor, orientation)?)
}

/// `L = 2Δ√((d+1)/(2d))`, the distance from a vertex to its reflection
/// through the opposite face.
pub fn reflection_distance(d: usize, delta: f64) -> f64 {
    2.0 * delta * ((d + 1) as f64 / (2 * d) as f64).sqrt()
}

/// Reflection of vertex `k` through the centroid of the opposite face.
pub fn reflected_point(vertices: &Design, k: usize) -> Vec<f64> {
    let d = vertices.dim();
    let m = vertices.len();
    let mut c = vec![0.0; d];
    for j in (0..m).filter(|&j| j != k) {
        for (a, b) in c.iter_mut().zip(vertices.point(j)) {
            *a += b / (m - 1) as f64;
        }
    }
    c.iter().zip(vertices.point(k)).map(|(c, x)| 2.0 * c - x).collect()
}

/// `ξ̂`: vertex `k` of the simplex split into itself and its reflection,
/// each with weight `1/(2(d+1))`.
pub fn reflected_measure(d: usize, delta: f64, k: usize, anchor: &[f64], orientation: Option<&DMatrix<f64>>) -> Result<DesignMeasure> {
    let verts = simplex_vertices(d, delta, anchor, orientation)?;
    if k > d {
        return Err(Error::InvalidParameter {
            name: "k",
            value: k as f64,
            reason: "vertex index out of range",
        });
    }
    let star = reflected_point(&verts, k);
    let mut support = verts.clone();
    support.push(&star, None)?;
    let w = 1.0 / (d + 1) as f64;
    let mut weights = vec![w; d + 2];
    weights[k] = 0.5 * w;
    weights[d + 1] = 0.5 * w;
    DesignMeasure::new(support, weights)
}

/// Hessian of `δ_ξ*` at a vertex of a simplex measure.
#[derive(Clone, Debug, PartialEq)]
pub struct VertexHessian {
    pub matrix: DMatrix<f64>,
    pub eigenvalues: DVector<f64>,
    /// `p > 2`; below that, concavity at the vertices is not guaranteed.
    pub concavity_guaranteed: bool,
}

/// `(1/(d+1)) p ψ^{p−1}(Δ) ψ''(Δ)/Δ² Σᵢ (x₁ − xᵢ)(x₁ − xᵢ)ᵀ` at vertex
/// `vertex` of a simplex measure with edge `Δ`.
pub fn vertex_hessian(psi: &PsiFunction, xi: &DesignMeasure, p: f64, vertex: usize) -> Result<VertexHessian> {
    let delta = psi
        .delta()
        .ok_or(Error::InvalidMeasure("ψ has no located peak".into()))?;
    let d = xi.dim();
    if xi.len() != d + 1 || vertex > d {
        return Err(Error::InvalidMeasure("expected a simplex measure with d+1 points".into()));
    }
    let x1 = DVector::from_column_slice(xi.point(vertex));
    let mut sum = DMatrix::zeros(d, d);
    for i in (0..=d).filter(|&i| i != vertex) {
        let u = &x1 - DVector::from_column_slice(xi.point(i));
        sum.ger(1.0, &u, &u, 1.0);
    }
    let c = p * psi.eval(delta).powf(p - 1.0) * psi.second_derivative(delta) / (delta * delta * (d + 1) as f64);
    let matrix = sum * c;
    let eigenvalues = matrix.clone().symmetric_eigenvalues();
    Ok(VertexHessian {
        matrix,
        eigenvalues,
        concavity_guaranteed: p > 2.0,
    })
}

/// Result of Fedorov–Wynn iterations on a finite grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FedorovWynn {
    pub measure: DesignMeasure,
    /// `φ_p` before the first step and after each step.
    pub phi_trace: Vec<f64>,
    /// Largest directional derivative at the last iterate.
    pub max_derivative: f64,
    pub iterations: usize,
}

/// Prune threshold for Fedorov–Wynn weights.
pub const FW_PRUNE: f64 = 1e-8;

/// Uniform measure on a seeded random 3-point subset of `grid`.
pub fn random_initial(grid: &Design, seed: u64) -> Result<DesignMeasure> {
    let k = grid.len().min(3);
    if k == 0 {
        return Err(Error::EmptyCandidates);
    }
    let mut rng = stream_rng(seed, 0);
    let mut idx = sample_indices(&mut rng, grid.len(), k).into_vec();
    idx.sort_unstable();
    DesignMeasure::uniform(grid.subset(&idx))
}

/// Vertex-direction ascent on the measures supported by `grid`. Step `k`
/// moves mass `α_k = min(1/(k+2), α*)` to the grid point of largest
/// directional derivative, `α*` being the exact line-search optimum, so `φ_p`
/// never decreases.
pub fn fedorov_wynn(psi: &PsiFunction, grid: &Design, p: f64, iterations: usize, initial: &DesignMeasure) -> Result<FedorovWynn> {
    if grid.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    positive("p", p)?;
    let m = grid.len();
    let psi0 = psi.pow(0.0, p);
    let column = |x: &[f64]| -> Vec<f64> { grid.points().map(|g| psi.pow(distance(g, x), p)).collect() };

    // grid weights plus off-grid atoms from the initial measure
    let mut w = vec![0.0; m];
    let mut extra: Vec<(Vec<f64>, f64)> = Vec::new();
    for i in 0..initial.len() {
        let x = initial.point(i);
        match grid.points().position(|g| distance(g, x) <= MERGE_RADIUS) {
            Some(j) => w[j] += initial.weights[i],
            None => extra.push((x.to_vec(), initial.weights[i])),
        }
    }
    let mut g = vec![0.0; m];
    let recompute = |w: &[f64], extra: &[(Vec<f64>, f64)], g: &mut Vec<f64>| {
        g.iter_mut().for_each(|v| *v = 0.0);
        for (j, &wj) in w.iter().enumerate().filter(|(_, &wj)| wj > 0.0) {
            for (v, c) in g.iter_mut().zip(column(grid.point(j))) {
                *v += wj * c;
            }
        }
        for (x, wx) in extra {
            for (v, c) in g.iter_mut().zip(column(x)) {
                *v += wx * c;
            }
        }
    };
    let measure_of = |w: &[f64], extra: &[(Vec<f64>, f64)]| -> Result<DesignMeasure> {
        let mut coords = Vec::new();
        let mut ws = Vec::new();
        for (j, &wj) in w.iter().enumerate().filter(|(_, &wj)| wj > 0.0) {
            coords.extend_from_slice(grid.point(j));
            ws.push(wj);
        }
        for (x, wx) in extra {
            coords.extend_from_slice(x);
            ws.push(*wx);
        }
        let total: f64 = ws.iter().sum();
        ws.iter_mut().for_each(|v| *v /= total);
        DesignMeasure::new(Design::new(grid.dim(), coords)?, ws)
    };
    recompute(&w, &extra, &mut g);
    let phi_of = |w: &[f64], g: &[f64], extra: &[(Vec<f64>, f64)]| -> f64 {
        let on_grid: f64 = w.iter().zip(g).map(|(a, b)| a * b).sum();
        let off: f64 = extra
            .iter()
            .map(|(x, wx)| wx * potential_raw(psi, &w, grid, extra, x, p))
            .sum();
        on_grid + off
    };
    let mut phi = phi_of(&w, &g, &extra);
    let mut phi_trace = vec![phi];
    let mut max_der = f64::NAN;
    let mut done = 0;
    for k in 0..iterations {
        let (j, gmax) = g
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |b, (i, &v)| if v > b.1 { (i, v) } else { b });
        max_der = 2.0 * (gmax - phi);
        if !(gmax - phi > 1e-15 * phi.abs().max(1e-300)) {
            break;
        }
        let curv = 2.0 * gmax - phi - psi0;
        let alpha_opt = if curv > 0.0 { (gmax - phi) / curv } else { 1.0 };
        let alpha = (1.0 / (k + 2) as f64).min(alpha_opt);
        for v in w.iter_mut() {
            *v *= 1.0 - alpha;
        }
        for e in extra.iter_mut() {
            e.1 *= 1.0 - alpha;
        }
        w[j] += alpha;
        let col = column(grid.point(j));
        for (v, c) in g.iter_mut().zip(col) {
            *v = (1.0 - alpha) * *v + alpha * c;
        }
        phi = (1.0 - alpha).powi(2) * phi + 2.0 * alpha * (1.0 - alpha) * gmax + alpha * alpha * psi0;

        let pruned = w.iter().any(|&v| v > 0.0 && v < FW_PRUNE) || extra.iter().any(|e| e.1 < FW_PRUNE);
        if pruned {
            w.iter_mut().filter(|v| **v < FW_PRUNE).for_each(|v| *v = 0.0);
            extra.retain(|e| e.1 >= FW_PRUNE);
            let total: f64 = w.iter().sum::<f64>() + extra.iter().map(|e| e.1).sum::<f64>();
            w.iter_mut().for_each(|v| *v /= total);
            extra.iter_mut().for_each(|e| e.1 /= total);
            recompute(&w, &extra, &mut g);
            phi = phi_of(&w, &g, &extra);
        }
        phi_trace.push(phi);
        done = k + 1;
    }
    Ok(FedorovWynn {
        measure: measure_of(&w, &extra)?,
        phi_trace,
        max_derivative: max_der,
        iterations: done,
    })
}

fn potential_raw(psi: &PsiFunction, w: &[f64], grid: &Design, extra: &[(Vec<f64>, f64)], x: &[f64], p: f64) -> f64 {
    let on: f64 = w
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > 0.0)
        .map(|(j, &v)| v * psi.pow(distance(grid.point(j), x), p))
        .sum();
    let off: f64 = extra.iter().map(|(y, v)| v * psi.pow(distance(y, x), p)).sum();
    on + off
}

/// Settings of [`continuous_refine`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefineOptions {
    pub max_iter: usize,
    /// Stop once a full iteration improves `φ_p` by less than this, relatively.
    pub tol: f64,
    /// Step of the numerical position gradient.
    pub grad_step: f64,
}

impl Default for RefineOptions {
    fn default() -> Self {
        Self {
            max_iter: 2000,
            tol: 1e-13,
            grad_step: 1e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Refined {
    pub measure: DesignMeasure,
    pub phi_before: f64,
    pub phi_after: f64,
    pub iterations: usize,
    /// No step improved on the input, which is returned unchanged.
    pub unchanged: bool,
}

const ARMIJO: f64 = 1e-4;

/// Euclidean projection onto the probability simplex.
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut css = 0.0;
    let mut tau = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        css += ui;
        let t = (css - 1.0) / (i + 1) as f64;
        if ui - t > 0.0 {
            tau = t;
        }
    }
    v.iter().map(|&x| (x - tau).max(0.0)).collect()
}

/// Local ascent of `φ_p` over support positions and weights. Each iteration
/// takes a projected-gradient step on the weights and then a step on the
/// positions along `∇ₓ ∫ψ^p dξ` at each support point (the weight-free
/// direction), both with step halving. Positions stay in `space`; atoms whose
/// weight reaches zero are dropped.
pub fn continuous_refine(psi: &PsiFunction, xi: &DesignMeasure, p: f64, space: &DesignSpace, opts: &RefineOptions) -> Result<Refined> {
    positive("p", p)?;
    if xi.dim() != space.dim() {
        return Err(Error::DimensionMismatch {
            expected: space.dim(),
            got: xi.dim(),
        });
    }
    let phi0 = phi_p_measure(psi, xi, p);
    if psi.is_idealised() {
        return Ok(Refined {
            measure: xi.clone(),
            phi_before: phi0,
            phi_after: phi0,
            iterations: 0,
            unchanged: true,
        });
    }
    let d = xi.dim();
    let mut pts: Vec<Vec<f64>> = xi.support.points().map(<[f64]>::to_vec).collect();
    let mut w = xi.weights.clone();
    let mut phi = phi0;
    let mut w_step: f64 = 1.0;
    let mut x_step: f64 = 1.0;
    let mut iters = 0;

    let eval = |pts: &[Vec<f64>], w: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..pts.len() {
            s += w[i] * w[i] * psi.pow(0.0, p);
            for j in 0..i {
                s += 2.0 * w[i] * w[j] * psi.pow(distance(&pts[i], &pts[j]), p);
            }
        }
        s
    };
    let pot = |pts: &[Vec<f64>], w: &[f64], x: &[f64], skip: usize| -> f64 {
        (0..pts.len())
            .filter(|&j| j != skip)
            .map(|j| w[j] * psi.pow(distance(x, &pts[j]), p))
            .sum()
    };

    for it in 0..opts.max_iter {
        iters = it + 1;
        let start = phi;

        // weights
        let grad: Vec<f64> = (0..pts.len()).map(|i| 2.0 * pot(&pts, &w, &pts[i], usize::MAX)).collect();
        let mut s = (w_step * 2.0).min(1e3);
        loop {
            let trial: Vec<f64> = project_simplex(&w.iter().zip(&grad).map(|(a, g)| a + s * g).collect::<Vec<_>>());
            let v = eval(&pts, &trial);
            let gain: f64 = grad.iter().zip(trial.iter().zip(&w)).map(|(g, (a, b))| g * (a - b)).sum();
            if v > phi && v - phi >= ARMIJO * gain {
                w = trial;
                phi = v;
                w_step = s;
                break;
            }
            s *= 0.5;
            if s < 1e-14 {
                break;
            }
        }
        let keep: Vec<usize> = (0..w.len()).filter(|&i| w[i] > 0.0).collect();
        if keep.len() < w.len() {
            pts = keep.iter().map(|&i| pts[i].clone()).collect();
            w = keep.iter().map(|&i| w[i]).collect();
        }

        // positions
        let h = opts.grad_step;
        let dir: Vec<Vec<f64>> = (0..pts.len())
            .map(|i| {
                (0..d)
                    .map(|k| {
                        let mut a = pts[i].clone();
                        let mut b = pts[i].clone();
                        a[k] += h;
                        b[k] -= h;
                        (pot(&pts, &w, &a, i) - pot(&pts, &w, &b, i)) / (2.0 * h)
                    })
                    .collect()
            })
            .collect();
        let norm = dir.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            let mut s = (x_step * 2.0).min(1e3);
            loop {
                let trial: Vec<Vec<f64>> = pts
                    .iter()
                    .zip(&dir)
                    .map(|(x, g)| {
                        let mut y: Vec<f64> = x.iter().zip(g).map(|(a, b)| a + s * b).collect();
                        space.clamp(&mut y);
                        y
                    })
                    .collect();
                let v = eval(&trial, &w);
                let gain: f64 = trial
                    .iter()
                    .zip(&pts)
                    .zip(&dir)
                    .enumerate()
                    .map(|(i, ((a, b), g))| 2.0 * w[i] * a.iter().zip(b).zip(g).map(|((a, b), g)| g * (a - b)).sum::<f64>())
                    .sum();
                if v > phi && v - phi >= ARMIJO * gain {
                    pts = trial;
                    phi = v;
                    x_step = s;
                    break;
                }
                s *= 0.5;
                if s < 1e-14 {
                    break;
                }
            }
        }

        if phi - start <= opts.tol * phi.abs() {
            break;
        }
    }

    if !(phi > phi0) {
        return Ok(Refined {
            measure: xi.clone(),
            phi_before: phi0,
            phi_after: phi0,
            iterations: iters,
            unchanged: true,
        });
    }
    let total: f64 = w.iter().sum();
    let weights: Vec<f64> = w.iter().map(|v| v / total).collect();
    let measure = DesignMeasure::new(Design::new(d, pts.concat())?, weights)?;
    let phi_after = phi_p_measure(psi, &measure, p);
    Ok(Refined {
        measure,
        phi_before: phi0,
        phi_after,
        iterations: iters,
        unchanged: false,
    })
}

/// Worst-case inverse length of model 1 for `φ_p` under a fixed measure,
/// using the raw (unnormalised) `ψ`.
pub fn calibrate_measure(pair: &ModelPair, xi: &DesignMeasure, p: f64, lo: f64, hi: f64, grid: usize) -> Result<Calibration> {
    positive("p", p)?;
    calibrate(
        |t| {
            let moved = ModelPair {
                k1: pair.k1.with_inverse_length(t),
                ..*pair
            };
            Ok(phi_p_measure(&PsiFunction::raw(&moved)?, xi, p))
        },
        lo,
        hi,
        grid,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::KernelSpec;
    use approx::assert_relative_eq;

    fn matern_pair() -> ModelPair {
        ModelPair::new(KernelSpec::matern32(1.0), KernelSpec::matern52(1.07))
    }

    #[test]
    fn simplex_edges() {
        for d in 1..=4 {
            let v = simplex_vertices(d, 0.7, &vec![0.3; d], None).unwrap();
            for i in 0..=d {
                for j in 0..i {
                    assert_relative_eq!(distance(v.point(i), v.point(j)), 0.7, epsilon = 1e-12);
                }
            }
            let star = reflected_point(&v, d);
            assert_relative_eq!(distance(&star, v.point(d)), reflection_distance(d, 0.7), epsilon = 1e-12);
        }
        assert_relative_eq!(reflection_distance(2, 0.7), 1.212_435_565_298_214, epsilon = 1e-12);
        let r = reflected_measure(2, 0.7, 0, &[0.0, 0.0], None).unwrap();
        assert_eq!(r.len(), 4);
        assert_relative_eq!(r.weights().iter().sum::<f64>(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn one_point_and_merging() {
        let psi = PsiFunction::from_kernels(&matern_pair(), true).unwrap();
        let xi = DesignMeasure::uniform(Design::from_1d(&[0.4]).unwrap()).unwrap();
        assert_eq!(phi_p_measure(&psi, &xi, 2.0), 0.0);
        let dup = DesignMeasure::uniform(Design::from_1d(&[0.4, 0.4 + 1e-12, 1.0]).unwrap()).unwrap();
        assert_eq!(dup.len(), 2);
        assert!(DesignMeasure::new(Design::from_1d(&[0.0, 1.0]).unwrap(), vec![0.5, 0.6]).is_err());
        assert!(DesignMeasure::new(Design::from_1d(&[0.0, 1.0]).unwrap(), vec![1.5, -0.5]).is_err());
    }

    #[test]
    fn normalised_peak_is_one() {
        let psi = PsiFunction::from_kernels(&matern_pair(), true).unwrap();
        assert_relative_eq!(psi.eval(psi.delta().unwrap()), 1.0, epsilon = 1e-12);
        assert!((0..200).all(|i| psi.eval(i as f64 * 0.05) <= 1.0 + 1e-9));
    }

    #[test]
    fn two_point_spike_passes() {
        let psi = PsiFunction::idealised(1.0).unwrap();
        let xi = DesignMeasure::uniform(Design::from_1d(&[0.0, 1.0]).unwrap()).unwrap();
        assert_eq!(phi_p_measure(&psi, &xi, 3.0), 0.5);
        let grid = Design::from_1d(&(0..=100).map(|i| i as f64 / 100.0).collect::<Vec<_>>()).unwrap();
        let r = check_necessary_condition(&psi, &xi, &grid, 1.0, CONDITION_TOL).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn projection_onto_simplex() {
        let p = project_simplex(&[0.5, 0.5, 0.5]);
        assert_relative_eq!(p.iter().sum::<f64>(), 1.0, epsilon = 1e-15);
        assert_relative_eq!(p[0], 1.0 / 3.0, epsilon = 1e-15);
        assert_eq!(project_simplex(&[2.0, 0.0]), vec![1.0, 0.0]);
    }

    #[test]
    fn weight_refinement_equalises_fully_connected_support() {
        // three points at mutual distance Δ: optimum puts 1/3 on each
        let psi = PsiFunction::from_kernels(&matern_pair(), true).unwrap();
        let delta = psi.delta().unwrap();
        let v = simplex_vertices(2, delta, &[3.0, 3.0], None).unwrap();
        let xi = DesignMeasure::new(v, vec![0.5, 0.3, 0.2]).unwrap();
        let space = DesignSpace::cube(2, 0.0, 10.0).unwrap();
        let r = continuous_refine(&psi, &xi, 10.0, &space, &RefineOptions::default()).unwrap();
        for &w in r.measure.weights() {
            assert!((w - 1.0 / 3.0).abs() < 1e-4, "{:?}", r.measure.weights());
        }
    }
}
