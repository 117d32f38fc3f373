//! Direct minimization, the mountain-pass path method, Newton polishing and ball exhaustion.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::calculus::{poly_masked, ConstraintSubspace};
use crate::energy::{log_integral_exp, Energy, EnergyModel, FunctionPair, PairSpace};
use crate::error::{Error, Result};
use crate::graph::{ball_family, Lattice, WeightedGraph};
use crate::optim::{best_of, descend, dot, norm2, DescentOptions};
use crate::verify::{positivity_set, residual_of_gradient, Residual};

/// Largest number of ray doublings tried when looking for negative energy.
pub const MAX_DOUBLINGS: usize = 60;
/// Iterations without a drop in the path maximum before Newton is tried.
const STALL_WINDOW: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Armijo {
    pub c1: f64,
    pub backtrack: f64,
    pub init_step: f64,
}

impl Default for Armijo {
    fn default() -> Self {
        Self {
            c1: 1e-4,
            backtrack: 0.5,
            init_step: 1.0,
        }
    }
}

/// How the mountain-pass ray direction pairs its u and v parts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RayDirection {
    /// Same coordinates for u and v when both live in the same space.
    Diagonal,
    Independent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveConfig {
    pub grad_tol: f64,
    pub max_iter: usize,
    pub armijo: Armijo,
    pub path_nodes: usize,
    pub ray_growth: f64,
    pub seed: u64,
    pub multi_start: usize,
    /// Nonmonotone line search; `None` enables it only for multi-dimensional eigenspaces.
    pub nonmonotone: Option<bool>,
    pub ray: RayDirection,
    pub radius_samples: usize,
    pub newton_max_iter: usize,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            grad_tol: 1e-8,
            max_iter: 100_000,
            armijo: Armijo::default(),
            path_nodes: 41,
            ray_growth: 2.0,
            seed: 0,
            multi_start: 8,
            nonmonotone: None,
            ray: RayDirection::Diagonal,
            radius_samples: 32,
            newton_max_iter: 50,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.grad_tol, self.armijo.c1, self.armijo.init_step, self.ray_growth];
        if positive.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(Error::InvalidParameter(
                "tolerances, steps and growth factors must be positive".into(),
            ));
        }
        if !(self.armijo.backtrack > 0.0 && self.armijo.backtrack < 1.0) || self.armijo.c1 >= 1.0 {
            return Err(Error::InvalidParameter(
                "Armijo needs 0 < c1 < 1 and 0 < backtrack < 1".into(),
            ));
        }
        if self.ray_growth <= 1.0 {
            return Err(Error::InvalidParameter("ray_growth must exceed 1".into()));
        }
        if self.path_nodes < 3 {
            return Err(Error::InvalidParameter("path_nodes must be at least 3".into()));
        }
        if self.max_iter == 0 || self.multi_start == 0 || self.newton_max_iter == 0 {
            return Err(Error::InvalidParameter("iteration counts must be positive".into()));
        }
        Ok(())
    }

    fn descent(&self, memory: usize, grad_tol: f64) -> DescentOptions {
        DescentOptions {
            max_iter: self.max_iter,
            grad_tol,
            c1: self.armijo.c1,
            backtrack: self.armijo.backtrack,
            init_step: self.armijo.init_step,
            memory,
            stall: None,
            record: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Converged,
    MaxIter,
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Direct,
    MountainPass,
    Newton,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Positivity {
    pub set: Vec<usize>,
    pub u_positive: bool,
    pub v_positive: bool,
    /// Whether the underlying theorem asserts positivity on `set`.
    pub asserted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MountainInfo {
    pub radius: f64,
    pub doublings: usize,
    pub endpoint_energy: f64,
    pub path_max: f64,
    pub solution_norm: f64,
    pub newton_attempts: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TodaInfo {
    pub origin_energy: f64,
    pub below_origin: bool,
    pub pointwise_residual_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub model: String,
    pub method: Method,
    pub solution: FunctionPair,
    pub energy_trace: Vec<f64>,
    pub grad_norm_trace: Vec<f64>,
    pub el_residual: Residual,
    pub positivity: Positivity,
    pub critical_value: f64,
    pub grad_norm: f64,
    pub status: Status,
    pub iterations: usize,
    pub newton_steps: usize,
    pub mountain: Option<MountainInfo>,
    pub toda: Option<TodaInfo>,
}

/// The energy in ψ-orthonormal coordinates of an admissible space.
struct Coords<'a, 'g> {
    energy: &'a Energy<'g>,
    space: &'a PairSpace,
}

impl Coords<'_, '_> {
    fn pair(&self, c: &[f64]) -> FunctionPair {
        self.space.combine(c)
    }

    fn value(&self, c: &[f64]) -> f64 {
        self.energy.value_unchecked(&self.pair(c))
    }

    fn grad(&self, c: &[f64]) -> Vec<f64> {
        let g = self.energy.gradient_unchecked(&self.pair(c));
        self.space.coords(self.energy.graph().measure(), &g)
    }

    fn eval(&self, c: &[f64]) -> Option<(f64, Vec<f64>)> {
        let v = self.value(c);
        let g = self.grad(c);
        (v.is_finite() && g.iter().all(|t| t.is_finite())).then_some((v, g))
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    norm2(&sub(a, b))
}

fn axpy(a: f64, x: &[f64], y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(xi, yi)| a * xi + yi).collect()
}

fn sub(x: &[f64], y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(a, b)| a - b).collect()
}

fn positivity(energy: &Energy<'_>, pair: &FunctionPair) -> Positivity {
    let asserted = positivity_set(energy);
    let set = asserted.clone().unwrap_or_else(|| energy.equation_set());
    Positivity {
        u_positive: set.iter().all(|&x| pair.u[x] > 0.0),
        v_positive: set.iter().all(|&x| pair.v[x] > 0.0),
        set,
        asserted: asserted.is_some(),
    }
}

struct Finish {
    solution: FunctionPair,
    energy_trace: Vec<f64>,
    grad_norm_trace: Vec<f64>,
    status: Status,
    iterations: usize,
    newton_steps: usize,
    method: Method,
}

fn assemble(energy: &Energy<'_>, f: Finish, mountain: Option<MountainInfo>) -> SolveReport {
    let grad = energy.gradient_unchecked(&f.solution);
    let el = residual_of_gradient(energy, &grad);
    let grad_norm = norm2(&energy.space().coords(energy.graph().measure(), &grad));
    let critical_value = energy.value_unchecked(&f.solution);
    let toda = energy.eigen().map(|_| {
        let origin_energy = energy.value_unchecked(&FunctionPair::zeros(energy.graph().vertex_count()));
        let pw = energy.toda_pointwise_residual(&f.solution).expect("eigenspace model");
        TodaInfo {
            origin_energy,
            below_origin: critical_value <= origin_energy,
            pointwise_residual_max: pw.u.iter().chain(&pw.v).fold(0.0, |a, t| a.max(t.abs())),
        }
    });
    SolveReport {
        model: energy.model().tag().name().into(),
        method: f.method,
        positivity: positivity(energy, &f.solution),
        solution: f.solution,
        energy_trace: f.energy_trace,
        grad_norm_trace: f.grad_norm_trace,
        el_residual: el,
        critical_value,
        grad_norm,
        status: f.status,
        iterations: f.iterations,
        newton_steps: f.newton_steps,
        mountain,
        toda,
    }
}

fn random_coords(rng: &mut ChaCha8Rng, dim: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..dim).map(|_| rng.random_range(lo..hi)).collect()
}

/// Descent over the model's admissible space.
pub fn minimize_direct(energy: &Energy<'_>, cfg: &SolveConfig) -> Result<SolveReport> {
    minimize_in(energy, energy.space(), cfg)
}

/// Descent restricted to an arbitrary subspace of the admissible space, from the origin and seeded random starts.
pub fn minimize_in(energy: &Energy<'_>, space: &PairSpace, cfg: &SolveConfig) -> Result<SolveReport> {
    cfg.validate()?;
    let obj = Coords { energy, space };
    let d = space.dim();
    let flat = energy.eigen().is_some_and(|e| e.multiplicity >= 2);
    let memory = if cfg.nonmonotone.unwrap_or(flat) { 8 } else { 1 };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut starts = vec![vec![0.0; d]];
    for _ in 1..cfg.multi_start {
        starts.push(random_coords(&mut rng, d, -1.0, 1.0));
    }
    let opts = cfg.descent(memory, cfg.grad_tol);
    let f = |c: &[f64]| obj.eval(c);
    let best = best_of(starts, |x0| descend(&f, x0, opts, None), |o| (o.value, &o.x))
        .ok_or_else(|| Error::Inconsistent("energy is not finite at any start".into()))?;
    let status = if best.converged {
        Status::Converged
    } else {
        Status::MaxIter
    };
    let finish = Finish {
        solution: obj.pair(&best.x),
        energy_trace: best.values,
        grad_norm_trace: best.grad_norms,
        status,
        iterations: best.iterations,
        newton_steps: 0,
        method: Method::Direct,
    };
    Ok(assemble(energy, finish, None))
}

struct NewtonOutcome {
    c: Vec<f64>,
    steps: usize,
    residuals: Vec<f64>,
    energies: Vec<f64>,
    diverged: bool,
}

/// Symmetrized central-difference Jacobian of the coordinate gradient.
fn fd_jacobian(obj: &Coords<'_, '_>, c: &[f64]) -> DMatrix<f64> {
    let d = c.len();
    let mut jac = DMatrix::zeros(d, d);
    let mut x = c.to_vec();
    for j in 0..d {
        let h = 1e-6 * c[j].abs().max(1.0);
        x[j] = c[j] + h;
        let gp = obj.grad(&x);
        x[j] = c[j] - h;
        let gm = obj.grad(&x);
        x[j] = c[j];
        for i in 0..d {
            jac[(i, j)] = (gp[i] - gm[i]) / (2.0 * h);
        }
    }
    (&jac + jac.transpose()) * 0.5
}

fn newton_coords(obj: &Coords<'_, '_>, c0: &[f64], max_steps: usize) -> NewtonOutcome {
    let mut c = c0.to_vec();
    let mut f = obj.grad(&c);
    let mut fnorm = norm2(&f);
    let start_norm = fnorm;
    let mut out = NewtonOutcome {
        c: c.clone(),
        steps: 0,
        residuals: vec![fnorm],
        energies: vec![obj.value(&c)],
        diverged: false,
    };
    for _ in 0..max_steps {
        if fnorm <= 1e-14 * norm2(&c).max(1.0) {
            break;
        }
        let jac = fd_jacobian(obj, &c);
        let rhs = DVector::from_iterator(f.len(), f.iter().map(|t| -t));
        let newton_dir = jac.lu().solve(&rhs).map(|s| s.iter().copied().collect::<Vec<f64>>());
        let mut accepted = None;
        let candidates = newton_dir
            .filter(|s| s.iter().all(|t| t.is_finite()))
            .into_iter()
            .chain(std::iter::once(f.iter().map(|t| -t).collect::<Vec<f64>>()));
        'dirs: for dir in candidates {
            let mut lam = 1.0;
            for _ in 0..40 {
                let trial = axpy(lam, &dir, &c);
                let ft = obj.grad(&trial);
                let n = norm2(&ft);
                if n.is_finite() && n <= (1.0 - 1e-4 * lam) * fnorm {
                    accepted = Some((trial, ft, n));
                    break 'dirs;
                }
                lam *= 0.5;
            }
        }
        let Some((cn, fnew, nnew)) = accepted else { break };
        c = cn;
        f = fnew;
        fnorm = nnew;
        out.steps += 1;
        out.residuals.push(fnorm);
        out.energies.push(obj.value(&c));
        if fnorm > 10.0 * start_norm.max(f64::MIN_POSITIVE) {
            out.diverged = true;
            break;
        }
    }
    out.c = c;
    out
}

fn is_trivial(energy: &Energy<'_>, c: &[f64]) -> bool {
    !matches!(energy.model(), EnergyModel::Toda { .. }) && norm2(c) <= 1e-12
}

/// Damped Newton on the gradient map in admissible coordinates.
pub fn newton_refine(energy: &Energy<'_>, start: &FunctionPair, cfg: &SolveConfig) -> Result<SolveReport> {
    cfg.validate()?;
    let e0 = energy.value(start)?;
    if !e0.is_finite() {
        return Err(Error::NonFinite(0));
    }
    let space = energy.space();
    let obj = Coords { energy, space };
    let c0 = space.coords(energy.graph().measure(), start);
    let out = newton_coords(&obj, &c0, cfg.newton_max_iter);
    let final_norm = *out.residuals.last().expect("initial residual recorded");
    let (c, status) = if out.diverged {
        (c0, Status::Degenerate)
    } else if is_trivial(energy, &out.c) {
        (out.c.clone(), Status::Degenerate)
    } else if final_norm <= cfg.grad_tol {
        (out.c.clone(), Status::Converged)
    } else {
        (out.c.clone(), Status::MaxIter)
    };
    let finish = Finish {
        solution: obj.pair(&c),
        energy_trace: out.energies,
        grad_norm_trace: out.residuals,
        status,
        iterations: out.steps,
        newton_steps: out.steps,
        method: Method::Newton,
    };
    Ok(assemble(energy, finish, None))
}

/// First ρ > 0 with J(ρd) < 0, found by doubling from 1e−6 then bisection; `None` if the energy stays nonnegative.
fn zero_crossing(obj: &Coords<'_, '_>, dir: &[f64]) -> Option<f64> {
    let at = |r: f64| obj.value(&dir.iter().map(|t| r * t).collect::<Vec<_>>());
    let mut lo = 0.0;
    let mut hi = 1e-6;
    let mut found = false;
    for _ in 0..80 {
        if at(hi) < 0.0 {
            found = true;
            break;
        }
        lo = hi;
        hi *= 2.0;
    }
    if !found {
        return None;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if at(mid) < 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(lo)
}

fn unit(mut v: Vec<f64>) -> Vec<f64> {
    let n = norm2(&v);
    v.iter_mut().for_each(|t| *t /= n);
    v
}

fn ray_direction(space: &PairSpace, mode: RayDirection, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let (du, dv) = (space.u.dim(), space.v.dim());
    let w = random_coords(rng, du, 0.5, 1.5);
    let dir = if mode == RayDirection::Diagonal && space.u == space.v {
        w.iter().chain(&w).copied().collect()
    } else {
        w.into_iter().chain(random_coords(rng, dv, 0.5, 1.5)).collect()
    };
    unit(dir)
}

/// Half the smallest first zero crossing, minimized over directions by random search seeded with the ray
/// direction and `samples` random directions.
fn mountain_radius(obj: &Coords<'_, '_>, ray: &[f64], samples: usize, rng: &mut ChaCha8Rng) -> f64 {
    let crossing = |d: &[f64]| zero_crossing(obj, d).unwrap_or(f64::INFINITY);
    let mut best = (crossing(ray), ray.to_vec());
    for _ in 0..samples {
        let d = unit(random_coords(rng, ray.len(), -1.0, 1.0));
        let r = crossing(&d);
        if r < best.0 {
            best = (r, d);
        }
    }
    let mut scale = 0.5;
    while scale > 1e-3 {
        for _ in 0..samples {
            let d = unit(axpy(scale, &random_coords(rng, ray.len(), -1.0, 1.0), &best.1));
            let r = crossing(&d);
            if r < best.0 {
                best = (r, d);
            }
        }
        scale *= 0.5;
    }
    0.5 * best.0
}

/// Redistributes nodes first..=last uniformly by arc length, keeping the end nodes.
fn reparametrize(nodes: &mut [Vec<f64>], first: usize, last: usize) {
    if last <= first + 1 {
        return;
    }
    let seg = &nodes[first..=last];
    let mut arc = vec![0.0];
    for w in seg.windows(2) {
        arc.push(arc.last().unwrap() + norm2(&sub(&w[1], &w[0])));
    }
    let total = *arc.last().unwrap();
    if total == 0.0 {
        return;
    }
    let old: Vec<Vec<f64>> = seg.to_vec();
    let count = last - first;
    for k in 1..count {
        let target = total * k as f64 / count as f64;
        let j = arc.partition_point(|&a| a <= target).clamp(1, old.len() - 1);
        let t = (target - arc[j - 1]) / (arc[j] - arc[j - 1]).max(f64::MIN_POSITIVE);
        nodes[first + k] = old[j - 1].iter().zip(&old[j]).map(|(a, b)| a + t * (b - a)).collect();
    }
}

fn tangent(nodes: &[Vec<f64>], i: usize) -> Vec<f64> {
    let t = sub(&nodes[i + 1], &nodes[i - 1]);
    let n = norm2(&t);
    if n == 0.0 {
        t
    } else {
        t.into_iter().map(|x| x / n).collect()
    }
}

/// Flips u (or v) when it is nonpositive on the equation set, for energies even in each component.
fn orient(energy: &Energy<'_>, pair: &mut FunctionPair) {
    if !energy.absolute_value_invariant() {
        return;
    }
    let set = energy.equation_set();
    for w in [&mut pair.u, &mut pair.v] {
        if set.iter().all(|&x| w[x] <= 0.0) {
            w.iter_mut().for_each(|t| *t = -*t);
        }
    }
}

/// Mountain-pass critical point: ray search, path deformation at the highest node, Newton polish.
/// Armijo step on node `j` along its gradient, optionally with the tangential part removed, moving at
/// most half the local spacing; returns the next trial step.
fn descend_node(
    obj: &Coords<'_, '_>,
    nodes: &mut [Vec<f64>],
    energies: &mut [f64],
    j: usize,
    step: f64,
    across: bool,
    armijo: &Armijo,
) -> f64 {
    let mut dir = obj.grad(&nodes[j]);
    if across {
        let tau = tangent(nodes, j);
        let along = dot(&dir, &tau);
        dir.iter_mut().zip(&tau).for_each(|(a, b)| *a -= along * b);
    }
    let slope = dot(&dir, &dir);
    if slope == 0.0 {
        return step;
    }
    let reach = 0.5 * dist(&nodes[j], &nodes[j - 1]).min(dist(&nodes[j + 1], &nodes[j]));
    let mut t = step.min(reach / slope.sqrt());
    for _ in 0..60 {
        let cand = axpy(-t, &dir, &nodes[j]);
        let ec = obj.value(&cand);
        if ec <= energies[j] - armijo.c1 * t * slope {
            nodes[j] = cand;
            energies[j] = ec;
            return t * 2.0;
        }
        t *= armijo.backtrack;
    }
    t
}

/// Discretized path from 0 to a point of negative energy, deformed until its highest node is a critical
/// point, then refined by Newton. Nodes above the origin level relax across the path, the highest node
/// climbs, and the path is redistributed by arc length on each side of it.
pub fn mountain_pass(energy: &Energy<'_>, cfg: &SolveConfig) -> Result<SolveReport> {
    cfg.validate()?;
    if matches!(energy.model(), EnergyModel::Toda { .. } | EnergyModel::Quadratic) {
        return Err(Error::InvalidParameter(
            "mountain pass needs one of the superlinear models".into(),
        ));
    }
    let space = energy.space();
    let obj = Coords { energy, space };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let dir = ray_direction(space, cfg.ray, &mut rng);

    let mut t = 1.0;
    let mut doublings = 0;
    let endpoint = loop {
        let candidate: Vec<f64> = dir.iter().map(|x| t * x).collect();
        if obj.value(&candidate) < 0.0 {
            break candidate;
        }
        if doublings == MAX_DOUBLINGS {
            return Err(Error::NoMountainGeometry(MAX_DOUBLINGS));
        }
        t *= cfg.ray_growth;
        doublings += 1;
    };
    let endpoint_energy = obj.value(&endpoint);
    let radius = mountain_radius(&obj, &dir, cfg.radius_samples, &mut rng);

    let n = cfg.path_nodes;
    let mut nodes: Vec<Vec<f64>> = (0..n)
        .map(|k| endpoint.iter().map(|x| x * k as f64 / (n - 1) as f64).collect())
        .collect();
    let mut energies: Vec<f64> = nodes.iter().map(|z| obj.value(z)).collect();
    let spacing = norm2(&endpoint) / (n - 1) as f64;
    let mut steps = vec![0.1 * spacing; n];
    let mut climb_step = 0.1 * spacing;
    let mut previous: Option<(usize, Vec<f64>, Vec<f64>)> = None;
    let mut switch_tol: f64 = 1e-4;
    let mut energy_trace = Vec::new();
    let mut grad_norm_trace = Vec::new();
    let mut newton_attempts = 0;
    let mut result: Option<(Vec<f64>, usize)> = None;
    let mut iterations = 0;
    let mut last_max = f64::NAN;
    // Iteration and level of the last real drop in the path maximum.
    let mut mark = (0, f64::INFINITY);
    let accept = |c: &[f64]| norm2(c) >= radius && obj.value(c) > 0.0;

    for it in 0..cfg.max_iter {
        iterations = it + 1;
        let i = (1..n - 1).fold(1, |b, k| if energies[k] > energies[b] { k } else { b });
        last_max = energies[i];
        let g = obj.grad(&nodes[i]);
        let gnorm = norm2(&g);
        energy_trace.push(energies[i]);
        grad_norm_trace.push(gnorm);

        if last_max < mark.1 - 1e-12 * last_max.abs().max(1.0) {
            mark = (it, last_max);
        }
        if gnorm <= switch_tol.max(cfg.grad_tol) || it - mark.0 >= STALL_WINDOW {
            mark = (it, last_max);
            newton_attempts += 1;
            let out = newton_coords(&obj, &nodes[i], cfg.newton_max_iter);
            if !out.diverged && *out.residuals.last().unwrap() <= cfg.grad_tol && accept(&out.c) {
                energy_trace.extend(&out.energies[1..]);
                grad_norm_trace.extend(&out.residuals[1..]);
                result = Some((out.c, out.steps));
                break;
            }
            if gnorm <= cfg.grad_tol && accept(&nodes[i]) {
                result = Some((nodes[i].clone(), 0));
                break;
            }
            switch_tol = (switch_tol * 0.01).max(cfg.grad_tol);
        }

        // Relax the other nodes above the origin level across the path.
        for j in 1..n - 1 {
            if j == i || energies[j] <= 0.0 {
                continue;
            }
            steps[j] = descend_node(&obj, &mut nodes, &mut energies, j, steps[j], true, &cfg.armijo);
        }

        // Climbing step on the highest node: descend across the path, ascend along it.
        let tau = tangent(&nodes, i);
        let along = dot(&g, &tau);
        let field: Vec<f64> = g.iter().zip(&tau).map(|(a, b)| a - 2.0 * along * b).collect();
        if let Some((k, z0, f0)) = previous.take().filter(|(k, ..)| *k == i) {
            let s = sub(&nodes[k], &z0);
            let y = sub(&field, &f0);
            let sy = dot(&s, &y).abs();
            if sy > 0.0 {
                climb_step = dot(&s, &s) / sy;
            }
        }
        let reach = 0.5 * dist(&nodes[i], &nodes[i - 1]).min(dist(&nodes[i + 1], &nodes[i]));
        let h = climb_step.min(reach / norm2(&field).max(f64::MIN_POSITIVE));
        previous = Some((i, nodes[i].clone(), field.clone()));
        let moved = axpy(-h, &field, &nodes[i]);
        let em = obj.value(&moved);
        if em.is_finite() {
            nodes[i] = moved;
            energies[i] = em;
        }

        reparametrize(&mut nodes, 0, i);
        reparametrize(&mut nodes, i, n - 1);
        for k in (1..n - 1).filter(|&k| k != i) {
            energies[k] = obj.value(&nodes[k]);
        }
    }

    let (c, newton_steps, status) = match result {
        Some((c, s)) => (c, s, Status::Converged),
        None => {
            let i = (1..n - 1).fold(1, |b, k| if energies[k] > energies[b] { k } else { b });
            (nodes[i].clone(), 0, Status::MaxIter)
        }
    };
    let status = if is_trivial(energy, &c) {
        Status::Degenerate
    } else {
        status
    };
    let mut solution = obj.pair(&c);
    orient(energy, &mut solution);
    let info = MountainInfo {
        radius,
        doublings,
        endpoint_energy,
        path_max: last_max,
        solution_norm: norm2(&c),
        newton_attempts,
    };
    let finish = Finish {
        solution,
        energy_trace,
        grad_norm_trace,
        status,
        iterations,
        newton_steps,
        method: Method::MountainPass,
    };
    Ok(assemble(energy, finish, Some(info)))
}

/// Coupling strengths and gradient orders of the exponential system solved on each ball.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TodaParams {
    pub phi1: f64,
    pub phi2: f64,
    pub m: usize,
    pub n: usize,
}

impl Default for TodaParams {
    fn default() -> Self {
        Self {
            phi1: 1.0,
            phi2: 1.0,
            m: 1,
            n: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallSolve {
    pub radius: usize,
    pub ball_size: usize,
    pub energy: f64,
    pub residual: f64,
    pub status: Status,
    pub iterations: usize,
    pub window_u: Vec<f64>,
    pub window_v: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExhaustionReport {
    pub lattice: String,
    pub max_radius: usize,
    pub window: Vec<String>,
    pub ball_sizes: Vec<usize>,
    pub balls: Vec<BallSolve>,
    /// max over the window of |u_k − u_{k−1}| and |v_k − v_{k−1}|, for k = 2..K.
    pub window_differences: Vec<f64>,
    /// First index from which the differences strictly decrease to the end, when that tail has two or more entries.
    pub decreasing_from: Option<usize>,
    pub limit_u: Vec<f64>,
    pub limit_v: Vec<f64>,
}

/// The exponential energy with integrals over a ball and functions vanishing off it.
struct BallEnergy<'a> {
    g: &'a WeightedGraph,
    chi: Vec<f64>,
    params: TodaParams,
}

impl BallEnergy<'_> {
    fn masked_psi(&self) -> Vec<f64> {
        self.g.measure().iter().zip(&self.chi).map(|(p, c)| p * c).collect()
    }

    fn value(&self, u: &[f64], v: &[f64]) -> f64 {
        let (w1, w2) = exponents(u, v);
        let psi = self.masked_psi();
        let TodaParams { phi1, phi2, m, n } = self.params;
        0.5 * crate::calculus::grad_energy(self.g, u, m, 2.0, &self.chi)
            + 0.5 * crate::calculus::grad_energy(self.g, v, n, 2.0, &self.chi)
            - 0.5 * phi1 * log_integral_exp(&psi, &w1).0
            - 0.5 * phi2 * log_integral_exp(&psi, &w2).0
    }

    fn gradient(&self, u: &[f64], v: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let (w1, w2) = exponents(u, v);
        let psi = self.masked_psi();
        let TodaParams { phi1, phi2, m, n } = self.params;
        let (_, e1) = log_integral_exp(&psi, &w1);
        let (_, e2) = log_integral_exp(&psi, &w2);
        let mut gu = poly_masked(self.g, u, m, 2.0, &self.chi);
        let mut gv = poly_masked(self.g, v, n, 2.0, &self.chi);
        for x in 0..u.len() {
            gu[x] += self.chi[x] * (-phi1 * e1[x] + 0.5 * phi2 * e2[x]);
            gv[x] += self.chi[x] * (0.5 * phi1 * e1[x] - phi2 * e2[x]);
        }
        (gu, gv)
    }
}

fn exponents(u: &[f64], v: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let w1 = u.iter().zip(v).map(|(a, b)| 2.0 * a - b).collect();
    let w2 = u.iter().zip(v).map(|(a, b)| -a + 2.0 * b).collect();
    (w1, w2)
}

fn solve_ball(
    g: &WeightedGraph,
    ball: &[usize],
    params: TodaParams,
    cfg: &SolveConfig,
) -> (Vec<f64>, Vec<f64>, f64, f64, Status, usize) {
    let n = g.vertex_count();
    let mut chi = vec![0.0; n];
    ball.iter().for_each(|&x| chi[x] = 1.0);
    let be = BallEnergy { g, chi, params };
    let space = ConstraintSubspace::free_on(g, ball);
    let psi = g.measure();
    let k = space.dim();
    let split = |c: &[f64]| (space.combine(&c[..k]), space.combine(&c[k..]));
    let grad_coords = |c: &[f64]| -> Vec<f64> {
        let (u, v) = split(c);
        let (gu, gv) = be.gradient(&u, &v);
        let mut out = space.coords(psi, &gu);
        out.extend(space.coords(psi, &gv));
        out
    };
    let f = |c: &[f64]| {
        let (u, v) = split(c);
        let val = be.value(&u, &v);
        val.is_finite().then(|| (val, grad_coords(c)))
    };
    let opts = DescentOptions {
        stall: Some((200, 1e-15)),
        ..cfg.descent(1, 0.1 * cfg.grad_tol)
    };
    let out = descend(&f, vec![0.0; 2 * k], opts, None).expect("finite at the origin");
    // Newton polish on the ball gradient.
    let mut c = out.x.clone();
    let mut gcur = grad_coords(&c);
    for _ in 0..cfg.newton_max_iter {
        let gn = norm2(&gcur);
        if gn <= 1e-14 * norm2(&c).max(1.0) {
            break;
        }
        let d = c.len();
        let mut jac = DMatrix::zeros(d, d);
        let mut x = c.clone();
        for j in 0..d {
            let h = 1e-6 * c[j].abs().max(1.0);
            x[j] = c[j] + h;
            let gp = grad_coords(&x);
            x[j] = c[j] - h;
            let gm = grad_coords(&x);
            x[j] = c[j];
            for i in 0..d {
                jac[(i, j)] = (gp[i] - gm[i]) / (2.0 * h);
            }
        }
        let jac = (&jac + jac.transpose()) * 0.5;
        let rhs = DVector::from_iterator(d, gcur.iter().map(|t| -t));
        let Some(step) = jac.lu().solve(&rhs) else { break };
        let trial: Vec<f64> = c.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
        let gt = grad_coords(&trial);
        if norm2(&gt) >= gn {
            break;
        }
        c = trial;
        gcur = gt;
    }
    let (u, v) = split(&c);
    let (gu, gv) = be.gradient(&u, &v);
    let residual = ball.iter().fold(0.0f64, |a, &x| a.max(gu[x].abs()).max(gv[x].abs()));
    let status = if residual <= cfg.grad_tol {
        Status::Converged
    } else {
        Status::MaxIter
    };
    let energy = be.value(&u, &v);
    (u, v, energy, residual, status, out.iterations)
}

/// Solves the exponential system on balls V_1 ⊂ … ⊂ V_K of a lattice truncation and tracks a window.
pub fn exhaustion_solve(
    lattice: Lattice,
    params: TodaParams,
    max_radius: usize,
    window: &[String],
    cfg: &SolveConfig,
) -> Result<ExhaustionReport> {
    cfg.validate()?;
    if max_radius == 0 {
        return Err(Error::InvalidParameter("K must be at least 1".into()));
    }
    if !(params.phi1 > 0.0 && params.phi2 > 0.0) || params.m == 0 || params.n == 0 {
        return Err(Error::InvalidParameter("requires phi1, phi2 > 0 and m, n >= 1".into()));
    }
    let trunc = lattice.truncate(max_radius + 1)?;
    let g = &trunc.graph;
    let family = ball_family(g, trunc.center, max_radius)?;
    let sizes = family.ball_sizes();
    if sizes.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Inconsistent("ball family is not monotone".into()));
    }
    let ids: Vec<usize> = window
        .iter()
        .map(|label| {
            trunc
                .labels
                .iter()
                .position(|l| l == label)
                .ok_or_else(|| Error::Domain(format!("window vertex {label} is not in the lattice truncation")))
        })
        .collect::<Result<_>>()?;
    if let Some(&x) = ids.iter().find(|&&x| family.distances()[x] >= max_radius) {
        return Err(Error::Domain(format!(
            "window vertex {} lies outside V_K",
            trunc.labels[x]
        )));
    }
    let balls: Vec<Vec<usize>> = (1..=max_radius).map(|k| family.ball(k)).collect();
    let solves: Vec<BallSolve> = {
        use rayon::prelude::*;
        balls
            .par_iter()
            .enumerate()
            .map(|(i, ball)| {
                let (u, v, energy, residual, status, iterations) = solve_ball(g, ball, params, cfg);
                BallSolve {
                    radius: i + 1,
                    ball_size: ball.len(),
                    energy,
                    residual,
                    status,
                    iterations,
                    window_u: ids.iter().map(|&x| u[x]).collect(),
                    window_v: ids.iter().map(|&x| v[x]).collect(),
                }
            })
            .collect()
    };
    let diffs: Vec<f64> = solves
        .windows(2)
        .map(|w| {
            let du = w[1].window_u.iter().zip(&w[0].window_u).map(|(a, b)| (a - b).abs());
            let dv = w[1].window_v.iter().zip(&w[0].window_v).map(|(a, b)| (a - b).abs());
            du.chain(dv).fold(0.0, f64::max)
        })
        .collect();
    let mut start = diffs.len();
    while start > 0 && (start == diffs.len() || diffs[start - 1] > diffs[start]) {
        start -= 1;
    }
    let decreasing_from = (diffs.len() >= 2 && diffs.len() - start >= 2).then_some(start);
    let last = solves.last().expect("K >= 1");
    Ok(ExhaustionReport {
        lattice: format!("{lattice:?}").to_lowercase(),
        max_radius,
        window: window.to_vec(),
        ball_sizes: sizes,
        limit_u: last.window_u.clone(),
        limit_v: last.window_v.clone(),
        balls: solves,
        window_differences: diffs,
        decreasing_from,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::ModelTag;
    use crate::graph::{build_graph, generate, DomainSpec, GraphFamily, WeightSpec};

    /// Reduced energy on P2 along u = a(1,−1), v = b(1,−1).
    fn p2_reduced(a: f64, b: f64) -> f64 {
        2.0 * a * a + 2.0 * b * b - 0.5 * (2.0 * (2.0 * a - b).cosh()).ln() - 0.5 * (2.0 * (2.0 * b - a).cosh()).ln()
    }

    fn grid_min(f: impl Fn(f64, f64) -> f64) -> (f64, f64, f64) {
        let mut best = (0.0, 0.0, f(0.0, 0.0));
        let mut h = 0.01;
        let (mut ca, mut cb) = (0.0, 0.0);
        for _ in 0..12 {
            for i in -100..=100 {
                for j in -100..=100 {
                    let (a, b) = (ca + i as f64 * h, cb + j as f64 * h);
                    let v = f(a, b);
                    if v < best.2 {
                        best = (a, b, v);
                    }
                }
            }
            (ca, cb) = (best.0, best.1);
            h /= 20.0;
        }
        best
    }

    #[test]
    fn toda_on_p2_matches_grid() {
        let g = build_graph(&[(0, 1, 1.0)]).unwrap();
        let e = Energy::new(&g, EnergyModel::defaults(ModelTag::Toda), None).unwrap();
        let r = minimize_direct(&e, &SolveConfig::default()).unwrap();
        let (a, b, j) = grid_min(p2_reduced);
        assert!((a.abs() - 0.2065).abs() < 1e-3 && (a + b).abs() < 1e-8);
        assert!((r.critical_value - j).abs() < 1e-6);
        assert!(r.critical_value < -(2f64.ln()));
        assert!(r.grad_norm <= 1e-8);
        assert_eq!(r.status, Status::Converged);
        assert!(r.toda.unwrap().below_origin);
    }

    fn dirichlet_p3() -> (WeightedGraph, DomainSpec) {
        let g = build_graph(&[(0, 1, 1.0), (1, 2, 1.0)]).unwrap();
        let d = DomainSpec::new(&g, &[0, 1]).unwrap();
        (g, d)
    }

    #[test]
    fn mountain_pass_finds_closed_form() {
        let (g, d) = dirichlet_p3();
        let e = Energy::new(&g, EnergyModel::defaults(ModelTag::Dirichlet), Some(d)).unwrap();
        let r = mountain_pass(&e, &SolveConfig::default()).unwrap();
        let a = 2f64.powf(0.25);
        assert_eq!(r.status, Status::Converged);
        assert!((r.solution.u[0] - a).abs() < 1e-10 && (r.solution.v[0] - a).abs() < 1e-10);
        assert!((r.critical_value - (a * a - a.powi(6) / 6.0)).abs() < 1e-12);
        assert!(r.el_residual.max <= 1e-10);
        let info = r.mountain.unwrap();
        assert!(info.solution_norm >= info.radius);
        assert!(r.positivity.u_positive && r.positivity.v_positive);
    }

    #[test]
    fn newton_from_noisy_start() {
        let (g, d) = dirichlet_p3();
        let e = Energy::new(&g, EnergyModel::defaults(ModelTag::Dirichlet), Some(d)).unwrap();
        let a = 2f64.powf(0.25);
        let start = FunctionPair::new(vec![a + 0.05, 0.0, 0.0], vec![a - 0.03, 0.0, 0.0]);
        let r = newton_refine(&e, &start, &SolveConfig::default()).unwrap();
        assert_eq!(r.status, Status::Converged);
        assert!(r.newton_steps <= 8);
        assert!(r.el_residual.max <= 1e-12);
        let exact = FunctionPair::new(vec![a, 0.0, 0.0], vec![a, 0.0, 0.0]);
        assert_eq!(
            newton_refine(&e, &exact, &SolveConfig::default()).unwrap().newton_steps,
            0
        );
        let origin = newton_refine(&e, &FunctionPair::zeros(3), &SolveConfig::default()).unwrap();
        assert_eq!(origin.status, Status::Degenerate);
    }

    #[test]
    fn quadratic_minimizer_is_origin() {
        let g = generate(GraphFamily::Cycle(5), WeightSpec::Unit, 0).unwrap();
        let e = Energy::new(&g, EnergyModel::Quadratic, None).unwrap();
        let r = minimize_direct(&e, &SolveConfig::default()).unwrap();
        assert!(r.solution.sup() <= 1e-8);
        assert_eq!(r.status, Status::Converged);
    }

    #[test]
    fn global_model_constant_solution() {
        let g = generate(GraphFamily::Complete(3), WeightSpec::Unit, 0).unwrap();
        let e = Energy::new(&g, EnergyModel::defaults(ModelTag::Global), None).unwrap();
        let r = mountain_pass(&e, &SolveConfig::default()).unwrap();
        assert_eq!(r.status, Status::Converged);
        for x in 0..3 {
            assert!((r.solution.u[x] - 1.0).abs() < 1e-10 && (r.solution.v[x] - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn config_rejects_bad_values() {
        let cfg = SolveConfig {
            path_nodes: 2,
            ..SolveConfig::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = SolveConfig {
            armijo: Armijo {
                backtrack: 1.5,
                ..Armijo::default()
            },
            ..SolveConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn reparametrize_spaces_evenly() {
        let mut nodes = vec![vec![0.0], vec![0.1], vec![0.2], vec![1.0]];
        reparametrize(&mut nodes, 0, 3);
        assert!((nodes[1][0] - 1.0 / 3.0).abs() < 1e-15 && (nodes[2][0] - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn exhaustion_single_ball() {
        let w = vec!["0".to_string()];
        let r = exhaustion_solve(Lattice::Path, TodaParams::default(), 1, &w, &SolveConfig::default()).unwrap();
        assert!(r.window_differences.is_empty());
        assert_eq!(r.balls.len(), 1);
        assert_eq!(r.decreasing_from, None);
    }

    #[test]
    fn exhaustion_grid_ball_sizes() {
        let w = vec!["0:0".to_string()];
        let r = exhaustion_solve(Lattice::Grid, TodaParams::default(), 4, &w, &SolveConfig::default()).unwrap();
        assert_eq!(r.ball_sizes, vec![1, 5, 13, 25]);
        assert!(r.balls.iter().all(|b| b.residual <= 1e-8));
    }

    #[test]
    fn exhaustion_rejects_window_outside() {
        let w = vec!["3".to_string()];
        let r = exhaustion_solve(Lattice::Path, TodaParams::default(), 2, &w, &SolveConfig::default());
        assert!(matches!(r, Err(Error::Domain(_))));
    }
}
