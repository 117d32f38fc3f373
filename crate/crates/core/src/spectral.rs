//! First positive eigenvalue, eigenspace, embedding constants and weighted Rayleigh quotients.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Serialize, Serializer};

use crate::calculus::{
    constraint_subspace, grad_energy, lap, lebesgue, m_grad_norm, poly_masked, signed_pow, ConstraintSubspace,
    SobolevDomain, SobolevSpec,
};
use crate::error::{check_len, Error, Result};
use crate::graph::{distances_from, DomainSpec, WeightedGraph};
use crate::optim::{best_of, descend, DescentOptions};

/// λ₁ together with a ψ-orthonormal basis of its eigenspace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenData {
    pub lambda1: f64,
    /// λ₁ from the independent Rayleigh-quotient route.
    pub rayleigh_value: f64,
    pub multiplicity: usize,
    pub basis: Vec<Vec<f64>>,
    /// Absolute clustering tolerance used to decide multiplicity.
    pub tol: f64,
}

impl EigenData {
    pub fn subspace(&self, g: &WeightedGraph) -> Result<ConstraintSubspace> {
        ConstraintSubspace::from_orthonormal(g, self.basis.clone())
    }
}

/// ‖Δu + λu‖_∞.
pub fn eigen_residual(g: &WeightedGraph, lambda: f64, u: &[f64]) -> f64 {
    lap(g, u)
        .iter()
        .zip(u)
        .fold(0.0, |a, (d, x)| a.max((d + lambda * x).abs()))
}

fn psi_dot(psi: &[f64], a: &[f64], b: &[f64]) -> f64 {
    (0..a.len()).map(|x| psi[x] * a[x] * b[x]).sum()
}

fn remove_mean(psi: &[f64], u: &mut [f64]) {
    let mean = psi_dot(psi, u, &vec![1.0; u.len()]) / psi.iter().sum::<f64>();
    u.iter_mut().for_each(|x| *x -= mean);
}

/// Gram–Schmidt in the ψ inner product (two passes); drops numerically dependent vectors.
fn psi_orthonormalize(psi: &[f64], vectors: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    for mut v in vectors {
        let original = psi_dot(psi, &v, &v).sqrt();
        for _ in 0..2 {
            for q in &out {
                let c = psi_dot(psi, &v, q);
                v.iter_mut().zip(q).for_each(|(a, b)| *a -= c * b);
            }
        }
        let nrm = psi_dot(psi, &v, &v).sqrt();
        if nrm > 1e-10 * original.max(f64::MIN_POSITIVE) {
            v.iter_mut().for_each(|a| *a /= nrm);
            out.push(v);
        }
    }
    out
}

fn dense_route(g: &WeightedGraph) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = g.vertex_count();
    let s = g.measure().iter().map(|m| m.sqrt()).collect::<Vec<_>>();
    let mut mat = DMatrix::<f64>::identity(n, n);
    for e in g.edges() {
        let v = -e.weight / (s[e.i] * s[e.j]);
        mat[(e.i, e.j)] += v;
        mat[(e.j, e.i)] += v;
    }
    let eig = SymmetricEigen::new(mat);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = order
        .iter()
        .map(|&k| (0..n).map(|x| eig.eigenvectors[(x, k)] / s[x]).collect())
        .collect();
    (values, vectors)
}

/// Minimizes Σ_edges ω (u(y) − u(x))² / ∫u² dψ over u ψ-orthogonal to constants
/// by a locally optimal three-term subspace iteration.
fn rayleigh_route(g: &WeightedGraph, seed: u64) -> f64 {
    let n = g.vertex_count();
    let psi = g.measure();
    let stiffness = |u: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|x| g.neighbors(x).iter().map(|&(y, w)| w * (u[x] - u[y])).sum())
            .collect()
    };
    let quad = |a: &[f64], b: &[f64]| crate::optim::dot(a, &stiffness(b));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut starts = vec![(0..n).map(|x| if x == 0 { 1.0 } else { 0.0 }).collect::<Vec<f64>>()];
    starts.push((0..n).map(|x| 1.0 + 0.01 * ((x + 1) as f64).sin()).collect());
    starts.push((0..n).map(|_| rng.random_range(-1.0..1.0)).collect());
    let mut best = f64::INFINITY;
    for mut x in starts {
        remove_mean(psi, &mut x);
        let Some(first) = psi_orthonormalize(psi, vec![x]).pop() else {
            continue;
        };
        x = first;
        let mut dir: Option<Vec<f64>> = None;
        let mut theta = quad(&x, &x);
        for _ in 0..(50 * n + 500) {
            theta = quad(&x, &x);
            let kx = stiffness(&x);
            let mut w: Vec<f64> = (0..n).map(|i| kx[i] / psi[i] - theta * x[i]).collect();
            let res = psi_dot(psi, &w, &w).sqrt();
            if res <= 1e-12 * theta.max(f64::MIN_POSITIVE) {
                break;
            }
            remove_mean(psi, &mut w);
            let mut span = vec![x.clone(), w];
            span.extend(dir.take());
            let basis = psi_orthonormalize(psi, span);
            let k = basis.len();
            let h = DMatrix::from_fn(k, k, |a, b| quad(&basis[a], &basis[b]));
            let small = SymmetricEigen::new(h);
            let j = (0..k)
                .min_by(|&a, &b| small.eigenvalues[a].total_cmp(&small.eigenvalues[b]))
                .expect("nonempty basis");
            let y: Vec<f64> = (0..k).map(|a| small.eigenvectors[(a, j)]).collect();
            let mut next = vec![0.0; n];
            let mut step = vec![0.0; n];
            for (a, b) in basis.iter().enumerate() {
                for i in 0..n {
                    next[i] += y[a] * b[i];
                    if a > 0 {
                        step[i] += y[a] * b[i];
                    }
                }
            }
            remove_mean(psi, &mut next);
            match psi_orthonormalize(psi, vec![next]).pop() {
                Some(v) => x = v,
                None => break,
            }
            dir = Some(step);
        }
        best = best.min(theta);
    }
    best
}

/// λ₁ by dense eigendecomposition, cross-checked against Rayleigh-quotient minimization.
pub fn first_eigenvalue(g: &WeightedGraph) -> Result<EigenData> {
    g.require_connected()?;
    if g.vertex_count() < 2 {
        return Err(Error::InvalidParameter("λ₁ needs at least two vertices".into()));
    }
    let psi = g.measure();
    let (values, vectors) = dense_route(g);
    let lambda1 = values[1];
    let diameter = values[values.len() - 1] - values[0];
    let tol = 1e-8 * diameter;
    let cluster: Vec<Vec<f64>> = values
        .iter()
        .zip(vectors)
        .skip(1)
        .filter(|(v, _)| (*v - lambda1).abs() <= tol)
        .map(|(_, mut u)| {
            remove_mean(psi, &mut u);
            u
        })
        .collect();
    let mut basis = psi_orthonormalize(psi, cluster);
    for b in &mut basis {
        let lead = b
            .iter()
            .copied()
            .fold(0.0f64, |a, t| if t.abs() > a.abs() + 1e-12 { t } else { a });
        if lead < 0.0 {
            b.iter_mut().for_each(|t| *t = -*t);
        }
    }
    let rayleigh_value = rayleigh_route(g, 0);
    if (rayleigh_value - lambda1).abs() > 1e-7 * lambda1 {
        return Err(Error::Inconsistent(format!(
            "λ₁ routes disagree: dense {lambda1}, Rayleigh {rayleigh_value}"
        )));
    }
    Ok(EigenData {
        lambda1,
        rayleigh_value,
        multiplicity: basis.len(),
        basis,
        tol,
    })
}

/// |∇ᵐu| for an eigenfunction via powers of λ₁ instead of repeated Laplacians.
pub fn eigen_grad_norm_shortcut(g: &WeightedGraph, lambda1: f64, u: &[f64], m: usize) -> Result<Vec<f64>> {
    check_len(g.vertex_count(), u.len())?;
    if m.is_multiple_of(2) {
        let f = lambda1.powi((m / 2) as i32);
        Ok(u.iter().map(|t| f * t.abs()).collect())
    } else {
        let f = lambda1.powi(((m - 1) / 2) as i32);
        Ok(m_grad_norm(g, u, 1)?.into_iter().map(|t| f * t).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerIdentityReport {
    pub m: usize,
    pub max_relative_deviation: f64,
    pub max_abs_mean: f64,
    pub functions_checked: usize,
}

/// Checks ∫|∇ᵐu|² dψ = λ₁ᵐ ∫u² dψ and ∫u dψ = 0 on the basis and on random combinations.
pub fn eigenspace_power_identity(
    g: &WeightedGraph,
    eig: &EigenData,
    m: usize,
    samples: usize,
    seed: u64,
) -> Result<PowerIdentityReport> {
    let psi = g.measure();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut funcs = eig.basis.clone();
    for _ in 0..samples {
        let mut u = vec![0.0; g.vertex_count()];
        for b in &eig.basis {
            let c: f64 = rng.random_range(-1.0..1.0);
            u.iter_mut().zip(b).for_each(|(a, t)| *a += c * t);
        }
        funcs.push(u);
    }
    let mut report = PowerIdentityReport {
        m,
        max_relative_deviation: 0.0,
        max_abs_mean: 0.0,
        functions_checked: funcs.len(),
    };
    for u in &funcs {
        let lhs: f64 = m_grad_norm(g, u, m)?.iter().zip(psi).map(|(t, p)| p * t * t).sum();
        let rhs = eig.lambda1.powi(m as i32) * psi_dot(psi, u, u);
        let dev = if rhs == 0.0 && lhs == 0.0 {
            0.0
        } else {
            (lhs - rhs).abs() / rhs.abs().max(lhs.abs())
        };
        report.max_relative_deviation = report.max_relative_deviation.max(dev);
        let mean: f64 = (0..u.len()).map(|x| psi[x] * u[x]).sum();
        report.max_abs_mean = report.max_abs_mean.max(mean.abs());
    }
    Ok(report)
}

/// A Lebesgue exponent, possibly infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exponent {
    Finite(f64),
    Infinity,
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Exponent::Finite(q) => s.serialize_f64(*q),
            Exponent::Infinity => s.serialize_str("inf"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstantKind {
    Analytic,
    Empirical,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmbeddingConstant {
    pub value: f64,
    pub kind: ConstantKind,
    pub target: Exponent,
    /// Branch terms of an analytic maximum.
    pub terms: Vec<f64>,
    pub witness: Option<Vec<f64>>,
    pub note: Option<String>,
}

/// The L^q constant C* and the sup-norm constant C_* for eigenspace functions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenspaceConstants {
    pub cstar: EmbeddingConstant,
    pub csup: EmbeddingConstant,
}

pub fn sobolev_constant_cstar(g: &WeightedGraph, m: usize, q: f64, origin: usize) -> Result<EigenspaceConstants> {
    let eig = first_eigenvalue(g)?;
    cstar_with(g, eig.lambda1, m, q, origin)
}

/// Evaluates both closed-form constants for a given λ₁.
pub fn cstar_with(g: &WeightedGraph, lambda1: f64, m: usize, q: f64, origin: usize) -> Result<EigenspaceConstants> {
    g.require_connected()?;
    if !(q.is_finite() && q > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "exponent q = {q} must be positive and finite"
        )));
    }
    if m == 0 {
        return Err(Error::InvalidParameter("gradient order m must be at least 1".into()));
    }
    let rho: Vec<f64> = distances_from(g, origin)?.into_iter().map(|d| d as f64).collect();
    let psi = g.measure();
    let omega0 = g.min_weight();
    let psi0 = g.min_measure();
    let psi_o = psi[origin];
    let lam = lambda1.powf((1.0 - m as f64) / 2.0);
    let lam_m1 = lambda1.powi(m as i32) + 1.0;
    let rho_q = lebesgue(g, &rho, q);
    let big = rho_q.max(psi_o.powf(1.0 / q));
    let terms = vec![
        2.0 * 2f64.sqrt() * lam / omega0.sqrt() * rho_q,
        2f64.powf(1.0 / q + 1.0) * big / psi_o.sqrt(),
        2f64.powf(1.0 / q) * big / (psi0 * lam_m1).sqrt(),
    ];
    let rho_max = rho.iter().copied().fold(0.0, f64::max);
    let sup_terms = vec![
        2f64.sqrt() * lam / omega0.sqrt() * rho_max + 1.0 / psi_o.sqrt(),
        1.0 / (psi0 * lam_m1).sqrt(),
    ];
    let max_of = |t: &[f64]| t.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let note = (q < 1.0).then(|| "q < 1: formula evaluated verbatim; L^q is not a norm here".to_string());
    Ok(EigenspaceConstants {
        cstar: EmbeddingConstant {
            value: max_of(&terms),
            kind: ConstantKind::Analytic,
            target: Exponent::Finite(q),
            terms,
            witness: None,
            note,
        },
        csup: EmbeddingConstant {
            value: max_of(&sup_terms),
            kind: ConstantKind::Analytic,
            target: Exponent::Infinity,
            terms: sup_terms,
            witness: None,
            note: Some("evaluated at the largest distance from the center".into()),
        },
    })
}

/// Multi-start settings shared by the Rayleigh and embedding optimizers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MultiStart {
    pub starts: usize,
    pub seed: u64,
    pub max_iter: usize,
    /// Relative gradient tolerance.
    pub tol: f64,
}

impl Default for MultiStart {
    fn default() -> Self {
        Self {
            starts: 16,
            seed: 0,
            max_iter: 20_000,
            tol: 1e-10,
        }
    }
}

fn descent_options(cfg: &MultiStart, grad_tol: f64) -> DescentOptions {
    DescentOptions {
        max_iter: cfg.max_iter,
        grad_tol,
        c1: 1e-4,
        backtrack: 0.5,
        init_step: 1.0,
        memory: 8,
        stall: Some((200, 1e-15)),
        record: false,
    }
}

fn start_points(cfg: &MultiStart, dim: usize, coordinate: usize) -> Vec<Vec<f64>> {
    let mut starts = vec![(0..dim).map(|j| if j == coordinate { 1.0 } else { 0.0 }).collect()];
    starts.push((0..dim).map(|j| 1.0 + 0.01 * ((j + 1) as f64).sin()).collect());
    for s in 2..cfg.starts.max(2) {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add((s as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)));
        starts.push((0..dim).map(|_| rng.random_range(-1.0..1.0)).collect());
    }
    starts.truncate(cfg.starts.max(1));
    starts
}

/// Value and ψ-gradient of a functional of vertex functions.
type Functional<'a> = Box<dyn Fn(&[f64]) -> (f64, Vec<f64>) + Sync + 'a>;

/// Homogeneous numerator/denominator pair evaluated on subspace coordinates.
struct Ratio<'a> {
    space: &'a ConstraintSubspace,
    psi: &'a [f64],
    num: Functional<'a>,
    den: Functional<'a>,
    /// Common homogeneity degree, used to normalize iterates.
    degree: f64,
}

#[derive(Debug, Clone)]
struct RatioMin {
    value: f64,
    coords: Vec<f64>,
}

impl Ratio<'_> {
    fn eval(&self, c: &[f64]) -> Option<(f64, Vec<f64>)> {
        let u = self.space.combine(c);
        let (d, gd) = (self.den)(&u);
        if !(d.is_finite() && d > 0.0) {
            return None;
        }
        let (nv, gn) = (self.num)(&u);
        let r = nv / d;
        let grad: Vec<f64> = gn.iter().zip(&gd).map(|(a, b)| (a - r * b) / d).collect();
        Some((r, self.space.coords(self.psi, &grad)))
    }

    fn normalize(&self, c: &mut [f64]) {
        let (d, _) = (self.den)(&self.space.combine(c));
        if d > 0.0 && d.is_finite() {
            let s = d.powf(1.0 / self.degree);
            c.iter_mut().for_each(|t| *t /= s);
        }
    }

    fn minimize(&self, starts: Vec<Vec<f64>>, cfg: &MultiStart) -> Option<RatioMin> {
        best_of(
            starts,
            |x0| {
                let (r0, _) = self.eval(&x0)?;
                let opts = descent_options(cfg, cfg.tol * r0.abs().max(1e-12));
                let f = |c: &[f64]| self.eval(c);
                let norm = |c: &mut [f64]| self.normalize(c);
                let out = descend(&f, x0, opts, Some(&norm))?;
                Some(RatioMin {
                    value: out.value,
                    coords: out.x,
                })
            },
            |r| (r.value, &r.coords),
        )
    }
}

/// Which weighted Rayleigh quotient to minimize.
#[derive(Debug, Clone, Copy)]
pub enum RayleighProblem<'a> {
    /// ∫_Ω |∇ᵐu|^p dψ / ∫_Ω weight |u|^p dψ over C₀ᵐ(Ω).
    Dirichlet { domain: &'a DomainSpec, weight: &'a [f64] },
    /// ∫ (|∇ᵐu|^p + h|u|^p) dψ / ∫ |u|^p dψ over all functions.
    Global { h: &'a [f64] },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RayleighInf {
    pub value: f64,
    pub witness: Vec<f64>,
}

pub fn weighted_rayleigh_inf(
    g: &WeightedGraph,
    problem: RayleighProblem<'_>,
    m: usize,
    p: f64,
    cfg: &MultiStart,
) -> Result<RayleighInf> {
    crate::calculus::check_operator_exponent(p)?;
    if m == 0 {
        return Err(Error::InvalidParameter("gradient order m must be at least 1".into()));
    }
    let n = g.vertex_count();
    let psi = g.measure();
    let (space, chi, weight) = match problem {
        RayleighProblem::Dirichlet { domain, weight } => {
            check_len(n, weight.len())?;
            (constraint_subspace(g, domain, m)?, domain.indicator(), weight.to_vec())
        }
        RayleighProblem::Global { h } => {
            check_len(n, h.len())?;
            if let Some(x) = h.iter().position(|&t| t.is_nan() || t <= 0.0) {
                return Err(Error::InvalidParameter(format!("h must be positive, h({x}) is not")));
            }
            (ConstraintSubspace::whole(g), vec![1.0; n], vec![1.0; n])
        }
    };
    let support: Vec<usize> = (0..n)
        .filter(|&x| chi[x] > 0.0 && space.basis().iter().any(|b| b[x].abs() > 1e-14))
        .collect();
    if support.iter().all(|&x| weight[x] <= 0.0) {
        return Err(Error::WeightIncompatible);
    }
    let h_term: Option<Vec<f64>> = match problem {
        RayleighProblem::Global { h } => Some(h.to_vec()),
        RayleighProblem::Dirichlet { .. } => None,
    };
    let chi_num = chi.clone();
    let num = move |u: &[f64]| {
        let mut value = grad_energy(g, u, m, p, &chi_num);
        let mut grad: Vec<f64> = poly_masked(g, u, m, p, &chi_num).into_iter().map(|t| p * t).collect();
        if let Some(h) = &h_term {
            for x in 0..u.len() {
                value += psi[x] * h[x] * u[x].abs().powf(p);
                grad[x] += p * h[x] * signed_pow(u[x], p);
            }
        }
        (value, grad)
    };
    let den = move |u: &[f64]| {
        let value = (0..u.len())
            .map(|x| chi[x] * psi[x] * weight[x] * u[x].abs().powf(p))
            .sum();
        let grad = (0..u.len())
            .map(|x| p * chi[x] * weight[x] * signed_pow(u[x], p))
            .collect();
        (value, grad)
    };
    let ratio = Ratio {
        space: &space,
        psi,
        num: Box::new(num),
        den: Box::new(den),
        degree: p,
    };
    let coordinate = (0..space.dim())
        .max_by(|&a, &b| {
            let da = (ratio.den)(&space.basis()[a]).0;
            let db = (ratio.den)(&space.basis()[b]).0;
            da.total_cmp(&db)
        })
        .unwrap_or(0);
    let best = ratio
        .minimize(start_points(cfg, space.dim(), coordinate), cfg)
        .ok_or(Error::WeightIncompatible)?;
    Ok(RayleighInf {
        value: best.value,
        witness: space.combine(&best.coords),
    })
}

fn admissible_space(g: &WeightedGraph, spec: &SobolevSpec) -> Result<ConstraintSubspace> {
    match spec.domain() {
        Some(d) => constraint_subspace(g, d, spec.m),
        None => Ok(ConstraintSubspace::whole(g)),
    }
}

/// p-th power of the Sobolev norm and its ψ-gradient.
fn sobolev_power_with_grad(g: &WeightedGraph, spec: &SobolevSpec, u: &[f64]) -> (f64, Vec<f64>) {
    let p = spec.p;
    let n = u.len();
    let value = spec.power(g, u);
    let grad = match &spec.domain {
        SobolevDomain::Whole => {
            let mut gr = poly_masked(g, u, spec.m, p, &vec![1.0; n]);
            for x in 0..n {
                gr[x] = p * gr[x] + p * spec.h.as_ref().map_or(1.0, |h| h[x]) * signed_pow(u[x], p);
            }
            gr
        }
        SobolevDomain::Dirichlet(d) => poly_masked(g, u, spec.m, p, &d.indicator())
            .into_iter()
            .map(|t| p * t)
            .collect(),
        SobolevDomain::DirichletFull(d) => {
            let chi = d.indicator();
            let mut gr: Vec<f64> = (0..n).map(|x| p * chi[x] * signed_pow(u[x], p)).collect();
            for k in 1..=spec.m {
                for (a, b) in gr.iter_mut().zip(poly_masked(g, u, k, p, &chi)) {
                    *a += p * b;
                }
            }
            gr
        }
    };
    (value, grad)
}

/// Best ratio ‖u‖_{L^q} / ‖u‖_spec found over admissible u; a lower bound on the embedding constant.
pub fn empirical_embedding_constant(
    g: &WeightedGraph,
    spec: &SobolevSpec,
    target: Exponent,
    cfg: &MultiStart,
) -> Result<EmbeddingConstant> {
    crate::calculus::check_operator_exponent(spec.p)?;
    let space = admissible_space(g, spec)?;
    let psi = g.measure();
    let p = spec.p;
    // Minimize ‖u‖_spec^p / D(u)^(p/q-ish) through a ratio of two p-homogeneous terms.
    let num = |u: &[f64]| sobolev_power_with_grad(g, spec, u);
    let (best, note) = match target {
        Exponent::Finite(q) => {
            if !(q.is_finite() && q >= 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "target exponent {q} must be at least 1"
                )));
            }
            let den = move |u: &[f64]| {
                let l: f64 = (0..u.len()).map(|x| psi[x] * u[x].abs().powf(q)).sum();
                if l <= 0.0 {
                    return (0.0, vec![0.0; u.len()]);
                }
                let value = l.powf(p / q);
                let factor = p * l.powf(p / q - 1.0);
                let grad = u.iter().map(|&t| factor * t.signum() * t.abs().powf(q - 1.0)).collect();
                (value, grad)
            };
            let ratio = Ratio {
                space: &space,
                psi,
                num: Box::new(num),
                den: Box::new(den),
                degree: p,
            };
            (ratio.minimize(start_points(cfg, space.dim(), 0), cfg), None)
        }
        Exponent::Infinity => {
            let mut best: Option<RatioMin> = None;
            for x in 0..g.vertex_count() {
                let den = move |u: &[f64]| {
                    let mut grad = vec![0.0; u.len()];
                    if u[x] <= 0.0 {
                        return (0.0, grad);
                    }
                    grad[x] = p * u[x].powf(p - 1.0) / psi[x];
                    (u[x].powf(p), grad)
                };
                let ratio = Ratio {
                    space: &space,
                    psi,
                    num: Box::new(num),
                    den: Box::new(den),
                    degree: p,
                };
                let mut e = vec![0.0; g.vertex_count()];
                e[x] = 1.0;
                let start = space.coords(psi, &e);
                if start.iter().all(|&t| t == 0.0) {
                    continue;
                }
                let single = MultiStart { starts: 1, ..*cfg };
                if let Some(r) = ratio.minimize(vec![start], &single) {
                    if best.as_ref().is_none_or(|b| r.value < b.value) {
                        best = Some(r);
                    }
                }
            }
            (best, Some("one convex start per vertex".to_string()))
        }
    };
    let best = best.ok_or(Error::TrivialSubspace)?;
    Ok(EmbeddingConstant {
        value: best.value.powf(-1.0 / p),
        kind: ConstantKind::Empirical,
        target,
        terms: Vec::new(),
        witness: Some(space.combine(&best.coords)),
        note,
    })
}

/// Best value of ‖(u,v)‖²_ℍ / (∫_Ω |u|^p |v|^q dψ)^{2/(p+q)} over pairs in C₀¹(Ω).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoupledConstant {
    pub value: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

pub fn coupled_constant(
    g: &WeightedGraph,
    domain: &DomainSpec,
    p: f64,
    q: f64,
    cfg: &MultiStart,
) -> Result<CoupledConstant> {
    if !(p >= 1.0 && q >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "exponents p = {p}, q = {q} must be at least 1"
        )));
    }
    let single = constraint_subspace(g, domain, 1)?;
    let k = single.dim();
    let n = g.vertex_count();
    let psi = g.measure();
    let chi = domain.indicator();
    let mut basis = Vec::with_capacity(2 * k);
    for b in single.basis() {
        basis.push(
            b.iter()
                .copied()
                .chain(std::iter::repeat_n(0.0, n))
                .collect::<Vec<f64>>(),
        );
    }
    for b in single.basis() {
        basis.push(
            std::iter::repeat_n(0.0, n)
                .chain(b.iter().copied())
                .collect::<Vec<f64>>(),
        );
    }
    let doubled = crate::graph::build_graph(
        &g.edges()
            .iter()
            .flat_map(|e| [(e.i, e.j, e.weight), (e.i + n, e.j + n, e.weight)])
            .collect::<Vec<_>>(),
    )?;
    let space = ConstraintSubspace::from_orthonormal(&doubled, basis)?;
    let psi2 = doubled.measure().to_vec();
    let chi_num = chi.clone();
    let num = move |w: &[f64]| {
        let (u, v) = w.split_at(n);
        let a: Vec<f64> = chi_num.to_vec();
        let value = grad_energy(g, u, 1, 2.0, &a) + grad_energy(g, v, 1, 2.0, &a);
        let mut grad = poly_masked(g, u, 1, 2.0, &a);
        grad.extend(poly_masked(g, v, 1, 2.0, &a));
        grad.iter_mut().for_each(|t| *t *= 2.0);
        (value, grad)
    };
    let s = 2.0 / (p + q);
    let den = move |w: &[f64]| {
        let (u, v) = w.split_at(n);
        let integral: f64 = (0..n)
            .map(|x| chi[x] * psi[x] * u[x].abs().powf(p) * v[x].abs().powf(q))
            .sum();
        if integral <= 0.0 {
            return (0.0, vec![0.0; 2 * n]);
        }
        let factor = s * integral.powf(s - 1.0);
        let mut grad = vec![0.0; 2 * n];
        for x in 0..n {
            grad[x] = factor * chi[x] * p * signed_pow(u[x], p) * v[x].abs().powf(q);
            grad[x + n] = factor * chi[x] * q * u[x].abs().powf(p) * signed_pow(v[x], q);
        }
        (integral.powf(s), grad)
    };
    let ratio = Ratio {
        space: &space,
        psi: &psi2,
        num: Box::new(num),
        den: Box::new(den),
        degree: 2.0,
    };
    let mut starts = start_points(cfg, 2 * k, 0);
    starts[0] = vec![1.0; 2 * k];
    let best = ratio.minimize(starts, cfg).ok_or(Error::TrivialSubspace)?;
    let w = space.combine(&best.coords);
    Ok(CoupledConstant {
        value: best.value,
        u: w[..n].to_vec(),
        v: w[n..].to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_graph, generate, integral, GraphFamily, WeightSpec};

    fn p2() -> WeightedGraph {
        build_graph(&[(0, 1, 1.0)]).unwrap()
    }
    fn p3() -> WeightedGraph {
        build_graph(&[(0, 1, 1.0), (1, 2, 1.0)]).unwrap()
    }
    fn k3() -> WeightedGraph {
        generate(GraphFamily::Complete(3), WeightSpec::Unit, 0).unwrap()
    }

    #[test]
    fn small_graph_eigenvalues() {
        let e = first_eigenvalue(&p2()).unwrap();
        assert!((e.lambda1 - 2.0).abs() < 1e-12);
        assert_eq!(e.multiplicity, 1);
        let b = &e.basis[0];
        assert!((b[0] + b[1]).abs() < 1e-12 && (b[0] - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        let e = first_eigenvalue(&k3()).unwrap();
        assert!((e.lambda1 - 1.5).abs() < 1e-12);
        assert_eq!(e.multiplicity, 2);
        let c4 = generate(GraphFamily::Cycle(4), WeightSpec::Unit, 0).unwrap();
        let e = first_eigenvalue(&c4).unwrap();
        assert!((e.lambda1 - 1.0).abs() < 1e-12);
        assert_eq!(e.multiplicity, 2);
        // The span must contain (1,0,−1,0) and (0,1,0,−1).
        let psi = c4.measure();
        for target in [[1.0, 0.0, -1.0, 0.0], [0.0, 1.0, 0.0, -1.0]] {
            let proj: f64 = e.basis.iter().map(|b| psi_dot(psi, b, &target).powi(2)).sum();
            assert!((proj - psi_dot(psi, &target, &target)).abs() < 1e-10);
        }
    }

    #[test]
    fn disconnected_graph_rejected() {
        let g = build_graph(&[(0, 1, 1.0), (2, 3, 1.0)]).unwrap();
        assert!(matches!(first_eigenvalue(&g), Err(Error::Disconnected { .. })));
    }

    #[test]
    fn basis_invariants() {
        let g = generate(GraphFamily::RandomConnected(14, 0.3), WeightSpec::Uniform(0.1, 2.0), 5).unwrap();
        let e = first_eigenvalue(&g).unwrap();
        for b in &e.basis {
            assert!(eigen_residual(&g, e.lambda1, b) <= 1e-10 * crate::calculus::sup_norm(b));
            assert!(integral(&g, b).unwrap().abs() <= 1e-10);
        }
        assert!((e.rayleigh_value - e.lambda1).abs() <= 1e-8 * e.lambda1);
    }

    #[test]
    fn shortcut_agrees_with_recursion() {
        let g = generate(GraphFamily::Grid(3, 4), WeightSpec::Uniform(0.5, 1.5), 1).unwrap();
        let e = first_eigenvalue(&g).unwrap();
        for m in 1..=4 {
            let a = m_grad_norm(&g, &e.basis[0], m).unwrap();
            let b = eigen_grad_norm_shortcut(&g, e.lambda1, &e.basis[0], m).unwrap();
            assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() <= 1e-12 * (1.0 + y.abs())));
        }
    }

    #[test]
    fn power_identity() {
        let r = eigenspace_power_identity(&p2(), &first_eigenvalue(&p2()).unwrap(), 1, 10, 0).unwrap();
        assert!(r.max_relative_deviation <= 1e-12);
        let r = eigenspace_power_identity(&k3(), &first_eigenvalue(&k3()).unwrap(), 3, 10, 0).unwrap();
        assert!(r.max_relative_deviation <= 1e-10);
        let zero = EigenData {
            lambda1: 2.0,
            rayleigh_value: 2.0,
            multiplicity: 1,
            basis: vec![vec![0.0, 0.0]],
            tol: 0.0,
        };
        assert_eq!(
            eigenspace_power_identity(&p2(), &zero, 2, 0, 0)
                .unwrap()
                .max_relative_deviation,
            0.0
        );
    }

    #[test]
    fn cstar_on_two_vertices() {
        let c = sobolev_constant_cstar(&p2(), 1, 2.0, 0).unwrap();
        let r8 = 8f64.sqrt();
        assert!((c.cstar.value - r8).abs() < 1e-12);
        let expected = [r8, r8, (2.0f64 / 3.0).sqrt()];
        assert!(c.cstar.terms.iter().zip(expected).all(|(a, b)| (a - b).abs() < 1e-12));
        // For m = 1 the λ₁ power is 1, so any λ₁ gives the same first term.
        let other = cstar_with(&p2(), 17.0, 1, 2.0, 0).unwrap();
        assert_eq!(other.cstar.terms[0], c.cstar.terms[0]);
    }

    #[test]
    fn cstar_branches_on_triangle() {
        let c = sobolev_constant_cstar(&k3(), 2, 1.0, 0).unwrap();
        // ‖ρ‖_1 = 2 + 2 = 4, ψ(O) = 2, ψ₀ = 2, λ₁ = 3/2, ω₀ = 1.
        let lam = 1.5f64;
        let t1 = 2.0 * 2f64.sqrt() * lam.powf(-0.5) * 4.0;
        let t2 = 4.0 * 4.0 / 2f64.sqrt();
        let t3 = 2.0 * 4.0 / (2.0 * (lam * lam + 1.0)).sqrt();
        for (a, b) in c.cstar.terms.iter().zip([t1, t2, t3]) {
            assert!((a - b).abs() <= 1e-12 * b);
        }
        assert_eq!(c.cstar.value, t1.max(t2).max(t3));
        assert!(sobolev_constant_cstar(&k3(), 1, 0.5, 0).unwrap().cstar.note.is_some());
    }

    #[test]
    fn dirichlet_rayleigh_single_vertex() {
        let g = p3();
        let d = DomainSpec::new(&g, &[0, 1]).unwrap();
        let r = weighted_rayleigh_inf(
            &g,
            RayleighProblem::Dirichlet {
                domain: &d,
                weight: &[1.0; 3],
            },
            1,
            2.0,
            &MultiStart::default(),
        )
        .unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
        let neg = [-1.0, 1.0, 1.0];
        assert!(matches!(
            weighted_rayleigh_inf(
                &g,
                RayleighProblem::Dirichlet {
                    domain: &d,
                    weight: &neg
                },
                1,
                2.0,
                &MultiStart::default()
            ),
            Err(Error::WeightIncompatible)
        ));
    }

    #[test]
    fn global_rayleigh_attained_by_constants() {
        let g = generate(GraphFamily::RandomConnected(8, 0.4), WeightSpec::Uniform(0.1, 2.0), 3).unwrap();
        let r = weighted_rayleigh_inf(
            &g,
            RayleighProblem::Global { h: &[1.0; 8] },
            1,
            2.0,
            &MultiStart::default(),
        )
        .unwrap();
        assert!((r.value - 1.0).abs() < 1e-9);
    }

    /// Smallest generalized eigenvalue of the Dirichlet energy against the weighted mass on Ω°.
    fn dirichlet_eigen_oracle(g: &WeightedGraph, d: &DomainSpec, weight: &[f64]) -> f64 {
        let free = d.interior();
        let k = free.len();
        let psi = g.measure();
        let mut a = DMatrix::<f64>::zeros(k, k);
        for (ia, &x) in free.iter().enumerate() {
            for (ib, &y) in free.iter().enumerate() {
                // ∫_Ω Γ(1_x, 1_y) dψ = ½ Σ_{z∈Ω} Σ_{w∼z} ω (δ_wx − δ_zx)(δ_wy − δ_zy)
                let mut s = 0.0;
                for &z in d.omega() {
                    for &(w, om) in g.neighbors(z) {
                        let dx = (w == x) as i32 as f64 - (z == x) as i32 as f64;
                        let dy = (w == y) as i32 as f64 - (z == y) as i32 as f64;
                        s += 0.5 * om * dx * dy;
                    }
                }
                a[(ia, ib)] = s;
            }
        }
        let scale: Vec<f64> = free.iter().map(|&x| 1.0 / (psi[x] * weight[x]).sqrt()).collect();
        let b = DMatrix::from_fn(k, k, |i, j| a[(i, j)] * scale[i] * scale[j]);
        SymmetricEigen::new(b)
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn dirichlet_rayleigh_matches_eigen_oracle() {
        let g = generate(GraphFamily::Grid(4, 5), WeightSpec::Uniform(0.3, 1.7), 9).unwrap();
        let d = DomainSpec::new(&g, &(0..14).collect::<Vec<_>>()).unwrap();
        let weight: Vec<f64> = (0..20).map(|x| 0.5 + 0.1 * x as f64).collect();
        let r = weighted_rayleigh_inf(
            &g,
            RayleighProblem::Dirichlet {
                domain: &d,
                weight: &weight,
            },
            1,
            2.0,
            &MultiStart::default(),
        )
        .unwrap();
        let oracle = dirichlet_eigen_oracle(&g, &d, &weight);
        assert!((r.value - oracle).abs() <= 1e-9 * oracle, "{} vs {}", r.value, oracle);
        let scaled: Vec<f64> = weight.iter().map(|w| 3.0 * w).collect();
        let r3 = weighted_rayleigh_inf(
            &g,
            RayleighProblem::Dirichlet {
                domain: &d,
                weight: &scaled,
            },
            1,
            2.0,
            &MultiStart::default(),
        )
        .unwrap();
        assert!((r3.value - r.value / 3.0).abs() <= 1e-10 * r.value);
    }

    #[test]
    fn empirical_constants_on_path() {
        let g = p3();
        let d = DomainSpec::new(&g, &[0, 1]).unwrap();
        let spec = SobolevSpec::new(1, 2.0, None, SobolevDomain::Dirichlet(d.clone())).unwrap();
        let c = empirical_embedding_constant(&g, &spec, Exponent::Finite(2.0), &MultiStart::default()).unwrap();
        assert!((c.value - 1.0).abs() < 1e-10);
        let s = empirical_embedding_constant(&g, &spec, Exponent::Infinity, &MultiStart::default()).unwrap();
        assert!((s.value - 1.0).abs() < 1e-10);
    }

    #[test]
    fn coupled_constant_matches_two_variable_grid() {
        let g = p3();
        let d = DomainSpec::new(&g, &[0, 1]).unwrap();
        let c = coupled_constant(&g, &d, 3.0, 3.0, &MultiStart::default()).unwrap();
        // u = a·1_0, v = b·1_0: (a² + b²) / (|a|³|b|³)^{1/3}.
        let mut grid_min = f64::INFINITY;
        for i in 1..=400 {
            for j in 1..=400 {
                let (a, b) = (i as f64 * 0.01, j as f64 * 0.01);
                grid_min = grid_min.min((a * a + b * b) / (a.powi(3) * b.powi(3)).powf(1.0 / 3.0));
            }
        }
        assert!((c.value - grid_min).abs() < 1e-6);
        assert!((c.value - 2.0).abs() < 1e-9);
    }
}
