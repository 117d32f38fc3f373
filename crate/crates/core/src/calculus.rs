//! Discrete differential operators, Lebesgue and Sobolev norms, and admissible subspaces.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{check_len, Error, Result};
use crate::graph::{DomainSpec, WeightedGraph};

/// Relative tolerance for deciding that a function satisfies the boundary constraints.
pub const ADMISSIBLE_TOL: f64 = 1e-9;

/// |t|^(p-2), with the p = 2 case fixed to 1 so that 0^0 never arises.
pub(crate) fn pow_pm2(t: f64, p: f64) -> f64 {
    if p == 2.0 {
        1.0
    } else {
        t.abs().powf(p - 2.0)
    }
}

/// |t|^(p-2) t.
pub(crate) fn signed_pow(t: f64, p: f64) -> f64 {
    if p == 2.0 {
        t
    } else {
        t.abs().powf(p - 2.0) * t
    }
}

pub(crate) fn lap(g: &WeightedGraph, u: &[f64]) -> Vec<f64> {
    (0..g.vertex_count())
        .map(|x| {
            let s: f64 = g.neighbors(x).iter().map(|&(y, w)| w * (u[y] - u[x])).sum();
            s / g.measure()[x]
        })
        .collect()
}

pub(crate) fn lap_power(g: &WeightedGraph, u: &[f64], k: usize) -> Vec<f64> {
    (0..k).fold(u.to_vec(), |w, _| lap(g, &w))
}

pub(crate) fn gamma_unchecked(g: &WeightedGraph, u: &[f64], v: &[f64]) -> Vec<f64> {
    (0..g.vertex_count())
        .map(|x| {
            let s: f64 = g
                .neighbors(x)
                .iter()
                .map(|&(y, w)| w * (u[y] - u[x]) * (v[y] - v[x]))
                .sum();
            s / (2.0 * g.measure()[x])
        })
        .collect()
}

pub(crate) fn grad_len(g: &WeightedGraph, u: &[f64]) -> Vec<f64> {
    gamma_unchecked(g, u, u)
        .into_iter()
        .map(|t| t.max(0.0).sqrt())
        .collect()
}

/// (1/(2ψ(x))) Σ ω_xy (a(y) + a(x)) (u(y) − u(x)).
pub(crate) fn weighted_divergence(g: &WeightedGraph, u: &[f64], a: &[f64]) -> Vec<f64> {
    (0..g.vertex_count())
        .map(|x| {
            let s: f64 = g
                .neighbors(x)
                .iter()
                .map(|&(y, w)| w * (a[y] + a[x]) * (u[y] - u[x]))
                .sum();
            s / (2.0 * g.measure()[x])
        })
        .collect()
}

/// Δu(x) = (1/ψ(x)) Σ_{y∼x} ω_xy (u(y) − u(x)).
pub fn laplacian(g: &WeightedGraph, u: &[f64]) -> Result<Vec<f64>> {
    check_len(g.vertex_count(), u.len())?;
    Ok(lap(g, u))
}

/// Γ(u,v)(x) = (1/(2ψ(x))) Σ_{y∼x} ω_xy (u(y) − u(x))(v(y) − v(x)).
pub fn gamma(g: &WeightedGraph, u: &[f64], v: &[f64]) -> Result<Vec<f64>> {
    check_len(g.vertex_count(), u.len())?;
    check_len(g.vertex_count(), v.len())?;
    Ok(gamma_unchecked(g, u, v))
}

fn m_grad_unchecked(g: &WeightedGraph, u: &[f64], m: usize) -> Vec<f64> {
    if m.is_multiple_of(2) {
        lap_power(g, u, m / 2).into_iter().map(f64::abs).collect()
    } else {
        grad_len(g, &lap_power(g, u, (m - 1) / 2))
    }
}

/// |∇ᵐu|: |∇Δ^((m−1)/2) u| for odd m and |Δ^(m/2) u| for even m.
pub fn m_grad_norm(g: &WeightedGraph, u: &[f64], m: usize) -> Result<Vec<f64>> {
    check_len(g.vertex_count(), u.len())?;
    if m == 0 {
        return Err(Error::InvalidParameter("gradient order m must be at least 1".into()));
    }
    Ok(m_grad_unchecked(g, u, m))
}

pub(crate) fn check_operator_exponent(p: f64) -> Result<()> {
    if p >= 2.0 && p.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("exponent {p} must satisfy 2 ≤ p < ∞")))
    }
}

/// Δ_p u; for p = 2 this is exactly [`laplacian`].
pub fn p_laplacian(g: &WeightedGraph, u: &[f64], p: f64) -> Result<Vec<f64>> {
    check_len(g.vertex_count(), u.len())?;
    check_operator_exponent(p)?;
    if p == 2.0 {
        return Ok(lap(g, u));
    }
    let a: Vec<f64> = grad_len(g, u).into_iter().map(|t| pow_pm2(t, p)).collect();
    Ok(weighted_divergence(g, u, &a))
}

pub(crate) fn mask_of(g: &WeightedGraph, domain: Option<&DomainSpec>) -> Vec<f64> {
    domain.map_or_else(|| vec![1.0; g.vertex_count()], DomainSpec::indicator)
}

/// 𝓛_{m,p} u restricted to the integration mask `chi`; the L²(ψ) gradient of (1/p)∫χ|∇ᵐu|^p.
pub(crate) fn poly_masked(g: &WeightedGraph, u: &[f64], m: usize, p: f64, chi: &[f64]) -> Vec<f64> {
    if m.is_multiple_of(2) {
        let k = m / 2;
        let w = lap_power(g, u, k);
        let t: Vec<f64> = w.iter().zip(chi).map(|(&s, &c)| c * signed_pow(s, p)).collect();
        lap_power(g, &t, k)
    } else {
        let k = (m - 1) / 2;
        let w = lap_power(g, u, k);
        let a: Vec<f64> = grad_len(g, &w)
            .into_iter()
            .zip(chi)
            .map(|(t, &c)| c * pow_pm2(t, p))
            .collect();
        let t: Vec<f64> = weighted_divergence(g, &w, &a).into_iter().map(|s| -s).collect();
        lap_power(g, &t, k)
    }
}

/// ∫_S |∇ᵐu|^p dψ, where S is Ω for a Dirichlet domain and V otherwise.
pub(crate) fn grad_energy(g: &WeightedGraph, u: &[f64], m: usize, p: f64, chi: &[f64]) -> f64 {
    m_grad_unchecked(g, u, m)
        .iter()
        .zip(g.measure())
        .zip(chi)
        .map(|((t, psi), c)| c * psi * t.powf(p))
        .sum()
}

/// The pairing B(u, φ) that defines 𝓛_{m,p} weakly, integrated over Ω (or V without a domain).
pub fn pairing(
    g: &WeightedGraph,
    u: &[f64],
    phi: &[f64],
    m: usize,
    p: f64,
    domain: Option<&DomainSpec>,
) -> Result<f64> {
    check_len(g.vertex_count(), u.len())?;
    check_len(g.vertex_count(), phi.len())?;
    check_operator_exponent(p)?;
    let chi = mask_of(g, domain);
    let order = m_grad_norm(g, u, m)?;
    let k = if m.is_multiple_of(2) { m / 2 } else { (m - 1) / 2 };
    let w = lap_power(g, u, k);
    let z = lap_power(g, phi, k);
    let inner = if m.is_multiple_of(2) {
        w.iter().zip(&z).map(|(a, b)| a * b).collect()
    } else {
        gamma_unchecked(g, &w, &z)
    };
    Ok((0..g.vertex_count())
        .map(|x| chi[x] * g.measure()[x] * pow_pm2(order[x], p) * inner[x])
        .sum())
}

/// Pointwise 𝓛_{m,p}u(x) = B(u, 1_x)/ψ(x).
pub fn poly_apply(g: &WeightedGraph, u: &[f64], m: usize, p: f64, domain: Option<&DomainSpec>) -> Result<Vec<f64>> {
    check_len(g.vertex_count(), u.len())?;
    check_operator_exponent(p)?;
    if m == 0 {
        return Err(Error::InvalidParameter("gradient order m must be at least 1".into()));
    }
    if let Some(d) = domain {
        let r = constraint_residual(g, d, m, u, ConstraintOptions::default());
        if r > ADMISSIBLE_TOL * sup_norm(u).max(1.0) {
            return Err(Error::Inadmissible(r));
        }
    }
    Ok(poly_masked(g, u, m, p, &mask_of(g, domain)))
}

pub(crate) fn sup_norm(u: &[f64]) -> f64 {
    u.iter().fold(0.0, |a, &b| a.max(b.abs()))
}

/// Where a Sobolev norm integrates and which terms it includes.
#[derive(Debug, Clone, PartialEq)]
pub enum SobolevDomain {
    /// W^{m,p}(V): (∫(|∇ᵐu|^p + h|u|^p) dψ)^{1/p}, with h ≡ 1 when absent.
    Whole,
    /// W₀^{m,p}(Ω): (∫_Ω |∇ᵐu|^p dψ)^{1/p}.
    Dirichlet(DomainSpec),
    /// W^{m,p}(Ω): (Σ_{k=0..m} ∫_Ω |∇ᵏu|^p dψ)^{1/p}.
    DirichletFull(DomainSpec),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SobolevSpec {
    pub m: usize,
    pub p: f64,
    pub h: Option<Vec<f64>>,
    pub domain: SobolevDomain,
}

impl SobolevSpec {
    pub fn new(m: usize, p: f64, h: Option<Vec<f64>>, domain: SobolevDomain) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParameter("Sobolev order m must be at least 1".into()));
        }
        if !(p.is_finite() && p > 1.0) {
            return Err(Error::InvalidParameter(format!("Sobolev exponent {p} must exceed 1")));
        }
        if let Some(x) = h.as_ref().and_then(|h| h.iter().position(|&t| t.is_nan() || t <= 0.0)) {
            return Err(Error::InvalidParameter(format!("h must be positive, h({x}) is not")));
        }
        Ok(Self { m, p, h, domain })
    }

    pub fn domain(&self) -> Option<&DomainSpec> {
        match &self.domain {
            SobolevDomain::Whole => None,
            SobolevDomain::Dirichlet(d) | SobolevDomain::DirichletFull(d) => Some(d),
        }
    }

    /// The p-th power of the norm.
    pub(crate) fn power(&self, g: &WeightedGraph, u: &[f64]) -> f64 {
        let psi = g.measure();
        match &self.domain {
            SobolevDomain::Whole => {
                let top = grad_energy(g, u, self.m, self.p, &vec![1.0; u.len()]);
                let low: f64 = (0..u.len())
                    .map(|x| psi[x] * self.h.as_ref().map_or(1.0, |h| h[x]) * u[x].abs().powf(self.p))
                    .sum();
                top + low
            }
            SobolevDomain::Dirichlet(d) => grad_energy(g, u, self.m, self.p, &d.indicator()),
            SobolevDomain::DirichletFull(d) => {
                let chi = d.indicator();
                let base: f64 = d.omega().iter().map(|&x| psi[x] * u[x].abs().powf(self.p)).sum();
                base + (1..=self.m).map(|k| grad_energy(g, u, k, self.p, &chi)).sum::<f64>()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Norm {
    /// (∫|u|^s dψ)^{1/s}.
    Lebesgue(f64),
    /// max |u|.
    Sup,
    Sobolev(SobolevSpec),
}

pub fn norm(g: &WeightedGraph, u: &[f64], which: &Norm) -> Result<f64> {
    check_len(g.vertex_count(), u.len())?;
    match which {
        Norm::Lebesgue(s) => {
            if !(s.is_finite() && *s > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "Lebesgue exponent {s} must be positive"
                )));
            }
            Ok(lebesgue(g, u, *s))
        }
        Norm::Sup => Ok(sup_norm(u)),
        Norm::Sobolev(spec) => {
            if let Some(h) = &spec.h {
                check_len(g.vertex_count(), h.len())?;
            }
            if let Some(d) = spec.domain() {
                if let Some(x) = (0..u.len()).find(|&x| !d.contains(x) && u[x] != 0.0) {
                    return Err(Error::Domain(format!("u is not zero-extended: u({x}) ≠ 0 outside Ω")));
                }
            }
            Ok(spec.power(g, u).powf(1.0 / spec.p))
        }
    }
}

pub(crate) fn lebesgue(g: &WeightedGraph, u: &[f64], s: f64) -> f64 {
    let sum: f64 = u.iter().zip(g.measure()).map(|(x, m)| m * x.abs().powf(s)).sum();
    sum.powf(1.0 / s)
}

/// How odd-order boundary conditions treat neighbors outside Ω.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct ConstraintOptions {
    /// Only impose differences along edges that stay inside Ω.
    pub interior_only_differences: bool,
}

/// Evaluates every boundary condition of C₀ᵐ(Ω) on `u` (support outside Ω counts as a violation).
fn constraint_values(g: &WeightedGraph, d: &DomainSpec, m: usize, u: &[f64], opts: ConstraintOptions) -> Vec<f64> {
    let mut out: Vec<f64> = (0..u.len()).filter(|&x| !d.contains(x)).map(|x| u[x]).collect();
    out.extend(d.boundary().iter().map(|&x| u[x]));
    let mut powers = vec![u.to_vec()];
    for i in 1..m {
        let k = if i % 2 == 0 { i / 2 } else { (i - 1) / 2 };
        while powers.len() <= k {
            let next = lap(g, powers.last().expect("nonempty"));
            powers.push(next);
        }
        let w = &powers[k];
        for &x in d.boundary() {
            if i % 2 == 0 {
                out.push(w[x]);
            } else {
                for &(y, _) in g.neighbors(x) {
                    if !opts.interior_only_differences || d.contains(y) {
                        out.push(w[y] - w[x]);
                    }
                }
            }
        }
    }
    out
}

/// Largest absolute violation of the C₀ᵐ(Ω) conditions.
pub fn constraint_residual(g: &WeightedGraph, d: &DomainSpec, m: usize, u: &[f64], opts: ConstraintOptions) -> f64 {
    sup_norm(&constraint_values(g, d, m, u, opts))
}

/// A linear space of functions with a ψ-orthonormal basis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstraintSubspace {
    ambient: usize,
    basis: Vec<Vec<f64>>,
}

impl ConstraintSubspace {
    /// All functions on V, with basis 1_x/√ψ(x).
    pub fn whole(g: &WeightedGraph) -> Self {
        let all: Vec<usize> = (0..g.vertex_count()).collect();
        Self::free_on(g, &all)
    }

    /// Functions supported on `set`, with basis 1_x/√ψ(x).
    pub fn free_on(g: &WeightedGraph, set: &[usize]) -> Self {
        let n = g.vertex_count();
        let basis = set
            .iter()
            .map(|&x| {
                let mut b = vec![0.0; n];
                b[x] = 1.0 / g.measure()[x].sqrt();
                b
            })
            .collect();
        Self {
            ambient: set.len(),
            basis,
        }
    }

    /// Wraps a basis that is already ψ-orthonormal.
    pub fn from_orthonormal(g: &WeightedGraph, basis: Vec<Vec<f64>>) -> Result<Self> {
        for b in &basis {
            check_len(g.vertex_count(), b.len())?;
        }
        let psi = g.measure();
        for (i, a) in basis.iter().enumerate() {
            for (j, b) in basis.iter().enumerate() {
                let ip: f64 = (0..a.len()).map(|x| psi[x] * a[x] * b[x]).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                if (ip - target).abs() > 1e-9 {
                    return Err(Error::Inconsistent(format!("basis is not ψ-orthonormal at ({i}, {j})")));
                }
            }
        }
        Ok(Self {
            ambient: g.vertex_count(),
            basis,
        })
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient
    }

    pub fn basis(&self) -> &[Vec<f64>] {
        &self.basis
    }

    /// c_j = ∫ u b_j dψ.
    pub fn coords(&self, psi: &[f64], u: &[f64]) -> Vec<f64> {
        self.basis
            .iter()
            .map(|b| (0..u.len()).map(|x| psi[x] * u[x] * b[x]).sum())
            .collect()
    }

    /// Σ c_j b_j.
    pub fn combine(&self, c: &[f64]) -> Vec<f64> {
        let n = self.basis.first().map_or(0, Vec::len);
        let mut out = vec![0.0; n];
        for (cj, b) in c.iter().zip(&self.basis) {
            for (o, bx) in out.iter_mut().zip(b) {
                *o += cj * bx;
            }
        }
        out
    }

    /// ψ-orthogonal projection onto the span.
    pub fn project(&self, psi: &[f64], u: &[f64]) -> Vec<f64> {
        self.combine(&self.coords(psi, u))
    }
}

pub fn constraint_subspace(g: &WeightedGraph, d: &DomainSpec, m: usize) -> Result<ConstraintSubspace> {
    constraint_subspace_with(g, d, m, ConstraintOptions::default())
}

/// Null space of the C₀ᵐ(Ω) conditions, ψ-orthonormalized.
pub fn constraint_subspace_with(
    g: &WeightedGraph,
    d: &DomainSpec,
    m: usize,
    opts: ConstraintOptions,
) -> Result<ConstraintSubspace> {
    if m == 0 {
        return Err(Error::InvalidParameter("gradient order m must be at least 1".into()));
    }
    d.require_interior()?;
    let n = g.vertex_count();
    let psi = g.measure();
    if m == 1 || d.boundary().is_empty() {
        let free = if m == 1 { d.interior() } else { d.omega() };
        let mut s = ConstraintSubspace::free_on(g, free);
        s.ambient = d.omega().len();
        return Ok(s);
    }
    let cols = d.omega();
    let columns: Vec<Vec<f64>> = cols
        .iter()
        .map(|&x| {
            let mut e = vec![0.0; n];
            e[x] = 1.0 / psi[x].sqrt();
            constraint_values(g, d, m, &e, opts)
        })
        .collect();
    let rows = columns[0].len();
    let padded = rows.max(cols.len());
    let mat = DMatrix::from_fn(padded, cols.len(), |r, c| if r < rows { columns[c][r] } else { 0.0 });
    let svd = mat.svd(false, true);
    let v_t = svd.v_t.as_ref().expect("right singular vectors requested");
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let tol = padded as f64 * f64::EPSILON * smax.max(1.0);
    let mut basis = Vec::new();
    for (r, &s) in svd.singular_values.iter().enumerate() {
        if s <= tol {
            let mut b = vec![0.0; n];
            for (c, &x) in cols.iter().enumerate() {
                b[x] = v_t[(r, c)] / psi[x].sqrt();
            }
            basis.push(b);
        }
    }
    if basis.is_empty() {
        return Err(Error::TrivialSubspace);
    }
    for b in &basis {
        let r = constraint_residual(g, d, m, b, opts);
        if r > 1e-12 {
            return Err(Error::Inconsistent(format!("constraint basis residual {r:e}")));
        }
    }
    Ok(ConstraintSubspace {
        ambient: cols.len(),
        basis,
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
        build_graph(&[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)]).unwrap()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn laplacian_stencils() {
        assert_eq!(laplacian(&p2(), &[1.0, 2.0]).unwrap(), vec![1.0, -1.0]);
        assert_eq!(laplacian(&k3(), &[1.0, -1.0, 0.0]).unwrap(), vec![-1.5, 1.5, 0.0]);
        assert_eq!(laplacian(&k3(), &[4.0; 3]).unwrap(), vec![0.0; 3]);
        assert!(laplacian(&k3(), &[1.0]).is_err());
    }

    #[test]
    fn gamma_values() {
        assert_eq!(gamma(&p2(), &[1.0, 2.0], &[1.0, 2.0]).unwrap(), vec![0.5, 0.5]);
        assert_eq!(gamma(&k3(), &[1.0, -1.0, 0.0], &[0.0, 1.0, 1.0]).unwrap()[0], -0.75);
        assert_eq!(gamma(&k3(), &[1.0, -1.0, 0.0], &[3.0; 3]).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn higher_gradients() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!(close(&m_grad_norm(&p2(), &[0.0, 1.0], 1).unwrap(), &[h, h], 1e-15));
        assert_eq!(m_grad_norm(&p2(), &[1.0, -1.0], 2).unwrap(), vec![2.0, 2.0]);
        assert!(m_grad_norm(&p2(), &[1.0, -1.0], 0).is_err());
    }

    #[test]
    fn p_laplacian_cases() {
        let g = k3();
        let u = [0.3, -1.2, 2.5];
        assert_eq!(p_laplacian(&g, &u, 2.0).unwrap(), laplacian(&g, &u).unwrap());
        assert!(close(
            &p_laplacian(&p2(), &[0.0, 1.0], 4.0).unwrap(),
            &[0.5, -0.5],
            1e-15
        ));
        assert_eq!(p_laplacian(&g, &[1.5; 3], 3.0).unwrap(), vec![0.0; 3]);
        assert!(p_laplacian(&g, &u, 1.5).is_err());
    }

    #[test]
    fn poly_operator_special_cases() {
        let g = generate(GraphFamily::Cycle(5), WeightSpec::Uniform(0.5, 1.5), 2).unwrap();
        let u = [0.1, -0.4, 0.9, 0.3, -0.7];
        let minus_lap: Vec<f64> = laplacian(&g, &u).unwrap().iter().map(|t| -t).collect();
        assert!(close(&poly_apply(&g, &u, 1, 2.0, None).unwrap(), &minus_lap, 1e-14));
        let bilap = laplacian(&g, &laplacian(&g, &u).unwrap()).unwrap();
        assert!(close(&poly_apply(&g, &u, 2, 2.0, None).unwrap(), &bilap, 1e-13));
        for (m, p) in [(1, 3.0), (2, 2.5), (3, 4.0)] {
            let lu = poly_apply(&g, &u, m, p, None).unwrap();
            assert!(integral(&g, &lu).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn poly_operator_matches_indicator_pairing() {
        let g = generate(GraphFamily::Grid(3, 3), WeightSpec::Uniform(0.5, 1.5), 4).unwrap();
        let u: Vec<f64> = (0..9).map(|i| ((i * 7 % 5) as f64 - 2.0) * 0.3).collect();
        for (m, p) in [(1, 3.0), (2, 3.0), (3, 2.5)] {
            let lu = poly_apply(&g, &u, m, p, None).unwrap();
            for x in 0..9 {
                let mut e = vec![0.0; 9];
                e[x] = 1.0;
                let b = pairing(&g, &u, &e, m, p, None).unwrap() / g.measure()[x];
                assert!((lu[x] - b).abs() <= 1e-12 * (1.0 + b.abs()), "m={m} x={x}");
            }
        }
    }

    #[test]
    fn poly_apply_rejects_inadmissible_input() {
        let d = DomainSpec::new(&p3(), &[0, 1]).unwrap();
        assert!(matches!(
            poly_apply(&p3(), &[1.0, 1.0, 0.0], 1, 2.0, Some(&d)),
            Err(Error::Inadmissible(_))
        ));
        assert!(poly_apply(&p3(), &[1.0, 0.0, 0.0], 1, 2.0, Some(&d)).is_ok());
    }

    #[test]
    fn norms() {
        let sqrt2 = 2f64.sqrt();
        assert!((norm(&p2(), &[1.0, -1.0], &Norm::Lebesgue(2.0)).unwrap() - sqrt2).abs() < 1e-15);
        assert_eq!(norm(&p2(), &[1.0, 2.0], &Norm::Sup).unwrap(), 2.0);
        let g = p3();
        let d = DomainSpec::new(&g, &[0, 1]).unwrap();
        let spec = SobolevSpec::new(1, 2.0, None, SobolevDomain::Dirichlet(d.clone())).unwrap();
        assert!((norm(&g, &[1.0, 0.0, 0.0], &Norm::Sobolev(spec.clone())).unwrap() - 1.0).abs() < 1e-15);
        assert!(norm(&g, &[1.0, 0.0, 1.0], &Norm::Sobolev(spec)).is_err());
        // W^{1,2}(Ω) adds ∫_Ω u² = 1 to the gradient term.
        let full = SobolevSpec::new(1, 2.0, None, SobolevDomain::DirichletFull(d)).unwrap();
        assert!((norm(&g, &[1.0, 0.0, 0.0], &Norm::Sobolev(full)).unwrap() - sqrt2).abs() < 1e-15);
        assert!(SobolevSpec::new(1, 2.0, Some(vec![1.0, 0.0, 1.0]), SobolevDomain::Whole).is_err());
        assert!(SobolevSpec::new(1, 1.0, None, SobolevDomain::Whole).is_err());
        assert!(norm(&g, &[1.0; 3], &Norm::Lebesgue(0.0)).is_err());
    }

    #[test]
    fn first_order_subspace() {
        let g = p3();
        let d = DomainSpec::new(&g, &[0, 1]).unwrap();
        let s = constraint_subspace(&g, &d, 1).unwrap();
        assert_eq!(s.basis(), &[vec![1.0, 0.0, 0.0]]);
        let no_interior = DomainSpec::new(&g, &[1]).unwrap();
        assert!(constraint_subspace(&g, &no_interior, 1).is_err());
    }

    fn grid_block(size: usize, margin: usize) -> (WeightedGraph, DomainSpec) {
        let g = generate(GraphFamily::Grid(size, size), WeightSpec::Unit, 0).unwrap();
        let omega: Vec<usize> = (0..size * size)
            .filter(|&x| {
                let (r, c) = (x / size, x % size);
                (margin..size - margin).contains(&r) && (margin..size - margin).contains(&c)
            })
            .collect();
        let d = DomainSpec::new(&g, &omega).unwrap();
        (g, d)
    }

    #[test]
    fn second_order_subspace_dimension_matches_rank_oracle() {
        let (g, d) = grid_block(7, 1);
        assert_eq!(d.interior().len(), 9);
        let s = constraint_subspace(&g, &d, 2).unwrap();
        // Rank of the vanishing-gradient conditions on functions supported in Ω°,
        // computed by column-pivoted QR rather than SVD.
        let interior = d.interior();
        let rows: Vec<Vec<f64>> = interior
            .iter()
            .map(|&x| {
                let mut e = vec![0.0; g.vertex_count()];
                e[x] = 1.0;
                d.boundary()
                    .iter()
                    .flat_map(|&b| g.neighbors(b).iter().map(move |&(y, _)| (b, y)))
                    .map(|(b, y)| e[y] - e[b])
                    .collect()
            })
            .collect();
        let a = DMatrix::from_fn(rows[0].len(), interior.len(), |r, c| rows[c][r]);
        let qr = a.col_piv_qr();
        let rdiag = qr.r().diagonal();
        let rank = rdiag.iter().filter(|t| t.abs() > 1e-10).count();
        assert_eq!(s.dim(), interior.len() - rank);
        assert_eq!(s.dim(), 1);
        let psi = g.measure();
        for b in s.basis() {
            assert!(constraint_residual(&g, &d, 2, b, ConstraintOptions::default()) <= 1e-12);
            let nrm: f64 = (0..b.len()).map(|x| psi[x] * b[x] * b[x]).sum();
            assert!((nrm - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn third_order_subspace_is_orthonormal_and_admissible() {
        let (g, d) = grid_block(11, 1);
        let s = constraint_subspace(&g, &d, 3).unwrap();
        assert!(s.dim() > 0);
        let psi = g.measure();
        for (i, a) in s.basis().iter().enumerate() {
            assert!(constraint_residual(&g, &d, 3, a, ConstraintOptions::default()) <= 1e-12);
            for (j, b) in s.basis().iter().enumerate() {
                let ip: f64 = (0..a.len()).map(|x| psi[x] * a[x] * b[x]).sum();
                assert!((ip - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
        let loose = constraint_subspace_with(
            &g,
            &d,
            3,
            ConstraintOptions {
                interior_only_differences: true,
            },
        )
        .unwrap();
        assert!(loose.dim() >= s.dim());
    }

    #[test]
    fn second_order_subspace_can_be_trivial() {
        let (g, d) = grid_block(5, 1);
        assert!(matches!(constraint_subspace(&g, &d, 2), Err(Error::TrivialSubspace)));
    }

    mod props {
        use super::*;
        use proptest::collection::vec;
        use proptest::prelude::*;

        fn graph_and_two(n_max: usize) -> impl Strategy<Value = (WeightedGraph, Vec<f64>, Vec<f64>)> {
            (2..n_max, any::<u64>()).prop_flat_map(|(n, seed)| {
                let g = generate(
                    GraphFamily::RandomConnected(n, 0.4),
                    WeightSpec::Uniform(0.1, 2.0),
                    seed,
                )
                .unwrap();
                (Just(g), vec(-1.0f64..1.0, n), vec(-1.0f64..1.0, n))
            })
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn divergence_theorem((g, u, _) in graph_and_two(12)) {
                prop_assert!(integral(&g, &laplacian(&g, &u).unwrap()).unwrap().abs() <= 1e-12);
            }

            #[test]
            fn integration_by_parts((g, u, phi) in graph_and_two(12)) {
                let lhs: f64 = -integral(&g, &laplacian(&g, &u).unwrap().iter().zip(&phi).map(|(a, b)| a * b).collect::<Vec<_>>()).unwrap();
                let rhs = integral(&g, &gamma(&g, &u, &phi).unwrap()).unwrap();
                prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(rhs.abs()).max(1e-300) + 1e-15);
            }

            #[test]
            fn pairing_symmetric_at_p2((g, u, phi) in graph_and_two(10), m in 1usize..4) {
                let a = pairing(&g, &u, &phi, m, 2.0, None).unwrap();
                let b = pairing(&g, &phi, &u, m, 2.0, None).unwrap();
                prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(b.abs()) + 1e-14);
            }

            #[test]
            fn nonnegative_gradients((g, u, _) in graph_and_two(10), m in 1usize..4) {
                prop_assert!(m_grad_norm(&g, &u, m).unwrap().iter().all(|&t| t >= 0.0));
                prop_assert!(gamma(&g, &u, &u).unwrap().iter().all(|&t| t >= 0.0));
            }

            #[test]
            fn poly_apply_consistent_with_pairing((g, u, phi) in graph_and_two(10), m in 1usize..4, p in 2.0f64..4.0) {
                let lu = poly_apply(&g, &u, m, p, None).unwrap();
                let lhs: f64 = (0..u.len()).map(|x| g.measure()[x] * lu[x] * phi[x]).sum();
                let rhs = pairing(&g, &u, &phi, m, p, None).unwrap();
                prop_assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(rhs.abs()) + 1e-14);
            }
        }
    }
}
