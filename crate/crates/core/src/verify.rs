//! Checkers: Euler–Lagrange residuals, the strong maximum principle, embedding audits, solution audits.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::calculus::{
    constraint_subspace, grad_len, norm, pow_pm2, signed_pow, sup_norm, weighted_divergence, ConstraintSubspace, Norm,
    SobolevSpec,
};
use crate::energy::{Energy, EnergyModel, FunctionPair};
use crate::error::{check_len, Error, Result};
use crate::graph::WeightedGraph;
pub use crate::nonlinearity::Verdict;
use crate::solver::SolveReport;
use crate::spectral::{
    cstar_with, eigen_residual, empirical_embedding_constant, first_eigenvalue, EigenData, Exponent, MultiStart,
};

/// Slack for inequality checks on unit-normalized inputs.
pub const INEQUALITY_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub vertex: Option<usize>,
    pub value: f64,
    pub note: String,
}

impl Witness {
    fn at(vertex: usize, value: f64, note: &str) -> Self {
        Self {
            vertex: Some(vertex),
            value,
            note: note.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub check: String,
    pub verdict: Verdict,
    pub witnesses: Vec<Witness>,
    pub tolerance: f64,
    /// Largest observed value of the audited quantity, when there is one.
    pub observed: Option<f64>,
    pub parts: Vec<CheckReport>,
}

impl CheckReport {
    fn new(check: &str, tolerance: f64) -> Self {
        Self {
            check: check.into(),
            verdict: Verdict::Pass,
            witnesses: Vec::new(),
            tolerance,
            observed: None,
            parts: Vec::new(),
        }
    }

    fn fail(&mut self, w: Witness) {
        self.verdict = Verdict::Fail;
        self.witnesses.push(w);
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    /// Combines parts: any hypothesis violation wins, then any failure.
    fn aggregate(check: &str, tolerance: f64, parts: Vec<CheckReport>) -> Self {
        let verdict = if parts.iter().any(|p| p.verdict == Verdict::HypothesisViolated) {
            Verdict::HypothesisViolated
        } else if parts.iter().any(|p| p.verdict == Verdict::Fail) {
            Verdict::Fail
        } else {
            Verdict::Pass
        };
        let witnesses = parts
            .iter()
            .filter(|p| p.verdict != Verdict::Pass)
            .flat_map(|p| p.witnesses.clone())
            .collect();
        Self {
            check: check.into(),
            verdict,
            witnesses,
            tolerance,
            observed: None,
            parts,
        }
    }
}

/// Signed residual of the Euler–Lagrange system in the admissible space, divided by the system scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub max: f64,
}

pub fn el_residual(energy: &Energy<'_>, pair: &FunctionPair) -> Result<Residual> {
    let grad = energy.gradient(pair)?;
    Ok(residual_of_gradient(energy, &grad))
}

pub(crate) fn residual_of_gradient(energy: &Energy<'_>, grad: &FunctionPair) -> Residual {
    let proj = energy.space().project(energy.graph().measure(), grad);
    let (su, sv) = energy.system_scale();
    let u: Vec<f64> = proj.u.iter().map(|t| t / su).collect();
    let v: Vec<f64> = proj.v.iter().map(|t| t / sv).collect();
    let max = sup_norm(&u).max(sup_norm(&v));
    Residual { u, v, max }
}

/// −Δ_p u + h|u|^{p−2}u without the p ≥ 2 guard (callers check).
fn supersolution_defect(g: &WeightedGraph, u: &[f64], h: &[f64], p: f64) -> Vec<f64> {
    let a: Vec<f64> = grad_len(g, u).into_iter().map(|t| pow_pm2(t, p)).collect();
    weighted_divergence(g, u, &a)
        .into_iter()
        .zip(u)
        .zip(h)
        .map(|((d, &x), &hx)| -d + hx * signed_pow(x, p))
        .collect()
}

/// BFS layers needed to close a zero set and the vertices it reaches.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Propagation {
    pub rounds: usize,
    pub reached: Vec<usize>,
}

/// Closure of `seeds` under adjacency, one BFS layer per round.
pub fn propagate_zeros(g: &WeightedGraph, seeds: &[usize]) -> Propagation {
    let mut reached = vec![false; g.vertex_count()];
    let mut frontier: Vec<usize> = seeds.to_vec();
    for &x in seeds {
        reached[x] = true;
    }
    let mut rounds = 0;
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for &x in &frontier {
            for &(y, _) in g.neighbors(x) {
                if !reached[y] {
                    reached[y] = true;
                    next.push(y);
                }
            }
        }
        if !next.is_empty() {
            rounds += 1;
        }
        frontier = next;
    }
    Propagation {
        rounds,
        reached: (0..reached.len()).filter(|&x| reached[x]).collect(),
    }
}

fn normalized(u: &[f64]) -> Vec<f64> {
    let s = sup_norm(u);
    if s == 0.0 {
        u.to_vec()
    } else {
        u.iter().map(|t| t / s).collect()
    }
}

/// Strong maximum principle: nonnegative supersolutions with a zero vanish identically.
pub fn smp_check(
    g: &WeightedGraph,
    u: &[f64],
    v: &[f64],
    h1: &[f64],
    h2: &[f64],
    p: f64,
    q: f64,
) -> Result<CheckReport> {
    let n = g.vertex_count();
    for len in [u.len(), v.len(), h1.len(), h2.len()] {
        check_len(n, len)?;
    }
    if !(p >= 2.0 && q >= 2.0) {
        return Err(Error::InvalidParameter(format!(
            "exponents p = {p}, q = {q} must be at least 2"
        )));
    }
    g.require_connected()?;
    let mut report = CheckReport::new("smp", INEQUALITY_SLACK);
    let parts = [("u", normalized(u), h1, p), ("v", normalized(v), h2, q)];
    for (label, w, h, e) in &parts {
        for (x, &t) in w.iter().enumerate().filter(|(_, &t)| t < 0.0) {
            report.verdict = Verdict::HypothesisViolated;
            report.witnesses.push(Witness::at(x, t, &format!("{label} < 0")));
        }
        let defect = supersolution_defect(g, w, h, *e);
        for (x, &d) in defect.iter().enumerate().filter(|(_, &d)| d < -INEQUALITY_SLACK) {
            report.verdict = Verdict::HypothesisViolated;
            report
                .witnesses
                .push(Witness::at(x, d, &format!("supersolution inequality for {label}")));
        }
    }
    if report.verdict == Verdict::HypothesisViolated {
        report.witnesses.sort_by_key(|w| w.vertex);
        return Ok(report);
    }
    for (label, w, _, _) in &parts {
        let zeros: Vec<usize> = (0..n).filter(|&x| w[x] == 0.0).collect();
        if zeros.is_empty() {
            continue;
        }
        let prop = propagate_zeros(g, &zeros);
        for &x in &prop.reached {
            if w[x] != 0.0 {
                report.fail(Witness::at(
                    x,
                    w[x],
                    &format!("{label} must vanish by propagation but does not"),
                ));
            }
        }
        report.observed = Some(report.observed.unwrap_or(0.0).max(prop.rounds as f64));
    }
    Ok(report)
}

/// Which functions an embedding audit samples and which constant it checks against.
#[derive(Debug, Clone, PartialEq)]
pub enum AuditSpace {
    /// λ₁-eigenfunctions with the ℋ^{m,2} norm, against the closed-form constants.
    Eigenspace { m: usize, origin: usize },
    /// Admissible functions of a Sobolev space, against the empirical constant.
    Sobolev(SobolevSpec),
}

fn lq(g: &WeightedGraph, u: &[f64], q: Exponent) -> Result<f64> {
    match q {
        Exponent::Finite(s) => norm(g, u, &Norm::Lebesgue(s)),
        Exponent::Infinity => Ok(sup_norm(u)),
    }
}

/// Ratios ‖u‖_q / ‖u‖_spec for given functions against a constant.
pub fn audit_functions(
    g: &WeightedGraph,
    spec: &SobolevSpec,
    q: Exponent,
    constant: f64,
    functions: &[Vec<f64>],
) -> Result<CheckReport> {
    let mut report = CheckReport::new("embedding", INEQUALITY_SLACK);
    let mut worst = 0.0f64;
    for (k, u) in functions.iter().enumerate() {
        let u = normalized(u);
        let denom = norm(g, &u, &Norm::Sobolev(spec.clone()))?;
        if denom == 0.0 {
            continue;
        }
        let ratio = lq(g, &u, q)? / denom;
        worst = worst.max(ratio);
        if ratio > constant * (1.0 + INEQUALITY_SLACK) + INEQUALITY_SLACK {
            report.fail(Witness {
                vertex: None,
                value: ratio,
                note: format!("sample {k} exceeds constant {constant}"),
            });
        }
    }
    report.observed = Some(worst);
    Ok(report)
}

fn random_combinations(space: &ConstraintSubspace, samples: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..samples)
        .map(|_| {
            let c: Vec<f64> = (0..space.dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
            space.combine(&c)
        })
        .collect()
}

pub fn embedding_audit(
    g: &WeightedGraph,
    space: &AuditSpace,
    q: Exponent,
    samples: usize,
    seed: u64,
) -> Result<CheckReport> {
    if samples == 0 {
        return Err(Error::InvalidParameter("samples must be at least 1".into()));
    }
    match space {
        AuditSpace::Eigenspace { m, origin } => {
            let eig = first_eigenvalue(g)?;
            eigenspace_audit(g, &eig, *m, *origin, q, samples, seed)
        }
        AuditSpace::Sobolev(spec) => {
            let admissible = match spec.domain() {
                Some(d) => constraint_subspace(g, d, spec.m)?,
                None => ConstraintSubspace::whole(g),
            };
            let c = empirical_embedding_constant(g, spec, q, &MultiStart::default())?;
            let funcs = random_combinations(&admissible, samples, seed);
            let mut r = audit_functions(g, spec, q, c.value * (1.0 + 1e-9), &funcs)?;
            r.tolerance = 1e-9;
            Ok(r)
        }
    }
}

/// Audit against C* (finite q) or C_* (q = ∞) with a precomputed eigenspace.
pub fn eigenspace_audit(
    g: &WeightedGraph,
    eig: &EigenData,
    m: usize,
    origin: usize,
    q: Exponent,
    samples: usize,
    seed: u64,
) -> Result<CheckReport> {
    let spec = SobolevSpec::new(m, 2.0, None, crate::calculus::SobolevDomain::Whole)?;
    let constant = match q {
        Exponent::Finite(s) => cstar_with(g, eig.lambda1, m, s, origin)?.cstar.value,
        Exponent::Infinity => cstar_with(g, eig.lambda1, m, 1.0, origin)?.csup.value,
    };
    let funcs = random_combinations(&eig.subspace(g)?, samples, seed);
    let mut r = audit_functions(g, &spec, q, constant, &funcs)?;
    r.check = "eigenspace embedding".into();
    Ok(r)
}

/// Tolerances for a solution audit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AuditTolerances {
    pub residual: f64,
    pub eigen: f64,
}

impl Default for AuditTolerances {
    fn default() -> Self {
        Self {
            residual: 1e-7,
            eigen: 1e-10,
        }
    }
}

/// Vertex set on which the theorem behind a model asserts u > 0 and v > 0.
pub fn positivity_set(energy: &Energy<'_>) -> Option<Vec<usize>> {
    match energy.model() {
        EnergyModel::Dirichlet { .. } | EnergyModel::PLaplacian { .. } => Some(energy.equation_set()),
        EnergyModel::Global { .. } | EnergyModel::PGlobal { .. } => Some((0..energy.graph().vertex_count()).collect()),
        _ => None,
    }
}

pub fn solution_audit(energy: &Energy<'_>, report: &SolveReport, tol: AuditTolerances) -> Result<CheckReport> {
    let g = energy.graph();
    let pair = &report.solution;
    let mut parts = Vec::new();

    let res = el_residual(energy, pair)?;
    let mut r = CheckReport::new("el_residual", tol.residual);
    r.observed = Some(res.max);
    if res.max > tol.residual {
        let (x, val) = (0..res.u.len())
            .map(|x| (x, res.u[x].abs().max(res.v[x].abs())))
            .fold((0, 0.0), |a, b| if b.1 > a.1 { b } else { a });
        r.fail(Witness::at(x, val, "residual above tolerance"));
    }
    parts.push(r);

    if let Some(set) = positivity_set(energy) {
        let mut r = CheckReport::new("positivity", 0.0);
        for &x in &set {
            for (label, w) in [("u", &pair.u), ("v", &pair.v)] {
                if w[x].is_nan() || w[x] <= 0.0 {
                    r.fail(Witness::at(x, w[x], &format!("{label} is not positive")));
                }
            }
        }
        if !r.passed() && set.len() == g.vertex_count() && pair.u.iter().chain(&pair.v).all(|t| *t >= 0.0) {
            let (h, p, q) = match energy.model() {
                EnergyModel::PGlobal { p, q, h, .. } => (h.resolve(g.vertex_count())?, *p, *q),
                EnergyModel::Global { h, .. } => (h.resolve(g.vertex_count())?, 2.0, 2.0),
                _ => unreachable!("global models only"),
            };
            r.parts.push(smp_check(g, &pair.u, &pair.v, &h, &h, p, q)?);
        }
        parts.push(r);
    }

    if let Some(eig) = energy.eigen() {
        let mut r = CheckReport::new("eigenspace", tol.eigen);
        let psi = g.measure();
        for (label, w) in [("u", &pair.u), ("v", &pair.v)] {
            let scale = sup_norm(w).max(1.0);
            let e = eigen_residual(g, eig.lambda1, w) / scale;
            let mean: f64 = (0..w.len()).map(|x| psi[x] * w[x]).sum::<f64>() / scale;
            r.observed = Some(r.observed.unwrap_or(0.0).max(e).max(mean.abs()));
            if e > tol.eigen {
                r.fail(Witness {
                    vertex: None,
                    value: e,
                    note: format!("{label} eigen residual"),
                });
            }
            if mean.abs() > tol.eigen {
                r.fail(Witness {
                    vertex: None,
                    value: mean,
                    note: format!("∫{label} dψ ≠ 0"),
                });
            }
        }
        parts.push(r);
    }
    Ok(CheckReport::aggregate("solution", tol.residual, parts))
}
