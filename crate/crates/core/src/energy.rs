//! The variational functionals, their L²(ψ) gradients and their admissible spaces.

use serde::{Deserialize, Serialize};

use crate::calculus::{
    constraint_subspace, grad_energy, poly_masked, signed_pow, sup_norm, ConstraintSubspace, ADMISSIBLE_TOL,
};
use crate::error::{check_len, Error, Result};
use crate::graph::{DomainSpec, WeightedGraph};
use crate::nonlinearity::{
    validate_hypotheses, CatalogPair, CoupledPower, CoupledTerm, HypothesisContext, HypothesisReport, HypothesisSet,
    Power,
};
use crate::spectral::{
    eigen_residual, first_eigenvalue, weighted_rayleigh_inf, EigenData, MultiStart, RayleighProblem,
};

/// Membership tolerance for the λ₁-eigenspace.
pub const EIGENSPACE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionPair {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl FunctionPair {
    pub fn new(u: Vec<f64>, v: Vec<f64>) -> Self {
        Self { u, v }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            u: vec![0.0; n],
            v: vec![0.0; n],
        }
    }

    pub fn scaled(&self, t: f64) -> Self {
        Self {
            u: self.u.iter().map(|x| t * x).collect(),
            v: self.v.iter().map(|x| t * x).collect(),
        }
    }

    pub fn abs(&self) -> Self {
        Self {
            u: self.u.iter().map(|x| x.abs()).collect(),
            v: self.v.iter().map(|x| x.abs()).collect(),
        }
    }

    pub fn sup(&self) -> f64 {
        sup_norm(&self.u).max(sup_norm(&self.v))
    }

    /// L²(ψ) norm of the pair.
    pub fn l2(&self, psi: &[f64]) -> f64 {
        (0..psi.len())
            .map(|x| psi[x] * (self.u[x] * self.u[x] + self.v[x] * self.v[x]))
            .sum::<f64>()
            .sqrt()
    }
}

/// A per-vertex coefficient given either as one number or as a full list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum VertexField {
    Constant(f64),
    PerVertex(Vec<f64>),
}

impl VertexField {
    pub fn resolve(&self, n: usize) -> Result<Vec<f64>> {
        match self {
            VertexField::Constant(c) => Ok(vec![*c; n]),
            VertexField::PerVertex(v) => {
                check_len(n, v.len())?;
                Ok(v.clone())
            }
        }
    }
}

impl Default for VertexField {
    fn default() -> Self {
        VertexField::Constant(1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelTag {
    #[serde(rename = "J1_toda")]
    Toda,
    #[serde(rename = "J3_dirichlet")]
    Dirichlet,
    #[serde(rename = "J4_plap")]
    PLaplacian,
    #[serde(rename = "J5_poly")]
    Poly,
    #[serde(rename = "J6_global")]
    Global,
    #[serde(rename = "J7_plap_global")]
    PGlobal,
    #[serde(rename = "Jvmn_poly_global")]
    PolyGlobal,
    #[serde(rename = "quadratic")]
    Quadratic,
}

impl ModelTag {
    pub const ALL: [ModelTag; 8] = [
        ModelTag::Toda,
        ModelTag::Dirichlet,
        ModelTag::PLaplacian,
        ModelTag::Poly,
        ModelTag::Global,
        ModelTag::PGlobal,
        ModelTag::PolyGlobal,
        ModelTag::Quadratic,
    ];

    pub fn needs_domain(self) -> bool {
        matches!(self, ModelTag::Dirichlet | ModelTag::PLaplacian | ModelTag::Poly)
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelTag::Toda => "J1_toda",
            ModelTag::Dirichlet => "J3_dirichlet",
            ModelTag::PLaplacian => "J4_plap",
            ModelTag::Poly => "J5_poly",
            ModelTag::Global => "J6_global",
            ModelTag::PGlobal => "J7_plap_global",
            ModelTag::PolyGlobal => "Jvmn_poly_global",
            ModelTag::Quadratic => "quadratic",
        }
    }
}

/// A fully specified functional. Rayleigh-dependent parameters may stay unset until bound to a graph.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "tag", content = "params")]
pub enum EnergyModel {
    #[serde(rename = "J1_toda")]
    Toda { phi1: f64, phi2: f64, m: usize, n: usize },
    #[serde(rename = "J3_dirichlet")]
    Dirichlet { p: f64, q: f64 },
    #[serde(rename = "J4_plap")]
    PLaplacian {
        p: f64,
        q: f64,
        alpha: f64,
        beta: f64,
        lambda0: f64,
    },
    #[serde(rename = "J5_poly")]
    Poly {
        m: usize,
        n: usize,
        p: f64,
        q: f64,
        alpha: f64,
        beta: f64,
        lambda: Option<f64>,
        vartheta: Option<f64>,
        weight: VertexField,
        sigma: VertexField,
    },
    #[serde(rename = "J6_global")]
    Global {
        h: VertexField,
        f: Power,
        g: Power,
        theta: f64,
        s: f64,
    },
    #[serde(rename = "J7_plap_global")]
    PGlobal {
        p: f64,
        q: f64,
        h: VertexField,
        potential: CoupledPower,
        theta1: f64,
        theta2: f64,
    },
    #[serde(rename = "Jvmn_poly_global")]
    PolyGlobal {
        m: usize,
        n: usize,
        p: f64,
        q: f64,
        h: VertexField,
        f: Power,
        g: Power,
        theta0: f64,
    },
    #[serde(rename = "quadratic")]
    Quadratic,
}

fn require(cond: bool, what: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("requires {what}")))
    }
}

fn finite(xs: &[f64]) -> Result<()> {
    require(xs.iter().all(|x| x.is_finite()), "finite parameters")
}

impl EnergyModel {
    pub fn defaults(tag: ModelTag) -> Self {
        let square = Power { c: 1.0, r: 3.0 };
        let cube = Power { c: 1.0, r: 4.0 };
        match tag {
            ModelTag::Toda => EnergyModel::Toda {
                phi1: 1.0,
                phi2: 1.0,
                m: 1,
                n: 1,
            },
            ModelTag::Dirichlet => EnergyModel::Dirichlet { p: 3.0, q: 3.0 },
            ModelTag::PLaplacian => EnergyModel::PLaplacian {
                p: 2.0,
                q: 2.0,
                alpha: 2.0,
                beta: 2.0,
                lambda0: 1.0,
            },
            ModelTag::Poly => EnergyModel::Poly {
                m: 2,
                n: 2,
                p: 2.0,
                q: 2.0,
                alpha: 2.0,
                beta: 2.0,
                lambda: None,
                vartheta: None,
                weight: VertexField::default(),
                sigma: VertexField::default(),
            },
            ModelTag::Global => EnergyModel::Global {
                h: VertexField::default(),
                f: square,
                g: square,
                theta: 2.5,
                s: 3.0,
            },
            ModelTag::PGlobal => EnergyModel::PGlobal {
                p: 2.0,
                q: 2.0,
                h: VertexField::default(),
                potential: CoupledPower {
                    terms: vec![
                        CoupledTerm { c: 1.0, a: 3.0, b: 0.0 },
                        CoupledTerm { c: 1.0, a: 0.0, b: 3.0 },
                        CoupledTerm { c: 1.0, a: 2.0, b: 2.0 },
                    ],
                },
                theta1: 1.0 / 3.0,
                theta2: 1.0 / 3.0,
            },
            ModelTag::PolyGlobal => EnergyModel::PolyGlobal {
                m: 2,
                n: 2,
                p: 2.0,
                q: 2.0,
                h: VertexField::default(),
                f: cube,
                g: cube,
                theta0: 3.0,
            },
            ModelTag::Quadratic => EnergyModel::Quadratic,
        }
    }

    pub fn tag(&self) -> ModelTag {
        match self {
            EnergyModel::Toda { .. } => ModelTag::Toda,
            EnergyModel::Dirichlet { .. } => ModelTag::Dirichlet,
            EnergyModel::PLaplacian { .. } => ModelTag::PLaplacian,
            EnergyModel::Poly { .. } => ModelTag::Poly,
            EnergyModel::Global { .. } => ModelTag::Global,
            EnergyModel::PGlobal { .. } => ModelTag::PGlobal,
            EnergyModel::PolyGlobal { .. } => ModelTag::PolyGlobal,
            EnergyModel::Quadratic => ModelTag::Quadratic,
        }
    }

    /// Checks every graph-independent parameter inequality.
    pub fn validate(&self) -> Result<()> {
        match self {
            EnergyModel::Toda { phi1, phi2, m, n } => {
                finite(&[*phi1, *phi2])?;
                require(*phi1 > 0.0, "phi1 > 0")?;
                require(*phi2 > 0.0, "phi2 > 0")?;
                require(*m >= 1 && *n >= 1, "m, n >= 1")
            }
            EnergyModel::Dirichlet { p, q } => {
                finite(&[*p, *q])?;
                require(*p > 2.0, "p > 2")?;
                require(*q > 2.0, "q > 2")
            }
            EnergyModel::PLaplacian {
                p,
                q,
                alpha,
                beta,
                lambda0,
            } => {
                finite(&[*p, *q, *alpha, *beta, *lambda0])?;
                require(*p >= 2.0 && *q >= 2.0, "p, q >= 2")?;
                require(alpha + 1.0 > *p, "alpha + 1 > p")?;
                require(beta + 1.0 > *q, "beta + 1 > q")?;
                require(*lambda0 > 0.0, "lambda0 > 0")
            }
            EnergyModel::Poly {
                m,
                n,
                p,
                q,
                alpha,
                beta,
                lambda,
                vartheta,
                ..
            } => {
                finite(&[*p, *q, *alpha, *beta])?;
                require(*m >= 2 && *n >= 2, "m, n >= 2")?;
                require(*p >= 2.0 && *q >= 2.0, "p, q >= 2")?;
                require(alpha + 1.0 > *p, "alpha + 1 > p")?;
                require(beta + 1.0 > *q, "beta + 1 > q")?;
                require(lambda.is_none_or(|l| l > 0.0 && l.is_finite()), "lambda > 0")?;
                require(vartheta.is_none_or(|l| l > 0.0 && l.is_finite()), "vartheta > 0")
            }
            EnergyModel::Global { h, f, g, theta, s } => {
                finite(&[*theta, *s])?;
                positive_field(h)?;
                f.validate()?;
                g.validate()?;
                require(*theta > 2.0, "theta > 2")?;
                require(*s > 1.0, "s > 1")
            }
            EnergyModel::PGlobal {
                p,
                q,
                h,
                potential,
                theta1,
                theta2,
            } => {
                finite(&[*p, *q, *theta1, *theta2])?;
                require(*p >= 2.0 && *q >= 2.0, "p, q >= 2")?;
                positive_field(h)?;
                potential.validate()?;
                require(*theta1 > 0.0 && *theta1 < 1.0 / p, "0 < theta1 < 1/p")?;
                require(*theta2 > 0.0 && *theta2 < 1.0 / q, "0 < theta2 < 1/q")
            }
            EnergyModel::PolyGlobal {
                m,
                n,
                p,
                q,
                h,
                f,
                g,
                theta0,
            } => {
                finite(&[*p, *q, *theta0])?;
                require(*m >= 1 && *n >= 1, "m, n >= 1")?;
                require(*p >= 2.0 && *q >= 2.0, "p, q >= 2")?;
                positive_field(h)?;
                f.validate()?;
                g.validate()?;
                require(*theta0 > p.max(*q), "theta0 > max(p, q)")
            }
            EnergyModel::Quadratic => Ok(()),
        }
    }
}

fn positive_field(h: &VertexField) -> Result<()> {
    let ok = match h {
        VertexField::Constant(c) => *c > 0.0 && c.is_finite(),
        VertexField::PerVertex(v) => v.iter().all(|c| *c > 0.0 && c.is_finite()),
    };
    require(ok, "h(x) > 0 at every vertex")
}

/// Optional overrides read from model JSON.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub phi1: Option<f64>,
    pub phi2: Option<f64>,
    pub m: Option<usize>,
    pub n: Option<usize>,
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub lambda0: Option<f64>,
    pub lambda: Option<f64>,
    pub vartheta: Option<f64>,
    pub weight: Option<VertexField>,
    pub sigma: Option<VertexField>,
    pub h: Option<VertexField>,
    pub theta: Option<f64>,
    pub s: Option<f64>,
    pub theta0: Option<f64>,
    pub theta1: Option<f64>,
    pub theta2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum NonlinearitySpec {
    Power { f: Power, g: Power },
    CoupledPower { terms: Vec<CoupledTerm> },
}

/// Model JSON: {"tag": ..., "params": {...}, "nonlinearity": {...}}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub tag: ModelTag,
    #[serde(default)]
    pub params: ModelParams,
    #[serde(default)]
    pub nonlinearity: Option<NonlinearitySpec>,
}

impl ModelSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("model JSON: {e}")))
    }

    /// Fills unset parameters with the demo defaults and validates.
    pub fn resolve(&self) -> Result<EnergyModel> {
        let pr = &self.params;
        let pick = |o: Option<f64>, d: f64| o.unwrap_or(d);
        let pick_n = |o: Option<usize>, d: usize| o.unwrap_or(d);
        let field = |o: &Option<VertexField>, d: &VertexField| o.clone().unwrap_or_else(|| d.clone());
        let scalar_pair = |f: Power, g: Power| -> Result<(Power, Power)> {
            match &self.nonlinearity {
                None => Ok((f, g)),
                Some(NonlinearitySpec::Power { f, g }) => Ok((*f, *g)),
                Some(_) => Err(Error::InvalidParameter(format!(
                    "{} takes a power nonlinearity pair",
                    self.tag.name()
                ))),
            }
        };
        let model = match EnergyModel::defaults(self.tag) {
            EnergyModel::Toda { phi1, phi2, m, n } => EnergyModel::Toda {
                phi1: pick(pr.phi1, phi1),
                phi2: pick(pr.phi2, phi2),
                m: pick_n(pr.m, m),
                n: pick_n(pr.n, n),
            },
            EnergyModel::Dirichlet { p, q } => EnergyModel::Dirichlet {
                p: pick(pr.p, p),
                q: pick(pr.q, q),
            },
            EnergyModel::PLaplacian {
                p,
                q,
                alpha,
                beta,
                lambda0,
            } => EnergyModel::PLaplacian {
                p: pick(pr.p, p),
                q: pick(pr.q, q),
                alpha: pick(pr.alpha, alpha),
                beta: pick(pr.beta, beta),
                lambda0: pick(pr.lambda0, lambda0),
            },
            EnergyModel::Poly {
                m,
                n,
                p,
                q,
                alpha,
                beta,
                weight,
                sigma,
                ..
            } => EnergyModel::Poly {
                m: pick_n(pr.m, m),
                n: pick_n(pr.n, n),
                p: pick(pr.p, p),
                q: pick(pr.q, q),
                alpha: pick(pr.alpha, alpha),
                beta: pick(pr.beta, beta),
                lambda: pr.lambda,
                vartheta: pr.vartheta,
                weight: field(&pr.weight, &weight),
                sigma: field(&pr.sigma, &sigma),
            },
            EnergyModel::Global { h, f, g, theta, s } => {
                let (f, g) = scalar_pair(f, g)?;
                EnergyModel::Global {
                    h: field(&pr.h, &h),
                    f,
                    g,
                    theta: pick(pr.theta, theta),
                    s: pick(pr.s, s),
                }
            }
            EnergyModel::PGlobal {
                p,
                q,
                h,
                potential,
                theta1,
                theta2,
            } => {
                let potential = match &self.nonlinearity {
                    None => potential,
                    Some(NonlinearitySpec::CoupledPower { terms }) => CoupledPower { terms: terms.clone() },
                    Some(_) => {
                        return Err(Error::InvalidParameter(
                            "J7_plap_global takes a coupled-power potential".into(),
                        ))
                    }
                };
                EnergyModel::PGlobal {
                    p: pick(pr.p, p),
                    q: pick(pr.q, q),
                    h: field(&pr.h, &h),
                    potential,
                    theta1: pick(pr.theta1, theta1),
                    theta2: pick(pr.theta2, theta2),
                }
            }
            EnergyModel::PolyGlobal {
                m,
                n,
                p,
                q,
                h,
                f,
                g,
                theta0,
            } => {
                let (f, g) = scalar_pair(f, g)?;
                EnergyModel::PolyGlobal {
                    m: pick_n(pr.m, m),
                    n: pick_n(pr.n, n),
                    p: pick(pr.p, p),
                    q: pick(pr.q, q),
                    h: field(&pr.h, &h),
                    f,
                    g,
                    theta0: pick(pr.theta0, theta0),
                }
            }
            EnergyModel::Quadratic => EnergyModel::Quadratic,
        };
        model.validate()?;
        Ok(model)
    }
}

/// Admissible space for a pair: independent subspaces for u and v.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairSpace {
    pub u: ConstraintSubspace,
    pub v: ConstraintSubspace,
}

impl PairSpace {
    pub fn dim(&self) -> usize {
        self.u.dim() + self.v.dim()
    }

    pub fn combine(&self, c: &[f64]) -> FunctionPair {
        let (a, b) = c.split_at(self.u.dim());
        FunctionPair {
            u: self.u.combine(a),
            v: self.v.combine(b),
        }
    }

    pub fn coords(&self, psi: &[f64], pair: &FunctionPair) -> Vec<f64> {
        let mut c = self.u.coords(psi, &pair.u);
        c.extend(self.v.coords(psi, &pair.v));
        c
    }

    pub fn project(&self, psi: &[f64], pair: &FunctionPair) -> FunctionPair {
        FunctionPair {
            u: self.u.project(psi, &pair.u),
            v: self.v.project(psi, &pair.v),
        }
    }
}

/// One additive piece of an energy, with its homogeneity degree under (u, v) ↦ (tu, tv) when it has one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyTerm {
    pub name: &'static str,
    pub value: f64,
    pub degree: Option<f64>,
}

fn term(name: &'static str, value: f64, degree: impl Into<Option<f64>>) -> EnergyTerm {
    EnergyTerm {
        name,
        value,
        degree: degree.into(),
    }
}

/// log ∫ e^w dψ and the normalized density e^w / ∫ e^w dψ, computed stably.
pub(crate) fn log_integral_exp(psi: &[f64], w: &[f64]) -> (f64, Vec<f64>) {
    let top = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = w.iter().map(|t| (t - top).exp()).collect();
    let s: f64 = e.iter().zip(psi).map(|(a, b)| a * b).sum();
    assert!(s > 0.0, "exponential integral must be positive");
    (top + s.ln(), e.into_iter().map(|t| t / s).collect())
}

/// A model bound to a graph and domain, with its admissible space.
#[derive(Debug, Clone)]
pub struct Energy<'g> {
    graph: &'g WeightedGraph,
    model: EnergyModel,
    domain: Option<DomainSpec>,
    space: PairSpace,
    eigen: Option<EigenData>,
    chi: Vec<f64>,
    h: Vec<f64>,
    weight: Vec<f64>,
    sigma: Vec<f64>,
    rayleigh: Option<(f64, f64)>,
}

impl<'g> Energy<'g> {
    pub fn new(graph: &'g WeightedGraph, model: EnergyModel, domain: Option<DomainSpec>) -> Result<Self> {
        model.validate()?;
        graph.require_connected()?;
        let nv = graph.vertex_count();
        let tag = model.tag();
        if tag.needs_domain() && domain.is_none() {
            return Err(Error::Domain(format!("{} needs a domain Ω", tag.name())));
        }
        let domain = if tag.needs_domain() { domain } else { None };
        if let Some(d) = &domain {
            d.require_interior()?;
        }
        let chi = domain.as_ref().map_or_else(|| vec![1.0; nv], DomainSpec::indicator);
        let mut eigen = None;
        let mut rayleigh = None;
        let (mut h, mut weight, mut sigma) = (vec![1.0; nv], vec![1.0; nv], vec![1.0; nv]);
        let mut model = model;
        let space = match &mut model {
            EnergyModel::Toda { .. } => {
                let e = first_eigenvalue(graph)?;
                let s = e.subspace(graph)?;
                eigen = Some(e);
                PairSpace { u: s.clone(), v: s }
            }
            EnergyModel::Dirichlet { .. } | EnergyModel::PLaplacian { .. } => {
                let d = domain.as_ref().expect("checked above");
                let s = constraint_subspace(graph, d, 1)?;
                PairSpace { u: s.clone(), v: s }
            }
            EnergyModel::Poly {
                m,
                n,
                p,
                q,
                lambda,
                vartheta,
                weight: w,
                sigma: sg,
                ..
            } => {
                let d = domain.as_ref().expect("checked above");
                weight = w.resolve(nv)?;
                sigma = sg.resolve(nv)?;
                let first = |order: usize, exp: f64, wt: &[f64]| -> Result<f64> {
                    let problem = RayleighProblem::Dirichlet { domain: d, weight: wt };
                    match weighted_rayleigh_inf(graph, problem, order, exp, &MultiStart::default()) {
                        Ok(r) => Ok(r.value),
                        Err(Error::WeightIncompatible) => Ok(f64::INFINITY),
                        Err(e) => Err(e),
                    }
                };
                let (l1, t1) = (first(*m, *p, &weight)?, first(*n, *q, &sigma)?);
                let default = |c: f64| if c.is_finite() { c / 2.0 } else { 1.0 };
                let l = *lambda.get_or_insert(default(l1));
                let t = *vartheta.get_or_insert(default(t1));
                require(l < l1, &format!("lambda < first Rayleigh constant {l1}"))?;
                require(t < t1, &format!("vartheta < first Rayleigh constant {t1}"))?;
                rayleigh = Some((l1, t1));
                PairSpace {
                    u: constraint_subspace(graph, d, *m)?,
                    v: constraint_subspace(graph, d, *n)?,
                }
            }
            EnergyModel::Global { h: hf, .. }
            | EnergyModel::PGlobal { h: hf, .. }
            | EnergyModel::PolyGlobal { h: hf, .. } => {
                h = hf.resolve(nv)?;
                let s = ConstraintSubspace::whole(graph);
                PairSpace { u: s.clone(), v: s }
            }
            EnergyModel::Quadratic => {
                let s = ConstraintSubspace::whole(graph);
                PairSpace { u: s.clone(), v: s }
            }
        };
        Ok(Self {
            graph,
            model,
            domain,
            space,
            eigen,
            chi,
            h,
            weight,
            sigma,
            rayleigh,
        })
    }

    pub fn graph(&self) -> &'g WeightedGraph {
        self.graph
    }

    /// The model with any graph-dependent defaults filled in.
    pub fn model(&self) -> &EnergyModel {
        &self.model
    }

    pub fn domain(&self) -> Option<&DomainSpec> {
        self.domain.as_ref()
    }

    pub fn space(&self) -> &PairSpace {
        &self.space
    }

    pub fn eigen(&self) -> Option<&EigenData> {
        self.eigen.as_ref()
    }

    /// First Rayleigh constants for the u and v equations of the higher-order Dirichlet model.
    pub fn rayleigh_constants(&self) -> Option<(f64, f64)> {
        self.rayleigh
    }

    /// Vertices where the system is imposed: Ω° for Dirichlet models, V otherwise.
    pub fn equation_set(&self) -> Vec<usize> {
        match &self.domain {
            Some(d) => d.interior().to_vec(),
            None => (0..self.graph.vertex_count()).collect(),
        }
    }

    /// Factors by which the gradient exceeds the residual of the stated system.
    pub fn system_scale(&self) -> (f64, f64) {
        match &self.model {
            EnergyModel::PLaplacian { alpha, beta, .. } => (alpha + 1.0, beta + 1.0),
            _ => (1.0, 1.0),
        }
    }

    /// Whether the energy is even in u and in v separately, so (|u|, |v|) is a valid symmetrization.
    pub fn absolute_value_invariant(&self) -> bool {
        matches!(
            self.model,
            EnergyModel::Dirichlet { .. } | EnergyModel::PLaplacian { .. } | EnergyModel::Quadratic
        )
    }

    fn check(&self, pair: &FunctionPair) -> Result<()> {
        let n = self.graph.vertex_count();
        check_len(n, pair.u.len())?;
        check_len(n, pair.v.len())?;
        if let Some(x) = pair.u.iter().chain(&pair.v).position(|t| !t.is_finite()) {
            return Err(Error::NonFinite(x % n));
        }
        let scale = pair.sup().max(1.0);
        let residual = if let Some(e) = &self.eigen {
            eigen_residual(self.graph, e.lambda1, &pair.u).max(eigen_residual(self.graph, e.lambda1, &pair.v))
        } else {
            let proj = self.space.project(self.graph.measure(), pair);
            let du = pair
                .u
                .iter()
                .zip(&proj.u)
                .fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
            let dv = pair
                .v
                .iter()
                .zip(&proj.v)
                .fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
            du.max(dv)
        };
        let tol = if self.eigen.is_some() {
            EIGENSPACE_TOL
        } else {
            ADMISSIBLE_TOL
        };
        if residual > tol * scale {
            return Err(Error::Inadmissible(residual));
        }
        Ok(())
    }

    pub fn value(&self, pair: &FunctionPair) -> Result<f64> {
        self.check(pair)?;
        Ok(self.value_unchecked(pair))
    }

    pub fn terms(&self, pair: &FunctionPair) -> Result<Vec<EnergyTerm>> {
        self.check(pair)?;
        Ok(self.terms_unchecked(pair))
    }

    pub fn gradient(&self, pair: &FunctionPair) -> Result<FunctionPair> {
        self.check(pair)?;
        Ok(self.gradient_unchecked(pair))
    }

    pub(crate) fn value_unchecked(&self, pair: &FunctionPair) -> f64 {
        self.terms_unchecked(pair).iter().map(|t| t.value).sum()
    }

    /// Σ_S ψ · c(x) · φ(u(x), v(x)) over the integration set.
    fn integrate(&self, f: impl Fn(usize) -> f64) -> f64 {
        let psi = self.graph.measure();
        (0..psi.len())
            .filter(|&x| self.chi[x] > 0.0)
            .map(|x| psi[x] * f(x))
            .sum()
    }

    pub(crate) fn terms_unchecked(&self, pair: &FunctionPair) -> Vec<EnergyTerm> {
        let g = self.graph;
        let (u, v) = (&pair.u[..], &pair.v[..]);
        let chi = &self.chi;
        let pw = |t: f64, e: f64| t.abs().powf(e);
        match &self.model {
            EnergyModel::Toda { phi1, phi2, m, n } => {
                let psi = g.measure();
                let w1: Vec<f64> = (0..u.len()).map(|x| 2.0 * u[x] - v[x]).collect();
                let w2: Vec<f64> = (0..u.len()).map(|x| -u[x] + 2.0 * v[x]).collect();
                vec![
                    term("gradient_u", 0.5 * grad_energy(g, u, *m, 2.0, chi), 2.0),
                    term("gradient_v", 0.5 * grad_energy(g, v, *n, 2.0, chi), 2.0),
                    term("log_u", -0.5 * phi1 * log_integral_exp(psi, &w1).0, None),
                    term("log_v", -0.5 * phi2 * log_integral_exp(psi, &w2).0, None),
                ]
            }
            EnergyModel::Dirichlet { p, q } => vec![
                term("gradient_u", 0.5 * grad_energy(g, u, 1, 2.0, chi), 2.0),
                term("gradient_v", 0.5 * grad_energy(g, v, 1, 2.0, chi), 2.0),
                term(
                    "coupling",
                    -self.integrate(|x| pw(u[x], *p) * pw(v[x], *q)) / (p + q),
                    p + q,
                ),
            ],
            EnergyModel::PLaplacian {
                p,
                q,
                alpha,
                beta,
                lambda0,
            } => vec![
                term("gradient_u", (alpha + 1.0) / p * grad_energy(g, u, 1, *p, chi), *p),
                term("gradient_v", (beta + 1.0) / q * grad_energy(g, v, 1, *q, chi), *q),
                term(
                    "coupling",
                    -lambda0 * self.integrate(|x| pw(u[x], alpha + 1.0) * pw(v[x], beta + 1.0)),
                    alpha + beta + 2.0,
                ),
            ],
            EnergyModel::Poly {
                m,
                n,
                p,
                q,
                alpha,
                beta,
                lambda,
                vartheta,
                ..
            } => {
                let (l, t) = (lambda.expect("bound"), vartheta.expect("bound"));
                vec![
                    term("gradient_u", grad_energy(g, u, *m, *p, chi) / p, *p),
                    term("gradient_v", grad_energy(g, v, *n, *q, chi) / q, *q),
                    term(
                        "eigen_u",
                        -l / p * self.integrate(|x| self.weight[x] * pw(u[x], *p)),
                        *p,
                    ),
                    term("eigen_v", -t / q * self.integrate(|x| self.sigma[x] * pw(v[x], *q)), *q),
                    term(
                        "coupling",
                        -self.integrate(|x| pw(u[x], alpha + 1.0) * pw(v[x], beta + 1.0)) / (alpha + beta + 2.0),
                        alpha + beta + 2.0,
                    ),
                ]
            }
            EnergyModel::Global { f, g: gn, .. } => vec![
                term("gradient_u", 0.5 * grad_energy(g, u, 1, 2.0, chi), 2.0),
                term("gradient_v", 0.5 * grad_energy(g, v, 1, 2.0, chi), 2.0),
                term("mass_u", 0.5 * self.integrate(|x| self.h[x] * u[x] * u[x]), 2.0),
                term("mass_v", 0.5 * self.integrate(|x| self.h[x] * v[x] * v[x]), 2.0),
                term("potential_u", -self.integrate(|x| f.antiderivative(u[x])), None),
                term("potential_v", -self.integrate(|x| gn.antiderivative(v[x])), None),
            ],
            EnergyModel::PGlobal { p, q, potential, .. } => vec![
                term("gradient_u", grad_energy(g, u, 1, *p, chi) / p, *p),
                term("gradient_v", grad_energy(g, v, 1, *q, chi) / q, *q),
                term("mass_u", self.integrate(|x| self.h[x] * pw(u[x], *p)) / p, *p),
                term("mass_v", self.integrate(|x| self.h[x] * pw(v[x], *q)) / q, *q),
                term("potential", -self.integrate(|x| potential.value(u[x], v[x])), None),
            ],
            EnergyModel::PolyGlobal {
                m, n, p, q, f, g: gn, ..
            } => vec![
                term("gradient_u", grad_energy(g, u, *m, *p, chi) / p, *p),
                term("gradient_v", grad_energy(g, v, *n, *q, chi) / q, *q),
                term("mass_u", self.integrate(|x| self.h[x] * pw(u[x], *p)) / p, *p),
                term("mass_v", self.integrate(|x| self.h[x] * pw(v[x], *q)) / q, *q),
                term("potential_u", -self.integrate(|x| f.antiderivative(u[x])), None),
                term("potential_v", -self.integrate(|x| gn.antiderivative(v[x])), None),
            ],
            EnergyModel::Quadratic => vec![
                term("mass_u", 0.5 * self.integrate(|x| u[x] * u[x]), 2.0),
                term("mass_v", 0.5 * self.integrate(|x| v[x] * v[x]), 2.0),
            ],
        }
    }

    pub(crate) fn gradient_unchecked(&self, pair: &FunctionPair) -> FunctionPair {
        let g = self.graph;
        let (u, v) = (&pair.u[..], &pair.v[..]);
        let chi = &self.chi;
        let nv = u.len();
        let pw = |t: f64, e: f64| t.abs().powf(e);
        let mut gu;
        let mut gv;
        match &self.model {
            EnergyModel::Toda { phi1, phi2, m, n } => {
                let psi = g.measure();
                let w1: Vec<f64> = (0..nv).map(|x| 2.0 * u[x] - v[x]).collect();
                let w2: Vec<f64> = (0..nv).map(|x| -u[x] + 2.0 * v[x]).collect();
                let (_, e1) = log_integral_exp(psi, &w1);
                let (_, e2) = log_integral_exp(psi, &w2);
                gu = poly_masked(g, u, *m, 2.0, chi);
                gv = poly_masked(g, v, *n, 2.0, chi);
                for x in 0..nv {
                    gu[x] += -phi1 * e1[x] + 0.5 * phi2 * e2[x];
                    gv[x] += 0.5 * phi1 * e1[x] - phi2 * e2[x];
                }
            }
            EnergyModel::Dirichlet { p, q } => {
                gu = poly_masked(g, u, 1, 2.0, chi);
                gv = poly_masked(g, v, 1, 2.0, chi);
                for x in 0..nv {
                    gu[x] -= chi[x] * p / (p + q) * signed_pow(u[x], *p) * pw(v[x], *q);
                    gv[x] -= chi[x] * q / (p + q) * pw(u[x], *p) * signed_pow(v[x], *q);
                }
            }
            EnergyModel::PLaplacian {
                p,
                q,
                alpha,
                beta,
                lambda0,
            } => {
                gu = poly_masked(g, u, 1, *p, chi);
                gv = poly_masked(g, v, 1, *q, chi);
                for x in 0..nv {
                    gu[x] = (alpha + 1.0)
                        * (gu[x] - chi[x] * lambda0 * signed_pow(u[x], alpha + 1.0) * pw(v[x], beta + 1.0));
                    gv[x] = (beta + 1.0)
                        * (gv[x] - chi[x] * lambda0 * pw(u[x], alpha + 1.0) * signed_pow(v[x], beta + 1.0));
                }
            }
            EnergyModel::Poly {
                m,
                n,
                p,
                q,
                alpha,
                beta,
                lambda,
                vartheta,
                ..
            } => {
                let (l, t) = (lambda.expect("bound"), vartheta.expect("bound"));
                let k = alpha + beta + 2.0;
                gu = poly_masked(g, u, *m, *p, chi);
                gv = poly_masked(g, v, *n, *q, chi);
                for x in 0..nv {
                    gu[x] -= chi[x]
                        * (l * self.weight[x] * signed_pow(u[x], *p)
                            + (alpha + 1.0) / k * signed_pow(u[x], alpha + 1.0) * pw(v[x], beta + 1.0));
                    gv[x] -= chi[x]
                        * (t * self.sigma[x] * signed_pow(v[x], *q)
                            + (beta + 1.0) / k * pw(u[x], alpha + 1.0) * signed_pow(v[x], beta + 1.0));
                }
            }
            EnergyModel::Global { f, g: gn, .. } => {
                gu = poly_masked(g, u, 1, 2.0, chi);
                gv = poly_masked(g, v, 1, 2.0, chi);
                for x in 0..nv {
                    gu[x] += self.h[x] * u[x] - f.f(u[x]);
                    gv[x] += self.h[x] * v[x] - gn.f(v[x]);
                }
            }
            EnergyModel::PGlobal { p, q, potential, .. } => {
                gu = poly_masked(g, u, 1, *p, chi);
                gv = poly_masked(g, v, 1, *q, chi);
                for x in 0..nv {
                    gu[x] += self.h[x] * signed_pow(u[x], *p) - potential.du(u[x], v[x]);
                    gv[x] += self.h[x] * signed_pow(v[x], *q) - potential.dv(u[x], v[x]);
                }
            }
            EnergyModel::PolyGlobal {
                m, n, p, q, f, g: gn, ..
            } => {
                gu = poly_masked(g, u, *m, *p, chi);
                gv = poly_masked(g, v, *n, *q, chi);
                for x in 0..nv {
                    gu[x] += self.h[x] * signed_pow(u[x], *p) - f.f(u[x]);
                    gv[x] += self.h[x] * signed_pow(v[x], *q) - gn.f(v[x]);
                }
            }
            EnergyModel::Quadratic => {
                gu = u.to_vec();
                gv = v.to_vec();
            }
        }
        FunctionPair { u: gu, v: gv }
    }

    /// Literal pointwise residual of the normalized-exponential system for the eigenspace model:
    /// 𝓛u − φ₁(e^{2u−v}/∫e^{2u−v} − 1) and its v counterpart.
    pub fn toda_pointwise_residual(&self, pair: &FunctionPair) -> Option<FunctionPair> {
        let EnergyModel::Toda { phi1, phi2, m, n } = &self.model else {
            return None;
        };
        let g = self.graph;
        let psi = g.measure();
        let (u, v) = (&pair.u, &pair.v);
        let w1: Vec<f64> = (0..u.len()).map(|x| 2.0 * u[x] - v[x]).collect();
        let w2: Vec<f64> = (0..u.len()).map(|x| -u[x] + 2.0 * v[x]).collect();
        let (_, e1) = log_integral_exp(psi, &w1);
        let (_, e2) = log_integral_exp(psi, &w2);
        let mut ru = poly_masked(g, u, *m, 2.0, &self.chi);
        let mut rv = poly_masked(g, v, *n, 2.0, &self.chi);
        for x in 0..u.len() {
            ru[x] -= phi1 * (e1[x] - 1.0);
            rv[x] -= phi2 * (e2[x] - 1.0);
        }
        Some(FunctionPair { u: ru, v: rv })
    }

    /// Hypotheses of the theorem behind a global model; `None` for models without a nonlinearity catalog entry.
    pub fn hypotheses(&self) -> Option<Result<HypothesisReport>> {
        let g = self.graph;
        match &self.model {
            EnergyModel::Global { f, g: gn, s, .. } => Some(validate_hypotheses(
                CatalogPair::Scalar { f, g: gn },
                HypothesisSet::Semilinear,
                HypothesisContext {
                    p: 2.0,
                    q: 2.0,
                    growth: Some(*s),
                    lambda_u: None,
                    lambda_v: None,
                },
            )),
            EnergyModel::PGlobal { p, q, potential, .. } => Some(validate_hypotheses(
                CatalogPair::Coupled(potential),
                HypothesisSet::Coupled,
                HypothesisContext {
                    p: *p,
                    q: *q,
                    ..Default::default()
                },
            )),
            EnergyModel::PolyGlobal {
                m, n, p, q, f, g: gn, ..
            } => {
                let global = |order: usize, exp: f64| {
                    weighted_rayleigh_inf(
                        g,
                        RayleighProblem::Global { h: &self.h },
                        order,
                        exp,
                        &MultiStart::default(),
                    )
                    .map(|r| r.value)
                };
                let (lu, lv) = match (global(*m, *p), global(*n, *q)) {
                    (Ok(a), Ok(b)) => (a, b),
                    (Err(e), _) | (_, Err(e)) => return Some(Err(e)),
                };
                Some(validate_hypotheses(
                    CatalogPair::Scalar { f, g: gn },
                    HypothesisSet::HigherOrder,
                    HypothesisContext {
                        p: *p,
                        q: *q,
                        growth: None,
                        lambda_u: Some(lu),
                        lambda_v: Some(lv),
                    },
                ))
            }
            _ => None,
        }
    }
}

pub fn energy_value(energy: &Energy<'_>, pair: &FunctionPair) -> Result<f64> {
    energy.value(pair)
}

pub fn energy_gradient(energy: &Energy<'_>, pair: &FunctionPair) -> Result<FunctionPair> {
    energy.gradient(pair)
}
