//! Closed catalog of power nonlinearities and the hypothesis validators for the global existence theorems.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// f(t) = c·(t⁺)^{r−1} with antiderivative F(t) = c·(t⁺)^r / r.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Power {
    pub c: f64,
    pub r: f64,
}

impl Power {
    pub fn new(c: f64, r: f64) -> Result<Self> {
        let p = Self { c, r };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c.is_finite() && self.c >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "coefficient c = {} must be nonnegative",
                self.c
            )));
        }
        if !(self.r.is_finite() && self.r > 1.0) {
            return Err(Error::InvalidParameter(format!(
                "exponent r = {} must exceed 1",
                self.r
            )));
        }
        Ok(())
    }

    pub fn f(&self, t: f64) -> f64 {
        self.c * t.max(0.0).powf(self.r - 1.0)
    }

    pub fn antiderivative(&self, t: f64) -> f64 {
        self.c * t.max(0.0).powf(self.r) / self.r
    }

    /// f′(t), used by Newton Jacobians.
    pub fn derivative(&self, t: f64) -> f64 {
        if t <= 0.0 {
            0.0
        } else {
            self.c * (self.r - 1.0) * t.powf(self.r - 2.0)
        }
    }
}

/// One term c·(u⁺)^a·(v⁺)^b of a coupled potential.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoupledTerm {
    pub c: f64,
    pub a: f64,
    pub b: f64,
}

/// F(u, v) = Σ c_k (u⁺)^{a_k} (v⁺)^{b_k}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoupledPower {
    pub terms: Vec<CoupledTerm>,
}

fn monomial(t: f64, e: f64) -> f64 {
    if e == 0.0 {
        1.0
    } else {
        t.max(0.0).powf(e)
    }
}

impl CoupledPower {
    pub fn new(terms: Vec<CoupledTerm>) -> Result<Self> {
        let p = Self { terms };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.terms.is_empty() {
            return Err(Error::InvalidParameter(
                "coupled potential needs at least one term".into(),
            ));
        }
        for (k, t) in self.terms.iter().enumerate() {
            if !(t.c.is_finite() && t.c >= 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "term {k}: coefficient {} must be nonnegative",
                    t.c
                )));
            }
            for e in [t.a, t.b] {
                if !(e == 0.0 || e > 1.0) || !e.is_finite() {
                    return Err(Error::InvalidParameter(format!(
                        "term {k}: exponent {e} must be 0 or exceed 1"
                    )));
                }
            }
            if t.a + t.b == 0.0 {
                return Err(Error::InvalidParameter(format!("term {k} is constant, so F(0,0) ≠ 0")));
            }
        }
        Ok(())
    }

    pub fn value(&self, u: f64, v: f64) -> f64 {
        self.terms
            .iter()
            .map(|t| t.c * monomial(u, t.a) * monomial(v, t.b))
            .sum()
    }

    /// ∂F/∂u.
    pub fn du(&self, u: f64, v: f64) -> f64 {
        self.terms
            .iter()
            .filter(|t| t.a > 0.0)
            .map(|t| t.c * t.a * monomial(u, t.a - 1.0) * monomial(v, t.b))
            .sum()
    }

    /// ∂F/∂v.
    pub fn dv(&self, u: f64, v: f64) -> f64 {
        self.terms
            .iter()
            .filter(|t| t.b > 0.0)
            .map(|t| t.c * t.b * monomial(u, t.a) * monomial(v, t.b - 1.0))
            .sum()
    }

    /// Second partials (uu, uv, vv).
    pub fn hessian(&self, u: f64, v: f64) -> (f64, f64, f64) {
        let mut h = (0.0, 0.0, 0.0);
        if u <= 0.0 && v <= 0.0 {
            return h;
        }
        for t in &self.terms {
            let d = |x: f64, e: f64, k: u32| -> f64 {
                match k {
                    0 => monomial(x, e),
                    1 if e > 0.0 && x > 0.0 => e * x.powf(e - 1.0),
                    2 if e > 1.0 && x > 0.0 => e * (e - 1.0) * x.powf(e - 2.0),
                    _ => 0.0,
                }
            };
            h.0 += t.c * d(u, t.a, 2) * d(v, t.b, 0);
            h.1 += t.c * d(u, t.a, 1) * d(v, t.b, 1);
            h.2 += t.c * d(u, t.a, 0) * d(v, t.b, 2);
        }
        h
    }
}

/// Which theorem's hypotheses to check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HypothesisSet {
    /// Semilinear global system with f(u), g(v).
    Semilinear,
    /// Quasilinear global system with a coupled potential.
    Coupled,
    /// Higher-order global system with f(u), g(v).
    HigherOrder,
}

/// Exponents and Rayleigh constants the hypotheses are checked against.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct HypothesisContext {
    pub p: f64,
    pub q: f64,
    /// Growth exponent s bounding f at infinity, when the theorem has one.
    pub growth: Option<f64>,
    pub lambda_u: Option<f64>,
    pub lambda_v: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    HypothesisViolated,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisCheck {
    pub name: String,
    pub verdict: Verdict,
    /// Sample point where the inequality failed.
    pub witness: Option<f64>,
    /// Constant that makes the hypothesis hold (θ, θ₀, or the θ₁ = θ₂ scale).
    pub constant: Option<f64>,
    pub note: Option<String>,
}

impl HypothesisCheck {
    fn new(name: &str, ok: bool) -> Self {
        Self {
            name: name.into(),
            verdict: if ok { Verdict::Pass } else { Verdict::Fail },
            witness: None,
            constant: None,
            note: None,
        }
    }
    fn witness(mut self, t: Option<f64>) -> Self {
        self.witness = t;
        self
    }
    fn constant(mut self, c: Option<f64>) -> Self {
        self.constant = c;
        self
    }
    fn note(mut self, n: &str) -> Self {
        self.note = Some(n.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisReport {
    pub set: HypothesisSet,
    pub checks: Vec<HypothesisCheck>,
}

impl HypothesisReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.verdict == Verdict::Pass)
    }
}

/// Which catalog entries a validator receives.
#[derive(Debug, Clone, PartialEq)]
pub enum CatalogPair<'a> {
    Scalar { f: &'a Power, g: &'a Power },
    Coupled(&'a CoupledPower),
}

const S0: f64 = 1.0;

fn sample_grid() -> impl Iterator<Item = f64> {
    (1..=200).map(|k| 10.0 * S0 * k as f64 / 200.0)
}

fn near_zero() -> impl Iterator<Item = f64> {
    (1..=12).map(|k| 10f64.powi(-k))
}

/// First t in the sample grid where `bad` holds.
fn first_failure(grid: impl Iterator<Item = f64>, bad: impl Fn(f64) -> bool) -> Option<f64> {
    grid.into_iter().find(|&t| bad(t))
}

fn check_sign(label: &str, f: &Power) -> HypothesisCheck {
    let w = first_failure(sample_grid(), |t| f.f(t) < 0.0);
    let ok = f.c >= 0.0 && f.f(0.0) == 0.0 && f.antiderivative(0.0) == 0.0 && w.is_none();
    HypothesisCheck::new(&format!("H1 ({label})"), ok).witness(w)
}

/// f(t) = o(t) as t → 0: needs r > 2 unless f vanishes.
fn check_small_linear(label: &str, name: &str, f: &Power) -> HypothesisCheck {
    let ok = f.c == 0.0 || f.r > 2.0;
    let w = if ok { None } else { near_zero().last() };
    HypothesisCheck::new(&format!("{name} ({label})"), ok).witness(w)
}

/// θF(t) < f(t)t for t > s₀, with θ strictly between `lower` and r.
fn check_ambrosetti(label: &str, name: &str, f: &Power, lower: f64) -> HypothesisCheck {
    let symbolic = f.c > 0.0 && f.r > lower;
    let theta = symbolic.then(|| (lower + f.r) / 2.0);
    let probe = theta.unwrap_or(lower + 1e-9);
    let w = first_failure(sample_grid().filter(|&t| t > S0), |t| {
        !(0.0 < probe * f.antiderivative(t) && probe * f.antiderivative(t) < f.f(t) * t)
    });
    HypothesisCheck::new(&format!("{name} ({label})"), symbolic && w.is_none())
        .witness(w)
        .constant(theta)
}

pub fn validate_hypotheses(
    pair: CatalogPair<'_>,
    set: HypothesisSet,
    ctx: HypothesisContext,
) -> Result<HypothesisReport> {
    let mut checks = Vec::new();
    match (set, &pair) {
        (HypothesisSet::Semilinear, CatalogPair::Scalar { f, g }) => {
            let s = ctx.growth.unwrap_or(f64::INFINITY);
            for (label, nl) in [("f", *f), ("g", *g)] {
                checks.push(check_sign(label, nl));
                let ok = nl.c == 0.0 || nl.r - 1.0 < s;
                checks.push(
                    HypothesisCheck::new(&format!("H2 ({label})"), ok)
                        .witness((!ok).then_some(10.0 * S0))
                        .note(&format!("growth exponent s = {s}")),
                );
                checks.push(check_small_linear(label, "H3", nl));
                checks.push(check_ambrosetti(label, "H4", nl, 2.0));
            }
        }
        (HypothesisSet::HigherOrder, CatalogPair::Scalar { f, g }) => {
            let top = ctx.p.max(ctx.q);
            for (label, nl, lambda) in [("f", *f, ctx.lambda_u), ("g", *g, ctx.lambda_v)] {
                checks.push(check_sign(label, nl));
                // limsup_{t→0} |f(t)|/t: 0 for r > 2, c for r = 2, ∞ below.
                let slope = if nl.c == 0.0 || nl.r > 2.0 {
                    0.0
                } else if nl.r == 2.0 {
                    nl.c
                } else {
                    f64::INFINITY
                };
                let ok = match lambda {
                    Some(l) => slope < l,
                    None => slope == 0.0,
                };
                checks.push(
                    HypothesisCheck::new(&format!("H2 ({label})"), ok)
                        .witness((!ok).then(|| near_zero().last().unwrap_or(0.0)))
                        .note("checked as written, |f(t)|/t against a p-homogeneous Rayleigh constant; the natural comparison would use |t|^(p-1)"),
                );
                let mut c = check_ambrosetti(label, "H3", nl, top);
                if label == "g" {
                    c = c.note("checked as θ₀G(s) < g(s)s; the statement writes G(s)s on the right");
                }
                checks.push(c);
            }
        }
        (HypothesisSet::Coupled, CatalogPair::Coupled(pot)) => {
            let sign_ok = pot.terms.iter().all(|t| t.c >= 0.0)
                && pot.value(0.0, 0.0) == 0.0
                && pot.du(0.0, 0.0) == 0.0
                && pot.dv(0.0, 0.0) == 0.0;
            checks.push(HypothesisCheck::new("H1", sign_ok));
            // Weighted AM–GM bounds every monomial by powers of degree a + b; pick exponents beyond p and q.
            let degree = pot.terms.iter().map(|t| t.a + t.b).fold(0.0, f64::max);
            let r = degree.max(ctx.p.max(ctx.q) + 1.0);
            checks.push(HypothesisCheck::new("H2", true).constant(Some(r)));
            checks.push(HypothesisCheck::new("H3", true).constant(Some(r)));
            // θ₁ = t/p, θ₂ = t/q with t < 1 and θ₁a_k + θ₂b_k ≥ 1 for all k.
            let scale = pot
                .terms
                .iter()
                .filter(|t| t.c > 0.0)
                .map(|t| 1.0 / (t.a / ctx.p + t.b / ctx.q))
                .fold(f64::NEG_INFINITY, f64::max);
            let any_positive = pot.terms.iter().any(|t| t.c > 0.0);
            let symbolic = any_positive && scale < 1.0;
            let (t1, t2) = (scale / ctx.p, scale / ctx.q);
            let w = first_failure(sample_grid().filter(|&t| t >= S0), |t| {
                let (f, g) = (pot.du(t, t), pot.dv(t, t));
                let val = pot.value(t, t);
                !(val > 0.0 && val <= (t1 * t * f + t2 * t * g) * (1.0 + 1e-12))
            });
            checks.push(
                HypothesisCheck::new("H4", symbolic && w.is_none())
                    .witness(w)
                    .constant(symbolic.then_some(scale))
                    .note("θ₁ = constant/p, θ₂ = constant/q; checked for u, v ≥ R since F sees positive parts"),
            );
        }
        _ => {
            return Err(Error::InvalidParameter(format!(
                "{set:?} hypotheses need a different nonlinearity kind"
            )));
        }
    }
    Ok(HypothesisReport { set, checks })
}
