//! Agent objectives: evaluators, gradients and Jacobian bound vectors.
//!
//! Every objective carries row vectors `jac_lo <= grad f(x) <= jac_hi`
//! valid over its domain box. Polynomial objectives get those bounds from
//! interval evaluation of each partial derivative; anything else has to
//! supply them.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::{Hyperbox, Interval};

/// A differentiable map `R^n -> R`.
pub trait SmoothFunction: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    fn gradient_into(&self, x: &[f64], out: &mut [f64]);

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim()];
        self.gradient_into(x, &mut g);
        g
    }
}

/// `coef * prod_j x_j^exps[j]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    #[serde(rename = "c")]
    pub coef: f64,
    #[serde(rename = "e")]
    pub exps: Vec<u32>,
}

impl Monomial {
    pub fn new(coef: f64, exps: Vec<u32>) -> Self {
        Monomial { coef, exps }
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.exps
            .iter()
            .zip(x)
            .fold(self.coef, |acc, (&e, &xj)| acc * xj.powi(e as i32))
    }

    /// Range over a box, composed factor by factor.
    fn range(&self, domain: &Hyperbox) -> Interval {
        self.exps
            .iter()
            .enumerate()
            .fold(Interval::point(self.coef), |acc, (j, &e)| {
                acc.mul(&domain.component(j).powi(e))
            })
    }
}

/// Multivariate polynomial with real coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPolynomial")]
pub struct Polynomial {
    dim: usize,
    terms: Vec<Monomial>,
}

#[derive(Deserialize)]
struct RawPolynomial {
    dim: usize,
    terms: Vec<Monomial>,
}

impl TryFrom<RawPolynomial> for Polynomial {
    type Error = Error;

    fn try_from(raw: RawPolynomial) -> Result<Self> {
        Polynomial::new(raw.dim, raw.terms)
    }
}

impl Polynomial {
    pub fn new(dim: usize, terms: Vec<Monomial>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::usage("polynomial dimension must be >= 1"));
        }
        if let Some(t) = terms.iter().find(|t| t.exps.len() != dim) {
            return Err(Error::usage(format!(
                "monomial exponent vector {:?} does not match dimension {dim}",
                t.exps
            )));
        }
        if terms.iter().any(|t| !t.coef.is_finite()) {
            return Err(Error::usage("polynomial coefficients must be finite"));
        }
        Ok(Polynomial { dim, terms })
    }

    /// Univariate polynomial `sum_k coeffs[k] x^k`.
    pub fn univariate(coeffs: &[f64]) -> Self {
        let terms = coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(k, &c)| Monomial {
                coef: c,
                exps: vec![k as u32],
            })
            .collect();
        Polynomial { dim: 1, terms }
    }

    pub fn zero(dim: usize) -> Self {
        Polynomial { dim, terms: vec![] }
    }

    /// Affine polynomial `constant + slope . x`.
    pub fn affine(constant: f64, slope: &[f64]) -> Self {
        let dim = slope.len();
        let mut terms = vec![Monomial {
            coef: constant,
            exps: vec![0; dim],
        }];
        for (j, &s) in slope.iter().enumerate() {
            let mut exps = vec![0; dim];
            exps[j] = 1;
            terms.push(Monomial { coef: s, exps });
        }
        Polynomial { dim, terms }.canonical()
    }

    pub fn terms(&self) -> &[Monomial] {
        &self.terms
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().map(|t| t.exps.iter().sum::<u32>()).max().unwrap_or(0)
    }

    /// Like terms merged, zero coefficients dropped, terms sorted by exponent.
    pub fn canonical(&self) -> Polynomial {
        let mut merged: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        for t in &self.terms {
            *merged.entry(t.exps.clone()).or_insert(0.0) += t.coef;
        }
        Polynomial {
            dim: self.dim,
            terms: merged
                .into_iter()
                .filter(|(_, c)| *c != 0.0)
                .map(|(exps, coef)| Monomial { coef, exps })
                .collect(),
        }
    }

    pub fn is_affine(&self) -> bool {
        self.canonical().degree() <= 1
    }

    pub fn partial(&self, j: usize) -> Polynomial {
        let terms = self
            .terms
            .iter()
            .filter(|t| t.exps[j] > 0)
            .map(|t| {
                let mut exps = t.exps.clone();
                exps[j] -= 1;
                Monomial {
                    coef: t.coef * t.exps[j] as f64,
                    exps,
                }
            })
            .collect();
        Polynomial { dim: self.dim, terms }
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        assert_eq!(self.dim, other.dim, "polynomial dimension mismatch");
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Polynomial { dim: self.dim, terms }.canonical()
    }

    pub fn scale(&self, c: f64) -> Polynomial {
        Polynomial {
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .map(|t| Monomial {
                    coef: t.coef * c,
                    exps: t.exps.clone(),
                })
                .collect(),
        }
        .canonical()
    }

    pub fn sub(&self, other: &Polynomial) -> Polynomial {
        self.add(&other.scale(-1.0))
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        assert_eq!(self.dim, other.dim, "polynomial dimension mismatch");
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                terms.push(Monomial {
                    coef: a.coef * b.coef,
                    exps: a.exps.iter().zip(&b.exps).map(|(x, y)| x + y).collect(),
                });
            }
        }
        Polynomial { dim: self.dim, terms }.canonical()
    }

    /// Sound enclosure of the range over `domain`, monomial by monomial.
    pub fn range(&self, domain: &Hyperbox) -> Interval {
        self.terms
            .iter()
            .fold(Interval::point(0.0), |acc, t| acc.add(&t.range(domain)))
    }

    /// Enclosure of each partial derivative over `domain`.
    pub fn gradient_bounds(&self, domain: &Hyperbox) -> (Vec<f64>, Vec<f64>) {
        (0..self.dim)
            .map(|j| {
                let r = self.partial(j).range(domain);
                (r.lo(), r.hi())
            })
            .unzip()
    }
}

impl SmoothFunction for Polynomial {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|t| t.value(x)).sum()
    }

    fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|g| *g = 0.0);
        for t in &self.terms {
            for j in 0..self.dim {
                let e = t.exps[j];
                if e == 0 {
                    continue;
                }
                let mut v = t.coef * e as f64;
                for (k, &ek) in t.exps.iter().enumerate() {
                    let p = if k == j { ek - 1 } else { ek };
                    v *= x[k].powi(p as i32);
                }
                out[j] += v;
            }
        }
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|t| {
                let vars: Vec<String> = t
                    .exps
                    .iter()
                    .enumerate()
                    .filter(|(_, e)| **e > 0)
                    .map(|(j, e)| {
                        if *e == 1 {
                            format!("x{}", j + 1)
                        } else {
                            format!("x{}^{e}", j + 1)
                        }
                    })
                    .collect();
                if vars.is_empty() {
                    format!("{}", t.coef)
                } else {
                    format!("{}*{}", t.coef, vars.join("*"))
                }
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// `base(x) + slope . x`.
struct AffineShift {
    base: Arc<dyn SmoothFunction>,
    slope: Vec<f64>,
}

impl SmoothFunction for AffineShift {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.base.value(x) + dot(&self.slope, x)
    }

    fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        self.base.gradient_into(x, out);
        out.iter_mut().zip(&self.slope).for_each(|(g, s)| *g += s);
    }
}

/// `sign_a * a(x) + sign_b * b(x)`, used for sums and differences.
struct Combination {
    parts: Vec<(f64, Arc<dyn SmoothFunction>)>,
}

impl SmoothFunction for Combination {
    fn dim(&self) -> usize {
        self.parts[0].1.dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.parts.iter().map(|(w, f)| w * f.value(x)).sum()
    }

    fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|g| *g = 0.0);
        let mut tmp = vec![0.0; out.len()];
        for (w, f) in &self.parts {
            f.gradient_into(x, &mut tmp);
            out.iter_mut().zip(&tmp).for_each(|(g, t)| *g += w * t);
        }
    }
}

/// `f + weight * (sum max(0, G_k)^2 + sum H_k^2)`.
struct Penalized {
    base: Arc<dyn SmoothFunction>,
    ineq: Vec<Arc<dyn SmoothFunction>>,
    eq: Vec<Arc<dyn SmoothFunction>>,
    weight: f64,
}

impl SmoothFunction for Penalized {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let ineq: f64 = self.ineq.iter().map(|g| g.value(x).max(0.0).powi(2)).sum();
        let eq: f64 = self.eq.iter().map(|h| h.value(x).powi(2)).sum();
        self.base.value(x) + self.weight * (ineq + eq)
    }

    fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        self.base.gradient_into(x, out);
        let mut tmp = vec![0.0; out.len()];
        let terms = self
            .ineq
            .iter()
            .map(|g| (g, g.value(x).max(0.0)))
            .chain(self.eq.iter().map(|h| (h, h.value(x))));
        for (c, v) in terms {
            if v == 0.0 {
                continue;
            }
            c.gradient_into(x, &mut tmp);
            let k = 2.0 * self.weight * v;
            out.iter_mut().zip(&tmp).for_each(|(g, t)| *g += k * t);
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// An agent objective with verified Jacobian bounds over its domain.
#[derive(Clone)]
pub struct ObjectiveSpec {
    func: Arc<dyn SmoothFunction>,
    poly: Option<Polynomial>,
    domain: Hyperbox,
    jac_lo: Vec<f64>,
    jac_hi: Vec<f64>,
}

impl fmt::Debug for ObjectiveSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut d = f.debug_struct("ObjectiveSpec");
        if let Some(p) = &self.poly {
            d.field("poly", &format_args!("{p}"));
        }
        d.field("domain", &format_args!("{}", self.domain))
            .field("jac_lo", &self.jac_lo)
            .field("jac_hi", &self.jac_hi)
            .finish()
    }
}

impl ObjectiveSpec {
    /// Polynomial objective with bounds from interval evaluation of each partial.
    pub fn from_polynomial(p: Polynomial, domain: Hyperbox) -> Result<Self> {
        domain.check_dim(p.dim)?;
        let (jac_lo, jac_hi) = p.gradient_bounds(&domain);
        Ok(ObjectiveSpec {
            func: Arc::new(p.clone()),
            poly: Some(p),
            domain,
            jac_lo,
            jac_hi,
        })
    }

    /// Arbitrary objective; the caller vouches for the Jacobian bounds.
    pub fn from_function(
        func: Arc<dyn SmoothFunction>,
        domain: Hyperbox,
        jac_lo: Vec<f64>,
        jac_hi: Vec<f64>,
    ) -> Result<Self> {
        domain.check_dim(func.dim())?;
        check_bounds(domain.dim(), &jac_lo, &jac_hi)?;
        Ok(ObjectiveSpec {
            func,
            poly: None,
            domain,
            jac_lo,
            jac_hi,
        })
    }

    /// Same objective with replaced Jacobian bounds (no soundness check).
    pub fn with_jacobian_bounds(&self, jac_lo: Vec<f64>, jac_hi: Vec<f64>) -> Result<Self> {
        check_bounds(self.dim(), &jac_lo, &jac_hi)?;
        Ok(ObjectiveSpec {
            jac_lo,
            jac_hi,
            ..self.clone()
        })
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn domain(&self) -> &Hyperbox {
        &self.domain
    }

    pub fn jac_lo(&self) -> &[f64] {
        &self.jac_lo
    }

    pub fn jac_hi(&self) -> &[f64] {
        &self.jac_hi
    }

    pub fn polynomial(&self) -> Option<&Polynomial> {
        self.poly.as_ref()
    }

    pub fn function(&self) -> &Arc<dyn SmoothFunction> {
        &self.func
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.func.value(x)
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.func.gradient(x)
    }

    pub fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        self.func.gradient_into(x, out)
    }

    /// `g(x) = f(x) + slope . x`; bounds shift by `slope`.
    pub fn shifted(&self, slope: &[f64]) -> Result<Self> {
        if slope.len() != self.dim() {
            return Err(Error::usage(format!(
                "slope has length {}, objective dimension is {}",
                slope.len(),
                self.dim()
            )));
        }
        let jac_lo = self.jac_lo.iter().zip(slope).map(|(a, s)| a + s).collect();
        let jac_hi = self.jac_hi.iter().zip(slope).map(|(a, s)| a + s).collect();
        let poly = self.poly.as_ref().map(|p| p.add(&Polynomial::affine(0.0, slope)));
        let func: Arc<dyn SmoothFunction> = match &poly {
            Some(p) => Arc::new(p.clone()),
            None => Arc::new(AffineShift {
                base: self.func.clone(),
                slope: slope.to_vec(),
            }),
        };
        Ok(ObjectiveSpec {
            func,
            poly,
            domain: self.domain.clone(),
            jac_lo,
            jac_hi,
        })
    }

    /// `self - other`, with bounds `[lo - other.hi, hi - other.lo]`.
    pub fn difference(&self, other: &ObjectiveSpec) -> Result<Self> {
        if self.domain != other.domain {
            return Err(Error::usage("objectives live on different domains"));
        }
        if let (Some(a), Some(b)) = (&self.poly, &other.poly) {
            return ObjectiveSpec::from_polynomial(a.sub(b), self.domain.clone());
        }
        let jac_lo = self.jac_lo.iter().zip(&other.jac_hi).map(|(a, b)| a - b).collect();
        let jac_hi = self.jac_hi.iter().zip(&other.jac_lo).map(|(a, b)| a - b).collect();
        Ok(ObjectiveSpec {
            func: Arc::new(Combination {
                parts: vec![(1.0, self.func.clone()), (-1.0, other.func.clone())],
            }),
            poly: None,
            domain: self.domain.clone(),
            jac_lo,
            jac_hi,
        })
    }

    /// Structural identity: equal polynomials, or the same evaluator instance,
    /// together with equal bounds.
    pub fn same_as(&self, other: &ObjectiveSpec) -> bool {
        let same_fn = match (&self.poly, &other.poly) {
            (Some(a), Some(b)) => a.canonical() == b.canonical(),
            (None, None) => Arc::ptr_eq(&self.func, &other.func),
            _ => false,
        };
        same_fn && self.domain == other.domain && self.jac_lo == other.jac_lo && self.jac_hi == other.jac_hi
    }
}

fn check_bounds(n: usize, lo: &[f64], hi: &[f64]) -> Result<()> {
    if lo.len() != n || hi.len() != n {
        return Err(Error::usage(format!(
            "Jacobian bounds must have length {n}, got {} and {}",
            lo.len(),
            hi.len()
        )));
    }
    if let Some(j) = (0..n).find(|&j| !(lo[j] <= hi[j])) {
        return Err(Error::usage(format!("Jacobian bound {j}: lo {} > hi {}", lo[j], hi[j])));
    }
    Ok(())
}

/// Constraint evaluator for [`penalize`].
#[derive(Clone)]
pub enum Constraint {
    Polynomial(Polynomial),
    /// Differentiable but without automatic gradient bounds.
    Opaque(Arc<dyn SmoothFunction>),
}

impl Constraint {
    fn function(&self) -> Arc<dyn SmoothFunction> {
        match self {
            Constraint::Polynomial(p) => Arc::new(p.clone()),
            Constraint::Opaque(f) => f.clone(),
        }
    }
}

/// Quadratic-penalty reduction of a constrained problem to a box-constrained one.
///
/// `ineq` are `G_k(x) <= 0` constraints, `eq` are `H_k(x) = 0` constraints
/// (already shifted by their right-hand side). When every constraint is a
/// polynomial the new Jacobian bounds are computed by interval evaluation;
/// otherwise `bounds` must be supplied.
pub fn penalize(
    objective: &ObjectiveSpec,
    ineq: &[Constraint],
    eq: &[Constraint],
    weight: f64,
    bounds: Option<(Vec<f64>, Vec<f64>)>,
) -> Result<ObjectiveSpec> {
    if !(weight >= 0.0) || !weight.is_finite() {
        return Err(Error::usage(format!("penalty weight must be >= 0, got {weight}")));
    }
    if ineq.is_empty() && eq.is_empty() || weight == 0.0 {
        return match bounds {
            Some((lo, hi)) => objective.with_jacobian_bounds(lo, hi),
            None => Ok(objective.clone()),
        };
    }
    let n = objective.dim();
    let domain = objective.domain();
    for c in ineq.iter().chain(eq) {
        let d = match c {
            Constraint::Polynomial(p) => p.dim,
            Constraint::Opaque(f) => f.dim(),
        };
        if d != n {
            return Err(Error::usage(format!(
                "constraint dimension {d} does not match objective dimension {n}"
            )));
        }
    }

    // Equality-only polynomial penalties stay polynomial.
    if ineq.is_empty() {
        if let Some(base) = objective.polynomial() {
            let polys: Option<Vec<&Polynomial>> = eq
                .iter()
                .map(|c| match c {
                    Constraint::Polynomial(p) => Some(p),
                    Constraint::Opaque(_) => None,
                })
                .collect();
            if let Some(polys) = polys {
                let penalty = polys.iter().fold(Polynomial::zero(n), |acc, h| acc.add(&h.mul(h)));
                let p = base.add(&penalty.scale(weight));
                let spec = ObjectiveSpec::from_polynomial(p, domain.clone())?;
                return match bounds {
                    Some((lo, hi)) => spec.with_jacobian_bounds(lo, hi),
                    None => Ok(spec),
                };
            }
        }
    }

    let func: Arc<dyn SmoothFunction> = Arc::new(Penalized {
        base: objective.function().clone(),
        ineq: ineq.iter().map(Constraint::function).collect(),
        eq: eq.iter().map(Constraint::function).collect(),
        weight,
    });
    let (lo, hi) = match bounds {
        Some(b) => b,
        None => penalty_bounds(objective, ineq, eq, weight)?,
    };
    ObjectiveSpec::from_function(func, domain.clone(), lo, hi)
}

/// Interval enclosure of the penalized gradient: the objective's bounds plus
/// `2 w [max(0,G)] [grad G]` and `2 w [H] [grad H]` per constraint.
fn penalty_bounds(
    objective: &ObjectiveSpec,
    ineq: &[Constraint],
    eq: &[Constraint],
    weight: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let domain = objective.domain();
    let n = objective.dim();
    let mut acc: Vec<Interval> = (0..n)
        .map(|j| Interval::new(objective.jac_lo()[j], objective.jac_hi()[j]))
        .collect::<Result<_>>()?;
    let terms = ineq.iter().map(|c| (c, true)).chain(eq.iter().map(|c| (c, false)));
    for (c, is_ineq) in terms {
        let p = match c {
            Constraint::Polynomial(p) => p,
            Constraint::Opaque(_) => {
                return Err(Error::usage(
                    "non-polynomial constraint requires caller-supplied Jacobian bounds",
                ))
            }
        };
        let mut value = p.range(domain);
        if is_ineq {
            value = value.positive_part();
        }
        for (j, a) in acc.iter_mut().enumerate() {
            let term = value.mul(&p.partial(j).range(domain)).scale(2.0 * weight);
            *a = a.add(&term);
        }
    }
    Ok(acc.iter().map(|i| (i.lo(), i.hi())).unzip())
}

/// `N` agent objectives over a shared domain.
#[derive(Debug, Clone)]
pub struct AgentProblem {
    objectives: Vec<ObjectiveSpec>,
}

impl AgentProblem {
    pub fn new(objectives: Vec<ObjectiveSpec>) -> Result<Self> {
        let first = objectives
            .first()
            .ok_or_else(|| Error::usage("agent problem needs at least one objective"))?;
        if let Some(i) = objectives.iter().position(|o| o.domain() != first.domain()) {
            return Err(Error::usage(format!(
                "objective {i} has a different domain from objective 0"
            )));
        }
        Ok(AgentProblem { objectives })
    }

    pub fn objectives(&self) -> &[ObjectiveSpec] {
        &self.objectives
    }

    pub fn agent_count(&self) -> usize {
        self.objectives.len()
    }

    pub fn domain(&self) -> &Hyperbox {
        self.objectives[0].domain()
    }

    pub fn dim(&self) -> usize {
        self.domain().dim()
    }

    /// Copy with agent `i` replaced.
    pub fn with_agent(&self, i: usize, spec: ObjectiveSpec) -> Result<Self> {
        if i >= self.agent_count() {
            return Err(Error::usage(format!("agent index {i} out of range")));
        }
        let mut objectives = self.objectives.clone();
        objectives[i] = spec;
        AgentProblem::new(objectives)
    }
}

/// `f = sum_i f_i`, bounds summed componentwise.
pub fn sum_objective(problem: &AgentProblem) -> ObjectiveSpec {
    let objs = problem.objectives();
    if objs.len() == 1 {
        return objs[0].clone();
    }
    let n = problem.dim();
    let mut jac_lo = vec![0.0; n];
    let mut jac_hi = vec![0.0; n];
    for o in objs {
        for j in 0..n {
            jac_lo[j] += o.jac_lo()[j];
            jac_hi[j] += o.jac_hi()[j];
        }
    }
    let poly = objs
        .iter()
        .map(|o| o.polynomial().cloned())
        .collect::<Option<Vec<_>>>()
        .map(|ps| ps.iter().fold(Polynomial::zero(n), |acc, p| acc.add(p)));
    let func: Arc<dyn SmoothFunction> = match &poly {
        Some(p) => Arc::new(p.clone()),
        None => Arc::new(Combination {
            parts: objs.iter().map(|o| (1.0, o.function().clone())).collect(),
        }),
    };
    ObjectiveSpec {
        func,
        poly,
        domain: problem.domain().clone(),
        jac_lo,
        jac_hi,
    }
}

/// Optional per-agent replacement of the computed Jacobian bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsOverride {
    pub agent: usize,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

/// On-disk problem: a domain plus one polynomial per agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemFixture {
    pub domain: Hyperbox,
    pub objectives: Vec<Polynomial>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub jacobian_overrides: Vec<BoundsOverride>,
}

impl ProblemFixture {
    pub fn to_problem(&self) -> Result<AgentProblem> {
        let mut specs = self
            .objectives
            .iter()
            .map(|p| ObjectiveSpec::from_polynomial(p.clone(), self.domain.clone()))
            .collect::<Result<Vec<_>>>()?;
        for o in &self.jacobian_overrides {
            let spec = specs
                .get(o.agent)
                .ok_or_else(|| Error::usage(format!("override for unknown agent {}", o.agent)))?;
            specs[o.agent] = spec.with_jacobian_bounds(o.lo.clone(), o.hi.clone())?;
        }
        AgentProblem::new(specs)
    }
}

/// Three quartic/cubic objectives on `[-10, 10]`:
/// `(x^3 - 16x)(x + 2)`, `(0.5x^3 + x^2)(x - 4)` and `(x + 2)^2 (x - 4)`.
pub const EXAMPLE_FIXTURE: &str = include_str!("../fixtures/example_problem.json");

pub fn example_fixture() -> ProblemFixture {
    serde_json::from_str(EXAMPLE_FIXTURE).expect("bundled fixture parses")
}

pub fn example_problem() -> AgentProblem {
    example_fixture().to_problem().expect("bundled fixture is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn x_squared() -> Polynomial {
        Polynomial::univariate(&[0.0, 0.0, 1.0])
    }

    fn grid(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
        (0..n).map(move |k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
    }

    #[test]
    fn square_on_unit_interval_has_exact_bounds() {
        let s = ObjectiveSpec::from_polynomial(x_squared(), Hyperbox::scalar(0.0, 2.0).unwrap()).unwrap();
        assert_eq!(s.jac_lo(), &[0.0]);
        assert_eq!(s.jac_hi(), &[4.0]);
    }

    #[test]
    fn constant_polynomial_has_zero_bounds() {
        let s = ObjectiveSpec::from_polynomial(Polynomial::univariate(&[7.0]), Hyperbox::scalar(-3.0, 3.0).unwrap())
            .unwrap();
        assert_eq!((s.jac_lo(), s.jac_hi()), (&[0.0][..], &[0.0][..]));
    }

    #[test]
    fn quartic_bounds_enclose_grid_range() {
        // x^4 + 2x^3 - 16x^2 - 32x, derivative 4x^3 + 6x^2 - 32x - 32
        let p = Polynomial::univariate(&[0.0, -32.0, -16.0, 2.0, 1.0]);
        let s = ObjectiveSpec::from_polynomial(p, Hyperbox::scalar(-10.0, 10.0).unwrap()).unwrap();
        let d = |x: f64| 4.0 * x.powi(3) + 6.0 * x * x - 32.0 * x - 32.0;
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for x in grid(-10.0, 10.0, 100_000) {
            lo = lo.min(d(x));
            hi = hi.max(d(x));
        }
        assert!(s.jac_lo()[0] <= lo && hi <= s.jac_hi()[0]);
        // monomial-wise: [-4000,4000] + [0,600] + [-320,320] - 32
        assert_eq!(s.jac_lo()[0], -4352.0);
        assert_eq!(s.jac_hi()[0], 4888.0);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let p = Polynomial::new(
            2,
            vec![
                Monomial {
                    coef: 1.5,
                    exps: vec![2, 1],
                },
                Monomial {
                    coef: -2.0,
                    exps: vec![0, 3],
                },
                Monomial {
                    coef: 0.5,
                    exps: vec![1, 0],
                },
            ],
        )
        .unwrap();
        let x = [0.7, -1.3];
        let g = p.gradient(&x);
        let h = 1e-6;
        for j in 0..2 {
            let mut a = x;
            let mut b = x;
            a[j] += h;
            b[j] -= h;
            let fd = (p.value(&a) - p.value(&b)) / (2.0 * h);
            assert!((fd - g[j]).abs() < 1e-6, "coordinate {j}: {fd} vs {}", g[j]);
        }
    }

    #[test]
    fn penalize_without_constraints_is_identity() {
        let s = ObjectiveSpec::from_polynomial(x_squared(), Hyperbox::scalar(-1.0, 1.0).unwrap()).unwrap();
        let p = penalize(&s, &[], &[], 10.0, None).unwrap();
        assert!(p.same_as(&s));
    }

    #[test]
    fn equality_penalty_is_polynomial() {
        let f = ObjectiveSpec::from_polynomial(
            Polynomial::univariate(&[0.0, 1.0]),
            Hyperbox::scalar(-1.0, 1.0).unwrap(),
        )
        .unwrap();
        let h = Constraint::Polynomial(Polynomial::univariate(&[0.0, 1.0]));
        let p = penalize(&f, &[], &[h], 10.0, None).unwrap();
        for x in [-1.0, -0.3, 0.0, 0.8] {
            assert!((p.value(&[x]) - (x + 10.0 * x * x)).abs() < 1e-12);
        }
        assert_eq!(
            p.polynomial().unwrap().canonical(),
            Polynomial::univariate(&[0.0, 1.0, 10.0])
        );
        assert_eq!((p.jac_lo()[0], p.jac_hi()[0]), (-19.0, 21.0));
    }

    #[test]
    fn inequality_penalty_values() {
        let f = ObjectiveSpec::from_polynomial(Polynomial::zero(1), Hyperbox::scalar(0.0, 1.0).unwrap()).unwrap();
        let g = Constraint::Polynomial(Polynomial::univariate(&[-0.5, 1.0]));
        let p = penalize(&f, &[g], &[], 1.0, None).unwrap();
        let got: Vec<f64> = [0.0, 0.5, 1.0].iter().map(|&x| p.value(&[x])).collect();
        assert_eq!(got, vec![0.0, 0.0, 0.25]);
        // derivative 2 max(0, x - 0.5) lies in [0, 1] on [0, 1]
        assert!(p.jac_lo()[0] <= 0.0 && p.jac_hi()[0] >= 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let x = p.domain().sample_point(&mut rng);
            let d = p.gradient(&x)[0];
            assert!(p.jac_lo()[0] <= d && d <= p.jac_hi()[0]);
        }
    }

    #[test]
    fn opaque_constraint_needs_bounds() {
        let f = ObjectiveSpec::from_polynomial(x_squared(), Hyperbox::scalar(-1.0, 1.0).unwrap()).unwrap();
        let c = Constraint::Opaque(Arc::new(Polynomial::univariate(&[0.0, 1.0])));
        let err = penalize(&f, &[c.clone()], &[], 1.0, None).unwrap_err();
        assert!(matches!(err, Error::Usage(_)));
        let ok = penalize(&f, &[c], &[], 1.0, Some((vec![-4.0], vec![4.0]))).unwrap();
        assert_eq!(ok.value(&[0.5]), 0.25 + 0.25);
    }

    #[test]
    fn zero_weight_is_pointwise_identity() {
        let f = ObjectiveSpec::from_polynomial(x_squared(), Hyperbox::scalar(-1.0, 1.0).unwrap()).unwrap();
        let g = Constraint::Polynomial(Polynomial::univariate(&[0.0, 1.0]));
        let p = penalize(&f, &[g.clone()], &[g], 0.0, None).unwrap();
        for x in [-1.0, 0.2, 0.9] {
            assert_eq!(p.value(&[x]), f.value(&[x]));
        }
    }

    #[test]
    fn sum_of_single_agent_is_that_agent() {
        let s = ObjectiveSpec::from_polynomial(x_squared(), Hyperbox::scalar(0.0, 2.0).unwrap()).unwrap();
        let p = AgentProblem::new(vec![s.clone()]).unwrap();
        assert!(sum_objective(&p).same_as(&s));
    }

    #[test]
    fn sum_of_two_squares_doubles_everything() {
        let s = ObjectiveSpec::from_polynomial(x_squared(), Hyperbox::scalar(0.0, 2.0).unwrap()).unwrap();
        let f = sum_objective(&AgentProblem::new(vec![s.clone(), s]).unwrap());
        assert_eq!(f.value(&[1.5]), 2.0 * 2.25);
        assert_eq!((f.jac_lo(), f.jac_hi()), (&[0.0][..], &[8.0][..]));
    }

    #[test]
    fn example_sum_is_minimized_near_2_62() {
        let problem = example_problem();
        let f = sum_objective(&problem);
        let at = f.value(&[2.62]);
        let worse = grid(-10.0, 10.0, 100_000).filter(|&x| f.value(&[x]) < at).count();
        // only grid points within a hair of the true minimizer can beat 2.62
        assert!(worse < 100, "{worse} grid points below f(2.62)");
        for x in grid(-10.0, 10.0, 100_000) {
            assert!(f.value(&[x]) >= at - 0.05);
        }
    }

    #[test]
    fn example_fixture_matches_factored_forms() {
        let problem = example_problem();
        let f = [
            |x: f64| (x.powi(3) - 16.0 * x) * (x + 2.0),
            |x: f64| (0.5 * x.powi(3) + x * x) * (x - 4.0),
            |x: f64| (x + 2.0).powi(2) * (x - 4.0),
        ];
        for (spec, reference) in problem.objectives().iter().zip(f) {
            for x in grid(-10.0, 10.0, 101) {
                let v = spec.value(&[x]);
                assert!((v - reference(x)).abs() <= 1e-9 * (1.0 + v.abs()));
            }
        }
    }

    #[test]
    fn mismatched_domains_are_rejected() {
        let a = ObjectiveSpec::from_polynomial(x_squared(), Hyperbox::scalar(0.0, 2.0).unwrap()).unwrap();
        let b = ObjectiveSpec::from_polynomial(x_squared(), Hyperbox::scalar(0.0, 3.0).unwrap()).unwrap();
        assert!(AgentProblem::new(vec![a, b]).is_err());
        assert!(AgentProblem::new(vec![]).is_err());
    }

    #[test]
    fn polynomial_json_shape() {
        let p: Polynomial =
            serde_json::from_str(r#"{"dim":1,"terms":[{"c":2.0,"e":[3]},{"c":-1.0,"e":[0]}]}"#).unwrap();
        assert_eq!(p.value(&[2.0]), 15.0);
        assert!(serde_json::from_str::<Polynomial>(r#"{"dim":2,"terms":[{"c":1.0,"e":[1]}]}"#).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_poly() -> impl Strategy<Value = Polynomial> {
            proptest::collection::vec((-5.0..5.0f64, 0u32..5, 0u32..4), 1..6).prop_map(|ts| {
                Polynomial::new(
                    2,
                    ts.into_iter()
                        .map(|(c, a, b)| Monomial {
                            coef: c,
                            exps: vec![a, b],
                        })
                        .collect(),
                )
                .unwrap()
            })
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]

            #[test]
            fn auto_bounds_are_sound(p in arb_poly(), a in -3.0..0.0f64, b in 0.0..3.0f64, seed in any::<u64>()) {
                let domain = Hyperbox::new(vec![a, -1.0], vec![b, 2.0]).unwrap();
                let s = ObjectiveSpec::from_polynomial(p, domain).unwrap();
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                for _ in 0..10_000 {
                    let x = s.domain().sample_point(&mut rng);
                    let g = s.gradient(&x);
                    for j in 0..2 {
                        let slack = 1e-12 * (1.0 + g[j].abs());
                        prop_assert!(s.jac_lo()[j] - slack <= g[j] && g[j] <= s.jac_hi()[j] + slack);
                    }
                }
            }

            #[test]
            fn sum_bounds_are_additive(p in arb_poly(), q in arb_poly()) {
                let domain = Hyperbox::cube(2, -1.0, 1.0).unwrap();
                let a = ObjectiveSpec::from_polynomial(p, domain.clone()).unwrap();
                let b = ObjectiveSpec::from_polynomial(q, domain).unwrap();
                let f = sum_objective(&AgentProblem::new(vec![a.clone(), b.clone()]).unwrap());
                for j in 0..2 {
                    prop_assert_eq!(f.jac_lo()[j], a.jac_lo()[j] + b.jac_lo()[j]);
                    prop_assert_eq!(f.jac_hi()[j], a.jac_hi()[j] + b.jac_hi()[j]);
                }
            }
        }
    }
}
