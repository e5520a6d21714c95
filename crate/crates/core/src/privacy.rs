//! The guaranteed-privacy mechanism.
//!
//! Each agent publishes the mixed-monotone enclosure of its perturbed
//! objective `g_i = f_i + mt_i x` over the domain. For a vicinity radius
//! `delta_i` the privacy gap is
//!
//! ```text
//! eps_i = min over slope vertices m of ln((C + 2 delta_i) / C) / delta_i,
//! C     = width(h_i) + |m + mt_i| . (hi - lo)
//! ```
//!
//! which is minimized by the vertex with the widest published interval.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::{Hyperbox, IntervalVector};
use crate::mixed_monotone::{decompose, enumerate_vertices, JssDecomposition, SlopeVertex};
use crate::objective::{AgentProblem, ObjectiveSpec, SmoothFunction};

/// Relative slack for floating-point comparisons against the vicinity
/// radius and between the two sides of the privacy inequality, which holds
/// with equality in some cases.
pub const INEQUALITY_ROUNDING: f64 = 1e-12;

/// Perturbation slopes and vicinity radii, one per agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mechanism {
    slopes: Vec<Vec<f64>>,
    vicinity_radii: Vec<f64>,
    domain: Hyperbox,
}

impl Mechanism {
    pub fn new(slopes: Vec<Vec<f64>>, vicinity_radii: Vec<f64>, domain: Hyperbox) -> Result<Self> {
        if slopes.len() != vicinity_radii.len() {
            return Err(Error::usage(format!(
                "{} slopes but {} vicinity radii",
                slopes.len(),
                vicinity_radii.len()
            )));
        }
        if slopes.is_empty() {
            return Err(Error::usage("mechanism needs at least one agent"));
        }
        if let Some(s) = slopes.iter().find(|s| s.len() != domain.dim()) {
            return Err(Error::usage(format!(
                "slope {s:?} does not match domain dimension {}",
                domain.dim()
            )));
        }
        if let Some(d) = vicinity_radii.iter().find(|d| !(**d > 0.0) || !d.is_finite()) {
            return Err(Error::usage(format!("vicinity radius must be positive, got {d}")));
        }
        Ok(Mechanism {
            slopes,
            vicinity_radii,
            domain,
        })
    }

    pub fn slopes(&self) -> &[Vec<f64>] {
        &self.slopes
    }

    pub fn vicinity_radii(&self) -> &[f64] {
        &self.vicinity_radii
    }

    pub fn domain(&self) -> &Hyperbox {
        &self.domain
    }

    pub fn agent_count(&self) -> usize {
        self.slopes.len()
    }

    fn check_problem(&self, problem: &AgentProblem) -> Result<()> {
        if problem.agent_count() != self.agent_count() {
            return Err(Error::usage(format!(
                "mechanism has {} agents, problem has {}",
                self.agent_count(),
                problem.agent_count()
            )));
        }
        if problem.domain() != &self.domain {
            return Err(Error::usage("mechanism and problem have different domains"));
        }
        Ok(())
    }
}

/// `ln((C + 2 delta) / C) / delta`.
pub fn gap_for_width(width: f64, delta: f64) -> f64 {
    (2.0 * delta / width).ln_1p() / delta
}

/// Privacy gap of one agent together with the vertex attaining it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapCertificate {
    pub eps: f64,
    pub vertex: SlopeVertex,
    /// Diameter of the published interval over the domain.
    pub range_width: f64,
}

/// Privacy gap at a single vertex.
pub fn epsilon_at_vertex(spec: &ObjectiveSpec, vertex: &SlopeVertex, slope: &[f64], delta: f64) -> Result<f64> {
    let dec = decompose(spec, vertex)?;
    let width = dec.range_width(spec.domain(), slope)?;
    if width <= 0.0 {
        return Err(Error::precondition(
            "published range has zero width, no finite privacy gap exists",
        ));
    }
    Ok(gap_for_width(width, delta))
}

/// Minimum privacy gap over all slope vertices (first vertex wins ties).
pub fn epsilon_gap(spec: &ObjectiveSpec, slope: &[f64], delta: f64) -> Result<GapCertificate> {
    if spec.domain().is_singleton() {
        return Err(Error::precondition("the domain is a singleton"));
    }
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::precondition(format!(
            "vicinity radius must be positive, got {delta}"
        )));
    }
    let mut best: Option<GapCertificate> = None;
    for v in enumerate_vertices(spec)? {
        let dec = decompose(spec, &v)?;
        let width = dec.range_width(spec.domain(), slope)?;
        if width <= 0.0 {
            return Err(Error::precondition(format!(
                "published range at vertex {:?} has zero width, no finite privacy gap exists",
                v.slope
            )));
        }
        let eps = gap_for_width(width, delta);
        if best.as_ref().is_none_or(|b| eps < b.eps) {
            best = Some(GapCertificate {
                eps,
                vertex: v,
                range_width: width,
            });
        }
    }
    Ok(best.expect("at least one vertex"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrivacyReport {
    pub per_agent_eps: Vec<f64>,
    pub overall_eps: f64,
    pub minimizing_vertex: Vec<SlopeVertex>,
    /// Diameter of each agent's published interval over the domain.
    pub diam_true: Vec<f64>,
    pub vicinity_radii: Vec<f64>,
    pub slopes: Vec<Vec<f64>>,
}

pub fn privacy_report(problem: &AgentProblem, mech: &Mechanism) -> Result<PrivacyReport> {
    mech.check_problem(problem)?;
    let certs = problem
        .objectives()
        .par_iter()
        .enumerate()
        .map(|(i, f)| epsilon_gap(f, &mech.slopes[i], mech.vicinity_radii[i]))
        .collect::<Result<Vec<_>>>()?;
    let per_agent_eps: Vec<f64> = certs.iter().map(|c| c.eps).collect();
    Ok(PrivacyReport {
        overall_eps: per_agent_eps.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        per_agent_eps,
        diam_true: certs.iter().map(|c| c.range_width).collect(),
        minimizing_vertex: certs.into_iter().map(|c| c.vertex).collect(),
        vicinity_radii: mech.vicinity_radii.clone(),
        slopes: mech.slopes.clone(),
    })
}

fn published_decompositions(problem: &AgentProblem, mech: &Mechanism) -> Result<Vec<JssDecomposition>> {
    mech.check_problem(problem)?;
    problem
        .objectives()
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let cert = epsilon_gap(f, &mech.slopes[i], mech.vicinity_radii[i])?;
            decompose(f, &cert.vertex)
        })
        .collect()
}

/// The mechanism output: per agent, the enclosure of `f_i + mt_i x` over
/// `b`, built from the gap-minimizing vertex.
pub fn apply_mechanism(problem: &AgentProblem, mech: &Mechanism, b: &Hyperbox) -> Result<IntervalVector> {
    let decs = published_decompositions(problem, mech)?;
    let entries = decs
        .iter()
        .enumerate()
        .map(|(i, d)| d.inclusion(b, &mech.slopes[i]))
        .collect::<Result<Vec<_>>>()?;
    Ok(IntervalVector::new(entries))
}

/// Which agent differs between two problems and by how much.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VicinityCertificate {
    /// `None` when the problems are identical.
    pub agent_index: Option<usize>,
    /// Upper bound on `sup_x |f'_i(x) - f_i(x)|` over the domain.
    pub sup_distance: f64,
    /// Whether `sup_distance` is the exact supremum (affine differences).
    pub exact: bool,
    pub within: bool,
}

/// Exact `sup |c + a x|` over a box: attained at the vertex extremizing `a x`.
fn affine_sup(constant: f64, slope: &[f64], b: &Hyperbox) -> f64 {
    let (mut lo, mut hi) = (constant, constant);
    for (j, &a) in slope.iter().enumerate() {
        let (p, q) = (a * b.lo()[j], a * b.hi()[j]);
        lo += p.min(q);
        hi += p.max(q);
    }
    lo.abs().max(hi.abs())
}

/// Sup-norm of `diff` over its domain: exact when affine, otherwise the
/// tightest mixed-monotone enclosure over all vertices.
fn sup_norm(diff: &ObjectiveSpec) -> Result<(f64, bool)> {
    let domain = diff.domain();
    if let Some(p) = diff.polynomial() {
        if p.is_affine() {
            let mid = domain.midpoint();
            let slope = p.gradient(&mid);
            let constant = p.value(&vec![0.0; domain.dim()]);
            return Ok((affine_sup(constant, &slope, domain), true));
        }
    } else if diff.jac_lo() == diff.jac_hi() {
        let mid = domain.midpoint();
        let slope = diff.jac_lo().to_vec();
        let constant = diff.value(&mid) - crate::objective::dot(&slope, &mid);
        return Ok((affine_sup(constant, &slope, domain), true));
    }
    let zero = vec![0.0; domain.dim()];
    let mut best = f64::INFINITY;
    for v in enumerate_vertices(diff)? {
        let i = decompose(diff, &v)?.inclusion(domain, &zero)?;
        best = best.min(i.magnitude());
    }
    Ok((best, false))
}

pub fn check_adjacency(problem: &AgentProblem, other: &AgentProblem, mech: &Mechanism) -> Result<VicinityCertificate> {
    mech.check_problem(problem)?;
    mech.check_problem(other)?;
    let differing: Vec<usize> = problem
        .objectives()
        .iter()
        .zip(other.objectives())
        .enumerate()
        .filter(|(_, (a, b))| !a.same_as(b))
        .map(|(i, _)| i)
        .collect();
    match differing.as_slice() {
        [] => Ok(VicinityCertificate {
            agent_index: None,
            sup_distance: 0.0,
            exact: true,
            within: true,
        }),
        &[i] => {
            let diff = other.objectives()[i].difference(&problem.objectives()[i])?;
            let (sup_distance, exact) = sup_norm(&diff)?;
            Ok(VicinityCertificate {
                agent_index: Some(i),
                sup_distance,
                exact,
                // coefficients of a polynomial difference carry rounding error
                within: sup_distance <= mech.vicinity_radii[i] * (1.0 + INEQUALITY_ROUNDING),
            })
        }
        _ => Err(Error::Adjacency(differing)),
    }
}

/// Both sides of `diam(M(F') & I) <= exp(eps ||f - f'||) diam(M(F))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrivacyCheck {
    pub holds: bool,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs - lhs`.
    pub slack: f64,
    pub eps: f64,
    pub distance: f64,
    pub agent_index: Option<usize>,
}

pub fn verify_privacy_inequality(
    problem: &AgentProblem,
    other: &AgentProblem,
    mech: &Mechanism,
    witness: &IntervalVector,
) -> Result<PrivacyCheck> {
    let cert = check_adjacency(problem, other, mech)?;
    if !cert.within {
        return Err(Error::precondition(format!(
            "agent {:?} moved by {} which exceeds its vicinity radius",
            cert.agent_index, cert.sup_distance
        )));
    }
    let domain = mech.domain();
    let published = apply_mechanism(problem, mech, domain)?;
    if !published.is_subset_of(witness)? {
        return Err(Error::precondition(
            "witness interval does not contain the mechanism output",
        ));
    }
    let eps = privacy_report(problem, mech)?.overall_eps;
    let perturbed = apply_mechanism(other, mech, domain)?;
    let lhs = perturbed.intersect(witness)?.diameter();
    let rhs = (eps * cert.sup_distance).exp() * published.diameter();
    Ok(PrivacyCheck {
        holds: lhs <= rhs * (1.0 + INEQUALITY_ROUNDING),
        lhs,
        rhs,
        slack: rhs - lhs,
        eps,
        distance: cert.sup_distance,
        agent_index: cert.agent_index,
    })
}
