//! Batch property checks with counterexample capture.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::Hyperbox;
use crate::mixed_monotone::{decompose, enumerate_vertices};
use crate::objective::{dot, AgentProblem, ObjectiveSpec, Polynomial};
use crate::privacy::{apply_mechanism, verify_privacy_inequality, Mechanism};

/// Relative tolerance of the remainder tightness check.
pub const TIGHTNESS_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyOutcome {
    pub name: String,
    pub passed: bool,
    pub checks: usize,
    pub violations: usize,
    /// First violation found, if any.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<serde_json::Value>,
}

impl PropertyOutcome {
    fn new(name: &str) -> Self {
        PropertyOutcome {
            name: name.to_string(),
            passed: true,
            checks: 0,
            violations: 0,
            counterexample: None,
        }
    }

    fn record(&mut self, ok: bool, witness: impl FnOnce() -> serde_json::Value) {
        self.checks += 1;
        if !ok {
            self.violations += 1;
            self.passed = false;
            if self.counterexample.is_none() {
                self.counterexample = Some(witness());
            }
        }
    }
}

/// Evaluation points for one box: its vertices, its midpoint, then uniform
/// samples up to `count`.
fn box_points(b: &Hyperbox, count: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut pts = b.vertices();
    pts.push(b.midpoint());
    while pts.len() < count {
        pts.push(b.sample_point(rng));
    }
    pts.truncate(count.max(1));
    pts
}

/// `f_i(x) + mt_i x` lies in the inclusion over `b` for every slope vertex,
/// every sampled subbox `b`, and every sampled `x` in `b`.
pub fn inclusion_soundness(
    problem: &AgentProblem,
    slopes: &[Vec<f64>],
    subboxes: usize,
    points_per_box: usize,
    seed: u64,
) -> Result<PropertyOutcome> {
    let mut out = PropertyOutcome::new("inclusion_soundness");
    if slopes.len() != problem.agent_count() {
        return Err(Error::usage("one slope per agent required"));
    }
    let boxes = problem.domain().sample_subintervals(subboxes, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    for (i, f) in problem.objectives().iter().enumerate() {
        let decs = enumerate_vertices(f)?
            .iter()
            .map(|v| decompose(f, v))
            .collect::<Result<Vec<_>>>()?;
        for b in &boxes {
            let pts = box_points(b, points_per_box, &mut rng);
            for d in &decs {
                let enclosure = d.inclusion(b, &slopes[i])?;
                for x in &pts {
                    let y = f.value(x) + dot(&slopes[i], x);
                    out.record(enclosure.contains(y), || {
                        serde_json::json!({
                            "agent": i,
                            "vertex": d.vertex().slope,
                            "box": b,
                            "x": x,
                            "value": y,
                            "interval": enclosure,
                        })
                    });
                }
            }
        }
    }
    Ok(out)
}

/// Remainder extrema at every vertex agree with a dense grid over the
/// domain to `TIGHTNESS_TOL * (1 + |grid value|)`. One- and two-dimensional
/// problems only; `grid_points` is the total budget.
pub fn remainder_tightness(problem: &AgentProblem, grid_points: usize) -> Result<PropertyOutcome> {
    let mut out = PropertyOutcome::new("remainder_tightness");
    let domain = problem.domain();
    let n = domain.dim();
    if n > 2 {
        return Err(Error::Capacity {
            what: "tightness grid dimension",
            got: n,
            cap: 2,
        });
    }
    let per_axis = if n == 1 {
        grid_points
    } else {
        (grid_points as f64).sqrt().ceil() as usize
    }
    .max(2);
    let grid: Vec<Vec<f64>> = (0..per_axis.pow(n as u32))
        .map(|mut idx| {
            (0..n)
                .map(|j| {
                    let k = idx % per_axis;
                    idx /= per_axis;
                    let (lo, hi) = (domain.lo()[j], domain.hi()[j]);
                    lo + (hi - lo) * k as f64 / (per_axis - 1) as f64
                })
                .collect()
        })
        .collect();
    for (i, f) in problem.objectives().iter().enumerate() {
        for v in enumerate_vertices(f)? {
            let d = decompose(f, &v)?;
            let ext = d.remainder_extrema(domain)?;
            let (mut gmin, mut gmax) = (f64::INFINITY, f64::NEG_INFINITY);
            let (mut at_min, mut at_max) = (&grid[0], &grid[0]);
            for x in &grid {
                let h = d.remainder(x);
                if h < gmin {
                    gmin = h;
                    at_min = x;
                }
                if h > gmax {
                    gmax = h;
                    at_max = x;
                }
            }
            let ok_min = (ext.h_min - gmin).abs() <= TIGHTNESS_TOL * (1.0 + gmin.abs());
            let ok_max = (ext.h_max - gmax).abs() <= TIGHTNESS_TOL * (1.0 + gmax.abs());
            out.record(ok_min, || {
                serde_json::json!({"agent": i, "vertex": v.slope, "h_min": ext.h_min, "grid_min": gmin, "x": at_min})
            });
            out.record(ok_max, || {
                serde_json::json!({"agent": i, "vertex": v.slope, "h_max": ext.h_max, "grid_max": gmax, "x": at_max})
            });
        }
    }
    Ok(out)
}

/// One generated neighbour: agent `agent` gets `+ constant + slope x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffinePerturbation {
    pub agent: usize,
    pub constant: f64,
    pub slope: Vec<f64>,
}

impl AffinePerturbation {
    pub fn apply(&self, problem: &AgentProblem) -> Result<AgentProblem> {
        let f = &problem.objectives()[self.agent];
        let extra = Polynomial::affine(self.constant, &self.slope);
        let p = f.polynomial().ok_or_else(|| {
            Error::usage(format!(
                "agent {} is not polynomial and cannot be perturbed",
                self.agent
            ))
        })?;
        let spec = ObjectiveSpec::from_polynomial(p.add(&extra), f.domain().clone())?;
        problem.with_agent(self.agent, spec)
    }

    /// `sup |constant + slope x|` over the box.
    pub fn sup_norm(&self, b: &Hyperbox) -> f64 {
        let (mut lo, mut hi) = (self.constant, self.constant);
        for (j, a) in self.slope.iter().enumerate() {
            let (p, q) = (a * b.lo()[j], a * b.hi()[j]);
            lo += p.min(q);
            hi += p.max(q);
        }
        lo.abs().max(hi.abs())
    }
}

/// Random affine neighbours inside each agent's vicinity. Every fourth pair
/// is a pure constant shift by exactly `+-delta_i`; the rest are random
/// affine functions rescaled to a random fraction of `delta_i`.
pub fn adjacent_perturbations(mech: &Mechanism, pairs: usize, seed: u64) -> Vec<AffinePerturbation> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let agents = mech.agent_count();
    let b = mech.domain();
    (0..pairs)
        .map(|k| {
            let agent = k % agents;
            let delta = mech.vicinity_radii()[agent];
            if k % 4 == 3 {
                let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
                return AffinePerturbation {
                    agent,
                    constant: sign * delta,
                    slope: vec![0.0; b.dim()],
                };
            }
            let mut p = AffinePerturbation {
                agent,
                constant: rng.gen_range(-1.0..1.0),
                slope: (0..b.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            };
            let target = delta * rng.gen_range(0.0..=1.0);
            let s = p.sup_norm(b);
            if s > 0.0 {
                let scale = target / s;
                p.constant *= scale;
                p.slope.iter_mut().for_each(|a| *a *= scale);
            }
            p
        })
        .collect()
}

/// The privacy inequality over generated neighbours, with the witness set
/// being the mechanism output inflated by random nonnegative margins up to
/// the width of each published interval.
pub fn privacy_inequality(
    problem: &AgentProblem,
    mech: &Mechanism,
    pairs: usize,
    seed: u64,
) -> Result<PropertyOutcome> {
    let mut out = PropertyOutcome::new("privacy_inequality");
    let published = apply_mechanism(problem, mech, mech.domain())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    for p in adjacent_perturbations(mech, pairs, seed) {
        let other = p.apply(problem)?;
        let below: Vec<f64> = published
            .entries()
            .iter()
            .map(|e| rng.gen_range(0.0..=1.0) * e.width())
            .collect();
        let above: Vec<f64> = published
            .entries()
            .iter()
            .map(|e| rng.gen_range(0.0..=1.0) * e.width())
            .collect();
        let witness = published.inflate(&below, &above)?;
        let check = verify_privacy_inequality(problem, &other, mech, &witness)?;
        out.record(
            check.holds,
            || serde_json::json!({"perturbation": p, "witness": witness, "check": check}),
        );
    }
    Ok(out)
}
