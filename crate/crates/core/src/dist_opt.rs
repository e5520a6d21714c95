//! Synchronous multi-agent simulator and three distributed solvers:
//! projected decentralized gradient descent, gradient tracking, and a
//! two-point zeroth-order variant of decentralized gradient descent.
//!
//! Every agent runs on `g_i(x) = f_i(x) + mt_i x` when a mechanism is
//! supplied and on `f_i` otherwise. Steps follow `alpha_k = a / (k + b)`
//! and every iterate is projected back onto the domain.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::Hyperbox;
use crate::objective::{dot, AgentProblem, ObjectiveSpec};
use crate::privacy::Mechanism;
use crate::sampling::unit_direction;

/// Undirected graph with Metropolis mixing weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkGraph {
    node_count: usize,
    edges: Vec<(usize, usize)>,
    /// Row-major `N x N`.
    mixing: Vec<Vec<f64>>,
}

/// `W_ij = 1 / (1 + max(deg_i, deg_j))` on edges, diagonal takes the rest.
pub fn metropolis_weights(edges: &[(usize, usize)], node_count: usize) -> Result<NetworkGraph> {
    if node_count == 0 {
        return Err(Error::usage("graph needs at least one node"));
    }
    let mut adj = vec![vec![false; node_count]; node_count];
    for &(a, b) in edges {
        if a >= node_count || b >= node_count {
            return Err(Error::usage(format!(
                "edge ({a}, {b}) names a node outside 0..{node_count}"
            )));
        }
        if a == b {
            return Err(Error::usage(format!("self-loop at node {a}")));
        }
        adj[a][b] = true;
        adj[b][a] = true;
    }
    let mut seen = vec![false; node_count];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(i) = stack.pop() {
        for j in 0..node_count {
            if adj[i][j] && !seen[j] {
                seen[j] = true;
                stack.push(j);
            }
        }
    }
    if let Some(lost) = seen.iter().position(|s| !s) {
        return Err(Error::usage(format!(
            "graph is disconnected, node {lost} is unreachable from node 0"
        )));
    }
    let deg: Vec<usize> = adj.iter().map(|r| r.iter().filter(|b| **b).count()).collect();
    let mut mixing = vec![vec![0.0; node_count]; node_count];
    for i in 0..node_count {
        for j in 0..node_count {
            if adj[i][j] {
                mixing[i][j] = 1.0 / (1 + deg[i].max(deg[j])) as f64;
            }
        }
        let off: f64 = mixing[i].iter().sum();
        mixing[i][i] = 1.0 - off;
    }
    let mut canonical: Vec<(usize, usize)> = Vec::new();
    for i in 0..node_count {
        for j in i + 1..node_count {
            if adj[i][j] {
                canonical.push((i, j));
            }
        }
    }
    Ok(NetworkGraph {
        node_count,
        edges: canonical,
        mixing,
    })
}

impl NetworkGraph {
    pub fn complete(node_count: usize) -> Result<Self> {
        let edges: Vec<(usize, usize)> = (0..node_count)
            .flat_map(|i| (i + 1..node_count).map(move |j| (i, j)))
            .collect();
        metropolis_weights(&edges, node_count)
    }

    pub fn path(node_count: usize) -> Result<Self> {
        let edges: Vec<(usize, usize)> = (1..node_count).map(|i| (i - 1, i)).collect();
        metropolis_weights(&edges, node_count)
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn mixing(&self) -> &[Vec<f64>] {
        &self.mixing
    }

    /// `out_i = sum_j W_ij x_j`.
    pub fn mix(&self, x: &[Vec<f64>]) -> Vec<Vec<f64>> {
        self.mixing
            .iter()
            .map(|row| {
                let mut acc = vec![0.0; x[0].len()];
                for (w, xj) in row.iter().zip(x) {
                    if *w != 0.0 {
                        for (a, v) in acc.iter_mut().zip(xj) {
                            *a += w * v;
                        }
                    }
                }
                acc
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlgorithmKind {
    Dgd,
    GradientTracking,
    ZerothOrder,
}

impl AlgorithmKind {
    pub const ALL: [AlgorithmKind; 3] = [
        AlgorithmKind::Dgd,
        AlgorithmKind::GradientTracking,
        AlgorithmKind::ZerothOrder,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            AlgorithmKind::Dgd => "dgd",
            AlgorithmKind::GradientTracking => "gradient_tracking",
            AlgorithmKind::ZerothOrder => "zeroth_order",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "dgd" => Ok(AlgorithmKind::Dgd),
            "gradient_tracking" | "tracking" => Ok(AlgorithmKind::GradientTracking),
            "zeroth_order" | "zo" => Ok(AlgorithmKind::ZerothOrder),
            other => Err(Error::usage(format!("unknown algorithm {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmConfig {
    pub kind: AlgorithmKind,
    /// `a` in `a / (k + b)`; `None` means `0.01 * diam(X0)`.
    #[serde(default)]
    pub step_a: Option<f64>,
    #[serde(default = "default_step_b")]
    pub step_b: f64,
    #[serde(default = "default_max_rounds")]
    pub max_rounds: usize,
    #[serde(default = "default_consensus_tol")]
    pub consensus_tol: f64,
    #[serde(default = "default_stationarity_tol")]
    pub stationarity_tol: f64,
    #[serde(default)]
    pub seed: u64,
    /// Keep every round's iterates in the trace.
    #[serde(default)]
    pub record_iterates: bool,
}

fn default_step_b() -> f64 {
    10.0
}

fn default_max_rounds() -> usize {
    20_000
}

fn default_consensus_tol() -> f64 {
    1e-4
}

fn default_stationarity_tol() -> f64 {
    1e-3
}

impl AlgorithmConfig {
    pub fn new(kind: AlgorithmKind) -> Self {
        AlgorithmConfig {
            kind,
            step_a: None,
            step_b: default_step_b(),
            max_rounds: default_max_rounds(),
            consensus_tol: default_consensus_tol(),
            stationarity_tol: default_stationarity_tol(),
            seed: 0,
            record_iterates: false,
        }
    }

    fn validate(&self, domain: &Hyperbox) -> Result<f64> {
        let a = self.step_a.unwrap_or(0.01 * domain.diameter());
        if !(a > 0.0) || !a.is_finite() {
            return Err(Error::usage(format!("step numerator must be positive, got {a}")));
        }
        if !(self.step_b >= 1.0) {
            return Err(Error::usage(format!(
                "step offset must be at least 1, got {}",
                self.step_b
            )));
        }
        if self.max_rounds == 0 {
            return Err(Error::usage("max_rounds must be at least 1"));
        }
        Ok(a)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Converged,
    MaxRounds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub kind: AlgorithmKind,
    /// Round-major, then agent; round 0 is the starting point. Empty unless
    /// iterates were recorded.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub iterates: Vec<Vec<Vec<f64>>>,
    pub final_agents: Vec<Vec<f64>>,
    /// Agent average at termination.
    pub final_point: Vec<f64>,
    pub rounds: usize,
    pub stop_reason: StopReason,
    pub disagreement: f64,
    pub stationarity: f64,
}

impl Trace {
    /// `round,agent,x1..xn` per recorded iterate.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let n = self.final_point.len();
        let cols: Vec<String> = (1..=n).map(|j| format!("x{j}")).collect();
        writeln!(w, "round,agent,{}", cols.join(","))?;
        for (k, round) in self.iterates.iter().enumerate() {
            for (i, x) in round.iter().enumerate() {
                let xs: Vec<String> = x.iter().map(|v| v.to_string()).collect();
                writeln!(w, "{k},{i},{}", xs.join(","))?;
            }
        }
        Ok(())
    }
}

/// Local objective seen by one agent.
struct Local<'a> {
    f: &'a ObjectiveSpec,
    slope: Vec<f64>,
}

impl Local<'_> {
    fn value(&self, x: &[f64]) -> f64 {
        self.f.value(x) + dot(&self.slope, x)
    }

    fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        self.f.gradient_into(x, out);
        for (o, m) in out.iter_mut().zip(&self.slope) {
            *o += m;
        }
    }
}

fn mean(x: &[Vec<f64>]) -> Vec<f64> {
    let mut m = vec![0.0; x[0].len()];
    for xi in x {
        for (a, v) in m.iter_mut().zip(xi) {
            *a += v;
        }
    }
    let n = x.len() as f64;
    m.iter_mut().for_each(|a| *a /= n);
    m
}

/// `max_i ||x_i - mean||_inf`.
pub fn disagreement(x: &[Vec<f64>]) -> f64 {
    let m = mean(x);
    x.iter()
        .flat_map(|xi| xi.iter().zip(&m).map(|(a, b)| (a - b).abs()))
        .fold(0.0, f64::max)
}

/// `||x - Proj(x - grad)||_inf` for the summed local objectives.
fn stationarity(locals: &[Local], domain: &Hyperbox, x: &[f64]) -> f64 {
    let mut total = vec![0.0; x.len()];
    let mut g = vec![0.0; x.len()];
    for l in locals {
        l.gradient_into(x, &mut g);
        for (t, v) in total.iter_mut().zip(&g) {
            *t += v;
        }
    }
    let mut step: Vec<f64> = x.iter().zip(&total).map(|(a, b)| a - b).collect();
    domain.project(&mut step);
    x.iter().zip(&step).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

/// Two-point estimate `(g(x + mu u) - g(x - mu u)) / (2 mu) u`.
fn two_point(l: &Local, x: &[f64], u: &[f64], mu: f64) -> Vec<f64> {
    let plus: Vec<f64> = x.iter().zip(u).map(|(a, b)| a + mu * b).collect();
    let minus: Vec<f64> = x.iter().zip(u).map(|(a, b)| a - mu * b).collect();
    let s = (l.value(&plus) - l.value(&minus)) / (2.0 * mu);
    u.iter().map(|v| s * v).collect()
}

/// Smoothing radius of the zeroth-order estimator.
pub fn smoothing_radius(domain: &Hyperbox) -> f64 {
    1e-4 * domain.diameter()
}

/// Public for the estimator sanity check: the two-point estimate of `f`'s
/// gradient at `x` along `u`.
pub fn two_point_estimate(f: &ObjectiveSpec, x: &[f64], u: &[f64], mu: f64) -> Vec<f64> {
    let l = Local {
        f,
        slope: vec![0.0; x.len()],
    };
    two_point(&l, x, u, mu)
}

fn project_checked(domain: &Hyperbox, x: &mut [f64], round: usize, agent: usize) -> Result<()> {
    let excess = domain.excess(x);
    if !excess.is_finite() || excess > 10.0 * domain.diameter() {
        return Err(Error::StepSize { round, agent, excess });
    }
    domain.project(x);
    Ok(())
}

pub fn run(
    problem: &AgentProblem,
    mech: Option<&Mechanism>,
    graph: &NetworkGraph,
    cfg: &AlgorithmConfig,
    x0: &[Vec<f64>],
) -> Result<Trace> {
    let domain = problem.domain();
    let a = cfg.validate(domain)?;
    let agents = problem.agent_count();
    let n = problem.dim();
    if graph.node_count() != agents {
        return Err(Error::usage(format!(
            "graph has {} nodes for {agents} agents",
            graph.node_count()
        )));
    }
    if x0.len() != agents {
        return Err(Error::usage(format!(
            "{} starting points for {agents} agents",
            x0.len()
        )));
    }
    if let Some(bad) = x0.iter().position(|x| x.len() != n || !domain.contains_point(x)) {
        return Err(Error::usage(format!(
            "starting point of agent {bad} is outside the domain"
        )));
    }
    if let Some(m) = mech {
        if m.agent_count() != agents || m.domain() != domain {
            return Err(Error::usage("mechanism does not match the problem"));
        }
    }
    let locals: Vec<Local> = problem
        .objectives()
        .iter()
        .enumerate()
        .map(|(i, f)| Local {
            f,
            slope: mech.map_or_else(|| vec![0.0; n], |m| m.slopes()[i].clone()),
        })
        .collect();

    let mu = smoothing_radius(domain);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut x: Vec<Vec<f64>> = x0.to_vec();
    let mut grad = vec![vec![0.0; n]; agents];
    for (l, (xi, gi)) in locals.iter().zip(x.iter().zip(grad.iter_mut())) {
        l.gradient_into(xi, gi);
    }
    // tracker starts at the local gradients
    let mut y = grad.clone();
    let mut iterates = Vec::new();
    if cfg.record_iterates {
        iterates.push(x.clone());
    }

    let mut stop_reason = StopReason::MaxRounds;
    let mut rounds = 0;
    for k in 0..cfg.max_rounds {
        let alpha = a / (k as f64 + cfg.step_b);
        let mixed = graph.mix(&x);
        let mut next = mixed;
        match cfg.kind {
            AlgorithmKind::Dgd => {
                for (i, xi) in next.iter_mut().enumerate() {
                    locals[i].gradient_into(&x[i], &mut grad[i]);
                    for (v, g) in xi.iter_mut().zip(&grad[i]) {
                        *v -= alpha * g;
                    }
                }
            }
            AlgorithmKind::GradientTracking => {
                for (i, xi) in next.iter_mut().enumerate() {
                    for (v, g) in xi.iter_mut().zip(&y[i]) {
                        *v -= alpha * g;
                    }
                }
            }
            AlgorithmKind::ZerothOrder => {
                for (i, xi) in next.iter_mut().enumerate() {
                    let u = unit_direction(&mut rng, n);
                    let g = two_point(&locals[i], &x[i], &u, mu);
                    for (v, gj) in xi.iter_mut().zip(&g) {
                        *v -= alpha * gj;
                    }
                }
            }
        }
        for (i, xi) in next.iter_mut().enumerate() {
            project_checked(domain, xi, k + 1, i)?;
        }
        if cfg.kind == AlgorithmKind::GradientTracking {
            let mut new_grad = vec![vec![0.0; n]; agents];
            for (i, g) in new_grad.iter_mut().enumerate() {
                locals[i].gradient_into(&next[i], g);
            }
            let mixed_y = graph.mix(&y);
            for i in 0..agents {
                for j in 0..n {
                    y[i][j] = mixed_y[i][j] + new_grad[i][j] - grad[i][j];
                }
            }
            grad = new_grad;
        }
        x = next;
        rounds = k + 1;
        if cfg.record_iterates {
            iterates.push(x.clone());
        }
        if disagreement(&x) <= cfg.consensus_tol && stationarity(&locals, domain, &mean(&x)) <= cfg.stationarity_tol {
            stop_reason = StopReason::Converged;
            break;
        }
    }
    let final_point = mean(&x);
    Ok(Trace {
        kind: cfg.kind,
        iterates,
        disagreement: disagreement(&x),
        stationarity: stationarity(&locals, domain, &final_point),
        final_agents: x,
        final_point,
        rounds,
        stop_reason,
    })
}

/// Stratified random starting points: start `s` draws every agent's
/// coordinate from the `s`-th of `starts` equal slices of its axis.
pub fn start_points(domain: &Hyperbox, agents: usize, starts: usize, seed: u64) -> Vec<Vec<Vec<f64>>> {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..starts)
        .map(|s| {
            (0..agents)
                .map(|_| {
                    (0..domain.dim())
                        .map(|j| {
                            let (lo, hi) = (domain.lo()[j], domain.hi()[j]);
                            let t = (s as f64 + rng.gen::<f64>()) / starts as f64;
                            (lo + t * (hi - lo)).clamp(lo, hi)
                        })
                        .collect()
                })
                .collect()
        })
        .collect()
}

/// One run per start, in parallel; start `s` uses seed `cfg.seed + s`.
pub fn run_multi_start(
    problem: &AgentProblem,
    mech: Option<&Mechanism>,
    graph: &NetworkGraph,
    cfg: &AlgorithmConfig,
    starts: &[Vec<Vec<f64>>],
) -> Result<Vec<Trace>> {
    starts
        .par_iter()
        .enumerate()
        .map(|(s, x0)| {
            let mut c = cfg.clone();
            c.seed = cfg.seed.wrapping_add(s as u64);
            run(problem, mech, graph, &c, x0)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::{example_problem, Polynomial};

    fn quadratic_consensus(centers: &[f64]) -> AgentProblem {
        let domain = Hyperbox::scalar(-10.0, 10.0).unwrap();
        let specs = centers
            .iter()
            .map(|c| {
                ObjectiveSpec::from_polynomial(Polynomial::univariate(&[c * c, -2.0 * c, 1.0]), domain.clone()).unwrap()
            })
            .collect();
        AgentProblem::new(specs).unwrap()
    }

    #[test]
    fn complete_graph_weights() {
        let g = NetworkGraph::complete(3).unwrap();
        for row in g.mixing() {
            for w in row {
                assert!((w - 1.0 / 3.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn path_graph_weights() {
        let g = NetworkGraph::path(3).unwrap();
        let w = g.mixing();
        let third = 1.0 / 3.0;
        assert_eq!(w[0][1], third);
        assert_eq!(w[1][2], third);
        assert!((w[0][0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((w[1][1] - third).abs() < 1e-15);
        assert!((w[2][2] - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(w[0][2], 0.0);
    }

    #[test]
    fn single_node_and_disconnected() {
        assert_eq!(NetworkGraph::complete(1).unwrap().mixing(), &[vec![1.0]]);
        assert!(matches!(metropolis_weights(&[(0, 1)], 3), Err(Error::Usage(_))));
        assert!(metropolis_weights(&[(0, 0)], 1).is_err());
        assert!(metropolis_weights(&[(0, 5)], 3).is_err());
    }

    #[test]
    fn mixing_is_doubly_stochastic() {
        let edges = [(0, 1), (1, 2), (2, 3), (3, 4), (1, 4), (0, 5)];
        let g = metropolis_weights(&edges, 6).unwrap();
        for i in 0..6 {
            let row: f64 = g.mixing()[i].iter().sum();
            let col: f64 = g.mixing().iter().map(|r| r[i]).sum();
            assert!((row - 1.0).abs() < 1e-10 && (col - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn averaging_contracts_disagreement() {
        let g = NetworkGraph::path(4).unwrap();
        let mut x = vec![vec![-3.0], vec![1.0], vec![4.0], vec![9.0]];
        let mut last = disagreement(&x);
        for _ in 0..50 {
            x = g.mix(&x);
            let d = disagreement(&x);
            assert!(d <= last + 1e-15);
            last = d;
        }
    }

    #[test]
    fn quadratic_consensus_reaches_the_mean() {
        let centers = [-4.0, 1.0, 6.0];
        let problem = quadratic_consensus(&centers);
        let g = NetworkGraph::complete(3).unwrap();
        let x0 = vec![vec![-9.0], vec![0.0], vec![9.0]];
        for kind in AlgorithmKind::ALL {
            let mut cfg = AlgorithmConfig::new(kind);
            cfg.max_rounds = 10_000;
            // unit curvature needs a larger numerator than the default,
            // which is sized for the steep quartic example
            cfg.step_a = Some(1.0);
            let t = run(&problem, None, &g, &cfg, &x0).unwrap();
            assert!((t.final_point[0] - 1.0).abs() < 1e-3, "{kind:?}: {:?}", t.final_point);
        }
    }

    #[test]
    fn example_without_mechanism_finds_global_minimizer() {
        let problem = example_problem();
        let g = NetworkGraph::complete(3).unwrap();
        let starts = start_points(problem.domain(), 3, 5, 1);
        for kind in AlgorithmKind::ALL {
            let traces = run_multi_start(&problem, None, &g, &AlgorithmConfig::new(kind), &starts).unwrap();
            assert!(
                traces.iter().any(|t| (t.final_point[0] - 2.62).abs() < 0.05),
                "{kind:?}: {:?}",
                traces.iter().map(|t| t.final_point[0]).collect::<Vec<_>>()
            );
        }
    }

    #[test]
    fn single_agent_is_projected_descent() {
        let problem = quadratic_consensus(&[12.0]);
        let g = NetworkGraph::complete(1).unwrap();
        let t = run(
            &problem,
            None,
            &g,
            &AlgorithmConfig::new(AlgorithmKind::Dgd),
            &[vec![0.0]],
        )
        .unwrap();
        // minimizer outside the box, projection pins the iterate to the edge
        assert!((t.final_point[0] - 10.0).abs() <= 1e-3);
        assert_eq!(t.stop_reason, StopReason::Converged);
    }

    #[test]
    fn iterates_stay_feasible_and_runs_repeat() {
        let problem = example_problem();
        let g = NetworkGraph::path(3).unwrap();
        let mech = Mechanism::new(
            vec![vec![0.52], vec![0.73], vec![0.38]],
            vec![1.0; 3],
            problem.domain().clone(),
        )
        .unwrap();
        let x0 = vec![vec![-10.0], vec![3.0], vec![10.0]];
        for kind in AlgorithmKind::ALL {
            let mut cfg = AlgorithmConfig::new(kind);
            cfg.max_rounds = 3_000;
            cfg.record_iterates = true;
            cfg.seed = 9;
            let a = run(&problem, Some(&mech), &g, &cfg, &x0).unwrap();
            let b = run(&problem, Some(&mech), &g, &cfg, &x0).unwrap();
            assert_eq!(a, b);
            assert_eq!(a.iterates.len(), a.rounds + 1);
            for round in &a.iterates {
                for x in round {
                    assert!(problem.domain().contains_point(x));
                }
            }
        }
    }

    #[test]
    fn huge_steps_trip_the_divergence_guard() {
        let problem = example_problem();
        let g = NetworkGraph::complete(3).unwrap();
        let mut cfg = AlgorithmConfig::new(AlgorithmKind::Dgd);
        cfg.step_a = Some(1e3);
        let err = run(&problem, None, &g, &cfg, &[vec![-10.0], vec![0.0], vec![10.0]]).unwrap_err();
        assert!(matches!(err, Error::StepSize { round: 1, .. }));
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn bad_configs_are_rejected() {
        let problem = example_problem();
        let g = NetworkGraph::complete(3).unwrap();
        let x0 = vec![vec![0.0]; 3];
        let mut cfg = AlgorithmConfig::new(AlgorithmKind::Dgd);
        cfg.step_b = 0.5;
        assert!(matches!(run(&problem, None, &g, &cfg, &x0), Err(Error::Usage(_))));
        let cfg = AlgorithmConfig::new(AlgorithmKind::Dgd);
        assert!(run(&problem, None, &g, &cfg, &[vec![11.0], vec![0.0], vec![0.0]]).is_err());
        assert!(run(&problem, None, &NetworkGraph::complete(2).unwrap(), &cfg, &x0).is_err());
    }

    #[test]
    fn two_point_error_scales_with_radius() {
        let p = Polynomial::univariate(&[0.0, 1.0, 2.0, 3.0]);
        let f = ObjectiveSpec::from_polynomial(p, Hyperbox::scalar(-1.0, 1.0).unwrap()).unwrap();
        let x = [0.4];
        let exact = f.gradient(&x)[0];
        let err = |mu: f64| (two_point_estimate(&f, &x, &[1.0], mu)[0] - exact).abs();
        let (e1, e2) = (err(1e-2), err(1e-3));
        // central differences on a cubic: error is 3 mu^2, so a tenfold
        // smaller radius cuts it at least tenfold
        assert!(e1 > 0.0 && e2 < e1 / 10.0 * 1.01, "{e1} {e2}");
    }

    #[test]
    fn trace_csv_layout() {
        let problem = quadratic_consensus(&[0.0, 1.0]);
        let g = NetworkGraph::complete(2).unwrap();
        let mut cfg = AlgorithmConfig::new(AlgorithmKind::Dgd);
        cfg.max_rounds = 2;
        cfg.record_iterates = true;
        let t = run(&problem, None, &g, &cfg, &[vec![0.5], vec![0.5]]).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("round,agent,x1\n0,0,0.5\n0,1,0.5\n"));
        assert_eq!(text.lines().count(), 1 + 2 * (t.rounds + 1));
    }
}
