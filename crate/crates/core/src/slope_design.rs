//! Perturbation-slope design.
//!
//! The robust design problem for one agent with slope vertex `m` is
//!
//! ```text
//! min over mt   max over [a, b] in X0   |(mh+ - m+) a - (mh- - m-) b|,   mh = m + mt
//! ```
//!
//! Two linear programs are provided. [`build_lp`] instantiates the printed
//! dual reformulation with decision `xi = [eta, rho, theta]`, where
//! `eta = mh+ - m+`, `rho = mh- - m-` and `mt = eta - rho`. Its last column
//! of `Gamma` is zero, so `theta` is pinned to 0 and `mt = 0` is optimal.
//!
//! [`robust_lp`] is the dualization of the inner maximum done per sign,
//! which keeps `theta` in the objective. It is what the slope floor
//! `|mt_j| >= floor_j` is applied to, one sign branch per coordinate.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::Hyperbox;
use crate::mixed_monotone::{decompose, enumerate_vertices, SlopeVertex};
use crate::objective::{AgentProblem, ObjectiveSpec};
use crate::simplex::{solve, LinearProgram, LpStatus};

/// Coordinates beyond which sign branching and corner enumeration refuse.
pub const MAX_BRANCH_DIM: usize = 10;

/// Printed LP data; `n` is the decision dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpStandardForm {
    pub n: usize,
    /// `(3n) x (2n+1)`, row-major.
    pub gamma: Vec<Vec<f64>>,
    /// `(2n+1) x (2n+1)`, row-major.
    pub lambda: Vec<Vec<f64>>,
    pub c: Vec<f64>,
    pub d: Vec<f64>,
    pub l: Vec<f64>,
}

fn block_identity(rows: usize, cols: usize, r0: usize, c0: usize, n: usize, v: f64, m: &mut [Vec<f64>]) {
    debug_assert!(r0 + n <= rows && c0 + n <= cols);
    for k in 0..n {
        m[r0 + k][c0 + k] = v;
    }
}

pub fn build_lp(vertex: &SlopeVertex, domain: &Hyperbox) -> Result<LpStandardForm> {
    let n = domain.dim();
    if vertex.slope.len() != n {
        return Err(Error::usage(format!(
            "vertex has {} entries, domain dimension is {n}",
            vertex.slope.len()
        )));
    }
    let (xi, dual) = (2 * n + 1, 3 * n);
    let mut gamma = vec![vec![0.0; xi]; dual];
    block_identity(dual, xi, 0, n, n, -1.0, &mut gamma);
    block_identity(dual, xi, n, 0, n, -1.0, &mut gamma);
    block_identity(dual, xi, 2 * n, 0, n, 1.0, &mut gamma);
    block_identity(dual, xi, 2 * n, n, n, 1.0, &mut gamma);
    let mut lambda = vec![vec![0.0; xi]; xi];
    block_identity(xi, xi, 0, 0, xi, -1.0, &mut lambda);

    let mut c = vec![0.0; xi];
    c[2 * n] = 1.0;
    let d = [domain.hi(), domain.lo(), &vec![0.0; n][..]].concat();
    let l = [vertex.positive_part(), vertex.negative_part(), vec![0.0]].concat();
    Ok(LpStandardForm {
        n,
        gamma,
        lambda,
        c,
        d,
        l,
    })
}

impl LpStandardForm {
    pub fn xi_dim(&self) -> usize {
        2 * self.n + 1
    }

    pub fn dual_dim(&self) -> usize {
        3 * self.n
    }

    /// Variables `[xi, p1, p2]`; `xi` free, multipliers nonnegative.
    pub fn to_linear_program(&self) -> LinearProgram {
        let (xi, dual) = (self.xi_dim(), self.dual_dim());
        let total = xi + 2 * dual;
        let mut lp = LinearProgram::new(total);
        lp.objective[..xi].copy_from_slice(&self.c);
        lp.free[..xi].iter_mut().for_each(|f| *f = true);
        for (row, &rhs) in self.lambda.iter().zip(&self.l) {
            let mut r = vec![0.0; total];
            r[..xi].copy_from_slice(row);
            lp.add_upper(r, rhs);
        }
        for block in [xi, xi + dual] {
            let mut r = vec![0.0; total];
            r[block..block + dual].copy_from_slice(&self.d);
            lp.add_upper(r, 0.0);
        }
        // Gamma^T p1 = xi  and  -Gamma^T p2 = xi
        for (block, sign) in [(xi, 1.0), (xi + dual, -1.0)] {
            for k in 0..xi {
                let mut r = vec![0.0; total];
                for (i, grow) in self.gamma.iter().enumerate() {
                    r[block + i] = sign * grow[k];
                }
                r[k] = -1.0;
                lp.add_equal(r, 0.0);
            }
        }
        lp
    }

    /// Plain-text dump: objective row, constraint rows, bounds.
    pub fn canonical_text(&self) -> String {
        let lp = self.to_linear_program();
        let (xi, dual) = (self.xi_dim(), self.dual_dim());
        let name = |j: usize| {
            if j < xi {
                format!("xi{}", j + 1)
            } else if j < xi + dual {
                format!("p1_{}", j - xi + 1)
            } else {
                format!("p2_{}", j - xi - dual + 1)
            }
        };
        let expr = |row: &[f64]| {
            let terms: Vec<String> = row
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(j, v)| format!("{v:+} {}", name(j)))
                .collect();
            if terms.is_empty() {
                "0".to_string()
            } else {
                terms.join(" ")
            }
        };
        let mut out = String::new();
        writeln!(out, "minimize").unwrap();
        writeln!(out, "  obj: {}", expr(&lp.objective)).unwrap();
        writeln!(out, "subject to").unwrap();
        for (k, (row, rhs)) in lp.upper.iter().enumerate() {
            writeln!(out, "  u{}: {} <= {rhs}", k + 1, expr(row)).unwrap();
        }
        for (k, (row, rhs)) in lp.equal.iter().enumerate() {
            writeln!(out, "  e{}: {} = {rhs}", k + 1, expr(row)).unwrap();
        }
        writeln!(out, "bounds").unwrap();
        for j in 0..lp.num_vars() {
            if lp.free[j] {
                writeln!(out, "  {} free", name(j)).unwrap();
            } else {
                writeln!(out, "  {} >= 0", name(j)).unwrap();
            }
        }
        writeln!(out, "end").unwrap();
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignVariant {
    Verbatim,
    SlopeFloor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeDesignResult {
    pub variant: DesignVariant,
    pub xi_star: Vec<f64>,
    pub m_tilde_star: Vec<f64>,
    pub objective_value: f64,
    pub solver_status: LpStatus,
}

impl SlopeDesignResult {
    fn not_optimal(variant: DesignVariant, n: usize, status: LpStatus) -> Self {
        SlopeDesignResult {
            variant,
            xi_star: vec![0.0; 2 * n + 1],
            m_tilde_star: vec![0.0; n],
            objective_value: f64::NAN,
            solver_status: status,
        }
    }

    fn from_xi(variant: DesignVariant, n: usize, xi_star: Vec<f64>) -> Self {
        let m_tilde_star = (0..n).map(|j| xi_star[j] - xi_star[n + j]).collect();
        SlopeDesignResult {
            variant,
            objective_value: xi_star[2 * n],
            m_tilde_star,
            xi_star,
            solver_status: LpStatus::Optimal,
        }
    }
}

/// Residual tolerance a returned optimum must meet.
const RESIDUAL_TOL: f64 = 1e-8;

fn checked_solve(lp: &LinearProgram) -> Result<crate::simplex::LpSolution> {
    let sol = solve(lp)?;
    if sol.status == LpStatus::Optimal {
        let res = lp.residual(&sol.x);
        if res > RESIDUAL_TOL {
            return Err(Error::Solver(format!(
                "optimum violates constraints by {res:e} after {} pivots",
                sol.pivots
            )));
        }
    }
    Ok(sol)
}

pub fn solve_lp(lp: &LpStandardForm) -> Result<SlopeDesignResult> {
    let sol = checked_solve(&lp.to_linear_program())?;
    Ok(match sol.status {
        LpStatus::Optimal => SlopeDesignResult::from_xi(DesignVariant::Verbatim, lp.n, sol.x[..lp.xi_dim()].to_vec()),
        s => SlopeDesignResult::not_optimal(DesignVariant::Verbatim, lp.n, s),
    })
}

/// Sign constraint on `mt_j = eta_j - rho_j`.
#[derive(Debug, Clone, Copy, PartialEq)]
enum SlopeSign {
    AtLeast(f64),
    AtMost(f64),
}

/// Robust LP with `theta` kept live.
///
/// Variables `[eta, rho, theta, u1, v1, w1, u2, v2, w2]`. For each sign
/// `s`, `max_{lo <= a <= b <= hi} s (eta a - rho b) <= theta` dualizes to
/// `s eta = w - u`, `s rho = w - v`, `sum(hi v - lo u) <= theta`.
fn robust_program(vertex: &SlopeVertex, domain: &Hyperbox, signs: &[Option<SlopeSign>]) -> LinearProgram {
    let n = domain.dim();
    let theta = 2 * n;
    let mult = |side: usize, kind: usize, j: usize| 2 * n + 1 + side * 3 * n + kind * n + j;
    let total = 2 * n + 1 + 6 * n;
    let mut lp = LinearProgram::new(total);
    lp.objective[theta] = 1.0;
    lp.free[..2 * n].iter_mut().for_each(|f| *f = true);

    let (mp, mm) = (vertex.positive_part(), vertex.negative_part());
    for j in 0..n {
        let mut r = vec![0.0; total];
        r[j] = -1.0;
        lp.add_upper(r, mp[j]);
        let mut r = vec![0.0; total];
        r[n + j] = -1.0;
        lp.add_upper(r, mm[j]);
    }
    for (side, s) in [(0, 1.0), (1, -1.0)] {
        let mut value = vec![0.0; total];
        value[theta] = -1.0;
        for j in 0..n {
            // s eta_j - w_j + u_j = 0
            let mut r = vec![0.0; total];
            r[j] = s;
            r[mult(side, 2, j)] = -1.0;
            r[mult(side, 0, j)] = 1.0;
            lp.add_equal(r, 0.0);
            // s rho_j - w_j + v_j = 0
            let mut r = vec![0.0; total];
            r[n + j] = s;
            r[mult(side, 2, j)] = -1.0;
            r[mult(side, 1, j)] = 1.0;
            lp.add_equal(r, 0.0);
            value[mult(side, 0, j)] = -domain.lo()[j];
            value[mult(side, 1, j)] = domain.hi()[j];
        }
        lp.add_upper(value, 0.0);
    }
    for (j, s) in signs.iter().enumerate() {
        let mut r = vec![0.0; total];
        match s {
            Some(SlopeSign::AtLeast(f)) => {
                r[j] = -1.0;
                r[n + j] = 1.0;
                lp.add_upper(r, -f);
            }
            Some(SlopeSign::AtMost(f)) => {
                r[j] = 1.0;
                r[n + j] = -1.0;
                lp.add_upper(r, *f);
            }
            None => {}
        }
    }
    lp
}

fn robust_solve(vertex: &SlopeVertex, domain: &Hyperbox, signs: &[Option<SlopeSign>]) -> Result<SlopeDesignResult> {
    let n = domain.dim();
    let sol = checked_solve(&robust_program(vertex, domain, signs))?;
    Ok(match sol.status {
        LpStatus::Optimal => SlopeDesignResult::from_xi(DesignVariant::SlopeFloor, n, sol.x[..2 * n + 1].to_vec()),
        s => SlopeDesignResult::not_optimal(DesignVariant::SlopeFloor, n, s),
    })
}

fn check_vertex(vertex: &SlopeVertex, domain: &Hyperbox) -> Result<()> {
    if vertex.slope.len() != domain.dim() {
        return Err(Error::usage(format!(
            "vertex has {} entries, domain dimension is {}",
            vertex.slope.len(),
            domain.dim()
        )));
    }
    if domain.dim() > MAX_BRANCH_DIM {
        return Err(Error::Capacity {
            what: "robust design dimension",
            got: domain.dim(),
            cap: MAX_BRANCH_DIM,
        });
    }
    Ok(())
}

/// Robust value of a fixed slope, minimized over the split of `mt` into
/// `eta - rho` allowed by the LP.
pub fn robust_lp(vertex: &SlopeVertex, domain: &Hyperbox, m_tilde: &[f64]) -> Result<f64> {
    check_vertex(vertex, domain)?;
    let n = domain.dim();
    if m_tilde.len() != n {
        return Err(Error::usage("slope does not match domain dimension"));
    }
    let mut lp = robust_program(vertex, domain, &vec![None; n]);
    for (j, &v) in m_tilde.iter().enumerate() {
        let mut r = vec![0.0; lp.num_vars()];
        r[j] = 1.0;
        r[n + j] = -1.0;
        lp.add_equal(r, v);
    }
    let sol = checked_solve(&lp)?;
    match sol.status {
        LpStatus::Optimal => Ok(sol.value),
        s => Err(Error::Solver(format!("robust value LP ended {s:?}"))),
    }
}

/// `0.1 |m_j|`, or `0.1` where `m_j = 0`.
pub fn default_slope_floor(vertex: &SlopeVertex) -> Vec<f64> {
    vertex
        .slope
        .iter()
        .map(|m| if *m == 0.0 { 0.1 } else { 0.1 * m.abs() })
        .collect()
}

/// Robust design subject to `|mt_j| >= floor_j`. Each of the `2^n` sign
/// branches is solved and the lowest optimum kept; ties go to the earlier
/// branch (positive signs first).
pub fn solve_with_floor(vertex: &SlopeVertex, domain: &Hyperbox, floor: &[f64]) -> Result<SlopeDesignResult> {
    check_vertex(vertex, domain)?;
    let n = domain.dim();
    if floor.len() != n || floor.iter().any(|f| !(*f >= 0.0)) {
        return Err(Error::usage(
            "slope floor must be nonnegative with one entry per coordinate",
        ));
    }
    let mut best: Option<SlopeDesignResult> = None;
    for bits in 0..1usize << n {
        let signs: Vec<Option<SlopeSign>> = (0..n)
            .map(|j| {
                Some(if bits >> j & 1 == 0 {
                    SlopeSign::AtLeast(floor[j])
                } else {
                    SlopeSign::AtMost(-floor[j])
                })
            })
            .collect();
        let r = robust_solve(vertex, domain, &signs)?;
        if r.solver_status != LpStatus::Optimal {
            continue;
        }
        if best.as_ref().is_none_or(|b| r.objective_value < b.objective_value) {
            best = Some(r);
        }
    }
    Ok(best.unwrap_or_else(|| SlopeDesignResult::not_optimal(DesignVariant::SlopeFloor, n, LpStatus::Infeasible)))
}

/// `max |(mh+ - m+) a - (mh- - m-) b|` over sampled subintervals
/// `[a, b]` of the domain, using the canonical split of `mh = m + mt`.
///
/// Always includes the `3^n` corner pairs `(lo,lo)`, `(hi,hi)`, `(lo,hi)`
/// per coordinate, where the maximum of this piecewise-linear objective is
/// attained, plus `samples` random subintervals.
pub fn brute_force_robust_value(
    vertex: &SlopeVertex,
    domain: &Hyperbox,
    m_tilde: &[f64],
    samples: usize,
    seed: u64,
) -> Result<f64> {
    check_vertex(vertex, domain)?;
    let n = domain.dim();
    if m_tilde.len() != n {
        return Err(Error::usage("slope does not match domain dimension"));
    }
    let (mp, mm) = (vertex.positive_part(), vertex.negative_part());
    let a: Vec<f64> = (0..n)
        .map(|j| (vertex.slope[j] + m_tilde[j]).max(0.0) - mp[j])
        .collect();
    let b: Vec<f64> = (0..n)
        .map(|j| (-(vertex.slope[j] + m_tilde[j])).max(0.0) - mm[j])
        .collect();
    let eval = |lo: &[f64], hi: &[f64]| (0..n).map(|j| a[j] * lo[j] - b[j] * hi[j]).sum::<f64>().abs();
    let (blo, bhi) = (domain.lo(), domain.hi());
    let mut best = 0.0f64;
    let (mut x1, mut x2) = (vec![0.0; n], vec![0.0; n]);
    for code in 0..3usize.pow(n as u32) {
        let mut c = code;
        for j in 0..n {
            let (p, q) = match c % 3 {
                0 => (blo[j], blo[j]),
                1 => (bhi[j], bhi[j]),
                _ => (blo[j], bhi[j]),
            };
            x1[j] = p;
            x2[j] = q;
            c /= 3;
        }
        best = best.max(eval(&x1, &x2));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        for j in 0..n {
            let p = rng.gen_range(blo[j]..=bhi[j]);
            let q = rng.gen_range(blo[j]..=bhi[j]);
            x1[j] = p.min(q);
            x2[j] = p.max(q);
        }
        best = best.max(eval(&x1, &x2));
    }
    Ok(best)
}

/// Vertex feeding the design: the one whose unperturbed published
/// interval is widest, i.e. the privacy-gap minimizer at `mt = 0` for every
/// vicinity radius. First vertex wins ties.
pub fn design_vertex(spec: &ObjectiveSpec) -> Result<SlopeVertex> {
    let zero = vec![0.0; spec.dim()];
    let mut best: Option<(f64, SlopeVertex)> = None;
    for v in enumerate_vertices(spec)? {
        let w = decompose(spec, &v)?.range_width(spec.domain(), &zero)?;
        if best.as_ref().is_none_or(|(bw, _)| w > *bw) {
            best = Some((w, v));
        }
    }
    Ok(best.expect("at least one vertex").1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentDesign {
    pub agent: usize,
    pub vertex: SlopeVertex,
    pub verbatim: SlopeDesignResult,
    pub slope_floor: Vec<f64>,
    pub floored: SlopeDesignResult,
}

/// Both design variants per agent. `floors[i]`, when given, replaces the
/// default floor of agent `i`.
pub fn design_slopes(problem: &AgentProblem, floors: Option<&[Vec<f64>]>) -> Result<Vec<AgentDesign>> {
    if let Some(f) = floors {
        if f.len() != problem.agent_count() {
            return Err(Error::usage(format!(
                "{} slope floors for {} agents",
                f.len(),
                problem.agent_count()
            )));
        }
    }
    problem
        .objectives()
        .par_iter()
        .enumerate()
        .map(|(i, spec)| {
            let annotate = |e: Error| match e {
                Error::Solver(msg) => Error::Solver(format!("agent {i}: {msg}")),
                other => other,
            };
            let vertex = design_vertex(spec)?;
            let verbatim = solve_lp(&build_lp(&vertex, spec.domain())?).map_err(annotate)?;
            let slope_floor = floors.map_or_else(|| default_slope_floor(&vertex), |f| f[i].clone());
            let floored = solve_with_floor(&vertex, spec.domain(), &slope_floor).map_err(annotate)?;
            Ok(AgentDesign {
                agent: i,
                vertex,
                verbatim,
                slope_floor,
                floored,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::{example_problem, Polynomial};

    fn vertex(slope: &[f64]) -> SlopeVertex {
        SlopeVertex {
            slope: slope.to_vec(),
            choice_mask: vec![false; slope.len()],
        }
    }

    fn sym(n: usize) -> Hyperbox {
        Hyperbox::cube(n, -10.0, 10.0).unwrap()
    }

    #[test]
    fn build_lp_scalar_examples() {
        let lp = build_lp(&vertex(&[2.0]), &sym(1)).unwrap();
        assert_eq!(lp.l, vec![2.0, 0.0, 0.0]);
        assert_eq!(lp.d, vec![10.0, -10.0, 0.0]);
        assert_eq!(lp.c, vec![0.0, 0.0, 1.0]);
        assert_eq!(
            lp.gamma,
            vec![vec![0.0, -1.0, 0.0], vec![-1.0, 0.0, 0.0], vec![1.0, 1.0, 0.0]]
        );
        assert_eq!(
            lp.lambda,
            vec![vec![-1.0, 0.0, 0.0], vec![0.0, -1.0, 0.0], vec![0.0, 0.0, -1.0]]
        );
        let lp = build_lp(&vertex(&[-3.0]), &sym(1)).unwrap();
        assert_eq!(lp.l, vec![0.0, 3.0, 0.0]);
    }

    #[test]
    fn build_lp_dimensions() {
        let lp = build_lp(&vertex(&[1.0, -1.0]), &sym(2)).unwrap();
        assert_eq!((lp.xi_dim(), lp.dual_dim()), (5, 6));
        assert_eq!(lp.gamma.len(), 6);
        assert!(lp.gamma.iter().all(|r| r.len() == 5));
        assert_eq!(lp.lambda.len(), 5);
        assert!(build_lp(&vertex(&[1.0]), &sym(2)).is_err());
    }

    #[test]
    fn verbatim_lp_pins_theta_to_zero() {
        for m in [[2.0], [-3.0], [0.0], [1234.5]] {
            let r = solve_lp(&build_lp(&vertex(&m), &sym(1)).unwrap()).unwrap();
            assert_eq!(r.solver_status, LpStatus::Optimal);
            assert_eq!(r.objective_value, 0.0);
            assert_eq!(r.m_tilde_star, vec![0.0]);
        }
    }

    #[test]
    fn extraction_identity() {
        let r = solve_with_floor(
            &vertex(&[2.0, -1.0]),
            &Hyperbox::new(vec![-1.0, 0.0], vec![3.0, 2.0]).unwrap(),
            &[0.5, 0.5],
        )
        .unwrap();
        for j in 0..2 {
            assert_eq!(r.m_tilde_star[j], r.xi_star[j] - r.xi_star[2 + j]);
        }
    }

    #[test]
    fn contradictory_constraints_are_infeasible() {
        let mut lp = build_lp(&vertex(&[2.0]), &sym(1)).unwrap();
        // theta >= 1 while Gamma forces theta = 0
        lp.l[2] = -1.0;
        assert_eq!(solve_lp(&lp).unwrap().solver_status, LpStatus::Infeasible);
    }

    #[test]
    fn canonical_text_lists_every_row() {
        let text = build_lp(&vertex(&[2.0]), &sym(1)).unwrap().canonical_text();
        assert!(text.starts_with("minimize\n  obj: +1 xi3\n"));
        assert_eq!(text.matches(" <= ").count(), 5);
        assert_eq!(text.matches(" = ").count(), 6);
        assert!(text.contains("  xi1 free\n") && text.contains("  p2_3 >= 0\n"));
        assert!(text.ends_with("end\n"));
    }

    #[test]
    fn brute_force_examples() {
        let v = vertex(&[0.0]);
        assert_eq!(brute_force_robust_value(&v, &sym(1), &[0.0], 100, 1).unwrap(), 0.0);
        assert_eq!(brute_force_robust_value(&v, &sym(1), &[1.0], 100, 1).unwrap(), 10.0);
        assert_eq!(brute_force_robust_value(&v, &sym(1), &[-1.0], 100, 1).unwrap(), 10.0);
        let v = vertex(&[3.0, -2.0]);
        assert_eq!(brute_force_robust_value(&v, &sym(2), &[0.0, 0.0], 100, 1).unwrap(), 0.0);
    }

    #[test]
    fn robust_lp_matches_brute_force() {
        let boxes = [
            sym(1),
            Hyperbox::scalar(-2.0, 7.0).unwrap(),
            Hyperbox::scalar(1.0, 4.0).unwrap(),
            Hyperbox::new(vec![-3.0, 0.5], vec![1.0, 6.0]).unwrap(),
        ];
        for b in &boxes {
            let n = b.dim();
            for (m, mt) in [(2.0, 1.0), (2.0, -3.0), (-1.0, 0.4), (0.0, -2.5), (-4.0, 4.0)] {
                let v = vertex(&vec![m; n]);
                let mtv: Vec<f64> = (0..n).map(|j| mt * (1.0 - 0.3 * j as f64)).collect();
                let lp = robust_lp(&v, b, &mtv).unwrap();
                let bf = brute_force_robust_value(&v, b, &mtv, 2_000, 7).unwrap();
                assert!((lp - bf).abs() <= 1e-9 * (1.0 + bf), "{b} m={m} mt={mt}: {lp} vs {bf}");
            }
        }
    }

    #[test]
    fn floor_design_sits_on_the_floor() {
        let r = solve_with_floor(&vertex(&[2.0]), &sym(1), &[0.2]).unwrap();
        assert_eq!(r.solver_status, LpStatus::Optimal);
        assert!((r.m_tilde_star[0] - 0.2).abs() < 1e-12);
        assert!((r.objective_value - 2.0).abs() < 1e-9);
        // asymmetric box favours the sign that stays small on the long side
        let r = solve_with_floor(&vertex(&[2.0]), &Hyperbox::scalar(-1.0, 5.0).unwrap(), &[0.2]).unwrap();
        assert!((r.objective_value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn zero_bounds_design_to_zero() {
        let spec = ObjectiveSpec::from_polynomial(Polynomial::univariate(&[3.0]), sym(1)).unwrap();
        let problem = AgentProblem::new(vec![spec]).unwrap();
        let d = &design_slopes(&problem, None).unwrap()[0];
        assert_eq!(d.vertex.slope, vec![0.0]);
        assert_eq!(d.verbatim.m_tilde_star, vec![0.0]);
        assert_eq!(d.verbatim.objective_value, 0.0);
        assert_eq!(d.slope_floor, vec![0.1]);
    }

    #[test]
    fn example_design_is_deterministic() {
        let problem = example_problem();
        let a = design_slopes(&problem, None).unwrap();
        let b = design_slopes(&problem, None).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 3);
        for d in &a {
            assert_eq!(d.verbatim.m_tilde_star, vec![0.0]);
            assert!(d.floored.m_tilde_star[0].abs() >= d.slope_floor[0] - 1e-12);
        }
    }
}
