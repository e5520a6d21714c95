//! Dense two-phase primal simplex with Bland's rule.
//!
//! Problems are small (tens of variables), so the tableau is kept dense and
//! every pivot is deterministic: the entering column is the lowest-index
//! column with negative reduced cost and the leaving row breaks ratio ties
//! by lowest basic-variable index.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-9;
const FEASIBILITY_TOL: f64 = 1e-8;
const MAX_PIVOTS: usize = 50_000;

/// `minimize c x` subject to `A_ub x <= b_ub`, `A_eq x = b_eq`, and
/// `x_j >= 0` unless `free[j]`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub upper: Vec<(Vec<f64>, f64)>,
    pub equal: Vec<(Vec<f64>, f64)>,
    pub free: Vec<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Primal point in the original variables (zeros unless optimal).
    pub x: Vec<f64>,
    pub value: f64,
    pub pivots: usize,
}

impl LinearProgram {
    pub fn new(num_vars: usize) -> Self {
        LinearProgram {
            objective: vec![0.0; num_vars],
            upper: Vec::new(),
            equal: Vec::new(),
            free: vec![false; num_vars],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_upper(&mut self, row: Vec<f64>, rhs: f64) {
        self.upper.push((row, rhs));
    }

    pub fn add_equal(&mut self, row: Vec<f64>, rhs: f64) {
        self.equal.push((row, rhs));
    }

    /// Largest violation of any constraint at `x`.
    pub fn residual(&self, x: &[f64]) -> f64 {
        let dot = |r: &[f64]| r.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        let ub = self.upper.iter().map(|(r, b)| (dot(r) - b).max(0.0));
        let eq = self.equal.iter().map(|(r, b)| (dot(r) - b).abs());
        let sign = x
            .iter()
            .zip(&self.free)
            .map(|(v, f)| if *f { 0.0 } else { (-v).max(0.0) });
        ub.chain(eq).chain(sign).fold(0.0, f64::max)
    }

    fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        if self.free.len() != n {
            return Err(Error::usage("free-variable mask does not match objective"));
        }
        for (row, rhs) in self.upper.iter().chain(&self.equal) {
            if row.len() != n {
                return Err(Error::usage(format!(
                    "constraint row has {} entries, expected {n}",
                    row.len()
                )));
            }
            if !rhs.is_finite() || row.iter().any(|v| !v.is_finite()) {
                return Err(Error::usage("non-finite constraint data"));
            }
        }
        if self.objective.iter().any(|v| !v.is_finite()) {
            return Err(Error::usage("non-finite objective"));
        }
        Ok(())
    }
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    /// Reduced-cost row; last entry is minus the objective value.
    cost: Vec<f64>,
    basis: Vec<usize>,
    width: usize,
    pivots: usize,
}

impl Tableau {
    fn rhs(&self, r: usize) -> f64 {
        self.rows[r][self.width]
    }

    fn pivot(&mut self, r: usize, c: usize) -> Result<()> {
        let p = self.rows[r][c];
        if !p.is_finite() || p.abs() < PIVOT_TOL {
            return Err(Error::Solver(format!(
                "pivot element {p:e} at row {r}, column {c} is unusable"
            )));
        }
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i != r && row[c] != 0.0 {
                let f = row[c];
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
            }
        }
        if self.cost[c] != 0.0 {
            let f = self.cost[c];
            for (v, pv) in self.cost.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
        }
        self.basis[r] = c;
        self.pivots += 1;
        if self.pivots > MAX_PIVOTS {
            return Err(Error::Solver(format!(
                "no convergence after {MAX_PIVOTS} pivots ({} rows, {} columns)",
                self.rows.len(),
                self.width
            )));
        }
        Ok(())
    }

    fn set_cost(&mut self, costs: &[f64]) {
        self.cost = costs.to_vec();
        self.cost.push(0.0);
        for r in 0..self.rows.len() {
            let cb = costs[self.basis[r]];
            if cb != 0.0 {
                for (v, rv) in self.cost.iter_mut().zip(&self.rows[r]) {
                    *v -= cb * rv;
                }
            }
        }
    }

    /// Runs Bland's rule over the columns in `allowed`. Returns `false` when
    /// the problem is unbounded.
    fn optimize(&mut self, allowed: usize) -> Result<bool> {
        loop {
            let Some(c) = (0..allowed).find(|&j| self.cost[j] < -PIVOT_TOL) else {
                return Ok(true);
            };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.rows.len() {
                let a = self.rows[r][c];
                if a > PIVOT_TOL {
                    let ratio = self.rhs(r) / a;
                    let better = match leave {
                        None => true,
                        Some((lr, lratio)) => {
                            ratio < lratio - 1e-12 || (ratio <= lratio + 1e-12 && self.basis[r] < self.basis[lr])
                        }
                    };
                    if better {
                        leave = Some((r, ratio));
                    }
                }
            }
            match leave {
                Some((r, _)) => self.pivot(r, c)?,
                None => return Ok(false),
            }
            if self.cost.iter().any(|v| !v.is_finite()) {
                return Err(Error::Solver(format!(
                    "reduced costs became non-finite after {} pivots",
                    self.pivots
                )));
            }
        }
    }
}

/// Solves `lp` to optimality or reports infeasibility / unboundedness.
pub fn solve(lp: &LinearProgram) -> Result<LpSolution> {
    lp.validate()?;
    let n = lp.num_vars();

    // structural columns: x_j, or x_j+ and x_j- for free variables
    let mut col_of: Vec<(usize, Option<usize>)> = Vec::with_capacity(n);
    let mut next = 0;
    for j in 0..n {
        if lp.free[j] {
            col_of.push((next, Some(next + 1)));
            next += 2;
        } else {
            col_of.push((next, None));
            next += 1;
        }
    }
    let structural = next;
    let slack_start = structural;
    let art_start = slack_start + lp.upper.len();

    struct RawRow {
        coefs: Vec<f64>,
        slack: Option<(usize, f64)>,
        rhs: f64,
    }
    let expand = |row: &[f64]| {
        let mut out = vec![0.0; structural];
        for (j, &v) in row.iter().enumerate() {
            let (p, m) = col_of[j];
            out[p] = v;
            if let Some(m) = m {
                out[m] = -v;
            }
        }
        out
    };
    let mut raw: Vec<RawRow> = Vec::new();
    for (k, (row, rhs)) in lp.upper.iter().enumerate() {
        raw.push(RawRow {
            coefs: expand(row),
            slack: Some((slack_start + k, 1.0)),
            rhs: *rhs,
        });
    }
    for (row, rhs) in &lp.equal {
        raw.push(RawRow {
            coefs: expand(row),
            slack: None,
            rhs: *rhs,
        });
    }
    for r in raw.iter_mut() {
        if r.rhs < 0.0 {
            r.rhs = -r.rhs;
            r.coefs.iter_mut().for_each(|v| *v = -*v);
            if let Some((_, s)) = r.slack.as_mut() {
                *s = -*s;
            }
        }
    }
    let needs_art: Vec<bool> = raw
        .iter()
        .map(|r| !matches!(r.slack, Some((_, s)) if s > 0.0))
        .collect();
    let art_count = needs_art.iter().filter(|b| **b).count();
    let width = art_start + art_count;

    let mut rows = Vec::with_capacity(raw.len());
    let mut basis = Vec::with_capacity(raw.len());
    let mut next_art = art_start;
    for (r, needs) in raw.iter().zip(&needs_art) {
        let mut row = vec![0.0; width + 1];
        row[..structural].copy_from_slice(&r.coefs);
        if let Some((c, s)) = r.slack {
            row[c] = s;
        }
        row[width] = r.rhs;
        if *needs {
            row[next_art] = 1.0;
            basis.push(next_art);
            next_art += 1;
        } else {
            basis.push(r.slack.expect("slack row").0);
        }
        rows.push(row);
    }
    let mut t = Tableau {
        rows,
        cost: Vec::new(),
        basis,
        width,
        pivots: 0,
    };

    if art_count > 0 {
        let mut phase1 = vec![0.0; width];
        phase1[art_start..].iter_mut().for_each(|v| *v = 1.0);
        t.set_cost(&phase1);
        t.optimize(width)?;
        let infeasibility = -t.cost[width];
        if infeasibility > FEASIBILITY_TOL * (1.0 + max_rhs(lp)) {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                x: vec![0.0; n],
                value: f64::NAN,
                pivots: t.pivots,
            });
        }
        // drive zero-level artificials out of the basis, dropping redundant rows
        let mut r = 0;
        while r < t.rows.len() {
            if t.basis[r] >= art_start {
                match (0..art_start).find(|&c| t.rows[r][c].abs() > PIVOT_TOL) {
                    Some(c) => {
                        t.pivot(r, c)?;
                        r += 1;
                    }
                    None => {
                        t.rows.remove(r);
                        t.basis.remove(r);
                    }
                }
            } else {
                r += 1;
            }
        }
    }

    let mut costs = vec![0.0; width];
    for j in 0..n {
        let (p, m) = col_of[j];
        costs[p] = lp.objective[j];
        if let Some(m) = m {
            costs[m] = -lp.objective[j];
        }
    }
    t.set_cost(&costs);
    if !t.optimize(art_start)? {
        return Ok(LpSolution {
            status: LpStatus::Unbounded,
            x: vec![0.0; n],
            value: f64::NEG_INFINITY,
            pivots: t.pivots,
        });
    }

    let mut values = vec![0.0; width];
    for (r, &b) in t.basis.iter().enumerate() {
        values[b] = t.rhs(r);
    }
    let x: Vec<f64> = col_of
        .iter()
        .map(|&(p, m)| values[p] - m.map_or(0.0, |m| values[m]))
        .collect();
    let value = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
    Ok(LpSolution {
        status: LpStatus::Optimal,
        x,
        value,
        pivots: t.pivots,
    })
}

fn max_rhs(lp: &LinearProgram) -> f64 {
    lp.upper
        .iter()
        .chain(&lp.equal)
        .map(|(_, b)| b.abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_maximization() {
        // max 3x + 5y st x <= 4, 2y <= 12, 3x + 2y <= 18  ->  (2, 6), 36
        let mut lp = LinearProgram::new(2);
        lp.objective = vec![-3.0, -5.0];
        lp.add_upper(vec![1.0, 0.0], 4.0);
        lp.add_upper(vec![0.0, 2.0], 12.0);
        lp.add_upper(vec![3.0, 2.0], 18.0);
        let s = solve(&lp).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.x[0] - 2.0).abs() < 1e-12 && (s.x[1] - 6.0).abs() < 1e-12);
        assert!((s.value + 36.0).abs() < 1e-12);
    }

    #[test]
    fn equality_and_negative_rhs() {
        // min x + y st x + y = 3, x - y <= -1  ->  value 3 with y >= 2
        let mut lp = LinearProgram::new(2);
        lp.objective = vec![1.0, 1.0];
        lp.add_equal(vec![1.0, 1.0], 3.0);
        lp.add_upper(vec![1.0, -1.0], -1.0);
        let s = solve(&lp).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.value - 3.0).abs() < 1e-12);
        assert!(lp.residual(&s.x) < 1e-10);
    }

    #[test]
    fn free_variables() {
        // min x st x >= -5 with x free
        let mut lp = LinearProgram::new(1);
        lp.objective = vec![1.0];
        lp.free = vec![true];
        lp.add_upper(vec![-1.0], 5.0);
        let s = solve(&lp).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert_eq!(s.x, vec![-5.0]);
    }

    #[test]
    fn infeasible() {
        let mut lp = LinearProgram::new(1);
        lp.objective = vec![1.0];
        lp.add_upper(vec![1.0], 1.0);
        lp.add_upper(vec![-1.0], -2.0);
        assert_eq!(solve(&lp).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn unbounded() {
        let mut lp = LinearProgram::new(1);
        lp.objective = vec![-1.0];
        lp.add_upper(vec![-1.0], 0.0);
        assert_eq!(solve(&lp).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn redundant_equalities_are_dropped() {
        let mut lp = LinearProgram::new(2);
        lp.objective = vec![1.0, 2.0];
        lp.add_equal(vec![1.0, 1.0], 1.0);
        lp.add_equal(vec![2.0, 2.0], 2.0);
        let s = solve(&lp).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert_eq!(s.x, vec![1.0, 0.0]);
    }

    #[test]
    fn degenerate_cycling_example() {
        // Beale's example cycles under the textbook largest-coefficient rule
        let mut lp = LinearProgram::new(4);
        lp.objective = vec![-0.75, 150.0, -0.02, 6.0];
        lp.add_upper(vec![0.25, -60.0, -0.04, 9.0], 0.0);
        lp.add_upper(vec![0.5, -90.0, -0.02, 3.0], 0.0);
        lp.add_upper(vec![0.0, 0.0, 1.0, 0.0], 1.0);
        let s = solve(&lp).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.value + 0.05).abs() < 1e-9);
    }

    #[test]
    fn mismatched_rows_are_rejected() {
        let mut lp = LinearProgram::new(2);
        lp.add_upper(vec![1.0], 1.0);
        assert!(matches!(solve(&lp), Err(Error::Usage(_))));
    }

    #[test]
    fn deterministic() {
        let mut lp = LinearProgram::new(3);
        lp.objective = vec![-1.0, -1.0, -1.0];
        lp.add_upper(vec![1.0, 1.0, 0.0], 1.0);
        lp.add_upper(vec![0.0, 1.0, 1.0], 1.0);
        lp.add_upper(vec![1.0, 0.0, 1.0], 1.0);
        let a = solve(&lp).unwrap();
        let b = solve(&lp).unwrap();
        assert_eq!(a, b);
        assert!((a.value + 1.5).abs() < 1e-12);
    }
}
