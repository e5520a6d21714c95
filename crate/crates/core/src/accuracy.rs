//! Vicinity radii induced by slopes, the accuracy upper bound, and the
//! empirical worst-case error between true and perturbed minimizer sets.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::Hyperbox;
use crate::objective::{dot, ObjectiveSpec};
use crate::simplex::{solve, LinearProgram, LpStatus};

/// Grid points for one-dimensional certification.
pub const GRID_POINTS_1D: usize = 100_000;
/// Grid points per axis for two-dimensional certification.
pub const GRID_POINTS_2D: usize = 1_000;
/// Candidates within this value gap of the grid minimum are refined, and
/// refined points within it of the best are reported.
pub const VALUE_TOL: f64 = 1e-3;
const REFINE_TOL: f64 = 1e-6;

/// `max(|mt+ hi - mt- lo|, |mt+ lo - mt- hi|)`.
pub fn delta_star(m_tilde: &[f64], domain: &Hyperbox) -> f64 {
    let (mut a, mut b) = (0.0, 0.0);
    for (j, &m) in m_tilde.iter().enumerate() {
        let (p, q) = (m.max(0.0), (-m).max(0.0));
        a += p * domain.hi()[j] - q * domain.lo()[j];
        b += p * domain.lo()[j] - q * domain.hi()[j];
    }
    f64::max(f64::abs(a), f64::abs(b))
}

/// `sum_j |mt_j| width_j`, the largest change of `mt x` across the domain.
pub fn slope_spread(m_tilde: &[f64], domain: &Hyperbox) -> f64 {
    m_tilde.iter().zip(domain.widths()).map(|(m, w)| m.abs() * w).sum()
}

/// `slope_spread <= delta_star`.
pub fn admissible_slope(m_tilde: &[f64], delta_star: f64, domain: &Hyperbox) -> bool {
    slope_spread(m_tilde, domain) <= delta_star
}

/// Default vicinity radius: `max(delta_star, slope_spread)`.
pub fn default_vicinity_radius(m_tilde: &[f64], domain: &Hyperbox) -> f64 {
    delta_star(m_tilde, domain).max(slope_spread(m_tilde, domain))
}

/// `max ||y - z||_inf` over `y, z` in the domain with `a_k (y - z) <= 0`
/// for every constraint row `a_k`. Solved as `2n` LPs in `(y, z)`.
fn max_gap_under(rows: &[Vec<f64>], domain: &Hyperbox) -> Result<f64> {
    let n = domain.dim();
    if let Some(r) = rows.iter().find(|r| r.len() != n) {
        return Err(Error::usage(format!("slope {r:?} does not match domain dimension {n}")));
    }
    let mut best = 0.0f64;
    for j in 0..n {
        for sign in [1.0, -1.0] {
            let mut lp = LinearProgram::new(2 * n);
            lp.free.iter_mut().for_each(|f| *f = true);
            lp.objective[j] = -sign;
            lp.objective[n + j] = sign;
            for k in 0..n {
                let (lo, hi) = (domain.lo()[k], domain.hi()[k]);
                for col in [k, n + k] {
                    let mut r = vec![0.0; 2 * n];
                    r[col] = 1.0;
                    lp.add_upper(r.clone(), hi);
                    r[col] = -1.0;
                    lp.add_upper(r, -lo);
                }
            }
            for a in rows {
                let mut r = vec![0.0; 2 * n];
                r[..n].copy_from_slice(a);
                for k in 0..n {
                    r[n + k] = -a[k];
                }
                lp.add_upper(r, 0.0);
            }
            let sol = solve(&lp)?;
            if sol.status != LpStatus::Optimal {
                return Err(Error::Solver(format!(
                    "accuracy bound LP ended {:?} on coordinate {j}",
                    sol.status
                )));
            }
            best = best.max(-sol.value);
        }
    }
    // adding zero turns a -0.0 optimum into 0.0
    Ok(best.min(domain.diameter()) + 0.0)
}

/// The accuracy bound with one constraint `mt_i (y - z) <= 0` per agent.
pub fn upper_bound(slopes: &[Vec<f64>], domain: &Hyperbox) -> Result<f64> {
    if slopes.is_empty() {
        return Err(Error::usage("upper bound needs at least one slope"));
    }
    max_gap_under(slopes, domain)
}

/// The bound with the single aggregate constraint `(sum_i mt_i)(y - z) <= 0`.
pub fn aggregate_upper_bound(slopes: &[Vec<f64>], domain: &Hyperbox) -> Result<f64> {
    if slopes.is_empty() {
        return Err(Error::usage("upper bound needs at least one slope"));
    }
    max_gap_under(&[slope_sum(slopes)], domain)
}

pub fn slope_sum(slopes: &[Vec<f64>]) -> Vec<f64> {
    let mut s = vec![0.0; slopes.first().map_or(0, Vec::len)];
    for m in slopes {
        for (a, b) in s.iter_mut().zip(m) {
            *a += b;
        }
    }
    s
}

fn sup_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// `max ||x - y||_inf` over `reference x perturbed`.
pub fn empirical_error(reference: &[Vec<f64>], perturbed: &[Vec<f64>]) -> Result<f64> {
    if reference.is_empty() || perturbed.is_empty() {
        return Err(Error::usage("empirical error needs two nonempty point sets"));
    }
    Ok(reference
        .iter()
        .flat_map(|x| perturbed.iter().map(move |y| sup_distance(x, y)))
        .fold(0.0, f64::max))
}

/// `mt (x* - xt*)`, which the accuracy argument constrains in sign.
pub fn necessary_condition_value(slope_sum: &[f64], x_star: &[f64], x_tilde: &[f64]) -> f64 {
    let diff: Vec<f64> = x_star.iter().zip(x_tilde).map(|(a, b)| a - b).collect();
    dot(slope_sum, &diff)
}

fn golden_section(mut f: impl FnMut(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > REFINE_TOL {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    if fc <= fd {
        c
    } else {
        d
    }
}

/// Coordinate-wise golden-section polish inside `[x - radius, x + radius]`
/// clipped to the domain.
fn refine(f: &ObjectiveSpec, start: &[f64], radius: &[f64]) -> Vec<f64> {
    let domain = f.domain();
    let mut x = start.to_vec();
    for _ in 0..4 {
        for j in 0..x.len() {
            let lo = (start[j] - radius[j]).max(domain.lo()[j]);
            let hi = (start[j] + radius[j]).min(domain.hi()[j]);
            let mut probe = x.clone();
            let t = golden_section(
                |t| {
                    probe[j] = t;
                    f.value(&probe)
                },
                lo,
                hi,
            );
            let mut cand = x.clone();
            cand[j] = t;
            if f.value(&cand) <= f.value(&x) {
                x = cand;
            }
        }
    }
    x
}

/// Grid-certified minimizers of `f`: grid points within [`VALUE_TOL`] of the
/// grid minimum are grouped into connected clusters, the best point of each
/// cluster is polished, and every polished point within [`VALUE_TOL`] of the
/// overall best is returned, sorted lexicographically.
pub fn certify_minimizers(f: &ObjectiveSpec, grid_points: usize) -> Result<Vec<Vec<f64>>> {
    let n = f.dim();
    let domain = f.domain();
    if n > 2 {
        return Err(Error::Capacity {
            what: "grid certification dimension",
            got: n,
            cap: 2,
        });
    }
    if grid_points < 2 {
        return Err(Error::usage("grid needs at least two points per axis"));
    }
    let axis = |j: usize, k: usize| {
        let (lo, hi) = (domain.lo()[j], domain.hi()[j]);
        lo + (hi - lo) * k as f64 / (grid_points - 1) as f64
    };
    let total = grid_points.pow(n as u32);
    let point = |idx: usize| -> Vec<f64> {
        let mut rem = idx;
        (0..n)
            .map(|j| {
                let k = rem % grid_points;
                rem /= grid_points;
                axis(j, k)
            })
            .collect()
    };
    let values: Vec<f64> = (0..total).into_par_iter().map(|i| f.value(&point(i))).collect();
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    if !min.is_finite() {
        return Err(Error::precondition("objective is not finite on the grid"));
    }
    let near: Vec<bool> = values.iter().map(|v| *v <= min + VALUE_TOL).collect();

    // connected components of near-optimal grid cells
    let mut seen = vec![false; total];
    let mut reps = Vec::new();
    for start in 0..total {
        if !near[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        let mut stack = vec![start];
        let mut best = start;
        while let Some(i) = stack.pop() {
            if values[i] < values[best] {
                best = i;
            }
            let mut stride = 1;
            for _ in 0..n {
                let k = i / stride % grid_points;
                if k > 0 && near[i - stride] && !seen[i - stride] {
                    seen[i - stride] = true;
                    stack.push(i - stride);
                }
                if k + 1 < grid_points && near[i + stride] && !seen[i + stride] {
                    seen[i + stride] = true;
                    stack.push(i + stride);
                }
                stride *= grid_points;
            }
        }
        reps.push(best);
    }

    let step: Vec<f64> = domain.widths().iter().map(|w| w / (grid_points - 1) as f64).collect();
    let polished: Vec<(f64, Vec<f64>)> = reps
        .into_iter()
        .map(|i| {
            let x = refine(f, &point(i), &step);
            (f.value(&x), x)
        })
        .collect();
    let best = polished.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let mut out: Vec<Vec<f64>> = polished
        .into_iter()
        .filter(|(v, _)| *v <= best + VALUE_TOL)
        .map(|(_, x)| x)
        .collect();
    out.sort_by(|a, b| a.partial_cmp(b).expect("finite minimizers"));
    out.dedup_by(|a, b| sup_distance(a, b) <= 10.0 * REFINE_TOL);
    Ok(out)
}

/// Default grid resolution for the dimension of `f`.
pub fn default_grid_points(dim: usize) -> usize {
    if dim <= 1 {
        GRID_POINTS_1D
    } else {
        GRID_POINTS_2D
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub delta_star: Vec<f64>,
    pub admissible: Vec<bool>,
    pub ub: f64,
    pub aggregate_ub: f64,
    pub empirical_error: Option<f64>,
    pub reference_optimizers: Vec<Vec<f64>>,
    pub perturbed_optimizers: Vec<Vec<f64>>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::{example_problem, sum_objective, Polynomial};

    fn sym() -> Hyperbox {
        Hyperbox::scalar(-10.0, 10.0).unwrap()
    }

    #[test]
    fn delta_star_examples() {
        assert_eq!(delta_star(&[0.52], &sym()), 5.2);
        assert_eq!(delta_star(&[0.0], &sym()), 0.0);
        assert_eq!(delta_star(&[1.0, -1.0], &Hyperbox::cube(2, 0.0, 1.0).unwrap()), 1.0);
    }

    #[test]
    fn admissibility_literal_reading() {
        assert!(!admissible_slope(&[0.52], 5.2, &sym()));
        assert!(admissible_slope(&[0.0], 0.0, &sym()));
        assert!(!admissible_slope(&[1e6], 5.2, &sym()));
        assert!(admissible_slope(&[0.52], 10.4, &sym()));
    }

    #[test]
    fn upper_bound_examples() {
        let pinned = upper_bound(&[vec![0.5], vec![-0.2]], &sym()).unwrap();
        assert_eq!(pinned, 0.0);
        assert!(pinned.is_sign_positive());
        assert_eq!(upper_bound(&[vec![0.5], vec![0.2], vec![1.0]], &sym()).unwrap(), 20.0);
        assert_eq!(upper_bound(&[vec![-0.5]], &sym()).unwrap(), 20.0);
        assert_eq!(upper_bound(&[vec![0.0], vec![0.0]], &sym()).unwrap(), 20.0);
        assert!(upper_bound(&[], &sym()).is_err());
    }

    #[test]
    fn upper_bound_in_two_dimensions() {
        let b = Hyperbox::new(vec![0.0, 0.0], vec![1.0, 3.0]).unwrap();
        assert_eq!(upper_bound(&[vec![0.0, 0.0]], &b).unwrap(), 3.0);
        // y1 - z1 <= 0 and -(y1 - z1) <= 0 pin the first axis, second stays free
        assert_eq!(upper_bound(&[vec![1.0, 0.0], vec![-1.0, 0.0]], &b).unwrap(), 3.0);
        let ub = upper_bound(&[vec![1.0, 1.0], vec![-1.0, -1.0]], &b).unwrap();
        assert!((ub - 1.0).abs() < 1e-12);
    }

    #[test]
    fn upper_bound_shrinks_with_more_constraints() {
        let b = Hyperbox::new(vec![-1.0, -2.0], vec![2.0, 1.0]).unwrap();
        let rows = [vec![1.0, 0.3], vec![-0.5, 1.0], vec![0.2, -2.0]];
        let mut last = f64::INFINITY;
        for k in 1..=rows.len() {
            let ub = upper_bound(&rows[..k], &b).unwrap();
            assert!(ub <= last + 1e-12 && ub <= b.diameter());
            last = ub;
        }
    }

    #[test]
    fn aggregate_bound_uses_the_sum() {
        let ub = aggregate_upper_bound(&[vec![0.5], vec![-0.2]], &sym()).unwrap();
        assert_eq!(ub, 20.0);
        assert_eq!(slope_sum(&[vec![0.5], vec![-0.2]]), vec![0.3]);
    }

    #[test]
    fn empirical_error_examples() {
        assert_eq!(empirical_error(&[vec![1.0]], &[vec![1.0]]).unwrap(), 0.0);
        let e = empirical_error(&[vec![2.62]], &[vec![2.60]]).unwrap();
        assert!((e - 0.02).abs() < 1e-12);
        let e = empirical_error(&[vec![0.0], vec![1.0]], &[vec![0.5], vec![3.0]]).unwrap();
        assert_eq!(e, 3.0);
        assert!(matches!(empirical_error(&[], &[vec![1.0]]), Err(Error::Usage(_))));
    }

    #[test]
    fn necessary_condition_sign() {
        assert_eq!(necessary_condition_value(&[2.0], &[1.0], &[0.5]), 1.0);
    }

    #[test]
    fn certify_convex_quadratic() {
        let f = ObjectiveSpec::from_polynomial(
            Polynomial::univariate(&[1.0, -2.0, 1.0]),
            Hyperbox::scalar(-3.0, 4.0).unwrap(),
        )
        .unwrap();
        let xs = certify_minimizers(&f, 10_001).unwrap();
        assert_eq!(xs.len(), 1);
        assert!((xs[0][0] - 1.0).abs() < 1e-5);
    }

    #[test]
    fn certify_double_well_reports_both() {
        let f = ObjectiveSpec::from_polynomial(
            Polynomial::univariate(&[0.0, 0.0, -1.0, 0.0, 1.0]),
            Hyperbox::scalar(-2.0, 2.0).unwrap(),
        )
        .unwrap();
        let xs = certify_minimizers(&f, GRID_POINTS_1D).unwrap();
        assert_eq!(xs.len(), 2);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((xs[0][0] + r).abs() < 1e-5 && (xs[1][0] - r).abs() < 1e-5);
    }

    #[test]
    fn certify_example_sum() {
        let f = sum_objective(&example_problem());
        let xs = certify_minimizers(&f, GRID_POINTS_1D).unwrap();
        assert_eq!(xs.len(), 1);
        assert!((xs[0][0] - 2.62).abs() < 1e-2);
        assert!((xs[0][0] - 2.617_43).abs() < 1e-4);
    }

    #[test]
    fn certify_two_dimensional() {
        // (x - 1)^2 + (y + 0.5)^2
        let p = Polynomial::new(
            2,
            vec![
                crate::objective::Monomial::new(1.0, vec![2, 0]),
                crate::objective::Monomial::new(-2.0, vec![1, 0]),
                crate::objective::Monomial::new(1.0, vec![0, 2]),
                crate::objective::Monomial::new(1.0, vec![0, 1]),
            ],
        )
        .unwrap();
        let f = ObjectiveSpec::from_polynomial(p, Hyperbox::cube(2, -2.0, 2.0).unwrap()).unwrap();
        let xs = certify_minimizers(&f, 201).unwrap();
        assert_eq!(xs.len(), 1);
        assert!((xs[0][0] - 1.0).abs() < 1e-5 && (xs[0][1] + 0.5).abs() < 1e-5);
    }

    #[test]
    fn certify_rejects_high_dimension() {
        let f = ObjectiveSpec::from_polynomial(Polynomial::zero(3), Hyperbox::cube(3, 0.0, 1.0).unwrap()).unwrap();
        assert!(matches!(certify_minimizers(&f, 10), Err(Error::Capacity { .. })));
    }
}
