use std::fmt::Write as _;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::Experiment;
use super::properties::{inclusion_soundness, privacy_inequality, remainder_tightness, PropertyOutcome};
use crate::accuracy::{
    admissible_slope, aggregate_upper_bound, certify_minimizers, default_grid_points, default_vicinity_radius,
    delta_star, empirical_error, necessary_condition_value, slope_spread, slope_sum, upper_bound, AccuracyReport,
};
use crate::dist_opt::{run_multi_start, start_points, AlgorithmConfig, AlgorithmKind, Trace};
use crate::error::{Error, Result};
use crate::objective::{sum_objective, AgentProblem};
use crate::privacy::{epsilon_gap, privacy_report, Mechanism, PrivacyReport};
use crate::sampling::normal_vector;
use crate::slope_design::{build_lp, design_slopes, AgentDesign};

/// Tolerance on the sign condition relating true and perturbed minimizers.
pub const NECESSARY_CONDITION_TOL: f64 = 1e-6;
/// Published values are given to two decimals.
pub const SLOPE_MATCH_TOL: f64 = 0.005;
/// Allowed distance between computed and published privacy gaps.
pub const EPS_MATCH_TOL: f64 = 0.05;
/// Multiples of the vicinity radius at which monotonicity is checked.
pub const DELTA_FACTORS: [f64; 5] = [0.5, 1.0, 2.0, 4.0, 8.0];

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|source| Error::Io {
            path: dir.display().to_string(),
            source,
        })?;
    }
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignComparison {
    pub agent: usize,
    pub reference: Vec<f64>,
    pub verbatim_matches: bool,
    pub floored_matches: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignReport {
    pub agents: Vec<AgentDesign>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub comparison: Vec<DesignComparison>,
}

pub fn run_design(exp: &Experiment) -> Result<DesignReport> {
    let agents = design_slopes(&exp.problem, exp.config.mechanism.slope_floor.as_deref())?;
    let comparison = match &exp.config.reference.slopes {
        Some(refs) if refs.len() == agents.len() => agents
            .iter()
            .zip(refs)
            .map(|(d, r)| DesignComparison {
                agent: d.agent,
                reference: r.clone(),
                verbatim_matches: close(&d.verbatim.m_tilde_star, r, SLOPE_MATCH_TOL),
                floored_matches: close(&d.floored.m_tilde_star, r, SLOPE_MATCH_TOL),
            })
            .collect(),
        _ => Vec::new(),
    };
    Ok(DesignReport { agents, comparison })
}

/// Writes `design.json` and one canonical LP dump per agent.
pub fn design(exp: &Experiment, out: &Path) -> Result<DesignReport> {
    let report = run_design(exp)?;
    write_json(&out.join("design.json"), &report)?;
    for (i, d) in report.agents.iter().enumerate() {
        let lp = build_lp(&d.vertex, exp.problem.domain())?;
        write_text(&out.join(format!("lp_agent{}.txt", i + 1)), &lp.canonical_text())?;
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlopeSource {
    Config,
    FlooredDesign,
}

/// Configured slopes, or the floored design when none are configured.
pub fn resolve_slopes(exp: &Experiment) -> Result<(Vec<Vec<f64>>, SlopeSource)> {
    if let Some(s) = &exp.config.mechanism.slopes {
        if s.len() != exp.problem.agent_count() {
            return Err(Error::usage(format!(
                "{} configured slopes for {} agents",
                s.len(),
                exp.problem.agent_count()
            )));
        }
        return Ok((s.clone(), SlopeSource::Config));
    }
    let designs = design_slopes(&exp.problem, exp.config.mechanism.slope_floor.as_deref())?;
    Ok((
        designs.into_iter().map(|d| d.floored.m_tilde_star).collect(),
        SlopeSource::FlooredDesign,
    ))
}

/// Configured radii, or [`default_vicinity_radius`] of each slope. Used by
/// verify and the accuracy report; the sweep applies the same rule per
/// sample with `delta*` taken at the center slopes.
pub fn resolve_deltas(exp: &Experiment, slopes: &[Vec<f64>]) -> Vec<f64> {
    exp.config.mechanism.deltas.clone().unwrap_or_else(|| {
        slopes
            .iter()
            .map(|m| default_vicinity_radius(m, exp.problem.domain()))
            .collect()
    })
}

/// Whether every agent's gap strictly decreases along [`DELTA_FACTORS`].
pub fn epsilon_monotone(problem: &AgentProblem, slopes: &[Vec<f64>], deltas: &[f64]) -> Result<bool> {
    for (i, f) in problem.objectives().iter().enumerate() {
        let mut last = f64::INFINITY;
        for k in DELTA_FACTORS {
            let e = epsilon_gap(f, &slopes[i], deltas[i] * k)?.eps;
            if !(e < last) {
                return Ok(false);
            }
            last = e;
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReproductionStatus {
    Pass,
    PassWithDiscrepancy,
    Fail,
}

impl ReproductionStatus {
    pub fn label(&self) -> &'static str {
        match self {
            ReproductionStatus::Pass => "PASS",
            ReproductionStatus::PassWithDiscrepancy => "PASS-WITH-DISCREPANCY",
            ReproductionStatus::Fail => "FAIL",
        }
    }
}

/// Match within [`EPS_MATCH_TOL`] passes; a mismatch is tolerated only
/// when the gap is monotone in the radius.
pub fn reproduction_status(computed: &[f64], reference: &[f64], monotone: bool) -> ReproductionStatus {
    if close(computed, reference, EPS_MATCH_TOL) {
        ReproductionStatus::Pass
    } else if monotone {
        ReproductionStatus::PassWithDiscrepancy
    } else {
        ReproductionStatus::Fail
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrivacyCommandReport {
    pub slope_source: SlopeSource,
    pub report: PrivacyReport,
    pub delta_star: Vec<f64>,
    /// Literal test `sum_j |mt_ij| width_j <= delta*_i` per agent.
    pub admissible: Vec<bool>,
    pub monotone_in_delta: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference_eps: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reproduction: Option<ReproductionStatus>,
}

pub fn run_privacy(exp: &Experiment) -> Result<PrivacyCommandReport> {
    let (slopes, slope_source) = resolve_slopes(exp)?;
    let domain = exp.problem.domain();
    let stars: Vec<f64> = slopes.iter().map(|m| delta_star(m, domain)).collect();
    // gaps are reported at delta* unless radii are configured
    let deltas = exp.config.mechanism.deltas.clone().unwrap_or_else(|| stars.clone());
    let mech = Mechanism::new(slopes.clone(), deltas.clone(), domain.clone())?;
    let report = privacy_report(&exp.problem, &mech)?;
    let admissible = slopes
        .iter()
        .zip(&stars)
        .map(|(m, d)| admissible_slope(m, *d, domain))
        .collect();
    let monotone_in_delta = epsilon_monotone(&exp.problem, &slopes, &deltas)?;
    let reference_eps = exp.config.reference.eps.clone().filter(|r| r.len() == slopes.len());
    let reproduction = reference_eps
        .as_ref()
        .map(|r| reproduction_status(&report.per_agent_eps, r, monotone_in_delta));
    Ok(PrivacyCommandReport {
        slope_source,
        report,
        delta_star: stars,
        admissible,
        monotone_in_delta,
        reference_eps,
        reproduction,
    })
}

pub fn privacy_table(r: &PrivacyCommandReport) -> String {
    let mut s = String::new();
    writeln!(
        s,
        "agent  slope                delta          eps            vertex      range width"
    )
    .unwrap();
    for i in 0..r.report.per_agent_eps.len() {
        writeln!(
            s,
            "{:<6} {:<20} {:<14.6e} {:<14.6e} {:<11} {:.6e}",
            i + 1,
            format!("{:?}", r.report.slopes[i]),
            r.report.vicinity_radii[i],
            r.report.per_agent_eps[i],
            format!("{:?}", r.report.minimizing_vertex[i].slope),
            r.report.diam_true[i],
        )
        .unwrap();
    }
    writeln!(s, "overall eps = {:.6e}", r.report.overall_eps).unwrap();
    if let (Some(refs), Some(status)) = (&r.reference_eps, r.reproduction) {
        writeln!(s, "reference eps = {refs:?} -> {}", status.label()).unwrap();
    }
    s
}

/// Writes `privacy.json`.
pub fn privacy(exp: &Experiment, out: &Path) -> Result<PrivacyCommandReport> {
    let r = run_privacy(exp)?;
    write_json(&out.join("privacy.json"), &r)?;
    Ok(r)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmError {
    pub kind: AlgorithmKind,
    pub error: f64,
    pub terminal_points: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub sample: usize,
    pub m_tilde: Vec<Vec<f64>>,
    pub deltas: Vec<f64>,
    pub eps: f64,
    pub ub: f64,
    pub aggregate_ub: f64,
    pub errors: Vec<AlgorithmError>,
    /// Largest `mt (x* - xt*)` over observed pairs.
    pub condition_max: f64,
    /// Smallest `mt (x* - xt*)` over observed pairs.
    pub condition_min: f64,
}

impl SweepRow {
    pub fn error_of(&self, kind: AlgorithmKind) -> Option<f64> {
        self.errors.iter().find(|e| e.kind == kind).map(|e| e.error)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub sample: usize,
    pub kind: AlgorithmKind,
    pub error: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub center_slopes: Vec<Vec<f64>>,
    pub slope_source: SlopeSource,
    pub sigma: f64,
    pub seed: u64,
    pub reference_optimizers: Vec<Vec<f64>>,
    /// Sorted by `eps` ascending, ties by sample index.
    pub rows: Vec<SweepRow>,
    pub dominance_violations: Vec<Violation>,
    pub aggregate_dominance_violations: Vec<Violation>,
    pub condition_checks: usize,
    /// Pairs with `mt (x* - xt*) > tol`.
    pub condition_violations: usize,
    /// Pairs with `mt (x* - xt*) < -tol`, the opposite sign.
    pub opposite_sign_violations: usize,
}

fn algorithm_seed(base: u64, sample: usize, alg: usize) -> u64 {
    base.wrapping_mul(0x9e37_79b9_7f4a_7c15)
        .wrapping_add((sample as u64) << 8 | alg as u64)
}

fn run_algorithms(
    exp: &Experiment,
    mech: &Mechanism,
    seed_base: u64,
    sample: usize,
    record: bool,
) -> Result<Vec<(AlgorithmKind, Vec<Trace>)>> {
    let graph = exp.graph()?;
    let starts = start_points(
        exp.problem.domain(),
        exp.problem.agent_count(),
        exp.config.multi_start,
        exp.config.sampling.seed,
    );
    exp.config
        .algorithms
        .iter()
        .enumerate()
        .map(|(a, base)| {
            let cfg = AlgorithmConfig {
                seed: algorithm_seed(seed_base, sample, a),
                record_iterates: record,
                ..base.clone()
            };
            Ok((
                cfg.kind,
                run_multi_start(&exp.problem, Some(mech), &graph, &cfg, &starts)?,
            ))
        })
        .collect()
}

/// Per-start traces of one sample and algorithm.
pub type SampleTraces = Vec<(usize, AlgorithmKind, Vec<Trace>)>;

/// Sweep without writing anything or failing on violations.
pub fn run_sweep(exp: &Experiment) -> Result<(SweepSummary, SampleTraces)> {
    run_sweep_traced(exp, false)
}

fn run_sweep_traced(exp: &Experiment, trace: bool) -> Result<(SweepSummary, SampleTraces)> {
    let (center, slope_source) = resolve_slopes(exp)?;
    let domain = exp.problem.domain();
    let sampling = &exp.config.sampling;
    let reference = certify_minimizers(&sum_objective(&exp.problem), default_grid_points(domain.dim()))?;

    let mut rng = ChaCha8Rng::seed_from_u64(sampling.seed);
    let samples: Vec<Vec<Vec<f64>>> = (0..sampling.sample_count)
        .map(|_| {
            center
                .iter()
                .map(|m| normal_vector(&mut rng, m, sampling.sigma))
                .collect()
        })
        .collect();
    let center_stars: Vec<f64> = center.iter().map(|m| delta_star(m, domain)).collect();

    let results = samples
        .par_iter()
        .enumerate()
        .map(|(k, m_tilde)| -> Result<(SweepRow, SampleTraces)> {
            let deltas: Vec<f64> = match &exp.config.mechanism.deltas {
                Some(d) => d.clone(),
                None => m_tilde
                    .iter()
                    .zip(&center_stars)
                    .map(|(m, s)| s.max(slope_spread(m, domain)))
                    .collect(),
            };
            let mech = Mechanism::new(m_tilde.clone(), deltas.clone(), domain.clone())?;
            let eps = privacy_report(&exp.problem, &mech)?.overall_eps;
            let ub = upper_bound(m_tilde, domain)?;
            let aggregate_ub = aggregate_upper_bound(m_tilde, domain)?;
            let traces = run_algorithms(exp, &mech, sampling.seed, k, trace && k == 0)?;
            let total = slope_sum(m_tilde);
            let (mut condition_max, mut condition_min) = (f64::NEG_INFINITY, f64::INFINITY);
            let mut errors = Vec::new();
            for (kind, ts) in &traces {
                let terminal: Vec<Vec<f64>> = ts.iter().map(|t| t.final_point.clone()).collect();
                for x in &reference {
                    for y in &terminal {
                        let v = necessary_condition_value(&total, x, y);
                        condition_max = condition_max.max(v);
                        condition_min = condition_min.min(v);
                    }
                }
                errors.push(AlgorithmError {
                    kind: *kind,
                    error: empirical_error(&reference, &terminal)?,
                    terminal_points: terminal,
                });
            }
            let kept = if trace && k == 0 {
                traces.into_iter().map(|(kind, ts)| (k, kind, ts)).collect()
            } else {
                Vec::new()
            };
            Ok((
                SweepRow {
                    sample: k,
                    m_tilde: m_tilde.clone(),
                    deltas,
                    eps,
                    ub,
                    aggregate_ub,
                    errors,
                    condition_max,
                    condition_min,
                },
                kept,
            ))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::with_capacity(results.len());
    let mut traces = Vec::new();
    for (row, t) in results {
        rows.push(row);
        traces.extend(t);
    }
    rows.sort_by(|a, b| a.eps.total_cmp(&b.eps).then(a.sample.cmp(&b.sample)));

    let mut dominance_violations = Vec::new();
    let mut aggregate_dominance_violations = Vec::new();
    let (mut condition_checks, mut condition_violations, mut opposite_sign_violations) = (0, 0, 0);
    for row in &rows {
        for e in &row.errors {
            if e.error > row.ub {
                dominance_violations.push(Violation {
                    sample: row.sample,
                    kind: e.kind,
                    error: e.error,
                    bound: row.ub,
                });
            }
            if e.error > row.aggregate_ub {
                aggregate_dominance_violations.push(Violation {
                    sample: row.sample,
                    kind: e.kind,
                    error: e.error,
                    bound: row.aggregate_ub,
                });
            }
            let total = slope_sum(&row.m_tilde);
            for x in &reference {
                for y in &e.terminal_points {
                    let v = necessary_condition_value(&total, x, y);
                    condition_checks += 1;
                    if v > NECESSARY_CONDITION_TOL {
                        condition_violations += 1;
                    }
                    if v < -NECESSARY_CONDITION_TOL {
                        opposite_sign_violations += 1;
                    }
                }
            }
        }
    }
    Ok((
        SweepSummary {
            center_slopes: center,
            slope_source,
            sigma: sampling.sigma,
            seed: sampling.seed,
            reference_optimizers: reference,
            rows,
            dominance_violations,
            aggregate_dominance_violations,
            condition_checks,
            condition_violations,
            opposite_sign_violations,
        },
        traces,
    ))
}

fn join_coords(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}

/// `sample,eps,ub,err_dgd,err_tracking,err_zo,mtilde_1..N`; vector slopes
/// are written with `;` between coordinates.
pub fn sweep_csv(summary: &SweepSummary) -> String {
    let agents = summary.center_slopes.len();
    let mut s = String::from("sample,eps,ub,err_dgd,err_tracking,err_zo");
    for i in 1..=agents {
        write!(s, ",mtilde_{i}").unwrap();
    }
    s.push('\n');
    let cell = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for row in &summary.rows {
        write!(
            s,
            "{},{},{},{},{},{}",
            row.sample,
            row.eps,
            row.ub,
            cell(row.error_of(AlgorithmKind::Dgd)),
            cell(row.error_of(AlgorithmKind::GradientTracking)),
            cell(row.error_of(AlgorithmKind::ZerothOrder)),
        )
        .unwrap();
        for m in &row.m_tilde {
            write!(s, ",{}", join_coords(m)).unwrap();
        }
        s.push('\n');
    }
    s
}

/// Writes `sweep.csv` and `sweep_summary.json`, then fails with a property
/// violation if any row has `e > UB`.
pub fn sweep(exp: &Experiment, out: &Path, trace: bool) -> Result<SweepSummary> {
    let (summary, traces) = run_sweep_traced(exp, trace)?;
    write_text(&out.join("sweep.csv"), &sweep_csv(&summary))?;
    write_json(&out.join("sweep_summary.json"), &summary)?;
    for (sample, kind, ts) in &traces {
        for (s, t) in ts.iter().enumerate() {
            let mut buf = Vec::new();
            t.write_csv(&mut buf).map_err(|source| Error::Io {
                path: "trace buffer".into(),
                source,
            })?;
            let name = format!("trace_sample{sample}_{}_start{}.csv", kind.name(), s + 1);
            write_text(&out.join(name), &String::from_utf8_lossy(&buf))?;
        }
    }
    check_dominance(&summary)?;
    Ok(summary)
}

pub fn check_dominance(summary: &SweepSummary) -> Result<()> {
    if summary.dominance_violations.is_empty() {
        return Ok(());
    }
    let first = &summary.dominance_violations[0];
    Err(Error::Violation(format!(
        "empirical error exceeds the accuracy bound in {} of {} sample/algorithm pairs; first: sample {} ({}) e = {} > UB = {}",
        summary.dominance_violations.len(),
        summary.rows.iter().map(|r| r.errors.len()).sum::<usize>(),
        first.sample,
        first.kind.name(),
        first.error,
        first.bound
    )))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub passed: bool,
    pub properties: Vec<PropertyOutcome>,
}

pub fn run_verify(exp: &Experiment) -> Result<VerifyReport> {
    let v = &exp.config.verify;
    let seed = exp.config.sampling.seed;
    let mut properties = Vec::new();
    if v.properties.is_empty() {
        return Ok(VerifyReport {
            passed: true,
            properties,
        });
    }
    let (slopes, _) = resolve_slopes(exp)?;
    for name in &v.properties {
        let outcome = match name.as_str() {
            "privacy_inequality" => {
                let deltas = resolve_deltas(exp, &slopes);
                let mech = Mechanism::new(slopes.clone(), deltas, exp.problem.domain().clone())?;
                privacy_inequality(&exp.problem, &mech, v.pairs, seed)?
            }
            "inclusion_soundness" => inclusion_soundness(&exp.problem, &slopes, v.subboxes, v.points_per_box, seed)?,
            "remainder_tightness" => remainder_tightness(&exp.problem, v.grid_points)?,
            other => return Err(Error::usage(format!("unknown property {other:?}"))),
        };
        properties.push(outcome);
    }
    Ok(VerifyReport {
        passed: properties.iter().all(|p| p.passed),
        properties,
    })
}

/// Writes `verify.json`; a failed property becomes a violation error.
pub fn verify(exp: &Experiment, out: &Path) -> Result<VerifyReport> {
    let r = run_verify(exp)?;
    write_json(&out.join("verify.json"), &r)?;
    if let Some(p) = r.properties.iter().find(|p| !p.passed) {
        return Err(Error::Violation(format!(
            "property {} failed in {} of {} checks; counterexample: {}",
            p.name,
            p.violations,
            p.checks,
            p.counterexample.as_ref().map(|c| c.to_string()).unwrap_or_default()
        )));
    }
    Ok(r)
}

/// Accuracy quantities at the configured (center) slopes.
pub fn run_accuracy(exp: &Experiment) -> Result<AccuracyReport> {
    let (slopes, _) = resolve_slopes(exp)?;
    let domain = exp.problem.domain();
    let stars: Vec<f64> = slopes.iter().map(|m| delta_star(m, domain)).collect();
    let deltas = resolve_deltas(exp, &slopes);
    let mech = Mechanism::new(slopes.clone(), deltas, domain.clone())?;
    let reference = certify_minimizers(&sum_objective(&exp.problem), default_grid_points(domain.dim()))?;
    let perturbed: Vec<Vec<f64>> = run_algorithms(exp, &mech, exp.config.sampling.seed, usize::MAX >> 16, false)?
        .into_iter()
        .flat_map(|(_, ts)| ts.into_iter().map(|t| t.final_point))
        .collect();
    Ok(AccuracyReport {
        admissible: slopes
            .iter()
            .zip(&stars)
            .map(|(m, d)| admissible_slope(m, *d, domain))
            .collect(),
        delta_star: stars,
        ub: upper_bound(&slopes, domain)?,
        aggregate_ub: aggregate_upper_bound(&slopes, domain)?,
        empirical_error: if perturbed.is_empty() {
            None
        } else {
            Some(empirical_error(&reference, &perturbed)?)
        },
        reference_optimizers: reference,
        perturbed_optimizers: perturbed,
    })
}

/// Design, privacy report, accuracy table, and sweep in one go. The sweep's
/// dominance check decides the result.
pub fn reproduce(exp: &Experiment, out: &Path, trace: bool) -> Result<SweepSummary> {
    design(exp, out)?;
    privacy(exp, out)?;
    write_json(&out.join("accuracy.json"), &run_accuracy(exp)?)?;
    sweep(exp, out, trace)
}
