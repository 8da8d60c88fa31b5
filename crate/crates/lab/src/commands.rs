//! The five subcommands. Each validates its configuration before computing.

use std::path::Path;

use navier_core::bootstrap::{
    predict_regularity, run_bootstrap, BootstrapTrace, ExponentParams, Rule, TraceClass, Verdict,
};
use navier_core::branch::{continue_branch, Branch, SourceTerm};
use navier_core::estimates::{
    check_crucial_integrals, check_fprime_integral, check_l2, evaluate_branch, BranchSupremum, EstimateKind,
};
use navier_core::stability::smallest_stability_eigenvalue;
use navier_core::{NonlinearityFamily, RadialGrid};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::output::{num, slug, write_json, Csv};
use crate::{LabError, Report, RunConfig};

#[derive(Debug, Clone, Serialize)]
pub struct PredictRecord {
    pub family: String,
    #[serde(rename = "N")]
    pub dim: usize,
    pub verdict: Verdict,
    pub rule: Rule,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<BootstrapTrace>,
}

fn prediction(family: &NonlinearityFamily, dim: usize) -> PredictRecord {
    let v = predict_regularity(family, dim);
    PredictRecord { family: family.to_string(), dim, verdict: v.verdict, rule: v.rule, trace: None }
}

pub fn predict(config: &RunConfig) -> Result<Report, LabError> {
    let family = config.family()?;
    if config.dim < 2 {
        return Err(LabError::Usage(format!("N must be at least 2, got {}", config.dim)));
    }
    Ok(Report { record: serde_json::to_value(prediction(&family, config.dim))?, code: 0 })
}

pub fn bootstrap(config: &RunConfig) -> Result<Report, LabError> {
    let family = config.family()?;
    let (alpha, beta) = match (config.alpha, config.beta) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(LabError::Usage("bootstrap needs --alpha and --beta".into())),
    };
    let params =
        ExponentParams::new(config.dim, config.q, alpha, beta).map_err(|e| LabError::Usage(e.to_string()))?;
    let trace = run_bootstrap(params, config.steps).map_err(|e| LabError::Usage(e.to_string()))?;
    let code = if trace.classification == TraceClass::Inconclusive { 3 } else { 0 };
    let mut record = prediction(&family, config.dim);
    record.trace = Some(trace);
    Ok(Report { record: serde_json::to_value(record)?, code })
}

#[derive(Debug, Clone, Serialize)]
pub struct BranchSummary {
    pub family: String,
    #[serde(rename = "N")]
    pub dim: usize,
    pub n: usize,
    pub m_max: f64,
    pub lambda_star_estimate: f64,
    pub fold_detected: bool,
    pub fold_index: Option<usize>,
    pub fold_amplitude: Option<f64>,
    pub points: usize,
    /// Set when continuation stopped early; the files hold what was computed.
    pub partial: bool,
    pub error: Option<String>,
    /// Points whose stability eigenvalue could not be computed (`mu1 = NaN`).
    pub stability_failures: usize,
    pub config: RunConfig,
}

/// A failed branch job: the error, and the summary when artifacts were
/// written.
#[derive(Debug)]
pub struct JobFailure {
    pub summary: Option<BranchSummary>,
    pub error: LabError,
}

fn failure(summary: Option<BranchSummary>, error: LabError) -> Box<JobFailure> {
    Box::new(JobFailure { summary, error })
}

/// Continues the branch, writes `branch.csv` and `summary.json` to `dir`,
/// and returns the summary with the branch. A failed continuation still
/// writes the partial branch before reporting [`LabError::Compute`].
pub fn branch_job(
    family: &NonlinearityFamily,
    dim: usize,
    config: &RunConfig,
    dir: &Path,
) -> Result<(BranchSummary, Branch), Box<JobFailure>> {
    branch_job_with(family, &family.to_string(), dim, config.m_max_for(family), config, dir)
}

/// [`branch_job`] for any source term, labelled `label` in the summary.
pub fn branch_job_with<S: SourceTerm + Sync + ?Sized>(
    source: &S,
    label: &str,
    dim: usize,
    m_max: f64,
    config: &RunConfig,
    dir: &Path,
) -> Result<(BranchSummary, Branch), Box<JobFailure>> {
    let grid = RadialGrid::ball(dim, config.n).map_err(|e| failure(None, LabError::Usage(e.to_string())))?;
    let solver = config.solver().map_err(|e| failure(None, e))?;
    let (branch, error) = match continue_branch(source, &grid, m_max, &solver) {
        Ok(b) => (b, None),
        Err(e) => {
            let msg = e.to_string();
            (e.partial, Some(msg))
        }
    };
    let mu1: Vec<f64> = branch
        .points
        .par_iter()
        .map(|p| smallest_stability_eigenvalue(source, p).map_or(f64::NAN, |r| r.mu1))
        .collect();
    let stability_failures = mu1.iter().filter(|x| x.is_nan()).count();

    let mut csv = Csv::new(&["m", "lambda", "u_center", "max_u", "mu1", "residual_norm", "newton_iters"]);
    for (p, mu) in branch.points.iter().zip(&mu1) {
        csv.row(&[
            num(p.m),
            num(p.lambda),
            num(p.u_center()),
            num(p.max_u()),
            num(*mu),
            num(p.residual_norm),
            p.newton_iters.to_string(),
        ]);
    }
    let summary = BranchSummary {
        family: label.to_string(),
        dim,
        n: config.n,
        m_max,
        lambda_star_estimate: branch.lambda_star_estimate,
        fold_detected: branch.fold_detected,
        fold_index: branch.fold_index,
        fold_amplitude: branch.fold_amplitude,
        points: branch.points.len(),
        partial: error.is_some(),
        error: error.clone(),
        stability_failures,
        config: config.clone(),
    };
    let written = (|| {
        csv.write(&dir.join("branch.csv"))?;
        if config.dump_fields {
            for (k, p) in branch.points.iter().enumerate() {
                let mut f = Csv::new(&["r", "u", "v"]);
                for i in 0..p.grid.len() {
                    f.row(&[num(p.grid.node(i)), num(p.u.values[i]), num(p.v.values[i])]);
                }
                f.write(&dir.join("fields").join(format!("point_{k:05}.csv")))?;
            }
        }
        write_json(&dir.join("summary.json"), &summary)
    })();
    if let Err(e) = written {
        return Err(failure(Some(summary), e));
    }
    match error {
        Some(msg) => Err(failure(Some(summary), LabError::Compute(msg))),
        None if stability_failures > 0 => {
            let msg = format!("stability eigenvalue failed at {stability_failures} points");
            Err(failure(Some(summary), LabError::Compute(msg)))
        }
        None => Ok((summary, branch)),
    }
}

pub fn branch(config: &RunConfig) -> Result<Report, LabError> {
    let family = config.family()?;
    config.validate_grid()?;
    let (summary, _) = branch_job(&family, config.dim, config, &config.out).map_err(|f| f.error)?;
    Ok(Report { record: serde_json::to_value(summary)?, code: 0 })
}

#[derive(Debug, Clone, Serialize)]
struct EstimateCount {
    estimate: EstimateKind,
    checked: usize,
    satisfied: usize,
    min_margin: f64,
}

#[derive(Debug, Clone, Serialize)]
struct SupremumRecord {
    name: String,
    sup: f64,
    trend: f64,
}

impl From<BranchSupremum> for SupremumRecord {
    fn from(s: BranchSupremum) -> Self {
        Self { name: s.name.tag().to_string(), sup: s.sup, trend: s.trend }
    }
}

pub fn verify(config: &RunConfig) -> Result<Report, LabError> {
    let family = config.family()?;
    config.validate_grid()?;
    let (summary, branch) = branch_job(&family, config.dim, config, &config.out).map_err(|f| f.error)?;
    let rows = evaluate_branch(&family, &branch).map_err(|e| LabError::Compute(e.to_string()))?;

    let mut csv = Csv::new(&[
        "estimate",
        "m",
        "lambda",
        "lhs",
        "rhs",
        "margin",
        "tol",
        "satisfied",
        "pre_fold",
        "low_confidence",
    ]);
    for r in &rows {
        csv.row(&[
            r.name.tag().to_string(),
            num(r.m),
            num(r.lambda),
            num(r.lhs),
            num(r.rhs),
            num(r.margin),
            num(r.tol),
            r.satisfied.to_string(),
            r.pre_fold.to_string(),
            r.low_confidence.to_string(),
        ]);
    }
    csv.write(&config.out.join("estimates.csv"))?;

    let mut counts: Vec<EstimateCount> = Vec::new();
    for r in rows.iter().filter(|r| r.pre_fold) {
        let entry = match counts.iter_mut().find(|c| c.estimate == r.name) {
            Some(c) => c,
            None => {
                counts.push(EstimateCount { estimate: r.name, checked: 0, satisfied: 0, min_margin: f64::INFINITY });
                counts.last_mut().unwrap()
            }
        };
        entry.checked += 1;
        entry.satisfied += usize::from(r.satisfied);
        entry.min_margin = entry.min_margin.min(r.margin);
    }
    let all_satisfied = counts.iter().all(|c| c.checked == c.satisfied);

    // Branch suprema, each only where its hypotheses hold.
    let mut suprema: Vec<SupremumRecord> = Vec::new();
    if let Ok((crucial, f_int)) = check_crucial_integrals(&family, &branch) {
        suprema.push(crucial.into());
        suprema.push(f_int.into());
    }
    if let Ok(s) = check_l2(&family, &branch) {
        suprema.push(s.into());
    }
    if let Ok(s) = check_fprime_integral(&family, &branch) {
        suprema.push(s.into());
    }

    let verdict = json!({
        "family": family.to_string(),
        "N": config.dim,
        "n": config.n,
        "fold_detected": branch.fold_detected,
        "lambda_star_estimate": branch.lambda_star_estimate,
        "pre_fold_points": branch.pre_fold_len(),
        "all_pre_fold_satisfied": all_satisfied,
        "estimates": counts,
        "suprema": suprema,
        "prediction": prediction(&family, config.dim),
        "config": summary.config,
    });
    write_json(&config.out.join("verdict.json"), &verdict)?;
    Ok(Report { record: verdict, code: if all_satisfied { 0 } else { 3 } })
}

#[derive(Debug, Clone, Serialize)]
struct SweepCell {
    family: String,
    #[serde(rename = "N")]
    dim: usize,
    lambda_star_estimate: Option<f64>,
    fold_detected: Option<bool>,
    fold_amplitude: Option<f64>,
    verdict: Verdict,
    rule: Rule,
    status: String,
}

/// Branches for every (family, N) cell on a pool of `jobs` workers; each
/// cell writes to its own directory. Stops three points after the fold
/// unless `stop_after_fold` is set.
pub fn sweep(config: &RunConfig) -> Result<Report, LabError> {
    let families = config.families()?;
    let dims = config.dims()?;
    let mut config = config.clone();
    config.stop_after_fold = config.stop_after_fold.or(Some(3));
    config.validate_grid()?;
    config.solver()?;
    let cells: Vec<(NonlinearityFamily, usize)> =
        families.iter().flat_map(|f| dims.clone().map(move |d| (*f, d))).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs)
        .build()
        .map_err(|e| LabError::Usage(format!("cannot build worker pool: {e}")))?;
    let root = config.out.join("sweep");
    let results: Vec<SweepCell> = pool.install(|| {
        cells
            .par_iter()
            .map(|(family, dim)| {
                let dir = root.join(format!("{}_N{dim}", slug(&family.to_string())));
                let p = prediction(family, *dim);
                let cell = |s: Option<&BranchSummary>, status: String| SweepCell {
                    family: family.to_string(),
                    dim: *dim,
                    lambda_star_estimate: s.map(|s| s.lambda_star_estimate),
                    fold_detected: s.map(|s| s.fold_detected),
                    fold_amplitude: s.and_then(|s| s.fold_amplitude),
                    verdict: p.verdict,
                    rule: p.rule,
                    status,
                };
                match branch_job(family, *dim, &config, &dir) {
                    Ok((s, _)) => cell(Some(&s), "ok".into()),
                    Err(f) => cell(f.summary.as_ref(), format!("failed: {}", f.error)),
                }
            })
            .collect()
    });

    let mut csv = Csv::new(&["family", "N", "lambda_star_estimate", "fold_detected", "fold_amplitude", "verdict", "rule", "status"]);
    for c in &results {
        let opt = |x: Option<f64>| x.map_or(String::new(), num);
        csv.row(&[
            c.family.clone(),
            c.dim.to_string(),
            opt(c.lambda_star_estimate),
            c.fold_detected.map_or(String::new(), |b| b.to_string()),
            opt(c.fold_amplitude),
            format!("{:?}", c.verdict),
            c.rule.tag().to_string(),
            if c.status == "ok" { "ok".into() } else { "failed".into() },
        ]);
    }
    csv.write(&root.join("sweep.csv"))?;
    let failed = results.iter().filter(|c| c.status != "ok").count();
    let record = json!({ "cells": results, "failed": failed, "config": config });
    write_json(&root.join("sweep.json"), &record)?;
    if failed > 0 {
        return Err(LabError::Compute(format!("{failed} sweep cells failed; see {}", root.join("sweep.json").display())));
    }
    Ok(Report { record, code: 0 })
}
