//! Brute-force optimal-subset oracle and the synthetic-experiment harness
//! with its support-recovery metrics.

use itertools::Itertools;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datagen::{ar1_design, derive_seed, logistic_responses, rademacher_sparse_beta};
use crate::error::{Error, Result};
use crate::model::{Algorithm, Dataset, LabelEncoding, ParamVector, SelectionTrace, Support};
use crate::objective::ObjectiveSpec;
use crate::select::{
    foba_select_with, forward_stepwise_with, oblivious_select_with, omp_select_with, SelectOptions,
};
use crate::solver::{maximize_restricted, SetFunctionOracle, SolverConfig};

/// Enumeration guard for the brute-force oracle.
pub const BRUTE_FORCE_GUARD: u64 = 1_000_000;

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i + 1) as u128;
    }
    acc
}

/// Exhaustive argmax of `f` over all k-subsets; ties resolve to the
/// lexicographically smallest support. `k = 0` returns the empty set.
pub fn brute_force_best_subset(
    spec: &ObjectiveSpec,
    data: &Dataset,
    k: usize,
    config: &SolverConfig,
) -> Result<(Support, f64)> {
    let p = data.p();
    if k > p {
        return Err(Error::InvalidParameter(format!(
            "subset size {k} exceeds p = {p}"
        )));
    }
    if k == 0 {
        return Ok((Support::empty(), 0.0));
    }
    let count = binomial(p, k);
    if count > u128::from(BRUTE_FORCE_GUARD) {
        return Err(Error::GuardExceeded {
            what: format!("brute force C({p},{k})"),
            limit: BRUTE_FORCE_GUARD,
            actual: count.min(u128::from(u64::MAX)) as u64,
        });
    }
    let oracle = SetFunctionOracle::new(spec, data, config)?;
    let mut best: Option<(Support, f64)> = None;
    for combo in (0..p).combinations(k) {
        let support: Support = combo.into_iter().collect();
        let value = oracle.eval(&support)?;
        if best.as_ref().is_none_or(|(_, v)| value > *v) {
            best = Some((support, value));
        }
    }
    Ok(best.expect("at least one subset"))
}

/// AUC of a partial ranking against a ground-truth support.
///
/// Features appear in selection order; everything unranked shares the last
/// (tied) position, earning half-credit against unranked ground-truth
/// features. The universe is `0..p` minus `excluded` (forced indices carry
/// no membership information).
pub fn auc_for_ranking(ranking: &[usize], p: usize, truth: &Support, excluded: &Support) -> f64 {
    let ranked: Vec<bool> = {
        let mut in_ranking = vec![false; p];
        for &j in ranking {
            in_ranking[j] = true;
        }
        in_ranking
    };
    let mut unranked_pos = 0usize;
    let mut unranked_neg = 0usize;
    for j in 0..p {
        if excluded.contains(j) || ranked[j] {
            continue;
        }
        if truth.contains(j) {
            unranked_pos += 1;
        } else {
            unranked_neg += 1;
        }
    }
    let total_pos = truth.len();
    let total_neg = p - excluded.len() - total_pos;
    if total_pos == 0 || total_neg == 0 {
        return 1.0;
    }

    // Walk the ranking once, counting negatives seen so far; a ranked
    // positive beats every ranked negative after it plus every unranked
    // negative. Unranked positives tie (half credit) with unranked negatives.
    let mut wins = 0.0f64;
    let ranked_negs_total = ranking.iter().filter(|j| !truth.contains(**j)).count();
    let mut ranked_negs_seen = 0usize;
    for &j in ranking {
        if truth.contains(j) {
            wins += (ranked_negs_total - ranked_negs_seen + unranked_neg) as f64;
        } else {
            ranked_negs_seen += 1;
        }
    }
    wins += 0.5 * unranked_pos as f64 * unranked_neg as f64;
    wins / (total_pos as f64 * total_neg as f64)
}

/// Support-recovery metrics for a trace: AUC of the full selection-order
/// ranking, and recall over ranking prefixes (index `s−1` holds recall at
/// sparsity `s`), which is nondecreasing by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportRecovery {
    pub auc: f64,
    pub recall_curve: Vec<f64>,
}

pub fn support_recovery_metrics(
    trace: &SelectionTrace,
    truth: &Support,
) -> Result<SupportRecovery> {
    if truth.is_empty() {
        return Err(Error::InvalidParameter(
            "ground-truth support must be nonempty".into(),
        ));
    }
    truth.validate_for(trace.p)?;
    if !truth.is_disjoint(&trace.forced) {
        return Err(Error::InvalidParameter(
            "ground-truth support overlaps forced indices".into(),
        ));
    }
    let ranking = trace.selection_order();
    let auc = auc_for_ranking(&ranking, trace.p, truth, &trace.forced);
    let mut recall_curve = Vec::with_capacity(ranking.len());
    let mut hits = 0usize;
    for &j in &ranking {
        if truth.contains(j) {
            hits += 1;
        }
        recall_curve.push(hits as f64 / truth.len() as f64);
    }
    Ok(SupportRecovery { auc, recall_curve })
}

/// Fraction of test points whose thresholded prediction
/// `sigmoid(⟨x, β⟩) ≥ 1/2` matches the label; exact ties predict 1.
pub fn generalization_accuracy(
    spec: &ObjectiveSpec,
    beta: &ParamVector,
    test: &Dataset,
) -> Result<f64> {
    if !spec.is_logistic() {
        return Err(Error::InvalidParameter(
            "generalization accuracy is defined for logistic objectives".into(),
        ));
    }
    spec.check_data(test)?;
    if beta.p() != test.p() {
        return Err(Error::DimensionMismatch(format!(
            "beta has length {} but the test design has {} columns",
            beta.p(),
            test.p()
        )));
    }
    let margins = test.x().dot(beta.beta());
    let correct = margins
        .iter()
        .zip(test.y().iter())
        .filter(|(m, y)| {
            let pred = if **m >= 0.0 { 1.0 } else { 0.0 };
            pred == **y
        })
        .count();
    Ok(correct as f64 / test.n() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    /// `l(β̂ˢ) − l(0)` on the training data.
    NormObj,
    Auc,
    Recall,
    TestAcc,
}

pub const ALL_METRICS: [MetricKind; 4] = [
    MetricKind::NormObj,
    MetricKind::Auc,
    MetricKind::Recall,
    MetricKind::TestAcc,
];

/// One long-format record: (run, algo, s, metric, value).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub run: usize,
    pub algo: Algorithm,
    pub s: usize,
    pub metric: MetricKind,
    pub value: f64,
}

/// Mean and standard error over runs for one (algo, s, metric) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub algo: Algorithm,
    pub s: usize,
    pub metric: MetricKind,
    pub mean: f64,
    pub stderr: f64,
    pub n_runs: usize,
}

/// Full configuration of the synthetic experiment; the defaults reproduce
/// the AR(1) logistic setting (n = 600 train and test, p = 200, true support
/// 50, α = 0.3, innovation variance 5, ‖β‖₂² = 5, 20 runs, sparsity 1..=70,
/// bias column included).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub n: usize,
    pub p: usize,
    pub k_true: usize,
    pub alpha: f64,
    pub sigma2: f64,
    pub beta_norm2: f64,
    pub runs: usize,
    pub s_max: usize,
    /// Sparsity levels to report; `None` means `1..=s_max`.
    pub s_grid: Option<Vec<usize>>,
    pub test_n: usize,
    pub master_seed: u64,
    pub add_bias: bool,
    pub objective: ObjectiveSpec,
    pub algorithms: Vec<Algorithm>,
    pub solver: SolverConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            n: 600,
            p: 200,
            k_true: 50,
            alpha: 0.3,
            sigma2: 5.0,
            beta_norm2: 5.0,
            runs: 20,
            s_max: 70,
            s_grid: None,
            test_n: 600,
            master_seed: 1,
            add_bias: true,
            objective: ObjectiveSpec::logistic(),
            algorithms: vec![
                Algorithm::Oblivious,
                Algorithm::ForwardStepwise,
                Algorithm::Omp,
                Algorithm::Foba,
            ],
            solver: SolverConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_true == 0 || self.k_true > self.p {
            return Err(Error::InvalidParameter(
                "k_true must satisfy 1 <= k_true <= p".into(),
            ));
        }
        if self.s_max == 0 || self.s_max > self.p {
            return Err(Error::InvalidParameter(
                "s_max must satisfy 1 <= s_max <= p".into(),
            ));
        }
        if self.runs == 0 {
            return Err(Error::InvalidParameter("runs must be >= 1".into()));
        }
        if !self.objective.is_logistic() {
            return Err(Error::InvalidParameter(
                "the experiment harness draws logistic responses; use a logistic objective".into(),
            ));
        }
        if let Some(grid) = &self.s_grid {
            if grid.iter().any(|s| *s == 0 || *s > self.s_max) {
                return Err(Error::InvalidParameter(
                    "s_grid entries must lie in 1..=s_max".into(),
                ));
            }
        }
        self.solver.validate()?;
        self.objective.validate()
    }

    pub fn grid(&self) -> Vec<usize> {
        match &self.s_grid {
            Some(g) => {
                let mut g = g.clone();
                g.sort_unstable();
                g.dedup();
                g
            }
            None => (1..=self.s_max).collect(),
        }
    }
}

/// Long-format rows plus per-cell summaries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResults {
    pub config: ExperimentConfig,
    pub rows: Vec<MetricRow>,
    pub summary: Vec<SummaryRow>,
}

impl ExperimentResults {
    /// Summary cell lookup.
    pub fn cell(&self, algo: Algorithm, s: usize, metric: MetricKind) -> Option<&SummaryRow> {
        self.summary
            .iter()
            .find(|r| r.algo == algo && r.s == s && r.metric == metric)
    }

    /// Per-run values of one (algo, s, metric) cell, in run order.
    pub fn values(&self, algo: Algorithm, s: usize, metric: MetricKind) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.algo == algo && r.s == s && r.metric == metric)
            .map(|r| r.value)
            .collect()
    }
}

/// Run the seeded experiment: for every run, generate train/test data,
/// execute each requested algorithm out to `s_max`, and record the
/// normalized objective, ranking AUC, recall, and test accuracy at every
/// sparsity in the grid. Runs execute in parallel; output ordering and
/// values are independent of the thread count.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResults> {
    config.validate()?;
    let grid = config.grid();

    let per_run: Vec<Vec<MetricRow>> = (0..config.runs)
        .into_par_iter()
        .map(|run| run_one(config, run, &grid))
        .collect::<Result<_>>()?;

    let rows: Vec<MetricRow> = per_run.into_iter().flatten().collect();
    let mut summary = Vec::new();
    for &algo in &config.algorithms {
        for &s in &grid {
            for metric in ALL_METRICS {
                let values: Vec<f64> = rows
                    .iter()
                    .filter(|r| r.algo == algo && r.s == s && r.metric == metric)
                    .map(|r| r.value)
                    .collect();
                let n = values.len();
                let mean = values.iter().sum::<f64>() / n as f64;
                let stderr = if n > 1 {
                    let var =
                        values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
                    (var / n as f64).sqrt()
                } else {
                    0.0
                };
                summary.push(SummaryRow {
                    algo,
                    s,
                    metric,
                    mean,
                    stderr,
                    n_runs: n,
                });
            }
        }
    }
    Ok(ExperimentResults {
        config: config.clone(),
        rows,
        summary,
    })
}

fn run_one(config: &ExperimentConfig, run: usize, grid: &[usize]) -> Result<Vec<MetricRow>> {
    let tag = (run as u64) * 8;
    let x_train = ar1_design(
        config.n,
        config.p,
        config.alpha,
        config.sigma2,
        derive_seed(config.master_seed, tag),
    )?;
    let beta_true = rademacher_sparse_beta(
        config.p,
        config.k_true,
        config.beta_norm2,
        derive_seed(config.master_seed, tag + 1),
    )?;
    let y_train = logistic_responses(&x_train, &beta_true, derive_seed(config.master_seed, tag + 2))?;
    let x_test = ar1_design(
        config.test_n,
        config.p,
        config.alpha,
        config.sigma2,
        derive_seed(config.master_seed, tag + 3),
    )?;
    let y_test = logistic_responses(&x_test, &beta_true, derive_seed(config.master_seed, tag + 4))?;

    let mut train = Dataset::new(x_train, y_train, LabelEncoding::Binary01)?;
    let mut test = Dataset::new(x_test, y_test, LabelEncoding::Binary01)?;
    let mut options = SelectOptions {
        forced: Support::empty(),
        seed: derive_seed(config.master_seed, tag),
    };
    if config.add_bias {
        train = train.with_bias_column();
        test = test.with_bias_column();
        options.forced = Support::singleton(config.p);
    }
    let truth = beta_true.support().clone();
    let spec = &config.objective;

    let mut rows = Vec::with_capacity(config.algorithms.len() * grid.len() * ALL_METRICS.len());
    for &algo in &config.algorithms {
        let trace = match algo {
            Algorithm::Oblivious => {
                oblivious_select_with(spec, &train, config.s_max, &config.solver, &options)?
            }
            Algorithm::ForwardStepwise => {
                forward_stepwise_with(spec, &train, config.s_max, &config.solver, &options)?
            }
            Algorithm::Omp => {
                omp_select_with(spec, &train, config.s_max, &config.solver, &options)?
            }
            Algorithm::Foba => {
                foba_select_with(spec, &train, config.s_max, &config.solver, &options)?
            }
        };
        let ranking = trace.selection_order();
        // Baseline state for sparsity levels the trace never reached.
        let baseline = if trace.steps.is_empty() {
            let fit = maximize_restricted(spec, &train, &trace.forced, &config.solver)?;
            Some((fit.beta, trace.baseline_f))
        } else {
            None
        };
        for &s in grid {
            let (beta_s, f_s) = match trace.state_at_size(s) {
                Some(step) => (&step.beta, step.f_value),
                // FoBa may stop early; carry the final state forward.
                None => match trace.final_step() {
                    Some(step) => (&step.beta, step.f_value),
                    None => {
                        let (b, f) = baseline.as_ref().expect("baseline computed");
                        (b, *f)
                    }
                },
            };
            let prefix = &ranking[..ranking.len().min(s)];
            let auc = auc_for_ranking(prefix, trace.p, &truth, &trace.forced);
            let hits = prefix.iter().filter(|j| truth.contains(**j)).count();
            let recall = hits as f64 / truth.len() as f64;
            let test_acc = generalization_accuracy(spec, beta_s, &test)?;
            for (metric, value) in [
                (MetricKind::NormObj, f_s),
                (MetricKind::Auc, auc),
                (MetricKind::Recall, recall),
                (MetricKind::TestAcc, test_acc),
            ] {
                rows.push(MetricRow {
                    run,
                    algo,
                    s,
                    metric,
                    value,
                });
            }
        }
    }
    Ok(rows)
}
