//! The four support-selection algorithms, each emitting a
//! [`SelectionTrace`].
//!
//! Ties are always broken toward the smallest index, and candidate
//! evaluations are parallelized with an order-independent argmax reduction,
//! so a run is deterministic for a fixed (dataset, objective, config)
//! regardless of thread count. Forward algorithms warm-start each refit from
//! the previous coefficients (zero-padded on the new coordinate); the fixed
//! point is unchanged for these concave objectives.

use ndarray::Array1;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{
    Algorithm, Dataset, ParamVector, SelectionTrace, StepAction, Support, TraceStep,
};
use crate::objective::ObjectiveSpec;
use crate::solver::{maximize_restricted_warm, SolverConfig};

/// Options shared by all selection entry points.
#[derive(Debug, Clone, Default)]
pub struct SelectOptions {
    /// Indices included in every refit and exempt from selection (a bias
    /// column, typically). They do not count toward the sparsity target.
    pub forced: Support,
    /// Recorded in the trace for provenance; not used by the algorithms.
    pub seed: u64,
}

/// Rank features by their individual improvement `f({i})` and keep the top k.
pub fn oblivious_select(
    spec: &ObjectiveSpec,
    data: &Dataset,
    k: usize,
    config: &SolverConfig,
) -> Result<SelectionTrace> {
    oblivious_select_with(spec, data, k, config, &SelectOptions::default())
}

pub fn oblivious_select_with(
    spec: &ObjectiveSpec,
    data: &Dataset,
    k: usize,
    config: &SolverConfig,
    options: &SelectOptions,
) -> Result<SelectionTrace> {
    let ctx = Context::new(spec, data, config, options, k)?;
    let (baseline_beta, baseline_f) = ctx.baseline()?;

    // Singleton scores relative to the baseline, in parallel.
    let scored = ctx.evaluate_candidates(&Support::empty(), &baseline_beta, &ctx.candidates())?;
    let mut ranked: Vec<&Candidate> = scored.iter().collect();
    ranked.sort_by(|a, b| {
        b.f_value
            .partial_cmp(&a.f_value)
            .expect("finite f values")
            .then(a.index.cmp(&b.index))
    });

    // Jointly refit each prefix of the ranking so the trace carries f of the
    // selected set at every sparsity level.
    let mut steps = Vec::with_capacity(k);
    let mut selected = Support::empty();
    let mut beta = baseline_beta;
    let mut prev_f = baseline_f;
    for (i, cand) in ranked.iter().take(k).enumerate() {
        selected = selected.with(cand.index);
        let (new_beta, f) = ctx.refit(&selected, Some(&beta))?;
        steps.push(TraceStep {
            iteration: i + 1,
            action: StepAction::Add(cand.index),
            support: selected.clone(),
            beta: new_beta.clone(),
            f_value: f,
            marginal_gain: f - prev_f,
        });
        beta = new_beta;
        prev_f = f;
    }
    Ok(ctx.trace(Algorithm::Oblivious, baseline_f, steps))
}

/// At each of `r` iterations, add the feature whose full refit most improves
/// `f` (nested-model marginal gain).
pub fn forward_stepwise(
    spec: &ObjectiveSpec,
    data: &Dataset,
    r: usize,
    config: &SolverConfig,
) -> Result<SelectionTrace> {
    forward_stepwise_with(spec, data, r, config, &SelectOptions::default())
}

pub fn forward_stepwise_with(
    spec: &ObjectiveSpec,
    data: &Dataset,
    r: usize,
    config: &SolverConfig,
    options: &SelectOptions,
) -> Result<SelectionTrace> {
    let ctx = Context::new(spec, data, config, options, r)?;
    let (baseline_beta, baseline_f) = ctx.baseline()?;

    let mut steps = Vec::with_capacity(r);
    let mut selected = Support::empty();
    let mut beta = baseline_beta;
    let mut prev_f = baseline_f;
    for i in 0..r {
        let candidates = ctx.remaining(&selected);
        let evaluated = ctx.evaluate_candidates(&selected, &beta, &candidates)?;
        let best = argmax(&evaluated).ok_or_else(|| {
            Error::InvalidParameter(format!("no candidates left at iteration {}", i + 1))
        })?;
        selected = selected.with(best.index);
        steps.push(TraceStep {
            iteration: i + 1,
            action: StepAction::Add(best.index),
            support: selected.clone(),
            beta: best.beta.clone(),
            f_value: best.f_value,
            marginal_gain: best.f_value - prev_f,
        });
        prev_f = best.f_value;
        beta = best.beta.clone();
    }
    Ok(ctx.trace(Algorithm::ForwardStepwise, baseline_f, steps))
}

/// At each of `r` iterations, add the feature with the largest absolute
/// gradient coordinate at the current restricted optimum, then refit.
pub fn omp_select(
    spec: &ObjectiveSpec,
    data: &Dataset,
    r: usize,
    config: &SolverConfig,
) -> Result<SelectionTrace> {
    omp_select_with(spec, data, r, config, &SelectOptions::default())
}

pub fn omp_select_with(
    spec: &ObjectiveSpec,
    data: &Dataset,
    r: usize,
    config: &SolverConfig,
    options: &SelectOptions,
) -> Result<SelectionTrace> {
    let ctx = Context::new(spec, data, config, options, r)?;
    let (baseline_beta, baseline_f) = ctx.baseline()?;

    let mut steps = Vec::with_capacity(r);
    let mut selected = Support::empty();
    let mut beta = baseline_beta;
    let mut prev_f = baseline_f;
    for i in 0..r {
        let residual: Array1<f64> = spec.gradient(data, &beta)?;
        let mut best: Option<(usize, f64)> = None;
        for j in ctx.remaining(&selected) {
            let score = residual[j].abs();
            if best.is_none_or(|(_, s)| score > s) {
                best = Some((j, score));
            }
        }
        let (j, _) = best.ok_or_else(|| {
            Error::InvalidParameter(format!("no candidates left at iteration {}", i + 1))
        })?;
        selected = selected.with(j);
        let (new_beta, f) = ctx.refit(&selected, Some(&beta))?;
        steps.push(TraceStep {
            iteration: i + 1,
            action: StepAction::Add(j),
            support: selected.clone(),
            beta: new_beta.clone(),
            f_value: f,
            marginal_gain: f - prev_f,
        });
        beta = new_beta;
        prev_f = f;
    }
    Ok(ctx.trace(Algorithm::Omp, baseline_f, steps))
}

/// Forward stepwise with a backward pass: after each forward step with
/// marginal gain `g`, repeatedly remove the feature whose removal decreases
/// `f` the least, as long as that decrease is below `g/2` (smallest index on
/// ties). Dropped features may re-enter later. Stops at `|S| = k` or when the
/// best forward gain falls to the solver tolerance; errors out if the total
/// number of add/drop steps exceeds `10·k`.
pub fn foba_select(
    spec: &ObjectiveSpec,
    data: &Dataset,
    k: usize,
    config: &SolverConfig,
) -> Result<SelectionTrace> {
    foba_select_with(spec, data, k, config, &SelectOptions::default())
}

pub fn foba_select_with(
    spec: &ObjectiveSpec,
    data: &Dataset,
    k: usize,
    config: &SolverConfig,
    options: &SelectOptions,
) -> Result<SelectionTrace> {
    let ctx = Context::new(spec, data, config, options, k)?;
    let (baseline_beta, baseline_f) = ctx.baseline()?;
    let budget = 10 * k;

    let mut steps = Vec::new();
    let mut selected = Support::empty();
    let mut beta = baseline_beta;
    let mut prev_f = baseline_f;
    let mut total_steps = 0usize;
    let mut iteration = 0usize;

    while selected.len() < k {
        // Forward step.
        let candidates = ctx.remaining(&selected);
        let evaluated = ctx.evaluate_candidates(&selected, &beta, &candidates)?;
        let Some(best) = argmax(&evaluated) else {
            break;
        };
        let gain = best.f_value - prev_f;
        if gain <= config.grad_tol {
            break;
        }
        total_steps += 1;
        if total_steps > budget {
            return Err(Error::NonTermination { limit: budget });
        }
        iteration += 1;
        selected = selected.with(best.index);
        steps.push(TraceStep {
            iteration,
            action: StepAction::Add(best.index),
            support: selected.clone(),
            beta: best.beta.clone(),
            f_value: best.f_value,
            marginal_gain: gain,
        });
        beta = best.beta.clone();
        prev_f = best.f_value;

        // Backward passes against half the latest forward gain.
        while !selected.is_empty() {
            let members: Vec<usize> = selected.iter().copied().collect();
            let removals: Vec<Candidate> = members
                .par_iter()
                .map(|&j| {
                    let without = selected.without(j);
                    let (b, f) = ctx.refit(&without, Some(&beta))?;
                    Ok(Candidate {
                        index: j,
                        beta: b,
                        f_value: f,
                    })
                })
                .collect::<Result<_>>()?;
            // Most removable first: smallest decrease, then smallest index.
            let cheapest = removals
                .iter()
                .min_by(|a, b| {
                    let cost_a = prev_f - a.f_value;
                    let cost_b = prev_f - b.f_value;
                    cost_a
                        .partial_cmp(&cost_b)
                        .expect("finite f values")
                        .then(a.index.cmp(&b.index))
                })
                .expect("selected set is nonempty");
            if prev_f - cheapest.f_value >= gain / 2.0 {
                break;
            }
            total_steps += 1;
            if total_steps > budget {
                return Err(Error::NonTermination { limit: budget });
            }
            iteration += 1;
            selected = selected.without(cheapest.index);
            steps.push(TraceStep {
                iteration,
                action: StepAction::Drop(cheapest.index),
                support: selected.clone(),
                beta: cheapest.beta.clone(),
                f_value: cheapest.f_value,
                marginal_gain: cheapest.f_value - prev_f,
            });
            beta = cheapest.beta.clone();
            prev_f = cheapest.f_value;
        }
    }
    Ok(ctx.trace(Algorithm::Foba, baseline_f, steps))
}

struct Candidate {
    index: usize,
    beta: ParamVector,
    f_value: f64,
}

/// Largest `f_value`; exact ties resolve to the smallest index because the
/// candidates are evaluated in ascending index order.
fn argmax(candidates: &[Candidate]) -> Option<&Candidate> {
    let mut best: Option<&Candidate> = None;
    for c in candidates {
        if best.is_none_or(|b| c.f_value > b.f_value) {
            best = Some(c);
        }
    }
    best
}

struct Context<'a> {
    spec: &'a ObjectiveSpec,
    data: &'a Dataset,
    config: &'a SolverConfig,
    forced: &'a Support,
    seed: u64,
    l0: f64,
}

impl<'a> Context<'a> {
    fn new(
        spec: &'a ObjectiveSpec,
        data: &'a Dataset,
        config: &'a SolverConfig,
        options: &'a SelectOptions,
        k: usize,
    ) -> Result<Self> {
        spec.validate()?;
        config.validate()?;
        spec.check_data(data)?;
        options.forced.validate_for(data.p())?;
        let selectable = data.p() - options.forced.len();
        if k == 0 || k > selectable {
            return Err(Error::InvalidParameter(format!(
                "target sparsity {k} must satisfy 1 <= k <= {selectable} selectable features"
            )));
        }
        Ok(Context {
            spec,
            data,
            config,
            forced: &options.forced,
            seed: options.seed,
            l0: spec.value_at_zero(data)?,
        })
    }

    fn candidates(&self) -> Vec<usize> {
        (0..self.data.p())
            .filter(|j| !self.forced.contains(*j))
            .collect()
    }

    fn remaining(&self, selected: &Support) -> Vec<usize> {
        (0..self.data.p())
            .filter(|j| !self.forced.contains(*j) && !selected.contains(*j))
            .collect()
    }

    /// Refit over `selected ∪ forced`; returns the coefficients and
    /// `f = l(β) − l(0)`.
    fn refit(&self, selected: &Support, warm: Option<&ParamVector>) -> Result<(ParamVector, f64)> {
        let full = selected.union(self.forced);
        if full.is_empty() {
            return Ok((ParamVector::zeros(self.data.p()), 0.0));
        }
        let fit = maximize_restricted_warm(self.spec, self.data, &full, warm, self.config)?;
        Ok((fit.beta, fit.value - self.l0))
    }

    fn baseline(&self) -> Result<(ParamVector, f64)> {
        self.refit(&Support::empty(), None)
    }

    fn evaluate_candidates(
        &self,
        selected: &Support,
        warm: &ParamVector,
        candidates: &[usize],
    ) -> Result<Vec<Candidate>> {
        candidates
            .par_iter()
            .map(|&j| {
                let (beta, f_value) = self.refit(&selected.with(j), Some(warm))?;
                Ok(Candidate {
                    index: j,
                    beta,
                    f_value,
                })
            })
            .collect()
    }

    fn trace(&self, algorithm: Algorithm, baseline_f: f64, steps: Vec<TraceStep>) -> SelectionTrace {
        SelectionTrace::new(
            algorithm,
            *self.spec,
            self.seed,
            self.data.p(),
            self.forced.clone(),
            baseline_f,
            steps,
        )
    }
}
