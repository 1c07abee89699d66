//! Validated domain types shared by every other module.
//!
//! All types are immutable value objects after construction and safe to share
//! across threads. Construction is the validation point: a `Dataset`,
//! `Support`, `ParamVector`, or `SelectionTrace` obtained from this module
//! (including via JSON deserialization) satisfies its invariants.

use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objective::ObjectiveSpec;
use crate::solver::DEFAULT_GRAD_TOL;

/// Schema version stamped into every JSON artifact this crate writes.
pub const SCHEMA_VERSION: u32 = 1;

/// How the response vector is encoded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelEncoding {
    /// Arbitrary real responses.
    Real,
    /// Every response must be exactly 0.0 or 1.0 (required by logistic fits).
    Binary01,
}

/// Design matrix (rows = observations) plus response vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DatasetRepr", into = "DatasetRepr")]
pub struct Dataset {
    x: Array2<f64>,
    y: Array1<f64>,
    label_encoding: LabelEncoding,
}

#[derive(Serialize, Deserialize)]
struct DatasetRepr {
    x: Vec<Vec<f64>>,
    y: Vec<f64>,
    label_encoding: LabelEncoding,
}

impl From<Dataset> for DatasetRepr {
    fn from(d: Dataset) -> Self {
        DatasetRepr {
            x: d.x.rows().into_iter().map(|r| r.to_vec()).collect(),
            y: d.y.to_vec(),
            label_encoding: d.label_encoding,
        }
    }
}

impl TryFrom<DatasetRepr> for Dataset {
    type Error = Error;

    fn try_from(r: DatasetRepr) -> Result<Self> {
        let n = r.x.len();
        if n == 0 {
            return Err(Error::DimensionMismatch("dataset has no rows".into()));
        }
        let p = r.x[0].len();
        let mut flat = Vec::with_capacity(n * p);
        for (i, row) in r.x.iter().enumerate() {
            if row.len() != p {
                return Err(Error::DimensionMismatch(format!(
                    "row {i} has {} columns, expected {p}",
                    row.len()
                )));
            }
            flat.extend_from_slice(row);
        }
        let x = Array2::from_shape_vec((n, p), flat)
            .map_err(|e| Error::DimensionMismatch(e.to_string()))?;
        Dataset::new(x, Array1::from_vec(r.y), r.label_encoding)
    }
}

impl Dataset {
    /// Validate raw inputs into a `Dataset`: dimensions must agree, every
    /// entry must be finite, and `binary01` responses must lie in {0, 1}.
    pub fn new(x: Array2<f64>, y: Array1<f64>, label_encoding: LabelEncoding) -> Result<Self> {
        let (n, p) = x.dim();
        if n == 0 || p == 0 {
            return Err(Error::DimensionMismatch(format!(
                "design matrix must be at least 1x1, got {n}x{p}"
            )));
        }
        if y.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "design matrix has {n} rows but response has {} entries",
                y.len()
            )));
        }
        for ((i, j), v) in x.indexed_iter() {
            if !v.is_finite() {
                return Err(Error::NonFinite(format!("X[{i},{j}] = {v}")));
            }
        }
        for (i, v) in y.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite(format!("y[{i}] = {v}")));
            }
            if label_encoding == LabelEncoding::Binary01 && *v != 0.0 && *v != 1.0 {
                return Err(Error::InvalidLabel { row: i, value: *v });
            }
        }
        Ok(Dataset {
            x,
            y,
            label_encoding,
        })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn x(&self) -> &Array2<f64> {
        &self.x
    }

    pub fn y(&self) -> &Array1<f64> {
        &self.y
    }

    pub fn label_encoding(&self) -> LabelEncoding {
        self.label_encoding
    }

    /// Copy with a column of ones appended as the last feature (index `p`).
    /// Used for intercept terms; the caller decides whether that column is
    /// exempt from selection (see `select::SelectOptions::forced`).
    pub fn with_bias_column(&self) -> Dataset {
        let n = self.n();
        let mut x = Array2::<f64>::ones((n, self.p() + 1));
        x.slice_mut(ndarray::s![.., ..self.p()]).assign(&self.x);
        Dataset {
            x,
            y: self.y.clone(),
            label_encoding: self.label_encoding,
        }
    }

    /// Rows = observations; materialize the submatrix of the given columns.
    pub(crate) fn columns(&self, support: &Support) -> Array2<f64> {
        let n = self.n();
        let mut out = Array2::<f64>::zeros((n, support.len()));
        for (c, &j) in support.iter().enumerate() {
            out.index_axis_mut(Axis(1), c).assign(&self.x.column(j));
        }
        out
    }
}

/// A strictly increasing set of feature indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Support {
    indices: Vec<usize>,
}

impl From<Support> for Vec<usize> {
    fn from(s: Support) -> Self {
        s.indices
    }
}

impl TryFrom<Vec<usize>> for Support {
    type Error = Error;

    fn try_from(v: Vec<usize>) -> Result<Self> {
        Support::new(v)
    }
}

impl Support {
    pub fn empty() -> Self {
        Support::default()
    }

    /// Sorts the input and rejects duplicates.
    pub fn new(mut indices: Vec<usize>) -> Result<Self> {
        indices.sort_unstable();
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidParameter(
                "support contains duplicate indices".into(),
            ));
        }
        Ok(Support { indices })
    }

    pub fn singleton(j: usize) -> Self {
        Support { indices: vec![j] }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, j: usize) -> bool {
        self.indices.binary_search(&j).is_ok()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, usize> {
        self.indices.iter()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.indices
    }

    /// Largest index, if any; `is_valid_for(p)` iff it is `< p`.
    pub fn max_index(&self) -> Option<usize> {
        self.indices.last().copied()
    }

    pub fn is_valid_for(&self, p: usize) -> bool {
        self.max_index().is_none_or(|m| m < p)
    }

    pub fn validate_for(&self, p: usize) -> Result<()> {
        if self.is_valid_for(p) {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "support index {} out of range for p = {p}",
                self.max_index().unwrap()
            )))
        }
    }

    /// Copy with `j` inserted (no-op if already present).
    pub fn with(&self, j: usize) -> Support {
        match self.indices.binary_search(&j) {
            Ok(_) => self.clone(),
            Err(pos) => {
                let mut v = self.indices.clone();
                v.insert(pos, j);
                Support { indices: v }
            }
        }
    }

    /// Copy with `j` removed (no-op if absent).
    pub fn without(&self, j: usize) -> Support {
        match self.indices.binary_search(&j) {
            Ok(pos) => {
                let mut v = self.indices.clone();
                v.remove(pos);
                Support { indices: v }
            }
            Err(_) => self.clone(),
        }
    }

    pub fn union(&self, other: &Support) -> Support {
        let mut v = Vec::with_capacity(self.len() + other.len());
        let (mut a, mut b) = (self.indices.iter().peekable(), other.indices.iter().peekable());
        loop {
            match (a.peek(), b.peek()) {
                (Some(&&x), Some(&&y)) => {
                    if x < y {
                        v.push(x);
                        a.next();
                    } else if y < x {
                        v.push(y);
                        b.next();
                    } else {
                        v.push(x);
                        a.next();
                        b.next();
                    }
                }
                (Some(&&x), None) => {
                    v.push(x);
                    a.next();
                }
                (None, Some(&&y)) => {
                    v.push(y);
                    b.next();
                }
                (None, None) => break,
            }
        }
        Support { indices: v }
    }

    pub fn difference(&self, other: &Support) -> Support {
        Support {
            indices: self
                .indices
                .iter()
                .copied()
                .filter(|j| !other.contains(*j))
                .collect(),
        }
    }

    pub fn is_disjoint(&self, other: &Support) -> bool {
        self.indices.iter().all(|j| !other.contains(*j))
    }
}

impl FromIterator<usize> for Support {
    /// Panics on duplicates; intended for literals in tests and internal
    /// construction from already-unique iterators.
    fn from_iter<T: IntoIterator<Item = usize>>(iter: T) -> Self {
        Support::new(iter.into_iter().collect()).expect("duplicate indices in support literal")
    }
}

/// A length-`p` coefficient vector that is exactly zero off its support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ParamVectorRepr", into = "ParamVectorRepr")]
pub struct ParamVector {
    beta: Array1<f64>,
    support: Support,
}

#[derive(Serialize, Deserialize)]
struct ParamVectorRepr {
    beta: Vec<f64>,
    support: Support,
}

impl From<ParamVector> for ParamVectorRepr {
    fn from(v: ParamVector) -> Self {
        ParamVectorRepr {
            beta: v.beta.to_vec(),
            support: v.support,
        }
    }
}

impl TryFrom<ParamVectorRepr> for ParamVector {
    type Error = Error;

    fn try_from(r: ParamVectorRepr) -> Result<Self> {
        ParamVector::new(Array1::from_vec(r.beta), r.support)
    }
}

impl ParamVector {
    pub fn zeros(p: usize) -> Self {
        ParamVector {
            beta: Array1::zeros(p),
            support: Support::empty(),
        }
    }

    pub fn new(beta: Array1<f64>, support: Support) -> Result<Self> {
        support.validate_for(beta.len())?;
        for (j, v) in beta.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite(format!("beta[{j}] = {v}")));
            }
            if *v != 0.0 && !support.contains(j) {
                return Err(Error::InvalidParameter(format!(
                    "beta[{j}] = {v} is nonzero outside the support"
                )));
            }
        }
        Ok(ParamVector { beta, support })
    }

    /// Support taken as the set of nonzero coordinates.
    pub fn from_dense(beta: Array1<f64>) -> Result<Self> {
        let support: Support = beta
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(j, _)| j)
            .collect();
        ParamVector::new(beta, support)
    }

    /// Scatter restricted coefficients onto a length-`p` vector.
    pub fn from_restricted(p: usize, support: Support, coeffs: &Array1<f64>) -> Result<Self> {
        if coeffs.len() != support.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} coefficients for a support of size {}",
                coeffs.len(),
                support.len()
            )));
        }
        let mut beta = Array1::zeros(p);
        for (c, &j) in support.iter().enumerate() {
            beta[j] = coeffs[c];
        }
        ParamVector::new(beta, support)
    }

    pub fn p(&self) -> usize {
        self.beta.len()
    }

    pub fn beta(&self) -> &Array1<f64> {
        &self.beta
    }

    pub fn support(&self) -> &Support {
        &self.support
    }

    /// Coefficients in support order.
    pub fn restricted(&self) -> Array1<f64> {
        Array1::from_iter(self.support.iter().map(|&j| self.beta[j]))
    }

    pub fn norm2(&self) -> f64 {
        self.beta.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Which selection algorithm produced a trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Oblivious,
    ForwardStepwise,
    Omp,
    Foba,
}

impl Algorithm {
    /// The three forward-only algorithms produce nondecreasing `f`; FoBa may
    /// decrease it on a backward step.
    pub fn is_forward_only(self) -> bool {
        !matches!(self, Algorithm::Foba)
    }

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Oblivious => "oblivious",
            Algorithm::ForwardStepwise => "forward_stepwise",
            Algorithm::Omp => "omp",
            Algorithm::Foba => "foba",
        }
    }
}

/// A single add or drop event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepAction {
    Add(usize),
    Drop(usize),
}

/// State after one selection step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub iteration: usize,
    pub action: StepAction,
    /// Selected support after the step, excluding any forced indices.
    pub support: Support,
    /// Refit coefficients over `support ∪ forced`.
    pub beta: ParamVector,
    /// `f(support ∪ forced) = l(beta) − l(0)`.
    pub f_value: f64,
    /// `f_value` minus the previous step's `f_value` (or the baseline).
    pub marginal_gain: f64,
}

/// Per-iteration record of a selection run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionTrace {
    pub schema_version: u32,
    pub algorithm: Algorithm,
    pub objective: ObjectiveSpec,
    /// Seed of the data-generating process, when known; 0 for file inputs.
    pub seed: u64,
    pub p: usize,
    /// Indices present in every support and exempt from selection
    /// (e.g. a bias column). Empty in the plain setting.
    pub forced: Support,
    /// `f(forced)`; exactly 0 when `forced` is empty.
    pub baseline_f: f64,
    pub steps: Vec<TraceStep>,
}

impl SelectionTrace {
    pub(crate) fn new(
        algorithm: Algorithm,
        objective: ObjectiveSpec,
        seed: u64,
        p: usize,
        forced: Support,
        baseline_f: f64,
        steps: Vec<TraceStep>,
    ) -> Self {
        SelectionTrace {
            schema_version: SCHEMA_VERSION,
            algorithm,
            objective,
            seed,
            p,
            forced,
            baseline_f,
            steps,
        }
    }

    /// Check the structural invariants: marginal gains match successive
    /// `f` differences to 1e-10, supports replay the add/drop actions, and
    /// `f` is nondecreasing (within the shared solver tolerance) for the
    /// forward-only algorithms.
    pub fn validate(&self) -> Result<()> {
        let mut prev_f = self.baseline_f;
        let mut current = Support::empty();
        for step in &self.steps {
            match step.action {
                StepAction::Add(j) => {
                    if current.contains(j) {
                        return Err(Error::InvalidParameter(format!(
                            "step {} adds index {j} already in the support",
                            step.iteration
                        )));
                    }
                    current = current.with(j);
                }
                StepAction::Drop(j) => {
                    if !current.contains(j) {
                        return Err(Error::InvalidParameter(format!(
                            "step {} drops index {j} not in the support",
                            step.iteration
                        )));
                    }
                    current = current.without(j);
                }
            }
            if current != step.support {
                return Err(Error::InvalidParameter(format!(
                    "step {} support is inconsistent with the recorded actions",
                    step.iteration
                )));
            }
            if (step.marginal_gain - (step.f_value - prev_f)).abs() > 1e-10 {
                return Err(Error::InvalidParameter(format!(
                    "step {} marginal gain {} does not match f difference {}",
                    step.iteration,
                    step.marginal_gain,
                    step.f_value - prev_f
                )));
            }
            if self.algorithm.is_forward_only() && step.f_value < prev_f - DEFAULT_GRAD_TOL {
                return Err(Error::InvalidParameter(format!(
                    "step {}: f decreased from {} to {} for a forward-only algorithm",
                    step.iteration, prev_f, step.f_value
                )));
            }
            step.beta.support().validate_for(self.p)?;
            prev_f = step.f_value;
        }
        Ok(())
    }

    /// Indices in the order they were first added.
    pub fn selection_order(&self) -> Vec<usize> {
        let mut seen = Vec::new();
        for step in &self.steps {
            if let StepAction::Add(j) = step.action {
                if !seen.contains(&j) {
                    seen.push(j);
                }
            }
        }
        seen
    }

    pub fn final_step(&self) -> Option<&TraceStep> {
        self.steps.last()
    }

    pub fn final_support(&self) -> Support {
        self.final_step()
            .map(|s| s.support.clone())
            .unwrap_or_default()
    }

    pub fn final_f(&self) -> f64 {
        self.final_step().map(|s| s.f_value).unwrap_or(self.baseline_f)
    }

    /// Last recorded state whose selected support has exactly `size`
    /// elements. For forward-only traces this is simply step `size`.
    pub fn state_at_size(&self, size: usize) -> Option<&TraceStep> {
        self.steps.iter().rev().find(|s| s.support.len() == size)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    fn dataset_3x2() -> Dataset {
        Dataset::new(
            array![[1.0, 0.5], [0.0, 1.0], [2.0, -1.0]],
            array![0.0, 1.0, 1.0],
            LabelEncoding::Binary01,
        )
        .unwrap()
    }

    #[test]
    fn wellformed_dataset_is_accepted() {
        let d = dataset_3x2();
        assert_eq!(d.n(), 3);
        assert_eq!(d.p(), 2);
    }

    #[test]
    fn nan_entry_is_rejected() {
        let err = Dataset::new(
            array![[1.0, f64::NAN]],
            array![0.0],
            LabelEncoding::Real,
        )
        .unwrap_err();
        assert!(matches!(err, Error::NonFinite(_)), "{err}");
    }

    #[test]
    fn label_outside_binary01_is_rejected() {
        let err = Dataset::new(
            array![[1.0], [2.0]],
            array![0.0, 2.0],
            LabelEncoding::Binary01,
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidLabel { row: 1, .. }), "{err}");
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let err =
            Dataset::new(array![[1.0], [2.0]], array![0.0], LabelEncoding::Real).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch(_)), "{err}");
    }

    #[test]
    fn bias_column_is_appended_last() {
        let d = dataset_3x2().with_bias_column();
        assert_eq!(d.p(), 3);
        assert!(d.x().column(2).iter().all(|v| *v == 1.0));
    }

    #[test]
    fn param_vector_rejects_offsupport_nonzero() {
        let err = ParamVector::new(array![1.0, 0.0, 2.0], Support::singleton(0)).unwrap_err();
        assert!(matches!(err, Error::InvalidParameter(_)), "{err}");
    }

    #[test]
    fn param_vector_allows_zero_on_support() {
        let v = ParamVector::new(array![0.0, 3.0], Support::new(vec![0, 1]).unwrap()).unwrap();
        assert_eq!(v.support().len(), 2);
    }

    #[test]
    fn trace_validation_catches_bad_marginal_gain() {
        let spec = ObjectiveSpec::least_squares();
        let step = TraceStep {
            iteration: 1,
            action: StepAction::Add(0),
            support: Support::singleton(0),
            beta: ParamVector::zeros(2),
            f_value: 1.0,
            marginal_gain: 0.5,
        };
        let trace = SelectionTrace::new(
            Algorithm::ForwardStepwise,
            spec,
            0,
            2,
            Support::empty(),
            0.0,
            vec![step],
        );
        assert!(trace.validate().is_err());
    }

    proptest! {
        #[test]
        fn support_union_difference_stay_sorted_unique(
            a in proptest::collection::btree_set(0usize..40, 0..12),
            b in proptest::collection::btree_set(0usize..40, 0..12),
        ) {
            let sa = Support::new(a.iter().copied().collect()).unwrap();
            let sb = Support::new(b.iter().copied().collect()).unwrap();
            for s in [sa.union(&sb), sa.difference(&sb)] {
                prop_assert!(s.as_slice().windows(2).all(|w| w[0] < w[1]));
            }
            prop_assert_eq!(sa.union(&sb).len(), a.union(&b).count());
            prop_assert_eq!(sa.difference(&sb).len(), a.difference(&b).count());
        }

        #[test]
        fn dataset_json_round_trip(rows in 1usize..5, cols in 1usize..4, seed in 0u64..1000) {
            // Cheap deterministic pseudo-data; exact float round-trip is the point.
            let mut v = Vec::new();
            let mut s = seed;
            for _ in 0..rows * cols {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                v.push(((s >> 11) as f64 / (1u64 << 53) as f64) * 3.5 - 1.75);
            }
            let x = Array2::from_shape_vec((rows, cols), v).unwrap();
            let y = Array1::from_iter((0..rows).map(|i| i as f64 * 0.25 - 0.5));
            let d = Dataset::new(x, y, LabelEncoding::Real).unwrap();
            let json = serde_json::to_string(&d).unwrap();
            let back: Dataset = serde_json::from_str(&json).unwrap();
            prop_assert_eq!(d, back);
        }
    }
}
