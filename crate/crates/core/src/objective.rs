//! Concave objectives: value, gradient, and dense Hessian.
//!
//! All objectives are averaged over the `n` observations, so curvature
//! parameters are scale-free in the sample size:
//!
//! * least squares:   `l(β) = −(1/2n)‖Xβ − y‖₂²`
//! * logistic:        `l(β) = (1/n) Σᵢ [yᵢ⟨xᵢ,β⟩ − log(1 + exp⟨xᵢ,β⟩)]`
//! * logistic + ℓ2:   the logistic value minus `(η/2)‖β‖₂²`
//!
//! `log(1 + eᵗ)` uses the branch-free stable form; the sigmoid saturates
//! naturally in f64 without artificial clipping.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Dataset, LabelEncoding, ParamVector};

/// Dense Hessians above this dimension are refused.
pub const HESSIAN_P_LIMIT: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveKind {
    LeastSquares,
    Logistic,
    LogisticL2,
}

/// Which concave objective is being maximized, with its hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ObjectiveSpecRepr", into = "ObjectiveSpecRepr")]
pub struct ObjectiveSpec {
    kind: ObjectiveKind,
    eta: f64,
    normalize_by_n: bool,
}

#[derive(Serialize, Deserialize)]
struct ObjectiveSpecRepr {
    kind: ObjectiveKind,
    #[serde(default)]
    eta: f64,
    #[serde(default = "default_true")]
    normalize_by_n: bool,
}

fn default_true() -> bool {
    true
}

impl From<ObjectiveSpec> for ObjectiveSpecRepr {
    fn from(s: ObjectiveSpec) -> Self {
        ObjectiveSpecRepr {
            kind: s.kind,
            eta: s.eta,
            normalize_by_n: s.normalize_by_n,
        }
    }
}

impl TryFrom<ObjectiveSpecRepr> for ObjectiveSpec {
    type Error = Error;

    fn try_from(r: ObjectiveSpecRepr) -> Result<Self> {
        let spec = ObjectiveSpec {
            kind: r.kind,
            eta: r.eta,
            normalize_by_n: r.normalize_by_n,
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl ObjectiveSpec {
    pub fn least_squares() -> Self {
        ObjectiveSpec {
            kind: ObjectiveKind::LeastSquares,
            eta: 0.0,
            normalize_by_n: true,
        }
    }

    pub fn logistic() -> Self {
        ObjectiveSpec {
            kind: ObjectiveKind::Logistic,
            eta: 0.0,
            normalize_by_n: true,
        }
    }

    pub fn logistic_l2(eta: f64) -> Result<Self> {
        let spec = ObjectiveSpec {
            kind: ObjectiveKind::LogisticL2,
            eta,
            normalize_by_n: true,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.eta.is_finite() || self.eta < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "eta must be a nonnegative real, got {}",
                self.eta
            )));
        }
        if self.kind != ObjectiveKind::LogisticL2 && self.eta != 0.0 {
            return Err(Error::InvalidParameter(format!(
                "eta must be 0 for {:?}",
                self.kind
            )));
        }
        if !self.normalize_by_n {
            return Err(Error::InvalidParameter(
                "normalize_by_n = false is not supported".into(),
            ));
        }
        Ok(())
    }

    pub fn kind(&self) -> ObjectiveKind {
        self.kind
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn is_logistic(&self) -> bool {
        matches!(self.kind, ObjectiveKind::Logistic | ObjectiveKind::LogisticL2)
    }

    /// Unregularized logistic can diverge under perfect separation.
    pub(crate) fn can_separate(&self) -> bool {
        self.kind == ObjectiveKind::Logistic
    }

    pub(crate) fn check_data(&self, data: &Dataset) -> Result<()> {
        if self.is_logistic() && data.label_encoding() != LabelEncoding::Binary01 {
            return Err(Error::InvalidParameter(
                "logistic objectives require binary01 labels".into(),
            ));
        }
        Ok(())
    }

    fn check_beta(&self, data: &Dataset, beta: &Array1<f64>) -> Result<()> {
        if beta.len() != data.p() {
            return Err(Error::DimensionMismatch(format!(
                "beta has length {} but p = {}",
                beta.len(),
                data.p()
            )));
        }
        self.check_data(data)
    }

    /// `l(β)`.
    pub fn value(&self, data: &Dataset, beta: &ParamVector) -> Result<f64> {
        self.value_dense(data, beta.beta())
    }

    pub fn value_dense(&self, data: &Dataset, beta: &Array1<f64>) -> Result<f64> {
        self.check_beta(data, beta)?;
        let margins = data.x().dot(beta);
        let beta_sq = beta.iter().map(|v| v * v).sum();
        Ok(self.value_from_margins(data.y(), &margins, beta_sq))
    }

    /// `l(0)`, evaluated through the same code path as `value_dense` so the
    /// rounding is identical wherever the two are differenced.
    pub fn value_at_zero(&self, data: &Dataset) -> Result<f64> {
        self.check_data(data)?;
        let margins = Array1::zeros(data.n());
        Ok(self.value_from_margins(data.y(), &margins, 0.0))
    }

    /// `∇l(β)`, length `p`.
    pub fn gradient(&self, data: &Dataset, beta: &ParamVector) -> Result<Array1<f64>> {
        self.gradient_dense(data, beta.beta())
    }

    pub fn gradient_dense(&self, data: &Dataset, beta: &Array1<f64>) -> Result<Array1<f64>> {
        self.check_beta(data, beta)?;
        let margins = data.x().dot(beta);
        let w = self.residual_weights(data.y(), &margins);
        let inv_n = 1.0 / data.n() as f64;
        let mut grad = data.x().t().dot(&w) * inv_n;
        if self.eta > 0.0 {
            grad.zip_mut_with(beta, |g, b| *g -= self.eta * b);
        }
        Ok(grad)
    }

    /// Dense `p×p` Hessian of `l` at `β`: symmetric negative semidefinite,
    /// `−(1/n)XᵀDX − ηI`. Built by mirroring the upper triangle, so
    /// `H == Hᵀ` holds exactly.
    pub fn hessian(&self, data: &Dataset, beta: &ParamVector) -> Result<Array2<f64>> {
        self.hessian_dense(data, beta.beta())
    }

    pub fn hessian_dense(&self, data: &Dataset, beta: &Array1<f64>) -> Result<Array2<f64>> {
        self.check_beta(data, beta)?;
        let p = data.p();
        if p > HESSIAN_P_LIMIT {
            return Err(Error::GuardExceeded {
                what: "dense hessian dimension".into(),
                limit: HESSIAN_P_LIMIT as u64,
                actual: p as u64,
            });
        }
        let margins = data.x().dot(beta);
        let d = self.curvature_weights(&margins);
        let x = data.x();
        let inv_n = 1.0 / data.n() as f64;
        let mut h = Array2::<f64>::zeros((p, p));
        for i in 0..p {
            for j in i..p {
                let mut acc = 0.0;
                for k in 0..data.n() {
                    acc += x[(k, i)] * d[k] * x[(k, j)];
                }
                let v = -acc * inv_n - if i == j { self.eta } else { 0.0 };
                h[(i, j)] = v;
                h[(j, i)] = v;
            }
        }
        Ok(h)
    }

    /// Value from precomputed margins `Xβ` (restricted solves reuse this).
    pub(crate) fn value_from_margins(
        &self,
        y: &Array1<f64>,
        margins: &Array1<f64>,
        beta_sq: f64,
    ) -> f64 {
        let n = y.len() as f64;
        let data_term = match self.kind {
            ObjectiveKind::LeastSquares => {
                let ss: f64 = margins
                    .iter()
                    .zip(y.iter())
                    .map(|(m, yi)| (m - yi) * (m - yi))
                    .sum();
                -0.5 * ss / n
            }
            ObjectiveKind::Logistic | ObjectiveKind::LogisticL2 => {
                let ll: f64 = margins
                    .iter()
                    .zip(y.iter())
                    .map(|(m, yi)| yi * m - log1p_exp(*m))
                    .sum();
                ll / n
            }
        };
        data_term - 0.5 * self.eta * beta_sq
    }

    /// `w` such that the data term of the gradient is `(1/n)Xᵀw`.
    pub(crate) fn residual_weights(&self, y: &Array1<f64>, margins: &Array1<f64>) -> Array1<f64> {
        match self.kind {
            ObjectiveKind::LeastSquares => y - margins,
            ObjectiveKind::Logistic | ObjectiveKind::LogisticL2 => Array1::from_iter(
                y.iter()
                    .zip(margins.iter())
                    .map(|(yi, m)| yi - sigmoid(*m)),
            ),
        }
    }

    /// `d` such that the data term of the negated Hessian is `(1/n)XᵀDX`.
    pub(crate) fn curvature_weights(&self, margins: &Array1<f64>) -> Array1<f64> {
        match self.kind {
            ObjectiveKind::LeastSquares => Array1::ones(margins.len()),
            ObjectiveKind::Logistic | ObjectiveKind::LogisticL2 => Array1::from_iter(
                margins.iter().map(|m| {
                    let s = sigmoid(*m);
                    s * (1.0 - s)
                }),
            ),
        }
    }
}

/// Numerically stable `log(1 + eᵗ)`.
pub(crate) fn log1p_exp(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

/// Numerically stable sigmoid.
pub(crate) fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::LabelEncoding;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    fn splitmix(state: &mut u64) -> f64 {
        *state = state.wrapping_add(0x9E3779B97F4A7C15);
        let mut z = *state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z ^= z >> 31;
        (z >> 11) as f64 / (1u64 << 53) as f64
    }

    fn random_dataset(n: usize, p: usize, binary: bool, seed: u64) -> Dataset {
        let mut s = seed;
        let x = Array2::from_shape_fn((n, p), |_| splitmix(&mut s) * 2.0 - 1.0);
        let y = Array1::from_shape_fn(n, |_| {
            if binary {
                (splitmix(&mut s) > 0.5) as u8 as f64
            } else {
                splitmix(&mut s) * 2.0 - 1.0
            }
        });
        let enc = if binary {
            LabelEncoding::Binary01
        } else {
            LabelEncoding::Real
        };
        Dataset::new(x, y, enc).unwrap()
    }

    fn random_beta(p: usize, seed: u64) -> Array1<f64> {
        let mut s = seed;
        Array1::from_shape_fn(p, |_| splitmix(&mut s) * 2.0 - 1.0)
    }

    fn all_specs() -> Vec<ObjectiveSpec> {
        vec![
            ObjectiveSpec::least_squares(),
            ObjectiveSpec::logistic(),
            ObjectiveSpec::logistic_l2(0.3).unwrap(),
        ]
    }

    #[test]
    fn least_squares_value_at_zero() {
        let data = random_dataset(7, 3, false, 1);
        let spec = ObjectiveSpec::least_squares();
        let expected = -data.y().iter().map(|v| v * v).sum::<f64>() / (2.0 * 7.0);
        assert_abs_diff_eq!(spec.value_at_zero(&data).unwrap(), expected, epsilon = 1e-15);
    }

    #[test]
    fn logistic_value_at_zero_is_minus_log2() {
        let data = random_dataset(9, 4, true, 2);
        let spec = ObjectiveSpec::logistic();
        assert_abs_diff_eq!(
            spec.value_at_zero(&data).unwrap(),
            -std::f64::consts::LN_2,
            epsilon = 1e-14
        );
    }

    #[test]
    fn logistic_value_matches_per_sample_oracle() {
        // 4-sample hand dataset, summed sample by sample with naive formulas.
        let data = Dataset::new(
            array![[0.4, -1.2], [1.1, 0.3], [-0.7, 0.9], [0.2, 0.2]],
            array![1.0, 0.0, 1.0, 0.0],
            LabelEncoding::Binary01,
        )
        .unwrap();
        let beta = array![0.8, -0.5];
        let spec = ObjectiveSpec::logistic();
        let mut oracle = 0.0;
        for i in 0..4 {
            let t = data.x()[(i, 0)] * beta[0] + data.x()[(i, 1)] * beta[1];
            oracle += data.y()[i] * t - (1.0 + t.exp()).ln();
        }
        oracle /= 4.0;
        assert_abs_diff_eq!(spec.value_dense(&data, &beta).unwrap(), oracle, epsilon = 1e-12);
    }

    #[test]
    fn logistic_gradient_at_zero() {
        let data = random_dataset(8, 3, true, 3);
        let spec = ObjectiveSpec::logistic();
        let grad = spec.gradient_dense(&data, &Array1::zeros(3)).unwrap();
        let centered = data.y().mapv(|v| v - 0.5);
        let expected = data.x().t().dot(&centered) / 8.0;
        for j in 0..3 {
            assert_abs_diff_eq!(grad[j], expected[j], epsilon = 1e-14);
        }
    }

    #[test]
    fn least_squares_gradient_vanishes_at_solution() {
        let data = random_dataset(12, 4, false, 4);
        let spec = ObjectiveSpec::least_squares();
        // Normal-equations solution on the full support.
        let g = data.x().t().dot(data.x());
        let b = data.x().t().dot(data.y());
        let l = crate::linalg::cholesky(&g).unwrap();
        let beta = crate::linalg::chol_solve(&l, &b);
        let grad = spec.gradient_dense(&data, &beta).unwrap();
        for v in grad.iter() {
            assert!(v.abs() < 1e-10, "grad entry {v}");
        }
    }

    fn fd_gradient(spec: &ObjectiveSpec, data: &Dataset, beta: &Array1<f64>) -> Array1<f64> {
        let h = 1e-5;
        let mut g = Array1::zeros(beta.len());
        for j in 0..beta.len() {
            let mut up = beta.clone();
            up[j] += h;
            let mut dn = beta.clone();
            dn[j] -= h;
            g[j] = (spec.value_dense(data, &up).unwrap() - spec.value_dense(data, &dn).unwrap())
                / (2.0 * h);
        }
        g
    }

    #[test]
    fn gradient_matches_central_differences() {
        for (i, spec) in all_specs().into_iter().enumerate() {
            let data = random_dataset(20, 6, spec.is_logistic(), 10 + i as u64);
            let beta = random_beta(6, 77 + i as u64);
            let grad = spec.gradient_dense(&data, &beta).unwrap();
            let fd = fd_gradient(&spec, &data, &beta);
            for j in 0..6 {
                let rel = (grad[j] - fd[j]).abs() / fd[j].abs().max(1e-3);
                assert!(rel < 1e-5, "{spec:?} coord {j}: {} vs {}", grad[j], fd[j]);
            }
        }
    }

    #[test]
    fn least_squares_hessian_is_constant_scaled_gram() {
        let data = random_dataset(10, 3, false, 5);
        let spec = ObjectiveSpec::least_squares();
        let h0 = spec.hessian_dense(&data, &Array1::zeros(3)).unwrap();
        let h1 = spec.hessian_dense(&data, &random_beta(3, 6)).unwrap();
        let gram = data.x().t().dot(data.x()) / 10.0;
        for i in 0..3 {
            for j in 0..3 {
                assert_abs_diff_eq!(h0[(i, j)], -gram[(i, j)], epsilon = 1e-12);
                assert_abs_diff_eq!(h0[(i, j)], h1[(i, j)], epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn logistic_hessian_at_zero_is_quarter_gram() {
        let data = random_dataset(11, 4, true, 7);
        let spec = ObjectiveSpec::logistic();
        let h = spec.hessian_dense(&data, &Array1::zeros(4)).unwrap();
        let gram = data.x().t().dot(data.x());
        for i in 0..4 {
            for j in 0..4 {
                assert_abs_diff_eq!(h[(i, j)], -gram[(i, j)] / (4.0 * 11.0), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn hessian_matches_finite_difference_of_gradient() {
        for (i, spec) in all_specs().into_iter().enumerate() {
            let data = random_dataset(15, 5, spec.is_logistic(), 30 + i as u64);
            let beta = random_beta(5, 40 + i as u64);
            let hess = spec.hessian_dense(&data, &beta).unwrap();
            let h = 1e-5;
            for j in 0..5 {
                let mut up = beta.clone();
                up[j] += h;
                let mut dn = beta.clone();
                dn[j] -= h;
                let gu = spec.gradient_dense(&data, &up).unwrap();
                let gd = spec.gradient_dense(&data, &dn).unwrap();
                for i2 in 0..5 {
                    let fd = (gu[i2] - gd[i2]) / (2.0 * h);
                    assert!(
                        (hess[(i2, j)] - fd).abs() < 1e-4,
                        "{spec:?} H[{i2},{j}] = {} vs fd {fd}",
                        hess[(i2, j)]
                    );
                }
            }
        }
    }

    #[test]
    fn hessian_is_exactly_symmetric() {
        for (i, spec) in all_specs().into_iter().enumerate() {
            let data = random_dataset(13, 6, spec.is_logistic(), 50 + i as u64);
            let h = spec.hessian_dense(&data, &random_beta(6, 60 + i as u64)).unwrap();
            for a in 0..6 {
                for b in 0..6 {
                    assert_eq!(h[(a, b)], h[(b, a)]);
                }
            }
        }
    }

    #[test]
    fn concavity_witness_over_random_pairs() {
        for (i, spec) in all_specs().into_iter().enumerate() {
            let data = random_dataset(10, 4, spec.is_logistic(), 70 + i as u64);
            let mut s = 90 + i as u64;
            for _ in 0..1000 {
                let b1 = random_beta(4, s.wrapping_mul(3));
                let b2 = random_beta(4, s.wrapping_mul(5).wrapping_add(1));
                s = s.wrapping_add(1);
                let t = splitmix(&mut s).clamp(1e-6, 1.0 - 1e-6);
                let mix = &b1 * t + &b2 * (1.0 - t);
                let lhs = spec.value_dense(&data, &mix).unwrap();
                let rhs = t * spec.value_dense(&data, &b1).unwrap()
                    + (1.0 - t) * spec.value_dense(&data, &b2).unwrap();
                assert!(lhs >= rhs - 1e-10, "{spec:?}: {lhs} < {rhs}");
            }
        }
    }

    #[test]
    fn first_order_taylor_error_is_second_order() {
        // Halving the perturbation should shrink the Taylor remainder ~4x.
        for (i, spec) in all_specs().into_iter().enumerate() {
            let data = random_dataset(14, 5, spec.is_logistic(), 100 + i as u64);
            let beta = random_beta(5, 110 + i as u64);
            let dir = random_beta(5, 120 + i as u64);
            let v0 = spec.value_dense(&data, &beta).unwrap();
            let g = spec.gradient_dense(&data, &beta).unwrap();
            let remainder = |scale: f64| -> f64 {
                let moved = &beta + &(&dir * scale);
                (spec.value_dense(&data, &moved).unwrap() - v0 - scale * g.dot(&dir)).abs()
            };
            let r1 = remainder(1e-3);
            let r2 = remainder(5e-4);
            assert!(r2 < r1 * 0.3 + 1e-14, "{spec:?}: {r1} -> {r2}");
        }
    }

    #[test]
    fn overflow_guarded_for_extreme_margins() {
        let data = Dataset::new(
            array![[1000.0], [-1000.0]],
            array![1.0, 0.0],
            LabelEncoding::Binary01,
        )
        .unwrap();
        let spec = ObjectiveSpec::logistic();
        let v = spec.value_dense(&data, &array![1.0]).unwrap();
        assert!(v.is_finite());
        let g = spec.gradient_dense(&data, &array![1.0]).unwrap();
        assert!(g[0].is_finite());
    }

    #[test]
    fn eta_validation() {
        assert!(ObjectiveSpec::logistic_l2(-0.1).is_err());
        let json = r#"{"kind":"logistic","eta":0.5}"#;
        assert!(serde_json::from_str::<ObjectiveSpec>(json).is_err());
        let json = r#"{"kind":"logistic_l2","eta":0.5}"#;
        assert!(serde_json::from_str::<ObjectiveSpec>(json).is_ok());
    }
}
