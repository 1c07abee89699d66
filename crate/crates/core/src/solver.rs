//! Restricted maximization of `l(β)` over a fixed support, and the induced
//! normalized set function `f(S) = max_{supp(β) ⊆ S} l(β) − l(0)`.
//!
//! Least squares is solved by the normal equations (with a ridge fallback
//! only when the restricted Gram matrix is singular); logistic kinds run
//! Newton's method on the restricted coordinates with Armijo backtracking,
//! falling back to gradient-ascent steps when the restricted Hessian is
//! numerically singular. Everything is sequential and deterministic:
//! repeated calls with the same inputs return bit-identical values.

use std::cell::RefCell;
use std::collections::HashMap;

use ndarray::{Array1, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{Dataset, ParamVector, Support};
use crate::objective::ObjectiveSpec;

/// Shared inner-solver tolerance; "f is nondecreasing" and similar statements
/// hold up to this accuracy.
pub const DEFAULT_GRAD_TOL: f64 = 1e-8;

/// Coefficient norm beyond which unregularized logistic is declared divergent.
pub const SEPARATION_NORM_LIMIT: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Stop when the restricted gradient inf-norm falls below this.
    pub grad_tol: f64,
    pub max_iters: usize,
    /// Diagonal ridge applied only when a restricted system is singular.
    pub ridge_fallback: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            grad_tol: DEFAULT_GRAD_TOL,
            max_iters: 200,
            ridge_fallback: 1e-10,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.grad_tol > 0.0) {
            return Err(Error::InvalidParameter("grad_tol must be > 0".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter("max_iters must be >= 1".into()));
        }
        if !(self.ridge_fallback >= 0.0) {
            return Err(Error::InvalidParameter("ridge_fallback must be >= 0".into()));
        }
        Ok(())
    }
}

/// Result of a restricted maximization.
#[derive(Debug, Clone)]
pub struct RestrictedFit {
    pub beta: ParamVector,
    /// `l(beta)`, not normalized by `l(0)`.
    pub value: f64,
    pub iterations: usize,
    /// Whether the ridge fallback engaged at any point.
    pub used_ridge: bool,
}

/// Maximize `l` over `supp(β) ⊆ support`, cold-started at zero.
pub fn maximize_restricted(
    spec: &ObjectiveSpec,
    data: &Dataset,
    support: &Support,
    config: &SolverConfig,
) -> Result<RestrictedFit> {
    maximize_restricted_warm(spec, data, support, None, config)
}

/// As [`maximize_restricted`], but optionally warm-started: the initial point
/// is `init` restricted to `support` (coordinates outside it are dropped,
/// missing ones start at zero). The fixed point is the same for these concave
/// objectives; warm starts only change the iteration count.
pub fn maximize_restricted_warm(
    spec: &ObjectiveSpec,
    data: &Dataset,
    support: &Support,
    init: Option<&ParamVector>,
    config: &SolverConfig,
) -> Result<RestrictedFit> {
    spec.validate()?;
    config.validate()?;
    spec.check_data(data)?;
    support.validate_for(data.p())?;

    if support.is_empty() {
        return Ok(RestrictedFit {
            beta: ParamVector::zeros(data.p()),
            value: spec.value_at_zero(data)?,
            iterations: 0,
            used_ridge: false,
        });
    }

    let x_s = data.columns(support);
    let k = support.len();
    let n = data.n() as f64;

    if !spec.is_logistic() {
        // Normal equations on the support.
        let gram = x_s.t().dot(&x_s) / n;
        let rhs = x_s.t().dot(data.y()) / n;
        let (coeffs, used_ridge) = linalg::solve_spd(&gram, &rhs, config.ridge_fallback)?;
        let margins = x_s.dot(&coeffs);
        let value = spec.value_from_margins(data.y(), &margins, 0.0);
        return Ok(RestrictedFit {
            beta: ParamVector::from_restricted(data.p(), support.clone(), &coeffs)?,
            value,
            iterations: 1,
            used_ridge,
        });
    }

    // Newton with backtracking on the restricted logistic problem.
    let mut coeffs = match init {
        Some(b) => Array1::from_iter(support.iter().map(|&j| b.beta()[j])),
        None => Array1::zeros(k),
    };
    let eta = spec.eta();
    let mut margins = x_s.dot(&coeffs);
    let mut used_ridge = false;
    let mut grad_norm = f64::INFINITY;

    for iter in 0..config.max_iters {
        let w = spec.residual_weights(data.y(), &margins);
        let mut grad = x_s.t().dot(&w) / n;
        if eta > 0.0 {
            grad.zip_mut_with(&coeffs, |g, c| *g -= eta * c);
        }
        // A runaway iterate is divergence regardless of the (saturated)
        // gradient, so this check precedes the convergence test.
        if spec.can_separate() {
            let norm = coeffs.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > SEPARATION_NORM_LIMIT {
                return Err(Error::PerfectSeparation { norm });
            }
        }
        grad_norm = grad.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if grad_norm <= config.grad_tol {
            let beta_sq = coeffs.iter().map(|v| v * v).sum();
            let value = spec.value_from_margins(data.y(), &margins, beta_sq);
            return Ok(RestrictedFit {
                beta: ParamVector::from_restricted(data.p(), support.clone(), &coeffs)?,
                value,
                iterations: iter,
                used_ridge,
            });
        }

        let d = spec.curvature_weights(&margins);
        let xd = &x_s * &d.view().insert_axis(Axis(1));
        let mut neg_hess = x_s.t().dot(&xd) / n;
        if eta > 0.0 {
            for i in 0..k {
                neg_hess[(i, i)] += eta;
            }
        }
        let direction = match linalg::solve_spd(&neg_hess, &grad, config.ridge_fallback) {
            Ok((dir, ridged)) => {
                used_ridge |= ridged;
                dir
            }
            // Singular even with ridge: fall back to plain gradient ascent.
            Err(_) => grad.clone(),
        };

        let beta_sq = coeffs.iter().map(|v| v * v).sum();
        let current = spec.value_from_margins(data.y(), &margins, beta_sq);
        let slope = grad.dot(&direction);
        let dir_margins = x_s.dot(&direction);
        let mut t = 1.0f64;
        loop {
            let cand = &coeffs + &(&direction * t);
            let cand_margins = &margins + &(&dir_margins * t);
            let cand_sq = cand.iter().map(|v| v * v).sum();
            let cand_value = spec.value_from_margins(data.y(), &cand_margins, cand_sq);
            if cand_value >= current + 1e-4 * t * slope || t < 1e-14 {
                coeffs = cand;
                margins = cand_margins;
                break;
            }
            t *= 0.5;
        }
    }

    Err(Error::NonConvergence {
        iters: config.max_iters,
        grad_norm,
    })
}

/// `f(S) = max_{supp(β) ⊆ S} l(β) − l(0)`; exactly 0 for the empty set.
pub fn set_function_value(
    spec: &ObjectiveSpec,
    data: &Dataset,
    support: &Support,
    config: &SolverConfig,
) -> Result<f64> {
    if support.is_empty() {
        spec.check_data(data)?;
        return Ok(0.0);
    }
    let fit = maximize_restricted(spec, data, support, config)?;
    Ok(fit.value - spec.value_at_zero(data)?)
}

/// Memoizing oracle for the set function `f`. Evaluations cold-start the
/// solver so cached values do not depend on call order.
pub struct SetFunctionOracle<'a> {
    spec: &'a ObjectiveSpec,
    data: &'a Dataset,
    config: SolverConfig,
    l0: f64,
    cache: RefCell<HashMap<Vec<usize>, f64>>,
}

impl<'a> SetFunctionOracle<'a> {
    pub fn new(spec: &'a ObjectiveSpec, data: &'a Dataset, config: &SolverConfig) -> Result<Self> {
        spec.check_data(data)?;
        Ok(SetFunctionOracle {
            spec,
            data,
            config: *config,
            l0: spec.value_at_zero(data)?,
            cache: RefCell::new(HashMap::new()),
        })
    }

    pub fn l0(&self) -> f64 {
        self.l0
    }

    pub fn p(&self) -> usize {
        self.data.p()
    }

    pub fn eval(&self, support: &Support) -> Result<f64> {
        if support.is_empty() {
            return Ok(0.0);
        }
        if let Some(v) = self.cache.borrow().get(support.as_slice()) {
            return Ok(*v);
        }
        let fit = maximize_restricted(self.spec, self.data, support, &self.config)?;
        let f = fit.value - self.l0;
        self.cache
            .borrow_mut()
            .insert(support.as_slice().to_vec(), f);
        Ok(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::LabelEncoding;
    use approx::assert_abs_diff_eq;
    use ndarray::{array, Array2};

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

    #[test]
    fn empty_support_returns_zero_vector_and_l0() {
        let data = random_dataset(6, 3, false, 1);
        let spec = ObjectiveSpec::least_squares();
        let fit =
            maximize_restricted(&spec, &data, &Support::empty(), &SolverConfig::default()).unwrap();
        assert_eq!(fit.beta, ParamVector::zeros(3));
        assert_abs_diff_eq!(fit.value, spec.value_at_zero(&data).unwrap());
    }

    #[test]
    fn least_squares_full_support_matches_normal_equations() {
        let data = random_dataset(15, 4, false, 2);
        let spec = ObjectiveSpec::least_squares();
        let support: Support = (0..4).collect();
        let fit =
            maximize_restricted(&spec, &data, &support, &SolverConfig::default()).unwrap();
        let g = data.x().t().dot(data.x());
        let b = data.x().t().dot(data.y());
        let l = crate::linalg::cholesky(&g).unwrap();
        let expected = crate::linalg::chol_solve(&l, &b);
        for j in 0..4 {
            assert_abs_diff_eq!(fit.beta.beta()[j], expected[j], epsilon = 1e-10);
        }
    }

    /// Independent first-order oracle: plain gradient ascent with
    /// backtracking, run to a much tighter tolerance than the solver.
    fn gradient_ascent_value(
        spec: &ObjectiveSpec,
        data: &Dataset,
        support: &Support,
    ) -> f64 {
        let x_s = data.columns(support);
        let n = data.n() as f64;
        let mut c = Array1::<f64>::zeros(support.len());
        let mut value = spec.value_from_margins(data.y(), &x_s.dot(&c), 0.0);
        for _ in 0..1_000_000 {
            let margins = x_s.dot(&c);
            let w = spec.residual_weights(data.y(), &margins);
            let mut g = x_s.t().dot(&w) / n;
            if spec.eta() > 0.0 {
                g.zip_mut_with(&c, |gi, ci| *gi -= spec.eta() * ci);
            }
            if g.iter().fold(0.0f64, |a, v| a.max(v.abs())) <= 1e-12 {
                break;
            }
            let mut t = 8.0;
            loop {
                let cand = &c + &(&g * t);
                let sq = cand.iter().map(|v| v * v).sum();
                let cand_value = spec.value_from_margins(data.y(), &x_s.dot(&cand), sq);
                if cand_value > value || t < 1e-16 {
                    c = cand;
                    value = cand_value;
                    break;
                }
                t *= 0.5;
            }
        }
        value
    }

    #[test]
    fn logistic_restricted_fit_matches_first_order_oracle() {
        let data = random_dataset(30, 5, true, 3);
        let spec = ObjectiveSpec::logistic();
        let support = Support::new(vec![0, 2]).unwrap();
        let fit =
            maximize_restricted(&spec, &data, &support, &SolverConfig::default()).unwrap();
        let oracle = gradient_ascent_value(&spec, &data, &support);
        assert_abs_diff_eq!(fit.value, oracle, epsilon = 1e-6);
        // Off-support coordinates are exactly zero.
        assert_eq!(fit.beta.beta()[1], 0.0);
        assert_eq!(fit.beta.beta()[3], 0.0);
    }

    #[test]
    fn restricted_gradient_meets_tolerance_at_solution() {
        let config = SolverConfig::default();
        for spec in [
            ObjectiveSpec::least_squares(),
            ObjectiveSpec::logistic(),
            ObjectiveSpec::logistic_l2(0.2).unwrap(),
        ] {
            let data = random_dataset(25, 6, spec.is_logistic(), 4);
            let support = Support::new(vec![1, 3, 4]).unwrap();
            let fit = maximize_restricted(&spec, &data, &support, &config).unwrap();
            let grad = spec.gradient(&data, &fit.beta).unwrap();
            for &j in support.iter() {
                assert!(
                    grad[j].abs() <= config.grad_tol,
                    "{spec:?}: grad[{j}] = {}",
                    grad[j]
                );
            }
        }
    }

    #[test]
    fn set_function_is_zero_on_empty_and_nonneg() {
        let data = random_dataset(20, 5, false, 5);
        let spec = ObjectiveSpec::least_squares();
        let config = SolverConfig::default();
        assert_eq!(
            set_function_value(&spec, &data, &Support::empty(), &config).unwrap(),
            0.0
        );
        let f = set_function_value(&spec, &data, &Support::singleton(2), &config).unwrap();
        assert!(f >= -config.grad_tol);
    }

    #[test]
    fn exact_single_column_fit_recovers_full_value() {
        // y equals the first column: f({0}) is the entire (1/2n)‖y‖².
        let n = 9;
        let mut s = 6u64;
        let col: Array1<f64> = Array1::from_shape_fn(n, |_| splitmix(&mut s) + 0.5);
        let other: Array1<f64> = Array1::from_shape_fn(n, |_| splitmix(&mut s) - 0.5);
        let mut x = Array2::zeros((n, 2));
        x.column_mut(0).assign(&col);
        x.column_mut(1).assign(&other);
        let y = col.clone();
        let data = Dataset::new(x, y, LabelEncoding::Real).unwrap();
        let spec = ObjectiveSpec::least_squares();
        let f = set_function_value(&spec, &data, &Support::singleton(0), &SolverConfig::default())
            .unwrap();
        let expected = data.y().iter().map(|v| v * v).sum::<f64>() / (2.0 * n as f64);
        assert_abs_diff_eq!(f, expected, epsilon = 1e-12);
    }

    #[test]
    fn monotone_over_nested_supports() {
        let config = SolverConfig::default();
        let mut s = 7u64;
        for trial in 0..500 {
            let data = random_dataset(12, 6, trial % 2 == 0, 100 + trial);
            let spec = if trial % 2 == 0 {
                ObjectiveSpec::logistic()
            } else {
                ObjectiveSpec::least_squares()
            };
            let a: Support = (0..6).filter(|_| splitmix(&mut s) < 0.4).collect();
            let extra: Support = (0..6).filter(|_| splitmix(&mut s) < 0.4).collect();
            let b = a.union(&extra);
            let fa = set_function_value(&spec, &data, &a, &config).unwrap();
            let fb = set_function_value(&spec, &data, &b, &config).unwrap();
            assert!(fb >= fa - 1e-8, "trial {trial}: f(A)={fa} > f(B)={fb}");
        }
    }

    #[test]
    fn determinism_bit_identical() {
        let data = random_dataset(18, 4, true, 8);
        let spec = ObjectiveSpec::logistic();
        let support = Support::new(vec![0, 3]).unwrap();
        let config = SolverConfig::default();
        let a = maximize_restricted(&spec, &data, &support, &config).unwrap();
        let b = maximize_restricted(&spec, &data, &support, &config).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.beta, b.beta);
    }

    #[test]
    fn least_squares_closed_form_set_function() {
        // f(S) = (1/2n)·yᵀX_S(X_SᵀX_S)⁻¹X_Sᵀy on well-conditioned instances.
        let config = SolverConfig::default();
        for seed in 0..20 {
            let data = random_dataset(20, 8, false, 200 + seed);
            let spec = ObjectiveSpec::least_squares();
            let support = Support::new(vec![1, 4, 6]).unwrap();
            let f = set_function_value(&spec, &data, &support, &config).unwrap();
            let xs = data.columns(&support);
            let g = xs.t().dot(&xs);
            let b = xs.t().dot(data.y());
            let l = crate::linalg::cholesky(&g).unwrap();
            let coef = crate::linalg::chol_solve(&l, &b);
            let closed = b.dot(&coef) / (2.0 * 20.0);
            assert_abs_diff_eq!(f, closed, epsilon = 1e-9);
        }
    }

    #[test]
    fn perfect_separation_is_reported() {
        // A perfectly separating feature at a tiny scale: meeting the (tight)
        // gradient tolerance would need coefficients past the 1e6 divergence
        // threshold, so the norm check fires first.
        let x = array![[1e-5], [-1e-5], [1e-5], [-1e-5]];
        let y = array![1.0, 0.0, 1.0, 0.0];
        let data = Dataset::new(x, y, LabelEncoding::Binary01).unwrap();
        let spec = ObjectiveSpec::logistic();
        let config = SolverConfig {
            grad_tol: 1e-10,
            ..SolverConfig::default()
        };
        let err = maximize_restricted(&spec, &data, &Support::singleton(0), &config).unwrap_err();
        assert!(matches!(err, Error::PerfectSeparation { .. }), "{err}");
        // The l2-regularized variant converges on the same data.
        let spec2 = ObjectiveSpec::logistic_l2(0.1).unwrap();
        assert!(maximize_restricted(&spec2, &data, &Support::singleton(0), &config).is_ok());
    }

    #[test]
    fn separable_at_unit_scale_converges_numerically() {
        // Margins saturate in f64 long before the norm limit, so the solver
        // legitimately reaches the gradient tolerance.
        let x = array![[1.0], [2.0], [-1.0], [-2.0]];
        let y = array![1.0, 1.0, 0.0, 0.0];
        let data = Dataset::new(x, y, LabelEncoding::Binary01).unwrap();
        let spec = ObjectiveSpec::logistic();
        let fit = maximize_restricted(&spec, &data, &Support::singleton(0), &SolverConfig::default())
            .unwrap();
        assert!(fit.value <= 0.0 && fit.value > -1e-6);
    }

    #[test]
    fn oracle_caches_and_matches_direct_evaluation() {
        let data = random_dataset(16, 5, false, 9);
        let spec = ObjectiveSpec::least_squares();
        let config = SolverConfig::default();
        let oracle = SetFunctionOracle::new(&spec, &data, &config).unwrap();
        let s = Support::new(vec![0, 2, 4]).unwrap();
        let direct = set_function_value(&spec, &data, &s, &config).unwrap();
        assert_eq!(oracle.eval(&s).unwrap().to_bits(), direct.to_bits());
        assert_eq!(oracle.eval(&s).unwrap().to_bits(), direct.to_bits());
    }
}
