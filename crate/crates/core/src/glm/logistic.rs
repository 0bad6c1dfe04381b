use serde::{Deserialize, Serialize};

use super::{Design, GlmError};
use crate::linalg::{cholesky, cholesky_inverse, cholesky_solve, default_pivot_tol, Matrix};
use crate::scalar::{chi2_1_sf, sigmoid, softplus, Scalar};

/// Coefficients beyond this magnitude flag quasi-separation.
pub const SEPARATION_LIMIT: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions<T> {
    pub max_iter: usize,
    /// Relative log-likelihood change that ends the iteration.
    pub tol: T,
    /// Diagonal stabiliser (relative to the largest diagonal entry), used
    /// only when the information matrix fails to factor.
    pub ridge: T,
    /// Report standard errors from the ridged information when the plain
    /// one is singular, instead of failing.
    pub ridge_inference: bool,
}

impl<T: Scalar> Default for FitOptions<T> {
    fn default() -> Self {
        Self {
            max_iter: 100,
            tol: T::lit(1e-8),
            ridge: T::lit(1e-8),
            ridge_inference: false,
        }
    }
}

/// Fitted binary logistic regression. Index 0 of every per-term vector is
/// the intercept; index `i + 1` belongs to `terms[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct LogisticModel<T> {
    pub terms: Vec<String>,
    #[serde(with = "crate::scalar::nonfinite::vec")]
    pub coefficients: Vec<T>,
    #[serde(with = "crate::scalar::nonfinite::vec")]
    pub std_errors: Vec<T>,
    #[serde(with = "crate::scalar::nonfinite::vec")]
    pub wald_chisq: Vec<T>,
    #[serde(with = "crate::scalar::nonfinite::vec")]
    pub p_values: Vec<T>,
    #[serde(with = "crate::scalar::nonfinite")]
    pub log_likelihood: T,
    pub iterations: usize,
    pub converged: bool,
    pub quasi_separation: bool,
    /// Standard errors came from the ridge-stabilised information.
    pub ridged: bool,
}

impl<T: Scalar> LogisticModel<T> {
    pub fn intercept(&self) -> T {
        self.coefficients[0]
    }

    fn term_index(&self, name: &str) -> Option<usize> {
        self.terms.iter().position(|t| t == name).map(|i| i + 1)
    }

    pub fn coefficient(&self, name: &str) -> Option<T> {
        self.term_index(name).map(|i| self.coefficients[i])
    }

    pub fn wald(&self, name: &str) -> Option<T> {
        self.term_index(name).map(|i| self.wald_chisq[i])
    }

    pub fn p_value(&self, name: &str) -> Option<T> {
        self.term_index(name).map(|i| self.p_values[i])
    }

    /// Linear predictor for one row of term values.
    pub fn linear_predictor(&self, row: &[T]) -> T {
        self.coefficients[1..]
            .iter()
            .zip(row)
            .fold(self.coefficients[0], |acc, (&b, &x)| acc + b * x)
    }

    /// Fit is usable for ranking and selection.
    pub fn is_reliable(&self) -> bool {
        self.converged && !self.quasi_separation
    }
}

fn eta<T: Scalar>(design: &Design<'_, T>, beta: &[T]) -> Vec<T> {
    let mut eta = vec![beta[0]; design.n_rows()];
    for (col, &b) in design.columns().iter().zip(&beta[1..]) {
        for (e, &x) in eta.iter_mut().zip(col.iter()) {
            *e += b * x;
        }
    }
    eta
}

/// Bernoulli log-likelihood of `beta` (intercept first) on the design.
pub fn log_likelihood<T: Scalar>(design: &Design<'_, T>, y: &[u8], beta: &[T]) -> T {
    eta(design, beta)
        .iter()
        .zip(y)
        .map(|(&e, &yi)| if yi == 1 { e - softplus(e) } else { -softplus(e) })
        .sum()
}

/// Score vector `Xᵀ(y − p)` and information `XᵀWX`.
fn score_and_information<T: Scalar>(design: &Design<'_, T>, y: &[u8], eta: &[T]) -> (Vec<T>, Matrix<T>) {
    let k = design.n_cols() + 1;
    let n = design.n_rows();
    let mut resid = Vec::with_capacity(n);
    let mut w = Vec::with_capacity(n);
    for (&e, &yi) in eta.iter().zip(y) {
        let p = sigmoid(e);
        resid.push(if yi == 1 { T::one() - p } else { -p });
        w.push(p * (T::one() - p));
    }
    let col = |j: usize| -> Option<&[T]> { if j == 0 { None } else { Some(design.columns()[j - 1]) } };
    let mut score = vec![T::zero(); k];
    let mut info = Matrix::zeros(k, k);
    for a in 0..k {
        let ca = col(a);
        score[a] = match ca {
            None => resid.iter().copied().sum(),
            Some(c) => c.iter().zip(&resid).map(|(&x, &r)| x * r).sum(),
        };
        for b in a..k {
            let cb = col(b);
            let s: T = match (ca, cb) {
                (None, None) => w.iter().copied().sum(),
                (None, Some(c)) | (Some(c), None) => c.iter().zip(&w).map(|(&x, &wi)| x * wi).sum(),
                (Some(c1), Some(c2)) => c1
                    .iter()
                    .zip(c2.iter())
                    .zip(&w)
                    .map(|((&x1, &x2), &wi)| x1 * x2 * wi)
                    .sum(),
            };
            info[(a, b)] = s;
            info[(b, a)] = s;
        }
    }
    (score, info)
}

fn ridged<T: Scalar>(info: &Matrix<T>, ridge: T) -> Matrix<T> {
    let mut m = info.clone();
    let bump = ridge * info.max_abs_diag().max(T::one());
    for i in 0..m.rows() {
        m[(i, i)] += bump;
    }
    m
}

fn validate_response(y: &[u8], n: usize) -> Result<(), GlmError> {
    if y.len() != n {
        return Err(GlmError::RowMismatch {
            name: "response".into(),
            expected: n,
            got: y.len(),
        });
    }
    if y.iter().any(|&v| v > 1) {
        return Err(GlmError::NonBinaryResponse);
    }
    Ok(())
}

/// Maximum-likelihood logistic fit by Newton–Raphson with step halving.
pub fn fit_logistic<T: Scalar>(
    design: &Design<'_, T>,
    y: &[u8],
    opts: &FitOptions<T>,
) -> Result<LogisticModel<T>, GlmError> {
    let n = design.n_rows();
    if n == 0 {
        return Err(GlmError::EmptyDesign);
    }
    validate_response(y, n)?;
    let k = design.n_cols() + 1;
    let pivot_tol = default_pivot_tol::<T>();

    let events = y.iter().filter(|&&v| v == 1).count();
    let mut beta = vec![T::zero(); k];
    if events > 0 && events < n {
        let rate = T::count(events) / T::count(n);
        beta[0] = (rate / (T::one() - rate)).ln();
    }
    let mut ll = log_likelihood(design, y, &beta);
    let mut converged = false;
    let mut iterations = 0;
    let step_floor = T::lit(1e-6);

    for it in 0..opts.max_iter {
        iterations = it + 1;
        let (score, info) = score_and_information(design, y, &eta(design, &beta));
        let l = match cholesky(&info, pivot_tol) {
            Some(l) => l,
            None => cholesky(&ridged(&info, opts.ridge), pivot_tol).ok_or(GlmError::SingularInformation)?,
        };
        let delta = cholesky_solve(&l, &score);

        let mut t = T::one();
        let mut accepted = None;
        for _ in 0..40 {
            let cand: Vec<T> = beta.iter().zip(&delta).map(|(&b, &d)| b + t * d).collect();
            let ll_c = log_likelihood(design, y, &cand);
            if ll_c.is_finite() && ll_c >= ll - T::epsilon() * ll.abs() {
                accepted = Some((cand, ll_c));
                break;
            }
            t *= T::lit(0.5);
        }
        let Some((cand, ll_new)) = accepted else {
            // no ascent direction left: already at the optimum numerically
            converged = true;
            break;
        };
        let max_step = delta.iter().map(|d| (t * *d).abs()).fold(T::zero(), T::max);
        let max_beta = cand.iter().map(|b| b.abs()).fold(T::zero(), T::max);
        let rel = (ll_new - ll).abs() / (ll.abs() + opts.tol);
        beta = cand;
        ll = ll_new;
        if rel < opts.tol && max_step < step_floor * (T::one() + max_beta) {
            converged = true;
            break;
        }
    }

    let limit = T::lit(SEPARATION_LIMIT);
    let quasi_separation = beta.iter().any(|b| b.abs() > limit);
    let (_, info) = score_and_information(design, y, &eta(design, &beta));
    let (cov, ridged_se) = match cholesky(&info, pivot_tol) {
        Some(l) => (cholesky_inverse(&l), false),
        None if opts.ridge_inference || quasi_separation => {
            let l = cholesky(&ridged(&info, opts.ridge), pivot_tol).ok_or(GlmError::SingularInformation)?;
            (cholesky_inverse(&l), true)
        }
        None => return Err(GlmError::SingularInformation),
    };
    let std_errors: Vec<T> = (0..k).map(|i| cov[(i, i)].max(T::zero()).sqrt()).collect();
    let wald_chisq: Vec<T> = beta
        .iter()
        .zip(&std_errors)
        .map(|(&b, &s)| (b / s) * (b / s))
        .collect();
    let p_values = wald_chisq.iter().map(|&w| chi2_1_sf(w)).collect();
    if quasi_separation {
        log::debug!("quasi-separation in fit over {:?}", design.names());
    }
    Ok(LogisticModel {
        terms: design.names().to_vec(),
        coefficients: beta,
        std_errors,
        wald_chisq,
        p_values,
        log_likelihood: ll,
        iterations,
        converged,
        quasi_separation,
        ridged: ridged_se,
    })
}

/// Interaction screen of one variable pair: `1 + a + b + a·b`.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionFit<T> {
    pub model: LogisticModel<T>,
    /// Wald chi-square of the product term; 0 when the fit is unreliable.
    pub wald: T,
    pub p_value: T,
    pub reliable: bool,
}

pub fn fit_interaction_pair<T: Scalar>(
    x_a: &[T],
    x_b: &[T],
    y: &[u8],
    opts: &FitOptions<T>,
) -> Result<InteractionFit<T>, GlmError> {
    let product: Vec<T> = x_a.iter().zip(x_b).map(|(&a, &b)| a * b).collect();
    let design = Design::new(
        vec!["a".into(), "b".into(), "a*b".into()],
        vec![x_a, x_b, &product],
        x_a.len(),
    )?;
    let model = fit_logistic(&design, y, opts)?;
    let reliable = model.is_reliable();
    let (wald, p_value) = if reliable {
        (model.wald_chisq[3], model.p_values[3])
    } else {
        (T::zero(), T::one())
    };
    Ok(InteractionFit {
        model,
        wald,
        p_value,
        reliable,
    })
}

/// `sigmoid(β0 + Σ βᵢ xᵢ)` row by row; `columns` follow `model.terms`.
pub fn predict_proba<T: Scalar>(model: &LogisticModel<T>, columns: &[&[T]]) -> Result<Vec<T>, GlmError> {
    if columns.len() != model.terms.len() {
        return Err(GlmError::ColumnMismatch {
            expected: model.terms.len(),
            got: columns.len(),
        });
    }
    let n = columns.first().map_or(0, |c| c.len());
    let mut eta = vec![model.coefficients[0]; n];
    for (col, &b) in columns.iter().zip(&model.coefficients[1..]) {
        if col.len() != n {
            return Err(GlmError::RowMismatch {
                name: "prediction input".into(),
                expected: n,
                got: col.len(),
            });
        }
        for (e, &x) in eta.iter_mut().zip(col.iter()) {
            *e += b * x;
        }
    }
    Ok(eta.into_iter().map(sigmoid).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn names(k: usize) -> Vec<String> {
        (0..k).map(|i| format!("x{i}")).collect()
    }

    #[test]
    fn intercept_only_closed_form() {
        let y: Vec<u8> = (0..50).map(|i| u8::from(i % 5 != 0)).collect();
        let d = Design::<f64>::new(vec![], vec![], 50).unwrap();
        let m = fit_logistic(&d, &y, &FitOptions::default()).unwrap();
        assert!((m.intercept() - 4.0_f64.ln()).abs() < 1e-9);
        assert!(m.converged);
    }

    #[test]
    fn saturated_two_cell_log_odds() {
        // x=0: 5 of 10 events; x=1: 8 of 10 events
        let x: Vec<f64> = (0..20).map(|i| if i < 10 { 0.0 } else { 1.0 }).collect();
        let y: Vec<u8> = (0..20).map(|i| u8::from(if i < 10 { i < 5 } else { i < 18 })).collect();
        let cols = vec![x];
        let d = Design::from_columns(&names(1), &cols).unwrap();
        let m = fit_logistic(&d, &y, &FitOptions::default()).unwrap();
        assert!(m.intercept().abs() < 1e-9);
        assert!((m.coefficients[1] - 4.0_f64.ln()).abs() < 1e-9);
        for i in 0..2 {
            assert!((m.wald_chisq[i] - (m.coefficients[i] / m.std_errors[i]).powi(2)).abs() < 1e-15);
        }
    }

    #[test]
    fn score_equations_and_mean_match_at_convergence() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 400;
        let cols: Vec<Vec<f64>> = (0..3).map(|_| (0..n).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
        let y: Vec<u8> = (0..n)
            .map(|i| {
                let e = 0.3 + 0.8 * cols[0][i] - 0.5 * cols[1][i];
                u8::from(rng.random::<f64>() < sigmoid(e))
            })
            .collect();
        let d = Design::from_columns(&names(3), &cols).unwrap();
        let m = fit_logistic(&d, &y, &FitOptions::default()).unwrap();
        assert!(m.converged);
        let (score, _) = score_and_information(&d, &y, &eta(&d, &m.coefficients));
        assert!(score.iter().all(|s| s.abs() < 1e-6), "{score:?}");
        let refs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
        let p = predict_proba(&m, &refs).unwrap();
        let events = y.iter().filter(|&&v| v == 1).count() as f64;
        assert!((p.iter().sum::<f64>() - events).abs() < 1e-6);
    }

    #[test]
    fn zero_interaction_column_is_singular() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a: Vec<f64> = (0..100).map(|_| rng.random_range(-1.0..1.0)).collect();
        let b = vec![0.0; 100];
        let y: Vec<u8> = (0..100).map(|i| u8::from(i % 3 == 0)).collect();
        assert_eq!(
            fit_interaction_pair(&a, &b, &y, &FitOptions::default()).unwrap_err(),
            GlmError::SingularInformation
        );
    }

    #[test]
    fn ridge_inference_flags_duplicate_columns() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a: Vec<f64> = (0..200).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y: Vec<u8> = a.iter().map(|&v| u8::from(rng.random::<f64>() < sigmoid(v))).collect();
        let cols = vec![a.clone(), a];
        let d = Design::from_columns(&names(2), &cols).unwrap();
        assert!(fit_logistic(&d, &y, &FitOptions::default()).is_err());
        let opts = FitOptions {
            ridge_inference: true,
            ..FitOptions::default()
        };
        let m = fit_logistic(&d, &y, &opts).unwrap();
        assert!(m.ridged);
    }

    #[test]
    fn separation_is_flagged_not_fatal() {
        let x: Vec<f64> = (0..40).map(|i| i as f64 - 19.5).collect();
        let y: Vec<u8> = x.iter().map(|&v| u8::from(v > 0.0)).collect();
        let cols = vec![x];
        let d = Design::from_columns(&names(1), &cols).unwrap();
        let m = fit_logistic(&d, &y, &FitOptions::default()).unwrap();
        assert!(m.quasi_separation);
        assert!(!m.is_reliable());
    }

    #[test]
    fn predict_proba_basics() {
        let m = LogisticModel {
            terms: names(2),
            coefficients: vec![0.0_f64, 0.0, 0.0],
            std_errors: vec![1.0; 3],
            wald_chisq: vec![0.0; 3],
            p_values: vec![1.0; 3],
            log_likelihood: 0.0,
            iterations: 0,
            converged: true,
            quasi_separation: false,
            ridged: false,
        };
        let p = predict_proba(&m, &[&[1.0, -3.0], &[2.0, 5.0]]).unwrap();
        assert_eq!(p, vec![0.5, 0.5]);
        assert!(matches!(
            predict_proba(&m, &[&[1.0]]),
            Err(GlmError::ColumnMismatch { expected: 2, got: 1 })
        ));
        let mut m2 = m.clone();
        m2.coefficients = vec![-0.4, 1.2, 0.0];
        let p = predict_proba(&m2, &[&[0.0, 0.5, 1.0], &[0.0, 0.0, 0.0]]).unwrap();
        assert!((p[0] - sigmoid(-0.4)).abs() < 1e-15);
        assert!(p[0] < p[1] && p[1] < p[2]);
    }

    #[test]
    fn works_in_single_precision() {
        let x: Vec<f32> = (0..20).map(|i| if i < 10 { 0.0 } else { 1.0 }).collect();
        let y: Vec<u8> = (0..20).map(|i| u8::from(if i < 10 { i < 5 } else { i < 18 })).collect();
        let cols = vec![x];
        let d = Design::from_columns(&names(1), &cols).unwrap();
        let m = fit_logistic(&d, &y, &FitOptions::default()).unwrap();
        assert!((m.coefficients[1] - 4.0_f32.ln()).abs() < 1e-4);
    }
}
