use super::GlmError;
use crate::linalg::{correlation, variance, Matrix};
use crate::scalar::Scalar;

/// R² of regressing column `target` on the `others` (plus intercept), from
/// the correlation matrix. Columns numerically inside the span of earlier
/// ones are skipped, so exact collinearity yields R² = 1.
fn r_squared<T: Scalar>(r: &Matrix<T>, target: usize, others: &[usize]) -> T {
    let tol = T::lit(1e-10);
    // incremental Cholesky over the kept regressors
    let mut kept: Vec<usize> = Vec::new();
    let mut l: Vec<Vec<T>> = Vec::new();
    for &c in others {
        let mut row = Vec::with_capacity(kept.len() + 1);
        for (i, &ki) in kept.iter().enumerate() {
            let s = r[(ki, c)] - (0..i).map(|m| l[i][m] * row[m]).sum::<T>();
            row.push(s / l[i][i]);
        }
        let d = r[(c, c)] - row.iter().map(|&v| v * v).sum::<T>();
        if d > tol {
            row.push(d.sqrt());
            l.push(row);
            kept.push(c);
        }
    }
    // z = L⁻¹ r_kept; R² = ‖z‖²
    let mut z: Vec<T> = Vec::with_capacity(kept.len());
    for (i, &ki) in kept.iter().enumerate() {
        let s = r[(ki, target)] - (0..i).map(|m| l[i][m] * z[m]).sum::<T>();
        z.push(s / l[i][i]);
    }
    z.iter().map(|&v| v * v).sum::<T>().min(T::one())
}

/// Variance inflation factor `1 / (1 − R²ⱼ)` per column; `+∞` when a column
/// is an exact linear combination of the others.
pub fn vif<T: Scalar>(names: &[String], columns: &[&[T]]) -> Result<Vec<T>, GlmError> {
    if columns.len() < 2 {
        return Err(GlmError::TooFewColumns);
    }
    for (n, c) in names.iter().zip(columns) {
        if !(variance(c) > T::zero()) {
            return Err(GlmError::ZeroVariance(n.clone()));
        }
    }
    let owned: Vec<Vec<T>> = columns.iter().map(|c| c.to_vec()).collect();
    let r = correlation(&owned);
    let p = columns.len();
    Ok((0..p)
        .map(|j| {
            let others: Vec<usize> = (0..p).filter(|&k| k != j).collect();
            let r2 = r_squared(&r, j, &others);
            let resid = T::one() - r2;
            if resid <= T::lit(1e-12) {
                T::infinity()
            } else {
                T::one() / resid
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(k: usize) -> Vec<String> {
        (0..k).map(|i| format!("v{i}")).collect()
    }

    #[test]
    fn orthogonal_columns_have_unit_vif() {
        let a = [1.0_f64, -1.0, 1.0, -1.0];
        let b = [1.0_f64, 1.0, -1.0, -1.0];
        let v = vif(&names(2), &[&a, &b]).unwrap();
        assert!(v.iter().all(|&x| (x - 1.0).abs() < 1e-12));
    }

    #[test]
    fn exact_collinearity_is_infinite() {
        let a = [1.0_f64, 2.0, 3.0, 5.0, 8.0];
        let b = [2.0_f64, 4.0, 6.0, 10.0, 16.0];
        let c = [0.3_f64, -0.2, 0.9, 0.1, 0.0];
        let v = vif(&names(3), &[&a, &b, &c]).unwrap();
        assert!(v[0].is_infinite() && v[1].is_infinite());
        assert!(v[2].is_finite() && v[2] >= 1.0);
    }

    #[test]
    fn errors() {
        let a = [1.0_f64, 2.0];
        assert_eq!(vif(&names(1), &[&a]).unwrap_err(), GlmError::TooFewColumns);
        let z = [3.0_f64, 3.0];
        assert!(matches!(vif(&names(2), &[&a, &z]), Err(GlmError::ZeroVariance(_))));
    }
}
