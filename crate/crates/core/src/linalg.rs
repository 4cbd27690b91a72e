use nalgebra::{DMatrix, DVector};

/// Minimum-norm least-squares solution of `J x = b` via SVD, with singular
/// values below `rcond * s_max` treated as zero.
pub(crate) fn lstsq_min_norm(j: &DMatrix<f64>, b: &DVector<f64>, rcond: f64) -> DVector<f64> {
    let svd = j.clone().svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let eps = (rcond * smax).max(f64::MIN_POSITIVE);
    svd.solve(b, eps).unwrap_or_else(|_| DVector::zeros(j.ncols()))
}

/// Forward-difference Jacobian of `f` at `x`, steps `rel_step * max(|x_k|, 1)`.
pub(crate) fn fd_jacobian<E>(
    f: &mut dyn FnMut(&[f64]) -> Result<Vec<f64>, E>,
    x: &[f64],
    fx: &[f64],
    rel_step: f64,
    central: bool,
) -> Result<DMatrix<f64>, E> {
    let mut jac = DMatrix::zeros(fx.len(), x.len());
    let mut xp = x.to_vec();
    for k in 0..x.len() {
        let h = rel_step * x[k].abs().max(1.0);
        xp[k] = x[k] + h;
        let fp = f(&xp)?;
        if central {
            xp[k] = x[k] - h;
            let fm = f(&xp)?;
            for r in 0..fx.len() {
                jac[(r, k)] = (fp[r] - fm[r]) / (2.0 * h);
            }
        } else {
            for r in 0..fx.len() {
                jac[(r, k)] = (fp[r] - fx[r]) / h;
            }
        }
        xp[k] = x[k];
    }
    Ok(jac)
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
