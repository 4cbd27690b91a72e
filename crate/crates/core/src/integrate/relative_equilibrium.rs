use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonians::{
    moment_of_inertia, vector_field_complex, vorticity_centroid, Family, SystemSpec, VortexState,
};
use crate::linalg::{fd_jacobian, lstsq_min_norm, norm};

pub const DEFAULT_RE_TOL: f64 = 1e-10;
pub const DEFAULT_RE_MAX_ITER: usize = 100;

/// A configuration rotating rigidly about `center`.
///
/// `omega` multiplies `J = [[0, 1], [-1, 0]]`, so counter-clockwise motion
/// has `omega < 0`: `z(t) = center + exp(-i omega t) (z(0) - center)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelativeEquilibrium {
    pub z: VortexState,
    pub omega: f64,
    pub center: Complex64,
    pub residual: f64,
}

impl RelativeEquilibrium {
    /// Exact state at time `t` of the rigid rotation.
    pub fn state_at(&self, t: f64) -> VortexState {
        let r = Complex64::from_polar(1.0, -self.omega * t);
        VortexState::new(self.z.points().iter().map(|w| self.center + r * (w - self.center)).collect())
    }

    /// Time for one full turn.
    pub fn period(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.omega.abs()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for ReOptions {
    fn default() -> Self {
        ReOptions { tol: DEFAULT_RE_TOL, max_iter: DEFAULT_RE_MAX_ITER }
    }
}

fn residual_vec(spec: &SystemSpec, p: &[Complex64], omega: f64, center: Complex64) -> Vec<f64> {
    let mut v = vec![Complex64::new(0.0, 0.0); p.len()];
    vector_field_complex(spec, p, &mut v);
    // omega J (z - c) in complex form is -i omega (z - c)
    v.iter()
        .zip(p)
        .flat_map(|(f, w)| {
            let r = f - Complex64::new(0.0, -omega) * (w - center);
            [r.re, r.im]
        })
        .collect()
}

/// `|| vector_field(Z) - omega J (Z - center) ||`.
pub fn relative_equilibrium_residual(
    spec: &SystemSpec,
    z: &VortexState,
    omega: f64,
    center: Complex64,
) -> Result<f64> {
    spec.check(z)?;
    Ok(norm(&residual_vec(spec, z.points(), omega, center)))
}

/// Least-squares angular velocity about `center`.
fn fit_omega(spec: &SystemSpec, p: &[Complex64], center: Complex64) -> f64 {
    let mut v = vec![Complex64::new(0.0, 0.0); p.len()];
    vector_field_complex(spec, p, &mut v);
    let (mut num, mut den) = (0.0, 0.0);
    for (f, w) in v.iter().zip(p) {
        let d = Complex64::new(0.0, -1.0) * (w - center);
        num += f.re * d.re + f.im * d.im;
        den += d.norm_sqr();
    }
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

pub fn find_relative_equilibrium(
    spec: &SystemSpec,
    guess: &VortexState,
    fix_i: f64,
) -> Result<RelativeEquilibrium> {
    find_relative_equilibrium_with(spec, guess, fix_i, &ReOptions::default())
}

/// Gauss-Newton solve for a relative equilibrium on the level `I = fix_i`,
/// phase-pinned by `Im z_1 = 0`. For Euler the rotation center is the
/// vorticity centroid of the guess, held fixed; otherwise the origin.
pub fn find_relative_equilibrium_with(
    spec: &SystemSpec,
    guess: &VortexState,
    fix_i: f64,
    opts: &ReOptions,
) -> Result<RelativeEquilibrium> {
    spec.check(guess)?;
    if !(fix_i > 0.0) {
        return Err(Error::InvalidConfig(format!("fix_I must be positive, got {fix_i}")));
    }
    if !(opts.tol > 0.0) || opts.max_iter == 0 {
        return Err(Error::InvalidConfig("re_tol must be positive and max_iter >= 1".into()));
    }
    let n = spec.n();
    let z1 = guess.points()[0];
    let mut p: Vec<Complex64> =
        if z1.norm() > 0.0 { guess.rotated(-z1.arg()).into_points() } else { guess.points().to_vec() };
    let center = match spec.family {
        Family::Euler => vorticity_centroid(spec, &p),
        _ => Complex64::new(0.0, 0.0),
    };
    let total: f64 = spec.gamma.iter().sum();
    let spread: f64 = p.iter().zip(&spec.gamma).map(|(w, g)| g * (w - center).norm_sqr()).sum();
    let room = fix_i - total * center.norm_sqr();
    if !(room > 0.0) || !(spread > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "cannot rescale the guess to I = {fix_i} about its center"
        )));
    }
    let s = (room / spread).sqrt();
    p.iter_mut().for_each(|w| *w = center + (*w - center) * s);

    let pin_centroid = spec.family == Family::Euler;
    let eqs = |x: &[f64]| -> Result<Vec<f64>> {
        let st = VortexState::from_xy(&x[..2 * n])?;
        spec.check(&st)?;
        let omega = x[2 * n];
        let mut r = residual_vec(spec, st.points(), omega, center);
        r.push(moment_of_inertia(spec, &st) - fix_i);
        r.push(st.points()[0].im);
        if pin_centroid {
            let c = vorticity_centroid(spec, st.points());
            r.push(c.re - center.re);
            r.push(c.im - center.im);
        }
        Ok(r)
    };

    let mut x: Vec<f64> = p.iter().flat_map(|w| [w.re, w.im]).collect();
    x.push(fit_omega(spec, &p, center));
    let mut fx = eqs(&x)?;
    let mut res = norm(&fx);
    for _ in 0..opts.max_iter {
        if res < opts.tol {
            break;
        }
        let mut f = |y: &[f64]| eqs(y);
        let jac: DMatrix<f64> = fd_jacobian(&mut f, &x, &fx, 1e-6, true)?;
        let rhs = -DVector::from_column_slice(&fx);
        let dx = lstsq_min_norm(&jac, &rhs, 1e-12);
        let mut step = 1.0;
        let mut improved = false;
        while step > 1e-6 {
            let trial: Vec<f64> = x.iter().zip(dx.iter()).map(|(a, d)| a + step * d).collect();
            if let Ok(ft) = eqs(&trial) {
                let rt = norm(&ft);
                if rt < res {
                    x = trial;
                    fx = ft;
                    res = rt;
                    improved = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !improved {
            break;
        }
    }
    let z = VortexState::from_xy(&x[..2 * n])?;
    let omega = x[2 * n];
    if res >= opts.tol {
        return Err(Error::NoConvergence { iterations: opts.max_iter, residual: res });
    }
    let residual = relative_equilibrium_residual(spec, &z, omega, center)?;
    Ok(RelativeEquilibrium { z, omega, center, residual })
}
