//! Complex projective geometry of the reduced phase spaces.
//!
//! `CP^(n-1)` is the quotient of configurations by scale and common rotation;
//! `CP^(n-2)` additionally removes the centroid through the unitary
//! discrete-Fourier frame [`LimFrame`].

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonians::VortexState;

/// A point of `CP^k` stored as a unit-norm representative in `C^(k+1)`.
///
/// The phase of the representative carries no meaning; compare points with
/// [`fs_distance`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectivePoint {
    v: Vec<Complex64>,
}

fn vnorm(v: &[Complex64]) -> f64 {
    v.iter().map(|w| w.norm_sqr()).sum::<f64>().sqrt()
}

fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

impl ProjectivePoint {
    /// Projective class of a nonzero vector.
    pub fn new(v: Vec<Complex64>) -> Result<Self> {
        let s = vnorm(&v);
        if v.is_empty() || !(s > 0.0) || !s.is_finite() {
            return Err(Error::ZeroVector);
        }
        Ok(ProjectivePoint { v: v.into_iter().map(|w| w / s).collect() })
    }

    /// Ambient index `k` of `CP^k`.
    pub fn k(&self) -> usize {
        self.v.len() - 1
    }

    pub fn coords(&self) -> &[Complex64] {
        &self.v
    }
}

/// `[z_1 : ... : z_n]`.
pub fn hopf_project(z: &[Complex64]) -> Result<ProjectivePoint> {
    ProjectivePoint::new(z.to_vec())
}

pub fn hopf_project_state(z: &VortexState) -> Result<ProjectivePoint> {
    hopf_project(z.points())
}

/// Fubini-Study distance `arccos |<v_p, v_q>|`, in `[0, pi/2]`.
///
/// Evaluated as `atan2(|v_q - <v_p,v_q> v_p|, |<v_p,v_q>|)`, which keeps full
/// relative accuracy for nearby points where `arccos` would lose half the digits.
pub fn fs_distance(p: &ProjectivePoint, q: &ProjectivePoint) -> Result<f64> {
    if p.v.len() != q.v.len() {
        return Err(Error::DimensionMismatch { expected: p.v.len(), found: q.v.len() });
    }
    let c = inner(&p.v, &q.v);
    let perp: f64 = p.v.iter().zip(&q.v).map(|(a, b)| (b - c * a).norm_sqr()).sum::<f64>().sqrt();
    Ok(perp.atan2(c.norm()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Forward,
    Inverse,
}

/// Unitary discrete-Fourier frame: row `k` is `exp(-2 pi i jk/n)/sqrt(n)`,
/// `j, k = 1..n`. Row `n` is the normalized constant vector, so the last
/// coordinate is `sum z_j / sqrt(n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LimFrame {
    n: usize,
    u: DMatrix<Complex64>,
}

impl LimFrame {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidConfig("frame size must be positive".into()));
        }
        let s = 1.0 / (n as f64).sqrt();
        let u = DMatrix::from_fn(n, n, |r, c| {
            let (k, j) = ((r + 1) as f64, (c + 1) as f64);
            Complex64::from_polar(s, -2.0 * PI * ((j * k) % n as f64) / n as f64)
        });
        Ok(LimFrame { n, u })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.u
    }

    /// Matrix of the relabeling `(z_1..z_n) -> (z_n, z_1, ..., z_(n-1))`.
    pub fn shift_matrix(n: usize) -> DMatrix<Complex64> {
        DMatrix::from_fn(n, n, |r, c| {
            if c == (r + n - 1) % n {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    /// Max entry of `|U U* - Id|`.
    pub fn unitarity_defect(&self) -> f64 {
        let p = &self.u * self.u.adjoint();
        let mut d: f64 = 0.0;
        for r in 0..self.n {
            for c in 0..self.n {
                let want = if r == c { 1.0 } else { 0.0 };
                d = d.max((p[(r, c)] - want).norm());
            }
        }
        d
    }

    /// Largest off-diagonal magnitude of `U Shift U*`.
    pub fn shift_offdiagonal(&self) -> f64 {
        let p = &self.u * Self::shift_matrix(self.n) * self.u.adjoint();
        let mut d: f64 = 0.0;
        for r in 0..self.n {
            for c in 0..self.n {
                if r != c {
                    d = d.max(p[(r, c)].norm());
                }
            }
        }
        d
    }

    /// Diagonal of `U Shift U*`: `exp(-2 pi i k/n)` for `k = 1..n`.
    pub fn shift_eigenvalues(&self) -> Vec<Complex64> {
        shift_phases(self.n)
    }
}

fn shift_phases(n: usize) -> Vec<Complex64> {
    (1..=n).map(|k| Complex64::from_polar(1.0, -2.0 * PI * (k % n) as f64 / n as f64)).collect()
}

/// `W = U Z` (forward) or `Z = U* W` (inverse).
pub fn lim_transform(frame: &LimFrame, z: &[Complex64], dir: Direction) -> Result<Vec<Complex64>> {
    if z.len() != frame.n {
        return Err(Error::DimensionMismatch { expected: frame.n, found: z.len() });
    }
    let n = frame.n;
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for (r, o) in out.iter_mut().enumerate() {
        for (c, w) in z.iter().enumerate() {
            *o += match dir {
                Direction::Forward => frame.u[(r, c)] * w,
                Direction::Inverse => frame.u[(c, r)].conj() * w,
            };
        }
    }
    Ok(out)
}

/// Reduced state in `CP^(n-1)`.
pub fn reduce_cpn1(z: &VortexState) -> Result<ProjectivePoint> {
    hopf_project(z.points())
}

/// Centred reduced state in `CP^(n-2)`: the first `n-1` frame coordinates.
pub fn reduce_cpn2(frame: &LimFrame, z: &VortexState) -> Result<ProjectivePoint> {
    let mut w = lim_transform(frame, z.points(), Direction::Forward)?;
    w.pop();
    hopf_project(&w)
}

/// Cyclic action on `CP^(n-1)`: `[z_1:...:z_n] -> [z_n:z_1:...:z_(n-1)]`.
pub fn sigma1(p: &ProjectivePoint) -> ProjectivePoint {
    let mut v = p.v.clone();
    v.rotate_right(1);
    ProjectivePoint { v }
}

/// Cyclic action on `CP^(n-2)`, `n = k + 2`, as the diagonal phase
/// multiplication `w_k -> exp(-2 pi i k/n) w_k`.
pub fn sigma2(q: &ProjectivePoint) -> ProjectivePoint {
    let n = q.v.len() + 1;
    let ph = shift_phases(n);
    ProjectivePoint { v: q.v.iter().zip(&ph).map(|(w, e)| w * e).collect() }
}

/// The same action through the frame: append 0, map back to configuration
/// space, relabel cyclically, map forward, drop the (zero) centroid
/// coordinate and re-project.
pub fn sigma2_composite(frame: &LimFrame, q: &ProjectivePoint) -> Result<ProjectivePoint> {
    if q.v.len() + 1 != frame.n {
        return Err(Error::DimensionMismatch { expected: frame.n - 1, found: q.v.len() });
    }
    let mut w = q.v.clone();
    w.push(Complex64::new(0.0, 0.0));
    let mut z = lim_transform(frame, &w, Direction::Inverse)?;
    z.rotate_right(1);
    let mut w2 = lim_transform(frame, &z, Direction::Forward)?;
    w2.pop();
    ProjectivePoint::new(w2)
}
