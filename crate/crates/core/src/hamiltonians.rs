//! The three concrete vortex-type Hamiltonians, their gradients, the
//! vorticity-weighted vector fields and the first integrals.
//!
//! Positions are stored as complex numbers `z = x + i y`. The gradient with
//! respect to `(x_i, y_i)` is returned in the same packing, i.e. as
//! `dH/dx_i + i dH/dy_i`, and flattened to `[dH/dx_1, dH/dy_1, ...]` by
//! [`grad_energy`].

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default minimal admissible distance between two vortices.
pub const DEFAULT_COLLISION_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// Planar point vortices of the incompressible Euler equation.
    Euler,
    /// Vortices in a trapped Bose-Einstein condensate (unit disc).
    Bec,
    /// Cyclic lattice of coupled oscillators (discrete NLS).
    Nls,
}

impl Family {
    /// Whether the Hamiltonian is invariant under common translations.
    pub fn translation_invariant(self) -> bool {
        matches!(self, Family::Euler)
    }
}

impl std::str::FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "euler" => Ok(Family::Euler),
            "bec" => Ok(Family::Bec),
            "nls" | "nls-sites" | "nlssites" => Ok(Family::Nls),
            other => Err(Error::InvalidSpec(format!("unknown family `{other}`"))),
        }
    }
}

/// Which system is simulated: family, vorticities and trap parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    pub family: Family,
    pub gamma: Vec<f64>,
    /// Trap precession, BEC only.
    pub mu: f64,
    /// Interaction strength, BEC only.
    pub lambda: f64,
    pub collision_eps: f64,
}

impl SystemSpec {
    fn build(family: Family, gamma: Vec<f64>, mu: f64, lambda: f64) -> Result<Self> {
        let min_n = if family == Family::Bec { 1 } else { 2 };
        if gamma.len() < min_n {
            return Err(Error::InvalidSpec(format!(
                "{family:?} needs at least {min_n} vortices, got {}",
                gamma.len()
            )));
        }
        if let Some(g) = gamma.iter().find(|g| !(g.is_finite() && **g > 0.0)) {
            return Err(Error::InvalidSpec(format!("vorticity {g} is not positive")));
        }
        if family == Family::Bec && !(mu > 0.0 && lambda > 0.0) {
            return Err(Error::InvalidSpec(format!(
                "BEC needs mu > 0 and lambda > 0 (got mu = {mu}, lambda = {lambda})"
            )));
        }
        Ok(SystemSpec { family, gamma, mu, lambda, collision_eps: DEFAULT_COLLISION_EPS })
    }

    pub fn euler(gamma: Vec<f64>) -> Result<Self> {
        Self::build(Family::Euler, gamma, 0.0, 0.0)
    }

    pub fn bec(gamma: Vec<f64>, mu: f64, lambda: f64) -> Result<Self> {
        Self::build(Family::Bec, gamma, mu, lambda)
    }

    pub fn nls(gamma: Vec<f64>) -> Result<Self> {
        Self::build(Family::Nls, gamma, 0.0, 0.0)
    }

    /// Family with `n` unit vorticities. `mu` and `lambda` are ignored unless BEC.
    pub fn identical(family: Family, n: usize, mu: f64, lambda: f64) -> Result<Self> {
        Self::build(family, vec![1.0; n], mu, lambda)
    }

    pub fn with_collision_eps(mut self, eps: f64) -> Self {
        self.collision_eps = eps;
        self
    }

    pub fn n(&self) -> usize {
        self.gamma.len()
    }

    pub fn identical_vorticities(&self) -> bool {
        self.gamma.iter().all(|g| *g == self.gamma[0])
    }

    /// Validates a state against this spec (size, collisions, disc domain).
    pub fn check(&self, z: &VortexState) -> Result<()> {
        if z.n() != self.n() {
            return Err(Error::DimensionMismatch { expected: self.n(), found: z.n() });
        }
        let p = z.points();
        if let Some(bad) = p.iter().position(|w| !(w.re.is_finite() && w.im.is_finite())) {
            return Err(Error::Domain(format!("vortex {} has a non-finite position", bad + 1)));
        }
        for i in 0..p.len() {
            for j in i + 1..p.len() {
                let d = (p[i] - p[j]).norm();
                if d <= self.collision_eps {
                    return Err(Error::Collision { i: i + 1, j: j + 1, distance: d });
                }
            }
        }
        if self.family == Family::Bec {
            if let Some(i) = p.iter().position(|w| w.norm_sqr() >= 1.0) {
                return Err(Error::Domain(format!(
                    "vortex {} at |z| = {} is outside the unit disc",
                    i + 1,
                    p[i].norm()
                )));
            }
        }
        Ok(())
    }
}

/// A configuration of `n` planar points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VortexState {
    z: Vec<Complex64>,
}

impl VortexState {
    pub fn new(z: Vec<Complex64>) -> Self {
        VortexState { z }
    }

    /// From interleaved coordinates `[x1, y1, x2, y2, ...]`.
    pub fn from_xy(xy: &[f64]) -> Result<Self> {
        if xy.len() % 2 != 0 {
            return Err(Error::DimensionMismatch { expected: xy.len() + 1, found: xy.len() });
        }
        Ok(VortexState { z: xy.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect() })
    }

    pub fn to_xy(&self) -> Vec<f64> {
        self.z.iter().flat_map(|w| [w.re, w.im]).collect()
    }

    /// Regular polygon `z_j = r exp(2 pi i (j-1)/n)`, counter-clockwise labels.
    pub fn polygon(n: usize, radius: f64) -> Self {
        VortexState {
            z: (0..n).map(|j| Complex64::from_polar(radius, 2.0 * PI * j as f64 / n as f64)).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.z.len()
    }

    pub fn points(&self) -> &[Complex64] {
        &self.z
    }

    pub fn into_points(self) -> Vec<Complex64> {
        self.z
    }

    /// Cyclic relabeling `(z_1, ..., z_n) -> (z_n, z_1, ..., z_{n-1})`.
    pub fn cyclic_shift(&self) -> Self {
        let mut z = self.z.clone();
        z.rotate_right(1);
        VortexState { z }
    }

    /// Common counter-clockwise rotation by `angle` about the origin.
    pub fn rotated(&self, angle: f64) -> Self {
        let r = Complex64::from_polar(1.0, angle);
        VortexState { z: self.z.iter().map(|w| w * r).collect() }
    }

    pub fn translated(&self, c: Complex64) -> Self {
        VortexState { z: self.z.iter().map(|w| w + c).collect() }
    }

    pub fn scaled(&self, s: f64) -> Self {
        VortexState { z: self.z.iter().map(|w| w * s).collect() }
    }

    /// Arithmetic mean of the positions.
    pub fn centroid(&self) -> Complex64 {
        self.z.iter().sum::<Complex64>() / self.z.len() as f64
    }

    pub fn norm(&self) -> f64 {
        self.z.iter().map(|w| w.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Smallest pairwise squared distance.
    pub fn min_pair_distance_sqr(&self) -> f64 {
        let mut m = f64::INFINITY;
        for i in 0..self.z.len() {
            for j in i + 1..self.z.len() {
                m = m.min((self.z[i] - self.z[j]).norm_sqr());
            }
        }
        m
    }
}

/// Values of the first integrals at one state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FirstIntegrals {
    pub h: f64,
    pub i: f64,
    pub p: f64,
    pub q: f64,
    /// False when the family is not translation invariant: `P`, `Q` are then
    /// reported but not conserved.
    pub pq_conserved: bool,
}

fn log_dist_sqr(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm_sqr().ln()
}

/// The energy of `z`.
pub fn energy(spec: &SystemSpec, z: &VortexState) -> Result<f64> {
    spec.check(z)?;
    Ok(energy_unchecked(spec, z.points()))
}

pub(crate) fn energy_unchecked(spec: &SystemSpec, p: &[Complex64]) -> f64 {
    let g = &spec.gamma;
    let n = p.len();
    match spec.family {
        Family::Euler => {
            let mut s = 0.0;
            for i in 0..n {
                for j in i + 1..n {
                    s += g[i] * g[j] * log_dist_sqr(p[i], p[j]);
                }
            }
            -s / (4.0 * PI)
        }
        Family::Bec => {
            let mut trap = 0.0;
            for i in 0..n {
                trap += g[i] * g[i] * (1.0 / (1.0 - p[i].norm_sqr())).ln();
            }
            let mut pair = 0.0;
            for i in 0..n {
                for j in i + 1..n {
                    pair += g[i] * g[j] * log_dist_sqr(p[i], p[j]);
                }
            }
            -0.5 * (spec.mu * trap + spec.lambda * pair)
        }
        Family::Nls => {
            let mut s = 0.0;
            for j in 0..n {
                let k = (j + 1) % n;
                s += 0.5 * g[j] * g[j] * p[j].norm_sqr().powi(2) - g[j] * g[k] * (p[k] - p[j]).norm_sqr();
            }
            0.5 * s
        }
    }
}

/// Per-vortex gradient `dH/dx_i + i dH/dy_i`.
pub(crate) fn grad_complex(spec: &SystemSpec, p: &[Complex64], out: &mut [Complex64]) {
    let g = &spec.gamma;
    let n = p.len();
    out.iter_mut().for_each(|o| *o = Complex64::new(0.0, 0.0));
    match spec.family {
        Family::Euler | Family::Bec => {
            let pair_coef = if spec.family == Family::Euler { -1.0 / (2.0 * PI) } else { -spec.lambda };
            // each sum runs cyclically from i + 1, so relabeling the vortices
            // relabels the result bit for bit
            for i in 0..n {
                for k in 1..n {
                    let j = (i + k) % n;
                    let d = p[i] - p[j];
                    out[i] += d * (pair_coef * g[i] * g[j] / d.norm_sqr());
                }
            }
            if spec.family == Family::Bec {
                for i in 0..n {
                    out[i] -= p[i] * (spec.mu * g[i] * g[i] / (1.0 - p[i].norm_sqr()));
                }
            }
        }
        Family::Nls => {
            for j in 0..n {
                let next = (j + 1) % n;
                let prev = (j + n - 1) % n;
                out[j] += p[j] * (g[j] * g[j] * p[j].norm_sqr());
                out[j] -= (p[j] - p[next]) * (g[j] * g[next]);
                out[j] -= (p[j] - p[prev]) * (g[prev] * g[j]);
            }
        }
    }
}

/// Euclidean gradient of the energy, flattened as `[dH/dx_1, dH/dy_1, ...]`.
pub fn grad_energy(spec: &SystemSpec, z: &VortexState) -> Result<Vec<f64>> {
    spec.check(z)?;
    let mut g = vec![Complex64::new(0.0, 0.0); z.n()];
    grad_complex(spec, z.points(), &mut g);
    Ok(g.iter().flat_map(|w| [w.re, w.im]).collect())
}

/// `zdot_i = J grad_i H / Gamma_i` with `J = [[0, 1], [-1, 0]]`, written
/// in complex form as `-i grad_i H / Gamma_i`.
pub(crate) fn vector_field_complex(spec: &SystemSpec, p: &[Complex64], out: &mut [Complex64]) {
    grad_complex(spec, p, out);
    for (o, g) in out.iter_mut().zip(&spec.gamma) {
        *o = Complex64::new(o.im, -o.re) / *g;
    }
}

/// The vorticity-weighted Hamiltonian vector field, flattened like [`grad_energy`].
pub fn vector_field(spec: &SystemSpec, z: &VortexState) -> Result<Vec<f64>> {
    spec.check(z)?;
    let mut v = vec![Complex64::new(0.0, 0.0); z.n()];
    vector_field_complex(spec, z.points(), &mut v);
    Ok(v.iter().flat_map(|w| [w.re, w.im]).collect())
}

/// Vorticity-weighted moment of inertia `sum Gamma_i |z_i|^2`.
pub fn moment_of_inertia(spec: &SystemSpec, z: &VortexState) -> f64 {
    z.points().iter().zip(&spec.gamma).map(|(w, g)| g * w.norm_sqr()).sum()
}

/// Vorticity-weighted centroid `sum Gamma_i z_i / sum Gamma_i`; the plain
/// mean for identical vortices.
pub fn vorticity_centroid(spec: &SystemSpec, z: &[Complex64]) -> Complex64 {
    let total: f64 = spec.gamma.iter().sum();
    z.iter().zip(&spec.gamma).map(|(w, g)| w * *g).sum::<Complex64>() / total
}

/// `H`, `I` and the centroid `(P, Q)`.
pub fn first_integrals(spec: &SystemSpec, z: &VortexState) -> Result<FirstIntegrals> {
    let h = energy(spec, z)?;
    let c = vorticity_centroid(spec, z.points());
    Ok(FirstIntegrals {
        h,
        i: moment_of_inertia(spec, z),
        p: c.re,
        q: c.im,
        pq_conserved: spec.family.translation_invariant(),
    })
}
