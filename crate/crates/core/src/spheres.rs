//! Explicit choreographic holomorphic spheres in `CP^(n-1)` and `CP^(n-2)`.
//!
//! Each sphere is a projective line `z -> [zeta z P + Q]` joining two
//! cyclically fixed configurations. Rotating the domain by `2 pi / n`
//! corresponds to the cyclic action on the target.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::choreography::{LoopSample, Space};
use crate::error::{Error, Result};
use crate::projective::{fs_distance, sigma1, sigma2, ProjectivePoint};

pub const DEFAULT_QUAD_TOL: f64 = 1e-8;
/// Default area of the unit-disc part of a normalized sphere (half the line).
pub const DEFAULT_DISC_AREA: f64 = PI / 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Target {
    CPn1,
    CPn2,
}

impl Target {
    pub fn space(self) -> Space {
        match self {
            Target::CPn1 => Space::CPn1,
            Target::CPn2 => Space::CPn2,
        }
    }
}

impl std::str::FromStr for Target {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cpn1" => Ok(Target::CPn1),
            "cpn2" => Ok(Target::CPn2),
            _ => Err(Error::InvalidConfig(format!("unknown target {s:?} (cpn1 or cpn2)"))),
        }
    }
}

/// A point of the Riemann sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ExtendedComplex {
    Finite(Complex64),
    Infinity,
}

impl From<Complex64> for ExtendedComplex {
    fn from(z: Complex64) -> Self {
        ExtendedComplex::Finite(z)
    }
}

impl ExtendedComplex {
    /// Multiplication by a nonzero complex number; fixes infinity.
    pub fn scale(self, c: Complex64) -> Self {
        match self {
            ExtendedComplex::Finite(z) => ExtendedComplex::Finite(z * c),
            ExtendedComplex::Infinity => ExtendedComplex::Infinity,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphereMap {
    pub n: usize,
    pub target: Target,
    pub a: ProjectivePoint,
    pub b: ProjectivePoint,
    pub moebius_scale: Complex64,
}

fn unit_roots(n: usize, step: usize) -> Vec<Complex64> {
    (1..=n).map(|j| Complex64::from_polar(1.0, 2.0 * PI * ((step * j) % n) as f64 / n as f64)).collect()
}

fn check_target(n: usize, target: Target) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidConfig(format!("sphere needs n >= 2, got {n}")));
    }
    if target == Target::CPn2 {
        if n % 2 != 0 {
            return Err(Error::OddN(n));
        }
        if n < 4 {
            return Err(Error::InvalidConfig("CP^(n-2) sphere needs n >= 4".into()));
        }
    }
    Ok(())
}

/// The cyclically fixed endpoint configurations `(A, B)`.
///
/// `CP^(n-1)`: `A = [1:...:1]` (total collision) and
/// `B = [e^(2 pi i/n) : ... : 1]` (regular polygon).
/// `CP^(n-2)`: frame images of the doubled `n/2`-gon and of the `n`-gon,
/// which in the Fourier frame are the first two coordinate points.
pub fn make_configurations(n: usize, target: Target) -> Result<(ProjectivePoint, ProjectivePoint)> {
    check_target(n, target)?;
    match target {
        Target::CPn1 => Ok((
            ProjectivePoint::new(vec![Complex64::new(1.0, 0.0); n])?,
            ProjectivePoint::new(unit_roots(n, 1))?,
        )),
        Target::CPn2 => {
            use crate::projective::{lim_transform, Direction, LimFrame};
            let frame = LimFrame::new(n)?;
            let reduce = |z: Vec<Complex64>| -> Result<ProjectivePoint> {
                let mut w = lim_transform(&frame, &z, Direction::Forward)?;
                w.pop();
                ProjectivePoint::new(w)
            };
            Ok((reduce(unit_roots(n, 2))?, reduce(unit_roots(n, 1))?))
        }
    }
}

impl SphereMap {
    /// The explicit sphere with `zeta = 1`.
    pub fn new(n: usize, target: Target) -> Result<Self> {
        let (a, b) = make_configurations(n, target)?;
        Ok(SphereMap { n, target, a, b, moebius_scale: Complex64::new(1.0, 0.0) })
    }

    /// A pencil through arbitrary endpoints (no symmetry implied).
    pub fn with_endpoints(
        n: usize,
        target: Target,
        a: ProjectivePoint,
        b: ProjectivePoint,
        moebius_scale: Complex64,
    ) -> Result<Self> {
        let dim = match target {
            Target::CPn1 => n,
            Target::CPn2 => n - 1,
        };
        for p in [&a, &b] {
            if p.coords().len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: p.coords().len() });
            }
        }
        if moebius_scale.norm() == 0.0 || !moebius_scale.norm().is_finite() {
            return Err(Error::InvalidConfig("moebius scale must be nonzero".into()));
        }
        Ok(SphereMap { n, target, a, b, moebius_scale })
    }

    pub fn with_scale(&self, zeta: Complex64) -> Self {
        SphereMap { moebius_scale: zeta, ..self.clone() }
    }

    /// `(P, Q)` with `u(z) = [zeta z P + Q]`.
    fn pencil(&self) -> (&[Complex64], &[Complex64]) {
        match self.target {
            Target::CPn1 => (self.a.coords(), self.b.coords()),
            Target::CPn2 => (self.b.coords(), self.a.coords()),
        }
    }

    /// Lift at a finite point and its derivative in `z`.
    fn lift(&self, z: Complex64) -> (Vec<Complex64>, Vec<Complex64>) {
        let (p, q) = self.pencil();
        let zeta = self.moebius_scale;
        let v = p.iter().zip(q).map(|(x, y)| zeta * z * x + y).collect();
        let dv = p.iter().map(|x| zeta * x).collect();
        (v, dv)
    }

    /// Lift in the chart `w = 1/z` around infinity.
    fn lift_inverted(&self, w: Complex64) -> (Vec<Complex64>, Vec<Complex64>) {
        let (p, q) = self.pencil();
        let zeta = self.moebius_scale;
        let v = p.iter().zip(q).map(|(x, y)| zeta * x + w * y).collect();
        (v, q.to_vec())
    }

    fn act(&self, p: &ProjectivePoint) -> ProjectivePoint {
        match self.target {
            Target::CPn1 => sigma1(p),
            Target::CPn2 => sigma2(p),
        }
    }
}

/// `u(z)`; `u(infinity)` is the coefficient of `z` in the pencil.
pub fn evaluate_sphere(s: &SphereMap, z: ExtendedComplex) -> ProjectivePoint {
    let v = match z {
        ExtendedComplex::Finite(z) => s.lift(z).0,
        ExtendedComplex::Infinity => s.pencil().0.to_vec(),
    };
    // P and Q are independent for every sphere built here, so v never vanishes.
    ProjectivePoint::new(v).expect("pencil through distinct points")
}

/// Largest `d_FS(u(e^(2 pi i/n) z), sigma u(z))` over the samples.
pub fn equivariance_defect(s: &SphereMap, samples: &[ExtendedComplex]) -> f64 {
    let rot = Complex64::from_polar(1.0, 2.0 * PI / s.n as f64);
    samples
        .iter()
        .map(|z| {
            let lhs = evaluate_sphere(s, z.scale(rot));
            let rhs = s.act(&evaluate_sphere(s, *z));
            fs_distance(&lhs, &rhs).expect("same dimension")
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    UnitDisc,
    Full,
}

fn area_density(v: &[Complex64], dv: &[Complex64]) -> f64 {
    let nv: f64 = v.iter().map(|x| x.norm_sqr()).sum();
    let nd: f64 = dv.iter().map(|x| x.norm_sqr()).sum();
    let c: Complex64 = v.iter().zip(dv).map(|(x, y)| x.conj() * y).sum();
    ((nv * nd - c.norm_sqr()) / (nv * nv)).max(0.0)
}

// Gauss-Kronrod 7-15 nodes and weights on [-1, 1].
const GK_X: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const GK_WK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const GK_WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15(f: &mut dyn FnMut(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * GK_WK[7];
    let mut g = fc * GK_WG[3];
    for i in 0..7 {
        let x = h * GK_X[i];
        let s = f(c - x) + f(c + x);
        k += GK_WK[i] * s;
        if i % 2 == 1 {
            g += GK_WG[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

fn adaptive(f: &mut dyn FnMut(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> (f64, f64) {
    let (v, e) = gk15(f, a, b);
    if e <= tol || depth == 0 {
        return (v, e);
    }
    let m = 0.5 * (a + b);
    let (v1, e1) = adaptive(f, a, m, 0.5 * tol, depth - 1);
    let (v2, e2) = adaptive(f, m, b, 0.5 * tol, depth - 1);
    (v1 + v2, e1 + e2)
}

/// Integral over `|z| <= 1` of the density in one chart: periodic
/// trapezoid in the angle (doubled until stable), adaptive Gauss-Kronrod
/// in the radius.
fn disc_area(lift: &dyn Fn(Complex64) -> (Vec<Complex64>, Vec<Complex64>), tol: f64) -> (f64, f64) {
    let ring = |r: f64, m: usize| -> f64 {
        let mut s = 0.0;
        for j in 0..m {
            let (v, dv) = lift(Complex64::from_polar(r, 2.0 * PI * j as f64 / m as f64));
            s += area_density(&v, &dv);
        }
        2.0 * PI * s / m as f64
    };
    let mut m = 16;
    let mut worst_ang: f64 = 0.0;
    let mut f = |r: f64| -> f64 {
        if r == 0.0 {
            return 0.0;
        }
        loop {
            let a = ring(r, m);
            let b = ring(r, 2 * m);
            let d = (a - b).abs();
            if d <= 1e-3 * tol || m >= 1 << 14 {
                worst_ang = worst_ang.max(d * r);
                return r * b;
            }
            m *= 2;
        }
    };
    let (v, e) = adaptive(&mut f, 0.0, 1.0, tol, 30);
    (v, e + worst_ang)
}

/// Pulled-back Fubini-Study area (a line has area `pi`).
pub fn fs_area(s: &SphereMap, region: Region, quad_tol: f64) -> Result<f64> {
    if !(quad_tol > 0.0) {
        return Err(Error::InvalidConfig(format!("quad_tol must be positive, got {quad_tol}")));
    }
    let inner = |z: Complex64| s.lift(z);
    let (mut area, mut err) = disc_area(&inner, 0.25 * quad_tol);
    if region == Region::Full {
        let outer = |w: Complex64| s.lift_inverted(w);
        let (a2, e2) = disc_area(&outer, 0.25 * quad_tol);
        area += a2;
        err += e2;
    }
    if err > quad_tol || !area.is_finite() {
        return Err(Error::QuadratureFailure { estimate: err, tol: quad_tol });
    }
    Ok(area)
}

/// Rescales `|zeta|` (keeping its argument) so that the unit-disc area equals
/// `disc_area`. The disc area grows monotonically from 0 to `pi` with `|zeta|`.
pub fn normalize_scale(s: &SphereMap, disc_area: f64, quad_tol: f64) -> Result<SphereMap> {
    if !(disc_area > 0.0 && disc_area < PI) {
        return Err(Error::InvalidConfig(format!("disc area must lie in (0, pi), got {disc_area}")));
    }
    let phase = Complex64::from_polar(1.0, s.moebius_scale.arg());
    let area = |r: f64| fs_area(&s.with_scale(phase * r), Region::UnitDisc, quad_tol);
    let (mut lo, mut hi) = (1.0f64, 1.0f64);
    while area(lo)? > disc_area {
        lo *= 0.5;
        if lo < 1e-12 {
            return Err(Error::NoConvergence { iterations: 0, residual: disc_area });
        }
    }
    while area(hi)? < disc_area {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::NoConvergence { iterations: 0, residual: disc_area });
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if area(mid)? < disc_area {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * hi {
            break;
        }
    }
    Ok(s.with_scale(phase * (0.5 * (lo + hi))))
}

/// The reduced loop `t -> u(radius e^(it))`, `t` in `[0, 2 pi)`, sampled at
/// `m` points (a multiple of `n`).
pub fn loop_at_radius(s: &SphereMap, radius: f64, m: usize) -> Result<LoopSample> {
    if !(radius > 0.0) {
        return Err(Error::InvalidConfig(format!("radius must be positive, got {radius}")));
    }
    let pts: Vec<ProjectivePoint> = (0..m)
        .map(|j| {
            let z = Complex64::from_polar(radius, 2.0 * PI * j as f64 / m as f64);
            evaluate_sphere(s, z.into())
        })
        .collect();
    LoopSample::from_points(s.target.space(), 2.0 * PI, s.n, &pts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::choreography::chore_defect;
    use rand::{Rng, SeedableRng};

    fn c(x: f64, y: f64) -> Complex64 {
        Complex64::new(x, y)
    }

    fn random_samples(k: usize, seed: u64) -> Vec<ExtendedComplex> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut v: Vec<ExtendedComplex> = (0..k)
            .map(|_| {
                let r = (rng.gen_range(-3.0f64..3.0)).exp();
                Complex64::from_polar(r, rng.gen_range(0.0..2.0 * PI)).into()
            })
            .collect();
        v.push(ExtendedComplex::Infinity);
        v.push(c(0.0, 0.0).into());
        v
    }

    #[test]
    fn triangle_endpoints_and_value() {
        let s = SphereMap::new(3, Target::CPn1).unwrap();
        let w = Complex64::from_polar(1.0, 2.0 * PI / 3.0);
        let b = ProjectivePoint::new(vec![w, w * w, c(1.0, 0.0)]).unwrap();
        assert!(fs_distance(&evaluate_sphere(&s, c(0.0, 0.0).into()), &b).unwrap() < 1e-15);
        let a = ProjectivePoint::new(vec![c(1.0, 0.0); 3]).unwrap();
        assert!(fs_distance(&evaluate_sphere(&s, ExtendedComplex::Infinity), &a).unwrap() < 1e-15);
        let at1 = ProjectivePoint::new(vec![c(1.0, 0.0) + w, c(1.0, 0.0) + w * w, c(2.0, 0.0)]).unwrap();
        assert!(fs_distance(&evaluate_sphere(&s, c(1.0, 0.0).into()), &at1).unwrap() < 1e-15);
    }

    #[test]
    fn cpn2_endpoints_swap_roles() {
        let s = SphereMap::new(4, Target::CPn2).unwrap();
        assert!(fs_distance(&evaluate_sphere(&s, c(0.0, 0.0).into()), &s.a).unwrap() < 1e-15);
        assert!(fs_distance(&evaluate_sphere(&s, ExtendedComplex::Infinity), &s.b).unwrap() < 1e-15);
        assert_eq!(make_configurations(5, Target::CPn2).unwrap_err(), Error::OddN(5));
    }

    #[test]
    fn endpoints_are_fixed() {
        for n in 2..=12 {
            let (a, b) = make_configurations(n, Target::CPn1).unwrap();
            assert!(fs_distance(&sigma1(&a), &a).unwrap() < 1e-12);
            assert!(fs_distance(&sigma1(&b), &b).unwrap() < 1e-12);
            if n % 2 == 0 && n >= 4 {
                let (a, b) = make_configurations(n, Target::CPn2).unwrap();
                assert!(fs_distance(&sigma2(&a), &a).unwrap() < 1e-12);
                assert!(fs_distance(&sigma2(&b), &b).unwrap() < 1e-12);
            }
        }
    }

    #[test]
    fn equivariance_and_negative_control() {
        for n in 2..=12 {
            let s = SphereMap::new(n, Target::CPn1).unwrap();
            assert!(equivariance_defect(&s, &random_samples(100, n as u64)) < 1e-12);
        }
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let mut rp = || {
            ProjectivePoint::new(
                (0..5).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect(),
            )
            .unwrap()
        };
        let bad = SphereMap::with_endpoints(5, Target::CPn1, rp(), rp(), c(1.0, 0.0)).unwrap();
        assert!(equivariance_defect(&bad, &random_samples(100, 3)) > 0.1);
    }

    #[test]
    fn areas_match_closed_form() {
        // orthonormal pencil: disc area pi |zeta|^2 / (1 + |zeta|^2)
        for (n, t) in [(3, Target::CPn1), (6, Target::CPn2)] {
            for zeta in [c(1.0, 0.0), c(0.3, 0.4), c(2.0, -1.0)] {
                let s = SphereMap::new(n, t).unwrap().with_scale(zeta);
                let disc = fs_area(&s, Region::UnitDisc, 1e-10).unwrap();
                let r2 = zeta.norm_sqr();
                assert!((disc - PI * r2 / (1.0 + r2)).abs() < 1e-9, "{disc}");
                let full = fs_area(&s, Region::Full, 1e-10).unwrap();
                assert!((full - PI).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn normalization_hits_half_area() {
        let s = SphereMap::new(4, Target::CPn1).unwrap().with_scale(c(0.1, 0.2));
        let t = normalize_scale(&s, DEFAULT_DISC_AREA, 1e-10).unwrap();
        assert!((fs_area(&t, Region::UnitDisc, 1e-10).unwrap() - PI / 2.0).abs() < 1e-9);
        assert!((t.moebius_scale.norm() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn circles_are_reduced_choreographies() {
        let s = SphereMap::new(5, Target::CPn1).unwrap();
        for r in [0.1, 1.0, 7.0] {
            assert!(chore_defect(&loop_at_radius(&s, r, 50).unwrap()).unwrap() < 1e-10);
        }
        let s = SphereMap::new(6, Target::CPn2).unwrap();
        assert!(chore_defect(&loop_at_radius(&s, 0.5, 60).unwrap()).unwrap() < 1e-10);
    }

    #[test]
    fn circles_approach_endpoints() {
        let s = SphereMap::new(4, Target::CPn1).unwrap();
        let mut last = f64::INFINITY;
        for k in 1..8 {
            let z = Complex64::from_polar((-(k as f64)).exp(), 0.7);
            let d = fs_distance(&evaluate_sphere(&s, z.into()), &s.b).unwrap();
            assert!(d < last);
            last = d;
        }
    }
}
