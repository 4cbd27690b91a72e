//! Loop-space symmetry, choreography defects, the shooting residual for
//! relative choreographies and orbit classification.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonians::{moment_of_inertia, Family, SystemSpec, VortexState};
use crate::integrate::{flow_map, flow_sampled};
use crate::projective::{
    fs_distance, hopf_project, lim_transform, sigma1, sigma2, Direction, LimFrame, ProjectivePoint,
};

pub const DEFAULT_TRIVIALITY_EPS: f64 = 1e-3;
pub const DEFAULT_FIT_EPS: f64 = 1e-8;

/// Where the samples of a loop live.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Space {
    /// Positions in the plane, `n` complex numbers per sample.
    Ambient,
    /// `CP^(n-1)`, unit representatives of length `n`.
    CPn1,
    /// `CP^(n-2)` in frame coordinates, unit representatives of length `n-1`.
    CPn2,
}

impl Space {
    fn dim(self, n: usize) -> usize {
        match self {
            Space::Ambient | Space::CPn1 => n,
            Space::CPn2 => n - 1,
        }
    }
}

/// A closed loop sampled at `j T / m`, `j = 0..m-1`, with `n | m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopSample {
    space: Space,
    period: f64,
    n: usize,
    samples: Vec<Vec<Complex64>>,
}

impl LoopSample {
    pub fn new(space: Space, period: f64, n: usize, samples: Vec<Vec<Complex64>>) -> Result<Self> {
        if n < 2 || (space == Space::CPn2 && n < 3) {
            return Err(Error::InvalidConfig(format!("loop needs more particles, got n = {n}")));
        }
        if !(period > 0.0) {
            return Err(Error::InvalidConfig(format!("loop period must be positive, got {period}")));
        }
        let m = samples.len();
        if m == 0 || m % n != 0 {
            return Err(Error::GridMismatch { n, m });
        }
        let dim = space.dim(n);
        let mut samples = samples;
        for s in &mut samples {
            if s.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: s.len() });
            }
            if space != Space::Ambient {
                *s = ProjectivePoint::new(std::mem::take(s))?.coords().to_vec();
            }
        }
        Ok(LoopSample { space, period, n, samples })
    }

    /// Loop of projective points.
    pub fn from_points(space: Space, period: f64, n: usize, pts: &[ProjectivePoint]) -> Result<Self> {
        Self::new(space, period, n, pts.iter().map(|p| p.coords().to_vec()).collect())
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[Vec<Complex64>] {
        &self.samples
    }

    pub fn times(&self) -> Vec<f64> {
        let m = self.samples.len() as f64;
        (0..self.samples.len()).map(|j| self.period * j as f64 / m).collect()
    }

    fn point(&self, j: usize) -> ProjectivePoint {
        ProjectivePoint::new(self.samples[j].clone()).expect("unit representative")
    }

    fn distance(&self, a: &[Complex64], b: &[Complex64]) -> f64 {
        match self.space {
            Space::Ambient => a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt(),
            _ => fs_distance(
                &ProjectivePoint::new(a.to_vec()).expect("unit representative"),
                &ProjectivePoint::new(b.to_vec()).expect("unit representative"),
            )
            .expect("same dimension"),
        }
    }
}

fn act(space: Space, v: &[Complex64]) -> Vec<Complex64> {
    match space {
        Space::Ambient => {
            let mut w = v.to_vec();
            w.rotate_right(1);
            w
        }
        Space::CPn1 => sigma1(&ProjectivePoint::new(v.to_vec()).expect("unit")).coords().to_vec(),
        Space::CPn2 => sigma2(&ProjectivePoint::new(v.to_vec()).expect("unit")).coords().to_vec(),
    }
}

/// `(g Z)(t) = sigma Z(t - T/n)`, with the cyclic action matching the space.
pub fn apply_g(lp: &LoopSample) -> Result<LoopSample> {
    let m = lp.samples.len();
    if m % lp.n != 0 {
        return Err(Error::GridMismatch { n: lp.n, m });
    }
    let shift = m / lp.n;
    let samples = (0..m).map(|j| act(lp.space, &lp.samples[(j + m - shift) % m])).collect();
    Ok(LoopSample { samples, ..lp.clone() })
}

/// Largest pointwise distance between `g Z` and `Z`: Euclidean in the plane,
/// Fubini-Study in projective space.
pub fn chore_defect(lp: &LoopSample) -> Result<f64> {
    let g = apply_g(lp)?;
    Ok(g.samples.iter().zip(&lp.samples).map(|(a, b)| lp.distance(a, b)).fold(0.0, f64::max))
}

/// Average of `g^j Z` over `j = 0..n-1`; planar loops only.
pub fn symmetrize(lp: &LoopSample) -> Result<LoopSample> {
    if lp.space != Space::Ambient {
        return Err(Error::NotApplicable(
            "no linear average on projective space; symmetrize planar loops".into(),
        ));
    }
    let m = lp.samples.len();
    if m % lp.n != 0 {
        return Err(Error::GridMismatch { n: lp.n, m });
    }
    let mut acc: Vec<Vec<Complex64>> = lp.samples.clone();
    let mut cur = lp.clone();
    for _ in 1..lp.n {
        cur = apply_g(&cur)?;
        for (a, s) in acc.iter_mut().zip(&cur.samples) {
            a.iter_mut().zip(s).for_each(|(x, y)| *x += y);
        }
    }
    let inv = 1.0 / lp.n as f64;
    for a in &mut acc {
        a.iter_mut().for_each(|x| *x *= inv);
    }
    Ok(LoopSample { samples: acc, ..lp.clone() })
}

/// Largest Fubini-Study distance between two samples of the reduced loop.
/// Planar loops are projected to `CP^(n-1)` first.
pub fn fs_diameter(lp: &LoopSample) -> Result<f64> {
    let red;
    let lp = if lp.space == Space::Ambient {
        red = reduce_loop(lp, Space::CPn1)?;
        &red
    } else {
        lp
    };
    let pts: Vec<ProjectivePoint> = (0..lp.len()).map(|j| lp.point(j)).collect();
    let mut d: f64 = 0.0;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            d = d.max(fs_distance(&pts[i], &pts[j])?);
        }
    }
    Ok(d)
}

/// Projects a planar loop to `CP^(n-1)` or, after removing the centroid
/// coordinate, to `CP^(n-2)`.
pub fn reduce_loop(lp: &LoopSample, target: Space) -> Result<LoopSample> {
    if lp.space != Space::Ambient {
        return Err(Error::NotApplicable("loop is already reduced".into()));
    }
    let samples = match target {
        Space::Ambient => return Ok(lp.clone()),
        Space::CPn1 => lp
            .samples
            .iter()
            .map(|s| hopf_project(s).map(|p| p.coords().to_vec()))
            .collect::<Result<Vec<_>>>()?,
        Space::CPn2 => {
            let frame = LimFrame::new(lp.n)?;
            lp.samples
                .iter()
                .map(|s| {
                    let mut w = lim_transform(&frame, s, Direction::Forward)?;
                    w.pop();
                    hopf_project(&w).map(|p| p.coords().to_vec())
                })
                .collect::<Result<Vec<_>>>()?
        }
    };
    LoopSample::new(target, lp.period, lp.n, samples)
}

/// Reduced space in which a family's relative choreographies are compared:
/// `CP^(n-2)` for the translation-invariant Euler family, else `CP^(n-1)`.
pub fn reduced_space(spec: &SystemSpec) -> Space {
    if spec.family == Family::Euler && spec.n() >= 3 {
        Space::CPn2
    } else {
        Space::CPn1
    }
}

/// Integrates `z0` over `period` and samples it at `m` equally spaced times.
pub fn sample_flow(
    spec: &SystemSpec,
    z0: &VortexState,
    period: f64,
    m: usize,
    tol: f64,
) -> Result<LoopSample> {
    if !(period > 0.0) {
        return Err(Error::InvalidConfig(format!("loop period must be positive, got {period}")));
    }
    let times: Vec<f64> = (0..m).map(|j| period * j as f64 / m as f64).collect();
    let traj = flow_sampled(spec, z0, &times, tol)?;
    LoopSample::new(
        Space::Ambient,
        period,
        spec.n(),
        traj.states.into_iter().map(|s| s.into_points()).collect(),
    )
}

/// `R_(-theta) Phi_(T_seg)(Z0) - sigma Z0`, flattened as `[x1, y1, ...]`.
pub fn shooting_residual(
    spec: &SystemSpec,
    z0: &VortexState,
    t_seg: f64,
    theta: f64,
    tol: f64,
) -> Result<Vec<f64>> {
    if !(t_seg >= 0.0) {
        return Err(Error::InvalidConfig(format!("segment time must be >= 0, got {t_seg}")));
    }
    let end = flow_map(spec, z0, t_seg, tol)?;
    let back = end.rotated(-theta);
    let shifted = z0.cyclic_shift();
    Ok(back
        .points()
        .iter()
        .zip(shifted.points())
        .flat_map(|(a, b)| {
            let d = a - b;
            [d.re, d.im]
        })
        .collect())
}

/// Rotation best aligning `sigma Z_start` with `Z_end`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameAngle {
    /// In `[0, 2 pi)`.
    pub angle: f64,
    /// `|| R_angle sigma Z_start - Z_end ||`.
    pub mismatch: f64,
}

pub fn frame_angle(z_start: &VortexState, z_end: &VortexState) -> Result<FrameAngle> {
    if z_start.n() != z_end.n() {
        return Err(Error::DimensionMismatch { expected: z_start.n(), found: z_end.n() });
    }
    if z_start.norm() == 0.0 {
        return Err(Error::DegenerateInput("start configuration is zero".into()));
    }
    let s = z_start.cyclic_shift();
    let c: Complex64 = s.points().iter().zip(z_end.points()).map(|(a, b)| a.conj() * b).sum();
    let angle = if c.norm() > 0.0 { c.arg().rem_euclid(2.0 * PI) } else { 0.0 };
    let mismatch = s
        .rotated(angle)
        .points()
        .iter()
        .zip(z_end.points())
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt();
    Ok(FrameAngle { angle, mismatch })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Classification {
    TrivialRelativeEquilibrium,
    CentredPolygon,
    /// A persistent non-centred polygon with a constant trap term: ruled out
    /// for BEC, so its detection points at a numerical problem.
    InconsistentFit,
    NonTrivial,
    Unclassified,
}

/// A candidate relative choreography with its diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitResult {
    pub spec: SystemSpec,
    pub z0: VortexState,
    /// Segment time `T / n`.
    pub t_seg: f64,
    /// Frame rotation per segment.
    pub theta: f64,
    /// `|| shooting_residual ||`.
    pub residual: f64,
    /// Defect of the directly integrated loop in the reduced space.
    pub chore_defect: f64,
    pub fs_diameter: f64,
    pub energy: f64,
    pub i_level: f64,
    /// Largest `|H(t) - H(0)|` along the loop.
    pub h_deviation: f64,
    /// Largest `|I(t) - I_level|` along the loop.
    pub i_deviation: f64,
    /// Index of the start that produced this result.
    pub start: usize,
    pub classification: Classification,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifyOptions {
    pub triviality_eps: f64,
    pub fit_eps: f64,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions { triviality_eps: DEFAULT_TRIVIALITY_EPS, fit_eps: DEFAULT_FIT_EPS }
    }
}

pub fn classify_orbit(spec: &SystemSpec, result: &OrbitResult, lp: &LoopSample) -> Classification {
    classify_orbit_with(spec, result, lp, &ClassifyOptions::default())
}

/// Best polygon `c + a w^(k j)` through one configuration, for `k` coprime
/// to `n`: returns `(residual, c)`.
fn polygon_fit(p: &[Complex64]) -> (f64, Complex64) {
    let n = p.len();
    let c = p.iter().sum::<Complex64>() / n as f64;
    let mut best = (f64::INFINITY, c);
    for k in 1..n {
        if gcd(k, n) != 1 {
            continue;
        }
        let w: Vec<Complex64> =
            (0..n).map(|j| Complex64::from_polar(1.0, 2.0 * PI * (k * j % n) as f64 / n as f64)).collect();
        let a = p.iter().zip(&w).map(|(z, e)| (z - c) * e.conj()).sum::<Complex64>() / n as f64;
        let r = p.iter().zip(&w).map(|(z, e)| (z - c - a * e).norm_sqr()).sum::<f64>().sqrt();
        if r < best.0 {
            best = (r, c);
        }
    }
    best
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Classifies a candidate from its reduced (or planar) loop.
///
/// Reduced `CP^(n-1)` samples are lifted back to `I = result.i_level`; the
/// polygon test only looks at phase-invariant quantities, so the lost
/// global phase does not matter.
pub fn classify_orbit_with(
    spec: &SystemSpec,
    result: &OrbitResult,
    lp: &LoopSample,
    opts: &ClassifyOptions,
) -> Classification {
    if !result.fs_diameter.is_finite() {
        return Classification::Unclassified;
    }
    if result.fs_diameter <= opts.triviality_eps {
        return Classification::TrivialRelativeEquilibrium;
    }
    if spec.family != Family::Bec {
        return Classification::NonTrivial;
    }
    let configs: Option<Vec<Vec<Complex64>>> = match lp.space {
        Space::Ambient => Some(lp.samples.clone()),
        Space::CPn1 => lp
            .samples
            .iter()
            .map(|v| {
                let st = VortexState::new(v.clone());
                let i = moment_of_inertia(spec, &st);
                (i > 0.0 && result.i_level > 0.0)
                    .then(|| st.scaled((result.i_level / i).sqrt()).into_points())
            })
            .collect(),
        Space::CPn2 => None,
    };
    let Some(configs) = configs else {
        return Classification::Unclassified;
    };
    if configs.is_empty() || configs.iter().any(|c| c.len() != spec.n()) {
        return Classification::Unclassified;
    }
    let mut fit_ok = true;
    let mut centred = true;
    let mut trap = Vec::with_capacity(configs.len());
    for p in &configs {
        if p.iter().any(|w| !(w.norm_sqr() < 1.0)) {
            return Classification::Unclassified;
        }
        let (r, c) = polygon_fit(p);
        if !r.is_finite() {
            return Classification::Unclassified;
        }
        fit_ok &= r < opts.fit_eps;
        centred &= c.norm() < opts.fit_eps;
        trap.push(p.iter().map(|w| (1.0 - w.norm_sqr()).ln()).sum::<f64>());
    }
    let (lo, hi) = trap.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), t| (a.min(*t), b.max(*t)));
    let trap_const = hi - lo < opts.fit_eps;
    match (fit_ok && trap_const, centred) {
        (true, true) => Classification::CentredPolygon,
        (true, false) => Classification::InconsistentFit,
        _ => Classification::NonTrivial,
    }
}
