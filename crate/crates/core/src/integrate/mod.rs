//! Time integration of the vortex dynamics and relative equilibria.

mod dop853;
mod relative_equilibrium;

pub use dop853::{Dop853, StepError};
pub use relative_equilibrium::{
    find_relative_equilibrium, find_relative_equilibrium_with, relative_equilibrium_residual, ReOptions,
    RelativeEquilibrium, DEFAULT_RE_MAX_ITER, DEFAULT_RE_TOL,
};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonians::{
    first_integrals, vector_field_complex, Family, FirstIntegrals, SystemSpec, VortexState,
};

/// Stored samples of one integration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub spec: SystemSpec,
    pub times: Vec<f64>,
    pub states: Vec<VortexState>,
    pub integrals: Vec<FirstIntegrals>,
}

/// Largest deviation of each first integral from its initial value,
/// divided by `max(|initial|, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Drift {
    pub h: f64,
    pub i: f64,
    pub p: f64,
    pub q: f64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last_state(&self) -> Option<&VortexState> {
        self.states.last()
    }

    pub fn drift(&self) -> Drift {
        let Some(first) = self.integrals.first() else {
            return Drift { h: 0.0, i: 0.0, p: 0.0, q: 0.0 };
        };
        let rel = |get: fn(&FirstIntegrals) -> f64| {
            let x0 = get(first);
            self.integrals.iter().map(|f| (get(f) - x0).abs() / x0.abs().max(1.0)).fold(0.0, f64::max)
        };
        Drift { h: rel(|f| f.h), i: rel(|f| f.i), p: rel(|f| f.p), q: rel(|f| f.q) }
    }
}

fn admissible(spec: &SystemSpec, p: &[Complex64]) -> bool {
    let eps = spec.collision_eps;
    for i in 0..p.len() {
        if !(p[i].re.is_finite() && p[i].im.is_finite()) {
            return false;
        }
        if spec.family == Family::Bec && p[i].norm_sqr() >= 1.0 {
            return false;
        }
        for j in i + 1..p.len() {
            if (p[i] - p[j]).norm() <= eps {
                return false;
            }
        }
    }
    true
}

fn as_complex(y: &[f64]) -> &[Complex64] {
    // SAFETY: Complex64 is repr(C) { re, im } so a [f64; 2n] slice has the
    // same layout as [Complex64; n].
    debug_assert!(y.len() % 2 == 0);
    unsafe { std::slice::from_raw_parts(y.as_ptr() as *const Complex64, y.len() / 2) }
}

fn as_complex_mut(y: &mut [f64]) -> &mut [Complex64] {
    debug_assert!(y.len() % 2 == 0);
    unsafe { std::slice::from_raw_parts_mut(y.as_mut_ptr() as *mut Complex64, y.len() / 2) }
}

/// Runs the integrator through `outputs`, calling `record` for every
/// accepted step (and every output time).
fn run(
    spec: &SystemSpec,
    z0: &VortexState,
    outputs: &[f64],
    tol: f64,
    mut record: impl FnMut(f64, &[f64], bool),
) -> Result<VortexState> {
    spec.check(z0)?;
    let scale = z0.norm().max(1.0);
    if !(tol > 0.0) {
        return Err(Error::InvalidConfig(format!("tolerance must be positive, got {tol}")));
    }
    let rhs = |y: &[f64], dy: &mut [f64]| -> std::result::Result<(), ()> {
        let p = as_complex(y);
        if !admissible(spec, p) {
            return Err(());
        }
        vector_field_complex(spec, p, as_complex_mut(dy));
        Ok(())
    };
    let mut last_gap = f64::INFINITY;
    let observe = |t: f64, y: &[f64], out: bool| -> std::result::Result<(), ()> {
        last_gap = min_gap(as_complex(y));
        if !admissible(spec, as_complex(y)) {
            return Err(());
        }
        record(t, y, out);
        Ok(())
    };
    let y =
        Dop853::new(step_tolerance(tol)).integrate(rhs, 0.0, &z0.to_xy(), outputs, observe).map_err(|e| {
            match e {
                StepError::Rhs((), t) => Error::CollisionApproach { t },
                // Step collapse right next to the singular set is a collision,
                // not a solver fault.
                StepError::Underflow(t) | StepError::Budget(t) => {
                    if last_gap < NEAR_COLLISION * scale {
                        Error::CollisionApproach { t }
                    } else {
                        Error::StepFailure { t }
                    }
                }
            }
        })?;
    VortexState::from_xy(&y)
}

const NEAR_COLLISION: f64 = 1e-6;

/// Per-step tolerance handed to the integrator. Local errors accumulate
/// over a run, so the user tolerance is tightened to keep the global error
/// near `tol`, floored well above round-off.
fn step_tolerance(tol: f64) -> f64 {
    (tol * 1e-3).max(2.5e-14).min(tol)
}

fn min_gap(p: &[Complex64]) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            best = best.min((p[i] - p[j]).norm());
        }
    }
    best
}

/// Integrates from `z0` to `t_end >= 0`, storing every accepted step.
pub fn flow(spec: &SystemSpec, z0: &VortexState, t_end: f64, tol: f64) -> Result<Trajectory> {
    if !(t_end >= 0.0) {
        return Err(Error::InvalidConfig(format!("flow time must be >= 0, got {t_end}")));
    }
    let mut traj = Trajectory { spec: spec.clone(), times: vec![], states: vec![], integrals: vec![] };
    let mut push = |t: f64, y: &[f64]| {
        if traj.times.last().is_some_and(|last| *last >= t) {
            return;
        }
        let z = VortexState::from_xy(y).expect("even length");
        let f = first_integrals(spec, &z).expect("admissible state");
        traj.times.push(t);
        traj.states.push(z);
        traj.integrals.push(f);
    };
    run(spec, z0, &[0.0, t_end], tol, |t, y, _| push(t, y))?;
    Ok(traj)
}

/// Integrates from `z0` and records the state exactly at each of `times`
/// (strictly increasing, starting at or after 0).
pub fn flow_sampled(spec: &SystemSpec, z0: &VortexState, times: &[f64], tol: f64) -> Result<Trajectory> {
    if times.windows(2).any(|w| !(w[1] > w[0])) || times.first().is_some_and(|t| *t < 0.0) {
        return Err(Error::InvalidConfig("sample times must be increasing and >= 0".into()));
    }
    let mut traj = Trajectory {
        spec: spec.clone(),
        times: Vec::with_capacity(times.len()),
        states: Vec::with_capacity(times.len()),
        integrals: Vec::with_capacity(times.len()),
    };
    if times.is_empty() {
        spec.check(z0)?;
        return Ok(traj);
    }
    let mut next = 0;
    run(spec, z0, times, tol, |t, y, out| {
        if out && next < times.len() && t == times[next] {
            let z = VortexState::from_xy(y).expect("even length");
            let f = first_integrals(spec, &z).expect("admissible state");
            traj.times.push(t);
            traj.states.push(z);
            traj.integrals.push(f);
            next += 1;
        }
    })?;
    Ok(traj)
}

/// Time-`t` flow map; `t` may be negative.
pub fn flow_map(spec: &SystemSpec, z0: &VortexState, t: f64, tol: f64) -> Result<VortexState> {
    if t == 0.0 {
        spec.check(z0)?;
        return Ok(z0.clone());
    }
    run(spec, z0, &[t], tol, |_, _, _| {})
}
