//! Multi-start shooting search for relative choreographies.
//!
//! Each start solves `R_(-theta) Phi_(T_seg)(Z0) = sigma Z0` for
//! `(Z0, T_seg, theta)` by damped Gauss-Newton with finite-difference
//! Jacobians, together with `I(Z0) = I_level`, the phase pin `Im z_1 = 0`
//! and optionally a centroid pin and an energy level. Converged candidates
//! are re-integrated over the full period and only kept if the loop itself
//! passes the defect and conservation checks.
//!
//! The existence theory bounds the period of the orbits it produces by
//! `T (h_inf - h_0) < pi` for a plateau Hamiltonian; that bound is not used
//! here, the search only certifies residuals.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::choreography::{
    chore_defect, classify_orbit_with, frame_angle, fs_diameter, reduce_loop, reduced_space, sample_flow,
    shooting_residual, Classification, ClassifyOptions, OrbitResult, DEFAULT_FIT_EPS, DEFAULT_TRIVIALITY_EPS,
};
use crate::error::{Error, Result};
use crate::hamiltonians::{
    energy, first_integrals, moment_of_inertia, vorticity_centroid, Family, SystemSpec, VortexState,
};
use crate::integrate::{find_relative_equilibrium, flow_sampled};
use crate::linalg::{fd_jacobian, norm};
use crate::parallel::map_indexed;
use crate::projective::{fs_distance, hopf_project, sigma1};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    pub i_level: f64,
    /// Adds `H(Z0) = energy_target` to the Newton system.
    pub energy_target: Option<f64>,
    pub n_starts: usize,
    pub seed: u64,
    pub newton_tol: f64,
    pub max_iter: usize,
    /// Window scanned for the first return; `None` derives it from the
    /// rotation period of the regular polygon at `i_level`.
    pub t_seg_range: Option<(f64, f64)>,
    pub perturbation_scale: f64,
    pub require_nontrivial: bool,
    /// Euler only: pin the centroid at the origin.
    pub centred: bool,
    /// Integration tolerance; `None` uses `newton_tol / 1000` (at least 1e-13).
    pub flow_tol: Option<f64>,
    /// Loop samples per segment for the acceptance checks.
    pub samples_per_segment: usize,
    pub triviality_eps: f64,
    pub fit_eps: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            i_level: 1.0,
            energy_target: None,
            n_starts: 16,
            seed: 0,
            newton_tol: 1e-9,
            max_iter: 40,
            t_seg_range: None,
            perturbation_scale: 0.05,
            require_nontrivial: false,
            centred: true,
            flow_tol: None,
            samples_per_segment: 8,
            triviality_eps: DEFAULT_TRIVIALITY_EPS,
            fit_eps: DEFAULT_FIT_EPS,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.i_level > 0.0) {
            return bad(format!("I_level must be positive, got {}", self.i_level));
        }
        if !(self.newton_tol > 0.0) {
            return bad(format!("newton_tol must be positive, got {}", self.newton_tol));
        }
        if self.max_iter == 0 {
            return bad("max_iter must be at least 1".into());
        }
        if let Some((a, b)) = self.t_seg_range {
            if !(a > 0.0 && b > a && b.is_finite()) {
                return bad(format!("T_seg range ({a}, {b}) is not a valid interval"));
            }
        }
        if !(self.perturbation_scale >= 0.0) {
            return bad("perturbation_scale must be >= 0".into());
        }
        if self.samples_per_segment == 0 {
            return bad("samples_per_segment must be >= 1".into());
        }
        if let Some(t) = self.flow_tol {
            if !(t > 0.0) {
                return bad(format!("flow_tol must be positive, got {t}"));
            }
        }
        if let Some(e) = self.energy_target {
            if !e.is_finite() {
                return bad("energy_target must be finite".into());
            }
        }
        Ok(())
    }

    fn flow_tol(&self) -> f64 {
        self.flow_tol.unwrap_or((self.newton_tol * 1e-3).max(1e-13))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SeedKind {
    Polygon,
    DoubledPolygon,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StartStatus {
    /// Converged and emitted.
    Accepted,
    /// Converged but dropped as a trivial relative equilibrium.
    FilteredTrivial,
    /// Converged shooting residual, but the re-integrated loop failed a check.
    Rejected,
    NoConvergence,
    Failed,
}

/// What happened to one start.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartReport {
    pub start: usize,
    pub seed_kind: SeedKind,
    pub status: StartStatus,
    pub iterations: usize,
    pub residual: Option<f64>,
    pub classification: Option<Classification>,
    pub message: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    /// Accepted orbits, by energy then start index.
    pub results: Vec<OrbitResult>,
    /// One entry per start, in start order.
    pub reports: Vec<StartReport>,
}

impl SearchOutcome {
    pub fn converged_any(&self) -> bool {
        self.reports.iter().any(|r| matches!(r.status, StartStatus::Accepted | StartStatus::FilteredTrivial))
    }
}

fn check_spec(spec: &SystemSpec, cfg: &SearchConfig) -> Result<()> {
    cfg.validate()?;
    if !spec.identical_vorticities() {
        return Err(Error::InvalidConfig(
            "search needs identical vorticities: relative choreographies of distinct \
             vortices do not exist"
                .into(),
        ));
    }
    if spec.n() < 2 {
        return Err(Error::InvalidConfig("search needs n >= 2".into()));
    }
    Ok(())
}

/// Rotation period of the regular polygon with `I = i_level`.
fn polygon_period(spec: &SystemSpec, i_level: f64) -> Option<f64> {
    let n = spec.n();
    let total: f64 = spec.gamma.iter().sum();
    let z = VortexState::polygon(n, (i_level / total).sqrt());
    let re = find_relative_equilibrium(spec, &z, i_level).ok()?;
    let p = re.period();
    (p.is_finite() && p > 0.0).then_some(p)
}

fn seed_state(
    spec: &SystemSpec,
    cfg: &SearchConfig,
    kind: SeedKind,
    rng: &mut ChaCha8Rng,
) -> Result<VortexState> {
    let n = spec.n();
    let mut p: Vec<Complex64> = match kind {
        SeedKind::Polygon => VortexState::polygon(n, 1.0).into_points(),
        SeedKind::DoubledPolygon => {
            let m = n / 2;
            (0..n)
                .map(|j| {
                    let r = if j < m { 1.2 } else { 0.8 };
                    Complex64::from_polar(r, 2.0 * PI * (j % m) as f64 / m as f64)
                })
                .collect()
        }
    };
    if cfg.perturbation_scale > 0.0 {
        // combination of discrete Fourier modes, the eigen-directions of
        // the cyclic relabeling
        for k in 0..n {
            let c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                * (cfg.perturbation_scale / (n as f64).sqrt());
            for (j, w) in p.iter_mut().enumerate() {
                *w += c * Complex64::from_polar(1.0, 2.0 * PI * (j * k % n) as f64 / n as f64);
            }
        }
    }
    let mut st = VortexState::new(p);
    if cfg.centred && spec.family == Family::Euler {
        st = st.translated(-vorticity_centroid(spec, st.points()));
    }
    let i = moment_of_inertia(spec, &st);
    if !(i > 0.0) {
        return Err(Error::DegenerateInput("seed has zero moment of inertia".into()));
    }
    st = st.scaled((cfg.i_level / i).sqrt());
    let z1 = st.points()[0];
    if z1.norm() > 0.0 {
        st = st.rotated(-z1.arg());
    }
    spec.check(&st)?;
    Ok(st)
}

/// First-return guess: the time in the window where the reduced state is
/// closest to its cyclic image, and the frame angle there.
fn initial_return(spec: &SystemSpec, z0: &VortexState, window: (f64, f64), tol: f64) -> Result<(f64, f64)> {
    let k = 96;
    let times: Vec<f64> = (0..=k).map(|j| window.0 + (window.1 - window.0) * j as f64 / k as f64).collect();
    let traj = flow_sampled(spec, z0, &times, tol)?;
    let target = sigma1(&hopf_project(z0.points())?);
    let mut best = (f64::INFINITY, window.0);
    for (t, s) in traj.times.iter().zip(&traj.states) {
        let d = fs_distance(&hopf_project(s.points())?, &target)?;
        if d < best.0 {
            best = (d, *t);
        }
    }
    let at = traj.states[traj.times.iter().position(|t| *t == best.1).unwrap_or(0)].clone();
    let theta = frame_angle(z0, &at)?.angle;
    Ok((best.1, theta))
}

struct Solve {
    x: Vec<f64>,
    shoot: f64,
    iterations: usize,
}

fn equations(spec: &SystemSpec, cfg: &SearchConfig, x: &[f64], tol: f64) -> Result<Vec<f64>> {
    let n = spec.n();
    let z = VortexState::from_xy(&x[..2 * n])?;
    let (t_seg, theta) = (x[2 * n], x[2 * n + 1]);
    if !(t_seg > 0.0) {
        return Err(Error::InvalidConfig("segment time left (0, inf)".into()));
    }
    let mut r = shooting_residual(spec, &z, t_seg, theta, tol)?;
    r.push(moment_of_inertia(spec, &z) - cfg.i_level);
    r.push(z.points()[0].im);
    if cfg.centred && spec.family == Family::Euler {
        let c = vorticity_centroid(spec, z.points());
        r.push(c.re);
        r.push(c.im);
    }
    if let Some(h) = cfg.energy_target {
        r.push(energy(spec, &z)? - h);
    }
    Ok(r)
}

/// Damped Gauss-Newton: minimum-norm steps with backtracking, falling back
/// to Levenberg-Marquardt damping when a full step does not help.
fn newton(spec: &SystemSpec, cfg: &SearchConfig, x0: Vec<f64>) -> Result<Solve> {
    let n = spec.n();
    let tol = cfg.flow_tol();
    let mut x = x0;
    let mut f = equations(spec, cfg, &x, tol)?;
    let shoot_norm = |f: &[f64]| norm(&f[..2 * n]);
    let mut res = norm(&f);
    let mut lambda = 0.0f64;
    for it in 0..cfg.max_iter {
        if res < cfg.newton_tol {
            return Ok(Solve { shoot: shoot_norm(&f), x, iterations: it });
        }
        let mut eq = |y: &[f64]| equations(spec, cfg, y, tol);
        let jac: DMatrix<f64> = fd_jacobian(&mut eq, &x, &f, 1e-7, false)?;
        let mut improved = false;
        for attempt in 0..12 {
            let dx = damped_step(&jac, &f, lambda);
            let mut step = 1.0;
            let tries = if attempt == 0 { 6 } else { 1 };
            for _ in 0..tries {
                let trial: Vec<f64> = x.iter().zip(dx.iter()).map(|(a, d)| a + step * d).collect();
                if let Ok(ft) = equations(spec, cfg, &trial, tol) {
                    let rt = norm(&ft);
                    if rt < res {
                        x = trial;
                        f = ft;
                        res = rt;
                        improved = true;
                        break;
                    }
                }
                step *= 0.5;
            }
            if improved {
                lambda *= 0.1;
                if lambda < 1e-12 {
                    lambda = 0.0;
                }
                break;
            }
            lambda = if lambda == 0.0 { 1e-6 * jac.norm_squared().max(1e-300) } else { lambda * 10.0 };
        }
        if !improved {
            return Err(Error::NoConvergence { iterations: it + 1, residual: res });
        }
    }
    if res < cfg.newton_tol {
        Ok(Solve { shoot: shoot_norm(&f), x, iterations: cfg.max_iter })
    } else {
        Err(Error::NoConvergence { iterations: cfg.max_iter, residual: res })
    }
}

fn damped_step(jac: &DMatrix<f64>, f: &[f64], lambda: f64) -> DVector<f64> {
    let rhs = -DVector::from_column_slice(f);
    if lambda == 0.0 {
        return crate::linalg::lstsq_min_norm(jac, &rhs, 1e-12);
    }
    let (r, c) = jac.shape();
    let mut a = DMatrix::zeros(r + c, c);
    a.view_mut((0, 0), (r, c)).copy_from(jac);
    for k in 0..c {
        a[(r + k, k)] = lambda.sqrt();
    }
    let mut b = DVector::zeros(r + c);
    b.rows_mut(0, r).copy_from(&rhs);
    crate::linalg::lstsq_min_norm(&a, &b, 1e-14)
}

enum StartResult {
    Orbit(Box<OrbitResult>),
    Filtered(Box<OrbitResult>),
    Rejected(String),
}

/// Re-integrates the full loop and runs the acceptance checks.
fn certify(spec: &SystemSpec, cfg: &SearchConfig, start: usize, sol: &Solve) -> Result<StartResult> {
    let n = spec.n();
    let z0 = VortexState::from_xy(&sol.x[..2 * n])?;
    let (t_seg, theta) = (sol.x[2 * n], sol.x[2 * n + 1]);
    let tol = cfg.flow_tol();
    let m = n * cfg.samples_per_segment;
    let lp = sample_flow(spec, &z0, n as f64 * t_seg, m, tol)?;
    let red = reduce_loop(&lp, reduced_space(spec))?;
    let defect = chore_defect(&red)?;
    let h0 = energy(spec, &z0)?;
    let (mut dh, mut di) = (0.0f64, 0.0f64);
    for s in lp.samples() {
        let fi = first_integrals(spec, &VortexState::new(s.clone()))?;
        dh = dh.max((fi.h - h0).abs());
        di = di.max((fi.i - cfg.i_level).abs());
    }
    let bound = 10.0 * cfg.newton_tol;
    let mut result = OrbitResult {
        spec: spec.clone(),
        z0,
        t_seg,
        theta: theta.rem_euclid(2.0 * PI),
        residual: sol.shoot,
        chore_defect: defect,
        fs_diameter: fs_diameter(&red)?,
        energy: h0,
        i_level: cfg.i_level,
        h_deviation: dh,
        i_deviation: di,
        start,
        classification: Classification::Unclassified,
    };
    if !(sol.shoot < cfg.newton_tol && defect < bound && dh < bound && di < bound) {
        return Ok(StartResult::Rejected(format!(
            "loop check failed: defect {defect:e}, dH {dh:e}, dI {di:e}"
        )));
    }
    let opts = ClassifyOptions { triviality_eps: cfg.triviality_eps, fit_eps: cfg.fit_eps };
    result.classification = classify_orbit_with(spec, &result, &red, &opts);
    if cfg.require_nontrivial && result.classification == Classification::TrivialRelativeEquilibrium {
        return Ok(StartResult::Filtered(Box::new(result)));
    }
    Ok(StartResult::Orbit(Box::new(result)))
}

fn run_start(
    spec: &SystemSpec,
    cfg: &SearchConfig,
    window: (f64, f64),
    start: usize,
) -> (StartReport, Option<OrbitResult>) {
    let kind = if spec.n() % 2 == 0 && spec.n() >= 4 && start % 2 == 1 {
        SeedKind::DoubledPolygon
    } else {
        SeedKind::Polygon
    };
    let mut report = StartReport {
        start,
        seed_kind: kind,
        status: StartStatus::Failed,
        iterations: 0,
        residual: None,
        classification: None,
        message: None,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(start as u64);
    let mut attempt = || -> Result<(Solve, StartResult)> {
        let z0 = seed_state(spec, cfg, kind, &mut rng)?;
        let (t_seg, theta) = initial_return(spec, &z0, window, cfg.flow_tol())?;
        let mut x = z0.to_xy();
        x.push(t_seg);
        x.push(theta);
        let sol = newton(spec, cfg, x)?;
        let out = certify(spec, cfg, start, &sol)?;
        Ok((sol, out))
    };
    match attempt() {
        Ok((sol, out)) => {
            report.iterations = sol.iterations;
            report.residual = Some(sol.shoot);
            match out {
                StartResult::Orbit(r) => {
                    report.status = StartStatus::Accepted;
                    report.classification = Some(r.classification);
                    (report, Some(*r))
                }
                StartResult::Filtered(r) => {
                    report.status = StartStatus::FilteredTrivial;
                    report.classification = Some(r.classification);
                    (report, None)
                }
                StartResult::Rejected(msg) => {
                    report.status = StartStatus::Rejected;
                    report.message = Some(msg);
                    (report, None)
                }
            }
        }
        Err(e) => {
            if let Error::NoConvergence { iterations, residual } = e {
                report.status = StartStatus::NoConvergence;
                report.iterations = iterations;
                report.residual = Some(residual);
            }
            report.message = Some(e.to_string());
            (report, None)
        }
    }
}

/// Runs every start (in parallel) and collects certified orbits.
pub fn search(spec: &SystemSpec, cfg: &SearchConfig) -> Result<SearchOutcome> {
    check_spec(spec, cfg)?;
    let window = match cfg.t_seg_range {
        Some(w) => w,
        None => {
            let p = polygon_period(spec, cfg.i_level).ok_or_else(|| {
                Error::InvalidConfig(
                    "could not derive a T_seg range from the polygon; set t_seg_range".into(),
                )
            })?;
            let seg = p / spec.n() as f64;
            (0.25 * seg, 2.0 * seg)
        }
    };
    let runs = map_indexed(cfg.n_starts, |k| run_start(spec, cfg, window, k));
    let mut results = vec![];
    let mut reports = vec![];
    for (rep, res) in runs {
        reports.push(rep);
        results.extend(res);
    }
    results.sort_by(|a, b| a.energy.total_cmp(&b.energy).then(a.start.cmp(&b.start)));
    Ok(SearchOutcome { results, reports })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelReport {
    pub level: f64,
    pub found: bool,
    pub n_results: usize,
    pub best_residual: Option<f64>,
    pub histogram: BTreeMap<String, usize>,
    pub outcome: SearchOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub levels: Vec<LevelReport>,
}

/// [`search`] with the energy pinned at each level in turn.
pub fn energy_sweep(spec: &SystemSpec, levels: &[f64], cfg: &SearchConfig) -> Result<SweepReport> {
    check_spec(spec, cfg)?;
    let mut out = vec![];
    for &level in levels {
        let c = SearchConfig { energy_target: Some(level), ..cfg.clone() };
        let outcome = search(spec, &c)?;
        let mut histogram = BTreeMap::new();
        for r in &outcome.results {
            *histogram.entry(format!("{:?}", r.classification)).or_insert(0) += 1;
        }
        out.push(LevelReport {
            level,
            found: !outcome.results.is_empty(),
            n_results: outcome.results.len(),
            best_residual: outcome.results.iter().map(|r| r.residual).reduce(f64::min),
            histogram,
            outcome,
        });
    }
    Ok(SweepReport { levels: out })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn refuses_distinct_vorticities() {
        let spec = SystemSpec::euler(vec![1.0, 2.0, 1.0]).unwrap();
        assert!(matches!(search(&spec, &SearchConfig::default()), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn invalid_configs() {
        let spec = SystemSpec::euler(vec![1.0; 3]).unwrap();
        for cfg in [
            SearchConfig { newton_tol: 0.0, ..Default::default() },
            SearchConfig { i_level: -1.0, ..Default::default() },
            SearchConfig { t_seg_range: Some((2.0, 1.0)), ..Default::default() },
        ] {
            assert!(matches!(search(&spec, &cfg), Err(Error::InvalidConfig(_))));
        }
    }

    #[test]
    fn unperturbed_triangle_is_recovered() {
        let spec = SystemSpec::euler(vec![1.0; 3]).unwrap();
        let cfg = SearchConfig { i_level: 3.0, n_starts: 2, perturbation_scale: 0.0, ..Default::default() };
        let out = search(&spec, &cfg).unwrap();
        assert_eq!(out.results.len(), 2, "{:?}", out.reports);
        let r = &out.results[0];
        assert!(r.residual < 1e-9);
        assert_eq!(r.classification, Classification::TrivialRelativeEquilibrium);
        let want = VortexState::polygon(3, 1.0);
        for (a, b) in r.z0.points().iter().zip(want.points()) {
            assert!((a - b).norm() < 1e-8);
        }
        let filtered = search(&spec, &SearchConfig { require_nontrivial: true, ..cfg }).unwrap();
        assert!(filtered.results.is_empty());
        assert!(filtered.reports.iter().all(|r| r.status == StartStatus::FilteredTrivial));
    }

    #[test]
    fn empty_sweep() {
        let spec = SystemSpec::euler(vec![1.0; 3]).unwrap();
        assert!(energy_sweep(&spec, &[], &SearchConfig::default()).unwrap().levels.is_empty());
    }
}
