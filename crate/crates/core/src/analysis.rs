//! Geometry of relative equilibria: chord-log maximality of the regular
//! polygon, separation of BEC relative equilibria from collisions, the
//! polygon trap coefficient and cyclically symmetric level-set components.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonians::{energy_unchecked, grad_complex, Family, SystemSpec, VortexState};
use crate::integrate::{find_relative_equilibrium, DEFAULT_RE_TOL};
use crate::parallel::map_indexed;

/// `n` points on a circle of radius `rho`, given by the gaps `theta_j`
/// between consecutive points (`sum theta_j = 2 pi`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircleConfig {
    theta: Vec<f64>,
    rho: f64,
}

impl CircleConfig {
    pub fn new(theta: Vec<f64>, rho: f64) -> Result<Self> {
        if theta.len() < 2 {
            return Err(Error::InvalidConfig("need at least two points on the circle".into()));
        }
        if !(rho > 0.0) {
            return Err(Error::InvalidConfig(format!("radius must be positive, got {rho}")));
        }
        if theta.iter().any(|t| !(*t > 0.0)) {
            return Err(Error::InvalidConfig("gap angles must be positive".into()));
        }
        let s: f64 = theta.iter().sum();
        if (s - 2.0 * PI).abs() > 1e-12 {
            return Err(Error::InvalidConfig(format!("gap angles sum to {s}, not 2 pi")));
        }
        Ok(CircleConfig { theta, rho })
    }

    /// Equal gaps.
    pub fn regular(n: usize, rho: f64) -> Result<Self> {
        Self::new(vec![2.0 * PI / n as f64; n], rho)
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }
}

/// `sum_(i<j) log l_ij`, chord `l_ij = 2 rho sin(1/2 sum_(k=i)^(j-1) theta_k)`.
pub fn chord_log_sum(c: &CircleConfig) -> Result<f64> {
    let n = c.theta.len();
    let mut s = 0.0;
    for i in 0..n {
        let mut acc = 0.0;
        for j in i + 1..n {
            acc += c.theta[j - 1];
            let h = (0.5 * acc).sin();
            if !(h > 1e-300) {
                return Err(Error::DegenerateGap(acc));
            }
            s += (2.0 * c.rho * h).ln();
        }
    }
    Ok(s)
}

/// Gradient of [`chord_log_sum`] in the gap angles, projected onto the
/// constraint surface `sum theta = 2 pi`.
pub fn chord_log_gradient(c: &CircleConfig) -> Result<Vec<f64>> {
    let n = c.theta.len();
    let mut g = vec![0.0; n];
    for i in 0..n {
        let mut acc = 0.0;
        for j in i + 1..n {
            acc += c.theta[j - 1];
            let h = (0.5 * acc).sin();
            if !(h > 1e-300) {
                return Err(Error::DegenerateGap(acc));
            }
            let d = 0.5 * (0.5 * acc).cos() / h;
            for gk in &mut g[i..j] {
                *gk += d;
            }
        }
    }
    let mean = g.iter().sum::<f64>() / n as f64;
    g.iter_mut().for_each(|x| *x -= mean);
    Ok(g)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaximalityReport {
    pub n: usize,
    pub rho: f64,
    pub trials: usize,
    /// `-inf` when there are no trials.
    pub max_sampled: f64,
    pub ngon_value: f64,
    /// `ngon_value - max_sampled`.
    pub margin: f64,
    /// Projected gradient norm at the regular polygon.
    pub gradient_norm: f64,
    /// No sample exceeded the regular polygon.
    pub pass: bool,
}

/// Compares the regular polygon against the given configurations.
pub fn maximality_against(n: usize, rho: f64, configs: &[CircleConfig]) -> Result<MaximalityReport> {
    let reg = CircleConfig::regular(n, rho)?;
    let ngon_value = chord_log_sum(&reg)?;
    let gradient_norm = chord_log_gradient(&reg)?.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut max_sampled = f64::NEG_INFINITY;
    for c in configs {
        if c.theta.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: c.theta.len() });
        }
        match chord_log_sum(c) {
            Ok(v) => max_sampled = max_sampled.max(v),
            Err(Error::DegenerateGap(_)) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(MaximalityReport {
        n,
        rho,
        trials: configs.len(),
        max_sampled,
        ngon_value,
        margin: ngon_value - max_sampled,
        gradient_norm,
        pass: max_sampled <= ngon_value,
    })
}

/// Uniformly random gap vector on the simplex `sum theta = 2 pi`.
fn random_gaps(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let e: Vec<f64> = (0..n).map(|_| -(1.0 - rng.gen::<f64>()).ln() + 1e-300).collect();
    let s: f64 = e.iter().sum();
    let mut t: Vec<f64> = e.iter().map(|x| 2.0 * PI * x / s).collect();
    // land the sum on 2 pi to the last bit
    let drift: f64 = t.iter().sum::<f64>() - 2.0 * PI;
    let k = (0..n).max_by(|a, b| t[*a].total_cmp(&t[*b])).unwrap();
    t[k] -= drift;
    t
}

pub fn ngon_maximality_test(n: usize, rho: f64, trials: usize, seed: u64) -> Result<MaximalityReport> {
    if n < 2 {
        return Err(Error::InvalidConfig(format!("need n >= 2, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let configs: Vec<CircleConfig> =
        (0..trials).map(|_| CircleConfig::new(random_gaps(&mut rng, n), rho)).collect::<Result<_>>()?;
    maximality_against(n, rho, &configs)
}

fn trap_samples(alpha: f64, beta: f64, n: usize, m: usize) -> Vec<f64> {
    (0..m)
        .map(|j| {
            let th = 2.0 * PI * j as f64 / m as f64;
            (0..n).map(|k| alpha + beta * (th + 2.0 * PI * k as f64 / n as f64).cos()).product()
        })
        .collect()
}

/// Order-`n` Fourier magnitude `sqrt(a_n^2 + b_n^2)` of
/// `prod_k (alpha + beta cos(theta + 2 pi k/n))` from an FFT over `4n`
/// samples. Absolute accuracy is limited to round-off relative to the size
/// of the product; see [`polygon_trap_coefficient`].
pub fn polygon_trap_coefficient_fft(alpha: f64, beta: f64, n: usize) -> f64 {
    let m = 4 * n.max(1);
    let mut buf: Vec<Complex64> =
        trap_samples(alpha, beta, n, m).into_iter().map(|x| Complex64::new(x, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(m).process(&mut buf);
    2.0 * buf[n % m].norm() / m as f64
}

/// The same coefficient from the Fourier series of each factor,
/// `alpha + (beta/2)(e^(i phi_k) e^(i theta) + c.c.)`, multiplied out.
/// The top coefficient only ever gets multiplied, so it keeps full relative
/// precision however small it is.
pub fn polygon_trap_coefficient_series(alpha: f64, beta: f64, n: usize) -> f64 {
    // coefficients of e^(i p theta), p = -n..=n, stored at p + n
    let mut c = vec![Complex64::new(0.0, 0.0); 2 * n + 1];
    c[n] = Complex64::new(1.0, 0.0);
    for k in 0..n {
        let e = Complex64::from_polar(0.5 * beta, 2.0 * PI * k as f64 / n as f64);
        let mut next = vec![Complex64::new(0.0, 0.0); 2 * n + 1];
        for p in 0..=2 * n {
            if c[p] == Complex64::new(0.0, 0.0) {
                continue;
            }
            next[p] += c[p] * alpha;
            if p + 1 <= 2 * n {
                next[p + 1] += c[p] * e;
            }
            if p >= 1 {
                next[p - 1] += c[p] * e.conj();
            }
        }
        c = next;
    }
    2.0 * c[2 * n].norm()
}

/// Order-`n` Fourier magnitude of `prod_(k<n) (alpha + beta cos(theta + 2 pi k/n))`.
///
/// Computed by FFT over `4n` samples; when the FFT value sits below its
/// round-off floor (tiny `beta` against `alpha^n`), the exact series product
/// is returned instead.
pub fn polygon_trap_coefficient(alpha: f64, beta: f64, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let fft = polygon_trap_coefficient_fft(alpha, beta, n);
    let floor = 64.0 * f64::EPSILON * (alpha.abs() + beta.abs()).powi(n as i32) * (n as f64);
    if fft > floor {
        fft
    } else {
        polygon_trap_coefficient_series(alpha, beta, n)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShubStart {
    pub start: usize,
    pub converged: bool,
    pub residual: Option<f64>,
    /// `m(Z)`: smallest pairwise squared distance of the equilibrium.
    pub min_pair_sqr: Option<f64>,
    pub omega: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShubReport {
    pub i_level: f64,
    pub n_starts: usize,
    pub converged: usize,
    /// Empirical bound: smallest `m(Z)` over converged equilibria.
    pub epsilon_hat: Option<f64>,
    /// Converged equilibria with some pair closer than `1e-3`.
    pub near_collision: usize,
    pub max_residual: Option<f64>,
    pub warning: Option<String>,
    pub pass: bool,
    pub starts: Vec<ShubStart>,
}

/// Random admissible BEC state with `I = i_level`.
fn random_disc_state(spec: &SystemSpec, i_level: f64, rng: &mut ChaCha8Rng) -> Option<VortexState> {
    for _ in 0..1000 {
        let z: Vec<Complex64> = (0..spec.n())
            .map(|_| Complex64::from_polar(rng.gen::<f64>().sqrt(), rng.gen_range(0.0..2.0 * PI)))
            .collect();
        let st = VortexState::new(z);
        let i = crate::hamiltonians::moment_of_inertia(spec, &st);
        if !(i > 0.0) {
            continue;
        }
        let st = st.scaled((i_level / i).sqrt());
        if spec.check(&st).is_ok() && st.min_pair_distance_sqr() > 1e-6 {
            return Some(st);
        }
    }
    None
}

/// Relative equilibria from random starts at `I = i_level`, with their
/// distance to the collision set.
pub fn shub_separation_scan(
    spec: &SystemSpec,
    i_level: f64,
    n_starts: usize,
    seed: u64,
) -> Result<ShubReport> {
    if spec.family != Family::Bec {
        return Err(Error::InvalidConfig("the separation scan is for the BEC family".into()));
    }
    if !(i_level > 0.0) {
        return Err(Error::InvalidConfig(format!("I level must be positive, got {i_level}")));
    }
    let gmin = spec.gamma.iter().cloned().fold(f64::INFINITY, f64::min);
    let warning = (i_level >= gmin)
        .then(|| format!("I = {i_level} is not below min Gamma = {gmin}; separation is not guaranteed"));
    let starts: Vec<ShubStart> = map_indexed(n_starts, |k| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(k as u64);
        let fail = |e: String| ShubStart {
            start: k,
            converged: false,
            residual: None,
            min_pair_sqr: None,
            omega: None,
            error: Some(e),
        };
        let Some(z0) = random_disc_state(spec, i_level, &mut rng) else {
            return fail("no admissible start at this I level".into());
        };
        match find_relative_equilibrium(spec, &z0, i_level) {
            Ok(re) => ShubStart {
                start: k,
                converged: true,
                residual: Some(re.residual),
                min_pair_sqr: Some(re.z.min_pair_distance_sqr()),
                omega: Some(re.omega),
                error: None,
            },
            Err(e) => fail(e.to_string()),
        }
    });
    let ok: Vec<&ShubStart> = starts.iter().filter(|s| s.converged).collect();
    let epsilon_hat = ok.iter().filter_map(|s| s.min_pair_sqr).reduce(f64::min);
    let max_residual = ok.iter().filter_map(|s| s.residual).reduce(f64::max);
    let near_collision = ok.iter().filter(|s| s.min_pair_sqr.unwrap_or(0.0) < 1e-6).count();
    let pass = epsilon_hat.is_some_and(|e| e > 0.0) && max_residual.is_some_and(|r| r < DEFAULT_RE_TOL);
    Ok(ShubReport {
        i_level,
        n_starts,
        converged: ok.len(),
        epsilon_hat,
        near_collision,
        max_residual,
        warning,
        pass,
        starts,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeSample {
    pub sample: usize,
    /// Deviation angles from the polygon (mean removed) of the level point.
    pub deviation: Vec<f64>,
    pub level_error: f64,
    /// `|H(sigma Z) - H(Z)|`.
    pub image_energy_error: f64,
    pub connected: bool,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub n: usize,
    pub level: f64,
    pub i_level: f64,
    pub rho: f64,
    /// Energy of the regular polygon on the torus `|z_i|^2 = rho`, the
    /// restricted extremum.
    pub ngon_energy: f64,
    pub samples: usize,
    pub connected: usize,
    pub success_rate: f64,
    pub max_image_energy_error: f64,
    pub results: Vec<ProbeSample>,
}

pub const PROBE_STEP: f64 = 1e-3;
pub const PROBE_MAX_STEPS: usize = 100_000;

struct Torus<'a> {
    spec: &'a SystemSpec,
    base: Vec<f64>,
    r: f64,
}

impl Torus<'_> {
    fn points(&self, d: &[f64]) -> Vec<Complex64> {
        self.base.iter().zip(d).map(|(b, x)| Complex64::from_polar(self.r, b + x)).collect()
    }

    fn energy(&self, d: &[f64]) -> f64 {
        let p = self.points(d);
        let n = p.len();
        for i in 0..n {
            for j in i + 1..n {
                if (p[i] - p[j]).norm() <= self.spec.collision_eps {
                    return f64::INFINITY;
                }
            }
        }
        energy_unchecked(self.spec, &p)
    }

    /// Gradient in the angles with the common rotation removed.
    fn gradient(&self, d: &[f64]) -> Vec<f64> {
        let p = self.points(d);
        let mut g = vec![Complex64::new(0.0, 0.0); p.len()];
        grad_complex(self.spec, &p, &mut g);
        let mut out: Vec<f64> = g
            .iter()
            .zip(&p)
            .map(|(gj, zj)| {
                let t = Complex64::new(0.0, 1.0) * zj;
                gj.re * t.re + gj.im * t.im
            })
            .collect();
        center(&mut out);
        out
    }
}

fn center(v: &mut [f64]) {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|x| *x -= m);
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn vnorm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Newton steps along the gradient back onto `H = level`.
fn correct(t: &Torus, d: &mut Vec<f64>, level: f64) -> bool {
    for _ in 0..50 {
        let e = t.energy(d) - level;
        if !e.is_finite() {
            return false;
        }
        if e.abs() < 1e-13 * level.abs().max(1.0) {
            return true;
        }
        let g = t.gradient(d);
        let gg = dot(&g, &g);
        if !(gg > 0.0) {
            return false;
        }
        for (x, gi) in d.iter_mut().zip(&g) {
            *x -= e * gi / gg;
        }
    }
    (t.energy(d) - level).abs() < 1e-10 * level.abs().max(1.0)
}

/// Walks on the level set from `from` toward `to` with fixed steps.
fn trace(t: &Torus, from: &[f64], to: &[f64], level: f64, rng: &mut ChaCha8Rng) -> (bool, usize) {
    let mut d = from.to_vec();
    for step in 0..PROBE_MAX_STEPS {
        let mut dir: Vec<f64> = to.iter().zip(&d).map(|(a, b)| a - b).collect();
        if vnorm(&dir) <= PROBE_STEP {
            return (true, step);
        }
        let g = t.gradient(&d);
        let gg = dot(&g, &g);
        if gg > 0.0 {
            let k = dot(&dir, &g) / gg;
            dir.iter_mut().zip(&g).for_each(|(x, gi)| *x -= k * gi);
        }
        let mut len = vnorm(&dir);
        if len < 1e-9 {
            // target straight across: leave along a random tangent direction
            dir = (0..d.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            center(&mut dir);
            if gg > 0.0 {
                let k = dot(&dir, &g) / gg;
                dir.iter_mut().zip(&g).for_each(|(x, gi)| *x -= k * gi);
            }
            len = vnorm(&dir);
            if !(len > 0.0) {
                return (false, step);
            }
        }
        for (x, v) in d.iter_mut().zip(&dir) {
            *x += PROBE_STEP * v / len;
        }
        if !correct(t, &mut d, level) {
            return (false, step);
        }
    }
    (false, PROBE_MAX_STEPS)
}

/// Samples the level `H = level` on the torus `|z_i|^2 = rho` near the
/// regular polygon, maps each point by the cyclic relabeling and tries to
/// walk from the point to its image within the level set.
///
/// On this torus the polygon is the minimum of `H` (the chord-log sum is
/// maximal there and enters with a negative sign), so levels below it are
/// empty.
pub fn invariant_component_probe(
    spec: &SystemSpec,
    level: f64,
    i_level: f64,
    samples: usize,
    seed: u64,
) -> Result<ProbeReport> {
    if spec.family == Family::Nls {
        return Err(Error::InvalidConfig("the component probe covers Euler and BEC".into()));
    }
    if !spec.identical_vorticities() {
        return Err(Error::InvalidConfig("the component probe needs identical vorticities".into()));
    }
    if samples == 0 {
        return Err(Error::InvalidConfig("samples must be >= 1".into()));
    }
    let n = spec.n();
    let total: f64 = spec.gamma.iter().sum();
    let rho = i_level / total;
    if !(rho > 0.0) || (spec.family == Family::Bec && rho >= 1.0) {
        return Err(Error::InvalidConfig(format!("no admissible torus at I = {i_level}")));
    }
    let torus = Torus { spec, base: (0..n).map(|j| 2.0 * PI * j as f64 / n as f64).collect(), r: rho.sqrt() };
    let zero = vec![0.0; n];
    let ngon_energy = torus.energy(&zero);
    if level < ngon_energy {
        return Err(Error::LevelEmpty { level, extremum: ngon_energy });
    }
    let results: Vec<ProbeSample> = map_indexed(samples, |k| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(k as u64);
        let mut dir: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        center(&mut dir);
        let len = vnorm(&dir).max(1e-300);
        dir.iter_mut().for_each(|x| *x /= len);
        let at = |s: f64| -> Vec<f64> { dir.iter().map(|x| s * x).collect() };
        // bracket the level along the ray, then bisect
        let (mut lo, mut hi) = (0.0, 1e-3);
        while torus.energy(&at(hi)) < level && hi < 2.0 * PI {
            lo = hi;
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if torus.energy(&at(mid)) < level {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-16 * hi {
                break;
            }
        }
        let mut d = at(0.5 * (lo + hi));
        correct(&torus, &mut d, level);
        let mut img = d.clone();
        img.rotate_right(1);
        let e0 = torus.energy(&d);
        let e1 = torus.energy(&img);
        let (connected, steps) = trace(&torus, &d, &img, level, &mut rng);
        ProbeSample {
            sample: k,
            level_error: (e0 - level).abs(),
            image_energy_error: (e1 - e0).abs(),
            deviation: d,
            connected,
            steps,
        }
    });
    let connected = results.iter().filter(|r| r.connected).count();
    let max_image_energy_error = results.iter().map(|r| r.image_energy_error).fold(0.0, f64::max);
    Ok(ProbeReport {
        n,
        level,
        i_level,
        rho,
        ngon_energy,
        samples,
        connected,
        success_rate: connected as f64 / samples as f64,
        max_image_energy_error,
        results,
    })
}
