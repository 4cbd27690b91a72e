//! Command-line driver and data export.
//!
//! Every subcommand is a thin wrapper over library calls. Parameters come
//! from flags, optionally layered over a JSON config file whose keys are the
//! snake_case flag names (`{"family": "bec", "n": 3, "i_level": 0.3}`).
//! Flags given on the command line win.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::analysis::{
    invariant_component_probe, ngon_maximality_test, polygon_trap_coefficient, shub_separation_scan,
};
use crate::choreography::{chore_defect, fs_diameter, reduce_loop, reduced_space, sample_flow, Space};
use crate::error::{Error, Result};
use crate::hamiltonians::{Family, SystemSpec, VortexState, DEFAULT_COLLISION_EPS};
use crate::integrate::{find_relative_equilibrium, flow, Trajectory};
use crate::search::{energy_sweep, search, SearchConfig};
use crate::spheres::{
    equivariance_defect, fs_area, loop_at_radius, normalize_scale, ExtendedComplex, Region, SphereMap,
    Target, DEFAULT_QUAD_TOL,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DOMAIN: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    /// Explicit choice, else the file extension, else `default`.
    fn resolve(explicit: Option<Format>, path: Option<&Path>, default: Format) -> Format {
        explicit
            .or_else(|| match path?.extension()?.to_str()? {
                "csv" => Some(Format::Csv),
                "json" => Some(Format::Json),
                _ => None,
            })
            .unwrap_or(default)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum InitKind {
    /// Regular polygon (the Thomson configuration).
    Thomson,
    /// Seeded random admissible configuration.
    Random,
}

#[derive(Debug, Parser)]
#[command(name = "vortex-chorus", version, about = "Relative choreographies of vortex-type systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate the flow and export the trajectory.
    Simulate(SimulateArgs),
    /// Sample a loop and reduce it to projective space.
    Reduce(ReduceArgs),
    /// Multi-start shooting search for relative choreographies.
    Search(SearchArgs),
    /// Search at a list of energy levels.
    Sweep(SweepArgs),
    /// Explicit choreographic spheres.
    Sphere(SphereArgs),
    /// Diagnostics from the existence theory.
    Analyze(AnalyzeArgs),
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct SystemArgs {
    /// JSON config file; flags override its entries.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// euler, bec or nls.
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Comma separated vorticities (default: all ones).
    #[arg(long, value_delimiter = ',')]
    pub gamma: Option<Vec<f64>>,
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub collision_eps: Option<f64>,
}

impl SystemArgs {
    pub fn to_spec(&self) -> Result<SystemSpec> {
        let family: Family = self.family.as_deref().unwrap_or("euler").parse()?;
        let gamma = match (&self.gamma, self.n) {
            (Some(g), Some(n)) if g.len() != n => {
                return Err(Error::DimensionMismatch { expected: n, found: g.len() })
            }
            (Some(g), _) => g.clone(),
            (None, Some(n)) => vec![1.0; n],
            (None, None) => return Err(Error::InvalidConfig("give --n or --gamma".into())),
        };
        let (mu, lambda) = (self.mu.unwrap_or(1.0), self.lambda.unwrap_or(1.0));
        let spec = match family {
            Family::Euler => SystemSpec::euler(gamma),
            Family::Bec => SystemSpec::bec(gamma, mu, lambda),
            Family::Nls => SystemSpec::nls(gamma),
        }?;
        Ok(spec.with_collision_eps(self.collision_eps.unwrap_or(DEFAULT_COLLISION_EPS)))
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct InitArgs {
    #[arg(long, value_enum)]
    pub init: Option<InitKind>,
    /// Polygon radius (Thomson) or disc radius (random).
    #[arg(long)]
    pub radius: Option<f64>,
    /// Rescale the initial state to this moment of inertia.
    #[arg(long = "I", alias = "i-level")]
    pub i_level: Option<f64>,
    /// Explicit initial state `x1,y1,...,xn,yn`; overrides --init.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub state: Option<Vec<f64>>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub system: SystemArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub init: InitArgs,
    /// Final time.
    #[arg(long = "T")]
    #[serde(rename = "t_end")]
    pub t_end: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct ReduceArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub system: SystemArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub init: InitArgs,
    /// Loop period; defaults to the rotation period of the relative
    /// equilibrium found from the initial state.
    #[arg(long = "T")]
    #[serde(rename = "t_end")]
    pub t_end: Option<f64>,
    /// Samples along the loop (multiple of n).
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long, value_enum)]
    pub target: Option<SpaceArg>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SpaceArg {
    Ambient,
    Cpn1,
    Cpn2,
}

impl From<SpaceArg> for Space {
    fn from(s: SpaceArg) -> Space {
        match s {
            SpaceArg::Ambient => Space::Ambient,
            SpaceArg::Cpn1 => Space::CPn1,
            SpaceArg::Cpn2 => Space::CPn2,
        }
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchFlags {
    #[arg(long = "I", alias = "i-level")]
    pub i_level: Option<f64>,
    #[arg(long)]
    pub energy: Option<f64>,
    #[arg(long)]
    pub starts: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub newton_tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub t_min: Option<f64>,
    #[arg(long)]
    pub t_max: Option<f64>,
    #[arg(long)]
    pub perturbation: Option<f64>,
    #[arg(long)]
    pub require_nontrivial: bool,
    /// Do not pin the Euler centroid at the origin.
    #[arg(long)]
    pub uncentred: bool,
    #[arg(long)]
    pub flow_tol: Option<f64>,
    #[arg(long)]
    pub samples_per_segment: Option<usize>,
    #[arg(long)]
    pub triviality_eps: Option<f64>,
    #[arg(long)]
    pub fit_eps: Option<f64>,
}

impl SearchFlags {
    pub fn to_config(&self) -> Result<SearchConfig> {
        let d = SearchConfig::default();
        let t_seg_range = match (self.t_min, self.t_max) {
            (Some(a), Some(b)) => Some((a, b)),
            (None, None) => None,
            _ => return Err(Error::InvalidConfig("give both --t-min and --t-max".into())),
        };
        let cfg = SearchConfig {
            i_level: self.i_level.unwrap_or(d.i_level),
            energy_target: self.energy,
            n_starts: self.starts.unwrap_or(d.n_starts),
            seed: self.seed.unwrap_or(d.seed),
            newton_tol: self.newton_tol.unwrap_or(d.newton_tol),
            max_iter: self.max_iter.unwrap_or(d.max_iter),
            t_seg_range,
            perturbation_scale: self.perturbation.unwrap_or(d.perturbation_scale),
            require_nontrivial: self.require_nontrivial,
            centred: !self.uncentred,
            flow_tol: self.flow_tol,
            samples_per_segment: self.samples_per_segment.unwrap_or(d.samples_per_segment),
            triviality_eps: self.triviality_eps.unwrap_or(d.triviality_eps),
            fit_eps: self.fit_eps.unwrap_or(d.fit_eps),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub system: SystemArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub search: SearchFlags,
    /// Also print per-start reports to stderr.
    #[arg(long)]
    pub verbose: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub system: SystemArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub search: SearchFlags,
    /// Comma separated energy levels.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub levels: Option<Vec<f64>>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct SphereArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// cpn1 or cpn2.
    #[arg(long)]
    pub target: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub check_equivariance: bool,
    /// Random test points for the equivariance check.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Report the pulled-back area of the disc and of the whole sphere.
    #[arg(long)]
    pub area: bool,
    /// Rescale so the unit disc has this area before anything else.
    #[arg(long)]
    pub disc_area: Option<f64>,
    #[arg(long)]
    pub quad_tol: Option<f64>,
    /// Write the loop at this radius (JSON).
    #[arg(long)]
    pub loop_radius: Option<f64>,
    #[arg(long)]
    pub loop_samples: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct AnalyzeArgs {
    #[command(subcommand)]
    kind: AnalyzeKind,
}

#[derive(Debug, Clone, Subcommand)]
enum AnalyzeKind {
    /// Chord-log maximality of the regular polygon on a circle.
    Maximality(MaximalityArgs),
    /// Trap coefficient of the polygon family.
    Trap(TrapArgs),
    /// Separation of BEC relative equilibria from collisions.
    Shub(ShubArgs),
    /// Connectivity probe of an energy level on the torus.
    Probe(ProbeArgs),
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct MaximalityArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct TrapArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub n: Option<usize>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct ShubArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub system: SystemArgs,
    #[arg(long = "I", alias = "i-level")]
    pub i_level: Option<f64>,
    #[arg(long)]
    pub starts: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct ProbeArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub system: SystemArgs,
    #[arg(long, allow_hyphen_values = true)]
    pub level: Option<f64>,
    #[arg(long = "I", alias = "i-level")]
    pub i_level: Option<f64>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Overlays the flags that were given onto the config file entries.
fn merge<T: Serialize + DeserializeOwned>(flags: &T, config: Option<&Path>) -> Result<T> {
    let Some(path) = config else {
        return Ok(serde_json::from_value(serde_json::to_value(flags)?)?);
    };
    let text = std::fs::read_to_string(path)?;
    let mut base: Map<String, Value> = match serde_json::from_str(&text)? {
        Value::Object(m) => m,
        _ => return Err(Error::InvalidConfig("config file must hold a JSON object".into())),
    };
    if let Value::Object(given) = serde_json::to_value(flags)? {
        for (k, v) in given {
            if !(v.is_null() || v == Value::Bool(false)) {
                base.insert(k, v);
            }
        }
    }
    serde_json::from_value(Value::Object(base))
        .map_err(|e| Error::InvalidConfig(format!("config file {}: {e}", path.display())))
}

/// Initial state from `--state`, or a polygon / random configuration.
pub fn initial_state(spec: &SystemSpec, init: &InitArgs) -> Result<VortexState> {
    let n = spec.n();
    let z = if let Some(xy) = &init.state {
        let z = VortexState::from_xy(xy)?;
        if z.n() != n {
            return Err(Error::DimensionMismatch { expected: n, found: z.n() });
        }
        z
    } else {
        match init.init.unwrap_or(InitKind::Thomson) {
            InitKind::Thomson => VortexState::polygon(n, init.radius.unwrap_or(0.5)),
            InitKind::Random => random_state(spec, init.radius.unwrap_or(0.8), init.seed.unwrap_or(0))?,
        }
    };
    let z = match init.i_level {
        Some(level) => {
            let i = crate::hamiltonians::moment_of_inertia(spec, &z);
            if !(level > 0.0 && i > 0.0) {
                return Err(Error::InvalidConfig(format!("cannot rescale to I = {level}")));
            }
            z.scaled((level / i).sqrt())
        }
        None => z,
    };
    spec.check(&z)?;
    Ok(z)
}

/// Seeded uniform points in the disc of the given radius, pairwise at
/// least `radius / (4 n)` apart.
pub fn random_state(spec: &SystemSpec, radius: f64, seed: u64) -> Result<VortexState> {
    if !(radius > 0.0) {
        return Err(Error::InvalidConfig(format!("radius must be positive, got {radius}")));
    }
    let n = spec.n();
    let sep = radius / (4.0 * n as f64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..10_000 {
        let z = VortexState::new(
            (0..n)
                .map(|_| {
                    Complex64::from_polar(
                        radius * rng.gen::<f64>().sqrt(),
                        rng.gen_range(0.0..std::f64::consts::TAU),
                    )
                })
                .collect(),
        );
        if z.min_pair_distance_sqr() > sep * sep && spec.check(&z).is_ok() {
            return Ok(z);
        }
    }
    Err(Error::InvalidConfig("no admissible random configuration found".into()))
}

fn column_names(n: usize) -> Vec<String> {
    let mut cols = vec!["t".to_string()];
    for k in 1..=n {
        cols.push(format!("x{k}"));
        cols.push(format!("y{k}"));
    }
    cols.extend(["H", "I", "P", "Q"].map(String::from));
    cols
}

fn rows(t: &Trajectory) -> impl Iterator<Item = Vec<f64>> + '_ {
    t.times.iter().zip(&t.states).zip(&t.integrals).map(|((time, z), f)| {
        let mut row = vec![*time];
        row.extend(z.to_xy());
        row.extend([f.h, f.i, f.p, f.q]);
        row
    })
}

/// CSV with header `t,x1,y1,...,xn,yn,H,I,P,Q`, values in `%.16e`.
pub fn write_trajectory_csv<W: Write>(t: &Trajectory, mut w: W) -> Result<()> {
    writeln!(w, "{}", column_names(t.spec.n()).join(","))?;
    for row in rows(t) {
        let line: Vec<String> = row.iter().map(|x| format!("{x:.16e}")).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// JSON array of records keyed by the CSV column names.
pub fn write_trajectory_json<W: Write>(t: &Trajectory, mut w: W) -> Result<()> {
    let cols = column_names(t.spec.n());
    let records: Vec<Value> = rows(t)
        .map(|row| Value::Object(cols.iter().cloned().zip(row.into_iter().map(Value::from)).collect()))
        .collect();
    serde_json::to_writer(&mut w, &records)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

pub fn export_trajectory(t: &Trajectory, path: &Path, format: Format) -> Result<()> {
    let w = BufWriter::new(File::create(path)?);
    match format {
        Format::Csv => write_trajectory_csv(t, w),
        Format::Json => write_trajectory_json(t, w),
    }
}

/// Reads back a CSV written by [`write_trajectory_csv`] as rows of numbers.
pub fn read_trajectory_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut lines = text.lines();
    let header: Vec<String> =
        lines.next().ok_or_else(|| Error::Io("empty file".into()))?.split(',').map(String::from).collect();
    let mut out = vec![];
    for (k, line) in lines.enumerate() {
        let row = line
            .split(',')
            .map(|s| s.parse::<f64>().map_err(|e| Error::Io(format!("row {}: {e}", k + 1))))
            .collect::<Result<Vec<f64>>>()?;
        if row.len() != header.len() {
            return Err(Error::Io(format!("row {} has {} fields", k + 1, row.len())));
        }
        out.push(row);
    }
    Ok((header, out))
}

fn emit_json<T: Serialize>(value: &T, out: Option<&Path>, stdout: &mut dyn Write) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match out {
        Some(p) => std::fs::write(p, text + "\n")?,
        None => writeln!(stdout, "{text}")?,
    }
    Ok(())
}

/// Maps an error to the process exit code.
pub fn exit_code(e: &Error) -> i32 {
    if e.is_numerical() {
        EXIT_NUMERICAL
    } else {
        EXIT_DOMAIN
    }
}

/// Parses `argv` (program name first), runs the command and returns the
/// exit code. Reports go to `stdout`, diagnostics to `stderr`.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{text}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(stderr, "{text}");
                    EXIT_USAGE
                }
            };
        }
    };
    match dispatch(cli.command, stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(cmd: Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    match cmd {
        Command::Simulate(a) => {
            let a = merge(&a, a.system.config.as_deref())?;
            let spec = a.system.to_spec()?;
            let z0 = initial_state(&spec, &a.init)?;
            let t_end = a.t_end.ok_or_else(|| Error::InvalidConfig("--T is required".into()))?;
            let traj = flow(&spec, &z0, t_end, a.tol.unwrap_or(1e-10))?;
            let format = Format::resolve(a.format, a.out.as_deref(), Format::Csv);
            match &a.out {
                Some(p) => export_trajectory(&traj, p, format)?,
                None => match format {
                    Format::Csv => write_trajectory_csv(&traj, &mut *stdout)?,
                    Format::Json => write_trajectory_json(&traj, &mut *stdout)?,
                },
            }
            let d = traj.drift();
            writeln!(
                stderr,
                "steps={} drift_H={:e} drift_I={:e} drift_P={:e} drift_Q={:e}",
                traj.len(),
                d.h,
                d.i,
                d.p,
                d.q
            )?;
        }
        Command::Reduce(a) => {
            let a = merge(&a, a.system.config.as_deref())?;
            let spec = a.system.to_spec()?;
            let z0 = initial_state(&spec, &a.init)?;
            let tol = a.tol.unwrap_or(1e-10);
            let (z0, period) = match a.t_end {
                Some(t) => (z0, t),
                None => {
                    let i = crate::hamiltonians::moment_of_inertia(&spec, &z0);
                    let re = find_relative_equilibrium(&spec, &z0, i)?;
                    let p = re.period();
                    (re.z, p)
                }
            };
            let m = a.samples.unwrap_or(16 * spec.n());
            let ambient = sample_flow(&spec, &z0, period, m, tol)?;
            let target = a.target.map(Space::from).unwrap_or_else(|| reduced_space(&spec));
            let lp = reduce_loop(&ambient, target)?;
            let report = ReduceReport {
                space: target,
                period,
                chore_defect: chore_defect(&lp)?,
                fs_diameter: if target == Space::Ambient { None } else { Some(fs_diameter(&lp)?) },
                samples: lp.samples().iter().map(|s| s.iter().map(|w| [w.re, w.im]).collect()).collect(),
            };
            emit_json(&report, a.out.as_deref(), stdout)?;
        }
        Command::Search(a) => {
            let a = merge(&a, a.system.config.as_deref())?;
            let spec = a.system.to_spec()?;
            let cfg = a.search.to_config()?;
            let outcome = search(&spec, &cfg)?;
            if a.verbose {
                for r in &outcome.reports {
                    writeln!(stderr, "{}", serde_json::to_string(r)?)?;
                }
            }
            emit_json(&outcome.results, a.out.as_deref(), stdout)?;
            if cfg.n_starts > 0 && !outcome.converged_any() {
                writeln!(stderr, "error: no start converged")?;
                return Ok(EXIT_NUMERICAL);
            }
        }
        Command::Sweep(a) => {
            let a = merge(&a, a.system.config.as_deref())?;
            let spec = a.system.to_spec()?;
            let cfg = a.search.to_config()?;
            let levels =
                a.levels.clone().ok_or_else(|| Error::InvalidConfig("--levels is required".into()))?;
            let report = energy_sweep(&spec, &levels, &cfg)?;
            emit_json(&report, a.out.as_deref(), stdout)?;
            let any = report.levels.iter().any(|l| l.outcome.converged_any());
            if cfg.n_starts > 0 && !levels.is_empty() && !any {
                writeln!(stderr, "error: no start converged at any level")?;
                return Ok(EXIT_NUMERICAL);
            }
        }
        Command::Sphere(a) => {
            let a = merge(&a, a.config.as_deref())?;
            let target: Target = a.target.as_deref().unwrap_or("cpn1").parse()?;
            let n = a.n.ok_or_else(|| Error::InvalidConfig("--n is required".into()))?;
            let quad_tol = a.quad_tol.unwrap_or(DEFAULT_QUAD_TOL);
            let mut s = SphereMap::new(n, target)?;
            if let Some(area) = a.disc_area {
                s = normalize_scale(&s, area, quad_tol)?;
                writeln!(stdout, "moebius_scale={:.16e}", s.moebius_scale.norm())?;
            }
            if a.check_equivariance {
                let pts = random_sphere_points(a.samples.unwrap_or(100), a.seed.unwrap_or(0));
                writeln!(stdout, "max_defect={:e}", equivariance_defect(&s, &pts))?;
            }
            if a.area {
                writeln!(stdout, "disc_area={:.16e}", fs_area(&s, Region::UnitDisc, quad_tol)?)?;
                writeln!(stdout, "full_area={:.16e}", fs_area(&s, Region::Full, quad_tol)?)?;
            }
            if let Some(r) = a.loop_radius {
                let lp = loop_at_radius(&s, r, a.loop_samples.unwrap_or(16 * n))?;
                writeln!(stdout, "loop_defect={:e}", chore_defect(&lp)?)?;
                writeln!(stdout, "loop_fs_diameter={:e}", fs_diameter(&lp)?)?;
                if let Some(p) = &a.out {
                    emit_json(&lp, Some(p), stdout)?;
                }
            }
        }
        Command::Analyze(a) => match a.kind {
            AnalyzeKind::Maximality(a) => {
                let a = merge(&a, a.config.as_deref())?;
                let n = a.n.ok_or_else(|| Error::InvalidConfig("--n is required".into()))?;
                let r = ngon_maximality_test(
                    n,
                    a.rho.unwrap_or(1.0),
                    a.trials.unwrap_or(10_000),
                    a.seed.unwrap_or(0),
                )?;
                emit_json(&r, None, stdout)?;
            }
            AnalyzeKind::Trap(a) => {
                let a = merge(&a, a.config.as_deref())?;
                let (alpha, beta) = (a.alpha.unwrap_or(1.0), a.beta.unwrap_or(0.0));
                let n = a.n.ok_or_else(|| Error::InvalidConfig("--n is required".into()))?;
                let c = polygon_trap_coefficient(alpha, beta, n);
                writeln!(stdout, "trap_coefficient={c:.16e}")?;
            }
            AnalyzeKind::Shub(a) => {
                let a = merge(&a, a.system.config.as_deref())?;
                let mut sys = a.system.clone();
                sys.family.get_or_insert_with(|| "bec".into());
                let spec = sys.to_spec()?;
                let r = shub_separation_scan(
                    &spec,
                    a.i_level.unwrap_or(0.3),
                    a.starts.unwrap_or(200),
                    a.seed.unwrap_or(0),
                )?;
                emit_json(&r, None, stdout)?;
            }
            AnalyzeKind::Probe(a) => {
                let a = merge(&a, a.system.config.as_deref())?;
                let spec = a.system.to_spec()?;
                let level = a.level.ok_or_else(|| Error::InvalidConfig("--level is required".into()))?;
                let r = invariant_component_probe(
                    &spec,
                    level,
                    a.i_level.unwrap_or(1.0),
                    a.samples.unwrap_or(16),
                    a.seed.unwrap_or(0),
                )?;
                emit_json(&r, None, stdout)?;
            }
        },
    }
    Ok(EXIT_OK)
}

#[derive(Debug, Serialize)]
struct ReduceReport {
    space: Space,
    period: f64,
    chore_defect: f64,
    fs_diameter: Option<f64>,
    samples: Vec<Vec<[f64; 2]>>,
}

/// Seeded test points spread over several decades of modulus.
pub fn random_sphere_points(count: usize, seed: u64) -> Vec<ExtendedComplex> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let r = 10f64.powf(rng.gen_range(-2.0..2.0));
            ExtendedComplex::Finite(Complex64::from_polar(r, rng.gen_range(0.0..std::f64::consts::TAU)))
        })
        .collect()
}
