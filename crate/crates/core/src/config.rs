//! `key = value` run configuration.
//!
//! Blank lines and `#` comments are ignored. Unknown or repeated keys are
//! errors, and so is any key that does not apply to the chosen scenario.
//! Every error names the line it comes from.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::grid::VelocityGrid;
use crate::parallel::plan_decomposition;
use crate::scenarios::{
    relaxation_scenario, sudden_cooling_scenario, sudden_heating_scenario,
    Scenario, WallResolution, COOLING_RATIO, HEATING_RATIO,
};
use crate::timestepper::DEFAULT_CFL;
use crate::transport::{BoundaryCondition, GHOSTS};
use crate::weights::{KernelSpec, DEFAULT_QUADRATURE_NODES, PANEL_NODES};

/// Keys that must appear in every config.
pub const REQUIRED_KEYS: [&str; 3] = ["N", "lambda", "scenario"];

const KNOWN_KEYS: [&str; 24] = [
    "N",
    "L",
    "lambda",
    "beta",
    "quadrature_nodes",
    "epsilon",
    "scenario",
    "ratio",
    "mean_free_path",
    "fine_length",
    "fine_per_mfp",
    "domain_length",
    "coarse_per_mfp",
    "far_boundary",
    "cfl",
    "dt",
    "end_time",
    "workers",
    "backend",
    "ranks",
    "weight_cache",
    "output_dir",
    "output_interval",
    "marginal_cells",
];

/// Keys that only make sense with a spatial grid.
const SPATIAL_KEYS: [&str; 9] = [
    "ratio",
    "mean_free_path",
    "fine_length",
    "fine_per_mfp",
    "domain_length",
    "coarse_per_mfp",
    "far_boundary",
    "cfl",
    "ranks",
];

/// Time step of homogeneous runs when `dt` is not given.
pub const DEFAULT_HOMOGENEOUS_DT: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    Relaxation,
    SuddenHeating,
    SuddenCooling,
}

impl ScenarioKind {
    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::Relaxation => "relaxation",
            ScenarioKind::SuddenHeating => "sudden_heating",
            ScenarioKind::SuddenCooling => "sudden_cooling",
        }
    }

    pub fn is_spatial(self) -> bool {
        self != ScenarioKind::Relaxation
    }

    fn default_end_time(self) -> f64 {
        match self {
            ScenarioKind::Relaxation => 5.0,
            _ => 2.0,
        }
    }
}

impl FromStr for ScenarioKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "relaxation" => Ok(ScenarioKind::Relaxation),
            "sudden_heating" => Ok(ScenarioKind::SuddenHeating),
            "sudden_cooling" => Ok(ScenarioKind::SuddenCooling),
            other => Err(format!(
                "unknown scenario '{other}', expected relaxation, sudden_heating or sudden_cooling"
            )),
        }
    }
}

/// Process backend for the spatial decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    Solo,
    /// In-process ranks on threads.
    Loopback,
    Mpi,
}

impl Backend {
    pub fn name(self) -> &'static str {
        match self {
            Backend::Solo => "solo",
            Backend::Loopback => "loopback",
            Backend::Mpi => "mpi",
        }
    }
}

impl FromStr for Backend {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "solo" => Ok(Backend::Solo),
            "loopback" => Ok(Backend::Loopback),
            "mpi" => Ok(Backend::Mpi),
            other => Err(format!("unknown backend '{other}', expected solo, loopback or mpi")),
        }
    }
}

/// Condition at the end of the domain away from the wall.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FarBoundary {
    Extrapolate,
    NoInflow,
}

impl FarBoundary {
    pub fn name(self) -> &'static str {
        match self {
            FarBoundary::Extrapolate => "extrapolate",
            FarBoundary::NoInflow => "no_inflow",
        }
    }
}

impl FromStr for FarBoundary {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "extrapolate" => Ok(FarBoundary::Extrapolate),
            "no_inflow" => Ok(FarBoundary::NoInflow),
            other => Err(format!("unknown far boundary '{other}', expected extrapolate or no_inflow")),
        }
    }
}

/// Fully resolved run configuration; every default is filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub n: usize,
    pub half_width: f64,
    pub lambda: f64,
    pub beta: f64,
    pub quadrature_nodes: usize,
    pub epsilon: f64,
    pub scenario: ScenarioKind,
    /// Wall temperature after the jump over the initial temperature.
    pub ratio: f64,
    pub resolution: WallResolution,
    pub far_boundary: FarBoundary,
    pub cfl: f64,
    /// `None`: the largest step allowed by `cfl`.
    pub dt: Option<f64>,
    pub end_time: f64,
    pub workers: usize,
    pub backend: Backend,
    pub ranks: usize,
    pub weight_cache: Option<PathBuf>,
    pub output_dir: PathBuf,
    /// Steps between output times.
    pub output_interval: u64,
    pub marginal_cells: Vec<usize>,
}

struct Entry {
    line: usize,
    value: String,
}

struct Entries {
    map: HashMap<String, Entry>,
}

impl Entries {
    fn line(&self, key: &str) -> Option<usize> {
        self.map.get(key).map(|e| e.line)
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.map.get(key) {
            None => Ok(None),
            Some(e) => e.value.parse::<T>().map(Some).map_err(|err| Error::Config {
                line: e.line,
                reason: format!("{key}: cannot parse '{}': {err}", e.value),
            }),
        }
    }

    fn or<T: FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.get(key)?.unwrap_or(default))
    }
}

fn tokenize(text: &str) -> Result<Entries> {
    let mut map: HashMap<String, Entry> = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| Error::Config {
            line,
            reason: format!("expected key = value, got '{content}'"),
        })?;
        let key = key.trim();
        let value = value.trim();
        if !KNOWN_KEYS.contains(&key) {
            return Err(Error::Config {
                line,
                reason: format!("unknown key '{key}'"),
            });
        }
        if value.is_empty() {
            return Err(Error::Config {
                line,
                reason: format!("{key}: empty value"),
            });
        }
        if let Some(prev) = map.get(key) {
            return Err(Error::Config {
                line,
                reason: format!("{key} already set on line {}", prev.line),
            });
        }
        map.insert(
            key.to_string(),
            Entry {
                line,
                value: value.to_string(),
            },
        );
    }
    Ok(Entries { map })
}

/// Evenly spread `count` cell indices over `cells`, including both ends.
pub fn equispaced_cells(cells: usize, count: usize) -> Vec<usize> {
    let count = count.min(cells);
    if count <= 1 {
        return vec![0; count];
    }
    (0..count)
        .map(|i| ((i * (cells - 1)) as f64 / (count - 1) as f64).round() as usize)
        .collect()
}

/// Parses and validates a configuration.
pub fn parse_config(text: &str) -> Result<SolverConfig> {
    let e = tokenize(text)?;
    let missing: Vec<&str> = REQUIRED_KEYS.iter().copied().filter(|k| e.line(k).is_none()).collect();
    if !missing.is_empty() {
        return Err(Error::MissingKeys(missing.join(", ")));
    }
    let at = |key: &str| e.line(key).or_else(|| e.line("scenario")).unwrap_or(0);
    let fail = |key: &str, reason: String| Error::Config { line: at(key), reason };

    let scenario: ScenarioKind = e.get::<ScenarioKind>("scenario")?.expect("required");
    if !scenario.is_spatial() {
        if let Some(k) = SPATIAL_KEYS.iter().find(|k| e.line(k).is_some()) {
            return Err(fail(k, format!("{k} does not apply to the {} scenario", scenario.name())));
        }
    }

    let n: usize = e.get("N")?.expect("required");
    let lambda: f64 = e.get("lambda")?.expect("required");
    let beta = e.or("beta", 1.0)?;
    let quadrature_nodes = e.or("quadrature_nodes", DEFAULT_QUADRATURE_NODES)?;
    if quadrature_nodes < 64 || quadrature_nodes % PANEL_NODES != 0 {
        return Err(fail(
            "quadrature_nodes",
            format!("quadrature_nodes must be a multiple of {PANEL_NODES} and at least 64, got {quadrature_nodes}"),
        ));
    }

    let ratio = match scenario {
        ScenarioKind::Relaxation => 1.0,
        ScenarioKind::SuddenHeating => e.or("ratio", HEATING_RATIO)?,
        ScenarioKind::SuddenCooling => e.or("ratio", COOLING_RATIO)?,
    };
    let defaults = WallResolution::default();
    let resolution = WallResolution {
        mean_free_path: e.or("mean_free_path", defaults.mean_free_path)?,
        fine_length: e.or("fine_length", defaults.fine_length)?,
        fine_per_mfp: e.or("fine_per_mfp", defaults.fine_per_mfp)?,
        domain_length: e.or("domain_length", defaults.domain_length)?,
        coarse_per_mfp: e.or("coarse_per_mfp", defaults.coarse_per_mfp)?,
    };
    let far_boundary = e.or("far_boundary", FarBoundary::Extrapolate)?;

    let mut config = SolverConfig {
        n,
        half_width: 0.0,
        lambda,
        beta,
        quadrature_nodes,
        epsilon: 1.0,
        scenario,
        ratio,
        resolution,
        far_boundary,
        cfl: e.or("cfl", DEFAULT_CFL)?,
        dt: None,
        end_time: e.or("end_time", scenario.default_end_time())?,
        workers: e.or("workers", 1)?,
        backend: e.or("backend", Backend::Solo)?,
        ranks: e.or("ranks", 1)?,
        weight_cache: e.get::<PathBuf>("weight_cache")?,
        output_dir: e.or("output_dir", PathBuf::from("output"))?,
        output_interval: e.or("output_interval", 10)?,
        marginal_cells: Vec::new(),
    };

    let base = config
        .base_scenario()
        .map_err(|err| fail(if scenario.is_spatial() { "ratio" } else { "scenario" }, err.to_string()))?;
    config.epsilon = e.or("epsilon", base.epsilon)?;
    config.half_width = e.or("L", base.default_half_width())?;

    VelocityGrid::new(n, config.half_width).map_err(|err| fail("N", err.to_string()))?;
    KernelSpec::new(lambda, beta, config.half_width).map_err(|err| {
        let key = if e.line("beta").is_some() && !(beta > 0.0 && beta <= 1.0) { "beta" } else { "lambda" };
        fail(key, err.to_string())
    })?;
    if !(config.epsilon > 0.0) {
        return Err(fail("epsilon", format!("epsilon must be positive, got {}", config.epsilon)));
    }
    if !(config.cfl > 0.0 && config.cfl <= 1.0) {
        return Err(fail("cfl", format!("cfl must lie in (0, 1], got {}", config.cfl)));
    }
    if !(config.end_time > 0.0 && config.end_time.is_finite()) {
        return Err(fail("end_time", format!("end_time must be positive, got {}", config.end_time)));
    }
    if config.workers == 0 {
        return Err(fail("workers", "workers must be at least 1".into()));
    }
    if config.output_interval == 0 {
        return Err(fail("output_interval", "output_interval must be at least 1".into()));
    }
    if config.backend == Backend::Mpi && !cfg!(feature = "mpi") {
        return Err(fail("backend", "this build has no MPI support (enable the 'mpi' feature)".into()));
    }
    if config.backend != Backend::Loopback && config.ranks != 1 {
        return Err(fail(
            "ranks",
            format!("ranks applies to the loopback backend only, got ranks = {} with {}", config.ranks, config.backend.name()),
        ));
    }

    let cells = match &base.spatial {
        Some(s) => s.len(),
        None => 1,
    };
    config.dt = match e.map.get("dt").map(|d| d.value.as_str()) {
        Some("auto") => None,
        Some(_) => e.get::<f64>("dt")?,
        None if scenario.is_spatial() => None,
        None => Some(DEFAULT_HOMOGENEOUS_DT),
    };
    if let Some(dt) = config.dt {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(fail("dt", format!("dt must be positive, got {dt}")));
        }
    } else if !scenario.is_spatial() {
        return Err(fail("dt", "homogeneous runs need an explicit dt".into()));
    }
    if let Some(spatial) = &base.spatial {
        let plans = plan_decomposition(spatial.len(), config.ranks).map_err(|err| fail("ranks", err.to_string()))?;
        if let Some(p) = plans.iter().find(|p| p.n_local() < GHOSTS) {
            return Err(fail(
                "ranks",
                format!("rank {} would own {} cells, at least {GHOSTS} are needed", p.rank, p.n_local()),
            ));
        }
        let limit = 2.0 * spatial.min_width() / config.half_width;
        if let Some(dt) = config.dt {
            if dt > limit {
                return Err(fail("dt", format!("dt = {dt} exceeds the stable bound {limit}")));
            }
        }
    }

    config.marginal_cells = match e.map.get("marginal_cells") {
        None => equispaced_cells(cells, 8),
        Some(entry) => {
            let mut list = Vec::new();
            for item in entry.value.split(',') {
                let idx: usize = item.trim().parse().map_err(|err| Error::Config {
                    line: entry.line,
                    reason: format!("marginal_cells: cannot parse '{}': {err}", item.trim()),
                })?;
                if idx >= cells {
                    return Err(Error::Config {
                        line: entry.line,
                        reason: format!("marginal cell {idx} outside a grid of {cells} cells"),
                    });
                }
                list.push(idx);
            }
            list
        }
    };
    Ok(config)
}

impl SolverConfig {
    fn base_scenario(&self) -> Result<Scenario> {
        match self.scenario {
            ScenarioKind::Relaxation => Ok(relaxation_scenario(self.lambda)),
            ScenarioKind::SuddenHeating => sudden_heating_scenario(self.ratio, self.resolution),
            ScenarioKind::SuddenCooling => sudden_cooling_scenario(self.ratio, self.resolution),
        }
    }

    /// The scenario with this config's overrides applied.
    pub fn scenario(&self) -> Result<Scenario> {
        let mut s = self.base_scenario()?;
        s.lambda = self.lambda;
        s.epsilon = self.epsilon;
        if s.spatial.is_some() {
            s.right = match self.far_boundary {
                FarBoundary::Extrapolate => BoundaryCondition::Extrapolate,
                FarBoundary::NoInflow => BoundaryCondition::NoInflow,
            };
        }
        Ok(s)
    }

    pub fn velocity_grid(&self) -> Result<VelocityGrid> {
        VelocityGrid::new(self.n, self.half_width)
    }

    pub fn kernel(&self) -> Result<KernelSpec> {
        KernelSpec::new(self.lambda, self.beta, self.half_width)
    }

    /// Every setting as config text; parsing it gives back this config.
    pub fn echo(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("scenario", self.scenario.name().into());
        put("N", self.n.to_string());
        put("L", format!("{:?}", self.half_width));
        put("lambda", format!("{:?}", self.lambda));
        put("beta", format!("{:?}", self.beta));
        put("quadrature_nodes", self.quadrature_nodes.to_string());
        put("epsilon", format!("{:?}", self.epsilon));
        if self.scenario.is_spatial() {
            let r = &self.resolution;
            put("ratio", format!("{:?}", self.ratio));
            put("mean_free_path", format!("{:?}", r.mean_free_path));
            put("fine_length", format!("{:?}", r.fine_length));
            put("fine_per_mfp", r.fine_per_mfp.to_string());
            put("domain_length", format!("{:?}", r.domain_length));
            put("coarse_per_mfp", r.coarse_per_mfp.to_string());
            put("far_boundary", self.far_boundary.name().into());
            put("cfl", format!("{:?}", self.cfl));
            put("ranks", self.ranks.to_string());
        }
        put(
            "dt",
            match self.dt {
                Some(dt) => format!("{dt:?}"),
                None => "auto".into(),
            },
        );
        put("end_time", format!("{:?}", self.end_time));
        put("workers", self.workers.to_string());
        put("backend", self.backend.name().into());
        if let Some(p) = &self.weight_cache {
            put("weight_cache", p.display().to_string());
        }
        put("output_dir", self.output_dir.display().to_string());
        put("output_interval", self.output_interval.to_string());
        let cells: Vec<String> = self.marginal_cells.iter().map(|c| c.to_string()).collect();
        if !cells.is_empty() {
            put("marginal_cells", cells.join(","));
        }
        s
    }
}
