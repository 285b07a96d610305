//! Built-in experiments and their initial data.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::VelocityGrid;
use crate::transport::{BoundaryCondition, SpatialGrid, WallSpec};

/// Maxwellian `rho / (2 pi T)^{3/2} exp(-|v - V|^2 / (2 T))` sampled at the nodes.
pub fn maxwellian(grid: &VelocityGrid, rho: f64, velocity: [f64; 3], temperature: f64) -> Result<Vec<f64>> {
    if !(temperature > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "temperature must be positive, got {temperature}"
        )));
    }
    if !(rho >= 0.0) {
        return Err(Error::InvalidArgument(format!("density must be nonnegative, got {rho}")));
    }
    let norm = rho / (2.0 * PI * temperature).powf(1.5);
    Ok((0..grid.len())
        .map(|idx| {
            let v = grid.velocity(idx);
            let c2: f64 = (0..3).map(|a| (v[a] - velocity[a]).powi(2)).sum();
            norm * (-c2 / (2.0 * temperature)).exp()
        })
        .collect())
}

/// Parameters of one Maxwellian component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaxwellianParams {
    pub rho: f64,
    pub velocity: [f64; 3],
    pub temperature: f64,
}

impl MaxwellianParams {
    pub fn new(rho: f64, velocity: [f64; 3], temperature: f64) -> Self {
        Self {
            rho,
            velocity,
            temperature,
        }
    }

    pub fn sample(&self, grid: &VelocityGrid) -> Result<Vec<f64>> {
        maxwellian(grid, self.rho, self.velocity, self.temperature)
    }

    /// Value at an arbitrary velocity.
    pub fn density(&self, v: [f64; 3]) -> f64 {
        let t = self.temperature;
        let c2: f64 = (0..3).map(|a| (v[a] - self.velocity[a]).powi(2)).sum();
        self.rho / (2.0 * PI * t).powf(1.5) * (-c2 / (2.0 * t)).exp()
    }
}

/// Sum of Maxwellians.
pub fn mixture(grid: &VelocityGrid, components: &[MaxwellianParams]) -> Result<Vec<f64>> {
    let mut out = vec![0.0; grid.len()];
    for c in components {
        for (o, x) in out.iter_mut().zip(c.sample(grid)?) {
            *o += x;
        }
    }
    Ok(out)
}

/// Two-bump non-equilibrium state used by the relaxation runs and oracle checks.
pub fn default_mixture() -> Vec<MaxwellianParams> {
    vec![
        MaxwellianParams::new(0.5, [-1.0, 0.0, 0.0], 0.5),
        MaxwellianParams::new(0.5, [1.0, 0.0, 0.0], 0.5),
    ]
}

/// `g(v1) = sum_{v2, v3} f omega_2 omega_3`.
pub fn marginal_distribution(grid: &VelocityGrid, f: &[f64]) -> Vec<f64> {
    let n = grid.n();
    let c = grid.trapezoid_coeffs();
    let dv2 = grid.dv() * grid.dv();
    (0..n)
        .map(|i| {
            let mut acc = 0.0;
            for j in 0..n {
                for k in 0..n {
                    acc += f[grid.index(i, j, k)] * c[j] * c[k];
                }
            }
            acc * dv2
        })
        .collect()
}

/// Velocity half-width that holds the support of gas at temperature up to
/// `t_max`: `L = 2 sqrt(2 t_max)` with a 1.25 safety factor.
pub fn default_half_width(t_max: f64) -> f64 {
    2.0 * (2.0 * t_max).sqrt() * 1.25
}

/// Initial distribution per cell.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialState {
    Uniform(MaxwellianParams),
    Mixture(Vec<MaxwellianParams>),
}

impl InitialState {
    pub fn sample(&self, grid: &VelocityGrid) -> Result<Vec<f64>> {
        match self {
            InitialState::Uniform(p) => p.sample(grid),
            InitialState::Mixture(c) => mixture(grid, c),
        }
    }

    pub fn max_temperature(&self) -> f64 {
        match self {
            InitialState::Uniform(p) => p.temperature,
            InitialState::Mixture(c) => c.iter().map(|p| p.temperature).fold(0.0, f64::max),
        }
    }
}

/// Grid resolution for the wall problems, in cells per mean free path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WallResolution {
    pub mean_free_path: f64,
    /// Length of the refined zone next to the wall.
    pub fine_length: f64,
    pub fine_per_mfp: usize,
    /// Total domain length.
    pub domain_length: f64,
    pub coarse_per_mfp: usize,
}

impl Default for WallResolution {
    fn default() -> Self {
        Self {
            mean_free_path: 1.0,
            fine_length: 1.0,
            fine_per_mfp: 8,
            domain_length: 10.0,
            coarse_per_mfp: 2,
        }
    }
}

impl WallResolution {
    pub fn spatial_grid(&self) -> Result<SpatialGrid> {
        let coarse_length = self.domain_length - self.fine_length;
        if !(self.mean_free_path > 0.0 && self.fine_length > 0.0 && coarse_length > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "wall zones: mfp {}, fine length {}, domain length {}",
                self.mean_free_path, self.fine_length, self.domain_length
            )));
        }
        let cells = |len: f64, per: usize| ((len / self.mean_free_path) * per as f64).round().max(1.0) as usize;
        SpatialGrid::zoned(
            0.0,
            &[
                (self.fine_length, cells(self.fine_length, self.fine_per_mfp)),
                (coarse_length, cells(coarse_length, self.coarse_per_mfp)),
            ],
        )
    }
}

/// A runnable experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    /// `None` for spatially homogeneous runs.
    pub spatial: Option<SpatialGrid>,
    pub initial: InitialState,
    pub left: BoundaryCondition,
    pub right: BoundaryCondition,
    pub epsilon: f64,
    pub lambda: f64,
    /// Largest temperature the velocity domain must hold.
    pub max_temperature: f64,
}

impl Scenario {
    pub fn default_half_width(&self) -> f64 {
        default_half_width(self.max_temperature)
    }
}

/// Spatially homogeneous relaxation of a two-Maxwellian mixture.
pub fn relaxation_scenario(lambda: f64) -> Scenario {
    let initial = InitialState::Mixture(default_mixture());
    let max_temperature = mixture_temperature(&default_mixture());
    Scenario {
        name: "relaxation".into(),
        spatial: None,
        initial,
        left: BoundaryCondition::Extrapolate,
        right: BoundaryCondition::Extrapolate,
        epsilon: 1.0,
        lambda,
        max_temperature,
    }
}

/// Equilibrium temperature of a mixture: the temperature of the Maxwellian
/// with the same mass, momentum and energy.
pub fn mixture_temperature(components: &[MaxwellianParams]) -> f64 {
    let rho: f64 = components.iter().map(|c| c.rho).sum();
    let mut mom = [0.0; 3];
    let mut energy = 0.0;
    for c in components {
        for a in 0..3 {
            mom[a] += c.rho * c.velocity[a];
        }
        let v2: f64 = c.velocity.iter().map(|x| x * x).sum();
        energy += 0.5 * c.rho * (v2 + 3.0 * c.temperature);
    }
    let bulk: f64 = mom.iter().map(|m| (m / rho).powi(2)).sum();
    (2.0 * energy / rho - bulk) / 3.0
}

/// Gas at rest in equilibrium at temperature 1 next to a wall at `x = 0`
/// whose temperature jumps to `ratio` at `t = 0`. The far end extrapolates.
pub fn sudden_wall_scenario(ratio: f64, resolution: WallResolution) -> Result<Scenario> {
    if !(ratio > 0.0 && ratio.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "wall temperature ratio must be positive, got {ratio}"
        )));
    }
    let wall = WallSpec::sudden(1.0, ratio, 1.0)?;
    let name = if ratio > 1.0 {
        "sudden_heating"
    } else if ratio < 1.0 {
        "sudden_cooling"
    } else {
        "sudden_wall"
    };
    Ok(Scenario {
        name: name.into(),
        spatial: Some(resolution.spatial_grid()?),
        initial: InitialState::Uniform(MaxwellianParams::new(1.0, [0.0; 3], 1.0)),
        left: BoundaryCondition::Wall(wall),
        right: BoundaryCondition::Extrapolate,
        epsilon: 1.0,
        lambda: 1.0,
        max_temperature: ratio.max(1.0),
    })
}

/// Default heating ratio.
pub const HEATING_RATIO: f64 = 2.0;
/// Default cooling ratio.
pub const COOLING_RATIO: f64 = 0.5;

pub fn sudden_heating_scenario(ratio: f64, resolution: WallResolution) -> Result<Scenario> {
    if !(ratio >= 1.0) {
        return Err(Error::InvalidArgument(format!("heating needs ratio >= 1, got {ratio}")));
    }
    sudden_wall_scenario(ratio, resolution)
}

pub fn sudden_cooling_scenario(ratio: f64, resolution: WallResolution) -> Result<Scenario> {
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(Error::InvalidArgument(format!("cooling needs ratio in (0, 1], got {ratio}")));
    }
    sudden_wall_scenario(ratio, resolution)
}

/// Scenario names accepted by the CLI.
pub const SCENARIO_NAMES: [&str; 3] = ["relaxation", "sudden_heating", "sudden_cooling"];

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::compute_moments;

    #[test]
    fn maxwellian_moments_resolved() {
        let g = VelocityGrid::new(24, 6.0).unwrap();
        let m = compute_moments(&g, &maxwellian(&g, 1.0, [0.0; 3], 1.0).unwrap());
        assert!((m.rho - 1.0).abs() < 1e-6);
        assert!(m.velocity.iter().all(|v| v.abs() < 1e-6));
        assert!((m.temperature - 1.0).abs() < 1e-6);
    }

    #[test]
    fn zero_density_and_bad_temperature() {
        let g = VelocityGrid::new(8, 4.0).unwrap();
        assert!(maxwellian(&g, 0.0, [0.0; 3], 1.0).unwrap().iter().all(|&x| x == 0.0));
        assert!(maxwellian(&g, 1.0, [0.0; 3], 0.0).is_err());
        assert!(maxwellian(&g, 1.0, [0.0; 3], -1.0).is_err());
    }

    #[test]
    fn lattice_shift_displaces_array() {
        let g = VelocityGrid::new(8, 4.0).unwrap();
        let a = maxwellian(&g, 1.0, [0.0, 0.2, 0.0], 0.8).unwrap();
        let b = maxwellian(&g, 1.0, [g.dv(), 0.2, 0.0], 0.8).unwrap();
        for i in 0..7 {
            for j in 0..8 {
                for k in 0..8 {
                    let x = a[g.index(i, j, k)];
                    let y = b[g.index(i + 1, j, k)];
                    assert!((x - y).abs() <= 1e-15 * x.abs().max(1e-300), "{x} {y}");
                }
            }
        }
    }

    #[test]
    fn marginal_of_maxwellian_is_gaussian() {
        let g = VelocityGrid::new(24, 6.0).unwrap();
        let f = maxwellian(&g, 1.0, [0.0; 3], 1.0).unwrap();
        let marg = marginal_distribution(&g, &f);
        for (i, &v1) in g.nodes().iter().enumerate() {
            let exact = (-0.5 * v1 * v1).exp() / (2.0 * PI).sqrt();
            assert!((marg[i] - exact).abs() < 1e-6, "v1 {v1}: {} vs {exact}", marg[i]);
        }
    }

    #[test]
    fn marginal_integrates_to_density() {
        let g = VelocityGrid::new(8, 4.0).unwrap();
        let f = mixture(&g, &default_mixture()).unwrap();
        let marg = marginal_distribution(&g, &f);
        let c = g.trapezoid_coeffs();
        let total: f64 = marg.iter().zip(c).map(|(m, c)| m * c * g.dv()).sum();
        let rho = compute_moments(&g, &f).rho;
        assert!((total - rho).abs() < 1e-14);
        assert!(marginal_distribution(&g, &vec![0.0; g.len()]).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn wall_scenarios() {
        let s = sudden_heating_scenario(2.0, WallResolution::default()).unwrap();
        let grid = s.spatial.as_ref().unwrap();
        assert_eq!(grid.len(), 8 + 18);
        assert_eq!(grid.widths()[0], 0.125);
        assert_eq!(grid.widths()[25], 0.5);
        assert!((s.default_half_width() - 5.0).abs() < 1e-14);
        assert!(matches!(s.left, BoundaryCondition::Wall(w) if w.temperature_at(0.0) == 2.0 && w.temperature_at(-1.0) == 1.0));
        assert!(sudden_heating_scenario(0.5, WallResolution::default()).is_err());
        assert!(sudden_cooling_scenario(0.5, WallResolution::default()).is_ok());
        assert!(sudden_wall_scenario(-1.0, WallResolution::default()).is_err());
    }

    #[test]
    fn mixture_temperature_matches_moments() {
        let g = VelocityGrid::new(24, 6.0).unwrap();
        let f = mixture(&g, &default_mixture()).unwrap();
        let m = compute_moments(&g, &f);
        assert!((m.temperature - mixture_temperature(&default_mixture())).abs() < 1e-6);
    }
}
