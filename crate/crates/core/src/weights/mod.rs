//! Convolution weights `G(xi, zeta)` for isotropic scattering in three dimensions.
//!
//! The table holds one real weight per pair of Fourier lattice points, stored
//! zeta-major: all `N^3` xi-values for one zeta are contiguous, which is the
//! order the convolution sum streams them in.

mod cache;
mod radial;

use std::collections::HashMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::VelocityGrid;

pub use cache::{load_table, read_header, save_table, TableHeader};
pub(crate) use radial::gauss_legendre;
pub use radial::{RadialRule, PANEL_NODES};

/// Default radial node count, validated by the self-convergence tests.
pub const DEFAULT_QUADRATURE_NODES: usize = 1024;

/// Collision kernel `|u|^lambda b(cos theta)` with `b = 1 / (4 pi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    lambda: f64,
    beta: f64,
    r0: f64,
}

impl KernelSpec {
    pub fn new(lambda: f64, beta: f64, r0: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::InvalidKernel(format!(
                "lambda must lie in [0, 1], got {lambda}"
            )));
        }
        if !(beta > 0.0 && beta <= 1.0) {
            return Err(Error::InvalidKernel(format!(
                "beta must lie in (0, 1], got {beta}"
            )));
        }
        if !(r0.is_finite() && r0 > 0.0) {
            return Err(Error::InvalidKernel(format!(
                "cut-off radius must be positive, got {r0}"
            )));
        }
        Ok(Self { lambda, beta, r0 })
    }

    /// Elastic kernel with the radial cut-off at the grid half-width.
    pub fn for_grid(lambda: f64, grid: &VelocityGrid) -> Result<Self> {
        Self::new(lambda, 1.0, grid.half_width())
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn r0(&self) -> f64 {
        self.r0
    }

    /// Angular kernel constant; integrates to one over the unit sphere.
    pub fn b_norm(&self) -> f64 {
        1.0 / (4.0 * std::f64::consts::PI)
    }

    pub fn has_closed_form(&self) -> bool {
        self.lambda == 0.0 || self.lambda == 1.0
    }

    fn radii(&self, xi: [f64; 3], zeta: [f64; 3]) -> (f64, f64, f64) {
        let half = 0.5 * self.beta;
        let a = half * norm(zeta);
        let b = norm([
            xi[0] - half * zeta[0],
            xi[1] - half * zeta[1],
            xi[2] - half * zeta[2],
        ]);
        (a, b, norm(xi))
    }
}

fn norm(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// How a table's entries were produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GenerationMethod {
    ClosedForm,
    Quadrature { nodes: usize },
}

/// Weight by composite Gauss-Legendre quadrature of the radial integral.
pub fn weight_quadrature(kernel: &KernelSpec, xi: [f64; 3], zeta: [f64; 3], nodes: usize) -> f64 {
    let (a, b, c) = kernel.radii(xi, zeta);
    if a == 0.0 {
        return 0.0;
    }
    let rule = RadialRule::new(kernel.r0, nodes, kernel.lambda);
    radial::prefactor() * rule.integrate(a, b, c)
}

/// Weight from the analytic radial integral; only `lambda = 0` and `lambda = 1`.
pub fn weight_closed_form(kernel: &KernelSpec, xi: [f64; 3], zeta: [f64; 3]) -> Result<f64> {
    let (a, b, c) = kernel.radii(xi, zeta);
    radial::closed_form_radial(kernel.lambda, kernel.r0, a, b, c)
        .map(|v| radial::prefactor() * v)
        .ok_or_else(|| {
            Error::InvalidKernel(format!(
                "closed form exists only for lambda in {{0, 1}}, got {}",
                kernel.lambda
            ))
        })
}

/// Precomputed weights for one grid and kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightTable {
    n: usize,
    half_width: f64,
    kernel: KernelSpec,
    method: GenerationMethod,
    values: Vec<f64>,
}

impl WeightTable {
    pub(crate) fn from_parts(
        n: usize,
        half_width: f64,
        kernel: KernelSpec,
        method: GenerationMethod,
        values: Vec<f64>,
    ) -> Self {
        Self {
            n,
            half_width,
            kernel,
            method,
            values,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn method(&self) -> GenerationMethod {
        self.method
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Weights `G(xi_m, zeta_k)` for all `m`, for the zeta lattice point `k`.
    #[inline]
    pub fn zeta_slice(&self, k: usize) -> &[f64] {
        let m = self.n * self.n * self.n;
        &self.values[k * m..(k + 1) * m]
    }

    #[inline]
    pub fn get(&self, zeta_index: usize, xi_index: usize) -> f64 {
        let m = self.n * self.n * self.n;
        self.values[zeta_index * m + xi_index]
    }

    /// True when this table was built for `grid`.
    pub fn matches_grid(&self, grid: &VelocityGrid) -> bool {
        self.n == grid.n() && self.half_width.to_bits() == grid.half_width().to_bits()
    }

    /// Bytes needed by the value array of an `n`-point table.
    pub fn required_bytes(n: usize) -> u128 {
        (n as u128).pow(6) * 8
    }
}

/// Integer-exact invariants of a lattice pair: `|k - N/2|^2`, `|m - N/2|^2`,
/// and the bit pattern of `|xi - beta zeta / 2| / dzeta` computed from
/// sorted absolute components so that every pair related by a coordinate
/// permutation or reflection produces the same key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct PairKey {
    zeta_sq: u32,
    xi_sq: u32,
    shift_bits: u64,
}

fn pair_key(n: usize, beta: f64, k: [usize; 3], m: [usize; 3]) -> PairKey {
    let h = (n / 2) as i64;
    let mut zeta_sq = 0i64;
    let mut xi_sq = 0i64;
    let mut shift = [0.0f64; 3];
    for axis in 0..3 {
        let kz = k[axis] as i64 - h;
        let mx = m[axis] as i64 - h;
        zeta_sq += kz * kz;
        xi_sq += mx * mx;
        shift[axis] = (mx as f64 - 0.5 * beta * kz as f64).abs();
    }
    shift.sort_by(|a, b| a.total_cmp(b));
    let shift_norm = (shift[0] * shift[0] + shift[1] * shift[1] + shift[2] * shift[2]).sqrt();
    PairKey {
        zeta_sq: zeta_sq as u32,
        xi_sq: xi_sq as u32,
        shift_bits: shift_norm.to_bits(),
    }
}

fn evaluate_key(key: PairKey, kernel: &KernelSpec, dzeta: f64, rule: Option<&RadialRule>) -> f64 {
    let a = 0.5 * kernel.beta * dzeta * (key.zeta_sq as f64).sqrt();
    let b = dzeta * f64::from_bits(key.shift_bits);
    let c = dzeta * (key.xi_sq as f64).sqrt();
    if key.zeta_sq == 0 {
        return 0.0;
    }
    let radial = match rule {
        Some(rule) => rule.integrate(a, b, c),
        None => radial::closed_form_radial(kernel.lambda, kernel.r0, a, b, c)
            .expect("closed form requested for integer lambda"),
    };
    radial::prefactor() * radial
}

/// Fills the full table for `grid` and `kernel` using the default radial node count
/// when quadrature is needed.
pub fn generate_table(grid: &VelocityGrid, kernel: &KernelSpec) -> Result<WeightTable> {
    generate_table_with(grid, kernel, DEFAULT_QUADRATURE_NODES)
}

/// Fills the full table. Closed forms are used for `lambda` in {0, 1},
/// quadrature with `quadrature_nodes` points otherwise.
///
/// Runs on the current rayon pool. Each entry is a pure function of its
/// lattice pair, so the result does not depend on the worker count.
pub fn generate_table_with(
    grid: &VelocityGrid,
    kernel: &KernelSpec,
    quadrature_nodes: usize,
) -> Result<WeightTable> {
    let nodes = if kernel.has_closed_form() { None } else { Some(quadrature_nodes) };
    fill_table(grid, kernel, nodes)
}

/// Fills the full table by radial quadrature with `quadrature_nodes` points,
/// even where a closed form exists. Used to cross-check the closed forms.
pub fn generate_quadrature_table(
    grid: &VelocityGrid,
    kernel: &KernelSpec,
    quadrature_nodes: usize,
) -> Result<WeightTable> {
    fill_table(grid, kernel, Some(quadrature_nodes))
}

fn fill_table(grid: &VelocityGrid, kernel: &KernelSpec, quadrature_nodes: Option<usize>) -> Result<WeightTable> {
    let n = grid.n();
    let m = grid.len();
    let entries = (m as u128) * (m as u128);
    let bytes = WeightTable::required_bytes(n);
    let mut values: Vec<f64> = Vec::new();
    usize::try_from(entries)
        .ok()
        .and_then(|len| values.try_reserve_exact(len).ok())
        .ok_or(Error::Allocation { bytes, entries })?;

    let (method, rule) = match quadrature_nodes {
        None => (GenerationMethod::ClosedForm, None),
        Some(nodes) => {
            if nodes < 64 || nodes % PANEL_NODES != 0 {
                return Err(Error::InvalidArgument(format!(
                    "quadrature node count must be a multiple of {PANEL_NODES} and at least 64, got {nodes}"
                )));
            }
            (
                GenerationMethod::Quadrature { nodes },
                Some(RadialRule::new(kernel.r0, nodes, kernel.lambda)),
            )
        }
    };

    // Distinct invariant triples, gathered per zeta slice and then merged.
    let per_slice: Vec<Vec<PairKey>> = (0..m)
        .into_par_iter()
        .map(|k| {
            let kk = grid.unravel(k);
            let mut keys: Vec<PairKey> = (0..m)
                .map(|x| pair_key(n, kernel.beta, kk, grid.unravel(x)))
                .collect();
            keys.sort_unstable();
            keys.dedup();
            keys
        })
        .collect();
    let mut unique: Vec<PairKey> = per_slice.into_iter().flatten().collect();
    unique.par_sort_unstable();
    unique.dedup();

    let dzeta = grid.dzeta();
    let evaluated: Vec<f64> = unique
        .par_iter()
        .map(|&key| evaluate_key(key, kernel, dzeta, rule.as_ref()))
        .collect();
    let lookup: HashMap<PairKey, f64> = unique.into_iter().zip(evaluated).collect();

    values.resize(m * m, 0.0);
    values
        .par_chunks_mut(m)
        .enumerate()
        .for_each(|(k, slice)| {
            let kk = grid.unravel(k);
            for (x, slot) in slice.iter_mut().enumerate() {
                *slot = lookup[&pair_key(n, kernel.beta, kk, grid.unravel(x))];
            }
        });

    Ok(WeightTable {
        n,
        half_width: grid.half_width(),
        kernel: *kernel,
        method,
        values,
    })
}
