//! Direct quadrature of the strong collision integral, for cross-checking the
//! spectral operator on small grids.
//!
//! `Q(v) = int_{|u| <= r0} int_{S^2} |u|^lambda b [f(v') f(v*') - f(v) f(v*)] dsigma dv*`
//! with `u = v - v*`, `v' = (v + v*)/2 + |u| sigma / 2`, `v*' = (v + v*)/2 - |u| sigma / 2`.
//! `v*` runs over the lattice with trapezoid weights; `f` at post-collision
//! velocities is trilinear in the lattice values, zero outside `[-L, L]^3` and
//! at the implicit node `+L`.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::VelocityGrid;
use crate::weights::{gauss_legendre, KernelSpec};

/// Largest grid the oracle accepts; cost is `O(N^6 * angular_nodes^2)`.
pub const MAX_ORACLE_N: usize = 12;

fn interpolate(grid: &VelocityGrid, f: &[f64], v: [f64; 3]) -> f64 {
    let n = grid.n();
    let l = grid.half_width();
    let dv = grid.dv();
    let mut base = [0usize; 3];
    let mut frac = [0.0; 3];
    for a in 0..3 {
        let p = (v[a] + l) / dv;
        if !(0.0..=n as f64).contains(&p) {
            return 0.0;
        }
        let i = (p.floor() as usize).min(n - 1);
        base[a] = i;
        frac[a] = p - i as f64;
    }
    let at = |i: usize, j: usize, k: usize| -> f64 {
        if i >= n || j >= n || k >= n {
            0.0
        } else {
            f[grid.index(i, j, k)]
        }
    };
    let mut acc = 0.0;
    for (di, wi) in [(0, 1.0 - frac[0]), (1, frac[0])] {
        if wi == 0.0 {
            continue;
        }
        for (dj, wj) in [(0, 1.0 - frac[1]), (1, frac[1])] {
            if wj == 0.0 {
                continue;
            }
            for (dk, wk) in [(0, 1.0 - frac[2]), (1, frac[2])] {
                if wk == 0.0 {
                    continue;
                }
                acc += wi * wj * wk * at(base[0] + di, base[1] + dj, base[2] + dk);
            }
        }
    }
    acc
}

/// Unit vectors and weights of a product rule on the sphere: `angular_nodes`
/// Gauss points in `cos(theta)` times `2 * angular_nodes` uniform azimuths.
/// Weights sum to `4 pi`.
fn sphere_rule(angular_nodes: usize) -> Vec<([f64; 3], f64)> {
    let (mu, w_mu) = gauss_legendre(angular_nodes);
    let n_phi = 2 * angular_nodes;
    let dphi = 2.0 * PI / n_phi as f64;
    let mut out = Vec::with_capacity(angular_nodes * n_phi);
    for (&c, &wc) in mu.iter().zip(&w_mu) {
        let s = (1.0 - c * c).max(0.0).sqrt();
        for p in 0..n_phi {
            let phi = (p as f64 + 0.5) * dphi;
            out.push(([s * phi.cos(), s * phi.sin(), c], wc * dphi));
        }
    }
    out
}

/// Direct quadrature of the collision integral at every lattice node, with
/// `f` at post-collision velocities interpolated trilinearly.
pub fn direct_collision_oracle(
    grid: &VelocityGrid,
    kernel: &KernelSpec,
    f: &[f64],
    angular_nodes: usize,
) -> Result<Vec<f64>> {
    if grid.n() > MAX_ORACLE_N {
        return Err(Error::InvalidArgument(format!(
            "direct oracle limited to N <= {MAX_ORACLE_N}, got N = {}",
            grid.n()
        )));
    }
    if f.len() != grid.len() {
        return Err(Error::ShapeMismatch {
            expected: grid.len(),
            found: f.len(),
        });
    }
    let targets: Vec<usize> = (0..grid.len()).collect();
    direct_collision_at(grid, kernel, |v| interpolate(grid, f, v), angular_nodes, &targets)
}

/// Direct quadrature of the collision integral at the lattice nodes
/// `targets`, for a density given at arbitrary velocities.
///
/// `v*` still runs over the lattice, so `density` is also what the loss term
/// sees at the nodes.
pub fn direct_collision_at<F>(
    grid: &VelocityGrid,
    kernel: &KernelSpec,
    density: F,
    angular_nodes: usize,
    targets: &[usize],
) -> Result<Vec<f64>>
where
    F: Fn([f64; 3]) -> f64 + Sync,
{
    if angular_nodes < 2 {
        return Err(Error::InvalidArgument(format!(
            "direct oracle needs at least 2 angular nodes, got {angular_nodes}"
        )));
    }
    if let Some(&t) = targets.iter().find(|&&t| t >= grid.len()) {
        return Err(Error::InvalidArgument(format!(
            "target node {t} outside a lattice of {} nodes",
            grid.len()
        )));
    }
    let sphere = sphere_rule(angular_nodes);
    let weights = grid.velocity_weights();
    let at_nodes: Vec<f64> = (0..grid.len()).map(|j| density(grid.velocity(j))).collect();
    let lambda = kernel.lambda();
    let r0 = kernel.r0();
    let b = kernel.b_norm();
    let out = targets
        .par_iter()
        .map(|&i| {
            let v = grid.velocity(i);
            let mut acc = 0.0;
            for (j, &wj) in weights.iter().enumerate() {
                let w = grid.velocity(j);
                let u = [v[0] - w[0], v[1] - w[1], v[2] - w[2]];
                let speed = (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt();
                if speed == 0.0 || speed > r0 {
                    continue;
                }
                let center = [
                    0.5 * (v[0] + w[0]),
                    0.5 * (v[1] + w[1]),
                    0.5 * (v[2] + w[2]),
                ];
                let half = 0.5 * speed;
                let mut gain = 0.0;
                for (s, ws) in &sphere {
                    let vp = [
                        center[0] + half * s[0],
                        center[1] + half * s[1],
                        center[2] + half * s[2],
                    ];
                    let vq = [
                        center[0] - half * s[0],
                        center[1] - half * s[1],
                        center[2] - half * s[2],
                    ];
                    gain += ws * density(vp) * density(vq);
                }
                let loss = 4.0 * PI * at_nodes[i] * at_nodes[j];
                acc += wj * speed.powf(lambda) * b * (gain - loss);
            }
            acc
        })
        .collect();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::compute_moments;
    use crate::scenarios::maxwellian;

    #[test]
    fn sphere_rule_integrates_polynomials() {
        let rule = sphere_rule(6);
        let area: f64 = rule.iter().map(|(_, w)| w).sum();
        assert!((area - 4.0 * PI).abs() < 1e-12);
        // int z^2 dsigma = 4 pi / 3, int x^2 y^2 dsigma = 4 pi / 15
        let z2: f64 = rule.iter().map(|(s, w)| w * s[2] * s[2]).sum();
        assert!((z2 - 4.0 * PI / 3.0).abs() < 1e-12);
        let xy: f64 = rule.iter().map(|(s, w)| w * s[0] * s[0] * s[1] * s[1]).sum();
        assert!((xy - 4.0 * PI / 15.0).abs() < 1e-12);
    }

    #[test]
    fn interpolation_reproduces_nodes_and_vanishes_outside() {
        let grid = VelocityGrid::new(6, 3.0).unwrap();
        let f: Vec<f64> = (0..grid.len()).map(|i| i as f64).collect();
        for i in [0, 17, 100, 215] {
            assert_eq!(interpolate(&grid, &f, grid.velocity(i)), f[i]);
        }
        assert_eq!(interpolate(&grid, &f, [3.5, 0.0, 0.0]), 0.0);
        // halfway to the implicit zero node at +L
        let top = grid.velocity(grid.index(5, 2, 2));
        let mid = interpolate(&grid, &f, [top[0] + 0.5 * grid.dv(), top[1], top[2]]);
        assert!((mid - 0.5 * f[grid.index(5, 2, 2)]).abs() < 1e-12);
    }

    #[test]
    fn zero_input_gives_zero() {
        let grid = VelocityGrid::new(6, 4.0).unwrap();
        let kernel = KernelSpec::for_grid(0.0, &grid).unwrap();
        let q = direct_collision_oracle(&grid, &kernel, &vec![0.0; 216], 4).unwrap();
        assert!(q.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn exact_maxwellian_is_an_equilibrium() {
        // With the density known off-lattice, gain and loss cancel to quadrature accuracy.
        let grid = VelocityGrid::new(8, 5.0).unwrap();
        let kernel = KernelSpec::for_grid(0.0, &grid).unwrap();
        let density = |v: [f64; 3]| {
            (-(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]) / 2.0).exp() / (2.0 * PI).powf(1.5)
        };
        let targets: Vec<usize> = (0..8).map(|a| grid.index(a, 4, 4)).collect();
        let q = direct_collision_at(&grid, &kernel, density, 8, &targets).unwrap();
        let loss = direct_loss_scale(&grid, &density, &targets);
        for (qi, li) in q.iter().zip(&loss) {
            assert!(qi.abs() < 2e-3 * li, "{qi} vs loss {li}");
        }
    }

    fn direct_loss_scale(grid: &VelocityGrid, density: &impl Fn([f64; 3]) -> f64, targets: &[usize]) -> Vec<f64> {
        let rho: f64 = (0..grid.len())
            .map(|j| density(grid.velocity(j)) * grid.velocity_weights()[j])
            .sum();
        targets.iter().map(|&i| rho * density(grid.velocity(i))).collect()
    }

    #[test]
    fn trilinear_maxwellian_moments_are_small() {
        let grid = VelocityGrid::new(8, 5.0).unwrap();
        let kernel = KernelSpec::for_grid(0.0, &grid).unwrap();
        let f = maxwellian(&grid, 1.0, [0.0; 3], 1.0).unwrap();
        let q = direct_collision_oracle(&grid, &kernel, &f, 6).unwrap();
        let m = compute_moments(&grid, &q);
        let rho = compute_moments(&grid, &f).rho;
        // Interpolation error at dv = 1.25 dominates; relative to the loss-term mass rho^2.
        assert!(m.rho.abs() < 0.05 * rho * rho, "mass {}", m.rho);
    }

    #[test]
    fn rejects_large_grids() {
        let grid = VelocityGrid::new(14, 5.0).unwrap();
        let kernel = KernelSpec::for_grid(0.0, &grid).unwrap();
        assert!(direct_collision_oracle(&grid, &kernel, &vec![0.0; grid.len()], 4).is_err());
    }
}
