//! Macroscopic fields of a distribution on one spatial cell.
//!
//! Units take the gas constant as 1, so `3 rho T / 2 = rho e - rho |V|^2 / 2`.

use crate::grid::VelocityGrid;

/// Density, momentum, energy and derived fields of one cell.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MomentSet {
    pub rho: f64,
    /// `rho V`
    pub momentum: [f64; 3],
    /// `rho e = 1/2 sum |v|^2 f omega`
    pub energy: f64,
    pub velocity: [f64; 3],
    pub temperature: f64,
    /// `sum f log f omega` over nodes with `f > 0`.
    pub h: f64,
}

impl MomentSet {
    /// True when the density is not positive, so `V` and `T` are undefined
    /// (they are reported as zero).
    pub fn is_degenerate(&self) -> bool {
        !(self.rho > 0.0)
    }
}

/// Trapezoid-rule moments of `f` on the velocity lattice.
pub fn compute_moments(grid: &VelocityGrid, f: &[f64]) -> MomentSet {
    debug_assert_eq!(f.len(), grid.len());
    let w = grid.velocity_weights();
    let mut rho = 0.0;
    let mut mom = [0.0; 3];
    let mut e2 = 0.0;
    let mut h = 0.0;
    for (idx, (&fj, &wj)) in f.iter().zip(w.iter()).enumerate() {
        if fj == 0.0 {
            continue;
        }
        let v = grid.velocity(idx);
        let fw = fj * wj;
        rho += fw;
        mom[0] += v[0] * fw;
        mom[1] += v[1] * fw;
        mom[2] += v[2] * fw;
        e2 += (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]) * fw;
        if fj > 0.0 {
            h += fj * fj.ln() * wj;
        }
    }
    let energy = 0.5 * e2;
    let mut out = MomentSet {
        rho,
        momentum: mom,
        energy,
        h,
        ..MomentSet::default()
    };
    if rho > 0.0 {
        out.velocity = [mom[0] / rho, mom[1] / rho, mom[2] / rho];
        let bulk = out.velocity.iter().map(|x| x * x).sum::<f64>();
        out.temperature = (2.0 * energy / rho - bulk) / 3.0;
    }
    out
}
