//! Strang splitting `T(dt/2) C(dt) T(dt/2)` with Runge-Kutta sub-integrators.

use crate::collision::{CollisionOperator, CollisionWorkspace};
use crate::error::{Error, Result};
use crate::parallel::{Communicator, DecompositionPlan};
use crate::transport::{DistributionField, FluxLedger, Transport};

/// Default Courant number against the fastest lattice speed.
pub const DEFAULT_CFL: f64 = 0.9;

/// Collision stage: `df/dt = (1 / eps) P_N Q~(f, f)`, one cell at a time.
#[derive(Debug, Clone)]
pub struct CollisionStage {
    operator: CollisionOperator,
    epsilon: f64,
}

impl CollisionStage {
    /// `epsilon = inf` disables collisions.
    pub fn new(operator: CollisionOperator, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "Knudsen number must be positive, got {epsilon}"
            )));
        }
        Ok(Self { operator, epsilon })
    }

    pub fn operator(&self) -> &CollisionOperator {
        &self.operator
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn is_active(&self) -> bool {
        self.epsilon.is_finite()
    }

    /// Midpoint RK2 on one cell: `f* = f + dt/2 C(f)`, `f <- f + dt C(f*)`.
    pub fn rk2_cell(&self, ws: &mut StageWorkspace, f: &mut [f64], dt: f64) -> Result<()> {
        if !self.is_active() {
            return Ok(());
        }
        let StageWorkspace { collision, rate, mid } = ws;
        self.operator.collide_into(collision, f, self.epsilon, rate)?;
        for ((m, x), r) in mid.iter_mut().zip(f.iter()).zip(rate.iter()) {
            *m = x + 0.5 * dt * r;
        }
        self.operator.collide_into(collision, mid, self.epsilon, rate)?;
        for (x, r) in f.iter_mut().zip(rate.iter()) {
            *x += dt * r;
        }
        Ok(())
    }

    /// RK2 on every cell of `cells` (consecutive rows of `N^3` values).
    /// `first_cell` labels diagnostics with global indices.
    pub fn rk2_cells(
        &self,
        ws: &mut StageWorkspace,
        cells: &mut [f64],
        dt: f64,
        first_cell: usize,
        step: u64,
    ) -> Result<()> {
        let m = self.operator.grid().len();
        for (j, cell) in cells.chunks_mut(m).enumerate() {
            self.rk2_cell(ws, cell, dt).map_err(|e| match e {
                Error::NonFinite(msg) => Error::NonFinite(format!(
                    "cell {}, step {step}: {msg}",
                    first_cell + j
                )),
                other => other,
            })?;
            if let Some(i) = cell.iter().position(|x| !x.is_finite()) {
                return Err(Error::NonFinite(format!(
                    "cell {}, step {step}: velocity index {i} after collision",
                    first_cell + j
                )));
            }
        }
        Ok(())
    }
}

/// Buffers for one collision stage.
#[derive(Debug, Clone)]
pub struct StageWorkspace {
    collision: CollisionWorkspace,
    rate: Vec<f64>,
    mid: Vec<f64>,
}

impl StageWorkspace {
    pub fn new(operator: &CollisionOperator) -> Self {
        let m = operator.grid().len();
        Self {
            collision: operator.workspace(),
            rate: vec![0.0; m],
            mid: vec![0.0; m],
        }
    }
}

/// Full splitting step for one rank.
#[derive(Debug, Clone)]
pub struct Stepper {
    pub collision: CollisionStage,
    /// `None` for spatially homogeneous runs.
    pub transport: Option<Transport>,
}

impl Stepper {
    /// Largest `dt` such that each transport half-step satisfies CFL at `cfl`.
    pub fn stable_dt(&self, cfl: f64) -> Option<f64> {
        self.transport.as_ref().map(|t| 2.0 * cfl * t.max_stable_dt())
    }

    /// One Strang step from `t` to `t + dt`; wall fluxes accumulate in `ledger`.
    #[allow(clippy::too_many_arguments)]
    pub fn strang_step<C: Communicator + ?Sized>(
        &self,
        comm: &C,
        plan: &DecompositionPlan,
        ws: &mut StageWorkspace,
        field: &mut DistributionField,
        t: f64,
        dt: f64,
        step: u64,
        ledger: &mut FluxLedger,
    ) -> Result<()> {
        if !(dt > 0.0) {
            return Err(Error::InvalidArgument(format!("time step must be positive, got {dt}")));
        }
        let half = 0.5 * dt;
        if let Some(tr) = &self.transport {
            tr.step(comm, plan, field, t, half, ledger)?;
        }
        self.collision
            .rk2_cells(ws, field.interior_data_mut(), dt, plan.cells.start, step)?;
        if let Some(tr) = &self.transport {
            tr.step(comm, plan, field, t + half, half, ledger)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::VelocityGrid;
    use crate::moments::compute_moments;
    use crate::scenarios::{default_mixture, maxwellian, mixture};
    use crate::weights::{generate_table, KernelSpec};
    use std::sync::Arc;

    fn stage(n: usize, l: f64, lambda: f64) -> CollisionStage {
        let grid = VelocityGrid::new(n, l).unwrap();
        let kernel = KernelSpec::for_grid(lambda, &grid).unwrap();
        let table = Arc::new(generate_table(&grid, &kernel).unwrap());
        CollisionStage::new(CollisionOperator::new(grid, table).unwrap(), 1.0).unwrap()
    }

    #[test]
    fn moments_preserved_by_rk2() {
        let st = stage(8, 4.0, 0.0);
        let grid = st.operator().grid().clone();
        let mut f = mixture(&grid, &default_mixture()).unwrap();
        let before = compute_moments(&grid, &f);
        let mut ws = StageWorkspace::new(st.operator());
        st.rk2_cell(&mut ws, &mut f, 0.1).unwrap();
        let after = compute_moments(&grid, &f);
        assert!((after.rho - before.rho).abs() < 1e-12 * before.rho);
        assert!((after.energy - before.energy).abs() < 1e-12 * before.energy);
        for a in 0..3 {
            assert!((after.momentum[a] - before.momentum[a]).abs() < 1e-12 * before.rho);
        }
    }

    #[test]
    fn rk2_is_second_order() {
        // Self-convergence against a dt/16 reference at t = 0.4.
        let st = stage(8, 4.0, 0.0);
        let grid = st.operator().grid().clone();
        let f0 = mixture(&grid, &default_mixture()).unwrap();
        let mut ws = StageWorkspace::new(st.operator());
        let mut run = |steps: usize| {
            let mut f = f0.clone();
            let dt = 0.4 / steps as f64;
            for _ in 0..steps {
                st.rk2_cell(&mut ws, &mut f, dt).unwrap();
            }
            f
        };
        let reference = run(64);
        let err = |f: Vec<f64>| -> f64 {
            f.iter().zip(&reference).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
        };
        let coarse = err(run(4));
        let fine = err(run(8));
        let ratio = coarse / fine;
        assert!((3.2..=4.8).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn infinite_knudsen_disables_collisions() {
        let grid = VelocityGrid::new(6, 3.0).unwrap();
        let kernel = KernelSpec::for_grid(1.0, &grid).unwrap();
        let table = Arc::new(generate_table(&grid, &kernel).unwrap());
        let st = CollisionStage::new(CollisionOperator::new(grid.clone(), table).unwrap(), f64::INFINITY).unwrap();
        let mut f = maxwellian(&grid, 1.0, [0.5, 0.0, 0.0], 0.4).unwrap();
        let before = f.clone();
        let mut ws = StageWorkspace::new(st.operator());
        st.rk2_cell(&mut ws, &mut f, 1.0).unwrap();
        assert_eq!(f, before);
        assert!(CollisionStage::new(st.operator().clone(), 0.0).is_err());
    }
}
