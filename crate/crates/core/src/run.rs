//! Runs a configured simulation and collects its record on rank 0.

use std::path::Path;
use std::sync::Arc;
use std::thread;
use std::time::Instant;

use crate::collision::CollisionOperator;
use crate::config::{Backend, SolverConfig};
use crate::error::{Error, Result};
use crate::grid::VelocityGrid;
use crate::moments::compute_moments;
use crate::output::{
    write_ledger_csv, write_marginal_csv, write_moment_csv, LedgerRow, MarginalRow, MomentRow,
};
use crate::parallel::{gather_to_root, plan_decomposition, Communicator, LoopbackComm, SoloComm, WorkerPool};
use crate::scenarios::{marginal_distribution, Scenario};
use crate::timestepper::{CollisionStage, StageWorkspace, Stepper};
use crate::transport::{DistributionField, FluxLedger, Transport};
use crate::weights::{generate_table_with, load_table, save_table, WeightTable};

/// Everything rank 0 knows after a run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    /// Config text that reproduces this run.
    pub config_echo: String,
    pub moments: Vec<MomentRow>,
    pub marginals: Vec<MarginalRow>,
    pub ledger: Vec<LedgerRow>,
    /// Wall time of every step on rank 0.
    pub step_seconds: Vec<f64>,
    pub workers: usize,
    pub ranks: usize,
    pub steps: u64,
    pub dt: f64,
    /// Interior values of every cell at the end time, cell-major.
    pub final_state: Vec<f64>,
}

impl RunRecord {
    /// Output times in order.
    pub fn times(&self) -> Vec<f64> {
        self.ledger.iter().map(|r| r.t).collect()
    }

    /// Moment rows at output number `k`.
    pub fn moments_at(&self, k: usize) -> &[MomentRow] {
        let cells = self.moments.len() / self.ledger.len().max(1);
        &self.moments[k * cells..(k + 1) * cells]
    }

    pub fn mean_step_seconds(&self) -> f64 {
        if self.step_seconds.is_empty() {
            return 0.0;
        }
        self.step_seconds.iter().sum::<f64>() / self.step_seconds.len() as f64
    }

    /// Largest `|mass residual|` over all output times.
    pub fn max_mass_residual(&self) -> f64 {
        self.ledger.iter().map(|r| r.mass_residual.abs()).fold(0.0, f64::max)
    }

    /// Writes `moments.csv`, `marginals.csv`, `ledger.csv` and `run.txt` into `dir`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_moment_csv(&self.moments, dir.join("moments.csv"))?;
        write_marginal_csv(&self.marginals, dir.join("marginals.csv"))?;
        write_ledger_csv(&self.ledger, dir.join("ledger.csv"))?;
        let summary = format!(
            "{}# workers = {}\n# ranks = {}\n# steps = {}\n# dt = {:?}\n# mean_step_seconds = {:e}\n# max_mass_residual = {:e}\n",
            self.config_echo,
            self.workers,
            self.ranks,
            self.steps,
            self.dt,
            self.mean_step_seconds(),
            self.max_mass_residual()
        );
        let path = dir.join("run.txt");
        std::fs::write(&path, summary).map_err(|e| Error::io(path, e))
    }
}

/// Loads the weight table from `config.weight_cache` if the file exists,
/// otherwise generates it (and saves it there when a path is set).
pub fn obtain_table(config: &SolverConfig) -> Result<WeightTable> {
    let grid = config.velocity_grid()?;
    let kernel = config.kernel()?;
    if let Some(path) = &config.weight_cache {
        if path.exists() {
            log::info!("loading weights from {}", path.display());
            return load_table(path, &grid, &kernel, config.quadrature_nodes);
        }
    }
    log::info!("generating weights for N = {}, L = {}", grid.n(), grid.half_width());
    let pool = WorkerPool::new(config.workers)?;
    let table = pool.install(|| generate_table_with(&grid, &kernel, config.quadrature_nodes))?;
    if let Some(path) = &config.weight_cache {
        save_table(&table, path)?;
    }
    Ok(table)
}

/// A configured run with its weight table.
#[derive(Debug, Clone)]
pub struct Simulation {
    config: SolverConfig,
    scenario: Scenario,
    grid: VelocityGrid,
    table: Arc<WeightTable>,
}

/// Values per cell in the gathered totals.
const TOTALS: usize = 5;

impl Simulation {
    pub fn new(config: SolverConfig) -> Result<Self> {
        let table = Arc::new(obtain_table(&config)?);
        Self::with_table(config, table)
    }

    pub fn with_table(config: SolverConfig, table: Arc<WeightTable>) -> Result<Self> {
        let grid = config.velocity_grid()?;
        let scenario = config.scenario()?;
        if !table.matches_grid(&grid) || *table.kernel() != config.kernel()? {
            return Err(Error::InvalidArgument(
                "weight table does not match the configured grid and kernel".into(),
            ));
        }
        Ok(Self {
            config,
            scenario,
            grid,
            table,
        })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn table(&self) -> &Arc<WeightTable> {
        &self.table
    }

    pub fn cells(&self) -> usize {
        self.scenario.spatial.as_ref().map_or(1, |s| s.len())
    }

    /// Runs on the configured backend. Ranks other than 0 return `None`.
    pub fn run(&self) -> Result<Option<RunRecord>> {
        match self.config.backend {
            Backend::Solo => self.run_on(&SoloComm),
            Backend::Loopback => self.run_loopback(self.config.ranks).map(Some),
            Backend::Mpi => self.run_mpi(),
        }
    }

    #[cfg(feature = "mpi")]
    fn run_mpi(&self) -> Result<Option<RunRecord>> {
        use mpi::Threading;
        let startup = |reason: String| Error::Communication {
            rank: 0,
            phase: "startup".into(),
            reason,
        };
        let (universe, level) = mpi::initialize_with_threading(Threading::Serialized)
            .ok_or_else(|| startup("MPI already initialized".into()))?;
        if level < Threading::Serialized {
            return Err(startup(format!("MPI provides only {level:?} threading")));
        }
        let comm = crate::parallel::MpiComm::new(&universe);
        self.run_on(&comm)
    }

    #[cfg(not(feature = "mpi"))]
    fn run_mpi(&self) -> Result<Option<RunRecord>> {
        Err(Error::InvalidArgument("this build has no MPI support".into()))
    }

    /// Runs `ranks` in-process ranks on threads and returns rank 0's record.
    pub fn run_loopback(&self, ranks: usize) -> Result<RunRecord> {
        let comms = LoopbackComm::create(ranks);
        let results: Vec<Result<Option<RunRecord>>> = thread::scope(|s| {
            let handles: Vec<_> = comms
                .into_iter()
                .map(|comm| s.spawn(move || self.run_on(&comm)))
                .collect();
            handles
                .into_iter()
                .map(|h| {
                    h.join().unwrap_or_else(|_| {
                        Err(Error::InvalidArgument("a loopback rank panicked".into()))
                    })
                })
                .collect()
        });
        let mut record = None;
        for r in results {
            if let Some(rec) = r? {
                record = Some(rec);
            }
        }
        record.ok_or_else(|| Error::InvalidArgument("rank 0 produced no record".into()))
    }

    /// Runs this rank's share of the simulation.
    pub fn run_on<C: Communicator + ?Sized>(&self, comm: &C) -> Result<Option<RunRecord>> {
        let pool = WorkerPool::new(self.config.workers)?;
        pool.install(|| self.run_rank(comm, pool.workers()))
    }

    fn run_rank<C: Communicator + ?Sized>(&self, comm: &C, workers: usize) -> Result<Option<RunRecord>> {
        let grid = &self.grid;
        let m = grid.len();
        let cells = self.cells();
        let plan = plan_decomposition(cells, comm.size())?
            .into_iter()
            .nth(comm.rank())
            .ok_or_else(|| Error::Decomposition(format!("rank {} outside the plan", comm.rank())))?;
        let operator = CollisionOperator::new(grid.clone(), Arc::clone(&self.table))?;
        let collision = CollisionStage::new(operator, self.scenario.epsilon)?;
        let transport = match &self.scenario.spatial {
            Some(spatial) => Some(Transport::new(
                grid.clone(),
                spatial,
                &plan,
                self.scenario.left,
                self.scenario.right,
            )?),
            None => {
                if comm.size() != 1 {
                    return Err(Error::Decomposition(
                        "homogeneous runs have one cell and need exactly one rank".into(),
                    ));
                }
                None
            }
        };
        let stepper = Stepper { collision, transport };
        let initial = self.scenario.initial.sample(grid)?;
        let mut field = DistributionField::from_cells(m, plan.n_local(), |_| initial.clone())?;
        let mut ws = StageWorkspace::new(stepper.collision.operator());

        let dt_max = match self.config.dt {
            Some(dt) => dt,
            None => stepper.stable_dt(self.config.cfl).ok_or_else(|| {
                Error::InvalidArgument("homogeneous runs need an explicit dt".into())
            })?,
        };
        let steps = (self.config.end_time / dt_max * (1.0 - 1e-12)).ceil().max(1.0) as u64;
        let dt = self.config.end_time / steps as f64;

        let mut ledger: FluxLedger = [0.0; 5];
        let mut collected = Collected::default();
        let mut step_seconds = Vec::new();
        let mut initial_mass = None;
        self.output(comm, &plan, stepper.transport.as_ref(), &field, 0.0, &ledger, 0.0, &mut initial_mass, &mut collected)?;
        for step in 1..=steps {
            let t = (step - 1) as f64 * dt;
            let start = Instant::now();
            stepper.strang_step(comm, &plan, &mut ws, &mut field, t, dt, step, &mut ledger)?;
            let elapsed = start.elapsed().as_secs_f64();
            step_seconds.push(elapsed);
            if step % self.config.output_interval == 0 || step == steps {
                let t_out = step as f64 * dt;
                self.output(comm, &plan, stepper.transport.as_ref(), &field, t_out, &ledger, elapsed, &mut initial_mass, &mut collected)?;
            }
        }
        let final_state = gather_to_root(comm, field.interior_data())?;
        if comm.rank() != 0 {
            return Ok(None);
        }
        Ok(Some(RunRecord {
            config_echo: self.config.echo(),
            moments: collected.moments,
            marginals: collected.marginals,
            ledger: collected.ledger,
            step_seconds,
            workers,
            ranks: comm.size(),
            steps,
            dt,
            final_state: final_state.unwrap_or_default(),
        }))
    }

    /// Gathers one output time onto rank 0.
    #[allow(clippy::too_many_arguments)]
    fn output<C: Communicator + ?Sized>(
        &self,
        comm: &C,
        plan: &crate::parallel::DecompositionPlan,
        transport: Option<&Transport>,
        field: &DistributionField,
        t: f64,
        ledger: &FluxLedger,
        step_seconds: f64,
        initial_mass: &mut Option<f64>,
        collected: &mut Collected,
    ) -> Result<()> {
        let grid = &self.grid;
        let n_local = field.n_local();
        let mut moment_rows = Vec::with_capacity(n_local * MomentRow::WIDTH);
        let mut marginal_rows = Vec::new();
        let mut totals = Vec::with_capacity(n_local * TOTALS);
        let cell_totals = transport.map(|tr| tr.cell_totals(field));
        for j in 0..n_local {
            let global = plan.cells.start + j;
            let f = field.interior(j);
            let mo = compute_moments(grid, f);
            let (x, dx) = match transport {
                Some(tr) => (tr.center(j), tr.width(j)),
                None => (0.0, 1.0),
            };
            let row = MomentRow {
                t,
                x_center: x,
                dx,
                rho: mo.rho,
                v1: mo.velocity[0],
                temperature: mo.temperature,
                h: mo.h,
            };
            moment_rows.extend(row.to_array());
            if self.config.marginal_cells.contains(&global) {
                let g = marginal_distribution(grid, f);
                for (v1, gk) in grid.nodes().iter().zip(g) {
                    marginal_rows.extend(
                        MarginalRow {
                            t,
                            cell_index: global,
                            v1: *v1,
                            g: gk,
                        }
                        .to_array(),
                    );
                }
            }
            match &cell_totals {
                Some(ct) => totals.extend(ct[j]),
                None => totals.extend([mo.rho, mo.momentum[0], mo.momentum[1], mo.momentum[2], mo.energy]),
            }
        }
        let mut packed = vec![n_local as f64, (marginal_rows.len() / MarginalRow::WIDTH) as f64];
        packed.extend(moment_rows);
        packed.extend(marginal_rows);
        packed.extend(totals);
        packed.extend(ledger.iter());

        // Every rank's payload, in rank order, back to back.
        let Some(all) = gather_to_root(comm, &packed)? else {
            return Ok(());
        };
        let mut pos = 0;
        let mut sum = [0.0; TOTALS];
        let mut inflow = [0.0; 5];
        let mut marginals = Vec::new();
        for _ in 0..comm.size() {
            let n = all[pos] as usize;
            let g = all[pos + 1] as usize;
            pos += 2;
            for r in all[pos..pos + n * MomentRow::WIDTH].chunks(MomentRow::WIDTH) {
                collected.moments.push(MomentRow::from_slice(r));
            }
            pos += n * MomentRow::WIDTH;
            for r in all[pos..pos + g * MarginalRow::WIDTH].chunks(MarginalRow::WIDTH) {
                marginals.push(MarginalRow::from_slice(r));
            }
            pos += g * MarginalRow::WIDTH;
            for c in all[pos..pos + n * TOTALS].chunks(TOTALS) {
                for a in 0..TOTALS {
                    sum[a] += c[a];
                }
            }
            pos += n * TOTALS;
            for a in 0..5 {
                inflow[a] += all[pos + a];
            }
            pos += 5;
        }
        // Marginals in the configured cell order.
        for &cell in &self.config.marginal_cells {
            collected.marginals.extend(marginals.iter().filter(|r| r.cell_index == cell));
        }
        let mass0 = *initial_mass.get_or_insert(sum[0]);
        let scale = if mass0 != 0.0 { mass0 } else { 1.0 };
        collected.ledger.push(LedgerRow {
            t,
            mass: sum[0],
            momentum1: sum[1],
            energy: sum[4],
            inflow_mass: inflow[0],
            inflow_momentum1: inflow[1],
            inflow_energy: inflow[4],
            mass_residual: (sum[0] - mass0 - inflow[0]) / scale,
            step_seconds,
        });
        Ok(())
    }
}

#[derive(Debug, Default)]
struct Collected {
    moments: Vec<MomentRow>,
    marginals: Vec<MarginalRow>,
    ledger: Vec<LedgerRow>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    fn small_wall(extra: &str) -> Simulation {
        let text = format!(
            "N=6\nL=4\nlambda=1\nscenario=sudden_heating\ndomain_length=3\nfine_length=1\nfine_per_mfp=4\nend_time=0.4\noutput_interval=2\n{extra}"
        );
        Simulation::new(parse_config(&text).unwrap()).unwrap()
    }

    #[test]
    fn homogeneous_run_has_constant_x_and_conserves() {
        let c = parse_config("N=6\nL=4\nlambda=0\nscenario=relaxation\ndt=0.1\nend_time=0.2\noutput_interval=1").unwrap();
        let rec = Simulation::new(c).unwrap().run().unwrap().unwrap();
        assert_eq!(rec.steps, 2);
        assert_eq!(rec.moments.len(), 3);
        assert!(rec.moments.iter().all(|r| r.x_center == 0.0 && r.dx == 1.0));
        assert_eq!(rec.marginals.len(), 3 * 6);
        assert!(rec.max_mass_residual() < 1e-13);
    }

    #[test]
    fn wall_run_balances_mass() {
        let sim = small_wall("");
        let rec = sim.run().unwrap().unwrap();
        let cells = sim.cells();
        assert_eq!(cells, 8);
        assert_eq!(rec.moments.len(), rec.ledger.len() * cells);
        assert_eq!(rec.final_state.len(), cells * 216);
        assert!(rec.max_mass_residual() < 1e-12, "{}", rec.max_mass_residual());
        assert_eq!(*rec.times().last().unwrap(), 0.4);
    }

    #[test]
    fn loopback_matches_solo_bitwise() {
        let solo = small_wall("").run().unwrap().unwrap();
        let split = small_wall("backend=loopback\nranks=3").run().unwrap().unwrap();
        assert_eq!(solo.final_state, split.final_state);
        assert_eq!(solo.moments, split.moments);
        assert_eq!(solo.marginals, split.marginals);
    }

    #[test]
    fn record_writes_files() {
        let rec = small_wall("").run().unwrap().unwrap();
        let dir = tempfile::tempdir().unwrap();
        rec.write(dir.path()).unwrap();
        let back = crate::output::read_moment_csv(dir.path().join("moments.csv")).unwrap();
        assert_eq!(back, rec.moments);
        let echo = std::fs::read_to_string(dir.path().join("run.txt")).unwrap();
        let again = parse_config(&echo).unwrap();
        assert_eq!(again.echo(), rec.config_echo);
    }

    #[test]
    fn weight_cache_is_reused() {
        let dir = tempfile::tempdir().unwrap();
        let cache = dir.path().join("w.bin");
        let text = format!("N=6\nL=4\nlambda=0\nscenario=relaxation\nweight_cache={}", cache.display());
        let c = parse_config(&text).unwrap();
        let first = obtain_table(&c).unwrap();
        assert!(cache.exists());
        let second = obtain_table(&c).unwrap();
        assert_eq!(first, second);
    }
}
