//! Worker pools inside a process and spatial domain decomposition across
//! processes.

mod comm;
mod halo;
mod plan;

use rayon::{ThreadPool, ThreadPoolBuilder};

use crate::error::{Error, Result};

#[cfg(feature = "mpi")]
pub use comm::MpiComm;
pub use comm::{Communicator, LoopbackComm, SoloComm, LOOPBACK_TIMEOUT};
pub use halo::{halo_exchange, TAG_LEFTWARD, TAG_RIGHTWARD};
pub use plan::{plan_decomposition, DecompositionPlan};

/// Tag used when gathering per-cell rows to rank 0.
pub const TAG_GATHER: u32 = 2;

/// Fixed-size team of worker threads for the data-parallel loops.
pub struct WorkerPool {
    pool: ThreadPool,
}

impl WorkerPool {
    pub fn new(workers: usize) -> Result<Self> {
        if workers == 0 {
            return Err(Error::InvalidArgument("worker count must be at least 1".into()));
        }
        let pool = ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("cannot start {workers} workers: {e}")))?;
        Ok(Self { pool })
    }

    pub fn workers(&self) -> usize {
        self.pool.current_num_threads()
    }

    /// Runs `op` with this pool as the current rayon pool.
    pub fn install<R: Send>(&self, op: impl FnOnce() -> R + Send) -> R {
        self.pool.install(op)
    }
}

impl std::fmt::Debug for WorkerPool {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("WorkerPool").field("workers", &self.workers()).finish()
    }
}

/// Leading-order hybrid speedup
/// `C M N^6 T_flop / (4 n N^3 T_mem + C M N^6 T_flop / (n p))`
/// for `n` processes of `p` cores each.
pub fn predict_speedup(
    processes: f64,
    cores: f64,
    n: f64,
    cells: f64,
    t_mem: f64,
    t_flop: f64,
    work: f64,
) -> f64 {
    let compute = work * cells * n.powi(6) * t_flop;
    compute / (4.0 * processes * n.powi(3) * t_mem + compute / (processes * cores))
}

/// Concatenates every rank's `local` rows on rank 0, in rank order.
/// Other ranks return `None`.
pub fn gather_to_root<C: Communicator + ?Sized>(comm: &C, local: &[f64]) -> Result<Option<Vec<f64>>> {
    if comm.rank() != 0 {
        comm.send(0, TAG_GATHER, local)?;
        return Ok(None);
    }
    let mut all = local.to_vec();
    for src in 1..comm.size() {
        all.extend(comm.recv_vec(src, TAG_GATHER)?);
    }
    Ok(Some(all))
}

/// Sends rank 0's `value` to every rank.
pub fn broadcast_from_root<C: Communicator + ?Sized>(comm: &C, value: &mut Vec<f64>) -> Result<()> {
    if comm.rank() == 0 {
        for dest in 1..comm.size() {
            comm.send(dest, TAG_GATHER, value)?;
        }
    } else {
        *value = comm.recv_vec(0, TAG_GATHER)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::thread;

    #[test]
    fn speedup_limits() {
        assert_eq!(predict_speedup(3.0, 8.0, 24.0, 64.0, 0.0, 1e-9, 10.0), 24.0);
        assert_eq!(predict_speedup(1.0, 1.0, 16.0, 10.0, 0.0, 1e-9, 10.0), 1.0);
    }

    #[test]
    fn speedup_regression() {
        // Direct evaluation: compute = 10*64*24^6, comm = 4*2*24^3*100.
        let compute = 10.0 * 64.0 * 24f64.powi(6);
        let expect = compute / (4.0 * 2.0 * 24f64.powi(3) * 100.0 + compute / 32.0);
        let got = predict_speedup(2.0, 16.0, 24.0, 64.0, 100.0, 1.0, 10.0);
        assert_eq!(got, expect);
        assert!((got - SPEEDUP_REGRESSION).abs() < 1e-12 * SPEEDUP_REGRESSION);
    }

    const SPEEDUP_REGRESSION: f64 = 31.907674552798614;

    #[test]
    fn pool_reports_workers() {
        let pool = WorkerPool::new(3).unwrap();
        assert_eq!(pool.workers(), 3);
        assert_eq!(pool.install(rayon::current_num_threads), 3);
        assert!(WorkerPool::new(0).is_err());
    }

    #[test]
    fn gather_and_broadcast() {
        let comms = LoopbackComm::create(3);
        let results: Vec<_> = thread::scope(|s| {
            let handles: Vec<_> = comms
                .into_iter()
                .map(|c| {
                    s.spawn(move || {
                        let r = c.rank() as f64;
                        let gathered = gather_to_root(&c, &[r, r + 0.5]).unwrap();
                        let mut v = if c.rank() == 0 { vec![9.0] } else { Vec::new() };
                        broadcast_from_root(&c, &mut v).unwrap();
                        (gathered, v)
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().unwrap()).collect()
        });
        assert_eq!(results[0].0, Some(vec![0.0, 0.5, 1.0, 1.5, 2.0, 2.5]));
        assert!(results[1].0.is_none());
        for (_, v) in &results {
            assert_eq!(v, &vec![9.0]);
        }
    }
}
