//! Timing of single collision evaluations against the worker count.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use crate::collision::CollisionOperator;
use crate::error::{Error, Result};
use crate::parallel::WorkerPool;

/// One line of the timing table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchRow {
    pub cores: usize,
    /// Median seconds per collision evaluation.
    pub time: f64,
    /// Time of the previous row over this one.
    pub ratio: f64,
    /// Time of the first row over this one.
    pub total_speedup: f64,
}

/// Median time of one `collide` call on `f` for each worker count.
pub fn bench_collision(
    operator: &CollisionOperator,
    f: &[f64],
    workers: &[usize],
    repetitions: usize,
) -> Result<Vec<BenchRow>> {
    if workers.is_empty() || repetitions == 0 {
        return Err(Error::InvalidArgument(
            "bench needs at least one worker count and one repetition".into(),
        ));
    }
    let mut rows: Vec<BenchRow> = Vec::with_capacity(workers.len());
    for &w in workers {
        let pool = WorkerPool::new(w)?;
        let mut ws = operator.workspace();
        let mut out = vec![0.0; f.len()];
        let mut times = pool.install(|| -> Result<Vec<f64>> {
            // One untimed call to fault in pages and spin up the pool.
            operator.collide_into(&mut ws, f, 1.0, &mut out)?;
            (0..repetitions)
                .map(|_| {
                    let start = Instant::now();
                    operator.collide_into(&mut ws, f, 1.0, &mut out)?;
                    Ok(start.elapsed().as_secs_f64())
                })
                .collect()
        })?;
        times.sort_by(f64::total_cmp);
        let mid = times.len() / 2;
        let time = if times.len() % 2 == 1 {
            times[mid]
        } else {
            0.5 * (times[mid - 1] + times[mid])
        };
        let (ratio, total_speedup) = match (rows.last(), rows.first()) {
            (Some(prev), Some(first)) => (prev.time / time, first.time / time),
            _ => (1.0, 1.0),
        };
        rows.push(BenchRow {
            cores: w,
            time,
            ratio,
            total_speedup,
        });
    }
    Ok(rows)
}

pub fn format_bench_csv(rows: &[BenchRow]) -> String {
    let mut s = String::from("cores,time,ratio,total_speedup\n");
    for r in rows {
        let _ = writeln!(s, "{},{:.6e},{:.4},{:.4}", r.cores, r.time, r.ratio, r.total_speedup);
    }
    s
}

pub fn write_bench_csv(rows: &[BenchRow], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_bench_csv(rows)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::VelocityGrid;
    use crate::scenarios::maxwellian;
    use crate::weights::{generate_table, KernelSpec};
    use std::sync::Arc;

    fn operator() -> (CollisionOperator, Vec<f64>) {
        let grid = VelocityGrid::new(6, 3.0).unwrap();
        let kernel = KernelSpec::for_grid(1.0, &grid).unwrap();
        let table = Arc::new(generate_table(&grid, &kernel).unwrap());
        let f = maxwellian(&grid, 1.0, [0.2, 0.0, 0.0], 0.6).unwrap();
        (CollisionOperator::new(grid, table).unwrap(), f)
    }

    #[test]
    fn single_worker_row() {
        let (op, f) = operator();
        let rows = bench_collision(&op, &f, &[1], 3).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].cores, 1);
        assert_eq!(rows[0].total_speedup, 1.0);
        assert!(rows[0].time > 0.0);
    }

    #[test]
    fn csv_has_expected_columns() {
        let (op, f) = operator();
        let rows = bench_collision(&op, &f, &[1, 2], 1).unwrap();
        let text = format_bench_csv(&rows);
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        assert_eq!(reader.headers().unwrap(), vec!["cores", "time", "ratio", "total_speedup"]);
        let parsed: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
        assert_eq!(parsed.len(), 2);
        let speedup: f64 = parsed[1][3].parse().unwrap();
        assert!((speedup - rows[0].time / rows[1].time).abs() < 1e-3 * speedup);
    }

    #[test]
    fn empty_request_rejected() {
        let (op, f) = operator();
        assert!(bench_collision(&op, &f, &[], 1).is_err());
        assert!(bench_collision(&op, &f, &[1], 0).is_err());
    }
}
