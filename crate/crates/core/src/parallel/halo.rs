//! Interleaved two-cell ghost exchange between neighboring ranks.
//!
//! Even ranks lead with sends to the right while odd ranks lead with receives
//! from the left, then the roles alternate, so every synchronous send meets a
//! posted receive. Physical domain ends are not touched here.

use super::comm::Communicator;
use super::plan::DecompositionPlan;
use crate::error::{Error, Result};
use crate::transport::{DistributionField, GHOSTS};

/// Tag for data moving to the right (filling left ghosts of the receiver).
pub const TAG_RIGHTWARD: u32 = 0;
/// Tag for data moving to the left.
pub const TAG_LEFTWARD: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Transfer {
    SendRight(usize),
    RecvLeft(usize),
    SendLeft(usize),
    RecvRight(usize),
}

/// The eight transfers of one exchange in execution order, as storage indices.
fn schedule(rank: usize, n_local: usize) -> [Transfer; 8] {
    use Transfer::*;
    let nx = n_local;
    if rank % 2 == 0 {
        [
            SendRight(nx + 1),
            RecvLeft(1),
            SendRight(nx),
            RecvLeft(0),
            SendLeft(2),
            RecvRight(nx + 2),
            SendLeft(3),
            RecvRight(nx + 3),
        ]
    } else {
        [
            RecvLeft(1),
            SendRight(nx + 1),
            RecvLeft(0),
            SendRight(nx),
            RecvRight(nx + 2),
            SendLeft(2),
            RecvRight(nx + 3),
            SendLeft(3),
        ]
    }
}

/// Fills ghosts shared with neighbor ranks.
///
/// Afterwards the two left ghosts hold the left neighbor's two rightmost
/// interior cells and symmetrically on the right. With one rank this is a
/// no-op.
pub fn halo_exchange<C: Communicator + ?Sized>(
    comm: &C,
    plan: &DecompositionPlan,
    field: &mut DistributionField,
) -> Result<()> {
    if plan.left.is_none() && plan.right.is_none() {
        return Ok(());
    }
    if field.n_local() != plan.n_local() || field.n_local() < GHOSTS {
        return Err(Error::Decomposition(format!(
            "rank {} field has {} interior cells, plan has {} (need at least {GHOSTS})",
            plan.rank,
            field.n_local(),
            plan.n_local()
        )));
    }
    let wrap = |phase: usize, e: Error| match e {
        Error::Communication { rank, phase: p, reason } => Error::Communication {
            rank,
            phase: format!("halo phase {phase}, {p}"),
            reason,
        },
        other => other,
    };
    for (phase, op) in schedule(plan.rank, field.n_local()).into_iter().enumerate() {
        let result = match op {
            Transfer::SendRight(s) => match plan.right {
                Some(r) => comm.send(r, TAG_RIGHTWARD, field.cell(s)),
                None => Ok(()),
            },
            Transfer::RecvLeft(s) => match plan.left {
                Some(l) => comm.recv(l, TAG_RIGHTWARD, field.cell_mut(s)),
                None => Ok(()),
            },
            Transfer::SendLeft(s) => match plan.left {
                Some(l) => comm.send(l, TAG_LEFTWARD, field.cell(s)),
                None => Ok(()),
            },
            Transfer::RecvRight(s) => match plan.right {
                Some(r) => comm.recv(r, TAG_LEFTWARD, field.cell_mut(s)),
                None => Ok(()),
            },
        };
        result.map_err(|e| wrap(phase + 1, e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parallel::comm::LoopbackComm;
    use crate::parallel::plan::plan_decomposition;
    use std::thread;

    fn run_ranks(total: usize, size: usize, cell_len: usize, value: impl Fn(usize, usize) -> f64 + Sync) -> Vec<DistributionField> {
        let plans = plan_decomposition(total, size).unwrap();
        let comms = LoopbackComm::create(size);
        thread::scope(|s| {
            let handles: Vec<_> = comms
                .into_iter()
                .zip(plans)
                .map(|(comm, plan)| {
                    let value = &value;
                    s.spawn(move || {
                        let start = plan.cells.start;
                        let mut field = DistributionField::from_cells(cell_len, plan.n_local(), |j| {
                            (0..cell_len).map(|k| value(start + j, k)).collect()
                        })
                        .unwrap();
                        halo_exchange(&comm, &plan, &mut field).unwrap();
                        field
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().unwrap()).collect()
        })
    }

    #[test]
    fn schedule_matches_between_neighbors() {
        // Every send in one rank's schedule has the matching receive at the
        // same position in the neighbor's opposite-parity schedule order.
        let even = schedule(0, 5);
        let odd = schedule(1, 4);
        let sends_right: Vec<usize> = even
            .iter()
            .filter_map(|t| matches!(t, Transfer::SendRight(_)).then_some(0))
            .collect();
        assert_eq!(sends_right.len(), 2);
        assert!(matches!(odd[0], Transfer::RecvLeft(1)));
    }

    #[test]
    fn single_rank_sends_nothing() {
        let fields = run_ranks(6, 1, 3, |g, _| g as f64);
        assert_eq!(fields[0].cell(0), &[0.0; 3]);
        assert_eq!(fields[0].cell(8), &[0.0; 3]);
        assert_eq!(fields[0].cell(9), &[0.0; 3]);
    }

    #[test]
    fn two_ranks_receive_neighbor_edges() {
        let fields = run_ranks(10, 2, 2, |g, _| g as f64);
        // rank 0 owns 0..5: right ghosts are cells 5 and 6
        assert_eq!(fields[0].cell(7), &[5.0, 5.0]);
        assert_eq!(fields[0].cell(8), &[6.0, 6.0]);
        // rank 1 owns 5..10: left ghosts are cells 3 and 4
        assert_eq!(fields[1].cell(0), &[3.0, 3.0]);
        assert_eq!(fields[1].cell(1), &[4.0, 4.0]);
    }

    #[test]
    fn many_ranks_match_global_neighbors() {
        for size in [3, 4, 5] {
            let total = 13;
            let value = |g: usize, k: usize| (g * 10 + k) as f64;
            let fields = run_ranks(total, size, 4, value);
            let plans = plan_decomposition(total, size).unwrap();
            for (field, plan) in fields.iter().zip(&plans) {
                for s in 0..field.storage_len() {
                    let g = plan.cells.start as isize + s as isize - GHOSTS as isize;
                    let interior = (GHOSTS..GHOSTS + plan.n_local()).contains(&s);
                    let physical = g < 0 || g >= total as isize;
                    if interior || !physical {
                        let expect: Vec<f64> = (0..4).map(|k| value(g as usize, k)).collect();
                        assert_eq!(field.cell(s), &expect[..], "size {size} rank {} s {s}", plan.rank);
                    }
                }
            }
        }
    }

    #[test]
    fn too_few_cells_rejected() {
        let plans = plan_decomposition(3, 2).unwrap();
        let comms = LoopbackComm::create(2);
        let mut field = DistributionField::zeros(1, 1);
        assert!(halo_exchange(&comms[1], &plans[1], &mut field).is_err());
    }
}
