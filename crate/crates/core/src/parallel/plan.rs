use std::ops::Range;

use crate::error::{Error, Result};

/// One rank's share of the spatial cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecompositionPlan {
    pub size: usize,
    pub rank: usize,
    /// Global indices of the interior cells owned by this rank.
    pub cells: Range<usize>,
    pub left: Option<usize>,
    pub right: Option<usize>,
}

impl DecompositionPlan {
    pub fn n_local(&self) -> usize {
        self.cells.len()
    }

    pub fn owns_left_boundary(&self) -> bool {
        self.left.is_none()
    }

    pub fn owns_right_boundary(&self) -> bool {
        self.right.is_none()
    }
}

/// Contiguous balanced split of `total_cells` over `size` ranks; the first
/// `total_cells % size` ranks take one extra cell.
pub fn plan_decomposition(total_cells: usize, size: usize) -> Result<Vec<DecompositionPlan>> {
    if size == 0 {
        return Err(Error::Decomposition("process count must be at least 1".into()));
    }
    if total_cells < size {
        return Err(Error::Decomposition(format!(
            "{size} processes for {total_cells} cells: every rank needs at least one cell"
        )));
    }
    let base = total_cells / size;
    let extra = total_cells % size;
    let mut start = 0;
    let plans = (0..size)
        .map(|rank| {
            let len = base + usize::from(rank < extra);
            let cells = start..start + len;
            start += len;
            DecompositionPlan {
                size,
                rank,
                cells,
                left: rank.checked_sub(1),
                right: (rank + 1 < size).then_some(rank + 1),
            }
        })
        .collect();
    Ok(plans)
}
