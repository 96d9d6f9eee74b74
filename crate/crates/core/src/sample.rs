//! Seeded multinomial sampling and masking of the unobserved cell.
//!
//! The RNG is ChaCha8 seeded from a 64-bit integer; the multinomial draw is a
//! chain of conditional binomials. Both are fixed project-wide so identical
//! (probs, n, seed) inputs reproduce identical counts on every platform.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{Error, Result};
use crate::table::ContingencyTable;

/// Draw one multinomial sample of size `n` from a probability table.
/// Counts always sum to exactly `n`.
pub fn sample_multinomial(
    probs: &ContingencyTable,
    n: u64,
    seed: u64,
) -> Result<ContingencyTable> {
    if n == 0 {
        return Err(Error::Input("sample size must be at least 1".into()));
    }
    let total = probs.total();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Input(format!(
            "probabilities sum to {total}, expected 1"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cells = probs.cells();
    let mut counts = vec![0.0; cells.len()];
    let mut remaining = n;
    let mut mass_left = total;
    for (i, &p) in cells.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if i + 1 == cells.len() {
            counts[i] = remaining as f64;
            remaining = 0;
            break;
        }
        let cond = if mass_left > 0.0 {
            (p / mass_left).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let draw = if cond >= 1.0 {
            remaining
        } else if cond <= 0.0 {
            0
        } else {
            Binomial::new(remaining, cond)
                .map_err(|e| Error::Input(format!("binomial draw failed: {e}")))?
                .sample(&mut rng)
        };
        counts[i] = draw as f64;
        remaining -= draw;
        mass_left -= p;
    }
    if remaining > 0 {
        *counts.last_mut().unwrap() += remaining as f64;
    }
    ContingencyTable::new(probs.shape().clone(), counts)
}

/// A contingency table with one designated unobserved cell.
#[derive(Debug, Clone)]
pub struct ObservedTable {
    table: ContingencyTable,
    masked_flat: usize,
}

impl ObservedTable {
    pub fn table(&self) -> &ContingencyTable {
        &self.table
    }

    /// Flat index of the masked cell.
    pub fn masked_index(&self) -> usize {
        self.masked_flat
    }

    /// Sum over the observed (unmasked) cells.
    pub fn observed_sum(&self) -> f64 {
        self.table
            .cells()
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != self.masked_flat)
            .map(|(_, v)| v)
            .sum()
    }

    /// Observed cell values in storage order, masked cell excluded.
    pub fn observed_values(&self) -> Vec<f64> {
        self.table
            .cells()
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != self.masked_flat)
            .map(|(_, v)| *v)
            .collect()
    }
}

/// Mark one cell of a table as unobserved; downstream fits exclude that row.
pub fn mask_cell(table: &ContingencyTable, multi: &[usize]) -> Result<ObservedTable> {
    let masked_flat = table.shape().cell_index(multi)?;
    Ok(ObservedTable {
        table: table.clone(),
        masked_flat,
    })
}

/// Mask the all-reference-levels cell (the cell missed by every list).
pub fn mask_reference_cell(table: &ContingencyTable) -> ObservedTable {
    ObservedTable {
        table: table.clone(),
        masked_flat: 0,
    }
}
