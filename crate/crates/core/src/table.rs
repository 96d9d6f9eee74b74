//! Multi-way contingency tables: shapes, cell indexing, margins and odds ratios.
//!
//! Cells are stored in lexicographic order of the multi-index with the *last*
//! factor varying fastest. Level 0 of every factor is the reference category.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A named categorical factor with ordered levels. Level 0 is the reference.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Factor {
    pub name: String,
    pub levels: Vec<String>,
}

impl Factor {
    pub fn new(name: impl Into<String>, levels: Vec<String>) -> Result<Self> {
        let name = name.into();
        if levels.len() < 2 {
            return Err(Error::Spec(format!(
                "factor {name} needs at least 2 levels, got {}",
                levels.len()
            )));
        }
        for (i, a) in levels.iter().enumerate() {
            if levels[i + 1..].contains(a) {
                return Err(Error::Spec(format!(
                    "factor {name} has duplicate level name {a:?}"
                )));
            }
        }
        Ok(Factor { name, levels })
    }

    /// Dichotomous list factor: level 0 = "missed", level 1 = "in".
    pub fn binary(name: impl Into<String>) -> Self {
        Factor {
            name: name.into(),
            levels: vec!["missed".into(), "in".into()],
        }
    }

    /// Factor with `k` levels named "0".."k-1".
    pub fn with_level_count(name: impl Into<String>, k: usize) -> Result<Self> {
        Factor::new(name, (0..k).map(|i| i.to_string()).collect())
    }

    pub fn level_count(&self) -> usize {
        self.levels.len()
    }
}

/// The cell index space of a multi-way table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableShape {
    factors: Vec<Factor>,
}

impl TableShape {
    pub fn new(factors: Vec<Factor>) -> Result<Self> {
        if factors.len() < 2 {
            return Err(Error::Spec(format!(
                "a table needs at least 2 factors, got {}",
                factors.len()
            )));
        }
        for (i, f) in factors.iter().enumerate() {
            if factors[i + 1..].iter().any(|g| g.name == f.name) {
                return Err(Error::Spec(format!("duplicate factor name {:?}", f.name)));
            }
        }
        Ok(TableShape { factors })
    }

    /// Shape of dichotomous list factors with the given names.
    pub fn binary(names: &[&str]) -> Result<Self> {
        TableShape::new(names.iter().map(|n| Factor::binary(*n)).collect())
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn n_factors(&self) -> usize {
        self.factors.len()
    }

    pub fn n_cells(&self) -> usize {
        self.factors.iter().map(|f| f.level_count()).product()
    }

    pub fn factor_index(&self, name: &str) -> Result<usize> {
        self.factors
            .iter()
            .position(|f| f.name == name)
            .ok_or_else(|| Error::Spec(format!("unknown factor {name:?}")))
    }

    /// Flat cell index of a multi-index; the last factor varies fastest.
    pub fn cell_index(&self, multi: &[usize]) -> Result<usize> {
        if multi.len() != self.factors.len() {
            return Err(Error::IndexOutOfRange(format!(
                "multi-index has {} entries for {} factors",
                multi.len(),
                self.factors.len()
            )));
        }
        let mut flat = 0;
        for (f, &m) in self.factors.iter().zip(multi) {
            if m >= f.level_count() {
                return Err(Error::IndexOutOfRange(format!(
                    "level {m} out of range for factor {:?} ({} levels)",
                    f.name,
                    f.level_count()
                )));
            }
            flat = flat * f.level_count() + m;
        }
        Ok(flat)
    }

    /// Inverse of [`cell_index`](Self::cell_index).
    pub fn multi_index_of(&self, mut flat: usize) -> Vec<usize> {
        debug_assert!(flat < self.n_cells());
        let mut multi = vec![0; self.factors.len()];
        for i in (0..self.factors.len()).rev() {
            let k = self.factors[i].level_count();
            multi[i] = flat % k;
            flat /= k;
        }
        multi
    }

    /// Iterate all multi-indices in storage order.
    pub fn iter_cells(&self) -> impl Iterator<Item = Vec<usize>> + '_ {
        (0..self.n_cells()).map(|i| self.multi_index_of(i))
    }
}

/// Dense nonnegative cell values (counts or probabilities) over a [`TableShape`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContingencyTable {
    shape: TableShape,
    cells: Vec<f64>,
}

impl ContingencyTable {
    pub fn new(shape: TableShape, cells: Vec<f64>) -> Result<Self> {
        if cells.len() != shape.n_cells() {
            return Err(Error::Input(format!(
                "expected {} cells, got {}",
                shape.n_cells(),
                cells.len()
            )));
        }
        if let Some(v) = cells.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::Input(format!("cell value {v} is negative or non-finite")));
        }
        Ok(ContingencyTable { shape, cells })
    }

    pub fn shape(&self) -> &TableShape {
        &self.shape
    }

    pub fn cells(&self) -> &[f64] {
        &self.cells
    }

    pub fn total(&self) -> f64 {
        self.cells.iter().sum()
    }

    pub fn value(&self, multi: &[usize]) -> Result<f64> {
        Ok(self.cells[self.shape.cell_index(multi)?])
    }

    /// Multiply every cell by `c`.
    pub fn scaled(&self, c: f64) -> ContingencyTable {
        ContingencyTable {
            shape: self.shape.clone(),
            cells: self.cells.iter().map(|v| v * c).collect(),
        }
    }

    /// Sum of all cells whose index on `factor` equals `level`.
    pub fn margin(&self, factor: &str, level: usize) -> Result<f64> {
        let fi = self.shape.factor_index(factor)?;
        if level >= self.shape.factors()[fi].level_count() {
            return Err(Error::IndexOutOfRange(format!(
                "level {level} out of range for factor {factor:?}"
            )));
        }
        let mut sum = 0.0;
        for (flat, v) in self.cells.iter().enumerate() {
            if self.shape.multi_index_of(flat)[fi] == level {
                sum += v;
            }
        }
        Ok(sum)
    }

    /// Marginal totals of `factor` over its levels.
    pub fn margin_distribution(&self, factor: &str) -> Result<Vec<f64>> {
        let fi = self.shape.factor_index(factor)?;
        let mut sums = vec![0.0; self.shape.factors()[fi].level_count()];
        for (flat, v) in self.cells.iter().enumerate() {
            sums[self.shape.multi_index_of(flat)[fi]] += v;
        }
        Ok(sums)
    }

    /// Reference-anchored (conditional) odds ratio.
    ///
    /// Returns (μ_ij μ_00)/(μ_i0 μ_0j) for the 2×2 sub-table formed by levels
    /// {0, i}×{0, j} of the factor pair, within the slice fixed by
    /// `conditioning` (one level per remaining factor).
    pub fn odds_ratio(
        &self,
        pair: (&str, &str),
        levels: (usize, usize),
        conditioning: &[(&str, usize)],
    ) -> Result<f64> {
        let fa = self.shape.factor_index(pair.0)?;
        let fb = self.shape.factor_index(pair.1)?;
        if fa == fb {
            return Err(Error::Spec(format!("odds ratio needs two distinct factors, got {:?}", pair.0)));
        }
        if levels.0 == 0 || levels.1 == 0 {
            return Err(Error::Spec(
                "odds-ratio levels must be non-reference (>= 1)".into(),
            ));
        }
        let mut base = vec![usize::MAX; self.shape.n_factors()];
        for (name, lvl) in conditioning {
            let fi = self.shape.factor_index(name)?;
            if fi == fa || fi == fb {
                return Err(Error::Spec(format!(
                    "conditioning factor {name:?} is part of the odds-ratio pair"
                )));
            }
            base[fi] = *lvl;
        }
        for (fi, slot) in base.iter().enumerate() {
            if fi != fa && fi != fb && *slot == usize::MAX {
                return Err(Error::Spec(format!(
                    "conditioning must fix factor {:?}",
                    self.shape.factors()[fi].name
                )));
            }
        }
        let cell = |la: usize, lb: usize| -> Result<f64> {
            let mut m = base.clone();
            m[fa] = la;
            m[fb] = lb;
            let v = self.value(&m)?;
            if v <= 0.0 {
                return Err(Error::DegenerateTable(format!(
                    "zero cell at {m:?} in odds-ratio sub-table"
                )));
            }
            Ok(v)
        };
        let (i, j) = levels;
        Ok((cell(i, j)? * cell(0, 0)?) / (cell(i, 0)? * cell(0, j)?))
    }
}

/// Prescribed marginal probabilities, one full probability vector per factor.
///
/// Also fixes the factor order and hence the [`TableShape`] of generated tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginSpec {
    factors: Vec<(String, Vec<f64>)>,
}

impl MarginSpec {
    /// Full probability vectors, one per factor, each summing to 1.
    /// Entry 0 is the reference-level probability.
    pub fn new(factors: Vec<(String, Vec<f64>)>) -> Result<Self> {
        if factors.len() < 2 {
            return Err(Error::Spec("need at least 2 factors".into()));
        }
        for (name, probs) in &factors {
            if probs.len() < 2 {
                return Err(Error::Spec(format!(
                    "factor {name:?} needs at least 2 level probabilities"
                )));
            }
            if probs.iter().any(|p| !p.is_finite() || *p <= 0.0 || *p >= 1.0) {
                return Err(Error::Spec(format!(
                    "probabilities of factor {name:?} must lie strictly in (0, 1)"
                )));
            }
            let sum: f64 = probs.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(Error::Spec(format!(
                    "probabilities of factor {name:?} sum to {sum}, expected 1"
                )));
            }
        }
        Ok(MarginSpec { factors })
    }

    /// Dichotomous factors given as (name, P(level 1)).
    pub fn dichotomous(factors: &[(&str, f64)]) -> Result<Self> {
        MarginSpec::new(
            factors
                .iter()
                .map(|(n, p)| (n.to_string(), vec![1.0 - p, *p]))
                .collect(),
        )
    }

    pub fn factors(&self) -> &[(String, Vec<f64>)] {
        &self.factors
    }

    /// The table shape implied by this spec (dichotomous factors get
    /// "missed"/"in" level names, others "0".."k-1").
    pub fn shape(&self) -> Result<TableShape> {
        TableShape::new(
            self.factors
                .iter()
                .map(|(name, probs)| {
                    if probs.len() == 2 {
                        Ok(Factor::binary(name.clone()))
                    } else {
                        Factor::with_level_count(name.clone(), probs.len())
                    }
                })
                .collect::<Result<Vec<_>>>()?,
        )
    }

    /// Level probability of `factor` at `level`.
    pub fn prob(&self, factor_idx: usize, level: usize) -> f64 {
        self.factors[factor_idx].1[level]
    }
}

/// Product table: cell value = `total` × product of per-factor level probabilities.
///
/// All pairwise odds ratios of the result equal 1.
pub fn independence_table(margins: &MarginSpec, total: f64) -> Result<ContingencyTable> {
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::Input(format!("total must be positive, got {total}")));
    }
    let shape = margins.shape()?;
    let cells = shape
        .iter_cells()
        .map(|multi| {
            total
                * multi
                    .iter()
                    .enumerate()
                    .map(|(fi, &lvl)| margins.prob(fi, lvl))
                    .product::<f64>()
        })
        .collect();
    ContingencyTable::new(shape, cells)
}
