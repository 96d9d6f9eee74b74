//! File formats: table CSV/JSON (one row per cell, storage order) and the
//! simulation summary CSV.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DependenceSpec, ModelSpec};
use crate::sample::{mask_cell, ObservedTable};
use crate::table::{ContingencyTable, Factor, MarginSpec, TableShape};

/// Marker used in the `value` column of an observed-table CSV for the
/// unobserved cell.
pub const MISSING_MARKER: &str = "missing";

/// Write a table as CSV: one level-name column per factor, then `value`,
/// rows in storage order.
pub fn write_table_csv<W: Write>(table: &ContingencyTable, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let shape = table.shape();
    let mut header: Vec<&str> = shape.factors().iter().map(|f| f.name.as_str()).collect();
    header.push("value");
    w.write_record(&header).map_err(csv_err)?;
    for (flat, value) in table.cells().iter().enumerate() {
        let multi = shape.multi_index_of(flat);
        let mut record: Vec<String> = multi
            .iter()
            .enumerate()
            .map(|(fi, &lvl)| shape.factors()[fi].levels[lvl].clone())
            .collect();
        record.push(value.to_string());
        w.write_record(&record).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Input(e.to_string()))?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    Error::Input(format!("csv: {e}"))
}

fn parse_table_csv<R: Read>(reader: R) -> Result<(TableShape, Vec<Option<f64>>)> {
    let mut r = csv::Reader::from_reader(reader);
    let header = r.headers().map_err(csv_err)?.clone();
    if header.len() < 3 || header.iter().last() != Some("value") {
        return Err(Error::Input(
            "table CSV needs at least two factor columns and a final `value` column".into(),
        ));
    }
    let factor_names: Vec<String> = header
        .iter()
        .take(header.len() - 1)
        .map(str::to_string)
        .collect();
    let mut rows: Vec<(Vec<String>, Option<f64>)> = Vec::new();
    for record in r.records() {
        let record = record.map_err(csv_err)?;
        if record.len() != header.len() {
            return Err(Error::Input(format!(
                "row {:?} has {} fields, expected {}",
                record,
                record.len(),
                header.len()
            )));
        }
        let levels: Vec<String> = record
            .iter()
            .take(header.len() - 1)
            .map(str::to_string)
            .collect();
        let raw = record.iter().last().unwrap().trim();
        let value = if raw.eq_ignore_ascii_case(MISSING_MARKER) {
            None
        } else {
            Some(raw.parse::<f64>().map_err(|_| {
                Error::Input(format!("cannot parse cell value {raw:?}"))
            })?)
        };
        rows.push((levels, value));
    }
    // level names in order of first appearance define the level indices
    let mut factors: Vec<Factor> = Vec::new();
    for (fi, name) in factor_names.iter().enumerate() {
        let mut levels: Vec<String> = Vec::new();
        for (row_levels, _) in &rows {
            if !levels.contains(&row_levels[fi]) {
                levels.push(row_levels[fi].clone());
            }
        }
        factors.push(Factor::new(name.clone(), levels)?);
    }
    let shape = TableShape::new(factors)?;
    if rows.len() != shape.n_cells() {
        return Err(Error::Input(format!(
            "table CSV has {} rows but the inferred shape has {} cells",
            rows.len(),
            shape.n_cells()
        )));
    }
    let mut cells: Vec<Option<f64>> = vec![None; shape.n_cells()];
    let mut seen = vec![false; shape.n_cells()];
    for (row_levels, value) in &rows {
        let multi: Vec<usize> = row_levels
            .iter()
            .enumerate()
            .map(|(fi, lvl)| {
                shape.factors()[fi]
                    .levels
                    .iter()
                    .position(|l| l == lvl)
                    .unwrap()
            })
            .collect();
        let flat = shape.cell_index(&multi)?;
        if seen[flat] {
            return Err(Error::Input(format!("duplicate cell row for {multi:?}")));
        }
        seen[flat] = true;
        cells[flat] = *value;
    }
    Ok((shape, cells))
}

/// Read a fully observed table CSV.
pub fn read_table_csv<R: Read>(reader: R) -> Result<ContingencyTable> {
    let (shape, cells) = parse_table_csv(reader)?;
    let cells = cells
        .into_iter()
        .collect::<Option<Vec<f64>>>()
        .ok_or_else(|| {
            Error::Input(format!(
                "table contains a `{MISSING_MARKER}` cell; use the observed-table reader"
            ))
        })?;
    ContingencyTable::new(shape, cells)
}

/// Read an observed-table CSV with exactly one `missing` marker row.
/// The masked cell is stored as 0 in the underlying table.
pub fn read_observed_csv<R: Read>(reader: R) -> Result<ObservedTable> {
    let (shape, cells) = parse_table_csv(reader)?;
    let masked: Vec<usize> = cells
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_none())
        .map(|(i, _)| i)
        .collect();
    if masked.len() != 1 {
        return Err(Error::Input(format!(
            "observed table needs exactly one `{MISSING_MARKER}` row, found {}",
            masked.len()
        )));
    }
    let values: Vec<f64> = cells.into_iter().map(|v| v.unwrap_or(0.0)).collect();
    let table = ContingencyTable::new(shape, values)?;
    let multi = table.shape().multi_index_of(masked[0]);
    mask_cell(&table, &multi)
}

#[derive(Serialize, Deserialize)]
struct TableJson {
    shape: TableShape,
    cells: Vec<f64>,
}

pub fn write_table_json<W: Write>(table: &ContingencyTable, writer: W) -> Result<()> {
    let doc = TableJson {
        shape: table.shape().clone(),
        cells: table.cells().to_vec(),
    };
    serde_json::to_writer_pretty(writer, &doc).map_err(|e| Error::Input(e.to_string()))
}

pub fn read_table_json<R: Read>(reader: R) -> Result<ContingencyTable> {
    let doc: TableJson =
        serde_json::from_reader(reader).map_err(|e| Error::Input(e.to_string()))?;
    ContingencyTable::new(doc.shape, doc.cells)
}

/// One scenario × model line of the summary CSV, mirroring the published study
/// result tables.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SummaryRow {
    #[serde(rename = "N")]
    pub n: u64,
    pub margins: String,
    pub odds_ratios: String,
    pub model: String,
    pub mean: f64,
    pub median: f64,
    #[serde(rename = "q2.5")]
    pub q_low: f64,
    #[serde(rename = "q97.5")]
    pub q_high: f64,
    pub rbias_percent: f64,
    pub cv: f64,
    pub failures: usize,
}

pub fn write_summary_csv<W: Write>(rows: &[SummaryRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for row in rows {
        w.serialize(row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Input(e.to_string()))?;
    Ok(())
}

/// Compact margin description, e.g. "A=0.8/B=0.7".
pub fn describe_margins(margins: &MarginSpec) -> String {
    margins
        .factors()
        .iter()
        .map(|(name, probs)| {
            if probs.len() == 2 {
                format!("{name}={}", probs[1])
            } else {
                format!(
                    "{name}=({})",
                    probs
                        .iter()
                        .map(|p| p.to_string())
                        .collect::<Vec<_>>()
                        .join(",")
                )
            }
        })
        .collect::<Vec<_>>()
        .join("/")
}

/// Compact dependence description, e.g. "AB=1.5/AC=2/BC=1".
pub fn describe_dependence(dep: &DependenceSpec) -> String {
    match dep {
        DependenceSpec::Pairwise(specs) if specs.is_empty() => "independence".into(),
        DependenceSpec::Pairwise(specs) => specs
            .iter()
            .map(|or| {
                if or.levels == (1, 1) {
                    format!("{}{}={}", or.factors.0, or.factors.1, or.theta)
                } else {
                    format!(
                        "{}{}[{},{}]={}",
                        or.factors.0, or.factors.1, or.levels.0, or.levels.1, or.theta
                    )
                }
            })
            .collect::<Vec<_>>()
            .join("/"),
        DependenceSpec::Conditional(specs) => specs
            .iter()
            .map(|or| {
                format!(
                    "{}{}|{}={}",
                    or.pair.0, or.pair.1, or.conditioning_level, or.theta
                )
            })
            .collect::<Vec<_>>()
            .join("/"),
    }
}

/// Models as strings, e.g. for labeling summary rows.
pub fn describe_models(models: &[ModelSpec]) -> Vec<String> {
    models.iter().map(|m| m.to_string()).collect()
}
