//! Dual- and triple-system population size estimation: fit a loglinear model
//! to the observed cells and extrapolate the masked cell.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::glm::{fit_poisson, FitResult};
use crate::model::{build_design, ModelSpec};
use crate::sample::ObservedTable;

/// A population size estimate from one observed table and one model.
#[derive(Debug, Clone, Serialize)]
pub struct PopulationEstimate {
    pub missing_cell_estimate: f64,
    pub total_estimate: f64,
    pub model: String,
    #[serde(skip)]
    pub fit: FitResult,
}

/// Fit `model` to the observed cells (the masked row is dropped from design
/// and response) and predict the masked cell by extrapolating the linear
/// predictor. With the all-reference cell masked under corner-point coding
/// this equals exp(intercept).
pub fn estimate_population(
    observed: &ObservedTable,
    model: &ModelSpec,
) -> Result<PopulationEstimate> {
    let shape = observed.table().shape();
    let masked = observed.masked_index();
    if observed.table().shape().multi_index_of(masked).iter().any(|&l| l != 0) {
        return Err(Error::Spec(
            "the masked cell must be the all-reference-levels cell".into(),
        ));
    }
    let n_observed = shape.n_cells() - 1;
    let n_params = model.n_parameters(shape)?;
    if n_params > n_observed {
        return Err(Error::Spec(format!(
            "model {model} has {n_params} parameters but only {n_observed} cells are observed"
        )));
    }
    let all_factors: BTreeSet<String> =
        shape.factors().iter().map(|f| f.name.clone()).collect();
    if model.contains_term(&all_factors) {
        return Err(Error::Spec(format!(
            "model {model} includes the highest-order interaction; it cannot be \
             identified with the all-reference cell unobserved"
        )));
    }

    let design = build_design(shape, model)?;
    let masked_row: Vec<f64> = (0..design.n_cols())
        .map(|c| design.matrix[(masked, c)])
        .collect();
    let masked_offset = design.offset[masked];
    let observed_design = design.drop_rows(&[masked]);
    let y = observed.observed_values();

    let fit = fit_poisson(&y, &observed_design).map_err(|e| match e {
        Error::RankDeficient(msg) => {
            Error::DegenerateSample(format!("observed design is rank deficient: {msg}"))
        }
        other => other,
    })?;

    // An MLE on the boundary (some observed cell fitted as ~0, as when the
    // both-lists cell is empty) shows up as a diverging coefficient; the
    // extrapolation would be astronomically large but formally finite.
    if fit.coefficients.iter().any(|b| b.abs() > 30.0) {
        return Err(Error::DegenerateSample(format!(
            "fit diverged for model {model}: a coefficient exceeds 30 in absolute \
             value, the observed table cannot identify the masked cell"
        )));
    }

    let eta: f64 = masked_row
        .iter()
        .zip(&fit.coefficients)
        .map(|(x, b)| x * b)
        .sum::<f64>()
        + masked_offset;
    let missing = eta.exp();
    if !missing.is_finite() {
        return Err(Error::DegenerateSample(format!(
            "masked-cell prediction overflowed (linear predictor {eta})"
        )));
    }
    Ok(PopulationEstimate {
        missing_cell_estimate: missing,
        total_estimate: observed.observed_sum() + missing,
        model: model.to_string(),
        fit,
    })
}

/// Dual-system closed form: the missing cell is n₁₀ n₀₁ / n₁₁.
///
/// Oracle for [`estimate_population`] with the [A][B] model.
pub fn dual_closed_form(n11: f64, n10: f64, n01: f64) -> Result<f64> {
    if n11 <= 0.0 {
        return Err(Error::DegenerateSample(
            "dual-system estimator undefined: the both-lists cell is zero".into(),
        ));
    }
    Ok(n10 * n01 / n11)
}
