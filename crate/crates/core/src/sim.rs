//! Monte Carlo studies of dual/triple-system estimators: generate a
//! population table, draw seeded multinomial replicates, mask the
//! all-reference cell, estimate under each model and summarize.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generate::generate;
use crate::model::{DependenceSpec, ModelSpec};
use crate::sample::{mask_reference_cell, sample_multinomial};
use crate::table::MarginSpec;

/// Which denominator the coefficient of variation uses. `Mean` matches the
/// reference computation (sd/mean); `TrueN` is sd/N.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CvDenominator {
    #[default]
    Mean,
    TrueN,
}

/// One simulation scenario.
#[derive(Debug, Clone)]
pub struct SimulationConfig {
    pub margins: MarginSpec,
    pub dependence: DependenceSpec,
    pub population_size: u64,
    pub replicates: usize,
    pub models: Vec<ModelSpec>,
    pub base_seed: u64,
    pub cv_denominator: CvDenominator,
    pub generator_scale: f64,
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::Spec("replicates must be at least 1".into()));
        }
        if self.population_size == 0 {
            return Err(Error::Spec("population size must be at least 1".into()));
        }
        if self.models.is_empty() {
            return Err(Error::Spec("at least one model is required".into()));
        }
        Ok(())
    }
}

/// Summary statistics of the total-population estimates under one model.
#[derive(Debug, Clone, Serialize)]
pub struct ModelSummary {
    pub model: String,
    pub mean: f64,
    pub median: f64,
    pub quantile_low: f64,
    pub quantile_high: f64,
    pub sd: f64,
    pub relative_bias_percent: f64,
    pub coefficient_of_variation: f64,
    pub failed_replicate_count: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulationSummary {
    pub population_size: u64,
    pub replicates: usize,
    pub per_model: Vec<ModelSummary>,
}

/// Linear-interpolation (type 7) quantile of a sorted sample.
fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = p * (n - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Mean, median, 2.5%/97.5% quantiles, sd (n−1), relative bias % and CV of a
/// vector of total-population estimates.
pub fn summarize(
    estimates: &[f64],
    population_size: u64,
    cv_denominator: CvDenominator,
) -> Result<ModelSummary> {
    if estimates.is_empty() {
        return Err(Error::Input("no estimates to summarize".into()));
    }
    let n = estimates.len() as f64;
    let mean = estimates.iter().sum::<f64>() / n;
    let sd = if estimates.len() < 2 {
        0.0
    } else {
        (estimates.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    let mut sorted = estimates.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let true_n = population_size as f64;
    let cv_denom = match cv_denominator {
        CvDenominator::Mean => mean,
        CvDenominator::TrueN => true_n,
    };
    Ok(ModelSummary {
        model: String::new(),
        mean,
        median: quantile_sorted(&sorted, 0.5),
        quantile_low: quantile_sorted(&sorted, 0.025),
        quantile_high: quantile_sorted(&sorted, 0.975),
        sd,
        relative_bias_percent: 100.0 * (mean - true_n) / true_n,
        coefficient_of_variation: sd / cv_denom,
        failed_replicate_count: 0,
    })
}

/// Run one scenario. Replicate `r` draws its sample with seed
/// `base_seed + r`, so results are independent of worker count.
pub fn run_simulation(config: &SimulationConfig) -> Result<SimulationSummary> {
    config.validate()?;
    let population = generate(&config.margins, &config.dependence, config.generator_scale)?;
    let probs = population.table;
    let n = config.population_size;

    // per replicate, one estimate (or None) per model; replicate order fixed
    let per_replicate: Vec<Vec<Option<f64>>> = (0..config.replicates)
        .into_par_iter()
        .map(|r| {
            let seed = config.base_seed.wrapping_add(r as u64);
            let sample = match sample_multinomial(&probs, n, seed) {
                Ok(s) => s,
                Err(_) => return vec![None; config.models.len()],
            };
            let observed = mask_reference_cell(&sample);
            config
                .models
                .iter()
                .map(|model| {
                    crate::estimate::estimate_population(&observed, model)
                        .ok()
                        .map(|e| e.total_estimate)
                })
                .collect()
        })
        .collect();

    let mut per_model = Vec::with_capacity(config.models.len());
    for (mi, model) in config.models.iter().enumerate() {
        let estimates: Vec<f64> = per_replicate
            .iter()
            .filter_map(|row| row[mi])
            .collect();
        let failed = config.replicates - estimates.len();
        let mut summary = summarize(&estimates, n, config.cv_denominator)?;
        summary.model = model.to_string();
        summary.failed_replicate_count = failed;
        per_model.push(summary);
    }
    Ok(SimulationSummary {
        population_size: n,
        replicates: config.replicates,
        per_model,
    })
}
