//! TOML scenario files: margins, dependence structure and simulation settings.

use serde::Deserialize;

use contab::sim::CvDenominator;
use contab::{ConditionalOr, DependenceSpec, MarginSpec, ModelSpec, PairwiseOr};

use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    /// Scale constant for the generator fit (default 1000).
    pub scale: Option<f64>,
    /// Base seed; replicate r samples with base_seed + r.
    pub base_seed: Option<u64>,
    pub factor: Vec<FactorConfig>,
    #[serde(default)]
    pub odds_ratio: Vec<OddsRatioConfig>,
    #[serde(default)]
    pub conditional_odds_ratio: Vec<ConditionalOrConfig>,
    pub simulation: Option<SimulationSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorConfig {
    pub name: String,
    /// Dichotomous shortcut: P(level 1).
    pub prob: Option<f64>,
    /// Full probability vector over levels (entry 0 is the reference level).
    pub probs: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OddsRatioConfig {
    /// Factor pair, e.g. "AB" or "listA:listB".
    pub pair: String,
    pub theta: f64,
    /// Non-reference level pair, default [1, 1].
    pub levels: Option<[usize; 2]>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditionalOrConfig {
    /// Factor pair, e.g. "AB".
    pub pair: String,
    /// Conditioning level (0 or 1) of the remaining factor.
    pub given: usize,
    pub theta: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    pub population_size: u64,
    pub replicates: usize,
    pub models: Vec<String>,
    pub cv_denominator: Option<CvDenominator>,
}

pub fn parse_pair(pair: &str) -> Result<(String, String), CliError> {
    let names: Vec<String> = if pair.contains(':') {
        pair.split(':').map(|s| s.trim().to_string()).collect()
    } else {
        pair.trim().chars().map(|c| c.to_string()).collect()
    };
    if names.len() != 2 || names.iter().any(|n| n.is_empty()) {
        return Err(CliError::config(format!(
            "field `pair`: expected two factor names, got {pair:?}"
        )));
    }
    Ok((names[0].clone(), names[1].clone()))
}

impl ConfigFile {
    pub fn load(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text)
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))
    }

    pub fn margins(&self) -> Result<MarginSpec, CliError> {
        let mut factors = Vec::new();
        for f in &self.factor {
            let probs = match (&f.prob, &f.probs) {
                (Some(p), None) => vec![1.0 - p, *p],
                (None, Some(v)) => v.clone(),
                _ => {
                    return Err(CliError::config(format!(
                        "factor {:?}: give exactly one of `prob` or `probs`",
                        f.name
                    )))
                }
            };
            factors.push((f.name.clone(), probs));
        }
        MarginSpec::new(factors).map_err(CliError::from_config_err)
    }

    pub fn dependence(&self) -> Result<DependenceSpec, CliError> {
        match (
            self.odds_ratio.is_empty(),
            self.conditional_odds_ratio.is_empty(),
        ) {
            (false, false) => Err(CliError::config(
                "give either `odds_ratio` or `conditional_odds_ratio` entries, not both".into(),
            )),
            (true, false) => {
                let specs = self
                    .conditional_odds_ratio
                    .iter()
                    .map(|c| {
                        let (a, b) = parse_pair(&c.pair)?;
                        Ok(ConditionalOr::new(a, b, c.given, c.theta))
                    })
                    .collect::<Result<Vec<_>, CliError>>()?;
                Ok(DependenceSpec::Conditional(specs))
            }
            _ => {
                let specs = self
                    .odds_ratio
                    .iter()
                    .map(|c| {
                        let (a, b) = parse_pair(&c.pair)?;
                        let mut or = PairwiseOr::new(a, b, c.theta);
                        if let Some([i, j]) = c.levels {
                            or = or.at_levels(i, j);
                        }
                        Ok(or)
                    })
                    .collect::<Result<Vec<_>, CliError>>()?;
                Ok(DependenceSpec::Pairwise(specs))
            }
        }
    }

    pub fn models(&self) -> Result<Vec<ModelSpec>, CliError> {
        let sim = self.simulation.as_ref().ok_or_else(|| {
            CliError::config("config has no [simulation] section".into())
        })?;
        sim.models
            .iter()
            .map(|m| ModelSpec::parse(m).map_err(CliError::from_config_err))
            .collect()
    }
}
