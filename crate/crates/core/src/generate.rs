//! Generation of joint cell probabilities with prescribed margins and
//! (conditional) odds ratios, via a main-effects Poisson fit with the log
//! odds ratios supplied as an offset.

use crate::error::{Error, Result};
use crate::glm::fit_poisson;
use crate::model::{build_design, build_offset, DependenceSpec, ModelSpec, PairwiseOr};
use crate::table::{independence_table, ContingencyTable, MarginSpec, TableShape};

pub const DEFAULT_SCALE: f64 = 1000.0;

/// Cells smaller than this fraction of the total are flagged as degenerate.
const DEGENERATE_FRACTION: f64 = 1e-12;

/// A generated probability table plus any degenerate-cell warnings.
#[derive(Debug, Clone)]
pub struct GeneratedTable {
    /// Joint probabilities, summing to 1.
    pub table: ContingencyTable,
    /// Flat indices of cells pushed below 1e-12 of the total by extreme
    /// odds ratios. Sampling still works; estimation may be unstable.
    pub degenerate_cells: Vec<usize>,
}

fn main_effects_model(shape: &TableShape) -> ModelSpec {
    let gens: Vec<Vec<String>> = shape
        .factors()
        .iter()
        .map(|f| vec![f.name.clone()])
        .collect();
    ModelSpec::from_generators(&gens).expect("main-effects model is always valid")
}

/// Generate joint probabilities with the given margins and dependence
/// structure: fit the main-effects model to the scaled independence table
/// with the prescribed log odds ratios as offset, then rescale to sum 1.
pub fn generate(
    margins: &MarginSpec,
    dep: &DependenceSpec,
    scale: f64,
) -> Result<GeneratedTable> {
    let counts = independence_table(margins, scale)?;
    let shape = counts.shape().clone();
    let design = build_design(&shape, &main_effects_model(&shape))?
        .with_offset(build_offset(&shape, dep)?)?;
    let fit = fit_poisson(counts.cells(), &design)?;
    let total: f64 = fit.fitted_values.iter().sum();
    let probs: Vec<f64> = fit.fitted_values.iter().map(|v| v / total).collect();
    let degenerate_cells = probs
        .iter()
        .enumerate()
        .filter(|(_, p)| **p < DEGENERATE_FRACTION)
        .map(|(i, _)| i)
        .collect();
    Ok(GeneratedTable {
        table: ContingencyTable::new(shape, probs)?,
        degenerate_cells,
    })
}

/// Closed-form 2×2 table with row margin `p`, column margin `q` and odds
/// ratio `theta`: the joint probability p₁₁ solves
/// (θ−1)p₁₁² − [(θ−1)(p+q) + 1]p₁₁ + θpq = 0, taking the root inside the
/// Fréchet bounds [max(0, p+q−1), min(p, q)].
///
/// Independent oracle for [`generate`] on 2×2 inputs.
pub fn generate_2x2_oracle(margins: &MarginSpec, theta: f64) -> Result<ContingencyTable> {
    if margins.factors().len() != 2
        || margins.factors().iter().any(|(_, v)| v.len() != 2)
    {
        return Err(Error::Spec(
            "the 2x2 oracle needs exactly two dichotomous factors".into(),
        ));
    }
    if !(theta > 0.0) || !theta.is_finite() {
        return Err(Error::Spec(format!("theta must be positive, got {theta}")));
    }
    let p = margins.prob(0, 1);
    let q = margins.prob(1, 1);
    let p11 = if (theta - 1.0).abs() < 1e-14 {
        p * q
    } else {
        let a = theta - 1.0;
        let b = -(a * (p + q) + 1.0);
        let c = theta * p * q;
        let disc = (b * b - 4.0 * a * c).max(0.0).sqrt();
        let lo = (p + q - 1.0).max(0.0);
        let hi = p.min(q);
        let r1 = (-b - disc) / (2.0 * a);
        let r2 = (-b + disc) / (2.0 * a);
        let eps = 1e-12;
        if (lo - eps..=hi + eps).contains(&r1) {
            r1
        } else if (lo - eps..=hi + eps).contains(&r2) {
            r2
        } else {
            return Err(Error::DegenerateTable(format!(
                "no admissible root for p={p}, q={q}, theta={theta}"
            )));
        }
    };
    let shape = margins.shape()?;
    // storage order (0,0),(0,1),(1,0),(1,1)
    let cells = vec![1.0 - p - q + p11, q - p11, p - p11, p11];
    ContingencyTable::new(shape, cells)
}

/// Latent class generation: cell probability = Σ_x π_x Π_f π_{level(f)|x}.
///
/// `class_weights` is the distribution over classes; `conditionals[f][x]` is
/// the probability vector over the levels of observed factor `f` within
/// class `x`. Factors are independent within each class by construction.
pub fn generate_latent_class(
    class_weights: &[f64],
    conditionals: &[(String, Vec<Vec<f64>>)],
) -> Result<ContingencyTable> {
    let n_classes = class_weights.len();
    if n_classes == 0 {
        return Err(Error::Input("need at least one latent class".into()));
    }
    check_prob_vector(class_weights, "class weights")?;
    if conditionals.len() < 2 {
        return Err(Error::Input("need at least two observed factors".into()));
    }
    let mut factors = Vec::new();
    for (name, per_class) in conditionals {
        if per_class.len() != n_classes {
            return Err(Error::Input(format!(
                "factor {name:?} has conditionals for {} classes, expected {n_classes}",
                per_class.len()
            )));
        }
        let k = per_class[0].len();
        if k < 2 {
            return Err(Error::Input(format!(
                "factor {name:?} needs at least 2 levels"
            )));
        }
        for v in per_class {
            if v.len() != k {
                return Err(Error::Input(format!(
                    "factor {name:?} has conditionals of unequal length"
                )));
            }
            check_prob_vector(v, &format!("conditionals of factor {name:?}"))?;
        }
        factors.push(if k == 2 {
            crate::table::Factor::binary(name.clone())
        } else {
            crate::table::Factor::with_level_count(name.clone(), k)?
        });
    }
    let shape = TableShape::new(factors)?;
    let cells = shape
        .iter_cells()
        .map(|multi| {
            (0..n_classes)
                .map(|x| {
                    class_weights[x]
                        * multi
                            .iter()
                            .enumerate()
                            .map(|(fi, &lvl)| conditionals[fi].1[x][lvl])
                            .product::<f64>()
                })
                .sum()
        })
        .collect();
    ContingencyTable::new(shape, cells)
}

fn check_prob_vector(v: &[f64], what: &str) -> Result<()> {
    if v.iter().any(|p| !p.is_finite() || *p < 0.0 || *p > 1.0) {
        return Err(Error::Input(format!("{what} must lie in [0, 1]")));
    }
    let sum: f64 = v.iter().sum();
    if (sum - 1.0).abs() > 1e-12 {
        return Err(Error::Input(format!("{what} sum to {sum}, expected 1")));
    }
    Ok(())
}

/// Convenience: all specified pairwise odds ratios of a generated table,
/// recomputed from the cells for verification output.
pub fn realized_pairwise_ors(
    table: &ContingencyTable,
    dep: &DependenceSpec,
) -> Result<Vec<(PairwiseOr, f64)>> {
    let specs = match dep {
        DependenceSpec::Pairwise(s) => s.clone(),
        DependenceSpec::Conditional(_) => return Ok(Vec::new()),
    };
    let shape = table.shape();
    let mut out = Vec::new();
    for or in specs {
        // marginal cross-ratio only for two-way tables; otherwise condition
        // on reference levels of the remaining factors
        let conditioning: Vec<(&str, usize)> = shape
            .factors()
            .iter()
            .filter(|f| {
                !f.name.eq_ignore_ascii_case(&or.factors.0)
                    && !f.name.eq_ignore_ascii_case(&or.factors.1)
            })
            .map(|f| (f.name.as_str(), 0))
            .collect();
        let theta = table.odds_ratio(
            (&or.factors.0, &or.factors.1),
            or.levels,
            &conditioning,
        )?;
        out.push((or, theta));
    }
    Ok(out)
}

/// Convenience: recompute the specified conditional odds ratios of a generated
/// three-way table, conditioning on the remaining factor at each spec's level.
pub fn realized_conditional_ors(
    table: &ContingencyTable,
    specs: &[crate::model::ConditionalOr],
) -> Result<Vec<(crate::model::ConditionalOr, f64)>> {
    let shape = table.shape();
    let mut out = Vec::new();
    for or in specs {
        let conditioning: Vec<(&str, usize)> = shape
            .factors()
            .iter()
            .filter(|f| {
                !f.name.eq_ignore_ascii_case(&or.pair.0)
                    && !f.name.eq_ignore_ascii_case(&or.pair.1)
            })
            .map(|f| (f.name.as_str(), or.conditioning_level))
            .collect();
        let theta = table.odds_ratio((&or.pair.0, &or.pair.1), (1, 1), &conditioning)?;
        out.push((or.clone(), theta));
    }
    Ok(out)
}
