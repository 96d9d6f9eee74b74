//! Poisson regression with log link and offset, fitted by iteratively
//! reweighted least squares.

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::DesignMatrix;
use crate::table::ContingencyTable;

const MAX_ITERATIONS: usize = 100;
const MAX_HALVINGS: usize = 10;
const DEVIANCE_TOL: f64 = 1e-12;
// deviance is quadratic in the coefficient error, so near-saturated fits can
// satisfy the deviance criterion while the coefficients are still ~1e-8 off;
// additionally require the coefficients themselves to settle
const COEFFICIENT_TOL: f64 = 1e-8;
const RANK_TOL: f64 = 1e-10;

/// Converged maximum-likelihood fit of a Poisson loglinear model.
#[derive(Debug, Clone, Serialize)]
pub struct FitResult {
    pub coefficients: Vec<f64>,
    pub coefficient_labels: Vec<String>,
    pub fitted_values: Vec<f64>,
    pub deviance: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Poisson deviance 2 Σ [y log(y/μ) − (y − μ)]; the y = 0 term is 2μ.
pub fn deviance(y: &[f64], mu: &[f64]) -> Result<f64> {
    if y.len() != mu.len() {
        return Err(Error::Input(format!(
            "length mismatch: {} observations, {} fitted values",
            y.len(),
            mu.len()
        )));
    }
    let mut dev = 0.0;
    for (&yi, &mi) in y.iter().zip(mu) {
        if !yi.is_finite() || !mi.is_finite() || mi <= 0.0 || yi < 0.0 {
            return Err(Error::Input(format!(
                "deviance needs finite y >= 0 and mu > 0, got y={yi}, mu={mi}"
            )));
        }
        if yi == 0.0 {
            dev += 2.0 * mi;
        } else {
            dev += 2.0 * (yi * (yi / mi).ln() - (yi - mi));
        }
    }
    Ok(dev)
}

fn check_response(y: &[f64], design: &DesignMatrix) -> Result<()> {
    if y.len() != design.n_rows() {
        return Err(Error::Input(format!(
            "response has {} entries for a {}-row design",
            y.len(),
            design.n_rows()
        )));
    }
    if let Some(v) = y.iter().find(|v| !v.is_finite() || **v < 0.0) {
        return Err(Error::Input(format!(
            "response value {v} is negative or non-finite"
        )));
    }
    if y.iter().all(|v| *v == 0.0) {
        return Err(Error::Input("response is all zero".into()));
    }
    Ok(())
}

/// One weighted least squares step: solve (Xᵀ W X) β = Xᵀ W z.
fn solve_wls(x: &DMatrix<f64>, w: &DVector<f64>, z: &DVector<f64>) -> Result<DVector<f64>> {
    let p = x.ncols();
    let mut xtwx = DMatrix::zeros(p, p);
    let mut xtwz = DVector::zeros(p);
    for r in 0..x.nrows() {
        let wr = w[r];
        for a in 0..p {
            let xa = x[(r, a)];
            if xa == 0.0 {
                continue;
            }
            xtwz[a] += wr * xa * z[r];
            for b in a..p {
                xtwx[(a, b)] += wr * xa * x[(r, b)];
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            xtwx[(a, b)] = xtwx[(b, a)];
        }
    }
    let chol = Cholesky::new(xtwx)
        .ok_or_else(|| Error::RankDeficient("weighted normal equations are not positive definite".into()))?;
    let l = chol.l();
    let mut min_pivot = f64::INFINITY;
    let mut max_pivot = 0.0_f64;
    for a in 0..p {
        min_pivot = min_pivot.min(l[(a, a)]);
        max_pivot = max_pivot.max(l[(a, a)]);
    }
    if min_pivot < RANK_TOL * max_pivot {
        return Err(Error::RankDeficient(format!(
            "pivot ratio {:.3e} below {RANK_TOL:.0e}",
            min_pivot / max_pivot
        )));
    }
    Ok(chol.solve(&xtwz))
}

/// Fit a Poisson loglinear model log μ = X β + offset by IRLS.
///
/// Initialization μ⁰ = y + 0.5; convergence on relative deviance change
/// below 1e-12 (at most 100 iterations, with step-halving when the deviance
/// increases). At convergence the score equations Xᵀ(y − μ̂) = 0 hold, so the
/// fitted margins of every modeled term match the observed margins.
pub fn fit_poisson(y: &[f64], design: &DesignMatrix) -> Result<FitResult> {
    check_response(y, design)?;
    let n = y.len();
    let x = &design.matrix;
    let offset = DVector::from_column_slice(&design.offset);
    let yv = DVector::from_column_slice(y);

    // the deviance is computed with cancellation noise on the order of
    // eps * Σy; both the step-halving guard and the convergence test must
    // ignore changes at that level or they stall short of convergence
    let dev_slack = 1e-12 * (1.0 + y.iter().sum::<f64>());

    let mut mu = DVector::from_fn(n, |i, _| y[i] + 0.5);
    let mut eta = mu.map(f64::ln);
    let mut dev = deviance(y, mu.as_slice())?;
    let mut beta: Option<DVector<f64>> = None;
    let mut converged = false;
    let mut iterations = 0;

    for _ in 0..MAX_ITERATIONS {
        iterations += 1;
        let w = mu.clone();
        let z = DVector::from_fn(n, |i, _| eta[i] + (yv[i] - mu[i]) / mu[i] - offset[i]);
        let mut beta_new = solve_wls(x, &w, &z)?;

        let mut eta_new = x * &beta_new + &offset;
        let mut mu_new = eta_new.map(f64::exp);
        let mut dev_new = deviance(y, mu_new.as_slice()).unwrap_or(f64::INFINITY);

        if let Some(prev) = &beta {
            let mut halvings = 0;
            while dev_new > dev + dev_slack && halvings < MAX_HALVINGS {
                beta_new = (&beta_new + prev) * 0.5;
                eta_new = x * &beta_new + &offset;
                mu_new = eta_new.map(f64::exp);
                dev_new = deviance(y, mu_new.as_slice()).unwrap_or(f64::INFINITY);
                halvings += 1;
            }
        }

        let dev_settled =
            (dev_new - dev).abs() < DEVIANCE_TOL * (0.1 + dev_new.abs()) + dev_slack;
        let coef_delta = match &beta {
            Some(prev) => beta_new
                .iter()
                .zip(prev.iter())
                .map(|(b, p)| (b - p).abs() / (1.0 + b.abs()))
                .fold(0.0, f64::max),
            None => f64::INFINITY,
        };
        beta = Some(beta_new);
        eta = eta_new;
        mu = mu_new;
        let done = dev_settled && coef_delta < COEFFICIENT_TOL;
        dev = dev_new;
        if done {
            converged = true;
            break;
        }
    }

    let result = FitResult {
        coefficients: beta.as_ref().map(|b| b.as_slice().to_vec()).unwrap_or_default(),
        coefficient_labels: design.labels.clone(),
        fitted_values: mu.as_slice().to_vec(),
        deviance: dev,
        iterations,
        converged,
    };
    if !converged {
        return Err(Error::NoConvergence {
            iterations,
            deviance: dev,
            last: Box::new(result),
        });
    }
    Ok(result)
}

/// Direct [AB][AC] estimates for a three-way table:
/// μ̂_ijk = n_{ij+} n_{i+k} / n_{i++}.
///
/// Oracle for [`fit_poisson`] with the [AB][AC] model.
pub fn closed_form_ab_ac(table: &ContingencyTable) -> Result<ContingencyTable> {
    let shape = table.shape();
    if shape.n_factors() != 3 {
        return Err(Error::Spec(format!(
            "closed-form [AB][AC] needs a three-way table, got {} factors",
            shape.n_factors()
        )));
    }
    let (ka, kb, kc) = (
        shape.factors()[0].level_count(),
        shape.factors()[1].level_count(),
        shape.factors()[2].level_count(),
    );
    let mut n_ij = vec![0.0; ka * kb];
    let mut n_ik = vec![0.0; ka * kc];
    let mut n_i = vec![0.0; ka];
    for (flat, v) in table.cells().iter().enumerate() {
        let m = shape.multi_index_of(flat);
        n_ij[m[0] * kb + m[1]] += v;
        n_ik[m[0] * kc + m[2]] += v;
        n_i[m[0]] += v;
    }
    if let Some(i) = n_i.iter().position(|v| *v <= 0.0) {
        return Err(Error::DegenerateTable(format!(
            "margin n_{{i++}} is zero for level {i} of factor {:?}",
            shape.factors()[0].name
        )));
    }
    let cells = (0..shape.n_cells())
        .map(|flat| {
            let m = shape.multi_index_of(flat);
            n_ij[m[0] * kb + m[1]] * n_ik[m[0] * kc + m[2]] / n_i[m[0]]
        })
        .collect();
    ContingencyTable::new(shape.clone(), cells)
}
