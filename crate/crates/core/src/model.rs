//! Hierarchical loglinear model terms, dummy-coded design matrices and
//! offset vectors carrying prescribed log odds ratios.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::table::TableShape;

/// A hierarchical loglinear model: a downward-closed set of factor subsets.
/// The empty subset (the intercept) is always included.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelSpec {
    terms: BTreeSet<BTreeSet<String>>,
}

impl ModelSpec {
    /// Build from generator terms, closing downward (hierarchical closure).
    pub fn from_generators<S: AsRef<str>>(generators: &[Vec<S>]) -> Result<Self> {
        let mut terms: BTreeSet<BTreeSet<String>> = BTreeSet::new();
        terms.insert(BTreeSet::new());
        for gen in generators {
            let names: Vec<String> = gen.iter().map(|s| s.as_ref().to_string()).collect();
            let set: BTreeSet<String> = names.iter().cloned().collect();
            if set.len() != names.len() {
                return Err(Error::Spec(format!(
                    "repeated factor in model term {names:?}"
                )));
            }
            // all subsets of the generator
            let names: Vec<String> = set.into_iter().collect();
            for mask in 0..(1u32 << names.len()) {
                let sub: BTreeSet<String> = names
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask & (1 << i) != 0)
                    .map(|(_, n)| n.clone())
                    .collect();
                terms.insert(sub);
            }
        }
        Ok(ModelSpec { terms })
    }

    /// Build from an explicit term set, rejecting non-hierarchical sets.
    pub fn from_terms(terms: BTreeSet<BTreeSet<String>>) -> Result<Self> {
        for term in &terms {
            for drop in term {
                let mut sub = term.clone();
                sub.remove(drop);
                if !terms.contains(&sub) {
                    return Err(Error::Spec(format!(
                        "model is not hierarchical: term {term:?} present but subset {sub:?} missing"
                    )));
                }
            }
        }
        let mut terms = terms;
        terms.insert(BTreeSet::new());
        Ok(ModelSpec { terms })
    }

    /// Parse generator-class notation, e.g. `[A][B]`, `[AB][AC]` or
    /// `[listA:listB]`. Single-letter factor names may be juxtaposed;
    /// multi-character names are separated by `:`. Case-insensitive.
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        if text.is_empty() {
            return Err(Error::Spec("empty model string".into()));
        }
        let mut generators: Vec<Vec<String>> = Vec::new();
        let mut rest = text;
        while !rest.is_empty() {
            let rest2 = rest.trim_start();
            if !rest2.starts_with('[') {
                return Err(Error::Spec(format!(
                    "expected '[' in model string at {rest2:?}"
                )));
            }
            let close = rest2.find(']').ok_or_else(|| {
                Error::Spec(format!("unclosed '[' in model string {text:?}"))
            })?;
            let inner = &rest2[1..close];
            let names: Vec<String> = if inner.contains(':') {
                inner.split(':').map(|s| s.trim().to_string()).collect()
            } else {
                inner
                    .trim()
                    .chars()
                    .filter(|c| !c.is_whitespace())
                    .map(|c| c.to_string())
                    .collect()
            };
            if names.is_empty() || names.iter().any(|n| n.is_empty()) {
                return Err(Error::Spec(format!("empty factor name in term [{inner}]")));
            }
            generators.push(names);
            rest = &rest2[close + 1..];
        }
        ModelSpec::from_generators(&generators)
    }

    pub fn terms(&self) -> impl Iterator<Item = &BTreeSet<String>> {
        self.terms.iter()
    }

    pub fn contains_term(&self, term: &BTreeSet<String>) -> bool {
        self.terms.contains(term)
    }

    /// Terms not contained in any other term; these name the model in
    /// generator-class notation.
    pub fn maximal_terms(&self) -> Vec<&BTreeSet<String>> {
        self.terms
            .iter()
            .filter(|t| {
                !t.is_empty()
                    && !self
                        .terms
                        .iter()
                        .any(|u| u.len() > t.len() && t.is_subset(u))
            })
            .collect()
    }

    /// Number of free parameters on the given shape (corner-point coding).
    pub fn n_parameters(&self, shape: &TableShape) -> Result<usize> {
        let mut n = 0;
        for term in &self.terms {
            let mut cols = 1;
            for name in term {
                let fi = resolve_factor(shape, name)?;
                cols *= shape.factors()[fi].level_count() - 1;
            }
            n += cols;
        }
        Ok(n)
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let maximal = self.maximal_terms();
        if maximal.is_empty() {
            return write!(f, "[]");
        }
        for term in maximal {
            let names: Vec<&str> = term.iter().map(|s| s.as_str()).collect();
            if names.iter().all(|n| n.len() == 1) {
                write!(f, "[{}]", names.concat())?;
            } else {
                write!(f, "[{}]", names.join(":"))?;
            }
        }
        Ok(())
    }
}

/// Case-insensitive factor lookup.
fn resolve_factor(shape: &TableShape, name: &str) -> Result<usize> {
    shape
        .factors()
        .iter()
        .position(|f| f.name.eq_ignore_ascii_case(name))
        .ok_or_else(|| Error::Spec(format!("unknown factor {name:?}")))
}

/// Dummy-coded design matrix with one row per table cell (storage order)
/// and a fixed offset vector.
#[derive(Debug, Clone)]
pub struct DesignMatrix {
    pub matrix: DMatrix<f64>,
    pub labels: Vec<String>,
    pub offset: Vec<f64>,
}

impl DesignMatrix {
    pub fn n_rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn with_offset(mut self, offset: Vec<f64>) -> Result<Self> {
        if offset.len() != self.n_rows() {
            return Err(Error::Input(format!(
                "offset length {} does not match {} rows",
                offset.len(),
                self.n_rows()
            )));
        }
        self.offset = offset;
        Ok(self)
    }

    /// Remove the given rows (and their offset entries), keeping columns.
    pub fn drop_rows(&self, rows: &[usize]) -> DesignMatrix {
        let keep: Vec<usize> = (0..self.n_rows()).filter(|r| !rows.contains(r)).collect();
        let matrix = DMatrix::from_fn(keep.len(), self.n_cols(), |r, c| self.matrix[(keep[r], c)]);
        let offset = keep.iter().map(|&r| self.offset[r]).collect();
        DesignMatrix {
            matrix,
            labels: self.labels.clone(),
            offset,
        }
    }
}

/// Build the 0/1 dummy design for a hierarchical model on a complete table.
///
/// Column order: intercept, main effects in factor order (levels ascending),
/// then higher-order terms ordered by arity and factor position, with the
/// level combinations of each term in lexicographic order (last factor fastest).
pub fn build_design(shape: &TableShape, model: &ModelSpec) -> Result<DesignMatrix> {
    // resolve each term to sorted factor indices
    let mut resolved: Vec<Vec<usize>> = Vec::new();
    for term in model.terms() {
        let mut idx: Vec<usize> = term
            .iter()
            .map(|n| resolve_factor(shape, n))
            .collect::<Result<_>>()?;
        idx.sort_unstable();
        idx.dedup();
        if idx.len() != term.len() {
            return Err(Error::Spec(format!(
                "term {term:?} names the same factor twice"
            )));
        }
        resolved.push(idx);
    }
    resolved.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));

    let n_cells = shape.n_cells();
    let mut columns: Vec<Vec<f64>> = Vec::new();
    let mut labels: Vec<String> = Vec::new();
    for term in &resolved {
        if term.is_empty() {
            columns.push(vec![1.0; n_cells]);
            labels.push("lambda".into());
            continue;
        }
        // all non-reference level combinations, last factor fastest
        let mut combos: Vec<Vec<usize>> = vec![Vec::new()];
        for &fi in term {
            let k = shape.factors()[fi].level_count();
            combos = combos
                .into_iter()
                .flat_map(|c| {
                    (1..k).map(move |lvl| {
                        let mut c = c.clone();
                        c.push(lvl);
                        c
                    })
                })
                .collect();
        }
        for combo in combos {
            let col = (0..n_cells)
                .map(|flat| {
                    let multi = shape.multi_index_of(flat);
                    let hit = term
                        .iter()
                        .zip(&combo)
                        .all(|(&fi, &lvl)| multi[fi] == lvl);
                    if hit {
                        1.0
                    } else {
                        0.0
                    }
                })
                .collect();
            columns.push(col);
            let names: Vec<&str> = term
                .iter()
                .map(|&fi| shape.factors()[fi].name.as_str())
                .collect();
            let lvls: Vec<String> = combo.iter().map(|l| l.to_string()).collect();
            labels.push(format!("lambda_{}[{}]", names.join(":"), lvls.join(",")));
        }
    }
    let n_cols = columns.len();
    let matrix = DMatrix::from_fn(n_cells, n_cols, |r, c| columns[c][r]);
    Ok(DesignMatrix {
        matrix,
        labels,
        offset: vec![0.0; n_cells],
    })
}

/// A prescribed unconditional odds ratio for one factor pair at one
/// non-reference level pair (reference-anchored, Eq-13 style).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseOr {
    pub factors: (String, String),
    pub levels: (usize, usize),
    pub theta: f64,
}

impl PairwiseOr {
    pub fn new(a: impl Into<String>, b: impl Into<String>, theta: f64) -> Self {
        PairwiseOr {
            factors: (a.into(), b.into()),
            levels: (1, 1),
            theta,
        }
    }

    pub fn at_levels(mut self, i: usize, j: usize) -> Self {
        self.levels = (i, j);
        self
    }
}

/// A prescribed conditional odds ratio θ^{XY|Z=level} for three dichotomous factors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalOr {
    pub pair: (String, String),
    pub conditioning_level: usize,
    pub theta: f64,
}

impl ConditionalOr {
    pub fn new(
        a: impl Into<String>,
        b: impl Into<String>,
        conditioning_level: usize,
        theta: f64,
    ) -> Self {
        ConditionalOr {
            pair: (a.into(), b.into()),
            conditioning_level,
            theta,
        }
    }
}

/// Prescribed dependence structure: either unconditional pairwise odds ratios
/// (any shape) or conditional odds ratios (three dichotomous factors only).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DependenceSpec {
    Pairwise(Vec<PairwiseOr>),
    Conditional(Vec<ConditionalOr>),
}

impl DependenceSpec {
    pub fn independence() -> Self {
        DependenceSpec::Pairwise(Vec::new())
    }

    /// Dichotomous pairwise shortcut: (factor, factor, theta) at levels (1,1).
    pub fn pairwise(specs: &[(&str, &str, f64)]) -> Self {
        DependenceSpec::Pairwise(
            specs
                .iter()
                .map(|(a, b, t)| PairwiseOr::new(*a, *b, *t))
                .collect(),
        )
    }
}

fn canonical_pair(a: &str, b: &str) -> (String, String) {
    let (a, b) = (a.to_ascii_uppercase(), b.to_ascii_uppercase());
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

fn check_theta(theta: f64, what: &str) -> Result<()> {
    if !(theta > 0.0) || !theta.is_finite() {
        return Err(Error::Spec(format!(
            "odds ratio {what} must be strictly positive and finite, got {theta}"
        )));
    }
    Ok(())
}

/// Complete a conditional odds-ratio spec to all six values.
///
/// The three ratios θ^{XY|Z=1}/θ^{XY|Z=0} must be equal (they all equal the
/// three-factor interaction), so four free values determine the rest: at least
/// one value per pair, with at least one pair fully specified to pin the ratio.
/// Fully specified inputs are checked for consistency (1e-9 relative).
pub fn validate_conditional_spec(spec: &[ConditionalOr]) -> Result<Vec<ConditionalOr>> {
    if spec.is_empty() {
        return Err(Error::Spec("empty conditional odds-ratio spec".into()));
    }
    let mut values: BTreeMap<((String, String), usize), f64> = BTreeMap::new();
    let mut factors: BTreeSet<String> = BTreeSet::new();
    for or in spec {
        check_theta(
            or.theta,
            &format!(
                "{}{}|{}",
                or.pair.0, or.pair.1, or.conditioning_level
            ),
        )?;
        if or.conditioning_level > 1 {
            return Err(Error::Spec(format!(
                "conditioning level must be 0 or 1, got {}",
                or.conditioning_level
            )));
        }
        let key = (canonical_pair(&or.pair.0, &or.pair.1), or.conditioning_level);
        factors.insert(key.0 .0.clone());
        factors.insert(key.0 .1.clone());
        if let Some(prev) = values.insert(key.clone(), or.theta) {
            if (prev - or.theta).abs() > 1e-9 * prev.abs() {
                return Err(Error::Spec(format!(
                    "conflicting values {prev} and {} for odds ratio {}{}|Z={}",
                    or.theta, key.0 .0, key.0 .1, key.1
                )));
            }
        }
    }
    if factors.len() != 3 {
        return Err(Error::Spec(format!(
            "conditional odds-ratio specs need exactly 3 factors, got {factors:?}"
        )));
    }
    let names: Vec<String> = factors.into_iter().collect();
    let pairs = [
        canonical_pair(&names[0], &names[1]),
        canonical_pair(&names[0], &names[2]),
        canonical_pair(&names[1], &names[2]),
    ];

    // the common three-factor ratio, from every fully specified pair
    let mut ratio: Option<(f64, &(String, String))> = None;
    for pair in &pairs {
        if let (Some(&lo), Some(&hi)) = (
            values.get(&(pair.clone(), 0)),
            values.get(&(pair.clone(), 1)),
        ) {
            let r = hi / lo;
            if let Some((r0, pair0)) = &ratio {
                if (r - r0).abs() > 1e-9 * r0.abs() {
                    return Err(Error::Spec(format!(
                        "inconsistent conditional odds ratios: \
                         theta^{{{}{}|1}}/theta^{{{}{}|0}} = {} but \
                         theta^{{{}{}|1}}/theta^{{{}{}|0}} = {}",
                        pair0.0, pair0.1, pair0.0, pair0.1, r0,
                        pair.0, pair.1, pair.0, pair.1, r
                    )));
                }
            } else {
                ratio = Some((r, pair));
            }
        }
    }
    let (r, _) = ratio.ok_or_else(|| {
        Error::Spec(
            "underdetermined conditional spec: no pair has both conditioning levels, \
             so the three-factor ratio cannot be determined"
                .into(),
        )
    })?;

    let mut out = Vec::with_capacity(6);
    for pair in &pairs {
        let lo = values.get(&(pair.clone(), 0)).copied();
        let hi = values.get(&(pair.clone(), 1)).copied();
        let (lo, hi) = match (lo, hi) {
            (Some(lo), Some(hi)) => (lo, hi),
            (Some(lo), None) => (lo, lo * r),
            (None, Some(hi)) => (hi / r, hi),
            (None, None) => {
                return Err(Error::Spec(format!(
                    "no odds ratio given for pair {}{}",
                    pair.0, pair.1
                )))
            }
        };
        out.push(ConditionalOr::new(pair.0.clone(), pair.1.clone(), 0, lo));
        out.push(ConditionalOr::new(pair.0.clone(), pair.1.clone(), 1, hi));
    }
    Ok(out)
}

/// Offset vector for a dependence spec: at each cell, the sum of the log odds
/// ratios of the interaction terms active there.
pub fn build_offset(shape: &TableShape, dep: &DependenceSpec) -> Result<Vec<f64>> {
    let n_cells = shape.n_cells();
    let mut offset = vec![0.0; n_cells];
    match dep {
        DependenceSpec::Pairwise(specs) => {
            for or in specs {
                check_theta(or.theta, &format!("{}{}", or.factors.0, or.factors.1))?;
                let fa = resolve_factor(shape, &or.factors.0)?;
                let fb = resolve_factor(shape, &or.factors.1)?;
                if fa == fb {
                    return Err(Error::Spec(format!(
                        "odds-ratio pair names factor {:?} twice",
                        or.factors.0
                    )));
                }
                let (i, j) = or.levels;
                if i == 0 || j == 0 {
                    return Err(Error::Spec(
                        "odds-ratio levels must be non-reference (>= 1)".into(),
                    ));
                }
                if i >= shape.factors()[fa].level_count() || j >= shape.factors()[fb].level_count()
                {
                    return Err(Error::IndexOutOfRange(format!(
                        "odds-ratio levels ({i},{j}) out of range for pair ({}, {})",
                        or.factors.0, or.factors.1
                    )));
                }
                for (flat, slot) in offset.iter_mut().enumerate() {
                    let multi = shape.multi_index_of(flat);
                    if multi[fa] == i && multi[fb] == j {
                        *slot += or.theta.ln();
                    }
                }
            }
        }
        DependenceSpec::Conditional(specs) => {
            if shape.n_factors() != 3
                || shape.factors().iter().any(|f| f.level_count() != 2)
            {
                return Err(Error::Spec(
                    "conditional odds-ratio specs require three dichotomous factors".into(),
                ));
            }
            let normalized = validate_conditional_spec(specs)?;
            // theta[(pair indices), conditioning level]
            let mut theta: BTreeMap<((usize, usize), usize), f64> = BTreeMap::new();
            for or in &normalized {
                let fa = resolve_factor(shape, &or.pair.0)?;
                let fb = resolve_factor(shape, &or.pair.1)?;
                let key = (
                    (fa.min(fb), fa.max(fb)),
                    or.conditioning_level,
                );
                theta.insert(key, or.theta);
            }
            for (flat, slot) in offset.iter_mut().enumerate() {
                let multi = shape.multi_index_of(flat);
                let ones: Vec<usize> =
                    (0..3).filter(|&fi| multi[fi] == 1).collect();
                match ones.len() {
                    3 => {
                        // all three two-way terms (conditioning at level 0)
                        // plus the three-way interaction counted once:
                        // r = theta^{AB|C=1} / theta^{AB|C=0}
                        let r = theta[&((0, 1), 1)] / theta[&((0, 1), 0)];
                        *slot = theta[&((0, 1), 0)].ln()
                            + theta[&((0, 2), 0)].ln()
                            + theta[&((1, 2), 0)].ln()
                            + r.ln();
                    }
                    2 => {
                        *slot = theta[&((ones[0], ones[1]), 0)].ln();
                    }
                    _ => {}
                }
            }
        }
    }
    Ok(offset)
}
