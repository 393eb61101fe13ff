//! Composite index from variance-weighted modified principal components.
//!
//! Indicators are first mapped onto a common 1..10 scale. The covariance of
//! the normalized indicators is diagonalised; component `k` then scores each
//! entity with the squared loadings `l_ki²` of its unit eigenvector, which
//! form a convex weighting of the indicators. Components are combined with
//! their variance shares `ρ_k`, so the index is
//!
//! ```text
//! I_j = Σ_k ρ_k Σ_i l_ki² x_ij = Σ_i w_i x_ij,   w_i = Σ_k ρ_k l_ki²
//! ```
//!
//! and the effective weights `w_i` are nonnegative and sum to one.

use thiserror::Error;

use crate::dataset::{Dataset, Direction, IndicatorSchema};
use crate::linalg::{covariance_matrix, jacobi_eigh, EigenDecomposition, LinalgError, Matrix};
use crate::options::{ConstantPolicy, NormalizationBounds, PillarMode, RunOptions};
use crate::ranking::{assign_ranks, PillarScores, RankedTable, RankingError};

pub const SCALE_MIN: f64 = 1.0;
pub const SCALE_MAX: f64 = 10.0;
const SCALE_MID: f64 = 5.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IndexError {
    #[error("constant indicators: {}", .0.join(", "))]
    ConstantIndicator(Vec<String>),
    #[error("indicator {indicator}, entity {entity}: value is not finite")]
    NonFiniteInput { indicator: String, entity: String },
    #[error("indicator {indicator}, entity {entity}: value is missing")]
    MissingValue { indicator: String, entity: String },
    #[error("indicator {0} is not assigned to any pillar")]
    UnassignedIndicator(String),
    #[error("no explicit bounds for indicator {0}")]
    MissingBounds(String),
    #[error("bounds for indicator {code} need min < max, got ({min}, {max})")]
    InvalidBounds { code: String, min: f64, max: f64 },
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("every indicator was dropped")]
    AllIndicatorsDropped,
    #[error("{context}: {source}")]
    Linalg {
        context: String,
        #[source]
        source: LinalgError,
    },
    #[error("pillar {pillar}: {source}")]
    Pillar {
        pillar: String,
        #[source]
        source: Box<IndexError>,
    },
    #[error("unknown entity {0}")]
    UnknownEntity(String),
    #[error(transparent)]
    Ranking(#[from] RankingError),
}

fn linalg(context: &str) -> impl FnOnce(LinalgError) -> IndexError + '_ {
    move |source| IndexError::Linalg {
        context: context.to_string(),
        source,
    }
}

/// Indicators on the 1..10 scale, rows aligned with `indicator_codes`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedMatrix {
    pub values: Matrix,
    pub indicator_codes: Vec<String>,
    pub entity_ids: Vec<String>,
    /// Constant indicators removed under the drop policy.
    pub dropped: Vec<String>,
}

/// `y_kj`, one row per component.
#[derive(Debug, Clone, PartialEq)]
pub struct ModifiedScores(pub Matrix);

/// Maps each indicator onto 1..10 so that the "best" raw value lands on 10.
///
/// With sample bounds a constant indicator has no spread; it is rejected,
/// dropped, or set to 5.5 according to `policy`. With explicit bounds every
/// mapped value is clamped into 1..10.
pub fn normalize(
    raw: &Dataset,
    directions: &[Direction],
    bounds: &NormalizationBounds,
    policy: ConstantPolicy,
) -> Result<NormalizedMatrix, IndexError> {
    let (n, m) = (raw.n_indicators(), raw.n_entities());
    if directions.len() != n {
        return Err(IndexError::DimensionMismatch {
            expected: n,
            found: directions.len(),
        });
    }
    for i in 0..n {
        for j in 0..m {
            if raw.is_missing(i, j) {
                return Err(IndexError::MissingValue {
                    indicator: raw.indicator_codes[i].clone(),
                    entity: raw.entity_ids[j].clone(),
                });
            }
            if !raw.values[(i, j)].is_finite() {
                return Err(IndexError::NonFiniteInput {
                    indicator: raw.indicator_codes[i].clone(),
                    entity: raw.entity_ids[j].clone(),
                });
            }
        }
    }

    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut codes = Vec::with_capacity(n);
    let mut constant = Vec::new();
    let mut dropped = Vec::new();
    for (i, (code, &direction)) in raw.indicator_codes.iter().zip(directions).enumerate() {
        let row = raw.values.row(i);
        let (lo, hi, clamp) = match bounds {
            NormalizationBounds::Sample => {
                let lo = row.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                (lo, hi, false)
            }
            NormalizationBounds::Explicit(map) => {
                let &(lo, hi) = map
                    .get(code)
                    .ok_or_else(|| IndexError::MissingBounds(code.clone()))?;
                if !lo.is_finite() || !hi.is_finite() || lo >= hi {
                    return Err(IndexError::InvalidBounds {
                        code: code.clone(),
                        min: lo,
                        max: hi,
                    });
                }
                (lo, hi, true)
            }
        };
        if lo == hi {
            match policy {
                ConstantPolicy::Error => constant.push(code.clone()),
                ConstantPolicy::Drop => dropped.push(code.clone()),
                ConstantPolicy::Midpoint => {
                    rows.push(vec![SCALE_MID; m]);
                    codes.push(code.clone());
                }
            }
            continue;
        }
        let span = hi - lo;
        let mapped = row
            .iter()
            .map(|&x| {
                let frac = match direction {
                    Direction::Increasing => (x - lo) / span,
                    Direction::Decreasing => (hi - x) / span,
                };
                let v = SCALE_MIN + (SCALE_MAX - SCALE_MIN) * frac;
                if clamp {
                    v.clamp(SCALE_MIN, SCALE_MAX)
                } else {
                    v
                }
            })
            .collect();
        rows.push(mapped);
        codes.push(code.clone());
    }
    if !constant.is_empty() {
        return Err(IndexError::ConstantIndicator(constant));
    }

    let values = if rows.is_empty() {
        Matrix::zeros(0, m)
    } else {
        Matrix::from_rows(&rows)
    };
    Ok(NormalizedMatrix {
        values,
        indicator_codes: codes,
        entity_ids: raw.entity_ids.clone(),
        dropped,
    })
}

/// `y_kj = Σ_i l_ki² x_ij`.
pub fn modified_scores(
    loadings: &Matrix,
    normalized: &NormalizedMatrix,
) -> Result<ModifiedScores, IndexError> {
    let x = &normalized.values;
    if loadings.cols() != x.rows() {
        return Err(IndexError::DimensionMismatch {
            expected: x.rows(),
            found: loadings.cols(),
        });
    }
    let (p, n, m) = (loadings.rows(), x.rows(), x.cols());
    let mut y = Matrix::zeros(p, m);
    for k in 0..p {
        let sq: Vec<f64> = loadings.row(k).iter().map(|l| l * l).collect();
        for j in 0..m {
            let mut acc = 0.0;
            for i in 0..n {
                acc += sq[i] * x[(i, j)];
            }
            y[(k, j)] = acc;
        }
    }
    Ok(ModifiedScores(y))
}

/// `w_i = Σ_k ρ_k l_ki²`.
pub fn effective_weights(decomposition: &EigenDecomposition) -> Vec<f64> {
    let l = &decomposition.loadings;
    let n = l.cols();
    (0..n)
        .map(|i| {
            let mut acc = 0.0;
            for (k, rho) in decomposition.shares.iter().enumerate() {
                let v = l[(k, i)];
                acc += rho * (v * v);
            }
            acc
        })
        .collect()
}

/// `I_j = Σ_i w_i x_ij`.
pub fn aggregate_index(
    weights: &[f64],
    normalized: &NormalizedMatrix,
) -> Result<Vec<f64>, IndexError> {
    weighted_column_sums(weights, &normalized.values)
}

/// `I_j = Σ_k ρ_k y_kj`, the component-wise route to the same index.
pub fn aggregate_from_scores(
    shares: &[f64],
    scores: &ModifiedScores,
) -> Result<Vec<f64>, IndexError> {
    weighted_column_sums(shares, &scores.0)
}

fn weighted_column_sums(weights: &[f64], rows: &Matrix) -> Result<Vec<f64>, IndexError> {
    if weights.len() != rows.rows() {
        return Err(IndexError::DimensionMismatch {
            expected: rows.rows(),
            found: weights.len(),
        });
    }
    Ok((0..rows.cols())
        .map(|j| {
            let mut acc = 0.0;
            for (i, w) in weights.iter().enumerate() {
                acc += w * rows[(i, j)];
            }
            acc
        })
        .collect())
}

/// Sub-indices per pillar plus the pillars left without indicators.
#[derive(Debug, Clone, PartialEq)]
pub struct PillarIndices {
    pub scores: PillarScores,
    pub empty: Vec<String>,
}

fn pillar_rows(
    normalized: &NormalizedMatrix,
    schema: &IndicatorSchema,
) -> Result<Vec<(String, Vec<usize>)>, IndexError> {
    let mut groups: Vec<(String, Vec<usize>)> = schema
        .pillar_order()
        .iter()
        .map(|p| (p.clone(), Vec::new()))
        .collect();
    for (i, code) in normalized.indicator_codes.iter().enumerate() {
        let pillar = schema
            .pillar_of(code)
            .ok_or_else(|| IndexError::UnassignedIndicator(code.clone()))?;
        let slot = groups
            .iter_mut()
            .find(|(p, _)| p == pillar)
            .expect("schema pillars are listed in pillar_order");
        slot.1.push(i);
    }
    Ok(groups)
}

/// Pillar sub-indices.
///
/// In global mode each pillar keeps its slice of the global weighted sum, so
/// the pillar values of an entity add up to its index. In local mode every
/// pillar gets its own covariance, eigendecomposition and weights.
pub fn pillar_subindices(
    normalized: &NormalizedMatrix,
    weights: &[f64],
    schema: &IndicatorSchema,
    mode: PillarMode,
    options: &RunOptions,
) -> Result<PillarIndices, IndexError> {
    if weights.len() != normalized.values.rows() {
        return Err(IndexError::DimensionMismatch {
            expected: normalized.values.rows(),
            found: weights.len(),
        });
    }
    let m = normalized.entity_ids.len();
    let mut pillars = Vec::new();
    let mut empty = Vec::new();
    for (pillar, rows) in pillar_rows(normalized, schema)? {
        if rows.is_empty() {
            empty.push(pillar.clone());
            pillars.push((pillar, None));
            continue;
        }
        let values = match mode {
            PillarMode::Global => (0..m)
                .map(|j| {
                    let mut acc = 0.0;
                    for &i in &rows {
                        acc += weights[i] * normalized.values[(i, j)];
                    }
                    acc
                })
                .collect(),
            PillarMode::Local => {
                let x = normalized.values.select_rows(&rows);
                let (_, local_weights) =
                    decompose(&x, options).map_err(|e| IndexError::Pillar {
                        pillar: pillar.clone(),
                        source: Box::new(e),
                    })?;
                weighted_column_sums(&local_weights, &x)?
            }
        };
        pillars.push((pillar, Some(values)));
    }
    Ok(PillarIndices {
        scores: PillarScores {
            entity_ids: normalized.entity_ids.clone(),
            pillars,
        },
        empty,
    })
}

fn decompose(
    x: &Matrix,
    options: &RunOptions,
) -> Result<(EigenDecomposition, Vec<f64>), IndexError> {
    let cov = covariance_matrix(x, options.divisor).map_err(linalg("covariance"))?;
    let eig = jacobi_eigh(&cov, options.jacobi).map_err(linalg("eigendecomposition"))?;
    let w = effective_weights(&eig);
    Ok((eig, w))
}

/// Everything computed by one run of [`compute_competitiveness`].
#[derive(Debug, Clone, PartialEq)]
pub struct IndexReport {
    pub normalized: NormalizedMatrix,
    pub decomposition: EigenDecomposition,
    pub modified_scores: ModifiedScores,
    /// Aligned with `normalized.indicator_codes`.
    pub effective_weights: Vec<f64>,
    /// Aligned with `normalized.entity_ids`.
    pub index: Vec<f64>,
    pub pillars: PillarIndices,
    pub options: RunOptions,
}

/// One indicator's share of an entity's index.
#[derive(Debug, Clone, PartialEq)]
pub struct Contribution {
    pub indicator_code: String,
    pub pillar_code: String,
    pub normalized_value: f64,
    pub effective_weight: f64,
    pub contribution: f64,
}

impl IndexReport {
    pub fn entity_ids(&self) -> &[String] {
        &self.normalized.entity_ids
    }

    pub fn ranking(&self) -> Result<RankedTable, IndexError> {
        let table = assign_ranks(
            self.entity_ids()
                .iter()
                .cloned()
                .zip(self.index.iter().copied()),
            self.options.tie_policy,
        )?;
        Ok(table)
    }

    /// Per-indicator contributions `w_i x_ij`, largest first; equal
    /// contributions keep indicator order.
    pub fn contributions(
        &self,
        entity_id: &str,
        schema: &IndicatorSchema,
    ) -> Result<Vec<Contribution>, IndexError> {
        let j = self
            .entity_ids()
            .iter()
            .position(|e| e == entity_id)
            .ok_or_else(|| IndexError::UnknownEntity(entity_id.to_string()))?;
        let mut rows: Vec<Contribution> = self
            .normalized
            .indicator_codes
            .iter()
            .enumerate()
            .map(|(i, code)| {
                let x = self.normalized.values[(i, j)];
                let w = self.effective_weights[i];
                Ok(Contribution {
                    indicator_code: code.clone(),
                    pillar_code: schema
                        .pillar_of(code)
                        .ok_or_else(|| IndexError::UnassignedIndicator(code.clone()))?
                        .to_string(),
                    normalized_value: x,
                    effective_weight: w,
                    contribution: w * x,
                })
            })
            .collect::<Result<_, IndexError>>()?;
        rows.sort_by(|a, b| b.contribution.total_cmp(&a.contribution));
        Ok(rows)
    }
}

/// Normalize, diagonalise the normalized covariance, weight, aggregate, and
/// split into pillars.
pub fn compute_competitiveness(
    dataset: &Dataset,
    schema: &IndicatorSchema,
    options: &RunOptions,
) -> Result<IndexReport, IndexError> {
    let directions = dataset
        .indicator_codes
        .iter()
        .map(|code| {
            schema
                .get(code)
                .map(|e| e.direction)
                .ok_or_else(|| IndexError::UnassignedIndicator(code.clone()))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let normalized = normalize(
        dataset,
        &directions,
        &options.bounds,
        options.constant_policy,
    )?;
    if normalized.values.rows() == 0 {
        return Err(IndexError::AllIndicatorsDropped);
    }
    let (decomposition, effective_weights) = decompose(&normalized.values, options)?;
    let modified_scores = modified_scores(&decomposition.loadings, &normalized)?;
    let index = aggregate_index(&effective_weights, &normalized)?;
    let pillars = pillar_subindices(
        &normalized,
        &effective_weights,
        schema,
        options.pillar_mode,
        options,
    )?;
    Ok(IndexReport {
        normalized,
        decomposition,
        modified_scores,
        effective_weights,
        index,
        pillars,
        options: options.clone(),
    })
}
