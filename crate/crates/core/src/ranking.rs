//! League-table style rankings over entity scores.

use std::cmp::Ordering;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RankingError {
    #[error("score for {0} is not finite")]
    NonFiniteScore(String),
    #[error("k = {k} exceeds the {m} ranked entities")]
    KTooLarge { k: usize, m: usize },
    #[error("k must be positive")]
    ZeroK,
    #[error("unknown pillar {0}")]
    UnknownPillar(String),
}

/// How equal scores are ranked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TiePolicy {
    /// "1224": tied rows share the best rank, and the next rank skips ahead.
    #[default]
    Competition,
    /// Strict 1..m in the tie-broken row order.
    Ordinal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedRow {
    pub rank: usize,
    pub entity_id: String,
    pub score: f64,
}

/// Rows sorted by descending score, ties by ascending entity id (bytewise).
#[derive(Debug, Clone, PartialEq)]
pub struct RankedTable {
    pub rows: Vec<RankedRow>,
    pub tie_policy: TiePolicy,
}

impl RankedTable {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn truncate(mut self, k: usize) -> Self {
        self.rows.truncate(k);
        self
    }
}

pub fn assign_ranks<S, I>(scores: I, tie_policy: TiePolicy) -> Result<RankedTable, RankingError>
where
    S: Into<String>,
    I: IntoIterator<Item = (S, f64)>,
{
    let mut rows: Vec<(String, f64)> = Vec::new();
    for (id, score) in scores {
        let id = id.into();
        if !score.is_finite() {
            return Err(RankingError::NonFiniteScore(id));
        }
        rows.push((id, score));
    }
    rows.sort_by(|(ia, sa), (ib, sb)| {
        sb.partial_cmp(sa)
            .unwrap_or(Ordering::Equal)
            .then_with(|| ia.as_bytes().cmp(ib.as_bytes()))
    });

    let mut ranked = Vec::with_capacity(rows.len());
    let mut prev: Option<(f64, usize)> = None;
    for (pos, (entity_id, score)) in rows.into_iter().enumerate() {
        let rank = match (tie_policy, prev) {
            (TiePolicy::Competition, Some((s, r))) if s == score => r,
            _ => pos + 1,
        };
        prev = Some((score, rank));
        ranked.push(RankedRow {
            rank,
            entity_id,
            score,
        });
    }
    Ok(RankedTable {
        rows: ranked,
        tie_policy,
    })
}

/// First `k` and last `k` rows of the table, each in table order.
pub fn top_bottom(
    table: &RankedTable,
    k: usize,
) -> Result<(Vec<RankedRow>, Vec<RankedRow>), RankingError> {
    let m = table.len();
    if k == 0 {
        return Err(RankingError::ZeroK);
    }
    if k > m {
        return Err(RankingError::KTooLarge { k, m });
    }
    Ok((table.rows[..k].to_vec(), table.rows[m - k..].to_vec()))
}

/// Scores per pillar, each aligned with `entity_ids`. A pillar whose
/// indicators were all dropped has no scores.
#[derive(Debug, Clone, PartialEq)]
pub struct PillarScores {
    pub entity_ids: Vec<String>,
    pub pillars: Vec<(String, Option<Vec<f64>>)>,
}

impl PillarScores {
    pub fn get(&self, pillar: &str) -> Option<&Option<Vec<f64>>> {
        self.pillars
            .iter()
            .find(|(p, _)| p == pillar)
            .map(|(_, v)| v)
    }
}

/// Top `k` rows of the ranking on one pillar's scores.
pub fn pillar_leaders(
    scores: &PillarScores,
    pillar: &str,
    k: usize,
    tie_policy: TiePolicy,
) -> Result<RankedTable, RankingError> {
    let values = match scores.get(pillar) {
        Some(Some(v)) => v,
        _ => return Err(RankingError::UnknownPillar(pillar.to_string())),
    };
    if k == 0 {
        return Err(RankingError::ZeroK);
    }
    if k > values.len() {
        return Err(RankingError::KTooLarge { k, m: values.len() });
    }
    let table = assign_ranks(
        scores
            .entity_ids
            .iter()
            .cloned()
            .zip(values.iter().copied()),
        tie_policy,
    )?;
    Ok(table.truncate(k))
}
