//! Indicator schemas, entity × indicator datasets, and their text formats.
//!
//! Schema lines look like `pillar_code,indicator_code,direction[,label]`
//! with `inc`/`dec` directions and `#` comments. Dataset files are CSV with
//! an `entity_id` first header cell, one row per entity, and empty cells for
//! missing values.

use std::collections::{BTreeSet, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::linalg::Matrix;
use crate::options::{ConstantPolicy, NormalizationBounds, RunOptions};

/// Table of 34 indicators in five pillars (student body, research,
/// international activities, academic funds, academic staff).
pub const TABLE1_SCHEMA: &str = include_str!("../assets/table1_schema.csv");

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DatasetError {
    #[error("line {line}: malformed schema line")]
    MalformedLine { line: usize },
    #[error("line {line}: bad direction {token:?} (expected inc or dec)")]
    BadDirection { line: usize, token: String },
    #[error("duplicate indicator code {0}")]
    DuplicateIndicatorCode(String),
    #[error("schema has no indicators")]
    EmptySchema,
    #[error("input is empty")]
    EmptyInput,
    #[error("first header cell must be entity_id, found {0:?}")]
    BadHeader(String),
    #[error("duplicate column {0} in header")]
    DuplicateColumn(String),
    #[error("indicator {0} missing from header")]
    MissingColumn(String),
    #[error("line {line}: {message}")]
    MalformedRecord { line: usize, message: String },
    #[error("line {line}: entity id contains a comma")]
    CommaInEntityId { line: usize },
    #[error("duplicate entity id {0}")]
    DuplicateEntityId(String),
    #[error("line {line}: empty entity id")]
    EmptyEntityId { line: usize },
    #[error("line {line}: expected {expected} cells, found {found}")]
    RaggedRow {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}, column {column}: cannot parse {text:?} as a number")]
    UnparsableNumber {
        line: usize,
        column: String,
        text: String,
    },
    #[error("no entities remain after excluding those with missing values")]
    NoEntitiesRemain,
    #[error("at least two entities are required, {0} remain")]
    FewerThanTwoEntities(usize),
    #[error("constant indicators: {}", .0.join(", "))]
    ConstantIndicator(Vec<String>),
    #[error("indicator count {requested} does not match schema size {schema}")]
    ShapeMismatch { requested: usize, schema: usize },
    #[error("isotropic data needs a power-of-two entity count above {0}")]
    BadIsotropicShape(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Larger raw values are better.
    Increasing,
    /// Smaller raw values are better.
    Decreasing,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndicatorSpec {
    pub code: String,
    pub pillar: String,
    pub direction: Direction,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndicatorSchema {
    entries: Vec<IndicatorSpec>,
    pillar_order: Vec<String>,
}

impl IndicatorSchema {
    pub fn new(entries: Vec<IndicatorSpec>) -> Result<Self, DatasetError> {
        if entries.is_empty() {
            return Err(DatasetError::EmptySchema);
        }
        let mut seen = BTreeSet::new();
        let mut pillar_order: Vec<String> = Vec::new();
        for e in &entries {
            if !seen.insert(e.code.as_str()) {
                return Err(DatasetError::DuplicateIndicatorCode(e.code.clone()));
            }
            if !pillar_order.contains(&e.pillar) {
                pillar_order.push(e.pillar.clone());
            }
        }
        Ok(Self {
            entries,
            pillar_order,
        })
    }

    /// The built-in 34-indicator, five-pillar schema.
    pub fn table1() -> Self {
        parse_schema(TABLE1_SCHEMA).expect("built-in schema parses")
    }

    pub fn entries(&self) -> &[IndicatorSpec] {
        &self.entries
    }

    pub fn pillar_order(&self) -> &[String] {
        &self.pillar_order
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn codes(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.code.as_str())
    }

    pub fn get(&self, code: &str) -> Option<&IndicatorSpec> {
        self.entries.iter().find(|e| e.code == code)
    }

    pub fn pillar_of(&self, code: &str) -> Option<&str> {
        self.get(code).map(|e| e.pillar.as_str())
    }

    /// A schema with the same pillars, limited to the given codes (kept in
    /// schema order).
    pub fn restrict(&self, codes: &[String]) -> Result<Self, DatasetError> {
        let entries = self
            .entries
            .iter()
            .filter(|e| codes.contains(&e.code))
            .cloned()
            .collect();
        Self::new(entries)
    }
}

pub fn parse_schema(text: &str) -> Result<IndicatorSchema, DatasetError> {
    let mut entries = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let parts: Vec<&str> = trimmed.splitn(4, ',').map(str::trim).collect();
        if parts.len() < 3 || parts[0].is_empty() || parts[1].is_empty() {
            return Err(DatasetError::MalformedLine { line });
        }
        let direction = match parts[2] {
            "inc" => Direction::Increasing,
            "dec" => Direction::Decreasing,
            other => {
                return Err(DatasetError::BadDirection {
                    line,
                    token: other.to_string(),
                })
            }
        };
        entries.push(IndicatorSpec {
            code: parts[1].to_string(),
            pillar: parts[0].to_string(),
            direction,
            label: parts.get(3).copied().unwrap_or("").to_string(),
        });
    }
    IndicatorSchema::new(entries)
}

/// Raw indicator values: one row per indicator, one column per entity.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub entity_ids: Vec<String>,
    pub indicator_codes: Vec<String>,
    /// Missing cells hold 0.0; consult `missing`.
    pub values: Matrix,
    /// Row-major, same shape as `values`.
    pub missing: Vec<bool>,
}

impl Dataset {
    /// A dataset with no missing cells.
    pub fn complete(entity_ids: Vec<String>, indicator_codes: Vec<String>, values: Matrix) -> Self {
        assert_eq!(values.rows(), indicator_codes.len());
        assert_eq!(values.cols(), entity_ids.len());
        let missing = vec![false; values.rows() * values.cols()];
        Self {
            entity_ids,
            indicator_codes,
            values,
            missing,
        }
    }

    pub fn n_indicators(&self) -> usize {
        self.indicator_codes.len()
    }

    pub fn n_entities(&self) -> usize {
        self.entity_ids.len()
    }

    pub fn is_missing(&self, indicator: usize, entity: usize) -> bool {
        self.missing[indicator * self.n_entities() + entity]
    }

    pub fn has_missing(&self) -> bool {
        self.missing.iter().any(|&m| m)
    }

    pub fn entity_index(&self, id: &str) -> Option<usize> {
        self.entity_ids.iter().position(|e| e == id)
    }

    /// Keeps the listed entity columns, in the given order.
    pub fn select_entities(&self, cols: &[usize]) -> Dataset {
        let m = self.n_entities();
        let missing = (0..self.n_indicators())
            .flat_map(|i| cols.iter().map(move |&j| (i, j)))
            .map(|(i, j)| self.missing[i * m + j])
            .collect();
        Dataset {
            entity_ids: cols.iter().map(|&j| self.entity_ids[j].clone()).collect(),
            indicator_codes: self.indicator_codes.clone(),
            values: self.values.select_cols(cols),
            missing,
        }
    }

    /// Keeps the listed indicator rows, in the given order.
    pub fn select_indicators(&self, rows: &[usize]) -> Dataset {
        let m = self.n_entities();
        let missing = rows
            .iter()
            .flat_map(|&i| self.missing[i * m..(i + 1) * m].iter().copied())
            .collect();
        Dataset {
            entity_ids: self.entity_ids.clone(),
            indicator_codes: rows
                .iter()
                .map(|&i| self.indicator_codes[i].clone())
                .collect(),
            values: self.values.select_rows(rows),
            missing,
        }
    }

    /// Canonical CSV form; numbers use the shortest representation that
    /// parses back to the same `f64`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("entity_id");
        for code in &self.indicator_codes {
            out.push(',');
            out.push_str(code);
        }
        out.push('\n');
        for (j, id) in self.entity_ids.iter().enumerate() {
            out.push_str(id);
            for i in 0..self.n_indicators() {
                out.push(',');
                if !self.is_missing(i, j) {
                    out.push_str(&format!("{}", self.values[(i, j)]));
                }
            }
            out.push('\n');
        }
        out
    }
}

/// A parsed dataset plus header columns that the schema does not use.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedDataset {
    pub dataset: Dataset,
    pub ignored_columns: Vec<String>,
}

/// Dot decimal, optional sign and exponent, no thousands separators.
fn parse_number(text: &str) -> Option<f64> {
    let ok = !text.is_empty()
        && text
            .bytes()
            .all(|b| b.is_ascii_digit() || matches!(b, b'.' | b'e' | b'E' | b'+' | b'-'))
        && text.bytes().any(|b| b.is_ascii_digit());
    if !ok {
        return None;
    }
    text.parse::<f64>().ok().filter(|v| v.is_finite())
}

fn invalid_record(err: csv::Error) -> DatasetError {
    let line = err.position().map_or(0, |p| p.line() as usize);
    DatasetError::MalformedRecord {
        line,
        message: err.to_string(),
    }
}

/// Reads a dataset CSV and aligns its columns to the schema's indicator
/// order. Cells may be quoted, but a quoted comma inside a number is still
/// rejected by the number grammar.
pub fn parse_dataset(text: &str, schema: &IndicatorSchema) -> Result<ParsedDataset, DatasetError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut records = reader.records();

    let header = match records.next() {
        Some(r) => r.map_err(invalid_record)?,
        None => return Err(DatasetError::EmptyInput),
    };
    let header: Vec<String> = header.iter().map(str::to_string).collect();
    if header[0] != "entity_id" {
        return Err(DatasetError::BadHeader(header[0].clone()));
    }
    let mut column_of: HashMap<&str, usize> = HashMap::new();
    for (c, name) in header.iter().enumerate().skip(1) {
        if column_of.insert(name, c).is_some() {
            return Err(DatasetError::DuplicateColumn(name.clone()));
        }
    }
    let mut source_cols = Vec::with_capacity(schema.len());
    for code in schema.codes() {
        match column_of.get(code) {
            Some(&c) => source_cols.push(c),
            None => return Err(DatasetError::MissingColumn(code.to_string())),
        }
    }
    let ignored_columns = header
        .iter()
        .skip(1)
        .filter(|h| schema.get(h).is_none())
        .cloned()
        .collect();

    let mut entity_ids: Vec<String> = Vec::new();
    let mut seen = BTreeSet::new();
    // Entity-major while reading; transposed afterwards.
    let mut cells: Vec<Option<f64>> = Vec::new();
    for record in records {
        let record = record.map_err(invalid_record)?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        if record.len() != header.len() {
            return Err(DatasetError::RaggedRow {
                line,
                expected: header.len(),
                found: record.len(),
            });
        }
        let id = &record[0];
        if id.is_empty() {
            return Err(DatasetError::EmptyEntityId { line });
        }
        if id.contains(',') {
            return Err(DatasetError::CommaInEntityId { line });
        }
        if !seen.insert(id.to_string()) {
            return Err(DatasetError::DuplicateEntityId(id.to_string()));
        }
        entity_ids.push(id.to_string());
        for &c in &source_cols {
            let cell = &record[c];
            if cell.is_empty() {
                cells.push(None);
            } else {
                let v = parse_number(cell).ok_or_else(|| DatasetError::UnparsableNumber {
                    line,
                    column: header[c].clone(),
                    text: cell.to_string(),
                })?;
                cells.push(Some(v));
            }
        }
    }

    let (n, m) = (schema.len(), entity_ids.len());
    let mut values = Matrix::zeros(n, m);
    let mut missing = vec![false; n * m];
    for j in 0..m {
        for i in 0..n {
            match cells[j * n + i] {
                Some(v) => values[(i, j)] = v,
                None => missing[i * m + j] = true,
            }
        }
    }
    Ok(ParsedDataset {
        dataset: Dataset {
            entity_ids,
            indicator_codes: schema.codes().map(str::to_string).collect(),
            values,
            missing,
        },
        ignored_columns,
    })
}

/// Result of [`validate`]: the filtered dataset and what was flagged.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub dataset: Dataset,
    /// Entities dropped for having at least one missing value, in input order.
    pub excluded: Vec<String>,
    /// Indicators that are constant across the surviving entities.
    pub constant_indicators: Vec<String>,
}

/// Excludes entities with missing values and flags constant indicators.
///
/// Constant indicators are fatal only under the `error` policy with sample
/// bounds, because explicit bounds keep the normalization well defined.
pub fn validate(
    dataset: &Dataset,
    _schema: &IndicatorSchema,
    options: &RunOptions,
) -> Result<ValidationReport, DatasetError> {
    let n = dataset.n_indicators();
    let mut keep = Vec::new();
    let mut excluded = Vec::new();
    for (j, id) in dataset.entity_ids.iter().enumerate() {
        if (0..n).any(|i| dataset.is_missing(i, j)) {
            excluded.push(id.clone());
        } else {
            keep.push(j);
        }
    }
    match keep.len() {
        0 => return Err(DatasetError::NoEntitiesRemain),
        1 => return Err(DatasetError::FewerThanTwoEntities(1)),
        _ => {}
    }
    let filtered = dataset.select_entities(&keep);
    let constant_indicators: Vec<String> = (0..n)
        .filter(|&i| {
            let row = filtered.values.row(i);
            row.iter().all(|v| *v == row[0])
        })
        .map(|i| filtered.indicator_codes[i].clone())
        .collect();
    if !constant_indicators.is_empty()
        && options.constant_policy == ConstantPolicy::Error
        && options.bounds == NormalizationBounds::Sample
    {
        return Err(DatasetError::ConstantIndicator(constant_indicators));
    }
    Ok(ValidationReport {
        dataset: filtered,
        excluded,
        constant_indicators,
    })
}

fn entity_ids(m: usize) -> Vec<String> {
    let width = m.to_string().len().max(4);
    (1..=m).map(|j| format!("u{j:0width$}")).collect()
}

/// Approximately standard normal draw (Irwin-Hall with twelve uniforms).
/// Pure arithmetic, so results do not depend on the platform's libm.
fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let mut s = 0.0;
    for _ in 0..12 {
        s += rng.gen::<f64>();
    }
    s - 6.0
}

/// Seeded synthetic data: each pillar has a latent factor, all indicators
/// share a weaker global factor, and every indicator adds its own noise.
/// Values are rounded to two decimals.
pub fn synthesize_dataset(
    n: usize,
    m: usize,
    seed: u64,
    schema: &IndicatorSchema,
) -> Result<Dataset, DatasetError> {
    if n != schema.len() {
        return Err(DatasetError::ShapeMismatch {
            requested: n,
            schema: schema.len(),
        });
    }
    if m < 2 {
        return Err(DatasetError::FewerThanTwoEntities(m));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pillars = schema.pillar_order();

    let global: Vec<f64> = (0..m).map(|_| gaussian(&mut rng)).collect();
    let factors: Vec<Vec<f64>> = pillars
        .iter()
        .map(|_| (0..m).map(|_| gaussian(&mut rng)).collect())
        .collect();

    let mut values = Matrix::zeros(n, m);
    for (i, spec) in schema.entries().iter().enumerate() {
        let p = pillars
            .iter()
            .position(|p| *p == spec.pillar)
            .expect("pillar listed");
        let pillar_loading = rng.gen_range(0.4..0.9);
        let global_loading = rng.gen_range(0.0..0.4);
        let noise = rng.gen_range(0.3..0.8);
        let offset = rng.gen_range(10.0..100.0);
        let scale = rng.gen_range(1.0..20.0);
        let sign = match spec.direction {
            Direction::Increasing => 1.0,
            Direction::Decreasing => -1.0,
        };
        for j in 0..m {
            let z = pillar_loading * factors[p][j]
                + global_loading * global[j]
                + noise * gaussian(&mut rng);
            let x = offset + sign * scale * z;
            values[(i, j)] = (x * 100.0).round() / 100.0;
        }
    }
    Ok(Dataset::complete(
        entity_ids(m),
        schema.codes().map(str::to_string).collect(),
        values,
    ))
}

/// 0/1 data whose indicator rows are distinct non-constant Walsh functions,
/// so the rows are mutually orthogonal with equal variance and the
/// normalized covariance is a multiple of the identity. `m` must be a power
/// of two greater than the schema size.
pub fn synthesize_isotropic(m: usize, schema: &IndicatorSchema) -> Result<Dataset, DatasetError> {
    let n = schema.len();
    if !m.is_power_of_two() || m <= n {
        return Err(DatasetError::BadIsotropicShape(n));
    }
    let mut values = Matrix::zeros(n, m);
    for i in 0..n {
        for j in 0..m {
            let parity = ((i + 1) & j).count_ones() % 2;
            values[(i, j)] = if parity == 0 { 1.0 } else { 0.0 };
        }
    }
    Ok(Dataset::complete(
        entity_ids(m),
        schema.codes().map(str::to_string).collect(),
        values,
    ))
}
