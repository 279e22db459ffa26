//! Datasets and CSV ingestion.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::io::Read;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ColumnRole {
    FeatureNumeric,
    FeatureCategorical,
    Response,
    Ignore,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub role: ColumnRole,
    /// Observed levels in first-appearance order; empty unless categorical.
    pub levels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColumnSchema {
    columns: Vec<Column>,
    feature_names: Vec<String>,
}

impl ColumnSchema {
    pub fn new(columns: Vec<Column>) -> Result<Self> {
        let responses = columns
            .iter()
            .filter(|c| c.role == ColumnRole::Response)
            .count();
        if responses != 1 {
            return Err(Error::Config(format!(
                "schema needs exactly one response column, found {responses}"
            )));
        }
        for c in &columns {
            let unique: HashSet<&String> = c.levels.iter().collect();
            if unique.len() != c.levels.len() {
                return Err(Error::Config(format!(
                    "duplicate categorical levels in `{}`",
                    c.name
                )));
            }
        }
        let mut feature_names: Vec<String> = columns
            .iter()
            .filter(|c| c.role == ColumnRole::FeatureNumeric)
            .map(|c| c.name.clone())
            .collect();
        for c in columns
            .iter()
            .filter(|c| c.role == ColumnRole::FeatureCategorical)
        {
            feature_names.extend(c.levels.iter().map(|l| format!("{}={}", c.name, l)));
        }
        Ok(Self {
            columns,
            feature_names,
        })
    }

    /// Schema of `n_features` anonymous numeric features `x0..` plus response `y`.
    pub fn numeric(n_features: usize) -> Self {
        let mut columns: Vec<Column> = (0..n_features)
            .map(|j| Column {
                name: format!("x{j}"),
                role: ColumnRole::FeatureNumeric,
                levels: Vec::new(),
            })
            .collect();
        columns.push(Column {
            name: "y".into(),
            role: ColumnRole::Response,
            levels: Vec::new(),
        });
        Self::new(columns).expect("valid by construction")
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn response_name(&self) -> &str {
        &self
            .columns
            .iter()
            .find(|c| c.role == ColumnRole::Response)
            .expect("one response column")
            .name
    }

    /// Names of the encoded features, in feature-vector order.
    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn feature_count(&self) -> usize {
        self.feature_names.len()
    }
}

/// Immutable table of feature rows and responses.
///
/// `origin` maps each row back to its position in the dataset it was first
/// loaded as; subsets keep those ids so index provenance survives nesting.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    rows: Vec<Vec<f64>>,
    responses: Vec<f64>,
    schema: ColumnSchema,
    ordered: bool,
    origin: Vec<usize>,
}

impl Dataset {
    pub fn new(
        rows: Vec<Vec<f64>>,
        responses: Vec<f64>,
        schema: ColumnSchema,
        ordered: bool,
    ) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if rows.len() != responses.len() {
            return Err(Error::Shape(format!(
                "{} rows but {} responses",
                rows.len(),
                responses.len()
            )));
        }
        let p = schema.feature_count();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != p {
                return Err(Error::DimensionMismatch {
                    expected: p,
                    got: row.len(),
                });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::Domain(format!("non-finite feature in row {i}")));
            }
        }
        if let Some(i) = responses.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite response in row {i}")));
        }
        let origin = (0..rows.len()).collect();
        Ok(Self {
            rows,
            responses,
            schema,
            ordered,
            origin,
        })
    }

    /// Numeric-only dataset in the given (chronological) order.
    pub fn from_rows(rows: Vec<Vec<f64>>, responses: Vec<f64>) -> Result<Self> {
        let p = rows.first().map_or(0, Vec::len);
        Self::new(rows, responses, ColumnSchema::numeric(p), true)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn feature_count(&self) -> usize {
        self.schema.feature_count()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }

    pub fn responses(&self) -> &[f64] {
        &self.responses
    }

    pub fn schema(&self) -> &ColumnSchema {
        &self.schema
    }

    pub fn is_ordered(&self) -> bool {
        self.ordered
    }

    /// Original row id of every row.
    pub fn origin(&self) -> &[usize] {
        &self.origin
    }

    /// Rows at `indices`, in that order. Duplicates are kept, so a bootstrap
    /// multiset yields a dataset with repeated rows.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let ordered = self.ordered && indices.windows(2).all(|w| w[0] < w[1]);
        Dataset {
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            responses: indices.iter().map(|&i| self.responses[i]).collect(),
            schema: self.schema.clone(),
            ordered,
            origin: indices.iter().map(|&i| self.origin[i]).collect(),
        }
    }
}

/// Ingestion settings, normally read from a TOML file:
///
/// ```toml
/// response = "bug"
/// order_by = "version"
/// categorical = ["arch"]
/// ignore = ["name"]
/// ```
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IngestConfig {
    pub response: String,
    #[serde(default)]
    pub order_by: Option<String>,
    #[serde(default)]
    pub categorical: Vec<String>,
    #[serde(default)]
    pub ignore: Vec<String>,
    /// Label used in report tables; defaults to the data file stem.
    #[serde(default)]
    pub project: Option<String>,
}

impl IngestConfig {
    pub fn new(response: impl Into<String>) -> Self {
        Self {
            response: response.into(),
            ..Self::default()
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text)
    }
}

pub fn load_csv(path: &Path, config: &IngestConfig) -> Result<Dataset> {
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_csv(file, config)
}

/// Parses a headed, comma-delimited CSV.
///
/// The ordering column (if any) only sorts rows and is never a feature. Ties
/// keep file order. Columns not named as response, ordering, categorical or
/// ignored are numeric features.
pub fn read_csv<R: Read>(reader: R, config: &IngestConfig) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .delimiter(b',')
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();

    let find = |name: &str| -> Result<usize> {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let response_col = find(&config.response)?;
    let order_col = config.order_by.as_deref().map(find).transpose()?;
    let categorical: HashSet<usize> = config
        .categorical
        .iter()
        .map(|c| find(c))
        .collect::<Result<_>>()?;
    let ignored: HashSet<usize> = config
        .ignore
        .iter()
        .map(|c| find(c))
        .collect::<Result<_>>()?;

    let roles: Vec<ColumnRole> = (0..header.len())
        .map(|j| {
            if j == response_col {
                ColumnRole::Response
            } else if Some(j) == order_col || ignored.contains(&j) {
                ColumnRole::Ignore
            } else if categorical.contains(&j) {
                ColumnRole::FeatureCategorical
            } else {
                ColumnRole::FeatureNumeric
            }
        })
        .collect();

    let records: Vec<csv::StringRecord> = rdr.records().collect::<std::result::Result<_, _>>()?;
    if records.is_empty() {
        return Err(Error::EmptyDataset);
    }

    // Row order first, so categorical levels are recorded in the order the
    // (sorted) dataset presents them.
    let mut order: Vec<usize> = (0..records.len()).collect();
    if let Some(oc) = order_col {
        let keys: Vec<&str> = records
            .iter()
            .enumerate()
            .map(|(r, rec)| cell(rec, oc, &header, r))
            .collect::<Result<_>>()?;
        let numeric: Option<Vec<f64>> = keys.iter().map(|k| k.parse::<f64>().ok()).collect();
        match numeric {
            Some(nums) if nums.iter().all(|v| v.is_finite()) => {
                order.sort_by(|&a, &b| nums[a].partial_cmp(&nums[b]).unwrap_or(Ordering::Equal))
            }
            _ => order.sort_by(|&a, &b| keys[a].cmp(keys[b])),
        }
    }

    let mut levels: Vec<Vec<String>> = vec![Vec::new(); header.len()];
    let mut numeric_values: Vec<Vec<f64>> = Vec::with_capacity(records.len());
    let mut level_index: Vec<Vec<usize>> = Vec::with_capacity(records.len());
    let mut responses = Vec::with_capacity(records.len());

    for &r in &order {
        let rec = &records[r];
        let mut nums = Vec::new();
        let mut cats = Vec::new();
        for (j, role) in roles.iter().enumerate() {
            match role {
                ColumnRole::Ignore => {}
                ColumnRole::Response => responses.push(parse_num(rec, j, &header, r)?),
                ColumnRole::FeatureNumeric => nums.push(parse_num(rec, j, &header, r)?),
                ColumnRole::FeatureCategorical => {
                    let v = cell(rec, j, &header, r)?;
                    let idx = match levels[j].iter().position(|l| l == v) {
                        Some(i) => i,
                        None => {
                            levels[j].push(v.to_string());
                            levels[j].len() - 1
                        }
                    };
                    cats.push(idx);
                }
            }
        }
        numeric_values.push(nums);
        level_index.push(cats);
    }

    let cat_cols: Vec<usize> = (0..header.len())
        .filter(|&j| roles[j] == ColumnRole::FeatureCategorical)
        .collect();
    let rows: Vec<Vec<f64>> = numeric_values
        .into_iter()
        .zip(level_index)
        .map(|(mut row, cats)| {
            for (k, &j) in cat_cols.iter().enumerate() {
                let base = row.len();
                row.resize(base + levels[j].len(), 0.0);
                row[base + cats[k]] = 1.0;
            }
            row
        })
        .collect();

    let columns = header
        .iter()
        .enumerate()
        .map(|(j, name)| Column {
            name: name.clone(),
            role: roles[j],
            levels: std::mem::take(&mut levels[j]),
        })
        .collect();
    let schema = ColumnSchema::new(columns)?;
    Dataset::new(rows, responses, schema, true)
}

fn cell<'a>(rec: &'a csv::StringRecord, j: usize, header: &[String], row: usize) -> Result<&'a str> {
    let v = rec.get(j).map(str::trim).unwrap_or("");
    if v.is_empty() {
        return Err(Error::MissingValue {
            column: header[j].clone(),
            row,
        });
    }
    Ok(v)
}

fn parse_num(rec: &csv::StringRecord, j: usize, header: &[String], row: usize) -> Result<f64> {
    let v = cell(rec, j, header, row)?;
    match v.parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => Err(Error::NonNumeric {
            column: header[j].clone(),
            row,
            value: v.to_string(),
        }),
    }
}
