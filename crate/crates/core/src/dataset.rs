//! Observational data: schema, CSV ingestion, standardization and the
//! per-family sufficient statistics consumed by the scores.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::io::Read;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::error::{Error, Result};
use crate::graph::{NodeSet, MAX_NODES};

/// Default number of equal-frequency bins used when a continuous parent feeds
/// a discrete child.
pub const DEFAULT_BINS: usize = 3;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed CSV: {0}")]
    Csv(String),
    #[error("header mismatch: {0}")]
    Header(String),
    #[error("row {row}, column {column}: missing value")]
    Missing { row: usize, column: String },
    #[error("row {row}, column {column}: cannot parse `{value}`")]
    Parse {
        row: usize,
        column: String,
        value: String,
    },
    #[error("row {row}, column {column}: value {value} outside [0, {cardinality})")]
    OutOfRange {
        row: usize,
        column: String,
        value: f64,
        cardinality: usize,
    },
    #[error("dataset must contain N >= 1 rows")]
    Empty,
    #[error("column {0} has zero variance and cannot be standardized")]
    Degenerate(String),
    #[error("dataset is already standardized")]
    AlreadyStandardized,
    #[error("invalid schema: {0}")]
    Schema(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Continuous,
    /// Categorical with the given cardinality; cells are encoded `0..k`.
    Discrete(usize),
}

impl ColumnKind {
    pub fn is_discrete(self) -> bool {
        matches!(self, ColumnKind::Discrete(_))
    }

    pub fn cardinality(self) -> Option<usize> {
        match self {
            ColumnKind::Discrete(k) => Some(k),
            ColumnKind::Continuous => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Quality,
    Intervention,
    #[default]
    Other,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnMeta {
    pub name: String,
    pub kind: ColumnKind,
    #[serde(default)]
    pub role: Role,
}

impl ColumnMeta {
    pub fn new(name: impl Into<String>, kind: ColumnKind, role: Role) -> Self {
        ColumnMeta {
            name: name.into(),
            kind,
            role,
        }
    }

    pub fn continuous(name: impl Into<String>) -> Self {
        Self::new(name, ColumnKind::Continuous, Role::Other)
    }

    pub fn discrete(name: impl Into<String>, k: usize) -> Self {
        Self::new(name, ColumnKind::Discrete(k), Role::Other)
    }

    pub fn with_role(mut self, role: Role) -> Self {
        self.role = role;
        self
    }
}

pub fn validate_schema(schema: &[ColumnMeta]) -> Result<(), DataError> {
    if schema.is_empty() || schema.len() > MAX_NODES {
        return Err(DataError::Schema(format!(
            "schema must have 1..={MAX_NODES} columns, got {}",
            schema.len()
        )));
    }
    let mut seen = HashSet::new();
    for c in schema {
        if !seen.insert(c.name.as_str()) {
            return Err(DataError::Schema(format!("duplicate column name `{}`", c.name)));
        }
        if let ColumnKind::Discrete(k) = c.kind {
            if k < 2 {
                return Err(DataError::Schema(format!(
                    "discrete column `{}` needs cardinality >= 2, got {k}",
                    c.name
                )));
            }
        }
    }
    Ok(())
}

/// Mean and SD used to z-score a continuous column.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColumnScale {
    pub mean: f64,
    pub sd: f64,
}

/// Fully observed N×d table, stored column-major.
#[derive(Debug, Clone)]
pub struct Dataset {
    schema: Vec<ColumnMeta>,
    columns: Vec<Vec<f64>>,
    n: usize,
    standardized: bool,
    scales: Vec<Option<ColumnScale>>,
    fingerprint: u64,
}

impl Dataset {
    /// Builds a dataset from column vectors, validating kinds and ranges.
    pub fn from_columns(schema: Vec<ColumnMeta>, columns: Vec<Vec<f64>>) -> Result<Self> {
        validate_schema(&schema)?;
        if columns.len() != schema.len() {
            return Err(Error::invalid(format!(
                "{} columns supplied for a schema of {}",
                columns.len(),
                schema.len()
            )));
        }
        let n = columns[0].len();
        if n == 0 {
            return Err(DataError::Empty.into());
        }
        for (c, col) in columns.iter().enumerate() {
            if col.len() != n {
                return Err(Error::invalid(format!(
                    "column {} has {} rows, expected {n}",
                    schema[c].name,
                    col.len()
                )));
            }
            for (r, &v) in col.iter().enumerate() {
                check_cell(&schema[c], r + 1, v)?;
            }
        }
        let d = schema.len();
        Ok(Self::assemble(schema, columns, false, vec![None; d]))
    }

    fn assemble(
        schema: Vec<ColumnMeta>,
        columns: Vec<Vec<f64>>,
        standardized: bool,
        scales: Vec<Option<ColumnScale>>,
    ) -> Self {
        let n = columns[0].len();
        let fingerprint = fingerprint(&schema, &columns, standardized);
        Dataset {
            schema,
            columns,
            n,
            standardized,
            scales,
            fingerprint,
        }
    }

    /// Reads a headered, comma-delimited CSV. Header names may appear in any
    /// order; columns are rearranged into schema order.
    pub fn load_csv(path: impl AsRef<Path>, schema: Vec<ColumnMeta>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|source| DataError::Read {
            path: path.display().to_string(),
            source,
        })?;
        Self::read_csv(file, schema)
    }

    pub fn read_csv<R: Read>(reader: R, schema: Vec<ColumnMeta>) -> Result<Self> {
        validate_schema(&schema)?;
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let header = rdr
            .headers()
            .map_err(|e| DataError::Csv(e.to_string()))?
            .clone();
        let names: Vec<&str> = header.iter().collect();
        if names.len() != schema.len() {
            return Err(DataError::Header(format!(
                "file has {} columns, schema has {}",
                names.len(),
                schema.len()
            ))
            .into());
        }
        // file position of each schema column
        let mut position = Vec::with_capacity(schema.len());
        for c in &schema {
            let pos = names.iter().position(|h| *h == c.name).ok_or_else(|| {
                DataError::Header(format!("column `{}` not found in header", c.name))
            })?;
            position.push(pos);
        }
        let mut columns = vec![Vec::new(); schema.len()];
        for (r, rec) in rdr.records().enumerate() {
            let row = r + 1;
            let rec = rec.map_err(|e| DataError::Csv(e.to_string()))?;
            for (c, meta) in schema.iter().enumerate() {
                let cell = rec.get(position[c]).unwrap_or("");
                if cell.is_empty() {
                    return Err(DataError::Missing {
                        row,
                        column: meta.name.clone(),
                    }
                    .into());
                }
                let v: f64 = cell.parse().map_err(|_| DataError::Parse {
                    row,
                    column: meta.name.clone(),
                    value: cell.to_string(),
                })?;
                check_cell(meta, row, v)?;
                columns[c].push(v);
            }
        }
        if columns[0].is_empty() {
            return Err(DataError::Empty.into());
        }
        let d = schema.len();
        Ok(Self::assemble(schema, columns, false, vec![None; d]))
    }

    /// CSV text with a header row; floats use the shortest representation
    /// that parses back to the identical bits.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        let names: Vec<&str> = self.schema.iter().map(|c| c.name.as_str()).collect();
        out.push_str(&names.join(","));
        out.push('\n');
        for r in 0..self.n {
            for c in 0..self.d() {
                if c > 0 {
                    out.push(',');
                }
                let _ = write!(out, "{}", self.columns[c][r]);
            }
            out.push('\n');
        }
        out
    }

    /// Z-scores every continuous column with its sample mean and (n−1) SD.
    /// Discrete columns are left untouched.
    pub fn standardize(&self) -> Result<Dataset> {
        if self.standardized {
            return Err(DataError::AlreadyStandardized.into());
        }
        let mut columns = self.columns.clone();
        let mut scales = vec![None; self.d()];
        for (c, meta) in self.schema.iter().enumerate() {
            if meta.kind.is_discrete() {
                continue;
            }
            let col = &self.columns[c];
            let (mean, var) = mean_var(col);
            let sd = var.sqrt();
            if !(sd > 0.0) || !sd.is_finite() {
                return Err(DataError::Degenerate(meta.name.clone()).into());
            }
            columns[c] = col.iter().map(|x| (x - mean) / sd).collect();
            scales[c] = Some(ColumnScale { mean, sd });
        }
        Ok(Self::assemble(self.schema.clone(), columns, true, scales))
    }

    /// Same data with the role of column `c` replaced.
    pub fn with_role(&self, c: usize, role: Role) -> Result<Dataset> {
        self.check_node(c)?;
        let mut ds = self.clone();
        ds.schema[c].role = role;
        Ok(ds)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.schema.len()
    }

    pub fn schema(&self) -> &[ColumnMeta] {
        &self.schema
    }

    pub fn meta(&self, c: usize) -> &ColumnMeta {
        &self.schema[c]
    }

    pub fn kind(&self, c: usize) -> ColumnKind {
        self.schema[c].kind
    }

    pub fn column(&self, c: usize) -> &[f64] {
        &self.columns[c]
    }

    pub fn value(&self, row: usize, c: usize) -> f64 {
        self.columns[c][row]
    }

    pub fn is_standardized(&self) -> bool {
        self.standardized
    }

    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    pub fn scale(&self, c: usize) -> Option<ColumnScale> {
        self.scales[c]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.schema.iter().position(|c| c.name == name)
    }

    pub fn all_discrete(&self) -> bool {
        self.schema.iter().all(|c| c.kind.is_discrete())
    }

    pub fn all_continuous(&self) -> bool {
        self.schema.iter().all(|c| !c.kind.is_discrete())
    }

    /// Converts a value in the column's original units to the units the
    /// models are fitted in.
    pub fn to_model_units(&self, c: usize, v: f64) -> f64 {
        match self.scales[c] {
            Some(s) => (v - s.mean) / s.sd,
            None => v,
        }
    }

    pub fn from_model_units(&self, c: usize, v: f64) -> f64 {
        match self.scales[c] {
            Some(s) => s.mean + s.sd * v,
            None => v,
        }
    }

    /// Multiplier turning a model-unit slope of `y` on `x` into original
    /// units.
    pub fn slope_to_original(&self, x: usize, y: usize) -> f64 {
        let sx = self.scales[x].map_or(1.0, |s| s.sd);
        let sy = self.scales[y].map_or(1.0, |s| s.sd);
        sy / sx
    }

    pub fn check_node(&self, c: usize) -> Result<()> {
        if c >= self.d() {
            return Err(Error::invalid(format!(
                "column index {c} out of range for {} columns",
                self.d()
            )));
        }
        Ok(())
    }

    /// Equal-frequency cut points splitting column `c` into `bins` groups.
    pub fn bin_edges(&self, c: usize, bins: usize) -> Vec<f64> {
        let mut sorted = self.columns[c].clone();
        sorted.sort_by(f64::total_cmp);
        (1..bins)
            .map(|k| sorted[(k * self.n / bins).min(self.n - 1)])
            .collect()
    }

    /// Number of categories column `c` takes when used as a discrete parent.
    pub fn discrete_arity(&self, c: usize, bins: usize) -> usize {
        self.kind(c).cardinality().unwrap_or(bins)
    }

    /// Per-row categorical codes of column `c`; continuous columns are binned.
    pub fn codes(&self, c: usize, bins: usize) -> Vec<usize> {
        match self.kind(c) {
            ColumnKind::Discrete(_) => self.columns[c].iter().map(|&v| v as usize).collect(),
            ColumnKind::Continuous => {
                let edges = self.bin_edges(c, bins);
                self.columns[c].iter().map(|&v| bin_of(&edges, v)).collect()
            }
        }
    }

    /// Mixed-radix configuration index of `set` for every row; the lowest
    /// index in `set` varies fastest. Returns the per-member arities too.
    pub fn configurations(&self, set: NodeSet, bins: usize) -> (Vec<usize>, Vec<usize>) {
        let mut idx = vec![0usize; self.n];
        let mut stride = 1usize;
        let mut arities = Vec::with_capacity(set.len());
        for p in set.iter() {
            let k = self.discrete_arity(p, bins);
            for (slot, code) in idx.iter_mut().zip(self.codes(p, bins)) {
                *slot += code * stride;
            }
            stride *= k;
            arities.push(k);
        }
        (idx, arities)
    }

    /// Design features for a continuous child with the given parents.
    pub fn gaussian_features(&self, parents: NodeSet) -> Vec<Feature> {
        let mut features = Vec::new();
        for p in parents.iter() {
            match self.kind(p) {
                ColumnKind::Continuous => features.push(Feature::Continuous(p)),
                ColumnKind::Discrete(k) => {
                    features.extend((1..k).map(|level| Feature::Indicator { column: p, level }))
                }
            }
        }
        features
    }

    /// Exact sufficient statistics for the family `(target, parents)`.
    pub fn sufficient_stats(&self, target: usize, parents: NodeSet, bins: usize) -> Result<NodeStats> {
        self.check_node(target)?;
        if let Some(m) = parents.max() {
            self.check_node(m)?;
        }
        if parents.contains(target) {
            return Err(Error::contract(format!(
                "target {target} cannot be its own parent"
            )));
        }
        match self.kind(target) {
            ColumnKind::Continuous => {
                let features = self.gaussian_features(parents);
                let p = features.len();
                let dim = p + 2;
                let mut cross = DMatrix::<f64>::zeros(dim, dim);
                let mut row = vec![0.0; dim];
                for r in 0..self.n {
                    row[0] = 1.0;
                    for (f, feat) in features.iter().enumerate() {
                        row[f + 1] = feat.value(self, r);
                    }
                    row[dim - 1] = self.columns[target][r];
                    for a in 0..dim {
                        for b in a..dim {
                            cross[(a, b)] += row[a] * row[b];
                        }
                    }
                }
                for a in 0..dim {
                    for b in 0..a {
                        cross[(a, b)] = cross[(b, a)];
                    }
                }
                Ok(NodeStats::Gaussian(GaussianStats {
                    n: self.n,
                    features,
                    cross,
                }))
            }
            ColumnKind::Discrete(arity) => {
                let (configs, parent_arities) = self.configurations(parents, bins);
                let q: usize = parent_arities.iter().product();
                let mut counts = vec![0u64; q * arity];
                for (r, &j) in configs.iter().enumerate() {
                    counts[j * arity + self.columns[target][r] as usize] += 1;
                }
                Ok(NodeStats::Counts(CountStats {
                    parent_arities,
                    arity,
                    counts,
                }))
            }
        }
    }
}

/// Bin index of `v` given ascending cut points.
pub fn bin_of(edges: &[f64], v: f64) -> usize {
    edges.partition_point(|&e| e <= v)
}

fn check_cell(meta: &ColumnMeta, row: usize, v: f64) -> Result<(), DataError> {
    if !v.is_finite() {
        return Err(DataError::Parse {
            row,
            column: meta.name.clone(),
            value: v.to_string(),
        });
    }
    if let ColumnKind::Discrete(k) = meta.kind {
        if v.fract() != 0.0 || v < 0.0 || v >= k as f64 {
            return Err(DataError::OutOfRange {
                row,
                column: meta.name.clone(),
                value: v,
                cardinality: k,
            });
        }
    }
    Ok(())
}

fn fingerprint(schema: &[ColumnMeta], columns: &[Vec<f64>], standardized: bool) -> u64 {
    let mut h = Sha256::new();
    for c in schema {
        h.update(c.name.as_bytes());
        h.update([0u8]);
        h.update(c.kind.cardinality().unwrap_or(0).to_le_bytes());
    }
    h.update([standardized as u8]);
    for col in columns {
        for v in col {
            h.update(v.to_bits().to_le_bytes());
        }
    }
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("sha256 digest has 32 bytes"))
}

/// Sample mean and unbiased variance.
pub(crate) fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
    (mean, ss / (n - 1.0))
}

/// Regressor used for a continuous child.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Feature {
    Continuous(usize),
    /// 1 when the discrete `column` equals `level`, else 0.
    Indicator { column: usize, level: usize },
}

impl Feature {
    pub fn column(self) -> usize {
        match self {
            Feature::Continuous(c) | Feature::Indicator { column: c, .. } => c,
        }
    }

    pub fn value(self, ds: &Dataset, row: usize) -> f64 {
        self.of(ds.value(row, self.column()))
    }

    /// Feature value given the raw value of its source column.
    pub fn of(self, raw: f64) -> f64 {
        match self {
            Feature::Continuous(_) => raw,
            Feature::Indicator { level, .. } => (raw as usize == level) as u8 as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NodeStats {
    Gaussian(GaussianStats),
    Counts(CountStats),
}

/// Cross-products of `[1, features..., target]` over all rows.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianStats {
    pub n: usize,
    pub features: Vec<Feature>,
    pub cross: DMatrix<f64>,
}

impl GaussianStats {
    /// Number of jointly modelled variables (features plus target).
    pub fn dim(&self) -> usize {
        self.features.len() + 1
    }

    /// Sample mean of `[features..., target]`.
    pub fn means(&self) -> Vec<f64> {
        let n = self.n as f64;
        (1..=self.dim()).map(|a| self.cross[(0, a)] / n).collect()
    }

    /// Centered scatter matrix Σ (x − x̄)(x − x̄)ᵀ of `[features..., target]`.
    pub fn scatter(&self) -> DMatrix<f64> {
        let l = self.dim();
        let n = self.n as f64;
        DMatrix::from_fn(l, l, |a, b| {
            self.cross[(a + 1, b + 1)] - self.cross[(0, a + 1)] * self.cross[(0, b + 1)] / n
        })
    }
}

/// Contingency counts `N_jk`, row-major by parent configuration `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct CountStats {
    pub parent_arities: Vec<usize>,
    pub arity: usize,
    pub counts: Vec<u64>,
}

impl CountStats {
    pub fn n_configs(&self) -> usize {
        self.counts.len() / self.arity
    }

    pub fn config(&self, j: usize) -> &[u64] {
        &self.counts[j * self.arity..(j + 1) * self.arity]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ab_schema() -> Vec<ColumnMeta> {
        vec![ColumnMeta::continuous("a"), ColumnMeta::discrete("b", 2)]
    }

    #[test]
    fn loads_small_csv() {
        let ds = Dataset::read_csv("a,b\n1.0,0\n2.0,1\n".as_bytes(), ab_schema()).unwrap();
        assert_eq!((ds.n(), ds.d()), (2, 2));
        assert_eq!(ds.column(0), &[1.0, 2.0]);
        assert!(!ds.is_standardized());
    }

    #[test]
    fn header_order_is_free() {
        let ds = Dataset::read_csv("b,a\n0,1.5\n1,2.5\n".as_bytes(), ab_schema()).unwrap();
        assert_eq!(ds.column(0), &[1.5, 2.5]);
        assert_eq!(ds.column(1), &[0.0, 1.0]);
    }

    #[test]
    fn out_of_range_names_row_and_column() {
        let err = Dataset::read_csv("a,b\n1.0,5\n2.0,1\n".as_bytes(), ab_schema()).unwrap_err();
        match err {
            Error::Data(DataError::OutOfRange { row, column, .. }) => {
                assert_eq!(row, 1);
                assert_eq!(column, "b");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn header_only_is_empty() {
        let err = Dataset::read_csv("a,b\n".as_bytes(), ab_schema()).unwrap_err();
        assert!(matches!(err, Error::Data(DataError::Empty)));
    }

    #[test]
    fn missing_and_unparseable_cells() {
        let err = Dataset::read_csv("a,b\n1.0,\n".as_bytes(), ab_schema()).unwrap_err();
        assert!(matches!(err, Error::Data(DataError::Missing { row: 1, .. })));
        let err = Dataset::read_csv("a,b\n1.0,0\nx,1\n".as_bytes(), ab_schema()).unwrap_err();
        assert!(matches!(err, Error::Data(DataError::Parse { row: 2, .. })));
        let err = Dataset::read_csv("a,c\n1.0,0\n".as_bytes(), ab_schema()).unwrap_err();
        assert!(matches!(err, Error::Data(DataError::Header(_))));
    }

    #[test]
    fn missing_file_is_reported() {
        let err = Dataset::load_csv("/nonexistent/file.csv", ab_schema()).unwrap_err();
        assert!(matches!(err, Error::Data(DataError::Read { .. })));
    }

    #[test]
    fn schema_validation() {
        let dup = vec![ColumnMeta::continuous("a"), ColumnMeta::continuous("a")];
        assert!(validate_schema(&dup).is_err());
        assert!(validate_schema(&[ColumnMeta::discrete("a", 1)]).is_err());
    }

    #[test]
    fn standardize_examples() {
        let schema = vec![ColumnMeta::continuous("x"), ColumnMeta::discrete("b", 2)];
        let ds = Dataset::from_columns(schema, vec![vec![1.0, 2.0, 3.0], vec![0.0, 1.0, 0.0]])
            .unwrap();
        let z = ds.standardize().unwrap();
        assert_eq!(z.column(0), &[-1.0, 0.0, 1.0]);
        assert_eq!(z.column(1), &[0.0, 1.0, 0.0]);
        assert!(z.is_standardized());
        assert!(!ds.is_standardized());
        assert!(matches!(
            z.standardize(),
            Err(Error::Data(DataError::AlreadyStandardized))
        ));
        assert_eq!(z.from_model_units(0, 1.0), 3.0);
        assert_ne!(z.fingerprint(), ds.fingerprint());
    }

    #[test]
    fn constant_column_is_degenerate() {
        let ds = Dataset::from_columns(vec![ColumnMeta::continuous("c")], vec![vec![5.0; 3]])
            .unwrap();
        match ds.standardize() {
            Err(Error::Data(DataError::Degenerate(name))) => assert_eq!(name, "c"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn gaussian_stats_parentless() {
        let ds = Dataset::from_columns(vec![ColumnMeta::continuous("x")], vec![vec![1.0, -1.0]])
            .unwrap();
        let NodeStats::Gaussian(s) = ds.sufficient_stats(0, NodeSet::empty(), 3).unwrap() else {
            panic!("expected gaussian stats");
        };
        assert_eq!(s.n, 2);
        assert_eq!(s.cross[(0, 1)], 0.0);
        assert_eq!(s.cross[(1, 1)], 2.0);
    }

    #[test]
    fn count_stats_examples() {
        let ds = Dataset::from_columns(vec![ColumnMeta::discrete("t", 2)], vec![vec![0.0, 1.0, 1.0]])
            .unwrap();
        let NodeStats::Counts(c) = ds.sufficient_stats(0, NodeSet::empty(), 3).unwrap() else {
            panic!("expected counts");
        };
        assert_eq!(c.counts, vec![1, 2]);

        let ds = Dataset::from_columns(
            vec![ColumnMeta::discrete("p", 2), ColumnMeta::discrete("t", 2)],
            vec![vec![0.0, 0.0, 1.0], vec![0.0, 1.0, 1.0]],
        )
        .unwrap();
        let NodeStats::Counts(c) = ds.sufficient_stats(1, NodeSet::singleton(0), 3).unwrap() else {
            panic!("expected counts");
        };
        assert_eq!(c.config(0), &[1, 1]);
        assert_eq!(c.config(1), &[0, 1]);
        assert!(ds.sufficient_stats(1, NodeSet::singleton(1), 3).is_err());
        assert!(ds.sufficient_stats(2, NodeSet::empty(), 3).is_err());
    }

    #[test]
    fn mixed_families() {
        // continuous parent of a discrete child gets binned; discrete parent
        // of a continuous child becomes indicator columns
        let x: Vec<f64> = (0..9).map(|i| i as f64).collect();
        let t: Vec<f64> = (0..9).map(|i| (i % 3) as f64).collect();
        let ds = Dataset::from_columns(
            vec![ColumnMeta::continuous("x"), ColumnMeta::discrete("t", 3)],
            vec![x, t],
        )
        .unwrap();
        let NodeStats::Counts(c) = ds.sufficient_stats(1, NodeSet::singleton(0), 3).unwrap() else {
            panic!()
        };
        assert_eq!(c.parent_arities, vec![3]);
        assert_eq!(c.config(0), &[1, 1, 1]);
        assert_eq!(c.total(), 9);
        let NodeStats::Gaussian(g) = ds.sufficient_stats(0, NodeSet::singleton(1), 3).unwrap() else {
            panic!()
        };
        assert_eq!(
            g.features,
            vec![
                Feature::Indicator { column: 1, level: 1 },
                Feature::Indicator { column: 1, level: 2 }
            ]
        );
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let xs = vec![0.1, 1.0 / 3.0, -2.5e-17, 12345.678901234];
        let ds = Dataset::from_columns(vec![ColumnMeta::continuous("x")], vec![xs.clone()]).unwrap();
        let back = Dataset::read_csv(ds.to_csv_string().as_bytes(), ds.schema().to_vec()).unwrap();
        assert_eq!(back.column(0), &xs[..]);
        assert_eq!(back.fingerprint(), ds.fingerprint());
    }
}
