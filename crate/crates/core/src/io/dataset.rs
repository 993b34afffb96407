use crate::error::{Error, Result};
use crate::distributions::SalParams;
use crate::mixture::MixtureParams;
use crate::numerics::{DataMatrix, SpdMatrix};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

/// Observations with column names and an optional class column.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub name: String,
    pub columns: Vec<String>,
    pub values: DataMatrix,
    pub labels: Option<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CsvOptions {
    pub has_header: bool,
    pub delimiter: char,
    /// Column holding class labels; excluded from the values.
    pub label_column: Option<String>,
    /// Keep only these value columns, in this order.
    pub columns: Option<Vec<String>>,
}

impl Default for CsvOptions {
    fn default() -> Self {
        Self {
            has_header: true,
            delimiter: ',',
            label_column: None,
            columns: None,
        }
    }
}

impl Dataset {
    pub fn new(name: impl Into<String>, columns: Vec<String>, values: DataMatrix, labels: Option<Vec<String>>) -> Result<Self> {
        let (n, p) = (values.nrows(), values.ncols());
        if p == 0 {
            return Err(Error::Data("dataset has no value columns".into()));
        }
        if n <= p {
            return Err(Error::Data(format!("dataset needs more rows than columns, got {n} rows and {p} columns")));
        }
        if columns.len() != p {
            return Err(Error::Shape {
                expected: p,
                found: columns.len(),
            });
        }
        if let Some(l) = &labels {
            if l.len() != n {
                return Err(Error::Shape {
                    expected: n,
                    found: l.len(),
                });
            }
        }
        if let Some(i) = (0..n).find(|&i| values.row(i).iter().any(|v| !v.is_finite())) {
            return Err(Error::Data(format!("row {} has a non-finite value", i + 1)));
        }
        Ok(Self {
            name: name.into(),
            columns,
            values,
            labels,
        })
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn p(&self) -> usize {
        self.values.ncols()
    }

    /// Class labels as indices into the sorted distinct class names.
    pub fn label_indices(&self) -> Option<(Vec<usize>, Vec<String>)> {
        self.labels.as_deref().map(encode_labels)
    }
}

/// Reads a delimited text file. Numbers use `.` as the decimal point
/// whatever the locale; blank and non-numeric cells are rejected with their
/// row (1-based, counting the header) and column.
pub fn load_csv(path: &Path, options: &CsvOptions) -> Result<Dataset> {
    if !options.delimiter.is_ascii() {
        return Err(Error::Config(format!("delimiter must be an ASCII character, got `{}`", options.delimiter)));
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(options.has_header)
        .delimiter(options.delimiter as u8)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    let mut records = Vec::new();
    for rec in reader.records() {
        records.push(rec?);
    }
    let width = records.first().map_or(0, |r| r.len());
    let header: Vec<String> = if options.has_header {
        reader.headers()?.iter().map(str::to_string).collect()
    } else {
        (1..=width).map(|j| format!("V{j}")).collect()
    };
    let position = |name: &str| -> Result<usize> {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Data(format!("{}: no column named `{name}`", path.display())))
    };
    let label_pos = options.label_column.as_deref().map(position).transpose()?;
    let value_pos: Vec<usize> = match &options.columns {
        Some(cols) => cols.iter().map(|c| position(c)).collect::<Result<_>>()?,
        None => (0..header.len()).filter(|&j| Some(j) != label_pos).collect(),
    };
    let first_row = usize::from(options.has_header) + 1;
    let mut values = Vec::with_capacity(records.len() * value_pos.len());
    let mut labels = label_pos.map(|_| Vec::with_capacity(records.len()));
    for (r, rec) in records.iter().enumerate() {
        let row = first_row + r;
        let cell_error = |j: usize, message: String| Error::Parse {
            path: path.to_path_buf(),
            row,
            column: header.get(j).cloned().unwrap_or_else(|| format!("#{}", j + 1)),
            message,
        };
        for &j in &value_pos {
            let cell = rec.get(j).unwrap_or("");
            if cell.is_empty() {
                return Err(cell_error(j, "blank cell (missing values are not imputed)".into()));
            }
            let v: f64 = cell.parse().map_err(|_| cell_error(j, format!("`{cell}` is not a number")))?;
            if !v.is_finite() {
                return Err(cell_error(j, format!("`{cell}` is not finite")));
            }
            values.push(v);
        }
        if let (Some(j), Some(l)) = (label_pos, labels.as_mut()) {
            let cell = rec.get(j).unwrap_or("");
            if cell.is_empty() {
                return Err(cell_error(j, "blank label".into()));
            }
            l.push(cell.to_string());
        }
    }
    let name = path.file_stem().map_or_else(|| "data".to_string(), |s| s.to_string_lossy().into_owned());
    let columns = value_pos.iter().map(|&j| header[j].clone()).collect();
    Dataset::new(name, columns, DataMatrix::new(records.len(), value_pos.len(), values)?, labels)
}

/// One column of class labels. Without a name the file must have a single
/// column or the labels are taken from the last one.
pub fn load_labels(path: &Path, column: Option<&str>, has_header: bool, delimiter: char) -> Result<Vec<String>> {
    if !delimiter.is_ascii() {
        return Err(Error::Config(format!("delimiter must be an ASCII character, got `{delimiter}`")));
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .delimiter(delimiter as u8)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    let position = match column {
        Some(name) => {
            if !has_header {
                return Err(Error::Config("a label column name needs a header row".into()));
            }
            Some(
                reader
                    .headers()?
                    .iter()
                    .position(|h| h == name)
                    .ok_or_else(|| Error::Data(format!("{}: no column named `{name}`", path.display())))?,
            )
        }
        None => None,
    };
    let mut labels = Vec::new();
    for (r, rec) in reader.records().enumerate() {
        let rec = rec?;
        let j = position.unwrap_or(rec.len().saturating_sub(1));
        let cell = rec.get(j).unwrap_or("");
        if cell.is_empty() {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                row: r + 1 + usize::from(has_header),
                column: column.map_or_else(|| format!("#{}", j + 1), str::to_string),
                message: "blank label".into(),
            });
        }
        labels.push(cell.to_string());
    }
    Ok(labels)
}

/// Labels as indices into their sorted distinct values.
pub fn encode_labels(labels: &[String]) -> (Vec<usize>, Vec<String>) {
    let classes: Vec<String> = labels.iter().cloned().collect::<std::collections::BTreeSet<_>>().into_iter().collect();
    let index: BTreeMap<&str, usize> = classes.iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect();
    (labels.iter().map(|l| index[l.as_str()]).collect(), classes)
}

/// Column centring and scaling applied by [`standardize`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StandardizeRecord {
    pub columns: Vec<String>,
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
}

/// Z-scores every column with its mean and `n - 1` standard deviation.
pub fn standardize(d: &Dataset) -> Result<(Dataset, StandardizeRecord)> {
    let means = d.values.column_means();
    let cov = d.values.covariance();
    let p = d.p();
    let sds: Vec<f64> = (0..p).map(|j| cov[j * p + j].sqrt()).collect();
    if let Some(j) = (0..p).find(|&j| !(sds[j] > 0.0)) {
        return Err(Error::Data(format!("column `{}` is constant and cannot be standardized", d.columns[j])));
    }
    let record = StandardizeRecord {
        columns: d.columns.clone(),
        means,
        sds,
    };
    let mut values = d.values.clone();
    for i in 0..values.nrows() {
        for (j, v) in values.row_mut(i).iter_mut().enumerate() {
            *v = (*v - record.means[j]) / record.sds[j];
        }
    }
    let out = Dataset {
        values,
        ..d.clone()
    };
    Ok((out, record))
}

impl StandardizeRecord {
    pub fn restore_data(&self, z: &DataMatrix) -> DataMatrix {
        let mut x = z.clone();
        for i in 0..x.nrows() {
            for (j, v) in x.row_mut(i).iter_mut().enumerate() {
                *v = self.means[j] + self.sds[j] * *v;
            }
        }
        x
    }

    /// Parameters on the original scale. For `X = m + S Y` with `S`
    /// diagonal, a SAL law on `Y` maps to `μ ↦ m + Sμ`, `α ↦ Sα`,
    /// `Σ ↦ SΣS`.
    pub fn restore_params(&self, params: &MixtureParams) -> Result<MixtureParams> {
        let p = self.sds.len();
        if params.p() != p {
            return Err(Error::Shape {
                expected: p,
                found: params.p(),
            });
        }
        let comps = params
            .components()
            .iter()
            .map(|c| {
                let mu = (0..p).map(|j| self.means[j] + self.sds[j] * c.mu()[j]).collect();
                let alpha = (0..p).map(|j| self.sds[j] * c.alpha()[j]).collect();
                let sigma = nalgebra::DMatrix::from_fn(p, p, |a, b| self.sds[a] * c.sigma().matrix()[(a, b)] * self.sds[b]);
                SalParams::new(mu, alpha, SpdMatrix::new(sigma)?)
            })
            .collect::<Result<Vec<_>>>()?;
        MixtureParams::new(params.weights().to_vec(), comps)
    }
}
