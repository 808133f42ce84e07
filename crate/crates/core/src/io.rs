//! CSV formats shared by every stage of the pipeline.
//!
//! Three tables are defined here:
//!
//! - **Feature CSV** `id,label,f0,...,f{d-1}`: one item per row, an empty
//!   label cell marks the item as unlabeled.
//! - **Prediction CSV** `id,predicted_label,dom_0,...,dom_{C-1}`: the final
//!   class and domination levels for every item.
//! - **Heatmap CSV** `p\k,k1,k2,...`: mean accuracy for each grid cell, one
//!   row per principal-component count.
//!
//! Class dictionaries are always the lexicographically sorted set of distinct
//! label strings, so label indices are reproducible across runs and tools.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use ndarray::{Array2, ArrayView1};

use crate::error::{Error, Result};
use crate::eval::GridResult;
use crate::pcc::Prediction;

/// Dense `n × d` feature table with stable item identifiers.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    ids: Vec<String>,
    values: Array2<f64>,
}

impl FeatureMatrix {
    pub fn new(ids: Vec<String>, values: Array2<f64>) -> Result<Self> {
        if ids.len() != values.nrows() {
            return Err(Error::DimensionMismatch {
                expected: values.nrows(),
                actual: ids.len(),
                context: "id count vs. matrix rows",
            });
        }
        let mut seen = HashSet::with_capacity(ids.len());
        for id in &ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::InvalidArgument(format!("duplicate item id {id:?}")));
            }
        }
        if let Some(((row, col), v)) = values.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "non-finite value {v} at row {row}, column {col}"
            )));
        }
        Ok(Self { ids, values })
    }

    /// Builds a matrix with ids `0..n` rendered as strings.
    pub fn from_values(values: Array2<f64>) -> Result<Self> {
        let ids = (0..values.nrows()).map(|i| i.to_string()).collect();
        Self::new(ids, values)
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn dim(&self) -> usize {
        self.values.ncols()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.values.row(i)
    }

    /// Returns a copy with rows reordered so that row `i` is the old row `order[i]`.
    pub fn select_rows(&self, order: &[usize]) -> Result<Self> {
        let ids = order.iter().map(|&i| self.ids[i].clone()).collect();
        let values = self.values.select(ndarray::Axis(0), order);
        Self::new(ids, values)
    }
}

/// Feature table plus optional class labels and the class dictionary.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub features: FeatureMatrix,
    pub labels: Vec<Option<usize>>,
    pub classes: Vec<String>,
}

impl LabeledDataset {
    pub fn new(
        features: FeatureMatrix,
        labels: Vec<Option<usize>>,
        classes: Vec<String>,
    ) -> Result<Self> {
        if labels.len() != features.n() {
            return Err(Error::DimensionMismatch {
                expected: features.n(),
                actual: labels.len(),
                context: "label count vs. feature rows",
            });
        }
        if let Some(bad) = labels.iter().flatten().find(|&&c| c >= classes.len()) {
            return Err(Error::InvalidLabels(format!(
                "label index {bad} out of range for {} classes",
                classes.len()
            )));
        }
        Ok(Self {
            features,
            labels,
            classes,
        })
    }

    /// Builds a dataset from raw label strings; `None` or `""` means unlabeled.
    pub fn from_label_strings<S: AsRef<str>>(
        features: FeatureMatrix,
        labels: &[Option<S>],
    ) -> Result<Self> {
        let classes: Vec<String> = labels
            .iter()
            .flatten()
            .map(|s| s.as_ref())
            .filter(|s| !s.is_empty())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .map(str::to_owned)
            .collect();
        let index: HashMap<&str, usize> = classes
            .iter()
            .enumerate()
            .map(|(i, c)| (c.as_str(), i))
            .collect();
        let labels = labels
            .iter()
            .map(|l| {
                l.as_ref()
                    .map(|s| s.as_ref())
                    .filter(|s| !s.is_empty())
                    .map(|s| index[s])
            })
            .collect();
        Self::new(features, labels, classes)
    }

    pub fn n(&self) -> usize {
        self.features.n()
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn labeled_count(&self) -> usize {
        self.labels.iter().filter(|l| l.is_some()).count()
    }

    pub fn is_fully_labeled(&self) -> bool {
        self.labels.iter().all(Option::is_some)
    }

    /// Ground-truth class of every item; fails if any item is unlabeled.
    pub fn truth(&self) -> Result<Vec<usize>> {
        self.labels
            .iter()
            .enumerate()
            .map(|(i, l)| {
                l.ok_or_else(|| {
                    Error::InvalidLabels(format!(
                        "item {:?} has no label; evaluation needs ground truth for every item",
                        self.features.ids()[i]
                    ))
                })
            })
            .collect()
    }

    /// Replaces the feature matrix, keeping labels and classes.
    pub fn with_features(&self, features: FeatureMatrix) -> Result<Self> {
        Self::new(features, self.labels.clone(), self.classes.clone())
    }

    /// Replaces all labels with those found in an `id,label` table.
    ///
    /// Items absent from the table become unlabeled; ids unknown to the
    /// dataset are an error.
    pub fn relabel(&self, table: &[(String, String)]) -> Result<Self> {
        let position: HashMap<&str, usize> = self
            .features
            .ids()
            .iter()
            .enumerate()
            .map(|(i, id)| (id.as_str(), i))
            .collect();
        let mut raw: Vec<Option<&str>> = vec![None; self.n()];
        for (id, label) in table {
            let &i = position.get(id.as_str()).ok_or_else(|| {
                Error::InvalidLabels(format!("label file names unknown id {id:?}"))
            })?;
            raw[i] = Some(label.as_str());
        }
        Self::from_label_strings(self.features.clone(), &raw)
    }
}

fn open_reader(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(file))
}

fn create_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::WriterBuilder::new().from_writer(BufWriter::new(file)))
}

fn finish_writer(path: &Path, writer: csv::Writer<BufWriter<File>>) -> Result<()> {
    let mut inner = writer
        .into_inner()
        .map_err(|e| Error::io(path, std::io::Error::other(e.to_string())))?;
    inner.flush().map_err(|e| Error::io(path, e))
}

fn parse_number(cell: &str) -> Option<f64> {
    cell.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Reads a Feature CSV.
pub fn load_feature_table(path: impl AsRef<Path>) -> Result<LabeledDataset> {
    let path = path.as_ref();
    let mut reader = open_reader(path)?;
    let mut records = reader.records();

    let header = match records.next() {
        Some(h) => h?,
        None => return Err(Error::format(path, 1, "missing header")),
    };
    if header.len() < 3 || header.get(0) != Some("id") || header.get(1) != Some("label") {
        return Err(Error::format(
            path,
            1,
            "header must start with `id,label` followed by at least one feature column",
        ));
    }
    for (j, name) in header.iter().skip(2).enumerate() {
        if name != format!("f{j}") {
            return Err(Error::format(
                path,
                1,
                format!("feature column {j} is named {name:?}, expected \"f{j}\""),
            ));
        }
    }
    let dim = header.len() - 2;

    let mut ids = Vec::new();
    let mut seen = HashSet::new();
    let mut labels: Vec<Option<String>> = Vec::new();
    let mut values = Vec::new();
    for record in records {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != dim + 2 {
            return Err(Error::format(
                path,
                line,
                format!("expected {} fields, found {}", dim + 2, record.len()),
            ));
        }
        let id = record[0].to_owned();
        if !seen.insert(id.clone()) {
            return Err(Error::format(path, line, format!("duplicate id {id:?}")));
        }
        for (j, cell) in record.iter().skip(2).enumerate() {
            let v = parse_number(cell).ok_or_else(|| {
                Error::format(
                    path,
                    line,
                    format!("column f{j}: {cell:?} is not a finite number"),
                )
            })?;
            values.push(v);
        }
        let label = record[1].trim();
        labels.push((!label.is_empty()).then(|| label.to_owned()));
        ids.push(id);
    }
    if ids.is_empty() {
        return Err(Error::format(path, 1, "no data rows"));
    }
    let values = Array2::from_shape_vec((ids.len(), dim), values)
        .expect("row lengths checked while parsing");
    LabeledDataset::from_label_strings(FeatureMatrix::new(ids, values)?, &labels)
}

/// Writes a Feature CSV with 9 significant digits per value.
pub fn write_feature_table(dataset: &LabeledDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = create_writer(path)?;
    let mut header = vec!["id".to_owned(), "label".to_owned()];
    header.extend((0..dataset.features.dim()).map(|j| format!("f{j}")));
    w.write_record(&header)?;
    let mut record = Vec::with_capacity(header.len());
    for (i, id) in dataset.features.ids().iter().enumerate() {
        record.clear();
        record.push(id.clone());
        record.push(
            dataset.labels[i]
                .map(|c| dataset.classes[c].clone())
                .unwrap_or_default(),
        );
        record.extend(dataset.features.row(i).iter().map(|&v| format_sig9(v)));
        w.write_record(&record)?;
    }
    finish_writer(path, w)
}

/// Reads an `id,label` table (the header row is required).
pub fn load_label_table(path: impl AsRef<Path>) -> Result<Vec<(String, String)>> {
    let path = path.as_ref();
    let mut reader = open_reader(path)?;
    let mut records = reader.records();
    match records.next() {
        Some(h) => {
            let h = h?;
            if h.len() != 2 || &h[0] != "id" || &h[1] != "label" {
                return Err(Error::format(path, 1, "header must be `id,label`"));
            }
        }
        None => return Err(Error::format(path, 1, "missing header")),
    }
    let mut out = Vec::new();
    for record in records {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 2 {
            return Err(Error::format(path, line, "expected 2 fields"));
        }
        let label = record[1].trim();
        if !label.is_empty() {
            out.push((record[0].to_owned(), label.to_owned()));
        }
    }
    Ok(out)
}

/// Writes the Prediction CSV for every item of `dataset`.
pub fn write_predictions(
    dataset: &LabeledDataset,
    prediction: &Prediction,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    if prediction.len() != dataset.n() {
        return Err(Error::DimensionMismatch {
            expected: dataset.n(),
            actual: prediction.len(),
            context: "prediction length vs. dataset rows",
        });
    }
    if prediction.num_classes() != dataset.num_classes() {
        return Err(Error::DimensionMismatch {
            expected: dataset.num_classes(),
            actual: prediction.num_classes(),
            context: "prediction classes vs. dataset classes",
        });
    }
    let mut w = create_writer(path)?;
    let mut header = vec!["id".to_owned(), "predicted_label".to_owned()];
    header.extend((0..dataset.num_classes()).map(|c| format!("dom_{c}")));
    w.write_record(&header)?;
    let mut record = Vec::with_capacity(header.len());
    for (i, id) in dataset.features.ids().iter().enumerate() {
        record.clear();
        record.push(id.clone());
        record.push(dataset.classes[prediction.labels[i]].clone());
        record.extend(prediction.domination(i).iter().map(|&v| format_sig9(v)));
        w.write_record(&record)?;
    }
    finish_writer(path, w)
}

/// Parsed contents of a Prediction CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionTable {
    pub ids: Vec<String>,
    pub labels: Vec<String>,
    pub domination: Vec<Vec<f64>>,
}

impl PredictionTable {
    /// Maps predicted class names onto indices of `classes`.
    pub fn label_indices(&self, classes: &[String]) -> Result<Vec<usize>> {
        self.labels
            .iter()
            .map(|l| {
                classes
                    .iter()
                    .position(|c| c == l)
                    .ok_or_else(|| Error::InvalidLabels(format!("unknown class {l:?}")))
            })
            .collect()
    }
}

/// Reads a Prediction CSV, checking that every domination row sums to 1 ± 1e-6.
pub fn load_predictions(path: impl AsRef<Path>) -> Result<PredictionTable> {
    let path = path.as_ref();
    let mut reader = open_reader(path)?;
    let mut records = reader.records();
    let header = match records.next() {
        Some(h) => h?,
        None => return Err(Error::format(path, 1, "missing header")),
    };
    let valid_header = header.len() >= 2
        && &header[0] == "id"
        && &header[1] == "predicted_label"
        && header
            .iter()
            .skip(2)
            .enumerate()
            .all(|(c, name)| name == format!("dom_{c}"));
    if !valid_header {
        return Err(Error::format(
            path,
            1,
            "header must be `id,predicted_label,dom_0,...`",
        ));
    }
    let classes = header.len() - 2;
    let mut table = PredictionTable {
        ids: Vec::new(),
        labels: Vec::new(),
        domination: Vec::new(),
    };
    for record in records {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != classes + 2 {
            return Err(Error::format(
                path,
                line,
                format!("expected {} fields, found {}", classes + 2, record.len()),
            ));
        }
        let row = record
            .iter()
            .skip(2)
            .map(|cell| {
                parse_number(cell)
                    .ok_or_else(|| Error::format(path, line, format!("{cell:?} is not a number")))
            })
            .collect::<Result<Vec<f64>>>()?;
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > 1e-6 {
            return Err(Error::format(
                path,
                line,
                format!("domination levels sum to {sum}, expected 1"),
            ));
        }
        table.ids.push(record[0].to_owned());
        table.labels.push(record[1].to_owned());
        table.domination.push(row);
    }
    Ok(table)
}

/// Writes mean accuracies as a Heatmap CSV (rows = p, columns = k).
pub fn write_heatmap(grid: &GridResult, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if grid.p_values.is_empty() || grid.k_values.is_empty() {
        return Err(Error::InvalidArgument("empty grid".into()));
    }
    if grid.cells.len() != grid.p_values.len() {
        return Err(Error::DimensionMismatch {
            expected: grid.p_values.len(),
            actual: grid.cells.len(),
            context: "heatmap rows vs. p values",
        });
    }
    if let Some(row) = grid.cells.iter().find(|r| r.len() != grid.k_values.len()) {
        return Err(Error::DimensionMismatch {
            expected: grid.k_values.len(),
            actual: row.len(),
            context: "ragged heatmap row",
        });
    }
    let mut w = create_writer(path)?;
    let mut header = vec!["p\\k".to_owned()];
    header.extend(grid.k_values.iter().map(usize::to_string));
    w.write_record(&header)?;
    for (p, row) in grid.p_values.iter().zip(&grid.cells) {
        let mut record = vec![p.to_string()];
        record.extend(row.iter().map(|cell| format_unit_cell(cell.mean)));
        w.write_record(&record)?;
    }
    finish_writer(path, w)
}

/// Parsed contents of a Heatmap CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap {
    pub p_values: Vec<usize>,
    pub k_values: Vec<usize>,
    pub means: Vec<Vec<f64>>,
}

impl Heatmap {
    /// Cell with the highest mean; ties go to the smallest p, then smallest k.
    pub fn best(&self) -> Option<(usize, usize, f64)> {
        let mut best: Option<(usize, usize, f64)> = None;
        for (pi, row) in self.means.iter().enumerate() {
            for (ki, &m) in row.iter().enumerate() {
                if best.is_none_or(|(_, _, b)| m > b) {
                    best = Some((self.p_values[pi], self.k_values[ki], m));
                }
            }
        }
        best
    }
}

pub fn load_heatmap(path: impl AsRef<Path>) -> Result<Heatmap> {
    let path = path.as_ref();
    let mut reader = open_reader(path)?;
    let mut records = reader.records();
    let header = match records.next() {
        Some(h) => h?,
        None => return Err(Error::format(path, 1, "missing header")),
    };
    if header.len() < 2 || &header[0] != "p\\k" {
        return Err(Error::format(path, 1, "header must be `p\\k,k1,k2,...`"));
    }
    let k_values = header
        .iter()
        .skip(1)
        .map(|c| {
            c.trim()
                .parse::<usize>()
                .map_err(|_| Error::format(path, 1, format!("{c:?} is not a k value")))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut heatmap = Heatmap {
        p_values: Vec::new(),
        k_values,
        means: Vec::new(),
    };
    for record in records {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != heatmap.k_values.len() + 1 {
            return Err(Error::format(path, line, "ragged heatmap row"));
        }
        let p = record[0]
            .trim()
            .parse::<usize>()
            .map_err(|_| Error::format(path, line, "p value is not an integer"))?;
        let row = record
            .iter()
            .skip(1)
            .map(|cell| {
                parse_number(cell)
                    .ok_or_else(|| Error::format(path, line, format!("{cell:?} is not a number")))
            })
            .collect::<Result<Vec<f64>>>()?;
        heatmap.p_values.push(p);
        heatmap.means.push(row);
    }
    Ok(heatmap)
}

/// Formats a value with 9 significant digits, switching to scientific
/// notation for very large or very small magnitudes.
pub fn format_sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".to_owned();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("`e` formatting has an exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..9).contains(&exp) {
        let fixed = format!("{:.*}", (8 - exp) as usize, x);
        trim_fraction(&fixed, 0).to_owned()
    } else {
        format!("{}e{exp}", trim_fraction(mantissa, 0))
    }
}

/// Fixed-point rendering for values in [0,1]: at least 6 and at most 9 decimals.
fn format_unit_cell(x: f64) -> String {
    trim_fraction(&format!("{x:.9}"), 6).to_owned()
}

fn trim_fraction(s: &str, min_decimals: usize) -> &str {
    let Some(dot) = s.find('.') else { return s };
    let mut end = s.len();
    while end > dot + 1 + min_decimals && s.as_bytes()[end - 1] == b'0' {
        end -= 1;
    }
    if end == dot + 1 {
        end = dot;
    }
    &s[..end]
}

/// Writes the debug adjacency dump: `id: n1 n2 ...` per node.
pub fn write_adjacency<W: Write>(
    graph: &crate::graph::Graph,
    ids: Option<&[String]>,
    mut out: W,
) -> std::io::Result<()> {
    for i in 0..graph.n() {
        match ids {
            Some(ids) => write!(out, "{}:", ids[i])?,
            None => write!(out, "{i}:")?,
        }
        for &j in graph.neighbors(i) {
            match ids {
                Some(ids) => write!(out, " {}", ids[j])?,
                None => write!(out, " {j}")?,
            }
        }
        writeln!(out)?;
    }
    Ok(())
}
