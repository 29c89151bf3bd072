//! Labelled sample sets, CSV ingestion, and the synthetic generators.
//!
//! A [`SampleSet`] holds `N` rows of dimension `d`, each tagged with one of
//! two labels. Rows live in a shared buffer, so relabelling (as the bootstrap
//! does once per shuffle) never copies the features.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::{self, NormalStream};

/// Side length of the blob lattice (5 x 5 centers).
pub const BLOB_GRID_SIDE: usize = 5;
/// Distance between neighbouring blob centers; centers sit at {0, 5, 10, 15, 20}^2.
pub const DEFAULT_BLOB_SPACING: f64 = 5.0;
/// Rejection-sampling attempts allowed per accepted ring point.
pub const RING_ATTEMPT_CAP: usize = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Label {
    First,
    Second,
}

impl Label {
    pub fn as_u8(self) -> u8 {
        match self {
            Label::First => 1,
            Label::Second => 2,
        }
    }

    pub fn from_u8(value: u8) -> Option<Self> {
        match value {
            1 => Some(Label::First),
            2 => Some(Label::Second),
            _ => None,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_u8())
    }
}

/// A row-major block of unlabelled points.
#[derive(Clone, Debug, PartialEq)]
pub struct Points {
    data: Vec<f64>,
    dim: usize,
}

impl Points {
    pub fn new(data: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dim", "must be at least 1"));
        }
        if !data.len().is_multiple_of(dim) {
            return Err(Error::invalid(
                "data",
                format!("length {} is not a multiple of dimension {dim}", data.len()),
            ));
        }
        Ok(Self { data, dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// `N` labelled observations split into the index sets `I1` and `I2`.
#[derive(Clone, Debug)]
pub struct SampleSet {
    data: Arc<Vec<f64>>,
    dim: usize,
    labels: Vec<Label>,
    class1: Vec<usize>,
    class2: Vec<usize>,
}

impl PartialEq for SampleSet {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.labels == other.labels && self.data == other.data
    }
}

impl SampleSet {
    /// Builds a set from row-major `data` (`labels.len()` rows of `dim` values).
    pub fn new(data: Vec<f64>, dim: usize, labels: Vec<Label>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dim", "must be at least 1"));
        }
        if data.len() != labels.len() * dim {
            return Err(Error::DimensionMismatch {
                expected: labels.len() * dim,
                got: data.len(),
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / dim,
                column: pos % dim,
            });
        }
        Self::with_shared(Arc::new(data), dim, labels)
    }

    fn with_shared(data: Arc<Vec<f64>>, dim: usize, labels: Vec<Label>) -> Result<Self> {
        let (class1, class2): (Vec<usize>, Vec<usize>) =
            (0..labels.len()).partition(|&i| labels[i] == Label::First);
        for (label, count) in [(Label::First, class1.len()), (Label::Second, class2.len())] {
            if count == 0 {
                return Err(Error::ClassTooSmall {
                    label: label.as_u8(),
                    count,
                    required: 1,
                });
            }
        }
        Ok(Self {
            data,
            dim,
            labels,
            class1,
            class2,
        })
    }

    /// Stacks `first` (label 1) on top of `second` (label 2).
    pub fn from_classes(first: &Points, second: &Points) -> Result<Self> {
        if first.dim() != second.dim() {
            return Err(Error::DimensionMismatch {
                expected: first.dim(),
                got: second.dim(),
            });
        }
        let mut data = Vec::with_capacity(first.as_slice().len() + second.as_slice().len());
        data.extend_from_slice(first.as_slice());
        data.extend_from_slice(second.as_slice());
        let mut labels = vec![Label::First; first.len()];
        labels.resize(first.len() + second.len(), Label::Second);
        Self::new(data, first.dim(), labels)
    }

    /// Same features under a new labelling. The feature buffer is shared.
    pub fn relabel(&self, labels: Vec<Label>) -> Result<Self> {
        if labels.len() != self.labels.len() {
            return Err(Error::DimensionMismatch {
                expected: self.labels.len(),
                got: labels.len(),
            });
        }
        Self::with_shared(Arc::clone(&self.data), self.dim, labels)
    }

    /// Rows reordered by a seeded shuffle, labels travelling with their rows.
    pub fn shuffled(&self, seed: u64) -> Self {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.shuffle(&mut rng::stream(seed, 0));
        let mut data = Vec::with_capacity(self.data.len());
        for &i in &order {
            data.extend_from_slice(self.row(i));
        }
        let labels = order.iter().map(|&i| self.labels[i]).collect();
        Self::with_shared(Arc::new(data), self.dim, labels).expect("class sizes are unchanged")
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn label(&self, i: usize) -> Label {
        self.labels[i]
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Row indices of `I1`, in file order.
    pub fn class1(&self) -> &[usize] {
        &self.class1
    }

    /// Row indices of `I2`, in file order.
    pub fn class2(&self) -> &[usize] {
        &self.class2
    }

    pub fn class(&self, label: Label) -> &[usize] {
        match label {
            Label::First => &self.class1,
            Label::Second => &self.class2,
        }
    }

    /// `(|I1|, |I2|)`.
    pub fn class_sizes(&self) -> (usize, usize) {
        (self.class1.len(), self.class2.len())
    }

    /// Fails unless both classes hold at least `required` samples.
    pub fn require_class_size(&self, required: usize) -> Result<()> {
        for (label, idx) in [(Label::First, &self.class1), (Label::Second, &self.class2)] {
            if idx.len() < required {
                return Err(Error::ClassTooSmall {
                    label: label.as_u8(),
                    count: idx.len(),
                    required,
                });
            }
        }
        Ok(())
    }

    pub fn class_points(&self, label: Label) -> Points {
        let mut data = Vec::with_capacity(self.class(label).len() * self.dim);
        for &i in self.class(label) {
            data.extend_from_slice(self.row(i));
        }
        Points {
            data,
            dim: self.dim,
        }
    }

    /// Writes `x1..xd,label` with a header row. Values use the shortest
    /// representation that parses back to the same `f64`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        let io_err = |e: csv::Error| Error::Csv {
            path: "<writer>".into(),
            source: e,
        };
        let mut header: Vec<String> = (1..=self.dim).map(|j| format!("x{j}")).collect();
        header.push("label".to_string());
        out.write_record(&header).map_err(io_err)?;
        let mut record = Vec::with_capacity(self.dim + 1);
        for i in 0..self.len() {
            record.clear();
            record.extend(self.row(i).iter().map(|v| v.to_string()));
            record.push(self.labels[i].to_string());
            out.write_record(&record).map_err(io_err)?;
        }
        out.flush().map_err(|e| Error::Io {
            path: "<writer>".into(),
            source: e,
        })
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

/// Which CSV column carries the labels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LabelColumn {
    Name(String),
    Index(usize),
}

impl LabelColumn {
    /// A purely numeric spec selects by zero-based index, anything else by name.
    pub fn parse(spec: &str) -> Self {
        match spec.parse::<usize>() {
            Ok(i) => LabelColumn::Index(i),
            Err(_) => LabelColumn::Name(spec.to_string()),
        }
    }
}

impl Default for LabelColumn {
    fn default() -> Self {
        LabelColumn::Name("label".to_string())
    }
}

/// Reads a comma-separated, headed, UTF-8 file. Every non-label column is a feature.
pub fn load_csv(path: impl AsRef<Path>, label_column: &LabelColumn) -> Result<SampleSet> {
    let path = path.as_ref();
    let csv_err = |source: csv::Error| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(std::io::BufReader::new(file));
    let headers = reader.headers().map_err(csv_err)?.clone();
    let label_idx = match label_column {
        LabelColumn::Index(i) if *i < headers.len() => *i,
        LabelColumn::Index(i) => {
            return Err(Error::invalid(
                "label_column",
                format!("index {i} out of range for {} columns", headers.len()),
            ))
        }
        LabelColumn::Name(name) => headers.iter().position(|h| h == name).ok_or_else(|| {
            Error::invalid("label_column", format!("no column named `{name}`"))
        })?,
    };
    let dim = headers.len() - 1;
    if dim == 0 {
        return Err(Error::invalid("csv", "no feature columns"));
    }

    let parse_err = |line: u64, col: usize, reason: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        column: headers.get(col).unwrap_or("?").to_string(),
        reason,
    };

    let mut data = Vec::new();
    let mut labels = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != headers.len() {
            return Err(parse_err(
                line,
                record.len().min(headers.len() - 1),
                format!("expected {} fields, found {}", headers.len(), record.len()),
            ));
        }
        for (col, cell) in record.iter().enumerate() {
            let value: f64 = cell
                .parse()
                .map_err(|_| parse_err(line, col, format!("`{cell}` is not a number")))?;
            if col == label_idx {
                let label = (value.fract() == 0.0 && (1.0..=2.0).contains(&value))
                    .then(|| Label::from_u8(value as u8))
                    .flatten()
                    .ok_or_else(|| parse_err(line, col, format!("label `{cell}` is not 1 or 2")))?;
                labels.push(label);
            } else {
                if !value.is_finite() {
                    return Err(parse_err(line, col, format!("non-finite value `{cell}`")));
                }
                data.push(value);
            }
        }
    }
    SampleSet::new(data, dim, labels)
}

/// Which of the two blob mixtures to draw from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlobDistribution {
    /// Identity covariance in every blob.
    P,
    /// Covariance with eigenvalues `(epsilon, 1)` along `(1, 1)/sqrt 2` and `(1, -1)/sqrt 2`.
    Q,
}

/// Parameters of the 5 x 5 Gaussian-blob benchmark.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlobSpec {
    pub spacing: f64,
    pub epsilon: f64,
    pub samples_per_set: usize,
}

impl BlobSpec {
    pub fn new(epsilon: f64, samples_per_set: usize) -> Result<Self> {
        let spec = Self {
            spacing: DEFAULT_BLOB_SPACING,
            epsilon,
            samples_per_set,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon.is_finite() && self.epsilon >= 1.0) {
            return Err(Error::invalid("epsilon", format!("{} is below 1", self.epsilon)));
        }
        if self.samples_per_set == 0 {
            return Err(Error::invalid("samples_per_set", "must be at least 1"));
        }
        if !(self.spacing.is_finite() && self.spacing > 0.0) {
            return Err(Error::invalid("spacing", "must be positive"));
        }
        Ok(())
    }

    /// Center of blob `index` (row-major over the lattice).
    pub fn center(&self, index: usize) -> [f64; 2] {
        [
            (index % BLOB_GRID_SIDE) as f64 * self.spacing,
            (index / BLOB_GRID_SIDE) as f64 * self.spacing,
        ]
    }
}

/// Draws `spec.samples_per_set` points of one blob mixture.
pub fn synth_blobs(spec: &BlobSpec, which: BlobDistribution, seed: u64) -> Result<Points> {
    synth_blobs_with_centers(spec, which, seed).map(|(points, _)| points)
}

/// As [`synth_blobs`], also returning the lattice index each point was drawn around.
pub fn synth_blobs_with_centers(
    spec: &BlobSpec,
    which: BlobDistribution,
    seed: u64,
) -> Result<(Points, Vec<usize>)> {
    spec.validate()?;
    let n = spec.samples_per_set;
    let mut normals = NormalStream::new(rng::stream(seed, 0));
    let (major, minor) = match which {
        BlobDistribution::P => (1.0, 1.0),
        BlobDistribution::Q => (spec.epsilon.sqrt(), 1.0),
    };
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    let mut data = Vec::with_capacity(2 * n);
    let mut centers = Vec::with_capacity(n);
    for _ in 0..n {
        let blob = normals.rng().random_range(0..BLOB_GRID_SIDE * BLOB_GRID_SIDE);
        let [cx, cy] = spec.center(blob);
        let a = major * normals.next();
        let b = minor * normals.next();
        // a along (1, 1)/sqrt 2, b along (1, -1)/sqrt 2.
        data.push(cx + (a + b) * inv_sqrt2);
        data.push(cy + (a - b) * inv_sqrt2);
        centers.push(blob);
    }
    Ok((Points { data, dim: 2 }, centers))
}

/// P samples under label 1 and Q samples under label 2, from independent sub-seeds.
pub fn blob_pair(spec: &BlobSpec, seed: u64) -> Result<SampleSet> {
    let p = synth_blobs(spec, BlobDistribution::P, rng::derive_seed(seed, 1))?;
    let q = synth_blobs(spec, BlobDistribution::Q, rng::derive_seed(seed, 2))?;
    SampleSet::from_classes(&p, &q)
}

/// Uniform points on `[-5, 5]^2`: label 1 inside the ring `1 <= r^2 <= 16`,
/// label 2 outside it, exactly `n_per_class` of each.
pub fn synth_ring(n_per_class: usize, seed: u64) -> Result<SampleSet> {
    if n_per_class == 0 {
        return Err(Error::invalid("n_per_class", "must be at least 1"));
    }
    let mut rng = rng::stream(seed, 0);
    let mut inside = Vec::with_capacity(2 * n_per_class);
    let mut outside = Vec::with_capacity(2 * n_per_class);
    let mut attempts = 0usize;
    while inside.len() < 2 * n_per_class || outside.len() < 2 * n_per_class {
        if attempts == RING_ATTEMPT_CAP {
            return Err(Error::Numerical(format!(
                "ring sampler made {RING_ATTEMPT_CAP} attempts without accepting a point"
            )));
        }
        attempts += 1;
        let x = rng.random_range(-5.0..=5.0);
        let y = rng.random_range(-5.0..=5.0);
        let r2: f64 = x * x + y * y;
        let target = if (1.0..=16.0).contains(&r2) {
            &mut inside
        } else {
            &mut outside
        };
        if target.len() < 2 * n_per_class {
            target.push(x);
            target.push(y);
            attempts = 0;
        }
    }
    SampleSet::from_classes(&Points::new(inside, 2)?, &Points::new(outside, 2)?)
}

/// Label 1 uniform on `[0, 0.95]^d`, label 2 uniform on `[0.95, 1]^d`.
pub fn synth_hypercube(n_per_class: usize, dim: usize, seed: u64) -> Result<SampleSet> {
    if n_per_class == 0 {
        return Err(Error::invalid("n_per_class", "must be at least 1"));
    }
    if dim == 0 {
        return Err(Error::invalid("dim", "must be at least 1"));
    }
    let mut rng = rng::stream(seed, 0);
    let mut draw = |lo: f64, hi: f64| -> Points {
        let data = (0..n_per_class * dim)
            .map(|_| rng.random_range(lo..=hi))
            .collect();
        Points { data, dim }
    };
    let first = draw(0.0, 0.95);
    let second = draw(0.95, 1.0);
    SampleSet::from_classes(&first, &second)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn loads_simple_csv() {
        let f = write_tmp("a,b,c,label\n1,2,3,1\n4,5,6,1\n7,8,9,2\n0.5,-1e-3,2,2\n");
        let s = load_csv(f.path(), &LabelColumn::default()).unwrap();
        assert_eq!(s.len(), 4);
        assert_eq!(s.dim(), 3);
        assert_eq!(s.class_sizes(), (2, 2));
        assert_eq!(s.row(3), &[0.5, -1e-3, 2.0]);
    }

    #[test]
    fn label_column_by_index() {
        let f = write_tmp("y,a\n2,1.5\n1,2.5\n");
        let s = load_csv(f.path(), &LabelColumn::parse("0")).unwrap();
        assert_eq!(s.labels(), &[Label::Second, Label::First]);
        assert_eq!(s.row(1), &[2.5]);
    }

    #[test]
    fn rejects_bad_label_with_row() {
        let f = write_tmp("a,label\n1,1\n2,3\n");
        let err = load_csv(f.path(), &LabelColumn::default()).unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{msg}");
        assert!(msg.contains("label"), "{msg}");
    }

    #[test]
    fn rejects_nan_and_text() {
        let f = write_tmp("a,label\nNaN,1\n2,2\n");
        assert!(matches!(
            load_csv(f.path(), &LabelColumn::default()),
            Err(Error::Parse { line: 2, .. })
        ));
        let f = write_tmp("a,label\n1,1\nabc,2\n");
        let err = load_csv(f.path(), &LabelColumn::default()).unwrap_err();
        assert!(err.to_string().contains("`abc`"));
    }

    #[test]
    fn rejects_missing_file_and_single_class() {
        assert!(matches!(
            load_csv("/nonexistent/x.csv", &LabelColumn::default()),
            Err(Error::Io { .. })
        ));
        let f = write_tmp("a,label\n1,1\n2,1\n");
        assert!(matches!(
            load_csv(f.path(), &LabelColumn::default()),
            Err(Error::ClassTooSmall { label: 2, .. })
        ));
    }

    #[test]
    fn sample_set_rejects_non_finite() {
        let err = SampleSet::new(vec![1.0, f64::INFINITY], 1, vec![Label::First, Label::Second]);
        assert!(matches!(err, Err(Error::NonFinite { row: 1, column: 0 })));
    }

    #[test]
    fn ring_geometry() {
        let s = synth_ring(200, 3).unwrap();
        assert_eq!(s.class_sizes(), (200, 200));
        for i in 0..s.len() {
            let p = s.row(i);
            let r2 = p[0] * p[0] + p[1] * p[1];
            assert!(p.iter().all(|v| (-5.0..=5.0).contains(v)));
            match s.label(i) {
                Label::First => assert!((1.0..=16.0).contains(&r2)),
                Label::Second => assert!(!(1.0..=16.0).contains(&r2)),
            }
        }
    }

    #[test]
    fn hypercube_ranges() {
        let s = synth_hypercube(100, 16, 1).unwrap();
        assert_eq!(s.dim(), 16);
        for i in 0..s.len() {
            let (lo, hi) = match s.label(i) {
                Label::First => (0.0, 0.95),
                Label::Second => (0.95, 1.0),
            };
            assert!(s.row(i).iter().all(|v| (lo..=hi).contains(v)));
        }
        assert!(synth_hypercube(1, 0, 1).is_err());
    }

    #[test]
    fn generators_are_deterministic() {
        let spec = BlobSpec::new(4.0, 300).unwrap();
        assert_eq!(
            synth_blobs(&spec, BlobDistribution::Q, 5).unwrap(),
            synth_blobs(&spec, BlobDistribution::Q, 5).unwrap()
        );
        assert_ne!(
            synth_blobs(&spec, BlobDistribution::Q, 5).unwrap(),
            synth_blobs(&spec, BlobDistribution::Q, 6).unwrap()
        );
        assert_eq!(synth_ring(20, 9).unwrap(), synth_ring(20, 9).unwrap());
        assert_eq!(synth_hypercube(5, 3, 2).unwrap(), synth_hypercube(5, 3, 2).unwrap());
    }

    #[test]
    fn epsilon_one_makes_q_match_p() {
        let spec = BlobSpec::new(1.0, 50).unwrap();
        let p = synth_blobs(&spec, BlobDistribution::P, 8).unwrap();
        let q = synth_blobs(&spec, BlobDistribution::Q, 8).unwrap();
        assert_eq!(p, q);
        assert!(BlobSpec::new(0.5, 10).is_err());
    }

    /// Empirical covariance eigenvalue ratio of points drawn around one blob.
    #[test]
    fn q_blob_covariance_ratio() {
        let spec = BlobSpec::new(4.0, 100_000).unwrap();
        let (points, centers) = synth_blobs_with_centers(&spec, BlobDistribution::Q, 21).unwrap();
        let blob = 12;
        let [cx, cy] = spec.center(blob);
        let (mut sxx, mut syy, mut sxy, mut n) = (0.0, 0.0, 0.0, 0.0);
        for (p, &c) in points.rows().zip(&centers) {
            if c == blob {
                let (dx, dy) = (p[0] - cx, p[1] - cy);
                sxx += dx * dx;
                syy += dy * dy;
                sxy += dx * dy;
                n += 1.0;
            }
        }
        let (a, b, c) = (sxx / n, syy / n, sxy / n);
        let tr = a + b;
        let disc = ((a - b).powi(2) + 4.0 * c * c).sqrt();
        let ratio = (tr + disc) / (tr - disc);
        assert!((ratio - 4.0).abs() < 0.2, "ratio {ratio}");
        // Major axis along the (1, 1) diagonal.
        assert!(c > 0.0);
    }

    #[test]
    fn blob_marginal_mean_hits_lattice_centroid() {
        let spec = BlobSpec::new(4.0, 50_000).unwrap();
        for which in [BlobDistribution::P, BlobDistribution::Q] {
            let pts = synth_blobs(&spec, which, 4).unwrap();
            let n = pts.len() as f64;
            for axis in 0..2 {
                let vals: Vec<f64> = pts.rows().map(|r| r[axis]).collect();
                let mean = vals.iter().sum::<f64>() / n;
                let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
                let se = (var / n).sqrt();
                assert!((mean - 10.0).abs() < 3.0 * se, "axis {axis}: {mean} vs 10 (se {se})");
            }
        }
    }

    #[test]
    fn relabel_shares_features() {
        let s = synth_ring(5, 1).unwrap();
        let mut labels = s.labels().to_vec();
        labels.reverse();
        let t = s.relabel(labels).unwrap();
        assert!(std::ptr::eq(s.data().as_ptr(), t.data().as_ptr()));
        assert_eq!(t.class1(), &[5, 6, 7, 8, 9]);
        assert!(s.relabel(vec![Label::First; 10]).is_err());
    }

    mod roundtrip {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]
            #[test]
            fn csv_roundtrip_is_exact(
                rows in prop::collection::vec((prop::collection::vec(-1e300f64..1e300, 3), any::<bool>()), 2..40)
            ) {
                let mut data = Vec::new();
                let mut labels = Vec::new();
                for (row, first) in &rows {
                    data.extend(row);
                    labels.push(if *first { Label::First } else { Label::Second });
                }
                labels[0] = Label::First;
                labels[1] = Label::Second;
                let s = SampleSet::new(data, 3, labels).unwrap();
                let f = tempfile::NamedTempFile::new().unwrap();
                s.save_csv(f.path()).unwrap();
                let back = load_csv(f.path(), &LabelColumn::default()).unwrap();
                prop_assert_eq!(back, s);
            }
        }
    }
}
