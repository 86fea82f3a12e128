//! Binary classification datasets: ingestion, scaling, imbalance statistics
//! and stratified fold plans.
//!
//! Labels are stored as `+1` / `-1`. At ingestion the minority class is always
//! mapped to `+1`; on an exact tie the class listed second in the source wins.

mod delimited;
mod folds;
mod keel;
mod scale;

pub use delimited::{load_csv, read_csv_table, CsvOptions, LabelColumn};
pub use folds::{stratified_kfold, FoldPlan};
pub use keel::{load_keel, parse_keel, read_keel_table};
pub use scale::{scale_features, FeatureScaling};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Label of the (minority) positive class.
pub const POSITIVE: i8 = 1;
/// Label of the (majority) negative class.
pub const NEGATIVE: i8 = -1;

/// Parsed tabular data before label encoding.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    pub feature_names: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<String>,
    /// Class values in source order (declaration order, or first appearance).
    pub class_order: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    n_features: usize,
    labels: Vec<i8>,
    feature_names: Vec<String>,
    /// `[positive, negative]` original class values.
    class_names: [String; 2],
}

impl Dataset {
    /// Builds a dataset from rows and already-encoded `±1` labels.
    ///
    /// Both classes must be present and every feature value finite. An empty
    /// `feature_names` is replaced by `x0, x1, ...`.
    pub fn new(
        rows: Vec<Vec<f64>>,
        labels: Vec<i8>,
        feature_names: Vec<String>,
        class_names: [String; 2],
    ) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::invalid(format!(
                "{} rows but {} labels",
                rows.len(),
                labels.len()
            )));
        }
        let n_features = rows.first().map_or(feature_names.len(), Vec::len);
        let feature_names = if feature_names.is_empty() {
            (0..n_features).map(|j| format!("x{j}")).collect()
        } else {
            feature_names
        };
        if feature_names.len() != n_features {
            return Err(Error::invalid(format!(
                "{} feature names for {} columns",
                feature_names.len(),
                n_features
            )));
        }
        let mut features = Vec::with_capacity(rows.len() * n_features);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n_features {
                return Err(Error::invalid(format!(
                    "row {i} has {} values, expected {n_features}",
                    row.len()
                )));
            }
            if let Some(j) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::invalid(format!(
                    "non-finite value in row {i}, feature '{}'",
                    feature_names[j]
                )));
            }
            features.extend_from_slice(row);
        }
        Self::from_flat(features, n_features, labels, feature_names, class_names)
    }

    fn from_flat(
        features: Vec<f64>,
        n_features: usize,
        labels: Vec<i8>,
        feature_names: Vec<String>,
        class_names: [String; 2],
    ) -> Result<Self> {
        if let Some(bad) = labels.iter().find(|&&y| y != POSITIVE && y != NEGATIVE) {
            return Err(Error::invalid(format!("label {bad} is not +1 or -1")));
        }
        if !labels.contains(&POSITIVE) || !labels.contains(&NEGATIVE) {
            return Err(Error::invalid(
                "data contains a single class; both classes are required",
            ));
        }
        Ok(Self {
            features,
            n_features,
            labels,
            feature_names,
            class_names,
        })
    }

    /// Encodes string labels, mapping the minority class to `+1`.
    pub fn from_table(table: RawTable) -> Result<Self> {
        let RawTable {
            feature_names,
            rows,
            labels,
            class_order,
        } = table;
        let mut order: Vec<String> = Vec::new();
        for class in class_order.iter().chain(labels.iter()) {
            if !order.contains(class) {
                order.push(class.clone());
            }
        }
        let counts: Vec<usize> = order
            .iter()
            .map(|c| labels.iter().filter(|l| *l == c).count())
            .collect();
        let present: Vec<usize> = (0..order.len()).filter(|&c| counts[c] > 0).collect();
        match present.len() {
            0 => return Err(Error::invalid("no data rows")),
            1 => {
                return Err(Error::invalid(format!(
                    "data contains a single class ('{}'); both classes are required",
                    order[present[0]]
                )))
            }
            2 => {}
            k => {
                return Err(Error::invalid(format!(
                    "found {k} classes; only binary problems are supported"
                )))
            }
        }
        let (first, second) = (present[0], present[1]);
        // Ties go to the class listed second.
        let (pos, neg) = if counts[first] < counts[second] {
            (first, second)
        } else {
            (second, first)
        };
        let encoded = labels
            .iter()
            .map(|l| if *l == order[pos] { POSITIVE } else { NEGATIVE })
            .collect();
        Self::new(
            rows,
            encoded,
            feature_names,
            [order[pos].clone(), order[neg].clone()],
        )
    }

    pub fn n_samples(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        (0..self.n_samples()).map(move |i| self.row(i))
    }

    pub fn labels(&self) -> &[i8] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> i8 {
        self.labels[i]
    }

    /// Label of sample `i` as a real number.
    pub fn y(&self, i: usize) -> f64 {
        f64::from(self.labels[i])
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    /// Original class values as `[positive, negative]`.
    pub fn class_names(&self) -> &[String; 2] {
        &self.class_names
    }

    pub fn class_name(&self, label: i8) -> &str {
        if label == POSITIVE {
            &self.class_names[0]
        } else {
            &self.class_names[1]
        }
    }

    pub fn count(&self, label: i8) -> usize {
        self.labels.iter().filter(|&&y| y == label).count()
    }

    pub fn indices_of(&self, label: i8) -> Vec<usize> {
        (0..self.n_samples())
            .filter(|&i| self.labels[i] == label)
            .collect()
    }

    /// Rows selected by `indices`, in that order. Fails if a class vanishes.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let mut features = Vec::with_capacity(indices.len() * self.n_features);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            if i >= self.n_samples() {
                return Err(Error::invalid(format!("sample index {i} out of range")));
            }
            features.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        Self::from_flat(
            features,
            self.n_features,
            labels,
            self.feature_names.clone(),
            self.class_names.clone(),
        )
    }

    /// Same schema, different rows. Used by the resamplers.
    pub fn with_rows(&self, rows: Vec<Vec<f64>>, labels: Vec<i8>) -> Result<Self> {
        Self::new(
            rows,
            labels,
            self.feature_names.clone(),
            self.class_names.clone(),
        )
    }

    /// SHA-256 over the rows (features and labels) in order, hex encoded.
    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        for i in 0..self.n_samples() {
            hasher.update(row_bytes(self.row(i), self.labels[i]));
        }
        hex_string(&hasher.finalize())
    }
}

/// Byte image of one labelled row; identical rows give identical images.
pub fn row_bytes(row: &[f64], label: i8) -> Vec<u8> {
    let mut bytes = Vec::with_capacity(row.len() * 8 + 1);
    for v in row {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    bytes.push(label as u8);
    bytes
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// `n_majority / n_minority`, always `>= 1`.
pub fn imbalance_ratio(d: &Dataset) -> f64 {
    let pos = d.count(POSITIVE);
    let neg = d.count(NEGATIVE);
    pos.max(neg) as f64 / pos.min(neg) as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImbalanceGroup {
    Small,
    Medium,
    High,
}

impl ImbalanceGroup {
    /// Small: IR <= 3, medium: 3 < IR <= 20, high: IR > 20.
    pub fn of(ratio: f64) -> Self {
        if ratio <= 3.0 {
            ImbalanceGroup::Small
        } else if ratio <= 20.0 {
            ImbalanceGroup::Medium
        } else {
            ImbalanceGroup::High
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(labels: &[&str], order: &[&str]) -> RawTable {
        RawTable {
            feature_names: vec!["a".into()],
            rows: (0..labels.len()).map(|i| vec![i as f64]).collect(),
            labels: labels.iter().map(|s| s.to_string()).collect(),
            class_order: order.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn minority_becomes_positive() {
        let d = Dataset::from_table(table(&["a", "a", "a", "b"], &[])).unwrap();
        assert_eq!(d.labels(), &[-1, -1, -1, 1]);
        assert_eq!(d.class_names(), &["b".to_string(), "a".to_string()]);
    }

    #[test]
    fn tie_goes_to_second_listed_class() {
        let d = Dataset::from_table(table(&["x", "y"], &["x", "y"])).unwrap();
        assert_eq!(d.labels(), &[-1, 1]);
        let d = Dataset::from_table(table(&["x", "y"], &["y", "x"])).unwrap();
        assert_eq!(d.labels(), &[1, -1]);
    }

    #[test]
    fn single_and_multi_class_rejected() {
        assert!(matches!(
            Dataset::from_table(table(&["a", "a"], &["a", "b"])),
            Err(Error::Validation(_))
        ));
        assert!(matches!(
            Dataset::from_table(table(&["a", "b", "c"], &[])),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn non_finite_rejected() {
        let err = Dataset::new(
            vec![vec![1.0], vec![f64::NAN]],
            vec![1, -1],
            vec![],
            ["p".into(), "n".into()],
        )
        .unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn imbalance_ratio_examples() {
        let d = Dataset::from_table(table(&["a"; 10].iter().chain(&["b"; 10]).copied().collect::<Vec<_>>(), &[]))
            .unwrap();
        assert_eq!(imbalance_ratio(&d), 1.0);
        // ecoli-0_vs_1: 220 samples, 143 / 77.
        let labels: Vec<&str> = std::iter::repeat("n")
            .take(143)
            .chain(std::iter::repeat("p").take(77))
            .collect();
        let d = Dataset::from_table(table(&labels, &[])).unwrap();
        assert_eq!(format!("{:.3}", imbalance_ratio(&d)), "1.857");
    }

    #[test]
    fn imbalance_groups() {
        assert_eq!(ImbalanceGroup::of(3.0), ImbalanceGroup::Small);
        assert_eq!(ImbalanceGroup::of(3.01), ImbalanceGroup::Medium);
        assert_eq!(ImbalanceGroup::of(20.0), ImbalanceGroup::Medium);
        assert_eq!(ImbalanceGroup::of(20.5), ImbalanceGroup::High);
    }

    #[test]
    fn subset_keeps_schema() {
        let d = Dataset::from_table(table(&["a", "a", "b", "b", "a"], &[])).unwrap();
        let s = d.subset(&[4, 2]).unwrap();
        assert_eq!(s.row(0), &[4.0]);
        assert_eq!(s.labels(), &[-1, 1]);
        assert!(d.subset(&[0, 1]).is_err());
    }
}
