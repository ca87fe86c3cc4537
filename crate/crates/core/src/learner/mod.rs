//! Class-imbalance correction and the rubric-feature classifier.
//!
//! Evidence scores are imbalanced (score 4 is roughly a tenth of the data),
//! so training data is rebalanced with SMOTE before fitting a depth-limited
//! random forest. Oversampling applies to training folds only; that
//! discipline lives in [`crate::eval`], and synthetic rows carry their seed
//! row's id so leak checks can verify it.

mod forest;

pub use forest::{train_forest, ForestModel, ForestParams, TreeNode};

use serde::{Deserialize, Serialize};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::evidence::FeatureSchema;
use crate::{SCORE_MAX, SCORE_MIN};

/// One labeled feature vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataRow {
    pub id: String,
    pub features: Vec<f64>,
    /// Evidence score 1..=4.
    pub label: u8,
    /// For SMOTE-synthesized rows, the id of the real row interpolation
    /// started from; `None` for original data.
    pub origin: Option<String>,
}

impl DataRow {
    pub fn is_synthetic(&self) -> bool {
        self.origin.is_some()
    }
}

/// A feature dataset with its column schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub schema: FeatureSchema,
    pub rows: Vec<DataRow>,
}

impl Dataset {
    pub fn new(schema: FeatureSchema, rows: Vec<DataRow>) -> Result<Dataset> {
        for row in &rows {
            if row.features.len() != schema.len() {
                return Err(Error::SchemaMismatch(format!(
                    "row {:?} has {} features, schema has {} columns",
                    row.id,
                    row.features.len(),
                    schema.len()
                )));
            }
            if !(SCORE_MIN..=SCORE_MAX).contains(&row.label) {
                return Err(Error::validation(format!(
                    "row {:?} has label {}, outside {SCORE_MIN}..{SCORE_MAX}",
                    row.id, row.label
                )));
            }
        }
        Ok(Dataset { schema, rows })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Row count per label, in label order.
    pub fn class_counts(&self) -> Vec<(u8, usize)> {
        let mut counts = std::collections::BTreeMap::new();
        for row in &self.rows {
            *counts.entry(row.label).or_insert(0usize) += 1;
        }
        counts.into_iter().collect()
    }

    /// A new dataset containing the given row indices, in order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            schema: self.schema.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }

    /// Write the feature table as CSV (`id,label,<feature columns>`) and a
    /// JSON schema sidecar at `<path>.schema.json`.
    pub fn write_delimited(&self, path: &std::path::Path) -> Result<()> {
        use std::io::Write;
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        write!(out, "id,label")?;
        for column in &self.schema.columns {
            write!(out, ",{column}")?;
        }
        writeln!(out)?;
        for row in &self.rows {
            write!(out, "{},{}", row.id, row.label)?;
            for v in &row.features {
                write!(out, ",{v}")?;
            }
            writeln!(out)?;
        }
        out.flush()?;
        let sidecar = serde_json::to_string_pretty(&self.schema)
            .map_err(|e| Error::Internal(format!("serialize schema: {e}")))?;
        let mut name = path
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        name.push_str(".schema.json");
        std::fs::write(path.with_file_name(name), sidecar)?;
        Ok(())
    }
}

/// SMOTE parameters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SmoteParams {
    /// Neighbors considered per seed row; shrinks to class size - 1 when a
    /// class is smaller than k + 1.
    pub k_neighbors: usize,
    pub seed: u64,
}

impl Default for SmoteParams {
    fn default() -> Self {
        SmoteParams {
            k_neighbors: 5,
            seed: 0,
        }
    }
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Oversample every minority class up to the majority count.
///
/// Synthetic rows interpolate between a class member and one of its k
/// nearest same-class neighbors: `x + u * (nn - x)` with `u` uniform in
/// [0, 1). Original rows are retained unchanged and synthetic rows are
/// appended, flagged by [`DataRow::origin`]. An already balanced dataset
/// comes back as-is.
pub fn smote(data: &Dataset, params: &SmoteParams) -> Result<Dataset> {
    if params.k_neighbors == 0 {
        return Err(Error::validation("smote k_neighbors must be >= 1"));
    }
    if data.is_empty() {
        return Err(Error::EmptyInput("cannot oversample an empty dataset".into()));
    }
    let counts = data.class_counts();
    let majority = counts.iter().map(|&(_, n)| n).max().unwrap_or(0);
    for &(label, n) in &counts {
        if n < majority && n < 2 {
            return Err(Error::Degenerate(format!(
                "class {label} has {n} member(s); SMOTE needs at least 2 to interpolate"
            )));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut rows = data.rows.clone();
    for &(label, n) in &counts {
        let needed = majority - n;
        if needed == 0 {
            continue;
        }
        let members: Vec<usize> = data
            .rows
            .iter()
            .enumerate()
            .filter(|(_, r)| r.label == label)
            .map(|(i, _)| i)
            .collect();
        let k = params.k_neighbors.min(n - 1);

        // k nearest same-class neighbors per member; ties keep index order.
        let neighbors: Vec<Vec<usize>> = members
            .iter()
            .map(|&i| {
                let mut by_distance: Vec<(usize, f64)> = members
                    .iter()
                    .filter(|&&j| j != i)
                    .map(|&j| {
                        (
                            j,
                            squared_distance(&data.rows[i].features, &data.rows[j].features),
                        )
                    })
                    .collect();
                by_distance.sort_by(|a, b| {
                    a.1.partial_cmp(&b.1).expect("finite distance").then(a.0.cmp(&b.0))
                });
                by_distance.into_iter().take(k).map(|(j, _)| j).collect()
            })
            .collect();

        for synth_idx in 0..needed {
            // Cycle seeds round-robin so every member contributes evenly.
            let member_slot = synth_idx % members.len();
            let seed_row = &data.rows[members[member_slot]];
            let nn = &data.rows[neighbors[member_slot][rng.gen_range(0..k)]];
            let u: f64 = rng.gen();
            let features: Vec<f64> = seed_row
                .features
                .iter()
                .zip(&nn.features)
                .map(|(&x, &y)| x + u * (y - x))
                .collect();
            rows.push(DataRow {
                id: format!("{}~syn{synth_idx}", seed_row.id),
                features,
                label,
                origin: Some(seed_row.id.clone()),
            });
        }
    }
    Dataset::new(data.schema.clone(), rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn schema(n: usize) -> FeatureSchema {
        FeatureSchema {
            columns: (0..n).map(|i| format!("f{i}")).collect(),
        }
    }

    fn row(id: &str, features: Vec<f64>, label: u8) -> DataRow {
        DataRow {
            id: id.into(),
            features,
            label,
            origin: None,
        }
    }

    fn grid_dataset(counts: &[(u8, usize)]) -> Dataset {
        let mut rows = Vec::new();
        for &(label, n) in counts {
            for i in 0..n {
                let base = f64::from(label) * 10.0;
                rows.push(row(
                    &format!("c{label}-{i}"),
                    vec![base + (i % 7) as f64 * 0.25, base - (i % 5) as f64 * 0.5],
                    label,
                ));
            }
        }
        Dataset::new(schema(2), rows).unwrap()
    }

    #[test]
    fn balanced_dataset_unchanged() {
        let data = grid_dataset(&[(1, 8), (2, 8), (3, 8), (4, 8)]);
        let out = smote(&data, &SmoteParams::default()).unwrap();
        assert_eq!(out, data);
    }

    #[test]
    fn published_counts_balance_to_majority() {
        let data = grid_dataset(&[(1, 538), (2, 789), (3, 512), (4, 237)]);
        let out = smote(&data, &SmoteParams::default()).unwrap();
        assert_eq!(
            out.class_counts(),
            vec![(1, 789), (2, 789), (3, 789), (4, 789)]
        );
        // Originals retained as a prefix.
        assert_eq!(&out.rows[..data.len()], &data.rows[..]);
        for extra in &out.rows[data.len()..] {
            assert!(extra.is_synthetic());
        }
    }

    #[test]
    fn synthetic_rows_lie_on_seed_neighbor_segment() {
        let data = grid_dataset(&[(1, 5), (2, 17)]);
        let out = smote(&data, &SmoteParams { k_neighbors: 3, seed: 9 }).unwrap();
        let originals: std::collections::HashMap<&str, &DataRow> =
            data.rows.iter().map(|r| (r.id.as_str(), r)).collect();
        let mut synthetic = 0;
        for r in out.rows.iter().filter(|r| r.is_synthetic()) {
            synthetic += 1;
            let seed_row = originals[r.origin.as_deref().unwrap()];
            assert_eq!(seed_row.label, r.label);
            // Every coordinate within the bounding box of seed and *some*
            // same-class row; with the seed known, check the convexity
            // envelope over the whole class (the neighbor is one of them).
            for (d, &v) in r.features.iter().enumerate() {
                let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
                for other in data.rows.iter().filter(|o| o.label == r.label) {
                    let bound_lo = seed_row.features[d].min(other.features[d]);
                    let bound_hi = seed_row.features[d].max(other.features[d]);
                    lo = lo.min(bound_lo);
                    hi = hi.max(bound_hi);
                }
                assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
            }
        }
        assert_eq!(synthetic, 12);
    }

    #[test]
    fn tiny_class_rejected() {
        let data = grid_dataset(&[(1, 1), (2, 10)]);
        let err = smote(&data, &SmoteParams::default()).unwrap_err();
        assert!(err.to_string().contains("class 1"), "{err}");
    }

    #[test]
    fn k_shrinks_for_small_classes() {
        let data = grid_dataset(&[(1, 2), (2, 10)]);
        let out = smote(&data, &SmoteParams { k_neighbors: 5, seed: 0 }).unwrap();
        assert_eq!(out.class_counts(), vec![(1, 10), (2, 10)]);
    }

    #[test]
    fn deterministic_under_seed() {
        let data = grid_dataset(&[(1, 6), (2, 20), (3, 9)]);
        let p = SmoteParams { k_neighbors: 4, seed: 123 };
        assert_eq!(smote(&data, &p).unwrap(), smote(&data, &p).unwrap());
    }

    #[test]
    fn dataset_validates_schema_and_labels() {
        assert!(Dataset::new(schema(2), vec![row("a", vec![1.0], 2)]).is_err());
        assert!(Dataset::new(schema(1), vec![row("a", vec![1.0], 5)]).is_err());
    }
}
