//! Depth-limited random forest with Gini splits.
//!
//! Each tree trains on a bootstrap resample and considers a random subset of
//! features at every split (ceil(sqrt(F)) by default). Prediction is a
//! majority vote over trees, ties to the lower label. Per-tree randomness
//! derives from the master seed through independent ChaCha streams, so tree
//! training order never matters and forests are reproducible.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evidence::FeatureSchema;
use crate::{SCORE_CLASSES, SCORE_MIN};

use super::Dataset;

/// Random forest hyperparameters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForestParams {
    pub tree_count: usize,
    pub max_depth: usize,
    /// Candidate features per split; `None` means ceil(sqrt(F)).
    pub features_per_split: Option<usize>,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            tree_count: 100,
            max_depth: 5,
            features_per_split: None,
            seed: 0,
        }
    }
}

impl ForestParams {
    pub fn validate(&self) -> Result<()> {
        if self.tree_count < 1 {
            return Err(Error::validation("tree_count must be >= 1"));
        }
        if self.max_depth < 1 {
            return Err(Error::validation("max_depth must be >= 1"));
        }
        if self.features_per_split == Some(0) {
            return Err(Error::validation("features_per_split must be >= 1"));
        }
        Ok(())
    }
}

/// One node in the flattened tree array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        /// Index of the child taking `x[feature] <= threshold`.
        left: usize,
        right: usize,
    },
    Leaf {
        label: u8,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<TreeNode>,
}

impl Tree {
    fn predict(&self, features: &[f64]) -> u8 {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                TreeNode::Leaf { label } => return *label,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if features[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    };
                }
            }
        }
    }

    /// Number of split levels on the deepest path.
    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], at: usize) -> usize {
            match &nodes[at] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => {
                    1 + walk(nodes, *left).max(walk(nodes, *right))
                }
            }
        }
        walk(&self.nodes, 0)
    }
}

/// A trained forest, self-describing for serialization: parameters, the
/// feature schema it was trained on, and the per-tree node arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub params: ForestParams,
    pub schema: FeatureSchema,
    pub trees: Vec<Tree>,
}

impl ForestModel {
    /// Per-label vote tally over all trees, index 0 holding label 1.
    pub fn votes(&self, features: &[f64]) -> Result<[u32; SCORE_CLASSES]> {
        if features.len() != self.schema.len() {
            return Err(Error::SchemaMismatch(format!(
                "feature vector has {} entries, model expects {}",
                features.len(),
                self.schema.len()
            )));
        }
        let mut votes = [0u32; SCORE_CLASSES];
        for tree in &self.trees {
            votes[(tree.predict(features) - SCORE_MIN) as usize] += 1;
        }
        Ok(votes)
    }

    /// Majority vote; ties go to the lower label.
    pub fn predict(&self, features: &[f64]) -> Result<u8> {
        let votes = self.votes(features)?;
        let mut best = 0;
        for (i, &v) in votes.iter().enumerate() {
            if v > votes[best] {
                best = i;
            }
        }
        Ok(best as u8 + SCORE_MIN)
    }

    /// Deepest split depth over all trees.
    pub fn max_tree_depth(&self) -> usize {
        self.trees.iter().map(Tree::depth).max().unwrap_or(0)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self)
            .map_err(|e| Error::Internal(format!("serialize forest: {e}")))
    }

    pub fn from_json(json: &str) -> Result<ForestModel> {
        serde_json::from_str(json)
            .map_err(|e| Error::validation(format!("malformed forest model: {e}")))
    }
}

fn gini(counts: &[usize; SCORE_CLASSES], total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let mut impurity = 1.0;
    for &c in counts {
        let p = c as f64 / total as f64;
        impurity -= p * p;
    }
    impurity
}

fn majority_label(rows: &[usize], data: &Dataset) -> u8 {
    let mut counts = [0usize; SCORE_CLASSES];
    for &r in rows {
        counts[(data.rows[r].label - SCORE_MIN) as usize] += 1;
    }
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    best as u8 + SCORE_MIN
}

struct TreeBuilder<'a> {
    data: &'a Dataset,
    features_per_split: usize,
    max_depth: usize,
    nodes: Vec<TreeNode>,
}

impl<'a> TreeBuilder<'a> {
    fn grow(&mut self, rows: &[usize], depth: usize, rng: &mut ChaCha8Rng) -> usize {
        let mut counts = [0usize; SCORE_CLASSES];
        for &r in rows {
            counts[(self.data.rows[r].label - SCORE_MIN) as usize] += 1;
        }
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        if pure || depth >= self.max_depth || rows.len() < 2 {
            let label = majority_label(rows, self.data);
            self.nodes.push(TreeNode::Leaf { label });
            return self.nodes.len() - 1;
        }

        let feature_count = self.data.schema.len();
        let mut candidates: Vec<usize> = (0..feature_count).collect();
        candidates.shuffle(rng);
        candidates.truncate(self.features_per_split.min(feature_count));
        candidates.sort_unstable();

        let parent_gini = gini(&counts, rows.len());
        let mut best: Option<(f64, usize, f64)> = None; // (weighted gini, feature, threshold)
        for &feature in &candidates {
            let mut values: Vec<f64> = rows
                .iter()
                .map(|&r| self.data.rows[r].features[feature])
                .collect();
            values.sort_by(|a, b| a.partial_cmp(b).expect("finite feature"));
            values.dedup();
            for pair in values.windows(2) {
                let threshold = (pair[0] + pair[1]) / 2.0;
                let mut left = [0usize; SCORE_CLASSES];
                let mut right = [0usize; SCORE_CLASSES];
                let mut n_left = 0;
                for &r in rows {
                    let slot = (self.data.rows[r].label - SCORE_MIN) as usize;
                    if self.data.rows[r].features[feature] <= threshold {
                        left[slot] += 1;
                        n_left += 1;
                    } else {
                        right[slot] += 1;
                    }
                }
                let n_right = rows.len() - n_left;
                if n_left == 0 || n_right == 0 {
                    continue;
                }
                let weighted = (n_left as f64 * gini(&left, n_left)
                    + n_right as f64 * gini(&right, n_right))
                    / rows.len() as f64;
                if best.map_or(true, |(b, _, _)| weighted < b) {
                    best = Some((weighted, feature, threshold));
                }
            }
        }

        match best {
            Some((weighted, feature, threshold)) if weighted < parent_gini - 1e-12 => {
                let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
                    .iter()
                    .partition(|&&r| self.data.rows[r].features[feature] <= threshold);
                let slot = self.nodes.len();
                self.nodes.push(TreeNode::Leaf { label: 0 }); // placeholder
                let left = self.grow(&left_rows, depth + 1, rng);
                let right = self.grow(&right_rows, depth + 1, rng);
                self.nodes[slot] = TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                };
                slot
            }
            _ => {
                let label = majority_label(rows, self.data);
                self.nodes.push(TreeNode::Leaf { label });
                self.nodes.len() - 1
            }
        }
    }
}

/// Train a random forest. A single-class dataset yields a constant
/// classifier (with a warning) rather than an error.
pub fn train_forest(data: &Dataset, params: &ForestParams) -> Result<ForestModel> {
    params.validate()?;
    if data.is_empty() {
        return Err(Error::EmptyInput("cannot train a forest on no rows".into()));
    }
    let classes = data.class_counts();
    if classes.len() < 2 {
        log::warn!(
            "training data has a single class ({}); returning a constant classifier",
            classes[0].0
        );
        return Ok(ForestModel {
            params: params.clone(),
            schema: data.schema.clone(),
            trees: vec![Tree {
                nodes: vec![TreeNode::Leaf {
                    label: classes[0].0,
                }],
            }],
        });
    }

    let features_per_split = params
        .features_per_split
        .unwrap_or_else(|| (data.schema.len() as f64).sqrt().ceil() as usize)
        .max(1);

    let mut trees = Vec::with_capacity(params.tree_count);
    for tree_idx in 0..params.tree_count {
        // Independent deterministic stream per tree.
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        rng.set_stream(tree_idx as u64 + 1);
        let bootstrap: Vec<usize> = (0..data.len())
            .map(|_| rng.gen_range(0..data.len()))
            .collect();
        let mut builder = TreeBuilder {
            data,
            features_per_split,
            max_depth: params.max_depth,
            nodes: Vec::new(),
        };
        builder.grow(&bootstrap, 0, &mut rng);
        trees.push(Tree {
            nodes: builder.nodes,
        });
    }
    Ok(ForestModel {
        params: params.clone(),
        schema: data.schema.clone(),
        trees,
    })
}
