//! Agreement metrics over paired 1-4 labels.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{SCORE_CLASSES, SCORE_MAX, SCORE_MIN};

/// Two parallel label lists: predicted/reference, or two raters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelPairs {
    a: Vec<u8>,
    b: Vec<u8>,
}

impl LabelPairs {
    pub fn new(a: Vec<u8>, b: Vec<u8>) -> Result<LabelPairs> {
        if a.len() != b.len() {
            return Err(Error::validation(format!(
                "label lists have different lengths ({} vs {})",
                a.len(),
                b.len()
            )));
        }
        if a.is_empty() {
            return Err(Error::EmptyInput("label lists are empty".into()));
        }
        for &v in a.iter().chain(b.iter()) {
            if !(SCORE_MIN..=SCORE_MAX).contains(&v) {
                return Err(Error::validation(format!(
                    "label {v} outside the rubric scale {SCORE_MIN}..{SCORE_MAX}"
                )));
            }
        }
        Ok(LabelPairs { a, b })
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    pub fn sides(&self) -> (&[u8], &[u8]) {
        (&self.a, &self.b)
    }

    /// 4x4 count matrix; entry (i, j) counts pairs with a = i+1, b = j+1.
    pub fn confusion_matrix(&self) -> [[u64; SCORE_CLASSES]; SCORE_CLASSES] {
        let mut m = [[0u64; SCORE_CLASSES]; SCORE_CLASSES];
        for (&x, &y) in self.a.iter().zip(&self.b) {
            m[(x - SCORE_MIN) as usize][(y - SCORE_MIN) as usize] += 1;
        }
        m
    }

    /// Unweighted Cohen's kappa: `(po - pe) / (1 - pe)` with expected
    /// agreement from the marginal products. When both sides are the same
    /// constant (pe = 1, po = 1), agreement is perfect: 1.0.
    pub fn cohen_kappa(&self) -> f64 {
        let m = self.confusion_matrix();
        let n = self.len() as f64;
        // Single division keeps po exactly 1.0 on identical lists.
        let diagonal: u64 = (0..SCORE_CLASSES).map(|i| m[i][i]).sum();
        let po = diagonal as f64 / n;
        let mut pe = 0.0;
        for i in 0..SCORE_CLASSES {
            let row: u64 = m[i].iter().sum();
            let col: u64 = (0..SCORE_CLASSES).map(|j| m[j][i]).sum();
            pe += (row as f64 / n) * (col as f64 / n);
        }
        if (1.0 - pe).abs() < 1e-15 {
            // Both marginals concentrated on one identical label.
            return 1.0;
        }
        (po - pe) / (1.0 - pe)
    }

    /// Quadratic weighted kappa: `1 - sum(w*O) / sum(w*E)` with weights
    /// `((i - j) / (K - 1))^2`, observed counts O, and E the outer product
    /// of the marginals scaled to n. A degenerate denominator (both sides
    /// the same constant) is perfect agreement by construction: 1.0 when
    /// the lists are identical, else 0.0.
    pub fn qwk(&self) -> f64 {
        let m = self.confusion_matrix();
        let n = self.len() as f64;
        let mut row = [0f64; SCORE_CLASSES];
        let mut col = [0f64; SCORE_CLASSES];
        for i in 0..SCORE_CLASSES {
            for j in 0..SCORE_CLASSES {
                row[i] += m[i][j] as f64;
                col[j] += m[i][j] as f64;
            }
        }
        let k1 = (SCORE_CLASSES - 1) as f64;
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..SCORE_CLASSES {
            for j in 0..SCORE_CLASSES {
                let w = ((i as f64 - j as f64) / k1).powi(2);
                num += w * m[i][j] as f64;
                den += w * row[i] * col[j] / n;
            }
        }
        if den == 0.0 {
            let identical = self.a == self.b;
            if !identical {
                log::warn!("degenerate QWK denominator on non-identical lists");
            }
            return if identical { 1.0 } else { 0.0 };
        }
        1.0 - num / den
    }
}
