use super::SparseVector;
use crate::error::{Error, Result};

/// Per-feature log-count ratios fitted on binarized documents.
#[derive(Debug, Clone, PartialEq)]
pub struct NbSvmTransform {
    pub r: Vec<f64>,
    pub alpha: f64,
    /// Weight interpolation applied by the classifier.
    pub interpolation_beta: f64,
}

/// `p = alpha + presence counts over positive docs`, `q` likewise for
/// negatives, `r = ln((p/|p|_1) / (q/|q|_1))` over `n_features` columns.
pub fn nbsvm_fit(docs: &[SparseVector], positive: &[bool], n_features: usize, alpha: f64) -> Result<NbSvmTransform> {
    if docs.len() != positive.len() {
        return Err(Error::invalid("documents and labels differ in length"));
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::invalid("alpha must be positive"));
    }
    if !positive.iter().any(|&p| p) || positive.iter().all(|&p| p) {
        return Err(Error::SingleClass("NB-SVM needs documents of both classes".into()));
    }
    let mut p = vec![alpha; n_features];
    let mut q = vec![alpha; n_features];
    for (doc, &pos) in docs.iter().zip(positive) {
        let side = if pos { &mut p } else { &mut q };
        for &(id, _) in doc.entries() {
            if id < n_features {
                side[id] += 1.0;
            }
        }
    }
    let (np, nq): (f64, f64) = (p.iter().sum(), q.iter().sum());
    let r = p
        .iter()
        .zip(&q)
        .map(|(pf, qf)| ((pf / np) / (qf / nq)).ln())
        .collect();
    Ok(NbSvmTransform {
        r,
        alpha,
        interpolation_beta: 0.25,
    })
}

impl NbSvmTransform {
    /// `r` times the document's presence vector; unseen features are dropped.
    pub fn apply(&self, doc: &SparseVector) -> SparseVector {
        SparseVector::from_entries(
            doc.entries()
                .iter()
                .filter(|e| e.0 < self.r.len())
                .map(|&(id, _)| (id, self.r[id]))
                .collect::<Vec<_>>(),
        )
    }
}
