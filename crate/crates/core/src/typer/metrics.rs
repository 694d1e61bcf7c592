use super::{LabelVector, SparseTypeVector};
use crate::error::check_len;
use crate::{Error, Result};

/// Macro-averaged F1 over the types that occur at least once in `gold`.
/// A type is predicted when its probability exceeds `threshold`; per-type
/// precision, recall and F1 use `0/0 = 0`.
pub fn macro_f1(predictions: &[SparseTypeVector], gold: &[LabelVector], threshold: f64) -> Result<f64> {
    check_len(gold.len(), predictions.len())?;
    if gold.is_empty() {
        return Err(Error::EmptyInput("evaluation set"));
    }
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::InvalidArgument(alloc::format!("threshold {threshold} outside (0, 1)")));
    }
    let types = gold[0].len();
    let mut tp = alloc::vec![0usize; types];
    let mut fp = alloc::vec![0usize; types];
    let mut fneg = alloc::vec![0usize; types];
    for (p, g) in predictions.iter().zip(gold) {
        check_len(types, p.len())?;
        check_len(types, g.len())?;
        for j in 0..types {
            match (p.as_slice()[j] > threshold, g.0[j]) {
                (true, true) => tp[j] += 1,
                (true, false) => fp[j] += 1,
                (false, true) => fneg[j] += 1,
                (false, false) => {}
            }
        }
    }
    let ratio = |num: usize, den: usize| {
        if den == 0 {
            0.0
        } else {
            num as f64 / den as f64
        }
    };
    let mut total = 0.0;
    let mut present = 0usize;
    for j in 0..types {
        if tp[j] + fneg[j] == 0 {
            continue;
        }
        present += 1;
        let precision = ratio(tp[j], tp[j] + fp[j]);
        let recall = ratio(tp[j], tp[j] + fneg[j]);
        if precision + recall > 0.0 {
            total += 2.0 * precision * recall / (precision + recall);
        }
    }
    if present == 0 {
        return Err(Error::EmptyInput("gold type set"));
    }
    Ok(total / present as f64)
}
