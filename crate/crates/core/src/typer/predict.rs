use alloc::vec::Vec;

use rand::Rng;

use crate::error::check_len;
use crate::math::{dot, sigmoid, Matrix};
use crate::{rng, Error, Result};

/// Probability clamp applied inside the loss.
pub const PROB_EPS: f64 = 1e-7;

/// `E ∈ ℝ^{|T|×d}`: one embedding row per entity type.
#[derive(Debug, Clone, PartialEq)]
pub struct TypeEmbeddingMatrix(pub Matrix);

impl TypeEmbeddingMatrix {
    /// Zero-mean uniform entries in `[-1/√d, 1/√d)`.
    pub fn init(types: usize, dim: usize, seed: u64) -> Self {
        let mut rng = rng::named_rng(seed, "type-embedding-init");
        let bound = 1.0 / libm::sqrt(dim as f64);
        let mut m = Matrix::zeros(types, dim);
        m.as_mut_slice().iter_mut().for_each(|w| *w = rng.gen_range(-bound..bound));
        Self(m)
    }

    pub fn zeros(types: usize, dim: usize) -> Self {
        Self(Matrix::zeros(types, dim))
    }

    pub fn num_types(&self) -> usize {
        self.0.rows()
    }

    pub fn dim(&self) -> usize {
        self.0.cols()
    }
}

/// Per-type probabilities; every entry lies strictly inside `(0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseTypeVector(Vec<f64>);

impl SparseTypeVector {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if let Some(bad) = probs.iter().find(|p| !(**p > 0.0 && **p < 1.0)) {
            return Err(Error::InvalidArgument(alloc::format!("probability {bad} outside (0, 1)")));
        }
        Ok(Self(probs))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Gold type membership `t*`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LabelVector(pub Vec<bool>);

impl LabelVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

const LARGEST_BELOW_ONE: f64 = 1.0 - f64::EPSILON / 2.0;

/// `σ(E_j · h)` for every type `j`. Saturated values are nudged back inside
/// the open interval.
pub fn predict_types(h: &[f64], e: &TypeEmbeddingMatrix) -> Result<SparseTypeVector> {
    check_len(e.dim(), h.len())?;
    let probs =
        (0..e.num_types()).map(|j| sigmoid(dot(e.0.row(j), h)).clamp(f64::MIN_POSITIVE, LARGEST_BELOW_ONE)).collect();
    Ok(SparseTypeVector(probs))
}

/// Summed binary cross-entropy over types, with probabilities clamped to
/// `[ε, 1-ε]`.
pub fn bce_loss(t: &SparseTypeVector, gold: &LabelVector) -> Result<f64> {
    check_len(t.len(), gold.len())?;
    Ok(t.0
        .iter()
        .zip(&gold.0)
        .map(|(&p, &y)| {
            let p = p.clamp(PROB_EPS, 1.0 - PROB_EPS);
            if y {
                -libm::log(p)
            } else {
                -libm::log(1.0 - p)
            }
        })
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn zero_embeddings_give_one_half() {
        let t = predict_types(&[1.0, -2.0, 3.0], &TypeEmbeddingMatrix::zeros(4, 3)).unwrap();
        assert!(t.as_slice().iter().all(|&p| p == 0.5));
    }

    #[test]
    fn logit_ln3_gives_three_quarters() {
        let e = TypeEmbeddingMatrix(Matrix::from_vec(1, 2, vec![libm::log(3.0), 0.0]).unwrap());
        let t = predict_types(&[1.0, 5.0], &e).unwrap();
        assert!((t.as_slice()[0] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn random_projection_matches_scalar_loop() {
        let mut r = rng::rng(5);
        let e = TypeEmbeddingMatrix::init(20, 8, 6);
        let h: Vec<f64> = (0..8).map(|_| r.gen_range(-2.0..2.0)).collect();
        let t = predict_types(&h, &e).unwrap();
        for j in 0..20 {
            let mut z = 0.0;
            for k in 0..8 {
                z += e.0.get(j, k) * h[k];
            }
            let expected = 1.0 / (1.0 + libm::exp(-z));
            assert!((t.as_slice()[j] - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn saturated_logits_stay_inside_the_open_interval() {
        let e = TypeEmbeddingMatrix(Matrix::from_vec(2, 1, vec![1000.0, -1000.0]).unwrap());
        let t = predict_types(&[1.0], &e).unwrap();
        assert!(t.as_slice().iter().all(|&p| p > 0.0 && p < 1.0));
        assert!(predict_types(&[1.0, 2.0], &e).is_err());
    }

    #[test]
    fn bce_matches_analytic_values() {
        let t = SparseTypeVector::new(vec![0.5, 0.5]).unwrap();
        let loss = bce_loss(&t, &LabelVector(vec![true, false])).unwrap();
        assert!((loss - 2.0 * core::f64::consts::LN_2).abs() < 1e-12);
        assert!((loss - 1.386294).abs() < 1e-6);

        let near = SparseTypeVector::new(vec![1.0 - 1e-9, 1e-9, 1e-9]).unwrap();
        let gold = LabelVector(vec![true, false, false]);
        let loss = bce_loss(&near, &gold).unwrap();
        assert!(loss >= 0.0 && loss <= 2.0 * 3.0 * -libm::log(1.0 - PROB_EPS));
        assert!(bce_loss(&near, &LabelVector(vec![true])).is_err());
    }

    #[test]
    fn bce_matches_scalar_loop() {
        let mut r = rng::rng(8);
        let probs: Vec<f64> = (0..50).map(|_| r.gen_range(0.001..0.999)).collect();
        let gold: Vec<bool> = (0..50).map(|_| r.gen_bool(0.3)).collect();
        let mut expected = 0.0;
        for j in 0..50 {
            let y = if gold[j] { 1.0 } else { 0.0 };
            expected -= y * libm::log(probs[j]) + (1.0 - y) * libm::log(1.0 - probs[j]);
        }
        let got = bce_loss(&SparseTypeVector::new(probs).unwrap(), &LabelVector(gold)).unwrap();
        assert!((got - expected).abs() < 1e-10);
    }
}
