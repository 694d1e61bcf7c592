use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::{rng, Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split<T> {
    pub train: Vec<T>,
    pub dev: Vec<T>,
    pub test: Vec<T>,
}

/// Seeded shuffle, then contiguous train/dev/test partitions. Dev and test
/// sizes are floored; the remainder goes to train.
pub fn split_dataset<T>(items: Vec<T>, ratios: (f64, f64, f64), seed: u64) -> Result<Split<T>> {
    let (tr, dv, te) = ratios;
    if !(tr > 0.0 && dv > 0.0 && te > 0.0) || libm::fabs(tr + dv + te - 1.0) > 1e-9 {
        return Err(Error::InvalidArgument(alloc::format!("split ratios {ratios:?} must be positive and sum to 1")));
    }
    let n = items.len();
    if n < 3 {
        return Err(Error::InvalidArgument(alloc::format!("cannot split {n} items three ways")));
    }
    let floor = |r: f64| libm::floor(n as f64 * r + 1e-9) as usize;
    let n_dev = floor(dv);
    let n_test = floor(te);
    let n_train = n - n_dev - n_test;

    let mut items = items;
    items.shuffle(&mut rng::named_rng(seed, "split"));
    let test = items.split_off(n_train + n_dev);
    let dev = items.split_off(n_train);
    Ok(Split { train: items, dev, test })
}
