//! Shared helpers for unit tests.

use ndarray::Array2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::operator::HermitianOperator;

pub fn random_hermitian_dense(d: usize, seed: u64) -> Array2<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = Array2::<Complex64>::zeros((d, d));
    for i in 0..d {
        for j in i..d {
            let re = rng.gen::<f64>() - 0.5;
            let im = if i == j { 0.0 } else { rng.gen::<f64>() - 0.5 };
            m[[i, j]] = Complex64::new(re, im);
            m[[j, i]] = Complex64::new(re, -im);
        }
    }
    m
}

pub fn diag_op(values: &[f64]) -> HermitianOperator {
    let n = values.len();
    let mut m = Array2::<Complex64>::zeros((n, n));
    for (i, &v) in values.iter().enumerate() {
        m[[i, i]] = Complex64::new(v, 0.0);
    }
    HermitianOperator::from_dense(m).unwrap()
}
