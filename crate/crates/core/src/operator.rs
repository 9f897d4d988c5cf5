//! Matrix realizations of Hermitian operators.
//!
//! Two storage kinds sit behind [`HermitianOperator`]:
//!
//! - `Dense`: an explicit complex matrix, checked against `M = M^dag` on
//!   construction (max deviating entry at most `1e-12` times the largest
//!   entry magnitude).
//! - `PauliAction`: the bit-mask action of a [`PauliSum`]. Every Pauli
//!   string maps a computational basis state to exactly one basis state, so
//!   a string is two masks and a phase; applying the operator never forms a
//!   Kronecker product. Site `i` of `n` occupies bit `n - i`, which makes
//!   site 1 the most significant bit.
//!
//! Values are immutable after construction. Norm estimates are cached
//! behind a `OnceLock`, so sharing across threads is free.

use ndarray::{Array1, Array2, ArrayView1};
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::pauli::{Axis, PauliSum};

/// Largest site count realizable through the bit-mask action.
pub const MAX_ACTION_SITES: usize = 24;
/// Default cap on dense materialization.
pub const DENSE_CAP: usize = 4096;
/// Relative Hermiticity tolerance for dense construction.
pub const HERMITICITY_TOL: f64 = 1e-12;

/// One Pauli string as masks: flip the `x_mask` bits, pick up a sign from
/// the parity of `state & z_mask`, and multiply by `amp` (the coefficient
/// times `i^{#y}`).
#[derive(Debug, Clone, Copy)]
struct MaskedString {
    x_mask: u32,
    z_mask: u32,
    amp: Complex64,
}

#[derive(Debug, Clone)]
enum Storage {
    Dense(Array2<Complex64>),
    PauliAction {
        n_sites: usize,
        strings: Vec<MaskedString>,
    },
}

/// An immutable Hermitian operator with certified Hermiticity.
#[derive(Debug)]
pub struct HermitianOperator {
    dim: usize,
    storage: Storage,
    norm_cache: OnceLock<f64>,
}

impl Clone for HermitianOperator {
    fn clone(&self) -> Self {
        HermitianOperator {
            dim: self.dim,
            storage: self.storage.clone(),
            norm_cache: self.norm_cache.clone(),
        }
    }
}

fn masked_string(coeff: f64, factors: &[(usize, Axis)], n_sites: usize) -> MaskedString {
    let mut x_mask = 0u32;
    let mut z_mask = 0u32;
    let mut ys = 0u32;
    for &(site, axis) in factors {
        let bit = 1u32 << (n_sites - site);
        match axis {
            Axis::X => x_mask |= bit,
            Axis::Y => {
                x_mask |= bit;
                z_mask |= bit;
                ys += 1;
            }
            Axis::Z => z_mask |= bit,
        }
    }
    let amp = match ys % 4 {
        0 => Complex64::new(coeff, 0.0),
        1 => Complex64::new(0.0, coeff),
        2 => Complex64::new(-coeff, 0.0),
        _ => Complex64::new(0.0, -coeff),
    };
    MaskedString { x_mask, z_mask, amp }
}

impl HermitianOperator {
    /// Wrap a dense matrix, verifying Hermiticity.
    pub fn from_dense(matrix: Array2<Complex64>) -> Result<Self> {
        let (r, c) = matrix.dim();
        if r != c {
            return Err(Error::DimensionMismatch { a: r, b: c });
        }
        let mut max_entry = 0.0f64;
        let mut max_dev = 0.0f64;
        for i in 0..r {
            for j in i..r {
                let a = matrix[[i, j]];
                let b = matrix[[j, i]];
                max_entry = max_entry.max(a.norm()).max(b.norm());
                max_dev = max_dev.max((a - b.conj()).norm());
            }
        }
        let tolerance = HERMITICITY_TOL * max_entry.max(1e-300);
        if max_dev > tolerance {
            return Err(Error::NotHermitian {
                deviation: max_dev,
                tolerance,
            });
        }
        Ok(HermitianOperator {
            dim: r,
            storage: Storage::Dense(matrix),
            norm_cache: OnceLock::new(),
        })
    }

    /// Realize a [`PauliSum`] through the bit-mask action (sparse storage).
    pub fn from_pauli(sum: &PauliSum) -> Result<Self> {
        let n = sum.n_sites();
        if n > MAX_ACTION_SITES {
            return Err(Error::Capacity {
                dim: n,
                cap: MAX_ACTION_SITES,
                what: "Pauli-action sites",
            });
        }
        let strings = sum
            .terms()
            .iter()
            .map(|t| masked_string(t.coeff, &t.factors, n))
            .collect();
        Ok(HermitianOperator {
            dim: 1usize << n,
            storage: Storage::PauliAction { n_sites: n, strings },
        norm_cache: OnceLock::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.storage, Storage::Dense(_))
    }

    /// Apply to a state vector.
    pub fn apply(&self, v: ArrayView1<Complex64>) -> Array1<Complex64> {
        assert_eq!(v.len(), self.dim, "vector length mismatch");
        match &self.storage {
            Storage::Dense(m) => m.dot(&v),
            Storage::PauliAction { strings, .. } => {
                let mut out = Array1::<Complex64>::zeros(self.dim);
                let v = v
                    .as_slice()
                    .map(|s| s.to_vec())
                    .unwrap_or_else(|| v.to_vec());
                let out_slice = out.as_slice_mut().expect("contiguous");
                apply_strings(strings, &v, out_slice);
                out
            }
        }
    }

    /// Real expectation value `<v|H|v>` for a (not necessarily normalized) v.
    pub fn expectation(&self, v: ArrayView1<Complex64>) -> f64 {
        let hv = self.apply(v);
        let num: Complex64 = v.iter().zip(hv.iter()).map(|(a, b)| a.conj() * b).sum();
        let den: f64 = v.iter().map(|a| a.norm_sqr()).sum();
        num.re / den
    }

    /// Materialize as a dense matrix (capacity-checked).
    pub fn to_dense(&self) -> Result<Array2<Complex64>> {
        self.to_dense_capped(DENSE_CAP)
    }

    pub fn to_dense_capped(&self, cap: usize) -> Result<Array2<Complex64>> {
        if self.dim > cap {
            return Err(Error::Capacity {
                dim: self.dim,
                cap,
                what: "dense materialization",
            });
        }
        match &self.storage {
            Storage::Dense(m) => Ok(m.clone()),
            Storage::PauliAction { strings, .. } => {
                let mut m = Array2::<Complex64>::zeros((self.dim, self.dim));
                for s in strings {
                    for b in 0..self.dim as u32 {
                        let b2 = (b ^ s.x_mask) as usize;
                        let sign = if (b & s.z_mask).count_ones() % 2 == 1 {
                            -1.0
                        } else {
                            1.0
                        };
                        m[[b2, b as usize]] += s.amp * sign;
                    }
                }
                Ok(m)
            }
        }
    }

    /// Linear combination `sum_k alpha_k H_k` of operators of equal dimension.
    ///
    /// Pauli-action inputs merge symbolically; any dense input densifies the
    /// result (within `DENSE_CAP`).
    pub fn linear_combination(parts: &[(f64, &HermitianOperator)]) -> Result<Self> {
        let dim = match parts.first() {
            Some((_, op)) => op.dim,
            None => return Err(Error::InvalidArgument("empty linear combination".into())),
        };
        for (_, op) in parts {
            if op.dim != dim {
                return Err(Error::DimensionMismatch { a: dim, b: op.dim });
            }
        }
        let all_action = parts
            .iter()
            .all(|(_, op)| matches!(op.storage, Storage::PauliAction { .. }));
        if all_action {
            use std::collections::BTreeMap;
            let mut merged: BTreeMap<(u32, u32), Complex64> = BTreeMap::new();
            let mut n_sites = 0;
            for (alpha, op) in parts {
                if let Storage::PauliAction { n_sites: n, strings } = &op.storage {
                    n_sites = *n;
                    for s in strings {
                        *merged
                            .entry((s.x_mask, s.z_mask))
                            .or_insert(Complex64::new(0.0, 0.0)) += s.amp * *alpha;
                    }
                }
            }
            let strings = merged
                .into_iter()
                .filter(|(_, amp)| amp.norm() > 0.0)
                .map(|((x_mask, z_mask), amp)| MaskedString { x_mask, z_mask, amp })
                .collect();
            return Ok(HermitianOperator {
                dim,
                storage: Storage::PauliAction { n_sites, strings },
                norm_cache: OnceLock::new(),
            });
        }
        let mut m = Array2::<Complex64>::zeros((dim, dim));
        for (alpha, op) in parts {
            let d = op.to_dense()?;
            m.scaled_add(Complex64::new(*alpha, 0.0), &d);
        }
        HermitianOperator::from_dense(m)
    }

    /// Power-iteration estimate of the spectral norm (deterministic seed).
    ///
    /// A lower bound on `||H||_2` that converges quickly for the dominant
    /// eigenvalue; used wherever a spectral scale sets a tolerance.
    pub fn norm_estimate(&self) -> f64 {
        *self.norm_cache.get_or_init(|| {
            let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
            let mut v = Array1::from_shape_fn(self.dim, |_| {
                Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
            });
            let norm = |x: &Array1<Complex64>| x.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            let n0 = norm(&v);
            if n0 == 0.0 || self.dim == 0 {
                return 0.0;
            }
            v.mapv_inplace(|c| c / n0);
            let mut estimate = 0.0f64;
            for _ in 0..30 {
                let hv = self.apply(v.view());
                let hv_norm = norm(&hv);
                if hv_norm < 1e-300 {
                    return estimate;
                }
                estimate = estimate.max(hv_norm);
                v = hv.mapv(|c| c / hv_norm);
            }
            estimate
        })
    }

    /// Spin-parity sectors of a Pauli action whose strings all flip an even
    /// number of bits.
    ///
    /// Returns the (even, odd) sector matrices in the basis of ascending
    /// computational states of each parity, or `None` when the operator does
    /// not conserve parity or is dense.
    pub fn parity_blocks(&self) -> Option<(Array2<Complex64>, Array2<Complex64>)> {
        let Storage::PauliAction { strings, .. } = &self.storage else {
            return None;
        };
        if strings.iter().any(|s| s.x_mask.count_ones() % 2 == 1) {
            return None;
        }
        let dim = self.dim;
        let mut index = vec![0u32; dim];
        let mut states: [Vec<u32>; 2] = [Vec::new(), Vec::new()];
        for b in 0..dim as u32 {
            let p = (b.count_ones() % 2) as usize;
            index[b as usize] = states[p].len() as u32;
            states[p].push(b);
        }
        let mut blocks = Vec::with_capacity(2);
        for p in 0..2 {
            let n = states[p].len();
            let mut m = Array2::<Complex64>::zeros((n, n));
            for (col, &b) in states[p].iter().enumerate() {
                for s in strings {
                    let b2 = b ^ s.x_mask;
                    let sign = if (b & s.z_mask).count_ones() % 2 == 1 {
                        -1.0
                    } else {
                        1.0
                    };
                    m[[index[b2 as usize] as usize, col]] += s.amp * sign;
                }
            }
            blocks.push(m);
        }
        let odd = blocks.pop().unwrap();
        let even = blocks.pop().unwrap();
        Some((even, odd))
    }
}

fn apply_strings(strings: &[MaskedString], v: &[Complex64], out: &mut [Complex64]) {
    // Gather form: out[b] = sum_s amp_s * sign(b ^ x_s) * v[b ^ x_s]; each
    // output entry is assembled in term order, so results do not depend on
    // how the loop is scheduled.
    let body = |offset: usize, chunk: &mut [Complex64]| {
        for (idx, slot) in chunk.iter_mut().enumerate() {
            let b = (offset + idx) as u32;
            let mut acc = Complex64::new(0.0, 0.0);
            for s in strings {
                let src = b ^ s.x_mask;
                let sign = if (src & s.z_mask).count_ones() % 2 == 1 {
                    -1.0
                } else {
                    1.0
                };
                acc += s.amp * sign * v[src as usize];
            }
            *slot = acc;
        }
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        const CHUNK: usize = 1 << 12;
        if out.len() > CHUNK {
            out.par_chunks_mut(CHUNK)
                .enumerate()
                .for_each(|(ci, chunk)| body(ci * CHUNK, chunk));
            return;
        }
    }
    body(0, out);
}
