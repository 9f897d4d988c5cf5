//! Gap upper bounds from witness sweeps.
//!
//! Given a Hamiltonian `H` and a Hermitian witness `V` such that
//!
//! 1. the ground state of `H + tV` is constant on `[0, t*]`, and
//! 2. `<H>` over that ground state jumps by `epsilon` at `t*`,
//!
//! the energy gap of `H` obeys `0 <= gap(H) <= epsilon`. [`sweep`] traces
//! `<H>` and the squared overlap with the `t = 0` ground space over a `t`
//! grid, locates the transition by bisection, measures the jump two-sided
//! at `t* +- delta`, and verifies both witness assumptions. Ground-state
//! constancy is operationalized as squared overlap `>= 1 - overlap_tol`;
//! degenerate ground spaces compare through principal angles.
//!
//! If the overlap decays over a window wider than ten bisection resolutions
//! instead of dropping sharply, the transition is flagged continuous and
//! `epsilon` reports the maximum `<H>` variation across the window - an
//! upper estimate rather than a certified bound.
//!
//! The witness generators cover the universal constructions: for `H` with
//! its ground energy shifted to zero, `H0^2 - H0` annihilates every ground
//! vector, and so does `H0 Z H0` for any `Z` - here a Gaussian Orthogonal
//! Ensemble sample, `Z = (G + G^T)/2` with standard normal entries.

use ndarray::{Array1, Array2};
use ndarray_linalg::{EigValsh, UPLO};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::exec::par_map;
use crate::operator::{HermitianOperator, DENSE_CAP};
use crate::spectra::{ground_space, lowest_levels, GroundSpace};

#[derive(Debug, Clone, Copy)]
pub struct SweepOptions {
    /// Ground-state constancy threshold on the squared overlap.
    pub overlap_tol: f64,
    /// Two-sided jump evaluation offset, as a fraction of `t_max`.
    pub epsilon_delta_frac: f64,
    /// Transition bisection resolution, as a fraction of `t_max`.
    pub bisection_frac: f64,
    /// Ground-degeneracy tolerance override.
    pub degeneracy_tol: Option<f64>,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            overlap_tol: 1e-10,
            epsilon_delta_frac: 1e-6,
            bisection_frac: 1e-8,
            degeneracy_tol: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AssumptionFlags {
    pub ground_constant_on_interval: bool,
    pub eigenvector_of_v: bool,
}

/// Trace and verdict of one `H + tV` sweep.
#[derive(Debug, Clone)]
pub struct GapSweepResult {
    pub t_grid: Vec<f64>,
    /// `<H>` over the ground state of `H + tV` (minimum over the ground
    /// space when degenerate).
    pub exp_h: Vec<f64>,
    /// Squared overlap of the instantaneous ground space with the `t = 0`
    /// ground space (cosine squared of the largest principal angle).
    pub overlap: Vec<f64>,
    /// Ground energy of `H + tV` along the grid.
    pub ground_energy: Vec<f64>,
    pub t_star: Option<f64>,
    pub epsilon: Option<f64>,
    /// `O(delta * ||V||)` error of the two-sided jump evaluation.
    pub epsilon_error_bound: Option<f64>,
    pub assumptions: AssumptionFlags,
    pub ground_degenerate_at_zero: bool,
    /// Overlap decayed smoothly instead of jumping; `epsilon` is then a
    /// non-certified variation estimate.
    pub continuous_transition: bool,
    pub certified: bool,
    pub overlap_tol: f64,
}

/// Certified-bound report derived from a sweep.
#[derive(Debug, Clone)]
pub struct BoundReport {
    pub epsilon: Option<f64>,
    /// When true: `0 <= gap(H) <= epsilon`.
    pub valid: bool,
    pub failed_conditions: Vec<String>,
}

struct PointSolve {
    exp_h: f64,
    overlap: f64,
    ground_energy: f64,
}

fn solve_point(
    h: &HermitianOperator,
    v: &HermitianOperator,
    t: f64,
    g0: &GroundSpace,
    deg_tol: f64,
) -> Result<PointSolve> {
    let op = HermitianOperator::linear_combination(&[(1.0, h), (t, v)])?;
    let gs = ground_space(&op, deg_tol)?;
    Ok(PointSolve {
        exp_h: min_expectation(h, &gs.vectors),
        overlap: subspace_overlap(&g0.vectors, &gs.vectors),
        ground_energy: gs.energies[0],
    })
}

/// Smallest eigenvalue of the compression of `op` onto `span(basis)`.
fn min_expectation(op: &HermitianOperator, basis: &Array2<Complex64>) -> f64 {
    let g = basis.ncols();
    if g == 1 {
        return op.expectation(basis.column(0));
    }
    let mut compressed = Array2::<Complex64>::zeros((g, g));
    for j in 0..g {
        let image = op.apply(basis.column(j));
        for i in 0..g {
            compressed[[i, j]] = basis
                .column(i)
                .iter()
                .zip(image.iter())
                .map(|(x, y)| x.conj() * y)
                .sum();
        }
    }
    let vals = compressed.eigvalsh(UPLO::Lower).expect("small eigh");
    vals[0]
}

/// Squared cosine of the largest principal angle between two subspaces,
/// i.e. the worst-preserved direction of `a` inside `b`.
fn subspace_overlap(a: &Array2<Complex64>, b: &Array2<Complex64>) -> f64 {
    let (ga, gb) = (a.ncols(), b.ncols());
    let mut x = Array2::<Complex64>::zeros((ga, gb));
    for i in 0..ga {
        for j in 0..gb {
            x[[i, j]] = a
                .column(i)
                .iter()
                .zip(b.column(j).iter())
                .map(|(p, q)| p.conj() * q)
                .sum();
        }
    }
    // Eigenvalues of X X^H are the squared principal cosines.
    let xh = x.t().mapv(|c| c.conj());
    let m = x.dot(&xh);
    let vals = m.eigvalsh(UPLO::Lower).expect("small eigh");
    vals[0].max(0.0)
}

/// Sweep `H + tV` over `[0, t_max]` and measure the `<H>` discontinuity.
pub fn sweep(
    h: &HermitianOperator,
    v: &HermitianOperator,
    t_max: f64,
    n_grid: usize,
    opts: &SweepOptions,
) -> Result<GapSweepResult> {
    if h.dim() != v.dim() {
        return Err(Error::DimensionMismatch {
            a: h.dim(),
            b: v.dim(),
        });
    }
    if !(t_max > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "t_max = {t_max} must be positive"
        )));
    }
    if n_grid < 8 {
        return Err(Error::InvalidArgument(format!("n_grid = {n_grid} < 8")));
    }
    let scale_h = h.norm_estimate();
    let scale_v = v.norm_estimate();
    let deg_tol = opts
        .degeneracy_tol
        .unwrap_or(1e-8 * (scale_h + t_max * scale_v).max(f64::MIN_POSITIVE));

    let g0 = ground_space(h, deg_tol)?;
    let ground_degenerate_at_zero = g0.energies.len() > 1;
    let eigenvector_of_v = {
        let tol = 1e-8 * scale_v.max(f64::MIN_POSITIVE);
        subspace_eigen_residual(v, &g0.vectors) <= tol
    };

    let t_grid: Vec<f64> = (0..n_grid)
        .map(|j| t_max * j as f64 / (n_grid - 1) as f64)
        .collect();
    let solves = par_map(t_grid.clone(), |t| solve_point(h, v, t, &g0, deg_tol));
    let mut exp_h = Vec::with_capacity(n_grid);
    let mut overlap = Vec::with_capacity(n_grid);
    let mut ground_energy = Vec::with_capacity(n_grid);
    for s in solves {
        let s = s?;
        exp_h.push(s.exp_h);
        overlap.push(s.overlap);
        ground_energy.push(s.ground_energy);
    }

    let threshold = 1.0 - opts.overlap_tol;
    let first_drop = overlap.iter().position(|&w| w < threshold);

    let (t_star, epsilon, epsilon_error_bound, continuous_transition, ground_constant) =
        match first_drop {
            None => (None, None, None, false, true),
            Some(0) => {
                // Overlap below threshold already at t = 0 can only be
                // numerical; flag and bail out of certification.
                (Some(0.0), None, None, true, false)
            }
            Some(j) => {
                let resolution = opts.bisection_frac * t_max;
                let mut lo = t_grid[j - 1];
                let mut hi = t_grid[j];
                while hi - lo > resolution {
                    let mid = 0.5 * (lo + hi);
                    if solve_point(h, v, mid, &g0, deg_tol)?.overlap >= threshold {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let t_star = 0.5 * (lo + hi);

                // Width of the decay window: transition point to the first
                // direction with overlap at or below one half.
                let half_idx = overlap.iter().position(|&w| w <= 0.5);
                let t_half = match half_idx {
                    Some(k) => {
                        let mut lo2 = t_star;
                        let mut hi2 = t_grid[k];
                        while hi2 - lo2 > resolution {
                            let mid = 0.5 * (lo2 + hi2);
                            if solve_point(h, v, mid, &g0, deg_tol)?.overlap > 0.5 {
                                lo2 = mid;
                            } else {
                                hi2 = mid;
                            }
                        }
                        0.5 * (lo2 + hi2)
                    }
                    None => t_max,
                };
                let continuous = t_half - t_star > 10.0 * resolution;

                let ground_constant = overlap
                    .iter()
                    .zip(&t_grid)
                    .filter(|(_, &t)| t < t_star)
                    .all(|(&w, _)| w >= threshold);

                let delta = opts.epsilon_delta_frac * t_max;
                if continuous {
                    // Non-certified estimate: max <H> variation across the
                    // decay window.
                    let a = (t_star - delta).max(0.0);
                    let b = (t_half + delta).min(t_max);
                    let ts: Vec<f64> =
                        (0..33).map(|i| a + (b - a) * i as f64 / 32.0).collect();
                    let vals =
                        par_map(ts, |t| solve_point(h, v, t, &g0, deg_tol).map(|s| s.exp_h));
                    let mut min = f64::INFINITY;
                    let mut max = f64::NEG_INFINITY;
                    for r in vals {
                        let x = r?;
                        min = min.min(x);
                        max = max.max(x);
                    }
                    (
                        Some(t_star),
                        Some(max - min),
                        Some(2.0 * delta * scale_v),
                        true,
                        ground_constant,
                    )
                } else {
                    let below = solve_point(h, v, (t_star - delta).max(0.0), &g0, deg_tol)?;
                    let above = solve_point(h, v, (t_star + delta).min(t_max), &g0, deg_tol)?;
                    (
                        Some(t_star),
                        Some(above.exp_h - below.exp_h),
                        Some(2.0 * delta * scale_v),
                        false,
                        ground_constant,
                    )
                }
            }
        };

    let assumptions = AssumptionFlags {
        ground_constant_on_interval: ground_constant,
        eigenvector_of_v,
    };
    let certified = t_star.is_some()
        && !continuous_transition
        && assumptions.ground_constant_on_interval
        && assumptions.eigenvector_of_v;
    Ok(GapSweepResult {
        t_grid,
        exp_h,
        overlap,
        ground_energy,
        t_star,
        epsilon,
        epsilon_error_bound,
        assumptions,
        ground_degenerate_at_zero,
        continuous_transition,
        certified,
        overlap_tol: opts.overlap_tol,
    })
}

/// Max residual `||V g_j - sum_i c_ij g_i||` over an orthonormal basis:
/// zero iff the span is V-invariant.
fn subspace_eigen_residual(v: &HermitianOperator, basis: &Array2<Complex64>) -> f64 {
    let g = basis.ncols();
    let images: Vec<Array1<Complex64>> = (0..g).map(|j| v.apply(basis.column(j))).collect();
    let mut compressed = Array2::<Complex64>::zeros((g, g));
    for i in 0..g {
        for j in 0..g {
            compressed[[i, j]] = basis
                .column(i)
                .iter()
                .zip(images[j].iter())
                .map(|(x, y)| x.conj() * y)
                .sum();
        }
    }
    let mut worst = 0.0f64;
    for j in 0..g {
        let mut r = images[j].clone();
        for i in 0..g {
            r.scaled_add(-compressed[[i, j]], &basis.column(i).to_owned());
        }
        worst = worst.max(r.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt());
    }
    worst
}

/// Turn a sweep into a certified-bound verdict, re-deriving the assumption
/// checks from the recorded trace.
pub fn gap_upper_bound(result: &GapSweepResult) -> BoundReport {
    let t_star = match result.t_star {
        Some(t) => t,
        None => {
            return BoundReport {
                epsilon: None,
                valid: false,
                failed_conditions: vec!["no_transition".into()],
            }
        }
    };
    let mut failed = Vec::new();
    let threshold = 1.0 - result.overlap_tol;
    let constant = result
        .overlap
        .iter()
        .zip(&result.t_grid)
        .filter(|(_, &t)| t < t_star)
        .all(|(&w, _)| w >= threshold);
    if !constant {
        failed.push("ground_constant_on_interval".into());
    }
    if !result.assumptions.eigenvector_of_v {
        failed.push("eigenvector_of_V".into());
    }
    if result.continuous_transition {
        failed.push("continuous_transition".into());
    }
    BoundReport {
        epsilon: result.epsilon,
        valid: failed.is_empty(),
        failed_conditions: failed,
    }
}

fn ground_shifted_dense(h: &HermitianOperator) -> Result<Array2<Complex64>> {
    let sol = lowest_levels(h, 1)?;
    let e0 = sol.eigenvalues[0];
    let mut d = h.to_dense_capped(DENSE_CAP)?;
    for i in 0..d.dim().0 {
        d[[i, i]] -= Complex64::new(e0, 0.0);
    }
    Ok(d)
}

fn hermitize(m: Array2<Complex64>) -> Array2<Complex64> {
    let mh = m.t().mapv(|c| c.conj());
    (&m + &mh).mapv(|c| c * 0.5)
}

/// The always-available witness `H0^2 - H0` for `H0 = H - E0 I`.
///
/// Every ground vector of `H` (zero eigenvalue of `H0`) is annihilated.
pub fn make_trivial_witness(h: &HermitianOperator) -> Result<HermitianOperator> {
    let d = ground_shifted_dense(h)?;
    let mut v = d.dot(&d);
    v.scaled_add(Complex64::new(-1.0, 0.0), &d);
    HermitianOperator::from_dense(hermitize(v))
}

/// Random witness `H0 Z H0` with `Z` a GOE sample; deterministic per seed.
pub fn make_random_witness(h: &HermitianOperator, seed: u64) -> Result<HermitianOperator> {
    let d = ground_shifted_dense(h)?;
    let z = sample_goe(h.dim(), seed).to_dense_capped(DENSE_CAP)?;
    let v = d.dot(&z).dot(&d);
    HermitianOperator::from_dense(hermitize(v))
}

/// GOE sample `(G + G^T)/2` with independent standard normal entries.
pub fn sample_goe(d: usize, seed: u64) -> HermitianOperator {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = Array2::<f64>::zeros((d, d));
    for i in 0..d {
        for j in 0..d {
            g[[i, j]] = StandardNormal.sample(&mut rng);
        }
    }
    let mut z = Array2::<Complex64>::zeros((d, d));
    for i in 0..d {
        for j in 0..d {
            z[[i, j]] = Complex64::new(0.5 * (g[[i, j]] + g[[j, i]]), 0.0);
        }
    }
    HermitianOperator::from_dense(z).expect("symmetric by construction")
}
