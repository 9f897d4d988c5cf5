//! Boundary of the joint numerical range `W(A, B)` and its singular points.
//!
//! `W(A, B)` is the convex set of simultaneously attainable expectation
//! pairs `(<A>, <B>)`. Its boundary point with inward normal
//! `(cos t, sin t)` is the image of the ground state of
//! `cos t * A + sin t * B`, so the whole boundary comes out of a sweep of
//! ground-state solves over support directions.
//!
//! Degenerate ground spaces produce flat segments: the segment endpoints
//! are found by compressing the orthogonal direction `-sin t * A + cos t * B`
//! onto the ground space and taking its extreme eigenvectors. Cusps are the
//! opposite singularity: the support point stays fixed over an interval of
//! directions (a normal cone of positive width), and its preimage is then a
//! simultaneous eigenvector of `A` and `B`. A cusp's facet count reports
//! whether the adjacent boundary pieces are flat, which is detected by
//! ground-space degeneracy at the refined cone edges.
//!
//! [`hull_decomposition_check`] verifies the decomposition
//! `W(A, B) = conv((<A>_g, <B>_g) union W(A_perp, B_perp))` at a common
//! eigenvector `g` by comparing support functions on a dense direction
//! grid; for convex sets the sup-norm of the support-function difference
//! equals their Hausdorff distance.

use ndarray::{Array1, Array2, ArrayView1};
use ndarray_linalg::{EigValsh, UPLO};
use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::exec::par_map;
use crate::operator::HermitianOperator;
use crate::spectra::{eigh_c, ground_space};

/// One support-direction sample of the boundary.
#[derive(Debug, Clone)]
pub struct BoundarySample {
    /// Support direction in radians, in `[0, 2*pi)` for grid samples.
    pub theta: f64,
    /// `(<A>, <B>)` of the ground state (segment midpoint when degenerate).
    pub point: (f64, f64),
    /// Ground energy of `cos(theta) A + sin(theta) B`.
    pub ground_energy: f64,
    pub degenerate: bool,
    /// Segment endpoints in boundary traversal order when degenerate.
    pub segment: Option<((f64, f64), (f64, f64))>,
}

/// Boundary samples ordered by angle.
#[derive(Debug, Clone)]
pub struct Boundary {
    pub samples: Vec<BoundarySample>,
    /// Whether the sweep covered the full circle.
    pub closed: bool,
}

/// A boundary point with a normal cone of positive width.
#[derive(Debug, Clone)]
pub struct Cusp {
    pub point: (f64, f64),
    /// `(lo, hi)` with `hi > lo`; `hi` may exceed `2*pi` when the cone wraps.
    pub normal_cone: (f64, f64),
    /// Ground state at the middle of the cone (unit vector).
    pub preimage: Array1<Complex64>,
    /// Number of flat segments terminating at the cusp (0, 1 or 2).
    pub facet_count: u8,
}

impl Cusp {
    pub fn cone_width(&self) -> f64 {
        self.normal_cone.1 - self.normal_cone.0
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SupportOptions {
    /// Ground-degeneracy tolerance; default `1e-8` times the pair scale.
    pub degeneracy_tol: Option<f64>,
}

/// Combined magnitude scale of an operator pair.
pub fn pair_scale(a: &HermitianOperator, b: &HermitianOperator) -> f64 {
    let na = a.norm_estimate();
    let nb = b.norm_estimate();
    (na * na + nb * nb).sqrt().max(f64::MIN_POSITIVE)
}

fn check_dims(a: &HermitianOperator, b: &HermitianOperator) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            a: a.dim(),
            b: b.dim(),
        });
    }
    Ok(())
}

fn expectation_pair(
    a: &HermitianOperator,
    b: &HermitianOperator,
    state: ArrayView1<Complex64>,
) -> (f64, f64) {
    (a.expectation(state), b.expectation(state))
}

/// Boundary point of `W(A, B)` in support direction `theta`.
pub fn support_point(
    a: &HermitianOperator,
    b: &HermitianOperator,
    theta: f64,
    opts: &SupportOptions,
) -> Result<BoundarySample> {
    check_dims(a, b)?;
    let scale = pair_scale(a, b);
    let deg_tol = opts.degeneracy_tol.unwrap_or(1e-8 * scale);
    let (ct, st) = (theta.cos(), theta.sin());
    let direction = HermitianOperator::linear_combination(&[(ct, a), (st, b)])?;
    let gs = ground_space(&direction, deg_tol)?;
    let g = gs.energies.len();
    let ground_energy = gs.energies[0];

    if g == 1 {
        let state = gs.vectors.column(0);
        let point = expectation_pair(a, b, state);
        return Ok(BoundarySample {
            theta,
            point,
            ground_energy,
            degenerate: false,
            segment: None,
        });
    }

    // Resolve the flat segment: compress the orthogonal direction onto the
    // ground space and map its extreme eigenvectors back.
    let orth = HermitianOperator::linear_combination(&[(-st, a), (ct, b)])?;
    let mut compressed = Array2::<Complex64>::zeros((g, g));
    let images: Vec<Array1<Complex64>> = (0..g)
        .map(|j| orth.apply(gs.vectors.column(j)))
        .collect();
    for i in 0..g {
        for j in 0..g {
            compressed[[i, j]] = gs
                .vectors
                .column(i)
                .iter()
                .zip(images[j].iter())
                .map(|(x, y)| x.conj() * y)
                .sum();
        }
    }
    let (_, y) = eigh_c(&compressed)?;
    let lift = |col: usize| -> Array1<Complex64> {
        let mut state = Array1::<Complex64>::zeros(a.dim());
        for j in 0..g {
            state.scaled_add(y[[j, col]], &gs.vectors.column(j).to_owned());
        }
        state
    };
    let low = lift(0);
    let high = lift(g - 1);
    let p_low = expectation_pair(a, b, low.view());
    let p_high = expectation_pair(a, b, high.view());
    // Traversal order: just before the degenerate direction the support
    // point sits at the endpoint maximizing the orthogonal direction.
    let segment = (p_high, p_low);
    let point = (0.5 * (p_high.0 + p_low.0), 0.5 * (p_high.1 + p_low.1));
    Ok(BoundarySample {
        theta,
        point,
        ground_energy,
        degenerate: true,
        segment: Some(segment),
    })
}

fn chord(p: (f64, f64), q: (f64, f64)) -> f64 {
    ((p.0 - q.0).powi(2) + (p.1 - q.1).powi(2)).sqrt()
}

/// Sample the full boundary at `n_angles` uniform support directions,
/// optionally refining long chords by angular bisection (depth 20).
pub fn sample_boundary(
    a: &HermitianOperator,
    b: &HermitianOperator,
    n_angles: usize,
    adaptive: bool,
    opts: &SupportOptions,
) -> Result<Boundary> {
    check_dims(a, b)?;
    if n_angles < 3 {
        return Err(Error::InvalidArgument(format!("n_angles = {n_angles} < 3")));
    }
    let scale = pair_scale(a, b);
    let chord_tol = 1e-2 * scale;

    let angles: Vec<f64> = (0..n_angles)
        .map(|j| 2.0 * PI * j as f64 / n_angles as f64)
        .collect();
    let solved = par_map(angles, |theta| support_point(a, b, theta, opts));
    let mut samples: Vec<BoundarySample> = solved.into_iter().collect::<Result<_>>()?;

    if adaptive {
        for _depth in 0..20 {
            let mut midpoints = Vec::new();
            for i in 0..samples.len() {
                let s1 = &samples[i];
                let s2 = &samples[(i + 1) % samples.len()];
                let t2 = if i + 1 == samples.len() {
                    s2.theta + 2.0 * PI
                } else {
                    s2.theta
                };
                if t2 - s1.theta > 1e-12 && chord(s1.point, s2.point) > chord_tol {
                    midpoints.push(0.5 * (s1.theta + t2));
                }
            }
            if midpoints.is_empty() {
                break;
            }
            let solved = par_map(midpoints, |theta| {
                support_point(a, b, wrap_angle(theta), opts).map(|mut s| {
                    s.theta = theta;
                    s
                })
            });
            let new: Vec<BoundarySample> = solved.into_iter().collect::<Result<_>>()?;
            samples.extend(new);
            samples.sort_by(|x, y| x.theta.partial_cmp(&y.theta).unwrap());
        }
        // Wrapped refinement angles may exceed 2*pi; renormalize and resort.
        for s in &mut samples {
            if s.theta >= 2.0 * PI {
                s.theta -= 2.0 * PI;
            }
        }
        samples.sort_by(|x, y| x.theta.partial_cmp(&y.theta).unwrap());
    }

    Ok(Boundary {
        samples,
        closed: true,
    })
}

impl Boundary {
    /// Boundary polygon in traversal order: segment endpoints replace the
    /// midpoint for degenerate samples, near-duplicate vertices merge.
    pub fn polygon(&self) -> Vec<(f64, f64)> {
        let mut pts: Vec<(f64, f64)> = Vec::with_capacity(self.samples.len() + 8);
        let spread = self.point_scale();
        let dedup_tol = 1e-10 * spread;
        let push = |p: (f64, f64), pts: &mut Vec<(f64, f64)>| {
            if pts.last().map_or(true, |q| chord(p, *q) > dedup_tol) {
                pts.push(p);
            }
        };
        for s in &self.samples {
            match s.segment {
                Some((entry, exit)) => {
                    push(entry, &mut pts);
                    push(exit, &mut pts);
                }
                None => push(s.point, &mut pts),
            }
        }
        while pts.len() > 1 && chord(pts[0], *pts.last().unwrap()) <= dedup_tol {
            pts.pop();
        }
        pts
    }

    fn point_scale(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| s.point.0.abs().max(s.point.1.abs()))
            .fold(0.0, f64::max)
            .max(1e-300)
    }

    /// Largest clockwise-turn area defect of the polygon; `0` for an exactly
    /// convex counterclockwise boundary.
    pub fn convexity_defect(&self) -> f64 {
        let pts = self.polygon();
        let n = pts.len();
        if n < 3 {
            return 0.0;
        }
        let mut worst = 0.0f64;
        for i in 0..n {
            let p0 = pts[i];
            let p1 = pts[(i + 1) % n];
            let p2 = pts[(i + 2) % n];
            let cross = (p1.0 - p0.0) * (p2.1 - p1.1) - (p1.1 - p0.1) * (p2.0 - p1.0);
            if cross < 0.0 {
                worst = worst.max(-cross);
            }
        }
        worst
    }

    /// Convexity up to `tol` times the squared point scale.
    pub fn is_convex(&self, tol: f64) -> bool {
        let spread = self.point_scale();
        self.convexity_defect() <= tol * spread * spread
    }

    /// Largest angular gap between consecutive samples (circular).
    pub fn max_angle_gap(&self) -> f64 {
        let n = self.samples.len();
        let mut gap = 0.0f64;
        for i in 0..n {
            let t1 = self.samples[i].theta;
            let t2 = if i + 1 == n {
                self.samples[0].theta + 2.0 * PI
            } else {
                self.samples[i + 1].theta
            };
            gap = gap.max(t2 - t1);
        }
        gap
    }
}

/// Residual norms `(||A s - <A> s||, ||B s - <B> s||)` of a candidate
/// simultaneous eigenvector.
pub fn verify_common_eigenvector(
    a: &HermitianOperator,
    b: &HermitianOperator,
    state: ArrayView1<Complex64>,
) -> (f64, f64) {
    let norm = state.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let unit = state.mapv(|c| c / norm);
    let residual = |op: &HermitianOperator| -> f64 {
        let image = op.apply(unit.view());
        let mean: Complex64 = unit
            .iter()
            .zip(image.iter())
            .map(|(x, y)| x.conj() * y)
            .sum();
        image
            .iter()
            .zip(unit.iter())
            .map(|(y, x)| (y - x * mean.re).norm_sqr())
            .sum::<f64>()
            .sqrt()
    };
    (residual(a), residual(b))
}

/// Maximal angular runs over which the support point is stationary.
///
/// `angle_min` is the smallest cone width reported as a cusp; `point_tol`
/// bounds the support-point movement inside a run. Cone edges are refined
/// by bisection and the facet count comes from ground-space degeneracy at
/// the refined edge directions.
pub fn detect_cusps(
    a: &HermitianOperator,
    b: &HermitianOperator,
    boundary: &Boundary,
    angle_min: f64,
    point_tol: f64,
    opts: &SupportOptions,
) -> Result<Vec<Cusp>> {
    check_dims(a, b)?;
    let n = boundary.samples.len();
    if n < 3 {
        return Err(Error::InvalidArgument(
            "boundary has fewer than 3 samples".into(),
        ));
    }
    let max_gap = boundary.max_angle_gap();
    if angle_min < 3.0 * max_gap - 1e-12 {
        return Err(Error::BoundaryResolution {
            angle_min,
            required: angle_min / 3.0,
            spacing: max_gap,
        });
    }

    // Group circularly: consecutive samples whose points sit within
    // point_tol belong to one stationary run.
    let samples = &boundary.samples;
    let adjacent_close: Vec<bool> = (0..n)
        .map(|i| chord(samples[i].point, samples[(i + 1) % n].point) <= point_tol)
        .collect();
    // Start scanning right after a run break so no run straddles the ends.
    let start = match adjacent_close.iter().position(|c| !c) {
        Some(i) => (i + 1) % n,
        None => {
            // Everything is one stationary point; W degenerates to a point.
            let state = ground_state_at(a, b, 0.0, opts)?;
            return Ok(vec![Cusp {
                point: samples[0].point,
                normal_cone: (0.0, 2.0 * PI),
                preimage: state,
                facet_count: 0,
            }]);
        }
    };

    let mut cusps = Vec::new();
    let mut i = 0usize;
    while i < n {
        let mut len = 1usize;
        while len < n && adjacent_close[(start + i + len - 1) % n] {
            len += 1;
        }
        if len >= 3 {
            let first = (start + i) % n;
            let last = (start + i + len - 1) % n;
            let theta_first = samples[first].theta;
            let mut theta_last = samples[last].theta;
            if theta_last < theta_first {
                theta_last += 2.0 * PI;
            }
            if theta_last - theta_first >= angle_min {
                let run_points: Vec<(f64, f64)> =
                    (0..len).map(|j| samples[(first + j) % n].point).collect();
                let cx = run_points.iter().map(|p| p.0).sum::<f64>() / len as f64;
                let cy = run_points.iter().map(|p| p.1).sum::<f64>() / len as f64;
                let cusp_point = (cx, cy);

                // Refine both cone edges against the neighbors outside. A
                // flat segment terminating at the cusp shows up as a
                // degenerate support direction encountered on the way.
                let prev = samples[(first + n - 1) % n].theta;
                let prev = if prev > theta_first {
                    prev - 2.0 * PI
                } else {
                    prev
                };
                let next = samples[(last + 1) % n].theta;
                let next = if next < theta_last {
                    next + 2.0 * PI
                } else {
                    next
                };
                let (lo, lo_facet) = bisect_edge(prev, theta_first, a, b, cusp_point, point_tol, opts)?;
                let (hi, hi_facet) = bisect_edge(next, theta_last, a, b, cusp_point, point_tol, opts)?;
                let facet_count = lo_facet as u8 + hi_facet as u8;
                let mid = 0.5 * (lo + hi);
                let preimage = ground_state_at(a, b, wrap_angle(mid), opts)?;
                cusps.push(Cusp {
                    point: cusp_point,
                    normal_cone: (lo, hi),
                    preimage,
                    facet_count,
                });
            }
        }
        i += len;
    }
    cusps.sort_by(|a, b| a.normal_cone.0.partial_cmp(&b.normal_cone.0).unwrap());
    Ok(cusps)
}

fn wrap_angle(phi: f64) -> f64 {
    phi.rem_euclid(2.0 * PI)
}

/// Bisect from a direction outside the stationary run (`out`) toward one
/// inside (`inn`). Returns the transition angle (to ~1e-10 rad) and whether
/// a degenerate support direction - the normal of an adjacent flat segment
/// - was met at the transition.
#[allow(clippy::too_many_arguments)]
fn bisect_edge(
    out: f64,
    inn: f64,
    a: &HermitianOperator,
    b: &HermitianOperator,
    cusp_point: (f64, f64),
    point_tol: f64,
    opts: &SupportOptions,
) -> Result<(f64, bool)> {
    let mut lo = out;
    let mut hi = inn;
    for _ in 0..60 {
        if (hi - lo).abs() < 1e-10 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let s = support_point(a, b, wrap_angle(mid), opts)?;
        if s.degenerate {
            return Ok((mid, true));
        }
        if chord(s.point, cusp_point) <= point_tol {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((0.5 * (lo + hi), false))
}

fn ground_state_at(
    a: &HermitianOperator,
    b: &HermitianOperator,
    theta: f64,
    opts: &SupportOptions,
) -> Result<Array1<Complex64>> {
    let scale = pair_scale(a, b);
    let deg_tol = opts.degeneracy_tol.unwrap_or(1e-8 * scale);
    let direction =
        HermitianOperator::linear_combination(&[(theta.cos(), a), (theta.sin(), b)])?;
    let gs = ground_space(&direction, deg_tol)?;
    Ok(gs.vectors.column(0).to_owned())
}

/// Result of the convex-hull decomposition check at a common eigenvector.
#[derive(Debug, Clone)]
pub struct HullCheckReport {
    /// Image of the eigenvector in the `(<A>, <B>)` plane.
    pub apex: (f64, f64),
    /// Sup over sampled directions of the support-function mismatch; for
    /// convex sets this is their Hausdorff distance.
    pub hausdorff: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub n_angles: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct HullCheckOptions {
    pub n_angles: usize,
    /// Pass tolerance; default `1e-6` times the pair scale.
    pub tolerance: Option<f64>,
    /// Residual bound for accepting `g` as a common eigenvector, relative
    /// to the pair scale.
    pub precondition_tol: f64,
}

impl Default for HullCheckOptions {
    fn default() -> Self {
        HullCheckOptions {
            n_angles: 720,
            tolerance: None,
            precondition_tol: 1e-6,
        }
    }
}

/// Verify `W(A, B) = conv({(<A>_g, <B>_g)} union W(A_perp, B_perp))`.
pub fn hull_decomposition_check(
    a: &HermitianOperator,
    b: &HermitianOperator,
    g: ArrayView1<Complex64>,
    opts: &HullCheckOptions,
) -> Result<HullCheckReport> {
    check_dims(a, b)?;
    let scale = pair_scale(a, b);
    let (res_a, res_b) = verify_common_eigenvector(a, b, g);
    let pre_tol = opts.precondition_tol * scale;
    if res_a > pre_tol || res_b > pre_tol {
        return Err(Error::NotACommonEigenvector {
            res_a,
            res_b,
            tolerance: pre_tol,
        });
    }
    let norm = g.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let unit = g.mapv(|c| c / norm);
    let apex = expectation_pair(a, b, unit.view());

    let q = complement_basis(unit.view());
    let a_perp = compress(a, &q);
    let b_perp = compress(b, &q);
    let a_full = a.to_dense()?;
    let b_full = b.to_dense()?;

    let tolerance = opts.tolerance.unwrap_or(1e-6 * scale);
    let angles: Vec<f64> = (0..opts.n_angles)
        .map(|j| 2.0 * PI * j as f64 / opts.n_angles as f64)
        .collect();
    let deviations = par_map(angles, |theta| -> Result<f64> {
        let (ct, st) = (theta.cos(), theta.sin());
        let h_full = lowest_eigenvalue(&combine_dense(ct, &a_full, st, &b_full))?;
        let h_perp = lowest_eigenvalue(&combine_dense(ct, &a_perp, st, &b_perp))?;
        let h_apex = ct * apex.0 + st * apex.1;
        Ok((h_full - h_apex.min(h_perp)).abs())
    });
    let mut hausdorff = 0.0f64;
    for d in deviations {
        hausdorff = hausdorff.max(d?);
    }
    Ok(HullCheckReport {
        apex,
        hausdorff,
        tolerance,
        passed: hausdorff <= tolerance,
        n_angles: opts.n_angles,
    })
}

fn combine_dense(
    alpha: f64,
    a: &Array2<Complex64>,
    beta: f64,
    b: &Array2<Complex64>,
) -> Array2<Complex64> {
    let mut m = a.mapv(|c| c * alpha);
    m.scaled_add(Complex64::new(beta, 0.0), b);
    m
}

fn lowest_eigenvalue(m: &Array2<Complex64>) -> Result<f64> {
    let vals = m.eigvalsh(UPLO::Lower)?;
    Ok(vals[0])
}

/// Orthonormal basis of the complement of `g` (d-1 columns).
fn complement_basis(g: ArrayView1<Complex64>) -> Array2<Complex64> {
    let d = g.len();
    // Drop the coordinate with the largest overlap to keep the remaining
    // identity columns independent of g.
    let drop = g
        .iter()
        .enumerate()
        .max_by(|(_, x), (_, y)| x.norm().partial_cmp(&y.norm()).unwrap())
        .map(|(i, _)| i)
        .unwrap_or(0);
    let g_owned = g.to_owned();
    let mut columns: Vec<Array1<Complex64>> = Vec::with_capacity(d - 1);
    for j in 0..d {
        if j == drop {
            continue;
        }
        let mut v = Array1::<Complex64>::zeros(d);
        v[j] = Complex64::new(1.0, 0.0);
        // Project out g, then previously accepted columns (two passes).
        for _ in 0..2 {
            let overlap: Complex64 = g.iter().zip(v.iter()).map(|(x, y)| x.conj() * y).sum();
            v.scaled_add(-overlap, &g_owned);
            for c in &columns {
                let overlap: Complex64 = c.iter().zip(v.iter()).map(|(x, y)| x.conj() * y).sum();
                v.scaled_add(-overlap, c);
            }
        }
        let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        v.mapv_inplace(|c| c / norm);
        columns.push(v);
    }
    let mut q = Array2::<Complex64>::zeros((d, d - 1));
    for (j, c) in columns.iter().enumerate() {
        q.column_mut(j).assign(c);
    }
    q
}

/// `Q^H M Q` for an explicit orthonormal basis `Q`.
fn compress(op: &HermitianOperator, q: &Array2<Complex64>) -> Array2<Complex64> {
    let (_, m) = q.dim();
    let mut image = Array2::<Complex64>::zeros((q.dim().0, m));
    for j in 0..m {
        image.column_mut(j).assign(&op.apply(q.column(j)));
    }
    let qh = q.t().mapv(|c| c.conj());
    qh.dot(&image)
}
