//! Real-weighted Pauli-string sums and the concrete chain Hamiltonians.
//!
//! A [`PauliSum`] is a symbolic Hermitian operator on `n_sites` spin-1/2
//! sites: a merged list of Pauli strings with real coefficients. Site
//! indices are 1-based and strictly increasing within a term. Terms whose
//! coefficient drops below [`MERGE_EPS`] after merging are discarded, so a
//! stored coefficient is never zero.
//!
//! The builders provide the open XY chain
//!
//! ```text
//! H(gamma) = -sum_i [ (1+gamma)/2 x_i x_{i+1} + (1-gamma)/2 y_i y_{i+1} ]
//! ```
//!
//! the three-site witness `V = sum_i (x_{i-1} z_i y_{i+1} - y_{i-1} z_i x_{i+1})`
//! over all interior sites, and tapered variants where interaction weights
//! ramp smoothly to zero at the chain ends.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};

/// Coefficients with magnitude below this are dropped after merging.
pub const MERGE_EPS: f64 = 1e-14;

/// Single-site Pauli axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Axis::X => write!(f, "x"),
            Axis::Y => write!(f, "y"),
            Axis::Z => write!(f, "z"),
        }
    }
}

/// One Pauli string with a real coefficient.
///
/// `factors` lists `(site, axis)` pairs with 1-based, strictly increasing
/// site indices; an empty list is the identity string.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PauliTerm {
    pub coeff: f64,
    pub factors: Vec<(usize, Axis)>,
}

impl PauliTerm {
    pub fn new(coeff: f64, factors: Vec<(usize, Axis)>) -> Self {
        PauliTerm { coeff, factors }
    }
}

/// A merged sum of Pauli strings on a fixed number of sites.
///
/// Hermitian by construction: real coefficients on Hermitian strings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PauliSumData", into = "PauliSumData")]
pub struct PauliSum {
    n_sites: usize,
    terms: Vec<PauliTerm>,
}

/// Serialized form: `{"n_sites": .., "terms": [{"coeff": .., "factors": [[site, "x"], ..]}]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct PauliSumData {
    n_sites: usize,
    terms: Vec<PauliTerm>,
}

impl TryFrom<PauliSumData> for PauliSum {
    type Error = Error;
    fn try_from(data: PauliSumData) -> Result<Self> {
        PauliSum::new(data.n_sites, data.terms)
    }
}

impl From<PauliSum> for PauliSumData {
    fn from(sum: PauliSum) -> Self {
        PauliSumData {
            n_sites: sum.n_sites,
            terms: sum.terms,
        }
    }
}

impl PauliSum {
    /// Validate, merge duplicate strings and sort into canonical order.
    pub fn new(n_sites: usize, terms: Vec<PauliTerm>) -> Result<Self> {
        if n_sites < 1 {
            return Err(Error::InvalidSize {
                min: 1,
                got: n_sites,
            });
        }
        for term in &terms {
            if !term.coeff.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "non-finite coefficient {}",
                    term.coeff
                )));
            }
            let mut prev = 0usize;
            for &(site, _) in &term.factors {
                if site < 1 || site > n_sites {
                    return Err(Error::SiteOutOfRange {
                        site,
                        max: n_sites,
                    });
                }
                if site <= prev {
                    return Err(Error::InvalidArgument(format!(
                        "site indices must be strictly increasing, saw {site} after {prev}"
                    )));
                }
                prev = site;
            }
        }
        let mut merged: BTreeMap<Vec<(usize, Axis)>, f64> = BTreeMap::new();
        for term in terms {
            *merged.entry(term.factors).or_insert(0.0) += term.coeff;
        }
        let terms = merged
            .into_iter()
            .filter(|(_, c)| c.abs() >= MERGE_EPS)
            .map(|(factors, coeff)| PauliTerm { coeff, factors })
            .collect();
        Ok(PauliSum { n_sites, terms })
    }

    /// Zero operator on `n_sites`.
    pub fn zero(n_sites: usize) -> Result<Self> {
        PauliSum::new(n_sites, Vec::new())
    }

    /// Single Pauli factor `axis` on `site`.
    pub fn single(n_sites: usize, site: usize, axis: Axis) -> Result<Self> {
        PauliSum::new(n_sites, vec![PauliTerm::new(1.0, vec![(site, axis)])])
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn terms(&self) -> &[PauliTerm] {
        &self.terms
    }

    /// Coefficient of an exact factor list, or `None` if the string is absent.
    pub fn coefficient_of(&self, factors: &[(usize, Axis)]) -> Option<f64> {
        self.terms
            .iter()
            .find(|t| t.factors == factors)
            .map(|t| t.coeff)
    }

    /// Sum of coefficient magnitudes; an upper bound on the operator norm.
    pub fn coeff_norm(&self) -> f64 {
        self.terms.iter().map(|t| t.coeff.abs()).sum()
    }

    /// `self + other` (site counts must match).
    pub fn add(&self, other: &PauliSum) -> Result<PauliSum> {
        if self.n_sites != other.n_sites {
            return Err(Error::DimensionMismatch {
                a: self.n_sites,
                b: other.n_sites,
            });
        }
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        PauliSum::new(self.n_sites, terms)
    }

    /// `factor * self`.
    pub fn scale(&self, factor: f64) -> PauliSum {
        let terms = self
            .terms
            .iter()
            .map(|t| PauliTerm::new(factor * t.coeff, t.factors.clone()))
            .collect();
        // Scaling cannot break the invariants beyond coefficient pruning.
        PauliSum::new(self.n_sites, terms).expect("scaling preserves validity")
    }

    /// Operator product with Pauli-algebra simplification.
    ///
    /// Products of Hermitian sums are generally not Hermitian; any surviving
    /// imaginary coefficient is rejected. `H * H` and other symmetric
    /// combinations always pass.
    pub fn compose(&self, other: &PauliSum) -> Result<PauliSum> {
        if self.n_sites != other.n_sites {
            return Err(Error::DimensionMismatch {
                a: self.n_sites,
                b: other.n_sites,
            });
        }
        // Accumulate complex coefficients keyed by factor list; the phase of
        // each string product is a power of i.
        let mut acc: BTreeMap<Vec<(usize, Axis)>, (f64, f64)> = BTreeMap::new();
        for ta in &self.terms {
            for tb in &other.terms {
                let (factors, i_power) = multiply_strings(&ta.factors, &tb.factors);
                let c = ta.coeff * tb.coeff;
                let entry = acc.entry(factors).or_insert((0.0, 0.0));
                match i_power % 4 {
                    0 => entry.0 += c,
                    1 => entry.1 += c,
                    2 => entry.0 -= c,
                    3 => entry.1 -= c,
                    _ => unreachable!(),
                }
            }
        }
        let scale: f64 = acc
            .values()
            .map(|(re, im)| re.abs().max(im.abs()))
            .fold(0.0, f64::max)
            .max(1.0);
        let mut max_imag = 0.0f64;
        let mut terms = Vec::new();
        for (factors, (re, im)) in acc {
            max_imag = max_imag.max(im.abs());
            if re.abs() >= MERGE_EPS {
                terms.push(PauliTerm::new(re, factors));
            }
        }
        if max_imag > 1e-12 * scale {
            return Err(Error::NonHermitianProduct { max_imag });
        }
        PauliSum::new(self.n_sites, terms)
    }
}

/// Product of two single-site Paulis: resulting axis (None = identity) and
/// the phase as a power of i.
fn multiply_axes(a: Axis, b: Axis) -> (Option<Axis>, u8) {
    use Axis::*;
    if a == b {
        return (None, 0);
    }
    match (a, b) {
        (X, Y) => (Some(Z), 1),
        (Y, X) => (Some(Z), 3),
        (Y, Z) => (Some(X), 1),
        (Z, Y) => (Some(X), 3),
        (Z, X) => (Some(Y), 1),
        (X, Z) => (Some(Y), 3),
        _ => unreachable!(),
    }
}

/// Merge-join two sorted factor lists, multiplying shared sites.
fn multiply_strings(
    a: &[(usize, Axis)],
    b: &[(usize, Axis)],
) -> (Vec<(usize, Axis)>, u8) {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let mut phase = 0u8;
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        if a[i].0 < b[j].0 {
            out.push(a[i]);
            i += 1;
        } else if a[i].0 > b[j].0 {
            out.push(b[j]);
            j += 1;
        } else {
            let (axis, p) = multiply_axes(a[i].1, b[j].1);
            phase = (phase + p) % 4;
            if let Some(axis) = axis {
                out.push((a[i].0, axis));
            }
            i += 1;
            j += 1;
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    (out, phase)
}

/// Open XY chain on `n` sites:
/// `-sum_{i=1}^{n-1} [(1+gamma)/2 x_i x_{i+1} + (1-gamma)/2 y_i y_{i+1}]`.
pub fn build_xy(n: usize, gamma: f64) -> Result<PauliSum> {
    if n < 2 {
        return Err(Error::InvalidSize { min: 2, got: n });
    }
    let mut terms = Vec::with_capacity(2 * (n - 1));
    for i in 1..n {
        terms.push(PauliTerm::new(
            -(1.0 + gamma) / 2.0,
            vec![(i, Axis::X), (i + 1, Axis::X)],
        ));
        terms.push(PauliTerm::new(
            -(1.0 - gamma) / 2.0,
            vec![(i, Axis::Y), (i + 1, Axis::Y)],
        ));
    }
    PauliSum::new(n, terms)
}

/// Three-site witness on `n` sites, summed over all interior sites:
/// `sum_{i=2}^{n-1} (x_{i-1} z_i y_{i+1} - y_{i-1} z_i x_{i+1})`.
pub fn build_witness(n: usize) -> Result<PauliSum> {
    if n < 3 {
        return Err(Error::InvalidSize { min: 3, got: n });
    }
    let mut terms = Vec::with_capacity(2 * (n - 2));
    for i in 2..n {
        terms.push(PauliTerm::new(
            1.0,
            vec![(i - 1, Axis::X), (i, Axis::Z), (i + 1, Axis::Y)],
        ));
        terms.push(PauliTerm::new(
            -1.0,
            vec![(i - 1, Axis::Y), (i, Axis::Z), (i + 1, Axis::X)],
        ));
    }
    PauliSum::new(n, terms)
}

/// Tapering weight at site `i` of a chain with `n` bulk sites and `m` ramp
/// sites on each end (total length `n + 2m`).
///
/// Raised-cosine ramp from exactly 0 at the ends to 1 in the bulk; exactly
/// symmetric under `i <-> n + 2m + 1 - i`.
pub fn taper_weight(i: usize, n: usize, m: usize) -> Result<f64> {
    let total = n + 2 * m;
    if i < 1 || i > total {
        return Err(Error::SiteOutOfRange { site: i, max: total });
    }
    if m == 0 {
        return Ok(1.0);
    }
    let w = if i <= m {
        0.5 * (1.0 - (std::f64::consts::PI * (i as f64 - 1.0) / m as f64).cos())
    } else if i <= total - m {
        1.0
    } else {
        0.5 * (1.0 - (std::f64::consts::PI * ((total - i) as f64) / m as f64).cos())
    };
    Ok(w)
}

/// Tapered pair `(H', V')` on `n + 2m` sites.
///
/// Every two-site bond of `H'` carries `(w_i w_{i+1})^{1/2}` and every
/// three-site witness term `(w_{i-1} w_i w_{i+1})^{1/3}`, so both term kinds
/// are weighted approximately by the local `w`. Terms whose weight vanishes
/// (the outermost sites) are dropped.
pub fn build_tapered(n: usize, m: usize, gamma: f64) -> Result<(PauliSum, PauliSum)> {
    if n < 2 {
        return Err(Error::InvalidSize { min: 2, got: n });
    }
    let total = n + 2 * m;
    let w: Vec<f64> = (1..=total)
        .map(|i| taper_weight(i, n, m))
        .collect::<Result<_>>()?;

    let mut h_terms = Vec::with_capacity(2 * (total - 1));
    for i in 1..total {
        let bond = (w[i - 1] * w[i]).sqrt();
        h_terms.push(PauliTerm::new(
            -(1.0 + gamma) / 2.0 * bond,
            vec![(i, Axis::X), (i + 1, Axis::X)],
        ));
        h_terms.push(PauliTerm::new(
            -(1.0 - gamma) / 2.0 * bond,
            vec![(i, Axis::Y), (i + 1, Axis::Y)],
        ));
    }
    let h = PauliSum::new(total, h_terms)?;

    if total < 3 {
        return Err(Error::InvalidSize { min: 3, got: total });
    }
    let mut v_terms = Vec::with_capacity(2 * (total - 2));
    for i in 2..total {
        let triple = (w[i - 2] * w[i - 1] * w[i]).cbrt();
        v_terms.push(PauliTerm::new(
            triple,
            vec![(i - 1, Axis::X), (i, Axis::Z), (i + 1, Axis::Y)],
        ));
        v_terms.push(PauliTerm::new(
            -triple,
            vec![(i - 1, Axis::Y), (i, Axis::Z), (i + 1, Axis::X)],
        ));
    }
    let v = PauliSum::new(total, v_terms)?;
    Ok((h, v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn xy_small_cases() {
        // gamma = 1 kills the yy bond: single xx term with coefficient -1.
        let h = build_xy(2, 1.0).unwrap();
        assert_eq!(h.terms().len(), 1);
        assert_eq!(
            h.coefficient_of(&[(1, Axis::X), (2, Axis::X)]),
            Some(-1.0)
        );

        // gamma = 0: 4 terms, all -1/2.
        let h = build_xy(3, 0.0).unwrap();
        assert_eq!(h.terms().len(), 4);
        for t in h.terms() {
            assert_abs_diff_eq!(t.coeff, -0.5);
        }
    }

    #[test]
    fn xy_term_count() {
        for n in [2usize, 5, 9] {
            for gamma in [0.0, 0.3, 0.99] {
                assert_eq!(build_xy(n, gamma).unwrap().terms().len(), 2 * (n - 1));
            }
            assert_eq!(build_xy(n, 1.0).unwrap().terms().len(), n - 1);
            assert_eq!(build_xy(n, -1.0).unwrap().terms().len(), n - 1);
        }
        assert!(matches!(
            build_xy(1, 0.0),
            Err(Error::InvalidSize { min: 2, got: 1 })
        ));
    }

    #[test]
    fn witness_term_count() {
        let v = build_witness(3).unwrap();
        assert_eq!(v.terms().len(), 2);
        for t in v.terms() {
            let sites: Vec<usize> = t.factors.iter().map(|f| f.0).collect();
            assert_eq!(sites, vec![1, 2, 3]);
        }
        assert_eq!(build_witness(5).unwrap().terms().len(), 6);
        assert!(build_witness(2).is_err());
    }

    #[test]
    fn taper_weight_branches() {
        // First site is exactly zero on any tapered chain.
        for (n, m) in [(10, 3), (4, 2), (100, 50)] {
            assert_eq!(taper_weight(1, n, m).unwrap(), 0.0);
            assert_eq!(taper_weight(n + 2 * m, n, m).unwrap(), 0.0);
        }
        // Bulk sites are exactly 1.
        for i in 4..=11 {
            assert_eq!(taper_weight(i, 8, 3).unwrap(), 1.0);
        }
        // i = m on the ramp, direct substitution.
        let m = 6;
        let expected = 0.5 * (1.0 - (std::f64::consts::PI * (m as f64 - 1.0) / m as f64).cos());
        assert_abs_diff_eq!(taper_weight(m, 20, m).unwrap(), expected, epsilon = 1e-15);
        // m = 0 leaves everything untouched.
        assert_eq!(taper_weight(3, 7, 0).unwrap(), 1.0);
        assert!(taper_weight(0, 5, 1).is_err());
        assert!(taper_weight(8, 5, 1).is_err());
    }

    #[test]
    fn taper_weight_symmetric() {
        for (n, m) in [(10usize, 4usize), (7, 3), (100, 50)] {
            let total = n + 2 * m;
            for i in 1..=total {
                let a = taper_weight(i, n, m).unwrap();
                let b = taper_weight(total + 1 - i, n, m).unwrap();
                assert_abs_diff_eq!(a, b, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn taper_weight_continuous_on_real_extension() {
        // Evaluate the three branch formulas at their junctions.
        let (n, m) = (12usize, 5usize);
        let total = (n + 2 * m) as f64;
        let ramp = |x: f64| 0.5 * (1.0 - (std::f64::consts::PI * (x - 1.0) / m as f64).cos());
        let far = |x: f64| 0.5 * (1.0 - (std::f64::consts::PI * (total - x) / m as f64).cos());
        // Up-ramp meets the bulk at x = m + 1 where the cosine hits pi.
        assert_abs_diff_eq!(ramp(m as f64 + 1.0), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(far(total - m as f64), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn tapered_matches_untapered_at_m0() {
        let (h, v) = build_tapered(6, 0, 0.4).unwrap();
        assert_eq!(h, build_xy(6, 0.4).unwrap());
        assert_eq!(v, build_witness(6).unwrap());
    }

    #[test]
    fn tapered_edges_drop_and_bulk_matches() {
        let (h, v) = build_tapered(10, 4, 0.5).unwrap();
        assert_eq!(h.n_sites(), 18);
        assert_eq!(v.n_sites(), 18);
        // No stored term touches site 1 or site 18 (weight 0 exactly).
        for t in h.terms().iter().chain(v.terms()) {
            for &(site, _) in &t.factors {
                assert!(site != 1 && site != 18);
            }
        }
        // Bulk bonds equal the untapered coefficients to 1e-15.
        let c = h
            .coefficient_of(&[(9, Axis::X), (10, Axis::X)])
            .unwrap();
        assert_abs_diff_eq!(c, -(1.0 + 0.5) / 2.0, epsilon = 1e-15);
        let cv = v
            .coefficient_of(&[(8, Axis::X), (9, Axis::Z), (10, Axis::Y)])
            .unwrap();
        assert_abs_diff_eq!(cv, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn compose_single_site() {
        let x = PauliSum::single(2, 1, Axis::X).unwrap();
        let xx = x.compose(&x).unwrap();
        assert_eq!(xx.terms().len(), 1);
        assert_eq!(xx.terms()[0].factors, vec![]);
        assert_abs_diff_eq!(xx.terms()[0].coeff, 1.0);

        let z = PauliSum::single(1, 1, Axis::Z).unwrap();
        let zz = z.compose(&z).unwrap();
        assert_eq!(zz.coefficient_of(&[]), Some(1.0));
    }

    #[test]
    fn compose_rejects_non_hermitian() {
        let x = PauliSum::single(1, 1, Axis::X).unwrap();
        let y = PauliSum::single(1, 1, Axis::Y).unwrap();
        // x * y = i z: purely imaginary coefficient.
        assert!(matches!(
            x.compose(&y),
            Err(Error::NonHermitianProduct { .. })
        ));
        // The symmetrized combination xy + yx vanishes.
        let anti = x.compose(&y).err().unwrap();
        let _ = anti;
        let sym = x.add(&y).unwrap();
        let sq = sym.compose(&sym).unwrap();
        // (x + y)^2 = 2 I.
        assert_eq!(sq.terms().len(), 1);
        assert_abs_diff_eq!(sq.coefficient_of(&[]).unwrap(), 2.0);
    }

    #[test]
    fn merging_drops_tiny_coefficients() {
        let t1 = PauliTerm::new(1.0, vec![(1, Axis::X)]);
        let t2 = PauliTerm::new(-1.0 + 1e-16, vec![(1, Axis::X)]);
        let s = PauliSum::new(2, vec![t1, t2]).unwrap();
        assert!(s.terms().is_empty());
    }

    #[test]
    fn json_round_trip() {
        let h = build_xy(3, 0.25).unwrap();
        let json = serde_json::to_string(&h).unwrap();
        assert!(json.contains("\"n_sites\":3"));
        assert!(json.contains("\"x\""));
        let back: PauliSum = serde_json::from_str(&json).unwrap();
        assert_eq!(h, back);
    }

    #[test]
    fn json_rejects_bad_sites() {
        let json = r#"{"n_sites":2,"terms":[{"coeff":1.0,"factors":[[3,"x"]]}]}"#;
        assert!(serde_json::from_str::<PauliSum>(json).is_err());
    }
}
