//! Exact value types: Young diagrams, dyadic lattice points, coordinate
//! permutations, distances and polytope membership.
//!
//! Every polytope and lattice computation works on integer numerators at a
//! common scale `2^k`. Floats only appear for queries and exports.

use std::cmp::Ordering;
use std::fmt;

use crate::error::{Error, Result};

/// A partition `λ_1 ≥ … ≥ λ_{n+1} ≥ 0` stored as the full coordinate vector of
/// the highest weight `w_λ` in `n + 1` coordinates.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct YoungDiagram {
    rows: Vec<i64>,
}

impl YoungDiagram {
    /// Builds a diagram from its full row vector (zeros included). The rank is
    /// `rows.len() - 1`.
    pub fn new(rows: Vec<i64>) -> Result<Self> {
        let invalid = |reason| Error::InvalidDiagram {
            rows: rows.clone(),
            reason,
        };
        if rows.len() < 2 {
            return Err(invalid("need at least two rows (rank >= 1)"));
        }
        if rows.iter().any(|&r| r < 0) {
            return Err(invalid("row lengths must be non-negative"));
        }
        if rows.windows(2).any(|w| w[0] < w[1]) {
            return Err(invalid("row lengths must be weakly decreasing"));
        }
        if rows.iter().all(|&r| r == rows[0]) {
            return Err(invalid("all rows equal: the polytope is a single point"));
        }
        Ok(Self { rows })
    }

    /// Builds a diagram from its nonzero parts, padding with zero rows up to
    /// `rank + 1` coordinates. Without an explicit rank the diagram
    /// `(λ_1,…,λ_n)` is read as a weight of `A_n`, i.e. one zero row is added.
    pub fn from_parts(parts: &[i64], rank: Option<usize>) -> Result<Self> {
        let rank = rank.unwrap_or(parts.len());
        if parts.len() > rank + 1 {
            return Err(Error::InvalidDiagram {
                rows: parts.to_vec(),
                reason: "more rows than rank + 1",
            });
        }
        let mut rows = parts.to_vec();
        rows.resize(rank + 1, 0);
        Self::new(rows)
    }

    pub fn rows(&self) -> &[i64] {
        &self.rows
    }

    /// Rank `n` of the root system `A_n`.
    pub fn rank(&self) -> usize {
        self.rows.len() - 1
    }

    /// Ambient dimension `n + 1`.
    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    /// Number of boxes `|λ|`.
    pub fn total(&self) -> i64 {
        self.rows.iter().sum()
    }

    /// Prefix sums `Λ_j = λ_1 + … + λ_j` for `j = 1..=n+1`.
    pub fn prefix_sums(&self) -> Vec<i64> {
        prefix_sums(&self.rows)
    }

    /// Rows multiplied by `2^level` (the horizontally stretched diagram).
    pub fn scaled_rows(&self, level: u32) -> Vec<i64> {
        self.rows.iter().map(|&r| r << level).collect()
    }

    /// The diagram with one extra row of length 1, one rank higher.
    pub fn with_unit_row(&self) -> Self {
        let mut rows = self.rows.clone();
        let pos = rows.iter().position(|&r| r < 1).unwrap_or(rows.len());
        rows.insert(pos, 1);
        Self { rows }
    }

    pub fn highest_weight(&self) -> ScaledPoint {
        ScaledPoint::from_integers(self.rows.clone())
    }
}

impl fmt::Display for YoungDiagram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.rows.iter().map(|r| r.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

pub(crate) fn prefix_sums(v: &[i64]) -> Vec<i64> {
    v.iter()
        .scan(0i64, |acc, &x| {
            *acc += x;
            Some(*acc)
        })
        .collect()
}

/// A point of the dyadic lattice `𝔛 / 2^level`, kept in canonical form: when
/// `level > 0` at least one numerator is odd.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ScaledPoint {
    num: Vec<i64>,
    level: u32,
}

impl ScaledPoint {
    /// Canonicalizes `num / 2^level` by cancelling common factors of two.
    pub fn new(mut num: Vec<i64>, mut level: u32) -> Self {
        while level > 0 && num.iter().all(|x| x % 2 == 0) {
            num.iter_mut().for_each(|x| *x /= 2);
            level -= 1;
        }
        Self { num, level }
    }

    pub fn from_integers(num: Vec<i64>) -> Self {
        Self { num, level: 0 }
    }

    pub fn numerators(&self) -> &[i64] {
        &self.num
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn dim(&self) -> usize {
        self.num.len()
    }

    /// Numerators at a finer scale `2^level`; `level` must be at least the
    /// point's own level.
    pub fn numerators_at(&self, level: u32) -> Vec<i64> {
        assert!(
            level >= self.level,
            "cannot express a level-{} point at level {level}",
            self.level
        );
        let shift = level - self.level;
        self.num.iter().map(|&x| x << shift).collect()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        let scale = (self.level as f64).exp2();
        self.num.iter().map(|&x| x as f64 / scale).collect()
    }

    pub fn is_dominant(&self) -> bool {
        self.num.windows(2).all(|w| w[0] >= w[1])
    }

    /// Coordinates as exact `num/2^k` strings at the point's own level.
    pub fn exact_strings(&self) -> Vec<String> {
        self.num
            .iter()
            .map(|x| format!("{x}/2^{}", self.level))
            .collect()
    }

    /// The same point with coordinates permuted, `out[i] = self[perm[i]]`.
    pub fn permuted(&self, perm: &Permutation) -> Self {
        Self {
            num: perm.apply(&self.num),
            level: self.level,
        }
    }

    /// Coordinates sorted into the dominant chamber.
    pub fn dominant(&self) -> Self {
        let mut num = self.num.clone();
        num.sort_unstable_by(|a, b| b.cmp(a));
        Self {
            num,
            level: self.level,
        }
    }
}

impl Ord for ScaledPoint {
    /// Lexicographic comparison of the rational coordinate vectors.
    fn cmp(&self, other: &Self) -> Ordering {
        let level = self.level.max(other.level);
        let (sa, sb) = (level - self.level, level - other.level);
        for (a, b) in self.num.iter().zip(&other.num) {
            match (a << sa).cmp(&(b << sb)) {
                Ordering::Equal => {}
                ord => return ord,
            }
        }
        self.num.len().cmp(&other.num.len())
    }
}

impl PartialOrd for ScaledPoint {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for ScaledPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = if self.level == 0 {
            self.num.iter().map(|x| x.to_string()).collect()
        } else {
            self.exact_strings()
        };
        write!(f, "({})", parts.join(","))
    }
}

/// A coordinate permutation, an element of the Weyl group of `A_n`.
///
/// Acting on a vector `v` gives `out[i] = v[map[i]]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Permutation {
    map: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Self {
            map: (0..n).collect(),
        }
    }

    /// Wraps a mapping, checking that it is a bijection of `0..len`.
    pub fn from_map(map: Vec<usize>) -> Option<Self> {
        let mut seen = vec![false; map.len()];
        for &i in &map {
            if i >= map.len() || std::mem::replace(&mut seen[i], true) {
                return None;
            }
        }
        Some(Self { map })
    }

    pub fn map(&self) -> &[usize] {
        &self.map
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.map.iter().enumerate().all(|(i, &j)| i == j)
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.map.len()];
        for (i, &j) in self.map.iter().enumerate() {
            inv[j] = i;
        }
        Self { map: inv }
    }

    /// `self ∘ other`: first apply `other`, then `self`.
    pub fn compose(&self, other: &Self) -> Self {
        Self {
            map: self.map.iter().map(|&i| other.map[i]).collect(),
        }
    }

    pub fn apply<T: Clone>(&self, v: &[T]) -> Vec<T> {
        self.map.iter().map(|&i| v[i].clone()).collect()
    }
}

/// Sorts a real vector into the dominant cone (weakly decreasing) with a
/// stable sort, returning the sorted vector and the permutation that produced
/// it.
pub fn dominant_sort(p: &[f64]) -> (Vec<f64>, Permutation) {
    let mut map: Vec<usize> = (0..p.len()).collect();
    map.sort_by(|&a, &b| p[b].total_cmp(&p[a]));
    let perm = Permutation { map };
    (perm.apply(p), perm)
}

/// Position of a lattice point relative to the relative boundary of `P_λ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Membership {
    Interior,
    Boundary,
    Outside,
}

/// Classifies an integer vector against a row vector at the same scale by
/// majorization: sorted prefix sums must stay below those of `rows` and the
/// totals must agree.
pub(crate) fn classify_numerators(q: &[i64], rows: &[i64]) -> Membership {
    debug_assert_eq!(q.len(), rows.len());
    let mut sorted = q.to_vec();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    classify_sorted(&sorted, rows)
}

pub(crate) fn classify_sorted(sorted: &[i64], rows: &[i64]) -> Membership {
    let (mut qs, mut ls) = (0i64, 0i64);
    let mut tight = false;
    let last = sorted.len() - 1;
    for (i, (&q, &l)) in sorted.iter().zip(rows).enumerate() {
        qs += q;
        ls += l;
        if i == last {
            if qs != ls {
                return Membership::Outside;
            }
        } else if qs > ls {
            return Membership::Outside;
        } else if qs == ls {
            tight = true;
        }
    }
    if tight {
        Membership::Boundary
    } else {
        Membership::Interior
    }
}

/// Majorization test of `p` against `λ` scaled to the point's level.
pub fn membership(p: &ScaledPoint, lambda: &YoungDiagram) -> Result<Membership> {
    if p.dim() != lambda.dim() {
        return Err(Error::DimensionMismatch {
            expected: lambda.dim(),
            found: p.dim(),
        });
    }
    Ok(classify_numerators(
        p.numerators(),
        &lambda.scaled_rows(p.level()),
    ))
}

/// Barycenter of `P_λ`, the unique point fixed by every coordinate permutation.
pub fn polytope_center(lambda: &YoungDiagram) -> Vec<f64> {
    let m = lambda.dim();
    vec![lambda.total() as f64 / m as f64; m]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    #[default]
    Euclidean,
    Cosine,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Euclidean => "euclidean",
            Metric::Cosine => "cosine",
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "euclidean" | "l2" => Ok(Metric::Euclidean),
            "cosine" | "cos" => Ok(Metric::Cosine),
            other => Err(format!("unknown metric {other:?}")),
        }
    }
}

pub(crate) fn sq_euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `1 - a·b / (‖a‖‖b‖)`, assuming both norms are nonzero.
pub(crate) fn cosine_unchecked(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    (1.0 - dot / (norm(a) * norm(b))).max(0.0)
}

/// Distance between two real vectors under `metric`.
pub fn distance(a: &[f64], b: &[f64], metric: Metric) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    match metric {
        Metric::Euclidean => Ok(sq_euclidean(a, b).sqrt()),
        Metric::Cosine => {
            if norm(a) == 0.0 || norm(b) == 0.0 {
                return Err(Error::ZeroVector);
            }
            Ok(cosine_unchecked(a, b))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diagram(parts: &[i64]) -> YoungDiagram {
        YoungDiagram::from_parts(parts, None).unwrap()
    }

    #[test]
    fn diagram_validation() {
        assert!(YoungDiagram::new(vec![2, 1, 1, 0]).is_ok());
        assert!(YoungDiagram::new(vec![1, 2, 0]).is_err());
        assert!(YoungDiagram::new(vec![1, 1, 1]).is_err());
        assert!(YoungDiagram::new(vec![3]).is_err());
        assert!(YoungDiagram::new(vec![2, -1]).is_err());
        assert_eq!(diagram(&[2, 1, 1]).rows(), &[2, 1, 1, 0]);
        assert_eq!(diagram(&[2, 1, 1]).rank(), 3);
        assert_eq!(
            YoungDiagram::from_parts(&[2, 2], Some(3)).unwrap().rows(),
            &[2, 2, 0, 0]
        );
        assert!(YoungDiagram::from_parts(&[2, 2, 1], Some(1)).is_err());
    }

    #[test]
    fn unit_row_extension() {
        assert_eq!(diagram(&[2, 1, 1]).with_unit_row().rows(), &[2, 1, 1, 1, 0]);
        assert_eq!(
            YoungDiagram::new(vec![3, 2, 2]).unwrap().with_unit_row().rows(),
            &[3, 2, 2, 1]
        );
    }

    #[test]
    fn scaled_point_canonical_form() {
        let p = ScaledPoint::new(vec![4, 2, 2, 0], 2);
        assert_eq!(p.level(), 1);
        assert_eq!(p.numerators(), &[2, 1, 1, 0]);
        let q = ScaledPoint::new(vec![0, 0], 3);
        assert_eq!(q.level(), 0);
        assert_eq!(ScaledPoint::new(vec![3, 3, 1, 1], 1).to_f64(), vec![1.5, 1.5, 0.5, 0.5]);
        assert_eq!(p.numerators_at(3), vec![8, 4, 4, 0]);
    }

    #[test]
    fn rational_lexicographic_order() {
        let a = ScaledPoint::new(vec![2, 1, 1, 0], 0);
        let b = ScaledPoint::new(vec![4, 2, 1, 1], 1);
        let c = ScaledPoint::new(vec![3, 3, 2, 0], 1);
        assert!(a > b);
        assert!(b > c);
        assert_eq!(a.cmp(&ScaledPoint::new(vec![4, 2, 2, 0], 1)), Ordering::Equal);
    }

    #[test]
    fn dominant_sort_examples() {
        let (v, p) = dominant_sort(&[0.0, 1.0, 2.0, 1.0]);
        assert_eq!(v, vec![2.0, 1.0, 1.0, 0.0]);
        assert_eq!(p.map()[0], 2);
        assert_eq!(p.map(), &[2, 1, 3, 0]);

        let (v, p) = dominant_sort(&[2.0, 1.0, 1.0, 0.0]);
        assert_eq!(v, vec![2.0, 1.0, 1.0, 0.0]);
        assert!(p.is_identity());

        let (v, p) = dominant_sort(&[1.0; 4]);
        assert_eq!(v, vec![1.0; 4]);
        assert!(p.is_identity());
    }

    #[test]
    fn permutation_inverse_composes_to_identity() {
        let p = Permutation::from_map(vec![2, 0, 3, 1]).unwrap();
        assert!(p.compose(&p.inverse()).is_identity());
        assert!(p.inverse().compose(&p).is_identity());
        assert!(Permutation::from_map(vec![0, 0]).is_none());
        assert!(Permutation::from_map(vec![0, 2]).is_none());
        let v = [10, 20, 30, 40];
        assert_eq!(p.inverse().apply(&p.apply(&v)), v.to_vec());
    }

    #[test]
    fn membership_examples() {
        let lam = diagram(&[3, 2, 1]);
        let pt = |v: Vec<i64>| ScaledPoint::from_integers(v);
        assert_eq!(membership(&pt(vec![2, 2, 1, 1]), &lam).unwrap(), Membership::Interior);
        assert_eq!(membership(&pt(vec![3, 2, 1, 0]), &lam).unwrap(), Membership::Boundary);
        assert_eq!(membership(&pt(vec![4, 1, 1, 0]), &lam).unwrap(), Membership::Outside);
        assert_eq!(membership(&pt(vec![3, 2, 1, 1]), &lam).unwrap(), Membership::Outside);
        assert_eq!(membership(&pt(vec![0, 1, 2, 3]), &lam).unwrap(), Membership::Boundary);
        assert!(membership(&pt(vec![3, 2, 1]), &lam).is_err());
        // Level-1 point of P_(2,1,1,0).
        let half = ScaledPoint::new(vec![3, 3, 1, 1], 1);
        assert_eq!(membership(&half, &diagram(&[2, 1, 1])).unwrap(), Membership::Boundary);
    }

    #[test]
    fn distance_examples() {
        let d = distance(&[2.0, 1.0, 1.0, 0.0], &[2.0, 1.0, 0.0, 1.0], Metric::Euclidean).unwrap();
        assert!((d - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(distance(&[1.0, 0.0], &[0.0, 1.0], Metric::Cosine).unwrap(), 1.0);
        assert_eq!(distance(&[1.0, 0.0], &[2.0, 0.0], Metric::Cosine).unwrap(), 0.0);
        assert!(matches!(
            distance(&[0.0, 0.0], &[1.0, 0.0], Metric::Cosine),
            Err(Error::ZeroVector)
        ));
        assert!(distance(&[1.0], &[1.0, 2.0], Metric::Euclidean).is_err());
    }

    #[test]
    fn center_examples() {
        assert_eq!(polytope_center(&diagram(&[2, 1, 1])), vec![1.0; 4]);
        assert_eq!(polytope_center(&diagram(&[3, 2, 1])), vec![1.5; 4]);
        let c = polytope_center(&diagram(&[2, 2, 1, 1]));
        assert!(c.iter().all(|x| (x - 1.2).abs() < 1e-15));
    }
}
