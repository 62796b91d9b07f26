//! Center sequences: level-by-level Weyl orbit expansion of the dominant
//! boundary points, the unit-row embedding into one rank higher, and
//! brute-force verification of the prefix nearest-neighbor ratios.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use crate::boundary::{enumerate_dominant_boundary, enumerate_level};
use crate::error::{Error, Result};
use crate::model::{
    classify_numerators, cosine_unchecked, norm, polytope_center, sq_euclidean, Membership,
    ScaledPoint, YoungDiagram,
};

/// How `max_points` cuts the sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Truncation {
    /// Keep exactly the first `max_points` centers.
    #[default]
    Exact,
    /// Round down to the longest prefix that is a union of whole Weyl orbits.
    WholeOrbits,
}

/// An ordered, duplicate-free sequence of boundary centers.
#[derive(Debug, Clone)]
pub struct Scattering {
    lambda: YoungDiagram,
    levels_built: u32,
    centers: Vec<ScaledPoint>,
    level_offsets: Vec<usize>,
    index: HashMap<ScaledPoint, usize>,
}

impl Scattering {
    /// Wraps an existing center sequence (e.g. one read from disk), checking
    /// dimensions, boundary membership, level bounds and uniqueness. Level
    /// offsets are recovered from the point levels, which must be
    /// non-decreasing along the sequence.
    pub fn from_centers(
        lambda: YoungDiagram,
        levels_built: u32,
        centers: Vec<ScaledPoint>,
    ) -> Result<Self> {
        let mut index = HashMap::with_capacity(centers.len());
        let mut level_offsets = vec![0];
        let mut current = 0u32;
        for (i, c) in centers.iter().enumerate() {
            if c.dim() != lambda.dim() {
                return Err(Error::DimensionMismatch {
                    expected: lambda.dim(),
                    found: c.dim(),
                });
            }
            if c.level() > levels_built || c.level() < current {
                return Err(Error::Format(format!(
                    "center {i} has level {} out of sequence",
                    c.level()
                )));
            }
            while current < c.level() {
                level_offsets.push(i);
                current += 1;
            }
            let rows = lambda.scaled_rows(c.level());
            if classify_numerators(c.numerators(), &rows) != Membership::Boundary {
                return Err(Error::Format(format!("center {i} {c} is not on the boundary")));
            }
            if index.insert(c.clone(), i).is_some() {
                return Err(Error::Format(format!("center {i} {c} is duplicated")));
            }
        }
        while level_offsets.len() <= levels_built as usize {
            level_offsets.push(centers.len());
        }
        Ok(Self {
            lambda,
            levels_built,
            centers,
            level_offsets,
            index,
        })
    }

    pub fn lambda(&self) -> &YoungDiagram {
        &self.lambda
    }

    pub fn levels_built(&self) -> u32 {
        self.levels_built
    }

    pub fn centers(&self) -> &[ScaledPoint] {
        &self.centers
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.lambda.dim()
    }

    /// Start index of each level block; `level_offsets()[k]` is where level
    /// `k` begins.
    pub fn level_offsets(&self) -> &[usize] {
        &self.level_offsets
    }

    /// Centers belonging to level `k` (possibly cut short by truncation).
    pub fn level_block(&self, level: u32) -> &[ScaledPoint] {
        let k = level as usize;
        let start = self.level_offsets.get(k).copied().unwrap_or(self.len());
        let end = self
            .level_offsets
            .get(k + 1)
            .copied()
            .unwrap_or(self.len());
        &self.centers[start..end]
    }

    pub fn index_of(&self, p: &ScaledPoint) -> Option<usize> {
        self.index.get(p).copied()
    }

    /// Whether every level up to `levels_built` is complete.
    pub fn is_complete(&self) -> bool {
        let expected: usize = (0..=self.levels_built)
            .map(|k| {
                let set = if k == 0 {
                    enumerate_dominant_boundary(&self.lambda)
                } else {
                    enumerate_level(&self.lambda, k).expect("level >= 1")
                };
                set.points.iter().map(orbit_size).sum::<usize>()
            })
            .sum();
        expected == self.len()
    }
}

/// All distinct coordinate permutations of a dominant point, in descending
/// lexicographic order.
pub fn weyl_orbit(p: &ScaledPoint) -> Result<Vec<ScaledPoint>> {
    if !p.is_dominant() {
        return Err(Error::NonDominant(p.to_f64()));
    }
    let mut cur = p.numerators().to_vec();
    let mut out = vec![p.clone()];
    while prev_permutation(&mut cur) {
        out.push(ScaledPoint::new(cur.clone(), p.level()));
    }
    Ok(out)
}

/// Steps to the lexicographically previous arrangement; false once the slice
/// is non-decreasing.
fn prev_permutation(a: &mut [i64]) -> bool {
    let Some(i) = (0..a.len().saturating_sub(1)).rev().find(|&i| a[i] > a[i + 1]) else {
        return false;
    };
    let j = (i + 1..a.len()).rev().find(|&j| a[j] < a[i]).expect("a[i+1] < a[i]");
    a.swap(i, j);
    a[i + 1..].reverse();
    true
}

/// Multinomial count of distinct arrangements of a point's coordinates.
pub fn orbit_size(p: &ScaledPoint) -> usize {
    let mut counts = BTreeMap::new();
    for &x in p.numerators() {
        *counts.entry(x).or_insert(0usize) += 1;
    }
    let mut size = 1usize;
    let mut placed = 0usize;
    for c in counts.values() {
        for i in 1..=*c {
            placed += 1;
            size = size * placed / i;
        }
    }
    size
}

pub fn build_scattering(
    lambda: &YoungDiagram,
    max_levels: u32,
    max_points: Option<usize>,
) -> Result<Scattering> {
    build_scattering_with(lambda, max_levels, max_points, Truncation::Exact)
}

/// Concatenates, for `k = 0..=max_levels`, the descending-lexicographic
/// sorted Weyl orbits of the level-`k` dominant boundary points.
pub fn build_scattering_with(
    lambda: &YoungDiagram,
    max_levels: u32,
    max_points: Option<usize>,
    truncation: Truncation,
) -> Result<Scattering> {
    let limit = max_points.unwrap_or(usize::MAX);
    let mut centers = Vec::new();
    // Per-orbit bookkeeping for `WholeOrbits`: the last prefix length at
    // which every started orbit was complete.
    let mut closed_len = 0usize;
    let mut open = HashMap::<ScaledPoint, usize>::new();

    'levels: for k in 0..=max_levels {
        let set = if k == 0 {
            enumerate_dominant_boundary(lambda)
        } else {
            enumerate_level(lambda, k)?
        };
        let mut block = Vec::with_capacity(set.points.iter().map(orbit_size).sum());
        for p in &set.points {
            block.extend(weyl_orbit(p)?);
        }
        block.sort_unstable_by(|a, b| b.cmp(a));
        for c in block {
            if centers.len() == limit {
                break 'levels;
            }
            if truncation == Truncation::WholeOrbits {
                let rep = c.dominant();
                let size = orbit_size(&rep);
                let seen = open.entry(rep.clone()).or_insert(0);
                *seen += 1;
                if *seen == size {
                    open.remove(&rep);
                }
            }
            centers.push(c);
            if open.is_empty() {
                closed_len = centers.len();
            }
        }
    }
    if truncation == Truncation::WholeOrbits {
        centers.truncate(closed_len);
    }
    Scattering::from_centers(lambda.clone(), max_levels, centers)
}

/// Appends a coordinate equal to 1, i.e. numerator `2^level`.
pub fn iota_embed(p: &ScaledPoint) -> ScaledPoint {
    let mut num = p.numerators().to_vec();
    num.push(1 << p.level());
    ScaledPoint::new(num, p.level())
}

/// Embeds a whole scattering into the diagram with one extra unit row.
pub fn embed_scattering(s: &Scattering) -> Result<Scattering> {
    Scattering::from_centers(
        s.lambda().with_unit_row(),
        s.levels_built(),
        s.centers().iter().map(iota_embed).collect(),
    )
}

/// Whether `needle` occurs in `haystack` in order (not necessarily
/// contiguously).
pub fn is_subsequence(needle: &[ScaledPoint], haystack: &[ScaledPoint]) -> Result<bool> {
    if let (Some(a), Some(b)) = (needle.first(), haystack.first()) {
        if a.dim() != b.dim() {
            return Err(Error::DimensionMismatch {
                expected: b.dim(),
                found: a.dim(),
            });
        }
    }
    let mut it = haystack.iter();
    Ok(needle.iter().all(|p| it.any(|q| q == p)))
}

/// Nearest-neighbor statistics of one prefix.
#[derive(Debug, Clone, Serialize)]
pub struct PrefixStat {
    pub len: usize,
    pub min_distance: f64,
    pub max_distance: f64,
    pub ratio: f64,
    pub cosine_min: f64,
    pub cosine_max: f64,
    pub cosine_ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct UniformityReport {
    pub centers: usize,
    /// Reported prefixes: every level boundary plus every `stride`-th length.
    pub prefixes: Vec<PrefixStat>,
    /// Largest `max D / min D` over every prefix of length at least 2.
    pub worst_euclidean_ratio: f64,
    /// Same ratio for the chordal distance between normalized centers, which
    /// orders pairs exactly as the cosine distance does.
    pub worst_cosine_ratio: f64,
    /// `max ‖w − c_λ‖ / min ‖w − c_λ‖` over the centers.
    pub shape_ratio: f64,
    /// `2 max ‖v‖ / min ‖v‖` over `v ∈ P_λ`.
    pub cosine_exponent_bound: f64,
    /// `2 (max ‖v‖ / min ‖v‖)^2`: chordal distances between normalized points
    /// of the hyperplane lie within `[d h / ρ^2, d / h]` for euclidean
    /// distance `d`, center norm `h` and vertex norm `ρ`.
    pub cosine_provable_bound: f64,
    /// For each complete level boundary, whether all nearest-neighbor
    /// distances coincide exactly.
    pub level_equidistant: Vec<bool>,
}

pub fn verify_scattering(s: &Scattering, prefix_stride: usize) -> Result<UniformityReport> {
    verify_points(s.lambda(), s.centers(), s.level_offsets(), prefix_stride)
}

/// Incremental brute force: when center `N` joins, its distance to every
/// earlier center is computed and the running nearest-neighbor distances are
/// lowered. Squared euclidean distances are exact integers at the finest
/// level, so equalities are decided exactly.
pub fn verify_points(
    lambda: &YoungDiagram,
    centers: &[ScaledPoint],
    level_offsets: &[usize],
    prefix_stride: usize,
) -> Result<UniformityReport> {
    if centers.len() < 2 {
        return Err(Error::TooFewCenters(centers.len()));
    }
    let finest = centers.iter().map(|c| c.level()).max().unwrap_or(0);
    let scale = (finest as f64).exp2();
    let ints: Vec<Vec<i64>> = centers.iter().map(|c| c.numerators_at(finest)).collect();
    let units: Vec<Vec<f64>> = centers
        .iter()
        .map(|c| {
            let v = c.to_f64();
            let n = norm(&v);
            v.into_iter().map(|x| x / n).collect()
        })
        .collect();

    let boundaries: Vec<usize> = level_offsets
        .iter()
        .skip(1)
        .copied()
        .chain(std::iter::once(centers.len()))
        .filter(|&n| n >= 2)
        .collect();

    let mut nn = vec![i64::MAX; centers.len()];
    let mut nn_cos = vec![f64::INFINITY; centers.len()];
    let mut multiset = Multiset::default();
    let mut multiset_cos = Multiset::default();
    let mut prefixes = Vec::new();
    let mut worst = 1.0f64;
    let mut worst_cos = 1.0f64;
    let mut level_equidistant = Vec::new();

    for n in 1..centers.len() {
        let (sq, chord) = distances_to_prefix(&ints, &units, n);
        let mut own = i64::MAX;
        let mut own_cos = f64::INFINITY;
        for j in 0..n {
            own = own.min(sq[j]);
            own_cos = own_cos.min(chord[j]);
            if sq[j] < nn[j] {
                if nn[j] != i64::MAX {
                    multiset.remove(nn[j] as u64);
                }
                multiset.insert(sq[j] as u64);
                nn[j] = sq[j];
            }
            if chord[j] < nn_cos[j] {
                if nn_cos[j].is_finite() {
                    multiset_cos.remove(nn_cos[j].to_bits());
                }
                multiset_cos.insert(chord[j].to_bits());
                nn_cos[j] = chord[j];
            }
        }
        nn[n] = own;
        nn_cos[n] = own_cos;
        multiset.insert(own as u64);
        multiset_cos.insert(own_cos.to_bits());

        let len = n + 1;
        let (lo, hi) = multiset.bounds();
        let ratio = ratio_of(((lo as f64).sqrt(), (hi as f64).sqrt()));
        let (clo, chi) = multiset_cos.bounds();
        let cos_ratio = ratio_of((f64::from_bits(clo), f64::from_bits(chi)));
        worst = worst.max(ratio);
        worst_cos = worst_cos.max(cos_ratio);

        let at_boundary = boundaries.contains(&len);
        if at_boundary {
            level_equidistant.push(lo == hi);
        }
        if at_boundary || (prefix_stride > 0 && len % prefix_stride == 0) {
            prefixes.push(PrefixStat {
                len,
                min_distance: (lo as f64).sqrt() / scale,
                max_distance: (hi as f64).sqrt() / scale,
                ratio,
                cosine_min: f64::from_bits(clo),
                cosine_max: f64::from_bits(chi),
                cosine_ratio: cos_ratio,
            });
        }
    }

    let center = polytope_center(lambda);
    let floats: Vec<Vec<f64>> = centers.iter().map(|c| c.to_f64()).collect();
    let radial: Vec<f64> = floats.iter().map(|v| sq_euclidean(v, &center).sqrt()).collect();
    // Over all of P_λ the norm peaks at the vertices and bottoms out at the
    // center, the foot of the perpendicular from the origin.
    let norm_bound = norm(&lambda.highest_weight().to_f64()) / norm(&center);
    Ok(UniformityReport {
        centers: centers.len(),
        prefixes,
        worst_euclidean_ratio: worst,
        worst_cosine_ratio: worst_cos,
        shape_ratio: max_of(&radial) / min_of(&radial),
        cosine_exponent_bound: 2.0 * norm_bound,
        cosine_provable_bound: 2.0 * norm_bound * norm_bound,
        level_equidistant,
    })
}

fn ratio_of((lo, hi): (f64, f64)) -> f64 {
    if lo == 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

fn max_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

fn min_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Below this prefix length the scan stays on the calling thread.
#[cfg(feature = "parallel")]
const PARALLEL_MIN_PREFIX: usize = 4096;

/// Exact squared distances (finest-level integers) and chordal distances
/// between normalized centers, from center `n` to each of `0..n`.
fn distances_to_prefix(ints: &[Vec<i64>], units: &[Vec<f64>], n: usize) -> (Vec<i64>, Vec<f64>) {
    let pair = |j: usize| {
        let sq: i64 = ints[n]
            .iter()
            .zip(&ints[j])
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        let chord = sq_euclidean(&units[n], &units[j]).sqrt();
        (sq, chord)
    };
    #[cfg(feature = "parallel")]
    if n >= PARALLEL_MIN_PREFIX {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(pair).unzip();
    }
    (0..n).map(pair).unzip()
}

/// Counted multiset over order-preserving `u64` keys.
#[derive(Default)]
struct Multiset(BTreeMap<u64, usize>);

impl Multiset {
    fn insert(&mut self, key: u64) {
        *self.0.entry(key).or_insert(0) += 1;
    }

    fn remove(&mut self, key: u64) {
        let slot = self.0.get_mut(&key).expect("key present");
        *slot -= 1;
        if *slot == 0 {
            self.0.remove(&key);
        }
    }

    fn bounds(&self) -> (u64, u64) {
        let lo = *self.0.keys().next().expect("non-empty");
        let hi = *self.0.keys().next_back().expect("non-empty");
        (lo, hi)
    }
}

/// Cosine distance between two centers, for callers that want the raw value.
pub fn center_cosine(a: &ScaledPoint, b: &ScaledPoint) -> f64 {
    cosine_unchecked(&a.to_f64(), &b.to_f64())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{brute_boundary, brute_nn_sq_numerators, OracleConfig};

    fn diagram(parts: &[i64]) -> YoungDiagram {
        YoungDiagram::from_parts(parts, None).unwrap()
    }

    fn pt(num: &[i64], level: u32) -> ScaledPoint {
        ScaledPoint::new(num.to_vec(), level)
    }

    const LISTED_LEVEL0: [[i64; 4]; 12] = [
        [2, 1, 1, 0],
        [2, 1, 0, 1],
        [2, 0, 1, 1],
        [1, 2, 1, 0],
        [1, 2, 0, 1],
        [1, 1, 2, 0],
        [1, 1, 0, 2],
        [1, 0, 2, 1],
        [1, 0, 1, 2],
        [0, 2, 1, 1],
        [0, 1, 2, 1],
        [0, 1, 1, 2],
    ];

    #[test]
    fn orbit_examples() {
        let orbit = weyl_orbit(&pt(&[2, 1, 1, 0], 0)).unwrap();
        assert_eq!(orbit.len(), 12);
        for (got, want) in orbit.iter().zip(LISTED_LEVEL0.iter()) {
            assert_eq!(got.numerators(), want);
        }
        assert_eq!(weyl_orbit(&pt(&[1, 1, 1, 1], 0)).unwrap().len(), 1);
        assert_eq!(weyl_orbit(&pt(&[2, 1, 1, 1, 1], 0)).unwrap().len(), 5);
        assert_eq!(orbit_size(&pt(&[2, 2, 1, 1, 0], 0)), 30);
        assert!(weyl_orbit(&pt(&[0, 1, 2], 0)).is_err());
    }

    #[test]
    fn sequence_prefix_matches_listing() {
        let s = build_scattering(&diagram(&[2, 1, 1]), 1, None).unwrap();
        for (i, want) in LISTED_LEVEL0.iter().enumerate() {
            assert_eq!(s.centers()[i].numerators(), want);
        }
        let next = [
            pt(&[4, 2, 1, 1], 1),
            pt(&[4, 1, 2, 1], 1),
            pt(&[4, 1, 1, 2], 1),
            pt(&[3, 3, 2, 0], 1),
            pt(&[3, 3, 1, 1], 1),
        ];
        assert_eq!(&s.centers()[12..17], &next);
        assert_eq!(s.level_offsets(), &[0, 12]);

        let s0 = build_scattering(&diagram(&[2, 1, 1]), 0, None).unwrap();
        assert_eq!(s0.len(), 12);
        let one = build_scattering(&diagram(&[3, 2, 1]), 0, Some(1)).unwrap();
        assert_eq!(one.centers(), &[pt(&[3, 2, 1, 0], 0)]);
    }

    #[test]
    fn whole_orbit_truncation() {
        let lam = diagram(&[2, 1, 1]);
        let s = build_scattering_with(&lam, 1, Some(20), Truncation::WholeOrbits).unwrap();
        assert_eq!(s.len(), 12);
        let s = build_scattering_with(&lam, 1, Some(5), Truncation::WholeOrbits).unwrap();
        assert_eq!(s.len(), 0);
        let s = build_scattering(&lam, 1, Some(20)).unwrap();
        assert_eq!(s.len(), 20);
    }

    #[test]
    fn counts_match_oracle() {
        let cfg = OracleConfig::default();
        for parts in [&[2, 1, 1][..], &[3, 2, 1], &[2, 2, 1, 1]] {
            let lam = diagram(parts);
            for k in 0..=2 {
                if lam.total() << k > cfg.max_total_boxes {
                    continue;
                }
                let s = build_scattering(&lam, k, None).unwrap();
                let expected: usize = brute_boundary(&lam, k, &cfg)
                    .unwrap()
                    .iter()
                    .map(|p| weyl_orbit(p).unwrap().len())
                    .sum();
                assert_eq!(s.len(), expected);
                assert!(s.is_complete());
            }
        }
    }

    #[test]
    fn embedding_examples() {
        assert_eq!(iota_embed(&pt(&[2, 1, 1, 0], 0)), pt(&[2, 1, 1, 0, 1], 0));
        assert_eq!(iota_embed(&pt(&[3, 3, 2, 0], 1)), pt(&[3, 3, 2, 0, 2], 1));
        let (a, b) = (pt(&[2, 1, 1, 0], 0), pt(&[2, 1, 0, 1], 0));
        let d = |x: &ScaledPoint, y: &ScaledPoint| sq_euclidean(&x.to_f64(), &y.to_f64());
        assert_eq!(d(&a, &b), 2.0);
        assert_eq!(d(&iota_embed(&a), &iota_embed(&b)), 2.0);
    }

    #[test]
    fn subsequence_examples() {
        let c = build_scattering(&diagram(&[2, 1, 1]), 1, None).unwrap();
        let c2 = build_scattering(&diagram(&[2, 1, 1, 1]), 1, None).unwrap();
        let embedded: Vec<_> = c.centers().iter().map(iota_embed).collect();
        assert!(is_subsequence(&embedded, c2.centers()).unwrap());
        assert!(is_subsequence(c.centers(), c.centers()).unwrap());
        let reversed: Vec<_> = c.centers().iter().rev().cloned().collect();
        assert!(!is_subsequence(&reversed, c.centers()).unwrap());
        assert!(is_subsequence(c.centers(), c2.centers()).is_err());
    }

    #[test]
    fn from_centers_rejects_bad_input() {
        let lam = diagram(&[2, 1, 1]);
        let dup = vec![pt(&[2, 1, 1, 0], 0), pt(&[2, 1, 1, 0], 0)];
        assert!(Scattering::from_centers(lam.clone(), 0, dup).is_err());
        let inside = vec![pt(&[1, 1, 1, 1], 0)];
        assert!(Scattering::from_centers(lam.clone(), 0, inside).is_err());
        let too_fine = vec![pt(&[4, 2, 1, 1], 1)];
        assert!(Scattering::from_centers(lam, 0, too_fine).is_err());
    }

    #[test]
    fn level_zero_report() {
        let s = build_scattering(&diagram(&[2, 1, 1]), 0, None).unwrap();
        let r = verify_scattering(&s, 1).unwrap();
        assert_eq!(r.worst_euclidean_ratio, 1.0);
        let last = r.prefixes.last().unwrap();
        assert_eq!(last.len, 12);
        assert!((last.min_distance - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(last.min_distance, last.max_distance);
        assert_eq!(r.level_equidistant, vec![true]);

        let two = Scattering::from_centers(
            diagram(&[2, 1, 1]),
            0,
            s.centers()[..2].to_vec(),
        )
        .unwrap();
        assert_eq!(verify_scattering(&two, 0).unwrap().worst_euclidean_ratio, 1.0);
        assert!(matches!(
            verify_points(&diagram(&[2, 1, 1]), &s.centers()[..1], &[0], 1),
            Err(Error::TooFewCenters(1))
        ));
    }

    #[test]
    fn incremental_matches_all_pairs_oracle() {
        let s = build_scattering(&diagram(&[3, 2, 1]), 1, None).unwrap();
        let r = verify_scattering(&s, 7).unwrap();
        for stat in &r.prefixes {
            let (level, sq) = brute_nn_sq_numerators(&s.centers()[..stat.len]);
            let scale = (level as f64).exp2();
            let lo = (*sq.iter().min().unwrap() as f64).sqrt() / scale;
            let hi = (*sq.iter().max().unwrap() as f64).sqrt() / scale;
            assert_eq!(stat.min_distance, lo, "prefix {}", stat.len);
            assert_eq!(stat.max_distance, hi, "prefix {}", stat.len);
        }
    }
}
