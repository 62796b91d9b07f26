//! Nearest-center queries against a scattering.
//!
//! A query is sorted into the dominant chamber, projected onto a face of
//! `P_λ` and rounded there to seed the search. Exactness comes from
//! [`BoundaryStream`], which yields boundary lattice points of the finest level
//! in non-decreasing distance from the query; the search stops once the next
//! possible distance exceeds the `k`-th best found.

mod expand;
mod face;
mod stream;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{cosine_unchecked, dominant_sort, norm, sq_euclidean, Metric, ScaledPoint};
use crate::scattering::Scattering;

pub use expand::expand_neighbors;
pub use face::{locate_face, round_in_face, FaceDescriptor, FACE_TOLERANCE};
pub use stream::BoundaryStream;

/// Distances within this margin of the current `k`-th best are still examined
/// so that ties are resolved by the lexicographic rule, not by stream order.
const TIE_MARGIN: f64 = 1e-9;

/// Angular counterpart of `TIE_MARGIN`; `acos` near zero only resolves
/// angles to about `√ε`.
const ANGLE_MARGIN: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq)]
pub struct Neighbor {
    /// Position of the center in the scattering.
    pub index: usize,
    pub point: ScaledPoint,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryResult {
    pub query: Vec<f64>,
    pub metric: Metric,
    /// Ascending distance, ties in descending lexicographic order.
    pub neighbors: Vec<Neighbor>,
}

impl QueryResult {
    pub fn indices(&self) -> Vec<usize> {
        self.neighbors.iter().map(|n| n.index).collect()
    }
}

/// Work done by one query.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct QueryStats {
    /// Boundary lattice points drawn from the facet streams.
    pub candidates: usize,
    /// Lattice points tested while walking facet blocks.
    pub lattice_evaluations: usize,
    pub facets_opened: usize,
    /// Whether face rounding produced the true nearest center.
    pub seed_exact: bool,
}

fn check_query(e: &[f64], s: &Scattering) -> Result<()> {
    if e.len() != s.dim() {
        return Err(Error::DimensionMismatch {
            expected: s.dim(),
            found: e.len(),
        });
    }
    if e.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite);
    }
    if s.is_empty() {
        return Err(Error::EmptyScattering);
    }
    Ok(())
}

fn rank_distance(e: &[f64], c: &[f64], metric: Metric) -> f64 {
    match metric {
        Metric::Euclidean => sq_euclidean(e, c).sqrt(),
        Metric::Cosine => cosine_unchecked(e, c),
    }
}

fn finish(query: &[f64], metric: Metric, mut found: Vec<Neighbor>, k: usize) -> QueryResult {
    found.sort_by(|a, b| {
        a.distance
            .total_cmp(&b.distance)
            .then_with(|| b.point.cmp(&a.point))
    });
    found.truncate(k);
    QueryResult {
        query: query.to_vec(),
        metric,
        neighbors: found,
    }
}

fn kth_smallest(found: &[Neighbor], k: usize) -> f64 {
    let mut d: Vec<f64> = found.iter().map(|n| n.distance).collect();
    let (_, kth, _) = d.select_nth_unstable_by(k - 1, f64::total_cmp);
    *kth
}

/// The `k` centers of `s` closest to `e`, ordered by distance and then in
/// descending lexicographic order.
pub fn nearest_center(e: &[f64], s: &Scattering, k: usize, metric: Metric) -> Result<QueryResult> {
    nearest_center_with_stats(e, s, k, metric).map(|(r, _)| r)
}

pub fn nearest_center_with_stats(
    e: &[f64],
    s: &Scattering,
    k: usize,
    metric: Metric,
) -> Result<(QueryResult, QueryStats)> {
    check_query(e, s)?;
    match metric {
        Metric::Euclidean => euclidean_nearest(e, s, k),
        Metric::Cosine => cosine_nearest_with_stats(e, s, k),
    }
}

fn euclidean_nearest(e: &[f64], s: &Scattering, k: usize) -> Result<(QueryResult, QueryStats)> {
    let lambda = s.lambda();
    let level = s.levels_built();
    let (e_dom, perm) = dominant_sort(e);
    let (mut face, projected) = locate_face(&e_dom, lambda)?;
    face.level = level;
    let seeds = round_in_face(&projected, &face, lambda, level);
    let back = perm.inverse();

    let scale = (level as f64).exp2();
    let target: Vec<f64> = e_dom.iter().map(|x| x * scale).collect();
    let mut stream = BoundaryStream::new(target, lambda.scaled_rows(level));
    let mut found: Vec<Neighbor> = Vec::new();
    let mut kth = f64::INFINITY;
    while let Some(key) = stream.peek() {
        if k == 0 || (found.len() >= k && key.max(0.0).sqrt() / scale > kth + TIE_MARGIN) {
            break;
        }
        let Some((_, num)) = stream.next() else { break };
        let point = ScaledPoint::new(back.apply(&num), level);
        let Some(index) = s.index_of(&point) else { continue };
        let distance = rank_distance(e, &point.to_f64(), Metric::Euclidean);
        found.push(Neighbor {
            index,
            point,
            distance,
        });
        if found.len() >= k {
            kth = kth_smallest(&found, k);
        }
    }
    let result = finish(e, Metric::Euclidean, found, k);
    let seed_exact = match (seeds.first(), result.neighbors.first()) {
        (Some(seed), Some(best)) => seed.permuted(&back) == best.point,
        _ => false,
    };
    let stats = QueryStats {
        candidates: stream.candidates(),
        lattice_evaluations: stream.evaluations(),
        facets_opened: stream.facets_opened(),
        seed_exact,
    };
    Ok((result, stats))
}

/// Nearest centers under cosine distance.
pub fn cosine_nearest(e: &[f64], s: &Scattering, k: usize) -> Result<QueryResult> {
    check_query(e, s)?;
    cosine_nearest_with_stats(e, s, k).map(|(r, _)| r)
}

/// Every center lies on the hyperplane `Σx = |λ|` inside the ball of radius
/// `ρ = ‖w_λ‖`. Points are streamed by euclidean distance `d` from an anchor
/// `q` on that hyperplane whose direction makes angle `β` with `e`; a point at
/// distance `d` from `q` makes angle at least `asin(min(1, d·h/(‖q‖ρ))) - β`
/// with `e`, where `h = |λ|/√(n+1)` is the distance from the origin to the
/// hyperplane. The stream stops when that bound passes the `k`-th best angle.
fn cosine_nearest_with_stats(
    e: &[f64],
    s: &Scattering,
    k: usize,
) -> Result<(QueryResult, QueryStats)> {
    let e_norm = norm(e);
    if e_norm == 0.0 {
        return Err(Error::ZeroVector);
    }
    let lambda = s.lambda();
    let level = s.levels_built();
    let m = lambda.dim();
    let total = lambda.total() as f64;
    let rho = norm(&lambda.highest_weight().to_f64());
    let h = total / (m as f64).sqrt();

    let (e_dom, perm) = dominant_sort(e);
    let e_sum: f64 = e.iter().sum();
    let radial: Vec<f64> = e_dom.iter().map(|x| x * total / e_sum).collect();
    let (anchor, beta) = if e_sum > 0.0 && norm(&radial) <= 4.0 * rho {
        (radial, 0.0)
    } else {
        let vertex: Vec<f64> = lambda.rows().iter().map(|&r| r as f64).collect();
        let cos = (1.0 - cosine_unchecked(&e_dom, &vertex)).clamp(-1.0, 1.0);
        (vertex, cos.acos())
    };
    let anchor_norm = norm(&anchor);
    let back = perm.inverse();

    let scale = (level as f64).exp2();
    let target: Vec<f64> = anchor.iter().map(|x| x * scale).collect();
    let mut stream = BoundaryStream::new(target, lambda.scaled_rows(level));
    let mut found: Vec<Neighbor> = Vec::new();
    let mut kth = f64::INFINITY;
    while let Some(key) = stream.peek() {
        if k == 0 {
            break;
        }
        if found.len() >= k {
            let d = key.max(0.0).sqrt() / scale;
            let bound = (d * h / (anchor_norm * rho)).min(1.0).asin() - beta;
            let kth_angle = (1.0 - kth).clamp(-1.0, 1.0).acos();
            if bound > kth_angle + ANGLE_MARGIN {
                break;
            }
        }
        let Some((_, num)) = stream.next() else { break };
        let point = ScaledPoint::new(back.apply(&num), level);
        let Some(index) = s.index_of(&point) else { continue };
        let distance = rank_distance(e, &point.to_f64(), Metric::Cosine);
        found.push(Neighbor {
            index,
            point,
            distance,
        });
        if found.len() >= k {
            kth = kth_smallest(&found, k);
        }
    }
    let stats = QueryStats {
        candidates: stream.candidates(),
        lattice_evaluations: stream.evaluations(),
        facets_opened: stream.facets_opened(),
        seed_exact: false,
    };
    Ok((finish(e, Metric::Cosine, found, k), stats))
}

/// Runs many queries; results keep the input order.
pub fn query_batch(
    queries: &[Vec<f64>],
    s: &Scattering,
    k: usize,
    metric: Metric,
) -> Vec<Result<QueryResult>> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        queries
            .par_iter()
            .map(|q| nearest_center(q, s, k, metric))
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        query_batch_sequential(queries, s, k, metric)
    }
}

pub fn query_batch_sequential(
    queries: &[Vec<f64>],
    s: &Scattering,
    k: usize,
    metric: Metric,
) -> Vec<Result<QueryResult>> {
    queries.iter().map(|q| nearest_center(q, s, k, metric)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::YoungDiagram;
    use crate::oracle::{brute_nearest, random_queries, OracleConfig};
    use crate::scattering::{build_scattering, build_scattering_with, Truncation};

    fn diagram(parts: &[i64]) -> YoungDiagram {
        YoungDiagram::from_parts(parts, None).unwrap()
    }

    #[test]
    fn worked_examples() {
        let s = build_scattering(&diagram(&[2, 1, 1]), 0, None).unwrap();
        let r = nearest_center(&[2.0, 1.0, 1.0, 0.0], &s, 1, Metric::Euclidean).unwrap();
        assert_eq!(r.neighbors[0].point.numerators(), &[2, 1, 1, 0]);
        assert_eq!(r.neighbors[0].distance, 0.0);
        let r = nearest_center(&[1.9, 1.1, 0.9, 0.1], &s, 1, Metric::Euclidean).unwrap();
        assert_eq!(r.neighbors[0].point.numerators(), &[2, 1, 1, 0]);
        let r = nearest_center(&[0.9, 1.1, 0.1, 1.9], &s, 1, Metric::Euclidean).unwrap();
        assert_eq!(r.neighbors[0].point.numerators(), &[1, 1, 0, 2]);
        let r = nearest_center(&[0.3, 0.1, 0.7, 2.0], &s, 12, Metric::Euclidean).unwrap();
        assert_eq!(r.neighbors.len(), 12);
    }

    #[test]
    fn input_errors() {
        let s = build_scattering(&diagram(&[2, 1, 1]), 0, None).unwrap();
        assert!(matches!(
            nearest_center(&[1.0, 1.0, 1.0], &s, 1, Metric::Euclidean),
            Err(Error::DimensionMismatch { expected: 4, found: 3 })
        ));
        assert!(matches!(
            nearest_center(&[0.0; 4], &s, 1, Metric::Cosine),
            Err(Error::ZeroVector)
        ));
        assert!(matches!(
            nearest_center(&[f64::NAN, 0.0, 0.0, 0.0], &s, 1, Metric::Euclidean),
            Err(Error::NonFinite)
        ));
        let empty = build_scattering_with(&diagram(&[2, 1, 1]), 0, Some(5), Truncation::WholeOrbits)
            .unwrap();
        assert!(matches!(
            nearest_center(&[1.0; 4], &empty, 1, Metric::Euclidean),
            Err(Error::EmptyScattering)
        ));
    }

    #[test]
    fn matches_oracle() {
        let cfg = OracleConfig::default();
        let mut rng = cfg.rng();
        for parts in [&[2, 1, 1][..], &[3, 2, 1], &[2, 2, 1, 1]] {
            let lam = diagram(parts);
            for level in 0..=2 {
                let s = build_scattering(&lam, level, None).unwrap();
                for q in random_queries(&mut rng, &lam, 40) {
                    for metric in [Metric::Euclidean, Metric::Cosine] {
                        for k in [1, 3, 8] {
                            let got = nearest_center(&q, &s, k, metric).unwrap();
                            let want = brute_nearest(&q, s.centers(), k, metric);
                            assert_eq!(got.indices(), want.indices(), "{lam} K={level} {q:?} {metric:?} k={k}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn truncated_scattering_matches_oracle() {
        let lam = diagram(&[3, 2, 1]);
        let s = build_scattering(&lam, 1, Some(30)).unwrap();
        let mut rng = OracleConfig::default().rng();
        for q in random_queries(&mut rng, &lam, 50) {
            let got = nearest_center(&q, &s, 4, Metric::Euclidean).unwrap();
            let want = brute_nearest(&q, s.centers(), 4, Metric::Euclidean);
            assert_eq!(got.indices(), want.indices());
        }
    }

    #[test]
    fn batch_keeps_order() {
        let lam = diagram(&[3, 2, 1]);
        let s = build_scattering(&lam, 1, None).unwrap();
        let qs = random_queries(&mut OracleConfig::default().rng(), &lam, 20);
        let par = query_batch(&qs, &s, 2, Metric::Euclidean);
        let seq = query_batch_sequential(&qs, &s, 2, Metric::Euclidean);
        for (a, b) in par.into_iter().zip(seq) {
            assert_eq!(a.unwrap(), b.unwrap());
        }
    }
}
