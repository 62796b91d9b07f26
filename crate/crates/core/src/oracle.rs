//! Brute-force reference implementations.
//!
//! Nothing here calls into the enumeration or search code paths: boundary
//! points come from plain multi-radix counting and distances from local loops,
//! so agreement with the structured algorithms is independent evidence.

use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{Metric, ScaledPoint, YoungDiagram};
use crate::search::{Neighbor, QueryResult};

#[derive(Debug, Clone, Copy)]
pub struct OracleConfig {
    /// Largest `|2^k λ|` the exhaustive enumeration accepts.
    pub max_total_boxes: i64,
    pub seed: u64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            max_total_boxes: 24,
            seed: 0x5eed_c0de,
        }
    }
}

impl OracleConfig {
    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

/// All dominant lattice points of `∂P_λ ∩ 𝔛/2^k`, found by counting through
/// every vector in `[0, 2^k λ_1]^{n+1}` and filtering.
pub fn brute_boundary(
    lambda: &YoungDiagram,
    level: u32,
    config: &OracleConfig,
) -> Result<Vec<ScaledPoint>> {
    let rows: Vec<i64> = lambda.rows().iter().map(|r| r * (1 << level)).collect();
    let total: i64 = rows.iter().sum();
    if total > config.max_total_boxes {
        return Err(Error::OracleCapExceeded {
            total,
            cap: config.max_total_boxes,
        });
    }
    let m = rows.len();
    let radix = rows[0] + 1;
    let mut digits = vec![0i64; m];
    let mut found = Vec::new();
    'count: loop {
        if digits.iter().sum::<i64>() == total
            && digits.windows(2).all(|w| w[0] >= w[1])
            && on_boundary(&digits, &rows)
        {
            found.push(ScaledPoint::new(digits.clone(), level));
        }
        for d in digits.iter_mut().rev() {
            *d += 1;
            if *d < radix {
                continue 'count;
            }
            *d = 0;
        }
        break;
    }
    found.sort_by(|a, b| b.cmp(a));
    Ok(found)
}

/// `q` is weakly decreasing here; checks majorization plus one tight prefix.
fn on_boundary(q: &[i64], rows: &[i64]) -> bool {
    let mut tight = 0;
    let (mut a, mut b) = (0, 0);
    for i in 0..q.len() - 1 {
        a += q[i];
        b += rows[i];
        if a > b {
            return false;
        }
        if a == b {
            tight += 1;
        }
    }
    tight > 0
}

/// Brute-force nearest centers: full scan, sorted by distance with ties in
/// descending lexicographic order of the center.
pub fn brute_nearest(
    query: &[f64],
    centers: &[ScaledPoint],
    k: usize,
    metric: Metric,
) -> QueryResult {
    let mut scored: Vec<(usize, f64)> = centers
        .iter()
        .enumerate()
        .map(|(i, c)| (i, reference_distance(query, &c.to_f64(), metric)))
        .collect();
    scored.sort_by(|a, b| {
        a.1.partial_cmp(&b.1)
            .unwrap_or(Ordering::Equal)
            .then_with(|| centers[b.0].cmp(&centers[a.0]))
    });
    scored.truncate(k);
    QueryResult {
        query: query.to_vec(),
        metric,
        neighbors: scored
            .into_iter()
            .map(|(index, distance)| Neighbor {
                index,
                point: centers[index].clone(),
                distance,
            })
            .collect(),
    }
}

/// Squared euclidean distances are accumulated in coordinate order and the
/// cosine as `1 - dot / (|a| |b|)`, floored at zero, so that results are bit-comparable with the
/// structured search.
pub fn reference_distance(a: &[f64], b: &[f64], metric: Metric) -> f64 {
    match metric {
        Metric::Euclidean => {
            let mut s = 0.0;
            for i in 0..a.len() {
                let d = a[i] - b[i];
                s += d * d;
            }
            s.sqrt()
        }
        Metric::Cosine => {
            let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
            for i in 0..a.len() {
                dot += a[i] * b[i];
                na += a[i] * a[i];
                nb += b[i] * b[i];
            }
            (1.0 - dot / (na.sqrt() * nb.sqrt())).max(0.0)
        }
    }
}

/// For each point of the prefix, the squared distance to its nearest other
/// point, as integers at the common finest level. Returns that level too.
pub fn brute_nn_sq_numerators(points: &[ScaledPoint]) -> (u32, Vec<i64>) {
    let level = points.iter().map(|p| p.level()).max().unwrap_or(0);
    let scaled: Vec<Vec<i64>> = points.iter().map(|p| p.numerators_at(level)).collect();
    let nn = (0..scaled.len())
        .map(|i| {
            (0..scaled.len())
                .filter(|&j| j != i)
                .map(|j| {
                    scaled[i]
                        .iter()
                        .zip(&scaled[j])
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum::<i64>()
                })
                .min()
                .unwrap_or(i64::MAX)
        })
        .collect();
    (level, nn)
}

/// `D_{n,N}` for every `n ≤ N` of the given prefix (euclidean).
pub fn brute_nn_distances(points: &[ScaledPoint]) -> Vec<f64> {
    let (level, sq) = brute_nn_sq_numerators(points);
    let scale = (level as f64).exp2();
    sq.into_iter().map(|d| (d as f64).sqrt() / scale).collect()
}

/// Query points drawn uniformly from a box around `P_λ`, wide enough to
/// include queries inside, on and well outside the polytope.
pub fn random_queries(rng: &mut impl Rng, lambda: &YoungDiagram, count: usize) -> Vec<Vec<f64>> {
    let hi = lambda.rows()[0] as f64;
    (0..count)
        .map(|_| {
            (0..lambda.dim())
                .map(|_| rng.random_range(-0.5 * hi..1.5 * hi))
                .collect()
        })
        .collect()
}
