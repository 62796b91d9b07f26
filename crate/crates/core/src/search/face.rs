use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{classify_numerators, Membership, ScaledPoint, YoungDiagram};

/// Tolerance on normalized constraint values `g_j / √j` when deciding whether
/// a projected query lies in a closed face.
pub const FACE_TOLERANCE: f64 = 1e-9;

/// A face of `P_λ` through `w_λ`, given by the partial sums
/// `x_1 + … + x_j = λ_1 + … + λ_j` that are tight for `j` in `tight`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FaceDescriptor {
    /// Tight indices `j ∈ 1..=n`, ascending.
    pub tight: Vec<usize>,
    /// Subdivision level of the lattice restricted to the face.
    pub level: u32,
}

impl FaceDescriptor {
    pub fn is_vertex(&self, rank: usize) -> bool {
        self.tight.len() == rank
    }
}

/// Orthogonal projection of `e` onto the affine span of the face with the
/// given tight set: every block between consecutive tight indices is shifted
/// so that its sum matches the diagram.
pub(crate) fn project_onto_face(e: &[f64], bounds: &[i64], tight: &[usize]) -> Vec<f64> {
    let m = e.len();
    let mut out = e.to_vec();
    let mut start = 0usize;
    let mut prev_bound = 0i64;
    for end in tight.iter().copied().chain(std::iter::once(m)) {
        let target = (bounds[end - 1] - prev_bound) as f64;
        let have: f64 = e[start..end].iter().sum();
        let shift = (target - have) / (end - start) as f64;
        out[start..end].iter_mut().for_each(|x| *x += shift);
        start = end;
        prev_bound = bounds[end - 1];
    }
    out
}

/// Closed-polytope test with tolerance: sorted partial sums may exceed the
/// diagram's by at most `FACE_TOLERANCE · √j`.
fn in_polytope(x: &[f64], bounds: &[i64]) -> bool {
    let mut sorted = x.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut acc = 0.0;
    sorted[..sorted.len() - 1]
        .iter()
        .zip(bounds)
        .enumerate()
        .all(|(i, (v, &b))| {
            acc += v;
            (acc - b as f64) / ((i + 1) as f64).sqrt() <= FACE_TOLERANCE
        })
}

/// Iteratively projects a dominant query onto the affine span of a face
/// through `w_λ`, each step making tight the partial sum with the largest
/// normalized value `g_j / √j`, until the projection lies in the closed face.
/// Terminates after at most `n` steps: with every index tight the projection
/// is `w_λ` itself.
pub fn locate_face(e_dom: &[f64], lambda: &YoungDiagram) -> Result<(FaceDescriptor, Vec<f64>)> {
    let m = lambda.dim();
    if e_dom.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: e_dom.len(),
        });
    }
    if e_dom.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::NonDominant(e_dom.to_vec()));
    }
    let bounds = lambda.prefix_sums();
    let mut tight: Vec<usize> = Vec::new();
    let mut current = project_onto_face(e_dom, &bounds, &tight);
    loop {
        if !tight.is_empty() && in_polytope(&current, &bounds) {
            break;
        }
        // Most violated constraint, or the least slack one when none is.
        let mut acc = 0.0;
        let mut best: Option<(f64, usize)> = None;
        for j in 1..m {
            acc += current[j - 1];
            if tight.contains(&j) {
                continue;
            }
            let g = (acc - bounds[j - 1] as f64) / (j as f64).sqrt();
            if best.is_none_or(|(b, _)| g > b) {
                best = Some((g, j));
            }
        }
        let (_, j) = best.expect("a non-vertex face has a free index");
        tight.push(j);
        tight.sort_unstable();
        current = project_onto_face(e_dom, &bounds, &tight);
    }
    Ok((FaceDescriptor { tight, level: 0 }, current))
}

/// Sum-constrained rounding of a projected query inside a face.
///
/// Each block between consecutive tight indices is decoded in the lattice of
/// integer vectors with the block's fixed sum (at scale `2^-level`): round
/// every coordinate, then repair the sum by moving the coordinates with the
/// largest rounding residuals. The primary candidate comes first, followed by
/// the single best residual swap of each block; candidates that miss the
/// boundary of `P_λ` are dropped.
pub fn round_in_face(
    projected: &[f64],
    face: &FaceDescriptor,
    lambda: &YoungDiagram,
    level: u32,
) -> Vec<ScaledPoint> {
    let m = lambda.dim();
    let scale = (level as f64).exp2();
    let rows = lambda.scaled_rows(level);
    let bounds = crate::model::prefix_sums(&rows);
    let target: Vec<f64> = projected.iter().map(|x| x * scale).collect();

    let mut primary = vec![0i64; m];
    let mut swaps: Vec<(usize, usize)> = Vec::new();
    let mut start = 0usize;
    let mut prev_bound = 0i64;
    for end in face.tight.iter().copied().chain(std::iter::once(m)) {
        let block_sum = bounds[end - 1] - prev_bound;
        let block = &target[start..end];
        let rounded = decode_fixed_sum(block, block_sum);
        primary[start..end].copy_from_slice(&rounded);
        if let Some((up, down)) = best_swap(block, &rounded) {
            swaps.push((start + up, start + down));
        }
        start = end;
        prev_bound = bounds[end - 1];
    }

    let mut candidates = vec![primary.clone()];
    for (up, down) in swaps {
        let mut alt = primary.clone();
        alt[up] += 1;
        alt[down] -= 1;
        candidates.push(alt);
    }
    let mut out: Vec<ScaledPoint> = Vec::with_capacity(candidates.len());
    for c in candidates {
        if classify_numerators(&c, &rows) == Membership::Boundary {
            let p = ScaledPoint::new(c, level);
            if !out.contains(&p) {
                out.push(p);
            }
        }
    }
    out
}

/// Nearest integer vector to `y` with coordinate sum `sum`.
pub(crate) fn decode_fixed_sum(y: &[f64], sum: i64) -> Vec<i64> {
    let mut r: Vec<i64> = y.iter().map(|v| v.round() as i64).collect();
    let deficit = sum - r.iter().sum::<i64>();
    if deficit != 0 {
        let mut order: Vec<usize> = (0..y.len()).collect();
        // Residual y - r: large positive means rounded down the most.
        let residual = |i: usize| y[i] - r[i] as f64;
        if deficit > 0 {
            order.sort_by(|&a, &b| residual(b).total_cmp(&residual(a)));
        } else {
            order.sort_by(|&a, &b| residual(a).total_cmp(&residual(b)));
        }
        let step = deficit.signum();
        for &i in order.iter().cycle().take(deficit.unsigned_abs() as usize) {
            r[i] += step;
        }
    }
    r
}

/// The exchange `+1` at one coordinate and `-1` at another that increases the
/// squared distance the least.
fn best_swap(y: &[f64], r: &[i64]) -> Option<(usize, usize)> {
    if y.len() < 2 {
        return None;
    }
    let residual: Vec<f64> = y.iter().zip(r).map(|(a, &b)| a - b as f64).collect();
    let up = (0..y.len()).max_by(|&a, &b| residual[a].total_cmp(&residual[b]))?;
    let down = (0..y.len())
        .filter(|&i| i != up)
        .min_by(|&a, &b| residual[a].total_cmp(&residual[b]))?;
    Some((up, down))
}
