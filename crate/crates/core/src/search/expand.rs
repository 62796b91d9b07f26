use std::collections::{HashSet, VecDeque};

use crate::error::{Error, Result};
use crate::model::ScaledPoint;
use crate::scattering::Scattering;

/// Breadth-first walk from `c` over centers of `s` joined by a lattice step
/// `±2^-K (e_a - e_b)` or a reflection swapping two coordinates.
///
/// Returns the first `needed` centers reached, in walk order, excluding `c`.
/// `budget` caps the number of centers expanded; running out of it (or out of
/// reachable centers) before `needed` are found is an error.
pub fn expand_neighbors(
    c: &ScaledPoint,
    s: &Scattering,
    needed: usize,
    budget: usize,
) -> Result<Vec<ScaledPoint>> {
    if c.dim() != s.dim() {
        return Err(Error::DimensionMismatch {
            expected: s.dim(),
            found: c.dim(),
        });
    }
    let mut found = Vec::with_capacity(needed);
    if needed == 0 {
        return Ok(found);
    }
    let level = s.levels_built().max(c.level());
    let m = c.dim();
    let mut seen: HashSet<Vec<i64>> = HashSet::new();
    let mut queue: VecDeque<Vec<i64>> = VecDeque::new();
    let start = c.numerators_at(level);
    seen.insert(start.clone());
    queue.push_back(start);
    let mut expanded = 0usize;
    while let Some(x) = queue.pop_front() {
        if expanded == budget {
            break;
        }
        expanded += 1;
        for a in 0..m {
            for b in 0..m {
                if a == b {
                    continue;
                }
                let mut step = x.clone();
                step[a] += 1;
                step[b] -= 1;
                let mut swap = x.clone();
                swap.swap(a, b);
                for y in [step, swap] {
                    if seen.contains(&y) {
                        continue;
                    }
                    let p = ScaledPoint::new(y.clone(), level);
                    seen.insert(y.clone());
                    if s.index_of(&p).is_some() {
                        found.push(p);
                        if found.len() == needed {
                            return Ok(found);
                        }
                        queue.push_back(y);
                    }
                }
            }
        }
    }
    Err(Error::BudgetExhausted {
        budget,
        found: found.len(),
        needed,
    })
}
