//! Enumeration of the dominant lattice points on the boundary of `P_λ`.
//!
//! A semi-standard tableau of shape `λ` whose word is non-decreasing is
//! determined by its entry counts, so the search runs over count vectors
//! `c_1 ≥ c_2 ≥ … ≥ c_{n+1}` (Rule 1) in descending lexicographic order. A
//! prefix is only descended into when it can still be completed to a vector
//! majorized by `λ` with at least one tight partial sum (Rule 2); every visited
//! prefix therefore leads to at least one emitted point.
//!
//! Level `k ≥ 1` runs the same search on the diagram stretched horizontally by
//! `2^k` and keeps the points with an odd coordinate: the all-even ones are
//! exactly the points of earlier levels.

use crate::error::{Error, Result};
use crate::model::{prefix_sums, ScaledPoint, YoungDiagram};

/// Entry counts of a tableau word; count `i` is the number of boxes holding
/// `i + 1`, which is also the `i`-th coordinate of the weight it represents.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TableauWord {
    pub counts: Vec<i64>,
}

impl TableauWord {
    /// Rule 1: the counts are weakly decreasing.
    pub fn satisfies_dominance(&self) -> bool {
        self.counts.windows(2).all(|w| w[0] >= w[1])
    }

    pub fn total(&self) -> i64 {
        self.counts.iter().sum()
    }
}

/// The highest-weight filling: row `i` filled with `i`.
pub fn initial_tableau(lambda: &YoungDiagram) -> TableauWord {
    TableauWord {
        counts: lambda.rows().to_vec(),
    }
}

/// Rule 2 on a dominant word: some partial-sum inequality
/// `c_1 + … + c_j ≤ 2^level (λ_1 + … + λ_j)`, `1 ≤ j ≤ n`, is an equality.
pub fn boundary_rule(word: &TableauWord, lambda: &YoungDiagram, level: u32) -> bool {
    let rows = lambda.scaled_rows(level);
    let (mut a, mut b) = (0i64, 0i64);
    word.counts[..word.counts.len() - 1]
        .iter()
        .zip(&rows)
        .any(|(c, l)| {
            a += c;
            b += l;
            a == b
        })
}

/// Dominant boundary points introduced at one subdivision level.
#[derive(Debug, Clone)]
pub struct LevelSet {
    pub lambda: YoungDiagram,
    pub level: u32,
    /// Descending lexicographic order, each point dominant and on `∂P_λ`.
    pub points: Vec<ScaledPoint>,
    /// Number of prefixes (partial words) the search descended into.
    pub visited: usize,
}

/// Dominant points of `∂P_λ ∩ 𝔛`.
pub fn enumerate_dominant_boundary(lambda: &YoungDiagram) -> LevelSet {
    let (words, visited) = dominant_boundary_words(lambda.rows());
    LevelSet {
        lambda: lambda.clone(),
        level: 0,
        points: words.into_iter().map(ScaledPoint::from_integers).collect(),
        visited,
    }
}

/// Dominant points of `∂P_λ ∩ 𝔛/2^k` that do not already lie in `𝔛/2^{k-1}`.
pub fn enumerate_level(lambda: &YoungDiagram, level: u32) -> Result<LevelSet> {
    if level == 0 {
        return Err(Error::LevelZero);
    }
    let (words, visited) = dominant_boundary_words(&lambda.scaled_rows(level));
    let points = words
        .into_iter()
        .filter(|w| w.iter().any(|x| x % 2 != 0))
        .map(|w| ScaledPoint::new(w, level))
        .collect();
    Ok(LevelSet {
        lambda: lambda.clone(),
        level,
        points,
        visited,
    })
}

/// All dominant integer vectors majorized by `rows` with a tight partial sum,
/// in descending lexicographic order, plus the number of visited prefixes.
pub(crate) fn dominant_boundary_words(rows: &[i64]) -> (Vec<Vec<i64>>, usize) {
    let mut search = WordSearch {
        bounds: prefix_sums(rows),
        prefix: Vec::with_capacity(rows.len()),
        out: Vec::new(),
        visited: 0,
    };
    search.descend(0, false);
    (search.out, search.visited)
}

struct WordSearch {
    /// `Λ_1, …, Λ_{n+1}`.
    bounds: Vec<i64>,
    prefix: Vec<i64>,
    out: Vec<Vec<i64>>,
    visited: usize,
}

impl WordSearch {
    fn dim(&self) -> usize {
        self.bounds.len()
    }

    fn total(&self) -> i64 {
        self.bounds[self.dim() - 1]
    }

    fn descend(&mut self, sum: i64, tight: bool) {
        let t = self.prefix.len();
        let m = self.dim();
        if t == m {
            self.out.push(self.prefix.clone());
            return;
        }
        let cap = self.prefix.last().copied().unwrap_or(i64::MAX);
        let hi = cap.min(self.bounds[t] - sum);
        // No completion can place less than the balanced share of what remains.
        let lo = (0..m - t)
            .map(|r| {
                let j = t + r + 1;
                ceil_div(self.bounds[j - 1] - sum, (r + 1) as i64)
            })
            .min()
            .unwrap_or(0)
            .max(0);
        for v in (lo..=hi).rev() {
            let next = sum + v;
            let now_tight = tight || (t + 1 < m && next == self.bounds[t]);
            if t + 1 == m && next != self.total() {
                continue;
            }
            self.prefix.push(v);
            if self.extendable(next, now_tight) {
                self.visited += 1;
                self.descend(next, now_tight);
            }
            self.prefix.pop();
        }
    }

    /// Whether the current prefix (sum `sum`) completes to a dominant vector
    /// majorized by the rows with some tight partial sum among `1..=n`.
    fn extendable(&self, sum: i64, tight: bool) -> bool {
        let t = self.prefix.len();
        let m = self.dim();
        if t == m {
            return tight && sum == self.total();
        }
        if tight {
            return self.block_completes(sum, m);
        }
        (t.max(1)..m).any(|j| self.block_completes(sum, j))
    }

    /// Whether the prefix extends to length `j` with partial sum exactly `Λ_j`
    /// while respecting every earlier bound. The balanced completion has the
    /// smallest partial sums of all completions, so it decides feasibility.
    fn block_completes(&self, sum: i64, j: usize) -> bool {
        let t = self.prefix.len();
        let remaining = self.bounds[j - 1] - sum;
        let slots = (j - t) as i64;
        if slots == 0 {
            return remaining == 0;
        }
        if remaining < 0 {
            return false;
        }
        let cap = self.prefix.last().copied().unwrap_or(i64::MAX);
        let (q, rem) = (remaining / slots, remaining % slots);
        if q + i64::from(rem > 0) > cap {
            return false;
        }
        (1..slots).all(|s| sum + s * q + s.min(rem) <= self.bounds[t + s as usize - 1])
    }
}

fn ceil_div(a: i64, b: i64) -> i64 {
    debug_assert!(b > 0);
    a.div_euclid(b) + i64::from(a.rem_euclid(b) != 0)
}
