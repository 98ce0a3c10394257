//! Maximum-weight bipartite matching with a canonical tie-break.
//!
//! Rows are robots, columns tasks. Each row gets a private zero-weight dummy
//! column so leaving it unmatched costs nothing; masked edges get a finite
//! sentinel cost that no optimum can afford. The shortest-augmenting-path
//! Kuhn-Munkres pass yields optimal dual potentials, and every optimal
//! matching lives in the subgraph of tight edges. The canonical answer is then
//! picked greedily, row by row, as the lexicographically smallest column
//! vector (dummy = unmatched sorts last) that still extends to an optimum.

use super::{Matching, WeightedBigraph};

/// Relative slack under which a reduced cost counts as zero.
const TIGHT_TOL: f64 = 1e-9;

/// Kuhn-Munkres on an `n × m` cost matrix with `n ≤ m`, minimizing.
/// Returns `(row → col, u, v)` with `u[i] + v[j] ≤ cost[i][j]`.
fn assign(cost: &[Vec<f64>], n: usize, m: usize) -> (Vec<usize>, Vec<f64>, Vec<f64>) {
    debug_assert!(n <= m);
    // 1-indexed; column 0 is the virtual root of each augmenting search.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut row_to_col = vec![usize::MAX; n];
    for j in 1..=m {
        if p[j] != 0 {
            row_to_col[p[j] - 1] = j - 1;
        }
    }
    (row_to_col, u[1..].to_vec(), v[1..].to_vec())
}

/// Bipartite matching in the tight subgraph, with some rows and columns pinned
/// or removed. Used to test whether a partial assignment extends to an optimum.
struct TightGraph {
    /// Ascending column lists per row.
    adj: Vec<Vec<usize>>,
    n_cols: usize,
}

impl TightGraph {
    fn augment(
        &self,
        row: usize,
        col_owner: &mut [usize],
        seen: &mut [bool],
        row_alive: &[bool],
        col_alive: &[bool],
    ) -> bool {
        for &c in &self.adj[row] {
            if !col_alive[c] || seen[c] {
                continue;
            }
            seen[c] = true;
            let owner = col_owner[c];
            if owner == usize::MAX
                || self.augment(owner, col_owner, seen, row_alive, col_alive)
            {
                col_owner[c] = row;
                return true;
            }
        }
        false
    }

    /// Maximum matching size restricted to live rows and columns, plus the
    /// set of matched columns.
    fn max_matching(&self, row_alive: &[bool], col_alive: &[bool]) -> (usize, Vec<usize>) {
        let mut col_owner = vec![usize::MAX; self.n_cols];
        let mut size = 0;
        for r in 0..self.adj.len() {
            if !row_alive[r] {
                continue;
            }
            let mut seen = vec![false; self.n_cols];
            if self.augment(r, &mut col_owner, &mut seen, row_alive, col_alive) {
                size += 1;
            }
        }
        (size, col_owner)
    }

    /// Whether live rows can all be matched and every live must-cover column
    /// can be matched. Two such matchings imply one doing both at once
    /// (Mendelsohn-Dulmage).
    fn extends(&self, row_alive: &[bool], col_alive: &[bool], must_cover: &[bool]) -> bool {
        let live_rows = row_alive.iter().filter(|&&a| a).count();
        let (size, _) = self.max_matching(row_alive, col_alive);
        if size < live_rows {
            return false;
        }
        let needed: Vec<usize> = (0..self.n_cols)
            .filter(|&c| col_alive[c] && must_cover[c])
            .collect();
        if needed.is_empty() {
            return true;
        }
        // Column-side check: match the must-cover columns into live rows.
        let mut row_owner = vec![usize::MAX; self.adj.len()];
        let mut col_adj = vec![Vec::new(); self.n_cols];
        for (r, cols) in self.adj.iter().enumerate() {
            if row_alive[r] {
                for &c in cols {
                    col_adj[c].push(r);
                }
            }
        }
        fn aug(
            c: usize,
            col_adj: &[Vec<usize>],
            row_owner: &mut [usize],
            seen: &mut [bool],
        ) -> bool {
            for &r in &col_adj[c] {
                if seen[r] {
                    continue;
                }
                seen[r] = true;
                if row_owner[r] == usize::MAX || aug(row_owner[r], col_adj, row_owner, seen) {
                    row_owner[r] = c;
                    return true;
                }
            }
            false
        }
        needed.iter().all(|&c| {
            let mut seen = vec![false; self.adj.len()];
            aug(c, &col_adj, &mut row_owner, &mut seen)
        })
    }
}

/// Maximum-weight matching over the unmasked edges of `bigraph`.
///
/// Vertices may stay unmatched. Among optimal matchings the one whose
/// row-by-row column vector is lexicographically smallest is returned
/// (unmatched sorts after every task), and zero-weight pairs are dropped
/// since they contribute nothing.
pub fn hungarian_max(bigraph: &WeightedBigraph) -> Matching {
    let n = bigraph.n_rows();
    let m = bigraph.n_cols();
    if n == 0 || m == 0 || !bigraph.mask.iter().any(|&b| b) {
        return Matching::default();
    }
    let max_w = bigraph
        .unmasked()
        .map(|(_, _, w)| w)
        .fold(0.0f64, f64::max);
    let sentinel = (n as f64 + 1.0) * (max_w + 1.0);
    let width = m + n;
    let cost: Vec<Vec<f64>> = (0..n)
        .map(|r| {
            (0..width)
                .map(|c| {
                    if c < m {
                        if bigraph.is_edge(r, c) {
                            -bigraph.weight(r, c)
                        } else {
                            sentinel
                        }
                    } else if c - m == r {
                        0.0
                    } else {
                        sentinel
                    }
                })
                .collect()
        })
        .collect();
    let (first, u, v) = assign(&cost, n, width);

    let tol = TIGHT_TOL * (1.0 + max_w);
    let adj: Vec<Vec<usize>> = (0..n)
        .map(|r| {
            let mut cols: Vec<usize> = (0..m)
                .filter(|&c| bigraph.is_edge(r, c) && cost[r][c] - u[r] - v[c] <= tol)
                .collect();
            if cost[r][m + r] - u[r] - v[m + r] <= tol {
                cols.push(m + r);
            }
            // The solver's own assignment is tight by construction; keep it
            // even if rounding pushed its slack over the tolerance.
            if !cols.contains(&first[r]) {
                cols.push(first[r]);
                cols.sort_unstable();
            }
            cols
        })
        .collect();
    let must_cover: Vec<bool> = v.iter().map(|&x| x < -tol).collect();
    let graph = TightGraph {
        adj,
        n_cols: width,
    };

    let mut row_alive = vec![true; n];
    let mut col_alive = vec![true; width];
    let mut chosen = vec![usize::MAX; n];
    for r in 0..n {
        row_alive[r] = false;
        let mut pick = None;
        for &c in &graph.adj[r] {
            if !col_alive[c] {
                continue;
            }
            col_alive[c] = false;
            let fits = graph.extends(&row_alive, &col_alive, &must_cover);
            col_alive[c] = true;
            if fits {
                pick = Some(c);
                break;
            }
        }
        let c = pick.unwrap_or(first[r]);
        chosen[r] = c;
        col_alive[c] = false;
    }

    let mut pairs = Vec::new();
    let mut objective = 0.0;
    for (r, &c) in chosen.iter().enumerate() {
        if c < m {
            let w = bigraph.weight(r, c);
            if w > 0.0 {
                pairs.push((r, c));
                objective += w;
            }
        }
    }
    Matching { pairs, objective }
}
