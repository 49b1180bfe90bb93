//! Minimum-cost perfect matching on a dense square cost matrix.
//!
//! Shortest augmenting path with row/column potentials (the classic
//! O(n^3) Hungarian formulation). Rows are inserted one at a time; each
//! insertion runs a Dijkstra-like search over columns using reduced costs.

/// Returns `assign` with `assign[row] = col` minimizing `Σ cost(row, col)`.
pub fn solve(n: usize, cost: impl Fn(usize, usize) -> f64) -> Vec<usize> {
    let mut flat = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            flat.push(cost(i, j));
        }
    }
    solve_dense(n, &flat)
}

/// Same as [`solve`] for a row-major `n*n` cost array.
pub fn solve_dense(n: usize, cost: &[f64]) -> Vec<usize> {
    assert_eq!(cost.len(), n * n, "cost matrix must be n*n");
    if n == 0 {
        return Vec::new();
    }
    // 1-based columns internally; column 0 is the virtual source.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut row_of = vec![usize::MAX; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut minv = vec![0.0; n + 1];
    let mut used = vec![false; n + 1];

    for i in 0..n {
        row_of[0] = i;
        let mut j0 = 0usize;
        minv.iter_mut().for_each(|m| *m = f64::INFINITY);
        used.iter_mut().for_each(|b| *b = false);
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let row = &cost[i0 * n..(i0 + 1) * n];
            let ui0 = u[i0 + 1];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = row[j - 1] - ui0 - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of[j] + 1] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == usize::MAX {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut assign = vec![0usize; n];
    for j in 1..=n {
        assign[row_of[j]] = j - 1;
    }
    assign
}
