//! Brute-force reference solvers used as test oracles. They share no code
//! with the library's solvers.
#![allow(dead_code)]

/// Solves the square system `M z = r` by Gaussian elimination with partial
/// pivoting; `None` when `M` is numerically singular.
pub fn solve_dense(mut m: Vec<Vec<f64>>, mut r: Vec<f64>) -> Option<Vec<f64>> {
    let n = r.len();
    let scale = m
        .iter()
        .flatten()
        .fold(0.0f64, |a, v| a.max(v.abs()))
        .max(1e-300);
    for col in 0..n {
        let piv = (col..n).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        if m[piv][col].abs() <= 1e-11 * scale {
            return None;
        }
        m.swap(col, piv);
        r.swap(col, piv);
        for row in (col + 1)..n {
            let f = m[row][col] / m[col][col];
            if f != 0.0 {
                for k in col..n {
                    m[row][k] -= f * m[col][k];
                }
                r[row] -= f * r[col];
            }
        }
    }
    let mut z = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = ((i + 1)..n).map(|k| m[i][k] * z[k]).sum();
        z[i] = (r[i] - s) / m[i][i];
    }
    Some(z)
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// A maximal linearly independent subset of `rows`, by Gram–Schmidt.
pub fn independent_rows(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut kept = Vec::new();
    for r in rows {
        let norm0 = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut w = r.clone();
        for q in &basis {
            let t: f64 = w.iter().zip(q).map(|(a, b)| a * b).sum();
            w.iter_mut().zip(q).for_each(|(a, b)| *a -= t * b);
        }
        let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 1e-9 * norm0.max(1e-300) && norm > 1e-300 {
            basis.push(w.iter().map(|v| v / norm).collect());
            kept.push(r.clone());
        }
    }
    kept
}

/// `max cᵀx` subject to `E x = 0`, `bᵀx ≤ 2`, `0 ≤ x ≤ u` (entries of `u` may
/// be infinite), by enumerating every basis of the standard form
/// `[E 0 0; bᵀ 1 0; I_U 0 I]` with slack `s` and upper-bound slacks `w`.
///
/// Dependent rows of `E` are dropped first. Assumes the feasible set is
/// bounded and contains `0`.
pub fn lp_by_enumeration(c: &[f64], e: &[Vec<f64>], b: &[f64], u: &[f64]) -> f64 {
    let e = &independent_rows(e);
    let n = c.len();
    let bounded: Vec<usize> = (0..n).filter(|&j| u[j].is_finite()).collect();
    let rows = e.len() + 1 + bounded.len();
    let cols = n + 1 + bounded.len();
    let mut a = vec![vec![0.0; cols]; rows];
    let mut rhs = vec![0.0; rows];
    for (i, er) in e.iter().enumerate() {
        a[i][..n].copy_from_slice(er);
    }
    a[e.len()][..n].copy_from_slice(b);
    a[e.len()][n] = 1.0;
    rhs[e.len()] = 2.0;
    for (k, &j) in bounded.iter().enumerate() {
        let r = e.len() + 1 + k;
        a[r][j] = 1.0;
        a[r][n + 1 + k] = 1.0;
        rhs[r] = u[j];
    }
    let mut best = f64::NEG_INFINITY;
    for basis in subsets(cols, rows) {
        let m: Vec<Vec<f64>> = (0..rows)
            .map(|i| basis.iter().map(|&j| a[i][j]).collect())
            .collect();
        let Some(z) = solve_dense(m, rhs.clone()) else {
            continue;
        };
        if z.iter().any(|v| *v < -1e-9) {
            continue;
        }
        let val: f64 = basis
            .iter()
            .zip(&z)
            .filter(|(j, _)| **j < n)
            .map(|(j, v)| c[*j] * v)
            .sum();
        best = best.max(val);
    }
    best
}

/// KKT solution of `min ½‖u − u₀‖² s.t. C u ≤ d, lo ≤ u ≤ hi`.
#[derive(Debug, Clone)]
pub struct QpSolution {
    pub u: Vec<f64>,
    pub value: f64,
    /// Multipliers of the `C u ≤ d` rows.
    pub multipliers: Vec<f64>,
}

/// Enumerates active sets among the linear rows and the box faces; the first
/// set whose equality-constrained projection is feasible with nonnegative
/// multipliers is the unique optimum of this strictly convex problem.
pub fn qp_by_active_sets(
    u0: &[f64],
    c: &[Vec<f64>],
    d: &[f64],
    lo: &[f64],
    hi: &[f64],
) -> QpSolution {
    let n = u0.len();
    // All inequality rows g·u ≤ h: the linear rows, then u_i ≤ hi_i, −u_i ≤ −lo_i.
    let mut g: Vec<Vec<f64>> = c.to_vec();
    let mut h: Vec<f64> = d.to_vec();
    for i in 0..n {
        let mut row = vec![0.0; n];
        row[i] = 1.0;
        g.push(row.clone());
        h.push(hi[i]);
        row[i] = -1.0;
        g.push(row);
        h.push(-lo[i]);
    }
    let total = g.len();
    let mut best: Option<QpSolution> = None;
    for k in 0..=n.min(total) {
        for set in subsets(total, k) {
            // ν solves (G Gᵀ) ν = G u₀ − h on the active rows; u = u₀ − Gᵀν.
            let gram: Vec<Vec<f64>> = set
                .iter()
                .map(|&i| set.iter().map(|&j| dot(&g[i], &g[j])).collect())
                .collect();
            let r: Vec<f64> = set.iter().map(|&i| dot(&g[i], u0) - h[i]).collect();
            let nu = if k == 0 {
                Vec::new()
            } else {
                match solve_dense(gram, r) {
                    Some(v) => v,
                    None => continue,
                }
            };
            if nu.iter().any(|v| *v < -1e-10) {
                continue;
            }
            let mut u = u0.to_vec();
            for (&i, v) in set.iter().zip(&nu) {
                for (uj, gj) in u.iter_mut().zip(&g[i]) {
                    *uj -= v * gj;
                }
            }
            if (0..total).any(|i| dot(&g[i], &u) > h[i] + 1e-10) {
                continue;
            }
            let value = 0.5
                * u.iter()
                    .zip(u0)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>();
            let mut multipliers = vec![0.0; c.len()];
            for (&i, v) in set.iter().zip(&nu) {
                if i < c.len() {
                    multipliers[i] = v.max(0.0);
                }
            }
            if best.as_ref().map_or(true, |s| value < s.value) {
                best = Some(QpSolution {
                    u,
                    value,
                    multipliers,
                });
            }
        }
    }
    best.expect("the box-constrained QP is feasible")
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
