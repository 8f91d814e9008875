//! Brute-force oracles shared by the integration tests. Everything here is
//! deliberately naive — the point is to check the fast implementations
//! against code with no shared logic.

use stacksat::lp::{LpProblem, LpStatus};

/// Solves `B x = b` by Gaussian elimination with partial pivoting.
/// Returns `None` when `B` is singular (pivot below 1e-10).
fn solve_square(b_cols: &[Vec<f64>], rhs: &[f64]) -> Option<Vec<f64>> {
    let m = rhs.len();
    // Augmented row-major matrix [B | rhs].
    let mut a: Vec<Vec<f64>> = (0..m)
        .map(|r| {
            let mut row: Vec<f64> = b_cols.iter().map(|col| col[r]).collect();
            row.push(rhs[r]);
            row
        })
        .collect();
    for k in 0..m {
        let piv = (k..m)
            .max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))
            .unwrap();
        if a[piv][k].abs() < 1e-10 {
            return None;
        }
        a.swap(k, piv);
        for i in 0..m {
            if i != k {
                let factor = a[i][k] / a[k][k];
                for j in k..=m {
                    a[i][j] -= factor * a[k][j];
                }
            }
        }
    }
    Some((0..m).map(|k| a[k][m] / a[k][k]).collect())
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..k).collect();
    if k > n {
        return out;
    }
    loop {
        out.push(cur.clone());
        // Advance the rightmost index that can still move.
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if cur[i] != i + n - k {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        cur[i] += 1;
        for j in i + 1..k {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

/// Exhaustive LP solve: enumerate every basis of the slack-extended system,
/// keep the feasible ones, and take the best objective. Unboundedness is
/// detected via improving rays at feasible bases. Only practical for tiny
/// problems; that is the point.
pub fn solve_lp_by_enumeration(p: &LpProblem) -> (LpStatus, Option<f64>) {
    let n = p.objective.len();
    let m_le = p.ineq_matrix.len();
    let m_eq = p.eq_matrix.len();
    let m = m_le + m_eq;
    let n_total = n + m_le;

    // Columns of [G I; E 0] and the stacked rhs.
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(n_total);
    for j in 0..n {
        let mut col = Vec::with_capacity(m);
        for row in &p.ineq_matrix {
            col.push(row[j]);
        }
        for row in &p.eq_matrix {
            col.push(row[j]);
        }
        cols.push(col);
    }
    for i in 0..m_le {
        let mut col = vec![0.0; m];
        col[i] = 1.0;
        cols.push(col);
    }
    let rhs: Vec<f64> = p.ineq_rhs.iter().chain(p.eq_rhs.iter()).copied().collect();
    let cost = |j: usize| -> f64 {
        if j < n {
            p.objective[j]
        } else {
            0.0
        }
    };

    let mut best: Option<f64> = None;
    for basis in combinations(n_total, m) {
        let b_cols: Vec<Vec<f64>> = basis.iter().map(|&j| cols[j].clone()).collect();
        let Some(x_b) = solve_square(&b_cols, &rhs) else {
            continue;
        };
        if x_b.iter().any(|&v| v < -1e-9) {
            continue;
        }
        let obj: f64 = basis.iter().zip(&x_b).map(|(&j, &v)| cost(j) * v).sum();
        if best.is_none_or(|b| obj > b) {
            best = Some(obj);
        }

        // Improving ray check: nonbasic j with positive reduced cost whose
        // basic direction stays nonnegative proves unboundedness.
        let bt_cols: Vec<Vec<f64>> = (0..m)
            .map(|r| basis.iter().map(|&j| cols[j][r]).collect())
            .collect();
        let c_b: Vec<f64> = basis.iter().map(|&j| cost(j)).collect();
        let Some(y) = solve_square(&bt_cols, &c_b) else {
            continue;
        };
        for j in 0..n_total {
            if basis.contains(&j) {
                continue;
            }
            let rc = cost(j) - y.iter().zip(&cols[j]).map(|(a, b)| a * b).sum::<f64>();
            if rc > 1e-7 {
                if let Some(d_b) = solve_square(&b_cols, &cols[j]) {
                    if d_b.iter().all(|&v| v <= 1e-9) {
                        return (LpStatus::Unbounded, None);
                    }
                }
            }
        }
    }
    match best {
        Some(obj) => (LpStatus::Optimal, Some(obj)),
        None => (LpStatus::Infeasible, None),
    }
}
