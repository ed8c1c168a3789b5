//! Dense linear algebra over a coefficient field.

use super::scalar::Scalar;

pub type Dense<S> = Vec<Vec<S>>;

pub fn identity<S: Scalar>(n: usize) -> Dense<S> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { S::one() } else { S::zero() }).collect())
        .collect()
}

pub fn mat_mul<S: Scalar>(a: &Dense<S>, b: &Dense<S>) -> Dense<S> {
    let inner = b.len();
    let cols = b.first().map_or(0, |r| r.len());
    a.iter()
        .map(|row| {
            (0..cols)
                .map(|j| {
                    (0..inner).fold(S::zero(), |acc, k| acc + row[k].clone() * b[k][j].clone())
                })
                .collect()
        })
        .collect()
}

pub fn transpose<S: Scalar>(a: &Dense<S>) -> Dense<S> {
    let cols = a.first().map_or(0, |r| r.len());
    (0..cols).map(|j| a.iter().map(|r| r[j].clone()).collect()).collect()
}

fn pivot_row<S: Scalar>(m: &Dense<S>, col: usize, from: usize) -> Option<usize> {
    (from..m.len())
        .filter(|&r| !m[r][col].is_zero())
        .max_by(|&a, &b| {
            m[a][col]
                .abs()
                .to_f64()
                .partial_cmp(&m[b][col].abs().to_f64())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
}

/// Gauss–Jordan inverse; `None` when singular.
pub fn invert<S: Scalar>(a: &Dense<S>) -> Option<Dense<S>> {
    let n = a.len();
    if a.iter().any(|r| r.len() != n) {
        return None;
    }
    let mut m = a.clone();
    let mut inv = identity::<S>(n);
    for col in 0..n {
        let p = pivot_row(&m, col, col)?;
        m.swap(col, p);
        inv.swap(col, p);
        let piv = m[col][col].clone();
        for j in 0..n {
            m[col][j] = m[col][j].clone() / piv.clone();
            inv[col][j] = inv[col][j].clone() / piv.clone();
        }
        for r in 0..n {
            if r == col || m[r][col].is_zero() {
                continue;
            }
            let f = m[r][col].clone();
            for j in 0..n {
                m[r][j] = m[r][j].clone() - f.clone() * m[col][j].clone();
                inv[r][j] = inv[r][j].clone() - f.clone() * inv[col][j].clone();
            }
        }
    }
    Some(inv)
}

/// Row-echelon rank with exact zero tests.
pub fn rank<S: Scalar>(a: &Dense<S>) -> usize {
    let mut m = a.clone();
    let rows = m.len();
    let cols = m.first().map_or(0, |r| r.len());
    let mut r = 0;
    for col in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = pivot_row(&m, col, r) else {
            continue;
        };
        m.swap(r, p);
        for k in r + 1..rows {
            if m[k][col].is_zero() {
                continue;
            }
            let f = m[k][col].clone() / m[r][col].clone();
            for j in col..cols {
                m[k][j] = m[k][j].clone() - f.clone() * m[r][j].clone();
            }
        }
        r += 1;
    }
    r
}
