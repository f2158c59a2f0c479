//! Exact linear solves over the rationals.

use super::scalar::{int, Rational};
use num::Zero;

/// Solves `rows · u = rhs` for a system with full column rank.
///
/// Returns `None` when the columns are dependent or the equations are
/// inconsistent. Extra rows act as consistency checks.
pub fn solve(rows: &[Vec<Rational>], rhs: &[Rational]) -> Option<Vec<Rational>> {
    let n = rows.first().map_or(0, |r| r.len());
    let mut a: Vec<Vec<Rational>> = rows
        .iter()
        .zip(rhs)
        .map(|(r, b)| {
            let mut v = r.clone();
            v.push(b.clone());
            v
        })
        .collect();
    let mut pivot_row = 0;
    for col in 0..n {
        let p = (pivot_row..a.len()).find(|&r| !a[r][col].is_zero())?;
        a.swap(pivot_row, p);
        let inv = a[pivot_row][col].recip();
        for v in a[pivot_row].iter_mut() {
            *v *= &inv;
        }
        for r in 0..a.len() {
            if r != pivot_row && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                for c in col..=n {
                    let d = &f * &a[pivot_row][c];
                    a[r][c] -= d;
                }
            }
        }
        pivot_row += 1;
    }
    if a[pivot_row..].iter().any(|r| !r[n].is_zero()) {
        return None;
    }
    Some((0..n).map(|k| a[k][n].clone()).collect())
}

/// Rank of a rational matrix.
pub fn rank(rows: &[Vec<Rational>]) -> usize {
    let mut a = rows.to_vec();
    let n = a.first().map_or(0, |r| r.len());
    let mut r0 = 0;
    for col in 0..n {
        let Some(p) = (r0..a.len()).find(|&r| !a[r][col].is_zero()) else {
            continue;
        };
        a.swap(r0, p);
        for r in r0 + 1..a.len() {
            if !a[r][col].is_zero() {
                let f = &a[r][col] / &a[r0][col];
                for c in col..n {
                    let d = &f * &a[r0][c];
                    a[r][c] -= d;
                }
            }
        }
        r0 += 1;
    }
    r0
}

/// Determinant by Gaussian elimination.
pub fn det(rows: &[Vec<Rational>]) -> Rational {
    let mut a = rows.to_vec();
    let n = a.len();
    let mut acc = int(1);
    for col in 0..n {
        let Some(p) = (col..n).find(|&r| !a[r][col].is_zero()) else {
            return int(0);
        };
        if p != col {
            a.swap(p, col);
            acc = -acc;
        }
        acc *= &a[col][col];
        for r in col + 1..n {
            if !a[r][col].is_zero() {
                let f = &a[r][col] / &a[col][col];
                for c in col..n {
                    let d = &f * &a[col][c];
                    a[r][c] -= d;
                }
            }
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::scalar::rat;

    #[test]
    fn overdetermined_consistent_system() {
        let rows = vec![
            vec![int(1), int(1)],
            vec![int(1), int(-1)],
            vec![int(2), int(0)],
        ];
        let rhs = vec![int(3), int(1), int(4)];
        assert_eq!(solve(&rows, &rhs), Some(vec![int(2), int(1)]));
        let bad = vec![int(3), int(1), int(5)];
        assert_eq!(solve(&rows, &bad), None);
    }

    #[test]
    fn rank_and_det() {
        let rows = vec![vec![int(1), int(2)], vec![int(2), int(4)]];
        assert_eq!(rank(&rows), 1);
        assert_eq!(det(&rows), int(0));
        assert_eq!(
            det(&[vec![int(0), rat(1, 2)], vec![int(3), int(1)]]),
            rat(-3, 2)
        );
    }
}
