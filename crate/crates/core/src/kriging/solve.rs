/// Solves `a x = b` for a dense row-major `n x n` system by Gaussian
/// elimination with partial pivoting.
///
/// Returns `None` when a pivot falls below `1e-12` times the largest entry
/// magnitude of `a`.
pub fn solve_dense(mut a: Vec<f64>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    assert_eq!(a.len(), n * n, "system shape mismatch");
    let scale = a.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return None;
    }
    let tol = 1e-12 * scale;
    for col in 0..n {
        let (pivot_row, pivot_abs) =
            (col..n)
                .map(|r| (r, a[r * n + col].abs()))
                .fold(
                    (col, -1.0),
                    |best, cur| if cur.1 > best.1 { cur } else { best },
                );
        if pivot_abs < tol {
            return None;
        }
        if pivot_row != col {
            for j in 0..n {
                a.swap(col * n + j, pivot_row * n + j);
            }
            b.swap(col, pivot_row);
        }
        let pivot = a[col * n + col];
        for r in col + 1..n {
            let factor = a[r * n + col] / pivot;
            if factor == 0.0 {
                continue;
            }
            for j in col..n {
                a[r * n + j] -= factor * a[col * n + j];
            }
            b[r] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let mut acc = b[r];
        for j in r + 1..n {
            acc -= a[r * n + j] * x[j];
        }
        x[r] = acc / a[r * n + r];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_with_pivoting() {
        // zero leading entry forces a row swap
        let a = vec![0.0, 1.0, 1.0, 0.0];
        assert_eq!(solve_dense(a, vec![3.0, 5.0]).unwrap(), vec![5.0, 3.0]);
        let a = vec![2.0, 1.0, 1.0, 1.0, 3.0, 2.0, 1.0, 0.0, 0.0];
        let x = solve_dense(a, vec![4.0, 5.0, 6.0]).unwrap();
        assert!(
            (x[0] - 6.0).abs() < 1e-12
                && (x[1] - 15.0).abs() < 1e-12
                && (x[2] + 23.0).abs() < 1e-12
        );
    }

    #[test]
    fn singular_is_none() {
        assert!(solve_dense(vec![1.0, 2.0, 2.0, 4.0], vec![1.0, 2.0]).is_none());
        assert!(solve_dense(vec![0.0; 4], vec![1.0, 2.0]).is_none());
    }
}
