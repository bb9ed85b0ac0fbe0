//! Small dense linear algebra used by the stationary-distribution and
//! Poisson-system solves and the M-matrix certificate. Systems here are
//! `m x m` with `m` in the single digits, so a plain partial-pivot LU is
//! both sufficient and dependency-free.

/// Solves `a * x = b` for square row-major `a` (`n x n`) by Gaussian
/// elimination with partial pivoting. Returns `None` when a pivot is
/// exactly zero after row exchange (singular to working precision).
pub(crate) fn solve_dense(mut a: Vec<f64>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    debug_assert_eq!(a.len(), n * n);
    for col in 0..n {
        // Partial pivot: largest magnitude on or below the diagonal.
        let pivot_row = (col..n)
            .max_by(|&r, &s| {
                a[r * n + col]
                    .abs()
                    .partial_cmp(&a[s * n + col].abs())
                    .expect("non-finite pivot candidate")
            })
            .expect("non-empty pivot range");
        if a[pivot_row * n + col] == 0.0 {
            return None;
        }
        if pivot_row != col {
            for k in 0..n {
                a.swap(col * n + k, pivot_row * n + k);
            }
            b.swap(col, pivot_row);
        }
        let pivot = a[col * n + col];
        for row in col + 1..n {
            let factor = a[row * n + col] / pivot;
            if factor == 0.0 {
                continue;
            }
            a[row * n + col] = 0.0;
            for k in col + 1..n {
                a[row * n + k] -= factor * a[col * n + k];
            }
            b[row] -= factor * b[col];
        }
    }
    // Back substitution.
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut sum = b[row];
        for k in row + 1..n {
            sum -= a[row * n + k] * x[k];
        }
        x[row] = sum / a[row * n + row];
    }
    Some(x)
}

/// Returns `true` iff every leading principal minor of the square row-major
/// matrix `a` is strictly positive.
///
/// Uses unpivoted elimination: when it runs to completion the k-th leading
/// minor equals the product of the first k pivots, so all minors are
/// positive iff every pivot encountered is positive. A non-positive pivot at
/// step k certifies a non-positive k-th minor, and the scan stops there.
pub(crate) fn leading_minors_positive(mut a: Vec<f64>, n: usize) -> bool {
    debug_assert_eq!(a.len(), n * n);
    for col in 0..n {
        let pivot = a[col * n + col];
        if !(pivot > 0.0) {
            return false;
        }
        for row in col + 1..n {
            let factor = a[row * n + col] / pivot;
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                a[row * n + k] -= factor * a[col * n + k];
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_identity() {
        let a = vec![1.0, 0.0, 0.0, 1.0];
        let x = solve_dense(a, vec![3.0, -4.0]).unwrap();
        assert_eq!(x, vec![3.0, -4.0]);
    }

    #[test]
    fn solves_system_requiring_pivoting() {
        // First pivot is zero; partial pivoting must swap rows.
        let a = vec![0.0, 2.0, 1.0, 1.0];
        let x = solve_dense(a, vec![2.0, 2.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn solves_3x3_against_hand_computed_inverse() {
        // a = [[2,1,0],[1,3,1],[0,1,2]], b = (1, 2, 3); by substitution:
        // y = 1-2x, z = 1+x, row 2 gives -4x+4 = 2, so x = (0.5, 0, 1.5).
        let a = vec![2.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 2.0];
        let x = solve_dense(a, vec![1.0, 2.0, 3.0]).unwrap();
        for (got, want) in x.iter().zip([0.5, 0.0, 1.5]) {
            assert!((got - want).abs() < 1e-14, "got {got}, want {want}");
        }
    }

    #[test]
    fn singular_matrix_is_rejected() {
        let a = vec![1.0, 2.0, 2.0, 4.0];
        assert!(solve_dense(a, vec![1.0, 2.0]).is_none());
    }

    #[test]
    fn minors_of_positive_definite_matrix() {
        // [[2,-1],[-1,2]]: minors 2 and 3.
        assert!(leading_minors_positive(vec![2.0, -1.0, -1.0, 2.0], 2));
    }

    #[test]
    fn minors_reject_indefinite_matrix() {
        // [[1,-2],[-2,1]]: second minor is -3.
        assert!(!leading_minors_positive(vec![1.0, -2.0, -2.0, 1.0], 2));
    }

    #[test]
    fn minors_reject_zero_pivot() {
        // Singular: second minor is exactly 0.
        assert!(!leading_minors_positive(vec![1.0, 1.0, 1.0, 1.0], 2));
    }

    #[test]
    fn minors_3x3_mixed() {
        // [[1,0,0],[0,1,0],[0,0,-1]]: third minor negative.
        let a = vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, -1.0];
        assert!(!leading_minors_positive(a, 3));
    }
}
