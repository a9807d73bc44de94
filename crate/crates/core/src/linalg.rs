//! Small dense linear algebra used by the geometry kernels: 4x4 inversion
//! with partial pivoting and a 1-norm condition estimate. The matrices here
//! are weighted normal matrices GᵀWG, always 4x4.

use crate::Real;

/// Inverts a 4x4 matrix by Gauss-Jordan elimination with partial pivoting.
/// Returns `None` when a pivot collapses below `tiny` relative to the
/// matrix scale.
pub fn invert4<R: Real>(m: &[[R; 4]; 4]) -> Option<[[R; 4]; 4]> {
    let mut a = *m;
    let mut inv = identity4::<R>();
    let scale = max_abs(m).max(R::one());
    let tiny = R::epsilon() * R::of(64.0) * scale;

    for col in 0..4 {
        let mut pivot_row = col;
        for row in (col + 1)..4 {
            if a[row][col].abs() > a[pivot_row][col].abs() {
                pivot_row = row;
            }
        }
        if a[pivot_row][col].abs() <= tiny {
            return None;
        }
        a.swap(col, pivot_row);
        inv.swap(col, pivot_row);

        let pivot = a[col][col];
        for j in 0..4 {
            a[col][j] = a[col][j] / pivot;
            inv[col][j] = inv[col][j] / pivot;
        }
        for row in 0..4 {
            if row == col {
                continue;
            }
            let factor = a[row][col];
            if factor == R::zero() {
                continue;
            }
            for j in 0..4 {
                a[row][j] = a[row][j] - factor * a[col][j];
                inv[row][j] = inv[row][j] - factor * inv[col][j];
            }
        }
    }
    Some(inv)
}

/// 1-norm condition estimate: ‖A‖₁·‖A⁻¹‖₁.
pub fn condition4<R: Real>(m: &[[R; 4]; 4], inv: &[[R; 4]; 4]) -> R {
    one_norm(m) * one_norm(inv)
}

pub fn identity4<R: Real>() -> [[R; 4]; 4] {
    let mut out = [[R::zero(); 4]; 4];
    for (i, row) in out.iter_mut().enumerate() {
        row[i] = R::one();
    }
    out
}

fn one_norm<R: Real>(m: &[[R; 4]; 4]) -> R {
    let mut worst = R::zero();
    for col in 0..4 {
        let mut sum = R::zero();
        for row in m {
            sum = sum + row[col].abs();
        }
        worst = worst.max(sum);
    }
    worst
}

fn max_abs<R: Real>(m: &[[R; 4]; 4]) -> R {
    let mut worst = R::zero();
    for row in m {
        for v in row {
            worst = worst.max(v.abs());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverts_a_known_matrix() {
        let m: [[f64; 4]; 4] = [
            [4.0, 1.0, 0.0, 0.5],
            [1.0, 3.0, 0.2, 0.0],
            [0.0, 0.2, 2.0, 0.1],
            [0.5, 0.0, 0.1, 1.0],
        ];
        let inv = invert4(&m).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let mut acc = 0.0;
                for k in 0..4 {
                    acc += m[i][k] * inv[k][j];
                }
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((acc - expect).abs() < 1e-12, "({i},{j}) = {acc}");
            }
        }
    }

    #[test]
    fn rejects_singular_matrix() {
        let m: [[f64; 4]; 4] = [
            [1.0, 2.0, 3.0, 4.0],
            [2.0, 4.0, 6.0, 8.0],
            [0.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 1.0, 0.0],
        ];
        assert!(invert4(&m).is_none());
    }

    #[test]
    fn condition_of_identity_is_one() {
        let id = identity4::<f64>();
        assert_eq!(condition4(&id, &id), 1.0);
    }
}
