//! Small dense symmetric linear algebra for the projection solver.
//!
//! Systems here are k×k normal equations where k is a feature count — a
//! handful, not thousands — so simple textbook routines are the right tool:
//! Cholesky for the positive-definite path, cyclic Jacobi rotations for the
//! eigendecomposition behind the condition diagnostic and the minimal-norm
//! fallback. Everything is deterministic: no pivot choices depend on runtime
//! state.

/// Cholesky factor L with A = L·Lᵀ for symmetric A, or `None` when a pivot
/// is not strictly positive (A not numerically positive definite).
pub fn cholesky(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[i][j];
            for k in 0..j {
                sum -= l[i][k] * l[j][k];
            }
            if i == j {
                if sum <= 0.0 || !sum.is_finite() {
                    return None;
                }
                l[i][j] = sum.sqrt();
            } else {
                l[i][j] = sum / l[j][j];
            }
        }
    }
    Some(l)
}

/// Solve L·Lᵀ·x = b given the Cholesky factor L.
pub fn solve_cholesky(l: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = l.len();
    // Forward substitution: L·z = b.
    let mut z = vec![0.0; n];
    for i in 0..n {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l[i][k] * z[k];
        }
        z[i] = sum / l[i][i];
    }
    // Back substitution: Lᵀ·x = z.
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut sum = z[i];
        for k in i + 1..n {
            sum -= l[k][i] * x[k];
        }
        x[i] = sum / l[i][i];
    }
    x
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues and an orthonormal matrix whose columns are the
/// matching eigenvectors. Sweeps stop when every off-diagonal entry is below
/// 1e-14 relative to the Frobenius scale (or after 64 sweeps, ample for the
/// matrix sizes used here).
pub fn jacobi_eigen(a: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut v = vec![vec![0.0; n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let scale: f64 = m
        .iter()
        .flat_map(|row| row.iter())
        .map(|x| x * x)
        .sum::<f64>()
        .sqrt()
        .max(f64::MIN_POSITIVE);
    for _sweep in 0..64 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in p + 1..n {
                off = off.max(m[p][q].abs());
            }
        }
        if off <= 1e-14 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[p][q].abs() <= 1e-300 {
                    continue;
                }
                // Classical 2×2 symmetric Schur rotation.
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k][p];
                    let mkq = m[k][q];
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p][k];
                    let mqk = m[q][k];
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
                for row in v.iter_mut() {
                    let vp = row[p];
                    let vq = row[q];
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    let eigs: Vec<f64> = (0..n).map(|i| m[i][i]).collect();
    (eigs, v)
}

/// Spectral condition number max|λ| / min|λ|; infinite when min|λ| is 0.
pub fn spectral_condition(eigs: &[f64]) -> f64 {
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for &e in eigs {
        lo = lo.min(e.abs());
        hi = hi.max(e.abs());
    }
    if eigs.is_empty() {
        return 1.0;
    }
    if lo == 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// Minimal-norm solution of A·x = b from A's eigendecomposition, zeroing
/// components along eigenvalues with |λ| ≤ tol (pseudo-inverse behavior).
pub fn minimal_norm_solve(eigs: &[f64], vectors: &[Vec<f64>], b: &[f64], tol: f64) -> Vec<f64> {
    let n = eigs.len();
    let mut x = vec![0.0; n];
    for (j, &lambda) in eigs.iter().enumerate() {
        if lambda.abs() <= tol {
            continue;
        }
        // Coefficient of b along eigenvector j, scaled by 1/λ.
        let mut proj = 0.0;
        for i in 0..n {
            proj += vectors[i][j] * b[i];
        }
        let coeff = proj / lambda;
        for i in 0..n {
            x[i] += coeff * vectors[i][j];
        }
    }
    x
}

/// A·x for a dense square matrix.
pub fn mat_vec(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    a.iter()
        .map(|row| row.iter().zip(x).map(|(r, v)| r * v).sum())
        .collect()
}
