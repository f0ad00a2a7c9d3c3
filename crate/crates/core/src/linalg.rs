//! Small dense Hermitian helpers shared across the crate.
//!
//! Everything here operates on matrices of dimension at most a few tens, so
//! plain eigendecompositions are used throughout instead of specialised
//! factorizations.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

/// Hermitize and eigendecompose. Returns (eigenvalues, eigenvectors) with the
/// columns of the second matrix holding the eigenvectors.
pub fn hermitian_eigen(m: &DMatrix<C64>) -> (DVector<f64>, DMatrix<C64>) {
    let h = (m + m.adjoint()).scale(0.5);
    let se = h.symmetric_eigen();
    (se.eigenvalues, se.eigenvectors)
}

/// Smallest eigenvalue of the Hermitian part of `m`.
pub fn min_eigenvalue(m: &DMatrix<C64>) -> f64 {
    let (vals, _) = hermitian_eigen(m);
    vals.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Positive semidefiniteness test with an absolute eigenvalue tolerance.
pub fn is_psd(m: &DMatrix<C64>, tol: f64) -> bool {
    min_eigenvalue(m) >= -tol
}

/// Determinant of a Hermitian matrix as the (real) product of eigenvalues.
pub fn hermitian_det(m: &DMatrix<C64>) -> f64 {
    let (vals, _) = hermitian_eigen(m);
    vals.iter().product()
}

/// Largest entry magnitude of a complex matrix.
pub fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Cholesky factorization that actually verifies positive definiteness.
///
/// The library factorization of complex matrices happily takes complex
/// square roots of negative pivots instead of failing, so an eigenvalue
/// check has to gate it.
pub fn cholesky_pd(m: &DMatrix<C64>) -> Option<nalgebra::Cholesky<C64, nalgebra::Dyn>> {
    if min_eigenvalue(m) <= 0.0 {
        return None;
    }
    m.clone().cholesky()
}

/// Pseudo inverse square root: eigenvalues below `rank_tol` are dropped.
pub fn psd_inv_sqrt(m: &DMatrix<C64>, rank_tol: f64) -> DMatrix<C64> {
    let (vals, vecs) = hermitian_eigen(m);
    let inv = DVector::from_iterator(
        vals.len(),
        vals.iter()
            .map(|&v| if v > rank_tol { C64::new(1.0 / v.sqrt(), 0.0) } else { C64::new(0.0, 0.0) }),
    );
    &vecs * DMatrix::from_diagonal(&inv) * vecs.adjoint()
}

/// Gradient of f(alpha) = det(G - diag(alpha)): component j equals the
/// negated principal minor obtained by deleting row and column j.
pub fn det_gradient(gram: &DMatrix<C64>, alphas: &[f64]) -> Vec<f64> {
    let d = alphas.len();
    let s = shifted(gram, alphas);
    (0..d)
        .map(|j| {
            let minor = s.clone().remove_row(j).remove_column(j);
            if minor.nrows() == 0 {
                -1.0
            } else {
                -hermitian_det(&minor)
            }
        })
        .collect()
}

/// G - diag(alpha).
pub fn shifted(gram: &DMatrix<C64>, alphas: &[f64]) -> DMatrix<C64> {
    let mut s = gram.clone();
    for (j, &a) in alphas.iter().enumerate() {
        s[(j, j)] -= C64::new(a, 0.0);
    }
    s
}

/// Extend `basis` (assumed orthonormal) to a full orthonormal basis of the
/// `dim`-dimensional space, returning only the new vectors.
///
/// Candidates are the standard basis vectors; each round picks the candidate
/// with the largest residual after projecting out everything accumulated so
/// far (projection applied twice for numerical orthogonality). The pivoting
/// order is deterministic.
pub fn orthonormal_complement(basis: &[DVector<C64>], dim: usize) -> Vec<DVector<C64>> {
    assert!(basis.len() <= dim);
    let mut accumulated: Vec<DVector<C64>> = basis.to_vec();
    let mut fresh = Vec::new();
    while accumulated.len() < dim {
        let mut best: Option<(f64, DVector<C64>)> = None;
        for i in 0..dim {
            let mut v = DVector::<C64>::zeros(dim);
            v[i] = C64::new(1.0, 0.0);
            for _ in 0..2 {
                for b in &accumulated {
                    let c = b.dotc(&v);
                    v -= b * c;
                }
            }
            let norm = v.norm();
            if best.as_ref().is_none_or(|(bn, _)| norm > *bn) {
                best = Some((norm, v));
            }
        }
        let (norm, v) = best.expect("dim > 0");
        let mut unit = v.unscale(norm);
        gauge_fix(&mut unit);
        accumulated.push(unit.clone());
        fresh.push(unit);
    }
    fresh
}

/// Multiply by a global phase so the largest-magnitude coordinate becomes
/// real and positive. Ties resolve to the first such coordinate, making
/// vector output deterministic across runs and platforms.
pub fn gauge_fix(v: &mut DVector<C64>) {
    let mut idx = 0;
    let mut mag = 0.0;
    for (i, z) in v.iter().enumerate() {
        let m = z.norm();
        if m > mag + 1e-15 {
            mag = m;
            idx = i;
        }
    }
    if mag > 0.0 {
        let phase = v[idx] / C64::new(mag, 0.0);
        let corr = phase.conj();
        for z in v.iter_mut() {
            *z *= corr;
        }
    }
}

/// Columns are the ensemble states.
pub fn column_matrix(states: &[DVector<C64>]) -> DMatrix<C64> {
    let n = states[0].len();
    DMatrix::from_fn(n, states.len(), |i, j| states[j][i])
}

/// Complex vector -> [re, im] pairs for JSON payloads.
pub fn vector_to_pairs(v: &DVector<C64>) -> Vec<[f64; 2]> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

/// [re, im] pairs -> complex vector.
pub fn pairs_to_vector(pairs: &[[f64; 2]]) -> DVector<C64> {
    DVector::from_iterator(pairs.len(), pairs.iter().map(|p| C64::new(p[0], p[1])))
}

/// Complex matrix -> row-major [re, im] pairs.
pub fn matrix_to_pairs(m: &DMatrix<C64>) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn complement_completes_to_identity_gram() {
        let v1 = DVector::from_vec(vec![
            C64::new(0.6, 0.0),
            C64::new(0.0, 0.8),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
        ]);
        let rest = orthonormal_complement(std::slice::from_ref(&v1), 4);
        assert_eq!(rest.len(), 3);
        let mut all = vec![v1];
        all.extend(rest);
        for (i, a) in all.iter().enumerate() {
            for (j, b) in all.iter().enumerate() {
                let g = a.dotc(b);
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(g.norm(), expect, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn gauge_fix_makes_dominant_entry_positive() {
        let mut v = DVector::from_vec(vec![C64::new(0.0, -0.8), C64::new(0.6, 0.0)]);
        gauge_fix(&mut v);
        assert_abs_diff_eq!(v[0].re, 0.8, epsilon = 1e-15);
        assert_abs_diff_eq!(v[0].im, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn det_gradient_matches_finite_differences() {
        let g = DMatrix::from_row_slice(
            3,
            3,
            &[
                C64::new(1.0, 0.0),
                C64::new(0.4, 0.1),
                C64::new(0.2, -0.2),
                C64::new(0.4, -0.1),
                C64::new(1.0, 0.0),
                C64::new(0.3, 0.05),
                C64::new(0.2, 0.2),
                C64::new(0.3, -0.05),
                C64::new(1.0, 0.0),
            ],
        );
        let alpha = [0.1, 0.2, 0.15];
        let grad = det_gradient(&g, &alpha);
        let h = 1e-6;
        for j in 0..3 {
            let mut up = alpha;
            let mut dn = alpha;
            up[j] += h;
            dn[j] -= h;
            let fd =
                (hermitian_det(&shifted(&g, &up)) - hermitian_det(&shifted(&g, &dn))) / (2.0 * h);
            assert_abs_diff_eq!(grad[j], fd, epsilon = 1e-6);
        }
    }
}
