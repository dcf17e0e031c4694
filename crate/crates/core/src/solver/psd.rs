//! Symmetric-matrix vectorization and projection onto the PSD cone.
//!
//! `svec` packs the upper triangle column by column, `(0,0), (0,1), (1,1), (0,2), ...`,
//! with off-diagonal entries multiplied by `sqrt(2)` so that the Euclidean inner
//! product of two `svec`s equals the trace inner product of the matrices.

use nalgebra::{DMatrix, SymmetricEigen};

pub fn svec_len(size: usize) -> usize {
    size * (size + 1) / 2
}

/// Side length of a matrix whose `svec` has `len` entries.
pub fn svec_size(len: usize) -> usize {
    let s = ((((8 * len + 1) as f64).sqrt() - 1.0) / 2.0).round() as usize;
    debug_assert_eq!(svec_len(s), len);
    s
}

pub fn svec(m: &DMatrix<f64>) -> Vec<f64> {
    let s = m.nrows();
    let mut out = Vec::with_capacity(svec_len(s));
    for j in 0..s {
        for i in 0..=j {
            let w = if i == j { 1.0 } else { std::f64::consts::SQRT_2 };
            out.push(w * 0.5 * (m[(i, j)] + m[(j, i)]));
        }
    }
    out
}

pub fn smat(v: &[f64]) -> DMatrix<f64> {
    let s = svec_size(v.len());
    let mut m = DMatrix::zeros(s, s);
    let mut k = 0;
    for j in 0..s {
        for i in 0..=j {
            if i == j {
                m[(i, i)] = v[k];
            } else {
                let x = v[k] * std::f64::consts::FRAC_1_SQRT_2;
                m[(i, j)] = x;
                m[(j, i)] = x;
            }
            k += 1;
        }
    }
    m
}

/// Nearest PSD matrix in Frobenius norm: clamp negative eigenvalues to zero.
pub fn project_psd(m: &DMatrix<f64>) -> DMatrix<f64> {
    let s = m.nrows();
    if s == 0 {
        return m.clone();
    }
    if s == 1 {
        return DMatrix::from_element(1, 1, m[(0, 0)].max(0.0));
    }
    let eig = SymmetricEigen::new(0.5 * (m + m.transpose()));
    if eig.eigenvalues.iter().all(|&l| l >= 0.0) {
        return 0.5 * (m + m.transpose());
    }
    let mut out = DMatrix::zeros(s, s);
    for (k, &l) in eig.eigenvalues.iter().enumerate() {
        if l > 0.0 {
            let v = eig.eigenvectors.column(k);
            out += l * &v * v.transpose();
        }
    }
    // re-symmetrize rounding from the rank-one sums
    0.5 * (&out + out.transpose())
}

/// Projects an `svec` in place.
pub fn project_svec(v: &mut [f64]) {
    let p = svec(&project_psd(&smat(v)));
    v.copy_from_slice(&p);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn svec_round_trip_and_inner_product() {
        let a = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 3.0, 2.0, 5.0, 6.0, 3.0, 6.0, 9.0]);
        let b = DMatrix::from_row_slice(3, 3, &[0.5, -1.0, 0.0, -1.0, 2.0, 1.0, 0.0, 1.0, 4.0]);
        assert!((smat(&svec(&a)) - &a).norm() < 1e-14);
        let dot: f64 = svec(&a).iter().zip(svec(&b)).map(|(x, y)| x * y).sum();
        assert!((dot - (a.transpose() * &b).trace()).abs() < 1e-12);
    }

    #[test]
    fn projection_of_indefinite_diagonal() {
        let m = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![2.0, -1.0, 0.5]));
        let p = project_psd(&m);
        let expect = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![2.0, 0.0, 0.5]));
        assert!((p - expect).norm() < 1e-14);
    }
}
