//! Dense complex matrix helpers shared by the physics modules.

use faer::{Mat, MatRef};
use serde::{Deserialize, Serialize};

pub use faer::c64;

pub type CMatrix = Mat<c64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn matrix(self) -> CMatrix {
        let (o, l, i) = (c64::new(0.0, 0.0), c64::new(1.0, 0.0), c64::new(0.0, 1.0));
        let entries = match self {
            Pauli::X => [[o, l], [l, o]],
            Pauli::Y => [[o, -i], [i, o]],
            Pauli::Z => [[l, o], [o, -l]],
        };
        Mat::from_fn(2, 2, |r, c| entries[r][c])
    }
}

/// Runs dense kernels on the calling thread only, so results cannot depend
/// on the thread count.
pub fn set_sequential() {
    faer::set_global_parallelism(faer::Par::Seq);
}

pub fn identity(n: usize) -> CMatrix {
    Mat::identity(n, n)
}

pub fn zeros(n: usize) -> CMatrix {
    Mat::zeros(n, n)
}

pub fn scale(m: MatRef<'_, c64>, k: c64) -> CMatrix {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * k)
}

pub fn real_scale(m: MatRef<'_, c64>, k: f64) -> CMatrix {
    scale(m, c64::new(k, 0.0))
}

pub fn kron(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> CMatrix {
    a.kron(b)
}

/// `[a, b] = ab - ba`.
pub fn commutator(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> CMatrix {
    a * b - b * a
}

/// Largest singular value; zero for empty matrices.
pub fn operator_norm(m: MatRef<'_, c64>) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.singular_values().expect("SVD converges for finite matrices").first().copied().unwrap_or(0.0)
}

/// Frobenius norm; bounds the operator norm from above.
pub fn frobenius_norm(m: MatRef<'_, c64>) -> f64 {
    m.norm_l2()
}

/// Frobenius norm of `m - m*`.
pub fn hermitian_deviation(m: MatRef<'_, c64>) -> f64 {
    if m.nrows() != m.ncols() {
        return f64::INFINITY;
    }
    (m - m.adjoint()).norm_l2()
}

/// Frobenius norm of `m + m*`.
pub fn anti_hermitian_deviation(m: MatRef<'_, c64>) -> f64 {
    if m.nrows() != m.ncols() {
        return f64::INFINITY;
    }
    (m + m.adjoint()).norm_l2()
}

pub fn trace(m: MatRef<'_, c64>) -> c64 {
    (0..m.nrows().min(m.ncols())).map(|i| m[(i, i)]).sum()
}

/// `Tr(a b)` without forming the product.
pub fn trace_product(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> c64 {
    let mut acc = c64::new(0.0, 0.0);
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

/// Row-major `[re, im]` entries, the interchange layout for matrices.
pub fn to_row_major(m: MatRef<'_, c64>) -> Vec<[f64; 2]> {
    let mut out = Vec::with_capacity(m.nrows() * m.ncols());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let z = m[(i, j)];
            out.push([z.re, z.im]);
        }
    }
    out
}

/// Inverse of [`to_row_major`] for a square matrix; `None` if the entry
/// count is not a perfect square.
pub fn from_row_major(entries: &[[f64; 2]]) -> Option<CMatrix> {
    let n = (entries.len() as f64).sqrt().round() as usize;
    if n * n != entries.len() {
        return None;
    }
    Some(Mat::from_fn(n, n, |i, j| {
        let [re, im] = entries[i * n + j];
        c64::new(re, im)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pauli_algebra() {
        let (x, y, z) = (Pauli::X.matrix(), Pauli::Y.matrix(), Pauli::Z.matrix());
        // XY = iZ
        let diff = &x * &y - scale(z.as_ref(), c64::new(0.0, 1.0));
        assert!(frobenius_norm(diff.as_ref()) < 1e-15);
        for p in [&x, &y, &z] {
            assert!((operator_norm(p.as_ref()) - 1.0).abs() < 1e-14);
            assert_eq!(hermitian_deviation(p.as_ref()), 0.0);
        }
    }

    #[test]
    fn norms_of_simple_matrices() {
        assert_eq!(operator_norm(zeros(3).as_ref()), 0.0);
        let m = real_scale(kron(Pauli::Z.matrix().as_ref(), Pauli::X.matrix().as_ref()).as_ref(), 2.0);
        assert!((operator_norm(m.as_ref()) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn row_major_layout() {
        let y = Pauli::Y.matrix();
        let flat = to_row_major(y.as_ref());
        assert_eq!(flat[1], [0.0, -1.0]);
        assert_eq!(from_row_major(&flat).unwrap(), y);
        assert!(from_row_major(&flat[..3]).is_none());
    }
}
