//! The constant 6x6 matrix `Q` of the divergence identity and the quadratic
//! form it encodes on block vectors `V = (D1, D2, D3, A1, A2, A3)`.

use nalgebra::{Matrix6, SymmetricEigen};

use crate::conformal::HorizontalCovector;

/// `3·Q`, kept in integers so the entries are exact.
const Q_TIMES_3: [[i32; 6]; 6] = [
    [6, 0, 0, 10, -2, -2],
    [0, 6, 0, -2, 10, -2],
    [0, 0, 6, -2, -2, 10],
    [10, -2, -2, 22, -2, -2],
    [-2, 10, -2, -2, 22, -2],
    [-2, -2, 10, -2, -2, 22],
];

pub fn q_matrix() -> Matrix6<f64> {
    Matrix6::from_fn(|i, j| Q_TIMES_3[i][j] as f64 / 3.0)
}

/// The spectrum claimed for `Q`, ascending.
pub fn expected_spectrum() -> [f64; 6] {
    let s = 2f64.sqrt();
    [0.0, 0.0, 2.0 * (2.0 - s), 2.0 * (2.0 + s), 10.0, 10.0]
}

/// Eigenvalues and matching unit eigenvectors (columns), ascending.
pub fn q_eigen() -> (Vec<f64>, Matrix6<f64>) {
    let e = SymmetricEigen::new(q_matrix());
    let mut order: Vec<usize> = (0..6).collect();
    order.sort_by(|&a, &b| e.eigenvalues[a].total_cmp(&e.eigenvalues[b]));
    let values = order.iter().map(|&i| e.eigenvalues[i]).collect();
    let vectors = Matrix6::from_fn(|r, c| e.eigenvectors[(r, order[c])]);
    (values, vectors)
}

pub fn q_spectrum() -> [f64; 6] {
    let (v, _) = q_eigen();
    std::array::from_fn(|i| v[i])
}

/// `max_k |Q v_k − λ_k v_k|` for the computed eigenpairs.
pub fn eigen_residual() -> f64 {
    let (values, vectors) = q_eigen();
    let q = q_matrix();
    (0..6)
        .map(|k| {
            let v = vectors.column(k);
            (q * v - v * values[k]).amax()
        })
        .fold(0.0, f64::max)
}

/// Number of eigenvalues with modulus at most `tol`.
pub fn kernel_dimension(tol: f64) -> usize {
    q_spectrum().iter().filter(|l| l.abs() <= tol).count()
}

/// Unit vectors spanning the kernel, in the block coordinates `(D1, D2, D3, A1, A2, A3)`.
pub fn kernel_basis(tol: f64) -> Vec<[f64; 6]> {
    let (values, vectors) = q_eigen();
    (0..6)
        .filter(|&k| values[k].abs() <= tol)
        .map(|k| std::array::from_fn(|i| vectors[(i, k)]))
        .collect()
}

/// `V = (D1, D2, D3, A1, A2, A3)`.
pub type BlockVector = [HorizontalCovector; 6];

/// `⟨QV, V⟩ = Σ_{ij} Q_ij g(V_i, V_j)`.
pub fn quadratic_form(v: &BlockVector) -> f64 {
    let q = q_matrix();
    let mut acc = 0.0;
    for i in 0..6 {
        for j in 0..6 {
            acc += q[(i, j)] * v[i].0.dot(&v[j].0);
        }
    }
    acc
}

/// `Σ_cyclic g(D1, 3A1 − A2 − A3 + 2D1) + g(A1, 22/3 A1 − 2/3 A2 − 2/3 A3 + 11/3 D1 − 1/3 D2 − 1/3 D3)`.
pub fn cyclic_sum(v: &BlockVector) -> f64 {
    let g = |a: &HorizontalCovector, b: &HorizontalCovector| a.0.dot(&b.0);
    let (d, a) = (&v[..3], &v[3..]);
    let mut acc = 0.0;
    for i in 0..3 {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        let first = 3.0 * a[i] - a[j] - a[k] + 2.0 * d[i];
        let second = (22.0 / 3.0) * a[i] - (2.0 / 3.0) * a[j] - (2.0 / 3.0) * a[k] + (11.0 / 3.0) * d[i]
            - (1.0 / 3.0) * d[j]
            - (1.0 / 3.0) * d[k];
        acc += g(&d[i], &first) + g(&a[i], &second);
    }
    acc
}

/// `|⟨QV, V⟩ − cyclic sum|`.
pub fn quadratic_form_audit(v: &BlockVector) -> f64 {
    (quadratic_form(v) - cyclic_sum(v)).abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(slot: usize) -> BlockVector {
        let mut v = [HorizontalCovector::zeros(); 6];
        v[slot] = HorizontalCovector::dual(0);
        v
    }

    #[test]
    fn symmetric() {
        let q = q_matrix();
        assert_eq!(q, q.transpose());
    }

    #[test]
    fn diagonal_entries() {
        assert_eq!(quadratic_form(&single(0)), 2.0);
        assert!((quadratic_form(&single(3)) - 22.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn d1_equals_a1() {
        let mut v = single(0);
        v[3] = HorizontalCovector::dual(0);
        assert!((quadratic_form(&v) - 16.0).abs() < 1e-14);
        assert!(quadratic_form_audit(&v) < 1e-13);
    }

    #[test]
    fn spectrum_matches() {
        let got = q_spectrum();
        for (a, b) in got.iter().zip(expected_spectrum()) {
            assert!((a - b).abs() < 1e-12, "{got:?}");
        }
        assert_eq!(kernel_dimension(1e-10), 2);
        assert!(eigen_residual() < 1e-13);
    }
}
