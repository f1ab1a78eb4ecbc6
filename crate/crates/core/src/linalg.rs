//! Dense linear-algebra helpers on top of nalgebra.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Width of a degenerate eigenvalue cluster.
pub const DEGENERACY_TOL: f64 = 1e-10;

/// Eigen-decomposition of a symmetric matrix, eigenvalues descending.
///
/// Each eigenvector is sign-fixed so that its largest-magnitude component
/// (first one on ties) is positive. Inside a cluster of eigenvalues closer
/// than [`DEGENERACY_TOL`] the vectors are ordered by the index of that
/// component.
pub fn sorted_symmetric_eigen(matrix: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = matrix.nrows();
    if n == 0 {
        return (Vec::new(), DMatrix::zeros(0, 0));
    }
    let sym = (matrix + matrix.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut items: Vec<(f64, DVector<f64>, usize)> = (0..n)
        .map(|j| {
            let mut v = eig.eigenvectors.column(j).into_owned();
            let lead = leading_index(&v);
            if v[lead] < 0.0 {
                v.neg_mut();
            }
            (eig.eigenvalues[j], v, lead)
        })
        .collect();
    items.sort_by(|a, b| b.0.total_cmp(&a.0));
    // within degenerate clusters, order by leading component index
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && items[end - 1].0 - items[end].0 < DEGENERACY_TOL {
            end += 1;
        }
        items[start..end].sort_by_key(|it| it.2);
        start = end;
    }
    let values = items.iter().map(|it| it.0).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (j, it) in items.iter().enumerate() {
        vectors.set_column(j, &it.1);
    }
    (values, vectors)
}

fn leading_index(v: &DVector<f64>) -> usize {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i].abs() > v[best].abs() + 1e-12 {
            best = i;
        }
    }
    best
}

/// Largest eigenvalue of a symmetric matrix; `None` for an empty matrix.
pub fn max_eigenvalue(matrix: &DMatrix<f64>) -> Option<f64> {
    if matrix.nrows() == 0 {
        return None;
    }
    let sym = (matrix + matrix.transpose()) * 0.5;
    SymmetricEigen::new(sym).eigenvalues.iter().copied().reduce(f64::max)
}

/// `max |UᵀU − I|`.
pub fn orthogonality_defect(u: &DMatrix<f64>) -> f64 {
    let n = u.ncols();
    let gram = u.transpose() * u;
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((gram[(i, j)] - target).abs());
        }
    }
    worst
}

/// `max |X + Xᵀ|`.
pub fn antisymmetry_defect(x: &DMatrix<f64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..x.nrows() {
        for j in 0..x.ncols() {
            worst = worst.max((x[(i, j)] + x[(j, i)]).abs());
        }
    }
    worst
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
}
