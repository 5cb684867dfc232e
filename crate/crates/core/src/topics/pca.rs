use std::collections::BTreeMap;

use nalgebra::{DMatrix, RowDVector, SymmetricEigen};

use super::{Point2, TopicError};
use crate::embeddings::EmbeddingStore;
use crate::scalar::Scalar;

/// How document embeddings are laid out in the plane.
#[derive(Debug, Clone, PartialEq)]
pub enum Projection<T: Scalar = f64> {
    /// Top two principal components of the mean-centred vectors.
    Pca,
    /// Externally computed coordinates, passed through unchanged.
    Precomputed(BTreeMap<String, Point2<T>>),
}

/// Projects every embedding onto the plane. `_seed` is accepted for parity
/// with stochastic projections; PCA itself is deterministic.
pub fn project_2d<T: Scalar>(
    store: &EmbeddingStore<T>,
    method: &Projection<T>,
    _seed: u64,
) -> Result<BTreeMap<String, Point2<T>>, TopicError> {
    if store.is_empty() {
        return Err(TopicError::Empty);
    }
    match method {
        Projection::Precomputed(points) => store
            .iter()
            .map(|(id, _)| {
                points
                    .get(id)
                    .map(|p| (id.to_string(), *p))
                    .ok_or_else(|| TopicError::MissingPoint(id.to_string()))
            })
            .collect(),
        Projection::Pca => pca_2d(store),
    }
}

fn pca_2d<T: Scalar>(store: &EmbeddingStore<T>) -> Result<BTreeMap<String, Point2<T>>, TopicError> {
    let n = store.len();
    if n < 3 {
        return Err(TopicError::TooFewForPca(n));
    }
    let d = store.dimension();
    let mut x = DMatrix::<f64>::zeros(n, d);
    for (row, (_, v)) in store.iter().enumerate() {
        for (col, value) in v.iter().enumerate() {
            x[(row, col)] = value.as_f64();
        }
    }
    let mean = x.row_mean();
    for mut row in x.row_iter_mut() {
        row -= &mean;
    }

    let loadings = principal_axes(&x, 2);
    let mut out = BTreeMap::new();
    for (row, (id, _)) in store.iter().enumerate() {
        let r = x.row(row);
        let mut p = [T::zero(); 2];
        for (k, axis) in loadings.iter().enumerate() {
            if let Some(axis) = axis {
                p[k] = T::of(r.dot(axis));
            }
        }
        out.insert(id.to_string(), p);
    }
    Ok(out)
}

/// Unit principal axes (rows of length d) for the top `k` components of the
/// centred data matrix, sign-fixed so the largest-magnitude entry is
/// positive. Components without variance come back as `None`.
fn principal_axes(x: &DMatrix<f64>, k: usize) -> Vec<Option<RowDVector<f64>>> {
    let (n, d) = x.shape();
    // work in the smaller of the covariance (d x d) and Gram (n x n) spaces
    let use_gram = n < d;
    let m = if use_gram { x * x.transpose() } else { x.transpose() * x };
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let scale = eig.eigenvalues.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let floor = scale * 1e-12;

    order
        .into_iter()
        .take(k)
        .map(|idx| {
            if eig.eigenvalues[idx] <= floor {
                return None;
            }
            let v = eig.eigenvectors.column(idx);
            let mut axis = if use_gram {
                (x.transpose() * v).transpose()
            } else {
                v.transpose().into_owned()
            };
            let len = axis.norm();
            if len == 0.0 {
                return None;
            }
            axis /= len;
            let mut best = 0;
            for j in 1..d {
                if axis[(0, j)].abs() > axis[(0, best)].abs() {
                    best = j;
                }
            }
            if axis[(0, best)] < 0.0 {
                axis = -axis;
            }
            Some(axis)
        })
        .chain(std::iter::repeat(None))
        .take(k)
        .collect()
}
