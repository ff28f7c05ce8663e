//! Regularised graph Laplacian and its row-normalised spectral embedding.

use std::io::Write;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::clustering::PointSet;
use crate::error::{Error, Result};
use crate::graph::{degree_profile, AdjacencyMatrix};

/// Rows whose leading block has a smaller norm than this are degenerate.
pub const DEGENERATE_ROW_NORM: f64 = 1e-12;

const MAX_EIGEN_SWEEPS: usize = 100_000;

/// `L_tau = D_tau^{-1/2} A D_tau^{-1/2}` with `D_tau = diag(d_i + tau)`.
#[derive(Clone, Debug)]
pub struct RegularizedLaplacian {
    pub tau: f64,
    pub matrix: DMatrix<f64>,
}

pub fn regularized_laplacian(adj: &AdjacencyMatrix, tau: f64) -> Result<RegularizedLaplacian> {
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "tau must be non-negative, got {tau}"
        )));
    }
    let n = adj.n();
    let profile = degree_profile(adj);
    let scale: Vec<f64> = profile
        .degrees
        .iter()
        .enumerate()
        .map(|(i, &d)| {
            let dt = d as f64 + tau;
            if dt > 0.0 {
                Ok(dt.sqrt().recip())
            } else {
                Err(Error::InvalidArgument(format!(
                    "node {i} is isolated and tau = 0"
                )))
            }
        })
        .collect::<Result<_>>()?;
    let mut matrix = DMatrix::zeros(n, n);
    for i in 0..n {
        for &j in adj.neighbors(i) {
            matrix[(i, j)] = scale[i] * scale[j];
        }
    }
    Ok(RegularizedLaplacian { tau, matrix })
}

/// Full eigendecomposition ordered by decreasing `|eigenvalue|`.
#[derive(Clone, Debug)]
pub struct SpectralEmbedding {
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors as columns, aligned with `eigenvalues`.
    pub eigenvectors: DMatrix<f64>,
}

/// Unit-normalised leading blocks of the eigenvector rows.
#[derive(Clone, Debug)]
pub struct EmbeddingRows {
    pub points: PointSet,
    /// Nodes whose leading block vanished; they map to the zero vector.
    pub degenerate: Vec<usize>,
}

/// Ties in `|eigenvalue|` go to the larger signed value, then to the lower
/// solver index.
pub fn eigendecompose(laplacian: &RegularizedLaplacian) -> Result<SpectralEmbedding> {
    let m = &laplacian.matrix;
    if !m.is_square() {
        return Err(Error::InvalidArgument("Laplacian must be square".into()));
    }
    let eig = SymmetricEigen::try_new(m.clone(), f64::EPSILON, MAX_EIGEN_SWEEPS)
        .ok_or(Error::EigenNonConvergence)?;
    let n = m.nrows();
    let vals = eig.eigenvalues.as_slice();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        vals[b]
            .abs()
            .total_cmp(&vals[a].abs())
            .then_with(|| vals[b].total_cmp(&vals[a]))
            .then(a.cmp(&b))
    });
    let eigenvalues = order.iter().map(|&c| vals[c]).collect();
    let eigenvectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(SpectralEmbedding {
        eigenvalues,
        eigenvectors,
    })
}

impl SpectralEmbedding {
    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Rows of the first `k` eigenvectors, each scaled to unit length.
    pub fn embedding_rows(&self, k: usize) -> Result<EmbeddingRows> {
        let n = self.n();
        if k == 0 || k > n {
            return Err(Error::InvalidArgument(format!(
                "embedding dimension {k} not in 1..={n}"
            )));
        }
        let mut data = Vec::with_capacity(n * k);
        let mut degenerate = Vec::new();
        for i in 0..n {
            let row: Vec<f64> = (0..k).map(|c| self.eigenvectors[(i, c)]).collect();
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm < DEGENERATE_ROW_NORM {
                degenerate.push(i);
                data.extend(std::iter::repeat_n(0.0, k));
            } else {
                data.extend(row.iter().map(|v| v / norm));
            }
        }
        if !degenerate.is_empty() {
            log::warn!(
                "{} node(s) have a vanishing {k}-dimensional spectral row and were mapped to zero",
                degenerate.len()
            );
        }
        Ok(EmbeddingRows {
            points: PointSet::new(k, data)?,
            degenerate,
        })
    }

    /// Writes eigenvalues as `index,eigenvalue` rows.
    pub fn write_eigenvalues_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record(["index", "eigenvalue"])?;
        for (i, v) in self.eigenvalues.iter().enumerate() {
            out.write_record([i.to_string(), v.to_string()])?;
        }
        out.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

impl EmbeddingRows {
    /// Writes `node,v0,v1,...` rows.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        let dim = self.points.dim();
        let mut header = vec!["node".to_string()];
        header.extend((0..dim).map(|c| format!("v{c}")));
        out.write_record(&header)?;
        for i in 0..self.points.len() {
            let mut rec = vec![i.to_string()];
            rec.extend(self.points.row(i).iter().map(f64::to_string));
            out.write_record(&rec)?;
        }
        out.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}
