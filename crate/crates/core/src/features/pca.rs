use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};

use super::{FeatureMatrix, Layout};
use crate::codec::{sha256_hex, RecordReader, RecordWriter};
use crate::error::{Error, Result};
use crate::linalg::{gram_columns, mul_transposed};

const MAGIC: &[u8; 8] = b"PRACHPCA";
const VERSION: u32 = 1;

/// Learned projection onto the leading principal axes.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    pub dim: usize,
    pub mean: Vec<f64>,
    /// `k` orthonormal rows of length `dim`, by decreasing variance.
    pub components: Vec<f64>,
    pub variances: Vec<f64>,
    pub cumvar: Vec<f64>,
    pub total_variance: f64,
    /// Numerical rank of the centred training matrix.
    pub rank: usize,
    pub variance_target: f64,
    /// Set when the target could not be met before running out of rank.
    pub rank_limited: bool,
    pub layout: Layout,
}

/// PCA of the row-centred matrix.
///
/// The right singular vectors and squared singular values of the centred
/// matrix `Xc` are taken from the symmetric eigendecomposition of
/// `Xc^T Xc / (n - 1)`, which is `dim x dim` regardless of the row count.
pub fn fit_pca(matrix: &FeatureMatrix, variance_target: f64) -> Result<PcaModel> {
    if matrix.len() < 2 {
        return Err(Error::config("PCA needs at least two rows"));
    }
    if !(variance_target > 0.0 && variance_target <= 1.0) {
        return Err(Error::config(format!("variance target {variance_target} outside (0, 1]")));
    }
    let (n, d) = (matrix.len(), matrix.dim());
    let mut mean = vec![0.0; d];
    for i in 0..n {
        for (m, x) in mean.iter_mut().zip(matrix.row(i)) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut centred = matrix.data().to_vec();
    for row in centred.chunks_exact_mut(d) {
        for (x, m) in row.iter_mut().zip(&mean) {
            *x -= m;
        }
    }
    let mut cov = gram_columns(&centred, n, d);
    drop(centred);
    let scale = 1.0 / (n - 1) as f64;
    cov.iter_mut().for_each(|c| *c *= scale);
    let cov = DMatrix::from_row_slice(d, d, &cov);
    let total_variance = cov.trace();
    let eig = SymmetricEigen::new(cov);

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let lambda_max = eig.eigenvalues[order[0]].max(0.0);
    let rank_tol = lambda_max * (n.max(d) as f64) * f64::EPSILON * 16.0;
    let rank = order
        .iter()
        .take_while(|&&j| eig.eigenvalues[j] > rank_tol)
        .count();

    let mut cumvar_all = Vec::with_capacity(rank);
    let mut acc = 0.0;
    for &j in &order[..rank] {
        acc += eig.eigenvalues[j];
        cumvar_all.push(if total_variance > 0.0 { acc / total_variance } else { 1.0 });
    }
    let reached = cumvar_all
        .iter()
        .position(|&c| c >= variance_target - 1e-12)
        .map(|p| p + 1);
    let (k, rank_limited) = match reached {
        Some(k) => (k, false),
        None => (rank, true),
    };
    if k == 0 {
        return Err(Error::config("centred matrix has rank zero"));
    }

    let mut components = Vec::with_capacity(k * d);
    for &j in &order[..k] {
        let col = eig.eigenvectors.column(j);
        // Largest-magnitude entry positive.
        let pivot = col
            .iter()
            .copied()
            .max_by(|a, b| a.abs().total_cmp(&b.abs()))
            .unwrap_or(1.0);
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        components.extend(col.iter().map(|x| x * sign));
    }
    Ok(PcaModel {
        dim: d,
        mean,
        components,
        variances: order[..k].iter().map(|&j| eig.eigenvalues[j].max(0.0)).collect(),
        cumvar: cumvar_all[..k].to_vec(),
        total_variance,
        rank,
        variance_target,
        rank_limited,
        layout: Layout::Blocked,
    })
}

impl PcaModel {
    pub fn k(&self) -> usize {
        self.variances.len()
    }

    pub fn component(&self, j: usize) -> &[f64] {
        &self.components[j * self.dim..(j + 1) * self.dim]
    }

    /// `components^T (v - mean)`.
    pub fn project(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.dim {
            return Err(Error::Shape {
                expected: self.dim,
                got: v.len(),
            });
        }
        let centred: Vec<f64> = v.iter().zip(&self.mean).map(|(x, m)| x - m).collect();
        Ok((0..self.k())
            .map(|j| crate::linalg::dot(self.component(j), &centred))
            .collect())
    }

    /// Project every row of a raw-space matrix.
    pub fn project_matrix(&self, m: &FeatureMatrix) -> Result<FeatureMatrix> {
        if m.dim() != self.dim {
            return Err(Error::Shape {
                expected: self.dim,
                got: m.dim(),
            });
        }
        let mut centred = m.data().to_vec();
        for row in centred.chunks_exact_mut(self.dim) {
            for (x, mu) in row.iter_mut().zip(&self.mean) {
                *x -= mu;
            }
        }
        let scores = mul_transposed(&centred, m.len(), &self.components, self.k(), self.dim);
        m.with_features(self.k(), scores)
    }

    /// `mean + components * scores`.
    pub fn reconstruct(&self, scores: &[f64]) -> Result<Vec<f64>> {
        if scores.len() != self.k() {
            return Err(Error::Shape {
                expected: self.k(),
                got: scores.len(),
            });
        }
        let mut out = self.mean.clone();
        for (j, s) in scores.iter().enumerate() {
            for (o, c) in out.iter_mut().zip(self.component(j)) {
                *o += s * c;
            }
        }
        Ok(out)
    }

    /// Binary record: magic `PRACHPCA`, version, layout, dims, k, rank,
    /// flags, target, total variance, mean, components, variances, cumvar, CRC-32.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = RecordWriter::new(MAGIC, VERSION);
        w.u8(self.layout.tag());
        w.u32(self.dim as u32);
        w.u32(self.k() as u32);
        w.u32(self.rank as u32);
        w.u8(self.rank_limited as u8);
        w.f64(self.variance_target);
        w.f64(self.total_variance);
        w.f64s(&self.mean);
        w.f64s(&self.components);
        w.f64s(&self.variances);
        w.f64s(&self.cumvar);
        w.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = RecordReader::open(bytes, MAGIC, VERSION)?;
        let layout = Layout::from_tag(r.u8()?)?;
        let dim = r.u32()? as usize;
        let k = r.u32()? as usize;
        let rank = r.u32()? as usize;
        let rank_limited = r.u8()? != 0;
        let variance_target = r.f64()?;
        let total_variance = r.f64()?;
        let mean = r.f64s(dim)?;
        let components = r.f64s(k * dim)?;
        let variances = r.f64s(k)?;
        let cumvar = r.f64s(k)?;
        r.finish()?;
        Ok(Self {
            dim,
            mean,
            components,
            variances,
            cumvar,
            total_variance,
            rank,
            variance_target,
            rank_limited,
            layout,
        })
    }

    /// SHA-256 of the serialized record; models trained on this projection store it.
    pub fn hash(&self) -> String {
        sha256_hex(&self.to_bytes())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;
    use rand_distr::{Distribution, StandardNormal};

    fn random_matrix(n: usize, d: usize, s: u64) -> FeatureMatrix {
        let mut rng = seed::rng(s);
        // Anisotropic columns so eigenvalues are well separated.
        let data = (0..n * d)
            .map(|i| {
                let z: f64 = StandardNormal.sample(&mut rng);
                z * (1.0 + (i % d) as f64)
            })
            .collect();
        FeatureMatrix::from_labeled(d, data, vec![0; n]).unwrap()
    }

    #[test]
    fn toy_direction_is_recovered() {
        // Points along (1,1) plus small orthogonal jitter; covariance eigvec (1,1)/sqrt2.
        let mut rng = seed::rng(1);
        let mut data = Vec::new();
        for i in 0..200 {
            let t = i as f64 / 20.0 - 5.0;
            let e: f64 = StandardNormal.sample(&mut rng);
            data.extend_from_slice(&[t + 0.01 * e, t - 0.01 * e]);
        }
        let m = FeatureMatrix::from_labeled(2, data, vec![0; 200]).unwrap();
        let pca = fit_pca(&m, 0.9).unwrap();
        assert_eq!(pca.k(), 1);
        let c = pca.component(0);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((c[0] - h).abs() < 1e-4 && (c[1] - h).abs() < 1e-4);
        assert!(pca.cumvar[0] > 0.99);
    }

    #[test]
    fn full_target_keeps_rank() {
        // 5 rows in 8 dims: centred rank is 4.
        let m = random_matrix(5, 8, 2);
        let pca = fit_pca(&m, 1.0).unwrap();
        assert_eq!(pca.rank, 4);
        assert_eq!(pca.k(), 4);
        assert!(!pca.rank_limited);
    }

    #[test]
    fn invariants_hold() {
        let m = random_matrix(60, 12, 3);
        let pca = fit_pca(&m, 1.0).unwrap();
        for a in 0..pca.k() {
            for b in 0..pca.k() {
                let dot = crate::linalg::dot(pca.component(a), pca.component(b));
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-8);
            }
        }
        assert!(pca.variances.windows(2).all(|w| w[0] >= w[1]));
        assert!(pca.cumvar.windows(2).all(|w| w[0] <= w[1]));
        assert!(*pca.cumvar.last().unwrap() <= 1.0 + 1e-12);
        // Total variance from per-column sample variances.
        let n = m.len() as f64;
        let direct: f64 = (0..m.dim())
            .map(|j| {
                let mu = (0..m.len()).map(|i| m.row(i)[j]).sum::<f64>() / n;
                (0..m.len()).map(|i| (m.row(i)[j] - mu).powi(2)).sum::<f64>() / (n - 1.0)
            })
            .sum();
        let sum: f64 = pca.variances.iter().sum();
        assert!((sum - direct).abs() / direct < 1e-6);
    }

    #[test]
    fn matches_reference_svd_up_to_sign() {
        let m = random_matrix(40, 6, 4);
        let pca = fit_pca(&m, 1.0).unwrap();
        let mut centred = DMatrix::from_row_slice(m.len(), m.dim(), m.data());
        for j in 0..m.dim() {
            let mu = centred.column(j).mean();
            centred.column_mut(j).add_scalar_mut(-mu);
        }
        let svd = centred.svd(false, true);
        let vt = svd.v_t.unwrap();
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
        for (j, &o) in order.iter().enumerate().take(pca.k()) {
            let sv = svd.singular_values[o];
            assert!((sv * sv / (m.len() - 1) as f64 - pca.variances[j]).abs() < 1e-8 * pca.variances[0]);
            let dot: f64 = (0..m.dim()).map(|i| vt[(o, i)] * pca.component(j)[i]).sum();
            assert!((dot.abs() - 1.0).abs() < 1e-8, "component {j}: {dot}");
        }
    }

    #[test]
    fn projection_basics() {
        let m = random_matrix(50, 5, 5);
        let pca = fit_pca(&m, 1.0).unwrap();
        let z = pca.project(&pca.mean).unwrap();
        assert!(z.iter().all(|x| x.abs() < 1e-12));
        let v: Vec<f64> = pca.mean.iter().zip(pca.component(0)).map(|(a, b)| a + b).collect();
        let p = pca.project(&v).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-10);
        assert!(p[1..].iter().all(|x| x.abs() < 1e-10));
        assert!(pca.project(&[0.0; 4]).is_err());
        let via_matrix = pca.project_matrix(&m).unwrap();
        let direct = pca.project(m.row(7)).unwrap();
        for (a, b) in via_matrix.row(7).iter().zip(&direct) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn reconstruction_error_matches_discarded_variance() {
        let m = random_matrix(80, 10, 6);
        let pca = fit_pca(&m, 0.8).unwrap();
        assert!(pca.k() < 10);
        let (mut err, mut tot) = (0.0, 0.0);
        for i in 0..m.len() {
            let rec = pca.reconstruct(&pca.project(m.row(i)).unwrap()).unwrap();
            for j in 0..m.dim() {
                err += (m.row(i)[j] - rec[j]).powi(2);
                tot += (m.row(i)[j] - pca.mean[j]).powi(2);
            }
        }
        let want = 1.0 - pca.cumvar[pca.k() - 1];
        assert!((err / tot - want).abs() < 1e-9);
    }

    #[test]
    fn projected_training_rows_are_uncorrelated() {
        let m = random_matrix(100, 6, 7);
        let pca = fit_pca(&m, 1.0).unwrap();
        let p = pca.project_matrix(&m).unwrap();
        let n = p.len() as f64;
        for a in 0..p.dim() {
            for b in 0..a {
                let cov: f64 = (0..p.len()).map(|i| p.row(i)[a] * p.row(i)[b]).sum::<f64>() / (n - 1.0);
                assert!(cov.abs() < 1e-6 * pca.variances[0]);
            }
        }
    }

    #[test]
    fn serialization_round_trip_and_errors() {
        let m = random_matrix(20, 4, 8);
        let pca = fit_pca(&m, 0.95).unwrap();
        let bytes = pca.to_bytes();
        assert_eq!(PcaModel::from_bytes(&bytes).unwrap(), pca);
        let mut bad = bytes.clone();
        bad[30] ^= 0xff;
        assert!(PcaModel::from_bytes(&bad).is_err());
        assert!(fit_pca(&m.subset(&[0]), 0.9).is_err());
        assert!(fit_pca(&m, 0.0).is_err());
    }
}
