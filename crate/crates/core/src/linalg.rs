//! Dense real matrix kernel: Kronecker products, direct sums, SVD-based
//! Moore-Penrose pseudo-inverse and numerical rank.
//!
//! All hypothesis and covariance matrices in this crate are small (at most a
//! few dozen rows), so the decomposition is a plain one-sided Jacobi SVD:
//! deterministic, accurate to machine precision, no external dependencies.

use crate::error::{Error, Result};

/// Row-major dense matrix of f64 entries.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// Builds a matrix from row-major data, validating length and finiteness.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::dimension(format!(
                "matrix data length {} does not match {rows}x{cols}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("matrix entries must be finite"));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    /// Builds from nested rows; all rows must share one length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(Error::dimension("rows of unequal length"));
        }
        Matrix::new(nrows, ncols, rows.concat())
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.set(c, r, self.get(r, c));
            }
        }
        out
    }

    /// Matrix product; panics on an inner-dimension mismatch.
    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(
            self.cols, other.rows,
            "matmul dimension mismatch: {}x{} * {}x{}",
            self.rows, self.cols, other.rows, other.cols
        );
        let mut out = Matrix::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(r, k);
                if a == 0.0 {
                    continue;
                }
                for c in 0..other.cols {
                    out.data[r * other.cols + c] += a * other.get(k, c);
                }
            }
        }
        out
    }

    /// Matrix-vector product; panics on a dimension mismatch.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len(), "mul_vec dimension mismatch");
        let mut out = vec![0.0; self.rows];
        for (r, slot) in out.iter_mut().enumerate() {
            *slot = v
                .iter()
                .enumerate()
                .map(|(c, x)| self.get(r, c) * x)
                .sum();
        }
        out
    }

    pub fn scale(&self, s: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    /// Kronecker product: block (i,j) of the result is self[i,j] * other.
    pub fn kron(&self, other: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(self.rows * other.rows, self.cols * other.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self.get(i, j);
                if a == 0.0 {
                    continue;
                }
                for r in 0..other.rows {
                    for c in 0..other.cols {
                        out.set(i * other.rows + r, j * other.cols + c, a * other.get(r, c));
                    }
                }
            }
        }
        out
    }

    /// Moore-Penrose pseudo-inverse via SVD.
    ///
    /// Singular values at or below `max(rows, cols) * eps * sigma_max` are
    /// treated as exactly zero.
    pub fn pinv(&self) -> Result<Matrix> {
        if self.rows == 0 || self.cols == 0 {
            return Ok(Matrix::zeros(self.cols, self.rows));
        }
        let svd = self.svd()?;
        let tol = pinv_tolerance(self.rows, self.cols, &svd.sigma);
        // A+ = V diag(1/sigma) U'
        let n = svd.sigma.len();
        let mut vs = Matrix::zeros(svd.v.rows, n);
        for j in 0..n {
            if svd.sigma[j] > tol {
                let inv = 1.0 / svd.sigma[j];
                for r in 0..svd.v.rows {
                    vs.set(r, j, svd.v.get(r, j) * inv);
                }
            }
        }
        Ok(vs.matmul(&svd.u.transpose()))
    }

    /// Count of singular values above the pseudo-inverse tolerance.
    pub fn numerical_rank(&self) -> Result<usize> {
        if self.rows == 0 || self.cols == 0 {
            return Ok(0);
        }
        let svd = self.svd()?;
        let tol = pinv_tolerance(self.rows, self.cols, &svd.sigma);
        Ok(svd.sigma.iter().filter(|&&s| s > tol).count())
    }

    /// Singular values in descending order.
    pub fn singular_values(&self) -> Result<Vec<f64>> {
        if self.rows == 0 || self.cols == 0 {
            return Ok(Vec::new());
        }
        let mut sigma = self.svd()?.sigma;
        sigma.sort_by(|a, b| b.partial_cmp(a).unwrap());
        Ok(sigma)
    }

    /// Thin SVD A = U diag(sigma) V' with U, V column-orthonormal.
    fn svd(&self) -> Result<Svd> {
        if self.rows >= self.cols {
            jacobi_svd_tall(self)
        } else {
            // transpose, decompose, swap factors
            let svd = jacobi_svd_tall(&self.transpose())?;
            Ok(Svd {
                u: svd.v,
                sigma: svd.sigma,
                v: svd.u,
            })
        }
    }
}

struct Svd {
    u: Matrix,
    sigma: Vec<f64>,
    v: Matrix,
}

fn pinv_tolerance(rows: usize, cols: usize, sigma: &[f64]) -> f64 {
    let sigma_max = sigma.iter().cloned().fold(0.0_f64, f64::max);
    rows.max(cols) as f64 * f64::EPSILON * sigma_max
}

/// One-sided Jacobi SVD for a tall matrix (rows >= cols): orthogonalize the
/// columns of a working copy by plane rotations, accumulating them into V.
fn jacobi_svd_tall(a: &Matrix) -> Result<Svd> {
    let m = a.rows;
    let n = a.cols;
    debug_assert!(m >= n);
    let mut w = a.clone();
    let mut v = Matrix::identity(n);

    // columns whose norm has collapsed below eps * ||A||_F carry only noise;
    // they sit below the pseudo-inverse cutoff and are excluded from sweeps
    let fro: f64 = a.data.iter().map(|x| x * x).sum::<f64>().sqrt();
    let null_col = f64::EPSILON * fro;

    const MAX_SWEEPS: usize = 64;
    const CONV: f64 = 1e-15;
    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0_f64;
        for p in 0..n {
            for q in (p + 1)..n {
                let mut alpha = 0.0;
                let mut beta = 0.0;
                let mut gamma = 0.0;
                for r in 0..m {
                    let wp = w.get(r, p);
                    let wq = w.get(r, q);
                    alpha += wp * wp;
                    beta += wq * wq;
                    gamma += wp * wq;
                }
                if alpha.sqrt() <= null_col || beta.sqrt() <= null_col {
                    continue;
                }
                let measure = gamma.abs() / (alpha * beta).sqrt();
                off = off.max(measure);
                if measure <= CONV {
                    continue;
                }
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for r in 0..m {
                    let wp = w.get(r, p);
                    let wq = w.get(r, q);
                    w.set(r, p, c * wp - s * wq);
                    w.set(r, q, s * wp + c * wq);
                }
                for r in 0..n {
                    let vp = v.get(r, p);
                    let vq = v.get(r, q);
                    v.set(r, p, c * vp - s * vq);
                    v.set(r, q, s * vp + c * vq);
                }
            }
        }
        if off <= CONV {
            converged = true;
            break;
        }
    }
    if !converged {
        let norms: Vec<f64> = (0..n)
            .map(|j| (0..m).map(|r| w.get(r, j).powi(2)).sum::<f64>().sqrt())
            .collect();
        let max = norms.iter().cloned().fold(0.0_f64, f64::max);
        let min = norms.iter().cloned().fold(f64::INFINITY, f64::min);
        return Err(Error::numeric(format!(
            "jacobi SVD did not converge in {MAX_SWEEPS} sweeps \
             ({m}x{n}, column norm range [{min:.3e}, {max:.3e}])"
        )));
    }

    let mut sigma = vec![0.0; n];
    let mut u = Matrix::zeros(m, n);
    for (j, slot) in sigma.iter_mut().enumerate() {
        let norm = (0..m).map(|r| w.get(r, j).powi(2)).sum::<f64>().sqrt();
        *slot = norm;
        if norm > 0.0 {
            for r in 0..m {
                u.set(r, j, w.get(r, j) / norm);
            }
        }
    }
    let sigma = sigma;
    Ok(Svd { u, sigma, v })
}

/// Block-diagonal direct sum of square matrices.
pub fn direct_sum(blocks: &[Matrix]) -> Result<Matrix> {
    for (i, b) in blocks.iter().enumerate() {
        if b.rows() != b.cols() {
            return Err(Error::dimension(format!(
                "direct sum block {i} is {}x{}, expected square",
                b.rows(),
                b.cols()
            )));
        }
    }
    let dim: usize = blocks.iter().map(Matrix::rows).sum();
    let mut out = Matrix::zeros(dim, dim);
    let mut offset = 0;
    for b in blocks {
        for r in 0..b.rows() {
            for c in 0..b.cols() {
                out.set(offset + r, offset + c, b.get(r, c));
            }
        }
        offset += b.rows();
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn centering(k: usize) -> Matrix {
        let mut m = Matrix::zeros(k, k);
        for r in 0..k {
            for c in 0..k {
                let v = if r == c { 1.0 } else { 0.0 } - 1.0 / k as f64;
                m.set(r, c, v);
            }
        }
        m
    }

    fn max_abs_diff(a: &Matrix, b: &Matrix) -> f64 {
        assert_eq!(a.rows(), b.rows());
        assert_eq!(a.cols(), b.cols());
        a.data()
            .iter()
            .zip(b.data())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
        let data = (0..rows * cols).map(|_| rng.gen_range(-3.0..3.0)).collect();
        Matrix::new(rows, cols, data).unwrap()
    }

    #[test]
    fn kron_with_identity_is_block_diagonal() {
        let m = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let k = Matrix::identity(2).kron(&m);
        let expected = direct_sum(&[m.clone(), m]).unwrap();
        assert_eq!(k, expected);
    }

    #[test]
    fn kron_hand_expansions() {
        let p2 = centering(2);
        let c = Matrix::new(1, 2, vec![-1.0, 1.0]).unwrap();
        let k = p2.kron(&c);
        let expected = Matrix::from_rows(&[
            vec![-0.5, 0.5, 0.5, -0.5],
            vec![0.5, -0.5, -0.5, 0.5],
        ])
        .unwrap();
        assert!(max_abs_diff(&k, &expected) < 1e-15);

        let kk = p2.kron(&p2);
        let expected = Matrix::from_rows(&[
            vec![0.25, -0.25, -0.25, 0.25],
            vec![-0.25, 0.25, 0.25, -0.25],
            vec![-0.25, 0.25, 0.25, -0.25],
            vec![0.25, -0.25, -0.25, 0.25],
        ])
        .unwrap();
        assert!(max_abs_diff(&kk, &expected) < 1e-15);
    }

    #[test]
    fn kron_mixed_product_property() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let a = random_matrix(&mut rng, 3, 2);
            let b = random_matrix(&mut rng, 2, 4);
            let c = random_matrix(&mut rng, 2, 3);
            let d = random_matrix(&mut rng, 4, 2);
            let lhs = a.kron(&b).matmul(&c.kron(&d));
            let rhs = a.matmul(&c).kron(&b.matmul(&d));
            assert!(max_abs_diff(&lhs, &rhs) < 1e-12);
        }
    }

    #[test]
    fn direct_sum_basics() {
        let a = Matrix::from_rows(&[vec![2.0]]).unwrap();
        let b = Matrix::from_rows(&[vec![3.0]]).unwrap();
        let d = direct_sum(&[a.clone(), b]).unwrap();
        assert_eq!(d, Matrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 3.0]]).unwrap());

        assert_eq!(direct_sum(std::slice::from_ref(&a)).unwrap(), a);

        let non_square = Matrix::zeros(2, 3);
        assert!(direct_sum(&[non_square]).is_err());

        // rank of k copies is k * rank(block)
        let p3 = centering(3);
        let stacked = direct_sum(&[p3.clone(), p3.clone(), p3.clone()]).unwrap();
        assert_eq!(stacked.numerical_rank().unwrap(), 3 * 2);
    }

    #[test]
    fn pinv_of_invertible_is_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in [2, 4, 7] {
            let a = random_matrix(&mut rng, n, n);
            let inv = a.pinv().unwrap();
            let prod = a.matmul(&inv);
            assert!(max_abs_diff(&prod, &Matrix::identity(n)) < 1e-10);
        }
    }

    #[test]
    fn pinv_of_zero_and_projection() {
        let z = Matrix::zeros(3, 5);
        let p = z.pinv().unwrap();
        assert_eq!(p.rows(), 5);
        assert_eq!(p.cols(), 3);
        assert!(p.data().iter().all(|&v| v == 0.0));

        // symmetric idempotent J2/2 is its own pseudo-inverse
        let half_j = Matrix::from_rows(&[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        assert!(max_abs_diff(&half_j.pinv().unwrap(), &half_j) < 1e-12);
    }

    #[test]
    fn penrose_axioms_on_random_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for i in 0..30 {
            let rows = rng.gen_range(1..=24);
            let cols = rng.gen_range(1..=24);
            let a = if i % 3 == 0 {
                // rank-deficient: outer product of thin factors
                let r = rng.gen_range(1..=rows.min(cols));
                random_matrix(&mut rng, rows, r).matmul(&random_matrix(&mut rng, r, cols))
            } else {
                random_matrix(&mut rng, rows, cols)
            };
            let plus = a.pinv().unwrap();
            let a_plus_a = a.matmul(&plus).matmul(&a);
            let plus_a_plus = plus.matmul(&a).matmul(&plus);
            let aap = a.matmul(&plus);
            let paa = plus.matmul(&a);
            assert!(max_abs_diff(&a_plus_a, &a) < 1e-10, "axiom 1 failed at {i}");
            assert!(max_abs_diff(&plus_a_plus, &plus) < 1e-10, "axiom 2 failed at {i}");
            assert!(max_abs_diff(&aap, &aap.transpose()) < 1e-10, "axiom 3 failed at {i}");
            assert!(max_abs_diff(&paa, &paa.transpose()) < 1e-10, "axiom 4 failed at {i}");
        }
    }

    #[test]
    fn pinv_distributes_over_direct_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let blocks: Vec<Matrix> = (0..3).map(|_| random_matrix(&mut rng, 3, 3)).collect();
        let lhs = direct_sum(&blocks).unwrap().pinv().unwrap();
        let pinvs: Vec<Matrix> = blocks.iter().map(|b| b.pinv().unwrap()).collect();
        let rhs = direct_sum(&pinvs).unwrap();
        assert!(max_abs_diff(&lhs, &rhs) < 1e-10);
    }

    #[test]
    fn numerical_rank_of_structured_matrices() {
        for k in 1..=6 {
            assert_eq!(Matrix::identity(k).numerical_rank().unwrap(), k);
            assert_eq!(centering(k).numerical_rank().unwrap(), k - 1);
        }
        for a in 2..=4 {
            for b in 2..=4 {
                let k = centering(a).kron(&centering(b));
                assert_eq!(k.numerical_rank().unwrap(), (a - 1) * (b - 1));
            }
        }
    }

    #[test]
    fn rejects_bad_construction() {
        assert!(Matrix::new(2, 2, vec![1.0, 2.0, 3.0]).is_err());
        assert!(Matrix::new(1, 2, vec![1.0, f64::NAN]).is_err());
        assert!(Matrix::from_rows(&[vec![1.0], vec![1.0, 2.0]]).is_err());
    }
}
