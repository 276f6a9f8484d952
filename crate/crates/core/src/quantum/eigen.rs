//! Lowest eigenpairs of Hermitian operators: dense diagonalization for small
//! dimensions, block Lanczos with full reorthogonalization and restarts
//! otherwise.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::operator::{norm, OperatorMatrix};
use crate::error::{Error, Result};

/// Dimensions up to this size are diagonalized densely.
pub const DENSE_LIMIT: usize = 400;

#[derive(Clone, Debug)]
pub struct EigenOptions {
    /// Required `||H v - lambda v|| / ||H||` per pair.
    pub tolerance: f64,
    pub max_basis: usize,
    pub max_restarts: usize,
    pub seed: u64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-11,
            max_basis: 480,
            max_restarts: 40,
            seed: 0x5eed,
        }
    }
}

/// Lowest eigenpairs in ascending order.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<Complex64>>,
    /// `||H v - lambda v||` per pair.
    pub residuals: Vec<f64>,
    /// Estimate of `||H||` used to scale the residuals.
    pub norm_estimate: f64,
}

impl Spectrum {
    pub fn max_relative_residual(&self) -> f64 {
        self.residuals.iter().fold(0.0_f64, |m, r| m.max(*r)) / self.norm_estimate.max(f64::MIN_POSITIVE)
    }
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn axpy(y: &mut [Complex64], a: Complex64, x: &[Complex64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += a * xi);
}

pub fn spectrum(h: &OperatorMatrix, n_eigs: usize) -> Result<Spectrum> {
    spectrum_with(h, n_eigs, &EigenOptions::default())
}

pub fn spectrum_with(h: &OperatorMatrix, n_eigs: usize, opts: &EigenOptions) -> Result<Spectrum> {
    let n = h.dim();
    if n_eigs == 0 || n_eigs > n {
        return Err(Error::InvalidParameter(format!("cannot compute {n_eigs} eigenvalues of a {n}-dimensional operator")));
    }
    if n <= DENSE_LIMIT {
        return dense_spectrum(h, n_eigs);
    }
    block_lanczos(h, n_eigs, opts)
}

fn residuals_of(h: &OperatorMatrix, values: &[f64], vectors: &[Vec<Complex64>]) -> Vec<f64> {
    values
        .iter()
        .zip(vectors)
        .map(|(l, v)| {
            let mut hv = h.matvec(v);
            axpy(&mut hv, Complex64::new(-l, 0.0), v);
            norm(&hv)
        })
        .collect()
}

fn dense_spectrum(h: &OperatorMatrix, n_eigs: usize) -> Result<Spectrum> {
    let dense = h.to_dense();
    let dense = (&dense + dense.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = dense.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let norm_estimate = eig.eigenvalues.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let values: Vec<f64> = order[..n_eigs].iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors: Vec<Vec<Complex64>> = order[..n_eigs]
        .iter()
        .map(|&i| eig.eigenvectors.column(i).iter().copied().collect())
        .collect();
    let residuals = residuals_of(h, &values, &vectors);
    Ok(Spectrum {
        values,
        vectors,
        residuals,
        norm_estimate,
    })
}

/// Orthonormalizes `v` against `basis` (two classical Gram-Schmidt passes).
/// Returns `None` if nothing independent is left.
fn orthonormalize(basis: &[Vec<Complex64>], mut v: Vec<Complex64>) -> Option<Vec<Complex64>> {
    let start = norm(&v);
    if start == 0.0 {
        return None;
    }
    for _ in 0..2 {
        let coeffs: Vec<Complex64> = basis.par_iter().map(|b| dot(b, &v)).collect();
        for (b, c) in basis.iter().zip(coeffs) {
            axpy(&mut v, -c, b);
        }
    }
    let nv = norm(&v);
    if nv < 1e-10 * start {
        return None;
    }
    v.iter_mut().for_each(|x| *x /= nv);
    Some(v)
}

fn random_vector(n: usize, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
    (0..n)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect()
}

fn block_lanczos(h: &OperatorMatrix, n_eigs: usize, opts: &EigenOptions) -> Result<Spectrum> {
    let n = h.dim();
    let block = (n_eigs + 3).min(n);
    let max_basis = opts.max_basis.max(4 * block).min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut start: Vec<Vec<Complex64>> = (0..block).map(|_| random_vector(n, &mut rng)).collect();
    let mut best = f64::INFINITY;

    for _restart in 0..=opts.max_restarts {
        let mut space = Subspace::default();
        let mut pending = start.clone();
        let mut next_check = n_eigs + block;
        loop {
            let mut added = Vec::new();
            for v in pending.drain(..) {
                if space.len() == max_basis {
                    break;
                }
                let candidate = orthonormalize(&space.basis, v)
                    .or_else(|| orthonormalize(&space.basis, random_vector(n, &mut rng)));
                if let Some(q) = candidate {
                    let image = h.matvec(&q);
                    space.push(q, image);
                    added.push(space.len() - 1);
                }
            }
            let exhausted = added.is_empty() || space.len() == max_basis;
            if space.len() >= next_check || exhausted {
                next_check = space.len() + (4 * block).max(space.len() / 3);
                let ritz = space.ritz(n_eigs);
                let worst = ritz.max_relative_residual();
                best = best.min(worst);
                if worst < opts.tolerance || space.len() == n {
                    let residuals = residuals_of(h, &ritz.values, &ritz.vectors);
                    return Ok(Spectrum { residuals, ..ritz });
                }
            }
            if exhausted {
                break;
            }
            pending = added.iter().map(|&i| space.images[i].clone()).collect();
        }
        start = space.ritz(block.min(space.len())).vectors;
    }
    Err(Error::Convergence(format!(
        "block Lanczos did not reach relative residual {:e}; best {:e}",
        opts.tolerance, best
    )))
}

/// Orthonormal basis with its images under `H` and the projected matrix.
#[derive(Default)]
struct Subspace {
    basis: Vec<Vec<Complex64>>,
    images: Vec<Vec<Complex64>>,
    /// Row `i` holds `<v_i, H v_j>` for `j <= i`.
    projected: Vec<Vec<Complex64>>,
}

impl Subspace {
    fn len(&self) -> usize {
        self.basis.len()
    }

    fn push(&mut self, v: Vec<Complex64>, hv: Vec<Complex64>) {
        self.basis.push(v);
        self.images.push(hv);
        let i = self.basis.len() - 1;
        let row: Vec<Complex64> = (0..=i).into_par_iter().map(|j| dot(&self.basis[i], &self.images[j])).collect();
        self.projected.push(row);
    }

    fn ritz(&self, count: usize) -> Spectrum {
        let m = self.len();
        let t = DMatrix::from_fn(m, m, |i, j| {
            if j < i {
                self.projected[i][j]
            } else if j > i {
                self.projected[j][i].conj()
            } else {
                Complex64::new(self.projected[i][i].re, 0.0)
            }
        });
        let eig = t.symmetric_eigen();
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let norm_estimate = eig.eigenvalues.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
        let dim = self.basis[0].len();
        let pairs: Vec<(f64, Vec<Complex64>, f64)> = order
            .iter()
            .take(count)
            .collect::<Vec<_>>()
            .into_par_iter()
            .map(|&k| {
                let theta = eig.eigenvalues[k];
                let c = eig.eigenvectors.column(k);
                let mut y = vec![Complex64::new(0.0, 0.0); dim];
                let mut hy = vec![Complex64::new(0.0, 0.0); dim];
                for j in 0..m {
                    axpy(&mut y, c[j], &self.basis[j]);
                    axpy(&mut hy, c[j], &self.images[j]);
                }
                axpy(&mut hy, Complex64::new(-theta, 0.0), &y);
                (theta, y, norm(&hy))
            })
            .collect();
        let mut values = Vec::with_capacity(count);
        let mut vectors = Vec::with_capacity(count);
        let mut residuals = Vec::with_capacity(count);
        for (theta, y, r) in pairs {
            values.push(theta);
            vectors.push(y);
            residuals.push(r);
        }
        Spectrum {
            values,
            vectors,
            residuals,
            norm_estimate,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::operator::TripletBuilder;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn two_by_two_flip() {
        let h = OperatorMatrix::from_dense(&DMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)]), "x");
        let s = spectrum(&h, 2).unwrap();
        assert!((s.values[0] + 1.0).abs() < 1e-15 && (s.values[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn diagonal_operator_gives_sorted_diagonal() {
        let mut b = TripletBuilder::new(900);
        let diag: Vec<f64> = (0..900).map(|i| ((i * 7919) % 900) as f64 * 0.01 + 0.5).collect();
        for (i, d) in diag.iter().enumerate() {
            b.push(i, i, c(*d));
        }
        let h = b.build("diag");
        let s = spectrum(&h, 4).unwrap();
        let mut sorted = diag.clone();
        sorted.sort_by(f64::total_cmp);
        for i in 0..4 {
            assert!((s.values[i] - sorted[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn lanczos_agrees_with_dense_on_a_random_sparse_hermitian_matrix() {
        let n = 700;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut b = TripletBuilder::new(n);
        for i in 0..n {
            b.push(i, i, c(rng.gen_range(0.0..10.0)));
            for _ in 0..4 {
                let j = rng.gen_range(0..n);
                if j == i {
                    continue;
                }
                let v = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                b.push(i, j, v);
                b.push(j, i, v.conj());
            }
        }
        let h = b.build("random");
        let lanczos = spectrum(&h, 5).unwrap();
        let dense = dense_spectrum(&h, 5).unwrap();
        for i in 0..5 {
            assert!((lanczos.values[i] - dense.values[i]).abs() < 1e-9, "{i}");
            assert!(lanczos.residuals[i] < 1e-9 * lanczos.norm_estimate);
        }
    }

    #[test]
    fn degenerate_eigenvalues_are_all_found() {
        let n = 600;
        let mut b = TripletBuilder::new(n);
        for i in 0..n {
            let d = match i {
                10 | 200 | 400 => 0.5,
                _ => 1.0 + i as f64 * 0.01,
            };
            b.push(i, i, c(d));
        }
        let h = b.build("degenerate");
        let s = spectrum(&h, 4).unwrap();
        assert!((s.values[0] - 0.5).abs() < 1e-12);
        assert!((s.values[1] - 0.5).abs() < 1e-12);
        assert!((s.values[2] - 0.5).abs() < 1e-12);
        assert!((s.values[3] - 1.0).abs() < 1e-12);
    }
}
