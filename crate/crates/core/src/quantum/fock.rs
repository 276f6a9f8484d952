//! Truncated Fock space of one field mode.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

/// One harmonic mode of frequency `omega` truncated to `0..=n_max` photons.
///
/// `Q = (a + a^dag) / sqrt(2 omega)` and `P = i sqrt(omega/2) (a^dag - a)`
/// are built from the truncated ladder matrices.
#[derive(Clone, Debug)]
pub struct FockMode {
    omega: f64,
    n_max: usize,
    q_eigen: SymmetricEigen<f64, nalgebra::Dyn>,
}

impl FockMode {
    pub fn new(omega: f64, n_max: usize) -> Self {
        let a = annihilation(n_max);
        let q = (&a + a.transpose()) / (2.0 * omega).sqrt();
        Self {
            omega,
            n_max,
            q_eigen: q.symmetric_eigen(),
        }
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn dim(&self) -> usize {
        self.n_max + 1
    }

    pub fn annihilation(&self) -> DMatrix<Complex64> {
        to_complex(&annihilation(self.n_max))
    }

    pub fn creation(&self) -> DMatrix<Complex64> {
        self.annihilation().adjoint()
    }

    pub fn number(&self) -> DMatrix<Complex64> {
        DMatrix::from_diagonal(&DVector::from_fn(self.dim(), |n, _| Complex64::new(n as f64, 0.0)))
    }

    pub fn q(&self) -> DMatrix<Complex64> {
        let a = annihilation(self.n_max);
        to_complex(&((&a + a.transpose()) / (2.0 * self.omega).sqrt()))
    }

    pub fn p(&self) -> DMatrix<Complex64> {
        let a = self.annihilation();
        (a.adjoint() - a) * Complex64::new(0.0, (self.omega / 2.0).sqrt())
    }

    /// `omega (N + 1/2)`, the free mode Hamiltonian in normal-ordered form.
    pub fn free_hamiltonian(&self) -> DMatrix<Complex64> {
        DMatrix::from_diagonal(&DVector::from_fn(self.dim(), |n, _| {
            Complex64::new(self.omega * (n as f64 + 0.5), 0.0)
        }))
    }

    /// `exp(i alpha Q)` through the eigendecomposition of the truncated `Q`.
    /// `alpha = 0` gives the identity exactly.
    pub fn exp_iq(&self, alpha: f64) -> DMatrix<Complex64> {
        let d = self.dim();
        if alpha == 0.0 {
            return DMatrix::identity(d, d);
        }
        let v = &self.q_eigen.eigenvectors;
        let phases: Vec<Complex64> = self
            .q_eigen
            .eigenvalues
            .iter()
            .map(|l| Complex64::from_polar(1.0, alpha * l))
            .collect();
        DMatrix::from_fn(d, d, |i, j| (0..d).map(|k| phases[k] * v[(i, k)] * v[(j, k)]).sum())
    }
}

/// Truncated annihilation operator, `a|n> = sqrt(n)|n-1>`.
pub fn annihilation(n_max: usize) -> DMatrix<f64> {
    let d = n_max + 1;
    DMatrix::from_fn(d, d, |i, j| if j == i + 1 { (j as f64).sqrt() } else { 0.0 })
}

pub fn to_complex(m: &DMatrix<f64>) -> DMatrix<Complex64> {
    m.map(|v| Complex64::new(v, 0.0))
}

/// Kronecker product of a list of square matrices, first factor slowest.
pub fn kron_all(factors: &[DMatrix<Complex64>]) -> DMatrix<Complex64> {
    let mut out = DMatrix::from_element(1, 1, Complex64::new(1.0, 0.0));
    for f in factors {
        out = out.kronecker(f);
    }
    out
}

/// Generalized Laguerre polynomial `L_n^(alpha)(x)` by the three-term recurrence.
pub fn laguerre(n: usize, alpha: f64, x: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let mut prev = 1.0;
    let mut cur = 1.0 + alpha - x;
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 + alpha - x) * cur - (kf + alpha) * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// `<m| D(beta) |n>` of the untruncated displacement operator
/// `D(beta) = exp(beta a^dag - conj(beta) a)`.
pub fn displacement_element(m: usize, n: usize, beta: Complex64) -> Complex64 {
    let x = beta.norm_sqr();
    let gauss = (-0.5 * x).exp();
    let ln_fact = |k: usize| (1..=k).map(|i| (i as f64).ln()).sum::<f64>();
    if m >= n {
        let ratio = (0.5 * (ln_fact(n) - ln_fact(m))).exp();
        beta.powu((m - n) as u32) * (ratio * gauss * laguerre(n, (m - n) as f64, x))
    } else {
        let ratio = (0.5 * (ln_fact(m) - ln_fact(n))).exp();
        (-beta.conj()).powu((n - m) as u32) * (ratio * gauss * laguerre(m, (n - m) as f64, x))
    }
}
