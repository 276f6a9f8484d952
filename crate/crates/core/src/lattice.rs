//! Periodic cubic lattice and its spectral transforms.
//!
//! Sites are indexed `0..n` along each axis and sit at physical positions
//! `x_j = (j - n/2) h`, so the origin (where the nucleus lives) is the site
//! `(n/2, n/2, n/2)` in the middle of the box.
//!
//! Fourier coefficients follow the convention
//! `c(k) = N^-3 sum_j f(x_j) exp(-i k.x_j)`, so that
//! `f(x_j) = sum_k c(k) exp(i k.x_j)` and `integral |f|^2 = L^3 sum |c|^2`.

use std::fmt;
use std::sync::Arc;

use ndarray::{Array3, Axis};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

struct Inner {
    n: usize,
    length: f64,
    /// One-dimensional wavenumber table. The Nyquist entry is zero.
    k1d: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

/// Periodic cubic lattice with `n` sites per axis and box length `L`.
#[derive(Clone)]
pub struct Lattice {
    inner: Arc<Inner>,
}

impl fmt::Debug for Lattice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Lattice")
            .field("n", &self.inner.n)
            .field("length", &self.inner.length)
            .finish()
    }
}

impl PartialEq for Lattice {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.inner.n == other.inner.n && self.inner.length == other.inner.length)
    }
}

impl Lattice {
    /// Builds a lattice. `n` must be even and at least 4, `length` positive and finite.
    pub fn new(n: usize, length: f64) -> Result<Self> {
        if n < 4 || n % 2 != 0 {
            return Err(Error::InvalidLattice(format!(
                "n must be even and >= 4, got {n}"
            )));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidLattice(format!(
                "box length must be positive and finite, got {length}"
            )));
        }
        let dk = 2.0 * std::f64::consts::PI / length;
        let k1d = (0..n)
            .map(|j| {
                let m = signed_index(j, n);
                if 2 * j == n {
                    0.0
                } else {
                    dk * m as f64
                }
            })
            .collect();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        Ok(Self {
            inner: Arc::new(Inner {
                n,
                length,
                k1d,
                forward,
                inverse,
            }),
        })
    }

    pub fn n(&self) -> usize {
        self.inner.n
    }

    pub fn length(&self) -> f64 {
        self.inner.length
    }

    /// Lattice spacing `h = L / n`.
    pub fn spacing(&self) -> f64 {
        self.inner.length / self.inner.n as f64
    }

    pub fn volume(&self) -> f64 {
        self.inner.length.powi(3)
    }

    /// Volume element `h^3` of the site quadrature.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(3)
    }

    pub fn num_sites(&self) -> usize {
        self.inner.n.pow(3)
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.inner.n, self.inner.n, self.inner.n)
    }

    /// Index of the site at the physical origin.
    pub fn origin_index(&self) -> [usize; 3] {
        let c = self.inner.n / 2;
        [c, c, c]
    }

    pub fn coordinate(&self, j: usize) -> f64 {
        (j as f64 - (self.inner.n / 2) as f64) * self.spacing()
    }

    pub fn position(&self, idx: [usize; 3]) -> [f64; 3] {
        [
            self.coordinate(idx[0]),
            self.coordinate(idx[1]),
            self.coordinate(idx[2]),
        ]
    }

    /// Signed integer wave index `m` in `-n/2..n/2` for array index `j`.
    pub fn wave_index(&self, j: usize) -> i64 {
        signed_index(j, self.inner.n)
    }

    /// Array index holding the signed wave index `m`.
    pub fn array_index(&self, m: i64) -> usize {
        m.rem_euclid(self.inner.n as i64) as usize
    }

    pub fn is_nyquist(&self, j: usize) -> bool {
        2 * j == self.inner.n
    }

    /// True if any component of the array index sits on a Nyquist plane.
    /// Closed-form coefficients of smooth (smeared) fields are set to zero there.
    pub fn on_nyquist_plane(&self, idx: [usize; 3]) -> bool {
        idx.iter().any(|&j| self.is_nyquist(j))
    }

    /// Table wavevector used by all spectral operators.
    ///
    /// Nyquist components are mapped to zero, which keeps `k(-m) = -k(m)`
    /// and makes spectral derivatives of real fields real.
    pub fn wavevector(&self, idx: [usize; 3]) -> [f64; 3] {
        let k = &self.inner.k1d;
        [k[idx[0]], k[idx[1]], k[idx[2]]]
    }

    /// Wavevector `2 pi m / L` for an integer triple.
    pub fn wavevector_of(&self, m: [i64; 3]) -> [f64; 3] {
        let dk = 2.0 * std::f64::consts::PI / self.inner.length;
        [dk * m[0] as f64, dk * m[1] as f64, dk * m[2] as f64]
    }

    /// Largest table wavenumber magnitude along one axis.
    pub fn max_wavenumber(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.inner.length * ((self.inner.n / 2 - 1) as f64)
    }

    /// Forward transform: samples to Fourier coefficients.
    pub fn forward(&self, samples: &Array3<f64>) -> Array3<Complex64> {
        let mut data = samples.mapv(|v| Complex64::new(v, 0.0));
        self.forward_complex_in_place(&mut data);
        data
    }

    /// Forward transform of complex samples, in place.
    pub fn forward_complex_in_place(&self, data: &mut Array3<Complex64>) {
        self.transform_axes(data, &self.inner.forward);
        let norm = 1.0 / self.num_sites() as f64;
        for ((i, j, k), c) in data.indexed_iter_mut() {
            let sign = if (i + j + k) % 2 == 0 { norm } else { -norm };
            *c *= sign;
        }
    }

    /// Inverse transform of complex coefficients, in place.
    pub fn inverse_complex_in_place(&self, data: &mut Array3<Complex64>) {
        for ((i, j, k), c) in data.indexed_iter_mut() {
            if (i + j + k) % 2 == 1 {
                *c = -*c;
            }
        }
        self.transform_axes(data, &self.inner.inverse);
    }

    /// Inverse transform, keeping the real part of the synthesized samples.
    pub fn inverse_real(&self, coeffs: &Array3<Complex64>) -> Array3<f64> {
        let mut data = coeffs.clone();
        self.inverse_complex_in_place(&mut data);
        data.mapv(|c| c.re)
    }

    fn transform_axes(&self, data: &mut Array3<Complex64>, fft: &Arc<dyn Fft<f64>>) {
        let n = self.inner.n;
        let mut buffer = vec![Complex64::new(0.0, 0.0); n];
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        for axis in 0..3 {
            for mut lane in data.lanes_mut(Axis(axis)) {
                for (b, v) in buffer.iter_mut().zip(lane.iter()) {
                    *b = *v;
                }
                fft.process_with_scratch(&mut buffer, &mut scratch);
                for (v, b) in lane.iter_mut().zip(buffer.iter()) {
                    *v = *b;
                }
            }
        }
    }

    pub(crate) fn check_same(&self, other: &Lattice) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::LatticeMismatch {
                left_n: self.n(),
                left_l: self.length(),
                right_n: other.n(),
                right_l: other.length(),
            })
        }
    }
}

fn signed_index(j: usize, n: usize) -> i64 {
    if j < n / 2 {
        j as i64
    } else {
        j as i64 - n as i64
    }
}
