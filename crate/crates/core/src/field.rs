//! Scalar, vector and symmetric-tensor fields sampled on a [`Lattice`], with
//! spectral differential operators and the Helmholtz decomposition.

use std::ops::{Add, Mul, Neg, Sub};
use std::sync::OnceLock;

use ndarray::{Array3, Zip};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::Lattice;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Real scalar field with a lazily computed Fourier representation.
#[derive(Clone, Debug)]
pub struct ScalarField {
    lattice: Lattice,
    samples: Array3<f64>,
    fourier: OnceLock<Array3<Complex64>>,
}

impl ScalarField {
    pub fn zeros(lattice: &Lattice) -> Self {
        Self::from_samples(lattice, Array3::zeros(lattice.shape()))
    }

    /// Wraps sample values. Panics if the array shape does not match the lattice.
    pub fn from_samples(lattice: &Lattice, samples: Array3<f64>) -> Self {
        assert_eq!(samples.dim(), lattice.shape(), "sample array shape mismatch");
        Self {
            lattice: lattice.clone(),
            samples,
            fourier: OnceLock::new(),
        }
    }

    /// Samples a function of the physical position at every site.
    pub fn from_fn(lattice: &Lattice, f: impl Fn([f64; 3]) -> f64) -> Self {
        let samples = Array3::from_shape_fn(lattice.shape(), |(i, j, k)| f(lattice.position([i, j, k])));
        Self::from_samples(lattice, samples)
    }

    /// Synthesizes a real field from Fourier coefficients. Any anti-Hermitian
    /// part of `coeffs` is discarded.
    pub fn from_fourier(lattice: &Lattice, coeffs: &Array3<Complex64>) -> Self {
        Self::from_samples(lattice, lattice.inverse_real(coeffs))
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn samples(&self) -> &Array3<f64> {
        &self.samples
    }

    pub fn into_samples(self) -> Array3<f64> {
        self.samples
    }

    pub fn get(&self, idx: [usize; 3]) -> f64 {
        self.samples[idx]
    }

    /// Fourier coefficients `c(k)`, computed on first use.
    pub fn fourier(&self) -> &Array3<Complex64> {
        self.fourier.get_or_init(|| self.lattice.forward(&self.samples))
    }

    /// Site-quadrature integral `h^3 sum f`.
    pub fn integral(&self) -> f64 {
        self.samples.sum() * self.lattice.cell_volume()
    }

    /// Integral inner product `h^3 sum f g`.
    pub fn dot(&self, other: &ScalarField) -> f64 {
        self.lattice.check_same(&other.lattice).expect("dot product");
        Zip::from(&self.samples)
            .and(&other.samples)
            .fold(0.0, |acc, a, b| acc + a * b)
            * self.lattice.cell_volume()
    }

    /// Integral L2 norm `sqrt(integral f^2)`.
    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Same norm evaluated from Fourier coefficients: `sqrt(L^3 sum |c|^2)`.
    pub fn spectral_norm(&self) -> f64 {
        (self.fourier().iter().map(|c| c.norm_sqr()).sum::<f64>() * self.lattice.volume()).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn rms(&self) -> f64 {
        (self.samples.iter().map(|v| v * v).sum::<f64>() / self.lattice.num_sites() as f64).sqrt()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_samples(&self.lattice, self.samples.mapv(f))
    }

    pub fn scale(&self, a: f64) -> Self {
        self.map(|v| a * v)
    }

    /// Applies a multiplier `m(k)` in Fourier space.
    pub fn spectral_multiply(&self, m: impl Fn([f64; 3]) -> Complex64) -> Self {
        let lat = &self.lattice;
        let mut coeffs = self.fourier().clone();
        for ((a, b, c), v) in coeffs.indexed_iter_mut() {
            *v *= m(lat.wavevector([a, b, c]));
        }
        Self::from_fourier(lat, &coeffs)
    }

    /// Spectral gradient `ik f(k)`.
    pub fn gradient(&self) -> VectorField {
        let lat = &self.lattice;
        let c = self.fourier();
        let comps: Vec<ScalarField> = (0..3)
            .map(|d| {
                let coeffs = Array3::from_shape_fn(lat.shape(), |(a, b, e)| {
                    I * lat.wavevector([a, b, e])[d] * c[[a, b, e]]
                });
                ScalarField::from_fourier(lat, &coeffs)
            })
            .collect();
        VectorField::from_components(comps)
    }

    /// Solves `-laplacian phi = self` spectrally. Zero modes of the table
    /// wavevector are set to zero.
    pub fn inverse_laplacian(&self) -> Self {
        self.spectral_multiply(|k| {
            let k2 = norm2(k);
            if k2 == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(1.0 / k2, 0.0)
            }
        })
    }

    /// Relative weight of Fourier content on the Nyquist planes.
    pub fn nyquist_weight(&self) -> f64 {
        let lat = &self.lattice;
        let mut total = 0.0;
        let mut nyq = 0.0;
        for ((a, b, c), v) in self.fourier().indexed_iter() {
            let w = v.norm_sqr();
            total += w;
            if lat.is_nyquist(a) || lat.is_nyquist(b) || lat.is_nyquist(c) {
                nyq += w;
            }
        }
        if total == 0.0 {
            0.0
        } else {
            (nyq / total).sqrt()
        }
    }
}

impl Add for &ScalarField {
    type Output = ScalarField;
    fn add(self, rhs: &ScalarField) -> ScalarField {
        self.lattice.check_same(&rhs.lattice).expect("field addition");
        ScalarField::from_samples(&self.lattice, &self.samples + &rhs.samples)
    }
}

impl Sub for &ScalarField {
    type Output = ScalarField;
    fn sub(self, rhs: &ScalarField) -> ScalarField {
        self.lattice.check_same(&rhs.lattice).expect("field subtraction");
        ScalarField::from_samples(&self.lattice, &self.samples - &rhs.samples)
    }
}

impl Neg for &ScalarField {
    type Output = ScalarField;
    fn neg(self) -> ScalarField {
        self.scale(-1.0)
    }
}

impl Mul<&ScalarField> for f64 {
    type Output = ScalarField;
    fn mul(self, rhs: &ScalarField) -> ScalarField {
        rhs.scale(self)
    }
}

/// Real three-component vector field.
#[derive(Clone, Debug)]
pub struct VectorField {
    lattice: Lattice,
    comps: [ScalarField; 3],
}

impl VectorField {
    pub fn zeros(lattice: &Lattice) -> Self {
        let z = ScalarField::zeros(lattice);
        Self {
            lattice: lattice.clone(),
            comps: [z.clone(), z.clone(), z],
        }
    }

    /// Builds from three components. Panics unless there are exactly three on one lattice.
    pub fn from_components(comps: Vec<ScalarField>) -> Self {
        let [x, y, z]: [ScalarField; 3] = comps.try_into().expect("three components");
        x.lattice.check_same(&y.lattice).expect("component lattice");
        x.lattice.check_same(&z.lattice).expect("component lattice");
        Self {
            lattice: x.lattice.clone(),
            comps: [x, y, z],
        }
    }

    pub fn from_fn(lattice: &Lattice, f: impl Fn([f64; 3]) -> [f64; 3]) -> Self {
        let mut arrays = [
            Array3::zeros(lattice.shape()),
            Array3::zeros(lattice.shape()),
            Array3::zeros(lattice.shape()),
        ];
        for i in 0..lattice.n() {
            for j in 0..lattice.n() {
                for k in 0..lattice.n() {
                    let v = f(lattice.position([i, j, k]));
                    for d in 0..3 {
                        arrays[d][[i, j, k]] = v[d];
                    }
                }
            }
        }
        let [a, b, c] = arrays;
        Self::from_components(vec![
            ScalarField::from_samples(lattice, a),
            ScalarField::from_samples(lattice, b),
            ScalarField::from_samples(lattice, c),
        ])
    }

    /// Synthesizes from per-component Fourier coefficients.
    pub fn from_fourier(lattice: &Lattice, coeffs: [Array3<Complex64>; 3]) -> Self {
        let [a, b, c] = coeffs;
        Self::from_components(vec![
            ScalarField::from_fourier(lattice, &a),
            ScalarField::from_fourier(lattice, &b),
            ScalarField::from_fourier(lattice, &c),
        ])
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn component(&self, d: usize) -> &ScalarField {
        &self.comps[d]
    }

    pub fn components(&self) -> &[ScalarField; 3] {
        &self.comps
    }

    pub fn get(&self, idx: [usize; 3]) -> [f64; 3] {
        [self.comps[0].get(idx), self.comps[1].get(idx), self.comps[2].get(idx)]
    }

    /// Fourier coefficient vector at array index `idx`.
    pub fn fourier_at(&self, idx: [usize; 3]) -> [Complex64; 3] {
        [
            self.comps[0].fourier()[idx],
            self.comps[1].fourier()[idx],
            self.comps[2].fourier()[idx],
        ]
    }

    pub fn dot(&self, other: &VectorField) -> f64 {
        (0..3).map(|d| self.comps[d].dot(&other.comps[d])).sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn spectral_norm(&self) -> f64 {
        self.comps.iter().map(|c| c.spectral_norm().powi(2)).sum::<f64>().sqrt()
    }

    /// Largest pointwise Euclidean length.
    pub fn max_abs(&self) -> f64 {
        let mut m = 0.0_f64;
        Zip::from(self.comps[0].samples())
            .and(self.comps[1].samples())
            .and(self.comps[2].samples())
            .for_each(|a, b, c| m = m.max((a * a + b * b + c * c).sqrt()));
        m
    }

    /// Root-mean-square of the pointwise Euclidean length.
    pub fn rms(&self) -> f64 {
        self.comps.iter().map(|c| c.rms().powi(2)).sum::<f64>().sqrt()
    }

    pub fn scale(&self, a: f64) -> Self {
        Self::from_components(self.comps.iter().map(|c| c.scale(a)).collect())
    }

    /// Applies the same scalar multiplier to every component in Fourier space.
    pub fn spectral_multiply(&self, m: impl Fn([f64; 3]) -> Complex64 + Copy) -> Self {
        Self::from_components(self.comps.iter().map(|c| c.spectral_multiply(m)).collect())
    }

    /// Applies a 3x3 matrix multiplier `M(k) . V(k)`.
    pub fn tensor_multiply(&self, m: impl Fn([f64; 3]) -> [[Complex64; 3]; 3]) -> Self {
        let lat = &self.lattice;
        let c: Vec<&Array3<Complex64>> = self.comps.iter().map(|c| c.fourier()).collect();
        let mut out = [
            Array3::zeros(lat.shape()),
            Array3::zeros(lat.shape()),
            Array3::zeros(lat.shape()),
        ];
        for a in 0..lat.n() {
            for b in 0..lat.n() {
                for e in 0..lat.n() {
                    let idx = [a, b, e];
                    let mk = m(lat.wavevector(idx));
                    for i in 0..3 {
                        out[i][idx] = (0..3).map(|j| mk[i][j] * c[j][idx]).sum();
                    }
                }
            }
        }
        Self::from_fourier(lat, out)
    }

    /// Spectral divergence `i k . V(k)`.
    pub fn divergence(&self) -> ScalarField {
        let lat = &self.lattice;
        let c: Vec<&Array3<Complex64>> = self.comps.iter().map(|c| c.fourier()).collect();
        let coeffs = Array3::from_shape_fn(lat.shape(), |(a, b, e)| {
            let k = lat.wavevector([a, b, e]);
            I * (k[0] * c[0][[a, b, e]] + k[1] * c[1][[a, b, e]] + k[2] * c[2][[a, b, e]])
        });
        ScalarField::from_fourier(lat, &coeffs)
    }

    /// Spectral curl `i k x V(k)`.
    pub fn curl(&self) -> VectorField {
        let lat = &self.lattice;
        let c: Vec<&Array3<Complex64>> = self.comps.iter().map(|c| c.fourier()).collect();
        let comp = |d: usize| {
            let (p, q) = ((d + 1) % 3, (d + 2) % 3);
            Array3::from_shape_fn(lat.shape(), |(a, b, e)| {
                let k = lat.wavevector([a, b, e]);
                I * (k[p] * c[q][[a, b, e]] - k[q] * c[p][[a, b, e]])
            })
        };
        Self::from_fourier(lat, [comp(0), comp(1), comp(2)])
    }

    /// Splits into transverse and longitudinal parts, `(V_T, V_L)`.
    ///
    /// Modes whose table wavevector vanishes (the uniform mode and the
    /// purely-Nyquist modes) are assigned to the transverse part.
    pub fn helmholtz(&self) -> (VectorField, VectorField) {
        let longitudinal = self.tensor_multiply(|k| longitudinal_projector(k).map(|r| r.map(Complex64::from)));
        let transverse = self - &longitudinal;
        (transverse, longitudinal)
    }

    pub fn transverse_part(&self) -> VectorField {
        self.helmholtz().0
    }

    pub fn longitudinal_part(&self) -> VectorField {
        self.helmholtz().1
    }

    /// `||div V|| / (||grad V|| scale)`: relative divergence, zero for a transverse field.
    pub fn relative_divergence(&self) -> f64 {
        let norm = self.norm();
        if norm == 0.0 {
            return 0.0;
        }
        let kmax = self.lattice.max_wavenumber() * 3f64.sqrt();
        self.divergence().norm() / (kmax * norm)
    }

    pub fn nyquist_weight(&self) -> f64 {
        self.comps.iter().map(|c| c.nyquist_weight()).fold(0.0, f64::max)
    }
}

impl Add for &VectorField {
    type Output = VectorField;
    fn add(self, rhs: &VectorField) -> VectorField {
        VectorField::from_components((0..3).map(|d| &self.comps[d] + &rhs.comps[d]).collect())
    }
}

impl Sub for &VectorField {
    type Output = VectorField;
    fn sub(self, rhs: &VectorField) -> VectorField {
        VectorField::from_components((0..3).map(|d| &self.comps[d] - &rhs.comps[d]).collect())
    }
}

impl Neg for &VectorField {
    type Output = VectorField;
    fn neg(self) -> VectorField {
        self.scale(-1.0)
    }
}

/// Symmetric rank-2 tensor field, used for the transverse and longitudinal
/// delta kernels. Components are stored as `xx, yy, zz, xy, xz, yz`.
#[derive(Clone, Debug)]
pub struct SymTensorField {
    lattice: Lattice,
    comps: [ScalarField; 6],
}

const SYM_PAIRS: [(usize, usize); 6] = [(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)];

fn sym_slot(i: usize, j: usize) -> usize {
    match (i.min(j), i.max(j)) {
        (0, 0) => 0,
        (1, 1) => 1,
        (2, 2) => 2,
        (0, 1) => 3,
        (0, 2) => 4,
        _ => 5,
    }
}

impl SymTensorField {
    /// Builds the kernel whose Fourier coefficients are `m_ij(k) / L^3`.
    pub fn from_multiplier(lattice: &Lattice, m: impl Fn([f64; 3]) -> [[f64; 3]; 3]) -> Self {
        let inv_vol = 1.0 / lattice.volume();
        let mut arrays: Vec<Array3<Complex64>> = (0..6).map(|_| Array3::zeros(lattice.shape())).collect();
        for a in 0..lattice.n() {
            for b in 0..lattice.n() {
                for e in 0..lattice.n() {
                    let mk = m(lattice.wavevector([a, b, e]));
                    for (s, &(i, j)) in SYM_PAIRS.iter().enumerate() {
                        arrays[s][[a, b, e]] = Complex64::new(mk[i][j] * inv_vol, 0.0);
                    }
                }
            }
        }
        let comps: Vec<ScalarField> = arrays.iter().map(|c| ScalarField::from_fourier(lattice, c)).collect();
        Self {
            lattice: lattice.clone(),
            comps: comps.try_into().expect("six components"),
        }
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn component(&self, i: usize, j: usize) -> &ScalarField {
        &self.comps[sym_slot(i, j)]
    }

    pub fn get(&self, idx: [usize; 3]) -> [[f64; 3]; 3] {
        let mut out = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                out[i][j] = self.component(i, j).get(idx);
            }
        }
        out
    }

    /// Convolution `(K * V)_i(x) = integral K_ij(x - y) V_j(y) dy`, evaluated
    /// with the convolution theorem.
    pub fn convolve(&self, v: &VectorField) -> Result<VectorField> {
        self.lattice.check_same(v.lattice())?;
        let lat = &self.lattice;
        let vol = lat.volume();
        let kc: Vec<&Array3<Complex64>> = self.comps.iter().map(|c| c.fourier()).collect();
        let vc: Vec<&Array3<Complex64>> = v.components().iter().map(|c| c.fourier()).collect();
        let out: Vec<Array3<Complex64>> = (0..3)
            .map(|i| {
                Array3::from_shape_fn(lat.shape(), |(a, b, e)| {
                    (0..3)
                        .map(|j| kc[sym_slot(i, j)][[a, b, e]] * vc[j][[a, b, e]])
                        .sum::<Complex64>()
                        * vol
                })
            })
            .collect();
        let [x, y, z]: [Array3<Complex64>; 3] = out.try_into().expect("three");
        Ok(VectorField::from_fourier(lat, [x, y, z]))
    }
}

/// Longitudinal delta kernel with Fourier coefficients `k_i k_j / k^2 / L^3`.
pub fn longitudinal_delta(lattice: &Lattice) -> SymTensorField {
    SymTensorField::from_multiplier(lattice, longitudinal_projector)
}

/// Transverse delta kernel `delta_ij delta(x) - longitudinal delta`.
pub fn transverse_delta(lattice: &Lattice) -> SymTensorField {
    SymTensorField::from_multiplier(lattice, transverse_projector)
}

/// `k_i k_j / k^2`, or zero when `k` vanishes.
pub fn longitudinal_projector(k: [f64; 3]) -> [[f64; 3]; 3] {
    let k2 = norm2(k);
    let mut out = [[0.0; 3]; 3];
    if k2 > 0.0 {
        for i in 0..3 {
            for j in 0..3 {
                out[i][j] = k[i] * k[j] / k2;
            }
        }
    }
    out
}

/// `delta_ij - k_i k_j / k^2`, the identity when `k` vanishes.
pub fn transverse_projector(k: [f64; 3]) -> [[f64; 3]; 3] {
    let l = longitudinal_projector(k);
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = if i == j { 1.0 } else { 0.0 } - l[i][j];
        }
    }
    out
}

pub(crate) fn norm2(k: [f64; 3]) -> f64 {
    k[0] * k[0] + k[1] * k[1] + k[2] * k[2]
}

/// Errors unless the field is transverse to `tolerance` (relative divergence).
pub fn require_transverse(v: &VectorField, tolerance: f64) -> Result<()> {
    let residual = v.relative_divergence();
    if residual > tolerance {
        Err(Error::NotTransverse { residual, tolerance })
    } else {
        Ok(())
    }
}
