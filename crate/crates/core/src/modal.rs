//! Band-limited fields as explicit sums of real plane waves.
//!
//! A lattice field is determined by its samples, but gauge functions such as
//! the line-integral one are not periodic and must be evaluated at arbitrary
//! points. Converting a field to a list of waves
//! `a(x) = c cos(k.x) + d sin(k.x)` gives an exact interpolant that can be
//! evaluated (with derivatives) anywhere.

use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::lattice::Lattice;

/// Relative Nyquist-plane weight above which a field is rejected.
pub const NYQUIST_TOLERANCE: f64 = 1e-12;

/// One real vector plane wave `c cos(k.x) + d sin(k.x)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VectorWave {
    pub m: [i64; 3],
    pub k: [f64; 3],
    pub c: [f64; 3],
    pub d: [f64; 3],
}

/// One real scalar plane wave `c cos(k.x) + d sin(k.x)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalarWave {
    pub m: [i64; 3],
    pub k: [f64; 3],
    pub c: f64,
    pub d: f64,
}

fn phase(k: [f64; 3], x: [f64; 3]) -> f64 {
    k[0] * x[0] + k[1] * x[1] + k[2] * x[2]
}

impl VectorWave {
    pub fn eval(&self, x: [f64; 3]) -> [f64; 3] {
        let (s, c) = phase(self.k, x).sin_cos();
        [0, 1, 2].map(|i| self.c[i] * c + self.d[i] * s)
    }

    /// Jacobian `J[i][j] = d a_i / d x_j`.
    pub fn jacobian(&self, x: [f64; 3]) -> [[f64; 3]; 3] {
        let (s, c) = phase(self.k, x).sin_cos();
        let mut j = [[0.0; 3]; 3];
        for i in 0..3 {
            let f = -self.c[i] * s + self.d[i] * c;
            for l in 0..3 {
                j[i][l] = f * self.k[l];
            }
        }
        j
    }

    /// Second derivatives `H[i][j][l] = d^2 a_i / dx_j dx_l`.
    pub fn hessian(&self, x: [f64; 3]) -> [[[f64; 3]; 3]; 3] {
        let (s, c) = phase(self.k, x).sin_cos();
        let mut h = [[[0.0; 3]; 3]; 3];
        for i in 0..3 {
            let f = -(self.c[i] * c + self.d[i] * s);
            for j in 0..3 {
                for l in 0..3 {
                    h[i][j][l] = f * self.k[j] * self.k[l];
                }
            }
        }
        h
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self {
            c: self.c.map(|v| a * v),
            d: self.d.map(|v| a * v),
            ..*self
        }
    }
}

impl ScalarWave {
    pub fn eval(&self, x: [f64; 3]) -> f64 {
        let (s, c) = phase(self.k, x).sin_cos();
        self.c * c + self.d * s
    }

    pub fn gradient(&self, x: [f64; 3]) -> [f64; 3] {
        let (s, c) = phase(self.k, x).sin_cos();
        let f = -self.c * s + self.d * c;
        self.k.map(|k| f * k)
    }

    pub fn hessian(&self, x: [f64; 3]) -> [[f64; 3]; 3] {
        let (s, c) = phase(self.k, x).sin_cos();
        let f = -(self.c * c + self.d * s);
        let mut h = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                h[i][j] = f * self.k[i] * self.k[j];
            }
        }
        h
    }
}

/// Visits the half-space of array indices: the uniform mode plus every index
/// whose signed wave index is lexicographically positive. Nyquist planes are
/// skipped. The callback receives the array index, the signed wave index and
/// whether the index is the uniform mode.
fn for_half_space(lattice: &Lattice, mut f: impl FnMut([usize; 3], [i64; 3], bool)) {
    let n = lattice.n();
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                if lattice.is_nyquist(a) || lattice.is_nyquist(b) || lattice.is_nyquist(c) {
                    continue;
                }
                let m = [lattice.wave_index(a), lattice.wave_index(b), lattice.wave_index(c)];
                let zero = m == [0, 0, 0];
                let positive = m[0] > 0 || (m[0] == 0 && (m[1] > 0 || (m[1] == 0 && m[2] > 0)));
                if zero || positive {
                    f([a, b, c], m, zero);
                }
            }
        }
    }
}

/// Vector field stored as a list of plane waves.
#[derive(Clone, Debug, Default)]
pub struct ModalVector {
    pub waves: Vec<VectorWave>,
}

impl ModalVector {
    /// Converts a lattice field. Waves whose amplitude is below `1e-15` of the
    /// largest are dropped; Nyquist-plane content is an error.
    pub fn from_field(field: &VectorField) -> Result<Self> {
        let weight = field.nyquist_weight();
        if weight > NYQUIST_TOLERANCE {
            return Err(Error::NyquistContent { weight });
        }
        let lat = field.lattice();
        let coeffs: Vec<_> = field.components().iter().map(|c| c.fourier()).collect();
        let mut waves = Vec::new();
        let mut largest = 0.0_f64;
        for_half_space(lat, |idx, m, zero| {
            let a = [coeffs[0][idx], coeffs[1][idx], coeffs[2][idx]];
            let (c, d) = if zero {
                (a.map(|v| v.re), [0.0; 3])
            } else {
                (a.map(|v| 2.0 * v.re), a.map(|v| -2.0 * v.im))
            };
            let amp = c.iter().chain(d.iter()).fold(0.0_f64, |s, v| s.max(v.abs()));
            largest = largest.max(amp);
            waves.push((amp, VectorWave { m, k: lat.wavevector_of(m), c, d }));
        });
        let cut = 1e-15 * largest;
        Ok(Self {
            waves: waves.into_iter().filter(|(a, _)| *a > cut).map(|(_, w)| w).collect(),
        })
    }

    pub fn eval(&self, x: [f64; 3]) -> [f64; 3] {
        let mut out = [0.0; 3];
        for w in &self.waves {
            let v = w.eval(x);
            for i in 0..3 {
                out[i] += v[i];
            }
        }
        out
    }

    pub fn jacobian(&self, x: [f64; 3]) -> [[f64; 3]; 3] {
        let mut out = [[0.0; 3]; 3];
        for w in &self.waves {
            let j = w.jacobian(x);
            for a in 0..3 {
                for b in 0..3 {
                    out[a][b] += j[a][b];
                }
            }
        }
        out
    }

    pub fn curl(&self, x: [f64; 3]) -> [f64; 3] {
        let j = self.jacobian(x);
        [j[2][1] - j[1][2], j[0][2] - j[2][0], j[1][0] - j[0][1]]
    }
}

/// Scalar field stored as a list of plane waves.
#[derive(Clone, Debug, Default)]
pub struct ModalScalar {
    pub waves: Vec<ScalarWave>,
}

impl ModalScalar {
    pub fn from_field(field: &ScalarField) -> Result<Self> {
        let weight = field.nyquist_weight();
        if weight > NYQUIST_TOLERANCE {
            return Err(Error::NyquistContent { weight });
        }
        let lat = field.lattice();
        let coeffs = field.fourier();
        let mut waves = Vec::new();
        let mut largest = 0.0_f64;
        for_half_space(lat, |idx, m, zero| {
            let a = coeffs[idx];
            let (c, d) = if zero { (a.re, 0.0) } else { (2.0 * a.re, -2.0 * a.im) };
            let amp = c.abs().max(d.abs());
            largest = largest.max(amp);
            waves.push((amp, ScalarWave { m, k: lat.wavevector_of(m), c, d }));
        });
        let cut = 1e-15 * largest;
        Ok(Self {
            waves: waves.into_iter().filter(|(a, _)| *a > cut).map(|(_, w)| w).collect(),
        })
    }

    pub fn eval(&self, x: [f64; 3]) -> f64 {
        self.waves.iter().map(|w| w.eval(x)).sum()
    }

    pub fn gradient(&self, x: [f64; 3]) -> [f64; 3] {
        let mut out = [0.0; 3];
        for w in &self.waves {
            let g = w.gradient(x);
            for i in 0..3 {
                out[i] += g[i];
            }
        }
        out
    }

    pub fn hessian(&self, x: [f64; 3]) -> [[f64; 3]; 3] {
        let mut out = [[0.0; 3]; 3];
        for w in &self.waves {
            let h = w.hessian(x);
            for i in 0..3 {
                for j in 0..3 {
                    out[i][j] += h[i][j];
                }
            }
        }
        out
    }
}
