//! Real orthonormal mode functions on the periodic box.
//!
//! Complex Fourier modes `e^{ik.x}` and `e^{-ik.x}` are replaced by the real
//! pair `sqrt(2/L^3) cos(k.x)` and `sqrt(2/L^3) sin(k.x)`, one pair per
//! wavevector in the half space. This keeps all canonical coordinates real,
//! which is equivalent to imposing the reality condition `c(-k) = conj c(k)`.

use crate::error::{Error, Result};
use crate::field::VectorField;
use crate::lattice::Lattice;
use crate::modal::{ScalarWave, VectorWave};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Parity {
    Cos,
    Sin,
}

/// Half-space integer wavevectors sorted by `|m|^2`, ties broken so that
/// `(1,0,0)` precedes `(0,1,0)` precedes `(0,0,1)`.
pub fn half_space_wavevectors(max_index: i64) -> Vec<[i64; 3]> {
    let mut out = Vec::new();
    for mx in -max_index..=max_index {
        for my in -max_index..=max_index {
            for mz in -max_index..=max_index {
                let positive = mx > 0 || (mx == 0 && (my > 0 || (my == 0 && mz > 0)));
                if positive {
                    out.push([mx, my, mz]);
                }
            }
        }
    }
    out.sort_by(|a, b| {
        let na = a[0] * a[0] + a[1] * a[1] + a[2] * a[2];
        let nb = b[0] * b[0] + b[1] * b[1] + b[2] * b[2];
        na.cmp(&nb).then(b.cmp(a))
    });
    out
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Orthonormal triad `(e1, e2, k_hat)` with `e1, e2` transverse to `k`.
///
/// `e1` is the normalized component of the coordinate axis least aligned
/// with `k` that is orthogonal to `k`, and `e2 = k_hat x e1`.
pub fn polarization_triad(k: [f64; 3]) -> [[f64; 3]; 3] {
    let kn = dot(k, k).sqrt();
    let khat = k.map(|v| v / kn);
    let mut axis = 0;
    for d in 1..3 {
        if khat[d].abs() < khat[axis].abs() {
            axis = d;
        }
    }
    let mut helper = [0.0; 3];
    helper[axis] = 1.0;
    let proj = dot(helper, khat);
    let e1 = [0, 1, 2].map(|i| helper[i] - proj * khat[i]);
    let n1 = dot(e1, e1).sqrt();
    let e1 = e1.map(|v| v / n1);
    let e2 = cross(khat, e1);
    [e1, e2, khat]
}

/// Real scalar mode `sqrt(2/L^3) cos(k.x)` or `sqrt(2/L^3) sin(k.x)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalarMode {
    pub m: [i64; 3],
    pub k: [f64; 3],
    pub parity: Parity,
    pub norm: f64,
}

impl ScalarMode {
    pub fn eval(&self, x: [f64; 3]) -> f64 {
        let p = dot(self.k, x);
        self.norm
            * match self.parity {
                Parity::Cos => p.cos(),
                Parity::Sin => p.sin(),
            }
    }

    pub fn gradient(&self, x: [f64; 3]) -> [f64; 3] {
        let p = dot(self.k, x);
        let d = self.norm
            * match self.parity {
                Parity::Cos => -p.sin(),
                Parity::Sin => p.cos(),
            };
        self.k.map(|k| d * k)
    }

    pub fn k2(&self) -> f64 {
        dot(self.k, self.k)
    }

    pub fn as_wave(&self, amplitude: f64) -> ScalarWave {
        let (c, d) = match self.parity {
            Parity::Cos => (self.norm * amplitude, 0.0),
            Parity::Sin => (0.0, self.norm * amplitude),
        };
        ScalarWave { m: self.m, k: self.k, c, d }
    }

    /// The vector field `f(x) a` as a plane wave.
    pub fn vector_wave(&self, a: [f64; 3]) -> VectorWave {
        let (c, d) = match self.parity {
            Parity::Cos => (a.map(|v| self.norm * v), [0.0; 3]),
            Parity::Sin => ([0.0; 3], a.map(|v| self.norm * v)),
        };
        VectorWave { m: self.m, k: self.k, c, d }
    }
}

/// The `count` lowest real scalar modes (cos/sin pairs, so `count` is even).
pub fn lowest_scalar_modes(lattice: &Lattice, count: usize) -> Result<Vec<ScalarMode>> {
    if count == 0 || count % 2 != 0 {
        return Err(Error::InvalidParameter(format!(
            "scalar mode count must be a positive even number, got {count}"
        )));
    }
    let max_index = (lattice.n() / 2 - 1) as i64;
    let wavevectors = half_space_wavevectors(max_index);
    if count / 2 > wavevectors.len() {
        return Err(Error::InvalidParameter(format!("lattice supports at most {} modes", 2 * wavevectors.len())));
    }
    let norm = (2.0 / lattice.volume()).sqrt();
    Ok(wavevectors[..count / 2]
        .iter()
        .flat_map(|&m| {
            let k = lattice.wavevector_of(m);
            [Parity::Cos, Parity::Sin].map(|parity| ScalarMode { m, k, parity, norm })
        })
        .collect())
}

/// Real transverse mode `u(x) = sqrt(2/L^3) e_lambda cos(k.x)` (or `sin`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransverseMode {
    pub scalar: ScalarMode,
    pub polarization: usize,
    pub e: [f64; 3],
}

impl TransverseMode {
    pub fn new(lattice: &Lattice, m: [i64; 3], polarization: usize, parity: Parity) -> Result<Self> {
        if m == [0, 0, 0] || polarization > 1 {
            return Err(Error::InvalidParameter(format!(
                "transverse mode needs m != 0 and polarization 0 or 1, got {m:?}, {polarization}"
            )));
        }
        let half = (lattice.n() / 2) as i64;
        if m.iter().any(|v| v.abs() >= half) {
            return Err(Error::InvalidParameter(format!("wave index {m:?} beyond the lattice band")));
        }
        let k = lattice.wavevector_of(m);
        let e = polarization_triad(k)[polarization];
        Ok(Self {
            scalar: ScalarMode {
                m,
                k,
                parity,
                norm: (2.0 / lattice.volume()).sqrt(),
            },
            polarization,
            e,
        })
    }

    pub fn k(&self) -> [f64; 3] {
        self.scalar.k
    }

    pub fn omega(&self) -> f64 {
        self.scalar.k2().sqrt()
    }

    pub fn eval(&self, x: [f64; 3]) -> [f64; 3] {
        let f = self.scalar.eval(x);
        self.e.map(|v| f * v)
    }

    /// `curl u` at `x`.
    pub fn curl(&self, x: [f64; 3]) -> [f64; 3] {
        cross(self.scalar.gradient(x), self.e)
    }

    pub fn wave(&self) -> VectorWave {
        self.scalar.vector_wave(self.e)
    }
}

/// Ordered set of transverse modes.
#[derive(Clone, Debug)]
pub struct ModeSet {
    lattice: Lattice,
    modes: Vec<TransverseMode>,
}

impl ModeSet {
    /// The `count` lowest real transverse modes: for each wavevector in
    /// order, polarization 1 then 2, each as a cos/sin pair.
    pub fn lowest(lattice: &Lattice, count: usize) -> Result<Self> {
        if count == 0 {
            return Err(Error::InvalidParameter("mode count must be positive".into()));
        }
        let max_index = (lattice.n() / 2 - 1) as i64;
        let mut modes = Vec::with_capacity(count);
        'outer: for m in half_space_wavevectors(max_index) {
            for pol in 0..2 {
                for parity in [Parity::Cos, Parity::Sin] {
                    if modes.len() == count {
                        break 'outer;
                    }
                    modes.push(TransverseMode::new(lattice, m, pol, parity)?);
                }
            }
        }
        if modes.len() < count {
            return Err(Error::InvalidParameter(format!("lattice supports only {} modes", modes.len())));
        }
        Ok(Self {
            lattice: lattice.clone(),
            modes,
        })
    }

    pub fn from_modes(lattice: &Lattice, modes: Vec<TransverseMode>) -> Self {
        Self {
            lattice: lattice.clone(),
            modes,
        }
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn modes(&self) -> &[TransverseMode] {
        &self.modes
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn max_omega(&self) -> f64 {
        self.modes.iter().map(|m| m.omega()).fold(0.0, f64::max)
    }

    /// Coefficients `integral u_m . V` by site quadrature.
    pub fn project(&self, v: &VectorField) -> Vec<f64> {
        self.modes
            .iter()
            .map(|mode| {
                let u = VectorField::from_fn(&self.lattice, |x| mode.eval(x));
                u.dot(v)
            })
            .collect()
    }

    /// `sum_m c_m u_m` on the lattice.
    pub fn synthesize(&self, coeffs: &[f64]) -> VectorField {
        VectorField::from_fn(&self.lattice, |x| {
            let mut out = [0.0; 3];
            for (mode, c) in self.modes.iter().zip(coeffs) {
                let u = mode.eval(x);
                for d in 0..3 {
                    out[d] += c * u[d];
                }
            }
            out
        })
    }
}
