//! Gauge specifications and the objects derived from them: transverse Green's
//! functions, gauge functions, vector potentials and polarization fields.
//!
//! A gauge is fixed by a Green's function `g(x, x')` with `div g = delta`.
//! Its longitudinal part is universal; the transverse part `g_T` is the free
//! choice. Given a transverse potential `A_T`, the gauge function is
//! `chi(x) = integral g_T(x', x) . A_T(x') dx'`, the potential is
//! `A = A_T + grad chi` and the polarization is
//! `P(x) = -integral g(x, x') rho(x') dx'`.
//!
//! Three families are provided:
//!
//! * Coulomb: `g_T = 0`.
//! * Poincare: `g_T(x, x') = -integral_0^1 dlambda x' . delta_T(x - lambda x')`,
//!   which makes `A` satisfy `x . A(x) = 0`. Its gauge function is not
//!   periodic, so it is evaluated pointwise from the plane-wave content of
//!   `A_T`, either in closed form or with Gauss-Legendre quadrature in lambda.
//! * Custom: a separable kernel read from a file, see [`custom`].

pub mod custom;
pub mod linefn;

use std::fmt;
use std::sync::Arc;

use ndarray::Array3;
use num_complex::Complex64;
use rayon::prelude::*;

pub use custom::CustomKernel;

use crate::charge::{smeared_point_charge, ChargeConfig};
use crate::error::{Error, Result};
use crate::field::{norm2, require_transverse, transverse_projector, ScalarField, VectorField};
use crate::lattice::Lattice;
use crate::modal::{ModalVector, VectorWave};
use crate::quadrature::gauss_legendre_unit;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Inputs must be transverse to this relative divergence.
pub const TRANSVERSE_INPUT_TOLERANCE: f64 = 1e-10;

/// Relative change between `n` and `2n` lambda nodes above which quadrature
/// results are reported as truncated.
pub const LAMBDA_REFINEMENT_TOLERANCE: f64 = 1e-8;

/// How the lambda integral of the line gauge is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LambdaMethod {
    /// Closed form per plane wave.
    Analytic,
    /// Gauss-Legendre quadrature with `n_lambda` nodes.
    Quadrature,
}

/// Parameters of the line-integral (Poincare) gauge.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Poincare {
    pub n_lambda: usize,
    pub method: LambdaMethod,
}

impl Default for Poincare {
    fn default() -> Self {
        Self {
            n_lambda: 32,
            method: LambdaMethod::Analytic,
        }
    }
}

impl Poincare {
    pub fn new(n_lambda: usize, method: LambdaMethod) -> Result<Self> {
        if n_lambda < 8 {
            return Err(Error::InvalidParameter(format!("n_lambda must be >= 8, got {n_lambda}")));
        }
        Ok(Self { n_lambda, method })
    }

    fn nodes(&self) -> (Vec<f64>, Vec<f64>) {
        gauss_legendre_unit(self.n_lambda)
    }
}

/// Choice of gauge.
#[derive(Clone, Debug)]
pub enum GaugeSpec {
    Coulomb,
    Poincare(Poincare),
    Custom(Arc<CustomKernel>),
}

impl fmt::Display for GaugeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GaugeSpec::Coulomb => write!(f, "coulomb"),
            GaugeSpec::Poincare(_) => write!(f, "poincare"),
            GaugeSpec::Custom(_) => write!(f, "custom"),
        }
    }
}

impl PartialEq for GaugeSpec {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (GaugeSpec::Coulomb, GaugeSpec::Coulomb) => true,
            (GaugeSpec::Poincare(a), GaugeSpec::Poincare(b)) => a == b,
            (GaugeSpec::Custom(a), GaugeSpec::Custom(b)) => Arc::ptr_eq(a, b),
            _ => false,
        }
    }
}

/// Value, gradient and Hessian of a scalar function at one point.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub grad: [f64; 3],
    pub hess: [[f64; 3]; 3],
}

impl Jet {
    fn accumulate(&mut self, other: &Jet, weight: f64) {
        self.value += weight * other.value;
        for i in 0..3 {
            self.grad[i] += weight * other.grad[i];
            for j in 0..3 {
                self.hess[i][j] += weight * other.hess[i][j];
            }
        }
    }
}

impl GaugeSpec {
    pub fn poincare() -> Self {
        GaugeSpec::Poincare(Poincare::default())
    }

    pub fn is_coulomb(&self) -> bool {
        matches!(self, GaugeSpec::Coulomb)
    }

    /// Gauge function of a single real plane wave `a(x)` at `x`, with
    /// derivatives. `a` must be transverse (`k . c = k . d = 0`).
    pub fn wave_jet(&self, wave: &VectorWave, x: [f64; 3]) -> Jet {
        match self {
            GaugeSpec::Coulomb => Jet::default(),
            GaugeSpec::Poincare(p) => match p.method {
                LambdaMethod::Analytic => line_jet_analytic(wave, x),
                LambdaMethod::Quadrature => {
                    let (nodes, weights) = p.nodes();
                    line_jet_quadrature(std::slice::from_ref(wave), x, &nodes, &weights)
                }
            },
            GaugeSpec::Custom(kernel) => {
                let overlaps = kernel.wave_overlaps(wave);
                let mut jet = Jet::default();
                for (t, ov) in kernel.terms().iter().zip(overlaps) {
                    if ov == 0.0 {
                        continue;
                    }
                    let w = t.w_modal();
                    let term = Jet {
                        value: w.eval(x),
                        grad: w.gradient(x),
                        hess: w.hessian(x),
                    };
                    jet.accumulate(&term, ov);
                }
                jet
            }
        }
    }

    /// Gauge function of a band-limited transverse field at `x`.
    pub fn jet(&self, a_t: &ModalVector, x: [f64; 3]) -> Jet {
        match self {
            GaugeSpec::Poincare(p) if p.method == LambdaMethod::Quadrature => {
                let (nodes, weights) = p.nodes();
                line_jet_quadrature(&a_t.waves, x, &nodes, &weights)
            }
            _ => {
                let mut jet = Jet::default();
                for w in &a_t.waves {
                    jet.accumulate(&self.wave_jet(w, x), 1.0);
                }
                jet
            }
        }
    }

    /// `A_g(x) = A_T(x) + grad chi(x)` at an arbitrary point.
    pub fn potential_at(&self, a_t: &ModalVector, x: [f64; 3]) -> [f64; 3] {
        let a = a_t.eval(x);
        let g = self.jet(a_t, x).grad;
        [a[0] + g[0], a[1] + g[1], a[2] + g[2]]
    }

    /// Gauge function `chi_g[A_T]` sampled on the lattice.
    pub fn gauge_function(&self, a_t: &VectorField) -> Result<ScalarField> {
        require_transverse(a_t, TRANSVERSE_INPUT_TOLERANCE)?;
        let lat = a_t.lattice();
        match self {
            GaugeSpec::Coulomb => Ok(ScalarField::zeros(lat)),
            GaugeSpec::Custom(kernel) => {
                lat.check_same(kernel.lattice())?;
                let mut chi = ScalarField::zeros(lat);
                for t in kernel.terms() {
                    chi = &chi + &t.w.scale(t.u.dot(a_t));
                }
                Ok(chi)
            }
            GaugeSpec::Poincare(p) => {
                let modal = ModalVector::from_field(a_t)?;
                self.check_refinement(p, &modal, lat)?;
                Ok(sample_pointwise(lat, |x| self.jet(&modal, x).value))
            }
        }
    }

    /// Vector potential `A_T + grad chi` sampled on the lattice.
    ///
    /// For the Poincare gauge the result is the pointwise potential, which
    /// is not periodic; spectral derivatives of it are meaningless.
    pub fn vector_potential(&self, a_t: &VectorField) -> Result<VectorField> {
        require_transverse(a_t, TRANSVERSE_INPUT_TOLERANCE)?;
        let lat = a_t.lattice();
        match self {
            GaugeSpec::Coulomb => Ok(a_t.clone()),
            GaugeSpec::Custom(_) => {
                let chi = self.gauge_function(a_t)?;
                Ok(a_t + &chi.gradient())
            }
            GaugeSpec::Poincare(p) => {
                let modal = ModalVector::from_field(a_t)?;
                self.check_refinement(p, &modal, lat)?;
                let grads = sample_vector_pointwise(lat, |x| self.jet(&modal, x).grad);
                Ok(a_t + &grads)
            }
        }
    }

    fn check_refinement(&self, p: &Poincare, modal: &ModalVector, lat: &Lattice) -> Result<()> {
        if p.method != LambdaMethod::Quadrature {
            return Ok(());
        }
        let (n1, w1) = gauss_legendre_unit(p.n_lambda);
        let (n2, w2) = gauss_legendre_unit(2 * p.n_lambda);
        let n = lat.n();
        let mut worst = 0.0_f64;
        let mut scale = 0.0_f64;
        for idx in [[0, 0, 0], [n - 1, n - 1, n - 1], [0, n - 1, n / 2], [n / 4, 3 * n / 4, 0]] {
            let x = lat.position(idx);
            let a = line_jet_quadrature(&modal.waves, x, &n1, &w1);
            let b = line_jet_quadrature(&modal.waves, x, &n2, &w2);
            worst = worst.max((a.value - b.value).abs());
            scale = scale.max(b.value.abs());
        }
        let rel = worst / scale.max(f64::MIN_POSITIVE);
        if rel > LAMBDA_REFINEMENT_TOLERANCE {
            return Err(Error::Truncation { residual: rel });
        }
        Ok(())
    }

    /// Transverse polarization `P_T` of the smeared two-charge system.
    pub fn transverse_polarization(&self, config: &ChargeConfig, lattice: &Lattice) -> Result<VectorField> {
        config.validate(lattice)?;
        match self {
            GaugeSpec::Coulomb => Ok(VectorField::zeros(lattice)),
            GaugeSpec::Poincare(p) => {
                let coeffs = line_polarization_coefficients(p, config, lattice, p.n_lambda);
                if p.method == LambdaMethod::Quadrature {
                    let refined = line_polarization_coefficients(p, config, lattice, 2 * p.n_lambda);
                    let (mut diff, mut scale) = (0.0_f64, 0.0_f64);
                    for d in 0..3 {
                        for (a, b) in coeffs[d].iter().zip(refined[d].iter()) {
                            diff = diff.max((a - b).norm());
                            scale = scale.max(b.norm());
                        }
                    }
                    let rel = diff / scale.max(f64::MIN_POSITIVE);
                    if rel > LAMBDA_REFINEMENT_TOLERANCE {
                        return Err(Error::Truncation { residual: rel });
                    }
                }
                Ok(VectorField::from_fourier(lattice, coeffs))
            }
            GaugeSpec::Custom(kernel) => {
                lattice.check_same(kernel.lattice())?;
                let mut point = VectorField::zeros(lattice);
                for t in kernel.terms() {
                    let wm = t.w_modal();
                    let weight = -config.q * (wm.eval(config.r) - wm.eval([0.0; 3]));
                    point = &point + &t.u.scale(weight);
                }
                let sigma = config.sigma;
                Ok(point.spectral_multiply(|k| Complex64::new(crate::charge::form_factor(sigma, k), 0.0)))
            }
        }
    }

    /// Full polarization `P = P_L + P_T`, with `P_L = grad phi` from the sampled density.
    pub fn polarization(&self, config: &ChargeConfig, lattice: &Lattice) -> Result<VectorField> {
        let p_l = longitudinal_polarization(config, lattice)?;
        let p_t = self.transverse_polarization(config, lattice)?;
        Ok(&p_l + &p_t)
    }

    /// Magnetization curl `J - dP/dt` for the electron moving with `velocity`.
    ///
    /// Computed from closed-form Fourier coefficients of the current and of
    /// the time derivative of the polarization.
    pub fn magnetization_curl(
        &self,
        config: &ChargeConfig,
        velocity: [f64; 3],
        lattice: &Lattice,
    ) -> Result<VectorField> {
        config.validate(lattice)?;
        let vol = lattice.volume();
        let q = config.q;
        let r = config.r;
        let custom_rates: Vec<(VectorField, f64)> = match self {
            GaugeSpec::Custom(kernel) => {
                lattice.check_same(kernel.lattice())?;
                kernel
                    .terms()
                    .iter()
                    .map(|t| {
                        let g = t.w_modal().gradient(r);
                        (t.u.clone(), -q * dot(g, velocity))
                    })
                    .collect()
            }
            _ => Vec::new(),
        };
        let custom_coeffs: Vec<[&Array3<Complex64>; 3]> = custom_rates
            .iter()
            .map(|(u, _)| [u.component(0).fourier(), u.component(1).fourier(), u.component(2).fourier()])
            .collect();
        let line = match self {
            GaugeSpec::Poincare(p) => Some(*p),
            _ => None,
        };
        let nodes = line.map(|p| p.nodes());
        let mut out = [
            Array3::zeros(lattice.shape()),
            Array3::zeros(lattice.shape()),
            Array3::zeros(lattice.shape()),
        ];
        for a in 0..lattice.n() {
            for b in 0..lattice.n() {
                for c in 0..lattice.n() {
                    let idx = [a, b, c];
                    if lattice.on_nyquist_plane(idx) {
                        continue;
                    }
                    let k = lattice.wavevector(idx);
                    let f = config.form_factor(k);
                    let kr = dot(k, r);
                    let kv = dot(k, velocity);
                    let e = Complex64::from_polar(q * f / vol, -kr);
                    let k2 = norm2(k);
                    let mut v = [Complex64::new(0.0, 0.0); 3];
                    for i in 0..3 {
                        // J - dP_L/dt
                        let j = e * velocity[i];
                        let pl_dot = if k2 > 0.0 { I * k[i] * (-I * kv * e) / k2 } else { Complex64::new(0.0, 0.0) };
                        v[i] = j - pl_dot;
                    }
                    if let Some(p) = line {
                        let (phi0, phi1) = match p.method {
                            LambdaMethod::Analytic => {
                                let d = linefn::phi_with_derivatives(-kr);
                                (d[0], d[1])
                            }
                            LambdaMethod::Quadrature => {
                                let (x, w) = nodes.as_ref().unwrap();
                                quadrature_phi(-kr, x, w)
                            }
                        };
                        let base = q * f / vol;
                        let raw: [Complex64; 3] =
                            [0, 1, 2].map(|i| base * (velocity[i] * phi0 - r[i] * kv * phi1));
                        let t = transverse_projector(k);
                        for i in 0..3 {
                            v[i] -= (0..3).map(|j| t[i][j] * raw[j]).sum::<Complex64>();
                        }
                    }
                    for (coeffs, (_, rate)) in custom_coeffs.iter().zip(&custom_rates) {
                        for i in 0..3 {
                            v[i] -= coeffs[i][idx] * (rate * f);
                        }
                    }
                    for i in 0..3 {
                        out[i][idx] = v[i];
                    }
                }
            }
        }
        Ok(VectorField::from_fourier(lattice, out))
    }
}

/// Longitudinal polarization `P_L = grad phi` with `-laplacian phi = rho`,
/// from the sampled smeared density.
pub fn longitudinal_polarization(config: &ChargeConfig, lattice: &Lattice) -> Result<VectorField> {
    let rho = smeared_point_charge(config, lattice)?;
    Ok(rho.inverse_laplacian().gradient())
}

/// Electrostatic energy `(1/2) L^3 sum_k |rho(k)|^2 / k^2`, the uniform mode excluded.
pub fn coulomb_energy(config: &ChargeConfig, lattice: &Lattice) -> Result<f64> {
    let rho = smeared_point_charge(config, lattice)?;
    let mut e = 0.0;
    for ((a, b, c), v) in rho.fourier().indexed_iter() {
        let k2 = norm2(lattice.wavevector([a, b, c]));
        if k2 > 0.0 {
            e += v.norm_sqr() / k2;
        }
    }
    Ok(0.5 * lattice.volume() * e)
}

/// Coulomb energy `V(r) = (1/2) integral P_L^2` of the electron at `r` and the
/// nucleus, as a function of `r`:
/// `V(r) = (q^2 / L^3) sum_k F(k)^2 (1 - cos k.r) / k^2`.
///
/// The sum runs over lattice wavevectors off the Nyquist planes; terms whose
/// weight is below `1e-30` of the prefactor are skipped.
#[derive(Clone, Debug)]
pub struct CoulombPotential {
    terms: Vec<([f64; 3], f64)>,
}

impl CoulombPotential {
    pub fn new(config: &ChargeConfig, lattice: &Lattice) -> Self {
        let n = lattice.n();
        let norm = config.q * config.q / lattice.volume();
        let mut terms = Vec::new();
        for i in 0..n {
            for j in 0..n {
                for l in 0..n {
                    let idx = [i, j, l];
                    if lattice.on_nyquist_plane(idx) {
                        continue;
                    }
                    let k = lattice.wavevector(idx);
                    let k2 = norm2(k);
                    if k2 == 0.0 {
                        continue;
                    }
                    let f = config.form_factor(k);
                    let w = norm * f * f / k2;
                    if w > 1e-30 * norm {
                        terms.push((k, w));
                    }
                }
            }
        }
        Self { terms }
    }

    pub fn value(&self, r: [f64; 3]) -> f64 {
        self.terms
            .iter()
            .map(|(k, w)| w * (1.0 - (k[0] * r[0] + k[1] * r[1] + k[2] * r[2]).cos()))
            .sum()
    }

    /// Value and gradient.
    pub fn eval(&self, r: [f64; 3]) -> (f64, [f64; 3]) {
        let mut v = 0.0;
        let mut g = [0.0; 3];
        for (k, w) in &self.terms {
            let phase = k[0] * r[0] + k[1] * r[1] + k[2] * r[2];
            v += w * (1.0 - phase.cos());
            let s = w * phase.sin();
            for d in 0..3 {
                g[d] += s * k[d];
            }
        }
        (v, g)
    }
}

/// Longitudinal Green's function `g_L(x, x') = -grad_x 1 / (4 pi |x - x'|)`
/// on the periodic lattice, i.e. the spectral multiplier `-ik/k^2`.
#[derive(Clone, Debug)]
pub struct LongitudinalGreen {
    lattice: Lattice,
}

pub fn green_longitudinal(lattice: &Lattice) -> LongitudinalGreen {
    LongitudinalGreen {
        lattice: lattice.clone(),
    }
}

impl LongitudinalGreen {
    /// `integral g_L(x, x') f(x') dx'`.
    pub fn apply(&self, f: &ScalarField) -> Result<VectorField> {
        self.lattice.check_same(f.lattice())?;
        Ok(f.inverse_laplacian().gradient().scale(-1.0))
    }

    /// `g_L(., source)` as a field of its first argument.
    pub fn column(&self, source: [f64; 3]) -> VectorField {
        let lat = &self.lattice;
        let vol = lat.volume();
        let comp = |d: usize| {
            Array3::from_shape_fn(lat.shape(), |(a, b, c)| {
                let k = lat.wavevector([a, b, c]);
                let k2 = norm2(k);
                if k2 == 0.0 || lat.on_nyquist_plane([a, b, c]) {
                    Complex64::new(0.0, 0.0)
                } else {
                    -I * k[d] / k2 * Complex64::from_polar(1.0 / vol, -dot(k, source))
                }
            })
        };
        VectorField::from_fourier(lat, [comp(0), comp(1), comp(2)])
    }
}

/// Transverse Green's function of the line gauge, one source point at a time.
#[derive(Clone, Debug)]
pub struct PoincareKernel {
    lattice: Lattice,
    params: Poincare,
}

pub fn poincare_gt(lattice: &Lattice, params: Poincare) -> PoincareKernel {
    PoincareKernel {
        lattice: lattice.clone(),
        params,
    }
}

impl PoincareKernel {
    /// `g_T(., source)` as a field of its first argument:
    /// Fourier coefficients `-T(k) source phi(-k.source) / L^3`.
    pub fn column(&self, source: [f64; 3]) -> VectorField {
        self.column_with(source, self.params.method, self.params.n_lambda)
    }

    pub fn column_with(&self, source: [f64; 3], method: LambdaMethod, n_lambda: usize) -> VectorField {
        let lat = &self.lattice;
        let vol = lat.volume();
        let nodes = gauss_legendre_unit(n_lambda.max(1));
        let mut out = [
            Array3::zeros(lat.shape()),
            Array3::zeros(lat.shape()),
            Array3::zeros(lat.shape()),
        ];
        for a in 0..lat.n() {
            for b in 0..lat.n() {
                for c in 0..lat.n() {
                    let idx = [a, b, c];
                    if lat.on_nyquist_plane(idx) {
                        continue;
                    }
                    let k = lat.wavevector(idx);
                    let s = -dot(k, source);
                    let ph = match method {
                        LambdaMethod::Analytic => linefn::phi(s),
                        LambdaMethod::Quadrature => quadrature_phi(s, &nodes.0, &nodes.1).0,
                    };
                    let t = transverse_projector(k);
                    for i in 0..3 {
                        let ts: f64 = (0..3).map(|j| t[i][j] * source[j]).sum();
                        out[i][idx] = -ph * ts / vol;
                    }
                }
            }
        }
        VectorField::from_fourier(lat, out)
    }
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// `(phi(s), phi'(s))` by quadrature.
fn quadrature_phi(s: f64, nodes: &[f64], weights: &[f64]) -> (Complex64, Complex64) {
    let mut p0 = Complex64::new(0.0, 0.0);
    let mut p1 = Complex64::new(0.0, 0.0);
    for (l, w) in nodes.iter().zip(weights) {
        let e = Complex64::from_polar(*w, l * s);
        p0 += e;
        p1 += I * l * e;
    }
    (p0, p1)
}

/// Line-gauge jet of one wave in closed form. With `w = c - i d` the wave is
/// `Re[w exp(ik.x)]` and `chi(x) = -Re[(x . w) phi(k.x)]`.
fn line_jet_analytic(wave: &VectorWave, x: [f64; 3]) -> Jet {
    let k = wave.k;
    let w: [Complex64; 3] = [0, 1, 2].map(|i| Complex64::new(wave.c[i], -wave.d[i]));
    let xw: Complex64 = (0..3).map(|i| w[i] * x[i]).sum();
    let [p0, p1, p2] = linefn::phi_with_derivatives(dot(k, x));
    let mut jet = Jet {
        value: -(xw * p0).re,
        ..Jet::default()
    };
    for i in 0..3 {
        jet.grad[i] = -(w[i] * p0 + xw * p1 * k[i]).re;
        for j in 0..3 {
            jet.hess[i][j] = -((w[i] * k[j] + w[j] * k[i]) * p1 + xw * p2 * k[i] * k[j]).re;
        }
    }
    jet
}

/// Line-gauge jet by quadrature: `chi(x) = -sum_j w_j x . a(lambda_j x)`.
fn line_jet_quadrature(waves: &[VectorWave], x: [f64; 3], nodes: &[f64], weights: &[f64]) -> Jet {
    let mut jet = Jet::default();
    for (&l, &wt) in nodes.iter().zip(weights) {
        let y = x.map(|v| l * v);
        for wave in waves {
            let a = wave.eval(y);
            let jac = wave.jacobian(y);
            let hes = wave.hessian(y);
            jet.value -= wt * dot(x, a);
            for i in 0..3 {
                let xj: f64 = (0..3).map(|m| x[m] * jac[m][i]).sum();
                jet.grad[i] -= wt * (a[i] + l * xj);
                for j in 0..3 {
                    let xh: f64 = (0..3).map(|m| x[m] * hes[m][i][j]).sum();
                    jet.hess[i][j] -= wt * (l * (jac[i][j] + jac[j][i]) + l * l * xh);
                }
            }
        }
    }
    jet
}

/// Fourier coefficients of the smeared line-gauge `P_T`:
/// `q F(k) T(k) r phi(-k.r) / L^3`.
fn line_polarization_coefficients(
    p: &Poincare,
    config: &ChargeConfig,
    lattice: &Lattice,
    n_lambda: usize,
) -> [Array3<Complex64>; 3] {
    let method = p.method;
    let nodes = gauss_legendre_unit(n_lambda);
    let vol = lattice.volume();
    let r = config.r;
    let mut out = [
        Array3::zeros(lattice.shape()),
        Array3::zeros(lattice.shape()),
        Array3::zeros(lattice.shape()),
    ];
    for a in 0..lattice.n() {
        for b in 0..lattice.n() {
            for c in 0..lattice.n() {
                let idx = [a, b, c];
                if lattice.on_nyquist_plane(idx) {
                    continue;
                }
                let k = lattice.wavevector(idx);
                let s = -dot(k, r);
                let ph = match method {
                    LambdaMethod::Analytic => linefn::phi(s),
                    LambdaMethod::Quadrature => quadrature_phi(s, &nodes.0, &nodes.1).0,
                };
                let base = ph * (config.q * config.form_factor(k) / vol);
                let t = transverse_projector(k);
                for i in 0..3 {
                    let tr: f64 = (0..3).map(|j| t[i][j] * r[j]).sum();
                    out[i][idx] = base * tr;
                }
            }
        }
    }
    out
}

fn sample_pointwise(lat: &Lattice, f: impl Fn([f64; 3]) -> f64 + Sync) -> ScalarField {
    let n = lat.n();
    let values: Vec<f64> = (0..lat.num_sites())
        .into_par_iter()
        .map(|s| f(lat.position([s / (n * n), (s / n) % n, s % n])))
        .collect();
    ScalarField::from_samples(lat, Array3::from_shape_vec(lat.shape(), values).expect("shape"))
}

fn sample_vector_pointwise(lat: &Lattice, f: impl Fn([f64; 3]) -> [f64; 3] + Sync) -> VectorField {
    let n = lat.n();
    let values: Vec<[f64; 3]> = (0..lat.num_sites())
        .into_par_iter()
        .map(|s| f(lat.position([s / (n * n), (s / n) % n, s % n])))
        .collect();
    let comp = |d: usize| {
        ScalarField::from_samples(
            lat,
            Array3::from_shape_vec(lat.shape(), values.iter().map(|v| v[d]).collect()).expect("shape"),
        )
    };
    VectorField::from_components(vec![comp(0), comp(1), comp(2)])
}

#[cfg(test)]
mod tests;
