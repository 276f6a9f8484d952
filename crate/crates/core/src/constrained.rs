//! Finite-mode extended phase space with the constraints of the gauge theory
//! and the Dirac bracket built from them.
//!
//! Fields are expanded in the `M` lowest real scalar modes `f_alpha` (see
//! [`crate::modes`]): `A(x) = sum a_alpha f_alpha(x)`, likewise for the
//! conjugate momentum `Pi~ = -E`, the scalar potential `A_0` and its momentum
//! `Pi~_0`. The phase-space vector is laid out as all coordinates followed by
//! all momenta:
//!
//! `z = [r(3), a(3M), a0(M) | p(3), pi(3M), pi0(M)]`.
//!
//! Constraints, projected on each retained mode:
//!
//! * `C0_alpha = pi0_alpha`
//! * `C1_alpha = integral f_alpha (div Pi~ + rho)` (Gauss law)
//! * `C2_alpha = integral f_alpha(x) integral g(x', x) . A(x') dx' dx` (gauge condition)
//!
//! `C0` is imposed directly (first class); the Dirac bracket is formed from
//! the `2M` second-class constraints `C1`, `C2`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::charge::ChargeConfig;
use crate::error::{Error, Result};
use crate::field::{transverse_projector, ScalarField};
use crate::gauge::GaugeSpec;
use crate::lattice::Lattice;
use crate::modal::ModalScalar;
use crate::modes::{lowest_scalar_modes, Parity, ScalarMode};

/// Condition number above which the constraint matrix is rejected.
pub const MAX_CONDITION: f64 = 1e12;

/// Relative tolerance for "on the constraint surface".
pub const ON_SHELL_TOLERANCE: f64 = 1e-10;

/// Point of the extended phase space.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseCoordinates {
    pub r: [f64; 3],
    pub p: [f64; 3],
    pub a: Vec<[f64; 3]>,
    pub pi: Vec<[f64; 3]>,
    pub a0: Vec<f64>,
    pub pi0: Vec<f64>,
}

impl PhaseCoordinates {
    pub fn zeros(modes: usize) -> Self {
        Self {
            r: [0.0; 3],
            p: [0.0; 3],
            a: vec![[0.0; 3]; modes],
            pi: vec![[0.0; 3]; modes],
            a0: vec![0.0; modes],
            pi0: vec![0.0; modes],
        }
    }

    pub fn modes(&self) -> usize {
        self.a.len()
    }

    /// Number of canonical pairs, `3 + 4M`.
    pub fn half_dim(&self) -> usize {
        half_dim(self.modes())
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let m = self.modes();
        let mut z = Vec::with_capacity(2 * half_dim(m));
        z.extend_from_slice(&self.r);
        self.a.iter().for_each(|v| z.extend_from_slice(v));
        z.extend_from_slice(&self.a0);
        z.extend_from_slice(&self.p);
        self.pi.iter().for_each(|v| z.extend_from_slice(v));
        z.extend_from_slice(&self.pi0);
        z
    }

    pub fn from_vec(modes: usize, z: &[f64]) -> Self {
        assert_eq!(z.len(), 2 * half_dim(modes), "phase vector length");
        let mut it = z.iter().copied();
        let take3 = |it: &mut dyn Iterator<Item = f64>| [it.next().unwrap(), it.next().unwrap(), it.next().unwrap()];
        let r = take3(&mut it);
        let a = (0..modes).map(|_| take3(&mut it)).collect();
        let a0 = (0..modes).map(|_| it.next().unwrap()).collect();
        let p = take3(&mut it);
        let pi = (0..modes).map(|_| take3(&mut it)).collect();
        let pi0 = (0..modes).map(|_| it.next().unwrap()).collect();
        Self { r, p, a, pi, a0, pi0 }
    }

    /// Random state with entries uniform in `[-scale, scale]` and `r` inside
    /// `[-r_max, r_max]^3`.
    pub fn random<R: Rng>(modes: usize, scale: f64, r_max: f64, rng: &mut R) -> Self {
        let mut z: Vec<f64> = (0..2 * half_dim(modes)).map(|_| rng.gen_range(-scale..scale)).collect();
        for i in 0..3 {
            z[i] = rng.gen_range(-r_max..r_max);
        }
        Self::from_vec(modes, &z)
    }
}

fn half_dim(modes: usize) -> usize {
    3 + 4 * modes
}

/// Index helpers into the flattened phase vector.
pub mod index {
    use super::half_dim;

    pub fn r(i: usize) -> usize {
        i
    }
    pub fn a(modes: usize, alpha: usize, i: usize) -> usize {
        let _ = modes;
        3 + 3 * alpha + i
    }
    pub fn a0(modes: usize, alpha: usize) -> usize {
        3 + 3 * modes + alpha
    }
    pub fn p(modes: usize, i: usize) -> usize {
        half_dim(modes) + i
    }
    pub fn pi(modes: usize, alpha: usize, i: usize) -> usize {
        half_dim(modes) + 3 + 3 * alpha + i
    }
    pub fn pi0(modes: usize, alpha: usize) -> usize {
        half_dim(modes) + 3 + 3 * modes + alpha
    }
}

/// A differentiable function on phase space.
pub trait Functional: Sync {
    fn value(&self, z: &PhaseCoordinates) -> f64;

    /// Gradient in the flattened layout. Defaults to central differences.
    fn gradient(&self, z: &PhaseCoordinates) -> Vec<f64> {
        finite_difference_gradient(|s| self.value(s), z)
    }
}

/// Central-difference gradient with step `1e-6 * max(1, |z_i|)`.
pub fn finite_difference_gradient(f: impl Fn(&PhaseCoordinates) -> f64, z: &PhaseCoordinates) -> Vec<f64> {
    let m = z.modes();
    let base = z.to_vec();
    let mut grad = vec![0.0; base.len()];
    let mut work = base.clone();
    for i in 0..base.len() {
        let h = 1e-6 * base[i].abs().max(1.0);
        work[i] = base[i] + h;
        let fp = f(&PhaseCoordinates::from_vec(m, &work));
        work[i] = base[i] - h;
        let fm = f(&PhaseCoordinates::from_vec(m, &work));
        work[i] = base[i];
        grad[i] = (fp - fm) / (2.0 * h);
    }
    grad
}

/// Affine functional `w . z + c`.
#[derive(Clone, Debug)]
pub struct Linear {
    pub weights: Vec<f64>,
    pub constant: f64,
}

impl Linear {
    /// The coordinate function `z_index`.
    pub fn coordinate(dim: usize, index: usize) -> Self {
        let mut weights = vec![0.0; dim];
        weights[index] = 1.0;
        Self { weights, constant: 0.0 }
    }

    pub fn random<R: Rng>(dim: usize, rng: &mut R) -> Self {
        Self {
            weights: (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            constant: 0.0,
        }
    }
}

impl Functional for Linear {
    fn value(&self, z: &PhaseCoordinates) -> f64 {
        self.weights.iter().zip(z.to_vec()).map(|(w, v)| w * v).sum::<f64>() + self.constant
    }
    fn gradient(&self, _z: &PhaseCoordinates) -> Vec<f64> {
        self.weights.clone()
    }
}

/// Functional given by a closure, differentiated numerically.
pub struct FnFunctional<F: Fn(&PhaseCoordinates) -> f64 + Sync>(pub F);

impl<F: Fn(&PhaseCoordinates) -> f64 + Sync> Functional for FnFunctional<F> {
    fn value(&self, z: &PhaseCoordinates) -> f64 {
        (self.0)(z)
    }
}

/// Pointwise product of two functionals, with the product-rule gradient.
pub struct Product<'a>(pub &'a dyn Functional, pub &'a dyn Functional);

impl Functional for Product<'_> {
    fn value(&self, z: &PhaseCoordinates) -> f64 {
        self.0.value(z) * self.1.value(z)
    }
    fn gradient(&self, z: &PhaseCoordinates) -> Vec<f64> {
        let (f, g) = (self.0.value(z), self.1.value(z));
        let (df, dg) = (self.0.gradient(z), self.1.gradient(z));
        df.iter().zip(&dg).map(|(a, b)| a * g + f * b).collect()
    }
}

/// `grad_f^T J grad_g` with `J = [[0, I], [-I, 0]]`.
pub fn symplectic_product(df: &[f64], dg: &[f64]) -> f64 {
    let half = df.len() / 2;
    (0..half).map(|i| df[i] * dg[i + half] - df[i + half] * dg[i]).sum()
}

/// Canonical Poisson bracket `{f, g}`.
pub fn poisson(f: &dyn Functional, g: &dyn Functional, z: &PhaseCoordinates) -> f64 {
    symplectic_product(&f.gradient(z), &g.gradient(z))
}

/// Inverts a constraint matrix, rejecting it if its condition number exceeds [`MAX_CONDITION`].
pub fn invert_constraints(c: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let sv = c.clone().svd(false, false).singular_values;
    let max = sv.iter().cloned().fold(0.0_f64, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    let condition = if min == 0.0 { f64::INFINITY } else { max / min };
    if !(condition <= MAX_CONDITION) {
        return Err(Error::DegenerateGauge { condition });
    }
    c.clone()
        .try_inverse()
        .ok_or(Error::DegenerateGauge { condition })
}

/// Constraint family for one gauge, charge and mode truncation.
pub struct ConstraintSet {
    lattice: Lattice,
    charge: ChargeConfig,
    spec: GaugeSpec,
    modes: Vec<ScalarMode>,
    /// `d[alpha][gamma][i] = integral d_i f_alpha f_gamma`.
    d: Vec<Vec<[f64; 3]>>,
    /// `g[alpha][gamma][j] = integral f_alpha(x) integral f_gamma(x') g_j(x', x)`.
    g: Vec<Vec<[f64; 3]>>,
    /// Transverse-kernel profiles `chi_g[(f_gamma e_j)_T]` sampled on the lattice, index `3 gamma + j`.
    chi: Vec<Vec<f64>>,
}

impl ConstraintSet {
    /// Builds the constraint family on the `modes` lowest scalar modes.
    pub fn new(lattice: &Lattice, spec: &GaugeSpec, charge: &ChargeConfig, modes: usize) -> Result<Self> {
        charge.validate(lattice)?;
        let modes = lowest_scalar_modes(lattice, modes)?;
        let mc = modes.len();
        let mut d = vec![vec![[0.0; 3]; mc]; mc];
        for (alpha, fa) in modes.iter().enumerate() {
            for (gamma, fg) in modes.iter().enumerate() {
                if fa.m != fg.m {
                    continue;
                }
                let sign = match (fa.parity, fg.parity) {
                    (Parity::Cos, Parity::Sin) => -1.0,
                    (Parity::Sin, Parity::Cos) => 1.0,
                    _ => 0.0,
                };
                d[alpha][gamma] = fa.k.map(|k| sign * k);
            }
        }

        let n = lattice.n();
        let positions: Vec<[f64; 3]> = (0..lattice.num_sites())
            .map(|s| lattice.position([s / (n * n), (s / n) % n, s % n]))
            .collect();
        let mut chi = Vec::with_capacity(3 * mc);
        for fg in &modes {
            let t = transverse_projector(fg.k);
            for j in 0..3 {
                let amp = [t[0][j], t[1][j], t[2][j]];
                let wave = fg.vector_wave(amp);
                let samples: Vec<f64> = if spec.is_coulomb() {
                    vec![0.0; positions.len()]
                } else {
                    use rayon::prelude::*;
                    positions.par_iter().map(|&x| spec.wave_jet(&wave, x).value).collect()
                };
                chi.push(samples);
            }
        }

        let dv = lattice.cell_volume();
        let mut g = vec![vec![[0.0; 3]; mc]; mc];
        for (alpha, fa) in modes.iter().enumerate() {
            let fa_samples: Vec<f64> = positions.iter().map(|&x| fa.eval(x)).collect();
            for (gamma, fg) in modes.iter().enumerate() {
                for j in 0..3 {
                    let longitudinal = if fa.m == fg.m { d[gamma][alpha][j] / fg.k2() } else { 0.0 };
                    let transverse: f64 = fa_samples
                        .iter()
                        .zip(&chi[3 * gamma + j])
                        .map(|(a, b)| a * b)
                        .sum::<f64>()
                        * dv;
                    g[alpha][gamma][j] = longitudinal + transverse;
                }
            }
        }

        Ok(Self {
            lattice: lattice.clone(),
            charge: *charge,
            spec: spec.clone(),
            modes,
            d,
            g,
            chi,
        })
    }

    pub fn modes(&self) -> &[ScalarMode] {
        &self.modes
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn spec(&self) -> &GaugeSpec {
        &self.spec
    }

    pub fn charge(&self) -> &ChargeConfig {
        &self.charge
    }

    pub fn dim(&self) -> usize {
        2 * half_dim(self.len())
    }

    /// Projected smeared density `rho_alpha(r) = q F_alpha (f_alpha(r) - f_alpha(0))`.
    pub fn rho(&self, alpha: usize, r: [f64; 3]) -> f64 {
        let f = &self.modes[alpha];
        self.charge.q * self.charge.form_factor(f.k) * (f.eval(r) - f.eval([0.0; 3]))
    }

    fn rho_gradient(&self, alpha: usize, r: [f64; 3]) -> [f64; 3] {
        let f = &self.modes[alpha];
        let s = self.charge.q * self.charge.form_factor(f.k);
        f.gradient(r).map(|v| s * v)
    }

    pub fn c0(&self, alpha: usize) -> Linear {
        Linear::coordinate(self.dim(), index::pi0(self.len(), alpha))
    }

    pub fn c1(&self, alpha: usize) -> GaussConstraint<'_> {
        GaussConstraint { set: self, alpha }
    }

    pub fn c2(&self, alpha: usize) -> Linear {
        let m = self.len();
        let mut weights = vec![0.0; self.dim()];
        for gamma in 0..m {
            for j in 0..3 {
                weights[index::a(m, gamma, j)] = self.g[alpha][gamma][j];
            }
        }
        Linear { weights, constant: 0.0 }
    }

    /// Largest constraint violation `max |C1|, |C2|`, relative to the state scale.
    pub fn violation(&self, z: &PhaseCoordinates) -> f64 {
        let scale = z.to_vec().iter().fold(1.0_f64, |m, v| m.max(v.abs()));
        (0..self.len())
            .map(|a| self.c1(a).value(z).abs().max(self.c2(a).value(z).abs()))
            .fold(0.0, f64::max)
            / scale
    }

    /// Gradients of the second-class constraints `C1_0..C1_M, C2_0..C2_M`.
    fn constraint_gradients(&self, z: &PhaseCoordinates) -> Vec<Vec<f64>> {
        let m = self.len();
        (0..m)
            .map(|a| self.c1(a).gradient(z))
            .chain((0..m).map(|a| self.c2(a).weights))
            .collect()
    }

    /// The `2M x 2M` matrix of brackets `{C_a, C_b}` over `(C1, C2)`.
    pub fn constraint_matrix(&self, z: &PhaseCoordinates) -> DMatrix<f64> {
        let grads = self.constraint_gradients(z);
        let n = grads.len();
        DMatrix::from_fn(n, n, |a, b| symplectic_product(&grads[a], &grads[b]))
    }

    /// Prepares Dirac brackets at `z`.
    pub fn dirac(&self, z: &PhaseCoordinates) -> Result<DiracBracket> {
        let grads = self.constraint_gradients(z);
        let n = grads.len();
        let c = DMatrix::from_fn(n, n, |a, b| symplectic_product(&grads[a], &grads[b]));
        let inverse = invert_constraints(&c)?;
        Ok(DiracBracket { grads, inverse })
    }

    /// `{f, g}_D` at `z`.
    pub fn dirac_bracket(&self, f: &dyn Functional, g: &dyn Functional, z: &PhaseCoordinates) -> Result<f64> {
        Ok(self.dirac(z)?.bracket(f, g, z))
    }

    /// Mode-projected polarization `P_{delta j}(r) = -sum_alpha rho_alpha(r) G_{alpha delta j}`.
    pub fn polarization_mode(&self, delta: usize, j: usize, r: [f64; 3]) -> f64 {
        -(0..self.len()).map(|a| self.rho(a, r) * self.g[a][delta][j]).sum::<f64>()
    }

    fn polarization_mode_gradient(&self, delta: usize, j: usize, r: [f64; 3]) -> [f64; 3] {
        let mut out = [0.0; 3];
        for a in 0..self.len() {
            let dr = self.rho_gradient(a, r);
            for i in 0..3 {
                out[i] -= dr[i] * self.g[a][delta][j];
            }
        }
        out
    }

    /// The functional `Pi_{delta j} = pi_{delta j} - P_{delta j}(r)`.
    pub fn pi_functional(&self, delta: usize, j: usize) -> ReducedMomentum<'_> {
        ReducedMomentum { set: self, delta, j }
    }

    /// `(x -> f_delta(x) e_j)` profile `h_{delta j}(x) = integral f_delta(x') g_j(x', x) dx'` at site `s`.
    fn kernel_profile(&self, delta: usize, j: usize, x: [f64; 3], site: usize) -> f64 {
        let f = &self.modes[delta];
        f.gradient(x)[j] / f.k2() + self.chi[3 * delta + j][site]
    }

    fn sites(&self) -> impl Iterator<Item = (usize, [f64; 3])> + '_ {
        let n = self.lattice.n();
        (0..self.lattice.num_sites()).map(move |s| (s, self.lattice.position([s / (n * n), (s / n) % n, s % n])))
    }

    /// Closed form of `{a_{gamma i}, pi_{delta j}}_D`:
    /// `integral f_gamma(x) f_delta(x') [delta_ij delta(x - x') + d^x_i g_j(x', x)]`,
    /// with the derivative moved onto the smooth mode function.
    pub fn closed_a_pi(&self, gamma: usize, i: usize, delta: usize, j: usize) -> f64 {
        let fg = &self.modes[gamma];
        let dv = self.lattice.cell_volume();
        let local = if gamma == delta { if i == j { 1.0 } else { 0.0 } } else { 0.0 };
        let integral: f64 = self
            .sites()
            .map(|(s, x)| fg.gradient(x)[i] * self.kernel_profile(delta, j, x, s))
            .sum::<f64>()
            * dv;
        local - integral
    }

    /// `P_{delta j}(r)` evaluated as `-integral rho_M(x; r) h_{delta j}(x) dx` by site quadrature.
    pub fn polarization_by_quadrature(&self, delta: usize, j: usize, r: [f64; 3]) -> f64 {
        let rho: Vec<f64> = (0..self.len()).map(|a| self.rho(a, r)).collect();
        let dv = self.lattice.cell_volume();
        -self
            .sites()
            .map(|(s, x)| {
                let rho_m: f64 = self.modes.iter().zip(&rho).map(|(f, c)| c * f.eval(x)).sum();
                rho_m * self.kernel_profile(delta, j, x, s)
            })
            .sum::<f64>()
            * dv
    }

    /// Closed form of `{p_i, pi_{delta j}}_D = -d P_{delta j} / d r_i`, with the
    /// derivative taken by a fourth-order central difference of the
    /// quadrature polarization.
    pub fn closed_p_pi(&self, i: usize, delta: usize, j: usize, r: [f64; 3]) -> f64 {
        let h = 1e-4 * self.lattice.length();
        let at = |s: f64| {
            let mut y = r;
            y[i] += s * h;
            self.polarization_by_quadrature(delta, j, y)
        };
        let deriv = (-at(2.0) + 8.0 * at(1.0) - 8.0 * at(-1.0) + at(-2.0)) / (12.0 * h);
        -deriv
    }

    /// Closed form of `{A_T,{gamma i}, Pi_{delta j}}_D = delta_{gamma delta} T_ij(k)`.
    pub fn closed_at_pi(&self, gamma: usize, i: usize, delta: usize, j: usize) -> f64 {
        if gamma == delta {
            transverse_projector(self.modes[gamma].k)[i][j]
        } else {
            0.0
        }
    }

    /// Transverse part of the field coordinate of mode `gamma`, component `i`, as a linear functional.
    pub fn transverse_a(&self, gamma: usize, i: usize) -> Linear {
        let m = self.len();
        let t = transverse_projector(self.modes[gamma].k);
        let mut weights = vec![0.0; self.dim()];
        for l in 0..3 {
            weights[index::a(m, gamma, l)] = t[i][l];
        }
        Linear { weights, constant: 0.0 }
    }

    /// Gauge generator `G[chi] = sum_alpha (C0_alpha chidot_alpha + C1_alpha chi_alpha)`
    /// for fields band-limited to the retained modes.
    pub fn gauge_generator(&self, chi: &ScalarField, chi_dot: &ScalarField) -> Result<GaugeGenerator<'_>> {
        Ok(GaugeGenerator {
            set: self,
            chi: self.project_scalar(chi)?,
            chi_dot: self.project_scalar(chi_dot)?,
        })
    }

    /// Generator from mode coefficients directly.
    pub fn gauge_generator_from_modes(&self, chi: Vec<f64>, chi_dot: Vec<f64>) -> GaugeGenerator<'_> {
        GaugeGenerator { set: self, chi, chi_dot }
    }

    /// Projects a scalar field on the retained modes; errors if anything is left over.
    pub fn project_scalar(&self, f: &ScalarField) -> Result<Vec<f64>> {
        self.lattice.check_same(f.lattice())?;
        let coeffs: Vec<f64> = self
            .modes
            .iter()
            .map(|m| f.dot(&ScalarField::from_fn(&self.lattice, |x| m.eval(x))))
            .collect();
        let rebuilt = ScalarField::from_fn(&self.lattice, |x| {
            self.modes.iter().zip(&coeffs).map(|(m, c)| c * m.eval(x)).sum()
        });
        let residual = (f - &rebuilt).norm();
        if residual > 1e-10 * f.norm().max(f64::MIN_POSITIVE) && residual > 1e-14 {
            return Err(Error::Truncation { residual });
        }
        Ok(coeffs)
    }

    /// Canonical field-independent Hamiltonian in the extended space:
    /// `|p - q A_s(r)|^2 / 2m + (1/2) sum |pi|^2 + (1/2) integral |curl A|^2`,
    /// where `A_s` is the smeared potential.
    pub fn hamiltonian(&self) -> ExtendedHamiltonian<'_> {
        ExtendedHamiltonian { set: self }
    }

    /// Maps an on-shell extended state to reduced variables.
    pub fn reduced_variables(&self, z: &PhaseCoordinates) -> Result<ReducedCoordinates> {
        let violation = self.violation(z);
        if violation > ON_SHELL_TOLERANCE {
            return Err(Error::OffShell { violation });
        }
        let m = self.len();
        let mut a_t = Vec::with_capacity(m);
        let mut pi = Vec::with_capacity(m);
        for gamma in 0..m {
            let t = transverse_projector(self.modes[gamma].k);
            let raw: [f64; 3] = [0, 1, 2].map(|j| z.pi[gamma][j] - self.polarization_mode(gamma, j, z.r));
            a_t.push([0, 1, 2].map(|i| (0..3).map(|l| t[i][l] * z.a[gamma][l]).sum()));
            pi.push([0, 1, 2].map(|i| (0..3).map(|l| t[i][l] * raw[l]).sum()));
        }
        Ok(ReducedCoordinates { r: z.r, p: z.p, a_t, pi })
    }

    /// Inverse of [`Self::reduced_variables`]: `Pi~ = Pi + P`, and the
    /// longitudinal part of `A` is fixed by the gauge condition.
    pub fn extended_state(&self, reduced: &ReducedCoordinates) -> Result<PhaseCoordinates> {
        let m = self.len();
        let mut z = PhaseCoordinates::zeros(m);
        z.r = reduced.r;
        z.p = reduced.p;
        for gamma in 0..m {
            for j in 0..3 {
                z.pi[gamma][j] = reduced.pi[gamma][j] + self.polarization_mode(gamma, j, reduced.r);
            }
        }
        // Longitudinal amplitudes l_gamma along k_hat solve
        // sum_gamma B_{alpha gamma} l_gamma = -sum_{gamma j} G_{alpha gamma j} a_T_{gamma j}.
        let khat: Vec<[f64; 3]> = self
            .modes
            .iter()
            .map(|f| {
                let n = f.k2().sqrt();
                f.k.map(|v| v / n)
            })
            .collect();
        let b = DMatrix::from_fn(m, m, |alpha, gamma| (0..3).map(|j| self.g[alpha][gamma][j] * khat[gamma][j]).sum());
        let rhs = DVector::from_fn(m, |alpha, _| {
            -(0..m)
                .map(|gamma| (0..3).map(|j| self.g[alpha][gamma][j] * reduced.a_t[gamma][j]).sum::<f64>())
                .sum::<f64>()
        });
        let l = b
            .lu()
            .solve(&rhs)
            .ok_or(Error::DegenerateGauge { condition: f64::INFINITY })?;
        for gamma in 0..m {
            for j in 0..3 {
                z.a[gamma][j] = reduced.a_t[gamma][j] + l[gamma] * khat[gamma][j];
            }
        }
        Ok(z)
    }
}

/// Reduced physical variables `(r, p, A_T, Pi)` in mode components.
#[derive(Clone, Debug, PartialEq)]
pub struct ReducedCoordinates {
    pub r: [f64; 3],
    pub p: [f64; 3],
    pub a_t: Vec<[f64; 3]>,
    pub pi: Vec<[f64; 3]>,
}

/// Gauss-law constraint `C1_alpha`.
pub struct GaussConstraint<'a> {
    set: &'a ConstraintSet,
    alpha: usize,
}

impl Functional for GaussConstraint<'_> {
    fn value(&self, z: &PhaseCoordinates) -> f64 {
        let s = self.set;
        let mut v = s.rho(self.alpha, z.r);
        for (gamma, dg) in s.d[self.alpha].iter().enumerate() {
            for i in 0..3 {
                v -= dg[i] * z.pi[gamma][i];
            }
        }
        v
    }

    fn gradient(&self, z: &PhaseCoordinates) -> Vec<f64> {
        let s = self.set;
        let m = s.len();
        let mut grad = vec![0.0; s.dim()];
        let dr = s.rho_gradient(self.alpha, z.r);
        for i in 0..3 {
            grad[index::r(i)] = dr[i];
        }
        for (gamma, dg) in s.d[self.alpha].iter().enumerate() {
            for i in 0..3 {
                grad[index::pi(m, gamma, i)] = -dg[i];
            }
        }
        grad
    }
}

/// `Pi_{delta j} = pi_{delta j} - P_{delta j}(r)`.
pub struct ReducedMomentum<'a> {
    set: &'a ConstraintSet,
    delta: usize,
    j: usize,
}

impl Functional for ReducedMomentum<'_> {
    fn value(&self, z: &PhaseCoordinates) -> f64 {
        z.pi[self.delta][self.j] - self.set.polarization_mode(self.delta, self.j, z.r)
    }

    fn gradient(&self, z: &PhaseCoordinates) -> Vec<f64> {
        let s = self.set;
        let m = s.len();
        let mut grad = vec![0.0; s.dim()];
        grad[index::pi(m, self.delta, self.j)] = 1.0;
        let dp = s.polarization_mode_gradient(self.delta, self.j, z.r);
        for i in 0..3 {
            grad[index::r(i)] = -dp[i];
        }
        grad
    }
}

/// Gauge generator functional.
pub struct GaugeGenerator<'a> {
    set: &'a ConstraintSet,
    pub chi: Vec<f64>,
    pub chi_dot: Vec<f64>,
}

impl Functional for GaugeGenerator<'_> {
    fn value(&self, z: &PhaseCoordinates) -> f64 {
        (0..self.set.len())
            .map(|a| self.chi_dot[a] * z.pi0[a] + self.chi[a] * self.set.c1(a).value(z))
            .sum()
    }

    fn gradient(&self, z: &PhaseCoordinates) -> Vec<f64> {
        let s = self.set;
        let m = s.len();
        let mut grad = vec![0.0; s.dim()];
        for a in 0..m {
            grad[index::pi0(m, a)] += self.chi_dot[a];
            let g1 = s.c1(a).gradient(z);
            for (g, v) in grad.iter_mut().zip(g1) {
                *g += self.chi[a] * v;
            }
        }
        grad
    }
}

/// Extended-space Hamiltonian (without the `A_0` terms, which vanish with `C0`).
pub struct ExtendedHamiltonian<'a> {
    set: &'a ConstraintSet,
}

impl ExtendedHamiltonian<'_> {
    fn smeared_potential(&self, z: &PhaseCoordinates) -> [f64; 3] {
        let s = self.set;
        let mut a = [0.0; 3];
        for (gamma, f) in s.modes.iter().enumerate() {
            let w = s.charge.form_factor(f.k) * f.eval(z.r);
            for i in 0..3 {
                a[i] += w * z.a[gamma][i];
            }
        }
        a
    }
}

impl Functional for ExtendedHamiltonian<'_> {
    fn value(&self, z: &PhaseCoordinates) -> f64 {
        let s = self.set;
        let a = self.smeared_potential(z);
        let q = s.charge.q;
        let kinetic: f64 = (0..3).map(|i| (z.p[i] - q * a[i]).powi(2)).sum::<f64>() / (2.0 * s.charge.m);
        let mut field = 0.0;
        for (gamma, f) in s.modes.iter().enumerate() {
            let pi2: f64 = z.pi[gamma].iter().map(|v| v * v).sum();
            let a2: f64 = z.a[gamma].iter().map(|v| v * v).sum();
            let ka: f64 = (0..3).map(|i| f.k[i] * z.a[gamma][i]).sum();
            field += 0.5 * pi2 + 0.5 * (f.k2() * a2 - ka * ka);
        }
        kinetic + field
    }
}

/// Dirac bracket data at one phase-space point.
pub struct DiracBracket {
    grads: Vec<Vec<f64>>,
    inverse: DMatrix<f64>,
}

impl DiracBracket {
    pub fn inverse(&self) -> &DMatrix<f64> {
        &self.inverse
    }

    /// `{f, g}_D = {f, g} - {f, C_a} (C^-1)_ab {C_b, g}`.
    pub fn bracket(&self, f: &dyn Functional, g: &dyn Functional, z: &PhaseCoordinates) -> f64 {
        let df = f.gradient(z);
        let dg = g.gradient(z);
        self.bracket_gradients(&df, &dg)
    }

    pub fn bracket_gradients(&self, df: &[f64], dg: &[f64]) -> f64 {
        let n = self.grads.len();
        let fc = DVector::from_fn(n, |a, _| symplectic_product(df, &self.grads[a]));
        let cg = DVector::from_fn(n, |b, _| symplectic_product(&self.grads[b], dg));
        symplectic_product(df, dg) - fc.dot(&(&self.inverse * cg))
    }
}

/// The Dirac bracket `{g, h}_D` viewed as a functional of the state, for nested brackets.
pub struct BracketFunctional<'a> {
    pub set: &'a ConstraintSet,
    pub f: &'a dyn Functional,
    pub g: &'a dyn Functional,
}

impl Functional for BracketFunctional<'_> {
    fn value(&self, z: &PhaseCoordinates) -> f64 {
        self.set
            .dirac_bracket(self.f, self.g, z)
            .expect("constraint matrix is invertible for every transverse kernel")
    }
}

/// Helper: the smeared gauge function `chi` as a modal scalar, used by tests
/// and reports to evaluate `grad chi` at the particle position.
pub fn smeared_modal(field: &ScalarField, sigma: f64) -> Result<ModalScalar> {
    let smeared = field.spectral_multiply(|k| num_complex::Complex64::new(crate::charge::form_factor(sigma, k), 0.0));
    ModalScalar::from_field(&smeared)
}
