//! Quantized Hamiltonians `H[g]` and gauge-fixing unitaries on the product of
//! the matter position grid and the truncated Fock space of the retained
//! modes.
//!
//! Basis states are `|x> (x) |n_1 ... n_M>`, flattened as
//! `site * field_dim + field_index` with the first mode varying slowest.
//! With `Q_m`, `P_m` the mode quadratures and `chi_m` the gauge function of
//! the smeared mode `F_m u_m`, the Hamiltonian in gauge `g` is
//!
//! - hopping `<x|H|y> = -t prod_m exp(i theta_m(x, y) Q_m)` with
//!   `theta_m = q [F_m integral_y^x u_m . dl + chi_m(x) - chi_m(y)]`, the lattice form of
//!   `(p - q A_g(r))^2 / 2m`;
//! - on site `3/(m a^2) + V(x) + sum_m [w_m (N_m + 1/2) + p_m(x) P_m + p_m(x)^2 / 2]`
//!   with `p_m(x) = -q (chi_m(x) - chi_m(0))`, the expansion of
//!   `(1/2) integral [(Pi + P_T)^2 + B^2]` with the free part in normal order.
//!
//! The unitary `U_{g->g'}` is diagonal in `x` and acts on each mode as
//! `exp(i alpha_m(x) Q_m)` with `alpha_m = p_m[g](x) - p_m[g'](x)`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use super::fock::{kron_all, FockMode};
use super::matter::MatterGrid;
use super::operator::{OperatorMatrix, TripletBuilder};
use crate::charge::ChargeConfig;
use crate::error::{Error, Result};
use crate::gauge::GaugeSpec;
use crate::modes::{ModeSet, TransverseMode};

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// `integral_y^x u . dl` along the straight segment, in closed form.
pub fn link_integral(mode: &TransverseMode, y: [f64; 3], x: [f64; 3]) -> f64 {
    let delta = [x[0] - y[0], x[1] - y[1], x[2] - y[2]];
    let mid = [0, 1, 2].map(|d| 0.5 * (x[d] + y[d]));
    let half_phase = 0.5 * (mode.k()[0] * delta[0] + mode.k()[1] * delta[1] + mode.k()[2] * delta[2]);
    let sinc = if half_phase.abs() < 1e-4 {
        1.0 - half_phase * half_phase / 6.0 + half_phase.powi(4) / 120.0
    } else {
        half_phase.sin() / half_phase
    };
    let along = mode.e[0] * delta[0] + mode.e[1] * delta[1] + mode.e[2] * delta[2];
    along * mode.scalar.eval(mid) * sinc
}

/// Dimensionless coupling `q l / sqrt(w L^3)` with `l` the grid radius and
/// `w` the lowest retained frequency.
pub fn coupling(charge: f64, grid: &MatterGrid, modes: &ModeSet) -> f64 {
    let w = lowest_omega(modes);
    charge * grid.radius() / (w * modes.lattice().volume()).sqrt()
}

/// Charge that gives the dimensionless coupling `eta`.
pub fn charge_for_coupling(eta: f64, grid: &MatterGrid, modes: &ModeSet) -> f64 {
    let w = lowest_omega(modes);
    eta * (w * modes.lattice().volume()).sqrt() / grid.radius()
}

fn lowest_omega(modes: &ModeSet) -> f64 {
    modes.modes().iter().map(|m| m.omega()).fold(f64::INFINITY, f64::min)
}

#[derive(Clone, Debug)]
pub struct QuantumModel {
    grid: MatterGrid,
    modes: ModeSet,
    charge: ChargeConfig,
    n_max: usize,
    fock: Vec<FockMode>,
    form: Vec<f64>,
    onsite: Vec<f64>,
}

impl QuantumModel {
    pub fn new(grid: &MatterGrid, modes: &ModeSet, charge: &ChargeConfig, n_max: usize) -> Result<Self> {
        charge.validate(modes.lattice())?;
        grid.check_inside(modes.lattice())?;
        if n_max == 0 {
            return Err(Error::InvalidParameter("Fock cutoff must be at least 1".into()));
        }
        let fock = modes.modes().iter().map(|m| FockMode::new(m.omega(), n_max)).collect();
        let form = modes.modes().iter().map(|m| charge.form_factor(m.k())).collect();
        let onsite = grid.onsite(charge, modes.lattice());
        Ok(Self {
            grid: grid.clone(),
            modes: modes.clone(),
            charge: *charge,
            n_max,
            fock,
            form,
            onsite,
        })
    }

    pub fn grid(&self) -> &MatterGrid {
        &self.grid
    }

    pub fn modes(&self) -> &ModeSet {
        &self.modes
    }

    pub fn charge(&self) -> &ChargeConfig {
        &self.charge
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn fock(&self) -> &[FockMode] {
        &self.fock
    }

    pub fn field_dim(&self) -> usize {
        self.fock.iter().map(|f| f.dim()).product()
    }

    pub fn dim(&self) -> usize {
        self.grid.num_sites() * self.field_dim()
    }

    pub fn index(&self, site: usize, field: usize) -> usize {
        site * self.field_dim() + field
    }

    pub fn coupling(&self) -> f64 {
        coupling(self.charge.q, &self.grid, &self.modes)
    }

    /// `op` on mode `m` tensored with identities on the other modes.
    pub fn embed_mode(&self, m: usize, op: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let factors: Vec<DMatrix<Complex64>> = self
            .fock
            .iter()
            .enumerate()
            .map(|(i, f)| if i == m { op.clone() } else { DMatrix::identity(f.dim(), f.dim()) })
            .collect();
        kron_all(&factors)
    }

    /// Per-mode `(a, a^dag)` on the field space.
    pub fn ladder_operators(&self) -> Vec<(DMatrix<Complex64>, DMatrix<Complex64>)> {
        (0..self.fock.len())
            .map(|m| {
                let a = self.embed_mode(m, &self.fock[m].annihilation());
                let ad = a.adjoint();
                (a, ad)
            })
            .collect()
    }

    /// Components of `A_T(x) = sum Q_m u_m(x)` and `Pi(x) = sum P_m u_m(x)` on
    /// the field space.
    pub fn field_operators(&self, x: [f64; 3]) -> ([DMatrix<Complex64>; 3], [DMatrix<Complex64>; 3]) {
        let d = self.field_dim();
        let mut a: [DMatrix<Complex64>; 3] = std::array::from_fn(|_| DMatrix::zeros(d, d));
        let mut pi = a.clone();
        for (m, (mode, f)) in self.modes.modes().iter().zip(&self.fock).enumerate() {
            let u = mode.eval(x);
            let q = self.embed_mode(m, &f.q());
            let p = self.embed_mode(m, &f.p());
            for j in 0..3 {
                a[j] += &q * c(u[j]);
                pi[j] += &p * c(u[j]);
            }
        }
        (a, pi)
    }

    /// `I_matter (x) op` for a field-space operator.
    pub fn embed_field(&self, op: &DMatrix<Complex64>, description: &str) -> OperatorMatrix {
        let d = self.field_dim();
        let mut b = TripletBuilder::new(self.dim());
        for s in 0..self.grid.num_sites() {
            b.push_block(s * d, s * d, op, c(1.0));
        }
        b.build(description)
    }

    /// Total photon number `sum_m N_m`.
    pub fn photon_number(&self) -> OperatorMatrix {
        let d = self.field_dim();
        let mut n = DMatrix::zeros(d, d);
        for (m, f) in self.fock.iter().enumerate() {
            n += self.embed_mode(m, &f.number());
        }
        self.embed_field(&n, "total photon number")
    }

    /// `chi_m(x) - chi_m(0)` for every mode and site, `[mode][site]`.
    pub fn gauge_function_table(&self, spec: &GaugeSpec) -> Vec<Vec<f64>> {
        let positions = self.grid.positions();
        self.modes
            .modes()
            .par_iter()
            .zip(&self.form)
            .map(|(mode, f)| {
                let wave = mode.wave().scaled(*f);
                let origin = spec.wave_jet(&wave, [0.0; 3]).value;
                positions.iter().map(|x| spec.wave_jet(&wave, *x).value - origin).collect()
            })
            .collect()
    }

    /// Retained transverse polarization `p_m(x)`, `[mode][site]`.
    pub fn polarization_table(&self, spec: &GaugeSpec) -> Vec<Vec<f64>> {
        let q = self.charge.q;
        self.gauge_function_table(spec)
            .into_iter()
            .map(|row| row.into_iter().map(|v| -q * v).collect())
            .collect()
    }

    /// Peierls phases `theta_m(to, from)` for every link, `[link][mode]`.
    pub fn link_phases(&self, spec: &GaugeSpec) -> Vec<Vec<f64>> {
        let chi = self.gauge_function_table(spec);
        let q = self.charge.q;
        self.grid
            .links()
            .iter()
            .map(|&(from, to)| {
                let y = self.grid.position(from);
                let x = self.grid.position(to);
                self.modes
                    .modes()
                    .iter()
                    .enumerate()
                    .map(|(m, mode)| q * (self.form[m] * link_integral(mode, y, x) + chi[m][to] - chi[m][from]))
                    .collect()
            })
            .collect()
    }

    fn exp_iq_all(&self, angles: &[f64]) -> DMatrix<Complex64> {
        let factors: Vec<DMatrix<Complex64>> = self.fock.iter().zip(angles).map(|(f, a)| f.exp_iq(*a)).collect();
        kron_all(&factors)
    }

    pub fn build_hamiltonian(&self, spec: &GaugeSpec) -> OperatorMatrix {
        let d = self.field_dim();
        let n_sites = self.grid.num_sites();
        let pol = self.polarization_table(spec);
        let mut free = DMatrix::zeros(d, d);
        let mut momenta = Vec::with_capacity(self.fock.len());
        for (m, f) in self.fock.iter().enumerate() {
            free += self.embed_mode(m, &f.free_hamiltonian());
            momenta.push(self.embed_mode(m, &f.p()));
        }
        let t = self.grid.hopping(self.charge.m);
        let links = self.grid.links();
        let phases = self.link_phases(spec);
        let hop_blocks: Vec<DMatrix<Complex64>> = phases.par_iter().map(|th| self.exp_iq_all(th) * c(-t)).collect();

        let mut b = TripletBuilder::new(self.dim());
        for s in 0..n_sites {
            let mut block = free.clone();
            let mut scalar = self.onsite[s];
            for (m, p) in momenta.iter().enumerate() {
                let pm = pol[m][s];
                if pm != 0.0 {
                    block += p * c(pm);
                    scalar += 0.5 * pm * pm;
                }
            }
            for i in 0..d {
                block[(i, i)] += c(scalar);
            }
            b.push_block(s * d, s * d, &block, c(1.0));
        }
        for ((from, to), block) in links.iter().zip(&hop_blocks) {
            b.push_block(to * d, from * d, block, c(1.0));
            b.push_block(from * d, to * d, &block.adjoint(), c(1.0));
        }
        b.build(format!(
            "H[{spec}] on {:?} sites x {} modes, n_max = {}",
            self.grid.shape(),
            self.fock.len(),
            self.n_max
        ))
    }

    /// `U_{from -> to}`, with `U H[from] U^dag = H[to]` up to Fock truncation.
    pub fn gauge_unitary(&self, from: &GaugeSpec, to: &GaugeSpec) -> OperatorMatrix {
        let d = self.field_dim();
        let description = format!("U[{from} -> {to}], n_max = {}", self.n_max);
        if from == to {
            let mut out = OperatorMatrix::identity(self.dim());
            out.description = description;
            return out;
        }
        let pa = self.polarization_table(from);
        let pb = self.polarization_table(to);
        let blocks: Vec<DMatrix<Complex64>> = (0..self.grid.num_sites())
            .into_par_iter()
            .map(|s| {
                let alpha: Vec<f64> = (0..self.fock.len()).map(|m| pa[m][s] - pb[m][s]).collect();
                self.exp_iq_all(&alpha)
            })
            .collect();
        let mut b = TripletBuilder::new(self.dim());
        for (s, block) in blocks.iter().enumerate() {
            b.push_block(s * d, s * d, block, c(1.0));
        }
        b.build(description)
    }
}
