//! Cutoff sweeps comparing `H[g_a]` and `H[g_b]` through the gauge unitary.

use num_complex::Complex64;

use super::eigen::{spectrum_with, EigenOptions};
use super::matter::MatterGrid;
use super::model::QuantumModel;
use super::operator::norm;
use crate::charge::ChargeConfig;
use crate::error::{Error, Result};
use crate::gauge::GaugeSpec;
use crate::modes::ModeSet;

/// Deviations that differ by less than this are treated as equal when
/// judging monotone convergence.
pub const NOISE_FLOOR: f64 = 1e-11;

#[derive(Clone, Debug)]
pub struct EquivalenceConfig {
    pub cutoffs: Vec<usize>,
    pub n_eigs: usize,
    /// Required eigenvalue and operator deviation at the largest cutoff.
    pub tolerance: f64,
    pub eigen: EigenOptions,
}

impl Default for EquivalenceConfig {
    fn default() -> Self {
        Self {
            cutoffs: vec![4, 8, 16, 32],
            n_eigs: 5,
            tolerance: 1e-6,
            eigen: EigenOptions::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct EquivalenceReport {
    pub spec_a: String,
    pub spec_b: String,
    pub coupling: f64,
    pub cutoffs: Vec<usize>,
    /// Max over the lowest `n_eigs` of `|E_a - E_b| / |E_b|`.
    pub eigen_deviation: Vec<f64>,
    /// Max over the low eigenvectors `v` of `H_b` of
    /// `||(U H_a U^dag - H_b) v|| / ||H_b||`.
    pub operator_deviation: Vec<f64>,
    /// Max entry of `|U^dag U - I|`.
    pub unitarity_defect: Vec<f64>,
    pub lowest_a: Vec<Vec<f64>>,
    pub lowest_b: Vec<Vec<f64>>,
    /// Ground-state photon number in each gauge; not expected to agree.
    pub ground_photons_a: Vec<f64>,
    pub ground_photons_b: Vec<f64>,
    pub monotone: bool,
    pub pass: bool,
}

impl EquivalenceReport {
    /// True when the deviations grow with the cutoff, marking the
    /// parameters as under-resolved.
    pub fn under_resolved(&self) -> bool {
        !self.monotone
    }
}

fn relative_deviation(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = (x - y).abs();
            if *y == 0.0 {
                d
            } else {
                d / y.abs()
            }
        })
        .fold(0.0, f64::max)
}

fn non_increasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] <= w[0] + NOISE_FLOOR)
}

pub fn verify_equivalence(
    grid: &MatterGrid,
    modes: &ModeSet,
    charge: &ChargeConfig,
    spec_a: &GaugeSpec,
    spec_b: &GaugeSpec,
    config: &EquivalenceConfig,
) -> Result<EquivalenceReport> {
    if config.cutoffs.is_empty() {
        return Err(Error::InvalidParameter("equivalence sweep needs at least one cutoff".into()));
    }
    let mut report = EquivalenceReport {
        spec_a: spec_a.to_string(),
        spec_b: spec_b.to_string(),
        coupling: 0.0,
        cutoffs: config.cutoffs.clone(),
        eigen_deviation: Vec::new(),
        operator_deviation: Vec::new(),
        unitarity_defect: Vec::new(),
        lowest_a: Vec::new(),
        lowest_b: Vec::new(),
        ground_photons_a: Vec::new(),
        ground_photons_b: Vec::new(),
        monotone: true,
        pass: false,
    };
    for &n_max in &config.cutoffs {
        let model = QuantumModel::new(grid, modes, charge, n_max)?;
        report.coupling = model.coupling();
        let ha = model.build_hamiltonian(spec_a);
        let hb = model.build_hamiltonian(spec_b);
        let u = model.gauge_unitary(spec_a, spec_b);
        let ua = spectrum_with(&ha, config.n_eigs, &config.eigen)?;
        let ub = spectrum_with(&hb, config.n_eigs, &config.eigen)?;

        let ud = u.adjoint();
        let op_dev = ub
            .vectors
            .iter()
            .map(|v| {
                let transformed = u.matvec(&ha.matvec(&ud.matvec(v)));
                let direct = hb.matvec(v);
                let diff: Vec<Complex64> = transformed.iter().zip(&direct).map(|(x, y)| x - y).collect();
                norm(&diff)
            })
            .fold(0.0, f64::max)
            / ub.norm_estimate;

        let photons = model.photon_number();
        report.eigen_deviation.push(relative_deviation(&ua.values, &ub.values));
        report.operator_deviation.push(op_dev);
        report.unitarity_defect.push(u.unitarity_defect());
        report.ground_photons_a.push(photons.expectation(&ua.vectors[0]).re);
        report.ground_photons_b.push(photons.expectation(&ub.vectors[0]).re);
        report.lowest_a.push(ua.values);
        report.lowest_b.push(ub.values);
    }
    report.monotone = non_increasing(&report.eigen_deviation) && non_increasing(&report.operator_deviation);
    let last = report.cutoffs.len() - 1;
    report.pass = report.monotone
        && report.eigen_deviation[last] < config.tolerance
        && report.operator_deviation[last] < config.tolerance;
    Ok(report)
}
