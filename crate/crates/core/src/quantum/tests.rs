use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::fock::displacement_element;
use super::model::charge_for_coupling;
use super::*;
use crate::charge::ChargeConfig;
use crate::gauge::{CustomKernel, GaugeSpec};
use crate::lattice::Lattice;
use crate::modes::ModeSet;
use crate::quadrature::gauss_legendre_unit;

fn lattice() -> Lattice {
    Lattice::new(8, 1.0).unwrap()
}

fn small_grid() -> MatterGrid {
    MatterGrid::new([3, 3, 2], 0.06).unwrap()
}

fn setup(n_modes: usize, eta: f64) -> (MatterGrid, ModeSet, ChargeConfig) {
    let lat = lattice();
    let grid = small_grid();
    let modes = ModeSet::lowest(&lat, n_modes).unwrap();
    let q = charge_for_coupling(eta, &grid, &modes);
    let charge = ChargeConfig::new(&lat, q, [0.0; 3], 1.0);
    (grid, modes, charge)
}

fn custom() -> GaugeSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    GaugeSpec::Custom(Arc::new(CustomKernel::random(&lattice(), 2, 2, &mut rng).unwrap()))
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Poincare gauge function of the smeared mode by direct line quadrature:
/// `chi(x) = -integral_0^1 x . (F u)(s x) ds`.
fn poincare_chi(mode: &crate::modes::TransverseMode, form: f64, x: [f64; 3]) -> f64 {
    let (nodes, weights) = gauss_legendre_unit(40);
    let mut acc = 0.0;
    for (s, w) in nodes.iter().zip(&weights) {
        let u = mode.eval(x.map(|v| s * v));
        acc -= w * form * (x[0] * u[0] + x[1] * u[1] + x[2] * u[2]);
    }
    acc
}

#[test]
fn uncoupled_spectrum_is_the_tensor_sum() {
    let lat = lattice();
    let grid = MatterGrid::new([5, 4, 4], 0.05).unwrap();
    let modes = ModeSet::lowest(&lat, 1).unwrap();
    let charge = ChargeConfig::new(&lat, 0.0, [0.0; 3], 1.0);
    let model = QuantumModel::new(&grid, &modes, &charge, 6).unwrap();
    assert!(model.dim() > eigen::DENSE_LIMIT);
    let h = model.build_hamiltonian(&GaugeSpec::poincare());
    let s = spectrum(&h, 6).unwrap();
    let (bare, _) = grid.bare_spectrum(&charge, &lat);
    let w = modes.modes()[0].omega();
    let mut expect: Vec<f64> = bare
        .iter()
        .flat_map(|e| (0..=6).map(move |n| e + w * (n as f64 + 0.5)))
        .collect();
    expect.sort_by(f64::total_cmp);
    for i in 0..6 {
        assert!((s.values[i] - expect[i]).abs() < 1e-9 * expect[i], "{i}: {} vs {}", s.values[i], expect[i]);
    }
    assert!(s.max_relative_residual() < 1e-9);
}

#[test]
fn hamiltonians_are_hermitian() {
    let (grid, modes, charge) = setup(2, 0.3);
    let model = QuantumModel::new(&grid, &modes, &charge, 4).unwrap();
    for spec in [GaugeSpec::Coulomb, GaugeSpec::poincare(), custom()] {
        let h = model.build_hamiltonian(&spec);
        assert!(h.hermiticity_defect() < 1e-12, "{spec}");
    }
}

#[test]
fn identical_specs_and_zero_charge_give_the_identity() {
    let (grid, modes, charge) = setup(1, 0.2);
    let model = QuantumModel::new(&grid, &modes, &charge, 5).unwrap();
    let p = GaugeSpec::poincare();
    assert_eq!(model.gauge_unitary(&p, &p).to_dense(), DMatrix::identity(model.dim(), model.dim()));
    let neutral = ChargeConfig { q: 0.0, ..charge };
    let model = QuantumModel::new(&grid, &modes, &neutral, 5).unwrap();
    let u = model.gauge_unitary(&GaugeSpec::Coulomb, &p);
    assert_eq!(u.to_dense(), DMatrix::identity(model.dim(), model.dim()));
}

#[test]
fn unitary_maps_coulomb_onto_poincare_on_low_states() {
    let (grid, modes, charge) = setup(2, 0.1);
    let model = QuantumModel::new(&grid, &modes, &charge, 14).unwrap();
    let (a, b) = (GaugeSpec::Coulomb, GaugeSpec::poincare());
    let ha = model.build_hamiltonian(&a);
    let hb = model.build_hamiltonian(&b);
    let u = model.gauge_unitary(&a, &b);
    assert!(u.unitarity_defect() < 1e-12);
    let low = spectrum(&hb, 4).unwrap();
    let ud = u.adjoint();
    for v in &low.vectors {
        let lhs = u.matvec(&ha.matvec(&ud.matvec(v)));
        let rhs = hb.matvec(v);
        let diff: Vec<Complex64> = lhs.iter().zip(&rhs).map(|(x, y)| x - y).collect();
        assert!(operator::norm(&diff) < 1e-9 * low.norm_estimate);
    }
}

#[test]
fn gauge_unitaries_compose() {
    let (grid, modes, charge) = setup(2, 0.2);
    let model = QuantumModel::new(&grid, &modes, &charge, 5).unwrap();
    let (g0, g1, g2) = (GaugeSpec::Coulomb, GaugeSpec::poincare(), custom());
    let u01 = model.gauge_unitary(&g0, &g1);
    let u12 = model.gauge_unitary(&g1, &g2);
    let u02 = model.gauge_unitary(&g0, &g2);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..3 {
        let v: Vec<Complex64> = (0..model.dim())
            .map(|_| Complex64::new(rand::Rng::gen_range(&mut rng, -1.0..1.0), rand::Rng::gen_range(&mut rng, -1.0..1.0)))
            .collect();
        let two = u12.matvec(&u01.matvec(&v));
        let one = u02.matvec(&v);
        let diff: Vec<Complex64> = two.iter().zip(&one).map(|(x, y)| x - y).collect();
        assert!(operator::norm(&diff) < 1e-12 * operator::norm(&v));
    }
}

#[test]
fn coulomb_to_poincare_is_a_coherent_displacement() {
    let (grid, modes, charge) = setup(1, 0.5);
    let n_max = 40;
    let model = QuantumModel::new(&grid, &modes, &charge, n_max).unwrap();
    let u = model.gauge_unitary(&GaugeSpec::Coulomb, &GaugeSpec::poincare());
    let mode = modes.modes()[0];
    let form = charge.form_factor(mode.k());
    let w = mode.omega();
    let mut checked = 0;
    for s in 0..grid.num_sites() {
        let x = grid.position(s);
        let alpha = charge.q * poincare_chi(&mode, form, x);
        let beta = Complex64::new(0.0, alpha / (2.0 * w).sqrt());
        for m in 0..=n_max / 2 {
            for n in 0..=n_max / 2 {
                let got = u.get(model.index(s, m), model.index(s, n));
                let expect = displacement_element(m, n, beta);
                assert!((got - expect).norm() < 1e-10, "site {s} <{m}|D|{n}>: {got} vs {expect}");
                checked += 1;
            }
        }
    }
    assert_eq!(checked, grid.num_sites() * 21 * 21);
}

#[test]
fn poincare_site_blocks_follow_the_polarization_expansion() {
    let (grid, modes, charge) = setup(1, 0.4);
    let model = QuantumModel::new(&grid, &modes, &charge, 6).unwrap();
    let hc = model.build_hamiltonian(&GaugeSpec::Coulomb);
    let hp = model.build_hamiltonian(&GaugeSpec::poincare());
    let mode = modes.modes()[0];
    let form = charge.form_factor(mode.k());
    let p_op = model.fock()[0].p();
    let d = model.field_dim();
    for s in 0..grid.num_sites() {
        let pm = -charge.q * poincare_chi(&mode, form, grid.position(s));
        for i in 0..d {
            for j in 0..d {
                let diff = hp.get(model.index(s, i), model.index(s, j)) - hc.get(model.index(s, i), model.index(s, j));
                let mut expect = p_op[(i, j)] * pm;
                if i == j {
                    expect += c(0.5 * pm * pm);
                }
                assert!((diff - expect).norm() < 1e-11, "site {s} ({i},{j})");
            }
        }
    }
}

#[test]
fn vacuum_fluctuations_of_the_field() {
    let (grid, modes, charge) = setup(4, 0.1);
    let model = QuantumModel::new(&grid, &modes, &charge, 3).unwrap();
    let lat = lattice();
    let w = modes.modes()[0].omega();
    let expect = modes.len() as f64 / (2.0 * w * lat.volume());
    for x in [[0.0; 3], [0.13, -0.21, 0.4], [0.5, 0.5, -0.1]] {
        let (a, _) = model.field_operators(x);
        let mut vac = 0.0;
        for comp in &a {
            vac += (comp * comp)[(0, 0)].re;
        }
        assert!((vac - expect).abs() < 1e-14, "{vac} vs {expect}");
    }
}

#[test]
fn field_commutator_is_the_retained_transverse_delta() {
    let (grid, modes, charge) = setup(2, 0.1);
    let n_max = 4;
    let model = QuantumModel::new(&grid, &modes, &charge, n_max).unwrap();
    let (x, xp) = ([0.1, -0.3, 0.2], [-0.25, 0.05, 0.35]);
    let (a, _) = model.field_operators(x);
    let (_, pi) = model.field_operators(xp);
    let d = model.field_dim();
    let below_edge = |idx: usize| idx / (n_max + 1) < n_max && idx % (n_max + 1) < n_max;
    for i in 0..3 {
        for j in 0..3 {
            let comm = &a[i] * &pi[j] - &pi[j] * &a[i];
            let delta: f64 = modes.modes().iter().map(|m| m.eval(x)[i] * m.eval(xp)[j]).sum();
            for r in 0..d {
                for col in 0..d {
                    if !below_edge(r) || !below_edge(col) {
                        continue;
                    }
                    let expect = if r == col { Complex64::new(0.0, delta) } else { c(0.0) };
                    assert!((comm[(r, col)] - expect).norm() < 1e-12);
                }
            }
        }
    }
}

#[test]
fn ladder_operators_are_embedded_per_mode() {
    let (grid, modes, charge) = setup(2, 0.1);
    let model = QuantumModel::new(&grid, &modes, &charge, 3).unwrap();
    let ladders = model.ladder_operators();
    assert_eq!(ladders.len(), 2);
    let (a0, _) = &ladders[0];
    let (_, ad1) = &ladders[1];
    assert!((a0 * ad1 - ad1 * a0).camax() < 1e-15);
    let n = model.photon_number();
    let mut state = vec![c(0.0); model.dim()];
    state[model.index(3, 2 * 4 + 1)] = c(1.0);
    assert!((n.expectation(&state).re - 3.0).abs() < 1e-15);
}

#[test]
fn coupled_ground_state_lies_below_the_product_state() {
    let (grid, modes, charge) = setup(1, 0.3);
    let model = QuantumModel::new(&grid, &modes, &charge, 8).unwrap();
    let h = model.build_hamiltonian(&GaugeSpec::Coulomb);
    let e0 = spectrum(&h, 1).unwrap().values[0];
    let (_, bare) = grid.bare_spectrum(&charge, &lattice());
    let mut trial = vec![c(0.0); model.dim()];
    for s in 0..grid.num_sites() {
        trial[model.index(s, 0)] = c(bare[(s, 0)]);
    }
    let bound = h.expectation(&trial).re;
    assert!(e0 < bound, "{e0} vs {bound}");
}

#[test]
fn photon_number_depends_on_the_gauge() {
    let (grid, modes, charge) = setup(1, 0.3);
    let model = QuantumModel::new(&grid, &modes, &charge, 12).unwrap();
    let n = model.photon_number();
    let nc = n.expectation(&spectrum(&model.build_hamiltonian(&GaugeSpec::Coulomb), 1).unwrap().vectors[0]).re;
    let np = n.expectation(&spectrum(&model.build_hamiltonian(&GaugeSpec::poincare()), 1).unwrap().vectors[0]).re;
    assert!((nc - np).abs() > 1e-6, "{nc} vs {np}");
}

#[test]
fn spectra_agree_across_three_gauges_at_the_largest_cutoff() {
    let (grid, modes, charge) = setup(1, 0.05);
    let cfg = EquivalenceConfig {
        cutoffs: vec![4, 8, 16],
        n_eigs: 4,
        ..Default::default()
    };
    let specs = [GaugeSpec::Coulomb, GaugeSpec::poincare(), custom()];
    for i in 0..3 {
        for j in i + 1..3 {
            let r = verify_equivalence(&grid, &modes, &charge, &specs[i], &specs[j], &cfg).unwrap();
            assert!(r.pass, "{} vs {}: {:?} {:?}", r.spec_a, r.spec_b, r.eigen_deviation, r.operator_deviation);
            assert!(*r.eigen_deviation.last().unwrap() < 1e-6);
            assert!(r.eigen_deviation[0] > *r.eigen_deviation.last().unwrap());
        }
    }
}

#[test]
fn zero_charge_equivalence_is_exact() {
    let (grid, modes, charge) = setup(1, 0.05);
    let neutral = ChargeConfig { q: 0.0, ..charge };
    let cfg = EquivalenceConfig {
        cutoffs: vec![2, 4],
        n_eigs: 3,
        ..Default::default()
    };
    let r = verify_equivalence(&grid, &modes, &neutral, &GaugeSpec::Coulomb, &GaugeSpec::poincare(), &cfg).unwrap();
    assert!(r.eigen_deviation.iter().all(|d| *d == 0.0));
    assert!(r.operator_deviation.iter().all(|d| *d == 0.0));
    assert!(r.pass);
}
