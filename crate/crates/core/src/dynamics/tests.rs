use super::*;
use crate::gauge::{coulomb_energy, CustomKernel, GaugeSpec};
use crate::synth;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

fn lattice() -> Lattice {
    Lattice::new(16, 1.0).unwrap()
}

fn system(spec: &GaugeSpec, q: f64) -> Dynamics {
    let lat = lattice();
    let modes = ModeSet::lowest(&lat, 8).unwrap();
    let charge = ChargeConfig::new(&lat, q, [0.0; 3], 1.0);
    Dynamics::new(&modes, spec, &charge).unwrap()
}

fn custom() -> GaugeSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    GaugeSpec::Custom(Arc::new(CustomKernel::random(&lattice(), 2, 2, &mut rng).unwrap()))
}

fn initial() -> ReducedState {
    let q: Vec<f64> = (0..8).map(|i| 0.01 * ((i as f64) * 1.3 + 0.4).sin()).collect();
    let pi: Vec<f64> = (0..8).map(|i| 0.01 * ((i as f64) * 0.7 - 0.2).cos()).collect();
    ReducedState::new([0.04, -0.03, 0.02], [0.05, 0.02, -0.03], q, pi)
}

#[test]
fn coulomb_potential_matches_longitudinal_field_energy() {
    let lat = lattice();
    let dynamics = system(&GaugeSpec::Coulomb, 0.8);
    let r = [0.1, -0.05, 0.07];
    let expect = coulomb_energy(&dynamics.charge().with_position(r), &lat).unwrap();
    let (v, g) = dynamics.coulomb_potential(r);
    assert!((v - expect).abs() < 1e-12 * expect);
    for d in 0..3 {
        let mut a = r;
        let mut b = r;
        a[d] += 1e-5;
        b[d] -= 1e-5;
        let fd = (dynamics.coulomb_potential(a).0 - dynamics.coulomb_potential(b).0) / 2e-5;
        assert!((fd - g[d]).abs() < 1e-7 * g[d].abs().max(1.0));
    }
}

#[test]
fn uncoupled_hamiltonian_does_not_depend_on_gauge() {
    let s = initial();
    let reference = system(&GaugeSpec::Coulomb, 0.0).hamiltonian(&s);
    for spec in [GaugeSpec::poincare(), custom()] {
        assert_eq!(system(&spec, 0.0).hamiltonian(&s), reference);
    }
    let modes = ModeSet::lowest(&lattice(), 8).unwrap();
    let mut expect = s.p.iter().map(|p| p * p).sum::<f64>() / 2.0;
    for (m, (q, p)) in modes.modes().iter().zip(s.q.iter().zip(&s.pi)) {
        expect += 0.5 * (p * p + m.omega().powi(2) * q * q);
    }
    assert!((reference - expect).abs() < 1e-15);
}

#[test]
fn flow_is_the_symplectic_gradient_of_h() {
    for spec in [GaugeSpec::Coulomb, GaugeSpec::poincare(), custom()] {
        let dynamics = system(&spec, 0.7);
        let z = initial().to_vec();
        let f = dynamics.flow(&z);
        let n = z.len();
        let half = [0, 1, 2, 6, 7, 8, 9, 10, 11, 12, 13];
        for &i in &half {
            // Coordinate i pairs with the matching momentum.
            let (coord, mom) = if i < 3 { (i, i + 3) } else { (i, i + 8) };
            let dh = |j: usize| {
                let h = 1e-6;
                let mut a = z.clone();
                let mut b = z.clone();
                a[j] += h;
                b[j] -= h;
                (dynamics.hamiltonian(&ReducedState::from_vec(&a)) - dynamics.hamiltonian(&ReducedState::from_vec(&b)))
                    / (2.0 * h)
            };
            assert!(mom < n);
            assert!((f[coord] - dh(mom)).abs() < 1e-8 * f[coord].abs().max(1.0), "{spec} dq/dt {i}");
            assert!((f[mom] + dh(coord)).abs() < 1e-8 * f[mom].abs().max(1.0), "{spec} dp/dt {i}");
        }
    }
}

#[test]
fn gauge_map_preserves_energy_and_kinetic_momentum() {
    let coulomb = system(&GaugeSpec::Coulomb, 0.9);
    let s = initial();
    for spec in [GaugeSpec::poincare(), custom()] {
        let other = system(&spec, 0.9);
        let mapped = coulomb.map_state(&s, &other).unwrap();
        assert!((other.hamiltonian(&mapped) - coulomb.hamiltonian(&s)).abs() < 1e-12);
        let (a, b) = (coulomb.observables(&s), other.observables(&mapped));
        for d in 0..3 {
            assert!((a.kinetic[d] - b.kinetic[d]).abs() < 1e-14);
        }
        for (x, y) in a.e_t.iter().zip(&b.e_t) {
            assert!((x - y).abs() < 1e-15);
        }
        let back = other.map_state(&mapped, &coulomb).unwrap();
        for (x, y) in back.to_vec().iter().zip(s.to_vec()) {
            assert!((x - y).abs() < 1e-14);
        }
        assert_ne!(mapped.p, s.p);
    }
    assert_eq!(coulomb.map_state(&s, &coulomb).unwrap(), s);
}

#[test]
fn coulomb_to_poincare_shifts_pi_by_projected_polarization() {
    // Independent path: project the lattice transverse polarization on the modes.
    let lat = lattice();
    let coulomb = system(&GaugeSpec::Coulomb, 0.9);
    let poincare = system(&GaugeSpec::poincare(), 0.9);
    let s = initial();
    let mapped = coulomb.map_state(&s, &poincare).unwrap();
    let p_t = GaugeSpec::poincare()
        .transverse_polarization(&poincare.charge().with_position(s.r), &lat)
        .unwrap();
    let proj = poincare.modes().project(&p_t);
    for i in 0..8 {
        assert!((mapped.pi[i] - (s.pi[i] - proj[i])).abs() < 1e-11, "{i}");
    }
}

#[test]
fn uncoupled_modes_oscillate_at_their_frequency() {
    let dynamics = system(&GaugeSpec::poincare(), 0.0);
    let s0 = initial();
    let w = dynamics.modes().max_omega();
    let dt = 1e-4 / w;
    let period = std::f64::consts::TAU / w;
    let steps = (period / dt).round() as usize;
    let mut s = s0.clone();
    for _ in 0..steps {
        s = dynamics.step(&s, dt).unwrap();
    }
    let t = steps as f64 * dt;
    for (i, mode) in dynamics.modes().modes().iter().enumerate() {
        let w = mode.omega();
        let (c, sn) = ((w * t).cos(), (w * t).sin());
        let q = s0.q[i] * c + s0.pi[i] / w * sn;
        let p = -s0.q[i] * w * sn + s0.pi[i] * c;
        let amp = (s0.q[i].powi(2) + (s0.pi[i] / w).powi(2)).sqrt();
        // Phase error per period, measured as a displacement over the amplitude.
        assert!((s.q[i] - q).abs() / amp < 1e-8, "mode {i}");
        assert!((s.pi[i] - p).abs() / (amp * w) < 1e-8, "mode {i}");
    }
    for d in 0..3 {
        assert!((s.r[d] - (s0.r[d] + s0.p[d] * t)).abs() < 1e-12);
        assert_eq!(s.p[d], s0.p[d]);
    }
}

#[test]
fn step_size_beyond_the_limit_is_rejected() {
    let dynamics = system(&GaugeSpec::Coulomb, 1.0);
    let limit = MAX_STEP_PHASE / dynamics.modes().max_omega();
    assert!(matches!(
        dynamics.integrate(&initial(), 1.01 * limit, 3),
        Err(Error::StepSize { .. })
    ));
    assert!(dynamics.integrate(&initial(), limit, 3).is_ok());
}

#[test]
fn coupled_run_conserves_energy_and_satisfies_field_equations() {
    let dynamics = system(&GaugeSpec::poincare(), 0.5);
    let traj = dynamics.integrate(&initial(), 1e-3, 400).unwrap();
    assert!(traj.energy_drift() < 1e-8, "drift {}", traj.energy_drift());
    let res = dynamics.motion_residuals(&traj);
    assert!(res.newton_lorentz < 1e-5, "{res:?}");
    assert!(res.maxwell_ampere < 1e-5, "{res:?}");
    assert!(res.faraday < 1e-5, "{res:?}");
}

#[test]
fn gauges_agree_on_invariant_observables() {
    let coulomb = system(&GaugeSpec::Coulomb, 0.5);
    // The random kernel has a much larger gauge function, so the
    // discretization error of the non-covariant midpoint rule needs a finer step.
    for (spec, dt) in [(GaugeSpec::poincare(), 1e-3), (custom(), 2.5e-4)] {
        let other = system(&spec, 0.5);
        let (report, _, _) = coulomb.compare(&other, &initial(), dt, 300, 1e-7).unwrap();
        assert!(report.pass, "{spec} {report:?}");
        assert!(report.canonical_p > 1e-4, "canonical momentum should differ: {report:?}");
    }
    let free = system(&GaugeSpec::Coulomb, 0.0);
    let free_p = system(&GaugeSpec::poincare(), 0.0);
    let (report, _, _) = free.compare(&free_p, &initial(), 2e-3, 50, 0.0).unwrap();
    assert_eq!((report.r, report.kinetic, report.e_t, report.b), (0.0, 0.0, 0.0, 0.0));
}

#[test]
fn lagrangian_identity_holds_along_a_poincare_run() {
    let dynamics = system(&GaugeSpec::poincare(), 0.5);
    let traj = dynamics.integrate(&initial(), 2e-3, 60).unwrap();
    let report = dynamics.lagrangian_identity(&traj, 5).unwrap();
    assert!(report.relative < 1e-5, "{report:?}");
    assert!(report.scale > 0.0);
}

#[test]
fn lagrangian_identity_with_a_nearly_static_charge() {
    let lat = lattice();
    let modes = ModeSet::lowest(&lat, 8).unwrap();
    let charge = ChargeConfig::new(&lat, 0.5, [0.0; 3], 1e8);
    let dynamics = Dynamics::new(&modes, &GaugeSpec::poincare(), &charge).unwrap();
    let mut s = initial();
    s.p = [0.0; 3];
    let traj = dynamics.integrate(&s, 2e-3, 30).unwrap();
    let report = dynamics.lagrangian_identity(&traj, 4).unwrap();
    assert!(report.relative < 1e-6, "{report:?}");
}

#[test]
fn trajectory_csv_has_header_and_rows() {
    let dynamics = system(&GaugeSpec::Coulomb, 0.5);
    let traj = dynamics.integrate(&initial(), 1e-3, 4).unwrap();
    let mut buf = Vec::new();
    traj.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("t,rx,ry,rz,px,py,pz,H,ET_norm,B_norm,EL_norm"));
    assert_eq!(lines.len(), 6);
    assert_eq!(lines[1].split(',').count(), 14);
}

#[test]
fn potential_from_b_matches_line_gauge_potential() {
    let lat = lattice();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let a_t = synth::random_transverse(&lat, 2, &mut rng);
    let b = a_t.curl();
    let from_b = poincare_potential_from_b(&b, 32).unwrap();
    let direct = GaugeSpec::poincare().vector_potential(&a_t).unwrap();
    let n = lat.n();
    let mut worst = 0.0_f64;
    for i in n / 4..3 * n / 4 {
        for j in n / 4..3 * n / 4 {
            for k in n / 4..3 * n / 4 {
                let (x, y) = (from_b.get([i, j, k]), direct.get([i, j, k]));
                for d in 0..3 {
                    worst = worst.max((x[d] - y[d]).abs());
                }
            }
        }
    }
    assert!(worst < 1e-6 * direct.rms(), "{worst}");
    let zero = poincare_potential_from_b(&VectorField::zeros(&lat), 8).unwrap();
    assert_eq!(zero.max_abs(), 0.0);
}

#[test]
fn potential_from_nearly_uniform_b_is_symmetric_gauge() {
    // A long-wavelength field on a large box is locally uniform, so
    // A(x) ~ -(1/2) x cross B(0) near the origin.
    let lat = Lattice::new(16, 40.0).unwrap();
    let k = lat.wavevector_of([1, 0, 0]);
    let a_t = VectorField::from_fn(&lat, |x| [0.0, (k[0] * x[0]).sin() / k[0], 0.0]);
    let b = a_t.curl();
    let a = poincare_potential_from_b(&b, 16).unwrap();
    let b0 = [0.0, 0.0, 1.0];
    let idx = lat.origin_index();
    for off in [[1, 0, 0], [0, 1, 0], [1, 1, 0], [0, 0, 1]] {
        let site = [idx[0] + off[0], idx[1] + off[1], idx[2] + off[2]];
        let x = lat.position(site);
        let expect = [-0.5 * (x[1] * b0[2] - x[2] * b0[1]), -0.5 * (x[2] * b0[0] - x[0] * b0[2]), 0.0];
        let got = a.get(site);
        let bound = 0.5 * (k[0] * 2.5 * lat.spacing()).powi(2) * lat.spacing() * 2.0;
        for d in 0..3 {
            assert!((got[d] - expect[d]).abs() < bound, "{off:?} {got:?} {expect:?}");
        }
    }
}
