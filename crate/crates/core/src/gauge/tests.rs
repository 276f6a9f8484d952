use super::*;
use crate::charge::periodic_gaussian;
use crate::synth;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn lattice(n: usize) -> Lattice {
    Lattice::new(n, 1.0).unwrap()
}

fn random_custom(lat: &Lattice, seed: u64) -> GaugeSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    GaugeSpec::Custom(Arc::new(CustomKernel::random(lat, 3, 2, &mut rng).unwrap()))
}

fn quadrature_spec(n: usize) -> GaugeSpec {
    GaugeSpec::Poincare(Poincare::new(n, LambdaMethod::Quadrature).unwrap())
}

#[test]
fn gauss_law_holds_in_every_gauge() {
    let lat = lattice(16);
    let cfg = ChargeConfig::new(&lat, 1.0, [0.13, -0.05, 0.08], 1.0);
    let rho = smeared_point_charge(&cfg, &lat).unwrap();
    for spec in [GaugeSpec::Coulomb, GaugeSpec::poincare(), random_custom(&lat, 4)] {
        let p = spec.polarization(&cfg, &lat).unwrap();
        let residual = &(-&p.divergence()) - &rho;
        assert!(residual.norm() / rho.norm() < 1e-12, "{spec}");
    }
}

#[test]
fn line_polarization_matches_real_space_segment_average() {
    // Independent path: q r integral_0^1 s(x - lambda r) dlambda sampled in
    // real space with periodic images.
    let lat = lattice(16);
    let cfg = ChargeConfig::new(&lat, 0.7, [0.21, 0.09, -0.14], 1.0);
    let p = GaugeSpec::poincare().polarization(&cfg, &lat).unwrap();
    let (nodes, weights) = gauss_legendre_unit(48);
    let oracle = VectorField::from_fn(&lat, |x| {
        let mut s = 0.0;
        for (l, w) in nodes.iter().zip(&weights) {
            let c = cfg.r.map(|v| l * v);
            s += w * periodic_gaussian(&lat, cfg.sigma, c, x);
        }
        cfg.r.map(|v| cfg.q * v * s)
    });
    let diff = (&p - &oracle).max_abs();
    assert!(diff < 1e-11 * oracle.max_abs(), "diff {diff}");
}

#[test]
fn polarization_differences_are_transverse() {
    let lat = lattice(16);
    let cfg = ChargeConfig::new(&lat, 1.0, [0.1, 0.2, -0.1], 1.0);
    let a = GaugeSpec::poincare().polarization(&cfg, &lat).unwrap();
    let b = random_custom(&lat, 9).polarization(&cfg, &lat).unwrap();
    let c = GaugeSpec::Coulomb.polarization(&cfg, &lat).unwrap();
    for d in [&a - &b, &a - &c, &b - &c] {
        assert!(d.divergence().norm() < 1e-12 * d.norm().max(1.0));
    }
}

#[test]
fn line_polarization_is_localized_on_the_segment() {
    let lat = lattice(32);
    let cfg = ChargeConfig::new(&lat, 1.0, [0.2, 0.0, 0.0], 1.0);
    let p = GaugeSpec::poincare().polarization(&cfg, &lat).unwrap();
    let peak = p.max_abs();
    let n = lat.n();
    let mut far = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let x = lat.position([i, j, k]);
                // Distance to the nearest periodic image of the segment.
                let mut dist = f64::INFINITY;
                for sx in [-1.0, 0.0, 1.0] {
                    let y = [x[0] + sx, x[1], x[2]];
                    let t = (y[0] / 0.2).clamp(0.0, 1.0);
                    let d = ((y[0] - 0.2 * t).powi(2) + y[1] * y[1] + y[2] * y[2]).sqrt();
                    dist = dist.min(d);
                }
                if dist > 6.0 * cfg.sigma {
                    let v = p.get([i, j, k]);
                    far = far.max((v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt());
                }
            }
        }
    }
    assert!(far < 1e-6 * peak, "far {far} peak {peak}");
}

#[test]
fn line_gauge_potential_is_radially_orthogonal() {
    let lat = lattice(16);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let a_t = synth::random_transverse(&lat, 2, &mut rng);
    for spec in [GaugeSpec::poincare(), quadrature_spec(32)] {
        let a = spec.vector_potential(&a_t).unwrap();
        let rms = a.rms();
        let mut worst = 0.0_f64;
        for i in 0..16 {
            for j in 0..16 {
                for k in 0..16 {
                    let x = lat.position([i, j, k]);
                    let v = a.get([i, j, k]);
                    let norm = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
                    if norm > 0.0 {
                        worst = worst.max((x[0] * v[0] + x[1] * v[1] + x[2] * v[2]).abs() / (norm * rms));
                    }
                }
            }
        }
        assert!(worst < 1e-11, "{spec:?}: {worst}");
    }
}

#[test]
fn analytic_and_quadrature_line_gauge_agree() {
    let lat = lattice(16);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let a_t = synth::random_transverse(&lat, 2, &mut rng);
    let modal = ModalVector::from_field(&a_t).unwrap();
    let quad = quadrature_spec(40);
    let ana = GaugeSpec::poincare();
    for idx in [[0, 0, 0], [3, 9, 12], [15, 2, 7], [8, 8, 8]] {
        let x = lat.position(idx);
        let a = ana.jet(&modal, x);
        let b = quad.jet(&modal, x);
        assert!((a.value - b.value).abs() < 1e-11);
        for i in 0..3 {
            assert!((a.grad[i] - b.grad[i]).abs() < 1e-10);
            for j in 0..3 {
                assert!((a.hess[i][j] - b.hess[i][j]).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn analytic_jet_matches_finite_differences() {
    let lat = lattice(8);
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let a_t = synth::random_transverse(&lat, 1, &mut rng);
    let modal = ModalVector::from_field(&a_t).unwrap();
    let spec = GaugeSpec::poincare();
    let x = [0.17, -0.31, 0.05];
    let h = 1e-5;
    let jet = spec.jet(&modal, x);
    for d in 0..3 {
        let mut xp = x;
        let mut xm = x;
        xp[d] += h;
        xm[d] -= h;
        let fd = (spec.jet(&modal, xp).value - spec.jet(&modal, xm).value) / (2.0 * h);
        assert!((fd - jet.grad[d]).abs() < 1e-8);
        let gp = spec.jet(&modal, xp).grad;
        let gm = spec.jet(&modal, xm).grad;
        for i in 0..3 {
            assert!(((gp[i] - gm[i]) / (2.0 * h) - jet.hess[i][d]).abs() < 1e-7);
        }
    }
}

#[test]
fn magnetic_field_is_gauge_invariant() {
    let lat = lattice(16);
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let a_t = synth::random_transverse(&lat, 2, &mut rng);
    let b = a_t.curl();
    let custom = random_custom(&lat, 14);
    let b_custom = custom.vector_potential(&a_t).unwrap().curl();
    assert!((&b - &b_custom).norm() < 1e-10 * b.norm());

    // The line-gauge potential is not periodic, so its curl is taken by
    // central differences of the pointwise potential.
    let modal = ModalVector::from_field(&a_t).unwrap();
    let spec = GaugeSpec::poincare();
    let bm = modal.curl([0.0; 3]);
    let h = 1e-4;
    for x in [[0.1, 0.2, -0.3], [-0.4, 0.05, 0.33]] {
        let mut jac = [[0.0; 3]; 3];
        for d in 0..3 {
            let mut xp = x;
            let mut xm = x;
            xp[d] += h;
            xm[d] -= h;
            let ap = spec.potential_at(&modal, xp);
            let am = spec.potential_at(&modal, xm);
            for i in 0..3 {
                jac[i][d] = (ap[i] - am[i]) / (2.0 * h);
            }
        }
        let curl = [jac[2][1] - jac[1][2], jac[0][2] - jac[2][0], jac[1][0] - jac[0][1]];
        let exact = modal.curl(x);
        let scale = bm.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
        for i in 0..3 {
            assert!((curl[i] - exact[i]).abs() < 1e-5 * scale);
        }
    }
}

#[test]
fn kernel_column_reproduces_gauge_function() {
    let lat = lattice(8);
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let a_t = synth::random_transverse(&lat, 2, &mut rng);
    let kernel = poincare_gt(&lat, Poincare::default());
    let chi = GaugeSpec::poincare().gauge_function(&a_t).unwrap();
    for idx in [[1, 2, 3], [4, 4, 4], [7, 0, 5]] {
        let x = lat.position(idx);
        let via_kernel = kernel.column(x).dot(&a_t);
        assert!((via_kernel - chi.get(idx)).abs() < 1e-12 * a_t.norm());
    }
}

#[test]
fn kernel_column_is_transverse_and_quadrature_converges() {
    let lat = lattice(8);
    let kernel = poincare_gt(&lat, Poincare::default());
    let x = [0.2, -0.15, 0.1];
    let exact = kernel.column(x);
    assert!(exact.divergence().norm() < 1e-12 * exact.norm());
    let q32 = kernel.column_with(x, LambdaMethod::Quadrature, 32);
    let q64 = kernel.column_with(x, LambdaMethod::Quadrature, 64);
    assert!((&q32 - &q64).max_abs() < 1e-10 * exact.max_abs());
    assert!((&q32 - &exact).max_abs() < 1e-10 * exact.max_abs());
    assert!(kernel.column([0.0; 3]).max_abs() == 0.0);
}

#[test]
fn longitudinal_green_applies_minus_ik_over_k2() {
    let lat = lattice(8);
    let cfg = ChargeConfig::new(&lat, 1.0, [0.1, 0.0, 0.2], 1.0);
    let rho = smeared_point_charge(&cfg, &lat).unwrap();
    let g = green_longitudinal(&lat);
    let applied = g.apply(&rho).unwrap();
    let p_l = longitudinal_polarization(&cfg, &lat).unwrap();
    assert!((&applied + &p_l).norm() < 1e-14);
    // div_x g_L(x, x') = delta(x - x') minus the uniform background.
    let col = g.column([0.0; 3]);
    let div = col.divergence();
    let o = lat.origin_index();
    let expected = 1.0 / lat.cell_volume() - 1.0 / lat.volume();
    assert!((div.get(o) - expected).abs() / expected < 0.5);
}

#[test]
fn coulomb_energy_matches_field_energy_quadrature() {
    let lat = lattice(16);
    let cfg = ChargeConfig::new(&lat, 1.3, [0.15, 0.1, -0.05], 1.0);
    let e = coulomb_energy(&cfg, &lat).unwrap();
    let p_l = longitudinal_polarization(&cfg, &lat).unwrap();
    let field_energy = 0.5 * lat.cell_volume() * (0..3).map(|d| p_l.component(d).samples().iter().map(|v| v * v).sum::<f64>()).sum::<f64>();
    assert!((e - field_energy).abs() < 1e-12 * e);
    assert!(e > 0.0);
}

#[test]
fn magnetization_curl_matches_finite_difference_of_polarization() {
    let lat = lattice(16);
    let cfg = ChargeConfig::new(&lat, 1.0, [0.12, -0.04, 0.07], 1.0);
    let v = [0.3, -0.7, 0.2];
    let dt = 2e-6;
    for spec in [GaugeSpec::Coulomb, GaugeSpec::poincare(), random_custom(&lat, 21), quadrature_spec(32)] {
        let m = spec.magnetization_curl(&cfg, v, &lat).unwrap();
        let fwd = cfg.with_position([0, 1, 2].map(|i| cfg.r[i] + v[i] * dt));
        let bwd = cfg.with_position([0, 1, 2].map(|i| cfg.r[i] - v[i] * dt));
        let pdot = (&spec.polarization(&fwd, &lat).unwrap() - &spec.polarization(&bwd, &lat).unwrap()).scale(0.5 / dt);
        let j = {
            let q = cfg.q;
            VectorField::from_fn(&lat, |x| {
                let s = periodic_gaussian(&lat, cfg.sigma, cfg.r, x);
                v.map(|vi| q * vi * s)
            })
        };
        let expected = &j - &pdot;
        let err = (&m - &expected).norm();
        assert!(err < 1e-7 * j.norm(), "{spec}: {err}");
        assert!(m.divergence().norm() < 1e-10 * j.norm());
    }
}

#[test]
fn duality_between_polarization_and_gauge_function() {
    // -integral P_T . A_T equals q [chi(r) - chi(0)] built from the smeared potential.
    let lat = lattice(16);
    let cfg = ChargeConfig::new(&lat, 0.9, [0.11, 0.07, -0.2], 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let a_t = synth::random_transverse(&lat, 2, &mut rng);
    let sigma = cfg.sigma;
    let smeared = a_t.spectral_multiply(|k| Complex64::new(crate::charge::form_factor(sigma, k), 0.0));
    let modal = ModalVector::from_field(&smeared).unwrap();
    for spec in [GaugeSpec::poincare(), random_custom(&lat, 32)] {
        let p_t = spec.transverse_polarization(&cfg, &lat).unwrap();
        let lhs = -p_t.dot(&a_t);
        let rhs = cfg.q * (spec.jet(&modal, cfg.r).value - spec.jet(&modal, [0.0; 3]).value);
        assert!((lhs - rhs).abs() < 1e-11 * rhs.abs().max(1.0), "{spec}: {lhs} {rhs}");
    }
}

#[test]
fn quadrature_rejects_non_transverse_input() {
    let lat = lattice(8);
    let mut rng = ChaCha8Rng::seed_from_u64(40);
    let v = synth::random_vector(&lat, 2, &mut rng);
    assert!(matches!(
        GaugeSpec::poincare().gauge_function(&v),
        Err(Error::NotTransverse { .. })
    ));
    assert!(Poincare::new(4, LambdaMethod::Quadrature).is_err());
}

#[test]
fn custom_gauge_function_matches_modal_jets() {
    let lat = lattice(8);
    let spec = random_custom(&lat, 50);
    let mut rng = ChaCha8Rng::seed_from_u64(51);
    let a_t = synth::random_transverse(&lat, 2, &mut rng);
    let modal = ModalVector::from_field(&a_t).unwrap();
    let chi = spec.gauge_function(&a_t).unwrap();
    let grad = chi.gradient();
    for idx in [[0, 0, 0], [2, 5, 7], [6, 1, 3]] {
        let jet = spec.jet(&modal, lat.position(idx));
        assert!((jet.value - chi.get(idx)).abs() < 1e-11 * chi.max_abs());
        let g = grad.get(idx);
        for d in 0..3 {
            assert!((jet.grad[d] - g[d]).abs() < 1e-10 * grad.max_abs());
        }
    }
}
