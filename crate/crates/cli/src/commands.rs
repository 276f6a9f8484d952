//! The subcommands. Each builds a [`Report`] of pass/fail checks and
//! tables, and writes plot-ready CSV data into the output directory.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use gaugeforge::constrained::{index, ConstraintSet, Linear, PhaseCoordinates};
use gaugeforge::dynamics::{Dynamics, ReducedState};
use gaugeforge::field::transverse_delta;
use gaugeforge::gauge::{CustomKernel, GaugeSpec, Poincare};
use gaugeforge::modes::ModeSet;
use gaugeforge::quantum::fock::displacement_element;
use gaugeforge::quantum::model::charge_for_coupling;
use gaugeforge::quantum::{spectrum_with, verify_equivalence, EigenOptions, EquivalenceConfig, QuantumModel};
use gaugeforge::{dump, smeared_point_charge, synth, ChargeConfig, Error, Lattice, Result, VectorField};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{ExperimentConfig, Format, GaugeName};
use crate::report::{num, Cell, Check, Report, Table};

pub const GAUSS_TOLERANCE: f64 = 1e-10;
pub const RADIAL_TOLERANCE: f64 = 1e-6;
pub const BRACKET_TOLERANCE: f64 = 1e-8;
pub const TRAJECTORY_TOLERANCE: f64 = 1e-7;
pub const DRIFT_TOLERANCE: f64 = 1e-8;
pub const MAXWELL_TOLERANCE: f64 = 1e-5;
pub const LAGRANGIAN_TOLERANCE: f64 = 1e-5;
pub const SPECTRUM_RESIDUAL_TOLERANCE: f64 = 1e-9;
pub const HERMITICITY_TOLERANCE: f64 = 1e-12;
pub const UNITARITY_TOLERANCE: f64 = 1e-8;
pub const DISPLACEMENT_TOLERANCE: f64 = 1e-10;
/// Fock cutoff of the coherent-displacement check.
pub const DISPLACEMENT_CUTOFF: usize = 40;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Decompose,
    Polarization,
    Potential,
    VerifyGauge,
    VerifyBrackets,
    DynamicsCompare,
    Spectrum,
    Equivalence,
    All,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Decompose => "decompose",
            Command::Polarization => "polarization",
            Command::Potential => "potential",
            Command::VerifyGauge => "verify-gauge",
            Command::VerifyBrackets => "verify-brackets",
            Command::DynamicsCompare => "dynamics-compare",
            Command::Spectrum => "spectrum",
            Command::Equivalence => "equivalence",
            Command::All => "all",
        }
    }

    pub const INDIVIDUAL: [Command; 8] = [
        Command::Decompose,
        Command::Polarization,
        Command::Potential,
        Command::VerifyGauge,
        Command::VerifyBrackets,
        Command::DynamicsCompare,
        Command::Spectrum,
        Command::Equivalence,
    ];
}

/// Everything a subcommand needs: validated config, seed, and the gauges.
pub struct Context {
    pub config: ExperimentConfig,
    pub seed: u64,
    pub out: PathBuf,
    lattice: Lattice,
    charge: ChargeConfig,
    gauges: Vec<(GaugeName, GaugeSpec)>,
}

impl Context {
    pub fn new(config: ExperimentConfig, seed: u64, out: PathBuf) -> Result<Self> {
        let lattice = config.lattice();
        let charge = config.charge();
        let g = &config.gauges;
        let mut gauges = Vec::new();
        for name in &g.specs {
            let spec = match name {
                GaugeName::Coulomb => GaugeSpec::Coulomb,
                GaugeName::Poincare => GaugeSpec::Poincare(Poincare::new(g.n_lambda, g.lambda)?),
                GaugeName::Custom => GaugeSpec::Custom(Arc::new(match &g.custom_path {
                    Some(path) => {
                        let kernel = CustomKernel::read_path(path)?;
                        if kernel.lattice() != &lattice {
                            return Err(Error::InvalidKernel(format!(
                                "{} is tabulated on a different lattice",
                                path.display()
                            )));
                        }
                        kernel
                    }
                    None => random_kernel(&lattice, g.custom_rank, g.custom_band, g.custom_scale, seed)?,
                })),
            };
            gauges.push((*name, spec));
        }
        Ok(Self {
            config,
            seed,
            out,
            lattice,
            charge,
            gauges,
        })
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }

    fn csv(&self) -> bool {
        self.config.output.formats.contains(&Format::Csv)
    }

    fn create(&self, report: &mut Report, name: &str) -> Result<Option<BufWriter<File>>> {
        if !self.csv() {
            return Ok(None);
        }
        std::fs::create_dir_all(&self.out)?;
        report.files.push(name.to_string());
        Ok(Some(BufWriter::new(File::create(self.out.join(name))?)))
    }

    fn write_vector(&self, report: &mut Report, name: &str, field: &VectorField) -> Result<()> {
        if let Some(mut w) = self.create(report, name)? {
            dump::write_vector(&mut w, field)?;
        }
        Ok(())
    }

    fn band(&self) -> usize {
        (self.lattice.n() / 2 - 1).min(3)
    }

    fn coulomb_first(&self) -> Vec<(GaugeName, GaugeSpec)> {
        let mut out = vec![(GaugeName::Coulomb, GaugeSpec::Coulomb)];
        out.extend(self.gauges.iter().filter(|(n, _)| *n != GaugeName::Coulomb).cloned());
        out
    }

    fn quantum_setup(&self) -> Result<(ModeSet, ChargeConfig)> {
        let q = &self.config.quantum;
        let modes = ModeSet::lowest(&self.lattice, q.modes)?;
        let charge = ChargeConfig {
            q: charge_for_coupling(q.coupling, &self.config.matter_grid(), &modes),
            r: [0.0; 3],
            ..self.charge
        };
        Ok((modes, charge))
    }
}

/// Seeded random kernel whose profiles `w_a` are scaled by `scale * L`.
pub fn random_kernel(lattice: &Lattice, rank: usize, band: usize, scale: f64, seed: u64) -> Result<CustomKernel> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let terms = (0..rank)
        .map(|_| {
            let u = synth::random_transverse(lattice, band, &mut rng);
            let w = synth::random_scalar(lattice, band, &mut rng).scale(scale * lattice.length());
            (u, w)
        })
        .collect();
    CustomKernel::new(terms)
}

pub fn run(ctx: &Context, command: Command) -> Result<Report> {
    match command {
        Command::Decompose => decompose(ctx),
        Command::Polarization => polarization(ctx),
        Command::Potential => potential(ctx),
        Command::VerifyGauge => verify_gauge(ctx),
        Command::VerifyBrackets => verify_brackets(ctx),
        Command::DynamicsCompare => dynamics_compare(ctx),
        Command::Spectrum => spectrum(ctx),
        Command::Equivalence => equivalence(ctx),
        Command::All => {
            let mut all = Report::new("all");
            for c in Command::INDIVIDUAL {
                all.absorb(run(ctx, c)?);
            }
            Ok(all)
        }
    }
}

/// `max |x . A(x)| / (|x| rms A)` over sites with every `|x_i| <= L/4`.
pub fn radial_residual(a: &VectorField) -> f64 {
    let lat = a.lattice();
    let n = lat.n();
    let quarter = 0.25 * lat.length();
    let rms = a.rms();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let x = lat.position([i, j, k]);
                if x.iter().any(|v| v.abs() > quarter) {
                    continue;
                }
                let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
                if r == 0.0 {
                    continue;
                }
                let v = a.get([i, j, k]);
                worst = worst.max((x[0] * v[0] + x[1] * v[1] + x[2] * v[2]).abs() / (r * rms));
            }
        }
    }
    worst
}

fn gauss_residual(spec: &GaugeSpec, charge: &ChargeConfig, lat: &Lattice) -> Result<f64> {
    let rho = smeared_point_charge(charge, lat)?;
    let p = spec.polarization(charge, lat)?;
    Ok((&(-&p.divergence()) - &rho).norm() / rho.norm())
}

fn decompose(ctx: &Context) -> Result<Report> {
    let mut rep = Report::new("decompose");
    let lat = &ctx.lattice;
    let v = synth::random_vector(lat, ctx.band(), &mut ctx.rng(1));
    let (t, l) = v.helmholtz();
    let by_kernel = transverse_delta(lat).convolve(&v)?;
    rep.checks.push(Check::below("transverse_divergence", t.relative_divergence(), GAUSS_TOLERANCE));
    rep.checks.push(Check::below("longitudinal_curl", l.curl().norm() / l.norm(), GAUSS_TOLERANCE));
    rep.checks.push(Check::below("recomposition", (&(&t + &l) - &v).norm() / v.norm(), 1e-12));
    rep.checks.push(Check::below("orthogonality", t.dot(&l).abs() / (t.norm() * l.norm()), 1e-12));
    rep.checks.push(Check::below("kernel_vs_projector", (&by_kernel - &t).norm() / t.norm(), 1e-8));
    let mut table = Table::new("norms", &["part", "l2_norm"]);
    for (name, f) in [("field", &v), ("transverse", &t), ("longitudinal", &l)] {
        table.push(vec![Cell::Text(name.into()), Cell::Num(f.norm())]);
    }
    rep.tables.push(table);
    ctx.write_vector(&mut rep, "decompose_field.csv", &v)?;
    ctx.write_vector(&mut rep, "decompose_transverse.csv", &t)?;
    ctx.write_vector(&mut rep, "decompose_longitudinal.csv", &l)?;
    Ok(rep)
}

fn polarization(ctx: &Context) -> Result<Report> {
    let mut rep = Report::new("polarization");
    let lat = &ctx.lattice;
    let mut table = Table::new("polarization", &["gauge", "gauss_residual", "transverse_norm", "total_norm"]);
    for (name, spec) in &ctx.gauges {
        let gauss = gauss_residual(spec, &ctx.charge, lat)?;
        let p = spec.polarization(&ctx.charge, lat)?;
        let p_t = spec.transverse_polarization(&ctx.charge, lat)?;
        rep.checks.push(Check::below(format!("{}/gauss_law", name.as_str()), gauss, GAUSS_TOLERANCE));
        if p_t.norm() > 0.0 {
            rep.checks.push(Check::below(
                format!("{}/transverse_part_divergence", name.as_str()),
                p_t.relative_divergence(),
                GAUSS_TOLERANCE,
            ));
        }
        table.push(vec![
            Cell::Text(name.as_str().into()),
            Cell::Num(gauss),
            Cell::Num(p_t.norm()),
            Cell::Num(p.norm()),
        ]);
        ctx.write_vector(&mut rep, &format!("polarization_{}.csv", name.as_str()), &p)?;
    }
    rep.tables.push(table);
    Ok(rep)
}

fn potential(ctx: &Context) -> Result<Report> {
    let mut rep = Report::new("potential");
    let lat = &ctx.lattice;
    let a_t = synth::random_transverse(lat, ctx.band(), &mut ctx.rng(2));
    let curl_t = a_t.curl();
    let mut table = Table::new("potential", &["gauge", "gauge_part_norm", "radial_residual"]);
    for (name, spec) in &ctx.gauges {
        let a = spec.vector_potential(&a_t)?;
        let gauge_part = (&a - &a_t).norm() / a_t.norm();
        let radial = radial_residual(&a);
        match name {
            GaugeName::Coulomb => rep.checks.push(Check::below("coulomb/potential_is_transverse_part", gauge_part, 1e-15)),
            GaugeName::Poincare => rep.checks.push(Check::below("poincare/radial_condition", radial, RADIAL_TOLERANCE)),
            GaugeName::Custom => rep.checks.push(Check::below(
                "custom/magnetic_field_invariance",
                (&a.curl() - &curl_t).norm() / curl_t.norm(),
                GAUSS_TOLERANCE,
            )),
        }
        table.push(vec![Cell::Text(name.as_str().into()), Cell::Num(gauge_part), Cell::Num(radial)]);
        ctx.write_vector(&mut rep, &format!("potential_{}.csv", name.as_str()), &a)?;
    }
    rep.tables.push(table);
    Ok(rep)
}

fn verify_gauge(ctx: &Context) -> Result<Report> {
    let mut rep = Report::new("verify-gauge");
    let lat = &ctx.lattice;
    let a_t = synth::random_transverse(lat, ctx.band(), &mut ctx.rng(2));
    let mut table = Table::new("gauge", &["gauge", "gauss_residual", "transverse_polarization_norm", "radial_residual"]);
    for (name, spec) in &ctx.gauges {
        let gauss = gauss_residual(spec, &ctx.charge, lat)?;
        let p_t = spec.transverse_polarization(&ctx.charge, lat)?.norm();
        let a = spec.vector_potential(&a_t)?;
        let radial = radial_residual(&a);
        rep.checks.push(Check::below(format!("{}/gauss_law", name.as_str()), gauss, GAUSS_TOLERANCE));
        match name {
            GaugeName::Coulomb => {
                rep.checks.push(Check::holds("coulomb/kernel_vanishes", p_t == 0.0));
                rep.checks.push(Check::holds("coulomb/potential_equals_transverse_part", (&a - &a_t).norm() == 0.0));
            }
            GaugeName::Poincare => rep.checks.push(Check::below("poincare/radial_condition", radial, RADIAL_TOLERANCE)),
            GaugeName::Custom => {}
        }
        table.push(vec![Cell::Text(name.as_str().into()), Cell::Num(gauss), Cell::Num(p_t), Cell::Num(radial)]);
    }
    rep.tables.push(table);
    Ok(rep)
}

/// Largest brute-force vs closed-form bracket differences over random states.
#[derive(Clone, Copy, Debug, Default)]
pub struct BracketDiffs {
    pub r_p: f64,
    pub a_pi: f64,
    pub at_big_pi: f64,
    pub p_pi: f64,
    pub p_big_pi: f64,
    pub r_big_pi: f64,
}

pub fn bracket_diffs(set: &ConstraintSet, states: &[PhaseCoordinates]) -> Result<BracketDiffs> {
    let m = set.len();
    let dim = set.dim();
    let mut d = BracketDiffs::default();
    let closed_a_pi: Vec<f64> = (0..m * 3 * m * 3)
        .map(|k| set.closed_a_pi(k / (9 * m), (k / (3 * m)) % 3, (k / 3) % m, k % 3))
        .collect();
    let coord = |i: usize| Linear::coordinate(dim, i);
    for z in states {
        let dirac = set.dirac(z)?;
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 1.0 } else { 0.0 };
                d.r_p = d.r_p.max((dirac.bracket(&coord(index::r(i)), &coord(index::p(m, j)), z) - expect).abs());
            }
        }
        for gamma in 0..m {
            for i in 0..3 {
                let a = coord(index::a(m, gamma, i));
                let at = set.transverse_a(gamma, i);
                for delta in 0..m {
                    for j in 0..3 {
                        let pi = coord(index::pi(m, delta, j));
                        let closed = closed_a_pi[((gamma * 3 + i) * m + delta) * 3 + j];
                        d.a_pi = d.a_pi.max((dirac.bracket(&a, &pi, z) - closed).abs());
                        let big_pi = set.pi_functional(delta, j);
                        let got = dirac.bracket(&at, &big_pi, z);
                        d.at_big_pi = d.at_big_pi.max((got - set.closed_at_pi(gamma, i, delta, j)).abs());
                    }
                }
            }
        }
        for i in 0..3 {
            let p = coord(index::p(m, i));
            let r = coord(index::r(i));
            for delta in 0..m {
                for j in 0..3 {
                    let pi = coord(index::pi(m, delta, j));
                    let big_pi = set.pi_functional(delta, j);
                    d.p_pi = d.p_pi.max((dirac.bracket(&p, &pi, z) - set.closed_p_pi(i, delta, j, z.r)).abs());
                    d.p_big_pi = d.p_big_pi.max(dirac.bracket(&p, &big_pi, z).abs());
                    d.r_big_pi = d.r_big_pi.max(dirac.bracket(&r, &big_pi, z).abs());
                }
            }
        }
    }
    Ok(d)
}

fn verify_brackets(ctx: &Context) -> Result<Report> {
    let mut rep = Report::new("verify-brackets");
    let cfg = &ctx.config.brackets;
    let mut rng = ctx.rng(3);
    let r_max = 0.2 * ctx.lattice.length();
    let states: Vec<PhaseCoordinates> = (0..cfg.states)
        .map(|_| PhaseCoordinates::random(cfg.modes, 1.0, r_max, &mut rng))
        .collect();
    let mut table = Table::new("brackets", &["gauge", "pair", "max_difference"]);
    for (name, spec) in &ctx.gauges {
        let set = ConstraintSet::new(&ctx.lattice, spec, &ctx.charge, cfg.modes)?;
        let d = bracket_diffs(&set, &states)?;
        for (pair, value) in [
            ("{r,p}", d.r_p),
            ("{a,pi}", d.a_pi),
            ("{A_T,Pi}", d.at_big_pi),
            ("{p,pi}", d.p_pi),
            ("{p,Pi}", d.p_big_pi),
            ("{r,Pi}", d.r_big_pi),
        ] {
            rep.checks.push(Check::below(format!("{}/{pair}", name.as_str()), value, BRACKET_TOLERANCE));
            table.push(vec![Cell::Text(name.as_str().into()), Cell::Text(pair.into()), Cell::Num(value)]);
        }
    }
    rep.tables.push(table);
    Ok(rep)
}

fn initial_state(ctx: &Context, modes: usize) -> ReducedState {
    let amp = ctx.config.dynamics.field_amplitude;
    let mut rng = ctx.rng(4);
    let mut draw = |_| if amp > 0.0 { rng.gen_range(-amp..amp) } else { 0.0 };
    let q: Vec<f64> = (0..modes).map(&mut draw).collect();
    let pi: Vec<f64> = (0..modes).map(&mut draw).collect();
    ReducedState::new(ctx.charge.r, ctx.config.dynamics.p, q, pi)
}

fn write_trajectory(ctx: &Context, rep: &mut Report, name: &str, traj: &gaugeforge::dynamics::Trajectory) -> Result<()> {
    if let Some(mut w) = ctx.create(rep, name)? {
        traj.write_csv(&mut w)?;
    }
    Ok(())
}

fn dynamics_compare(ctx: &Context) -> Result<Report> {
    let mut rep = Report::new("dynamics-compare");
    let cfg = &ctx.config.dynamics;
    let modes = ModeSet::lowest(&ctx.lattice, cfg.modes)?;
    let state0 = initial_state(ctx, cfg.modes);
    let coulomb = Dynamics::new(&modes, &GaugeSpec::Coulomb, &ctx.charge)?;
    let mut table = Table::new(
        "dynamics",
        &[
            "gauge",
            "r_deviation",
            "kinetic_deviation",
            "e_t_deviation",
            "b_deviation",
            "canonical_p_difference",
            "energy_drift",
            "maxwell_ampere",
            "newton_lorentz",
            "faraday",
            "lagrangian",
        ],
    );
    let reference = coulomb.integrate(&state0, cfg.dt, cfg.steps)?;
    let mut runs = vec![(GaugeName::Coulomb, None, reference.clone())];
    for (name, spec) in ctx.gauges.iter().filter(|(n, _)| *n != GaugeName::Coulomb) {
        let other = Dynamics::new(&modes, spec, &ctx.charge)?;
        let mapped = coulomb.map_state(&state0, &other)?;
        let traj = other.integrate(&mapped, cfg.dt, cfg.steps)?;
        let cmp = gaugeforge::dynamics::compare_trajectories(&reference, &traj, TRAJECTORY_TOLERANCE);
        let worst = cmp.r.max(cmp.kinetic).max(cmp.e_t).max(cmp.b);
        rep.checks.push(Check::below(format!("{}/observable_deviation", name.as_str()), worst, TRAJECTORY_TOLERANCE));
        runs.push((*name, Some((other, cmp)), traj));
    }
    for (name, extra, traj) in &runs {
        let dynamics = extra.as_ref().map(|(d, _)| d).unwrap_or(&coulomb);
        let drift = traj.energy_drift();
        let res = dynamics.motion_residuals(traj);
        rep.checks.push(Check::below(format!("{}/energy_drift", name.as_str()), drift, DRIFT_TOLERANCE));
        rep.checks.push(Check::below(format!("{}/maxwell_ampere", name.as_str()), res.maxwell_ampere, MAXWELL_TOLERANCE));
        let lagrangian = if *name == GaugeName::Coulomb {
            f64::NAN
        } else {
            let l = dynamics.lagrangian_identity(traj, cfg.lagrangian_samples)?.relative;
            rep.checks.push(Check::below(format!("{}/lagrangian_identity", name.as_str()), l, LAGRANGIAN_TOLERANCE));
            l
        };
        let cmp = extra.as_ref().map(|(_, c)| c.clone());
        let dev = |f: fn(&gaugeforge::dynamics::ComparisonReport) -> f64| Cell::Num(cmp.as_ref().map(f).unwrap_or(0.0));
        table.push(vec![
            Cell::Text(name.as_str().into()),
            dev(|c| c.r),
            dev(|c| c.kinetic),
            dev(|c| c.e_t),
            dev(|c| c.b),
            dev(|c| c.canonical_p),
            Cell::Num(drift),
            Cell::Num(res.maxwell_ampere),
            Cell::Num(res.newton_lorentz),
            Cell::Num(res.faraday),
            Cell::Num(lagrangian),
        ]);
        write_trajectory(ctx, &mut rep, &format!("trajectory_{}.csv", name.as_str()), traj)?;
    }
    rep.tables.push(table);
    Ok(rep)
}

fn spectrum(ctx: &Context) -> Result<Report> {
    let mut rep = Report::new("spectrum");
    let q = &ctx.config.quantum;
    let (modes, charge) = ctx.quantum_setup()?;
    let n_max = *q.n_max.last().expect("validated cutoffs");
    let model = QuantumModel::new(&ctx.config.matter_grid(), &modes, &charge, n_max)?;
    let mut table = Table::new("spectrum", &["gauge", "n_max", "index", "eigenvalue", "residual"]);
    let mut reference: Option<Vec<f64>> = None;
    for (name, spec) in ctx.coulomb_first() {
        let h = model.build_hamiltonian(&spec);
        let s = spectrum_with(&h, q.n_eigs, &EigenOptions::default())?;
        rep.checks.push(Check::below(format!("{}/hermiticity", name.as_str()), h.hermiticity_defect(), HERMITICITY_TOLERANCE));
        rep.checks.push(Check::below(
            format!("{}/eigen_residual", name.as_str()),
            s.max_relative_residual(),
            SPECTRUM_RESIDUAL_TOLERANCE,
        ));
        for (i, (v, r)) in s.values.iter().zip(&s.residuals).enumerate() {
            table.push(vec![
                Cell::Text(name.as_str().into()),
                Cell::Int(n_max as i64),
                Cell::Int(i as i64),
                Cell::Num(*v),
                Cell::Num(*r),
            ]);
        }
        match &reference {
            None => reference = Some(s.values.clone()),
            Some(base) => {
                let dev = base
                    .iter()
                    .zip(&s.values)
                    .map(|(a, b)| (a - b).abs() / a.abs())
                    .fold(0.0, f64::max);
                rep.checks.push(Check::below(format!("{}/matches_coulomb", name.as_str()), dev, 1e-6));
            }
        }
    }
    if let Some(mut w) = ctx.create(&mut rep, "spectrum.csv")? {
        use std::io::Write;
        writeln!(w, "gauge,n_max,index,eigenvalue,residual")?;
        for row in &table.rows {
            if let [Cell::Text(g), Cell::Int(n), Cell::Int(i), Cell::Num(v), Cell::Num(r)] = row.as_slice() {
                writeln!(w, "{g},{n},{i},{v:.16e},{r:.16e}")?;
            }
        }
    }
    rep.tables.push(table);
    Ok(rep)
}

/// Largest `|<m|U|n> - <m|D(beta)|n>|` over sites and `m, n <= n_max/2`,
/// with `U` the Coulomb-to-`spec` unitary at cutoff `n_max` on one mode.
pub fn displacement_deviation(model: &QuantumModel, spec: &GaugeSpec) -> Result<f64> {
    if model.modes().len() != 1 {
        return Err(Error::InvalidParameter("displacement check needs a single mode".into()));
    }
    let u = model.gauge_unitary(&GaugeSpec::Coulomb, spec);
    let pol = model.polarization_table(spec);
    let w = model.modes().modes()[0].omega();
    let half = model.n_max() / 2;
    let mut worst: f64 = 0.0;
    for (s, p) in pol[0].iter().enumerate() {
        let beta = Complex64::new(0.0, -p / (2.0 * w).sqrt());
        for m in 0..=half {
            for n in 0..=half {
                let got = u.get(model.index(s, m), model.index(s, n));
                worst = worst.max((got - displacement_element(m, n, beta)).norm());
            }
        }
    }
    Ok(worst)
}

fn equivalence(ctx: &Context) -> Result<Report> {
    let mut rep = Report::new("equivalence");
    let q = &ctx.config.quantum;
    let grid = ctx.config.matter_grid();
    let (modes, charge) = ctx.quantum_setup()?;
    let cfg = EquivalenceConfig {
        cutoffs: q.n_max.clone(),
        n_eigs: q.n_eigs,
        ..Default::default()
    };
    let mut table = Table::new(
        "equivalence",
        &[
            "spec_a",
            "spec_b",
            "n_max",
            "eigen_deviation",
            "operator_deviation",
            "unitarity_defect",
            "ground_a",
            "ground_b",
            "photons_a",
            "photons_b",
        ],
    );
    for (name, spec) in ctx.gauges.iter().filter(|(n, _)| *n != GaugeName::Coulomb) {
        let r = verify_equivalence(&grid, &modes, &charge, &GaugeSpec::Coulomb, spec, &cfg)?;
        let last = r.cutoffs.len() - 1;
        rep.checks.push(Check::holds(format!("coulomb-{}/monotone", name.as_str()), r.monotone));
        rep.checks.push(Check::below(format!("coulomb-{}/eigen_deviation", name.as_str()), r.eigen_deviation[last], cfg.tolerance));
        rep.checks.push(Check::below(
            format!("coulomb-{}/operator_deviation", name.as_str()),
            r.operator_deviation[last],
            cfg.tolerance,
        ));
        rep.checks.push(Check::below(
            format!("coulomb-{}/unitarity_defect", name.as_str()),
            r.unitarity_defect[last],
            UNITARITY_TOLERANCE,
        ));
        for k in 0..r.cutoffs.len() {
            table.push(vec![
                Cell::Text(r.spec_a.clone()),
                Cell::Text(r.spec_b.clone()),
                Cell::Int(r.cutoffs[k] as i64),
                Cell::Num(r.eigen_deviation[k]),
                Cell::Num(r.operator_deviation[k]),
                Cell::Num(r.unitarity_defect[k]),
                Cell::Num(r.lowest_a[k][0]),
                Cell::Num(r.lowest_b[k][0]),
                Cell::Num(r.ground_photons_a[k]),
                Cell::Num(r.ground_photons_b[k]),
            ]);
        }
        let floats = |v: &[f64]| serde_json::Value::Array(v.iter().map(|x| num(*x)).collect());
        rep.records.push(serde_json::json!({
            "spec_a": r.spec_a,
            "spec_b": r.spec_b,
            "cutoffs": r.cutoffs,
            "eigen_deviation": floats(&r.eigen_deviation),
            "operator_deviation": floats(&r.operator_deviation),
            "unitarity_defect": floats(&r.unitarity_defect),
            "pass": r.pass,
        }));
        let neutral = ChargeConfig { q: 0.0, ..charge };
        let small = EquivalenceConfig {
            cutoffs: q.n_max.iter().copied().take(2).collect(),
            n_eigs: q.n_eigs.min(3),
            ..Default::default()
        };
        let z = verify_equivalence(&grid, &modes, &neutral, &GaugeSpec::Coulomb, spec, &small)?;
        rep.checks.push(Check::holds(
            format!("coulomb-{}/zero_charge_exact", name.as_str()),
            z.eigen_deviation.iter().chain(&z.operator_deviation).all(|d| *d == 0.0),
        ));
        if *name == GaugeName::Poincare && modes.len() == 1 {
            let model = QuantumModel::new(&grid, &modes, &charge, DISPLACEMENT_CUTOFF)?;
            let dev = displacement_deviation(&model, spec)?;
            rep.checks.push(Check::below("coulomb-poincare/displacement_elements", dev, DISPLACEMENT_TOLERANCE));
        }
    }
    if let Some(mut w) = ctx.create(&mut rep, "equivalence.csv")? {
        use std::io::Write;
        writeln!(w, "{}", table.columns.join(","))?;
        for row in &table.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::Num(x) => format!("{x:.16e}"),
                    Cell::Int(i) => i.to_string(),
                    Cell::Text(s) => s.clone(),
                    Cell::Bool(b) => b.to_string(),
                })
                .collect();
            writeln!(w, "{}", cells.join(","))?;
        }
    }
    rep.tables.push(table);
    Ok(rep)
}

/// Writes `<command>.json` into the output directory.
pub fn write_report(out: &Path, report: &Report, config_hash: &str, seed: u64) -> Result<PathBuf> {
    std::fs::create_dir_all(out)?;
    let path = out.join(format!("{}.json", report.command));
    std::fs::write(&path, report.to_json_string(config_hash, seed))?;
    Ok(path)
}
