//! Hamiltonian evolution of the reduced system `(r, p, A_T, Pi)` in a chosen
//! gauge, the canonical map between gauges, and trajectory-level checks.
//!
//! The transverse field is truncated to a [`ModeSet`] of real modes `u_m`:
//! `A_T = sum Q_m u_m` and `Pi = sum P_m u_m`. In gauge `g` the Hamiltonian is
//!
//! `H_g = |p - q A_g(r)|^2 / 2m + (1/2) sum (P_m + p_m(r))^2 + (1/2) sum w_m^2 Q_m^2 + V(r)`
//!
//! where `A_g(r) = sum Q_m (F_m u_m(r) + grad chi_m(r))` is the smeared gauge
//! potential, `p_m(r) = integral u_m . P_gT = -q (chi_m(r) - chi_m(0))` is the
//! retained part of the transverse polarization, and `V(r) = (1/2) integral P_L^2`
//! is the Coulomb energy. `chi_m` is the gauge function of the smeared mode
//! `F_m u_m`. The longitudinal field is slaved to `r`, so Gauss's law holds
//! identically.

use std::io::Write;

use crate::charge::ChargeConfig;
use crate::error::{Error, Result};
use crate::field::VectorField;
use crate::gauge::{CoulombPotential, GaugeSpec, Jet, LambdaMethod, Poincare};
use crate::lattice::Lattice;
use crate::modal::ModalVector;
use crate::modes::ModeSet;
use crate::quadrature::gauss_legendre_unit;

/// Fixed-point tolerance of the implicit midpoint step.
pub const MIDPOINT_TOLERANCE: f64 = 1e-13;
const MAX_ITERATIONS: usize = 200;

/// Largest `dt * max(w)` accepted by [`Dynamics::integrate`].
pub const MAX_STEP_PHASE: f64 = 0.1;

/// Reduced canonical state.
#[derive(Clone, Debug, PartialEq)]
pub struct ReducedState {
    pub r: [f64; 3],
    pub p: [f64; 3],
    /// Transverse field coordinates `Q_m`.
    pub q: Vec<f64>,
    /// Transverse field momenta `P_m`.
    pub pi: Vec<f64>,
}

impl ReducedState {
    pub fn new(r: [f64; 3], p: [f64; 3], q: Vec<f64>, pi: Vec<f64>) -> Self {
        Self { r, p, q, pi }
    }

    /// Projects `A_T` and `Pi` lattice fields on the modes.
    pub fn from_fields(modes: &ModeSet, r: [f64; 3], p: [f64; 3], a_t: &VectorField, pi: &VectorField) -> Self {
        Self {
            r,
            p,
            q: modes.project(a_t),
            pi: modes.project(pi),
        }
    }

    fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(6 + 2 * self.q.len());
        v.extend_from_slice(&self.r);
        v.extend_from_slice(&self.p);
        v.extend_from_slice(&self.q);
        v.extend_from_slice(&self.pi);
        v
    }

    fn from_vec(v: &[f64]) -> Self {
        let m = (v.len() - 6) / 2;
        Self {
            r: [v[0], v[1], v[2]],
            p: [v[3], v[4], v[5]],
            q: v[6..6 + m].to_vec(),
            pi: v[6 + m..].to_vec(),
        }
    }
}

/// Mode functions and their gauge jets at one particle position.
struct Local {
    /// `a_m(r) = F_m u_m(r) + grad chi_m(r)`.
    a: Vec<[f64; 3]>,
    /// `da[m][i][j] = d_i a_m,j`.
    da: Vec<[[f64; 3]; 3]>,
    /// `p_m(r)`.
    pg: Vec<f64>,
    /// `grad p_m(r)`.
    dpg: Vec<[f64; 3]>,
}

/// Gauge-invariant and gauge-dependent observables at one instant.
#[derive(Clone, Debug, PartialEq)]
pub struct Observables {
    pub r: [f64; 3],
    /// Canonical momentum (gauge dependent).
    pub p: [f64; 3],
    /// Kinetic momentum `m dr/dt = p - q A_g(r)`.
    pub kinetic: [f64; 3],
    /// Transverse electric field modes `E_T,m = -(P_m + p_m(r))`.
    pub e_t: Vec<f64>,
    /// Transverse potential modes `Q_m`, which fix `B = curl A_T`.
    pub a_t: Vec<f64>,
    pub energy: f64,
    pub e_t_norm: f64,
    pub b_norm: f64,
    pub e_l_norm: f64,
}

/// Result of [`Dynamics::integrate`].
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub dt: f64,
    pub times: Vec<f64>,
    pub states: Vec<ReducedState>,
    pub observables: Vec<Observables>,
}

impl Trajectory {
    /// Largest `|H(t) - H(0)| / |H(0)|`.
    pub fn energy_drift(&self) -> f64 {
        let h0 = self.observables[0].energy;
        self.observables
            .iter()
            .map(|o| (o.energy - h0).abs())
            .fold(0.0, f64::max)
            / h0.abs().max(f64::MIN_POSITIVE)
    }

    /// Writes the trajectory as CSV.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "t,rx,ry,rz,px,py,pz,H,ET_norm,B_norm,EL_norm,mvx,mvy,mvz")?;
        for (t, o) in self.times.iter().zip(&self.observables) {
            writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                t,
                o.r[0],
                o.r[1],
                o.r[2],
                o.p[0],
                o.p[1],
                o.p[2],
                o.energy,
                o.e_t_norm,
                o.b_norm,
                o.e_l_norm,
                o.kinetic[0],
                o.kinetic[1],
                o.kinetic[2]
            )?;
        }
        Ok(())
    }
}

/// Largest deviations between two gauge runs.
#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonReport {
    pub r: f64,
    pub kinetic: f64,
    pub e_t: f64,
    pub b: f64,
    /// Canonical momentum difference, reported for contrast only.
    pub canonical_p: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Residuals of the equations of motion along a trajectory, by central differences.
#[derive(Clone, Debug, PartialEq)]
pub struct MotionResiduals {
    /// `max |m r'' - q (E(r) + r' x B(r))| / max |q E|`.
    pub newton_lorentz: f64,
    /// `max |E' - curl B + J|` over transverse modes, relative to `max |curl B|`.
    pub maxwell_ampere: f64,
    /// `max |Q' + E_T|` (Faraday's law for the transverse modes), relative to `max |E_T|`.
    pub faraday: f64,
}

/// Result of the Lagrangian identity check.
#[derive(Clone, Debug, PartialEq)]
pub struct LagrangianReport {
    pub times: Vec<f64>,
    /// `L_g - L_c + d/dt integral P_T . A_T` at each sample time.
    pub residuals: Vec<f64>,
    /// Typical size of the terms, `max |d/dt integral P_T . A_T|`.
    pub scale: f64,
    /// `max |residual| / scale`.
    pub relative: f64,
}

/// Equations of motion for one gauge, charge and mode set.
#[derive(Clone, Debug)]
pub struct Dynamics {
    lattice: Lattice,
    modes: ModeSet,
    spec: GaugeSpec,
    charge: ChargeConfig,
    form: Vec<f64>,
    chi_origin: Vec<f64>,
    coulomb: CoulombPotential,
}

impl Dynamics {
    pub fn new(modes: &ModeSet, spec: &GaugeSpec, charge: &ChargeConfig) -> Result<Self> {
        let lattice = modes.lattice().clone();
        charge.validate(&lattice)?;
        let form: Vec<f64> = modes.modes().iter().map(|m| charge.form_factor(m.k())).collect();
        let chi_origin = modes
            .modes()
            .iter()
            .zip(&form)
            .map(|(m, f)| spec.wave_jet(&m.wave().scaled(*f), [0.0; 3]).value)
            .collect();
        let coulomb = CoulombPotential::new(charge, &lattice);
        Ok(Self {
            lattice,
            modes: modes.clone(),
            spec: spec.clone(),
            charge: *charge,
            form,
            chi_origin,
            coulomb,
        })
    }

    pub fn spec(&self) -> &GaugeSpec {
        &self.spec
    }

    pub fn modes(&self) -> &ModeSet {
        &self.modes
    }

    pub fn charge(&self) -> &ChargeConfig {
        &self.charge
    }

    /// Coulomb energy `V(r) = (1/2) integral P_L^2` and its gradient.
    pub fn coulomb_potential(&self, r: [f64; 3]) -> (f64, [f64; 3]) {
        self.coulomb.eval(r)
    }

    fn local(&self, r: [f64; 3]) -> Local {
        let m = self.modes.len();
        let q = self.charge.q;
        let mut out = Local {
            a: Vec::with_capacity(m),
            da: Vec::with_capacity(m),
            pg: Vec::with_capacity(m),
            dpg: Vec::with_capacity(m),
        };
        for ((mode, f), c0) in self.modes.modes().iter().zip(&self.form).zip(&self.chi_origin) {
            let jet: Jet = self.spec.wave_jet(&mode.wave().scaled(*f), r);
            let u = mode.eval(r);
            let du = mode.scalar.gradient(r);
            out.a.push([0, 1, 2].map(|j| f * u[j] + jet.grad[j]));
            out.da
                .push([0, 1, 2].map(|i| [0, 1, 2].map(|j| f * du[i] * mode.e[j] + jet.hess[i][j])));
            out.pg.push(-q * (jet.value - c0));
            out.dpg.push(jet.grad.map(|g| -q * g));
        }
        out
    }

    /// Smeared gauge potential `A_g(r)` for the field coordinates `q`.
    pub fn potential_at(&self, q: &[f64], r: [f64; 3]) -> [f64; 3] {
        let local = self.local(r);
        let mut a = [0.0; 3];
        for (qm, am) in q.iter().zip(&local.a) {
            for d in 0..3 {
                a[d] += qm * am[d];
            }
        }
        a
    }

    /// Retained transverse polarization components `p_m(r)`.
    pub fn polarization_modes(&self, r: [f64; 3]) -> Vec<f64> {
        self.local(r).pg
    }

    fn velocity(&self, s: &ReducedState, local: &Local) -> [f64; 3] {
        let mut v = s.p;
        for (qm, am) in s.q.iter().zip(&local.a) {
            for d in 0..3 {
                v[d] -= self.charge.q * qm * am[d];
            }
        }
        v.map(|x| x / self.charge.m)
    }

    pub fn hamiltonian(&self, s: &ReducedState) -> f64 {
        let local = self.local(s.r);
        let v = self.velocity(s, &local);
        let kinetic = 0.5 * self.charge.m * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
        let mut field = 0.0;
        for (i, mode) in self.modes.modes().iter().enumerate() {
            let y = s.pi[i] + local.pg[i];
            let w = mode.omega();
            field += 0.5 * (y * y + w * w * s.q[i] * s.q[i]);
        }
        kinetic + field + self.coulomb_potential(s.r).0
    }

    /// Time derivative `J grad H` in the flattened layout `[r, p, Q, P]`.
    fn flow(&self, z: &[f64]) -> Vec<f64> {
        let s = ReducedState::from_vec(z);
        let local = self.local(s.r);
        let v = self.velocity(&s, &local);
        let q = self.charge.q;
        let m = self.modes.len();
        let y: Vec<f64> = (0..m).map(|i| s.pi[i] + local.pg[i]).collect();
        let mut dh_dr = self.coulomb_potential(s.r).1;
        for i in 0..m {
            for d in 0..3 {
                let va: f64 = (0..3).map(|j| v[j] * local.da[i][d][j]).sum();
                dh_dr[d] += -q * s.q[i] * va + y[i] * local.dpg[i][d];
            }
        }
        let mut out = vec![0.0; z.len()];
        for d in 0..3 {
            out[d] = v[d];
            out[3 + d] = -dh_dr[d];
        }
        for (i, mode) in self.modes.modes().iter().enumerate() {
            let w = mode.omega();
            let va: f64 = (0..3).map(|j| v[j] * local.a[i][j]).sum();
            out[6 + i] = y[i];
            out[6 + m + i] = q * va - w * w * s.q[i];
        }
        out
    }

    /// One implicit-midpoint step, solved by fixed-point iteration.
    pub fn step(&self, s: &ReducedState, dt: f64) -> Result<ReducedState> {
        let z0 = s.to_vec();
        let mut z1 = z0.clone();
        let f0 = self.flow(&z0);
        for (a, b) in z1.iter_mut().zip(&f0) {
            *a += dt * b;
        }
        for _ in 0..MAX_ITERATIONS {
            let mid: Vec<f64> = z0.iter().zip(&z1).map(|(a, b)| 0.5 * (a + b)).collect();
            let f = self.flow(&mid);
            let mut change = 0.0_f64;
            for i in 0..z1.len() {
                let next = z0[i] + dt * f[i];
                change = change.max((next - z1[i]).abs() / z0[i].abs().max(1.0));
                z1[i] = next;
            }
            if change < MIDPOINT_TOLERANCE {
                return Ok(ReducedState::from_vec(&z1));
            }
        }
        Err(Error::Convergence(format!(
            "implicit midpoint did not converge in {MAX_ITERATIONS} iterations"
        )))
    }

    pub fn observables(&self, s: &ReducedState) -> Observables {
        let local = self.local(s.r);
        let v = self.velocity(s, &local);
        let e_t: Vec<f64> = (0..self.modes.len()).map(|i| -(s.pi[i] + local.pg[i])).collect();
        let b2: f64 = self
            .modes
            .modes()
            .iter()
            .zip(&s.q)
            .map(|(m, q)| m.omega().powi(2) * q * q)
            .sum();
        let (coulomb, _) = self.coulomb_potential(s.r);
        Observables {
            r: s.r,
            p: s.p,
            kinetic: v.map(|x| x * self.charge.m),
            e_t_norm: e_t.iter().map(|x| x * x).sum::<f64>().sqrt(),
            e_t,
            a_t: s.q.clone(),
            energy: self.hamiltonian(s),
            b_norm: b2.sqrt(),
            e_l_norm: (2.0 * coulomb).sqrt(),
        }
    }

    /// Integrates `n_steps` implicit-midpoint steps of size `dt`.
    pub fn integrate(&self, state0: &ReducedState, dt: f64, n_steps: usize) -> Result<Trajectory> {
        let limit = MAX_STEP_PHASE / self.modes.max_omega().max(f64::MIN_POSITIVE);
        if !(dt > 0.0 && dt <= limit) {
            return Err(Error::StepSize { dt, limit });
        }
        if state0.q.len() != self.modes.len() || state0.pi.len() != self.modes.len() {
            return Err(Error::InvalidParameter(format!(
                "state has {} field modes, dynamics has {}",
                state0.q.len(),
                self.modes.len()
            )));
        }
        let mut states = Vec::with_capacity(n_steps + 1);
        let mut observables = Vec::with_capacity(n_steps + 1);
        let mut s = state0.clone();
        observables.push(self.observables(&s));
        states.push(s.clone());
        for _ in 0..n_steps {
            s = self.step(&s, dt)?;
            observables.push(self.observables(&s));
            states.push(s.clone());
        }
        Ok(Trajectory {
            dt,
            times: (0..=n_steps).map(|n| n as f64 * dt).collect(),
            states,
            observables,
        })
    }

    fn check_compatible(&self, other: &Dynamics) -> Result<()> {
        self.lattice.check_same(&other.lattice)?;
        let (a, b) = (&self.charge, &other.charge);
        if (a.q, a.m, a.sigma) != (b.q, b.m, b.sigma) || self.modes.modes() != other.modes.modes() {
            return Err(Error::InvalidParameter(
                "gauge map needs identical charge and mode set".into(),
            ));
        }
        Ok(())
    }

    /// Canonical map from this gauge to `other`:
    /// `p -> p + q (A_other - A_self)(r)`, `P -> P + p_self(r) - p_other(r)`.
    pub fn map_state(&self, s: &ReducedState, other: &Dynamics) -> Result<ReducedState> {
        self.check_compatible(other)?;
        let from = self.local(s.r);
        let to = other.local(s.r);
        let q = self.charge.q;
        let mut out = s.clone();
        for (i, qm) in s.q.iter().enumerate() {
            for d in 0..3 {
                out.p[d] += q * qm * (to.a[i][d] - from.a[i][d]);
            }
            out.pi[i] += from.pg[i] - to.pg[i];
        }
        Ok(out)
    }

    /// Runs `state0` in this gauge and its image in `other`, comparing the
    /// gauge-invariant observables step by step.
    pub fn compare(
        &self,
        other: &Dynamics,
        state0: &ReducedState,
        dt: f64,
        n_steps: usize,
        tolerance: f64,
    ) -> Result<(ComparisonReport, Trajectory, Trajectory)> {
        let a = self.integrate(state0, dt, n_steps)?;
        let b = other.integrate(&self.map_state(state0, other)?, dt, n_steps)?;
        let report = compare_trajectories(&a, &b, tolerance);
        Ok((report, a, b))
    }

    /// Smeared fields at the particle: `(E_T(r), B(r))`.
    fn particle_fields(&self, o: &Observables) -> ([f64; 3], [f64; 3]) {
        let mut e = [0.0; 3];
        let mut b = [0.0; 3];
        for ((mode, f), (et, q)) in self.modes.modes().iter().zip(&self.form).zip(o.e_t.iter().zip(&o.a_t)) {
            let u = mode.eval(o.r);
            let c = mode.curl(o.r);
            for d in 0..3 {
                e[d] += f * et * u[d];
                b[d] += f * q * c[d];
            }
        }
        (e, b)
    }

    /// Newton-Lorentz, Maxwell-Ampere and Faraday residuals by central differences.
    pub fn motion_residuals(&self, traj: &Trajectory) -> MotionResiduals {
        let obs = &traj.observables;
        let dt = traj.dt;
        let q = self.charge.q;
        let mut nl: f64 = 0.0;
        let mut nl_scale: f64 = 0.0;
        let mut ma: f64 = 0.0;
        let mut ma_scale: f64 = 0.0;
        let mut fa: f64 = 0.0;
        let mut fa_scale: f64 = 0.0;
        for n in 2..obs.len().saturating_sub(2) {
            let d1 = |f: &dyn Fn(&Observables) -> f64| {
                (-f(&obs[n + 2]) + 8.0 * f(&obs[n + 1]) - 8.0 * f(&obs[n - 1]) + f(&obs[n - 2])) / (12.0 * dt)
            };
            let o = &obs[n];
            let v = o.kinetic.map(|x| x / self.charge.m);
            let (e_t, b) = self.particle_fields(o);
            let (_, grad_v) = self.coulomb_potential(o.r);
            for d in 0..3 {
                let accel = d1(&|s: &Observables| s.kinetic[d]);
                let cross = match d {
                    0 => v[1] * b[2] - v[2] * b[1],
                    1 => v[2] * b[0] - v[0] * b[2],
                    _ => v[0] * b[1] - v[1] * b[0],
                };
                let force = q * (e_t[d] + cross) - grad_v[d];
                nl = nl.max((accel - force).abs());
                nl_scale = nl_scale.max(force.abs());
            }
            for (i, (mode, f)) in self.modes.modes().iter().zip(&self.form).enumerate() {
                let w2 = mode.omega().powi(2);
                let u = mode.eval(o.r);
                let current = q * f * (0..3).map(|d| v[d] * u[d]).sum::<f64>();
                let de = d1(&|s: &Observables| s.e_t[i]);
                let curl_b = w2 * o.a_t[i];
                ma = ma.max((de - curl_b + current).abs());
                ma_scale = ma_scale.max(curl_b.abs()).max(current.abs());
                let dq = d1(&|s: &Observables| s.a_t[i]);
                fa = fa.max((dq + o.e_t[i]).abs());
                fa_scale = fa_scale.max(o.e_t[i].abs());
            }
        }
        MotionResiduals {
            newton_lorentz: nl / nl_scale.max(f64::MIN_POSITIVE),
            maxwell_ampere: ma / ma_scale.max(f64::MIN_POSITIVE),
            faraday: fa / fa_scale.max(f64::MIN_POSITIVE),
        }
    }

    /// Checks `L_g - L_c + d/dt integral P_T . A_T = 0` along a trajectory of
    /// this gauge at `samples` interior times.
    ///
    /// `L_g = m v^2/2 + (1/2) sum (E_T^2 - w^2 Q^2) - V + q v . A_g(r) + integral rho chi'`
    /// uses the scalar potential `A_0 = phi - chi'`; `L_c` is the same
    /// expression with `A_T` and `phi`. Velocities come from central
    /// differences of the trajectory. The gauge terms are evaluated with
    /// lambda quadrature rather than the closed form used by the equations of
    /// motion, and `integral P_T . A_T` by lattice quadrature of the sampled
    /// polarization.
    pub fn lagrangian_identity(&self, traj: &Trajectory, samples: usize) -> Result<LagrangianReport> {
        let lat = &self.lattice;
        let n_total = traj.states.len();
        if n_total < 5 || samples == 0 {
            return Err(Error::InvalidParameter("trajectory too short for the Lagrangian check".into()));
        }
        let reference = match &self.spec {
            GaugeSpec::Poincare(_) => GaugeSpec::Poincare(Poincare::new(48, LambdaMethod::Quadrature)?),
            other => other.clone(),
        };
        let u_fields: Vec<VectorField> = self
            .modes
            .modes()
            .iter()
            .map(|mode| VectorField::from_fn(lat, |x| mode.eval(x)))
            .collect();
        let dt = traj.dt;
        let pt_dot_at = |n: usize| -> Result<f64> {
            let s = &traj.states[n];
            let p_t = self.spec.transverse_polarization(&self.charge.with_position(s.r), lat)?;
            Ok(u_fields.iter().zip(&s.q).map(|(u, q)| q * p_t.dot(u)).sum())
        };
        let stride = ((n_total - 3) / samples).max(1);
        let mut times = Vec::new();
        let mut residuals = Vec::new();
        let mut scale: f64 = 0.0;
        let mut n = 1;
        while n + 1 < n_total && times.len() < samples {
            let s = &traj.states[n];
            let (prev, next) = (&traj.states[n - 1], &traj.states[n + 1]);
            let v: [f64; 3] = [0, 1, 2].map(|d| (next.r[d] - prev.r[d]) / (2.0 * dt));
            let q_dot: Vec<f64> = (0..s.q.len()).map(|i| (next.q[i] - prev.q[i]) / (2.0 * dt)).collect();
            let mut a_g = [0.0; 3];
            let mut a_t = [0.0; 3];
            let mut rho_chi_dot = 0.0;
            for (i, (mode, f)) in self.modes.modes().iter().zip(&self.form).enumerate() {
                let wave = mode.wave().scaled(*f);
                let jet = reference.wave_jet(&wave, s.r);
                let origin = reference.wave_jet(&wave, [0.0; 3]).value;
                let u = mode.eval(s.r);
                for d in 0..3 {
                    a_t[d] += f * s.q[i] * u[d];
                    a_g[d] += s.q[i] * (f * u[d] + jet.grad[d]);
                }
                rho_chi_dot += self.charge.q * q_dot[i] * (jet.value - origin);
            }
            let common = {
                let kinetic = 0.5 * self.charge.m * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
                let field: f64 = self
                    .modes
                    .modes()
                    .iter()
                    .zip(q_dot.iter().zip(&s.q))
                    .map(|(m, (qd, q))| 0.5 * (qd * qd - m.omega().powi(2) * q * q))
                    .sum();
                kinetic + field - self.coulomb_potential(s.r).0
            };
            let q = self.charge.q;
            let l_g = common + q * (v[0] * a_g[0] + v[1] * a_g[1] + v[2] * a_g[2]) + rho_chi_dot;
            let l_c = common + q * (v[0] * a_t[0] + v[1] * a_t[1] + v[2] * a_t[2]);
            let w_dot = (pt_dot_at(n + 1)? - pt_dot_at(n - 1)?) / (2.0 * dt);
            times.push(traj.times[n]);
            residuals.push(l_g - l_c + w_dot);
            scale = scale.max(w_dot.abs());
            n += stride;
        }
        let worst = residuals.iter().fold(0.0_f64, |m, r| m.max(r.abs()));
        Ok(LagrangianReport {
            times,
            residuals,
            scale,
            relative: worst / scale.max(f64::MIN_POSITIVE),
        })
    }
}

/// Step-by-step maximum deviations of the gauge-invariant observables.
pub fn compare_trajectories(a: &Trajectory, b: &Trajectory, tolerance: f64) -> ComparisonReport {
    let mut rep = ComparisonReport {
        r: 0.0,
        kinetic: 0.0,
        e_t: 0.0,
        b: 0.0,
        canonical_p: 0.0,
        tolerance,
        pass: false,
    };
    let max_diff = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    for (x, y) in a.observables.iter().zip(&b.observables) {
        rep.r = rep.r.max(max_diff(&x.r, &y.r));
        rep.kinetic = rep.kinetic.max(max_diff(&x.kinetic, &y.kinetic));
        rep.e_t = rep.e_t.max(max_diff(&x.e_t, &y.e_t));
        rep.b = rep.b.max(max_diff(&x.a_t, &y.a_t));
        rep.canonical_p = rep.canonical_p.max(max_diff(&x.p, &y.p));
    }
    rep.pass = a.observables.len() == b.observables.len()
        && [rep.r, rep.kinetic, rep.e_t, rep.b].iter().all(|d| *d < tolerance);
    rep
}

/// Poincare-gauge potential from the magnetic field,
/// `A(x) = -integral_0^1 lambda x cross B(lambda x) dlambda`, at every site.
///
/// `B` must be band-limited (no Nyquist content); it is evaluated off-grid
/// from its plane-wave expansion with `n_lambda` Gauss-Legendre nodes.
pub fn poincare_potential_from_b(b: &VectorField, n_lambda: usize) -> Result<VectorField> {
    let modal = ModalVector::from_field(b)?;
    let (nodes, weights) = gauss_legendre_unit(n_lambda);
    Ok(VectorField::from_fn(b.lattice(), |x| {
        let mut out = [0.0; 3];
        for (l, w) in nodes.iter().zip(&weights) {
            let bx = modal.eval(x.map(|v| l * v));
            let c = [
                x[1] * bx[2] - x[2] * bx[1],
                x[2] * bx[0] - x[0] * bx[2],
                x[0] * bx[1] - x[1] * bx[0],
            ];
            for d in 0..3 {
                out[d] -= w * l * c[d];
            }
        }
        out
    }))
}

#[cfg(test)]
mod tests;
