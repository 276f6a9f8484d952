//! Experiment configuration: `[section]` headers with flat `key = value`
//! entries. Every key has a default; unknown sections or keys are errors.
//!
//! ```text
//! [lattice]
//! n = 16
//! L = 1.0
//!
//! [charge]
//! q = 0.5
//! r = 0.04, -0.03, 0.02
//! ```

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use gaugeforge::gauge::LambdaMethod;
use gaugeforge::quantum::MatterGrid;
use gaugeforge::{ChargeConfig, Lattice};
use ini::Ini;
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("config syntax error at line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Invalid(Vec<String>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GaugeName {
    Coulomb,
    Poincare,
    Custom,
}

impl GaugeName {
    pub fn as_str(&self) -> &'static str {
        match self {
            GaugeName::Coulomb => "coulomb",
            GaugeName::Poincare => "poincare",
            GaugeName::Custom => "custom",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LatticeSection {
    pub n: usize,
    pub length: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChargeSection {
    pub q: f64,
    pub r: [f64; 3],
    pub m: f64,
    /// Defaults to three lattice spacings.
    pub sigma: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GaugeSection {
    pub specs: Vec<GaugeName>,
    pub lambda: LambdaMethod,
    pub n_lambda: usize,
    pub custom_rank: usize,
    pub custom_band: usize,
    /// Amplitude multiplier of the seeded random custom kernel.
    pub custom_scale: f64,
    /// Kernel table read instead of the random kernel (`custom:<path>`).
    pub custom_path: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DynamicsSection {
    pub dt: f64,
    pub steps: usize,
    pub modes: usize,
    pub p: [f64; 3],
    /// Scale of the initial mode amplitudes `Q_m`, `P_m`.
    pub field_amplitude: f64,
    pub lagrangian_samples: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BracketSection {
    pub modes: usize,
    pub states: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuantumSection {
    pub grid: [usize; 3],
    pub spacing: f64,
    pub modes: usize,
    pub n_max: Vec<usize>,
    pub n_eigs: usize,
    /// Dimensionless coupling; the quantum runs set `q` from it.
    pub coupling: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutputSection {
    pub directory: PathBuf,
    pub formats: Vec<Format>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub lattice: LatticeSection,
    pub charge: ChargeSection,
    pub gauges: GaugeSection,
    pub dynamics: DynamicsSection,
    pub brackets: BracketSection,
    pub quantum: QuantumSection,
    pub output: OutputSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            lattice: LatticeSection { n: 16, length: 1.0 },
            charge: ChargeSection {
                q: 0.5,
                r: [0.04, -0.03, 0.02],
                m: 1.0,
                sigma: None,
            },
            gauges: GaugeSection {
                specs: vec![GaugeName::Coulomb, GaugeName::Poincare, GaugeName::Custom],
                lambda: LambdaMethod::Analytic,
                n_lambda: 32,
                custom_rank: 2,
                custom_band: 2,
                custom_scale: 0.005,
                custom_path: None,
            },
            dynamics: DynamicsSection {
                dt: 1e-3,
                steps: 200,
                modes: 8,
                p: [0.05, 0.02, -0.03],
                field_amplitude: 0.01,
                lagrangian_samples: 10,
            },
            brackets: BracketSection { modes: 8, states: 5 },
            quantum: QuantumSection {
                grid: [6, 5, 4],
                spacing: 0.04,
                modes: 1,
                n_max: vec![4, 8, 16, 32],
                n_eigs: 5,
                coupling: 0.05,
            },
            output: OutputSection {
                directory: PathBuf::from("gaugeforge-out"),
                formats: vec![Format::Json, Format::Csv],
            },
        }
    }
}

fn parse_list<T: FromStr>(s: &str) -> Option<Vec<T>> {
    s.split(',').map(|p| p.trim().parse().ok()).collect()
}

fn parse_vec3<T: FromStr + Copy>(s: &str) -> Option<[T; 3]> {
    let v: Vec<T> = parse_list(s)?;
    v.try_into().ok()
}

struct Reader<'a> {
    diagnostics: &'a mut Vec<String>,
}

impl Reader<'_> {
    fn set<T>(&mut self, field: &str, raw: &str, expect: &str, parsed: Option<T>, slot: &mut T) {
        match parsed {
            Some(v) => *slot = v,
            None => self.diagnostics.push(format!("{field}: expected {expect}, got {raw:?}")),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let ini = Ini::load_from_str(text).map_err(|e| ConfigError::Syntax {
            line: e.line,
            message: e.msg.to_string(),
        })?;
        let mut cfg = Self::default();
        let mut diagnostics = Vec::new();
        for (section, props) in ini.iter() {
            let Some(section) = section else {
                for (key, _) in props.iter() {
                    diagnostics.push(format!("{key}: entry outside any [section]"));
                }
                continue;
            };
            for (key, raw) in props.iter() {
                let field = format!("{section}.{key}");
                let raw = raw.trim();
                let mut r = Reader {
                    diagnostics: &mut diagnostics,
                };
                match (section, key) {
                    ("lattice", "n") => r.set(&field, raw, "an integer", raw.parse().ok(), &mut cfg.lattice.n),
                    ("lattice", "L") => r.set(&field, raw, "a number", raw.parse().ok(), &mut cfg.lattice.length),
                    ("charge", "q") => r.set(&field, raw, "a number", raw.parse().ok(), &mut cfg.charge.q),
                    ("charge", "r") => r.set(&field, raw, "three numbers", parse_vec3(raw), &mut cfg.charge.r),
                    ("charge", "m") => r.set(&field, raw, "a number", raw.parse().ok(), &mut cfg.charge.m),
                    ("charge", "sigma") => {
                        r.set(&field, raw, "a number", raw.parse().ok().map(Some), &mut cfg.charge.sigma)
                    }
                    ("gauges", "specs") => {
                        let mut path = None;
                        let parsed = raw
                            .split(',')
                            .map(|s| match s.trim() {
                                "coulomb" => Some(GaugeName::Coulomb),
                                "poincare" => Some(GaugeName::Poincare),
                                "custom" => Some(GaugeName::Custom),
                                other => {
                                    let p = other.strip_prefix("custom:")?.trim();
                                    (!p.is_empty()).then(|| path = Some(PathBuf::from(p)))?;
                                    Some(GaugeName::Custom)
                                }
                            })
                            .collect();
                        r.set(
                            &field,
                            raw,
                            "a list of coulomb, poincare, custom, custom:<path>",
                            parsed,
                            &mut cfg.gauges.specs,
                        );
                        cfg.gauges.custom_path = path;
                    }
                    ("gauges", "lambda") => {
                        let parsed = match raw {
                            "analytic" => Some(LambdaMethod::Analytic),
                            "quadrature" => Some(LambdaMethod::Quadrature),
                            _ => None,
                        };
                        r.set(&field, raw, "analytic or quadrature", parsed, &mut cfg.gauges.lambda)
                    }
                    ("gauges", "n_lambda") => {
                        r.set(&field, raw, "an integer", raw.parse().ok(), &mut cfg.gauges.n_lambda)
                    }
                    ("gauges", "custom_rank") => {
                        r.set(&field, raw, "an integer", raw.parse().ok(), &mut cfg.gauges.custom_rank)
                    }
                    ("gauges", "custom_band") => {
                        r.set(&field, raw, "an integer", raw.parse().ok(), &mut cfg.gauges.custom_band)
                    }
                    ("gauges", "custom_scale") => {
                        r.set(&field, raw, "a number", raw.parse().ok(), &mut cfg.gauges.custom_scale)
                    }
                    ("dynamics", "dt") => r.set(&field, raw, "a number", raw.parse().ok(), &mut cfg.dynamics.dt),
                    ("dynamics", "steps") => {
                        r.set(&field, raw, "an integer", raw.parse().ok(), &mut cfg.dynamics.steps)
                    }
                    ("dynamics", "modes") => {
                        r.set(&field, raw, "an integer", raw.parse().ok(), &mut cfg.dynamics.modes)
                    }
                    ("dynamics", "p") => r.set(&field, raw, "three numbers", parse_vec3(raw), &mut cfg.dynamics.p),
                    ("dynamics", "field_amplitude") => {
                        r.set(&field, raw, "a number", raw.parse().ok(), &mut cfg.dynamics.field_amplitude)
                    }
                    ("dynamics", "lagrangian_samples") => {
                        r.set(&field, raw, "an integer", raw.parse().ok(), &mut cfg.dynamics.lagrangian_samples)
                    }
                    ("brackets", "modes") => {
                        r.set(&field, raw, "an integer", raw.parse().ok(), &mut cfg.brackets.modes)
                    }
                    ("brackets", "states") => {
                        r.set(&field, raw, "an integer", raw.parse().ok(), &mut cfg.brackets.states)
                    }
                    ("quantum", "grid") => {
                        r.set(&field, raw, "three integers", parse_vec3(raw), &mut cfg.quantum.grid)
                    }
                    ("quantum", "spacing") => {
                        r.set(&field, raw, "a number", raw.parse().ok(), &mut cfg.quantum.spacing)
                    }
                    ("quantum", "modes") => {
                        r.set(&field, raw, "an integer", raw.parse().ok(), &mut cfg.quantum.modes)
                    }
                    ("quantum", "n_max") => {
                        r.set(&field, raw, "a list of integers", parse_list(raw), &mut cfg.quantum.n_max)
                    }
                    ("quantum", "n_eigs") => {
                        r.set(&field, raw, "an integer", raw.parse().ok(), &mut cfg.quantum.n_eigs)
                    }
                    ("quantum", "coupling") => {
                        r.set(&field, raw, "a number", raw.parse().ok(), &mut cfg.quantum.coupling)
                    }
                    ("output", "directory") => cfg.output.directory = PathBuf::from(raw),
                    ("output", "formats") => {
                        let parsed = raw
                            .split(',')
                            .map(|s| match s.trim() {
                                "json" => Some(Format::Json),
                                "csv" => Some(Format::Csv),
                                _ => None,
                            })
                            .collect();
                        r.set(&field, raw, "a list of json, csv", parsed, &mut cfg.output.formats)
                    }
                    _ => diagnostics.push(format!("{field}: unknown key")),
                }
            }
        }
        if diagnostics.is_empty() {
            diagnostics = cfg.validate();
        }
        if diagnostics.is_empty() {
            Ok(cfg)
        } else {
            Err(ConfigError::Invalid(diagnostics))
        }
    }

    pub fn lattice(&self) -> Lattice {
        Lattice::new(self.lattice.n, self.lattice.length).expect("validated lattice")
    }

    pub fn charge(&self) -> ChargeConfig {
        let lattice = self.lattice();
        let mut c = ChargeConfig::new(&lattice, self.charge.q, self.charge.r, self.charge.m);
        if let Some(sigma) = self.charge.sigma {
            c.sigma = sigma;
        }
        c
    }

    pub fn matter_grid(&self) -> MatterGrid {
        MatterGrid::new(self.quantum.grid, self.quantum.spacing).expect("validated grid")
    }

    /// Checks every field against the preconditions of the routines it feeds.
    pub fn validate(&self) -> Vec<String> {
        let mut d = Vec::new();
        let lattice = match Lattice::new(self.lattice.n, self.lattice.length) {
            Ok(l) => Some(l),
            Err(e) => {
                d.push(format!("lattice: {e}"));
                None
            }
        };
        if let Some(lat) = &lattice {
            if let Err(e) = self.charge().validate(lat) {
                d.push(format!("charge: {e}"));
            }
            let half = 0.5 * lat.length();
            if self.charge.r.iter().any(|x| x.abs() >= half) {
                d.push(format!("charge.r: position {:?} outside the box", self.charge.r));
            }
            let capacity = lat.n() / 2 - 1;
            if self.gauges.custom_band == 0 || self.gauges.custom_band > capacity {
                d.push(format!("gauges.custom_band: must be in 1..={capacity}, got {}", self.gauges.custom_band));
            }
            if let Ok(grid) = MatterGrid::new(self.quantum.grid, self.quantum.spacing) {
                if let Err(e) = grid.check_inside(lat) {
                    d.push(format!("quantum.grid: {e}"));
                }
            }
        }
        if self.gauges.specs.is_empty() {
            d.push("gauges.specs: at least one gauge is required".into());
        }
        if self.gauges.n_lambda < 8 {
            d.push(format!("gauges.n_lambda: must be >= 8, got {}", self.gauges.n_lambda));
        }
        if self.gauges.custom_rank == 0 {
            d.push("gauges.custom_rank: must be positive".into());
        }
        if !self.gauges.custom_scale.is_finite() || self.gauges.custom_scale <= 0.0 {
            d.push(format!("gauges.custom_scale: must be positive, got {}", self.gauges.custom_scale));
        }
        if self.gauges.specs.iter().filter(|g| **g == GaugeName::Custom).count() > 1 {
            d.push("gauges.specs: at most one custom gauge".into());
        }
        if let Some(p) = &self.gauges.custom_path {
            if !p.is_file() {
                d.push(format!("gauges.specs: custom kernel table {} not found", p.display()));
            }
        }
        if !(self.dynamics.dt > 0.0) || !self.dynamics.dt.is_finite() {
            d.push(format!("dynamics.dt: must be positive, got {}", self.dynamics.dt));
        }
        if self.dynamics.steps < 5 {
            d.push(format!("dynamics.steps: must be >= 5, got {}", self.dynamics.steps));
        }
        if self.dynamics.modes == 0 {
            d.push("dynamics.modes: must be positive".into());
        }
        if self.dynamics.lagrangian_samples == 0 {
            d.push("dynamics.lagrangian_samples: must be positive".into());
        }
        if !self.dynamics.field_amplitude.is_finite() || self.dynamics.p.iter().any(|v| !v.is_finite()) {
            d.push("dynamics: initial momenta and amplitudes must be finite".into());
        }
        if self.brackets.modes == 0 || self.brackets.modes % 2 != 0 {
            d.push(format!("brackets.modes: must be a positive even number, got {}", self.brackets.modes));
        }
        if self.brackets.states == 0 {
            d.push("brackets.states: must be positive".into());
        }
        if let Err(e) = MatterGrid::new(self.quantum.grid, self.quantum.spacing) {
            d.push(format!("quantum.grid: {e}"));
        }
        if self.quantum.modes == 0 {
            d.push("quantum.modes: must be positive".into());
        }
        if self.quantum.n_max.is_empty() || self.quantum.n_max.contains(&0) {
            d.push(format!("quantum.n_max: must be a non-empty list of positive cutoffs, got {:?}", self.quantum.n_max));
        } else if self.quantum.n_max.windows(2).any(|w| w[1] <= w[0]) {
            d.push(format!("quantum.n_max: cutoffs must increase, got {:?}", self.quantum.n_max));
        }
        if self.quantum.n_eigs == 0 {
            d.push("quantum.n_eigs: must be positive".into());
        }
        if !self.quantum.coupling.is_finite() || self.quantum.coupling < 0.0 {
            d.push(format!("quantum.coupling: must be a finite non-negative number, got {}", self.quantum.coupling));
        }
        if self.output.formats.is_empty() {
            d.push("output.formats: at least one format is required".into());
        }
        d
    }

    /// Canonical `section.key = value` listing of the effective configuration.
    pub fn canonical(&self) -> String {
        let mut s = String::new();
        let list = |v: &[String]| v.join(",");
        let f = |x: f64| format!("{x:.16e}");
        let _ = writeln!(s, "lattice.n = {}", self.lattice.n);
        let _ = writeln!(s, "lattice.L = {}", f(self.lattice.length));
        let c = self.charge();
        let _ = writeln!(s, "charge.q = {}", f(c.q));
        let _ = writeln!(s, "charge.r = {}", list(&c.r.map(f)));
        let _ = writeln!(s, "charge.m = {}", f(c.m));
        let _ = writeln!(s, "charge.sigma = {}", f(c.sigma));
        let specs: Vec<String> = self.gauges.specs.iter().map(|g| g.as_str().to_string()).collect();
        let _ = writeln!(s, "gauges.specs = {}", list(&specs));
        let _ = writeln!(s, "gauges.lambda = {:?}", self.gauges.lambda);
        let _ = writeln!(s, "gauges.n_lambda = {}", self.gauges.n_lambda);
        let _ = writeln!(s, "gauges.custom_rank = {}", self.gauges.custom_rank);
        let _ = writeln!(s, "gauges.custom_band = {}", self.gauges.custom_band);
        let _ = writeln!(s, "gauges.custom_scale = {}", f(self.gauges.custom_scale));
        if let Some(p) = &self.gauges.custom_path {
            let table = std::fs::read(p).map(|b| hex(&Sha256::digest(&b))).unwrap_or_default();
            let _ = writeln!(s, "gauges.custom_table = {table}");
        }
        let dy = &self.dynamics;
        let _ = writeln!(s, "dynamics.dt = {}", f(dy.dt));
        let _ = writeln!(s, "dynamics.steps = {}", dy.steps);
        let _ = writeln!(s, "dynamics.modes = {}", dy.modes);
        let _ = writeln!(s, "dynamics.p = {}", list(&dy.p.map(f)));
        let _ = writeln!(s, "dynamics.field_amplitude = {}", f(dy.field_amplitude));
        let _ = writeln!(s, "dynamics.lagrangian_samples = {}", dy.lagrangian_samples);
        let _ = writeln!(s, "brackets.modes = {}", self.brackets.modes);
        let _ = writeln!(s, "brackets.states = {}", self.brackets.states);
        let qu = &self.quantum;
        let _ = writeln!(s, "quantum.grid = {}", list(&qu.grid.map(|v| v.to_string())));
        let _ = writeln!(s, "quantum.spacing = {}", f(qu.spacing));
        let _ = writeln!(s, "quantum.modes = {}", qu.modes);
        let n_max: Vec<String> = qu.n_max.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(s, "quantum.n_max = {}", list(&n_max));
        let _ = writeln!(s, "quantum.n_eigs = {}", qu.n_eigs);
        let _ = writeln!(s, "quantum.coupling = {}", f(qu.coupling));
        s
    }

    /// SHA-256 of [`canonical`](Self::canonical), hex encoded.
    pub fn hash(&self) -> String {
        hex(&Sha256::digest(self.canonical().as_bytes()))
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_defaults() {
        assert_eq!(ExperimentConfig::parse("").unwrap(), ExperimentConfig::default());
    }

    #[test]
    fn values_override_defaults() {
        let cfg = ExperimentConfig::parse(
            "[lattice]\nn = 8\nL = 2.0\n[charge]\nr = 0.1, 0.2, -0.3\n[gauges]\nspecs = poincare\n[quantum]\nn_max = 2, 4\n",
        )
        .unwrap();
        assert_eq!(cfg.lattice, LatticeSection { n: 8, length: 2.0 });
        assert_eq!(cfg.charge.r, [0.1, 0.2, -0.3]);
        assert_eq!(cfg.gauges.specs, vec![GaugeName::Poincare]);
        assert_eq!(cfg.quantum.n_max, vec![2, 4]);
    }

    #[test]
    fn diagnostics_name_the_offending_fields() {
        let err = ExperimentConfig::parse("[lattice]\nn = eight\n[charge]\nbogus = 1\n").unwrap_err();
        let ConfigError::Invalid(d) = err else { panic!("expected field diagnostics") };
        assert!(d.iter().any(|m| m.starts_with("lattice.n:")));
        assert!(d.iter().any(|m| m.starts_with("charge.bogus:")));
    }

    #[test]
    fn physical_preconditions_are_checked() {
        let err = ExperimentConfig::parse("[charge]\nsigma = 0.01\n[quantum]\nn_max = 8, 4\n").unwrap_err();
        let ConfigError::Invalid(d) = err else { panic!("expected field diagnostics") };
        assert!(d.iter().any(|m| m.starts_with("charge:")), "{d:?}");
        assert!(d.iter().any(|m| m.starts_with("quantum.n_max:")), "{d:?}");
    }

    #[test]
    fn hash_tracks_effective_values() {
        let a = ExperimentConfig::default();
        let b = ExperimentConfig::parse("[lattice]\nn = 16\n").unwrap();
        let c = ExperimentConfig::parse("[lattice]\nn = 8\n").unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
