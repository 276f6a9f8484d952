//! User-supplied transverse Green's functions of separable low-rank form
//! `g_T,i(x, x') = sum_a U_a,i(x) w_a(x')`.
//!
//! Each `U_a` must be transverse in `x`, which guarantees `div g_T = 0`.
//! The scalar profiles `w_a` are evaluated off-grid by spectral
//! interpolation, so both factors must be free of Nyquist content.
//!
//! File format: one or more blocks, each starting with the header
//! `lattice n=<N> L=<float>` followed by `N^3` rows
//! `ix,iy,iz,ux,uy,uz,w`.

use std::io::{BufRead, Write};
use std::path::Path;

use num_complex::Complex64;
use rand::Rng;

use crate::dump::{header, parse_header};
use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::lattice::Lattice;
use crate::modal::{ModalScalar, VectorWave, NYQUIST_TOLERANCE};
use crate::synth;

/// Tolerance on the relative divergence of each `U_a`.
pub const TRANSVERSALITY_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct KernelTerm {
    pub u: VectorField,
    pub w: ScalarField,
    w_modal: ModalScalar,
}

impl KernelTerm {
    pub fn w_modal(&self) -> &ModalScalar {
        &self.w_modal
    }
}

/// Validated separable kernel.
#[derive(Clone, Debug)]
pub struct CustomKernel {
    lattice: Lattice,
    terms: Vec<KernelTerm>,
}

impl CustomKernel {
    pub fn new(terms: Vec<(VectorField, ScalarField)>) -> Result<Self> {
        let lattice = match terms.first() {
            Some((u, _)) => u.lattice().clone(),
            None => return Err(Error::InvalidKernel("kernel has no terms".into())),
        };
        let mut out = Vec::with_capacity(terms.len());
        for (a, (u, w)) in terms.into_iter().enumerate() {
            if u.lattice() != &lattice || w.lattice() != &lattice {
                return Err(Error::InvalidKernel(format!("term {a} lives on a different lattice")));
            }
            let div = u.relative_divergence();
            if div > TRANSVERSALITY_TOLERANCE {
                return Err(Error::InvalidKernel(format!(
                    "term {a}: U is not transverse (relative divergence {div:e})"
                )));
            }
            let nyq = u.nyquist_weight().max(w.nyquist_weight());
            if nyq > NYQUIST_TOLERANCE {
                return Err(Error::InvalidKernel(format!(
                    "term {a}: Nyquist-plane content {nyq:e}"
                )));
            }
            let w_modal = ModalScalar::from_field(&w)?;
            out.push(KernelTerm { u, w, w_modal });
        }
        Ok(Self { lattice, terms: out })
    }

    /// Random kernel of the given rank with band-limited factors.
    pub fn random<R: Rng>(lattice: &Lattice, rank: usize, band: usize, rng: &mut R) -> Result<Self> {
        let l = lattice.length();
        let terms = (0..rank)
            .map(|_| {
                let u = synth::random_transverse(lattice, band, rng);
                let w = synth::random_scalar(lattice, band, rng).scale(l);
                (u, w)
            })
            .collect();
        Self::new(terms)
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn terms(&self) -> &[KernelTerm] {
        &self.terms
    }

    /// Overlap `integral U_a . a` of every term with one real plane wave.
    pub fn wave_overlaps(&self, wave: &VectorWave) -> Vec<f64> {
        let lat = &self.lattice;
        let half = (lat.n() / 2) as i64;
        if wave.m.iter().any(|&m| m.abs() >= half) {
            return vec![0.0; self.terms.len()];
        }
        let idx = wave.m.map(|m| lat.array_index(m));
        let vol = lat.volume();
        self.terms
            .iter()
            .map(|t| {
                let uk: [Complex64; 3] = t.u.fourier_at(idx);
                if wave.m == [0, 0, 0] {
                    vol * (0..3).map(|i| wave.c[i] * uk[i].re).sum::<f64>()
                } else {
                    vol * (0..3).map(|i| wave.c[i] * uk[i].re - wave.d[i] * uk[i].im).sum::<f64>()
                }
            })
            .collect()
    }

    pub fn read_path(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read(std::io::BufReader::new(file))
    }

    /// Parses the block file format.
    pub fn read<R: BufRead>(input: R) -> Result<Self> {
        let mut blocks: Vec<(Lattice, Vec<(usize, String)>)> = Vec::new();
        for (no, line) in input.lines().enumerate() {
            let line = line?;
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            if t.starts_with("lattice") {
                blocks.push((parse_header(t, no + 1)?, Vec::new()));
            } else {
                match blocks.last_mut() {
                    Some((_, rows)) => rows.push((no + 1, t.to_string())),
                    None => {
                        return Err(Error::Parse {
                            line: no + 1,
                            message: "data row before the first `lattice` header".into(),
                        })
                    }
                }
            }
        }
        let mut terms = Vec::new();
        for (lat, rows) in blocks {
            let mut cols: Vec<ndarray::Array3<f64>> = (0..4).map(|_| ndarray::Array3::zeros(lat.shape())).collect();
            let mut seen = ndarray::Array3::from_elem(lat.shape(), false);
            for (no, row) in &rows {
                let err = |message: String| Error::Parse { line: *no, message };
                let f: Vec<&str> = row.split(',').map(str::trim).collect();
                if f.len() != 7 {
                    return Err(err(format!("expected 7 columns (ix,iy,iz,ux,uy,uz,w), found {}", f.len())));
                }
                let mut idx = [0usize; 3];
                for d in 0..3 {
                    idx[d] = f[d].parse().map_err(|_| err(format!("bad index `{}`", f[d])))?;
                    if idx[d] >= lat.n() {
                        return Err(err(format!("index {} out of range", idx[d])));
                    }
                }
                if seen[idx] {
                    return Err(err(format!("duplicate site {idx:?}")));
                }
                seen[idx] = true;
                for c in 0..4 {
                    cols[c][idx] = f[3 + c].parse().map_err(|_| err(format!("bad value `{}`", f[3 + c])))?;
                }
            }
            if rows.len() != lat.num_sites() {
                return Err(Error::InvalidKernel(format!(
                    "block has {} rows, expected {}",
                    rows.len(),
                    lat.num_sites()
                )));
            }
            let mut it = cols.into_iter();
            let u = VectorField::from_components(
                (0..3).map(|_| ScalarField::from_samples(&lat, it.next().unwrap())).collect(),
            );
            let w = ScalarField::from_samples(&lat, it.next().unwrap());
            terms.push((u, w));
        }
        Self::new(terms)
    }

    pub fn write<W: Write>(&self, out: &mut W) -> Result<()> {
        let n = self.lattice.n();
        for t in &self.terms {
            writeln!(out, "{}", header(&self.lattice))?;
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        let u = t.u.get([i, j, k]);
                        let w = t.w.get([i, j, k]);
                        writeln!(out, "{i},{j},{k},{:.16e},{:.16e},{:.16e},{:.16e}", u[0], u[1], u[2], w)?;
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn file_round_trip() {
        let lat = Lattice::new(4, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let k = CustomKernel::random(&lat, 2, 1, &mut rng).unwrap();
        let mut buf = Vec::new();
        k.write(&mut buf).unwrap();
        let back = CustomKernel::read(buf.as_slice()).unwrap();
        assert_eq!(back.terms().len(), 2);
        for (a, b) in back.terms().iter().zip(k.terms()) {
            assert_eq!(a.w.samples(), b.w.samples());
            assert_eq!(a.u.component(1).samples(), b.u.component(1).samples());
        }
    }

    #[test]
    fn rejects_longitudinal_u() {
        let lat = Lattice::new(8, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let w = synth::random_scalar(&lat, 2, &mut rng);
        let u = synth::random_vector(&lat, 2, &mut rng);
        assert!(matches!(CustomKernel::new(vec![(u, w)]), Err(Error::InvalidKernel(_))));
    }

    #[test]
    fn rejects_wrong_column_count() {
        let text = "lattice n=4 L=1.0\n0,0,0,1.0,0.0,0.0\n";
        assert!(CustomKernel::read(text.as_bytes()).is_err());
    }
}
