//! Open position grid for the bound electron.
//!
//! Sites sit at `x_j = (j - (n - 1)/2) a` along each axis, so the grid is
//! symmetric about the nucleus at the origin. The kinetic energy is the
//! nearest-neighbour Laplacian with Dirichlet boundaries: on-site `3/(m a^2)`
//! and hopping `-t` with `t = 1/(2 m a^2)`.

use nalgebra::DMatrix;

use crate::charge::ChargeConfig;
use crate::error::{Error, Result};
use crate::gauge::CoulombPotential;
use crate::lattice::Lattice;

#[derive(Clone, Debug, PartialEq)]
pub struct MatterGrid {
    shape: [usize; 3],
    spacing: f64,
}

impl MatterGrid {
    pub fn new(shape: [usize; 3], spacing: f64) -> Result<Self> {
        if shape.iter().any(|&n| n == 0) {
            return Err(Error::InvalidParameter(format!("matter grid shape must be positive, got {shape:?}")));
        }
        if !(spacing > 0.0) || !spacing.is_finite() {
            return Err(Error::InvalidParameter(format!("matter grid spacing must be positive, got {spacing}")));
        }
        Ok(Self { shape, spacing })
    }

    pub fn shape(&self) -> [usize; 3] {
        self.shape
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn num_sites(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn site_index(&self, idx: [usize; 3]) -> usize {
        (idx[0] * self.shape[1] + idx[1]) * self.shape[2] + idx[2]
    }

    pub fn site(&self, s: usize) -> [usize; 3] {
        let k = s % self.shape[2];
        let j = (s / self.shape[2]) % self.shape[1];
        let i = s / (self.shape[1] * self.shape[2]);
        [i, j, k]
    }

    pub fn position(&self, s: usize) -> [f64; 3] {
        let idx = self.site(s);
        [0, 1, 2].map(|d| (idx[d] as f64 - 0.5 * (self.shape[d] as f64 - 1.0)) * self.spacing)
    }

    pub fn positions(&self) -> Vec<[f64; 3]> {
        (0..self.num_sites()).map(|s| self.position(s)).collect()
    }

    /// Largest distance of a site from the origin.
    pub fn radius(&self) -> f64 {
        self.positions()
            .iter()
            .map(|x| (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt())
            .fold(0.0, f64::max)
    }

    /// Nearest-neighbour links `(from, to)` with `to` one step up an axis.
    pub fn links(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for s in 0..self.num_sites() {
            let idx = self.site(s);
            for d in 0..3 {
                if idx[d] + 1 < self.shape[d] {
                    let mut up = idx;
                    up[d] += 1;
                    out.push((s, self.site_index(up)));
                }
            }
        }
        out
    }

    pub fn hopping(&self, mass: f64) -> f64 {
        0.5 / (mass * self.spacing * self.spacing)
    }

    /// Errors unless every site lies strictly inside the periodic box.
    pub fn check_inside(&self, lattice: &Lattice) -> Result<()> {
        let half = 0.5 * lattice.length();
        let extent = [0, 1, 2].map(|d| 0.5 * (self.shape[d] as f64 - 1.0) * self.spacing);
        if extent.iter().any(|&e| e >= half) {
            return Err(Error::InvalidParameter(format!(
                "matter grid half-extent {extent:?} does not fit in the box of side {}",
                lattice.length()
            )));
        }
        Ok(())
    }

    /// On-site energies `3/(m a^2) + V(x)` with `V` the smeared Coulomb energy.
    pub fn onsite(&self, charge: &ChargeConfig, lattice: &Lattice) -> Vec<f64> {
        let v = CoulombPotential::new(charge, lattice);
        let diag = 6.0 * self.hopping(charge.m);
        self.positions().iter().map(|x| diag + v.value(*x)).collect()
    }

    /// Bare matter Hamiltonian `p^2/2m + V` as a dense real matrix.
    pub fn bare_hamiltonian(&self, charge: &ChargeConfig, lattice: &Lattice) -> DMatrix<f64> {
        let n = self.num_sites();
        let mut h = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(self.onsite(charge, lattice)));
        let t = self.hopping(charge.m);
        for (a, b) in self.links() {
            h[(a, b)] = -t;
            h[(b, a)] = -t;
        }
        debug_assert_eq!(h.nrows(), n);
        h
    }

    /// Ascending bare eigenvalues and the matching eigenvectors as columns.
    pub fn bare_spectrum(&self, charge: &ChargeConfig, lattice: &Lattice) -> (Vec<f64>, DMatrix<f64>) {
        let eig = self.bare_hamiltonian(charge, lattice).symmetric_eigen();
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vectors = DMatrix::from_fn(eig.eigenvectors.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
        (values, vectors)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn positions_are_symmetric_about_the_origin() {
        let g = MatterGrid::new([4, 3, 2], 0.1).unwrap();
        let sum = g.positions().iter().fold([0.0; 3], |acc, x| [acc[0] + x[0], acc[1] + x[1], acc[2] + x[2]]);
        assert!(sum.iter().all(|s| s.abs() < 1e-15));
        assert_eq!(g.position(0), [-0.15000000000000002, -0.1, -0.05]);
        for s in 0..g.num_sites() {
            assert_eq!(g.site_index(g.site(s)), s);
        }
    }

    #[test]
    fn link_count() {
        let g = MatterGrid::new([4, 3, 2], 0.1).unwrap();
        assert_eq!(g.links().len(), 3 * 3 * 2 + 4 * 2 * 2 + 4 * 3);
    }

    #[test]
    fn free_particle_spectrum_matches_the_dirichlet_laplacian() {
        let lat = Lattice::new(8, 1.0).unwrap();
        let g = MatterGrid::new([5, 4, 3], 0.05).unwrap();
        let charge = ChargeConfig::new(&lat, 0.0, [0.0; 3], 1.3);
        let (values, vectors) = g.bare_spectrum(&charge, &lat);
        let t = g.hopping(1.3);
        let mut exact = Vec::new();
        for a in 1..=5 {
            for b in 1..=4 {
                for c in 1..=3 {
                    let e = |k: usize, n: usize| 2.0 * t * (1.0 - (std::f64::consts::PI * k as f64 / (n as f64 + 1.0)).cos());
                    exact.push(e(a, 5) + e(b, 4) + e(c, 3));
                }
            }
        }
        exact.sort_by(f64::total_cmp);
        for (a, b) in values.iter().zip(&exact) {
            assert!((a - b).abs() < 1e-10 * b.abs().max(1.0));
        }
        let gram = vectors.transpose() * &vectors;
        assert!((gram - DMatrix::identity(60, 60)).amax() < 1e-12);
    }

    #[test]
    fn grid_must_fit_in_the_box() {
        let lat = Lattice::new(8, 1.0).unwrap();
        assert!(MatterGrid::new([11, 2, 2], 0.1).unwrap().check_inside(&lat).is_err());
        assert!(MatterGrid::new([6, 5, 4], 0.04).unwrap().check_inside(&lat).is_ok());
    }
}
