//! Random band-limited fields for tests, demos and the custom-gauge generator.
//!
//! Fields are drawn in Fourier space with Hermitian symmetry so that the
//! samples are real. Only modes with `max |m_i| <= band` (and `m != 0`) are
//! populated, which keeps them far from the Nyquist planes.

use ndarray::Array3;
use num_complex::Complex64;
use rand::Rng;

use crate::field::{ScalarField, VectorField};
use crate::lattice::Lattice;

fn random_coefficients<R: Rng>(lattice: &Lattice, band: usize, rng: &mut R) -> Array3<Complex64> {
    let band = band.min(lattice.n() / 2 - 1) as i64;
    let mut coeffs = Array3::zeros(lattice.shape());
    for mx in -band..=band {
        for my in -band..=band {
            for mz in -band..=band {
                let positive = mx > 0 || (mx == 0 && (my > 0 || (my == 0 && mz > 0)));
                if !positive {
                    continue;
                }
                let c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                let idx = [lattice.array_index(mx), lattice.array_index(my), lattice.array_index(mz)];
                let neg = [lattice.array_index(-mx), lattice.array_index(-my), lattice.array_index(-mz)];
                coeffs[idx] = c;
                coeffs[neg] = c.conj();
            }
        }
    }
    coeffs
}

/// Random zero-mean scalar field with wave indices bounded by `band`.
pub fn random_scalar<R: Rng>(lattice: &Lattice, band: usize, rng: &mut R) -> ScalarField {
    ScalarField::from_fourier(lattice, &random_coefficients(lattice, band, rng))
}

/// Random vector field; components independent.
pub fn random_vector<R: Rng>(lattice: &Lattice, band: usize, rng: &mut R) -> VectorField {
    VectorField::from_components((0..3).map(|_| random_scalar(lattice, band, rng)).collect())
}

/// Transverse part of a random vector field.
pub fn random_transverse<R: Rng>(lattice: &Lattice, band: usize, rng: &mut R) -> VectorField {
    random_vector(lattice, band, rng).transverse_part()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_fields_are_band_limited_and_transverse() {
        let lat = Lattice::new(8, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let v = random_transverse(&lat, 2, &mut rng);
        assert!(v.nyquist_weight() < 1e-14);
        assert!(v.relative_divergence() < 1e-14);
        assert!(v.norm() > 0.1);
    }
}
