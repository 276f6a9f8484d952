//! Sparse complex operators over the matter-times-Fock product basis.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

/// Compressed-row complex matrix with a free-form description of its basis.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<Complex64>,
    pub description: String,
}

/// Accumulates entries before compression.
#[derive(Clone, Debug, Default)]
pub struct TripletBuilder {
    dim: usize,
    entries: Vec<(usize, usize, Complex64)>,
}

impl TripletBuilder {
    pub fn new(dim: usize) -> Self {
        Self { dim, entries: Vec::new() }
    }

    pub fn push(&mut self, row: usize, col: usize, v: Complex64) {
        if v != Complex64::new(0.0, 0.0) {
            self.entries.push((row, col, v));
        }
    }

    /// Adds `scale * block` at offset `(row0, col0)`.
    pub fn push_block(&mut self, row0: usize, col0: usize, block: &DMatrix<Complex64>, scale: Complex64) {
        for j in 0..block.ncols() {
            for i in 0..block.nrows() {
                self.push(row0 + i, col0 + j, scale * block[(i, j)]);
            }
        }
    }

    pub fn build(mut self, description: impl Into<String>) -> OperatorMatrix {
        self.entries.sort_by_key(|e| (e.0, e.1));
        let mut row_ptr = vec![0; self.dim + 1];
        let mut cols = Vec::with_capacity(self.entries.len());
        let mut vals: Vec<Complex64> = Vec::with_capacity(self.entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in self.entries {
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
                continue;
            }
            row_ptr[r + 1] += 1;
            cols.push(c);
            vals.push(v);
            last = Some((r, c));
        }
        for r in 0..self.dim {
            row_ptr[r + 1] += row_ptr[r];
        }
        OperatorMatrix {
            dim: self.dim,
            row_ptr,
            cols,
            vals,
            description: description.into(),
        }
    }
}

impl OperatorMatrix {
    pub fn identity(dim: usize) -> Self {
        let mut b = TripletBuilder::new(dim);
        for i in 0..dim {
            b.push(i, i, Complex64::new(1.0, 0.0));
        }
        b.build("identity")
    }

    pub fn from_dense(m: &DMatrix<Complex64>, description: impl Into<String>) -> Self {
        let mut b = TripletBuilder::new(m.nrows());
        b.push_block(0, 0, m, Complex64::new(1.0, 0.0));
        b.build(description)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        let row = &self.cols[self.row_ptr[i]..self.row_ptr[i + 1]];
        match row.binary_search(&j) {
            Ok(k) => self.vals[self.row_ptr[i] + k],
            Err(_) => Complex64::new(0.0, 0.0),
        }
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |k| (self.cols[k], self.vals[k]))
    }

    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.dim);
        (0..self.dim)
            .into_par_iter()
            .map(|i| self.row(i).map(|(j, v)| v * x[j]).sum())
            .collect()
    }

    pub fn adjoint(&self) -> Self {
        let mut b = TripletBuilder::new(self.dim);
        for i in 0..self.dim {
            for (j, v) in self.row(i) {
                b.push(j, i, v.conj());
            }
        }
        b.build(format!("adjoint of {}", self.description))
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            for (j, v) in self.row(i) {
                m[(i, j)] = v;
            }
        }
        m
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.vals.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `self * other`.
    pub fn mul(&self, other: &OperatorMatrix) -> OperatorMatrix {
        assert_eq!(self.dim, other.dim);
        let rows: Vec<Vec<(usize, Complex64)>> = (0..self.dim)
            .into_par_iter()
            .map(|i| {
                let mut acc: std::collections::BTreeMap<usize, Complex64> = Default::default();
                for (k, a) in self.row(i) {
                    for (j, b) in other.row(k) {
                        *acc.entry(j).or_default() += a * b;
                    }
                }
                acc.into_iter().collect()
            })
            .collect();
        let mut b = TripletBuilder::new(self.dim);
        for (i, row) in rows.into_iter().enumerate() {
            for (j, v) in row {
                b.push(i, j, v);
            }
        }
        b.build(format!("({}) * ({})", self.description, other.description))
    }

    /// `||O - O^dag||_F / ||O||_F`.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut d = 0.0;
        for i in 0..self.dim {
            for (j, v) in self.row(i) {
                d += (v - self.get(j, i).conj()).norm_sqr();
            }
        }
        d.sqrt() / self.frobenius_norm().max(f64::MIN_POSITIVE)
    }

    /// Largest entry of `|O^dag O - I|`.
    pub fn unitarity_defect(&self) -> f64 {
        let p = self.adjoint().mul(self);
        let mut worst: f64 = 0.0;
        for i in 0..self.dim {
            let mut diag_seen = false;
            for (j, v) in p.row(i) {
                let expect = if i == j {
                    diag_seen = true;
                    1.0
                } else {
                    0.0
                };
                worst = worst.max((v - expect).norm());
            }
            if !diag_seen {
                worst = worst.max(1.0);
            }
        }
        worst
    }

    /// `<x|O|x>` for a normalized state.
    pub fn expectation(&self, x: &[Complex64]) -> Complex64 {
        let y = self.matvec(x);
        x.iter().zip(&y).map(|(a, b)| a.conj() * b).sum()
    }
}

pub fn norm(x: &[Complex64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}
