//! Plain-text field dumps.
//!
//! A dump starts with the header line `lattice n=<N> L=<float>` and is
//! followed by one row per site: `ix,iy,iz,v` for scalars and
//! `ix,iy,iz,vx,vy,vz` for vectors. Floats are written with 17 significant
//! digits so that a dump reads back bit for bit.

use std::io::{BufRead, Write};

use ndarray::Array3;

use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::lattice::Lattice;

pub fn header(lattice: &Lattice) -> String {
    format!("lattice n={} L={:.16e}", lattice.n(), lattice.length())
}

/// Parses a `lattice n=<N> L=<float>` header line.
pub fn parse_header(line: &str, line_no: usize) -> Result<Lattice> {
    let err = |message: &str| Error::Parse {
        line: line_no,
        message: message.to_string(),
    };
    let mut parts = line.split_whitespace();
    if parts.next() != Some("lattice") {
        return Err(err("expected header `lattice n=<N> L=<float>`"));
    }
    let mut n = None;
    let mut l = None;
    for p in parts {
        if let Some(v) = p.strip_prefix("n=") {
            n = Some(v.parse::<usize>().map_err(|_| err("bad n"))?);
        } else if let Some(v) = p.strip_prefix("L=") {
            l = Some(v.parse::<f64>().map_err(|_| err("bad L"))?);
        } else {
            return Err(err(&format!("unexpected header token `{p}`")));
        }
    }
    let (n, l) = n.zip(l).ok_or_else(|| err("header needs both n and L"))?;
    Lattice::new(n, l).map_err(|e| err(&e.to_string()))
}

pub fn write_scalar<W: Write>(out: &mut W, field: &ScalarField) -> Result<()> {
    let lat = field.lattice();
    writeln!(out, "{}", header(lat))?;
    for ((i, j, k), v) in field.samples().indexed_iter() {
        writeln!(out, "{i},{j},{k},{v:.16e}")?;
    }
    Ok(())
}

pub fn write_vector<W: Write>(out: &mut W, field: &VectorField) -> Result<()> {
    let lat = field.lattice();
    writeln!(out, "{}", header(lat))?;
    let n = lat.n();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let v = field.get([i, j, k]);
                writeln!(out, "{i},{j},{k},{:.16e},{:.16e},{:.16e}", v[0], v[1], v[2])?;
            }
        }
    }
    Ok(())
}

/// Reads rows of `3 + width` comma-separated values following a header.
/// Returns the lattice and one array per value column.
pub fn read_columns<R: BufRead>(input: R, width: usize) -> Result<(Lattice, Vec<Array3<f64>>)> {
    let mut lines = input.lines().enumerate();
    let (lattice, _) = loop {
        match lines.next() {
            Some((no, line)) => {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                break (parse_header(line.trim(), no + 1)?, no);
            }
            None => {
                return Err(Error::Parse {
                    line: 0,
                    message: "empty input".into(),
                })
            }
        }
    };
    let n = lattice.n();
    let mut cols: Vec<Array3<f64>> = (0..width).map(|_| Array3::zeros(lattice.shape())).collect();
    let mut seen = Array3::from_elem(lattice.shape(), false);
    let mut count = 0usize;
    for (no, line) in lines {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let err = |message: String| Error::Parse { line: no + 1, message };
        let fields: Vec<&str> = t.split(',').map(str::trim).collect();
        if fields.len() != 3 + width {
            return Err(err(format!("expected {} columns, found {}", 3 + width, fields.len())));
        }
        let mut idx = [0usize; 3];
        for d in 0..3 {
            idx[d] = fields[d]
                .parse()
                .map_err(|_| err(format!("bad index `{}`", fields[d])))?;
            if idx[d] >= n {
                return Err(err(format!("index {} out of range for n={n}", idx[d])));
            }
        }
        if seen[idx] {
            return Err(err(format!("duplicate site {idx:?}")));
        }
        seen[idx] = true;
        for (c, col) in cols.iter_mut().enumerate() {
            col[idx] = fields[3 + c]
                .parse()
                .map_err(|_| err(format!("bad value `{}`", fields[3 + c])))?;
        }
        count += 1;
    }
    if count != lattice.num_sites() {
        return Err(Error::Parse {
            line: 0,
            message: format!("expected {} rows, found {count}", lattice.num_sites()),
        });
    }
    Ok((lattice, cols))
}

pub fn read_scalar<R: BufRead>(input: R) -> Result<ScalarField> {
    let (lat, mut cols) = read_columns(input, 1)?;
    Ok(ScalarField::from_samples(&lat, cols.remove(0)))
}

pub fn read_vector<R: BufRead>(input: R) -> Result<VectorField> {
    let (lat, cols) = read_columns(input, 3)?;
    Ok(VectorField::from_components(
        cols.into_iter().map(|c| ScalarField::from_samples(&lat, c)).collect(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vector_round_trip_is_exact() {
        let lat = Lattice::new(4, 1.7).unwrap();
        let v = VectorField::from_fn(&lat, |x| [x[0].sin() / 3.0, x[1] * 1e-300, x[2].exp()]);
        let mut buf = Vec::new();
        write_vector(&mut buf, &v).unwrap();
        let back = read_vector(buf.as_slice()).unwrap();
        assert_eq!(back.lattice(), &lat);
        for d in 0..3 {
            assert_eq!(back.component(d).samples(), v.component(d).samples());
        }
    }

    #[test]
    fn malformed_rows_are_rejected() {
        let bad = "lattice n=4 L=1.0\n0,0,0,1.0,2.0\n";
        assert!(read_vector(bad.as_bytes()).is_err());
        assert!(read_scalar("lattice n=5 L=1.0\n".as_bytes()).is_err());
        assert!(read_scalar("grid n=4 L=1.0\n".as_bytes()).is_err());
    }
}
