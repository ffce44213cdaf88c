//! CSV files of reconstructed immersions.

use num_complex::Complex64;
use std::io::{Read, Write};

use super::certify::SampledImmersion;
use super::integrate::ReconstructionGrid;
use crate::error::{Error, Result};
use crate::geometry::{AmbientSpace, CVector};

const GRID_TOL: f64 = 1e-9;
pub const MAX_ROWS: usize = 1 << 22;

pub fn csv_header(dim: usize) -> Vec<String> {
    let mut h: Vec<String> = ["t", "s", "u", "v"].iter().map(|s| s.to_string()).collect();
    for k in 1..=dim {
        h.push(format!("z{k}_re"));
        h.push(format!("z{k}_im"));
    }
    h
}

pub fn write_immersion_csv<W: Write>(imm: &SampledImmersion, w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(csv_header(imm.ambient.complex_dim))?;
    for (i, f) in imm.f.iter().enumerate() {
        let p = imm.grid.point(imm.grid.multi(i));
        let mut rec: Vec<String> = p.iter().map(|x| format!("{x:e}")).collect();
        for z in &f.z {
            rec.push(format!("{:e}", z.re));
            rec.push(format!("{:e}", z.im));
        }
        wr.write_record(rec)?;
    }
    wr.flush()?;
    Ok(())
}

fn parse_err(row: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        pos: row,
        msg: msg.into(),
    }
}

/// Reads an immersion file written by [`write_immersion_csv`]: nodes of a
/// uniform (t, s, u, v) grid with v varying fastest.
pub fn read_immersion_csv<R: Read>(r: R, ambient: AmbientSpace) -> Result<SampledImmersion> {
    let dim = ambient.complex_dim;
    let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let header: Vec<String> = rd.headers()?.iter().map(|s| s.to_string()).collect();
    if header != csv_header(dim) {
        return Err(parse_err(0, format!("expected header {}", csv_header(dim).join(","))));
    }
    let width = 4 + 2 * dim;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (n, rec) in rd.records().enumerate() {
        let rec = rec.map_err(|e| parse_err(n + 1, e.to_string()))?;
        if rec.len() != width {
            return Err(parse_err(n + 1, format!("expected {width} fields, got {}", rec.len())));
        }
        let row = rec
            .iter()
            .map(|f| match f.parse::<f64>() {
                Ok(x) if x.is_finite() => Ok(x),
                _ => Err(parse_err(n + 1, format!("bad number '{f}'"))),
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
        if rows.len() > MAX_ROWS {
            return Err(parse_err(n + 1, "too many rows"));
        }
    }
    if rows.is_empty() {
        return Err(parse_err(0, "no data rows"));
    }
    let mut origin = [0.0; 4];
    let mut step = [1.0; 4];
    let mut count = [1; 4];
    for a in 0..4 {
        let mut vals: Vec<f64> = rows.iter().map(|r| r[a]).collect();
        vals.sort_by(f64::total_cmp);
        vals.dedup_by(|x, y| (*x - *y).abs() <= GRID_TOL * (1.0 + y.abs()));
        origin[a] = vals[0];
        count[a] = vals.len();
        if vals.len() > 1 {
            step[a] = (vals[vals.len() - 1] - vals[0]) / (vals.len() - 1) as f64;
        }
    }
    let grid = ReconstructionGrid::new(origin, step, count);
    grid.validate().map_err(|e| parse_err(1, e.to_string()))?;
    if grid.len() != rows.len() {
        return Err(parse_err(rows.len(), "rows do not fill a uniform grid"));
    }
    let mut f = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        let p = grid.point(grid.multi(i));
        for a in 0..4 {
            if (row[a] - p[a]).abs() > GRID_TOL * (1.0 + p[a].abs() + step[a].abs()) * 10.0 {
                return Err(parse_err(i + 1, "node is off the uniform grid or out of order"));
            }
        }
        let z = (0..dim)
            .map(|k| Complex64::new(row[4 + 2 * k], row[5 + 2 * k]))
            .collect();
        f.push(CVector::new(z, ambient.signature));
    }
    Ok(SampledImmersion { grid, ambient, f })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> SampledImmersion {
        let grid = ReconstructionGrid::new([0.1, -0.2, 0.0, 0.5], [0.25, 0.5, 0.125, 1.0], [2, 3, 1, 2]);
        let amb = AmbientSpace::sphere(5);
        let f = (0..grid.len())
            .map(|i| {
                let p = grid.point(grid.multi(i));
                CVector::new(
                    (0..5)
                        .map(|k| Complex64::new(p[k % 4] * k as f64, -p[(k + 1) % 4]))
                        .collect(),
                    amb.signature,
                )
            })
            .collect();
        SampledImmersion { grid, ambient: amb, f }
    }

    #[test]
    fn roundtrip() {
        let s = sample();
        let mut buf = Vec::new();
        write_immersion_csv(&s, &mut buf).unwrap();
        let back = read_immersion_csv(buf.as_slice(), s.ambient).unwrap();
        assert_eq!(back.grid.count, s.grid.count);
        for (a, b) in back.f.iter().zip(&s.f) {
            assert!(a.axpy((-1.0).into(), b).coord_norm() < 1e-14);
        }
    }

    #[test]
    fn rejects_bad_files() {
        let amb = AmbientSpace::flat(4);
        let h = csv_header(4).join(",");
        for bad in [
            String::new(),
            "t,s,u,v\n0,0,0,0\n".to_string(),
            format!("{h}\n"),
            format!("{h}\n0,0,0,0,1,1,1,1,1,1,1\n"),
            format!("{h}\n0,0,0,0,1,1,1,1,1,1,1,x\n"),
            format!("{h}\n0,0,0,0,1,1,1,1,1,1,1,1\n0,0,0,1,1,1,1,1,1,1,1,1\n0,0,0,3,1,1,1,1,1,1,1,1\n"),
            format!("{h}\n0,0,0,1,1,1,1,1,1,1,1,1\n0,0,0,0,1,1,1,1,1,1,1,1\n"),
        ] {
            assert!(read_immersion_csv(bad.as_bytes(), amb).is_err(), "{bad:?}");
        }
    }
}
