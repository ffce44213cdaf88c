//! CSV and JSON serialization of k-fields.

use serde::{Deserialize, Serialize};
use std::io::{Read, Write};

use super::{Bc, Grid, KFields, SystemId};
use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 6] = ["u", "v", "k1", "k2", "k3", "k4"];

/// Relative tolerance when recovering a uniform grid from coordinates.
const GRID_TOL: f64 = 1e-9;
/// Refuse to allocate grids beyond this many nodes when parsing.
pub const MAX_NODES: usize = 1 << 22;

/// Sidecar describing a field file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KFieldsMeta {
    pub system: SystemId,
    pub bc: Bc,
    pub grid: Grid,
    #[serde(default)]
    pub residual_history: Vec<f64>,
}

pub fn write_csv<W: Write>(k: &KFields, w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(CSV_HEADER)?;
    for node in 0..k.grid.len() {
        let (u, v) = k.grid.coords(node);
        let vals = k.at(node);
        wr.write_record(
            [u, v, vals[0], vals[1], vals[2], vals[3]]
                .iter()
                .map(|x| format!("{x:e}")),
        )?;
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

/// Reads a field file; rows must list nodes with u varying fastest on a
/// uniform grid. `pos` in parse errors is the 1-based data row.
pub fn read_csv<R: Read>(r: R, bc: Bc) -> Result<KFields> {
    let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let header = rd.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != CSV_HEADER {
        return Err(parse_err(0, format!("expected header {}", CSV_HEADER.join(","))));
    }
    let mut rows: Vec<[f64; 6]> = Vec::new();
    for (n, rec) in rd.records().enumerate() {
        let rec = rec.map_err(|e| parse_err(n + 1, e.to_string()))?;
        if rec.len() != 6 {
            return Err(parse_err(n + 1, format!("expected 6 fields, got {}", rec.len())));
        }
        let mut row = [0.0; 6];
        for (q, f) in rec.iter().enumerate() {
            let x: f64 = f.parse().map_err(|_| parse_err(n + 1, format!("bad number '{f}'")))?;
            if !x.is_finite() {
                return Err(parse_err(n + 1, "non-finite value"));
            }
            row[q] = x;
        }
        rows.push(row);
        if rows.len() > MAX_NODES {
            return Err(parse_err(n + 1, "too many rows"));
        }
    }
    if rows.is_empty() {
        return Err(parse_err(0, "no data rows"));
    }
    let (u0, v0) = (rows[0][0], rows[0][1]);
    let nu = rows.iter().take_while(|r| r[1] == v0).count();
    if !rows.len().is_multiple_of(nu) {
        return Err(parse_err(
            rows.len(),
            "row count is not a multiple of the u-line length",
        ));
    }
    let nv = rows.len() / nu;
    let hu = if nu > 1 { rows[1][0] - u0 } else { 1.0 };
    let hv = if nv > 1 { rows[nu][1] - v0 } else { 1.0 };
    let grid = Grid { nu, nv, hu, hv, u0, v0 };
    grid.validate().map_err(|_| parse_err(1, "coordinates must increase"))?;
    let mut k: [Vec<f64>; 4] = std::array::from_fn(|_| Vec::with_capacity(rows.len()));
    for (node, row) in rows.iter().enumerate() {
        let (u, v) = grid.coords(node);
        let tol = GRID_TOL * (1.0 + u.abs().max(v.abs()) + hu.max(hv));
        if (row[0] - u).abs() > tol || (row[1] - v).abs() > tol {
            return Err(parse_err(
                node + 1,
                format!("node ({}, {}) is off the uniform grid", row[0], row[1]),
            ));
        }
        for m in 0..4 {
            k[m].push(row[2 + m]);
        }
    }
    Ok(KFields { grid, bc, k })
}

pub fn write_meta<W: Write>(meta: &KFieldsMeta, w: W) -> Result<()> {
    serde_json::to_writer_pretty(w, meta)?;
    Ok(())
}

pub fn read_meta<R: Read>(r: R) -> Result<KFieldsMeta> {
    let m: KFieldsMeta = serde_json::from_reader(r)?;
    m.grid.validate()?;
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rejects_bad_input() {
        for bad in [
            "",
            "a,b\n1,2\n",
            "u,v,k1,k2,k3,k4\n",
            "u,v,k1,k2,k3,k4\n0,0,1,1,1\n",
            "u,v,k1,k2,k3,k4\n0,0,1,1,1,x\n",
            "u,v,k1,k2,k3,k4\n0,0,1,1,1,NaN\n",
            "u,v,k1,k2,k3,k4\n0,0,0,0,0,0\n1,0,0,0,0,0\n3,0,0,0,0,0\n",
            "u,v,k1,k2,k3,k4\n1,0,0,0,0,0\n0,0,0,0,0,0\n",
        ] {
            assert!(read_csv(bad.as_bytes(), Bc::Periodic).is_err(), "{bad:?}");
        }
    }

    proptest! {
        #[test]
        fn csv_roundtrip(nu in 1usize..6, nv in 1usize..6, seed in 0u64..100) {
            let grid = Grid { nu, nv, hu: 0.25, hv: 0.125, u0: -0.5, v0: 0.3 };
            let k = KFields::from_fn(grid, Bc::Periodic, |u, v| {
                [u.sin() + seed as f64, v * 3.0, (u * v).cos(), -u]
            });
            let mut buf = Vec::new();
            write_csv(&k, &mut buf).unwrap();
            let back = read_csv(buf.as_slice(), Bc::Periodic).unwrap();
            prop_assert_eq!(back.grid.nu, nu);
            prop_assert_eq!(back.grid.nv, nv);
            for m in 0..4 {
                for (a, b) in back.k[m].iter().zip(&k.k[m]) {
                    prop_assert!((a - b).abs() <= 1e-15 * (1.0 + b.abs()));
                }
            }
        }
    }

    #[test]
    fn meta_roundtrip() {
        let meta = KFieldsMeta {
            system: SystemId::Cpk2,
            bc: Bc::Dirichlet,
            grid: Grid::unit_periodic(4),
            residual_history: vec![1.0, 0.1],
        };
        let mut buf = Vec::new();
        write_meta(&meta, &mut buf).unwrap();
        assert_eq!(read_meta(buf.as_slice()).unwrap(), meta);
    }
}
