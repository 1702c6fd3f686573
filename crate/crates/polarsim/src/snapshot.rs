//! Field snapshots in a plain-text format and a packed little-endian binary
//! format.
//!
//! Text layout: `#`-prefixed header lines `key = value` (`config_hash`, `t`,
//! `grid`), then one row per node with the columns `x [y] u v w`, values in
//! `{:.17e}`. `grid` is `1 L n` or `2 Lx Ly nx ny`.
//!
//! Binary layout, all little-endian: the 8 magic bytes `PSNAP\0\0\x01`, `u32`
//! dimension, `u32` zero, `u64` nx, `u64` ny, `f64` Lx, `f64` Ly, `f64` t, 64
//! bytes of ASCII config hash padded with zeros, then `u` and `v` as `f64`
//! arrays in node order `i + nx·j`.

use std::io::{self, BufRead, Read, Write};

use polarsim_core::solver::SimState;
use polarsim_core::{Field, Grid};

use crate::CliError;

const MAGIC: &[u8; 8] = b"PSNAP\0\0\x01";

pub fn grid_descriptor(grid: &Grid) -> String {
    if grid.dim() == 1 {
        format!("1 {} {}", grid.length(0), grid.nodes(0))
    } else {
        format!(
            "2 {} {} {} {}",
            grid.length(0),
            grid.length(1),
            grid.nodes(0),
            grid.nodes(1)
        )
    }
}

fn parse_grid(desc: &str) -> Result<Grid, CliError> {
    let parts: Vec<&str> = desc.split_whitespace().collect();
    let bad = || CliError::config(format!("bad grid descriptor `{desc}`"));
    let num = |s: &str| s.parse::<f64>().map_err(|_| bad());
    let count = |s: &str| s.parse::<usize>().map_err(|_| bad());
    let grid = match parts.as_slice() {
        ["1", l, n] => Grid::line(num(l)?, count(n)?),
        ["2", lx, ly, nx, ny] => Grid::rect(num(lx)?, num(ly)?, count(nx)?, count(ny)?),
        _ => return Err(bad()),
    };
    grid.map_err(CliError::config)
}

pub fn write_text(
    out: &mut impl Write,
    grid: &Grid,
    state: &SimState,
    diffusion: f64,
    hash: &str,
) -> io::Result<()> {
    writeln!(out, "# polarsim snapshot")?;
    writeln!(out, "# config_hash = {hash}")?;
    writeln!(out, "# t = {:.17e}", state.t)?;
    writeln!(out, "# grid = {}", grid_descriptor(grid))?;
    let cols = if grid.dim() == 1 {
        "x u v w"
    } else {
        "x y u v w"
    };
    writeln!(out, "# columns = {cols}")?;
    for i in 0..grid.len() {
        let (x, y) = grid.coords(i);
        let u = state.u.values()[i];
        let v = state.v.values()[i];
        if grid.dim() == 2 {
            write!(out, "{x:.17e} {y:.17e} ")?;
        } else {
            write!(out, "{x:.17e} ")?;
        }
        writeln!(out, "{u:.17e} {v:.17e} {:.17e}", diffusion * u + v)?;
    }
    Ok(())
}

/// A snapshot read back from disk.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub t: f64,
    pub grid: Grid,
    pub u: Field,
    pub v: Field,
    pub config_hash: String,
}

pub fn read_text(input: impl BufRead) -> Result<Snapshot, CliError> {
    let mut t = 0.0;
    let mut grid = None;
    let mut hash = String::new();
    let mut u = Vec::new();
    let mut v = Vec::new();
    for line in input.lines() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if let Some((key, value)) = rest.split_once('=') {
                let value = value.trim();
                match key.trim() {
                    "t" => {
                        t = value
                            .parse()
                            .map_err(|_| CliError::config(format!("bad snapshot time `{value}`")))?
                    }
                    "grid" => grid = Some(parse_grid(value)?),
                    "config_hash" => hash = value.to_string(),
                    _ => {}
                }
            }
            continue;
        }
        let grid = grid
            .as_ref()
            .ok_or_else(|| CliError::config("snapshot rows before grid header"))?;
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(|s| s.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| CliError::config(format!("bad snapshot row `{line}`")))?;
        let offset = grid.dim();
        if vals.len() != offset + 3 {
            return Err(CliError::config(format!(
                "snapshot row has {} columns, expected {}",
                vals.len(),
                offset + 3
            )));
        }
        u.push(vals[offset]);
        v.push(vals[offset + 1]);
    }
    let grid = grid.ok_or_else(|| CliError::config("snapshot has no grid header"))?;
    let u = Field::new(&grid, u).map_err(CliError::config)?;
    let v = Field::new(&grid, v).map_err(CliError::config)?;
    Ok(Snapshot {
        t,
        grid,
        u,
        v,
        config_hash: hash,
    })
}

pub fn write_binary(
    out: &mut impl Write,
    grid: &Grid,
    state: &SimState,
    hash: &str,
) -> io::Result<()> {
    out.write_all(MAGIC)?;
    out.write_all(&(grid.dim() as u32).to_le_bytes())?;
    out.write_all(&0u32.to_le_bytes())?;
    out.write_all(&(grid.nodes(0) as u64).to_le_bytes())?;
    out.write_all(&(grid.nodes(1) as u64).to_le_bytes())?;
    out.write_all(&grid.length(0).to_le_bytes())?;
    out.write_all(&grid.length(1).to_le_bytes())?;
    out.write_all(&state.t.to_le_bytes())?;
    let mut tag = [0u8; 64];
    let bytes = hash.as_bytes();
    tag[..bytes.len().min(64)].copy_from_slice(&bytes[..bytes.len().min(64)]);
    out.write_all(&tag)?;
    for x in state.u.values().iter().chain(state.v.values()) {
        out.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_binary(mut input: impl Read) -> Result<Snapshot, CliError> {
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(CliError::config("not a polarsim binary snapshot"));
    }
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    input.read_exact(&mut b4)?;
    let dim = u32::from_le_bytes(b4);
    input.read_exact(&mut b4)?;
    let mut next_u64 = |input: &mut dyn Read| -> io::Result<u64> {
        input.read_exact(&mut b8)?;
        Ok(u64::from_le_bytes(b8))
    };
    let nx = next_u64(&mut input)? as usize;
    let ny = next_u64(&mut input)? as usize;
    let lx = f64::from_bits(next_u64(&mut input)?);
    let ly = f64::from_bits(next_u64(&mut input)?);
    let t = f64::from_bits(next_u64(&mut input)?);
    let mut tag = [0u8; 64];
    input.read_exact(&mut tag)?;
    let hash = String::from_utf8_lossy(&tag)
        .trim_end_matches('\0')
        .to_string();
    let grid = match dim {
        1 => Grid::line(lx, nx),
        2 => Grid::rect(lx, ly, nx, ny),
        _ => return Err(CliError::config(format!("bad snapshot dimension {dim}"))),
    }
    .map_err(CliError::config)?;
    let mut read_field = |input: &mut dyn Read| -> io::Result<Vec<f64>> {
        (0..grid.len())
            .map(|_| next_u64(input).map(f64::from_bits))
            .collect()
    };
    let u = read_field(&mut input)?;
    let v = read_field(&mut input)?;
    Ok(Snapshot {
        t,
        u: Field::new(&grid, u).map_err(CliError::config)?,
        v: Field::new(&grid, v).map_err(CliError::config)?,
        grid,
        config_hash: hash,
    })
}
