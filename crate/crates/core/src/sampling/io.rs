//! Mask files: a binary PBM (P4) bitmap plus a `key = value` sidecar.
//!
//! In the bitmap a set bit (black) marks a selected k-space point; rows are
//! the first DFT index, packed MSB first and padded to whole bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array2;

use super::{
    actual_reduction, CartesianDims, CartesianSpec, FractalSpec, Provenance, SamplingMask,
};
use crate::error::{FcsError, Result};
use crate::geometry::{GridGeometry, Slope};
use crate::kv;

pub fn encode_pbm(selected: &Array2<bool>) -> Vec<u8> {
    let (rows, cols) = selected.dim();
    let mut out = format!("P4\n{cols} {rows}\n").into_bytes();
    let stride = cols.div_ceil(8);
    for row in selected.rows() {
        let mut packed = vec![0u8; stride];
        for (c, &s) in row.iter().enumerate() {
            if s {
                packed[c / 8] |= 0x80 >> (c % 8);
            }
        }
        out.extend_from_slice(&packed);
    }
    out
}

pub fn decode_pbm(bytes: &[u8]) -> Result<Array2<bool>> {
    let bad = |msg: &str| FcsError::Parse(format!("pbm: {msg}"));
    let mut pos = 0;
    let mut tokens = Vec::new();
    while tokens.len() < 3 {
        while pos < bytes.len() && (bytes[pos].is_ascii_whitespace() || bytes[pos] == b'#') {
            if bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                pos += 1;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("truncated header"));
        }
        tokens.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| bad("header"))?);
    }
    if tokens[0] != "P4" {
        return Err(bad("not a binary PBM"));
    }
    let cols: usize = tokens[1].parse().map_err(|_| bad("width"))?;
    let rows: usize = tokens[2].parse().map_err(|_| bad("height"))?;
    // exactly one whitespace byte separates header and raster
    pos += 1;
    let stride = cols.div_ceil(8);
    let raster = bytes
        .get(pos..pos + stride * rows)
        .ok_or_else(|| bad("truncated raster"))?;
    Ok(Array2::from_shape_fn((rows, cols), |(r, c)| {
        raster[r * stride + c / 8] & (0x80 >> (c % 8)) != 0
    }))
}

pub fn sidecar_path(pbm: &Path) -> PathBuf {
    pbm.with_extension("meta")
}

pub fn encode_sidecar(mask: &SamplingMask) -> String {
    let mut s = String::new();
    let prov = mask.provenance();
    let _ = writeln!(s, "kind = {}", prov.kind_name());
    let _ = writeln!(s, "N = {}", mask.size());
    match prov {
        Provenance::PFrac { spec, slopes } => {
            if spec.geometry.size() != mask.size() {
                let _ = writeln!(s, "lattice = {}", spec.geometry.size());
            }
            let _ = writeln!(s, "r = {}", spec.r);
            let _ = writeln!(s, "mu = {}", spec.mu);
            let _ = writeln!(s, "ctr = {}", spec.ctr);
            let _ = writeln!(s, "seed = {}", spec.seed);
            let tokens: Vec<String> = slopes.iter().map(Slope::to_string).collect();
            let _ = writeln!(s, "slopes = {}", tokens.join(","));
        }
        Provenance::Cartesian { spec, chosen } => {
            let _ = writeln!(s, "r = {}", spec.r);
            let _ = writeln!(s, "alpha = {}", spec.alpha);
            let _ = writeln!(s, "ctr = {}", spec.ctr);
            let _ = writeln!(s, "seed = {}", spec.seed);
            let tokens: Vec<String> = chosen.iter().map(usize::to_string).collect();
            let _ = writeln!(s, "chosen = {}", tokens.join(","));
        }
        Provenance::Custom => {}
    }
    let _ = writeln!(s, "actual_reduction = {}", actual_reduction(mask));
    s
}

pub fn decode_provenance(text: &str, geometry: GridGeometry) -> Result<Provenance> {
    let sections = kv::parse(text)?;
    let meta = &sections[0];
    let n: usize = meta.parse_req("N")?;
    if n != geometry.size() {
        return Err(FcsError::Parse(format!(
            "sidecar N = {n} but bitmap is {}",
            geometry.size()
        )));
    }
    let list = |key: &str| -> Vec<&str> {
        meta.get(key)
            .map(|v| {
                v.split(',')
                    .map(str::trim)
                    .filter(|t| !t.is_empty())
                    .collect()
            })
            .unwrap_or_default()
    };
    match meta.require("kind")? {
        "pfrac" => Ok(Provenance::PFrac {
            spec: FractalSpec {
                geometry: match meta.get("lattice") {
                    Some(v) => GridGeometry::new(kv::parse_value("lattice", v)?)?,
                    None => geometry,
                },
                r: meta.parse_req("r")?,
                mu: meta.parse_req("mu")?,
                ctr: meta.parse_req("ctr")?,
                seed: meta.parse_req("seed")?,
            },
            slopes: list("slopes")
                .into_iter()
                .map(str::parse)
                .collect::<Result<_>>()?,
        }),
        kind @ ("cartesian1d" | "cartesian2d") => Ok(Provenance::Cartesian {
            spec: CartesianSpec {
                geometry,
                r: meta.parse_req("r")?,
                alpha: meta.parse_req("alpha")?,
                ctr: meta.parse_req("ctr")?,
                seed: meta.parse_req("seed")?,
                dims: if kind == "cartesian1d" {
                    CartesianDims::OneD
                } else {
                    CartesianDims::TwoD
                },
            },
            chosen: list("chosen")
                .into_iter()
                .map(|t| kv::parse_value("chosen", t))
                .collect::<Result<_>>()?,
        }),
        "custom" => Ok(Provenance::Custom),
        other => Err(FcsError::Parse(format!("unknown mask kind {other:?}"))),
    }
}

/// Writes `path` (PBM) and its `.meta` sidecar.
pub fn write_mask(mask: &SamplingMask, path: &Path) -> Result<()> {
    fs::write(path, encode_pbm(mask.selected()))?;
    fs::write(sidecar_path(path), encode_sidecar(mask))?;
    Ok(())
}

/// Reads a PBM mask; the sidecar is optional.
pub fn read_mask(path: &Path) -> Result<SamplingMask> {
    let selected = decode_pbm(&fs::read(path)?)?;
    let (r, c) = selected.dim();
    if r != c {
        return Err(FcsError::Parse(format!("mask must be square, got {r}x{c}")));
    }
    let geometry = GridGeometry::new(r)?;
    let side = sidecar_path(path);
    let provenance = if side.exists() {
        decode_provenance(&fs::read_to_string(side)?, geometry)?
    } else {
        Provenance::Custom
    };
    SamplingMask::new(geometry, selected, provenance)
}
