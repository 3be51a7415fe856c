//! Plain-text path lists: one path per line,
//! `re_gain im_gain doa_x doa_y doa_z dod_x dod_y dod_z delay_s`,
//! whitespace separated. Blank lines and `#` comments are ignored.

use std::io::{BufRead, Write};

use nalgebra::Vector3;
use num_complex::Complex64;

use super::response::PathParams;
use crate::error::{Error, Result};

pub fn write_paths<W: Write>(mut out: W, paths: &[PathParams]) -> std::io::Result<()> {
    writeln!(out, "# re_gain im_gain doa_x doa_y doa_z dod_x dod_y dod_z delay_s")?;
    for p in paths {
        // {:e} round-trips f64 exactly
        writeln!(
            out,
            "{:e} {:e} {:e} {:e} {:e} {:e} {:e} {:e} {:e}",
            p.gain.re, p.gain.im, p.doa.x, p.doa.y, p.doa.z, p.dod.x, p.dod.y, p.dod.z, p.delay
        )?;
    }
    Ok(())
}

pub fn read_paths<R: BufRead>(input: R) -> Result<Vec<PathParams>> {
    let mut paths = Vec::new();
    for (n, line) in input.lines().enumerate() {
        let line = line.map_err(|e| Error::Config(format!("line {}: {e}", n + 1)))?;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let v: Vec<f64> = body
            .split_whitespace()
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(|e| Error::Config(format!("line {}: {e}", n + 1)))?;
        if v.len() != 9 {
            return Err(Error::Config(format!(
                "line {}: expected 9 fields, found {}",
                n + 1,
                v.len()
            )));
        }
        let p = PathParams::new(
            Complex64::new(v[0], v[1]),
            Vector3::new(v[2], v[3], v[4]),
            Vector3::new(v[5], v[6], v[7]),
            v[8],
        )
        .map_err(|e| Error::Config(format!("line {}: {e}", n + 1)))?;
        paths.push(p);
    }
    Ok(paths)
}
