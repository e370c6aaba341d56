//! Sinogram files.
//!
//! Binary layout (all little endian):
//!
//! ```text
//! "CSIN0001"            8-byte magic
//! u32 kind              0 = circular, 1 = planar
//! u32 angular count
//! u32 radial count
//! f64 r_min
//! f64 r_max
//! f64 values[angles][radii]
//! ```
//!
//! The CSV alternative has the header `psi,rho,value` and one row per cell in
//! angle-major order; it does not carry the kind.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{AngularGrid, RadialGrid, Sinogram, SinogramKind};
use crate::error::{Error, Result};

pub const CSIN_MAGIC: &[u8; 8] = b"CSIN0001";

pub fn write_csin<W: Write>(sino: &Sinogram, mut out: W) -> Result<()> {
    out.write_all(CSIN_MAGIC)?;
    out.write_all(&sino.kind().flag().to_le_bytes())?;
    out.write_all(&(sino.angular().count() as u32).to_le_bytes())?;
    out.write_all(&(sino.radial().count() as u32).to_le_bytes())?;
    out.write_all(&sino.radial().r_min().to_le_bytes())?;
    out.write_all(&sino.radial().r_max().to_le_bytes())?;
    for v in sino.values() {
        out.write_all(&v.to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

fn read_array<const N: usize, R: Read>(input: &mut R) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    input
        .read_exact(&mut buf)
        .map_err(|e| Error::Format(format!("truncated CSIN header: {e}")))?;
    Ok(buf)
}

pub fn read_csin<R: Read>(mut input: R) -> Result<Sinogram> {
    let magic: [u8; 8] = read_array(&mut input)?;
    if &magic != CSIN_MAGIC {
        return Err(Error::Format("bad CSIN magic".into()));
    }
    let kind = SinogramKind::from_flag(u32::from_le_bytes(read_array(&mut input)?))?;
    let angles = u32::from_le_bytes(read_array(&mut input)?) as usize;
    let radii = u32::from_le_bytes(read_array(&mut input)?) as usize;
    let r_min = f64::from_le_bytes(read_array(&mut input)?);
    let r_max = f64::from_le_bytes(read_array(&mut input)?);
    let angular = AngularGrid::new(angles)?;
    let radial = RadialGrid::new(r_min, r_max, radii)?;

    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    let expected = angles * radii * 8;
    if bytes.len() != expected {
        return Err(Error::Format(format!(
            "CSIN payload has {} bytes, header implies {expected}",
            bytes.len()
        )));
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    Sinogram::new(kind, angular, radial, values)
}

pub fn write_csv<W: Write>(sino: &Sinogram, mut out: W) -> Result<()> {
    writeln!(out, "psi,rho,value")?;
    let radial = sino.radial();
    for j in 0..sino.angular().count() {
        let psi = sino.angular().angle(j);
        for (i, v) in sino.row(j).iter().enumerate() {
            writeln!(out, "{psi:.17e},{:.17e},{v:.17e}", radial.point(i))?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R, kind: SinogramKind) -> Result<Sinogram> {
    let mut lines = BufReader::new(input).lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Format("empty CSV".into()))??;
    if header.trim() != "psi,rho,value" {
        return Err(Error::Format(format!("unexpected CSV header `{header}`")));
    }
    let mut rows = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<f64> = line
            .split(',')
            .map(|f| f.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Format(format!("CSV line {}: {e}", lineno + 2)))?;
        if fields.len() != 3 {
            return Err(Error::Format(format!("CSV line {} needs 3 fields", lineno + 2)));
        }
        rows.push([fields[0], fields[1], fields[2]]);
    }
    if rows.is_empty() {
        return Err(Error::Format("CSV has no data rows".into()));
    }
    let first_psi = rows[0][0];
    let radii = rows.iter().take_while(|r| r[0] == first_psi).count();
    if rows.len() % radii != 0 {
        return Err(Error::Format("CSV rows do not form an angle-major grid".into()));
    }
    let angular = AngularGrid::new(rows.len() / radii)?;
    let radial = RadialGrid::new(rows[0][1], rows[radii - 1][1], radii)?;
    let tol = 1e-9 * radial.extent().max(1.0);
    for (idx, r) in rows.iter().enumerate() {
        let (j, i) = (idx / radii, idx % radii);
        if (r[0] - angular.angle(j)).abs() > 1e-9 || (r[1] - radial.point(i)).abs() > tol {
            return Err(Error::Format(format!("CSV row {} is off the uniform grid", idx + 2)));
        }
    }
    Sinogram::new(kind, angular, radial, rows.into_iter().map(|r| r[2]).collect())
}

/// Reads CSIN, or CSV when the extension is `.csv` (then `kind` is required).
pub fn load(path: &Path, kind: Option<SinogramKind>) -> Result<Sinogram> {
    let file = File::open(path)?;
    if is_csv(path) {
        let kind = kind.ok_or_else(|| {
            Error::domain("CSV sinograms carry no kind; pass it explicitly")
        })?;
        read_csv(file, kind)
    } else {
        read_csin(BufReader::new(file))
    }
}

pub fn save(path: &Path, sino: &Sinogram) -> Result<()> {
    let out = BufWriter::new(File::create(path)?);
    if is_csv(path) {
        write_csv(sino, out)
    } else {
        write_csin(sino, out)
    }
}

fn is_csv(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}
