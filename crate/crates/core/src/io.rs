//! On-disk formats and atomic file writes.

use nalgebra::DMatrix;
use num_complex::Complex64;
use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"C2PT";
const VERSION: u32 = 1;

/// Write `bytes` to a temporary sibling, then rename over `path`.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn encode_twopoint(m: &DMatrix<Complex64>, x_used: f64) -> Vec<u8> {
    let g = m.nrows();
    let mut out = Vec::with_capacity(24 + 16 * g * g);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(g as u64).to_le_bytes());
    out.extend_from_slice(&x_used.to_le_bytes());
    for p in 0..g {
        for q in 0..g {
            let v = m[(p, q)];
            out.extend_from_slice(&v.re.to_le_bytes());
            out.extend_from_slice(&v.im.to_le_bytes());
        }
    }
    out
}

/// Returns the matrix and the threshold it was built with.
pub fn decode_twopoint(bytes: &[u8]) -> Result<(DMatrix<Complex64>, f64)> {
    let bad = |m: &str| Error::Format(m.to_string());
    if bytes.len() < 24 || &bytes[..4] != MAGIC {
        return Err(bad("missing C2PT header"));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let g = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    let x_used = f64::from_le_bytes(bytes[16..24].try_into().unwrap());
    let need = g.checked_mul(g).and_then(|n| n.checked_mul(16)).and_then(|n| n.checked_add(24));
    if need != Some(bytes.len()) {
        return Err(bad("payload length does not match G"));
    }
    let f = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let m = DMatrix::from_fn(g, g, |p, q| {
        let o = 24 + 16 * (p * g + q);
        Complex64::new(f(o), f(o + 8))
    });
    Ok((m, x_used))
}

pub fn write_twopoint(path: &Path, m: &DMatrix<Complex64>, x_used: f64) -> Result<()> {
    atomic_write(path, &encode_twopoint(m, x_used))
}

pub fn read_twopoint(path: &Path) -> Result<(DMatrix<Complex64>, f64)> {
    decode_twopoint(&fs::read(path)?)
}
