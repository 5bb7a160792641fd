//! Binary checkpoint format for restart and post-mortem dumps.
//!
//! Byte layout, all little-endian:
//!
//! ```text
//! offset  size  field
//! 0       4     magic "QBCK"
//! 4       4     format version (u32), currently 1
//! 8       4     spatial dimension (u32), 1 or 2
//! 12      4     reserved, 0
//! 16      8     nx (u64)
//! 24      8     ny (u64)
//! 32      56    x_min, y_min, dx, dy, dt, offset, t (7 × f64)
//! 88      n·8   Re Φ   (n = nx·ny)
//! 88+8n   n·8   Im Φ
//! 88+16n  n·8   Re Φ̇
//! 88+24n  n·8   Im Φ̇
//! ```
//!
//! The reader validates the header and the exact total length before
//! allocating anything, so truncated or hostile inputs fail cleanly.

use crate::error::{Error, Result};
use crate::grid::{FieldState, Grid};
use std::io::Write;
use std::path::Path;

pub const MAGIC: [u8; 4] = *b"QBCK";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 88;

pub fn write_checkpoint<W: Write>(state: &FieldState, mut w: W) -> Result<()> {
    let g = &state.grid;
    w.write_all(&MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(g.dim as u32).to_le_bytes())?;
    w.write_all(&0u32.to_le_bytes())?;
    w.write_all(&(g.nx as u64).to_le_bytes())?;
    w.write_all(&(g.ny as u64).to_le_bytes())?;
    for v in [g.x_min, g.y_min, g.dx, g.dy, g.dt, g.offset, state.t] {
        w.write_all(&v.to_le_bytes())?;
    }
    for arr in [&state.re, &state.im, &state.vre, &state.vim] {
        for v in arr.iter() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn write_checkpoint_file<P: AsRef<Path>>(state: &FieldState, path: P) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut buf = std::io::BufWriter::new(file);
    write_checkpoint(state, &mut buf)?;
    buf.flush()?;
    Ok(())
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Checkpoint(msg.into())
}

fn read_u32(data: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(data[at..at + 4].try_into().expect("bounds checked"))
}

fn read_u64(data: &[u8], at: usize) -> u64 {
    u64::from_le_bytes(data[at..at + 8].try_into().expect("bounds checked"))
}

fn read_f64(data: &[u8], at: usize) -> f64 {
    f64::from_le_bytes(data[at..at + 8].try_into().expect("bounds checked"))
}

/// Decode a checkpoint from a byte slice. Never panics: every length and
/// header field is validated before use.
pub fn read_checkpoint_bytes(data: &[u8]) -> Result<FieldState> {
    if data.len() < HEADER_LEN {
        return Err(bad(format!("too short: {} bytes", data.len())));
    }
    if data[0..4] != MAGIC {
        return Err(bad("bad magic"));
    }
    let version = read_u32(data, 4);
    if version != VERSION {
        return Err(bad(format!("unsupported version {version}")));
    }
    let dim = read_u32(data, 8) as usize;
    if dim != 1 && dim != 2 {
        return Err(bad(format!("unsupported dimension {dim}")));
    }
    if read_u32(data, 12) != 0 {
        return Err(bad("reserved header bytes must be zero"));
    }
    let nx = read_u64(data, 16);
    let ny = read_u64(data, 24);
    let n = nx
        .checked_mul(ny)
        .ok_or_else(|| bad("cell count overflows"))?;
    let n: usize = n.try_into().map_err(|_| bad("cell count overflows"))?;
    let payload = n
        .checked_mul(32)
        .and_then(|p| p.checked_add(HEADER_LEN))
        .ok_or_else(|| bad("payload length overflows"))?;
    if payload != data.len() {
        return Err(bad(format!(
            "length mismatch: header implies {payload} bytes, got {}",
            data.len()
        )));
    }
    let mut scal = [0.0_f64; 7];
    for (k, v) in scal.iter_mut().enumerate() {
        *v = read_f64(data, 32 + 8 * k);
    }
    let grid = Grid {
        dim,
        nx: nx as usize,
        ny: ny as usize,
        x_min: scal[0],
        y_min: scal[1],
        dx: scal[2],
        dy: scal[3],
        dt: scal[4],
        offset: scal[5],
    };
    grid.validate()
        .map_err(|e| bad(format!("invalid grid in header: {e}")))?;
    if !scal[6].is_finite() {
        return Err(bad("non-finite time"));
    }
    if !scal[5].is_finite() || !scal[0].is_finite() || !scal[1].is_finite() {
        return Err(bad("non-finite grid geometry"));
    }

    let mut state = FieldState::zeros(grid);
    state.t = scal[6];
    let mut at = HEADER_LEN;
    for arr in [
        &mut state.re,
        &mut state.im,
        &mut state.vre,
        &mut state.vim,
    ] {
        for v in arr.iter_mut() {
            *v = read_f64(data, at);
            at += 8;
        }
    }
    Ok(state)
}

pub fn read_checkpoint_file<P: AsRef<Path>>(path: P) -> Result<FieldState> {
    let data = std::fs::read(path)?;
    read_checkpoint_bytes(&data)
}
