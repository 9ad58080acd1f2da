//! UPLF: little-endian binary container for one field.
//!
//! ```text
//! "UPLF" | u32 version=1 | u32 D | D x u64 dims | D x f64 lengths
//! u32 nblocks | nblocks x (u8 kind, u32 d) | u8 representation
//! (prod dims * ncomp) x (f64 re, f64 im), point-major, component-minor
//! ```

use std::io::{Read, Write};
use std::path::Path;

use super::{Block, BlockLayout, Field, FieldError, Grid, Representation};
use crate::real::{Real, C};

const MAGIC: &[u8; 4] = b"UPLF";
const VERSION: u32 = 1;

pub fn write<T: Real, W: Write>(field: &Field<T>, mut w: W) -> Result<(), FieldError> {
    let g = field.grid();
    let mut head = Vec::with_capacity(64);
    head.extend_from_slice(MAGIC);
    head.extend_from_slice(&VERSION.to_le_bytes());
    head.extend_from_slice(&(g.ndim() as u32).to_le_bytes());
    for &n in g.dims() {
        head.extend_from_slice(&(n as u64).to_le_bytes());
    }
    for &l in g.lengths() {
        head.extend_from_slice(&l.to_le_bytes());
    }
    let blocks = field.layout().blocks();
    head.extend_from_slice(&(blocks.len() as u32).to_le_bytes());
    for b in blocks {
        head.push(b.kind_code());
        head.extend_from_slice(&(b.dim() as u32).to_le_bytes());
    }
    head.push(match field.representation() {
        Representation::Real => 0,
        Representation::Fourier => 1,
    });
    w.write_all(&head)?;
    let mut body = Vec::with_capacity(field.values().len() * 16);
    for z in field.values() {
        body.extend_from_slice(&z.re.to_f64_lossy().to_le_bytes());
        body.extend_from_slice(&z.im.to_f64_lossy().to_le_bytes());
    }
    w.write_all(&body)?;
    Ok(())
}

pub fn read<T: Real, R: Read>(mut r: R) -> Result<Field<T>, FieldError> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(FieldError::Format("bad magic".into()));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(FieldError::Format(format!("unsupported version {version}")));
    }
    let ndim = read_u32(&mut r)? as usize;
    if ndim == 0 || ndim > 64 {
        return Err(FieldError::Format(format!("implausible dimension count {ndim}")));
    }
    let mut dims = Vec::with_capacity(ndim);
    for _ in 0..ndim {
        let n = read_u64(&mut r)?;
        dims.push(usize::try_from(n).map_err(|_| FieldError::Format("axis too large".into()))?);
    }
    let mut lengths = Vec::with_capacity(ndim);
    for _ in 0..ndim {
        lengths.push(f64::from_le_bytes(read_array(&mut r)?));
    }
    let grid = Grid::new(dims, lengths)?;
    let nblocks = read_u32(&mut r)? as usize;
    if nblocks == 0 || nblocks > 1024 {
        return Err(FieldError::Format(format!("implausible block count {nblocks}")));
    }
    let mut blocks = Vec::with_capacity(nblocks);
    for _ in 0..nblocks {
        let [kind] = read_array::<1, _>(&mut r)?;
        let d = read_u32(&mut r)? as usize;
        blocks.push(
            Block::from_code(kind, d)
                .ok_or_else(|| FieldError::Format(format!("bad block kind {kind} with d={d}")))?,
        );
    }
    let layout = BlockLayout::new(blocks)?;
    let [rep] = read_array::<1, _>(&mut r)?;
    let repr = match rep {
        0 => Representation::Real,
        1 => Representation::Fourier,
        x => return Err(FieldError::Format(format!("bad representation tag {x}"))),
    };
    let count = grid
        .num_points()
        .checked_mul(layout.total_components())
        .ok_or_else(|| FieldError::Format("field too large".into()))?;
    let mut bytes = vec![0u8; count * 16];
    r.read_exact(&mut bytes)
        .map_err(|e| FieldError::Format(format!("truncated payload: {e}")))?;
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        return Err(FieldError::Format("trailing bytes after payload".into()));
    }
    let data = bytes
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
            let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
            C::new(T::lit(re), T::lit(im))
        })
        .collect();
    Field::from_vec(&grid, &layout, repr, data)
}

pub fn write_file<T: Real>(field: &Field<T>, path: impl AsRef<Path>) -> Result<(), FieldError> {
    let f = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(f);
    write(field, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn read_file<T: Real>(path: impl AsRef<Path>) -> Result<Field<T>, FieldError> {
    let f = std::fs::File::open(path)?;
    read(std::io::BufReader::new(f))
}

fn read_array<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N], FieldError> {
    let mut b = [0u8; N];
    r.read_exact(&mut b)
        .map_err(|e| FieldError::Format(format!("truncated header: {e}")))?;
    Ok(b)
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32, FieldError> {
    Ok(u32::from_le_bytes(read_array(r)?))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64, FieldError> {
    Ok(u64::from_le_bytes(read_array(r)?))
}
