//! On-disk formats: wavefield checkpoints, density snapshots and the
//! `P(z, t)` table.
//!
//! Binary files are little-endian and start with an 8-byte magic followed by
//! a grid descriptor:
//!
//! ```text
//! magic        [u8; 8]   b"KSCHK001" (checkpoint) or b"KSDEN001" (density)
//! system       u32       0 cylindrical_rz, 1 cartesian_2e, 2 cartesian_1d
//! axis_count   u32
//! per axis:    u64 n_points, f64 spacing, f64 origin_offset,
//!              u32 stagger (0/1), u32 boundary (0 periodic, 1 odd)
//! time         f64
//! ```
//!
//! A checkpoint continues with `u32 representation` (0 psi, 1 u), `u32`
//! padding, `u64 plan_hash`, then `(re, im)` doubles in row-major
//! `(outer, inner)` order. A density snapshot continues with `u64 count` and
//! that many doubles `|amplitude|^2` in the same order (per node measure,
//! so the sum times the volume element is the norm).

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Axis, Boundary, CoordinateSystem, Grid};
use crate::wavefield::{DensityTrace, Representation, WaveField};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"KSCHK001";
pub const DENSITY_MAGIC: &[u8; 8] = b"KSDEN001";

/// Restartable state read back from a checkpoint.
#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub field: WaveField,
    pub time: f64,
    pub plan_hash: u64,
}

/// Density `|amplitude|^2` on a grid at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct DensitySnapshot {
    pub grid: Arc<Grid>,
    pub time: f64,
    pub density: Array2<f64>,
}

impl DensitySnapshot {
    pub fn of(field: &WaveField, time: f64) -> Self {
        DensitySnapshot {
            grid: field.grid().clone(),
            time,
            density: field.amplitudes().mapv(|v| v.norm_sqr()),
        }
    }
}

pub fn write_checkpoint(path: &Path, field: &WaveField, time: f64, plan_hash: u64) -> Result<()> {
    let mut out = create(path)?;
    let mut buf = Vec::with_capacity(64 + 16 * field.grid().len());
    buf.extend_from_slice(CHECKPOINT_MAGIC);
    put_grid(&mut buf, field.grid());
    buf.extend_from_slice(&time.to_le_bytes());
    let rep: u32 = match field.representation() {
        Representation::Psi => 0,
        Representation::UScaled => 1,
    };
    buf.extend_from_slice(&rep.to_le_bytes());
    buf.extend_from_slice(&0u32.to_le_bytes());
    buf.extend_from_slice(&plan_hash.to_le_bytes());
    for v in field.amplitudes().iter() {
        buf.extend_from_slice(&v.re.to_le_bytes());
        buf.extend_from_slice(&v.im.to_le_bytes());
    }
    out.write_all(&buf).map_err(|e| Error::io(path, e))?;
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint> {
    let bytes = read_all(path)?;
    let mut r = Reader::new(path, &bytes);
    r.magic(CHECKPOINT_MAGIC)?;
    let grid = Arc::new(r.grid()?);
    let time = r.f64()?;
    let rep = r.u32()?;
    let _pad = r.u32()?;
    let plan_hash = r.u64()?;
    let expected = match (grid.system(), rep) {
        (CoordinateSystem::CylindricalRz, 1) | (CoordinateSystem::Cartesian2e, 0) => true,
        (CoordinateSystem::Cartesian1d, 0) => true,
        _ => false,
    };
    if !expected {
        return Err(r.error(format!("representation {rep} does not fit the grid")));
    }
    let n = grid.len();
    let mut values = Vec::with_capacity(n);
    for _ in 0..n {
        let re = r.f64()?;
        let im = r.f64()?;
        values.push(Complex64::new(re, im));
    }
    r.finish()?;
    let amplitudes =
        Array2::from_shape_vec(grid.shape(), values).map_err(|e| r.error(e.to_string()))?;
    Ok(Checkpoint {
        field: WaveField::new(grid, amplitudes)?,
        time,
        plan_hash,
    })
}

pub fn write_density_snapshot(path: &Path, snapshot: &DensitySnapshot) -> Result<()> {
    let mut out = create(path)?;
    let mut buf = Vec::with_capacity(64 + 8 * snapshot.density.len());
    buf.extend_from_slice(DENSITY_MAGIC);
    put_grid(&mut buf, &snapshot.grid);
    buf.extend_from_slice(&snapshot.time.to_le_bytes());
    buf.extend_from_slice(&(snapshot.density.len() as u64).to_le_bytes());
    for v in snapshot.density.iter() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    out.write_all(&buf).map_err(|e| Error::io(path, e))?;
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn read_density_snapshot(path: &Path) -> Result<DensitySnapshot> {
    let bytes = read_all(path)?;
    let mut r = Reader::new(path, &bytes);
    r.magic(DENSITY_MAGIC)?;
    let grid = Arc::new(r.grid()?);
    let time = r.f64()?;
    let count = r.u64()? as usize;
    if count != grid.len() {
        return Err(r.error(format!("{count} values for a {}-node grid", grid.len())));
    }
    let mut values = Vec::with_capacity(count);
    for _ in 0..count {
        values.push(r.f64()?);
    }
    r.finish()?;
    let density =
        Array2::from_shape_vec(grid.shape(), values).map_err(|e| r.error(e.to_string()))?;
    Ok(DensitySnapshot {
        grid,
        time,
        density,
    })
}

/// Long-format `P(z, t)` table: `t_au,z_au,density,alpha_au`.
pub fn write_density_csv(path: &Path, trace: &DensityTrace) -> Result<()> {
    let mut out = create(path)?;
    let mut write = || -> std::io::Result<()> {
        writeln!(out, "t_au,z_au,density,alpha_au")?;
        for (row, (t, alpha)) in trace.times.iter().zip(&trace.alpha_overlay).enumerate() {
            for (z, p) in trace.z_axis.iter().zip(trace.density.row(row)) {
                writeln!(out, "{t:.10e},{z:.10e},{p:.17e},{alpha:.17e}")?;
            }
        }
        out.flush()
    };
    write().map_err(|e| Error::io(path, e))
}

pub fn read_density_csv(path: &Path) -> Result<DensityTrace> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let format = |reason: String| Error::Format {
        path: path.display().to_string(),
        reason,
    };
    let mut lines = BufReader::new(file).lines();
    match lines.next() {
        Some(Ok(h)) if h == "t_au,z_au,density,alpha_au" => {}
        _ => return Err(format("missing P(z,t) header".into())),
    }
    let mut times: Vec<f64> = Vec::new();
    let mut alpha: Vec<f64> = Vec::new();
    let mut z_axis: Vec<f64> = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    for (number, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let fields: Vec<f64> = line
            .split(',')
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| format(format!("line {}: {e}", number + 2)))?;
        let [t, z, p, a] = fields[..] else {
            return Err(format(format!("line {}: expected 4 fields", number + 2)));
        };
        if times.last() != Some(&t) {
            times.push(t);
            alpha.push(a);
        }
        if times.len() == 1 {
            z_axis.push(z);
        }
        values.push(p);
    }
    if z_axis.is_empty() || values.len() != times.len() * z_axis.len() {
        return Err(format("ragged P(z,t) table".into()));
    }
    let density = Array2::from_shape_vec((times.len(), z_axis.len()), values)
        .map_err(|e| format(e.to_string()))?;
    Ok(DensityTrace {
        times,
        z_axis,
        density,
        alpha_overlay: alpha,
    })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn read_all(path: &Path) -> Result<Vec<u8>> {
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    Ok(bytes)
}

fn put_grid(buf: &mut Vec<u8>, grid: &Grid) {
    buf.extend_from_slice(&grid.system().code().to_le_bytes());
    buf.extend_from_slice(&(grid.axes().len() as u32).to_le_bytes());
    for axis in grid.axes() {
        buf.extend_from_slice(&(axis.n_points as u64).to_le_bytes());
        buf.extend_from_slice(&axis.spacing.to_le_bytes());
        buf.extend_from_slice(&axis.origin_offset.to_le_bytes());
        buf.extend_from_slice(&u32::from(axis.stagger).to_le_bytes());
        let boundary: u32 = match axis.boundary {
            Boundary::Periodic => 0,
            Boundary::Odd => 1,
        };
        buf.extend_from_slice(&boundary.to_le_bytes());
    }
}

struct Reader<'a> {
    path: &'a Path,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(path: &'a Path, bytes: &'a [u8]) -> Self {
        Reader {
            path,
            bytes,
            pos: 0,
        }
    }

    fn error(&self, reason: String) -> Error {
        Error::Format {
            path: self.path.display().to_string(),
            reason,
        }
    }

    fn take<const N: usize>(&mut self) -> Result<[u8; N]> {
        let end = self.pos + N;
        let slice = self
            .bytes
            .get(self.pos..end)
            .ok_or_else(|| self.error(format!("truncated at byte {}", self.pos)))?;
        self.pos = end;
        Ok(slice.try_into().expect("slice length is N"))
    }

    fn magic(&mut self, expected: &[u8; 8]) -> Result<()> {
        let found = self.take::<8>()?;
        if &found != expected {
            return Err(self.error(format!(
                "bad magic {:?}, expected {:?}",
                String::from_utf8_lossy(&found),
                String::from_utf8_lossy(expected)
            )));
        }
        Ok(())
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take()?))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take()?))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take()?))
    }

    fn grid(&mut self) -> Result<Grid> {
        let code = self.u32()?;
        let system = CoordinateSystem::from_code(code)
            .ok_or_else(|| self.error(format!("unknown coordinate system {code}")))?;
        let count = self.u32()?;
        if count == 0 || count > 2 {
            return Err(self.error(format!("{count} axes")));
        }
        let mut axes = Vec::with_capacity(count as usize);
        for _ in 0..count {
            let n_points = self.u64()? as usize;
            let spacing = self.f64()?;
            let origin_offset = self.f64()?;
            let stagger = self.u32()? != 0;
            let boundary = match self.u32()? {
                0 => Boundary::Periodic,
                1 => Boundary::Odd,
                other => return Err(self.error(format!("unknown boundary {other}"))),
            };
            axes.push(Axis {
                n_points,
                spacing,
                origin_offset,
                stagger,
                boundary,
            });
        }
        Grid::new(system, axes)
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(self.error(format!("{} trailing bytes", self.bytes.len() - self.pos)));
        }
        Ok(())
    }
}
