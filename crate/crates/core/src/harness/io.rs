//! Diagnostics CSV and binary field snapshots.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::dynamics::{Functionals, State};
use crate::error::{Error, Result};
use crate::harness::norms::StateErrors;
use crate::spectral::{Grid2D, RealField};

pub const DIAGNOSTICS_HEADER: &str =
    "t,H,mean_zeta,mean_v1,mean_v2,err_l2_zeta,err_l2_v1,err_linf_zeta,err_linf_v1,iters";

pub const SNAPSHOT_MAGIC: &[u8; 8] = b"BBWAVE01";

/// One observer tick of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub hamiltonian: f64,
    pub means: [f64; 3],
    /// Errors against the exact solution, when one exists.
    pub errors: Option<StateErrors>,
    /// Fixed-point iterations of the step that produced this state.
    pub iters: usize,
}

impl DiagnosticsRecord {
    pub fn new(t: f64, f: &Functionals, errors: Option<StateErrors>, iters: usize) -> Self {
        Self {
            t,
            hamiltonian: f.hamiltonian,
            means: [f.mean_zeta, f.mean_v1, f.mean_v2],
            errors,
            iters,
        }
    }

    pub fn csv_line(&self) -> String {
        let errs = match &self.errors {
            Some(e) => format!("{},{},{},{}", e.l2[0], e.l2[1], e.linf[0], e.linf[1]),
            None => ",,,".to_string(),
        };
        format!(
            "{},{},{},{},{},{},{}",
            self.t, self.hamiltonian, self.means[0], self.means[1], self.means[2], errs, self.iters
        )
    }
}

pub fn diagnostics_csv(records: &[DiagnosticsRecord]) -> String {
    let mut s = String::with_capacity(64 * (records.len() + 1));
    s.push_str(DIAGNOSTICS_HEADER);
    s.push('\n');
    for r in records {
        s.push_str(&r.csv_line());
        s.push('\n');
    }
    s
}

pub fn write_diagnostics(path: &Path, records: &[DiagnosticsRecord]) -> Result<()> {
    std::fs::write(path, diagnostics_csv(records))?;
    Ok(())
}

/// Parse a diagnostics file back. Only the `err_l2_*`/`err_linf_*` columns
/// for ζ and v1 are stored, so the v2 entries of `errors` read as zero.
pub fn read_diagnostics(path: &Path) -> Result<Vec<DiagnosticsRecord>> {
    let text = std::fs::read_to_string(path)?;
    let bad = |line: usize, msg: String| Error::Validation(format!("{}:{line}: {msg}", path.display()));
    let mut lines = text.lines();
    if lines.next() != Some(DIAGNOSTICS_HEADER) {
        return Err(bad(1, "unexpected header".into()));
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 10 {
            return Err(bad(i + 2, format!("expected 10 columns, got {}", cols.len())));
        }
        let num = |c: &str| c.parse::<f64>().map_err(|e| bad(i + 2, format!("{c:?}: {e}")));
        let errors = if cols[5..9].iter().all(|c| c.is_empty()) {
            None
        } else {
            Some(StateErrors {
                l2: [num(cols[5])?, num(cols[6])?, 0.0],
                linf: [num(cols[7])?, num(cols[8])?, 0.0],
            })
        };
        out.push(DiagnosticsRecord {
            t: num(cols[0])?,
            hamiltonian: num(cols[1])?,
            means: [num(cols[2])?, num(cols[3])?, num(cols[4])?],
            errors,
            iters: cols[9].parse().map_err(|e| bad(i + 2, format!("iters: {e}")))?,
        });
    }
    Ok(out)
}

pub fn write_snapshot(path: &Path, s: &State) -> Result<()> {
    let g = s.grid();
    let n = u32::try_from(g.n()).map_err(|_| Error::Domain(format!("N = {} does not fit the format", g.n())))?;
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(SNAPSHOT_MAGIC)?;
    w.write_all(&n.to_le_bytes())?;
    w.write_all(&g.half_width().to_le_bytes())?;
    w.write_all(&s.t.to_le_bytes())?;
    for f in s.fields() {
        for v in f.values() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<State> {
    let bad = |message: String| Error::Snapshot {
        path: path.to_path_buf(),
        message,
    };
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(|e| bad(format!("header: {e}")))?;
    if &magic != SNAPSHOT_MAGIC {
        return Err(bad("wrong magic".into()));
    }
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b4).map_err(|e| bad(format!("header: {e}")))?;
    let n = u32::from_le_bytes(b4) as usize;
    r.read_exact(&mut b8).map_err(|e| bad(format!("header: {e}")))?;
    let half_width = f64::from_le_bytes(b8);
    r.read_exact(&mut b8).map_err(|e| bad(format!("header: {e}")))?;
    let t = f64::from_le_bytes(b8);
    let grid = Grid2D::new(half_width, n).map_err(|e| bad(e.to_string()))?;

    let mut block = vec![0u8; 8 * n * n];
    let mut field = || -> Result<RealField> {
        r.read_exact(&mut block).map_err(|e| bad(format!("field data: {e}")))?;
        let values = block
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        RealField::from_values(&grid, values).map_err(|e| bad(e.to_string()))
    };
    let (zeta, v1, v2) = (field()?, field()?, field()?);
    if r.read(&mut b4)? != 0 {
        return Err(bad("trailing bytes".into()));
    }
    State::new(zeta, v1, v2, t)
}
