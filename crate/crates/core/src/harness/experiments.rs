//! Single runs, step and grid sweeps, and the solitary-wave convergence
//! table.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::dynamics::State;
use crate::error::{Error, Result};
use crate::harness::config::{InitialCondition, Prepared, RunConfig};
use crate::harness::io::{diagnostics_csv, write_snapshot, DiagnosticsRecord};
use crate::harness::norms::{algebraic_orders, convergence_rates, cross_section_y0, error_norms, StateErrors};
use crate::timestepper::Integrator;

/// Extent of `|H(t) - H(0)|` over the observed ticks.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HamiltonianDrift {
    pub max: f64,
    pub last: f64,
    pub max_first_half: f64,
    pub max_second_half: f64,
}

impl HamiltonianDrift {
    pub fn of(records: &[DiagnosticsRecord]) -> Self {
        let Some(first) = records.first() else {
            return Self::default();
        };
        let (t0, h0) = (first.t, first.hamiltonian);
        let t_mid = 0.5 * (t0 + records.last().map_or(t0, |r| r.t));
        let mut d = Self::default();
        for r in records {
            let e = (r.hamiltonian - h0).abs();
            d.max = d.max.max(e);
            if r.t <= t_mid {
                d.max_first_half = d.max_first_half.max(e);
            } else {
                d.max_second_half = d.max_second_half.max(e);
            }
            d.last = e;
        }
        d
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub records: Vec<DiagnosticsRecord>,
    pub final_state: State,
    /// States at the requested snapshot times, in time order.
    pub snapshots: Vec<State>,
    /// Errors of the final state against the exact solution, if there is one.
    pub final_errors: Option<StateErrors>,
}

impl RunOutput {
    pub fn drift(&self) -> HamiltonianDrift {
        HamiltonianDrift::of(&self.records)
    }

    /// Largest departure of any field mean from its initial value.
    pub fn mean_drift(&self) -> f64 {
        let Some(first) = self.records.first() else {
            return 0.0;
        };
        self.records
            .iter()
            .flat_map(|r| (0..3).map(move |f| (r.means[f] - first.means[f]).abs()))
            .fold(0.0, f64::max)
    }

    pub fn total_iterations(&self) -> usize {
        self.records.iter().map(|r| r.iters).sum()
    }
}

/// Integrate one configuration in memory.
pub fn run(cfg: &RunConfig) -> Result<RunOutput> {
    let prep = cfg.prepare()?;
    run_prepared(&prep, cfg.dealias, cfg.stride)
}

pub fn run_prepared(prep: &Prepared, dealias: bool, stride: usize) -> Result<RunOutput> {
    let stride = stride.max(1);
    let mut integ = Integrator::new(&prep.grid, prep.model, prep.imr, dealias)?;
    let duration = prep.steps as f64 * prep.imr.dt;
    let snap_steps = &prep.snapshot_steps;
    let mut records = Vec::new();
    let mut snapshots = Vec::with_capacity(snap_steps.len());
    let mut failure = None;
    let final_state = integ.run_selected(
        &prep.initial,
        duration,
        |m| m % stride == 0 || snap_steps.binary_search(&m).is_ok(),
        |tick| {
            if snap_steps.binary_search(&tick.step).is_ok() {
                snapshots.push(tick.state.clone());
            }
            if tick.step % stride != 0 && tick.step != prep.steps {
                return;
            }
            let errors = match prep.reference(tick.t).map(|r| error_norms(tick.state, &r)) {
                Some(Ok(e)) => Some(e),
                Some(Err(e)) => {
                    failure.get_or_insert(e);
                    None
                }
                None => None,
            };
            let iters = tick.report.map_or(0, |r| r.iterations);
            records.push(DiagnosticsRecord::new(tick.t, &tick.functionals, errors, iters));
        },
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    let final_errors = records.last().and_then(|r| r.errors);
    Ok(RunOutput {
        records,
        final_state,
        snapshots,
        final_errors,
    })
}

/// Files written by [`run_to_dir`].
#[derive(Debug, Clone)]
pub struct RunFiles {
    pub diagnostics: PathBuf,
    pub snapshots: Vec<PathBuf>,
    pub sections: Vec<PathBuf>,
}

/// Run and write `config.txt`, `diagnostics.csv`, one `snapshot_<step>.bin`
/// and one `section_y0_<step>.csv` per snapshot time.
pub fn run_to_dir(cfg: &RunConfig, out: &Path) -> Result<(RunOutput, RunFiles)> {
    let prep = cfg.prepare()?;
    std::fs::create_dir_all(out)?;
    std::fs::write(out.join("config.txt"), cfg.to_text())?;
    let output = run_prepared(&prep, cfg.dealias, cfg.stride)?;
    let diagnostics = out.join("diagnostics.csv");
    std::fs::write(&diagnostics, diagnostics_csv(&output.records))?;
    let mut files = RunFiles {
        diagnostics,
        snapshots: Vec::new(),
        sections: Vec::new(),
    };
    for (s, step) in output.snapshots.iter().zip(&prep.snapshot_steps) {
        let snap = out.join(format!("snapshot_{step:07}.bin"));
        write_snapshot(&snap, s)?;
        let section = out.join(format!("section_y0_{step:07}.csv"));
        let mut text = String::from("x,zeta\n");
        for (x, z) in cross_section_y0(s) {
            let _ = writeln!(text, "{x},{z}");
        }
        std::fs::write(&section, text)?;
        files.snapshots.push(snap);
        files.sections.push(section);
    }
    Ok((output, files))
}

/// Summary of one sweep cell that finished.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellResult {
    pub errors: StateErrors,
    pub drift: HamiltonianDrift,
    pub mean_drift: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub dt: f64,
    pub n: usize,
    /// `Err` holds the message of a cell that aborted, e.g. on non-convergence.
    pub outcome: std::result::Result<CellResult, String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKind {
    TimeStep,
    GridSize,
}

/// Which of the four tabulated error columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Column {
    ZetaL2,
    V1L2,
    ZetaLinf,
    V1Linf,
}

impl Column {
    pub const ALL: [Column; 4] = [Column::ZetaL2, Column::V1L2, Column::ZetaLinf, Column::V1Linf];

    pub fn of(self, e: &StateErrors) -> f64 {
        match self {
            Column::ZetaL2 => e.l2[0],
            Column::V1L2 => e.l2[1],
            Column::ZetaLinf => e.linf[0],
            Column::V1Linf => e.linf[1],
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Column::ZetaL2 => "zeta L2",
            Column::V1L2 => "v1 L2",
            Column::ZetaLinf => "zeta Linf",
            Column::V1Linf => "v1 Linf",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub kind: SweepKind,
    pub cells: Vec<SweepCell>,
    /// Whether errors are against an exact solution rather than a finer run.
    pub exact_reference: bool,
}

impl SweepReport {
    pub fn errors(&self, col: Column) -> Vec<Option<f64>> {
        self.cells
            .iter()
            .map(|c| c.outcome.as_ref().ok().map(|r| col.of(&r.errors)))
            .collect()
    }

    /// Rate between each cell and the previous one; `None` when either cell
    /// failed or an error is not positive. Temporal sweeps give `log₂` of the
    /// error ratio, grid sweeps the algebraic order in `N`.
    pub fn rates(&self, col: Column) -> Vec<Option<f64>> {
        let errs = self.errors(col);
        let mut out = Vec::with_capacity(errs.len().saturating_sub(1));
        for i in 1..errs.len() {
            let pair = match (errs[i - 1], errs[i]) {
                (Some(a), Some(b)) => match self.kind {
                    SweepKind::TimeStep => convergence_rates(&[a, b]).ok().map(|r| r[0]),
                    SweepKind::GridSize => algebraic_orders(&[self.cells[i - 1].n, self.cells[i].n], &[a, b])
                        .ok()
                        .map(|r| r[0]),
                },
                _ => None,
            };
            out.push(pair);
        }
        out
    }

    pub fn failures(&self) -> Vec<(usize, &str)> {
        self.cells
            .iter()
            .enumerate()
            .filter_map(|(i, c)| c.outcome.as_ref().err().map(|e| (i, e.as_str())))
            .collect()
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let head = match self.kind {
            SweepKind::TimeStep => "dt",
            SweepKind::GridSize => "N",
        };
        let _ = write!(s, "{head:>12}");
        for col in Column::ALL {
            let _ = write!(s, " {:>12} {:>6}", col.label(), "rate");
        }
        let _ = writeln!(s, " {:>12}", "max|dH|");
        let rates: Vec<Vec<Option<f64>>> = Column::ALL.iter().map(|c| self.rates(*c)).collect();
        for (i, cell) in self.cells.iter().enumerate() {
            match self.kind {
                SweepKind::TimeStep => {
                    let _ = write!(s, "{:>12.4e}", cell.dt);
                }
                SweepKind::GridSize => {
                    let _ = write!(s, "{:>12}", cell.n);
                }
            }
            match &cell.outcome {
                Ok(r) => {
                    for (c, col) in Column::ALL.iter().enumerate() {
                        let rate = if i == 0 { None } else { rates[c][i - 1] };
                        let rate = rate.map_or(String::new(), |v| format!("{v:.3}"));
                        let _ = write!(s, " {:>12.4e} {:>6}", col.of(&r.errors), rate);
                    }
                    let _ = writeln!(s, " {:>12.4e}", r.drift.max);
                }
                Err(msg) => {
                    let _ = writeln!(s, "  failed: {msg}");
                }
            }
        }
        if !self.exact_reference {
            s.push_str("(errors against a run with half the finest step)\n");
        }
        s
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(
            "dt,N,err_l2_zeta,err_l2_v1,err_linf_zeta,err_linf_v1,rate_l2_zeta,rate_l2_v1,rate_linf_zeta,rate_linf_v1,max_dH,status\n",
        );
        let rates: Vec<Vec<Option<f64>>> = Column::ALL.iter().map(|c| self.rates(*c)).collect();
        for (i, cell) in self.cells.iter().enumerate() {
            let _ = write!(s, "{},{},", cell.dt, cell.n);
            match &cell.outcome {
                Ok(r) => {
                    for col in Column::ALL {
                        let _ = write!(s, "{},", col.of(&r.errors));
                    }
                    for c in 0..4 {
                        let rate = if i == 0 { None } else { rates[c][i - 1] };
                        let _ = write!(s, "{},", rate.map_or(String::new(), |v| v.to_string()));
                    }
                    let _ = writeln!(s, "{},ok", r.drift.max);
                }
                Err(msg) => {
                    let _ = writeln!(s, ",,,,,,,,,\"{}\"", msg.replace('"', "'"));
                }
            }
        }
        s
    }
}

fn sweep_config(base: &RunConfig) -> RunConfig {
    RunConfig {
        snapshots: Vec::new(),
        out: None,
        ..base.clone()
    }
}

fn finish_cell(cfg: &RunConfig, reference: Option<&State>) -> std::result::Result<CellResult, String> {
    let go = || -> Result<CellResult> {
        let out = run(cfg)?;
        let errors = match reference {
            Some(r) => error_norms(&out.final_state, r)?,
            None => out
                .final_errors
                .ok_or_else(|| Error::Validation("cell has no reference solution".into()))?,
        };
        Ok(CellResult {
            errors,
            drift: out.drift(),
            mean_drift: out.mean_drift(),
            iterations: out.total_iterations(),
        })
    };
    go().map_err(|e| e.to_string())
}

/// Repeat `base` with `levels` successive halvings of `dt`, the first cell at
/// `base.dt`. The observer stride doubles with each halving so every cell
/// records at the same times. Without an exact solution the errors are taken
/// against one extra run at half the finest step.
pub fn sweep_dt(base: &RunConfig, levels: usize) -> Result<SweepReport> {
    if levels < 2 {
        return Err(Error::config("levels", "a step sweep needs at least two levels"));
    }
    let base = sweep_config(base);
    base.prepare()?;
    let cell_cfg = |level: usize| RunConfig {
        dt: base.dt / (1u64 << level) as f64,
        stride: base.stride << level,
        ..base.clone()
    };
    let exact = base.prepare()?.reference(base.final_time).is_some();
    let reference = if exact {
        None
    } else {
        Some(run(&cell_cfg(levels))?.final_state)
    };
    let cells = (0..levels)
        .into_par_iter()
        .map(|level| {
            let cfg = cell_cfg(level);
            SweepCell {
                dt: cfg.dt,
                n: cfg.n,
                outcome: finish_cell(&cfg, reference.as_ref()),
            }
        })
        .collect();
    Ok(SweepReport {
        kind: SweepKind::TimeStep,
        cells,
        exact_reference: exact,
    })
}

/// Repeat `base` over grid sizes at its fixed `dt`. Needs an exact solution.
pub fn sweep_n(base: &RunConfig, ns: &[usize]) -> Result<SweepReport> {
    if ns.len() < 2 || ns.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::config("N", "a grid sweep needs at least two increasing sizes"));
    }
    let base = sweep_config(base);
    let cfgs: Vec<RunConfig> = ns
        .iter()
        .map(|&n| RunConfig { n, ..base.clone() })
        .collect();
    for cfg in &cfgs {
        let prep = cfg.prepare()?;
        if prep.reference(cfg.final_time).is_none() {
            return Err(Error::config("ic", "a grid sweep needs an exact solution (ic = solitary or zero)"));
        }
    }
    let cells = cfgs
        .par_iter()
        .map(|cfg| SweepCell {
            dt: cfg.dt,
            n: cfg.n,
            outcome: finish_cell(cfg, None),
        })
        .collect();
    Ok(SweepReport {
        kind: SweepKind::GridSize,
        cells,
        exact_reference: true,
    })
}

/// Step sizes of the convergence table.
pub const TABLE_STEPS: [f64; 4] = [2.5e-2, 1.25e-2, 6.25e-3, 3.125e-3];

/// The solitary-wave convergence setup: γ = 0.5, δ = 0.9, BBM-BBM, wave at
/// 5/2 of the long-wave speed starting at x0 = -10, L = 16, N = 256, T = 5.
pub fn table_config() -> RunConfig {
    RunConfig::default()
}

/// Run the convergence table. Only the solver flags (`dealias`, `tol`,
/// `max_iter`, `stride`) of `flags` are used.
pub fn reproduce_table(flags: &RunConfig) -> Result<SweepReport> {
    let cfg = RunConfig {
        dealias: flags.dealias,
        tol: flags.tol,
        max_iter: flags.max_iter,
        stride: flags.stride,
        dt: TABLE_STEPS[0],
        ..table_config()
    };
    debug_assert!(matches!(cfg.ic, InitialCondition::Solitary { .. }));
    sweep_dt(&cfg, TABLE_STEPS.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::io::{read_diagnostics, read_snapshot};

    fn small_wave() -> RunConfig {
        "L = 8\nN = 64\nT = 0.5\ndt = 0.05\nx0 = 0".parse().unwrap()
    }

    #[test]
    fn zero_run_stays_zero() {
        let cfg: RunConfig = "ic = zero\nN = 16\nL = 4\nT = 0.3\ndt = 0.1\nsnapshots = 0,0.2".parse().unwrap();
        let out = run(&cfg).unwrap();
        assert_eq!(out.records.len(), 4);
        assert!(out.records.iter().all(|r| r.hamiltonian == 0.0 && r.iters <= 1));
        assert_eq!(out.final_errors.unwrap(), StateErrors::default());
        assert_eq!(out.snapshots.len(), 2);
        assert!(out.snapshots.iter().all(|s| s.l2_norm() == 0.0));
        assert_eq!(out.snapshots[1].t, 0.2);
    }

    #[test]
    fn stride_and_snapshots_are_independent() {
        let mut cfg = small_wave();
        cfg.stride = 4;
        cfg.snapshots = vec![0.15, 0.5];
        let out = run(&cfg).unwrap();
        let ts: Vec<f64> = out.records.iter().map(|r| r.t).collect();
        assert_eq!(ts.len(), 4);
        assert!((ts[1] - 0.2).abs() < 1e-15 && (ts[3] - 0.5).abs() < 1e-15);
        assert_eq!(out.snapshots.len(), 2);
        assert!((out.snapshots[0].t - 0.15).abs() < 1e-15);
        assert_eq!(out.snapshots[1].zeta, out.final_state.zeta);
    }

    #[test]
    fn files_on_disk_match_memory() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small_wave();
        cfg.snapshots = vec![0.25];
        let (out, files) = run_to_dir(&cfg, dir.path()).unwrap();
        assert_eq!(read_diagnostics(&files.diagnostics).unwrap().len(), out.records.len());
        let snap = read_snapshot(&files.snapshots[0]).unwrap();
        assert_eq!(snap.zeta, out.snapshots[0].zeta);
        let section = std::fs::read_to_string(&files.sections[0]).unwrap();
        assert_eq!(section.lines().count(), 65);
        let again: RunConfig = std::fs::read_to_string(dir.path().join("config.txt")).unwrap().parse().unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn short_step_sweep_is_second_order() {
        let report = sweep_dt(&small_wave(), 3).unwrap();
        assert!(report.exact_reference);
        for col in Column::ALL {
            for r in report.rates(col) {
                let r = r.unwrap();
                assert!((1.9..=2.1).contains(&r), "{col:?} {r}");
            }
        }
        assert!(report.to_text().lines().count() == 4);
        assert_eq!(report.to_csv().lines().count(), 4);
    }

    #[test]
    fn sweeps_without_exact_solution_use_a_finer_run() {
        let cfg: RunConfig = "ic = gaussian\namplitude = 0.5\nsx = 2\nsy = 3\nL = 8\nN = 32\nT = 0.4\ndt = 0.1"
            .parse()
            .unwrap();
        let report = sweep_dt(&cfg, 3).unwrap();
        assert!(!report.exact_reference);
        let errs = report.errors(Column::ZetaL2);
        assert!(errs.iter().all(|e| e.unwrap() > 0.0));
        assert!(matches!(sweep_n(&cfg, &[16, 32]), Err(Error::Config { .. })));
    }

    #[test]
    fn failed_cells_do_not_abort_the_sweep() {
        let mut cfg = small_wave();
        cfg.max_iter = 9;
        let report = sweep_dt(&cfg, 3).unwrap();
        let failures = report.failures();
        assert!(!failures.is_empty() && failures.len() < 3, "{failures:?}");
        assert!(failures[0].1.contains("did not converge"));
        assert!(report.cells.last().unwrap().outcome.is_ok());
        assert!(report.rates(Column::ZetaL2).iter().any(Option::is_none));
        assert!(report.to_text().contains("failed"));
    }

    #[test]
    fn drift_summary() {
        let rec = |t: f64, h: f64| DiagnosticsRecord {
            t,
            hamiltonian: h,
            means: [0.0; 3],
            errors: None,
            iters: 1,
        };
        let d = HamiltonianDrift::of(&[rec(0.0, 1.0), rec(1.0, 1.5), rec(2.0, 0.9), rec(3.0, 1.1)]);
        assert_eq!(d.max, 0.5);
        assert_eq!(d.max_first_half, 0.5);
        assert!((d.max_second_half - 0.1).abs() < 1e-15);
        assert!((d.last - 0.1).abs() < 1e-15);
    }
}
