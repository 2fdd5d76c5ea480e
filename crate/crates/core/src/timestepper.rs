//! Implicit midpoint rule with a Picard solve of the internal stage:
//!
//! ```text
//! W* = Wⁿ + (Δt/2) f(W*),    Wⁿ⁺¹ = 2W* - Wⁿ
//! ```
//!
//! Everything happens on modal coefficients; physical fields are only formed
//! for the nonlinear products and for observers.

use crate::dynamics::{Functionals, ModalState, SemiDiscrete, State, Workspace};
use crate::error::{Error, Result};
use crate::model::Model;
use crate::spectral::Grid2D;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImrConfig {
    pub dt: f64,
    /// Stopping tolerance on the modal max-norm of successive iterates.
    pub tol: f64,
    pub max_iter: usize,
}

impl ImrConfig {
    pub const DEFAULT_TOL: f64 = 1e-12;
    pub const DEFAULT_MAX_ITER: usize = 100;

    pub fn new(dt: f64) -> Result<Self> {
        Self::with(dt, Self::DEFAULT_TOL, Self::DEFAULT_MAX_ITER)
    }

    pub fn with(dt: f64, tol: f64, max_iter: usize) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::Domain(format!("time step must be positive, got {dt}")));
        }
        if !(tol.is_finite() && tol > 0.0) {
            return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
        }
        if max_iter == 0 {
            return Err(Error::Domain("max_iter must be at least 1".into()));
        }
        Ok(Self { dt, tol, max_iter })
    }

    /// The same configuration stepping backwards in time.
    pub fn reversed(self) -> Self {
        Self {
            dt: -self.dt,
            ..self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    pub iterations: usize,
    pub residual: f64,
    pub accepted: bool,
}

/// What an observer sees at each tick of [`Integrator::run`].
#[derive(Debug)]
pub struct Tick<'a> {
    pub step: usize,
    pub t: f64,
    pub state: &'a State,
    pub functionals: Functionals,
    /// Report of the step that produced this state; `None` at step 0.
    pub report: Option<StepReport>,
}

/// Reusable IMR driver for one grid and coefficient set.
pub struct Integrator {
    sys: SemiDiscrete,
    cfg: ImrConfig,
    ws: Workspace,
    iterate: ModalState,
    next: ModalState,
    deriv: ModalState,
}

impl Integrator {
    pub fn new(grid: &Grid2D, model: Model, cfg: ImrConfig, dealias: bool) -> Result<Self> {
        let sys = SemiDiscrete::new(grid, model, dealias)?;
        let len = grid.len();
        Ok(Self {
            sys,
            cfg,
            ws: Workspace::new(grid),
            iterate: ModalState::zeros(len),
            next: ModalState::zeros(len),
            deriv: ModalState::zeros(len),
        })
    }

    pub fn config(&self) -> &ImrConfig {
        &self.cfg
    }

    pub fn system(&self) -> &SemiDiscrete {
        &self.sys
    }

    /// Advance `w` by one step in place. `step` only labels errors.
    pub fn step_modal(&mut self, w: &mut ModalState, step: usize) -> Result<StepReport> {
        let half = 0.5 * self.cfg.dt;
        for (dst, src) in self.iterate.fields.iter_mut().zip(&w.fields) {
            dst.copy_from_slice(src);
        }
        let mut residual = f64::INFINITY;
        let mut iterations = 0;
        while iterations < self.cfg.max_iter {
            self.sys.eval(&self.iterate, &mut self.deriv, &mut self.ws);
            for f in 0..3 {
                let (base, d, out) = (&w.fields[f], &self.deriv.fields[f], &mut self.next.fields[f]);
                for ((o, b), dv) in out.iter_mut().zip(base).zip(d) {
                    *o = b + dv * half;
                }
            }
            residual = self.next.max_diff(&self.iterate);
            std::mem::swap(&mut self.iterate, &mut self.next);
            iterations += 1;
            if !residual.is_finite() {
                break;
            }
            if residual <= self.cfg.tol {
                for (wf, sf) in w.fields.iter_mut().zip(&self.iterate.fields) {
                    for (x, s) in wf.iter_mut().zip(sf) {
                        *x = 2.0 * s - *x;
                    }
                }
                return Ok(StepReport {
                    iterations,
                    residual,
                    accepted: true,
                });
            }
        }
        Err(Error::NonConvergence {
            step,
            iterations,
            residual,
        })
    }

    pub fn step(&mut self, s: &State) -> Result<(State, StepReport)> {
        self.sys.grid().check_same(s.grid())?;
        let mut w = ModalState::from_state(s);
        let report = self.step_modal(&mut w, 0)?;
        Ok((w.to_state(s.grid(), s.t + self.cfg.dt), report))
    }

    /// Integrate from `s0.t` over a span of `duration` (must be a whole number
    /// of steps, same sign as `dt`). The observer is called at step 0, every
    /// `stride` steps and at the final step.
    pub fn run<F>(&mut self, s0: &State, duration: f64, stride: usize, observer: F) -> Result<State>
    where
        F: FnMut(Tick<'_>),
    {
        let stride = stride.max(1);
        self.run_selected(s0, duration, |m| m % stride == 0, observer)
    }

    /// Like [`Integrator::run`], observing step 0, the final step and every
    /// step `m` with `select(m)`.
    pub fn run_selected<S, F>(&mut self, s0: &State, duration: f64, mut select: S, mut observer: F) -> Result<State>
    where
        S: FnMut(usize) -> bool,
        F: FnMut(Tick<'_>),
    {
        let grid = s0.grid().clone();
        self.sys.grid().check_same(&grid)?;
        let steps = step_count(duration, self.cfg.dt)?;
        let model = *self.sys.model();
        let t0 = s0.t;

        observer(Tick {
            step: 0,
            t: t0,
            state: s0,
            functionals: Functionals::of(s0, &model),
            report: None,
        });
        if steps == 0 {
            return Ok(s0.clone());
        }

        let mut w = ModalState::from_state(s0);
        let mut last = None;
        for m in 1..=steps {
            let report = self.step_modal(&mut w, m)?;
            if m == steps || select(m) {
                let t = t0 + m as f64 * self.cfg.dt;
                let state = w.to_state(&grid, t);
                if !state.is_finite() {
                    return Err(Error::NonConvergence {
                        step: m,
                        iterations: report.iterations,
                        residual: f64::NAN,
                    });
                }
                observer(Tick {
                    step: m,
                    t,
                    state: &state,
                    functionals: Functionals::of(&state, &model),
                    report: Some(report),
                });
                if m == steps {
                    last = Some(state);
                }
            }
        }
        Ok(last.expect("final step is always observed"))
    }
}

/// Number of steps `M` with `M·dt = duration`; rejects non-integral ratios.
pub fn step_count(duration: f64, dt: f64) -> Result<usize> {
    let ratio = duration / dt;
    let m = ratio.round();
    if !ratio.is_finite() || m < 0.0 || (ratio - m).abs() > 1e-9 * m.max(1.0) {
        return Err(Error::Domain(format!(
            "final time {duration} is not a non-negative integer multiple of dt = {dt}"
        )));
    }
    Ok(m as usize)
}

pub fn imr_step(s: &State, cfg: &ImrConfig, model: &Model, dealias: bool) -> Result<(State, StepReport)> {
    Integrator::new(s.grid(), *model, *cfg, dealias)?.step(s)
}

#[allow(clippy::too_many_arguments)]
pub fn integrate<F>(
    s0: &State,
    final_time: f64,
    cfg: &ImrConfig,
    model: &Model,
    dealias: bool,
    stride: usize,
    observer: F,
) -> Result<State>
where
    F: FnMut(Tick<'_>),
{
    Integrator::new(s0.grid(), *model, *cfg, dealias)?.run(s0, final_time - s0.t, stride, observer)
}
