//! Error norms, observed convergence orders and 1D cross-sections.

use crate::dynamics::State;
use crate::error::{Error, Result};
use crate::spectral::RealField;

/// Per-field errors, indexed `[ζ, v1, v2]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StateErrors {
    /// `h · ‖diff‖₂` over the flattened grid.
    pub l2: [f64; 3],
    pub linf: [f64; 3],
}

impl StateErrors {
    pub fn zeta(&self) -> (f64, f64) {
        (self.l2[0], self.linf[0])
    }

    pub fn v1(&self) -> (f64, f64) {
        (self.l2[1], self.linf[1])
    }

    pub fn max_linf(&self) -> f64 {
        self.linf.iter().copied().fold(0.0, f64::max)
    }
}

pub fn field_error(f: &RealField, g: &RealField) -> Result<(f64, f64)> {
    f.grid().check_same(g.grid())?;
    let h = f.grid().spacing();
    let (mut sq, mut worst) = (0.0f64, 0.0f64);
    for (a, b) in f.values().iter().zip(g.values()) {
        let d = a - b;
        sq += d * d;
        worst = worst.max(d.abs());
    }
    Ok((h * sq.sqrt(), worst))
}

pub fn error_norms(s: &State, reference: &State) -> Result<StateErrors> {
    let mut out = StateErrors::default();
    for (i, (f, g)) in s.fields().into_iter().zip(reference.fields()).enumerate() {
        let (l2, linf) = field_error(f, g)?;
        out.l2[i] = l2;
        out.linf[i] = linf;
    }
    Ok(out)
}

/// `log₂(e_i / e_{i+1})` for errors listed by successively halved steps.
pub fn convergence_rates(errors: &[f64]) -> Result<Vec<f64>> {
    if errors.len() < 2 {
        return Err(Error::Domain(format!(
            "need at least two errors for a rate, got {}",
            errors.len()
        )));
    }
    if let Some(bad) = errors.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
        return Err(Error::Domain(format!("errors must be positive and finite, got {bad}")));
    }
    Ok(errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect())
}

/// Observed algebraic orders `log(e_i/e_{i+1}) / log(n_{i+1}/n_i)` for errors
/// on increasingly fine grids.
pub fn algebraic_orders(ns: &[usize], errors: &[f64]) -> Result<Vec<f64>> {
    if ns.len() != errors.len() {
        return Err(Error::Domain(format!(
            "{} grid sizes but {} errors",
            ns.len(),
            errors.len()
        )));
    }
    convergence_rates(errors)?;
    if ns.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("grid sizes must increase".into()));
    }
    Ok(ns
        .windows(2)
        .zip(errors.windows(2))
        .map(|(n, e)| (e[0] / e[1]).ln() / (n[1] as f64 / n[0] as f64).ln())
        .collect())
}

/// `(x_j, ζ(x_j, 0))` along the row `y = 0`, i.e. `l = N/2`.
pub fn cross_section_y0(s: &State) -> Vec<(f64, f64)> {
    let g = s.grid();
    let mid = g.n() / 2;
    (0..g.n()).map(|j| (g.node(j), s.zeta.at(j, mid))).collect()
}
