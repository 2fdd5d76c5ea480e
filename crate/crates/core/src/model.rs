//! Physical parameters, dispersive coefficients and the linear analysis of the
//! two-layer Boussinesq/Boussinesq family.
//!
//! In nondimensional form the systems read
//!
//! ```text
//! (1 - bΔ) ζ_t + r1 ∇·v + λ ∇·(ζ v) + a ∇·Δv        = 0
//! (1 - dΔ) v_t + r2 ∇ζ  + (λ/2) ∇|v|² + c' Δ∇ζ       = 0
//! ```
//!
//! with `c' = (1 - γ) c`. The coefficients `a, b, c, d` are generated from the
//! density ratio `γ`, depth ratio `δ` and the three modelling knobs
//! `α1, α2, β`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Coefficients smaller than this fraction of the largest one are treated as
/// zero when classifying sign patterns. Constructions such as the BBM-BBM
/// knobs cancel the numerator of `a` only up to rounding.
pub const ZERO_TOL: f64 = 1e-14;

pub type Mat3 = [[f64; 3]; 3];

/// Density/depth ratios and the constants derived from them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    pub gamma: f64,
    pub delta: f64,
    pub lambda: f64,
    pub r1: f64,
    pub r2: f64,
}

/// Derive `λ, r1, r2` from the density ratio `γ = ρ1/ρ2` and depth ratio `δ = d1/d2`.
pub fn derive_physical(gamma: f64, delta: f64) -> Result<PhysicalParams> {
    if !(gamma.is_finite() && (0.0..1.0).contains(&gamma)) {
        return Err(Error::Domain(format!(
            "density ratio gamma must satisfy 0 <= gamma < 1, got {gamma}"
        )));
    }
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::Domain(format!(
            "depth ratio delta must be positive, got {delta}"
        )));
    }
    let sum = gamma + delta;
    Ok(PhysicalParams {
        gamma,
        delta,
        lambda: (delta * delta - gamma) / (sum * sum),
        r1: 1.0 / sum,
        r2: 1.0 - gamma,
    })
}

impl PhysicalParams {
    /// Copy with the nonlinearity constant replaced. Only meant for linear
    /// oracles (`λ = 0`); the result no longer satisfies the `λ(γ, δ)` identity.
    pub fn with_lambda(self, lambda: f64) -> Self {
        Self { lambda, ..self }
    }

    /// Long-wave linear speed `sqrt(r1 r2)`.
    pub fn long_wave_speed(&self) -> f64 {
        (self.r1 * self.r2).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModellingKnobs {
    pub alpha1: f64,
    pub alpha2: f64,
    pub beta: f64,
}

impl ModellingKnobs {
    pub fn new(alpha1: f64, alpha2: f64, beta: f64) -> Result<Self> {
        if !(alpha1.is_finite() && alpha1 >= 0.0) {
            return Err(Error::Domain(format!("alpha1 must be >= 0, got {alpha1}")));
        }
        if !(alpha2.is_finite() && alpha2 <= 1.0) {
            return Err(Error::Domain(format!("alpha2 must be <= 1, got {alpha2}")));
        }
        if !(beta.is_finite() && beta >= 0.0) {
            return Err(Error::Domain(format!("beta must be >= 0, got {beta}")));
        }
        Ok(Self {
            alpha1,
            alpha2,
            beta,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelCoeffs {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub c_prime: f64,
}

impl ModelCoeffs {
    /// Coefficients given directly rather than through the knobs.
    pub fn explicit(a: f64, b: f64, c: f64, d: f64, p: &PhysicalParams) -> Self {
        Self {
            a,
            b,
            c,
            d,
            c_prime: (1.0 - p.gamma) * c,
        }
    }

    /// `a, c <= 0` and `b, d >= 0`.
    pub fn linearly_well_posed(&self) -> bool {
        classify(self) != SystemClass::Unsupported
    }
}

pub fn derive_coeffs(knobs: &ModellingKnobs, p: &PhysicalParams) -> ModelCoeffs {
    let ModellingKnobs {
        alpha1,
        alpha2,
        beta,
    } = *knobs;
    let (g, dl) = (p.gamma, p.delta);
    let sum = g + dl;
    let a = ((1.0 - alpha1) * (1.0 + g * dl) - 3.0 * dl * beta * sum) / (3.0 * dl * sum * sum);
    let b = alpha1 * ((1.0 + g * dl) / (3.0 * dl * sum));
    let c = beta * alpha2;
    let d = beta * (1.0 - alpha2);
    ModelCoeffs {
        a,
        b,
        c,
        d,
        c_prime: (1.0 - g) * c,
    }
}

/// Knobs giving the BBM-BBM member `a = c = 0, b = d > 0`.
///
/// `β` is formed as `0.5 * (1+γδ)/(3δ(γ+δ))`, the same arithmetic path that
/// `derive_coeffs` uses for `b`, so `b == d` holds bit for bit.
pub fn bbm_bbm_knobs(p: &PhysicalParams) -> ModellingKnobs {
    let (g, dl) = (p.gamma, p.delta);
    let alpha1 = 0.5;
    ModellingKnobs {
        alpha1,
        alpha2: 0.0,
        beta: alpha1 * ((1.0 + g * dl) / (3.0 * dl * (g + dl))),
    }
}

/// Sign-pattern taxonomy of `(a, b, c, d)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SystemClass {
    /// `b, d > 0, a = c = 0` (BBM-BBM)
    C1,
    /// `b, d > 0, a, c < 0`
    C2,
    /// `b, d > 0, a = 0, c < 0` (Bona-Smith type)
    C3,
    /// `b, d > 0, a < 0, c = 0`
    C4,
    /// `b = 0, d > 0, a, c < 0`
    C5,
    /// `b = 0, d > 0, a < 0, c = 0`
    C6,
    /// `b > 0, d = 0, a = c = 0`
    C7,
    /// `b = 0, d > 0, a = c = 0`
    C8,
    OtherAdmissible,
    Unsupported,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Sign {
    Neg,
    Zero,
    Pos,
}

fn sign(x: f64, scale: f64) -> Sign {
    if x.abs() <= ZERO_TOL * scale {
        Sign::Zero
    } else if x > 0.0 {
        Sign::Pos
    } else {
        Sign::Neg
    }
}

pub fn classify(coeffs: &ModelCoeffs) -> SystemClass {
    use Sign::*;
    use SystemClass::*;
    if coeffs.a.is_nan() || coeffs.b.is_nan() || coeffs.c.is_nan() || coeffs.d.is_nan() {
        return Unsupported;
    }
    let scale = [coeffs.a, coeffs.b, coeffs.c, coeffs.d]
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let (a, b, c, d) = (
        sign(coeffs.a, scale),
        sign(coeffs.b, scale),
        sign(coeffs.c, scale),
        sign(coeffs.d, scale),
    );
    if a == Pos || c == Pos || b == Neg || d == Neg {
        return Unsupported;
    }
    match (a, b, c, d) {
        (Zero, Pos, Zero, Pos) => C1,
        (Neg, Pos, Neg, Pos) => C2,
        (Zero, Pos, Neg, Pos) => C3,
        (Neg, Pos, Zero, Pos) => C4,
        (Neg, Zero, Neg, Pos) => C5,
        (Neg, Zero, Zero, Pos) => C6,
        (Zero, Pos, Zero, Zero) => C7,
        (Zero, Zero, Zero, Pos) => C8,
        _ => OtherAdmissible,
    }
}

/// A physical parameter set together with the coefficients it drives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Model {
    pub phys: PhysicalParams,
    pub coeffs: ModelCoeffs,
}

impl Model {
    pub fn new(phys: PhysicalParams, coeffs: ModelCoeffs) -> Self {
        Self { phys, coeffs }
    }

    pub fn from_knobs(phys: PhysicalParams, knobs: &ModellingKnobs) -> Self {
        Self::new(phys, derive_coeffs(knobs, &phys))
    }

    pub fn bbm_bbm(gamma: f64, delta: f64) -> Result<Self> {
        let phys = derive_physical(gamma, delta)?;
        Ok(Self::from_knobs(phys, &bbm_bbm_knobs(&phys)))
    }

    pub fn class(&self) -> SystemClass {
        classify(&self.coeffs)
    }
}

/// Integer wavevector on a box of half-width `L` with its physical
/// counterpart `k̃ = (π/L) k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wavevector {
    pub k: [i64; 2],
    pub ktilde: [f64; 2],
}

impl Wavevector {
    pub fn on_box(k: [i64; 2], half_width: f64) -> Self {
        let s = PI / half_width;
        Self {
            k,
            ktilde: [s * k[0] as f64, s * k[1] as f64],
        }
    }

    pub fn norm_sq(&self) -> f64 {
        self.ktilde[0] * self.ktilde[0] + self.ktilde[1] * self.ktilde[1]
    }
}

/// Linear frequency `ω(k̃) = |k̃| α(k̃)` of the dispersion relation.
pub fn dispersion_omega(coeffs: &ModelCoeffs, p: &PhysicalParams, ktilde: [f64; 2]) -> Result<f64> {
    let k2 = ktilde[0] * ktilde[0] + ktilde[1] * ktilde[1];
    if k2 == 0.0 {
        return Ok(0.0);
    }
    let radicand = (p.r1 - coeffs.a * k2) * (p.r2 - coeffs.c_prime * k2)
        / ((1.0 + coeffs.b * k2) * (1.0 + coeffs.d * k2));
    if !(radicand >= 0.0) {
        return Err(Error::Analysis(format!(
            "negative dispersion radicand {radicand:e} at |k|^2 = {k2}"
        )));
    }
    Ok(k2.sqrt() * radicand.sqrt())
}

/// The 3×3 linear symbol `𝒜(k̃)` such that the linearized modal system is
/// `d/dt (ζ̂, v̂1, v̂2) = -i |k̃| 𝒜(k̃) (ζ̂, v̂1, v̂2)`.
pub fn symbol_matrix(coeffs: &ModelCoeffs, p: &PhysicalParams, ktilde: [f64; 2]) -> Result<Mat3> {
    let k2 = ktilde[0] * ktilde[0] + ktilde[1] * ktilde[1];
    if k2 == 0.0 {
        return Err(Error::Domain("symbol undefined at k = 0".into()));
    }
    let kn = k2.sqrt();
    let (ex, ey) = (ktilde[0] / kn, ktilde[1] / kn);
    let upper = (p.r1 - coeffs.a * k2) / (1.0 + coeffs.b * k2);
    let lower = (p.r2 - coeffs.c_prime * k2) / (1.0 + coeffs.d * k2);
    Ok([
        [0.0, ex * upper, ey * upper],
        [ex * lower, 0.0, 0.0],
        [ey * lower, 0.0, 0.0],
    ])
}

/// Per-mode diagonalization data of the linear symbol.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearModeData {
    pub k: [i64; 2],
    pub ktilde: [f64; 2],
    pub sigma: f64,
    pub alpha_k: f64,
    /// Columns are the eigenvectors for `0, +σ, -σ`.
    pub p: Mat3,
    pub symbol: Mat3,
}

impl LinearModeData {
    /// Closed-form inverse of `P`.
    pub fn p_inverse(&self) -> Mat3 {
        let kn = (self.ktilde[0].powi(2) + self.ktilde[1].powi(2)).sqrt();
        let (ex, ey) = (self.ktilde[0] / kn, self.ktilde[1] / kn);
        let h = 0.5 / self.alpha_k;
        [
            [0.0, -ey, ex],
            [h, 0.5 * ex, 0.5 * ey],
            [-h, 0.5 * ex, 0.5 * ey],
        ]
    }
}

pub fn eigen_basis(coeffs: &ModelCoeffs, p: &PhysicalParams, wave: Wavevector) -> Result<LinearModeData> {
    let k2 = wave.norm_sq();
    if wave.k == [0, 0] || k2 == 0.0 {
        return Err(Error::Domain("eigen basis undefined at k = 0".into()));
    }
    let kn = k2.sqrt();
    let (ex, ey) = (wave.ktilde[0] / kn, wave.ktilde[1] / kn);

    let a_prime = (p.gamma + p.delta) * coeffs.a;
    let num = (1.0 - a_prime * k2) * (1.0 + coeffs.d * k2);
    let den = (1.0 + coeffs.b * k2) * (1.0 - coeffs.c * k2);
    let ratio = (p.r1 / p.r2) * num / den;
    if !(ratio.is_finite() && ratio > 0.0) {
        return Err(Error::Analysis(format!(
            "degenerate diagonalization ratio {ratio:e} at k = {:?}",
            wave.k
        )));
    }
    let alpha_k = ratio.sqrt();

    let sig2 = (p.r1 - coeffs.a * k2) * (p.r2 - coeffs.c_prime * k2)
        / ((1.0 + coeffs.b * k2) * (1.0 + coeffs.d * k2));
    if !(sig2 >= 0.0) {
        return Err(Error::Analysis(format!(
            "negative eigenvalue radicand {sig2:e} at k = {:?}",
            wave.k
        )));
    }

    Ok(LinearModeData {
        k: wave.k,
        ktilde: wave.ktilde,
        sigma: sig2.sqrt(),
        alpha_k,
        p: [[0.0, alpha_k, -alpha_k], [-ey, ex, ex], [ex, ey, ey]],
        symbol: symbol_matrix(coeffs, p, wave.ktilde)?,
    })
}
