//! Closed-form solitary waves of the BBM-BBM member and the initial data of
//! the pulse and line-wave experiments.

use crate::dynamics::State;
use crate::error::{Error, Result};
use crate::model::{Model, SystemClass};
use crate::spectral::{Grid2D, RealField};

/// Which root of `c_s²(1 - 4bA²)² = r1 r2` fixes the width.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Branch {
    /// `1 - 4bA² = +sqrt(r1 r2)/|c_s|`: small `A²`, needs `|c_s| > sqrt(r1 r2)`.
    #[default]
    Plus,
    /// `1 - 4bA² = -sqrt(r1 r2)/|c_s|`.
    Minus,
}

/// Profile `ζ = A1 sech²(ξ) + A2 sech⁴(ξ)`, `v1 = B1 sech²(ξ)`, `v2 = 0`
/// with `ξ = A (x - c_s t - x0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolitaryWaveParams {
    pub cs: f64,
    pub x0: f64,
    pub a: f64,
    pub a1: f64,
    pub a2: f64,
    pub b1: f64,
    /// BBM coefficient `b = d` the constants were built for.
    pub b: f64,
    pub r1: f64,
    pub r2: f64,
    pub lambda: f64,
}

impl SolitaryWaveParams {
    pub fn with_offset(self, x0: f64) -> Self {
        Self { x0, ..self }
    }

    /// Relative residuals of the four defining relations, in order: speed,
    /// `B1`, `A2`, `A1`.
    pub fn relation_residuals(&self) -> [f64; 4] {
        let (b, cs, a2w) = (self.b, self.cs, self.a * self.a);
        let rel = |lhs: f64, rhs: f64| (lhs - rhs).abs() / rhs.abs().max(lhs.abs()).max(f64::MIN_POSITIVE);
        let speed = cs * cs * (1.0 - 4.0 * b * a2w).powi(2);
        let b1 = 20.0 * b * cs / self.lambda * a2w;
        let a2 = self.b1 / (2.0 * self.r2) * (12.0 * b * cs * a2w - self.lambda * self.b1);
        let a1 = cs * self.a2 * (1.0 - 16.0 * b * a2w) / (self.lambda * self.b1 - 6.0 * b * cs * a2w);
        [
            rel(speed, self.r1 * self.r2),
            rel(self.b1, b1),
            rel(self.a2, a2),
            rel(self.a1, a1),
        ]
    }

    /// Relative mismatch of the remaining sech² balance of the velocity
    /// equation, `r2 A1 = c_s B1 (1 - 4bA²)`. The profile solves the system
    /// exactly only when this vanishes, i.e. at `c_s = ±(5/2) sqrt(r1 r2)`.
    pub fn closure_defect(&self) -> f64 {
        let lhs = self.r2 * self.a1;
        let rhs = self.cs * self.b1 * (1.0 - 4.0 * self.b * self.a * self.a);
        (lhs - rhs).abs() / lhs.abs().max(rhs.abs())
    }

    /// `(ζ, v1)` of the profile at coordinate `x` and time `t`.
    pub fn profile(&self, x: f64, t: f64) -> (f64, f64) {
        let s = sech2(self.a * (x - self.cs * t - self.x0));
        (self.a1 * s + self.a2 * s * s, self.b1 * s)
    }
}

impl SolitaryWaveParams {
    /// Sum of the profile over its translates by multiples of `period`.
    /// Neighbouring copies overlap only in their exponentially small tails,
    /// so this is a travelling wave of the periodic problem up to rounding
    /// once `A·period` is moderately large.
    pub fn periodic_profile(&self, x: f64, t: f64, period: f64) -> (f64, f64) {
        let shift = x - self.cs * t - self.x0;
        let centred = shift - period * (shift / period).round();
        // sech² drops below 1e-300 past |ξ| = 350
        let reach = (350.0 / (self.a * period)).ceil() as i64 + 1;
        let (mut z, mut v) = (0.0, 0.0);
        for m in -reach..=reach {
            let s = sech2(self.a * (centred + m as f64 * period));
            z += self.a1 * s + self.a2 * s * s;
            v += self.b1 * s;
        }
        (z, v)
    }
}

fn sech2(x: f64) -> f64 {
    let c = x.abs();
    if c > 350.0 {
        return 0.0;
    }
    // sech² x = 4 e^{-2|x|} / (1 + e^{-2|x|})²
    let e = (-2.0 * c).exp();
    4.0 * e / ((1.0 + e) * (1.0 + e))
}

/// The speed at which the four relations produce an exact travelling wave.
pub fn exact_solitary_speed(model: &Model) -> f64 {
    2.5 * model.phys.long_wave_speed()
}

pub fn solitary_constants(cs: f64, model: &Model) -> Result<SolitaryWaveParams> {
    solitary_constants_on(cs, model, Branch::Plus)
}

pub fn solitary_constants_on(cs: f64, model: &Model, branch: Branch) -> Result<SolitaryWaveParams> {
    let Model { phys, coeffs } = *model;
    if model.class() != SystemClass::C1 || coeffs.b != coeffs.d {
        return Err(Error::NoSolitaryWave(format!(
            "closed-form waves need the BBM-BBM class (b = d > 0, a = c = 0), got {:?}",
            model.class()
        )));
    }
    if !cs.is_finite() || cs == 0.0 {
        return Err(Error::NoSolitaryWave(format!("speed must be nonzero, got {cs}")));
    }
    if phys.lambda == 0.0 {
        return Err(Error::NoSolitaryWave(
            "lambda = 0 leaves the amplitudes undetermined".into(),
        ));
    }
    let b = coeffs.b;
    let c0 = phys.long_wave_speed();
    let ratio = match branch {
        Branch::Plus => c0 / cs.abs(),
        Branch::Minus => -c0 / cs.abs(),
    };
    let a_sq = (1.0 - ratio) / (4.0 * b);
    if !(a_sq > 0.0) {
        return Err(Error::NoSolitaryWave(format!(
            "|c_s| = {} is not supercritical (sqrt(r1 r2) = {c0})",
            cs.abs()
        )));
    }
    let b1 = 20.0 * b * cs / phys.lambda * a_sq;
    let a2 = b1 / (2.0 * phys.r2) * (12.0 * b * cs * a_sq - phys.lambda * b1);
    let a1 = cs * a2 * (1.0 - 16.0 * b * a_sq) / (phys.lambda * b1 - 6.0 * b * cs * a_sq);
    Ok(SolitaryWaveParams {
        cs,
        x0: 0.0,
        a: a_sq.sqrt(),
        a1,
        a2,
        b1,
        b,
        r1: phys.r1,
        r2: phys.r2,
        lambda: phys.lambda,
    })
}

pub fn solitary_state(params: &SolitaryWaveParams, t: f64, grid: &Grid2D) -> State {
    line_state(grid, t, |x| params.profile(x, t))
}

/// The `2L`-periodic extension of the wave, sampled on `grid`.
pub fn periodic_solitary_state(params: &SolitaryWaveParams, t: f64, grid: &Grid2D) -> State {
    let period = 2.0 * grid.half_width();
    line_state(grid, t, |x| params.periodic_profile(x, t, period))
}

fn line_state(grid: &Grid2D, t: f64, profile: impl Fn(f64) -> (f64, f64)) -> State {
    let n = grid.n();
    let mut zeta = Vec::with_capacity(grid.len());
    let mut v1 = Vec::with_capacity(grid.len());
    for x in grid.nodes() {
        let (z, v) = profile(x);
        zeta.extend(std::iter::repeat_n(z, n));
        v1.extend(std::iter::repeat_n(v, n));
    }
    State {
        zeta: RealField::from_values_unchecked(grid, zeta),
        v1: RealField::from_values_unchecked(grid, v1),
        v2: RealField::zeros(grid),
        t,
    }
}

/// `ζ = amplitude · exp(-(x²/sx + y²/sy))`, zero velocity.
pub fn gaussian_ic(amplitude: f64, sx: f64, sy: f64, grid: &Grid2D) -> Result<State> {
    if !(sx > 0.0 && sy > 0.0) {
        return Err(Error::Domain(format!(
            "Gaussian widths must be positive, got ({sx}, {sy})"
        )));
    }
    let zeta = RealField::from_fn(grid, |x, y| amplitude * (-(x * x / sx + y * y / sy)).exp());
    Ok(State {
        zeta,
        v1: RealField::zeros(grid),
        v2: RealField::zeros(grid),
        t: 0.0,
    })
}

/// `ζ = (1 + eps cos(πy/2)) exp(-(x - x0)²/B)`, zero velocity.
///
/// The transverse period is 4 whatever the box, so a nonzero `eps` requires
/// `2L` to be a multiple of 4.
pub fn perturbed_line_ic(eps: f64, width: f64, x0: f64, grid: &Grid2D) -> Result<State> {
    if !(width > 0.0) {
        return Err(Error::Domain(format!("B must be positive, got {width}")));
    }
    let periods = 2.0 * grid.half_width() / 4.0;
    if eps != 0.0 && (periods - periods.round()).abs() > 1e-12 {
        return Err(Error::Domain(format!(
            "cos(pi y / 2) is not periodic on a box of width {}",
            2.0 * grid.half_width()
        )));
    }
    let zeta = RealField::from_fn(grid, |x, y| {
        (1.0 + eps * (std::f64::consts::FRAC_PI_2 * y).cos()) * (-(x - x0).powi(2) / width).exp()
    });
    Ok(State {
        zeta,
        v1: RealField::zeros(grid),
        v2: RealField::zeros(grid),
        t: 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{means, rhs, symmetry_defect};
    use crate::spectral::{partial_x, translate};
    use proptest::prelude::*;

    fn experiment_model() -> Model {
        Model::bbm_bbm(0.5, 0.9).unwrap()
    }

    #[test]
    fn table_speed_constants() {
        let m = experiment_model();
        let p = solitary_constants(2.5, &m).unwrap();
        let expected_a_sq = (1.0 - 0.597_614_304_667_196_8 / 2.5) / (4.0 * m.coeffs.b);
        assert!((p.a * p.a - expected_a_sq).abs() < 1e-12);
        assert!(p.relation_residuals().iter().all(|r| *r <= 1e-12));
        // Not a travelling wave at this speed.
        assert!(p.closure_defect() > 0.5);
    }

    #[test]
    fn exact_speed_closes_the_system() {
        let m = experiment_model();
        let cs = exact_solitary_speed(&m);
        assert!((cs - 1.494_035_761_667_992).abs() < 1e-14);
        let p = solitary_constants(cs, &m).unwrap();
        assert!(p.closure_defect() < 1e-13);
        assert!((m.coeffs.b * p.a * p.a - 0.15).abs() < 1e-15);
    }

    #[test]
    fn critical_and_subcritical_speeds_rejected() {
        let m = experiment_model();
        let c0 = m.phys.long_wave_speed();
        assert!(matches!(solitary_constants(c0, &m), Err(Error::NoSolitaryWave(_))));
        assert!(matches!(solitary_constants(0.5 * c0, &m), Err(Error::NoSolitaryWave(_))));
        let lin = Model::new(m.phys.with_lambda(0.0), m.coeffs);
        assert!(matches!(solitary_constants(2.5, &lin), Err(Error::NoSolitaryWave(_))));
        let other = Model::new(m.phys, crate::model::ModelCoeffs::explicit(0.0, 0.2, -0.1, 0.2, &m.phys));
        assert!(solitary_constants(2.5, &other).is_err());
        assert!(solitary_constants_on(0.5 * c0, &m, Branch::Minus).is_ok());
    }

    #[test]
    fn speed_sign_flips_velocity_only() {
        let m = experiment_model();
        let p = solitary_constants(2.1, &m).unwrap();
        let q = solitary_constants(-2.1, &m).unwrap();
        assert_eq!(p.a, q.a);
        assert!((p.b1 + q.b1).abs() < 1e-12 * p.b1.abs());
        assert!((p.a1 - q.a1).abs() < 1e-12 * p.a1.abs());
        assert!((p.a2 - q.a2).abs() < 1e-12 * p.a2.abs());
    }

    #[test]
    fn profile_is_a_travelling_wave() {
        let m = experiment_model();
        let g = Grid2D::new(16.0, 256).unwrap();
        let p = solitary_constants(exact_solitary_speed(&m), &m).unwrap();
        let s = solitary_state(&p, 0.0, &g);
        assert_eq!(s.v2.max_abs(), 0.0);
        let d = rhs(&s, &m, false).unwrap();
        let res = |f: &RealField, df: &RealField| {
            let dx = partial_x(f);
            df.values()
                .iter()
                .zip(dx.values())
                .fold(0.0f64, |acc, (a, b)| acc.max((a + p.cs * b).abs()))
        };
        assert!(res(&s.zeta, &d.zeta) <= 1e-8);
        assert!(res(&s.v1, &d.v1) <= 1e-8);
    }

    #[test]
    fn periodic_extension_removes_the_edge_kink() {
        let m = experiment_model();
        let g = Grid2D::new(16.0, 256).unwrap();
        let p = solitary_constants(exact_solitary_speed(&m), &m).unwrap().with_offset(-10.0);
        let residual = |s: &State| {
            let d = rhs(s, &m, false).unwrap();
            let dx = partial_x(&s.zeta);
            d.zeta
                .values()
                .iter()
                .zip(dx.values())
                .fold(0.0f64, |acc, (a, b)| acc.max((a + p.cs * b).abs()))
        };
        assert!(residual(&solitary_state(&p, 0.0, &g)) > 1e-3);
        let periodic = periodic_solitary_state(&p, 0.0, &g);
        assert!(residual(&periodic) <= 1e-8);
        // copies only differ where the neighbouring tail reaches
        let (z, _) = p.periodic_profile(-10.0, 0.0, 32.0);
        assert!((z - p.profile(-10.0, 0.0).0).abs() < 1e-12);
        let (z_left, _) = p.periodic_profile(-16.0, 0.0, 32.0);
        let (z_right, _) = p.periodic_profile(16.0, 0.0, 32.0);
        assert_eq!(z_left, z_right);
        assert!((z_right - p.profile(16.0, 0.0).0).abs() > 0.99 * z_right.abs());
    }

    #[test]
    fn translation_matches_spectral_shift() {
        let m = experiment_model();
        // at L = 16 the wrapped tail alone is ~1e-10
        let g = Grid2D::new(20.0, 320).unwrap();
        let p = solitary_constants(exact_solitary_speed(&m), &m).unwrap();
        let t = 0.37;
        let moved = solitary_state(&p, t, &g);
        let shifted = translate(&solitary_state(&p, 0.0, &g).zeta, p.cs * t, 0.0);
        let err = moved
            .zeta
            .values()
            .iter()
            .zip(shifted.values())
            .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
        assert!(err <= 1e-10, "{err}");
    }

    #[test]
    fn tails_are_negligible_at_the_box_edge() {
        let m = experiment_model();
        let p = solitary_constants(exact_solitary_speed(&m), &m).unwrap();
        for x in [-16.0, 16.0] {
            assert!(p.profile(x, 0.0).0.abs() < 1e-10);
        }
    }

    #[test]
    fn gaussian_pulses() {
        let g = Grid2D::new(64.0, 128).unwrap();
        let s = gaussian_ic(0.1, 5.0, 5.0, &g).unwrap();
        assert_eq!(s.zeta.at(64, 64), 0.1);
        assert_eq!(means(&s).1, 0.0);
        assert_eq!(symmetry_defect(&s), 0.0);
        let s = gaussian_ic(0.4, 5.0, 25.0, &g).unwrap();
        let (x, y) = (g.node(70), g.node(50));
        assert_eq!(s.zeta.at(70, 50), 0.4 * (-(x * x / 5.0 + y * y / 25.0)).exp());
        assert!(gaussian_ic(0.1, 0.0, 5.0, &g).is_err());
    }

    #[test]
    fn line_pulses() {
        let g = Grid2D::new(64.0, 128).unwrap();
        let flat = perturbed_line_ic(0.0, 5.0, 0.0, &g).unwrap();
        for j in 0..128 {
            let row = &flat.zeta.values()[j * 128..(j + 1) * 128];
            assert!(row.iter().all(|v| *v == row[0]));
        }
        let s = perturbed_line_ic(0.005, 5.0, 0.0, &g).unwrap();
        for j in 1..128 {
            for l in 0..128 {
                assert_eq!(s.zeta.at(j, l), s.zeta.at(g.mirror(j), l));
            }
        }
        let odd = Grid2D::new(3.0, 32).unwrap();
        assert!(perturbed_line_ic(0.005, 5.0, 0.0, &odd).is_err());
        assert!(perturbed_line_ic(0.0, 5.0, 0.0, &odd).is_ok());
    }

    proptest! {
        #[test]
        fn constant_relations_hold(g in 0.0f64..0.95, dl in 0.3f64..3.0, excess in 1.001f64..5.0, sign in prop::bool::ANY) {
            let m = Model::bbm_bbm(g, dl).unwrap();
            prop_assume!(m.phys.lambda.abs() > 1e-3);
            let cs = excess * m.phys.long_wave_speed() * if sign { 1.0 } else { -1.0 };
            let p = solitary_constants(cs, &m).unwrap();
            for r in p.relation_residuals() {
                prop_assert!(r <= 1e-12, "{r}");
            }
        }
    }
}
