//! Semidiscrete right-hand side and conserved functionals.
//!
//! Per mode, with `k̃` the physical wavevector and hats denoting the modal
//! coefficients of the pointwise products,
//!
//! ```text
//! (1 + b|k̃|²) ∂t ζ̂ = -i (r1 - a|k̃|²)(k̃·v̂) - iλ k̃·(ζv)^
//! (1 + d|k̃|²) ∂t v̂ = -i k̃ (r2 - c'|k̃|²) ζ̂ - i(λ/2) k̃ (|v|²)^
//! ```
//!
//! First-order factors `k̃_x, k̃_y` vanish on the Nyquist row/column, while
//! `|k̃|²` keeps it.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{Model, SystemClass};
use crate::spectral::{dealias_in_place, Grid2D, RealField};

/// Interface deviation and velocity on the collocation grid at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub zeta: RealField,
    pub v1: RealField,
    pub v2: RealField,
    pub t: f64,
}

impl State {
    pub fn new(zeta: RealField, v1: RealField, v2: RealField, t: f64) -> Result<Self> {
        zeta.grid().check_same(v1.grid())?;
        zeta.grid().check_same(v2.grid())?;
        Ok(Self { zeta, v1, v2, t })
    }

    pub fn zeros(grid: &Grid2D) -> Self {
        Self {
            zeta: RealField::zeros(grid),
            v1: RealField::zeros(grid),
            v2: RealField::zeros(grid),
            t: 0.0,
        }
    }

    pub fn grid(&self) -> &Grid2D {
        self.zeta.grid()
    }

    pub fn fields(&self) -> [&RealField; 3] {
        [&self.zeta, &self.v1, &self.v2]
    }

    /// Continuous-scaled L² norm `h·sqrt(Σ ζ² + v1² + v2²)`.
    pub fn l2_norm(&self) -> f64 {
        let h = self.grid().spacing();
        let s: f64 = self
            .fields()
            .iter()
            .flat_map(|f| f.values().iter())
            .map(|v| v * v)
            .sum();
        h * s.sqrt()
    }

    /// `self + scale * other`, keeping `self.t`.
    pub fn axpy(&self, scale: f64, other: &State) -> Result<State> {
        let f = |a: &RealField, b: &RealField| a.zip_with(b, |x, y| x + scale * y);
        State::new(
            f(&self.zeta, &other.zeta)?,
            f(&self.v1, &other.v1)?,
            f(&self.v2, &other.v2)?,
            self.t,
        )
    }

    pub fn is_finite(&self) -> bool {
        self.fields()
            .iter()
            .all(|f| f.values().iter().all(|v| v.is_finite()))
    }
}

/// Modal coefficients of the three fields (mean-normalized, see `spectral`).
#[derive(Debug, Clone, PartialEq)]
pub struct ModalState {
    pub fields: [Vec<Complex64>; 3],
}

impl ModalState {
    pub fn zeros(len: usize) -> Self {
        Self {
            fields: std::array::from_fn(|_| vec![Complex64::default(); len]),
        }
    }

    pub fn from_state(s: &State) -> Self {
        let grid = s.grid();
        let mut out = Self::zeros(grid.len());
        for (dst, src) in out.fields.iter_mut().zip(s.fields()) {
            grid.to_modal(src.values(), dst);
        }
        out
    }

    pub fn to_state(&self, grid: &Grid2D, t: f64) -> State {
        let mut work = vec![Complex64::default(); grid.len()];
        let [zeta, v1, v2] = std::array::from_fn(|f| {
            let mut values = vec![0.0; grid.len()];
            grid.to_physical(&self.fields[f], &mut work, &mut values);
            RealField::from_values_unchecked(grid, values)
        });
        State { zeta, v1, v2, t }
    }

    /// Largest coefficient difference over all three fields.
    pub fn max_diff(&self, other: &ModalState) -> f64 {
        self.fields
            .iter()
            .zip(&other.fields)
            .flat_map(|(a, b)| a.iter().zip(b.iter()))
            .fold(0.0f64, |m, (x, y)| m.max((x - y).norm_sqr()))
            .sqrt()
    }
}

/// Scratch buffers for one right-hand-side evaluation.
pub struct Workspace {
    physical: [Vec<f64>; 3],
    real_products: [Vec<f64>; 3],
    products: [Vec<Complex64>; 3],
    complex: Vec<Complex64>,
    truncated: [Vec<Complex64>; 3],
    zero: Vec<Complex64>,
    spare: Vec<f64>,
    scratch_modal: Vec<Complex64>,
}

impl Workspace {
    pub fn new(grid: &Grid2D) -> Self {
        let len = grid.len();
        Self {
            physical: std::array::from_fn(|_| vec![0.0; len]),
            real_products: std::array::from_fn(|_| vec![0.0; len]),
            products: std::array::from_fn(|_| vec![Complex64::default(); len]),
            complex: vec![Complex64::default(); len],
            truncated: std::array::from_fn(|_| vec![Complex64::default(); len]),
            zero: vec![Complex64::default(); len],
            spare: vec![0.0; len],
            scratch_modal: vec![Complex64::default(); len],
        }
    }
}

/// The collocation ODE system `dW/dt = f(W)` on one grid.
#[derive(Debug, Clone)]
pub struct SemiDiscrete {
    grid: Grid2D,
    model: Model,
    dealias: bool,
    inv_b: Vec<f64>,
    inv_d: Vec<f64>,
}

impl SemiDiscrete {
    /// Refuses coefficient sets outside the linearly well-posed classes.
    pub fn new(grid: &Grid2D, model: Model, dealias: bool) -> Result<Self> {
        let class = model.class();
        if class == SystemClass::Unsupported {
            return Err(Error::Unsupported(class));
        }
        let n = grid.n();
        let k = grid.ktilde();
        let mut inv_b = Vec::with_capacity(grid.len());
        let mut inv_d = Vec::with_capacity(grid.len());
        for i in 0..n {
            for j in 0..n {
                let k2 = k[i] * k[i] + k[j] * k[j];
                inv_b.push(1.0 / (1.0 + model.coeffs.b * k2));
                inv_d.push(1.0 / (1.0 + model.coeffs.d * k2));
            }
        }
        Ok(Self {
            grid: grid.clone(),
            model,
            dealias,
            inv_b,
            inv_d,
        })
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn dealias(&self) -> bool {
        self.dealias
    }

    /// Evaluate `out = f(w)` in modal space.
    pub fn eval(&self, w: &ModalState, out: &mut ModalState, ws: &mut Workspace) {
        let grid = &self.grid;
        let n = grid.n();
        let Model { phys, coeffs } = self.model;

        let [wz, wv1, wv2] = &w.fields;
        let [zeta, v1, v2] = &mut ws.physical;
        if self.dealias {
            let [tz, tv1, tv2] = &mut ws.truncated;
            for (dst, src) in [(&mut *tz, wz), (&mut *tv1, wv1), (&mut *tv2, wv2)] {
                dst.copy_from_slice(src);
                dealias_in_place(grid, dst);
            }
            grid.to_physical_pair(tz, tv1, &mut ws.complex, zeta, v1);
            grid.to_physical_pair(tv2, &ws.zero, &mut ws.complex, v2, &mut ws.spare);
        } else {
            grid.to_physical_pair(wz, wv1, &mut ws.complex, zeta, v1);
            grid.to_physical_pair(wv2, &ws.zero, &mut ws.complex, v2, &mut ws.spare);
        }

        let [p_zv1, p_zv2, p_vv] = &mut ws.real_products;
        for idx in 0..zeta.len() {
            let (z, a, b) = (zeta[idx], v1[idx], v2[idx]);
            p_zv1[idx] = z * a;
            p_zv2[idx] = z * b;
            p_vv[idx] = a * a + b * b;
        }
        let [m_zv1, m_zv2, m_vv] = &mut ws.products;
        grid.to_modal_pair(p_zv1, p_zv2, &mut ws.complex, m_zv1, m_zv2);
        ws.spare.fill(0.0);
        grid.to_modal_pair(p_vv, &ws.spare, &mut ws.complex, m_vv, &mut ws.scratch_modal);
        if self.dealias {
            for p in ws.products.iter_mut() {
                dealias_in_place(grid, p);
            }
        }

        let kt = grid.ktilde();
        let ko = grid.ktilde_odd();
        let [pz1, pz2, pvv] = &ws.products;
        let [oz, ov1, ov2] = &mut out.fields;
        let minus_i = Complex64::new(0.0, -1.0);
        let half_lambda = 0.5 * phys.lambda;
        for i in 0..n {
            let kx = ko[i];
            for j in 0..n {
                let idx = i * n + j;
                let ky = ko[j];
                let k2 = kt[i] * kt[i] + kt[j] * kt[j];
                let div_v = wv1[idx] * kx + wv2[idx] * ky;
                let flux = pz1[idx] * kx + pz2[idx] * ky;
                oz[idx] = minus_i
                    * ((phys.r1 - coeffs.a * k2) * div_v + phys.lambda * flux)
                    * self.inv_b[idx];
                let pot = minus_i
                    * ((phys.r2 - coeffs.c_prime * k2) * wz[idx] + half_lambda * pvv[idx])
                    * self.inv_d[idx];
                ov1[idx] = pot * kx;
                ov2[idx] = pot * ky;
            }
        }
    }
}

/// Time derivative of `s` under the semidiscrete system.
pub fn rhs(s: &State, model: &Model, dealias: bool) -> Result<State> {
    let sys = SemiDiscrete::new(s.grid(), *model, dealias)?;
    let w = ModalState::from_state(s);
    let mut out = ModalState::zeros(s.grid().len());
    let mut ws = Workspace::new(s.grid());
    sys.eval(&w, &mut out, &mut ws);
    Ok(out.to_state(s.grid(), s.t))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Functionals {
    pub hamiltonian: f64,
    pub mean_zeta: f64,
    pub mean_v1: f64,
    pub mean_v2: f64,
    pub l2_zeta: f64,
    pub l2_v: f64,
}

impl Functionals {
    pub fn of(s: &State, model: &Model) -> Self {
        let (mean_zeta, mean_v1, mean_v2) = means(s);
        let h = s.grid().spacing();
        let sq = |f: &RealField| f.values().iter().map(|v| v * v).sum::<f64>();
        Self {
            hamiltonian: hamiltonian(s, model),
            mean_zeta,
            mean_v1,
            mean_v2,
            l2_zeta: h * sq(&s.zeta).sqrt(),
            l2_v: h * (sq(&s.v1) + sq(&s.v2)).sqrt(),
        }
    }
}

/// Rectangle-rule quadrature of
/// `-c'|∇ζ|² - a|∇v|² + (r1 + λζ)|v|² + r2 ζ²` with spectral gradients.
pub fn hamiltonian(s: &State, model: &Model) -> f64 {
    let Model { phys, coeffs } = *model;
    let h = s.grid().spacing();
    let grad_sq = |f: &RealField| -> Vec<f64> {
        let (fx, fy) = crate::spectral::gradient(f);
        fx.values()
            .iter()
            .zip(fy.values())
            .map(|(a, b)| a * a + b * b)
            .collect()
    };
    let len = s.grid().len();
    let zeta_grad = if coeffs.c_prime != 0.0 {
        grad_sq(&s.zeta)
    } else {
        vec![0.0; len]
    };
    let v_grad: Vec<f64> = if coeffs.a != 0.0 {
        grad_sq(&s.v1)
            .iter()
            .zip(grad_sq(&s.v2))
            .map(|(a, b)| a + b)
            .collect()
    } else {
        vec![0.0; len]
    };
    let (z, v1, v2) = (s.zeta.values(), s.v1.values(), s.v2.values());
    let sum: f64 = (0..len)
        .map(|i| {
            let vv = v1[i] * v1[i] + v2[i] * v2[i];
            -coeffs.c_prime * zeta_grad[i] - coeffs.a * v_grad[i]
                + (phys.r1 + phys.lambda * z[i]) * vv
                + phys.r2 * z[i] * z[i]
        })
        .sum();
    h * h * sum
}

/// Gradient of [`hamiltonian`] with respect to the nodal values.
pub fn hamiltonian_gradient(s: &State, model: &Model) -> State {
    let Model { phys, coeffs } = *model;
    let g = s.grid();
    let h2 = g.spacing() * g.spacing();
    // d/dε Σ|∇f + ε∇e|² = -2 Σ e ∇·∇f with the same skew-adjoint ∇
    let div_grad = |f: &RealField| {
        let (fx, fy) = crate::spectral::gradient(f);
        crate::spectral::divergence(&fx, &fy).expect("gradient components share the grid")
    };
    let zeros = || RealField::zeros(g);
    let dz_zeta = if coeffs.c_prime != 0.0 { div_grad(&s.zeta) } else { zeros() };
    let (dd1, dd2) = if coeffs.a != 0.0 {
        (div_grad(&s.v1), div_grad(&s.v2))
    } else {
        (zeros(), zeros())
    };
    let (z, v1, v2) = (s.zeta.values(), s.v1.values(), s.v2.values());
    let len = g.len();
    let mut gz = Vec::with_capacity(len);
    let mut g1 = Vec::with_capacity(len);
    let mut g2 = Vec::with_capacity(len);
    for i in 0..len {
        let vv = v1[i] * v1[i] + v2[i] * v2[i];
        let depth = phys.r1 + phys.lambda * z[i];
        gz.push(h2 * (2.0 * coeffs.c_prime * dz_zeta.values()[i] + phys.lambda * vv + 2.0 * phys.r2 * z[i]));
        g1.push(h2 * (2.0 * coeffs.a * dd1.values()[i] + 2.0 * depth * v1[i]));
        g2.push(h2 * (2.0 * coeffs.a * dd2.values()[i] + 2.0 * depth * v2[i]));
    }
    State {
        zeta: RealField::from_values_unchecked(g, gz),
        v1: RealField::from_values_unchecked(g, g1),
        v2: RealField::from_values_unchecked(g, g2),
        t: s.t,
    }
}

/// Euclidean inner product of two states over all nodal values.
pub fn dot(a: &State, b: &State) -> f64 {
    a.fields()
        .into_iter()
        .zip(b.fields())
        .map(|(f, g)| f.values().iter().zip(g.values()).map(|(x, y)| x * y).sum::<f64>())
        .sum()
}

/// Grid averages of `(ζ, v1, v2)`.
pub fn means(s: &State) -> (f64, f64, f64) {
    (s.zeta.mean(), s.v1.mean(), s.v2.mean())
}

/// Departure from `ζ` even and `v` odd under `(x, y) ↦ (-x, -y)`.
pub fn symmetry_defect(s: &State) -> f64 {
    let g = s.grid();
    let n = g.n();
    let mut worst = 0.0f64;
    for j in 0..n {
        let mj = g.mirror(j);
        for l in 0..n {
            let ml = g.mirror(l);
            let d = (s.zeta.at(j, l) - s.zeta.at(mj, ml)).abs()
                + (s.v1.at(j, l) + s.v1.at(mj, ml)).abs()
                + (s.v2.at(j, l) + s.v2.at(mj, ml)).abs();
            worst = worst.max(d);
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{eigen_basis, ModelCoeffs, Wavevector};
    use crate::spectral::forward;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn smooth_state(g: &Grid2D, c: &[f64]) -> State {
        let l = g.half_width();
        let w = PI / l;
        let zeta = RealField::from_fn(g, |x, y| {
            c[0] * (w * x + c[1]).sin() * (2.0 * w * y).cos() + c[2] * (-(x * x + y * y) / 8.0).exp()
        });
        let v1 = RealField::from_fn(g, |x, y| c[3] * (w * (x + 2.0 * y) + c[4]).cos() + c[5] * (3.0 * w * y).sin());
        let v2 = RealField::from_fn(g, |x, y| c[6] * (2.0 * w * x).sin() * (w * y + c[7]).cos());
        State::new(zeta, v1, v2, 0.0).unwrap()
    }

    #[test]
    fn zero_state_has_zero_derivative() {
        let g = Grid2D::new(8.0, 16).unwrap();
        let m = Model::bbm_bbm(0.5, 0.9).unwrap();
        let d = rhs(&State::zeros(&g), &m, false).unwrap();
        assert!(d.fields().iter().all(|f| f.max_abs() == 0.0));
    }

    #[test]
    fn refuses_unsupported_coefficients() {
        let g = Grid2D::new(8.0, 16).unwrap();
        let mut m = Model::bbm_bbm(0.5, 0.9).unwrap();
        m.coeffs = ModelCoeffs::explicit(0.1, 0.1, 0.0, 0.1, &m.phys);
        assert!(matches!(
            rhs(&State::zeros(&g), &m, false),
            Err(Error::Unsupported(SystemClass::Unsupported))
        ));
    }

    #[test]
    fn linear_single_mode_matches_symbol() {
        let g = Grid2D::new(8.0, 16).unwrap();
        let base = Model::bbm_bbm(0.3, 1.1).unwrap();
        let phys = base.phys.with_lambda(0.0);
        let coeffs = ModelCoeffs::explicit(-0.05, 0.2, -0.03, 0.15, &phys);
        let m = Model::new(phys, coeffs);
        let sys = SemiDiscrete::new(&g, m, false).unwrap();
        for &(kx, ky) in &[(1i64, 0i64), (2, -3), (-5, 4), (7, 7)] {
            let amp = [
                Complex64::new(0.3, -0.1),
                Complex64::new(-0.2, 0.4),
                Complex64::new(0.05, 0.25),
            ];
            let mut w = ModalState::zeros(g.len());
            let i = g.index_of(kx).unwrap();
            let j = g.index_of(ky).unwrap();
            for f in 0..3 {
                w.fields[f][i * 16 + j] = amp[f];
            }
            let mut out = ModalState::zeros(g.len());
            sys.eval(&w, &mut out, &mut Workspace::new(&g));

            let wave = Wavevector::on_box([kx, ky], 8.0);
            let data = eigen_basis(&coeffs, &phys, wave).unwrap();
            let kn = wave.norm_sq().sqrt();
            for r in 0..3 {
                let mut expected = Complex64::default();
                for c in 0..3 {
                    expected += amp[c] * data.symbol[r][c];
                }
                expected *= Complex64::new(0.0, -kn);
                assert!((out.fields[r][i * 16 + j] - expected).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn mean_modes_have_zero_derivative() {
        let g = Grid2D::new(8.0, 32).unwrap();
        let m = Model::bbm_bbm(0.5, 0.9).unwrap();
        let s = smooth_state(&g, &[0.3, 0.1, 0.5, -0.4, 0.7, 0.2, 0.3, -0.6]);
        for dealias in [false, true] {
            let d = rhs(&s, &m, dealias).unwrap();
            let w = ModalState::from_state(&d);
            let mut out = ModalState::zeros(g.len());
            SemiDiscrete::new(&g, m, dealias)
                .unwrap()
                .eval(&ModalState::from_state(&s), &mut out, &mut Workspace::new(&g));
            for f in 0..3 {
                assert_eq!(out.fields[f][0], Complex64::default());
                assert!(w.fields[f][0].norm() < 1e-15);
            }
        }
    }

    #[test]
    fn hamiltonian_of_constant_elevation() {
        let g = Grid2D::new(16.0, 32).unwrap();
        let m = Model::bbm_bbm(0.5, 0.9).unwrap();
        assert_eq!(hamiltonian(&State::zeros(&g), &m), 0.0);
        let mut s = State::zeros(&g);
        s.zeta = RealField::constant(&g, 0.1);
        assert!((hamiltonian(&s, &m) - 5.12).abs() < 1e-12);
    }

    #[test]
    fn hamiltonian_is_shift_invariant() {
        let g = Grid2D::new(8.0, 32).unwrap();
        let p = crate::model::derive_physical(0.4, 1.0).unwrap();
        let m = Model::new(p, ModelCoeffs::explicit(-0.1, 0.2, -0.2, 0.2, &p));
        let s = smooth_state(&g, &[0.3, 0.1, 0.5, -0.4, 0.7, 0.2, 0.3, -0.6]);
        let shift = |f: &RealField| {
            let n = g.n();
            let vals: Vec<f64> = (0..n * n)
                .map(|idx| f.at((idx / n + 1) % n, idx % n))
                .collect();
            RealField::from_values(&g, vals).unwrap()
        };
        let shifted = State::new(shift(&s.zeta), shift(&s.v1), shift(&s.v2), 0.0).unwrap();
        let (h0, h1) = (hamiltonian(&s, &m), hamiltonian(&shifted, &m));
        assert!((h0 - h1).abs() <= 1e-12 * h0.abs());
    }

    #[test]
    fn means_and_symmetry() {
        let g = Grid2D::new(8.0, 16).unwrap();
        assert_eq!(means(&State::zeros(&g)), (0.0, 0.0, 0.0));
        let mut s = State::zeros(&g);
        s.zeta = RealField::constant(&g, 0.25);
        assert_eq!(means(&s).0, 0.25);
        assert!((forward(&s.zeta).mode(0, 0).re - 0.25).abs() < 1e-16);

        s.zeta = RealField::from_fn(&g, |x, y| (-(x * x + y * y) / 5.0).exp());
        assert!(symmetry_defect(&s) < 1e-14);
        s.zeta = RealField::from_fn(&g, |x, y| (-((x - 1.0).powi(2) + y * y) / 5.0).exp());
        let expected = (-(1.0f64) / 5.0).exp() - (-(9.0f64) / 5.0).exp();
        assert!((symmetry_defect(&s) - expected).abs() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn rhs_is_real(c in prop::collection::vec(-1.0f64..1.0, 8)) {
            let g = Grid2D::new(8.0, 32).unwrap();
            let m = Model::bbm_bbm(0.5, 0.9).unwrap();
            let s = smooth_state(&g, &c);
            let sys = SemiDiscrete::new(&g, m, false).unwrap();
            let mut out = ModalState::zeros(g.len());
            sys.eval(&ModalState::from_state(&s), &mut out, &mut Workspace::new(&g));
            for f in &out.fields {
                let spec = crate::spectral::SpectralField::from_coeffs(&g, f.clone());
                prop_assert!(crate::spectral::inverse_with_residue(&spec).1 <= 1e-12);
            }
        }

        #[test]
        fn gradient_matches_finite_differences(c in prop::collection::vec(-1.0f64..1.0, 8), ai in 0usize..3) {
            let g = Grid2D::new(8.0, 16).unwrap();
            let base = Model::bbm_bbm(0.5, 0.9).unwrap();
            let coeffs = [base.coeffs, ModelCoeffs::explicit(-0.1, 0.3, -0.2, 0.3, &base.phys), ModelCoeffs::explicit(-0.05, 0.0, 0.0, 0.4, &base.phys)][ai];
            let m = Model::new(base.phys, coeffs);
            let s = smooth_state(&g, &c);
            let dir = smooth_state(&g, &[c[7], c[6], c[5], c[4], c[3], c[2], c[1], c[0]]);
            let eps = 1e-5;
            let fd = (hamiltonian(&s.axpy(eps, &dir).unwrap(), &m) - hamiltonian(&s.axpy(-eps, &dir).unwrap(), &m)) / (2.0 * eps);
            let exact = dot(&hamiltonian_gradient(&s, &m), &dir);
            prop_assert!((fd - exact).abs() <= 1e-7 * (1.0 + exact.abs()), "{fd} vs {exact}");
        }

        #[test]
        fn energy_is_conserved_semidiscretely(c in prop::collection::vec(-1.0f64..1.0, 8)) {
            let g = Grid2D::new(8.0, 32).unwrap();
            let m = Model::bbm_bbm(0.5, 0.9).unwrap();
            let s = smooth_state(&g, &c);
            let f = rhs(&s, &m, false).unwrap();
            let eps = 1e-6;
            let hp = hamiltonian(&s.axpy(eps, &f).unwrap(), &m);
            let hm = hamiltonian(&s.axpy(-eps, &f).unwrap(), &m);
            let slope = (hp - hm) / (2.0 * eps);
            prop_assert!(slope.abs() <= 1e-6 * s.l2_norm(), "slope {slope}");
        }
    }
}
