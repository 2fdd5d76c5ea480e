//! Quick self-check of the solver: oracles and invariants on small grids.
//! Each check is deterministic (fixed seeds) and runs in well under a minute
//! in an optimized build.

use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::dynamics::{dot, hamiltonian, hamiltonian_gradient, means, rhs, symmetry_defect, ModalState, State};
use crate::error::{Error, Result};
use crate::harness::config::RunConfig;
use crate::harness::experiments::{sweep_dt, Column};
use crate::harness::io::{read_snapshot, write_snapshot};
use crate::model::{eigen_basis, symbol_matrix, Mat3, Model, ModelCoeffs, SystemClass, Wavevector};
use crate::spectral::{partial_x, Grid2D, RealField};
use crate::timestepper::{ImrConfig, Integrator};
use crate::waves::{exact_solitary_speed, gaussian_ic, periodic_solitary_state, solitary_constants};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn to_text(&self) -> String {
        self.checks
            .iter()
            .map(|c| format!("{} {:<24} {}\n", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail))
            .collect()
    }

    /// `Err(Validation)` naming the failed checks.
    pub fn into_result(self) -> Result<Self> {
        if self.passed() {
            return Ok(self);
        }
        let names: Vec<&str> = self.checks.iter().filter(|c| !c.passed).map(|c| c.name).collect();
        Err(Error::Validation(format!("failed checks: {}", names.join(", "))))
    }
}

type CheckFn = fn() -> Result<(bool, String)>;

const CHECKS: &[(&str, CheckFn)] = &[
    ("coefficients", coefficients),
    ("diagonalization", diagonalization),
    ("linear-oracle", linear_oracle),
    ("conservation", conservation),
    ("solitary-constants", solitary_relations),
    ("solitary-residual", solitary_residual),
    ("symmetry", symmetry),
    ("means-and-reversibility", means_and_reversibility),
    ("snapshot-round-trip", snapshot_round_trip),
    ("temporal-order", temporal_order),
];

pub fn check_names() -> Vec<&'static str> {
    CHECKS.iter().map(|(n, _)| *n).collect()
}

/// Run every check; a check that errors counts as failed.
pub fn validate() -> ValidationReport {
    let checks = CHECKS
        .iter()
        .map(|(name, f)| match f() {
            Ok((passed, detail)) => Check { name, passed, detail },
            Err(e) => Check {
                name,
                passed: false,
                detail: format!("error: {e}"),
            },
        })
        .collect();
    ValidationReport { checks }
}

fn verdict(value: f64, bound: f64, what: &str) -> (bool, String) {
    (value <= bound, format!("{what} {value:.3e} (bound {bound:.0e})"))
}

fn coefficients() -> Result<(bool, String)> {
    let m = Model::bbm_bbm(0.5, 0.9)?;
    let c = m.coeffs;
    let b = (1.0 + 0.45) / (6.0 * 0.9 * 1.4);
    let ok = m.class() == SystemClass::C1 && c.b == c.d && c.a == 0.0 && c.c == 0.0 && (c.b - b).abs() < 1e-15;
    Ok((ok, format!("b = d = {:.6}, class {:?}", c.b, m.class())))
}

fn mat_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    std::array::from_fn(|i| std::array::from_fn(|j| (0..3).map(|k| a[i][k] * b[k][j]).sum()))
}

fn random_admissible(rng: &mut StdRng, m: &Model) -> ModelCoeffs {
    let (a, c) = (-rng.random_range(0.0..0.3), -rng.random_range(0.0..0.3));
    let (b, d) = (rng.random_range(0.05..1.0), rng.random_range(0.05..1.0));
    ModelCoeffs::explicit(a, b, c, d, &m.phys)
}

fn diagonalization() -> Result<(bool, String)> {
    let mut rng = StdRng::seed_from_u64(5);
    let base = Model::bbm_bbm(0.5, 0.9)?;
    let mut worst = 0.0f64;
    for _ in 0..5 {
        let coeffs = random_admissible(&mut rng, &base);
        for _ in 0..20 {
            let k = loop {
                let k = [rng.random_range(-12i64..=12), rng.random_range(-12i64..=12)];
                if k != [0, 0] {
                    break k;
                }
            };
            let d = eigen_basis(&coeffs, &base.phys, Wavevector::on_box(k, 16.0))?;
            let conj = mat_mul(&d.p_inverse(), &mat_mul(&d.symbol, &d.p));
            let diag = [0.0, d.sigma, -d.sigma];
            for (i, row) in conj.iter().enumerate() {
                for (j, v) in row.iter().enumerate() {
                    let target = if i == j { diag[i] } else { 0.0 };
                    worst = worst.max((v - target).abs());
                }
            }
        }
    }
    Ok(verdict(worst, 1e-12, "max |P^-1 A P - diag|"))
}

type CMat3 = [[Complex64; 3]; 3];

fn det3(m: &CMat3) -> Complex64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Solve `m x = r` by Cramer's rule.
fn solve3(m: &CMat3, r: [Complex64; 3]) -> [Complex64; 3] {
    let det = det3(m);
    std::array::from_fn(|col| {
        let mut mc = *m;
        for (row, rv) in mc.iter_mut().zip(r) {
            row[col] = rv;
        }
        det3(&mc) / det
    })
}

fn linear_oracle() -> Result<(bool, String)> {
    let mut rng = StdRng::seed_from_u64(4);
    let base = Model::bbm_bbm(0.5, 0.9)?;
    let grid = Grid2D::new(4.0, 16)?;
    let dt = 0.05;
    let mut worst = 0.0f64;
    for trial in 0..20 {
        let coeffs = if trial % 2 == 0 {
            base.coeffs
        } else {
            random_admissible(&mut rng, &base)
        };
        let model = Model::new(base.phys.with_lambda(0.0), coeffs);
        let k = loop {
            let k = [rng.random_range(-7i64..=7), rng.random_range(-7i64..=7)];
            if k != [0, 0] {
                break k;
            }
        };
        let c: [Complex64; 3] = std::array::from_fn(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let idx = |k: [i64; 2]| -> Result<usize> {
            let i = grid.index_of(k[0]).ok_or_else(|| Error::Domain("mode off grid".into()))?;
            let j = grid.index_of(k[1]).ok_or_else(|| Error::Domain("mode off grid".into()))?;
            Ok(i * grid.n() + j)
        };
        let (here, there) = (idx(k)?, idx([-k[0], -k[1]])?);
        let mut w = ModalState::zeros(grid.len());
        for f in 0..3 {
            w.fields[f][here] = c[f];
            w.fields[f][there] = c[f].conj();
        }
        let mut integ = Integrator::new(&grid, model, ImrConfig::new(dt)?, false)?;
        for step in 0..100 {
            integ.step_modal(&mut w, step)?;
        }

        let wave = Wavevector::on_box(k, grid.half_width());
        let a = symbol_matrix(&model.coeffs, &model.phys, wave.ktilde)?;
        let scale = Complex64::new(0.0, -wave.norm_sq().sqrt() * 0.5 * dt);
        let lhs: CMat3 = std::array::from_fn(|i| {
            std::array::from_fn(|j| if i == j { Complex64::new(1.0, 0.0) } else { Complex64::default() } - scale * a[i][j])
        });
        let mut x = c;
        for _ in 0..100 {
            let r: [Complex64; 3] = std::array::from_fn(|i| x[i] + scale * (0..3).map(|j| a[i][j] * x[j]).sum::<Complex64>());
            x = solve3(&lhs, r);
        }
        for f in 0..3 {
            worst = worst.max((w.fields[f][here] - x[f]).norm());
        }
    }
    Ok(verdict(worst, 1e-10, "max mode error after 100 steps"))
}

fn smooth_state(grid: &Grid2D, rng: &mut StdRng) -> Result<State> {
    let w = std::f64::consts::PI / grid.half_width();
    let mut field = || {
        let c: [f64; 6] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        let (kx, ky) = (rng.random_range(1..4) as f64, rng.random_range(0..4) as f64);
        RealField::from_fn(grid, move |x, y| {
            c[0] * (w * (kx * x + ky * y) + c[1]).sin()
                + c[2] * (w * (ky * x - kx * y) + c[3]).cos()
                + c[4] * (-((x - c[5]) * (x - c[5]) + y * y) / 3.0).exp()
        })
    };
    State::new(field(), field(), field(), 0.0)
}

fn conservation() -> Result<(bool, String)> {
    let mut rng = StdRng::seed_from_u64(3);
    let grid = Grid2D::new(8.0, 32)?;
    let model = Model::bbm_bbm(0.5, 0.9)?;
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let s = smooth_state(&grid, &mut rng)?;
        let f = rhs(&s, &model, false)?;
        let eps = 1e-6;
        let slope = (hamiltonian(&s.axpy(eps, &f)?, &model) - hamiltonian(&s.axpy(-eps, &f)?, &model)) / (2.0 * eps);
        let grad = hamiltonian_gradient(&s, &model);
        let scale = dot(&grad, &grad).sqrt() * dot(&f, &f).sqrt();
        worst = worst.max(slope.abs() / scale);
    }
    Ok(verdict(worst, 1e-6, "relative dH/dt along f"))
}

fn solitary_relations() -> Result<(bool, String)> {
    let mut rng = StdRng::seed_from_u64(6);
    let mut worst = 0.0f64;
    let mut count = 0;
    while count < 100 {
        let m = Model::bbm_bbm(rng.random_range(0.0..0.95), rng.random_range(0.3..3.0))?;
        if m.phys.lambda.abs() < 1e-3 {
            continue;
        }
        let cs = rng.random_range(1.001..5.0) * m.phys.long_wave_speed();
        let p = solitary_constants(cs, &m)?;
        worst = p.relation_residuals().into_iter().fold(worst, f64::max);
        count += 1;
    }
    Ok(verdict(worst, 1e-12, "max relative residual"))
}

/// `max |rhs(s) + c_s ∂x s|` over ζ and v1 for the periodic wave on `grid`.
pub fn travelling_residual(model: &Model, x0: f64, grid: &Grid2D) -> Result<f64> {
    let p = solitary_constants(exact_solitary_speed(model), model)?.with_offset(x0);
    let s = periodic_solitary_state(&p, 0.0, grid);
    let d = rhs(&s, model, false)?;
    let mut worst = 0.0f64;
    for (f, df) in [(&s.zeta, &d.zeta), (&s.v1, &d.v1), (&s.v2, &d.v2)] {
        let dx = partial_x(f);
        for (a, b) in df.values().iter().zip(dx.values()) {
            worst = worst.max((a + p.cs * b).abs());
        }
    }
    Ok(worst)
}

fn solitary_residual() -> Result<(bool, String)> {
    let m = Model::bbm_bbm(0.5, 0.9)?;
    let coarse = travelling_residual(&m, -10.0, &Grid2D::new(16.0, 128)?)?;
    let fine = travelling_residual(&m, -10.0, &Grid2D::new(16.0, 256)?)?;
    let ratio = fine / coarse;
    Ok((
        ratio <= 1e-3,
        format!("residual N=128 {coarse:.3e}, N=256 {fine:.3e}, ratio {ratio:.3e} (bound 1e-3)"),
    ))
}

fn symmetry() -> Result<(bool, String)> {
    let grid = Grid2D::new(16.0, 64)?;
    let model = Model::bbm_bbm(0.5, 0.9)?;
    let s0 = gaussian_ic(0.1, 5.0, 5.0, &grid)?;
    let mut integ = Integrator::new(&grid, model, ImrConfig::new(0.05)?, false)?;
    let s = integ.run(&s0, 2.0, 40, |_| {})?;
    Ok(verdict(symmetry_defect(&s), 1e-10, "symmetry defect at t = 2"))
}

fn means_and_reversibility() -> Result<(bool, String)> {
    let grid = Grid2D::new(8.0, 32)?;
    let model = Model::bbm_bbm(0.5, 0.9)?;
    let mut rng = StdRng::seed_from_u64(8);
    let s0 = smooth_state(&grid, &mut rng)?;
    let m0 = means(&s0);
    let cfg = ImrConfig::new(0.05)?;
    let mut drift = 0.0f64;
    let mut integ = Integrator::new(&grid, model, cfg, false)?;
    let s1 = integ.run(&s0, 1.0, 1, |tick| {
        let m = means(tick.state);
        drift = drift.max((m.0 - m0.0).abs()).max((m.1 - m0.1).abs()).max((m.2 - m0.2).abs());
    })?;
    let (fwd, _) = integ.step(&s1)?;
    let (back, _) = Integrator::new(&grid, model, cfg.reversed(), false)?.step(&fwd)?;
    let w1 = ModalState::from_state(&s1);
    let composed = ModalState::from_state(&back).max_diff(&w1);
    let ok = drift <= 1e-13 && composed <= 10.0 * cfg.tol;
    Ok((
        ok,
        format!("mean drift {drift:.3e} (bound 1e-13), step/back-step {composed:.3e} (bound {:.0e})", 10.0 * cfg.tol),
    ))
}

fn snapshot_round_trip() -> Result<(bool, String)> {
    let grid = Grid2D::new(3.5, 16)?;
    let mut rng = StdRng::seed_from_u64(9);
    let mut s = smooth_state(&grid, &mut rng)?;
    s.t = 0.1 + 0.2;
    let path = std::env::temp_dir().join(format!("bbwave-validate-{}.bin", std::process::id()));
    write_snapshot(&path, &s)?;
    let back = read_snapshot(&path);
    let _ = std::fs::remove_file(&path);
    let back = back?;
    let same = back.t.to_bits() == s.t.to_bits()
        && s.fields().into_iter().zip(back.fields()).all(|(a, b)| {
            a.values().iter().zip(b.values()).all(|(x, y)| x.to_bits() == y.to_bits())
        });
    Ok((same, if same { "bit-exact".into() } else { "fields differ".into() }))
}

fn temporal_order() -> Result<(bool, String)> {
    let cfg: RunConfig = "L = 8\nN = 64\nT = 0.5\ndt = 0.05\nx0 = 0".parse()?;
    let report = sweep_dt(&cfg, 3)?;
    let mut rates = Vec::new();
    for col in Column::ALL {
        for r in report.rates(col) {
            rates.push(r.ok_or_else(|| Error::Validation("sweep cell failed".into()))?);
        }
    }
    let lo = rates.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = rates.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok((
        lo >= 1.9 && hi <= 2.05,
        format!("rates in [{lo:.3}, {hi:.3}] (bound [1.90, 2.05])"),
    ))
}
