//! Flat `key = value` run descriptions.
//!
//! One key per line, `#` starts a comment, blank lines are ignored. Keys that
//! are absent keep the defaults of [`RunConfig::default`], which describe the
//! solitary-wave convergence run.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::dynamics::State;
use crate::error::{Error, Result};
use crate::model::{derive_physical, Model, ModelCoeffs, ModellingKnobs};
use crate::spectral::Grid2D;
use crate::timestepper::{step_count, ImrConfig};
use crate::waves::{self, SolitaryWaveParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelSpec {
    BbmBbm,
    Knobs { alpha1: f64, alpha2: f64, beta: f64 },
    Explicit { a: f64, b: f64, c: f64, d: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Speed {
    Absolute(f64),
    /// Multiple of the long-wave speed `sqrt(r1 r2)`.
    OverC0(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialCondition {
    Zero,
    Solitary { speed: Speed, x0: f64 },
    Gaussian { amplitude: f64, sx: f64, sy: f64 },
    Line { eps: f64, width: f64, x0: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub gamma: f64,
    pub delta: f64,
    pub model: ModelSpec,
    pub half_width: f64,
    pub n: usize,
    pub final_time: f64,
    pub dt: f64,
    pub ic: InitialCondition,
    pub dealias: bool,
    pub stride: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub out: Option<PathBuf>,
    pub snapshots: Vec<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            gamma: 0.5,
            delta: 0.9,
            model: ModelSpec::BbmBbm,
            half_width: 16.0,
            n: 256,
            final_time: 5.0,
            dt: 2.5e-2,
            ic: InitialCondition::Solitary {
                speed: Speed::OverC0(2.5),
                x0: -10.0,
            },
            dealias: false,
            stride: 1,
            tol: ImrConfig::DEFAULT_TOL,
            max_iter: ImrConfig::DEFAULT_MAX_ITER,
            out: None,
            snapshots: Vec::new(),
        }
    }
}

/// Everything a run needs, built and checked from a [`RunConfig`].
#[derive(Debug, Clone)]
pub struct Prepared {
    pub model: Model,
    pub grid: Grid2D,
    pub imr: ImrConfig,
    pub steps: usize,
    pub initial: State,
    pub solitary: Option<SolitaryWaveParams>,
    /// Step indices at which snapshots are taken, ascending.
    pub snapshot_steps: Vec<usize>,
}

impl Prepared {
    /// The exact solution at time `t`, when the initial data has one.
    pub fn reference(&self, t: f64) -> Option<State> {
        match self.initial_kind() {
            Reference::Zero => Some(State {
                t,
                ..State::zeros(&self.grid)
            }),
            Reference::Wave(p) => Some(waves::periodic_solitary_state(&p, t, &self.grid)),
            Reference::None => None,
        }
    }

    fn initial_kind(&self) -> Reference {
        match self.solitary {
            Some(p) => Reference::Wave(p),
            None if self.initial.l2_norm() == 0.0 => Reference::Zero,
            None => Reference::None,
        }
    }
}

enum Reference {
    Zero,
    Wave(SolitaryWaveParams),
    None,
}

const KEYS: &[&str] = &[
    "gamma", "delta", "model", "alpha1", "alpha2", "beta", "a", "b", "c", "d", "L", "N", "T", "dt", "ic",
    "cs", "cs_over_c0", "x0", "amplitude", "sx", "sy", "eps", "B", "dealias", "stride", "tol", "max_iter",
    "out", "snapshots",
];

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config("config", format!("cannot read {}: {e}", path.display())))?;
        text.parse()
    }

    pub fn prepare(&self) -> Result<Prepared> {
        let phys = derive_physical(self.gamma, self.delta).map_err(|e| Error::config("gamma/delta", e.to_string()))?;
        let coeffs = match self.model {
            ModelSpec::BbmBbm => crate::model::derive_coeffs(&crate::model::bbm_bbm_knobs(&phys), &phys),
            ModelSpec::Knobs { alpha1, alpha2, beta } => {
                let knobs = ModellingKnobs::new(alpha1, alpha2, beta).map_err(|e| Error::config("alpha1/alpha2/beta", e.to_string()))?;
                crate::model::derive_coeffs(&knobs, &phys)
            }
            ModelSpec::Explicit { a, b, c, d } => ModelCoeffs::explicit(a, b, c, d, &phys),
        };
        let model = Model::new(phys, coeffs);
        if model.class() == crate::model::SystemClass::Unsupported {
            return Err(Error::config("model", Error::Unsupported(model.class()).to_string()));
        }
        let grid = Grid2D::new(self.half_width, self.n).map_err(|e| Error::config("N/L", e.to_string()))?;
        let imr = ImrConfig::with(self.dt, self.tol, self.max_iter).map_err(|e| Error::config("dt/tol/max_iter", e.to_string()))?;
        if !(self.final_time >= 0.0) {
            return Err(Error::config("T", format!("must be non-negative, got {}", self.final_time)));
        }
        let steps = step_count(self.final_time, self.dt).map_err(|e| Error::config("T", e.to_string()))?;
        if self.stride == 0 {
            return Err(Error::config("stride", "must be at least 1"));
        }
        let mut snapshot_steps = Vec::with_capacity(self.snapshots.len());
        for &t in &self.snapshots {
            let m = step_count(t, self.dt).map_err(|_| {
                Error::config("snapshots", format!("time {t} is not a non-negative multiple of dt = {}", self.dt))
            })?;
            if m > steps {
                return Err(Error::config("snapshots", format!("time {t} is past T = {}", self.final_time)));
            }
            snapshot_steps.push(m);
        }
        snapshot_steps.sort_unstable();
        snapshot_steps.dedup();

        let mut solitary = None;
        let initial = match self.ic {
            InitialCondition::Zero => State::zeros(&grid),
            InitialCondition::Solitary { speed, x0 } => {
                let cs = match speed {
                    Speed::Absolute(cs) => cs,
                    Speed::OverC0(ratio) => ratio * phys.long_wave_speed(),
                };
                let p = waves::solitary_constants(cs, &model)
                    .map_err(|e| Error::config("cs", e.to_string()))?
                    .with_offset(x0);
                solitary = Some(p);
                waves::periodic_solitary_state(&p, 0.0, &grid)
            }
            InitialCondition::Gaussian { amplitude, sx, sy } => {
                waves::gaussian_ic(amplitude, sx, sy, &grid).map_err(|e| Error::config("sx/sy", e.to_string()))?
            }
            InitialCondition::Line { eps, width, x0 } => {
                waves::perturbed_line_ic(eps, width, x0, &grid).map_err(|e| Error::config("B/eps/L", e.to_string()))?
            }
        };
        Ok(Prepared {
            model,
            grid,
            imr,
            steps,
            initial,
            solitary,
            snapshot_steps,
        })
    }

    /// Inverse of parsing: every key, one per line.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("gamma", self.gamma.to_string());
        kv("delta", self.delta.to_string());
        match self.model {
            ModelSpec::BbmBbm => kv("model", "bbm_bbm".into()),
            ModelSpec::Knobs { alpha1, alpha2, beta } => {
                kv("model", "knobs".into());
                kv("alpha1", alpha1.to_string());
                kv("alpha2", alpha2.to_string());
                kv("beta", beta.to_string());
            }
            ModelSpec::Explicit { a, b, c, d } => {
                kv("model", "explicit".into());
                kv("a", a.to_string());
                kv("b", b.to_string());
                kv("c", c.to_string());
                kv("d", d.to_string());
            }
        }
        kv("L", self.half_width.to_string());
        kv("N", self.n.to_string());
        kv("T", self.final_time.to_string());
        kv("dt", self.dt.to_string());
        match self.ic {
            InitialCondition::Zero => kv("ic", "zero".into()),
            InitialCondition::Solitary { speed, x0 } => {
                kv("ic", "solitary".into());
                match speed {
                    Speed::Absolute(cs) => kv("cs", cs.to_string()),
                    Speed::OverC0(r) => kv("cs_over_c0", r.to_string()),
                }
                kv("x0", x0.to_string());
            }
            InitialCondition::Gaussian { amplitude, sx, sy } => {
                kv("ic", "gaussian".into());
                kv("amplitude", amplitude.to_string());
                kv("sx", sx.to_string());
                kv("sy", sy.to_string());
            }
            InitialCondition::Line { eps, width, x0 } => {
                kv("ic", "line".into());
                kv("eps", eps.to_string());
                kv("B", width.to_string());
                kv("x0", x0.to_string());
            }
        }
        kv("dealias", self.dealias.to_string());
        kv("stride", self.stride.to_string());
        kv("tol", self.tol.to_string());
        kv("max_iter", self.max_iter.to_string());
        if let Some(out) = &self.out {
            kv("out", out.display().to_string());
        }
        if !self.snapshots.is_empty() {
            kv("snapshots", join(&self.snapshots));
        }
        s
    }
}

fn join(ts: &[f64]) -> String {
    ts.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

/// Comma-separated times, as used by the `snapshots` key.
pub fn parse_times(field: &str, text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| parse_value::<f64>(field, t))
        .collect()
}

fn parse_value<T: FromStr>(field: &str, text: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    text.parse::<T>()
        .map_err(|e| Error::config(field, format!("cannot parse {text:?}: {e}")))
}

fn parse_bool(field: &str, text: &str) -> Result<bool> {
    match text {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(Error::config(field, format!("expected true or false, got {text:?}"))),
    }
}

impl FromStr for RunConfig {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut entries: Vec<(&str, &str)> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::config(
                    format!("line {}", lineno + 1),
                    format!("expected key = value, got {line:?}"),
                ));
            };
            let (k, v) = (k.trim(), v.trim());
            if !KEYS.contains(&k) {
                return Err(Error::config(k, "unknown key"));
            }
            if entries.iter().any(|(seen, _)| *seen == k) {
                return Err(Error::config(k, "given more than once"));
            }
            entries.push((k, v));
        }
        let get = |k: &str| entries.iter().find(|(seen, _)| *seen == k).map(|(_, v)| *v);
        let num = |k: &str, default: f64| -> Result<f64> {
            match get(k) {
                Some(v) => {
                    let x: f64 = parse_value(k, v)?;
                    if x.is_finite() {
                        Ok(x)
                    } else {
                        Err(Error::config(k, "must be finite"))
                    }
                }
                None => Ok(default),
            }
        };
        let required = |k: &str, family: &str| -> Result<f64> {
            if get(k).is_none() {
                return Err(Error::config(k, format!("required for {family}")));
            }
            num(k, 0.0)
        };
        let unused = |keys: &[&str], family: &str| -> Result<()> {
            match keys.iter().find(|k| get(k).is_some()) {
                Some(k) => Err(Error::config(*k, format!("not used by {family}"))),
                None => Ok(()),
            }
        };

        let d = RunConfig::default();
        let model = match get("model").unwrap_or("bbm_bbm") {
            "bbm_bbm" => {
                unused(&["alpha1", "alpha2", "beta", "a", "b", "c", "d"], "model = bbm_bbm")?;
                ModelSpec::BbmBbm
            }
            "knobs" => {
                unused(&["a", "b", "c", "d"], "model = knobs")?;
                ModelSpec::Knobs {
                    alpha1: required("alpha1", "model = knobs")?,
                    alpha2: required("alpha2", "model = knobs")?,
                    beta: required("beta", "model = knobs")?,
                }
            }
            "explicit" => {
                unused(&["alpha1", "alpha2", "beta"], "model = explicit")?;
                ModelSpec::Explicit {
                    a: required("a", "model = explicit")?,
                    b: required("b", "model = explicit")?,
                    c: required("c", "model = explicit")?,
                    d: required("d", "model = explicit")?,
                }
            }
            other => {
                return Err(Error::config(
                    "model",
                    format!("expected bbm_bbm, knobs or explicit, got {other:?}"),
                ))
            }
        };

        let solitary_keys = ["cs", "cs_over_c0"];
        let gaussian_keys = ["amplitude", "sx", "sy"];
        let line_keys = ["eps", "B"];
        let ic = match get("ic").unwrap_or("solitary") {
            "zero" => {
                unused(&[&solitary_keys[..], &gaussian_keys, &line_keys, &["x0"]].concat(), "ic = zero")?;
                InitialCondition::Zero
            }
            "solitary" => {
                unused(&[&gaussian_keys[..], &line_keys].concat(), "ic = solitary")?;
                let speed = match (get("cs"), get("cs_over_c0")) {
                    (Some(_), Some(_)) => return Err(Error::config("cs", "give either cs or cs_over_c0, not both")),
                    (Some(_), None) => Speed::Absolute(num("cs", 0.0)?),
                    (None, _) => Speed::OverC0(num("cs_over_c0", 2.5)?),
                };
                InitialCondition::Solitary {
                    speed,
                    x0: num("x0", -10.0)?,
                }
            }
            "gaussian" => {
                unused(&[&solitary_keys[..], &line_keys, &["x0"]].concat(), "ic = gaussian")?;
                let g = InitialCondition::Gaussian {
                    amplitude: num("amplitude", 0.1)?,
                    sx: num("sx", 5.0)?,
                    sy: num("sy", 5.0)?,
                };
                if let InitialCondition::Gaussian { sx, sy, .. } = g {
                    if !(sx > 0.0) {
                        return Err(Error::config("sx", "must be positive"));
                    }
                    if !(sy > 0.0) {
                        return Err(Error::config("sy", "must be positive"));
                    }
                }
                g
            }
            "line" => {
                unused(&[&solitary_keys[..], &gaussian_keys].concat(), "ic = line")?;
                let width = num("B", 5.0)?;
                if !(width > 0.0) {
                    return Err(Error::config("B", "must be positive"));
                }
                InitialCondition::Line {
                    eps: num("eps", 0.005)?,
                    width,
                    x0: num("x0", 0.0)?,
                }
            }
            other => {
                return Err(Error::config(
                    "ic",
                    format!("expected solitary, gaussian, line or zero, got {other:?}"),
                ))
            }
        };

        let n = match get("N") {
            Some(v) => parse_value::<usize>("N", v)?,
            None => d.n,
        };
        if n % 2 != 0 {
            return Err(Error::config("N", format!("must be even, got {n}")));
        }
        let int = |k: &str, default: usize| -> Result<usize> {
            get(k).map_or(Ok(default), |v| parse_value(k, v))
        };
        let cfg = RunConfig {
            gamma: num("gamma", d.gamma)?,
            delta: num("delta", d.delta)?,
            model,
            half_width: num("L", d.half_width)?,
            n,
            final_time: num("T", d.final_time)?,
            dt: num("dt", d.dt)?,
            ic,
            dealias: get("dealias").map_or(Ok(false), |v| parse_bool("dealias", v))?,
            stride: int("stride", d.stride)?,
            tol: num("tol", d.tol)?,
            max_iter: int("max_iter", d.max_iter)?,
            out: get("out").map(PathBuf::from),
            snapshots: get("snapshots").map_or(Ok(Vec::new()), |v| parse_times("snapshots", v))?,
        };
        if !(cfg.half_width > 0.0) {
            return Err(Error::config("L", "must be positive"));
        }
        if !(cfg.dt > 0.0) {
            return Err(Error::config("dt", "must be positive"));
        }
        if !(cfg.final_time >= 0.0) {
            return Err(Error::config("T", "must be non-negative"));
        }
        step_count(cfg.final_time, cfg.dt).map_err(|e| Error::config("T", e.to_string()))?;
        if cfg.stride == 0 {
            return Err(Error::config("stride", "must be at least 1"));
        }
        Ok(cfg)
    }
}
