//! Flat key-value run configuration.
//!
//! The file format is dotted keys, one `key = value` per line, `#` comments,
//! decimal numbers at full double precision. Every key has a default, so an
//! empty file is the reference transit run. `echo` regenerates the file in
//! canonical order and parsing the echo reproduces the config exactly; that
//! round trip is what makes a persisted run reproducible from its own
//! output directory.

use std::collections::HashMap;
use std::fmt::Write as _;

use qarrive::dynamics::{PropagatorConfig, Scheme};
use qarrive::operators::Potential;
use qarrive::states::gaussian_packet;
use qarrive::{DetectorSpec, Grid1D, Region, WaveFunction};

#[derive(Debug, Clone, PartialEq)]
pub enum PotentialSpec {
    Zero,
    Step { height: f64, x_edge: f64 },
    GaussianBarrier { height: f64, center: f64, width: f64 },
}

impl PotentialSpec {
    fn kind(&self) -> &'static str {
        match self {
            PotentialSpec::Zero => "zero",
            PotentialSpec::Step { .. } => "step",
            PotentialSpec::GaussianBarrier { .. } => "gaussian_barrier",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DetectorChoice {
    HalfLine { x_d: f64 },
    Interval { a: f64, b: f64 },
}

impl DetectorChoice {
    fn kind(&self) -> &'static str {
        match self {
            DetectorChoice::HalfLine { .. } => "half_line",
            DetectorChoice::Interval { .. } => "interval",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParameter {
    K0,
    Sigma,
    XD,
    Dt,
    Dx,
}

impl SweepParameter {
    pub fn key(self) -> &'static str {
        match self {
            SweepParameter::K0 => "k0",
            SweepParameter::Sigma => "sigma",
            SweepParameter::XD => "x_d",
            SweepParameter::Dt => "dt",
            SweepParameter::Dx => "dx",
        }
    }

    fn from_key(s: &str) -> Result<Self, String> {
        match s {
            "k0" => Ok(SweepParameter::K0),
            "sigma" => Ok(SweepParameter::Sigma),
            "x_d" => Ok(SweepParameter::XD),
            "dt" => Ok(SweepParameter::Dt),
            "dx" => Ok(SweepParameter::Dx),
            other => Err(format!(
                "sweep.parameter must be one of k0, sigma, x_d, dt, dx; got {other}"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub x_min: f64,
    pub x_max: f64,
    pub n: usize,
    pub mass: f64,
    pub potential: PotentialSpec,
    pub x0: f64,
    pub sigma: f64,
    pub k0: f64,
    pub detector: DetectorChoice,
    pub dt: f64,
    pub t_final: f64,
    pub record_every: usize,
    pub out_dir: String,
    pub sweep: Option<SweepSpec>,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            x_min: -40.0,
            x_max: 40.0,
            n: 1601,
            mass: 1.0,
            potential: PotentialSpec::Zero,
            x0: -10.0,
            sigma: 1.0,
            k0: 2.0,
            detector: DetectorChoice::HalfLine { x_d: 5.0 },
            dt: 0.005,
            t_final: 15.0,
            record_every: 5,
            out_dir: "out".into(),
            sweep: None,
        }
    }
}

const KEYS: &[&str] = &[
    "grid.x_min",
    "grid.x_max",
    "grid.n",
    "mass",
    "potential.kind",
    "potential.height",
    "potential.x_edge",
    "potential.center",
    "potential.width",
    "packet.x0",
    "packet.sigma",
    "packet.k0",
    "detector.kind",
    "detector.x_d",
    "detector.a",
    "detector.b",
    "propagation.dt",
    "propagation.t_final",
    "propagation.record_every",
    "output.dir",
    "sweep.parameter",
    "sweep.values",
];

fn parse_f64(key: &str, raw: &str) -> Result<f64, String> {
    let v: f64 = raw
        .parse()
        .map_err(|_| format!("{key}: expected a number, got {raw:?}"))?;
    if !v.is_finite() {
        return Err(format!("{key}: must be finite, got {raw}"));
    }
    Ok(v)
}

fn parse_usize(key: &str, raw: &str) -> Result<usize, String> {
    raw.parse()
        .map_err(|_| format!("{key}: expected a non-negative integer, got {raw:?}"))
}

struct KeyBag {
    map: HashMap<String, String>,
}

impl KeyBag {
    fn take(&mut self, key: &str) -> Option<String> {
        self.map.remove(key)
    }

    fn take_f64(&mut self, key: &str, default: f64) -> Result<f64, String> {
        match self.take(key) {
            Some(raw) => parse_f64(key, &raw),
            None => Ok(default),
        }
    }

    fn require_f64(&mut self, key: &str, context: &str) -> Result<f64, String> {
        match self.take(key) {
            Some(raw) => parse_f64(key, &raw),
            None => Err(format!("{context} requires {key}")),
        }
    }
}

impl SimConfig {
    pub fn parse(text: &str) -> Result<SimConfig, String> {
        let mut map = HashMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(format!("line {}: expected key = value", idx + 1));
            };
            let key = k.trim();
            let val = v.trim();
            if !KEYS.contains(&key) {
                return Err(format!("line {}: unknown key {key:?}", idx + 1));
            }
            if map.insert(key.to_string(), val.to_string()).is_some() {
                return Err(format!("line {}: duplicate key {key:?}", idx + 1));
            }
        }
        let mut bag = KeyBag { map };
        let dflt = SimConfig::default();

        let potential = match bag
            .take("potential.kind")
            .unwrap_or_else(|| dflt.potential.kind().into())
            .as_str()
        {
            "zero" => PotentialSpec::Zero,
            "step" => PotentialSpec::Step {
                height: bag.require_f64("potential.height", "potential.kind = step")?,
                x_edge: bag.require_f64("potential.x_edge", "potential.kind = step")?,
            },
            "gaussian_barrier" => PotentialSpec::GaussianBarrier {
                height: bag.require_f64("potential.height", "potential.kind = gaussian_barrier")?,
                center: bag.require_f64("potential.center", "potential.kind = gaussian_barrier")?,
                width: bag.require_f64("potential.width", "potential.kind = gaussian_barrier")?,
            },
            other => {
                return Err(format!(
                    "potential.kind must be zero, step or gaussian_barrier; got {other}"
                ))
            }
        };

        let default_x_d = match dflt.detector {
            DetectorChoice::HalfLine { x_d } => x_d,
            DetectorChoice::Interval { .. } => unreachable!("default detector is a half line"),
        };
        let detector = match bag
            .take("detector.kind")
            .unwrap_or_else(|| dflt.detector.kind().into())
            .as_str()
        {
            "half_line" => DetectorChoice::HalfLine {
                x_d: bag.take_f64("detector.x_d", default_x_d)?,
            },
            "interval" => DetectorChoice::Interval {
                a: bag.require_f64("detector.a", "detector.kind = interval")?,
                b: bag.require_f64("detector.b", "detector.kind = interval")?,
            },
            other => {
                return Err(format!(
                    "detector.kind must be half_line or interval; got {other}"
                ))
            }
        };

        let sweep = match (bag.take("sweep.parameter"), bag.take("sweep.values")) {
            (None, None) => None,
            (Some(param), Some(values)) => {
                let parameter = SweepParameter::from_key(&param)?;
                let parsed = values
                    .split(',')
                    .map(|s| parse_f64("sweep.values", s.trim()))
                    .collect::<Result<Vec<f64>, String>>()?;
                if parsed.is_empty() {
                    return Err("sweep.values: need at least one value".into());
                }
                Some(SweepSpec {
                    parameter,
                    values: parsed,
                })
            }
            _ => return Err("sweep.parameter and sweep.values go together".into()),
        };

        let cfg = SimConfig {
            x_min: bag.take_f64("grid.x_min", dflt.x_min)?,
            x_max: bag.take_f64("grid.x_max", dflt.x_max)?,
            n: match bag.take("grid.n") {
                Some(raw) => parse_usize("grid.n", &raw)?,
                None => dflt.n,
            },
            mass: bag.take_f64("mass", dflt.mass)?,
            potential,
            x0: bag.take_f64("packet.x0", dflt.x0)?,
            sigma: bag.take_f64("packet.sigma", dflt.sigma)?,
            k0: bag.take_f64("packet.k0", dflt.k0)?,
            detector,
            dt: bag.take_f64("propagation.dt", dflt.dt)?,
            t_final: bag.take_f64("propagation.t_final", dflt.t_final)?,
            record_every: match bag.take("propagation.record_every") {
                Some(raw) => parse_usize("propagation.record_every", &raw)?,
                None => dflt.record_every,
            },
            out_dir: bag.take("output.dir").unwrap_or_else(|| dflt.out_dir.clone()),
            sweep,
        };

        if let Some(stray) = bag.map.keys().next() {
            return Err(format!(
                "{stray} does not apply to the configured potential.kind / detector.kind"
            ));
        }
        Ok(cfg)
    }

    /// Canonical rendering; `parse(echo()) == self` exactly.
    pub fn echo(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "grid.x_min = {}", self.x_min);
        let _ = writeln!(s, "grid.x_max = {}", self.x_max);
        let _ = writeln!(s, "grid.n = {}", self.n);
        let _ = writeln!(s, "mass = {}", self.mass);
        let _ = writeln!(s, "potential.kind = {}", self.potential.kind());
        match self.potential {
            PotentialSpec::Zero => {}
            PotentialSpec::Step { height, x_edge } => {
                let _ = writeln!(s, "potential.height = {height}");
                let _ = writeln!(s, "potential.x_edge = {x_edge}");
            }
            PotentialSpec::GaussianBarrier {
                height,
                center,
                width,
            } => {
                let _ = writeln!(s, "potential.height = {height}");
                let _ = writeln!(s, "potential.center = {center}");
                let _ = writeln!(s, "potential.width = {width}");
            }
        }
        let _ = writeln!(s, "packet.x0 = {}", self.x0);
        let _ = writeln!(s, "packet.sigma = {}", self.sigma);
        let _ = writeln!(s, "packet.k0 = {}", self.k0);
        let _ = writeln!(s, "detector.kind = {}", self.detector.kind());
        match self.detector {
            DetectorChoice::HalfLine { x_d } => {
                let _ = writeln!(s, "detector.x_d = {x_d}");
            }
            DetectorChoice::Interval { a, b } => {
                let _ = writeln!(s, "detector.a = {a}");
                let _ = writeln!(s, "detector.b = {b}");
            }
        }
        let _ = writeln!(s, "propagation.dt = {}", self.dt);
        let _ = writeln!(s, "propagation.t_final = {}", self.t_final);
        let _ = writeln!(s, "propagation.record_every = {}", self.record_every);
        let _ = writeln!(s, "output.dir = {}", self.out_dir);
        if let Some(sweep) = &self.sweep {
            let _ = writeln!(s, "sweep.parameter = {}", sweep.parameter.key());
            let values = sweep
                .values
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(", ");
            let _ = writeln!(s, "sweep.values = {values}");
        }
        s
    }

    /// Fail-fast materialization of every run object. Nothing here touches
    /// the filesystem, so a bad config dies before any output exists.
    pub fn build(&self) -> qarrive::Result<Problem> {
        if !self.mass.is_finite() || self.mass <= 0.0 {
            return Err(qarrive::Error::InvalidParameter(format!(
                "mass must be positive, got {}",
                self.mass
            )));
        }
        if !self.t_final.is_finite() || self.t_final <= 0.0 {
            return Err(qarrive::Error::InvalidParameter(format!(
                "propagation.t_final must be positive, got {}",
                self.t_final
            )));
        }
        let grid = Grid1D::new(self.x_min, self.x_max, self.n)?;
        let spec = match self.detector {
            DetectorChoice::HalfLine { x_d } => DetectorSpec::HalfLine { x_d },
            DetectorChoice::Interval { a, b } => DetectorSpec::Interval { a, b },
        };
        let region = Region::new(grid, spec)?;
        let potential = match self.potential {
            PotentialSpec::Zero => Potential::zero(grid),
            PotentialSpec::Step { height, x_edge } => Potential::step(grid, height, x_edge)?,
            PotentialSpec::GaussianBarrier {
                height,
                center,
                width,
            } => Potential::gaussian_barrier(grid, height, center, width)?,
        };
        let psi0 = gaussian_packet(grid, self.x0, self.sigma, self.k0)?;
        let run = PropagatorConfig {
            dt: self.dt,
            n_steps: (self.t_final / self.dt).round() as usize,
            record_every: self.record_every,
            scheme: Scheme::CrankNicolson,
        };
        run.validate()?;
        Ok(Problem {
            grid,
            region,
            potential,
            psi0,
            run,
            mass: self.mass,
        })
    }

    /// Sub-config for one swept value: the parameter applied, the sweep
    /// stripped, the output directory pointed at its own subdirectory.
    pub fn sweep_instance(
        &self,
        parameter: SweepParameter,
        value: f64,
        parent_dir: &str,
    ) -> Result<SimConfig, String> {
        let mut sub = self.clone();
        sub.sweep = None;
        sub.out_dir = format!("{parent_dir}/{}={value}", parameter.key());
        match parameter {
            SweepParameter::K0 => sub.k0 = value,
            SweepParameter::Sigma => sub.sigma = value,
            SweepParameter::XD => match sub.detector {
                DetectorChoice::HalfLine { .. } => {
                    sub.detector = DetectorChoice::HalfLine { x_d: value };
                }
                DetectorChoice::Interval { .. } => {
                    return Err("sweeping x_d requires detector.kind = half_line".into());
                }
            },
            SweepParameter::Dt => sub.dt = value,
            SweepParameter::Dx => {
                if !(value.is_finite() && value > 0.0) {
                    return Err(format!("swept dx must be positive, got {value}"));
                }
                let span = self.x_max - self.x_min;
                let n = (span / value).round() as usize + 1;
                if n < 8 {
                    return Err(format!("swept dx = {value} leaves only {n} grid points"));
                }
                sub.n = n;
            }
        }
        Ok(sub)
    }
}

/// Everything a run needs, already validated.
pub struct Problem {
    pub grid: Grid1D,
    pub region: Region,
    pub potential: Potential,
    pub psi0: WaveFunction,
    pub run: PropagatorConfig,
    pub mass: f64,
}
