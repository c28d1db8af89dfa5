//! Flat `key = value` run configuration.
//!
//! Lines starting with `#` are comments. Lists are comma separated. Unknown
//! keys are rejected.

use std::collections::BTreeMap;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::{Domain, RadialCurve};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Integrator {
    /// Integrating-factor RK4 with the exact linear disk rates.
    Ifrk4,
    /// Classical explicit RK4.
    Rk4,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DtPolicy {
    Adaptive,
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub domain: Domain,
    /// Length scale: radius of the disk with the target area.
    pub radius: f64,
    pub n_modes: usize,
    pub modes: Vec<usize>,
    /// Mode amplitudes in units of `radius`.
    pub amps: Vec<f64>,
    /// Mode phases; `None` draws them from `seed`.
    pub phases: Option<Vec<f64>>,
    pub seed: u64,
    pub integrator: Integrator,
    pub dt_policy: DtPolicy,
    /// Largest step, in units of `radius^3`.
    pub dt0: f64,
    /// End time, in units of `radius^3`.
    pub t_end: f64,
    /// Stop once `E` drops below this value (absolute; 0 disables).
    pub e_stop: f64,
    pub max_steps: usize,
    /// Accuracy factor of the `dt = c_acc E / D` law.
    pub c_acc: f64,
    /// Safety factor on the explicit stability bound.
    pub c_cfl: f64,
    pub k_out: usize,
    pub k_rec: usize,
    /// `H` every `k_h`-th record; 0 disables `H`.
    pub k_h: usize,
    pub grid: usize,
    /// Exponential filter strength; 0 disables.
    pub filter: f64,
    pub filter_order: u32,
    pub delta: f64,
    pub resolution_abort: f64,
    pub out_dir: PathBuf,
    pub trajectory: String,
    pub events: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            domain: Domain::Plane,
            radius: 1.0,
            n_modes: 64,
            modes: Vec::new(),
            amps: Vec::new(),
            phases: Some(Vec::new()),
            seed: 0,
            integrator: Integrator::Ifrk4,
            dt_policy: DtPolicy::Adaptive,
            dt0: 1e-3,
            t_end: 1.0,
            e_stop: 0.0,
            max_steps: 1_000_000,
            c_acc: 0.01,
            c_cfl: 0.5,
            k_out: 1,
            k_rec: 10,
            k_h: 5,
            grid: 512,
            filter: 0.0,
            filter_order: 16,
            delta: 0.05,
            resolution_abort: 1e-8,
            out_dir: PathBuf::from("."),
            trajectory: "trajectory.csv".into(),
            events: "run.jsonl".into(),
        }
    }
}

pub const KEYS: &[&str] = &[
    "domain", "L", "R", "N", "modes", "amps", "phases", "seed", "integrator", "dt_policy", "dt0", "t_end",
    "e_stop", "max_steps", "c_acc", "c_cfl", "k_out", "k_rec", "k_h", "grid", "filter", "filter_order", "delta",
    "resolution_abort", "out_dir", "trajectory", "events",
];

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    v.trim().parse::<f64>().map_err(|e| Error::Config(format!("{key}: {e}")))
}

fn parse_usize(key: &str, v: &str) -> Result<usize> {
    v.trim().parse::<usize>().map_err(|e| Error::Config(format!("{key}: {e}")))
}

fn parse_list<T>(key: &str, v: &str, f: impl Fn(&str, &str) -> Result<T>) -> Result<Vec<T>> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(|s| f(key, s)).collect()
}

impl RunConfig {
    /// Parses `key = value` text; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
            let k = k.trim();
            if !KEYS.contains(&k) {
                return Err(Error::Config(format!("line {}: unknown key '{k}'", lineno + 1)));
            }
            if map.insert(k.to_string(), v.trim().to_string()).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key '{k}'", lineno + 1)));
            }
        }
        Self::from_map(&map)
    }

    pub fn from_map(map: &BTreeMap<String, String>) -> Result<Self> {
        let mut c = RunConfig::default();
        let get = |k: &str| map.get(k).map(String::as_str);
        let half_edge = get("L").map(|v| parse_f64("L", v)).transpose()?;
        if let Some(v) = get("R") {
            c.radius = parse_f64("R", v)?;
        }
        c.domain = match get("domain").unwrap_or("plane") {
            "plane" => Domain::Plane,
            "torus" => Domain::Torus {
                half_edge: half_edge.unwrap_or(8.0 * c.radius),
            },
            other => return Err(Error::Config(format!("domain: unknown value '{other}'"))),
        };
        if let Some(v) = get("N") {
            c.n_modes = parse_usize("N", v)?;
        }
        if let Some(v) = get("modes") {
            c.modes = parse_list("modes", v, parse_usize)?;
        }
        if let Some(v) = get("amps") {
            c.amps = parse_list("amps", v, parse_f64)?;
        }
        match get("phases") {
            Some("random") => c.phases = None,
            Some(v) => c.phases = Some(parse_list("phases", v, parse_f64)?),
            None => c.phases = Some(Vec::new()),
        }
        if let Some(v) = get("seed") {
            c.seed = v.trim().parse().map_err(|e| Error::Config(format!("seed: {e}")))?;
        }
        if let Some(v) = get("integrator") {
            c.integrator = match v {
                "ifrk4" => Integrator::Ifrk4,
                "rk4" => Integrator::Rk4,
                other => return Err(Error::Config(format!("integrator: unknown value '{other}'"))),
            };
        }
        if let Some(v) = get("dt_policy") {
            c.dt_policy = match v {
                "adaptive" => DtPolicy::Adaptive,
                "fixed" => DtPolicy::Fixed,
                other => return Err(Error::Config(format!("dt_policy: unknown value '{other}'"))),
            };
        }
        macro_rules! float {
            ($key:literal, $field:ident) => {
                if let Some(v) = get($key) {
                    c.$field = parse_f64($key, v)?;
                }
            };
        }
        macro_rules! int {
            ($key:literal, $field:ident) => {
                if let Some(v) = get($key) {
                    c.$field = parse_usize($key, v)?;
                }
            };
        }
        float!("dt0", dt0);
        float!("t_end", t_end);
        float!("e_stop", e_stop);
        float!("c_acc", c_acc);
        float!("c_cfl", c_cfl);
        float!("filter", filter);
        float!("delta", delta);
        float!("resolution_abort", resolution_abort);
        int!("max_steps", max_steps);
        int!("k_out", k_out);
        int!("k_rec", k_rec);
        int!("k_h", k_h);
        int!("grid", grid);
        if let Some(v) = get("filter_order") {
            c.filter_order = parse_usize("filter_order", v)? as u32;
        }
        if let Some(v) = get("out_dir") {
            c.out_dir = PathBuf::from(v);
        }
        if let Some(v) = get("trajectory") {
            c.trajectory = v.to_string();
        }
        if let Some(v) = get("events") {
            c.events = v.to_string();
        }
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.radius > 0.0) {
            return bad(format!("R must be positive, got {}", self.radius));
        }
        if self.n_modes < 16 || !self.n_modes.is_power_of_two() {
            return bad(format!("N must be a power of two >= 16, got {}", self.n_modes));
        }
        if self.modes.len() != self.amps.len() {
            return bad(format!("{} modes but {} amps", self.modes.len(), self.amps.len()));
        }
        if let Some(p) = &self.phases {
            if !p.is_empty() && p.len() != self.modes.len() {
                return bad(format!("{} modes but {} phases", self.modes.len(), p.len()));
            }
        }
        if let Some(&k) = self.modes.iter().find(|&&k| k == 0 || k >= self.n_modes) {
            return bad(format!("mode {k} outside 1..{}", self.n_modes));
        }
        for (name, v) in [("dt0", self.dt0), ("t_end", self.t_end), ("c_acc", self.c_acc), ("c_cfl", self.c_cfl)] {
            if !(v > 0.0) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if self.k_out == 0 || self.k_rec == 0 {
            return bad("k_out and k_rec must be positive".into());
        }
        if self.k_h > 0 && self.grid < 8 {
            return bad(format!("grid {} too small", self.grid));
        }
        if let Domain::Torus { half_edge } = self.domain {
            if !(half_edge > 0.0) {
                return bad(format!("L must be positive, got {half_edge}"));
            }
        }
        Ok(())
    }

    /// Canonical `key = value` rendering; parsing it gives back `self`.
    pub fn canonical(&self) -> String {
        let list = |v: &[f64]| v.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(", ");
        let mut s = String::new();
        match self.domain {
            Domain::Plane => s.push_str("domain = plane\n"),
            Domain::Torus { half_edge } => s.push_str(&format!("domain = torus\nL = {half_edge:e}\n")),
        }
        s.push_str(&format!("R = {:e}\nN = {}\n", self.radius, self.n_modes));
        let modes: Vec<String> = self.modes.iter().map(|k| k.to_string()).collect();
        s.push_str(&format!("modes = {}\namps = {}\n", modes.join(", "), list(&self.amps)));
        match &self.phases {
            None => s.push_str("phases = random\n"),
            Some(p) => s.push_str(&format!("phases = {}\n", list(p))),
        }
        let integrator = match self.integrator {
            Integrator::Ifrk4 => "ifrk4",
            Integrator::Rk4 => "rk4",
        };
        let policy = match self.dt_policy {
            DtPolicy::Adaptive => "adaptive",
            DtPolicy::Fixed => "fixed",
        };
        s.push_str(&format!(
            "seed = {}\nintegrator = {integrator}\ndt_policy = {policy}\ndt0 = {:e}\nt_end = {:e}\ne_stop = {:e}\n",
            self.seed, self.dt0, self.t_end, self.e_stop
        ));
        s.push_str(&format!(
            "max_steps = {}\nc_acc = {:e}\nc_cfl = {:e}\nk_out = {}\nk_rec = {}\nk_h = {}\ngrid = {}\n",
            self.max_steps, self.c_acc, self.c_cfl, self.k_out, self.k_rec, self.k_h, self.grid
        ));
        s.push_str(&format!(
            "filter = {:e}\nfilter_order = {}\ndelta = {:e}\nresolution_abort = {:e}\n",
            self.filter, self.filter_order, self.delta, self.resolution_abort
        ));
        s.push_str(&format!(
            "out_dir = {}\ntrajectory = {}\nevents = {}\n",
            self.out_dir.display(),
            self.trajectory,
            self.events
        ));
        s
    }

    /// SHA-256 of the physics-relevant canonical rendering (output paths excluded).
    pub fn hash(&self) -> String {
        let text: String = self
            .canonical()
            .lines()
            .filter(|l| !(l.starts_with("out_dir") || l.starts_with("trajectory") || l.starts_with("events")))
            .map(|l| format!("{l}\n"))
            .collect();
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Mode phases, drawing random ones from the seed when requested.
    pub fn resolved_phases(&self) -> Vec<f64> {
        match &self.phases {
            Some(p) if !p.is_empty() => p.clone(),
            Some(_) => vec![0.0; self.modes.len()],
            None => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                self.modes.iter().map(|_| rng.gen_range(0.0..2.0 * std::f64::consts::PI)).collect()
            }
        }
    }

    /// Initial curve `R + sum amp_j R cos(k_j (phi - phase_j))`, with the zero
    /// mode adjusted so that the enclosed area is `pi R^2`.
    pub fn initial_curve(&self) -> Result<RadialCurve> {
        let phases = self.resolved_phases();
        let r = self.radius;
        let modes: Vec<(usize, f64, f64)> =
            self.modes.iter().zip(&self.amps).zip(&phases).map(|((&k, &a), &p)| (k, a * r, p)).collect();
        RadialCurve::from_modes(r, self.n_modes, &modes, self.domain)?
            .with_target_area()
            .map_err(|e| Error::Config(e.to_string()))
    }

    /// Steps, end time and similar in absolute units (`radius^3` scaling).
    pub fn time_scale(&self) -> f64 {
        self.radius.powi(3)
    }
}
