use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reduced_problem::{ModelParams, Precursor};

pub const TAU_FLOOR: f64 = 1e-3;

/// Bound on `dt` times the largest explicit reaction rate.
pub const REACTION_CFL: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InhibitorMode {
    /// `τ_eff H_t = DΔH - H + A²` with `τ_eff = max(τ, τ_floor)`.
    Relaxed,
    /// `DΔH - H + A² = 0` solved every step.
    QuasiSteady,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    /// Polygon cluster of ground-state spikes, radius from the reduced problem
    /// unless `radius` is set.
    Cluster,
    /// One spike at `(offset, 0)`.
    Single { offset: f64 },
    /// `A = H = 1`.
    Homogeneous,
    /// A snapshot written by [`super::write_snapshot`].
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub params: ModelParams,
    pub k: usize,
    pub with_centre: bool,
    /// Half-width of the square `[-L, L]²`.
    pub half_width: f64,
    pub nx: usize,
    pub dt: f64,
    pub t_end: f64,
    pub seed: u64,
    /// Relative amplitude of the multiplicative noise on `A`.
    pub perturb_amp: f64,
    /// Steps between recorded frames.
    pub snapshot_every: usize,
    pub inhibitor: InhibitorMode,
    pub init: InitialState,
    /// Cluster radius in `y` units; `None` uses the equilibrium radius.
    pub radius: Option<f64>,
    pub tau_floor: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            params: ModelParams {
                epsilon: 0.03,
                d: 0.018,
                tau: 0.0,
                domain_radius: 1.0,
                precursor: Precursor::Quadratic { mu2: 1.0 },
            },
            k: 3,
            with_centre: false,
            half_width: 1.0,
            nx: 128,
            dt: 0.02,
            t_end: 100.0,
            seed: 1,
            perturb_amp: 0.01,
            snapshot_every: 50,
            inhibitor: InhibitorMode::Relaxed,
            init: InitialState::Cluster,
            radius: None,
            tau_floor: TAU_FLOOR,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("cannot parse {key} = {value:?}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::Config(format!("cannot parse {key} = {value:?} as a boolean"))),
    }
}

impl SimConfig {
    pub fn h(&self) -> f64 {
        2.0 * self.half_width / self.nx as f64
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    pub fn tau_eff(&self) -> f64 {
        self.params.tau.max(self.tau_floor)
    }

    /// Parses `key = value` lines; `#` starts a comment. Unknown keys and
    /// repeated keys are errors.
    pub fn parse(text: &str) -> Result<Self> {
        let mut seen = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
            let (key, value) = (key.trim().to_string(), value.trim().to_string());
            if seen.insert(key.clone(), value).is_some() {
                return Err(Error::Config(format!("key {key} given twice")));
            }
        }
        let mut c = SimConfig::default();
        let mut mu2 = c.params.mu2();
        let mut offset = None;
        let mut init = None;
        for (key, value) in &seen {
            let (k, v) = (key.as_str(), value.as_str());
            match k {
                "k" => c.k = parse(k, v)?,
                "with_centre" => c.with_centre = parse_bool(k, v)?,
                "epsilon" => c.params.epsilon = parse(k, v)?,
                "D" => c.params.d = parse(k, v)?,
                "tau" => c.params.tau = parse(k, v)?,
                "mu2" => mu2 = parse(k, v)?,
                "L" => c.half_width = parse(k, v)?,
                "nx" => c.nx = parse(k, v)?,
                "dt" => c.dt = parse(k, v)?,
                "t_end" => c.t_end = parse(k, v)?,
                "seed" => c.seed = parse(k, v)?,
                "perturb_amp" => c.perturb_amp = parse(k, v)?,
                "snapshot_every" => c.snapshot_every = parse(k, v)?,
                "tau_floor" => c.tau_floor = parse(k, v)?,
                "radius" => c.radius = Some(parse(k, v)?),
                "offset" => offset = Some(parse::<f64>(k, v)?),
                "inhibitor" => {
                    c.inhibitor = match v {
                        "relaxed" => InhibitorMode::Relaxed,
                        "quasi_steady" => InhibitorMode::QuasiSteady,
                        _ => return Err(Error::Config(format!("unknown inhibitor mode {v:?}"))),
                    }
                }
                "init" => init = Some(v.to_string()),
                _ => return Err(Error::Config(format!("unknown key {k:?}"))),
            }
        }
        c.params.precursor = Precursor::Quadratic { mu2 };
        c.params.domain_radius = c.half_width;
        c.init = match init.as_deref() {
            None | Some("cluster") => InitialState::Cluster,
            Some("single") => InitialState::Single {
                offset: offset.unwrap_or(0.25 * c.half_width),
            },
            Some("homogeneous") => InitialState::Homogeneous,
            Some(other) => match other.strip_prefix("file:") {
                Some(path) => InitialState::File(PathBuf::from(path)),
                None => return Err(Error::Config(format!("unknown init {other:?}"))),
            },
        };
        c.validate()?;
        Ok(c)
    }

    /// Checks ranges; the reaction CFL bound needs the initial state and is
    /// checked by [`super::run`].
    pub fn validate(&self) -> Result<()> {
        let p = &self.params;
        let positive = [
            ("epsilon", p.epsilon),
            ("D", p.d),
            ("L", self.half_width),
            ("dt", self.dt),
            ("t_end", self.t_end),
            ("tau_floor", self.tau_floor),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(p.tau >= 0.0) {
            return Err(Error::Config(format!("tau must be non-negative, got {}", p.tau)));
        }
        if !(p.mu2() >= 0.0) {
            return Err(Error::Config(format!("mu2 must be non-negative, got {}", p.mu2())));
        }
        if self.nx < 8 {
            return Err(Error::Config(format!("nx = {} is too small", self.nx)));
        }
        if self.snapshot_every == 0 {
            return Err(Error::Config("snapshot_every must be at least 1".into()));
        }
        if !(0.0..=0.01).contains(&self.perturb_amp) {
            return Err(Error::Config(format!(
                "perturb_amp = {} outside [0, 0.01]",
                self.perturb_amp
            )));
        }
        if matches!(self.init, InitialState::Cluster) && self.k < 2 {
            return Err(Error::Config(format!("k = {} needs to be at least 2", self.k)));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_documented_keys() {
        let text = "k = 5\nwith_centre = true\nepsilon = 0.02 # comment\nD = 0.01\ntau = 0.1\n\
                    mu2 = 2\nL = 0.8\nnx = 96\ndt = 0.01\nt_end = 5\nseed = 9\nperturb_amp = 0.005\n\
                    snapshot_every = 10\ninhibitor = quasi_steady\n";
        let c = SimConfig::parse(text).unwrap();
        assert_eq!(c.k, 5);
        assert!(c.with_centre);
        assert_eq!(c.params.d, 0.01);
        assert_eq!(c.params.mu2(), 2.0);
        assert_eq!(c.half_width, 0.8);
        assert_eq!(c.nx, 96);
        assert_eq!(c.seed, 9);
        assert_eq!(c.inhibitor, InhibitorMode::QuasiSteady);
    }

    #[test]
    fn unknown_key_rejected() {
        assert!(matches!(SimConfig::parse("bogus = 1"), Err(Error::Config(_))));
        assert!(matches!(SimConfig::parse("k = 3\nk = 4"), Err(Error::Config(_))));
        assert!(matches!(SimConfig::parse("dt = -1"), Err(Error::Config(_))));
        assert!(matches!(SimConfig::parse("no equals sign"), Err(Error::Config(_))));
    }

    #[test]
    fn init_variants() {
        assert_eq!(
            SimConfig::parse("init = single\noffset = 0.3").unwrap().init,
            InitialState::Single { offset: 0.3 }
        );
        assert_eq!(
            SimConfig::parse("init = file:/tmp/x.bin").unwrap().init,
            InitialState::File("/tmp/x.bin".into())
        );
    }
}
