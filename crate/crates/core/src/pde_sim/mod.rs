//! Time stepper for the full activator-inhibitor system on a square with
//! Neumann walls:
//!
//! ```text
//! A_t = ε²ΔA - μ(|y|)A + A²/H
//! τ H_t = DΔH - H + A²
//! ```
//!
//! Diffusion and the linear inhibitor decay are implicit (one DCT solve per
//! field per step); the remaining reaction terms are explicit.

mod config;
mod io;
mod solver;
mod spikes;

pub use config::{InhibitorMode, InitialState, SimConfig, REACTION_CFL, TAU_FLOOR};
pub use io::{read_snapshot, write_snapshot, SnapshotMeta, FORMAT_TAG};
pub use solver::{laplacian, NeumannSolver};
pub use spikes::{asymmetry_score, detect_spikes, Spike, SpikeTrack, TrackFrame};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cluster_geometry::build_cluster;
use crate::error::{Error, Result};
use crate::ground_state::{integrals, RadialProfile};
use crate::reduced_problem::{equilibrium_radius, equilibrium_radius_centre, ReducedConstants};

/// Scalar field on the cell centres of `[origin, origin + nx·h] × [origin, origin + ny·h]`,
/// row-major (`values[j·nx + i]`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Field2D {
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
    pub origin: f64,
    pub values: Vec<f64>,
}

impl Field2D {
    pub fn constant(nx: usize, ny: usize, h: f64, value: f64) -> Self {
        Self {
            nx,
            ny,
            h,
            origin: -0.5 * h * nx as f64,
            values: vec![value; nx * ny],
        }
    }

    pub fn centre(&self, i: usize, j: usize) -> (f64, f64) {
        (
            self.origin + (i as f64 + 0.5) * self.h,
            self.origin + (j as f64 + 0.5) * self.h,
        )
    }

    pub fn from_fn(nx: usize, ny: usize, h: f64, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut out = Self::constant(nx, ny, h, 0.0);
        for j in 0..ny {
            for i in 0..nx {
                let (x, y) = out.centre(i, j);
                out.values[j * nx + i] = f(x, y);
            }
        }
        out
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimState {
    pub t: f64,
    pub a: Field2D,
    pub h: Field2D,
}

/// Precomputed operators for one configuration.
#[derive(Debug, Clone)]
pub struct Stepper {
    pub config: SimConfig,
    solver: NeumannSolver,
    mu: Vec<f64>,
}

impl Stepper {
    pub fn new(config: SimConfig) -> Result<Self> {
        config.validate()?;
        let (n, h) = (config.nx, config.h());
        let mu = Field2D::from_fn(n, n, h, |x, y| config.params.mu((x * x + y * y).sqrt())).values;
        Ok(Self {
            solver: NeumannSolver::new(n, n, h),
            mu,
            config,
        })
    }

    /// Largest explicit reaction rate `max(μ + 2A/H)` for the given state.
    pub fn reaction_rate(&self, state: &SimState) -> f64 {
        let mut rate: f64 = 0.0;
        for i in 0..self.mu.len() {
            rate = rate.max(self.mu[i] + 2.0 * state.a.values[i] / state.h.values[i]);
        }
        rate
    }

    /// One IMEX step.
    pub fn step(&self, state: &SimState) -> Result<SimState> {
        let c = &self.config;
        let (eps2, d, dt) = (c.params.epsilon.powi(2), c.params.d, c.dt);
        let a = &state.a.values;
        let mut h_old = state.h.values.clone();
        let a2: Vec<f64> = a.iter().map(|v| v * v).collect();

        if c.inhibitor == InhibitorMode::QuasiSteady {
            h_old = self.solver.solve(&a2, 1.0, d)?;
        }

        let rhs_a: Vec<f64> = (0..a.len())
            .map(|i| a[i] + dt * (-self.mu[i] * a[i] + a[i] * a[i] / h_old[i]))
            .collect();
        let a_new = self.solver.solve(&rhs_a, 1.0, dt * eps2)?;

        let h_new = match c.inhibitor {
            InhibitorMode::QuasiSteady => self.solver.solve(&a_new.iter().map(|v| v * v).collect::<Vec<_>>(), 1.0, d)?,
            InhibitorMode::Relaxed => {
                let te = c.tau_eff();
                let rhs: Vec<f64> = (0..a.len()).map(|i| h_old[i] + dt * a2[i] / te).collect();
                self.solver.solve(&rhs, 1.0 + dt / te, dt * d / te)?
            }
        };

        let t = state.t + dt;
        let mut next = SimState {
            t,
            a: Field2D { values: a_new, ..state.a.clone() },
            h: Field2D { values: h_new, ..state.h.clone() },
        };
        enforce_positivity(&mut next)?;
        Ok(next)
    }
}

// Relative size of negative values attributed to transform round-off.
const ROUNDOFF: f64 = 1e-12;

/// Fails on genuine sign changes or non-finite values; lifts negative
/// round-off (|v| ≤ 1e-12·max) to the smallest positive normal.
fn enforce_positivity(s: &mut SimState) -> Result<()> {
    let (min_a, min_h) = (s.a.min(), s.h.min());
    let bad = |f: &Field2D, m: f64| !f.is_finite() || m < -ROUNDOFF * f.max().abs();
    if bad(&s.a, min_a) || bad(&s.h, min_h) || s.h.max() <= 0.0 {
        return Err(Error::PositivityLoss { t: s.t, min_a, min_h });
    }
    for f in [&mut s.a, &mut s.h] {
        f.values.iter_mut().for_each(|v| {
            if *v <= 0.0 {
                *v = f64::MIN_POSITIVE;
            }
        });
    }
    Ok(())
}

/// Cluster radius in `y` units for `config` (the equilibrium radius times ε
/// unless overridden).
pub fn cluster_radius(config: &SimConfig, profile: &RadialProfile) -> Result<f64> {
    if let Some(r) = config.radius {
        return Ok(r);
    }
    let gs = integrals(profile);
    let rc = ReducedConstants::new(config.k, &config.params, &gs)?;
    let sol = if config.with_centre {
        equilibrium_radius_centre(config.k, &config.params, &rc)?
    } else {
        equilibrium_radius(config.k, &config.params, &rc)?
    };
    Ok(config.params.epsilon * sol.radius)
}

/// Superposed ground-state spikes of height `ξD/ε²` at `centres`, truncated
/// where `w < 1e-6`, with `H` equal to the same height.
pub fn spikes_state(config: &SimConfig, profile: &RadialProfile, centres: &[(f64, f64)]) -> Result<SimState> {
    let p = &config.params;
    let gs = integrals(profile);
    let rc = ReducedConstants::new(config.k.max(2), p, &gs)?;
    let amp = rc.xi * p.d / (p.epsilon * p.epsilon);
    let cutoff = truncation_radius(profile);
    let (n, h) = (config.nx, config.h());
    let a = Field2D::from_fn(n, n, h, |x, y| {
        let s: f64 = centres
            .iter()
            .map(|(cx, cy)| {
                let r = ((x - cx).powi(2) + (y - cy).powi(2)).sqrt() / p.epsilon;
                if r < cutoff {
                    profile.evaluate_w(r)
                } else {
                    0.0
                }
            })
            .sum();
        // keep the far field strictly positive
        amp * s.max(1e-12)
    });
    Ok(SimState {
        t: 0.0,
        a,
        h: Field2D::constant(n, n, h, amp),
    })
}

fn truncation_radius(profile: &RadialProfile) -> f64 {
    let (mut lo, mut hi) = (0.0, profile.r_max());
    if profile.evaluate_w(hi) >= 1e-6 {
        return hi;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if profile.evaluate_w(mid) >= 1e-6 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Initial state for `config`, before the random perturbation.
pub fn initial_state(config: &SimConfig, profile: &RadialProfile) -> Result<SimState> {
    let (n, h) = (config.nx, config.h());
    match &config.init {
        InitialState::Homogeneous => Ok(SimState {
            t: 0.0,
            a: Field2D::constant(n, n, h, 1.0),
            h: Field2D::constant(n, n, h, 1.0),
        }),
        InitialState::Single { offset } => spikes_state(config, profile, &[(*offset, 0.0)]),
        InitialState::Cluster => {
            let r = cluster_radius(config, profile)?;
            let cluster = build_cluster(config.k, r, 0.0, config.with_centre)?;
            let centres: Vec<(f64, f64)> = cluster.positions.iter().map(|p| (p.x, p.y)).collect();
            spikes_state(config, profile, &centres)
        }
        InitialState::File(path) => {
            let (meta, state) = read_snapshot(path)?;
            if meta.nx != n || meta.ny != n || (meta.h - h).abs() > 1e-12 * h {
                return Err(Error::Config(format!(
                    "snapshot grid {}x{} (h = {}) does not match the configuration",
                    meta.nx, meta.ny, meta.h
                )));
            }
            Ok(state)
        }
    }
}

/// Multiplies `A` by `1 + amp·u`, `u` uniform on `[-1, 1]`, from a seeded
/// ChaCha stream (cell order fixed).
pub fn perturb(state: &mut SimState, amp: f64, seed: u64) {
    if amp == 0.0 {
        return;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for v in state.a.values.iter_mut() {
        *v *= 1.0 + amp * rng.random_range(-1.0..=1.0);
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunOutput {
    pub track: SpikeTrack,
    pub final_state: SimState,
    pub steps: usize,
    /// States recorded with the track frames, if requested.
    #[serde(skip)]
    pub snapshots: Vec<SimState>,
}

/// Runs `config` from its initial state, recording a track frame (and,
/// if `keep_snapshots`, the state) every `snapshot_every` steps and at the end.
pub fn run(config: &SimConfig, profile: &RadialProfile, keep_snapshots: bool) -> Result<RunOutput> {
    let mut state = initial_state(config, profile)?;
    perturb(&mut state, config.perturb_amp, config.seed);
    run_from(config, state, keep_snapshots)
}

pub fn run_from(config: &SimConfig, mut state: SimState, keep_snapshots: bool) -> Result<RunOutput> {
    let stepper = Stepper::new(config.clone())?;
    let rate = stepper.reaction_rate(&state);
    if config.dt * rate > REACTION_CFL {
        return Err(Error::Config(format!(
            "dt = {} exceeds the reaction bound {:.3e} (max rate {rate:.3})",
            config.dt,
            REACTION_CFL / rate
        )));
    }
    let steps = config.steps();
    let mut track = SpikeTrack::default();
    let mut snapshots = Vec::new();
    track.record(state.t, &state.a);
    if keep_snapshots {
        snapshots.push(state.clone());
    }
    for s in 1..=steps {
        state = stepper.step(&state)?;
        if s % config.snapshot_every == 0 || s == steps {
            track.record(state.t, &state.a);
            if keep_snapshots {
                snapshots.push(state.clone());
            }
            log::debug!("t = {:.3}: {} spikes", state.t, track.frames.last().map_or(0, |f| f.spikes.len()));
        }
    }
    Ok(RunOutput {
        track,
        final_state: state,
        steps,
        snapshots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ground_state::solve_ground_state;
    use crate::reduced_problem::Precursor;
    use std::sync::OnceLock;

    fn profile() -> &'static RadialProfile {
        static P: OnceLock<RadialProfile> = OnceLock::new();
        P.get_or_init(|| solve_ground_state(20.0, 4000, 1e-8).unwrap())
    }

    fn flat(nx: usize) -> SimConfig {
        let mut c = SimConfig {
            nx,
            init: InitialState::Homogeneous,
            perturb_amp: 0.0,
            ..SimConfig::default()
        };
        c.params.precursor = Precursor::Quadratic { mu2: 0.0 };
        c
    }

    #[test]
    fn homogeneous_equilibrium_is_preserved() {
        for mode in [InhibitorMode::Relaxed, InhibitorMode::QuasiSteady] {
            let c = SimConfig { inhibitor: mode, ..flat(32) };
            let stepper = Stepper::new(c.clone()).unwrap();
            let mut s = initial_state(&c, profile()).unwrap();
            for _ in 0..100 {
                s = stepper.step(&s).unwrap();
            }
            for v in s.a.values.iter().chain(&s.h.values) {
                assert!((v - 1.0).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn inhibitor_decays_without_activator() {
        let c = flat(16);
        let stepper = Stepper::new(c.clone()).unwrap();
        let n = c.nx;
        let mut s = SimState {
            t: 0.0,
            a: Field2D::constant(n, n, c.h(), 0.0),
            h: Field2D::from_fn(n, n, c.h(), |x, y| 1.0 + 0.5 * (3.0 * x).cos() * y),
        };
        let mut last = s.h.max();
        for _ in 0..20 {
            s = stepper.step(&s).unwrap();
            let m = s.h.max();
            assert!(m < last);
            last = m;
        }
        assert!(last < 0.5);
    }

    #[test]
    fn reaction_bound_enforced() {
        let c = SimConfig { dt: 0.5, ..flat(16) };
        assert!(matches!(run(&c, profile(), false), Err(Error::Config(_))));
    }

    #[test]
    fn negative_values_abort() {
        let c = flat(8);
        let mut s = initial_state(&c, profile()).unwrap();
        s.a.values[3] = -0.5;
        assert!(matches!(enforce_positivity(&mut s), Err(Error::PositivityLoss { .. })));
    }

    #[test]
    fn perturbation_is_seeded() {
        let c = SimConfig { init: InitialState::Cluster, ..SimConfig::default() };
        let base = initial_state(&c, profile()).unwrap();
        let (mut a, mut b, mut d) = (base.clone(), base.clone(), base.clone());
        perturb(&mut a, 0.01, 7);
        perturb(&mut b, 0.01, 7);
        perturb(&mut d, 0.01, 8);
        assert_eq!(a, b);
        assert_ne!(a, d);
        for (p, q) in a.a.values.iter().zip(&base.a.values) {
            assert!((p / q - 1.0).abs() <= 0.01 + 1e-15);
        }
    }

    #[test]
    fn cluster_initial_state_has_k_spikes() {
        for (k, centre) in [(3, false), (4, true)] {
            let c = SimConfig { k, with_centre: centre, ..SimConfig::default() };
            let s = initial_state(&c, profile()).unwrap();
            let spikes = detect_spikes(&s.a);
            assert_eq!(spikes.len(), k + centre as usize);
            assert!(asymmetry_score(&spikes) < 0.05);
        }
    }
}
