//! The acceptance ladder: ten numbered checks with fixed tolerances, shared
//! by the `reproduce` command and the `acceptance` test target.

use std::f64::consts::PI;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::ground_state::{integrals, solve_ground_state, RadialProfile};
use crate::nlep::{correlation, local_spectrum, nlep_spectrum, refined_leading, RadialOperator};
use crate::pde_sim::{self, InitialState, SimConfig, Stepper};
use crate::reduced_problem::{
    asymptotic_radius, asymptotic_radius_centre, equilibrium_radius, equilibrium_radius_centre, ModelParams,
    Precursor, ReducedConstants,
};
use crate::stability::centre::{build_m_centre, kernel_witness, restricted_indices, sum_of_squares};
use crate::stability::circulant::{a1_spec, a2_spec, circulant_eigs};
use crate::stability::matrices::kernel_vector;
use crate::stability::{classify, classify_centre, hessian_oracle, leading_block, mu_numerator, mu_spectrum, Verdict};

pub const FORMAT_TAG: &str = "spikelab/1";

/// Ladder of inhibitor diffusivities for the radius-gap check.
pub const D_LADDER: [f64; 4] = [1e-2, 1e-3, 1e-4, 1e-5];
pub const LADDER_SIGMA: f64 = 0.1;
pub const LADDER_MU2: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Pass,
    Fail,
    /// Passed, but a qualitative sub-check saw nothing within its budget.
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: u8,
    pub name: String,
    pub outcome: Outcome,
    /// One line per sub-check.
    pub details: Vec<String>,
}

impl CriterionResult {
    pub fn passed(&self) -> bool {
        self.outcome != Outcome::Fail
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceReport {
    pub format: String,
    pub criteria: Vec<CriterionResult>,
}

impl AcceptanceReport {
    pub fn all_passed(&self) -> bool {
        self.criteria.iter().all(|c| c.passed())
    }
}

pub const NAMES: [&str; 10] = [
    "circulant spectra",
    "leading-block degeneracy",
    "mu spectrum",
    "verdicts",
    "centre quadratic form",
    "ground-state constants",
    "equilibrium radius",
    "Hessian oracle agreement",
    "NLEP bounds",
    "simulation smoke suite",
];

/// Collects sub-check lines and the overall outcome.
struct Checks {
    details: Vec<String>,
    ok: bool,
    inconclusive: bool,
}

impl Checks {
    fn new() -> Self {
        Self {
            details: Vec::new(),
            ok: true,
            inconclusive: false,
        }
    }

    fn check(&mut self, ok: bool, line: String) {
        self.ok &= ok;
        self.details.push(format!("[{}] {line}", if ok { "ok" } else { "FAIL" }));
    }

    fn error(&mut self, what: &str, e: crate::Error) {
        self.check(false, format!("{what}: error: {e}"));
    }

    fn finish(self, id: u8) -> CriterionResult {
        let outcome = if !self.ok {
            Outcome::Fail
        } else if self.inconclusive {
            Outcome::Inconclusive
        } else {
            Outcome::Pass
        };
        CriterionResult {
            id,
            name: NAMES[id as usize - 1].into(),
            outcome,
            details: self.details,
        }
    }
}

/// Shared ground-state profile, solved once per ladder.
pub struct Context {
    pub profile: RadialProfile,
}

impl Context {
    pub fn new() -> Result<Self> {
        Ok(Self {
            profile: solve_ground_state(20.0, 4000, 1e-8)?,
        })
    }
}

pub fn run_all(ctx: &Context) -> AcceptanceReport {
    AcceptanceReport {
        format: FORMAT_TAG.into(),
        criteria: (1..=10).map(|id| run_criterion(id, ctx)).collect(),
    }
}

pub fn run_criterion(id: u8, ctx: &Context) -> CriterionResult {
    match id {
        1 => circulant_spectra(),
        2 => leading_degeneracy(),
        3 => mu_values(),
        4 => verdicts(),
        5 => centre_form(),
        6 => ground_state(),
        7 => radius_ladder(ctx),
        8 => oracle(ctx),
        9 => nlep_bounds(ctx),
        10 => simulation(ctx),
        _ => panic!("criterion ids run from 1 to 10, got {id}"),
    }
}

fn circulant_spectra() -> CriterionResult {
    let mut c = Checks::new();
    let mut worst: f64 = 0.0;
    for k in 3..=12 {
        let (Ok(s1), Ok(s2)) = (a1_spec(k), a2_spec(k)) else {
            c.check(false, format!("k = {k}: circulant construction failed"));
            continue;
        };
        match (circulant_eigs(&s1), circulant_eigs(&s2)) {
            (Ok(e1), Ok(e2)) => {
                for l in 0..k {
                    let t = l as f64 * PI / k as f64;
                    let ex1 = Complex64::new(-4.0 * t.sin().powi(2), 0.0);
                    let ex2 = Complex64::new(0.0, 2.0 * (2.0 * t).sin());
                    worst = worst.max((e1[l].value - ex1).norm()).max((e2[l].value - ex2).norm());
                }
            }
            _ => c.check(false, format!("k = {k}: eigen-decomposition failed")),
        }
    }
    c.check(worst <= 1e-12, format!("max deviation over 3 <= k <= 12: {worst:.3e} (tol 1e-12)"));
    c.finish(1)
}

fn leading_degeneracy() -> CriterionResult {
    let mut c = Checks::new();
    let (mut det_max, mut trace_min, mut null_max) = (0.0f64, f64::INFINITY, 0.0f64);
    for k in 3..=12 {
        for l in 0..k {
            let b = leading_block(k, l);
            det_max = det_max.max(b.determinant().norm());
            let tr = b.trace();
            trace_min = trace_min.min(tr.re);
            let v = kernel_vector(k, l);
            let r0 = b[(0, 0)] * v[0] + b[(0, 1)] * v[1];
            let r1 = b[(1, 0)] * v[0] + b[(1, 1)] * v[1];
            null_max = null_max.max(r0.norm().max(r1.norm()));
        }
    }
    c.check(det_max <= 1e-14, format!("max |det| = {det_max:.3e} (tol 1e-14)"));
    c.check(trace_min >= 0.0, format!("min trace = {trace_min:.3e} (>= 0)"));
    c.check(null_max <= 1e-14, format!("max |B v| = {null_max:.3e} (tol 1e-14)"));
    c.finish(2)
}

fn mu_values() -> CriterionResult {
    let mut c = Checks::new();
    let (mut e1, mut e2) = (0.0f64, 0.0f64);
    for k in 3..=12 {
        let (s, co) = (PI / k as f64).sin_cos();
        let s2 = (2.0 * PI / k as f64).sin();
        let c2 = (2.0 * PI / k as f64).cos();
        e1 = e1.max((mu_numerator(k, 1) - 8.0 * s.powi(4) * co * co).abs());
        e2 = e2.max((mu_numerator(k, 2) + 4.0 * c2 * s2 * s2 * s * s).abs());
    }
    c.check(e1 <= 1e-12, format!("l = 1 numerator deviation {e1:.3e} (tol 1e-12)"));
    c.check(e2 <= 1e-12, format!("l = 2 numerator deviation {e2:.3e} (tol 1e-12)"));
    match mu_spectrum(4) {
        Ok(mu) => {
            let expected = [2.0, 0.0, -2.0, 0.0];
            let dev = mu.iter().zip(expected).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            c.check(
                dev <= 1e-12,
                format!("k = 4 spectrum {mu:?} against (2, 0, -2, 0): deviation {dev:.3e} (tol 1e-12)"),
            );
        }
        Err(e) => c.error("k = 4 spectrum", e),
    }
    c.finish(3)
}

fn verdicts() -> CriterionResult {
    let mut c = Checks::new();
    for k in 2..=12 {
        let want = match k {
            2 | 3 => Verdict::Stable,
            4 => Verdict::Marginal,
            _ => Verdict::Unstable,
        };
        match classify(k) {
            Ok(r) => c.check(r.verdict == want, format!("classify({k}) = {} (want {want})", r.verdict)),
            Err(e) => c.error(&format!("classify({k})"), e),
        }
    }
    for k in 2..=12 {
        match classify_centre(k) {
            Ok(r) => {
                let ok = if k <= 5 {
                    r.verdict == Verdict::Stable
                } else {
                    r.verdict == Verdict::Marginal && !r.warnings.is_empty()
                };
                let want = if k <= 5 { "Stable" } else { "Marginal with warning" };
                c.check(ok, format!("classify_centre({k}) = {} (want {want})", r.verdict));
            }
            Err(e) => c.error(&format!("classify_centre({k})"), e),
        }
    }
    c.finish(4)
}

fn centre_form() -> CriterionResult {
    let mut c = Checks::new();
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_601);
    for k in [3, 4, 5] {
        let Ok(m) = build_m_centre(k) else {
            c.check(false, format!("k = {k}: matrix construction failed"));
            continue;
        };
        let mut worst: f64 = 0.0;
        for _ in 0..100 {
            let mut a = DVector::zeros(2 * k + 2);
            for i in restricted_indices(k) {
                a[i] = rng.random_range(-1.0..1.0);
            }
            let q = a.dot(&(&m * &a));
            worst = worst.max((q - sum_of_squares(k, &a)).abs());
        }
        c.check(worst <= 1e-10, format!("k = {k}: max |a'Ma - sum of squares| = {worst:.3e} (tol 1e-10)"));
        let mut kern: f64 = 0.0;
        for (al, be) in [(1.0, 0.0), (0.0, 1.0), (0.6, -0.8)] {
            let w = kernel_witness(k, al, be);
            kern = kern.max(w.dot(&(&m * &w)).abs());
        }
        c.check(kern <= 1e-12, format!("k = {k}: kernel |a'Ma| = {kern:.3e} (tol 1e-12)"));
    }
    c.finish(5)
}

fn ground_state() -> CriterionResult {
    let mut c = Checks::new();
    match (solve_ground_state(20.0, 4000, 1e-8), solve_ground_state(20.0, 8000, 1e-8)) {
        (Ok(p), Ok(p2)) => {
            c.check(p.residual_sup <= 1e-8, format!("residual {:.3e} (tol 1e-8)", p.residual_sup));
            let dw = (p.w0 - p2.w0).abs();
            c.check(dw <= 1e-6, format!("w0 = {:.12}, doubled grid moves it by {dw:.3e} (tol 1e-6)", p.w0));
            let g = integrals(&p);
            let rel = (g.c2 + 0.5 * g.int_w2).abs() / (0.5 * g.int_w2);
            c.check(rel <= 1e-6, format!("c2 = {:.9} against -int(w^2)/2: relative {rel:.3e} (tol 1e-6)", g.c2));
        }
        (Err(e), _) | (_, Err(e)) => c.error("shooting", e),
    }
    c.finish(6)
}

fn ladder_params(d: f64) -> Result<ModelParams> {
    ModelParams::with_sigma(LADDER_SIGMA, d, LADDER_MU2)
}

fn radius_ladder(ctx: &Context) -> CriterionResult {
    let mut c = Checks::new();
    let gs = integrals(&ctx.profile);
    for k in [3, 5] {
        for centre in [false, true] {
            let mut gaps = Vec::new();
            let mut worst_res: f64 = 0.0;
            for d in D_LADDER {
                let step = (|| -> Result<(f64, f64)> {
                    let p = ladder_params(d)?;
                    let rc = ReducedConstants::new(k, &p, &gs)?;
                    let (sol, asym) = if centre {
                        (equilibrium_radius_centre(k, &p, &rc)?, asymptotic_radius_centre(&p, &rc)?)
                    } else {
                        (equilibrium_radius(k, &p, &rc)?, asymptotic_radius(k, &p, &rc)?)
                    };
                    Ok((sol.residual, (sol.radius - asym).abs() / sol.radius))
                })();
                match step {
                    Ok((res, gap)) => {
                        worst_res = worst_res.max(res);
                        gaps.push(gap);
                    }
                    Err(e) => c.error(&format!("k = {k}, centre = {centre}, D = {d:e}"), e),
                }
            }
            let label = if centre { "with centre" } else { "no centre" };
            c.check(worst_res <= 1e-12, format!("k = {k} {label}: max root residual {worst_res:.3e} (tol 1e-12)"));
            let monotone = gaps.len() == D_LADDER.len() && gaps.windows(2).all(|w| w[1] < w[0]);
            let shown: Vec<String> = gaps.iter().map(|g| format!("{g:.4}")).collect();
            c.check(monotone, format!("k = {k} {label}: relative gaps [{}] decreasing", shown.join(", ")));
        }
    }
    c.finish(7)
}

fn oracle(ctx: &Context) -> CriterionResult {
    let mut c = Checks::new();
    let gs = integrals(&ctx.profile);
    let d = *D_LADDER.last().expect("non-empty ladder");
    for k in [3, 5] {
        let rep = ladder_params(d)
            .and_then(|p| ReducedConstants::new(k, &p, &gs).map(|rc| (p, rc)))
            .and_then(|(p, rc)| hessian_oracle(k, false, &p, &rc));
        match rep {
            Ok(r) => {
                let ok = if k == 3 {
                    r.negative == 0 && r.near_zero == 1
                } else {
                    r.negative >= 1
                };
                let want = if k == 3 { "0 negative, 1 near zero" } else { ">= 1 negative" };
                c.check(
                    ok,
                    format!(
                        "k = {k}: {} negative, {} near zero at tol 1e-6 (want {want})",
                        r.negative, r.near_zero
                    ),
                );
            }
            Err(e) => c.error(&format!("k = {k}"), e),
        }
    }
    c.finish(8)
}

pub const NLEP_CELLS: usize = 2000;
pub const NLEP_RMAX: f64 = 20.0;

fn nlep_bounds(ctx: &Context) -> CriterionResult {
    let mut c = Checks::new();
    let p = &ctx.profile;
    let op = |m: usize, g: f64| RadialOperator::new(p, m, g, NLEP_CELLS, NLEP_RMAX);
    match op(0, 0.0).and_then(|o| local_spectrum(&o, p)) {
        Ok(s) => {
            c.check(s.eigenvalues[0] > 0.0, format!("m = 0 local top eigenvalue {:.6} (> 0)", s.eigenvalues[0]));
            let fine = RadialOperator::new(p, 0, 0.0, 2 * NLEP_CELLS, NLEP_RMAX).and_then(|f| local_spectrum(&f, p));
            match fine {
                Ok(f) => {
                    let mv = (f.eigenvalues[0] - s.eigenvalues[0]).abs();
                    c.check(mv <= 1e-3, format!("m = 0 local top moves {mv:.3e} when n doubles (tol 1e-3)"));
                }
                Err(e) => c.error("m = 0 doubled grid", e),
            }
        }
        Err(e) => c.error("m = 0 local", e),
    }
    match op(1, 0.0).and_then(|o| local_spectrum(&o, p).map(|s| (o, s))) {
        Ok((o, s)) => {
            let top = s.eigenvalues[0];
            c.check(top.abs() <= 1e-3, format!("m = 1 local top eigenvalue {top:.3e} (|.| <= 1e-3)"));
            let dw: Vec<f64> = o.r.iter().map(|&r| p.evaluate_dw(r)).collect();
            let corr = correlation(&o, &s.eigenfunctions[0], &dw);
            c.check(corr >= 0.999, format!("m = 1 eigenfunction correlation with w' {corr:.6} (>= 0.999)"));
        }
        Err(e) => c.error("m = 1 local", e),
    }
    match op(0, 2.0).and_then(|o| nlep_spectrum(&o, p).map(|s| (o, s))) {
        Ok((o, s)) => {
            c.check(
                s.max_real <= -0.05,
                format!("gamma = 2 max real part {:.6} (<= -0.05)", s.max_real),
            );
            if let Some(lead) = s.eigenvalues.first() {
                let lam = Complex64::new(lead[0], lead[1]);
                match refined_leading(p, &o, lam) {
                    Ok(f) => {
                        let mv = (f - lam).norm();
                        c.check(
                            mv <= 1e-3,
                            format!("gamma = 2 leading eigenvalue {lam:.6} moves {mv:.3e} when n doubles (tol 1e-3)"),
                        );
                    }
                    Err(e) => c.error("gamma = 2 doubled grid", e),
                }
            }
        }
        Err(e) => c.error("gamma = 2 spectrum", e),
    }
    c.finish(9)
}

/// Simulation budgets for criterion 10, in time units of the default
/// configuration (`dt = 0.02` on 128²).
pub const SINGLE_T_END: f64 = 50.0;
pub const CLUSTER3_T_END: f64 = 100.0;
pub const CLUSTER5_T_END: f64 = 200.0;

pub fn smoke_homogeneous() -> Result<f64> {
    let mut cfg = SimConfig {
        init: InitialState::Homogeneous,
        perturb_amp: 0.0,
        ..SimConfig::default()
    };
    cfg.params.precursor = Precursor::Quadratic { mu2: 0.0 };
    let stepper = Stepper::new(cfg.clone())?;
    let n = cfg.nx;
    let mut s = pde_sim::SimState {
        t: 0.0,
        a: pde_sim::Field2D::constant(n, n, cfg.h(), 1.0),
        h: pde_sim::Field2D::constant(n, n, cfg.h(), 1.0),
    };
    for _ in 0..100 {
        s = stepper.step(&s)?;
    }
    Ok(s.a.values.iter().chain(&s.h.values).map(|v| (v - 1.0).abs()).fold(0.0, f64::max))
}

/// Fraction of consecutive frames whose centroid radius decreased, and the
/// first and last radius.
pub fn smoke_single(profile: &RadialProfile) -> Result<(f64, f64, f64)> {
    let cfg = SimConfig {
        init: InitialState::Single { offset: 0.4 },
        t_end: SINGLE_T_END,
        snapshot_every: 250,
        ..SimConfig::default()
    };
    let out = pde_sim::run(&cfg, profile, false)?;
    let radii: Vec<f64> = out
        .track
        .frames
        .iter()
        .filter(|f| f.spikes.len() == 1)
        .map(|f| f.spikes[0].x.hypot(f.spikes[0].y))
        .collect();
    if radii.len() < 2 {
        return Ok((0.0, f64::NAN, f64::NAN));
    }
    let down = radii.windows(2).filter(|w| w[1] < w[0]).count();
    Ok((
        down as f64 / (radii.len() - 1) as f64,
        radii[0],
        *radii.last().expect("two or more radii"),
    ))
}

pub fn smoke_cluster(profile: &RadialProfile, k: usize, t_end: f64) -> Result<pde_sim::SpikeTrack> {
    let cfg = SimConfig {
        k,
        t_end,
        snapshot_every: 250,
        ..SimConfig::default()
    };
    Ok(pde_sim::run(&cfg, profile, false)?.track)
}

fn simulation(ctx: &Context) -> CriterionResult {
    let mut c = Checks::new();
    match smoke_homogeneous() {
        Ok(dev) => c.check(dev <= 1e-10, format!("homogeneous state drift after 100 steps {dev:.3e} (tol 1e-10)")),
        Err(e) => c.error("homogeneous", e),
    }
    match smoke_single(&ctx.profile) {
        Ok((frac, r0, r1)) => c.check(
            frac >= 0.8 && r1 < r0,
            format!("single spike radius {r0:.4} -> {r1:.4}, decreasing on {:.0}% of frames (>= 80%)", 100.0 * frac),
        ),
        Err(e) => c.error("single spike", e),
    }
    match smoke_cluster(&ctx.profile, 3, CLUSTER3_T_END) {
        Ok(track) => {
            let counts = track.counts();
            let a0 = track.frames[0].asymmetry;
            let amax = track.frames.iter().map(|f| f.asymmetry).fold(0.0, f64::max);
            c.check(
                counts.iter().all(|&n| n == 3) && amax <= 2.0 * a0,
                format!(
                    "k = 3: spike counts {:?}..{:?}, asymmetry {a0:.2e} initially, max {amax:.2e} (<= 2x)",
                    counts.iter().min(),
                    counts.iter().max()
                ),
            );
        }
        Err(e) => c.error("k = 3 cluster", e),
    }
    match smoke_cluster(&ctx.profile, 5, CLUSTER5_T_END) {
        Ok(track) => {
            let counts = track.counts();
            let a0 = track.frames[0].asymmetry;
            let amax = track.frames.iter().map(|f| f.asymmetry).fold(0.0, f64::max);
            let detected = counts.iter().any(|&n| n != 5) || amax >= 5.0 * a0;
            let line = format!(
                "k = 5: asymmetry {a0:.2e} initially, max {amax:.2e}; counts {:?}..{:?} by t = {CLUSTER5_T_END}",
                counts.iter().min(),
                counts.iter().max()
            );
            if detected {
                c.check(true, format!("{line}: instability seen"));
            } else {
                c.inconclusive = true;
                c.details.push(format!("[inconclusive] {line}: no instability within budget"));
            }
        }
        Err(e) => c.error("k = 5 cluster", e),
    }
    c.finish(10)
}
