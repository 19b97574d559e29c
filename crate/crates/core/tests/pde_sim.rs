use std::sync::OnceLock;

use spikelab::ground_state::{solve_ground_state, RadialProfile};
use spikelab::pde_sim::{
    detect_spikes, laplacian, read_snapshot, run, run_from, spikes_state, write_snapshot, Field2D, InhibitorMode,
    InitialState, SimConfig,
};

fn profile() -> &'static RadialProfile {
    static P: OnceLock<RadialProfile> = OnceLock::new();
    P.get_or_init(|| solve_ground_state(20.0, 4000, 1e-8).unwrap())
}

fn short(k: usize, t_end: f64) -> SimConfig {
    SimConfig {
        k,
        nx: 96,
        t_end,
        snapshot_every: 25,
        ..SimConfig::default()
    }
}

#[test]
fn track_is_identical_across_thread_counts() {
    let cfg = short(3, 2.0);
    let run_with = |threads| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| run(&cfg, profile(), false).unwrap())
    };
    let (one, two) = (run_with(1), run_with(4));
    assert_eq!(one.track, two.track);
    assert_eq!(one.final_state, two.final_state);
}

#[test]
fn centred_square_keeps_five_spikes() {
    let cfg = SimConfig {
        with_centre: true,
        ..short(4, 10.0)
    };
    let out = run(&cfg, profile(), false).unwrap();
    assert!(out.track.counts().iter().all(|&c| c == 5), "{:?}", out.track.counts());
}

#[test]
fn laplacian_error_falls_with_the_grid() {
    // cos(πx)cos(πy) satisfies the Neumann condition on [-1, 1]²
    let err = |n: usize| {
        let f = Field2D::from_fn(n, n, 2.0 / n as f64, |x, y| (std::f64::consts::PI * x).cos() * (std::f64::consts::PI * y).cos());
        let lap = laplacian(&f.values, n, n, f.h);
        let scale = -2.0 * std::f64::consts::PI.powi(2);
        lap.iter().zip(&f.values).map(|(l, v)| (l - scale * v).abs()).fold(0.0, f64::max)
    };
    let (coarse, fine) = (err(32), err(64));
    assert!(fine <= 0.5 * coarse, "{coarse:e} -> {fine:e}");
}

#[test]
fn snapshot_round_trip_and_restart() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = short(3, 1.0);
    let out = run(&cfg, profile(), false).unwrap();
    let path = dir.path().join("final.bin");
    let meta = write_snapshot(&path, &out.final_state).unwrap();
    assert_eq!(meta.nx, 96);
    let (_, back) = read_snapshot(&path).unwrap();
    assert_eq!(back, out.final_state);

    let restart = SimConfig {
        init: InitialState::File(path),
        perturb_amp: 0.0,
        ..cfg
    };
    let again = run(&restart, profile(), false).unwrap();
    assert_eq!(again.track.frames[0].spikes, out.track.frames.last().unwrap().spikes);
}

#[test]
fn csv_has_one_row_per_spike() {
    let out = run(&short(3, 1.0), profile(), false).unwrap();
    let mut buf = Vec::new();
    out.track.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,j,x,y,amplitude,asymmetry"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    let expected: usize = out.track.counts().iter().sum();
    assert_eq!(rows.len(), expected);
    assert!(rows.iter().all(|r| r.len() == 6));
}

#[test]
fn quasi_steady_and_relaxed_agree_for_a_fast_inhibitor() {
    let base = SimConfig {
        perturb_amp: 0.0,
        ..short(3, 2.0)
    };
    let quasi = SimConfig {
        inhibitor: InhibitorMode::QuasiSteady,
        ..base.clone()
    };
    let a = run(&base, profile(), false).unwrap();
    let b = run(&quasi, profile(), false).unwrap();
    let (sa, sb) = (detect_spikes(&a.final_state.a), detect_spikes(&b.final_state.a));
    assert_eq!(sa.len(), sb.len());
    for (x, y) in sa.iter().zip(&sb) {
        let d = ((x.x - y.x).powi(2) + (x.y - y.y).powi(2)).sqrt();
        assert!(d < 2.0 * a.final_state.a.h, "{x:?} vs {y:?}");
        assert!((x.amplitude - y.amplitude).abs() < 0.05 * x.amplitude);
    }
}

#[test]
fn oversized_step_is_rejected() {
    let cfg = SimConfig { dt: 1.0, ..short(3, 1.0) };
    let state = spikes_state(&cfg, profile(), &[(0.0, 0.0)]).unwrap();
    assert!(matches!(run_from(&cfg, state, false), Err(spikelab::Error::Config(_))));
}
