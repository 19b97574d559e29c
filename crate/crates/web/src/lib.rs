//! wasm-bindgen entry points for `www/index.html`. Every function returns a
//! JSON string; errors come back as `{"error": "..."}`.

use std::sync::OnceLock;

use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use spikelab::ground_state::{integrals, solve_ground_state, GroundStateConstants};
use spikelab::reduced_problem::{equilibrium_radius, equilibrium_radius_centre, ModelParams, ReducedConstants};
use spikelab::stability::{classify, classify_centre};

fn constants() -> spikelab::Result<GroundStateConstants> {
    static GS: OnceLock<GroundStateConstants> = OnceLock::new();
    if let Some(c) = GS.get() {
        return Ok(*c);
    }
    // a coarser grid than the CLI keeps the first call fast in the browser
    let c = integrals(&solve_ground_state(16.0, 2000, 1e-8)?);
    Ok(*GS.get_or_init(|| c))
}

fn render(result: spikelab::Result<Value>) -> String {
    match result {
        Ok(v) => v.to_string(),
        Err(e) => json!({ "error": e.to_string() }).to_string(),
    }
}

/// Small-eigenvalue verdict, `μ` values and warnings for a k-gon.
#[wasm_bindgen]
pub fn classify_cluster(k: usize, with_centre: bool) -> String {
    render((|| {
        let r = if with_centre { classify_centre(k)? } else { classify(k)? };
        Ok(json!({
            "k": r.k,
            "with_centre": r.with_centre,
            "mu": r.mu_values,
            "verdict": r.verdict.to_string(),
            "witness": r.witness,
            "warnings": r.warnings,
        }))
    })())
}

/// Equilibrium radius in inner units and in outer units (`ε R`).
#[wasm_bindgen]
pub fn equilibrium(k: usize, epsilon: f64, d: f64, mu2: f64, with_centre: bool) -> String {
    render((|| {
        let p = ModelParams::new(epsilon, d, 0.0, 1.0, mu2)?;
        let rc = ReducedConstants::new(k, &p, &constants()?)?;
        let sol = if with_centre {
            equilibrium_radius_centre(k, &p, &rc)?
        } else {
            equilibrium_radius(k, &p, &rc)?
        };
        Ok(json!({
            "radius": sol.radius,
            "outer_radius": epsilon * sol.radius,
            "sigma": p.sigma(),
            "xi": rc.xi,
            "residual": sol.residual,
            "warnings": p.regime_warnings(),
        }))
    })())
}

/// Vertex positions of the equilibrium cluster in outer units, flattened `[x0, y0, x1, ...]`.
#[wasm_bindgen]
pub fn cluster_positions(k: usize, epsilon: f64, d: f64, mu2: f64, with_centre: bool) -> Vec<f64> {
    let run = || -> spikelab::Result<Vec<f64>> {
        let p = ModelParams::new(epsilon, d, 0.0, 1.0, mu2)?;
        let rc = ReducedConstants::new(k, &p, &constants()?)?;
        let r = if with_centre {
            equilibrium_radius_centre(k, &p, &rc)?.radius
        } else {
            equilibrium_radius(k, &p, &rc)?.radius
        };
        let c = spikelab::cluster_geometry::build_cluster(k, epsilon * r, 0.0, with_centre)?;
        Ok(c.positions.iter().flat_map(|q| [q.x, q.y]).collect())
    };
    run().unwrap_or_default()
}
