#![allow(clippy::neg_cmp_op_on_partial_ord)]

use frontlab::boundary::compute_delta;
use frontlab::experiments::{limit_shape, predicted_alpha, ScenarioConfig};
use frontlab::pde::solve_front_frame;
use wasm_bindgen::prelude::*;

const MAX_T: f64 = 200.0;
const MAX_CELLS: f64 = 20_000.0;

fn scenario(config: &str) -> Result<ScenarioConfig, String> {
    ScenarioConfig::parse(config).map_err(|e| e.to_string())
}

/// Flattened (t, m(t), m′(t)) triples on n + 1 evenly spaced times in [0, t_max].
#[wasm_bindgen]
pub fn boundary_path(config: &str, t_max: f64, n: usize) -> Result<Vec<f64>, String> {
    if !(t_max > 0.0) || n == 0 {
        return Err("need t_max > 0 and n >= 1".into());
    }
    let curve = scenario(config)?.curve().map_err(|e| e.to_string())?;
    Ok((0..=n)
        .flat_map(|k| {
            let t = t_max * k as f64 / n as f64;
            [t, curve.m(t), curve.m1(t)]
        })
        .collect())
}

/// Front-frame profile at t_end: flattened (z, u, u/shape) triples for z in (0, z_max],
/// followed by the predicted amplitude (NaN when there is no closed form).
#[wasm_bindgen]
pub fn front_profile(config: &str, z_max: f64) -> Result<Vec<f64>, String> {
    let cfg = scenario(config)?;
    if cfg.t_end > MAX_T {
        return Err(format!("t_end is capped at {MAX_T} in the browser"));
    }
    let curve = cfg.curve().map_err(|e| e.to_string())?;
    let grid = cfg.grid(&curve, vec![cfg.t_end]);
    if grid.length / grid.dz > MAX_CELLS {
        return Err("grid too fine for the browser; raise dz".into());
    }
    let snaps =
        solve_front_frame(&cfg.initial_condition(), &curve, &grid).map_err(|e| e.to_string())?;
    let snap = snaps.last().ok_or("no snapshot")?;
    let shape = limit_shape(cfg.case.case, cfg.case.gamma);
    let mut out: Vec<f64> = (1..snap.u.len())
        .map(|i| snap.z(i))
        .take_while(|z| *z <= z_max)
        .flat_map(|z| [z, snap.value_at(z), snap.value_at(z) / shape(z)])
        .collect();
    let pred = predicted_alpha(
        cfg.case.case,
        cfg.case.amplitude,
        cfg.nu(),
        cfg.case.gamma,
        curve.a,
    );
    out.push(pred.unwrap_or(f64::NAN));
    Ok(out)
}

/// (Δ, e^Δ, error bound) for Δ = ¼∫(m′ − v)² ds.
#[wasm_bindgen]
pub fn delta(config: &str) -> Result<Vec<f64>, String> {
    let curve = scenario(config)?.curve().map_err(|e| e.to_string())?;
    let d = compute_delta(&curve, 1e-8).map_err(|e| e.to_string())?;
    Ok(vec![
        d.value,
        d.value.exp(),
        d.truncation_bound + d.quad_error,
    ])
}
