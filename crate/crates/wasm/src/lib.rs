//! Browser bindings for three small computations: the erasure cq region, the
//! phase-flip qq region, and the qubit dephasing objective. Each returns JSON.

use qmac::capacity::{optimize_cq_region, optimize_qq_region, RegionOptions, RegionResult};
use qmac::optimize::Budget;
use qmac::region::{hausdorff, Region2D};
use qmac::zoo::{
    dephasing_capacity, dephasing_channel, dephasing_objective, erasure_mac, phase_flip_mac,
    NamedChannel,
};
use qmac::{c64, CMatrix, PureState, SystemShape};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

/// Largest sweep the page may request; keeps a click under a few seconds.
const MAX_SAMPLES: u32 = 33;
const MAX_RESTARTS: u32 = 8;
const MAX_EVALS: u32 = 2000;

fn options(samples: u32, restarts: u32, evals: u32, seed: u32) -> RegionOptions {
    RegionOptions {
        samples: samples.clamp(2, MAX_SAMPLES) as usize,
        budget: Budget {
            restarts: restarts.clamp(1, MAX_RESTARTS) as usize,
            evals: evals.clamp(10, MAX_EVALS) as usize,
        },
        seed: seed as u64,
        parallel: false,
    }
}

fn hull(r: &Region2D) -> Value {
    json!(r.hull.iter().map(|p| [p.x, p.y]).collect::<Vec<_>>())
}

fn region_json(nc: &NamedChannel, res: &RegionResult, samples: usize) -> String {
    let oracle = nc.oracle_region(65);
    let mut v = json!({
        "channel": nc.id,
        "axes": res.region.axes,
        "hull": hull(&res.region),
        "sweep": res.sweep.iter().map(|r| json!({"lambda": r.lambda, "raw": r.raw})).collect::<Vec<_>>(),
        "samples": samples,
    });
    if let Some(o) = oracle {
        v["oracle"] = hull(&o);
        v["hausdorff"] = json!(hausdorff(&res.region, &o));
    }
    v.to_string()
}

pub fn erasure_region_json(
    d: u32,
    samples: u32,
    restarts: u32,
    evals: u32,
    seed: u32,
) -> qmac::Result<String> {
    let nc = erasure_mac(d.clamp(2, 4) as usize)?;
    let opts = options(samples, restarts, evals, seed);
    let res = optimize_cq_region(&nc.channel, &opts)?;
    Ok(region_json(&nc, &res, opts.samples))
}

pub fn phase_flip_region_json(
    p: f64,
    samples: u32,
    restarts: u32,
    evals: u32,
    seed: u32,
) -> qmac::Result<String> {
    let nc = phase_flip_mac(p)?;
    let opts = options(samples, restarts, evals, seed);
    let res = optimize_qq_region(&nc.channel, &opts)?;
    Ok(region_json(&nc, &res, opts.samples))
}

/// Qubit dephasing channel whose environment states have overlap `cos(theta)`:
/// the objective `H(X) - H(sum p(x) phi_x)` along `p = (1 - q, q)` and its maximum.
pub fn dephasing_profile_json(theta: f64, steps: u32) -> qmac::Result<String> {
    let e = SystemShape::single("E", 2);
    let phis = vec![
        PureState::from_amplitudes(vec![c64(1.0, 0.0), c64(0.0, 0.0)], e.clone())?,
        PureState::from_amplitudes(vec![c64(theta.cos(), 0.0), c64(theta.sin(), 0.0)], e)?,
    ];
    let vecs: Vec<CMatrix> = phis.iter().map(|p| p.vec().clone()).collect();
    let n = steps.clamp(2, 400) as usize;
    let curve = (0..=n)
        .map(|i| {
            let q = i as f64 / n as f64;
            Ok([q, dephasing_objective(&vecs, &[1.0 - q, q])?])
        })
        .collect::<qmac::Result<Vec<_>>>()?;
    let nc = dephasing_channel(&phis)?;
    let cap = dephasing_capacity(
        &nc,
        Budget {
            restarts: 4,
            evals: 400,
        },
        0,
    )?;
    Ok(
        json!({"theta": theta, "overlap": theta.cos(), "curve": curve, "capacity": cap})
            .to_string(),
    )
}

fn js(r: qmac::Result<String>) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub fn erasure_region(
    d: u32,
    samples: u32,
    restarts: u32,
    evals: u32,
    seed: u32,
) -> Result<String, JsError> {
    js(erasure_region_json(d, samples, restarts, evals, seed))
}

#[wasm_bindgen]
pub fn phase_flip_region(
    p: f64,
    samples: u32,
    restarts: u32,
    evals: u32,
    seed: u32,
) -> Result<String, JsError> {
    js(phase_flip_region_json(p, samples, restarts, evals, seed))
}

#[wasm_bindgen]
pub fn dephasing_profile(theta: f64, steps: u32) -> Result<String, JsError> {
    js(dephasing_profile_json(theta, steps))
}
