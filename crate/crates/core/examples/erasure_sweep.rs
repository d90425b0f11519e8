//! Traces the erasure MAC cq region and compares it with the closed form.
//!
//! `cargo run --release --example erasure_sweep -- [d] [samples] [seed]`

use std::time::Instant;

use qmac::capacity::{optimize_cq_region, RegionOptions};
use qmac::region::hausdorff;
use qmac::zoo::erasure_mac;

fn main() -> qmac::Result<()> {
    let args: Vec<u64> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let d = *args.first().unwrap_or(&2) as usize;
    let samples = *args.get(1).unwrap_or(&33) as usize;
    let seed = *args.get(2).unwrap_or(&7);
    let nc = erasure_mac(d)?;
    let opts = RegionOptions {
        samples,
        seed,
        parallel: false,
        ..Default::default()
    };
    let t = Instant::now();
    let res = optimize_cq_region(&nc.channel, &opts)?;
    let elapsed = t.elapsed().as_secs_f64();
    let oracle = nc.oracle_region(2001).expect("closed form");
    for r in &res.sweep {
        println!(
            "lambda={:.4} R={:.6} Q={:.6} restart={}",
            r.lambda, r.raw[0], r.raw[1], r.restart
        );
    }
    println!(
        "hausdorff={:.3e} seconds={elapsed:.1}",
        hausdorff(&res.region, &oracle)
    );
    Ok(())
}
