//! Bends the tip of a bar by a rigid rotation while holding its base fixed.
//!
//! Usage: `cargo run --release --example bar_bend -- [layers] [resolution] [steps] [degrees]`

use tuttenet::optim::{run_elastic, Architecture, ElasticJobConfig};
use tuttenet::synth::bar_bend_input;

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let num = |i: usize, d: f64| args.get(i).map_or(d, |a| a.parse().expect("number"));
    let (layers, resolution, steps, degrees) = (num(0, 24.0) as usize, num(1, 25.0) as usize, num(2, 4000.0) as usize, num(3, 20.0));
    let input = bar_bend_input::<f64>(8_000, 7, degrees.to_radians()).expect("bar input");
    let config = ElasticJobConfig {
        architecture: Architecture {
            layers,
            resolution,
            frames: None,
        },
        max_steps: steps,
        log_every: 200,
        ..Default::default()
    };
    let start = std::time::Instant::now();
    let out = run_elastic(&config, &input, &mut |l| println!("{l}")).expect("elastic run");
    println!(
        "handle_rms={:.4e} max_distortion={:.4e} violations={} seconds={:.1}",
        out.report.handle_rms,
        out.report.max_distortion,
        out.report.injectivity.violations,
        start.elapsed().as_secs_f64()
    );
}
