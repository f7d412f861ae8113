//! Fits a net to a 30° twist of a sphere and prints progress.
//!
//! Usage: `cargo run --release --example twist_fit -- [layers] [resolution] [steps]`

use tuttenet::energy::FittingProblem;
use tuttenet::optim::{run_fit, Architecture, FitJobConfig};
use tuttenet::synth::{twist, uv_sphere};

fn main() {
    let args: Vec<usize> = std::env::args().skip(1).map(|a| a.parse().expect("integer argument")).collect();
    let layers = args.first().copied().unwrap_or(24);
    let resolution = args.get(1).copied().unwrap_or(11);
    let steps = args.get(2).copied().unwrap_or(5000);
    let (v, t) = uv_sphere::<f64>(41, 50, 0.7);
    let target = twist(&v, 30f64.to_radians(), 0.7);
    let problem = FittingProblem::new(v, &t, target).expect("valid sphere");
    let config = FitJobConfig {
        architecture: Architecture {
            layers,
            resolution,
            frames: None,
        },
        max_steps: steps,
        log_every: 250,
        ..Default::default()
    };
    let start = std::time::Instant::now();
    let out = run_fit(&config, &problem, &mut |line| println!("{line}")).expect("fit runs");
    println!(
        "layers={layers} resolution={resolution} steps={} vertex={:.4e} seconds={:.1}",
        out.report.steps,
        out.report.vertex,
        start.elapsed().as_secs_f64()
    );
}
