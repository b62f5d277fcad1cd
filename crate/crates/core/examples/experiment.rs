//! Desk-scale comparison of DGIN against the mean and kriging baselines.
//!
//! `cargo run --release -p stgap-core --example experiment -- [seeds]`

use stgap::harness::{run_experiment, ExperimentConfig};
use stgap::synth::GapClass;

fn main() {
    let seeds: u64 = std::env::args().nth(1).map_or(3, |s| s.parse().expect("seed count"));
    let config = ExperimentConfig::default();
    for seed in 0..seeds {
        let run = run_experiment(&config, seed).expect("experiment");
        let losses = run.outcome.losses();
        println!(
            "seed {seed}: {} training strands, {:.1}s, loss {:.2} -> {:.2}, epoch {} selected",
            run.train_pairs,
            run.train_seconds,
            losses[0],
            losses[losses.len() - 1],
            run.outcome.selected_epoch
        );
        print!("{}", run.report.to_text());
        for other in ["mean", "kriging"] {
            if let Some(Ok(t)) = run.report.test("dgin", other, GapClass::Mixed).map(|t| &t.test) {
                println!("=> dgin vs {other} (mixed): mean diff {:.3}, p {:.4}", t.mean_diff, t.p);
            }
        }
        println!();
    }
}
