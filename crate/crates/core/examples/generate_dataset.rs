//! Generate a labeled dataset from a JSON generator config and write it in
//! the trace format the `qoe` tool reads.
//!
//! Usage: cargo run --example generate_dataset [OUTPUT]

use hasqoe::session::sessions_to_json;
use hasqoe::synth::tag_counts;
use hasqoe::{generate_labeled_dataset, GeneratorConfig, LabelOptions, ModelWeights};

const CONFIG: &str = r#"{
    "n_segments": {"min": 10, "max": 40},
    "transition": {"up": 0.1, "down": 0.1, "stay": 0.8},
    "stall_prob_per_boundary": 0.05,
    "stall_duration": {"kind": "exponential", "mean_s": 1.5},
    "rng_seed": 42
}"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = GeneratorConfig::from_json(CONFIG)?;
    let options = LabelOptions {
        noise_sd: 0.2,
        ..Default::default()
    };
    let dataset = generate_labeled_dataset(&config, 200, &ModelWeights::reference(), &options)?;
    let (single, multi) = tag_counts(dataset.sessions());
    let json = sessions_to_json(dataset.sessions());

    match std::env::args().nth(1) {
        Some(path) => {
            std::fs::write(&path, json)?;
            println!(
                "wrote {} sessions ({single} single-factor, {multi} multi-factor) to {path}",
                dataset.len()
            );
        }
        None => {
            let first = &dataset.sessions()[0];
            println!(
                "{} sessions ({single} single-factor, {multi} multi-factor)",
                dataset.len()
            );
            println!(
                "first session: {} segments, {} stalls, MOS {:.3}",
                first.segments().len(),
                first.interruptions().len(),
                first.ground_truth_mos().unwrap_or_default()
            );
        }
    }
    Ok(())
}
