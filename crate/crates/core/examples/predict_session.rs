//! Score a few hand-built sessions with the bundled weights and show how
//! the score splits into perceptual quality and stall degradation.

use hasqoe::{
    extract_features, interruption_degradation, perceptual_quality, predict_features,
    BinningConfig, InterruptionEvent, ModelWeights, SessionTrace,
};

fn main() -> hasqoe::Result<()> {
    let weights = ModelWeights::reference();
    let config = BinningConfig::default();

    let sessions = [
        ("steady top quality", SessionTrace::constant(5.0, 30)?),
        (
            "one deep drop",
            SessionTrace::new([vec![5.0; 15], vec![2.0; 15]].concat(), vec![])?,
        ),
        (
            "gradual ramp down",
            SessionTrace::new(
                [vec![5.0; 10], vec![4.0; 10], vec![3.0; 10]].concat(),
                vec![],
            )?,
        ),
        (
            "short stall",
            SessionTrace::new(vec![4.0; 30], vec![InterruptionEvent::new(12, 0.4)])?,
        ),
        (
            "two long stalls",
            SessionTrace::new(
                vec![4.0; 30],
                vec![
                    InterruptionEvent::new(8, 2.5),
                    InterruptionEvent::new(20, 5.0),
                ],
            )?,
        ),
    ];

    println!(
        "{:<20} {:>8} {:>8} {:>8}",
        "session", "quality", "stalls", "MOS"
    );
    for (name, trace) in &sessions {
        let fv = extract_features(trace, &config)?;
        println!(
            "{:<20} {:>8.3} {:>8.3} {:>8.3}",
            name,
            perceptual_quality(&fv, &weights),
            interruption_degradation(&fv, &weights),
            predict_features(&fv, &weights)
        );
    }
    Ok(())
}
