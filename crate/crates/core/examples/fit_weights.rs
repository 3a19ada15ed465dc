//! Label synthetic sessions with known weights, fit the model to them and
//! check that the known weights come back.

use hasqoe::{
    fit, generate_labeled_dataset, BinningConfig, GeneratorConfig, LabelOptions, ModelWeights,
};

fn main() -> hasqoe::Result<()> {
    let truth = ModelWeights::reference();
    let options = LabelOptions {
        reject_clamped: true,
        ..Default::default()
    };
    let dataset = generate_labeled_dataset(&GeneratorConfig::default(), 500, &truth, &options)?;
    let report = fit(&dataset, &BinningConfig::default())?;
    for w in &report.warnings {
        println!("warning: {w}");
    }

    let fitted = report.weights();
    println!(
        "rank {} of 22, training RMSE {:.2e}",
        report.rank, report.training_rmse
    );
    println!("{:<12} {:>8} {:>8}", "weight", "planted", "fitted");
    for (k, a) in truth.alpha.iter().enumerate() {
        println!(
            "{:<12} {:>8.2} {:>8.4}",
            format!("alpha_{}", k + 1),
            a,
            fitted.alpha[k]
        );
    }
    for bin in hasqoe::binning::DownSwitchBin::ALL {
        println!(
            "{:<12} {:>8.2} {:>8.4}",
            format!("beta_{},{}", bin.start(), bin.amplitude()),
            truth.beta(bin),
            fitted.beta(bin)
        );
    }
    for (k, g) in truth.gamma.iter().enumerate() {
        println!(
            "{:<12} {:>8.2} {:>8.4}",
            format!("gamma_{}", k + 1),
            g,
            fitted.gamma[k]
        );
    }
    Ok(())
}
