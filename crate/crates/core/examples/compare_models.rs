//! Run the repeated train/test protocol on a noisy synthetic dataset for
//! the histogram model and the three statistic-based comparison models.

use hasqoe::baselines::{BaselineKind, BaselineModel};
use hasqoe::{
    generate_labeled_dataset, run_split_protocol, Compensation, FittedHistogram, GeneratorConfig,
    LabelOptions, ModelWeights, SessionModel, SplitProtocol,
};

fn main() -> hasqoe::Result<()> {
    let options = LabelOptions {
        noise_sd: 0.25,
        ..Default::default()
    };
    let config = GeneratorConfig {
        rng_seed: 1,
        ..Default::default()
    };
    let dataset = generate_labeled_dataset(&config, 400, &ModelWeights::reference(), &options)?;
    let protocol = SplitProtocol::standard(7);

    let mut models: Vec<Box<dyn SessionModel>> = vec![Box::new(FittedHistogram::default())];
    for kind in BaselineKind::ALL {
        models.push(Box::new(BaselineModel::fitted(kind)));
    }

    println!("{:<24} {:>8} {:>8}", "model", "PCC", "RMSE");
    for model in &models {
        let report =
            run_split_protocol(&dataset, &protocol, model.as_ref(), Compensation::Training)?;
        println!(
            "{:<24} {:>8.4} {:>8.4}",
            model.name(),
            report.pcc,
            report.rmse
        );
    }
    Ok(())
}
