//! Print the 22 feature frequencies of a session with quality switches and
//! stalls, next to the weight each one is multiplied by.

use hasqoe::binning::DownSwitchBin;
use hasqoe::{extract_features, BinningConfig, InterruptionEvent, ModelWeights, SessionTrace};

fn main() -> hasqoe::Result<()> {
    let trace = SessionTrace::new(
        vec![5.0, 5.0, 4.8, 3.1, 3.0, 3.2, 4.9, 5.0, 4.1, 4.0, 4.0, 4.0],
        vec![
            InterruptionEvent::new(3, 0.2),
            InterruptionEvent::new(9, 0.4),
        ],
    )?;
    let fv = extract_features(&trace, &BinningConfig::default())?;
    let w = ModelWeights::reference();

    println!("quality levels (share of segments)");
    for (n, f) in fv.f_quality.iter().enumerate() {
        println!("  level {}        {f:.3}  x {:>6.2}", n + 1, w.alpha[n]);
    }
    println!("switch events (share of boundaries and stalls)");
    for bin in DownSwitchBin::ALL {
        let f = fv.downswitch(bin);
        if f > 0.0 {
            println!(
                "  down {} by {}    {f:.3}  x {:>6.2}",
                bin.start(),
                -bin.amplitude(),
                w.beta(bin)
            );
        }
    }
    println!("  up or steady   {:.3}  x {:>6.2}", fv.f_um, w.beta_um);
    for (l, f) in fv.f_interruption.iter().enumerate() {
        if *f > 0.0 {
            println!("  stall bin {}    {f:.3}  x {:>6.2}", l + 1, w.gamma[l]);
        }
    }
    println!("predicted MOS {:.3}", hasqoe::predict_features(&fv, &w));
    Ok(())
}
