//! Collect an influence dataset from the global Grab A Chair simulator and
//! train a GRU influence predictor on it. Writes the dataset (NDJSON), the
//! model (JSON) and the learning curve (CSV) into the system temp directory.

use iaplan::gac::{GacConfig, GacGlobalSim};
use iaplan::ials::GacDomain;
use iaplan::influence::{collect_dataset, train, TrainConfig};
use iaplan::RngStream;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = GacConfig::new(5);
    let global = GacGlobalSim::new(cfg.clone());
    let codec = GacDomain::new(cfg.clone());

    let out = std::env::temp_dir();
    let dataset = collect_dataset(&global, &codec, "gac", 500, cfg.horizon, &RngStream::new(1));
    dataset.save(&out.join("gac_dataset.ndjson"))?;
    println!(
        "collected {} episodes (seq_len {}, input width {}, {} source bits)",
        dataset.episodes.len(),
        dataset.seq_len(),
        dataset.input_width(),
        dataset.source_bits(),
    );

    let tc = TrainConfig { epochs: 300, learning_rate: 3e-3, ..TrainConfig::default() };
    let (model, curve) = train(&dataset, &tc)?;
    model.save(&out.join("gac_model.json"), Some(&tc))?;
    curve.save_csv(&out.join("gac_curve.csv"))?;

    let last = curve.val_ce.len() - 1;
    println!(
        "trained {} epochs: train CE {:.4} -> {:.4}, val CE {:.4} -> {:.4} nats/bit",
        curve.val_ce.len(),
        curve.train_ce[0],
        curve.train_ce[last],
        curve.val_ce[0],
        curve.val_ce[last],
    );
    println!(
        "wrote gac_dataset.ndjson, gac_model.json, gac_curve.csv under {}",
        out.display()
    );
    Ok(())
}
