//! Runs the synthetic benchmark and prints one report per feature mask.

use std::time::Instant;

use terrain_core::benchmark::{benchmark_data, evaluate_mask, BenchmarkConfig};
use terrain_core::sim::{PresetSet, SynthConfig};
use terrain_core::{FeatureMask, VehicleParams};

fn main() -> terrain_core::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let cfg = BenchmarkConfig {
        seed,
        ..BenchmarkConfig::default()
    };
    let start = Instant::now();
    let data = benchmark_data(&cfg, &VehicleParams::default(), &PresetSet::default(), &SynthConfig::default())?;
    println!("data in {:.1?}: {} train, {} test", start.elapsed(), data.train.len(), data.test.len());
    for mask in [
        FeatureMask::COLOR,
        FeatureMask::GEOMETRY,
        FeatureMask::CONTACT,
        FeatureMask::COLOR_CONTACT,
        FeatureMask::ALL,
    ] {
        let r = evaluate_mask(&data, mask, &cfg)?;
        println!(
            "{mask:<14} cv error {:5.1}%  test {:5.1}%",
            100.0 * r.cv_error,
            r.report.overall.unwrap_or(f64::NAN)
        );
        print!("{}", r.report.to_text());
    }
    println!("total {:.1?}", start.elapsed());
    Ok(())
}
