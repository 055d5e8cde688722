//! Prints the entropy table and a threshold-baseline score for synthetic
//! surfaces, e.g. `cargo run --release --example entropy_probe -- 1 2`.

use relangle::entropy_eval::EvaluationSettings;
use relangle::pipeline::{compute_features, entropy_report, split, FeatureSettings};
use relangle::seg_eval::sweep_threshold;
use relangle::subdivision::GatherMode;
use relangle::synth_surface::{generate, SurfaceSpec};
use relangle::{cloud_io::CloudData, NormalizationKind};

fn main() -> relangle::Result<()> {
    let seeds: Vec<u64> = std::env::args()
        .skip(1)
        .filter_map(|s| s.parse().ok())
        .collect();
    let seeds = if seeds.is_empty() { vec![1, 2] } else { seeds };

    let mut subsets = Vec::new();
    for &seed in &seeds {
        let spec = SurfaceSpec::random(seed);
        let (cloud, labels) = generate(&spec)?;
        println!(
            "seed {seed}: {} points, damaged fraction {:.3}",
            cloud.len(),
            labels.damaged_count() as f64 / labels.len() as f64
        );
        let data = CloudData::new(cloud).with_labels(labels);
        if seed == seeds[0] {
            let f = compute_features(&data, NormalizationKind::Global, 30)?;
            let best = sweep_threshold(f.angles(), data.labels.as_ref().unwrap(), 90, None)?;
            println!("threshold sweep on whole surface: {best:?}");
        }
        subsets.extend(split(&data, 4096, GatherMode::Nearest)?);
    }
    println!("{} subsets", subsets.len());
    let report = entropy_report(
        &subsets,
        &NormalizationKind::ALL,
        FeatureSettings::default(),
        EvaluationSettings::default(),
    )?;
    print!("{}", report.to_table());
    Ok(())
}
