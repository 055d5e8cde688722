use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use relangle::cloud_io::{
    read_cloud_auto, storage_report, write_cloud, write_colored_cloud, CloudData,
};
use relangle::entropy_eval::{EvaluationSettings, DEFAULT_BINS, DEFAULT_MIN_SECTION_POINTS};
use relangle::features::DEFAULT_NEIGHBORHOOD;
use relangle::normalization::{normalize, rotate};
use relangle::pipeline::{
    compute_features_batch, entropy_report, split, AverageScope, FeatureSettings, SubsetFeatures,
};
use relangle::seg_eval::{
    score, sweep_threshold, threshold_segment, ConfusionCounts, SegScores, Smoothing,
};
use relangle::subdivision::{extract_subsets, GatherMode, DEFAULT_SUBSET_SIZE};
use relangle::synth_surface::{generate, SurfaceSpec};
use relangle::{Error, KdTree, NormalizationKind, Result};

use crate::config::FileConfig;
use crate::{
    invalid, Cli, Command, EntropyArgs, ExportArgs, FeatureOpts, FeaturesArgs, FieldChoice,
    NormChoice, NormalizeArgs, ScopeChoice, ScoreArgs, SegmentArgs, SplitOpts, StorageArgs,
    SubdivideArgs, SynthArgs,
};

const DEFAULT_THRESHOLD: f64 = 0.1;

pub fn run(cli: Cli) -> Result<()> {
    let config = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(invalid("--threads must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Synth(a) => synth(a, &config),
        Command::Normalize(a) => normalize_cmd(a, &config),
        Command::Subdivide(a) => subdivide(a, &config),
        Command::Features(a) => features(a, &config),
        Command::Entropy(a) => entropy(a, &config),
        Command::Storage(a) => storage(a, &config),
        Command::Segment(a) => segment(a, &config),
        Command::Score(a) => score_cmd(a),
        Command::ExportColored(a) => export(a, &config),
    }
}

fn norm_choice(
    flag: Option<NormChoice>,
    config: &FileConfig,
    default: NormChoice,
) -> Result<NormChoice> {
    if let Some(n) = flag {
        return Ok(n);
    }
    match config.normalization.as_deref() {
        None => Ok(default),
        Some("both") => Ok(NormChoice::Both),
        Some(s) => Ok(match s.parse::<NormalizationKind>()? {
            NormalizationKind::Global => NormChoice::Global,
            NormalizationKind::AxisSpecific => NormChoice::AxisSpecific,
        }),
    }
}

fn kinds(choice: NormChoice) -> Vec<NormalizationKind> {
    match choice {
        NormChoice::Global => vec![NormalizationKind::Global],
        NormChoice::AxisSpecific => vec![NormalizationKind::AxisSpecific],
        NormChoice::Both => NormalizationKind::ALL.to_vec(),
    }
}

fn single_kind(flag: Option<NormChoice>, config: &FileConfig) -> Result<NormalizationKind> {
    match norm_choice(flag, config, NormChoice::Global)? {
        NormChoice::Both => Err(invalid("this command takes a single normalisation")),
        c => Ok(kinds(c)[0]),
    }
}

fn feature_settings(opts: &FeatureOpts, config: &FileConfig) -> Result<FeatureSettings> {
    let neighborhood = opts
        .neighborhood
        .or(config.neighborhood)
        .unwrap_or(DEFAULT_NEIGHBORHOOD);
    if neighborhood < 3 {
        return Err(invalid(format!(
            "neighbourhood {neighborhood} must be at least 3"
        )));
    }
    let scope = match (opts.scope, config.average_scope.as_deref()) {
        (Some(ScopeChoice::Subset), _) => AverageScope::Subset,
        (Some(ScopeChoice::Dataset), _) => AverageScope::Dataset,
        (None, Some(s)) => s.parse()?,
        (None, None) => AverageScope::Subset,
    };
    Ok(FeatureSettings {
        neighborhood,
        scope,
    })
}

fn split_settings(opts: &SplitOpts, config: &FileConfig) -> Result<(usize, GatherMode)> {
    let size = opts
        .subset_size
        .or(config.subset_size)
        .unwrap_or(DEFAULT_SUBSET_SIZE);
    if size == 0 {
        return Err(invalid("subset size must be positive"));
    }
    let mode = if opts.connected {
        if opts.graph_neighbors == 0 {
            return Err(invalid("graph neighbourhood must be positive"));
        }
        GatherMode::Connected {
            graph_neighbors: opts.graph_neighbors,
        }
    } else {
        GatherMode::Nearest
    };
    Ok((size, mode))
}

fn require_exists(path: &Path) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(invalid(format!("{} does not exist", path.display())))
    }
}

/// Cloud files directly inside `dir`, sorted by name.
fn cloud_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|source| Error::Read {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry
            .map_err(|source| Error::Read {
                path: dir.to_path_buf(),
                source,
            })?
            .path();
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase);
        if path.is_file() && matches!(ext.as_deref(), Some("xyz" | "txt" | "ply")) {
            files.push(path);
        }
    }
    files.sort();
    if files.is_empty() {
        return Err(invalid(format!("no cloud files in {}", dir.display())));
    }
    Ok(files)
}

/// Reads a single file or every cloud file in a directory.
fn read_inputs(path: &Path) -> Result<Vec<(PathBuf, CloudData)>> {
    require_exists(path)?;
    let files = if path.is_dir() {
        cloud_files(path)?
    } else {
        vec![path.to_path_buf()]
    };
    files
        .into_iter()
        .map(|f| read_cloud_auto(&f).map(|d| (f, d)))
        .collect()
}

fn read_single(path: &Path) -> Result<CloudData> {
    require_exists(path)?;
    if path.is_dir() {
        return Err(invalid(format!(
            "{} is a directory, expected a cloud file",
            path.display()
        )));
    }
    read_cloud_auto(path)
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|source| Error::Write {
            path: parent.to_path_buf(),
            source,
        })?;
    }
    fs::write(path, text).map_err(|source| Error::Write {
        path: path.to_path_buf(),
        source,
    })
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(|e| Error::Serialize(e.to_string()))
}

/// Writes `<stem>.txt`, `<stem>.csv` and `<stem>.json` into `dir` and echoes the table.
fn write_report(dir: &Path, stem: &str, table: &str, csv: &str, json: &str) -> Result<()> {
    write_file(&dir.join(format!("{stem}.txt")), table)?;
    write_file(&dir.join(format!("{stem}.csv")), csv)?;
    write_file(&dir.join(format!("{stem}.json")), json)?;
    print!("{table}");
    Ok(())
}

fn file_name(path: &Path) -> PathBuf {
    PathBuf::from(path.file_name().expect("cloud files have names"))
}

fn synth(args: SynthArgs, config: &FileConfig) -> Result<()> {
    let seed = args.seed.or(config.seed).unwrap_or(0);
    if args.count == 0 {
        return Err(invalid("--count must be positive"));
    }
    if !(0.0..1.0).contains(&args.damage_fraction) {
        return Err(invalid("--damage-fraction must lie in [0, 1)"));
    }
    let mut outputs = Vec::with_capacity(args.count);
    for i in 0..args.count {
        let mut spec = SurfaceSpec::plain(seed.wrapping_add(i as u64));
        if let Some(w) = args.width {
            spec.width = w;
        }
        if let Some(h) = args.height {
            spec.height = h;
        }
        if let Some(d) = args.density {
            spec.density = d;
        }
        spec.validate()?;
        spec.add_random_damage(args.damage_fraction);
        let (cloud, labels) = generate(&spec)?;
        outputs.push((spec, CloudData::new(cloud).with_labels(labels)));
    }
    for (i, (spec, data)) in outputs.iter().enumerate() {
        let stem = format!("surface_{i:03}");
        write_cloud(&args.out.join(format!("{stem}.xyz")), data)?;
        write_file(&args.out.join(format!("{stem}.json")), &to_json(spec)?)?;
        let labels = data.labels.as_ref().expect("synthetic clouds are labelled");
        println!(
            "{stem}: {} points, {} damaged",
            data.cloud.len(),
            labels.damaged_count()
        );
    }
    Ok(())
}

#[derive(Serialize)]
struct NormalizeRecord {
    input: String,
    rotation: Option<relangle::normalization::RotationDescription>,
    normalization: relangle::normalization::NormalizationParams,
}

fn normalize_cmd(args: NormalizeArgs, config: &FileConfig) -> Result<()> {
    let kind = single_kind(args.norm, config)?;
    let data = read_single(&args.input)?;
    let (source, rotation) = match args.rotate_seed {
        Some(seed) => {
            let (rotated, desc) = rotate(&data.cloud, seed);
            (rotated, Some(desc))
        }
        None => (data.cloud.clone(), None),
    };
    let (cloud, params) = normalize(&source, kind)?;
    let out = CloudData {
        cloud,
        labels: data.labels,
        normals: None,
        angles: None,
    };
    let record = NormalizeRecord {
        input: args.input.display().to_string(),
        rotation,
        normalization: params,
    };
    let json = to_json(&record)?;
    write_cloud(&args.out, &out)?;
    write_file(&args.out.with_extension("params.json"), &json)?;
    print!("{json}");
    Ok(())
}

fn subdivide(args: SubdivideArgs, config: &FileConfig) -> Result<()> {
    let (size, mode) = split_settings(&args.split, config)?;
    let data = read_single(&args.input)?;
    let size = size.min(data.cloud.len());
    let tree = KdTree::build(&data.cloud)?;
    let plan = extract_subsets(&data.cloud, &tree, size, mode)?;
    let json = to_json(&plan)?;
    for (i, idx) in plan.subsets.iter().enumerate() {
        write_cloud(
            &args.out.join(format!("subset_{i:04}.xyz")),
            &data.select(idx),
        )?;
    }
    write_file(&args.out.join("plan.json"), &json)?;
    println!("{} subsets of {} points", plan.len(), size);
    Ok(())
}

fn process(
    inputs: &[(PathBuf, CloudData)],
    kind: NormalizationKind,
    settings: FeatureSettings,
) -> Result<Vec<SubsetFeatures>> {
    let clouds: Vec<CloudData> = inputs.iter().map(|(_, d)| d.clone()).collect();
    compute_features_batch(&clouds, kind, settings)
}

fn features(args: FeaturesArgs, config: &FileConfig) -> Result<()> {
    let kind = single_kind(args.features.norm, config)?;
    let settings = feature_settings(&args.features, config)?;
    let is_dir = args.input.is_dir();
    let inputs = read_inputs(&args.input)?;
    if is_dir && args.out.is_file() {
        return Err(invalid("directory input needs a directory --out"));
    }
    let processed = process(&inputs, kind, settings)?;
    for ((path, _), f) in inputs.iter().zip(&processed) {
        let target = if is_dir {
            args.out.join(file_name(path))
        } else {
            args.out.clone()
        };
        write_cloud(&target, &f.data)?;
    }
    println!(
        "{} cloud(s) processed with k = {}",
        processed.len(),
        settings.neighborhood
    );
    Ok(())
}

fn entropy(args: EntropyArgs, config: &FileConfig) -> Result<()> {
    let kinds = kinds(norm_choice(args.features.norm, config, NormChoice::Both)?);
    let settings = feature_settings(&args.features, config)?;
    let (size, mode) = split_settings(&args.split, config)?;
    let evaluation = EvaluationSettings {
        bins: args.bins.or(config.bins).unwrap_or(DEFAULT_BINS),
        min_section_points: args
            .min_section_points
            .or(config.min_section_points)
            .unwrap_or(DEFAULT_MIN_SECTION_POINTS),
    };
    if evaluation.bins == 0 {
        return Err(invalid("--bins must be positive"));
    }
    let inputs = read_inputs(&args.input)?;
    let mut subsets = Vec::new();
    for (path, data) in &inputs {
        if data.labels.is_none() {
            return Err(invalid(format!("{} has no labels", path.display())));
        }
        subsets.extend(split(data, size, mode)?);
    }
    let report = entropy_report(&subsets, &kinds, settings, evaluation)?;
    write_report(
        &args.out,
        "entropy",
        &report.to_table(),
        &report.to_csv()?,
        &report.to_json()?,
    )
}

fn labelled_features(
    data: CloudData,
    kind: NormalizationKind,
    settings: FeatureSettings,
) -> Result<SubsetFeatures> {
    compute_features_batch(std::slice::from_ref(&data), kind, settings).map(|mut v| v.remove(0))
}

fn storage(args: StorageArgs, config: &FileConfig) -> Result<()> {
    let kind = single_kind(args.features.norm, config)?;
    let settings = feature_settings(&args.features, config)?;
    let data = read_single(&args.input)?;
    let Some(labels) = data.labels.clone() else {
        return Err(invalid(format!("{} has no labels", args.input.display())));
    };
    let (cloud, normals, angles) = match (&data.normals, &data.angles) {
        (Some(n), Some(a)) => (data.cloud.clone(), n.clone(), a.clone()),
        _ => {
            let f = labelled_features(data, kind, settings)?;
            (
                f.data.cloud.clone(),
                f.normals().clone(),
                f.angles().clone(),
            )
        }
    };
    let report = storage_report(
        &cloud,
        &labels,
        &normals,
        &angles,
        &args.out.join("combinations"),
    )?;
    write_report(
        &args.out,
        "storage",
        &report.to_table(),
        &report.to_csv()?,
        &report.to_json()?,
    )
}

/// Features from the file when present, otherwise computed on the normalised cloud.
fn with_angles(
    data: CloudData,
    kind: NormalizationKind,
    settings: FeatureSettings,
) -> Result<CloudData> {
    if data.angles.is_some() {
        Ok(data)
    } else {
        Ok(labelled_features(data, kind, settings)?.data)
    }
}

#[derive(Serialize)]
struct SegmentRecord {
    threshold: f64,
    smoothing: Option<usize>,
    swept: bool,
    counts: Option<ConfusionCounts>,
    scores: Option<SegScores>,
}

fn segment(args: SegmentArgs, config: &FileConfig) -> Result<()> {
    let kind = single_kind(args.features.norm, config)?;
    let settings = feature_settings(&args.features, config)?;
    if let Some(t) = args.threshold {
        if !(0.0..=std::f64::consts::FRAC_PI_2).contains(&t) {
            return Err(invalid(format!("threshold {t} lies outside [0, π/2]")));
        }
    }
    if args.sweep == Some(0) {
        return Err(invalid("--sweep needs at least one step"));
    }
    let data = read_single(&args.input)?;
    if args.sweep.is_some() && data.labels.is_none() {
        return Err(invalid("--sweep needs a labelled input"));
    }
    let data = with_angles(data, kind, settings)?;
    let angles = data.angles.as_ref().expect("angles computed above");
    let tree = match args.smooth {
        Some(_) => Some(KdTree::build(&data.cloud)?),
        None => None,
    };
    let smoothing = tree
        .as_ref()
        .zip(args.smooth)
        .map(|(tree, k)| Smoothing { tree, k });

    let threshold = match args.sweep {
        Some(steps) => {
            let truth = data.labels.as_ref().expect("checked above");
            sweep_threshold(angles, truth, steps, smoothing)?.threshold
        }
        None => args
            .threshold
            .or(config.threshold)
            .unwrap_or(DEFAULT_THRESHOLD),
    };
    let predicted = threshold_segment(angles, threshold, smoothing)?;
    let (counts, scores) = match &data.labels {
        Some(truth) => {
            let (c, s) = score(&predicted, truth)?;
            (Some(c), Some(s))
        }
        None => (None, None),
    };
    let record = SegmentRecord {
        threshold,
        smoothing: args.smooth,
        swept: args.sweep.is_some(),
        counts,
        scores,
    };
    let json = to_json(&record)?;
    let out = CloudData {
        labels: Some(predicted),
        ..data
    };
    write_cloud(&args.out, &out)?;
    write_file(&args.out.with_extension("segment.json"), &json)?;
    print!("{json}");
    Ok(())
}

#[derive(Serialize)]
struct ScoreRow {
    name: String,
    points: u64,
    #[serde(flatten)]
    counts: ConfusionCounts,
    #[serde(flatten)]
    scores: SegScores,
}

fn score_table(rows: &[ScoreRow]) -> String {
    let mut out = format!(
        "{:<24} {:>9} {:>9} {:>9} {:>9} {:>9}\n",
        "cloud", "points", "acc", "iou_dmg", "iou_und", "miou"
    );
    for r in rows {
        out.push_str(&format!(
            "{:<24} {:>9} {:>9.4} {:>9.4} {:>9.4} {:>9.4}\n",
            r.name,
            r.points,
            r.scores.accuracy,
            r.scores.iou_damaged,
            r.scores.iou_undamaged,
            r.scores.miou
        ));
    }
    out
}

fn score_csv(rows: &[ScoreRow]) -> String {
    let mut out =
        String::from("cloud,points,tp,tn,fp,fn,accuracy,iou_damaged,iou_undamaged,miou\n");
    for r in rows {
        let c = r.counts;
        let s = r.scores;
        out.push_str(&format!(
            "{},{},{},{},{},{},{:.6},{:.6},{:.6},{:.6}\n",
            r.name,
            r.points,
            c.tp,
            c.tn,
            c.fp,
            c.fn_,
            s.accuracy,
            s.iou_damaged,
            s.iou_undamaged,
            s.miou
        ));
    }
    out
}

fn labels_of(path: &Path, data: CloudData) -> Result<relangle::LabelField> {
    data.labels
        .ok_or_else(|| invalid(format!("{} has no labels", path.display())))
}

fn score_cmd(args: ScoreArgs) -> Result<()> {
    require_exists(&args.pred)?;
    require_exists(&args.truth)?;
    let pairs: Vec<(String, PathBuf, PathBuf)> = match (args.pred.is_dir(), args.truth.is_dir()) {
        (false, false) => vec![(
            file_name(&args.pred).display().to_string(),
            args.pred.clone(),
            args.truth.clone(),
        )],
        (true, true) => cloud_files(&args.pred)?
            .into_iter()
            .map(|p| {
                let name = file_name(&p);
                let t = args.truth.join(&name);
                if t.is_file() {
                    Ok((name.display().to_string(), p, t))
                } else {
                    Err(invalid(format!("no ground truth for {}", name.display())))
                }
            })
            .collect::<Result<_>>()?,
        _ => {
            return Err(invalid(
                "--pred and --truth must both be files or both directories",
            ))
        }
    };

    let mut rows = Vec::with_capacity(pairs.len() + 1);
    let mut total = ConfusionCounts::default();
    for (name, p, t) in pairs {
        let pred = labels_of(&p, read_cloud_auto(&p)?)?;
        let truth = labels_of(&t, read_cloud_auto(&t)?)?;
        let (counts, scores) = score(&pred, &truth)?;
        total += counts;
        rows.push(ScoreRow {
            name,
            points: counts.total(),
            counts,
            scores,
        });
    }
    if rows.len() > 1 {
        rows.push(ScoreRow {
            name: "all".into(),
            points: total.total(),
            counts: total,
            scores: total.scores()?,
        });
    }
    let table = score_table(&rows);
    match &args.out {
        Some(dir) => write_report(dir, "score", &table, &score_csv(&rows), &to_json(&rows)?),
        None => {
            print!("{table}");
            Ok(())
        }
    }
}

fn export(args: ExportArgs, config: &FileConfig) -> Result<()> {
    let kind = single_kind(args.features.norm, config)?;
    let settings = feature_settings(&args.features, config)?;
    let data = read_single(&args.input)?;
    let field: Vec<f64> = match args.field {
        FieldChoice::Z => data.cloud.points().iter().map(|p| p[2]).collect(),
        FieldChoice::Label => match &data.labels {
            Some(l) => l.labels().iter().map(|l| f64::from(l.bit())).collect(),
            None => return Err(invalid(format!("{} has no labels", args.input.display()))),
        },
        FieldChoice::Angle => {
            let data = with_angles(data.clone(), kind, settings)?;
            data.angles.expect("angles computed").angles().to_vec()
        }
        FieldChoice::NormalZ => {
            let data = match data.normals {
                Some(_) => data.clone(),
                None => labelled_features(data.clone(), kind, settings)?.data,
            };
            data.normals
                .expect("normals computed")
                .normals()
                .iter()
                .map(|n| n[2])
                .collect()
        }
    };
    let bytes = write_colored_cloud(&args.out, &data.cloud, &field)?;
    println!("wrote {} ({bytes} bytes)", args.out.display());
    Ok(())
}
