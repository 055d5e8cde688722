//! End-to-end helpers: subdivide a reconstruction, normalise each subset,
//! estimate normals and relative angles, and evaluate entropies.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cloud::{NormalField, PointCloud, RelativeAngleField};
use crate::cloud_io::CloudData;
use crate::entropy_eval::{aggregate, evaluate_subset, EntropyReport, EvaluationSettings};
use crate::error::{Error, Result};
use crate::features::{average_of, estimate_normals, relative_angles, DEFAULT_NEIGHBORHOOD};
use crate::normalization::{normalize, NormalizationKind, NormalizationParams};
use crate::spatial_index::KdTree;
use crate::subdivision::{extract_subsets, GatherMode};

/// Which points the average normal is taken over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AverageScope {
    /// Each subset uses its own average normal.
    #[default]
    Subset,
    /// One average over every point of every subset processed together.
    Dataset,
}

impl std::str::FromStr for AverageScope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "subset" => Ok(AverageScope::Subset),
            "dataset" => Ok(AverageScope::Dataset),
            other => Err(Error::InvalidParameter(format!(
                "unknown average scope `{other}` (expected `subset` or `dataset`)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSettings {
    pub neighborhood: usize,
    pub scope: AverageScope,
}

impl Default for FeatureSettings {
    fn default() -> Self {
        Self {
            neighborhood: DEFAULT_NEIGHBORHOOD,
            scope: AverageScope::Subset,
        }
    }
}

/// A normalised subset with its normals and relative angles.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsetFeatures {
    pub params: NormalizationParams,
    pub data: CloudData,
}

impl SubsetFeatures {
    pub fn cloud(&self) -> &PointCloud {
        &self.data.cloud
    }

    pub fn normals(&self) -> &NormalField {
        self.data
            .normals
            .as_ref()
            .expect("features always carry normals")
    }

    pub fn angles(&self) -> &RelativeAngleField {
        self.data
            .angles
            .as_ref()
            .expect("features always carry angles")
    }
}

/// Splits a reconstruction into subsets of `subset_size` points (raw
/// coordinates, labels carried along). A cloud no larger than `subset_size`
/// is returned as a single subset.
pub fn split(data: &CloudData, subset_size: usize, mode: GatherMode) -> Result<Vec<CloudData>> {
    data.cloud.require_nonempty()?;
    if data.cloud.len() <= subset_size {
        return Ok(vec![data.clone()]);
    }
    let tree = KdTree::build(&data.cloud)?;
    let plan = extract_subsets(&data.cloud, &tree, subset_size, mode)?;
    Ok(plan.subsets.iter().map(|idx| data.select(idx)).collect())
}

fn normals_for(
    data: &CloudData,
    kind: NormalizationKind,
    k: usize,
) -> Result<(NormalizationParams, PointCloud, NormalField)> {
    let (cloud, params) = normalize(&data.cloud, kind)?;
    let tree = KdTree::build(&cloud)?;
    let normals = estimate_normals(&cloud, &tree, k)?;
    Ok((params, cloud, normals))
}

/// Normalises a single cloud and computes its normals and relative angles.
pub fn compute_features(
    data: &CloudData,
    kind: NormalizationKind,
    neighborhood: usize,
) -> Result<SubsetFeatures> {
    let settings = FeatureSettings {
        neighborhood,
        scope: AverageScope::Subset,
    };
    Ok(compute_features_batch(std::slice::from_ref(data), kind, settings)?.remove(0))
}

/// Feature computation for a batch of subsets, in parallel over subsets.
pub fn compute_features_batch(
    subsets: &[CloudData],
    kind: NormalizationKind,
    settings: FeatureSettings,
) -> Result<Vec<SubsetFeatures>> {
    if subsets.is_empty() {
        return Err(Error::InvalidParameter("no subsets to process".into()));
    }
    let staged = subsets
        .par_iter()
        .map(|d| normals_for(d, kind, settings.neighborhood))
        .collect::<Result<Vec<_>>>()?;

    let shared = match settings.scope {
        AverageScope::Subset => None,
        AverageScope::Dataset => {
            let all: Vec<_> = staged
                .iter()
                .flat_map(|(_, _, n)| n.normals().iter().copied())
                .collect();
            Some(average_of(&all)?)
        }
    };

    staged
        .into_iter()
        .zip(subsets)
        .map(|((params, cloud, normals), source)| {
            let average = match shared {
                Some(a) => a,
                None => average_of(normals.normals())?,
            };
            let angles = relative_angles(&normals, average)?;
            Ok(SubsetFeatures {
                params,
                data: CloudData {
                    cloud,
                    labels: source.labels.clone(),
                    normals: Some(normals),
                    angles: Some(angles),
                },
            })
        })
        .collect()
}

/// Per-subset entropy rows for every requested normalisation, averaged into
/// one report. Subsets must be labelled.
pub fn entropy_report(
    subsets: &[CloudData],
    kinds: &[NormalizationKind],
    features: FeatureSettings,
    evaluation: EvaluationSettings,
) -> Result<EntropyReport> {
    if let Some(i) = subsets.iter().position(|s| s.labels.is_none()) {
        return Err(Error::InvalidParameter(format!("subset {i} has no labels")));
    }
    let mut rows = Vec::new();
    for &kind in kinds {
        let processed = compute_features_batch(subsets, kind, features)?;
        let per_subset = processed
            .par_iter()
            .map(|f| {
                evaluate_subset(
                    f.cloud(),
                    f.data.labels.as_ref().expect("checked above"),
                    f.normals(),
                    f.angles(),
                    kind,
                    evaluation,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        rows.extend(per_subset.into_iter().flatten());
    }
    aggregate(&rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cloud::{Label, LabelField};
    use crate::geometry::Point3;

    fn grid(n: usize, z: impl Fn(f64, f64) -> f64) -> CloudData {
        let pts: Vec<Point3> = (0..n * n)
            .map(|i| {
                let x = (i % n) as f64 + 0.01 * ((i * 7) % 5) as f64;
                let y = (i / n) as f64 + 0.01 * ((i * 3) % 7) as f64;
                [x, y, z(x, y)]
            })
            .collect();
        let len = pts.len();
        CloudData::new(PointCloud::new(pts).unwrap())
            .with_labels(LabelField::uniform(Label::Undamaged, len))
    }

    #[test]
    fn flat_grid_has_zero_angles() {
        let data = grid(20, |_, _| 0.0);
        let f = compute_features(&data, NormalizationKind::Global, 16).unwrap();
        assert!(f.angles().angles().iter().all(|&a| a < 1e-9));
        assert_eq!(f.data.labels, data.labels);
    }

    #[test]
    fn dataset_scope_shares_average() {
        let a = grid(12, |_, _| 0.0);
        let b = grid(12, |x, _| 0.5 * x);
        let settings = FeatureSettings {
            neighborhood: 10,
            scope: AverageScope::Dataset,
        };
        let out =
            compute_features_batch(&[a.clone(), b.clone()], NormalizationKind::Global, settings)
                .unwrap();
        assert_eq!(
            out[0].angles().average_normal(),
            out[1].angles().average_normal()
        );
        let own = compute_features_batch(
            &[a, b],
            NormalizationKind::Global,
            FeatureSettings {
                neighborhood: 10,
                scope: AverageScope::Subset,
            },
        )
        .unwrap();
        assert!(own[0].angles().angles().iter().all(|&t| t < 1e-9));
        assert!(own[1].angles().angles().iter().all(|&t| t < 1e-6));
        assert!(out[0].angles().angles()[0] > 0.1);
    }

    #[test]
    fn split_small_cloud_is_identity() {
        let data = grid(5, |_, _| 0.0);
        let parts = split(&data, 100, GatherMode::Nearest).unwrap();
        assert_eq!(parts, vec![data.clone()]);
        let parts = split(&data, 10, GatherMode::Nearest).unwrap();
        assert_eq!(parts.len(), 3);
        assert!(parts
            .iter()
            .all(|p| p.cloud.len() == 10 && p.labels.as_ref().unwrap().len() == 10));
    }

    #[test]
    fn entropy_needs_labels() {
        let mut data = grid(10, |_, _| 0.0);
        data.labels = None;
        assert!(entropy_report(
            &[data],
            &[NormalizationKind::Global],
            FeatureSettings::default(),
            EvaluationSettings::default()
        )
        .is_err());
    }
}
