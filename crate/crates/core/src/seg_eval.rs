//! Segmentation scoring (accuracy, per-class IoU, mIoU) and a threshold
//! baseline segmenter on relative angles.

use std::f64::consts::FRAC_PI_2;
use std::ops::{Add, AddAssign};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cloud::{Label, LabelField, RelativeAngleField};
use crate::error::{Error, Result};
use crate::spatial_index::KdTree;

/// Point tallies with damaged as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegScores {
    pub accuracy: f64,
    pub iou_damaged: f64,
    pub iou_undamaged: f64,
    pub miou: f64,
}

impl ConfusionCounts {
    pub fn tally(predictions: &LabelField, truth: &LabelField) -> Result<Self> {
        if predictions.is_empty() || truth.is_empty() {
            return Err(Error::EmptyCloud);
        }
        truth.check_aligned(predictions.len())?;
        let mut c = ConfusionCounts::default();
        for (&p, &t) in predictions.labels().iter().zip(truth.labels()) {
            match (p, t) {
                (Label::Damaged, Label::Damaged) => c.tp += 1,
                (Label::Undamaged, Label::Undamaged) => c.tn += 1,
                (Label::Damaged, Label::Undamaged) => c.fp += 1,
                (Label::Undamaged, Label::Damaged) => c.fn_ += 1,
            }
        }
        Ok(c)
    }

    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }

    /// Counts with the two classes exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            tp: self.tn,
            tn: self.tp,
            fp: self.fn_,
            fn_: self.fp,
        }
    }

    /// A class missing from both prediction and truth scores IoU 1.
    pub fn scores(&self) -> Result<SegScores> {
        let total = self.total();
        if total == 0 {
            return Err(Error::EmptyCloud);
        }
        let ratio = |num: u64, den: u64| {
            if den == 0 {
                1.0
            } else {
                num as f64 / den as f64
            }
        };
        let iou_damaged = ratio(self.tp, self.tp + self.fp + self.fn_);
        let iou_undamaged = ratio(self.tn, self.tn + self.fp + self.fn_);
        Ok(SegScores {
            accuracy: (self.tp + self.tn) as f64 / total as f64,
            iou_damaged,
            iou_undamaged,
            miou: 0.5 * (iou_damaged + iou_undamaged),
        })
    }
}

impl Add for ConfusionCounts {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        Self {
            tp: self.tp + rhs.tp,
            tn: self.tn + rhs.tn,
            fp: self.fp + rhs.fp,
            fn_: self.fn_ + rhs.fn_,
        }
    }
}

impl AddAssign for ConfusionCounts {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

pub fn score(predictions: &LabelField, truth: &LabelField) -> Result<(ConfusionCounts, SegScores)> {
    let counts = ConfusionCounts::tally(predictions, truth)?;
    Ok((counts, counts.scores()?))
}

/// Optional neighbourhood majority vote applied after thresholding.
#[derive(Debug, Clone, Copy)]
pub struct Smoothing<'a> {
    pub tree: &'a KdTree,
    pub k: usize,
}

/// Labels a point damaged iff its relative angle exceeds `threshold`.
///
/// With smoothing, each label is then replaced by the majority label of its
/// `k` nearest neighbours (the point itself excluded); ties keep the point's
/// own label.
pub fn threshold_segment(
    angles: &RelativeAngleField,
    threshold: f64,
    smoothing: Option<Smoothing<'_>>,
) -> Result<LabelField> {
    if !(0.0..=FRAC_PI_2).contains(&threshold) {
        return Err(Error::InvalidParameter(format!(
            "threshold {threshold} lies outside [0, π/2]"
        )));
    }
    let raw: Vec<Label> = angles
        .angles()
        .iter()
        .map(|&a| {
            if a > threshold {
                Label::Damaged
            } else {
                Label::Undamaged
            }
        })
        .collect();

    let Some(Smoothing { tree, k }) = smoothing else {
        return Ok(LabelField::new(raw));
    };
    if tree.len() != raw.len() {
        return Err(Error::LengthMismatch {
            what: "kd-tree",
            expected: raw.len(),
            actual: tree.len(),
        });
    }
    if k == 0 || k >= raw.len() {
        return Err(Error::InvalidParameter(format!(
            "smoothing neighbourhood {k} must be in 1..{}",
            raw.len()
        )));
    }
    let smoothed = (0..raw.len())
        .into_par_iter()
        .map(|i| {
            let mut neighbours = tree.knn(tree.points()[i], k + 1)?;
            neighbours.retain(|&j| j != i);
            neighbours.truncate(k);
            let damaged = neighbours.iter().filter(|&&j| raw[j].is_damaged()).count();
            Ok(match (2 * damaged).cmp(&neighbours.len()) {
                std::cmp::Ordering::Greater => Label::Damaged,
                std::cmp::Ordering::Less => Label::Undamaged,
                std::cmp::Ordering::Equal => raw[i],
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LabelField::new(smoothed))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub threshold: f64,
    pub counts: ConfusionCounts,
    pub scores: SegScores,
}

/// Evaluates `steps + 1` evenly spaced thresholds over `[0, π/2]` and keeps
/// the one with the highest mIoU (lowest threshold on ties).
pub fn sweep_threshold(
    angles: &RelativeAngleField,
    truth: &LabelField,
    steps: usize,
    smoothing: Option<Smoothing<'_>>,
) -> Result<SweepResult> {
    if steps == 0 {
        return Err(Error::InvalidParameter(
            "sweep needs at least one step".into(),
        ));
    }
    truth.check_aligned(angles.len())?;
    let mut best: Option<SweepResult> = None;
    for i in 0..=steps {
        let threshold = FRAC_PI_2 * i as f64 / steps as f64;
        let predicted = threshold_segment(angles, threshold, smoothing)?;
        let (counts, scores) = score(&predicted, truth)?;
        if best.is_none_or(|b| scores.miou > b.scores.miou) {
            best = Some(SweepResult {
                threshold,
                counts,
                scores,
            });
        }
    }
    Ok(best.expect("at least one threshold evaluated"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cloud::PointCloud;

    fn labels(bits: &[u8]) -> LabelField {
        LabelField::new(bits.iter().map(|&b| Label::from_bit(b).unwrap()).collect())
    }

    #[test]
    fn perfect_prediction() {
        let t = labels(&[0, 1, 1, 0]);
        let (_, s) = score(&t, &t).unwrap();
        assert_eq!(
            (s.accuracy, s.iou_damaged, s.iou_undamaged, s.miou),
            (1.0, 1.0, 1.0, 1.0)
        );
    }

    #[test]
    fn hand_fixture() {
        let c = ConfusionCounts {
            tp: 3,
            tn: 5,
            fp: 1,
            fn_: 1,
        };
        let s = c.scores().unwrap();
        assert!((s.accuracy - 0.8).abs() < 1e-12);
        assert!((s.iou_damaged - 0.6).abs() < 1e-12);
        assert!((s.iou_undamaged - 5.0 / 7.0).abs() < 1e-12);
        assert!((s.miou - 0.657_142_857_142_857_1).abs() < 1e-12);
    }

    #[test]
    fn absent_class_counts_as_perfect() {
        let t = labels(&[0, 0, 0]);
        let (c, s) = score(&t, &t).unwrap();
        assert_eq!(c.tp + c.fp + c.fn_, 0);
        assert_eq!(s.iou_damaged, 1.0);
        assert_eq!(s.miou, 1.0);
    }

    #[test]
    fn input_errors() {
        assert!(score(&labels(&[0, 1]), &labels(&[0])).is_err());
        assert!(score(&labels(&[]), &labels(&[])).is_err());
    }

    #[test]
    fn concatenation_sums_counts() {
        let (p1, t1) = (labels(&[0, 1, 1, 0, 1]), labels(&[0, 1, 0, 1, 1]));
        let (p2, t2) = (labels(&[1, 1, 0]), labels(&[0, 1, 0]));
        let cat = |a: &LabelField, b: &LabelField| {
            LabelField::new(a.labels().iter().chain(b.labels()).copied().collect())
        };
        let (c1, _) = score(&p1, &t1).unwrap();
        let (c2, _) = score(&p2, &t2).unwrap();
        let (all, _) = score(&cat(&p1, &p2), &cat(&t1, &t2)).unwrap();
        assert_eq!(c1 + c2, all);
    }

    #[test]
    fn threshold_extremes() {
        let a = RelativeAngleField::new(vec![0.0, 0.3, FRAC_PI_2], [0.0, 0.0, 1.0]);
        let all_undamaged = threshold_segment(&a, FRAC_PI_2, None).unwrap();
        assert_eq!(all_undamaged.damaged_count(), 0);
        let zero = threshold_segment(&a, 0.0, None).unwrap();
        assert_eq!(zero.labels(), labels(&[0, 1, 1]).labels());
        assert!(threshold_segment(&a, -0.1, None).is_err());
        assert!(threshold_segment(&a, 2.0, None).is_err());
    }

    #[test]
    fn majority_smoothing_removes_isolated_label() {
        let pts = (0..7).map(|i| [i as f64, 0.0, 0.0]).collect();
        let cloud = PointCloud::new(pts).unwrap();
        let tree = KdTree::build(&cloud).unwrap();
        let a = RelativeAngleField::new(vec![0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 1.0]);
        let smoothed = threshold_segment(&a, 0.5, Some(Smoothing { tree: &tree, k: 2 })).unwrap();
        assert_eq!(smoothed.damaged_count(), 0);
        // Tie: point 3 has one damaged and one undamaged neighbour, keeps its own.
        let b = RelativeAngleField::new(vec![0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 1.0]);
        let smoothed = threshold_segment(&b, 0.5, Some(Smoothing { tree: &tree, k: 2 })).unwrap();
        assert_eq!(smoothed.labels(), labels(&[0, 0, 1, 1, 0, 0, 0]).labels());
    }

    #[test]
    fn sweep_finds_separating_threshold() {
        let a = RelativeAngleField::new(vec![0.05, 0.1, 0.8, 0.9, 0.02], [0.0, 0.0, 1.0]);
        let truth = labels(&[0, 0, 1, 1, 0]);
        let best = sweep_threshold(&a, &truth, 90, None).unwrap();
        assert_eq!(best.scores.miou, 1.0);
        assert!(best.threshold >= 0.1 && best.threshold < 0.8);
    }
}
