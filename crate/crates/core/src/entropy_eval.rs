//! Binned Shannon entropy (in bits) of point features, split by damage
//! section and averaged over subsets.
//!
//! Each feature component is binned over its theoretical range, not the
//! observed one: normalised coordinates over `[-0.5, 0.5]`, normal
//! components over `[-1, 1]` and relative angles over `[0, π/2]`.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::cloud::{Label, LabelField, NormalField, PointCloud, RelativeAngleField};
use crate::error::{Error, Result};
use crate::normalization::NormalizationKind;

pub const DEFAULT_BINS: usize = 10;
pub const DEFAULT_MIN_SECTION_POINTS: usize = 50;

/// Values this far outside the domain are clamped into the edge bins.
pub const DOMAIN_TOLERANCE: f64 = 1e-9;

pub const POSITION_DOMAIN: (f64, f64) = (-0.5, 0.5);
pub const NORMAL_DOMAIN: (f64, f64) = (-1.0, 1.0);
pub const ANGLE_DOMAIN: (f64, f64) = (0.0, FRAC_PI_2);

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    lo: f64,
    hi: f64,
    counts: Vec<u64>,
    total: u64,
}

impl Histogram {
    pub fn new(bins: usize, lo: f64, hi: f64) -> Result<Self> {
        if bins == 0 {
            return Err(Error::InvalidParameter("bin count must be positive".into()));
        }
        if !lo.is_finite() || !hi.is_finite() || lo >= hi {
            return Err(Error::InvalidParameter(format!(
                "invalid domain [{lo}, {hi}]"
            )));
        }
        Ok(Self {
            lo,
            hi,
            counts: vec![0; bins],
            total: 0,
        })
    }

    pub fn bin_of(&self, value: f64) -> Result<usize> {
        if !(value >= self.lo - DOMAIN_TOLERANCE && value <= self.hi + DOMAIN_TOLERANCE) {
            return Err(Error::OutOfDomain {
                value,
                lo: self.lo,
                hi: self.hi,
            });
        }
        let n = self.counts.len();
        let t = ((value - self.lo) / (self.hi - self.lo)).clamp(0.0, 1.0);
        Ok(((t * n as f64).floor() as usize).min(n - 1))
    }

    pub fn add(&mut self, value: f64) -> Result<()> {
        let bin = self.bin_of(value)?;
        self.counts[bin] += 1;
        self.total += 1;
        Ok(())
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Combines counts of a histogram over the same bins and domain.
    pub fn merge(&mut self, other: &Histogram) -> Result<()> {
        if self.counts.len() != other.counts.len() || self.lo != other.lo || self.hi != other.hi {
            return Err(Error::InvalidParameter(
                "histograms differ in bins or domain".into(),
            ));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.total += other.total;
        Ok(())
    }

    /// `-Σ p log2 p` over non-empty bins.
    pub fn entropy(&self) -> Result<f64> {
        if self.total == 0 {
            return Err(Error::InvalidParameter(
                "entropy of an empty histogram".into(),
            ));
        }
        let total = self.total as f64;
        let h = self
            .counts
            .iter()
            .filter(|&&c| c > 0)
            .map(|&c| {
                let p = c as f64 / total;
                -p * p.log2()
            })
            .sum::<f64>();
        // Rounding can leave a one-bin histogram at -0.0.
        Ok(h.max(0.0))
    }
}

pub fn entropy(values: &[f64], bins: usize, lo: f64, hi: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InvalidParameter(
            "entropy of an empty sequence".into(),
        ));
    }
    let mut hist = Histogram::new(bins, lo, hi)?;
    for &v in values {
        hist.add(v)?;
    }
    hist.entropy()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Feature {
    Position,
    Normal,
    RelativeAngle,
}

impl Feature {
    pub fn name(self) -> &'static str {
        match self {
            Feature::Position => "position",
            Feature::Normal => "normal",
            Feature::RelativeAngle => "relative-angle",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Section {
    Overall,
    Undamaged,
    Damaged,
}

impl Section {
    pub const ALL: [Section; 3] = [Section::Overall, Section::Undamaged, Section::Damaged];

    pub fn name(self) -> &'static str {
        match self {
            Section::Overall => "overall",
            Section::Undamaged => "undamaged",
            Section::Damaged => "damaged",
        }
    }

    fn contains(self, label: Label) -> bool {
        match self {
            Section::Overall => true,
            Section::Undamaged => label == Label::Undamaged,
            Section::Damaged => label == Label::Damaged,
        }
    }
}

/// Entropy of one feature in one section of one subset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyRow {
    pub normalization: NormalizationKind,
    pub feature: Feature,
    pub section: Section,
    /// One entry per feature component (three for position and normal).
    pub components: Vec<f64>,
    /// Mean of `components`.
    pub mean: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvaluationSettings {
    pub bins: usize,
    pub min_section_points: usize,
}

impl Default for EvaluationSettings {
    fn default() -> Self {
        Self {
            bins: DEFAULT_BINS,
            min_section_points: DEFAULT_MIN_SECTION_POINTS,
        }
    }
}

/// Per-section entropies of position, normal and relative angle for a single
/// normalised subset. Sections with fewer than `min_section_points` points
/// produce no rows.
pub fn evaluate_subset(
    cloud: &PointCloud,
    labels: &LabelField,
    normals: &NormalField,
    angles: &RelativeAngleField,
    normalization: NormalizationKind,
    settings: EvaluationSettings,
) -> Result<Vec<EntropyRow>> {
    let n = cloud.len();
    labels.check_aligned(n)?;
    normals.check_aligned(n)?;
    angles.check_aligned(n)?;
    if settings.bins == 0 {
        return Err(Error::InvalidParameter("bin count must be positive".into()));
    }

    let mut rows = Vec::new();
    for section in Section::ALL {
        let members: Vec<usize> = (0..n)
            .filter(|&i| section.contains(labels.labels()[i]))
            .collect();
        if members.is_empty() || members.len() < settings.min_section_points {
            continue;
        }

        let component_entropy = |get: &dyn Fn(usize) -> f64, (lo, hi): (f64, f64)| -> Result<f64> {
            let values: Vec<f64> = members.iter().map(|&i| get(i)).collect();
            entropy(&values, settings.bins, lo, hi)
        };

        let mut push = |feature, components: Vec<f64>| {
            let mean = components.iter().sum::<f64>() / components.len() as f64;
            rows.push(EntropyRow {
                normalization,
                feature,
                section,
                components,
                mean,
            });
        };

        let position = (0..3)
            .map(|a| component_entropy(&|i| cloud.points()[i][a], POSITION_DOMAIN))
            .collect::<Result<Vec<_>>>()?;
        push(Feature::Position, position);

        let normal = (0..3)
            .map(|a| component_entropy(&|i| normals.normals()[i][a], NORMAL_DOMAIN))
            .collect::<Result<Vec<_>>>()?;
        push(Feature::Normal, normal);

        let angle = component_entropy(&|i| angles.angles()[i], ANGLE_DOMAIN)?;
        push(Feature::RelativeAngle, vec![angle]);
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub normalization: NormalizationKind,
    pub feature: Feature,
    pub section: Section,
    pub components: Vec<f64>,
    pub mean: f64,
    /// Number of subsets that contributed to this row.
    pub subsets: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport {
    pub rows: Vec<AggregateRow>,
}

/// Averages per-subset rows key by key (normalisation, feature, section).
pub fn aggregate(rows: &[EntropyRow]) -> Result<EntropyReport> {
    if rows.is_empty() {
        return Err(Error::InvalidParameter(
            "no entropy rows to aggregate".into(),
        ));
    }
    let mut groups: BTreeMap<(NormalizationKind, Feature, Section), Vec<&EntropyRow>> =
        BTreeMap::new();
    for row in rows {
        groups
            .entry((row.normalization, row.feature, row.section))
            .or_default()
            .push(row);
    }
    let mut out = Vec::with_capacity(groups.len());
    for ((normalization, feature, section), group) in groups {
        let width = group[0].components.len();
        if group.iter().any(|r| r.components.len() != width) {
            return Err(Error::InvalidParameter(format!(
                "rows for {} / {} disagree on component count",
                feature.name(),
                section.name()
            )));
        }
        let count = group.len() as f64;
        let components: Vec<f64> = (0..width)
            .map(|c| group.iter().map(|r| r.components[c]).sum::<f64>() / count)
            .collect();
        let mean = group.iter().map(|r| r.mean).sum::<f64>() / count;
        out.push(AggregateRow {
            normalization,
            feature,
            section,
            components,
            mean,
            subsets: group.len(),
        });
    }
    Ok(EntropyReport { rows: out })
}

#[derive(Serialize)]
struct CsvRow<'a> {
    normalization: &'a str,
    feature: &'a str,
    section: &'a str,
    c1: f64,
    c2: Option<f64>,
    c3: Option<f64>,
    mean: f64,
    subsets: usize,
}

impl EntropyReport {
    pub fn get(
        &self,
        normalization: NormalizationKind,
        feature: Feature,
        section: Section,
    ) -> Option<&AggregateRow> {
        self.rows.iter().find(|r| {
            r.normalization == normalization && r.feature == feature && r.section == section
        })
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.rows {
            w.serialize(CsvRow {
                normalization: r.normalization.name(),
                feature: r.feature.name(),
                section: r.section.name(),
                c1: r.components[0],
                c2: r.components.get(1).copied(),
                c3: r.components.get(2).copied(),
                mean: r.mean,
                subsets: r.subsets,
            })
            .map_err(|e| Error::Serialize(e.to_string()))?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| Error::Serialize(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Serialize(e.to_string()))
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Serialize(e.to_string()))
    }

    /// Human-readable table: one line per normalisation and feature, one
    /// column per section.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        writeln!(
            out,
            "{:<14} {:<15} {:<26} {:<26} {:<26}",
            "normalization", "feature", "overall", "undamaged", "damaged"
        )
        .expect("String write");
        for kind in NormalizationKind::ALL {
            for feature in [Feature::Position, Feature::Normal, Feature::RelativeAngle] {
                let cells: Vec<String> = Section::ALL
                    .iter()
                    .map(|&s| match self.get(kind, feature, s) {
                        None => "-".to_string(),
                        Some(r) if r.components.len() == 1 => format!("{:.2}", r.mean),
                        Some(r) => {
                            let parts: Vec<String> =
                                r.components.iter().map(|c| format!("{c:.2}")).collect();
                            format!("{} ({:.2})", parts.join(", "), r.mean)
                        }
                    })
                    .collect();
                if cells.iter().all(|c| c == "-") {
                    continue;
                }
                writeln!(
                    out,
                    "{:<14} {:<15} {:<26} {:<26} {:<26}",
                    kind.name(),
                    feature.name(),
                    cells[0],
                    cells[1],
                    cells[2]
                )
                .expect("String write");
            }
        }
        out
    }
}
