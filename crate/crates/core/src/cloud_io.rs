//! Text point-cloud formats, per-combination feature files, storage
//! accounting and colourised PLY export.
//!
//! # xyz-text
//!
//! ```text
//! # cols: x y z nx ny nz angle label
//! # average-normal: 0.012345 -0.001234 0.999923
//! # neighborhood: 30
//! -0.500000 0.123456 0.004321 0.010000 -0.020000 0.999750 0.022364 0.000000
//! ```
//!
//! The `# cols:` line is optional; without it the layout is inferred from the
//! column count of the first data line (3: `x y z`, 4: `+label`,
//! 5: `+angle label`, 6: `+normal`, 7: `+normal label`,
//! 8: `+normal angle label`). Scalars are written in fixed-point with six
//! decimals. Labels are written as `0.000000` / `1.000000` and read back from
//! either that form or a bare `0` / `1`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cloud::{Label, LabelField, NormalField, PointCloud, RelativeAngleField};
use crate::error::{Error, Result};
use crate::geometry::Point3;

/// Decimal places for every scalar written by this module.
pub const DECIMALS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CloudFormat {
    XyzText,
    PlyAscii,
}

impl CloudFormat {
    /// `.ply` selects PLY; anything else is treated as xyz-text.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("ply") => CloudFormat::PlyAscii,
            _ => CloudFormat::XyzText,
        }
    }
}

/// A cloud together with whatever per-point fields its file carried.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CloudData {
    pub cloud: PointCloud,
    pub labels: Option<LabelField>,
    pub normals: Option<NormalField>,
    pub angles: Option<RelativeAngleField>,
}

impl CloudData {
    pub fn new(cloud: PointCloud) -> Self {
        Self {
            cloud,
            ..Default::default()
        }
    }

    pub fn with_labels(mut self, labels: LabelField) -> Self {
        self.labels = Some(labels);
        self
    }

    /// Subset of points (and their fields) at `indices`.
    pub fn select(&self, indices: &[usize]) -> CloudData {
        CloudData {
            cloud: self.cloud.select(indices),
            labels: self.labels.as_ref().map(|l| l.select(indices)),
            normals: self.normals.as_ref().map(|n| n.select(indices)),
            angles: self.angles.as_ref().map(|a| {
                RelativeAngleField::new(
                    indices.iter().map(|&i| a.angles()[i]).collect(),
                    a.average_normal(),
                )
            }),
        }
    }

    fn check_aligned(&self) -> Result<()> {
        let n = self.cloud.len();
        if let Some(l) = &self.labels {
            l.check_aligned(n)?;
        }
        if let Some(f) = &self.normals {
            f.check_aligned(n)?;
        }
        if let Some(a) = &self.angles {
            a.check_aligned(n)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Column {
    X,
    Y,
    Z,
    Nx,
    Ny,
    Nz,
    Angle,
    Label,
}

impl Column {
    fn name(self) -> &'static str {
        match self {
            Column::X => "x",
            Column::Y => "y",
            Column::Z => "z",
            Column::Nx => "nx",
            Column::Ny => "ny",
            Column::Nz => "nz",
            Column::Angle => "angle",
            Column::Label => "label",
        }
    }

    fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "x" => Column::X,
            "y" => Column::Y,
            "z" => Column::Z,
            "nx" => Column::Nx,
            "ny" => Column::Ny,
            "nz" => Column::Nz,
            "angle" => Column::Angle,
            "label" => Column::Label,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Layout {
    columns: Vec<Column>,
}

impl Layout {
    fn new(normal: bool, angle: bool, label: bool) -> Self {
        let mut columns = vec![Column::X, Column::Y, Column::Z];
        if normal {
            columns.extend([Column::Nx, Column::Ny, Column::Nz]);
        }
        if angle {
            columns.push(Column::Angle);
        }
        if label {
            columns.push(Column::Label);
        }
        Self { columns }
    }

    fn inferred(count: usize) -> Option<Self> {
        Some(match count {
            3 => Self::new(false, false, false),
            4 => Self::new(false, false, true),
            5 => Self::new(false, true, true),
            6 => Self::new(true, false, false),
            7 => Self::new(true, false, true),
            8 => Self::new(true, true, true),
            _ => return None,
        })
    }

    fn position(&self, c: Column) -> Option<usize> {
        self.columns.iter().position(|&x| x == c)
    }

    fn has(&self, c: Column) -> bool {
        self.position(c).is_some()
    }

    fn header(&self) -> String {
        let names: Vec<&str> = self.columns.iter().map(|c| c.name()).collect();
        format!("# cols: {}", names.join(" "))
    }

    fn validate(&self) -> std::result::Result<(), String> {
        for c in [Column::X, Column::Y, Column::Z] {
            if !self.has(c) {
                return Err(format!("column layout lacks `{}`", c.name()));
            }
        }
        let normals = [Column::Nx, Column::Ny, Column::Nz].map(|c| self.has(c));
        if normals.iter().any(|&b| b) && !normals.iter().all(|&b| b) {
            return Err("normal columns must include all of nx ny nz".into());
        }
        let mut seen = self.columns.clone();
        seen.sort_by_key(|c| c.name());
        seen.dedup();
        if seen.len() != self.columns.len() {
            return Err("duplicate column in layout".into());
        }
        Ok(())
    }
}

/// Reads a cloud in the given format.
pub fn read_cloud(path: &Path, format: CloudFormat) -> Result<CloudData> {
    let text = fs::read_to_string(path).map_err(|source| Error::Read {
        path: path.to_path_buf(),
        source,
    })?;
    match format {
        CloudFormat::XyzText => parse_xyz(&text, path),
        CloudFormat::PlyAscii => parse_ply(&text, path),
    }
}

/// Reads a cloud, picking the format from the file extension.
pub fn read_cloud_auto(path: &Path) -> Result<CloudData> {
    read_cloud(path, CloudFormat::from_path(path))
}

fn parse_error(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

#[derive(Default)]
struct Columns {
    points: Vec<Point3>,
    normals: Vec<Point3>,
    angles: Vec<f64>,
    labels: Vec<Label>,
}

impl Columns {
    fn push_row(
        &mut self,
        layout: &Layout,
        tokens: &[&str],
        path: &Path,
        line: usize,
    ) -> Result<()> {
        if tokens.len() != layout.columns.len() {
            return Err(parse_error(
                path,
                line,
                format!(
                    "expected {} columns, found {}",
                    layout.columns.len(),
                    tokens.len()
                ),
            ));
        }
        let mut p = [0.0; 3];
        let mut n = [0.0; 3];
        for (&col, tok) in layout.columns.iter().zip(tokens) {
            let value: f64 = tok
                .parse()
                .map_err(|_| parse_error(path, line, format!("`{tok}` is not a number")))?;
            if !value.is_finite() {
                return Err(parse_error(path, line, format!("non-finite value `{tok}`")));
            }
            match col {
                Column::X => p[0] = value,
                Column::Y => p[1] = value,
                Column::Z => p[2] = value,
                Column::Nx => n[0] = value,
                Column::Ny => n[1] = value,
                Column::Nz => n[2] = value,
                Column::Angle => self.angles.push(value),
                Column::Label => {
                    let label = if value == 0.0 {
                        Label::Undamaged
                    } else if value == 1.0 {
                        Label::Damaged
                    } else {
                        return Err(parse_error(
                            path,
                            line,
                            format!("label `{tok}` is not 0 or 1"),
                        ));
                    };
                    self.labels.push(label);
                }
            }
        }
        self.points.push(p);
        if layout.has(Column::Nx) {
            self.normals.push(n);
        }
        Ok(())
    }

    fn finish(
        self,
        layout: &Layout,
        average_normal: Option<Point3>,
        neighborhood: usize,
    ) -> Result<CloudData> {
        let cloud = PointCloud::new(self.points)?;
        Ok(CloudData {
            cloud,
            labels: layout
                .has(Column::Label)
                .then(|| LabelField::new(self.labels)),
            normals: layout
                .has(Column::Nx)
                .then(|| NormalField::new(self.normals, neighborhood)),
            angles: layout
                .has(Column::Angle)
                .then(|| RelativeAngleField::new(self.angles, average_normal.unwrap_or([0.0; 3]))),
        })
    }
}

fn parse_xyz(text: &str, path: &Path) -> Result<CloudData> {
    let mut layout: Option<Layout> = None;
    let mut average_normal = None;
    let mut neighborhood = 0usize;
    let mut columns = Columns::default();

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            let comment = comment.trim();
            if let Some(spec) = comment.strip_prefix("cols:") {
                if layout.is_some() {
                    return Err(parse_error(path, line_no, "column header after data"));
                }
                let cols = spec
                    .split_whitespace()
                    .map(|name| {
                        Column::parse(name).ok_or_else(|| {
                            parse_error(path, line_no, format!("unknown column `{name}`"))
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                let l = Layout { columns: cols };
                l.validate().map_err(|m| parse_error(path, line_no, m))?;
                layout = Some(l);
            } else if let Some(v) = comment.strip_prefix("average-normal:") {
                let vals: Vec<f64> = v
                    .split_whitespace()
                    .map(|t| t.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| parse_error(path, line_no, "malformed average-normal"))?;
                if vals.len() != 3 || !vals.iter().all(|v| v.is_finite()) {
                    return Err(parse_error(path, line_no, "malformed average-normal"));
                }
                average_normal = Some([vals[0], vals[1], vals[2]]);
            } else if let Some(v) = comment.strip_prefix("neighborhood:") {
                neighborhood = v
                    .trim()
                    .parse()
                    .map_err(|_| parse_error(path, line_no, "malformed neighborhood"))?;
            }
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        let layout = match &mut layout {
            Some(l) => &*l,
            None => {
                let inferred = Layout::inferred(tokens.len()).ok_or_else(|| {
                    parse_error(
                        path,
                        line_no,
                        format!("cannot infer a layout from {} columns", tokens.len()),
                    )
                })?;
                layout.insert(inferred)
            }
        };
        columns.push_row(layout, &tokens, path, line_no)?;
    }

    let layout = layout.unwrap_or_else(|| Layout::new(false, false, false));
    columns.finish(&layout, average_normal, neighborhood)
}

fn parse_ply(text: &str, path: &Path) -> Result<CloudData> {
    struct Element {
        name: String,
        count: usize,
        properties: Vec<String>,
    }

    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, l)) if l.trim() == "ply" => {}
        _ => return Err(parse_error(path, 1, "missing `ply` magic")),
    }

    let mut elements: Vec<Element> = Vec::new();
    let mut header_done = false;
    for (i, raw) in lines.by_ref() {
        let line_no = i + 1;
        let tokens: Vec<&str> = raw.split_whitespace().collect();
        match tokens.as_slice() {
            [] => {}
            ["format", "ascii", _] => {}
            ["format", other, ..] => {
                return Err(parse_error(
                    path,
                    line_no,
                    format!("unsupported PLY format `{other}` (only ascii)"),
                ))
            }
            ["comment", ..] | ["obj_info", ..] => {}
            ["element", name, count] => {
                let count = count
                    .parse()
                    .map_err(|_| parse_error(path, line_no, "bad element count"))?;
                elements.push(Element {
                    name: name.to_string(),
                    count,
                    properties: Vec::new(),
                });
            }
            ["property", "list", ..] => match elements.last_mut() {
                Some(e) if e.name == "vertex" => {
                    return Err(parse_error(
                        path,
                        line_no,
                        "list properties on vertices are not supported",
                    ))
                }
                Some(e) => e.properties.push(String::new()),
                None => return Err(parse_error(path, line_no, "property before element")),
            },
            ["property", _ty, name] => match elements.last_mut() {
                Some(e) => e.properties.push(name.to_string()),
                None => return Err(parse_error(path, line_no, "property before element")),
            },
            ["end_header"] => {
                header_done = true;
                break;
            }
            _ => {
                return Err(parse_error(
                    path,
                    line_no,
                    format!("unexpected header line `{raw}`"),
                ))
            }
        }
    }
    if !header_done {
        return Err(parse_error(
            path,
            text.lines().count().max(1),
            "missing end_header",
        ));
    }

    let mut columns = Columns::default();
    let mut found_vertex = false;
    let mut layout = Layout::new(false, false, false);
    'elements: for element in &elements {
        if element.name != "vertex" {
            for _ in 0..element.count {
                if lines.next().is_none() {
                    break 'elements;
                }
            }
            continue;
        }
        found_vertex = true;
        let picks: Vec<Option<Column>> = element
            .properties
            .iter()
            .map(|p| Column::parse(p))
            .collect();
        let known: Vec<Column> = picks.iter().flatten().copied().collect();
        layout = Layout { columns: known };
        layout.validate().map_err(|m| parse_error(path, 1, m))?;

        let mut read = 0;
        while read < element.count {
            let Some((i, raw)) = lines.next() else {
                return Err(parse_error(
                    path,
                    text.lines().count(),
                    format!("expected {} vertices, found {read}", element.count),
                ));
            };
            let line_no = i + 1;
            let tokens: Vec<&str> = raw.split_whitespace().collect();
            if tokens.is_empty() {
                continue;
            }
            if tokens.len() != picks.len() {
                return Err(parse_error(
                    path,
                    line_no,
                    format!(
                        "expected {} properties, found {}",
                        picks.len(),
                        tokens.len()
                    ),
                ));
            }
            let selected: Vec<&str> = tokens
                .iter()
                .zip(&picks)
                .filter_map(|(t, p)| p.map(|_| *t))
                .collect();
            columns.push_row(&layout, &selected, path, line_no)?;
            read += 1;
        }
        break;
    }
    if !found_vertex {
        return Err(parse_error(path, 1, "no vertex element"));
    }
    columns.finish(&layout, None, 0)
}

/// The feature combinations compared for storage and channel cost. Position
/// is always stored; combinations 5 and 6 keep it for spatial mapping only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
pub enum FeatureCombination {
    Position = 1,
    PositionNormal = 2,
    PositionAngle = 3,
    PositionNormalAngle = 4,
    AngleMapped = 5,
    NormalMapped = 6,
}

impl FeatureCombination {
    pub const ALL: [FeatureCombination; 6] = [
        FeatureCombination::Position,
        FeatureCombination::PositionNormal,
        FeatureCombination::PositionAngle,
        FeatureCombination::PositionNormalAngle,
        FeatureCombination::AngleMapped,
        FeatureCombination::NormalMapped,
    ];

    /// Storage and channel ratios are measured against this combination.
    pub const BASE: FeatureCombination = FeatureCombination::PositionNormal;

    pub fn id(self) -> u8 {
        self as u8
    }

    pub fn from_id(id: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.id() == id)
    }

    pub fn position_mapping_only(self) -> bool {
        matches!(
            self,
            FeatureCombination::AngleMapped | FeatureCombination::NormalMapped
        )
    }

    pub fn uses_position_as_input(self) -> bool {
        !self.position_mapping_only()
    }

    pub fn uses_normal(self) -> bool {
        matches!(
            self,
            FeatureCombination::PositionNormal
                | FeatureCombination::PositionNormalAngle
                | FeatureCombination::NormalMapped
        )
    }

    pub fn uses_angle(self) -> bool {
        matches!(
            self,
            FeatureCombination::PositionAngle
                | FeatureCombination::PositionNormalAngle
                | FeatureCombination::AngleMapped
        )
    }

    /// Network input channels: position counts only when used as input.
    pub fn input_channels(self) -> usize {
        3 * usize::from(self.uses_position_as_input())
            + 3 * usize::from(self.uses_normal())
            + usize::from(self.uses_angle())
    }

    pub fn description(self) -> &'static str {
        match self {
            FeatureCombination::Position => "position",
            FeatureCombination::PositionNormal => "position + normal",
            FeatureCombination::PositionAngle => "position + relative angle",
            FeatureCombination::PositionNormalAngle => "position + normal + relative angle",
            FeatureCombination::AngleMapped => "position (mapping) + relative angle",
            FeatureCombination::NormalMapped => "position (mapping) + normal",
        }
    }
}

fn push_scalar(out: &mut String, v: f64) {
    write!(out, "{v:.DECIMALS$}").expect("writing to a String cannot fail");
}

fn render(data: &CloudData, layout: &Layout) -> String {
    let n = data.cloud.len();
    // Roughly nine bytes per scalar.
    let mut out = String::with_capacity(64 + n * layout.columns.len() * 10);
    out.push_str(&layout.header());
    out.push('\n');
    if layout.has(Column::Angle) {
        if let Some(a) = &data.angles {
            let m = a.average_normal();
            out.push_str("# average-normal: ");
            push_scalar(&mut out, m[0]);
            out.push(' ');
            push_scalar(&mut out, m[1]);
            out.push(' ');
            push_scalar(&mut out, m[2]);
            out.push('\n');
        }
    }
    if layout.has(Column::Nx) {
        if let Some(f) = &data.normals {
            writeln!(out, "# neighborhood: {}", f.neighborhood()).expect("String write");
        }
    }

    for i in 0..n {
        for (j, &col) in layout.columns.iter().enumerate() {
            if j > 0 {
                out.push(' ');
            }
            let v = match col {
                Column::X => data.cloud.points()[i][0],
                Column::Y => data.cloud.points()[i][1],
                Column::Z => data.cloud.points()[i][2],
                Column::Nx => data.normals.as_ref().expect("layout checked").normals()[i][0],
                Column::Ny => data.normals.as_ref().expect("layout checked").normals()[i][1],
                Column::Nz => data.normals.as_ref().expect("layout checked").normals()[i][2],
                Column::Angle => data.angles.as_ref().expect("layout checked").angles()[i],
                Column::Label => {
                    f64::from(data.labels.as_ref().expect("layout checked").labels()[i].bit())
                }
            };
            push_scalar(&mut out, v);
        }
        out.push('\n');
    }
    out
}

fn write_text(path: &Path, text: &str) -> Result<u64> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::write(parent, e))?;
    }
    fs::write(path, text.as_bytes()).map_err(|e| Error::write(path, e))?;
    Ok(text.len() as u64)
}

/// Writes every field present in `data` as xyz-text. Returns bytes written.
pub fn write_cloud(path: &Path, data: &CloudData) -> Result<u64> {
    data.check_aligned()?;
    let layout = Layout::new(
        data.normals.is_some(),
        data.angles.is_some(),
        data.labels.is_some(),
    );
    write_text(path, &render(data, &layout))
}

/// Writes the columns demanded by `combination`: position, then normal
/// and/or angle, then label. Returns the exact number of bytes written.
pub fn write_feature_file(
    path: &Path,
    cloud: &PointCloud,
    labels: &LabelField,
    combination: FeatureCombination,
    normals: Option<&NormalField>,
    angles: Option<&RelativeAngleField>,
) -> Result<u64> {
    let missing = |field| Error::MissingField {
        combination: combination.id(),
        field,
    };
    let normals = if combination.uses_normal() {
        Some(normals.ok_or_else(|| missing("normals"))?.clone())
    } else {
        None
    };
    let angles = if combination.uses_angle() {
        Some(angles.ok_or_else(|| missing("relative angles"))?.clone())
    } else {
        None
    };
    let data = CloudData {
        cloud: cloud.clone(),
        labels: Some(labels.clone()),
        normals,
        angles,
    };
    write_cloud(path, &data)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StorageRow {
    pub combination: u8,
    pub description: String,
    pub bytes: u64,
    pub storage_ratio: f64,
    pub input_channels: usize,
    pub channel_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StorageReport {
    pub points: usize,
    pub rows: Vec<StorageRow>,
}

impl StorageReport {
    pub fn row(&self, combination: FeatureCombination) -> &StorageRow {
        self.rows
            .iter()
            .find(|r| r.combination == combination.id())
            .expect("report holds every combination")
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &self.rows {
            w.serialize(row)
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

    pub fn to_table(&self) -> String {
        let mut out = format!("Storage per feature combination ({} points)\n", self.points);
        writeln!(
            out,
            "{:<3} {:<38} {:>10} {:>9} {:>9} {:>9}",
            "#", "combination", "bytes", "% base", "channels", "% base"
        )
        .expect("String write");
        for r in &self.rows {
            writeln!(
                out,
                "{:<3} {:<38} {:>10} {:>8.1}% {:>9} {:>8.1}%",
                r.combination,
                r.description,
                r.bytes,
                100.0 * r.storage_ratio,
                r.input_channels,
                100.0 * r.channel_ratio
            )
            .expect("String write");
        }
        out
    }
}

/// Writes all six combination files into `scratch_dir` (created on demand)
/// and reports their sizes and channel counts relative to combination 2.
pub fn storage_report(
    cloud: &PointCloud,
    labels: &LabelField,
    normals: &NormalField,
    angles: &RelativeAngleField,
    scratch_dir: &Path,
) -> Result<StorageReport> {
    cloud.require_nonempty()?;
    labels.check_aligned(cloud.len())?;
    normals.check_aligned(cloud.len())?;
    angles.check_aligned(cloud.len())?;
    fs::create_dir_all(scratch_dir).map_err(|e| Error::write(scratch_dir, e))?;

    let mut sizes = Vec::with_capacity(6);
    for combination in FeatureCombination::ALL {
        let path: PathBuf = scratch_dir.join(format!("combination_{}.xyz", combination.id()));
        let bytes = write_feature_file(
            &path,
            cloud,
            labels,
            combination,
            Some(normals),
            Some(angles),
        )?;
        sizes.push((combination, bytes));
    }

    let base_bytes = sizes
        .iter()
        .find(|(c, _)| *c == FeatureCombination::BASE)
        .map(|(_, b)| *b)
        .expect("base combination written") as f64;
    let base_channels = FeatureCombination::BASE.input_channels() as f64;
    let rows = sizes
        .into_iter()
        .map(|(c, bytes)| StorageRow {
            combination: c.id(),
            description: c.description().to_string(),
            bytes,
            storage_ratio: bytes as f64 / base_bytes,
            input_channels: c.input_channels(),
            channel_ratio: c.input_channels() as f64 / base_channels,
        })
        .collect();
    Ok(StorageReport {
        points: cloud.len(),
        rows,
    })
}

/// Low and high ends of the colour ramp used by [`write_colored_cloud`].
pub const RAMP_LOW: [u8; 3] = [49, 54, 149];
pub const RAMP_HIGH: [u8; 3] = [215, 48, 39];

/// Maps `value` linearly from `[lo, hi]` onto the two-colour ramp. A
/// degenerate range maps everything to the low colour.
pub fn ramp_color(value: f64, lo: f64, hi: f64) -> [u8; 3] {
    let span = hi - lo;
    let t = if span > 0.0 && span.is_finite() {
        ((value - lo) / span).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let mut rgb = [0u8; 3];
    for c in 0..3 {
        let a = f64::from(RAMP_LOW[c]);
        let b = f64::from(RAMP_HIGH[c]);
        rgb[c] = (a + t * (b - a)).round() as u8;
    }
    rgb
}

/// Writes an ASCII PLY whose vertex colours encode `field`.
pub fn write_colored_cloud(path: &Path, cloud: &PointCloud, field: &[f64]) -> Result<u64> {
    cloud.require_nonempty()?;
    crate::cloud::check_len("scalar field", cloud.len(), field.len())?;
    if let Some(i) = field.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "scalar field value {i} is not finite"
        )));
    }
    let lo = field.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = field.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let mut out = String::with_capacity(256 + cloud.len() * 40);
    out.push_str("ply\nformat ascii 1.0\n");
    writeln!(out, "comment scalar range {lo:.DECIMALS$} {hi:.DECIMALS$}").expect("String write");
    writeln!(out, "element vertex {}", cloud.len()).expect("String write");
    out.push_str(
        "property float x\nproperty float y\nproperty float z\n\
         property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n",
    );
    for (p, &v) in cloud.points().iter().zip(field) {
        let [r, g, b] = ramp_color(v, lo, hi);
        writeln!(
            out,
            "{:.DECIMALS$} {:.DECIMALS$} {:.DECIMALS$} {r} {g} {b}",
            p[0], p[1], p[2]
        )
        .expect("String write");
    }
    write_text(path, &out)
}
