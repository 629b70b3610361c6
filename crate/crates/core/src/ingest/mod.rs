//! Parsing and cleaning of frame-level face-tracker output.

mod catalog;

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use catalog::{
    classify_feature, group_features, AuKind, FeatureCatalog, FeatureGroup, FeatureKind,
    INTENSITY_AUS, PRESENCE_AUS,
};

use crate::error::{Error, Result};

/// Columns that describe the frame rather than the face.
pub const META_COLUMNS: [&str; 5] = ["frame", "face_id", "timestamp", "confidence", "success"];

/// Fraction of tracked frames below which a session is flagged as low quality.
pub const MIN_SUCCESS_FRACTION: f64 = 0.5;

/// Two values closer than this pooled range count as the same constant.
pub const CONSTANT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum StoryId {
    S1,
    S2,
    S3,
}

impl StoryId {
    pub const ALL: [StoryId; 3] = [StoryId::S1, StoryId::S2, StoryId::S3];
}

impl fmt::Display for StoryId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for StoryId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "S1" => Ok(StoryId::S1),
            "S2" => Ok(StoryId::S2),
            "S3" => Ok(StoryId::S3),
            other => Err(Error::Validation(format!("unknown story id {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NarrativeVoice {
    #[serde(rename = "1PNV")]
    FirstPerson,
    #[serde(rename = "3PNV")]
    ThirdPerson,
}

impl fmt::Display for NarrativeVoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NarrativeVoice::FirstPerson => "1PNV",
            NarrativeVoice::ThirdPerson => "3PNV",
        })
    }
}

impl FromStr for NarrativeVoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "1PNV" => Ok(NarrativeVoice::FirstPerson),
            "3PNV" => Ok(NarrativeVoice::ThirdPerson),
            other => Err(Error::Validation(format!(
                "unknown narrative voice {other:?}"
            ))),
        }
    }
}

/// Identifies one participant × story recording.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SessionKey {
    pub participant_id: String,
    pub story_id: StoryId,
}

impl SessionKey {
    pub fn new(participant_id: impl Into<String>, story_id: StoryId) -> Self {
        SessionKey {
            participant_id: participant_id.into(),
            story_id,
        }
    }
}

impl fmt::Display for SessionKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_{}", self.participant_id, self.story_id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionMeta {
    pub participant_id: String,
    pub story_id: StoryId,
    pub narrative_voice: NarrativeVoice,
}

impl SessionMeta {
    pub fn key(&self) -> SessionKey {
        SessionKey::new(self.participant_id.clone(), self.story_id)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameRecord {
    pub frame_index: u64,
    pub timestamp: f64,
    pub confidence: f64,
    pub success: bool,
    pub values: Vec<f64>,
}

/// One participant × story video as an ordered frame sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct Session {
    pub meta: SessionMeta,
    frames: Vec<FrameRecord>,
    nominal_fps: f64,
}

impl Session {
    /// Validate frame ordering and derive the nominal frame rate.
    pub fn new(meta: SessionMeta, frames: Vec<FrameRecord>) -> Result<Self> {
        let key = meta.key();
        if frames.is_empty() {
            return Err(Error::EmptySession(key.to_string()));
        }
        for (row, pair) in frames.windows(2).enumerate() {
            if pair[1].timestamp.partial_cmp(&pair[0].timestamp)
                != Some(std::cmp::Ordering::Greater)
            {
                return Err(Error::Validation(format!(
                    "session {key}: timestamp {} at row {} does not increase",
                    pair[1].timestamp,
                    row + 2
                )));
            }
        }
        if let Some(row) = frames
            .iter()
            .position(|f| !f.timestamp.is_finite() || f.timestamp < 0.0)
        {
            return Err(Error::Validation(format!(
                "session {key}: invalid timestamp at row {}",
                row + 1
            )));
        }
        if frames.len() < 2 {
            return Err(Error::Validation(format!(
                "session {key}: a single frame has no frame rate"
            )));
        }
        let span = frames[frames.len() - 1].timestamp - frames[0].timestamp;
        let nominal_fps = (frames.len() - 1) as f64 / span;
        Ok(Session {
            meta,
            frames,
            nominal_fps,
        })
    }

    pub fn key(&self) -> SessionKey {
        self.meta.key()
    }

    pub fn frames(&self) -> &[FrameRecord] {
        &self.frames
    }

    pub fn nominal_fps(&self) -> f64 {
        self.nominal_fps
    }

    pub fn success_fraction(&self) -> f64 {
        self.frames.iter().filter(|f| f.success).count() as f64 / self.frames.len() as f64
    }

    /// Sessions tracked in fewer than half their frames are reported, not dropped.
    pub fn is_low_quality(&self) -> bool {
        self.success_fraction() < MIN_SUCCESS_FRACTION
    }

    /// Values of one feature over successfully tracked frames.
    pub fn tracked_column(&self, feature: usize) -> Vec<f64> {
        self.frames
            .iter()
            .filter(|f| f.success)
            .map(|f| f.values[feature])
            .collect()
    }
}

/// Sessions sharing one feature catalog.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub catalog: FeatureCatalog,
    pub sessions: Vec<Session>,
}

impl Dataset {
    pub fn new(catalog: FeatureCatalog, sessions: Vec<Session>) -> Result<Self> {
        for s in &sessions {
            if let Some(f) = s.frames.iter().find(|f| f.values.len() != catalog.len()) {
                return Err(Error::Validation(format!(
                    "session {}: frame {} has {} values, catalog has {}",
                    s.key(),
                    f.frame_index,
                    f.values.len(),
                    catalog.len()
                )));
            }
        }
        Ok(Dataset { catalog, sessions })
    }
}

fn parse_bool(field: &str) -> Option<bool> {
    match field {
        "1" | "1.0" | "true" | "True" => Some(true),
        "0" | "0.0" | "false" | "False" => Some(false),
        _ => None,
    }
}

/// Missing readings may appear as empty cells or null markers.
fn parse_value(field: &str) -> Option<f64> {
    match field {
        "" | "null" | "NULL" | "NA" | "nan" | "NaN" | "-nan" => Some(f64::NAN),
        other => other.parse().ok(),
    }
}

/// Parse one session from CSV text.
pub fn parse_session_str(text: &str, meta: SessionMeta) -> Result<(FeatureCatalog, Session)> {
    parse_session_reader(text.as_bytes(), meta)
}

/// Parse one session file.
pub fn parse_session(path: &Path, meta: SessionMeta) -> Result<(FeatureCatalog, Session)> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_session_reader(std::io::BufReader::new(file), meta).map_err(|e| match e {
        Error::Format(msg) => Error::Format(format!("{}: {msg}", path.display())),
        Error::Validation(msg) => Error::Validation(format!("{}: {msg}", path.display())),
        other => other,
    })
}

fn parse_session_reader<R: std::io::Read>(
    reader: R,
    meta: SessionMeta,
) -> Result<(FeatureCatalog, Session)> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .has_headers(true)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();

    let mut positions = HashMap::new();
    for (i, name) in header.iter().enumerate() {
        if positions.insert(name.as_str(), i).is_some() {
            return Err(Error::Format(format!("duplicate header column {name:?}")));
        }
    }
    let required = |name: &str| {
        positions
            .get(name)
            .copied()
            .ok_or_else(|| Error::Format(format!("header is missing the {name:?} column")))
    };
    let frame_col = required("frame")?;
    let ts_col = required("timestamp")?;
    let conf_col = required("confidence")?;
    let success_col = required("success")?;

    let feature_cols: Vec<usize> = (0..header.len())
        .filter(|&i| !META_COLUMNS.contains(&header[i].as_str()))
        .collect();
    let names: Vec<&str> = feature_cols.iter().map(|&i| header[i].as_str()).collect();
    let catalog = FeatureCatalog::from_names(&names)?;

    let mut frames = Vec::new();
    for (row_idx, record) in rdr.records().enumerate() {
        let row = row_idx + 1;
        let record = record?;
        if record.len() != header.len() {
            return Err(Error::Format(format!(
                "row {row} has {} fields, header has {}",
                record.len(),
                header.len()
            )));
        }
        let number = |col: usize| {
            record[col].parse::<f64>().map_err(|_| {
                Error::Format(format!(
                    "row {row}: cannot parse {:?} in column {:?}",
                    &record[col], header[col]
                ))
            })
        };
        let frame_index = number(frame_col)?;
        if frame_index < 0.0 || frame_index.fract() != 0.0 {
            return Err(Error::Format(format!(
                "row {row}: frame index {frame_index} is not an ordinal"
            )));
        }
        let confidence = number(conf_col)?;
        if !(0.0..=1.0).contains(&confidence) {
            return Err(Error::Validation(format!(
                "row {row}: confidence {confidence} outside [0, 1]"
            )));
        }
        let success = parse_bool(&record[success_col]).ok_or_else(|| {
            Error::Format(format!(
                "row {row}: success flag {:?} is not boolean",
                &record[success_col]
            ))
        })?;
        let mut values = Vec::with_capacity(feature_cols.len());
        for (j, &col) in feature_cols.iter().enumerate() {
            let v = parse_value(&record[col]).ok_or_else(|| {
                Error::Format(format!(
                    "row {row}: cannot parse {:?} in column {:?}",
                    &record[col], header[col]
                ))
            })?;
            if v.is_finite() {
                let kind = catalog.kind(j);
                let ok = match kind.au {
                    Some(AuKind::Presence) => v == 0.0 || v == 1.0,
                    Some(AuKind::Intensity) => (0.0..=5.0).contains(&v),
                    None => true,
                };
                if !ok {
                    return Err(Error::Validation(format!(
                        "row {row}: {} value {v} outside its legal range",
                        header[col]
                    )));
                }
            }
            values.push(v);
        }
        frames.push(FrameRecord {
            frame_index: frame_index as u64,
            timestamp: number(ts_col)?,
            confidence,
            success,
            values,
        });
    }
    let session = Session::new(meta, frames)?;
    Ok((catalog, session))
}

/// Write a session in the same CSV layout `parse_session` reads.
pub fn write_session<W: std::io::Write>(
    writer: W,
    catalog: &FeatureCatalog,
    session: &Session,
) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = META_COLUMNS.to_vec();
    header.extend(catalog.names().iter().map(String::as_str));
    wtr.write_record(&header)?;
    let mut fields: Vec<String> = Vec::with_capacity(header.len());
    for f in &session.frames {
        fields.clear();
        fields.push(f.frame_index.to_string());
        fields.push("0".into());
        fields.push(f.timestamp.to_string());
        fields.push(f.confidence.to_string());
        fields.push(if f.success { "1" } else { "0" }.into());
        fields.extend(f.values.iter().map(|v| v.to_string()));
        wtr.write_record(&fields)?;
    }
    wtr.flush().map_err(|e| Error::io("<session writer>", e))?;
    Ok(())
}

/// One row of the sidecar metadata file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetadataRow {
    pub file: String,
    pub participant_id: String,
    pub story_id: StoryId,
    pub narrative_voice: NarrativeVoice,
}

impl MetadataRow {
    pub fn meta(&self) -> SessionMeta {
        SessionMeta {
            participant_id: self.participant_id.clone(),
            story_id: self.story_id,
            narrative_voice: self.narrative_voice,
        }
    }
}

pub const METADATA_FILE: &str = "metadata.csv";

pub fn read_metadata(path: &Path) -> Result<Vec<MetadataRow>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => Error::io(path, std::io::Error::other(e.to_string())),
            _ => Error::Csv(e),
        })?;
    let rows = rdr
        .deserialize()
        .collect::<std::result::Result<Vec<MetadataRow>, _>>()?;
    Ok(rows)
}

/// Load every session listed in `<dir>/metadata.csv`. Files parse in parallel;
/// session order follows the metadata file.
pub fn load_dataset(dir: &Path) -> Result<Dataset> {
    let meta_path = dir.join(METADATA_FILE);
    if !meta_path.exists() {
        return Err(Error::io(
            &meta_path,
            std::io::Error::new(std::io::ErrorKind::NotFound, "metadata file not found"),
        ));
    }
    let rows = read_metadata(&meta_path)?;
    if rows.is_empty() {
        return Err(Error::Validation(format!(
            "{} lists no sessions",
            meta_path.display()
        )));
    }
    let parsed: Vec<(FeatureCatalog, Session)> = rows
        .par_iter()
        .map(|row| parse_session(&dir.join(&row.file), row.meta()))
        .collect::<Result<_>>()?;
    let mut iter = parsed.into_iter();
    let (catalog, first) = iter.next().expect("non-empty");
    let mut sessions = vec![first];
    for (c, s) in iter {
        if c != catalog {
            return Err(Error::Format(format!(
                "session {} has a different feature header from the first session",
                s.key()
            )));
        }
        sessions.push(s);
    }
    Dataset::new(catalog, sessions)
}

pub fn session_file_name(key: &SessionKey) -> String {
    format!("sessions/{key}.csv")
}

/// Write every session plus `metadata.csv` under `dir`.
pub fn write_dataset(dir: &Path, dataset: &Dataset) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir.join("sessions")).map_err(|e| Error::io(dir, e))?;
    let rows: Vec<MetadataRow> = dataset
        .sessions
        .iter()
        .map(|s| MetadataRow {
            file: session_file_name(&s.key()),
            participant_id: s.meta.participant_id.clone(),
            story_id: s.meta.story_id,
            narrative_voice: s.meta.narrative_voice,
        })
        .collect();
    rows.par_iter()
        .zip(dataset.sessions.par_iter())
        .map(|(row, session)| {
            let path = dir.join(&row.file);
            let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
            write_session(std::io::BufWriter::new(file), &dataset.catalog, session)
        })
        .collect::<Result<Vec<()>>>()?;
    let meta_path = dir.join(METADATA_FILE);
    let mut wtr = csv::Writer::from_path(&meta_path)?;
    for row in &rows {
        wtr.serialize(row)?;
    }
    wtr.flush().map_err(|e| Error::io(&meta_path, e))?;
    let mut written: Vec<PathBuf> = rows.iter().map(|r| dir.join(&r.file)).collect();
    written.push(meta_path);
    Ok(written)
}

fn median_of(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Drop columns that are entirely non-finite or constant when pooled over all
/// frames of all sessions, then impute remaining non-finite readings with the
/// session median of the column (falling back to the pooled median when a
/// session has no finite reading at all).
pub fn clean_features(dataset: &Dataset) -> Result<(Dataset, Vec<String>)> {
    let f = dataset.catalog.len();
    let mut lo = vec![f64::INFINITY; f];
    let mut hi = vec![f64::NEG_INFINITY; f];
    for s in &dataset.sessions {
        for frame in &s.frames {
            for (j, &v) in frame.values.iter().enumerate() {
                if v.is_finite() {
                    lo[j] = lo[j].min(v);
                    hi[j] = hi[j].max(v);
                }
            }
        }
    }
    let keep: Vec<usize> = (0..f)
        .filter(|&j| lo[j].is_finite() && hi[j] - lo[j] > CONSTANT_TOLERANCE)
        .collect();
    if keep.is_empty() {
        return Err(Error::DegenerateDataset);
    }
    let removed: Vec<String> = (0..f)
        .filter(|j| keep.binary_search(j).is_err())
        .map(|j| dataset.catalog.names()[j].clone())
        .collect();

    let pooled_median: Vec<f64> = keep
        .par_iter()
        .map(|&j| {
            let mut all: Vec<f64> = dataset
                .sessions
                .iter()
                .flat_map(|s| s.frames.iter().map(move |fr| fr.values[j]))
                .filter(|v| v.is_finite())
                .collect();
            if all.len()
                == dataset
                    .sessions
                    .iter()
                    .map(|s| s.frames.len())
                    .sum::<usize>()
            {
                // nothing to impute anywhere in this column
                return f64::NAN;
            }
            median_of(&mut all)
        })
        .collect();

    let sessions = dataset
        .sessions
        .par_iter()
        .map(|s| {
            let fill: Vec<f64> = keep
                .iter()
                .enumerate()
                .map(|(k, &j)| {
                    let mut finite: Vec<f64> = s
                        .frames
                        .iter()
                        .map(|fr| fr.values[j])
                        .filter(|v| v.is_finite())
                        .collect();
                    if finite.len() == s.frames.len() {
                        f64::NAN
                    } else if finite.is_empty() {
                        pooled_median[k]
                    } else {
                        median_of(&mut finite)
                    }
                })
                .collect();
            let frames = s
                .frames
                .iter()
                .map(|fr| FrameRecord {
                    values: keep
                        .iter()
                        .zip(&fill)
                        .map(|(&j, &m)| {
                            if fr.values[j].is_finite() {
                                fr.values[j]
                            } else {
                                m
                            }
                        })
                        .collect(),
                    ..fr.clone()
                })
                .collect();
            Session {
                meta: s.meta.clone(),
                frames,
                nominal_fps: s.nominal_fps,
            }
        })
        .collect();
    Ok((
        Dataset {
            catalog: dataset.catalog.select(&keep),
            sessions,
        },
        removed,
    ))
}
