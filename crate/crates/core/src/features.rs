//! Fixed-length summaries and 1 Hz resampling of per-frame feature series.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;
use std::sync::Arc;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{Dataset, FeatureCatalog, Session, SessionKey};
use crate::labels::{Label, LabelSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    Mean,
    Median,
    Stddev,
    #[serde(rename = "autocorr_1s")]
    Autocorr1s,
}

impl Statistic {
    /// Order of the statistics inside each feature's block of the summary vector.
    pub const ORDER: [Statistic; 4] = [
        Statistic::Mean,
        Statistic::Median,
        Statistic::Stddev,
        Statistic::Autocorr1s,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Statistic::Mean => "mean",
            Statistic::Median => "median",
            Statistic::Stddev => "stddev",
            Statistic::Autocorr1s => "autocorr_1s",
        }
    }
}

impl fmt::Display for Statistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Statistic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Statistic::ORDER
            .into_iter()
            .find(|st| st.as_str() == s)
            .ok_or_else(|| Error::Validation(format!("unknown statistic {s:?}")))
    }
}

/// Column name of a summary statistic, e.g. `AU14_r__mean`.
pub fn summary_name(feature: &str, stat: Statistic) -> String {
    format!("{feature}__{stat}")
}

/// Split `AU14_r__mean` back into its raw feature and statistic.
pub fn split_summary_name(name: &str) -> Option<(&str, Statistic)> {
    let (feature, stat) = name.rsplit_once("__")?;
    Some((feature, stat.parse().ok()?))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesSummary {
    pub mean: f64,
    pub median: f64,
    pub stddev: f64,
    pub autocorr_1s: f64,
}

impl SeriesSummary {
    pub fn get(&self, stat: Statistic) -> f64 {
        match stat {
            Statistic::Mean => self.mean,
            Statistic::Median => self.median,
            Statistic::Stddev => self.stddev,
            Statistic::Autocorr1s => self.autocorr_1s,
        }
    }
}

/// Lag in frames that spans one second at the given frame rate.
pub fn one_second_lag(fps: f64) -> usize {
    (fps.round() as usize).max(1)
}

/// Lag-`lag` sample autocorrelation around the global mean. Returns 0 when the
/// series is no longer than the lag or has zero variance.
pub fn autocorrelation(series: &[f64], lag: usize) -> f64 {
    let n = series.len();
    if n <= lag {
        return 0.0;
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let denom: f64 = series.iter().map(|x| (x - mean) * (x - mean)).sum();
    if denom == 0.0 {
        return 0.0;
    }
    let num: f64 = series
        .iter()
        .zip(&series[lag..])
        .map(|(a, b)| (a - mean) * (b - mean))
        .sum();
    num / denom
}

pub fn summarize_series(series: &[f64], fps: f64) -> Result<SeriesSummary> {
    if series.is_empty() {
        return Err(Error::Validation("cannot summarize an empty series".into()));
    }
    if !fps.is_finite() || fps <= 0.0 {
        return Err(Error::Validation(format!(
            "frame rate {fps} must be positive"
        )));
    }
    if let Some(i) = series.iter().position(|v| !v.is_finite()) {
        return Err(Error::Validation(format!(
            "non-finite value at position {i}"
        )));
    }
    let n = series.len();
    let mean = series.iter().sum::<f64>() / n as f64;
    let mut sorted = series.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    };
    let stddev = if n > 1 {
        (series.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    Ok(SeriesSummary {
        mean,
        median,
        stddev,
        autocorr_1s: autocorrelation(series, one_second_lag(fps)),
    })
}

/// Fixed-length description of one session.
#[derive(Debug, Clone, PartialEq)]
pub struct SummarySample {
    pub key: SessionKey,
    pub names: Arc<[String]>,
    pub vector: Vec<f64>,
    pub label: Option<Label>,
}

/// Summary column names for a catalog: catalog order × statistic order.
pub fn summary_names(catalog: &FeatureCatalog) -> Vec<String> {
    catalog
        .names()
        .iter()
        .flat_map(|f| {
            Statistic::ORDER
                .into_iter()
                .map(move |s| summary_name(f, s))
        })
        .collect()
}

fn summarize_with_names(
    session: &Session,
    catalog: &FeatureCatalog,
    names: Arc<[String]>,
) -> Result<SummarySample> {
    if !session.frames().iter().any(|f| f.success) {
        return Err(Error::UnusableSession(session.key().to_string()));
    }
    let fps = session.nominal_fps();
    let mut vector = Vec::with_capacity(4 * catalog.len());
    for j in 0..catalog.len() {
        let column = session.tracked_column(j);
        let summary = summarize_series(&column, fps).map_err(|e| {
            Error::Validation(format!(
                "session {}, feature {}: {e}",
                session.key(),
                catalog.names()[j]
            ))
        })?;
        vector.extend(Statistic::ORDER.iter().map(|&s| summary.get(s)));
    }
    Ok(SummarySample {
        key: session.key(),
        names,
        vector,
        label: None,
    })
}

/// Summarize every catalog feature over the session's tracked frames.
pub fn featurize_session(session: &Session, catalog: &FeatureCatalog) -> Result<SummarySample> {
    summarize_with_names(session, catalog, summary_names(catalog).into())
}

/// Summary vectors for a set of samples sharing one column layout.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryTable {
    pub names: Arc<[String]>,
    pub samples: Vec<SummarySample>,
}

impl SummaryTable {
    pub fn new(names: Vec<String>, samples: Vec<SummarySample>) -> Result<Self> {
        let names: Arc<[String]> = names.into();
        for s in &samples {
            if s.vector.len() != names.len() || *s.names != *names {
                return Err(Error::Validation(format!(
                    "sample {} does not match the table columns",
                    s.key
                )));
            }
        }
        Ok(SummaryTable { names, samples })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Attach labels; every sample must have one.
    pub fn with_labels(mut self, labels: &LabelSet) -> Result<Self> {
        for s in &mut self.samples {
            s.label = Some(
                labels
                    .label(&s.key)
                    .ok_or_else(|| Error::Validation(format!("no label for session {}", s.key)))?,
            );
        }
        Ok(self)
    }

    /// Keep only the named columns, in the given order.
    pub fn select_columns(&self, columns: &[String]) -> Result<Self> {
        let positions: Vec<usize> = columns
            .iter()
            .map(|c| {
                self.names
                    .iter()
                    .position(|n| n == c)
                    .ok_or_else(|| Error::Validation(format!("unknown summary column {c:?}")))
            })
            .collect::<Result<_>>()?;
        let names: Arc<[String]> = columns.to_vec().into();
        let samples = self
            .samples
            .iter()
            .map(|s| SummarySample {
                key: s.key.clone(),
                names: names.clone(),
                vector: positions.iter().map(|&p| s.vector[p]).collect(),
                label: s.label,
            })
            .collect();
        Ok(SummaryTable { names, samples })
    }

    pub fn matrix(&self) -> Array2<f64> {
        let mut x = Array2::zeros((self.samples.len(), self.names.len()));
        for (mut row, s) in x.rows_mut().into_iter().zip(&self.samples) {
            row.iter_mut().zip(&s.vector).for_each(|(d, v)| *d = *v);
        }
        x
    }

    /// Labels as booleans (`true` = empathic). Fails if any sample is unlabeled.
    pub fn targets(&self) -> Result<Vec<bool>> {
        self.samples
            .iter()
            .map(|s| {
                s.label
                    .map(Label::is_empathic)
                    .ok_or_else(|| Error::Validation(format!("session {} is unlabeled", s.key)))
            })
            .collect()
    }

    pub fn ids(&self) -> Vec<String> {
        self.samples.iter().map(|s| s.key.to_string()).collect()
    }

    /// `participant_id,story_id,label,<feature__stat>...`; an unlabeled sample
    /// has an empty label cell.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        let mut header = vec!["participant_id", "story_id", "label"];
        header.extend(self.names.iter().map(String::as_str));
        wtr.write_record(&header)?;
        for s in &self.samples {
            let mut row = vec![
                s.key.participant_id.clone(),
                s.key.story_id.to_string(),
                s.label.map(|l| l.to_string()).unwrap_or_default(),
            ];
            row.extend(s.vector.iter().map(f64::to_string));
            wtr.write_record(&row)?;
        }
        wtr.flush().map_err(|e| Error::io("<summary writer>", e))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let header = rdr.headers()?.clone();
        if header.len() < 4
            || &header[0] != "participant_id"
            || &header[1] != "story_id"
            || &header[2] != "label"
        {
            return Err(Error::Format(
                "summary table header must start with participant_id,story_id,label".into(),
            ));
        }
        let names: Arc<[String]> = header
            .iter()
            .skip(3)
            .map(str::to_string)
            .collect::<Vec<_>>()
            .into();
        let mut samples = Vec::new();
        for (row, record) in rdr.records().enumerate() {
            let record = record?;
            let label = match &record[2] {
                "" => None,
                l => Some(l.parse()?),
            };
            let vector = record
                .iter()
                .skip(3)
                .map(|v| {
                    v.parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| {
                            Error::Validation(format!("row {}: bad value {v:?}", row + 1))
                        })
                })
                .collect::<Result<Vec<f64>>>()?;
            samples.push(SummarySample {
                key: SessionKey::new(record[0].to_string(), record[1].parse()?),
                names: names.clone(),
                vector,
                label,
            });
        }
        SummaryTable::new(names.to_vec(), samples)
    }
}

/// Featurize every session of a dataset in parallel, attaching labels when given.
pub fn featurize_dataset(dataset: &Dataset, labels: Option<&LabelSet>) -> Result<SummaryTable> {
    let names: Arc<[String]> = summary_names(&dataset.catalog).into();
    let samples = dataset
        .sessions
        .par_iter()
        .map(|s| summarize_with_names(s, &dataset.catalog, names.clone()))
        .collect::<Result<Vec<_>>>()?;
    let table = SummaryTable { names, samples };
    match labels {
        Some(l) => table.with_labels(l),
        None => Ok(table),
    }
}

/// Per-second feature means of one session.
#[derive(Debug, Clone, PartialEq)]
pub struct ResampledSequence {
    pub key: SessionKey,
    /// Start second of each bin; bin `i` covers `[grid[i], grid[i] + 1)`.
    pub grid: Vec<u64>,
    pub feature_names: Arc<[String]>,
    /// bins × features
    pub matrix: Array2<f64>,
}

impl ResampledSequence {
    pub fn column(&self, feature: &str) -> Option<Vec<f64>> {
        let j = self.feature_names.iter().position(|n| n == feature)?;
        Some(self.matrix.column(j).to_vec())
    }
}

fn resample_with_names(session: &Session, names: Arc<[String]>) -> Result<ResampledSequence> {
    let frames = session.frames();
    if !frames.iter().any(|f| f.success) {
        return Err(Error::UnusableSession(session.key().to_string()));
    }
    let start = frames[0].timestamp.floor() as u64;
    let end = frames[frames.len() - 1].timestamp.floor() as u64;
    let bins = (end - start + 1) as usize;
    let width = names.len();
    let mut sums = Array2::<f64>::zeros((bins, width));
    let mut counts = vec![0usize; bins];
    for f in frames.iter().filter(|f| f.success) {
        let b = (f.timestamp.floor() as u64 - start) as usize;
        counts[b] += 1;
        sums.row_mut(b)
            .iter_mut()
            .zip(&f.values)
            .for_each(|(s, v)| *s += v);
    }
    let first_filled = counts
        .iter()
        .position(|&c| c > 0)
        .expect("some frame tracked");
    let mut matrix = Array2::<f64>::zeros((bins, width));
    let mut source = first_filled;
    for (b, &count) in counts.iter().enumerate() {
        if count > 0 {
            source = b;
            let n = count as f64;
            matrix
                .row_mut(b)
                .iter_mut()
                .zip(sums.row(b))
                .for_each(|(m, s)| *m = s / n);
        } else {
            let prev = matrix.row(source).to_owned();
            matrix.row_mut(b).assign(&prev);
        }
    }
    // leading empty bins take the first populated bin
    for b in 0..first_filled {
        let first = matrix.row(first_filled).to_owned();
        matrix.row_mut(b).assign(&first);
    }
    Ok(ResampledSequence {
        key: session.key(),
        grid: (start..=end).collect(),
        feature_names: names,
        matrix,
    })
}

/// Resample a session's tracked frames onto a 1-second grid.
pub fn resample_sequence(session: &Session, catalog: &FeatureCatalog) -> Result<ResampledSequence> {
    resample_with_names(session, catalog.names().to_vec().into())
}

pub fn resample_dataset(dataset: &Dataset) -> Result<Vec<ResampledSequence>> {
    let names: Arc<[String]> = dataset.catalog.names().to_vec().into();
    dataset
        .sessions
        .par_iter()
        .map(|s| resample_with_names(s, names.clone()))
        .collect()
}

/// Long-format CSV: `participant_id,story_id,second,<features>...`.
pub fn write_sequences<W: Write>(writer: W, sequences: &[ResampledSequence]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let Some(first) = sequences.first() else {
        wtr.write_record(["participant_id", "story_id", "second"])?;
        return Ok(());
    };
    let mut header = vec!["participant_id", "story_id", "second"];
    header.extend(first.feature_names.iter().map(String::as_str));
    wtr.write_record(&header)?;
    for seq in sequences {
        if seq.feature_names != first.feature_names {
            return Err(Error::Validation(
                "sequences have different feature columns".into(),
            ));
        }
        for (second, row) in seq.grid.iter().zip(seq.matrix.rows()) {
            let mut fields = vec![
                seq.key.participant_id.clone(),
                seq.key.story_id.to_string(),
                second.to_string(),
            ];
            fields.extend(row.iter().map(f64::to_string));
            wtr.write_record(&fields)?;
        }
    }
    wtr.flush().map_err(|e| Error::io("<sequence writer>", e))?;
    Ok(())
}

pub fn read_sequences<R: Read>(reader: R) -> Result<Vec<ResampledSequence>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.len() < 3 || &header[2] != "second" {
        return Err(Error::Format(
            "sequence header must start with participant_id,story_id,second".into(),
        ));
    }
    let names: Arc<[String]> = header
        .iter()
        .skip(3)
        .map(str::to_string)
        .collect::<Vec<_>>()
        .into();
    let mut grouped: BTreeMap<SessionKey, (Vec<u64>, Vec<f64>)> = BTreeMap::new();
    let mut order = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        let key = SessionKey::new(record[0].to_string(), record[1].parse()?);
        let bad = |v: &str| Error::Validation(format!("row {}: bad value {v:?}", row + 1));
        let second: u64 = record[2].parse().map_err(|_| bad(&record[2]))?;
        let entry = grouped.entry(key.clone()).or_insert_with(|| {
            order.push(key);
            Default::default()
        });
        if entry.0.last().is_some_and(|&last| last + 1 != second) {
            return Err(Error::Validation(format!(
                "row {}: seconds are not contiguous",
                row + 1
            )));
        }
        entry.0.push(second);
        for v in record.iter().skip(3) {
            entry.1.push(v.parse::<f64>().map_err(|_| bad(v))?);
        }
    }
    order
        .into_iter()
        .map(|key| {
            let (grid, values) = grouped.remove(&key).expect("grouped");
            let matrix = Array2::from_shape_vec((grid.len(), names.len()), values)
                .map_err(|e| Error::Format(e.to_string()))?;
            Ok(ResampledSequence {
                key,
                grid,
                feature_names: names.clone(),
                matrix,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{FrameRecord, NarrativeVoice, SessionMeta, StoryId};
    use proptest::prelude::*;

    fn session(timestamps: &[f64], columns: &[Vec<f64>], success: Option<&[bool]>) -> Session {
        let frames = timestamps
            .iter()
            .enumerate()
            .map(|(i, &t)| FrameRecord {
                frame_index: i as u64,
                timestamp: t,
                confidence: 1.0,
                success: success.is_none_or(|s| s[i]),
                values: columns.iter().map(|c| c[i]).collect(),
            })
            .collect();
        Session::new(
            SessionMeta {
                participant_id: "P1".into(),
                story_id: StoryId::S2,
                narrative_voice: NarrativeVoice::ThirdPerson,
            },
            frames,
        )
        .unwrap()
    }

    /// Direct transcription of the lag-L estimator, kept separate from the
    /// iterator version above.
    fn brute_autocorr(x: &[f64], lag: usize) -> f64 {
        let n = x.len();
        let mut mean = 0.0;
        for v in x {
            mean += v;
        }
        mean /= n as f64;
        let mut num = 0.0;
        for t in 0..n.saturating_sub(lag) {
            num += (x[t] - mean) * (x[t + lag] - mean);
        }
        let mut den = 0.0;
        for v in x {
            den += (v - mean) * (v - mean);
        }
        if n <= lag || den == 0.0 {
            0.0
        } else {
            num / den
        }
    }

    #[test]
    fn ramp_of_five() {
        let s = summarize_series(&[1.0, 2.0, 3.0, 4.0, 5.0], 1.0).unwrap();
        assert_eq!(s.mean, 3.0);
        assert_eq!(s.median, 3.0);
        assert!((s.stddev - 2.5f64.sqrt()).abs() < 1e-12);
        assert!((s.stddev - 1.5811).abs() < 1e-4);
        // (-2*-1 + -1*0 + 0*1 + 1*2) / 10
        assert!((s.autocorr_1s - 0.4).abs() < 1e-12);
        assert!((s.autocorr_1s - brute_autocorr(&[1.0, 2.0, 3.0, 4.0, 5.0], 1)).abs() < 1e-15);
    }

    #[test]
    fn constant_series() {
        let s = summarize_series(&[2.0; 4], 30.0).unwrap();
        assert_eq!(
            (s.mean, s.median, s.stddev, s.autocorr_1s),
            (2.0, 2.0, 0.0, 0.0)
        );
    }

    #[test]
    fn series_shorter_than_lag() {
        let s = summarize_series(&[1.0, 4.0, 2.0], 30.0).unwrap();
        assert_eq!(s.autocorr_1s, 0.0);
        assert!((s.mean - 7.0 / 3.0).abs() < 1e-12);
        assert_eq!(s.median, 2.0);
        assert!((s.stddev - (7.0f64 / 3.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn invalid_series() {
        assert!(summarize_series(&[], 30.0).is_err());
        assert!(summarize_series(&[1.0, f64::NAN], 30.0).is_err());
        assert!(summarize_series(&[1.0], 0.0).is_err());
        assert_eq!(summarize_series(&[7.0], 30.0).unwrap().stddev, 0.0);
    }

    #[test]
    fn lag_rounds_frame_rate() {
        assert_eq!(one_second_lag(29.97), 30);
        assert_eq!(one_second_lag(0.2), 1);
        assert_eq!(one_second_lag(30.303), 30);
    }

    #[test]
    fn full_catalog_vector_length() {
        let catalog = FeatureCatalog::openface_full();
        let cols: Vec<Vec<f64>> = (0..709)
            .map(|j| vec![j as f64 * 0.001, 0.5, 0.25])
            .collect();
        let s = session(&[0.0, 0.033, 0.066], &cols, None);
        let sample = featurize_session(&s, &catalog).unwrap();
        assert_eq!(sample.vector.len(), 2836);
        assert_eq!(sample.names.len(), 2836);
        assert_eq!(sample.names[0], "gaze_0_x__mean");
        assert_eq!(sample.names[3], "gaze_0_x__autocorr_1s");
    }

    #[test]
    fn constant_single_feature() {
        let catalog = FeatureCatalog::from_names(&["AU14_r"]).unwrap();
        let s = session(&[0.0, 0.1, 0.2, 0.3], &[vec![1.25; 4]], None);
        let sample = featurize_session(&s, &catalog).unwrap();
        assert_eq!(sample.vector, vec![1.25, 1.25, 0.0, 0.0]);
        let again = featurize_session(&s.clone(), &catalog).unwrap();
        assert_eq!(
            sample
                .vector
                .iter()
                .map(|v| v.to_bits())
                .collect::<Vec<_>>(),
            again.vector.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn failed_frames_are_excluded() {
        let catalog = FeatureCatalog::from_names(&["AU14_r"]).unwrap();
        let s = session(
            &[0.0, 0.1, 0.2],
            &[vec![1.0, 5.0, 3.0]],
            Some(&[true, false, true]),
        );
        let sample = featurize_session(&s, &catalog).unwrap();
        assert_eq!(sample.vector[0], 2.0);
        let none = session(&[0.0, 0.1], &[vec![1.0, 2.0]], Some(&[false, false]));
        assert!(matches!(
            featurize_session(&none, &catalog),
            Err(Error::UnusableSession(_))
        ));
        assert!(matches!(
            resample_sequence(&none, &catalog),
            Err(Error::UnusableSession(_))
        ));
    }

    #[test]
    fn three_minutes_at_thirty_fps_gives_180_bins() {
        let catalog = FeatureCatalog::from_names(&["AU14_r"]).unwrap();
        let ts: Vec<f64> = (0..5400).map(|k| k as f64 / 30.0).collect();
        let s = session(&ts, &[vec![0.7; 5400]], None);
        let seq = resample_sequence(&s, &catalog).unwrap();
        assert_eq!(seq.matrix.nrows(), 180);
        assert!(seq.matrix.iter().all(|&v| (v - 0.7).abs() < 1e-12));
    }

    #[test]
    fn ramp_bins_match_brute_force() {
        let catalog = FeatureCatalog::from_names(&["pose_Tx"]).unwrap();
        let ts: Vec<f64> = (0..60 * 30).map(|k| k as f64 / 30.0).collect();
        let s = session(&ts, std::slice::from_ref(&ts), None);
        let seq = resample_sequence(&s, &catalog).unwrap();
        assert_eq!(seq.grid.len(), 60);
        for t in 0..60u64 {
            let mut sum = 0.0;
            let mut n = 0.0;
            for &x in &ts {
                if x >= t as f64 && x < t as f64 + 1.0 {
                    sum += x;
                    n += 1.0;
                }
            }
            let expected = sum / n;
            assert!((seq.matrix[[t as usize, 0]] - expected).abs() < 1e-12);
            assert!((expected - (t as f64 + 29.0 / 60.0)).abs() < 1e-9);
        }
    }

    #[test]
    fn empty_bins_are_filled() {
        let catalog = FeatureCatalog::from_names(&["pose_Tx"]).unwrap();
        // bin 0 has only a failed frame, bin 2 is empty
        let s = session(
            &[0.5, 1.2, 1.7, 3.1],
            &[vec![9.0, 2.0, 4.0, 6.0]],
            Some(&[false, true, true, true]),
        );
        let seq = resample_sequence(&s, &catalog).unwrap();
        assert_eq!(seq.grid, vec![0, 1, 2, 3]);
        assert_eq!(seq.matrix.column(0).to_vec(), vec![3.0, 3.0, 3.0, 6.0]);
    }

    #[test]
    fn table_and_sequence_csv_round_trip() {
        let catalog = FeatureCatalog::from_names(&["AU14_r", "pose_Ry"]).unwrap();
        let s = session(
            &[0.0, 0.4, 1.3, 2.2],
            &[vec![0.1, 0.2, 0.3, 0.4], vec![-1.0, 0.5, 0.25, 2.0]],
            None,
        );
        let mut sample = featurize_session(&s, &catalog).unwrap();
        sample.label = Some(Label::Empathic);
        let table = SummaryTable::new(summary_names(&catalog), vec![sample]).unwrap();
        let mut buf = Vec::new();
        table.write_csv(&mut buf).unwrap();
        assert!(std::str::from_utf8(&buf)
            .unwrap()
            .starts_with("participant_id,story_id,label,AU14_r__mean"));
        assert_eq!(SummaryTable::read_csv(buf.as_slice()).unwrap(), table);

        let seqs = vec![resample_sequence(&s, &catalog).unwrap()];
        let mut buf = Vec::new();
        write_sequences(&mut buf, &seqs).unwrap();
        assert_eq!(read_sequences(buf.as_slice()).unwrap(), seqs);
    }

    #[test]
    fn summary_name_round_trip() {
        assert_eq!(
            split_summary_name("AU14_r__autocorr_1s"),
            Some(("AU14_r", Statistic::Autocorr1s))
        );
        assert_eq!(
            split_summary_name("x_3__median"),
            Some(("x_3", Statistic::Median))
        );
        assert_eq!(split_summary_name("x_3"), None);
    }

    proptest! {
        #[test]
        fn shift_and_scale(
            xs in proptest::collection::vec(-100.0f64..100.0, 1..80),
            fps in 0.5f64..40.0,
            c in -50.0f64..50.0,
            a in 0.1f64..10.0,
        ) {
            let base = summarize_series(&xs, fps).unwrap();
            let shifted = summarize_series(&xs.iter().map(|x| x + c).collect::<Vec<_>>(), fps).unwrap();
            let scaled = summarize_series(&xs.iter().map(|x| x * a).collect::<Vec<_>>(), fps).unwrap();
            let tol = 1e-9 * (1.0 + base.mean.abs() + c.abs());
            prop_assert!((shifted.mean - base.mean - c).abs() < tol);
            prop_assert!((shifted.median - base.median - c).abs() < tol);
            prop_assert!((scaled.mean - a * base.mean).abs() < 1e-9 * (1.0 + a * base.mean.abs()));
            prop_assert!((scaled.median - a * base.median).abs() < 1e-9 * (1.0 + a * base.median.abs()));
            prop_assert!((scaled.stddev - a * base.stddev).abs() < 1e-8 * (1.0 + a * base.stddev));
            // Near-constant series lose the variance to cancellation; skip those.
            if base.stddev > 1e-6 {
                prop_assert!((shifted.stddev - base.stddev).abs() < 1e-7 * (1.0 + base.stddev));
                prop_assert!((shifted.autocorr_1s - base.autocorr_1s).abs() < 1e-6);
                prop_assert!((scaled.autocorr_1s - base.autocorr_1s).abs() < 1e-6);
            }
            prop_assert!((-1.0..=1.0).contains(&base.autocorr_1s));
        }

        #[test]
        fn autocorr_matches_brute_force(xs in proptest::collection::vec(-5.0f64..5.0, 1..60), lag in 1usize..10) {
            prop_assert!((autocorrelation(&xs, lag) - brute_autocorr(&xs, lag)).abs() < 1e-12);
        }
    }
}
