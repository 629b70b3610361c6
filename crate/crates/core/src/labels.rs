//! Questionnaire scoring and binary empathy labels.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{SessionKey, StoryId};

/// Number of Likert items in the empathy questionnaire.
pub const ITEM_COUNT: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    LessEmpathic,
    Empathic,
}

impl Label {
    pub fn is_empathic(self) -> bool {
        self == Label::Empathic
    }

    pub fn from_positive(positive: bool) -> Self {
        if positive {
            Label::Empathic
        } else {
            Label::LessEmpathic
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Empathic => "empathic",
            Label::LessEmpathic => "less_empathic",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "empathic" | "1" => Ok(Label::Empathic),
            "less_empathic" | "0" => Ok(Label::LessEmpathic),
            other => Err(Error::Validation(format!("unknown label {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionnaireResponse {
    pub participant_id: String,
    pub story_id: StoryId,
    pub items: Vec<u8>,
}

impl QuestionnaireResponse {
    pub fn new(
        participant_id: impl Into<String>,
        story_id: StoryId,
        items: Vec<u8>,
    ) -> Result<Self> {
        let r = QuestionnaireResponse {
            participant_id: participant_id.into(),
            story_id,
            items,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn key(&self) -> SessionKey {
        SessionKey::new(self.participant_id.clone(), self.story_id)
    }

    fn validate(&self) -> Result<()> {
        if self.items.len() != ITEM_COUNT {
            return Err(Error::Validation(format!(
                "{}: expected {ITEM_COUNT} items, got {}",
                self.key(),
                self.items.len()
            )));
        }
        if let Some(v) = self.items.iter().find(|v| !(1..=5).contains(*v)) {
            return Err(Error::Validation(format!(
                "{}: item value {v} outside the 1-5 Likert range",
                self.key()
            )));
        }
        Ok(())
    }
}

/// Empathy Score: the sum of the eight Likert items, in [8, 40].
pub fn empathy_score(response: &QuestionnaireResponse) -> Result<i64> {
    response.validate()?;
    Ok(response.items.iter().map(|&v| i64::from(v)).sum())
}

fn sample_variance(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
}

/// Cronbach's alpha of a respondents × items table, using sample variances.
pub fn cronbach_alpha_table(rows: &[Vec<f64>]) -> Result<f64> {
    if rows.len() < 2 {
        return Err(Error::Validation(
            "Cronbach's alpha needs at least two respondents".into(),
        ));
    }
    let k = rows[0].len();
    if k < 2 {
        return Err(Error::Validation(
            "Cronbach's alpha needs at least two items".into(),
        ));
    }
    if rows.iter().any(|r| r.len() != k) {
        return Err(Error::Validation(
            "respondents answered different numbers of items".into(),
        ));
    }
    let item_var: f64 = (0..k)
        .map(|i| sample_variance(rows.iter().map(move |r| r[i])))
        .sum();
    let total_var = sample_variance(rows.iter().map(|r| r.iter().sum::<f64>()));
    if total_var == 0.0 {
        return Err(Error::UndefinedAlpha);
    }
    let k = k as f64;
    Ok(k / (k - 1.0) * (1.0 - item_var / total_var))
}

/// Cronbach's alpha of the questionnaire over a set of responses.
pub fn cronbach_alpha(responses: &[QuestionnaireResponse]) -> Result<f64> {
    for r in responses {
        r.validate()?;
    }
    let rows: Vec<Vec<f64>> = responses
        .iter()
        .map(|r| r.items.iter().map(|&v| f64::from(v)).collect())
        .collect();
    cronbach_alpha_table(&rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelSet {
    pub scores: BTreeMap<SessionKey, i64>,
    pub median: f64,
    pub labels: BTreeMap<SessionKey, Label>,
}

impl LabelSet {
    pub fn label(&self, key: &SessionKey) -> Option<Label> {
        self.labels.get(key).copied()
    }

    pub fn count(&self, label: Label) -> usize {
        self.labels.values().filter(|&&l| l == label).count()
    }

    /// Write `participant_id,story_id,score,label` rows.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["participant_id", "story_id", "score", "label"])?;
        for (key, score) in &self.scores {
            wtr.write_record([
                key.participant_id.clone(),
                key.story_id.to_string(),
                score.to_string(),
                self.labels[key].to_string(),
            ])?;
        }
        wtr.flush().map_err(|e| Error::io("<labels writer>", e))?;
        Ok(())
    }

    /// Read a file written by [`LabelSet::write_csv`]; the median is recomputed.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            participant_id: String,
            story_id: StoryId,
            score: i64,
            label: String,
        }
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut scores = BTreeMap::new();
        let mut labels = BTreeMap::new();
        for row in rdr.deserialize() {
            let row: Row = row?;
            let key = SessionKey::new(row.participant_id, row.story_id);
            labels.insert(key.clone(), row.label.parse()?);
            scores.insert(key, row.score);
        }
        if scores.is_empty() {
            return Err(Error::Validation("label file is empty".into()));
        }
        let median = median(&scores.values().map(|&s| s as f64).collect::<Vec<_>>());
        Ok(LabelSet {
            scores,
            median,
            labels,
        })
    }
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Label each session empathic iff its score is strictly above the sample median.
pub fn median_split(scores: &BTreeMap<SessionKey, i64>) -> Result<LabelSet> {
    if scores.len() < 2 {
        return Err(Error::Validation(format!(
            "median split needs at least two scores, got {}",
            scores.len()
        )));
    }
    let values: Vec<f64> = scores.values().map(|&s| s as f64).collect();
    let median = median(&values);
    let labels = scores
        .iter()
        .map(|(k, &s)| (k.clone(), Label::from_positive(s as f64 > median)))
        .collect();
    Ok(LabelSet {
        scores: scores.clone(),
        median,
        labels,
    })
}

/// Read `participant_id,story_id,item_1..item_8` rows.
pub fn read_questionnaires<R: Read>(reader: R) -> Result<Vec<QuestionnaireResponse>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Format(format!("questionnaire file is missing column {name:?}")))
    };
    let pid = col("participant_id")?;
    let sid = col("story_id")?;
    let items: Vec<usize> = (1..=ITEM_COUNT)
        .map(|i| col(&format!("item_{i}")))
        .collect::<Result<_>>()?;
    let mut out = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        let values = items
            .iter()
            .map(|&c| {
                record[c].parse::<u8>().map_err(|_| {
                    Error::Validation(format!(
                        "row {}: item value {:?} is not an integer",
                        row + 1,
                        &record[c]
                    ))
                })
            })
            .collect::<Result<Vec<u8>>>()?;
        out.push(QuestionnaireResponse::new(
            record[pid].to_string(),
            record[sid].parse()?,
            values,
        )?);
    }
    Ok(out)
}

pub fn write_questionnaires<W: Write>(
    writer: W,
    responses: &[QuestionnaireResponse],
) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header = vec!["participant_id".to_string(), "story_id".to_string()];
    header.extend((1..=ITEM_COUNT).map(|i| format!("item_{i}")));
    wtr.write_record(&header)?;
    for r in responses {
        let mut row = vec![r.participant_id.clone(), r.story_id.to_string()];
        row.extend(r.items.iter().map(u8::to_string));
        wtr.write_record(&row)?;
    }
    wtr.flush()
        .map_err(|e| Error::io("<questionnaire writer>", e))?;
    Ok(())
}

/// Score every response and split at the median.
pub fn label_responses(responses: &[QuestionnaireResponse]) -> Result<LabelSet> {
    let mut scores = BTreeMap::new();
    for r in responses {
        if scores.insert(r.key(), empathy_score(r)?).is_some() {
            return Err(Error::Validation(format!(
                "duplicate questionnaire for {}",
                r.key()
            )));
        }
    }
    median_split(&scores)
}
