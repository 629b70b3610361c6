//! Synthetic frame-level datasets with planted class effects, written in the
//! same layout that [`crate::ingest::load_dataset`] reads.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{
    write_dataset, Dataset, FrameRecord, NarrativeVoice, Session, SessionKey, SessionMeta, StoryId,
};
use crate::ingest::{AuKind, FeatureCatalog, FeatureGroup, FeatureKind};
use crate::labels::{
    median_split, write_questionnaires, Label, LabelSet, QuestionnaireResponse, ITEM_COUNT,
};
use crate::seed;

pub const QUESTIONNAIRE_FILE: &str = "questionnaires.csv";
pub const TRUTH_FILE: &str = "labels_truth.csv";

/// Which catalog columns the generated files carry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSchema {
    /// All 709 columns.
    Full,
    /// 75 columns covering every group: gaze vectors and angles, a few eye
    /// and face landmarks, head pose, rigid and four shape PDM parameters, and
    /// all action units.
    Compact,
    Features(Vec<String>),
}

impl FeatureSchema {
    pub fn catalog(&self) -> Result<FeatureCatalog> {
        match self {
            FeatureSchema::Full => Ok(FeatureCatalog::openface_full()),
            FeatureSchema::Compact => {
                let full = FeatureCatalog::openface_full();
                let keep: Vec<usize> = (0..full.len())
                    .filter(|&i| in_compact(&full.names()[i]))
                    .collect();
                Ok(full.select(&keep))
            }
            FeatureSchema::Features(names) => FeatureCatalog::from_names(names),
        }
    }
}

fn in_compact(name: &str) -> bool {
    let indexed = |prefixes: &[&str], below: usize| {
        prefixes.iter().any(|p| {
            name.strip_prefix(p)
                .and_then(|rest| rest.parse::<usize>().ok())
                .is_some_and(|i| i < below)
        })
    };
    name.starts_with("gaze_")
        || name.starts_with("pose_")
        || name.starts_with("AU")
        || matches!(name, "p_scale" | "p_rx" | "p_ry" | "p_rz" | "p_tx" | "p_ty")
        || indexed(&["eye_lmk_x_", "eye_lmk_y_"], 2)
        || indexed(&["x_", "y_"], 6)
        || indexed(&["p_"], 4)
}

/// A class-dependent feature. Values follow a stationary AR(1) process
/// `z_t = a z_(t-1) + sqrt(1 - a^2) e_t` with standard deviation `noise_sd`
/// around the class mean, where `a` is `smoothing`. For presence columns the
/// means are per-frame probabilities and `smoothing` is the chance of
/// repeating the previous frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Effect {
    pub feature: String,
    pub empathic_mean: f64,
    pub less_empathic_mean: f64,
    pub noise_sd: f64,
    #[serde(default)]
    pub smoothing: f64,
}

impl Effect {
    pub fn new(
        feature: &str,
        empathic_mean: f64,
        less_empathic_mean: f64,
        noise_sd: f64,
        smoothing: f64,
    ) -> Self {
        Effect {
            feature: feature.to_string(),
            empathic_mean,
            less_empathic_mean,
            noise_sd,
            smoothing,
        }
    }

    fn mean(&self, empathic: bool) -> f64 {
        if empathic {
            self.empathic_mean
        } else {
            self.less_empathic_mean
        }
    }
}

fn default_participants() -> usize {
    40
}
fn default_stories() -> usize {
    3
}
fn default_duration() -> f64 {
    180.0
}
fn default_fps() -> f64 {
    30.0
}
fn default_schema() -> FeatureSchema {
    FeatureSchema::Compact
}
fn default_balance() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    #[serde(default = "default_participants")]
    pub participants: usize,
    #[serde(default = "default_stories")]
    pub stories_per_participant: usize,
    #[serde(default = "default_duration")]
    pub duration_s: f64,
    #[serde(default = "default_fps")]
    pub fps: f64,
    #[serde(default = "default_schema")]
    pub schema: FeatureSchema,
    #[serde(default)]
    pub effects: Vec<Effect>,
    /// Fraction of sessions labelled empathic.
    #[serde(default = "default_balance")]
    pub balance: f64,
    #[serde(default)]
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            participants: default_participants(),
            stories_per_participant: default_stories(),
            duration_s: default_duration(),
            fps: default_fps(),
            schema: default_schema(),
            effects: Vec::new(),
            balance: default_balance(),
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn session_count(&self) -> usize {
        self.participants * self.stories_per_participant
    }

    pub fn frames_per_session(&self) -> usize {
        (self.duration_s * self.fps).round() as usize
    }

    fn positives(&self) -> usize {
        (self.balance * self.session_count() as f64).round() as usize
    }

    /// Checks the configuration and returns the catalog it describes.
    pub fn validate(&self) -> Result<FeatureCatalog> {
        let bad = |msg: String| Err(Error::Validation(msg));
        if self.participants == 0 {
            return bad("participants must be positive".into());
        }
        if !(1..=StoryId::ALL.len()).contains(&self.stories_per_participant) {
            return bad(format!(
                "stories_per_participant must lie in 1..=3, got {}",
                self.stories_per_participant
            ));
        }
        if !(self.fps.is_finite()
            && self.fps > 0.0
            && self.duration_s.is_finite()
            && self.duration_s > 0.0)
        {
            return bad("fps and duration_s must be positive".into());
        }
        if self.frames_per_session() < 2 {
            return bad("sessions need at least two frames".into());
        }
        if !(self.balance > 0.0 && self.balance < 1.0) {
            return bad(format!("balance must lie in (0, 1), got {}", self.balance));
        }
        let pos = self.positives();
        if pos == 0 || pos == self.session_count() {
            return bad("balance leaves one class empty".into());
        }
        let catalog = self.schema.catalog()?;
        let mut seen = BTreeSet::new();
        for e in &self.effects {
            let Some(idx) = catalog.position(&e.feature) else {
                return bad(format!("effect feature {} is not in the schema", e.feature));
            };
            if !seen.insert(&e.feature) {
                return bad(format!("feature {} has more than one effect", e.feature));
            }
            if !(e.noise_sd.is_finite() && e.noise_sd >= 0.0) {
                return bad(format!(
                    "{}: noise_sd must be finite and non-negative",
                    e.feature
                ));
            }
            if !(0.0..1.0).contains(&e.smoothing) {
                return bad(format!("{}: smoothing must lie in [0, 1)", e.feature));
            }
            let (lo, hi) = catalog
                .kind(idx)
                .legal_range()
                .unwrap_or((f64::NEG_INFINITY, f64::INFINITY));
            for m in [e.empathic_mean, e.less_empathic_mean] {
                if !(m.is_finite() && m >= lo && m <= hi) {
                    return bad(format!(
                        "{}: mean {m} outside the legal range [{lo}, {hi}]",
                        e.feature
                    ));
                }
            }
        }
        Ok(catalog)
    }
}

/// Generated dataset with its ground truth.
#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub dataset: Dataset,
    /// Scores from the generated questionnaires; labels are the planted classes.
    pub labels: LabelSet,
    pub questionnaires: Vec<QuestionnaireResponse>,
}

#[derive(Debug, Clone, Copy)]
enum Process {
    Gaussian {
        mean: f64,
        sd: f64,
        a: f64,
        lo: f64,
        hi: f64,
    },
    Binary {
        p: f64,
        repeat: f64,
    },
}

fn baseline(kind: FeatureKind, rng: &mut ChaCha8Rng) -> Process {
    let unbounded = |scale: f64, rng: &mut ChaCha8Rng| Process::Gaussian {
        mean: rng.random_range(-1.0..1.0) * scale,
        sd: rng.random_range(0.05..0.15) * scale,
        a: 0.9,
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
    };
    match (kind.au, kind.group) {
        (Some(AuKind::Intensity), _) => Process::Gaussian {
            mean: rng.random_range(0.1..0.6),
            sd: rng.random_range(0.05..0.2),
            a: 0.9,
            lo: 0.0,
            hi: 5.0,
        },
        (Some(AuKind::Presence), _) => Process::Binary {
            p: rng.random_range(0.05..0.5),
            repeat: 0.9,
        },
        (None, FeatureGroup::FacialLandmark) => unbounded(100.0, rng),
        (None, FeatureGroup::HeadPose) => unbounded(50.0, rng),
        (None, FeatureGroup::PdmParameter) => unbounded(5.0, rng),
        _ => unbounded(0.5, rng),
    }
}

fn planted(kind: FeatureKind, e: &Effect, empathic: bool) -> Process {
    let mean = e.mean(empathic);
    match kind.au {
        Some(AuKind::Presence) => Process::Binary {
            p: mean,
            repeat: e.smoothing,
        },
        _ => {
            let (lo, hi) = kind
                .legal_range()
                .unwrap_or((f64::NEG_INFINITY, f64::INFINITY));
            Process::Gaussian {
                mean,
                sd: e.noise_sd,
                a: e.smoothing,
                lo,
                hi,
            }
        }
    }
}

fn round4(v: f64) -> f64 {
    (v * 1e4).round() / 1e4
}

fn draw(process: Process, offset: f64, frames: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut out = Vec::with_capacity(frames);
    match process {
        Process::Gaussian {
            mean,
            sd,
            a,
            lo,
            hi,
        } => {
            let innovation = (1.0 - a * a).sqrt();
            let mut z: f64 = rng.sample(StandardNormal);
            for t in 0..frames {
                if t > 0 {
                    let e: f64 = rng.sample(StandardNormal);
                    z = a * z + innovation * e;
                }
                out.push(round4((mean + offset + sd * z).clamp(lo, hi)));
            }
        }
        Process::Binary { p, repeat } => {
            let mut v = f64::from(u8::from(rng.random::<f64>() < p));
            for t in 0..frames {
                if t > 0 && rng.random::<f64>() >= repeat {
                    v = f64::from(u8::from(rng.random::<f64>() < p));
                }
                out.push(v);
            }
        }
    }
    out
}

fn questionnaire(
    key: &SessionKey,
    empathic: bool,
    rng: &mut ChaCha8Rng,
) -> Result<QuestionnaireResponse> {
    let score = if empathic {
        rng.random_range(25..=40)
    } else {
        rng.random_range(8..=24)
    };
    let mut items = vec![1u8; ITEM_COUNT];
    for _ in 0..score - ITEM_COUNT as u32 {
        let open: Vec<usize> = (0..ITEM_COUNT).filter(|&i| items[i] < 5).collect();
        items[open[rng.random_range(0..open.len())]] += 1;
    }
    QuestionnaireResponse::new(key.participant_id.clone(), key.story_id, items)
}

fn participant_id(index: usize) -> String {
    format!("P{:03}", index + 1)
}

/// Generates sessions, questionnaires and ground-truth labels.
///
/// The questionnaire scores of empathic sessions lie in 25..=40 and the
/// others in 8..=24, so with an even class balance the median split of the
/// scores reproduces the planted labels exactly.
pub fn generate_dataset(config: &SynthConfig) -> Result<SynthOutput> {
    let catalog = config.validate()?;
    let n = config.session_count();
    let frames = config.frames_per_session();

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seed::rng(seed::derive(config.seed, 0)));
    let mut empathic = vec![false; n];
    for &i in &order[..config.positives()] {
        empathic[i] = true;
    }

    let mut base_rng = seed::rng(seed::derive(config.seed, 1));
    let base: Vec<Process> = (0..catalog.len())
        .map(|j| baseline(catalog.kind(j), &mut base_rng))
        .collect();
    let effects: BTreeMap<usize, &Effect> = config
        .effects
        .iter()
        .map(|e| (catalog.position(&e.feature).expect("validated"), e))
        .collect();

    let metas: Vec<SessionMeta> = (0..config.participants)
        .flat_map(|p| {
            let voice = if p % 2 == 0 {
                NarrativeVoice::FirstPerson
            } else {
                NarrativeVoice::ThirdPerson
            };
            StoryId::ALL[..config.stories_per_participant]
                .iter()
                .map(move |&story_id| SessionMeta {
                    participant_id: participant_id(p),
                    story_id,
                    narrative_voice: voice,
                })
        })
        .collect();

    let session_root = seed::derive(config.seed, 3);
    let sessions: Vec<Session> = metas
        .into_par_iter()
        .enumerate()
        .map(|(i, meta)| {
            let mut rng = seed::rng(seed::derive(session_root, i as u64));
            let columns: Vec<Vec<f64>> = (0..catalog.len())
                .map(|j| match effects.get(&j) {
                    Some(e) => draw(
                        planted(catalog.kind(j), e, empathic[i]),
                        0.0,
                        frames,
                        &mut rng,
                    ),
                    None => {
                        let offset = match base[j] {
                            Process::Gaussian { sd, .. } => {
                                0.5 * sd * rng.sample::<f64, _>(StandardNormal)
                            }
                            Process::Binary { .. } => 0.0,
                        };
                        draw(base[j], offset, frames, &mut rng)
                    }
                })
                .collect();
            let records = (0..frames)
                .map(|t| FrameRecord {
                    frame_index: t as u64 + 1,
                    timestamp: round4(t as f64 / config.fps),
                    confidence: 0.98,
                    success: true,
                    values: columns.iter().map(|c| c[t]).collect(),
                })
                .collect();
            Session::new(meta, records)
        })
        .collect::<Result<_>>()?;

    let mut q_rng = seed::rng(seed::derive(config.seed, 2));
    let questionnaires = sessions
        .iter()
        .zip(&empathic)
        .map(|(s, &e)| questionnaire(&s.key(), e, &mut q_rng))
        .collect::<Result<Vec<_>>>()?;
    let scores: BTreeMap<SessionKey, i64> = questionnaires
        .iter()
        .map(|q| Ok((q.key(), crate::labels::empathy_score(q)?)))
        .collect::<Result<_>>()?;
    let median = median_split(&scores)?.median;
    let labels = LabelSet {
        labels: sessions
            .iter()
            .zip(&empathic)
            .map(|(s, &e)| (s.key(), Label::from_positive(e)))
            .collect(),
        scores,
        median,
    };
    Ok(SynthOutput {
        dataset: Dataset::new(catalog, sessions)?,
        labels,
        questionnaires,
    })
}

/// Writes sessions, `metadata.csv`, questionnaires and the planted labels.
pub fn write_synth(dir: &Path, output: &SynthOutput) -> Result<Vec<PathBuf>> {
    let mut written = write_dataset(dir, &output.dataset)?;
    let q_path = dir.join(QUESTIONNAIRE_FILE);
    let file = fs::File::create(&q_path).map_err(|e| Error::io(&q_path, e))?;
    write_questionnaires(std::io::BufWriter::new(file), &output.questionnaires)?;
    written.push(q_path);
    let t_path = dir.join(TRUTH_FILE);
    let file = fs::File::create(&t_path).map_err(|e| Error::io(&t_path, e))?;
    output.labels.write_csv(std::io::BufWriter::new(file))?;
    written.push(t_path);
    Ok(written)
}
