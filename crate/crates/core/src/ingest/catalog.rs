use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The five categories of visual features produced by the face tracker.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureGroup {
    EyeGaze,
    FacialActionUnit,
    FacialLandmark,
    HeadPose,
    PdmParameter,
}

impl FeatureGroup {
    pub const ALL: [FeatureGroup; 5] = [
        FeatureGroup::EyeGaze,
        FeatureGroup::FacialActionUnit,
        FeatureGroup::FacialLandmark,
        FeatureGroup::HeadPose,
        FeatureGroup::PdmParameter,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureGroup::EyeGaze => "eye_gaze",
            FeatureGroup::FacialActionUnit => "facial_action_unit",
            FeatureGroup::FacialLandmark => "facial_landmark",
            FeatureGroup::HeadPose => "head_pose",
            FeatureGroup::PdmParameter => "pdm_parameter",
        }
    }
}

impl fmt::Display for FeatureGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeatureGroup {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FeatureGroup::ALL
            .into_iter()
            .find(|g| g.as_str() == s)
            .ok_or_else(|| Error::Validation(format!("unknown feature group {s:?}")))
    }
}

/// Action-unit columns come in two flavours: `_r` intensity on a 0–5 scale and
/// `_c` binary presence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuKind {
    Intensity,
    Presence,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureKind {
    pub group: FeatureGroup,
    pub au: Option<AuKind>,
}

impl FeatureKind {
    /// Closed interval of legal values, if the feature has one.
    pub fn legal_range(&self) -> Option<(f64, f64)> {
        match self.au {
            Some(AuKind::Intensity) => Some((0.0, 5.0)),
            Some(AuKind::Presence) => Some((0.0, 1.0)),
            None => None,
        }
    }
}

fn is_digits(s: &str) -> bool {
    !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit())
}

fn one_of(s: &str, options: &[&str]) -> bool {
    options.contains(&s)
}

/// Classify a column name by the tracker's naming conventions.
pub fn classify_feature(name: &str) -> Option<FeatureKind> {
    let plain = |group| Some(FeatureKind { group, au: None });

    if let Some(rest) = name.strip_prefix("gaze_angle_") {
        return one_of(rest, &["x", "y"])
            .then_some(())
            .and(plain(FeatureGroup::EyeGaze));
    }
    if let Some(rest) = name.strip_prefix("gaze_") {
        let mut parts = rest.split('_');
        let (eye, axis, extra) = (parts.next(), parts.next(), parts.next());
        return match (eye, axis, extra) {
            (Some("0" | "1"), Some("x" | "y" | "z"), None) => plain(FeatureGroup::EyeGaze),
            _ => None,
        };
    }
    if let Some(rest) = name.strip_prefix("eye_lmk_") {
        return match rest.split_once('_') {
            Some((axis, idx)) if one_of(axis, &["x", "y", "X", "Y", "Z"]) && is_digits(idx) => {
                plain(FeatureGroup::EyeGaze)
            }
            _ => None,
        };
    }
    if let Some(rest) = name.strip_prefix("pose_") {
        return one_of(rest, &["Tx", "Ty", "Tz", "Rx", "Ry", "Rz"])
            .then_some(())
            .and(plain(FeatureGroup::HeadPose));
    }
    if let Some(rest) = name.strip_prefix("p_") {
        return (one_of(rest, &["scale", "rx", "ry", "rz", "tx", "ty"]) || is_digits(rest))
            .then_some(())
            .and(plain(FeatureGroup::PdmParameter));
    }
    if let Some(rest) = name.strip_prefix("AU") {
        let (num, suffix) = rest.split_once('_')?;
        if num.len() != 2 || !is_digits(num) {
            return None;
        }
        let au = match suffix {
            "r" => AuKind::Intensity,
            "c" => AuKind::Presence,
            _ => return None,
        };
        return Some(FeatureKind {
            group: FeatureGroup::FacialActionUnit,
            au: Some(au),
        });
    }
    match name.split_once('_') {
        Some((axis, idx)) if one_of(axis, &["x", "y", "X", "Y", "Z"]) && is_digits(idx) => {
            plain(FeatureGroup::FacialLandmark)
        }
        _ => None,
    }
}

/// Ordered list of raw feature columns with their group assignment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct FeatureCatalog {
    names: Vec<String>,
    kinds: Vec<FeatureKind>,
}

impl FeatureCatalog {
    /// Build a catalog, rejecting names that match no convention and duplicates.
    pub fn from_names<S: AsRef<str>>(names: &[S]) -> Result<Self> {
        let mut kinds = Vec::with_capacity(names.len());
        let mut unknown = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for name in names {
            let name = name.as_ref();
            if !seen.insert(name) {
                return Err(Error::Format(format!("duplicate feature column {name:?}")));
            }
            match classify_feature(name) {
                Some(kind) => kinds.push(kind),
                None => unknown.push(name.to_string()),
            }
        }
        if !unknown.is_empty() {
            return Err(Error::UnclassifiedFeatures(unknown));
        }
        Ok(FeatureCatalog {
            names: names.iter().map(|n| n.as_ref().to_string()).collect(),
            kinds,
        })
    }

    /// The full 709-column feature set written by OpenFace 2.2.0.
    pub fn openface_full() -> Self {
        let mut names = Vec::with_capacity(709);
        for eye in 0..2 {
            for axis in ["x", "y", "z"] {
                names.push(format!("gaze_{eye}_{axis}"));
            }
        }
        names.push("gaze_angle_x".into());
        names.push("gaze_angle_y".into());
        for axis in ["x", "y"] {
            names.extend((0..56).map(|i| format!("eye_lmk_{axis}_{i}")));
        }
        for axis in ["X", "Y", "Z"] {
            names.extend((0..56).map(|i| format!("eye_lmk_{axis}_{i}")));
        }
        for p in ["Tx", "Ty", "Tz", "Rx", "Ry", "Rz"] {
            names.push(format!("pose_{p}"));
        }
        for axis in ["x", "y", "X", "Y", "Z"] {
            names.extend((0..68).map(|i| format!("{axis}_{i}")));
        }
        for p in ["scale", "rx", "ry", "rz", "tx", "ty"] {
            names.push(format!("p_{p}"));
        }
        names.extend((0..34).map(|i| format!("p_{i}")));
        names.extend(INTENSITY_AUS.iter().map(|au| format!("AU{au:02}_r")));
        names.extend(PRESENCE_AUS.iter().map(|au| format!("AU{au:02}_c")));
        FeatureCatalog::from_names(&names).expect("built-in catalog is well formed")
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn kind(&self, index: usize) -> FeatureKind {
        self.kinds[index]
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Restrict the catalog to the given column positions, in that order.
    pub fn select(&self, keep: &[usize]) -> Self {
        FeatureCatalog {
            names: keep.iter().map(|&i| self.names[i].clone()).collect(),
            kinds: keep.iter().map(|&i| self.kinds[i]).collect(),
        }
    }
}

impl TryFrom<Vec<String>> for FeatureCatalog {
    type Error = Error;

    fn try_from(names: Vec<String>) -> Result<Self> {
        FeatureCatalog::from_names(&names)
    }
}

impl From<FeatureCatalog> for Vec<String> {
    fn from(c: FeatureCatalog) -> Self {
        c.names
    }
}

/// Action units with an intensity (`_r`) column.
pub const INTENSITY_AUS: [u8; 17] = [1, 2, 4, 5, 6, 7, 9, 10, 12, 14, 15, 17, 20, 23, 25, 26, 45];
/// Action units with a presence (`_c`) column; AU28 has presence only.
pub const PRESENCE_AUS: [u8; 18] = [
    1, 2, 4, 5, 6, 7, 9, 10, 12, 14, 15, 17, 20, 23, 25, 26, 28, 45,
];

/// Partition a catalog into its five feature groups, preserving catalog order
/// within each group. Groups with no members are omitted.
pub fn group_features(catalog: &FeatureCatalog) -> BTreeMap<FeatureGroup, Vec<String>> {
    let mut groups: BTreeMap<FeatureGroup, Vec<String>> = BTreeMap::new();
    for (name, kind) in catalog.names.iter().zip(&catalog.kinds) {
        groups.entry(kind.group).or_default().push(name.clone());
    }
    groups
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_catalog_has_709_features_in_five_groups() {
        let catalog = FeatureCatalog::openface_full();
        assert_eq!(catalog.len(), 709);
        let groups = group_features(&catalog);
        assert_eq!(groups.len(), 5);
        assert_eq!(groups.values().map(Vec::len).sum::<usize>(), 709);
        assert_eq!(groups[&FeatureGroup::FacialActionUnit].len(), 35);
        assert_eq!(groups[&FeatureGroup::HeadPose].len(), 6);
        assert_eq!(groups[&FeatureGroup::PdmParameter].len(), 40);
        assert_eq!(groups[&FeatureGroup::FacialLandmark].len(), 340);
        assert_eq!(groups[&FeatureGroup::EyeGaze].len(), 288);
    }

    #[test]
    fn single_action_unit() {
        let catalog = FeatureCatalog::from_names(&["AU14_r"]).unwrap();
        let groups = group_features(&catalog);
        assert_eq!(groups.len(), 1);
        assert_eq!(
            groups[&FeatureGroup::FacialActionUnit],
            vec!["AU14_r".to_string()]
        );
        assert_eq!(catalog.kind(0).au, Some(AuKind::Intensity));
    }

    #[test]
    fn unknown_column_is_named() {
        let err = FeatureCatalog::from_names(&["AU14_r", "unknown_col"]).unwrap_err();
        match err {
            Error::UnclassifiedFeatures(names) => assert_eq!(names, vec!["unknown_col"]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn classification_edge_cases() {
        assert!(classify_feature("gaze_2_x").is_none());
        assert!(classify_feature("AU1_r").is_none());
        assert!(classify_feature("AU14_x").is_none());
        assert!(classify_feature("x_").is_none());
        assert!(classify_feature("p_sc").is_none());
        assert_eq!(
            classify_feature("Z_67").unwrap().group,
            FeatureGroup::FacialLandmark
        );
        assert_eq!(
            classify_feature("eye_lmk_Z_3").unwrap().group,
            FeatureGroup::EyeGaze
        );
        assert_eq!(
            classify_feature("p_33").unwrap().group,
            FeatureGroup::PdmParameter
        );
        assert_eq!(
            classify_feature("AU28_c").unwrap().au,
            Some(AuKind::Presence)
        );
    }

    #[test]
    fn duplicates_rejected() {
        assert!(matches!(
            FeatureCatalog::from_names(&["x_0", "x_0"]),
            Err(Error::Format(_))
        ));
    }
}
