//! JSON dataset documents.
//!
//! ```json
//! {
//!   "ground_space": {"points": [[0.0], [1.0]], "partition": {"cells": [[0], [1]], "measures": [1.0, 2.0]}},
//!   "records": [[{"type": "discrete", "degrees": {"0": 0.5}}, {"type": "gaussian", "m": [0.0], "sigma": [1.0]}]],
//!   "labels": [1]
//! }
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use serde::de::{MapAccess, Visitor};
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::fuzzy::{
    DiscreteFuzzySet, FuzzyAttribute, FuzzyRecord, GaussianFuzzySet, GroundSpace, Partition,
};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDataset {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ground_space: Option<RawGround>,
    records: Vec<Vec<RawAttribute>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<i64>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGround {
    points: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    partition: Option<RawPartition>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPartition {
    cells: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    measures: Option<Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
enum RawAttribute {
    Discrete { degrees: DegreeMap },
    Gaussian { m: Vec<f64>, sigma: Vec<f64> },
}

/// Sparse degree map `{"<index>": degree}` kept in document order so keys
/// can be validated with precise error paths.
#[derive(Debug, Default)]
struct DegreeMap(Vec<(String, f64)>);

impl Serialize for DegreeMap {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.0.len()))?;
        for (k, v) in &self.0 {
            map.serialize_entry(k, v)?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for DegreeMap {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct DegreeVisitor;

        impl<'de> Visitor<'de> for DegreeVisitor {
            type Value = DegreeMap;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a map from point index to membership degree")
            }

            fn visit_map<A: MapAccess<'de>>(
                self,
                mut access: A,
            ) -> std::result::Result<DegreeMap, A::Error> {
                let mut entries = Vec::new();
                while let Some(entry) = access.next_entry::<String, f64>()? {
                    entries.push(entry);
                }
                Ok(DegreeMap(entries))
            }
        }

        deserializer.deserialize_map(DegreeVisitor)
    }
}

/// A validated collection of fuzzy records over one ground space.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub ground: Option<Arc<GroundSpace>>,
    pub records: Vec<FuzzyRecord>,
    pub labels: Option<Vec<i8>>,
}

impl Dataset {
    pub fn new(
        ground: Option<Arc<GroundSpace>>,
        records: Vec<FuzzyRecord>,
        labels: Option<Vec<i8>>,
    ) -> Result<Self> {
        let ds = Dataset {
            ground,
            records,
            labels,
        };
        ds.check_shape()?;
        Ok(ds)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Labels, or a validation error naming the command that needs them.
    pub fn require_labels(&self, purpose: &str) -> Result<&[i8]> {
        self.labels.as_deref().ok_or_else(|| {
            Error::validation("labels", format!("{purpose} requires labels, none present"))
        })
    }

    fn check_shape(&self) -> Result<()> {
        let Some(first) = self.records.first() else {
            return Ok(());
        };
        for (r, rec) in self.records.iter().enumerate() {
            if rec.arity() != first.arity() {
                return Err(Error::validation(
                    format!("records[{r}]"),
                    format!(
                        "has {} attributes, records[0] has {}",
                        rec.arity(),
                        first.arity()
                    ),
                ));
            }
            for (a, (attr, proto)) in rec.attributes.iter().zip(&first.attributes).enumerate() {
                let path = format!("records[{r}][{a}]");
                match (attr, proto) {
                    (FuzzyAttribute::Gaussian(g), FuzzyAttribute::Gaussian(p))
                        if g.dim() != p.dim() =>
                    {
                        return Err(Error::validation(
                            path,
                            format!("has dimension {}, records[0][{a}] has {}", g.dim(), p.dim()),
                        ));
                    }
                    (FuzzyAttribute::Discrete(d), _) => match &self.ground {
                        Some(g) if Arc::ptr_eq(g, d.ground()) || **g == **d.ground() => {}
                        _ => {
                            return Err(Error::validation(
                                path,
                                "discrete attribute is not on the dataset ground space",
                            ))
                        }
                    },
                    _ => {}
                }
                if attr.kind() != proto.kind() {
                    return Err(Error::validation(
                        path,
                        format!("is {}, records[0][{a}] is {}", attr.kind(), proto.kind()),
                    ));
                }
            }
        }
        if let Some(labels) = &self.labels {
            if labels.len() != self.records.len() {
                return Err(Error::validation(
                    "labels",
                    format!("{} labels for {} records", labels.len(), self.records.len()),
                ));
            }
            if let Some((i, l)) = labels
                .iter()
                .enumerate()
                .find(|(_, l)| **l != 1 && **l != -1)
            {
                return Err(Error::validation(
                    format!("labels[{i}]"),
                    format!("label {l} is not +1 or -1"),
                ));
            }
        }
        Ok(())
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let raw: RawDataset = serde_json::from_str(text).map_err(|e| Error::Parse {
            location: format!("dataset line {} column {}", e.line(), e.column()),
            message: e.to_string(),
        })?;
        Self::from_raw(raw)
    }

    fn from_raw(raw: RawDataset) -> Result<Self> {
        let ground = match raw.ground_space {
            None => None,
            Some(rg) => {
                let mut g = GroundSpace::new(rg.points)
                    .map_err(|e| Error::validation("ground_space.points", e.to_string()))?;
                if let Some(rp) = rg.partition {
                    let p = Partition::new(rp.cells, rp.measures, g.len())
                        .map_err(|e| Error::validation("ground_space.partition", e.to_string()))?;
                    g = g.with_partition(p)?;
                }
                Some(Arc::new(g))
            }
        };

        let mut records = Vec::with_capacity(raw.records.len());
        for (r, raw_rec) in raw.records.into_iter().enumerate() {
            if raw_rec.is_empty() {
                return Err(Error::validation(
                    format!("records[{r}]"),
                    "record has no attributes",
                ));
            }
            let mut attrs = Vec::with_capacity(raw_rec.len());
            for (a, raw_attr) in raw_rec.into_iter().enumerate() {
                let path = format!("records[{r}][{a}]");
                let attr = match raw_attr {
                    RawAttribute::Discrete { degrees } => {
                        let g = ground.as_ref().ok_or_else(|| {
                            Error::validation(&path, "discrete attribute requires a ground_space")
                        })?;
                        let mut parsed = BTreeMap::new();
                        for (key, d) in degrees.0 {
                            let field = format!("{path}.degrees[\"{key}\"]");
                            let idx: usize = key.parse().map_err(|_| {
                                Error::validation(&field, "key is not a point index")
                            })?;
                            if idx >= g.len() {
                                return Err(Error::validation(
                                    field,
                                    format!("point index {idx} out of range ({} points)", g.len()),
                                ));
                            }
                            if !(0.0..=1.0).contains(&d) {
                                return Err(Error::validation(
                                    field,
                                    format!("degree {d} is outside [0, 1]"),
                                ));
                            }
                            if parsed.insert(idx, d).is_some() {
                                return Err(Error::validation(field, "duplicate point index"));
                            }
                        }
                        FuzzyAttribute::Discrete(DiscreteFuzzySet::new(g.clone(), parsed)?)
                    }
                    RawAttribute::Gaussian { m, sigma } => FuzzyAttribute::Gaussian(
                        GaussianFuzzySet::new(m, sigma)
                            .map_err(|e| Error::validation(&path, e.to_string()))?,
                    ),
                };
                attrs.push(attr);
            }
            records.push(FuzzyRecord::new(attrs));
        }

        let labels = match raw.labels {
            None => None,
            Some(ls) => Some(
                ls.into_iter()
                    .enumerate()
                    .map(|(i, l)| match l {
                        1 => Ok(1i8),
                        -1 => Ok(-1i8),
                        other => Err(Error::validation(
                            format!("labels[{i}]"),
                            format!("label {other} is not +1 or -1"),
                        )),
                    })
                    .collect::<Result<Vec<i8>>>()?,
            ),
        };

        Dataset::new(ground, records, labels)
    }

    fn to_raw(&self) -> RawDataset {
        RawDataset {
            ground_space: self.ground.as_ref().map(|g| RawGround {
                points: g.points().map(<[f64]>::to_vec).collect(),
                partition: g.partition().map(|p| RawPartition {
                    cells: p.cells().to_vec(),
                    measures: Some(p.measures().to_vec()),
                }),
            }),
            records: self
                .records
                .iter()
                .map(|rec| {
                    rec.attributes
                        .iter()
                        .map(|a| match a {
                            FuzzyAttribute::Discrete(d) => RawAttribute::Discrete {
                                degrees: DegreeMap(
                                    d.iter().map(|(i, v)| (i.to_string(), v)).collect(),
                                ),
                            },
                            FuzzyAttribute::Gaussian(g) => RawAttribute::Gaussian {
                                m: g.means().to_vec(),
                                sigma: g.widths().to_vec(),
                            },
                        })
                        .collect()
                })
                .collect(),
            labels: self
                .labels
                .as_ref()
                .map(|ls| ls.iter().map(|&l| l as i64).collect()),
        }
    }

    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_raw()).expect("dataset serializes");
        s.push('\n');
        s
    }
}

/// Reads and validates a dataset file.
pub fn parse_dataset(path: &Path) -> Result<Dataset> {
    let text = std::fs::read_to_string(path)?;
    Dataset::from_json_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_file() {
        let ds = Dataset::from_json_str(
            r#"{"records": [[{"type": "gaussian", "m": [0.0], "sigma": [1.0]}]]}"#,
        )
        .unwrap();
        assert_eq!(ds.len(), 1);
        assert!(ds.ground.is_none());
        assert!(ds.labels.is_none());
    }

    #[test]
    fn degree_out_of_range_names_record() {
        let text = r#"{"ground_space": {"points": [[0.0], [1.0]]},
            "records": [[{"type": "discrete", "degrees": {"0": 0.5}}],
                        [{"type": "discrete", "degrees": {"1": 1.5}}]]}"#;
        match Dataset::from_json_str(text) {
            Err(Error::Validation { path, .. }) => assert_eq!(path, "records[1][0].degrees[\"1\"]"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn partition_with_unknown_index() {
        let text = r#"{"ground_space": {"points": [[0.0], [1.0]], "partition": {"cells": [[0], [1, 2]]}},
            "records": []}"#;
        assert!(matches!(
            Dataset::from_json_str(text),
            Err(Error::Validation { ref path, .. }) if path == "ground_space.partition"
        ));
    }

    #[test]
    fn structural_checks() {
        let mixed = r#"{"ground_space": {"points": [[0.0]]},
            "records": [[{"type": "discrete", "degrees": {"0": 0.5}}],
                        [{"type": "gaussian", "m": [0.0], "sigma": [1.0]}]]}"#;
        assert!(matches!(
            Dataset::from_json_str(mixed),
            Err(Error::Validation { .. })
        ));

        let arity = r#"{"records": [[{"type": "gaussian", "m": [0.0], "sigma": [1.0]}], []]}"#;
        assert!(matches!(
            Dataset::from_json_str(arity),
            Err(Error::Validation { .. })
        ));

        let labels = r#"{"records": [[{"type": "gaussian", "m": [0.0], "sigma": [1.0]}]], "labels": [1, -1]}"#;
        assert!(matches!(
            Dataset::from_json_str(labels),
            Err(Error::Validation { .. })
        ));

        let bad_label =
            r#"{"records": [[{"type": "gaussian", "m": [0.0], "sigma": [1.0]}]], "labels": [2]}"#;
        assert!(matches!(
            Dataset::from_json_str(bad_label),
            Err(Error::Validation { .. })
        ));

        let no_ground = r#"{"records": [[{"type": "discrete", "degrees": {"0": 0.5}}]]}"#;
        assert!(matches!(
            Dataset::from_json_str(no_ground),
            Err(Error::Validation { .. })
        ));

        let sigma = r#"{"records": [[{"type": "gaussian", "m": [0.0], "sigma": [0.0]}]]}"#;
        assert!(matches!(
            Dataset::from_json_str(sigma),
            Err(Error::Validation { .. })
        ));

        assert!(matches!(
            Dataset::from_json_str("{"),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(
            Dataset::from_json_str(r#"{"records": [], "extra": 1}"#),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn require_labels() {
        let ds = Dataset::from_json_str(r#"{"records": []}"#).unwrap();
        assert!(matches!(
            ds.require_labels("classify"),
            Err(Error::Validation { .. })
        ));
    }
}
