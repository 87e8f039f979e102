use std::collections::HashSet;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const NUM_LABELS: usize = 14;

/// Condition labels in stratum order (the column order of the per-pathology
/// FID table).
pub const LABEL_NAMES: [&str; NUM_LABELS] = [
    "Atelectasis",
    "Cardiomegaly",
    "Consolidation",
    "Edema",
    "Enlarged Cardiomediastinum",
    "Fracture",
    "Lung Lesion",
    "Lung Opacity",
    "No Finding",
    "Pleural Effusion",
    "Pleural Other",
    "Pneumonia",
    "Pneumothorax",
    "Support Devices",
];

const REQUIRED: [&str; 4] = ["sample_id", "image_path", "split", "prompt_id"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
    Synthetic,
}

impl Split {
    pub fn is_real(self) -> bool {
        !matches!(self, Split::Synthetic)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
            Split::Synthetic => "synthetic",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            "synthetic" => Ok(Split::Synthetic),
            other => Err(format!("unknown split `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub sample_id: String,
    pub image_path: String,
    pub split: Split,
    pub labels: [bool; NUM_LABELS],
    pub prompt_id: String,
    pub prompt_text: Option<String>,
    /// Generation seed index; only set on synthetic records.
    pub seed: Option<u64>,
    pub model_id: Option<String>,
}

impl SampleRecord {
    pub fn has_label(&self, label: usize) -> bool {
        self.labels[label]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleManifest {
    pub records: Vec<SampleRecord>,
    pub label_names: Vec<String>,
}

impl SampleManifest {
    /// Builds a manifest, checking id uniqueness and the seed invariant.
    pub fn new(records: Vec<SampleRecord>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(records.len());
        for r in &records {
            if !seen.insert(r.sample_id.as_str()) {
                return Err(Error::DuplicateSampleId(r.sample_id.clone()));
            }
        }
        Ok(Self {
            records,
            label_names: LABEL_NAMES.iter().map(|s| s.to_string()).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.records.iter().map(|r| r.sample_id.as_str())
    }
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<SampleManifest> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_manifest(file)
}

/// Parses a manifest CSV. Columns may appear in any order; unknown columns
/// are ignored.
pub fn parse_manifest<R: Read>(reader: R) -> Result<SampleManifest> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::Headers)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let find = |name: &str| headers.iter().position(|h| h == name);
    let require = |name: &str| find(name).ok_or_else(|| Error::MissingColumn(name.to_string()));

    let [c_id, c_path, c_split, c_prompt] = [
        require(REQUIRED[0])?,
        require(REQUIRED[1])?,
        require(REQUIRED[2])?,
        require(REQUIRED[3])?,
    ];
    let mut c_labels = [0usize; NUM_LABELS];
    for (slot, name) in c_labels.iter_mut().zip(LABEL_NAMES) {
        *slot = require(name)?;
    }
    let c_seed = find("seed");
    let c_model = find("model_id");
    let c_text = find("prompt_text");

    let optional = |rec: &csv::StringRecord, col: Option<usize>| {
        col.and_then(|c| rec.get(c))
            .filter(|s| !s.is_empty())
            .map(str::to_string)
    };

    let mut records = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        let field = |c: usize| row.get(c).unwrap_or("");

        let split: Split = field(c_split)
            .parse()
            .map_err(|message| Error::BadRecord { line, message })?;

        let mut labels = [false; NUM_LABELS];
        for (i, &c) in c_labels.iter().enumerate() {
            labels[i] = match field(c).trim() {
                "0" => false,
                "1" => true,
                other => {
                    return Err(Error::BadLabelValue {
                        line,
                        column: LABEL_NAMES[i].to_string(),
                        value: other.to_string(),
                    })
                }
            };
        }

        let seed = match optional(&row, c_seed) {
            Some(s) => Some(s.trim().parse::<u64>().map_err(|_| Error::BadRecord {
                line,
                message: format!("seed `{s}` is not a non-negative integer"),
            })?),
            None => None,
        };
        if seed.is_some() && split.is_real() {
            return Err(Error::BadRecord {
                line,
                message: format!("real record `{}` carries a seed", field(c_id)),
            });
        }

        let sample_id = field(c_id).to_string();
        if sample_id.is_empty() {
            return Err(Error::BadRecord {
                line,
                message: "empty sample_id".into(),
            });
        }

        records.push(SampleRecord {
            sample_id,
            image_path: field(c_path).to_string(),
            split,
            labels,
            prompt_id: field(c_prompt).to_string(),
            prompt_text: optional(&row, c_text),
            seed,
            model_id: optional(&row, c_model),
        });
    }
    SampleManifest::new(records)
}

pub fn write_manifest<W: Write>(manifest: &SampleManifest, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = REQUIRED.to_vec();
    header.extend(LABEL_NAMES);
    header.extend(["seed", "model_id", "prompt_text"]);
    w.write_record(&header)?;
    for r in &manifest.records {
        let mut row: Vec<String> = vec![
            r.sample_id.clone(),
            r.image_path.clone(),
            r.split.to_string(),
            r.prompt_id.clone(),
        ];
        row.extend(r.labels.iter().map(|&b| if b { "1" } else { "0" }.to_string()));
        row.push(r.seed.map(|s| s.to_string()).unwrap_or_default());
        row.push(r.model_id.clone().unwrap_or_default());
        row.push(r.prompt_text.clone().unwrap_or_default());
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io("<manifest writer>", e))?;
    Ok(())
}
