//! Pseudo-label curation: entropy scoring, threshold filtering, mixing of
//! labeled and pseudo-labeled sets, and the per-frame ground-truth scale
//! alignment baseline.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fisher::{self, Expectation, FisherParams};
use crate::pose::RelativePose;
use crate::TOOL_VERSION;

/// Default entropy threshold; samples at or above it are dropped.
pub const DEFAULT_TAU: f64 = -5.668;

/// One pseudo-labeled sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRecord {
    pub id: String,
    pub pose: RelativePose,
    pub psi: FisherParams,
    /// Entropy under the unit-mass Haar convention; `None` until scored.
    pub entropy: Option<f64>,
    pub selected: bool,
}

impl SampleRecord {
    pub fn new(id: impl Into<String>, pose: RelativePose, psi: FisherParams) -> Self {
        Self { id: id.into(), pose, psi, entropy: None, selected: false }
    }
}

/// Reference measure the entropy is taken against. Entropies (and therefore
/// thresholds) shift by `ln(8 pi^2)` between the unit-mass and the
/// `8 pi^2`-mass normalizations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureConvention {
    #[default]
    UnitMassHaar,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterConfig {
    pub tau_u: f64,
    pub convention: MeasureConvention,
    pub expectation: Expectation,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self { tau_u: DEFAULT_TAU, convention: MeasureConvention::UnitMassHaar, expectation: Expectation::Quadrature }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        if self.tau_u.is_nan() {
            return Err(invalid("entropy threshold is NaN"));
        }
        if let Expectation::MonteCarlo { samples: 0, .. } = self.expectation {
            return Err(invalid("Monte Carlo expectation needs at least one sample"));
        }
        Ok(())
    }
}

/// Seed for record `index` derived from a base seed (SplitMix64 finalizer),
/// so per-record streams do not depend on scheduling.
fn record_seed(seed: u64, index: usize) -> u64 {
    let mut z = seed ^ (index as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Populates `entropy` on every record. Records are scored in parallel; the
/// result is identical for any thread count.
pub fn score_entropy(records: &[SampleRecord], method: &Expectation) -> Result<Vec<SampleRecord>> {
    let scored: Vec<Result<SampleRecord>> = records
        .par_iter()
        .enumerate()
        .map(|(i, r)| {
            let m = match *method {
                Expectation::Quadrature => Expectation::Quadrature,
                Expectation::MonteCarlo { samples, seed } => {
                    Expectation::MonteCarlo { samples, seed: record_seed(seed, i) }
                }
            };
            let h = fisher::entropy(&r.psi, &m).map_err(|e| Error::Record { id: r.id.clone(), source: Box::new(e) })?;
            Ok(SampleRecord { entropy: Some(h), ..r.clone() })
        })
        .collect();
    scored.into_iter().collect()
}

/// Splits scored records into (kept, rejected), keeping a record iff its
/// entropy is strictly below `tau`. Input order is preserved in both parts
/// and `selected` is set accordingly.
pub fn partition_by_entropy(records: &[SampleRecord], tau: f64) -> Result<(Vec<SampleRecord>, Vec<SampleRecord>)> {
    if tau.is_nan() {
        return Err(invalid("entropy threshold is NaN"));
    }
    let mut kept = Vec::new();
    let mut rejected = Vec::new();
    for r in records {
        let h = r.entropy.ok_or_else(|| Error::Record {
            id: r.id.clone(),
            source: Box::new(invalid("entropy has not been computed")),
        })?;
        let selected = h < tau;
        let out = SampleRecord { selected, ..r.clone() };
        if selected {
            kept.push(out);
        } else {
            rejected.push(out);
        }
    }
    Ok((kept, rejected))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceTag {
    Labeled,
    Pseudo,
}

impl SourceTag {
    pub fn as_str(self) -> &'static str {
        match self {
            SourceTag::Labeled => "labeled",
            SourceTag::Pseudo => "pseudo",
        }
    }
}

/// What a manifest as a whole describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ManifestKind {
    Labeled,
    Pseudo,
    Mixed,
}

/// Which side of an entropy filter a manifest holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    Kept,
    Rejected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ManifestCounts {
    pub labeled: usize,
    pub pseudo: usize,
    pub total: usize,
}

/// Provenance carried in the first line of every manifest file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestHeader {
    pub tool_version: String,
    pub kind: ManifestKind,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub selection: Option<Selection>,
    /// Threshold, measure convention and expectation method (with its seed)
    /// under which entropies were computed.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub filter: Option<FilterConfig>,
    /// Input descriptors (paths, digests) supplied by the caller.
    #[serde(default)]
    pub inputs: Vec<String>,
    pub counts: ManifestCounts,
}

/// One manifest line. Labeled entries carry only a pose; pseudo entries add
/// `psi`, the entropy and the selection flag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub source: SourceTag,
    pub entropy: Option<f64>,
    pub selected: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub pose: Option<[f64; 12]>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub psi: Option<[f64; 9]>,
}

impl ManifestEntry {
    pub fn from_record(r: &SampleRecord) -> Self {
        Self {
            id: r.id.clone(),
            source: SourceTag::Pseudo,
            entropy: r.entropy,
            selected: r.selected,
            pose: Some(r.pose.to_row_major()),
            psi: Some(r.psi.to_row_major()),
        }
    }

    pub fn labeled(id: impl Into<String>, pose: &RelativePose) -> Self {
        Self {
            id: id.into(),
            source: SourceTag::Labeled,
            entropy: None,
            selected: true,
            pose: Some(pose.to_row_major()),
            psi: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub header: ManifestHeader,
    pub entries: Vec<ManifestEntry>,
}

fn count(entries: &[ManifestEntry]) -> ManifestCounts {
    let labeled = entries.iter().filter(|e| e.source == SourceTag::Labeled).count();
    ManifestCounts { labeled, pseudo: entries.len() - labeled, total: entries.len() }
}

impl DatasetManifest {
    /// Builds a manifest, refusing duplicate ids and entries whose source
    /// does not fit `kind`.
    pub fn new(kind: ManifestKind, entries: Vec<ManifestEntry>) -> Result<Self> {
        let header = ManifestHeader {
            tool_version: TOOL_VERSION.to_string(),
            kind,
            selection: None,
            filter: None,
            inputs: Vec::new(),
            counts: count(&entries),
        };
        let m = Self { header, entries };
        m.validate()?;
        Ok(m)
    }

    pub fn labeled(poses: &[(String, RelativePose)]) -> Result<Self> {
        Self::new(ManifestKind::Labeled, poses.iter().map(|(id, p)| ManifestEntry::labeled(id.clone(), p)).collect())
    }

    pub fn with_inputs(mut self, inputs: Vec<String>) -> Self {
        self.header.inputs = inputs;
        self
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for e in &self.entries {
            if !seen.insert(e.id.as_str()) {
                return Err(Error::Manifest(format!("duplicate id {:?}", e.id)));
            }
            let fits = match self.header.kind {
                ManifestKind::Labeled => e.source == SourceTag::Labeled,
                ManifestKind::Pseudo => e.source == SourceTag::Pseudo,
                ManifestKind::Mixed => true,
            };
            if !fits {
                return Err(Error::Manifest(format!(
                    "entry {:?} tagged {} in a {:?} manifest",
                    e.id,
                    e.source.as_str(),
                    self.header.kind
                )));
            }
            if e.entropy.is_some_and(|h| !h.is_finite()) {
                return Err(Error::Manifest(format!("entry {:?} has a non-finite entropy", e.id)));
            }
        }
        if self.header.counts != count(&self.entries) {
            return Err(Error::Manifest("header counts do not match the entries".into()));
        }
        Ok(())
    }
}

/// Splits already-scored records at `cfg.tau_u` into a kept and a rejected
/// manifest, both carrying `cfg`.
pub fn filter_by_entropy(records: &[SampleRecord], cfg: &FilterConfig) -> Result<(DatasetManifest, DatasetManifest)> {
    cfg.validate()?;
    let (kept, rejected) = partition_by_entropy(records, cfg.tau_u)?;
    let build = |part: &[SampleRecord], selection| -> Result<DatasetManifest> {
        let mut m = DatasetManifest::new(ManifestKind::Pseudo, part.iter().map(ManifestEntry::from_record).collect())?;
        m.header.selection = Some(selection);
        m.header.filter = Some(*cfg);
        Ok(m)
    };
    Ok((build(&kept, Selection::Kept)?, build(&rejected, Selection::Rejected)?))
}

fn namespaced(source: SourceTag, id: &str) -> String {
    let prefix = source.as_str();
    match id.strip_prefix(prefix) {
        Some(rest) if rest.starts_with('/') => id.to_string(),
        _ => format!("{prefix}/{id}"),
    }
}

/// Union of a labeled and a pseudo-labeled manifest: the labeled block
/// followed by the pseudo block, ids prefixed with their source tag. No
/// reweighting or ratio balancing.
pub fn mix_datasets(labeled: &DatasetManifest, pseudo: &DatasetManifest) -> Result<DatasetManifest> {
    if labeled.header.kind != ManifestKind::Labeled {
        return Err(Error::Manifest(format!("expected a labeled manifest, got {:?}", labeled.header.kind)));
    }
    if pseudo.header.kind != ManifestKind::Pseudo {
        return Err(Error::Manifest(format!("expected a pseudo-label manifest, got {:?}", pseudo.header.kind)));
    }
    let entries: Vec<ManifestEntry> = labeled
        .entries
        .iter()
        .chain(&pseudo.entries)
        .map(|e| ManifestEntry { id: namespaced(e.source, &e.id), ..e.clone() })
        .collect();
    let mut seen = HashSet::new();
    if let Some(dup) = entries.iter().find(|e| !seen.insert(e.id.as_str())) {
        return Err(Error::Manifest(format!("id collision after namespacing: {:?}", dup.id)));
    }
    let mut m = DatasetManifest::new(ManifestKind::Mixed, entries)?;
    m.header.filter = pseudo.header.filter;
    m.header.inputs = labeled.header.inputs.iter().chain(&pseudo.header.inputs).cloned().collect();
    Ok(m)
}

/// Output of [`scale_align_per_frame`].
#[derive(Debug, Clone, PartialEq)]
pub struct Alignment {
    pub poses: Vec<RelativePose>,
    /// Frames whose translation was replaced by the ground-truth vector
    /// because one of the two norms was below `epsilon`.
    pub substituted: Vec<usize>,
}

/// Rescales every predicted translation to the ground-truth norm, keeping its
/// direction and the predicted rotation. When either norm is below `epsilon`
/// the ground-truth translation is used as is, since a (near-)zero vector
/// has no usable direction; this also makes the operation idempotent.
pub fn scale_align_per_frame(gt_rels: &[RelativePose], pred_rels: &[RelativePose], epsilon: f64) -> Result<Alignment> {
    if gt_rels.len() != pred_rels.len() {
        return Err(invalid(format!(
            "ground truth has {} relative poses, prediction has {}",
            gt_rels.len(),
            pred_rels.len()
        )));
    }
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(invalid("epsilon must be positive"));
    }
    let mut substituted = Vec::new();
    let poses = gt_rels
        .iter()
        .zip(pred_rels)
        .enumerate()
        .map(|(i, (g, p))| {
            let ng = g.translation.norm();
            let np = p.translation.norm();
            let translation = if ng < epsilon || np < epsilon {
                substituted.push(i);
                g.translation
            } else {
                p.translation * (ng / np)
            };
            RelativePose { rotation: p.rotation, translation }
        })
        .collect();
    Ok(Alignment { poses, substituted })
}
