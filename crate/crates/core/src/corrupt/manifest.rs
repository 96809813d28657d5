//! JSON Lines manifest: one `spec` record, then one `block` record per
//! affected block, in ascending start order.

use serde::{Deserialize, Serialize};

use super::{CorruptionKind, CorruptionSpec};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
pub enum ManifestRecord {
    Spec(SpecEcho),
    Block(BlockRecord),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpecEcho {
    pub kind: CorruptionKind,
    pub fraction: f64,
    pub block_size: usize,
    pub seed: u64,
    pub rng: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_uart: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub columns: Option<Vec<String>>,
    /// Data rows in the clean input.
    pub input_rows: usize,
    pub blocks: usize,
    /// For type mismatches: every non-missing cell of the targeted columns
    /// inside a block is corrupted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coverage: Option<String>,
}

/// One changed cell, by row index in the clean input.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellChange {
    pub row: usize,
    pub column: String,
    pub golden: String,
    pub corrupted: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BlockRecord {
    pub start: usize,
    pub length: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub columns: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cells: Vec<CellChange>,
    /// Output row `start + i` holds clean row `start + permutation[i]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub permutation: Option<Vec<usize>>,
    /// Raw CSV lines of rows removed from the output.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deleted_rows: Option<Vec<String>>,
    /// Rows whose line terminator was removed, joining them to the next row.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub join_points: Option<Vec<usize>>,
}

impl BlockRecord {
    pub fn new(start: usize, length: usize) -> Self {
        BlockRecord {
            start,
            length,
            ..Default::default()
        }
    }

    pub fn rows(&self) -> std::ops::Range<usize> {
        self.start..self.start + self.length
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorruptionManifest {
    pub spec: SpecEcho,
    pub blocks: Vec<BlockRecord>,
}

impl CorruptionManifest {
    pub(super) fn new(spec: &CorruptionSpec, input_rows: usize, blocks: Vec<BlockRecord>) -> Self {
        let coverage = matches!(
            spec.kind,
            CorruptionKind::TypeMismatch | CorruptionKind::TypeMismatchTargetedUart
        )
        .then(|| "all-cells".to_string());
        CorruptionManifest {
            spec: SpecEcho {
                kind: spec.kind,
                fraction: spec.fraction,
                block_size: spec.block_size,
                seed: spec.seed,
                rng: "chacha8".into(),
                target_uart: spec.target_uart.clone(),
                columns: spec.columns.clone(),
                input_rows,
                blocks: blocks.len(),
                coverage,
            },
            blocks,
        }
    }

    pub fn affected_rows(&self) -> usize {
        self.blocks.iter().map(|b| b.length).sum()
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        let records = std::iter::once(ManifestRecord::Spec(self.spec.clone()))
            .chain(self.blocks.iter().cloned().map(ManifestRecord::Block));
        for r in records {
            out.push_str(&serde_json::to_string(&r).expect("manifest records serialise"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self, serde_json::Error> {
        let mut spec = None;
        let mut blocks = Vec::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            match serde_json::from_str(line)? {
                ManifestRecord::Spec(s) => spec = Some(s),
                ManifestRecord::Block(b) => blocks.push(b),
            }
        }
        let spec = spec.ok_or_else(|| {
            <serde_json::Error as serde::de::Error>::custom("manifest has no spec record")
        })?;
        Ok(CorruptionManifest { spec, blocks })
    }
}
