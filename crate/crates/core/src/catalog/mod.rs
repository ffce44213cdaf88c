//! Explicit immersion families and the building blocks they consume.

pub mod blocks;
pub mod cases;
pub mod verify;

pub use blocks::{holomorphic_to_slag, BlockKind, BuildingBlock};
pub use cases::{build_immersion, Branch, CaseId, CaseName, RegistryEntry, Sign, SubBranch, ALL_CASES};
pub use verify::{verify_case, Tolerances, VerificationReport};

use crate::error::Result;

/// The JSON registry: one entry per explicit construction.
pub fn registry() -> Result<Vec<RegistryEntry>> {
    ALL_CASES
        .iter()
        .map(|c| {
            let block = blocks::default_block(c.block_kind())?;
            let id = c.case_id();
            Ok(RegistryEntry {
                case: c.id().to_string(),
                epsilon: id.epsilon,
                branch: id.branch,
                block_kind: c.block_kind(),
                domain: c.domain(&block),
            })
        })
        .collect()
}

pub fn registry_json() -> Result<String> {
    Ok(serde_json::to_string_pretty(&registry()?)?)
}

/// Parses a registry index, rejecting entries whose branch does not exist for
/// their ε or whose domain box is malformed.
pub fn parse_registry(src: &str) -> Result<Vec<RegistryEntry>> {
    let entries: Vec<RegistryEntry> = serde_json::from_str(src)?;
    for e in &entries {
        let id = CaseId {
            epsilon: e.epsilon,
            branch: e.branch,
        };
        let bad_box =
            e.domain.lo.len() != e.domain.hi.len() || e.domain.lo.iter().zip(&e.domain.hi).any(|(l, h)| !(l <= h));
        if !id.is_valid() || bad_box {
            return Err(crate::Error::Parse {
                pos: 0,
                msg: format!("invalid registry entry '{}'", e.case),
            });
        }
    }
    Ok(entries)
}
