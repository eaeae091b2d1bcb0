use serde::{Deserialize, Serialize};

use super::{folio_number, Document, MetadataTable};
use crate::{Error, Result};

/// Pages with fewer than 50 words, dropped from fixed-window analyses.
pub const SHORT_PAGES: [&str; 7] = ["f5v", "f11v", "f25r", "f38r", "f65r", "f65v", "f90r2"];

/// Page whose dialect is unassigned.
const UNASSIGNED_PAGE: &str = "f57v";

/// Label-only astronomical leaves.
const ASTRO_FOLIOS: std::ops::RangeInclusive<u32> = 67..=73;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExclusionPolicy {
    None,
    /// Drops f57v only.
    PageAnalysis,
    /// Also drops folios f67-f73 and the short pages.
    FixedWindowAnalysis,
}

impl std::str::FromStr for ExclusionPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(ExclusionPolicy::None),
            "page_analysis" => Ok(ExclusionPolicy::PageAnalysis),
            "fixed_window_analysis" => Ok(ExclusionPolicy::FixedWindowAnalysis),
            other => Err(Error::arg(format!(
                "unknown exclusion policy `{other}` (expected none, page_analysis or fixed_window_analysis)"
            ))),
        }
    }
}

impl ExclusionPolicy {
    pub fn as_str(self) -> &'static str {
        match self {
            ExclusionPolicy::None => "none",
            ExclusionPolicy::PageAnalysis => "page_analysis",
            ExclusionPolicy::FixedWindowAnalysis => "fixed_window_analysis",
        }
    }

    pub fn excludes(self, page: &str) -> bool {
        match self {
            ExclusionPolicy::None => false,
            ExclusionPolicy::PageAnalysis => page == UNASSIGNED_PAGE,
            ExclusionPolicy::FixedWindowAnalysis => {
                page == UNASSIGNED_PAGE
                    || SHORT_PAGES.contains(&page)
                    || folio_number(page).is_some_and(|n| ASTRO_FOLIOS.contains(&n))
            }
        }
    }
}

/// Removes excluded pages. Every document's page must have metadata.
pub fn apply_exclusions(
    docs: Vec<Document>,
    meta: &MetadataTable,
    policy: ExclusionPolicy,
) -> Result<Vec<Document>> {
    let mut orphans: Vec<&str> = docs
        .iter()
        .map(|d| d.page.as_str())
        .filter(|p| !meta.contains(p))
        .collect();
    if !orphans.is_empty() {
        orphans.sort_unstable();
        orphans.dedup();
        return Err(Error::invalid(format!(
            "pages missing from metadata: {}",
            orphans.join(", ")
        )));
    }
    Ok(docs
        .into_iter()
        .filter(|d| !policy.excludes(&d.page))
        .collect())
}
