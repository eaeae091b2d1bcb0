//! Transcription parsing, tokenization, document segmentation and page
//! metadata.
//!
//! The atomic unit throughout is the *page* (e.g. `f90r2`); folios group
//! pages that share a leaf number (`f90r1`, `f90r2`, `f90v1`, ...).

mod exclude;
mod metadata;
mod segment;
mod transcription;

pub use exclude::{apply_exclusions, ExclusionPolicy, SHORT_PAGES};
pub use metadata::{load_metadata, parse_metadata, FolioMetadata, Hand, Language, MetadataTable, Subject};
pub use segment::{read_jsonl, segment_documents, write_jsonl, Document, Segmentation};
pub use transcription::{
    parse_transcription, read_transcription, tokenize_locus, LocusRecord, TokenizerRules,
};

/// Folio id of a page: the leading `f<digits>` part (`f90r2` -> `f90`).
pub fn folio_of(page: &str) -> &str {
    let bytes = page.as_bytes();
    let mut end = 0;
    if bytes.first() == Some(&b'f') {
        end = 1;
        while end < bytes.len() && bytes[end].is_ascii_digit() {
            end += 1;
        }
    }
    if end <= 1 {
        page
    } else {
        &page[..end]
    }
}

/// Leaf number of a page (`f68r1` -> 68), if it has the usual `f<n>` shape.
pub fn folio_number(page: &str) -> Option<u32> {
    folio_of(page).strip_prefix('f')?.parse().ok()
}
