//! Regenerates `data/sample/transcription.evt` from the reference metadata.
//!
//! cargo run -p folio-topics --example generate_sample [-- <repo-root>]

use std::path::PathBuf;

use folio_topics::corpus::load_metadata;
use folio_topics::pipeline::{REFERENCE_METADATA, SAMPLE_TRANSCRIPTION};
use folio_topics::synthetic::{generate_transcription, SAMPLE_SEED};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let root = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../.."))
        .canonicalize()?;
    let meta = load_metadata(&root.join(REFERENCE_METADATA))?;
    let text = generate_transcription(&meta, SAMPLE_SEED);
    let out = root.join(SAMPLE_TRANSCRIPTION);
    std::fs::write(&out, text)?;
    println!("wrote {}", out.display());
    Ok(())
}
