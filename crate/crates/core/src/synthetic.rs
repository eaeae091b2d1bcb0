//! Deterministic demo corpus in interlinear EVA format.
//!
//! Each page draws words from four Zipf-weighted pools: shared, per
//! language, per illustrated subject and per hand. The text carries the
//! annotations a real transcription does (comments, fillers, uncertain
//! spaces, illustration gaps, paragraph ends, a second transcriber) so every
//! tokenizer rule is exercised.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng as _;

use crate::corpus::{FolioMetadata, Language, MetadataTable, Subject, SHORT_PAGES};
use crate::rng::{self, Rng};

/// Seed of the checked-in sample transcription.
pub const SAMPLE_SEED: u64 = 1;

const PREFIX: [&str; 14] = ["qo", "o", "ch", "sh", "d", "y", "s", "k", "t", "p", "f", "c", "l", "r"];
const MIDDLE: [&str; 14] = ["ke", "te", "ee", "ai", "o", "a", "ol", "or", "che", "she", "ckh", "cth", "eo", "ok"];
const SUFFIX: [&str; 12] = ["dy", "y", "in", "iin", "aiin", "ar", "al", "ol", "am", "s", "r", "l"];

const COMMENTS: [&str; 4] = ["{plant}", "{gap}", "{&253}", "<->"];

/// Share of words drawn from the shared, language, subject and hand pools.
const MIX: [f64; 4] = [0.25, 0.35, 0.25, 0.15];

struct Pools {
    common: Vec<String>,
    language: [Vec<String>; 3],
    subject: Vec<Vec<String>>,
    hand: Vec<Vec<String>>,
}

fn fresh_words(r: &mut Rng, seen: &mut BTreeSet<String>, n: usize) -> Vec<String> {
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let mut w = String::new();
        if r.random_bool(0.8) {
            w.push_str(PREFIX[r.random_range(0..PREFIX.len())]);
        }
        for _ in 0..r.random_range(1..=2) {
            w.push_str(MIDDLE[r.random_range(0..MIDDLE.len())]);
        }
        w.push_str(SUFFIX[r.random_range(0..SUFFIX.len())]);
        if seen.insert(w.clone()) {
            out.push(w);
        }
    }
    out
}

impl Pools {
    fn new(seed: u64) -> Self {
        let mut r = rng::seeded(rng::derive_seed(seed, "vocabulary"));
        let mut seen = BTreeSet::new();
        Pools {
            common: fresh_words(&mut r, &mut seen, 40),
            language: [
                fresh_words(&mut r, &mut seen, 60),
                fresh_words(&mut r, &mut seen, 60),
                fresh_words(&mut r, &mut seen, 20),
            ],
            subject: (0..Subject::ALL.len()).map(|_| fresh_words(&mut r, &mut seen, 40)).collect(),
            hand: (0..5).map(|_| fresh_words(&mut r, &mut seen, 30)).collect(),
        }
    }

    fn for_page(&self, meta: &FolioMetadata) -> [&[String]; 4] {
        let lang = match meta.language {
            Language::A => 0,
            Language::B => 1,
            Language::Unknown => 2,
        };
        let subj = Subject::ALL.iter().position(|s| *s == meta.subject).expect("closed set");
        [
            &self.common,
            &self.language[lang],
            &self.subject[subj],
            &self.hand[meta.hand.get() as usize - 1],
        ]
    }
}

fn zipf(n: usize) -> WeightedIndex<f64> {
    WeightedIndex::new((1..=n).map(|r| 1.0 / r as f64)).expect("non-empty pool")
}

fn page_length(r: &mut Rng, meta: &FolioMetadata) -> usize {
    if SHORT_PAGES.contains(&meta.page.as_str()) {
        return r.random_range(25..45);
    }
    let range = match meta.subject {
        Subject::Astrological => 20..80,
        Subject::Botanical => 120..260,
        Subject::Balneological => 250..400,
        Subject::Rosette => 300..500,
        Subject::Recipes | Subject::Pharmaceutical => 200..350,
        Subject::Starred => 300..450,
        Subject::Unknown => 60..200,
    };
    r.random_range(range)
}

/// Adds annotation noise to a word; the tokenizer must undo all of it.
fn decorate(r: &mut Rng, word: &str) -> String {
    if word.len() > 2 && r.random_bool(0.03) {
        let at = r.random_range(1..word.len());
        let filler = if r.random_bool(0.5) { '!' } else { '%' };
        format!("{}{filler}{}", &word[..at], &word[at..])
    } else {
        word.to_string()
    }
}

fn write_page(out: &mut String, r: &mut Rng, pools: [&[String]; 4], meta: &FolioMetadata) {
    let dists: Vec<WeightedIndex<f64>> = pools.iter().map(|p| zipf(p.len())).collect();
    let mix = WeightedIndex::new(MIX).expect("positive weights");
    let total = page_length(r, meta);
    let words: Vec<&str> = (0..total)
        .map(|_| {
            let pool = mix.sample(r);
            pools[pool][dists[pool].sample(r)].as_str()
        })
        .collect();

    writeln!(out, "<{}>", meta.page).unwrap();
    writeln!(out, "# page {}, {} words", meta.page, total).unwrap();
    let label_page = meta.subject == Subject::Astrological;
    let (mut pos, mut para, mut line) = (0, 1, 0);
    let mut para_left = r.random_range(3..=8);
    while pos < words.len() {
        let take = if label_page { r.random_range(1..=3) } else { r.random_range(6..=11) };
        let chunk = &words[pos..(pos + take).min(words.len())];
        pos += chunk.len();
        line += 1;
        para_left -= 1;
        let mut text = String::new();
        if r.random_bool(0.02) {
            text.push_str(COMMENTS[r.random_range(0..COMMENTS.len())]);
        }
        for (i, w) in chunk.iter().enumerate() {
            if i > 0 {
                text.push(match r.random_range(0..100) {
                    0..=4 => ',',
                    5..=6 => '-',
                    _ => '.',
                });
            }
            text.push_str(&decorate(r, w));
        }
        let ends_paragraph = !label_page && (para_left == 0 || pos == words.len());
        if ends_paragraph {
            text.push('=');
        }
        let tag = if label_page {
            format!("{}.L{line}", meta.page)
        } else {
            format!("{}.P{para}.{line}", meta.page)
        };
        writeln!(out, "<{tag};H> {text}").unwrap();
        if r.random_bool(0.1) {
            // a second reading that selection must discard
            writeln!(out, "<{tag};U> {}", chunk.join(".")).unwrap();
        }
        if ends_paragraph {
            para += 1;
            line = 0;
            para_left = r.random_range(3..=8);
        }
    }
}

/// One synthetic page per metadata row, in metadata order.
pub fn generate_transcription(meta: &MetadataTable, seed: u64) -> String {
    let pools = Pools::new(seed);
    let mut out = String::new();
    writeln!(out, "# synthetic interlinear transcription, seed {seed}").unwrap();
    writeln!(out, "# not manuscript text: words are generated from per-label vocabularies").unwrap();
    for row in meta.rows() {
        let mut r = rng::seeded(rng::derive_seed(seed, &row.page));
        write_page(&mut out, &mut r, pools.for_page(row), row);
    }
    out
}
