use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Scribal hand, 1 through 5.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Hand(u8);

impl Hand {
    pub fn new(n: u8) -> Result<Self> {
        if (1..=5).contains(&n) {
            Ok(Hand(n))
        } else {
            Err(Error::invalid(format!("hand must be 1-5, got {n}")))
        }
    }

    pub fn get(self) -> u8 {
        self.0
    }
}

impl fmt::Display for Hand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Language {
    A,
    B,
    Unknown,
}

impl Language {
    pub const ALLOWED: &'static str = "A, B, unknown";

    pub fn as_str(self) -> &'static str {
        match self {
            Language::A => "A",
            Language::B => "B",
            Language::Unknown => "unknown",
        }
    }
}

impl FromStr for Language {
    type Err = ();
    fn from_str(s: &str) -> std::result::Result<Self, ()> {
        match s {
            "A" => Ok(Language::A),
            "B" => Ok(Language::B),
            "unknown" => Ok(Language::Unknown),
            _ => Err(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Subject {
    Botanical,
    Astrological,
    Balneological,
    Pharmaceutical,
    Recipes,
    Starred,
    Rosette,
    Unknown,
}

impl Subject {
    pub const ALL: [Subject; 8] = [
        Subject::Botanical,
        Subject::Astrological,
        Subject::Balneological,
        Subject::Pharmaceutical,
        Subject::Recipes,
        Subject::Starred,
        Subject::Rosette,
        Subject::Unknown,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Subject::Botanical => "botanical",
            Subject::Astrological => "astrological",
            Subject::Balneological => "balneological",
            Subject::Pharmaceutical => "pharmaceutical",
            Subject::Recipes => "recipes",
            Subject::Starred => "starred",
            Subject::Rosette => "rosette",
            Subject::Unknown => "unknown",
        }
    }
}

impl FromStr for Subject {
    type Err = ();
    fn from_str(s: &str) -> std::result::Result<Self, ()> {
        Subject::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or(())
    }
}

/// Categorical labels of one page.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FolioMetadata {
    pub page: String,
    pub hand: Hand,
    pub language: Language,
    pub subject: Subject,
    pub quire: u8,
}

/// Metadata rows keyed by page, in file order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MetadataTable {
    rows: Vec<FolioMetadata>,
    index: HashMap<String, usize>,
}

impl MetadataTable {
    pub fn get(&self, page: &str) -> Option<&FolioMetadata> {
        self.index.get(page).map(|&i| &self.rows[i])
    }

    pub fn contains(&self, page: &str) -> bool {
        self.index.contains_key(page)
    }

    pub fn rows(&self) -> &[FolioMetadata] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn from_rows(rows: Vec<FolioMetadata>) -> Result<Self> {
        let mut table = MetadataTable::default();
        for row in rows {
            table.push(row, None)?;
        }
        Ok(table)
    }

    fn push(&mut self, row: FolioMetadata, line: Option<usize>) -> Result<()> {
        if self.index.contains_key(&row.page) {
            let at = line.map(|l| format!(" (line {l})")).unwrap_or_default();
            return Err(Error::invalid(format!("duplicate page {}{at}", row.page)));
        }
        self.index.insert(row.page.clone(), self.rows.len());
        self.rows.push(row);
        Ok(())
    }
}

pub fn load_metadata(path: &Path) -> Result<MetadataTable> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_metadata(&text)
}

/// Parses `page,hand,language,subject,quire` CSV text.
pub fn parse_metadata(text: &str) -> Result<MetadataTable> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::invalid("metadata file is empty"))?
        .1;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols != ["page", "hand", "language", "subject", "quire"] {
        return Err(Error::invalid(format!(
            "metadata header must be `page,hand,language,subject,quire`, got `{header}`"
        )));
    }
    let mut table = MetadataTable::default();
    for (idx, line) in lines {
        let lineno = idx + 1;
        let bad = |what: &str, value: &str, allowed: &str| {
            Error::invalid(format!(
                "line {lineno}: {what} {value:?} is not one of {allowed}"
            ))
        };
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let [page, hand, language, subject, quire] = fields[..] else {
            return Err(Error::invalid(format!(
                "line {lineno}: expected 5 fields, found {}",
                fields.len()
            )));
        };
        if page.is_empty() {
            return Err(Error::invalid(format!("line {lineno}: empty page id")));
        }
        let hand = hand
            .parse::<u8>()
            .ok()
            .and_then(|h| Hand::new(h).ok())
            .ok_or_else(|| bad("hand", hand, "1, 2, 3, 4, 5"))?;
        let language = language
            .parse::<Language>()
            .map_err(|_| bad("language", language, Language::ALLOWED))?;
        let subject = subject.parse::<Subject>().map_err(|_| {
            let allowed: Vec<_> = Subject::ALL.iter().map(|s| s.as_str()).collect();
            bad("subject", subject, &allowed.join(", "))
        })?;
        let quire = quire
            .parse::<u8>()
            .ok()
            .filter(|q| (1..=18).contains(q))
            .ok_or_else(|| bad("quire", quire, "1-18"))?;
        table.push(
            FolioMetadata {
                page: page.to_string(),
                hand,
                language,
                subject,
                quire,
            },
            Some(lineno),
        )?;
    }
    Ok(table)
}
