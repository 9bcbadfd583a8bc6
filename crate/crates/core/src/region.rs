//! Hierarchical region codes, the sub-region taxonomy, and the
//! close/far/dissimilar neighbor algebra.
//!
//! A code is one to three dot-separated tokens, e.g. `8`, `8.3`, `8.3.5`.
//! Tokens are opaque strings: synthetic worlds use codes like `S1.2.3`.

use alloc::borrow::ToOwned;
use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const MAX_DEPTH: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RegionCode {
    tokens: Vec<String>,
}

impl RegionCode {
    pub fn parse(text: &str) -> Result<Self> {
        let err = |token: &str, reason| Error::RegionParse {
            text: text.to_owned(),
            token: token.to_owned(),
            reason,
        };
        let mut tokens = Vec::new();
        for token in text.split('.') {
            if tokens.len() == MAX_DEPTH {
                return Err(err(token, "more than three levels"));
            }
            if token.is_empty() {
                return Err(err(token, "empty token"));
            }
            if !token.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
                return Err(err(token, "invalid character"));
            }
            tokens.push(token.to_owned());
        }
        Ok(Self { tokens })
    }

    /// Number of populated levels (1..=3).
    pub fn depth(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_level3(&self) -> bool {
        self.depth() == 3
    }

    /// The ancestor (or self) at `level` (1-based), if this code is that deep.
    pub fn at_level(&self, level: usize) -> Option<RegionCode> {
        (level >= 1 && level <= self.depth()).then(|| RegionCode {
            tokens: self.tokens[..level].to_vec(),
        })
    }

    pub fn level1(&self) -> RegionCode {
        RegionCode {
            tokens: self.tokens[..1].to_vec(),
        }
    }

    pub fn level2(&self) -> Option<RegionCode> {
        self.at_level(2)
    }

    pub fn level3(&self) -> Option<RegionCode> {
        self.at_level(3)
    }

    /// True if `self` is `other` or one of its ancestors.
    pub fn contains(&self, other: &RegionCode) -> bool {
        self.depth() <= other.depth() && other.tokens[..self.depth()] == self.tokens[..]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }
}

impl fmt::Display for RegionCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, t) in self.tokens.iter().enumerate() {
            if i > 0 {
                f.write_str(".")?;
            }
            f.write_str(t)?;
        }
        Ok(())
    }
}

impl FromStr for RegionCode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

/// Token-wise order; tokens with a shared alphabetic prefix compare their
/// numeric suffix numerically, so `S1.10` sorts after `S1.9`.
fn token_cmp(a: &str, b: &str) -> Ordering {
    let split = |s: &str| {
        let idx = s.find(|c: char| c.is_ascii_digit()).unwrap_or(s.len());
        let (head, tail) = s.split_at(idx);
        (head.to_owned(), tail.parse::<u64>().ok(), tail.to_owned())
    };
    let (ha, na, ta) = split(a);
    let (hb, nb, tb) = split(b);
    ha.cmp(&hb)
        .then_with(|| match (na, nb) {
            (Some(x), Some(y)) => x.cmp(&y),
            _ => Ordering::Equal,
        })
        .then_with(|| ta.cmp(&tb))
}

impl Ord for RegionCode {
    fn cmp(&self, other: &Self) -> Ordering {
        for (a, b) in self.tokens.iter().zip(&other.tokens) {
            match token_cmp(a, b) {
                Ordering::Equal => {}
                o => return o,
            }
        }
        self.depth().cmp(&other.depth())
    }
}

impl PartialOrd for RegionCode {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Serialize for RegionCode {
    fn serialize<S: serde::Serializer>(&self, s: S) -> core::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for RegionCode {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> core::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        RegionCode::parse(&s).map_err(serde::de::Error::custom)
    }
}

/// Relationship of a level-III region to a region of interest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NeighborClass {
    /// The region of interest itself.
    Same,
    /// Same level-II parent.
    Close,
    /// Same level-I parent, different level-II parent.
    Far,
    /// Different level-I parent.
    Dissimilar,
}

impl NeighborClass {
    pub const ALL: [NeighborClass; 4] = [Self::Same, Self::Close, Self::Far, Self::Dissimilar];
}

pub fn classify_neighbor(roi: &RegionCode, other: &RegionCode) -> Result<NeighborClass> {
    for code in [roi, other] {
        if !code.is_level3() {
            return Err(Error::Contract(format!(
                "neighbor classification needs level-III codes, got {code}"
            )));
        }
    }
    let shared = roi.tokens.iter().zip(&other.tokens).take_while(|(a, b)| a == b).count();
    Ok(match shared {
        3 => NeighborClass::Same,
        2 => NeighborClass::Close,
        1 => NeighborClass::Far,
        _ => NeighborClass::Dissimilar,
    })
}

/// One lettered sub-region and the level-I/II codes it groups.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubRegion {
    pub letter: String,
    pub members: Vec<RegionCode>,
}

/// Letter groupings of region codes. Members of distinct letters never
/// overlap, so every code maps to at most one letter.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Taxonomy {
    entries: Vec<SubRegion>,
}

/// EPA level-I codes 5-15 grouped into letters A-R; 8, 9 and 10 split by
/// level II, 14 and 15 merged.
const EPA_TABLE: [(&str, &[&str]); 18] = [
    ("A", &["5"]),
    ("B", &["6"]),
    ("C", &["7"]),
    ("D", &["8.1"]),
    ("E", &["8.2"]),
    ("F", &["8.3"]),
    ("G", &["8.4"]),
    ("H", &["8.5"]),
    ("I", &["9.2"]),
    ("J", &["9.3"]),
    ("K", &["9.4"]),
    ("L", &["9.5", "9.6"]),
    ("M", &["10.1"]),
    ("N", &["10.2"]),
    ("O", &["11.1"]),
    ("P", &["12.1"]),
    ("Q", &["13"]),
    ("R", &["14", "15"]),
];

impl Taxonomy {
    pub fn new(entries: Vec<SubRegion>) -> Result<Self> {
        let mut letters = BTreeSet::new();
        let mut all: Vec<(&str, &RegionCode)> = Vec::new();
        for e in &entries {
            if e.letter.is_empty() || e.letter.contains([',', ';']) {
                return Err(Error::Taxonomy(format!("bad letter {:?}", e.letter)));
            }
            if !letters.insert(e.letter.as_str()) {
                return Err(Error::Taxonomy(format!("duplicate letter {}", e.letter)));
            }
            if e.members.is_empty() {
                return Err(Error::Taxonomy(format!("letter {} has no codes", e.letter)));
            }
            for m in &e.members {
                all.push((e.letter.as_str(), m));
            }
        }
        for (i, (la, a)) in all.iter().enumerate() {
            for (lb, b) in &all[i + 1..] {
                if a.contains(b) || b.contains(a) {
                    return Err(Error::Taxonomy(format!("codes {a} ({la}) and {b} ({lb}) overlap")));
                }
            }
        }
        Ok(Self { entries })
    }

    /// The built-in EPA ecoregion table (letters A-R).
    pub fn epa() -> Self {
        let entries = EPA_TABLE
            .iter()
            .map(|(letter, codes)| SubRegion {
                letter: (*letter).to_string(),
                members: codes
                    .iter()
                    .map(|c| RegionCode::parse(c).expect("static table"))
                    .collect(),
            })
            .collect();
        Self::new(entries).expect("static table is a partition")
    }

    pub fn entries(&self) -> &[SubRegion] {
        &self.entries
    }

    pub fn letters(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.letter.as_str())
    }

    pub fn subregion_of(&self, code: &RegionCode) -> Result<&SubRegion> {
        self.entries
            .iter()
            .filter_map(|e| {
                e.members
                    .iter()
                    .filter(|m| m.contains(code))
                    .map(|m| m.depth())
                    .max()
                    .map(|d| (d, e))
            })
            .max_by_key(|(d, _)| *d)
            .map(|(_, e)| e)
            .ok_or_else(|| Error::UnmappedRegion(code.to_string()))
    }

    /// Parses `letter,codes` CSV text; codes are `;`-separated.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        match lines.next() {
            Some((_, h)) if h.trim() == "letter,codes" => {}
            _ => return Err(Error::Taxonomy("expected header `letter,codes`".into())),
        }
        let mut entries = Vec::new();
        for (n, line) in lines {
            let (letter, codes) = line
                .split_once(',')
                .ok_or_else(|| Error::Taxonomy(format!("line {}: missing codes column", n + 1)))?;
            let members = codes
                .split(';')
                .map(|c| RegionCode::parse(c.trim()))
                .collect::<Result<Vec<_>>>()
                .map_err(|e| Error::Taxonomy(format!("line {}: {e}", n + 1)))?;
            entries.push(SubRegion {
                letter: letter.trim().to_string(),
                members,
            });
        }
        Self::new(entries)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("letter,codes\n");
        for e in &self.entries {
            out.push_str(&e.letter);
            out.push(',');
            for (i, m) in e.members.iter().enumerate() {
                if i > 0 {
                    out.push(';');
                }
                out.push_str(&m.to_string());
            }
            out.push('\n');
        }
        out
    }
}
