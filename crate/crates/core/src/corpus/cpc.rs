use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// A Cooperative Patent Classification code.
///
/// The canonical string form is `<section><class><subclass><group>`, for
/// example `A01B1/024`. The group part may be absent when only the subclass
/// is known (`A01B`).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct CpcCode {
    section: char,
    class: u8,
    subclass: char,
    group: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid CPC code {code:?}: {reason}")]
pub struct CpcParseError {
    pub code: String,
    pub reason: &'static str,
}

const SECTIONS: &str = "ABCDEFGHY";

impl CpcCode {
    pub fn new(section: char, class: u8, subclass: char, group: &str) -> Result<Self, CpcParseError> {
        let s = format!("{section}{class:02}{subclass}{group}");
        s.parse()
    }

    pub fn section(&self) -> char {
        self.section
    }

    pub fn class_digits(&self) -> u8 {
        self.class
    }

    pub fn subclass_letter(&self) -> char {
        self.subclass
    }

    /// Main group and subgroup, e.g. `1/024`; empty for subclass-level codes.
    pub fn group(&self) -> &str {
        &self.group
    }

    pub fn is_subclass_level(&self) -> bool {
        self.group.is_empty()
    }

    /// Truncates to section + class + subclass (`A01B1/024` -> `A01B`).
    pub fn subclass(&self) -> CpcCode {
        CpcCode {
            section: self.section,
            class: self.class,
            subclass: self.subclass,
            group: String::new(),
        }
    }
}

impl fmt::Display for CpcCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{:02}{}{}", self.section, self.class, self.subclass, self.group)
    }
}

fn err(code: &str, reason: &'static str) -> CpcParseError {
    CpcParseError { code: code.to_string(), reason }
}

fn valid_group(group: &str) -> bool {
    let Some((main, sub)) = group.split_once('/') else {
        return false;
    };
    let digits = |s: &str, max: usize| !s.is_empty() && s.len() <= max && s.bytes().all(|b| b.is_ascii_digit());
    digits(main, 4) && digits(sub, 6)
}

impl FromStr for CpcCode {
    type Err = CpcParseError;

    /// Accepts the canonical form plus the `A01B 1/024` variant used by some
    /// bulk data files (a single space between subclass and group).
    fn from_str(raw: &str) -> Result<Self, Self::Err> {
        let s = raw.trim();
        let chars: Vec<char> = s.chars().collect();
        if chars.len() < 4 {
            return Err(err(raw, "shorter than a subclass symbol"));
        }
        let section = chars[0];
        if !SECTIONS.contains(section) {
            return Err(err(raw, "section must be one of A-H or Y"));
        }
        if !chars[1].is_ascii_digit() || !chars[2].is_ascii_digit() {
            return Err(err(raw, "class must be two digits"));
        }
        let class = (chars[1] as u8 - b'0') * 10 + (chars[2] as u8 - b'0');
        let subclass = chars[3];
        if !subclass.is_ascii_uppercase() {
            return Err(err(raw, "subclass must be an uppercase letter"));
        }
        let rest: String = chars[4..].iter().collect();
        let group = rest.strip_prefix(' ').unwrap_or(&rest);
        if !group.is_empty() && !valid_group(group) {
            return Err(err(raw, "group must look like <main>/<subgroup>"));
        }
        Ok(CpcCode {
            section,
            class,
            subclass,
            group: group.to_string(),
        })
    }
}

impl TryFrom<String> for CpcCode {
    type Error = CpcParseError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<CpcCode> for String {
    fn from(c: CpcCode) -> String {
        c.to_string()
    }
}
