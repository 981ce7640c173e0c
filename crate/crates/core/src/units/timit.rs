//! TIMIT phone transcriptions to syllable-count targets: every vowel-class phone
//! becomes one `S`, everything else is dropped.

use std::collections::HashSet;

use super::UnitError;

pub const SYLLABLE_TOKEN: &str = "S";

/// Vowels and diphthongs plus syllabic consonants.
pub const DEFAULT_VOWELS: [&str; 24] = [
    "iy", "ih", "eh", "ey", "ae", "aa", "aw", "ay", "ah", "ao", "oy", "ow", "uh", "uw", "ux", "er",
    "ax", "ix", "axr", "ax-h", "el", "em", "en", "eng",
];

/// Non-vowel TIMIT symbols, including closures, pauses and stress digits.
const CONSONANTS_AND_MARKERS: [&str; 41] = [
    "b", "d", "g", "p", "t", "k", "dx", "q", "bcl", "dcl", "gcl", "pcl", "tcl", "kcl", "jh", "ch",
    "s", "sh", "z", "zh", "f", "th", "v", "dh", "m", "n", "ng", "nx", "l", "r", "w", "y", "hh",
    "hv", "pau", "epi", "h#", "1", "2", "sil", "#h",
];

/// Which phones count as syllable nuclei. Phones outside both the vowel set and the
/// TIMIT inventory are rejected.
#[derive(Debug, Clone)]
pub struct VowelSet {
    vowels: HashSet<String>,
}

impl Default for VowelSet {
    fn default() -> Self {
        VowelSet {
            vowels: DEFAULT_VOWELS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl VowelSet {
    /// Parses a whitespace-separated list of vowel symbols; `#` starts a comment line.
    pub fn parse(text: &str) -> Result<Self, UnitError> {
        let vowels: HashSet<String> = text
            .lines()
            .filter(|l| !l.trim_start().starts_with('#'))
            .flat_map(str::split_whitespace)
            .map(String::from)
            .collect();
        if vowels.is_empty() {
            return Err(UnitError::EmptyVowelSet);
        }
        Ok(VowelSet { vowels })
    }

    pub fn is_vowel(&self, phone: &str) -> bool {
        self.vowels.contains(phone)
    }

    fn is_known(&self, phone: &str) -> bool {
        self.is_vowel(phone)
            || DEFAULT_VOWELS.contains(&phone)
            || CONSONANTS_AND_MARKERS.contains(&phone)
    }

    /// One `S` per vowel-class phone, in order.
    pub fn syllable_targets<S: AsRef<str>>(&self, phones: &[S]) -> Result<Vec<String>, UnitError> {
        let mut out = Vec::new();
        for p in phones {
            let p = p.as_ref();
            if !self.is_known(p) {
                return Err(UnitError::UnknownPhone(p.to_string()));
            }
            if self.is_vowel(p) {
                out.push(SYLLABLE_TOKEN.to_string());
            }
        }
        Ok(out)
    }
}

/// [`VowelSet::syllable_targets`] with the default vowel set.
pub fn timit_to_syllable_targets<S: AsRef<str>>(phones: &[S]) -> Result<Vec<String>, UnitError> {
    VowelSet::default().syllable_targets(phones)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn split(s: &str) -> Vec<&str> {
        s.split_whitespace().collect()
    }

    #[test]
    fn shows_four_syllables() {
        let out =
            timit_to_syllable_targets(&split("h# sh ix hv eh dcl jh ih dcl d ah kcl k")).unwrap();
        assert_eq!(out.join(" "), "S S S S");
    }

    #[test]
    fn no_vowels_and_adjacent_vowels() {
        assert!(timit_to_syllable_targets(&split("h# pau"))
            .unwrap()
            .is_empty());
        assert_eq!(
            timit_to_syllable_targets(&split("iy iy")).unwrap(),
            ["S", "S"]
        );
    }

    #[test]
    fn unknown_phone() {
        assert_eq!(
            timit_to_syllable_targets(&split("h# xx")),
            Err(UnitError::UnknownPhone("xx".into()))
        );
    }

    #[test]
    fn custom_vowel_set_drops_syllabic_consonants() {
        let set = VowelSet::parse("# plain vowels only\niy ih eh ae").unwrap();
        assert_eq!(
            set.syllable_targets(&split("iy en ae")).unwrap(),
            ["S", "S"]
        );
        assert_eq!(
            VowelSet::parse("# nothing").unwrap_err(),
            UnitError::EmptyVowelSet
        );
    }

    #[test]
    fn inventory_sizes() {
        assert_eq!(DEFAULT_VOWELS.len(), 24);
        let mut all: HashSet<&str> = DEFAULT_VOWELS.iter().copied().collect();
        all.extend(CONSONANTS_AND_MARKERS);
        assert_eq!(all.len(), 65);
    }
}
