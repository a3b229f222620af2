use std::fmt;
use std::str::FromStr;
use std::sync::LazyLock;

use regex::Regex;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Language {
    Arabic,
    English,
    Danish,
    Greek,
    Turkish,
}

impl Language {
    pub const ALL: [Language; 5] = [
        Language::Arabic,
        Language::English,
        Language::Danish,
        Language::Greek,
        Language::Turkish,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Language::Arabic => "arabic",
            Language::English => "english",
            Language::Danish => "danish",
            Language::Greek => "greek",
            Language::Turkish => "turkish",
        }
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Language {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Language::ALL
            .into_iter()
            .find(|l| l.name() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| Error::Config(format!("unknown language {s:?}")))
    }
}

/// Which cleaning rules run. `digits` and `foreign_script` are honored for
/// Arabic only.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CleanConfig {
    pub language: Language,
    pub urls: bool,
    pub mentions: bool,
    pub punctuation: bool,
    pub elongation: bool,
    pub emoji: bool,
    pub digits: bool,
    pub foreign_script: bool,
    pub normalize_arabic: bool,
}

impl CleanConfig {
    /// Every rule applicable to `language` switched on.
    pub fn for_language(language: Language) -> Self {
        let arabic = language == Language::Arabic;
        CleanConfig {
            language,
            urls: true,
            mentions: true,
            punctuation: true,
            elongation: true,
            emoji: true,
            digits: arabic,
            foreign_script: arabic,
            normalize_arabic: arabic,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.language != Language::Arabic {
            for (on, name) in [
                (self.digits, "digits"),
                (self.foreign_script, "foreign_script"),
                (self.normalize_arabic, "normalize_arabic"),
            ] {
                if on {
                    return Err(Error::Config(format!(
                        "clean rule {name} applies to arabic only, language is {}",
                        self.language
                    )));
                }
            }
        }
        Ok(())
    }
}

static URL: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)(?:https?://|www\.)\S+").unwrap());
static MENTION: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"@\w+").unwrap());
static PUNCT: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"[[\p{P}\p{S}]&&[^']]").unwrap());
static DIGIT: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\p{Nd}").unwrap());
static LATIN: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\p{Latin}").unwrap());

/// Emoji blocks plus the joiners and selectors that glue emoji sequences.
pub const EMOJI_RANGES: &[(u32, u32)] = &[
    (0x1F600, 0x1F64F), // emoticons
    (0x1F300, 0x1F5FF), // symbols and pictographs
    (0x1F680, 0x1F6FF), // transport and map
    (0x1F900, 0x1F9FF), // supplemental symbols and pictographs
    (0x1FA70, 0x1FAFF), // symbols and pictographs extended-A
    (0x1F1E6, 0x1F1FF), // regional indicators (flags)
    (0x2600, 0x26FF),   // miscellaneous symbols
    (0x2700, 0x27BF),   // dingbats
    (0x1F3FB, 0x1F3FF), // skin tones
    (0x200D, 0x200D),   // zero-width joiner
    (0xFE0E, 0xFE0F),   // variation selectors
];

pub fn is_emoji(c: char) -> bool {
    let c = c as u32;
    EMOJI_RANGES.iter().any(|&(lo, hi)| (lo..=hi).contains(&c))
}

fn fold_arabic(c: char) -> Option<char> {
    match c {
        'أ' | 'إ' | 'آ' | 'ٱ' => Some('ا'),
        'ة' => Some('ه'),
        'ى' => Some('ي'),
        'ـ' => None,
        c => Some(c),
    }
}

fn collapse_runs(text: &str) -> String {
    let chars: Vec<char> = text.chars().collect();
    let mut out = String::with_capacity(text.len());
    let mut i = 0;
    while i < chars.len() {
        let mut j = i;
        while j < chars.len() && chars[j] == chars[i] {
            j += 1;
        }
        let run = j - i;
        let keep = if run >= 3 { 1 } else { run };
        out.extend(std::iter::repeat_n(chars[i], keep));
        i = j;
    }
    out
}

/// Applies the enabled rules. Removed material becomes a space, and
/// whitespace is collapsed last, so cleaning is idempotent.
pub fn clean_text(text: &str, config: &CleanConfig) -> String {
    let arabic = config.language == Language::Arabic;
    let mut s = text.to_string();
    if config.urls {
        s = URL.replace_all(&s, " ").into_owned();
    }
    if config.mentions {
        s = MENTION.replace_all(&s, " ").into_owned();
    }
    if config.emoji {
        s = s.chars().map(|c| if is_emoji(c) { ' ' } else { c }).collect();
    }
    if config.punctuation {
        s = PUNCT.replace_all(&s, " ").into_owned();
    }
    if arabic && config.digits {
        s = DIGIT.replace_all(&s, " ").into_owned();
    }
    if arabic && config.foreign_script {
        s = LATIN.replace_all(&s, " ").into_owned();
    }
    if arabic && config.normalize_arabic {
        s = s.chars().filter_map(fold_arabic).collect();
    }
    if config.elongation {
        s = collapse_runs(&s);
    }
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_string).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn elongation_example() {
        let cfg = CleanConfig::for_language(Language::Arabic);
        assert_eq!(clean_text("مبروووووك", &cfg), "مبروك");
    }

    #[test]
    fn danish_example() {
        let cfg = CleanConfig::for_language(Language::Danish);
        assert_eq!(clean_text("@USER Haha, det er genialt!", &cfg), "Haha det er genialt");
    }

    #[test]
    fn doubles_survive() {
        let cfg = CleanConfig::for_language(Language::English);
        assert_eq!(clean_text("good  coffee!!!", &cfg), "good coffee");
        assert_eq!(clean_text("soooo good", &cfg), "so good");
    }

    #[test]
    fn urls_emoji_apostrophe() {
        let cfg = CleanConfig::for_language(Language::English);
        assert_eq!(
            clean_text("it's https://t.co/x1 great 😀👍🏽 www.a.com", &cfg),
            "it's great"
        );
    }

    #[test]
    fn digits_kept_outside_arabic() {
        let en = CleanConfig::for_language(Language::English);
        assert_eq!(clean_text("top 10 list", &en), "top 10 list");
        let ar = CleanConfig::for_language(Language::Arabic);
        assert_eq!(clean_text("كتاب 10 book ٣", &ar), "كتاب");
    }

    #[test]
    fn arabic_folds() {
        let ar = CleanConfig::for_language(Language::Arabic);
        assert_eq!(clean_text("أحمد مدرسة على جميـــل", &ar), "احمد مدرسه علي جميل");
    }

    #[test]
    fn arabic_only_rules_rejected_elsewhere() {
        let mut cfg = CleanConfig::for_language(Language::Greek);
        assert!(cfg.validate().is_ok());
        cfg.digits = true;
        assert!(cfg.validate().is_err());
        assert!("Turkish".parse::<Language>().is_ok());
        assert!("klingon".parse::<Language>().is_err());
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(tokenize("great day"), ["great", "day"]);
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("  a   b "), ["a", "b"]);
    }
}
