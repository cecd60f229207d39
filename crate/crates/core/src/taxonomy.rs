//! App-to-category mapping.
//!
//! A [`Taxonomy`] holds exact-name rules, consulted first, and an ordered
//! list of substring rules where the first match wins. Apps no rule covers
//! are [`AppCategory::Unknown`]. The bundled default is built from the app
//! examples of the five usage categories and can be replaced by a file.

use std::collections::HashMap;
use std::fmt;
use std::io::Read;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AppCategory {
    Entertainment,
    SocialNetworking,
    Utility,
    Browser,
    Game,
    Unknown,
}

impl AppCategory {
    /// The five categories that carry features, in feature-vector order.
    pub const FEATURED: [AppCategory; 5] = [
        AppCategory::Entertainment,
        AppCategory::SocialNetworking,
        AppCategory::Game,
        AppCategory::Utility,
        AppCategory::Browser,
    ];

    /// Position in [`AppCategory::FEATURED`], `None` for `Unknown`.
    pub fn feature_index(self) -> Option<usize> {
        AppCategory::FEATURED.iter().position(|&c| c == self)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            AppCategory::Entertainment => "entertainment",
            AppCategory::SocialNetworking => "social_networking",
            AppCategory::Utility => "utility",
            AppCategory::Browser => "browser",
            AppCategory::Game => "game",
            AppCategory::Unknown => "unknown",
        }
    }
}

impl fmt::Display for AppCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AppCategory {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "entertainment" => AppCategory::Entertainment,
            "social_networking" | "social" => AppCategory::SocialNetworking,
            "utility" => AppCategory::Utility,
            "browser" => AppCategory::Browser,
            "game" => AppCategory::Game,
            "unknown" => AppCategory::Unknown,
            other => return Err(Error::Taxonomy(format!("unknown category {other:?}"))),
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Taxonomy {
    exact: HashMap<String, AppCategory>,
    substring: Vec<(String, AppCategory)>,
}

const DEFAULT_TAXONOMY: &str = include_str!("default_taxonomy.csv");

impl Taxonomy {
    /// The bundled taxonomy.
    pub fn bundled() -> Taxonomy {
        load_taxonomy(DEFAULT_TAXONOMY.as_bytes()).expect("bundled taxonomy is valid")
    }

    pub fn add_exact(&mut self, pattern: &str, category: AppCategory) -> Result<()> {
        let key = pattern.trim().to_ascii_lowercase();
        if self.exact.insert(key.clone(), category).is_some() {
            return Err(Error::Taxonomy(format!("duplicate exact pattern {key:?}")));
        }
        Ok(())
    }

    pub fn add_substring(&mut self, pattern: &str, category: AppCategory) {
        self.substring
            .push((pattern.trim().to_ascii_lowercase(), category));
    }

    pub fn categorize(&self, app_id: &str) -> AppCategory {
        categorize_app(self, app_id)
    }
}

/// Reads a `pattern,match_kind,category` CSV. An empty source gives a
/// taxonomy that maps everything to `Unknown`.
pub fn load_taxonomy<R: Read>(source: R) -> Result<Taxonomy> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(source);
    let mut taxonomy = Taxonomy::default();
    let headers = reader.headers()?.clone();
    if headers.is_empty() {
        return Ok(taxonomy);
    }
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Taxonomy(format!("missing column {name:?}")))
    };
    let (pi, ki, ci) = (col("pattern")?, col("match_kind")?, col("category")?);
    for record in reader.records() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let field = |i: usize| {
            record
                .get(i)
                .ok_or_else(|| Error::Taxonomy(format!("line {line}: missing field")))
        };
        let pattern = field(pi)?;
        let category: AppCategory = field(ci)?.parse()?;
        if pattern.is_empty() {
            return Err(Error::Taxonomy(format!("line {line}: empty pattern")));
        }
        match field(ki)? {
            "exact" => taxonomy.add_exact(pattern, category)?,
            "substring" => taxonomy.add_substring(pattern, category),
            other => {
                return Err(Error::Taxonomy(format!(
                    "line {line}: unknown match_kind {other:?}"
                )))
            }
        }
    }
    Ok(taxonomy)
}

pub fn categorize_app(t: &Taxonomy, app_id: &str) -> AppCategory {
    if let Some(&c) = t.exact.get(app_id) {
        return c;
    }
    t.substring
        .iter()
        .find(|(pat, _)| app_id.contains(pat.as_str()))
        .map_or(AppCategory::Unknown, |&(_, c)| c)
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn load(s: &str) -> Result<Taxonomy> {
        load_taxonomy(s.as_bytes())
    }

    #[test]
    fn exact_rule() {
        let t = load("pattern,match_kind,category\nfacebook,exact,social_networking\n").unwrap();
        assert_eq!(categorize_app(&t, "facebook"), AppCategory::SocialNetworking);
        assert_eq!(categorize_app(&t, "com.facebook.katana"), AppCategory::Unknown);
    }

    #[test]
    fn empty_file_maps_to_unknown() {
        let t = load("").unwrap();
        assert_eq!(categorize_app(&t, "chrome"), AppCategory::Unknown);
    }

    #[test]
    fn first_substring_wins() {
        let t = load("pattern,match_kind,category\nmail,substring,utility\ngame,substring,game\n").unwrap();
        assert_eq!(categorize_app(&t, "mailgame"), AppCategory::Utility);
    }

    #[test]
    fn exact_beats_substring() {
        let t = load(
            "pattern,match_kind,category\nmail,substring,utility\nmailgame,exact,game\n",
        )
        .unwrap();
        assert_eq!(categorize_app(&t, "mailgame"), AppCategory::Game);
    }

    #[test]
    fn fatal_errors() {
        assert!(matches!(
            load("pattern,match_kind,category\nx,exact,sports\n"),
            Err(Error::Taxonomy(_))
        ));
        assert!(matches!(
            load("pattern,match_kind,category\nx,exact,game\nX,exact,utility\n"),
            Err(Error::Taxonomy(_))
        ));
        assert!(matches!(
            load("pattern,match_kind,category\nx,regex,game\n"),
            Err(Error::Taxonomy(_))
        ));
    }

    #[test]
    fn bundled_defaults() {
        let t = Taxonomy::bundled();
        assert_eq!(t.categorize("chrome"), AppCategory::Browser);
        assert_eq!(t.categorize("email"), AppCategory::Browser);
        assert_eq!(t.categorize("candycrushsaga"), AppCategory::Game);
        assert_eq!(t.categorize("com.king.candycrushsaga"), AppCategory::Game);
        assert_eq!(t.categorize("com.whatsapp"), AppCategory::SocialNetworking);
        assert_eq!(t.categorize("com.google.android.calendar"), AppCategory::Utility);
        assert_eq!(t.categorize("com.google.android.youtube"), AppCategory::Entertainment);
        assert_eq!(t.categorize("com.vendor.unlisted"), AppCategory::Unknown);
    }

    #[test]
    fn feature_order() {
        assert_eq!(AppCategory::Unknown.feature_index(), None);
        assert_eq!(AppCategory::Entertainment.feature_index(), Some(0));
        assert_eq!(AppCategory::Browser.feature_index(), Some(4));
    }

    proptest! {
        #[test]
        fn exact_rules_survive_new_substring_rules(app in "[a-z.]{1,12}", pat in "[a-z]{1,3}") {
            let mut t = Taxonomy::bundled();
            t.exact.insert(app.clone(), AppCategory::Utility);
            t.add_substring(&pat, AppCategory::Game);
            prop_assert_eq!(t.categorize(&app), AppCategory::Utility);
        }

        #[test]
        fn deterministic(app in "\\PC{0,20}") {
            let t = Taxonomy::bundled();
            prop_assert_eq!(t.categorize(&app), t.categorize(&app));
        }
    }
}
