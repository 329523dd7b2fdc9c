//! Closed lexicon loaded from a TSV file.
//!
//! One entry per line: `surface<TAB>lemma<TAB>category<TAB>sense`. Lines
//! starting with `#` and blank lines are ignored. Category expressions:
//!
//! | expression                     | meaning                                  |
//! |--------------------------------|------------------------------------------|
//! | `propername(per)`              | proper name with entity class            |
//! | `noun(person)` / `noun(thing)` | common noun with agreement               |
//! | `verb(mono,teaches)`           | verb: valency `intrans`/`mono`/`di`, 3sg |
//! | `adjective`                    |                                          |
//! | `preposition`                  |                                          |
//! | `determiner(indef)`            | kind `indef`, `univ` or `neg`            |
//! | `pronoun(person)`              | pronoun with agreement                   |
//! | `modal`                        |                                          |
//! | `weekday`                      |                                          |

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::drs::{EntityClass, Lemma};

/// Two-valued agreement: can the referent be a person or not.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Agreement {
    Person,
    Thing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Valency {
    Intrans,
    Mono,
    Di,
}

impl Valency {
    pub fn arity(self) -> usize {
        match self {
            Valency::Intrans => 0,
            Valency::Mono => 1,
            Valency::Di => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DeterminerKind {
    Indef,
    Univ,
    Neg,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Category {
    ProperName(EntityClass),
    Noun(Agreement),
    Verb {
        valency: Valency,
        third_singular: String,
    },
    Adjective,
    Preposition,
    Determiner(DeterminerKind),
    Pronoun(Agreement),
    Modal,
    Weekday,
}

impl Category {
    /// Short name used for features and the uniqueness invariant.
    pub fn kind(&self) -> &'static str {
        match self {
            Category::ProperName(_) => "propername",
            Category::Noun(_) => "noun",
            Category::Verb { .. } => "verb",
            Category::Adjective => "adjective",
            Category::Preposition => "preposition",
            Category::Determiner(_) => "determiner",
            Category::Pronoun(_) => "pronoun",
            Category::Modal => "modal",
            Category::Weekday => "weekday",
        }
    }

    fn parse(expr: &str) -> Result<Category, String> {
        let (head, args) = match expr.find('(') {
            Some(open) => {
                let inner = expr[open + 1..]
                    .strip_suffix(')')
                    .ok_or_else(|| format!("unclosed `(` in `{expr}`"))?;
                (&expr[..open], inner.split(',').map(str::trim).collect::<Vec<_>>())
            }
            None => (expr, Vec::new()),
        };
        let agreement = |a: &str| match a {
            "person" => Ok(Agreement::Person),
            "thing" => Ok(Agreement::Thing),
            other => Err(format!("unknown agreement `{other}`")),
        };
        let arity = |n: usize| {
            if args.len() == n {
                Ok(())
            } else {
                Err(format!("`{head}` takes {n} argument(s)"))
            }
        };
        Ok(match head {
            "propername" => {
                arity(1)?;
                Category::ProperName(
                    EntityClass::from_tag(args[0])
                        .ok_or_else(|| format!("unknown entity class `{}`", args[0]))?,
                )
            }
            "noun" => {
                arity(1)?;
                Category::Noun(agreement(args[0])?)
            }
            "pronoun" => {
                arity(1)?;
                Category::Pronoun(agreement(args[0])?)
            }
            "verb" => {
                arity(2)?;
                let valency = match args[0] {
                    "intrans" => Valency::Intrans,
                    "mono" => Valency::Mono,
                    "di" => Valency::Di,
                    other => return Err(format!("unknown valency `{other}`")),
                };
                if !is_word(args[1]) {
                    return Err(format!("bad third-person form `{}`", args[1]));
                }
                Category::Verb {
                    valency,
                    third_singular: args[1].to_string(),
                }
            }
            "determiner" => {
                arity(1)?;
                Category::Determiner(match args[0] {
                    "indef" => DeterminerKind::Indef,
                    "univ" => DeterminerKind::Univ,
                    "neg" => DeterminerKind::Neg,
                    other => return Err(format!("unknown determiner kind `{other}`")),
                })
            }
            "adjective" | "preposition" | "modal" | "weekday" => {
                arity(0)?;
                match head {
                    "adjective" => Category::Adjective,
                    "preposition" => Category::Preposition,
                    "modal" => Category::Modal,
                    _ => Category::Weekday,
                }
            }
            other => return Err(format!("unknown category `{other}`")),
        })
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let agr = |a: &Agreement| match a {
            Agreement::Person => "person",
            Agreement::Thing => "thing",
        };
        match self {
            Category::ProperName(c) => write!(f, "propername({})", c.tag()),
            Category::Noun(a) => write!(f, "noun({})", agr(a)),
            Category::Pronoun(a) => write!(f, "pronoun({})", agr(a)),
            Category::Verb {
                valency,
                third_singular,
            } => {
                let v = match valency {
                    Valency::Intrans => "intrans",
                    Valency::Mono => "mono",
                    Valency::Di => "di",
                };
                write!(f, "verb({v},{third_singular})")
            }
            Category::Determiner(k) => {
                let k = match k {
                    DeterminerKind::Indef => "indef",
                    DeterminerKind::Univ => "univ",
                    DeterminerKind::Neg => "neg",
                };
                write!(f, "determiner({k})")
            }
            other => f.write_str(other.kind()),
        }
    }
}

fn is_word(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_lowercase())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexEntry {
    pub surface: String,
    pub lemma: Lemma,
    pub category: Category,
    pub sense: u64,
}

/// One way of reading a surface token.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Reading<'a> {
    pub entry: &'a LexEntry,
    /// For verbs: whether the token is the third-person singular form.
    pub finite: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("lexicon line {line}: {message}")]
pub struct LexiconError {
    pub line: usize,
    pub message: String,
}

/// Grammar words that need no lexicon entry.
pub const FUNCTION_WORDS: [&str; 5] = ["not", "does", "who", "what", "when"];

/// Immutable closed lexicon.
#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    entries: Vec<LexEntry>,
    // surface -> (entry index, finite verb form)
    by_surface: BTreeMap<String, Vec<(usize, bool)>>,
}

const SHIPPED: &str = include_str!("../../data/lexicon.tsv");

impl Lexicon {
    pub fn new(entries: Vec<LexEntry>) -> Result<Self, LexiconError> {
        let mut by_surface: BTreeMap<String, Vec<(usize, bool)>> = BTreeMap::new();
        let mut seen = BTreeSet::new();
        for (i, e) in entries.iter().enumerate() {
            if !seen.insert((e.surface.clone(), e.category.kind())) {
                return Err(LexiconError {
                    line: i + 1,
                    message: format!("duplicate entry `{}` as {}", e.surface, e.category.kind()),
                });
            }
            by_surface.entry(e.surface.clone()).or_default().push((i, false));
            if let Category::Verb { third_singular, .. } = &e.category {
                by_surface.entry(third_singular.clone()).or_default().push((i, true));
            }
        }
        Ok(Lexicon {
            entries,
            by_surface,
        })
    }

    /// The lexicon shipped with the crate.
    pub fn shipped() -> Self {
        Lexicon::parse_tsv(SHIPPED).expect("shipped lexicon parses")
    }

    pub fn parse_tsv(text: &str) -> Result<Self, LexiconError> {
        let mut entries = Vec::new();
        let mut lines = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim_end();
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let err = |message: String| LexiconError {
                line: n + 1,
                message,
            };
            let cols: Vec<&str> = line.split('\t').map(str::trim).collect();
            if cols.len() != 4 {
                return Err(err(format!("expected 4 tab-separated columns, got {}", cols.len())));
            }
            if !is_word(cols[0]) {
                return Err(err(format!("bad surface `{}`", cols[0])));
            }
            let lemma = Lemma::new(cols[1]).map_err(|e| err(e.to_string()))?;
            let category = Category::parse(cols[2]).map_err(err)?;
            let sense = cols[3]
                .parse::<u64>()
                .map_err(|_| err(format!("bad sense `{}`", cols[3])))?;
            entries.push(LexEntry {
                surface: cols[0].to_string(),
                lemma,
                category,
                sense,
            });
            lines.push(n + 1);
        }
        Lexicon::new(entries).map_err(|mut e| {
            e.line = lines[e.line - 1];
            e
        })
    }

    pub fn to_tsv(&self) -> String {
        self.entries
            .iter()
            .map(|e| format!("{}\t{}\t{}\t{}\n", e.surface, e.lemma, e.category, e.sense))
            .collect()
    }

    pub fn entries(&self) -> &[LexEntry] {
        &self.entries
    }

    pub fn readings(&self, surface: &str) -> Vec<Reading<'_>> {
        self.by_surface
            .get(surface)
            .map(|v| {
                v.iter()
                    .map(|&(i, finite)| Reading {
                        entry: &self.entries[i],
                        finite,
                    })
                    .collect()
            })
            .unwrap_or_default()
    }

    /// True if `surface` is a lexicon surface (including verb 3sg forms).
    pub fn contains(&self, surface: &str) -> bool {
        self.by_surface.contains_key(surface)
    }

    /// Lexicon surfaces plus grammar function words.
    pub fn knows(&self, token: &str) -> bool {
        token == "." || FUNCTION_WORDS.contains(&token) || self.contains(token)
    }

    /// All surfaces in lexicographic order.
    pub fn surfaces(&self) -> impl Iterator<Item = &str> {
        self.by_surface.keys().map(String::as_str)
    }

    pub fn is_proper_name(&self, surface: &str) -> bool {
        self.readings(surface)
            .iter()
            .any(|r| matches!(r.entry.category, Category::ProperName(_)))
    }

    fn by_lemma(&self, lemma: &str, pred: impl Fn(&Category) -> bool) -> Option<&LexEntry> {
        self.entries
            .iter()
            .find(|e| e.lemma.as_str() == lemma && pred(&e.category))
    }

    pub fn noun_agreement(&self, lemma: &str) -> Option<Agreement> {
        self.by_lemma(lemma, |c| matches!(c, Category::Noun(_)))
            .and_then(|e| match e.category {
                Category::Noun(a) => Some(a),
                _ => None,
            })
    }

    pub fn pronoun_agreement(&self, lemma: &str) -> Option<Agreement> {
        self.by_lemma(lemma, |c| matches!(c, Category::Pronoun(_)))
            .and_then(|e| match e.category {
                Category::Pronoun(a) => Some(a),
                _ => None,
            })
    }

    pub fn is_weekday(&self, lemma: &str) -> bool {
        self.by_lemma(lemma, |c| matches!(c, Category::Weekday)).is_some()
    }

    pub fn verb(&self, lemma: &str) -> Option<&LexEntry> {
        self.by_lemma(lemma, |c| matches!(c, Category::Verb { .. }))
    }

    pub fn noun(&self, lemma: &str) -> Option<&LexEntry> {
        self.by_lemma(lemma, |c| matches!(c, Category::Noun(_)))
    }

    pub fn adjective(&self, lemma: &str) -> Option<&LexEntry> {
        self.by_lemma(lemma, |c| matches!(c, Category::Adjective))
    }

    pub fn proper_name(&self, lemma: &str) -> Option<&LexEntry> {
        self.by_lemma(lemma, |c| matches!(c, Category::ProperName(_)))
    }

    pub fn preposition(&self, lemma: &str) -> Option<&LexEntry> {
        self.by_lemma(lemma, |c| matches!(c, Category::Preposition))
    }
}
