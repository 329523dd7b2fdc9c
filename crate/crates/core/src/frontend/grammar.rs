//! Recursive-descent parser for the controlled English fragment.
//!
//! ```text
//! Discourse := S ("." S)*
//! S     := NP VP | "every" N VP | "no" N VP | ("who"|"what") VP
//!        | "when" ("can"|"does") NP Verb Args
//! NP    := ProperName | ("a"|"an") N | Pronoun | N
//! N     := Adjective* Noun
//! VP    := ["can" ["not"] | "does" "not"] Verb Args
//! Args  := NP? (NP | "to" NP)? PP*      (object count must match valency)
//! PP    := Preposition (NP | Weekday)
//! ```
//!
//! The verb must be in its base form after `can`/`does` and in the
//! third-person singular form otherwise.

use crate::drs::{EntityClass, Lemma};

use super::lexicon::{Agreement, Category, DeterminerKind, Lexicon, Valency};
use super::FrontendError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Nominal {
    pub adjectives: Vec<(Lemma, u64)>,
    pub noun: Lemma,
    pub sense: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NounPhrase {
    Proper {
        name: Lemma,
        class: EntityClass,
    },
    Indefinite(Nominal),
    /// A noun phrase without a determiner.
    Bare(Nominal),
    Pronoun {
        lemma: Lemma,
        agreement: Agreement,
    },
    Weekday(Lemma),
}

/// A noun phrase plus the index of its first token.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Np {
    pub at: usize,
    pub phrase: NounPhrase,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Auxiliary {
    None,
    Can,
    CanNot,
    DoesNot,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerbPhrase {
    pub aux: Auxiliary,
    pub verb: Lemma,
    pub sense: u64,
    pub valency: Valency,
    pub patient: Option<Np>,
    pub recipient: Option<Np>,
    pub pps: Vec<(Lemma, Np)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WhWord {
    Who,
    What,
    When,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sentence {
    Simple { subject: Np, vp: VerbPhrase },
    Every { restrictor: Nominal, vp: VerbPhrase },
    No { restrictor: Nominal, vp: VerbPhrase },
    /// `who`/`what` as the subject.
    SubjectQuestion { wh: WhWord, vp: VerbPhrase },
    /// `when` + auxiliary + subject + verb phrase.
    WhenQuestion { subject: Np, vp: VerbPhrase },
}

impl Sentence {
    pub fn vp(&self) -> &VerbPhrase {
        match self {
            Sentence::Simple { vp, .. }
            | Sentence::Every { vp, .. }
            | Sentence::No { vp, .. }
            | Sentence::SubjectQuestion { vp, .. }
            | Sentence::WhenQuestion { vp, .. } => vp,
        }
    }

    pub fn is_question(&self) -> bool {
        matches!(self, Sentence::SubjectQuestion { .. } | Sentence::WhenQuestion { .. })
    }

    /// Every noun phrase in the sentence, in token order.
    pub fn noun_phrases(&self) -> Vec<&Np> {
        let mut out = Vec::new();
        if let Sentence::Simple { subject, .. } | Sentence::WhenQuestion { subject, .. } = self {
            out.push(subject);
        }
        let vp = self.vp();
        out.extend(vp.patient.iter());
        out.extend(vp.recipient.iter());
        out.extend(vp.pps.iter().map(|(_, np)| np));
        out.sort_by_key(|np| np.at);
        out
    }
}

/// Parses normalized tokens into sentences. Every token must be known.
pub fn parse_discourse(tokens: &[String], lex: &Lexicon) -> Result<Vec<Sentence>, FrontendError> {
    if tokens.is_empty() {
        return Err(FrontendError::EmptyInput);
    }
    if let Some(t) = tokens.iter().find(|t| !lex.knows(t)) {
        return Err(FrontendError::UnknownToken(t.clone()));
    }
    let mut p = Parser { toks: tokens, at: 0, lex };
    let mut out = Vec::new();
    loop {
        out.push(p.sentence()?);
        if p.at == tokens.len() {
            return Ok(out);
        }
        if p.peek() == Some(".") {
            p.at += 1;
            if p.at == tokens.len() {
                return Ok(out);
            }
            continue;
        }
        return Err(p.fail("`.` or end of input"));
    }
}

struct Parser<'a> {
    toks: &'a [String],
    at: usize,
    lex: &'a Lexicon,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&'a str> {
        self.toks.get(self.at).map(String::as_str)
    }

    fn fail(&self, expected: &str) -> FrontendError {
        FrontendError::ParseFailure {
            position: self.at,
            expected: expected.to_string(),
        }
    }

    fn eat(&mut self, word: &str) -> bool {
        if self.peek() == Some(word) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    fn has(&self, pred: impl Fn(&Category) -> bool) -> bool {
        self.peek()
            .map(|t| self.lex.readings(t).iter().any(|r| pred(&r.entry.category)))
            .unwrap_or(false)
    }

    fn sentence(&mut self) -> Result<Sentence, FrontendError> {
        if self.has(|c| *c == Category::Determiner(DeterminerKind::Univ)) {
            self.at += 1;
            let restrictor = self.nominal()?;
            let vp = self.verb_phrase()?;
            return Ok(Sentence::Every { restrictor, vp });
        }
        if self.has(|c| *c == Category::Determiner(DeterminerKind::Neg)) {
            self.at += 1;
            let restrictor = self.nominal()?;
            let vp = self.verb_phrase()?;
            return Ok(Sentence::No { restrictor, vp });
        }
        if self.eat("who") || self.eat("what") {
            let wh = if self.toks[self.at - 1] == "who" {
                WhWord::Who
            } else {
                WhWord::What
            };
            let vp = self.verb_phrase()?;
            return Ok(Sentence::SubjectQuestion { wh, vp });
        }
        if self.eat("when") {
            let aux = if self.has(|c| *c == Category::Modal) {
                Auxiliary::Can
            } else if self.peek() == Some("does") {
                Auxiliary::None
            } else {
                return Err(self.fail("`can` or `does`"));
            };
            self.at += 1;
            let subject = self.noun_phrase(false)?;
            let vp = self.verb_and_args(aux, false)?;
            return Ok(Sentence::WhenQuestion { subject, vp });
        }
        let subject = self.noun_phrase(false)?;
        let vp = self.verb_phrase()?;
        Ok(Sentence::Simple { subject, vp })
    }

    fn starts_np(&self) -> bool {
        self.has(|c| {
            matches!(
                c,
                Category::ProperName(_)
                    | Category::Determiner(DeterminerKind::Indef)
                    | Category::Pronoun(_)
                    | Category::Adjective
                    | Category::Noun(_)
            )
        })
    }

    fn noun_phrase(&mut self, allow_weekday: bool) -> Result<Np, FrontendError> {
        let at = self.at;
        let Some(tok) = self.peek() else {
            return Err(self.fail("noun phrase"));
        };
        let readings = self.lex.readings(tok);
        if allow_weekday {
            if let Some(r) = readings.iter().find(|r| r.entry.category == Category::Weekday) {
                self.at += 1;
                return Ok(Np {
                    at,
                    phrase: NounPhrase::Weekday(r.entry.lemma.clone()),
                });
            }
        }
        for r in &readings {
            match r.entry.category {
                Category::ProperName(class) => {
                    self.at += 1;
                    return Ok(Np {
                        at,
                        phrase: NounPhrase::Proper {
                            name: r.entry.lemma.clone(),
                            class,
                        },
                    });
                }
                Category::Pronoun(agreement) => {
                    self.at += 1;
                    return Ok(Np {
                        at,
                        phrase: NounPhrase::Pronoun {
                            lemma: r.entry.lemma.clone(),
                            agreement,
                        },
                    });
                }
                Category::Determiner(DeterminerKind::Indef) => {
                    self.at += 1;
                    let n = self.nominal()?;
                    return Ok(Np {
                        at,
                        phrase: NounPhrase::Indefinite(n),
                    });
                }
                _ => {}
            }
        }
        if self.starts_np() {
            let n = self.nominal()?;
            return Ok(Np {
                at,
                phrase: NounPhrase::Bare(n),
            });
        }
        Err(self.fail("noun phrase"))
    }

    fn nominal(&mut self) -> Result<Nominal, FrontendError> {
        let mut adjectives = Vec::new();
        loop {
            let Some(tok) = self.peek() else {
                return Err(self.fail("noun"));
            };
            let readings = self.lex.readings(tok);
            if let Some(r) = readings.iter().find(|r| matches!(r.entry.category, Category::Noun(_))) {
                self.at += 1;
                return Ok(Nominal {
                    adjectives,
                    noun: r.entry.lemma.clone(),
                    sense: r.entry.sense,
                });
            }
            if let Some(r) = readings.iter().find(|r| r.entry.category == Category::Adjective) {
                adjectives.push((r.entry.lemma.clone(), r.entry.sense));
                self.at += 1;
                continue;
            }
            return Err(self.fail("adjective or noun"));
        }
    }

    fn verb_phrase(&mut self) -> Result<VerbPhrase, FrontendError> {
        if self.has(|c| *c == Category::Modal) {
            self.at += 1;
            let aux = if self.eat("not") {
                Auxiliary::CanNot
            } else {
                Auxiliary::Can
            };
            return self.verb_and_args(aux, false);
        }
        if self.eat("does") {
            if !self.eat("not") {
                return Err(self.fail("`not`"));
            }
            return self.verb_and_args(Auxiliary::DoesNot, false);
        }
        self.verb_and_args(Auxiliary::None, true)
    }

    fn verb_and_args(&mut self, aux: Auxiliary, finite: bool) -> Result<VerbPhrase, FrontendError> {
        let Some(tok) = self.peek() else {
            return Err(self.fail("verb"));
        };
        let readings = self.lex.readings(tok);
        let Some(reading) = readings
            .iter()
            .find(|r| matches!(r.entry.category, Category::Verb { .. }) && r.finite == finite)
        else {
            let form = if finite { "third-person verb" } else { "base-form verb" };
            return Err(self.fail(form));
        };
        let Category::Verb { valency, .. } = reading.entry.category else {
            unreachable!()
        };
        let verb = reading.entry.lemma.clone();
        self.at += 1;

        let mut objects = Vec::new();
        while objects.len() < 2 && self.starts_np() {
            objects.push(self.noun_phrase(false)?);
        }
        let mut recipient = None;
        if valency == Valency::Di && objects.len() == 1 && self.peek() == Some("to") {
            self.at += 1;
            recipient = Some(self.noun_phrase(false)?);
        }
        let mut objects = objects.into_iter();
        let patient = objects.next();
        if recipient.is_none() {
            recipient = objects.next();
        }
        let got = patient.is_some() as usize + recipient.is_some() as usize;
        if got != valency.arity() {
            return Err(FrontendError::ValencyMismatch {
                verb: verb.to_string(),
                expected: valency.arity(),
                got,
            });
        }

        let mut pps = Vec::new();
        while let Some(tok) = self.peek() {
            let Some(prep) = self
                .lex
                .readings(tok)
                .iter()
                .find(|r| r.entry.category == Category::Preposition)
                .map(|r| r.entry.lemma.clone())
            else {
                break;
            };
            self.at += 1;
            let np = self.noun_phrase(true)?;
            pps.push((prep, np));
        }
        if self.at < self.toks.len() && self.peek() != Some(".") {
            if self.starts_np() {
                return Err(FrontendError::ValencyMismatch {
                    verb: verb.to_string(),
                    expected: valency.arity(),
                    got: got + 1,
                });
            }
            return Err(self.fail("preposition or end of sentence"));
        }
        Ok(VerbPhrase {
            aux,
            verb,
            sense: reading.entry.sense,
            valency,
            patient,
            recipient,
            pps,
        })
    }
}
