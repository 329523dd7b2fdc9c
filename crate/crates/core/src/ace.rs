//! Verbalization of DRSs as ACE-subset sentences, conformance checking and
//! paraphrase round trips.
//!
//! The ACE subset is the fragment grammar of [`crate::frontend`] without
//! pronouns, bare noun phrases and questions, written as one capitalized
//! sentence with a final period. The constraint table is
//! [`CONSTRAINT_TABLE`].
//!
//! ```
//! use nl2cnl::ace::{check_ace, verbalize};
//! use nl2cnl::frontend::Lexicon;
//! use nl2cnl::text::parse_drs;
//!
//! let lex = Lexicon::shipped();
//! let d = parse_drs("drs([x1,e1],[pred(x1,dog,n,0),pred(e1,bark,v,0),rel(e1,x1,agent)])").unwrap();
//! let text = verbalize(&d, &lex).unwrap();
//! assert_eq!(text, "A dog barks.");
//! assert!(check_ace(&text, &lex).conformant);
//! ```

use serde::Serialize;
use thiserror::Error;

use crate::drs::{alpha_equivalent, Condition, Drs, Pos, Referent, PRONOUN_SENSE};
use crate::frontend::grammar::NounPhrase;
use crate::frontend::{analyze, normalize, parse_discourse, tokenize, Category, FrontendError, Lexicon, Valency};

/// Human-readable table of the conformance constraints.
pub const CONSTRAINT_TABLE: &str = include_str!("../data/ace_constraints.md");

/// Constraint names reported by [`check_ace`].
pub const CONSTRAINTS: [&str; 12] = [
    "empty-input",
    "missing-period",
    "multiple-sentences",
    "question",
    "contraction",
    "capitalization",
    "unknown-word",
    "plural-noun",
    "pronoun",
    "bare-noun-phrase",
    "parse-failure",
    "valency-mismatch",
];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AceError {
    #[error("not verbalizable: {0}")]
    NotVerbalizable(String),
}

fn nv<T>(reason: impl Into<String>) -> Result<T, AceError> {
    Err(AceError::NotVerbalizable(reason.into()))
}

// ------------------------------------------------------------ verbalize

/// A box plus bookkeeping of which conditions and referents were realized.
struct Cover<'a> {
    d: &'a Drs,
    conds: Vec<bool>,
    refs: Vec<bool>,
}

impl<'a> Cover<'a> {
    fn new(d: &'a Drs) -> Self {
        Cover {
            d,
            conds: vec![false; d.conditions().len()],
            refs: vec![false; d.referents().len()],
        }
    }

    fn take_ref(&mut self, r: &Referent) -> bool {
        match self.d.referents().iter().position(|x| x == r) {
            Some(i) if !self.refs[i] => {
                self.refs[i] = true;
                true
            }
            _ => false,
        }
    }

    fn finish(&self) -> Result<(), AceError> {
        if let Some(i) = self.conds.iter().position(|u| !u) {
            return nv(format!(
                "unrealized condition {}",
                crate::text::serialize_condition(&self.d.conditions()[i])
            ));
        }
        if let Some(i) = self.refs.iter().position(|u| !u) {
            return nv(format!("unrealized referent {}", self.d.referents()[i]));
        }
        Ok(())
    }
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

fn article(first: &str) -> &'static str {
    if first.starts_with(['a', 'e', 'i', 'o', 'u']) {
        "an"
    } else {
        "a"
    }
}

fn check_sense(lex: &Lexicon, word: &str, sense: u64, entry_sense: Option<u64>) -> Result<(), AceError> {
    match entry_sense {
        Some(s) if s == sense => Ok(()),
        Some(_) => nv(format!("sense {sense} of `{word}` is not in the lexicon")),
        None => {
            let _ = lex;
            nv(format!("`{word}` is not in the lexicon"))
        }
    }
}

/// Adjectives plus noun for `x`, consuming its predicates in `cov`.
fn nominal(x: &Referent, cov: &mut Cover<'_>, lex: &Lexicon) -> Result<String, AceError> {
    let mut noun = None;
    let mut adjs = Vec::new();
    for (i, c) in cov.d.conditions().iter().enumerate() {
        if cov.conds[i] {
            continue;
        }
        if let Condition::Pred {
            referent,
            lemma,
            pos,
            sense,
        } = c
        {
            if referent != x {
                continue;
            }
            match pos {
                Pos::Noun => {
                    if *sense == PRONOUN_SENSE {
                        return nv("pronoun");
                    }
                    if noun.is_some() {
                        return nv(format!("two nouns on {x}"));
                    }
                    let e = lex.noun(lemma.as_str());
                    check_sense(lex, lemma.as_str(), *sense, e.map(|e| e.sense))?;
                    noun = Some(e.unwrap().surface.clone());
                }
                Pos::Adjective => {
                    let e = lex.adjective(lemma.as_str());
                    check_sense(lex, lemma.as_str(), *sense, e.map(|e| e.sense))?;
                    adjs.push(e.unwrap().surface.clone());
                }
                _ => continue,
            }
            cov.conds[i] = true;
        }
    }
    let Some(noun) = noun else {
        return nv(format!("no noun for {x}"));
    };
    adjs.push(noun);
    Ok(adjs.join(" "))
}

/// Noun phrase for `x` declared in `cov`'s box.
fn noun_phrase(x: &Referent, cov: &mut Cover<'_>, lex: &Lexicon, in_pp: bool) -> Result<String, AceError> {
    if !cov.take_ref(x) {
        return nv(format!("{x} is not introduced where it is used"));
    }
    let conds = cov.d.conditions();
    let named = conds
        .iter()
        .enumerate()
        .find(|(i, c)| !cov.conds[*i] && matches!(c, Condition::Named { referent, .. } if referent == x));
    if let Some((i, Condition::Named { name, class, .. })) = named {
        match lex.proper_name(name.as_str()) {
            Some(e) if e.category == Category::ProperName(*class) => {}
            _ => return nv(format!("proper name `{name}` is not in the lexicon")),
        }
        cov.conds[i] = true;
        return Ok(capitalize(name.as_str()));
    }
    let weekday = conds.iter().enumerate().find(|(i, c)| {
        !cov.conds[*i]
            && matches!(c, Condition::Pred { referent, lemma, pos: Pos::Noun, sense: 0 }
                if referent == x && lex.is_weekday(lemma.as_str()))
    });
    if let Some((i, Condition::Pred { lemma, .. })) = weekday {
        if !in_pp {
            return nv("weekday outside a prepositional phrase");
        }
        cov.conds[i] = true;
        return Ok(capitalize(lemma.as_str()));
    }
    let n = nominal(x, cov, lex)?;
    Ok(format!("{} {n}", article(&n)))
}

#[derive(Clone, Copy)]
enum Aux {
    None,
    Can,
    CanNot,
    DoesNot,
}

/// Realizes the single event in `cov`'s box; returns the agent and the verb
/// phrase.
fn event_phrase(cov: &mut Cover<'_>, aux: Aux, lex: &Lexicon) -> Result<(Referent, String), AceError> {
    let conds = cov.d.conditions();
    let events: Vec<usize> = conds
        .iter()
        .enumerate()
        .filter(|(_, c)| matches!(c, Condition::Pred { pos: Pos::Verb, .. }))
        .map(|(i, _)| i)
        .collect();
    let [ei] = events[..] else {
        return nv(format!("expected one event per box, found {}", events.len()));
    };
    let Condition::Pred {
        referent: e,
        lemma: verb,
        sense,
        ..
    } = &conds[ei]
    else {
        unreachable!()
    };
    cov.conds[ei] = true;
    if !cov.take_ref(e) {
        return nv(format!("event {e} is not introduced in its box"));
    }
    let entry = lex.verb(verb.as_str());
    check_sense(lex, verb.as_str(), *sense, entry.map(|e| e.sense))?;
    let entry = entry.unwrap();
    let Category::Verb {
        valency,
        third_singular,
    } = &entry.category
    else {
        unreachable!()
    };

    let mut agent = None;
    let mut patient = None;
    let mut recipient = None;
    let mut pps = Vec::new();
    for (i, c) in conds.iter().enumerate() {
        if let Condition::Rel { from, to, label } = c {
            if from != e {
                continue;
            }
            cov.conds[i] = true;
            let slot = match label.as_str() {
                "agent" => &mut agent,
                "patient" => &mut patient,
                "recipient" => &mut recipient,
                _ => {
                    if lex.preposition(label.as_str()).is_none() {
                        return nv(format!("unknown relation `{label}`"));
                    }
                    pps.push((label.clone(), to.clone()));
                    continue;
                }
            };
            if slot.replace(to.clone()).is_some() {
                return nv(format!("repeated `{label}` edge"));
            }
        }
    }
    let Some(agent) = agent else {
        return nv("event without agent");
    };
    let got = patient.is_some() as usize + recipient.is_some() as usize;
    let well_formed = match valency {
        Valency::Intrans => got == 0,
        Valency::Mono => patient.is_some() && recipient.is_none(),
        Valency::Di => patient.is_some() && recipient.is_some(),
    };
    if !well_formed {
        return nv(format!("verb `{verb}` takes {} object(s), got {got}", valency.arity()));
    }

    let mut words = vec![match aux {
        Aux::None => third_singular.clone(),
        Aux::Can => format!("can {}", entry.surface),
        Aux::CanNot => format!("can not {}", entry.surface),
        Aux::DoesNot => format!("does not {}", entry.surface),
    }];
    if let Some(p) = &patient {
        words.push(noun_phrase(p, cov, lex, false)?);
    }
    if let Some(r) = &recipient {
        words.push(format!("to {}", noun_phrase(r, cov, lex, false)?));
    }
    for (prep, y) in &pps {
        words.push(format!("{prep} {}", noun_phrase(y, cov, lex, true)?));
    }
    Ok((agent, words.join(" ")))
}

/// Finds the verb phrase of a clause box: an event directly in the box, or
/// one modal/negation wrapper around it.
fn clause(cov: &mut Cover<'_>, lex: &Lexicon) -> Result<(Referent, String), AceError> {
    let conds = cov.d.conditions();
    if conds.iter().any(|c| matches!(c, Condition::Pred { pos: Pos::Verb, .. })) {
        return event_phrase(cov, Aux::None, lex);
    }
    let wrappers: Vec<usize> = conds
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.is_atomic())
        .map(|(i, _)| i)
        .collect();
    let [wi] = wrappers[..] else {
        return nv("expected exactly one event");
    };
    cov.conds[wi] = true;
    let (k, aux) = match &conds[wi] {
        Condition::Pos(k) => (k, Aux::Can),
        Condition::Not(k) => match k.conditions() {
            [Condition::Pos(inner)] if k.referents().is_empty() => (inner, Aux::CanNot),
            _ => (k, Aux::DoesNot),
        },
        other => return nv(operator_reason(other)),
    };
    let mut inner = Cover::new(k);
    let out = event_phrase(&mut inner, aux, lex)?;
    inner.finish()?;
    Ok(out)
}

fn operator_reason(c: &Condition) -> &'static str {
    match c {
        Condition::Or(..) => "or-unsupported",
        Condition::Whq(..) => "question",
        Condition::Imp(..) => "nested implication",
        Condition::Eq(..) => "equality",
        _ => "unsupported structure",
    }
}

fn scan_unsupported(d: &Drs) -> Result<(), AceError> {
    for (_, k) in d.boxes() {
        for c in k.conditions() {
            match c {
                Condition::Or(..) | Condition::Whq(..) | Condition::Eq(..) => return nv(operator_reason(c)),
                _ => {}
            }
        }
    }
    Ok(())
}

/// Realizes `d` as one ACE-subset sentence.
pub fn verbalize(d: &Drs, lex: &Lexicon) -> Result<String, AceError> {
    if !d.is_proper() {
        return nv("improper DRS");
    }
    scan_unsupported(d)?;
    let body = match (d.referents(), d.conditions()) {
        ([], [Condition::Imp(a, k)]) => {
            let [x] = a.referents() else {
                return nv("universal restrictor must introduce one referent");
            };
            let mut ante = Cover::new(a);
            ante.take_ref(x);
            let n = nominal(x, &mut ante, lex)?;
            ante.finish()?;
            let mut cons = Cover::new(k);
            let (agent, vp) = clause(&mut cons, lex)?;
            cons.finish()?;
            if &agent != x {
                return nv("universal restrictor is not the agent");
            }
            format!("every {n} {vp}")
        }
        ([], [Condition::Not(k)]) if declares_agent(k) => {
            let mut scope = Cover::new(k);
            let (agent, vp) = clause(&mut scope, lex)?;
            if !scope.take_ref(&agent) {
                return nv("negated quantifier without subject");
            }
            let n = nominal(&agent, &mut scope, lex)?;
            scope.finish()?;
            format!("no {n} {vp}")
        }
        _ => {
            let mut top = Cover::new(d);
            let (agent, vp) = clause(&mut top, lex)?;
            let subject = noun_phrase(&agent, &mut top, lex, false)?;
            top.finish()?;
            format!("{subject} {vp}")
        }
    };
    Ok(format!("{}.", capitalize(&body)))
}

/// True if the agent of the (possibly wrapped) event in `k` is declared in `k`.
fn declares_agent(k: &Drs) -> bool {
    k.boxes().iter().any(|(_, b)| {
        b.conditions().iter().any(|c| {
            matches!(c, Condition::Rel { to, label, .. } if label.as_str() == "agent" && k.declares(to))
        })
    })
}

// ------------------------------------------------------------ check_ace

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    /// Token index in the raw text (the period counts as a token).
    pub position: usize,
    pub constraint: &'static str,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AceSentence {
    pub text: String,
    pub conformant: bool,
    pub violations: Vec<Violation>,
}

/// Checks `text` against the ACE subset, reporting every violated constraint.
pub fn check_ace(text: &str, lex: &Lexicon) -> AceSentence {
    let mut v = Vec::new();
    let mut push = |position: usize, constraint: &'static str| v.push(Violation { position, constraint });
    let tokens = tokenize(text);
    if tokens.is_empty() {
        push(0, "empty-input");
        return finish(text, v);
    }
    if text.contains('?') {
        push(tokens.len(), "question");
    }
    if tokens.last().map(String::as_str) != Some(".") {
        push(tokens.len(), "missing-period");
    }
    for (i, t) in tokens.iter().enumerate() {
        if t == "." && i + 1 < tokens.len() {
            push(i, "multiple-sentences");
        }
    }

    let mut parse_tokens = Vec::new();
    let mut parsable = true;
    for (i, raw) in tokens.iter().enumerate() {
        if raw == "." {
            if i + 1 < tokens.len() {
                parse_tokens.push(raw.clone());
            }
            continue;
        }
        let low = raw.to_lowercase();
        if raw.contains('\'') {
            push(i, "contraction");
            parsable = false;
            continue;
        }
        let mut word = low.clone();
        if !lex.knows(&low) {
            match low.strip_suffix('s').filter(|s| lex.is_weekday(s) || lex.noun(s).is_some()) {
                Some(stem) => {
                    push(i, "plural-noun");
                    word = stem.to_string();
                }
                None => {
                    push(i, "unknown-word");
                    parsable = false;
                    continue;
                }
            }
        }
        let sentence_start = i == 0 || tokens[i - 1] == ".";
        let proper = lex.is_proper_name(&word) || lex.is_weekday(&word);
        let upper = raw.chars().next().is_some_and(char::is_uppercase);
        let rest_lower = raw.chars().skip(1).all(|c| !c.is_uppercase());
        let ok_case = if proper || sentence_start {
            upper && rest_lower
        } else {
            *raw == low
        };
        if !ok_case {
            push(i, "capitalization");
        }
        if lex.readings(&word).iter().any(|r| matches!(r.entry.category, Category::Pronoun(_))) {
            push(i, "pronoun");
        }
        if ["who", "what", "when"].contains(&word.as_str()) {
            push(i, "question");
        }
        parse_tokens.push(word);
    }

    if parsable && !parse_tokens.is_empty() {
        // Map parser positions back to raw token positions.
        let raw_pos: Vec<usize> = tokens
            .iter()
            .enumerate()
            .filter(|(i, t)| *t != "." || *i + 1 < tokens.len())
            .map(|(i, _)| i)
            .collect();
        let at = |p: usize| raw_pos.get(p).copied().unwrap_or(tokens.len());
        match parse_discourse(&parse_tokens, lex) {
            Ok(sentences) => {
                for s in &sentences {
                    for np in s.noun_phrases() {
                        if matches!(np.phrase, NounPhrase::Bare(_)) {
                            push(at(np.at), "bare-noun-phrase");
                        }
                    }
                }
            }
            Err(FrontendError::ValencyMismatch { .. }) => push(tokens.len(), "valency-mismatch"),
            Err(FrontendError::ParseFailure { position, .. }) => push(at(position), "parse-failure"),
            Err(_) => push(0, "parse-failure"),
        }
    }
    finish(text, v)
}

fn finish(text: &str, mut v: Vec<Violation>) -> AceSentence {
    v.sort_by_key(|x| (x.position, x.constraint));
    v.dedup();
    AceSentence {
        text: text.to_string(),
        conformant: v.is_empty(),
        violations: v,
    }
}

// ------------------------------------------------------------ round trip

fn strip_eq(d: &Drs) -> Drs {
    let conds = d
        .conditions()
        .iter()
        .filter(|c| !matches!(c, Condition::Eq(..)))
        .map(|c| match c {
            Condition::Not(k) => Condition::Not(strip_eq(k)),
            Condition::Pos(k) => Condition::Pos(strip_eq(k)),
            Condition::Imp(a, k) => Condition::Imp(strip_eq(a), strip_eq(k)),
            Condition::Or(a, k) => Condition::Or(strip_eq(a), strip_eq(k)),
            Condition::Whq(x, k) => Condition::Whq(x.clone(), strip_eq(k)),
            other => other.clone(),
        })
        .collect();
    Drs::new(d.referents().to_vec(), conds).expect("referents unchanged")
}

/// Verbalizes `d`, re-analyzes the text, and compares up to renaming.
pub fn roundtrip_check(d: &Drs, lex: &Lexicon) -> Result<bool, AceError> {
    let text = verbalize(d, lex)?;
    let Ok((tokens, _)) = normalize(&text, lex) else {
        return Ok(false);
    };
    let Ok((back, _)) = analyze(&tokens, lex) else {
        return Ok(false);
    };
    let (a, b) = (strip_eq(d), strip_eq(&back));
    Ok(a.is_proper() && b.is_proper() && alpha_equivalent(&a, &b).unwrap_or(false))
}
