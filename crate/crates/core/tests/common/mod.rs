//! Generators and brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use nl2cnl::drs::{lemma, referent};
use nl2cnl::frontend::{Category, Lexicon, Valency};
use nl2cnl::logic::{BinaryConstraint, CspInstance, FiniteModel, Relation, UnaryConstraint};
use nl2cnl::{Condition, Drs, EntityClass, Pos, Referent};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn data(name: &str) -> String {
    std::fs::read_to_string(format!("{}/data/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

pub fn fixture(name: &str) -> String {
    std::fs::read_to_string(format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

// ------------------------------------------------------------ random DRSs

#[derive(Debug, Clone, Copy)]
pub struct DrsShape {
    pub depth: usize,
    pub max_referents: usize,
    pub max_conditions: usize,
    pub pos: bool,
    pub whq: bool,
    pub eq: bool,
    /// Draw names from a small pool regardless of scope (may be improper).
    pub sloppy: bool,
}

impl DrsShape {
    /// Proper DRSs over the small logic vocabulary, without Pos or Whq.
    pub fn logic(depth: usize) -> Self {
        DrsShape {
            depth,
            max_referents: 2,
            max_conditions: 3,
            pos: false,
            whq: false,
            eq: true,
            sloppy: false,
        }
    }

    /// Any condition kind; proper.
    pub fn full(depth: usize) -> Self {
        DrsShape {
            pos: true,
            whq: true,
            ..DrsShape::logic(depth)
        }
    }
}

/// Unary predicate names in FOL for the logic vocabulary.
pub const UNARY: [&str; 3] = ["p_n", "q_v", "named_per_k"];
pub const BINARY: [&str; 2] = ["r", "s"];

struct Gen<'a, R: Rng> {
    rng: &'a mut R,
    shape: DrsShape,
    next: usize,
}

impl<R: Rng> Gen<'_, R> {
    fn fresh(&mut self) -> Referent {
        self.next += 1;
        if self.next.is_multiple_of(3) {
            referent(&format!("e{}", self.next))
        } else {
            referent(&format!("x{}", self.next))
        }
    }

    fn pick(&mut self, scope: &[Referent]) -> Referent {
        if self.shape.sloppy {
            let pool = ["x1", "x2", "e3", "y"];
            referent(pool.choose(self.rng).unwrap())
        } else {
            scope.choose(self.rng).unwrap().clone()
        }
    }

    fn atomic(&mut self, scope: &[Referent]) -> Condition {
        let x = self.pick(scope);
        let y = self.pick(scope);
        let kinds = if self.shape.eq { 4 } else { 3 };
        match self.rng.gen_range(0..kinds) {
            0 => {
                let (l, p) = if self.rng.gen_bool(0.5) { ("p", Pos::Noun) } else { ("q", Pos::Verb) };
                let (l, p, sense) = if self.shape.sloppy {
                    let lemmas = ["p", "q", "new_york", "dog"];
                    (
                        *lemmas.choose(self.rng).unwrap(),
                        *Pos::ALL.choose(self.rng).unwrap(),
                        *[0, 1, 42, 9999].choose(self.rng).unwrap(),
                    )
                } else {
                    (l, p, 0)
                };
                Condition::pred(x, lemma(l), p, sense)
            }
            1 => {
                let class = if self.shape.sloppy {
                    *EntityClass::ALL.choose(self.rng).unwrap()
                } else {
                    EntityClass::Per
                };
                Condition::named(x, lemma("k"), class)
            }
            2 => Condition::rel(x, y, lemma(if self.rng.gen_bool(0.5) { "r" } else { "s" })),
            _ => Condition::Eq(x, y),
        }
    }

    fn boxed(&mut self, depth: usize, scope: &mut Vec<Referent>) -> Drs {
        let n = self.rng.gen_range(0..=self.shape.max_referents);
        let mut refs: Vec<Referent> = (0..n).map(|_| self.fresh()).collect();
        if self.shape.sloppy {
            refs = refs.into_iter().map(|_| self.pick(&[])).collect::<BTreeSet<_>>().into_iter().collect();
        }
        let mark = scope.len();
        scope.extend(refs.iter().cloned());
        let m = self.rng.gen_range(0..=self.shape.max_conditions);
        let mut conds = Vec::new();
        for _ in 0..m {
            let complex = depth > 0 && self.rng.gen_bool(0.35);
            if !complex {
                if scope.is_empty() && !self.shape.sloppy {
                    continue;
                }
                conds.push(self.atomic(scope));
                continue;
            }
            let kinds = 3 + usize::from(self.shape.pos) + usize::from(self.shape.whq);
            let c = match self.rng.gen_range(0..kinds) {
                0 => Condition::Not(self.boxed(depth - 1, scope)),
                1 => {
                    let k1 = self.boxed(depth - 1, scope);
                    let inner = scope.len();
                    scope.extend(k1.referents().iter().cloned());
                    let k2 = self.boxed(depth - 1, scope);
                    scope.truncate(inner);
                    Condition::Imp(k1, k2)
                }
                2 => Condition::Or(self.boxed(depth - 1, scope), self.boxed(depth - 1, scope)),
                3 if self.shape.pos => Condition::Pos(self.boxed(depth - 1, scope)),
                _ => {
                    let x = self.fresh();
                    scope.push(x.clone());
                    let k = self.boxed(depth - 1, scope);
                    scope.pop();
                    Condition::Whq(x, k)
                }
            };
            conds.push(c);
        }
        scope.truncate(mark);
        Drs::new(refs, conds).unwrap()
    }
}

/// A random DRS of nesting depth at most `shape.depth`.
pub fn random_drs<R: Rng>(rng: &mut R, shape: DrsShape) -> Drs {
    let mut g = Gen { rng, shape, next: 0 };
    g.boxed(shape.depth, &mut Vec::new())
}

/// Proptest strategy wrapping [`random_drs`].
pub fn arb_drs(shape: DrsShape) -> impl Strategy<Value = Drs> {
    any::<u64>().prop_map(move |seed| random_drs(&mut rng(seed), shape))
}

/// Consistent renaming of every referent name in `d`.
pub fn rename_all(d: &Drs, f: impl Fn(&str) -> String) -> Drs {
    d.rename(&|r: &Referent| referent(&f(r.as_str())))
}

// ------------------------------------------------------------ scope oracle

/// Free referents by explicit enumeration of accessible boxes: a use is
/// bound iff some box on its accessibility chain declares it.
pub fn scope_free(d: &Drs) -> BTreeSet<Referent> {
    fn uses(c: &Condition) -> Vec<&Referent> {
        match c {
            Condition::Pred { referent, .. } | Condition::Named { referent, .. } => vec![referent],
            Condition::Rel { from, to, .. } => vec![from, to],
            Condition::Eq(a, b) => vec![a, b],
            _ => vec![],
        }
    }
    // `chain` lists the referent sets of the accessible boxes.
    fn go<'a>(d: &'a Drs, chain: &mut Vec<Vec<&'a Referent>>, free: &mut BTreeSet<Referent>) {
        chain.push(d.referents().iter().collect());
        for c in d.conditions() {
            for u in uses(c) {
                if !chain.iter().any(|b| b.contains(&u)) {
                    free.insert(u.clone());
                }
            }
            match c {
                Condition::Not(k) | Condition::Pos(k) => go(k, chain, free),
                Condition::Or(a, b) => {
                    go(a, chain, free);
                    go(b, chain, free);
                }
                Condition::Imp(a, b) => {
                    go(a, chain, free);
                    chain.push(a.referents().iter().collect());
                    go(b, chain, free);
                    chain.pop();
                }
                Condition::Whq(x, k) => {
                    chain.push(vec![x]);
                    go(k, chain, free);
                    chain.pop();
                }
                _ => {}
            }
        }
        chain.pop();
    }
    let mut free = BTreeSet::new();
    go(d, &mut Vec::new(), &mut free);
    free
}

// ------------------------------------------------------------ models

pub fn random_model<R: Rng>(rng: &mut R, size: usize) -> FiniteModel {
    let domain: Vec<String> = ["a", "b", "c"][..size].iter().map(|s| s.to_string()).collect();
    let mut relations = BTreeMap::new();
    for name in UNARY {
        let tuples = domain.iter().filter(|_| rng.gen_bool(0.5)).map(|c| vec![c.clone()]).collect();
        relations.insert(name.to_string(), Relation { arity: 1, tuples });
    }
    for name in BINARY {
        let mut tuples = BTreeSet::new();
        for a in &domain {
            for b in &domain {
                if rng.gen_bool(0.4) {
                    tuples.insert(vec![a.clone(), b.clone()]);
                }
            }
        }
        relations.insert(name.to_string(), Relation { arity: 2, tuples });
    }
    FiniteModel::new(domain, relations).unwrap()
}

// ------------------------------------------------------------ DRS semantics oracle

type Embedding = BTreeMap<Referent, String>;

fn holds(m: &FiniteModel, pred: &str, args: &[&String]) -> bool {
    m.extension(pred)
        .any(|t| t.len() == args.len() && t.iter().zip(args).all(|(a, b)| a == *b))
}

/// Every extension of `f` to the referents of `k`.
fn extensions(refs: &[Referent], f: &Embedding, domain: &[String]) -> Vec<Embedding> {
    let mut out = vec![f.clone()];
    for r in refs {
        out = out
            .into_iter()
            .flat_map(|g| {
                domain.iter().map(move |d| {
                    let mut h = g.clone();
                    h.insert(r.clone(), d.clone());
                    h
                })
            })
            .collect();
    }
    out
}

fn satisfies(k: &Drs, m: &FiniteModel, f: &Embedding) -> bool {
    k.conditions().iter().all(|c| condition(c, m, f))
}

fn verifies(k: &Drs, m: &FiniteModel, f: &Embedding) -> bool {
    extensions(k.referents(), f, m.domain()).iter().any(|g| satisfies(k, m, g))
}

fn condition(c: &Condition, m: &FiniteModel, f: &Embedding) -> bool {
    match c {
        Condition::Pred {
            referent, lemma, pos, ..
        } => holds(m, &format!("{}_{}", lemma.as_str(), pos.tag()), &[&f[referent]]),
        Condition::Named { referent, name, class } => {
            holds(m, &format!("named_{}_{}", class.tag(), name.as_str()), &[&f[referent]])
        }
        Condition::Rel { from, to, label } => holds(m, label.as_str(), &[&f[from], &f[to]]),
        Condition::Eq(a, b) => f[a] == f[b],
        Condition::Not(k) => !verifies(k, m, f),
        Condition::Or(a, b) => verifies(a, m, f) || verifies(b, m, f),
        Condition::Imp(a, b) => extensions(a.referents(), f, m.domain())
            .iter()
            .filter(|g| satisfies(a, m, g))
            .all(|g| verifies(b, m, g)),
        Condition::Pos(_) | Condition::Whq(..) => panic!("oracle covers extensional conditions only"),
    }
}

/// Truth of a proper DRS in `m` by direct embedding semantics.
pub fn drs_true(d: &Drs, m: &FiniteModel) -> bool {
    verifies(d, m, &Embedding::new())
}

// ------------------------------------------------------------ CSP

pub fn random_csp<R: Rng>(rng: &mut R) -> CspInstance {
    let values = ["c0", "c1", "c2", "c3"];
    let n = rng.gen_range(0..=6);
    let vars: Vec<(String, Vec<String>)> = (0..n)
        .map(|i| {
            let size = rng.gen_range(1..=4);
            let mut d: Vec<String> = values.choose_multiple(rng, size).map(|s| s.to_string()).collect();
            d.sort();
            (format!("v{i}"), d)
        })
        .collect();
    let subset = |rng: &mut R| -> BTreeSet<String> {
        values.iter().filter(|_| rng.gen_bool(0.6)).map(|s| s.to_string()).collect()
    };
    let mut unary = Vec::new();
    let mut binary = Vec::new();
    if n > 0 {
        for _ in 0..rng.gen_range(0..=2) {
            let v = rng.gen_range(0..n);
            unary.push(UnaryConstraint {
                var: format!("v{v}"),
                name: "u".into(),
                allowed: subset(rng),
            });
        }
        for _ in 0..rng.gen_range(0..=8) {
            let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
            let mut allowed = BTreeSet::new();
            for x in values {
                for y in values {
                    if rng.gen_bool(0.5) {
                        allowed.insert((x.to_string(), y.to_string()));
                    }
                }
            }
            binary.push(BinaryConstraint {
                first: format!("v{a}"),
                second: format!("v{b}"),
                name: "b".into(),
                allowed,
            });
        }
    }
    CspInstance::new(vars, unary, binary).unwrap()
}

/// All assignments by filtering the cartesian product of the domains.
pub fn brute_force_csp(c: &CspInstance) -> Vec<Vec<(String, String)>> {
    let mut all: Vec<Vec<(String, String)>> = vec![vec![]];
    for (v, d) in c.variables() {
        all = all
            .into_iter()
            .flat_map(|a| {
                d.iter().map(move |x| {
                    let mut b = a.clone();
                    b.push((v.clone(), x.clone()));
                    b
                })
            })
            .collect();
    }
    all.retain(|a| {
        let val = |v: &str| a.iter().find(|(n, _)| n == v).map(|(_, x)| x.clone()).unwrap();
        c.unary().iter().all(|u| u.allowed.contains(&val(&u.var)))
            && c.binary().iter().all(|b| b.allowed.contains(&(val(&b.first), val(&b.second))))
    });
    all
}

// ------------------------------------------------------------ sentences

fn surfaces(lex: &Lexicon, f: impl Fn(&Category) -> bool) -> Vec<String> {
    let mut v: Vec<String> = lex
        .entries()
        .iter()
        .filter(|e| f(&e.category))
        .map(|e| e.surface.clone())
        .collect();
    v.sort();
    v.dedup();
    v
}

/// Random sentences of the fragment.
pub struct SentenceGen {
    names: Vec<String>,
    nouns: Vec<String>,
    adjectives: Vec<String>,
    verbs: Vec<(String, String, Valency)>,
    preps: Vec<String>,
    weekdays: Vec<String>,
    pub pronouns: bool,
}

impl SentenceGen {
    pub fn new(lex: &Lexicon) -> Self {
        let verbs = lex
            .entries()
            .iter()
            .filter_map(|e| match &e.category {
                Category::Verb { valency, third_singular } => Some((e.surface.clone(), third_singular.clone(), *valency)),
                _ => None,
            })
            .collect();
        SentenceGen {
            names: surfaces(lex, |c| matches!(c, Category::ProperName(_))),
            nouns: surfaces(lex, |c| matches!(c, Category::Noun(_))),
            adjectives: surfaces(lex, |c| *c == Category::Adjective),
            verbs,
            preps: surfaces(lex, |c| *c == Category::Preposition)
                .into_iter()
                .filter(|p| p != "to")
                .collect(),
            weekdays: surfaces(lex, |c| *c == Category::Weekday),
            pronouns: false,
        }
    }

    fn nominal<R: Rng>(&self, rng: &mut R) -> String {
        let mut parts: Vec<&str> = Vec::new();
        for _ in 0..rng.gen_range(0..=2) {
            parts.push(self.adjectives.choose(rng).unwrap());
        }
        parts.push(self.nouns.choose(rng).unwrap());
        parts.join(" ")
    }

    fn np<R: Rng>(&self, rng: &mut R) -> String {
        match rng.gen_range(0..4) {
            0 => capitalize(self.names.choose(rng).unwrap()),
            1 if self.pronouns => ["he", "she", "it", "him", "her"].choose(rng).unwrap().to_string(),
            _ => {
                let n = self.nominal(rng);
                let article = if n.starts_with(['a', 'e', 'i', 'o', 'u']) { "an" } else { "a" };
                format!("{article} {n}")
            }
        }
    }

    /// One sentence (no final period), optionally quantified or negated.
    pub fn sentence<R: Rng>(&self, rng: &mut R) -> String {
        let (subject, quantified) = match rng.gen_range(0..5) {
            0 => (format!("every {}", self.nominal(rng)), true),
            1 => (format!("no {}", self.nominal(rng)), true),
            _ => (self.np(rng), false),
        };
        let (base, third, valency) = self.verbs.choose(rng).unwrap();
        let aux = if quantified { 0 } else { rng.gen_range(0..4) };
        let verb = match aux {
            0 => third.clone(),
            1 => format!("can {base}"),
            2 => format!("can not {base}"),
            _ => format!("does not {base}"),
        };
        let mut words = vec![subject, verb];
        match valency {
            Valency::Intrans => {}
            Valency::Mono => words.push(self.np(rng)),
            Valency::Di => {
                words.push(self.np(rng));
                words.push("to".into());
                words.push(self.np(rng));
            }
        }
        for _ in 0..rng.gen_range(0..=1) {
            let prep = self.preps.choose(rng).unwrap();
            if prep == "on" && rng.gen_bool(0.5) {
                words.push(format!("on {}", capitalize(self.weekdays.choose(rng).unwrap())));
            } else {
                words.push(format!("{prep} {}", self.np(rng)));
            }
        }
        capitalize(&words.join(" "))
    }
}

pub fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

// ------------------------------------------------------------ edit distance

/// Every string at optimal-string-alignment distance exactly 1 from `w`
/// over the lowercase alphabet.
pub fn edit1_neighbours(w: &str) -> BTreeSet<String> {
    let chars: Vec<char> = w.chars().collect();
    let alphabet = 'a'..='z';
    let mut out = BTreeSet::new();
    for i in 0..chars.len() {
        let mut v = chars.clone();
        v.remove(i);
        out.insert(v.iter().collect());
        for c in alphabet.clone() {
            let mut v = chars.clone();
            v[i] = c;
            out.insert(v.iter().collect());
        }
        if i + 1 < chars.len() {
            let mut v = chars.clone();
            v.swap(i, i + 1);
            out.insert(v.iter().collect());
        }
    }
    for i in 0..=chars.len() {
        for c in alphabet.clone() {
            let mut v = chars.clone();
            v.insert(i, c);
            out.insert(v.iter().collect());
        }
    }
    out.remove(w);
    out
}
