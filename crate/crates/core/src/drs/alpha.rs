//! Alpha-equivalence: equality up to a bijective renaming of referents, with
//! condition lists compared as multisets and referent lists as sets.

use std::collections::HashMap;

use super::{Condition, Drs, DrsError, Referent};

pub fn alpha_equivalent(a: &Drs, b: &Drs) -> Result<bool, DrsError> {
    a.ensure_proper()?;
    b.ensure_proper()?;
    let mut found = false;
    match_box(a, b, &mut Bijection::default(), &mut |_| {
        found = true;
        true
    });
    Ok(found)
}

#[derive(Clone, Default)]
struct Bijection {
    fwd: HashMap<Referent, Referent>,
    back: HashMap<Referent, Referent>,
}

impl Bijection {
    fn bind(&mut self, a: &Referent, b: &Referent) -> bool {
        match (self.fwd.get(a), self.back.get(b)) {
            (Some(x), Some(y)) => x == b && y == a,
            (None, None) => {
                self.fwd.insert(a.clone(), b.clone());
                self.back.insert(b.clone(), a.clone());
                true
            }
            _ => false,
        }
    }
}

type Cont<'c> = dyn FnMut(&mut Bijection) -> bool + 'c;

// Continuation-passing backtracking: each matcher extends the bijection and
// calls `k`; a `true` from `k` stops the search.
fn match_box(a: &Drs, b: &Drs, map: &mut Bijection, k: &mut Cont<'_>) -> bool {
    if a.referents().len() != b.referents().len() || a.conditions().len() != b.conditions().len() {
        return false;
    }
    let mut ka: Vec<_> = a.conditions().iter().map(shape_key).collect();
    let mut kb: Vec<_> = b.conditions().iter().map(shape_key).collect();
    ka.sort();
    kb.sort();
    if ka != kb {
        return false;
    }
    // Most distinctive conditions first.
    let mut order: Vec<usize> = (0..a.conditions().len()).collect();
    order.sort_by_key(|&i| {
        let key = shape_key(&a.conditions()[i]);
        (ka.iter().filter(|k| **k == key).count(), !a.conditions()[i].is_atomic())
    });
    let mut used = vec![false; b.conditions().len()];
    match_conds(a, b, &order, 0, &mut used, map, &mut |m: &mut Bijection| {
        close_box(a, b, m, k)
    })
}

fn match_conds(
    a: &Drs,
    b: &Drs,
    order: &[usize],
    at: usize,
    used: &mut [bool],
    map: &mut Bijection,
    k: &mut Cont<'_>,
) -> bool {
    let Some(&i) = order.get(at) else {
        return k(map);
    };
    let ca = &a.conditions()[i];
    let key = shape_key(ca);
    for j in 0..b.conditions().len() {
        if used[j] || shape_key(&b.conditions()[j]) != key {
            continue;
        }
        used[j] = true;
        let mut trial = map.clone();
        let done = match_cond(ca, &b.conditions()[j], &mut trial, &mut |m: &mut Bijection| {
            match_conds(a, b, order, at + 1, &mut used.to_vec(), m, k)
        });
        used[j] = false;
        if done {
            return true;
        }
    }
    false
}

fn match_cond(a: &Condition, b: &Condition, map: &mut Bijection, k: &mut Cont<'_>) -> bool {
    use Condition::*;
    match (a, b) {
        (Pred { referent: x, .. }, Pred { referent: y, .. })
        | (Named { referent: x, .. }, Named { referent: y, .. }) => map.bind(x, y) && k(map),
        (Rel { from: a1, to: a2, .. }, Rel { from: b1, to: b2, .. }) | (Eq(a1, a2), Eq(b1, b2)) => {
            map.bind(a1, b1) && map.bind(a2, b2) && k(map)
        }
        (Not(x), Not(y)) | (Pos(x), Pos(y)) => match_box(x, y, map, k),
        (Imp(x1, x2), Imp(y1, y2)) | (Or(x1, x2), Or(y1, y2)) => {
            match_box(x1, y1, map, &mut |m: &mut Bijection| match_box(x2, y2, m, k))
        }
        (Whq(x, kx), Whq(y, ky)) => map.bind(x, y) && match_box(kx, ky, map, k),
        _ => false,
    }
}

// Once all conditions of a box are matched, its declared referents must map
// onto the other box's declared referents. Unused ones may still occur later
// (an antecedent's referents are visible in its consequent), so every pairing
// is tried.
fn close_box(a: &Drs, b: &Drs, map: &mut Bijection, k: &mut Cont<'_>) -> bool {
    let mut loose_a = Vec::new();
    for r in a.referents() {
        match map.fwd.get(r) {
            Some(t) if !b.declares(t) => return false,
            Some(_) => {}
            None => loose_a.push(r),
        }
    }
    let loose_b: Vec<_> = b
        .referents()
        .iter()
        .filter(|r| !map.back.contains_key(*r))
        .collect();
    if loose_a.len() != loose_b.len() {
        return false;
    }
    pair_loose(&loose_a, &loose_b, &mut vec![false; loose_b.len()], map, k)
}

fn pair_loose(
    loose_a: &[&Referent],
    loose_b: &[&Referent],
    used: &mut [bool],
    map: &mut Bijection,
    k: &mut Cont<'_>,
) -> bool {
    let Some((x, rest)) = loose_a.split_first() else {
        return k(&mut map.clone());
    };
    for j in 0..loose_b.len() {
        if used[j] {
            continue;
        }
        let mut trial = map.clone();
        if !trial.bind(x, loose_b[j]) {
            continue;
        }
        used[j] = true;
        let done = pair_loose(rest, loose_b, used, &mut trial, k);
        used[j] = false;
        if done {
            return true;
        }
    }
    false
}

// Everything about a condition except its referent names.
fn shape_key(c: &Condition) -> String {
    use Condition::*;
    match c {
        Pred { lemma, pos, sense, .. } => format!("p:{lemma}:{}:{sense}", pos.tag()),
        Named { name, class, .. } => format!("n:{name}:{}", class.tag()),
        Rel { label, .. } => format!("r:{label}"),
        Eq(..) => "eq".into(),
        Not(k) => format!("not:{}:{}", k.referents().len(), k.conditions().len()),
        Pos(k) => format!("pos:{}:{}", k.referents().len(), k.conditions().len()),
        Imp(x, y) => format!(
            "imp:{}:{}:{}:{}",
            x.referents().len(),
            x.conditions().len(),
            y.referents().len(),
            y.conditions().len()
        ),
        Or(x, y) => format!(
            "or:{}:{}:{}:{}",
            x.referents().len(),
            x.conditions().len(),
            y.referents().len(),
            y.conditions().len()
        ),
        Whq(_, k) => format!("whq:{}:{}", k.referents().len(), k.conditions().len()),
    }
}
