use std::collections::BTreeSet;

use super::{Condition, Drs, Referent};

/// Referents used somewhere in `d` that are not accessible at their use site.
pub fn free_referents(d: &Drs) -> BTreeSet<Referent> {
    let mut free = BTreeSet::new();
    walk(d, &mut Vec::new(), &mut free);
    free
}

pub fn is_proper(d: &Drs) -> bool {
    free_referents(d).is_empty()
}

/// Every referent declared in some box of `d` (plus question binders).
pub fn declared_names(d: &Drs) -> BTreeSet<Referent> {
    let mut out = BTreeSet::new();
    for (_, b) in d.boxes() {
        out.extend(b.referents().iter().cloned());
        for c in b.conditions() {
            if let Condition::Whq(x, _) = c {
                out.insert(x.clone());
            }
        }
    }
    out
}

// `scope` holds the referents accessible from the enclosing context; the
// box's own referents are pushed for the duration of the walk.
fn walk<'a>(d: &'a Drs, scope: &mut Vec<&'a Referent>, free: &mut BTreeSet<Referent>) {
    let mark = scope.len();
    scope.extend(d.referents());
    for c in d.conditions() {
        match c {
            Condition::Pred { referent, .. } | Condition::Named { referent, .. } => {
                check(referent, scope, free)
            }
            Condition::Rel { from, to, .. } => {
                check(from, scope, free);
                check(to, scope, free);
            }
            Condition::Eq(a, b) => {
                check(a, scope, free);
                check(b, scope, free);
            }
            Condition::Not(k) | Condition::Pos(k) => walk(k, scope, free),
            Condition::Or(l, r) => {
                walk(l, scope, free);
                walk(r, scope, free);
            }
            Condition::Imp(ante, cons) => {
                walk(ante, scope, free);
                let m = scope.len();
                scope.extend(ante.referents());
                walk(cons, scope, free);
                scope.truncate(m);
            }
            Condition::Whq(x, body) => {
                scope.push(x);
                walk(body, scope, free);
                scope.pop();
            }
        }
    }
    scope.truncate(mark);
}

fn check(r: &Referent, scope: &[&Referent], free: &mut BTreeSet<Referent>) {
    if !scope.contains(&r) {
        free.insert(r.clone());
    }
}
