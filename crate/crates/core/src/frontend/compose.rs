//! Compositional DRS construction over parsed sentences.
//!
//! Referents are numbered left to right by introduction: `x1, x2, …` for
//! entities and `e1, e2, …` for events. Verbs follow the neo-Davidsonian
//! style: `pred(e,lemma,v,sense)` plus `rel(e,x,role)` edges.

use crate::drs::{lemma, Condition, Drs, Lemma, Pos, Referent, PRONOUN_SENSE};

use super::grammar::{Auxiliary, Nominal, Np, NounPhrase, Sentence, VerbPhrase, WhWord};

#[derive(Default)]
struct BoxBuf {
    refs: Vec<Referent>,
    conds: Vec<Condition>,
}

impl BoxBuf {
    fn build(self) -> Drs {
        Drs::new(self.refs, self.conds).expect("fresh referents are distinct")
    }
}

#[derive(Default)]
pub(crate) struct Composer {
    entities: usize,
    events: usize,
}

impl Composer {
    fn fresh_entity(&mut self) -> Referent {
        self.entities += 1;
        Referent::new(format!("x{}", self.entities)).unwrap()
    }

    fn fresh_event(&mut self) -> Referent {
        self.events += 1;
        Referent::new(format!("e{}", self.events)).unwrap()
    }

    pub(crate) fn sentence(&mut self, s: &Sentence) -> Drs {
        let mut top = BoxBuf::default();
        match s {
            Sentence::Simple { subject, vp } => {
                let x = self.np(subject, &mut top);
                self.vp(vp, &x, None, &mut top);
            }
            Sentence::Every { restrictor, vp } => {
                let mut ante = BoxBuf::default();
                let x = self.fresh_entity();
                ante.refs.push(x.clone());
                nominal_conds(restrictor, &x, &mut ante.conds);
                let mut cons = BoxBuf::default();
                self.vp(vp, &x, None, &mut cons);
                top.conds.push(Condition::Imp(ante.build(), cons.build()));
            }
            Sentence::No { restrictor, vp } => {
                let mut scope = BoxBuf::default();
                let x = self.fresh_entity();
                scope.refs.push(x.clone());
                nominal_conds(restrictor, &x, &mut scope.conds);
                self.vp(vp, &x, None, &mut scope);
                top.conds.push(Condition::Not(scope.build()));
            }
            Sentence::SubjectQuestion { wh, vp } => {
                let x = self.fresh_entity();
                let mut body = BoxBuf::default();
                let kind = if *wh == WhWord::Who { "person" } else { "thing" };
                body.conds.push(Condition::pred(x.clone(), lemma(kind), Pos::Noun, 0));
                self.vp(vp, &x, None, &mut body);
                top.conds.push(Condition::Whq(x, body.build()));
            }
            Sentence::WhenQuestion { subject, vp } => {
                let t = self.fresh_entity();
                let mut body = BoxBuf::default();
                body.conds.push(Condition::pred(t.clone(), lemma("day"), Pos::Noun, 0));
                let x = self.np(subject, &mut body);
                self.vp(vp, &x, Some(&t), &mut body);
                top.conds.push(Condition::Whq(t, body.build()));
            }
        }
        top.build()
    }

    /// Introduces a noun phrase's referent and conditions into `into`.
    fn np(&mut self, np: &Np, into: &mut BoxBuf) -> Referent {
        let x = self.fresh_entity();
        into.refs.push(x.clone());
        np_conds(&np.phrase, &x, &mut into.conds);
        x
    }

    fn vp(&mut self, vp: &VerbPhrase, subject: &Referent, when: Option<&Referent>, into: &mut BoxBuf) {
        let mut ev = BoxBuf::default();
        let e = self.fresh_event();
        ev.refs.push(e.clone());
        ev.conds.push(Condition::pred(e.clone(), vp.verb.clone(), Pos::Verb, vp.sense));
        ev.conds.push(Condition::rel(e.clone(), subject.clone(), lemma("agent")));
        for (np, role) in [(&vp.patient, "patient"), (&vp.recipient, "recipient")] {
            if let Some(np) = np {
                self.edge(&e, np, lemma(role), &mut ev);
            }
        }
        for (prep, np) in &vp.pps {
            self.edge(&e, np, prep.clone(), &mut ev);
        }
        if let Some(t) = when {
            ev.conds.push(Condition::rel(e.clone(), t.clone(), lemma("on")));
        }
        match vp.aux {
            Auxiliary::None => {
                into.refs.extend(ev.refs);
                into.conds.extend(ev.conds);
            }
            Auxiliary::Can => into.conds.push(Condition::Pos(ev.build())),
            Auxiliary::DoesNot => into.conds.push(Condition::Not(ev.build())),
            Auxiliary::CanNot => {
                let inner = Drs::new(vec![], vec![Condition::Pos(ev.build())]).unwrap();
                into.conds.push(Condition::Not(inner));
            }
        }
    }

    fn edge(&mut self, e: &Referent, np: &Np, label: Lemma, into: &mut BoxBuf) {
        let x = self.fresh_entity();
        into.refs.push(x.clone());
        into.conds.push(Condition::rel(e.clone(), x.clone(), label));
        np_conds(&np.phrase, &x, &mut into.conds);
    }
}

fn np_conds(np: &NounPhrase, x: &Referent, out: &mut Vec<Condition>) {
    match np {
        NounPhrase::Proper { name, class } => out.push(Condition::named(x.clone(), name.clone(), *class)),
        NounPhrase::Indefinite(n) | NounPhrase::Bare(n) => nominal_conds(n, x, out),
        NounPhrase::Pronoun { lemma, .. } => {
            out.push(Condition::pred(x.clone(), lemma.clone(), Pos::Noun, PRONOUN_SENSE))
        }
        NounPhrase::Weekday(day) => out.push(Condition::pred(x.clone(), day.clone(), Pos::Noun, 0)),
    }
}

fn nominal_conds(n: &Nominal, x: &Referent, out: &mut Vec<Condition>) {
    out.push(Condition::pred(x.clone(), n.noun.clone(), Pos::Noun, n.sense));
    for (adj, sense) in &n.adjectives {
        out.push(Condition::pred(x.clone(), adj.clone(), Pos::Adjective, *sense));
    }
}
