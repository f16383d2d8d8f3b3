//! QCSP-to-CSP reduction over an adversary set: one pp-instance per
//! adversary tuple, with Skolem copies of an existential variable identified
//! across tuples that agree on the universal prefix the variable can see.

use super::{AdversarySet, Atom, PHSentence, Quantifier, Term};
use crate::budget::Budget;
use crate::error::{Error, Result};
use crate::logic::solve_pp;
use crate::structures::Structure;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

/// Which Skolem copies were merged and why.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct MergeRecord {
    pub existential: String,
    pub adversary_index: usize,
    /// The universal prefix shared by all merged copies.
    pub shared_prefix: Vec<u32>,
    /// Tuples whose copies collapsed to one variable.
    pub tuples: Vec<Vec<u32>>,
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Instance {
    pub adversary_index: usize,
    pub tuple: Vec<u32>,
    pub atoms: Vec<Atom>,
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct CspReduct {
    pub instances: Vec<Instance>,
    pub merges: Vec<MergeRecord>,
}

impl CspReduct {
    /// The conjunction of all instances as one pp-sentence.
    pub fn conjunction(&self) -> PHSentence {
        let mut vars: BTreeSet<String> = BTreeSet::new();
        let mut body = Vec::new();
        for inst in &self.instances {
            for atom in &inst.atoms {
                if let Atom::Rel { args, .. } = atom {
                    for t in args {
                        if let Term::Var(v) = t {
                            vars.insert(v.clone());
                        }
                    }
                }
                body.push(atom.clone());
            }
        }
        PHSentence {
            prefix: vars
                .into_iter()
                .map(|v| (Quantifier::Exists, v))
                .collect(),
            body,
        }
    }

    pub fn satisfiable(&self, a: &Structure, budget: &Budget) -> Result<bool> {
        Ok(solve_pp(a, &self.conjunction(), budget)?.is_some())
    }

    /// Structure-file text of the canonical database of the conjunction,
    /// followed by a `# merged:` comment log.
    pub fn serialize(&self, signature: &crate::structures::Signature) -> String {
        let conj = self.conjunction();
        let mut node_of: BTreeMap<Term, u32> = BTreeMap::new();
        let mut next = 0u32;
        for atom in &conj.body {
            if let Atom::Rel { args, .. } = atom {
                for t in args {
                    node_of.entry(t.clone()).or_insert_with(|| {
                        next += 1;
                        next
                    });
                }
            }
        }
        let mut db = Structure::new(
            crate::structures::Signature {
                relations: signature.relations.clone(),
                constants: BTreeSet::new(),
            },
            next.max(1),
        );
        for atom in &conj.body {
            if let Atom::Rel { symbol, args } = atom {
                let tuple: Vec<u32> = args.iter().map(|t| node_of[t]).collect();
                db.relations.get_mut(symbol).unwrap().insert(&tuple);
            }
        }
        let mut out = db.serialize();
        for (term, node) in &node_of {
            if !matches!(term, Term::Var(_)) {
                let _ = writeln!(out, "# pin: element {node} is {term}");
            }
        }
        for m in &self.merges {
            let _ = writeln!(
                out,
                "# merged: {} over prefix {:?} across tuples {:?} (adversary {})",
                m.existential, m.shared_prefix, m.tuples, m.adversary_index
            );
        }
        out
    }
}

/// One instance per adversary tuple, universals instantiated by the
/// structure's constants for the tuple entries; for any two tuples of one
/// adversary agreeing on their first `l` universal coordinates, the copies of
/// each existential variable whose preceding universals lie within that
/// shared prefix are identified.
pub fn qcsp_to_csp(
    a: &Structure,
    phi: &PHSentence,
    omega: &AdversarySet,
    budget: &Budget,
) -> Result<CspReduct> {
    phi.validate(&a.signature)?;
    if phi.has_equality() {
        return Err(Error::EqualityAtom);
    }
    if omega.length != phi.universal_count() {
        return Err(Error::AdversaryLength {
            expected: phi.universal_count(),
            got: omega.length,
        });
    }
    // every element of every adversary must be named by a constant
    let mut constant_of: BTreeMap<u32, String> = BTreeMap::new();
    for (name, &e) in &a.constants {
        constant_of.entry(e).or_insert_with(|| name.clone());
    }
    for adv in omega.members() {
        for t in adv.tuples() {
            for &e in t {
                if !constant_of.contains_key(&e) {
                    return Err(Error::MissingConstant(e));
                }
            }
        }
    }
    budget.check_elements(omega.width())?;

    // how many universals precede each prefix position
    let mut universals_before = Vec::new();
    let mut seen = 0usize;
    for (q, _) in &phi.prefix {
        universals_before.push(seen);
        if *q == Quantifier::Forall {
            seen += 1;
        }
    }

    let mut instances = Vec::new();
    let mut merges = Vec::new();
    for (ai, adv) in omega.members().iter().enumerate() {
        let tuples: Vec<&Vec<u32>> = adv.tuples().collect();
        // canonical variable name for the copy of existential x at prefix
        // position p in the instance of tuple t: determined by t's first
        // universals_before[p] coordinates, which is exactly the
        // identification rule's fixed point
        let copy_name = |x: &str, p: usize, t: &[u32]| -> String {
            let prefix = &t[..universals_before[p]];
            let mut name = format!("{x}__a{ai}");
            for v in prefix {
                let _ = write!(name, "_{v}");
            }
            name
        };
        for t in &tuples {
            let mut universal_values: BTreeMap<&str, u32> = BTreeMap::new();
            let mut ui = 0usize;
            for (q, v) in &phi.prefix {
                if *q == Quantifier::Forall {
                    universal_values.insert(v.as_str(), t[ui]);
                    ui += 1;
                }
            }
            let atoms: Vec<Atom> = phi
                .body
                .iter()
                .map(|atom| match atom {
                    Atom::Rel { symbol, args } => Atom::Rel {
                        symbol: symbol.clone(),
                        args: args
                            .iter()
                            .map(|term| match term {
                                Term::Var(v) => {
                                    if let Some(&e) = universal_values.get(v.as_str()) {
                                        Term::Const(constant_of[&e].clone())
                                    } else {
                                        let p = phi
                                            .prefix
                                            .iter()
                                            .position(|(_, w)| w == v)
                                            .unwrap();
                                        Term::Var(copy_name(v, p, t))
                                    }
                                }
                                other => other.clone(),
                            })
                            .collect(),
                    },
                    Atom::Eq(..) => unreachable!("equality rejected above"),
                })
                .collect();
            instances.push(Instance {
                adversary_index: ai,
                tuple: (*t).clone(),
                atoms,
            });
        }
        // merge log: for each existential, group tuples by visible prefix
        for (p, (q, x)) in phi.prefix.iter().enumerate() {
            if *q == Quantifier::Exists {
                let mut groups: BTreeMap<Vec<u32>, Vec<Vec<u32>>> = BTreeMap::new();
                for t in &tuples {
                    groups
                        .entry(t[..universals_before[p]].to_vec())
                        .or_default()
                        .push((*t).clone());
                }
                for (prefix, members) in groups {
                    if members.len() > 1 {
                        merges.push(MergeRecord {
                            existential: x.clone(),
                            adversary_index: ai,
                            shared_prefix: prefix,
                            tuples: members,
                        });
                    }
                }
            }
        }
    }
    Ok(CspReduct { instances, merges })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::logic::{models_restricted, Adversary};
    use crate::structures::Signature;

    fn vars_of(reduct: &CspReduct) -> BTreeSet<String> {
        let mut vars = BTreeSet::new();
        for i in &reduct.instances {
            for atom in &i.atoms {
                if let Atom::Rel { args, .. } = atom {
                    for t in args {
                        if let Term::Var(v) = t {
                            vars.insert(v.clone());
                        }
                    }
                }
            }
        }
        vars
    }

    #[test]
    fn copies_merge_when_prefixes_agree() {
        // forall x1 exists y forall x2 : E(x1,y) & E(y,x2)
        let a = catalog::k2().with_all_constants();
        let phi = PHSentence::parse(
            "forall x1 exists y forall x2 : E(x1,y) & E(y,x2)",
            &a.signature,
        )
        .unwrap();
        let adv = Adversary::from_tuples(2, vec![vec![1, 1], vec![1, 2]]);
        let omega = AdversarySet::new(2, vec![adv]);
        let reduct = qcsp_to_csp(&a, &phi, &omega, &Budget::default()).unwrap();
        assert_eq!(reduct.instances.len(), 2);
        // y precedes x2 and both tuples share the length-1 prefix (1), so
        // the two copies of y are one variable
        assert_eq!(vars_of(&reduct).len(), 1);
        assert_eq!(reduct.merges.len(), 1);
        assert_eq!(reduct.merges[0].existential, "y");
        assert_eq!(reduct.merges[0].shared_prefix, vec![1]);
    }

    #[test]
    fn copies_stay_separate_when_prefixes_differ() {
        let a = catalog::dc3().with_all_constants();
        let phi = PHSentence::parse("forall x exists y : E(x,y)", &a.signature).unwrap();
        let adv = Adversary::full(3, 1);
        let omega = AdversarySet::new(1, vec![adv]);
        let reduct = qcsp_to_csp(&a, &phi, &omega, &Budget::default()).unwrap();
        assert_eq!(reduct.instances.len(), 3);
        assert_eq!(vars_of(&reduct).len(), 3);
        assert!(reduct.merges.is_empty());
    }

    #[test]
    fn zero_universals_give_a_single_instance() {
        let a = catalog::k2().with_all_constants();
        let phi = PHSentence::parse("exists y : E(y,y)", &a.signature).unwrap();
        let omega = AdversarySet::new(0, vec![Adversary::from_tuples(0, vec![vec![]])]);
        let reduct = qcsp_to_csp(&a, &phi, &omega, &Budget::default()).unwrap();
        assert_eq!(reduct.instances.len(), 1);
        assert_eq!(
            reduct.satisfiable(&a, &Budget::default()).unwrap(),
            false
        );
    }

    #[test]
    fn missing_constant_is_an_error() {
        let a = catalog::k2(); // no constants
        let phi = PHSentence::parse("forall x exists y : E(x,y)", &a.signature).unwrap();
        let omega = AdversarySet::new(1, vec![Adversary::full(2, 1)]);
        assert!(matches!(
            qcsp_to_csp(&a, &phi, &omega, &Budget::default()),
            Err(Error::MissingConstant(_))
        ));
    }

    #[test]
    fn reduction_satisfiability_matches_restricted_semantics() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        let budget = Budget::default();
        let structures = [
            catalog::k2().with_all_constants(),
            catalog::dc3().with_all_constants(),
            catalog::path("011").with_all_constants(),
            catalog::transitive_tournament(4).with_all_constants(),
        ];
        for round in 0..120 {
            let a = &structures[round % structures.len()];
            let m = rng.gen_range(1..=3usize);
            let ne = rng.gen_range(1..=2usize);
            let mut prefix = Vec::new();
            for i in 0..m {
                prefix.push((Quantifier::Forall, format!("u{i}")));
            }
            for i in 0..ne {
                let pos = rng.gen_range(0..=prefix.len());
                prefix.insert(pos, (Quantifier::Exists, format!("e{i}")));
            }
            let names: Vec<String> = prefix.iter().map(|(_, v)| v.clone()).collect();
            let n_atoms = rng.gen_range(1..=3usize);
            let mut body = Vec::new();
            for _ in 0..n_atoms {
                let l = names[rng.gen_range(0..names.len())].clone();
                let r = names[rng.gen_range(0..names.len())].clone();
                body.push(Atom::Rel {
                    symbol: "E".into(),
                    args: vec![Term::Var(l), Term::Var(r)],
                });
            }
            let phi = PHSentence { prefix, body };
            // a couple of random adversaries
            let mut advs = Vec::new();
            for _ in 0..rng.gen_range(1..=2usize) {
                let mut tuples = Vec::new();
                for _ in 0..rng.gen_range(1..=3usize) {
                    tuples.push((0..m).map(|_| rng.gen_range(1..=a.n)).collect::<Vec<_>>());
                }
                advs.push(Adversary::from_tuples(m, tuples));
            }
            let omega = AdversarySet::new(m, advs);
            let reduct = qcsp_to_csp(a, &phi, &omega, &budget).unwrap();
            assert!(reduct.instances.len() as u64 <= omega.width());
            let sat = reduct.satisfiable(a, &budget).unwrap();
            let game = models_restricted(a, &phi, &omega, &budget).unwrap();
            assert_eq!(sat, game, "round {round}: {phi} over {omega:?}");
        }
    }

    #[test]
    fn serializes_to_structure_grammar_with_merge_log() {
        let a = catalog::k2().with_all_constants();
        let phi = PHSentence::parse(
            "forall x1 exists y forall x2 : E(x1,y) & E(y,x2)",
            &a.signature,
        )
        .unwrap();
        let omega = AdversarySet::new(
            2,
            vec![Adversary::from_tuples(2, vec![vec![1, 1], vec![1, 2]])],
        );
        let reduct = qcsp_to_csp(&a, &phi, &omega, &Budget::default()).unwrap();
        let text = reduct.serialize(&Signature::digraph());
        assert!(text.contains("# merged: y"));
        // the non-comment part parses back as a structure file
        let parsed = Structure::parse(&text).unwrap();
        assert!(parsed.n >= 1);
    }
}
