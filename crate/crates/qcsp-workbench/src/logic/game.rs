//! Model checking as game evaluation.
//!
//! `solve_qcsp` evaluates the full game (universal branching over the whole
//! domain); `models_restricted` restricts the universal player to a set of
//! adversaries, branching over a trie of their tuples so existential choices
//! can only depend on the universal values revealed so far, exactly as a set
//! of Skolem functions would. `solve_pp` handles the universal-free fragment
//! through the pinned-homomorphism solver and returns a witness.

use super::{Adversary, AdversarySet, Atom, PHSentence, Quantifier, Term};
use crate::budget::{Budget, NodeMeter};
use crate::error::{Error, Result};
use crate::structures::{PinnedHomProblem, Relation, Signature, Structure};
use std::collections::{BTreeMap, HashMap};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Slot {
    Var(usize),
    Elem(u32),
}

enum CAtom<'a> {
    Rel { rel: &'a Relation, args: Vec<Slot> },
    Eq(Slot, Slot),
}

struct Compiled<'a> {
    prefix: Vec<(Quantifier, String)>,
    atoms: Vec<CAtom<'a>>,
    /// atoms indexed by the prefix position of their last variable
    triggers: Vec<Vec<usize>>,
    /// per position: variables bound before it that still occur in a later-
    /// triggered atom (the memoization key)
    live: Vec<Vec<usize>>,
    n: u32,
}

fn resolve_term(t: &Term, vars: &BTreeMap<&str, usize>, a: &Structure) -> Result<Slot> {
    match t {
        Term::Var(v) => Ok(Slot::Var(*vars.get(v.as_str()).ok_or_else(|| {
            Error::FreeVariable(v.clone())
        })?)),
        Term::Const(c) => {
            let e = a
                .constants
                .get(c)
                .copied()
                .ok_or_else(|| Error::UnknownSymbol(c.clone()))?;
            Ok(Slot::Elem(e))
        }
        Term::Element(e) => {
            if *e < 1 || *e > a.n {
                Err(Error::ElementOutOfRange {
                    element: *e as u64,
                    domain: a.n,
                })
            } else {
                Ok(Slot::Elem(*e))
            }
        }
    }
}

fn compile<'a>(a: &'a Structure, phi: &PHSentence) -> Result<Compiled<'a>> {
    phi.validate(&a.signature)?;
    let vars: BTreeMap<&str, usize> = phi
        .prefix
        .iter()
        .enumerate()
        .map(|(i, (_, v))| (v.as_str(), i))
        .collect();
    let mut atoms = Vec::new();
    for atom in &phi.body {
        let compiled = match atom {
            Atom::Rel { symbol, args } => {
                let rel = a.relation(symbol)?;
                let args = args
                    .iter()
                    .map(|t| resolve_term(t, &vars, a))
                    .collect::<Result<Vec<_>>>()?;
                CAtom::Rel { rel, args }
            }
            Atom::Eq(l, r) => CAtom::Eq(resolve_term(l, &vars, a)?, resolve_term(r, &vars, a)?),
        };
        atoms.push(compiled);
    }
    let np = phi.prefix.len();
    let mut triggers = vec![Vec::new(); np + 1];
    for (i, atom) in atoms.iter().enumerate() {
        let slots: Vec<Slot> = match atom {
            CAtom::Rel { args, .. } => args.clone(),
            CAtom::Eq(l, r) => vec![*l, *r],
        };
        let max_var = slots
            .iter()
            .filter_map(|s| match s {
                Slot::Var(v) => Some(*v),
                Slot::Elem(_) => None,
            })
            .max();
        match max_var {
            Some(v) => triggers[v + 1].push(i), // checkable once position v is bound
            None => triggers[0].push(i),        // ground atom
        }
    }
    // live variables per position
    let mut live = vec![Vec::new(); np + 1];
    for pos in 0..=np {
        let mut used = vec![false; np];
        for later in (pos + 1)..=np {
            for &ai in &triggers[later] {
                let slots: Vec<Slot> = match &atoms[ai] {
                    CAtom::Rel { args, .. } => args.clone(),
                    CAtom::Eq(l, r) => vec![*l, *r],
                };
                for s in slots {
                    if let Slot::Var(v) = s {
                        if v < pos {
                            used[v] = true;
                        }
                    }
                }
            }
        }
        live[pos] = (0..np).filter(|&v| used[v]).collect();
    }
    Ok(Compiled {
        prefix: phi.prefix.clone(),
        atoms,
        triggers,
        live,
        n: a.n,
    })
}

impl<'a> Compiled<'a> {
    fn atom_holds(&self, idx: usize, assignment: &[u32]) -> bool {
        let value = |s: &Slot| -> u32 {
            match s {
                Slot::Var(v) => assignment[*v],
                Slot::Elem(e) => *e,
            }
        };
        match &self.atoms[idx] {
            CAtom::Rel { rel, args } => {
                let tuple: Vec<u32> = args.iter().map(value).collect();
                rel.contains_sorted(&tuple)
            }
            CAtom::Eq(l, r) => value(l) == value(r),
        }
    }

    fn triggered_hold(&self, pos: usize, assignment: &[u32]) -> bool {
        self.triggers[pos].iter().all(|&i| self.atom_holds(i, assignment))
    }
}

/// Trie over the tuples of one adversary; the universal player's branching
/// at depth d is the set of children, i.e. the values extendable to a tuple.
struct Trie {
    children: Vec<BTreeMap<u32, usize>>,
}

impl Trie {
    fn build(adv: &Adversary) -> Trie {
        let mut trie = Trie {
            children: vec![BTreeMap::new()],
        };
        for t in adv.tuples() {
            let mut node = 0usize;
            for &v in t {
                let next = match trie.children[node].get(&v) {
                    Some(&x) => x,
                    None => {
                        trie.children.push(BTreeMap::new());
                        let x = trie.children.len() - 1;
                        trie.children[node].insert(v, x);
                        x
                    }
                };
                node = next;
            }
        }
        trie
    }
}

enum UniversalMode<'t> {
    Full,
    Trie(&'t Trie),
}

struct GameEval<'c, 'a, 't> {
    c: &'c Compiled<'a>,
    mode: UniversalMode<'t>,
    memo: HashMap<(usize, usize, Vec<u32>), bool>,
}

impl<'c, 'a, 't> GameEval<'c, 'a, 't> {
    fn eval(
        &mut self,
        pos: usize,
        node: usize,
        assignment: &mut Vec<u32>,
        meter: &NodeMeter,
    ) -> Result<bool> {
        meter.tick()?;
        if pos == self.c.prefix.len() {
            return Ok(true);
        }
        let key_vals: Vec<u32> = self.c.live[pos].iter().map(|&v| assignment[v]).collect();
        let key = (pos, node, key_vals);
        if let Some(&cached) = self.memo.get(&key) {
            return Ok(cached);
        }
        let (q, _) = &self.c.prefix[pos];
        let result = match q {
            Quantifier::Exists => {
                let mut ok = false;
                for v in 1..=self.c.n {
                    assignment[pos] = v;
                    if self.c.triggered_hold(pos + 1, assignment)
                        && self.eval(pos + 1, node, assignment, meter)?
                    {
                        ok = true;
                        break;
                    }
                }
                assignment[pos] = 0;
                ok
            }
            Quantifier::Forall => {
                let mut ok = true;
                match self.mode {
                    UniversalMode::Full => {
                        for v in 1..=self.c.n {
                            assignment[pos] = v;
                            if !(self.c.triggered_hold(pos + 1, assignment)
                                && self.eval(pos + 1, node, assignment, meter)?)
                            {
                                ok = false;
                                break;
                            }
                        }
                    }
                    UniversalMode::Trie(trie) => {
                        let children: Vec<(u32, usize)> = trie.children[node]
                            .iter()
                            .map(|(&v, &x)| (v, x))
                            .collect();
                        for (v, next) in children {
                            assignment[pos] = v;
                            if !(self.c.triggered_hold(pos + 1, assignment)
                                && self.eval(pos + 1, next, assignment, meter)?)
                            {
                                ok = false;
                                break;
                            }
                        }
                    }
                }
                assignment[pos] = 0;
                ok
            }
        };
        self.memo.insert(key, result);
        Ok(result)
    }
}

/// True iff `a` models `phi`, by recursive game evaluation. Complete and
/// deterministic; fails only on the node budget.
pub fn solve_qcsp(a: &Structure, phi: &PHSentence, budget: &Budget) -> Result<bool> {
    let c = compile(a, phi)?;
    if !c.triggered_hold(0, &[]) {
        return Ok(false); // a ground atom of the body fails
    }
    let meter = budget.meter();
    let mut eval = GameEval {
        c: &c,
        mode: UniversalMode::Full,
        memo: HashMap::new(),
    };
    let mut assignment = vec![0u32; c.prefix.len()];
    eval.eval(0, 0, &mut assignment, &meter)
}

/// True iff for every adversary in `omega` the existential player wins the
/// `(a, phi)`-game when universal play is restricted to the adversary's
/// tuples. Each existential choice sees only the universal values played so
/// far, which is enforced by evaluating over the adversary trie.
pub fn models_restricted(
    a: &Structure,
    phi: &PHSentence,
    omega: &AdversarySet,
    budget: &Budget,
) -> Result<bool> {
    if omega.length != phi.universal_count() {
        return Err(Error::AdversaryLength {
            expected: phi.universal_count(),
            got: omega.length,
        });
    }
    let c = compile(a, phi)?;
    if !c.triggered_hold(0, &[]) {
        return Ok(false);
    }
    // Branching consults the trie at universal positions only; existential
    // positions pass the node through. We interleave by tracking how many
    // universals have been consumed inside the trie structure itself, so the
    // trie must be walked in prefix order of universal variables.
    for adv in omega.members() {
        let trie = Trie::build(adv);
        let meter = budget.meter();
        let mut eval = GameEval {
            c: &c,
            mode: UniversalMode::Trie(&trie),
            memo: HashMap::new(),
        };
        let mut assignment = vec![0u32; c.prefix.len()];
        if !eval.eval(0, 0, &mut assignment, &meter)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Universal-free model checking with a witness. Equality atoms are
/// eliminated by variable merging before the homomorphism search.
pub fn solve_pp(
    a: &Structure,
    phi: &PHSentence,
    budget: &Budget,
) -> Result<Option<BTreeMap<String, u32>>> {
    if !phi.is_pp() {
        return Err(Error::InvalidParameter(
            "solve_pp requires a universal-free sentence".into(),
        ));
    }
    phi.validate(&a.signature)?;

    // union-find over variables, with an optional forced element per class
    let vars: Vec<&str> = phi.prefix.iter().map(|(_, v)| v.as_str()).collect();
    let index: BTreeMap<&str, usize> = vars.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let mut parent: Vec<usize> = (0..vars.len()).collect();
    fn find(parent: &mut Vec<usize>, x: usize) -> usize {
        if parent[x] != x {
            let r = find(parent, parent[x]);
            parent[x] = r;
        }
        parent[x]
    }
    let mut forced: Vec<Option<u32>> = vec![None; vars.len()];
    let elem_of = |t: &Term| -> Result<Option<u32>> {
        match t {
            Term::Const(c) => Ok(Some(*a.constants.get(c).ok_or_else(|| {
                Error::UnknownSymbol(c.clone())
            })?)),
            Term::Element(e) => Ok(Some(*e)),
            Term::Var(_) => Ok(None),
        }
    };
    for atom in &phi.body {
        if let Atom::Eq(l, r) = atom {
            match (elem_of(l)?, elem_of(r)?) {
                (Some(x), Some(y)) => {
                    if x != y {
                        return Ok(None);
                    }
                }
                (Some(e), None) | (None, Some(e)) => {
                    let v = match (l, r) {
                        (Term::Var(v), _) | (_, Term::Var(v)) => index[v.as_str()],
                        _ => unreachable!(),
                    };
                    let root = find(&mut parent, v);
                    match forced[root] {
                        Some(old) if old != e => return Ok(None),
                        _ => forced[root] = Some(e),
                    }
                }
                (None, None) => {
                    if let (Term::Var(lv), Term::Var(rv)) = (l, r) {
                        let (x, y) = (index[lv.as_str()], index[rv.as_str()]);
                        let (rx, ry) = (find(&mut parent, x), find(&mut parent, y));
                        if rx != ry {
                            let merged_force = match (forced[rx], forced[ry]) {
                                (Some(p), Some(q)) if p != q => return Ok(None),
                                (Some(p), _) => Some(p),
                                (_, q) => q,
                            };
                            parent[ry] = rx;
                            forced[rx] = merged_force;
                        }
                    }
                }
            }
        }
    }

    // build the canonical database of the relational atoms, with element
    // nodes pinned
    let mut node_ids: BTreeMap<String, u32> = BTreeMap::new();
    let mut pins: BTreeMap<u32, u32> = BTreeMap::new();
    let mut next_id = 0u32;
    let mut tuples: Vec<(String, Vec<u32>)> = Vec::new();
    {
        let mut node_for = |key: String, pin: Option<u32>| -> u32 {
            let id = *node_ids.entry(key).or_insert_with(|| {
                next_id += 1;
                next_id
            });
            if let Some(e) = pin {
                pins.insert(id, e);
            }
            id
        };
        for atom in &phi.body {
            if let Atom::Rel { symbol, args } = atom {
                let mut tuple = Vec::with_capacity(args.len());
                for t in args {
                    let node = match t {
                        Term::Var(v) => {
                            let root = find(&mut parent, index[v.as_str()]);
                            match forced[root] {
                                Some(e) => node_for(format!("e{e}"), Some(e)),
                                None => node_for(format!("v{root}"), None),
                            }
                        }
                        Term::Const(c) => {
                            let e = a.constants[c];
                            node_for(format!("e{e}"), Some(e))
                        }
                        Term::Element(e) => node_for(format!("e{e}"), Some(*e)),
                    };
                    tuple.push(node);
                }
                tuples.push((symbol.clone(), tuple));
            }
        }
    }

    let mut source = Structure::new(
        Signature {
            relations: a.signature.relations.clone(),
            constants: Default::default(),
        },
        next_id.max(1),
    );
    for (symbol, tuple) in &tuples {
        source.relations.get_mut(symbol).unwrap().insert(tuple);
    }
    let mut target = a.clone();
    target.signature.constants.clear();
    target.constants.clear();
    let mut problem = PinnedHomProblem::new(source, target);
    problem.pins = pins;
    let hom = find_hom_checked(&problem, budget)?;
    let Some(hom) = hom else { return Ok(None) };

    // read the witness back through the merging
    let mut witness = BTreeMap::new();
    for (i, v) in vars.iter().enumerate() {
        let root = find(&mut parent, i);
        let value = match forced[root] {
            Some(e) => e,
            None => match node_ids.get(&format!("v{root}")) {
                Some(&node) => hom[(node - 1) as usize],
                None => 1, // variable not occurring in any relational atom
            },
        };
        witness.insert(v.to_string(), value);
    }
    Ok(Some(witness))
}

fn find_hom_checked(problem: &PinnedHomProblem, budget: &Budget) -> Result<Option<Vec<u32>>> {
    // A pin may be out of range if an element literal exceeded the domain.
    for &t in problem.pins.values() {
        if t < 1 || t > problem.target.n {
            return Err(Error::ElementOutOfRange {
                element: t as u64,
                domain: problem.target.n,
            });
        }
    }
    crate::structures::find_homomorphism(problem, budget)
}
