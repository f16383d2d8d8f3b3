//! Positive Horn sentences, pp/QCSP model checking, adversary-restricted
//! semantics, and the QCSP-to-CSP reduction.

mod game;
mod parse;
mod reduce;

pub use game::{models_restricted, solve_pp, solve_qcsp};
pub use reduce::{qcsp_to_csp, CspReduct, MergeRecord};

use crate::error::{Error, Result};
use crate::structures::Signature;
use std::collections::BTreeSet;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Quantifier {
    Forall,
    Exists,
}

/// A term of an atom: a quantified variable, a constant symbol of the
/// signature, or a direct element literal (written `@k`). Element literals
/// are produced by universal instantiation, which must name elements even
/// when the structure has no constant for them.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub enum Term {
    Var(String),
    Const(String),
    Element(u32),
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "{v}"),
            Term::Const(c) => write!(f, "{c}"),
            Term::Element(e) => write!(f, "@{e}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub enum Atom {
    Rel { symbol: String, args: Vec<Term> },
    Eq(Term, Term),
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Rel { symbol, args } => {
                write!(f, "{symbol}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
            Atom::Eq(a, b) => write!(f, "{a} = {b}"),
        }
    }
}

/// Prenex positive Horn sentence: a quantifier prefix over a conjunction of
/// relational and equality atoms.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct PHSentence {
    pub prefix: Vec<(Quantifier, String)>,
    pub body: Vec<Atom>,
}

impl fmt::Display for PHSentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (q, v) in &self.prefix {
            match q {
                Quantifier::Forall => write!(f, "forall {v} ")?,
                Quantifier::Exists => write!(f, "exists {v} ")?,
            }
        }
        write!(f, ":")?;
        for (i, atom) in self.body.iter().enumerate() {
            if i == 0 {
                write!(f, " {atom}")?;
            } else {
                write!(f, " & {atom}")?;
            }
        }
        Ok(())
    }
}

impl PHSentence {
    pub fn parse(text: &str, signature: &Signature) -> Result<PHSentence> {
        parse::parse_sentence(text, signature)
    }

    pub fn universal_variables(&self) -> Vec<&str> {
        self.prefix
            .iter()
            .filter(|(q, _)| *q == Quantifier::Forall)
            .map(|(_, v)| v.as_str())
            .collect()
    }

    pub fn universal_count(&self) -> usize {
        self.universal_variables().len()
    }

    pub fn is_pp(&self) -> bool {
        self.universal_count() == 0
    }

    /// Prefix of shape forall* exists*.
    pub fn is_pi2(&self) -> bool {
        let mut seen_exists = false;
        for (q, _) in &self.prefix {
            match q {
                Quantifier::Exists => seen_exists = true,
                Quantifier::Forall if seen_exists => return false,
                Quantifier::Forall => {}
            }
        }
        true
    }

    pub fn has_equality(&self) -> bool {
        self.body.iter().any(|a| matches!(a, Atom::Eq(..)))
    }

    /// Well-formedness against a signature: prenex by construction, every
    /// variable quantified exactly once, every body variable bound, symbols
    /// and arities declared.
    pub fn validate(&self, signature: &Signature) -> Result<()> {
        let mut seen = BTreeSet::new();
        for (_, v) in &self.prefix {
            if !seen.insert(v.clone()) {
                return Err(Error::DuplicateVariable(v.clone()));
            }
        }
        let check_term = |t: &Term| -> Result<()> {
            match t {
                Term::Var(v) if !seen.contains(v) => Err(Error::FreeVariable(v.clone())),
                Term::Const(c) if !signature.constants.contains(c) => {
                    Err(Error::UnknownSymbol(c.clone()))
                }
                _ => Ok(()),
            }
        };
        for atom in &self.body {
            match atom {
                Atom::Rel { symbol, args } => {
                    let arity = signature.arity(symbol)?;
                    if args.len() != arity {
                        return Err(Error::ArityMismatch {
                            symbol: symbol.clone(),
                            expected: arity,
                            got: args.len(),
                        });
                    }
                    for t in args {
                        check_term(t)?;
                    }
                }
                Atom::Eq(a, b) => {
                    check_term(a)?;
                    check_term(b)?;
                }
            }
        }
        Ok(())
    }

    /// Replace the universal variables assigned by `rho` with element
    /// literals, preserving the order of the remaining prefix.
    pub fn instantiate_universals(
        &self,
        rho: &std::collections::BTreeMap<String, u32>,
    ) -> Result<PHSentence> {
        for v in rho.keys() {
            let is_universal = self
                .prefix
                .iter()
                .any(|(q, w)| *q == Quantifier::Forall && w == v);
            if !is_universal {
                return Err(Error::NotUniversal(v.clone()));
            }
        }
        let prefix: Vec<(Quantifier, String)> = self
            .prefix
            .iter()
            .filter(|(_, v)| !rho.contains_key(v))
            .cloned()
            .collect();
        let subst = |t: &Term| -> Term {
            match t {
                Term::Var(v) => match rho.get(v) {
                    Some(&e) => Term::Element(e),
                    None => t.clone(),
                },
                other => other.clone(),
            }
        };
        let body = self
            .body
            .iter()
            .map(|a| match a {
                Atom::Rel { symbol, args } => Atom::Rel {
                    symbol: symbol.clone(),
                    args: args.iter().map(subst).collect(),
                },
                Atom::Eq(a, b) => Atom::Eq(subst(a), subst(b)),
            })
            .collect();
        Ok(PHSentence { prefix, body })
    }
}

/// An m-ary relation restricting the universal player's plays. Rectangular
/// adversaries (products of coordinate sets) are recognised and recorded,
/// which lets projectivity checks take a cheaper route.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub struct Adversary {
    pub length: usize,
    tuples: BTreeSet<Vec<u32>>,
    rectangular: Option<Vec<BTreeSet<u32>>>,
}

impl Adversary {
    pub fn from_tuples<I: IntoIterator<Item = Vec<u32>>>(length: usize, tuples: I) -> Self {
        let tuples: BTreeSet<Vec<u32>> = tuples.into_iter().collect();
        for t in &tuples {
            assert_eq!(t.len(), length, "adversary tuple of wrong length");
        }
        let rectangular = Self::detect_rectangular(length, &tuples);
        Adversary {
            length,
            tuples,
            rectangular,
        }
    }

    pub fn rectangular(factors: Vec<BTreeSet<u32>>) -> Self {
        assert!(factors.iter().all(|f| !f.is_empty()));
        let length = factors.len();
        let mut tuples = BTreeSet::new();
        let mut current = vec![0u32; length];
        fn rec(
            factors: &[BTreeSet<u32>],
            pos: usize,
            current: &mut Vec<u32>,
            out: &mut BTreeSet<Vec<u32>>,
        ) {
            if pos == factors.len() {
                out.insert(current.clone());
                return;
            }
            for &v in &factors[pos] {
                current[pos] = v;
                rec(factors, pos + 1, current, out);
            }
        }
        rec(&factors, 0, &mut current, &mut tuples);
        Adversary {
            length,
            tuples,
            rectangular: Some(factors),
        }
    }

    fn detect_rectangular(
        length: usize,
        tuples: &BTreeSet<Vec<u32>>,
    ) -> Option<Vec<BTreeSet<u32>>> {
        if tuples.is_empty() {
            return None;
        }
        let mut factors: Vec<BTreeSet<u32>> = vec![BTreeSet::new(); length];
        for t in tuples {
            for (i, &v) in t.iter().enumerate() {
                factors[i].insert(v);
            }
        }
        let product: u64 = factors.iter().map(|f| f.len() as u64).product();
        if product == tuples.len() as u64 {
            Some(factors)
        } else {
            None
        }
    }

    pub fn tuples(&self) -> impl Iterator<Item = &Vec<u32>> {
        self.tuples.iter()
    }

    pub fn contains(&self, t: &[u32]) -> bool {
        self.tuples.contains(t)
    }

    pub fn size(&self) -> usize {
        self.tuples.len()
    }

    pub fn factors(&self) -> Option<&[BTreeSet<u32>]> {
        self.rectangular.as_deref()
    }

    pub fn is_subset_of(&self, other: &Adversary) -> bool {
        self.tuples.is_subset(&other.tuples)
    }

    /// Single-tuple adversary.
    pub fn singleton(t: Vec<u32>) -> Self {
        let length = t.len();
        Adversary::from_tuples(length, [t])
    }

    /// The full adversary `A^m` over domain `1..=n`.
    pub fn full(n: u32, m: usize) -> Self {
        Adversary::rectangular(vec![(1..=n).collect(); m])
    }
}

/// A finite set of adversaries of one common length.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct AdversarySet {
    pub length: usize,
    adversaries: Vec<Adversary>,
}

impl AdversarySet {
    pub fn new(length: usize, adversaries: Vec<Adversary>) -> Self {
        let mut list = adversaries;
        for a in &list {
            assert_eq!(a.length, length, "adversary length mismatch");
        }
        list.sort();
        list.dedup();
        AdversarySet {
            length,
            adversaries: list,
        }
    }

    pub fn members(&self) -> &[Adversary] {
        &self.adversaries
    }

    /// Total tuple count over all member adversaries.
    pub fn width(&self) -> u64 {
        self.adversaries.iter().map(|a| a.size() as u64).sum()
    }

    /// Union of all member adversaries as one adversary.
    pub fn union(&self) -> Adversary {
        Adversary::from_tuples(
            self.length,
            self.adversaries
                .iter()
                .flat_map(|a| a.tuples().cloned())
                .collect::<Vec<_>>(),
        )
    }

    /// All tuples of all members as single-tuple adversaries.
    pub fn as_tuple_singletons(&self) -> AdversarySet {
        AdversarySet::new(
            self.length,
            self.union()
                .tuples()
                .map(|t| Adversary::singleton(t.clone()))
                .collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn digraph_sig() -> Signature {
        Signature::digraph()
    }

    #[test]
    fn instantiate_one_universal() {
        let sig = digraph_sig();
        let phi = PHSentence::parse("forall x forall y exists z : E(x,z) & E(y,z)", &sig).unwrap();
        let rho = BTreeMap::from([("x".to_string(), 1u32)]);
        let psi = phi.instantiate_universals(&rho).unwrap();
        assert_eq!(psi.prefix.len(), 2);
        assert_eq!(psi.to_string(), "forall y exists z : E(@1,z) & E(y,z)");
    }

    #[test]
    fn instantiate_total_and_empty() {
        let sig = digraph_sig();
        let phi = PHSentence::parse("forall x exists y : E(x,y)", &sig).unwrap();
        let total = BTreeMap::from([("x".to_string(), 2u32)]);
        let psi = phi.instantiate_universals(&total).unwrap();
        assert!(psi.is_pp());
        assert_eq!(psi.to_string(), "exists y : E(@2,y)");

        let same = phi.instantiate_universals(&BTreeMap::new()).unwrap();
        assert_eq!(same, phi);
    }

    #[test]
    fn instantiate_rejects_existentials() {
        let sig = digraph_sig();
        let phi = PHSentence::parse("forall x exists y : E(x,y)", &sig).unwrap();
        let rho = BTreeMap::from([("y".to_string(), 1u32)]);
        assert!(matches!(
            phi.instantiate_universals(&rho),
            Err(Error::NotUniversal(_))
        ));
    }

    #[test]
    fn rectangular_detection() {
        let adv = Adversary::from_tuples(2, vec![vec![1, 1], vec![1, 2], vec![2, 1], vec![2, 2]]);
        assert!(adv.factors().is_some());
        let adv = Adversary::from_tuples(2, vec![vec![1, 1], vec![2, 2]]);
        assert!(adv.factors().is_none());
    }

    #[test]
    fn width_is_total_tuple_count() {
        let a = Adversary::full(2, 2);
        let b = Adversary::singleton(vec![1, 1]);
        let set = AdversarySet::new(2, vec![a, b]);
        assert_eq!(set.width(), 5);
        assert_eq!(set.union().size(), 4);
        assert_eq!(set.as_tuple_singletons().members().len(), 4);
    }
}
