//! Finite relational structures with constants, products and powers,
//! canonical query/database conversion, and the pinned-homomorphism solver
//! used as the universal oracle by every other module.

mod parse;
mod solver;

pub use solver::{find_homomorphism, PinnedHomProblem};

use crate::budget::Budget;
use crate::error::{Error, Result};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

/// Relation and constant symbols. Elements of every structure over a
/// signature are the integers `1..=n`.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Signature {
    /// Relation symbols with their arities, sorted by name.
    pub relations: BTreeMap<String, usize>,
    /// Constant symbols, sorted by name.
    pub constants: BTreeSet<String>,
}

impl Signature {
    pub fn digraph() -> Self {
        let mut relations = BTreeMap::new();
        relations.insert("E".to_string(), 2);
        Signature {
            relations,
            constants: BTreeSet::new(),
        }
    }

    pub fn arity(&self, symbol: &str) -> Result<usize> {
        self.relations
            .get(symbol)
            .copied()
            .ok_or_else(|| Error::UnknownSymbol(symbol.to_string()))
    }

    /// The unique binary symbol of a digraph signature.
    pub fn sole_binary_symbol(&self) -> Result<&str> {
        let mut binary = self.relations.iter().filter(|(_, a)| **a == 2);
        match (binary.next(), binary.next()) {
            (Some((name, _)), None) if self.relations.len() == 1 => Ok(name),
            _ => Err(Error::NotADigraph),
        }
    }
}

/// One relation instance: a set of `arity`-length tuples stored flat and
/// sorted, so iteration order is deterministic.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Relation {
    pub arity: usize,
    data: Vec<u32>,
}

impl Relation {
    pub fn new(arity: usize) -> Self {
        Relation {
            arity,
            data: Vec::new(),
        }
    }

    pub fn from_tuples<I: IntoIterator<Item = Vec<u32>>>(arity: usize, tuples: I) -> Self {
        let mut rel = Relation::new(arity);
        for t in tuples {
            assert_eq!(t.len(), arity);
            rel.data.extend_from_slice(&t);
        }
        rel.normalize();
        rel
    }

    pub fn insert(&mut self, tuple: &[u32]) {
        assert_eq!(tuple.len(), self.arity);
        self.data.extend_from_slice(tuple);
        self.normalize();
    }

    fn normalize(&mut self) {
        if self.arity == 0 {
            return;
        }
        let mut tuples: Vec<&[u32]> = self.data.chunks(self.arity).collect();
        tuples.sort_unstable();
        tuples.dedup();
        let flat: Vec<u32> = tuples.into_iter().flatten().copied().collect();
        self.data = flat;
    }

    pub fn len(&self) -> usize {
        if self.arity == 0 {
            0
        } else {
            self.data.len() / self.arity
        }
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &[u32]> + '_ {
        self.data.chunks(self.arity)
    }

    pub fn contains(&self, tuple: &[u32]) -> bool {
        debug_assert_eq!(tuple.len(), self.arity);
        self.data
            .chunks(self.arity)
            .any(|t| t == tuple)
    }

    /// Binary-search membership; the tuple list is sorted.
    pub fn contains_sorted(&self, tuple: &[u32]) -> bool {
        let n = self.len();
        let mut lo = 0usize;
        let mut hi = n;
        while lo < hi {
            let mid = (lo + hi) / 2;
            let t = &self.data[mid * self.arity..(mid + 1) * self.arity];
            match t.cmp(tuple) {
                std::cmp::Ordering::Less => lo = mid + 1,
                std::cmp::Ordering::Greater => hi = mid,
                std::cmp::Ordering::Equal => return true,
            }
        }
        false
    }
}

/// A finite relational structure with named constants. Elements are `1..=n`.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Structure {
    pub signature: Signature,
    pub n: u32,
    pub relations: BTreeMap<String, Relation>,
    /// Interpretation of every constant symbol of the signature.
    pub constants: BTreeMap<String, u32>,
}

impl Structure {
    pub fn new(signature: Signature, n: u32) -> Self {
        let relations = signature
            .relations
            .iter()
            .map(|(name, &arity)| (name.clone(), Relation::new(arity)))
            .collect();
        Structure {
            signature,
            n,
            relations,
            constants: BTreeMap::new(),
        }
    }

    /// Digraph on `n` vertices from a list of directed edges.
    pub fn digraph(n: u32, edges: &[(u32, u32)]) -> Self {
        let mut s = Structure::new(Signature::digraph(), n);
        let rel = s.relations.get_mut("E").unwrap();
        for &(u, v) in edges {
            assert!(u >= 1 && u <= n && v >= 1 && v <= n);
            rel.insert(&[u, v]);
        }
        s
    }

    /// Undirected graph: inserts both orientations of every edge.
    pub fn graph(n: u32, edges: &[(u32, u32)]) -> Self {
        let mut list = Vec::new();
        for &(u, v) in edges {
            list.push((u, v));
            list.push((v, u));
        }
        Structure::digraph(n, &list)
    }

    pub fn elements(&self) -> impl Iterator<Item = u32> {
        1..=self.n
    }

    pub fn relation(&self, symbol: &str) -> Result<&Relation> {
        self.relations
            .get(symbol)
            .ok_or_else(|| Error::UnknownSymbol(symbol.to_string()))
    }

    pub fn edge_relation(&self) -> Result<&Relation> {
        let symbol = self.signature.sole_binary_symbol()?.to_string();
        self.relation(&symbol)
    }

    pub fn has_edge(&self, u: u32, v: u32) -> bool {
        self.edge_relation()
            .map(|r| r.contains_sorted(&[u, v]))
            .unwrap_or(false)
    }

    /// Expand with a constant naming every element (`v1`, `v2`, ...), the
    /// relational counterpart of restricting to idempotent polymorphisms.
    /// Existing constants are kept.
    pub fn with_all_constants(&self) -> Structure {
        let mut s = self.clone();
        let named: BTreeSet<u32> = s.constants.values().copied().collect();
        for e in 1..=s.n {
            if !named.contains(&e) {
                let name = format!("v{e}");
                assert!(
                    !s.signature.constants.contains(&name),
                    "constant name collision on {name}"
                );
                s.signature.constants.insert(name.clone());
                s.constants.insert(name, e);
            }
        }
        s
    }

    /// Expand with an extra relation (used to materialize pp-definable
    /// relations such as the EGP witness relation).
    pub fn with_relation(&self, name: &str, rel: Relation) -> Structure {
        let mut s = self.clone();
        s.signature.relations.insert(name.to_string(), rel.arity);
        s.relations.insert(name.to_string(), rel);
        s
    }

    /// First constant symbol naming `element`, if any.
    pub fn constant_for(&self, element: u32) -> Option<&str> {
        self.constants
            .iter()
            .find(|(_, &e)| e == element)
            .map(|(name, _)| name.as_str())
    }

    pub fn validate(&self) -> Result<()> {
        for (name, rel) in &self.relations {
            let arity = self.signature.arity(name)?;
            if rel.arity != arity {
                return Err(Error::ArityMismatch {
                    symbol: name.clone(),
                    expected: arity,
                    got: rel.arity,
                });
            }
            for t in rel.iter() {
                for &e in t {
                    if e < 1 || e > self.n {
                        return Err(Error::ElementOutOfRange {
                            element: e as u64,
                            domain: self.n,
                        });
                    }
                }
            }
        }
        for c in &self.signature.constants {
            match self.constants.get(c) {
                None => return Err(Error::UnknownSymbol(format!("uninterpreted constant {c}"))),
                Some(&e) if e < 1 || e > self.n => {
                    return Err(Error::ElementOutOfRange {
                        element: e as u64,
                        domain: self.n,
                    })
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Structure> {
        parse::parse_structure(text)
    }

    /// Emits the structure file grammar with sorted tuples; round-trips with
    /// [`Structure::parse`].
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "domain {};", self.n);
        for (name, rel) in &self.relations {
            let _ = write!(out, "rel {}/{} {{", name, rel.arity);
            let mut first = true;
            for t in rel.iter() {
                if !first {
                    let _ = write!(out, ";");
                }
                first = false;
                let _ = write!(
                    out,
                    " {}",
                    t.iter()
                        .map(|e| e.to_string())
                        .collect::<Vec<_>>()
                        .join(" ")
                );
            }
            let _ = writeln!(out, " }}");
        }
        for (name, e) in &self.constants {
            let _ = writeln!(out, "const {name} = {e};");
        }
        out
    }
}

/// Lexicographic numbering of the elements of a product: factor `0` is the
/// most significant digit. Kept alongside the product structure so powers can
/// be addressed both by element index and by coordinate tuple.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct ProductIndex {
    pub factor_sizes: Vec<u32>,
}

impl ProductIndex {
    pub fn power(n: u32, k: usize) -> Self {
        ProductIndex {
            factor_sizes: vec![n; k],
        }
    }

    pub fn len(&self) -> u64 {
        self.factor_sizes.iter().map(|&n| n as u64).product()
    }

    /// 1-based element index of a coordinate tuple.
    pub fn element_of(&self, tuple: &[u32]) -> u32 {
        debug_assert_eq!(tuple.len(), self.factor_sizes.len());
        let mut idx: u64 = 0;
        for (coord, &size) in tuple.iter().zip(&self.factor_sizes) {
            debug_assert!(*coord >= 1 && *coord <= size);
            idx = idx * size as u64 + (coord - 1) as u64;
        }
        (idx + 1) as u32
    }

    /// Coordinate tuple of a 1-based element index.
    pub fn tuple_of(&self, element: u32) -> Vec<u32> {
        let mut idx = (element - 1) as u64;
        let mut tuple = vec![0u32; self.factor_sizes.len()];
        for (slot, &size) in tuple.iter_mut().zip(&self.factor_sizes).rev() {
            *slot = (idx % size as u64) as u32 + 1;
            idx /= size as u64;
        }
        tuple
    }
}

/// Direct product of a nonempty sequence of structures over one signature.
/// A tuple is in a product relation iff it is in the relation coordinatewise
/// in every factor; constants are interpreted coordinatewise.
pub fn power_product(factors: &[&Structure], budget: &Budget) -> Result<(Structure, ProductIndex)> {
    let first = factors
        .first()
        .ok_or_else(|| Error::InvalidParameter("product of zero factors".into()))?;
    for f in factors {
        if f.signature != first.signature {
            return Err(Error::SignatureMismatch(
                "product factors carry different signatures".into(),
            ));
        }
    }
    let index = ProductIndex {
        factor_sizes: factors.iter().map(|f| f.n).collect(),
    };
    let size = index.len();
    budget.check_elements(size)?;

    let mut product = Structure::new(first.signature.clone(), size as u32);
    for (name, &arity) in first.signature.relations.clone().iter() {
        let per_factor: Vec<&Relation> = factors
            .iter()
            .map(|f| f.relations.get(name).unwrap())
            .collect();
        let count: u64 = per_factor.iter().map(|r| r.len() as u64).product();
        // Relation tuples of the product are one choice of tuple per factor;
        // cap by the element budget as well (they are materialized).
        budget.check_elements(count)?;
        let mut data: Vec<u32> = Vec::with_capacity((count as usize) * arity);
        let mut choice = vec![0usize; factors.len()];
        if per_factor.iter().all(|r| !r.is_empty()) {
            loop {
                for pos in 0..arity {
                    let mut coords = Vec::with_capacity(factors.len());
                    for (fi, rel) in per_factor.iter().enumerate() {
                        let t = rel
                            .iter()
                            .nth(choice[fi])
                            .expect("choice index in range");
                        coords.push(t[pos]);
                    }
                    data.push(index.element_of(&coords));
                }
                // odometer over per-factor tuple choices
                let mut fi = factors.len();
                loop {
                    if fi == 0 {
                        choice.clear();
                        break;
                    }
                    fi -= 1;
                    choice[fi] += 1;
                    if choice[fi] < per_factor[fi].len() {
                        break;
                    }
                    choice[fi] = 0;
                }
                if choice.is_empty() {
                    break;
                }
            }
        }
        let rel = Relation::from_tuples(arity, data.chunks(arity).map(|c| c.to_vec()));
        product.relations.insert(name.clone(), rel);
    }
    for c in first.signature.constants.iter() {
        let coords: Vec<u32> = factors.iter().map(|f| f.constants[c]).collect();
        product.constants.insert(c.clone(), index.element_of(&coords));
    }
    Ok((product, index))
}

/// `A^k` with its coordinate index.
pub fn power(a: &Structure, k: usize, budget: &Budget) -> Result<(Structure, ProductIndex)> {
    let factors: Vec<&Structure> = std::iter::repeat(a).take(k).collect();
    power_product(&factors, budget)
}

/// Quantifier-free conjunction extracted from a structure: one variable per
/// element, one conjunct per relation tuple.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CanonicalQuery {
    /// `vars[i]` is the variable name for element `i+1`.
    pub vars: Vec<String>,
    /// Atoms as (relation symbol, element tuple); arguments refer to `vars`.
    pub atoms: Vec<(String, Vec<u32>)>,
    /// Elements designated by constant symbols, by symbol name.
    pub constant_elements: BTreeMap<String, u32>,
}

pub fn canonical_query(a: &Structure) -> CanonicalQuery {
    let vars = (1..=a.n).map(|e| format!("x{e}")).collect();
    let mut atoms = Vec::new();
    for (name, rel) in &a.relations {
        for t in rel.iter() {
            atoms.push((name.clone(), t.to_vec()));
        }
    }
    CanonicalQuery {
        vars,
        atoms,
        constant_elements: a.constants.clone(),
    }
}

/// Canonical database of a conjunction of relational atoms: the structure
/// whose domain is the variables and whose tuples are the atoms. Returns the
/// structure together with the variable name of each element.
///
/// Equality atoms are rejected; they must be eliminated upstream by variable
/// merging.
pub fn canonical_database(
    atoms: &[(String, Vec<String>)],
    signature: &Signature,
) -> Result<(Structure, Vec<String>)> {
    let mut var_names: Vec<String> = Vec::new();
    let mut var_ids: BTreeMap<String, u32> = BTreeMap::new();
    for (symbol, args) in atoms {
        if symbol == "=" {
            return Err(Error::EqualityAtom);
        }
        let arity = signature.arity(symbol)?;
        if args.len() != arity {
            return Err(Error::ArityMismatch {
                symbol: symbol.clone(),
                expected: arity,
                got: args.len(),
            });
        }
        for v in args {
            if !var_ids.contains_key(v) {
                var_names.push(v.clone());
                var_ids.insert(v.clone(), var_names.len() as u32);
            }
        }
    }
    let mut db = Structure::new(
        Signature {
            relations: signature.relations.clone(),
            constants: BTreeSet::new(),
        },
        var_names.len() as u32,
    );
    for (symbol, args) in atoms {
        let tuple: Vec<u32> = args.iter().map(|v| var_ids[v]).collect();
        db.relations.get_mut(symbol).unwrap().insert(&tuple);
    }
    Ok((db, var_names))
}

/// Distance between two `m`-tuples over a digraph: the least `r` such that
/// every coordinate admits a walk of length exactly `r` from `s` to `t`
/// (`r = 0` iff `s = t`). Walks in different coordinates are independent.
/// Returns `None` when no common length exists within the `n * m` bound.
pub fn tuple_distance(g: &Structure, s: &[u32], t: &[u32]) -> Result<Option<u32>> {
    if s.len() != t.len() {
        return Err(Error::LengthMismatch(s.len(), t.len()));
    }
    let edges = g.edge_relation()?;
    for &e in s.iter().chain(t.iter()) {
        if e < 1 || e > g.n {
            return Err(Error::ElementOutOfRange {
                element: e as u64,
                domain: g.n,
            });
        }
    }
    if s == t {
        return Ok(Some(0));
    }
    let n = g.n as usize;
    let mut succ: Vec<Vec<u32>> = vec![Vec::new(); n + 1];
    for e in edges.iter() {
        succ[e[0] as usize].push(e[1]);
    }
    let bound = g.n * s.len() as u32;
    // reach[i] = set of vertices reachable from s[i] by a walk of the current
    // exact length
    let mut reach: Vec<Vec<bool>> = s
        .iter()
        .map(|&v| {
            let mut row = vec![false; n + 1];
            row[v as usize] = true;
            row
        })
        .collect();
    for r in 1..=bound {
        for row in reach.iter_mut() {
            let mut next = vec![false; n + 1];
            for v in 1..=n {
                if row[v] {
                    for &w in &succ[v] {
                        next[w as usize] = true;
                    }
                }
            }
            *row = next;
        }
        if reach
            .iter()
            .zip(t.iter())
            .all(|(row, &goal)| row[goal as usize])
        {
            return Ok(Some(r));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    #[test]
    fn product_of_k2_with_itself() {
        let k2 = catalog::k2();
        let budget = Budget::default();
        let (sq, idx) = power(&k2, 2, &budget).unwrap();
        assert_eq!(sq.n, 4);
        // E pairs (1,1)<->(2,2) and (1,2)<->(2,1), expanded by hand from the
        // coordinatewise definition.
        let e11 = idx.element_of(&[1, 1]);
        let e22 = idx.element_of(&[2, 2]);
        let e12 = idx.element_of(&[1, 2]);
        let e21 = idx.element_of(&[2, 1]);
        let rel = sq.relation("E").unwrap();
        assert_eq!(rel.len(), 4);
        assert!(rel.contains_sorted(&[e11, e22]));
        assert!(rel.contains_sorted(&[e22, e11]));
        assert!(rel.contains_sorted(&[e12, e21]));
        assert!(rel.contains_sorted(&[e21, e12]));
    }

    #[test]
    fn product_with_one_element_total_structure() {
        let dc3 = catalog::dc3();
        let mut one = Structure::new(Signature::digraph(), 1);
        one.relations.get_mut("E").unwrap().insert(&[1, 1]);
        let budget = Budget::default();
        let (p, idx) = power_product(&[&dc3, &one], &budget).unwrap();
        assert_eq!(p.n, 3);
        let rel = p.relation("E").unwrap();
        assert_eq!(rel.len(), 3);
        for e in dc3.relation("E").unwrap().iter() {
            let u = idx.element_of(&[e[0], 1]);
            let v = idx.element_of(&[e[1], 1]);
            assert!(rel.contains_sorted(&[u, v]));
        }
    }

    #[test]
    fn dc3_squared_has_nine_elements_and_nine_edges() {
        let dc3 = catalog::dc3();
        let (sq, _) = power(&dc3, 2, &Budget::default()).unwrap();
        assert_eq!(sq.n, 9);
        assert_eq!(sq.relation("E").unwrap().len(), 9);
    }

    #[test]
    fn product_budget_is_a_hard_error() {
        let dc3 = catalog::dc3();
        let tight = Budget::new(8, 1000);
        let err = power(&dc3, 2, &tight).unwrap_err();
        assert!(err.is_budget());
    }

    #[test]
    fn projections_of_products_are_homomorphisms() {
        let budget = Budget::default();
        for a in [catalog::k2(), catalog::dc3(), catalog::path("1001")] {
            let (sq, idx) = power(&a, 2, &budget).unwrap();
            for coord in 0..2 {
                for (name, rel) in &sq.relations {
                    let target = a.relation(name).unwrap();
                    for t in rel.iter() {
                        let image: Vec<u32> =
                            t.iter().map(|&e| idx.tuple_of(e)[coord]).collect();
                        assert!(target.contains_sorted(&image));
                    }
                }
            }
        }
    }

    #[test]
    fn canonical_query_examples() {
        let k2 = catalog::k2();
        let q = canonical_query(&k2);
        assert_eq!(q.vars, vec!["x1", "x2"]);
        assert_eq!(
            q.atoms,
            vec![
                ("E".to_string(), vec![1, 2]),
                ("E".to_string(), vec![2, 1])
            ]
        );

        let loop1 = Structure::digraph(1, &[(1, 1)]);
        let q = canonical_query(&loop1);
        assert_eq!(q.atoms, vec![("E".to_string(), vec![1, 1])]);

        let dc3 = catalog::dc3();
        assert_eq!(canonical_query(&dc3).atoms.len(), 3);
    }

    #[test]
    fn canonical_database_examples() {
        let sig = Signature::digraph();
        let atoms = vec![
            ("E".to_string(), vec!["x".to_string(), "y".to_string()]),
            ("E".to_string(), vec!["y".to_string(), "x".to_string()]),
        ];
        let (db, vars) = canonical_database(&atoms, &sig).unwrap();
        assert_eq!(db.n, 2);
        assert_eq!(vars, vec!["x", "y"]);
        assert_eq!(db.relation("E").unwrap().len(), 2);

        let atoms = vec![("E".to_string(), vec!["x".to_string(), "x".to_string()])];
        let (db, _) = canonical_database(&atoms, &sig).unwrap();
        assert_eq!(db.n, 1);
        assert!(db.relation("E").unwrap().contains_sorted(&[1, 1]));

        let atoms = vec![("=".to_string(), vec!["x".to_string(), "y".to_string()])];
        assert!(matches!(
            canonical_database(&atoms, &sig),
            Err(Error::EqualityAtom)
        ));
    }

    #[test]
    fn canonical_roundtrip_is_identity_up_to_renaming() {
        for a in [catalog::dc3(), catalog::path("1001"), catalog::k2()] {
            let q = canonical_query(&a);
            let atoms: Vec<(String, Vec<String>)> = q
                .atoms
                .iter()
                .map(|(r, t)| {
                    (
                        r.clone(),
                        t.iter().map(|&e| q.vars[(e - 1) as usize].clone()).collect(),
                    )
                })
                .collect();
            let (db, vars) = canonical_database(&atoms, &a.signature).unwrap();
            // Variables may come back in first-occurrence order; map back.
            let mut back = BTreeMap::new();
            for (i, v) in vars.iter().enumerate() {
                let orig = q.vars.iter().position(|w| w == v).unwrap() as u32 + 1;
                back.insert(i as u32 + 1, orig);
            }
            // isolated elements have no atoms and are dropped by the database
            assert!(db.n <= a.n);
            for (name, rel) in &db.relations {
                let orig_rel = a.relation(name).unwrap();
                assert_eq!(rel.len(), orig_rel.len());
                for t in rel.iter() {
                    let mapped: Vec<u32> = t.iter().map(|e| back[e]).collect();
                    assert!(orig_rel.contains_sorted(&mapped));
                }
            }
        }
    }

    #[test]
    fn tuple_distance_examples() {
        let p1001 = catalog::path("1001");
        assert_eq!(
            tuple_distance(&p1001, &[1, 4], &[2, 3]).unwrap(),
            Some(1)
        );
        assert_eq!(tuple_distance(&p1001, &[2, 3], &[2, 3]).unwrap(), Some(0));

        let p01 = catalog::path("01");
        assert_eq!(tuple_distance(&p01, &[1], &[2]).unwrap(), Some(1));
        // 1 -> 2 -> 1 or padding at the loop on 2: even walks return to 1
        assert_eq!(tuple_distance(&p01, &[1], &[1]).unwrap(), Some(0));

        assert!(matches!(
            tuple_distance(&p01, &[1, 2], &[1]),
            Err(Error::LengthMismatch(2, 1))
        ));
    }

    #[test]
    fn tuple_distance_symmetry_and_product_agreement() {
        let budget = Budget::default();
        for beta in ["1001", "0110", "10101"] {
            let g = catalog::path(beta);
            let n = g.n;
            let (sq, idx) = power(&g, 2, &budget).unwrap();
            for s1 in 1..=n {
                for s2 in 1..=n {
                    for t1 in 1..=n {
                        for t2 in 1..=n {
                            let s = [s1, s2];
                            let t = [t1, t2];
                            let d = tuple_distance(&g, &s, &t).unwrap();
                            let d_rev = tuple_distance(&g, &t, &s).unwrap();
                            assert_eq!(d, d_rev, "symmetric edge relation");
                            let ds = [idx.element_of(&s)];
                            let dt = [idx.element_of(&t)];
                            let d_sq = tuple_distance(&sq, &ds, &dt).unwrap();
                            assert_eq!(d, d_sq, "pointwise = product distance");
                        }
                    }
                }
            }
        }
    }
}
