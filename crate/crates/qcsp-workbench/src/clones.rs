//! Finitary operations as lookup tables: polymorphism testing, constrained
//! enumeration, special-operation classification, subpower membership via
//! the pinned-homomorphism oracle, generation of full powers, and the
//! minimal-generating-set probe.

use crate::budget::Budget;
use crate::error::{Error, Result};
use crate::structures::{power, PinnedHomProblem, Structure};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

/// A k-ary operation on `1..=n` stored as a total lookup table in
/// lexicographic argument order (first argument most significant).
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct OpTable {
    pub arity: usize,
    pub n: u32,
    values: Vec<u32>,
}

impl OpTable {
    pub fn new(arity: usize, n: u32, values: Vec<u32>) -> Result<OpTable> {
        let expected = (n as u64).checked_pow(arity as u32);
        if expected != Some(values.len() as u64) {
            return Err(Error::InvalidParameter(format!(
                "table needs {} values, got {}",
                expected.map_or("overflow".to_string(), |e| e.to_string()),
                values.len()
            )));
        }
        for &v in &values {
            if v < 1 || v > n {
                return Err(Error::ElementOutOfRange {
                    element: v as u64,
                    domain: n,
                });
            }
        }
        Ok(OpTable { arity, n, values })
    }

    pub fn values(&self) -> &[u32] {
        &self.values
    }

    pub fn index_of(&self, args: &[u32]) -> usize {
        debug_assert_eq!(args.len(), self.arity);
        let mut idx = 0usize;
        for &a in args {
            debug_assert!(a >= 1 && a <= self.n);
            idx = idx * self.n as usize + (a - 1) as usize;
        }
        idx
    }

    pub fn apply(&self, args: &[u32]) -> u32 {
        self.values[self.index_of(args)]
    }

    pub fn args_of(&self, mut idx: usize) -> Vec<u32> {
        let mut args = vec![0u32; self.arity];
        for slot in args.iter_mut().rev() {
            *slot = (idx % self.n as usize) as u32 + 1;
            idx /= self.n as usize;
        }
        args
    }

    /// The i-th projection (0-based position).
    pub fn projection(arity: usize, n: u32, position: usize) -> OpTable {
        let size = (n as usize).pow(arity as u32);
        let mut values = vec![0u32; size];
        let mut table = OpTable { arity, n, values: vec![1; size] };
        for idx in 0..size {
            values[idx] = table.args_of(idx)[position];
        }
        table.values = values;
        table
    }

    /// Binary table from a row-major matrix: `matrix[u-1][v-1] = f(u, v)`.
    pub fn from_matrix(matrix: &[Vec<u32>]) -> Result<OpTable> {
        let n = matrix.len() as u32;
        let mut values = Vec::with_capacity((n * n) as usize);
        for row in matrix {
            if row.len() != n as usize {
                return Err(Error::InvalidParameter("matrix is not square".into()));
            }
            values.extend_from_slice(row);
        }
        OpTable::new(2, n, values)
    }

    pub fn is_idempotent(&self) -> bool {
        (1..=self.n).all(|x| self.apply(&vec![x; self.arity]) == x)
    }

    pub fn is_surjective(&self) -> bool {
        let mut seen = vec![false; self.n as usize + 1];
        for &v in &self.values {
            seen[v as usize] = true;
        }
        (1..=self.n).all(|x| seen[x as usize])
    }

    /// `op <name> arity <k> domain <n>` then the values in lexicographic
    /// argument order.
    pub fn serialize(&self, name: &str) -> String {
        let mut out = format!("op {name} arity {} domain {}\n", self.arity, self.n);
        for (i, v) in self.values.iter().enumerate() {
            if i > 0 {
                let sep = if i % self.n as usize == 0 { '\n' } else { ' ' };
                out.push(sep);
            }
            let _ = write!(out, "{v}");
        }
        out.push('\n');
        out
    }

    pub fn parse(text: &str) -> Result<(String, OpTable)> {
        let mut words = text.split_whitespace();
        let err = |msg: &str| Error::Parse {
            line: 1,
            msg: msg.to_string(),
        };
        if words.next() != Some("op") {
            return Err(err("expected `op`"));
        }
        let name = words.next().ok_or_else(|| err("expected a name"))?;
        if words.next() != Some("arity") {
            return Err(err("expected `arity`"));
        }
        let arity: usize = words
            .next()
            .and_then(|w| w.parse().ok())
            .ok_or_else(|| err("expected the arity"))?;
        if words.next() != Some("domain") {
            return Err(err("expected `domain`"));
        }
        let n: u32 = words
            .next()
            .and_then(|w| w.parse().ok())
            .ok_or_else(|| err("expected the domain size"))?;
        let values: Vec<u32> = words
            .map(|w| w.parse().map_err(|_| err("expected a value")))
            .collect::<Result<_>>()?;
        Ok((name.to_string(), OpTable::new(arity, n, values)?))
    }
}

/// Is `f` a homomorphism from `A^k` to `A`? Checked directly on the table:
/// every k-column matrix of relation tuples must map rowwise into the
/// relation, and every constant must be fixed on the diagonal.
pub fn is_polymorphism(f: &OpTable, a: &Structure) -> Result<bool> {
    if f.n != a.n {
        return Err(Error::DomainMismatch {
            expected: a.n,
            got: f.n,
        });
    }
    for (_, rel) in &a.relations {
        let tuples: Vec<&[u32]> = rel.iter().collect();
        if tuples.is_empty() {
            continue;
        }
        let k = f.arity;
        let mut choice = vec![0usize; k];
        let mut args = vec![0u32; k];
        let mut image = vec![0u32; rel.arity];
        loop {
            for pos in 0..rel.arity {
                for (j, &c) in choice.iter().enumerate() {
                    args[j] = tuples[c][pos];
                }
                image[pos] = f.apply(&args);
            }
            if !rel.contains_sorted(&image) {
                return Ok(false);
            }
            let mut j = k;
            loop {
                if j == 0 {
                    return is_polymorphism_constants(f, a);
                }
                j -= 1;
                choice[j] += 1;
                if choice[j] < tuples.len() {
                    break;
                }
                choice[j] = 0;
            }
        }
    }
    is_polymorphism_constants(f, a)
}

fn is_polymorphism_constants(f: &OpTable, a: &Structure) -> Result<bool> {
    for &c in a.constants.values() {
        if f.apply(&vec![c; f.arity]) != c {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Structural tags recognised on an operation table.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub enum OpTag {
    Projection(usize),
    EssentiallyUnary,
    Majority,
    DualDiscriminator,
    Maltsev,
    NearUnanimity(usize),
    SemilatticeWithUnit(u32),
    Hubie(u32),
}

impl std::fmt::Display for OpTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            OpTag::Projection(i) => write!(f, "projection({})", i + 1),
            OpTag::EssentiallyUnary => write!(f, "essentially_unary"),
            OpTag::Majority => write!(f, "majority"),
            OpTag::DualDiscriminator => write!(f, "dual_discriminator"),
            OpTag::Maltsev => write!(f, "maltsev"),
            OpTag::NearUnanimity(k) => write!(f, "near_unanimity({k})"),
            OpTag::SemilatticeWithUnit(x) => write!(f, "semilattice_with_unit({x})"),
            OpTag::Hubie(x) => write!(f, "hubie({x})"),
        }
    }
}

/// Every applicable tag, each decided by checking its defining identities
/// over the whole table.
pub fn classify_operation(f: &OpTable) -> BTreeSet<OpTag> {
    let mut tags = BTreeSet::new();
    let n = f.n;
    let k = f.arity;

    for pos in 0..k {
        if (0..f.values.len()).all(|idx| f.values[idx] == f.args_of(idx)[pos]) {
            tags.insert(OpTag::Projection(pos));
        }
    }
    'unary: for pos in 0..k {
        let mut g: Vec<Option<u32>> = vec![None; n as usize + 1];
        for idx in 0..f.values.len() {
            let a = f.args_of(idx)[pos];
            match g[a as usize] {
                None => g[a as usize] = Some(f.values[idx]),
                Some(v) if v == f.values[idx] => {}
                Some(_) => continue 'unary,
            }
        }
        tags.insert(OpTag::EssentiallyUnary);
        break;
    }

    if k == 3 {
        let majority = (1..=n).all(|x| {
            (1..=n).all(|y| {
                f.apply(&[x, x, y]) == x && f.apply(&[x, y, x]) == x && f.apply(&[y, x, x]) == x
            })
        });
        if majority {
            tags.insert(OpTag::Majority);
            let dd = (1..=n).all(|x| {
                (1..=n).all(|y| {
                    (1..=n).all(|z| {
                        x == y || y == z || x == z || f.apply(&[x, y, z]) == x
                    })
                })
            });
            if dd {
                tags.insert(OpTag::DualDiscriminator);
            }
        }
        let maltsev =
            (1..=n).all(|x| (1..=n).all(|y| f.apply(&[x, x, y]) == y && f.apply(&[y, x, x]) == y));
        if maltsev {
            tags.insert(OpTag::Maltsev);
        }
    }

    if k >= 3 {
        let nu = (0..k).all(|pos| {
            (1..=n).all(|x| {
                (1..=n).all(|y| {
                    let mut args = vec![x; k];
                    args[pos] = y;
                    f.apply(&args) == x
                })
            })
        });
        if nu {
            tags.insert(OpTag::NearUnanimity(k));
        }
    }

    if k == 2 {
        let idempotent = f.is_idempotent();
        let commutative = (1..=n).all(|x| (1..=n).all(|y| f.apply(&[x, y]) == f.apply(&[y, x])));
        let associative = (1..=n).all(|x| {
            (1..=n).all(|y| {
                (1..=n).all(|z| {
                    f.apply(&[f.apply(&[x, y]), z]) == f.apply(&[x, f.apply(&[y, z])])
                })
            })
        });
        if idempotent && commutative && associative {
            for x in 1..=n {
                if (1..=n).all(|y| f.apply(&[x, y]) == y) {
                    tags.insert(OpTag::SemilatticeWithUnit(x));
                }
            }
        }
    }

    if f.is_surjective() {
        for x in 1..=n {
            if f.apply(&vec![x; k]) != x {
                continue;
            }
            let hubie = (0..k).all(|pos| {
                let mut seen = vec![false; n as usize + 1];
                let mut args = vec![1u32; k];
                // enumerate all argument tuples with position `pos` fixed to x
                let total = (n as usize).pow((k - 1) as u32);
                for code in 0..total {
                    let mut c = code;
                    for (j, slot) in args.iter_mut().enumerate() {
                        if j == pos {
                            *slot = x;
                        } else {
                            *slot = (c % n as usize) as u32 + 1;
                            c /= n as usize;
                        }
                    }
                    seen[f.apply(&args) as usize] = true;
                }
                (1..=n).all(|v| seen[v as usize])
            });
            if hubie {
                tags.insert(OpTag::Hubie(x));
            }
        }
    }
    tags
}

/// Filters for constrained enumeration. Each filter both pre-assigns the
/// cells its identities pin down and re-checks the finished table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolyFilter {
    Any,
    Majority,
    Maltsev,
    NearUnanimity,
    Hubie(u32),
    SemilatticeWithUnit(u32),
}

impl PolyFilter {
    fn pre_assign(&self, arity: usize, n: u32) -> Result<Vec<(Vec<u32>, u32)>> {
        let mut pins = Vec::new();
        match self {
            PolyFilter::Any => {}
            PolyFilter::Majority => {
                if arity != 3 {
                    return Err(Error::InvalidParameter("majority filter needs arity 3".into()));
                }
                for x in 1..=n {
                    for y in 1..=n {
                        pins.push((vec![x, x, y], x));
                        pins.push((vec![x, y, x], x));
                        pins.push((vec![y, x, x], x));
                    }
                }
            }
            PolyFilter::Maltsev => {
                if arity != 3 {
                    return Err(Error::InvalidParameter("maltsev filter needs arity 3".into()));
                }
                for x in 1..=n {
                    for y in 1..=n {
                        pins.push((vec![x, x, y], y));
                        pins.push((vec![y, x, x], y));
                    }
                }
            }
            PolyFilter::NearUnanimity => {
                if arity < 3 {
                    return Err(Error::InvalidParameter(
                        "near-unanimity filter needs arity >= 3".into(),
                    ));
                }
                for pos in 0..arity {
                    for x in 1..=n {
                        for y in 1..=n {
                            let mut args = vec![x; arity];
                            args[pos] = y;
                            pins.push((args, x));
                        }
                    }
                }
            }
            PolyFilter::Hubie(x) => {
                pins.push((vec![*x; arity], *x));
            }
            PolyFilter::SemilatticeWithUnit(x) => {
                if arity != 2 {
                    return Err(Error::InvalidParameter(
                        "semilattice filter needs arity 2".into(),
                    ));
                }
                for y in 1..=n {
                    pins.push((vec![*x, y], y));
                    pins.push((vec![y, *x], y));
                }
            }
        }
        Ok(pins)
    }

    fn accepts(&self, f: &OpTable) -> bool {
        let tags = classify_operation(f);
        match self {
            PolyFilter::Any => true,
            PolyFilter::Majority => tags.contains(&OpTag::Majority),
            PolyFilter::Maltsev => tags.contains(&OpTag::Maltsev),
            PolyFilter::NearUnanimity => tags.contains(&OpTag::NearUnanimity(f.arity)),
            PolyFilter::Hubie(x) => tags.contains(&OpTag::Hubie(*x)),
            PolyFilter::SemilatticeWithUnit(x) => {
                tags.contains(&OpTag::SemilatticeWithUnit(*x))
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct Enumeration {
    pub tables: Vec<OpTable>,
    /// Set when the `limit` cut the enumeration short.
    pub truncated: bool,
}

/// Complete backtracking enumeration, in lexicographic cell order with
/// incremental relational propagation, of the polymorphisms of `a` that
/// preserve its constants and satisfy the filter. With all constants present
/// this is exactly the idempotent polymorphism enumeration.
pub fn enumerate_polymorphisms(
    a: &Structure,
    arity: usize,
    filter: PolyFilter,
    limit: usize,
    budget: &Budget,
) -> Result<Enumeration> {
    let n = a.n;
    let cells = (n as u64).checked_pow(arity as u32).ok_or_else(|| {
        Error::InvalidParameter("table size overflows".into())
    })?;
    budget.check_elements(cells)?;
    let cells = cells as usize;

    let scratch = OpTable {
        arity,
        n,
        values: vec![1; cells],
    };

    // fixed cells: constants and filter identities
    let mut fixed: Vec<Option<u32>> = vec![None; cells];
    for &c in a.constants.values() {
        fixed[scratch.index_of(&vec![c; arity])] = Some(c);
    }
    for (args, v) in filter.pre_assign(arity, n)? {
        let idx = scratch.index_of(&args);
        match fixed[idx] {
            Some(old) if old != v => return Ok(Enumeration { tables: vec![], truncated: false }),
            _ => fixed[idx] = Some(v),
        }
    }

    // all matrices of relation tuples, indexed by the last cell they touch
    struct Check {
        rel: usize,
        cells: Vec<usize>,
    }
    let rels: Vec<&crate::structures::Relation> = a.relations.values().collect();
    let mut checks_by_last: Vec<Vec<Check>> = Vec::new();
    checks_by_last.resize_with(cells, Vec::new);
    for (ri, rel) in rels.iter().enumerate() {
        let tuples: Vec<&[u32]> = rel.iter().collect();
        if tuples.is_empty() {
            continue;
        }
        let mut choice = vec![0usize; arity];
        loop {
            let mut cell_list = Vec::with_capacity(rel.arity);
            for pos in 0..rel.arity {
                let args: Vec<u32> = choice.iter().map(|&c| tuples[c][pos]).collect();
                cell_list.push(scratch.index_of(&args));
            }
            let last = *cell_list.iter().max().unwrap();
            checks_by_last[last].push(Check {
                rel: ri,
                cells: cell_list,
            });
            let mut j = arity;
            let mut done = false;
            loop {
                if j == 0 {
                    done = true;
                    break;
                }
                j -= 1;
                choice[j] += 1;
                if choice[j] < tuples.len() {
                    break;
                }
                choice[j] = 0;
            }
            if done {
                break;
            }
        }
    }

    let meter = budget.meter();
    let mut values = vec![0u32; cells];
    let mut out = Vec::new();
    let mut truncated = false;

    // iterative backtracking over cells
    let mut cell = 0usize;
    let mut candidate = vec![1u32; cells];
    'search: loop {
        if cell == cells {
            let table = OpTable {
                arity,
                n,
                values: values.clone(),
            };
            if filter.accepts(&table) {
                if out.len() == limit {
                    truncated = true;
                } else {
                    out.push(table);
                }
            }
            if truncated {
                break;
            }
            // backtrack to find the next assignment
            loop {
                if cell == 0 {
                    break 'search;
                }
                cell -= 1;
                if fixed[cell].is_none() && values[cell] < n {
                    candidate[cell] = values[cell] + 1;
                    break;
                }
            }
            continue;
        }
        let start = if fixed[cell].is_some() {
            fixed[cell].unwrap()
        } else {
            candidate[cell]
        };
        let mut assigned = false;
        let mut v = start;
        while v <= n {
            meter.tick()?;
            values[cell] = v;
            let ok = checks_by_last[cell].iter().all(|check| {
                let rel = rels[check.rel];
                let image: Vec<u32> = check.cells.iter().map(|&c| values[c]).collect();
                rel.contains_sorted(&image)
            });
            if ok {
                assigned = true;
                break;
            }
            if fixed[cell].is_some() {
                break;
            }
            v += 1;
        }
        if assigned {
            cell += 1;
            if cell < cells {
                candidate[cell] = 1;
            }
        } else {
            values[cell] = 0;
            loop {
                if cell == 0 {
                    break 'search;
                }
                cell -= 1;
                if fixed[cell].is_none() && values[cell] < n {
                    candidate[cell] = values[cell] + 1;
                    break;
                }
                values[cell] = 0;
            }
        }
    }
    Ok(Enumeration {
        tables: out,
        truncated,
    })
}

/// First polymorphism of `a` that is a Hubie operation with source `x` at
/// the given arity, or a completeness-guaranteed `None`: the underlying
/// enumeration is exhaustive.
pub fn find_hubie_polymorphism(
    a: &Structure,
    x: u32,
    arity: usize,
    budget: &Budget,
) -> Result<Option<OpTable>> {
    let found = enumerate_polymorphisms(a, arity, PolyFilter::Hubie(x), 1, budget)?;
    Ok(found.tables.into_iter().next())
}

/// Tuples over the domain that generate a power.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct GeneratorSet {
    pub m: usize,
    tuples: BTreeSet<Vec<u32>>,
}

impl GeneratorSet {
    pub fn new<I: IntoIterator<Item = Vec<u32>>>(m: usize, tuples: I) -> Self {
        let tuples: BTreeSet<Vec<u32>> = tuples.into_iter().collect();
        assert!(!tuples.is_empty(), "generator set may not be empty");
        for t in &tuples {
            assert_eq!(t.len(), m);
        }
        GeneratorSet { m, tuples }
    }

    pub fn tuples(&self) -> impl Iterator<Item = &Vec<u32>> {
        self.tuples.iter()
    }

    pub fn contains(&self, t: &[u32]) -> bool {
        self.tuples.contains(t)
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn sorted(&self) -> Vec<Vec<u32>> {
        self.tuples.iter().cloned().collect()
    }
}

/// Witness that a tuple lies in the subpower generated by a set: an
/// operation applied to the generators yields the tuple pointwise.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct MembershipCertificate {
    pub target: Vec<u32>,
    pub generators: Vec<Vec<u32>>,
    pub op: OpTable,
}

impl MembershipCertificate {
    pub fn verify(&self, a: &Structure) -> Result<()> {
        if !is_polymorphism(&self.op, a)? {
            return Err(Error::BadCertificate(
                "membership operation is not a polymorphism".into(),
            ));
        }
        let m = self.target.len();
        for j in 0..m {
            let args: Vec<u32> = self.generators.iter().map(|g| g[j]).collect();
            if self.op.apply(&args) != self.target[j] {
                return Err(Error::BadCertificate(format!(
                    "pointwise equation fails at coordinate {}",
                    j + 1
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub enum Membership {
    In(MembershipCertificate),
    Out,
    /// The decision exceeded a budget; never reported as `Out`.
    Unknown(String),
}

impl Membership {
    pub fn is_in(&self) -> bool {
        matches!(self, Membership::In(_))
    }
}

/// Is `t` in the subpower of `A^m` generated by `s` under the polymorphisms
/// preserving `a`'s constants? Decided by one pinned-homomorphism search
/// from `A^|s|` to `A`, pinning the generator columns to `t`'s entries.
pub fn subpower_membership(
    a: &Structure,
    s: &GeneratorSet,
    t: &[u32],
    budget: &Budget,
) -> Result<Membership> {
    if t.len() != s.m {
        return Err(Error::LengthMismatch(t.len(), s.m));
    }
    if s.contains(t) {
        // the relevant projection certifies membership outright
        let gens = s.sorted();
        let pos = gens.iter().position(|g| g.as_slice() == t).unwrap();
        return Ok(Membership::In(MembershipCertificate {
            target: t.to_vec(),
            generators: gens.clone(),
            op: OpTable::projection(gens.len(), a.n, pos),
        }));
    }
    let gens = s.sorted();
    let k = gens.len();
    let (pow, idx) = match power(a, k, budget) {
        Ok(p) => p,
        Err(e) if e.is_budget() => return Ok(Membership::Unknown(e.to_string())),
        Err(e) => return Err(e),
    };
    let mut problem = PinnedHomProblem::new(pow, a.clone());
    for j in 0..s.m {
        let column: Vec<u32> = gens.iter().map(|g| g[j]).collect();
        let element = idx.element_of(&column);
        // two equal columns with different targets cannot have a hom
        if let Some(&prev) = problem.pins.get(&element) {
            if prev != t[j] {
                return Ok(Membership::Out);
            }
        }
        problem.pins.insert(element, t[j]);
    }
    match crate::structures::find_homomorphism(&problem, budget) {
        Ok(Some(hom)) => {
            let op = OpTable::new(k, a.n, hom)?;
            Ok(Membership::In(MembershipCertificate {
                target: t.to_vec(),
                generators: gens,
                op,
            }))
        }
        Ok(None) => Ok(Membership::Out),
        Err(e) if e.is_budget() => Ok(Membership::Unknown(e.to_string())),
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Generates {
    All,
    /// Lexicographically least tuple outside the generated subpower.
    Counterexample(Vec<u32>),
}

impl Generates {
    pub fn is_all(&self) -> bool {
        matches!(self, Generates::All)
    }
}

/// Does the set generate all of `A^m`? On failure reports the least missing
/// tuple. Budget exhaustion is a hard error, never a `Counterexample`.
pub fn generates_full_power(
    a: &Structure,
    s: &GeneratorSet,
    m: usize,
    budget: &Budget,
) -> Result<Generates> {
    if s.m != m {
        return Err(Error::LengthMismatch(s.m, m));
    }
    let gens = s.sorted();
    let k = gens.len();
    let (pow, idx) = power(a, k, budget)?;
    let mut targets = vec![1u32; m];
    loop {
        if !s.contains(&targets) {
            let mut problem = PinnedHomProblem::new(pow.clone(), a.clone());
            let mut consistent = true;
            for j in 0..m {
                let column: Vec<u32> = gens.iter().map(|g| g[j]).collect();
                let element = idx.element_of(&column);
                if let Some(&prev) = problem.pins.get(&element) {
                    if prev != targets[j] {
                        consistent = false;
                        break;
                    }
                }
                problem.pins.insert(element, targets[j]);
            }
            let hit = consistent
                && crate::structures::find_homomorphism(&problem, budget)?.is_some();
            if !hit {
                return Ok(Generates::Counterexample(targets));
            }
        }
        // next target tuple in lexicographic order
        let mut j = m;
        loop {
            if j == 0 {
                return Ok(Generates::All);
            }
            j -= 1;
            if targets[j] < a.n {
                targets[j] += 1;
                break;
            }
            targets[j] = 1;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MinGen {
    Size {
        size: usize,
        witness: Vec<Vec<u32>>,
    },
    /// The search hit a budget before settling the answer.
    Unknown(String),
}

/// Least size of a generating set for `A^m`, by increasing-size exhaustive
/// search over subsets of `A^m` in lexicographic order, pruned to subsets
/// that are canonical under coordinate permutations.
pub fn min_generating_size(
    a: &Structure,
    m: usize,
    max_size: usize,
    budget: &Budget,
) -> Result<MinGen> {
    let total = (a.n as u64).pow(m as u32);
    budget.check_elements(total)?;
    let universe: Vec<Vec<u32>> = {
        let mut all = Vec::with_capacity(total as usize);
        let mut t = vec![1u32; m];
        loop {
            all.push(t.clone());
            let mut j = m;
            let mut done = false;
            loop {
                if j == 0 {
                    done = true;
                    break;
                }
                j -= 1;
                if t[j] < a.n {
                    t[j] += 1;
                    break;
                }
                t[j] = 1;
            }
            if done {
                break;
            }
        }
        all
    };

    let perms = permutations(m);
    // canonical iff no coordinate permutation yields a lex-smaller subset
    let is_canonical = |subset: &[usize]| -> bool {
        for perm in &perms {
            let mut permuted: Vec<Vec<u32>> = subset
                .iter()
                .map(|&i| perm.iter().map(|&p| universe[i][p]).collect())
                .collect();
            permuted.sort();
            let original: Vec<&Vec<u32>> = subset.iter().map(|&i| &universe[i]).collect();
            if permuted.iter().lt(original.iter().copied()) {
                return false;
            }
        }
        true
    };

    for size in 1..=max_size.min(universe.len()) {
        let mut subset: Vec<usize> = (0..size).collect();
        loop {
            if is_canonical(&subset) {
                let gens = GeneratorSet::new(m, subset.iter().map(|&i| universe[i].clone()));
                match generates_full_power(a, &gens, m, budget) {
                    Ok(Generates::All) => {
                        return Ok(MinGen::Size {
                            size,
                            witness: gens.sorted(),
                        })
                    }
                    Ok(Generates::Counterexample(_)) => {}
                    Err(e) if e.is_budget() => return Ok(MinGen::Unknown(e.to_string())),
                    Err(e) => return Err(e),
                }
            }
            if !next_combination(&mut subset, universe.len()) {
                break;
            }
        }
    }
    Ok(MinGen::Unknown(format!(
        "no generating set of size <= {max_size} found within the size budget"
    )))
}

/// Advance to the next lexicographic `subset.len()`-combination of
/// `0..universe_len`; false when exhausted.
fn next_combination(subset: &mut [usize], universe_len: usize) -> bool {
    let size = subset.len();
    let mut j = size;
    while j > 0 {
        j -= 1;
        if subset[j] < universe_len - (size - j) {
            subset[j] += 1;
            for l in (j + 1)..size {
                subset[l] = subset[l - 1] + 1;
            }
            return true;
        }
    }
    false
}

fn permutations(m: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current: Vec<usize> = (0..m).collect();
    fn rec(current: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
        if k == current.len() {
            out.push(current.clone());
            return;
        }
        for i in k..current.len() {
            current.swap(k, i);
            rec(current, k + 1, out);
            current.swap(k, i);
        }
    }
    rec(&mut current, 0, &mut out);
    out.sort();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    /// dd(x,y,z): the majority that returns its first argument on pairwise
    /// distinct triples.
    pub(crate) fn dual_discriminator(n: u32) -> OpTable {
        let mut values = Vec::new();
        for x in 1..=n {
            for y in 1..=n {
                for z in 1..=n {
                    values.push(if y == z { y } else { x });
                }
            }
        }
        OpTable::new(3, n, values).unwrap()
    }

    fn median3() -> OpTable {
        let mut values = Vec::new();
        for x in 1..=3u32 {
            for y in 1..=3u32 {
                for z in 1..=3u32 {
                    let mut v = [x, y, z];
                    v.sort();
                    values.push(v[1]);
                }
            }
        }
        OpTable::new(3, 3, values).unwrap()
    }

    fn parity_k2() -> OpTable {
        let mut values = Vec::new();
        for x in 0..2u32 {
            for y in 0..2u32 {
                for z in 0..2u32 {
                    values.push((x ^ y ^ z) + 1);
                }
            }
        }
        OpTable::new(3, 2, values).unwrap()
    }

    #[test]
    fn projections_are_polymorphisms() {
        let b = Budget::default();
        for a in [catalog::k2(), catalog::dc3(), catalog::path("10010")] {
            for pos in 0..2 {
                let p = OpTable::projection(2, a.n, pos);
                assert!(is_polymorphism(&p, &a).unwrap());
            }
        }
        let _ = b;
    }

    #[test]
    fn domain_mismatch_is_an_error() {
        let f = OpTable::projection(2, 3, 0);
        assert!(matches!(
            is_polymorphism(&f, &catalog::k2()),
            Err(Error::DomainMismatch { .. })
        ));
    }

    #[test]
    fn out_of_range_value_is_rejected_at_construction() {
        assert!(matches!(
            OpTable::new(1, 2, vec![1, 3]),
            Err(Error::ElementOutOfRange { .. })
        ));
    }

    #[test]
    fn idempotency_checks() {
        assert!(OpTable::projection(3, 4, 1).is_idempotent());
        let constant = OpTable::new(2, 2, vec![1, 1, 1, 1]).unwrap();
        assert!(!constant.is_idempotent());
    }

    #[test]
    fn classify_median_dd_and_projection() {
        let med = median3();
        let tags = classify_operation(&med);
        assert!(tags.contains(&OpTag::Majority));
        assert!(tags.contains(&OpTag::NearUnanimity(3)));

        let dd = dual_discriminator(3);
        let tags = classify_operation(&dd);
        assert!(tags.contains(&OpTag::Majority));
        assert!(tags.contains(&OpTag::DualDiscriminator));
        for x in 1..=3 {
            assert!(tags.contains(&OpTag::Hubie(x)), "dd is Hubie in every x");
        }
        assert!(!tags.contains(&OpTag::Maltsev));

        let p2 = OpTable::projection(2, 3, 1);
        let tags = classify_operation(&p2);
        assert!(tags.contains(&OpTag::Projection(1)));
        assert!(tags.contains(&OpTag::EssentiallyUnary));
    }

    #[test]
    fn classify_parity_and_semilattice() {
        let tags = classify_operation(&parity_k2());
        assert!(tags.contains(&OpTag::Maltsev));
        for x in 1..=2 {
            assert!(tags.contains(&OpTag::Hubie(x)));
        }
        // max(x, y) on a 2-chain is a semilattice with unit 1
        let max2 = OpTable::new(2, 2, vec![1, 2, 2, 2]).unwrap();
        let tags = classify_operation(&max2);
        assert!(tags.contains(&OpTag::SemilatticeWithUnit(1)));
        assert!(!tags.contains(&OpTag::SemilatticeWithUnit(2)));
        assert!(tags.contains(&OpTag::Hubie(1)));
    }

    #[test]
    fn near_unanimity_is_never_essentially_unary_beyond_one_element() {
        for table in [median3(), dual_discriminator(3), dual_discriminator(2)] {
            let tags = classify_operation(&table);
            if tags.iter().any(|t| matches!(t, OpTag::NearUnanimity(_))) {
                assert!(!tags.contains(&OpTag::EssentiallyUnary));
            }
        }
    }

    #[test]
    fn enumerate_p1001_binary_idempotent_gives_projections_only() {
        let a = catalog::path("1001").with_all_constants();
        let found =
            enumerate_polymorphisms(&a, 2, PolyFilter::Any, 100, &Budget::default()).unwrap();
        assert!(!found.truncated);
        assert_eq!(found.tables.len(), 2);
        assert_eq!(found.tables[0], OpTable::projection(2, 4, 0));
        assert_eq!(found.tables[1], OpTable::projection(2, 4, 1));
    }

    #[test]
    fn enumerate_on_the_singleton_domain() {
        let one = Structure::digraph(1, &[(1, 1)]);
        let found =
            enumerate_polymorphisms(&one, 2, PolyFilter::Any, 10, &Budget::default()).unwrap();
        assert_eq!(found.tables.len(), 1);
    }

    #[test]
    fn enumerate_k2_maltsev_contains_parity() {
        let a = catalog::k2().with_all_constants();
        let found =
            enumerate_polymorphisms(&a, 3, PolyFilter::Maltsev, 100, &Budget::default()).unwrap();
        assert!(found.tables.contains(&parity_k2()));
    }

    #[test]
    fn enumerate_agrees_with_brute_force_at_arity_two() {
        // all idempotent binary tables, n <= 3
        let budget = Budget::default();
        for a in [
            catalog::k2().with_all_constants(),
            catalog::path("01").with_all_constants(),
            catalog::dc3().with_all_constants(),
            catalog::transitive_tournament(3).with_all_constants(),
        ] {
            let n = a.n;
            let cells = (n * n) as usize;
            let diag: Vec<usize> = (1..=n)
                .map(|x| OpTable::projection(2, n, 0).index_of(&[x, x]))
                .collect();
            let free: Vec<usize> = (0..cells).filter(|i| !diag.contains(i)).collect();
            let mut brute = Vec::new();
            let total = (n as u64).pow(free.len() as u32);
            for code in 0..total {
                let mut values = vec![0u32; cells];
                for (x, &d) in diag.iter().enumerate() {
                    values[d] = x as u32 + 1;
                }
                let mut c = code;
                for &i in &free {
                    values[i] = (c % n as u64) as u32 + 1;
                    c /= n as u64;
                }
                let table = OpTable::new(2, n, values).unwrap();
                if is_polymorphism(&table, &a).unwrap() {
                    brute.push(table);
                }
            }
            brute.sort_by(|s, t| s.values().cmp(t.values()));
            let mut found = enumerate_polymorphisms(&a, 2, PolyFilter::Any, 10_000, &budget)
                .unwrap()
                .tables;
            found.sort_by(|s, t| s.values().cmp(t.values()));
            assert_eq!(brute, found);
        }
    }

    #[test]
    fn hubie_search_examples() {
        let budget = Budget::default();
        // DC3 with constants admits the dual discriminator at arity 3
        let dc3 = catalog::dc3().with_all_constants();
        let f = find_hubie_polymorphism(&dc3, 1, 3, &budget)
            .unwrap()
            .expect("dc3 has a ternary Hubie polymorphism");
        assert!(is_polymorphism(&f, &dc3).unwrap());
        assert!(classify_operation(&f).contains(&OpTag::Hubie(1)));

        // K2: no binary Hubie polymorphism (both binary idempotent
        // polymorphisms are projections), but parity works at arity 3
        let k2 = catalog::k2().with_all_constants();
        assert!(find_hubie_polymorphism(&k2, 1, 2, &budget).unwrap().is_none());
        let f = find_hubie_polymorphism(&k2, 1, 3, &budget)
            .unwrap()
            .expect("parity is a ternary Hubie polymorphism of K2");
        assert!(classify_operation(&f).contains(&OpTag::Hubie(1)));

        // P1001: projections only, so no Hubie table at arity 2
        let p = catalog::path("1001").with_all_constants();
        for x in 1..=4 {
            assert!(find_hubie_polymorphism(&p, x, 2, &budget).unwrap().is_none());
        }
    }

    #[test]
    fn subpower_membership_examples() {
        let budget = Budget::default();
        let k2 = catalog::k2().with_all_constants();

        // a generator is its own witness via a projection
        let s = GeneratorSet::new(2, vec![vec![1, 2], vec![2, 1]]);
        match subpower_membership(&k2, &s, &[1, 2], &budget).unwrap() {
            Membership::In(cert) => {
                cert.verify(&k2).unwrap();
                assert!(classify_operation(&cert.op)
                    .iter()
                    .any(|t| matches!(t, OpTag::Projection(_))));
            }
            other => panic!("expected membership, got {other:?}"),
        }

        // (1,1) is not generated: the two columns are adjacent in the power,
        // so every image of them must be an edge, never the loop pair
        match subpower_membership(&k2, &s, &[1, 1], &budget).unwrap() {
            Membership::Out => {}
            other => panic!("expected Out, got {other:?}"),
        }
    }

    #[test]
    fn subpower_membership_is_monotone_in_the_generators() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let budget = Budget::default();
        let a = catalog::path("011").with_all_constants();
        for _ in 0..25 {
            let mut small = Vec::new();
            for _ in 0..rng.gen_range(1..=2usize) {
                small.push(vec![rng.gen_range(1..=3u32), rng.gen_range(1..=3u32)]);
            }
            let mut big = small.clone();
            big.push(vec![rng.gen_range(1..=3u32), rng.gen_range(1..=3u32)]);
            let t = vec![rng.gen_range(1..=3u32), rng.gen_range(1..=3u32)];
            let in_small = subpower_membership(&a, &GeneratorSet::new(2, small), &t, &budget)
                .unwrap()
                .is_in();
            let in_big = subpower_membership(&a, &GeneratorSet::new(2, big), &t, &budget)
                .unwrap()
                .is_in();
            if in_small {
                assert!(in_big, "adding generators flipped membership");
            }
        }
    }

    #[test]
    fn membership_budget_reports_unknown() {
        let tight = Budget::new(3, 1_000_000);
        let a = catalog::k2().with_all_constants();
        let s = GeneratorSet::new(2, vec![vec![1, 2], vec![2, 1]]);
        match subpower_membership(&a, &s, &[1, 1], &tight).unwrap() {
            Membership::Unknown(_) => {}
            other => panic!("expected Unknown, got {other:?}"),
        }
    }

    #[test]
    fn generates_full_power_examples() {
        let budget = Budget::default();
        // S = all of A^m trivially generates
        let k2 = catalog::k2().with_all_constants();
        let all = GeneratorSet::new(
            2,
            vec![vec![1, 1], vec![1, 2], vec![2, 1], vec![2, 2]],
        );
        assert!(generates_full_power(&k2, &all, 2, &budget).unwrap().is_all());

        // the quasi-loop-connected path 011 with its listed generators
        let p011 = catalog::path("011").with_all_constants();
        let gens = GeneratorSet::new(2, vec![vec![1, 1], vec![3, 1], vec![1, 3]]);
        assert!(generates_full_power(&p011, &gens, 2, &budget)
            .unwrap()
            .is_all());
    }

    #[test]
    fn min_generating_size_examples() {
        let budget = Budget::default();
        let one = Structure::digraph(1, &[(1, 1)]);
        for m in 1..=3 {
            match min_generating_size(&one, m, 4, &budget).unwrap() {
                MinGen::Size { size, .. } => assert_eq!(size, 1),
                other => panic!("expected size 1, got {other:?}"),
            }
        }

        let k2 = catalog::k2().with_all_constants();
        match min_generating_size(&k2, 2, 4, &budget).unwrap() {
            MinGen::Size { size, witness } => {
                assert_eq!(size, 3);
                assert_eq!(witness, vec![vec![1, 1], vec![1, 2], vec![2, 1]]);
            }
            other => panic!("expected size 3, got {other:?}"),
        }
    }

    #[test]
    fn certificates_reverify() {
        let budget = Budget::default();
        let p011 = catalog::path("011").with_all_constants();
        let gens = GeneratorSet::new(2, vec![vec![1, 1], vec![3, 1], vec![1, 3]]);
        for t1 in 1..=3u32 {
            for t2 in 1..=3u32 {
                if let Membership::In(cert) =
                    subpower_membership(&p011, &gens, &[t1, t2], &budget).unwrap()
                {
                    cert.verify(&p011).unwrap();
                } else {
                    panic!("011 generators should generate everything at m=2");
                }
            }
        }
    }

    /// Galois soundness: a polymorphism maps rows satisfying a pp-formula to
    /// a row satisfying it.
    #[test]
    fn preservation_of_pp_formulas() {
        use crate::logic::{solve_pp, PHSentence};
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(41);
        let budget = Budget::default();
        let structures = [
            catalog::k2().with_all_constants(),
            catalog::path("011").with_all_constants(),
            catalog::dc3().with_all_constants(),
            catalog::path("0110").with_all_constants(),
        ];
        let mut cases = 0;
        while cases < 100 {
            let a = &structures[rng.gen_range(0..structures.len())];
            let polys =
                enumerate_polymorphisms(a, 2, PolyFilter::Any, 50, &budget).unwrap().tables;
            let f = &polys[rng.gen_range(0..polys.len())];
            let m = rng.gen_range(1..=2usize);
            // random pp formula with <= 3 atoms over free vars v1..vm and
            // bound vars w1..w2
            let mut names: Vec<String> = (1..=m).map(|i| format!("v{i}")).collect();
            names.push("w1".into());
            names.push("w2".into());
            let n_atoms = rng.gen_range(1..=3usize);
            let atoms: Vec<String> = (0..n_atoms)
                .map(|_| {
                    let l = &names[rng.gen_range(0..names.len())];
                    let r = &names[rng.gen_range(0..names.len())];
                    format!("E({l},{r})")
                })
                .collect();
            let holds_at = |t: &[u32]| -> bool {
                let mut text = String::new();
                for w in ["w1", "w2"] {
                    text.push_str(&format!("exists {w} "));
                }
                text.push(':');
                let mut body = atoms.join(" & ");
                for (i, &e) in t.iter().enumerate() {
                    body = body.replace(&format!("v{}", i + 1), &format!("@{e}"));
                }
                text.push(' ');
                text.push_str(&body);
                let phi = PHSentence::parse(&text, &a.signature).unwrap();
                solve_pp(a, &phi, &budget).unwrap().is_some()
            };
            let row1: Vec<u32> = (0..m).map(|_| rng.gen_range(1..=a.n)).collect();
            let row2: Vec<u32> = (0..m).map(|_| rng.gen_range(1..=a.n)).collect();
            if holds_at(&row1) && holds_at(&row2) {
                let image: Vec<u32> = (0..m)
                    .map(|j| f.apply(&[row1[j], row2[j]]))
                    .collect();
                assert!(
                    holds_at(&image),
                    "preservation failed for {atoms:?} on rows {row1:?}, {row2:?}"
                );
                cases += 1;
            }
        }
    }

    #[test]
    fn op_table_file_roundtrip() {
        let dd = dual_discriminator(3);
        let text = dd.serialize("dd3");
        let (name, back) = OpTable::parse(&text).unwrap();
        assert_eq!(name, "dd3");
        assert_eq!(dd, back);
    }
}
