//! Partially reflexive paths: the quasi-loop-connected classification, the
//! PGP/EGP and complexity verdicts, the explicit binary and majority
//! polymorphism constructions, generating sets for powers, and the EGP
//! witness machinery.

use crate::budget::Budget;
use crate::clones::OpTable;
use crate::error::{Error, Result};
use crate::logic::{Atom, PHSentence, Quantifier, Term};
use crate::structures::{Relation, Structure};
use std::collections::{BTreeMap, BTreeSet};

/// A path shape `beta` together with its structure: vertices `1..=|beta|`
/// left to right, symmetric edges `i -- i+1`, a loop at `i` iff
/// `beta[i] = 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathSpec {
    beta: String,
    structure: Structure,
}

impl PathSpec {
    pub fn parse(beta: &str) -> Result<PathSpec> {
        if beta.is_empty() {
            return Err(Error::InvalidParameter("beta must be nonempty".into()));
        }
        if let Some(c) = beta.chars().find(|c| *c != '0' && *c != '1') {
            return Err(Error::InvalidParameter(format!(
                "beta may only contain 0 and 1, found `{c}`"
            )));
        }
        Ok(PathSpec {
            beta: beta.to_string(),
            structure: crate::catalog::path(beta),
        })
    }

    pub fn beta(&self) -> &str {
        &self.beta
    }

    pub fn len(&self) -> usize {
        self.beta.len()
    }

    pub fn structure(&self) -> &Structure {
        &self.structure
    }

    pub fn reversed(&self) -> PathSpec {
        let rev: String = self.beta.chars().rev().collect();
        PathSpec::parse(&rev).unwrap()
    }

    fn bit(&self, i: usize) -> bool {
        self.beta.as_bytes()[i - 1] == b'1'
    }

    pub fn loops(&self) -> Vec<u32> {
        (1..=self.len())
            .filter(|&i| self.bit(i))
            .map(|i| i as u32)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum QlcForm {
    /// `0^a 1^b alpha` with `b > 0` and `|alpha| = a`.
    I,
    /// `0^a alpha` with `|alpha| in {a, a-1}`.
    II,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Orientation {
    AsGiven,
    Reversed,
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct QlcDecomposition {
    pub form: QlcForm,
    pub orientation: Orientation,
    pub a: usize,
    /// Length of the loop block; zero for form (ii).
    pub b: usize,
    pub alpha: String,
}

impl QlcDecomposition {
    /// The oriented string this decomposition reassembles to.
    pub fn reassemble(&self) -> String {
        match self.form {
            QlcForm::I => format!("{}{}{}", "0".repeat(self.a), "1".repeat(self.b), self.alpha),
            QlcForm::II => format!("{}{}", "0".repeat(self.a), self.alpha),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum PathClass {
    /// The loops form one contiguous block (possibly none).
    LoopConnected,
    QuasiLoopConnected(QlcDecomposition),
    NotQlc,
}

impl PathClass {
    pub fn is_qlc(&self) -> bool {
        !matches!(self, PathClass::NotQlc)
    }

    pub fn name(&self) -> &'static str {
        match self {
            PathClass::LoopConnected => "loop-connected",
            PathClass::QuasiLoopConnected(_) => "quasi-loop-connected",
            PathClass::NotQlc => "not quasi-loop-connected",
        }
    }
}

fn match_form_i(beta: &str) -> Option<QlcDecomposition> {
    let n = beta.len();
    let a = beta.chars().take_while(|&c| c == '0').count();
    if 2 * a >= n {
        return None;
    }
    let b = n - 2 * a;
    if !beta[a..a + b].chars().all(|c| c == '1') {
        return None;
    }
    Some(QlcDecomposition {
        form: QlcForm::I,
        orientation: Orientation::AsGiven,
        a,
        b,
        alpha: beta[a + b..].to_string(),
    })
}

fn match_form_ii(beta: &str) -> Option<QlcDecomposition> {
    let n = beta.len();
    // |alpha| = n - a must be a or a-1, so a is forced by parity
    let a = n.div_ceil(2);
    if !beta[..a].chars().all(|c| c == '0') {
        return None;
    }
    Some(QlcDecomposition {
        form: QlcForm::II,
        orientation: Orientation::AsGiven,
        a,
        b: 0,
        alpha: beta[a..].to_string(),
    })
}

/// Classify a path shape. Both orientations are tried, form (i) before
/// form (ii) and the as-given orientation before the reversal.
pub fn classify_path(path: &PathSpec) -> PathClass {
    let loops = path.loops();
    let contiguous = loops
        .windows(2)
        .all(|w| w[1] == w[0] + 1);
    if contiguous {
        return PathClass::LoopConnected;
    }
    let beta = path.beta();
    let reversed: String = beta.chars().rev().collect();
    let attempts: [(QlcForm, Orientation, &str); 4] = [
        (QlcForm::I, Orientation::AsGiven, beta),
        (QlcForm::I, Orientation::Reversed, &reversed),
        (QlcForm::II, Orientation::AsGiven, beta),
        (QlcForm::II, Orientation::Reversed, &reversed),
    ];
    for (form, orientation, s) in attempts {
        let matched = match form {
            QlcForm::I => match_form_i(s),
            QlcForm::II => match_form_ii(s),
        };
        if let Some(mut d) = matched {
            d.orientation = orientation;
            debug_assert_eq!(
                d.reassemble(),
                match orientation {
                    Orientation::AsGiven => beta.to_string(),
                    Orientation::Reversed => reversed.clone(),
                }
            );
            return PathClass::QuasiLoopConnected(d);
        }
    }
    PathClass::NotQlc
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Gap {
    Pgp,
    Egp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Complexity {
    Nl,
    NpComplete,
    PspaceComplete,
}

impl std::fmt::Display for Complexity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Complexity::Nl => write!(f, "NL"),
            Complexity::NpComplete => write!(f, "NP-complete"),
            Complexity::PspaceComplete => write!(f, "Pspace-complete"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct PathVerdict {
    pub class: PathClass,
    pub gap: Gap,
    pub complexity: Complexity,
}

/// Classification labels only; no proof obligation. With constants the
/// loop-connected/quasi-loop-connected split separates NL from NP-complete;
/// without constants both collapse to NL.
pub fn path_verdict(path: &PathSpec, constants_present: bool) -> PathVerdict {
    let class = classify_path(path);
    let gap = if class.is_qlc() { Gap::Pgp } else { Gap::Egp };
    let complexity = match (&class, constants_present) {
        (PathClass::LoopConnected, _) => Complexity::Nl,
        (PathClass::QuasiLoopConnected(_), true) => Complexity::NpComplete,
        (PathClass::QuasiLoopConnected(_), false) => Complexity::Nl,
        (PathClass::NotQlc, _) => Complexity::PspaceComplete,
    };
    PathVerdict {
        class,
        gap,
        complexity,
    }
}

/// Feder's operation: median when all three arguments share a parity,
/// otherwise the maximum of the two arguments of the repeated parity.
fn feder(x: u32, y: u32, z: u32) -> u32 {
    let args = [x, y, z];
    let odd: Vec<u32> = args.iter().copied().filter(|v| v % 2 == 1).collect();
    let even: Vec<u32> = args.iter().copied().filter(|v| v % 2 == 0).collect();
    if odd.len() == 3 || even.len() == 3 {
        let mut sorted = args;
        sorted.sort();
        sorted[1]
    } else if odd.len() == 2 {
        odd[0].max(odd[1])
    } else {
        even[0].max(even[1])
    }
}

/// The majority polymorphism of a loop-connected path: Feder's operation
/// inside either irreflexive side of the loop block, median everywhere else.
pub fn feder_majority(path: &PathSpec) -> Result<OpTable> {
    let class = classify_path(path);
    if class != PathClass::LoopConnected {
        return Err(Error::WrongPathClass {
            beta: path.beta().to_string(),
            expected: "loop-connected".into(),
            got: class.name().into(),
        });
    }
    let n = path.len() as u32;
    let loops = path.loops();
    // L: irreflexive part left of the loop block (the whole path if there
    // are no loops); R: irreflexive part right of it.
    let (l_end, r_start) = match (loops.first(), loops.last()) {
        (Some(&first), Some(&last)) => (first - 1, last + 1),
        _ => (n, n + 1),
    };
    let in_l = |v: u32| v <= l_end;
    let in_r = |v: u32| v >= r_start;
    let mut values = Vec::with_capacity((n as usize).pow(3));
    for x in 1..=n {
        for y in 1..=n {
            for z in 1..=n {
                let same_side =
                    (in_l(x) && in_l(y) && in_l(z)) || (in_r(x) && in_r(y) && in_r(z));
                let v = if same_side {
                    feder(x, y, z)
                } else {
                    let mut sorted = [x, y, z];
                    sorted.sort();
                    sorted[1]
                };
                values.push(v);
            }
        }
    }
    OpTable::new(3, n, values)
}

/// Result of the binary polymorphism construction: the table together with
/// the anchor cell where `y` is attained (`f(anchor) = y`; the anchor is
/// `(n,1)` for form (i) and either `(n,1)` or `(n,2)` for form (ii)).
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct FyPolymorphism {
    pub y: u32,
    pub anchor: (u32, u32),
    pub table: OpTable,
}

/// Staircase rule for the top-left corner block: the diagonals running
/// towards the centre carry arithmetic progressions with step one.
fn corner_rule(lambda: u32, mu: u32) -> u32 {
    use std::cmp::Ordering::*;
    match lambda.cmp(&mu) {
        Less => mu,
        Equal => lambda,
        Greater => lambda + u32::from((lambda - mu) % 2 == 1),
    }
}

fn fy_form_i(n: u32, a: usize, b: usize, y: u32) -> OpTable {
    let p = a as u32 + 1;
    let r = (a + b) as u32;
    let even = n % 2 == 0;
    let q = if even { n / 2 } else { (n + 1) / 2 };
    // X_bl owns column q below the centre on even paths
    let icm = if even { q } else { q - 1 };

    let mut f = vec![vec![0u32; n as usize + 1]; n as usize + 1];
    for u in 1..=n {
        for v in 1..=n {
            if v > q {
                f[u as usize][v as usize] = v;
            } else if v == q && (u <= q || !even) {
                f[u as usize][v as usize] = q;
            }
        }
    }
    // top-left: concentric shells of the loop block down to p, then the
    // staircase corner
    for u in 1..=q {
        for v in 1..q {
            f[u as usize][v as usize] = if u.max(v) >= p {
                u.max(v)
            } else {
                corner_rule(u, v)
            };
        }
    }
    // bottom-left: the upward diagonal from (n,1) walks towards the loop
    // block and parks at its boundary
    let park = y.clamp(p, r);
    let steps_to_park = if y > r { y - r } else { p.saturating_sub(y) };
    let diag_len = icm; // cells (n-k, 1+k) for k = 0 .. icm-1
    for k in 0..diag_len {
        let (u, v) = (n - k, 1 + k);
        let value = if y > r {
            (y - k.min(y - park)).max(park)
        } else if y < p {
            (y + k).min(park)
        } else {
            y
        };
        f[u as usize][v as usize] = value;
        if value == park && k >= steps_to_park {
            // fill the parked cell's row and column with the park value
            for vv in 1..=icm {
                f[u as usize][vv as usize] = park;
            }
            for uu in (q + 1)..=n {
                f[uu as usize][v as usize] = park;
            }
        }
    }
    // the corner block left over below the parked region, built dually to
    // the top-left staircase
    for u in (n - steps_to_park + 1)..=n {
        for v in 1..=steps_to_park {
            let i = n - u;
            let j = v - 1;
            let value = if y > r {
                if j >= i {
                    y - j
                } else {
                    y - i - u32::from((i - j) % 2 == 1)
                }
            } else {
                if j >= i {
                    y + j
                } else {
                    y + i + u32::from((i - j) % 2 == 1)
                }
            };
            f[u as usize][v as usize] = value;
        }
    }

    let matrix: Vec<Vec<u32>> = (1..=n)
        .map(|u| (1..=n).map(|v| f[u as usize][v as usize]).collect())
        .collect();
    OpTable::from_matrix(&matrix).expect("construction fills every cell")
}

fn fy_form_ii(n: u32, a: usize, y: u32) -> OpTable {
    let c = a as u32; // boundary column; no loops at or left of it
    let z = if y % 2 == 1 { y } else { y - 1 };
    let even = n % 2 == 0;
    // split row: reflect between rows s, s+1 on even paths, through row s on
    // odd ones; chosen so that row n reflects onto row z
    let s = if even { (n + z - 1) / 2 } else { (n + z) / 2 };
    let mirror = |u: u32| -> u32 {
        if u <= s {
            u
        } else if even {
            2 * s + 1 - u
        } else {
            2 * s - u
        }
    };
    let mut matrix = Vec::with_capacity(n as usize);
    for u in 1..=n {
        let row_source = mirror(u);
        let mut row = Vec::with_capacity(n as usize);
        for v in 1..=n {
            let value = if v > c {
                v
            } else if v == c {
                c
            } else {
                corner_rule(row_source, v)
            };
            row.push(value);
        }
        matrix.push(row);
    }
    OpTable::from_matrix(&matrix).expect("construction fills every cell")
}

/// The binary idempotent polymorphism `f_y` with `f_y(1, x) = x` for all `x`
/// and `y` attained at the anchor. Requires a quasi-loop-connected path in
/// its normalized (as-given) orientation.
pub fn binary_fy(path: &PathSpec, y: u32) -> Result<FyPolymorphism> {
    let n = path.len() as u32;
    if y < 1 || y > n {
        return Err(Error::ElementOutOfRange {
            element: y as u64,
            domain: n,
        });
    }
    let class = classify_path(path);
    let decomposition = match &class {
        PathClass::QuasiLoopConnected(d) if d.orientation == Orientation::AsGiven => d.clone(),
        PathClass::LoopConnected => {
            // loop-connected paths that also match a QLC form support the
            // construction directly
            match match_form_i(path.beta()).or_else(|| match_form_ii(path.beta())) {
                Some(d) => d,
                None => {
                    return Err(Error::WrongPathClass {
                        beta: path.beta().to_string(),
                        expected: "quasi-loop-connected in as-given orientation".into(),
                        got: "loop-connected without a matching decomposition".into(),
                    })
                }
            }
        }
        other => {
            return Err(Error::WrongPathClass {
                beta: path.beta().to_string(),
                expected: "quasi-loop-connected in as-given orientation (reverse beta first)"
                    .into(),
                got: other.name().into(),
            })
        }
    };
    match decomposition.form {
        QlcForm::I => {
            let table = fy_form_i(n, decomposition.a, decomposition.b, y);
            Ok(FyPolymorphism {
                y,
                anchor: (n, 1),
                table,
            })
        }
        QlcForm::II => {
            let table = fy_form_ii(n, decomposition.a, y);
            let anchor = if y % 2 == 1 { (n, 1) } else { (n, 2) };
            Ok(FyPolymorphism { y, anchor, table })
        }
    }
}

/// The listed generating tuples for `A^m`: `m + 1` tuples for form (i)
/// (all-ones plus `n` at each position), `2m + 2` for form (ii) (the same
/// against both the all-ones and all-twos backgrounds). Results are mapped
/// back through the reversal when the decomposition matched reversed.
pub fn generating_tuples(path: &PathSpec, m: usize) -> Result<crate::clones::GeneratorSet> {
    let class = classify_path(path);
    let d = match &class {
        PathClass::QuasiLoopConnected(d) => d.clone(),
        PathClass::LoopConnected => match_form_i(path.beta())
            .or_else(|| match_form_ii(path.beta()))
            .ok_or_else(|| Error::WrongPathClass {
                beta: path.beta().to_string(),
                expected: "quasi-loop-connected".into(),
                got: "loop-connected without a matching decomposition".into(),
            })?,
        PathClass::NotQlc => {
            return Err(Error::WrongPathClass {
                beta: path.beta().to_string(),
                expected: "quasi-loop-connected".into(),
                got: class.name().into(),
            })
        }
    };
    let n = path.len() as u32;
    let mut tuples: Vec<Vec<u32>> = Vec::new();
    let backgrounds: &[u32] = match d.form {
        QlcForm::I => &[1],
        QlcForm::II => &[1, 2],
    };
    for &bg in backgrounds {
        tuples.push(vec![bg; m]);
        for j in 0..m {
            let mut t = vec![bg; m];
            t[j] = n;
            tuples.push(t);
        }
    }
    if d.orientation == Orientation::Reversed {
        for t in &mut tuples {
            for e in t.iter_mut() {
                *e = n + 1 - *e;
            }
        }
    }
    Ok(crate::clones::GeneratorSet::new(m, tuples))
}

/// A replayable derivation of `t` from the all-ones tuple: step `(y, j)`
/// applies `f_y` pointwise to the pair (`n` at position `j` over ones, the
/// tuple built so far).
pub fn tuple_certificate(path: &PathSpec, m: usize, t: &[u32]) -> Result<Vec<(u32, usize)>> {
    if t.len() != m {
        return Err(Error::LengthMismatch(t.len(), m));
    }
    let class = classify_path(path);
    let form_i_as_given = matches!(
        &class,
        PathClass::QuasiLoopConnected(d)
            if d.form == QlcForm::I && d.orientation == Orientation::AsGiven
    ) || (class == PathClass::LoopConnected && match_form_i(path.beta()).is_some());
    if !form_i_as_given {
        return Err(Error::WrongPathClass {
            beta: path.beta().to_string(),
            expected: "form (i) in as-given orientation".into(),
            got: class.name().into(),
        });
    }
    Ok(t.iter()
        .enumerate()
        .filter(|(_, &v)| v != 1)
        .map(|(j, &v)| (v, j))
        .collect())
}

/// Replay a certificate from the all-ones start tuple.
pub fn replay_certificate(
    path: &PathSpec,
    m: usize,
    steps: &[(u32, usize)],
) -> Result<Vec<u32>> {
    let n = path.len() as u32;
    let mut current = vec![1u32; m];
    for &(y, j) in steps {
        let fy = binary_fy(path, y)?;
        let mut next = Vec::with_capacity(m);
        for i in 0..m {
            let first = if i == j { n } else { 1 };
            next.push(fy.table.apply(&[first, current[i]]));
        }
        current = next;
    }
    Ok(current)
}

/// EGP witness for a path that is not quasi-loop-connected: the radius-mu
/// balls around the outermost loops, the omitted word and its cousin class,
/// the chain formula over the materialized relation, and the falsifying
/// universal word.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct EgpPathWitness {
    pub beta: String,
    pub m: usize,
    /// Leftmost and rightmost loops.
    pub p: u32,
    pub q: u32,
    pub mu: u32,
    /// Vertices within distance mu of p, resp. q.
    pub ball_p: Vec<u32>,
    pub ball_q: Vec<u32>,
    /// The {p,q}-word omitted by the supplied tuples together with its
    /// entire cousin class.
    pub tau: Vec<u32>,
    /// `{p,q}^m` minus tau, materialized as an extra relation.
    pub relation_name: String,
    pub r_gamma: Vec<Vec<u32>>,
    /// Universal closure of the chain formula; false on the structure.
    pub sentence: PHSentence,
    /// The word in `{1,n}^m` witnessing falsity.
    pub falsifier: Vec<u32>,
    /// The supplied tuples, each with its chosen friend in the relation.
    pub gamma_friends: Vec<(Vec<u32>, Vec<u32>)>,
}

impl EgpPathWitness {
    /// The path structure expanded with the witness relation.
    pub fn expanded_structure(&self) -> Result<Structure> {
        let path = PathSpec::parse(&self.beta)?;
        Ok(path.structure().with_relation(
            &self.relation_name,
            Relation::from_tuples(self.m, self.r_gamma.iter().cloned()),
        ))
    }

    /// The chain formula with its universal variables instantiated by `w`.
    pub fn formula_at(&self, w: &[u32]) -> Result<PHSentence> {
        if w.len() != self.m {
            return Err(Error::LengthMismatch(w.len(), self.m));
        }
        let rho: BTreeMap<String, u32> = (0..self.m)
            .map(|i| (format!("x{}", i + 1), w[i]))
            .collect();
        self.sentence.instantiate_universals(&rho)
    }

    /// Re-run the internal verification: the formula holds on every supplied
    /// tuple and fails at the falsifier.
    pub fn verify(&self, budget: &Budget) -> Result<()> {
        let expanded = self.expanded_structure()?;
        for (gamma, friend) in &self.gamma_friends {
            if !self.r_gamma.contains(friend) {
                return Err(Error::BadCertificate(format!(
                    "friend {friend:?} is not in the witness relation"
                )));
            }
            let phi = self.formula_at(gamma)?;
            if crate::logic::solve_pp(&expanded, &phi, budget)?.is_none() {
                return Err(Error::BadCertificate(format!(
                    "formula fails on supplied tuple {gamma:?}"
                )));
            }
        }
        let phi = self.formula_at(&self.falsifier)?;
        if crate::logic::solve_pp(&expanded, &phi, budget)?.is_some() {
            return Err(Error::BadCertificate(
                "formula unexpectedly holds at the falsifier".into(),
            ));
        }
        Ok(())
    }
}

fn ball(n: u32, center: u32, radius: u32) -> Vec<u32> {
    let lo = center.saturating_sub(radius).max(1);
    let hi = (center + radius).min(n);
    (lo..=hi).collect()
}

fn words_over(alphabet: &[u32], m: usize) -> Vec<Vec<u32>> {
    let mut out = vec![vec![]];
    for _ in 0..m {
        let mut next = Vec::new();
        for w in &out {
            for &c in alphabet {
                let mut w2 = w.clone();
                w2.push(c);
                next.push(w2);
            }
        }
        out = next;
    }
    out
}

/// Construct and internally verify the EGP witness. `gamma` is the tuple
/// set alleged to generate `A^m`; fewer than `2^m` tuples always leave an
/// omitted word.
pub fn path_egp_witness(
    path: &PathSpec,
    m: usize,
    gamma: &[Vec<u32>],
    budget: &Budget,
) -> Result<EgpPathWitness> {
    let class = classify_path(path);
    if class != PathClass::NotQlc {
        return Err(Error::WrongPathClass {
            beta: path.beta().to_string(),
            expected: "not quasi-loop-connected".into(),
            got: class.name().into(),
        });
    }
    if m == 0 {
        return Err(Error::InvalidParameter("m must be positive".into()));
    }
    for t in gamma {
        if t.len() != m {
            return Err(Error::LengthMismatch(t.len(), m));
        }
    }
    let n = path.len() as u32;
    let loops = path.loops();
    let p = *loops.first().expect("not loop-connected implies loops");
    let q = *loops.last().unwrap();
    // guaranteed by the classification; a violation is an internal bug
    let left_ok = 2 * p <= n;
    let right_ok = 2 * q >= n + 2;
    if !(left_ok && right_ok) {
        return Err(Error::WitnessVerification(format!(
            "outermost loops {p},{q} do not straddle the centre of a {n}-vertex path"
        )));
    }
    let mu = p.max(n - q).max((q - p - 1) / 2);
    let ball_p = ball(n, p, mu);
    let ball_q = ball(n, q, mu);
    let p_only: BTreeSet<u32> = ball_p
        .iter()
        .filter(|v| !ball_q.contains(v))
        .copied()
        .collect();
    let q_only: BTreeSet<u32> = ball_q
        .iter()
        .filter(|v| !ball_p.contains(v))
        .copied()
        .collect();

    // each word over the two exclusive zones covers exactly one {p,q}-word,
    // its unique cousin
    let mut covered: BTreeSet<Vec<u32>> = BTreeSet::new();
    for t in gamma {
        let rep: Option<Vec<u32>> = t
            .iter()
            .map(|&v| {
                if p_only.contains(&v) {
                    Some(p)
                } else if q_only.contains(&v) {
                    Some(q)
                } else {
                    None
                }
            })
            .collect();
        if let Some(rep) = rep {
            covered.insert(rep);
        }
    }
    let tau = words_over(&[p, q], m)
        .into_iter()
        .find(|w| !covered.contains(w))
        .ok_or(Error::NoOmittedWord)?;

    let r_gamma: Vec<Vec<u32>> = words_over(&[p, q], m)
        .into_iter()
        .filter(|w| *w != tau)
        .collect();
    let relation_name = "W".to_string();

    // chains of length exactly mu ending in a self-loop, with the witness
    // relation on the chain ends
    let mut prefix = Vec::new();
    let mut body = Vec::new();
    for i in 1..=m {
        prefix.push((Quantifier::Forall, format!("x{i}")));
    }
    for i in 1..=m {
        for l in 1..=mu {
            prefix.push((Quantifier::Exists, format!("x{i}_{l}")));
        }
    }
    for i in 1..=m {
        let mut prev = format!("x{i}");
        for l in 1..=mu {
            let next = format!("x{i}_{l}");
            body.push(Atom::Rel {
                symbol: "E".into(),
                args: vec![Term::Var(prev.clone()), Term::Var(next.clone())],
            });
            prev = next;
        }
        body.push(Atom::Rel {
            symbol: "E".into(),
            args: vec![Term::Var(prev.clone()), Term::Var(prev.clone())],
        });
    }
    body.push(Atom::Rel {
        symbol: relation_name.clone(),
        args: (1..=m).map(|i| Term::Var(format!("x{i}_{mu}"))).collect(),
    });
    let sentence = PHSentence { prefix, body };

    let falsifier: Vec<u32> = tau
        .iter()
        .map(|&v| if v == p { 1 } else { n })
        .collect();

    // choose a friend in the relation for every supplied tuple
    let mut gamma_friends = Vec::new();
    for t in gamma {
        let friend = r_gamma
            .iter()
            .find(|w| {
                w.iter().zip(t.iter()).all(|(&fw, &tv)| {
                    if fw == p {
                        ball_p.contains(&tv)
                    } else {
                        ball_q.contains(&tv)
                    }
                })
            })
            .ok_or_else(|| {
                Error::WitnessVerification(format!("tuple {t:?} has no friend in the relation"))
            })?;
        gamma_friends.push((t.clone(), friend.clone()));
    }

    let witness = EgpPathWitness {
        beta: path.beta().to_string(),
        m,
        p,
        q,
        mu,
        ball_p,
        ball_q,
        tau,
        relation_name,
        r_gamma,
        sentence,
        falsifier,
        gamma_friends,
    };
    witness
        .verify(budget)
        .map_err(|e| Error::WitnessVerification(e.to_string()))?;
    Ok(witness)
}
