//! Pinned-homomorphism search: backtracking with arc-consistency propagation
//! and a smallest-domain-first variable order. Complete, deterministic
//! (lowest element index breaks ties), and metered by the node budget.

use super::Structure;
use crate::budget::Budget;
use crate::error::{Error, Result};
use std::collections::BTreeMap;

/// Does a homomorphism from `source` to `target` extend the given pins?
#[derive(Debug, Clone)]
pub struct PinnedHomProblem {
    pub source: Structure,
    pub target: Structure,
    /// Partial map, source element -> target element.
    pub pins: BTreeMap<u32, u32>,
}

impl PinnedHomProblem {
    pub fn new(source: Structure, target: Structure) -> Self {
        PinnedHomProblem {
            source,
            target,
            pins: BTreeMap::new(),
        }
    }

    pub fn pin(mut self, source_element: u32, target_element: u32) -> Self {
        self.pins.insert(source_element, target_element);
        self
    }

    fn validate(&self) -> Result<()> {
        if self.source.signature != self.target.signature {
            return Err(Error::SignatureMismatch(
                "source and target signatures differ".into(),
            ));
        }
        for (&s, &t) in &self.pins {
            if s < 1 || s > self.source.n {
                return Err(Error::ElementOutOfRange {
                    element: s as u64,
                    domain: self.source.n,
                });
            }
            if t < 1 || t > self.target.n {
                return Err(Error::ElementOutOfRange {
                    element: t as u64,
                    domain: self.target.n,
                });
            }
        }
        Ok(())
    }
}

/// Complete search for a total map extending the pins that preserves every
/// relation tuple and every constant. Returns the assignment (indexed by
/// source element, 1-based) or `None`; `Err` only on budget exhaustion.
pub fn find_homomorphism(
    problem: &PinnedHomProblem,
    budget: &Budget,
) -> Result<Option<Vec<u32>>> {
    problem.validate()?;
    let src = &problem.source;
    let tgt = &problem.target;
    if tgt.n > 64 {
        return Err(Error::InvalidParameter(
            "homomorphism targets are limited to 64 elements".into(),
        ));
    }
    let nv = src.n as usize;
    let full: u64 = if tgt.n == 64 {
        !0
    } else {
        (1u64 << tgt.n) - 1
    };
    let mut dom: Vec<u64> = vec![full; nv];

    // pins and constants fix domains up front
    for (&s, &t) in &problem.pins {
        dom[(s - 1) as usize] &= 1u64 << (t - 1);
    }
    for (c, &s) in &src.constants {
        let t = tgt.constants[c];
        dom[(s - 1) as usize] &= 1u64 << (t - 1);
    }

    // constraints
    enum Cons {
        /// R(u, v) must map into the target edge set of symbol `sym`.
        Binary { u: usize, v: usize, sym: usize },
        /// Higher-arity tuple; positions index `vars`.
        General { vars: Vec<usize>, sym: usize },
    }
    let symbols: Vec<&String> = src.relations.keys().collect();
    let mut out_masks: Vec<Vec<u64>> = Vec::new(); // per symbol, per target element
    let mut in_masks: Vec<Vec<u64>> = Vec::new();
    for name in &symbols {
        let rel = &tgt.relations[*name];
        let mut out = vec![0u64; tgt.n as usize + 1];
        let mut inc = vec![0u64; tgt.n as usize + 1];
        if rel.arity == 2 {
            for t in rel.iter() {
                out[t[0] as usize] |= 1u64 << (t[1] - 1);
                inc[t[1] as usize] |= 1u64 << (t[0] - 1);
            }
        }
        out_masks.push(out);
        in_masks.push(inc);
    }

    let mut constraints: Vec<Cons> = Vec::new();
    for (si, name) in symbols.iter().enumerate() {
        let rel = &src.relations[*name];
        match rel.arity {
            1 => {
                // unary: prefilter the domain once
                let mut mask = 0u64;
                for t in tgt.relations[*name].iter() {
                    mask |= 1u64 << (t[0] - 1);
                }
                for t in rel.iter() {
                    dom[(t[0] - 1) as usize] &= mask;
                }
            }
            2 => {
                for t in rel.iter() {
                    constraints.push(Cons::Binary {
                        u: (t[0] - 1) as usize,
                        v: (t[1] - 1) as usize,
                        sym: si,
                    });
                }
            }
            _ => {
                for t in rel.iter() {
                    constraints.push(Cons::General {
                        vars: t.iter().map(|&e| (e - 1) as usize).collect(),
                        sym: si,
                    });
                }
            }
        }
    }

    // variable -> indices of constraints mentioning it (CSR layout)
    let mut degree = vec![0usize; nv];
    for c in &constraints {
        match c {
            Cons::Binary { u, v, .. } => {
                degree[*u] += 1;
                degree[*v] += 1;
            }
            Cons::General { vars, .. } => {
                for &x in vars {
                    degree[x] += 1;
                }
            }
        }
    }
    let mut start = vec![0usize; nv + 1];
    for i in 0..nv {
        start[i + 1] = start[i] + degree[i];
    }
    let mut incident = vec![0u32; start[nv]];
    let mut fill = start.clone();
    for (ci, c) in constraints.iter().enumerate() {
        let mut push = |x: usize| {
            incident[fill[x]] = ci as u32;
            fill[x] += 1;
        };
        match c {
            Cons::Binary { u, v, .. } => {
                push(*u);
                push(*v);
            }
            Cons::General { vars, .. } => {
                for &x in vars {
                    push(x);
                }
            }
        }
    }

    struct Search<'a> {
        dom: Vec<u64>,
        trail: Vec<(usize, u64)>,
        constraints: &'a [Cons],
        incident: &'a [u32],
        start: &'a [usize],
        out_masks: &'a [Vec<u64>],
        in_masks: &'a [Vec<u64>],
        tgt: &'a Structure,
        symbols: &'a [&'a String],
    }

    impl<'a> Search<'a> {
        fn set_dom(&mut self, var: usize, mask: u64) {
            self.trail.push((var, self.dom[var]));
            self.dom[var] = mask;
        }

        /// Revise all constraints touching the vars in the queue to a fixed
        /// point. Returns false on a wiped-out domain.
        fn propagate(&mut self, mut queue: Vec<usize>) -> bool {
            while let Some(x) = queue.pop() {
                for &ci in &self.incident[self.start[x]..self.start[x + 1]] {
                    match &self.constraints[ci as usize] {
                        Cons::Binary { u, v, sym } => {
                            let (u, v, sym) = (*u, *v, *sym);
                            // shrink v against u
                            let mut keep = 0u64;
                            let mut bits = self.dom[v];
                            while bits != 0 {
                                let b = bits.trailing_zeros() as usize;
                                bits &= bits - 1;
                                if self.in_masks[sym][b + 1] & self.dom[u] != 0 {
                                    keep |= 1u64 << b;
                                }
                            }
                            if keep != self.dom[v] {
                                if keep == 0 {
                                    return false;
                                }
                                self.set_dom(v, keep);
                                queue.push(v);
                            }
                            // shrink u against v
                            let mut keep = 0u64;
                            let mut bits = self.dom[u];
                            while bits != 0 {
                                let a = bits.trailing_zeros() as usize;
                                bits &= bits - 1;
                                if self.out_masks[sym][a + 1] & self.dom[v] != 0 {
                                    keep |= 1u64 << a;
                                }
                            }
                            if keep != self.dom[u] {
                                if keep == 0 {
                                    return false;
                                }
                                self.set_dom(u, keep);
                                queue.push(u);
                            }
                        }
                        Cons::General { vars, sym } => {
                            let rel = &self.tgt.relations[self.symbols[*sym].as_str()];
                            for (pos, &var) in vars.iter().enumerate() {
                                let mut keep = 0u64;
                                for t in rel.iter() {
                                    if t.iter().enumerate().all(|(j, &e)| {
                                        self.dom[vars[j]] & (1u64 << (e - 1)) != 0
                                    }) {
                                        keep |= 1u64 << (t[pos] - 1);
                                    }
                                }
                                let keep = keep & self.dom[var];
                                if keep != self.dom[var] {
                                    if keep == 0 {
                                        return false;
                                    }
                                    self.set_dom(var, keep);
                                    queue.push(var);
                                }
                            }
                        }
                    }
                }
            }
            true
        }

        fn solve(&mut self, budget: &crate::budget::NodeMeter) -> Result<bool> {
            // smallest remaining domain, lowest index on ties
            let mut best: Option<(u32, usize)> = None;
            for (i, &d) in self.dom.iter().enumerate() {
                let size = d.count_ones();
                if size >= 2 {
                    if best.map_or(true, |(s, _)| size < s) {
                        best = Some((size, i));
                    }
                }
            }
            let Some((_, var)) = best else {
                return Ok(true); // all singletons: propagation already verified consistency
            };
            let candidates = self.dom[var];
            let mut bits = candidates;
            while bits != 0 {
                let b = bits.trailing_zeros();
                bits &= bits - 1;
                budget.tick()?;
                let mark = self.trail.len();
                self.set_dom(var, 1u64 << b);
                if self.propagate(vec![var]) && self.solve(budget)? {
                    return Ok(true);
                }
                while self.trail.len() > mark {
                    let (v, old) = self.trail.pop().unwrap();
                    self.dom[v] = old;
                }
            }
            Ok(false)
        }
    }

    if dom.iter().any(|&d| d == 0) {
        return Ok(None);
    }
    let mut search = Search {
        dom,
        trail: Vec::new(),
        constraints: &constraints,
        incident: &incident,
        start: &start,
        out_masks: &out_masks,
        in_masks: &in_masks,
        tgt,
        symbols: &symbols,
    };
    let meter = budget.meter();
    let initial: Vec<usize> = (0..nv).collect();
    if !search.propagate(initial) {
        return Ok(None);
    }
    if search.solve(&meter)? {
        let assignment: Vec<u32> = search
            .dom
            .iter()
            .map(|d| d.trailing_zeros() + 1)
            .collect();
        debug_assert!(verify_homomorphism(src, tgt, &assignment));
        Ok(Some(assignment))
    } else {
        Ok(None)
    }
}

/// Direct check that `map` (indexed by source element - 1) is a homomorphism.
pub fn verify_homomorphism(src: &Structure, tgt: &Structure, map: &[u32]) -> bool {
    if map.len() != src.n as usize {
        return false;
    }
    for (name, rel) in &src.relations {
        let target_rel = match tgt.relations.get(name) {
            Some(r) => r,
            None => return false,
        };
        for t in rel.iter() {
            let image: Vec<u32> = t.iter().map(|&e| map[(e - 1) as usize]).collect();
            if !target_rel.contains_sorted(&image) {
                return false;
            }
        }
    }
    for (c, &s) in &src.constants {
        match tgt.constants.get(c) {
            Some(&t) if map[(s - 1) as usize] == t => {}
            _ => return false,
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    fn solve(problem: &PinnedHomProblem) -> Option<Vec<u32>> {
        find_homomorphism(problem, &Budget::default()).unwrap()
    }

    #[test]
    fn dc3_rotation_is_forced_by_one_pin() {
        let dc3 = catalog::dc3();
        let p = PinnedHomProblem::new(dc3.clone(), dc3).pin(1, 2);
        assert_eq!(solve(&p), Some(vec![2, 3, 1]));
    }

    #[test]
    fn collapsing_k2_needs_a_loop() {
        let k2 = catalog::k2();
        let p = PinnedHomProblem::new(k2.clone(), k2).pin(1, 1).pin(2, 1);
        assert_eq!(solve(&p), None);
    }

    #[test]
    fn identity_always_works_without_pins() {
        for a in [catalog::dc3(), catalog::k2(), catalog::path("0110")] {
            let p = PinnedHomProblem::new(a.clone(), a.clone());
            let h = solve(&p).expect("identity exists");
            assert!(verify_homomorphism(&a, &a, &h));
        }
    }

    #[test]
    fn budget_error_is_distinct_from_no_homomorphism() {
        let p5 = catalog::path("00000");
        let p = PinnedHomProblem::new(p5.clone(), p5);
        let starved = Budget::new(1_000_000, 1);
        match find_homomorphism(&p, &starved) {
            Err(e) if e.is_budget() => {}
            other => panic!("expected budget error, got {other:?}"),
        }
    }

    /// Exhaustive oracle: try all |target|^|source| maps.
    fn oracle_exists(p: &PinnedHomProblem) -> bool {
        let nv = p.source.n as usize;
        let t = p.target.n as u64;
        let total = (t as u64).pow(nv as u32);
        assert!(total <= 1_000_000, "oracle only runs on small instances");
        'outer: for code in 0..total {
            let mut map = Vec::with_capacity(nv);
            let mut c = code;
            for _ in 0..nv {
                map.push((c % t) as u32 + 1);
                c /= t;
            }
            for (&s, &want) in &p.pins {
                if map[(s - 1) as usize] != want {
                    continue 'outer;
                }
            }
            if verify_homomorphism(&p.source, &p.target, &map) {
                return true;
            }
        }
        false
    }

    #[test]
    fn solver_agrees_with_exhaustive_enumeration() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..60 {
            let ns = rng.gen_range(1..=5);
            let nt = rng.gen_range(1..=3);
            let mut src_edges = Vec::new();
            let mut tgt_edges = Vec::new();
            for u in 1..=ns {
                for v in 1..=ns {
                    if rng.gen_bool(0.3) {
                        src_edges.push((u, v));
                    }
                }
            }
            for u in 1..=nt {
                for v in 1..=nt {
                    if rng.gen_bool(0.5) {
                        tgt_edges.push((u, v));
                    }
                }
            }
            let src = Structure::digraph(ns, &src_edges);
            let tgt = Structure::digraph(nt, &tgt_edges);
            let mut p = PinnedHomProblem::new(src, tgt);
            if rng.gen_bool(0.5) {
                p = p.pin(rng.gen_range(1..=ns), rng.gen_range(1..=nt));
            }
            let got = solve(&p).is_some();
            assert_eq!(got, oracle_exists(&p), "disagreement on {p:?}");
        }
    }
}
