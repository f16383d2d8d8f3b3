//! Small structures used throughout tests, examples and documentation.

use crate::structures::Structure;

/// `K_2`: two vertices joined by a double edge.
pub fn k2() -> Structure {
    Structure::digraph(2, &[(1, 2), (2, 1)])
}

/// The directed 3-cycle.
pub fn dc3() -> Structure {
    Structure::digraph(3, &[(1, 2), (2, 3), (3, 1)])
}

/// The partially reflexive undirected path `P_beta`: vertices `1..=|beta|`
/// in left-to-right order, symmetric edges `i -- i+1`, a loop at `i` iff
/// `beta[i] == '1'`.
pub fn path(beta: &str) -> Structure {
    let n = beta.len() as u32;
    assert!(n >= 1, "beta must be nonempty");
    let mut edges = Vec::new();
    for i in 1..n {
        edges.push((i, i + 1));
    }
    let mut s = Structure::graph(n, &edges);
    for (i, c) in beta.chars().enumerate() {
        match c {
            '1' => {
                let v = i as u32 + 1;
                s.relations.get_mut("E").unwrap().insert(&[v, v]);
            }
            '0' => {}
            other => panic!("beta may only contain 0 and 1, found {other}"),
        }
    }
    s
}

/// Transitive tournament `1 -> 2 -> ... -> n` with all forward edges.
pub fn transitive_tournament(n: u32) -> Structure {
    let mut edges = Vec::new();
    for u in 1..=n {
        for v in (u + 1)..=n {
            edges.push((u, v));
        }
    }
    Structure::digraph(n, &edges)
}

/// The strongly connected 4-tournament 1->2, 2->3, 3->4, 4->1, 1->3, 2->4.
pub fn strong_tournament_4() -> Structure {
    Structure::digraph(4, &[(1, 2), (2, 3), (3, 4), (4, 1), (1, 3), (2, 4)])
}
