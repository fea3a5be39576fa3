//! Small named graphs used by tests, the acceptance suite and `oracle-check`.

use rand::Rng;

use crate::graph::{Graph, VertexId};
use crate::rng::{Purpose, Substreams};

fn build(n: usize, edges: impl IntoIterator<Item = (VertexId, VertexId)>) -> Graph {
    Graph::from_edges(n, edges).expect("fixture edges are valid")
}

/// `C_n`.
pub fn cycle(n: usize) -> Graph {
    assert!(n >= 3);
    build(n, (0..n as VertexId).map(|i| (i, (i + 1) % n as VertexId)))
}

/// Path `0 - 1 - ... - (n-1)`; `path(2)` is `K2`.
pub fn path(n: usize) -> Graph {
    assert!(n >= 2);
    build(n, (1..n as VertexId).map(|i| (i - 1, i)))
}

/// Star `K_{1,leaves}` with center 0.
pub fn star(leaves: usize) -> Graph {
    build(leaves + 1, (1..=leaves as VertexId).map(|i| (0, i)))
}

/// `K_n`.
pub fn complete(n: usize) -> Graph {
    let n32 = n as VertexId;
    build(n, (0..n32).flat_map(|u| (u + 1..n32).map(move |v| (u, v))))
}

/// Two `K_k` cliques on `0..k` and `k..2k`, joined by the bridge `(k-1, k)`.
pub fn clique_pair(k: usize) -> Graph {
    let k32 = k as VertexId;
    let clique = move |off: VertexId| (0..k32).flat_map(move |u| (u + 1..k32).map(move |v| (u + off, v + off)));
    build(2 * k, clique(0).chain(clique(k32)).chain([(k32 - 1, k32)]))
}

/// Triangles `{0,1,2}` and `{3,4,5}` joined by the bridge `(2, 3)`.
pub fn triangle_pair() -> Graph {
    build(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (2, 3)])
}

/// Erdős–Rényi `G(n, p)` from a seeded stream.
pub fn gnp(n: usize, p: f64, seed: u64) -> Graph {
    let mut rng = Substreams::new(seed).stream(0, 0, 0, Purpose::Generator);
    let mut edges = Vec::new();
    if p > 0.0 {
        // Geometric skipping over the upper-triangular pair sequence.
        let log_q = (1.0 - p).ln();
        let (mut v, mut w): (i64, i64) = (1, -1);
        let n = n as i64;
        while v < n {
            let r: f64 = rng.gen::<f64>();
            let skip = if p >= 1.0 { 0 } else { ((1.0 - r).ln() / log_q).floor() as i64 };
            w += 1 + skip;
            while w >= v && v < n {
                w -= v;
                v += 1;
            }
            if v < n {
                edges.push((w as VertexId, v as VertexId));
            }
        }
    }
    build(n, edges)
}

/// `K2` on `{0,1}` plus a star with center 2 and four leaves `3..=6`; two components.
pub fn k2_and_star() -> Graph {
    build(7, [(0, 1), (2, 3), (2, 4), (2, 5), (2, 6)])
}

/// Zachary's karate club: 34 members, 78 ties, two factions.
pub fn karate_club() -> Graph {
    const EDGES: [(VertexId, VertexId); 78] = [
        (0, 1),
        (0, 2),
        (0, 3),
        (0, 4),
        (0, 5),
        (0, 6),
        (0, 7),
        (0, 8),
        (0, 10),
        (0, 11),
        (0, 12),
        (0, 13),
        (0, 17),
        (0, 19),
        (0, 21),
        (0, 31),
        (1, 2),
        (1, 3),
        (1, 7),
        (1, 13),
        (1, 17),
        (1, 19),
        (1, 21),
        (1, 30),
        (2, 3),
        (2, 7),
        (2, 8),
        (2, 9),
        (2, 13),
        (2, 27),
        (2, 28),
        (2, 32),
        (3, 7),
        (3, 12),
        (3, 13),
        (4, 6),
        (4, 10),
        (5, 6),
        (5, 10),
        (5, 16),
        (6, 16),
        (8, 30),
        (8, 32),
        (8, 33),
        (9, 33),
        (13, 33),
        (14, 32),
        (14, 33),
        (15, 32),
        (15, 33),
        (18, 32),
        (18, 33),
        (19, 33),
        (20, 32),
        (20, 33),
        (22, 32),
        (22, 33),
        (23, 25),
        (23, 27),
        (23, 29),
        (23, 32),
        (23, 33),
        (24, 25),
        (24, 27),
        (24, 31),
        (25, 31),
        (26, 29),
        (26, 33),
        (27, 33),
        (28, 31),
        (28, 33),
        (29, 32),
        (29, 33),
        (30, 32),
        (30, 33),
        (31, 32),
        (31, 33),
        (32, 33),
    ];
    build(34, EDGES)
}

/// Disjoint union; vertices of `b` are shifted by `a.n()`.
pub fn disjoint_union(a: &Graph, b: &Graph) -> Graph {
    let shift = a.n() as VertexId;
    let edges = a
        .vertices()
        .flat_map(|u| a.neighbors(u).iter().filter(move |&&v| u < v).map(move |&v| (u, v)))
        .chain(
            b.vertices()
                .flat_map(|u| b.neighbors(u).iter().filter(move |&&v| u < v).map(move |&v| (u + shift, v + shift))),
        )
        .collect::<Vec<_>>();
    build(a.n() + b.n(), edges)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_shapes() {
        assert_eq!((cycle(8).n(), cycle(8).m()), (8, 8));
        assert_eq!(complete(4).m(), 6);
        let pair = clique_pair(15);
        assert_eq!((pair.n(), pair.m()), (30, 2 * 105 + 1));
        assert_eq!(karate_club().m(), 78);
        assert_eq!(k2_and_star().m(), 5);
        for g in [cycle(5), path(4), star(3), pair, karate_club(), triangle_pair()] {
            g.validate().unwrap();
        }
    }

    #[test]
    fn gnp_is_seeded_and_dense_enough() {
        let a = gnp(200, 0.1, 5);
        assert_eq!(a, gnp(200, 0.1, 5));
        assert_ne!(a, gnp(200, 0.1, 6));
        let expected = 0.1 * (200.0 * 199.0 / 2.0);
        assert!((a.m() as f64 - expected).abs() < 5.0 * expected.sqrt(), "m = {}", a.m());
        assert_eq!(gnp(10, 1.0, 1).m(), 45);
        a.validate().unwrap();
    }

    #[test]
    fn union_shifts_second_graph() {
        let u = disjoint_union(&path(2), &cycle(3));
        assert_eq!(u.n(), 5);
        assert!(u.has_edge(2, 4));
        assert!(!u.has_edge(1, 2));
    }
}
