//! Canonical graphs used across the library: the classical-secret
//! encodings, their dealer-extended counterparts for the prepare-and-measure
//! and fully quantum protocols, and small demonstration graphs for the
//! rewrite rules.
//!
//! Players are vertices `1..=n`; the dealer, where present, is vertex
//! [`DEALER`] and always listed first.

use crate::field::{Field, FieldElement};
use crate::graphstate::{EncodedGraph, LabelledGraph, VertexId};

/// The dealer's vertex id in extended scheme graphs.
pub const DEALER: VertexId = VertexId(0);

fn edge(g: &mut LabelledGraph, a: u32, b: u32, w: FieldElement) {
    g.add_edge(VertexId(a), VertexId(b), w)
        .expect("fixture edges are valid");
}

/// 4-ring 1-2-3-4-1, all edges weight 2, labels zero. The label-shuffling
/// demonstration graph (set a z-label, then [`LabelledGraph::shuffle`]).
pub fn shuffle_square(field: Field) -> LabelledGraph {
    let mut g = LabelledGraph::with_vertices(field, 4);
    let two = field.elem(2);
    edge(&mut g, 1, 2, two);
    edge(&mut g, 2, 3, two);
    edge(&mut g, 3, 4, two);
    edge(&mut g, 4, 1, two);
    g
}

/// Square with 1 and 4 on opposite corners (edges 1-2, 1-3, 2-4, 3-4, all
/// weight 2) and uniform z/m labels. The measurement-rule demonstration
/// graph: measuring vertex 1 in `X^2 Z` exercises all three rewrite rules
/// at once (edge creation between 2 and 3, label transport, deletion).
pub fn measurement_square(field: Field, z: u64, m: u64) -> LabelledGraph {
    let mut g = LabelledGraph::with_vertices(field, 4);
    let two = field.elem(2);
    edge(&mut g, 1, 2, two);
    edge(&mut g, 1, 3, two);
    edge(&mut g, 2, 4, two);
    edge(&mut g, 3, 4, two);
    let (z, m) = (field.elem(z as i64), field.elem(m as i64));
    for v in 1..=4 {
        g.set_labels(VertexId(v), z, field.zero(), m)
            .expect("fixture vertices exist");
    }
    g
}

/// Five vertices with assorted weights and labels — a generic exercise
/// graph for randomized suites at any odd prime d.
pub fn sample_weighted_graph(field: Field) -> LabelledGraph {
    let mut g = LabelledGraph::with_vertices(field, 5);
    edge(&mut g, 1, 2, field.one());
    edge(&mut g, 1, 3, field.elem(2));
    edge(&mut g, 2, 3, field.one());
    edge(&mut g, 2, 4, field.elem(-1));
    edge(&mut g, 3, 5, field.elem(2));
    edge(&mut g, 4, 5, field.one());
    for (v, (z, m)) in [(1, (1, 0)), (2, (0, 1)), (3, (2, 0)), (4, (0, 2)), (5, (1, 0))] {
        g.set_labels(VertexId(v), field.elem(z), field.zero(), field.elem(m))
            .expect("fixture vertices exist");
    }
    g
}

/// All-or-nothing (n,n) encoding: star with centre 1, weight-1 edges,
/// secret on the centre (`z_1 = s`). Only the full player set recovers s.
pub fn cc_tree(field: Field, n_players: u32, s: FieldElement) -> EncodedGraph {
    assert!(n_players >= 2, "star needs a centre and at least one leaf");
    let mut g = LabelledGraph::with_vertices(field, n_players);
    for v in 2..=n_players {
        edge(&mut g, 1, v, field.one());
    }
    g.set_z(VertexId(1), s).expect("vertex 1 exists");
    EncodedGraph::new(g).expect("z/m labels only")
}

/// Secret coefficient vector of the (n,n) encoding: s sits on vertex 1.
pub fn cc_tree_coeff(field: Field, n_players: u32) -> Vec<FieldElement> {
    let mut coeff = vec![field.zero(); n_players as usize];
    coeff[0] = field.one();
    coeff
}

/// (2,3) threshold encoding: star 1-2, 1-3 with weight-1 edges and
/// z = (0, 2s, s). Any two players recover s; no single player can.
pub fn cc_twothree(field: Field, s: FieldElement) -> EncodedGraph {
    let mut g = LabelledGraph::with_vertices(field, 3);
    edge(&mut g, 1, 2, field.one());
    edge(&mut g, 1, 3, field.one());
    g.set_z(VertexId(2), field.elem(2) * s).expect("vertex 2 exists");
    g.set_z(VertexId(3), s).expect("vertex 3 exists");
    EncodedGraph::new(g).expect("z labels only")
}

/// Secret coefficient vector of the (2,3) encoding: (0, 2, 1).
pub fn cc_twothree_coeff(field: Field) -> Vec<FieldElement> {
    vec![field.zero(), field.elem(2), field.one()]
}

/// Ring encoding on n players, weight-1 edges, `z_i = s` everywhere.
/// n = 4 gives the (3,4) threshold scheme, n = 5 the (3,5) one.
pub fn cc_ring(field: Field, n_players: u32, s: FieldElement) -> EncodedGraph {
    assert!(n_players >= 3, "ring needs at least three vertices");
    let mut g = LabelledGraph::with_vertices(field, n_players);
    for v in 1..n_players {
        edge(&mut g, v, v + 1, field.one());
    }
    edge(&mut g, n_players, 1, field.one());
    for v in 1..=n_players {
        g.set_z(VertexId(v), s).expect("ring vertices exist");
    }
    EncodedGraph::new(g).expect("z labels only")
}

/// Secret coefficient vector of a ring encoding: all ones.
pub fn cc_ring_coeff(field: Field, n_players: u32) -> Vec<FieldElement> {
    vec![field.one(); n_players as usize]
}

fn extend_with_dealer(
    field: Field,
    n_players: u32,
    player_edges: &[(u32, u32, i64)],
    dealer_edges: &[(u32, i64)],
) -> EncodedGraph {
    let mut ids = vec![DEALER];
    ids.extend((1..=n_players).map(VertexId));
    let mut g = LabelledGraph::new(field, ids).expect("distinct ids");
    for &(a, b, w) in player_edges {
        edge(&mut g, a, b, field.elem(w));
    }
    for &(p, w) in dealer_edges {
        g.add_edge(DEALER, VertexId(p), field.elem(w))
            .expect("fixture edges are valid");
    }
    EncodedGraph::new(g).expect("no labels")
}

/// Dealer-extended star: dealer attached to the centre with weight 1.
/// Measuring the dealer in `X^t Z` with outcome s leaves the (n,n)
/// encoding with `z_1 = s + t`, `m_1 = t`.
pub fn ext_tree(field: Field, n_players: u32) -> EncodedGraph {
    assert!(n_players >= 2);
    let player_edges: Vec<(u32, u32, i64)> =
        (2..=n_players).map(|v| (1, v, 1)).collect();
    extend_with_dealer(field, n_players, &player_edges, &[(1, 1)])
}

/// Dealer-extended (2,3) star: dealer-2 weight 2, dealer-3 weight 1.
/// Measuring the dealer in `X^t Z` with outcome s leaves the (2,3)
/// encoding shifted by t: z = (0, 2(s+t), s+t) plus S-labels.
pub fn ext_twothree(field: Field) -> EncodedGraph {
    extend_with_dealer(field, 3, &[(1, 2, 1), (1, 3, 1)], &[(2, 2), (3, 1)])
}

/// Dealer-extended 5-ring: dealer attached to every player with weight 1.
pub fn ext_ring35(field: Field) -> EncodedGraph {
    let ring: Vec<(u32, u32, i64)> =
        vec![(1, 2, 1), (2, 3, 1), (3, 4, 1), (4, 5, 1), (5, 1, 1)];
    extend_with_dealer(field, 5, &ring, &[(1, 1), (2, 1), (3, 1), (4, 1), (5, 1)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::stabilizer_of;

    #[test]
    fn shapes_and_labels() {
        let field = Field::new(5).unwrap();
        let s = field.elem(3);

        let tree = cc_tree(field, 4, s);
        assert_eq!(tree.vertex_count(), 4);
        assert_eq!(tree.edges().len(), 3);
        assert_eq!(tree.z_label(VertexId(1)).unwrap(), s);

        let tt = cc_twothree(field, s);
        assert_eq!(tt.z_label(VertexId(2)).unwrap().value(), 1); // 2*3 mod 5
        assert_eq!(tt.z_label(VertexId(3)).unwrap(), s);

        let ring = cc_ring(field, 5, s);
        assert_eq!(ring.edges().len(), 5);
        assert!(ring.ids().iter().all(|&v| ring.z_label(v).unwrap() == s));

        let square = measurement_square(field, 1, 1);
        assert_eq!(square.weight(VertexId(2), VertexId(3)).unwrap().value(), 0);
        assert_eq!(square.weight(VertexId(2), VertexId(4)).unwrap().value(), 2);
    }

    #[test]
    fn extended_graphs_put_dealer_first() {
        let field = Field::new(3).unwrap();
        for g in [ext_tree(field, 4), ext_twothree(field), ext_ring35(field)] {
            assert_eq!(g.ids()[0], DEALER);
            assert!(g.x_label(DEALER).unwrap().is_zero());
        }
        // Extended (2,3): dealer couples with weights (2, 1) to players 2, 3.
        let g = ext_twothree(field);
        assert_eq!(g.weight(DEALER, VertexId(2)).unwrap().value(), 2);
        assert_eq!(g.weight(DEALER, VertexId(3)).unwrap().value(), 1);
        assert_eq!(g.weight(DEALER, VertexId(1)).unwrap().value(), 0);
    }

    #[test]
    fn extended_tree_reduces_to_cc_tree() {
        let field = Field::new(7).unwrap();
        let ext = ext_tree(field, 3);
        let players: Vec<VertexId> = (1..=3).map(VertexId).collect();
        let sub = ext.induced_subgraph(&players).unwrap();
        assert_eq!(sub, cc_tree(field, 3, field.zero()).into_inner());
    }

    #[test]
    fn sample_graph_is_generic() {
        for d in [3, 5, 7, 11] {
            let field = Field::new(d).unwrap();
            let g = sample_weighted_graph(field);
            assert_eq!(g.vertex_count(), 5);
            assert_eq!(g.edges().len(), 6);
            for &v in g.ids() {
                stabilizer_of(&g, v).unwrap();
            }
        }
    }
}
