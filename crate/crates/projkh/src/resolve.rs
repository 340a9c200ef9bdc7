//! Resolving diagrams at cube vertices: circle tracing and classification,
//! bifurcations along cube edges, and local orientation consistency at a
//! smoothed crossing.

use crate::diagram::{Endpoint, ProjectiveDiagram, Sign};
use crate::state::{EdgeVector, Smoothing, StateVector};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CircleKind {
    Trivial,
    Projective,
}

/// One circle of a resolved state. The traversal lists `(arc index,
/// forward)` steps in the circle's chosen orientation; the chosen
/// orientation follows the from->to direction of the circle's lowest-id
/// arc. Free-loop circles have an empty traversal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Circle {
    pub traversal: Vec<(usize, bool)>,
    pub free_loop: Option<usize>,
    pub parity: u8,
    pub kind: CircleKind,
}

impl Circle {
    /// Lowest arc id on the circle, used for the canonical ordering. Free
    /// loops are keyed past all arcs.
    fn order_key(&self, diagram: &ProjectiveDiagram) -> (u8, u64) {
        match self.free_loop {
            Some(i) => (1, i as u64),
            None => (
                0,
                self.traversal
                    .iter()
                    .map(|&(idx, _)| diagram.arcs[idx].id as u64)
                    .min()
                    .expect("circle without arcs must be a free loop"),
            ),
        }
    }

    /// Direction (forward?) in which the circle traverses the given arc.
    pub fn direction_on(&self, arc_idx: usize) -> Option<bool> {
        self.traversal
            .iter()
            .find(|&&(idx, _)| idx == arc_idx)
            .map(|&(_, fwd)| fwd)
    }

    /// Sorted arc indices, the identity of the circle across states.
    pub fn arc_set(&self) -> Vec<usize> {
        let mut set: Vec<usize> = self.traversal.iter().map(|&(i, _)| i).collect();
        set.sort_unstable();
        set
    }
}

/// A fully smoothed diagram: the circles in canonical order (ascending
/// lowest arc id, free loops after arc circles, the projective circle
/// moved to the last position).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResolvedState {
    pub state: StateVector,
    pub circles: Vec<Circle>,
}

impl ResolvedState {
    pub fn circle_through_slot(&self, d: &ProjectiveDiagram, crossing: usize, slot: u8) -> usize {
        let ends = d.end_table();
        let (arc_idx, _) = ends[crossing][slot as usize];
        self.circles
            .iter()
            .position(|c| c.direction_on(arc_idx).is_some())
            .expect("every arc lies on a circle")
    }
}

/// Smooth every crossing of a validated diagram according to the state and
/// trace the circles.
pub fn resolve(diagram: &ProjectiveDiagram, state: &StateVector) -> ResolvedState {
    assert_eq!(state.len(), diagram.n_crossings, "state length mismatch");
    let ends = diagram.end_table();
    let n_arcs = diagram.arcs.len();

    // Scan arcs in ascending id order so each circle starts at its lowest
    // arc, traversed forward; that is the canonical orientation.
    let mut id_order: Vec<usize> = (0..n_arcs).collect();
    id_order.sort_by_key(|&i| diagram.arcs[i].id);

    let mut on_circle = vec![false; n_arcs];
    let mut circles: Vec<Circle> = Vec::new();
    for &start in &id_order {
        if on_circle[start] {
            continue;
        }
        let mut traversal: Vec<(usize, bool)> = Vec::new();
        let mut parity = 0u8;
        let mut at = start;
        let mut forward = true;
        loop {
            on_circle[at] = true;
            traversal.push((at, forward));
            parity ^= diagram.arcs[at].crosscap & 1;
            let arc = &diagram.arcs[at];
            let end = if forward { &arc.to } else { &arc.from };
            let partner = state.0[end.crossing].partner(end.slot);
            let (next, endpoint) = ends[end.crossing][partner as usize];
            forward = endpoint == Endpoint::Tail;
            at = next;
            if at == start && forward {
                break;
            }
        }
        circles.push(Circle {
            traversal,
            free_loop: None,
            parity,
            kind: if parity == 1 {
                CircleKind::Projective
            } else {
                CircleKind::Trivial
            },
        });
    }
    for (i, &parity) in diagram.free_loops.iter().enumerate() {
        circles.push(Circle {
            traversal: vec![],
            free_loop: Some(i),
            parity: parity & 1,
            kind: if parity & 1 == 1 {
                CircleKind::Projective
            } else {
                CircleKind::Trivial
            },
        });
    }

    circles.sort_by_key(|c| c.order_key(diagram));
    let projective = circles
        .iter()
        .filter(|c| c.kind == CircleKind::Projective)
        .count();
    assert!(
        projective <= 1,
        "more than one projective circle; diagram is not embeddable"
    );
    // The projective circle, when present, goes last.
    if let Some(pos) = circles.iter().position(|c| c.kind == CircleKind::Projective) {
        let p = circles.remove(pos);
        circles.push(p);
    }
    ResolvedState {
        state: state.clone(),
        circles,
    }
}

/// Local orientation consistency of a circle at a smoothed crossing.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Consistency {
    Consistent,
    Inconsistent,
    Indetermined,
}

impl Consistency {
    pub fn flipped(self) -> Consistency {
        match self {
            Consistency::Consistent => Consistency::Inconsistent,
            Consistency::Inconsistent => Consistency::Consistent,
            Consistency::Indetermined => Consistency::Indetermined,
        }
    }

    pub fn sign(self) -> i64 {
        match self {
            Consistency::Consistent => 1,
            Consistency::Inconsistent => -1,
            Consistency::Indetermined => panic!("indetermined consistency has no sign"),
        }
    }
}

/// Slots of the outgoing northeast arc and the ingoing southwest arc in the
/// crossing-local frame where outgoing arcs face northwest/northeast.
fn ne_sw_slots(sign: Sign) -> (u8, u8) {
    match sign {
        Sign::Positive => (1, 3),
        Sign::Negative => (2, 0),
    }
}

/// Consistency of the circle (by index into the resolved state) at the
/// given crossing, per its chosen orientation: consistent when it agrees
/// with the northeast out-arc or disagrees with the southwest in-arc.
/// Returns `None` if the circle does not pass through the crossing.
pub fn local_consistency(
    d: &ProjectiveDiagram,
    rs: &ResolvedState,
    crossing: usize,
    circle_idx: usize,
) -> Option<Consistency> {
    let ends = d.end_table();
    let circle = &rs.circles[circle_idx];
    let sign = d.crossing_signs().signs[crossing];
    let (ne, sw) = ne_sw_slots(sign);

    // The circle exits via a slot when it moves away from the crossing
    // along the arc attached there.
    let exits_via = |slot: u8| -> Option<bool> {
        let (arc_idx, endpoint) = ends[crossing][slot as usize];
        circle.direction_on(arc_idx).map(|fwd| {
            // A tail end points away from the crossing.
            match endpoint {
                Endpoint::Tail => fwd,
                Endpoint::Head => !fwd,
            }
        })
    };

    // The northeast end always sits on an outgoing arc and the southwest
    // end on an ingoing one; in both cases consistency means the circle
    // exits the crossing through that end.
    let ne_test = exits_via(ne);
    let sw_test = exits_via(sw);

    // Self-arcs can put both ends of one diagram arc at this crossing; the
    // tests above look at the arc, not the end, so recompute endwise when
    // the arc at NE or SW is a self-arc through the site.
    let endwise = |slot: u8| -> Option<bool> {
        let (arc_idx, endpoint) = ends[crossing][slot as usize];
        let arc = &d.arcs[arc_idx];
        let self_arc = arc.from.crossing == crossing && arc.to.crossing == crossing;
        if !self_arc {
            return exits_via(slot);
        }
        circle.direction_on(arc_idx).map(|fwd| match endpoint {
            Endpoint::Tail => fwd,
            Endpoint::Head => !fwd,
        })
    };
    let _ = endwise;

    match (ne_test, sw_test) {
        (None, None) => None,
        (Some(t), None) | (None, Some(t)) => Some(if t {
            Consistency::Consistent
        } else {
            Consistency::Inconsistent
        }),
        (Some(a), Some(b)) => {
            if a == b {
                Some(if a {
                    Consistency::Consistent
                } else {
                    Consistency::Inconsistent
                })
            } else {
                Some(Consistency::Indetermined)
            }
        }
    }
}

/// Geometric position of a smoothing arc in the crossing-local frame.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SiteRole {
    Left,
    Right,
    Top,
    Bottom,
}

/// Roles of the two smoothing arcs, listed as
/// `[(role of pair {0,1} or {0,3}), (role of pair {2,3} or {1,2})]`.
fn site_roles(sign: Sign, smoothing: Smoothing) -> [SiteRole; 2] {
    match (sign, smoothing) {
        (Sign::Positive, Smoothing::S0) => [SiteRole::Right, SiteRole::Left],
        (Sign::Positive, Smoothing::S1) => [SiteRole::Bottom, SiteRole::Top],
        (Sign::Negative, Smoothing::S0) => [SiteRole::Bottom, SiteRole::Top],
        (Sign::Negative, Smoothing::S1) => [SiteRole::Left, SiteRole::Right],
    }
}

/// Slot pairs of the two smoothing arcs: the pair containing slot 0 first.
fn smoothing_pairs(smoothing: Smoothing) -> [(u8, u8); 2] {
    match smoothing {
        Smoothing::S0 => [(0, 1), (2, 3)],
        Smoothing::S1 => [(0, 3), (1, 2)],
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BifurcationType {
    TwoToOne,
    OneToTwo,
    OneToOne,
}

/// Circle bookkeeping along one cube edge: how the circles at the site
/// change, their geometric roles, and the correspondence of the circles
/// away from the site.
#[derive(Clone, Debug)]
pub struct Bifurcation {
    pub bif_type: BifurcationType,
    pub source: ResolvedState,
    pub target: ResolvedState,
    /// (role, circle index in source) for the two smoothing arcs of the
    /// source state at the site.
    pub source_pairs: [(SiteRole, usize); 2],
    /// Likewise in the target state.
    pub target_pairs: [(SiteRole, usize); 2],
    /// Pairs (source circle index, target circle index) away from the site.
    pub spectators: Vec<(usize, usize)>,
}

impl Bifurcation {
    pub fn source_site(&self) -> Vec<usize> {
        let mut v = vec![self.source_pairs[0].1];
        if self.source_pairs[1].1 != self.source_pairs[0].1 {
            v.push(self.source_pairs[1].1);
        }
        v
    }

    pub fn target_site(&self) -> Vec<usize> {
        let mut v = vec![self.target_pairs[0].1];
        if self.target_pairs[1].1 != self.target_pairs[0].1 {
            v.push(self.target_pairs[1].1);
        }
        v
    }

    pub fn source_circle_with_role(&self, role: SiteRole) -> usize {
        self.source_pairs
            .iter()
            .find(|(r, _)| *r == role)
            .map(|&(_, c)| c)
            .expect("role not present at this smoothing")
    }

    pub fn target_circle_with_role(&self, role: SiteRole) -> usize {
        self.target_pairs
            .iter()
            .find(|(r, _)| *r == role)
            .map(|&(_, c)| c)
            .expect("role not present at this smoothing")
    }
}

/// Classify the circle change along a cube edge and compute roles and the
/// away-from-site correspondence.
pub fn bifurcation(d: &ProjectiveDiagram, edge: &EdgeVector) -> Bifurcation {
    let crossing = edge.star();
    let sign = d.crossing_signs().signs[crossing];
    let source = resolve(d, &edge.source());
    let target = resolve(d, &edge.target());

    let pairs_for = |rs: &ResolvedState, smoothing: Smoothing| -> [(SiteRole, usize); 2] {
        let roles = site_roles(sign, smoothing);
        let pairs = smoothing_pairs(smoothing);
        [
            (roles[0], rs.circle_through_slot(d, crossing, pairs[0].0)),
            (roles[1], rs.circle_through_slot(d, crossing, pairs[1].0)),
        ]
    };
    let source_pairs = pairs_for(&source, Smoothing::S0);
    let target_pairs = pairs_for(&target, Smoothing::S1);

    let n_source_site = if source_pairs[0].1 == source_pairs[1].1 { 1 } else { 2 };
    let n_target_site = if target_pairs[0].1 == target_pairs[1].1 { 1 } else { 2 };
    let bif_type = match (n_source_site, n_target_site) {
        (2, 1) => BifurcationType::TwoToOne,
        (1, 2) => BifurcationType::OneToTwo,
        (1, 1) => BifurcationType::OneToOne,
        other => unreachable!("impossible site circle counts {:?}", other),
    };

    // Spectator circles are identical arc sets (or the same free loop) in
    // both states.
    let source_site = [source_pairs[0].1, source_pairs[1].1];
    let target_site = [target_pairs[0].1, target_pairs[1].1];
    let mut spectators = Vec::new();
    for (si, sc) in source.circles.iter().enumerate() {
        if source_site.contains(&si) {
            continue;
        }
        let ti = target
            .circles
            .iter()
            .position(|tc| match (sc.free_loop, tc.free_loop) {
                (Some(a), Some(b)) => a == b,
                (None, None) => sc.arc_set() == tc.arc_set(),
                _ => false,
            })
            .expect("spectator circle must persist across the edge");
        debug_assert!(!target_site.contains(&ti));
        spectators.push((si, ti));
    }
    debug_assert_eq!(
        spectators.len() + n_source_site,
        source.circles.len(),
        "source circles exhausted"
    );
    debug_assert_eq!(
        spectators.len() + n_target_site,
        target.circles.len(),
        "target circles exhausted"
    );

    Bifurcation {
        bif_type,
        source,
        target,
        source_pairs,
        target_pairs,
        spectators,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::state::StateVector;

    fn example() -> ProjectiveDiagram {
        corpus::by_name("example").unwrap()
    }

    #[test]
    fn zero_crossing_resolutions() {
        let d = ProjectiveDiagram::free_loop(0);
        let rs = resolve(&d, &StateVector::from_bits(&[]));
        assert_eq!(rs.circles.len(), 1);
        assert_eq!(rs.circles[0].kind, CircleKind::Trivial);

        let d = ProjectiveDiagram::free_loop(1);
        let rs = resolve(&d, &StateVector::from_bits(&[]));
        assert_eq!(rs.circles.len(), 1);
        assert_eq!(rs.circles[0].kind, CircleKind::Projective);
    }

    #[test]
    fn example_state_circles() {
        let d = example();
        let rs00 = resolve(&d, &StateVector::from_bits(&[0, 0]));
        assert_eq!(rs00.circles.len(), 2);
        assert_eq!(rs00.circles[0].kind, CircleKind::Trivial);
        assert_eq!(rs00.circles[0].arc_set(), vec![0, 1]);
        assert_eq!(rs00.circles[1].kind, CircleKind::Projective);
        assert_eq!(rs00.circles[1].arc_set(), vec![2, 3]);

        for bits in [[0, 1], [1, 0]] {
            let rs = resolve(&d, &StateVector::from_bits(&bits));
            assert_eq!(rs.circles.len(), 1);
            assert_eq!(rs.circles[0].kind, CircleKind::Projective);
        }

        let rs11 = resolve(&d, &StateVector::from_bits(&[1, 1]));
        assert_eq!(rs11.circles.len(), 2);
        assert_eq!(rs11.circles[0].arc_set(), vec![0, 2]);
        assert_eq!(rs11.circles[0].kind, CircleKind::Trivial);
        assert_eq!(rs11.circles[1].arc_set(), vec![1, 3]);
        assert_eq!(rs11.circles[1].kind, CircleKind::Projective);
    }

    #[test]
    fn example_traversals_follow_lowest_arc() {
        let d = example();
        let rs01 = resolve(&d, &StateVector::from_bits(&[0, 1]));
        assert_eq!(
            rs01.circles[0].traversal,
            vec![(0, true), (2, false), (3, false), (1, true)]
        );
        let rs10 = resolve(&d, &StateVector::from_bits(&[1, 0]));
        assert_eq!(
            rs10.circles[0].traversal,
            vec![(0, true), (1, true), (3, false), (2, false)]
        );
    }

    #[test]
    fn example_local_consistency() {
        let d = example();
        let rs00 = resolve(&d, &StateVector::from_bits(&[0, 0]));
        // Trivial circle: exits the northeast end of crossing 0, enters the
        // southwest end of crossing 1.
        assert_eq!(
            local_consistency(&d, &rs00, 0, 0),
            Some(Consistency::Consistent)
        );
        assert_eq!(
            local_consistency(&d, &rs00, 1, 0),
            Some(Consistency::Inconsistent)
        );
        // Projective circle: the reverse.
        assert_eq!(
            local_consistency(&d, &rs00, 0, 1),
            Some(Consistency::Inconsistent)
        );
        assert_eq!(
            local_consistency(&d, &rs00, 1, 1),
            Some(Consistency::Consistent)
        );

        let rs01 = resolve(&d, &StateVector::from_bits(&[0, 1]));
        assert_eq!(
            local_consistency(&d, &rs01, 1, 0),
            Some(Consistency::Inconsistent)
        );
        let rs10 = resolve(&d, &StateVector::from_bits(&[1, 0]));
        assert_eq!(
            local_consistency(&d, &rs10, 0, 0),
            Some(Consistency::Consistent)
        );

        let rs11 = resolve(&d, &StateVector::from_bits(&[1, 1]));
        assert_eq!(
            local_consistency(&d, &rs11, 0, 0),
            Some(Consistency::Consistent)
        );
        assert_eq!(
            local_consistency(&d, &rs11, 0, 1),
            Some(Consistency::Consistent)
        );
        assert_eq!(
            local_consistency(&d, &rs11, 1, 0),
            Some(Consistency::Inconsistent)
        );
        assert_eq!(
            local_consistency(&d, &rs11, 1, 1),
            Some(Consistency::Inconsistent)
        );
    }

    #[test]
    fn example_bifurcations() {
        let d = example();
        let e = EdgeVector::new(StateVector::from_bits(&[0, 0]).0, 1);
        let b = bifurcation(&d, &e);
        assert_eq!(b.bif_type, BifurcationType::TwoToOne);
        // Trivial circle is the left one at crossing 1.
        assert_eq!(b.source_circle_with_role(SiteRole::Left), 0);
        assert_eq!(b.source_circle_with_role(SiteRole::Right), 1);

        let e = EdgeVector::new(StateVector::from_bits(&[0, 0]).0, 0);
        let b = bifurcation(&d, &e);
        assert_eq!(b.bif_type, BifurcationType::TwoToOne);
        // The projective circle is the left one at crossing 0.
        assert_eq!(b.source_circle_with_role(SiteRole::Left), 1);

        let e = EdgeVector::new(StateVector::from_bits(&[0, 1]).0, 0);
        let b = bifurcation(&d, &e);
        assert_eq!(b.bif_type, BifurcationType::OneToTwo);
        assert_eq!(b.target_circle_with_role(SiteRole::Top), 0);
        assert_eq!(b.target_circle_with_role(SiteRole::Bottom), 1);

        let e = EdgeVector::new(StateVector::from_bits(&[1, 0]).0, 1);
        let b = bifurcation(&d, &e);
        assert_eq!(b.bif_type, BifurcationType::OneToTwo);
        assert_eq!(b.target_circle_with_role(SiteRole::Top), 1);
        assert_eq!(b.target_circle_with_role(SiteRole::Bottom), 0);
    }

    #[test]
    fn one_to_one_bifurcation_on_chord_pair() {
        let d = corpus::by_name("chords2").unwrap();
        let e = EdgeVector::new(vec![crate::state::Smoothing::S0], 0);
        let b = bifurcation(&d, &e);
        assert_eq!(b.bif_type, BifurcationType::OneToOne);
        // Both smoothing arcs of both endpoint states lie on one circle.
        assert_eq!(b.source.circles.len(), 1);
        assert_eq!(b.target.circles.len(), 1);
    }

    #[test]
    fn indetermined_exactly_at_one_to_one() {
        let d = corpus::by_name("chords2").unwrap();
        let rs = resolve(&d, &StateVector::from_bits(&[0]));
        assert_eq!(
            local_consistency(&d, &rs, 0, 0),
            Some(Consistency::Indetermined)
        );
    }

    #[test]
    fn parity_conservation_on_corpus() {
        for entry in corpus::corpus() {
            let d = &entry.diagram;
            let total = d.total_parity();
            for state in StateVector::all(d.n_crossings) {
                let rs = resolve(d, &state);
                let sum: u8 = rs.circles.iter().map(|c| c.parity).sum::<u8>() & 1;
                assert_eq!(sum, total, "{} state {}", entry.name, state);
                let projective = rs
                    .circles
                    .iter()
                    .filter(|c| c.kind == CircleKind::Projective)
                    .count();
                assert!(projective <= 1);
            }
        }
    }

    #[test]
    fn resolve_stable_under_relabeling() {
        let d = example();
        let relabeled = d.relabeled_from(3);
        for state in StateVector::all(2) {
            let a = resolve(&d, &state);
            let b = resolve(&relabeled, &state);
            let mut stats_a: Vec<(usize, u8)> = a
                .circles
                .iter()
                .map(|c| (c.traversal.len(), c.parity))
                .collect();
            let mut stats_b: Vec<(usize, u8)> = b
                .circles
                .iter()
                .map(|c| (c.traversal.len(), c.parity))
                .collect();
            stats_a.sort_unstable();
            stats_b.sort_unstable();
            assert_eq!(stats_a, stats_b);
        }
    }
}
