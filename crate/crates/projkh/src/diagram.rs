//! Oriented projective link diagrams as combinatorial data.
//!
//! A diagram in the projective plane is encoded by its crossings, each with
//! four half-edge slots in counterclockwise order, the oriented arcs joining
//! the slots, and a crosscap parity per arc recording (mod 2) how many times
//! the arc crosses the antipodally identified boundary of the projection
//! disk. Closed components that meet no crossing are kept as free loops with
//! a parity of their own.
//!
//! Slot semantics at a crossing: slot 0 is the incoming under-strand end,
//! slot 2 the outgoing under-strand end, and slots 1 and 3 carry the
//! over-strand, exactly one incoming and one outgoing.

use std::collections::BTreeMap;
use std::fmt;

use serde::de::{self, SeqAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// One of the four half-edge ends of a crossing.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HalfEdgeSlot {
    pub crossing: usize,
    pub slot: u8,
}

impl HalfEdgeSlot {
    pub fn new(crossing: usize, slot: u8) -> Self {
        HalfEdgeSlot { crossing, slot }
    }
}

impl Serialize for HalfEdgeSlot {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        (self.crossing, self.slot).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for HalfEdgeSlot {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct SlotVisitor;
        impl<'de> Visitor<'de> for SlotVisitor {
            type Value = HalfEdgeSlot;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                write!(f, "a [crossing, slot] pair")
            }
            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<Self::Value, A::Error> {
                let crossing: usize = seq
                    .next_element()?
                    .ok_or_else(|| de::Error::invalid_length(0, &self))?;
                let slot: u8 = seq
                    .next_element()?
                    .ok_or_else(|| de::Error::invalid_length(1, &self))?;
                if seq.next_element::<serde_json::Value>()?.is_some() {
                    return Err(de::Error::invalid_length(3, &self));
                }
                Ok(HalfEdgeSlot { crossing, slot })
            }
        }
        deserializer.deserialize_seq(SlotVisitor)
    }
}

/// An oriented arc between two crossing slots. The direction from -> to is
/// the link orientation on the arc; `crosscap` is its boundary-crossing
/// parity.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Arc {
    pub id: u32,
    pub from: HalfEdgeSlot,
    pub to: HalfEdgeSlot,
    pub crosscap: u8,
}

/// An oriented projective link diagram.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectiveDiagram {
    #[serde(rename = "crossings")]
    pub n_crossings: usize,
    pub arcs: Vec<Arc>,
    #[serde(default)]
    pub free_loops: Vec<u8>,
}

/// Crossing sign by the slot rule: positive when the over-strand enters at
/// slot 3, negative when it enters at slot 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sign {
    Positive,
    Negative,
}

impl Sign {
    pub fn value(self) -> i64 {
        match self {
            Sign::Positive => 1,
            Sign::Negative => -1,
        }
    }
}

/// Signs of all crossings together with the counts and the writhe.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SignData {
    pub signs: Vec<Sign>,
    pub n_positive: usize,
    pub n_negative: usize,
    pub writhe: i64,
}

/// Which end of an arc sits at a slot.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Endpoint {
    /// The `from` end.
    Tail,
    /// The `to` end.
    Head,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DiagramError {
    #[error("arc {arc} references crossing {crossing} but the diagram has {n} crossings")]
    BadCrossingIndex { arc: u32, crossing: usize, n: usize },
    #[error("arc {arc} references slot {slot}; slots are 0..=3")]
    BadSlot { arc: u32, slot: u8 },
    #[error("arc {arc} has crosscap parity {parity}; parities are 0 or 1")]
    BadParity { arc: u32, parity: u8 },
    #[error("free loop {index} has crosscap parity {parity}; parities are 0 or 1")]
    BadLoopParity { index: usize, parity: u8 },
    #[error("duplicate arc id {id}")]
    DuplicateArcId { id: u32 },
    #[error("dangling slot: crossing {crossing} slot {slot} is not used by any arc")]
    DanglingSlot { crossing: usize, slot: u8 },
    #[error("doubly-used slot: crossing {crossing} slot {slot} is used by more than one arc end")]
    DoublyUsedSlot { crossing: usize, slot: u8 },
    #[error("orientation inconsistency at crossing {crossing} slot {slot}")]
    OrientationInconsistency { crossing: usize, slot: u8 },
    #[error("diagram does not embed in the projective plane: {reason}")]
    Unrealizable { reason: String },
}

impl ProjectiveDiagram {
    pub fn new(n_crossings: usize, arcs: Vec<Arc>, free_loops: Vec<u8>) -> Self {
        ProjectiveDiagram {
            n_crossings,
            arcs,
            free_loops,
        }
    }

    /// The empty diagram.
    pub fn empty() -> Self {
        Self::new(0, vec![], vec![])
    }

    /// A single closed component with the given crosscap parity and no
    /// crossings.
    pub fn free_loop(parity: u8) -> Self {
        Self::new(0, vec![], vec![parity])
    }

    pub fn arc_index(&self, id: u32) -> Option<usize> {
        self.arcs.iter().position(|a| a.id == id)
    }

    /// Total crosscap parity over all arcs and free loops.
    pub fn total_parity(&self) -> u8 {
        let arcs: u8 = self.arcs.iter().map(|a| a.crosscap & 1).sum::<u8>() & 1;
        let loops: u8 = self.free_loops.iter().map(|p| p & 1).sum::<u8>() & 1;
        arcs ^ loops
    }

    /// Check every structural invariant, reporting the first violation.
    pub fn validate(&self) -> Result<(), DiagramError> {
        let mut seen_ids = BTreeMap::new();
        for arc in &self.arcs {
            for end in [&arc.from, &arc.to] {
                if end.crossing >= self.n_crossings {
                    return Err(DiagramError::BadCrossingIndex {
                        arc: arc.id,
                        crossing: end.crossing,
                        n: self.n_crossings,
                    });
                }
                if end.slot > 3 {
                    return Err(DiagramError::BadSlot {
                        arc: arc.id,
                        slot: end.slot,
                    });
                }
            }
            if arc.crosscap > 1 {
                return Err(DiagramError::BadParity {
                    arc: arc.id,
                    parity: arc.crosscap,
                });
            }
            if seen_ids.insert(arc.id, ()).is_some() {
                return Err(DiagramError::DuplicateArcId { id: arc.id });
            }
        }
        for (index, &parity) in self.free_loops.iter().enumerate() {
            if parity > 1 {
                return Err(DiagramError::BadLoopParity { index, parity });
            }
        }

        // Slot usage: exactly one arc end per slot.
        let mut usage: Vec<[Option<Endpoint>; 4]> = vec![[None; 4]; self.n_crossings];
        for arc in &self.arcs {
            for (end, kind) in [(&arc.from, Endpoint::Tail), (&arc.to, Endpoint::Head)] {
                let cell = &mut usage[end.crossing][end.slot as usize];
                if cell.is_some() {
                    return Err(DiagramError::DoublyUsedSlot {
                        crossing: end.crossing,
                        slot: end.slot,
                    });
                }
                *cell = Some(kind);
            }
        }
        for (crossing, slots) in usage.iter().enumerate() {
            for (slot, cell) in slots.iter().enumerate() {
                if cell.is_none() {
                    return Err(DiagramError::DanglingSlot {
                        crossing,
                        slot: slot as u8,
                    });
                }
            }
            // Slot 0 is always incoming, slot 2 always outgoing, and the
            // over-strand slots 1, 3 carry one of each.
            if usage[crossing][0] != Some(Endpoint::Head) {
                return Err(DiagramError::OrientationInconsistency { crossing, slot: 0 });
            }
            if usage[crossing][2] != Some(Endpoint::Tail) {
                return Err(DiagramError::OrientationInconsistency { crossing, slot: 2 });
            }
            if usage[crossing][1] == usage[crossing][3] {
                return Err(DiagramError::OrientationInconsistency { crossing, slot: 1 });
            }
        }

        self.check_realizable()
    }

    /// Ribbon-surface test that the diagram embeds in the projective plane:
    /// thickening crossings to disks (slots in counterclockwise order) and
    /// arcs to bands (half-twisted when the parity is odd) must produce
    /// components that are planar or at most one Moebius piece overall.
    /// This is what guarantees at most one projective circle per state.
    fn check_realizable(&self) -> Result<(), DiagramError> {
        let mut moebius_pieces = self.free_loops.iter().filter(|&&p| p == 1).count();

        // Connected components of the crossing/arc graph.
        let mut comp = vec![usize::MAX; self.n_crossings];
        let mut n_comp = 0;
        for start in 0..self.n_crossings {
            if comp[start] != usize::MAX {
                continue;
            }
            let id = n_comp;
            n_comp += 1;
            let mut stack = vec![start];
            comp[start] = id;
            while let Some(c) = stack.pop() {
                for arc in &self.arcs {
                    for (a, b) in [
                        (arc.from.crossing, arc.to.crossing),
                        (arc.to.crossing, arc.from.crossing),
                    ] {
                        if a == c && comp[b] == usize::MAX {
                            comp[b] = id;
                            stack.push(b);
                        }
                    }
                }
            }
        }

        // Orientability per component: assign spins so that an arc of even
        // parity joins equal spins and an odd one opposite spins.
        let mut spin: Vec<Option<bool>> = vec![None; self.n_crossings];
        let mut orientable = vec![true; n_comp];
        for start in 0..self.n_crossings {
            if spin[start].is_some() {
                continue;
            }
            spin[start] = Some(false);
            let mut stack = vec![start];
            while let Some(c) = stack.pop() {
                let s = spin[c].unwrap();
                for arc in &self.arcs {
                    for (a, b) in [
                        (arc.from.crossing, arc.to.crossing),
                        (arc.to.crossing, arc.from.crossing),
                    ] {
                        if a != c {
                            continue;
                        }
                        let want = s ^ (arc.crosscap == 1);
                        match spin[b] {
                            None => {
                                spin[b] = Some(want);
                                stack.push(b);
                            }
                            Some(have) => {
                                if have != want {
                                    orientable[comp[b]] = false;
                                }
                            }
                        }
                    }
                }
            }
        }

        // Boundary faces of the ribbon surface: flank nodes are
        // (crossing, slot, side) with side 0 = counterclockwise flank.
        let node = |c: usize, slot: u8, side: usize| (c * 4 + slot as usize) * 2 + side;
        let n_nodes = self.n_crossings * 8;
        let mut corner = vec![usize::MAX; n_nodes];
        for c in 0..self.n_crossings {
            for slot in 0..4u8 {
                let next = (slot + 1) % 4;
                corner[node(c, slot, 0)] = node(c, next, 1);
                corner[node(c, next, 1)] = node(c, slot, 0);
            }
        }
        let mut band = vec![usize::MAX; n_nodes];
        for arc in &self.arcs {
            let u = (arc.from.crossing, arc.from.slot);
            let v = (arc.to.crossing, arc.to.slot);
            if arc.crosscap == 0 {
                band[node(u.0, u.1, 0)] = node(v.0, v.1, 1);
                band[node(v.0, v.1, 1)] = node(u.0, u.1, 0);
                band[node(u.0, u.1, 1)] = node(v.0, v.1, 0);
                band[node(v.0, v.1, 0)] = node(u.0, u.1, 1);
            } else {
                band[node(u.0, u.1, 0)] = node(v.0, v.1, 0);
                band[node(v.0, v.1, 0)] = node(u.0, u.1, 0);
                band[node(u.0, u.1, 1)] = node(v.0, v.1, 1);
                band[node(v.0, v.1, 1)] = node(u.0, u.1, 1);
            }
        }
        let mut faces = vec![0usize; n_comp];
        let mut visited = vec![false; n_nodes];
        for start in 0..n_nodes {
            if visited[start] {
                continue;
            }
            faces[comp[start / 8]] += 1;
            let mut at = start;
            loop {
                visited[at] = true;
                let step = band[corner[at]];
                at = step;
                if at == start {
                    break;
                }
            }
        }

        for id in 0..n_comp {
            let v = comp.iter().filter(|&&x| x == id).count();
            let e = self
                .arcs
                .iter()
                .filter(|a| comp[a.from.crossing] == id)
                .count();
            let chi = v as i64 - e as i64 + faces[id] as i64;
            if orientable[id] {
                if chi != 2 {
                    return Err(DiagramError::Unrealizable {
                        reason: format!("component {} has orientable genus {}", id, (2 - chi) / 2),
                    });
                }
            } else {
                if chi != 1 {
                    return Err(DiagramError::Unrealizable {
                        reason: format!("component {} has crosscap number {}", id, 2 - chi),
                    });
                }
                moebius_pieces += 1;
            }
        }
        if moebius_pieces > 1 {
            return Err(DiagramError::Unrealizable {
                reason: format!(
                    "{} one-sided pieces cannot be disjointly embedded",
                    moebius_pieces
                ),
            });
        }
        Ok(())
    }

    /// The arc end occupying each slot. Requires a validated diagram.
    pub fn end_table(&self) -> Vec<[(usize, Endpoint); 4]> {
        let mut table = vec![[(usize::MAX, Endpoint::Tail); 4]; self.n_crossings];
        for (idx, arc) in self.arcs.iter().enumerate() {
            table[arc.from.crossing][arc.from.slot as usize] = (idx, Endpoint::Tail);
            table[arc.to.crossing][arc.to.slot as usize] = (idx, Endpoint::Head);
        }
        table
    }

    /// Sign of every crossing, plus counts and the writhe.
    pub fn crossing_signs(&self) -> SignData {
        let ends = self.end_table();
        let mut signs = Vec::with_capacity(self.n_crossings);
        for c in 0..self.n_crossings {
            let sign = if ends[c][3].1 == Endpoint::Head {
                Sign::Positive
            } else {
                Sign::Negative
            };
            signs.push(sign);
        }
        let n_positive = signs.iter().filter(|s| **s == Sign::Positive).count();
        let n_negative = signs.len() - n_positive;
        SignData {
            signs,
            n_positive,
            n_negative,
            writhe: n_positive as i64 - n_negative as i64,
        }
    }

    /// In-slot reached by following the strand through a crossing from the
    /// given out-slot, and vice versa: the under-strand joins slots 0 and 2,
    /// the over-strand slots 1 and 3.
    pub fn through(slot: u8) -> u8 {
        (slot + 2) % 4
    }

    /// Link components as lists of arc indices in strand order. Free loops
    /// are not included.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let ends = self.end_table();
        let mut seen = vec![false; self.arcs.len()];
        let mut components = Vec::new();
        for start in 0..self.arcs.len() {
            if seen[start] {
                continue;
            }
            let mut component = Vec::new();
            let mut at = start;
            loop {
                seen[at] = true;
                component.push(at);
                let head = &self.arcs[at].to;
                let (next, endpoint) = ends[head.crossing][Self::through(head.slot) as usize];
                debug_assert_eq!(endpoint, Endpoint::Tail);
                at = next;
                if at == start {
                    break;
                }
            }
            components.push(component);
        }
        components
    }

    /// Reverse the orientation of the link component containing the given
    /// arc. Crossings whose under-strand lies on the component have their
    /// slots rotated by two so that slot 0 stays the incoming under-end.
    pub fn reverse_component(&self, arc_id: u32) -> ProjectiveDiagram {
        let idx = self.arc_index(arc_id).expect("unknown arc id");
        let components = self.components();
        let component: &Vec<usize> = components
            .iter()
            .find(|comp| comp.contains(&idx))
            .expect("arc not on any component");
        let in_component: Vec<bool> = (0..self.arcs.len())
            .map(|i| component.contains(&i))
            .collect();
        let ends = self.end_table();
        let rotate: Vec<bool> = (0..self.n_crossings)
            .map(|c| in_component[ends[c][0].0])
            .collect();
        let fix = |end: &HalfEdgeSlot| -> HalfEdgeSlot {
            if rotate[end.crossing] {
                HalfEdgeSlot::new(end.crossing, (end.slot + 2) % 4)
            } else {
                *end
            }
        };
        let arcs = self
            .arcs
            .iter()
            .enumerate()
            .map(|(i, arc)| {
                let (from, to) = if in_component[i] {
                    (fix(&arc.to), fix(&arc.from))
                } else {
                    (fix(&arc.from), fix(&arc.to))
                };
                Arc {
                    id: arc.id,
                    from,
                    to,
                    crosscap: arc.crosscap,
                }
            })
            .collect();
        ProjectiveDiagram::new(self.n_crossings, arcs, self.free_loops.clone())
    }

    /// Replace crossing `c` by one of its two smoothings, splicing the
    /// adjacent arcs together. Chains that close up become free loops.
    pub fn smooth_crossing(&self, c: usize, smoothing: crate::state::Smoothing) -> ProjectiveDiagram {
        assert!(c < self.n_crossings);
        let ends = self.end_table();

        // Junction j (0 or 1) joins the two slots of one smoothing arc.
        let junction_of_slot = |slot: u8| -> usize {
            match smoothing {
                crate::state::Smoothing::S0 => (slot >> 1) as usize, // (0,1) and (2,3)
                crate::state::Smoothing::S1 => usize::from(slot == 1 || slot == 2), // (0,3) and (1,2)
            }
        };

        #[derive(Clone, Copy, PartialEq)]
        enum Attach {
            Terminal(usize, u8),
            Junction(usize),
        }
        let attach = |end: &HalfEdgeSlot| -> Attach {
            if end.crossing == c {
                Attach::Junction(junction_of_slot(end.slot))
            } else {
                let crossing = if end.crossing > c {
                    end.crossing - 1
                } else {
                    end.crossing
                };
                Attach::Terminal(crossing, end.slot)
            }
        };

        // Arc ends attached to each junction, as (arc index, endpoint).
        let mut at_junction: [Vec<(usize, Endpoint)>; 2] = [vec![], vec![]];
        for slot in 0..4u8 {
            let (arc_idx, endpoint) = ends[c][slot as usize];
            at_junction[junction_of_slot(slot)].push((arc_idx, endpoint));
        }

        // Walk maximal chains through junctions.
        let mut used = vec![false; self.arcs.len()];
        let mut new_arcs: Vec<Arc> = Vec::new();
        let mut new_loops: Vec<u8> = self.free_loops.clone();
        let mut chains: Vec<(Vec<(usize, bool)>, Option<(Attach, Attach)>)> = Vec::new();

        let other_at = |junction: usize, arc_idx: usize, endpoint: Endpoint| -> (usize, Endpoint) {
            let pair = &at_junction[junction];
            if pair[0] == (arc_idx, endpoint) {
                pair[1]
            } else {
                pair[0]
            }
        };

        for start in 0..self.arcs.len() {
            if used[start] {
                continue;
            }
            // Only start walks at arcs touching the smoothed crossing;
            // untouched arcs pass through unchanged.
            let touches = self.arcs[start].from.crossing == c || self.arcs[start].to.crossing == c;
            if !touches {
                used[start] = true;
                let a = &self.arcs[start];
                new_arcs.push(Arc {
                    id: 0,
                    from: match attach(&a.from) {
                        Attach::Terminal(cr, s) => HalfEdgeSlot::new(cr, s),
                        Attach::Junction(_) => unreachable!(),
                    },
                    to: match attach(&a.to) {
                        Attach::Terminal(cr, s) => HalfEdgeSlot::new(cr, s),
                        Attach::Junction(_) => unreachable!(),
                    },
                    crosscap: a.crosscap,
                });
                continue;
            }

            // Walk backwards to a terminal or around a loop, then forwards.
            let mut chain: Vec<(usize, bool)> = vec![(start, true)];
            used[start] = true;
            let mut closed = false;
            // Extend towards the tail of the chain.
            loop {
                let (arc_idx, forward) = chain[0];
                let arc = &self.arcs[arc_idx];
                let back_end = if forward { &arc.from } else { &arc.to };
                match attach(back_end) {
                    Attach::Terminal(..) => break,
                    Attach::Junction(j) => {
                        let endpoint = if forward { Endpoint::Tail } else { Endpoint::Head };
                        let (prev, prev_end) = other_at(j, arc_idx, endpoint);
                        if used[prev] {
                            closed = true;
                            break;
                        }
                        used[prev] = true;
                        // Arriving at prev via prev_end, the chain traverses
                        // prev forwards when we met its head.
                        chain.insert(0, (prev, prev_end == Endpoint::Head));
                    }
                }
            }
            if !closed {
                // Extend towards the head of the chain.
                loop {
                    let &(arc_idx, forward) = chain.last().unwrap();
                    let arc = &self.arcs[arc_idx];
                    let front_end = if forward { &arc.to } else { &arc.from };
                    match attach(front_end) {
                        Attach::Terminal(..) => break,
                        Attach::Junction(j) => {
                            let endpoint = if forward { Endpoint::Head } else { Endpoint::Tail };
                            let (next, next_end) = other_at(j, arc_idx, endpoint);
                            if used[next] {
                                closed = true;
                                break;
                            }
                            used[next] = true;
                            chain.push((next, next_end == Endpoint::Tail));
                        }
                    }
                }
            }
            if closed {
                let parity = chain
                    .iter()
                    .map(|&(i, _)| self.arcs[i].crosscap)
                    .sum::<u8>()
                    & 1;
                new_loops.push(parity);
            } else {
                let (first, first_fwd) = chain[0];
                let &(last, last_fwd) = chain.last().unwrap();
                let back = if first_fwd {
                    attach(&self.arcs[first].from)
                } else {
                    attach(&self.arcs[first].to)
                };
                let front = if last_fwd {
                    attach(&self.arcs[last].to)
                } else {
                    attach(&self.arcs[last].from)
                };
                chains.push((chain, Some((back, front))));
            }
        }

        // Orient each open chain so that it leaves an out-slot; chains whose
        // walk direction enters the out-slot are reversed wholesale.
        for (chain, attach_pair) in &chains {
            let (back, front) = attach_pair.unwrap();
            let (back_t, front_t) = match (back, front) {
                (Attach::Terminal(c1, s1), Attach::Terminal(c2, s2)) => ((c1, s1), (c2, s2)),
                _ => unreachable!(),
            };
            // An out-slot is slot 2 or the over-outgoing slot; rather than
            // consult signs of the reduced diagram, use the parity balance:
            // exactly one endpoint of the chain was a tail in the original
            // diagram when walked in a consistent direction.
            let back_is_tail = {
                let (first, first_fwd) = chain[0];
                if first_fwd {
                    true
                } else {
                    false
                }
            };
            let parity = chain
                .iter()
                .map(|&(i, _)| self.arcs[i].crosscap)
                .sum::<u8>()
                & 1;
            let (from, to) = if back_is_tail {
                (back_t, front_t)
            } else {
                (front_t, back_t)
            };
            new_arcs.push(Arc {
                id: 0,
                from: HalfEdgeSlot::new(from.0, from.1),
                to: HalfEdgeSlot::new(to.0, to.1),
                crosscap: parity,
            });
        }

        // Chains produced by splicing may reverse strand direction through
        // the remaining crossings; renormalize orientations component-wise.
        let mut out = ProjectiveDiagram::new(self.n_crossings - 1, new_arcs, new_loops);
        out.normalize_orientations();
        for (i, arc) in out.arcs.iter_mut().enumerate() {
            arc.id = i as u32;
        }
        out
    }

    /// Repair arc directions so that every crossing sees a consistent
    /// through-going orientation (slot 0 incoming, slot 2 outgoing).
    /// Components are re-oriented along the direction of their lowest
    /// constituent arc; crossings whose under-strand ends up reversed are
    /// rotated by two slots.
    fn normalize_orientations(&mut self) {
        let n = self.arcs.len();
        if n == 0 {
            return;
        }
        // Unoriented traversal: at each crossing, positions pair 0-2, 1-3.
        let mut at_pos: Vec<[Option<(usize, Endpoint)>; 4]> = vec![[None; 4]; self.n_crossings];
        for (idx, arc) in self.arcs.iter().enumerate() {
            at_pos[arc.from.crossing][arc.from.slot as usize] = Some((idx, Endpoint::Tail));
            at_pos[arc.to.crossing][arc.to.slot as usize] = Some((idx, Endpoint::Head));
        }
        let mut direction: Vec<Option<bool>> = vec![None; n];
        for start in 0..n {
            if direction[start].is_some() {
                continue;
            }
            direction[start] = Some(true);
            let mut at = start;
            let mut forward = true;
            loop {
                let arc = &self.arcs[at];
                let end = if forward { &arc.to } else { &arc.from };
                let through = HalfEdgeSlot::new(end.crossing, Self::through(end.slot));
                let (next, endpoint) = at_pos[through.crossing][through.slot as usize].unwrap();
                let next_forward = endpoint == Endpoint::Tail;
                if direction[next].is_some() {
                    break;
                }
                direction[next] = Some(next_forward);
                at = next;
                forward = next_forward;
            }
        }
        // Apply reversals, then rotate crossings whose under-strand flipped.
        let flipped: Vec<bool> = direction.iter().map(|d| !d.unwrap()).collect();
        let rotate: Vec<bool> = (0..self.n_crossings)
            .map(|c| {
                let (idx, endpoint) = at_pos[c][0].unwrap();
                let head_here = endpoint == Endpoint::Head;
                // After reversal, position 0 holds an arc tail exactly when
                // the under-strand direction flipped.
                head_here == flipped[idx]
            })
            .collect();
        for (idx, arc) in self.arcs.iter_mut().enumerate() {
            if flipped[idx] {
                std::mem::swap(&mut arc.from, &mut arc.to);
            }
            for end in [&mut arc.from, &mut arc.to] {
                if rotate[end.crossing] {
                    end.slot = (end.slot + 2) % 4;
                }
            }
        }
    }

    /// Disjoint union with a crossing-free loop of the given parity.
    pub fn with_free_loop(&self, parity: u8) -> ProjectiveDiagram {
        let mut out = self.clone();
        out.free_loops.push(parity);
        out
    }

    /// Relabel arcs and crossings deterministically by traversal order,
    /// starting from the given arc. The result is an isomorphic diagram.
    pub fn relabeled_from(&self, start_arc: u32) -> ProjectiveDiagram {
        let start = self.arc_index(start_arc).expect("unknown arc id");
        let components = self.components();
        let mut order: Vec<usize> = Vec::with_capacity(self.arcs.len());
        let mut emit = |comp: &Vec<usize>, from: usize, order: &mut Vec<usize>| {
            let pos = comp.iter().position(|&i| i == from).unwrap();
            for k in 0..comp.len() {
                order.push(comp[(pos + k) % comp.len()]);
            }
        };
        for comp in &components {
            if comp.contains(&start) {
                emit(comp, start, &mut order);
            }
        }
        for comp in &components {
            if !comp.contains(&start) {
                let min = *comp.iter().min_by_key(|&&i| self.arcs[i].id).unwrap();
                emit(comp, min, &mut order);
            }
        }
        let mut crossing_map = vec![usize::MAX; self.n_crossings];
        let mut next_crossing = 0;
        for &i in &order {
            for end in [&self.arcs[i].from, &self.arcs[i].to] {
                if crossing_map[end.crossing] == usize::MAX {
                    crossing_map[end.crossing] = next_crossing;
                    next_crossing += 1;
                }
            }
        }
        let mut arcs: Vec<Arc> = order
            .iter()
            .enumerate()
            .map(|(new_id, &i)| {
                let a = &self.arcs[i];
                Arc {
                    id: new_id as u32,
                    from: HalfEdgeSlot::new(crossing_map[a.from.crossing], a.from.slot),
                    to: HalfEdgeSlot::new(crossing_map[a.to.crossing], a.to.slot),
                    crosscap: a.crosscap,
                }
            })
            .collect();
        arcs.sort_by_key(|a| a.id);
        ProjectiveDiagram::new(self.n_crossings, arcs, self.free_loops.clone())
    }

    /// A canonical key, equal for diagrams that differ only by arc and
    /// crossing relabeling. Intended for small diagrams; tries all crossing
    /// permutations.
    pub fn canonical_key(&self) -> Vec<(usize, u8, usize, u8, u8)> {
        fn permutations(n: usize) -> Vec<Vec<usize>> {
            if n == 0 {
                return vec![vec![]];
            }
            let mut out = Vec::new();
            for rest in permutations(n - 1) {
                for pos in 0..n {
                    let mut p = rest.clone();
                    p.insert(pos, n - 1);
                    out.push(p);
                }
            }
            out
        }
        let mut best: Option<Vec<(usize, u8, usize, u8, u8)>> = None;
        for perm in permutations(self.n_crossings) {
            let mut key: Vec<(usize, u8, usize, u8, u8)> = self
                .arcs
                .iter()
                .map(|a| {
                    (
                        perm[a.from.crossing],
                        a.from.slot,
                        perm[a.to.crossing],
                        a.to.slot,
                        a.crosscap,
                    )
                })
                .collect();
            key.sort();
            let mut loops = self.free_loops.clone();
            loops.sort_unstable();
            for &p in &loops {
                key.push((usize::MAX, p, usize::MAX, p, p));
            }
            if best.as_ref().map_or(true, |b| key < *b) {
                best = Some(key);
            }
        }
        best.unwrap_or_default()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("diagram serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;

    #[test]
    fn empty_diagram_is_valid() {
        assert_eq!(ProjectiveDiagram::empty().validate(), Ok(()));
    }

    #[test]
    fn free_loop_with_crosscap_is_valid() {
        assert_eq!(ProjectiveDiagram::free_loop(1).validate(), Ok(()));
    }

    #[test]
    fn two_projective_loops_rejected() {
        let d = ProjectiveDiagram::new(0, vec![], vec![1, 1]);
        assert!(matches!(
            d.validate(),
            Err(DiagramError::Unrealizable { .. })
        ));
    }

    #[test]
    fn slot_zero_as_tail_is_orientation_error() {
        // A crossing where slot 0 is used as a `from` end.
        let d = ProjectiveDiagram::new(
            1,
            vec![
                Arc {
                    id: 0,
                    from: HalfEdgeSlot::new(0, 0),
                    to: HalfEdgeSlot::new(0, 2),
                    crosscap: 0,
                },
                Arc {
                    id: 1,
                    from: HalfEdgeSlot::new(0, 1),
                    to: HalfEdgeSlot::new(0, 3),
                    crosscap: 0,
                },
            ],
            vec![],
        );
        assert!(matches!(
            d.validate(),
            Err(DiagramError::OrientationInconsistency { slot: 0, .. })
        ));
    }

    #[test]
    fn dangling_and_doubly_used_slots() {
        let d = ProjectiveDiagram::new(
            1,
            vec![Arc {
                id: 0,
                from: HalfEdgeSlot::new(0, 2),
                to: HalfEdgeSlot::new(0, 0),
                crosscap: 0,
            }],
            vec![],
        );
        assert!(matches!(d.validate(), Err(DiagramError::DanglingSlot { .. })));

        let d = ProjectiveDiagram::new(
            1,
            vec![
                Arc {
                    id: 0,
                    from: HalfEdgeSlot::new(0, 2),
                    to: HalfEdgeSlot::new(0, 0),
                    crosscap: 0,
                },
                Arc {
                    id: 1,
                    from: HalfEdgeSlot::new(0, 2),
                    to: HalfEdgeSlot::new(0, 3),
                    crosscap: 0,
                },
            ],
            vec![],
        );
        assert!(matches!(
            d.validate(),
            Err(DiagramError::DoublyUsedSlot { .. })
        ));
    }

    #[test]
    fn kinked_unknot_is_planar_but_crosscap_kink_is_moebius() {
        let kinked = corpus::by_name("unknot0_kinked").unwrap();
        assert_eq!(kinked.validate(), Ok(()));
        let mut through_crosscap = kinked.clone();
        // Moving the kink loop through the boundary: both kink arcs odd.
        through_crosscap.arcs[0].crosscap = 1;
        assert!(matches!(
            through_crosscap.validate(),
            Err(DiagramError::Unrealizable { .. })
        ));
    }

    #[test]
    fn signs_of_worked_example() {
        let d = corpus::by_name("example").unwrap();
        let data = d.crossing_signs();
        assert_eq!(data.signs, vec![Sign::Positive, Sign::Positive]);
        assert_eq!((data.n_positive, data.n_negative, data.writhe), (2, 0, 2));
    }

    #[test]
    fn zero_crossing_diagram_has_no_signs() {
        let d = ProjectiveDiagram::free_loop(0);
        let data = d.crossing_signs();
        assert!(data.signs.is_empty());
        assert_eq!(data.writhe, 0);
    }

    #[test]
    fn json_round_trip_and_unknown_field_rejection() {
        let d = corpus::by_name("example").unwrap();
        let text = d.to_json();
        let back = ProjectiveDiagram::from_json(&text).unwrap();
        assert_eq!(d, back);
        let bad = text.replace("\"crossings\"", "\"crossing_count\"");
        assert!(ProjectiveDiagram::from_json(&bad).is_err());
        let with_extra = text.replacen('{', "{\"extra\": 1,", 1);
        assert!(ProjectiveDiagram::from_json(&with_extra).is_err());
    }

    #[test]
    fn component_reversal_flips_signs_once() {
        let d = corpus::by_name("example").unwrap();
        let reversed = d.reverse_component(1);
        assert_eq!(reversed.validate(), Ok(()));
        let signs = reversed.crossing_signs();
        assert_eq!(signs.signs, vec![Sign::Negative, Sign::Negative]);
        let back = reversed.reverse_component(1);
        assert_eq!(back.canonical_key(), d.canonical_key());
    }

    #[test]
    fn relabeling_preserves_canonical_key() {
        let d = corpus::by_name("example").unwrap();
        let relabeled = d.relabeled_from(2);
        assert_eq!(relabeled.validate(), Ok(()));
        assert_ne!(relabeled, d);
        assert_eq!(relabeled.canonical_key(), d.canonical_key());
    }
}
