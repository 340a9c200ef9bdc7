//! The module attached to each cube vertex: wedge-ordered generator bases
//! with an integer bigrading, and their flattening into chain groups.
//!
//! A trivial circle contributes a rank-2 module with generators of degree
//! (-2,0) and (2,0); a projective circle contributes generators of degree
//! (0,1) and (0,-1). The module of a state is the ordered wedge of its
//! circle modules shifted by `#0 - #1` in the first grading.

use std::collections::BTreeMap;
use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::diagram::ProjectiveDiagram;
use crate::resolve::{resolve, CircleKind, ResolvedState};
use crate::skein::LaurentPoly2;
use crate::state::StateVector;

/// Basis generator of a single circle module.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Generator {
    One,
    X,
    OneBar,
    XBar,
}

impl Generator {
    pub fn for_kind(kind: CircleKind, x_type: bool) -> Generator {
        match (kind, x_type) {
            (CircleKind::Trivial, false) => Generator::One,
            (CircleKind::Trivial, true) => Generator::X,
            (CircleKind::Projective, false) => Generator::OneBar,
            (CircleKind::Projective, true) => Generator::XBar,
        }
    }

    pub fn is_x_type(self) -> bool {
        matches!(self, Generator::X | Generator::XBar)
    }

    pub fn kind(self) -> CircleKind {
        match self {
            Generator::One | Generator::X => CircleKind::Trivial,
            Generator::OneBar | Generator::XBar => CircleKind::Projective,
        }
    }

    pub fn degree(self) -> (i64, i64) {
        match self {
            Generator::One => (-2, 0),
            Generator::X => (2, 0),
            Generator::OneBar => (0, 1),
            Generator::XBar => (0, -1),
        }
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Generator::One => write!(f, "1"),
            Generator::X => write!(f, "X"),
            Generator::OneBar => write!(f, "1\u{0304}"),
            Generator::XBar => write!(f, "X\u{0304}"),
        }
    }
}

/// One wedge factor: a generator assigned to a circle.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FactorLabel {
    /// Canonical index of the circle in its resolved state.
    pub circle: usize,
    pub kind: CircleKind,
    pub generator: Generator,
}

impl FactorLabel {
    pub fn new(circle: usize, kind: CircleKind, x_type: bool) -> Self {
        FactorLabel {
            circle,
            kind,
            generator: Generator::for_kind(kind, x_type),
        }
    }
}

/// An ordered wedge word with its bigrade.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WedgeGenerator {
    pub factors: Vec<FactorLabel>,
    pub j: i64,
    pub k: i64,
}

impl fmt::Display for WedgeGenerator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.factors.is_empty() {
            return write!(f, "1");
        }
        let word: Vec<String> = self
            .factors
            .iter()
            .map(|x| x.generator.to_string())
            .collect();
        write!(f, "{}", word.join("\u{2227}"))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Provenance {
    State(StateVector),
    Degree(i64),
}

/// An ordered basis of wedge generators.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChainModule {
    pub basis: Vec<WedgeGenerator>,
    pub provenance: Provenance,
}

impl ChainModule {
    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    /// One line per generator: `state=0110 factors=X∧1∧X̄ j=.. k=..`.
    pub fn dump(&self) -> String {
        let origin = match &self.provenance {
            Provenance::State(s) => format!("state={}", s),
            Provenance::Degree(i) => format!("degree={}", i),
        };
        self.basis
            .iter()
            .map(|g| format!("{} factors={} j={} k={}", origin, g, g.j, g.k))
            .collect::<Vec<_>>()
            .join("\n")
    }
}

/// Source of the free choices in the construction: the order in which the
/// circles of each state are listed and the orientation of each circle.
/// The homology does not depend on them.
pub trait ChoiceProvider {
    /// A permutation of `0..n_circles`: position `p` of the wedge holds the
    /// circle with canonical index `order[p]`.
    fn circle_order(&self, state: &StateVector, n_circles: usize) -> Vec<usize>;

    /// Whether the chosen orientation of the circle (canonical index) is
    /// the reverse of the canonical one.
    fn flipped(&self, state: &StateVector, circle: usize) -> bool;
}

/// The deterministic baseline: canonical order, canonical orientations.
#[derive(Clone, Copy, Debug, Default)]
pub struct CanonicalChoices;

impl ChoiceProvider for CanonicalChoices {
    fn circle_order(&self, _state: &StateVector, n_circles: usize) -> Vec<usize> {
        (0..n_circles).collect()
    }

    fn flipped(&self, _state: &StateVector, _circle: usize) -> bool {
        false
    }
}

/// Seed-determined random orders and orientations, stable per state.
#[derive(Clone, Copy, Debug)]
pub struct SeededChoices {
    pub seed: u64,
}

impl SeededChoices {
    pub fn new(seed: u64) -> Self {
        SeededChoices { seed }
    }

    fn rng_for(&self, state: &StateVector, salt: u64) -> ChaCha20Rng {
        let mut h = self.seed ^ 0x9e37_79b9_7f4a_7c15 ^ salt.wrapping_mul(0xbf58_476d_1ce4_e5b9);
        for s in &state.0 {
            h = h
                .wrapping_mul(6364136223846793005)
                .wrapping_add(s.bit() as u64 + 1);
        }
        h = h.wrapping_mul(6364136223846793005).wrapping_add(state.len() as u64);
        ChaCha20Rng::seed_from_u64(h)
    }
}

impl ChoiceProvider for SeededChoices {
    fn circle_order(&self, state: &StateVector, n_circles: usize) -> Vec<usize> {
        let mut rng = self.rng_for(state, 1);
        let mut order: Vec<usize> = (0..n_circles).collect();
        order.shuffle(&mut rng);
        order
    }

    fn flipped(&self, state: &StateVector, circle: usize) -> bool {
        let mut rng = self.rng_for(state, 2 + circle as u64);
        rng.gen_bool(0.5)
    }
}

/// The module of one state from an already resolved state.
pub fn state_module_from(
    rs: &ResolvedState,
    choices: &dyn ChoiceProvider,
) -> ChainModule {
    let n = rs.circles.len();
    let order = choices.circle_order(&rs.state, n);
    debug_assert_eq!(order.len(), n);
    let shift = rs.state.degree();
    let mut basis = Vec::with_capacity(1usize << n);
    for index in 0..(1usize << n) {
        let mut factors = Vec::with_capacity(n);
        let mut j = shift;
        let mut k = 0i64;
        for (p, &circle) in order.iter().enumerate() {
            let x_type = (index >> (n - 1 - p)) & 1 == 1;
            let label = FactorLabel::new(circle, rs.circles[circle].kind, x_type);
            let (dj, dk) = label.generator.degree();
            j += dj;
            k += dk;
            factors.push(label);
        }
        basis.push(WedgeGenerator { factors, j, k });
    }
    ChainModule {
        basis,
        provenance: Provenance::State(rs.state.clone()),
    }
}

/// Basis of the module of a state: all generator assignments in
/// lexicographic order with the unit generator below the X generator and
/// the last factor varying fastest.
pub fn state_module(
    d: &ProjectiveDiagram,
    state: &StateVector,
    choices: &dyn ChoiceProvider,
) -> ChainModule {
    state_module_from(&resolve(d, state), choices)
}

/// Layout of one chain group: the contributing states in lexicographic
/// order with their basis offsets.
#[derive(Clone, Debug)]
pub struct DegreeLayout {
    pub degree: i64,
    pub states: Vec<StateVector>,
    pub offsets: Vec<usize>,
    pub module: ChainModule,
}

impl DegreeLayout {
    pub fn rank(&self) -> usize {
        self.module.rank()
    }

    pub fn state_offset(&self, state: &StateVector) -> Option<usize> {
        self.states
            .iter()
            .position(|s| s == state)
            .map(|p| self.offsets[p])
    }
}

/// All chain groups, keyed by homological degree `i = n, n-2, ..., -n`.
/// Zero-rank groups are represented explicitly.
pub fn flatten(d: &ProjectiveDiagram, choices: &dyn ChoiceProvider) -> BTreeMap<i64, DegreeLayout> {
    let n = d.n_crossings;
    let mut by_degree: BTreeMap<i64, DegreeLayout> = BTreeMap::new();
    let mut i = n as i64;
    while i >= -(n as i64) {
        by_degree.insert(
            i,
            DegreeLayout {
                degree: i,
                states: vec![],
                offsets: vec![],
                module: ChainModule {
                    basis: vec![],
                    provenance: Provenance::Degree(i),
                },
            },
        );
        i -= 2;
    }
    for state in StateVector::all(n) {
        let degree = state.degree();
        let layout = by_degree.get_mut(&degree).expect("degree in range");
        let module = state_module(d, &state, choices);
        layout.states.push(state);
        layout.offsets.push(layout.module.basis.len());
        layout.module.basis.extend(module.basis);
    }
    by_degree
}

/// Reorder the factors of a wedge word; the multiplier is the sign of the
/// permutation and the bigrade is unchanged. `perm[p]` is the old position
/// of the factor newly at position `p`.
pub fn permute_factors(g: &WedgeGenerator, perm: &[usize]) -> (WedgeGenerator, i64) {
    assert_eq!(perm.len(), g.factors.len());
    let factors: Vec<FactorLabel> = perm.iter().map(|&p| g.factors[p]).collect();
    (
        WedgeGenerator {
            factors,
            j: g.j,
            k: g.k,
        },
        permutation_sign(perm),
    )
}

/// Sign of a permutation given as an image sequence.
pub fn permutation_sign(perm: &[usize]) -> i64 {
    let mut inversions = 0usize;
    for a in 0..perm.len() {
        for b in (a + 1)..perm.len() {
            if perm[a] > perm[b] {
                inversions += 1;
            }
        }
    }
    if inversions % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Poincare polynomial: the sum of `A^j z^k` over the basis.
pub fn poincare(m: &ChainModule) -> LaurentPoly2 {
    let mut p = LaurentPoly2::zero();
    for g in &m.basis {
        p.add_term(g.j, g.k, 1.into());
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::resolve::CircleKind;

    fn bigrades(m: &ChainModule) -> Vec<(i64, i64)> {
        m.basis.iter().map(|g| (g.j, g.k)).collect()
    }

    #[test]
    fn empty_diagram_module() {
        let d = ProjectiveDiagram::empty();
        let m = state_module(&d, &StateVector::from_bits(&[]), &CanonicalChoices);
        assert_eq!(m.rank(), 1);
        assert_eq!(bigrades(&m), vec![(0, 0)]);
    }

    #[test]
    fn single_trivial_circle_module() {
        let d = ProjectiveDiagram::free_loop(0);
        let m = state_module(&d, &StateVector::from_bits(&[]), &CanonicalChoices);
        assert_eq!(bigrades(&m), vec![(-2, 0), (2, 0)]);
        assert_eq!(poincare(&m), LaurentPoly2::a_pow(2).add(&LaurentPoly2::a_pow(-2)));
    }

    #[test]
    fn single_projective_circle_module() {
        let d = ProjectiveDiagram::free_loop(1);
        let m = state_module(&d, &StateVector::from_bits(&[]), &CanonicalChoices);
        assert_eq!(bigrades(&m), vec![(0, 1), (0, -1)]);
        assert_eq!(poincare(&m), LaurentPoly2::z_plus_z_inv());
    }

    #[test]
    fn worked_example_state_modules() {
        let d = corpus::by_name("example").unwrap();
        let m00 = state_module(&d, &StateVector::from_bits(&[0, 0]), &CanonicalChoices);
        assert_eq!(m00.rank(), 4);
        // Basis order 1∧1̄, 1∧X̄, X∧1̄, X∧X̄ with the +2 shift.
        assert_eq!(bigrades(&m00), vec![(0, 1), (0, -1), (4, 1), (4, -1)]);
        assert_eq!(m00.basis[0].to_string(), "1\u{2227}1\u{0304}");
        assert_eq!(m00.basis[3].to_string(), "X\u{2227}X\u{0304}");

        let m01 = state_module(&d, &StateVector::from_bits(&[0, 1]), &CanonicalChoices);
        assert_eq!(bigrades(&m01), vec![(0, 1), (0, -1)]);

        let m11 = state_module(&d, &StateVector::from_bits(&[1, 1]), &CanonicalChoices);
        assert_eq!(bigrades(&m11), vec![(-4, 1), (-4, -1), (0, 1), (0, -1)]);
    }

    #[test]
    fn flatten_ranks_of_example() {
        let d = corpus::by_name("example").unwrap();
        let flat = flatten(&d, &CanonicalChoices);
        let ranks: Vec<(i64, usize)> = flat.iter().map(|(i, l)| (*i, l.rank())).collect();
        assert_eq!(ranks, vec![(-2, 4), (0, 4), (2, 4)]);
        // Degree 0 concatenates states 01 then 10.
        let l0 = &flat[&0];
        assert_eq!(l0.states.len(), 2);
        assert_eq!(l0.states[0].to_string(), "01");
        assert_eq!(l0.offsets, vec![0, 2]);
    }

    #[test]
    fn flatten_total_rank_matches_state_sum() {
        for name in ["example", "chords2", "unknot0_kinked"] {
            let d = corpus::by_name(name).unwrap();
            let flat = flatten(&d, &CanonicalChoices);
            let total: usize = flat.values().map(|l| l.rank()).sum();
            let expected: usize = StateVector::all(d.n_crossings)
                .map(|s| 1usize << resolve(&d, &s).circles.len())
                .sum();
            assert_eq!(total, expected);
        }
    }

    #[test]
    fn degree_parity_invariant() {
        let d = corpus::by_name("example").unwrap();
        for (i, layout) in flatten(&d, &CanonicalChoices) {
            for g in &layout.module.basis {
                assert_eq!((g.j - i).rem_euclid(2), 0);
            }
        }
    }

    #[test]
    fn state_poincare_product_formula() {
        let d = corpus::by_name("example").unwrap();
        for state in StateVector::all(2) {
            let rs = resolve(&d, &state);
            let m = state_module_from(&rs, &CanonicalChoices);
            let mut expected = LaurentPoly2::a_pow(state.degree());
            for c in &rs.circles {
                let factor = match c.kind {
                    CircleKind::Trivial => LaurentPoly2::a_pow(2).add(&LaurentPoly2::a_pow(-2)),
                    CircleKind::Projective => LaurentPoly2::z_plus_z_inv(),
                };
                expected = expected.mul(&factor);
            }
            assert_eq!(poincare(&m), expected);
        }
    }

    #[test]
    fn permutation_signs() {
        let d = corpus::by_name("example").unwrap();
        let m = state_module(&d, &StateVector::from_bits(&[0, 0]), &CanonicalChoices);
        let g = &m.basis[1];
        let (same, s) = permute_factors(g, &[0, 1]);
        assert_eq!((same.factors.clone(), s), (g.factors.clone(), 1));
        let (_, s) = permute_factors(g, &[1, 0]);
        assert_eq!(s, -1);
        assert_eq!(permutation_sign(&[1, 2, 0]), 1);
    }

    #[test]
    fn seeded_choices_are_deterministic_permutations() {
        let choices = SeededChoices::new(42);
        let state = StateVector::from_bits(&[0, 1]);
        let a = choices.circle_order(&state, 5);
        let b = choices.circle_order(&state, 5);
        assert_eq!(a, b);
        let mut sorted = a.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, vec![0, 1, 2, 3, 4]);
        let f1 = choices.flipped(&state, 3);
        let f2 = choices.flipped(&state, 3);
        assert_eq!(f1, f2);
    }
}
