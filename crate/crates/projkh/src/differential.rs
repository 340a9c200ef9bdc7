//! Partial and total differentials of the cube of resolutions.
//!
//! A cube edge carries a map built from three pieces: a permutation moving
//! the site factors to the front (left circle first at a positive crossing,
//! top circle first at a negative one), the multiplication or
//! comultiplication on the site factors with signs read off the local
//! orientation consistency of each X-type factor, and a semi-identity on
//! the spectator factors that negates X-type generators when the chosen
//! orientations of the corresponding circles disagree. A final permutation
//! restores the codomain's factor order. Edges whose site circle twists
//! back into one circle carry the zero map.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::cube::{
    flatten, permutation_sign, state_module_from, ChainModule, ChoiceProvider, DegreeLayout,
    Generator,
};
use crate::diagram::{ProjectiveDiagram, Sign};
use crate::resolve::{
    bifurcation, local_consistency, Bifurcation, BifurcationType, CircleKind, Consistency,
    ResolvedState, SiteRole,
};
use crate::state::{EdgeVector, Smoothing, StateVector};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EngineError {
    #[error("convention violation: {0}")]
    ConventionViolation(String),
}

/// An integer matrix between two ordered bases, kept sparse as
/// (row, col, value) triplets. Every nonzero entry joins generators of
/// equal bigrade.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearMapZ {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<(usize, usize, i64)>,
    pub row_grades: Vec<(i64, i64)>,
    pub col_grades: Vec<(i64, i64)>,
}

impl LinearMapZ {
    pub fn zero(row_grades: Vec<(i64, i64)>, col_grades: Vec<(i64, i64)>) -> Self {
        LinearMapZ {
            rows: row_grades.len(),
            cols: col_grades.len(),
            entries: vec![],
            row_grades,
            col_grades,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn add_entry(&mut self, row: usize, col: usize, value: i64) {
        if value == 0 {
            return;
        }
        match self
            .entries
            .binary_search_by_key(&(col, row), |&(r, c, _)| (c, r))
        {
            Ok(pos) => {
                self.entries[pos].2 += value;
                if self.entries[pos].2 == 0 {
                    self.entries.remove(pos);
                }
            }
            Err(pos) => self.entries.insert(pos, (row, col, value)),
        }
    }

    pub fn entry(&self, row: usize, col: usize) -> i64 {
        self.entries
            .binary_search_by_key(&(col, row), |&(r, c, _)| (c, r))
            .map(|pos| self.entries[pos].2)
            .unwrap_or(0)
    }

    /// Matrix product `self * rhs` (apply `rhs` first).
    pub fn compose(&self, rhs: &LinearMapZ) -> LinearMapZ {
        assert_eq!(self.cols, rhs.rows, "composition shape mismatch");
        let mut by_col: BTreeMap<usize, Vec<(usize, i64)>> = BTreeMap::new();
        for &(r, c, v) in &self.entries {
            by_col.entry(c).or_default().push((r, v));
        }
        let mut out = LinearMapZ::zero(self.row_grades.clone(), rhs.col_grades.clone());
        for &(mid, col, v2) in &rhs.entries {
            if let Some(rows) = by_col.get(&mid) {
                for &(row, v1) in rows {
                    out.add_entry(row, col, v1 * v2);
                }
            }
        }
        out
    }

    /// Entries of one column as (row, value).
    pub fn column(&self, col: usize) -> Vec<(usize, i64)> {
        self.entries
            .iter()
            .filter(|&&(_, c, _)| c == col)
            .map(|&(r, _, v)| (r, v))
            .collect()
    }

    /// Verify that nonzero entries join equal bigrades.
    pub fn check_bigrade_preservation(&self) -> Result<(), EngineError> {
        for &(r, c, _) in &self.entries {
            if self.row_grades[r] != self.col_grades[c] {
                return Err(EngineError::ConventionViolation(format!(
                    "entry ({}, {}) joins bigrades {:?} and {:?}",
                    r, c, self.row_grades[r], self.col_grades[c]
                )));
            }
        }
        Ok(())
    }

    /// Coordinate triplet dump with basis legends.
    pub fn dump(&self, row_legend: &[String], col_legend: &[String]) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# rows: {}", row_legend.join(", "));
        let _ = writeln!(out, "# cols: {}", col_legend.join(", "));
        for &(r, c, v) in &self.entries {
            let _ = writeln!(out, "({}, {}, {})", r, c, v);
        }
        out
    }
}

/// Consistency signs entering a multiplication: the two domain site
/// factors and the merged codomain circle.
#[derive(Clone, Copy, Debug)]
pub struct MergeSigns {
    pub first: Consistency,
    pub second: Consistency,
    pub merged: Consistency,
}

/// Consistency signs entering a comultiplication: the domain circle and
/// the two codomain site factors.
#[derive(Clone, Copy, Debug)]
pub struct SplitSigns {
    pub source: Consistency,
    pub first: Consistency,
    pub second: Consistency,
}

fn consume_sign(c: Consistency, role: &str) -> Result<i64, EngineError> {
    match c {
        Consistency::Consistent => Ok(1),
        Consistency::Inconsistent => Ok(-1),
        Consistency::Indetermined => Err(EngineError::ConventionViolation(format!(
            "indetermined consistency consumed for {}",
            role
        ))),
    }
}

/// Multiplication on the two leading wedge factors. The unit maps by the
/// top row of its block; each X-type factor contributes the sign of its
/// circle's local consistency. Two projective factors are rejected: a
/// state never holds two projective circles.
pub fn multiply(
    first: Generator,
    second: Generator,
    signs: &MergeSigns,
) -> Result<Option<(Generator, i64)>, EngineError> {
    let kinds = (first.kind(), second.kind());
    if kinds == (CircleKind::Projective, CircleKind::Projective) {
        return Err(EngineError::ConventionViolation(
            "multiplication of two projective factors".into(),
        ));
    }
    let merged_kind = if kinds == (CircleKind::Trivial, CircleKind::Trivial) {
        CircleKind::Trivial
    } else {
        CircleKind::Projective
    };
    let out_bit = match (kinds, first.is_x_type(), second.is_x_type()) {
        ((CircleKind::Trivial, CircleKind::Trivial), false, false) => Some(false),
        ((CircleKind::Trivial, CircleKind::Trivial), false, true) => Some(true),
        ((CircleKind::Trivial, CircleKind::Trivial), true, false) => Some(true),
        ((CircleKind::Projective, CircleKind::Trivial), false, false) => Some(false),
        ((CircleKind::Projective, CircleKind::Trivial), true, false) => Some(true),
        ((CircleKind::Trivial, CircleKind::Projective), false, false) => Some(false),
        ((CircleKind::Trivial, CircleKind::Projective), false, true) => Some(true),
        _ => None,
    };
    let Some(out_bit) = out_bit else {
        return Ok(None);
    };
    let mut sign = 1i64;
    if first.is_x_type() {
        sign *= consume_sign(signs.first, "first merge factor")?;
    }
    if second.is_x_type() {
        sign *= consume_sign(signs.second, "second merge factor")?;
    }
    if out_bit {
        sign *= consume_sign(signs.merged, "merged circle")?;
    }
    Ok(Some((Generator::for_kind(merged_kind, out_bit), sign)))
}

/// Comultiplication of the leading wedge factor into an ordered pair of
/// factors of the given kinds. Signs follow the same consistency rule.
pub fn comultiply(
    source: Generator,
    first_kind: CircleKind,
    second_kind: CircleKind,
    signs: &SplitSigns,
) -> Result<Vec<(Generator, Generator, i64)>, EngineError> {
    use CircleKind::{Projective, Trivial};
    let table: Vec<(bool, bool)> = match (source.kind(), first_kind, second_kind) {
        (Trivial, Trivial, Trivial) => {
            if source.is_x_type() {
                vec![(true, true)]
            } else {
                vec![(false, true), (true, false)]
            }
        }
        (Projective, Projective, Trivial) => {
            if source.is_x_type() {
                vec![(true, true)]
            } else {
                vec![(false, true)]
            }
        }
        (Projective, Trivial, Projective) => {
            if source.is_x_type() {
                vec![(true, true)]
            } else {
                vec![(true, false)]
            }
        }
        other => {
            return Err(EngineError::ConventionViolation(format!(
                "impossible split kinds {:?}",
                other
            )))
        }
    };
    let src_sign = if source.is_x_type() {
        consume_sign(signs.source, "split source")?
    } else {
        1
    };
    let mut out = Vec::with_capacity(table.len());
    for (b1, b2) in table {
        let mut sign = src_sign;
        if b1 {
            sign *= consume_sign(signs.first, "first split factor")?;
        }
        if b2 {
            sign *= consume_sign(signs.second, "second split factor")?;
        }
        out.push((
            Generator::for_kind(first_kind, b1),
            Generator::for_kind(second_kind, b2),
            sign,
        ));
    }
    Ok(out)
}

/// Consistency of a circle at the edge's crossing under the chosen
/// orientation.
fn site_consistency(
    d: &ProjectiveDiagram,
    rs: &ResolvedState,
    crossing: usize,
    circle: usize,
    flipped: bool,
) -> Consistency {
    let c = local_consistency(d, rs, crossing, circle)
        .expect("site circle must pass through the site crossing");
    if flipped {
        c.flipped()
    } else {
        c
    }
}

struct EdgeContext {
    bif: Bifurcation,
    src_order: Vec<usize>,
    tgt_order: Vec<usize>,
    src_flips: Vec<bool>,
    tgt_flips: Vec<bool>,
}

impl EdgeContext {
    fn new(d: &ProjectiveDiagram, edge: &EdgeVector, choices: &dyn ChoiceProvider) -> Self {
        let bif = bifurcation(d, edge);
        let n_src = bif.source.circles.len();
        let n_tgt = bif.target.circles.len();
        let src_order = choices.circle_order(&bif.source.state, n_src);
        let tgt_order = choices.circle_order(&bif.target.state, n_tgt);
        let src_flips = (0..n_src)
            .map(|c| choices.flipped(&bif.source.state, c))
            .collect();
        let tgt_flips = (0..n_tgt)
            .map(|c| choices.flipped(&bif.target.state, c))
            .collect();
        EdgeContext {
            bif,
            src_order,
            tgt_order,
            src_flips,
            tgt_flips,
        }
    }

    fn src_position(&self, circle: usize) -> usize {
        self.src_order.iter().position(|&c| c == circle).unwrap()
    }

    fn tgt_position(&self, circle: usize) -> usize {
        self.tgt_order.iter().position(|&c| c == circle).unwrap()
    }
}

/// The partial differential of one cube edge as a matrix between the
/// modules of its two endpoint states.
pub fn partial_differential(
    d: &ProjectiveDiagram,
    edge: &EdgeVector,
    choices: &dyn ChoiceProvider,
) -> Result<LinearMapZ, EngineError> {
    let ctx = EdgeContext::new(d, edge, choices);
    let crossing = edge.star();
    let sign = d.crossing_signs().signs[crossing];

    let dom = state_module_from(&ctx.bif.source, choices);
    let cod = state_module_from(&ctx.bif.target, choices);
    let dom_grades: Vec<(i64, i64)> = dom.basis.iter().map(|g| (g.j, g.k)).collect();
    let cod_grades: Vec<(i64, i64)> = cod.basis.iter().map(|g| (g.j, g.k)).collect();
    let mut map = LinearMapZ::zero(cod_grades, dom_grades);

    if ctx.bif.bif_type == BifurcationType::OneToOne {
        return Ok(map);
    }

    let n_src = ctx.bif.source.circles.len();
    let n_tgt = ctx.bif.target.circles.len();

    // Spectators ordered by their position in the chosen domain order.
    let mut spectators = ctx.bif.spectators.clone();
    spectators.sort_by_key(|&(si, _)| ctx.src_position(si));
    let spectator_neg: Vec<bool> = spectators
        .iter()
        .map(|&(si, ti)| ctx.src_flips[si] != ctx.tgt_flips[ti])
        .collect();

    // Leading site factors and their consistency signs.
    enum Site {
        Merge {
            first: usize,
            second: usize,
            merged: usize,
            signs: MergeSigns,
        },
        Split {
            source: usize,
            first: usize,
            second: usize,
            signs: SplitSigns,
        },
    }

    let eps_src = |circle: usize| {
        site_consistency(
            d,
            &ctx.bif.source,
            crossing,
            circle,
            ctx.src_flips[circle],
        )
    };
    let eps_tgt = |circle: usize| {
        site_consistency(
            d,
            &ctx.bif.target,
            crossing,
            circle,
            ctx.tgt_flips[circle],
        )
    };

    let site = match ctx.bif.bif_type {
        BifurcationType::TwoToOne => {
            let first_role = match sign {
                Sign::Positive => SiteRole::Left,
                Sign::Negative => SiteRole::Top,
            };
            let first = ctx.bif.source_circle_with_role(first_role);
            let second = *ctx
                .bif
                .source_site()
                .iter()
                .find(|&&c| c != first)
                .expect("merge has two source site circles");
            let merged = ctx.bif.target_site()[0];
            Site::Merge {
                first,
                second,
                merged,
                signs: MergeSigns {
                    first: eps_src(first),
                    second: eps_src(second),
                    merged: eps_tgt(merged),
                },
            }
        }
        BifurcationType::OneToTwo => {
            let source = ctx.bif.source_site()[0];
            let first_role = match sign {
                Sign::Positive => SiteRole::Top,
                Sign::Negative => SiteRole::Left,
            };
            let first = ctx.bif.target_circle_with_role(first_role);
            let second = *ctx
                .bif
                .target_site()
                .iter()
                .find(|&&c| c != first)
                .expect("split has two target site circles");
            Site::Split {
                source,
                first,
                second,
                signs: SplitSigns {
                    source: eps_src(source),
                    first: eps_tgt(first),
                    second: eps_tgt(second),
                },
            }
        }
        BifurcationType::OneToOne => unreachable!(),
    };

    // Domain factors rearranged site-first; the codomain result sequence
    // is the site output followed by the spectator images.
    let (dom_site, cod_site): (Vec<usize>, Vec<usize>) = match &site {
        Site::Merge { first, second, merged, .. } => (vec![*first, *second], vec![*merged]),
        Site::Split { source, first, second, .. } => (vec![*source], vec![*first, *second]),
    };
    let mut dom_seq = dom_site.clone();
    dom_seq.extend(spectators.iter().map(|&(si, _)| si));
    let sigma_positions: Vec<usize> = dom_seq.iter().map(|&c| ctx.src_position(c)).collect();
    let sigma_sign = permutation_sign(&sigma_positions);

    let mut cod_seq = cod_site.clone();
    cod_seq.extend(spectators.iter().map(|&(_, ti)| ti));
    let rho_positions: Vec<usize> = cod_seq.iter().map(|&c| ctx.tgt_position(c)).collect();
    let rho_sign = permutation_sign(&rho_positions);

    for (col, gen) in dom.basis.iter().enumerate() {
        // Generator bit per canonical circle index.
        let mut bit = vec![false; n_src];
        for (p, factor) in gen.factors.iter().enumerate() {
            debug_assert_eq!(factor.circle, ctx.src_order[p]);
            bit[factor.circle] = factor.generator.is_x_type();
        }

        // Spectator signs and target bits shared by all output terms.
        let mut spectator_sign = 1i64;
        let mut tgt_bits = vec![false; n_tgt];
        for (s_idx, &(si, ti)) in spectators.iter().enumerate() {
            tgt_bits[ti] = bit[si];
            if bit[si] && spectator_neg[s_idx] {
                spectator_sign = -spectator_sign;
            }
        }

        let terms: Vec<(Vec<(usize, bool)>, i64)> = match &site {
            Site::Merge {
                first,
                second,
                merged,
                signs,
            } => {
                let g1 = Generator::for_kind(ctx.bif.source.circles[*first].kind, bit[*first]);
                let g2 = Generator::for_kind(ctx.bif.source.circles[*second].kind, bit[*second]);
                match multiply(g1, g2, signs)? {
                    None => vec![],
                    Some((out, s)) => vec![(vec![(*merged, out.is_x_type())], s)],
                }
            }
            Site::Split {
                source,
                first,
                second,
                signs,
            } => {
                let src_gen =
                    Generator::for_kind(ctx.bif.source.circles[*source].kind, bit[*source]);
                comultiply(
                    src_gen,
                    ctx.bif.target.circles[*first].kind,
                    ctx.bif.target.circles[*second].kind,
                    signs,
                )?
                .into_iter()
                .map(|(gf, gs, s)| {
                    (
                        vec![(*first, gf.is_x_type()), (*second, gs.is_x_type())],
                        s,
                    )
                })
                .collect()
            }
        };

        for (site_bits, table_sign) in terms {
            let mut bits = tgt_bits.clone();
            for (circle, b) in site_bits {
                bits[circle] = b;
            }
            let mut row = 0usize;
            for (p, &circle) in ctx.tgt_order.iter().enumerate() {
                if bits[circle] {
                    row |= 1 << (n_tgt - 1 - p);
                }
            }
            map.add_entry(row, col, sigma_sign * rho_sign * spectator_sign * table_sign);
        }
    }

    debug_assert!(map.check_bigrade_preservation().is_ok());
    Ok(map)
}

/// All edges out of chain degree `i`: states of degree `i` with one of
/// their 0-smoothed crossings starred.
fn edges_from_degree(n: usize, i: i64) -> Vec<EdgeVector> {
    let mut edges = Vec::new();
    for state in StateVector::all(n) {
        if state.degree() != i {
            continue;
        }
        for c in 0..n {
            if state.0[c] == Smoothing::S0 {
                edges.push(EdgeVector::from_state(&state, c));
            }
        }
    }
    edges
}

/// The total differential `C^i -> C^(i-2)`: the block sum of the partial
/// differentials over all edges between the two degrees, in the
/// lexicographic state layout of `flatten`.
pub fn total_differential(
    d: &ProjectiveDiagram,
    i: i64,
    choices: &dyn ChoiceProvider,
) -> Result<LinearMapZ, EngineError> {
    let layouts = flatten(d, choices);
    total_differential_with(d, i, choices, &layouts)
}

fn total_differential_with(
    d: &ProjectiveDiagram,
    i: i64,
    choices: &dyn ChoiceProvider,
    layouts: &BTreeMap<i64, DegreeLayout>,
) -> Result<LinearMapZ, EngineError> {
    let empty_grades = |m: Option<&DegreeLayout>| -> Vec<(i64, i64)> {
        m.map(|l| l.module.basis.iter().map(|g| (g.j, g.k)).collect())
            .unwrap_or_default()
    };
    let dom = layouts.get(&i);
    let cod = layouts.get(&(i - 2));
    let mut map = LinearMapZ::zero(empty_grades(cod), empty_grades(dom));
    let (Some(dom), Some(cod)) = (dom, cod) else {
        return Ok(map);
    };
    for edge in edges_from_degree(d.n_crossings, i) {
        let block = partial_differential(d, &edge, choices)?;
        let col0 = dom
            .state_offset(&edge.source())
            .expect("source state in domain layout");
        let row0 = cod
            .state_offset(&edge.target())
            .expect("target state in codomain layout");
        for &(r, c, v) in &block.entries {
            map.add_entry(row0 + r, col0 + c, v);
        }
    }
    Ok(map)
}

/// The full complex: layouts and total differentials for every degree.
pub struct CubeComplex {
    pub layouts: BTreeMap<i64, DegreeLayout>,
    /// `totals[&i]` maps `C^i -> C^(i-2)`.
    pub totals: BTreeMap<i64, LinearMapZ>,
}

impl CubeComplex {
    pub fn build(d: &ProjectiveDiagram, choices: &dyn ChoiceProvider) -> Result<Self, EngineError> {
        let layouts = flatten(d, choices);
        let mut totals = BTreeMap::new();
        let degrees: Vec<i64> = layouts.keys().cloned().collect();
        for &i in &degrees {
            totals.insert(i, total_differential_with(d, i, choices, &layouts)?);
        }
        Ok(CubeComplex { layouts, totals })
    }

    pub fn module(&self, i: i64) -> Option<&ChainModule> {
        self.layouts.get(&i).map(|l| &l.module)
    }
}

/// A witness that the composite of two consecutive total differentials is
/// nonzero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct D2Failure {
    pub degree: i64,
    pub generator: usize,
    pub description: String,
}

/// Check `d o d = 0` over every pair of consecutive degrees.
pub fn verify_d2(d: &ProjectiveDiagram, choices: &dyn ChoiceProvider) -> Result<(), D2Failure> {
    let complex = CubeComplex::build(d, choices).map_err(|e| D2Failure {
        degree: 0,
        generator: 0,
        description: e.to_string(),
    })?;
    verify_d2_complex(&complex)
}

pub fn verify_d2_complex(complex: &CubeComplex) -> Result<(), D2Failure> {
    for (&i, hi) in &complex.totals {
        let Some(lo) = complex.totals.get(&(i - 2)) else {
            continue;
        };
        if lo.cols != hi.rows {
            continue;
        }
        let composite = lo.compose(hi);
        if let Some(&(_, col, _)) = composite.entries.first() {
            let generator = complex.layouts[&i].module.basis[col].to_string();
            return Err(D2Failure {
                degree: i,
                generator: col,
                description: format!(
                    "d o d != 0 on generator {} of degree {}: image {:?}",
                    generator, i, composite.column(col)
                ),
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::cube::{CanonicalChoices, SeededChoices};
    use crate::resolve::Consistency::{Consistent, Inconsistent};

    fn example() -> ProjectiveDiagram {
        corpus::by_name("example").unwrap()
    }

    fn edge(bits: &[u8], star: usize) -> EdgeVector {
        EdgeVector::new(StateVector::from_bits(bits).0, star)
    }

    fn sorted(mut entries: Vec<(usize, usize, i64)>) -> Vec<(usize, usize, i64)> {
        entries.sort();
        entries
    }

    #[test]
    fn multiplication_table_values() {
        let all_plus = MergeSigns {
            first: Consistent,
            second: Consistent,
            merged: Consistent,
        };
        let m = multiply(Generator::One, Generator::One, &all_plus).unwrap();
        assert_eq!(m, Some((Generator::One, 1)));
        let m = multiply(Generator::X, Generator::X, &all_plus).unwrap();
        assert_eq!(m, None);
        let m = multiply(Generator::One, Generator::XBar, &all_plus).unwrap();
        assert_eq!(m, Some((Generator::XBar, 1)));
        let m = multiply(Generator::OneBar, Generator::X, &all_plus).unwrap();
        assert_eq!(m, None);
        let m = multiply(Generator::X, Generator::OneBar, &all_plus).unwrap();
        assert_eq!(m, None);
        let signs = MergeSigns {
            first: Inconsistent,
            second: Consistent,
            merged: Consistent,
        };
        let m = multiply(Generator::XBar, Generator::One, &signs).unwrap();
        assert_eq!(m, Some((Generator::XBar, -1)));
        assert!(multiply(Generator::OneBar, Generator::OneBar, &all_plus).is_err());
    }

    #[test]
    fn comultiplication_table_values() {
        let all_plus = SplitSigns {
            source: Consistent,
            first: Consistent,
            second: Consistent,
        };
        let t = comultiply(
            Generator::One,
            CircleKind::Trivial,
            CircleKind::Trivial,
            &all_plus,
        )
        .unwrap();
        assert_eq!(
            t,
            vec![
                (Generator::One, Generator::X, 1),
                (Generator::X, Generator::One, 1)
            ]
        );
        let t = comultiply(
            Generator::OneBar,
            CircleKind::Projective,
            CircleKind::Trivial,
            &all_plus,
        )
        .unwrap();
        assert_eq!(t, vec![(Generator::OneBar, Generator::X, 1)]);
        let t = comultiply(
            Generator::XBar,
            CircleKind::Trivial,
            CircleKind::Projective,
            &SplitSigns {
                source: Inconsistent,
                first: Consistent,
                second: Inconsistent,
            },
        )
        .unwrap();
        assert_eq!(t, vec![(Generator::X, Generator::XBar, 1)]);
        assert!(comultiply(
            Generator::One,
            CircleKind::Projective,
            CircleKind::Projective,
            &all_plus
        )
        .is_err());
    }

    #[test]
    fn worked_example_partial_differentials() {
        let d = example();
        let ch = CanonicalChoices;

        // Domain basis of state 00: 1∧1̄, 1∧X̄, X∧1̄, X∧X̄; codomains 01, 10
        // have basis 1̄, X̄.
        let m = partial_differential(&d, &edge(&[0, 0], 1), &ch).unwrap();
        assert_eq!(sorted(m.entries.clone()), vec![(0, 0, 1), (1, 1, -1)]);

        let m = partial_differential(&d, &edge(&[0, 0], 0), &ch).unwrap();
        assert_eq!(sorted(m.entries.clone()), vec![(0, 0, -1), (1, 1, 1)]);

        // Codomain basis of state 11: 1∧1̄, 1∧X̄, X∧1̄, X∧X̄.
        let m = partial_differential(&d, &edge(&[0, 1], 0), &ch).unwrap();
        assert_eq!(sorted(m.entries.clone()), vec![(2, 0, 1), (3, 1, 1)]);

        let m = partial_differential(&d, &edge(&[1, 0], 1), &ch).unwrap();
        assert_eq!(sorted(m.entries.clone()), vec![(2, 0, 1), (3, 1, 1)]);
    }

    #[test]
    fn worked_example_total_differentials() {
        let d = example();
        let ch = CanonicalChoices;
        let d2 = total_differential(&d, 2, &ch).unwrap();
        assert_eq!((d2.rows, d2.cols), (4, 4));
        assert_eq!(
            sorted(d2.entries.clone()),
            vec![(0, 0, 1), (1, 1, -1), (2, 0, -1), (3, 1, 1)]
        );
        let d0 = total_differential(&d, 0, &ch).unwrap();
        assert_eq!(
            sorted(d0.entries.clone()),
            vec![(2, 0, 1), (2, 2, 1), (3, 1, 1), (3, 3, 1)]
        );
        let dm2 = total_differential(&d, -2, &ch).unwrap();
        assert!(dm2.is_zero());
        assert_eq!(dm2.rows, 0);

        let composite = d0.compose(&d2);
        assert!(composite.is_zero());
    }

    #[test]
    fn empty_diagram_total_differentials_are_empty() {
        let d = ProjectiveDiagram::empty();
        let m = total_differential(&d, 0, &CanonicalChoices).unwrap();
        assert!(m.is_zero());
        assert_eq!((m.rows, m.cols), (0, 1));
    }

    #[test]
    fn one_to_one_edges_carry_zero_blocks() {
        let d = corpus::by_name("chords2").unwrap();
        let m = partial_differential(&d, &EdgeVector::new(vec![Smoothing::S0], 0), &CanonicalChoices)
            .unwrap();
        assert!(m.is_zero());
        assert_eq!((m.rows, m.cols), (2, 2));
    }

    #[test]
    fn d2_holds_on_corpus() {
        for entry in corpus::corpus() {
            assert_eq!(
                verify_d2(&entry.diagram, &CanonicalChoices),
                Ok(()),
                "diagram {}",
                entry.name
            );
        }
    }

    #[test]
    fn d2_holds_under_seeded_choices() {
        let d = example();
        for seed in 0..8u64 {
            assert_eq!(verify_d2(&d, &SeededChoices::new(seed)), Ok(()));
        }
    }

    #[test]
    fn bigrade_preservation_on_corpus() {
        for entry in corpus::corpus() {
            let complex = CubeComplex::build(&entry.diagram, &CanonicalChoices).unwrap();
            for m in complex.totals.values() {
                assert!(m.check_bigrade_preservation().is_ok());
            }
        }
    }

    #[test]
    fn face_anticommutativity_on_corpus() {
        // For every 2-face, the two composite paths cancel.
        for entry in corpus::corpus() {
            let d = &entry.diagram;
            let n = d.n_crossings;
            if n < 2 {
                continue;
            }
            for state in StateVector::all(n) {
                for c1 in 0..n {
                    for c2 in (c1 + 1)..n {
                        if state.0[c1] != Smoothing::S0 || state.0[c2] != Smoothing::S0 {
                            continue;
                        }
                        let ch = CanonicalChoices;
                        // Path via resolving c1 first.
                        let e1 = EdgeVector::from_state(&state, c1);
                        let mut mid1 = state.clone();
                        mid1.0[c1] = Smoothing::S1;
                        let e1b = EdgeVector::from_state(&mid1, c2);
                        let p1 = partial_differential(d, &e1b, &ch)
                            .unwrap()
                            .compose(&partial_differential(d, &e1, &ch).unwrap());
                        // Path via resolving c2 first.
                        let e2 = EdgeVector::from_state(&state, c2);
                        let mut mid2 = state.clone();
                        mid2.0[c2] = Smoothing::S1;
                        let e2b = EdgeVector::from_state(&mid2, c1);
                        let p2 = partial_differential(d, &e2b, &ch)
                            .unwrap()
                            .compose(&partial_differential(d, &e2, &ch).unwrap());
                        let mut sum = p1.clone();
                        for &(r, c, v) in &p2.entries {
                            sum.add_entry(r, c, v);
                        }
                        assert!(
                            sum.is_zero(),
                            "face at {} ({}, {}) of {} does not anticommute",
                            state,
                            c1,
                            c2,
                            entry.name
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn reordering_choices_conjugate_the_differential() {
        // Matrices computed under different choices agree after conjugation
        // by the signed permutation and orientation-flip maps.
        let d = example();
        let canonical = CanonicalChoices;
        for seed in [7u64, 1234] {
            let seeded = SeededChoices::new(seed);
            for (bits, star) in [([0u8, 0], 0usize), ([0, 0], 1), ([0, 1], 0), ([1, 0], 1)] {
                let e = edge(&bits, star);
                let m_can = partial_differential(&d, &e, &canonical).unwrap();
                let m_alt = partial_differential(&d, &e, &seeded).unwrap();
                let t_dom = transition(&d, &e.source(), &canonical, &seeded);
                let t_cod = transition(&d, &e.target(), &canonical, &seeded);
                // m_alt o t_dom = t_cod o m_can.
                let lhs = m_alt.compose(&t_dom);
                let rhs = t_cod.compose(&m_can);
                assert_eq!(sorted(lhs.entries), sorted(rhs.entries), "seed {}", seed);
            }
        }
    }

    /// Change-of-choices map on a state module: signed permutation matrix
    /// sending the basis written under `from` choices to the basis written
    /// under `to` choices.
    fn transition(
        d: &ProjectiveDiagram,
        state: &StateVector,
        from: &dyn ChoiceProvider,
        to: &dyn ChoiceProvider,
    ) -> LinearMapZ {
        let rs = crate::resolve::resolve(d, state);
        let n = rs.circles.len();
        let from_order = from.circle_order(state, n);
        let to_order = to.circle_order(state, n);
        let dom = state_module_from(&rs, from);
        let cod = state_module_from(&rs, to);
        let dom_grades: Vec<(i64, i64)> = dom.basis.iter().map(|g| (g.j, g.k)).collect();
        let cod_grades: Vec<(i64, i64)> = cod.basis.iter().map(|g| (g.j, g.k)).collect();
        let mut map = LinearMapZ::zero(cod_grades, dom_grades);
        for (col, gen) in dom.basis.iter().enumerate() {
            let mut bit = vec![false; n];
            for (p, f) in gen.factors.iter().enumerate() {
                debug_assert_eq!(f.circle, from_order[p]);
                bit[f.circle] = f.generator.is_x_type();
            }
            // Reordering sign: positions of the `from` sequence inside the
            // `to` sequence.
            let positions: Vec<usize> = from_order
                .iter()
                .map(|&c| to_order.iter().position(|&x| x == c).unwrap())
                .collect();
            let mut sign = permutation_sign(&positions);
            for c in 0..n {
                if bit[c] && (from.flipped(state, c) != to.flipped(state, c)) {
                    sign = -sign;
                }
            }
            let mut row = 0usize;
            for (p, &c) in to_order.iter().enumerate() {
                if bit[c] {
                    row |= 1 << (n - 1 - p);
                }
            }
            map.add_entry(row, col, sign);
        }
        map
    }
}
