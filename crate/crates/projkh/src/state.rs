//! Vertices and edges of the discrete cube of smoothings.

use std::fmt;

/// The two ways to smooth a crossing. Smoothing 0 joins slot 0 to slot 1
/// and slot 2 to slot 3; smoothing 1 joins slot 0 to slot 3 and slot 1 to
/// slot 2.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Smoothing {
    S0,
    S1,
}

impl Smoothing {
    pub fn bit(self) -> u8 {
        match self {
            Smoothing::S0 => 0,
            Smoothing::S1 => 1,
        }
    }

    /// Slot pairing of this smoothing: `partner[s]` is joined to slot `s`.
    pub fn partner(self, slot: u8) -> u8 {
        match self {
            Smoothing::S0 => slot ^ 1,         // (0,1), (2,3)
            Smoothing::S1 => 3 - slot,         // (0,3), (1,2)
        }
    }
}

/// One vertex of the discrete cube: a choice of smoothing per crossing.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateVector(pub Vec<Smoothing>);

impl StateVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn count0(&self) -> usize {
        self.0.iter().filter(|s| **s == Smoothing::S0).count()
    }

    pub fn count1(&self) -> usize {
        self.0.iter().filter(|s| **s == Smoothing::S1).count()
    }

    /// Homological degree `#0 - #1`.
    pub fn degree(&self) -> i64 {
        self.count0() as i64 - self.count1() as i64
    }

    pub fn from_bits(bits: &[u8]) -> Self {
        StateVector(
            bits.iter()
                .map(|&b| if b == 0 { Smoothing::S0 } else { Smoothing::S1 })
                .collect(),
        )
    }

    /// All `2^n` states in lexicographic order (`00..0` first, with the
    /// last crossing varying fastest).
    pub fn all(n: usize) -> impl Iterator<Item = StateVector> {
        assert!(n < usize::BITS as usize - 1, "state cube too large");
        (0..(1usize << n)).map(move |mask| {
            StateVector(
                (0..n)
                    .map(|c| {
                        if mask >> (n - 1 - c) & 1 == 0 {
                            Smoothing::S0
                        } else {
                            Smoothing::S1
                        }
                    })
                    .collect(),
            )
        })
    }
}

impl fmt::Display for StateVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.0 {
            write!(f, "{}", s.bit())?;
        }
        Ok(())
    }
}

/// An edge of the cube: a state vector with exactly one undetermined
/// crossing. Resolving the star to 0 or 1 gives the two endpoint states.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeVector {
    base: Vec<Smoothing>,
    star: usize,
}

impl EdgeVector {
    /// `base[star]` is ignored.
    pub fn new(base: Vec<Smoothing>, star: usize) -> Self {
        assert!(star < base.len());
        EdgeVector { base, star }
    }

    pub fn from_state(state: &StateVector, star: usize) -> Self {
        Self::new(state.0.clone(), star)
    }

    pub fn len(&self) -> usize {
        self.base.len()
    }

    pub fn is_empty(&self) -> bool {
        self.base.is_empty()
    }

    pub fn star(&self) -> usize {
        self.star
    }

    fn with(&self, s: Smoothing) -> StateVector {
        let mut v = self.base.clone();
        v[self.star] = s;
        StateVector(v)
    }

    /// The source state, with the star resolved to smoothing 0.
    pub fn source(&self) -> StateVector {
        self.with(Smoothing::S0)
    }

    /// The target state, with the star resolved to smoothing 1.
    pub fn target(&self) -> StateVector {
        self.with(Smoothing::S1)
    }

    /// Number of 0 entries among the determined positions.
    pub fn count0(&self) -> usize {
        self.base
            .iter()
            .enumerate()
            .filter(|(i, s)| *i != self.star && **s == Smoothing::S0)
            .count()
    }

    pub fn count1(&self) -> usize {
        self.base.len() - 1 - self.count0()
    }
}

impl fmt::Display for EdgeVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.base.iter().enumerate() {
            if i == self.star {
                write!(f, "*")?;
            } else {
                write!(f, "{}", s.bit())?;
            }
        }
        Ok(())
    }
}
