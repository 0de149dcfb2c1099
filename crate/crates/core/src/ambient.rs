//! The ambient space of the model: a coordinatized base together with an
//! ordered list of projectivized fiber factors (disjoint copies of the same
//! bundle), and the coordinate subvarieties and constructible sets living in
//! it.

use std::collections::BTreeSet;

use crate::error::{EngineError, Result};

/// The total space `Y = P(E_t) x_X ... x_X P(E_1)` over a coordinatized base
/// of dimension `base_dim`. All fiber factors are copies of the same rank-`r`
/// bundle, so each contributes `r - 1` to the total dimension.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Ambient {
    pub base_dim: usize,
    pub fiber_count: usize,
    pub fiber_rank: usize,
}

impl Ambient {
    pub fn base(base_dim: usize) -> Self {
        assert!(base_dim >= 1, "base dimension must be positive");
        Ambient { base_dim, fiber_count: 0, fiber_rank: 1 }
    }

    pub fn with_fibers(base_dim: usize, fiber_count: usize, fiber_rank: usize) -> Self {
        assert!(base_dim >= 1, "base dimension must be positive");
        assert!(fiber_rank >= 1, "fiber rank must be positive");
        Ambient { base_dim, fiber_count, fiber_rank }
    }

    pub fn total_dim(&self) -> usize {
        self.base_dim + self.fiber_count * (self.fiber_rank - 1)
    }

    /// The base space underlying this ambient, with all fiber factors dropped.
    pub fn base_ambient(&self) -> Ambient {
        Ambient::base(self.base_dim)
    }
}

/// A coordinate subvariety: a set of vanishing base coordinates plus, per
/// fiber factor, a set of vanishing homogeneous fiber coordinates. The trivial
/// cycle (all sets empty) is the fundamental current `1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CoordCycle {
    pub base_zero: BTreeSet<usize>,
    pub fiber_zero: Vec<BTreeSet<usize>>,
}

impl CoordCycle {
    pub fn trivial(ambient: &Ambient) -> Self {
        CoordCycle {
            base_zero: BTreeSet::new(),
            fiber_zero: vec![BTreeSet::new(); ambient.fiber_count],
        }
    }

    pub fn base(ambient: &Ambient, coords: impl IntoIterator<Item = usize>) -> Self {
        let mut c = Self::trivial(ambient);
        c.base_zero = coords.into_iter().collect();
        c
    }

    pub fn fiber(ambient: &Ambient, factor: usize, coords: impl IntoIterator<Item = usize>) -> Self {
        let mut c = Self::trivial(ambient);
        c.fiber_zero[factor - 1] = coords.into_iter().collect();
        c
    }

    pub fn is_trivial(&self) -> bool {
        self.base_zero.is_empty() && self.fiber_zero.iter().all(|s| s.is_empty())
    }

    pub fn codim(&self) -> usize {
        self.base_zero.len() + self.fiber_zero.iter().map(|s| s.len()).sum::<usize>()
    }

    /// Structural validity against an ambient.
    pub fn validate(&self, ambient: &Ambient) -> Result<()> {
        if self.fiber_zero.len() != ambient.fiber_count {
            return Err(EngineError::MalformedTerm(format!(
                "cycle has {} fiber slots, ambient has {}",
                self.fiber_zero.len(),
                ambient.fiber_count
            )));
        }
        for &i in &self.base_zero {
            if i == 0 || i > ambient.base_dim {
                return Err(EngineError::MalformedTerm(format!(
                    "base coordinate x{} out of range",
                    i
                )));
            }
        }
        for (j, s) in self.fiber_zero.iter().enumerate() {
            for &a in s {
                if a == 0 || a > ambient.fiber_rank {
                    return Err(EngineError::MalformedTerm(format!(
                        "fiber coordinate xi_{} out of range in factor {}",
                        a,
                        j + 1
                    )));
                }
            }
            if s.len() > ambient.fiber_rank - 1 {
                return Err(EngineError::MalformedTerm(format!(
                    "fiber cycle of factor {} empties the projective fiber",
                    j + 1
                )));
            }
        }
        Ok(())
    }

    /// Does this cycle contain `other` as a variety? Containment reverses
    /// inclusion of index sets: `{x_J = 0}` lies inside `{x_I = 0}` iff
    /// `I` is a subset of `J`.
    pub fn contains(&self, other: &CoordCycle) -> bool {
        self.base_zero.is_subset(&other.base_zero)
            && self
                .fiber_zero
                .iter()
                .zip(other.fiber_zero.iter())
                .all(|(a, b)| a.is_subset(b))
    }

    /// The set-theoretic intersection of two coordinate varieties, which is
    /// again a coordinate variety (indices unioned per slot).
    pub fn intersect(&self, other: &CoordCycle) -> CoordCycle {
        CoordCycle {
            base_zero: self.base_zero.union(&other.base_zero).copied().collect(),
            fiber_zero: self
                .fiber_zero
                .iter()
                .zip(other.fiber_zero.iter())
                .map(|(a, b)| a.union(b).copied().collect())
                .collect(),
        }
    }

    /// Proper-intersection merge: slots must be pairwise disjoint.
    pub fn merge_proper(&self, other: &CoordCycle) -> Result<CoordCycle> {
        if !self.base_zero.is_disjoint(&other.base_zero) {
            return Err(EngineError::ImproperIntersection(format!(
                "shared base index in {:?} and {:?}",
                self.base_zero, other.base_zero
            )));
        }
        for (j, (a, b)) in self.fiber_zero.iter().zip(other.fiber_zero.iter()).enumerate() {
            if !a.is_disjoint(b) {
                return Err(EngineError::ImproperIntersection(format!(
                    "shared fiber index in factor {}",
                    j + 1
                )));
            }
        }
        Ok(self.intersect(other))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Polarity {
    /// The union of the member varieties.
    Union,
    /// The complement of the union of the member varieties.
    ComplementOfUnion,
}

/// A set in the Boolean algebra generated by coordinate subvarieties, in one
/// of the two shapes the recursion needs: a union of subvarieties, or the
/// complement of such a union.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstructibleSet {
    pub polarity: Polarity,
    pub members: Vec<CoordCycle>,
}

impl ConstructibleSet {
    pub fn union_of(members: Vec<CoordCycle>) -> Self {
        ConstructibleSet { polarity: Polarity::Union, members }
    }

    pub fn complement_of(members: Vec<CoordCycle>) -> Self {
        ConstructibleSet { polarity: Polarity::ComplementOfUnion, members }
    }

    pub fn whole_space() -> Self {
        Self::complement_of(Vec::new())
    }

    pub fn empty() -> Self {
        Self::union_of(Vec::new())
    }

    /// Does a term with cycle support `cycle` survive multiplication by the
    /// characteristic function of this set? A term survives iff its support
    /// lies in the set; partial overlaps charge nothing by the dimension
    /// principle.
    pub fn keeps(&self, cycle: &CoordCycle) -> bool {
        let contained = self.members.iter().any(|m| m.contains(cycle));
        match self.polarity {
            Polarity::Union => contained,
            Polarity::ComplementOfUnion => !contained,
        }
    }

    /// Intersection of two sets of the same polarity.
    pub fn intersect_same_polarity(&self, other: &ConstructibleSet) -> Option<ConstructibleSet> {
        if self.polarity != other.polarity {
            return None;
        }
        match self.polarity {
            Polarity::Union => {
                let mut members = Vec::new();
                for a in &self.members {
                    for b in &other.members {
                        members.push(a.intersect(b));
                    }
                }
                Some(ConstructibleSet::union_of(members))
            }
            Polarity::ComplementOfUnion => {
                let mut members = self.members.clone();
                members.extend(other.members.iter().cloned());
                Some(ConstructibleSet::complement_of(members))
            }
        }
    }
}

/// A coordinate-adapted base point: each base coordinate is either exactly
/// zero or generically nonzero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasePoint {
    /// `true` at position `i` means coordinate `x_{i+1}` vanishes.
    pub zero: Vec<bool>,
}

impl BasePoint {
    pub fn origin(n: usize) -> Self {
        BasePoint { zero: vec![true; n] }
    }

    pub fn generic(n: usize) -> Self {
        BasePoint { zero: vec![false; n] }
    }

    pub fn lies_on(&self, cycle: &CoordCycle) -> bool {
        cycle.base_zero.iter().all(|&i| self.zero[i - 1])
    }

    /// True if every coordinate in `coords` vanishes at this point.
    pub fn vanishes_on(&self, coords: &BTreeSet<usize>) -> bool {
        coords.iter().all(|&i| self.zero[i - 1])
    }
}

/// Coordinate names used for canonical rendering.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoordNames {
    pub base: Vec<String>,
}

impl CoordNames {
    pub fn default_for(n: usize) -> Self {
        CoordNames { base: (1..=n).map(|i| format!("x{}", i)).collect() }
    }

    pub fn base_name(&self, i: usize) -> &str {
        &self.base[i - 1]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn containment_reverses_inclusion() {
        let amb = Ambient::base(3);
        let big = CoordCycle::base(&amb, [1, 2]);
        let small = CoordCycle::base(&amb, [1]);
        // {x1=0, x2=0} lies inside {x1=0}
        assert!(small.contains(&big));
        assert!(!big.contains(&small));
        assert!(small.contains(&small));
    }

    #[test]
    fn keeps_partition() {
        let amb = Ambient::base(2);
        let z = vec![CoordCycle::base(&amb, [1])];
        let on = ConstructibleSet::union_of(z.clone());
        let off = ConstructibleSet::complement_of(z);
        for cycle in [
            CoordCycle::trivial(&amb),
            CoordCycle::base(&amb, [1]),
            CoordCycle::base(&amb, [2]),
            CoordCycle::base(&amb, [1, 2]),
        ] {
            assert_ne!(on.keeps(&cycle), off.keeps(&cycle));
        }
    }

    #[test]
    fn fiber_cycle_cannot_empty_fiber() {
        let amb = Ambient::with_fibers(2, 1, 2);
        let mut c = CoordCycle::trivial(&amb);
        c.fiber_zero[0] = [1, 2].into_iter().collect();
        assert!(c.validate(&amb).is_err());
    }
}
