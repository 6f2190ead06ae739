//! Directed neighbour relations on marked points.
//!
//! `related(u, v)` reads "v is a directed neighbour of u". Relations must be
//! reflexive; they need not be symmetric.

use std::fmt;
use std::sync::Arc;

use crate::point::{Mark, MarkedPoint, PointSequence};

pub trait NeighbourRelation: Send + Sync + fmt::Debug {
    fn related(&self, u: &MarkedPoint, v: &MarkedPoint) -> bool;

    /// Declarative flag; not verified.
    fn is_symmetric(&self) -> bool {
        false
    }
}

pub type SharedRelation = Arc<dyn NeighbourRelation>;

type RangeFn = dyn Fn(&Mark, &Mark) -> f64 + Send + Sync;
type PredicateFn = dyn Fn(&MarkedPoint, &MarkedPoint) -> bool + Send + Sync;

/// Every pair of points is related.
#[derive(Debug, Clone, Copy, Default)]
pub struct Trivial;

impl NeighbourRelation for Trivial {
    fn related(&self, _: &MarkedPoint, _: &MarkedPoint) -> bool {
        true
    }

    fn is_symmetric(&self) -> bool {
        true
    }
}

/// Only a point and itself are related.
#[derive(Debug, Clone, Copy, Default)]
pub struct Identity;

impl NeighbourRelation for Identity {
    fn related(&self, u: &MarkedPoint, v: &MarkedPoint) -> bool {
        u.key() == v.key()
    }

    fn is_symmetric(&self) -> bool {
        true
    }
}

/// `(x, r) ~ (y, s)` iff `|x - y| <= s`: `u` lies in the territory of `v`.
#[derive(Debug, Clone, Copy, Default)]
pub struct InNeighbourTerritory;

impl NeighbourRelation for InNeighbourTerritory {
    fn related(&self, u: &MarkedPoint, v: &MarkedPoint) -> bool {
        match v.mark {
            Mark::Radius(s) => u.distance(v) <= s,
            _ => u.key() == v.key(),
        }
    }
}

/// `(x, r) ~ (y, s)` iff `|x - y| <= r`: `v` lies in the territory of `u`.
#[derive(Debug, Clone, Copy, Default)]
pub struct InOwnTerritory;

impl NeighbourRelation for InOwnTerritory {
    fn related(&self, u: &MarkedPoint, v: &MarkedPoint) -> bool {
        match u.mark {
            Mark::Radius(r) => u.distance(v) <= r,
            _ => u.key() == v.key(),
        }
    }
}

/// Fixed-range relation `|x - y| <= range`.
#[derive(Debug, Clone, Copy)]
pub struct WithinDistance(pub f64);

impl NeighbourRelation for WithinDistance {
    fn related(&self, u: &MarkedPoint, v: &MarkedPoint) -> bool {
        u.distance(v) <= self.0
    }

    fn is_symmetric(&self) -> bool {
        true
    }
}

/// Mark-dependent range `|x - y| <= R(r, s)`.
#[derive(Clone)]
pub struct MarkRange {
    range: Arc<RangeFn>,
    symmetric: bool,
}

impl MarkRange {
    pub fn new(range: Arc<RangeFn>, symmetric: bool) -> Self {
        MarkRange { range, symmetric }
    }
}

impl fmt::Debug for MarkRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MarkRange").field("symmetric", &self.symmetric).finish()
    }
}

impl NeighbourRelation for MarkRange {
    fn related(&self, u: &MarkedPoint, v: &MarkedPoint) -> bool {
        u.distance(v) <= (self.range)(&u.mark, &v.mark)
    }

    fn is_symmetric(&self) -> bool {
        self.symmetric
    }
}

/// Arbitrary predicate. Reflexivity is the caller's responsibility.
#[derive(Clone)]
pub struct Predicate {
    pred: Arc<PredicateFn>,
    symmetric: bool,
}

impl Predicate {
    pub fn new(pred: impl Fn(&MarkedPoint, &MarkedPoint) -> bool + Send + Sync + 'static, symmetric: bool) -> Self {
        Predicate {
            pred: Arc::new(pred),
            symmetric,
        }
    }
}

impl fmt::Debug for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Predicate").field("symmetric", &self.symmetric).finish()
    }
}

impl NeighbourRelation for Predicate {
    fn related(&self, u: &MarkedPoint, v: &MarkedPoint) -> bool {
        (self.pred)(u, v)
    }

    fn is_symmetric(&self) -> bool {
        self.symmetric
    }
}

/// 1-based positions `i` with `u ~ y_i`, increasing.
pub fn directed_neighbours(relation: &dyn NeighbourRelation, u: &MarkedPoint, seq: &PointSequence) -> Vec<usize> {
    seq.iter()
        .enumerate()
        .filter(|(_, y)| relation.related(u, y))
        .map(|(i, _)| i + 1)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn off_diagonal_false_gives_no_neighbours() {
        let u = MarkedPoint::unmarked(5.0, 5.0);
        let seq = PointSequence::from(vec![MarkedPoint::unmarked(0.0, 0.0), MarkedPoint::unmarked(1.0, 0.0)]);
        assert!(directed_neighbours(&Identity, &u, &seq).is_empty());
    }

    #[test]
    fn trivial_relation_returns_all_positions() {
        let u = MarkedPoint::unmarked(5.0, 5.0);
        let seq: PointSequence = (0..4).map(|i| MarkedPoint::unmarked(i as f64, 0.0)).collect();
        assert_eq!(directed_neighbours(&Trivial, &u, &seq), vec![1, 2, 3, 4]);
    }

    #[test]
    fn territory_relation_example() {
        let u = MarkedPoint::with_radius(0.0, 0.0, 1.0);
        let seq = PointSequence::from(vec![
            MarkedPoint::with_radius(0.5, 0.0, 1.0),
            MarkedPoint::with_radius(3.0, 0.0, 1.0),
        ]);
        assert_eq!(directed_neighbours(&InNeighbourTerritory, &u, &seq), vec![1]);
    }

    #[test]
    fn territory_relation_is_directed() {
        let small = MarkedPoint::with_radius(0.0, 0.0, 0.1);
        let big = MarkedPoint::with_radius(0.5, 0.0, 1.0);
        assert!(InNeighbourTerritory.related(&small, &big));
        assert!(!InNeighbourTerritory.related(&big, &small));
        assert!(InOwnTerritory.related(&big, &small));
        assert!(!InOwnTerritory.related(&small, &big));
    }

    #[test]
    fn shipped_relations_are_reflexive() {
        let p = MarkedPoint::with_radius(0.3, 0.7, 0.2);
        let range = MarkRange::new(Arc::new(|_: &Mark, _: &Mark| 0.5), true);
        let rels: Vec<&dyn NeighbourRelation> = vec![
            &Trivial,
            &Identity,
            &InNeighbourTerritory,
            &InOwnTerritory,
            &WithinDistance(0.1),
            &range,
        ];
        for r in rels {
            assert!(r.related(&p, &p), "{r:?} not reflexive");
        }
    }
}
