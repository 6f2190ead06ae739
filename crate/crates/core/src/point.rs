//! Marked points and ordered point sequences.
//!
//! A [`PointSequence`] is the state of every process in this crate. Unlike a
//! point pattern, the order of its entries is part of the state, so equality
//! is positional.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mark attached to a location.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mark {
    #[default]
    None,
    /// Positive radius, in length units.
    Radius(f64),
    /// Index into a finite label set.
    Label(u32),
}

impl Mark {
    pub fn radius(&self) -> Option<f64> {
        match *self {
            Mark::Radius(r) => Some(r),
            _ => None,
        }
    }

    fn rank(&self) -> u8 {
        match self {
            Mark::None => 0,
            Mark::Radius(_) => 1,
            Mark::Label(_) => 2,
        }
    }

    /// Total order used for canonical set keys.
    pub fn total_cmp(&self, other: &Mark) -> Ordering {
        match (self, other) {
            (Mark::Radius(a), Mark::Radius(b)) => a.total_cmp(b),
            (Mark::Label(a), Mark::Label(b)) => a.cmp(b),
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

impl fmt::Display for Mark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mark::None => Ok(()),
            Mark::Radius(r) => write!(f, "{r}"),
            Mark::Label(l) => write!(f, "label:{l}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarkedPoint {
    pub x: f64,
    pub y: f64,
    #[serde(default)]
    pub mark: Mark,
}

impl MarkedPoint {
    pub fn new(x: f64, y: f64, mark: Mark) -> Self {
        MarkedPoint { x, y, mark }
    }

    pub fn unmarked(x: f64, y: f64) -> Self {
        MarkedPoint::new(x, y, Mark::None)
    }

    pub fn with_radius(x: f64, y: f64, radius: f64) -> Self {
        MarkedPoint::new(x, y, Mark::Radius(radius))
    }

    pub fn distance(&self, other: &MarkedPoint) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn distance_sq(&self, other: &MarkedPoint) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    /// Lexicographic order on (x, y, mark), total over floats.
    pub fn total_cmp(&self, other: &MarkedPoint) -> Ordering {
        self.x
            .total_cmp(&other.x)
            .then(self.y.total_cmp(&other.y))
            .then(self.mark.total_cmp(&other.mark))
    }

    /// Bit-exact identity, used to key memo tables.
    pub fn key(&self) -> PointKey {
        let (tag, bits) = match self.mark {
            Mark::None => (0u8, 0u64),
            Mark::Radius(r) => (1, r.to_bits()),
            Mark::Label(l) => (2, u64::from(l)),
        };
        PointKey {
            x: self.x.to_bits(),
            y: self.y.to_bits(),
            tag,
            mark: bits,
        }
    }

    /// Finite coordinates and, for radius marks, a positive radius.
    pub fn validate(&self) -> Result<()> {
        if !self.x.is_finite() || !self.y.is_finite() {
            return Err(Error::argument(format!("non-finite coordinates in {self}")));
        }
        if let Mark::Radius(r) = self.mark {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::argument(format!("radius mark must be positive, got {r}")));
            }
        }
        Ok(())
    }
}

impl fmt::Display for MarkedPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.mark {
            Mark::None => write!(f, "({}, {})", self.x, self.y),
            m => write!(f, "({}, {}; {})", self.x, self.y, m),
        }
    }
}

/// Hashable, bit-exact image of a [`MarkedPoint`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PointKey {
    x: u64,
    y: u64,
    tag: u8,
    mark: u64,
}

/// Ordered, finite sequence of marked points. The empty sequence is valid.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PointSequence {
    points: Vec<MarkedPoint>,
}

impl PointSequence {
    pub fn empty() -> Self {
        PointSequence { points: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[MarkedPoint] {
        &self.points
    }

    pub fn iter(&self) -> std::slice::Iter<'_, MarkedPoint> {
        self.points.iter()
    }

    /// Point at 1-based `position`.
    pub fn get(&self, position: usize) -> Option<&MarkedPoint> {
        position.checked_sub(1).and_then(|i| self.points.get(i))
    }

    /// The first `len` points, `(y_1, ..., y_len)`.
    pub fn prefix(&self, len: usize) -> PointSequence {
        PointSequence::from(self.points[..len.min(self.len())].to_vec())
    }

    pub fn push(&mut self, u: MarkedPoint) {
        self.points.push(u);
    }

    /// `s_i(seq, u)`: insert `u` so that it occupies 1-based `position`.
    pub fn insert_at(&self, position: usize, u: MarkedPoint) -> Result<PointSequence> {
        let n = self.len();
        if position == 0 || position > n + 1 {
            return Err(Error::argument(format!(
                "insert position {position} outside 1..={}",
                n + 1
            )));
        }
        let mut points = Vec::with_capacity(n + 1);
        points.extend_from_slice(&self.points[..position - 1]);
        points.push(u);
        points.extend_from_slice(&self.points[position - 1..]);
        Ok(PointSequence { points })
    }

    /// The sequence with the point at 1-based `position` removed.
    pub fn remove_at(&self, position: usize) -> Result<PointSequence> {
        let n = self.len();
        if n == 0 {
            return Err(Error::argument("cannot remove from the empty sequence"));
        }
        if position == 0 || position > n {
            return Err(Error::argument(format!("remove position {position} outside 1..={n}")));
        }
        let mut points = self.points.clone();
        points.remove(position - 1);
        Ok(PointSequence { points })
    }

    pub(crate) fn insert_in_place(&mut self, position: usize, u: MarkedPoint) {
        self.points.insert(position - 1, u);
    }

    pub(crate) fn remove_in_place(&mut self, position: usize) -> MarkedPoint {
        self.points.remove(position - 1)
    }
}

impl From<Vec<MarkedPoint>> for PointSequence {
    fn from(points: Vec<MarkedPoint>) -> Self {
        PointSequence { points }
    }
}

impl FromIterator<MarkedPoint> for PointSequence {
    fn from_iter<I: IntoIterator<Item = MarkedPoint>>(iter: I) -> Self {
        PointSequence {
            points: iter.into_iter().collect(),
        }
    }
}

impl<'a> IntoIterator for &'a PointSequence {
    type Item = &'a MarkedPoint;
    type IntoIter = std::slice::Iter<'a, MarkedPoint>;

    fn into_iter(self) -> Self::IntoIter {
        self.points.iter()
    }
}

impl fmt::Display for PointSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return write!(f, "()");
        }
        write!(f, "(")?;
        for (i, p) in self.points.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, ")")
    }
}
