//! Finite T₀-spaces as posets.
//!
//! A finite T₀-space is determined by its specialization order: `x ≤ y` when
//! the closure of `{x}` is contained in the closure of `{y}`. We take cover
//! relations `y → x` (meaning `x < y` with nothing strictly between) as the
//! input primitive and derive the order by transitive closure. Open sets are
//! up-sets, closed sets are down-sets.
//!
//! Point sets are bitmasks over the point indices; the implementation caps
//! spaces at 8 points, which is where the path and double-path enumerations
//! stay comfortably small.

use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;
use thiserror::Error;

pub const MAX_POINTS: usize = 8;

#[derive(Debug, Error)]
pub enum SpaceError {
    #[error("space has {0} points; at most {MAX_POINTS} are supported")]
    TooLarge(usize),
    #[error("duplicate point identifier {0:?}")]
    DuplicatePoint(String),
    #[error("unknown point {0:?}")]
    UnknownPoint(String),
    #[error("cover relation {0:?} -> {0:?} is reflexive")]
    ReflexiveCover(String),
    #[error("cover relations contain a cycle through {0:?}")]
    Cycle(String),
    #[error("cover {y:?} -> {x:?} is transitively redundant: {x:?} < {z:?} < {y:?}")]
    RedundantCover { y: String, x: String, z: String },
    #[error("duplicate cover relation {0:?} -> {1:?}")]
    DuplicateCover(String, String),
    #[error("subset is not {0}")]
    WrongKind(&'static str),
}

/// A set of points, as a bitmask over point indices.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct PointSet(pub u32);

impl PointSet {
    pub const EMPTY: PointSet = PointSet(0);

    pub fn singleton(i: usize) -> Self {
        PointSet(1 << i)
    }

    pub fn full(n: usize) -> Self {
        PointSet(if n == 32 { u32::MAX } else { (1 << n) - 1 })
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        let mut s = 0u32;
        for i in iter {
            s |= 1 << i;
        }
        PointSet(s)
    }

    pub fn contains(self, i: usize) -> bool {
        self.0 & (1 << i) != 0
    }

    pub fn insert(&mut self, i: usize) {
        self.0 |= 1 << i;
    }

    pub fn union(self, other: PointSet) -> PointSet {
        PointSet(self.0 | other.0)
    }

    pub fn intersect(self, other: PointSet) -> PointSet {
        PointSet(self.0 & other.0)
    }

    pub fn minus(self, other: PointSet) -> PointSet {
        PointSet(self.0 & !other.0)
    }

    pub fn is_subset_of(self, other: PointSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        (0..32).filter(move |&i| self.contains(i))
    }
}

impl fmt::Debug for PointSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, i) in self.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}")
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum SubsetKind {
    Open,
    Closed,
    LocallyClosed,
    Arbitrary,
}

/// A validated subset of a space, tagged with how it sits topologically.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct PointSubset {
    pub members: PointSet,
    pub kind: SubsetKind,
}

/// A step of the open-point enumeration: the point added, the accumulated
/// open set, and the largest closed subset of it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OpenStep {
    pub point: usize,
    pub u_k: PointSet,
    pub c_k: PointSet,
}

/// A pair of distinct paths into the same point from a common source.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DoublePath {
    pub p: Vec<usize>,
    pub q: Vec<usize>,
    pub source: usize,
}

/// Serialized form of a space.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct SpaceFile {
    pub points: Vec<String>,
    pub covers: Vec<(String, String)>,
}

/// A finite T₀-space, stored as its points, its cover relations, and the
/// derived specialization order.
#[derive(Clone, PartialEq, Eq)]
pub struct FiniteT0Space {
    points: Vec<String>,
    /// Cover pairs `(y, x)` with `y → x`, i.e. `x < y` and nothing between.
    covers: BTreeSet<(usize, usize)>,
    /// `up[i]` = smallest open set containing point `i` (all `j ≥ i`).
    up: Vec<PointSet>,
    /// `down[i]` = closure of `{i}` (all `j ≤ i`).
    down: Vec<PointSet>,
}

impl fmt::Debug for FiniteT0Space {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FiniteT0Space({:?}, covers: [", self.points)?;
        for (k, (y, x)) in self.covers.iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{} -> {}", self.points[*y], self.points[*x])?;
        }
        write!(f, "])")
    }
}

impl FiniteT0Space {
    /// Build and validate a space from point names and cover pairs `(y, x)`
    /// meaning `y → x`. Rejects cycles and transitively redundant covers
    /// (naming a witness point between the two ends).
    pub fn new(points: Vec<String>, cover_pairs: Vec<(String, String)>) -> Result<Self, SpaceError> {
        let n = points.len();
        if n > MAX_POINTS {
            return Err(SpaceError::TooLarge(n));
        }
        let mut seen = BTreeSet::new();
        for p in &points {
            if !seen.insert(p.clone()) {
                return Err(SpaceError::DuplicatePoint(p.clone()));
            }
        }
        let index = |name: &str| -> Result<usize, SpaceError> {
            points
                .iter()
                .position(|p| p == name)
                .ok_or_else(|| SpaceError::UnknownPoint(name.to_string()))
        };
        let mut covers = BTreeSet::new();
        for (y, x) in &cover_pairs {
            let yi = index(y)?;
            let xi = index(x)?;
            if yi == xi {
                return Err(SpaceError::ReflexiveCover(y.clone()));
            }
            if !covers.insert((yi, xi)) {
                return Err(SpaceError::DuplicateCover(y.clone(), x.clone()));
            }
        }
        // strict order: x < y iff a chain of covers leads from y down to x.
        // below[y] = set of x with x < y
        let mut below = vec![PointSet::EMPTY; n];
        // iterate to a fixed point; cycles are caught by the antisymmetry check
        for _ in 0..=n {
            let mut changed = false;
            for &(y, x) in &covers {
                let mut add = PointSet::singleton(x).union(below[x]);
                add = add.minus(below[y]);
                if !add.is_empty() {
                    below[y] = below[y].union(add);
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        for i in 0..n {
            if below[i].contains(i) {
                return Err(SpaceError::Cycle(points[i].clone()));
            }
        }
        // reject transitively redundant covers: y → x with x < z < y
        for &(y, x) in &covers {
            for z in below[y].iter() {
                if z != x && below[z].contains(x) {
                    return Err(SpaceError::RedundantCover {
                        y: points[y].clone(),
                        x: points[x].clone(),
                        z: points[z].clone(),
                    });
                }
            }
        }
        let mut up = vec![PointSet::EMPTY; n];
        let mut down = vec![PointSet::EMPTY; n];
        for i in 0..n {
            down[i] = below[i].union(PointSet::singleton(i));
            up[i].insert(i);
        }
        for i in 0..n {
            for j in 0..n {
                if below[j].contains(i) {
                    up[i].insert(j);
                }
            }
        }
        Ok(FiniteT0Space {
            points,
            covers,
            up,
            down,
        })
    }

    pub fn from_file(file: &SpaceFile) -> Result<Self, SpaceError> {
        FiniteT0Space::new(file.points.clone(), file.covers.clone())
    }

    pub fn to_file(&self) -> SpaceFile {
        SpaceFile {
            points: self.points.clone(),
            covers: self
                .covers
                .iter()
                .map(|&(y, x)| (self.points[y].clone(), self.points[x].clone()))
                .collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.points.len()
    }

    pub fn point_name(&self, i: usize) -> &str {
        &self.points[i]
    }

    pub fn point_names(&self) -> &[String] {
        &self.points
    }

    pub fn point_index(&self, name: &str) -> Result<usize, SpaceError> {
        self.points
            .iter()
            .position(|p| p == name)
            .ok_or_else(|| SpaceError::UnknownPoint(name.to_string()))
    }

    pub fn all_points(&self) -> PointSet {
        PointSet::full(self.n())
    }

    pub fn cover_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.covers.iter().copied()
    }

    /// `x ≤ y` in the specialization order.
    pub fn leq(&self, x: usize, y: usize) -> bool {
        self.up[x].contains(y)
    }

    pub fn lt(&self, x: usize, y: usize) -> bool {
        x != y && self.leq(x, y)
    }

    /// Points `y` with `y → x`.
    pub fn covers_of(&self, x: usize) -> PointSet {
        PointSet::from_indices(
            self.covers
                .iter()
                .filter(|&&(_, t)| t == x)
                .map(|&(y, _)| y),
        )
    }

    /// Down-closure (topological closure).
    pub fn closure(&self, s: PointSet) -> PointSet {
        s.iter().fold(PointSet::EMPTY, |acc, i| acc.union(self.down[i]))
    }

    /// Up-closure: the smallest open set containing `s`.
    pub fn smallest_open(&self, s: PointSet) -> PointSet {
        s.iter().fold(PointSet::EMPTY, |acc, i| acc.union(self.up[i]))
    }

    /// `∂̃ s` = smallest open set minus `s`.
    pub fn open_boundary(&self, s: PointSet) -> PointSet {
        self.smallest_open(s).minus(s)
    }

    /// `∂̄ s` = closure minus `s`.
    pub fn closed_boundary(&self, s: PointSet) -> PointSet {
        self.closure(s).minus(s)
    }

    pub fn is_open(&self, s: PointSet) -> bool {
        self.smallest_open(s) == s
    }

    pub fn is_closed(&self, s: PointSet) -> bool {
        self.closure(s) == s
    }

    /// Locally closed: a difference `U \ V` of opens, equivalently open in
    /// its closure.
    pub fn is_locally_closed(&self, s: PointSet) -> bool {
        let u = self.smallest_open(s);
        let v = u.minus(s);
        self.is_open(v)
    }

    /// Is `u` open in the subspace topology of `y`?
    pub fn is_open_in(&self, u: PointSet, y: PointSet) -> bool {
        if !u.is_subset_of(y) {
            return false;
        }
        // relatively open: closed under passing to larger points within y
        for a in u.iter() {
            for b in y.iter() {
                if self.leq(a, b) && !u.contains(b) {
                    return false;
                }
            }
        }
        true
    }

    pub fn subset(&self, members: PointSet, kind: SubsetKind) -> Result<PointSubset, SpaceError> {
        let ok = match kind {
            SubsetKind::Open => self.is_open(members),
            SubsetKind::Closed => self.is_closed(members),
            SubsetKind::LocallyClosed => self.is_locally_closed(members),
            SubsetKind::Arbitrary => true,
        };
        if !ok {
            return Err(SpaceError::WrongKind(match kind {
                SubsetKind::Open => "open",
                SubsetKind::Closed => "closed",
                SubsetKind::LocallyClosed => "locally closed",
                SubsetKind::Arbitrary => unreachable!(),
            }));
        }
        Ok(PointSubset { members, kind })
    }

    pub fn open_subset(&self, members: PointSet) -> Result<PointSubset, SpaceError> {
        self.subset(members, SubsetKind::Open)
    }

    pub fn locally_closed_subset(&self, members: PointSet) -> Result<PointSubset, SpaceError> {
        self.subset(members, SubsetKind::LocallyClosed)
    }

    /// Maximal points of a subset (no strictly larger point inside it).
    pub fn maximal_points(&self, s: PointSet) -> PointSet {
        PointSet::from_indices(
            s.iter()
                .filter(|&i| s.iter().all(|j| j == i || !self.lt(i, j))),
        )
    }

    /// Minimal points of a subset.
    pub fn minimal_points(&self, s: PointSet) -> PointSet {
        PointSet::from_indices(
            s.iter()
                .filter(|&i| s.iter().all(|j| j == i || !self.lt(j, i))),
        )
    }

    /// Closed points of the whole space.
    pub fn closed_points(&self) -> PointSet {
        self.minimal_points(self.all_points())
    }

    /// All paths from `y` down to `x`: sequences `(z₁,…,zₙ)` with `z₁ = x`,
    /// `zₙ = y`, and `z_{k+1} → z_k` at every step. Empty unless `x ≤ y`;
    /// the single path `(x)` when `x = y`. Deterministic order: depth-first
    /// with covers visited in increasing point index.
    pub fn paths(&self, y: usize, x: usize) -> Vec<Vec<usize>> {
        if x == y {
            return vec![vec![x]];
        }
        if !self.leq(x, y) {
            return Vec::new();
        }
        let mut out = Vec::new();
        for z in self.covers_of(x).iter() {
            // extend every path from y to z by x at the front
            for tail in self.paths(y, z) {
                let mut path = vec![x];
                path.extend(tail);
                out.push(path);
            }
        }
        out
    }

    /// All unordered pairs of distinct paths into `x` sharing their source.
    pub fn double_paths(&self, x: usize) -> Vec<DoublePath> {
        let mut out = Vec::new();
        for y in 0..self.n() {
            if !self.lt(x, y) {
                continue;
            }
            let paths = self.paths(y, x);
            for i in 0..paths.len() {
                for j in i + 1..paths.len() {
                    out.push(DoublePath {
                        p: paths[i].clone(),
                        q: paths[j].clone(),
                        source: y,
                    });
                }
            }
        }
        out
    }

    /// Common covers of `x` and `x2`.
    pub fn inf_set(&self, x: usize, x2: usize) -> PointSet {
        self.covers_of(x).intersect(self.covers_of(x2))
    }

    /// The open-point enumeration: repeatedly pick a point that is open in
    /// the complement of what has been taken (i.e. maximal among the
    /// remaining points), lowest point index first. Returns, per step, the
    /// point, the accumulated open set `U_k`, and the largest closed subset
    /// `C_k` of `U_k`, computed as the complement of the union of the
    /// smallest open sets of the closed points not yet taken.
    pub fn open_point_sequence(&self) -> Vec<OpenStep> {
        self.open_point_sequence_with(false)
    }

    /// Same enumeration with the tie-break reversed (highest index first).
    /// Alternate orders must produce isomorphic downstream results; this
    /// hook exists so tests can check that, not for general use.
    pub fn open_point_sequence_with(&self, prefer_high: bool) -> Vec<OpenStep> {
        let mut taken = PointSet::EMPTY;
        let mut steps = Vec::new();
        let closed_pts = self.closed_points();
        for _ in 0..self.n() {
            let remaining = self.all_points().minus(taken);
            let candidates = self.maximal_points(remaining);
            let point = if prefer_high {
                candidates.iter().max().unwrap()
            } else {
                candidates.iter().next().unwrap()
            };
            taken.insert(point);
            let mut shade = PointSet::EMPTY;
            for y in closed_pts.minus(taken).iter() {
                shade = shade.union(self.smallest_open(PointSet::singleton(y)));
            }
            let c_k = self.all_points().minus(shade);
            steps.push(OpenStep {
                point,
                u_k: taken,
                c_k,
            });
        }
        steps
    }

    /// Points in processing order (a linear extension of the reversed
    /// specialization order: larger points come first). Vertex orderings
    /// elsewhere in the crate follow this, which makes the matrices of
    /// labeled graphs literally block lower-triangular.
    pub fn linear_order(&self) -> Vec<usize> {
        self.open_point_sequence().into_iter().map(|s| s.point).collect()
    }

    /// Rank of a point in [`FiniteT0Space::linear_order`].
    pub fn linear_rank(&self, point: usize) -> usize {
        self.linear_order()
            .iter()
            .position(|&p| p == point)
            .unwrap()
    }
}

/// A chain `n → n-1 → … → 1` on points named "1" … "n" (so "1" is the
/// closed point and "n" the open one).
pub fn chain(n: usize) -> FiniteT0Space {
    let points: Vec<String> = (1..=n).map(|i| i.to_string()).collect();
    let covers: Vec<(String, String)> = (1..n)
        .map(|i| ((i + 1).to_string(), i.to_string()))
        .collect();
    FiniteT0Space::new(points, covers).expect("chain is a valid space")
}

/// An antichain on `n` points named "p1" … "pn" (the discrete space).
pub fn antichain(n: usize) -> FiniteT0Space {
    let points: Vec<String> = (1..=n).map(|i| format!("p{i}")).collect();
    FiniteT0Space::new(points, Vec::new()).expect("antichain is a valid space")
}

/// The diamond: bottom "b", middles "m1", "m2", top "t" with
/// t → m1, t → m2, m1 → b, m2 → b.
pub fn diamond() -> FiniteT0Space {
    FiniteT0Space::new(
        vec!["b".into(), "m1".into(), "m2".into(), "t".into()],
        vec![
            ("t".into(), "m1".into()),
            ("t".into(), "m2".into()),
            ("m1".into(), "b".into()),
            ("m2".into(), "b".into()),
        ],
    )
    .expect("diamond is a valid space")
}
