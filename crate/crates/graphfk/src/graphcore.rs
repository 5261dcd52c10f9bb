//! Labeled directed graphs with edge multiplicities.
//!
//! A graph here is a finite vertex set, an entry `A(v, w)` in ℤ₊ ∪ {∞}
//! counting the edges **from `w` to `v`**, and a labeling of vertices by
//! points of a finite T₀-space. The matrix `D_F = A_F − 1` over a subset `F`
//! of points drives every K-theory computation downstream.
//!
//! Vertices are kept sorted by the linear rank of their label (larger points
//! of the space first), so `D` over the whole space is literally block
//! lower-triangular whenever the labeling is valid.

use crate::finspace::{FiniteT0Space, PointSet, PointSubset};
use crate::zlattice::IntMatrix;
use num_bigint::BigInt;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

/// Cap on vertex count for the hereditary/saturated lattice enumeration.
pub const MAX_LATTICE_VERTICES: usize = 16;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("duplicate vertex identifier {0:?}")]
    DuplicateVertex(String),
    #[error("unknown vertex {0:?}")]
    UnknownVertex(String),
    #[error("unknown label {0:?}")]
    UnknownLabel(String),
    #[error("duplicate multiplicity entry for ({0:?}, {1:?})")]
    DuplicateMultiplicity(String, String),
    #[error("infinite entry at ({0:?}, {1:?}) in a matrix that requires finite entries")]
    InfiniteEntry(String, String),
    #[error("subset contains points outside the label range")]
    SubsetOutsideLabels,
    #[error("graph has {0} vertices; lattice enumeration is capped at {MAX_LATTICE_VERTICES}")]
    TooManyVertices(usize),
    #[error("invalid labeling: edge from {from:?} (label {from_label:?}) to {to:?} (label {to_label:?}) violates the order")]
    InvalidLabeling {
        from: String,
        from_label: String,
        to: String,
        to_label: String,
    },
}

/// An edge multiplicity: a nonnegative count or infinity.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Mult {
    Finite(u64),
    Infinite,
}

impl Mult {
    pub fn is_zero(self) -> bool {
        self == Mult::Finite(0)
    }

    pub fn is_infinite(self) -> bool {
        self == Mult::Infinite
    }

    pub fn at_least(self, n: u64) -> bool {
        match self {
            Mult::Finite(m) => m >= n,
            Mult::Infinite => true,
        }
    }

    pub fn finite(self) -> Option<u64> {
        match self {
            Mult::Finite(m) => Some(m),
            Mult::Infinite => None,
        }
    }
}

impl fmt::Debug for Mult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mult::Finite(m) => write!(f, "{m}"),
            Mult::Infinite => write!(f, "inf"),
        }
    }
}

impl Serialize for Mult {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Mult::Finite(m) => s.serialize_u64(*m),
            Mult::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Mult {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(u64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(m) => Ok(Mult::Finite(m)),
            Raw::Str(s) if s == "inf" => Ok(Mult::Infinite),
            Raw::Str(s) => Err(D::Error::custom(format!(
                "multiplicity must be a number or \"inf\", got {s:?}"
            ))),
        }
    }
}

/// The matrix `D_F` over a subset of points, with its row/column vertex
/// index sets. With `regular_rows_only` the rows are restricted to the
/// regular vertices; all columns are kept.
#[derive(Clone, Debug)]
pub struct DMatrix {
    pub points: PointSet,
    pub row_vertices: Vec<usize>,
    pub col_vertices: Vec<usize>,
    pub matrix: IntMatrix,
}

/// Verdict of the sufficient tightness criterion.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Tightness {
    Tight,
    Unknown,
}

/// A breaking vertex together with the saturated hereditary set witnessing it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BreakingVertex {
    pub vertex: usize,
    pub subset: Vec<usize>,
}

/// Graph-side structural facts; see [`LabeledGraph::structural_predicates`].
#[derive(Clone, Debug)]
pub struct StructuralReport {
    /// All hereditary and saturated vertex subsets (as sorted index lists).
    pub hereditary_saturated: Vec<Vec<usize>>,
    pub breaking_vertices: Vec<BreakingVertex>,
    /// Every vertex supports at least two loops.
    pub purely_infinite_sufficient: bool,
    /// Finite multiplicities and no sources.
    pub is_cuntz_krieger: bool,
}

/// A vertex-labeled multigraph over a finite T₀-space.
#[derive(Clone, PartialEq, Eq)]
pub struct LabeledGraph {
    space: FiniteT0Space,
    ids: Vec<String>,
    labels: Vec<usize>,
    /// `mult[v * n + w]` = number of edges from `w` to `v`.
    mult: Vec<Mult>,
}

impl fmt::Debug for LabeledGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "LabeledGraph over {:?}", self.space)?;
        for v in 0..self.ids.len() {
            writeln!(
                f,
                "  {} (label {})",
                self.ids[v],
                self.space.point_name(self.labels[v])
            )?;
        }
        for v in 0..self.ids.len() {
            for w in 0..self.ids.len() {
                let m = self.a(v, w);
                if !m.is_zero() {
                    writeln!(f, "  {} -> {} x{:?}", self.ids[w], self.ids[v], m)?;
                }
            }
        }
        Ok(())
    }
}

impl LabeledGraph {
    /// Build a graph. `vertices` are `(id, label)` pairs, `multiplicities`
    /// are `(to, from, count)` triples: `count` edges from `from` to `to`.
    /// Vertices are re-sorted by (label linear rank, insertion order).
    pub fn new(
        space: FiniteT0Space,
        vertices: Vec<(String, String)>,
        multiplicities: Vec<(String, String, Mult)>,
    ) -> Result<Self, GraphError> {
        let mut entries: Vec<(String, usize)> = Vec::with_capacity(vertices.len());
        for (id, label) in vertices {
            if entries.iter().any(|(i, _)| *i == id) {
                return Err(GraphError::DuplicateVertex(id));
            }
            let label_ix = space
                .point_index(&label)
                .map_err(|_| GraphError::UnknownLabel(label.clone()))?;
            entries.push((id, label_ix));
        }
        // stable sort by label rank keeps insertion order within a block
        let order = space.linear_order();
        let rank = |p: usize| order.iter().position(|&q| q == p).unwrap();
        entries.sort_by_key(|(_, l)| rank(*l));
        let ids: Vec<String> = entries.iter().map(|(i, _)| i.clone()).collect();
        let labels: Vec<usize> = entries.iter().map(|(_, l)| *l).collect();
        let n = ids.len();
        let vertex_ix = |id: &str| -> Result<usize, GraphError> {
            ids.iter()
                .position(|i| i == id)
                .ok_or_else(|| GraphError::UnknownVertex(id.to_string()))
        };
        let mut mult = vec![Mult::Finite(0); n * n];
        let mut seen = BTreeMap::new();
        for (to, from, count) in multiplicities {
            let v = vertex_ix(&to)?;
            let w = vertex_ix(&from)?;
            if seen.insert((v, w), ()).is_some() {
                return Err(GraphError::DuplicateMultiplicity(to, from));
            }
            mult[v * n + w] = count;
        }
        Ok(LabeledGraph {
            space,
            ids,
            labels,
            mult,
        })
    }

    pub fn space(&self) -> &FiniteT0Space {
        &self.space
    }

    pub fn vertex_count(&self) -> usize {
        self.ids.len()
    }

    pub fn vertex_id(&self, v: usize) -> &str {
        &self.ids[v]
    }

    pub fn vertex_ids(&self) -> &[String] {
        &self.ids
    }

    pub fn vertex_index(&self, id: &str) -> Result<usize, GraphError> {
        self.ids
            .iter()
            .position(|i| i == id)
            .ok_or_else(|| GraphError::UnknownVertex(id.to_string()))
    }

    pub fn label(&self, v: usize) -> usize {
        self.labels[v]
    }

    /// Number of edges from `w` to `v`.
    pub fn a(&self, v: usize, w: usize) -> Mult {
        self.mult[v * self.ids.len() + w]
    }

    /// Total in-multiplicity of `v`; `None` when infinite.
    pub fn in_degree(&self, v: usize) -> Option<u64> {
        let mut total = 0u64;
        for w in 0..self.ids.len() {
            match self.a(v, w) {
                Mult::Finite(m) => total += m,
                Mult::Infinite => return None,
            }
        }
        Some(total)
    }

    /// Regular: finite and nonzero in-multiplicity.
    pub fn is_regular(&self, v: usize) -> bool {
        matches!(self.in_degree(v), Some(d) if d > 0)
    }

    /// Vertices whose label lies in `points`, in graph order.
    pub fn vertices_over(&self, points: PointSet) -> Vec<usize> {
        (0..self.ids.len())
            .filter(|&v| points.contains(self.labels[v]))
            .collect()
    }

    pub fn labels_used(&self) -> PointSet {
        PointSet::from_indices(self.labels.iter().copied())
    }

    /// The matrix `D_F(v, w) = A_F(v, w) − [v = w]` over the vertices with
    /// label in `F`. With `regular_rows_only` the rows run over the regular
    /// vertices only (all columns kept); otherwise any infinite entry is an
    /// error.
    pub fn d_matrix(&self, f: &PointSubset, regular_rows_only: bool) -> Result<DMatrix, GraphError> {
        if !f.members.is_subset_of(self.space.all_points()) {
            return Err(GraphError::SubsetOutsideLabels);
        }
        let col_vertices = self.vertices_over(f.members);
        let row_vertices: Vec<usize> = if regular_rows_only {
            col_vertices
                .iter()
                .copied()
                .filter(|&v| self.is_regular(v))
                .collect()
        } else {
            col_vertices.clone()
        };
        let mut matrix = IntMatrix::zero(row_vertices.len(), col_vertices.len());
        for (ri, &v) in row_vertices.iter().enumerate() {
            for (ci, &w) in col_vertices.iter().enumerate() {
                let a = match self.a(v, w) {
                    Mult::Finite(m) => BigInt::from(m),
                    Mult::Infinite => {
                        return Err(GraphError::InfiniteEntry(
                            self.ids[v].clone(),
                            self.ids[w].clone(),
                        ))
                    }
                };
                matrix[(ri, ci)] = if v == w { a - 1 } else { a };
            }
        }
        Ok(DMatrix {
            points: f.members,
            row_vertices,
            col_vertices,
            matrix,
        })
    }

    /// Valid labeling: every edge `w → v` satisfies `label(v) ≤ label(w)`
    /// (sources sit above ranges). Equivalently, the block of `D` at rows
    /// labeled `y`, columns labeled `z` vanishes whenever `y ≰ z`.
    pub fn labeling_is_valid(&self) -> bool {
        self.first_invalid_edge().is_none()
    }

    /// The first order-violating edge `(from, to)`, if any, for diagnostics.
    pub fn first_invalid_edge(&self) -> Option<(usize, usize)> {
        for v in 0..self.ids.len() {
            for w in 0..self.ids.len() {
                if !self.a(v, w).is_zero() && !self.space.leq(self.labels[v], self.labels[w]) {
                    return Some((w, v));
                }
            }
        }
        None
    }

    /// Sufficient tightness criterion: the labeling is valid and the block
    /// of `D` at rows labeled `y`, columns labeled `z` is nonzero for every
    /// `y < z`. The criterion is one-directional, so failure reports
    /// `Unknown` rather than "not tight".
    pub fn is_tight_sufficient(&self) -> Tightness {
        if !self.labeling_is_valid() {
            return Tightness::Unknown;
        }
        for y in 0..self.space.n() {
            for z in 0..self.space.n() {
                if !self.space.lt(y, z) {
                    continue;
                }
                let mut nonzero = false;
                for v in 0..self.ids.len() {
                    if self.labels[v] != y {
                        continue;
                    }
                    for w in 0..self.ids.len() {
                        if self.labels[w] == z && !self.a(v, w).is_zero() {
                            nonzero = true;
                        }
                    }
                }
                if !nonzero {
                    return Tightness::Unknown;
                }
            }
        }
        Tightness::Tight
    }

    /// Exact ideal-lattice comparison: do the hereditary saturated subsets
    /// coincide with the preimages of the open sets? Meaningful as a
    /// tightness test when Condition (K) holds and there are no breaking
    /// vertices. Errors above [`MAX_LATTICE_VERTICES`].
    pub fn ideal_lattice_matches_space(&self) -> Result<bool, GraphError> {
        let report = self.structural_predicates()?;
        let mut opens: Vec<Vec<usize>> = Vec::new();
        for mask in 0..(1u32 << self.space.n()) {
            let s = PointSet(mask);
            if self.space.is_open(s) {
                opens.push(self.vertices_over(s));
            }
        }
        let n_opens = opens.len();
        opens.sort();
        opens.dedup();
        let mut hs = report.hereditary_saturated.clone();
        hs.sort();
        // distinct opens must give distinct vertex sets, and those must be
        // exactly the hereditary saturated subsets
        Ok(opens == hs && opens.len() == n_opens)
    }

    /// Condition (K): no vertex lies on exactly one return path.
    pub fn condition_k(&self) -> bool {
        (0..self.ids.len()).all(|v| self.return_path_count_capped(v) != 1)
    }

    /// Number of return paths at `v`, capped at 2 (2 stands for "at least
    /// two, possibly infinitely many").
    fn return_path_count_capped(&self, v: usize) -> usize {
        let cap = 2usize;
        let n = self.ids.len();
        // vertices w ≠ v that can appear strictly inside a return path at v
        let relevant: Vec<usize> = (0..n)
            .filter(|&w| {
                w != v && self.reaches_avoiding(v, w, v) && self.reaches_avoiding(w, v, v)
            })
            .collect();
        // a cycle among the relevant vertices (avoiding v) pumps unboundedly
        if self.has_cycle_within(&relevant) {
            return cap;
        }
        let m_capped = |m: Mult| match m {
            Mult::Finite(k) => (k as usize).min(cap),
            Mult::Infinite => cap,
        };
        // topological order of the acyclic relevant subgraph: process w
        // after every u that w feeds into
        let mut order = Vec::new();
        let mut remaining = relevant.clone();
        while !remaining.is_empty() {
            let pos = remaining
                .iter()
                .position(|&w| remaining.iter().all(|&u| u == w || self.a(u, w).is_zero()))
                .expect("acyclic subgraph has a sink");
            order.push(remaining.remove(pos));
        }
        // count[w] = number of paths from w into v through relevant vertices
        let mut count: BTreeMap<usize, usize> = BTreeMap::new();
        for &w in &order {
            let mut total = m_capped(self.a(v, w)); // direct edges w → v
            for &u in &relevant {
                if u == w {
                    continue;
                }
                let m = m_capped(self.a(u, w)); // edges w → u
                if m > 0 {
                    total += m * count.get(&u).copied().unwrap_or(0);
                }
            }
            count.insert(w, total.min(cap));
        }
        let mut total = m_capped(self.a(v, v)); // loops at v
        for &w in &relevant {
            let m = m_capped(self.a(w, v)); // edges v → w
            total += m * count.get(&w).copied().unwrap_or(0);
        }
        total.min(cap)
    }

    /// Is there an edge path from `from` to `to` never passing through
    /// `avoid` strictly inside?
    fn reaches_avoiding(&self, from: usize, to: usize, avoid: usize) -> bool {
        if from == to {
            return true;
        }
        let n = self.ids.len();
        let mut seen = vec![false; n];
        let mut stack = vec![from];
        while let Some(u) = stack.pop() {
            for w in 0..n {
                // an edge from u to w contributes to a(w, u)
                if self.a(w, u).is_zero() {
                    continue;
                }
                if w == to {
                    return true;
                }
                if w != avoid && !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        false
    }

    fn has_cycle_within(&self, vertices: &[usize]) -> bool {
        for &w in vertices {
            if self.a(w, w).at_least(1) {
                return true;
            }
        }
        let mut color: BTreeMap<usize, u8> = vertices.iter().map(|&v| (v, 0)).collect();
        fn dfs(
            g: &LabeledGraph,
            u: usize,
            vertices: &[usize],
            color: &mut BTreeMap<usize, u8>,
        ) -> bool {
            color.insert(u, 1);
            for &w in vertices {
                if w == u || g.a(w, u).is_zero() {
                    continue;
                }
                match color[&w] {
                    1 => return true,
                    0 => {
                        if dfs(g, w, vertices, color) {
                            return true;
                        }
                    }
                    _ => {}
                }
            }
            color.insert(u, 2);
            false
        }
        for &v in vertices {
            if color[&v] == 0 && dfs(self, v, vertices, &mut color) {
                return true;
            }
        }
        false
    }

    fn reaches(&self, from: usize, to: usize) -> bool {
        if from == to {
            return true;
        }
        let n = self.ids.len();
        let mut seen = vec![false; n];
        let mut stack = vec![from];
        seen[from] = true;
        while let Some(u) = stack.pop() {
            for w in 0..n {
                if self.a(w, u).is_zero() || seen[w] {
                    continue;
                }
                if w == to {
                    return true;
                }
                seen[w] = true;
                stack.push(w);
            }
        }
        false
    }

    /// Hereditary: `w ∈ H` and a path from `v` to `w` implies `v ∈ H`.
    fn is_hereditary(&self, subset: u32) -> bool {
        let n = self.ids.len();
        for w in 0..n {
            if subset & (1 << w) == 0 {
                continue;
            }
            for v in 0..n {
                if subset & (1 << v) != 0 {
                    continue;
                }
                if self.reaches(v, w) {
                    return false;
                }
            }
        }
        true
    }

    /// Saturated: every regular vertex all of whose in-edge sources lie in
    /// the subset belongs to the subset.
    fn is_saturated(&self, subset: u32) -> bool {
        let n = self.ids.len();
        for v in 0..n {
            if subset & (1 << v) != 0 || !self.is_regular(v) {
                continue;
            }
            let sources_in = (0..n)
                .filter(|&w| !self.a(v, w).is_zero())
                .all(|w| subset & (1 << w) != 0);
            if sources_in {
                return false;
            }
        }
        true
    }

    /// Enumerate the hereditary saturated lattice, list breaking vertices,
    /// and evaluate the pure-infiniteness and Cuntz-Krieger predicates.
    pub fn structural_predicates(&self) -> Result<StructuralReport, GraphError> {
        let n = self.ids.len();
        if n > MAX_LATTICE_VERTICES {
            return Err(GraphError::TooManyVertices(n));
        }
        let mut hereditary_saturated = Vec::new();
        let mut breaking_vertices = Vec::new();
        for subset in 0..(1u32 << n) {
            if !self.is_hereditary(subset) || !self.is_saturated(subset) {
                continue;
            }
            let members: Vec<usize> = (0..n).filter(|&v| subset & (1 << v) != 0).collect();
            for v in 0..n {
                if subset & (1 << v) != 0 {
                    continue;
                }
                // infinitely many edges from the subset and finitely many
                // (at least one) from outside
                let mut from_h_infinite = false;
                let mut outside = Some(0u64);
                for w in 0..n {
                    let m = self.a(v, w);
                    if subset & (1 << w) != 0 {
                        if m.is_infinite() {
                            from_h_infinite = true;
                        }
                    } else {
                        outside = match (outside, m) {
                            (Some(t), Mult::Finite(k)) => Some(t + k),
                            _ => None,
                        };
                    }
                }
                if from_h_infinite && matches!(outside, Some(t) if t > 0) {
                    breaking_vertices.push(BreakingVertex {
                        vertex: v,
                        subset: members.clone(),
                    });
                }
            }
            hereditary_saturated.push(members);
        }
        let purely_infinite_sufficient = (0..n).all(|v| self.a(v, v).at_least(2));
        let is_cuntz_krieger = self.mult.iter().all(|m| !m.is_infinite())
            && (0..n).all(|v| matches!(self.in_degree(v), Some(d) if d > 0));
        Ok(StructuralReport {
            hereditary_saturated,
            breaking_vertices,
            purely_infinite_sufficient,
            is_cuntz_krieger,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::finspace::{self, SubsetKind};

    fn one_point_space() -> FiniteT0Space {
        finspace::chain(1)
    }

    fn loops_graph(loops: u64) -> LabeledGraph {
        LabeledGraph::new(
            one_point_space(),
            vec![("v".into(), "1".into())],
            vec![("v".into(), "v".into(), Mult::Finite(loops))],
        )
        .unwrap()
    }

    #[test]
    fn d_matrix_one_vertex() {
        for n in 0..5u64 {
            let g = loops_graph(n + 1);
            let f = g.space().open_subset(g.space().all_points()).unwrap();
            let d = g.d_matrix(&f, false).unwrap();
            assert_eq!(d.matrix, IntMatrix::from_rows(vec![vec![n as i64]]));
        }
    }

    #[test]
    fn d_matrix_singular_row_dropped() {
        let space = one_point_space();
        let g = LabeledGraph::new(
            space,
            vec![("v".into(), "1".into()), ("w".into(), "1".into())],
            vec![
                ("v".into(), "v".into(), Mult::Infinite),
                ("w".into(), "w".into(), Mult::Finite(3)),
            ],
        )
        .unwrap();
        let f = g.space().open_subset(g.space().all_points()).unwrap();
        let d = g.d_matrix(&f, true).unwrap();
        assert_eq!(d.row_vertices.len(), 1);
        assert_eq!(d.col_vertices.len(), 2);
        assert!(g.d_matrix(&f, false).is_err());
    }

    #[test]
    fn block_diagonal_for_disconnected() {
        let space = finspace::antichain(2);
        let g = LabeledGraph::new(
            space,
            vec![("a".into(), "p1".into()), ("b".into(), "p2".into())],
            vec![
                ("a".into(), "a".into(), Mult::Finite(3)),
                ("b".into(), "b".into(), Mult::Finite(4)),
            ],
        )
        .unwrap();
        let f = g.space().open_subset(g.space().all_points()).unwrap();
        let d = g.d_matrix(&f, false).unwrap();
        assert_eq!(d.matrix[(0, 1)], BigInt::from(0));
        assert_eq!(d.matrix[(1, 0)], BigInt::from(0));
    }

    fn two_point_space() -> FiniteT0Space {
        FiniteT0Space::new(
            vec!["1".into(), "2".into()],
            vec![("2".into(), "1".into())],
        )
        .unwrap()
    }

    #[test]
    fn labeling_validity_orientations() {
        // an edge from a label-2 vertex into a label-1 vertex is valid
        // (source label 2 ≥ range label 1); the reverse is not
        let space = two_point_space();
        let ok = LabeledGraph::new(
            space.clone(),
            vec![("a".into(), "1".into()), ("b".into(), "2".into())],
            vec![
                ("a".into(), "a".into(), Mult::Finite(2)),
                ("b".into(), "b".into(), Mult::Finite(2)),
                ("a".into(), "b".into(), Mult::Finite(1)),
            ],
        )
        .unwrap();
        assert!(ok.labeling_is_valid());
        let bad = LabeledGraph::new(
            space,
            vec![("a".into(), "1".into()), ("b".into(), "2".into())],
            vec![("b".into(), "a".into(), Mult::Finite(1))],
        )
        .unwrap();
        assert!(!bad.labeling_is_valid());
    }

    #[test]
    fn labeling_validity_matches_block_formulation() {
        let space = two_point_space();
        let g = LabeledGraph::new(
            space,
            vec![("a".into(), "1".into()), ("b".into(), "2".into())],
            vec![
                ("a".into(), "a".into(), Mult::Finite(2)),
                ("b".into(), "b".into(), Mult::Finite(2)),
                ("a".into(), "b".into(), Mult::Finite(1)),
            ],
        )
        .unwrap();
        let f = g.space().open_subset(g.space().all_points()).unwrap();
        let d = g.d_matrix(&f, false).unwrap();
        let mut block_ok = true;
        for (ri, &v) in d.row_vertices.iter().enumerate() {
            for (ci, &w) in d.col_vertices.iter().enumerate() {
                let y = g.label(v);
                let z = g.label(w);
                if v != w && !g.space().leq(y, z) && d.matrix[(ri, ci)] != BigInt::from(0) {
                    block_ok = false;
                }
            }
        }
        assert_eq!(block_ok, g.labeling_is_valid());
    }

    #[test]
    fn tightness_criterion() {
        let space = two_point_space();
        let mk = |cross: u64| {
            LabeledGraph::new(
                space.clone(),
                vec![("a".into(), "1".into()), ("b".into(), "2".into())],
                vec![
                    ("a".into(), "a".into(), Mult::Finite(2)),
                    ("b".into(), "b".into(), Mult::Finite(2)),
                    ("a".into(), "b".into(), Mult::Finite(cross)),
                ],
            )
            .unwrap()
        };
        assert_eq!(mk(1).is_tight_sufficient(), Tightness::Tight);
        assert_eq!(mk(0).is_tight_sufficient(), Tightness::Unknown);
        // single-label graph: vacuously tight
        assert_eq!(loops_graph(3).is_tight_sufficient(), Tightness::Tight);
    }

    #[test]
    fn condition_k_cases() {
        assert!(loops_graph(2).condition_k());
        assert!(!loops_graph(1).condition_k());
        // a 2-cycle with no other edges: exactly one return path per vertex
        let space = one_point_space();
        let cyc = LabeledGraph::new(
            space.clone(),
            vec![("a".into(), "1".into()), ("b".into(), "1".into())],
            vec![
                ("a".into(), "b".into(), Mult::Finite(1)),
                ("b".into(), "a".into(), Mult::Finite(1)),
            ],
        )
        .unwrap();
        assert!(!cyc.condition_k());
        // acyclic graph: no vertex on a cycle
        let acyclic = LabeledGraph::new(
            space,
            vec![("a".into(), "1".into()), ("b".into(), "1".into())],
            vec![("a".into(), "b".into(), Mult::Finite(2))],
        )
        .unwrap();
        assert!(acyclic.condition_k());
    }

    #[test]
    fn structural_report_basics() {
        let g = loops_graph(2);
        let r = g.structural_predicates().unwrap();
        assert!(r.purely_infinite_sufficient);
        assert!(r.is_cuntz_krieger);
        assert!(r.breaking_vertices.is_empty());

        // disconnected blocks: four hereditary saturated subsets
        let space = finspace::antichain(2);
        let g2 = LabeledGraph::new(
            space,
            vec![("a".into(), "p1".into()), ("b".into(), "p2".into())],
            vec![
                ("a".into(), "a".into(), Mult::Finite(2)),
                ("b".into(), "b".into(), Mult::Finite(2)),
            ],
        )
        .unwrap();
        let r2 = g2.structural_predicates().unwrap();
        assert_eq!(r2.hereditary_saturated.len(), 4);
        assert!(g2.ideal_lattice_matches_space().unwrap());
    }

    #[test]
    fn breaking_vertex_detected() {
        // h feeds v infinitely; o feeds v once; {h} is hereditary saturated
        // and v breaks it
        let space = one_point_space();
        let g = LabeledGraph::new(
            space,
            vec![
                ("h".into(), "1".into()),
                ("v".into(), "1".into()),
                ("o".into(), "1".into()),
            ],
            vec![
                ("v".into(), "h".into(), Mult::Infinite),
                ("v".into(), "o".into(), Mult::Finite(1)),
            ],
        )
        .unwrap();
        let r = g.structural_predicates().unwrap();
        let vix = g.vertex_index("v").unwrap();
        let hix = g.vertex_index("h").unwrap();
        assert!(r
            .breaking_vertices
            .iter()
            .any(|b| b.vertex == vix && b.subset == vec![hix]));
        assert!(!r.is_cuntz_krieger);
    }

    #[test]
    fn two_loops_everywhere_implies_k_and_no_breaking() {
        let space = two_point_space();
        let g = LabeledGraph::new(
            space,
            vec![("a".into(), "1".into()), ("b".into(), "2".into())],
            vec![
                ("a".into(), "a".into(), Mult::Finite(2)),
                ("b".into(), "b".into(), Mult::Finite(3)),
                ("a".into(), "b".into(), Mult::Finite(1)),
            ],
        )
        .unwrap();
        assert!(g.condition_k());
        let r = g.structural_predicates().unwrap();
        assert!(r.breaking_vertices.is_empty());
        assert!(r.purely_infinite_sufficient);
    }

    #[test]
    fn diagonal_block_extraction() {
        // D over a closed label set is the corresponding diagonal block of D_X
        let space = two_point_space();
        let g = LabeledGraph::new(
            space,
            vec![("a".into(), "1".into()), ("b".into(), "2".into())],
            vec![
                ("a".into(), "a".into(), Mult::Finite(3)),
                ("b".into(), "b".into(), Mult::Finite(4)),
                ("a".into(), "b".into(), Mult::Finite(1)),
            ],
        )
        .unwrap();
        let one = g.space().point_index("1").unwrap();
        let whole = g.space().open_subset(g.space().all_points()).unwrap();
        let closed = g
            .space()
            .subset(PointSet::singleton(one), SubsetKind::Closed)
            .unwrap();
        let dx = g.d_matrix(&whole, false).unwrap();
        let dc = g.d_matrix(&closed, false).unwrap();
        // vertices are ordered label-2 block first, so "a" is second
        assert_eq!(dx.matrix[(1, 1)], dc.matrix[(0, 0)]);
    }
}
