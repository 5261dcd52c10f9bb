//! The reduced filtered K-theory of a labeled graph.
//!
//! For each point `x` of the space, the invariant carries three groups:
//!
//! * `M1(x)` — the K₁-group of the simple subquotient at `x`, computed as
//!   the kernel of the `D′`-block over `{x}`;
//! * `Mdb(x)` — the K₀-group of the ideal over the open boundary `∂̃{x}`,
//!   the cokernel of `D′` over `∂̃{x}`;
//! * `Mo(x)` — the K₀-group of the ideal over the smallest open set `x̃`,
//!   the cokernel of `D′` over `x̃`;
//!
//! and three families of maps: the index map `delta(x): M1(x) → Mdb(x)`,
//! the inclusion-induced `iup(x): Mdb(x) → Mo(x)`, and, for every cover
//! `y → x`, the inclusion-induced `icov(y, x): Mo(y) → Mdb(x)`.
//!
//! All groups are presented on the literal vertex index sets, so the induced
//! maps are coordinate inclusions and the index map is multiplication by the
//! connecting block of `D′`. Singular vertices (infinite or zero in-degree)
//! contribute columns but no rows.

use crate::finspace::{PointSet, PointSubset, SpaceError, SubsetKind};
use crate::graphcore::{GraphError, LabeledGraph};
use crate::zlattice::{
    cokernel, direct_sum, hermite_of, is_exact_at, kernel, lattice_contains, preimage_lattice,
    solve_mod, FgAbGroup, GroupHom, IntMatrix, LatticeError, SixTermSequence,
};
use crate::finspace::FiniteT0Space;
use num_bigint::BigInt;
use num_traits::{One, Zero};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FkError {
    #[error("invalid labeling: edge from {from:?} to {to:?} runs against the specialization order")]
    InvalidLabeling { from: String, to: String },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error("{0} is not open inside {1}")]
    NotOpenIn(String, String),
    #[error("cover member is not an open subset of the covered set")]
    BadCover,
    #[error("module self-check failed: {0} (implementation bug)")]
    SelfCheck(String),
    #[error("no preimage for the unit class (implementation bug)")]
    UnitPreimage,
    #[error("module data malformed: {0}")]
    Malformed(String),
}

/// Options controlling the internal consistency checks. They are on by
/// default and only worth disabling for speed in bulk runs.
#[derive(Clone, Copy, Debug)]
pub struct FkOptions {
    pub self_check: bool,
}

impl Default for FkOptions {
    fn default() -> Self {
        FkOptions { self_check: true }
    }
}

/// Per-point slot of an R-module.
#[derive(Clone, Debug)]
pub struct PointEntry {
    pub m1: FgAbGroup,
    pub mdb: FgAbGroup,
    pub mo: FgAbGroup,
    /// `M1(x) → Mdb(x)`.
    pub delta: GroupHom,
    /// `Mdb(x) → Mo(x)`.
    pub iup: GroupHom,
    /// `(y, Mo(y) → Mdb(x))` for every cover `y → x`, ascending in `y`.
    pub icov: Vec<(usize, GroupHom)>,
}

/// The reduced filtered K-theory invariant: three groups and the structure
/// maps per point of the space.
#[derive(Clone, Debug)]
pub struct RModule {
    space: FiniteT0Space,
    points: Vec<PointEntry>,
}

/// An R-module together with a distinguished unit class in its assembly
/// cokernel, stored as a reduced representative over the concatenated
/// `Mo`-generators.
#[derive(Clone, Debug)]
pub struct PointedRModule {
    pub module: RModule,
    pub unit: Vec<BigInt>,
}

/// The assembly cokernel `⊕ₓ Mo(x) / R`, where `R` identifies, for every
/// pair of points and every minimal common upper bound, the two transports
/// into the pair's slots. For a unital graph algebra this cokernel is
/// canonically the K₀-group of the whole algebra.
#[derive(Clone, Debug)]
pub struct Assembly {
    pub group: FgAbGroup,
    pub offsets: Vec<usize>,
}

impl RModule {
    /// Assemble a module from per-point data, validating shapes against the
    /// space. Homomorphism well-definedness is already enforced by
    /// [`GroupHom`]; this checks the cover structure.
    pub fn new(space: FiniteT0Space, points: Vec<PointEntry>) -> Result<Self, FkError> {
        if points.len() != space.n() {
            return Err(FkError::Malformed(format!(
                "{} point entries for a space with {} points",
                points.len(),
                space.n()
            )));
        }
        for (x, entry) in points.iter().enumerate() {
            let covers = space.covers_of(x);
            let listed = PointSet::from_indices(entry.icov.iter().map(|(y, _)| *y));
            if covers != listed {
                return Err(FkError::Malformed(format!(
                    "cover maps at point {} do not match the space covers",
                    space.point_name(x)
                )));
            }
            if !entry.delta.source().same_presentation(&entry.m1)
                || !entry.delta.target().same_presentation(&entry.mdb)
                || !entry.iup.source().same_presentation(&entry.mdb)
                || !entry.iup.target().same_presentation(&entry.mo)
            {
                return Err(FkError::Malformed(format!(
                    "maps at point {} do not connect the declared groups",
                    space.point_name(x)
                )));
            }
            for (y, h) in &entry.icov {
                if !h.source().same_presentation(&points[*y].mo)
                    || !h.target().same_presentation(&entry.mdb)
                {
                    return Err(FkError::Malformed(format!(
                        "cover map {} → {} has wrong end groups",
                        space.point_name(*y),
                        space.point_name(x)
                    )));
                }
            }
        }
        Ok(RModule { space, points })
    }

    pub fn space(&self) -> &FiniteT0Space {
        &self.space
    }

    pub fn point(&self, x: usize) -> &PointEntry {
        &self.points[x]
    }

    pub fn icov(&self, y: usize, x: usize) -> Option<&GroupHom> {
        self.points[x]
            .icov
            .iter()
            .find(|(c, _)| *c == y)
            .map(|(_, h)| h)
    }

    /// The composite `i_p` of a path `p = (z₁,…,zₙ)`: the map
    /// `Mo(zₙ) → Mo(z₂)` obtained by alternating cover inclusions and
    /// boundary-to-open maps down the path. For a covering pair it is the
    /// identity on `Mo(z₂)`.
    pub fn path_composite(&self, path: &[usize]) -> Result<GroupHom, LatticeError> {
        let n = path.len();
        assert!(n >= 2, "path composite needs a path of length at least 1");
        let mut h = GroupHom::identity(&self.points[path[n - 1]].mo);
        for k in (1..n - 1).rev() {
            let icov = self
                .icov(path[k + 1], path[k])
                .expect("consecutive path entries are covers");
            h = h.compose(icov)?.compose(&self.points[path[k]].iup)?;
        }
        Ok(h)
    }

    /// Transport `Mo(y) → Mo(x)` for `y ≥ x` along the first enumerated
    /// path. For exact modules the choice of path does not matter.
    pub fn transport(&self, y: usize, x: usize) -> Result<GroupHom, LatticeError> {
        if y == x {
            return Ok(GroupHom::identity(&self.points[x].mo));
        }
        let paths = self.space.paths(y, x);
        assert!(!paths.is_empty(), "transport requires y >= x");
        let p = &paths[0];
        let icov = self.icov(p[1], x).expect("second path entry covers x");
        self.path_composite(p)?
            .compose(icov)?
            .compose(&self.points[x].iup)
    }

    /// The sum `⊕_{y→x} Mo(y)` with the stacked cover maps into `Mdb(x)`,
    /// plus the summand offsets (keyed by ascending cover index).
    pub fn cover_sum(&self, x: usize) -> (FgAbGroup, Vec<usize>, GroupHom) {
        let covers: Vec<usize> = self.space.covers_of(x).iter().collect();
        let groups: Vec<&FgAbGroup> = covers.iter().map(|&y| &self.points[y].mo).collect();
        let (sum, offsets) = direct_sum(&groups);
        let mut matrix = IntMatrix::zero(sum.ngens(), self.points[x].mdb.ngens());
        for (k, &y) in covers.iter().enumerate() {
            let h = self.icov(y, x).unwrap();
            for i in 0..h.matrix().rows() {
                for j in 0..h.matrix().cols() {
                    matrix[(offsets[k] + i, j)] = h.matrix()[(i, j)].clone();
                }
            }
        }
        let hom = GroupHom::new(sum.clone(), self.points[x].mdb.clone(), matrix)
            .expect("stacked cover maps are well defined");
        (sum, offsets, hom)
    }

    /// The difference map `⊕_{(p,q)} Mo(s(p,q)) → ⊕_{y→x} Mo(y)` over the
    /// double paths into `x`.
    pub fn double_path_map(
        &self,
        x: usize,
        cover_sum: &FgAbGroup,
        offsets: &[usize],
    ) -> Result<GroupHom, LatticeError> {
        let covers: Vec<usize> = self.space.covers_of(x).iter().collect();
        let pairs = self.space.double_paths(x);
        let groups: Vec<&FgAbGroup> = pairs
            .iter()
            .map(|dp| &self.points[dp.source].mo)
            .collect();
        let (sum, pair_offsets) = direct_sum(&groups);
        let mut matrix = IntMatrix::zero(sum.ngens(), cover_sum.ngens());
        for (k, dp) in pairs.iter().enumerate() {
            let hp = self.path_composite(&dp.p)?;
            let hq = self.path_composite(&dp.q)?;
            let slot_p = covers.iter().position(|&y| y == dp.p[1]).unwrap();
            let slot_q = covers.iter().position(|&y| y == dp.q[1]).unwrap();
            for i in 0..hp.matrix().rows() {
                for j in 0..hp.matrix().cols() {
                    matrix[(pair_offsets[k] + i, offsets[slot_p] + j)] +=
                        hp.matrix()[(i, j)].clone();
                }
            }
            for i in 0..hq.matrix().rows() {
                for j in 0..hq.matrix().cols() {
                    matrix[(pair_offsets[k] + i, offsets[slot_q] + j)] -=
                        hq.matrix()[(i, j)].clone();
                }
            }
        }
        GroupHom::new(sum, cover_sum.clone(), matrix)
    }

    /// The assembly cokernel of the module: `⊕ₓ Mo(x)` modulo, for every
    /// point pair `x ≠ x'` and every minimal element `y` of `x̃ ∩ x̃'`, the
    /// difference of the two transports of `Mo(y)`.
    pub fn assembly(&self) -> Result<Assembly, LatticeError> {
        let groups: Vec<&FgAbGroup> = self.points.iter().map(|p| &p.mo).collect();
        let (free_sum, offsets) = direct_sum(&groups);
        let total = free_sum.ngens();
        let mut rows: Vec<Vec<BigInt>> = (0..free_sum.relations().rows())
            .map(|i| free_sum.relations().row_vec(i))
            .collect();
        let n = self.space.n();
        for x in 0..n {
            for x2 in x + 1..n {
                let meet = self
                    .space
                    .smallest_open(PointSet::singleton(x))
                    .intersect(self.space.smallest_open(PointSet::singleton(x2)));
                for y in self.space.minimal_points(meet).iter() {
                    let tx = self.transport(y, x)?;
                    let tx2 = self.transport(y, x2)?;
                    for i in 0..self.points[y].mo.ngens() {
                        let mut row = vec![BigInt::zero(); total];
                        for j in 0..tx.matrix().cols() {
                            row[offsets[x] + j] += &tx.matrix()[(i, j)];
                        }
                        for j in 0..tx2.matrix().cols() {
                            row[offsets[x2] + j] -= &tx2.matrix()[(i, j)];
                        }
                        rows.push(row);
                    }
                }
            }
        }
        let group = FgAbGroup::from_relations(total, IntMatrix::from_big_rows(rows, total));
        Ok(Assembly { group, offsets })
    }
}

fn d_prime(g: &LabeledGraph, members: PointSet) -> Result<crate::graphcore::DMatrix, FkError> {
    let sub = PointSubset {
        members,
        kind: SubsetKind::Arbitrary,
    };
    Ok(g.d_matrix(&sub, true)?)
}

fn require_valid_labeling(g: &LabeledGraph) -> Result<(), FkError> {
    if let Some((from, to)) = g.first_invalid_edge() {
        return Err(FkError::InvalidLabeling {
            from: g.vertex_id(from).to_string(),
            to: g.vertex_id(to).to_string(),
        });
    }
    Ok(())
}

/// The six-term exact sequence of the subquotient pair `U ⊆ Y` (with `U`
/// relatively open in the locally closed `Y`), computed from `D′`-blocks.
pub fn six_term(
    g: &LabeledGraph,
    y: &PointSubset,
    u: &PointSubset,
) -> Result<SixTermSequence, FkError> {
    require_valid_labeling(g)?;
    let space = g.space();
    if !space.is_locally_closed(y.members) {
        return Err(FkError::NotOpenIn(
            "the ambient subset is not locally closed".into(),
            String::new(),
        ));
    }
    if !space.is_open_in(u.members, y.members) {
        return Err(FkError::NotOpenIn(
            format!("{:?}", u.members),
            format!("{:?}", y.members),
        ));
    }
    let c = y.members.minus(u.members);
    let du = d_prime(g, u.members)?;
    let dc = d_prime(g, c)?;
    let dy = d_prime(g, y.members)?;
    // reorder the Y matrix with U-vertices first, then C-vertices
    let mut row_order = Vec::new();
    let mut col_order = Vec::new();
    for pass in [u.members, c] {
        for (i, &v) in dy.row_vertices.iter().enumerate() {
            if pass.contains(g.label(v)) {
                row_order.push(i);
            }
        }
        for (j, &v) in dy.col_vertices.iter().enumerate() {
            if pass.contains(g.label(v)) {
                col_order.push(j);
            }
        }
    }
    let dy_sorted = dy.matrix.submatrix(&row_order, &col_order);
    let block = {
        // quotient-side rows, ideal-side columns
        let rows: Vec<usize> = (du.row_vertices.len()..dy_sorted.rows()).collect();
        let cols: Vec<usize> = (0..du.col_vertices.len()).collect();
        dy_sorted.submatrix(&rows, &cols)
    };
    Ok(crate::zlattice::connecting_data(
        &du.matrix, &dy_sorted, &dc.matrix, &block,
    )?)
}

/// Compute the full invariant of a labeled graph.
pub fn compute_fk(g: &LabeledGraph) -> Result<RModule, FkError> {
    compute_fk_opts(g, FkOptions::default())
}

pub fn compute_fk_opts(g: &LabeledGraph, opts: FkOptions) -> Result<RModule, FkError> {
    require_valid_labeling(g)?;
    let space = g.space().clone();
    let mut points = Vec::with_capacity(space.n());
    for x in 0..space.n() {
        let x_set = PointSet::singleton(x);
        let boundary = space.open_boundary(x_set);
        let open = space.smallest_open(x_set);
        let dx = d_prime(g, x_set)?;
        let ddb = d_prime(g, boundary)?;
        let dopen = d_prime(g, open)?;
        let (m1, m1_incl) = kernel(&dx.matrix);
        let (mdb, _) = cokernel(&ddb.matrix);
        let (mo, _) = cokernel(&dopen.matrix);
        // index map: kernel basis times the block of D' over x̃ at
        // (regular x-rows, boundary columns)
        let dopen_block = {
            let rows: Vec<usize> = dopen
                .row_vertices
                .iter()
                .enumerate()
                .filter(|(_, &v)| g.label(v) == x)
                .map(|(i, _)| i)
                .collect();
            let cols: Vec<usize> = dopen
                .col_vertices
                .iter()
                .enumerate()
                .filter(|(_, &v)| g.label(v) != x)
                .map(|(j, _)| j)
                .collect();
            dopen.matrix.submatrix(&rows, &cols)
        };
        let delta = GroupHom::new(
            m1.clone(),
            mdb.clone(),
            m1_incl.matrix().mul(&dopen_block),
        )?;
        let iup = GroupHom::new(
            mdb.clone(),
            mo.clone(),
            inclusion_matrix(&ddb.col_vertices, &dopen.col_vertices),
        )?;
        let mut icov = Vec::new();
        for yc in space.covers_of(x).iter() {
            let dy_open = d_prime(g, space.smallest_open(PointSet::singleton(yc)))?;
            let h = GroupHom::new(
                cokernel(&dy_open.matrix).0,
                mdb.clone(),
                inclusion_matrix(&dy_open.col_vertices, &ddb.col_vertices),
            )?;
            icov.push((yc, h));
        }
        points.push(PointEntry {
            m1,
            mdb,
            mo,
            delta,
            iup,
            icov,
        });
    }
    let module = RModule::new(space, points)?;
    if opts.self_check {
        if !crate::rmod::verify_relations(&module) {
            return Err(FkError::SelfCheck("module relations".into()));
        }
        if !crate::rmod::is_exact(&module) {
            return Err(FkError::SelfCheck("module exactness".into()));
        }
    }
    Ok(module)
}

/// Coordinate inclusion matrix between vertex index lists (`sub` must be a
/// subsequence of `sup`).
fn inclusion_matrix(sub: &[usize], sup: &[usize]) -> IntMatrix {
    let mut m = IntMatrix::zero(sub.len(), sup.len());
    for (i, v) in sub.iter().enumerate() {
        let j = sup
            .iter()
            .position(|w| w == v)
            .expect("inclusion requires a subset of vertices");
        m[(i, j)] = BigInt::one();
    }
    m
}

/// Exactness of the covering sequence for an open `Y` and an open cover:
/// `⊕ K₀(Uᵢ∩Uⱼ) → ⊕ K₀(Uᵢ) → K₀(Y) → 0`.
pub fn mayer_vietoris_check(
    g: &LabeledGraph,
    y: &PointSubset,
    cover: &[PointSubset],
) -> Result<bool, FkError> {
    require_valid_labeling(g)?;
    let space = g.space();
    if !space.is_open(y.members) {
        return Err(FkError::BadCover);
    }
    let mut union = PointSet::EMPTY;
    for u in cover {
        if !space.is_open(u.members) || !u.members.is_subset_of(y.members) {
            return Err(FkError::BadCover);
        }
        union = union.union(u.members);
    }
    if union != y.members {
        return Err(FkError::BadCover);
    }
    let dy = d_prime(g, y.members)?;
    let (coker_y, _) = cokernel(&dy.matrix);
    let pieces: Vec<crate::graphcore::DMatrix> = cover
        .iter()
        .map(|u| d_prime(g, u.members))
        .collect::<Result<_, _>>()?;
    let piece_groups: Vec<FgAbGroup> = pieces.iter().map(|d| cokernel(&d.matrix).0).collect();
    let refs: Vec<&FgAbGroup> = piece_groups.iter().collect();
    let (mid_sum, mid_offsets) = direct_sum(&refs);
    // second map: stacked inclusions into Y
    let mut second = IntMatrix::zero(mid_sum.ngens(), coker_y.ngens());
    for (k, d) in pieces.iter().enumerate() {
        let incl = inclusion_matrix(&d.col_vertices, &dy.col_vertices);
        for i in 0..incl.rows() {
            for j in 0..incl.cols() {
                second[(mid_offsets[k] + i, j)] = incl[(i, j)].clone();
            }
        }
    }
    let second = GroupHom::new(mid_sum.clone(), coker_y, second)?;
    // first map: pairwise intersections, difference of the two inclusions
    let mut inter_groups = Vec::new();
    let mut inter_data = Vec::new();
    for i in 0..cover.len() {
        for j in i + 1..cover.len() {
            let meet = cover[i].members.intersect(cover[j].members);
            let dm = d_prime(g, meet)?;
            inter_groups.push(cokernel(&dm.matrix).0);
            inter_data.push((i, j, dm));
        }
    }
    let inter_refs: Vec<&FgAbGroup> = inter_groups.iter().collect();
    let (inter_sum, inter_offsets) = direct_sum(&inter_refs);
    let mut first = IntMatrix::zero(inter_sum.ngens(), mid_sum.ngens());
    for (k, (i, j, dm)) in inter_data.iter().enumerate() {
        let into_i = inclusion_matrix(&dm.col_vertices, &pieces[*i].col_vertices);
        let into_j = inclusion_matrix(&dm.col_vertices, &pieces[*j].col_vertices);
        for r in 0..into_i.rows() {
            for c in 0..into_i.cols() {
                first[(inter_offsets[k] + r, mid_offsets[*i] + c)] += &into_i[(r, c)];
            }
            for c in 0..into_j.cols() {
                first[(inter_offsets[k] + r, mid_offsets[*j] + c)] -= &into_j[(r, c)];
            }
        }
    }
    let first = GroupHom::new(inter_sum, mid_sum, first)?;
    Ok(is_exact_at(&first, &second)? && second.is_surjective())
}

/// The unit class of a finite-vertex graph: the unique element of the
/// assembly cokernel that maps to the class of the all-ones vector in
/// `coker D′` over the whole space.
pub fn unit_class(g: &LabeledGraph) -> Result<PointedRModule, FkError> {
    unit_class_opts(g, FkOptions::default())
}

pub fn unit_class_opts(g: &LabeledGraph, opts: FkOptions) -> Result<PointedRModule, FkError> {
    let module = compute_fk_opts(g, opts)?;
    let assembly = module.assembly()?;
    let unit = graph_unit_in_assembly(g, &module, &assembly, opts.self_check)?;
    Ok(PointedRModule { module, unit })
}

/// Express the all-ones class of a graph in the assembly coordinates of its
/// own computed module.
pub fn graph_unit_in_assembly(
    g: &LabeledGraph,
    module: &RModule,
    assembly: &Assembly,
    self_check: bool,
) -> Result<Vec<BigInt>, FkError> {
    let space = g.space();
    let dx = d_prime(g, space.all_points())?;
    let incl = assembly_inclusion(g, module, assembly)?;
    let ones = vec![BigInt::one(); dx.col_vertices.len()];
    let u = solve_mod(&incl, &dx.matrix, &ones).ok_or(FkError::UnitPreimage)?;
    if self_check {
        // injectivity of the induced map on the assembly cokernel: anything
        // that maps into the relation lattice must already be a relation
        let pre = preimage_lattice(&incl, &hermite_of(&dx.matrix));
        if !lattice_contains(assembly.group.relations(), &pre) {
            return Err(FkError::SelfCheck(
                "assembly cokernel does not inject into K0".into(),
            ));
        }
    }
    Ok(assembly.group.reduce(&u))
}

/// The matrix of the assembly map `⊕ₓ Mo(x) → ℤ^{V_X}` given by coordinate
/// inclusion of each `x̃`-block.
pub fn assembly_inclusion(
    g: &LabeledGraph,
    module: &RModule,
    assembly: &Assembly,
) -> Result<IntMatrix, FkError> {
    let space = g.space();
    let dx = d_prime(g, space.all_points())?;
    let total = assembly.group.ngens();
    let mut incl = IntMatrix::zero(total, dx.col_vertices.len());
    for x in 0..space.n() {
        let dox = d_prime(g, space.smallest_open(PointSet::singleton(x)))?;
        if dox.col_vertices.len() != module.point(x).mo.ngens() {
            return Err(FkError::Malformed(
                "module was not computed from this graph".into(),
            ));
        }
        let block = inclusion_matrix(&dox.col_vertices, &dx.col_vertices);
        for i in 0..block.rows() {
            for j in 0..block.cols() {
                incl[(assembly.offsets[x] + i, j)] = block[(i, j)].clone();
            }
        }
    }
    Ok(incl)
}
