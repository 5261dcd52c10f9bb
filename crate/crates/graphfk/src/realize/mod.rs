//! Constructive realization: build a labeled graph whose reduced filtered
//! K-theory is isomorphic to a given exact module, emitting a certificate
//! that an independent checker re-verifies.
//!
//! The construction walks the space from open points to closed ones. Each
//! point gets a small block with the prescribed kernel and cokernel; each
//! step then searches for a nonnegative connecting block against the open
//! boundary that reproduces the module's index and inclusion maps. The
//! final graph is `E(1 + D)` and the emitted isomorphism family is checked
//! against a fresh invariant computation of that graph.
//!
//! The unital variant additionally threads a unit constraint through every
//! step that enlarges the largest closed subset, so that the all-ones class
//! of the result matches the prescribed unit.

mod connecting;
mod point_block;

pub use connecting::{find_connecting, Connecting, ConnectingTarget, ExtraBuilder, ExtraConstraint};
pub use point_block::{point_block_candidates, realize_point, PointBlock};

use crate::finspace::{FiniteT0Space, PointSet};
use crate::fk::{compute_fk_opts, FkOptions, PointedRModule, RModule};
use crate::graphcore::{LabeledGraph, Mult};
use crate::rmod::{self, IsoTriple, ModuleIso};
use crate::zlattice::{
    cokernel, kernel, solve_mod, FgAbGroup, GroupHom, IntMatrix, SixTermSequence,
};
use num_bigint::BigInt;
use num_traits::{One, Zero};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RealizeError {
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("unsupported input: {0}")]
    Unsupported(String),
    #[error("budget exhausted at point {point}: {detail}")]
    BudgetExhausted { point: String, detail: String },
    #[error("internal error: {0}")]
    Internal(String),
}

/// Caps for the connecting search.
#[derive(Clone, Copy, Debug)]
pub struct ConnectLimits {
    pub class_candidates: usize,
    pub raw_points: usize,
    pub box_nodes: usize,
    pub iso_candidates: usize,
}

impl Default for ConnectLimits {
    fn default() -> Self {
        ConnectLimits {
            class_candidates: 3000,
            raw_points: 60_000,
            box_nodes: 4000,
            iso_candidates: 48,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct RealizeOptions {
    /// Entry bound for connecting blocks (and variant block parameters).
    pub budget: u32,
    /// Process maximal points highest-index-first instead of lowest.
    pub prefer_high_order: bool,
    pub limits: ConnectLimits,
    /// Cap on alternative point blocks tried per unital step.
    pub block_candidates: usize,
}

impl Default for RealizeOptions {
    fn default() -> Self {
        RealizeOptions {
            budget: 8,
            prefer_high_order: false,
            limits: ConnectLimits::default(),
            block_candidates: 64,
        }
    }
}

/// A realized graph together with the isomorphism family from the input
/// module onto the invariant of the output, and (for unital runs) the unit
/// verification outcome.
#[derive(Clone, Debug)]
pub struct RealizationCertificate {
    pub graph: LabeledGraph,
    pub iso: ModuleIso,
    pub unit_preserved: Option<bool>,
}

/// Growing matrix assembly over the processed part of the space. Vertices
/// are kept in the canonical linear order of their labels regardless of the
/// processing order, so the final graph's vertex order matches the state.
#[derive(Clone)]
struct BuildState {
    space: FiniteT0Space,
    labels: Vec<usize>,
    regular: Vec<bool>,
    ids: Vec<String>,
    /// `(vertex, full-width row)` per regular vertex, sorted by vertex.
    rows: Vec<(usize, Vec<BigInt>)>,
}

impl BuildState {
    fn new(space: FiniteT0Space) -> Self {
        BuildState {
            space,
            labels: Vec::new(),
            regular: Vec::new(),
            ids: Vec::new(),
            rows: Vec::new(),
        }
    }

    fn n(&self) -> usize {
        self.labels.len()
    }

    fn verts_over(&self, set: PointSet) -> Vec<usize> {
        (0..self.n()).filter(|&v| set.contains(self.labels[v])).collect()
    }

    /// `D′` over a point set: regular rows over the set × columns over it.
    fn dprime_over(&self, set: PointSet) -> IntMatrix {
        let cols = self.verts_over(set);
        let mut out_rows = Vec::new();
        for (v, row) in &self.rows {
            if !set.contains(self.labels[*v]) {
                continue;
            }
            out_rows.push(cols.iter().map(|&w| row[w].clone()).collect());
        }
        IntMatrix::from_big_rows(out_rows, cols.len())
    }

    /// Insert the block for point `x` (with connecting block `y` against
    /// the current boundary vertices) at the canonical position of `x`.
    fn push_block(&mut self, x: usize, block: &PointBlock, y: &IntMatrix) {
        let boundary_cols = self.verts_over(self.space.open_boundary(PointSet::singleton(x)));
        assert_eq!(y.rows(), block.d_prime.rows());
        assert_eq!(y.cols(), boundary_cols.len());
        let rank = self.space.linear_rank(x);
        let idx = (0..self.n())
            .find(|&v| self.space.linear_rank(self.labels[v]) > rank)
            .unwrap_or(self.n());
        let nb = block.n_vertices;
        // shift old data
        for (v, row) in self.rows.iter_mut() {
            if *v >= idx {
                *v += nb;
            }
            let tail = row.split_off(idx);
            row.extend(std::iter::repeat(BigInt::zero()).take(nb));
            row.extend(tail);
        }
        let shift = |p: usize| if p >= idx { p + nb } else { p };
        let new_n = self.n() + nb;
        self.labels.splice(idx..idx, std::iter::repeat(x).take(nb));
        self.regular
            .splice(idx..idx, block.regular.iter().copied());
        self.ids.splice(
            idx..idx,
            (0..nb).map(|k| format!("{}_v{}", self.space.point_name(x), k)),
        );
        let mut ri = 0usize;
        for k in 0..nb {
            if !block.regular[k] {
                continue;
            }
            let mut row = vec![BigInt::zero(); new_n];
            for (ci, &w) in boundary_cols.iter().enumerate() {
                row[shift(w)] = y[(ri, ci)].clone();
            }
            for j in 0..nb {
                row[idx + j] = block.d_prime[(ri, j)].clone();
            }
            self.rows.push((idx + k, row));
            ri += 1;
        }
        self.rows.sort_by_key(|(v, _)| *v);
    }

    /// The graph `E(1 + D)`: regular rows from the assembled matrix,
    /// singular rows with an infinite loop and infinite multiplicities
    /// toward every vertex of strictly larger label.
    fn into_graph(self) -> Result<LabeledGraph, RealizeError> {
        let n = self.n();
        let mut verts = Vec::with_capacity(n);
        for v in 0..n {
            verts.push((
                self.ids[v].clone(),
                self.space.point_name(self.labels[v]).to_string(),
            ));
        }
        let mut mults = Vec::new();
        let mut reg_row: Vec<Option<&Vec<BigInt>>> = vec![None; n];
        for (v, row) in &self.rows {
            reg_row[*v] = Some(row);
        }
        for v in 0..n {
            if self.regular[v] {
                let row = reg_row[v].expect("regular vertex has a row");
                for w in 0..n {
                    let mut entry = row[w].clone();
                    if v == w {
                        entry += 1;
                    }
                    if entry.is_zero() {
                        continue;
                    }
                    let m = entry
                        .to_string()
                        .parse::<u64>()
                        .map_err(|_| RealizeError::Internal("entry out of range".into()))?;
                    mults.push((self.ids[v].clone(), self.ids[w].clone(), Mult::Finite(m)));
                }
            } else {
                mults.push((self.ids[v].clone(), self.ids[v].clone(), Mult::Infinite));
                for w in 0..n {
                    if self.space.lt(self.labels[v], self.labels[w]) {
                        mults.push((self.ids[v].clone(), self.ids[w].clone(), Mult::Infinite));
                    }
                }
            }
        }
        LabeledGraph::new(self.space.clone(), verts, mults)
            .map_err(|e| RealizeError::Internal(e.to_string()))
    }
}

fn coker_of_iup(m: &RModule, x: usize) -> FgAbGroup {
    let e = m.point(x);
    FgAbGroup::from_relations(
        e.mo.ngens(),
        e.iup.matrix().vstack(e.mo.relations()),
    )
}

/// Realize an exact module with torsion-free K₁ slots as a finite graph.
/// Requires the finite-case rank condition at every point; otherwise the
/// input is rejected as unsupported (a realization exists only with
/// infinitely many vertices, which this implementation does not build).
pub fn realize_module(
    m: &RModule,
    opts: &RealizeOptions,
) -> Result<RealizationCertificate, RealizeError> {
    let verdict = rmod::range_check(m, false);
    if !verdict.exact {
        let detail = rmod::exactness_failure(m)
            .unwrap_or_else(|| "module relations fail".into());
        return Err(RealizeError::Precondition(detail));
    }
    if !verdict.k1_free.iter().all(|&b| b) {
        return Err(RealizeError::Precondition(
            "a K1 slot has torsion; no graph realizes it".into(),
        ));
    }
    if !verdict.rank_equal.iter().all(|&b| b) {
        return Err(RealizeError::Unsupported(
            "K1 rank differs from the cokernel rank at some point; only an infinite graph realizes this module"
                .into(),
        ));
    }
    realize_driver(m, None, false, opts)
}

/// Realize an exact pointed module; singular vertices absorb any strict
/// rank inequality, and the unit class of the output matches the input
/// unit under the certificate.
pub fn realize_unital(
    p: &PointedRModule,
    opts: &RealizeOptions,
) -> Result<RealizationCertificate, RealizeError> {
    let verdict = rmod::range_check(&p.module, true);
    if !verdict.exact {
        let detail = rmod::exactness_failure(&p.module)
            .unwrap_or_else(|| "module relations fail".into());
        return Err(RealizeError::Precondition(detail));
    }
    if !verdict.k1_free.iter().all(|&b| b) {
        return Err(RealizeError::Precondition(
            "a K1 slot has torsion; no graph realizes it".into(),
        ));
    }
    if !verdict.rank_leq.iter().all(|&b| b) {
        return Err(RealizeError::Precondition(
            "K1 rank exceeds the cokernel rank at some point".into(),
        ));
    }
    realize_driver(&p.module, Some(&p.unit), true, opts)
}

struct DriverCtx<'a> {
    m: &'a RModule,
    unit: Option<&'a [BigInt]>,
    allow_singular: bool,
    opts: &'a RealizeOptions,
    mo_offsets: Vec<usize>,
    steps: Vec<crate::finspace::OpenStep>,
    /// remaining step placements before giving up
    attempts: usize,
}

fn realize_driver(
    m: &RModule,
    unit: Option<&[BigInt]>,
    allow_singular: bool,
    opts: &RealizeOptions,
) -> Result<RealizationCertificate, RealizeError> {
    let space = m.space().clone();
    let steps = space.open_point_sequence_with(opts.prefer_high_order);
    let mut state = BuildState::new(space.clone());
    let mut phi_o: Vec<Option<GroupHom>> = vec![None; space.n()];
    let mut phi_db: Vec<Option<GroupHom>> = vec![None; space.n()];
    let mut phi_1: Vec<Option<GroupHom>> = vec![None; space.n()];
    let (_, mo_offsets) = rmod::mo_sum(m);
    let mut ctx = DriverCtx {
        m,
        unit,
        allow_singular,
        opts,
        mo_offsets,
        steps,
        attempts: 400,
    };
    realize_rec(&mut ctx, 0, &mut state, &mut phi_o, &mut phi_db, &mut phi_1)?;

    let graph = state.into_graph()?;
    let computed = compute_fk_opts(&graph, FkOptions { self_check: true })
        .map_err(|e| RealizeError::Internal(format!("invariant of output failed: {e}")))?;
    let iso = ModuleIso {
        per_point: (0..space.n())
            .map(|x| IsoTriple {
                m1: phi_1[x].clone().unwrap(),
                mdb: phi_db[x].clone().unwrap(),
                mo: phi_o[x].clone().unwrap(),
            })
            .collect(),
    };
    if !rmod::verify_module_iso(m, &computed, &iso) {
        return Err(RealizeError::Internal(
            "emitted certificate failed independent verification".into(),
        ));
    }
    let unit_preserved = match unit {
        None => None,
        Some(u) => {
            let pm = PointedRModule {
                module: m.clone(),
                unit: u.to_vec(),
            };
            let pn = crate::fk::unit_class_opts(&graph, FkOptions { self_check: true })
                .map_err(|e| RealizeError::Internal(format!("unit of output failed: {e}")))?;
            let ok = rmod::verify_unit_preserved(&pm, &pn, &iso);
            if !ok {
                return Err(RealizeError::Internal(
                    "unit class of the output does not match the input unit".into(),
                ));
            }
            Some(true)
        }
    };
    Ok(RealizationCertificate {
        graph,
        iso,
        unit_preserved,
    })
}

/// Backtracking placement: at each step the block and the identification
/// of its cokernel may be twisted by an automorphism; a unit constraint at
/// a later closed point can make an earlier twist necessary, so exhaustion
/// backtracks.
fn realize_rec(
    ctx: &mut DriverCtx<'_>,
    ix: usize,
    state: &mut BuildState,
    phi_o: &mut Vec<Option<GroupHom>>,
    phi_db: &mut Vec<Option<GroupHom>>,
    phi_1: &mut Vec<Option<GroupHom>>,
) -> Result<(), RealizeError> {
    if ix == ctx.steps.len() {
        return Ok(());
    }
    let space = ctx.m.space().clone();
    let step = ctx.steps[ix].clone();
    let x = step.point;
    let entry = ctx.m.point(x);
    let k0 = coker_of_iup(ctx.m, x);
    let k1_rank = entry.m1.free_rank();
    let prev_ck = if ix == 0 {
        PointSet::EMPTY
    } else {
        ctx.steps[ix - 1].c_k
    };
    let unit_here = ctx.unit.filter(|_| step.c_k != prev_ck);
    let boundary = space.open_boundary(PointSet::singleton(x));
    let unital = ctx.unit.is_some();
    let blocks = point_block_candidates(
        x,
        k1_rank,
        &k0,
        ctx.allow_singular && k1_rank < k0.free_rank(),
        unital,
        ctx.opts.budget,
        if unital { ctx.opts.block_candidates } else { 1 },
    )?;
    let mut last_detail = String::new();
    for block in &blocks {
        // identifications of the block cokernel: the canonical one, and in
        // unital mode its automorphism twists
        let mut rsis = vec![block.iso_rsi.clone()];
        if unital {
            let (coker_b, _) = cokernel(&block.d_prime);
            for auto in rmod::iso_candidates(&coker_b, &coker_b, ctx.opts.budget, 12) {
                if let Ok(t) = block.iso_rsi.compose(&auto) {
                    if !rsis.iter().any(|r| r.same_map(&t)) {
                        rsis.push(t);
                    }
                }
            }
        }
        for rsi in &rsis {
            if ctx.attempts == 0 {
                return Err(RealizeError::BudgetExhausted {
                    point: space.point_name(x).to_string(),
                    detail: "placement attempt cap reached".into(),
                });
            }
            ctx.attempts -= 1;
            match place_point(
                ctx.m,
                x,
                entry,
                &k0,
                block,
                rsi,
                state,
                phi_o,
                boundary,
                unit_here,
                &ctx.mo_offsets,
                step.c_k,
                ctx.opts,
            ) {
                Ok((y, po, pdb, p1)) => {
                    let saved_state = state.clone();
                    state.push_block(x, block, &y);
                    phi_o[x] = Some(po);
                    phi_db[x] = Some(pdb);
                    phi_1[x] = Some(p1);
                    match realize_rec(ctx, ix + 1, state, phi_o, phi_db, phi_1) {
                        Ok(()) => return Ok(()),
                        Err(RealizeError::BudgetExhausted { detail, .. }) => {
                            last_detail = detail;
                            *state = saved_state;
                            phi_o[x] = None;
                            phi_db[x] = None;
                            phi_1[x] = None;
                        }
                        Err(e) => return Err(e),
                    }
                }
                Err(RealizeError::BudgetExhausted { detail, .. }) => {
                    last_detail = detail;
                }
                Err(e) => return Err(e),
            }
        }
    }
    Err(RealizeError::BudgetExhausted {
        point: space.point_name(x).to_string(),
        detail: if last_detail.is_empty() {
            "no point block admitted a connecting block".into()
        } else {
            last_detail
        },
    })
}

/// One point step: derive the boundary identification, set up the inner
/// six-term target, and search for the connecting block (with the unit
/// condition when required). Returns the connecting block and the three
/// slot isomorphisms.
#[allow(clippy::too_many_arguments)]
fn place_point(
    m: &RModule,
    x: usize,
    entry: &crate::fk::PointEntry,
    k0: &FgAbGroup,
    block: &PointBlock,
    rsi: &GroupHom,
    state: &BuildState,
    phi_o: &[Option<GroupHom>],
    boundary: PointSet,
    unit_here: Option<&[BigInt]>,
    mo_offsets: &[usize],
    c_k: PointSet,
    opts: &RealizeOptions,
) -> Result<(IntMatrix, GroupHom, GroupHom, GroupHom), RealizeError> {
    let space = m.space();
    let (coker_b, _) = cokernel(&block.d_prime);
    let (ker_b, _) = kernel(&block.d_prime);
    let proj_rsi = GroupHom::new(
        entry.mo.clone(),
        k0.clone(),
        IntMatrix::identity(entry.mo.ngens()),
    )
    .map_err(|e| RealizeError::Internal(e.to_string()))?;
    // φ1: M1(x) → ker d_prime, through the canonical free form
    let m1_canon = GroupHom::new(
        entry.m1.clone(),
        entry.m1.canon_group(),
        entry.m1.to_canon_matrix(),
    )
    .map_err(|e| RealizeError::Internal(e.to_string()))?;
    if m1_canon.target().ngens() != block.iso_k1.source().ngens() {
        return Err(RealizeError::Internal("K1 rank mismatch with block".into()));
    }
    let phi1 = m1_canon
        .compose(&block.iso_k1)
        .map_err(|e| RealizeError::Internal(e.to_string()))?;

    if boundary.is_empty() {
        // lone block: Mdb must be trivial and there is nothing to connect
        if !entry.mdb.is_trivial() {
            return Err(RealizeError::Precondition(format!(
                "Mdb({}) nontrivial at a maximal point",
                space.point_name(x)
            )));
        }
        let coka = cokernel(&state.dprime_over(boundary)).0;
        let pdb = GroupHom::zero(&entry.mdb, &coka);
        let po = proj_rsi
            .compose(rsi)
            .map_err(|e| RealizeError::Internal(e.to_string()))?;
        if let Some(u) = unit_here {
            if !unit_condition_holds(m, x, &po, state, block, None, phi_o, u, mo_offsets, c_k) {
                return Err(RealizeError::BudgetExhausted {
                    point: space.point_name(x).to_string(),
                    detail: "unit condition fails for this identification".into(),
                });
            }
        }
        let y = IntMatrix::zero(block.d_prime.rows(), 0);
        return Ok((y, po, pdb, phi1));
    }

    // boundary identification induced by the processed open slots
    let a = state.dprime_over(boundary);
    let (coka, _) = cokernel(&a);
    let (kera, _) = kernel(&a);
    let pdb = induce_phi_db(m, x, phi_o, state, boundary, &coka)
        .ok_or_else(|| RealizeError::Internal("boundary identification failed".into()))?;
    let eps = pdb
        .invert()
        .ok_or_else(|| RealizeError::Internal("boundary map not invertible".into()))?
        .compose(&entry.iup)
        .map_err(|e| RealizeError::Internal(e.to_string()))?;
    let delta_inner = phi1
        .invert()
        .ok_or_else(|| RealizeError::Internal("K1 map not invertible".into()))?
        .compose(&entry.delta)
        .and_then(|h| h.compose(&pdb))
        .map_err(|e| RealizeError::Internal(e.to_string()))?;
    let ker_delta = crate::zlattice::preimage_lattice(delta_inner.matrix(), coka.relation_hnf());
    let f2 = FgAbGroup::free(kera.ngens() + ker_delta.rows());
    let eps_prime = GroupHom::new(
        kera.clone(),
        f2.clone(),
        IntMatrix::identity(kera.ngens())
            .hstack(&IntMatrix::zero(kera.ngens(), ker_delta.rows())),
    )
    .map_err(|e| RealizeError::Internal(e.to_string()))?;
    let gamma_prime = GroupHom::new(
        f2.clone(),
        ker_b.clone(),
        IntMatrix::zero(kera.ngens(), ker_b.ngens()).vstack(&ker_delta),
    )
    .map_err(|e| RealizeError::Internal(e.to_string()))?;
    // floor: one required-nonzero entry per boundary point block when the
    // block has regular rows; infinite rows carry the requirement otherwise
    let boundary_cols = state.verts_over(boundary);
    let mut floor = IntMatrix::zero(block.d_prime.rows(), boundary_cols.len());
    if block.d_prime.rows() > 0 {
        for z in boundary.iter() {
            if let Some(ci) = boundary_cols
                .iter()
                .position(|&v| state.labels[v] == z)
            {
                floor[(0, ci)] = BigInt::one();
            }
        }
    }

    let unit_builder = unit_here.map(|u| {
        unit_constraint_builder(m, x, state, block, phi_o, u, mo_offsets, c_k)
    });
    let extra: Option<ExtraBuilder<'_>> = match &unit_builder {
        Some(f) => Some(f),
        None => None,
    };
    let gamma = proj_rsi
        .compose(rsi)
        .map_err(|e| RealizeError::Internal(e.to_string()))?;
    let seq = SixTermSequence {
        coker_u: coka.clone(),
        coker_y: entry.mo.clone(),
        coker_c: coker_b.clone(),
        ker_u: kera.clone(),
        ker_y: f2,
        ker_c: ker_b.clone(),
        iota_coker: eps,
        pi_coker: gamma,
        exponential: GroupHom::zero(&coker_b, &kera),
        iota_ker: eps_prime,
        pi_ker: gamma_prime,
        index: delta_inner,
    };
    seq.self_check()
        .map_err(|e| RealizeError::Internal(format!("inner target not exact: {e}")))?;
    let target = ConnectingTarget {
        coker_a_iso: GroupHom::identity(&coka),
        ker_a_iso: GroupHom::identity(&kera),
        coker_b_iso: GroupHom::identity(&coker_b),
        ker_b_iso: GroupHom::identity(&ker_b),
        seq,
    };
    let found = find_connecting(
        &a,
        &block.d_prime,
        &target,
        &floor,
        opts.budget,
        &opts.limits,
        extra,
    )?;
    Ok((found.y, found.phi_middle, pdb, phi1))
}

/// Induce the boundary identification `Mdb(x) → coker A` from the chosen
/// open slots of the points above `x`: lift each generator through the
/// cover surjection, transport component-wise, and include.
fn induce_phi_db(
    m: &RModule,
    x: usize,
    phi_o: &[Option<GroupHom>],
    state: &BuildState,
    boundary: PointSet,
    coka: &FgAbGroup,
) -> Option<GroupHom> {
    let space = m.space();
    let covers: Vec<usize> = space.covers_of(x).iter().collect();
    let (_, offsets_m, s_m) = m.cover_sum(x);
    let entry = m.point(x);
    let boundary_verts = state.verts_over(boundary);
    // per cover: φo(y) followed by the vertex inclusion into the boundary
    let mut pushed: Vec<IntMatrix> = Vec::with_capacity(covers.len());
    for &y in &covers {
        let po = phi_o[y].as_ref()?;
        let y_verts = state.verts_over(space.smallest_open(PointSet::singleton(y)));
        let mut incl = IntMatrix::zero(y_verts.len(), boundary_verts.len());
        for (i, v) in y_verts.iter().enumerate() {
            let j = boundary_verts.iter().position(|w| w == v)?;
            incl[(i, j)] = BigInt::one();
        }
        pushed.push(po.matrix().mul(&incl));
    }
    let mut rows = Vec::with_capacity(entry.mdb.ngens());
    for i in 0..entry.mdb.ngens() {
        let mut e = vec![BigInt::zero(); entry.mdb.ngens()];
        e[i] = BigInt::one();
        let lift = solve_mod(s_m.matrix(), entry.mdb.relations(), &e)?;
        let mut out = vec![BigInt::zero(); boundary_verts.len()];
        for (k, &_y) in covers.iter().enumerate() {
            let width = m.point(covers[k]).mo.ngens();
            for r in 0..width {
                let c = &lift[offsets_m[k] + r];
                if c.is_zero() {
                    continue;
                }
                for j in 0..boundary_verts.len() {
                    out[j] += c * &pushed[k][(r, j)];
                }
            }
        }
        rows.push(out);
    }
    let h = GroupHom::new(
        entry.mdb.clone(),
        coka.clone(),
        IntMatrix::from_big_rows(rows, coka.ngens()),
    )
    .ok()?;
    if !h.is_isomorphism() {
        return None;
    }
    // cover squares validate the induction
    for (k, &y) in covers.iter().enumerate() {
        let lhs = m.icov(y, x).unwrap().compose(&h).ok()?;
        let rhs_mat = pushed[k].clone();
        let rhs = GroupHom::new(m.point(y).mo.clone(), coka.clone(), rhs_mat).ok()?;
        if !lhs.same_map(&rhs) {
            return None;
        }
    }
    Some(h)
}

/// Build, for a given connecting block, the unit constraint on the unknown
/// open-slot map `Mo(x) → coker dY`:
/// `m_x · Φ · T ≡ 𝟙 − (fixed contributions)  (mod D′ over C_k)`.
#[allow(clippy::too_many_arguments)]
fn unit_constraint_builder<'a>(
    m: &'a RModule,
    x: usize,
    state: &'a BuildState,
    block: &'a PointBlock,
    phi_o: &'a [Option<GroupHom>],
    unit: &'a [BigInt],
    mo_offsets: &'a [usize],
    c_k: PointSet,
) -> Box<dyn Fn(&IntMatrix) -> Vec<ExtraConstraint> + 'a> {
    Box::new(move |y: &IntMatrix| {
        match unit_constraint(m, x, state, block, Some(y), phi_o, unit, mo_offsets, c_k) {
            Some((left, right, rhs, modulus)) => vec![ExtraConstraint {
                left,
                right,
                rhs,
                modulus,
            }],
            None => vec![ExtraConstraint {
                // unsatisfiable marker: 0 ≡ 1 over the integers
                left: IntMatrix::zero(1, block.d_prime.rows().max(1)),
                right: IntMatrix::zero(block.d_prime.rows().max(1), 1),
                rhs: IntMatrix::from_rows(vec![vec![1]]),
                modulus: IntMatrix::zero(0, 1),
            }],
        }
    })
}

/// Assemble the data of the unit condition at the stage where point `x` is
/// added with connecting block `y` (`None` at maximal points). Returns
/// `(left, right, rhs, modulus)` for the unknown `Mo(x) → coker dY` matrix.
#[allow(clippy::too_many_arguments)]
fn unit_constraint(
    m: &RModule,
    x: usize,
    state: &BuildState,
    block: &PointBlock,
    y: Option<&IntMatrix>,
    phi_o: &[Option<GroupHom>],
    unit: &[BigInt],
    mo_offsets: &[usize],
    c_k: PointSet,
) -> Option<(IntMatrix, IntMatrix, IntMatrix, IntMatrix)> {
    let space = m.space();
    // simulate the extended state
    let mut labels = state.labels.clone();
    let mut regular = state.regular.clone();
    for k in 0..block.n_vertices {
        labels.push(x);
        regular.push(block.regular[k]);
    }
    let n = labels.len();
    let ck_verts: Vec<usize> = (0..n).filter(|&v| c_k.contains(labels[v])).collect();
    // D' over C_k of the extended assembly
    let mut dck_rows: Vec<Vec<BigInt>> = Vec::new();
    for (v, row) in &state.rows {
        if !c_k.contains(state.labels[*v]) {
            continue;
        }
        dck_rows.push(
            ck_verts
                .iter()
                .map(|&w| {
                    if w < state.n() {
                        row[w].clone()
                    } else {
                        BigInt::zero()
                    }
                })
                .collect(),
        );
    }
    if c_k.contains(x) {
        let boundary_cols = state.verts_over(space.open_boundary(PointSet::singleton(x)));
        let mut ri = 0usize;
        for k in 0..block.n_vertices {
            if !block.regular[k] {
                continue;
            }
            let row: Vec<BigInt> = ck_verts
                .iter()
                .map(|&w| {
                    if w >= state.n() {
                        block.d_prime[(ri, w - state.n())].clone()
                    } else if let Some(ci) = boundary_cols.iter().position(|&u| u == w) {
                        y.map_or_else(BigInt::zero, |ym| ym[(ri, ci)].clone())
                    } else {
                        BigInt::zero()
                    }
                })
                .collect();
            dck_rows.push(row);
            ri += 1;
        }
    }
    let modulus = IntMatrix::from_big_rows(dck_rows, ck_verts.len());

    // fixed contributions of already-processed points
    let mut rhs_row = vec![BigInt::one(); ck_verts.len()];
    for z in 0..space.n() {
        if z == x || phi_o[z].is_none() {
            continue;
        }
        let po = phi_o[z].as_ref().unwrap();
        let z_verts = state.verts_over(space.smallest_open(PointSet::singleton(z)));
        let comp = &unit[mo_offsets[z]..mo_offsets[z] + m.point(z).mo.ngens()];
        // image of the component in the C_k coordinates
        let img = po.apply(comp);
        for (i, &v) in z_verts.iter().enumerate() {
            if let Some(j) = ck_verts.iter().position(|&w| w == v) {
                rhs_row[j] -= &img[i];
            }
        }
    }
    let rhs = IntMatrix::from_big_rows(vec![rhs_row], ck_verts.len());

    // left: the unit component at x as a 1×ngens row
    let comp = &unit[mo_offsets[x]..mo_offsets[x] + m.point(x).mo.ngens()];
    let left = IntMatrix::from_big_rows(vec![comp.to_vec()], m.point(x).mo.ngens());
    // right: x̃-vertices of the extended assembly into C_k coordinates
    let open_x = space.smallest_open(PointSet::singleton(x));
    let xt_verts: Vec<usize> = (0..n).filter(|&v| open_x.contains(labels[v])).collect();
    let mut right = IntMatrix::zero(xt_verts.len(), ck_verts.len());
    for (i, &v) in xt_verts.iter().enumerate() {
        if let Some(j) = ck_verts.iter().position(|&w| w == v) {
            right[(i, j)] = BigInt::one();
        }
    }
    Some((left, right, rhs, modulus))
}

/// Direct unit check used at maximal points (no connecting block to search).
#[allow(clippy::too_many_arguments)]
fn unit_condition_holds(
    m: &RModule,
    x: usize,
    po: &GroupHom,
    state: &BuildState,
    block: &PointBlock,
    y: Option<&IntMatrix>,
    phi_o: &[Option<GroupHom>],
    unit: &[BigInt],
    mo_offsets: &[usize],
    c_k: PointSet,
) -> bool {
    let Some((left, right, rhs, modulus)) =
        unit_constraint(m, x, state, block, y, phi_o, unit, mo_offsets, c_k)
    else {
        return false;
    };
    let lhs = left.mul(po.matrix()).mul(&right);
    let diff: Vec<BigInt> = (0..lhs.cols())
        .map(|j| &lhs[(0, j)] - &rhs[(0, j)])
        .collect();
    crate::zlattice::in_lattice(&diff, &crate::zlattice::hermite_of(&modulus))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::finspace;
    use crate::fk::{compute_fk, unit_class};
    use crate::graphcore::Mult;

    fn opts() -> RealizeOptions {
        RealizeOptions::default()
    }

    #[test]
    fn one_point_cyclic() {
        // module (0, 0, Z/5): expect a 1-vertex graph with 6 loops
        let g = LabeledGraph::new(
            finspace::chain(1),
            vec![("v".into(), "1".into())],
            vec![("v".into(), "v".into(), Mult::Finite(6))],
        )
        .unwrap();
        let m = compute_fk(&g).unwrap();
        let cert = realize_module(&m, &opts()).unwrap();
        assert_eq!(cert.graph.vertex_count(), 1);
        assert_eq!(cert.graph.a(0, 0), Mult::Finite(6));
    }

    #[test]
    fn chain2_roundtrip() {
        let g = LabeledGraph::new(
            finspace::chain(2),
            vec![("a".into(), "1".into()), ("b".into(), "2".into())],
            vec![
                ("a".into(), "a".into(), Mult::Finite(4)),
                ("b".into(), "b".into(), Mult::Finite(3)),
                ("a".into(), "b".into(), Mult::Finite(1)),
            ],
        )
        .unwrap();
        let m = compute_fk(&g).unwrap();
        let cert = realize_module(&m, &opts()).unwrap();
        // certificate verified inside; sanity-check output predicates
        let report = cert.graph.structural_predicates().unwrap();
        assert!(report.purely_infinite_sufficient);
        assert!(report.is_cuntz_krieger);
        assert!(report.breaking_vertices.is_empty());
        assert!(cert.graph.condition_k());
        let fresh = compute_fk(&cert.graph).unwrap();
        assert!(rmod::verify_module_iso(&m, &fresh, &cert.iso));
    }

    #[test]
    fn rank_gap_unsupported() {
        let g = LabeledGraph::new(
            finspace::chain(1),
            vec![("v".into(), "1".into())],
            vec![("v".into(), "v".into(), Mult::Infinite)],
        )
        .unwrap();
        let m = compute_fk(&g).unwrap();
        assert!(matches!(
            realize_module(&m, &opts()),
            Err(RealizeError::Unsupported(_))
        ));
    }

    #[test]
    fn unital_one_point_generator_unit() {
        let g = LabeledGraph::new(
            finspace::chain(1),
            vec![("v".into(), "1".into())],
            vec![("v".into(), "v".into(), Mult::Finite(6))],
        )
        .unwrap();
        let pm = unit_class(&g).unwrap();
        let cert = realize_unital(&pm, &opts()).unwrap();
        assert_eq!(cert.unit_preserved, Some(true));
        assert_eq!(cert.graph.vertex_count(), 1);
    }

    #[test]
    fn unital_zero_unit_needs_bigger_graph() {
        // module (0, 0, Z/5) with unit 0: the 1-vertex graph cannot work
        let g = LabeledGraph::new(
            finspace::chain(1),
            vec![("v".into(), "1".into())],
            vec![("v".into(), "v".into(), Mult::Finite(6))],
        )
        .unwrap();
        let pm = unit_class(&g).unwrap();
        let zero = PointedRModule {
            module: pm.module.clone(),
            unit: vec![BigInt::zero()],
        };
        let cert = realize_unital(&zero, &opts()).unwrap();
        assert_eq!(cert.unit_preserved, Some(true));
        assert!(cert.graph.vertex_count() >= 2);
    }

    #[test]
    fn unital_singular_rank_gap() {
        let g = LabeledGraph::new(
            finspace::chain(1),
            vec![("v".into(), "1".into())],
            vec![("v".into(), "v".into(), Mult::Infinite)],
        )
        .unwrap();
        let pm = unit_class(&g).unwrap();
        let cert = realize_unital(&pm, &opts()).unwrap();
        assert_eq!(cert.unit_preserved, Some(true));
        let report = cert.graph.structural_predicates().unwrap();
        assert!(!report.is_cuntz_krieger);
        assert!(report.purely_infinite_sufficient);
    }
}
