//! Per-point building blocks: small nonnegative matrices with prescribed
//! kernel and cokernel, together with certified identifications.

use super::RealizeError;
use crate::zlattice::{cokernel, kernel, FgAbGroup, GroupHom, IntMatrix};
use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};

/// The block realizing one point: a vertex set, its regular subset, the
/// `D`-matrix restricted to regular rows, and isomorphisms from the target
/// groups onto the block's kernel and cokernel.
#[derive(Clone, Debug)]
pub struct PointBlock {
    pub point: usize,
    pub n_vertices: usize,
    /// Per vertex: regular (true) or singular (false). Singular vertices
    /// carry an infinite loop and contribute no row.
    pub regular: Vec<bool>,
    /// Regular rows × all columns, entries ≥ 0, diagonal entries ≥ 1.
    pub d_prime: IntMatrix,
    pub k1_rank: usize,
    /// `ℤ^{k1_rank} → ker d_prime` (the canonical form of the K₁ slot onto
    /// the Hermite kernel basis).
    pub iso_k1: GroupHom,
    /// `k0 → coker d_prime`, where `k0` is the prescribed new-part group.
    pub iso_rsi: GroupHom,
}

/// One summand of a block: how a single invariant factor, matched free
/// unit, or singular free unit is realized.
#[derive(Clone, Debug, PartialEq)]
enum Summand {
    /// `[d]`: one vertex, cokernel ℤ/d, no kernel.
    Cyclic { d: BigInt },
    /// `[[1, k], [0, d]]`: two vertices, cokernel ℤ/d generated by the
    /// second vertex class, the all-ones class landing on `(1-k)·gen`.
    CyclicShifted { d: BigInt, k: u64 },
    /// `[[1, a], [1, a]]`: two vertices, cokernel ℤ, kernel ℤ.
    FreePair { a: u64 },
    /// One singular vertex (infinite loop), cokernel ℤ, no kernel.
    Singular,
    /// `[[1, c]]` over (pad, singular): a regular pad vertex feeding into a
    /// singular vertex; cokernel ℤ generated by the singular class.
    SingularPadded { c: u64 },
    /// `[1]`: one vertex, trivial contribution.
    Pad,
}

impl Summand {
    fn n_vertices(&self) -> usize {
        match self {
            Summand::Cyclic { .. } | Summand::Singular | Summand::Pad => 1,
            Summand::CyclicShifted { .. } | Summand::FreePair { .. } | Summand::SingularPadded { .. } => 2,
        }
    }

    fn regular_flags(&self) -> Vec<bool> {
        match self {
            Summand::Cyclic { .. } | Summand::Pad => vec![true],
            Summand::CyclicShifted { .. } | Summand::FreePair { .. } => vec![true, true],
            Summand::Singular => vec![false],
            Summand::SingularPadded { .. } => vec![true, false],
        }
    }

    /// Rows of the block's `D′` part (regular rows only), width =
    /// `n_vertices`.
    fn d_rows(&self) -> Vec<Vec<BigInt>> {
        match self {
            Summand::Cyclic { d } => vec![vec![d.clone()]],
            Summand::CyclicShifted { d, k } => vec![
                vec![BigInt::one(), BigInt::from(*k)],
                vec![BigInt::zero(), d.clone()],
            ],
            Summand::FreePair { a } => vec![
                vec![BigInt::one(), BigInt::from(*a)],
                vec![BigInt::one(), BigInt::from(*a)],
            ],
            Summand::Singular => vec![],
            Summand::SingularPadded { c } => vec![vec![BigInt::one(), BigInt::from(*c)]],
            Summand::Pad => vec![vec![BigInt::one()]],
        }
    }

    /// Column (relative to the summand) whose class generates the intended
    /// cokernel summand, when there is one.
    fn generator_column(&self) -> Option<usize> {
        match self {
            Summand::Cyclic { .. } | Summand::Singular => Some(0),
            Summand::CyclicShifted { .. } | Summand::FreePair { .. } | Summand::SingularPadded { .. } => {
                Some(1)
            }
            Summand::Pad => None,
        }
    }

    fn has_kernel(&self) -> bool {
        matches!(self, Summand::FreePair { .. })
    }
}

fn assemble(point: usize, k0: &FgAbGroup, k1_rank: usize, summands: Vec<Summand>) -> PointBlock {
    let n: usize = summands.iter().map(Summand::n_vertices).sum();
    let mut regular = Vec::with_capacity(n);
    let mut rows: Vec<Vec<BigInt>> = Vec::new();
    let mut offsets = Vec::with_capacity(summands.len());
    let mut at = 0usize;
    for s in &summands {
        offsets.push(at);
        regular.extend(s.regular_flags());
        for r in s.d_rows() {
            let mut row = vec![BigInt::zero(); n];
            row[at..at + r.len()].clone_from_slice(&r);
            rows.push(row);
        }
        at += s.n_vertices();
    }
    let d_prime = IntMatrix::from_big_rows(rows, n);
    let (coker, _) = cokernel(&d_prime);
    let (ker, ker_incl) = kernel(&d_prime);
    assert_eq!(ker.ngens(), k1_rank, "block kernel rank mismatch");

    // canonical k0 generators onto designated vertex classes: torsion
    // factors in order, then matched free units, then singular units
    let canon = k0.canon_group();
    let torsion_count = k0.invariant_factors().len();
    let mut gen_columns = Vec::new();
    for (s, off) in summands.iter().zip(&offsets) {
        if let Some(rel) = s.generator_column() {
            gen_columns.push((s.clone(), off + rel));
        }
    }
    let mut canon_to_coker = IntMatrix::zero(canon.ngens(), n);
    let mut next_torsion = 0usize;
    let mut next_free = torsion_count;
    for (s, col) in &gen_columns {
        let row = match s {
            Summand::Cyclic { .. } | Summand::CyclicShifted { .. } => {
                let r = next_torsion;
                next_torsion += 1;
                r
            }
            Summand::FreePair { .. } | Summand::Singular | Summand::SingularPadded { .. } => {
                let r = next_free;
                next_free += 1;
                r
            }
            Summand::Pad => unreachable!(),
        };
        canon_to_coker[(row, *col)] = BigInt::one();
    }
    let canon_hom = GroupHom::new(canon.clone(), coker.clone(), canon_to_coker)
        .expect("block generator images respect the relations");
    let to_canon = GroupHom::new(k0.clone(), canon, k0.to_canon_matrix())
        .expect("canonical map is well defined");
    let iso_rsi = to_canon
        .compose(&canon_hom)
        .expect("canonical middle groups agree");
    debug_assert!(iso_rsi.is_isomorphism());

    // K1: canonical free generators onto the Hermite kernel basis, matched
    // by pivot position (ascending block offsets)
    let mut pair_offsets: Vec<usize> = Vec::new();
    for (s, off) in summands.iter().zip(&offsets) {
        if s.has_kernel() {
            pair_offsets.push(*off);
        }
    }
    let mut k1_matrix = IntMatrix::zero(k1_rank, k1_rank);
    for (j, off) in pair_offsets.iter().enumerate() {
        let basis_row = (0..ker.ngens())
            .find(|&i| {
                ker_incl
                    .matrix()
                    .row(i)
                    .iter()
                    .position(|v| !v.is_zero())
                    == Some(*off)
            })
            .expect("kernel basis row per free pair");
        k1_matrix[(j, basis_row)] = BigInt::one();
    }
    let iso_k1 = GroupHom::new(FgAbGroup::free(k1_rank), ker, k1_matrix)
        .expect("free groups have no relations");

    PointBlock {
        point,
        n_vertices: n,
        regular,
        d_prime,
        k1_rank,
        iso_k1,
        iso_rsi,
    }
}

fn base_summands(k0: &FgAbGroup, k1_rank: usize, allow_singular: bool) -> Vec<Summand> {
    let mut summands = Vec::new();
    for d in k0.invariant_factors() {
        summands.push(Summand::Cyclic { d: d.clone() });
    }
    for _ in 0..k1_rank {
        summands.push(Summand::FreePair { a: 1 });
    }
    let excess = k0.free_rank() - k1_rank;
    if allow_singular {
        for _ in 0..excess {
            summands.push(Summand::Singular);
        }
    }
    if summands.is_empty() {
        summands.push(Summand::Pad);
    }
    summands
}

/// Realize one point: a block whose `D′` has the prescribed kernel rank and
/// cokernel. Without `allow_singular` the free ranks must match exactly;
/// with it, excess cokernel rank is carried by singular vertices.
pub fn realize_point(
    k1_rank: usize,
    k0: &FgAbGroup,
    allow_singular: bool,
) -> Result<PointBlock, RealizeError> {
    check_ranks(k1_rank, k0, allow_singular)?;
    Ok(assemble(0, k0, k1_rank, base_summands(k0, k1_rank, allow_singular)))
}

fn check_ranks(k1_rank: usize, k0: &FgAbGroup, allow_singular: bool) -> Result<(), RealizeError> {
    if allow_singular {
        if k1_rank > k0.free_rank() {
            return Err(RealizeError::Precondition(format!(
                "K1 rank {} exceeds the cokernel rank {}",
                k1_rank,
                k0.free_rank()
            )));
        }
    } else if k1_rank != k0.free_rank() {
        return Err(RealizeError::Unsupported(format!(
            "K1 rank {} differs from the cokernel rank {}; only infinite graphs realize this",
            k1_rank,
            k0.free_rank()
        )));
    }
    Ok(())
}

/// Candidate blocks for a point, in a deterministic order: the canonical
/// block first, then variants that move the all-ones class around the
/// cokernel (needed to satisfy unit constraints). Bounded by `cap`.
pub fn point_block_candidates(
    point: usize,
    k1_rank: usize,
    k0: &FgAbGroup,
    allow_singular: bool,
    variants: bool,
    budget: u32,
    cap: usize,
) -> Result<Vec<PointBlock>, RealizeError> {
    check_ranks(k1_rank, k0, allow_singular)?;
    let base = base_summands(k0, k1_rank, allow_singular);
    let mut out = vec![assemble(point, k0, k1_rank, base.clone())];
    if !variants {
        return Ok(out);
    }
    // per-summand alternative lists
    let mut alternatives: Vec<Vec<Summand>> = Vec::new();
    for s in &base {
        let mut alts = vec![s.clone()];
        match s {
            Summand::Cyclic { d } => {
                let dmax = d.to_u64().unwrap_or(u64::MAX).min(budget as u64 + 1);
                for k in 0..dmax {
                    alts.push(Summand::CyclicShifted { d: d.clone(), k });
                }
            }
            Summand::FreePair { .. } => {
                for a in 2..=budget.max(2) as u64 {
                    alts.push(Summand::FreePair { a });
                }
            }
            Summand::Singular => {
                for c in 0..=budget as u64 {
                    alts.push(Summand::SingularPadded { c });
                }
            }
            _ => {}
        }
        alternatives.push(alts);
    }
    // enumerate variant tuples by total variant level, then lexicographically
    let dims: Vec<usize> = alternatives.iter().map(Vec::len).collect();
    let max_level: usize = dims.iter().map(|d| d - 1).sum();
    'levels: for level in 1..=max_level {
        let mut idx = vec![0usize; dims.len()];
        loop {
            let total: usize = idx.iter().sum();
            if total == level {
                let summands: Vec<Summand> = idx
                    .iter()
                    .zip(&alternatives)
                    .map(|(&i, alts)| alts[i].clone())
                    .collect();
                out.push(assemble(point, k0, k1_rank, summands));
                if out.len() >= cap {
                    break 'levels;
                }
            }
            // advance
            let mut i = 0;
            loop {
                if i == dims.len() {
                    continue 'levels;
                }
                idx[i] += 1;
                if idx[i] < dims[i] {
                    break;
                }
                idx[i] = 0;
                i += 1;
            }
        }
    }
    Ok(out)
}
