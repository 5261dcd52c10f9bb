//! Six-term exact sequences of block lower-triangular integer matrices.
//!
//! For `dY = [[dU, 0], [B, dC]]` the snake lemma applied to
//!
//! ```text
//! 0 → ℤ^{rows(dU)} → ℤ^{rows(dY)} → ℤ^{rows(dC)} → 0
//!        ↓dU             ↓dY             ↓dC
//! 0 → ℤ^{cols(dU)} → ℤ^{cols(dY)} → ℤ^{cols(dC)} → 0
//! ```
//!
//! yields the cyclic exact sequence
//!
//! ```text
//! coker dU → coker dY → coker dC →0→ ker dU → ker dY → ker dC → coker dU
//! ```
//!
//! with inclusion/projection-induced maps, the zero map in the exponential
//! slot, and the index map `v ↦ [v·B]`.

use super::diagram::{Diagram, DiagramArrow};
use super::group::FgAbGroup;
use super::hom::{cokernel, is_exact_at, kernel, GroupHom};
use super::matrix::IntMatrix;
use super::solve::solve_left;
use super::LatticeError;
use num_bigint::BigInt;

/// The six groups and six maps of a snake-lemma cycle. The exponential slot
/// `coker_c → ker_u` is always the zero map; construction fails if any of
/// the six exactness assertions does not hold.
#[derive(Clone, Debug)]
pub struct SixTermSequence {
    pub coker_u: FgAbGroup,
    pub coker_y: FgAbGroup,
    pub coker_c: FgAbGroup,
    pub ker_u: FgAbGroup,
    pub ker_y: FgAbGroup,
    pub ker_c: FgAbGroup,
    /// coker_u → coker_y, induced by coordinate inclusion.
    pub iota_coker: GroupHom,
    /// coker_y → coker_c, induced by coordinate projection.
    pub pi_coker: GroupHom,
    /// coker_c → ker_u, identically zero.
    pub exponential: GroupHom,
    /// ker_u → ker_y.
    pub iota_ker: GroupHom,
    /// ker_y → ker_c.
    pub pi_ker: GroupHom,
    /// ker_c → coker_u, the index map `v ↦ [v·B]`.
    pub index: GroupHom,
}

impl SixTermSequence {
    /// Check exactness at all six slots and that the exponential map is zero.
    pub fn self_check(&self) -> Result<(), LatticeError> {
        if !self.exponential.is_zero_map() {
            return Err(LatticeError::ExactnessSelfCheck {
                slot: "exponential",
            });
        }
        let checks: [(&'static str, &GroupHom, &GroupHom); 6] = [
            ("coker_y", &self.iota_coker, &self.pi_coker),
            ("coker_c", &self.pi_coker, &self.exponential),
            ("ker_u", &self.exponential, &self.iota_ker),
            ("ker_y", &self.iota_ker, &self.pi_ker),
            ("ker_c", &self.pi_ker, &self.index),
            ("coker_u", &self.index, &self.iota_coker),
        ];
        for (slot, f, g) in checks {
            let ok = is_exact_at(f, g).map_err(|_| LatticeError::ExactnessSelfCheck { slot })?;
            if !ok {
                return Err(LatticeError::ExactnessSelfCheck { slot });
            }
        }
        Ok(())
    }

    /// View the cycle as a diagram for isomorphism certification. Object
    /// order: coker_u, coker_y, coker_c, ker_u, ker_y, ker_c.
    pub fn as_diagram(&self) -> Diagram {
        Diagram {
            objects: vec![
                self.coker_u.clone(),
                self.coker_y.clone(),
                self.coker_c.clone(),
                self.ker_u.clone(),
                self.ker_y.clone(),
                self.ker_c.clone(),
            ],
            arrows: vec![
                DiagramArrow::new(0, 1, self.iota_coker.clone()),
                DiagramArrow::new(1, 2, self.pi_coker.clone()),
                DiagramArrow::new(2, 3, self.exponential.clone()),
                DiagramArrow::new(3, 4, self.iota_ker.clone()),
                DiagramArrow::new(4, 5, self.pi_ker.clone()),
                DiagramArrow::new(5, 0, self.index.clone()),
            ],
        }
    }
}

/// Assemble `[[dU, 0], [block, dC]]`.
pub fn assemble_lower_block(du: &IntMatrix, block: &IntMatrix, dc: &IntMatrix) -> IntMatrix {
    let top = du.hstack(&IntMatrix::zero(du.rows(), dc.cols()));
    let bottom = block.hstack(dc);
    top.vstack(&bottom)
}

/// Snake-lemma data for a block lower-triangular matrix.
///
/// `dy` must equal `[[du, 0], [block, dc]]`; `block` has the rows of `dc`
/// and the columns of `du` (quotient-side rows, ideal-side columns).
pub fn connecting_data(
    du: &IntMatrix,
    dy: &IntMatrix,
    dc: &IntMatrix,
    block: &IntMatrix,
) -> Result<SixTermSequence, LatticeError> {
    if block.rows() != dc.rows() || block.cols() != du.cols() {
        return Err(LatticeError::ShapeMismatch(format!(
            "connecting block is {}x{}, expected {}x{}",
            block.rows(),
            block.cols(),
            dc.rows(),
            du.cols()
        )));
    }
    let expected = assemble_lower_block(du, block, dc);
    if *dy != expected {
        return Err(LatticeError::ShapeMismatch(
            "dY does not match the block assembly [[dU,0],[block,dC]]".into(),
        ));
    }

    let (coker_u, _) = cokernel(du);
    let (coker_y, _) = cokernel(dy);
    let (coker_c, _) = cokernel(dc);
    let (ker_u, ker_u_incl) = kernel(du);
    let (ker_y, ker_y_incl) = kernel(dy);
    let (ker_c, ker_c_incl) = kernel(dc);

    let cu = du.cols();
    let cc = dc.cols();

    // coker_u → coker_y: coordinate inclusion [I | 0]
    let iota_coker = GroupHom::new(
        coker_u.clone(),
        coker_y.clone(),
        IntMatrix::identity(cu).hstack(&IntMatrix::zero(cu, cc)),
    )?;
    // coker_y → coker_c: coordinate projection [0; I]
    let pi_coker = GroupHom::new(
        coker_y.clone(),
        coker_c.clone(),
        IntMatrix::zero(cu, cc).vstack(&IntMatrix::identity(cc)),
    )?;
    let exponential = GroupHom::zero(&coker_c, &ker_u);

    // ker_u → ker_y: embed each basis vector as (v, 0) and express it in the
    // kernel basis of dY.
    let ky_basis = ker_y_incl.matrix();
    let mut rows = Vec::with_capacity(ker_u.ngens());
    for i in 0..ker_u.ngens() {
        let v = ker_u_incl.matrix().row(i);
        let mut embedded: Vec<BigInt> = v.to_vec();
        embedded.extend(std::iter::repeat(BigInt::from(0)).take(dc.rows()));
        let coords = solve_left(ky_basis, &embedded).ok_or(LatticeError::ExactnessSelfCheck {
            slot: "ker_u inclusion",
        })?;
        rows.push(coords);
    }
    let iota_ker = GroupHom::new(
        ker_u.clone(),
        ker_y.clone(),
        IntMatrix::from_big_rows(rows, ker_y.ngens()),
    )?;

    // ker_y → ker_c: project each basis vector to the quotient coordinates.
    let kc_basis = ker_c_incl.matrix();
    let mut rows = Vec::with_capacity(ker_y.ngens());
    for i in 0..ker_y.ngens() {
        let w = ky_basis.row(i);
        let w_c = &w[du.rows()..];
        let coords = solve_left(kc_basis, w_c).ok_or(LatticeError::ExactnessSelfCheck {
            slot: "ker_y projection",
        })?;
        rows.push(coords);
    }
    let pi_ker = GroupHom::new(
        ker_y.clone(),
        ker_c.clone(),
        IntMatrix::from_big_rows(rows, ker_c.ngens()),
    )?;

    // ker_c → coker_u: v ↦ [v·block]
    let index = GroupHom::new(
        ker_c.clone(),
        coker_u.clone(),
        ker_c_incl.matrix().mul(block),
    )?;

    let seq = SixTermSequence {
        coker_u,
        coker_y,
        coker_c,
        ker_u,
        ker_y,
        ker_c,
        iota_coker,
        pi_coker,
        exponential,
        iota_ker,
        pi_ker,
        index,
    };
    seq.self_check()?;
    Ok(seq)
}
