//! Generic diagrams of presented groups and certification of diagram
//! isomorphisms. The certifier is deliberately independent of every search
//! routine in the crate: it only multiplies matrices and checks congruences.

use super::group::FgAbGroup;
use super::hom::GroupHom;
use super::LatticeError;

#[derive(Clone, Debug)]
pub struct DiagramArrow {
    pub from: usize,
    pub to: usize,
    pub hom: GroupHom,
}

impl DiagramArrow {
    pub fn new(from: usize, to: usize, hom: GroupHom) -> Self {
        DiagramArrow { from, to, hom }
    }
}

/// A finite diagram: objects indexed by position, arrows between them.
#[derive(Clone, Debug)]
pub struct Diagram {
    pub objects: Vec<FgAbGroup>,
    pub arrows: Vec<DiagramArrow>,
}

/// Verify that `candidate` (one hom per object position, `a[i] → b[i]`) is
/// an isomorphism of diagrams: every component is invertible modulo
/// relations and every square against corresponding arrows commutes.
///
/// The two diagrams must have the same shape (object count and arrow
/// end-points, paired by index).
pub fn certify_iso(
    a: &Diagram,
    b: &Diagram,
    candidate: &[GroupHom],
) -> Result<bool, LatticeError> {
    if a.objects.len() != b.objects.len() || candidate.len() != a.objects.len() {
        return Err(LatticeError::ShapeMismatch(format!(
            "diagram has {} objects vs {}, candidate family has {}",
            a.objects.len(),
            b.objects.len(),
            candidate.len()
        )));
    }
    if a.arrows.len() != b.arrows.len() {
        return Err(LatticeError::ShapeMismatch(format!(
            "diagram has {} arrows vs {}",
            a.arrows.len(),
            b.arrows.len()
        )));
    }
    for (x, y) in a.arrows.iter().zip(&b.arrows) {
        if x.from != y.from || x.to != y.to {
            return Err(LatticeError::ShapeMismatch(
                "arrow endpoints differ between diagrams".into(),
            ));
        }
    }
    for (i, cand) in candidate.iter().enumerate() {
        if !cand.source().same_presentation(&a.objects[i])
            || !cand.target().same_presentation(&b.objects[i])
        {
            return Err(LatticeError::ShapeMismatch(format!(
                "candidate {i} does not connect object {i} of A to object {i} of B"
            )));
        }
        if !cand.is_isomorphism() {
            return Ok(false);
        }
    }
    for (x, y) in a.arrows.iter().zip(&b.arrows) {
        // square: candidate[from] ∘ b-arrow == a-arrow ∘ candidate[to]
        let lhs = candidate[x.from].compose(&y.hom)?;
        let rhs = x.hom.compose(&candidate[x.to])?;
        if !lhs.same_map(&rhs) {
            return Ok(false);
        }
    }
    Ok(true)
}
