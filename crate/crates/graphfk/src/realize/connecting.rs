//! Bounded search for a connecting block.
//!
//! Given matrices `A` (ideal side) and `B` (quotient side) and a target
//! six-term exact sequence with fixed identifications of the four end
//! groups, find a nonnegative block `Y` (rows of `B`, columns of `A`) such
//! that the snake data of `[[A,0],[Y,B]]` is isomorphic to the target by an
//! isomorphism extending the given ends. The searched `Y` is constrained
//! below by a floor matrix and above by the entry budget.
//!
//! Soundness is carried entirely by the final certificate: every returned
//! block is re-verified by the independent diagram certifier, so the search
//! itself needs no completeness argument. Candidates are scanned in a fixed
//! order, so results are deterministic for a given budget.

use super::{ConnectLimits, RealizeError};
use crate::rmod::affine_points;
use crate::zlattice::{
    assemble_lower_block, certify_iso, connecting_data, first_coset_point_in_box, hermite_of,
    in_lattice, kernel_basis, reduce_mod_hnf, solve_sandwich_system, FgAbGroup, GroupHom,
    IntMatrix, Sandwich, SixTermSequence,
};
use num_bigint::BigInt;
use std::collections::BTreeSet;

/// The target sequence with identifications of the end groups.
pub struct ConnectingTarget {
    pub seq: SixTermSequence,
    /// `coker A → seq.coker_u`
    pub coker_a_iso: GroupHom,
    /// `ker A → seq.ker_u`
    pub ker_a_iso: GroupHom,
    /// `coker B → seq.coker_c`
    pub coker_b_iso: GroupHom,
    /// `ker B → seq.ker_c`
    pub ker_b_iso: GroupHom,
}

/// A successful connecting search.
pub struct Connecting {
    pub y: IntMatrix,
    /// `seq.coker_y-side group → coker [[A,0],[Y,B]]` — the middle
    /// identification in the "module to model" direction.
    pub phi_middle: GroupHom,
    /// Inverse of `phi_middle`.
    pub middle_coker_iso: GroupHom,
    /// `ker [[A,0],[Y,B]] → seq.ker_y`.
    pub middle_ker_iso: GroupHom,
}

/// Additional linear conditions imposed on the unknown middle map
/// `seq.coker_y → coker dY` (for example a unit constraint); they may
/// depend on the chosen `Y`.
pub struct ExtraConstraint {
    pub left: IntMatrix,
    pub right: IntMatrix,
    pub rhs: IntMatrix,
    pub modulus: IntMatrix,
}

/// Closure that materializes extra middle-map constraints for a given `Y`.
pub type ExtraBuilder<'a> = &'a dyn Fn(&IntMatrix) -> Vec<ExtraConstraint>;



pub fn find_connecting(
    a: &IntMatrix,
    b: &IntMatrix,
    target: &ConnectingTarget,
    floor: &IntMatrix,
    budget: u32,
    limits: &ConnectLimits,
    extra: Option<ExtraBuilder<'_>>,
) -> Result<Connecting, RealizeError> {
    let (coker_a, _) = crate::zlattice::cokernel(a);
    let (coker_b, _) = crate::zlattice::cokernel(b);
    let (ker_a, _) = crate::zlattice::kernel(a);
    let (ker_b, _) = crate::zlattice::kernel(b);
    for (name, iso, src, dst) in [
        ("coker A", &target.coker_a_iso, &coker_a, &target.seq.coker_u),
        ("ker A", &target.ker_a_iso, &ker_a, &target.seq.ker_u),
        ("coker B", &target.coker_b_iso, &coker_b, &target.seq.coker_c),
        ("ker B", &target.ker_b_iso, &ker_b, &target.seq.ker_c),
    ] {
        if !iso.source().same_presentation(src)
            || !iso.target().same_presentation(dst)
            || !iso.is_isomorphism()
        {
            return Err(RealizeError::Internal(format!(
                "end identification for {name} is not a matching isomorphism"
            )));
        }
    }
    if floor.rows() != b.rows() || floor.cols() != a.cols() {
        return Err(RealizeError::Internal("floor shape mismatch".into()));
    }

    let br = b.rows();
    let ac = a.cols();
    let a_hnf = hermite_of(a);

    // Index condition: the classes [row_i(K_B) · Y] in coker A are forced by
    // the target's index map pulled through the end identifications.
    let kb = kernel_basis(b);
    let inv_a = target
        .coker_a_iso
        .invert()
        .ok_or_else(|| RealizeError::Internal("coker A identification not invertible".into()))?;
    let idx_req = target
        .ker_b_iso
        .compose(&target.seq.index)
        .and_then(|h| h.compose(&inv_a))
        .map_err(|e| RealizeError::Internal(e.to_string()))?;
    let c_mat = idx_req.matrix().clone();

    let ident_ac = IntMatrix::identity(ac);
    let systems = [Sandwich {
        left: &kb,
        right: &ident_ac,
        rhs: &c_mat,
        modulus: a,
    }];
    let Some((y_particular, y_homs)) = solve_sandwich_system(br, ac, &systems) else {
        return Err(RealizeError::BudgetExhausted {
            point: String::new(),
            detail: "the index condition has no integer solution".into(),
        });
    };
    // drop homogeneous directions that only re-mix rows of A (they do not
    // change any row class)
    let class_homs: Vec<IntMatrix> = y_homs
        .into_iter()
        .filter(|h| (0..h.rows()).any(|i| !in_lattice(h.row(i), &a_hnf)))
        .collect();
    let y_reduced = reduce_rows(&y_particular, &a_hnf);

    // enumerate Y row-class candidates; coefficients over the torsion
    // exponent of coker A when finite
    let mut complete = true;
    let class_reprs = affine_points(
        &coker_a,
        &y_reduced,
        &class_homs,
        budget,
        limits.raw_points,
        &mut complete,
    );

    let g2 = &target.seq.coker_y;
    let lo_rows: Vec<Vec<BigInt>> = (0..br).map(|i| floor.row_vec(i)).collect();
    let hi_val = BigInt::from(budget);

    let mut seen = BTreeSet::new();
    let mut classes_tried = 0usize;
    for cand in class_reprs {
        let reduced = reduce_rows(&cand, &a_hnf);
        let key: Vec<Vec<BigInt>> = (0..br).map(|i| reduced.row_vec(i)).collect();
        if !seen.insert(key) {
            continue;
        }
        classes_tried += 1;
        if classes_tried > limits.class_candidates {
            break;
        }
        // invariant prefilter: the middle cokernel must be abstractly
        // isomorphic to the target middle
        let dy_repr = assemble_lower_block(a, &reduced, b);
        let coker_probe = FgAbGroup::from_relations(ac + b.cols(), dy_repr);
        if !coker_probe.isomorphic(g2) {
            continue;
        }
        // box feasibility: lift each row class into [floor, budget]
        let mut rows = Vec::with_capacity(br);
        let mut feasible = true;
        for i in 0..br {
            let mut nodes = limits.box_nodes;
            let hi: Vec<BigInt> = vec![hi_val.clone(); ac];
            match first_coset_point_in_box(reduced.row(i), &a_hnf, &lo_rows[i], &hi, &mut nodes)
            {
                Some(r) => rows.push(r),
                None => {
                    feasible = false;
                    break;
                }
            }
        }
        if !feasible {
            continue;
        }
        let y_final = IntMatrix::from_big_rows(rows, ac);
        if let Some(found) = try_candidate(a, b, target, &y_final, budget, limits, extra)? {
            return Ok(found);
        }
    }
    Err(RealizeError::BudgetExhausted {
        point: String::new(),
        detail: format!(
            "no connecting block found within entry budget {budget} ({classes_tried} classes tried)"
        ),
    })
}

fn reduce_rows(m: &IntMatrix, hnf: &IntMatrix) -> IntMatrix {
    let rows: Vec<Vec<BigInt>> = (0..m.rows()).map(|i| reduce_mod_hnf(m.row(i), hnf)).collect();
    IntMatrix::from_big_rows(rows, m.cols())
}

/// Attempt one concrete `Y`: solve for the middle cokernel map (with any
/// extra constraints), then the middle kernel map, and certify the full
/// complex isomorphism.
fn try_candidate(
    a: &IntMatrix,
    b: &IntMatrix,
    target: &ConnectingTarget,
    y: &IntMatrix,
    budget: u32,
    limits: &ConnectLimits,
    extra: Option<ExtraBuilder<'_>>,
) -> Result<Option<Connecting>, RealizeError> {
    let ac = a.cols();
    let bc = b.cols();
    let dy = assemble_lower_block(a, y, b);
    let coker_m = FgAbGroup::from_relations(ac + bc, dy.clone());
    let g2 = &target.seq.coker_y;

    // unknown X: g2 → coker_m
    // square with the ideal inclusion: ε_target · X ≡ α_A · [I|0]
    let incl = IntMatrix::identity(ac).hstack(&IntMatrix::zero(ac, bc));
    let iota_rhs = target.coker_a_iso.matrix().mul(&incl);
    // square with the quotient projection: X · [0;I] ≡ γ_target · α_B
    let proj = IntMatrix::zero(ac, bc).vstack(&IntMatrix::identity(bc));
    let pi_rhs = target
        .seq
        .pi_coker
        .matrix()
        .mul(target.coker_b_iso.matrix());
    let welldef_rhs = IntMatrix::zero(g2.relations().rows(), coker_m.ngens());
    let ident_g2 = IntMatrix::identity(g2.ngens());
    let ident_m = IntMatrix::identity(coker_m.ngens());
    let iota_left = target.seq.iota_coker.matrix().clone();
    let mut systems = vec![
        Sandwich {
            left: g2.relations(),
            right: &ident_m,
            rhs: &welldef_rhs,
            modulus: coker_m.relations(),
        },
        Sandwich {
            left: &iota_left,
            right: &ident_m,
            rhs: &iota_rhs,
            modulus: coker_m.relations(),
        },
        Sandwich {
            left: &ident_g2,
            right: &proj,
            rhs: &pi_rhs,
            modulus: b,
        },
    ];
    let extras: Vec<ExtraConstraint> = match extra {
        Some(f) => f(y),
        None => Vec::new(),
    };
    for e in &extras {
        systems.push(Sandwich {
            left: &e.left,
            right: &e.right,
            rhs: &e.rhs,
            modulus: &e.modulus,
        });
    }
    let Some((particular, homs)) =
        solve_sandwich_system(g2.ngens(), coker_m.ngens(), &systems)
    else {
        return Ok(None);
    };
    let mut complete = true;
    let cands = affine_points(
        &coker_m,
        &particular,
        &homs,
        budget,
        limits.raw_points,
        &mut complete,
    );
    let mut seen = BTreeSet::new();
    let mut iso_count = 0usize;
    for mat in cands {
        let key: Vec<Vec<BigInt>> = (0..mat.rows())
            .map(|i| coker_m.reduce(mat.row(i)))
            .collect();
        if !seen.insert(key) {
            continue;
        }
        let Ok(phi) = GroupHom::new(g2.clone(), coker_m.clone(), mat) else {
            continue;
        };
        if !phi.is_isomorphism() {
            continue;
        }
        iso_count += 1;
        if iso_count > limits.iso_candidates {
            break;
        }
        if let Some(found) = finish_candidate(a, b, target, y, &dy, &phi, budget, limits)? {
            return Ok(Some(found));
        }
    }
    Ok(None)
}

fn finish_candidate(
    a: &IntMatrix,
    b: &IntMatrix,
    target: &ConnectingTarget,
    y: &IntMatrix,
    dy: &IntMatrix,
    phi_middle: &GroupHom,
    budget: u32,
    limits: &ConnectLimits,
) -> Result<Option<Connecting>, RealizeError> {
    let model = match connecting_data(a, dy, b, y) {
        Ok(m) => m,
        Err(_) => return Ok(None),
    };
    let alpha2 = phi_middle
        .invert()
        .ok_or_else(|| RealizeError::Internal("middle map lost invertibility".into()))?;
    // middle kernel map β: ker dY → seq.ker_y, constrained by both kernel
    // squares
    let f2 = &target.seq.ker_y;
    let km = &model.ker_y;
    let iota_rhs = target
        .ker_a_iso
        .matrix()
        .mul(target.seq.iota_ker.matrix());
    let pi_rhs = model.pi_ker.matrix().mul(target.ker_b_iso.matrix());
    let welldef_rhs = IntMatrix::zero(km.relations().rows(), f2.ngens());
    let systems = [
        Sandwich {
            left: km.relations(),
            right: &IntMatrix::identity(f2.ngens()),
            rhs: &welldef_rhs,
            modulus: f2.relations(),
        },
        Sandwich {
            left: model.iota_ker.matrix(),
            right: &IntMatrix::identity(f2.ngens()),
            rhs: &iota_rhs,
            modulus: f2.relations(),
        },
        Sandwich {
            left: &IntMatrix::identity(km.ngens()),
            right: target.seq.pi_ker.matrix(),
            rhs: &pi_rhs,
            modulus: target.seq.ker_c.relations(),
        },
    ];
    let Some((particular, homs)) = solve_sandwich_system(km.ngens(), f2.ngens(), &systems)
    else {
        return Ok(None);
    };
    let mut complete = true;
    let cands = affine_points(f2, &particular, &homs, budget, limits.raw_points, &mut complete);
    let mut seen = BTreeSet::new();
    for mat in cands {
        let key: Vec<Vec<BigInt>> = (0..mat.rows()).map(|i| f2.reduce(mat.row(i))).collect();
        if !seen.insert(key) {
            continue;
        }
        let Ok(beta2) = GroupHom::new(km.clone(), f2.clone(), mat) else {
            continue;
        };
        if !beta2.is_isomorphism() {
            continue;
        }
        let family = vec![
            target.coker_a_iso.clone(),
            alpha2.clone(),
            target.coker_b_iso.clone(),
            target.ker_a_iso.clone(),
            beta2.clone(),
            target.ker_b_iso.clone(),
        ];
        if certify_iso(&model.as_diagram(), &target.seq.as_diagram(), &family)
            .map_err(|e| RealizeError::Internal(e.to_string()))?
        {
            return Ok(Some(Connecting {
                y: y.clone(),
                phi_middle: phi_middle.clone(),
                middle_coker_iso: alpha2,
                middle_ker_iso: beta2,
            }));
        }
    }
    Ok(None)
}


