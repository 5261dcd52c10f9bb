//! JSON file formats: spaces, graphs, modules, certificates, and verdicts.
//!
//! Modules are serialized in canonical coordinates: each group appears as
//! its invariant factors plus free rank, and every map matrix is written in
//! the corresponding canonical generators, reduced modulo the target
//! relations. Serialization is therefore deterministic and presentation
//! independent, which is what golden tests compare against.

use crate::finspace::{FiniteT0Space, SpaceFile};
use crate::fk::{PointEntry, PointedRModule, RModule};
use crate::graphcore::{GraphError, LabeledGraph, Mult};
use crate::rmod::{IsoTriple, ModuleIso};
use crate::zlattice::{FgAbGroup, GroupHom, IntMatrix};
use num_bigint::BigInt;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FileError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("parse error in {path}: {message}")]
    Parse { path: String, message: String },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("matrix entry exceeds the serializable range")]
    EntryRange,
}

/// Graph file: a space (inline or by path), labeled vertices, and
/// multiplicities as `(to, from, count-or-"inf")` triples.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GraphFile {
    pub space: SpaceRef,
    pub vertices: Vec<VertexEntry>,
    pub multiplicity: Vec<(String, String, Mult)>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpaceRef {
    Inline(SpaceFile),
    Path(String),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VertexEntry {
    pub id: String,
    pub label: String,
}

/// One group in canonical form.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct GroupDescriptor {
    pub invariant_factors: Vec<i64>,
    pub free_rank: usize,
}

impl GroupDescriptor {
    pub fn of(g: &FgAbGroup) -> Result<Self, FileError> {
        Ok(GroupDescriptor {
            invariant_factors: g
                .invariant_factors()
                .iter()
                .map(|d| d.to_i64().ok_or(FileError::EntryRange))
                .collect::<Result<_, _>>()?,
            free_rank: g.free_rank(),
        })
    }

    pub fn to_group(&self) -> FgAbGroup {
        let factors: Vec<BigInt> = self.invariant_factors.iter().map(|&d| BigInt::from(d)).collect();
        FgAbGroup::canonical(&factors, self.free_rank)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModulePointEntry {
    pub point: String,
    pub m1: GroupDescriptor,
    pub mdb: GroupDescriptor,
    pub mo: GroupDescriptor,
    /// Canonical-coordinate matrices, rows = source generators.
    pub delta: Vec<Vec<i64>>,
    pub iup: Vec<Vec<i64>>,
    pub icov: Vec<CoverMapEntry>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CoverMapEntry {
    pub from: String,
    pub matrix: Vec<Vec<i64>>,
}

/// Module file: per point the three canonical groups and all map matrices,
/// plus an optional unit in concatenated canonical `Mo` coordinates.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModuleFile {
    pub space: SpaceFile,
    pub points: Vec<ModulePointEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unit: Option<Vec<i64>>,
}

/// Certificate file: the isomorphism family from a module onto the
/// invariant of a realized graph, in the coordinates of both files.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CertificateFile {
    pub points: Vec<CertificatePointEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unit_preserved: Option<bool>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CertificatePointEntry {
    pub point: String,
    pub m1: Vec<Vec<i64>>,
    pub mdb: Vec<Vec<i64>>,
    pub mo: Vec<Vec<i64>>,
}

fn matrix_to_rows(m: &IntMatrix) -> Result<Vec<Vec<i64>>, FileError> {
    m.to_i64_rows().ok_or(FileError::EntryRange)
}

fn rows_to_matrix(rows: &[Vec<i64>], expected_rows: usize, expected_cols: usize) -> Result<IntMatrix, FileError> {
    if rows.len() != expected_rows || rows.iter().any(|r| r.len() != expected_cols) {
        return Err(FileError::Invalid(format!(
            "matrix must be {expected_rows}x{expected_cols}"
        )));
    }
    if rows.is_empty() {
        return Ok(IntMatrix::zero(0, expected_cols));
    }
    Ok(IntMatrix::from_rows(rows.to_vec()))
}

/// Rewrite a map in the canonical coordinates of its two end groups,
/// reduced modulo the target relations.
fn canon_matrix(h: &GroupHom) -> Result<Vec<Vec<i64>>, FileError> {
    let canon_target = h.target().canon_group();
    let m = h
        .source()
        .from_canon_matrix()
        .mul(h.matrix())
        .mul(&h.target().to_canon_matrix());
    let reduced: Vec<Vec<BigInt>> = (0..m.rows()).map(|i| canon_target.reduce(m.row(i))).collect();
    matrix_to_rows(&IntMatrix::from_big_rows(reduced, m.cols()))
}

/// Serialize a module (with optional unit) into its file form.
pub fn module_to_file(m: &RModule, unit: Option<&[BigInt]>) -> Result<ModuleFile, FileError> {
    let space = m.space();
    let mut points = Vec::with_capacity(space.n());
    for x in 0..space.n() {
        let e = m.point(x);
        let mut icov = Vec::new();
        for (y, h) in &e.icov {
            icov.push(CoverMapEntry {
                from: space.point_name(*y).to_string(),
                matrix: canon_matrix(h)?,
            });
        }
        points.push(ModulePointEntry {
            point: space.point_name(x).to_string(),
            m1: GroupDescriptor::of(&e.m1)?,
            mdb: GroupDescriptor::of(&e.mdb)?,
            mo: GroupDescriptor::of(&e.mo)?,
            delta: canon_matrix(&e.delta)?,
            iup: canon_matrix(&e.iup)?,
            icov,
        });
    }
    let unit = match unit {
        None => None,
        Some(u) => {
            // transport the unit into concatenated canonical Mo coordinates
            let mut out = Vec::new();
            let mut at = 0usize;
            for x in 0..space.n() {
                let mo = &m.point(x).mo;
                let comp = &u[at..at + mo.ngens()];
                let canon = mo.canon_group();
                let img = apply_matrix(comp, &mo.to_canon_matrix());
                let img = canon.reduce(&img);
                for v in img {
                    out.push(v.to_i64().ok_or(FileError::EntryRange)?);
                }
                at += mo.ngens();
            }
            Some(out)
        }
    };
    Ok(ModuleFile {
        space: space.to_file(),
        points,
        unit,
    })
}

fn apply_matrix(v: &[BigInt], m: &IntMatrix) -> Vec<BigInt> {
    (0..m.cols())
        .map(|j| (0..m.rows()).map(|i| &v[i] * &m[(i, j)]).sum())
        .collect()
}

/// Parse a module file into a module over canonical presentations (plus
/// the unit when present). Map well-definedness is validated.
pub fn module_from_file(file: &ModuleFile) -> Result<(RModule, Option<Vec<BigInt>>), FileError> {
    let space = FiniteT0Space::from_file(&file.space)
        .map_err(|e| FileError::Invalid(e.to_string()))?;
    if file.points.len() != space.n() {
        return Err(FileError::Invalid(format!(
            "module lists {} points, space has {}",
            file.points.len(),
            space.n()
        )));
    }
    let mut by_point: Vec<Option<&ModulePointEntry>> = vec![None; space.n()];
    for p in &file.points {
        let ix = space
            .point_index(&p.point)
            .map_err(|e| FileError::Invalid(e.to_string()))?;
        if by_point[ix].replace(p).is_some() {
            return Err(FileError::Invalid(format!("duplicate point {}", p.point)));
        }
    }
    let groups: Vec<(FgAbGroup, FgAbGroup, FgAbGroup)> = by_point
        .iter()
        .map(|p| {
            let p = p.unwrap();
            (p.m1.to_group(), p.mdb.to_group(), p.mo.to_group())
        })
        .collect();
    let mut entries = Vec::with_capacity(space.n());
    for x in 0..space.n() {
        let p = by_point[x].unwrap();
        let (m1, mdb, mo) = &groups[x];
        let delta = GroupHom::new(
            m1.clone(),
            mdb.clone(),
            rows_to_matrix(&p.delta, m1.ngens(), mdb.ngens())?,
        )
        .map_err(|e| FileError::Invalid(format!("delta at {}: {e}", p.point)))?;
        let iup = GroupHom::new(
            mdb.clone(),
            mo.clone(),
            rows_to_matrix(&p.iup, mdb.ngens(), mo.ngens())?,
        )
        .map_err(|e| FileError::Invalid(format!("iup at {}: {e}", p.point)))?;
        let mut icov = Vec::new();
        for c in &p.icov {
            let y = space
                .point_index(&c.from)
                .map_err(|e| FileError::Invalid(e.to_string()))?;
            let h = GroupHom::new(
                groups[y].2.clone(),
                mdb.clone(),
                rows_to_matrix(&c.matrix, groups[y].2.ngens(), mdb.ngens())?,
            )
            .map_err(|e| FileError::Invalid(format!("cover map at {}: {e}", p.point)))?;
            icov.push((y, h));
        }
        icov.sort_by_key(|(y, _)| *y);
        entries.push(PointEntry {
            m1: m1.clone(),
            mdb: mdb.clone(),
            mo: mo.clone(),
            delta,
            iup,
            icov,
        });
    }
    let module = RModule::new(space.clone(), entries)
        .map_err(|e| FileError::Invalid(e.to_string()))?;
    let unit = match &file.unit {
        None => None,
        Some(u) => {
            let total: usize = (0..space.n()).map(|x| module.point(x).mo.ngens()).sum();
            if u.len() != total {
                return Err(FileError::Invalid(format!(
                    "unit has {} coordinates, expected {total}",
                    u.len()
                )));
            }
            Some(u.iter().map(|&v| BigInt::from(v)).collect())
        }
    };
    Ok((module, unit))
}

pub fn certificate_to_file(
    space: &FiniteT0Space,
    iso: &ModuleIso,
    unit_preserved: Option<bool>,
) -> Result<CertificateFile, FileError> {
    let mut points = Vec::new();
    for (x, t) in iso.per_point.iter().enumerate() {
        points.push(CertificatePointEntry {
            point: space.point_name(x).to_string(),
            m1: matrix_to_rows(t.m1.matrix())?,
            mdb: matrix_to_rows(t.mdb.matrix())?,
            mo: matrix_to_rows(t.mo.matrix())?,
        });
    }
    Ok(CertificateFile {
        points,
        unit_preserved,
    })
}

/// Rebuild a certificate against a source module and the freshly computed
/// invariant of the target graph.
pub fn certificate_from_file(
    file: &CertificateFile,
    source: &RModule,
    target: &RModule,
) -> Result<ModuleIso, FileError> {
    let space = source.space();
    if file.points.len() != space.n() {
        return Err(FileError::Invalid("certificate point count mismatch".into()));
    }
    let mut per_point = Vec::with_capacity(space.n());
    for x in 0..space.n() {
        let entry = file
            .points
            .iter()
            .find(|p| p.point == space.point_name(x))
            .ok_or_else(|| FileError::Invalid(format!("certificate misses point {}", space.point_name(x))))?;
        let se = source.point(x);
        let te = target.point(x);
        let mk = |rows: &[Vec<i64>], s: &FgAbGroup, t: &FgAbGroup, name: &str| {
            GroupHom::new(s.clone(), t.clone(), rows_to_matrix(rows, s.ngens(), t.ngens())?)
                .map_err(|e| FileError::Invalid(format!("certificate {name} at {}: {e}", entry.point)))
        };
        per_point.push(IsoTriple {
            m1: mk(&entry.m1, &se.m1, &te.m1, "m1")?,
            mdb: mk(&entry.mdb, &se.mdb, &te.mdb, "mdb")?,
            mo: mk(&entry.mo, &se.mo, &te.mo, "mo")?,
        });
    }
    Ok(ModuleIso { per_point })
}

pub fn load_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, FileError> {
    let text = std::fs::read_to_string(path).map_err(|e| FileError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    serde_json::from_str(&text).map_err(|e| FileError::Parse {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

pub fn save_json<T: Serialize>(path: &Path, value: &T) -> Result<(), FileError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| FileError::Parse {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    std::fs::write(path, text + "\n").map_err(|e| FileError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

/// Load a graph file, resolving a space given inline, by path (relative to
/// the graph file), or by explicit override.
pub fn load_graph(
    path: &Path,
    space_override: Option<&Path>,
) -> Result<LabeledGraph, FileError> {
    let file: GraphFile = load_json(path)?;
    let space = match (space_override, &file.space) {
        (Some(p), _) => {
            let sf: SpaceFile = load_json(p)?;
            FiniteT0Space::from_file(&sf).map_err(|e| FileError::Invalid(e.to_string()))?
        }
        (None, SpaceRef::Inline(sf)) => {
            FiniteT0Space::from_file(sf).map_err(|e| FileError::Invalid(e.to_string()))?
        }
        (None, SpaceRef::Path(rel)) => {
            let base = path.parent().unwrap_or_else(|| Path::new("."));
            let sf: SpaceFile = load_json(&base.join(rel))?;
            FiniteT0Space::from_file(&sf).map_err(|e| FileError::Invalid(e.to_string()))?
        }
    };
    let vertices = file
        .vertices
        .iter()
        .map(|v| (v.id.clone(), v.label.clone()))
        .collect();
    Ok(LabeledGraph::new(space, vertices, file.multiplicity)?)
}

pub fn graph_to_file(g: &LabeledGraph) -> GraphFile {
    let mut multiplicity = Vec::new();
    for v in 0..g.vertex_count() {
        for w in 0..g.vertex_count() {
            let m = g.a(v, w);
            if !m.is_zero() {
                multiplicity.push((g.vertex_id(v).to_string(), g.vertex_id(w).to_string(), m));
            }
        }
    }
    GraphFile {
        space: SpaceRef::Inline(g.space().to_file()),
        vertices: (0..g.vertex_count())
            .map(|v| VertexEntry {
                id: g.vertex_id(v).to_string(),
                label: g.space().point_name(g.label(v)).to_string(),
            })
            .collect(),
        multiplicity,
    }
}

/// Classifier verdict file.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VerdictFile {
    pub verdict: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<CertificateFile>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub refuting_invariant: Option<String>,
}

/// A pointed module in file form (module plus unit in canonical
/// coordinates of the module's own presentation).
pub fn pointed_to_file(p: &PointedRModule) -> Result<ModuleFile, FileError> {
    module_to_file(&p.module, Some(&p.unit))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::finspace;
    use crate::fk::{compute_fk, unit_class};

    fn sample_graph() -> LabeledGraph {
        LabeledGraph::new(
            finspace::chain(2),
            vec![("a".into(), "1".into()), ("b".into(), "2".into())],
            vec![
                ("a".into(), "a".into(), Mult::Finite(4)),
                ("b".into(), "b".into(), Mult::Finite(3)),
                ("a".into(), "b".into(), Mult::Finite(1)),
            ],
        )
        .unwrap()
    }

    #[test]
    fn graph_file_roundtrip() {
        let g = sample_graph();
        let file = graph_to_file(&g);
        let text = serde_json::to_string(&file).unwrap();
        let parsed: GraphFile = serde_json::from_str(&text).unwrap();
        let SpaceRef::Inline(sf) = &parsed.space else {
            panic!("inline space expected")
        };
        let space = FiniteT0Space::from_file(sf).unwrap();
        let g2 = LabeledGraph::new(
            space,
            parsed.vertices.iter().map(|v| (v.id.clone(), v.label.clone())).collect(),
            parsed.multiplicity.clone(),
        )
        .unwrap();
        assert_eq!(g, g2);
    }

    #[test]
    fn module_file_roundtrip_preserves_invariants() {
        let g = sample_graph();
        let pm = unit_class(&g).unwrap();
        let file = pointed_to_file(&pm).unwrap();
        let (parsed, unit) = module_from_file(&file).unwrap();
        assert!(unit.is_some());
        for x in 0..parsed.space().n() {
            assert!(parsed.point(x).mo.isomorphic(&pm.module.point(x).mo));
            assert!(parsed.point(x).m1.isomorphic(&pm.module.point(x).m1));
        }
        // the parsed module is still exact
        assert!(crate::rmod::verify_relations(&parsed));
        assert!(crate::rmod::is_exact(&parsed));
        // serialization is deterministic
        let file2 = pointed_to_file(&pm).unwrap();
        assert_eq!(
            serde_json::to_string(&file).unwrap(),
            serde_json::to_string(&file2).unwrap()
        );
    }

    #[test]
    fn module_file_golden_one_vertex() {
        let g = LabeledGraph::new(
            finspace::chain(1),
            vec![("v".into(), "1".into())],
            vec![("v".into(), "v".into(), Mult::Finite(4))],
        )
        .unwrap();
        let m = compute_fk(&g).unwrap();
        let file = module_to_file(&m, None).unwrap();
        assert_eq!(file.points[0].mo.invariant_factors, vec![3]);
        assert_eq!(file.points[0].mo.free_rank, 0);
        assert_eq!(file.points[0].m1.free_rank, 0);
    }

    #[test]
    fn infinite_multiplicity_serde() {
        let m: Mult = serde_json::from_str("\"inf\"").unwrap();
        assert!(m.is_infinite());
        let m: Mult = serde_json::from_str("3").unwrap();
        assert_eq!(m, Mult::Finite(3));
        assert!(serde_json::from_str::<Mult>("\"lots\"").is_err());
    }
}
