//! Seeded random generators for spaces, graphs, and modules, used by the
//! roundtrip harness and the test suites. All sampling is deterministic
//! given the seed.

use crate::finspace::FiniteT0Space;
use crate::fk::{compute_fk_opts, FkOptions, RModule};
use crate::graphcore::{LabeledGraph, Mult};
use num_bigint::BigInt;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random poset on at most `max_points` points (at least one). Cover
/// relations are the transitive reduction of a random order compatible
/// with a random linear ranking.
pub fn random_space(rng: &mut ChaCha8Rng, max_points: usize) -> FiniteT0Space {
    let n = rng.gen_range(1..=max_points);
    let points: Vec<String> = (0..n).map(|i| format!("p{i}")).collect();
    // random strict order: lower rank < higher rank with probability 0.4
    let mut lt = vec![vec![false; n]; n];
    for hi in 0..n {
        for lo in 0..hi {
            if rng.gen_bool(0.4) {
                lt[lo][hi] = true;
            }
        }
    }
    // transitive closure
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if lt[i][k] && lt[k][j] {
                    lt[i][j] = true;
                }
            }
        }
    }
    // transitive reduction gives the cover pairs (y, x) with x < y
    let mut covers = Vec::new();
    for x in 0..n {
        for y in 0..n {
            if !lt[x][y] {
                continue;
            }
            let redundant = (0..n).any(|z| lt[x][z] && lt[z][y]);
            if !redundant {
                covers.push((points[y].clone(), points[x].clone()));
            }
        }
    }
    FiniteT0Space::new(points, covers).expect("sampled cover data is valid")
}

/// Shape of the sampled graphs.
#[derive(Clone, Copy, Debug)]
pub struct GraphConfig {
    /// Largest edge multiplicity.
    pub max_mult: u64,
    /// Most vertices per point.
    pub max_verts_per_point: usize,
    /// Cap on the total vertex count.
    pub max_total_verts: usize,
    /// Probability that a point hosts one singular (infinite-loop) vertex.
    pub singular_prob: f64,
}

impl Default for GraphConfig {
    fn default() -> Self {
        GraphConfig {
            max_mult: 4,
            max_verts_per_point: 2,
            max_total_verts: 6,
            singular_prob: 0.0,
        }
    }
}

/// A random valid labeled graph over the space: every point hosts at least
/// one vertex, every vertex supports at least two loops, every required
/// cross block is nonzero (so the sufficient tightness criterion holds).
pub fn random_graph(
    rng: &mut ChaCha8Rng,
    space: &FiniteT0Space,
    cfg: &GraphConfig,
) -> LabeledGraph {
    let n = space.n();
    let spare = cfg.max_total_verts.saturating_sub(n);
    let mut counts = vec![1usize; n];
    let mut extra_budget = spare;
    for c in counts.iter_mut() {
        if extra_budget == 0 {
            break;
        }
        let extra = rng.gen_range(0..=(cfg.max_verts_per_point - 1).min(extra_budget));
        *c += extra;
        extra_budget -= extra;
    }
    let mut verts = Vec::new();
    let mut per_point: Vec<Vec<String>> = vec![Vec::new(); n];
    for (p, &c) in counts.iter().enumerate() {
        for k in 0..c {
            let id = format!("{}x{}", space.point_name(p), k);
            per_point[p].push(id.clone());
            verts.push((id, space.point_name(p).to_string()));
        }
    }
    let mut mults: Vec<(String, String, Mult)> = Vec::new();
    let mut singular: Vec<bool> = Vec::new();
    for p in 0..n {
        let make_singular = cfg.singular_prob > 0.0 && rng.gen_bool(cfg.singular_prob);
        for (k, id) in per_point[p].iter().enumerate() {
            // first vertex of a singular point carries the infinite loop
            if make_singular && k == 0 {
                mults.push((id.clone(), id.clone(), Mult::Infinite));
                singular.push(true);
            } else {
                let loops = rng.gen_range(2..=cfg.max_mult.max(2));
                mults.push((id.clone(), id.clone(), Mult::Finite(loops)));
                singular.push(false);
            }
        }
        // within-point off-diagonal edges
        for to in &per_point[p] {
            for from in &per_point[p] {
                if to == from {
                    continue;
                }
                if rng.gen_bool(0.35) {
                    let c = rng.gen_range(1..=cfg.max_mult.max(1));
                    mults.push((to.clone(), from.clone(), Mult::Finite(c)));
                }
            }
        }
    }
    // cross blocks: for every pair y < z at least one edge from the z block
    // into the y block
    for y in 0..n {
        for z in 0..n {
            if !space.lt(y, z) {
                continue;
            }
            let mut any = false;
            for to in &per_point[y] {
                for from in &per_point[z] {
                    if rng.gen_bool(0.4) {
                        let c = rng.gen_range(1..=cfg.max_mult.max(1));
                        mults.push((to.clone(), from.clone(), Mult::Finite(c)));
                        any = true;
                    }
                }
            }
            if !any {
                let to = &per_point[y][0];
                let from = &per_point[z][rng.gen_range(0..per_point[z].len())];
                let c = rng.gen_range(1..=cfg.max_mult.max(1));
                mults.push((to.clone(), from.clone(), Mult::Finite(c)));
            }
        }
    }
    LabeledGraph::new(space.clone(), verts, mults).expect("sampled graph data is valid")
}

/// Filter for the roundtrip corpora: every slot's torsion factors at most
/// `max_factor` and free rank at most `max_rank`.
pub fn module_is_small(m: &RModule, max_factor: i64, max_rank: usize) -> bool {
    (0..m.space().n()).all(|x| {
        let e = m.point(x);
        [&e.m1, &e.mdb, &e.mo].into_iter().all(|g| {
            g.free_rank() <= max_rank
                && g.invariant_factors()
                    .iter()
                    .all(|d| *d <= BigInt::from(max_factor))
        })
    })
}

/// Sample a random graph whose invariant passes [`module_is_small`],
/// retrying with fresh draws. Returns the graph and its module.
pub fn random_small_module_graph(
    rng: &mut ChaCha8Rng,
    space: &FiniteT0Space,
    cfg: &GraphConfig,
    max_factor: i64,
    max_rank: usize,
    max_tries: usize,
) -> Option<(LabeledGraph, RModule)> {
    for _ in 0..max_tries {
        let g = random_graph(rng, space, cfg);
        let m = match compute_fk_opts(&g, FkOptions { self_check: false }) {
            Ok(m) => m,
            Err(_) => continue,
        };
        if module_is_small(&m, max_factor, max_rank) {
            return Some((g, m));
        }
    }
    None
}

/// A vertex-permuted copy: same abstract graph, vertices shuffled before
/// the canonical re-sort, so blocks are presented in a permuted basis.
pub fn permuted_copy(rng: &mut ChaCha8Rng, g: &LabeledGraph) -> LabeledGraph {
    let n = g.vertex_count();
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        order.swap(i, j);
    }
    let verts: Vec<(String, String)> = order
        .iter()
        .map(|&v| {
            (
                g.vertex_id(v).to_string(),
                g.space().point_name(g.label(v)).to_string(),
            )
        })
        .collect();
    let mut mults = Vec::new();
    for v in 0..n {
        for w in 0..n {
            let m = g.a(v, w);
            if !m.is_zero() {
                mults.push((g.vertex_id(v).to_string(), g.vertex_id(w).to_string(), m));
            }
        }
    }
    LabeledGraph::new(g.space().clone(), verts, mults).expect("copy of a valid graph")
}

/// Bump one diagonal entry so that some slot invariant changes; retries
/// until the invariants genuinely differ.
pub fn perturbed_copy(rng: &mut ChaCha8Rng, g: &LabeledGraph) -> Option<LabeledGraph> {
    let m = compute_fk_opts(g, FkOptions { self_check: false }).ok()?;
    for _ in 0..40 {
        let v = rng.gen_range(0..g.vertex_count());
        let bump = rng.gen_range(1..=2u64);
        let mut mults = Vec::new();
        for a in 0..g.vertex_count() {
            for b in 0..g.vertex_count() {
                let mut c = g.a(a, b);
                if a == v && b == v {
                    c = match c {
                        Mult::Finite(k) => Mult::Finite(k + bump),
                        Mult::Infinite => Mult::Infinite,
                    };
                }
                if !c.is_zero() {
                    mults.push((g.vertex_id(a).to_string(), g.vertex_id(b).to_string(), c));
                }
            }
        }
        let verts: Vec<(String, String)> = (0..g.vertex_count())
            .map(|v| {
                (
                    g.vertex_id(v).to_string(),
                    g.space().point_name(g.label(v)).to_string(),
                )
            })
            .collect();
        let candidate = LabeledGraph::new(g.space().clone(), verts, mults).ok()?;
        let cm = match compute_fk_opts(&candidate, FkOptions { self_check: false }) {
            Ok(cm) => cm,
            Err(_) => continue,
        };
        let differs = (0..m.space().n()).any(|x| {
            !m.point(x).mo.isomorphic(&cm.point(x).mo)
                || !m.point(x).mdb.isomorphic(&cm.point(x).mdb)
                || !m.point(x).m1.isomorphic(&cm.point(x).m1)
        });
        if differs {
            return Some(candidate);
        }
    }
    None
}
