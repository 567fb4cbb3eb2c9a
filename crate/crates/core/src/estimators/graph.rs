//! Shortest paths on a metric-adapted mesh around a seed path.
//!
//! The mesh is a tube of nodes around the best of the segment and a family
//! of normal lifts. Node offsets are scaled by the upper metric, so a tube of
//! metric radius τ stays thin near the boundary in the normal direction and
//! wide tangentially. Edge weights are quadrature integrals of the upper
//! metric along straight edges, so every graph path gives an upper bound.
//! The refined mesh keeps all coarse nodes and edges, so its value never
//! exceeds the coarse one.

use std::collections::HashMap;

use petgraph::algo::astar;
use petgraph::graph::{NodeIndex, UnGraph};
use serde::{Deserialize, Serialize};

use super::bounds::{BoundKind, BoundResult, Estimator, PathKind, PathSpec};
use crate::cx::{Cx, CxPoint, CxVector};
use crate::error::{Error, Result};
use crate::geometry::{complex_tangent_basis, BoundaryFrame};
use crate::metrics::integrate_metric;
use crate::par::{map_slice, Execution};
use crate::sampling::RSequence;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeshParams {
    /// Coarse node count N; the refined mesh has `refine · N` nodes.
    pub nodes: usize,
    pub k: usize,
    /// Tube radius in metric units.
    pub tube: f64,
    pub refine: usize,
    /// Interior points tested on each edge before integrating it.
    pub edge_samples: usize,
    /// Relax the fine route's vertices after the search.
    pub relax: bool,
    pub seed: u64,
    #[serde(skip)]
    pub exec: Execution,
}

impl Default for MeshParams {
    fn default() -> Self {
        MeshParams {
            nodes: 2000,
            k: 12,
            tube: 1.0,
            refine: 4,
            edge_samples: 17,
            relax: true,
            seed: 0x5eed,
            exec: Execution::Auto,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphReport {
    pub seed: f64,
    pub seed_kind: String,
    pub coarse: f64,
    pub fine: f64,
    /// Length of the fine route after vertex relaxation, when shorter.
    pub relaxed: Option<f64>,
    pub coarse_nodes: usize,
    pub fine_nodes: usize,
    pub edges: usize,
}

struct Node {
    p: CxPoint,
    frame: BoundaryFrame,
    /// Metric arclength of the station the node hangs from.
    pos: f64,
}

struct Mesh {
    nodes: Vec<Node>,
    edges: HashMap<(usize, usize), f64>,
}

/// Seed polyline with cumulative metric arclength at its vertices.
struct Seed {
    vertices: Vec<CxPoint>,
    value: f64,
    kind: String,
}

const LIFT_HEIGHTS: usize = 16;
const STATION_CAP: usize = 4096;
/// Neighbour search window in station spacings.
const WINDOW: f64 = 1.5;
const RELAX_SWEEPS: usize = 40;
const RELAX_VERTICES: usize = 48;
const APPROX_PANELS: usize = 4;
/// Sine modes per frame direction in the global relaxation.
const RELAX_MODES: usize = 4;
const MODE_SWEEPS: usize = 60;

impl Estimator {
    fn node(&self, p: CxPoint, pos: f64) -> Option<Node> {
        let d = self.domain();
        if !d.contains(&p) {
            return None;
        }
        let frame = d.boundary_frame(&p).ok()?;
        Some(Node { p, frame, pos })
    }

    fn kappa(&self, frame: &BoundaryFrame, x: &CxVector) -> f64 {
        self.upper.eval_in_frame(frame, x)
    }

    fn seed_path(&self, z: &CxPoint, w: &CxPoint) -> Result<Seed> {
        let d = self.domain();
        let mut best: Option<Seed> = None;
        let mut consider = |vertices: Vec<CxPoint>, kind: String| {
            if let Ok(v) = integrate_metric(&self.upper, &vertices) {
                if best.as_ref().is_none_or(|b| v.value < b.value) {
                    best = Some(Seed {
                        vertices,
                        value: v.value,
                        kind,
                    });
                }
            }
        };
        consider(vec![z.clone(), w.clone()], "segment".into());
        let lo = d.depth(z)?.max(d.depth(w)?);
        let hi = 0.95 * d.frame_limit;
        if lo < hi {
            for j in 0..=LIFT_HEIGHTS {
                let h = lo * (hi / lo).powf(j as f64 / LIFT_HEIGHTS as f64);
                if let Ok(path) = self.lift_path(z, w, h) {
                    consider(path, format!("lift h={h:.3e}"));
                }
            }
        }
        if let Ok(rec) = self.record(z, w) {
            if let Ok(path) = self.lift_path(z, w, 3.0 * rec.b) {
                consider(path, "lift h=3B".into());
            }
        }
        best.ok_or(Error::DisconnectedGraph)
    }

    /// Points along the polyline spaced `step` apart in the upper metric,
    /// always including the polyline vertices.
    fn stations(&self, path: &[CxPoint], step: f64) -> Vec<(CxPoint, f64)> {
        let mut out = vec![(path[0].clone(), 0.0)];
        let mut pos = 0.0;
        for pair in path.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            let dir = b - a;
            let len = dir.norm();
            if len == 0.0 {
                continue;
            }
            let unit = &dir * (1.0 / len);
            let mut t = 0.0;
            let mut p = a.clone();
            while out.len() < STATION_CAP {
                let Ok(frame) = self.domain().boundary_frame(&p) else {
                    break;
                };
                let k = self.kappa(&frame, &unit).max(1e-300);
                let dt = step / k;
                if t + dt >= len * (1.0 - 1e-9) {
                    break;
                }
                t += dt;
                pos += step;
                p = a.offset(t / len, &dir);
                out.push((p.clone(), pos));
            }
            let rest = integrate_metric(&self.upper, &[p, b.clone()]).map_or(step, |v| v.value);
            pos += rest;
            out.push((b.clone(), pos));
        }
        out
    }

    /// Tube nodes around `stations`, `per_station` each, radius `tube`.
    fn tube_nodes(&self, stations: &[(CxPoint, f64)], per_station: usize, tube: f64, seed: u64) -> Vec<Node> {
        let n = self.domain().dim;
        let seq = RSequence::new(2 * n, seed);
        let limit = self.domain().frame_limit;
        let mut out = Vec::new();
        let mut idx = 0u64;
        for (u, pos) in stations {
            let Ok(frame) = self.domain().boundary_frame(u) else {
                continue;
            };
            let nrm = &frame.normal;
            let i_n = nrm * Cx::i();
            let mut dirs: Vec<CxVector> = vec![i_n];
            for t in complex_tangent_basis(nrm) {
                dirs.push(&t * Cx::i());
                dirs.push(t);
            }
            let scales: Vec<f64> = dirs.iter().map(|v| tube / self.kappa(&frame, v).max(1e-300)).collect();
            for _ in 0..per_station {
                let c: Vec<f64> = seq.point(idx).iter().map(|x| 2.0 * x - 1.0).collect();
                idx += 1;
                let height = (frame.delta * (2.0 * tube * c[0]).exp()).min(0.99 * limit);
                let mut p = frame.foot.offset(height, nrm);
                for (j, v) in dirs.iter().enumerate() {
                    p = p.offset(scales[j] * c[j + 1], v);
                }
                if let Some(node) = self.node(p, *pos) {
                    out.push(node);
                }
            }
        }
        out
    }

    fn approx_distance(&self, a: &Node, b: &Node) -> f64 {
        let x = &b.p - &a.p;
        0.5 * (self.kappa(&a.frame, &x) + self.kappa(&b.frame, &x))
    }

    fn edge_inside(&self, a: &CxPoint, b: &CxPoint, samples: usize) -> bool {
        (1..=samples).all(|j| {
            let t = j as f64 / (samples + 1) as f64;
            self.domain().contains(&CxVector::lerp(a, b, t))
        })
    }

    fn edge_weight(&self, a: &CxPoint, b: &CxPoint, samples: usize) -> Option<f64> {
        if !self.edge_inside(a, b, samples) {
            return None;
        }
        integrate_metric(&self.upper, &[a.clone(), b.clone()])
            .ok()
            .map(|v| v.value)
    }

    /// Adds k-nearest-neighbour edges for nodes `from..` against nodes whose
    /// station position is within `window`, plus the `chain` edges.
    fn connect(&self, mesh: &mut Mesh, from: usize, window: f64, chain: &[usize], params: &MeshParams) {
        let mut order: Vec<usize> = (0..mesh.nodes.len()).collect();
        order.sort_by(|&a, &b| mesh.nodes[a].pos.total_cmp(&mesh.nodes[b].pos));
        let sorted_pos: Vec<f64> = order.iter().map(|&i| mesh.nodes[i].pos).collect();
        let nodes = &mesh.nodes;
        let new: Vec<usize> = (from..nodes.len()).collect();
        let picks: Vec<Vec<usize>> = map_slice(params.exec, &new, |&i| {
            let p = nodes[i].pos;
            let lo = sorted_pos.partition_point(|&x| x < p - window);
            let hi = sorted_pos.partition_point(|&x| x <= p + window);
            let mut cand: Vec<(f64, usize)> = order[lo..hi]
                .iter()
                .filter(|&&j| j != i)
                .map(|&j| (self.approx_distance(&nodes[i], &nodes[j]), j))
                .collect();
            let k = params.k.min(cand.len());
            if k == 0 {
                return Vec::new();
            }
            cand.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0));
            cand[..k].iter().map(|c| c.1).collect()
        });
        let mut wanted: Vec<(usize, usize)> = Vec::new();
        for (i, js) in new.iter().zip(&picks) {
            for &j in js {
                let e = (*i.min(&j), *i.max(&j));
                if !mesh.edges.contains_key(&e) {
                    wanted.push(e);
                }
            }
        }
        for w in chain.windows(2) {
            let e = (w[0].min(w[1]), w[0].max(w[1]));
            if e.0 != e.1 && !mesh.edges.contains_key(&e) {
                wanted.push(e);
            }
        }
        wanted.sort_unstable();
        wanted.dedup();
        let weights = map_slice(params.exec, &wanted, |&(a, b)| {
            self.edge_weight(&nodes[a].p, &nodes[b].p, params.edge_samples)
        });
        for (e, w) in wanted.into_iter().zip(weights) {
            if let Some(w) = w {
                mesh.edges.insert(e, w);
            }
        }
    }

    fn shortest(&self, mesh: &Mesh, from: usize, to: usize) -> Result<(f64, Vec<usize>)> {
        let mut g: UnGraph<(), f64> = UnGraph::with_capacity(mesh.nodes.len(), mesh.edges.len());
        for _ in 0..mesh.nodes.len() {
            g.add_node(());
        }
        for (&(a, b), &w) in &mesh.edges {
            g.add_edge(NodeIndex::new(a), NodeIndex::new(b), w);
        }
        let goal = NodeIndex::new(to);
        astar(&g, NodeIndex::new(from), |n| n == goal, |e| *e.weight(), |_| 0.0)
            .map(|(c, p)| (c, p.into_iter().map(|n| n.index()).collect()))
            .ok_or(Error::DisconnectedGraph)
    }

    /// Adds stations of `path` and their tube nodes; returns the node
    /// indices of the stations in order and the station spacing.
    fn add_tube(&self, mesh: &mut Mesh, path: &[CxPoint], budget: usize, tube: f64, seed: u64) -> (Vec<usize>, f64) {
        let length = integrate_metric(&self.upper, path).map_or(tube, |v| v.value);
        let step = (0.5 * tube).min(length / 8.0).max(1e-12);
        let stations = self.stations(path, step);
        let mut chain = Vec::with_capacity(stations.len());
        for (p, pos) in &stations {
            if let Some(node) = self.node(p.clone(), *pos) {
                chain.push(mesh.nodes.len());
                mesh.nodes.push(node);
            }
        }
        let per = budget.saturating_sub(stations.len()) / stations.len().max(1);
        mesh.nodes.extend(self.tube_nodes(&stations, per.max(1), tube, seed));
        (chain, step)
    }

    /// Composite Simpson estimate of the edge length; infinite if a node
    /// leaves the domain.
    fn approx_length(&self, a: &CxPoint, b: &CxPoint) -> f64 {
        let x = b - a;
        let mut acc = 0.0;
        for j in 0..=2 * APPROX_PANELS {
            let t = j as f64 / (2 * APPROX_PANELS) as f64;
            let Ok(frame) = self.domain().boundary_frame(&CxVector::lerp(a, b, t)) else {
                return f64::INFINITY;
            };
            let wgt = if j == 0 || j == 2 * APPROX_PANELS {
                1.0
            } else if j % 2 == 1 {
                4.0
            } else {
                2.0
            };
            acc += wgt * self.kappa(&frame, &x);
        }
        acc / (6 * APPROX_PANELS) as f64
    }

    fn polyline_length(&self, pts: &[CxPoint]) -> f64 {
        pts.windows(2).map(|w| self.approx_length(&w[0], &w[1])).sum()
    }

    /// Compass search over smooth deformations `Σ a_{k,j} sin(kπt) v_j` of
    /// the route, with `v_j` the frame directions at each vertex scaled to
    /// unit metric length and `t` the normalized metric arclength.
    fn relax_modes(&self, pts: &[CxPoint]) -> Vec<CxPoint> {
        let m = pts.len();
        if m < 3 {
            return pts.to_vec();
        }
        let mut arc = vec![0.0; m];
        for i in 1..m {
            arc[i] = arc[i - 1] + self.approx_length(&pts[i - 1], &pts[i]);
        }
        let total = arc[m - 1];
        if !(total > 0.0 && total.is_finite()) {
            return pts.to_vec();
        }
        let mut basis: Vec<Vec<CxVector>> = Vec::with_capacity(m);
        for p in pts {
            let Ok(frame) = self.domain().boundary_frame(p) else {
                return pts.to_vec();
            };
            let nrm = frame.normal.clone();
            let mut dirs = vec![nrm.clone(), &nrm * Cx::i()];
            for t in complex_tangent_basis(&nrm) {
                dirs.push(&t * Cx::i());
                dirs.push(t);
            }
            let scaled = dirs
                .into_iter()
                .map(|v| &v * (1.0 / self.kappa(&frame, &v).max(1e-300)))
                .collect();
            basis.push(scaled);
        }
        let dirs = basis[0].len();
        let shape = |coef: &[f64]| -> Vec<CxPoint> {
            (0..m)
                .map(|i| {
                    let mut p = pts[i].clone();
                    if i == 0 || i == m - 1 {
                        return p;
                    }
                    let t = arc[i] / total;
                    for k in 0..RELAX_MODES {
                        let s = ((k + 1) as f64 * std::f64::consts::PI * t).sin();
                        for j in 0..dirs {
                            let a = coef[k * dirs + j];
                            if a != 0.0 && s != 0.0 {
                                p = p.offset(a * s, &basis[i][j]);
                            }
                        }
                    }
                    p
                })
                .collect()
        };
        let mut coef = vec![0.0; RELAX_MODES * dirs];
        let mut cost = self.polyline_length(pts);
        let mut step = 0.25 * total;
        for _ in 0..MODE_SWEEPS {
            let mut moved = false;
            for c in 0..coef.len() {
                for sgn in [1.0, -1.0] {
                    let mut trial = coef.clone();
                    trial[c] += sgn * step;
                    let v = self.polyline_length(&shape(&trial));
                    if v < cost {
                        cost = v;
                        coef = trial;
                        moved = true;
                        break;
                    }
                }
            }
            if !moved {
                step *= 0.5;
                if step < 1e-3 * total {
                    break;
                }
            }
        }
        shape(&coef)
    }

    /// Pattern search on the interior vertices of `route`, with steps measured
    /// in the upper metric at each vertex.
    fn relax(&self, route: &[CxPoint]) -> Vec<CxPoint> {
        let mut pts = route.to_vec();
        while pts.len() < RELAX_VERTICES && pts.len() >= 2 {
            let mut next = Vec::with_capacity(2 * pts.len());
            for w in pts.windows(2) {
                next.push(w[0].clone());
                next.push(CxVector::lerp(&w[0], &w[1], 0.5));
            }
            next.push(pts.last().expect("nonempty").clone());
            pts = next;
        }
        let mut pts = self.relax_modes(&pts);
        let n = self.domain().dim;
        let mut step = 0.25;
        for _ in 0..RELAX_SWEEPS {
            let mut moved = false;
            for i in 1..pts.len() - 1 {
                let Ok(frame) = self.domain().boundary_frame(&pts[i]) else {
                    continue;
                };
                let mut cost = self.approx_length(&pts[i - 1], &pts[i]) + self.approx_length(&pts[i], &pts[i + 1]);
                for d in 0..2 * n {
                    let mut re = vec![0.0; 2 * n];
                    re[d] = 1.0;
                    let dir = CxVector::from_real_interleaved(&re);
                    let h = step / self.kappa(&frame, &dir).max(1e-300);
                    for sgn in [1.0, -1.0] {
                        let cand = pts[i].offset(sgn * h, &dir);
                        let c = self.approx_length(&pts[i - 1], &cand) + self.approx_length(&cand, &pts[i + 1]);
                        if c < cost {
                            cost = c;
                            pts[i] = cand;
                            moved = true;
                            break;
                        }
                    }
                }
            }
            if !moved {
                step *= 0.5;
                if step < 2e-3 {
                    break;
                }
            }
        }
        pts
    }

    /// Shortest path on the coarse and refined meshes; the value reported is
    /// the refined one.
    pub fn upper_bound_graph(&self, z: &CxPoint, w: &CxPoint) -> Result<BoundResult> {
        if z == w {
            let mut r = BoundResult::new(0.0, BoundKind::Upper, "graph");
            r.notes.push("z = w".into());
            return Ok(r);
        }
        let params = self.mesh;
        let seed = self.seed_path(z, w)?;
        let tube = params.tube.min(0.5 * seed.value).max(1e-9);
        let mut mesh = Mesh {
            nodes: Vec::new(),
            edges: HashMap::new(),
        };
        let (chain, step) = self.add_tube(&mut mesh, &seed.vertices, params.nodes, tube, params.seed);
        let (src, dst) = (chain[0], *chain.last().expect("stations"));
        self.connect(&mut mesh, 0, WINDOW * step, &chain, &params);
        let (coarse, route) = self.shortest(&mesh, src, dst)?;
        let coarse_nodes = mesh.nodes.len();

        // Refinement: half-width tube around the coarse route.
        let mut fine = coarse;
        let mut best_route = route.clone();
        if params.refine > 1 {
            let path: Vec<CxPoint> = route.iter().map(|&i| mesh.nodes[i].p.clone()).collect();
            let from = mesh.nodes.len();
            let budget = (params.refine - 1) * params.nodes;
            let (chain2, step2) = self.add_tube(&mut mesh, &path, budget, 0.5 * tube, params.seed ^ 0x9e37);
            // Positions along the coarse route are comparable with the seed's.
            self.connect(&mut mesh, from, WINDOW * step2, &chain2, &params);
            let (f, r) = self.shortest(&mesh, src, dst)?;
            fine = f;
            best_route = r;
        }
        let mut vertices: Vec<CxPoint> = best_route.iter().map(|&i| mesh.nodes[i].p.clone()).collect();
        let mut value = fine;
        let mut relaxed = None;
        if params.relax {
            let cand = self.relax(&vertices);
            let inside = cand
                .windows(2)
                .all(|w| self.edge_inside(&w[0], &w[1], params.edge_samples));
            if inside {
                if let Ok(v) = integrate_metric(&self.upper, &cand) {
                    if v.value < fine {
                        value = v.value;
                        relaxed = Some(v.value);
                        vertices = cand;
                    }
                }
            }
        }
        let mut r = BoundResult::new(value, BoundKind::Upper, "graph");
        r.notes.push(format!("metric {}", self.upper.kind.name()));
        r.notes.push(format!(
            "mesh {coarse_nodes}/{} nodes, k = {}",
            mesh.nodes.len(),
            params.k
        ));
        r.path = Some(PathSpec {
            kind: PathKind::Graph,
            vertices,
            lift_height: None,
            case: None,
        });
        r.graph = Some(GraphReport {
            seed: seed.value,
            seed_kind: seed.kind,
            coarse,
            fine,
            relaxed,
            coarse_nodes,
            fine_nodes: mesh.nodes.len(),
            edges: mesh.edges.len(),
        });
        Ok(r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::ball_distance;
    use crate::quantities::{ModelConstants, PairContext};
    use crate::DomainModel;
    use std::sync::Arc;

    fn ball_est(nodes: usize) -> Estimator {
        let d = Arc::new(DomainModel::unit_ball(2));
        Estimator::new(PairContext::with_chi(
            d,
            CxVector::basis(2, 0),
            ModelConstants::default(),
            1.0,
        ))
        .unwrap()
        .with_mesh(MeshParams {
            nodes,
            ..Default::default()
        })
    }

    fn pt(v: &[(f64, f64)]) -> CxPoint {
        v.iter().map(|&(a, b)| Cx::new(a, b)).collect()
    }

    #[test]
    fn ball_example() {
        let e = ball_est(300);
        let z = CxVector::zeros(2);
        let w = pt(&[(0.5, 0.0), (0.0, 0.0)]);
        let r = e.upper_bound_graph(&z, &w).unwrap();
        let exact = ball_distance(&z, &w).unwrap();
        assert!(r.value >= exact * (1.0 - 1e-6) && r.value <= 1.1 * exact, "{}", r.value);
    }

    #[test]
    fn refinement_never_increases() {
        let e = ball_est(300);
        let z = pt(&[(0.995, 0.0), (0.0, 0.0)]);
        let w = pt(&[(0.99, 0.05), (0.03, 0.0)]);
        let r = e.upper_bound_graph(&z, &w).unwrap();
        let g = r.graph.as_ref().unwrap();
        assert!(g.fine <= g.coarse && g.coarse <= g.seed * (1.0 + 1e-9));
        assert!(g.fine_nodes > g.coarse_nodes);
        let exact = ball_distance(&z, &w).unwrap();
        assert!(
            r.value >= exact * (1.0 - 1e-6) && r.value <= 1.1 * exact,
            "{} vs {exact}",
            r.value
        );
        let path = r.path.unwrap();
        assert_eq!(path.vertices.first(), Some(&z));
        assert_eq!(path.vertices.last(), Some(&w));
    }

    #[test]
    fn equal_points() {
        let z = pt(&[(0.9, 0.0), (0.0, 0.0)]);
        assert_eq!(ball_est(100).upper_bound_graph(&z, &z).unwrap().value, 0.0);
    }
}
