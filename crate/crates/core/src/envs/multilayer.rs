//! Aligning three embedded trees by disc isometries so that the edges between
//! layers become exactly the close cross-layer pairs.

use std::collections::{HashMap, HashSet};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{hyp_distance_complex, DiscPoint, MobiusTransform};

/// Layers moved by the optimizer; the third layer stays fixed.
pub const MOVING_LAYERS: [&str; 2] = ["A", "B"];
pub const FIXED_LAYER: &str = "C";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeSpec {
    pub id: String,
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerSpec {
    pub name: String,
    pub nodes: Vec<NodeSpec>,
    pub tree_edges: Vec<[String; 2]>,
}

/// On-disk form: node references in edges between layers are `layer:node`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultiLayerSpec {
    pub epsilon: f64,
    pub layers: Vec<LayerSpec>,
    pub intra_edges: Vec<[String; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeKey {
    pub layer: usize,
    pub node: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub name: String,
    pub ids: Vec<String>,
    pub points: Vec<DiscPoint>,
    pub tree_edges: Vec<(usize, usize)>,
}

/// Validated instance: every per-layer embedding is proper for its tree.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiLayerInstance {
    epsilon: f64,
    layers: Vec<Layer>,
    edges: Vec<(NodeKey, NodeKey)>,
    edge_set: HashSet<(NodeKey, NodeKey)>,
}

fn ordered(u: NodeKey, v: NodeKey) -> (NodeKey, NodeKey) {
    if u <= v {
        (u, v)
    } else {
        (v, u)
    }
}

impl MultiLayerInstance {
    pub fn from_spec(spec: &MultiLayerSpec) -> Result<Self> {
        if !(spec.epsilon > 0.0) || !spec.epsilon.is_finite() {
            return Err(Error::config("epsilon must be positive"));
        }
        let mut layers = Vec::with_capacity(spec.layers.len());
        let mut lookup: HashMap<(&str, &str), NodeKey> = HashMap::new();
        for (li, ls) in spec.layers.iter().enumerate() {
            if spec.layers[..li].iter().any(|o| o.name == ls.name) {
                return Err(Error::config(format!("duplicate layer {}", ls.name)));
            }
            let mut points = Vec::with_capacity(ls.nodes.len());
            for (ni, n) in ls.nodes.iter().enumerate() {
                let key = NodeKey { layer: li, node: ni };
                if lookup.insert((ls.name.as_str(), n.id.as_str()), key).is_some() {
                    return Err(Error::config(format!("duplicate node {}:{}", ls.name, n.id)));
                }
                points.push(
                    DiscPoint::new(n.re, n.im)
                        .map_err(|e| Error::config(format!("node {}:{}: {e}", ls.name, n.id)))?,
                );
            }
            let mut tree_edges = Vec::with_capacity(ls.tree_edges.len());
            for [u, v] in &ls.tree_edges {
                let find = |id: &str| {
                    lookup
                        .get(&(ls.name.as_str(), id))
                        .map(|k| k.node)
                        .ok_or_else(|| Error::config(format!("unknown node {}:{id}", ls.name)))
                };
                let (i, j) = (find(u)?, find(v)?);
                if i == j {
                    return Err(Error::config(format!("self loop on {}:{u}", ls.name)));
                }
                tree_edges.push((i.min(j), i.max(j)));
            }
            layers.push(Layer {
                name: ls.name.clone(),
                ids: ls.nodes.iter().map(|n| n.id.clone()).collect(),
                points,
                tree_edges,
            });
        }
        for name in MOVING_LAYERS.iter().chain([&FIXED_LAYER]) {
            if !layers.iter().any(|l| l.name == *name) {
                return Err(Error::config(format!("missing layer {name}")));
            }
        }
        if layers.len() != 3 {
            return Err(Error::config(format!("expected layers A, B and C, got {}", layers.len())));
        }
        let mut edges = Vec::with_capacity(spec.intra_edges.len());
        for [u, v] in &spec.intra_edges {
            let (ku, kv) = (resolve(&lookup, u)?, resolve(&lookup, v)?);
            if ku.layer == kv.layer {
                return Err(Error::config(format!("edge {u} {v} does not join two layers")));
            }
            edges.push(ordered(ku, kv));
        }
        let edge_set: HashSet<_> = edges.iter().copied().collect();
        if edge_set.len() != edges.len() {
            return Err(Error::config("duplicate edge between layers"));
        }
        let inst = MultiLayerInstance {
            epsilon: spec.epsilon,
            layers,
            edges,
            edge_set,
        };
        inst.check_proper()?;
        Ok(inst)
    }

    fn check_proper(&self) -> Result<()> {
        for layer in &self.layers {
            let tree: HashSet<_> = layer.tree_edges.iter().copied().collect();
            let n = layer.points.len();
            for i in 0..n {
                for j in i + 1..n {
                    let d = hyp_distance_complex(layer.points[i].to_complex(), layer.points[j].to_complex());
                    let close = d < self.epsilon;
                    if close != tree.contains(&(i, j)) {
                        return Err(Error::config(format!(
                            "layer {} is not properly embedded: nodes {} and {} at distance {d:.6} ({})",
                            layer.name,
                            layer.ids[i],
                            layer.ids[j],
                            if close { "close but not linked" } else { "linked but far" }
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn to_spec(&self) -> MultiLayerSpec {
        let name = |k: NodeKey| format!("{}:{}", self.layers[k.layer].name, self.layers[k.layer].ids[k.node]);
        MultiLayerSpec {
            epsilon: self.epsilon,
            layers: self
                .layers
                .iter()
                .map(|l| LayerSpec {
                    name: l.name.clone(),
                    nodes: l
                        .ids
                        .iter()
                        .zip(&l.points)
                        .map(|(id, p)| NodeSpec {
                            id: id.clone(),
                            re: p.re(),
                            im: p.im(),
                        })
                        .collect(),
                    tree_edges: l
                        .tree_edges
                        .iter()
                        .map(|&(i, j)| [l.ids[i].clone(), l.ids[j].clone()])
                        .collect(),
                })
                .collect(),
            intra_edges: self.edges.iter().map(|&(u, v)| [name(u), name(v)]).collect(),
        }
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    /// Edges between layers, endpoints ordered by layer then node.
    pub fn edges(&self) -> &[(NodeKey, NodeKey)] {
        &self.edges
    }

    pub fn is_edge(&self, u: NodeKey, v: NodeKey) -> bool {
        self.edge_set.contains(&ordered(u, v))
    }

    pub fn layer_index(&self, name: &str) -> Option<usize> {
        self.layers.iter().position(|l| l.name == name)
    }

    /// Lowest reachable error: every edge close, every non-edge far.
    pub fn optimum(&self) -> i64 {
        -(self.edges.len() as i64)
    }

    /// Initial points of a layer as complex numbers.
    pub fn layer_points(&self, name: &str) -> Option<Vec<Complex64>> {
        let l = self.layer_index(name)?;
        Some(self.layers[l].points.iter().map(|p| p.to_complex()).collect())
    }

    /// Copy with layers A and B moved by the given isometries.
    pub fn transformed(&self, g_a: &MobiusTransform, g_b: &MobiusTransform) -> MultiLayerInstance {
        let mut out = self.clone();
        for layer in &mut out.layers {
            let g = match layer.name.as_str() {
                "A" => g_a,
                "B" => g_b,
                _ => continue,
            };
            for p in &mut layer.points {
                *p = g.apply(*p);
            }
        }
        out
    }

    /// Error of a full placement, `points[l]` holding the points of layer `l`
    /// in instance order.
    pub fn error_for_points(&self, points: &[Vec<Complex64>]) -> Result<i64> {
        let mut total = 0;
        self.scan_pairs(points, |d, edge| {
            total += match (d < self.epsilon, edge) {
                (true, true) => -1,
                (true, false) | (false, true) => 1,
                (false, false) => 0,
            };
        })?;
        Ok(total)
    }

    /// Total distance by which pairs between layers miss their side of ε:
    /// `d − ε` for far edges, `ε − d` for close non-edges. Zero exactly when
    /// the error equals [`MultiLayerInstance::optimum`].
    pub fn violation_for_points(&self, points: &[Vec<Complex64>]) -> Result<f64> {
        let mut total = 0.0;
        self.scan_pairs(points, |d, edge| {
            total += if edge {
                (d - self.epsilon).max(0.0)
            } else {
                (self.epsilon - d).max(0.0)
            };
        })?;
        Ok(total)
    }

    /// Calls `visit(distance, is_edge)` for every pair of nodes in different
    /// layers.
    fn scan_pairs(&self, points: &[Vec<Complex64>], mut visit: impl FnMut(f64, bool)) -> Result<()> {
        if points.len() != self.layers.len() {
            return Err(Error::DimensionMismatch {
                expected: self.layers.len(),
                got: points.len(),
            });
        }
        for (l, pts) in points.iter().enumerate() {
            if pts.len() != self.layers[l].points.len() {
                return Err(Error::DimensionMismatch {
                    expected: self.layers[l].points.len(),
                    got: pts.len(),
                });
            }
        }
        for la in 0..points.len() {
            for lb in la + 1..points.len() {
                for (i, &z) in points[la].iter().enumerate() {
                    for (j, &w) in points[lb].iter().enumerate() {
                        let edge = self.edge_set.contains(&(
                            NodeKey { layer: la, node: i },
                            NodeKey { layer: lb, node: j },
                        ));
                        visit(hyp_distance_complex(z, w), edge);
                    }
                }
            }
        }
        Ok(())
    }

    /// Error with layer A at `pts_a`, layer B at `pts_b` and layer C fixed.
    pub fn error_with_moving(&self, pts_a: &[Complex64], pts_b: &[Complex64]) -> Result<i64> {
        self.error_for_points(&self.with_moving(pts_a, pts_b))
    }

    /// Violation with layer A at `pts_a`, layer B at `pts_b` and layer C fixed.
    pub fn violation_with_moving(&self, pts_a: &[Complex64], pts_b: &[Complex64]) -> Result<f64> {
        self.violation_for_points(&self.with_moving(pts_a, pts_b))
    }

    fn with_moving(&self, pts_a: &[Complex64], pts_b: &[Complex64]) -> Vec<Vec<Complex64>> {
        self.layers
            .iter()
            .map(|l| match l.name.as_str() {
                "A" => pts_a.to_vec(),
                "B" => pts_b.to_vec(),
                _ => l.points.iter().map(|p| p.to_complex()).collect(),
            })
            .collect()
    }

    /// Parses the plain-text form.
    ///
    /// Blank lines and `#` comments are ignored. `epsilon <value>` sets the
    /// threshold (default 0.2). A line `layer:node x y` places a node. A line
    /// `layer:node layer:node` is a tree edge when both ends share a layer and
    /// an edge between layers otherwise.
    pub fn parse_edge_list(text: &str) -> Result<Self> {
        let mut epsilon = 0.2;
        let mut layers: Vec<LayerSpec> = Vec::new();
        let mut intra_edges = Vec::new();
        let mut pending_tree = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |msg: &str| Error::config(format!("line {}: {msg}: {raw:?}", lineno + 1));
            let tokens: Vec<&str> = line.split_whitespace().collect();
            match tokens.as_slice() {
                ["epsilon", v] => epsilon = v.parse().map_err(|_| bad("bad epsilon"))?,
                [node, x, y] => {
                    let (layer, id) = split_ref(node).ok_or_else(|| bad("expected layer:node"))?;
                    let re = x.parse().map_err(|_| bad("bad coordinate"))?;
                    let im = y.parse().map_err(|_| bad("bad coordinate"))?;
                    let idx = match layers.iter().position(|l| l.name == layer) {
                        Some(i) => i,
                        None => {
                            layers.push(LayerSpec {
                                name: layer.to_string(),
                                nodes: Vec::new(),
                                tree_edges: Vec::new(),
                            });
                            layers.len() - 1
                        }
                    };
                    layers[idx].nodes.push(NodeSpec {
                        id: id.to_string(),
                        re,
                        im,
                    });
                }
                [u, v] => {
                    let (lu, iu) = split_ref(u).ok_or_else(|| bad("expected layer:node"))?;
                    let (lv, iv) = split_ref(v).ok_or_else(|| bad("expected layer:node"))?;
                    if lu == lv {
                        pending_tree.push((lu.to_string(), [iu.to_string(), iv.to_string()]));
                    } else {
                        intra_edges.push([u.to_string(), v.to_string()]);
                    }
                }
                _ => return Err(bad("unrecognized line")),
            }
        }
        for (layer, edge) in pending_tree {
            let l = layers
                .iter_mut()
                .find(|l| l.name == layer)
                .ok_or_else(|| Error::config(format!("tree edge in layer {layer} without coordinates")))?;
            l.tree_edges.push(edge);
        }
        Self::from_spec(&MultiLayerSpec {
            epsilon,
            layers,
            intra_edges,
        })
    }

    /// Plain-text form accepted by [`MultiLayerInstance::parse_edge_list`].
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("epsilon {}\n", self.epsilon);
        for l in &self.layers {
            for (id, p) in l.ids.iter().zip(&l.points) {
                out.push_str(&format!("{}:{id} {:?} {:?}\n", l.name, p.re(), p.im()));
            }
        }
        for l in &self.layers {
            for &(i, j) in &l.tree_edges {
                out.push_str(&format!("{0}:{1} {0}:{2}\n", l.name, l.ids[i], l.ids[j]));
            }
        }
        for [u, v] in self.to_spec().intra_edges {
            out.push_str(&format!("{u} {v}\n"));
        }
        out
    }
}

fn split_ref(s: &str) -> Option<(&str, &str)> {
    let (l, n) = s.split_once(':')?;
    (!l.is_empty() && !n.is_empty()).then_some((l, n))
}

fn resolve(lookup: &HashMap<(&str, &str), NodeKey>, s: &str) -> Result<NodeKey> {
    let (l, n) = split_ref(s).ok_or_else(|| Error::config(format!("expected layer:node, got {s:?}")))?;
    lookup
        .get(&(l, n))
        .copied()
        .ok_or_else(|| Error::config(format!("unknown node {s}")))
}

/// Error after moving layer A by `g_a` and layer B by `g_b`.
pub fn multilayer_error(inst: &MultiLayerInstance, g_a: &MobiusTransform, g_b: &MobiusTransform) -> i64 {
    let moved = |name: &str, g: &MobiusTransform| -> Vec<Complex64> {
        inst.layer_points(name)
            .expect("validated instance has layers A and B")
            .into_iter()
            .map(|z| g.apply_complex(z))
            .collect()
    };
    inst.error_with_moving(&moved("A", g_a), &moved("B", g_b))
        .expect("moved layers keep their sizes")
}

/// Perfectly aligned reference configuration of the shipped instance: every
/// tree edge and every edge between layers is closer than 0.2, every other
/// pair farther, with a distance margin above 0.03.
pub fn reference_spec() -> MultiLayerSpec {
    let node = |id: &str, re: f64, im: f64| NodeSpec {
        id: id.to_string(),
        re,
        im,
    };
    let path = |a: &str, b: &str, c: &str| vec![[a.to_string(), b.to_string()], [b.to_string(), c.to_string()]];
    MultiLayerSpec {
        epsilon: 0.2,
        layers: vec![
            LayerSpec {
                name: "A".into(),
                nodes: vec![node("a1", -0.2345, -0.0766), node("a2", -0.2451, -0.0002), node("a3", -0.2697, 0.0731)],
                tree_edges: path("a1", "a2", "a3"),
            },
            LayerSpec {
                name: "B".into(),
                nodes: vec![node("b1", -0.1973, 0.1011), node("b2", -0.1697, 0.0265), node("b3", -0.1249, -0.0194)],
                tree_edges: path("b1", "b2", "b3"),
            },
            LayerSpec {
                name: "C".into(),
                nodes: vec![node("c1", -0.1924, -0.1403), node("c2", -0.1175, -0.1375), node("c3", -0.0719, -0.0753)],
                tree_edges: path("c1", "c2", "c3"),
            },
        ],
        intra_edges: [["A:a1", "C:c1"], ["A:a3", "B:b1"], ["B:b3", "C:c3"], ["A:a2", "B:b2"]]
            .iter()
            .map(|[u, v]| [u.to_string(), v.to_string()])
            .collect(),
    }
}

/// Isometries that move the reference configuration to the shipped instance.
///
/// They are the layer-wise maps of the two-group flow run backwards from the
/// reference configuration, so some sub-swarm policy undoes them within the
/// default horizon.
pub fn reference_perturbation() -> (MobiusTransform, MobiusTransform) {
    let t = |re: f64, im: f64, phi: f64| {
        MobiusTransform::new(DiscPoint::new(re, im).expect("perturbation centre inside the disc"), phi)
    };
    (
        t(-0.1241319832580059, -0.04254178167637379, 4.709217099579292),
        t(-0.16162786319393185, 0.08976625471493241, 4.698446119288),
    )
}
