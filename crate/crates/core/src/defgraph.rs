//! Embedded deformation graph: nodes farthest-point-sampled from the
//! template vertices, per-vertex skinning over the nearest nodes, and a
//! node-edge rigidity energy that keeps the deformation locally rigid.

use crate::{Error, Result, Vec3};

#[derive(Debug, Clone)]
pub struct DeformationGraph {
    /// Node rest positions g_i.
    pub nodes: Vec<Vec3>,
    /// k-nearest node neighborhoods used by the rigidity energy.
    pub node_neighbors: Vec<Vec<usize>>,
    /// Per-vertex skinning node indices.
    pub skin_indices: Vec<Vec<usize>>,
    /// Per-vertex skinning weights (same shape, each row sums to 1).
    pub skin_weights: Vec<Vec<f64>>,
    pub downsample_factor: usize,
}

/// Per-node transform: a Rodrigues axis-angle A_i and a translation T_i.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphParams {
    pub axis_angle: Vec<Vec3>,
    pub translation: Vec<Vec3>,
}

impl GraphParams {
    pub fn identity(node_count: usize) -> Self {
        GraphParams {
            axis_angle: vec![Vec3::zeros(); node_count],
            translation: vec![Vec3::zeros(); node_count],
        }
    }

    pub fn node_count(&self) -> usize {
        self.axis_angle.len()
    }

    /// Interleaved [A_i, T_i] layout used by the optimizer.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.axis_angle.len() * 6);
        for (a, t) in self.axis_angle.iter().zip(&self.translation) {
            out.extend_from_slice(&[a.x, a.y, a.z, t.x, t.y, t.z]);
        }
        out
    }

    pub fn from_flat(flat: &[f64]) -> Self {
        assert_eq!(flat.len() % 6, 0);
        let n = flat.len() / 6;
        let mut axis_angle = Vec::with_capacity(n);
        let mut translation = Vec::with_capacity(n);
        for i in 0..n {
            let s = &flat[i * 6..i * 6 + 6];
            axis_angle.push(Vec3::new(s[0], s[1], s[2]));
            translation.push(Vec3::new(s[3], s[4], s[5]));
        }
        GraphParams { axis_angle, translation }
    }
}

/// Builds the graph from the template vertices.
///
/// Node count is ceil(n / downsample_factor); sampling starts at vertex 0
/// and greedily takes the farthest remaining vertex, which makes the result
/// deterministic for a fixed mesh.
pub fn build_graph(
    vertices: &[Vec3],
    downsample_factor: usize,
    node_neighbors: usize,
    skin_nodes: usize,
) -> Result<DeformationGraph> {
    assert!(downsample_factor >= 1 && node_neighbors >= 1 && skin_nodes >= 1);
    let n = vertices.len();
    if n < downsample_factor {
        return Err(Error::TooFewVertices { vertices: n, factor: downsample_factor });
    }
    let k = n.div_ceil(downsample_factor);

    // Farthest-point sampling.
    let mut node_idx = Vec::with_capacity(k);
    let mut dist = vec![f64::INFINITY; n];
    let mut current = 0usize;
    for _ in 0..k {
        node_idx.push(current);
        let p = vertices[current];
        let mut best = 0usize;
        let mut best_d = -1.0;
        for (i, v) in vertices.iter().enumerate() {
            let d = (v - p).norm_squared().min(dist[i]);
            dist[i] = d;
            if d > best_d {
                best_d = d;
                best = i;
            }
        }
        current = best;
    }
    let nodes: Vec<Vec3> = node_idx.iter().map(|&i| vertices[i]).collect();

    // k-nearest node neighborhoods (over the other nodes).
    let nn = node_neighbors.min(k - 1);
    let mut neighborhoods = Vec::with_capacity(k);
    for (i, gi) in nodes.iter().enumerate() {
        let mut order: Vec<usize> = (0..k).filter(|&j| j != i).collect();
        order.sort_by(|&a, &b| {
            let da = (nodes[a] - gi).norm_squared();
            let db = (nodes[b] - gi).norm_squared();
            da.partial_cmp(&db).unwrap().then(a.cmp(&b))
        });
        order.truncate(nn);
        neighborhoods.push(order);
    }

    // Skinning: weights over the m nearest nodes with the classic
    // (1 - d/d_max)^2 falloff, d_max being the (m+1)-th neighbor distance.
    let m = skin_nodes.min(k);
    let mut skin_indices = Vec::with_capacity(n);
    let mut skin_weights = Vec::with_capacity(n);
    for v in vertices {
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| {
            let da = (nodes[a] - v).norm_squared();
            let db = (nodes[b] - v).norm_squared();
            da.partial_cmp(&db).unwrap().then(a.cmp(&b))
        });
        let d_max = if k > m {
            (nodes[order[m]] - v).norm()
        } else {
            // Degenerate tiny graphs: put the cutoff just past the farthest
            // selected node.
            (nodes[order[m - 1]] - v).norm() * 1.25 + 1e-9
        };
        let mut idx = Vec::with_capacity(m);
        let mut w = Vec::with_capacity(m);
        let mut sum = 0.0;
        for &j in order.iter().take(m) {
            let d = (nodes[j] - v).norm();
            let wi = (1.0 - d / d_max).max(0.0).powi(2);
            idx.push(j);
            w.push(wi);
            sum += wi;
        }
        if sum <= 0.0 {
            // All selected nodes sit exactly at the cutoff; fall back to
            // uniform weights.
            w.iter_mut().for_each(|wi| *wi = 1.0 / m as f64);
        } else {
            w.iter_mut().for_each(|wi| *wi /= sum);
        }
        skin_indices.push(idx);
        skin_weights.push(w);
    }

    Ok(DeformationGraph {
        nodes,
        node_neighbors: neighborhoods,
        skin_indices,
        skin_weights,
        downsample_factor,
    })
}

impl DeformationGraph {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }
}

/// Precomputed Rodrigues coefficients of one axis-angle vector.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Rotation {
    omega: Vec3,
    a: f64,
    b: f64,
    /// a'(theta)/theta and b'(theta)/theta, finite at theta = 0.
    da: f64,
    db: f64,
}

impl Rotation {
    pub fn new(omega: Vec3) -> Self {
        let t2 = omega.norm_squared();
        let theta = t2.sqrt();
        // Series switch well above f64 noise; both branches agree to ~1e-20
        // at the boundary.
        if theta < 1e-4 {
            Rotation {
                omega,
                a: 1.0 - t2 / 6.0 + t2 * t2 / 120.0,
                b: 0.5 - t2 / 24.0 + t2 * t2 / 720.0,
                da: -1.0 / 3.0 + t2 / 30.0,
                db: -1.0 / 12.0 + t2 / 180.0,
            }
        } else {
            let (s, c) = theta.sin_cos();
            Rotation {
                omega,
                a: s / theta,
                b: (1.0 - c) / t2,
                da: (theta * c - s) / (t2 * theta),
                db: (theta * s - 2.0 * (1.0 - c)) / (t2 * t2),
            }
        }
    }

    /// R(omega) * p
    #[inline]
    pub fn rotate(&self, p: Vec3) -> Vec3 {
        let u = self.omega.cross(&p);
        let w = self.omega.cross(&u);
        p + self.a * u + self.b * w
    }

    /// J^T g where J = d(R(omega) p)/d(omega); used by every backward pass
    /// that needs axis-angle gradients.
    #[inline]
    pub fn jvp_transpose(&self, p: Vec3, g: Vec3) -> Vec3 {
        let u = self.omega.cross(&p);
        let w = self.omega.cross(&u);
        self.da * u.dot(&g) * self.omega + self.db * w.dot(&g) * self.omega
            + self.a * p.cross(&g)
            + self.b * (u.cross(&g) - p.cross(&self.omega.cross(&g)))
    }
}

/// Skinned deformation: v' = sum_i w_i [R(A_i)(v - g_i) + g_i + T_i].
pub fn deform(graph: &DeformationGraph, vertices: &[Vec3], params: &GraphParams) -> Vec<Vec3> {
    assert_eq!(vertices.len(), graph.skin_indices.len());
    assert_eq!(params.node_count(), graph.node_count());
    let rotations: Vec<Rotation> =
        params.axis_angle.iter().map(|&a| Rotation::new(a)).collect();
    let mut out = Vec::with_capacity(vertices.len());
    for (vi, v) in vertices.iter().enumerate() {
        let mut p = Vec3::zeros();
        for (&j, &w) in graph.skin_indices[vi].iter().zip(&graph.skin_weights[vi]) {
            let g = graph.nodes[j];
            p += w * (rotations[j].rotate(v - g) + g + params.translation[j]);
        }
        out.push(p);
    }
    out
}

/// Transpose of `deform`'s Jacobian: pulls per-vertex position gradients back
/// to the graph parameters.
pub fn deform_backward(
    graph: &DeformationGraph,
    vertices: &[Vec3],
    params: &GraphParams,
    grad_vertices: &[Vec3],
) -> GraphParams {
    assert_eq!(grad_vertices.len(), vertices.len());
    let rotations: Vec<Rotation> =
        params.axis_angle.iter().map(|&a| Rotation::new(a)).collect();
    let mut grad = GraphParams::identity(graph.node_count());
    for (vi, v) in vertices.iter().enumerate() {
        let g_out = grad_vertices[vi];
        if g_out == Vec3::zeros() {
            continue;
        }
        for (&j, &w) in graph.skin_indices[vi].iter().zip(&graph.skin_weights[vi]) {
            grad.translation[j] += w * g_out;
            grad.axis_angle[j] += w * rotations[j].jvp_transpose(v - graph.nodes[j], g_out);
        }
    }
    grad
}

/// Node-edge rigidity energy: the mean over directed neighbor pairs (j,k) of
/// || R(A_j)(g_k - g_j) + g_j + T_j - (g_k + T_k) ||^2, with its analytic
/// gradient.
pub fn e_arap(graph: &DeformationGraph, params: &GraphParams) -> (f64, GraphParams) {
    assert_eq!(params.node_count(), graph.node_count());
    let rotations: Vec<Rotation> =
        params.axis_angle.iter().map(|&a| Rotation::new(a)).collect();
    let pair_count: usize = graph.node_neighbors.iter().map(|n| n.len()).sum();
    let mut grad = GraphParams::identity(graph.node_count());
    if pair_count == 0 {
        return (0.0, grad);
    }
    let inv_n = 1.0 / pair_count as f64;
    let mut energy = 0.0;
    for (j, neighbors) in graph.node_neighbors.iter().enumerate() {
        let gj = graph.nodes[j];
        for &k in neighbors {
            let edge = graph.nodes[k] - gj;
            let r = rotations[j].rotate(edge) + gj + params.translation[j]
                - (graph.nodes[k] + params.translation[k]);
            energy += r.norm_squared() * inv_n;
            let gr = 2.0 * inv_n * r;
            grad.translation[j] += gr;
            grad.translation[k] -= gr;
            grad.axis_angle[j] += rotations[j].jvp_transpose(edge, gr);
        }
    }
    (energy, grad)
}
