//! Template meshes and the operations the rest of the pipeline builds on:
//! OBJ I/O, per-face normals, edge adjacency, blendshape evaluation, and
//! rasterization of the UV chart layout into a texel domain mask.

mod blendshape;
mod domain;
mod obj;

pub use blendshape::{apply_blendshapes, BlendshapeSet};
pub use domain::{rasterize_uv_domain, uv_face_map, DomainMask, UvFaceMap};
pub use obj::{load_obj, save_obj};

pub(crate) use domain::{cross2, point_in_triangle, texel_center_uv, uv_to_grid as domain_grid};

use std::collections::BTreeMap;
use std::collections::HashMap;

use crate::{Error, Result, Vec2, Vec3};

/// Fixed-topology garment template: triangles with per-corner UVs into a
/// single [0,1]^2 atlas, plus named landmark vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct TemplateMesh {
    pub vertices: Vec<Vec3>,
    /// Vertex indices, one triangle per entry.
    pub faces: Vec<[usize; 3]>,
    /// UV coordinates referenced by `face_uvs`.
    pub uvs: Vec<Vec2>,
    /// Per-corner UV indices, parallel to `faces`.
    pub face_uvs: Vec<[usize; 3]>,
    /// Named landmark vertices (collar, cuffs, hem, ...).
    pub landmarks: BTreeMap<String, usize>,
    /// Garment category label ("tshirt", "mini", ...).
    pub category: String,
}

impl TemplateMesh {
    /// Checks the structural invariants: index ranges, UVs in [0,1], no
    /// degenerate faces, every edge on at most two faces.
    pub fn validate(&self) -> Result<()> {
        for (fi, (f, fuv)) in self.faces.iter().zip(&self.face_uvs).enumerate() {
            for k in 0..3 {
                if f[k] >= self.vertices.len() {
                    return Err(Error::LengthMismatch {
                        what: "face vertex index",
                        expected: self.vertices.len(),
                        got: f[k],
                    });
                }
                if fuv[k] >= self.uvs.len() {
                    return Err(Error::LengthMismatch {
                        what: "face uv index",
                        expected: self.uvs.len(),
                        got: fuv[k],
                    });
                }
            }
            let area2 = face_area2(self, fi);
            if area2 < 1e-12 {
                return Err(Error::DegenerateFace { face: fi });
            }
        }
        if self.faces.len() != self.face_uvs.len() {
            return Err(Error::LengthMismatch {
                what: "face_uvs",
                expected: self.faces.len(),
                got: self.face_uvs.len(),
            });
        }
        for (i, uv) in self.uvs.iter().enumerate() {
            if !(0.0..=1.0).contains(&uv.x) || !(0.0..=1.0).contains(&uv.y) {
                let value = if (0.0..=1.0).contains(&uv.x) { uv.y } else { uv.x };
                return Err(Error::UvOutOfRange { index: i, value });
            }
        }
        for (name, &v) in &self.landmarks {
            if v >= self.vertices.len() {
                return Err(Error::UnknownLandmark { name: name.clone() });
            }
        }
        let mut edges: HashMap<(usize, usize), usize> = HashMap::new();
        for f in &self.faces {
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                *edges.entry(key).or_insert(0) += 1;
            }
        }
        for ((v0, v1), count) in edges {
            if count > 2 {
                return Err(Error::NonManifoldEdge { v0, v1, count });
            }
        }
        Ok(())
    }

    /// UV coordinate of the first face corner that references `vertex`.
    pub fn vertex_uv(&self, vertex: usize) -> Option<Vec2> {
        for (f, fuv) in self.faces.iter().zip(&self.face_uvs) {
            for k in 0..3 {
                if f[k] == vertex {
                    return Some(self.uvs[fuv[k]]);
                }
            }
        }
        None
    }

    /// Landmark name -> vertex position lookup, in the given vertex set.
    pub fn landmark_positions(&self, vertices: &[Vec3]) -> BTreeMap<String, Vec3> {
        self.landmarks.iter().map(|(n, &v)| (n.clone(), vertices[v])).collect()
    }
}

fn face_area2(mesh: &TemplateMesh, fi: usize) -> f64 {
    let [a, b, c] = mesh.faces[fi];
    (mesh.vertices[b] - mesh.vertices[a]).cross(&(mesh.vertices[c] - mesh.vertices[a])).norm()
}

/// Unit normals of every face for an arbitrary vertex set (deformed meshes
/// reuse the template topology).
///
/// Fails on zero-area faces since their normal is undefined.
pub fn face_normals(mesh: &TemplateMesh, vertices: &[Vec3]) -> Result<Vec<Vec3>> {
    if vertices.len() != mesh.vertices.len() {
        return Err(Error::LengthMismatch {
            what: "vertices",
            expected: mesh.vertices.len(),
            got: vertices.len(),
        });
    }
    let mut normals = Vec::with_capacity(mesh.faces.len());
    for (fi, f) in mesh.faces.iter().enumerate() {
        let n = (vertices[f[1]] - vertices[f[0]]).cross(&(vertices[f[2]] - vertices[f[0]]));
        let len = n.norm();
        if len < 1e-12 {
            return Err(Error::DegenerateFace { face: fi });
        }
        normals.push(n / len);
    }
    Ok(normals)
}

/// All unordered pairs of faces sharing an edge, sorted for determinism.
pub fn adjacent_face_pairs(mesh: &TemplateMesh) -> Vec<(usize, usize)> {
    let mut edge_faces: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    for (fi, f) in mesh.faces.iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (f[k], f[(k + 1) % 3]);
            edge_faces.entry((a.min(b), a.max(b))).or_default().push(fi);
        }
    }
    let mut pairs = Vec::new();
    for fs in edge_faces.values() {
        if fs.len() == 2 {
            pairs.push((fs[0].min(fs[1]), fs[0].max(fs[1])));
        }
    }
    pairs.sort_unstable();
    pairs
}
