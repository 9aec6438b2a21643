//! Built-in procedural garment templates.
//!
//! Each template is a front and a back panel over a grid-aligned outline
//! (body rectangle plus optional sleeve rectangles), with sleeves lifted
//! slightly toward the camera so fold blendshapes create real self
//! occlusion. Charts for the two panels sit side by side in the UV atlas.
//!
//! The "tshirt" template is refined (centroid splits plus boundary ears) to
//! the exact published vertex/face budget of the production asset so that
//! sizing-dependent behavior (graph node counts, domain statistics) can be
//! exercised at full scale.

use std::collections::BTreeMap;
use std::collections::HashMap;
use std::sync::OnceLock;

use crate::geometry::{BlendshapeSet, TemplateMesh};
use crate::{Error, Result, Vec2, Vec3};

#[derive(Debug, Clone)]
pub struct GarmentTemplate {
    pub mesh: TemplateMesh,
    pub blendshapes: BlendshapeSet,
}

/// Integer cell rectangle, [x0,x1) x [y0,y1).
#[derive(Debug, Clone, Copy)]
struct CellRect {
    x0: i64,
    y0: i64,
    x1: i64,
    y1: i64,
}

impl CellRect {
    fn contains_cell(&self, x: i64, y: i64) -> bool {
        x >= self.x0 && x < self.x1 && y >= self.y0 && y < self.y1
    }
}

#[derive(Debug, Clone)]
struct Spec {
    category: &'static str,
    cell: f64,
    body: CellRect,
    sleeves: Option<[CellRect; 2]>,
    /// Panel offset along z; front at +z_base, back at -z_base.
    z_base: f64,
    /// Extra lift of the sleeve toward its camera, ramped from the shoulder.
    z_lift: f64,
    /// Sleeve fold blendshape angle at coefficient 1, in radians.
    fold_angle: f64,
    /// Exact (vertices, faces) budget to refine to, if any.
    exact: Option<(usize, usize)>,
}

pub fn builtin(name: &str) -> Result<GarmentTemplate> {
    match name {
        "quad" => Ok(build_template(&quad_spec())),
        "mini" => Ok(build_template(&mini_spec())),
        "tshirt" => {
            static CACHE: OnceLock<GarmentTemplate> = OnceLock::new();
            Ok(CACHE.get_or_init(|| build_template(&tshirt_spec())).clone())
        }
        other => Err(Error::UnknownTemplate { name: other.into() }),
    }
}

pub fn builtin_names() -> &'static [&'static str] {
    &["quad", "mini", "tshirt"]
}

fn quad_spec() -> Spec {
    Spec {
        category: "quad",
        cell: 0.125,
        body: CellRect { x0: -6, y0: -8, x1: 6, y1: 8 },
        sleeves: None,
        z_base: 0.05,
        z_lift: 0.0,
        fold_angle: 0.0,
        exact: None,
    }
}

fn mini_spec() -> Spec {
    Spec {
        category: "mini",
        cell: 0.0625,
        body: CellRect { x0: -8, y0: -11, x1: 8, y1: 12 },
        sleeves: Some([
            CellRect { x0: -16, y0: 4, x1: -8, y1: 11 },
            CellRect { x0: 8, y0: 4, x1: 16, y1: 11 },
        ]),
        z_base: 0.05,
        z_lift: 0.04,
        fold_angle: 110f64.to_radians(),
        exact: None,
    }
}

fn tshirt_spec() -> Spec {
    Spec {
        category: "tshirt",
        cell: 0.02,
        body: CellRect { x0: -25, y0: -32, x1: 25, y1: 32 },
        sleeves: Some([
            CellRect { x0: -50, y0: 13, x1: -25, y1: 24 },
            CellRect { x0: 25, y0: 13, x1: 50, y1: 24 },
        ]),
        z_base: 0.05,
        z_lift: 0.04,
        fold_angle: 110f64.to_radians(),
        exact: Some((8523, 16039)),
    }
}

fn smoothstep(x: f64) -> f64 {
    let t = x.clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

struct Bounds {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

fn world_bounds(spec: &Spec) -> Bounds {
    let mut x0 = spec.body.x0;
    let mut x1 = spec.body.x1;
    let mut y0 = spec.body.y0;
    let mut y1 = spec.body.y1;
    if let Some(sleeves) = &spec.sleeves {
        for s in sleeves {
            x0 = x0.min(s.x0);
            x1 = x1.max(s.x1);
            y0 = y0.min(s.y0);
            y1 = y1.max(s.y1);
        }
    }
    Bounds {
        x0: x0 as f64 * spec.cell,
        x1: x1 as f64 * spec.cell,
        y0: y0 as f64 * spec.cell,
        y1: y1 as f64 * spec.cell,
    }
}

/// Panel z profile: base offset plus a smooth sleeve lift beyond the body.
fn profile_z(spec: &Spec, x: f64) -> f64 {
    let body_hw = spec.body.x1 as f64 * spec.cell;
    let tip = world_bounds(spec).x1;
    if spec.z_lift == 0.0 || tip <= body_hw {
        return spec.z_base;
    }
    spec.z_base + spec.z_lift * smoothstep((x.abs() - body_hw) / (tip - body_hw))
}

const CHART_MARGIN: f64 = 0.03;
const CHART_V0: f64 = 0.08;

/// World (x, y) -> UV for one panel. The back chart mirrors u so it reads
/// like a view from behind.
fn chart_uv(spec: &Spec, x: f64, y: f64, back: bool) -> Vec2 {
    let b = world_bounds(spec);
    let half = 0.5 - 2.0 * CHART_MARGIN;
    let scale = (half / (b.x1 - b.x0)).min((1.0 - CHART_V0 - 0.08) / (b.y1 - b.y0));
    let span = (b.x1 - b.x0) * scale;
    let v = CHART_V0 + (y - b.y0) * scale;
    if back {
        let u1 = 1.0 - CHART_MARGIN - (half - span) / 2.0;
        Vec2::new(u1 - (x - b.x0) * scale, v)
    } else {
        let u0 = CHART_MARGIN + (half - span) / 2.0;
        Vec2::new(u0 + (x - b.x0) * scale, v)
    }
}

fn cell_inside(spec: &Spec, x: i64, y: i64) -> bool {
    if spec.body.contains_cell(x, y) {
        return true;
    }
    if let Some(sleeves) = &spec.sleeves {
        return sleeves.iter().any(|s| s.contains_cell(x, y));
    }
    false
}

fn build_template(spec: &Spec) -> GarmentTemplate {
    let mut vertices: Vec<Vec3> = Vec::new();
    let mut uvs: Vec<Vec2> = Vec::new();
    let mut faces: Vec<[usize; 3]> = Vec::new();

    let b = world_bounds(spec);
    let (cx0, cx1) = ((b.x0 / spec.cell).round() as i64, (b.x1 / spec.cell).round() as i64);
    let (cy0, cy1) = ((b.y0 / spec.cell).round() as i64, (b.y1 / spec.cell).round() as i64);

    for back in [false, true] {
        let mut index: HashMap<(i64, i64), usize> = HashMap::new();
        let zsign = if back { -1.0 } else { 1.0 };
        for cy in cy0..cy1 {
            for cx in cx0..cx1 {
                if !cell_inside(spec, cx, cy) {
                    continue;
                }
                let mut corner = |ix: i64, iy: i64| -> usize {
                    *index.entry((ix, iy)).or_insert_with(|| {
                        let x = ix as f64 * spec.cell;
                        let y = iy as f64 * spec.cell;
                        vertices.push(Vec3::new(x, y, zsign * profile_z(spec, x)));
                        uvs.push(chart_uv(spec, x, y, back));
                        vertices.len() - 1
                    })
                };
                let v00 = corner(cx, cy);
                let v10 = corner(cx + 1, cy);
                let v11 = corner(cx + 1, cy + 1);
                let v01 = corner(cx, cy + 1);
                if back {
                    // Reversed winding: normals face -z.
                    faces.push([v00, v11, v10]);
                    faces.push([v00, v01, v11]);
                } else {
                    faces.push([v00, v10, v11]);
                    faces.push([v00, v11, v01]);
                }
            }
        }
    }

    if let Some((v_target, f_target)) = spec.exact {
        let dv = v_target.checked_sub(vertices.len()).expect("template grid exceeds budget");
        let df = f_target.checked_sub(faces.len()).expect("template grid exceeds budget");
        assert!(dv <= df && df <= 2 * dv, "no split/ear mix reaches the budget");
        let splits = df - dv;
        let ears = 2 * dv - df;
        add_boundary_ears(&mut vertices, &mut uvs, &mut faces, ears);
        split_largest_faces(&mut vertices, &mut uvs, &mut faces, splits);
        assert_eq!(vertices.len(), v_target);
        assert_eq!(faces.len(), f_target);
    }

    let face_uvs = faces.clone();
    let landmarks = place_landmarks(spec, &vertices);
    let mesh = TemplateMesh {
        vertices,
        faces,
        uvs,
        face_uvs,
        landmarks,
        category: spec.category.into(),
    };
    mesh.validate().expect("procedural template must be valid");

    let blendshapes = make_blendshapes(spec, &mesh);
    GarmentTemplate { mesh, blendshapes }
}

/// Appends `count` small triangles on boundary edges, each adding exactly
/// one vertex and one face. Ear vertices sit just outside the sheet, so the
/// silhouette change is a fraction of a grid cell.
fn add_boundary_ears(
    vertices: &mut Vec<Vec3>,
    uvs: &mut Vec<Vec2>,
    faces: &mut Vec<[usize; 3]>,
    count: usize,
) {
    if count == 0 {
        return;
    }
    // Directed boundary edges with the face's opposite corner.
    let mut edge_count: HashMap<(usize, usize), usize> = HashMap::new();
    for f in faces.iter() {
        for k in 0..3 {
            let (a, b) = (f[k], f[(k + 1) % 3]);
            *edge_count.entry((a.min(b), a.max(b))).or_insert(0) += 1;
        }
    }
    let mut queue: std::collections::VecDeque<(usize, usize, usize)> = std::collections::VecDeque::new();
    let mut boundary: Vec<(usize, usize, usize)> = Vec::new();
    for f in faces.iter() {
        for k in 0..3 {
            let (a, b) = (f[k], f[(k + 1) % 3]);
            if edge_count[&(a.min(b), a.max(b))] == 1 {
                boundary.push((a, b, f[(k + 2) % 3]));
            }
        }
    }
    boundary.sort_unstable();
    queue.extend(boundary);

    for _ in 0..count {
        let (a, b, opp) = queue.pop_front().expect("ran out of boundary edges");
        let (pa, pb, popp) = (vertices[a], vertices[b], vertices[opp]);
        let mid = 0.5 * (pa + pb);
        let edge = pb - pa;
        let len = (edge.x * edge.x + edge.y * edge.y).sqrt().max(1e-9);
        // In-plane perpendicular pointing away from the face interior.
        let mut n = Vec3::new(-edge.y, edge.x, 0.0) / len;
        if n.dot(&(popp - mid)) > 0.0 {
            n = -n;
        }
        let pos = Vec3::new(mid.x + 0.3 * len * n.x, mid.y + 0.3 * len * n.y, mid.z);

        let (ua, ub, uopp) = (uvs[a], uvs[b], uvs[opp]);
        let umid = 0.5 * (ua + ub);
        let uedge = ub - ua;
        let ulen = uedge.norm().max(1e-12);
        let mut un = Vec2::new(-uedge.y, uedge.x) / ulen;
        if un.dot(&(uopp - umid)) > 0.0 {
            un = -un;
        }
        let uv = umid + 0.3 * ulen * un;

        vertices.push(pos);
        uvs.push(uv);
        let c = vertices.len() - 1;
        // Traverse the shared edge opposite to the interior face.
        faces.push([b, a, c]);
        queue.push_back((a, c, b));
        queue.push_back((c, b, a));
    }
}

/// Splits the largest face at its centroid `count` times; each split adds
/// one vertex and two faces.
fn split_largest_faces(
    vertices: &mut Vec<Vec3>,
    uvs: &mut Vec<Vec2>,
    faces: &mut Vec<[usize; 3]>,
    count: usize,
) {
    if count == 0 {
        return;
    }
    let area2 = |vs: &[Vec3], f: &[usize; 3]| -> f64 {
        (vs[f[1]] - vs[f[0]]).cross(&(vs[f[2]] - vs[f[0]])).norm()
    };
    let mut areas: Vec<f64> = faces.iter().map(|f| area2(vertices, f)).collect();
    for _ in 0..count {
        let mut best = 0usize;
        for (i, &a) in areas.iter().enumerate() {
            if a > areas[best] {
                best = i;
            }
        }
        let [a, b, c] = faces[best];
        let pos = (vertices[a] + vertices[b] + vertices[c]) / 3.0;
        let uv = (uvs[a] + uvs[b] + uvs[c]) / 3.0;
        vertices.push(pos);
        uvs.push(uv);
        let d = vertices.len() - 1;
        faces[best] = [a, b, d];
        faces.push([b, c, d]);
        faces.push([c, a, d]);
        areas[best] = area2(vertices, &faces[best]);
        areas.push(area2(vertices, &faces[faces.len() - 2]));
        areas.push(area2(vertices, &faces[faces.len() - 1]));
    }
}

fn place_landmarks(spec: &Spec, vertices: &[Vec3]) -> BTreeMap<String, usize> {
    let b = world_bounds(spec);
    let body_hw = spec.body.x1 as f64 * spec.cell;
    let top = spec.body.y1 as f64 * spec.cell;
    let bottom = spec.body.y0 as f64 * spec.cell;
    let mut targets: Vec<(String, f64, f64)> = Vec::new();
    if let Some(sleeves) = &spec.sleeves {
        let s = &sleeves[1];
        let (sy0, sy1) = (s.y0 as f64 * spec.cell, s.y1 as f64 * spec.cell);
        let tip = s.x1 as f64 * spec.cell;
        for (name, x, y) in [
            ("collar_l", -0.4 * body_hw, top),
            ("collar_r", 0.4 * body_hw, top),
            ("shoulder_l", -body_hw, top),
            ("shoulder_r", body_hw, top),
            ("cuff_top_l", -tip, sy1),
            ("cuff_top_r", tip, sy1),
            ("cuff_bot_l", -tip, sy0),
            ("cuff_bot_r", tip, sy0),
            ("armpit_l", -body_hw, sy0),
            ("armpit_r", body_hw, sy0),
            ("hem_l", -body_hw, bottom),
            ("hem_r", body_hw, bottom),
        ] {
            targets.push((name.into(), x, y));
        }
    } else {
        for (name, x, y) in [
            ("corner_tl", b.x0, top),
            ("corner_tr", b.x1, top),
            ("corner_bl", b.x0, bottom),
            ("corner_br", b.x1, bottom),
            ("mid_l", b.x0, 0.0),
            ("mid_r", b.x1, 0.0),
        ] {
            targets.push((name.into(), x, y));
        }
    }

    let mut landmarks = BTreeMap::new();
    for back in [false, true] {
        let prefix = if back { "back" } else { "front" };
        for (name, x, y) in &targets {
            let mut best = usize::MAX;
            let mut best_d = f64::INFINITY;
            for (i, v) in vertices.iter().enumerate() {
                if (v.z < 0.0) != back {
                    continue;
                }
                let d = (v.x - x).powi(2) + (v.y - y).powi(2);
                if d < best_d {
                    best_d = d;
                    best = i;
                }
            }
            landmarks.insert(format!("{prefix}_{name}"), best);
        }
    }
    landmarks
}

fn make_blendshapes(spec: &Spec, mesh: &TemplateMesh) -> BlendshapeSet {
    let body_hw = spec.body.x1 as f64 * spec.cell;
    let bottom = spec.body.y0 as f64 * spec.cell;
    let mut shapes: Vec<Vec<Vec3>> = Vec::new();
    let mut names: Vec<String> = Vec::new();

    if let Some(sleeves) = &spec.sleeves {
        let pivot_y = sleeves[1].y1 as f64 * spec.cell;
        for (name, side) in [("sleeve_fold_l", -1.0f64), ("sleeve_fold_r", 1.0f64)] {
            let pivot = Vec2::new(side * body_hw, pivot_y);
            // Clockwise for the right sleeve, counterclockwise for the left:
            // both fold down across the chest.
            let angle = -side * spec.fold_angle;
            let (sa, ca) = angle.sin_cos();
            let delta = mesh
                .vertices
                .iter()
                .map(|v| {
                    let mask = smoothstep((side * v.x - body_hw) / (2.0 * spec.cell));
                    if mask == 0.0 {
                        return Vec3::zeros();
                    }
                    let rel = Vec2::new(v.x - pivot.x, v.y - pivot.y);
                    let rot = Vec2::new(ca * rel.x - sa * rel.y, sa * rel.x + ca * rel.y);
                    mask * Vec3::new(rot.x - rel.x, rot.y - rel.y, 0.0)
                })
                .collect();
            shapes.push(delta);
            names.push(name.into());
        }
    }

    // Hem taper: narrows the garment toward the hem.
    let taper = mesh
        .vertices
        .iter()
        .map(|v| {
            let m = smoothstep((-0.1 - v.y) / (-0.1 - bottom).max(1e-9));
            Vec3::new(-0.25 * v.x * m, 0.0, 0.0)
        })
        .collect();
    shapes.push(taper);
    names.push("hem_taper".into());

    BlendshapeSet::new(mesh, shapes, names).expect("procedural blendshapes are consistent")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::rasterize_uv_domain;

    #[test]
    fn builtin_templates_validate() {
        for name in builtin_names() {
            let t = builtin(name).unwrap();
            t.mesh.validate().unwrap();
            assert!(!t.mesh.landmarks.is_empty());
            assert!(t.blendshapes.len() >= 1);
            assert!(rasterize_uv_domain(&t.mesh, 128).is_ok(), "{name} has a domain");
        }
    }

    #[test]
    fn unknown_template_is_an_error() {
        assert!(matches!(builtin("cape"), Err(Error::UnknownTemplate { .. })));
    }

    #[test]
    fn tshirt_hits_the_exact_budget() {
        let t = builtin("tshirt").unwrap();
        assert_eq!(t.mesh.vertices.len(), 8523);
        assert_eq!(t.mesh.faces.len(), 16039);
        // Stays under the template size ceiling.
        assert!(t.mesh.vertices.len() < 10_000);
    }

    #[test]
    fn panels_are_mirrored_in_z() {
        let t = builtin("mini").unwrap();
        let front: Vec<&Vec3> = t.mesh.vertices.iter().filter(|v| v.z > 0.0).collect();
        let back: Vec<&Vec3> = t.mesh.vertices.iter().filter(|v| v.z < 0.0).collect();
        assert_eq!(front.len(), back.len());
    }

    #[test]
    fn sleeve_fold_moves_the_cuff_over_the_body() {
        let t = builtin("mini").unwrap();
        let cuff = t.mesh.landmarks["front_cuff_top_r"];
        let mut coeffs = vec![0.0; t.blendshapes.len()];
        let idx = t.blendshapes.names().iter().position(|n| n == "sleeve_fold_r").unwrap();
        coeffs[idx] = 1.0;
        let deformed = t.blendshapes.apply(&coeffs).unwrap();
        let p = deformed[cuff];
        assert!(p.x.abs() < 0.5, "cuff x = {} should fold inside the body", p.x);
        // z keeps its lift so the folded sleeve sits in front of the body.
        assert!(p.z > 0.05);
    }

    #[test]
    fn landmarks_sit_on_their_panels() {
        let t = builtin("tshirt").unwrap();
        for (name, &v) in &t.mesh.landmarks {
            let z = t.mesh.vertices[v].z;
            if name.starts_with("front_") {
                assert!(z > 0.0, "{name}");
            } else {
                assert!(z < 0.0, "{name}");
            }
        }
    }
}
