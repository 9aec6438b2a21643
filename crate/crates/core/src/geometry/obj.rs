//! ASCII OBJ reader/writer for the template format: `v`, `vt`, and
//! triangular `f v/vt` records. Everything else (normals, groups,
//! materials) is skipped on read and never written.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::TemplateMesh;
use crate::{Error, Result, Vec2, Vec3};

pub fn load_obj(path: impl AsRef<Path>) -> Result<TemplateMesh> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_obj(&text, &path.display().to_string())
}

pub(crate) fn parse_obj(text: &str, path: &str) -> Result<TemplateMesh> {
    let mut vertices = Vec::new();
    let mut uvs: Vec<Vec2> = Vec::new();
    let mut faces = Vec::new();
    let mut face_uvs = Vec::new();

    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut tokens = trimmed.split_whitespace();
        let tag = tokens.next().unwrap();
        match tag {
            "v" => {
                let coords = parse_floats(&mut tokens, 3, path, line, "v")?;
                vertices.push(Vec3::new(coords[0], coords[1], coords[2]));
            }
            "vt" => {
                let coords = parse_floats(&mut tokens, 2, path, line, "vt")?;
                uvs.push(Vec2::new(coords[0], coords[1]));
            }
            "f" => {
                let corners: Vec<&str> = tokens.collect();
                if corners.len() != 3 {
                    return Err(Error::NonTriangleFace {
                        path: path.into(),
                        line,
                        corners: corners.len(),
                    });
                }
                let mut f = [0usize; 3];
                let mut fuv = [0usize; 3];
                for (k, corner) in corners.iter().enumerate() {
                    let mut parts = corner.split('/');
                    let vi = parse_index(parts.next(), path, line, "vertex", vertices.len())?;
                    let ti = match parts.next() {
                        Some(s) if !s.is_empty() => {
                            parse_index(Some(s), path, line, "uv", uvs.len())?
                        }
                        _ => {
                            return Err(Error::MissingUv { path: path.into(), line, corner: k })
                        }
                    };
                    f[k] = vi;
                    fuv[k] = ti;
                }
                faces.push(f);
                face_uvs.push(fuv);
            }
            // Normals, smoothing groups, objects, materials: irrelevant here.
            "vn" | "s" | "o" | "g" | "usemtl" | "mtllib" => {}
            other => {
                return Err(Error::ObjParse {
                    path: path.into(),
                    line,
                    msg: format!("unknown record \"{other}\""),
                })
            }
        }
    }

    let mesh = TemplateMesh {
        vertices,
        faces,
        uvs,
        face_uvs,
        landmarks: BTreeMap::new(),
        category: String::new(),
    };
    mesh.validate()?;
    Ok(mesh)
}

fn parse_floats<'a>(
    tokens: &mut impl Iterator<Item = &'a str>,
    n: usize,
    path: &str,
    line: usize,
    tag: &str,
) -> Result<Vec<f64>> {
    let vals: Vec<&str> = tokens.collect();
    if vals.len() != n {
        return Err(Error::ObjParse {
            path: path.into(),
            line,
            msg: format!("{tag} record needs {n} components, got {}", vals.len()),
        });
    }
    vals.iter()
        .map(|s| {
            s.parse::<f64>().map_err(|_| Error::ObjParse {
                path: path.into(),
                line,
                msg: format!("bad number \"{s}\""),
            })
        })
        .collect()
}

fn parse_index(
    token: Option<&str>,
    path: &str,
    line: usize,
    what: &'static str,
    count: usize,
) -> Result<usize> {
    let s = token.ok_or_else(|| Error::ObjParse {
        path: path.into(),
        line,
        msg: "empty face corner".into(),
    })?;
    let idx: isize = s.parse().map_err(|_| Error::ObjParse {
        path: path.into(),
        line,
        msg: format!("bad index \"{s}\""),
    })?;
    // OBJ indices are 1-based; negative (relative) indices are not supported.
    if idx < 1 || idx as usize > count {
        return Err(Error::IndexOutOfRange { path: path.into(), line, what, index: idx, count });
    }
    Ok(idx as usize - 1)
}

pub fn save_obj(mesh: &TemplateMesh, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    // f64 Display prints the shortest representation that parses back to the
    // same bits, so a write/read cycle is lossless.
    for v in &mesh.vertices {
        writeln!(out, "v {} {} {}", v.x, v.y, v.z).unwrap();
    }
    for uv in &mesh.uvs {
        writeln!(out, "vt {} {}", uv.x, uv.y).unwrap();
    }
    for (f, fuv) in mesh.faces.iter().zip(&mesh.face_uvs) {
        writeln!(
            out,
            "f {}/{} {}/{} {}/{}",
            f[0] + 1,
            fuv[0] + 1,
            f[1] + 1,
            fuv[1] + 1,
            f[2] + 1,
            fuv[2] + 1
        )
        .unwrap();
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::templates;

    const QUAD_OBJ: &str = "\
# two-triangle quad
v 0 0 0
v 1 0 0
v 1 1 0
v 0 1 0
vt 0 0
vt 1 0
vt 1 1
vt 0 1
f 1/1 2/2 3/3
f 1/1 3/3 4/4
";

    #[test]
    fn parses_quad_fixture() {
        let mesh = parse_obj(QUAD_OBJ, "quad.obj").unwrap();
        assert_eq!(mesh.vertices.len(), 4);
        assert_eq!(mesh.uvs.len(), 4);
        assert_eq!(mesh.faces, vec![[0, 1, 2], [0, 2, 3]]);
        assert_eq!(mesh.face_uvs, vec![[0, 1, 2], [0, 2, 3]]);
    }

    #[test]
    fn rejects_quad_face_with_line_number() {
        let text = format!("{QUAD_OBJ}f 1/1 2/2 3/3 4/4\n");
        match parse_obj(&text, "bad.obj") {
            Err(Error::NonTriangleFace { line, corners, .. }) => {
                assert_eq!(line, 12);
                assert_eq!(corners, 4);
            }
            other => panic!("expected NonTriangleFace, got {other:?}"),
        }
    }

    #[test]
    fn rejects_missing_uv_index() {
        let text = "v 0 0 0\nv 1 0 0\nv 0 1 0\nvt 0 0\nf 1 2 3\n";
        assert!(matches!(
            parse_obj(text, "x.obj"),
            Err(Error::MissingUv { line: 5, corner: 0, .. })
        ));
    }

    #[test]
    fn rejects_out_of_range_index() {
        let text = "v 0 0 0\nv 1 0 0\nv 0 1 0\nvt 0 0\nf 1/1 2/1 9/1\n";
        assert!(matches!(
            parse_obj(text, "x.obj"),
            Err(Error::IndexOutOfRange { line: 5, index: 9, .. })
        ));
    }

    #[test]
    fn rejects_uv_outside_unit_square() {
        let text = "v 0 0 0\nv 1 0 0\nv 0 1 0\nvt 0 0\nvt 1.5 0\nvt 0 1\nf 1/1 2/2 3/3\n";
        assert!(matches!(parse_obj(text, "x.obj"), Err(Error::UvOutOfRange { .. })));
    }

    #[test]
    fn shipped_tshirt_template_has_published_size() {
        let mesh = templates::builtin("tshirt").unwrap().mesh;
        assert_eq!(mesh.vertices.len(), 8523);
        assert_eq!(mesh.faces.len(), 16039);
    }

    #[test]
    fn write_read_round_trip_is_lossless() {
        let mesh = templates::builtin("mini").unwrap().mesh;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mini.obj");
        save_obj(&mesh, &path).unwrap();
        let reloaded = load_obj(&path).unwrap();
        assert_eq!(mesh.vertices, reloaded.vertices);
        assert_eq!(mesh.faces, reloaded.faces);
        assert_eq!(mesh.uvs, reloaded.uvs);
        assert_eq!(mesh.face_uvs, reloaded.face_uvs);
        // A second cycle reproduces the file byte for byte.
        let path2 = dir.path().join("mini2.obj");
        save_obj(&reloaded, &path2).unwrap();
        assert_eq!(fs::read(&path).unwrap(), fs::read(&path2).unwrap());
    }
}
