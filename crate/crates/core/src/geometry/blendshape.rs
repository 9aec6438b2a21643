//! Blendshapes as per-vertex deltas on a fixed topology. Shape files are
//! ordinary OBJs holding the fully-applied target; the delta is the
//! difference to the base template.

use std::path::Path;

use super::{load_obj, TemplateMesh};
use crate::{Error, Result, Vec3};

#[derive(Debug, Clone)]
pub struct BlendshapeSet {
    base: Vec<Vec3>,
    shapes: Vec<Vec<Vec3>>,
    names: Vec<String>,
}

impl BlendshapeSet {
    pub fn new(base: &TemplateMesh, shapes: Vec<Vec<Vec3>>, names: Vec<String>) -> Result<Self> {
        if shapes.len() != names.len() {
            return Err(Error::LengthMismatch {
                what: "blendshape names",
                expected: shapes.len(),
                got: names.len(),
            });
        }
        for s in &shapes {
            if s.len() != base.vertices.len() {
                return Err(Error::LengthMismatch {
                    what: "blendshape delta",
                    expected: base.vertices.len(),
                    got: s.len(),
                });
            }
        }
        Ok(Self { base: base.vertices.clone(), shapes, names })
    }

    /// Loads shapes from target OBJs sharing the base topology.
    pub fn from_target_objs(
        base: &TemplateMesh,
        targets: &[(String, impl AsRef<Path>)],
    ) -> Result<Self> {
        let mut shapes = Vec::new();
        let mut names = Vec::new();
        for (name, path) in targets {
            let target = load_obj(path)?;
            if target.faces != base.faces {
                return Err(Error::SizeMismatch {
                    what: "blendshape topology",
                    expected: format!("{} faces of base", base.faces.len()),
                    got: format!("{} faces", target.faces.len()),
                });
            }
            let delta = target
                .vertices
                .iter()
                .zip(&base.vertices)
                .map(|(t, b)| t - b)
                .collect();
            shapes.push(delta);
            names.push(name.clone());
        }
        Self::new(base, shapes, names)
    }

    pub fn len(&self) -> usize {
        self.shapes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shapes.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn base_vertices(&self) -> &[Vec3] {
        &self.base
    }

    /// base + sum_i coeff_i * delta_i
    pub fn apply(&self, coeffs: &[f64]) -> Result<Vec<Vec3>> {
        if coeffs.len() != self.shapes.len() {
            return Err(Error::LengthMismatch {
                what: "blendshape coeffs",
                expected: self.shapes.len(),
                got: coeffs.len(),
            });
        }
        let mut out = self.base.clone();
        for (c, shape) in coeffs.iter().zip(&self.shapes) {
            if *c == 0.0 {
                continue;
            }
            for (v, d) in out.iter_mut().zip(shape) {
                *v += *c * d;
            }
        }
        Ok(out)
    }
}

/// Convenience wrapper matching the rest of the pipeline's vocabulary.
pub fn apply_blendshapes(set: &BlendshapeSet, coeffs: &[f64]) -> Result<Vec<Vec3>> {
    set.apply(coeffs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::templates;
    use proptest::prelude::*;

    fn fixture() -> (TemplateMesh, BlendshapeSet) {
        let t = templates::builtin("mini").unwrap();
        (t.mesh, t.blendshapes)
    }

    #[test]
    fn zero_coeffs_reproduce_base() {
        let (mesh, set) = fixture();
        let out = set.apply(&vec![0.0; set.len()]).unwrap();
        assert_eq!(out, mesh.vertices);
    }

    #[test]
    fn unit_coeff_adds_full_delta() {
        let (mesh, set) = fixture();
        let mut coeffs = vec![0.0; set.len()];
        coeffs[0] = 1.0;
        let out = set.apply(&coeffs).unwrap();
        let target = set.shapes[0]
            .iter()
            .zip(&mesh.vertices)
            .map(|(d, b)| b + d)
            .collect::<Vec<_>>();
        assert_eq!(out, target);
    }

    #[test]
    fn mixed_coeffs_match_scalar_loop_oracle() {
        let (_, set) = fixture();
        let mut coeffs = vec![0.0; set.len()];
        coeffs[0] = 0.3;
        coeffs[1] = 0.7;
        let out = set.apply(&coeffs).unwrap();
        for (i, v) in out.iter().enumerate() {
            for axis in 0..3 {
                let expected = set.base[i][axis]
                    + 0.3 * set.shapes[0][i][axis]
                    + 0.7 * set.shapes[1][i][axis];
                assert!((v[axis] - expected).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn coeff_length_mismatch_is_error() {
        let (_, set) = fixture();
        assert!(set.apply(&[0.5]).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        // apply is affine in the coefficients:
        // apply(a*c1 + b*c2) - base = a*(apply(c1) - base) + b*(apply(c2) - base)
        #[test]
        fn apply_is_affine_in_coeffs(
            c1 in proptest::collection::vec(-1.0f64..1.0, 3),
            c2 in proptest::collection::vec(-1.0f64..1.0, 3),
            a in -1.0f64..1.0,
            b in -1.0f64..1.0,
        ) {
            let (_, set) = fixture();
            let mixed: Vec<f64> = c1.iter().zip(&c2).map(|(x, y)| a * x + b * y).collect();
            let lhs = set.apply(&mixed).unwrap();
            let f1 = set.apply(&c1).unwrap();
            let f2 = set.apply(&c2).unwrap();
            for i in 0..lhs.len() {
                let rhs = set.base[i] + a * (f1[i] - set.base[i]) + b * (f2[i] - set.base[i]);
                prop_assert!((lhs[i] - rhs).norm() < 1e-12);
            }
        }
    }
}
