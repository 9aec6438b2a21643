//! UV-constrained fluid-style inpainting. Hole texels are filled by
//! transporting image smoothness (the Laplacian) along isophotes, blended
//! with isotropic diffusion; every stencil is restricted to texels inside
//! the UV domain, so chart boundaries act as insulated walls and texels
//! outside the charts are never read or written.

use super::{RefineParams, ResidualMask};
use crate::geometry::DomainMask;
use crate::render::TextureMap;
use crate::{Error, Result};

/// Fills every hole texel of `texture`; all other texels pass through
/// bitwise unchanged.
pub fn inpaint_ns(
    texture: &TextureMap,
    mask: &ResidualMask,
    domain: &DomainMask,
    params: &RefineParams,
) -> Result<TextureMap> {
    params.validate()?;
    let res = texture.resolution;
    if mask.resolution != res || domain.resolution != res {
        return Err(Error::SizeMismatch {
            what: "inpaint inputs",
            expected: format!("{res}x{res}"),
            got: format!("mask {}, domain {}", mask.resolution, domain.resolution),
        });
    }
    if mask.hole.iter().zip(&domain.inside).any(|(&h, &d)| h && !d) {
        return Err(Error::HoleOutsideDomain);
    }

    let holes: Vec<usize> = (0..res * res).filter(|&i| mask.hole[i]).collect();
    let mut out = texture.clone();
    if holes.is_empty() {
        return Ok(out);
    }

    let components = hole_components(&mask.hole, res);
    let bounds = component_bounds(texture, &mask.hole, &domain.inside, &components, res);

    for ch in 0..3 {
        let mut u: Vec<f64> = (0..res * res).map(|i| texture.data[3 * i + ch]).collect();
        seed_holes(&mut u, &mask.hole, &domain.inside, &components, &bounds, ch, res);
        evolve(&mut u, &holes, &mask.hole, &domain.inside, &components, &bounds, ch, res, params);
        for &i in &holes {
            out.data[3 * i + ch] = u[i];
        }
    }
    Ok(out)
}

const OFFS8: [(i64, i64); 8] =
    [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)];

fn neighbors8(i: usize, res: usize) -> impl Iterator<Item = usize> {
    let (r, c) = ((i / res) as i64, (i % res) as i64);
    OFFS8.iter().filter_map(move |&(dr, dc)| {
        let (nr, nc) = (r + dr, c + dc);
        if nr < 0 || nc < 0 || nr >= res as i64 || nc >= res as i64 {
            None
        } else {
            Some(nr as usize * res + nc as usize)
        }
    })
}

/// Labels 8-connected hole components; non-hole texels get usize::MAX.
fn hole_components(hole: &[bool], res: usize) -> Vec<usize> {
    let mut label = vec![usize::MAX; res * res];
    let mut next = 0usize;
    for start in 0..res * res {
        if !hole[start] || label[start] != usize::MAX {
            continue;
        }
        let mut stack = vec![start];
        label[start] = next;
        while let Some(i) = stack.pop() {
            for j in neighbors8(i, res) {
                if hole[j] && label[j] == usize::MAX {
                    label[j] = next;
                    stack.push(j);
                }
            }
        }
        next += 1;
    }
    label
}

/// Per-component, per-channel [min, max] over the in-domain known texels
/// bordering the component. Components with no known border fall back to a
/// neutral 0.5 (stored as an empty range around it).
fn component_bounds(
    texture: &TextureMap,
    hole: &[bool],
    inside: &[bool],
    label: &[usize],
    res: usize,
) -> Vec<[[f64; 2]; 3]> {
    let ncomp = label.iter().filter(|&&l| l != usize::MAX).max().map_or(0, |&l| l + 1);
    let mut bounds = vec![[[f64::INFINITY, f64::NEG_INFINITY]; 3]; ncomp];
    for i in 0..res * res {
        if !hole[i] {
            continue;
        }
        let comp = label[i];
        for j in neighbors8(i, res) {
            if inside[j] && !hole[j] {
                for ch in 0..3 {
                    let v = texture.data[3 * j + ch];
                    bounds[comp][ch][0] = bounds[comp][ch][0].min(v);
                    bounds[comp][ch][1] = bounds[comp][ch][1].max(v);
                }
            }
        }
    }
    for b in &mut bounds {
        for ch in 0..3 {
            if b[ch][0] > b[ch][1] {
                b[ch] = [0.5, 0.5];
            }
        }
    }
    bounds
}

/// Onion-peel initialization: hole texels are visited in order of distance
/// from known texels and take the mean of their already-valued in-domain
/// neighbors, giving the iteration a boundary-consistent starting field.
fn seed_holes(
    u: &mut [f64],
    hole: &[bool],
    inside: &[bool],
    label: &[usize],
    bounds: &[[[f64; 2]; 3]],
    ch: usize,
    res: usize,
) {
    let mut assigned: Vec<bool> = (0..res * res).map(|i| inside[i] && !hole[i]).collect();
    let mut frontier: Vec<usize> = (0..res * res)
        .filter(|&i| hole[i] && neighbors8(i, res).any(|j| assigned[j]))
        .collect();
    let mut seen = vec![false; res * res];
    for &i in &frontier {
        seen[i] = true;
    }
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for &i in &frontier {
            let (mut sum, mut n) = (0.0, 0);
            for j in neighbors8(i, res) {
                if assigned[j] {
                    sum += u[j];
                    n += 1;
                }
            }
            u[i] = if n > 0 { sum / n as f64 } else { 0.5 };
            for j in neighbors8(i, res) {
                if hole[j] && !seen[j] {
                    seen[j] = true;
                    next.push(j);
                }
            }
        }
        for &i in &frontier {
            assigned[i] = true;
        }
        frontier = next;
    }
    // Components with no known border never enter the sweep.
    for i in 0..res * res {
        if hole[i] && !assigned[i] {
            u[i] = bounds[label[i]][ch][0];
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn evolve(
    u: &mut Vec<f64>,
    holes: &[usize],
    hole: &[bool],
    inside: &[bool],
    label: &[usize],
    bounds: &[[[f64; 2]; 3]],
    ch: usize,
    res: usize,
    params: &RefineParams,
) {
    let dt = params.ns_step;
    let alpha = params.ns_isophote_weight;
    // Texels where the Laplacian is needed: holes and their in-domain ring.
    let mut need_lap: Vec<bool> = hole.to_vec();
    for &i in holes {
        for j in neighbors8(i, res) {
            if inside[j] {
                need_lap[j] = true;
            }
        }
    }
    let lap_sites: Vec<usize> = (0..res * res).filter(|&i| need_lap[i]).collect();

    let mut lap = vec![0.0; res * res];
    let mut next = u.clone();
    for _ in 0..params.ns_iterations {
        for &i in &lap_sites {
            lap[i] = laplacian(u, inside, i, res);
        }
        for &i in holes {
            let (gx, gy) = grad(u, inside, i, res);
            let norm = (gx * gx + gy * gy).sqrt() + 1e-12;
            // Isophote direction: perpendicular to the intensity gradient.
            let (nx, ny) = (-gy / norm, gx / norm);
            let (lx, ly) = grad(&lap, inside, i, res);
            let transport = lx * nx + ly * ny;
            let v = u[i] + dt * ((1.0 - alpha) * lap[i] + alpha * transport);
            let b = bounds[label[i]][ch];
            next[i] = v.clamp(b[0], b[1]);
        }
        for &i in holes {
            u[i] = next[i];
        }
    }
}

/// 4-neighbor Laplacian; neighbors outside the grid or the UV domain are
/// reflected (their term drops out), never read.
fn laplacian(u: &[f64], inside: &[bool], i: usize, res: usize) -> f64 {
    let (r, c) = (i / res, i % res);
    let mut acc = 0.0;
    let mut take = |j: usize| {
        if inside[j] {
            acc += u[j] - u[i];
        }
    };
    if r > 0 {
        take(i - res);
    }
    if r + 1 < res {
        take(i + res);
    }
    if c > 0 {
        take(i - 1);
    }
    if c + 1 < res {
        take(i + 1);
    }
    acc
}

/// Central-difference gradient, degrading to one-sided (or zero) where a
/// neighbor is outside the grid or the UV domain.
fn grad(u: &[f64], inside: &[bool], i: usize, res: usize) -> (f64, f64) {
    let (r, c) = (i / res, i % res);
    let axis = |lo: Option<usize>, hi: Option<usize>| -> f64 {
        let lo = lo.filter(|&j| inside[j]);
        let hi = hi.filter(|&j| inside[j]);
        match (lo, hi) {
            (Some(l), Some(h)) => (u[h] - u[l]) / 2.0,
            (Some(l), None) => u[i] - u[l],
            (None, Some(h)) => u[h] - u[i],
            (None, None) => 0.0,
        }
    };
    let gx = axis(
        if c > 0 { Some(i - 1) } else { None },
        if c + 1 < res { Some(i + 1) } else { None },
    );
    let gy = axis(
        if r > 0 { Some(i - res) } else { None },
        if r + 1 < res { Some(i + res) } else { None },
    );
    (gx, gy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn full_domain(res: usize) -> DomainMask {
        DomainMask { resolution: res, inside: vec![true; res * res] }
    }

    fn disk_hole(res: usize, cr: usize, cc: usize, radius: f64) -> Vec<bool> {
        (0..res * res)
            .map(|i| {
                let (r, c) = (i / res, i % res);
                let (dr, dc) = (r as f64 - cr as f64, c as f64 - cc as f64);
                (dr * dr + dc * dc).sqrt() <= radius
            })
            .collect()
    }

    #[test]
    fn constant_texture_is_restored_exactly() {
        let res = 48;
        let domain = full_domain(res);
        let texture = TextureMap::filled(res, 0.7);
        let mask =
            ResidualMask::from_hole_grid(disk_hole(res, 24, 24, 9.0), &domain, 0).unwrap();
        let out = inpaint_ns(&texture, &mask, &domain, &RefineParams::default()).unwrap();
        for &v in &out.data {
            assert!((v - 0.7).abs() < 1e-6);
        }
    }

    /// Independent oracle: a domain-restricted Laplace (Dirichlet) solve by
    /// successive over-relaxation, run to tight convergence.
    fn laplace_oracle(
        texture: &TextureMap,
        hole: &[bool],
        inside: &[bool],
        res: usize,
        ch: usize,
    ) -> Vec<f64> {
        let mut u: Vec<f64> = (0..res * res).map(|i| texture.data[3 * i + ch]).collect();
        // Start the unknowns away from the answer so the solve is exercised.
        for i in 0..res * res {
            if hole[i] {
                u[i] = 0.5;
            }
        }
        let omega = 1.8;
        for _ in 0..20000 {
            let mut delta: f64 = 0.0;
            for i in 0..res * res {
                if !hole[i] {
                    continue;
                }
                let (r, c) = (i / res, i % res);
                let (mut sum, mut n) = (0.0, 0.0);
                let mut take = |j: usize| {
                    if inside[j] {
                        sum += u[j];
                        n += 1.0;
                    }
                };
                if r > 0 {
                    take(i - res);
                }
                if r + 1 < res {
                    take(i + res);
                }
                if c > 0 {
                    take(i - 1);
                }
                if c + 1 < res {
                    take(i + 1);
                }
                if n == 0.0 {
                    continue;
                }
                let target = sum / n;
                let step = omega * (target - u[i]);
                u[i] += step;
                delta = delta.max(step.abs());
            }
            if delta < 1e-12 {
                break;
            }
        }
        u
    }

    #[test]
    fn linear_gradient_disk_hole_matches_the_harmonic_oracle() {
        let res = 96;
        let domain = full_domain(res);
        let mut texture = TextureMap::filled(res, 0.0);
        for r in 0..res {
            for c in 0..res {
                let v = c as f64 / (res - 1) as f64;
                texture.set_texel(r, c, [v, v, v]);
            }
        }
        let hole = disk_hole(res, 48, 48, 10.0);
        let mask = ResidualMask::from_hole_grid(hole.clone(), &domain, 0).unwrap();
        let out = inpaint_ns(&texture, &mask, &domain, &RefineParams::default()).unwrap();
        let oracle = laplace_oracle(&texture, &hole, &domain.inside, res, 0);
        let mut worst: f64 = 0.0;
        for i in 0..res * res {
            if hole[i] {
                worst = worst.max((out.data[3 * i] - oracle[i]).abs());
            }
        }
        assert!(worst < 0.02, "max deviation from harmonic solve {worst}");
    }

    #[test]
    fn out_of_domain_texels_are_never_read_nor_written() {
        let res = 40;
        let mut domain = full_domain(res);
        for r in 0..res {
            for c in 0..res {
                // Irregular out-of-domain region hugging the hole.
                if c >= res - 6 || (r < 10 && c < 10) || (r > 14 && r < 22 && c > 14 && c < 20) {
                    domain.inside[r * res + c] = false;
                }
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut clean = TextureMap::filled(res, 0.0);
        for i in 0..res * res {
            for ch in 0..3 {
                clean.data[3 * i + ch] = rng.gen::<f64>();
            }
        }
        let mut core = vec![false; res * res];
        for i in 0..res * res {
            let (r, c) = (i / res, i % res);
            if domain.inside[i] && (10..26).contains(&r) && (8..24).contains(&c) {
                core[i] = true;
            }
        }
        let mask = ResidualMask::from_hole_grid(core, &domain, 2).unwrap();

        let mut poisoned = clean.clone();
        for i in 0..res * res {
            if !domain.inside[i] {
                poisoned.set_texel(i / res, i % res, [7e5, -3e9, 1e12]);
            }
        }
        let params = RefineParams { ns_iterations: 40, ..RefineParams::default() };
        let out_clean = inpaint_ns(&clean, &mask, &domain, &params).unwrap();
        let out_poisoned = inpaint_ns(&poisoned, &mask, &domain, &params).unwrap();
        for i in 0..res * res {
            for ch in 0..3 {
                if domain.inside[i] {
                    // Bitwise: any read of a poisoned texel would perturb this.
                    assert_eq!(out_clean.data[3 * i + ch], out_poisoned.data[3 * i + ch]);
                } else {
                    assert_eq!(out_poisoned.data[3 * i + ch], poisoned.data[3 * i + ch]);
                }
            }
        }
        // Non-hole texels pass through bitwise.
        for i in 0..res * res {
            if !mask.hole[i] {
                for ch in 0..3 {
                    assert_eq!(out_clean.data[3 * i + ch], clean.data[3 * i + ch]);
                }
            }
        }
        // Every hole texel was rewritten away from its input value with
        // overwhelming probability under a random start.
        let changed = (0..res * res)
            .filter(|&i| mask.hole[i] && out_clean.data[3 * i] != clean.data[3 * i])
            .count();
        assert!(changed as f64 > 0.95 * mask.hole_count() as f64);
    }

    #[test]
    fn fill_values_respect_the_boundary_range_per_component() {
        let res = 64;
        let domain = full_domain(res);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut texture = TextureMap::filled(res, 0.0);
        for r in 0..res {
            for c in 0..res {
                let base = 0.3 + 0.4 * ((r as f64 / 9.0).sin() * (c as f64 / 7.0).cos());
                texture.set_texel(
                    r,
                    c,
                    [base, base + 0.05 * rng.gen::<f64>(), 1.0 - base],
                );
            }
        }
        // Two disjoint components.
        let mut core = disk_hole(res, 16, 16, 6.5);
        for (i, h) in disk_hole(res, 44, 44, 9.0).iter().enumerate() {
            core[i] = core[i] || *h;
        }
        let mask = ResidualMask::from_hole_grid(core, &domain, 1).unwrap();
        let out = inpaint_ns(&texture, &mask, &domain, &RefineParams::default()).unwrap();

        let label = hole_components(&mask.hole, res);
        let bounds = component_bounds(&texture, &mask.hole, &domain.inside, &label, res);
        assert_eq!(bounds.len(), 2);
        for i in 0..res * res {
            if mask.hole[i] {
                for ch in 0..3 {
                    let v = out.data[3 * i + ch];
                    let b = bounds[label[i]][ch];
                    assert!(v >= b[0] - 1e-6 && v <= b[1] + 1e-6);
                }
            }
        }
    }

    #[test]
    fn a_component_with_no_known_border_falls_back_to_neutral() {
        let res = 16;
        let domain = full_domain(res);
        let texture = TextureMap::filled(res, 0.9);
        let mask =
            ResidualMask::from_hole_grid(vec![true; res * res], &domain, 0).unwrap();
        let out = inpaint_ns(&texture, &mask, &domain, &RefineParams::default()).unwrap();
        for &v in &out.data {
            assert!((v - 0.5).abs() < 1e-9);
        }
    }
}
