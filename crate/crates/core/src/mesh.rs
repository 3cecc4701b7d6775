//! ASCII OBJ export of sampled chart images for figures: quad-gridded chart
//! patches plus the exceptional locus as a separate object group.

use std::fmt::Write as _;
use std::path::Path;

use crate::aug::{gamma2_chart_inv, pi2, AugParams};
use crate::error::{BlowupError, Result};
use crate::local::BlowupSpace;
use crate::registry::{aug_point_atlas, real_r2_atlas, real_r3_atlas, real_r3_line_atlas};
use crate::sample::SamplePlan;

/// A mesh with one object group per chart patch and one for the exceptional
/// locus (faces for patches, polylines for curves).
#[derive(Debug, Clone, Default)]
pub struct ObjMesh {
    vertices: Vec<[f64; 3]>,
    groups: Vec<ObjGroup>,
}

#[derive(Debug, Clone)]
struct ObjGroup {
    name: String,
    faces: Vec<[usize; 4]>,
    polylines: Vec<Vec<usize>>,
}

impl ObjMesh {
    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn face_count(&self) -> usize {
        self.groups.iter().map(|g| g.faces.len()).sum()
    }

    pub fn group_names(&self) -> Vec<&str> {
        self.groups.iter().map(|g| g.name.as_str()).collect()
    }

    fn push_vertex(&mut self, p: [f64; 3]) -> usize {
        self.vertices.push(p);
        self.vertices.len() // 1-indexed
    }

    /// Adds a quad-gridded patch from a parameter grid of embedded points.
    fn push_patch(&mut self, name: &str, side: usize, points: Vec<[f64; 3]>) {
        debug_assert_eq!(points.len(), side * side);
        let base = self.vertices.len();
        for p in points {
            self.vertices.push(p);
        }
        let mut faces = Vec::new();
        for i in 0..side - 1 {
            for j in 0..side - 1 {
                let v = |a: usize, b: usize| base + a * side + b + 1;
                faces.push([v(i, j), v(i + 1, j), v(i + 1, j + 1), v(i, j + 1)]);
            }
        }
        self.groups.push(ObjGroup {
            name: name.to_string(),
            faces,
            polylines: Vec::new(),
        });
    }

    fn push_polyline(&mut self, name: &str, points: Vec<[f64; 3]>, closed: bool) {
        let mut idx = Vec::with_capacity(points.len() + 1);
        for p in points {
            idx.push(self.push_vertex(p));
        }
        if closed {
            if let Some(&first) = idx.first() {
                idx.push(first);
            }
        }
        self.groups.push(ObjGroup {
            name: name.to_string(),
            faces: Vec::new(),
            polylines: vec![idx],
        });
    }

    /// ASCII OBJ text: `v x y z`, `f i j k l`, `l ...`, groups via `o` lines.
    pub fn to_obj(&self) -> String {
        let mut out = String::new();
        for v in &self.vertices {
            writeln!(out, "v {:.6} {:.6} {:.6}", v[0], v[1], v[2]).unwrap();
        }
        for g in &self.groups {
            writeln!(out, "o {}", g.name).unwrap();
            for f in &g.faces {
                writeln!(out, "f {} {} {} {}", f[0], f[1], f[2], f[3]).unwrap();
            }
            for l in &g.polylines {
                let joined: Vec<String> = l.iter().map(|i| i.to_string()).collect();
                writeln!(out, "l {}", joined.join(" ")).unwrap();
            }
        }
        out
    }
}

/// Builds the mesh of a registered example at the given grid resolution.
/// Fails with `DimensionUnsupported` when the example has no 2- or
/// 3-dimensional chart presentation.
pub fn build_mesh(example: &str, resolution: usize) -> Result<ObjMesh> {
    let side = resolution.max(2);
    let plan = SamplePlan::default();
    match example {
        "real-blowup-R2-origin" => {
            let space = BlowupSpace::new(real_r2_atlas(&plan)?, &plan);
            Ok(mobius_mesh(&space, side))
        }
        "equiv-rotated" => {
            let (atlas, _, _) = crate::registry::rotated_equiv_data(&plan)?;
            let space = BlowupSpace::new(atlas, &plan);
            Ok(mobius_mesh(&space, side))
        }
        "real-blowup-R3-origin" => {
            let space = BlowupSpace::new(real_r3_atlas(&plan)?, &plan);
            Ok(slice_mesh(&space, side, 3))
        }
        "real-blowup-R3-line" => {
            let space = BlowupSpace::new(real_r3_line_atlas(&plan)?, &plan);
            Ok(slice_mesh(&space, side, 2))
        }
        "aug-c2-c1-1" => aug_mesh(side, 0.0),
        "aug-c2-c1-1-line" => aug_mesh(side, 0.0),
        "merge-line" => Ok(merge_mesh(side)),
        "complex-blowup-C2-origin" => Err(BlowupError::DimensionUnsupported { dim: 4 }),
        other => {
            if crate::registry::registry().iter().any(|e| e.name == other) {
                Err(BlowupError::DimensionUnsupported { dim: 0 })
            } else {
                Err(BlowupError::UnknownExample(other.to_string()))
            }
        }
    }
}

/// Writes the mesh of an example to an OBJ file; returns the mesh.
pub fn export_mesh(example: &str, resolution: usize, path: &Path) -> Result<ObjMesh> {
    let mesh = build_mesh(example, resolution)?;
    std::fs::write(path, mesh.to_obj())?;
    Ok(mesh)
}

/// Band embedding of the blowup of the plane at the origin: the line angle
/// doubles into the center circle, the fiber coordinate sweeps the width,
/// and the half-twist realizes the nonorientability.
fn mobius_embed(theta: f64, t: f64) -> [f64; 3] {
    let phi = 2.0 * theta;
    let w = 1.0 + 0.5 * t * theta.cos();
    [w * phi.cos(), w * phi.sin(), 0.5 * t * theta.sin()]
}

fn mobius_mesh(space: &BlowupSpace, side: usize) -> ObjMesh {
    let mut mesh = ObjMesh::default();
    for i in 0..2usize {
        let mut pts = Vec::with_capacity(side * side);
        for a in 0..side {
            for b in 0..side {
                let u = -1.0 + 2.0 * (a as f64) / (side - 1) as f64;
                let v = -1.0 + 2.0 * (b as f64) / (side - 1) as f64;
                let p = space.chart_point(0, i, &[u, v]).expect("grid point");
                let crate::local::BlowupPoint::Chart { line, base, .. } = &p else {
                    unreachable!()
                };
                let l = line.normalize();
                let mut theta = l.coords()[1].atan2(l.coords()[0]);
                if theta < 0.0 {
                    theta += std::f64::consts::PI;
                }
                let dir = [theta.cos(), theta.sin()];
                let t = base[0] * dir[0] + base[1] * dir[1];
                pts.push(mobius_embed(theta, t));
            }
        }
        mesh.push_patch(&format!("chart-{i}"), side, pts);
    }
    let e: Vec<[f64; 3]> = (0..side)
        .map(|k| {
            let theta = std::f64::consts::PI * (k as f64) / side as f64;
            mobius_embed(theta, 0.0)
        })
        .collect();
    mesh.push_polyline("exceptional", e, true);
    mesh
}

/// Mid-slice patches of a three-dimensional presentation: the first two chart
/// coordinates sweep a grid, the third is pinned to zero; vertices are the
/// ambient blowdown images.
fn slice_mesh(space: &BlowupSpace, side: usize, ncharts: usize) -> ObjMesh {
    let mut mesh = ObjMesh::default();
    for i in 0..ncharts {
        let mut pts = Vec::with_capacity(side * side);
        for a in 0..side {
            for b in 0..side {
                let u = -0.9 + 1.8 * (a as f64) / (side - 1) as f64;
                let v = -0.9 + 1.8 * (b as f64) / (side - 1) as f64;
                let w = [u, v, 0.0];
                let p = space.chart_point(0, i, &w).expect("grid point");
                let base = space.blowdown(&p);
                pts.push([base[0], base[1], base[2]]);
            }
        }
        mesh.push_patch(&format!("chart-{i}"), side, pts);
    }
    // exceptional slice: fiber coordinate of chart 0 pinned to zero
    let e: Vec<[f64; 3]> = (0..side)
        .map(|k| {
            let u = -0.9 + 1.8 * (k as f64) / (side - 1) as f64;
            let w = [0.0, u, 0.0];
            let p = space.chart_point(0, 0, &w).expect("grid point");
            let base = space.blowdown(&p);
            [base[0], base[1], base[2]]
        })
        .collect();
    mesh.push_polyline("exceptional", e, false);
    mesh
}

/// Patches of the augmented model over the origin: the two trivial-slot
/// charts of the second sector, embedded through the blowdown plus the
/// doubled line angle.
fn aug_mesh(side: usize, y0: f64) -> Result<ObjMesh> {
    let plan = SamplePlan::default();
    let params = AugParams::new(2, 1)?;
    let _ = aug_point_atlas(&plan)?;
    let mut mesh = ObjMesh::default();
    for i in 0..2usize {
        let mut pts = Vec::with_capacity(side * side);
        for a in 0..side {
            for b in 0..side {
                let u = -0.8 + 1.6 * (a as f64) / (side - 1) as f64;
                let v = -0.8 + 1.6 * (b as f64) / (side - 1) as f64;
                let g = gamma2_chart_inv(&[u, v], i, params)?;
                let base = pi2(&g);
                let l = g.line.normalize();
                let mut psi = l.coords()[1].atan2(l.coords()[0]);
                if psi < 0.0 {
                    psi += std::f64::consts::PI;
                }
                pts.push([base[0], base[1], 0.6 * (2.0 * psi).sin() + y0]);
            }
        }
        mesh.push_patch(&format!("sector2-chart-{i}"), side, pts);
    }
    // exceptional curve: vanishing fiber parameter in the trivial-slot chart
    let e: Vec<[f64; 3]> = (0..side)
        .map(|k| {
            let u = -0.8 + 1.6 * (k as f64) / (side - 1) as f64;
            let g = gamma2_chart_inv(&[u, 0.0], 0, params).expect("grid point");
            let l = g.line.normalize();
            let mut psi = l.coords()[1].atan2(l.coords()[0]);
            if psi < 0.0 {
                psi += std::f64::consts::PI;
            }
            [0.0, 0.0, 0.6 * (2.0 * psi).sin() + y0]
        })
        .collect();
    mesh.push_polyline("exceptional", e, false);
    Ok(mesh)
}

/// Flat patches of the merge example: the images of the two identifications
/// over their bands, with the center line as the exceptional group.
fn merge_mesh(side: usize) -> ObjMesh {
    let (t1, t2) = crate::registry::merge_tnis();
    let mut mesh = ObjMesh::default();
    for (k, t) in [&t1, &t2].iter().enumerate() {
        let (rlo, rhi) = t.w.interval(0);
        let (ylo, yhi) = t.w.interval(1);
        let mut pts = Vec::with_capacity(side * side);
        for a in 0..side {
            for b in 0..side {
                let r = rlo + (rhi - rlo) * (a as f64) / (side - 1) as f64;
                let y = ylo + (yhi - ylo) * (b as f64) / (side - 1) as f64;
                let x = t.psi.apply(&[r, y]);
                pts.push([x[0], x[1], 0.0]);
            }
        }
        mesh.push_patch(&format!("band-{k}"), side, pts);
    }
    let (ylo, yhi) = t1.w.interval(1);
    let e: Vec<[f64; 3]> = (0..side)
        .map(|k| {
            let y = ylo + (yhi - ylo) * (k as f64) / (side - 1) as f64;
            [0.0, y, 0.0]
        })
        .collect();
    mesh.push_polyline("exceptional", e, false);
    mesh
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plane_blowup_mesh_counts() {
        let mesh = build_mesh("real-blowup-R2-origin", 64).unwrap();
        assert_eq!(mesh.vertex_count(), 2 * 64 * 64 + 64);
        assert_eq!(mesh.face_count(), 2 * 63 * 63);
        assert_eq!(
            mesh.group_names(),
            vec!["chart-0", "chart-1", "exceptional"]
        );
    }

    #[test]
    fn degenerate_resolution_gives_four_vertex_patches() {
        let mesh = build_mesh("real-blowup-R2-origin", 1).unwrap();
        assert_eq!(mesh.vertex_count(), 2 * 4 + 2);
        assert_eq!(mesh.face_count(), 2);
    }

    #[test]
    fn four_dimensional_presentation_unsupported() {
        assert!(matches!(
            build_mesh("complex-blowup-C2-origin", 16),
            Err(BlowupError::DimensionUnsupported { dim: 4 })
        ));
    }

    #[test]
    fn unknown_example_is_rejected() {
        assert!(matches!(
            build_mesh("nope", 8),
            Err(BlowupError::UnknownExample(_))
        ));
    }

    #[test]
    fn obj_text_has_expected_records() {
        let mesh = build_mesh("real-blowup-R2-origin", 4).unwrap();
        let obj = mesh.to_obj();
        let n_v = obj.lines().filter(|l| l.starts_with("v ")).count();
        let n_f = obj.lines().filter(|l| l.starts_with("f ")).count();
        let n_o = obj.lines().filter(|l| l.starts_with("o ")).count();
        let n_l = obj.lines().filter(|l| l.starts_with("l ")).count();
        assert_eq!(n_v, mesh.vertex_count());
        assert_eq!(n_f, mesh.face_count());
        assert_eq!(n_o, 3);
        assert_eq!(n_l, 1);
    }

    #[test]
    fn slice_mesh_builds_for_three_dimensional_examples() {
        let mesh = build_mesh("real-blowup-R3-origin", 8).unwrap();
        assert_eq!(mesh.vertex_count(), 3 * 64 + 8);
        let mesh = build_mesh("real-blowup-R3-line", 8).unwrap();
        assert_eq!(mesh.vertex_count(), 2 * 64 + 8);
    }

    #[test]
    fn aug_and_merge_meshes_build() {
        assert!(build_mesh("aug-c2-c1-1", 8).is_ok());
        assert!(build_mesh("merge-line", 8).is_ok());
        assert!(build_mesh("equiv-rotated", 8).is_ok());
    }
}
