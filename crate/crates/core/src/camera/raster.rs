use rayon::prelude::*;

use super::{Camera, DepthMap, NEAR_PLANE};
use crate::geometry::TriMesh;

/// Triangle in continuous pixel space, counter-clockwise in the y-down sense
/// (positive edge-function area).
struct ScreenTri {
    xy: [(f64, f64); 3],
    inv_z: [f64; 3],
    area: f64,
    /// Top-left flag of the edge opposite each vertex.
    top_left: [bool; 3],
    cols: (usize, usize),
}

fn edge(a: (f64, f64), b: (f64, f64), p: (f64, f64)) -> f64 {
    (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0)
}

fn is_top_left(a: (f64, f64), b: (f64, f64)) -> bool {
    let dx = b.0 - a.0;
    let dy = b.1 - a.1;
    (dy == 0.0 && dx > 0.0) || dy < 0.0
}

/// Range of pixel indices whose centers fall in `[lo, hi]`, clipped to `0..n`.
fn center_range(lo: f64, hi: f64, n: usize) -> Option<(usize, usize)> {
    let first = (lo - 0.5).ceil().max(0.0);
    let last = (hi - 0.5).floor().min(n as f64 - 1.0);
    if first > last {
        None
    } else {
        Some((first as usize, last as usize))
    }
}

/// Z-buffer depth render of every face, both windings, sampled at pixel
/// centers with a top-left fill rule and perspective-correct depth.
///
/// Faces with any vertex closer than [`NEAR_PLANE`] are not clipped but
/// dropped. Uncovered pixels stay exactly zero. Rows are rendered in
/// parallel; each row only writes itself, so the result does not depend on
/// the worker count.
pub fn render_depth(mesh: &TriMesh, cam: &Camera) -> DepthMap {
    let (w, h) = (cam.width(), cam.height());
    let mut tris = Vec::new();
    let mut rows: Vec<Vec<usize>> = vec![Vec::new(); h];

    for f in 0..mesh.num_faces() {
        let world = mesh.triangle(f);
        let cam_pts = world.map(|p| cam.world_to_camera(&p));
        if cam_pts.iter().any(|q| !(q.z >= NEAR_PLANE)) {
            continue;
        }
        let mut xy = cam_pts.map(|q| {
            (
                cam.fx() * q.x / q.z + cam.cx(),
                cam.fy() * q.y / q.z + cam.cy(),
            )
        });
        let mut inv_z = cam_pts.map(|q| 1.0 / q.z);
        let mut area = edge(xy[0], xy[1], xy[2]);
        if area == 0.0 || !area.is_finite() {
            continue;
        }
        if area < 0.0 {
            xy.swap(1, 2);
            inv_z.swap(1, 2);
            area = -area;
        }
        let xs = xy.map(|p| p.0);
        let ys = xy.map(|p| p.1);
        let min = |a: [f64; 3]| a[0].min(a[1]).min(a[2]);
        let max = |a: [f64; 3]| a[0].max(a[1]).max(a[2]);
        let (Some(cols), Some((r0, r1))) = (
            center_range(min(xs), max(xs), w),
            center_range(min(ys), max(ys), h),
        ) else {
            continue;
        };
        let top_left = [
            is_top_left(xy[1], xy[2]),
            is_top_left(xy[2], xy[0]),
            is_top_left(xy[0], xy[1]),
        ];
        let index = tris.len();
        tris.push(ScreenTri {
            xy,
            inv_z,
            area,
            top_left,
            cols,
        });
        for bucket in &mut rows[r0..=r1] {
            bucket.push(index);
        }
    }

    let mut depth = DepthMap::zeros(w, h);
    depth
        .data_mut()
        .par_chunks_mut(w)
        .zip(rows.par_iter())
        .enumerate()
        .for_each(|(row, (out, bucket))| {
            let py = row as f64 + 0.5;
            for &ti in bucket {
                let t = &tris[ti];
                for col in t.cols.0..=t.cols.1 {
                    let p = (col as f64 + 0.5, py);
                    let ws = [
                        edge(t.xy[1], t.xy[2], p),
                        edge(t.xy[2], t.xy[0], p),
                        edge(t.xy[0], t.xy[1], p),
                    ];
                    let inside = (0..3).all(|k| ws[k] > 0.0 || (ws[k] == 0.0 && t.top_left[k]));
                    if !inside {
                        continue;
                    }
                    let inv =
                        (ws[0] * t.inv_z[0] + ws[1] * t.inv_z[1] + ws[2] * t.inv_z[2]) / t.area;
                    let z = 1.0 / inv;
                    let slot = &mut out[col];
                    if *slot == 0.0 || z < *slot {
                        *slot = z;
                    }
                }
            }
        });
    depth
}
