mod common;

use flowfield::geometry::{closest_point_on_triangle, Bvh, IndexedMesh, TriMesh};
use flowfield::headmodel::{evaluate_mesh, make_mini_model};
use flowfield::{MotionParams, SurfacePoint, Vec3};
use proptest::prelude::*;

fn mini_mesh(subdiv: u32) -> TriMesh {
    let assets = make_mini_model(1, subdiv);
    evaluate_mesh(&assets, &MotionParams::zeros(&assets)).unwrap()
}

/// Independent distance oracle: project onto the plane, keep the projection
/// if it lies inside the triangle, otherwise take the nearest of the three
/// clamped segment projections.
fn oracle_distance(p: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    let n = (b - a).cross(&(c - a)).normalize();
    let q = p - n * n.dot(&(p - a));
    let inside = [(a, b), (b, c), (c, a)]
        .iter()
        .all(|(s, e)| (*e - *s).cross(&(q - *s)).dot(&n) >= 0.0);
    if inside {
        return (p - q).norm();
    }
    [(a, b), (b, c), (c, a)]
        .iter()
        .map(|(s, e)| {
            let d = *e - *s;
            let t = ((p - *s).dot(&d) / d.norm_squared()).clamp(0.0, 1.0);
            (p - (*s + d * t)).norm()
        })
        .fold(f64::INFINITY, f64::min)
}

/// Exhaustive scan with strict improvement, i.e. lowest index wins ties.
fn exhaustive(mesh: &TriMesh, p: &Vec3) -> SurfacePoint {
    let mut best: Option<SurfacePoint> = None;
    for f in 0..mesh.num_faces() {
        if mesh.is_degenerate(f) {
            continue;
        }
        let [a, b, c] = mesh.triangle(f);
        let (q, bary, _) = closest_point_on_triangle(p, &a, &b, &c);
        let d2 = (p - q).norm_squared();
        if best.map_or(true, |b| d2 < b.dist_sq) {
            best = Some(SurfacePoint {
                face: f,
                bary,
                point: q,
                signed_dist: mesh.normal(f).dot(&(p - q)),
                dist_sq: d2,
            });
        }
    }
    best.unwrap()
}

#[test]
fn bvh_matches_exhaustive_scan_on_mini_model() {
    let mesh = mini_mesh(2);
    let bvh = Bvh::build(&mesh).unwrap();
    let (lo, hi) = mesh.bounds();
    let (lo, hi) = common::scaled_bounds(lo, hi, 2.0);
    let mut rng = common::rng(11);
    for _ in 0..1000 {
        let p = common::random_in_box(&mut rng, &lo, &hi);
        let got = bvh.closest_point(&mesh, &p).unwrap().unwrap();
        assert_eq!(got, exhaustive(&mesh, &p), "query {p:?}");
    }
}

#[test]
fn closest_distance_matches_independent_oracle() {
    let mesh = mini_mesh(2);
    let index = IndexedMesh::new(mesh.clone()).unwrap();
    let (lo, hi) = mesh.bounds();
    let (lo, hi) = common::scaled_bounds(lo, hi, 2.0);
    let mut rng = common::rng(12);
    for _ in 0..10_000 {
        let p = common::random_in_box(&mut rng, &lo, &hi);
        let got = index.closest_point(&p).unwrap();
        let want = (0..mesh.num_faces())
            .map(|f| {
                let [a, b, c] = mesh.triangle(f);
                oracle_distance(&p, &a, &b, &c)
            })
            .fold(f64::INFINITY, f64::min);
        assert!((got.distance() - want).abs() <= 1e-12, "query {p:?}");
        assert!(got.signed_dist.abs() <= got.distance() + 1e-15);
        let [a, b, c] = mesh.triangle(got.face);
        let recon = a * got.bary[0] + b * got.bary[1] + c * got.bary[2];
        assert!((recon - got.point).norm() <= 1e-9);
        assert!(got.bary.iter().all(|&x| x >= -1e-12));
        assert!((got.bary.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
    }
}

#[test]
fn vertex_query_lands_on_vertex() {
    let mesh = mini_mesh(1);
    let index = IndexedMesh::new(mesh.clone()).unwrap();
    for (i, v) in mesh.vertices().iter().enumerate() {
        let hit = index.closest_point(v).unwrap();
        assert!(mesh.faces()[hit.face].contains(&i));
        assert_eq!(hit.point, *v);
        assert_eq!(hit.signed_dist, 0.0);
    }
}

#[test]
fn centroid_offset_along_normal() {
    let mesh = mini_mesh(1);
    let index = IndexedMesh::new(mesh.clone()).unwrap();
    let h = 1e-4;
    for f in (0..mesh.num_faces()).step_by(7) {
        let [a, b, c] = mesh.triangle(f);
        let centroid = (a + b + c) / 3.0;
        let hit = index
            .closest_point(&(centroid + mesh.normal(f) * h))
            .unwrap();
        assert_eq!(hit.face, f);
        assert!((hit.point - centroid).norm() < 1e-12);
        assert!(hit.bary.iter().all(|x| (x - 1.0 / 3.0).abs() < 1e-9));
        assert!((hit.signed_dist - h).abs() < 1e-12);
    }
}

#[test]
fn deterministic_tree_for_same_mesh() {
    let mesh = mini_mesh(3);
    assert_eq!(Bvh::build(&mesh).unwrap(), Bvh::build(&mesh).unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn on_surface_points_have_zero_distance(
        face in 0usize..320,
        u in 0.0..1.0f64,
        v in 0.0..1.0f64,
    ) {
        let mesh = mini_mesh(2);
        let index = IndexedMesh::new(mesh.clone()).unwrap();
        let (u, v) = if u + v > 1.0 { (1.0 - u, 1.0 - v) } else { (u, v) };
        let [a, b, c] = mesh.triangle(face);
        let p = a + (b - a) * u + (c - a) * v;
        prop_assert!(index.closest_point(&p).unwrap().distance() <= 1e-9);
    }

    #[test]
    fn leaf_size_does_not_change_answers(
        leaf in 1usize..12,
        p in prop::array::uniform3(-0.3..0.3f64),
    ) {
        let mesh = mini_mesh(2);
        let p = Vec3::from(p);
        let reference = exhaustive(&mesh, &p);
        let bvh = Bvh::build_with_leaf_size(&mesh, leaf).unwrap();
        prop_assert_eq!(bvh.closest_point(&mesh, &p).unwrap().unwrap(), reference);
    }
}
