use cagewarp::coords::{apply_weights, closed_form_weights, mvc_weights, CoordinateKind};
use cagewarp::geometry::{winding_number, Aabb, CagePair, Point3, TriMesh, Vec3};
use cagewarp::Error;
use proptest::prelude::*;

fn l_shape() -> TriMesh {
    TriMesh::from_cells(
        [2, 2, 1],
        Point3::new(-0.5, -0.5, -0.25),
        Vec3::new(0.5, 0.5, 0.5),
        |i, j, _| !(i == 1 && j == 1),
        None,
    )
    .unwrap()
}

fn cube() -> TriMesh {
    let b = Aabb::new(Point3::new(-0.5, -0.5, -0.5), Point3::new(0.5, 0.5, 0.5)).unwrap();
    TriMesh::subdivided_box(&b, [1, 1, 1]).unwrap()
}

/// Points of the L-shape's bounding box that lie clearly inside it.
fn l_interior() -> impl Strategy<Value = Point3> {
    (-0.48f64..0.48, -0.48f64..0.48, -0.23f64..0.23)
        .prop_filter("inside the L", |&(x, y, _)| x < -0.02 || y < -0.02)
        .prop_map(|(x, y, z)| Point3::new(x, y, z))
}

fn closed_forms() -> impl Strategy<Value = CoordinateKind> {
    prop_oneof![Just(CoordinateKind::Mvc), Just(CoordinateKind::Gc)]
}

fn reconstruct(kind: CoordinateKind, cage: &TriMesh, x: &Point3) -> Point3 {
    let w = closed_form_weights(kind, cage, x).unwrap();
    apply_weights(&w, &CagePair::identity(cage.clone()).unwrap(), kind).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn mvc_partition_of_unity(x in l_interior()) {
        let w = mvc_weights(&l_shape(), &x).unwrap();
        prop_assert!((w.vertex_sum() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn identity_reproduction(x in l_interior(), kind in closed_forms()) {
        let r = reconstruct(kind, &l_shape(), &x);
        prop_assert!((r - x).norm() < 1e-9, "{:?} -> {:?}", x, r);
    }

    #[test]
    fn weights_move_with_the_cage(x in l_interior(), t in prop::array::uniform3(-3.0f64..3.0), kind in closed_forms()) {
        let t = Vec3::from(t);
        let cage = l_shape();
        let moved = cage.transformed(|p| p + t);
        let a = closed_form_weights(kind, &cage, &x).unwrap();
        let b = closed_form_weights(kind, &moved, &(x + t)).unwrap();
        for (wa, wb) in a.vertex.iter().chain(&a.face).zip(b.vertex.iter().chain(&b.face)) {
            prop_assert!((wa - wb).abs() < 1e-8);
        }
    }

    #[test]
    fn mvc_follows_affine_maps(x in l_interior(), m in prop::array::uniform9(-1.0f64..1.0), t in prop::array::uniform3(-1.0f64..1.0)) {
        let a = nalgebra::Matrix3::from_row_slice(&m) + nalgebra::Matrix3::identity() * 2.0;
        let t = Vec3::from(t);
        let f = |p: &Point3| Point3::from(a * p.coords + t);
        let cage = l_shape();
        // Weights come from the deformed cage and are applied to the canonical one.
        let pair = CagePair::new(cage.transformed(f), cage.clone()).unwrap();
        let w = mvc_weights(&cage, &x).unwrap();
        let y = apply_weights(&w, &pair, CoordinateKind::Mvc).unwrap();
        prop_assert!((y - f(&x)).norm() < 1e-8);
    }

    #[test]
    fn gc_follows_rigid_motions(x in l_interior(), axis in prop::array::uniform3(-1.0f64..1.0), angle in -3.0f64..3.0) {
        let axis = Vec3::from(axis);
        prop_assume!(axis.norm() > 0.1);
        let rot = nalgebra::Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(axis), angle);
        let f = |p: &Point3| rot * p + Vec3::new(0.3, -0.1, 0.2);
        let cage = l_shape();
        let pair = CagePair::new(cage.transformed(f), cage.clone()).unwrap();
        let w = closed_form_weights(CoordinateKind::Gc, &cage, &x).unwrap();
        let y = apply_weights(&w, &pair, CoordinateKind::Gc).unwrap();
        prop_assert!((y - f(&x)).norm() < 1e-8);
    }
}

#[test]
fn cube_center_weights_follow_the_triangulation_symmetry() {
    // Each triangulated cube face splits along one diagonal, so vertices split
    // into classes by degree; weights agree within each class.
    let cage = cube();
    for kind in [CoordinateKind::Mvc, CoordinateKind::Gc] {
        let w = closed_form_weights(kind, &cage, &Point3::origin()).unwrap();
        let degree = |v: usize| cage.faces().iter().filter(|f| f.contains(&v)).count();
        for a in 0..8 {
            for b in 0..8 {
                if degree(a) == degree(b) {
                    assert!((w.vertex[a] - w.vertex[b]).abs() < 1e-12, "{kind}: {a} vs {b}");
                }
            }
        }
        assert!(reconstruct(kind, &cage, &Point3::origin()).coords.norm() < 1e-12);
    }
}

#[test]
fn surface_and_outside_points_are_rejected() {
    let cage = cube();
    for kind in [CoordinateKind::Mvc, CoordinateKind::Gc] {
        let on_face = closed_form_weights(kind, &cage, &Point3::new(0.1, 0.2, 0.5));
        assert!(matches!(on_face, Err(Error::NearSurface)), "{kind}: {on_face:?}");
        let outside = closed_form_weights(kind, &cage, &Point3::new(0.1, 0.2, 0.9));
        assert!(matches!(outside, Err(Error::OutsideCage)), "{kind}: {outside:?}");
    }
    let hc = closed_form_weights(CoordinateKind::Hc, &cage, &Point3::origin());
    assert!(matches!(hc, Err(Error::PreciseHarmonic)));
}

#[test]
fn winding_number_matches_the_l_shape() {
    let cage = l_shape();
    let inside = |p: &Point3| {
        p.x.abs() < 0.5 && p.y.abs() < 0.5 && p.z.abs() < 0.25 && (p.x < 0.0 || p.y < 0.0)
    };
    let mut count = 0;
    for i in 0..13 {
        for j in 0..13 {
            for k in 0..7 {
                let p = Point3::new(-0.61 + 0.1 * i as f64, -0.59 + 0.1 * j as f64, -0.33 + 0.1 * k as f64);
                let w = winding_number(&cage, &p);
                assert!((w - if inside(&p) { 1.0 } else { 0.0 }).abs() < 1e-9, "{p:?}: {w}");
                count += inside(&p) as usize;
            }
        }
    }
    assert!(count > 100);
}
