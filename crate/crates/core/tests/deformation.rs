use cagewarp::coords::CoordinateKind;
use cagewarp::field::VoxelRadianceField;
use cagewarp::geometry::{Aabb, CagePair, Point3, TriMesh, UnitDir3, Vec3};
use cagewarp::warp::{DeformConfig, DeformedField, Region};
use proptest::prelude::*;

fn density_at(p: &Point3) -> f64 {
    10.0 + p.x + 2.0 * p.y - 1.5 * p.z
}

/// Density linear in position, so trilinear lookups reproduce it exactly.
fn linear_field() -> VoxelRadianceField {
    let domain = Aabb::new(Point3::new(-2.0, -2.0, -2.0), Point3::new(2.0, 2.0, 2.0)).unwrap();
    let n = 9;
    let node = |i: usize| -2.0 + 4.0 * i as f64 / (n - 1) as f64;
    let mut density = Vec::new();
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                density.push(density_at(&Point3::new(node(i), node(j), node(k))) as f32);
            }
        }
    }
    let coeffs = vec![1.0f32; n * n * n * 3];
    VoxelRadianceField::new([n; 3], domain, 0, density, coeffs).unwrap()
}

fn cube() -> TriMesh {
    let b = Aabb::new(Point3::new(-0.5, -0.5, -0.5), Point3::new(0.5, 0.5, 0.5)).unwrap();
    TriMesh::subdivided_box(&b, [1, 1, 1]).unwrap()
}

const SHIFT: Vec3 = Vec3::new(0.3, -0.2, 0.1);

fn configs() -> Vec<(DeformConfig, f64)> {
    let base = DeformConfig { n: 32, ..DeformConfig::default() };
    vec![
        (DeformConfig { kind: CoordinateKind::Mvc, ..base }, 1e-4),
        (DeformConfig { kind: CoordinateKind::Gc, ..base }, 1e-4),
        (DeformConfig { kind: CoordinateKind::Hc, ..base }, 5e-2),
        (DeformConfig { kind: CoordinateKind::Mvc, precise: true, ..base }, 1e-4),
        (DeformConfig { kind: CoordinateKind::Gc, precise: true, ..base }, 1e-4),
    ]
}

#[test]
fn translated_cage_carries_the_field() {
    let field = linear_field();
    let pair = CagePair::new(cube(), cube().transformed(|p| p + SHIFT)).unwrap();
    let d = UnitDir3::new_normalize(Vec3::new(0.2, 0.1, 1.0));
    for (config, tol) in configs() {
        let deformed = DeformedField::new(&field, pair.clone(), config).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let x = Point3::new(-0.4 + 0.2 * i as f64, -0.4 + 0.2 * j as f64, 0.13) + SHIFT;
                assert_eq!(deformed.classify(&x), Region::Deformed);
                let (_, sigma) = deformed.query(&x, &d);
                let expected = density_at(&(x - SHIFT));
                assert!((sigma - expected).abs() < tol, "{config:?} at {x:?}: {sigma} vs {expected}");
            }
        }
    }
}

#[test]
fn regions_outside_the_deformed_cage() {
    let field = linear_field();
    let pair = CagePair::new(cube(), cube().transformed(|p| p + Vec3::new(1.2, 0.0, 0.0))).unwrap();
    let deformed = DeformedField::new(&field, pair, DeformConfig { n: 32, ..DeformConfig::default() }).unwrap();
    let d = UnitDir3::new_normalize(Vec3::z());
    let vacated = Point3::new(-0.3, 0.1, 0.2);
    assert_eq!(deformed.classify(&vacated), Region::Vacated);
    assert_eq!(deformed.query(&vacated, &d), ([0.0; 3], 0.0));
    let untouched = Point3::new(-1.5, 1.5, 0.0);
    assert_eq!(deformed.classify(&untouched), Region::Unchanged);
    assert_eq!(deformed.query(&untouched, &d), field.sample(&untouched, &d));
}

#[test]
fn precise_harmonic_is_rejected() {
    let field = linear_field();
    let pair = CagePair::identity(cube()).unwrap();
    let config = DeformConfig { kind: CoordinateKind::Hc, precise: true, ..DeformConfig::default() };
    assert!(DeformedField::new(&field, pair, config).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn identity_pair_leaves_points_in_place(x in prop::array::uniform3(-0.45f64..0.45)) {
        let x = Point3::from(x);
        let field = linear_field();
        let pair = CagePair::identity(cube()).unwrap();
        let deformed = DeformedField::new(&field, pair, DeformConfig { n: 16, ..DeformConfig::default() }).unwrap();
        prop_assert!((deformed.phi_x(&x).unwrap() - x).norm() < 1e-6);
        let d = UnitDir3::new_normalize(Vec3::new(1.0, -2.0, 0.5));
        let pd = deformed.phi_d(&x, &d).unwrap();
        prop_assert!((pd.into_inner() - d.into_inner()).norm() < 1e-4);
    }
}
