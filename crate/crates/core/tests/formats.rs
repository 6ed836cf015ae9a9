use cagewarp::coords::CoordinateKind;
use cagewarp::field::{field_from_bytes, field_to_bytes, load_field, save_field, sh_len, VoxelRadianceField};
use cagewarp::geometry::{parse_obj, to_obj_string, Aabb, CagePair, Point3, TriMesh, Vec3};
use cagewarp::render::{cameras_to_json, parse_cameras, Camera};
use cagewarp::warp::{check_grid_matches, coord_grid_from_bytes, coord_grid_to_bytes, precompute_coord_grid};
use proptest::prelude::*;

fn field_strategy() -> impl Strategy<Value = VoxelRadianceField> {
    (prop::array::uniform3(2usize..5), 0u32..3, any::<u64>()).prop_map(|(dims, degree, seed)| {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let nodes = dims[0] * dims[1] * dims[2];
        let density = (0..nodes).map(|_| rng.gen_range(0.0f32..50.0)).collect();
        let coeffs = (0..nodes * 3 * sh_len(degree)).map(|_| rng.gen_range(-2.0f32..2.0)).collect();
        let domain = Aabb::new(Point3::new(-1.0, -0.5, 0.25), Point3::new(1.0, 0.5, 2.0)).unwrap();
        VoxelRadianceField::new(dims, domain, degree, density, coeffs).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn field_bytes_round_trip(field in field_strategy()) {
        let bytes = field_to_bytes(&field);
        let nodes = field.node_count();
        let expected = 4 + 12 + 48 + 4 + 4 * nodes * (1 + 3 * sh_len(field.sh_degree()));
        prop_assert_eq!(bytes.len(), expected);
        prop_assert_eq!(field_from_bytes(&bytes).unwrap(), field);
    }

    #[test]
    fn truncated_fields_are_rejected(field in field_strategy(), cut in 1usize..64) {
        let bytes = field_to_bytes(&field);
        let cut = cut.min(bytes.len());
        prop_assert!(field_from_bytes(&bytes[..bytes.len() - cut]).is_err());
    }

    #[test]
    fn obj_round_trip(scale in prop::array::uniform3(0.1f64..10.0), shift in prop::array::uniform3(-5.0f64..5.0)) {
        let b = Aabb::new(Point3::new(-0.5, -0.5, -0.5), Point3::new(0.5, 0.5, 0.5)).unwrap();
        let mesh = TriMesh::subdivided_box(&b, [2, 1, 3])
            .unwrap()
            .transformed(|p| Point3::new(p.x * scale[0] + shift[0], p.y * scale[1] + shift[1], p.z * scale[2] + shift[2]));
        let back = parse_obj(&to_obj_string(&mesh)).unwrap();
        prop_assert_eq!(back.faces(), mesh.faces());
        for (a, b) in back.vertices().iter().zip(mesh.vertices()) {
            prop_assert!((a - b).norm() < 1e-6);
        }
    }
}

#[test]
fn field_file_round_trip_and_bad_magic() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.vrf");
    let domain = Aabb::new(Point3::origin(), Point3::new(1.0, 1.0, 1.0)).unwrap();
    let field = VoxelRadianceField::constant([3, 3, 3], domain, 2.0, [0.1, 0.5, 0.9]).unwrap();
    save_field(&field, &path).unwrap();
    assert_eq!(load_field(&path).unwrap(), field);
    let mut bytes = std::fs::read(&path).unwrap();
    bytes[3] = b'2';
    assert!(field_from_bytes(&bytes).is_err());
    assert!(load_field(dir.path().join("missing.vrf")).is_err());
}

#[test]
fn coordinate_grid_round_trip() {
    let b = Aabb::new(Point3::new(-0.5, -0.5, -0.5), Point3::new(0.5, 0.5, 0.5)).unwrap();
    let cage = TriMesh::subdivided_box(&b, [1, 1, 1]).unwrap();
    let pair = CagePair::new(cage.clone(), cage.transformed(|p| p + Vec3::new(0.0, 0.0, 0.1 * p.x))).unwrap();
    for kind in CoordinateKind::ALL {
        let grid = precompute_coord_grid(&pair, kind, 16).unwrap();
        let bytes = coord_grid_to_bytes(&grid);
        let back = coord_grid_from_bytes(&bytes).unwrap();
        assert_eq!(back.kind(), kind);
        assert_eq!(back.res(), 16);
        assert_eq!(back.domain(), grid.domain());
        assert_eq!(back.valid_count(), grid.valid_count());
        for node in 0..16usize.pow(3) {
            assert_eq!(back.is_valid(node), grid.is_valid(node));
            assert_eq!(back.node_weights(node), grid.node_weights(node));
        }
        check_grid_matches(&back, &pair, kind).unwrap();
        assert!(coord_grid_from_bytes(&bytes[..bytes.len() - 1]).is_err());
    }
    let other = CagePair::identity(TriMesh::subdivided_box(&b, [2, 1, 1]).unwrap()).unwrap();
    let grid = precompute_coord_grid(&pair, CoordinateKind::Mvc, 16).unwrap();
    assert!(check_grid_matches(&grid, &other, CoordinateKind::Mvc).is_err());
}

#[test]
fn camera_json_round_trip() {
    let cams = vec![
        Camera::look_at(32, 24, 0.7, Point3::new(0.0, 0.0, 3.0), Point3::origin(), Vec3::y()).unwrap(),
        Camera::look_at(32, 24, 0.7, Point3::new(2.0, 1.0, -1.0), Point3::origin(), Vec3::y()).unwrap(),
    ];
    let back = parse_cameras(&cameras_to_json(&cams).unwrap(), None).unwrap();
    assert_eq!(back.len(), 2);
    for (a, b) in back.iter().zip(&cams) {
        assert_eq!((a.width, a.height), (b.width, b.height));
        assert!((a.c2w - b.c2w).abs().max() < 1e-12);
        assert!((a.angle_x() - b.angle_x()).abs() < 1e-12);
    }
}

#[test]
fn skewed_camera_rotations_are_rejected() {
    let text = r#"{"camera_angle_x": 0.7, "frames": [{"transform_matrix":
        [[1.0, 0.1, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 3.0], [0.0, 0.0, 0.0, 1.0]]}]}"#;
    assert!(parse_cameras(text, None).is_err());
    let nearly = text.replace("0.1,", "0.00001,");
    let cams = parse_cameras(&nearly, Some((8, 8))).unwrap();
    let r = cams[0].c2w.fixed_view::<3, 3>(0, 0).into_owned();
    assert!((r.transpose() * r - nalgebra::Matrix3::identity()).abs().max() < 1e-12);
}
