use cagewarp::geometry::{Point3, UnitDir3, Vec3};
use cagewarp::render::{volume_render_ray, RenderConfig};
use proptest::prelude::*;

fn z_axis() -> UnitDir3 {
    UnitDir3::new_normalize(Vec3::z())
}

fn config(samples: usize) -> RenderConfig {
    RenderConfig {
        samples,
        transmittance_cutoff: 0.0,
        ..RenderConfig::default()
    }
}

/// σ and color of a stack of homogeneous slabs along z.
fn slabs(layers: Vec<(f64, f64, f64, [f64; 3])>) -> impl Fn(&Point3, &UnitDir3) -> ([f64; 3], f64) {
    move |x, _| {
        for &(z0, z1, sigma, rgb) in &layers {
            if x.z > z0 && x.z < z1 {
                return (rgb, sigma);
            }
        }
        ([0.0; 3], 0.0)
    }
}

#[test]
fn slab_opacity_converges_to_beer_lambert() {
    let (sigma, z0, len) = (3.0f64, 0.917, 0.433);
    let exact = 1.0 - (-sigma * len).exp();
    for m in [64, 256, 1024, 4096] {
        let delta = 2.0 / m as f64;
        let r = volume_render_ray(slabs(vec![(z0, z0 + len, sigma, [1.0; 3])]), &Point3::origin(), &z_axis(), 0.5, 2.5, &config(m))
            .unwrap();
        let err = (r.opacity - exact).abs();
        // The slab is resolved up to one sample spacing.
        assert!(err <= sigma * delta, "M={m}: error {err:e}");
    }
}

#[test]
fn aligned_slabs_multiply_transmittance() {
    // Boundaries on sample edges: the quadrature is exact for piecewise
    // constant density.
    let layers = vec![(1.0, 1.25, 2.0, [1.0, 0.0, 0.0]), (1.5, 2.0, 0.7, [0.0, 0.0, 1.0])];
    let r = volume_render_ray(slabs(layers), &Point3::origin(), &z_axis(), 0.5, 2.5, &config(256)).unwrap();
    let (t1, t2) = ((-2.0f64 * 0.25).exp(), (-0.7f64 * 0.5).exp());
    assert!((r.transmittance - t1 * t2).abs() < 1e-12);
    assert!((r.rgb[0] - (1.0 - t1)).abs() < 1e-12);
    assert!(r.rgb[1].abs() < 1e-15);
    assert!((r.rgb[2] - t1 * (1.0 - t2)).abs() < 1e-12);
}

#[test]
fn background_fills_the_remaining_transmittance() {
    let cfg = RenderConfig {
        background: [0.2, 0.4, 0.6],
        ..config(128)
    };
    let r = volume_render_ray(slabs(vec![(1.0, 1.5, 1.0, [1.0; 3])]), &Point3::origin(), &z_axis(), 0.5, 2.5, &cfg).unwrap();
    let t = (-0.5f64).exp();
    for (c, b) in r.rgb.iter().zip([0.2, 0.4, 0.6]) {
        assert!((c - ((1.0 - t) + t * b)).abs() < 1e-12);
    }
}

#[test]
fn disparity_falls_with_distance() {
    let mut last = f64::INFINITY;
    for z in [0.8, 1.2, 1.6, 2.0] {
        let r = volume_render_ray(slabs(vec![(z, z + 0.05, 200.0, [1.0; 3])]), &Point3::origin(), &z_axis(), 0.5, 2.5, &config(512))
            .unwrap();
        assert!((r.depth - z).abs() < 0.02, "depth {} for slab at {z}", r.depth);
        assert!(r.disparity < last);
        last = r.disparity;
    }
}

#[test]
fn empty_ray_has_zero_disparity() {
    let r = volume_render_ray(slabs(vec![]), &Point3::origin(), &z_axis(), 0.5, 2.5, &config(64)).unwrap();
    assert_eq!(r.opacity, 0.0);
    assert_eq!(r.disparity, 0.0);
    assert_eq!(r.transmittance, 1.0);
}

#[test]
fn non_finite_samples_are_errors() {
    let r = volume_render_ray(|_: &Point3, _: &UnitDir3| ([0.0; 3], f64::NAN), &Point3::origin(), &z_axis(), 0.5, 2.5, &config(8));
    assert!(r.is_err());
}

proptest! {
    #[test]
    fn weights_and_transmittance_sum_to_one(
        layers in prop::collection::vec((0.5f64..2.5, 0.01f64..0.5, 0.0f64..50.0), 0..6),
        samples in 1usize..400,
    ) {
        let layers: Vec<_> = layers.into_iter().map(|(z, l, s)| (z, z + l, s, [0.5; 3])).collect();
        let r = volume_render_ray(slabs(layers), &Point3::origin(), &z_axis(), 0.5, 2.5, &config(samples)).unwrap();
        prop_assert!((r.weight_sum + r.transmittance - 1.0).abs() < 1e-9);
        prop_assert!((0.0..=1.0).contains(&r.opacity));
    }
}
