use lof_core::preprocess::{
    edge_map, hsv_pixel_to_rgb, luma, rgb_pixel_to_hsv, stack_channels, ChannelName, EdgeOperator,
    RgbImage,
};
use proptest::prelude::*;

fn image_from(w: u32, h: u32, px: &[[u8; 3]]) -> RgbImage {
    RgbImage::from_fn(w, h, |x, y| image::Rgb(px[(y * w + x) as usize]))
}

#[test]
fn hsv_lattice_round_trip() {
    let mut worst = 0.0f64;
    for r in (0..=256).step_by(16) {
        for g in (0..=256).step_by(16) {
            for b in (0..=256).step_by(16) {
                let rgb = [r.min(255) as u8, g.min(255) as u8, b.min(255) as u8];
                let back = hsv_pixel_to_rgb(rgb_pixel_to_hsv(rgb));
                for c in 0..3 {
                    worst = worst.max((back[c] - rgb[c] as f64 / 255.0).abs());
                }
            }
        }
    }
    assert!(worst <= 1.0 / 255.0, "worst {worst}");
}

proptest! {
    #[test]
    fn value_is_channel_max(rgb in any::<[u8; 3]>()) {
        let [h, s, v] = rgb_pixel_to_hsv(rgb);
        prop_assert_eq!(v, *rgb.iter().max().unwrap() as f64 / 255.0);
        prop_assert!((0.0..1.0).contains(&h));
        prop_assert!((0.0..=1.0).contains(&s));
        if rgb[0] == rgb[1] && rgb[1] == rgb[2] {
            prop_assert_eq!(s, 0.0);
            prop_assert_eq!(h, 0.0);
        }
    }

    #[test]
    fn sobel_invariant_under_inversion(
        (w, h, px) in (3u32..10, 3u32..10).prop_flat_map(|(w, h)| {
            (Just(w), Just(h), prop::collection::vec(any::<[u8; 3]>(), (w * h) as usize))
        })
    ) {
        let img = image_from(w, h, &px);
        let inv: Vec<[u8; 3]> = px.iter().map(|p| p.map(|c| 255 - c)).collect();
        let a = edge_map(&img, EdgeOperator::Sobel).unwrap();
        let b = edge_map(&image_from(w, h, &inv), EdgeOperator::Sobel).unwrap();
        for (x, y) in a.data.iter().zip(&b.data) {
            prop_assert!((x - y).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(x));
        }
    }
}

/// Direct 3x3 Sobel with replicate padding on a luma grid.
fn hand_sobel(l: &[[f64; 3]; 3], x: usize, y: usize) -> f64 {
    let kx = [[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]];
    let ky = [[-1.0, -2.0, -1.0], [0.0, 0.0, 0.0], [1.0, 2.0, 1.0]];
    let (mut gx, mut gy) = (0.0, 0.0);
    for dy in 0..3 {
        for dx in 0..3 {
            let sx = (x as isize + dx as isize - 1).clamp(0, 2) as usize;
            let sy = (y as isize + dy as isize - 1).clamp(0, 2) as usize;
            gx += kx[dy][dx] * l[sy][sx];
            gy += ky[dy][dx] * l[sy][sx];
        }
    }
    (gx * gx + gy * gy).sqrt() / 20f64.sqrt()
}

#[test]
fn sobel_matches_hand_convolution() {
    let mut px = [[0u8; 3]; 9];
    px[4] = [255, 255, 255];
    let img = image_from(3, 3, &px);
    let e = edge_map(&img, EdgeOperator::Sobel).unwrap();
    let grid = [[0.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 0.0]];
    for y in 0..3 {
        for x in 0..3 {
            assert!((e.get(x, y) - hand_sobel(&grid, x, y)).abs() < 1e-12, "({x},{y})");
        }
    }
    assert!(e.get(1, 1).abs() < 1e-12);
    assert!((e.get(0, 0) - 0.1f64.sqrt()).abs() < 1e-12);
}

#[test]
fn constant_image_is_edge_free() {
    let img = RgbImage::from_pixel(7, 5, image::Rgb([90, 140, 30]));
    for op in [EdgeOperator::Sobel, EdgeOperator::Laplacian] {
        assert!(edge_map(&img, op).unwrap().data.iter().all(|&v| v == 0.0));
    }
}

#[test]
fn step_edge_stays_on_the_step() {
    let img = RgbImage::from_fn(8, 4, |x, _| if x < 4 { image::Rgb([0; 3]) } else { image::Rgb([255; 3]) });
    let e = edge_map(&img, EdgeOperator::Sobel).unwrap();
    for y in 0..4 {
        for x in 0..8 {
            let v = e.get(x, y);
            if x == 3 || x == 4 {
                assert!(v > 0.0);
            } else {
                assert_eq!(v, 0.0);
            }
        }
    }
}

#[test]
fn luma_uses_bt601_weights() {
    let img = RgbImage::from_pixel(1, 1, image::Rgb([255, 0, 0]));
    assert!((luma(&img).data[0] - 0.299).abs() < 1e-12);
}

#[test]
fn seven_channel_stack_keeps_rgb() {
    let img = RgbImage::from_fn(4, 4, |x, y| image::Rgb([(x * 60) as u8, (y * 60) as u8, 128]));
    let stack = stack_channels(&img, &ChannelName::FULL, EdgeOperator::Sobel).unwrap();
    assert_eq!(stack.planes.len(), 7);
    for (i, p) in img.pixels().enumerate() {
        for c in 0..3 {
            assert_eq!(stack.planes[c].data[i], p.0[c] as f64 / 255.0);
        }
    }
    assert_eq!(
        ChannelName::parse_list("R,G,B,H,S,V,E").unwrap(),
        ChannelName::FULL.to_vec()
    );
    assert!(ChannelName::parse_list("R,X").is_err());
}
