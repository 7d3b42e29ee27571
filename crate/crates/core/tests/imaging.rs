use proptest::prelude::*;
use qweight::imaging::{colormap, grid_side, vector_to_image, ColormapLut, FeatureImage, IMAGE_SIZE};

#[test]
fn anchors_and_midpoint() {
    assert_eq!(colormap(0.0), [0, 0, 255]);
    assert_eq!(colormap(1.0), [255, 0, 0]);
    assert_eq!(colormap(0.25), [0, 128, 127]);
    assert_eq!(colormap(-3.0), colormap(0.0));
    assert_eq!(colormap(7.0), colormap(1.0));
}

#[test]
fn constant_vector_is_uniform_midpoint() {
    let mid = ColormapLut::new().entry(128);
    let img = vector_to_image(&[3.5; 16]).unwrap();
    assert!(img.pixels().chunks(3).all(|px| px == mid));
    // With 17 features the grid is 5x5 and the padding cells read index 0.
    let padded = vector_to_image(&[3.5; 17]).unwrap();
    assert_eq!(padded.pixel(0, 0), mid);
    assert_eq!(padded.pixel(223, 223), colormap(0.0));
}

#[test]
fn hundred_features_fill_a_ten_grid() {
    assert_eq!(grid_side(100), 10);
    let v: Vec<f64> = (0..100).map(f64::from).collect();
    let img = vector_to_image(&v).unwrap();
    assert_eq!(img.pixel(0, 0), colormap(0.0));
    assert_eq!(img.pixel(223, 223), colormap(1.0));
    // floor(i * 10 / 224) for the row and column picks the source cell.
    let lut = ColormapLut::new();
    for (row, col) in [(0usize, 100usize), (57, 13), (200, 199)] {
        let feature = (row * 10 / IMAGE_SIZE) * 10 + col * 10 / IMAGE_SIZE;
        assert_eq!(img.pixel(row, col), lut.color(feature as f64 / 99.0));
    }
    assert_eq!(img.pixels().len(), IMAGE_SIZE * IMAGE_SIZE * 3);
}

#[test]
fn non_finite_input_is_rejected() {
    assert!(vector_to_image(&[1.0, f64::NAN]).is_err());
    assert!(vector_to_image(&[]).is_err());
}

#[test]
fn raw_dump_round_trips() {
    let img = vector_to_image(&[0.1, -2.0, 5.0]).unwrap();
    let mut buf = Vec::new();
    img.write_raw(&mut buf).unwrap();
    assert_eq!(&buf[..4], b"TLIM");
    assert_eq!(buf.len(), 12 + IMAGE_SIZE * IMAGE_SIZE * 3);
    assert_eq!(FeatureImage::read_raw(buf.as_slice()).unwrap(), img);
}

proptest! {
    #[test]
    fn positive_affine_maps_do_not_change_the_image(
        v in proptest::collection::vec(-100.0f64..100.0, 1..150),
        a in 1e-3f64..1e3,
        b in -1e3f64..1e3,
    ) {
        let w: Vec<f64> = v.iter().map(|x| a * x + b).collect();
        prop_assert_eq!(vector_to_image(&v).unwrap(), vector_to_image(&w).unwrap());
    }

    #[test]
    fn every_pixel_is_a_palette_entry(v in proptest::collection::vec(-5.0f64..5.0, 1..64)) {
        let img = vector_to_image(&v).unwrap();
        let lut = ColormapLut::new();
        for px in img.pixels().chunks(3) {
            prop_assert!(lut.entries().iter().any(|e| e[..] == *px));
        }
    }
}
