use hwseg_core::raster::{GrayImage, RotationDirection};
use hwseg_core::skew::{
    correct_skew, estimate_lskew, preprocess, sht_lines, LSkew, SkewMethod, SkewParams,
};
use hwseg_core::synth::{generate_line, SynthLineSpec};

fn params() -> SkewParams {
    SkewParams::default()
}

fn lskew(img: &GrayImage) -> f64 {
    match estimate_lskew(img, &params()).unwrap() {
        LSkew::Estimated { estimate, .. } => estimate.theta_avg,
        LSkew::ShtFailed => panic!("line estimator found nothing"),
    }
}

#[test]
fn level_line_left_alone() {
    let line = generate_line(&SynthLineSpec::new(0.0, 5, 1)).unwrap();
    assert!(lskew(&line.image).abs() <= 1.0);
    let out = correct_skew(&line.image, &params()).unwrap();
    assert!(!out.estimate.applied);
    assert_eq!(out.image, line.image);
}

#[test]
fn rising_line_peaks_near_eighty() {
    let line = generate_line(&SynthLineSpec::new(-10.0, 5, 2)).unwrap();
    let edges = preprocess(&line.image, 50.0, 150.0).unwrap();
    let lines = sht_lines(&edges, 45.0, params().sht_threshold_frac);
    assert!(!lines.is_empty());
    assert!((lines[0].theta - 80.0).abs() <= 1.0, "{:?}", lines[0]);
}

#[test]
fn positive_skews_estimated() {
    let line = generate_line(&SynthLineSpec::new(15.0, 5, 3)).unwrap();
    assert!((lskew(&line.image) - 15.0).abs() <= 1.0);
    let line = generate_line(&SynthLineSpec::new(7.0, 5, 4)).unwrap();
    match estimate_lskew(&line.image, &params()).unwrap() {
        LSkew::Estimated { estimate, .. } => {
            assert!((estimate.theta_avg - 7.0).abs() <= 1.0);
            assert_eq!(estimate.direction, Some(RotationDirection::AntiClockwise));
        }
        LSkew::ShtFailed => panic!("line estimator found nothing"),
    }
}

#[test]
fn negative_skew_corrected_clockwise() {
    let line = generate_line(&SynthLineSpec::new(-12.0, 5, 5)).unwrap();
    let out = correct_skew(&line.image, &params()).unwrap();
    assert_eq!(out.estimate.method, SkewMethod::LSkew);
    assert_eq!(out.estimate.direction, Some(RotationDirection::Clockwise));
    assert!(out.estimate.applied);
    assert!(lskew(&out.image).abs() <= 1.0);
}

#[test]
fn tiny_line_falls_back_to_segments() {
    let spec = SynthLineSpec {
        word_len: (8, 12),
        height: 12,
        ..SynthLineSpec::new(8.0, 2, 1)
    };
    let line = generate_line(&spec).unwrap();
    assert_eq!(
        estimate_lskew(&line.image, &params()).unwrap(),
        LSkew::ShtFailed
    );
    let out = correct_skew(&line.image, &params()).unwrap();
    assert_eq!(out.estimate.method, SkewMethod::DSkew);
    assert!(out.estimate.applied);
    assert!(!out.trace.segments.is_empty());
    let again = correct_skew(&out.image, &params()).unwrap();
    assert!(again.estimate.theta_avg.abs() <= 2.0);
}

#[test]
fn sparse_small_image_fails_line_estimator() {
    let mut img = GrayImage::filled(30, 8, 255).unwrap();
    for (x, y) in [(4, 2), (17, 5), (25, 3)] {
        img.set(x, y, 0);
    }
    assert_eq!(estimate_lskew(&img, &params()).unwrap(), LSkew::ShtFailed);
}

#[test]
fn fixed_seed_is_bit_identical() {
    let spec = SynthLineSpec {
        word_len: (8, 12),
        height: 12,
        ..SynthLineSpec::new(-6.0, 2, 9)
    };
    let line = generate_line(&spec).unwrap();
    let a = correct_skew(&line.image, &params()).unwrap();
    let b = correct_skew(&line.image, &params()).unwrap();
    assert_eq!(a, b);
}
