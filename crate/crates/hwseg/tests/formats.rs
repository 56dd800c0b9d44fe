mod common;

use common::{check_voc_round_trip, check_yolo_round_trip, random_segmentation};
use hwseg::export::{manifest, manifest_string};
use hwseg_core::PipelineConfig;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn yolo_round_trip_random_pages() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for i in 0..25 {
        let dir = tempfile::tempdir().unwrap();
        let seg = random_segmentation(&mut rng, &format!("doc{i}"));
        check_yolo_round_trip(&seg, dir.path()).unwrap();
    }
}

#[test]
fn voc_round_trip_random_pages() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for i in 0..25 {
        let dir = tempfile::tempdir().unwrap();
        let seg = random_segmentation(&mut rng, &format!("doc&<{i}>"));
        check_voc_round_trip(&seg, dir.path()).unwrap();
    }
}

#[test]
fn manifest_is_byte_stable_and_sorted() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let cfg = PipelineConfig::default();
    for i in 0..10 {
        let seg = random_segmentation(&mut rng, &format!("doc{i}"));
        let a = manifest_string(&seg, &cfg);
        assert_eq!(a, manifest_string(&seg.clone(), &cfg));
        let parsed: serde_json::Value = serde_json::from_str(&a).unwrap();
        assert_eq!(parsed, manifest(&seg, &cfg));
        let keys: Vec<&String> = parsed.as_object().unwrap().keys().collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
        assert_eq!(parsed["lines"].as_array().unwrap().len(), seg.lines.len());
    }
}
