mod common;

use std::collections::BTreeMap;

use common::*;
use proptest::prelude::*;
use shapegrasp::decomp2d::{rasterize_parts, SplitTree};
use shapegrasp::eval::default_sweep_grid;
use shapegrasp::geom::Polygon;
use shapegrasp::graph::ObjectGraph;
use shapegrasp::reasoner::{select_part, TaskScores};
use shapegrasp::selector::{decide, gamma_sequence, Reason};
use shapegrasp::shape_fit::{fit_primitive, nearest_color, NodeAttributes, ShapePrimitive, PALETTE};
use shapegrasp::SelectorConfig;

fn star_polygon() -> impl Strategy<Value = Polygon> {
    prop::collection::vec(12.0f64..60.0, 5..=14).prop_map(|radii| star(&radii, (64.0, 64.0)))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, ..ProptestConfig::default() })]

    #[test]
    fn leaves_respect_the_threshold_and_partition_the_mask(poly in star_polygon()) {
        let tree = SplitTree::new(&poly).unwrap();
        let mask = rasterize(&poly, 128, 128);
        let mut prev = usize::MAX;
        for g in default_sweep_grid() {
            let leaves: Vec<Polygon> = tree.parts(g).into_iter().map(|(p, _)| p).collect();
            for leaf in &leaves {
                prop_assert!(oracle_concavity(leaf) <= g + 1e-9);
            }
            let total: f64 = leaves.iter().map(Polygon::area).sum();
            prop_assert!((total - poly.area()).abs() <= 1e-6 * poly.area());
            let groups = rasterize_parts(&leaves, &mask);
            let mut owner = vec![0u8; 128 * 128];
            for group in &groups {
                for &(r, c) in group {
                    owner[r as usize * 128 + c as usize] += 1;
                }
            }
            for r in 0..128 {
                for c in 0..128 {
                    prop_assert_eq!(owner[r * 128 + c], u8::from(*mask.get(r, c)));
                }
            }
            prop_assert!(leaves.len() <= prev);
            prev = leaves.len();
        }
    }
}

proptest! {
    #[test]
    fn gamma_sequence_steps_down_to_the_floor(init in 0.05f64..0.5, step in 0.005f64..0.05) {
        let seq = gamma_sequence(init, step, 0.01);
        prop_assert!(!seq.is_empty());
        prop_assert!((seq[0] - init).abs() < 1e-8);
        for w in seq.windows(2) {
            prop_assert!((w[0] - w[1] - step).abs() < 1e-8);
        }
        let last = *seq.last().unwrap();
        prop_assert!(last >= 0.01 - 1e-9 && last - step < 0.01);
    }

    #[test]
    fn decision_rule_matches_its_definition(n in 1usize..30, conf in 0.0f64..=1.0, omega in 1usize..20, alpha in 0.0f64..=1.0) {
        let cfg = SelectorConfig { omega, alpha, ..SelectorConfig::default() };
        let picked_3d = decide(n, conf, &cfg) == Reason::Preferred3D;
        prop_assert_eq!(picked_3d, n <= omega && conf >= alpha);
    }

    #[test]
    fn palette_colours_map_to_themselves_under_small_noise(k in 0usize..16, d in prop::array::uniform3(-6i16..=6)) {
        let (name, rgb) = PALETTE[k];
        let jitter = |v: u8, e: i16| (v as i16 + e).clamp(0, 255) as u8;
        let c = [jitter(rgb[0], d[0]), jitter(rgb[1], d[1]), jitter(rgb[2], d[2])];
        prop_assert_eq!(nearest_color(c), name);
    }

    #[test]
    fn rectangles_keep_their_orientation(angle in 0.0f64..180.0, len in 60.0f64..120.0, ratio in 0.15f64..0.35) {
        let m = rotated_rect(200, 200, (100.0, 100.0), len, len * ratio, angle);
        let outline = shapegrasp::geom::extract_contours(&m).remove(0);
        let prim = fit_primitive(&outline, 2.0).unwrap();
        let fitted = prim.angle_deg().unwrap();
        let err = (fitted - angle).rem_euclid(180.0);
        prop_assert!(err.min(180.0 - err) <= 3.0, "{} vs {}", fitted, angle);
        let circle = matches!(prim, ShapePrimitive::Circle { .. });
        prop_assert!(!circle);
    }

    #[test]
    fn selection_ignores_positive_rescaling(scores in prop::collection::vec(0.0f64..1.0, 1..8), k in 0.01f64..1.0) {
        let graph = flat_graph(scores.len());
        let a = TaskScores { scores: scores.iter().copied().enumerate().collect(), rationale: None };
        let b = TaskScores { scores: scores.iter().map(|s| s * k).enumerate().collect(), rationale: None };
        let pick = select_part(&a, &graph).unwrap();
        prop_assert_eq!(pick, select_part(&b, &graph).unwrap());
        prop_assert!(scores.iter().all(|&s| s <= scores[pick]));
    }
}

fn flat_graph(n: usize) -> ObjectGraph {
    let node = |i: usize| NodeAttributes {
        shape: ShapePrimitive::Circle { center: [10.0 * i as f64, 0.0], radius: 4.0 },
        centroid_px: [10.0 * i as f64, 0.0],
        area_pct: 100.0 / n as f64,
        aspect_ratio: 1.0,
        angle_deg: None,
        color: "red".into(),
        width_px: 8.0,
        extra: BTreeMap::new(),
    };
    ObjectGraph {
        object_name: None,
        image_size: (64, 64),
        nodes: (0..n).map(node).collect(),
        edges: Vec::new(),
        part_index: (0..n).collect(),
        outlines: vec![Vec::new(); n],
    }
}
