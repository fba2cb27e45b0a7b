//! Property tests for scoring, validation, parsing, and filtering invariants.

mod common;

use proptest::prelude::*;

use curator::clis_l::{clis_l_scene, score_pair, Aggregation, ClisLConfig, ClisLWeights};
use curator::example_pool::{ExamplePool, LayoutExample, RelationNormalizer};
use curator::export::qa::{all_templates, matches_template, sample_qa};
use curator::gen_clients::parse::extract_json;
use curator::gen_clients::prompts::{render_layout_prompt, PromptTemplate};
use curator::geometry::{sim_score, BBox};
use curator::pipeline::manifest::{filter_records, Provenance, SampleRecord};
use curator::scene_graph::{validate_scene_graph, SceneGraph, SceneGraphDoc};

use common::{raw, triple};

const CATS: [&str; 3] = ["dog", "cat", "tree"];
const RELS: [&str; 3] = ["above", "on", "left of"];

fn arb_box() -> impl Strategy<Value = BBox> {
    (0.02f64..0.45, 0.02f64..0.45)
        .prop_flat_map(|(w, h)| (0.001f64..(0.999 - w), 0.001f64..(0.999 - h), Just(w), Just(h)))
        .prop_filter_map("inside the unit square", |(x, y, w, h)| BBox::new(x, y, w, h).ok())
}

fn arb_scene() -> impl Strategy<Value = SceneGraph> {
    prop::collection::vec((0usize..3, arb_box()), 2..6).prop_flat_map(|objs| {
        let n = objs.len();
        let rels = prop::collection::vec((0usize..n, 0usize..n, 0usize..3), 0..n);
        (Just(objs), rels)
    })
    .prop_map(|(objs, rels)| {
        let objects = objs
            .iter()
            .enumerate()
            .map(|(i, (c, b))| raw(&format!("o{i}"), CATS[*c], &format!("a {}", CATS[*c]), Some("red"), b))
            .collect();
        let relations = rels
            .iter()
            .filter(|(s, o, _)| s != o)
            .map(|(s, o, r)| triple(&format!("o{s}"), RELS[*r], &format!("o{o}")))
            .collect();
        validate_scene_graph(SceneGraphDoc { objects, relations, caption: "A scene.".into(), ..Default::default() })
            .unwrap()
    })
}

fn arb_pool() -> impl Strategy<Value = ExamplePool> {
    prop::collection::vec((0usize..3, 0usize..3, 0usize..3, arb_box(), arb_box()), 0..40).prop_map(|v| {
        let examples = v.into_iter().enumerate().map(|(i, (s, o, r, sb, ob))| LayoutExample {
            subject_category: CATS[s].into(),
            object_category: CATS[o].into(),
            relation: RELS[r].into(),
            subject_box: sb,
            object_box: ob,
            source_id: format!("e{i}"),
        });
        ExamplePool::from_examples(examples, RelationNormalizer::default()).unwrap()
    })
}

fn arb_weights() -> impl Strategy<Value = ClisLWeights> {
    (0.0f64..=1.0, 0.01f64..1.0, 0.01f64..1.0, 0.01f64..1.0).prop_map(|(a, s, d, r)| {
        let t = s + d + r;
        ClisLWeights::new(a, 1.0 - a, s / t, d / t, 1.0 - s / t - d / t).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn sim_score_bounded_and_symmetric(a in 0.0f64..1e6, b in 0.0f64..1e6) {
        let s = sim_score(a, b).unwrap();
        prop_assert!((0.0..=1.0).contains(&s));
        prop_assert!((s - sim_score(b, a).unwrap()).abs() <= 1e-12);
        prop_assert_eq!(sim_score(a, a).unwrap(), 1.0);
    }

    #[test]
    fn sim_score_rejects_negative(a in -1e6f64..-1e-9, b in 0.0f64..1.0) {
        prop_assert!(sim_score(a, b).is_err());
        prop_assert!(sim_score(b, a).is_err());
    }

    #[test]
    fn triple_components_in_unit_range(
        pool in arb_pool(), s in arb_box(), o in arb_box(), r in 0usize..3, w in arb_weights()
    ) {
        let config = ClisLConfig { weights: w, ..ClisLConfig::default() };
        let t = score_pair("dog", &s, "cat", &o, RELS[r], &pool, &config).unwrap();
        for v in [t.size, t.dist, t.dir, t.combined] {
            prop_assert!((0.0..=1.0 + 1e-12).contains(&v), "{t:?}");
        }
        prop_assert_eq!(t.matched, !pool.lookup("dog", "cat", RELS[r]).is_empty());
        if !t.matched {
            prop_assert_eq!(t.combined, config.fallback);
        }
    }

    #[test]
    fn scene_score_in_range_and_min_below_mean(sg in arb_scene(), pool in arb_pool()) {
        let mean = clis_l_scene(&sg, &pool, &ClisLConfig::default()).unwrap();
        let min = clis_l_scene(&sg, &pool, &ClisLConfig { aggregation: Aggregation::Min, ..ClisLConfig::default() })
            .unwrap();
        prop_assert!((0.0..=100.0).contains(&mean.scene_score));
        prop_assert!(min.scene_score <= mean.scene_score + 1e-9);
        prop_assert_eq!(mean.triples.len(), sg.relations().len());
        if sg.relations().is_empty() {
            prop_assert_eq!(mean.scene_score, 100.0);
            prop_assert!(!mean.warnings.is_empty());
        }
    }

    #[test]
    fn validation_roundtrips(sg in arb_scene()) {
        let json = serde_json::to_string(&sg).unwrap();
        let back: SceneGraph = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(&back, &sg);
        let again = validate_scene_graph(SceneGraphDoc::from(back)).unwrap();
        prop_assert_eq!(again, sg);
    }

    #[test]
    fn bbox_constructor_enforces_unit_square(x in -0.5f64..1.5, y in -0.5f64..1.5, w in -0.5f64..1.5, h in -0.5f64..1.5) {
        let ok = [x, y, w, h, x + w, y + h].iter().all(|v| *v > 0.0 && *v < 1.0);
        prop_assert_eq!(BBox::new(x, y, w, h).is_ok(), ok);
    }

    #[test]
    fn json_found_amid_prose(prefix in "[a-zA-Z ,.]{0,40}", suffix in "[a-zA-Z ,.]{0,40}", n in 0u32..1000) {
        let raw = format!("{prefix}```json\n{{\"value\": {n}, \"list\": [1, 2]}}\n```{suffix}");
        let v = extract_json(&raw).unwrap();
        prop_assert_eq!(v["value"].as_u64(), Some(u64::from(n)));
    }

    #[test]
    fn prompt_payload_is_verbatim(desc in "[a-zA-Z{}_ ]{1,60}") {
        prop_assume!(!desc.trim().is_empty());
        let p = render_layout_prompt(&PromptTemplate::layout(), &desc).unwrap();
        let expected = format!("{}\n", desc.trim());
        prop_assert!(p.text.ends_with(&expected), "payload not verbatim");
    }

    #[test]
    fn qa_questions_match_templates(sg in arb_scene(), seed in 0u64..1000) {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        for p in sample_qa(&sg, "img.png", &mut rng) {
            prop_assert!(all_templates().iter().any(|t| matches_template(t, &p.question)), "{}", p.question);
            prop_assert!(!p.question.is_empty() && !p.answer.is_empty());
            prop_assert!(!p.answer.contains('{'), "unfilled slot in answer");
        }
    }

    #[test]
    fn filtering_is_monotone(
        scores in prop::collection::vec((0.0f64..=100.0, 0.0f64..=100.0), 0..40),
        t1 in 0.0f64..=100.0, t2 in 0.0f64..=100.0, ti in 0.0f64..=100.0
    ) {
        let sg = validate_scene_graph(SceneGraphDoc {
            objects: vec![raw("o1", "dog", "a dog", None, &BBox::new(0.1, 0.1, 0.2, 0.2).unwrap())],
            caption: "A dog.".into(),
            ..Default::default()
        }).unwrap();
        let records: Vec<SampleRecord> = scores.iter().enumerate().map(|(i, (l, im))| SampleRecord {
            sample_id: format!("s{i:03}"),
            item_id: format!("item-{i:05}"),
            image_index: 0,
            image: "x.png".into(),
            scene_graph: sg.clone(),
            clis_l: *l,
            clis_i: *im,
            provenance: Provenance {
                root_seed: 0, item_seed: 0, image_seed: 0, generation_round: 0,
                text_backend: "t".into(), image_backend: "i".into(),
                caption_backend: "c".into(), judge_backend: "j".into(),
            },
        }).collect();
        let (lo, hi) = (t1.min(t2), t1.max(t2));
        let (a, ca) = filter_records(&records, lo, ti);
        let (b, cb) = filter_records(&records, hi, ti);
        prop_assert!(cb.retained <= ca.retained);
        prop_assert!(b.iter().all(|r| a.contains(r)));
        prop_assert_eq!(ca.retained + ca.below_tau_l + ca.below_tau_i, records.len());
        prop_assert!(a.iter().all(|r| r.passes(lo, ti)));
        let (all, _) = filter_records(&records, 0.0, 0.0);
        prop_assert_eq!(all, records);
    }
}
