use proptest::prelude::*;
use qud_core::backend::protocol::{decode, encode, verify, ErrorBody};
use qud_core::backend::*;
use qud_core::encoding::EntitySpan;
use serde::de::DeserializeOwned;
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt::Debug;

fn round_trip<T: Serialize + DeserializeOwned + PartialEq + Debug>(
    msg: &T,
) -> Result<(), TestCaseError> {
    let body = encode(msg);
    let back: T =
        decode(Endpoint::Anchor, "x", &body).map_err(|e| TestCaseError::fail(e.to_string()))?;
    prop_assert_eq!(&back, msg);
    prop_assert_eq!(encode(&back), body);
    Ok(())
}

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![
        any::<f64>().prop_filter("finite", |f| f.is_finite()),
        0.0..=1.0f64
    ]
}

proptest! {
    #[test]
    fn anchor_messages(id in ".{0,12}", enc in ".{0,40}", n in 0usize..500, a in 0usize..500,
                       scores in prop::option::of(prop::collection::vec(finite(), 0..8))) {
        round_trip(&AnchorRequest { request_id: id.clone(), encoding: enc, n, answer_index: a })?;
        round_trip(&AnchorResponse { request_id: id, anchor_index: a, scores })?;
    }

    #[test]
    fn generate_messages(id in ".{0,12}", prompt in ".{0,60}", k in 0usize..50, p in finite(),
                         seed in prop::option::of(any::<u64>()), qs in prop::collection::vec(".{0,20}", 0..10)) {
        round_trip(&GenerateRequest { request_id: id.clone(), prompt, num_samples: k, top_p: p, seed })?;
        round_trip(&GenerateResponse { request_id: id, questions: qs })?;
    }

    #[test]
    fn rerank_messages(id in ".{0,12}", q in ".{0,30}", a in ".{0,30}", b in ".{0,30}", s in finite()) {
        round_trip(&RerankRequest { request_id: id.clone(), question: q, anchor_text: a, answer_text: b })?;
        round_trip(&RerankResponse { request_id: id, score: s })?;
    }

    #[test]
    fn ner_messages(id in ".{0,12}", idx in 0usize..100, toks in prop::collection::vec("\\PC{1,8}", 0..10),
                    spans in prop::collection::vec((0usize..20, 0usize..20, "[A-Z]{2,4}"), 0..4)) {
        round_trip(&NerRequest { request_id: id.clone(), sentence_index: idx, tokens: toks })?;
        let spans = spans.into_iter().map(|(s, e, t)| EntitySpan {
            sentence_index: idx, token_start: s, token_end: e, entity_type: t,
        }).collect();
        round_trip(&NerResponse { request_id: id, spans })?;
    }

    #[test]
    fn health_and_error_bodies(status in "[a-z]{1,8}", ids in prop::collection::btree_map("[a-z]{1,6}", ".{0,10}", 0..5),
                               msg in ".{0,30}") {
        round_trip(&HealthResponse { status, model_ids: ids })?;
        round_trip(&ErrorBody { error: "invalid_request".into(), message: msg })?;
    }

    #[test]
    fn mock_is_order_independent(seed in any::<u64>(), qs in prop::collection::vec("[a-z ]{1,20}", 1..6)) {
        let m = MockBackend::new(seed);
        let req = |q: &str| RerankRequest { request_id: "r".into(), question: q.into(), anchor_text: "a".into(), answer_text: "b".into() };
        let forward: Vec<f64> = qs.iter().map(|q| m.rerank(&req(q)).unwrap().score).collect();
        let backward: Vec<f64> = qs.iter().rev().map(|q| m.rerank(&req(q)).unwrap().score).collect();
        prop_assert_eq!(forward, backward.into_iter().rev().collect::<Vec<_>>());
    }
}

#[test]
fn scores_keep_enough_digits() {
    let body = encode(&RerankResponse {
        request_id: "r".into(),
        score: 0.123456789,
    });
    assert!(body.contains("0.123456789"), "{body}");
}

#[test]
fn invariant_violations_are_errors() {
    let areq = AnchorRequest {
        request_id: "a1".into(),
        encoding: "e".into(),
        n: 9,
        answer_index: 5,
    };
    let bad = AnchorResponse {
        request_id: "a1".into(),
        anchor_index: 7,
        scores: None,
    };
    let err = verify(&areq, &bad).unwrap_err();
    assert_eq!(err.kind, ErrorKind::Invariant);
    assert_eq!(err.endpoint, Endpoint::Anchor);
    assert_eq!(err.request_id, "a1");
    assert!(err.message.contains("anchor >= answer"));

    let greq = GenerateRequest {
        request_id: "g".into(),
        prompt: "p".into(),
        num_samples: 10,
        top_p: 0.9,
        seed: None,
    };
    let ten = GenerateResponse {
        request_id: "g".into(),
        questions: vec!["Q?".into(); 10],
    };
    assert!(verify(&greq, &ten).is_ok());
    let eleven = GenerateResponse {
        request_id: "g".into(),
        questions: vec!["Q?".into(); 11],
    };
    assert_eq!(
        verify(&greq, &eleven).unwrap_err().kind,
        ErrorKind::Invariant
    );

    let rreq = RerankRequest {
        request_id: "r".into(),
        question: "q".into(),
        anchor_text: "a".into(),
        answer_text: "b".into(),
    };
    let high = RerankResponse {
        request_id: "r".into(),
        score: 1.3,
    };
    assert_eq!(verify(&rreq, &high).unwrap_err().kind, ErrorKind::Invariant);
    let wrong_id = RerankResponse {
        request_id: "other".into(),
        score: 0.5,
    };
    assert_eq!(
        verify(&rreq, &wrong_id).unwrap_err().kind,
        ErrorKind::Malformed
    );
}

#[test]
fn malformed_bodies_are_distinct_errors() {
    let err =
        decode::<AnchorResponse>(Endpoint::Anchor, "id7", "{\"anchor_index\": \"x\"}").unwrap_err();
    assert_eq!(err.kind, ErrorKind::Malformed);
    assert_eq!(err.request_id, "id7");
    assert!(err.to_string().starts_with("/anchor [id7]"));
}

#[test]
fn checked_wrapper_rejects_bad_backend_output() {
    struct Liar;
    impl Backend for Liar {
        fn anchor(&self, r: &AnchorRequest) -> Result<AnchorResponse, BackendError> {
            Ok(AnchorResponse {
                request_id: r.request_id.clone(),
                anchor_index: r.answer_index,
                scores: None,
            })
        }
        fn generate(&self, r: &GenerateRequest) -> Result<GenerateResponse, BackendError> {
            Ok(GenerateResponse {
                request_id: r.request_id.clone(),
                questions: vec![" ".into()],
            })
        }
        fn rerank(&self, r: &RerankRequest) -> Result<RerankResponse, BackendError> {
            Ok(RerankResponse {
                request_id: r.request_id.clone(),
                score: -0.1,
            })
        }
        fn ner(&self, r: &NerRequest) -> Result<NerResponse, BackendError> {
            Ok(NerResponse {
                request_id: r.request_id.clone(),
                spans: vec![EntitySpan {
                    sentence_index: r.sentence_index,
                    token_start: 0,
                    token_end: 99,
                    entity_type: "X".into(),
                }],
            })
        }
        fn health(&self) -> Result<HealthResponse, BackendError> {
            Ok(HealthResponse {
                status: "ok".into(),
                model_ids: BTreeMap::new(),
            })
        }
    }
    let b = Checked(Liar);
    let a = b.anchor(&AnchorRequest {
        request_id: "1".into(),
        encoding: String::new(),
        n: 5,
        answer_index: 3,
    });
    assert_eq!(a.unwrap_err().kind, ErrorKind::Invariant);
    let g = b.generate(&GenerateRequest {
        request_id: "2".into(),
        prompt: String::new(),
        num_samples: 2,
        top_p: 0.9,
        seed: None,
    });
    assert_eq!(g.unwrap_err().kind, ErrorKind::Invariant);
    let r = b.rerank(&RerankRequest {
        request_id: "3".into(),
        question: "q".into(),
        anchor_text: String::new(),
        answer_text: String::new(),
    });
    assert_eq!(r.unwrap_err().kind, ErrorKind::Invariant);
    let n = b.ner(&NerRequest {
        request_id: "4".into(),
        sentence_index: 2,
        tokens: vec!["a".into()],
    });
    assert_eq!(n.unwrap_err().kind, ErrorKind::Invariant);
    let bad_req = b.generate(&GenerateRequest {
        request_id: "5".into(),
        prompt: String::new(),
        num_samples: 0,
        top_p: 0.9,
        seed: None,
    });
    assert_eq!(bad_req.unwrap_err().kind, ErrorKind::InvalidRequest);
}
