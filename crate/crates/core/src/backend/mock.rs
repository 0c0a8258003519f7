use std::collections::BTreeMap;

use sha2::{Digest, Sha256};

use super::protocol::*;
use super::Backend;
use crate::encoding::GenerationPrompt;

/// Deterministic stand-in for the model server.
///
/// * anchor: always `answer_index - 1`
/// * generate: `What happened after <first 5 anchor tokens>? [k]` for k = 1..=num_samples
/// * rerank: SHA-256 of (seed, question) mapped into `[0, 1)`
/// * ner: no entities
///
/// Outputs depend only on the seed and the request.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MockBackend {
    seed: u64,
}

impl MockBackend {
    pub fn new(seed: u64) -> Self {
        MockBackend { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn score(&self, question: &str) -> f64 {
        let mut h = Sha256::new();
        h.update(self.seed.to_le_bytes());
        h.update(question.as_bytes());
        let digest = h.finalize();
        let mut word = [0u8; 8];
        word.copy_from_slice(&digest[..8]);
        // top 53 bits give an exactly representable fraction
        (u64::from_be_bytes(word) >> 11) as f64 / (1u64 << 53) as f64
    }
}

impl Backend for MockBackend {
    fn anchor(&self, req: &AnchorRequest) -> Result<AnchorResponse, BackendError> {
        Ok(AnchorResponse {
            request_id: req.request_id.clone(),
            anchor_index: req.answer_index.saturating_sub(1),
            scores: None,
        })
    }

    fn generate(&self, req: &GenerateRequest) -> Result<GenerateResponse, BackendError> {
        let prompt = GenerationPrompt::parse(&req.prompt).ok_or_else(|| {
            BackendError::new(
                Endpoint::Generate,
                &req.request_id,
                ErrorKind::Remote,
                "prompt does not have the context/anchor/answer layout",
            )
        })?;
        let head: Vec<&str> = prompt.anchor_part.split_whitespace().take(5).collect();
        let head = head.join(" ");
        Ok(GenerateResponse {
            request_id: req.request_id.clone(),
            questions: (1..=req.num_samples)
                .map(|k| format!("What happened after {head}? [{k}]"))
                .collect(),
        })
    }

    fn rerank(&self, req: &RerankRequest) -> Result<RerankResponse, BackendError> {
        Ok(RerankResponse {
            request_id: req.request_id.clone(),
            score: self.score(&req.question),
        })
    }

    fn ner(&self, req: &NerRequest) -> Result<NerResponse, BackendError> {
        Ok(NerResponse {
            request_id: req.request_id.clone(),
            spans: Vec::new(),
        })
    }

    fn health(&self) -> Result<HealthResponse, BackendError> {
        let model_ids: BTreeMap<String, String> = ["anchor", "generator", "reranker", "ner"]
            .into_iter()
            .map(|m| (m.to_owned(), format!("mock-{m}@seed{}", self.seed)))
            .collect();
        Ok(HealthResponse {
            status: "ok".to_owned(),
            model_ids,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gen_req(prompt: &str, k: usize) -> GenerateRequest {
        GenerateRequest {
            request_id: "g".into(),
            prompt: prompt.into(),
            num_samples: k,
            top_p: 0.9,
            seed: None,
        }
    }

    #[test]
    fn anchor_is_previous_sentence() {
        let m = MockBackend::new(3);
        let req = AnchorRequest {
            request_id: "a".into(),
            encoding: String::new(),
            n: 9,
            answer_index: 4,
        };
        assert_eq!(m.anchor(&req).unwrap().anchor_index, 3);
    }

    #[test]
    fn questions_are_templated_and_seed_stable() {
        let prompt = "[A_START] One two three four five six. [A_END] [SEP] One two three four five six. [SEP] Next.";
        let a = MockBackend::new(1).generate(&gen_req(prompt, 3)).unwrap();
        let b = MockBackend::new(1).generate(&gen_req(prompt, 3)).unwrap();
        assert_eq!(a, b);
        assert_eq!(
            a.questions[0],
            "What happened after One two three four five? [1]"
        );
        assert_eq!(a.questions.len(), 3);
    }

    #[test]
    fn rerank_scores_in_unit_interval_and_seed_dependent() {
        // 100 seed pairs; a collision would need two 53-bit hashes to agree.
        for s in 0..100u64 {
            let a = MockBackend::new(s).score("Why did it rain?");
            let b = MockBackend::new(s + 1000).score("Why did it rain?");
            assert!((0.0..1.0).contains(&a));
            assert_ne!(a, b, "seed pair {s}");
        }
    }

    #[test]
    fn health_lists_four_models() {
        assert_eq!(MockBackend::new(0).health().unwrap().model_ids.len(), 4);
    }
}
