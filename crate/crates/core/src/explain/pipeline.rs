//! Prompt → provider → validated report, with caching and one repair round.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::RwLock;

use serde::Serialize;
use thiserror::Error;

use super::prompt::{build_prompt, prompt_hash, PromptBundle};
use super::provider::{provider, LlmConfig, LlmError, LlmProvider};
use super::report::{check_report, parse_report, ExplanationReport, ResolutionKind};
use crate::checker::{CheckConfig, Verdict};
use crate::language::{parse_rules, Spec};

/// Accepted answers by prompt hash, optionally mirrored to a directory.
/// Safe to share between concurrent requests.
#[derive(Debug, Default)]
pub struct ResponseCache {
    entries: RwLock<HashMap<String, String>>,
    dir: Option<PathBuf>,
}

impl ResponseCache {
    pub fn in_memory() -> Self {
        Self::default()
    }

    pub fn in_dir(dir: impl Into<PathBuf>) -> Self {
        ResponseCache {
            entries: RwLock::default(),
            dir: Some(dir.into()),
        }
    }

    pub fn get(&self, hash: &str) -> Option<String> {
        if let Some(hit) = self.entries.read().expect("cache lock").get(hash) {
            return Some(hit.clone());
        }
        let text = std::fs::read_to_string(self.dir.as_ref()?.join(format!("{hash}.json"))).ok()?;
        self.entries.write().expect("cache lock").insert(hash.to_string(), text.clone());
        Some(text)
    }

    pub fn insert(&self, hash: &str, raw: &str) {
        if let Some(dir) = &self.dir {
            // The cache is an optimisation; failing to persist only costs a
            // later provider call.
            let _ = std::fs::create_dir_all(dir).and_then(|_| std::fs::write(dir.join(format!("{hash}.json")), raw));
        }
        self.entries.write().expect("cache lock").insert(hash.to_string(), raw.to_string());
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Explanation {
    pub report: ExplanationReport,
    pub prompt_hash: String,
    /// Served from the cache without calling the provider.
    pub cached: bool,
    /// The answer needed a repair round.
    pub repaired: bool,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Error, Serialize)]
#[serde(tag = "category", rename_all = "snake_case")]
pub enum ExplainError {
    #[error(transparent)]
    Provider(#[from] LlmError),
    /// The answer was still unusable after the repair round.
    #[error("unusable answer: {}", problems.join("; "))]
    Format { problems: Vec<String>, excerpt: String },
}

impl ExplainError {
    pub fn category(&self) -> &'static str {
        match self {
            ExplainError::Provider(_) => "provider",
            ExplainError::Format { .. } => "format",
        }
    }
}

pub struct Explainer {
    provider: Box<dyn LlmProvider>,
    cache: ResponseCache,
}

impl Explainer {
    pub fn new(provider: Box<dyn LlmProvider>, cache: ResponseCache) -> Self {
        Explainer { provider, cache }
    }

    pub fn from_config(cfg: &LlmConfig, cache: ResponseCache) -> Self {
        Self::new(provider(cfg), cache)
    }

    pub fn explain(
        &self,
        spec: &Spec,
        verdict: &Verdict,
        system_description: &str,
        cfg: &CheckConfig,
    ) -> Result<Explanation, ExplainError> {
        self.explain_bundle(spec, &build_prompt(spec, verdict, system_description, cfg))
    }

    pub fn explain_bundle(&self, spec: &Spec, bundle: &PromptBundle) -> Result<Explanation, ExplainError> {
        let system = bundle.system_message();
        let user = bundle.user_message();
        let hash = prompt_hash(&system, &user);
        let done = |report, cached, repaired| Explanation {
            report,
            prompt_hash: hash.clone(),
            cached,
            repaired,
            warnings: bundle.warnings.clone(),
        };
        if let Some(raw) = self.cache.get(&hash) {
            if let Ok(report) = accept(&raw, spec) {
                return Ok(done(report, true, false));
            }
        }

        let raw = self.provider.complete(&system, &user)?;
        let problems = match accept(&raw, spec) {
            Ok(report) => {
                self.cache.insert(&hash, &raw);
                return Ok(done(report, false, false));
            }
            Err(p) => p,
        };

        let retry = repair_prompt(&user, &problems, &raw);
        let raw = self.provider.complete(&system, &retry)?;
        match accept(&raw, spec) {
            Ok(report) => {
                self.cache.insert(&hash, &raw);
                Ok(done(report, false, true))
            }
            Err(problems) => Err(ExplainError::Format {
                problems,
                excerpt: raw.chars().take(300).collect(),
            }),
        }
    }
}

/// The original request followed by what was wrong with the answer.
pub fn repair_prompt(user: &str, problems: &[String], raw: &str) -> String {
    let mut out = format!("{user}\n## Your previous answer could not be used\n\n");
    for p in problems {
        out.push_str(&format!("- {p}\n"));
    }
    let excerpt: String = raw.chars().take(600).collect();
    out.push_str(&format!(
        "\nPrevious answer (start):\n{excerpt}\n\nReply again with one corrected JSON object following the template.\n"
    ));
    out
}

/// Validates an answer: template shape, enumerations, rule names, and the
/// syntax of every proposed rule.
fn accept(raw: &str, spec: &Spec) -> Result<ExplanationReport, Vec<String>> {
    let report = parse_report(raw).map_err(|e| vec![e.to_string()])?;
    check_report(&report, spec).map_err(|e| vec![e.to_string()])?;
    let mut problems = Vec::new();
    if report.resolution.kind != ResolutionKind::Remove {
        for (i, s) in [&report.resolution.suggestion1, &report.resolution.suggestion2].into_iter().enumerate() {
            if let Err(diags) = parse_rules(&s.rule) {
                for d in diags {
                    problems.push(format!("Suggestion{}: {} (line {}, column {})", i + 1, d.message, d.span.line, d.span.col));
                }
            }
        }
    }
    if problems.is_empty() {
        Ok(report)
    } else {
        Err(problems)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::checker::check_consistency;
    use crate::language::parse;
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::{Arc, Mutex};

    const R1R2: &str = include_str!("../../fixtures/r1r2.sleec");

    const GOOD: &str = r#"{"Conflicting Rules": {"Error": {"Rule1": "R1", "Rule2": "R2", "Scenario": "s", "Category": "deadlock", "Justification": "j"},
        "Resolution": {"Kind": "remove rule", "Suggestion1": {"Rule": "R2", "Justification": "j"}, "Suggestion2": {"Rule": "R1", "Justification": "j"}}}}"#;

    /// Replays scripted answers and records the prompts it received.
    struct Scripted {
        answers: Mutex<Vec<Result<String, LlmError>>>,
        prompts: Mutex<Vec<String>>,
        calls: AtomicUsize,
    }

    impl Scripted {
        fn new(answers: Vec<Result<&str, LlmError>>) -> Arc<Self> {
            Arc::new(Scripted {
                answers: Mutex::new(answers.into_iter().rev().map(|a| a.map(str::to_string)).collect()),
                prompts: Mutex::default(),
                calls: AtomicUsize::new(0),
            })
        }
    }

    impl LlmProvider for Arc<Scripted> {
        fn complete(&self, _system: &str, user: &str) -> Result<String, LlmError> {
            self.calls.fetch_add(1, Ordering::SeqCst);
            self.prompts.lock().unwrap().push(user.to_string());
            self.answers.lock().unwrap().pop().expect("no more scripted answers")
        }
    }

    fn setup() -> (Spec, Verdict) {
        let spec = parse(R1R2).unwrap();
        let v = check_consistency(&spec, &CheckConfig::default()).unwrap().remove(0);
        (spec, v)
    }

    #[test]
    fn second_request_is_served_from_cache() {
        let (spec, v) = setup();
        let p = Scripted::new(vec![Ok(GOOD)]);
        let ex = Explainer::new(Box::new(p.clone()), ResponseCache::in_memory());
        let a = ex.explain(&spec, &v, "", &CheckConfig::default()).unwrap();
        let b = ex.explain(&spec, &v, "", &CheckConfig::default()).unwrap();
        assert!(!a.cached && b.cached);
        assert_eq!(serde_json::to_string(&a.report).unwrap(), serde_json::to_string(&b.report).unwrap());
        assert_eq!(p.calls.load(Ordering::SeqCst), 1);
    }

    #[test]
    fn invalid_answer_gets_one_repair_round() {
        let (spec, v) = setup();
        let bad = GOOD.replace("\"deadlock\"", "\"livelock\"");
        let p = Scripted::new(vec![Ok(&bad), Ok(GOOD)]);
        let ex = Explainer::new(Box::new(p.clone()), ResponseCache::in_memory());
        let e = ex.explain(&spec, &v, "", &CheckConfig::default()).unwrap();
        assert!(e.repaired);
        let prompts = p.prompts.lock().unwrap();
        assert!(prompts[1].starts_with(&prompts[0]));
        assert!(prompts[1].contains("livelock"));
    }

    #[test]
    fn syntax_errors_in_suggestions_are_sent_back() {
        let (spec, v) = setup();
        let broken = GOOD
            .replace("remove rule", "modify rule")
            .replace("\"Rule\": \"R2\"", "\"Rule\": \"R2 when DetectUserFallen then\"");
        let p = Scripted::new(vec![Ok(&broken), Ok(&broken)]);
        let ex = Explainer::new(Box::new(p.clone()), ResponseCache::in_memory());
        let err = ex.explain(&spec, &v, "", &CheckConfig::default()).unwrap_err();
        assert_eq!(err.category(), "format");
        assert!(p.prompts.lock().unwrap()[1].contains("Suggestion1"));
        assert_eq!(p.calls.load(Ordering::SeqCst), 2);
    }

    #[test]
    fn unknown_rule_is_rejected() {
        let (spec, v) = setup();
        let wrong = GOOD.replace("\"Rule2\": \"R2\"", "\"Rule2\": \"R7\"");
        let p = Scripted::new(vec![Ok(&wrong), Ok(&wrong)]);
        let ex = Explainer::new(Box::new(p.clone()), ResponseCache::in_memory());
        assert!(matches!(ex.explain(&spec, &v, "", &CheckConfig::default()), Err(ExplainError::Format { .. })));
    }

    #[test]
    fn provider_errors_surface() {
        let (spec, v) = setup();
        let p = Scripted::new(vec![Err(LlmError::Timeout { secs: 60 })]);
        let ex = Explainer::new(Box::new(p), ResponseCache::in_memory());
        let err = ex.explain(&spec, &v, "", &CheckConfig::default()).unwrap_err();
        assert_eq!(err.category(), "provider");
    }

    #[test]
    fn disk_cache_survives_a_new_explainer() {
        let (spec, v) = setup();
        let dir = std::env::temp_dir().join(format!("sleec-cache-{}", std::process::id()));
        let first = Explainer::new(Box::new(Scripted::new(vec![Ok(GOOD)])), ResponseCache::in_dir(&dir));
        first.explain(&spec, &v, "", &CheckConfig::default()).unwrap();
        let second = Explainer::new(Box::new(Scripted::new(vec![])), ResponseCache::in_dir(&dir));
        assert!(second.explain(&spec, &v, "", &CheckConfig::default()).unwrap().cached);
        std::fs::remove_dir_all(dir).unwrap();
    }

    #[test]
    fn concurrent_requests_share_the_cache() {
        let (spec, v) = setup();
        let p = Scripted::new(vec![Ok(GOOD), Ok(GOOD), Ok(GOOD), Ok(GOOD)]);
        let ex = Explainer::new(Box::new(p), ResponseCache::in_memory());
        std::thread::scope(|s| {
            for _ in 0..4 {
                s.spawn(|| ex.explain(&spec, &v, "", &CheckConfig::default()).unwrap());
            }
        });
        assert!(ex.explain(&spec, &v, "", &CheckConfig::default()).unwrap().cached);
    }
}
