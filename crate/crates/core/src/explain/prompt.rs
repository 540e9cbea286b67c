//! Assembling the four-part prompt.

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::context::{render_pseudo_csp, select_context};
use crate::checker::{format_trace, CheckConfig, Verdict, VerdictKind};
use crate::language::{format, Spec};
use crate::semantics::tick_scale;

pub const CONFLICT_TEMPLATE: &str = include_str!("../../schema/conflict_template.json");
pub const REDUNDANCY_TEMPLATE: &str = include_str!("../../schema/redundancy_template.json");
/// JSON Schema both templates' answers must satisfy.
pub const REPORT_SCHEMA: &str = include_str!("../../schema/report.schema.json");

/// Stands in for a missing system description.
pub const NO_DESCRIPTION: &str =
    "No system description was provided. Infer the purpose of the system from the rules and the names of its events and measures.";

const PREAMBLE: &str = "You help ethicists, lawyers and engineers debug normative requirements \
for autonomous agents written in the SLEEC DSL. A rule `Id when Trigger [and condition] then \
[not] Response [within n unit]` obliges (or forbids) the response after the trigger; \
`unless condition [then response]` clauses override it, the last matching one winning, and an \
`unless` without `then` cancels the obligation. A bounded model checker has found a problem in \
the rules below.";

const CONFLICT_TASK: &str = "Explain the problem in plain language and propose two different \
resolutions of the same kind. Reply with a single JSON object that follows the template exactly. \
Category must be one of deadlock, divergence, naming; Kind must be one of add rule, combine rule, \
remove rule, modify rule. Write each proposed rule in SLEEC DSL starting with its name, e.g. \
`R3 when A and m > L2 then B within 2 minutes`; for remove rule give only the rule name; a \
combined rule replaces both Rule1 and Rule2.";

const REDUNDANCY_TASK: &str = "Explain why the rule is redundant in plain language and propose \
two different resolutions of the same kind. Reply with a single JSON object that follows the \
template exactly. Kind must be one of add rule, combine rule, remove rule, modify rule. Write \
each proposed rule in SLEEC DSL starting with its name; for remove rule give only the rule name.";

/// Everything sent to the model for one verdict.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PromptBundle {
    /// (1) The selected rules with the definitions they use, in SLEEC DSL.
    pub rules: String,
    /// (2) The same rules as pseudo-CSP processes.
    pub semantics: String,
    /// (3) The counterexample trace, or the verdict message if it has none.
    pub counterexamples: String,
    /// (4) The natural-language system description.
    pub system_description: String,
    /// The checker's one-line summary of the verdict.
    pub finding: String,
    pub template: &'static str,
    pub warnings: Vec<String>,
}

impl PromptBundle {
    pub fn sections(&self) -> [&str; 4] {
        [&self.rules, &self.semantics, &self.counterexamples, &self.system_description]
    }

    pub fn system_message(&self) -> String {
        PREAMBLE.to_string()
    }

    pub fn user_message(&self) -> String {
        let task = if self.template == REDUNDANCY_TEMPLATE {
            REDUNDANCY_TASK
        } else {
            CONFLICT_TASK
        };
        let mut semantics = self.semantics.clone();
        if semantics.is_empty() {
            semantics.push_str("(no rules)\n");
        }
        format!(
            "## 1. SLEEC rules\n\n{}\n## 2. Semantics\n\nOne process per rule; `tock` is one time unit, `[]` separates alternatives and `&` guards them.\n\n{}\n## 3. Counterexample\n\nChecker finding: {}\n\n{}\n\n## 4. System description\n\n{}\n\n## Output template\n\n{}\n{}\n",
            self.rules,
            semantics,
            self.finding,
            self.counterexamples,
            self.system_description,
            self.template,
            task
        )
    }

    /// Key for caches and canned responses.
    pub fn hash(&self) -> String {
        prompt_hash(&self.system_message(), &self.user_message())
    }
}

pub fn prompt_hash(system: &str, user: &str) -> String {
    let mut h = Sha256::new();
    h.update(system.as_bytes());
    h.update([0u8]);
    h.update(user.as_bytes());
    hex::encode(h.finalize())
}

/// Builds the prompt for `verdict`: a pure function of its arguments.
pub fn build_prompt(spec: &Spec, verdict: &Verdict, system_description: &str, cfg: &CheckConfig) -> PromptBundle {
    let context = select_context(spec, verdict);
    let scale = tick_scale(spec).ok();
    let counterexamples = match (&verdict.witness, &verdict.trace) {
        (Some(w), _) => format_trace(w, cfg.elide_tocks),
        (None, Some(t)) => t.clone(),
        (None, None) => verdict.message.clone(),
    };
    let mut warnings = Vec::new();
    let description = system_description.trim();
    let system_description = if description.is_empty() {
        warnings.push("no system description given; the prompt uses a placeholder".to_string());
        NO_DESCRIPTION.to_string()
    } else {
        description.to_string()
    };
    PromptBundle {
        rules: format(&context),
        semantics: render_pseudo_csp(&context.rules, scale.as_ref()),
        counterexamples,
        system_description,
        finding: verdict.message.clone(),
        template: if verdict.kind == VerdictKind::Redundancy {
            REDUNDANCY_TEMPLATE
        } else {
            CONFLICT_TEMPLATE
        },
        warnings,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::checker::check_consistency;
    use crate::language::parse;

    const R1R2: &str = include_str!("../../fixtures/r1r2.sleec");
    const ALMI_DESCRIPTION: &str = include_str!("../../fixtures/almi_description.txt");

    fn r1r2_bundle(description: &str) -> PromptBundle {
        let spec = parse(R1R2).unwrap();
        let cfg = CheckConfig::default();
        let v = &check_consistency(&spec, &cfg).unwrap()[0];
        build_prompt(&spec, v, description, &cfg)
    }

    #[test]
    fn counterexample_section_is_the_golden_trace() {
        let b = r1r2_bundle(ALMI_DESCRIPTION);
        assert_eq!(b.counterexamples, "<DetectUserFallen, emergencyLevel.L1, tock, tock>");
        assert!(b.warnings.is_empty());
        assert_eq!(b.system_description, ALMI_DESCRIPTION.trim());
    }

    #[test]
    fn sections_appear_in_order_then_template() {
        let b = r1r2_bundle(ALMI_DESCRIPTION);
        let text = b.user_message();
        let mut at = 0;
        for part in b.sections().into_iter().chain([b.template]) {
            let found = text[at..].find(part.trim()).unwrap_or_else(|| panic!("missing or misplaced: {part}"));
            at += found + part.trim().len();
        }
        assert!(text.contains(CONFLICT_TEMPLATE));
    }

    #[test]
    fn empty_description_uses_placeholder() {
        let b = r1r2_bundle("  \n");
        assert_eq!(b.system_description, NO_DESCRIPTION);
        assert_eq!(b.warnings.len(), 1);
    }

    #[test]
    fn deterministic() {
        let a = r1r2_bundle(ALMI_DESCRIPTION);
        let b = r1r2_bundle(ALMI_DESCRIPTION);
        assert_eq!(a.user_message(), b.user_message());
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), r1r2_bundle("").hash());
    }

    #[test]
    fn hash_is_sha256_hex() {
        // Digest of "a\0b", computed independently.
        assert_eq!(prompt_hash("a", "b"), "59b271ae1bbcb1d31d41929817f4b16fb439eb4f31520b5ad1d5ce98920a7138");
    }
}
