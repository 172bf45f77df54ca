//! AST for narrative specification files, the English and Portuguese keyword
//! packs, and the canonical pretty printer.

use std::fmt;

use crate::model::{SourceLoc, ToolError};

/// The three step kinds of a scenario: context, event, expected outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StepKind {
    Given,
    When,
    Then,
}

impl fmt::Display for StepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepKind::Given => write!(f, "Given"),
            StepKind::When => write!(f, "When"),
            StepKind::Then => write!(f, "Then"),
        }
    }
}

/// One scenario line. `kind` is always the effective kind: a step written
/// with the And-keyword inherits the previous step's kind and carries
/// `continuation = true` so reporting can render it as written.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    pub kind: StepKind,
    pub text: String,
    pub loc: SourceLoc,
    pub continuation: bool,
}

/// A concrete behavioral example: ordered steps under a title. The ordinal
/// is decorative and is not validated against the scenario's position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scenario {
    pub ordinal: Option<u32>,
    pub title: String,
    pub steps: Vec<Step>,
    pub loc: SourceLoc,
}

/// A parsed specification file: title, narrative preamble, scenarios.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Story {
    pub title: String,
    pub narrative: Vec<String>,
    pub scenarios: Vec<Scenario>,
    pub language: Language,
    pub loc: SourceLoc,
}

/// Supported keyword-pack languages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Language {
    En,
    Pt,
}

impl Language {
    pub fn code(self) -> &'static str {
        match self {
            Language::En => "en",
            Language::Pt => "pt",
        }
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.code())
    }
}

/// Keyword spellings for one language. The first spelling of each list is
/// the canonical one used by the pretty printer; the rest are accepted
/// alternates (diacritic-free forms for the Portuguese pack).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeywordPack {
    pub language: Language,
    pub story: &'static [&'static str],
    pub scenario: &'static [&'static str],
    pub given: &'static [&'static str],
    pub when: &'static [&'static str],
    pub then: &'static [&'static str],
    pub and: &'static [&'static str],
}

pub const EN_PACK: KeywordPack = KeywordPack {
    language: Language::En,
    story: &["Story"],
    scenario: &["Scenario"],
    given: &["Given"],
    when: &["When"],
    then: &["Then"],
    and: &["And"],
};

pub const PT_PACK: KeywordPack = KeywordPack {
    language: Language::Pt,
    story: &["História", "Historia"],
    scenario: &["Cenário", "Cenario"],
    given: &["Dado", "Dada"],
    when: &["Quando"],
    then: &["Então", "Entao"],
    and: &["E"],
};

impl KeywordPack {
    /// The pack for a language.
    pub fn for_language(language: Language) -> &'static KeywordPack {
        match language {
            Language::En => &EN_PACK,
            Language::Pt => &PT_PACK,
        }
    }

    /// Spellings accepted for a step kind.
    pub fn kind_keywords(&self, kind: StepKind) -> &'static [&'static str] {
        match kind {
            StepKind::Given => self.given,
            StepKind::When => self.when,
            StepKind::Then => self.then,
        }
    }

    /// Canonical spelling for a step kind.
    pub fn kind_keyword(&self, kind: StepKind) -> &'static str {
        self.kind_keywords(kind)[0]
    }

    pub fn story_keyword(&self) -> &'static str {
        self.story[0]
    }

    pub fn scenario_keyword(&self) -> &'static str {
        self.scenario[0]
    }

    pub fn and_keyword(&self) -> &'static str {
        self.and[0]
    }
}

/// Looks up the keyword pack for a language code ("en" or "pt").
pub fn load_keyword_pack(code: &str) -> Result<&'static KeywordPack, ToolError> {
    match code {
        "en" => Ok(&EN_PACK),
        "pt" => Ok(&PT_PACK),
        other => Err(ToolError::config(format!(
            "unknown language code '{other}' (expected 'en' or 'pt')"
        ))),
    }
}

/// Emits the canonical layout for a story: header, narrative indented two
/// spaces, then each scenario preceded by a blank line with its steps
/// indented two spaces. Parsing the output yields the same AST back.
pub fn pretty_print(story: &Story, pack: &KeywordPack) -> String {
    let mut out = String::new();
    out.push_str(pack.story_keyword());
    out.push_str(": ");
    out.push_str(&story.title);
    out.push('\n');
    for line in &story.narrative {
        out.push_str("  ");
        out.push_str(line);
        out.push('\n');
    }
    for scenario in &story.scenarios {
        out.push('\n');
        out.push_str(pack.scenario_keyword());
        if let Some(ordinal) = scenario.ordinal {
            out.push(' ');
            out.push_str(&ordinal.to_string());
        }
        out.push_str(": ");
        out.push_str(&scenario.title);
        out.push('\n');
        for step in &scenario.steps {
            let keyword = if step.continuation {
                pack.and_keyword()
            } else {
                pack.kind_keyword(step.kind)
            };
            out.push_str("  ");
            out.push_str(keyword);
            out.push(' ');
            out.push_str(&step.text);
            out.push('\n');
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn en_pack_given_keyword() {
        let pack = load_keyword_pack("en").unwrap();
        assert_eq!(pack.kind_keywords(StepKind::Given), &["Given"]);
    }

    #[test]
    fn pt_pack_given_keyword_set() {
        let pack = load_keyword_pack("pt").unwrap();
        assert_eq!(pack.kind_keywords(StepKind::Given), &["Dado", "Dada"]);
        assert_eq!(pack.then, &["Então", "Entao"]);
        assert_eq!(pack.story, &["História", "Historia"]);
    }

    #[test]
    fn unknown_language_code_is_a_config_error() {
        let err = load_keyword_pack("xx").unwrap_err();
        assert_eq!(err.kind, crate::model::ToolErrorKind::ConfigError);
    }

    #[test]
    fn pretty_print_layout() {
        let loc = SourceLoc::new("t.story", 1);
        let story = Story {
            title: "T".into(),
            narrative: vec!["line one".into()],
            scenarios: vec![Scenario {
                ordinal: Some(2),
                title: "S".into(),
                steps: vec![
                    Step {
                        kind: StepKind::Given,
                        text: "a context".into(),
                        loc: loc.clone(),
                        continuation: false,
                    },
                    Step {
                        kind: StepKind::Given,
                        text: "another".into(),
                        loc: loc.clone(),
                        continuation: true,
                    },
                ],
                loc: loc.clone(),
            }],
            language: Language::En,
            loc,
        };
        let text = pretty_print(&story, &EN_PACK);
        assert_eq!(
            text,
            "Story: T\n  line one\n\nScenario 2: S\n  Given a context\n  And another\n"
        );
    }

    #[test]
    fn pretty_print_without_narrative_has_no_narrative_block() {
        let loc = SourceLoc::new("t.story", 1);
        let story = Story {
            title: "T".into(),
            narrative: vec![],
            scenarios: vec![Scenario {
                ordinal: None,
                title: "S".into(),
                steps: vec![Step {
                    kind: StepKind::When,
                    text: "x".into(),
                    loc: loc.clone(),
                    continuation: false,
                }],
                loc: loc.clone(),
            }],
            language: Language::En,
            loc,
        };
        assert_eq!(pretty_print(&story, &EN_PACK), "Story: T\n\nScenario: S\n  When x\n");
    }
}
