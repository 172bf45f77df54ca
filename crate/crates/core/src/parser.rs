//! Line-oriented parser for narrative specification files.
//!
//! Classification per physical line: a story header opens the story,
//! non-keyword lines before the first scenario are narrative, scenario
//! headers open scenarios, step keywords append steps, the And-keyword
//! appends a step inheriting the previous kind. `#`-comments and blank
//! lines are ignored. LF and CRLF both accepted; a leading UTF-8 BOM is
//! stripped. One story per file.

use crate::model::{SourceLoc, ToolError};
use crate::story::{KeywordPack, Scenario, Step, StepKind, Story};

/// Parses a specification file into its AST. `file` is the label recorded
/// in every `SourceLoc`; errors point at the offending physical line.
pub fn parse_story(text: &str, pack: &KeywordPack, file: &str) -> Result<Story, ToolError> {
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let mut parser = Parser { pack, file, story: None, scenario: None };

    for (index, raw_line) in text.split('\n').enumerate() {
        let line_no = (index + 1).min(u32::MAX as usize) as u32;
        let line = raw_line.strip_suffix('\r').unwrap_or(raw_line).trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        parser.take_line(line, line_no)?;
    }

    parser.finish()
}

struct Parser<'a> {
    pack: &'a KeywordPack,
    file: &'a str,
    story: Option<Story>,
    scenario: Option<Scenario>,
}

impl Parser<'_> {
    fn loc(&self, line_no: u32) -> SourceLoc {
        SourceLoc::new(self.file, line_no)
    }

    fn take_line(&mut self, line: &str, line_no: u32) -> Result<(), ToolError> {
        let loc = self.loc(line_no);

        if let Some(title) = match_header(line, self.pack.story) {
            if self.story.is_some() {
                return Err(ToolError::parse("duplicate story header", loc));
            }
            if title.is_empty() {
                return Err(ToolError::parse("empty story title", loc));
            }
            self.story = Some(Story {
                title: title.to_string(),
                narrative: Vec::new(),
                scenarios: Vec::new(),
                language: self.pack.language,
                loc,
            });
            return Ok(());
        }

        if let Some(header) = match_scenario_header(line, self.pack.scenario) {
            if self.story.is_none() {
                return Err(ToolError::parse("scenario before story header", loc));
            }
            self.close_scenario()?;
            let (ordinal, title) = match header {
                Ok(parts) => parts,
                Err(message) => return Err(ToolError::parse(message, loc)),
            };
            if title.is_empty() {
                return Err(ToolError::parse("empty scenario title", loc));
            }
            self.scenario = Some(Scenario {
                ordinal,
                title: title.to_string(),
                steps: Vec::new(),
                loc,
            });
            return Ok(());
        }

        if let Some((kind, rest)) = match_step(line, self.pack) {
            let Some(scenario) = self.scenario.as_mut() else {
                return Err(ToolError::parse("step before any scenario", loc));
            };
            let (kind, continuation) = match kind {
                StepToken::Kind(k) => (k, false),
                StepToken::And => match scenario.steps.last() {
                    Some(previous) => (previous.kind, true),
                    None => {
                        return Err(ToolError::parse(
                            "'And' cannot be the first step of a scenario",
                            loc,
                        ))
                    }
                },
            };
            let text = rest.trim();
            if text.is_empty() {
                return Err(ToolError::parse("empty step text", loc));
            }
            scenario.steps.push(Step { kind, text: text.to_string(), loc, continuation });
            return Ok(());
        }

        // Unclassified non-blank line.
        match (&mut self.story, &self.scenario) {
            (None, _) => Err(ToolError::parse("expected story header", loc)),
            (Some(story), None) => {
                story.narrative.push(line.to_string());
                Ok(())
            }
            (Some(_), Some(_)) => Err(ToolError::parse("unrecognized line in scenario", loc)),
        }
    }

    fn close_scenario(&mut self) -> Result<(), ToolError> {
        if let Some(scenario) = self.scenario.take() {
            if scenario.steps.is_empty() {
                return Err(ToolError::parse("scenario has no steps", scenario.loc));
            }
            self.story
                .as_mut()
                .expect("scenario is only opened under a story")
                .scenarios
                .push(scenario);
        }
        Ok(())
    }

    fn finish(mut self) -> Result<Story, ToolError> {
        self.close_scenario()?;
        self.story
            .ok_or_else(|| ToolError::parse("missing story header", SourceLoc::new(self.file, 1)))
    }
}

enum StepToken {
    Kind(StepKind),
    And,
}

/// `<keyword>` + optional spaces + `:` + title. Returns the trimmed title.
fn match_header<'l>(line: &'l str, keywords: &[&str]) -> Option<&'l str> {
    for keyword in keywords {
        if let Some(rest) = line.strip_prefix(keyword) {
            if let Some(title) = rest.trim_start().strip_prefix(':') {
                return Some(title.trim());
            }
        }
    }
    None
}

/// `<keyword>[ <int>]:` + title. Returns `Err(message)` when the colon
/// pattern matched but the ordinal is unusable; `None` when the line is not
/// a scenario header at all.
#[allow(clippy::type_complexity)]
fn match_scenario_header<'l>(
    line: &'l str,
    keywords: &[&str],
) -> Option<Result<(Option<u32>, &'l str), &'static str>> {
    for keyword in keywords {
        let Some(rest) = line.strip_prefix(keyword) else { continue };
        // Without ordinal: colon is the first thing after the keyword.
        if let Some(title) = rest.trim_start().strip_prefix(':') {
            return Some(Ok((None, title.trim())));
        }
        // With ordinal: whitespace, digits, optional whitespace, colon.
        if rest.starts_with(|c: char| c.is_whitespace()) {
            let after_ws = rest.trim_start();
            let digits: &str = &after_ws[..after_ws
                .find(|c: char| !c.is_ascii_digit())
                .unwrap_or(after_ws.len())];
            if !digits.is_empty() {
                if let Some(title) = after_ws[digits.len()..].trim_start().strip_prefix(':') {
                    return Some(match digits.parse::<u32>() {
                        Ok(0) => Err("scenario ordinal must be positive"),
                        Ok(n) => Ok((Some(n), title.trim())),
                        Err(_) => Err("invalid scenario ordinal"),
                    });
                }
            }
        }
    }
    None
}

/// A step keyword followed by whitespace or end of line.
fn match_step<'l>(line: &'l str, pack: &KeywordPack) -> Option<(StepToken, &'l str)> {
    let kinds = [
        (StepToken::Kind(StepKind::Given), pack.given),
        (StepToken::Kind(StepKind::When), pack.when),
        (StepToken::Kind(StepKind::Then), pack.then),
        (StepToken::And, pack.and),
    ];
    for (token, keywords) in kinds {
        for keyword in keywords {
            if let Some(rest) = line.strip_prefix(keyword) {
                if rest.is_empty() || rest.starts_with(|c: char| c.is_whitespace()) {
                    return Some((token, rest));
                }
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ToolErrorKind;
    use crate::story::{pretty_print, EN_PACK, PT_PACK};

    fn parse_en(text: &str) -> Result<Story, ToolError> {
        parse_story(text, &EN_PACK, "test.story")
    }

    #[test]
    fn empty_input_is_missing_story_header_at_line_one() {
        let err = parse_en("").unwrap_err();
        assert_eq!(err.kind, ToolErrorKind::ParseError);
        assert_eq!(err.message, "missing story header");
        assert_eq!(err.loc.unwrap(), SourceLoc::new("test.story", 1));
    }

    #[test]
    fn minimal_story_parses() {
        let story = parse_en("Story: T\n\nScenario: S\n  Given a thing\n").unwrap();
        assert_eq!(story.title, "T");
        assert!(story.narrative.is_empty());
        assert_eq!(story.scenarios.len(), 1);
        assert_eq!(story.scenarios[0].steps[0].text, "a thing");
        assert_eq!(story.scenarios[0].steps[0].loc.line, 4);
    }

    #[test]
    fn and_steps_inherit_the_previous_kind() {
        let story =
            parse_en("Story: T\nScenario: S\n  Given one\n  And two\n  When go\n  And more\n")
                .unwrap();
        let steps = &story.scenarios[0].steps;
        assert_eq!(steps[1].kind, StepKind::Given);
        assert!(steps[1].continuation);
        assert_eq!(steps[3].kind, StepKind::When);
        assert!(steps[3].continuation);
    }

    #[test]
    fn ordinal_header_forms() {
        let story = parse_en("Story: T\nScenario 7: S\n  Given x\n").unwrap();
        assert_eq!(story.scenarios[0].ordinal, Some(7));
        let story = parse_en("Story: T\nScenario: 12: S\n  Given x\n").unwrap();
        assert_eq!(story.scenarios[0].ordinal, None);
        assert_eq!(story.scenarios[0].title, "12: S");
    }

    #[test]
    fn comments_and_crlf_and_bom_are_tolerated() {
        let text = "\u{feff}Story: T\r\n# a comment\r\nScenario: S\r\n  Given x\r\n";
        let story = parse_en(text).unwrap();
        assert_eq!(story.scenarios[0].steps[0].text, "x");
    }

    #[test]
    fn narrative_lines_are_collected_trimmed() {
        let story = parse_en("Story: T\n  As a user\n  I want things\nScenario: S\n  Given x\n")
            .unwrap();
        assert_eq!(story.narrative, vec!["As a user", "I want things"]);
    }

    #[test]
    fn keyword_requires_a_token_boundary() {
        // "Givenx" is not a step keyword; before the first scenario it is
        // narrative.
        let story = parse_en("Story: T\nGivenx not a step\nScenario: S\n  Given x\n").unwrap();
        assert_eq!(story.narrative, vec!["Givenx not a step"]);
    }

    #[test]
    fn portuguese_keywords_parse() {
        let text = "História: T\nCenário 1: S\n  Dado uma coisa\n  Quando algo\n  Então resulta\n";
        let story = parse_story(text, &PT_PACK, "t.story").unwrap();
        assert_eq!(story.language, crate::story::Language::Pt);
        assert_eq!(story.scenarios[0].steps[0].kind, StepKind::Given);
        assert_eq!(story.scenarios[0].steps[2].kind, StepKind::Then);
    }

    #[test]
    fn portuguese_diacritic_free_alternates_parse() {
        let text = "Historia: T\nCenario: S\n  Dada uma coisa\n  Entao resulta\n";
        let story = parse_story(text, &PT_PACK, "t.story").unwrap();
        assert_eq!(story.scenarios[0].steps[0].kind, StepKind::Given);
        assert_eq!(story.scenarios[0].steps[1].kind, StepKind::Then);
    }

    #[test]
    fn pt_and_keyword_does_not_swallow_words_starting_with_e() {
        let text = "História: T\n  Ele escreveu\nCenário: S\n  Dado x\n  E y\n";
        let story = parse_story(text, &PT_PACK, "t.story").unwrap();
        assert_eq!(story.narrative, vec!["Ele escreveu"]);
        assert!(story.scenarios[0].steps[1].continuation);
    }

    #[test]
    fn round_trip_of_a_hand_built_story() {
        let text = "Story: T\n  narrative\n\nScenario 1: S\n  Given a\n  And b\n  When c\n  Then d\n";
        let story = parse_en(text).unwrap();
        assert_eq!(pretty_print(&story, &EN_PACK), text);
    }
}
