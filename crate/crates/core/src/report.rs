//! Report rendering (plain text and JSON) and exit-code mapping.
//!
//! The plain format is byte-stable: one line per scenario, one indented line
//! per non-Passed step, then exactly two summary lines. Durations appear in
//! the JSON format only, so identical runs produce identical plain output.

use std::fmt::Write;

use serde_json::json;

use crate::model::ToolError;
use crate::runner::{ReportFormat, RunReport, ScenarioResult, StepResult, StepStatus, StoryResult};
use crate::story::KeywordPack;

/// Renders a report in the requested format.
pub fn format_report(report: &RunReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Plain => format_plain(report),
        ReportFormat::Json => format_json(report),
    }
}

/// Maps a run outcome to the process exit code: 0 all passed, 1 any
/// failure, 2 undefined steps only, 3 parse or config error.
pub fn exit_code(outcome: &Result<RunReport, ToolError>) -> i32 {
    match outcome {
        Ok(report) => report.exit_code(),
        Err(_) => 3,
    }
}

fn format_plain(report: &RunReport) -> String {
    let mut out = String::new();
    for story_result in &report.stories {
        let pack = KeywordPack::for_language(story_result.story.language);
        for scenario_result in &story_result.scenarios {
            let _ = writeln!(
                out,
                "  Scenario: {} ... {}",
                scenario_result.scenario.title,
                scenario_result.outcome.name().to_uppercase()
            );
            for step_result in &scenario_result.steps {
                if step_result.status.is_passed() {
                    continue;
                }
                let keyword = if step_result.step.continuation {
                    pack.and_keyword()
                } else {
                    pack.kind_keyword(step_result.step.kind)
                };
                let _ = write!(
                    out,
                    "    {keyword} {} ... {}",
                    step_result.step.text,
                    step_result.status.name().to_uppercase()
                );
                match &step_result.status {
                    StepStatus::Failed(message) | StepStatus::Errored(message) => {
                        let _ = writeln!(out, ": {message}");
                    }
                    _ => out.push('\n'),
                }
            }
        }
    }
    out.push_str(&summary_lines(report));
    out
}

// Two summary lines; zero-count clauses are omitted except `passed`.
fn summary_lines(report: &RunReport) -> String {
    let c = &report.counters;
    let scenario_clauses = clauses(&[
        (c.scenarios_passed, "passed", true),
        (c.scenarios_failed, "failed", false),
        (c.scenarios_undefined, "undefined", false),
    ]);
    let step_clauses = clauses(&[
        (c.steps_passed, "passed", true),
        (c.steps_failed, "failed", false),
        (c.steps_errored, "errored", false),
        (c.steps_undefined, "undefined", false),
        (c.steps_ambiguous, "ambiguous", false),
        (c.steps_skipped, "skipped", false),
    ]);
    format!(
        "{} scenarios ({scenario_clauses})\n{} steps ({step_clauses})\n",
        c.scenarios_total(),
        c.steps_total(),
    )
}

fn clauses(entries: &[(usize, &str, bool)]) -> String {
    entries
        .iter()
        .filter(|(count, _, always)| *always || *count > 0)
        .map(|(count, label, _)| format!("{count} {label}"))
        .collect::<Vec<_>>()
        .join(", ")
}

fn format_json(report: &RunReport) -> String {
    let stories: Vec<_> = report.stories.iter().map(story_json).collect();
    let c = &report.counters;
    let value = json!({
        "stories": stories,
        "counters": {
            "scenarios_passed": c.scenarios_passed,
            "scenarios_failed": c.scenarios_failed,
            "scenarios_undefined": c.scenarios_undefined,
            "steps_passed": c.steps_passed,
            "steps_failed": c.steps_failed,
            "steps_errored": c.steps_errored,
            "steps_undefined": c.steps_undefined,
            "steps_ambiguous": c.steps_ambiguous,
            "steps_skipped": c.steps_skipped,
        },
        "exit_code": report.exit_code(),
    });
    let mut text = serde_json::to_string_pretty(&value).expect("report serialization");
    text.push('\n');
    text
}

fn story_json(story_result: &StoryResult) -> serde_json::Value {
    let story = &story_result.story;
    let scenarios: Vec<_> = story_result.scenarios.iter().map(scenario_json).collect();
    json!({
        "story": {
            "title": story.title,
            "language": story.language.code(),
            "loc": { "file": story.loc.file, "line": story.loc.line },
        },
        "scenarios": scenarios,
    })
}

fn scenario_json(scenario_result: &ScenarioResult) -> serde_json::Value {
    let scenario = &scenario_result.scenario;
    let steps: Vec<_> = scenario_result.steps.iter().map(step_json).collect();
    json!({
        "scenario": {
            "ordinal": scenario.ordinal,
            "title": scenario.title,
            "loc": { "file": scenario.loc.file, "line": scenario.loc.line },
        },
        "steps": steps,
        "outcome": scenario_result.outcome.name(),
    })
}

fn step_json(step_result: &StepResult) -> serde_json::Value {
    let step = &step_result.step;
    let mut value = json!({
        "step": {
            "kind": step.kind.to_string().to_lowercase(),
            "text": step.text,
            "loc": { "file": step.loc.file, "line": step.loc.line },
            "continuation": step.continuation,
        },
        "status": step_result.status.name(),
        "duration": step_result.duration_ms,
    });
    if let StepStatus::Failed(message) | StepStatus::Errored(message) = &step_result.status {
        value["message"] = json!(message);
    }
    value
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SourceLoc;
    use crate::runner::{ScenarioOutcome, StepResult};
    use crate::story::{Language, Scenario, Step, StepKind, Story};

    fn loc() -> SourceLoc {
        SourceLoc::new("t.story", 1)
    }

    fn demo_report(statuses: Vec<StepStatus>) -> RunReport {
        let steps: Vec<Step> = statuses
            .iter()
            .enumerate()
            .map(|(i, _)| Step {
                kind: StepKind::Given,
                text: format!("step {i}"),
                loc: loc(),
                continuation: false,
            })
            .collect();
        let scenario = Scenario { ordinal: None, title: "S".into(), steps: steps.clone(), loc: loc() };
        let step_results: Vec<StepResult> = steps
            .into_iter()
            .zip(statuses)
            .map(|(step, status)| StepResult { step, status, duration_ms: 0 })
            .collect();
        let outcome = if step_results.iter().any(|s| matches!(s.status, StepStatus::Failed(_) | StepStatus::Errored(_))) {
            ScenarioOutcome::Failed
        } else if step_results.iter().any(|s| matches!(s.status, StepStatus::Undefined | StepStatus::Ambiguous)) {
            ScenarioOutcome::Undefined
        } else {
            ScenarioOutcome::Passed
        };
        let story = Story {
            title: "T".into(),
            narrative: vec![],
            scenarios: vec![scenario.clone()],
            language: Language::En,
            loc: loc(),
        };
        RunReport::new(vec![StoryResult {
            story,
            scenarios: vec![ScenarioResult { scenario, steps: step_results, outcome }],
        }])
    }

    #[test]
    fn all_passing_summary_lines() {
        let report = demo_report(vec![StepStatus::Passed, StepStatus::Passed, StepStatus::Passed]);
        let text = format_plain(&report);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[lines.len() - 2], "1 scenarios (1 passed)");
        assert_eq!(lines[lines.len() - 1], "3 steps (3 passed)");
    }

    #[test]
    fn failed_summary_includes_only_nonzero_clauses() {
        let report = demo_report(vec![
            StepStatus::Passed,
            StepStatus::Passed,
            StepStatus::Failed("boom".into()),
        ]);
        let text = format_plain(&report);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[lines.len() - 2], "1 scenarios (0 passed, 1 failed)");
        assert_eq!(lines[lines.len() - 1], "3 steps (2 passed, 1 failed)");
        assert!(text.contains("    Given step 2 ... FAILED: boom\n"));
    }

    #[test]
    fn zero_story_report_still_emits_the_two_summary_lines() {
        let report = RunReport::new(vec![]);
        let text = format_plain(&report);
        assert_eq!(text, "0 scenarios (0 passed)\n0 steps (0 passed)\n");
    }

    #[test]
    fn exit_codes_follow_the_precedence_rules() {
        let passed = demo_report(vec![StepStatus::Passed]);
        assert_eq!(exit_code(&Ok(passed)), 0);
        let undefined = demo_report(vec![StepStatus::Undefined]);
        assert_eq!(exit_code(&Ok(undefined)), 2);
        let failed = demo_report(vec![StepStatus::Failed("x".into())]);
        assert_eq!(exit_code(&Ok(failed)), 1);
        let err = ToolError::config("nope");
        assert_eq!(exit_code(&Err(err)), 3);
    }

    #[test]
    fn json_report_shape() {
        let report = demo_report(vec![StepStatus::Passed, StepStatus::Failed("boom".into())]);
        let text = format_json(&report);
        let value: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(value["exit_code"], 1);
        assert_eq!(value["counters"]["steps_failed"], 1);
        let step = &value["stories"][0]["scenarios"][0]["steps"][1];
        assert_eq!(step["status"], "failed");
        assert_eq!(step["message"], "boom");
        assert_eq!(step["step"]["kind"], "given");
        assert!(step["duration"].is_number());
        assert_eq!(value["stories"][0]["scenarios"][0]["outcome"], "failed");
    }
}
