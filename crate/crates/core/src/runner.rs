//! Executes parsed stories against a step registry with sequential
//! Given→When→Then semantics and aggregates a run report.
//!
//! The runner is single-threaded end to end; every scenario gets a fresh
//! context, and after the first non-Passed step the rest of the scenario is
//! skipped.

use std::any::Any;
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::model::{ToolError, ToolErrorKind, Value};
use crate::parser::parse_story;
use crate::steps::{registry_from_manifest, MatchResult, StepRegistry};
use crate::story::{KeywordPack, Language, Scenario, Step, Story};

/// Per-scenario state shared by the handlers of one scenario run: named
/// `Value` bindings plus an opaque host-state slot. A fresh, empty context
/// is created for every scenario.
#[derive(Default)]
pub struct ScenarioContext {
    bindings: BTreeMap<String, Value>,
    host: Option<Box<dyn Any>>,
}

impl ScenarioContext {
    pub fn new() -> ScenarioContext {
        ScenarioContext::default()
    }

    pub fn set(&mut self, key: impl Into<String>, value: Value) {
        self.bindings.insert(key.into(), value);
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.bindings.get(key)
    }

    pub fn bindings(&self) -> &BTreeMap<String, Value> {
        &self.bindings
    }

    /// Stores arbitrary host state for the duration of the scenario.
    pub fn set_host<T: Any>(&mut self, state: T) {
        self.host = Some(Box::new(state));
    }

    pub fn host_ref<T: Any>(&self) -> Option<&T> {
        self.host.as_deref().and_then(|h| h.downcast_ref())
    }

    pub fn host_mut<T: Any>(&mut self) -> Option<&mut T> {
        self.host.as_deref_mut().and_then(|h| h.downcast_mut())
    }
}

/// Outcome of one executed (or skipped) step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StepStatus {
    Passed,
    Failed(String),
    Errored(String),
    Undefined,
    Ambiguous,
    Skipped,
}

impl StepStatus {
    pub fn is_passed(&self) -> bool {
        matches!(self, StepStatus::Passed)
    }

    /// Lowercase status name, without any message.
    pub fn name(&self) -> &'static str {
        match self {
            StepStatus::Passed => "passed",
            StepStatus::Failed(_) => "failed",
            StepStatus::Errored(_) => "errored",
            StepStatus::Undefined => "undefined",
            StepStatus::Ambiguous => "ambiguous",
            StepStatus::Skipped => "skipped",
        }
    }
}

/// One step of a scenario run. Duration is zero for steps that never
/// executed (Skipped/Undefined/Ambiguous).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepResult {
    pub step: Step,
    pub status: StepStatus,
    pub duration_ms: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioOutcome {
    Passed,
    Failed,
    Undefined,
}

impl ScenarioOutcome {
    pub fn name(&self) -> &'static str {
        match self {
            ScenarioOutcome::Passed => "passed",
            ScenarioOutcome::Failed => "failed",
            ScenarioOutcome::Undefined => "undefined",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioResult {
    pub scenario: Scenario,
    pub steps: Vec<StepResult>,
    pub outcome: ScenarioOutcome,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StoryResult {
    pub story: Story,
    pub scenarios: Vec<ScenarioResult>,
}

/// Aggregate counters over a report tree. Always equal to a recount of the
/// tree they came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Counters {
    pub scenarios_passed: usize,
    pub scenarios_failed: usize,
    pub scenarios_undefined: usize,
    pub steps_passed: usize,
    pub steps_failed: usize,
    pub steps_errored: usize,
    pub steps_undefined: usize,
    pub steps_ambiguous: usize,
    pub steps_skipped: usize,
}

impl Counters {
    pub fn scenarios_total(&self) -> usize {
        self.scenarios_passed + self.scenarios_failed + self.scenarios_undefined
    }

    pub fn steps_total(&self) -> usize {
        self.steps_passed
            + self.steps_failed
            + self.steps_errored
            + self.steps_undefined
            + self.steps_ambiguous
            + self.steps_skipped
    }

    /// Recounts from scratch over a result tree.
    pub fn recount(stories: &[StoryResult]) -> Counters {
        let mut counters = Counters::default();
        for story in stories {
            for scenario in &story.scenarios {
                match scenario.outcome {
                    ScenarioOutcome::Passed => counters.scenarios_passed += 1,
                    ScenarioOutcome::Failed => counters.scenarios_failed += 1,
                    ScenarioOutcome::Undefined => counters.scenarios_undefined += 1,
                }
                for step in &scenario.steps {
                    match step.status {
                        StepStatus::Passed => counters.steps_passed += 1,
                        StepStatus::Failed(_) => counters.steps_failed += 1,
                        StepStatus::Errored(_) => counters.steps_errored += 1,
                        StepStatus::Undefined => counters.steps_undefined += 1,
                        StepStatus::Ambiguous => counters.steps_ambiguous += 1,
                        StepStatus::Skipped => counters.steps_skipped += 1,
                    }
                }
            }
        }
        counters
    }
}

/// The full result of one `run` invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunReport {
    pub stories: Vec<StoryResult>,
    pub counters: Counters,
}

impl RunReport {
    pub fn new(stories: Vec<StoryResult>) -> RunReport {
        let counters = Counters::recount(&stories);
        RunReport { stories, counters }
    }

    /// 0 all passed; 1 any failed; 2 no failures but something undefined.
    pub fn exit_code(&self) -> i32 {
        if self.counters.scenarios_failed > 0 {
            1
        } else if self.counters.scenarios_undefined > 0 {
            2
        } else {
            0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RunMode {
    #[default]
    Run,
    DryRun,
    Lint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportFormat {
    #[default]
    Plain,
    Json,
}

/// Configuration for one `run` invocation. Inputs are file paths, directory
/// paths, or glob patterns; dry-run requires a manifest, lint ignores it.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub inputs: Vec<String>,
    pub language: Language,
    pub mode: RunMode,
    pub manifest: Option<PathBuf>,
    pub stop_on_failure: bool,
    pub format: ReportFormat,
}

impl RunConfig {
    pub fn new(inputs: Vec<String>) -> RunConfig {
        RunConfig {
            inputs,
            language: Language::En,
            mode: RunMode::Run,
            manifest: None,
            stop_on_failure: false,
            format: ReportFormat::Plain,
        }
    }
}

/// Executes one scenario with a fresh context. Steps run in order; the
/// first non-Passed step halts execution and the rest are Skipped. A
/// handler error of kind `ExpectationFailure` marks the step Failed, any
/// other handler error marks it Errored.
pub fn run_scenario(scenario: &Scenario, registry: &StepRegistry) -> ScenarioResult {
    let mut ctx = ScenarioContext::new();
    let mut steps = Vec::with_capacity(scenario.steps.len());
    let mut halted = false;

    for step in &scenario.steps {
        if halted {
            steps.push(StepResult {
                step: step.clone(),
                status: StepStatus::Skipped,
                duration_ms: 0,
            });
            continue;
        }
        let (status, duration_ms) = match registry.resolve(step) {
            MatchResult::Undefined => (StepStatus::Undefined, 0),
            MatchResult::Ambiguous(_) => (StepStatus::Ambiguous, 0),
            MatchResult::Matched { definition, captures } => {
                let started = Instant::now();
                let outcome = definition.call(&mut ctx, &captures);
                let elapsed = started.elapsed().as_millis() as u64;
                let status = match outcome {
                    Ok(()) => StepStatus::Passed,
                    Err(err) if err.kind == ToolErrorKind::ExpectationFailure => {
                        StepStatus::Failed(err.message)
                    }
                    Err(err) => StepStatus::Errored(err.to_string()),
                };
                (status, elapsed)
            }
        };
        halted = !status.is_passed();
        steps.push(StepResult { step: step.clone(), status, duration_ms });
    }

    let outcome = outcome_of(&steps);
    ScenarioResult { scenario: scenario.clone(), steps, outcome }
}

fn outcome_of(steps: &[StepResult]) -> ScenarioOutcome {
    let mut undefined = false;
    for result in steps {
        match result.status {
            StepStatus::Failed(_) | StepStatus::Errored(_) => return ScenarioOutcome::Failed,
            StepStatus::Undefined | StepStatus::Ambiguous => undefined = true,
            _ => {}
        }
    }
    if undefined {
        ScenarioOutcome::Undefined
    } else {
        ScenarioOutcome::Passed
    }
}

// Dry-run resolves every step so that all undefined steps surface in one
// pass; nothing executes, so the skip rule does not apply.
fn resolve_scenario(scenario: &Scenario, registry: &StepRegistry) -> ScenarioResult {
    let steps: Vec<StepResult> = scenario
        .steps
        .iter()
        .map(|step| {
            let status = match registry.resolve(step) {
                MatchResult::Matched { .. } => StepStatus::Passed,
                MatchResult::Undefined => StepStatus::Undefined,
                MatchResult::Ambiguous(_) => StepStatus::Ambiguous,
            };
            StepResult { step: step.clone(), status, duration_ms: 0 }
        })
        .collect();
    let outcome = outcome_of(&steps);
    ScenarioResult { scenario: scenario.clone(), steps, outcome }
}

/// Runs the configured mode over all matched input files, in lexicographic
/// path order. Run mode executes against `registry`; dry-run resolves
/// against a registry synthesized from the manifest; lint only parses.
pub fn run(config: &RunConfig, registry: &StepRegistry) -> Result<RunReport, ToolError> {
    let files = expand_inputs(&config.inputs)?;
    if files.is_empty() {
        return Err(ToolError::config("no input files matched"));
    }

    let manifest_registry = match config.mode {
        RunMode::DryRun => {
            let path = config
                .manifest
                .as_ref()
                .ok_or_else(|| ToolError::config("dry-run requires a step manifest"))?;
            let text = fs::read_to_string(path).map_err(|err| {
                ToolError::config(format!("cannot read manifest {}: {err}", path.display()))
            })?;
            Some(registry_from_manifest(&text, &path.display().to_string())?)
        }
        RunMode::Run => {
            if !registry.is_frozen() {
                return Err(ToolError::config("step registry must be frozen before running"));
            }
            None
        }
        RunMode::Lint => None,
    };

    let pack = KeywordPack::for_language(config.language);
    let mut story_results = Vec::new();
    let mut stop = false;

    for file in &files {
        let text = fs::read_to_string(file)
            .map_err(|err| ToolError::config(format!("cannot read {file}: {err}")))?;
        let story = parse_story(&text, pack, file)?;
        if story.scenarios.is_empty() {
            let loc = story.loc.clone();
            return Err(ToolError::config(format!("story has no scenarios: {file}")).at(loc));
        }

        let scenarios = match config.mode {
            RunMode::Lint => Vec::new(),
            RunMode::DryRun => {
                let manifest_registry = manifest_registry.as_ref().expect("built above");
                story.scenarios.iter().map(|sc| resolve_scenario(sc, manifest_registry)).collect()
            }
            RunMode::Run => {
                let mut results = Vec::new();
                for scenario in &story.scenarios {
                    let result = run_scenario(scenario, registry);
                    let failed = result.outcome == ScenarioOutcome::Failed;
                    results.push(result);
                    if failed && config.stop_on_failure {
                        stop = true;
                        break;
                    }
                }
                results
            }
        };
        story_results.push(StoryResult { story, scenarios });
        if stop {
            break;
        }
    }

    let report = RunReport::new(story_results);
    debug_assert_eq!(report.counters, Counters::recount(&report.stories));
    Ok(report)
}

// Expands inputs to a sorted, deduplicated file list. A literal file path is
// taken as-is, a directory contributes every `.story` file under it, and
// anything with glob metacharacters is expanded as a pattern.
fn expand_inputs(inputs: &[String]) -> Result<Vec<String>, ToolError> {
    let mut files: Vec<String> = Vec::new();
    for input in inputs {
        let path = Path::new(input);
        if path.is_file() {
            files.push(input.clone());
        } else if path.is_dir() {
            for entry in walkdir::WalkDir::new(path).sort_by_file_name() {
                let entry = entry.map_err(|err| {
                    ToolError::config(format!("cannot scan {input}: {err}"))
                })?;
                if entry.file_type().is_file()
                    && entry.path().extension().is_some_and(|ext| ext == "story")
                {
                    files.push(entry.path().display().to_string());
                }
            }
        } else if input.contains(['*', '?', '[']) {
            let matches = glob::glob(input)
                .map_err(|err| ToolError::config(format!("bad glob pattern '{input}': {err}")))?;
            for entry in matches {
                let entry = entry.map_err(|err| {
                    ToolError::config(format!("cannot read glob match: {err}"))
                })?;
                if entry.is_file() {
                    files.push(entry.display().to_string());
                }
            }
        } else {
            return Err(ToolError::config(format!("no such input file: {input}")));
        }
    }
    files.sort();
    files.dedup();
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SourceLoc;
    use crate::steps::{noop_handler, Captures};

    fn loc() -> SourceLoc {
        SourceLoc::new("t.story", 1)
    }

    fn step(kind: crate::story::StepKind, text: &str) -> Step {
        Step { kind, text: text.into(), loc: loc(), continuation: false }
    }

    fn scenario(steps: Vec<Step>) -> Scenario {
        Scenario { ordinal: None, title: "S".into(), steps, loc: loc() }
    }

    fn failing_handler(message: &str) -> crate::steps::StepHandler {
        let message = message.to_string();
        Box::new(move |_: &mut ScenarioContext, _: &Captures| {
            Err(ToolError::expectation(message.clone()))
        })
    }

    fn erroring_handler() -> crate::steps::StepHandler {
        Box::new(|_, _| Err(ToolError::config("broken step")))
    }

    #[test]
    fn nominal_scenario_passes_every_step() {
        use crate::story::StepKind::*;
        let mut reg = StepRegistry::new();
        reg.register(Given, "a context", noop_handler()).unwrap();
        reg.register(When, "an event", noop_handler()).unwrap();
        reg.register(Then, "an outcome", noop_handler()).unwrap();
        reg.freeze();
        let result = run_scenario(
            &scenario(vec![
                step(Given, "a context"),
                step(When, "an event"),
                step(Then, "an outcome"),
            ]),
            &reg,
        );
        assert_eq!(result.outcome, ScenarioOutcome::Passed);
        assert!(result.steps.iter().all(|s| s.status == StepStatus::Passed));
    }

    #[test]
    fn failing_then_step_yields_passed_passed_failed() {
        use crate::story::StepKind::*;
        let mut reg = StepRegistry::new();
        reg.register(Given, "a context", noop_handler()).unwrap();
        reg.register(When, "an event", noop_handler()).unwrap();
        reg.register(Then, "an outcome", failing_handler("Access Denied not found")).unwrap();
        reg.freeze();
        let result = run_scenario(
            &scenario(vec![
                step(Given, "a context"),
                step(When, "an event"),
                step(Then, "an outcome"),
            ]),
            &reg,
        );
        assert_eq!(result.outcome, ScenarioOutcome::Failed);
        let statuses: Vec<&str> = result.steps.iter().map(|s| s.status.name()).collect();
        assert_eq!(statuses, ["passed", "passed", "failed"]);
        assert_eq!(
            result.steps[2].status,
            StepStatus::Failed("Access Denied not found".into())
        );
    }

    #[test]
    fn undefined_first_step_skips_the_rest() {
        use crate::story::StepKind::*;
        let mut reg = StepRegistry::new();
        reg.register(When, "an event", noop_handler()).unwrap();
        reg.freeze();
        let result = run_scenario(
            &scenario(vec![
                step(Given, "unregistered"),
                step(When, "an event"),
                step(Then, "an outcome"),
            ]),
            &reg,
        );
        assert_eq!(result.outcome, ScenarioOutcome::Undefined);
        let statuses: Vec<&str> = result.steps.iter().map(|s| s.status.name()).collect();
        assert_eq!(statuses, ["undefined", "skipped", "skipped"]);
        assert!(result.steps.iter().all(|s| s.duration_ms == 0));
    }

    #[test]
    fn non_expectation_errors_mark_the_step_errored() {
        use crate::story::StepKind::*;
        let mut reg = StepRegistry::new();
        reg.register(Given, "a context", erroring_handler()).unwrap();
        reg.freeze();
        let result = run_scenario(&scenario(vec![step(Given, "a context")]), &reg);
        assert_eq!(result.outcome, ScenarioOutcome::Failed);
        assert!(matches!(result.steps[0].status, StepStatus::Errored(_)));
    }

    #[test]
    fn context_is_fresh_per_scenario() {
        use crate::story::StepKind::*;
        let mut reg = StepRegistry::new();
        reg.register(
            Given,
            "I remember things",
            Box::new(|ctx: &mut ScenarioContext, _: &Captures| {
                assert!(ctx.get("seen").is_none(), "context leaked between scenarios");
                ctx.set("seen", Value::Bool(true));
                Ok(())
            }),
        )
        .unwrap();
        reg.freeze();
        let sc = scenario(vec![step(Given, "I remember things")]);
        let first = run_scenario(&sc, &reg);
        let second = run_scenario(&sc, &reg);
        assert_eq!(first.outcome, ScenarioOutcome::Passed);
        assert_eq!(second.outcome, ScenarioOutcome::Passed);
    }

    #[test]
    fn captures_reach_the_handler() {
        use crate::story::StepKind::*;
        let mut reg = StepRegistry::new();
        reg.register(
            Then,
            "I see \"{message}\" error message",
            Box::new(|ctx: &mut ScenarioContext, captures: &Captures| {
                ctx.set("message", Value::text(captures["message"].clone()));
                Ok(())
            }),
        )
        .unwrap();
        reg.freeze();
        let result =
            run_scenario(&scenario(vec![step(Then, "I see \"Access Denied\" error message")]), &reg);
        assert_eq!(result.outcome, ScenarioOutcome::Passed);
    }

    #[test]
    fn host_slot_round_trips_through_the_context() {
        let mut ctx = ScenarioContext::new();
        ctx.set_host(vec![1u32, 2, 3]);
        ctx.host_mut::<Vec<u32>>().unwrap().push(4);
        assert_eq!(ctx.host_ref::<Vec<u32>>().unwrap().len(), 4);
        assert!(ctx.host_ref::<String>().is_none());
    }
}
