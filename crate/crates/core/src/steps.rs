//! Step definition registry and resolution of parsed steps to handlers.
//!
//! The matching baseline is exact normalized text; `{name}` placeholders are
//! a minimal extension for parameterized steps (no types, no regexes). A
//! placeholder consumes a maximal non-empty run delimited by the surrounding
//! literals; a quoted run is captured without the quotes. Exact patterns take
//! priority over placeholder patterns, and ambiguity is reported rather than
//! resolved by registration order.

use std::collections::BTreeMap;
use std::fmt;

use crate::model::{SourceLoc, ToolError, ToolErrorKind};
use crate::runner::ScenarioContext;
use crate::story::{Step, StepKind};

/// Captured placeholder values, keyed by placeholder name.
pub type Captures = BTreeMap<String, String>;

/// Host-supplied step implementation. Failure is signaled by returning a
/// `ToolError`: an `ExpectationFailure` marks the step Failed, anything else
/// marks it Errored. Per-scenario state belongs in the `ScenarioContext`.
pub type StepHandler = Box<dyn Fn(&mut ScenarioContext, &Captures) -> Result<(), ToolError> + Send + Sync>;

/// One token of a tokenized step pattern.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PatternToken {
    Literal(String),
    Placeholder(String),
}

/// A normalized, tokenized step pattern. A pattern with zero placeholders
/// matches only its exact normalized text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepPattern {
    raw: String,
    tokens: Vec<PatternToken>,
}

impl StepPattern {
    /// The normalized pattern text.
    pub fn raw(&self) -> &str {
        &self.raw
    }

    pub fn tokens(&self) -> &[PatternToken] {
        &self.tokens
    }

    pub fn placeholder_count(&self) -> usize {
        self.tokens
            .iter()
            .filter(|t| matches!(t, PatternToken::Placeholder(_)))
            .count()
    }
}

impl fmt::Display for StepPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.raw)
    }
}

/// A step kind plus pattern bound to a handler.
pub struct StepDefinition {
    kind: StepKind,
    pattern: StepPattern,
    handler: StepHandler,
}

impl StepDefinition {
    pub fn kind(&self) -> StepKind {
        self.kind
    }

    pub fn pattern(&self) -> &StepPattern {
        &self.pattern
    }

    /// Runs the bound handler.
    pub fn call(&self, ctx: &mut ScenarioContext, captures: &Captures) -> Result<(), ToolError> {
        (self.handler)(ctx, captures)
    }
}

impl fmt::Debug for StepDefinition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("StepDefinition")
            .field("kind", &self.kind)
            .field("pattern", &self.pattern.raw)
            .finish()
    }
}

/// Result of resolving a parsed step against a registry.
#[derive(Debug)]
pub enum MatchResult<'r> {
    Matched { definition: &'r StepDefinition, captures: Captures },
    Undefined,
    Ambiguous(Vec<&'r StepDefinition>),
}

impl<'r> MatchResult<'r> {
    /// Converts the resolution into the matched definition, turning
    /// `Undefined`/`Ambiguous` into errors of the corresponding kind.
    pub fn into_definition(self) -> Result<(&'r StepDefinition, Captures), ToolError> {
        match self {
            MatchResult::Matched { definition, captures } => Ok((definition, captures)),
            MatchResult::Undefined => {
                Err(ToolError::new(ToolErrorKind::UndefinedStep, "no step definition matches"))
            }
            MatchResult::Ambiguous(defs) => {
                let patterns: Vec<&str> = defs.iter().map(|d| d.pattern.raw()).collect();
                Err(ToolError::new(
                    ToolErrorKind::AmbiguousStep,
                    format!("step matches multiple definitions: {}", patterns.join(" | ")),
                ))
            }
        }
    }
}

/// The binding table from step text to handlers. Registration happens in a
/// single-threaded build phase; after `freeze` the registry is immutable and
/// safe to share across threads for concurrent resolution.
#[derive(Default)]
pub struct StepRegistry {
    definitions: Vec<StepDefinition>,
    frozen: bool,
}

impl StepRegistry {
    pub fn new() -> StepRegistry {
        StepRegistry::default()
    }

    pub fn len(&self) -> usize {
        self.definitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.definitions.is_empty()
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    pub fn definitions(&self) -> impl Iterator<Item = &StepDefinition> {
        self.definitions.iter()
    }

    /// Ends the registration phase. Idempotent.
    pub fn freeze(&mut self) {
        self.frozen = true;
    }

    /// Normalizes and tokenizes `pattern_text`, then stores the definition.
    pub fn register(
        &mut self,
        kind: StepKind,
        pattern_text: &str,
        handler: StepHandler,
    ) -> Result<(), ToolError> {
        if self.frozen {
            return Err(ToolError::config("step registry is frozen"));
        }
        let raw = normalize(pattern_text);
        if raw.is_empty() {
            return Err(ToolError::config("step pattern is empty"));
        }
        if self.definitions.iter().any(|d| d.kind == kind && d.pattern.raw == raw) {
            return Err(ToolError::duplicate_step(format!(
                "step already registered: {kind} '{raw}'"
            )));
        }
        let tokens = tokenize(&raw)?;
        self.definitions.push(StepDefinition {
            kind,
            pattern: StepPattern { raw, tokens },
            handler,
        });
        Ok(())
    }

    /// Resolves a parsed step to a definition. Candidates are definitions of
    /// the step's effective kind; exact-text patterns win over placeholder
    /// patterns; several matches at the same priority are `Ambiguous`, none
    /// is `Undefined`. Pure: repeated calls return equal results.
    pub fn resolve(&self, step: &Step) -> MatchResult<'_> {
        let text = normalize(&step.text);
        let mut exact: Vec<&StepDefinition> = Vec::new();
        let mut parameterized: Vec<(&StepDefinition, Captures)> = Vec::new();

        for definition in self.definitions.iter().filter(|d| d.kind == step.kind) {
            if definition.pattern.placeholder_count() == 0 {
                if definition.pattern.raw == text {
                    exact.push(definition);
                }
            } else if let Some(captures) = match_tokens(&definition.pattern.tokens, &text) {
                parameterized.push((definition, captures));
            }
        }

        if !exact.is_empty() {
            return if exact.len() == 1 {
                MatchResult::Matched { definition: exact[0], captures: Captures::new() }
            } else {
                MatchResult::Ambiguous(exact)
            };
        }
        match parameterized.len() {
            0 => MatchResult::Undefined,
            1 => {
                let (definition, captures) = parameterized.into_iter().next().unwrap();
                MatchResult::Matched { definition, captures }
            }
            _ => MatchResult::Ambiguous(parameterized.into_iter().map(|(d, _)| d).collect()),
        }
    }
}

impl fmt::Debug for StepRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("StepRegistry")
            .field("definitions", &self.definitions)
            .field("frozen", &self.frozen)
            .finish()
    }
}

/// Trims the ends and collapses internal whitespace runs to single spaces,
/// preserving case and punctuation. Idempotent.
pub fn normalize(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Splits normalized pattern text into literal and `{name}` placeholder
/// tokens. A brace group whose content is not an identifier stays literal.
fn tokenize(raw: &str) -> Result<Vec<PatternToken>, ToolError> {
    let mut tokens: Vec<PatternToken> = Vec::new();
    let mut literal = String::new();
    let mut names: Vec<String> = Vec::new();
    let mut rest = raw;

    while let Some(open) = rest.find('{') {
        let (before, braced) = rest.split_at(open);
        literal.push_str(before);
        match braced[1..].find('}') {
            Some(close) if is_identifier(&braced[1..=close]) => {
                let name = &braced[1..=close];
                if names.iter().any(|n| n == name) {
                    return Err(ToolError::config(format!(
                        "placeholder '{{{name}}}' appears more than once in '{raw}'"
                    )));
                }
                if literal.is_empty() && !tokens.is_empty() {
                    return Err(ToolError::config(format!(
                        "adjacent placeholders are ambiguous in '{raw}'"
                    )));
                }
                if !literal.is_empty() {
                    tokens.push(PatternToken::Literal(std::mem::take(&mut literal)));
                }
                names.push(name.to_string());
                tokens.push(PatternToken::Placeholder(name.to_string()));
                rest = &braced[close + 2..];
            }
            _ => {
                // Not a placeholder; keep the brace as literal text.
                literal.push('{');
                rest = &braced[1..];
            }
        }
    }
    literal.push_str(rest);
    if !literal.is_empty() {
        tokens.push(PatternToken::Literal(literal));
    }
    Ok(tokens)
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Greedy left-to-right alignment: literals must match in place, each
/// placeholder takes the longest non-empty run that still lets the rest of
/// the pattern match.
fn match_tokens(tokens: &[PatternToken], text: &str) -> Option<Captures> {
    let mut captures: Vec<(String, String)> = Vec::new();
    if align(tokens, text, &mut captures) {
        Some(captures.into_iter().collect())
    } else {
        None
    }
}

fn align(tokens: &[PatternToken], text: &str, captures: &mut Vec<(String, String)>) -> bool {
    let Some((first, rest)) = tokens.split_first() else {
        return text.is_empty();
    };
    match first {
        PatternToken::Literal(lit) => match text.strip_prefix(lit.as_str()) {
            Some(tail) => align(rest, tail, captures),
            None => false,
        },
        PatternToken::Placeholder(name) => match rest.first() {
            None => {
                if text.is_empty() {
                    false
                } else {
                    captures.push((name.clone(), unquote(text).to_string()));
                    true
                }
            }
            Some(PatternToken::Literal(lit)) => {
                // Rightmost occurrence first for maximal capture.
                let positions: Vec<usize> = text.match_indices(lit.as_str()).map(|(i, _)| i).collect();
                for &idx in positions.iter().rev() {
                    if idx == 0 {
                        continue;
                    }
                    let run = &text[..idx];
                    let tail = &text[idx + lit.len()..];
                    captures.push((name.clone(), unquote(run).to_string()));
                    if align(&rest[1..], tail, captures) {
                        return true;
                    }
                    captures.pop();
                }
                false
            }
            Some(PatternToken::Placeholder(_)) => {
                unreachable!("adjacent placeholders are rejected at registration")
            }
        },
    }
}

// A captured run wrapped in double quotes loses the quotes.
fn unquote(run: &str) -> &str {
    if run.len() >= 2 && run.starts_with('"') && run.ends_with('"') {
        &run[1..run.len() - 1]
    } else {
        run
    }
}

/// A handler that does nothing and always succeeds; used to synthesize
/// registries for dry runs.
pub fn noop_handler() -> StepHandler {
    Box::new(|_, _| Ok(()))
}

/// Parses a step manifest: one `given: <pattern>` / `when: <pattern>` /
/// `then: <pattern>` entry per line, `#` comments and blank lines ignored.
pub fn parse_manifest(text: &str, file: &str) -> Result<Vec<(StepKind, String)>, ToolError> {
    let mut entries = Vec::new();
    for (index, raw_line) in text.split('\n').enumerate() {
        let loc = SourceLoc::new(file, (index + 1) as u32);
        let line = raw_line.strip_suffix('\r').unwrap_or(raw_line).trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((prefix, pattern)) = line.split_once(':') else {
            return Err(ToolError::parse("manifest line is missing the 'kind:' prefix", loc));
        };
        let kind = match prefix.trim() {
            "given" => StepKind::Given,
            "when" => StepKind::When,
            "then" => StepKind::Then,
            other => {
                return Err(ToolError::parse(
                    format!("unknown manifest kind '{other}' (expected given/when/then)"),
                    loc,
                ))
            }
        };
        let pattern = pattern.trim();
        if pattern.is_empty() {
            return Err(ToolError::parse("manifest pattern is empty", loc));
        }
        entries.push((kind, pattern.to_string()));
    }
    Ok(entries)
}

/// Builds a frozen registry of no-op handlers from manifest text.
pub fn registry_from_manifest(text: &str, file: &str) -> Result<StepRegistry, ToolError> {
    let mut registry = StepRegistry::new();
    for (kind, pattern) in parse_manifest(text, file)? {
        registry.register(kind, &pattern, noop_handler())?;
    }
    registry.freeze();
    Ok(registry)
}
