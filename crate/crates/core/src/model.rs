//! Shared value algebra, source locations, and the error taxonomy used by
//! every other module.
//!
//! All types here are immutable after construction and safe to share or send
//! between threads.

use std::fmt;

/// Version tag prepended to every canonical encoding. Bump it if the byte
/// layout ever changes; the encoding is an internal contract, not a wire
/// format.
const ENCODING_VERSION: u8 = 1;

// Per-variant tags for the canonical encoding.
const TAG_NULL: u8 = 0x00;
const TAG_BOOL: u8 = 0x01;
const TAG_INT: u8 = 0x02;
const TAG_FLOAT: u8 = 0x03;
const TAG_TEXT: u8 = 0x04;
const TAG_SEQ: u8 = 0x05;
const TAG_MAP: u8 = 0x06;

/// The closed data algebra carried through step parameters, matcher operands
/// and double-call arguments.
///
/// Equality is structural and total. `Float` compares by bit pattern, except
/// that any two NaN payloads compare equal so that argument matching stays a
/// decidable partition. Consequently `0.0 != -0.0` while `NaN == NaN`.
/// `Map` preserves insertion order and the order is significant for equality.
#[derive(Debug, Clone)]
pub enum Value {
    Null,
    Bool(bool),
    Int(i64),
    Float(f64),
    Text(String),
    Seq(Vec<Value>),
    Map(Vec<(String, Value)>),
}

impl Value {
    /// Convenience constructor for `Text`.
    pub fn text(s: impl Into<String>) -> Value {
        Value::Text(s.into())
    }

    /// Builds a `Map`, rejecting duplicate keys.
    pub fn map(pairs: Vec<(String, Value)>) -> Result<Value, ToolError> {
        for (i, (key, _)) in pairs.iter().enumerate() {
            if pairs[..i].iter().any(|(k, _)| k == key) {
                return Err(ToolError::config(format!("duplicate map key '{key}'")));
            }
        }
        Ok(Value::Map(pairs))
    }

    /// Deterministic, injective byte encoding of the value.
    ///
    /// Stable across runs and platforms: `canonical_encode(a) ==
    /// canonical_encode(b)` exactly when `a == b`. Used as the call key for
    /// test-double argument matching.
    pub fn canonical_encode(&self) -> Vec<u8> {
        let mut out = vec![ENCODING_VERSION];
        self.encode_into(&mut out);
        out
    }

    fn encode_into(&self, out: &mut Vec<u8>) {
        match self {
            Value::Null => out.push(TAG_NULL),
            Value::Bool(b) => {
                out.push(TAG_BOOL);
                out.push(u8::from(*b));
            }
            Value::Int(n) => {
                out.push(TAG_INT);
                out.extend_from_slice(&n.to_be_bytes());
            }
            Value::Float(x) => {
                // All NaN payloads are one equivalence class, so they all
                // encode as the same canonical quiet NaN.
                let bits = if x.is_nan() { f64::NAN.to_bits() } else { x.to_bits() };
                out.push(TAG_FLOAT);
                out.extend_from_slice(&bits.to_be_bytes());
            }
            Value::Text(s) => {
                out.push(TAG_TEXT);
                encode_str(s, out);
            }
            Value::Seq(items) => {
                out.push(TAG_SEQ);
                out.extend_from_slice(&(items.len() as u64).to_be_bytes());
                for item in items {
                    item.encode_into(out);
                }
            }
            Value::Map(pairs) => {
                out.push(TAG_MAP);
                out.extend_from_slice(&(pairs.len() as u64).to_be_bytes());
                for (key, value) in pairs {
                    encode_str(key, out);
                    value.encode_into(out);
                }
            }
        }
    }
}

fn encode_str(s: &str, out: &mut Vec<u8>) {
    out.extend_from_slice(&(s.len() as u64).to_be_bytes());
    out.extend_from_slice(s.as_bytes());
}

/// Structural equality over the value algebra; reflexive, symmetric and
/// transitive. Equivalent to comparing canonical encodings.
pub fn value_eq(a: &Value, b: &Value) -> bool {
    a == b
}

impl PartialEq for Value {
    fn eq(&self, other: &Value) -> bool {
        match (self, other) {
            (Value::Null, Value::Null) => true,
            (Value::Bool(a), Value::Bool(b)) => a == b,
            (Value::Int(a), Value::Int(b)) => a == b,
            (Value::Float(a), Value::Float(b)) => {
                (a.is_nan() && b.is_nan()) || a.to_bits() == b.to_bits()
            }
            (Value::Text(a), Value::Text(b)) => a == b,
            (Value::Seq(a), Value::Seq(b)) => a == b,
            (Value::Map(a), Value::Map(b)) => a == b,
            _ => false,
        }
    }
}

impl Eq for Value {}

/// Canonical rendering used in expectation failure messages and double
/// diagnostics. Text renders verbatim, sequences as `[a, b]`, maps as
/// `{k: v}`.
impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Null => write!(f, "null"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(n) => write!(f, "{n}"),
            Value::Float(x) => write!(f, "{x}"),
            Value::Text(s) => write!(f, "{s}"),
            Value::Seq(items) => {
                write!(f, "[")?;
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{item}")?;
                }
                write!(f, "]")
            }
            Value::Map(pairs) => {
                write!(f, "{{")?;
                for (i, (key, value)) in pairs.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{key}: {value}")?;
                }
                write!(f, "}}")
            }
        }
    }
}

/// A position in a narrative specification file. `line` is 1-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceLoc {
    pub file: String,
    pub line: u32,
}

impl SourceLoc {
    pub fn new(file: impl Into<String>, line: u32) -> SourceLoc {
        debug_assert!(line >= 1, "source lines are 1-based");
        SourceLoc { file: file.into(), line }
    }
}

impl fmt::Display for SourceLoc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.file, self.line)
    }
}

/// Classification of everything that can go wrong inside the toolkit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ToolErrorKind {
    ParseError,
    DuplicateStep,
    AmbiguousStep,
    UndefinedStep,
    ExpectationFailure,
    DoubleFailure,
    ConfigError,
}

impl ToolErrorKind {
    fn phrase(self) -> &'static str {
        match self {
            ToolErrorKind::ParseError => "parse error",
            ToolErrorKind::DuplicateStep => "duplicate step",
            ToolErrorKind::AmbiguousStep => "ambiguous step",
            ToolErrorKind::UndefinedStep => "undefined step",
            ToolErrorKind::ExpectationFailure => "expectation failure",
            ToolErrorKind::DoubleFailure => "double failure",
            ToolErrorKind::ConfigError => "config error",
        }
    }
}

/// Error value shared by every module. `ParseError`s always carry a location.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ToolError {
    pub kind: ToolErrorKind,
    pub message: String,
    pub loc: Option<SourceLoc>,
}

impl ToolError {
    pub fn new(kind: ToolErrorKind, message: impl Into<String>) -> ToolError {
        let message = message.into();
        debug_assert!(!message.is_empty(), "tool errors carry a message");
        ToolError { kind, message, loc: None }
    }

    pub fn at(mut self, loc: SourceLoc) -> ToolError {
        self.loc = Some(loc);
        self
    }

    pub fn parse(message: impl Into<String>, loc: SourceLoc) -> ToolError {
        ToolError::new(ToolErrorKind::ParseError, message).at(loc)
    }

    pub fn config(message: impl Into<String>) -> ToolError {
        ToolError::new(ToolErrorKind::ConfigError, message)
    }

    pub fn duplicate_step(message: impl Into<String>) -> ToolError {
        ToolError::new(ToolErrorKind::DuplicateStep, message)
    }

    pub fn expectation(message: impl Into<String>) -> ToolError {
        ToolError::new(ToolErrorKind::ExpectationFailure, message)
    }

    pub fn double_failure(message: impl Into<String>) -> ToolError {
        ToolError::new(ToolErrorKind::DoubleFailure, message)
    }
}

impl fmt::Display for ToolError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.loc {
            Some(loc) => write!(f, "{loc}: {}: {}", self.kind.phrase(), self.message),
            None => write!(f, "{}: {}", self.kind.phrase(), self.message),
        }
    }
}

impl std::error::Error for ToolError {}

/// A host-level error of a named kind, as simulated by a programmed double
/// response or observed by the `be_thrown_by` matcher.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignaledError {
    pub kind: String,
    pub message: String,
}

impl SignaledError {
    pub fn new(kind: impl Into<String>, message: impl Into<String>) -> SignaledError {
        SignaledError { kind: kind.into(), message: message.into() }
    }
}

impl fmt::Display for SignaledError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind, self.message)
    }
}

impl std::error::Error for SignaledError {}
