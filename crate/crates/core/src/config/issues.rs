use std::fmt;

use thiserror::Error;

/// One violated invariant, located by its dotted field path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldError {
    pub path: String,
    pub message: String,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Error, Debug)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(String),

    #[error("invalid config: {}", format_issues(.0))]
    Invalid(Vec<FieldError>),
}

impl ConfigError {
    pub fn issues(&self) -> &[FieldError] {
        match self {
            ConfigError::Parse(_) => &[],
            ConfigError::Invalid(v) => v,
        }
    }

    /// True when some issue names `path` exactly.
    pub fn names(&self, path: &str) -> bool {
        self.issues().iter().any(|i| i.path == path)
    }
}

fn format_issues(issues: &[FieldError]) -> String {
    issues
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

/// Collects invariant violations under a path prefix.
#[derive(Debug, Default)]
pub struct Issues {
    list: Vec<FieldError>,
}

impl Issues {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn check(&mut self, ok: bool, path: impl Into<String>, message: impl Into<String>) {
        if !ok {
            self.push(path, message);
        }
    }

    pub fn push(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.list.push(FieldError {
            path: path.into(),
            message: message.into(),
        });
    }

    pub fn is_empty(&self) -> bool {
        self.list.is_empty()
    }

    pub fn into_result(self) -> Result<(), ConfigError> {
        if self.list.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(self.list))
        }
    }
}

/// Joins a prefix and a field name with a dot.
pub fn join(prefix: &str, field: &str) -> String {
    if prefix.is_empty() {
        field.to_string()
    } else {
        format!("{prefix}.{field}")
    }
}

/// Validated configuration sections report into a shared [`Issues`].
pub trait Validate {
    fn validate_into(&self, prefix: &str, issues: &mut Issues);

    fn validate(&self) -> Result<(), ConfigError> {
        let mut issues = Issues::new();
        self.validate_into("", &mut issues);
        issues.into_result()
    }
}
