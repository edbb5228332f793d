//! Source-located diagnostics for the textual formats.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

/// A parse or validation finding with its source position (1-based line
/// and column, pointing inside the offending token).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub file: String,
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl Diagnostic {
    pub fn error(file: &str, line: usize, col: usize, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Error,
            file: file.to_string(),
            line,
            col,
            message: message.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(
            f,
            "{}:{}:{}: {}: {}",
            self.file, self.line, self.col, sev, self.message
        )
    }
}

/// Carries net-level diagnostics (which have no source position) into the
/// file-located form.
pub fn from_core(file: &str, d: &tpnsec_core::validate::Diagnostic) -> Diagnostic {
    Diagnostic {
        severity: match d.severity {
            tpnsec_core::validate::Severity::Error => Severity::Error,
            tpnsec_core::validate::Severity::Warning => Severity::Warning,
        },
        file: file.to_string(),
        line: 1,
        col: 1,
        message: format!("{}: {}", d.location, d.message),
    }
}
