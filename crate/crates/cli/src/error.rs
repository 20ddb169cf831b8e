use std::fmt;
use std::io;

/// A failed run: a stable exit code, a short kind tag and a one-line message.
#[derive(Debug)]
pub struct CliError {
    pub kind: Kind,
    pub message: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    MissingFile,
    Io,
    Malformed,
    Shape,
    InvalidArgument,
    Numeric,
}

impl Kind {
    /// Exit status; 2 is left to argument parsing.
    pub fn code(self) -> u8 {
        match self {
            Kind::MissingFile => 3,
            Kind::Io => 4,
            Kind::Malformed => 5,
            Kind::Shape => 6,
            Kind::InvalidArgument => 7,
            Kind::Numeric => 8,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Kind::MissingFile => "missing-file",
            Kind::Io => "io",
            Kind::Malformed => "malformed-input",
            Kind::Shape => "shape",
            Kind::InvalidArgument => "invalid-argument",
            Kind::Numeric => "numeric",
        }
    }
}

impl CliError {
    pub fn new(kind: Kind, message: impl Into<String>) -> Self {
        CliError {
            kind,
            message: message.into(),
        }
    }

    /// Reclassifies a library error as malformed input (used where the
    /// failure can only come from file contents).
    pub fn malformed(context: &str, err: impl fmt::Display) -> Self {
        CliError::new(Kind::Malformed, format!("{context}: {err}"))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let message = self.message.split_whitespace().collect::<Vec<_>>().join(" ");
        write!(f, "error code={} kind={}: {message}", self.kind.code(), self.kind.tag())
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        let kind = if e.kind() == io::ErrorKind::NotFound {
            Kind::MissingFile
        } else {
            Kind::Io
        };
        CliError::new(kind, e.to_string())
    }
}

impl From<relwalk::Error> for CliError {
    fn from(e: relwalk::Error) -> Self {
        use relwalk::Error as E;
        let kind = match &e {
            E::Io(io) if io.kind() == io::ErrorKind::NotFound => Kind::MissingFile,
            E::Io(_) => Kind::Io,
            E::Json(_) | E::ModelFormat { .. } => Kind::Malformed,
            E::EmptyGraph | E::InvalidSize { .. } | E::InvalidGraph(_) | E::Dimension { .. } | E::Support { .. } => {
                Kind::Shape
            }
            E::Partition(_) | E::Input(_) | E::Precondition(_) => Kind::InvalidArgument,
            E::Numeric(_) | E::Diverged { .. } => Kind::Numeric,
        };
        CliError::new(kind, e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::new(Kind::Malformed, e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::new(Kind::Io, e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn codes_are_distinct() {
        let kinds = [
            Kind::MissingFile,
            Kind::Io,
            Kind::Malformed,
            Kind::Shape,
            Kind::InvalidArgument,
            Kind::Numeric,
        ];
        let mut codes: Vec<u8> = kinds.iter().map(|k| k.code()).collect();
        codes.sort();
        codes.dedup();
        assert_eq!(codes.len(), kinds.len());
        assert!(!codes.contains(&0) && !codes.contains(&2));
    }

    #[test]
    fn message_is_one_line() {
        let e = CliError::new(Kind::Shape, "bad\nshape  here");
        assert_eq!(e.to_string(), "error code=6 kind=shape: bad shape here");
    }
}
