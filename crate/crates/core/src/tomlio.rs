use std::path::Path;

use serde::de::DeserializeOwned;

use crate::error::{Error, Result};

/// Parses TOML text, anchoring any error at its line in `path`.
pub(crate) fn parse<T: DeserializeOwned>(text: &str, path: &Path) -> Result<T> {
    toml::from_str(text).map_err(|e| {
        let line = e
            .span()
            .map(|span| text[..span.start.min(text.len())].matches('\n').count() + 1);
        Error::Config {
            path: path.to_path_buf(),
            line,
            message: e.message().trim().to_string(),
        }
    })
}

/// Line of the first occurrence of `needle` in `text`, for semantic errors
/// found after parsing.
pub(crate) fn line_of(text: &str, needle: &str) -> Option<usize> {
    text.find(needle).map(|i| text[..i].matches('\n').count() + 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Deserialize;

    #[derive(Debug, Deserialize)]
    #[allow(dead_code)]
    struct Doc {
        a: u32,
        b: String,
    }

    #[test]
    fn error_points_at_the_offending_line() {
        let text = "a = 1\n\nb = 3\n";
        let err = parse::<Doc>(text, Path::new("x.toml")).unwrap_err();
        match err {
            Error::Config { line, .. } => assert_eq!(line, Some(3)),
            other => panic!("unexpected {other:?}"),
        }
        assert!(err_string(text).starts_with("x.toml:3:"));
    }

    fn err_string(text: &str) -> String {
        parse::<Doc>(text, Path::new("x.toml")).unwrap_err().to_string()
    }
}
