//! Flat `key = value` configuration text: one pair per line, `#` comments,
//! blank lines ignored, surrounding whitespace trimmed.

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub line: usize,
    pub key: String,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

pub fn parse(text: &str) -> Result<Vec<Entry>, ParseError> {
    let mut entries: Vec<Entry> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ParseError {
                line,
                message: format!("expected `key = value`, got {content:?}"),
            });
        };
        let key = key.trim();
        if key.is_empty() {
            return Err(ParseError {
                line,
                message: "empty key".into(),
            });
        }
        if entries.iter().any(|e| e.key == key) {
            return Err(ParseError {
                line,
                message: format!("duplicate key `{key}`"),
            });
        }
        entries.push(Entry {
            line,
            key: key.to_string(),
            value: value.trim().to_string(),
        });
    }
    Ok(entries)
}
