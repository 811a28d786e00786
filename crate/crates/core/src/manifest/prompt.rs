use std::collections::BTreeMap;

use super::{Manifest, ManifestError};

/// Placeholder names (`$NAME`, NAME matching `[A-Z_][A-Z0-9_]*`) in order of appearance.
pub fn placeholders(template: &str) -> Vec<String> {
    scan(template).into_iter().map(|(_, _, n)| n).collect()
}

/// `(start, end, name)` byte spans of every placeholder, `start` at the `$`.
fn scan(template: &str) -> Vec<(usize, usize, String)> {
    let b = template.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < b.len() {
        if b[i] == b'$' && i + 1 < b.len() && (b[i + 1].is_ascii_uppercase() || b[i + 1] == b'_') {
            let mut j = i + 2;
            while j < b.len() && (b[j].is_ascii_uppercase() || b[j].is_ascii_digit() || b[j] == b'_') {
                j += 1;
            }
            out.push((i, j, template[i + 1..j].to_owned()));
            i = j;
        } else {
            i += 1;
        }
    }
    out
}

/// Substitute every placeholder from the scene outputs.
pub fn render_prompt(manifest: &Manifest, outputs: &BTreeMap<String, String>) -> Result<String, ManifestError> {
    substitute(&manifest.prompt_template, outputs)
}

pub(crate) fn substitute(template: &str, outputs: &BTreeMap<String, String>) -> Result<String, ManifestError> {
    let mut out = String::with_capacity(template.len());
    let mut last = 0;
    for (start, end, name) in scan(template) {
        let value = outputs.get(&name).ok_or_else(|| ManifestError::MissingValue(name.clone()))?;
        out.push_str(&template[last..start]);
        out.push_str(value);
        last = end;
    }
    out.push_str(&template[last..]);
    Ok(out)
}
