//! Tolerant parsers for backend answers and the canonical residual
//! formatter.

use thiserror::Error;

use crate::residual::{ObjectAttributes, SemanticPair, VisualResidual};
use crate::scene::{normalize_words, parse_preference, GeometricRelation, PreferenceLabel};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("malformed response: {0}")]
    MalformedResponse(String),
    #[error("unknown geometric relation {0:?}")]
    UnknownRelation(String),
    #[error("no preference found in {0:?}")]
    UnknownPreference(String),
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Field {
    Geometric,
    Semantic,
    Description,
}

/// Drops list bullets, numbering and markdown emphasis from a line start.
fn strip_decoration(line: &str) -> &str {
    let mut s = line.trim();
    loop {
        let before = s;
        s = s.trim_start_matches(['-', '*', '•', '>', '#']).trim_start();
        let digits = s.len() - s.trim_start_matches(|c: char| c.is_ascii_digit()).len();
        if digits > 0 && s[digits..].starts_with(['.', ')']) {
            s = s[digits + 1..].trim_start();
        }
        if s == before {
            return s;
        }
    }
}

/// If `line` opens a labeled field, the field and the text after the colon.
fn field_label(line: &str) -> Option<(Field, &str)> {
    let s = strip_decoration(line);
    let colon = s.find(':')?;
    let label = normalize_words(&s[..colon]);
    let field = match label.as_str() {
        "geometric property" | "geometric" => Field::Geometric,
        "semantic property" | "semantic" => Field::Semantic,
        "description" => Field::Description,
        _ => return None,
    };
    let rest = s[colon + 1..].trim().trim_start_matches("**").trim();
    Some((field, rest))
}

fn attributes(segment: &str) -> Result<ObjectAttributes, ParseError> {
    let cleaned = segment.trim().trim_end_matches([',', '.', ';']).trim();
    let parts: Vec<&str> = cleaned.split(',').map(str::trim).collect();
    if parts.len() < 3 || parts.iter().take(3).any(|p| p.is_empty()) {
        return Err(ParseError::MalformedResponse(format!(
            "expected \"name, color, shape\", found {cleaned:?}"
        )));
    }
    Ok(ObjectAttributes::new(parts[0], parts[1], parts[2..].join(", ")))
}

fn semantic_pair(text: &str) -> Result<SemanticPair, ParseError> {
    // ASCII lowercasing keeps byte offsets aligned with `text`
    let lower = text.to_ascii_lowercase();
    let find_marker = |name: &str| -> Result<(usize, usize), ParseError> {
        let start = lower
            .find(name)
            .ok_or_else(|| ParseError::MalformedResponse(format!("semantic field lacks {name:?}")))?;
        let colon = lower[start..]
            .find(':')
            .map(|c| start + c)
            .ok_or_else(|| ParseError::MalformedResponse(format!("{name:?} lacks a colon")))?;
        Ok((start, colon + 1))
    };
    let (src_at, src_body) = find_marker("source object")?;
    let (tgt_at, tgt_body) = find_marker("target object")?;
    let (source, target) = if src_at < tgt_at {
        (&text[src_body..tgt_at], &text[tgt_body..])
    } else {
        (&text[src_body..], &text[tgt_body..src_at])
    };
    Ok(SemanticPair {
        source: attributes(source)?,
        target: attributes(target)?,
    })
}

/// Parses a residual answer made of three labeled fields in any order.
///
/// Labels are matched case-insensitively, with optional bullets or
/// numbering. A field continues over following lines until the next label.
/// Attribute tokens are kept as written.
pub fn parse_vrd_response(text: &str) -> Result<VisualResidual, ParseError> {
    let mut fields: [Option<String>; 3] = [None, None, None];
    let slot = |f: Field| match f {
        Field::Geometric => 0,
        Field::Semantic => 1,
        Field::Description => 2,
    };
    let mut current: Option<usize> = None;
    for line in text.lines() {
        if let Some((field, rest)) = field_label(line) {
            let i = slot(field);
            if fields[i].is_none() {
                fields[i] = Some(rest.to_string());
                current = Some(i);
            } else {
                current = None;
            }
        } else if let Some(i) = current {
            let extra = strip_decoration(line);
            if !extra.is_empty() {
                let f = fields[i].as_mut().expect("current field is set");
                if !f.is_empty() {
                    f.push(' ');
                }
                f.push_str(extra);
            }
        }
    }

    let names = ["geometric property", "semantic property", "description"];
    let missing: Vec<&str> = fields
        .iter()
        .zip(names)
        .filter(|(f, _)| f.as_deref().is_none_or(|s| s.trim().is_empty()))
        .map(|(_, n)| n)
        .collect();
    if !missing.is_empty() {
        return Err(ParseError::MalformedResponse(format!("missing {}", missing.join(", "))));
    }
    let [geo, sem, desc] = fields.map(|f| f.expect("checked above"));

    let geo_clean = geo.trim().trim_end_matches(['.', ',', ';']).trim();
    let geometric: GeometricRelation = geo_clean
        .parse()
        .map_err(|_| ParseError::UnknownRelation(geo_clean.to_string()))?;
    Ok(VisualResidual {
        semantic: semantic_pair(&sem)?,
        geometric,
        description: desc.trim().to_string(),
    })
}

/// Canonical answer text for a residual; parses back to the same value.
pub fn format_vrd_response(r: &VisualResidual) -> String {
    let s = &r.semantic;
    format!(
        "geometric property: {}\nsemantic property: source object: {}, {}, {},\ntarget object: {}, {}, {}\ndescription: {}",
        r.geometric.as_snake(),
        s.source.name,
        s.source.color,
        s.source.shape,
        s.target.name,
        s.target.color,
        s.target.shape,
        r.description
    )
}

/// Label whose sentence (or snake_case name) occurs earliest in `text`.
fn substring_match(text: &str) -> Option<PreferenceLabel> {
    let norm = format!(" {} ", normalize_words(text));
    PreferenceLabel::ALL
        .into_iter()
        .flat_map(|l| {
            [l.sentence(), l.as_str()].map(|form| {
                let needle = format!(" {} ", normalize_words(form));
                norm.find(&needle).map(|pos| (pos, std::cmp::Reverse(needle.len()), l))
            })
        })
        .flatten()
        .min()
        .map(|(_, _, l)| l)
}

/// Maps a preference answer to a label: the text after the last
/// "Preference:" label if any, else the whole answer. Exact canonical
/// matches win over substring matches.
pub fn parse_prd_response(text: &str) -> Result<PreferenceLabel, ParseError> {
    let lower = text.to_ascii_lowercase();
    let labeled = lower.rfind("preference:").map(|i| {
        let rest = &text[i + "preference:".len()..];
        rest.lines().find(|l| !l.trim().is_empty()).unwrap_or("").trim()
    });
    let candidates = labeled.into_iter().chain(std::iter::once(text));
    let mut fallback = None;
    for cand in candidates {
        if let Ok(label) = parse_preference(cand) {
            return Ok(label);
        }
        if fallback.is_none() {
            fallback = substring_match(cand);
        }
    }
    fallback.ok_or_else(|| ParseError::UnknownPreference(text.trim().to_string()))
}
