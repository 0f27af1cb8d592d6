use std::sync::LazyLock;

use regex::Regex;

use crate::temporal::{merge, TemporalWindow, WindowSet};

static PAIR: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"\[\s*([-+]?\d+(?:\.\d*)?)\s*,\s*([-+]?\d+(?:\.\d*)?)\s*\]").expect("pair regex")
});

/// Pull every bracketed `[s, e]` pair out of generated text, drop inverted
/// pairs, clamp the rest to `segment` and merge.
///
/// Never fails: text without pairs gives an empty set.
pub fn parse_windows(raw: &str, segment: &TemporalWindow) -> WindowSet {
    let mut out = Vec::new();
    for cap in PAIR.captures_iter(raw) {
        let (Ok(s), Ok(e)) = (cap[1].parse::<f64>(), cap[2].parse::<f64>()) else {
            continue;
        };
        if !(s.is_finite() && e.is_finite()) || s > e {
            continue;
        }
        let start = s.max(segment.start);
        let end = e.min(segment.end);
        if start > end {
            continue;
        }
        // A positive window that only grazes the segment edge says nothing.
        if end - start <= 0.0 && e - s > 0.0 {
            continue;
        }
        out.push(TemporalWindow { start, end });
    }
    merge(&WindowSet::new(out))
}

/// First standalone token that equals one of `labels`, e.g. `B` in
/// "The answer is B.".
pub fn extract_option_label(text: &str, labels: &[&str]) -> Option<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|tok| !tok.is_empty())
        .find(|tok| labels.contains(tok))
        .map(str::to_string)
}
