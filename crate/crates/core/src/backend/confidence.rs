//! Reflection confidence from first-token probabilities.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::parse::extract_option_label;
use super::TokenProb;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConfidenceMode {
    Yesno,
    MultipleChoice,
}

/// How a Yes/No confidence is read off the token report.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum YesNoMode {
    /// `p(Yes) / (p(Yes) + p(No))` when both are reported.
    #[default]
    PairNormalized,
    /// `p(Yes)` as reported.
    RawYes,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Confidence {
    pub value: f64,
    pub mode: ConfidenceMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub option_distribution: Option<BTreeMap<String, f64>>,
    /// Set when there was no probability mass to read a confidence from.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub degenerate: bool,
}

impl Confidence {
    pub fn zero(mode: ConfidenceMode) -> Self {
        Confidence {
            value: 0.0,
            mode,
            option_distribution: None,
            degenerate: true,
        }
    }
}

fn check_prob(p: f64, what: &str) -> Result<()> {
    if p.is_finite() && (0.0..=1.0 + 1e-9).contains(&p) {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "{what} probability {p} outside [0, 1]"
        )))
    }
}

/// Yes/No confidence. `None` means the token was absent from the report.
pub fn yes_confidence(p_yes: Option<f64>, p_no: Option<f64>) -> Result<Confidence> {
    if let Some(p) = p_yes {
        check_prob(p, "yes")?;
    }
    if let Some(p) = p_no {
        check_prob(p, "no")?;
    }
    let yes = p_yes.unwrap_or(0.0);
    let value = match p_no {
        Some(no) => {
            let mass = yes + no;
            if mass <= 0.0 {
                return Ok(Confidence::zero(ConfidenceMode::Yesno));
            }
            yes / mass
        }
        None => yes,
    };
    Ok(Confidence {
        value: value.clamp(0.0, 1.0),
        mode: ConfidenceMode::Yesno,
        option_distribution: None,
        degenerate: p_yes.is_none() && p_no.is_none(),
    })
}

/// Largest option probability. The distribution is rescaled if the report
/// sums past 1.
pub fn mc_confidence(option_probs: &BTreeMap<String, f64>) -> Result<Confidence> {
    if option_probs.is_empty() {
        return Err(Error::invalid(
            "multiple-choice confidence needs at least one option",
        ));
    }
    for (label, &p) in option_probs {
        check_prob(p, label)?;
    }
    let sum: f64 = option_probs.values().sum();
    let dist: BTreeMap<String, f64> = if sum > 1.0 {
        option_probs
            .iter()
            .map(|(k, v)| (k.clone(), v / sum))
            .collect()
    } else {
        option_probs.clone()
    };
    let value = dist.values().copied().fold(0.0, f64::max);
    Ok(Confidence {
        value,
        mode: ConfidenceMode::MultipleChoice,
        option_distribution: Some(dist),
        degenerate: sum <= 0.0,
    })
}

fn normalize_token(tok: &str) -> &str {
    tok.trim()
        .trim_start_matches(['(', '['])
        .trim_end_matches(['.', ')', ':', ',', ']'])
}

/// Summed mass of every reported token that normalizes to `target`
/// (case-insensitive); `None` when no such token was reported.
pub fn token_mass(probs: &[TokenProb], target: &str) -> Option<f64> {
    let hits: Vec<f64> = probs
        .iter()
        .filter(|tp| normalize_token(&tp.token).eq_ignore_ascii_case(target))
        .map(|tp| tp.prob)
        .collect();
    (!hits.is_empty()).then(|| hits.iter().sum::<f64>().min(1.0))
}

pub fn yesno_from_tokens(probs: &[TokenProb], mode: YesNoMode) -> Result<Confidence> {
    let yes = token_mass(probs, "yes");
    let no = match mode {
        YesNoMode::PairNormalized => token_mass(probs, "no"),
        YesNoMode::RawYes => None,
    };
    if mode == YesNoMode::PairNormalized && yes.is_none() && no.is_some() {
        return yes_confidence(Some(0.0), no);
    }
    yes_confidence(yes, no)
}

pub fn mc_from_tokens(probs: &[TokenProb], labels: &[&str]) -> Result<Confidence> {
    let dist: BTreeMap<String, f64> = labels
        .iter()
        .map(|&l| {
            let p = probs
                .iter()
                .filter(|tp| normalize_token(&tp.token) == l)
                .map(|tp| tp.prob)
                .sum::<f64>();
            (l.to_string(), p.min(1.0))
        })
        .collect();
    mc_confidence(&dist)
}

/// Frequency estimate from independently sampled generations, used when the
/// endpoint cannot report token probabilities.
pub fn confidence_from_samples(
    texts: &[String],
    mode: ConfidenceMode,
    labels: &[&str],
) -> Result<Confidence> {
    if texts.is_empty() {
        return Err(Error::invalid("no samples to estimate confidence from"));
    }
    let n = texts.len() as f64;
    match mode {
        ConfidenceMode::Yesno => {
            let yes = texts
                .iter()
                .filter(|t| {
                    t.split(|c: char| !c.is_alphanumeric())
                        .find(|w| !w.is_empty())
                        .is_some_and(|w| w.eq_ignore_ascii_case("yes"))
                })
                .count() as f64;
            yes_confidence(Some(yes / n), None)
        }
        ConfidenceMode::MultipleChoice => {
            let mut dist: BTreeMap<String, f64> =
                labels.iter().map(|l| (l.to_string(), 0.0)).collect();
            for t in texts {
                if let Some(l) = extract_option_label(t, labels) {
                    *dist.entry(l).or_default() += 1.0 / n;
                }
            }
            mc_confidence(&dist)
        }
    }
}
