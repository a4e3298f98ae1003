//! The ten suspiciousness ranking metrics and tie-aware ranking.
//!
//! Division guards: any fraction with a zero denominator evaluates to 0,
//! and Zoltar with c_ef = 0 is 0. This keeps elements never executed by a
//! failing test at the bottom of every guarded ranking.

use std::str::FromStr;

use thiserror::Error;

use crate::spectra::{Counts, ElementId, SpectrumMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MetricId {
    Ochiai,
    Jaccard,
    Kulczynski2,
    Zoltar,
    McCon,
    Minus,
    Op,
    Drt,
    Tarantula,
    Wong3,
}

pub const ALL_METRICS: [MetricId; 10] = [
    MetricId::Ochiai,
    MetricId::Jaccard,
    MetricId::Kulczynski2,
    MetricId::Zoltar,
    MetricId::McCon,
    MetricId::Minus,
    MetricId::Op,
    MetricId::Drt,
    MetricId::Tarantula,
    MetricId::Wong3,
];

impl MetricId {
    pub fn name(self) -> &'static str {
        match self {
            MetricId::Ochiai => "ochiai",
            MetricId::Jaccard => "jaccard",
            MetricId::Kulczynski2 => "kulczynski2",
            MetricId::Zoltar => "zoltar",
            MetricId::McCon => "mccon",
            MetricId::Minus => "minus",
            MetricId::Op => "op",
            MetricId::Drt => "drt",
            MetricId::Tarantula => "tarantula",
            MetricId::Wong3 => "wong3",
        }
    }
}

impl std::fmt::Display for MetricId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum MetricError {
    #[error("unknown metric `{0}`")]
    UnknownMetric(String),
    #[error("ranking is undefined without at least one failing test")]
    NoFailingTests,
    #[error("ranking over an empty element set")]
    EmptyElements,
}

impl FromStr for MetricId {
    type Err = MetricError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ALL_METRICS
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| MetricError::UnknownMetric(s.to_string()))
    }
}

fn safe_div(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Evaluates one metric on one counter quadruple. `total_tests` only
/// matters for DRT.
pub fn score(metric: MetricId, c: &Counts, total_tests: u32) -> f64 {
    let ef = f64::from(c.c_ef);
    let nf = f64::from(c.c_nf);
    let ep = f64::from(c.c_ep);
    let np = f64::from(c.c_np);
    match metric {
        MetricId::Ochiai => safe_div(ef, ((ef + nf) * (ef + ep)).sqrt()),
        MetricId::Jaccard => safe_div(ef, ef + nf + ep),
        MetricId::Kulczynski2 => 0.5 * (safe_div(ef, ef + nf) + safe_div(ef, ef + ep)),
        MetricId::Zoltar => {
            if c.c_ef == 0 {
                0.0
            } else {
                ef / (ef + nf + ep + 10000.0 * nf * ep / ef)
            }
        }
        MetricId::McCon => safe_div(ef * ef - nf * ep, (ef + nf) * (ef + ep)),
        MetricId::Minus => {
            // The Tarantula ratio minus its complement ratio.
            let fr = safe_div(ef, ef + nf);
            let pr = safe_div(ep, ep + np);
            safe_div(fr, fr + pr) - safe_div(1.0 - fr, (1.0 - fr) + (1.0 - pr))
        }
        MetricId::Op => ef - ep / (ep + np + 1.0),
        MetricId::Drt => safe_div(ef, 1.0 + safe_div(ep, f64::from(total_tests))),
        MetricId::Tarantula => {
            let fr = safe_div(ef, ef + nf);
            let pr = safe_div(ep, ep + np);
            safe_div(fr, fr + pr)
        }
        MetricId::Wong3 => {
            let penalty = if ep <= 2.0 {
                ep
            } else if ep <= 10.0 {
                2.0 + 0.1 * (ep - 2.0)
            } else {
                2.8 + 0.001 * (ep - 10.0)
            };
            ef - penalty
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum SpectrumKind {
    Line,
    Dua,
}

impl SpectrumKind {
    pub fn name(self) -> &'static str {
        match self {
            SpectrumKind::Line => "line",
            SpectrumKind::Dua => "dua",
        }
    }

    fn selects(self, element: &ElementId) -> bool {
        match self {
            SpectrumKind::Line => element.is_line(),
            SpectrumKind::Dua => element.is_dua(),
        }
    }
}

impl std::fmt::Display for SpectrumKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankEntry {
    pub element: ElementId,
    pub score: f64,
    /// Position under the worst-case tie rule: every element with a
    /// strictly greater score, plus every element tied at this score.
    pub worst_case_position: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedList {
    pub metric: MetricId,
    pub spectrum: SpectrumKind,
    pub entries: Vec<RankEntry>,
}

impl RankedList {
    /// Consecutive runs of equal score, best first.
    pub fn tie_groups(&self) -> Vec<&[RankEntry]> {
        let mut groups = Vec::new();
        let mut start = 0;
        for i in 1..=self.entries.len() {
            if i == self.entries.len() || self.entries[i].score != self.entries[start].score {
                groups.push(&self.entries[start..i]);
                start = i;
            }
        }
        groups
    }

    pub fn position_of(&self, element: &ElementId) -> Option<usize> {
        self.entries
            .iter()
            .find(|e| &e.element == element)
            .map(|e| e.worst_case_position)
    }
}

/// Worst-case positions for a score vector sorted in descending order.
pub fn worst_case_positions(sorted_scores: &[f64]) -> Vec<usize> {
    let n = sorted_scores.len();
    let mut positions = vec![0usize; n];
    let mut start = 0;
    for i in 1..=n {
        if i == n || sorted_scores[i] != sorted_scores[start] {
            for slot in positions.iter_mut().take(i).skip(start) {
                *slot = i;
            }
            start = i;
        }
    }
    positions
}

/// Scores and ranks the matrix elements of one spectrum kind, descending;
/// equal scores are ordered by element id (lexicographic) for output
/// determinism.
pub fn rank(
    matrix: &SpectrumMatrix,
    spectrum: SpectrumKind,
    metric: MetricId,
) -> Result<RankedList, MetricError> {
    if matrix.failing_tests() == 0 {
        return Err(MetricError::NoFailingTests);
    }
    let total = matrix.total_tests() as u32;
    let mut scored: Vec<(ElementId, f64)> = matrix
        .elements
        .iter()
        .enumerate()
        .filter(|(_, e)| spectrum.selects(e))
        .map(|(idx, e)| (e.clone(), score(metric, &matrix.tally_at(idx), total)))
        .collect();
    if scored.is_empty() {
        return Err(MetricError::EmptyElements);
    }
    scored.sort_by(|(ea, sa), (eb, sb)| {
        sb.total_cmp(sa)
            .then_with(|| ea.to_string().cmp(&eb.to_string()))
    });
    let scores: Vec<f64> = scored.iter().map(|(_, s)| *s).collect();
    let positions = worst_case_positions(&scores);
    let entries = scored
        .into_iter()
        .zip(positions)
        .map(|((element, score), worst_case_position)| RankEntry {
            element,
            score,
            worst_case_position,
        })
        .collect();
    Ok(RankedList {
        metric,
        spectrum,
        entries,
    })
}

/// Ranking CSV: `rank,element,score,worst_case_position`, scores with six
/// decimal places.
pub fn ranking_csv(list: &RankedList) -> String {
    let mut out = String::from("rank,element,score,worst_case_position\n");
    for (i, entry) in list.entries.iter().enumerate() {
        out.push_str(&format!(
            "{},{},{:.6},{}\n",
            i + 1,
            entry.element,
            entry.score,
            entry.worst_case_position
        ));
    }
    out
}

/// `--metric` arguments: a known id or `all`.
pub fn parse_metric_selection(tokens: &[String]) -> Result<Vec<MetricId>, MetricError> {
    if tokens.is_empty() || tokens.iter().any(|t| t == "all") {
        return Ok(ALL_METRICS.to_vec());
    }
    let mut out = Vec::new();
    for token in tokens {
        let metric = token.parse::<MetricId>()?;
        if !out.contains(&metric) {
            out.push(metric);
        }
    }
    Ok(out)
}
