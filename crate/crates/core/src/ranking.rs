//! Weighted link scores and the ranked candidate list.

use crate::error::{Result, SbraError};
use crate::model::WeightSet;
use crate::preprocess::Candidate;

/// Min-max normalization of every attribute over `cands`; a constant column maps to 0.
pub fn normalized(cands: &[Candidate]) -> Vec<[f64; 7]> {
    let mut lo = [f64::INFINITY; 7];
    let mut hi = [f64::NEG_INFINITY; 7];
    for c in cands {
        for i in 0..7 {
            lo[i] = lo[i].min(c.attributes[i]);
            hi[i] = hi[i].max(c.attributes[i]);
        }
    }
    cands
        .iter()
        .map(|c| {
            let mut out = [0.0; 7];
            for i in 0..7 {
                let span = hi[i] - lo[i];
                if span > 0.0 {
                    out[i] = (c.attributes[i] - lo[i]) / span;
                }
            }
            out
        })
        .collect()
}

/// Scores of all candidates, index-aligned with `cands`.
pub fn scores(cands: &[Candidate], w: &WeightSet) -> Vec<f64> {
    normalized(cands)
        .iter()
        .map(|a| a.iter().zip(w.values()).map(|(x, wi)| x * wi).sum())
        .collect()
}

/// Score of one member of `all`.
pub fn score(candidate: &Candidate, all: &[Candidate], w: &WeightSet) -> Result<f64> {
    if all.is_empty() {
        return Err(SbraError::EmptyCandidates);
    }
    let pos = all
        .iter()
        .position(|c| c.link == candidate.link)
        .ok_or_else(|| SbraError::UnknownCandidate(candidate.link.to_string()))?;
    Ok(scores(all, w)[pos])
}

/// Candidate indices by decreasing score, ties by ascending link.
pub fn rank_indices(cands: &[Candidate], w: &WeightSet) -> Vec<usize> {
    let sc = scores(cands, w);
    let mut order: Vec<usize> = (0..cands.len()).collect();
    order.sort_by(|&i, &j| sc[j].total_cmp(&sc[i]).then(cands[i].link.cmp(&cands[j].link)));
    order
}

pub fn rank<'a>(cands: &'a [Candidate], w: &WeightSet) -> Vec<&'a Candidate> {
    rank_indices(cands, w).into_iter().map(|i| &cands[i]).collect()
}
