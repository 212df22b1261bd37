//! Comparison estimators: Mean, Median, Voting and K-sources.

use std::collections::{HashMap, HashSet};

use crate::error::{Error, Result};
use crate::reliability::ReliabilityProfile;
use crate::view::{distance, SourceId, UnifiedView};

fn non_empty(views: &[UnifiedView]) -> Result<()> {
    if views.is_empty() {
        Err(Error::Empty("views"))
    } else {
        Ok(())
    }
}

/// Arithmetic mean, clamped into `[min, max]` against rounding.
pub fn mean_estimate(views: &[UnifiedView]) -> Result<UnifiedView> {
    non_empty(views)?;
    let (mut lo, mut hi, mut sum) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
    for v in views {
        lo = lo.min(v.value());
        hi = hi.max(v.value());
        sum += v.value();
    }
    UnifiedView::new((sum / views.len() as f64).clamp(lo, hi))
}

/// Middle value, or the average of the two middle values for an even count.
pub fn median_estimate(views: &[UnifiedView]) -> Result<UnifiedView> {
    non_empty(views)?;
    let mut xs: Vec<f64> = views.iter().map(|v| v.value()).collect();
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    let mid = if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    };
    UnifiedView::new(mid)
}

/// The view closest to all others in total absolute distance. Ties go to the
/// earliest view.
pub fn voting_estimate(views: &[UnifiedView]) -> Result<UnifiedView> {
    non_empty(views)?;
    let mut best = (f64::INFINITY, views[0]);
    for &candidate in views {
        let total: f64 = views.iter().map(|&other| distance(candidate, other)).sum();
        if total < best.0 {
            best = (total, candidate);
        }
    }
    Ok(best.1)
}

/// Sources ordered from most to least trustworthy.
#[derive(Debug, Clone, PartialEq)]
pub struct TrustRanking {
    order: Vec<SourceId>,
    provenance: String,
}

impl TrustRanking {
    pub fn new(order: Vec<SourceId>, provenance: impl Into<String>) -> Result<Self> {
        let mut seen = HashSet::new();
        if let Some(dup) = order.iter().find(|s| !seen.insert(*s)) {
            return Err(Error::InvalidParameter(format!(
                "source {dup} ranked twice"
            )));
        }
        Ok(Self {
            order,
            provenance: provenance.into(),
        })
    }

    /// Ranks by ascending `|mu| + sigma`; equal scores keep profile order.
    pub fn from_profiles(profiles: &[ReliabilityProfile], provenance: impl Into<String>) -> Result<Self> {
        let mut scored: Vec<(f64, &SourceId)> = profiles
            .iter()
            .map(|p| (p.mu.abs() + p.sigma(), &p.source))
            .collect();
        scored.sort_by(|a, b| a.0.total_cmp(&b.0));
        Self::new(scored.into_iter().map(|(_, s)| s.clone()).collect(), provenance)
    }

    pub fn order(&self) -> &[SourceId] {
        &self.order
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }
}

/// Mean of the views held by the `k` highest-ranked sources.
pub fn k_sources_estimate(
    sources: &[SourceId],
    views: &[UnifiedView],
    ranking: &TrustRanking,
    k: usize,
) -> Result<UnifiedView> {
    if sources.len() != views.len() {
        return Err(Error::LengthMismatch {
            left: sources.len(),
            right: views.len(),
        });
    }
    if k == 0 || k > views.len() {
        return Err(Error::InvalidParameter(format!(
            "k = {k} outside 1..={}",
            views.len()
        )));
    }
    let index: HashMap<&SourceId, usize> = sources.iter().enumerate().map(|(i, s)| (s, i)).collect();
    let ranked: Vec<usize> = ranking
        .order
        .iter()
        .filter_map(|s| index.get(s).copied())
        .collect();
    if ranked.len() != sources.len() {
        return Err(Error::InvalidParameter(
            "ranking does not cover every source".into(),
        ));
    }
    let top: Vec<UnifiedView> = ranked[..k].iter().map(|&i| views[i]).collect();
    mean_estimate(&top)
}
