use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::CherryReport;
use crate::model::{BiasCategory, Corpus};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutletScore {
    pub outlet_id: String,
    /// Mean number of cherry-picked statements per document.
    pub mean: f64,
    pub events_covered: usize,
    pub documents: usize,
}

/// Per-outlet mean of |c_i| over every document it published in the
/// reported events. Outlets with no document in any report get no row.
pub fn outlet_scores(reports: &[CherryReport]) -> Vec<OutletScore> {
    #[derive(Default)]
    struct Acc<'a> {
        picked: usize,
        documents: usize,
        events: BTreeSet<&'a str>,
    }
    let mut acc: BTreeMap<&str, Acc> = BTreeMap::new();
    for r in reports {
        for d in &r.documents {
            let a = acc.entry(d.outlet_id.as_str()).or_default();
            a.picked += d.cherry_picked.len();
            a.documents += 1;
            a.events.insert(r.event_id.as_str());
        }
    }
    acc.into_iter()
        .map(|(id, a)| OutletScore {
            outlet_id: id.to_string(),
            mean: a.picked as f64 / a.documents as f64,
            events_covered: a.events.len(),
            documents: a.documents,
        })
        .collect()
}

/// Row order of the bias-band table.
pub const BAND_ORDER: [BiasCategory; 5] =
    [BiasCategory::Left, BiasCategory::LeftCenter, BiasCategory::Right, BiasCategory::RightCenter, BiasCategory::Center];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandSummary {
    pub band: BiasCategory,
    pub mean: f64,
    /// Sample standard deviation; absent for a single outlet.
    pub std: Option<f64>,
    pub sample_size: usize,
}

/// Mean and spread of outlet scores within each bias band, in
/// [`BAND_ORDER`]. Empty bands are left out.
pub fn band_summary(scores: &[OutletScore], corpus: &Corpus) -> Vec<BandSummary> {
    let index = corpus.index();
    let mut by_band: BTreeMap<BiasCategory, Vec<f64>> = BTreeMap::new();
    for s in scores {
        if let Some(o) = index.outlets.get(s.outlet_id.as_str()) {
            by_band.entry(o.bias_category).or_default().push(s.mean);
        }
    }
    BAND_ORDER
        .iter()
        .filter_map(|band| {
            let xs = by_band.get(band)?;
            let n = xs.len() as f64;
            let mean = xs.iter().sum::<f64>() / n;
            let std = (xs.len() > 1).then(|| (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt());
            Some(BandSummary { band: *band, mean, std, sample_size: xs.len() })
        })
        .collect()
}
