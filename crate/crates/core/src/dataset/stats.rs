use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::DesignRecord;
use crate::raster::Rgba;

pub const LUMINANCE_BINS: usize = 10;

/// Min, quartiles and max, linearly interpolated between order statistics.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Quantiles {
    pub min: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub max: f64,
}

impl Quantiles {
    /// All zero for an empty sample.
    pub fn of(values: &[f64]) -> Quantiles {
        if values.is_empty() {
            return Quantiles::default();
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let at = |q: f64| {
            let pos = q * (v.len() - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
        };
        Quantiles {
            min: v[0],
            q25: at(0.25),
            median: at(0.5),
            q75: at(0.75),
            max: v[v.len() - 1],
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub records: usize,
    pub elements: usize,
    pub role_counts: BTreeMap<String, usize>,
    pub font_histogram: BTreeMap<String, usize>,
    pub box_area: Quantiles,
    /// Text color relative luminance in equal-width bins over [0, 1].
    pub color_luminance_histogram: Vec<usize>,
}

pub fn corpus_stats(records: &[DesignRecord]) -> StatsReport {
    let mut report = StatsReport {
        records: records.len(),
        color_luminance_histogram: vec![0; LUMINANCE_BINS],
        ..Default::default()
    };
    for role in ["title", "subtitle", "information"] {
        report.role_counts.insert(role.to_string(), 0);
    }
    let mut areas = Vec::new();
    for r in records {
        for e in &r.elements {
            report.elements += 1;
            *report
                .role_counts
                .entry(e.role.as_str().to_string())
                .or_default() += 1;
            *report.font_histogram.entry(e.font_id.clone()).or_default() += 1;
            areas.push(e.box_width as f64 * e.box_height as f64);
            if let Some(c) = Rgba::parse_hex(&e.color) {
                let l = c.relative_luminance();
                let bin = ((l * LUMINANCE_BINS as f64) as usize).min(LUMINANCE_BINS - 1);
                report.color_luminance_histogram[bin] += 1;
            }
        }
    }
    report.box_area = Quantiles::of(&areas);
    report
}

#[cfg(test)]
mod tests {
    use super::super::DesignElement;
    use super::*;
    use crate::doc::{Alignment, Role};

    fn record(areas: &[(i64, i64)], role: Role) -> DesignRecord {
        DesignRecord {
            background_ref: "bg.png".into(),
            user_description: "d".into(),
            elements: areas
                .iter()
                .map(|&(w, h)| DesignElement {
                    role,
                    content: "x".into(),
                    x: 0,
                    y: 0,
                    box_width: w,
                    box_height: h,
                    font_id: "sans".into(),
                    font_size: 1.0,
                    color: "#FFFFFF".into(),
                    alignment: Alignment::Center,
                    rotation_deg: 0.0,
                })
                .collect(),
        }
    }

    #[test]
    fn empty_corpus_is_zeroed() {
        let r = corpus_stats(&[]);
        assert_eq!(r.records, 0);
        assert_eq!(r.box_area, Quantiles::default());
        assert!(r.role_counts.values().all(|&c| c == 0));
        assert_eq!(r.color_luminance_histogram, vec![0; LUMINANCE_BINS]);
    }

    #[test]
    fn title_counts_and_median() {
        let recs = vec![
            record(&[(10, 10)], Role::Title),
            record(&[(10, 20)], Role::Title),
            record(&[(10, 30)], Role::Title),
        ];
        let r = corpus_stats(&recs);
        assert_eq!(r.role_counts["title"], 3);
        assert_eq!(r.box_area.median, 200.0);
        assert_eq!(r.box_area.q25, 150.0);
        assert_eq!(r.font_histogram["sans"], 3);
        assert_eq!(r.color_luminance_histogram[LUMINANCE_BINS - 1], 3);
    }
}
