use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{MetricReport, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregateMode {
    /// EM and SC as percentages of the instances.
    #[default]
    Rate,
    /// EM and SC as raw counts.
    Count,
}

impl std::str::FromStr for AggregateMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rate" => Ok(Self::Rate),
            "count" => Ok(Self::Count),
            other => Err(format!("unknown aggregation mode `{other}` (expected rate or count)")),
        }
    }
}

/// EM, SC and CodeBLEU over a set of reports. CodeBLEU is the mean ×100 in
/// both modes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scores<T> {
    pub em: T,
    pub sc: T,
    pub codebleu: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedSummary<T> {
    pub seed: u64,
    pub instances: usize,
    #[serde(flatten)]
    pub scores: Scores<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary<T> {
    pub mode: AggregateMode,
    pub instances: usize,
    /// Pooled over every report.
    #[serde(flatten)]
    pub scores: Scores<T>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub per_seed: Vec<SeedSummary<T>>,
    /// Unweighted mean of the per-seed scores.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cross_seed: Option<Scores<T>>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AggregateError {
    #[error("cannot aggregate an empty list of reports")]
    Empty,
    #[error("either every report or none must carry a seed label")]
    MixedSeedLabels,
}

fn scores<T: Scalar>(reports: &[&MetricReport<T>], mode: AggregateMode) -> Scores<T> {
    let n = T::from_usize(reports.len()).unwrap();
    let hundred = T::from_f64(100.0).unwrap();
    let em = T::from_usize(reports.iter().filter(|r| r.em).count()).unwrap();
    let sc = T::from_usize(reports.iter().filter(|r| r.sc).count()).unwrap();
    let codebleu = reports.iter().fold(T::zero(), |a, r| a + r.codebleu) / n * hundred;
    match mode {
        AggregateMode::Rate => Scores { em: em / n * hundred, sc: sc / n * hundred, codebleu },
        AggregateMode::Count => Scores { em, sc, codebleu },
    }
}

/// Mean of per-seed scores.
pub fn cross_seed_mean<T: Scalar>(per_seed: &[Scores<T>]) -> Option<Scores<T>> {
    if per_seed.is_empty() {
        return None;
    }
    let n = T::from_usize(per_seed.len()).unwrap();
    let sum = per_seed.iter().fold((T::zero(), T::zero(), T::zero()), |a, s| (a.0 + s.em, a.1 + s.sc, a.2 + s.codebleu));
    Some(Scores { em: sum.0 / n, sc: sum.1 / n, codebleu: sum.2 / n })
}

pub fn aggregate<T: Scalar>(reports: &[MetricReport<T>], mode: AggregateMode) -> Result<Summary<T>, AggregateError> {
    if reports.is_empty() {
        return Err(AggregateError::Empty);
    }
    let labeled = reports.iter().filter(|r| r.seed.is_some()).count();
    if labeled != 0 && labeled != reports.len() {
        return Err(AggregateError::MixedSeedLabels);
    }
    let all: Vec<_> = reports.iter().collect();
    let mut by_seed: BTreeMap<u64, Vec<&MetricReport<T>>> = BTreeMap::new();
    for r in reports {
        if let Some(seed) = r.seed {
            by_seed.entry(seed).or_default().push(r);
        }
    }
    let per_seed: Vec<SeedSummary<T>> = by_seed
        .into_iter()
        .map(|(seed, rs)| SeedSummary { seed, instances: rs.len(), scores: scores(&rs, mode) })
        .collect();
    let cross_seed = cross_seed_mean(&per_seed.iter().map(|s| s.scores).collect::<Vec<_>>());
    Ok(Summary { mode, instances: reports.len(), scores: scores(&all, mode), per_seed, cross_seed })
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;

    use super::*;
    use crate::metrics::Components;

    fn report(em: bool, codebleu: f64, seed: Option<u64>) -> MetricReport<f64> {
        MetricReport {
            instance_id: String::new(),
            em,
            sc: em,
            codebleu,
            components: Components::zero(),
            parse_fallback: false,
            seed,
        }
    }

    #[test]
    fn rate_of_55_in_96() {
        let reports: Vec<_> = (0..96).map(|i| report(i < 55, 0.5, None)).collect();
        let s = aggregate(&reports, AggregateMode::Rate).unwrap();
        assert_eq!(format!("{:.2}", s.scores.em), "57.29");
        assert_abs_diff_eq!(s.scores.codebleu, 50.0, epsilon = 1e-9);
        assert!(s.cross_seed.is_none());
    }

    #[test]
    fn saturation() {
        let reports: Vec<_> = (0..7).map(|_| report(true, 1.0, None)).collect();
        let s = aggregate(&reports, AggregateMode::Rate).unwrap();
        assert_eq!((s.scores.em, s.scores.sc, s.scores.codebleu), (100.0, 100.0, 100.0));
    }

    #[test]
    fn cross_seed_counts() {
        let mut reports = Vec::new();
        for (seed, hits) in [(1u64, 70usize), (2, 71), (3, 70)] {
            reports.extend((0..100).map(|i| report(i < hits, 0.0, Some(seed))));
        }
        let s = aggregate(&reports, AggregateMode::Count).unwrap();
        let ems: Vec<f64> = s.per_seed.iter().map(|p| p.scores.em).collect();
        assert_eq!(ems, [70.0, 71.0, 70.0]);
        assert_eq!(format!("{:.2}", s.cross_seed.unwrap().em), "70.33");
        assert_eq!(s.scores.em, 211.0);
    }

    #[test]
    fn errors() {
        assert_eq!(aggregate::<f64>(&[], AggregateMode::Rate), Err(AggregateError::Empty));
        let mixed = [report(true, 1.0, Some(1)), report(true, 1.0, None)];
        assert_eq!(aggregate(&mixed, AggregateMode::Rate), Err(AggregateError::MixedSeedLabels));
    }
}
