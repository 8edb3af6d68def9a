//! Evaluation metrics: infected fraction, median-risk ratio, alerted
//! fraction and region (mean) scores, plus Monte-Carlo averaging across runs.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::epidemic::{infected_count, Compartment};
use crate::graph::{PersonId, TemporalGraph};
use crate::risk::RiskState;
use crate::scalar::Scalar;

pub const DEFAULT_ALERT_THRESHOLD: f64 = 1.5;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("region {0:?} has no members")]
    EmptyRegion(String),
    #[error("run series have mismatched shapes: {0}")]
    Shape(String),
    #[error("no run series to aggregate")]
    NoRuns,
}

/// Median infected score over median susceptible score.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MedianRatio<T> {
    Finite(T),
    /// Susceptible median is 0 while the infected median is positive.
    Infinite,
    /// No susceptible persons, or both medians are 0.
    Undefined,
}

impl<T: Scalar> MedianRatio<T> {
    pub fn finite(self) -> Option<T> {
        match self {
            MedianRatio::Finite(x) => Some(x),
            _ => None,
        }
    }

    pub fn to_csv(self) -> String {
        match self {
            MedianRatio::Finite(x) => x.to_string(),
            MedianRatio::Infinite => "inf".into(),
            MedianRatio::Undefined => String::new(),
        }
    }
}

/// Median with even-sized sets averaged over the two central values.
pub fn median<T: Scalar>(values: &mut [T]) -> Option<T> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let mid = values.len() / 2;
    Some(if values.len() % 2 == 1 { values[mid] } else { (values[mid - 1] + values[mid]) / T::lit(2.0) })
}

/// Medians of the infected and susceptible groups.
pub fn group_medians<T: Scalar>(states: &[RiskState<T>], compartments: &[Compartment]) -> (Option<T>, Option<T>) {
    let mut infected = Vec::new();
    let mut susceptible = Vec::new();
    for (s, c) in states.iter().zip(compartments) {
        match c {
            Compartment::Infected => infected.push(s.r),
            Compartment::Susceptible => susceptible.push(s.r),
        }
    }
    (median(&mut infected), median(&mut susceptible))
}

pub fn ratio_of_medians<T: Scalar>(infected: Option<T>, susceptible: Option<T>) -> MedianRatio<T> {
    match (infected, susceptible) {
        (None, _) => MedianRatio::Finite(T::zero()),
        (Some(_), None) => MedianRatio::Undefined,
        (Some(i), Some(s)) if s > T::zero() => MedianRatio::Finite(i / s),
        (Some(i), Some(_)) if i > T::zero() => MedianRatio::Infinite,
        _ => MedianRatio::Undefined,
    }
}

/// Exactly 0 when nobody is infected.
pub fn median_ratio<T: Scalar>(states: &[RiskState<T>], compartments: &[Compartment]) -> MedianRatio<T> {
    let (i, s) = group_medians(states, compartments);
    ratio_of_medians(i, s)
}

/// Fraction of persons whose score is strictly above `threshold`.
pub fn alerted_fraction<T: Scalar>(states: &[RiskState<T>], threshold: T) -> T {
    if states.is_empty() {
        return T::zero();
    }
    let alerted = states.iter().filter(|s| s.r > threshold).count();
    T::from_count(alerted) / T::from_count(states.len())
}

/// Mean score of a region's members.
pub fn region_score<T: Scalar>(states: &[RiskState<T>], members: &[PersonId]) -> Option<T> {
    if members.is_empty() {
        return None;
    }
    let sum = members.iter().fold(T::zero(), |acc, p| acc + states[p.index()].r);
    Some(sum / T::from_count(members.len()))
}

/// How persons are grouped into regions for aggregate scores.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Regions {
    /// One region per room, holding whoever is in it at the epoch.
    #[default]
    Rooms,
    /// Fixed named groups.
    Fixed(Vec<(String, Vec<PersonId>)>),
}

impl Regions {
    pub fn fixed(groups: Vec<(String, Vec<PersonId>)>) -> Result<Self, MetricsError> {
        if let Some((name, _)) = groups.iter().find(|(_, members)| members.is_empty()) {
            return Err(MetricsError::EmptyRegion(name.clone()));
        }
        Ok(Regions::Fixed(groups))
    }

    pub fn names(&self, graph: &TemporalGraph) -> Vec<String> {
        match self {
            Regions::Rooms => graph.rooms().to_vec(),
            Regions::Fixed(groups) => groups.iter().map(|(n, _)| n.clone()).collect(),
        }
    }

    /// Score per region; `None` for a room nobody occupies at `epoch`.
    pub fn scores<T: Scalar>(&self, graph: &TemporalGraph, epoch: u32, states: &[RiskState<T>]) -> Vec<Option<T>> {
        match self {
            Regions::Rooms => {
                let mut out = vec![None; graph.room_count()];
                if let Ok(snap) = graph.snapshot(epoch) {
                    for (room, members) in snap.occupied_rooms() {
                        out[room.index()] = region_score(states, members);
                    }
                }
                out
            }
            Regions::Fixed(groups) => groups.iter().map(|(_, members)| region_score(states, members)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsFrame<T> {
    pub epoch: u32,
    pub susceptible: usize,
    pub infected: usize,
    pub infected_fraction: T,
    pub median_r_infected: Option<T>,
    pub median_r_susceptible: Option<T>,
    pub median_ratio: MedianRatio<T>,
    pub alerted_fraction: T,
    pub region_scores: Vec<Option<T>>,
}

impl<T: Scalar> MetricsFrame<T> {
    pub fn capture(
        graph: &TemporalGraph,
        regions: &Regions,
        epoch: u32,
        states: &[RiskState<T>],
        compartments: &[Compartment],
        threshold: T,
    ) -> Self {
        let infected = infected_count(compartments);
        let persons = compartments.len();
        let (mi, ms) = group_medians(states, compartments);
        Self {
            epoch,
            susceptible: persons - infected,
            infected,
            infected_fraction: if persons == 0 { T::zero() } else { T::from_count(infected) / T::from_count(persons) },
            median_r_infected: mi,
            median_r_susceptible: ms,
            median_ratio: ratio_of_medians(mi, ms),
            alerted_fraction: alerted_fraction(states, threshold),
            region_scores: regions.scores(graph, epoch, states),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
struct Mean<T> {
    value: T,
    count: usize,
}

impl<T: Scalar> Mean<T> {
    // incremental form: a mean of identical values is exactly that value
    fn push(&mut self, x: T) {
        self.count += 1;
        self.value += (x - self.value) / T::from_count(self.count);
    }

    fn push_opt(&mut self, x: Option<T>) {
        if let Some(x) = x {
            self.push(x);
        }
    }

    fn get(&self) -> Option<T> {
        (self.count > 0).then_some(self.value)
    }
}

/// One epoch of a [`RunSummary`]: element-wise means over runs. Optional
/// fields average only the runs where they are defined.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryFrame<T> {
    pub epoch: u32,
    pub susceptible: T,
    pub infected: T,
    pub infected_fraction: T,
    pub median_r_infected: Option<T>,
    pub median_r_susceptible: Option<T>,
    pub median_ratio: Option<T>,
    /// Runs whose ratio was infinite or undefined and so left out of `median_ratio`.
    pub median_ratio_excluded: usize,
    pub alerted_fraction: T,
    pub region_scores: Vec<Option<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary<T> {
    pub frames: Vec<SummaryFrame<T>>,
    pub runs: usize,
    pub master_seed: u64,
}

#[derive(Debug, Clone)]
struct FrameAccumulator<T> {
    epoch: u32,
    susceptible: Mean<T>,
    infected: Mean<T>,
    infected_fraction: Mean<T>,
    median_r_infected: Mean<T>,
    median_r_susceptible: Mean<T>,
    median_ratio: Mean<T>,
    excluded: usize,
    alerted_fraction: Mean<T>,
    regions: Vec<Mean<T>>,
}

/// Streaming form of [`aggregate_runs`]; runs must be added in a fixed order
/// for bit-reproducible output.
#[derive(Debug, Clone)]
pub struct RunAccumulator<T> {
    frames: Vec<FrameAccumulator<T>>,
    runs: usize,
}

impl<T: Scalar> Default for RunAccumulator<T> {
    fn default() -> Self {
        Self { frames: Vec::new(), runs: 0 }
    }
}

impl<T: Scalar> RunAccumulator<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, series: &[MetricsFrame<T>]) -> Result<(), MetricsError> {
        if self.runs == 0 {
            self.frames = series
                .iter()
                .map(|f| FrameAccumulator {
                    epoch: f.epoch,
                    susceptible: Mean::default(),
                    infected: Mean::default(),
                    infected_fraction: Mean::default(),
                    median_r_infected: Mean::default(),
                    median_r_susceptible: Mean::default(),
                    median_ratio: Mean::default(),
                    excluded: 0,
                    alerted_fraction: Mean::default(),
                    regions: vec![Mean::default(); f.region_scores.len()],
                })
                .collect();
        }
        if series.len() != self.frames.len() {
            return Err(MetricsError::Shape(format!(
                "run {} has {} epochs, expected {}",
                self.runs,
                series.len(),
                self.frames.len()
            )));
        }
        for (acc, f) in self.frames.iter().zip(series) {
            if acc.epoch != f.epoch || acc.regions.len() != f.region_scores.len() {
                return Err(MetricsError::Shape(format!("run {} differs at epoch {}", self.runs, f.epoch)));
            }
        }
        for (acc, f) in self.frames.iter_mut().zip(series) {
            acc.susceptible.push(T::from_count(f.susceptible));
            acc.infected.push(T::from_count(f.infected));
            acc.infected_fraction.push(f.infected_fraction);
            acc.median_r_infected.push_opt(f.median_r_infected);
            acc.median_r_susceptible.push_opt(f.median_r_susceptible);
            match f.median_ratio {
                MedianRatio::Finite(x) => acc.median_ratio.push(x),
                _ => acc.excluded += 1,
            }
            acc.alerted_fraction.push(f.alerted_fraction);
            for (m, x) in acc.regions.iter_mut().zip(&f.region_scores) {
                m.push_opt(*x);
            }
        }
        self.runs += 1;
        Ok(())
    }

    pub fn finish(self, master_seed: u64) -> Result<RunSummary<T>, MetricsError> {
        if self.runs == 0 {
            return Err(MetricsError::NoRuns);
        }
        let frames = self
            .frames
            .into_iter()
            .map(|a| SummaryFrame {
                epoch: a.epoch,
                susceptible: a.susceptible.value,
                infected: a.infected.value,
                infected_fraction: a.infected_fraction.value,
                median_r_infected: a.median_r_infected.get(),
                median_r_susceptible: a.median_r_susceptible.get(),
                median_ratio: a.median_ratio.get(),
                median_ratio_excluded: a.excluded,
                alerted_fraction: a.alerted_fraction.value,
                region_scores: a.regions.iter().map(Mean::get).collect(),
            })
            .collect();
        Ok(RunSummary { frames, runs: self.runs, master_seed })
    }
}

/// Element-wise mean of equally shaped per-run series.
pub fn aggregate_runs<T: Scalar>(series: &[Vec<MetricsFrame<T>>], master_seed: u64) -> Result<RunSummary<T>, MetricsError> {
    let mut acc = RunAccumulator::new();
    for run in series {
        acc.add(run)?;
    }
    acc.finish(master_seed)
}

fn opt<T: Scalar>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

const BASE_COLUMNS: [&str; 9] = [
    "epoch",
    "susceptible",
    "infected",
    "infected_fraction",
    "median_r_infected",
    "median_r_susceptible",
    "median_ratio",
    "median_ratio_excluded",
    "alerted_fraction",
];

fn header(region_names: &[String]) -> Vec<String> {
    BASE_COLUMNS
        .iter()
        .map(|s| s.to_string())
        .chain(region_names.iter().map(|n| format!("region:{n}")))
        .collect()
}

/// One CSV row per epoch, followed by one `region:<name>` column per region.
pub fn write_summary_csv<T: Scalar, W: Write>(out: W, summary: &RunSummary<T>, region_names: &[String]) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header(region_names))?;
    for f in &summary.frames {
        let mut row = vec![
            f.epoch.to_string(),
            f.susceptible.to_string(),
            f.infected.to_string(),
            f.infected_fraction.to_string(),
            opt(f.median_r_infected),
            opt(f.median_r_susceptible),
            opt(f.median_ratio),
            f.median_ratio_excluded.to_string(),
            f.alerted_fraction.to_string(),
        ];
        row.extend(f.region_scores.iter().map(|x| opt(*x)));
        w.write_record(row)?;
    }
    w.flush()
}

/// Same columns as [`write_summary_csv`] for a single run.
pub fn write_series_csv<T: Scalar, W: Write>(out: W, series: &[MetricsFrame<T>], region_names: &[String]) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header(region_names))?;
    for f in series {
        let excluded = usize::from(f.median_ratio.finite().is_none());
        let mut row = vec![
            f.epoch.to_string(),
            f.susceptible.to_string(),
            f.infected.to_string(),
            f.infected_fraction.to_string(),
            opt(f.median_r_infected),
            opt(f.median_r_susceptible),
            f.median_ratio.to_csv(),
            excluded.to_string(),
            f.alerted_fraction.to_string(),
        ];
        row.extend(f.region_scores.iter().map(|x| opt(*x)));
        w.write_record(row)?;
    }
    w.flush()
}

/// Serializable view of a summary for manifests.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SummaryInfo {
    pub runs: usize,
    pub master_seed: u64,
    pub epochs: usize,
}

impl<T> From<&RunSummary<T>> for SummaryInfo {
    fn from(s: &RunSummary<T>) -> Self {
        Self { runs: s.runs, master_seed: s.master_seed, epochs: s.frames.len() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn st(r: f64) -> RiskState<f64> {
        RiskState { r, v: 0.5, officially_infected: false }
    }

    use Compartment::{Infected as I, Susceptible as S};

    #[test]
    fn ratio_zero_without_infections() {
        let states = vec![st(3.0), st(4.0)];
        assert_eq!(median_ratio(&states, &[S, S]), MedianRatio::Finite(0.0));
    }

    #[test]
    fn ratio_one_for_equal_scores() {
        let states = vec![st(1.3); 4];
        assert_eq!(median_ratio(&states, &[I, S, I, S]), MedianRatio::Finite(1.0));
    }

    #[test]
    fn ratio_hand_example() {
        let states = vec![st(2.0), st(4.0), st(1.0), st(1.0), st(3.0)];
        assert_eq!(median_ratio(&states, &[I, I, S, S, S]), MedianRatio::Finite(3.0));
    }

    #[test]
    fn ratio_sentinels() {
        let states = vec![st(2.0), st(0.0)];
        assert_eq!(median_ratio(&states, &[I, S]), MedianRatio::Infinite);
        assert_eq!(median_ratio(&states, &[I, I]), MedianRatio::Undefined);
    }

    #[test]
    fn alerted_examples() {
        assert_eq!(alerted_fraction(&[st(1.0); 4], 1.5), 0.0);
        assert_eq!(alerted_fraction(&[st(2.0); 4], 1.5), 1.0);
        let mixed = [st(1.0), st(1.5), st(1.6), st(2.0), st(0.2)];
        let brute = mixed.iter().filter(|s| s.r > 1.5).count() as f64 / mixed.len() as f64;
        assert_eq!(alerted_fraction(&mixed, 1.5), brute);
        assert_eq!(alerted_fraction::<f64>(&[], 1.5), 0.0);
    }

    #[test]
    fn region_examples() {
        let states = vec![st(1.0), st(2.0), st(3.0)];
        assert_eq!(region_score(&states, &[PersonId(0)]), Some(1.0));
        assert_eq!(region_score(&states, &[PersonId(0), PersonId(1), PersonId(2)]), Some(2.0));
        assert_eq!(region_score(&states, &[]), None);
        assert!(matches!(Regions::fixed(vec![("x".into(), vec![])]), Err(MetricsError::EmptyRegion(_))));
    }

    fn frame(epoch: u32, ratio: MedianRatio<f64>) -> MetricsFrame<f64> {
        MetricsFrame {
            epoch,
            susceptible: 3,
            infected: 1,
            infected_fraction: 0.25,
            median_r_infected: Some(2.0),
            median_r_susceptible: None,
            median_ratio: ratio,
            alerted_fraction: 0.5,
            region_scores: vec![Some(1.5), None],
        }
    }

    #[test]
    fn aggregate_single_run_is_identity() {
        let run = vec![frame(0, MedianRatio::Finite(1.7)), frame(1, MedianRatio::Finite(0.3))];
        let s = aggregate_runs(std::slice::from_ref(&run), 9).unwrap();
        assert_eq!(s.runs, 1);
        assert_eq!(s.master_seed, 9);
        for (f, r) in s.frames.iter().zip(&run) {
            assert_eq!(f.infected_fraction, r.infected_fraction);
            assert_eq!(f.median_ratio, r.median_ratio.finite());
            assert_eq!(f.median_r_susceptible, None);
            assert_eq!(f.region_scores, r.region_scores);
        }
    }

    #[test]
    fn aggregate_means_and_exclusions() {
        let a = vec![frame(0, MedianRatio::Finite(1.0))];
        let b = vec![frame(0, MedianRatio::Finite(3.0))];
        let c = vec![frame(0, MedianRatio::Infinite)];
        let s = aggregate_runs(&[a, b, c], 0).unwrap();
        assert_eq!(s.frames[0].median_ratio, Some(2.0));
        assert_eq!(s.frames[0].median_ratio_excluded, 1);
    }

    #[test]
    fn aggregate_shape_errors() {
        let a = vec![frame(0, MedianRatio::Finite(1.0))];
        let b = vec![frame(0, MedianRatio::Finite(1.0)), frame(1, MedianRatio::Finite(1.0))];
        assert!(matches!(aggregate_runs(&[a.clone(), b], 0), Err(MetricsError::Shape(_))));
        assert!(matches!(aggregate_runs::<f64>(&[], 0), Err(MetricsError::NoRuns)));
        let shifted = vec![frame(5, MedianRatio::Finite(1.0))];
        assert!(matches!(aggregate_runs(&[a, shifted], 0), Err(MetricsError::Shape(_))));
    }

    #[test]
    fn summary_csv_layout() {
        let s = aggregate_runs(&[vec![frame(0, MedianRatio::Finite(1.0))]], 0).unwrap();
        let mut buf = Vec::new();
        write_summary_csv(&mut buf, &s, &["r1".into(), "r2".into()]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "epoch,susceptible,infected,infected_fraction,median_r_infected,median_r_susceptible,\
             median_ratio,median_ratio_excluded,alerted_fraction,region:r1,region:r2\n\
             0,3,1,0.25,2,,1,0,0.5,1.5,\n"
        );
    }
}
