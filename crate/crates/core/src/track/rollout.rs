use std::collections::BTreeSet;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{BeamTracker, Result, TrackError, TrackerModality};
use crate::dataset::{contiguous_runs, SensingSample};

pub const ROLLOUT_HEADER: [&str; 6] = [
    "step",
    "true_beam",
    "pred_top1",
    "pred_top2",
    "pred_top3",
    "input_provenance",
];

/// Steps (1-based, inclusive) at which beam training supplies the true beam.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RolloutSchedule {
    pub horizon: usize,
    pub window: usize,
    gt_steps: BTreeSet<usize>,
}

impl RolloutSchedule {
    pub fn new(horizon: usize, window: usize, steps: impl IntoIterator<Item = usize>) -> Result<Self> {
        let gt_steps: BTreeSet<usize> = steps.into_iter().collect();
        if horizon == 0 || window == 0 {
            return Err(TrackError::Config("rollout horizon and window must be positive".into()));
        }
        if let Some(&s) = gt_steps.iter().find(|&&s| s == 0 || s > horizon) {
            return Err(TrackError::Config(format!("step {s} outside 1..={horizon}")));
        }
        if !(1..=window.min(horizon)).all(|s| gt_steps.contains(&s)) {
            return Err(TrackError::Config(format!(
                "steps 1..={window} must be ground truth"
            )));
        }
        Ok(Self {
            horizon,
            window,
            gt_steps,
        })
    }

    /// Parses inclusive ranges such as `"1-8"` or single steps such as `"12"`.
    pub fn parse<S: AsRef<str>>(horizon: usize, window: usize, ranges: &[S]) -> Result<Self> {
        let mut steps = Vec::new();
        for r in ranges {
            let r = r.as_ref().trim();
            let num = |s: &str| {
                s.trim()
                    .parse::<usize>()
                    .map_err(|_| TrackError::Config(format!("bad step range {r:?}")))
            };
            let (lo, hi) = match r.split_once('-') {
                Some((a, b)) => (num(a)?, num(b)?),
                None => (num(r)?, num(r)?),
            };
            if lo > hi {
                return Err(TrackError::Config(format!("empty step range {r:?}")));
            }
            steps.extend(lo..=hi);
        }
        Self::new(horizon, window, steps)
    }

    pub fn initial_only(horizon: usize, window: usize) -> Self {
        Self::new(horizon, window, 1..=window).expect("valid by construction")
    }

    pub fn saturated(horizon: usize, window: usize) -> Self {
        Self::new(horizon, window, 1..=horizon).expect("valid by construction")
    }

    /// Training at 1-8, 13-20 and 33-40 over 50 steps.
    pub fn intermittent() -> Self {
        Self::new(50, 8, (1..=8).chain(13..=20).chain(33..=40)).expect("valid by construction")
    }

    pub fn is_ground_truth(&self, step: usize) -> bool {
        self.gt_steps.contains(&step)
    }

    pub fn gt_steps(&self) -> impl Iterator<Item = usize> + '_ {
        self.gt_steps.iter().copied()
    }

    pub fn beam_training_steps(&self) -> usize {
        self.gt_steps.len()
    }

    pub fn beam_training_pct(&self) -> f64 {
        100.0 * self.gt_steps.len() as f64 / self.horizon as f64
    }

    /// Samples a segment must hold: the pre-history, the horizon and the
    /// final target.
    pub fn segment_len(&self) -> usize {
        self.horizon + self.window
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    GroundTruth,
    Predicted,
    Sensed,
}

impl Provenance {
    pub fn code(self) -> char {
        match self {
            Provenance::GroundTruth => 'G',
            Provenance::Predicted => 'P',
            Provenance::Sensed => 'S',
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RolloutStep {
    pub step: usize,
    pub true_beam: usize,
    pub ranking: Vec<usize>,
    /// Oldest first.
    pub inputs: Vec<Provenance>,
}

impl RolloutStep {
    pub fn provenance_string(&self) -> String {
        self.inputs.iter().map(|p| p.code()).collect()
    }

    pub fn hit(&self, k: usize) -> bool {
        self.ranking[..k.min(self.ranking.len())].contains(&self.true_beam)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RolloutTrace {
    pub flight_id: usize,
    pub t_start: usize,
    pub steps: Vec<RolloutStep>,
}

/// Disjoint runs of `len` consecutive samples, never straddling a gap.
pub fn rollout_segments(samples: &[SensingSample], len: usize) -> Vec<&[SensingSample]> {
    if len == 0 {
        return Vec::new();
    }
    contiguous_runs(samples)
        .into_iter()
        .flat_map(|run| {
            let slice = &samples[run];
            slice.chunks_exact(len).collect::<Vec<_>>()
        })
        .collect()
}

fn check_segment(seg: &[SensingSample], need: usize) -> Result<()> {
    if seg.len() < need {
        return Err(TrackError::Rejected(format!(
            "segment of {} samples, need {need}",
            seg.len()
        )));
    }
    Ok(())
}

/// Beam-only rollout over many segments at once. Step `s` reads the beams at
/// steps `s-window+1..=s` and predicts step `s+1`; a step outside the
/// schedule holds the top-1 prediction made one step earlier.
pub fn recursive_rollout_batch(
    tracker: &BeamTracker,
    segments: &[&[SensingSample]],
    schedule: &RolloutSchedule,
) -> Result<Vec<RolloutTrace>> {
    if tracker.modality() != TrackerModality::BeamOnly {
        return Err(TrackError::Rejected(format!(
            "recursive rollout needs the beam-only tracker, got {}",
            tracker.modality().name()
        )));
    }
    if schedule.window != tracker.config.window {
        return Err(TrackError::Rejected("schedule window differs from the tracker's".into()));
    }
    let w = schedule.window;
    for seg in segments {
        check_segment(seg, schedule.segment_len())?;
    }
    // Index `i` of a segment holds step `i + 2 - w`; steps up to 0 are history.
    let mut beams: Vec<Vec<usize>> = segments.iter().map(|s| s[..w - 1].iter().map(|x| x.label).collect()).collect();
    let mut prov: Vec<Provenance> = vec![Provenance::GroundTruth; w - 1];
    let mut last_top1 = vec![0usize; segments.len()];
    let mut traces: Vec<RolloutTrace> = segments
        .iter()
        .map(|s| RolloutTrace {
            flight_id: s[0].flight_id,
            t_start: s[0].t,
            steps: Vec::with_capacity(schedule.horizon),
        })
        .collect();

    for step in 1..=schedule.horizon {
        let idx = step + w - 2;
        let gt = schedule.is_ground_truth(step);
        for (k, seg) in segments.iter().enumerate() {
            beams[k].push(if gt { seg[idx].label } else { last_top1[k] });
        }
        prov.push(if gt { Provenance::GroundTruth } else { Provenance::Predicted });

        let lo = idx + 1 - w;
        let windows: Vec<Vec<Vec<f64>>> = segments
            .iter()
            .enumerate()
            .map(|(k, seg)| {
                (lo..=idx)
                    .map(|i| tracker.inputs.step(&seg[i], beams[k][i]).expect("beam inputs always exist"))
                    .collect()
            })
            .collect();
        let refs: Vec<&Vec<Vec<f64>>> = windows.iter().collect();
        let outputs = tracker.predict_batch(&refs)?;
        for (k, out) in outputs.into_iter().enumerate() {
            let ranking = out.into_iter().next().expect("at least one head").ranking;
            last_top1[k] = ranking[0];
            traces[k].steps.push(RolloutStep {
                step,
                true_beam: segments[k][idx + 1].label,
                ranking,
                inputs: prov[lo..=idx].to_vec(),
            });
        }
    }
    Ok(traces)
}

pub fn recursive_rollout(
    tracker: &BeamTracker,
    segment: &[SensingSample],
    schedule: &RolloutSchedule,
) -> Result<RolloutTrace> {
    Ok(recursive_rollout_batch(tracker, &[segment], schedule)?.remove(0))
}

/// Rollout with every window read from the sensed data, so nothing feeds
/// back. For the beam-only tracker this equals the saturated schedule.
pub fn sensed_rollout_batch(
    tracker: &BeamTracker,
    segments: &[&[SensingSample]],
    horizon: usize,
) -> Result<Vec<RolloutTrace>> {
    let w = tracker.config.window;
    let mut windows = Vec::with_capacity(segments.len() * horizon);
    for seg in segments {
        check_segment(seg, horizon + w)?;
        for step in 1..=horizon {
            let idx = step + w - 2;
            let win: Option<Vec<Vec<f64>>> = seg[idx + 1 - w..=idx]
                .iter()
                .map(|s| tracker.inputs.step(s, s.label))
                .collect();
            windows.push(win.ok_or_else(|| {
                TrackError::Rejected(format!(
                    "segment (flight {}, t {}) has an unusable frame",
                    seg[0].flight_id, seg[0].t
                ))
            })?);
        }
    }
    let refs: Vec<&Vec<Vec<f64>>> = windows.iter().collect();
    let mut outputs = tracker.predict_batch(&refs)?.into_iter();
    let code = if tracker.modality() == TrackerModality::BeamOnly {
        Provenance::GroundTruth
    } else {
        Provenance::Sensed
    };
    Ok(segments
        .iter()
        .map(|seg| RolloutTrace {
            flight_id: seg[0].flight_id,
            t_start: seg[0].t,
            steps: (1..=horizon)
                .map(|step| RolloutStep {
                    step,
                    true_beam: seg[step + w - 1].label,
                    ranking: outputs.next().expect("one output per window").swap_remove(0).ranking,
                    inputs: vec![code; w],
                })
                .collect(),
        })
        .collect())
}

pub fn sensed_rollout(tracker: &BeamTracker, segment: &[SensingSample], horizon: usize) -> Result<RolloutTrace> {
    Ok(sensed_rollout_batch(tracker, &[segment], horizon)?.remove(0))
}

/// Top-k accuracy (%) at each step across traces.
pub fn per_step_accuracy(traces: &[RolloutTrace], k: usize) -> Vec<f64> {
    let Some(first) = traces.first() else {
        return Vec::new();
    };
    (0..first.steps.len())
        .map(|i| {
            let hits = traces.iter().filter(|t| t.steps[i].hit(k)).count();
            100.0 * hits as f64 / traces.len() as f64
        })
        .collect()
}

pub fn write_rollout_csv<W: Write>(trace: &RolloutTrace, out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(ROLLOUT_HEADER)?;
    for s in &trace.steps {
        let top = |i: usize| s.ranking.get(i).map_or(String::new(), usize::to_string);
        w.write_record([
            s.step.to_string(),
            s.true_beam.to_string(),
            top(0),
            top(1),
            top(2),
            s.provenance_string(),
        ])?;
    }
    w.flush()
}
