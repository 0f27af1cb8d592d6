//! Interval and timestamp arithmetic.
//!
//! All times are `f64` seconds from the start of the video. Comparisons that
//! decide containment, touching or tie-breaking use [`TIME_EPS`].

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance for time comparisons, in seconds.
pub const TIME_EPS: f64 = 1e-9;

fn check_time(t: f64, what: &str) -> Result<()> {
    if t.is_finite() && t >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "{what} must be finite and >= 0, got {t}"
        )))
    }
}

/// `n` instants over `[0, duration]`, endpoints inclusive.
pub fn uniform_sample(duration: f64, n: usize) -> Result<Vec<f64>> {
    check_time(duration, "duration")?;
    uniform_sample_in(0.0, duration, n)
}

/// `n` instants over `[start, end]`, endpoints inclusive. A single sample sits
/// at `start`.
pub fn uniform_sample_in(start: f64, end: f64, n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::invalid("sample count must be >= 1"));
    }
    check_time(start, "start")?;
    check_time(end, "end")?;
    if end < start {
        return Err(Error::invalid(format!("empty range [{start}, {end}]")));
    }
    if n == 1 {
        return Ok(vec![start]);
    }
    let span = end - start;
    let last = (n - 1) as f64;
    let mut out: Vec<f64> = (0..n)
        .map(|i| (start + span * i as f64 / last).min(end))
        .collect();
    out[n - 1] = end;
    Ok(out)
}

/// Round half up to a whole second.
pub fn round_half_up(t: f64) -> u64 {
    (t + 0.5).floor() as u64
}

fn digit_count(mut v: u64) -> usize {
    let mut d = 1;
    while v >= 10 {
        v /= 10;
        d += 1;
    }
    d
}

/// Timestamp pad width for a video: the digit count of its rounded duration.
/// Every frame of that video is rendered with this width.
pub fn default_pad_width(duration: f64) -> usize {
    digit_count(round_half_up(duration.max(0.0)))
}

/// A whole-second timestamp and its zero-padded text form.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuantizedTimestamp {
    pub value: u64,
    pub text: String,
}

impl QuantizedTimestamp {
    pub fn width(&self) -> usize {
        self.text.len()
    }
}

pub fn quantize(t: f64, pad_width: usize) -> Result<QuantizedTimestamp> {
    check_time(t, "timestamp")?;
    if pad_width == 0 {
        return Err(Error::invalid("pad width must be >= 1"));
    }
    let value = round_half_up(t);
    if digit_count(value) > pad_width {
        return Err(Error::invalid(format!(
            "timestamp {value} does not fit in {pad_width} digit(s)"
        )));
    }
    Ok(QuantizedTimestamp {
        value,
        text: format!("{value:0pad_width$}"),
    })
}

/// Closed interval `[start, end]` in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TemporalWindow {
    pub start: f64,
    pub end: f64,
}

impl TemporalWindow {
    pub fn new(start: f64, end: f64) -> Result<Self> {
        check_time(start, "window start")?;
        check_time(end, "window end")?;
        if start > end {
            return Err(Error::invalid(format!("window start {start} > end {end}")));
        }
        Ok(TemporalWindow { start, end })
    }

    pub fn len(&self) -> f64 {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.len() <= TIME_EPS
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.start + self.end)
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.start - TIME_EPS && t <= self.end + TIME_EPS
    }

    /// Closed-interval intersection; `None` when disjoint.
    pub fn intersect(&self, other: &TemporalWindow) -> Option<TemporalWindow> {
        let start = self.start.max(other.start);
        let end = self.end.min(other.end);
        (start <= end + TIME_EPS).then(|| TemporalWindow {
            start,
            end: end.max(start),
        })
    }

    pub fn overlap(&self, other: &TemporalWindow) -> f64 {
        (self.end.min(other.end) - self.start.max(other.start)).max(0.0)
    }

    fn approx_eq(&self, other: &TemporalWindow) -> bool {
        (self.start - other.start).abs() <= TIME_EPS && (self.end - other.end).abs() <= TIME_EPS
    }
}

/// Intersection over union of two windows.
///
/// Two identical zero-length windows score 1; any other pair whose union has
/// no measure scores 0.
pub fn iou(a: &TemporalWindow, b: &TemporalWindow) -> f64 {
    let inter = a.overlap(b);
    let union = a.len() + b.len() - inter;
    if union <= TIME_EPS {
        return if a.approx_eq(b) { 1.0 } else { 0.0 };
    }
    (inter / union).clamp(0.0, 1.0)
}

/// Best pairwise IoU between two window sets (0 when either is empty).
pub fn best_iou(a: &WindowSet, b: &WindowSet) -> f64 {
    a.iter()
        .flat_map(|x| b.iter().map(move |y| iou(x, y)))
        .fold(0.0, f64::max)
}

/// An ordered collection of windows. After [`merge`] it is sorted, and no two
/// members overlap or touch.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WindowSet {
    windows: Vec<TemporalWindow>,
    normalized: bool,
}

impl WindowSet {
    pub fn new(windows: Vec<TemporalWindow>) -> Self {
        WindowSet {
            windows,
            normalized: false,
        }
    }

    pub fn empty() -> Self {
        WindowSet {
            windows: Vec::new(),
            normalized: true,
        }
    }

    /// Build from `(start, end)` pairs, validating each.
    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        let windows = pairs
            .iter()
            .map(|&(s, e)| TemporalWindow::new(s, e))
            .collect::<Result<Vec<_>>>()?;
        Ok(WindowSet::new(windows))
    }

    pub fn windows(&self) -> &[TemporalWindow] {
        &self.windows
    }

    pub fn iter(&self) -> std::slice::Iter<'_, TemporalWindow> {
        self.windows.iter()
    }

    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn pairs(&self) -> Vec<(f64, f64)> {
        self.windows.iter().map(|w| (w.start, w.end)).collect()
    }

    /// Total covered measure. Exact only for normalized sets.
    pub fn measure(&self) -> f64 {
        self.windows.iter().map(TemporalWindow::len).sum()
    }

    pub fn contains(&self, t: f64) -> bool {
        self.windows.iter().any(|w| w.contains(t))
    }

    /// Members clipped to `range`; windows outside it are dropped.
    pub fn restrict(&self, range: &TemporalWindow) -> WindowSet {
        merge(&WindowSet::new(
            self.windows
                .iter()
                .filter_map(|w| {
                    // Touching at a single instant is not an overlap of a positive window.
                    w.intersect(range)
                        .filter(|x| x.len() > TIME_EPS || w.len() <= TIME_EPS)
                })
                .collect(),
        ))
    }

    /// Bracketed whole-second form, e.g. `[[73, 89]]`.
    pub fn to_bracketed(&self) -> String {
        let body: Vec<String> = self
            .windows
            .iter()
            .map(|w| format!("[{}, {}]", round_half_up(w.start), round_half_up(w.end)))
            .collect();
        format!("[{}]", body.join(", "))
    }

    /// Bracketed form with full-precision endpoints (`100`, `62.5`, ...).
    pub fn to_bracketed_exact(&self) -> String {
        let body: Vec<String> = self
            .windows
            .iter()
            .map(|w| format!("[{}, {}]", w.start, w.end))
            .collect();
        format!("[{}]", body.join(", "))
    }
}

impl fmt::Display for WindowSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_bracketed())
    }
}

impl<'a> IntoIterator for &'a WindowSet {
    type Item = &'a TemporalWindow;
    type IntoIter = std::slice::Iter<'a, TemporalWindow>;

    fn into_iter(self) -> Self::IntoIter {
        self.windows.iter()
    }
}

/// Sort and coalesce: overlapping or touching windows become one.
pub fn merge(ws: &WindowSet) -> WindowSet {
    let mut sorted = ws.windows.clone();
    sorted.sort_by(|a, b| {
        a.start
            .partial_cmp(&b.start)
            .unwrap_or(Ordering::Equal)
            .then(a.end.partial_cmp(&b.end).unwrap_or(Ordering::Equal))
    });
    let mut out: Vec<TemporalWindow> = Vec::with_capacity(sorted.len());
    for w in sorted {
        match out.last_mut() {
            Some(last) if w.start <= last.end + TIME_EPS => last.end = last.end.max(w.end),
            _ => out.push(w),
        }
    }
    WindowSet {
        windows: out,
        normalized: true,
    }
}

/// Video duration plus the instants of its decoded frames.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoTimeline {
    duration: f64,
    frame_times: Vec<f64>,
}

impl VideoTimeline {
    pub fn new(duration: f64, frame_times: Vec<f64>) -> Result<Self> {
        check_time(duration, "duration")?;
        for (i, &t) in frame_times.iter().enumerate() {
            check_time(t, "frame time")?;
            if t > duration + TIME_EPS {
                return Err(Error::invalid(format!(
                    "frame time {t} exceeds duration {duration}"
                )));
            }
            if i > 0 && t <= frame_times[i - 1] {
                return Err(Error::invalid("frame times must be strictly increasing"));
            }
        }
        Ok(VideoTimeline {
            duration,
            frame_times,
        })
    }

    /// A timeline with no decoded frames; enough for searching, not snapping.
    pub fn from_duration(duration: f64) -> Result<Self> {
        VideoTimeline::new(duration, Vec::new())
    }

    /// `n` frames spread uniformly over the whole video.
    pub fn uniform(duration: f64, n: usize) -> Result<Self> {
        let times = uniform_sample(duration, n)?;
        VideoTimeline::new(duration, times)
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn frame_times(&self) -> &[f64] {
        &self.frame_times
    }

    pub fn full_window(&self) -> TemporalWindow {
        TemporalWindow {
            start: 0.0,
            end: self.duration,
        }
    }

    /// Index of the frame nearest to `t`; exact ties go to the later frame.
    pub fn nearest_frame(&self, t: f64) -> Option<usize> {
        let ft = &self.frame_times;
        if ft.is_empty() {
            return None;
        }
        let i = ft.partition_point(|&x| x < t);
        if i == 0 {
            return Some(0);
        }
        if i == ft.len() {
            return Some(ft.len() - 1);
        }
        let before = t - ft[i - 1];
        let after = ft[i] - t;
        Some(if after <= before + TIME_EPS { i } else { i - 1 })
    }
}

/// Move both endpoints onto the nearest decoded frame.
pub fn snap_to_frames(w: &TemporalWindow, timeline: &VideoTimeline) -> Result<TemporalWindow> {
    let ft = timeline.frame_times();
    let (Some(s), Some(e)) = (
        timeline.nearest_frame(w.start),
        timeline.nearest_frame(w.end),
    ) else {
        return Err(Error::invalid("timeline has no frame times to snap to"));
    };
    // nearest_frame is monotone in t, so s <= e.
    Ok(TemporalWindow {
        start: ft[s],
        end: ft[e],
    })
}

/// Snap every annotated window to decoded frames, then merge the windows that
/// collide after snapping.
pub fn calibrate_annotations(ws: &WindowSet, timeline: &VideoTimeline) -> Result<WindowSet> {
    let snapped = ws
        .iter()
        .map(|w| snap_to_frames(w, timeline))
        .collect::<Result<Vec<_>>>()?;
    Ok(merge(&WindowSet::new(snapped)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Begin,
    Mid,
    End,
}

impl Branch {
    pub const ALL: [Branch; 3] = [Branch::Begin, Branch::Mid, Branch::End];

    pub fn as_str(self) -> &'static str {
        match self {
            Branch::Begin => "begin",
            Branch::Mid => "mid",
            Branch::End => "end",
        }
    }
}

/// A sub-event of the video under examination, with its position in the
/// split tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentInterval {
    pub start: f64,
    pub end: f64,
    pub depth: usize,
    pub lineage: Vec<Branch>,
}

impl SegmentInterval {
    pub fn root(duration: f64) -> Result<Self> {
        check_time(duration, "duration")?;
        if duration <= 0.0 {
            return Err(Error::invalid("video duration must be > 0"));
        }
        Ok(SegmentInterval {
            start: 0.0,
            end: duration,
            depth: 0,
            lineage: Vec::new(),
        })
    }

    pub fn len(&self) -> f64 {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.len() <= 0.0
    }

    pub fn window(&self) -> TemporalWindow {
        TemporalWindow {
            start: self.start,
            end: self.end,
        }
    }

    fn child(&self, branch: Branch, start: f64, end: f64) -> SegmentInterval {
        let mut lineage = self.lineage.clone();
        lineage.push(branch);
        SegmentInterval {
            start,
            end,
            depth: self.depth + 1,
            lineage,
        }
    }

    /// Split into begin/mid/end children, each `ratio` times as long as the
    /// parent. `begin` shares the parent's start, `end` its end, and `mid` is
    /// centred on the parent's midpoint.
    pub fn split(&self, ratio: f64) -> Result<[SegmentInterval; 3]> {
        if !(ratio > 0.0 && ratio <= 1.0) {
            return Err(Error::invalid(format!("split ratio {ratio} not in (0, 1]")));
        }
        let len = ratio * self.len();
        let mid = 0.5 * (self.start + self.end);
        let half = 0.5 * len;
        Ok([
            self.child(Branch::Begin, self.start, (self.start + len).min(self.end)),
            self.child(
                Branch::Mid,
                (mid - half).max(self.start),
                (mid + half).min(self.end),
            ),
            self.child(Branch::End, (self.end - len).max(self.start), self.end),
        ])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn w(s: f64, e: f64) -> TemporalWindow {
        TemporalWindow::new(s, e).unwrap()
    }

    fn appendix_timeline() -> VideoTimeline {
        let mut times: Vec<f64> = (0..=67).step_by(3).map(f64::from).collect();
        times.extend([70.0, 73.0, 77.0, 80.0, 83.0, 86.0, 89.0]);
        VideoTimeline::new(89.0, times).unwrap()
    }

    #[test]
    fn uniform_sample_examples() {
        let t = uniform_sample(10.0, 4).unwrap();
        let rounded: Vec<f64> = t.iter().map(|x| (x * 100.0).round() / 100.0).collect();
        assert_eq!(rounded, vec![0.0, 3.33, 6.67, 10.0]);
        assert_eq!(uniform_sample(10.0, 1).unwrap(), vec![0.0]);

        let t = uniform_sample(89.0, 30).unwrap();
        assert_eq!(t.len(), 30);
        assert_eq!(t[0], 0.0);
        assert!((t[1] - 3.068_965_517).abs() < 1e-8);
        assert!((t[2] - 6.137_931_034).abs() < 1e-8);
        assert_eq!(t[29], 89.0);
    }

    #[test]
    fn uniform_sample_rejects_zero() {
        assert!(matches!(
            uniform_sample(10.0, 0),
            Err(Error::InvalidArgument(_))
        ));
        assert!(uniform_sample(-1.0, 3).is_err());
    }

    #[test]
    fn quantize_examples() {
        assert_eq!(quantize(6.67, 2).unwrap().text, "07");
        assert_eq!(quantize(0.0, 2).unwrap().text, "00");
        assert_eq!(quantize(3.33, 2).unwrap().text, "03");
        assert_eq!(quantize(2.5, 1).unwrap().value, 3);
        assert!(quantize(99.6, 2).is_err());
        assert!(quantize(1.0, 0).is_err());
    }

    #[test]
    fn pad_width_follows_duration() {
        assert_eq!(default_pad_width(0.0), 1);
        assert_eq!(default_pad_width(9.4), 1);
        assert_eq!(default_pad_width(9.5), 2);
        assert_eq!(default_pad_width(89.0), 2);
        assert_eq!(default_pad_width(1200.0), 4);
    }

    #[test]
    fn snap_examples() {
        let tl = appendix_timeline();
        assert_eq!(snap_to_frames(&w(72.0, 82.0), &tl).unwrap(), w(73.0, 83.0));
        assert_eq!(snap_to_frames(&w(84.0, 89.0), &tl).unwrap(), w(83.0, 89.0));
        assert_eq!(snap_to_frames(&w(73.0, 73.0), &tl).unwrap(), w(73.0, 73.0));
    }

    #[test]
    fn snap_ties_go_later() {
        let tl = VideoTimeline::new(10.0, vec![0.0, 2.0, 4.0]).unwrap();
        assert_eq!(snap_to_frames(&w(1.0, 3.0), &tl).unwrap(), w(2.0, 4.0));
    }

    #[test]
    fn snap_needs_frames() {
        let tl = VideoTimeline::from_duration(10.0).unwrap();
        assert!(snap_to_frames(&w(1.0, 3.0), &tl).is_err());
    }

    #[test]
    fn timeline_validation() {
        assert!(VideoTimeline::new(10.0, vec![0.0, 0.0]).is_err());
        assert!(VideoTimeline::new(10.0, vec![0.0, 11.0]).is_err());
    }

    #[test]
    fn merge_examples() {
        let ws = WindowSet::from_pairs(&[(73.0, 83.0), (83.0, 89.0)]).unwrap();
        assert_eq!(merge(&ws).pairs(), vec![(73.0, 89.0)]);
        let m = merge(&WindowSet::new(vec![]));
        assert!(m.is_empty() && m.is_normalized());
    }

    #[test]
    fn calibrate_worked_example() {
        let ws = WindowSet::from_pairs(&[(72.0, 82.0), (84.0, 89.0)]).unwrap();
        let out = calibrate_annotations(&ws, &appendix_timeline()).unwrap();
        assert_eq!(out.pairs(), vec![(73.0, 89.0)]);
        assert_eq!(out.to_bracketed(), "[[73, 89]]");
    }

    #[test]
    fn calibrate_fixed_point() {
        let ws = merge(&WindowSet::from_pairs(&[(3.0, 9.0), (30.0, 42.0)]).unwrap());
        assert_eq!(
            calibrate_annotations(&ws, &appendix_timeline()).unwrap(),
            ws
        );
    }

    #[test]
    fn iou_examples() {
        assert_eq!(iou(&w(0.0, 10.0), &w(0.0, 10.0)), 1.0);
        assert_eq!(iou(&w(0.0, 10.0), &w(20.0, 30.0)), 0.0);
        assert!((iou(&w(0.0, 10.0), &w(5.0, 15.0)) - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(iou(&w(4.0, 4.0), &w(4.0, 4.0)), 1.0);
        assert_eq!(iou(&w(4.0, 4.0), &w(5.0, 5.0)), 0.0);
    }

    #[test]
    fn split_examples() {
        let root = SegmentInterval::root(120.0).unwrap();
        let [b, m, e] = root.split(0.5).unwrap();
        assert_eq!((b.start, b.end), (0.0, 60.0));
        assert_eq!((m.start, m.end), (30.0, 90.0));
        assert_eq!((e.start, e.end), (60.0, 120.0));
        assert_eq!(m.depth, 1);
        assert_eq!(m.lineage, vec![Branch::Mid]);

        let [b, m, e] = root.split(1.0 / 3.0).unwrap();
        assert_eq!((b.start, b.end), (0.0, 40.0));
        assert_eq!((m.start, m.end), (40.0, 80.0));
        assert_eq!((e.start, e.end), (80.0, 120.0));

        let big = SegmentInterval::root(1200.0).unwrap();
        for child in big.split(0.5).unwrap() {
            for grandchild in child.split(0.5).unwrap() {
                assert_eq!(grandchild.len(), 300.0);
                assert_eq!(grandchild.depth, 2);
                assert_eq!(grandchild.lineage.len(), 2);
            }
        }
        assert!(root.split(0.0).is_err());
        assert!(root.split(1.5).is_err());
    }

    #[test]
    fn bracketed_serialization() {
        let ws = WindowSet::from_pairs(&[(72.0, 82.0), (84.0, 89.0)]).unwrap();
        assert_eq!(ws.to_bracketed(), "[[72, 82], [84, 89]]");
        let ws = WindowSet::from_pairs(&[(62.5, 100.0)]).unwrap();
        assert_eq!(ws.to_bracketed_exact(), "[[62.5, 100]]");
        assert_eq!(WindowSet::empty().to_bracketed(), "[]");
    }

    /// Measure of a union of integer windows on [0, 100] by marking a 0.5 s grid.
    fn grid_union_measure(pairs: &[(u32, u32)]) -> f64 {
        let mut cells = [false; 200];
        for &(s, e) in pairs {
            for (c, cell) in cells.iter_mut().enumerate() {
                let lo = c as f64 * 0.5;
                if lo >= s as f64 && lo + 0.5 <= e as f64 {
                    *cell = true;
                }
            }
        }
        cells.iter().filter(|&&c| c).count() as f64 * 0.5
    }

    fn int_windows() -> impl Strategy<Value = Vec<(u32, u32)>> {
        prop::collection::vec((0u32..=100, 0u32..=100), 0..50)
            .prop_map(|v| v.into_iter().map(|(a, b)| (a.min(b), a.max(b))).collect())
    }

    proptest! {
        #[test]
        fn quantize_within_half_second(t in 0.0f64..99_999.0) {
            let q = quantize(t, 5).unwrap();
            prop_assert!((q.value as f64 - t).abs() <= 0.5);
            prop_assert_eq!(q.text.len(), 5);
            prop_assert_eq!(q.text.parse::<u64>().unwrap(), q.value);
        }

        #[test]
        fn merge_matches_grid_union(pairs in int_windows()) {
            let ws = WindowSet::from_pairs(
                &pairs.iter().map(|&(s, e)| (s as f64, e as f64)).collect::<Vec<_>>(),
            ).unwrap();
            let m = merge(&ws);
            prop_assert!((m.measure() - grid_union_measure(&pairs)).abs() < 1e-9);
            for pair in m.windows().windows(2) {
                prop_assert!(pair[0].end < pair[1].start);
            }
            prop_assert_eq!(merge(&m), m.clone());
            let mut reversed = ws.windows().to_vec();
            reversed.reverse();
            prop_assert_eq!(merge(&WindowSet::new(reversed)), m);
        }

        #[test]
        fn calibration_is_snap_then_union(pairs in int_windows()) {
            let tl = appendix_timeline();
            let clipped: Vec<(u32, u32)> = pairs.iter().map(|&(s, e)| (s.min(89), e.min(89))).collect();
            let ws = WindowSet::from_pairs(
                &clipped.iter().map(|&(s, e)| (s as f64, e as f64)).collect::<Vec<_>>(),
            ).unwrap();
            let out = calibrate_annotations(&ws, &tl).unwrap();
            // Oracle: snap each endpoint by brute-force distance scan, then grid union.
            let snap = |t: u32| -> u32 {
                let mut best = tl.frame_times()[0];
                for &f in tl.frame_times() {
                    if (f - t as f64).abs() <= (best - t as f64).abs() {
                        best = f;
                    }
                }
                best as u32
            };
            let snapped: Vec<(u32, u32)> = clipped.iter().map(|&(s, e)| (snap(s), snap(e))).collect();
            prop_assert!((out.measure() - grid_union_measure(&snapped)).abs() < 1e-9);
            for win in out.iter() {
                prop_assert!(tl.frame_times().contains(&win.start));
                prop_assert!(tl.frame_times().contains(&win.end));
            }
        }

        #[test]
        fn snap_is_nearest(t in 0.0f64..89.0) {
            let tl = appendix_timeline();
            let i = tl.nearest_frame(t).unwrap();
            let d = (tl.frame_times()[i] - t).abs();
            for &f in tl.frame_times() {
                prop_assert!(d <= (f - t).abs() + 1e-12);
            }
        }

        #[test]
        fn iou_symmetric_bounded(a in 0.0f64..100.0, b in 0.0f64..100.0, c in 0.0f64..100.0, d in 0.0f64..100.0) {
            let x = w(a.min(b), a.max(b));
            let y = w(c.min(d), c.max(d));
            let v = iou(&x, &y);
            prop_assert!((0.0..=1.0).contains(&v));
            prop_assert_eq!(v, iou(&y, &x));
            if x.len() > 0.0 {
                prop_assert_eq!(iou(&x, &x), 1.0);
            }
        }

        #[test]
        fn split_children_cover_parent(s in 0.0f64..500.0, len in 1.0f64..2000.0, ratio in (1.0f64/3.0)..=1.0) {
            let seg = SegmentInterval { start: s, end: s + len, depth: 0, lineage: vec![] };
            let kids = seg.split(ratio).unwrap();
            let union = merge(&WindowSet::new(kids.iter().map(|k| k.window()).collect()));
            prop_assert_eq!(union.len(), 1);
            prop_assert!((union.windows()[0].start - seg.start).abs() < 1e-9);
            prop_assert!((union.windows()[0].end - seg.end).abs() < 1e-9);
            for k in &kids {
                prop_assert!((k.len() - ratio * len).abs() < 1e-6);
            }
        }
    }
}
