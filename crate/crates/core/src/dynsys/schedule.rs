use alloc::vec::Vec;

use crate::error::{Error, Result};

/// One piece of a [`ModeSchedule`]; active from `start` until the next start.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment<M> {
    pub start: f64,
    pub mode_id: u32,
    pub mode: M,
}

/// Piecewise-constant sequence of operating modes over clock time.
///
/// Lookup is right-continuous: at a switch time the later segment is
/// active. Times before the first start resolve to the first segment.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSchedule<M> {
    segments: Vec<Segment<M>>,
}

impl<M> ModeSchedule<M> {
    pub fn new(segments: Vec<Segment<M>>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::InvalidArgument(
                "schedule needs at least one segment",
            ));
        }
        for w in segments.windows(2) {
            if !(w[1].start > w[0].start) || !w[1].start.is_finite() {
                return Err(Error::InvalidArgument(
                    "segment start times must be finite and strictly increasing",
                ));
            }
        }
        if segments[0].start.is_nan() {
            return Err(Error::InvalidArgument("segment start is NaN"));
        }
        Ok(Self { segments })
    }

    /// A single mode that is active for all time.
    pub fn constant(mode: M) -> Self {
        Self::constant_with_id(0, mode)
    }

    pub fn constant_with_id(mode_id: u32, mode: M) -> Self {
        Self {
            segments: alloc::vec![Segment {
                start: f64::NEG_INFINITY,
                mode_id,
                mode
            }],
        }
    }

    pub fn segments(&self) -> &[Segment<M>] {
        &self.segments
    }

    pub fn index_at(&self, t: f64) -> usize {
        // Index of the last segment whose start is <= t.
        let p = self.segments.partition_point(|s| s.start <= t);
        p.saturating_sub(1)
    }

    pub fn segment_at(&self, t: f64) -> &Segment<M> {
        &self.segments[self.index_at(t)]
    }

    /// Segment governing the open interval between `a` and `b`, in either order.
    pub fn segment_for_interval(&self, a: f64, b: f64) -> &Segment<M> {
        self.segment_at(0.5 * (a + b))
    }

    /// Switch times strictly inside the open interval between `t0` and `t1`,
    /// ordered in the direction of travel.
    pub fn breakpoints_between(&self, t0: f64, t1: f64) -> Vec<f64> {
        let (lo, hi) = if t0 <= t1 { (t0, t1) } else { (t1, t0) };
        let mut out: Vec<f64> = self
            .segments
            .iter()
            .skip(1)
            .map(|s| s.start)
            .filter(|&s| s > lo && s < hi)
            .collect();
        if t1 < t0 {
            out.reverse();
        }
        out
    }

    pub fn map_modes<N>(&self, mut f: impl FnMut(&Segment<M>) -> N) -> ModeSchedule<N> {
        ModeSchedule {
            segments: self
                .segments
                .iter()
                .map(|s| Segment {
                    start: s.start,
                    mode_id: s.mode_id,
                    mode: f(s),
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn three() -> ModeSchedule<char> {
        ModeSchedule::new(vec![
            Segment {
                start: 0.0,
                mode_id: 1,
                mode: 'f',
            },
            Segment {
                start: 1.0,
                mode_id: 2,
                mode: 'r',
            },
            Segment {
                start: 1.5,
                mode_id: 3,
                mode: 's',
            },
        ])
        .unwrap()
    }

    #[test]
    fn right_continuous_lookup() {
        let s = three();
        assert_eq!(s.segment_at(-5.0).mode, 'f');
        assert_eq!(s.segment_at(0.999).mode, 'f');
        assert_eq!(s.segment_at(1.0).mode, 'r');
        assert_eq!(s.segment_at(1.5).mode, 's');
        assert_eq!(s.segment_at(1e9).mode, 's');
    }

    #[test]
    fn interval_lookup_ignores_endpoint_convention() {
        let s = three();
        // A backward step ending on a switch belongs to the earlier segment.
        assert_eq!(s.segment_for_interval(1.0, 0.5).mode, 'f');
        assert_eq!(s.segment_for_interval(1.5, 1.0).mode, 'r');
    }

    #[test]
    fn breakpoints_follow_direction() {
        let s = three();
        assert_eq!(s.breakpoints_between(0.0, 2.0), vec![1.0, 1.5]);
        assert_eq!(s.breakpoints_between(2.0, 0.0), vec![1.5, 1.0]);
        assert!(s.breakpoints_between(1.0, 1.5).is_empty());
    }

    #[test]
    fn rejects_unordered_starts() {
        let r = ModeSchedule::new(vec![
            Segment {
                start: 1.0,
                mode_id: 0,
                mode: (),
            },
            Segment {
                start: 1.0,
                mode_id: 1,
                mode: (),
            },
        ]);
        assert!(r.is_err());
        assert!(ModeSchedule::<()>::new(vec![]).is_err());
    }
}
