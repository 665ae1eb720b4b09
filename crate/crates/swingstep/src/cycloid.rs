//! Compound-cycloid step primitives and sampled trajectory segments.
//!
//! The step curve has zero x-velocity at both ends, which keeps foot
//! placement low-impact. Every planner trajectory is one of: a full
//! cycloid, its rising first half, its descending second half, or a
//! piecewise-linear polyline.

use std::f64::consts::PI;

use thiserror::Error;

use crate::geometry::Point;

#[derive(Debug, Error, PartialEq)]
pub enum CycloidError {
    #[error("time {t} outside the motion period [0, {period}]")]
    TimeOutOfRange { t: f64, period: f64 },
    #[error("invalid parameters: step height {step_height}, period {period}")]
    BadParams { step_height: f64, period: f64 },
}

/// Step-curve parameters: signed step length, nonnegative step height,
/// positive motion period. Only the path shape matters to the simulator,
/// so the period defaults to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycloidParams {
    pub step_length: f64,
    pub step_height: f64,
    pub period: f64,
}

impl CycloidParams {
    pub fn new(step_length: f64, step_height: f64) -> Result<Self, CycloidError> {
        Self::with_period(step_length, step_height, 1.0)
    }

    pub fn with_period(
        step_length: f64,
        step_height: f64,
        period: f64,
    ) -> Result<Self, CycloidError> {
        if step_height < 0.0 || period <= 0.0 {
            return Err(CycloidError::BadParams {
                step_height,
                period,
            });
        }
        Ok(CycloidParams {
            step_length,
            step_height,
            period,
        })
    }

    /// Displacement from the curve origin at time `t in [0, period]`:
    /// `dx = S (t/T - sin(2 pi t/T) / 2 pi)`, `dz = H (1 - cos(2 pi t/T)) / 2`.
    pub fn displacement(&self, t: f64) -> Result<(f64, f64), CycloidError> {
        if !(0.0..=self.period).contains(&t) {
            return Err(CycloidError::TimeOutOfRange {
                t,
                period: self.period,
            });
        }
        Ok(self.displacement_unchecked(t / self.period))
    }

    #[inline]
    fn displacement_unchecked(&self, tau: f64) -> (f64, f64) {
        let u = 2.0 * PI * tau;
        (
            self.step_length * (tau - u.sin() / (2.0 * PI)),
            self.step_height * 0.5 * (1.0 - u.cos()),
        )
    }
}

/// Which portion of the step curve a segment samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Full,
    FirstHalf,
    SecondHalf,
    /// Piecewise-linear polyline (field-descent paths, straight glides).
    Straight,
}

/// Which planner state produced a segment. Used for trace tagging and
/// plot coloring only.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegmentSource {
    Initial,
    DropToSupport,
    SlideToEdge,
    RelaunchForward,
    ClimbBack,
    ClimbRise,
    ClimbCross,
    ReturnLift,
    ReturnSwing,
    FieldDescent,
    Fallback,
    Settle,
}

impl SegmentSource {
    pub fn label(&self) -> &'static str {
        match self {
            SegmentSource::Initial => "initial",
            SegmentSource::DropToSupport => "drop",
            SegmentSource::SlideToEdge => "slide",
            SegmentSource::RelaunchForward => "relaunch",
            SegmentSource::ClimbBack => "climb_back",
            SegmentSource::ClimbRise => "climb_rise",
            SegmentSource::ClimbCross => "climb_cross",
            SegmentSource::ReturnLift => "return_lift",
            SegmentSource::ReturnSwing => "return_swing",
            SegmentSource::FieldDescent => "field_descent",
            SegmentSource::Fallback => "fallback",
            SegmentSource::Settle => "settle",
        }
    }
}

/// A sampled trajectory in absolute local-map coordinates.
///
/// Invariants: the first sample equals the origin exactly; consecutive
/// sample spacing stays at or below the spacing the builder was given
/// (collision-sweep fidelity); cycloid x is monotone in the sign of S.
#[derive(Debug, Clone)]
pub struct TrajectorySegment {
    origin: Point,
    samples: Vec<Point>,
    phase: Phase,
    source: SegmentSource,
}

impl TrajectorySegment {
    pub fn origin(&self) -> Point {
        self.origin
    }

    pub fn samples(&self) -> &[Point] {
        &self.samples
    }

    pub fn end(&self) -> Point {
        *self.samples.last().expect("segment has at least one sample")
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn source(&self) -> SegmentSource {
        self.source
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.len() <= 1
    }

    /// Sum of Euclidean distances between consecutive samples.
    pub fn arc_length(&self) -> f64 {
        self.samples
            .windows(2)
            .map(|w| w[0].distance(&w[1]))
            .sum()
    }

    /// Serialize as `t,x,z` rows, t normalized to [0, 1].
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,x,z\n");
        let denom = (self.samples.len().max(2) - 1) as f64;
        for (k, p) in self.samples.iter().enumerate() {
            out.push_str(&format!("{},{},{}\n", k as f64 / denom, p.x, p.z));
        }
        out
    }

    fn from_curve(
        origin: Point,
        params: CycloidParams,
        tau_range: (f64, f64),
        phase: Phase,
        source: SegmentSource,
        max_spacing: f64,
    ) -> Self {
        let (tau0, tau1) = tau_range;
        let span = tau1 - tau0;
        // Path length over the sampled range is bounded by the peak speeds
        // |dx/dtau| <= 2|S| and |dz/dtau| <= pi H. Even counts keep the
        // curve midpoint (the apex of a full curve) an exact sample.
        let bound = (2.0 * params.step_length.abs() + PI * params.step_height) * span;
        let n = ((bound / max_spacing).ceil() as usize).max(2);
        let n = n + n % 2;
        let (bx, bz) = params.displacement_unchecked(tau0);
        let mut samples = Vec::with_capacity(n + 1);
        for k in 0..=n {
            let tau = tau0 + span * k as f64 / n as f64;
            let (dx, dz) = params.displacement_unchecked(tau);
            samples.push(Point::new(origin.x + dx - bx, origin.z + dz - bz));
        }
        samples[0] = origin;
        if bound == 0.0 {
            samples.truncate(1);
        }
        TrajectorySegment {
            origin,
            samples,
            phase,
            source,
        }
    }

    /// Full step curve: starts at `origin`, ends at `origin + (S, 0)`,
    /// apex at `origin + (S/2, H)`.
    pub fn full_cycloid(
        origin: Point,
        step_length: f64,
        step_height: f64,
        max_spacing: f64,
        source: SegmentSource,
    ) -> Self {
        let params = CycloidParams::new(step_length, step_height).expect("step height >= 0");
        Self::from_curve(origin, params, (0.0, 1.0), Phase::Full, source, max_spacing)
    }

    /// Rising half: starts at `origin`, ends at `origin + (S/2, H)`.
    pub fn first_half(
        origin: Point,
        step_length: f64,
        step_height: f64,
        max_spacing: f64,
        source: SegmentSource,
    ) -> Self {
        let params = CycloidParams::new(step_length, step_height).expect("step height >= 0");
        Self::from_curve(
            origin,
            params,
            (0.0, 0.5),
            Phase::FirstHalf,
            source,
            max_spacing,
        )
    }

    /// Descending half: starts at `origin`, ends at `origin + (S/2, -H)`.
    pub fn second_half(
        origin: Point,
        step_length: f64,
        step_height: f64,
        max_spacing: f64,
        source: SegmentSource,
    ) -> Self {
        let params = CycloidParams::new(step_length, step_height).expect("step height >= 0");
        Self::from_curve(
            origin,
            params,
            (0.5, 1.0),
            Phase::SecondHalf,
            source,
            max_spacing,
        )
    }

    /// Straight glide between two points.
    pub fn straight(origin: Point, end: Point, max_spacing: f64, source: SegmentSource) -> Self {
        Self::polyline(vec![origin, end], max_spacing, source)
    }

    /// Piecewise-linear path through `points`, subdivided so consecutive
    /// samples are no farther apart than `max_spacing`.
    pub fn polyline(points: Vec<Point>, max_spacing: f64, source: SegmentSource) -> Self {
        assert!(!points.is_empty(), "polyline needs at least one point");
        let origin = points[0];
        let mut samples = vec![origin];
        for w in points.windows(2) {
            let (a, b) = (w[0], w[1]);
            let d = a.distance(&b);
            if d == 0.0 {
                continue;
            }
            let n = ((d / max_spacing).ceil() as usize).max(1);
            for k in 1..=n {
                let f = k as f64 / n as f64;
                samples.push(Point::new(a.x + (b.x - a.x) * f, a.z + (b.z - a.z) * f));
            }
        }
        TrajectorySegment {
            origin,
            samples,
            phase: Phase::Straight,
            source,
        }
    }
}
