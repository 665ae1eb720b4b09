//! The per-leg finite state machine and the force-feedback adjustment
//! planners of the blind stepping strategy.
//!
//! A swing leg cycles through support, initial movement, tentative
//! adjustment, and return. Tentative adjustments are classified from the
//! stop position relative to the landing band and the dominant component
//! of the sensed contact force:
//!
//! * in band, no contact: drop straight down to find support
//! * in band, obstacle force dominates: descend to the band edge
//! * out of band, support force dominates: relaunch a step curve forward
//! * out of band, obstacle force dominates: retreat, rise, and cross

use thiserror::Error;

use crate::cycloid::{SegmentSource, TrajectorySegment};
use crate::geometry::{EndpointInterval, ForceSample, GeometryError, LocalMap, Point};

#[derive(Debug, Error, PartialEq)]
pub enum FsmError {
    #[error("bad config: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("planned step height is negative ({0}); start sits above the free band")]
    NegativeStepHeight(f64),
    #[error("adjusted target x={0} lies outside the planning window")]
    TargetOutsideMap(f64),
    #[error("stop outside the landing band without contact: planner defect")]
    PlannerDefect,
    #[error("event {event} is illegal in state {state}")]
    IllegalTransition { state: String, event: String },
}

/// Planner tuning: step-height coefficient, adjustment budget, retreat
/// distance, and the minimum vertical force component accepted as support
/// on the unit-normal scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FsmConfig {
    pub gamma_h: f64,
    pub n_limit: u32,
    pub l_back: f64,
    pub support_threshold: f64,
}

impl FsmConfig {
    pub fn new(
        gamma_h: f64,
        n_limit: u32,
        l_back: f64,
        support_threshold: f64,
    ) -> Result<Self, FsmError> {
        if !(gamma_h > 0.0 && gamma_h <= 1.0) {
            return Err(FsmError::BadConfig(format!(
                "step height coefficient must be in (0, 1], got {gamma_h}"
            )));
        }
        if l_back < 0.0 {
            return Err(FsmError::BadConfig(format!(
                "retreat distance must be nonnegative, got {l_back}"
            )));
        }
        if !(support_threshold > 0.0 && support_threshold <= 1.0) {
            return Err(FsmError::BadConfig(format!(
                "support threshold must be in (0, 1], got {support_threshold}"
            )));
        }
        Ok(FsmConfig {
            gamma_h,
            n_limit,
            l_back,
            support_threshold,
        })
    }
}

impl Default for FsmConfig {
    fn default() -> Self {
        FsmConfig {
            gamma_h: 0.3,
            n_limit: 3,
            l_back: 0.5,
            support_threshold: 0.7,
        }
    }
}

/// One commanded step: start foothold, target point, and the landing
/// allowance half-width around the target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepCommand {
    pub start: Point,
    pub target: Point,
    pub allowance: f64,
}

impl StepCommand {
    pub fn new(start: Point, target: Point, allowance: f64) -> Self {
        StepCommand {
            start,
            target,
            allowance,
        }
    }

    pub fn landing_band(&self, map: &LocalMap) -> EndpointInterval {
        EndpointInterval::new(self.target, self.allowance, map.region())
    }
}

/// Why a swing stopped: the position it stopped at, the sensed contact
/// force when a collision interrupted it, and whether the planned
/// trajectory ran to completion. Contact at the final sample sets both.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopEvent {
    pub position: Point,
    pub force: Option<ForceSample>,
    pub completed: bool,
}

/// Tentative-adjustment classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdjustmentCase {
    /// In band without support: descend straight down.
    DropToSupport,
    /// In band, obstacle component dominates: descend to the band edge.
    SlideToEdge,
    /// Out of band on support-dominant contact: relaunch forward.
    RelaunchForward,
    /// Out of band on obstacle-dominant contact: retreat, rise, cross.
    ClimbOver,
}

impl AdjustmentCase {
    pub fn label(&self) -> &'static str {
        match self {
            AdjustmentCase::DropToSupport => "drop",
            AdjustmentCase::SlideToEdge => "slide",
            AdjustmentCase::RelaunchForward => "relaunch",
            AdjustmentCase::ClimbOver => "climb",
        }
    }
}

/// Return maneuver stages: vertical lift to the map ceiling, then the
/// backward swing to the start foothold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReturnStage {
    Lift,
    Swing,
}

/// Leg state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LegState {
    Support,
    InitialMovement,
    TentativeAdjustment { case: AdjustmentCase, count: u32 },
    Return { stage: ReturnStage },
}

impl LegState {
    pub fn label(&self) -> &'static str {
        match self {
            LegState::Support => "support",
            LegState::InitialMovement => "initial_movement",
            LegState::TentativeAdjustment { .. } => "tentative_adjustment",
            LegState::Return { .. } => "return",
        }
    }
}

/// Events fed to the state machine by the episode runner.
#[derive(Debug, Clone, Copy)]
pub enum FsmEvent {
    /// A planned trajectory was granted to the support leg.
    TrajectoryGranted,
    /// The swing stopped (contact or completion).
    Stopped(StopEvent),
    /// Both return stages finished; the foot is back at the start.
    ReturnComplete,
}

/// What the runner should do after a transition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FsmAction {
    PlanInitial,
    PlanAdjustment(AdjustmentCase),
    PlanReturn,
    /// Settled in support; nothing to execute.
    Settled,
}

/// Support detection: the foot is inside the landing band and the support
/// component of the contact force reaches the threshold.
pub fn detect_support(
    p: &Point,
    band: &EndpointInterval,
    force: &ForceSample,
    cfg: &FsmConfig,
) -> bool {
    band.contains(p) && force.z >= cfg.support_threshold
}

/// Classify a non-support stop. Total over stop position x force shape;
/// a completed contact-free stop outside the band cannot arise from a
/// well-formed plan and is reported as a planner defect.
pub fn classify_stop(
    event: &StopEvent,
    band: &EndpointInterval,
    _cfg: &FsmConfig,
) -> Result<AdjustmentCase, FsmError> {
    let inside = band.contains(&event.position);
    match (inside, &event.force) {
        (true, Some(f)) if f.obstacle_dominant() => Ok(AdjustmentCase::SlideToEdge),
        // Weak support-dominant contact in band descends like the
        // contact-free case: straight down to firm support.
        (true, _) if event.completed || event.force.is_some() => Ok(AdjustmentCase::DropToSupport),
        (false, Some(f)) => {
            if f.support_dominant() {
                Ok(AdjustmentCase::RelaunchForward)
            } else {
                Ok(AdjustmentCase::ClimbOver)
            }
        }
        _ => Err(FsmError::PlannerDefect),
    }
}

/// Pure state-transition function. The runner owns execution; this only
/// sequences states and decides which plan to request next.
pub fn transition(
    state: LegState,
    event: &FsmEvent,
    band: &EndpointInterval,
    cfg: &FsmConfig,
) -> Result<(LegState, FsmAction), FsmError> {
    match (state, event) {
        (LegState::Support, FsmEvent::TrajectoryGranted) => {
            Ok((LegState::InitialMovement, FsmAction::PlanInitial))
        }
        (LegState::InitialMovement, FsmEvent::Stopped(ev))
        | (LegState::TentativeAdjustment { .. }, FsmEvent::Stopped(ev)) => {
            let supported = ev
                .force
                .map(|f| detect_support(&ev.position, band, &f, cfg))
                .unwrap_or(false);
            if supported {
                return Ok((LegState::Support, FsmAction::Settled));
            }
            let count = match state {
                LegState::TentativeAdjustment { count, .. } => count + 1,
                _ => 1,
            };
            if count > cfg.n_limit {
                Ok((
                    LegState::Return {
                        stage: ReturnStage::Lift,
                    },
                    FsmAction::PlanReturn,
                ))
            } else {
                let case = classify_stop(ev, band, cfg)?;
                Ok((
                    LegState::TentativeAdjustment { case, count },
                    FsmAction::PlanAdjustment(case),
                ))
            }
        }
        (LegState::Return { .. }, FsmEvent::ReturnComplete) => {
            Ok((LegState::Support, FsmAction::Settled))
        }
        (s, e) => Err(FsmError::IllegalTransition {
            state: format!("{s:?}"),
            event: format!("{e:?}"),
        }),
    }
}

fn spacing(map: &LocalMap) -> f64 {
    map.resolution() * 0.5
}

/// Initial feed-forward step: full step curve spanning start to target,
/// apex scaled to the free headroom over the span.
pub fn plan_initial(
    map: &LocalMap,
    cmd: &StepCommand,
    cfg: &FsmConfig,
) -> Result<TrajectorySegment, FsmError> {
    plan_launch(map, cmd.start, cmd.target.x, cfg, SegmentSource::Initial)
}

/// Step curve from `from` toward column `x_target` with headroom-scaled
/// apex. Shared by the initial plan, the relaunch adjustment, and the
/// field-planner fallback.
pub fn plan_launch(
    map: &LocalMap,
    from: Point,
    x_target: f64,
    cfg: &FsmConfig,
    source: SegmentSource,
) -> Result<TrajectorySegment, FsmError> {
    let (lo, hi) = if from.x <= x_target {
        (from.x, x_target)
    } else {
        (x_target, from.x)
    };
    let ceiling = map.min_upper_over(lo, hi, from.z)?;
    let height = cfg.gamma_h * (ceiling - from.z);
    if height < 0.0 {
        return Err(FsmError::NegativeStepHeight(height));
    }
    Ok(TrajectorySegment::full_cycloid(
        from,
        x_target - from.x,
        height,
        spacing(map),
        source,
    ))
}

/// In-band drop: descending half-curve straight down to the map floor at
/// the stop column. Already at or below the floor yields an empty motion,
/// which the caller counts as a failed adjustment.
pub fn plan_drop(map: &LocalMap, stop: Point) -> Result<TrajectorySegment, FsmError> {
    let floor = map.lower_boundary(stop.x, stop.z)?;
    let height = (stop.z - floor).max(0.0);
    Ok(TrajectorySegment::second_half(
        stop,
        0.0,
        height,
        spacing(map),
        SegmentSource::DropToSupport,
    ))
}

/// In-band slide: descending half-curve to the lower corner of the landing
/// band, on the side the obstacle force pushes toward.
pub fn plan_slide(
    map: &LocalMap,
    stop: Point,
    cmd: &StepCommand,
    force_x_negative: bool,
) -> Result<TrajectorySegment, FsmError> {
    let x_edge = if force_x_negative {
        cmd.target.x - cmd.allowance
    } else {
        cmd.target.x + cmd.allowance
    };
    if !map.region().contains_x(x_edge) {
        return Err(FsmError::TargetOutsideMap(x_edge));
    }
    let floor = map.lower_boundary(x_edge, stop.z)?;
    let step_length = 2.0 * (x_edge - stop.x);
    let height = (stop.z - floor).max(0.0);
    Ok(TrajectorySegment::second_half(
        stop,
        step_length,
        height,
        spacing(map),
        SegmentSource::SlideToEdge,
    ))
}

/// Out-of-band relaunch on support-dominant contact: new step curve from
/// the stop toward the target. A stop already at the target column
/// degenerates to the straight drop.
pub fn plan_relaunch(
    map: &LocalMap,
    stop: Point,
    cmd: &StepCommand,
    cfg: &FsmConfig,
) -> Result<TrajectorySegment, FsmError> {
    if (cmd.target.x - stop.x).abs() < 1e-12 {
        return plan_drop(map, stop);
    }
    plan_launch(
        map,
        stop,
        cmd.target.x,
        cfg,
        SegmentSource::RelaunchForward,
    )
}

/// Out-of-band climb on obstacle-dominant contact, three segments:
/// straight retreat, rising half-curve back over the stop column, and a
/// descending half-curve to the target. The retreat clips at the window
/// edge and the rise renormalizes to match.
pub fn plan_climb_over(
    map: &LocalMap,
    stop: Point,
    cmd: &StepCommand,
    cfg: &FsmConfig,
) -> Result<[TrajectorySegment; 3], FsmError> {
    let retreat = cfg.l_back.min(stop.x - map.region().x_min);
    let back_end = Point::new(stop.x - retreat, stop.z);
    let back = TrajectorySegment::straight(stop, back_end, spacing(map), SegmentSource::ClimbBack);

    let ceiling = map.min_upper_over(back_end.x, back_end.x.max(cmd.target.x), stop.z)?;
    let rise_height = cfg.gamma_h * (ceiling - stop.z);
    if rise_height < 0.0 {
        return Err(FsmError::NegativeStepHeight(rise_height));
    }
    let rise = TrajectorySegment::first_half(
        back_end,
        2.0 * retreat,
        rise_height,
        spacing(map),
        SegmentSource::ClimbRise,
    );

    let peak = rise.end();
    let cross_height = (peak.z - cmd.target.z).max(0.0);
    let cross = TrajectorySegment::second_half(
        peak,
        2.0 * (cmd.target.x - peak.x),
        cross_height,
        spacing(map),
        SegmentSource::ClimbCross,
    );
    Ok([back, rise, cross])
}

/// Return maneuver: vertical lift to the free ceiling at the stop column,
/// then a descending half-curve back to the start foothold.
pub fn plan_return(
    map: &LocalMap,
    stop: Point,
    cmd: &StepCommand,
) -> Result<[TrajectorySegment; 2], FsmError> {
    let ceiling = map.upper_boundary(stop.x, stop.z)?;
    let lift = TrajectorySegment::first_half(
        stop,
        0.0,
        (ceiling - stop.z).max(0.0),
        spacing(map),
        SegmentSource::ReturnLift,
    );
    let top = lift.end();
    let swing = TrajectorySegment::second_half(
        top,
        2.0 * (cmd.start.x - top.x),
        top.z - cmd.start.z,
        spacing(map),
        SegmentSource::ReturnSwing,
    );
    Ok([lift, swing])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{ObstaclePatch, Provenance, Region};
    use approx::assert_relative_eq;

    fn empty_map() -> LocalMap {
        LocalMap::new(Region::new(0.0, 14.0, 0.0, 8.0).unwrap(), 0.05).unwrap()
    }

    fn cmd() -> StepCommand {
        StepCommand::new(Point::new(0.0, 3.0), Point::new(8.0, 3.0), 1.0)
    }

    fn band(map: &LocalMap) -> EndpointInterval {
        cmd().landing_band(map)
    }

    #[test]
    fn config_validation() {
        assert!(FsmConfig::new(0.3, 3, 0.5, 0.7).is_ok());
        assert!(FsmConfig::new(0.0, 3, 0.5, 0.7).is_err());
        assert!(FsmConfig::new(1.1, 3, 0.5, 0.7).is_err());
        assert!(FsmConfig::new(0.3, 3, -0.1, 0.7).is_err());
        assert!(FsmConfig::new(0.3, 3, 0.5, 0.0).is_err());
        assert!(FsmConfig::new(0.3, 0, 0.0, 1.0).is_ok());
    }

    #[test]
    fn support_detection() {
        let map = empty_map();
        let cfg = FsmConfig::default();
        let en = band(&map);
        assert!(detect_support(
            &Point::new(8.1, 3.2),
            &en,
            &ForceSample::new(0.0, 1.0),
            &cfg
        ));
        assert!(!detect_support(
            &Point::new(6.0, 3.0),
            &en,
            &ForceSample::new(0.0, 1.0),
            &cfg
        ));
        // Unit normal about 64 degrees from vertical: too shallow to support.
        assert!(!detect_support(
            &Point::new(8.0, 3.0),
            &en,
            &ForceSample::new(-0.9, 0.436),
            &cfg
        ));
    }

    #[test]
    fn stop_classification_covers_product() {
        let map = empty_map();
        let cfg = FsmConfig::default();
        let en = band(&map);
        let inside = Point::new(8.0, 4.5);
        let outside = Point::new(4.0, 4.1);

        let completed = |p| StopEvent {
            position: p,
            force: None,
            completed: true,
        };
        let contact = |p, fx: f64, fz: f64| StopEvent {
            position: p,
            force: Some(ForceSample::new(fx, fz)),
            completed: false,
        };

        assert_eq!(
            classify_stop(&completed(inside), &en, &cfg).unwrap(),
            AdjustmentCase::DropToSupport
        );
        assert_eq!(
            classify_stop(&contact(Point::new(7.4, 3.6), -0.8, 0.6), &en, &cfg).unwrap(),
            AdjustmentCase::SlideToEdge
        );
        assert_eq!(
            classify_stop(&contact(outside, -0.2, 0.98), &en, &cfg).unwrap(),
            AdjustmentCase::RelaunchForward
        );
        assert_eq!(
            classify_stop(&contact(Point::new(4.0, 3.2), -0.95, 0.31), &en, &cfg).unwrap(),
            AdjustmentCase::ClimbOver
        );
        // Weak support-dominant contact in band descends.
        assert_eq!(
            classify_stop(&contact(inside, 0.3, 0.5), &en, &cfg).unwrap(),
            AdjustmentCase::DropToSupport
        );
        // Exact tie counts as support-dominant.
        assert_eq!(
            classify_stop(&contact(outside, 0.7, 0.7), &en, &cfg).unwrap(),
            AdjustmentCase::RelaunchForward
        );
        assert_eq!(
            classify_stop(&contact(inside, -0.7, 0.7), &en, &cfg).unwrap(),
            AdjustmentCase::DropToSupport
        );
        assert!(classify_stop(&completed(outside), &en, &cfg).is_err());
    }

    #[test]
    fn initial_plan_matches_headroom_formula() {
        let map = empty_map();
        let cfg = FsmConfig::default();
        let seg = plan_initial(&map, &cmd(), &cfg).unwrap();
        let end = seg.end();
        assert_relative_eq!(end.x, 8.0, epsilon = 1e-12);
        assert_relative_eq!(end.z, 3.0, epsilon = 1e-12);
        let apex = seg.samples().iter().map(|p| p.z).fold(f64::MIN, f64::max);
        assert_relative_eq!(apex, 3.0 + 0.3 * (8.0 - 3.0), epsilon = 1e-9);

        // Ceiling lowered to 5 over the span drops the apex accordingly.
        let mut low = empty_map();
        low.add_patch(
            &ObstaclePatch::Block {
                x_lo: 0.0,
                x_hi: 8.0,
                z_lo: 5.0,
                z_hi: 8.0,
            },
            Provenance::Terrain,
        );
        let seg = plan_initial(&low, &cmd(), &cfg).unwrap();
        let apex = seg.samples().iter().map(|p| p.z).fold(f64::MIN, f64::max);
        assert_relative_eq!(apex, 3.0 + 0.3 * (5.0 - 3.0), epsilon = 1e-9);

        // Limiting coefficient: the apex touches the ceiling exactly.
        let full = FsmConfig::new(1.0, 3, 0.5, 0.7).unwrap();
        let seg = plan_initial(&map, &cmd(), &full).unwrap();
        let apex = seg.samples().iter().map(|p| p.z).fold(f64::MIN, f64::max);
        assert_relative_eq!(apex, 8.0, epsilon = 1e-9);
    }

    #[test]
    fn drop_plan() {
        let mut map = empty_map();
        map.add_patch(
            &ObstaclePatch::Block {
                x_lo: 0.0,
                x_hi: 14.0,
                z_lo: 0.0,
                z_hi: 3.1,
            },
            Provenance::Terrain,
        );
        let seg = plan_drop(&map, Point::new(8.2, 4.0)).unwrap();
        assert_relative_eq!(seg.end().x, 8.2, epsilon = 1e-12);
        assert_relative_eq!(seg.end().z, 3.1, epsilon = 1e-12);

        // On the floor already: empty motion.
        let empty = plan_drop(&map, Point::new(8.2, 3.1)).unwrap();
        assert!(empty.is_empty());

        // No obstacles: descend the full window height.
        let seg = plan_drop(&empty_map(), Point::new(7.0, 8.0)).unwrap();
        assert_relative_eq!(seg.end().z, 0.0, epsilon = 1e-12);
        assert_relative_eq!(seg.arc_length(), 8.0, epsilon = 1e-9);
    }

    #[test]
    fn slide_plan_both_sides() {
        let mut map = empty_map();
        map.fill_below_curve(
            |x| if x < 7.5 { 2.8 } else { 2.9 },
            0.0,
            Provenance::Terrain,
        );
        let seg = plan_slide(&map, Point::new(7.5, 3.4), &cmd(), true).unwrap();
        assert_relative_eq!(seg.end().x, 7.0, epsilon = 1e-12);
        assert_relative_eq!(seg.end().z, 2.8, epsilon = 1e-12);

        let seg = plan_slide(&map, Point::new(7.5, 3.4), &cmd(), false).unwrap();
        assert_relative_eq!(seg.end().x, 9.0, epsilon = 1e-12);
        assert_relative_eq!(seg.end().z, 2.9, epsilon = 1e-12);

        // Stop already at the edge column: pure descent.
        let seg = plan_slide(&map, Point::new(7.0, 3.4), &cmd(), true).unwrap();
        assert_relative_eq!(seg.end().x, 7.0, epsilon = 1e-12);

        // Edge outside the window is refused.
        let wide = StepCommand::new(Point::new(0.0, 3.0), Point::new(13.5, 3.0), 1.0);
        assert!(matches!(
            plan_slide(&map, Point::new(13.0, 3.4), &wide, false),
            Err(FsmError::TargetOutsideMap(_))
        ));
    }

    #[test]
    fn relaunch_plan() {
        let map = empty_map();
        let cfg = FsmConfig::default();
        let seg = plan_relaunch(&map, Point::new(4.0, 4.1), &cmd(), &cfg).unwrap();
        assert_relative_eq!(seg.end().x, 8.0, epsilon = 1e-12);
        assert_relative_eq!(seg.end().z, 4.1, epsilon = 1e-12);
        let apex = seg.samples().iter().map(|p| p.z).fold(f64::MIN, f64::max);
        assert_relative_eq!(apex, 4.1 + 0.3 * (8.0 - 4.1), epsilon = 1e-9);

        // Lower ceiling over the remaining span.
        let mut low = empty_map();
        low.add_patch(
            &ObstaclePatch::Block {
                x_lo: 4.0,
                x_hi: 8.0,
                z_lo: 6.0,
                z_hi: 8.0,
            },
            Provenance::Terrain,
        );
        let seg = plan_relaunch(&low, Point::new(4.0, 4.1), &cmd(), &cfg).unwrap();
        let apex = seg.samples().iter().map(|p| p.z).fold(f64::MIN, f64::max);
        assert_relative_eq!(apex, 4.1 + 0.3 * (6.0 - 4.1), epsilon = 1e-9);

        // Degenerate stop at the target column becomes a straight drop.
        let seg = plan_relaunch(&map, Point::new(8.0, 4.1), &cmd(), &cfg).unwrap();
        let drop = plan_drop(&map, Point::new(8.0, 4.1)).unwrap();
        assert_relative_eq!(seg.end().x, drop.end().x);
        assert_relative_eq!(seg.end().z, drop.end().z);
    }

    #[test]
    fn climb_over_three_segments_are_continuous() {
        let map = empty_map();
        let cfg = FsmConfig::default();
        let [back, rise, cross] =
            plan_climb_over(&map, Point::new(4.0, 3.2), &cmd(), &cfg).unwrap();

        assert_relative_eq!(back.end().x, 3.5, epsilon = 1e-12);
        assert_relative_eq!(back.end().z, 3.2, epsilon = 1e-12);
        assert_relative_eq!(rise.end().x, 4.0, epsilon = 1e-12);
        assert_relative_eq!(rise.end().z, 3.2 + 0.3 * (8.0 - 3.2), epsilon = 1e-12);
        assert_relative_eq!(cross.end().x, 8.0, epsilon = 1e-12);
        assert_relative_eq!(cross.end().z, 3.0, epsilon = 1e-12);

        // C0 continuity between stages.
        assert_relative_eq!(back.end().x, rise.origin().x, epsilon = 1e-9);
        assert_relative_eq!(back.end().z, rise.origin().z, epsilon = 1e-9);
        assert_relative_eq!(rise.end().x, cross.origin().x, epsilon = 1e-9);
        assert_relative_eq!(rise.end().z, cross.origin().z, epsilon = 1e-9);

        // No retreat distance: rise in place.
        let cfg0 = FsmConfig::new(0.3, 3, 0.0, 0.7).unwrap();
        let [back, rise, _] = plan_climb_over(&map, Point::new(4.0, 3.2), &cmd(), &cfg0).unwrap();
        assert!(back.is_empty());
        assert_relative_eq!(rise.end().x, 4.0, epsilon = 1e-12);

        // Retreat clipped at the window edge.
        let [back, rise, cross] =
            plan_climb_over(&map, Point::new(0.2, 3.2), &cmd(), &cfg).unwrap();
        assert_relative_eq!(back.end().x, 0.0, epsilon = 1e-12);
        assert_relative_eq!(rise.end().x, 0.2, epsilon = 1e-12);
        assert_relative_eq!(cross.end().x, 8.0, epsilon = 1e-12);
    }

    #[test]
    fn return_plan_round_trip() {
        let map = empty_map();
        let [lift, swing] = plan_return(&map, Point::new(5.0, 4.0), &cmd()).unwrap();
        assert_relative_eq!(lift.end().x, 5.0, epsilon = 1e-12);
        assert_relative_eq!(lift.end().z, 8.0, epsilon = 1e-12);
        assert_relative_eq!(swing.end().x, 0.0, epsilon = 1e-9);
        assert_relative_eq!(swing.end().z, 3.0, epsilon = 1e-9);

        // Already at the ceiling: zero lift.
        let [lift, _] = plan_return(&map, Point::new(5.0, 8.0), &cmd()).unwrap();
        assert!(lift.is_empty());

        // At the start column: lift then pure descent.
        let [_, swing] = plan_return(&map, Point::new(0.0, 4.0), &cmd()).unwrap();
        assert_relative_eq!(swing.end().x, 0.0, epsilon = 1e-9);
        assert_relative_eq!(swing.end().z, 3.0, epsilon = 1e-9);
    }

    #[test]
    fn transition_table() {
        let map = empty_map();
        let cfg = FsmConfig::default();
        let en = band(&map);

        let (state, action) =
            transition(LegState::Support, &FsmEvent::TrajectoryGranted, &en, &cfg).unwrap();
        assert_eq!(state, LegState::InitialMovement);
        assert_eq!(action, FsmAction::PlanInitial);

        // Supported stop in band settles.
        let settle = FsmEvent::Stopped(StopEvent {
            position: Point::new(8.0, 3.0),
            force: Some(ForceSample::new(0.0, 1.0)),
            completed: false,
        });
        let (state, action) = transition(LegState::InitialMovement, &settle, &en, &cfg).unwrap();
        assert_eq!(state, LegState::Support);
        assert_eq!(action, FsmAction::Settled);

        // Non-support stops accumulate adjustments until the budget trips.
        let blocked = FsmEvent::Stopped(StopEvent {
            position: Point::new(4.0, 3.2),
            force: Some(ForceSample::new(-0.95, 0.31)),
            completed: false,
        });
        let (state, _) = transition(LegState::InitialMovement, &blocked, &en, &cfg).unwrap();
        assert_eq!(
            state,
            LegState::TentativeAdjustment {
                case: AdjustmentCase::ClimbOver,
                count: 1
            }
        );
        let (state, action) = transition(
            LegState::TentativeAdjustment {
                case: AdjustmentCase::ClimbOver,
                count: 3,
            },
            &blocked,
            &en,
            &cfg,
        )
        .unwrap();
        assert_eq!(
            state,
            LegState::Return {
                stage: ReturnStage::Lift
            }
        );
        assert_eq!(action, FsmAction::PlanReturn);

        let (state, action) = transition(
            LegState::Return {
                stage: ReturnStage::Swing,
            },
            &FsmEvent::ReturnComplete,
            &en,
            &cfg,
        )
        .unwrap();
        assert_eq!(state, LegState::Support);
        assert_eq!(action, FsmAction::Settled);

        assert!(transition(LegState::Support, &settle, &en, &cfg).is_err());
    }
}
