//! Collision sweeping against ground-truth terrain, contact-force
//! synthesis, the step-episode executor, and the seeded batch runner
//! behind the benchmark tables.
//!
//! Contact model: trajectories are swept sample by sample against the
//! boundary curve. A sample closer than the contact tolerance above the
//! curve (or below it) stops the swing at the previous sample and reports
//! the on-curve contact point with the boundary normal as the sensed
//! force. Return maneuvers sweep with the strict penetration rule instead,
//! so the final approach can settle exactly on the start foothold.

use std::collections::VecDeque;

use rayon::prelude::*;
use thiserror::Error;

use crate::apf::{ApfConfig, ApfError, ApfPlanner};
use crate::cycloid::{SegmentSource, TrajectorySegment};
use crate::fsm::{
    self, AdjustmentCase, FsmAction, FsmConfig, FsmError, FsmEvent, LegState, StepCommand,
    StopEvent,
};
use crate::geometry::{ForceSample, GeometryError, LocalMap, Point, Provenance, Region};
use crate::terrain::{Ground, TerrainParams, TerrainProfile};

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Fsm(#[from] FsmError),
    #[error(transparent)]
    Apf(#[from] ApfError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("trajectory starts below ground: z={z} under surface {surface} at x={x}")]
    StartsBelowGround { x: f64, z: f64, surface: f64 },
    #[error("episode runner exceeded its round budget (planner defect)")]
    RunnerStuck,
}

/// Which planning strategy drives the episode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    Blind,
    Apf,
}

impl Strategy {
    pub fn label(&self) -> &'static str {
        match self {
            Strategy::Blind => "blind",
            Strategy::Apf => "apf",
        }
    }
}

impl std::str::FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "blind" => Ok(Strategy::Blind),
            "apf" => Ok(Strategy::Apf),
            other => Err(format!("unknown strategy '{other}' (expected blind|apf)")),
        }
    }
}

/// Episode-level configuration bundling both planners with the map window
/// and the contact tolerance.
#[derive(Debug, Clone, Copy)]
pub struct EpisodeConfig {
    pub fsm: FsmConfig,
    pub apf: ApfConfig,
    pub region: Region,
    pub resolution: f64,
    pub contact_tol: f64,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        EpisodeConfig {
            fsm: FsmConfig::default(),
            apf: ApfConfig::default(),
            region: Region::benchmark(),
            resolution: 0.05,
            contact_tol: 1e-3,
        }
    }
}

impl EpisodeConfig {
    /// Standard benchmark step: start (0, 3) toward (8, 3) with allowance 1.
    pub fn benchmark_command() -> StepCommand {
        StepCommand::new(Point::new(0.0, 3.0), Point::new(8.0, 3.0), 1.0)
    }
}

/// First boundary crossing of a swept trajectory.
#[derive(Debug, Clone, Copy)]
pub struct CollisionReport {
    /// Contact point on the boundary curve.
    pub contact: Point,
    /// Last sample strictly clear of the boundary; replans start here.
    pub last_free: Point,
    pub normal_x: f64,
    pub normal_z: f64,
    pub sample_index: usize,
}

/// Sensed contact force: the unit boundary normal, obstacle component
/// along x and support component along z.
pub fn force_from_normal(report: &CollisionReport) -> ForceSample {
    ForceSample::new(report.normal_x, report.normal_z)
}

fn normal_at(ground: &dyn Ground, x: f64) -> (f64, f64) {
    let g = ground.slope(x);
    let norm = (1.0 + g * g).sqrt();
    (-g / norm, 1.0 / norm)
}

const BISECTION_TOL: f64 = 1e-6;

/// Sweep a trajectory against the ground. `touch_tol > 0` arms the touch
/// rule: a sample within that distance above the curve counts as contact
/// (landing detection); `touch_tol = 0` reports strict penetrations only.
/// Swings may launch from the surface: the touch rule arms only once the
/// trajectory has cleared the tolerance band, and until then only strict
/// penetration fires.
pub fn sweep_collision(
    ground: &dyn Ground,
    segment: &TrajectorySegment,
    touch_tol: f64,
) -> Result<Option<CollisionReport>, SimError> {
    let samples = segment.samples();
    let first = samples[0];
    let g0 = ground.height(first.x);
    if first.z < g0 - touch_tol.max(1e-9) {
        return Err(SimError::StartsBelowGround {
            x: first.x,
            z: first.z,
            surface: g0,
        });
    }
    let mut armed = first.z >= g0 + touch_tol;
    for i in 1..samples.len() {
        let a = samples[i - 1];
        let b = samples[i];

        // Vertical step faces between consecutive samples.
        for &xj in ground.jumps() {
            let (lo, hi) = if a.x <= b.x { (a.x, b.x) } else { (b.x, a.x) };
            if xj <= lo || xj > hi {
                continue;
            }
            let eps = 1e-9;
            let g_left = ground.height(xj - eps);
            let g_right = ground.height(xj + eps);
            let (g_low, g_high, into_high) = if g_right > g_left {
                (g_left, g_right, b.x > a.x)
            } else {
                (g_right, g_left, b.x < a.x)
            };
            if !into_high {
                continue;
            }
            let f = (xj - a.x) / (b.x - a.x);
            let z_cross = a.z + (b.z - a.z) * f;
            if z_cross < g_high + touch_tol && z_cross > g_low - touch_tol {
                let nx = if g_right > g_left { -1.0 } else { 1.0 };
                return Ok(Some(CollisionReport {
                    contact: Point::new(xj, z_cross.min(g_high)),
                    last_free: a,
                    normal_x: nx,
                    normal_z: 0.0,
                    sample_index: i,
                }));
            }
        }

        let gb = ground.height(b.x);
        if !armed && b.z >= gb + touch_tol {
            armed = true;
        }
        let fires = if armed {
            b.z < gb + touch_tol
        } else {
            b.z < gb
        };
        if fires {
            let contact = if b.z < gb {
                // True crossing: bisect the chord for z(s) = g(x(s)).
                let mut lo = 0.0f64;
                let mut hi = 1.0f64;
                while hi - lo > BISECTION_TOL {
                    let mid = 0.5 * (lo + hi);
                    let x = a.x + (b.x - a.x) * mid;
                    let z = a.z + (b.z - a.z) * mid;
                    if z < ground.height(x) {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                let x = a.x + (b.x - a.x) * hi;
                Point::new(x, ground.height(x))
            } else {
                Point::new(b.x, gb)
            };
            let (nx, nz) = normal_at(ground, contact.x);
            return Ok(Some(CollisionReport {
                contact,
                last_free: a,
                normal_x: nx,
                normal_z: nz,
                sample_index: i,
            }));
        }
    }
    Ok(None)
}

/// One executed trajectory piece with its state tags, for traces and plots.
#[derive(Debug, Clone)]
pub struct TraceSegment {
    pub state: &'static str,
    pub source: SegmentSource,
    pub samples: Vec<Point>,
}

impl TraceSegment {
    pub fn arc_length(&self) -> f64 {
        self.samples.windows(2).map(|w| w[0].distance(&w[1])).sum()
    }
}

/// Where the episode ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FinalState {
    Support,
    Returned,
}

impl FinalState {
    pub fn label(&self) -> &'static str {
        match self {
            FinalState::Support => "support",
            FinalState::Returned => "returned",
        }
    }
}

/// Per-episode metrics and the executed trace.
#[derive(Debug, Clone)]
pub struct EpisodeResult {
    /// Forward progress: x at the final support position minus the start x.
    pub step_length: f64,
    /// Contact events that did not immediately provide support.
    pub collisions: u32,
    /// All contact events, including the supported landing.
    pub contacts: u32,
    /// Total executed arc length over every segment, including the return.
    pub trajectory_length: f64,
    /// The foot entered support inside the landing band.
    pub success: bool,
    pub adjustments: u32,
    pub final_state: FinalState,
    pub final_position: Point,
    pub trace: Vec<TraceSegment>,
}

impl EpisodeResult {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.step_length,
            self.collisions,
            self.contacts,
            self.trajectory_length,
            self.success,
            self.adjustments,
            self.final_state.label(),
            format_args!("{}|{}", self.final_position.x, self.final_position.z),
        )
    }
}

/// Serialize an episode trace as CSV, one row per executed sample.
pub fn trace_to_csv(result: &EpisodeResult) -> String {
    let mut out = String::from("segment,state,source,x,z\n");
    for (k, seg) in result.trace.iter().enumerate() {
        for p in &seg.samples {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                k,
                seg.state,
                seg.source.label(),
                p.x,
                p.z
            ));
        }
    }
    out
}

/// Run one step episode: build the local map for the strategy and execute
/// the state-machine loop against the ground truth.
pub fn execute_step(
    truth: &dyn Ground,
    strategy: Strategy,
    cmd: &StepCommand,
    input_terrain: Option<&dyn Ground>,
    cfg: &EpisodeConfig,
) -> Result<EpisodeResult, SimError> {
    let mut map = LocalMap::new(cfg.region, cfg.resolution)?;
    if strategy == Strategy::Apf {
        if let Some(input) = input_terrain {
            // Keep the rasterized top face at or below the believed
            // surface so planned descents always reach real ground.
            map.fill_below_curve(
                |x| input.height(x),
                cfg.resolution * 0.5,
                Provenance::Terrain,
            );
        }
    }
    execute_step_on_map(truth, strategy, cmd, &mut map, cfg)
}

/// Episode executor over a caller-owned map. The map keeps any obstacle
/// cells it already holds (terrain input, predictions from an earlier
/// attempt of the same step), and predictions made here stay in it.
pub fn execute_step_on_map(
    truth: &dyn Ground,
    strategy: Strategy,
    cmd: &StepCommand,
    map: &mut LocalMap,
    cfg: &EpisodeConfig,
) -> Result<EpisodeResult, SimError> {
    let band = cmd.landing_band(map);
    let mut planner = match strategy {
        Strategy::Apf => {
            let p = ApfPlanner::new(cfg.apf)?;
            p.prepare_map(map, cmd);
            Some(p)
        }
        Strategy::Blind => None,
    };
    let mut field_active = planner.is_some();

    let mut state = LegState::Support;
    let mut foot = cmd.start;
    let mut collisions = 0u32;
    let mut contacts = 0u32;
    let mut adjustments = 0u32;
    let mut trace: Vec<TraceSegment> = Vec::new();
    let mut trajectory_length = 0.0f64;

    let record = |trace: &mut Vec<TraceSegment>,
                      total: &mut f64,
                      state: &LegState,
                      source: SegmentSource,
                      samples: Vec<Point>| {
        let seg = TraceSegment {
            state: state.label(),
            source,
            samples,
        };
        *total += seg.arc_length();
        trace.push(seg);
    };

    // Grant the initial trajectory.
    let (s, action) = fsm::transition(state, &FsmEvent::TrajectoryGranted, &band, &cfg.fsm)?;
    state = s;
    debug_assert_eq!(action, FsmAction::PlanInitial);

    let mut pending: VecDeque<TrajectorySegment> = VecDeque::new();
    // After a stalled field descent executes clear of contact, continue
    // with a blind launch from the stall point without consuming budget.
    let mut stall_followup = false;

    match (&mut planner, field_active) {
        (Some(p), _) => {
            let out = p.plan_initial(map, cmd)?;
            stall_followup = out.stalled;
            pending.extend(out.segments);
        }
        _ => pending.push_back(fsm::plan_initial(map, cmd, &cfg.fsm)?),
    }

    let mut rounds = 0usize;
    loop {
        rounds += 1;
        if rounds > 96 {
            return Err(SimError::RunnerStuck);
        }

        // Execute the pending plan until contact or exhaustion.
        let mut stop: Option<StopEvent> = None;
        while let Some(seg) = pending.pop_front() {
            let in_return = matches!(state, LegState::Return { .. });
            let tol = if in_return { 0.0 } else { cfg.contact_tol };
            match sweep_collision(truth, &seg, tol)? {
                None => {
                    foot = seg.end();
                    record(
                        &mut trace,
                        &mut trajectory_length,
                        &state,
                        seg.source(),
                        seg.samples().to_vec(),
                    );
                }
                Some(rep) => {
                    // The foot stops on the boundary: the executed piece
                    // runs to the last clear sample plus the contact hop.
                    let mut executed: Vec<Point> = seg.samples()[..rep.sample_index].to_vec();
                    executed.push(rep.contact);
                    record(
                        &mut trace,
                        &mut trajectory_length,
                        &state,
                        seg.source(),
                        executed,
                    );
                    foot = rep.contact;
                    pending.clear();
                    contacts += 1;
                    let force = force_from_normal(&rep);

                    if !in_return && fsm::detect_support(&foot, &band, &force, &cfg.fsm) {
                        return Ok(EpisodeResult {
                            step_length: foot.x - cmd.start.x,
                            collisions,
                            contacts,
                            trajectory_length,
                            success: true,
                            adjustments,
                            final_state: FinalState::Support,
                            final_position: foot,
                            trace,
                        });
                    }

                    collisions += 1;
                    if in_return {
                        // Obstructed return: lift again from the stop and
                        // retrace. Backward progress is monotone, so this
                        // terminates within the round budget.
                        let [lift, swing] = fsm::plan_return(map, foot, cmd)?;
                        pending.push_back(lift);
                        pending.push_back(swing);
                    } else {
                        stop = Some(StopEvent {
                            position: foot,
                            force: Some(force),
                            completed: false,
                        });
                    }
                    break;
                }
            }
        }

        if stop.is_none() && !pending.is_empty() {
            continue; // return replanned; keep executing
        }

        let stop = match stop {
            Some(s) => s,
            None => {
                // Plan exhausted without contact.
                if stall_followup {
                    stall_followup = false;
                    field_active = false;
                    match fsm::plan_launch(map, foot, cmd.target.x, &cfg.fsm, SegmentSource::Fallback)
                    {
                        Ok(seg) => pending.push_back(seg),
                        Err(FsmError::NegativeStepHeight(_)) => {
                            state = LegState::Return {
                                stage: fsm::ReturnStage::Lift,
                            };
                            let [lift, swing] = fsm::plan_return(map, foot, cmd)?;
                            pending.push_back(lift);
                            pending.push_back(swing);
                        }
                        Err(e) => return Err(e.into()),
                    }
                    continue;
                }
                if matches!(state, LegState::Return { .. }) {
                    let (s, _) = fsm::transition(state, &FsmEvent::ReturnComplete, &band, &cfg.fsm)?;
                    state = s;
                    debug_assert_eq!(state, LegState::Support);
                    debug_assert!(foot.distance(&cmd.start) < 1e-9);
                    return Ok(EpisodeResult {
                        step_length: foot.x - cmd.start.x,
                        collisions,
                        contacts,
                        trajectory_length,
                        success: false,
                        adjustments,
                        final_state: FinalState::Returned,
                        final_position: foot,
                        trace,
                    });
                }
                StopEvent {
                    position: foot,
                    force: None,
                    completed: true,
                }
            }
        };

        // Feed the stop to the state machine and plan the follow-up.
        let (next_state, action) = fsm::transition(state, &FsmEvent::Stopped(stop), &band, &cfg.fsm)?;
        state = next_state;
        match action {
            FsmAction::Settled => {
                // Completed stops carry no force, so the machine cannot
                // settle here; guarded for totality.
                return Err(SimError::RunnerStuck);
            }
            FsmAction::PlanReturn => {
                let [lift, swing] = fsm::plan_return(map, foot, cmd)?;
                pending.push_back(lift);
                pending.push_back(swing);
            }
            FsmAction::PlanAdjustment(case) => {
                if let LegState::TentativeAdjustment { count, .. } = state {
                    adjustments = count;
                }
                let planned: Result<Vec<TrajectorySegment>, SimError> = (|| {
                    if field_active
                        && matches!(
                            case,
                            AdjustmentCase::RelaunchForward | AdjustmentCase::ClimbOver
                        )
                    {
                        let out = planner.as_mut().unwrap().replan_after(
                            map,
                            case,
                            &stop,
                            cmd,
                        )?;
                        stall_followup = out.stalled;
                        return Ok(out.segments);
                    }
                    Ok(match case {
                        AdjustmentCase::DropToSupport => vec![fsm::plan_drop(map, foot)?],
                        AdjustmentCase::SlideToEdge => {
                            let backward = stop.force.map(|f| f.x < 0.0).unwrap_or(true);
                            vec![fsm::plan_slide(map, foot, cmd, backward)?]
                        }
                        AdjustmentCase::RelaunchForward => {
                            vec![fsm::plan_relaunch(map, foot, cmd, &cfg.fsm)?]
                        }
                        AdjustmentCase::ClimbOver => {
                            fsm::plan_climb_over(map, foot, cmd, &cfg.fsm)?.to_vec()
                        }
                    })
                })();
                match planned {
                    Ok(segs) => pending.extend(segs),
                    Err(
                        SimError::Fsm(FsmError::NegativeStepHeight(_))
                        | SimError::Fsm(FsmError::TargetOutsideMap(_))
                        | SimError::Apf(ApfError::NoFreeGoal)
                        | SimError::Apf(ApfError::StartBlocked(_)),
                    ) => {
                        // Planning dead end: abort the step via the return
                        // maneuver.
                        state = LegState::Return {
                            stage: fsm::ReturnStage::Lift,
                        };
                        let [lift, swing] = fsm::plan_return(map, foot, cmd)?;
                        pending.push_back(lift);
                        pending.push_back(swing);
                    }
                    Err(e) => return Err(e),
                }
            }
            FsmAction::PlanInitial => unreachable!("grants only leave support"),
        }
    }
}

/// Feed-forward baseline: the initial trajectory alone, success only when
/// its first contact supports the foot inside the landing band.
pub fn baseline_success(
    truth: &dyn Ground,
    cmd: &StepCommand,
    cfg: &EpisodeConfig,
) -> Result<bool, SimError> {
    let map = LocalMap::new(cfg.region, cfg.resolution)?;
    let band = cmd.landing_band(&map);
    let seg = fsm::plan_initial(&map, cmd, &cfg.fsm)?;
    Ok(match sweep_collision(truth, &seg, cfg.contact_tol)? {
        Some(rep) => {
            let force = force_from_normal(&rep);
            fsm::detect_support(&rep.contact, &band, &force, &cfg.fsm)
        }
        None => false,
    })
}

/// SplitMix64 seed derivation so batches can fan out deterministically.
pub fn mix_seed(parts: &[u64]) -> u64 {
    let mut x = 0x9E3779B97F4A7C15u64;
    for &p in parts {
        x ^= p.wrapping_add(0x9E3779B97F4A7C15).wrapping_mul(0xBF58476D1CE4E5B9);
        x = x.wrapping_add(0x9E3779B97F4A7C15);
        let mut z = x;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        x = z ^ (z >> 31);
    }
    x
}

/// One benchmark row request: terrain amplitudes, plus the input-error
/// magnitude for the terrain-aware strategy.
#[derive(Debug, Clone)]
pub struct BatchParams {
    pub h_up: f64,
    pub h_down: f64,
    pub delta_h: Option<f64>,
}

/// Aggregated benchmark row.
#[derive(Debug, Clone)]
pub struct BatchRow {
    pub params: BatchParams,
    pub strategy: Strategy,
    pub mean_step_length: f64,
    pub mean_collisions: f64,
    pub mean_trajectory_length: f64,
    pub success_rate: f64,
    pub baseline_success_rate: Option<f64>,
}

pub const RESULTS_CSV_HEADER: &str =
    "param,h_up,h_down,delta_h,step_length,collisions,trajectory_length,success_rate,baseline_success_rate";

pub fn results_to_csv(rows: &[BatchRow]) -> String {
    let mut out = String::from(RESULTS_CSV_HEADER);
    out.push('\n');
    for row in rows {
        let delta = row
            .params
            .delta_h
            .map(|d| d.to_string())
            .unwrap_or_default();
        let baseline = row
            .baseline_success_rate
            .map(|b| b.to_string())
            .unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            row.strategy.label(),
            row.params.h_up,
            row.params.h_down,
            delta,
            row.mean_step_length,
            row.mean_collisions,
            row.mean_trajectory_length,
            row.success_rate,
            baseline,
        ));
    }
    out
}

/// Run `n_terrains` seeded episodes per parameter row and aggregate.
/// Episodes fan out across workers; results are folded in episode-index
/// order so the aggregate is independent of scheduling.
pub fn run_batch(
    strategy: Strategy,
    rows: &[BatchParams],
    n_terrains: usize,
    base_seed: u64,
    cfg: &EpisodeConfig,
) -> Result<Vec<BatchRow>, SimError> {
    let cmd = EpisodeConfig::benchmark_command();
    let mut out = Vec::with_capacity(rows.len());
    for (row_idx, params) in rows.iter().enumerate() {
        let episodes: Result<Vec<(EpisodeResult, Option<bool>)>, SimError> = (0..n_terrains)
            .into_par_iter()
            .map(|i| {
                let terrain_seed = mix_seed(&[base_seed, row_idx as u64, i as u64, 0]);
                let truth = TerrainProfile::random(TerrainParams {
                    h_up: params.h_up,
                    h_down: params.h_down,
                    seed: terrain_seed,
                });
                let result = match (strategy, params.delta_h) {
                    (Strategy::Apf, delta) => {
                        let err_seed = mix_seed(&[base_seed, row_idx as u64, i as u64, 1]);
                        let input = truth.perturbed(delta.unwrap_or(0.0), err_seed);
                        execute_step(&truth, strategy, &cmd, Some(&input), cfg)?
                    }
                    (Strategy::Blind, _) => execute_step(&truth, strategy, &cmd, None, cfg)?,
                };
                let baseline = match strategy {
                    Strategy::Blind => Some(baseline_success(&truth, &cmd, cfg)?),
                    Strategy::Apf => None,
                };
                Ok((result, baseline))
            })
            .collect();
        let episodes = episodes?;

        let n = n_terrains as f64;
        let mean = |f: &dyn Fn(&EpisodeResult) -> f64| -> f64 {
            episodes.iter().map(|(r, _)| f(r)).sum::<f64>() / n
        };
        let baseline_success_rate = match strategy {
            Strategy::Blind => Some(
                episodes
                    .iter()
                    .filter(|(_, b)| b.unwrap_or(false))
                    .count() as f64
                    / n,
            ),
            Strategy::Apf => None,
        };
        out.push(BatchRow {
            params: params.clone(),
            strategy,
            mean_step_length: mean(&|r| r.step_length),
            mean_collisions: mean(&|r| r.collisions as f64),
            mean_trajectory_length: mean(&|r| r.trajectory_length),
            success_rate: episodes.iter().filter(|(r, _)| r.success).count() as f64 / n,
            baseline_success_rate,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::terrain::BASELINE_Z;
    use approx::assert_relative_eq;

    struct Line {
        slope: f64,
        intercept: f64,
    }

    impl Ground for Line {
        fn height(&self, x: f64) -> f64 {
            self.slope * x + self.intercept
        }
        fn slope(&self, _x: f64) -> f64 {
            self.slope
        }
    }

    #[test]
    fn sweep_flat_vertical_descent() {
        let flat = TerrainProfile::flat();
        let seg = TrajectorySegment::second_half(
            Point::new(8.0, 4.0),
            0.0,
            4.0,
            0.025,
            SegmentSource::DropToSupport,
        );
        let rep = sweep_collision(&flat, &seg, 1e-3).unwrap().unwrap();
        assert_relative_eq!(rep.contact.x, 8.0, epsilon = 1e-6);
        assert_relative_eq!(rep.contact.z, 3.0, epsilon = 1e-3);
        assert_relative_eq!(rep.normal_x, 0.0, epsilon = 1e-9);
        assert_relative_eq!(rep.normal_z, 1.0, epsilon = 1e-9);
        assert!(rep.last_free.z >= 3.0);
    }

    #[test]
    fn sweep_slope_normal() {
        // 45-degree rising boundary.
        let line = Line {
            slope: 1.0,
            intercept: -5.0,
        };
        let seg = TrajectorySegment::straight(
            Point::new(4.0, 2.0),
            Point::new(9.0, 2.0),
            0.02,
            SegmentSource::Initial,
        );
        let rep = sweep_collision(&line, &seg, 1e-3).unwrap().unwrap();
        let s = 2.0f64.sqrt() / 2.0;
        assert_relative_eq!(rep.normal_x, -s, epsilon = 1e-9);
        assert_relative_eq!(rep.normal_z, s, epsilon = 1e-9);
        assert_relative_eq!(rep.contact.x, 7.0, epsilon = 2e-3);
    }

    #[test]
    fn sweep_clear_segment_and_launch_exemption() {
        let flat = TerrainProfile::flat();
        let seg = TrajectorySegment::straight(
            Point::new(0.0, 5.0),
            Point::new(8.0, 5.0),
            0.025,
            SegmentSource::Initial,
        );
        assert!(sweep_collision(&flat, &seg, 1e-3).unwrap().is_none());

        // Launch exactly on the surface is legal; starting below is not.
        let launch = TrajectorySegment::full_cycloid(
            Point::new(0.0, 3.0),
            8.0,
            1.5,
            0.025,
            SegmentSource::Initial,
        );
        assert!(sweep_collision(&flat, &launch, 1e-3).unwrap().is_none());
        let buried = TrajectorySegment::straight(
            Point::new(0.0, 2.5),
            Point::new(8.0, 2.5),
            0.025,
            SegmentSource::Initial,
        );
        assert!(sweep_collision(&flat, &buried, 1e-3).is_err());
    }

    #[test]
    fn sweep_detects_single_spike() {
        // One raised knot forms a spike the segment must not tunnel through.
        let mut knots: Vec<(f64, f64)> = (0..=14).map(|i| (i as f64, 3.0)).collect();
        knots[6].1 = 5.5;
        let spike = TerrainProfile::from_knots(knots);
        let seg = TrajectorySegment::full_cycloid(
            Point::new(0.0, 3.0),
            8.0,
            1.5,
            0.025,
            SegmentSource::Initial,
        );
        let rep = sweep_collision(&spike, &seg, 1e-3).unwrap().unwrap();
        assert!(rep.contact.x > 4.0 && rep.contact.x < 6.5);
        // The spike rises toward +x at the hit: obstacle component negative.
        assert!(rep.normal_x < 0.0);
    }

    #[test]
    fn force_translation() {
        let rep = CollisionReport {
            contact: Point::new(0.0, 0.0),
            last_free: Point::new(0.0, 0.1),
            normal_x: -0.6,
            normal_z: 0.8,
            sample_index: 1,
        };
        let f = force_from_normal(&rep);
        assert!(f.support_dominant());
        let rep = CollisionReport {
            normal_x: -1.0,
            normal_z: 0.0,
            ..rep
        };
        assert!(force_from_normal(&rep).obstacle_dominant());
        assert!(force_from_normal(&rep).x < 0.0);
    }

    #[test]
    fn blind_flat_episode_lands_on_target() {
        let flat = TerrainProfile::flat();
        let cfg = EpisodeConfig::default();
        let cmd = EpisodeConfig::benchmark_command();
        let result = execute_step(&flat, Strategy::Blind, &cmd, None, &cfg).unwrap();
        assert!(result.success);
        assert_eq!(result.contacts, 1);
        assert_eq!(result.collisions, 0);
        assert_eq!(result.adjustments, 0);
        assert_relative_eq!(result.step_length, 8.0, epsilon = 0.01);
        assert_relative_eq!(result.final_position.z, BASELINE_Z, epsilon = 1e-3);
        assert_eq!(result.final_state, FinalState::Support);
    }

    #[test]
    fn apf_flat_episode_with_exact_input() {
        let flat = TerrainProfile::flat();
        let cfg = EpisodeConfig::default();
        let cmd = EpisodeConfig::benchmark_command();
        let result = execute_step(&flat, Strategy::Apf, &cmd, Some(&flat), &cfg).unwrap();
        assert!(result.success, "apf flat episode failed: {result:?}");
        assert_eq!(result.collisions, 0);
        assert!(result.final_position.x >= 7.0 && result.final_position.x <= 9.0);
        // The supported landing contact is the only contact.
        assert_eq!(result.contacts, 1);
    }

    #[test]
    fn impossible_wall_returns_to_start() {
        // A wall far above the window ceiling spans the landing band.
        let mut knots: Vec<(f64, f64)> = (0..=14).map(|i| (i as f64, 3.0)).collect();
        for k in 5..=11 {
            knots[k].1 = 60.0;
        }
        let wall = TerrainProfile::from_knots(knots);
        let cfg = EpisodeConfig::default();
        let cmd = EpisodeConfig::benchmark_command();
        let result = execute_step(&wall, Strategy::Blind, &cmd, None, &cfg).unwrap();
        assert!(!result.success);
        assert_eq!(result.final_state, FinalState::Returned);
        assert!(result.final_position.distance(&cmd.start) < 1e-9);
        assert_eq!(result.adjustments, cfg.fsm.n_limit);
        assert_relative_eq!(result.step_length, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn trajectory_length_matches_trace() {
        let truth = TerrainProfile::random(TerrainParams {
            h_up: 4.0,
            h_down: 0.0,
            seed: 5,
        });
        let cfg = EpisodeConfig::default();
        let cmd = EpisodeConfig::benchmark_command();
        let result = execute_step(&truth, Strategy::Blind, &cmd, None, &cfg).unwrap();
        let total: f64 = result.trace.iter().map(|s| s.arc_length()).sum();
        assert_relative_eq!(result.trajectory_length, total, epsilon = 1e-9);
    }

    #[test]
    fn batch_rows_aggregate_deterministically() {
        let cfg = EpisodeConfig::default();
        let rows = vec![BatchParams {
            h_up: 2.0,
            h_down: 0.0,
            delta_h: None,
        }];
        let a = run_batch(Strategy::Blind, &rows, 8, 11, &cfg).unwrap();
        let b = run_batch(Strategy::Blind, &rows, 8, 11, &cfg).unwrap();
        assert_eq!(results_to_csv(&a), results_to_csv(&b));
        assert!(a[0].baseline_success_rate.is_some());
        let csv = results_to_csv(&a);
        assert!(csv.starts_with(RESULTS_CSV_HEADER));
    }

    #[test]
    fn step_face_contact_reports_wall_normal() {
        struct Step;
        impl Ground for Step {
            fn height(&self, x: f64) -> f64 {
                if x >= 5.0 {
                    5.0
                } else {
                    0.0
                }
            }
            fn slope(&self, _x: f64) -> f64 {
                0.0
            }
            fn jumps(&self) -> &[f64] {
                &[5.0]
            }
        }
        let seg = TrajectorySegment::straight(
            Point::new(3.0, 2.0),
            Point::new(7.0, 2.0),
            0.05,
            SegmentSource::Initial,
        );
        let rep = sweep_collision(&Step, &seg, 1e-3).unwrap().unwrap();
        assert_relative_eq!(rep.normal_x, -1.0);
        assert_relative_eq!(rep.normal_z, 0.0);
        assert_relative_eq!(rep.contact.x, 5.0, epsilon = 1e-9);
        // Flying over the face is clear.
        let over = TrajectorySegment::straight(
            Point::new(3.0, 6.0),
            Point::new(7.0, 6.0),
            0.05,
            SegmentSource::Initial,
        );
        assert!(sweep_collision(&Step, &over, 1e-3).unwrap().is_none());
    }
}
