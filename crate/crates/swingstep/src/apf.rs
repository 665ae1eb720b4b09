//! Terrain-aware planning on an attractive/repulsive potential over the
//! local map, with force-feedback terrain prediction.
//!
//! The attractive term is the squared distance to the step target; the
//! repulsive term activates within a threshold distance of the nearest
//! obstacle cell. Paths are extracted as monotone descent routes over the
//! grid: a steepest-first depth-first search that only ever steps to a
//! strictly lower-potential free neighbor, so the potential decreases
//! along every returned path. When no monotone route exists the planner
//! reports a stall and the caller falls back to the blind strategy.
//!
//! Predictions: a support-dominant contact outside the landing band marks
//! the ground near the stop as locally flat; an obstacle-dominant contact
//! inserts an inclined wedge that steers replans to retreat, rise, and
//! cross.

use thiserror::Error;

use crate::cycloid::{SegmentSource, TrajectorySegment};
use crate::fsm::{AdjustmentCase, StepCommand, StopEvent};
use crate::geometry::{
    EndpointInterval, GeometryError, LocalMap, ObstaclePatch, Point, Provenance,
};

#[derive(Debug, Error, PartialEq)]
pub enum ApfError {
    #[error("bad config: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("map resolution {resolution} exceeds repulsion threshold {d0}")]
    ResolutionTooCoarse { resolution: f64, d0: f64 },
    #[error("no free goal cell inside the landing band")]
    NoFreeGoal,
    #[error("start column fully blocked at x={0}")]
    StartBlocked(f64),
}

/// Field-planner tuning. Defaults: attractive gain 10, repulsive gain 1000,
/// repulsion threshold 0.05, preset-block height 0.5, prediction half-width
/// 0.5, prediction incline 45 degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApfConfig {
    pub zeta: f64,
    pub eta: f64,
    pub d0: f64,
    pub h_limit: f64,
    pub w_pre: f64,
    /// Prediction incline angle in radians, within (0, pi/2).
    pub theta_pre: f64,
    pub max_descent_steps: usize,
    /// Use the squared repulsive form instead of the linear one.
    pub squared_repulsion: bool,
}

impl ApfConfig {
    pub fn validated(self) -> Result<Self, ApfError> {
        if self.zeta <= 0.0 {
            return Err(ApfError::BadConfig(format!(
                "attractive gain must be positive, got {}",
                self.zeta
            )));
        }
        if self.eta < 0.0 {
            return Err(ApfError::BadConfig(format!(
                "repulsive gain must be nonnegative, got {}",
                self.eta
            )));
        }
        if self.d0 <= 0.0 {
            return Err(ApfError::BadConfig(format!(
                "repulsion threshold must be positive, got {}",
                self.d0
            )));
        }
        if self.h_limit < 0.0 || self.w_pre <= 0.0 {
            return Err(ApfError::BadConfig(
                "preset height must be >= 0 and prediction half-width > 0".into(),
            ));
        }
        if !(self.theta_pre > 0.0 && self.theta_pre < std::f64::consts::FRAC_PI_2) {
            return Err(ApfError::BadConfig(format!(
                "prediction incline must be in (0, 90) degrees, got {} rad",
                self.theta_pre
            )));
        }
        Ok(self)
    }
}

impl Default for ApfConfig {
    fn default() -> Self {
        ApfConfig {
            zeta: 10.0,
            eta: 1000.0,
            d0: 0.05,
            h_limit: 0.5,
            w_pre: 0.5,
            theta_pre: 45f64.to_radians(),
            max_descent_steps: 500_000,
            squared_repulsion: false,
        }
    }
}

/// Attractive potential at `p`: gain times squared Euclidean distance to
/// the step target.
pub fn attractive(p: &Point, target: &Point, zeta: f64) -> f64 {
    zeta * ((p.x - target.x).powi(2) + (p.z - target.z).powi(2))
}

/// Repulsive potential at `p` from the nearest obstacle cell. Zero beyond
/// the threshold distance; infinite on an obstacle cell (impassable).
pub fn repulsive(p: &Point, map: &LocalMap, eta: f64, d0: f64, squared: bool) -> f64 {
    let rho = map.nearest_obstacle_within(p, d0);
    repulsion_from_distance(rho, eta, d0, squared)
}

fn repulsion_from_distance(rho: f64, eta: f64, d0: f64, squared: bool) -> f64 {
    if rho <= 0.0 {
        return f64::INFINITY;
    }
    if rho > d0 {
        return 0.0;
    }
    let gap = 1.0 / rho - 1.0 / d0;
    if squared {
        0.5 * eta * gap * gap
    } else {
        eta * gap
    }
}

/// Anti-drag block preset between start and target at planning time, so
/// the initial path arcs instead of scraping along flat ground. Returns
/// nothing when the step is too short to fit the block.
pub fn preset_obstacle(cmd: &StepCommand, h_limit: f64) -> Option<ObstaclePatch> {
    let x_lo = cmd.start.x + h_limit;
    let x_hi = cmd.target.x - h_limit;
    (x_lo <= x_hi).then_some(ObstaclePatch::Block {
        x_lo,
        x_hi,
        z_lo: cmd.start.z,
        z_hi: cmd.start.z + h_limit,
    })
}

/// Locally-flat ground hypothesis around a support-dominant stop.
pub fn predict_flat(stop: &Point, w_pre: f64) -> ObstaclePatch {
    ObstaclePatch::Block {
        x_lo: stop.x - w_pre,
        x_hi: stop.x + w_pre,
        z_lo: f64::NEG_INFINITY,
        z_hi: stop.z,
    }
}

/// Inclined-wall hypothesis around an obstacle-dominant stop. The wedge
/// rises in the direction the obstacle force opposes: toward +x when the
/// force pushes back (negative x component), mirrored otherwise.
pub fn predict_incline(stop: &Point, w_pre: f64, theta_pre: f64, force_x_negative: bool) -> ObstaclePatch {
    let slope = if force_x_negative {
        theta_pre.tan()
    } else {
        -theta_pre.tan()
    };
    ObstaclePatch::Wedge {
        x_lo: stop.x - w_pre,
        x_hi: stop.x + w_pre,
        slope,
        anchor_x: stop.x,
        anchor_z: stop.z,
    }
}

/// How a descent ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DescentOutcome {
    Reached,
    LocalMinimum,
}

/// A cell is passable for route extraction when it is free and no terrain
/// cell touches it (8-neighborhood). The one-cell standoff keeps routes
/// clear of the real surface the terrain cells rasterize; preset and
/// predicted patches are planner constructs and block only themselves.
fn passable_in(map: &LocalMap, i: usize, j: usize) -> bool {
    if map.is_obstacle(i, j) {
        return false;
    }
    let (nx, nz) = map.dims();
    for dj in -1isize..=1 {
        for di in -1isize..=1 {
            let ni = i as isize + di;
            let nj = j as isize + dj;
            if ni < 0 || nj < 0 || ni >= nx as isize || nj >= nz as isize {
                continue;
            }
            if map.cell(ni as usize, nj as usize) == Some(Provenance::Terrain) {
                return false;
            }
        }
    }
    true
}

/// Per-cell potential over the map discretization. Obstacle cells carry
/// infinite potential. Cells touching an obstacle (8-neighborhood) keep
/// their finite potential but are masked impassable for route extraction,
/// so routes keep at least one cell of clearance and never graze the
/// rasterized surface.
#[derive(Debug, Clone)]
pub struct PotentialGrid {
    nx: usize,
    nz: usize,
    u: Vec<f64>,
    passable: Vec<bool>,
    goal_cell: (usize, usize),
    goal: Point,
}

/// Fixed neighbor stencil, preference order for ties.
const NEIGHBORS: [(isize, isize); 8] = [
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
    (0, -1),
    (1, -1),
];

impl PotentialGrid {
    /// Build the potential toward `target`. When the target cell is an
    /// obstacle (erroneous terrain input) the goal snaps to the free cell
    /// inside the landing band with the lowest attractive potential.
    pub fn build(
        map: &LocalMap,
        target: Point,
        band: &EndpointInterval,
        cfg: &ApfConfig,
    ) -> Result<Self, ApfError> {
        if map.resolution() > cfg.d0 {
            return Err(ApfError::ResolutionTooCoarse {
                resolution: map.resolution(),
                d0: cfg.d0,
            });
        }
        let (nx, nz) = map.dims();
        let ti = map.column_of(target.x);
        let tj = map.row_of(target.z);
        let (goal_cell, goal) = if passable_in(map, ti, tj) {
            ((ti, tj), target)
        } else {
            // Target cell buried or grazing the surface: snap to the
            // passable cell inside the landing band closest to the target.
            let mut best: Option<((usize, usize), f64)> = None;
            let i_lo = map.column_of(band.x_lo());
            let i_hi = map.column_of(band.x_hi());
            for i in i_lo..=i_hi {
                for j in 0..nz {
                    if !passable_in(map, i, j) {
                        continue;
                    }
                    let c = map.cell_center(i, j);
                    if !band.contains(&c) {
                        continue;
                    }
                    let ua = attractive(&c, &target, cfg.zeta);
                    if best.map(|(_, b)| ua < b).unwrap_or(true) {
                        best = Some(((i, j), ua));
                    }
                }
            }
            let ((i, j), _) = best.ok_or(ApfError::NoFreeGoal)?;
            ((i, j), map.cell_center(i, j))
        };

        let mut grid = PotentialGrid {
            nx,
            nz,
            u: vec![0.0; nx * nz],
            passable: vec![true; nx * nz],
            goal_cell,
            goal,
        };
        grid.recompute_window(map, cfg, 0, nx - 1, 0, nz - 1);
        Ok(grid)
    }

    fn recompute_window(
        &mut self,
        map: &LocalMap,
        cfg: &ApfConfig,
        i_lo: usize,
        i_hi: usize,
        j_lo: usize,
        j_hi: usize,
    ) {
        for j in j_lo..=j_hi {
            for i in i_lo..=i_hi {
                let k = j * self.nx + i;
                self.passable[k] = passable_in(map, i, j);
                if map.is_obstacle(i, j) {
                    self.u[k] = f64::INFINITY;
                    continue;
                }
                let c = map.cell_center(i, j);
                let rho = map.nearest_obstacle_within(&c, cfg.d0);
                self.u[k] = attractive(&c, &self.goal, cfg.zeta)
                    + repulsion_from_distance(rho, cfg.eta, cfg.d0, cfg.squared_repulsion);
            }
        }
    }

    /// Refresh the grid after `patch` was rasterized into the map. Only the
    /// patch bounding box inflated by the repulsion threshold needs
    /// recomputation; the attractive term is unchanged elsewhere. Falls
    /// back to a full rebuild when the patch swallowed the goal cell.
    pub fn apply_patch(
        &mut self,
        map: &LocalMap,
        patch: &ObstaclePatch,
        target: Point,
        band: &EndpointInterval,
        cfg: &ApfConfig,
    ) -> Result<(), ApfError> {
        if map.is_obstacle(self.goal_cell.0, self.goal_cell.1) {
            *self = Self::build(map, target, band, cfg)?;
            return Ok(());
        }
        let (x_lo, x_hi, z_lo, z_hi) = patch.bounds();
        let pad = cfg.d0 + 2.0 * map.resolution();
        let region = map.region();
        let i_lo = map.column_of((x_lo - pad).max(region.x_min));
        let i_hi = map.column_of((x_hi + pad).min(region.x_max));
        let j_lo = map.row_of((z_lo - pad).max(region.z_min));
        let j_hi = map.row_of((z_hi + pad).min(region.z_max));
        self.recompute_window(map, cfg, i_lo, i_hi, j_lo, j_hi);
        Ok(())
    }

    pub fn goal(&self) -> Point {
        self.goal
    }

    pub fn goal_cell(&self) -> (usize, usize) {
        self.goal_cell
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.u[j * self.nx + i]
    }

    pub fn is_free(&self, i: usize, j: usize) -> bool {
        self.u[j * self.nx + i].is_finite()
    }

    pub fn is_passable(&self, i: usize, j: usize) -> bool {
        self.passable[j * self.nx + i]
    }

    /// First passable cell at or above the row containing `p` in its
    /// column. A foot resting on an obstacle boundary belongs to the free
    /// band above it.
    fn free_cell_at(&self, map: &LocalMap, p: &Point) -> Result<(usize, usize), ApfError> {
        let i = map.column_of(p.x);
        let mut j = map.row_of(p.z);
        while j < self.nz && !self.is_passable(i, j) {
            j += 1;
        }
        if j >= self.nz {
            return Err(ApfError::StartBlocked(p.x));
        }
        Ok((i, j))
    }

    /// Monotone descent route from `start` to the goal cell: a
    /// steepest-first depth-first search over strictly-lower-potential free
    /// neighbors. The potential strictly decreases along the returned cell
    /// path. When the goal is unreachable this way, returns the greedy
    /// prefix (steepest strictly-descending walk) and a local-minimum
    /// outcome.
    pub fn descend_cells(
        &self,
        map: &LocalMap,
        start: Point,
        max_steps: usize,
    ) -> Result<(Vec<(usize, usize)>, DescentOutcome), ApfError> {
        let start_cell = self.free_cell_at(map, &start)?;
        if start_cell == self.goal_cell {
            return Ok((vec![start_cell], DescentOutcome::Reached));
        }

        let idx = |c: (usize, usize)| c.1 * self.nx + c.0;
        let mut visited = vec![false; self.nx * self.nz];
        let mut parent: Vec<u32> = vec![u32::MAX; self.nx * self.nz];
        let mut stack: Vec<(usize, usize)> = vec![start_cell];
        visited[idx(start_cell)] = true;
        let mut expansions = 0usize;
        let mut reached = false;

        let mut candidates: Vec<((usize, usize), f64, usize)> = Vec::with_capacity(8);
        while let Some(cell) = stack.pop() {
            if cell == self.goal_cell {
                reached = true;
                break;
            }
            expansions += 1;
            if expansions > max_steps {
                break;
            }
            let here = self.value(cell.0, cell.1);
            candidates.clear();
            for (order, (di, dj)) in NEIGHBORS.iter().enumerate() {
                let ni = cell.0 as isize + di;
                let nj = cell.1 as isize + dj;
                if ni < 0 || nj < 0 || ni >= self.nx as isize || nj >= self.nz as isize {
                    continue;
                }
                let n = (ni as usize, nj as usize);
                if visited[idx(n)] || !self.is_passable(n.0, n.1) {
                    continue;
                }
                let un = self.value(n.0, n.1);
                if un < here {
                    candidates.push((n, un, order));
                }
            }
            // Steepest first: push in reverse preference so the best
            // candidate pops next.
            candidates.sort_by(|a, b| {
                a.1.total_cmp(&b.1).then(a.2.cmp(&b.2))
            });
            for (n, _, _) in candidates.iter().rev() {
                visited[idx(*n)] = true;
                parent[idx(*n)] = idx(cell) as u32;
                stack.push(*n);
            }
        }

        if reached {
            let mut path = vec![self.goal_cell];
            let mut k = idx(self.goal_cell);
            while parent[k] != u32::MAX {
                k = parent[k] as usize;
                path.push((k % self.nx, k / self.nx));
            }
            path.reverse();
            debug_assert_eq!(path[0], start_cell);
            return Ok((path, DescentOutcome::Reached));
        }

        // Greedy strictly-descending walk as the stall prefix.
        let mut path = vec![start_cell];
        let mut cell = start_cell;
        for _ in 0..max_steps {
            let here = self.value(cell.0, cell.1);
            let mut best: Option<((usize, usize), f64, usize)> = None;
            for (order, (di, dj)) in NEIGHBORS.iter().enumerate() {
                let ni = cell.0 as isize + di;
                let nj = cell.1 as isize + dj;
                if ni < 0 || nj < 0 || ni >= self.nx as isize || nj >= self.nz as isize {
                    continue;
                }
                let n = (ni as usize, nj as usize);
                if !self.is_passable(n.0, n.1) {
                    continue;
                }
                let un = self.value(n.0, n.1);
                if un < here {
                    let better = match best {
                        None => true,
                        Some((_, ub, ob)) => un < ub || (un == ub && order < ob),
                    };
                    if better {
                        best = Some((n, un, order));
                    }
                }
            }
            match best {
                Some((n, _, _)) => {
                    path.push(n);
                    cell = n;
                }
                None => break,
            }
        }
        Ok((path, DescentOutcome::LocalMinimum))
    }

    /// Descent route as a sampled polyline: the continuous start point
    /// followed by the path cell centers.
    pub fn descend(
        &self,
        map: &LocalMap,
        start: Point,
        cfg: &ApfConfig,
    ) -> Result<(TrajectorySegment, DescentOutcome), ApfError> {
        let (cells, outcome) = self.descend_cells(map, start, cfg.max_descent_steps)?;
        let mut points = Vec::with_capacity(cells.len() + 1);
        points.push(start);
        for c in cells {
            let center = map.cell_center(c.0, c.1);
            if points.len() == 1 && center.distance(&start) < 1e-12 {
                continue;
            }
            points.push(center);
        }
        let seg = TrajectorySegment::polyline(
            points,
            map.resolution() * 0.5,
            SegmentSource::FieldDescent,
        );
        Ok((seg, outcome))
    }
}

/// What a planning call produced: trajectory segments to execute, and
/// whether the field stalled (the caller should hand the remainder of the
/// episode to the blind strategy).
#[derive(Debug)]
pub struct PlanOutcome {
    pub segments: Vec<TrajectorySegment>,
    pub stalled: bool,
}

/// Stateful per-episode field planner: owns the potential grid and updates
/// it as predictions are rasterized into the map.
pub struct ApfPlanner {
    cfg: ApfConfig,
    grid: Option<PotentialGrid>,
}

impl ApfPlanner {
    pub fn new(cfg: ApfConfig) -> Result<Self, ApfError> {
        Ok(ApfPlanner {
            cfg: cfg.validated()?,
            grid: None,
        })
    }

    pub fn config(&self) -> &ApfConfig {
        &self.cfg
    }

    pub fn grid(&self) -> Option<&PotentialGrid> {
        self.grid.as_ref()
    }

    /// Rasterize the anti-drag preset block for this command.
    pub fn prepare_map(&self, map: &mut LocalMap, cmd: &StepCommand) {
        if let Some(block) = preset_obstacle(cmd, self.cfg.h_limit) {
            map.add_patch(&block, Provenance::Preset);
        }
    }

    fn ensure_grid(&mut self, map: &LocalMap, cmd: &StepCommand) -> Result<(), ApfError> {
        if self.grid.is_none() {
            let band = cmd.landing_band(map);
            self.grid = Some(PotentialGrid::build(map, cmd.target, &band, &self.cfg)?);
        }
        Ok(())
    }

    /// Initial descent from the step start toward the target.
    pub fn plan_initial(
        &mut self,
        map: &LocalMap,
        cmd: &StepCommand,
    ) -> Result<PlanOutcome, ApfError> {
        self.ensure_grid(map, cmd)?;
        let grid = self.grid.as_ref().unwrap();
        let (seg, outcome) = grid.descend(map, cmd.start, &self.cfg)?;
        Ok(PlanOutcome {
            segments: vec![seg],
            stalled: outcome == DescentOutcome::LocalMinimum,
        })
    }

    /// Replan after an out-of-band contact: rasterize the matching terrain
    /// prediction, refresh the potential, and descend from the stop point.
    /// In-band cases are not handled here; they reuse the blind planners.
    pub fn replan_after(
        &mut self,
        map: &mut LocalMap,
        case: AdjustmentCase,
        stop: &StopEvent,
        cmd: &StepCommand,
    ) -> Result<PlanOutcome, ApfError> {
        debug_assert!(matches!(
            case,
            AdjustmentCase::RelaunchForward | AdjustmentCase::ClimbOver
        ));
        self.ensure_grid(map, cmd)?;
        let patch = match case {
            AdjustmentCase::RelaunchForward => predict_flat(&stop.position, self.cfg.w_pre),
            _ => {
                let force_x_negative = stop.force.map(|f| f.x < 0.0).unwrap_or(true);
                predict_incline(
                    &stop.position,
                    self.cfg.w_pre,
                    self.cfg.theta_pre,
                    force_x_negative,
                )
            }
        };
        map.add_patch(&patch, Provenance::Predicted);
        let band = cmd.landing_band(map);
        let grid = self.grid.as_mut().unwrap();
        grid.apply_patch(map, &patch, cmd.target, &band, &self.cfg)?;
        let (seg, outcome) = grid.descend(map, stop.position, &self.cfg)?;
        Ok(PlanOutcome {
            segments: vec![seg],
            stalled: outcome == DescentOutcome::LocalMinimum,
        })
    }
}
