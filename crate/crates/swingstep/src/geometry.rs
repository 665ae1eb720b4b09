//! Local planning maps: a rectangular planning window ahead of the swing
//! foot, rasterized to a uniform occupancy grid, with the boundary and
//! distance queries the planners rely on.
//!
//! Obstacles are inserted as predicate-defined patches (axis-aligned blocks,
//! half-plane wedges, or "everything below a curve") and rasterized by cell
//! center. The obstacle set only ever grows within one step episode.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("resolution must be positive, got {0}")]
    NonPositiveResolution(f64),
    #[error("degenerate region: x [{x_min}, {x_max}], z [{z_min}, {z_max}]")]
    DegenerateRegion {
        x_min: f64,
        x_max: f64,
        z_min: f64,
        z_max: f64,
    },
    #[error("query point x={x} z={z} outside the planning region")]
    OutOfBounds { x: f64, z: f64 },
    #[error("empty or out-of-range column interval [{0}, {1}]")]
    BadInterval(f64, f64),
}

/// A 2D point in the local-map frame: x along the stepping direction,
/// z positive upward (toward the body).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub z: f64,
}

impl Point {
    pub fn new(x: f64, z: f64) -> Self {
        debug_assert!(x.is_finite() && z.is_finite());
        Point { x, z }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        ((self.x - other.x).powi(2) + (self.z - other.z).powi(2)).sqrt()
    }
}

/// A sensed contact force in the local-map frame. `x` is the obstacle
/// component, `z` the support component. The simulation oracle produces
/// unit-magnitude samples (the contact normal).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForceSample {
    pub x: f64,
    pub z: f64,
}

impl ForceSample {
    pub fn new(x: f64, z: f64) -> Self {
        ForceSample { x, z }
    }

    /// Support component dominates. Ties count as support-dominant.
    pub fn support_dominant(&self) -> bool {
        self.z.abs() >= self.x.abs()
    }

    /// Obstacle component strictly dominates.
    pub fn obstacle_dominant(&self) -> bool {
        !self.support_dominant()
    }
}

/// Axis-aligned planning window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    pub x_min: f64,
    pub x_max: f64,
    pub z_min: f64,
    pub z_max: f64,
}

impl Region {
    pub fn new(x_min: f64, x_max: f64, z_min: f64, z_max: f64) -> Result<Self, GeometryError> {
        if !(x_min < x_max && z_min < z_max) {
            return Err(GeometryError::DegenerateRegion {
                x_min,
                x_max,
                z_min,
                z_max,
            });
        }
        Ok(Region {
            x_min,
            x_max,
            z_min,
            z_max,
        })
    }

    /// Default window used by the desk-scale step benchmarks. The 20-unit
    /// height leaves the swing leg enough headroom to arc over the tallest
    /// generated obstacles; smaller windows are fine for targeted tests.
    pub fn benchmark() -> Self {
        Region {
            x_min: 0.0,
            x_max: 14.0,
            z_min: 0.0,
            z_max: 20.0,
        }
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.z_max - self.z_min
    }

    pub fn contains(&self, p: &Point) -> bool {
        p.x >= self.x_min && p.x <= self.x_max && p.z >= self.z_min && p.z <= self.z_max
    }

    pub fn contains_x(&self, x: f64) -> bool {
        x >= self.x_min && x <= self.x_max
    }
}

/// Where an obstacle cell came from. Terrain input, the preset anti-drag
/// block, or a force-feedback prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Terrain,
    Preset,
    Predicted,
}

impl Provenance {
    pub fn glyph(&self) -> char {
        match self {
            Provenance::Terrain => '#',
            Provenance::Preset => '=',
            Provenance::Predicted => '+',
        }
    }
}

/// A predicate-defined obstacle patch, rasterized on insertion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ObstaclePatch {
    /// All cells whose center lies in `[x_lo, x_hi] x [z_lo, z_hi]`.
    Block {
        x_lo: f64,
        x_hi: f64,
        z_lo: f64,
        z_hi: f64,
    },
    /// All cells with center below the line `z = slope * (x - anchor_x) + anchor_z`
    /// within the column band `[x_lo, x_hi]`.
    Wedge {
        x_lo: f64,
        x_hi: f64,
        slope: f64,
        anchor_x: f64,
        anchor_z: f64,
    },
}

impl ObstaclePatch {
    pub fn contains(&self, x: f64, z: f64) -> bool {
        match *self {
            ObstaclePatch::Block {
                x_lo,
                x_hi,
                z_lo,
                z_hi,
            } => x >= x_lo && x <= x_hi && z >= z_lo && z <= z_hi,
            ObstaclePatch::Wedge {
                x_lo,
                x_hi,
                slope,
                anchor_x,
                anchor_z,
            } => x >= x_lo && x <= x_hi && z <= slope * (x - anchor_x) + anchor_z,
        }
    }

    /// Bounding box of the patch, unclipped.
    pub fn bounds(&self) -> (f64, f64, f64, f64) {
        match *self {
            ObstaclePatch::Block {
                x_lo,
                x_hi,
                z_lo,
                z_hi,
            } => (x_lo, x_hi, z_lo, z_hi),
            ObstaclePatch::Wedge {
                x_lo,
                x_hi,
                slope,
                anchor_x,
                anchor_z,
            } => {
                let z_at_lo = slope * (x_lo - anchor_x) + anchor_z;
                let z_at_hi = slope * (x_hi - anchor_x) + anchor_z;
                (x_lo, x_hi, f64::NEG_INFINITY, z_at_lo.max(z_at_hi))
            }
        }
    }
}

/// Band of acceptable landing x-positions around the commanded target,
/// clipped to the planning window. Closed interval: boundary points count
/// as inside.
#[derive(Debug, Clone, Copy)]
pub struct EndpointInterval {
    pub x_center: f64,
    pub half_width: f64,
    x_lo: f64,
    x_hi: f64,
    region: Region,
}

impl EndpointInterval {
    pub fn new(target: Point, half_width: f64, region: Region) -> Self {
        debug_assert!(half_width >= 0.0);
        EndpointInterval {
            x_center: target.x,
            half_width,
            x_lo: (target.x - half_width).max(region.x_min),
            x_hi: (target.x + half_width).min(region.x_max),
            region,
        }
    }

    pub fn x_lo(&self) -> f64 {
        self.x_lo
    }

    pub fn x_hi(&self) -> f64 {
        self.x_hi
    }

    pub fn contains(&self, p: &Point) -> bool {
        p.x >= self.x_lo && p.x <= self.x_hi && self.region.contains(p)
    }
}

/// Occupancy-grid local map over a rectangular window.
///
/// Cell `(i, j)` covers `[x_min + i*d, x_min + (i+1)*d) x [z_min + j*d, ...)`
/// with `d` the resolution; continuous queries snap to cell centers.
#[derive(Debug, Clone)]
pub struct LocalMap {
    region: Region,
    resolution: f64,
    nx: usize,
    nz: usize,
    cells: Vec<Option<Provenance>>,
    obstacle_count: usize,
}

impl LocalMap {
    pub fn new(region: Region, resolution: f64) -> Result<Self, GeometryError> {
        if resolution <= 0.0 {
            return Err(GeometryError::NonPositiveResolution(resolution));
        }
        let nx = (region.width() / resolution).ceil() as usize;
        let nz = (region.height() / resolution).ceil() as usize;
        if nx == 0 || nz == 0 {
            return Err(GeometryError::DegenerateRegion {
                x_min: region.x_min,
                x_max: region.x_max,
                z_min: region.z_min,
                z_max: region.z_max,
            });
        }
        Ok(LocalMap {
            region,
            resolution,
            nx,
            nz,
            cells: vec![None; nx * nz],
            obstacle_count: 0,
        })
    }

    pub fn region(&self) -> Region {
        self.region
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.nx, self.nz)
    }

    pub fn obstacle_count(&self) -> usize {
        self.obstacle_count
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn cell(&self, i: usize, j: usize) -> Option<Provenance> {
        self.cells[self.idx(i, j)]
    }

    pub fn is_obstacle(&self, i: usize, j: usize) -> bool {
        self.cells[self.idx(i, j)].is_some()
    }

    /// Column index of an x coordinate, clamped to the grid.
    pub fn column_of(&self, x: f64) -> usize {
        let i = ((x - self.region.x_min) / self.resolution).floor() as isize;
        i.clamp(0, self.nx as isize - 1) as usize
    }

    /// Row index of a z coordinate, clamped to the grid.
    pub fn row_of(&self, z: f64) -> usize {
        let j = ((z - self.region.z_min) / self.resolution).floor() as isize;
        j.clamp(0, self.nz as isize - 1) as usize
    }

    pub fn cell_center(&self, i: usize, j: usize) -> Point {
        Point::new(
            self.region.x_min + (i as f64 + 0.5) * self.resolution,
            self.region.z_min + (j as f64 + 0.5) * self.resolution,
        )
    }

    fn check_x(&self, x: f64) -> Result<(), GeometryError> {
        if !self.region.contains_x(x) {
            return Err(GeometryError::OutOfBounds {
                x,
                z: self.region.z_min,
            });
        }
        Ok(())
    }

    /// Rasterize an obstacle patch into the map. Cells outside the region
    /// are discarded; re-adding cells is a no-op (union semantics).
    pub fn add_patch(&mut self, patch: &ObstaclePatch, provenance: Provenance) {
        let (x_lo, x_hi, z_lo, z_hi) = patch.bounds();
        let i_lo = self.column_of(x_lo.max(self.region.x_min));
        let i_hi = self.column_of(x_hi.min(self.region.x_max));
        let j_lo = self.row_of(z_lo.max(self.region.z_min));
        let j_hi = self.row_of(z_hi.min(self.region.z_max));
        for j in j_lo..=j_hi {
            for i in i_lo..=i_hi {
                let c = self.cell_center(i, j);
                if patch.contains(c.x, c.z) {
                    self.set_obstacle(i, j, provenance);
                }
            }
        }
    }

    /// Mark as obstacles all cells whose center lies at or below
    /// `surface(x) - drop`. A `drop` of half a cell keeps the rasterized
    /// top face at or below the continuous surface, so descents planned
    /// against the map always reach the real ground.
    pub fn fill_below_curve<F: Fn(f64) -> f64>(
        &mut self,
        surface: F,
        drop: f64,
        provenance: Provenance,
    ) {
        for i in 0..self.nx {
            let x = self.cell_center(i, 0).x;
            let limit = surface(x) - drop;
            for j in 0..self.nz {
                if self.cell_center(i, j).z <= limit {
                    self.set_obstacle(i, j, provenance);
                } else {
                    break;
                }
            }
        }
    }

    fn set_obstacle(&mut self, i: usize, j: usize, provenance: Provenance) {
        let k = self.idx(i, j);
        if self.cells[k].is_none() {
            self.cells[k] = Some(provenance);
            self.obstacle_count += 1;
        }
    }

    /// First free row at or above `z_band` in column `i`. The query band
    /// is the foot height; a foot sitting on an obstacle boundary belongs
    /// to the free band above it.
    fn band_row(&self, i: usize, z_band: f64) -> Option<usize> {
        let mut j = self.row_of(z_band);
        while j < self.nz && self.is_obstacle(i, j) {
            j += 1;
        }
        (j < self.nz).then_some(j)
    }

    /// z of the top of the free-space band containing the foot height at
    /// column x: the bottom face of the first obstacle above, or the region
    /// top when the column is clear above the band.
    pub fn upper_boundary(&self, x: f64, z_band: f64) -> Result<f64, GeometryError> {
        self.check_x(x)?;
        let i = self.column_of(x);
        let Some(start) = self.band_row(i, z_band) else {
            return Ok(self.region.z_max);
        };
        for j in start..self.nz {
            if self.is_obstacle(i, j) {
                return Ok(self.region.z_min + j as f64 * self.resolution);
            }
        }
        Ok(self.region.z_max)
    }

    /// z of the bottom of free space at column x relative to the foot band:
    /// the top face of the highest obstacle below the band, or the region
    /// bottom when the column is clear below.
    pub fn lower_boundary(&self, x: f64, z_band: f64) -> Result<f64, GeometryError> {
        self.check_x(x)?;
        let i = self.column_of(x);
        let Some(start) = self.band_row(i, z_band) else {
            // Column blocked from the band upward: the band interface is the floor.
            return Ok(self.region.z_max);
        };
        for j in (0..start).rev() {
            if self.is_obstacle(i, j) {
                return Ok(self.region.z_min + (j + 1) as f64 * self.resolution);
            }
        }
        Ok(self.region.z_min)
    }

    /// Minimum of `upper_boundary` over every column intersecting `[x_lo, x_hi]`.
    pub fn min_upper_over(&self, x_lo: f64, x_hi: f64, z_band: f64) -> Result<f64, GeometryError> {
        if x_lo > x_hi {
            return Err(GeometryError::BadInterval(x_lo, x_hi));
        }
        self.check_x(x_lo)?;
        self.check_x(x_hi)?;
        let i_lo = self.column_of(x_lo);
        let i_hi = self.column_of(x_hi);
        let mut best = f64::INFINITY;
        for i in i_lo..=i_hi {
            let x = self.cell_center(i, 0).x;
            best = best.min(self.upper_boundary(x.clamp(self.region.x_min, self.region.x_max), z_band)?);
        }
        Ok(best)
    }

    /// Euclidean distance from `p` to the nearest obstacle cell center,
    /// `f64::INFINITY` when the map holds no obstacles. Brute-force scan;
    /// potential construction uses the windowed variant below.
    pub fn nearest_obstacle_distance(&self, p: &Point) -> Result<f64, GeometryError> {
        if !self.region.contains(p) {
            return Err(GeometryError::OutOfBounds { x: p.x, z: p.z });
        }
        if self.obstacle_count == 0 {
            return Ok(f64::INFINITY);
        }
        let mut best = f64::INFINITY;
        for j in 0..self.nz {
            for i in 0..self.nx {
                if self.is_obstacle(i, j) {
                    best = best.min(self.cell_center(i, j).distance(p));
                }
            }
        }
        Ok(best)
    }

    /// Nearest obstacle cell center within `radius` of `p`, scanning only
    /// the covering cell window. Returns `f64::INFINITY` when none is close.
    pub fn nearest_obstacle_within(&self, p: &Point, radius: f64) -> f64 {
        let reach = (radius / self.resolution).ceil() as isize + 1;
        let ic = self.column_of(p.x) as isize;
        let jc = self.row_of(p.z) as isize;
        let mut best = f64::INFINITY;
        for j in (jc - reach).max(0)..=(jc + reach).min(self.nz as isize - 1) {
            for i in (ic - reach).max(0)..=(ic + reach).min(self.nx as isize - 1) {
                if self.is_obstacle(i as usize, j as usize) {
                    best = best.min(self.cell_center(i as usize, j as usize).distance(p));
                }
            }
        }
        best
    }

    /// Debug dump, one character per cell, row-major with the top row at
    /// z_max: '.' free, '#' terrain, '=' preset, '+' predicted.
    pub fn to_text_grid(&self) -> String {
        let mut out = String::with_capacity((self.nx + 1) * self.nz);
        for j in (0..self.nz).rev() {
            for i in 0..self.nx {
                out.push(match self.cell(i, j) {
                    None => '.',
                    Some(p) => p.glyph(),
                });
            }
            out.push('\n');
        }
        out
    }
}
