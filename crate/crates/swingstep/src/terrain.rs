//! Ground-truth terrain oracles: seeded random spline profiles for the
//! step benchmarks, knot-error injection, and terrain file round-tripping.

use std::fmt::Write as _;
use std::path::Path;

use rand::distributions::{Distribution, Uniform};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::spline::CubicSpline;

/// Baseline foothold height for the randomized step benchmarks.
pub const BASELINE_Z: f64 = 3.0;
/// Knot x positions run 0..=14 at unit spacing.
pub const KNOT_COUNT: usize = 15;

#[derive(Debug, Error)]
pub enum TerrainError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad terrain file line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

/// Terrain generation parameters: maximum boundary rise above the baseline
/// (obstacle amplitude), maximum drop below it (pit depth), and the seed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TerrainParams {
    pub h_up: f64,
    pub h_down: f64,
    pub seed: u64,
}

/// Any 1D ground boundary the collision sweep can run against.
pub trait Ground {
    /// Boundary height z = g(x).
    fn height(&self, x: f64) -> f64;
    /// Boundary slope g'(x).
    fn slope(&self, x: f64) -> f64;
    /// x positions of vertical discontinuities (step faces), if any.
    fn jumps(&self) -> &[f64] {
        &[]
    }
}

/// A ground viewed through a local-frame shift: local (x, z) maps to
/// world (x + dx, z + dz).
pub struct ShiftedGround<'a, G: Ground + ?Sized> {
    inner: &'a G,
    dx: f64,
    dz: f64,
    jumps: Vec<f64>,
}

impl<'a, G: Ground + ?Sized> ShiftedGround<'a, G> {
    pub fn new(inner: &'a G, dx: f64, dz: f64) -> Self {
        let jumps = inner.jumps().iter().map(|x| x - dx).collect();
        ShiftedGround {
            inner,
            dx,
            dz,
            jumps,
        }
    }
}

impl<G: Ground + ?Sized> Ground for ShiftedGround<'_, G> {
    fn height(&self, x: f64) -> f64 {
        self.inner.height(x + self.dx) - self.dz
    }

    fn slope(&self, x: f64) -> f64 {
        self.inner.slope(x + self.dx)
    }

    fn jumps(&self) -> &[f64] {
        &self.jumps
    }
}

/// Spline terrain boundary through knots at x = 0, 1, ..., 14.
#[derive(Debug, Clone)]
pub struct TerrainProfile {
    knots: Vec<(f64, f64)>,
    spline: CubicSpline,
}

impl TerrainProfile {
    pub fn from_knots(knots: Vec<(f64, f64)>) -> Self {
        let xs = knots.iter().map(|k| k.0).collect();
        let zs = knots.iter().map(|k| k.1).collect();
        TerrainProfile {
            spline: CubicSpline::natural(xs, zs),
            knots,
        }
    }

    /// Flat terrain at the baseline height.
    pub fn flat() -> Self {
        Self::from_knots((0..KNOT_COUNT).map(|i| (i as f64, BASELINE_Z)).collect())
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    /// Seeded random terrain: knot heights drawn uniformly from
    /// `[baseline - h_down, baseline + h_up]`, with the two knots nearest
    /// the start column pinned to the baseline so the start foothold lies
    /// on the surface.
    pub fn random(params: TerrainParams) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        let lo = BASELINE_Z - params.h_down;
        let hi = BASELINE_Z + params.h_up;
        let mut knots = Vec::with_capacity(KNOT_COUNT);
        if hi > lo {
            let dist = Uniform::new_inclusive(lo, hi);
            for i in 0..KNOT_COUNT {
                knots.push((i as f64, dist.sample(&mut rng)));
            }
        } else {
            for i in 0..KNOT_COUNT {
                knots.push((i as f64, BASELINE_Z));
            }
        }
        knots[0].1 = BASELINE_Z;
        knots[1].1 = BASELINE_Z;
        Self::from_knots(knots)
    }

    /// Erroneous copy used as planner input: three interior knots chosen
    /// without replacement have their height reduced by `delta_h`. The
    /// ground truth is left untouched.
    pub fn perturbed(&self, delta_h: f64, seed: u64) -> Self {
        let mut knots = self.knots.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let interior: Vec<usize> = (1..KNOT_COUNT - 1).collect();
        let mut chosen: Vec<usize> = interior
            .choose_multiple(&mut rng, 3)
            .copied()
            .collect();
        chosen.sort_unstable();
        for i in chosen {
            knots[i].1 -= delta_h;
        }
        Self::from_knots(knots)
    }

    /// Serialize knots as CSV with a baseline comment header.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# baseline={}", BASELINE_Z);
        for (x, z) in &self.knots {
            let _ = writeln!(out, "{},{}", x, z);
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<(), TerrainError> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    pub fn from_csv(text: &str) -> Result<Self, TerrainError> {
        let mut knots = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split(',');
            let parse = |s: Option<&str>| -> Result<f64, TerrainError> {
                s.ok_or_else(|| TerrainError::Parse {
                    line: lineno + 1,
                    reason: "expected x,z".into(),
                })?
                .trim()
                .parse()
                .map_err(|e| TerrainError::Parse {
                    line: lineno + 1,
                    reason: format!("{e}"),
                })
            };
            let x = parse(parts.next())?;
            let z = parse(parts.next())?;
            knots.push((x, z));
        }
        if knots.len() < 2 {
            return Err(TerrainError::Parse {
                line: 0,
                reason: "terrain file needs at least two knots".into(),
            });
        }
        Ok(Self::from_knots(knots))
    }

    pub fn load(path: &Path) -> Result<Self, TerrainError> {
        Self::from_csv(&std::fs::read_to_string(path)?)
    }

    pub fn x_span(&self) -> (f64, f64) {
        (self.knots[0].0, self.knots[self.knots.len() - 1].0)
    }
}

impl Ground for TerrainProfile {
    fn height(&self, x: f64) -> f64 {
        self.spline.value(x)
    }

    fn slope(&self, x: f64) -> f64 {
        self.spline.derivative(x)
    }
}
