//! The 9-D scoop & dump action: parameter vector, validation, and the
//! 6-channel pixel-aligned action-map encoding consumed by the networks.
//!
//! A scoop drags the tool tip along the tray bottom from `start` to `end`
//! while the blade pitch interpolates from `start_angle` to `end_angle`
//! (0 degrees = blade parallel to the tray; positive pitch collects media,
//! negative pushes it). `roll_angle` turns the blade from front-leading (0)
//! to side-leading (90). The tool then lifts and releases its load above
//! `dump`. All positions are continuous cell coordinates.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geom::{Segment, Vec2};
use crate::grid::GridSpec;
use rand::{Rng, RngExt};

/// Blade pitch range for the start/end angles, degrees.
pub const PITCH_RANGE: (f64, f64) = (-45.0, 45.0);
/// Roll range, degrees: 0 = front leading, 90 = side leading.
pub const ROLL_RANGE: (f64, f64) = (0.0, 90.0);
/// Dump points keep this many cells clear of the outer walls.
pub const DUMP_MARGIN_CELLS: f64 = 2.0;
/// Segments shorter than this (in cells) are degenerate.
pub const MIN_SEGMENT_LEN: f64 = 1e-6;

/// Number of channels in the rendered action map.
pub const ACTION_CHANNELS: usize = 6;

/// Action parameter vector theta: start, end, pitch angles, roll, dump.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScoopDumpParams {
    pub start: Vec2,
    pub end: Vec2,
    pub start_angle: f64,
    pub end_angle: f64,
    pub roll_angle: f64,
    pub dump: Vec2,
}

impl ScoopDumpParams {
    /// Flatten in serialization order:
    /// `[sx, sy, ex, ey, start_angle, end_angle, roll_angle, dx, dy]`.
    pub fn to_array(&self) -> [f64; 9] {
        [
            self.start.x,
            self.start.y,
            self.end.x,
            self.end.y,
            self.start_angle,
            self.end_angle,
            self.roll_angle,
            self.dump.x,
            self.dump.y,
        ]
    }

    pub fn from_array(v: [f64; 9]) -> Self {
        Self {
            start: Vec2::new(v[0], v[1]),
            end: Vec2::new(v[2], v[3]),
            start_angle: v[4],
            end_angle: v[5],
            roll_angle: v[6],
            dump: Vec2::new(v[7], v[8]),
        }
    }

    pub fn segment(&self) -> Segment {
        Segment::new(self.start, self.end)
    }
}

/// A violated action invariant. Violations are data, not errors: `validate`
/// reports all of them and planners use membership as a rejection test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Violation {
    /// start == end (or numerically indistinguishable).
    DegenerateSegment,
    /// start and end lie in different tray halves.
    CrossesDivider,
    /// start is not strictly inside a tray half.
    StartOutsideTray,
    /// end is not strictly inside a tray half.
    EndOutsideTray,
    /// dump violates the interior margin.
    DumpOutsideMargin,
    /// start or end pitch outside the allowed range.
    PitchOutOfRange,
    /// roll outside the allowed range.
    RollOutOfRange,
    /// Some field is NaN or infinite.
    NonFinite,
}

impl core::fmt::Display for Violation {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        let s = match self {
            Violation::DegenerateSegment => "degenerate segment",
            Violation::CrossesDivider => "crosses divider",
            Violation::StartOutsideTray => "start outside tray half",
            Violation::EndOutsideTray => "end outside tray half",
            Violation::DumpOutsideMargin => "dump outside interior margin",
            Violation::PitchOutOfRange => "pitch angle out of range",
            Violation::RollOutOfRange => "roll angle out of range",
            Violation::NonFinite => "non-finite parameter",
        };
        f.write_str(s)
    }
}

fn strictly_inside_half(spec: &GridSpec, p: Vec2) -> bool {
    if !(p.y > 0.0 && p.y < spec.rows as f64) {
        return false;
    }
    let d = spec.divider_col as f64;
    (p.x > 0.0 && p.x < d) || (p.x > d && p.x < spec.cols as f64)
}

/// Check every action invariant; the empty list means the action is valid.
pub fn validate(p: &ScoopDumpParams, spec: &GridSpec) -> Vec<Violation> {
    let mut v = Vec::new();
    let arr = p.to_array();
    if arr.iter().any(|x| !x.is_finite()) {
        v.push(Violation::NonFinite);
        return v;
    }
    if p.start.dist(p.end) < MIN_SEGMENT_LEN {
        v.push(Violation::DegenerateSegment);
    }
    let start_ok = strictly_inside_half(spec, p.start);
    let end_ok = strictly_inside_half(spec, p.end);
    if !start_ok {
        v.push(Violation::StartOutsideTray);
    }
    if !end_ok {
        v.push(Violation::EndOutsideTray);
    }
    if start_ok && end_ok && spec.half_of_x(p.start.x) != spec.half_of_x(p.end.x) {
        v.push(Violation::CrossesDivider);
    }
    let m = DUMP_MARGIN_CELLS;
    if !(p.dump.x >= m
        && p.dump.x <= spec.cols as f64 - m
        && p.dump.y >= m
        && p.dump.y <= spec.rows as f64 - m)
    {
        v.push(Violation::DumpOutsideMargin);
    }
    if !(p.start_angle >= PITCH_RANGE.0 && p.start_angle <= PITCH_RANGE.1)
        || !(p.end_angle >= PITCH_RANGE.0 && p.end_angle <= PITCH_RANGE.1)
    {
        v.push(Violation::PitchOutOfRange);
    }
    if !(p.roll_angle >= ROLL_RANGE.0 && p.roll_angle <= ROLL_RANGE.1) {
        v.push(Violation::RollOutOfRange);
    }
    v
}

/// `Ok(())` iff `validate` reports nothing.
pub fn ensure_valid(p: &ScoopDumpParams, spec: &GridSpec) -> Result<()> {
    let v = validate(p, spec);
    if v.is_empty() {
        Ok(())
    } else {
        Err(Error::InvalidAction(v))
    }
}

/// Blade pitch at a point, linearly interpolated along the scoop segment by
/// the clamped projection parameter.
pub fn interpolated_scoop_angle(p: &ScoopDumpParams, point: Vec2) -> f64 {
    let t = p.segment().project_clamped(point);
    p.start_angle + t * (p.end_angle - p.start_angle)
}

/// Image-like action encoding, pixel-aligned with the height-map.
///
/// Channels, each `rows x cols` of `f32` in `[0, 1]`:
/// 0. scoop line, weighted `1 - t` (1 at the start cell),
/// 1. scoop line, weighted `t` (1 at the end cell); ch0 + ch1 == 1 exactly
///    on line cells and both are 0 elsewhere,
/// 2. one-hot dump cell,
/// 3. start pitch, 4. end pitch, 5. roll - each normalized to its range and
///    tiled across the whole channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionMap {
    rows: usize,
    cols: usize,
    data: Vec<f32>,
}

impl ActionMap {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// All channels, channel-major (`[ch][row][col]`).
    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn channel(&self, ch: usize) -> &[f32] {
        let n = self.rows * self.cols;
        &self.data[ch * n..(ch + 1) * n]
    }

    pub fn at(&self, ch: usize, r: usize, c: usize) -> f32 {
        self.data[(ch * self.rows + r) * self.cols + c]
    }
}

/// Integer cells visited by a Bresenham walk from `a` to `b` (containing
/// cells of the continuous endpoints). Deterministic and always connected.
fn raster_line(a: Vec2, b: Vec2) -> Vec<(usize, usize)> {
    let mut x0 = libm::floor(a.x) as i64;
    let mut y0 = libm::floor(a.y) as i64;
    let x1 = libm::floor(b.x) as i64;
    let y1 = libm::floor(b.y) as i64;
    let dx = (x1 - x0).abs();
    let dy = -(y1 - y0).abs();
    let sx = if x0 < x1 { 1 } else { -1 };
    let sy = if y0 < y1 { 1 } else { -1 };
    let mut err = dx + dy;
    let mut cells = Vec::new();
    loop {
        cells.push((y0 as usize, x0 as usize));
        if x0 == x1 && y0 == y1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x0 += sx;
        }
        if e2 <= dx {
            err += dx;
            y0 += sy;
        }
    }
    cells
}

fn normalize(v: f64, range: (f64, f64)) -> f32 {
    ((v - range.0) / (range.1 - range.0)) as f32
}

/// Render the 6-channel action map for a validated parameter set.
pub fn render_action_map(p: &ScoopDumpParams, spec: &GridSpec) -> Result<ActionMap> {
    ensure_valid(p, spec)?;
    let (rows, cols) = (spec.rows, spec.cols);
    let n = rows * cols;
    let mut data = vec![0.0f32; ACTION_CHANNELS * n];

    let seg = p.segment();
    for (r, c) in raster_line(p.start, p.end) {
        debug_assert!(r < rows && c < cols);
        let t = seg.project_clamped(Vec2::cell_center(r, c)) as f32;
        // 1 - t computed from the stored f32 so the pair sums to exactly 1.
        data[n + r * cols + c] = t;
        data[r * cols + c] = 1.0 - t;
    }

    let dr = libm::floor(p.dump.y) as usize;
    let dc = libm::floor(p.dump.x) as usize;
    data[2 * n + dr * cols + dc] = 1.0;

    let angles = [
        normalize(p.start_angle, PITCH_RANGE),
        normalize(p.end_angle, PITCH_RANGE),
        normalize(p.roll_angle, ROLL_RANGE),
    ];
    for (k, &a) in angles.iter().enumerate() {
        data[(3 + k) * n..(4 + k) * n].fill(a);
    }

    Ok(ActionMap { rows, cols, data })
}

/// Per-dimension sampling ranges for the 9-D parameter space. Uniform draws
/// cover the whole tray; structural constraints (same half, margins) are
/// enforced by rejection against [`validate`].
#[derive(Debug, Clone, Copy)]
pub struct ParamBounds {
    ranges: [(f64, f64); 9],
}

impl ParamBounds {
    pub fn from_spec(spec: &GridSpec) -> Self {
        let x = (0.0, spec.cols as f64);
        let y = (0.0, spec.rows as f64);
        let m = DUMP_MARGIN_CELLS;
        let dump_x = (m, spec.cols as f64 - m);
        let dump_y = (m, spec.rows as f64 - m);
        Self {
            ranges: [
                x,
                y,
                x,
                y,
                PITCH_RANGE,
                PITCH_RANGE,
                ROLL_RANGE,
                dump_x,
                dump_y,
            ],
        }
    }

    /// Range of dimension `d` in serialization order.
    pub fn range(&self, d: usize) -> (f64, f64) {
        self.ranges[d]
    }

    pub fn contains(&self, v: &[f64; 9]) -> bool {
        v.iter()
            .zip(&self.ranges)
            .all(|(x, (lo, hi))| *x >= *lo && *x <= *hi)
    }

    /// One uniform draw over the box bounds; may still violate structural
    /// constraints, so callers reject on `validate`.
    pub fn sample_uniform<R: Rng>(&self, rng: &mut R) -> [f64; 9] {
        let mut v = [0.0; 9];
        for (x, (lo, hi)) in v.iter_mut().zip(&self.ranges) {
            *x = rng.random_range(*lo..*hi);
        }
        v
    }
}
