//! Hard-coded geometric next-state predictor.
//!
//! The heuristic removes every cell of media inside a rectangular swath
//! around the scoop segment, splits the removed volume by the sign of the
//! interpolated blade pitch (positive pitch rides in the scoop, negative is
//! bulldozed ahead of it), then re-deposits the two shares as narrow
//! Gaussians: the pushed share at the segment end, the scooped share at the
//! dump point. It is a rough estimate by design - no carry limit, no
//! slumping, no spill - and serves as the reference the learned models must
//! beat.

use crate::action::{ensure_valid, interpolated_scoop_angle, ScoopDumpParams};
use crate::error::Result;
use crate::geom::Vec2;
use crate::grid::{deposit_gaussian, l1_distance, HeightMap};

/// Sigma (in cells) of the two deposit Gaussians; "narrow" relative to a
/// tray half.
pub const DEPOSIT_SIGMA_CELLS: f64 = 2.0;

/// Result of one heuristic prediction.
#[derive(Debug, Clone)]
pub struct BaselineOutcome {
    /// Predicted state after scoop + dump.
    pub next: HeightMap,
    /// Intermediate state: swath emptied, pushed share piled at the segment
    /// end, scooped share still airborne.
    pub after_scoop: HeightMap,
    /// Volume riding in the scoop (mm^3); deposited at the dump point.
    pub scooped_volume: f64,
    /// Volume bulldozed ahead of the blade (mm^3); deposited at the end.
    pub pushed_volume: f64,
}

/// Cells whose center lies within `width/2` (mm) of the scoop segment with
/// projection parameter in `[0, 1]`, in row-major order.
pub(crate) fn swath_cells(
    h: &HeightMap,
    p: &ScoopDumpParams,
    width_mm: f64,
) -> impl Iterator<Item = (usize, usize, f64)> {
    let spec = *h.spec();
    let seg = p.segment();
    let half_w_cells = 0.5 * width_mm / spec.cell_size;
    // Bounding box of the segment inflated by the half width.
    let pad = half_w_cells + 1.0;
    let r0 = ((p.start.y.min(p.end.y) - pad).max(0.0)) as usize;
    let r1 = (((p.start.y.max(p.end.y) + pad).min(spec.rows as f64)) as usize).min(spec.rows);
    let c0 = ((p.start.x.min(p.end.x) - pad).max(0.0)) as usize;
    let c1 = (((p.start.x.max(p.end.x) + pad).min(spec.cols as f64)) as usize).min(spec.cols);
    (r0..r1).flat_map(move |r| {
        (c0..c1).filter_map(move |c| {
            let proj = seg.project(Vec2::cell_center(r, c));
            // Media strictly before the start or past the end is spared.
            if proj.t_raw >= 0.0 && proj.t_raw <= 1.0 && proj.perp_dist <= half_w_cells {
                Some((r, c, proj.t_raw))
            } else {
                None
            }
        })
    })
}

fn clamp_into_tray(p: Vec2, h: &HeightMap) -> Vec2 {
    let spec = h.spec();
    Vec2::new(
        p.x.clamp(0.0, spec.cols as f64),
        p.y.clamp(0.0, spec.rows as f64),
    )
}

/// Predict the next state for one action with a scoop of the given width
/// (mm). Total volume is conserved: everything removed from the swath comes
/// back down at the end or dump point.
pub fn baseline_predict(
    h: &HeightMap,
    p: &ScoopDumpParams,
    scoop_width: f64,
) -> Result<BaselineOutcome> {
    ensure_valid(p, h.spec())?;
    let area = h.spec().cell_area();

    let mut swept = h.clone();
    let mut scooped = 0.0;
    let mut pushed = 0.0;
    for (r, c, _t) in swath_cells(h, p, scoop_width) {
        let vol = h.get(r, c) * area;
        if vol == 0.0 {
            continue;
        }
        let pitch = interpolated_scoop_angle(p, Vec2::cell_center(r, c));
        if pitch >= 0.0 {
            scooped += vol;
        } else {
            pushed += vol;
        }
        swept.data_mut()[h.spec().idx(r, c)] = 0.0;
    }

    let end = clamp_into_tray(p.end, h);
    let dump = clamp_into_tray(p.dump, h);
    let after_scoop = deposit_gaussian(&swept, end, DEPOSIT_SIGMA_CELLS, pushed)?;
    let next = deposit_gaussian(&after_scoop, dump, DEPOSIT_SIGMA_CELLS, scooped)?;

    Ok(BaselineOutcome {
        next,
        after_scoop,
        scooped_volume: scooped,
        pushed_volume: pushed,
    })
}

/// L1 error between the heuristic's predicted next state and the goal.
pub fn baseline_score(
    h: &HeightMap,
    p: &ScoopDumpParams,
    goal: &HeightMap,
    scoop_width: f64,
) -> Result<f64> {
    let outcome = baseline_predict(h, p, scoop_width)?;
    l1_distance(&outcome.next, goal)
}
