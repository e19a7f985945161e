//! Ground-truth tray dynamics.
//!
//! `sim_step` executes one scoop & dump on a height-map and is the transition
//! function the learned models regress: the blade marches through the swath
//! in projection order picking up positive-pitch media until the scoop is
//! full (a hard carry capacity), bulldozes negative-pitch media to the
//! segment end, loses a fixed fraction of its load over the tray rim, drops
//! the rest at the dump point, and finally the surface slumps to its angle
//! of repose. The divider wall blocks all lateral flow. Everything is pure
//! `f64` arithmetic: given a parameter vector and a config the outcome is
//! fully deterministic, and the volume ledger
//! `total(next) + spilled == total(before)` holds to rounding.

use alloc::format;
use alloc::vec::Vec;

use rand::{Rng, RngExt};
use rand_distr::StandardNormal;

use crate::action::{ensure_valid, interpolated_scoop_angle, ScoopDumpParams};
use crate::baseline::swath_cells;
use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::grid::{deposit_gaussian_masked, CellMask, HeightMap};
use crate::math;

/// Simulator parameters. Defaults are sized for the stock 32x64 tray so one
/// scoop relocates a few percent of a 45 mm half-fill.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct SimConfig {
    /// Blade width in mm (at roll 0).
    pub scoop_width: f64,
    /// Maximum volume the scoop can carry, mm^3.
    pub carry_capacity: f64,
    /// Fraction of the carried load lost over the rim, in `[0, 1)`.
    pub spill_fraction: f64,
    /// Angle of repose in degrees; slopes steeper than this slump.
    pub repose_angle: f64,
    /// Sigma (cells) of the end/dump deposit Gaussians.
    pub dump_sigma: f64,
    /// Sensor noise applied by [`observe`], mm.
    pub noise_std: f64,
    /// Base seed for noise streams.
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            scoop_width: 50.0,
            carry_capacity: 150_000.0,
            spill_fraction: 0.05,
            repose_angle: 30.0,
            dump_sigma: 2.0,
            noise_std: 0.5,
            seed: 0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.carry_capacity > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "carry_capacity must be positive, got {}",
                self.carry_capacity
            )));
        }
        if !(self.spill_fraction >= 0.0 && self.spill_fraction < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "spill_fraction must be in [0, 1), got {}",
                self.spill_fraction
            )));
        }
        if !(self.repose_angle > 0.0 && self.repose_angle < 90.0) {
            return Err(Error::InvalidArgument(format!(
                "repose_angle must be in (0, 90), got {}",
                self.repose_angle
            )));
        }
        if !(self.scoop_width > 0.0) || !(self.dump_sigma > 0.0) || !(self.noise_std >= 0.0) {
            return Err(Error::InvalidArgument(
                "scoop_width, dump_sigma must be positive; noise_std non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// Result of one simulated scoop & dump.
#[derive(Debug, Clone)]
pub struct SimOutcome {
    /// Settled state after the dump.
    pub next: HeightMap,
    /// Intermediate state: swath harvested, pushed pile at the segment end,
    /// carried load still in the scoop.
    pub after_scoop: HeightMap,
    /// Volume picked up by the blade, mm^3.
    pub carried: f64,
    /// Volume bulldozed to the segment end, mm^3.
    pub pushed: f64,
    /// Volume lost over the rim, mm^3.
    pub spilled: f64,
}

/// Execute one scoop & dump. See the module docs for the phase breakdown.
pub fn sim_step(h: &HeightMap, p: &ScoopDumpParams, cfg: &SimConfig) -> Result<SimOutcome> {
    ensure_valid(p, h.spec())?;
    cfg.validate()?;
    let spec = *h.spec();
    let area = spec.cell_area();

    // Rolling the blade toward side-leading narrows the effective pickup.
    let width = cfg.scoop_width * (1.0 - 0.5 * p.roll_angle / 90.0);

    // March swath cells in travel order so the capacity cutoff hits the far
    // end of the stroke, like a real blade filling up.
    let mut cells: Vec<(f64, usize, usize)> = swath_cells(h, p, width)
        .map(|(r, c, t)| (t, r, c))
        .collect();
    cells.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut swept = h.clone();
    let mut carried = 0.0;
    let mut pushed = 0.0;
    for &(_t, r, c) in &cells {
        let idx = spec.idx(r, c);
        let vol = swept.data()[idx] * area;
        if vol == 0.0 {
            continue;
        }
        let pitch = interpolated_scoop_angle(p, Vec2::cell_center(r, c));
        if pitch >= 0.0 {
            let room = cfg.carry_capacity - carried;
            if room <= 0.0 {
                continue; // scoop is full; the rest stays in place
            }
            let take = vol.min(room);
            swept.data_mut()[idx] -= take / area;
            carried += take;
        } else {
            pushed += vol;
            swept.data_mut()[idx] = 0.0;
        }
    }

    // Deposits never cross the divider wall.
    let end_mask = CellMask::half(&spec, spec.half_of_x(p.end.x));
    let after_scoop = deposit_gaussian_masked(&swept, p.end, cfg.dump_sigma, pushed, &end_mask)?;

    let spilled = cfg.spill_fraction * carried;
    let dump_mask = CellMask::half(&spec, spec.half_of_x(p.dump.x));
    let dumped = deposit_gaussian_masked(
        &after_scoop,
        p.dump,
        cfg.dump_sigma,
        carried - spilled,
        &dump_mask,
    )?;
    let next = repose_relax(&dumped, cfg.repose_angle, spec.divider_col);

    Ok(SimOutcome {
        next,
        after_scoop,
        carried,
        pushed,
        spilled,
    })
}

/// Convergence threshold for a single repose transfer, mm. Tight enough that
/// relaxing an already-relaxed map moves cells by under a micron.
const RELAX_EPS_MM: f64 = 1e-7;
/// Sweep cap for the relaxation loop.
const RELAX_MAX_SWEEPS: usize = 10_000;

/// Slump the surface to its angle of repose: wherever two 4-neighbors differ
/// by more than `cell_size * tan(repose_angle)`, move half the excess from
/// high to low. Gauss-Seidel sweeps in raster order until the largest single
/// transfer drops below [`RELAX_EPS_MM`]. Transfers are antisymmetric, so
/// volume is conserved exactly; nothing moves across `divider_col`.
pub fn repose_relax(h: &HeightMap, repose_angle: f64, divider_col: usize) -> HeightMap {
    let spec = *h.spec();
    let threshold = spec.cell_size * math::tan_deg(repose_angle);
    let mut out = h.clone();
    let cols = spec.cols;

    for _sweep in 0..RELAX_MAX_SWEEPS {
        let mut max_transfer = 0.0f64;
        for r in 0..spec.rows {
            for c in 0..cols {
                let idx = r * cols + c;
                // Right neighbor, unless the divider wall intervenes.
                if c + 1 < cols && c + 1 != divider_col {
                    let j = idx + 1;
                    let diff = out.data()[idx] - out.data()[j];
                    let transfer = 0.5 * (math::abs(diff) - threshold);
                    if transfer > 0.0 {
                        let signed = if diff > 0.0 { transfer } else { -transfer };
                        out.data_mut()[idx] -= signed;
                        out.data_mut()[j] += signed;
                        max_transfer = max_transfer.max(transfer);
                    }
                }
                // Down neighbor.
                if r + 1 < spec.rows {
                    let j = idx + cols;
                    let diff = out.data()[idx] - out.data()[j];
                    let transfer = 0.5 * (math::abs(diff) - threshold);
                    if transfer > 0.0 {
                        let signed = if diff > 0.0 { transfer } else { -transfer };
                        out.data_mut()[idx] -= signed;
                        out.data_mut()[j] += signed;
                        max_transfer = max_transfer.max(transfer);
                    }
                }
            }
        }
        if max_transfer < RELAX_EPS_MM {
            break;
        }
    }
    out
}

/// Sensor model: i.i.d. zero-mean Gaussian noise on every cell, clamped into
/// the physical range. Deterministic for a given generator state.
pub fn observe<R: Rng>(h: &HeightMap, cfg: &SimConfig, rng: &mut R) -> HeightMap {
    let mut out = h.clone();
    if cfg.noise_std > 0.0 {
        for v in out.data_mut() {
            let z: f64 = rng.sample(StandardNormal);
            *v += cfg.noise_std * z;
        }
        out.clamp_in_place();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{total_volume, GridSpec, TrayHalf};
    use crate::rng::{self, Stream};
    use rand::RngExt;

    fn spec() -> GridSpec {
        GridSpec::default()
    }

    fn cfg() -> SimConfig {
        SimConfig {
            noise_std: 0.0,
            ..SimConfig::default()
        }
    }

    fn params() -> ScoopDumpParams {
        ScoopDumpParams {
            start: Vec2::new(6.5, 16.5),
            end: Vec2::new(20.5, 16.5),
            start_angle: 25.0,
            end_angle: 25.0,
            roll_angle: 0.0,
            dump: Vec2::new(48.0, 16.0),
        }
    }

    #[test]
    fn empty_tray_is_a_fixed_point() {
        let h = HeightMap::zeros(spec());
        let out = sim_step(&h, &params(), &cfg()).unwrap();
        assert_eq!(out.next, h);
        assert_eq!(out.carried, 0.0);
        assert_eq!(out.pushed, 0.0);
        assert_eq!(out.spilled, 0.0);
    }

    #[test]
    fn negative_pitch_never_carries() {
        let h = HeightMap::half_fill(spec(), TrayHalf::Left, 30.0).unwrap();
        let mut p = params();
        p.start_angle = -20.0;
        p.end_angle = -5.0;
        let out = sim_step(&h, &p, &cfg()).unwrap();
        assert_eq!(out.carried, 0.0);
        assert_eq!(out.spilled, 0.0);
        assert!(out.pushed > 0.0);
        // Nothing lands on the dump half.
        let right = CellMask::half(&spec(), TrayHalf::Right);
        assert_eq!(total_volume(&out.next, Some(&right)), 0.0);
    }

    #[test]
    fn carry_capacity_limits_pickup() {
        let h = HeightMap::half_fill(spec(), TrayHalf::Left, 45.0).unwrap();
        let out = sim_step(&h, &params(), &cfg()).unwrap();
        assert!(out.carried <= cfg().carry_capacity + 1e-9);
        assert!(out.carried > 0.0);
    }

    #[test]
    fn roll_narrows_the_swath() {
        let h = HeightMap::half_fill(spec(), TrayHalf::Left, 20.0).unwrap();
        let mut side = params();
        side.roll_angle = 90.0;
        let front = sim_step(&h, &params(), &cfg()).unwrap();
        let rolled = sim_step(&h, &side, &cfg()).unwrap();
        assert!(rolled.carried + rolled.pushed < front.carried + front.pushed);
    }

    #[test]
    fn volume_ledger_over_random_actions() {
        let spec = spec();
        let cfg = cfg();
        let bounds = crate::action::ParamBounds::from_spec(&spec);
        let mut r = rng::rng(23);
        let mut checked = 0;
        while checked < 200 {
            let p = ScoopDumpParams::from_array(bounds.sample_uniform(&mut r));
            if !crate::action::validate(&p, &spec).is_empty() {
                continue;
            }
            let data: Vec<f64> = (0..spec.n_cells()).map(|_| r.random_range(0.0..60.0)).collect();
            let h = HeightMap::from_data(spec, data).unwrap();
            let before = total_volume(&h, None);
            let out = sim_step(&h, &p, &cfg).unwrap();
            let after = total_volume(&out.next, None);
            assert!(
                (after + out.spilled - before).abs() <= 1e-6 * before.max(1.0),
                "ledger broke: {after} + {} vs {before}",
                out.spilled
            );
            // carried + pushed equals what left the swath.
            let removed = before - total_volume(&out.after_scoop, None) + out.pushed;
            assert!((out.carried + out.pushed - removed).abs() <= 1e-6 * before.max(1.0));
            checked += 1;
        }
    }

    #[test]
    fn relax_leaves_flat_maps_alone() {
        let h = HeightMap::flat(spec(), 25.0).unwrap();
        assert_eq!(repose_relax(&h, 30.0, spec().divider_col), h);
    }

    #[test]
    fn relax_conserves_volume_of_a_spike() {
        let spec = spec();
        let mut h = HeightMap::zeros(spec);
        h.data_mut()[spec.idx(10, 10)] = 140.0;
        let v = total_volume(&h, None);
        let out = repose_relax(&h, 30.0, spec.divider_col);
        let got = total_volume(&out, None);
        assert!((got - v).abs() <= 1e-9 * v, "{got} vs {v}");
        // It actually slumped.
        assert!(out.get(10, 10) < 140.0);
        assert!(out.get(10, 11) > 0.0);
    }

    #[test]
    fn relax_respects_the_divider() {
        let spec = spec();
        let mut h = HeightMap::zeros(spec);
        // Spike hugging the divider on the left side.
        h.data_mut()[spec.idx(16, spec.divider_col - 1)] = 120.0;
        let out = repose_relax(&h, 30.0, spec.divider_col);
        let right = CellMask::half(&spec, TrayHalf::Right);
        assert_eq!(total_volume(&out, Some(&right)), 0.0);
    }

    #[test]
    fn relax_is_idempotent() {
        let spec = spec();
        let mut h = HeightMap::zeros(spec);
        h.data_mut()[spec.idx(8, 40)] = 130.0;
        h.data_mut()[spec.idx(20, 50)] = 90.0;
        let once = repose_relax(&h, 30.0, spec.divider_col);
        let twice = repose_relax(&once, 30.0, spec.divider_col);
        for (a, b) in once.data().iter().zip(twice.data()) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn relax_bounds_neighbor_slopes() {
        let spec = spec();
        let mut h = HeightMap::zeros(spec);
        h.data_mut()[spec.idx(12, 12)] = 149.0;
        let out = repose_relax(&h, 30.0, spec.divider_col);
        let limit = spec.cell_size * crate::math::tan_deg(30.0) + 1e-3;
        for r in 0..spec.rows {
            for c in 0..spec.cols {
                if c + 1 < spec.cols && c + 1 != spec.divider_col {
                    assert!((out.get(r, c) - out.get(r, c + 1)).abs() <= limit);
                }
                if r + 1 < spec.rows {
                    assert!((out.get(r, c) - out.get(r + 1, c)).abs() <= limit);
                }
            }
        }
    }

    #[test]
    fn observe_without_noise_is_identity() {
        let h = HeightMap::flat(spec(), 33.0).unwrap();
        let mut r = rng::stream_rng(1, Stream::SensorNoise);
        let out = observe(&h, &cfg(), &mut r);
        assert_eq!(out, h);
    }

    #[test]
    fn observe_is_deterministic_per_seed() {
        let h = HeightMap::flat(spec(), 33.0).unwrap();
        let cfg = SimConfig::default();
        let a = observe(&h, &cfg, &mut rng::stream_rng(9, Stream::SensorNoise));
        let b = observe(&h, &cfg, &mut rng::stream_rng(9, Stream::SensorNoise));
        assert_eq!(a, b);
        let c = observe(&h, &cfg, &mut rng::stream_rng(10, Stream::SensorNoise));
        assert_ne!(a, c);
    }

    #[test]
    fn observe_noise_is_zero_mean() {
        // Sample mean over many cells stays within 3 sigma / sqrt(n) of 0.
        // Mid-height map so the [0, max] clamp never engages.
        let spec = spec();
        let h = HeightMap::flat(spec, 75.0).unwrap();
        let cfg = SimConfig::default();
        let mut r = rng::stream_rng(4, Stream::SensorNoise);
        let mut sum = 0.0;
        let mut n = 0usize;
        for _ in 0..500 {
            let o = observe(&h, &cfg, &mut r);
            for (a, b) in o.data().iter().zip(h.data()) {
                sum += a - b;
                n += 1;
            }
        }
        let mean = sum / n as f64;
        let bound = 3.0 * cfg.noise_std / (n as f64).sqrt();
        assert!(mean.abs() < bound, "mean {mean} vs bound {bound}");
    }

    #[test]
    fn sim_step_is_deterministic() {
        let h = HeightMap::half_fill(spec(), TrayHalf::Left, 45.0).unwrap();
        let a = sim_step(&h, &params(), &cfg()).unwrap();
        let b = sim_step(&h, &params(), &cfg()).unwrap();
        assert_eq!(a.next, b.next);
        assert_eq!(a.after_scoop, b.after_scoop);
    }

    #[test]
    fn invalid_config_is_rejected() {
        let bad = SimConfig {
            spill_fraction: 1.5,
            ..cfg()
        };
        let h = HeightMap::zeros(spec());
        assert!(sim_step(&h, &params(), &bad).is_err());
    }
}
