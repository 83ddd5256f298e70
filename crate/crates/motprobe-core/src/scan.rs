//! Cloud-profile synthesis: translating the cloud across the fiber waist
//! while recording the count rate, and the camera column-density channel
//! used as the cross-check.

use serde::{Deserialize, Serialize};

use crate::cloud::{effective_atom_number, CloudModel, CloudShape};
use crate::detector::{spcm_sample, SpcmSpec};
use crate::error::{Error, Result};
use crate::physics::{rate_per_effective_atom, FiberSpec, LaserConfig};
use crate::quad::{gauss_legendre, integrate};
use crate::rng::SplitMix64;
use crate::scalar::Real;
use crate::series::TimeSeries;

/// Horizontal viewing axes for the camera cross-section.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanAxis {
    X,
    Y,
}

/// Count rate vs horizontal cloud offset, both lasers and the field on.
///
/// At each offset the cloud is rigidly translated along x, the sensing-shell
/// overlap is integrated, backgrounds are added, and (optionally) one Poisson
/// gate is drawn from a per-position split of `seed`. Positions are reported
/// in mm.
pub fn simulate_scan<F: Real>(
    cloud: &CloudModel<F>,
    fiber: &FiberSpec<F>,
    laser: &LaserConfig<F>,
    spcm: &SpcmSpec<F>,
    positions_um: &[F],
    seed: u64,
    noise: bool,
) -> Result<TimeSeries<F>> {
    if positions_um.iter().any(|p| !p.is_finite()) {
        return Err(Error::InvalidInput("scan positions must be finite".into()));
    }
    spcm.validate()?;
    let per_atom = rate_per_effective_atom(laser, fiber, spcm.quantum_efficiency_eta_d)?;
    let background = spcm.dark_ambient_rate_per_s
        + spcm.repump_scatter_rate_per_s
        + spcm.cooling_scatter_rate_per_s;

    let base_rng = SplitMix64::new(seed);
    let mut samples = Vec::with_capacity(positions_um.len());
    for (i, &offset) in positions_um.iter().enumerate() {
        let shifted = cloud.translate([offset, F::zero(), F::zero()]);
        let rate = background + per_atom * effective_atom_number(&shifted, fiber)?;
        let reported = if noise {
            let mut stream = base_rng.split(i as u64);
            let counts = spcm_sample(rate, spcm, &mut stream)?;
            F::from_f64(counts as f64) / spcm.gate_time_s
        } else {
            rate
        };
        samples.push((offset / F::from_f64(1000.0), reported));
    }
    TimeSeries::new("position", "mm", "spcm_rate", "counts_per_s", samples)
}

/// Column-density profile along `axis`, integrated along the orthogonal
/// horizontal direction at the cloud's own height, normalized to peak 1.
pub fn camera_cross_section<F: Real>(
    cloud: &CloudModel<F>,
    axis: ScanAxis,
    positions_um: &[F],
) -> Result<TimeSeries<F>> {
    if positions_um.iter().any(|p| !p.is_finite()) {
        return Err(Error::InvalidInput("positions must be finite".into()));
    }
    cloud.validate()?;
    let rule = gauss_legendre::<F>(16);
    let z = cloud.center_um[2];

    let mut values = Vec::with_capacity(positions_um.len());
    for &p in positions_um {
        let column = match axis {
            ScanAxis::X => column_integral(cloud, &rule, |s| [p, s, z], 1),
            ScanAxis::Y => column_integral(cloud, &rule, |s| [s, p, z], 0),
        };
        values.push(column);
    }
    let peak = values.iter().cloned().fold(F::zero(), F::max);
    let samples = positions_um
        .iter()
        .zip(&values)
        .map(|(&p, &v)| {
            let norm = if peak > F::zero() { v / peak } else { v };
            (p / F::from_f64(1000.0), norm)
        })
        .collect();
    TimeSeries::new("position", "mm", "column_density", "normalized", samples)
}

/// ∫ n(line(s)) ds along the viewing direction, `view` indexing the
/// integrated axis of the cloud.
fn column_integral<F: Real>(
    cloud: &CloudModel<F>,
    rule: &[(F, F)],
    line: impl Fn(F) -> [F; 3],
    view: usize,
) -> F {
    let c = cloud.center_um[view];
    let w = cloud.radii_um[view];
    match cloud.shape {
        CloudShape::Gaussian => {
            // ±5 radii in 10 panels covers the support to ~1e-11 relative
            let span = F::from_f64(5.0) * w;
            let panels = 10;
            let width = F::from_f64(2.0) * span / F::from_f64(panels as f64);
            let mut acc = F::zero();
            for k in 0..panels {
                let a = c - span + width * F::from_f64(k as f64);
                acc += integrate(rule, a, a + width, |s| cloud.density_at(line(s)));
            }
            acc
        }
        CloudShape::FlatTop => {
            // clip to the chord so the integrand stays smooth
            let probe = line(c);
            let mut g = F::zero();
            for i in 0..3 {
                if i != view {
                    let u = (probe[i] - cloud.center_um[i]) / cloud.radii_um[i];
                    g += u * u;
                }
            }
            if g >= F::one() {
                return F::zero();
            }
            let h = w * (F::one() - g).sqrt();
            integrate(rule, c - h, c, |s| cloud.density_at(line(s)))
                + integrate(rule, c, c + h, |s| cloud.density_at(line(s)))
        }
    }
}
