//! Parametric atom-density fields and their overlap with the fiber's
//! sensing shell.
//!
//! Two shapes cover the trap's regimes: a Gaussian ellipsoid
//! (temperature-limited, density scales with atom number at fixed size) and
//! a hard-edged flat-top ellipsoid (constant-density, size scales with atom
//! number). Lengths in µm, densities in atoms/µm³.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::physics::FiberSpec;
use crate::quad::{gauss_legendre, integrate};
use crate::scalar::{Real, Vec3};

/// Functional form of the density field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CloudShape {
    /// n₀ · exp(−Σ((pᵢ−cᵢ)/wᵢ)²), radii are 1/e radii.
    Gaussian,
    /// Uniform density inside the axis-aligned ellipsoid, zero outside.
    FlatTop,
}

/// Atom cloud: shape, center, 1/e (or hard) radii, and peak density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CloudModel<F> {
    pub shape: CloudShape,
    /// Cloud center (µm); the fiber runs along z through x = y = 0.
    pub center_um: Vec3<F>,
    /// Per-axis 1/e radii (Gaussian) or hard radii (FlatTop), µm.
    pub radii_um: Vec3<F>,
    /// Peak density n₀ (Gaussian) or uniform density n_c (FlatTop), atoms/µm³.
    pub peak_density_per_um3: F,
}

impl<F: Real> CloudModel<F> {
    /// The measured cloud: 1/e lengths 1.3 mm (horizontal) × 2 mm (vertical
    /// along the fiber), peak density 4×10⁻³ atoms/µm³.
    pub fn paper_default() -> Self {
        CloudModel {
            shape: CloudShape::Gaussian,
            center_um: [F::zero(); 3],
            radii_um: [
                F::from_f64(650.0),
                F::from_f64(650.0),
                F::from_f64(1000.0),
            ],
            peak_density_per_um3: F::from_f64(4.0e-3),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let radii_ok = self.radii_um.iter().all(|w| w.is_finite() && *w > F::zero());
        let center_ok = self.center_um.iter().all(|c| c.is_finite());
        let density_ok =
            self.peak_density_per_um3.is_finite() && self.peak_density_per_um3 >= F::zero();
        if radii_ok && center_ok && density_ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(
                "cloud: require radii > 0, density >= 0, finite center".into(),
            ))
        }
    }

    /// Density (atoms/µm³) at a point (µm).
    pub fn density_at(&self, point_um: Vec3<F>) -> F {
        let mut q = F::zero();
        for i in 0..3 {
            let u = (point_um[i] - self.center_um[i]) / self.radii_um[i];
            q += u * u;
        }
        match self.shape {
            CloudShape::Gaussian => self.peak_density_per_um3 * (-q).exp(),
            CloudShape::FlatTop => {
                if q <= F::one() {
                    self.peak_density_per_um3
                } else {
                    F::zero()
                }
            }
        }
    }

    /// Total atom count: closed-form integral of the density field.
    pub fn total_atoms(&self) -> F {
        let rprod = self.radii_um[0] * self.radii_um[1] * self.radii_um[2];
        match self.shape {
            CloudShape::Gaussian => {
                self.peak_density_per_um3 * F::PI().powf(F::from_f64(1.5)) * rprod
            }
            CloudShape::FlatTop => {
                self.peak_density_per_um3 * F::from_f64(4.0 / 3.0) * F::PI() * rprod
            }
        }
    }

    /// Volume (µm³) enclosed by the 1/e surface (Gaussian) or the hard edge
    /// (FlatTop): (4π/3)·wₓ·w_y·w_z.
    pub fn ellipsoid_volume_um3(&self) -> F {
        F::from_f64(4.0 / 3.0)
            * F::PI()
            * self.radii_um[0]
            * self.radii_um[1]
            * self.radii_um[2]
    }

    /// Copy of the cloud with its center shifted by `offset_um`.
    pub fn translate(&self, offset_um: Vec3<F>) -> Self {
        let mut out = self.clone();
        for i in 0..3 {
            out.center_um[i] = out.center_um[i] + offset_um[i];
        }
        out
    }
}

/// Parameters of the temperature-limited / constant-density crossover.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeParams<F> {
    /// Atom number N_x at which the trap leaves the temperature-limited regime.
    pub crossover_atoms: F,
    /// Uniform density n_c of the constant-density regime (atoms/µm³).
    pub constant_density_per_um3: F,
    /// Effective exponent α of the fiber-visible signal above the crossover.
    pub central_density_exponent_alpha: F,
}

impl<F: Real> RegimeParams<F> {
    /// Defaults with n_c tied to `template` so the cloud geometry is
    /// continuous in N at the crossover: n_c = N_x / ((4π/3)·wₓ·w_y·w_z).
    pub fn continuous(crossover_atoms: F, alpha: F, template: &CloudModel<F>) -> Self {
        RegimeParams {
            crossover_atoms,
            constant_density_per_um3: crossover_atoms / template.ellipsoid_volume_um3(),
            central_density_exponent_alpha: alpha,
        }
    }

    /// N_x = 5×10⁴, α = 0.723, n_c continuous with the default cloud.
    pub fn paper_default() -> Self {
        Self::continuous(
            F::from_f64(5.0e4),
            F::from_f64(0.723),
            &CloudModel::paper_default(),
        )
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.crossover_atoms.is_finite()
            && self.crossover_atoms > F::zero()
            && self.constant_density_per_um3.is_finite()
            && self.constant_density_per_um3 > F::zero()
            && self.central_density_exponent_alpha >= F::zero()
            && self.central_density_exponent_alpha <= F::one();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(
                "regime: require crossover > 0, constant_density > 0, 0 <= alpha <= 1".into(),
            ))
        }
    }
}

/// Cloud holding exactly `n_atoms`, in the regime that atom number implies.
///
/// At or below the crossover the cloud is a Gaussian with the template radii
/// and density scaled so the total matches. Above it the cloud is a flat-top
/// at the regime density with radii grown as N^(1/3) at fixed aspect ratio.
pub fn cloud_for_atom_number<F: Real>(
    n_atoms: F,
    regime: &RegimeParams<F>,
    template: &CloudModel<F>,
) -> Result<CloudModel<F>> {
    if !(n_atoms.is_finite() && n_atoms >= F::zero()) {
        return Err(Error::InvalidInput(
            "cloud_for_atom_number: atom number must be finite and >= 0".into(),
        ));
    }
    regime.validate()?;
    template.validate()?;
    let gauss_volume = F::PI().powf(F::from_f64(1.5))
        * template.radii_um[0]
        * template.radii_um[1]
        * template.radii_um[2];
    if n_atoms <= regime.crossover_atoms {
        Ok(CloudModel {
            shape: CloudShape::Gaussian,
            center_um: template.center_um,
            radii_um: template.radii_um,
            peak_density_per_um3: n_atoms / gauss_volume,
        })
    } else {
        let target_volume = n_atoms / regime.constant_density_per_um3;
        let scale = (target_volume / template.ellipsoid_volume_um3()).cbrt();
        Ok(CloudModel {
            shape: CloudShape::FlatTop,
            center_um: template.center_um,
            radii_um: [
                template.radii_um[0] * scale,
                template.radii_um[1] * scale,
                template.radii_um[2] * scale,
            ],
            peak_density_per_um3: regime.constant_density_per_um3,
        })
    }
}

/// Quadrature orders for the sensing-shell overlap integral.
const RADIAL_ORDER: usize = 16;
const AZIMUTHAL_ORDER: usize = 32;
const Z_PANEL_ORDER: usize = 8;
/// Gaussian z panels per z-radius (panel width w_z/2 over ±5·w_z).
const Z_SPAN_RADII: f64 = 5.0;
const Z_PANELS_PER_RADIUS: usize = 2;

/// Atoms inside the fiber's sensing shell: the density integrated over the
/// annular cylinder a ≤ ρ ≤ a + Δr around the fiber axis, z spanning ±5
/// cloud z-radii around the cloud center.
///
/// Product Gauss-Legendre rule, 16-point radial × 32-point azimuthal, with z
/// panels adapted to the shape (uniform panels across the Gaussian span,
/// support-clipped panels for the flat-top edge). Relative error < 10⁻³ for
/// clouds much larger than the shell.
pub fn effective_atom_number<F: Real>(
    cloud: &CloudModel<F>,
    fiber: &FiberSpec<F>,
) -> Result<F> {
    cloud.validate()?;
    if !(fiber.interaction_range_um.is_finite() && fiber.interaction_range_um > F::zero()) {
        return Err(Error::InvalidGeometry(
            "interaction_range must be > 0".into(),
        ));
    }
    fiber.validate()?;

    let inner = fiber.waist_radius_um();
    let outer = inner + fiber.interaction_range_um;
    let radial = gauss_legendre::<F>(RADIAL_ORDER);
    let azimuthal = gauss_legendre::<F>(AZIMUTHAL_ORDER);
    let z_rule = gauss_legendre::<F>(Z_PANEL_ORDER);

    let two_pi = F::from_f64(2.0) * F::PI();
    let cz = cloud.center_um[2];
    let wz = cloud.radii_um[2];

    let total = integrate(&radial, inner, outer, |rho| {
        let ring = integrate(&azimuthal, F::zero(), two_pi, |phi| {
            let x = rho * phi.cos();
            let y = rho * phi.sin();
            line_density_z(cloud, x, y, cz, wz, &z_rule)
        });
        rho * ring
    });
    Ok(total)
}

/// ∫ n(x, y, z) dz over the sensing span at fixed (x, y).
fn line_density_z<F: Real>(
    cloud: &CloudModel<F>,
    x: F,
    y: F,
    cz: F,
    wz: F,
    z_rule: &[(F, F)],
) -> F {
    match cloud.shape {
        CloudShape::Gaussian => {
            let span = F::from_f64(Z_SPAN_RADII) * wz;
            let panels = (2.0 * Z_SPAN_RADII) as usize * Z_PANELS_PER_RADIUS;
            let width = F::from_f64(2.0) * span / F::from_f64(panels as f64);
            let mut acc = F::zero();
            for p in 0..panels {
                let z0 = cz - span + width * F::from_f64(p as f64);
                acc += integrate(z_rule, z0, z0 + width, |z| cloud.density_at([x, y, z]));
            }
            acc
        }
        CloudShape::FlatTop => {
            // clip to the local chord through the ellipsoid; the integrand is
            // constant there, so a single panel per half is exact
            let ux = (x - cloud.center_um[0]) / cloud.radii_um[0];
            let uy = (y - cloud.center_um[1]) / cloud.radii_um[1];
            let g = ux * ux + uy * uy;
            if g >= F::one() {
                return F::zero();
            }
            let h = wz * (F::one() - g).sqrt();
            integrate(z_rule, cz - h, cz, |z| cloud.density_at([x, y, z]))
                + integrate(z_rule, cz, cz + h, |z| cloud.density_at([x, y, z]))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn paper_cloud() -> CloudModel<f64> {
        CloudModel::paper_default()
    }

    fn paper_fiber() -> FiberSpec<f64> {
        FiberSpec::paper_default()
    }

    #[test]
    fn gaussian_density_peak_and_one_over_e() {
        let c = paper_cloud();
        assert_eq!(c.density_at(c.center_um), c.peak_density_per_um3);
        let p = [c.center_um[0] + c.radii_um[0], c.center_um[1], c.center_um[2]];
        assert_relative_eq!(
            c.density_at(p),
            c.peak_density_per_um3 / std::f64::consts::E,
            max_relative = 1e-14
        );
    }

    #[test]
    fn flat_top_membership() {
        let c = CloudModel {
            shape: CloudShape::FlatTop,
            center_um: [0.0; 3],
            radii_um: [1.0; 3],
            peak_density_per_um3: 5.0,
        };
        assert_eq!(c.density_at([0.5, 0.5, 0.5]), 5.0);
        assert_eq!(c.density_at([1.0, 1.0, 1.0]), 0.0);
    }

    #[test]
    fn total_atoms_normalizations() {
        let g = CloudModel {
            shape: CloudShape::Gaussian,
            center_um: [0.0; 3],
            radii_um: [1.0; 3],
            peak_density_per_um3: std::f64::consts::PI.powf(-1.5),
        };
        assert_relative_eq!(g.total_atoms(), 1.0, max_relative = 1e-14);

        let f = CloudModel {
            shape: CloudShape::FlatTop,
            center_um: [0.0; 3],
            radii_um: [1.0; 3],
            peak_density_per_um3: 3.0 / (4.0 * std::f64::consts::PI),
        };
        assert_relative_eq!(f.total_atoms(), 1.0, max_relative = 1e-14);
    }

    #[test]
    fn total_atoms_paper_cloud() {
        assert_relative_eq!(paper_cloud().total_atoms(), 9.41e6, max_relative = 0.01);
    }

    #[test]
    fn effective_atoms_uniform_slab_matches_shell_volume() {
        // uniform density over the full shell: analytic π(b² − a²)·L·n
        let slab = CloudModel {
            shape: CloudShape::FlatTop,
            center_um: [0.0; 3],
            radii_um: [1.0e6, 1.0e6, 1000.0],
            peak_density_per_um3: 4.0e-3,
        };
        let expect = std::f64::consts::PI * (0.36 - 0.09) * 2000.0 * 4.0e-3;
        let got = effective_atom_number(&slab, &paper_fiber()).unwrap();
        assert_relative_eq!(got, expect, max_relative = 5e-3);
        assert_relative_eq!(got, 6.79, max_relative = 5e-3);
    }

    #[test]
    fn effective_atoms_paper_cloud_near_six() {
        let got = effective_atom_number(&paper_cloud(), &paper_fiber()).unwrap();
        assert!(got > 4.2 && got < 7.8, "N_eff = {got}");
        // frozen reference: analytic radial×z factorization of the Gaussian
        assert_relative_eq!(got, 6.0138, max_relative = 1e-3);
    }

    #[test]
    fn effective_atoms_zero_density() {
        let mut c = paper_cloud();
        c.peak_density_per_um3 = 0.0;
        assert_eq!(effective_atom_number(&c, &paper_fiber()).unwrap(), 0.0);
    }

    #[test]
    fn effective_atoms_distant_cloud_vanishes() {
        let c = paper_cloud();
        let on = effective_atom_number(&c, &paper_fiber()).unwrap();
        let off = effective_atom_number(
            &c.translate([10.0 * c.radii_um[0], 0.0, 0.0]),
            &paper_fiber(),
        )
        .unwrap();
        assert!(off < 1e-20 * on, "off-center overlap {off} vs {on}");
    }

    #[test]
    fn effective_atoms_rejects_bad_shell() {
        let mut fiber = paper_fiber();
        fiber.interaction_range_um = 0.0;
        let err = effective_atom_number(&paper_cloud(), &fiber).unwrap_err();
        assert!(matches!(err, Error::InvalidGeometry(_)));
    }

    #[test]
    fn cloud_for_atom_number_branches() {
        let regime: RegimeParams<f64> = RegimeParams::paper_default();
        let template = paper_cloud();

        let zero = cloud_for_atom_number(0.0, &regime, &template).unwrap();
        assert_eq!(zero.peak_density_per_um3, 0.0);
        assert_eq!(zero.radii_um, template.radii_um);

        let nx = regime.crossover_atoms;
        let below = cloud_for_atom_number(nx * (1.0 - 1e-4), &regime, &template).unwrap();
        let above = cloud_for_atom_number(nx * (1.0 + 1e-4), &regime, &template).unwrap();
        assert_relative_eq!(below.total_atoms(), nx * (1.0 - 1e-4), max_relative = 1e-12);
        assert_relative_eq!(above.total_atoms(), nx * (1.0 + 1e-4), max_relative = 1e-12);
        assert_relative_eq!(
            below.ellipsoid_volume_um3(),
            above.ellipsoid_volume_um3(),
            max_relative = 1e-3
        );

        let eight = cloud_for_atom_number(8.0 * nx, &regime, &template).unwrap();
        for i in 0..3 {
            assert_relative_eq!(eight.radii_um[i], 2.0 * template.radii_um[i], max_relative = 1e-12);
        }

        assert!(cloud_for_atom_number(-1.0, &regime, &template).is_err());
    }

    #[test]
    fn cloud_for_atom_number_is_exact_over_wide_range() {
        let regime: RegimeParams<f64> = RegimeParams::paper_default();
        let template = paper_cloud();
        let mut n = 1.0;
        while n <= 1.0e8 {
            let cloud = cloud_for_atom_number(n, &regime, &template).unwrap();
            assert_relative_eq!(cloud.total_atoms(), n, max_relative = 1e-6);
            n *= 10.0;
        }
    }

    #[test]
    fn translate_composes_and_inverts() {
        let c = paper_cloud();
        let v = [12.5, -3.0, 7.0];
        let back = c.translate(v).translate([-v[0], -v[1], -v[2]]);
        assert_eq!(back.center_um, c.center_um);
        assert_eq!(c.translate([0.0; 3]).center_um, c.center_um);
    }
}
