//! Sensing-shell overlap integral checked against a brute-force midpoint
//! Riemann sum on a uniform cylindrical grid — an independent code path
//! from the Gauss-Legendre product rule used by the library.

use motprobe_core::cloud::{effective_atom_number, CloudModel, CloudShape};
use motprobe_core::physics::FiberSpec;
use motprobe_core::rng::SplitMix64;

/// Midpoint Riemann sum over the annular cylinder in (ρ, φ, z).
///
/// Radial step ≤ Δr/20; the ρ·dρ measure is exact at cell midpoints, so the
/// only error is density sampling. z spans ±5 z-radii around the cloud.
fn riemann_shell_integral(cloud: &CloudModel<f64>, fiber: &FiberSpec<f64>) -> f64 {
    let a = fiber.waist_diameter_um / 2.0;
    let dr = fiber.interaction_range_um;
    let n_rho = 20usize;
    let n_phi = 64usize;
    let n_z = 800usize;

    let d_rho = dr / n_rho as f64;
    let d_phi = 2.0 * std::f64::consts::PI / n_phi as f64;
    let wz = cloud.radii_um[2];
    let z_lo = cloud.center_um[2] - 5.0 * wz;
    let d_z = 10.0 * wz / n_z as f64;

    let mut total = 0.0;
    for i in 0..n_rho {
        let rho = a + (i as f64 + 0.5) * d_rho;
        for j in 0..n_phi {
            let phi = (j as f64 + 0.5) * d_phi;
            let x = rho * phi.cos();
            let y = rho * phi.sin();
            let mut column = 0.0;
            for k in 0..n_z {
                let z = z_lo + (k as f64 + 0.5) * d_z;
                column += cloud.density_at([x, y, z]);
            }
            total += rho * column;
        }
    }
    total * d_rho * d_phi * d_z
}

fn random_cloud(rng: &mut SplitMix64, shape: CloudShape) -> CloudModel<f64> {
    let radius = |r: &mut SplitMix64| 100.0 + 1900.0 * r.next_unit_f64();
    let wx = radius(rng);
    let wy = radius(rng);
    let wz = radius(rng);
    // offsets stay well inside the cloud so the shell sees real density
    let off = |r: &mut SplitMix64, w: f64| (r.next_unit_f64() - 0.5) * 1.4 * w;
    CloudModel {
        shape,
        center_um: [off(rng, wx), off(rng, wy), off(rng, wz)],
        radii_um: [wx, wy, wz],
        peak_density_per_um3: 1.0e-4 + 8.0e-3 * rng.next_unit_f64(),
    }
}

#[test]
fn quadrature_matches_riemann_oracle_on_random_geometries() {
    let fiber: FiberSpec<f64> = FiberSpec::paper_default();
    let mut rng = SplitMix64::new(20240917);
    for trial in 0..20 {
        let shape = if trial % 2 == 0 {
            CloudShape::Gaussian
        } else {
            CloudShape::FlatTop
        };
        let cloud = random_cloud(&mut rng, shape);
        let fast = effective_atom_number(&cloud, &fiber).unwrap();
        let slow = riemann_shell_integral(&cloud, &fiber);
        let scale = slow.abs().max(1e-30);
        assert!(
            (fast - slow).abs() / scale < 0.01,
            "trial {trial} ({shape:?}): quadrature {fast} vs oracle {slow}"
        );
    }
}

#[test]
fn quadrature_matches_oracle_on_paper_geometry() {
    let fiber: FiberSpec<f64> = FiberSpec::paper_default();
    let cloud: CloudModel<f64> = CloudModel::paper_default();
    let fast = effective_atom_number(&cloud, &fiber).unwrap();
    let slow = riemann_shell_integral(&cloud, &fiber);
    assert!((fast - slow).abs() / slow < 0.01, "{fast} vs {slow}");
}

#[test]
fn overlap_monotone_in_shell_depth_and_density() {
    let cloud: CloudModel<f64> = CloudModel::paper_default();
    let mut fiber: FiberSpec<f64> = FiberSpec::paper_default();
    let mut previous = 0.0;
    for k in 1..=6 {
        fiber.interaction_range_um = 0.1 * k as f64;
        let value = effective_atom_number(&cloud, &fiber).unwrap();
        assert!(value > previous, "not monotone in shell depth at k={k}");
        previous = value;
    }

    let fiber: FiberSpec<f64> = FiberSpec::paper_default();
    let mut previous = 0.0;
    for k in 1..=6 {
        let mut denser = cloud.clone();
        denser.peak_density_per_um3 = 1.0e-3 * k as f64;
        let value = effective_atom_number(&denser, &fiber).unwrap();
        assert!(value > previous, "not monotone in density at k={k}");
        previous = value;
    }
}
