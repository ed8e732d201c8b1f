//! The ten reference lattices, generated as periodic systems with unit
//! nearest-neighbor spacing.
//!
//! Non-orthogonal Bravais cells (hexagonal, oblique, monoclinic, hcp) are
//! emitted as orthogonal supercells, since periodic boxes here are
//! axis-aligned. Oblique and monoclinic stacking offsets must therefore be
//! commensurate: the row offset per layer has to repeat after a whole number
//! of layers. The defaults satisfy this.

use crate::system::{Dim, ParticleSystem};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LatticeKind {
    Hexagonal,
    Square,
    CenteredRectangular,
    Rectangular,
    Oblique,
    Fcc,
    Hcp,
    Bcc,
    SimpleCubic,
    PrimitiveMonoclinic,
}

impl LatticeKind {
    pub const ALL: [LatticeKind; 10] = [
        LatticeKind::Hexagonal,
        LatticeKind::Square,
        LatticeKind::CenteredRectangular,
        LatticeKind::Rectangular,
        LatticeKind::Oblique,
        LatticeKind::Fcc,
        LatticeKind::Hcp,
        LatticeKind::Bcc,
        LatticeKind::SimpleCubic,
        LatticeKind::PrimitiveMonoclinic,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            LatticeKind::Hexagonal => "hexagonal",
            LatticeKind::Square => "square",
            LatticeKind::CenteredRectangular => "centered-rectangular",
            LatticeKind::Rectangular => "rectangular",
            LatticeKind::Oblique => "oblique",
            LatticeKind::Fcc => "fcc",
            LatticeKind::Hcp => "hcp",
            LatticeKind::Bcc => "bcc",
            LatticeKind::SimpleCubic => "simple-cubic",
            LatticeKind::PrimitiveMonoclinic => "primitive-monoclinic",
        }
    }

    pub fn from_name(s: &str) -> Option<LatticeKind> {
        LatticeKind::ALL.iter().copied().find(|k| k.name() == s)
    }

    pub fn dim(&self) -> Dim {
        match self {
            LatticeKind::Hexagonal
            | LatticeKind::Square
            | LatticeKind::CenteredRectangular
            | LatticeKind::Rectangular
            | LatticeKind::Oblique => Dim::Two,
            _ => Dim::Three,
        }
    }

    /// Coordination number of the robustified Voronoi neighborhood for an
    /// ideal crystal of this kind (with default parameters).
    pub fn expected_coordination(&self) -> usize {
        match self {
            LatticeKind::Hexagonal => 6,
            LatticeKind::Square => 4,
            LatticeKind::CenteredRectangular => 6,
            LatticeKind::Rectangular => 4,
            LatticeKind::Oblique => 6,
            LatticeKind::Fcc => 12,
            LatticeKind::Hcp => 12,
            LatticeKind::Bcc => 14,
            LatticeKind::SimpleCubic => 6,
            LatticeKind::PrimitiveMonoclinic => 6,
        }
    }
}

/// Geometry and extent of a lattice to generate.
///
/// Ratios follow the conventional cell: `ratio_b` = a2/a1, `ratio_c` = a3/a1,
/// `angle_deg` the oblique/monoclinic angle. A `None` ratio takes the
/// kind-specific default.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub kind: LatticeKind,
    /// Repetitions per axis; the third entry is ignored in 2D. Oblique and
    /// monoclinic row counts are rounded up to a commensurate supercell.
    pub extent: [u32; 3],
    pub ratio_b: Option<f64>,
    pub ratio_c: Option<f64>,
    pub angle_deg: Option<f64>,
}

impl LatticeSpec {
    pub fn new(kind: LatticeKind, extent: [u32; 3]) -> Self {
        LatticeSpec {
            kind,
            extent,
            ratio_b: None,
            ratio_c: None,
            angle_deg: None,
        }
    }

    pub fn with_ratio_b(mut self, b: f64) -> Self {
        self.ratio_b = Some(b);
        self
    }

    pub fn with_ratio_c(mut self, c: f64) -> Self {
        self.ratio_c = Some(c);
        self
    }

    pub fn with_angle_deg(mut self, a: f64) -> Self {
        self.angle_deg = Some(a);
        self
    }

    pub fn ratio_b_or_default(&self) -> f64 {
        self.ratio_b.unwrap_or(match self.kind {
            LatticeKind::CenteredRectangular => 2.0,
            LatticeKind::Rectangular => 1.25,
            LatticeKind::Oblique => 1.25,
            LatticeKind::PrimitiveMonoclinic => 4.0 / 3.0,
            _ => 1.0,
        })
    }

    pub fn ratio_c_or_default(&self) -> f64 {
        self.ratio_c.unwrap_or(match self.kind {
            LatticeKind::Hcp => (8.0f64 / 3.0).sqrt(),
            LatticeKind::PrimitiveMonoclinic => 1.5,
            _ => 1.0,
        })
    }

    pub fn angle_or_default(&self) -> f64 {
        self.angle_deg.unwrap_or(match self.kind {
            LatticeKind::Oblique | LatticeKind::PrimitiveMonoclinic => 60.0,
            _ => 90.0,
        })
    }
}

/// Smallest positive k with k*x within 1e-9 of an integer, up to 64.
fn commensurate_period(x: f64) -> Result<u32> {
    for k in 1..=64u32 {
        let v = x * k as f64;
        if (v - v.round()).abs() < 1e-9 {
            return Ok(k);
        }
    }
    Err(Error::Domain(format!(
        "layer offset {x} does not repeat within 64 layers; pick a commensurate ratio/angle"
    )))
}

fn check_extent(extent: [u32; 3], dims: usize) -> Result<()> {
    for (a, &e) in extent.iter().take(dims).enumerate() {
        if e < 3 {
            return Err(Error::Domain(format!(
                "lattice extent must be at least 3 per axis (axis {a} has {e})"
            )));
        }
    }
    Ok(())
}

/// Generate a periodic lattice with unit nearest-neighbor spacing.
pub fn generate_lattice(spec: &LatticeSpec) -> Result<ParticleSystem> {
    let b = spec.ratio_b_or_default();
    let c = spec.ratio_c_or_default();
    let phi = spec.angle_or_default().to_radians();
    if !(b > 0.0 && c > 0.0) || !(phi > 0.0 && phi < std::f64::consts::PI) {
        return Err(Error::Domain("lattice ratios must be positive and the angle in (0, 180)".into()));
    }
    let [nx, ny, nz] = spec.extent;
    match spec.kind {
        LatticeKind::Square => {
            check_extent(spec.extent, 2)?;
            let mut pts = Vec::with_capacity((nx * ny) as usize);
            for i in 0..nx {
                for j in 0..ny {
                    pts.push([i as f64, j as f64, 0.0]);
                }
            }
            ParticleSystem::new(Dim::Two, pts, Some([nx as f64, ny as f64, 0.0]))
        }
        LatticeKind::Rectangular => {
            check_extent(spec.extent, 2)?;
            let mut pts = Vec::new();
            for i in 0..nx {
                for j in 0..ny {
                    pts.push([i as f64, j as f64 * b, 0.0]);
                }
            }
            ParticleSystem::new(Dim::Two, pts, Some([nx as f64, ny as f64 * b, 0.0]))
        }
        LatticeKind::CenteredRectangular => {
            check_extent(spec.extent, 2)?;
            let mut pts = Vec::new();
            for i in 0..nx {
                for j in 0..ny {
                    let (x, y) = (i as f64, j as f64 * b);
                    pts.push([x, y, 0.0]);
                    pts.push([x + 0.5, y + 0.5 * b, 0.0]);
                }
            }
            ParticleSystem::new(Dim::Two, pts, Some([nx as f64, ny as f64 * b, 0.0]))
        }
        LatticeKind::Hexagonal => {
            check_extent(spec.extent, 2)?;
            let h = 3.0f64.sqrt() / 2.0;
            let mut pts = Vec::new();
            for i in 0..nx {
                for j in 0..ny {
                    let (x, y) = (i as f64, j as f64 * 2.0 * h);
                    pts.push([x, y, 0.0]);
                    pts.push([x + 0.5, y + h, 0.0]);
                }
            }
            ParticleSystem::new(Dim::Two, pts, Some([nx as f64, ny as f64 * 2.0 * h, 0.0]))
        }
        LatticeKind::Oblique => {
            check_extent(spec.extent, 2)?;
            // rows of unit spacing, each shifted by b*cos(phi) and raised by b*sin(phi)
            let dx = b * phi.cos();
            let dy = b * phi.sin();
            let period = commensurate_period(dx)?;
            let rows = ny.div_ceil(period) * period;
            let mut pts = Vec::new();
            for k in 0..rows {
                let off = (k as f64 * dx).rem_euclid(1.0);
                for i in 0..nx {
                    pts.push([(i as f64 + off).rem_euclid(nx as f64), k as f64 * dy, 0.0]);
                }
            }
            ParticleSystem::new(Dim::Two, pts, Some([nx as f64, rows as f64 * dy, 0.0]))
        }
        LatticeKind::SimpleCubic => {
            check_extent(spec.extent, 3)?;
            let mut pts = Vec::new();
            for i in 0..nx {
                for j in 0..ny {
                    for k in 0..nz {
                        pts.push([i as f64, j as f64, k as f64]);
                    }
                }
            }
            ParticleSystem::new(
                Dim::Three,
                pts,
                Some([nx as f64, ny as f64, nz as f64]),
            )
        }
        LatticeKind::Fcc => {
            check_extent(spec.extent, 3)?;
            let a = 2.0f64.sqrt();
            let basis = [
                [0.0, 0.0, 0.0],
                [0.0, 0.5, 0.5],
                [0.5, 0.0, 0.5],
                [0.5, 0.5, 0.0],
            ];
            let mut pts = Vec::new();
            for i in 0..nx {
                for j in 0..ny {
                    for k in 0..nz {
                        for bpos in &basis {
                            pts.push([
                                (i as f64 + bpos[0]) * a,
                                (j as f64 + bpos[1]) * a,
                                (k as f64 + bpos[2]) * a,
                            ]);
                        }
                    }
                }
            }
            ParticleSystem::new(
                Dim::Three,
                pts,
                Some([nx as f64 * a, ny as f64 * a, nz as f64 * a]),
            )
        }
        LatticeKind::Bcc => {
            check_extent(spec.extent, 3)?;
            let a = 2.0 / 3.0f64.sqrt();
            let mut pts = Vec::new();
            for i in 0..nx {
                for j in 0..ny {
                    for k in 0..nz {
                        let (x, y, z) = (i as f64 * a, j as f64 * a, k as f64 * a);
                        pts.push([x, y, z]);
                        pts.push([x + 0.5 * a, y + 0.5 * a, z + 0.5 * a]);
                    }
                }
            }
            ParticleSystem::new(
                Dim::Three,
                pts,
                Some([nx as f64 * a, ny as f64 * a, nz as f64 * a]),
            )
        }
        LatticeKind::Hcp => {
            check_extent(spec.extent, 3)?;
            let h = 3.0f64.sqrt();
            let third = h / 3.0; // y offset of the B layer above the A-triangle centroid
            let mut pts = Vec::new();
            for i in 0..nx {
                for j in 0..ny {
                    for k in 0..nz {
                        let (x, y, z) = (i as f64, j as f64 * h, k as f64 * c);
                        pts.push([x, y, z]);
                        pts.push([x + 0.5, y + h / 2.0, z]);
                        pts.push([x + 0.5, y + third / 2.0, z + c / 2.0]);
                        pts.push([x + 1.0, y + third / 2.0 + h / 2.0, z + c / 2.0]);
                    }
                }
            }
            ParticleSystem::new(
                Dim::Three,
                pts,
                Some([nx as f64, ny as f64 * h, nz as f64 * c]),
            )
        }
        LatticeKind::PrimitiveMonoclinic => {
            check_extent(spec.extent, 3)?;
            // unique axis y (length b); the (a1, a3) plane is oblique with angle phi
            let dx = c * phi.cos();
            let dz = c * phi.sin();
            let period = commensurate_period(dx)?;
            let layers = nz.div_ceil(period) * period;
            let mut pts = Vec::new();
            for k in 0..layers {
                let off = (k as f64 * dx).rem_euclid(1.0);
                for i in 0..nx {
                    for j in 0..ny {
                        pts.push([
                            (i as f64 + off).rem_euclid(nx as f64),
                            j as f64 * b,
                            k as f64 * dz,
                        ]);
                    }
                }
            }
            ParticleSystem::new(
                Dim::Three,
                pts,
                Some([nx as f64, ny as f64 * b, layers as f64 * dz]),
            )
        }
    }
}

/// Atomic packing factor by the sphere-at-half-nearest-distance convention.
pub fn packing_factor(system: &ParticleSystem) -> f64 {
    let rp = crate::system::median_nearest_distance(system);
    let b = system
        .periodic_box()
        .expect("packing factor needs a periodic system");
    let n = system.len() as f64;
    match system.dim() {
        Dim::Two => {
            let area = b[0] * b[1];
            n * std::f64::consts::PI * (rp / 2.0) * (rp / 2.0) / area
        }
        Dim::Three => {
            let vol = b[0] * b[1] * b[2];
            n * 4.0 / 3.0 * std::f64::consts::PI * (rp / 2.0).powi(3) / vol
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::median_nearest_distance;
    use approx::assert_relative_eq;

    #[test]
    fn all_kinds_have_unit_nearest_spacing() {
        for kind in LatticeKind::ALL {
            let s = generate_lattice(&LatticeSpec::new(kind, [4, 4, 4])).unwrap();
            let rp = median_nearest_distance(&s);
            assert_relative_eq!(rp, 1.0, max_relative = 1e-9);
            for (i, &r) in crate::system::nearest_distances(&s).iter().enumerate() {
                assert!((r - 1.0).abs() < 1e-9, "{} particle {i}: r_p = {r}", kind.name());
            }
        }
    }

    #[test]
    fn fcc_extent_6_has_864_particles() {
        let s = generate_lattice(&LatticeSpec::new(LatticeKind::Fcc, [6, 6, 6])).unwrap();
        assert_eq!(s.len(), 864);
    }

    #[test]
    fn packing_factors_match_analytic_values() {
        // (kind, expected APF with default parameters)
        let pi = std::f64::consts::PI;
        let cases = [
            (LatticeKind::Hexagonal, pi / (2.0 * 3.0f64.sqrt())), // 0.9069
            (LatticeKind::Square, pi / 4.0),                      // 0.7854
            (LatticeKind::CenteredRectangular, pi / 4.0),         // conventional 1x2 cell, 2 sites
            (LatticeKind::Rectangular, pi / 4.0 / 1.25),          // 0.6283
            (LatticeKind::Fcc, pi * 2.0f64.sqrt() / 6.0),         // 0.7405
            (LatticeKind::Hcp, pi * 2.0f64.sqrt() / 6.0),         // 0.7405
            (LatticeKind::Bcc, pi * 3.0f64.sqrt() / 8.0),         // 0.6802
            (LatticeKind::SimpleCubic, pi / 6.0),                 // 0.5236
        ];
        for (kind, expect) in cases {
            let s = generate_lattice(&LatticeSpec::new(kind, [4, 4, 4])).unwrap();
            assert_relative_eq!(packing_factor(&s), expect, max_relative = 1e-6);
        }
        // oblique (1.25, 60 deg): cell area = 1.25*sin(60)
        let s = generate_lattice(&LatticeSpec::new(LatticeKind::Oblique, [4, 4, 4])).unwrap();
        assert_relative_eq!(
            packing_factor(&s),
            pi / 4.0 / (1.25 * (60f64).to_radians().sin()),
            max_relative = 1e-6
        );
        // monoclinic (4/3, 3/2, 60 deg): cell volume = (4/3)*(3/2)*sin(60)
        let s =
            generate_lattice(&LatticeSpec::new(LatticeKind::PrimitiveMonoclinic, [4, 4, 4])).unwrap();
        assert_relative_eq!(
            packing_factor(&s),
            pi / 6.0 / (2.0 * (60f64).to_radians().sin()),
            max_relative = 1e-6
        );
    }

    #[test]
    fn rectangular_at_ratio_2_matches_published_packing() {
        let s = generate_lattice(
            &LatticeSpec::new(LatticeKind::Rectangular, [4, 4, 4]).with_ratio_b(2.0),
        )
        .unwrap();
        assert_relative_eq!(packing_factor(&s), 0.3927, max_relative = 1e-3);
    }

    #[test]
    fn extent_below_3_is_rejected() {
        assert!(generate_lattice(&LatticeSpec::new(LatticeKind::Fcc, [2, 4, 4])).is_err());
    }

    #[test]
    fn deterministic_output() {
        let a = generate_lattice(&LatticeSpec::new(LatticeKind::Hcp, [3, 3, 3])).unwrap();
        let b = generate_lattice(&LatticeSpec::new(LatticeKind::Hcp, [3, 3, 3])).unwrap();
        assert_eq!(a.positions(), b.positions());
    }
}
