//! Thermal noise: correlated Gaussian displacements with the exponential
//! correlation function C(r) = 0.8 exp(-r) (unit self-correlation), a
//! nearest-PSD correction, and a copper-based temperature calibration
//! (rms fraction 0.036 at 300 K, growing like sqrt(T)).
//!
//! Each coordinate axis receives one independent draw from N(0, C); the
//! common scale is set so the expected root-mean-square displacement
//! magnitude equals the requested fraction of the median nearest-neighbor
//! distance.

use crate::seed::{SeedPolicy, StreamDomain};
use crate::system::{median_nearest_distance, ParticleSystem};
use crate::{Error, Result};
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Reference rms displacement fraction of copper at 300 K.
pub const REFERENCE_RMS_FRACTION: f64 = 0.036;
pub const REFERENCE_TEMPERATURE: f64 = 300.0;

/// Dense-factorization size limit; beyond this the eigendecomposition is no
/// longer desk-scale.
pub const MAX_CORRELATED_PARTICLES: usize = 5000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThermalMode {
    Correlated,
    Uncorrelated,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ThermalSpec {
    pub mode: ThermalMode,
    /// Root-mean-square displacement as a fraction of the median
    /// nearest-neighbor distance.
    pub rms_fraction: f64,
    /// Zero the correlation beyond this normalized distance (0.8 e^-8 is
    /// already below 3e-4, so 8 is a practical default when enabled).
    pub correlation_cutoff: Option<f64>,
    pub seed: SeedPolicy,
    /// Replica label mixed into the seed streams so repeated draws on one
    /// system are independent.
    pub replica: u64,
}

impl ThermalSpec {
    pub fn with_rms_fraction(mode: ThermalMode, rms_fraction: f64, seed: SeedPolicy) -> Self {
        ThermalSpec {
            mode,
            rms_fraction,
            correlation_cutoff: None,
            seed,
            replica: 0,
        }
    }

    /// Calibrate the rms fraction from a temperature in kelvin.
    pub fn with_temperature(mode: ThermalMode, kelvin: f64, seed: SeedPolicy) -> Self {
        Self::with_rms_fraction(mode, rms_fraction_at(kelvin), seed)
    }

    pub fn with_replica(mut self, replica: u64) -> Self {
        self.replica = replica;
        self
    }
}

/// rms fraction = 0.036 * sqrt(T / 300).
pub fn rms_fraction_at(kelvin: f64) -> f64 {
    REFERENCE_RMS_FRACTION * (kelvin / REFERENCE_TEMPERATURE).sqrt()
}

/// Pairwise correlation matrix: unit diagonal, 0.8 exp(-d_ij / r_median)
/// off-diagonal.
pub fn correlation_matrix(system: &ParticleSystem, cutoff: Option<f64>) -> DMatrix<f64> {
    let n = system.len();
    let rp = median_nearest_distance(system);
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = 1.0;
        for j in (i + 1)..n {
            let r = system.displacement(i, j);
            let d = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt() / rp;
            let c = match cutoff {
                Some(rc) if d > rc => 0.0,
                _ => 0.8 * (-d).exp(),
            };
            m[(i, j)] = c;
            m[(j, i)] = c;
        }
    }
    m
}

/// Frobenius-nearest positive semidefinite matrix: clip negative eigenvalues
/// to zero, then rescale the diagonal back to one so the result is again a
/// correlation matrix.
pub fn nearest_psd(matrix: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (f, _) = psd_factor(matrix)?;
    let n = matrix.nrows();
    let mut out = &f * f.transpose();
    // symmetrize away accumulation noise
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (out[(i, j)] + out[(j, i)]);
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    Ok(out)
}

/// Factor B with B * B^T = nearest PSD correlation matrix of the input.
/// Returns (B, clipped eigenvalue count).
fn psd_factor(matrix: &DMatrix<f64>) -> Result<(DMatrix<f64>, usize)> {
    let n = matrix.nrows();
    if matrix.ncols() != n {
        return Err(Error::Domain("correlation matrix must be square".into()));
    }
    let sym = 0.5 * (matrix + matrix.transpose());
    let eig = sym.symmetric_eigen();
    let mut clipped = 0usize;
    let mut lam = eig.eigenvalues.clone();
    for v in lam.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
            clipped += 1;
        }
    }
    // B0 = U sqrt(L); rows rescaled so diag(B B^T) = 1
    let mut b = eig.eigenvectors;
    for (c, l) in lam.iter().enumerate() {
        let s = l.sqrt();
        for r in 0..n {
            b[(r, c)] *= s;
        }
    }
    for r in 0..n {
        let d: f64 = (0..n).map(|c| b[(r, c)] * b[(r, c)]).sum();
        if d > 0.0 {
            let s = 1.0 / d.sqrt();
            for c in 0..n {
                b[(r, c)] *= s;
            }
        }
    }
    Ok((b, clipped))
}

/// Displace every particle by one thermal draw, returning the new system.
pub fn apply_thermal_displacements(
    system: &ParticleSystem,
    spec: &ThermalSpec,
) -> Result<ParticleSystem> {
    if !(spec.rms_fraction >= 0.0) {
        return Err(Error::Domain("rms fraction must be nonnegative".into()));
    }
    if spec.rms_fraction == 0.0 {
        return system.with_positions(system.positions().to_vec());
    }
    let n = system.len();
    let ndim = system.dim().as_usize();
    let rp = median_nearest_distance(system);
    // per-axis standard deviation so that E|u|^2 = (fraction * rp)^2
    let axis_scale = spec.rms_fraction * rp / (ndim as f64).sqrt();

    let draw = |axis: usize| -> Vec<f64> {
        let mut rng = spec.seed.stream(
            StreamDomain::Thermal,
            spec.replica,
            axis as u64,
        );
        (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
    };

    let mut disp = vec![[0.0f64; 3]; n];
    match spec.mode {
        ThermalMode::Uncorrelated => {
            for a in 0..ndim {
                let z = draw(a);
                for (i, d) in disp.iter_mut().enumerate() {
                    d[a] = axis_scale * z[i];
                }
            }
        }
        ThermalMode::Correlated => {
            if n > MAX_CORRELATED_PARTICLES {
                return Err(Error::Capacity(format!(
                    "correlated thermal sampling is dense and desk-scale; {n} particles exceed the {MAX_CORRELATED_PARTICLES} limit"
                )));
            }
            let corr = correlation_matrix(system, spec.correlation_cutoff);
            let (b, _) = psd_factor(&corr)?;
            for a in 0..ndim {
                let z = nalgebra::DVector::from_vec(draw(a));
                let u = &b * z;
                for (i, d) in disp.iter_mut().enumerate() {
                    d[a] = axis_scale * u[i];
                }
            }
        }
    }
    let moved: Vec<[f64; 3]> = system
        .positions()
        .iter()
        .zip(&disp)
        .map(|(p, d)| [p[0] + d[0], p[1] + d[1], p[2] + d[2]])
        .collect();
    system.with_positions(moved)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{generate_lattice, LatticeKind, LatticeSpec};
    use crate::system::Dim;
    use approx::assert_relative_eq;

    #[test]
    fn correlation_matrix_values() {
        // two particles at exactly the nearest-neighbor distance
        let s = ParticleSystem::new(
            Dim::Three,
            vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]],
            None,
        )
        .unwrap();
        let m = correlation_matrix(&s, None);
        assert_relative_eq!(m[(0, 0)], 1.0);
        assert_relative_eq!(m[(1, 1)], 1.0);
        assert_relative_eq!(m[(0, 1)], 0.8 * (-1.0f64).exp(), epsilon = 1e-12);
        assert_relative_eq!(m[(0, 1)], 0.2943, epsilon = 1e-4);
    }

    #[test]
    fn correlation_decays_monotonically() {
        let pts: Vec<[f64; 3]> = (0..6).map(|i| [i as f64, 0.0, 0.0]).collect();
        let s = ParticleSystem::new(Dim::Three, pts, None).unwrap();
        let m = correlation_matrix(&s, None);
        for j in 2..6 {
            assert!(m[(0, j)] < m[(0, j - 1)]);
            assert!(m[(0, j)] > 0.0);
        }
        let mc = correlation_matrix(&s, Some(3.5));
        assert_eq!(mc[(0, 5)], 0.0);
        assert!(mc[(0, 3)] > 0.0);
    }

    #[test]
    fn nearest_psd_fixes_the_2x2_example() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.5, 1.5, 1.0]);
        let p = nearest_psd(&m).unwrap();
        for v in [p[(0, 0)], p[(0, 1)], p[(1, 0)], p[(1, 1)]] {
            assert_relative_eq!(v, 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn nearest_psd_is_identity_on_psd_input() {
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 0.3, 0.1, 0.3, 1.0, 0.2, 0.1, 0.2, 1.0]);
        let p = nearest_psd(&m).unwrap();
        let diff = (&p - &m).abs().max();
        assert!(diff <= 1e-10, "projection moved a PSD matrix by {diff}");
    }

    #[test]
    fn psd_output_has_nonnegative_spectrum_and_unit_diagonal() {
        // indefinite input
        let m = DMatrix::from_row_slice(
            3,
            3,
            &[1.0, 0.9, -0.9, 0.9, 1.0, 0.9, -0.9, 0.9, 1.0],
        );
        let p = nearest_psd(&m).unwrap();
        for i in 0..3 {
            assert_relative_eq!(p[(i, i)], 1.0, epsilon = 1e-10);
        }
        let eig = p.clone().symmetric_eigen();
        for l in eig.eigenvalues.iter() {
            assert!(*l >= -1e-10);
        }
    }

    #[test]
    fn zero_fraction_is_identity() {
        let s = generate_lattice(&LatticeSpec::new(LatticeKind::SimpleCubic, [3, 3, 3])).unwrap();
        let spec = ThermalSpec::with_rms_fraction(
            ThermalMode::Uncorrelated,
            0.0,
            SeedPolicy::new(1),
        );
        let t = apply_thermal_displacements(&s, &spec).unwrap();
        assert_eq!(s.positions(), t.positions());
    }

    #[test]
    fn uncorrelated_rms_magnitude_matches_request() {
        let s = generate_lattice(&LatticeSpec::new(LatticeKind::SimpleCubic, [10, 10, 10])).unwrap();
        let spec = ThermalSpec::with_rms_fraction(
            ThermalMode::Uncorrelated,
            0.05,
            SeedPolicy::new(7),
        );
        let t = apply_thermal_displacements(&s, &spec).unwrap();
        let mut sq = 0.0;
        for (p, q) in s.positions().iter().zip(t.positions()) {
            // system is periodic: use min-image difference
            let mut d2 = 0.0;
            for a in 0..3 {
                let b = s.periodic_box().unwrap()[a];
                let mut d = q[a] - p[a];
                d -= b * (d / b).round();
                d2 += d * d;
            }
            sq += d2;
        }
        let rms = (sq / s.len() as f64).sqrt();
        assert_relative_eq!(rms, 0.05, max_relative = 0.02);
    }

    #[test]
    fn copper_melting_calibration() {
        assert_relative_eq!(rms_fraction_at(1085.0), 0.0685, epsilon = 5e-4);
        assert_relative_eq!(rms_fraction_at(300.0), 0.036, epsilon = 1e-12);
    }

    #[test]
    fn capacity_limit_enforced() {
        let s = generate_lattice(&LatticeSpec::new(LatticeKind::SimpleCubic, [20, 20, 20])).unwrap();
        assert_eq!(s.len(), 8000);
        let spec = ThermalSpec::with_rms_fraction(
            ThermalMode::Correlated,
            0.03,
            SeedPolicy::new(1),
        );
        match apply_thermal_displacements(&s, &spec) {
            Err(Error::Capacity(_)) => {}
            other => panic!("expected capacity error, got {other:?}"),
        }
    }
}
