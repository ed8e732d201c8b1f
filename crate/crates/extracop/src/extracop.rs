//! Bond angles, their adaptive discretization, and the extracopularity
//! coefficient.
//!
//! For a particle with k bonds there are (k^2-k)/2 bond pairs; enumerating
//! them costs log2((k^2-k)/2) bits, while enumerating the distinct bond
//! angles costs log2(|classes|) bits. The difference,
//! E = log2((k^2-k) / (2 |classes|)), measures the informational redundancy
//! of the neighborhood's geometry. Angles of practical systems never repeat
//! exactly, so they are first grouped by a tolerance partition whose width
//! shrinks (delta = 180/2^t) until the grouping error drops below an RMSE
//! threshold.

use crate::neighborhoods::NeighborMap;
use crate::system::ParticleSystem;
use crate::{Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Default discretization error threshold in degrees.
pub const DEFAULT_RMSE_THRESHOLD: f64 = 5.0;

/// Bonds of one particle: displacement vectors to each neighbor,
/// minimum-image under a periodic box.
#[derive(Debug, Clone)]
pub struct BondSet {
    pub center: usize,
    pub bonds: Vec<[f64; 3]>,
}

impl BondSet {
    pub fn from_neighbors(
        system: &ParticleSystem,
        center: usize,
        neighbors: &[u32],
    ) -> Result<BondSet> {
        if center >= system.len() {
            return Err(Error::IndexOutOfRange {
                index: center,
                len: system.len(),
            });
        }
        let mut bonds = Vec::with_capacity(neighbors.len());
        for &q in neighbors {
            let d = system.displacement(center, q as usize);
            if d[0] == 0.0 && d[1] == 0.0 && d[2] == 0.0 {
                return Err(Error::Degenerate(format!(
                    "zero-length bond between {center} and {q}"
                )));
            }
            bonds.push(d);
        }
        Ok(BondSet { center, bonds })
    }

    pub fn from_vectors(bonds: Vec<[f64; 3]>) -> BondSet {
        BondSet { center: 0, bonds }
    }

    pub fn k(&self) -> usize {
        self.bonds.len()
    }
}

/// All (k^2-k)/2 bond angles in degrees, lexicographic in (i, j), each the
/// smaller angle between the two bonds. Fewer than two bonds give an empty
/// list.
pub fn bond_angles(bonds: &BondSet) -> Vec<f64> {
    let k = bonds.k();
    if k < 2 {
        return Vec::new();
    }
    let norms: Vec<f64> = bonds
        .bonds
        .iter()
        .map(|b| (b[0] * b[0] + b[1] * b[1] + b[2] * b[2]).sqrt())
        .collect();
    let mut out = Vec::with_capacity(k * (k - 1) / 2);
    for i in 0..k {
        for j in (i + 1)..k {
            let bi = bonds.bonds[i];
            let bj = bonds.bonds[j];
            let dot = bi[0] * bj[0] + bi[1] * bj[1] + bi[2] * bj[2];
            let c = (dot / (norms[i] * norms[j])).clamp(-1.0, 1.0);
            out.push(c.acos().to_degrees());
        }
    }
    out
}

/// A tolerance partition of a neighborhood's bond angles.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnglePartition {
    /// The input angles, unsorted.
    pub angles: Vec<f64>,
    /// Class index of each angle.
    pub class_of: Vec<u32>,
    /// Mean angle of each class.
    pub class_means: Vec<f64>,
    /// Tolerance that produced the partition, 180/2^t degrees.
    pub delta: f64,
    pub t: u32,
    /// Root-mean-square deviation of angles from their class means.
    pub rmse: f64,
}

impl AnglePartition {
    pub fn class_count(&self) -> usize {
        self.class_means.len()
    }
}

/// Greedy tolerance partition at a fixed delta: sort ascending and open a new
/// class whenever the current angle exceeds its class minimum by more than
/// delta. Any two angles in one class then differ by at most delta.
fn partition_at(angles: &[f64], order: &[u32], delta: f64) -> (Vec<u32>, Vec<f64>, f64) {
    let n = angles.len();
    let mut class_of = vec![0u32; n];
    let mut sums: Vec<f64> = Vec::new();
    let mut counts: Vec<u32> = Vec::new();
    let mut class_min = f64::NEG_INFINITY;
    for &idx in order {
        let a = angles[idx as usize];
        if sums.is_empty() || a - class_min > delta {
            sums.push(0.0);
            counts.push(0);
            class_min = a;
        }
        let c = sums.len() - 1;
        class_of[idx as usize] = c as u32;
        sums[c] += a;
        counts[c] += 1;
    }
    let means: Vec<f64> = sums
        .iter()
        .zip(&counts)
        .map(|(s, &c)| s / c as f64)
        .collect();
    let mut sq = 0.0;
    for (i, &a) in angles.iter().enumerate() {
        let d = a - means[class_of[i] as usize];
        sq += d * d;
    }
    let rmse = (sq / n as f64).sqrt();
    (class_of, means, rmse)
}

/// Discretize bond angles by halving the tolerance until the partition RMSE
/// drops to `rmse_threshold` (degrees).
///
/// Terminates because every in-class deviation is at most delta, so the RMSE
/// at delta <= threshold cannot exceed the threshold.
pub fn discretize_angles(angles: &[f64], rmse_threshold: f64) -> Result<AnglePartition> {
    if angles.is_empty() {
        return Err(Error::Domain("cannot discretize an empty angle list".into()));
    }
    if !(rmse_threshold > 0.0) {
        return Err(Error::Domain("RMSE threshold must be positive".into()));
    }
    let mut order: Vec<u32> = (0..angles.len() as u32).collect();
    order.sort_by(|&a, &b| {
        angles[a as usize]
            .partial_cmp(&angles[b as usize])
            .unwrap()
            .then(a.cmp(&b))
    });
    let mut t = 1u32;
    loop {
        let delta = 180.0 / (1u64 << t) as f64;
        let (class_of, class_means, rmse) = partition_at(angles, &order, delta);
        if rmse <= rmse_threshold || delta <= rmse_threshold {
            return Ok(AnglePartition {
                angles: angles.to_vec(),
                class_of,
                class_means,
                delta,
                t,
                rmse,
            });
        }
        t += 1;
    }
}

/// The extracopularity coefficient in bits. Particles with one neighbor (or
/// none) carry no angular information and score zero.
pub fn coefficient(k: usize, unique_angles: usize) -> Result<f64> {
    if k <= 1 {
        return Ok(0.0);
    }
    let pairs = k * (k - 1) / 2;
    if unique_angles < 1 || unique_angles > pairs {
        return Err(Error::Domain(format!(
            "unique angle count {unique_angles} outside [1, {pairs}] for k = {k}"
        )));
    }
    Ok((pairs as f64 / unique_angles as f64).log2())
}

/// Closed form for regular convex polygonal neighborhoods:
/// log2(k-1) for even k, log2(k) for odd k.
pub fn polygon_coefficient(k: usize) -> Result<f64> {
    if k < 3 {
        return Err(Error::Domain(format!(
            "polygonal neighborhoods need k >= 3, got {k}"
        )));
    }
    Ok(if k % 2 == 0 {
        ((k - 1) as f64).log2()
    } else {
        (k as f64).log2()
    })
}

/// Least upper bound log2((k^2-k)/2) on the coefficient at fixed k, attained
/// only by regular simplex neighborhoods.
pub fn max_coefficient(k: usize) -> Result<f64> {
    if k < 2 {
        return Err(Error::Domain(format!("bound needs k >= 2, got {k}")));
    }
    Ok(((k * (k - 1) / 2) as f64).log2())
}

/// Per-particle analysis record.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ExtracopResult {
    pub index: usize,
    pub k: usize,
    pub unique_angles: usize,
    /// Coefficient in bits.
    pub e: f64,
    /// Discretization tolerance actually used, degrees; zero when k <= 1.
    pub delta: f64,
}

/// Score every particle of a system against its robustified neighborhood.
pub fn analyze(
    system: &ParticleSystem,
    neighbors: &NeighborMap,
    rmse_threshold: f64,
) -> Result<Vec<ExtracopResult>> {
    if neighbors.len() != system.len() {
        return Err(Error::Domain(
            "neighbor map was computed for a different system".into(),
        ));
    }
    if !(rmse_threshold > 0.0) {
        return Err(Error::Domain("RMSE threshold must be positive".into()));
    }
    (0..system.len())
        .into_par_iter()
        .map(|i| {
            let nb = neighbors.neighbors(i);
            let k = nb.len();
            if k <= 1 {
                return Ok(ExtracopResult {
                    index: i,
                    k,
                    unique_angles: 0,
                    e: 0.0,
                    delta: 0.0,
                });
            }
            let bonds = BondSet::from_neighbors(system, i, &nb)?;
            let angles = bond_angles(&bonds);
            let part = discretize_angles(&angles, rmse_threshold)?;
            let u = part.class_count();
            Ok(ExtracopResult {
                index: i,
                k,
                unique_angles: u,
                e: coefficient(k, u)?,
                delta: part.delta,
            })
        })
        .collect()
}

/// Ideal neighborhood point sets used as references in tests and validation.
pub mod shapes {
    /// Golden ratio.
    const PHI: f64 = 1.618_033_988_749_895;

    pub fn tetrahedron() -> Vec<[f64; 3]> {
        vec![
            [1.0, 1.0, 1.0],
            [1.0, -1.0, -1.0],
            [-1.0, 1.0, -1.0],
            [-1.0, -1.0, 1.0],
        ]
    }

    pub fn octahedron() -> Vec<[f64; 3]> {
        vec![
            [1.0, 0.0, 0.0],
            [-1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, -1.0, 0.0],
            [0.0, 0.0, 1.0],
            [0.0, 0.0, -1.0],
        ]
    }

    pub fn hexahedron() -> Vec<[f64; 3]> {
        let mut v = Vec::new();
        for x in [-1.0, 1.0] {
            for y in [-1.0, 1.0] {
                for z in [-1.0, 1.0] {
                    v.push([x, y, z]);
                }
            }
        }
        v
    }

    /// The hcp bond arrangement: hexagon in the plane, two eclipsed triangles
    /// above and below.
    pub fn triangular_orthobicupola() -> Vec<[f64; 3]> {
        let mut v = Vec::new();
        for j in 0..6 {
            let a = std::f64::consts::PI / 3.0 * j as f64;
            v.push([a.cos(), a.sin(), 0.0]);
        }
        let rho = 1.0 / 3.0f64.sqrt();
        let z = (2.0f64 / 3.0).sqrt();
        for j in 0..3 {
            let a = std::f64::consts::PI / 6.0 + 2.0 * std::f64::consts::PI / 3.0 * j as f64;
            v.push([rho * a.cos(), rho * a.sin(), z]);
            v.push([rho * a.cos(), rho * a.sin(), -z]);
        }
        v
    }

    /// The fcc bond arrangement.
    pub fn cuboctahedron() -> Vec<[f64; 3]> {
        let mut v = Vec::new();
        for (a, b) in [(0, 1), (0, 2), (1, 2)] {
            for sa in [-1.0, 1.0] {
                for sb in [-1.0, 1.0] {
                    let mut p = [0.0; 3];
                    p[a] = sa;
                    p[b] = sb;
                    v.push(p);
                }
            }
        }
        v
    }

    pub fn icosahedron() -> Vec<[f64; 3]> {
        let mut v = Vec::new();
        for s in [-1.0, 1.0] {
            for t in [-PHI, PHI] {
                v.push([0.0, s, t]);
                v.push([s, t, 0.0]);
                v.push([t, 0.0, s]);
            }
        }
        v
    }

    pub fn dodecahedron() -> Vec<[f64; 3]> {
        let mut v = hexahedron();
        let inv = 1.0 / PHI;
        for s in [-1.0, 1.0] {
            for t in [-1.0, 1.0] {
                v.push([0.0, s * inv, t * PHI]);
                v.push([s * inv, t * PHI, 0.0]);
                v.push([s * PHI, 0.0, t * inv]);
            }
        }
        v
    }

    /// Regular k-gon bonds in the plane.
    pub fn polygon(k: usize) -> Vec<[f64; 3]> {
        (0..k)
            .map(|j| {
                let a = std::f64::consts::TAU * j as f64 / k as f64;
                [a.cos(), a.sin(), 0.0]
            })
            .collect()
    }
}
