//! Statistical post-processing: rank correlations, spatial autocorrelation of
//! the coefficient with a correlation-maximizing ball radius, mesh
//! classification, and a separability score for two-group comparisons.

use crate::extracop::ExtracopResult;
use crate::grid::CellGrid;
use crate::system::{median_nearest_distance, ParticleSystem};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Domain("spearman needs equal-length inputs".into()));
    }
    if x.len() < 3 {
        return Err(Error::Domain("spearman needs at least 3 samples".into()));
    }
    let rx = ranks(x);
    let ry = ranks(y);
    pearson(&rx, &ry)
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| v[a].partial_cmp(&v[b]).unwrap().then(a.cmp(&b)));
    let mut r = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && v[order[j + 1]] == v[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            r[idx] = avg;
        }
        i = j + 1;
    }
    r
}

fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
        sxy += (a - mx) * (b - my);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return Err(Error::Degenerate(
            "correlation undefined for a constant input".into(),
        ));
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// Per-particle (sum, count) of `values` over all other particles within
/// `radius` (in multiples of the median nearest-neighbor distance).
fn ball_sums(system: &ParticleSystem, values: &[f64], radius: f64) -> Result<Vec<(f64, usize)>> {
    if values.len() != system.len() {
        return Err(Error::Domain("one value per particle required".into()));
    }
    if !(radius > 0.0) {
        return Err(Error::Domain("radius must be positive".into()));
    }
    let rp = median_nearest_distance(system);
    let r = radius * rp;
    let grid = CellGrid::from_system(system, rp.max(r / 4.0));
    let positions = system.positions();
    use rayon::prelude::*;
    Ok((0..system.len())
        .into_par_iter()
        .map(|i| {
            // periodic images of the particle itself still count; only the
            // zero-shift entry is excluded
            let hits = grid.query_radius(positions, &positions[i], r, i as u32);
            let sum = hits.iter().map(|c| values[c.id as usize]).sum();
            (sum, hits.len())
        })
        .collect())
}

/// Per-particle mean of `values` over all particles within `radius` (in
/// multiples of the median nearest-neighbor distance), excluding the particle
/// itself. `None` marks particles whose ball is empty.
pub fn local_mean_field(
    system: &ParticleSystem,
    values: &[f64],
    radius: f64,
) -> Result<Vec<Option<f64>>> {
    Ok(ball_sums(system, values, radius)?
        .into_iter()
        .map(|(sum, count)| {
            if count == 0 {
                None
            } else {
                Some(sum / count as f64)
            }
        })
        .collect())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AutocorrelationReport {
    /// Spearman correlation between E and the coordination number.
    pub rho_e_k: f64,
    /// Spearman correlation between E and the ball mean of E at the best
    /// radius. The ball is a ball: its center particle is part of the mean.
    pub rho_e_localmean: f64,
    /// Radius (in median nearest-neighbor distances) maximizing the
    /// self-excluded local mean correlation. Excluding the center here keeps
    /// the radius choice free of self-correlation inflation, which would
    /// otherwise pin the maximum to the smallest radius on the grid.
    pub best_radius: f64,
    pub radius_grid: Vec<f64>,
    /// Self-excluded rho(E, <E>_R) for every grid radius; None where
    /// undefined (all balls empty or a constant field).
    pub rho_by_radius: Vec<Option<f64>>,
}

/// Default radius grid 0.1..=3.0 step 0.05, bracketing the reference best
/// radii near 1.5-1.65.
pub fn default_radius_grid() -> Vec<f64> {
    (2..=60).map(|i| i as f64 * 0.05).collect()
}

/// Scan the radius grid for the ball radius whose local mean field best
/// rank-correlates with E.
pub fn autocorrelation_report(
    system: &ParticleSystem,
    results: &[ExtracopResult],
    radius_grid: &[f64],
) -> Result<AutocorrelationReport> {
    if radius_grid.is_empty() {
        return Err(Error::Domain("radius grid must be nonempty".into()));
    }
    if results.len() != system.len() {
        return Err(Error::Domain("one result per particle required".into()));
    }
    let e: Vec<f64> = results.iter().map(|r| r.e).collect();
    let k: Vec<f64> = results.iter().map(|r| r.k as f64).collect();
    let rho_e_k = spearman(&e, &k)?;
    let mut best: Option<(f64, f64)> = None;
    let mut rho_by_radius = Vec::with_capacity(radius_grid.len());
    for &r in radius_grid {
        let sums = ball_sums(system, &e, r)?;
        // flagged (empty-ball) particles drop out pairwise
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (ei, (sum, count)) in e.iter().zip(&sums) {
            if *count > 0 {
                xs.push(*ei);
                ys.push(sum / *count as f64);
            }
        }
        let rho = if xs.len() >= 3 {
            spearman(&xs, &ys).ok()
        } else {
            None
        };
        rho_by_radius.push(rho);
        if let Some(rho) = rho {
            if best.map(|(b, _)| rho > b).unwrap_or(true) {
                best = Some((rho, r));
            }
        }
    }
    let (_, best_radius) = best.ok_or_else(|| {
        Error::Degenerate("no radius produced a defined correlation".into())
    })?;
    // correlation of E with the full ball mean (center included) at the
    // chosen radius
    let sums = ball_sums(system, &e, best_radius)?;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (ei, (sum, count)) in e.iter().zip(&sums) {
        if *count > 0 {
            xs.push(*ei);
            ys.push((sum + ei) / (*count as f64 + 1.0));
        }
    }
    let rho_e_localmean = spearman(&xs, &ys)?;
    Ok(AutocorrelationReport {
        rho_e_k,
        rho_e_localmean,
        best_radius,
        radius_grid: radius_grid.to_vec(),
        rho_by_radius,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Meshiness {
    RegularMesh,
    IrregularMesh,
    NonMesh,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeshReport {
    pub class: Meshiness,
    /// Coefficient of variation of coarse-grid cell counts.
    pub density_cv: f64,
    pub unimodal: bool,
    pub distinct_k: usize,
    pub k_histogram: Vec<(usize, usize)>,
}

/// Classify a system as a regular mesh, irregular mesh, or non-mesh.
///
/// Uniform density: coefficient of variation of per-cell counts on a coarse
/// grid at most 0.5. Mesh-like: the coordination histogram has no second
/// local maximum above 10% of the mode. Regular: a single coordination value.
pub fn classify_meshiness(
    system: &ParticleSystem,
    neighbors: &crate::neighborhoods::NeighborMap,
) -> Result<MeshReport> {
    if system.len() < 100 {
        return Err(Error::Domain(
            "density statistics need at least 100 particles".into(),
        ));
    }
    let ndim = system.dim().as_usize();
    // coarse cells sized for ~8 expected particles each
    let (lo, hi) = system.bounds();
    let mut volume = 1.0;
    for a in 0..ndim {
        volume *= (hi[a] - lo[a]).max(1e-300);
    }
    let target = (8.0 * volume / system.len() as f64).powf(1.0 / ndim as f64);
    let mut dims = [1usize; 3];
    let mut cell = [1.0f64; 3];
    for a in 0..ndim {
        dims[a] = (((hi[a] - lo[a]) / target).round() as usize).max(2);
        cell[a] = (hi[a] - lo[a]) / dims[a] as f64;
    }
    let ncells: usize = dims[..ndim].iter().product();
    let mut counts = vec![0usize; ncells];
    for p in system.positions() {
        let mut idx = 0;
        for a in 0..ndim {
            let c = (((p[a] - lo[a]) / cell[a]) as usize).min(dims[a] - 1);
            idx = idx * dims[a] + c;
        }
        counts[idx] += 1;
    }
    let mean = counts.iter().sum::<usize>() as f64 / ncells as f64;
    let var = counts
        .iter()
        .map(|&c| (c as f64 - mean) * (c as f64 - mean))
        .sum::<f64>()
        / ncells as f64;
    let density_cv = var.sqrt() / mean;

    let ks = neighbors.coordinations();
    let kmax = ks.iter().max().copied().unwrap_or(0);
    let mut hist = vec![0usize; kmax + 2];
    for &k in &ks {
        hist[k] += 1;
    }
    let mode = hist.iter().max().copied().unwrap_or(0);
    // count local maxima above 10% of the mode; plateaus of equal bins count once
    let mut peaks = 0usize;
    let mut k = 0;
    while k < hist.len() {
        let left = if k == 0 { 0 } else { hist[k - 1] };
        if hist[k] > 0 && hist[k] >= left {
            let mut j = k;
            while j + 1 < hist.len() && hist[j + 1] == hist[k] {
                j += 1;
            }
            let right = if j + 1 < hist.len() { hist[j + 1] } else { 0 };
            if hist[k] >= right && 10 * hist[k] > mode {
                peaks += 1;
            }
            k = j + 1;
        } else {
            k += 1;
        }
    }
    let unimodal = peaks <= 1;
    let distinct_k = hist.iter().filter(|&&c| c > 0).count();
    let class = if density_cv > 0.5 || !unimodal {
        Meshiness::NonMesh
    } else if distinct_k == 1 {
        Meshiness::RegularMesh
    } else {
        Meshiness::IrregularMesh
    };
    let k_histogram = hist
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(k, &c)| (k, c))
        .collect();
    Ok(MeshReport {
        class,
        density_cv,
        unimodal,
        distinct_k,
        k_histogram,
    })
}

/// Signed effect size (mean A - mean B) / pooled standard deviation.
/// Zero spread with equal means gives 0; with distinct means, signed
/// infinity ("perfectly separated").
pub fn separability(group_a: &[f64], group_b: &[f64]) -> Result<f64> {
    if group_a.is_empty() || group_b.is_empty() {
        return Err(Error::Domain("separability needs nonempty groups".into()));
    }
    let (na, nb) = (group_a.len() as f64, group_b.len() as f64);
    let ma = group_a.iter().sum::<f64>() / na;
    let mb = group_b.iter().sum::<f64>() / nb;
    let va: f64 = group_a.iter().map(|x| (x - ma) * (x - ma)).sum();
    let vb: f64 = group_b.iter().map(|x| (x - mb) * (x - mb)).sum();
    let dof = na + nb - 2.0;
    let pooled = if dof > 0.0 {
        ((va + vb) / dof).sqrt()
    } else {
        0.0
    };
    if pooled > 0.0 {
        Ok((ma - mb) / pooled)
    } else if ma == mb {
        Ok(0.0)
    } else {
        Ok(if ma > mb {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        })
    }
}
