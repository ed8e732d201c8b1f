//! The three neighborhood models: naive distance shells, conventional
//! Voronoi adjacency, and the stochastically robustified Voronoi
//! neighborhood decided by Monte Carlo majority voting.
//!
//! The robustified model perturbs the whole system per sample (one map
//! applied to every particle), rebuilds the Voronoi picture of that
//! snapshot, and gives every candidate one vote per sample in which it holds
//! a facet with the center particle. Candidates come from the naive
//! neighborhood at tau = 1/3 of the unperturbed system, which keeps far
//! particles out regardless of how voting goes. Membership needs a strict
//! majority; a tie at exactly 1/2 is non-membership.

use crate::grid::CellGrid;
use crate::seed::{SeedPolicy, StreamDomain};
use crate::system::{median_nearest_distance, nearest_distances, ParticleSystem};
use crate::voronoi::{CellScratch, VoronoiPass};
use crate::{Error, Result};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Closed-boundary guard: candidate selection uses
/// d <= (1+tau) * r_p * NAIVE_SLACK so ties that land exactly on the cutoff
/// (e.g. the monoclinic a2 neighbors at exactly 4/3) survive floating point.
const NAIVE_SLACK: f64 = 1.0 + 1e-9;

/// Monte Carlo perturbation parameters.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PerturbationConfig {
    /// Perturbation scale as a fraction of the median nearest-neighbor
    /// distance; must lie in (0, 0.5).
    pub sigma_fraction: f64,
    /// Naive-neighborhood tolerance for the candidate set.
    pub tau: f64,
    pub max_samples: u32,
    /// Stop once the decided set is identical over this many consecutive
    /// cumulative sample counts and no vote fraction sits in the undecided
    /// band 1/2 +/- 1/(2m).
    pub convergence_window: u32,
    pub seed: SeedPolicy,
}

impl PerturbationConfig {
    pub fn new(seed: SeedPolicy) -> Self {
        PerturbationConfig {
            sigma_fraction: 0.1,
            tau: 1.0 / 3.0,
            max_samples: 128,
            convergence_window: 2,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_fraction > 0.0 && self.sigma_fraction < 0.5) {
            return Err(Error::Domain(format!(
                "sigma fraction must lie in (0, 0.5), got {}",
                self.sigma_fraction
            )));
        }
        if !(self.tau >= 0.0) {
            return Err(Error::Domain("tau must be nonnegative".into()));
        }
        if self.convergence_window < 2 {
            return Err(Error::Domain("convergence window must be at least 2".into()));
        }
        if self.max_samples < self.convergence_window {
            return Err(Error::Domain(
                "max samples must be at least the convergence window".into(),
            ));
        }
        Ok(())
    }
}

/// Robustified Voronoi neighborhoods with their voting record.
#[derive(Debug, Clone)]
pub struct NeighborMap {
    offsets: Vec<u32>,
    candidate_ids: Vec<u32>,
    fractions: Vec<f64>,
    member: Vec<bool>,
    undecided: Vec<bool>,
    samples_used: u32,
    converged: bool,
}

impl NeighborMap {
    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn range(&self, i: usize) -> std::ops::Range<usize> {
        self.offsets[i] as usize..self.offsets[i + 1] as usize
    }

    /// Final members of particle `i`'s neighborhood, ascending ids.
    pub fn neighbors(&self, i: usize) -> Vec<u32> {
        self.range(i)
            .filter(|&s| self.member[s])
            .map(|s| self.candidate_ids[s])
            .collect()
    }

    pub fn coordination(&self, i: usize) -> usize {
        self.range(i).filter(|&s| self.member[s]).count()
    }

    /// Candidate set drawn from the naive tau-neighborhood.
    pub fn candidates(&self, i: usize) -> &[u32] {
        &self.candidate_ids[self.range(i)]
    }

    /// (candidate id, vote fraction) pairs for particle `i`.
    pub fn votes(&self, i: usize) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.range(i)
            .map(move |s| (self.candidate_ids[s], self.fractions[s]))
    }

    /// Candidates whose vote fraction sits within the undecided margin after
    /// a non-converged run.
    pub fn undecided(&self, i: usize) -> Vec<u32> {
        self.range(i)
            .filter(|&s| self.undecided[s])
            .map(|s| self.candidate_ids[s])
            .collect()
    }

    pub fn samples_used(&self) -> u32 {
        self.samples_used
    }

    pub fn converged(&self) -> bool {
        self.converged
    }

    /// Coordination of every particle.
    pub fn coordinations(&self) -> Vec<usize> {
        (0..self.len()).map(|i| self.coordination(i)).collect()
    }
}

/// All particles within (tau + 1) * r_p of particle `i`, ids ascending.
pub fn naive_neighborhood(system: &ParticleSystem, i: usize, tau: f64) -> Result<Vec<u32>> {
    if i >= system.len() {
        return Err(Error::IndexOutOfRange {
            index: i,
            len: system.len(),
        });
    }
    if !(tau >= 0.0) {
        return Err(Error::Domain("tau must be nonnegative".into()));
    }
    let rp = system.nearest_neighbor_distance(i)?;
    let median = median_nearest_distance(system);
    let grid = CellGrid::from_system(system, median.max(rp * 1e-3));
    Ok(naive_from_grid(system, &grid, i, rp, tau))
}

fn naive_from_grid(
    system: &ParticleSystem,
    grid: &CellGrid,
    i: usize,
    rp: f64,
    tau: f64,
) -> Vec<u32> {
    let cutoff = (tau + 1.0) * rp * NAIVE_SLACK;
    let mut ids: Vec<u32> = grid
        .query_radius(system.positions(), &system.positions()[i], cutoff, i as u32)
        .into_iter()
        .map(|c| c.id)
        .filter(|&id| id != i as u32)
        .collect();
    ids.sort_unstable();
    ids.dedup();
    ids
}

fn pass_geometry(
    positions: &[[f64; 3]],
    ndim: usize,
    periodic: Option<[f64; 3]>,
    scale: f64,
) -> (f64, f64) {
    let wall = match periodic {
        Some(b) => b[..ndim].iter().cloned().fold(0.0, f64::max) + 2.0 * scale,
        None => {
            let mut lo = [f64::INFINITY; 3];
            let mut hi = [f64::NEG_INFINITY; 3];
            for p in positions {
                for a in 0..ndim {
                    lo[a] = lo[a].min(p[a]);
                    hi[a] = hi[a].max(p[a]);
                }
            }
            let diameter = (0..ndim).map(|a| hi[a] - lo[a]).fold(0.0, f64::max);
            // hull cells are truncated far outside the system; facets that
            // exist only beyond this frame are unbounded-cell artifacts
            100.0 * (diameter + scale)
        }
    };
    (wall, 1e-9 * scale)
}

/// Conventional Voronoi adjacency of the system as given (no perturbation),
/// symmetrized by union.
///
/// Exactly co-spherical configurations resolve deterministically: tangent
/// bisectors carry zero-measure contacts and are not adjacent.
pub fn voronoi_neighborhood(system: &ParticleSystem) -> Result<Vec<Vec<u32>>> {
    let n = system.len();
    let positions = system.positions();
    let ndim = system.dim().as_usize();
    let scale = median_nearest_distance(system);
    if !(scale > 0.0) {
        return Err(Error::Degenerate(
            "coincident particles have no Voronoi cell".into(),
        ));
    }
    let grid = CellGrid::from_system(system, scale);
    let (wall, eps) = pass_geometry(positions, ndim, system.periodic_box(), scale);
    let pass = VoronoiPass {
        positions,
        grid: &grid,
        ndim,
        periodic: system.periodic_box().is_some(),
        wall,
        eps,
    };
    let mut adj: Vec<Vec<u32>> = (0..n)
        .into_par_iter()
        .map_init(CellScratch::new, |scratch, i| {
            let mut out = Vec::new();
            pass.neighbors_of(i, scratch, &mut out);
            out
        })
        .collect();
    // union-symmetrize: floating point may find a marginal facet from only one side
    let mut extra: Vec<(usize, u32)> = Vec::new();
    for (i, row) in adj.iter().enumerate() {
        for &j in row {
            if adj[j as usize].binary_search(&(i as u32)).is_err() {
                extra.push((j as usize, i as u32));
            }
        }
    }
    for (j, i) in extra {
        adj[j].push(i);
        adj[j].sort_unstable();
    }
    Ok(adj)
}

/// One perturbation draw: uniformly random direction, half-normal magnitude
/// of scale `sigma`. Fixed draw order (direction, then magnitude).
fn displacement(seed: &SeedPolicy, sample: u32, particle: usize, ndim: usize, sigma: f64) -> [f64; 3] {
    let mut rng = seed.stream(StreamDomain::Perturbation, sample as u64, particle as u64);
    let dir = loop {
        let v = [
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
            if ndim == 3 {
                rng.sample::<f64, _>(StandardNormal)
            } else {
                0.0
            },
        ];
        let n2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
        if n2 > 1e-12 {
            let inv = 1.0 / n2.sqrt();
            break [v[0] * inv, v[1] * inv, v[2] * inv];
        }
    };
    let mag = sigma * rng.sample::<f64, _>(StandardNormal).abs();
    [dir[0] * mag, dir[1] * mag, dir[2] * mag]
}

/// Monte Carlo estimation of the robustified Voronoi neighborhood of every
/// particle.
pub fn robust_voronoi_neighborhood(
    system: &ParticleSystem,
    config: &PerturbationConfig,
) -> Result<NeighborMap> {
    config.validate()?;
    let n = system.len();
    let ndim = system.dim().as_usize();
    let periodic = system.periodic_box();

    let rp = nearest_distances(system);
    let mut sorted = rp.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    };
    if !(median > 0.0) {
        return Err(Error::Degenerate(
            "coincident particles cannot be perturbed apart".into(),
        ));
    }
    let sigma = config.sigma_fraction * median;

    // candidate sets on the unperturbed system
    let grid0 = CellGrid::from_system(system, median);
    let candidate_rows: Vec<Vec<u32>> = (0..n)
        .into_par_iter()
        .map(|i| naive_from_grid(system, &grid0, i, rp[i], config.tau))
        .collect();
    let mut offsets = Vec::with_capacity(n + 1);
    offsets.push(0u32);
    for row in &candidate_rows {
        offsets.push(offsets.last().unwrap() + row.len() as u32);
    }
    let candidate_ids: Vec<u32> = candidate_rows.into_iter().flatten().collect();
    let total = candidate_ids.len();
    let mut votes = vec![0u16; total];
    let mut decided = vec![false; total];

    // row chunks give each worker a disjoint slice of the vote table
    const CHUNK: usize = 256;
    let chunk_rows: Vec<std::ops::Range<usize>> = (0..n)
        .step_by(CHUNK)
        .map(|s| s..(s + CHUNK).min(n))
        .collect();

    let mut perturbed = vec![[0.0f64; 3]; n];
    let base = system.positions();
    let mut samples = 0u32;
    let mut run_len = 0u32;
    let mut converged = false;

    while samples < config.max_samples {
        samples += 1;
        let m = samples;
        perturbed
            .par_iter_mut()
            .enumerate()
            .for_each(|(i, out)| {
                let d = displacement(&config.seed, m, i, ndim, sigma);
                let p = base[i];
                let mut q = [p[0] + d[0], p[1] + d[1], p[2] + d[2]];
                if let Some(bx) = periodic {
                    for a in 0..ndim {
                        q[a] -= bx[a] * (q[a] / bx[a]).floor();
                        if q[a] >= bx[a] {
                            q[a] -= bx[a];
                        }
                    }
                }
                *out = q;
            });
        let grid_m = CellGrid::build(&perturbed, ndim, periodic, median);
        let (wall, eps) = pass_geometry(&perturbed, ndim, periodic, median);
        let pass = VoronoiPass {
            positions: &perturbed,
            grid: &grid_m,
            ndim,
            periodic: periodic.is_some(),
            wall,
            eps,
        };

        // split the flat tables along chunk boundaries
        let mut vote_slices: Vec<&mut [u16]> = Vec::with_capacity(chunk_rows.len());
        let mut decided_slices: Vec<&mut [bool]> = Vec::with_capacity(chunk_rows.len());
        {
            let mut vrest: &mut [u16] = &mut votes;
            let mut drest: &mut [bool] = &mut decided;
            let mut prev = 0usize;
            for r in &chunk_rows {
                let end = offsets[r.end] as usize;
                let (va, vb) = vrest.split_at_mut(end - prev);
                let (da, db) = drest.split_at_mut(end - prev);
                vote_slices.push(va);
                decided_slices.push(da);
                vrest = vb;
                drest = db;
                prev = end;
            }
        }

        let (changed, any_borderline) = chunk_rows
            .par_iter()
            .zip(vote_slices.par_iter_mut().zip(decided_slices.par_iter_mut()))
            .map_init(
                || (CellScratch::new(), Vec::<u32>::new()),
                |(scratch, vorset), (rows, (votes, decided))| {
                    let base_off = offsets[rows.start] as usize;
                    let mut any_changed = false;
                    let mut any_borderline = false;
                    for i in rows.clone() {
                        let lo = offsets[i] as usize - base_off;
                        let hi = offsets[i + 1] as usize - base_off;
                        if lo == hi {
                            continue;
                        }
                        pass.neighbors_of(i, scratch, vorset);
                        let cands = &candidate_ids[offsets[i] as usize..offsets[i + 1] as usize];
                        let mut vi = 0usize;
                        for (slot, &cand) in cands.iter().enumerate() {
                            while vi < vorset.len() && vorset[vi] < cand {
                                vi += 1;
                            }
                            if vi < vorset.len() && vorset[vi] == cand {
                                votes[lo + slot] += 1;
                            }
                            let v2 = 2 * votes[lo + slot] as i64;
                            let now = v2 > m as i64;
                            if now != decided[lo + slot] {
                                decided[lo + slot] = now;
                                any_changed = true;
                            }
                            if (v2 - m as i64).abs() <= 1 {
                                any_borderline = true;
                            }
                        }
                    }
                    (any_changed, any_borderline)
                },
            )
            .reduce(
                || (false, false),
                |a, b| (a.0 || b.0, a.1 || b.1),
            );

        run_len = if changed { 1 } else { run_len + 1 };
        // a candidate inside the undecided band (a single blinked facet parks
        // at exactly 1/2 after two samples) keeps the sampling alive even
        // when the decided set looks stable
        if samples >= 2 && run_len >= config.convergence_window && !any_borderline {
            converged = true;
            break;
        }
    }

    let m = samples;
    let fractions: Vec<f64> = votes.iter().map(|&v| v as f64 / m as f64).collect();
    let undecided: Vec<bool> = if converged {
        vec![false; total]
    } else {
        votes
            .iter()
            .map(|&v| (2 * v as i64 - m as i64).abs() <= 1)
            .collect()
    };
    Ok(NeighborMap {
        offsets,
        candidate_ids,
        fractions,
        member: decided,
        undecided,
        samples_used: m,
        converged,
    })
}
