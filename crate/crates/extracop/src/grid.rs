//! Uniform cell grid backing all fixed-radius and nearest-neighbor queries.
//!
//! Cells are walked in expanding Chebyshev shells around a query point. In
//! periodic mode a shell may revisit a wrapped cell with a nonzero box shift,
//! so images of particles (including the query particle's own images) appear
//! as ordinary candidates: correct behaviour for boxes only a few cells wide.

use crate::system::{norm2, ParticleSystem};

#[derive(Debug, Clone)]
pub struct CellGrid {
    ndim: usize,
    origin: [f64; 3],
    cell: [f64; 3],
    dims: [i64; 3],
    periodic: Option<[f64; 3]>,
    /// CSR bucket offsets, length ncells + 1.
    heads: Vec<u32>,
    entries: Vec<u32>,
    min_cell: f64,
}

/// A particle (or periodic image) seen from a query point.
#[derive(Debug, Clone, Copy)]
pub struct Candidate {
    pub id: u32,
    /// Displacement from the query point to the candidate image.
    pub disp: [f64; 3],
    pub d2: f64,
}

impl CellGrid {
    /// Build a grid over `positions` with cells no smaller than `target_cell`.
    ///
    /// Periodic systems tile the box exactly; open systems get a uniform grid
    /// over the bounding box.
    pub fn build(
        positions: &[[f64; 3]],
        ndim: usize,
        periodic: Option<[f64; 3]>,
        target_cell: f64,
    ) -> Self {
        assert!(target_cell > 0.0 && target_cell.is_finite());
        let (origin, cell, dims) = match periodic {
            Some(b) => {
                let mut cell = [1.0f64; 3];
                let mut dims = [1i64; 3];
                for a in 0..ndim {
                    dims[a] = ((b[a] / target_cell).floor() as i64).max(1);
                    cell[a] = b[a] / dims[a] as f64;
                }
                ([0.0; 3], cell, dims)
            }
            None => {
                let mut lo = [f64::INFINITY; 3];
                let mut hi = [f64::NEG_INFINITY; 3];
                for p in positions {
                    for a in 0..ndim {
                        lo[a] = lo[a].min(p[a]);
                        hi[a] = hi[a].max(p[a]);
                    }
                }
                // cap the cell count so a bad spacing guess cannot blow up
                let cap = 64 * positions.len() as i64 + 4096;
                let mut target = target_cell;
                loop {
                    let mut dims = [1i64; 3];
                    let mut origin = [0.0; 3];
                    let mut total = 1i64;
                    for a in 0..ndim {
                        let span = (hi[a] - lo[a]).max(target * 1e-9);
                        dims[a] = ((span / target).ceil() as i64).clamp(1, cap);
                        origin[a] = lo[a];
                        total = total.saturating_mul(dims[a]);
                    }
                    if total <= cap {
                        break (origin, [target; 3], dims);
                    }
                    target *= 2.0;
                }
            }
        };
        let ncells = (dims[0] * dims[1] * dims[2]) as usize;
        let mut counts = vec![0u32; ncells + 1];
        let index_of = |p: &[f64; 3]| -> usize {
            let mut idx = 0usize;
            for a in 0..ndim {
                let mut c = ((p[a] - origin[a]) / cell[a]).floor() as i64;
                c = c.clamp(0, dims[a] - 1);
                idx = idx * dims[a] as usize + c as usize;
            }
            idx
        };
        for p in positions {
            counts[index_of(p) + 1] += 1;
        }
        for i in 0..ncells {
            counts[i + 1] += counts[i];
        }
        let heads = counts.clone();
        let mut cursor = heads.clone();
        let mut entries = vec![0u32; positions.len()];
        for (i, p) in positions.iter().enumerate() {
            let c = index_of(p);
            entries[cursor[c] as usize] = i as u32;
            cursor[c] += 1;
        }
        let min_cell = (0..ndim).map(|a| cell[a]).fold(f64::INFINITY, f64::min);
        CellGrid {
            ndim,
            origin,
            cell,
            dims,
            periodic,
            heads,
            entries,
            min_cell,
        }
    }

    pub fn from_system(system: &ParticleSystem, target_cell: f64) -> Self {
        Self::build(
            system.positions(),
            system.dim().as_usize(),
            system.periodic_box(),
            target_cell,
        )
    }

    pub fn min_cell(&self) -> f64 {
        self.min_cell
    }

    fn home_cell(&self, x: &[f64; 3]) -> [i64; 3] {
        let mut c = [0i64; 3];
        for a in 0..self.ndim {
            c[a] = ((x[a] - self.origin[a]) / self.cell[a]).floor() as i64;
            if self.periodic.is_none() {
                c[a] = c[a].clamp(0, self.dims[a] - 1);
            } else {
                c[a] = c[a].rem_euclid(self.dims[a]);
            }
        }
        c
    }

    /// Lower bound on the distance from any point of the home cell to any
    /// point of a shell-`s` cell.
    pub fn shell_min_dist(&self, s: i64) -> f64 {
        if s <= 1 {
            0.0
        } else {
            (s - 1) as f64 * self.min_cell
        }
    }

    fn push_cell(
        &self,
        positions: &[[f64; 3]],
        x: &[f64; 3],
        coords: [i64; 3],
        exclude: u32,
        out: &mut Vec<Candidate>,
    ) {
        let mut idx = 0usize;
        let mut shift = [0.0f64; 3];
        let mut zero_shift = true;
        for a in 0..self.ndim {
            let c = coords[a];
            let w = match self.periodic {
                Some(b) => {
                    let w = c.rem_euclid(self.dims[a]);
                    let k = (c - w) / self.dims[a];
                    if k != 0 {
                        zero_shift = false;
                    }
                    shift[a] = k as f64 * b[a];
                    w
                }
                None => {
                    if c < 0 || c >= self.dims[a] {
                        return;
                    }
                    c
                }
            };
            idx = idx * self.dims[a] as usize + w as usize;
        }
        let (lo, hi) = (self.heads[idx] as usize, self.heads[idx + 1] as usize);
        for &id in &self.entries[lo..hi] {
            if zero_shift && id == exclude {
                continue;
            }
            let p = positions[id as usize];
            let disp = [
                p[0] + shift[0] - x[0],
                p[1] + shift[1] - x[1],
                p[2] + shift[2] - x[2],
            ];
            out.push(Candidate {
                id,
                disp,
                d2: norm2(disp),
            });
        }
    }

    /// Append all candidates of Chebyshev shell `s` around `x` to `out`,
    /// sorted by (distance, id) for determinism. `exclude` skips the
    /// zero-shift entry of that particle (its periodic images still appear).
    pub fn collect_shell(
        &self,
        positions: &[[f64; 3]],
        x: &[f64; 3],
        home: [i64; 3],
        s: i64,
        exclude: u32,
        out: &mut Vec<Candidate>,
    ) {
        let start = out.len();
        let mut visit = |coords: [i64; 3]| {
            self.push_cell(positions, x, coords, exclude, out);
        };
        if self.ndim == 2 {
            if s == 0 {
                visit([home[0], home[1], 0]);
            } else {
                for i in -s..=s {
                    visit([home[0] + i, home[1] - s, 0]);
                    visit([home[0] + i, home[1] + s, 0]);
                }
                for j in (-s + 1)..s {
                    visit([home[0] - s, home[1] + j, 0]);
                    visit([home[0] + s, home[1] + j, 0]);
                }
            }
        } else if s == 0 {
            visit(home);
        } else {
            for i in -s..=s {
                for j in -s..=s {
                    visit([home[0] + i, home[1] + j, home[2] - s]);
                    visit([home[0] + i, home[1] + j, home[2] + s]);
                }
            }
            for k in (-s + 1)..s {
                for i in -s..=s {
                    visit([home[0] + i, home[1] - s, home[2] + k]);
                    visit([home[0] + i, home[1] + s, home[2] + k]);
                }
                for j in (-s + 1)..s {
                    visit([home[0] - s, home[1] + j, home[2] + k]);
                    visit([home[0] + s, home[1] + j, home[2] + k]);
                }
            }
        }
        out[start..].sort_unstable_by(|a, b| {
            a.d2.partial_cmp(&b.d2)
                .unwrap()
                .then(a.id.cmp(&b.id))
                .then(a.disp[0].total_cmp(&b.disp[0]))
                .then(a.disp[1].total_cmp(&b.disp[1]))
                .then(a.disp[2].total_cmp(&b.disp[2]))
        });
    }

    pub fn home_of(&self, x: &[f64; 3]) -> [i64; 3] {
        self.home_cell(x)
    }

    /// Largest shell index that can still contain cells of an open grid;
    /// `None` for periodic grids (images continue forever).
    pub fn open_shell_cap(&self, home: [i64; 3]) -> Option<i64> {
        if self.periodic.is_some() {
            return None;
        }
        let mut cap = 0i64;
        for a in 0..self.ndim {
            cap = cap.max(home[a]).max(self.dims[a] - 1 - home[a]);
        }
        Some(cap)
    }

    /// All candidates within distance `r` of `x` (images included, zero-shift
    /// self excluded), sorted by distance.
    pub fn query_radius(
        &self,
        positions: &[[f64; 3]],
        x: &[f64; 3],
        r: f64,
        exclude: u32,
    ) -> Vec<Candidate> {
        let home = self.home_cell(x);
        let cap = self.open_shell_cap(home);
        let mut out = Vec::new();
        let r2 = r * r;
        let mut s = 0i64;
        loop {
            if self.shell_min_dist(s) > r {
                break;
            }
            if let Some(cap) = cap {
                if s > cap {
                    break;
                }
            }
            self.collect_shell(positions, x, home, s, exclude, &mut out);
            s += 1;
        }
        out.retain(|c| c.d2 <= r2);
        out.sort_unstable_by(|a, b| a.d2.partial_cmp(&b.d2).unwrap().then(a.id.cmp(&b.id)));
        out
    }
}

/// Grid-accelerated nearest-neighbor distance for every particle.
pub fn nearest_distances(system: &ParticleSystem) -> Vec<f64> {
    let positions = system.positions();
    let ndim = system.dim().as_usize();
    let n = positions.len();
    let (lo, hi) = system.bounds();
    let span_max = (0..ndim).map(|a| hi[a] - lo[a]).fold(0.0f64, f64::max);
    if span_max <= 0.0 {
        // all particles coincident
        return vec![0.0; n];
    }
    let mut volume = 1.0;
    for a in 0..ndim {
        // flat axes (collinear/coplanar systems) fall back to the largest span
        volume *= (hi[a] - lo[a]).max(span_max * 1e-9);
    }
    let density_guess = (volume / n as f64).powf(1.0 / ndim as f64);
    let spacing_guess = density_guess.max(span_max / (n as f64).powf(1.0 / ndim as f64) / 4.0);
    let grid = CellGrid::build(positions, ndim, system.periodic_box(), spacing_guess);
    use rayon::prelude::*;
    (0..n)
        .into_par_iter()
        .map(|i| {
            let x = positions[i];
            let home = grid.home_of(&x);
            let cap = grid.open_shell_cap(home);
            let mut best2 = f64::INFINITY;
            let mut buf = Vec::new();
            let mut s = 0i64;
            loop {
                let dmin = grid.shell_min_dist(s);
                if dmin * dmin > best2 {
                    break;
                }
                if let Some(cap) = cap {
                    if s > cap {
                        break;
                    }
                }
                buf.clear();
                grid.collect_shell(positions, &x, home, s, i as u32, &mut buf);
                for c in &buf {
                    best2 = best2.min(c.d2);
                }
                s += 1;
            }
            best2.sqrt()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::{Dim, ParticleSystem};
    use approx::assert_relative_eq;

    #[test]
    fn nearest_matches_brute_force_open() {
        let pts: Vec<[f64; 3]> = (0..40)
            .map(|i| {
                let t = i as f64;
                [
                    (t * 0.37).sin() * 5.0 + 5.0,
                    (t * 0.91).cos() * 5.0 + 5.0,
                    0.0,
                ]
            })
            .collect();
        let s = ParticleSystem::new(Dim::Two, pts, None).unwrap();
        let fast = nearest_distances(&s);
        for i in 0..s.len() {
            assert_relative_eq!(fast[i], s.nearest_neighbor_distance(i).unwrap(), max_relative = 1e-12);
        }
    }

    #[test]
    fn nearest_matches_brute_force_periodic_small_box() {
        // box is narrow enough that images matter
        let pts = vec![
            [0.2, 0.5, 0.0],
            [1.9, 0.5, 0.0],
            [1.0, 1.4, 0.0],
        ];
        let s = ParticleSystem::new(Dim::Two, pts, Some([2.0, 2.0, 0.0])).unwrap();
        let fast = nearest_distances(&s);
        for i in 0..s.len() {
            assert_relative_eq!(fast[i], s.nearest_neighbor_distance(i).unwrap(), max_relative = 1e-12);
        }
    }

    #[test]
    fn query_radius_finds_periodic_images() {
        // two particles in a 3-wide box; images of particle 1 sit at x = -1.2 and 4.8...
        // from particle 0 at 0.3 the nearest image of 1 is at 1.8 (d=1.5) and the wrap image at -1.2 (d=1.5).
        let pts = vec![[0.3, 0.0, 0.0], [1.8, 0.0, 0.0]];
        let s = ParticleSystem::new(Dim::Two, pts, Some([3.0, 3.0, 0.0])).unwrap();
        let grid = CellGrid::from_system(&s, 1.0);
        let hits = grid.query_radius(s.positions(), &s.positions()[0], 1.6, 0);
        // both images of particle 1 qualify at distance 1.5, plus no self images within 1.6 (own images at 3.0)
        assert_eq!(hits.len(), 2);
        assert!(hits.iter().all(|c| c.id == 1));
        for h in &hits {
            assert_relative_eq!(h.d2.sqrt(), 1.5, max_relative = 1e-12);
        }
    }

    #[test]
    fn query_radius_sees_own_images() {
        let pts = vec![[0.5, 0.5, 0.0], [2.5, 2.5, 0.0]];
        let s = ParticleSystem::new(Dim::Two, pts, Some([3.0, 3.0, 0.0])).unwrap();
        let grid = CellGrid::from_system(&s, 1.0);
        let hits = grid.query_radius(s.positions(), &s.positions()[0], 3.1, 0);
        // own images at distance 3 along each axis
        assert!(hits.iter().filter(|c| c.id == 0).count() >= 4);
    }
}
