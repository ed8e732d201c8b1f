//! Voronoi neighborhoods by convex-cell clipping.
//!
//! Each particle's cell starts as a large box and is cut by the perpendicular
//! bisector of every nearby particle (or periodic image), supplied by the
//! cell grid in expanding shells. A particle is a Voronoi neighbor exactly
//! when its bisector still carries a vertex of the finished cell, i.e. when
//! the shared facet has positive measure. Clipping stops once no remaining
//! candidate can reach the cell: a bisector at distance d cuts nothing when
//! d > 2·R_max, with R_max the current farthest cell vertex.
//!
//! Zero-measure contacts (exactly co-spherical configurations such as ideal
//! lattice second shells) produce a bisector tangent at a vertex; the cut
//! test treats them as non-cutting, so they resolve deterministically to
//! non-adjacency instead of raising an error.

use crate::grid::{Candidate, CellGrid};

pub const WALL: u32 = u32::MAX;

#[derive(Debug, Clone, Copy)]
struct Plane {
    n: [f64; 3],
    d: f64,
    source: u32,
}

#[derive(Debug, Clone, Copy)]
struct Vert3 {
    planes: [u32; 3],
    pos: [f64; 3],
    r2: f64,
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Reusable scratch state for one 3D cell construction.
pub struct Cell3 {
    planes: Vec<Plane>,
    verts: Vec<Vert3>,
    fresh: Vec<Vert3>,
    ex: Vec<f64>,
    r2max: f64,
    eps: f64,
}

impl Cell3 {
    pub fn new() -> Self {
        Cell3 {
            planes: Vec::with_capacity(64),
            verts: Vec::with_capacity(64),
            fresh: Vec::with_capacity(16),
            ex: Vec::with_capacity(64),
            r2max: 0.0,
            eps: 0.0,
        }
    }

    /// Reset to a cube of half-width `w` centered on the particle, with cut
    /// tolerance `eps` (absolute, in length units).
    pub fn reset(&mut self, w: f64, eps: f64) {
        self.planes.clear();
        self.verts.clear();
        self.eps = eps;
        for a in 0..3 {
            for sgn in [-1.0, 1.0] {
                let mut n = [0.0; 3];
                n[a] = sgn;
                self.planes.push(Plane {
                    n,
                    d: w,
                    source: WALL,
                });
            }
        }
        // plane ids: 0:-x 1:+x 2:-y 3:+y 4:-z 5:+z
        for sx in 0..2u32 {
            for sy in 0..2u32 {
                for sz in 0..2u32 {
                    let pos = [
                        if sx == 0 { -w } else { w },
                        if sy == 0 { -w } else { w },
                        if sz == 0 { -w } else { w },
                    ];
                    self.verts.push(Vert3 {
                        planes: [sx, 2 + sy, 4 + sz],
                        pos,
                        r2: 3.0 * w * w,
                    });
                }
            }
        }
        self.r2max = 3.0 * w * w;
    }

    pub fn r2max(&self) -> f64 {
        self.r2max
    }

    /// Cut by the bisector of a candidate at displacement `disp` (length² =
    /// `d2`). Returns true when the plane removed at least one vertex.
    pub fn clip(&mut self, disp: [f64; 3], d2: f64, source: u32) -> bool {
        let len = d2.sqrt();
        let inv = 1.0 / len;
        let n = [disp[0] * inv, disp[1] * inv, disp[2] * inv];
        let d = 0.5 * len;
        self.ex.clear();
        let mut any_cut = false;
        for v in &self.verts {
            let e = dot(n, v.pos) - d;
            if e > self.eps {
                any_cut = true;
            }
            self.ex.push(e);
        }
        if !any_cut {
            return false;
        }
        let t = self.planes.len() as u32;
        self.planes.push(Plane { n, d, source });
        self.fresh.clear();
        for (wi, w) in self.verts.iter().enumerate() {
            if self.ex[wi] <= self.eps {
                continue;
            }
            for (ui, u) in self.verts.iter().enumerate() {
                if self.ex[ui] > self.eps {
                    continue;
                }
                let (shared, a, b) = shared_pair(u.planes, w.planes);
                if shared != 2 {
                    continue;
                }
                if let Some(pos) = self.intersect(a, b, t) {
                    self.fresh.push(Vert3 {
                        planes: sorted3(a, b, t),
                        pos,
                        r2: dot(pos, pos),
                    });
                }
            }
        }
        let ex = std::mem::take(&mut self.ex);
        let mut keep = 0usize;
        for i in 0..self.verts.len() {
            if ex[i] <= self.eps {
                self.verts[keep] = self.verts[i];
                keep += 1;
            }
        }
        self.verts.truncate(keep);
        self.verts.extend_from_slice(&self.fresh);
        self.ex = ex;
        self.r2max = self.verts.iter().map(|v| v.r2).fold(0.0, f64::max);
        true
    }

    fn intersect(&self, a: u32, b: u32, t: u32) -> Option<[f64; 3]> {
        let pa = self.planes[a as usize];
        let pb = self.planes[b as usize];
        let pt = self.planes[t as usize];
        let nbt = cross(pb.n, pt.n);
        let det = dot(pa.n, nbt);
        if det.abs() < 1e-12 {
            return None;
        }
        let nta = cross(pt.n, pa.n);
        let nab = cross(pa.n, pb.n);
        let inv = 1.0 / det;
        Some([
            (pa.d * nbt[0] + pb.d * nta[0] + pt.d * nab[0]) * inv,
            (pa.d * nbt[1] + pb.d * nta[1] + pt.d * nab[1]) * inv,
            (pa.d * nbt[2] + pb.d * nta[2] + pt.d * nab[2]) * inv,
        ])
    }

    /// Particle ids whose bisector carries at least one cell vertex, sorted
    /// and deduplicated (periodic images collapse onto one id).
    pub fn neighbor_sources(&self, out: &mut Vec<u32>) {
        out.clear();
        for v in &self.verts {
            for &pl in &v.planes {
                let s = self.planes[pl as usize].source;
                if s != WALL {
                    out.push(s);
                }
            }
        }
        out.sort_unstable();
        out.dedup();
    }
}

impl Default for Cell3 {
    fn default() -> Self {
        Self::new()
    }
}

fn sorted3(a: u32, b: u32, c: u32) -> [u32; 3] {
    let mut v = [a, b, c];
    v.sort_unstable();
    v
}

/// Count common entries of two sorted triples; also return the two shared ids
/// when the count is exactly 2.
fn shared_pair(a: [u32; 3], b: [u32; 3]) -> (u32, u32, u32) {
    let mut count = 0u32;
    let mut s = [0u32; 2];
    let (mut i, mut j) = (0usize, 0usize);
    while i < 3 && j < 3 {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                if count < 2 {
                    s[count as usize] = a[i];
                }
                count += 1;
                i += 1;
                j += 1;
            }
        }
    }
    (count, s[0], s[1])
}

#[derive(Debug, Clone, Copy)]
struct Vert2 {
    pos: [f64; 2],
    r2: f64,
    /// Plane of the edge from this vertex to the next (cyclic).
    edge: u32,
}

/// Reusable scratch state for one 2D cell construction.
pub struct Cell2 {
    planes: Vec<Plane>,
    verts: Vec<Vert2>,
    ex: Vec<f64>,
    r2max: f64,
    eps: f64,
}

impl Cell2 {
    pub fn new() -> Self {
        Cell2 {
            planes: Vec::with_capacity(32),
            verts: Vec::with_capacity(32),
            ex: Vec::with_capacity(32),
            r2max: 0.0,
            eps: 0.0,
        }
    }

    pub fn reset(&mut self, w: f64, eps: f64) {
        self.planes.clear();
        self.verts.clear();
        self.eps = eps;
        // walls: 0:y=-w 1:x=+w 2:y=+w 3:x=-w, polygon CCW
        self.planes.push(Plane {
            n: [0.0, -1.0, 0.0],
            d: w,
            source: WALL,
        });
        self.planes.push(Plane {
            n: [1.0, 0.0, 0.0],
            d: w,
            source: WALL,
        });
        self.planes.push(Plane {
            n: [0.0, 1.0, 0.0],
            d: w,
            source: WALL,
        });
        self.planes.push(Plane {
            n: [-1.0, 0.0, 0.0],
            d: w,
            source: WALL,
        });
        let r2 = 2.0 * w * w;
        self.verts.push(Vert2 {
            pos: [-w, -w],
            r2,
            edge: 0,
        });
        self.verts.push(Vert2 {
            pos: [w, -w],
            r2,
            edge: 1,
        });
        self.verts.push(Vert2 {
            pos: [w, w],
            r2,
            edge: 2,
        });
        self.verts.push(Vert2 {
            pos: [-w, w],
            r2,
            edge: 3,
        });
        self.r2max = r2;
    }

    pub fn r2max(&self) -> f64 {
        self.r2max
    }

    pub fn clip(&mut self, disp: [f64; 3], d2: f64, source: u32) -> bool {
        let len = d2.sqrt();
        let inv = 1.0 / len;
        let n = [disp[0] * inv, disp[1] * inv, 0.0];
        let d = 0.5 * len;
        let t = self.planes.len() as u32;
        let mut inserted = false;
        // non-contiguous cut sets can appear under epsilon fuzz; repeat until clean
        loop {
            let m = self.verts.len();
            self.ex.clear();
            for v in &self.verts {
                self.ex
                    .push(n[0] * v.pos[0] + n[1] * v.pos[1] - d);
            }
            let cut: Vec<bool> = self.ex.iter().map(|&e| e > self.eps).collect();
            if !cut.iter().any(|&c| c) {
                break;
            }
            if cut.iter().all(|&c| c) {
                // origin is strictly inside every bisector half-space, so a
                // full wipe means numerical trouble; drop the cut.
                break;
            }
            if !inserted {
                self.planes.push(Plane { n, d, source });
                inserted = true;
            }
            // locate a contiguous cut arc [a, a+len)
            let mut a = 0;
            while !(cut[a] && !cut[(a + m - 1) % m]) {
                a += 1;
            }
            let mut alen = 1;
            while cut[(a + alen) % m] {
                alen += 1;
            }
            let before = (a + m - 1) % m; // last kept vertex before arc
            let last_cut = (a + alen - 1) % m;
            let entry_edge = self.verts[before].edge;
            let exit_edge = self.verts[last_cut].edge;
            let va = self.intersect2(entry_edge, t);
            let vb = self.intersect2(exit_edge, t);
            let (va, vb) = match (va, vb) {
                (Some(a), Some(b)) => (a, b),
                _ => break,
            };
            let mut fresh: Vec<Vert2> = Vec::with_capacity(m - alen + 2);
            let mut i = (a + alen) % m;
            loop {
                fresh.push(self.verts[i]);
                if i == before {
                    break;
                }
                i = (i + 1) % m;
            }
            fresh.push(Vert2 {
                pos: va,
                r2: va[0] * va[0] + va[1] * va[1],
                edge: t,
            });
            fresh.push(Vert2 {
                pos: vb,
                r2: vb[0] * vb[0] + vb[1] * vb[1],
                edge: exit_edge,
            });
            self.verts = fresh;
        }
        if inserted {
            self.r2max = self.verts.iter().map(|v| v.r2).fold(0.0, f64::max);
        }
        inserted
    }

    fn intersect2(&self, a: u32, b: u32) -> Option<[f64; 2]> {
        let pa = self.planes[a as usize];
        let pb = self.planes[b as usize];
        let det = pa.n[0] * pb.n[1] - pa.n[1] * pb.n[0];
        if det.abs() < 1e-12 {
            return None;
        }
        let inv = 1.0 / det;
        Some([
            (pa.d * pb.n[1] - pb.d * pa.n[1]) * inv,
            (pa.n[0] * pb.d - pb.n[0] * pa.d) * inv,
        ])
    }

    pub fn neighbor_sources(&self, out: &mut Vec<u32>) {
        out.clear();
        for v in &self.verts {
            let s = self.planes[v.edge as usize].source;
            if s != WALL {
                out.push(s);
            }
        }
        out.sort_unstable();
        out.dedup();
    }
}

impl Default for Cell2 {
    fn default() -> Self {
        Self::new()
    }
}

/// Scratch buffers shared across many cell constructions on one thread.
pub struct CellScratch {
    cell3: Cell3,
    cell2: Cell2,
    shell: Vec<Candidate>,
    sources: Vec<u32>,
}

impl CellScratch {
    pub fn new() -> Self {
        CellScratch {
            cell3: Cell3::new(),
            cell2: Cell2::new(),
            shell: Vec::with_capacity(128),
            sources: Vec::with_capacity(64),
        }
    }
}

impl Default for CellScratch {
    fn default() -> Self {
        Self::new()
    }
}

/// Parameters of one Voronoi pass over a position snapshot.
pub struct VoronoiPass<'a> {
    pub positions: &'a [[f64; 3]],
    pub grid: &'a CellGrid,
    pub ndim: usize,
    pub periodic: bool,
    /// Initial cube half-width; must exceed any true cell extent.
    pub wall: f64,
    /// Absolute cut tolerance.
    pub eps: f64,
}

impl<'a> VoronoiPass<'a> {
    /// Voronoi neighbors of particle `i` in this snapshot, written into
    /// `out` sorted by id. Returns the number of bisector planes processed.
    pub fn neighbors_of(&self, i: usize, scratch: &mut CellScratch, out: &mut Vec<u32>) -> usize {
        let x = self.positions[i];
        let home = self.grid.home_of(&x);
        let cap = self.grid.open_shell_cap(home);
        let mut processed = 0usize;
        let mut s = 0i64;
        macro_rules! run {
            ($cell:expr) => {{
                $cell.reset(self.wall, self.eps);
                loop {
                    let dmin = self.grid.shell_min_dist(s);
                    if dmin * dmin > 4.0 * $cell.r2max() {
                        break;
                    }
                    if let Some(cap) = cap {
                        if s > cap {
                            break;
                        }
                    }
                    scratch.shell.clear();
                    self.grid
                        .collect_shell(self.positions, &x, home, s, i as u32, &mut scratch.shell);
                    for c in &scratch.shell {
                        if c.d2 > 4.0 * $cell.r2max() {
                            break;
                        }
                        $cell.clip(c.disp, c.d2, c.id);
                        processed += 1;
                    }
                    s += 1;
                }
                $cell.neighbor_sources(&mut scratch.sources);
            }};
        }
        if self.ndim == 3 {
            run!(scratch.cell3);
        } else {
            run!(scratch.cell2);
        }
        out.clear();
        out.extend_from_slice(&scratch.sources);
        processed
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::CellGrid;

    fn pass_neighbors(
        positions: &[[f64; 3]],
        ndim: usize,
        periodic: Option<[f64; 3]>,
        i: usize,
    ) -> Vec<u32> {
        let (mut lo, mut hi) = ([f64::INFINITY; 3], [f64::NEG_INFINITY; 3]);
        for p in positions {
            for a in 0..ndim {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
        let diameter = match periodic {
            Some(b) => b[..ndim].iter().cloned().fold(0.0, f64::max),
            None => (0..ndim).map(|a| hi[a] - lo[a]).fold(0.0, f64::max),
        };
        let scale = diameter.max(1.0) / (positions.len() as f64).powf(1.0 / ndim as f64);
        let grid = CellGrid::build(positions, ndim, periodic, scale);
        let wall = match periodic {
            Some(_) => diameter + 2.0 * scale,
            None => 100.0 * (diameter + scale),
        };
        let pass = VoronoiPass {
            positions,
            grid: &grid,
            ndim,
            periodic: periodic.is_some(),
            wall,
            eps: 1e-9 * scale,
        };
        let mut scratch = CellScratch::new();
        let mut out = Vec::new();
        pass.neighbors_of(i, &mut scratch, &mut out);
        out
    }

    #[test]
    fn two_particles_are_mutual_neighbors() {
        let pts = [[0.0, 0.0, 0.0], [1.0, 0.3, 0.0]];
        assert_eq!(pass_neighbors(&pts, 2, None, 0), vec![1]);
        assert_eq!(pass_neighbors(&pts, 2, None, 1), vec![0]);
        let pts3 = [[0.0, 0.0, 0.0], [1.0, 0.3, -0.4]];
        assert_eq!(pass_neighbors(&pts3, 3, None, 0), vec![1]);
        assert_eq!(pass_neighbors(&pts3, 3, None, 1), vec![0]);
    }

    #[test]
    fn unit_square_with_center() {
        let pts = [
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [1.0, 1.0, 0.0],
            [0.5, 0.5, 0.0],
        ];
        let center = pass_neighbors(&pts, 2, None, 4);
        assert_eq!(center, vec![0, 1, 2, 3]);
        // a corner sees the center and its two edge-adjacent corners, but not
        // the diagonally opposite corner (blocked by the center's cell)
        let corner = pass_neighbors(&pts, 2, None, 0);
        assert_eq!(corner, vec![1, 2, 4]);
    }

    #[test]
    fn square_lattice_periodic_has_4_neighbors() {
        // exact degeneracy: diagonal contacts are corner-tangent and must not count
        let n = 5;
        let mut pts = Vec::new();
        for i in 0..n {
            for j in 0..n {
                pts.push([i as f64, j as f64, 0.0]);
            }
        }
        let l = n as f64;
        for i in 0..pts.len() {
            let nb = pass_neighbors(&pts, 2, Some([l, l, 0.0]), i);
            assert_eq!(nb.len(), 4, "particle {i} got {nb:?}");
        }
    }

    #[test]
    fn simple_cubic_periodic_has_6_neighbors() {
        let n = 4;
        let mut pts = Vec::new();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    pts.push([i as f64, j as f64, k as f64]);
                }
            }
        }
        let l = n as f64;
        for i in [0usize, 7, 21, 63] {
            let nb = pass_neighbors(&pts, 3, Some([l, l, l]), i);
            assert_eq!(nb.len(), 6, "particle {i} got {nb:?}");
        }
    }

    #[test]
    fn adjacency_is_symmetric_on_scattered_points() {
        // deterministic pseudo-random scatter, generic positions
        let mut state = 12345u64;
        let mut rnd = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let pts: Vec<[f64; 3]> = (0..60)
            .map(|_| [rnd() * 5.0, rnd() * 5.0, rnd() * 5.0])
            .collect();
        let adj: Vec<Vec<u32>> = (0..pts.len())
            .map(|i| pass_neighbors(&pts, 3, None, i))
            .collect();
        for i in 0..pts.len() {
            for &j in &adj[i] {
                assert!(
                    adj[j as usize].contains(&(i as u32)),
                    "asymmetric pair ({i}, {j})"
                );
            }
        }
    }

    #[test]
    fn bisector_oracle_agrees_in_2d() {
        // independent oracle: q is a Voronoi neighbor of p iff some point on
        // the (p,q) bisector line is strictly closer to p than to every other
        // particle; each "closer than s" condition is linear along the line,
        // so the feasible set is an interval intersection.
        let mut state = 99u64;
        let mut rnd = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let pts: Vec<[f64; 3]> = (0..40)
            .map(|_| [rnd() * 4.0, rnd() * 4.0, 0.0])
            .collect();
        // the clipping truncates unbounded hull cells at a frame ~100x the
        // system size; the oracle searches a slightly smaller region so a
        // facet it finds is always inside the clip box
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in &pts {
            for a in 0..2 {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
        let diameter = (hi[0] - lo[0]).max(hi[1] - lo[1]);
        let scale = diameter.max(1.0) / (pts.len() as f64).sqrt();
        let wall = 100.0 * (diameter + scale);
        let frame = 0.8 * wall - 2.0 * diameter;
        let oracle = |p: usize, q: usize| -> bool {
            let a = pts[p];
            let b = pts[q];
            let mid = [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0];
            let dir = [-(b[1] - a[1]), b[0] - a[0]];
            let dlen = (dir[0] * dir[0] + dir[1] * dir[1]).sqrt();
            let tmax = frame / dlen;
            let (mut tlo, mut thi) = (-tmax, tmax);
            for (s, c) in pts.iter().enumerate() {
                if s == p || s == q {
                    continue;
                }
                // |x-a|^2 < |x-c|^2 with x = mid + t*dir: linear in t
                let k0 = (mid[0] - a[0]).powi(2) + (mid[1] - a[1]).powi(2)
                    - (mid[0] - c[0]).powi(2)
                    - (mid[1] - c[1]).powi(2);
                let k1 = 2.0
                    * (dir[0] * (c[0] - a[0]) + dir[1] * (c[1] - a[1]));
                // k0 + k1*t < 0
                if k1.abs() < 1e-300 {
                    if k0 >= 0.0 {
                        return false;
                    }
                } else if k1 > 0.0 {
                    thi = thi.min(-k0 / k1);
                } else {
                    tlo = tlo.max(-k0 / k1);
                }
            }
            tlo < thi - 1e-12
        };
        for p in 0..pts.len() {
            let nb = pass_neighbors(&pts, 2, None, p);
            for q in 0..pts.len() {
                if q == p {
                    continue;
                }
                let expect = oracle(p, q);
                let got = nb.contains(&(q as u32));
                assert_eq!(got, expect, "pair ({p}, {q})");
            }
        }
    }
}
