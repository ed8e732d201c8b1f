//! Penrose rhombus (P3) tiling vertices via de Bruijn's pentagrid.
//!
//! Five families of parallel lines x·e_j = n + gamma_j, with the e_j the
//! fifth roots of unity, dualize to a rhombus tiling: every line intersection
//! corresponds to one rhombus whose four corners are integer combinations
//! sum_l K_l e_l. With sum(gamma) = 0 and generic offsets the tiling is a
//! genuine Penrose tiling and no three lines meet in a point.

use crate::system::{Dim, ParticleSystem};
use crate::{Error, Result};
use std::collections::HashMap;

/// Grid offsets; generic, sum to zero.
const GAMMA: [f64; 5] = [0.17, 0.31, -0.22, 0.07, -0.33];

#[derive(Debug, Clone)]
pub struct PenroseOutput {
    pub system: ParticleSystem,
    /// Unit-length tile edges as vertex index pairs.
    pub edges: Vec<(u32, u32)>,
}

/// Generate the vertex set of a Penrose rhombus tiling patch.
///
/// `size` controls the patch radius: each grid family contributes lines with
/// indices -size..=size, giving roughly 10*(2*size+1)^2 rhombi.
pub fn generate_penrose_vertices(size: u32) -> Result<PenroseOutput> {
    if size < 1 {
        return Err(Error::Domain("penrose patch size must be >= 1".into()));
    }
    let n = size as i64;
    let dirs: Vec<[f64; 2]> = (0..5)
        .map(|j| {
            let a = 2.0 * std::f64::consts::PI * j as f64 / 5.0;
            [a.cos(), a.sin()]
        })
        .collect();
    let mut ids: HashMap<[i64; 5], u32> = HashMap::new();
    let mut pts: Vec<[f64; 3]> = Vec::new();
    let mut edges: Vec<(u32, u32)> = Vec::new();
    let mut intern = |tuple: [i64; 5], pts: &mut Vec<[f64; 3]>| -> u32 {
        *ids.entry(tuple).or_insert_with(|| {
            let mut x = 0.0;
            let mut y = 0.0;
            for l in 0..5 {
                x += tuple[l] as f64 * dirs[l][0];
                y += tuple[l] as f64 * dirs[l][1];
            }
            pts.push([x, y, 0.0]);
            (pts.len() - 1) as u32
        })
    };
    for j in 0..5usize {
        for k in (j + 1)..5usize {
            let det = dirs[j][0] * dirs[k][1] - dirs[j][1] * dirs[k][0];
            for a in -n..=n {
                for b in -n..=n {
                    // intersection of e_j.x = a + gamma_j and e_k.x = b + gamma_k
                    let rj = a as f64 + GAMMA[j];
                    let rk = b as f64 + GAMMA[k];
                    let x = (rj * dirs[k][1] - rk * dirs[j][1]) / det;
                    let y = (dirs[j][0] * rk - dirs[k][0] * rj) / det;
                    let mut base = [0i64; 5];
                    for l in 0..5 {
                        if l == j || l == k {
                            continue;
                        }
                        base[l] = (x * dirs[l][0] + y * dirs[l][1] - GAMMA[l]).ceil() as i64;
                    }
                    let mut quad = [0u32; 4];
                    for (c, (sj, sk)) in [(0i64, 0i64), (1, 0), (1, 1), (0, 1)].iter().enumerate() {
                        let mut t = base;
                        t[j] = a + sj;
                        t[k] = b + sk;
                        quad[c] = intern(t, &mut pts);
                    }
                    for c in 0..4 {
                        let (u, v) = (quad[c], quad[(c + 1) % 4]);
                        edges.push((u.min(v), u.max(v)));
                    }
                }
            }
        }
    }
    edges.sort_unstable();
    edges.dedup();
    let system = ParticleSystem::new(Dim::Two, pts, None)?;
    Ok(PenroseOutput { system, edges })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edges_are_unit_length() {
        let out = generate_penrose_vertices(4).unwrap();
        assert!(out.system.len() > 100);
        for &(u, v) in &out.edges {
            let d = out.system.pairwise_distance(u as usize, v as usize).unwrap();
            assert!((d - 1.0).abs() < 1e-9, "edge ({u},{v}) length {d}");
        }
    }

    #[test]
    fn incident_edge_angles_are_multiples_of_36_degrees() {
        let out = generate_penrose_vertices(3).unwrap();
        let pos = out.system.positions();
        let mut incident: Vec<Vec<u32>> = vec![Vec::new(); out.system.len()];
        for &(u, v) in &out.edges {
            incident[u as usize].push(v);
            incident[v as usize].push(u);
        }
        for (v, nbrs) in incident.iter().enumerate() {
            for &w in nbrs {
                let d = [
                    pos[w as usize][0] - pos[v][0],
                    pos[w as usize][1] - pos[v][1],
                ];
                let ang = d[1].atan2(d[0]).to_degrees().rem_euclid(36.0);
                let frac = ang.min(36.0 - ang);
                assert!(frac < 1e-6, "edge direction {ang} deg off-grid");
            }
        }
    }

    #[test]
    fn vertices_are_distinct() {
        let out = generate_penrose_vertices(3).unwrap();
        let pos = out.system.positions();
        for i in 0..pos.len() {
            for j in (i + 1)..pos.len() {
                let dx = pos[i][0] - pos[j][0];
                let dy = pos[i][1] - pos[j][1];
                assert!(
                    dx * dx + dy * dy > 1e-12,
                    "duplicate vertices {i} and {j}"
                );
            }
        }
    }
}
