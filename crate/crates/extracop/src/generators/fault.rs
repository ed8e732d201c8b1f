//! An fcc crystal with an extrinsic stacking fault: one extra close-packed
//! plane inserted into the ...ABCABC... sequence.
//!
//! A single insertion between planes of types t and t+1 must use the third
//! letter, so the inserted plane always sits between two unlike planes and
//! keeps a locally fcc (staggered) environment, while the two planes flanking
//! it see like-typed planes on both sides and become locally hcp (eclipsed).
//! The crystal stays fully periodic: with 3m+1 planes the faulted sequence
//! closes on itself.

use crate::system::{Dim, ParticleSystem};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LayerRole {
    Bulk,
    /// Plane adjacent to the inserted one; locally hcp.
    HcpLike,
    /// The inserted plane itself; locally fcc.
    Inserted,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FaultSpec {
    /// In-plane repetitions (x) of the 1-wide cell.
    pub nx: u32,
    /// In-plane repetitions (y) of the sqrt(3)-tall two-row cell.
    pub ny: u32,
    /// Number of ABC triples; the crystal gets 3*triples + 1 planes.
    pub triples: u32,
    /// Index of the inserted plane in the final stacking, in
    /// [3, 3*triples - 3] so at least three bulk planes flank the fault.
    pub fault_plane: u32,
}

#[derive(Debug, Clone)]
pub struct FaultedCrystal {
    pub system: ParticleSystem,
    /// Plane index of every particle.
    pub layer_of: Vec<u32>,
    /// Role of every plane.
    pub roles: Vec<LayerRole>,
    pub planes: u32,
}

impl FaultedCrystal {
    pub fn role_of(&self, particle: usize) -> LayerRole {
        self.roles[self.layer_of[particle] as usize]
    }
}

pub fn generate_fcc_with_extrinsic_stacking_fault(spec: &FaultSpec) -> Result<FaultedCrystal> {
    let FaultSpec {
        nx,
        ny,
        triples,
        fault_plane,
    } = *spec;
    if nx < 3 || ny < 2 || triples < 3 {
        return Err(Error::Domain(
            "faulted crystal needs nx >= 3, ny >= 2 and at least 3 stacking triples".into(),
        ));
    }
    let base_planes = 3 * triples;
    if fault_plane < 3 || fault_plane > base_planes - 3 {
        return Err(Error::Domain(format!(
            "fault plane {fault_plane} too close to the stacking boundary (valid range 3..={})",
            base_planes - 3
        )));
    }
    let f = fault_plane as usize;
    let planes = base_planes + 1;
    // stacking letters 0=A, 1=B, 2=C
    let mut letters = Vec::with_capacity(planes as usize);
    for i in 0..planes as usize {
        let letter = if i < f {
            (i % 3) as u32
        } else if i == f {
            ((i - 1) % 3 + 2) as u32 % 3
        } else {
            ((i - 1) % 3) as u32
        };
        letters.push(letter);
    }
    let mut roles = vec![LayerRole::Bulk; planes as usize];
    roles[f] = LayerRole::Inserted;
    roles[f - 1] = LayerRole::HcpLike;
    roles[f + 1] = LayerRole::HcpLike;

    let sqrt3 = 3.0f64.sqrt();
    let h = (2.0f64 / 3.0).sqrt(); // close-packed plane spacing at unit bond length
    let box_x = nx as f64;
    let box_y = ny as f64 * sqrt3;
    let mut pts = Vec::new();
    let mut layer_of = Vec::new();
    let mut species = Vec::new();
    for (p, &letter) in letters.iter().enumerate() {
        let ox = 0.5 * letter as f64;
        let oy = sqrt3 / 6.0 * letter as f64;
        let z = p as f64 * h;
        for j in 0..(2 * ny) {
            let row_x = 0.5 * (j % 2) as f64;
            let y = (j as f64 * sqrt3 / 2.0 + oy).rem_euclid(box_y);
            for i in 0..nx {
                let x = (i as f64 + row_x + ox).rem_euclid(box_x);
                pts.push([x, y, z]);
                layer_of.push(p as u32);
                species.push(format!("L{p}"));
            }
        }
    }
    let system = ParticleSystem::new(
        Dim::Three,
        pts,
        Some([box_x, box_y, planes as f64 * h]),
    )?
    .with_species(species)?;
    Ok(FaultedCrystal {
        system,
        layer_of,
        roles,
        planes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stacking_letters_stay_valid() {
        let c = generate_fcc_with_extrinsic_stacking_fault(&FaultSpec {
            nx: 4,
            ny: 3,
            triples: 4,
            fault_plane: 6,
        })
        .unwrap();
        assert_eq!(c.planes, 13);
        // adjacent planes (cyclically) never share a letter: recover letters from x offsets
        let rp = crate::system::nearest_distances(&c.system);
        for r in rp {
            assert!((r - 1.0).abs() < 1e-9, "bond length {r}");
        }
        assert_eq!(
            c.roles.iter().filter(|r| **r == LayerRole::Inserted).count(),
            1
        );
        assert_eq!(
            c.roles.iter().filter(|r| **r == LayerRole::HcpLike).count(),
            2
        );
    }

    #[test]
    fn boundary_fault_rejected() {
        for bad in [0, 1, 2, 10, 11, 12, 20] {
            assert!(generate_fcc_with_extrinsic_stacking_fault(&FaultSpec {
                nx: 4,
                ny: 3,
                triples: 4,
                fault_plane: bad,
            })
            .is_err());
        }
    }
}
