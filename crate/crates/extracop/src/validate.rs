//! Desk-scale validation blocks: analytic coefficient values, lattice
//! coordination statistics, end-to-end lattice coefficients, polygon closed
//! forms, the stacking-fault signature, random-packing statistics, thermal
//! robustness, determinism/invariance, and throughput.
//!
//! Each block returns structured results so both the CLI `validate`
//! subcommand and the acceptance test suite can run it and render pass/fail
//! lines.

use crate::analysis::{autocorrelation_report, default_radius_grid, separability};
use crate::extracop::{
    analyze, bond_angles, coefficient, discretize_angles, max_coefficient, polygon_coefficient,
    shapes, BondSet, ExtracopResult, DEFAULT_RMSE_THRESHOLD,
};
use crate::generators::{
    generate_fcc_with_extrinsic_stacking_fault, generate_lattice, generate_poisson_disk,
    FaultSpec, LatticeKind, LatticeSpec, LayerRole, PackingSpec,
};
use crate::neighborhoods::{robust_voronoi_neighborhood, NeighborMap, PerturbationConfig};
use crate::seed::SeedPolicy;
use crate::system::{median_nearest_distance, ParticleSystem};
use crate::thermal::{apply_thermal_displacements, rms_fraction_at, ThermalMode, ThermalSpec};
use crate::Result;
use serde::{Deserialize, Serialize};
use std::time::Instant;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckResult {
    pub criterion: &'static str,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(criterion: &'static str, name: impl Into<String>, passed: bool, detail: String) -> Self {
        CheckResult {
            criterion,
            name: name.into(),
            passed,
            detail,
        }
    }
}

/// Workload knobs; `full()` is the acceptance-scale run.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ValidationScale {
    pub table2_trials: u32,
    pub table3_replicas: u32,
    pub thermal_replicas: u32,
    pub random_neighborhoods: u32,
    /// Discretization threshold used by the analyze-based blocks; 5 degrees
    /// is the acceptance setting, other values are for exploration.
    pub rmse_threshold: f64,
}

impl ValidationScale {
    pub fn full() -> Self {
        ValidationScale {
            table2_trials: 1000,
            table3_replicas: 10,
            thermal_replicas: 25,
            random_neighborhoods: 10_000,
            rmse_threshold: DEFAULT_RMSE_THRESHOLD,
        }
    }

    pub fn quick() -> Self {
        ValidationScale {
            table2_trials: 25,
            table3_replicas: 2,
            thermal_replicas: 5,
            random_neighborhoods: 1000,
            rmse_threshold: DEFAULT_RMSE_THRESHOLD,
        }
    }

    pub fn with_rmse_threshold(mut self, t: f64) -> Self {
        self.rmse_threshold = t;
        self
    }
}

fn config_with(seed: SeedPolicy) -> PerturbationConfig {
    PerturbationConfig::new(seed)
}

/// Criterion 1: the seven analytic coefficient values.
///
/// Targets are the closed-form values; six match the published two-decimal
/// table, while the tetrahedral row's correct rounding is 2.585.
pub fn table1_block() -> Vec<CheckResult> {
    let start = Instant::now();
    let rows: [(&str, usize, usize, f64); 7] = [
        ("regular tetrahedral", 4, 1, 2.585),
        ("regular octahedral", 6, 2, 2.91),
        ("regular hexahedral", 8, 3, 3.22),
        ("triangular orthobicupolar", 12, 6, 3.46),
        ("cuboctahedral", 12, 4, 4.04),
        ("regular icosahedral", 12, 3, 4.46),
        ("regular dodecahedral", 20, 5, 5.25),
    ];
    let mut out = Vec::new();
    for (name, k, u, target) in rows {
        let e = coefficient(k, u).unwrap();
        let ok = (e - target).abs() <= 0.005;
        out.push(CheckResult::new(
            "1",
            format!("coefficient {name} (k={k}, classes={u})"),
            ok,
            format!("E = {e:.4} vs {target} (tol 0.005)"),
        ));
    }
    let dt = start.elapsed().as_secs_f64();
    out.push(CheckResult::new(
        "1",
        "runtime under 1 s",
        dt < 1.0,
        format!("{dt:.4} s"),
    ));
    out
}

fn lattice_extent(kind: LatticeKind) -> [u32; 3] {
    match kind.dim() {
        crate::system::Dim::Two => [6, 6, 1],
        crate::system::Dim::Three => [6, 6, 6],
    }
}

/// Criterion 2: coordination numbers of the ten lattices over seeded trials.
pub fn table2_block(scale: &ValidationScale, seed: SeedPolicy) -> Vec<CheckResult> {
    let start = Instant::now();
    let mut out = Vec::new();
    for (li, kind) in LatticeKind::ALL.iter().enumerate() {
        let system = match generate_lattice(&LatticeSpec::new(*kind, lattice_extent(*kind))) {
            Ok(s) => s,
            Err(e) => {
                out.push(CheckResult::new(
                    "2",
                    format!("{} generation", kind.name()),
                    false,
                    format!("{e}"),
                ));
                continue;
            }
        };
        let expected = kind.expected_coordination();
        let trials = scale.table2_trials;
        let results: Vec<(bool, u32)> = (0..trials)
            .map(|t| {
                let cfg = config_with(seed.derive((li as u64) << 32 | t as u64));
                let map = robust_voronoi_neighborhood(&system, &cfg).expect("voting failed");
                let all_match = (0..system.len()).all(|i| map.coordination(i) == expected);
                (all_match, map.samples_used())
            })
            .collect();
        let agree = results.iter().filter(|(ok, _)| *ok).count();
        let max_samples = results.iter().map(|(_, s)| *s).max().unwrap_or(0);
        let frac = agree as f64 / trials as f64;
        out.push(CheckResult::new(
            "2",
            format!("{} coordination {}", kind.name(), expected),
            frac >= 0.99 && max_samples <= 8,
            format!(
                "{agree}/{trials} trials agree ({:.1}%), max samples {max_samples}",
                100.0 * frac
            ),
        ));
    }
    let dt = start.elapsed().as_secs_f64();
    out.push(CheckResult::new(
        "2",
        "runtime under 5 min",
        dt < 300.0,
        format!("{dt:.1} s"),
    ));
    out
}

/// Mean of a slice.
fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Criterion 3: end-to-end coefficients on ideal crystals.
pub fn lattice_e_block(scale: &ValidationScale, seed: SeedPolicy) -> Vec<CheckResult> {
    let mut out = Vec::new();
    let run = |kind: LatticeKind, label: u64| -> (Vec<ExtracopResult>, ParticleSystem) {
        let system = generate_lattice(&LatticeSpec::new(kind, lattice_extent(kind))).unwrap();
        let map = robust_voronoi_neighborhood(&system, &config_with(seed.derive(label))).unwrap();
        let res = analyze(&system, &map, scale.rmse_threshold).unwrap();
        (res, system)
    };

    let (fcc, _) = run(LatticeKind::Fcc, 301);
    let e_fcc = mean(&fcc.iter().map(|r| r.e).collect::<Vec<_>>());
    out.push(CheckResult::new(
        "3",
        "fcc mean E near 4.04",
        fcc.iter().all(|r| (r.e - 4.04).abs() <= 0.02),
        format!("mean E = {e_fcc:.4}"),
    ));

    let (sc, _) = run(LatticeKind::SimpleCubic, 302);
    let e_sc = mean(&sc.iter().map(|r| r.e).collect::<Vec<_>>());
    out.push(CheckResult::new(
        "3",
        "simple cubic mean E near 2.91",
        sc.iter().all(|r| (r.e - 2.91).abs() <= 0.02),
        format!("mean E = {e_sc:.4}"),
    ));

    let (hcp, _) = run(LatticeKind::Hcp, 303);
    let e_hcp = mean(&hcp.iter().map(|r| r.e).collect::<Vec<_>>());
    let theory = coefficient(12, 6).unwrap();
    let bias = (e_hcp - theory) / theory;
    let lo = 3.46;
    let hi = 3.74 * 1.05;
    out.push(CheckResult::new(
        "3",
        "hcp empirical E within the discretization-bias band",
        hcp.iter().all(|r| r.e >= lo && r.e <= hi),
        format!(
            "mean E = {e_hcp:.4}, theoretical {theory:.4}, bias {:+.1}% (allowed [{lo}, {hi:.3}])",
            100.0 * bias
        ),
    ));

    let (bcc, _) = run(LatticeKind::Bcc, 304);
    let e_bcc = mean(&bcc.iter().map(|r| r.e).collect::<Vec<_>>());
    let k_ok = bcc.iter().all(|r| r.k == 14);
    out.push(CheckResult::new(
        "3",
        "bcc records a 14-neighbor coefficient",
        k_ok,
        format!("mean E = {e_bcc:.4} at k = 14 (no published reference row)"),
    ));
    out
}

/// Criterion 4: polygon closed form and the simplex bound.
pub fn polygon_block(scale: &ValidationScale, seed: SeedPolicy) -> Vec<CheckResult> {
    let mut out = Vec::new();
    // analyze on a star system: one center particle plus a regular k-gon
    let mut poly_ok = true;
    let mut detail = String::new();
    for k in 3..=24usize {
        let mut pts = vec![[0.0, 0.0, 0.0]];
        pts.extend(shapes::polygon(k));
        let system = ParticleSystem::new(crate::system::Dim::Two, pts, None).unwrap();
        let map =
            robust_voronoi_neighborhood(&system, &config_with(seed.derive(400 + k as u64)))
                .unwrap();
        let res = analyze(&system, &map, scale.rmse_threshold).unwrap();
        let center = &res[0];
        let expect_u = if k % 2 == 0 { k / 2 } else { (k - 1) / 2 };
        let expect_e = polygon_coefficient(k).unwrap();
        if center.k != k || center.unique_angles != expect_u || (center.e - expect_e).abs() > 0.01
        {
            poly_ok = false;
            detail = format!(
                "k={k}: got (k={}, classes={}, E={:.4}), expected (k={k}, classes={expect_u}, E={expect_e:.4})",
                center.k, center.unique_angles, center.e
            );
            break;
        }
    }
    out.push(CheckResult::new(
        "4",
        "regular polygons k=3..24 match the closed form",
        poly_ok,
        if poly_ok {
            "exact class counts, E within 0.01".into()
        } else {
            detail
        },
    ));

    // random neighborhoods never exceed the simplex bound
    let mut state = seed.derive(444).master() | 1;
    let mut rnd = move || {
        state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    let mut bound_ok = true;
    let mut bound_detail = String::from("all within the bound");
    for trial in 0..scale.random_neighborhoods {
        let k = 2 + (trial as usize % 19);
        let bonds: Vec<[f64; 3]> = (0..k)
            .map(|_| {
                loop {
                    let b = [rnd(), rnd(), rnd()];
                    if b[0].abs() + b[1].abs() + b[2].abs() > 1e-3 {
                        return b;
                    }
                }
            })
            .collect();
        let angles = bond_angles(&BondSet::from_vectors(bonds));
        let p = discretize_angles(&angles, scale.rmse_threshold).unwrap();
        let e = coefficient(k, p.class_count()).unwrap();
        if e > max_coefficient(k).unwrap() + 1e-12 {
            bound_ok = false;
            bound_detail = format!("violated at trial {trial} (k={k})");
            break;
        }
    }
    out.push(CheckResult::new(
        "4",
        format!(
            "{} random 3D neighborhoods respect the bound",
            scale.random_neighborhoods
        ),
        bound_ok,
        bound_detail,
    ));

    // equality on the regular simplex
    let angles = bond_angles(&BondSet::from_vectors(shapes::tetrahedron()));
    let p = discretize_angles(&angles, scale.rmse_threshold).unwrap();
    let e = coefficient(4, p.class_count()).unwrap();
    let bound = max_coefficient(4).unwrap();
    out.push(CheckResult::new(
        "4",
        "regular tetrahedron attains the bound",
        (e - bound).abs() <= 0.01,
        format!("E = {e:.4}, bound = {bound:.4}"),
    ));
    out
}

/// Criterion 5: the extrinsic stacking fault signature.
pub fn fault_block(scale: &ValidationScale, seed: SeedPolicy) -> Vec<CheckResult> {
    let mut out = Vec::new();
    let crystal = generate_fcc_with_extrinsic_stacking_fault(&FaultSpec {
        nx: 6,
        ny: 4,
        triples: 5,
        fault_plane: 7,
    })
    .unwrap();
    let system = &crystal.system;
    let map = robust_voronoi_neighborhood(system, &config_with(seed.derive(500))).unwrap();
    let res = analyze(system, &map, scale.rmse_threshold).unwrap();

    let mut bulk = Vec::new();
    let mut hcp_like = Vec::new();
    let mut inserted = Vec::new();
    for r in &res {
        match crystal.role_of(r.index) {
            LayerRole::Bulk => bulk.push(*r),
            LayerRole::HcpLike => hcp_like.push(*r),
            LayerRole::Inserted => inserted.push(*r),
        }
    }
    let mean_bulk = mean(&bulk.iter().map(|r| r.e).collect::<Vec<_>>());
    let mean_adj = mean(&hcp_like.iter().map(|r| r.e).collect::<Vec<_>>());
    out.push(CheckResult::new(
        "5",
        "fault-adjacent planes score below bulk",
        mean_adj < mean_bulk,
        format!("fault-adjacent mean E = {mean_adj:.4} < bulk mean E = {mean_bulk:.4}"),
    ));

    // the hcp-like signature: fault-adjacent planes carry the class count of
    // an ideal hcp environment (5 at the default threshold; the six
    // theoretical classes resolve at a finer one)
    let hcp_angles = bond_angles(&BondSet::from_vectors(shapes::triangular_orthobicupola()));
    let ref_default = discretize_angles(&hcp_angles, scale.rmse_threshold)
        .unwrap()
        .class_count();
    let sig_default = hcp_like
        .iter()
        .all(|r| r.k == 12 && r.unique_angles == ref_default);
    let fine = 2.0;
    let res_fine = analyze(system, &map, fine).unwrap();
    let sig_fine = res_fine
        .iter()
        .filter(|r| crystal.role_of(r.index) == LayerRole::HcpLike)
        .all(|r| r.unique_angles == 6);
    out.push(CheckResult::new(
        "5",
        "hcp-like planes show the hcp class count",
        sig_default && sig_fine,
        format!(
            "classes = {ref_default} at default threshold (ideal hcp reference {ref_default}), 6 at threshold {fine}"
        ),
    ));

    let inserted_fcc = inserted.iter().all(|r| r.k == 12 && r.unique_angles == 4);
    out.push(CheckResult::new(
        "5",
        "inserted plane keeps a 12-neighbor 4-class environment",
        inserted_fcc,
        format!(
            "inserted mean E = {:.4}",
            mean(&inserted.iter().map(|r| r.e).collect::<Vec<_>>())
        ),
    ));
    out
}

/// Hull-margin filter for open systems: keep particles at least
/// `margin * r_median` inside the bounding box.
pub fn interior_indices(system: &ParticleSystem, margin: f64) -> Vec<usize> {
    if system.periodic_box().is_some() || margin <= 0.0 {
        return (0..system.len()).collect();
    }
    let rp = median_nearest_distance(system);
    let (lo, hi) = system.bounds();
    let d = margin * rp;
    let ndim = system.dim().as_usize();
    (0..system.len())
        .filter(|&i| {
            let p = system.positions()[i];
            (0..ndim).all(|a| p[a] >= lo[a] + d && p[a] <= hi[a] - d)
        })
        .collect()
}

/// Subsystem restricted to the given indices (used to drop hull particles
/// before statistics).
fn subsystem(system: &ParticleSystem, indices: &[usize]) -> ParticleSystem {
    let pts: Vec<[f64; 3]> = indices.iter().map(|&i| system.positions()[i]).collect();
    ParticleSystem::new(system.dim(), pts, None).unwrap()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PackingStats {
    pub rho_e_k: Vec<f64>,
    pub rho_e_localmean: Vec<f64>,
    pub best_radius: Vec<f64>,
}

fn median_of(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Criterion 6: random packing statistics at desk scale.
pub fn table3_block(scale: &ValidationScale, seed: SeedPolicy) -> Vec<CheckResult> {
    let start = Instant::now();
    let mut out = Vec::new();
    let grid = default_radius_grid();
    for dim2 in [true, false] {
        let mut stats = PackingStats {
            rho_e_k: Vec::new(),
            rho_e_localmean: Vec::new(),
            best_radius: Vec::new(),
        };
        let mut sizes = Vec::new();
        for rep in 0..scale.table3_replicas {
            let label = 600 + (dim2 as u64) * 100 + rep as u64;
            let extent = if dim2 {
                [90.0, 90.0, 0.0]
            } else {
                [20.5, 20.5, 20.5]
            };
            let packing = generate_poisson_disk(&PackingSpec::new(
                dim2,
                1.0,
                extent,
                seed.derive(label),
            ))
            .unwrap();
            let map =
                robust_voronoi_neighborhood(&packing, &config_with(seed.derive(label + 50)))
                    .unwrap();
            let res = analyze(&packing, &map, scale.rmse_threshold).unwrap();
            // drop the hull before computing statistics
            let keep = interior_indices(&packing, 2.0);
            let sub = subsystem(&packing, &keep);
            let sub_res: Vec<ExtracopResult> = keep
                .iter()
                .enumerate()
                .map(|(new_idx, &old)| {
                    let mut r = res[old];
                    r.index = new_idx;
                    r
                })
                .collect();
            sizes.push(sub.len());
            let report = autocorrelation_report(&sub, &sub_res, &grid).unwrap();
            stats.rho_e_k.push(report.rho_e_k);
            stats.rho_e_localmean.push(report.rho_e_localmean);
            stats.best_radius.push(report.best_radius);
        }
        let label = if dim2 { "2D" } else { "3D" };
        let (rho_k_target, rho_k_tol) = if dim2 { (0.71, 0.10) } else { (0.92, 0.05) };
        let (rho_l_target, rho_l_tol) = if dim2 { (0.52, 0.10) } else { (0.53, 0.10) };
        let (r_target, r_tol) = if dim2 { (1.65, 0.35) } else { (1.50, 0.35) };
        let med_k = median_of(&stats.rho_e_k);
        let med_l = median_of(&stats.rho_e_localmean);
        let med_r = median_of(&stats.best_radius);
        out.push(CheckResult::new(
            "6",
            format!("{label} packing rho(E,k)"),
            (med_k - rho_k_target).abs() <= rho_k_tol,
            format!("median {med_k:.3} vs {rho_k_target} +/- {rho_k_tol} (n >= {:?})", sizes),
        ));
        out.push(CheckResult::new(
            "6",
            format!("{label} packing rho(E,<E>_R)"),
            (med_l - rho_l_target).abs() <= rho_l_tol,
            format!("median {med_l:.3} vs {rho_l_target} +/- {rho_l_tol}"),
        ));
        out.push(CheckResult::new(
            "6",
            format!("{label} packing best radius"),
            (med_r - r_target).abs() <= r_tol,
            format!("median {med_r:.2} vs {r_target} +/- {r_tol}"),
        ));
    }
    let dt = start.elapsed().as_secs_f64();
    out.push(CheckResult::new(
        "6",
        "runtime under 10 min",
        dt < 600.0,
        format!("{dt:.1} s"),
    ));
    out
}

/// Modal (k, class count) pair per particle over thermal replicas.
fn modal_classes(
    system: &ParticleSystem,
    spec_base: ThermalSpec,
    replicas: u32,
    rmse_threshold: f64,
    seed: SeedPolicy,
    label: u64,
) -> Vec<(usize, usize)> {
    let per_replica: Vec<Vec<(usize, usize)>> = (0..replicas)
        .map(|rep| {
            let spec = spec_base.with_replica(rep as u64 + 1);
            let displaced = apply_thermal_displacements(system, &spec).unwrap();
            let map = robust_voronoi_neighborhood(
                &displaced,
                &config_with(seed.derive(label + rep as u64)),
            )
            .unwrap();
            let res = analyze(&displaced, &map, rmse_threshold).unwrap();
            res.iter().map(|r| (r.k, r.unique_angles)).collect()
        })
        .collect();
    (0..system.len())
        .map(|i| {
            let mut counts: std::collections::HashMap<(usize, usize), usize> =
                std::collections::HashMap::new();
            for rep in &per_replica {
                *counts.entry(rep[i]).or_insert(0) += 1;
            }
            counts
                .into_iter()
                .max_by_key(|&(class, c)| (c, class.0, class.1))
                .map(|(class, _)| class)
                .unwrap()
        })
        .collect()
}

/// Criterion 7: thermal robustness of fcc and hcp classes.
pub fn thermal_block(scale: &ValidationScale, seed: SeedPolicy) -> Vec<CheckResult> {
    let mut out = Vec::new();
    let fcc = generate_lattice(&LatticeSpec::new(LatticeKind::Fcc, [8, 8, 8])).unwrap();
    let hcp = generate_lattice(&LatticeSpec::new(LatticeKind::Hcp, [8, 5, 6])).unwrap();

    // ground-state classes from the unperturbed crystals
    let ground = |system: &ParticleSystem, label: u64| -> (usize, usize) {
        let map = robust_voronoi_neighborhood(system, &config_with(seed.derive(label))).unwrap();
        let res = analyze(system, &map, scale.rmse_threshold).unwrap();
        (res[0].k, res[0].unique_angles)
    };
    let g_fcc = ground(&fcc, 700);
    let g_hcp = ground(&hcp, 701);

    let melting = rms_fraction_at(1085.0);
    for (name, system, g, label) in [("fcc", &fcc, g_fcc, 710u64), ("hcp", &hcp, g_hcp, 730u64)] {
        let spec = ThermalSpec::with_rms_fraction(
            ThermalMode::Correlated,
            melting,
            seed.derive(label),
        );
        let modal = modal_classes(
            system,
            spec,
            scale.thermal_replicas,
            scale.rmse_threshold,
            seed,
            label + 1,
        );
        let hits = modal.iter().filter(|&&c| c == g).count();
        let frac = hits as f64 / modal.len() as f64;
        out.push(CheckResult::new(
            "7",
            format!("{name} modal class survives melting-point heat"),
            frac >= 0.90,
            format!(
                "{:.1}% of particles keep ground-state class {:?} at rms fraction {melting:.4}",
                100.0 * frac,
                g
            ),
        ));
    }

    // uncorrelated noise at half the melting temperature
    let half = rms_fraction_at(542.5);
    let collect_e = |system: &ParticleSystem, label: u64| -> Vec<f64> {
        let mut all = Vec::new();
        for rep in 0..2u64 {
            let spec = ThermalSpec::with_rms_fraction(
                ThermalMode::Uncorrelated,
                half,
                seed.derive(label),
            )
            .with_replica(rep + 1);
            let displaced = apply_thermal_displacements(system, &spec).unwrap();
            let map = robust_voronoi_neighborhood(
                &displaced,
                &config_with(seed.derive(label + 10 + rep)),
            )
            .unwrap();
            let res = analyze(&displaced, &map, scale.rmse_threshold).unwrap();
            all.extend(res.iter().map(|r| r.e));
        }
        all
    };
    let e_fcc = collect_e(&fcc, 750);
    let e_hcp = collect_e(&hcp, 770);
    let sep = separability(&e_fcc, &e_hcp).unwrap();
    out.push(CheckResult::new(
        "7",
        "fcc and hcp separable under uncorrelated noise",
        sep > 1.0,
        format!(
            "separability = {sep:.2} at rms fraction {half:.4} (means {:.3} vs {:.3})",
            mean(&e_fcc),
            mean(&e_hcp)
        ),
    ));
    out
}

/// Serialize per-particle results the way the CLI does, for byte comparisons.
pub fn results_to_csv(results: &[ExtracopResult]) -> String {
    let mut s = String::from("index,k,unique_angles,E,delta\n");
    for r in results {
        s.push_str(&format!(
            "{},{},{},{},{}\n",
            r.index, r.k, r.unique_angles, r.e, r.delta
        ));
    }
    s
}

/// Criterion 8: determinism and invariance.
pub fn determinism_block(seed: SeedPolicy) -> Vec<CheckResult> {
    let mut out = Vec::new();
    let packing = generate_poisson_disk(&PackingSpec::new(
        false,
        1.0,
        [11.0, 11.0, 11.0],
        seed.derive(800),
    ))
    .unwrap();

    let pipeline = |system: &ParticleSystem| -> (NeighborMap, Vec<ExtracopResult>) {
        let map = robust_voronoi_neighborhood(system, &config_with(seed.derive(801))).unwrap();
        let res = analyze(system, &map, DEFAULT_RMSE_THRESHOLD).unwrap();
        (map, res)
    };

    // byte-identical reruns, and across thread counts
    let (_, res_a) = pipeline(&packing);
    let (_, res_b) = pipeline(&packing);
    let csv_a = results_to_csv(&res_a);
    let csv_b = results_to_csv(&res_b);
    let pool1 = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let csv_c = pool1.install(|| results_to_csv(&pipeline(&packing).1));
    out.push(CheckResult::new(
        "8",
        "equal seeds give byte-identical outputs",
        csv_a == csv_b && csv_a == csv_c,
        format!("{} result rows compared across reruns and thread counts", res_a.len()),
    ));

    // global rescaling: identical memberships and coefficients
    let (map0, res0) = pipeline(&packing);
    let mut scale_ok = true;
    for c in [0.25f64, 3.7] {
        let scaled: Vec<[f64; 3]> = packing
            .positions()
            .iter()
            .map(|p| [p[0] * c, p[1] * c, p[2] * c])
            .collect();
        let sys_c = ParticleSystem::new(packing.dim(), scaled, None).unwrap();
        let (map_c, res_c) = pipeline(&sys_c);
        for i in 0..packing.len() {
            if map0.neighbors(i) != map_c.neighbors(i) {
                scale_ok = false;
            }
        }
        let max_de = res0
            .iter()
            .zip(&res_c)
            .map(|(a, b)| (a.e - b.e).abs())
            .fold(0.0, f64::max);
        if max_de > 1e-9 {
            scale_ok = false;
        }
    }
    out.push(CheckResult::new(
        "8",
        "global rescaling changes nothing",
        scale_ok,
        "scales 0.25 and 3.7".into(),
    ));

    // rigid motions: same neighborhoods, coefficients move by < 1e-9 bits
    let mut state = seed.derive(808).master() | 1;
    let mut rnd = move || {
        state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    let mut max_diff = 0.0f64;
    for t in 0..10 {
        // random rotation from a normalized quaternion, with a reflection on
        // odd rounds, plus a random translation
        let q = {
            let mut q = [0.0f64; 4];
            let n2 = loop {
                for x in q.iter_mut() {
                    *x = rnd() - 0.5;
                }
                let n2 = q.iter().map(|x| x * x).sum::<f64>();
                if n2 > 1e-3 {
                    break n2;
                }
            };
            let inv = 1.0 / n2.sqrt();
            q.map(|x| x * inv)
        };
        let (w, x, y, z) = (q[0], q[1], q[2], q[3]);
        let mut rot = [
            [
                1.0 - 2.0 * (y * y + z * z),
                2.0 * (x * y - w * z),
                2.0 * (x * z + w * y),
            ],
            [
                2.0 * (x * y + w * z),
                1.0 - 2.0 * (x * x + z * z),
                2.0 * (y * z - w * x),
            ],
            [
                2.0 * (x * z - w * y),
                2.0 * (y * z + w * x),
                1.0 - 2.0 * (x * x + y * y),
            ],
        ];
        if t % 2 == 1 {
            for row in rot.iter_mut() {
                row[2] = -row[2];
            }
        }
        let shift = [rnd() * 20.0 - 10.0, rnd() * 20.0 - 10.0, rnd() * 20.0 - 10.0];
        let moved: Vec<[f64; 3]> = packing
            .positions()
            .iter()
            .map(|p| {
                [
                    rot[0][0] * p[0] + rot[0][1] * p[1] + rot[0][2] * p[2] + shift[0],
                    rot[1][0] * p[0] + rot[1][1] * p[1] + rot[1][2] * p[2] + shift[1],
                    rot[2][0] * p[0] + rot[2][1] * p[1] + rot[2][2] * p[2] + shift[2],
                ]
            })
            .collect();
        let sys_t = ParticleSystem::new(packing.dim(), moved, None).unwrap();
        // the neighborhood topology is carried over; the angle pipeline is
        // what rigid motions must leave alone
        let res_t = analyze(&sys_t, &map0, DEFAULT_RMSE_THRESHOLD).unwrap();
        for (a, b) in res0.iter().zip(&res_t) {
            max_diff = max_diff.max((a.e - b.e).abs());
        }
    }
    out.push(CheckResult::new(
        "8",
        "rigid motions move no coefficient by more than 1e-9 bits",
        max_diff <= 1e-9,
        format!("max |dE| = {max_diff:.2e} over 10 transforms"),
    ));
    out
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThroughputReport {
    pub particles: usize,
    pub seconds: f64,
    pub particles_per_second: f64,
    pub samples_used: u32,
}

/// Run the full pipeline on an fcc crystal of roughly `target` particles.
pub fn throughput_run(target: usize, seed: SeedPolicy) -> Result<ThroughputReport> {
    let per_cell = 4.0;
    let extent = ((target as f64 / per_cell).cbrt().round() as u32).max(3);
    let system = generate_lattice(&LatticeSpec::new(LatticeKind::Fcc, [extent, extent, extent]))?;
    let start = Instant::now();
    let map = robust_voronoi_neighborhood(&system, &config_with(seed))?;
    let res = analyze(&system, &map, DEFAULT_RMSE_THRESHOLD)?;
    let seconds = start.elapsed().as_secs_f64();
    // keep the optimizer honest
    let checksum: f64 = res.iter().map(|r| r.e).sum();
    if !checksum.is_finite() {
        return Err(crate::Error::Numerical("non-finite coefficient sum".into()));
    }
    Ok(ThroughputReport {
        particles: system.len(),
        seconds,
        particles_per_second: system.len() as f64 / seconds,
        samples_used: map.samples_used(),
    })
}

/// Criterion 9: hard 60 s budget at 1e5 particles; the 1e6 run is soft and
/// only logged.
pub fn throughput_block(seed: SeedPolicy, include_million: bool) -> Vec<CheckResult> {
    let mut out = Vec::new();
    match throughput_run(100_000, seed.derive(900)) {
        Ok(r) => out.push(CheckResult::new(
            "9",
            "1e5-particle pipeline under 60 s",
            r.seconds < 60.0,
            format!(
                "{} particles in {:.1} s ({:.0}/s, {} samples)",
                r.particles, r.seconds, r.particles_per_second, r.samples_used
            ),
        )),
        Err(e) => out.push(CheckResult::new(
            "9",
            "1e5-particle pipeline under 60 s",
            false,
            format!("{e}"),
        )),
    }
    if include_million {
        match throughput_run(1_000_000, seed.derive(901)) {
            Ok(r) => {
                let note = if r.seconds <= 120.0 {
                    "within the ~2 min reference"
                } else if r.seconds <= 600.0 {
                    "within 10 min (2 min reference missed, logged)"
                } else {
                    "over 10 min (soft criterion, logged)"
                };
                out.push(CheckResult::new(
                    "9",
                    "1e6-particle pipeline (soft)",
                    true,
                    format!(
                        "{} particles in {:.1} s ({:.0}/s); {note}",
                        r.particles, r.seconds, r.particles_per_second
                    ),
                ));
            }
            Err(e) => out.push(CheckResult::new(
                "9",
                "1e6-particle pipeline (soft)",
                true,
                format!("skipped: {e}"),
            )),
        }
    }
    out
}

/// Everything, in criterion order.
pub fn run_all(scale: &ValidationScale, seed: SeedPolicy, include_million: bool) -> Vec<CheckResult> {
    let mut out = Vec::new();
    out.extend(table1_block());
    out.extend(table2_block(scale, seed));
    out.extend(lattice_e_block(scale, seed));
    out.extend(polygon_block(scale, seed));
    out.extend(fault_block(scale, seed));
    out.extend(table3_block(scale, seed));
    out.extend(thermal_block(scale, seed));
    out.extend(determinism_block(seed));
    out.extend(throughput_block(seed, include_million));
    out
}

/// Render one pass/fail line per check.
pub fn render(results: &[CheckResult]) -> String {
    let mut s = String::new();
    for r in results {
        s.push_str(&format!(
            "[{}] criterion {:>2}  {}: {}\n",
            if r.passed { "PASS" } else { "FAIL" },
            r.criterion,
            r.name,
            r.detail
        ));
    }
    let passed = results.iter().filter(|r| r.passed).count();
    s.push_str(&format!("{passed}/{} checks passed\n", results.len()));
    s
}
