//! Synthetic data generators with ground-truth metadata.
//!
//! Three generators, each seeded and fully deterministic:
//!
//! * `clusters` — tight quaternion clusters: rejection-sampled centers at
//!   least `separation_deg` apart, tangent-space Gaussian spread around each.
//! * `arcs` — samples along slerp paths between random endpoint pairs a fixed
//!   arc apart: anisotropic, one-dimensional structure on the sphere.
//! * `planted-euclidean` — sparse convex combinations of a hidden unit-norm
//!   dictionary plus additive Gaussian noise.
//!
//! Every generator returns the planted structure alongside the samples so
//! downstream oracles can score recovery.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use kinedict_core::quat::{geodesic_distance, slerp, AxisAngle, UnitQuaternion};

use crate::error::{CliError, CliResult};
use crate::formats::SynthTruth;

const DEG: f64 = std::f64::consts::PI / 180.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Generator {
    Clusters,
    Arcs,
    PlantedEuclidean,
}

impl Generator {
    pub fn name(self) -> &'static str {
        match self {
            Generator::Clusters => "clusters",
            Generator::Arcs => "arcs",
            Generator::PlantedEuclidean => "planted-euclidean",
        }
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Generator {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "clusters" => Ok(Generator::Clusters),
            "arcs" => Ok(Generator::Arcs),
            "planted-euclidean" => Ok(Generator::PlantedEuclidean),
            other => Err(format!(
                "unknown generator \"{other}\" (expected clusters, arcs, or planted-euclidean)"
            )),
        }
    }
}

/// All generator knobs in one bag; each generator reads its own subset.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthParams {
    pub count: usize,
    pub seed: u64,
    pub joint_label: String,
    // clusters
    pub k: usize,
    pub spread_deg: f64,
    pub separation_deg: f64,
    // arcs
    pub pairs: usize,
    pub arc_deg: f64,
    // planted-euclidean
    pub dim: usize,
    pub atoms: usize,
    pub support: usize,
    pub noise: f64,
    pub pure_frac: f64,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            count: 400,
            seed: 0,
            joint_label: "joint0".into(),
            k: 8,
            spread_deg: 2.0,
            separation_deg: 30.0,
            pairs: 4,
            arc_deg: 20.0,
            dim: 10,
            atoms: 12,
            support: 3,
            noise: 0.01,
            pure_frac: 0.5,
        }
    }
}

/// Samples plus the planted structure that produced them.
#[derive(Debug, Clone, PartialEq)]
pub enum SynthOutput {
    Poses {
        samples: Vec<UnitQuaternion>,
        truth: SynthTruth,
    },
    Vectors {
        samples: Vec<Vec<f64>>,
        truth: SynthTruth,
    },
}

fn gauss<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

fn random_unit_vector<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| gauss(rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-6 {
            return v.iter().map(|x| x / norm).collect();
        }
    }
}

/// One tangent-space Gaussian draw around `center` with `spread_deg` std-dev.
fn jitter<R: Rng + ?Sized>(
    rng: &mut R,
    center: &UnitQuaternion,
    spread_deg: f64,
) -> UnitQuaternion {
    let sigma = spread_deg * DEG;
    let v = [sigma * gauss(rng), sigma * gauss(rng), sigma * gauss(rng)];
    let delta = UnitQuaternion::from_rotation_vector(v)
        .expect("finite rotation vector always converts");
    center.compose(&delta)
}

/// Rejection-sample `k` centers pairwise at least `separation_deg` apart.
fn separated_centers<R: Rng + ?Sized>(
    rng: &mut R,
    k: usize,
    separation_deg: f64,
) -> CliResult<Vec<UnitQuaternion>> {
    let mut centers: Vec<UnitQuaternion> = Vec::with_capacity(k);
    let mut attempts = 0usize;
    while centers.len() < k {
        attempts += 1;
        if attempts > 200_000 {
            return Err(CliError::Numeric(format!(
                "could not place {k} cluster centers {separation_deg} degrees apart \
                 (sphere too crowded); lower --k or --separation-deg"
            )));
        }
        let cand = UnitQuaternion::random(rng);
        if centers
            .iter()
            .all(|c| geodesic_distance(c, &cand) >= separation_deg * DEG)
        {
            centers.push(cand);
        }
    }
    Ok(centers)
}

fn validate_common(p: &SynthParams) -> CliResult<()> {
    if p.count == 0 {
        return Err(CliError::Usage("--count must be at least 1".into()));
    }
    Ok(())
}

pub fn generate(generator: Generator, p: &SynthParams) -> CliResult<SynthOutput> {
    validate_common(p)?;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    match generator {
        Generator::Clusters => {
            if p.k == 0 {
                return Err(CliError::Usage("--k must be at least 1".into()));
            }
            if !(p.spread_deg >= 0.0) || !(p.separation_deg >= 0.0) {
                return Err(CliError::Usage(
                    "--spread-deg and --separation-deg must be non-negative".into(),
                ));
            }
            let centers = separated_centers(&mut rng, p.k, p.separation_deg)?;
            let samples: Vec<UnitQuaternion> = (0..p.count)
                .map(|i| jitter(&mut rng, &centers[i % p.k], p.spread_deg))
                .collect();
            Ok(SynthOutput::Poses {
                samples,
                truth: SynthTruth::Clusters {
                    joint_label: p.joint_label.clone(),
                    count: p.count,
                    spread_deg: p.spread_deg,
                    separation_deg: p.separation_deg,
                    centers: centers.iter().map(|c| c.components()).collect(),
                },
            })
        }
        Generator::Arcs => {
            if p.pairs == 0 {
                return Err(CliError::Usage("--pairs must be at least 1".into()));
            }
            if !(p.arc_deg > 0.0 && p.arc_deg < 180.0) {
                return Err(CliError::Usage(
                    "--arc-deg must be strictly between 0 and 180".into(),
                ));
            }
            let mut endpoints = Vec::with_capacity(p.pairs);
            for _ in 0..p.pairs {
                let q1 = UnitQuaternion::random(&mut rng);
                let axis = random_unit_vector(&mut rng, 3);
                let step = UnitQuaternion::from_axis_angle(
                    &AxisAngle::new([axis[0], axis[1], axis[2]], p.arc_deg * DEG)
                        .expect("unit axis and in-range angle"),
                );
                let q2 = q1.compose(&step);
                endpoints.push((q1, q2));
            }
            let samples: Vec<UnitQuaternion> = (0..p.count)
                .map(|i| {
                    let (q1, q2) = &endpoints[i % p.pairs];
                    let x1: f64 = rng.random_range(0.0..=1.0);
                    slerp(x1, q1, q2).expect("x1 in range, endpoints aligned")
                })
                .collect();
            Ok(SynthOutput::Poses {
                samples,
                truth: SynthTruth::Arcs {
                    joint_label: p.joint_label.clone(),
                    count: p.count,
                    arc_deg: p.arc_deg,
                    endpoints: endpoints
                        .iter()
                        .map(|(a, b)| [a.components(), b.components()])
                        .collect(),
                },
            })
        }
        Generator::PlantedEuclidean => {
            if p.dim == 0 || p.atoms == 0 {
                return Err(CliError::Usage("--dim and --atoms must be at least 1".into()));
            }
            if p.support == 0 || p.support > p.atoms {
                return Err(CliError::Usage(
                    "--support must be between 1 and --atoms".into(),
                ));
            }
            if !(p.noise >= 0.0) {
                return Err(CliError::Usage("--noise must be non-negative".into()));
            }
            if !(0.0..=1.0).contains(&p.pure_frac) {
                return Err(CliError::Usage("--pure-frac must be in [0, 1]".into()));
            }
            // Planted unit atoms with pairwise |cosine| bounded away from 1,
            // so recovery is well-posed.
            let mut atoms: Vec<Vec<f64>> = Vec::with_capacity(p.atoms);
            let mut attempts = 0usize;
            while atoms.len() < p.atoms {
                attempts += 1;
                if attempts > 200_000 {
                    return Err(CliError::Numeric(format!(
                        "could not place {} atoms with pairwise |cosine| < 0.75 in dimension {}",
                        p.atoms, p.dim
                    )));
                }
                let cand = random_unit_vector(&mut rng, p.dim);
                let max_cos = atoms
                    .iter()
                    .map(|a| a.iter().zip(&cand).map(|(x, y)| x * y).sum::<f64>().abs())
                    .fold(0.0, f64::max);
                if max_cos < 0.75 {
                    atoms.push(cand);
                }
            }
            let samples: Vec<Vec<f64>> = (0..p.count)
                .map(|_| {
                    let pure = p.support == 1 || rng.random::<f64>() < p.pure_frac;
                    let mut x = if pure {
                        let a = rng.random_range(0..p.atoms);
                        atoms[a].clone()
                    } else {
                        let k = rng.random_range(2..=p.support);
                        let mut idx: Vec<usize> = (0..p.atoms).collect();
                        // Partial Fisher-Yates: the first k entries become a
                        // uniform random k-subset.
                        for i in 0..k {
                            let j = rng.random_range(i..p.atoms);
                            idx.swap(i, j);
                        }
                        let raw: Vec<f64> =
                            (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
                        let total: f64 = raw.iter().sum();
                        let mut x = vec![0.0; p.dim];
                        for (w, &a) in raw.iter().zip(&idx[..k]) {
                            for (xi, ai) in x.iter_mut().zip(&atoms[a]) {
                                *xi += (w / total) * ai;
                            }
                        }
                        x
                    };
                    if p.noise > 0.0 {
                        for xi in &mut x {
                            *xi += p.noise * gauss(&mut rng);
                        }
                    }
                    x
                })
                .collect();
            Ok(SynthOutput::Vectors {
                samples,
                truth: SynthTruth::PlantedEuclidean {
                    dim: p.dim,
                    count: p.count,
                    support: p.support,
                    noise: p.noise,
                    pure_frac: p.pure_frac,
                    atoms,
                },
            })
        }
    }
}
