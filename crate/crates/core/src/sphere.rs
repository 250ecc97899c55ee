//! Directions on the unit sphere and projections onto balls.
//!
//! Haar-uniform directions are normalized i.i.d. standard normal vectors.
//! Von Mises–Fisher sampling uses the tangent-normal decomposition: the
//! cosine against the mean direction is drawn by rejection from a
//! beta-envelope, the tangent part uniformly on the equatorial sphere, and a
//! Householder reflection carries the north pole onto the requested mean.

use crate::error::{Error, Result};
use crate::rng::{self, tag};
use rand::Rng;
use rand_distr::{Beta, Distribution, StandardNormal};

pub(crate) fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// A unit vector in R^d, d >= 2.
#[derive(Debug, Clone, PartialEq)]
pub struct Direction {
    coords: Vec<f64>,
}

impl Direction {
    /// Validates the unit-norm invariant (within 1e-12) and d >= 2.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::invalid("directions need dimension >= 2"));
        }
        if coords.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("direction has non-finite coordinate"));
        }
        let n = norm2(&coords);
        if (n - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!("direction norm {n} is not 1")));
        }
        Ok(Direction { coords })
    }

    /// Normalizes an arbitrary nonzero vector.
    pub fn from_vector(mut coords: Vec<f64>) -> Result<Self> {
        let n = norm2(&coords);
        if !n.is_finite() || n == 0.0 {
            return Err(Error::invalid("cannot normalize a zero or non-finite vector"));
        }
        for x in &mut coords {
            *x /= n;
        }
        Self::new(coords)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }
}

/// A fixed batch of directions sharing one dimension, tagged with the seed
/// that produced it. Regenerating with the same (d, m, seed) is bit-identical.
#[derive(Debug, Clone)]
pub struct DirectionSet {
    directions: Vec<Direction>,
    dim: usize,
    seed: u64,
}

impl DirectionSet {
    /// Wraps explicit directions (used by tests and callers with handcrafted
    /// slices); all must share one dimension.
    pub fn from_directions(directions: Vec<Direction>, seed: u64) -> Result<Self> {
        let dim = match directions.first() {
            Some(d) => d.dim(),
            None => return Err(Error::invalid("direction set must be non-empty")),
        };
        if directions.iter().any(|d| d.dim() != dim) {
            return Err(Error::invalid("directions have mixed dimensions"));
        }
        Ok(DirectionSet { directions, dim, seed })
    }

    pub fn directions(&self) -> &[Direction] {
        &self.directions
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

fn unit_normal_vector<R: Rng>(d: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let n = norm2(&v);
        // zero draws have probability zero but would poison the division
        if n > 1e-300 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

/// Draws m directions uniformly (Haar measure) on S^{d-1}.
pub fn sample_haar_directions(d: usize, m: usize, seed: u64) -> Result<DirectionSet> {
    if d < 2 {
        return Err(Error::invalid(format!("dimension must be >= 2, got {d}")));
    }
    if m < 1 {
        return Err(Error::invalid("direction count must be >= 1"));
    }
    let mut rng = rng::stream(seed, tag::DIRECTIONS);
    let directions = (0..m)
        .map(|_| Direction {
            coords: unit_normal_vector(d, &mut rng),
        })
        .collect();
    Ok(DirectionSet { directions, dim: d, seed })
}

/// Draws n points from the von Mises–Fisher distribution on S^{d-1} with the
/// given mean direction and concentration kappa >= 0; kappa = 0 is uniform.
pub fn sample_vmf(
    d: usize,
    n: usize,
    kappa: f64,
    mean_dir: &Direction,
    seed: u64,
) -> Result<Vec<Direction>> {
    if d < 2 {
        return Err(Error::invalid(format!("dimension must be >= 2, got {d}")));
    }
    if mean_dir.dim() != d {
        return Err(Error::invalid(format!(
            "mean direction dimension {} does not match d = {d}",
            mean_dir.dim()
        )));
    }
    if !(kappa >= 0.0) {
        return Err(Error::invalid("concentration must be >= 0"));
    }
    let mut rng = rng::stream(seed, tag::VMF);

    // Envelope parameters of the Ulrich/Wood rejection sampler for the
    // cosine w = <x, mean>.
    let dm1 = (d - 1) as f64;
    let b = (-2.0 * kappa + (4.0 * kappa * kappa + dm1 * dm1).sqrt()) / dm1;
    let x0 = (1.0 - b) / (1.0 + b);
    let c = kappa * x0 + dm1 * (1.0 - x0 * x0).ln();
    let beta = Beta::new(dm1 / 2.0, dm1 / 2.0)
        .map_err(|e| Error::invalid(format!("beta envelope: {e}")))?;

    // Householder reflection mapping e1 to the mean direction (and back).
    let mut u: Vec<f64> = mean_dir.coords().to_vec();
    u[0] -= 1.0;
    let un = norm2(&u);
    let reflect = un > 1e-12;
    if reflect {
        for x in &mut u {
            *x /= un;
        }
    }

    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let w = loop {
            let z: f64 = beta.sample(&mut rng);
            let w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z);
            let t: f64 = rng.gen::<f64>();
            if kappa * w + dm1 * (1.0 - x0 * w).ln() - c >= t.ln() {
                break w;
            }
        };
        let tangent = unit_normal_vector(d - 1, &mut rng);
        let scale = (1.0 - w * w).max(0.0).sqrt();
        let mut p = Vec::with_capacity(d);
        p.push(w);
        p.extend(tangent.iter().map(|t| scale * t));
        if reflect {
            let proj = 2.0 * dot(&p, &u);
            for (pi, ui) in p.iter_mut().zip(&u) {
                *pi -= proj * ui;
            }
        }
        // renormalize: the construction is unit-norm up to rounding
        let n2 = norm2(&p);
        for x in &mut p {
            *x /= n2;
        }
        out.push(Direction { coords: p });
    }
    Ok(out)
}

/// Euclidean projection onto the closed ball of radius `r` centered at the
/// origin: the identity inside the ball, radial rescaling outside.
pub fn project_ball(point: &[f64], r: f64) -> Vec<f64> {
    assert!(r > 0.0, "ball radius must be positive");
    let n = norm2(point);
    if n <= r {
        point.to_vec()
    } else {
        point.iter().map(|x| x * r / n).collect()
    }
}

/// Projection onto the k-fold product of balls: blockwise [`project_ball`]
/// on consecutive d-blocks (the product projection decomposes by block).
pub fn project_product_ball(stacked: &[f64], k: usize, d: usize, r: f64) -> Result<Vec<f64>> {
    if stacked.len() != k * d {
        return Err(Error::invalid(format!(
            "stacked length {} does not equal k*d = {}",
            stacked.len(),
            k * d
        )));
    }
    let mut out = Vec::with_capacity(stacked.len());
    for block in stacked.chunks_exact(d) {
        out.extend(project_ball(block, r));
    }
    Ok(out)
}
