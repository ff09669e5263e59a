//! Seeded point sampling inside constraint sets, used by the sampled
//! strong-convexity estimator and the empirical inequality checkers.

use rand::Rng;

use crate::geometry::SetDescriptor;
use crate::linalg::lp_norm;
use crate::{Error, Result};

const MAX_REJECTIONS: usize = 1_000_000;

/// Draw a point from `set`. The distribution is unspecified but has full
/// support on the set's interior; coordinates are almost surely interior
/// (strictly positive where the set lives in the orthant).
pub fn sample_in<R: Rng>(set: &SetDescriptor, dim: usize, rng: &mut R) -> Result<Vec<f64>> {
    match set {
        SetDescriptor::WholeSpace => Ok((0..dim)
            .map(|_| {
                let u: f64 = rng.gen_range(-1.0..1.0);
                // Heavier tails than uniform so unbounded-domain checks see
                // a spread of magnitudes.
                u * 4.0
            })
            .collect()),
        SetDescriptor::Box { radius } => {
            Ok((0..dim).map(|_| rng.gen_range(-radius..*radius)).collect())
        }
        SetDescriptor::Ball {
            radius,
            norm_exponent,
        } => reject_from_box(*radius, dim, rng, |x| {
            lp_norm(x, *norm_exponent) <= *radius
        }),
        SetDescriptor::Simplex => {
            // Dirichlet(1): normalized exponentials, a.s. strictly positive.
            let mut e: Vec<f64> = (0..dim)
                .map(|_| -rng.gen_range(f64::MIN_POSITIVE..1.0f64).ln())
                .collect();
            let s: f64 = e.iter().sum();
            e.iter_mut().for_each(|v| *v /= s);
            Ok(e)
        }
        SetDescriptor::Prism => {
            if dim != 3 {
                return Err(Error::InvalidParameter("prism is 3-dimensional".into()));
            }
            // simplex point shifted along the prism axis (1,1,1)
            let base = sample_in(&SetDescriptor::Simplex, 3, rng)?;
            let t: f64 = rng.gen_range(0.0..2.0);
            Ok(base.iter().map(|v| v + t).collect())
        }
        SetDescriptor::Intersection(_) => {
            let norm = set.normalized();
            if let SetDescriptor::Intersection(parts) = &norm {
                // Rejection-sample from the most constrained bounded part.
                let seed_part = parts
                    .iter()
                    .filter(|p| p.is_bounded())
                    .min_by(|a, b| {
                        let ra = a.box_radius().unwrap_or(f64::INFINITY);
                        let rb = b.box_radius().unwrap_or(f64::INFINITY);
                        ra.partial_cmp(&rb).unwrap()
                    })
                    .ok_or_else(|| {
                        Error::InvalidParameter(format!("cannot sample unbounded {norm:?}"))
                    })?;
                for _ in 0..MAX_REJECTIONS {
                    let x = sample_in(seed_part, dim, rng)?;
                    if norm.contains(&x, 0.0) {
                        return Ok(x);
                    }
                }
                Err(Error::NotFound(format!(
                    "rejection sampling failed on {norm:?}"
                )))
            } else {
                sample_in(&norm, dim, rng)
            }
        }
    }
}

fn reject_from_box<R: Rng>(
    radius: f64,
    dim: usize,
    rng: &mut R,
    accept: impl Fn(&[f64]) -> bool,
) -> Result<Vec<f64>> {
    for _ in 0..MAX_REJECTIONS {
        let x: Vec<f64> = (0..dim).map(|_| rng.gen_range(-radius..radius)).collect();
        if accept(&x) {
            return Ok(x);
        }
    }
    Err(Error::NotFound("rejection sampling failed".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn samples_land_in_their_sets() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let sets = [
            SetDescriptor::Box { radius: 2.0 },
            SetDescriptor::Ball {
                radius: 1.5,
                norm_exponent: 2.0,
            },
            SetDescriptor::Simplex,
            SetDescriptor::Prism,
            SetDescriptor::Intersection(vec![
                SetDescriptor::Prism,
                SetDescriptor::Ball {
                    radius: 3.0,
                    norm_exponent: 2.0,
                },
            ]),
        ];
        for set in &sets {
            for _ in 0..300 {
                let x = sample_in(set, 3, &mut rng).unwrap();
                assert!(set.contains(&x, 1e-12), "{set:?} rejected {x:?}");
            }
        }
    }

    #[test]
    fn simplex_samples_are_strictly_positive() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..1000 {
            let x = sample_in(&SetDescriptor::Simplex, 3, &mut rng).unwrap();
            assert!(x.iter().all(|&v| v > 0.0));
        }
    }
}
