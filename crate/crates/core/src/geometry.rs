//! Bregman functions, their divergences, gradients and strong-convexity
//! parameters over constraint sets.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::linalg::{convex_combination, lp_dist, lp_norm};
use crate::sampling::sample_in;
use crate::{Error, Result};

/// The Bregman function underlying the divergence.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GeometryKind {
    /// `b(x) = ½‖x‖₂²` on all of ℝⁿ. The ambient norm exponent is a
    /// separate parameter; `b` itself is always half the squared Euclidean
    /// norm.
    HalfSquaredEuclidean,
    /// `b(x) = Σ xⱼ ln xⱼ` with `0·ln 0 = 0` on the nonnegative orthant;
    /// the zone `U` is the strictly positive orthant.
    NegativeEntropy,
}

/// A Bregman geometry: the function `b`, the ambient ℓr norm in which
/// strong convexity and Lipschitz constants are measured, and the space
/// dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct BregmanGeometry {
    kind: GeometryKind,
    norm_exponent: f64,
    dimension: usize,
}

/// How a strong convexity parameter was obtained.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MuProvenance {
    /// Backed by a closed-form argument.
    Analytic,
    /// Sampled-ratio estimate: valid only up to sampling, flagged in
    /// reports.
    Sampled { pairs: usize, safety: f64 },
}

/// A strong convexity parameter together with its provenance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StrongConvexity {
    pub mu: f64,
    pub provenance: MuProvenance,
}

impl BregmanGeometry {
    /// Half squared Euclidean norm with ambient ℓr norm, `r ≥ 2`.
    pub fn half_squared_euclidean(dimension: usize, norm_exponent: f64) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        if !(norm_exponent >= 2.0) {
            return Err(Error::InvalidParameter(format!(
                "norm exponent must be >= 2, got {norm_exponent}"
            )));
        }
        Ok(BregmanGeometry {
            kind: GeometryKind::HalfSquaredEuclidean,
            norm_exponent,
            dimension,
        })
    }

    /// Negative entropy with ambient ℓp norm, `p ∈ [1, ∞]`.
    pub fn negative_entropy(dimension: usize, norm_exponent: f64) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        if !(norm_exponent >= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "norm exponent must be >= 1, got {norm_exponent}"
            )));
        }
        Ok(BregmanGeometry {
            kind: GeometryKind::NegativeEntropy,
            norm_exponent,
            dimension,
        })
    }

    pub fn kind(&self) -> GeometryKind {
        self.kind
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Ambient norm exponent (r for the Euclidean case, p for entropy).
    pub fn norm_exponent(&self) -> f64 {
        self.norm_exponent
    }

    fn check_dimension(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dimension {
            return Err(Error::Domain(format!(
                "point has dimension {}, geometry has {}",
                x.len(),
                self.dimension
            )));
        }
        Ok(())
    }

    /// Membership in `dom(b)`.
    pub fn in_domain(&self, x: &[f64]) -> bool {
        x.len() == self.dimension
            && match self.kind {
                GeometryKind::HalfSquaredEuclidean => true,
                GeometryKind::NegativeEntropy => x.iter().all(|&v| v >= 0.0),
            }
    }

    /// Membership in the zone `U = int(dom(b))`.
    pub fn in_zone(&self, x: &[f64]) -> bool {
        x.len() == self.dimension
            && match self.kind {
                GeometryKind::HalfSquaredEuclidean => true,
                GeometryKind::NegativeEntropy => x.iter().all(|&v| v > 0.0),
            }
    }

    /// `b(x)`. Finite on all of `dom(b)` (boundary included for entropy,
    /// with the `0·ln 0 = 0` convention).
    pub fn value(&self, x: &[f64]) -> Result<f64> {
        self.check_dimension(x)?;
        if !self.in_domain(x) {
            return Err(Error::Domain("point outside dom(b)".into()));
        }
        Ok(match self.kind {
            GeometryKind::HalfSquaredEuclidean => 0.5 * x.iter().map(|v| v * v).sum::<f64>(),
            GeometryKind::NegativeEntropy => x
                .iter()
                .map(|&v| if v == 0.0 { 0.0 } else { v * v.ln() })
                .sum(),
        })
    }

    /// `b'(x)` for `x ∈ U`. For entropy this errors on the boundary rather
    /// than returning `-∞` components.
    pub fn bregman_gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dimension(x)?;
        if !self.in_zone(x) {
            return Err(Error::Domain(
                "Bregman gradient undefined outside the zone U".into(),
            ));
        }
        Ok(match self.kind {
            GeometryKind::HalfSquaredEuclidean => x.to_vec(),
            GeometryKind::NegativeEntropy => x.iter().map(|&v| 1.0 + v.ln()).collect(),
        })
    }

    /// The Bregman divergence `B(x, y) = b(x) - b(y) - <b'(y), x - y>` for
    /// `x ∈ dom(b)` and `y ∈ U`. Nonnegative, zero iff `x = y`.
    pub fn bregman_value(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.check_dimension(x)?;
        if !self.in_domain(x) {
            return Err(Error::Domain("first argument outside dom(b)".into()));
        }
        if !self.in_zone(y) {
            return Err(Error::Domain("second argument outside the zone U".into()));
        }
        Ok(match self.kind {
            GeometryKind::HalfSquaredEuclidean => {
                0.5 * x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
            }
            GeometryKind::NegativeEntropy => {
                // Σ xⱼ ln(xⱼ/yⱼ) - Σ xⱼ + Σ yⱼ, with 0·ln 0 = 0.
                let mut acc = 0.0;
                for (&xi, &yi) in x.iter().zip(y) {
                    if xi > 0.0 {
                        acc += xi * (xi / yi).ln();
                    }
                    acc += yi - xi;
                }
                acc.max(0.0)
            }
        })
    }

    /// A valid strong convexity parameter of `b` on `set`, measured in the
    /// geometry's ambient norm. Validity, not optimality: a smaller value
    /// only loosens downstream bounds.
    pub fn strong_convexity_parameter(&self, set: &SetDescriptor) -> Result<StrongConvexity> {
        match self.kind {
            // ‖x‖₂ ≥ ‖x‖ᵣ for r ≥ 2, so the Euclidean parameter 1 carries
            // over to every ambient ℓr norm and every set.
            GeometryKind::HalfSquaredEuclidean => Ok(StrongConvexity {
                mu: 1.0,
                provenance: MuProvenance::Analytic,
            }),
            GeometryKind::NegativeEntropy => {
                if !set_in_orthant(set) {
                    return Err(Error::Domain(
                        "set is not contained in dom(b) (nonnegative orthant)".into(),
                    ));
                }
                if set.normalized() == SetDescriptor::Simplex {
                    // Pinsker: KL(x,y) >= 0.5 ||x-y||_1^2, and the l1 norm
                    // dominates every lp norm, so 1 is valid for all p >= 1.
                    return Ok(StrongConvexity {
                        mu: 1.0,
                        provenance: MuProvenance::Analytic,
                    });
                }
                if !set.is_bounded() {
                    return Err(Error::NotStronglyConvex(format!(
                        "negative entropy is not strongly convex on the unbounded set {set:?}"
                    )));
                }
                let mu = self.sampled_mu(set, MU_SAMPLE_PAIRS, MU_SAFETY)?;
                Ok(StrongConvexity {
                    mu,
                    provenance: MuProvenance::Sampled {
                        pairs: MU_SAMPLE_PAIRS,
                        safety: MU_SAFETY,
                    },
                })
            }
        }
    }

    /// Sampled-ratio strong convexity estimate: minimizes
    /// `(λ b(x) + (1-λ) b(y) - b(λx + (1-λ)y)) / (½ λ(1-λ) ‖x-y‖²)`
    /// over random pairs in the set, then applies a safety factor.
    pub fn sampled_mu(&self, set: &SetDescriptor, pairs: usize, safety: f64) -> Result<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(MU_SAMPLE_SEED);
        let mut min_ratio = f64::INFINITY;
        for _ in 0..pairs {
            let x = sample_in(set, self.dimension, &mut rng)?;
            let y = sample_in(set, self.dimension, &mut rng)?;
            let d = lp_dist(&x, &y, self.norm_exponent);
            if d < 1e-9 {
                continue;
            }
            let lambda = rng.gen_range(0.01..0.99);
            let mid = convex_combination(&x, &y, lambda);
            let excess =
                lambda * self.value(&x)? + (1.0 - lambda) * self.value(&y)? - self.value(&mid)?;
            let ratio = excess / (0.5 * lambda * (1.0 - lambda) * d * d);
            min_ratio = min_ratio.min(ratio);
        }
        if !min_ratio.is_finite() || min_ratio <= 0.0 {
            return Err(Error::NotStronglyConvex(format!(
                "sampled convexity ratio degenerate on {set:?}"
            )));
        }
        Ok(safety * min_ratio)
    }
}

const MU_SAMPLE_PAIRS: usize = 10_000;
const MU_SAFETY: f64 = 0.9;
const MU_SAMPLE_SEED: u64 = 0x5eed_0001;

fn set_in_orthant(set: &SetDescriptor) -> bool {
    match set {
        SetDescriptor::Simplex | SetDescriptor::Prism => true,
        SetDescriptor::Intersection(parts) => parts.iter().any(set_in_orthant),
        _ => false,
    }
}

/// A closed convex set given by its defining inequalities.
#[derive(Clone, Debug, PartialEq)]
pub enum SetDescriptor {
    /// All of ℝⁿ.
    WholeSpace,
    /// `[-ρ, ρ]ⁿ`.
    Box { radius: f64 },
    /// `{x : ‖x‖_q ≤ r}` centered at the origin.
    Ball { radius: f64, norm_exponent: f64 },
    /// The probability simplex `{x ≥ 0 : Σ x = 1}`.
    Simplex,
    /// The unbounded prism `{w : Σw ≥ 1, -2w₁+w₂+w₃ ≤ 1, w₁-2w₂+w₃ ≤ 1,
    /// w₁+w₂-2w₃ ≤ 1}` = simplex ⊕ cone(1,1,1); lives in the nonnegative
    /// orthant.
    Prism,
    /// Intersection of the parts.
    Intersection(Vec<SetDescriptor>),
}

impl SetDescriptor {
    pub fn boxed(radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::InvalidParameter("box radius must be positive".into()));
        }
        Ok(SetDescriptor::Box { radius })
    }

    pub fn ball(radius: f64, norm_exponent: f64) -> Result<Self> {
        if !(radius > 0.0) || !(norm_exponent >= 1.0) {
            return Err(Error::InvalidParameter(
                "ball needs positive radius and norm exponent >= 1".into(),
            ));
        }
        Ok(SetDescriptor::Ball {
            radius,
            norm_exponent,
        })
    }

    /// Deterministic membership test with slack `tol` on each defining
    /// inequality.
    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        match self {
            SetDescriptor::WholeSpace => true,
            SetDescriptor::Box { radius } => lp_norm(x, f64::INFINITY) <= radius + tol,
            SetDescriptor::Ball {
                radius,
                norm_exponent,
            } => lp_norm(x, *norm_exponent) <= radius + tol,
            SetDescriptor::Simplex => {
                x.iter().all(|&v| v >= -tol) && (x.iter().sum::<f64>() - 1.0).abs() <= tol * 10.0
            }
            SetDescriptor::Prism => {
                if x.len() != 3 {
                    return false;
                }
                let s = x[0] + x[1] + x[2];
                s >= 1.0 - tol
                    && -2.0 * x[0] + x[1] + x[2] <= 1.0 + tol
                    && x[0] - 2.0 * x[1] + x[2] <= 1.0 + tol
                    && x[0] + x[1] - 2.0 * x[2] <= 1.0 + tol
            }
            SetDescriptor::Intersection(parts) => parts.iter().all(|p| p.contains(x, tol)),
        }
    }

    /// Flatten nested intersections and drop `WholeSpace` factors; collapse
    /// intersections of boxes to the smallest box.
    pub fn normalized(&self) -> SetDescriptor {
        match self {
            SetDescriptor::Intersection(parts) => {
                let mut flat: Vec<SetDescriptor> = Vec::new();
                for p in parts {
                    match p.normalized() {
                        SetDescriptor::WholeSpace => {}
                        SetDescriptor::Intersection(inner) => flat.extend(inner),
                        other => flat.push(other),
                    }
                }
                // Merge boxes.
                let mut box_radius: Option<f64> = None;
                flat.retain(|p| match p {
                    SetDescriptor::Box { radius } => {
                        box_radius = Some(box_radius.map_or(*radius, |r: f64| r.min(*radius)));
                        false
                    }
                    _ => true,
                });
                if let Some(r) = box_radius {
                    flat.push(SetDescriptor::Box { radius: r });
                }
                match flat.len() {
                    0 => SetDescriptor::WholeSpace,
                    1 => flat.pop().unwrap(),
                    _ => SetDescriptor::Intersection(flat),
                }
            }
            other => other.clone(),
        }
    }

    pub fn is_bounded(&self) -> bool {
        match self {
            SetDescriptor::WholeSpace | SetDescriptor::Prism => false,
            SetDescriptor::Box { .. } | SetDescriptor::Ball { .. } | SetDescriptor::Simplex => true,
            SetDescriptor::Intersection(parts) => parts.iter().any(SetDescriptor::is_bounded),
        }
    }

    /// Radius of the smallest origin-centered sup-norm box known to contain
    /// the set, if any.
    pub fn box_radius(&self) -> Option<f64> {
        match self {
            SetDescriptor::WholeSpace | SetDescriptor::Prism => None,
            SetDescriptor::Box { radius } => Some(*radius),
            // ‖x‖_∞ ≤ ‖x‖_q for every q ≥ 1.
            SetDescriptor::Ball { radius, .. } => Some(*radius),
            SetDescriptor::Simplex => Some(1.0),
            SetDescriptor::Intersection(parts) => {
                parts.iter().filter_map(SetDescriptor::box_radius).reduce(f64::min)
            }
        }
    }

    /// Radius of an origin-centered ℓp ball known to contain the set, if
    /// any.
    pub fn norm_radius(&self, p: f64, dimension: usize) -> Option<f64> {
        let n = dimension as f64;
        let inv = |e: f64| if e.is_infinite() { 0.0 } else { 1.0 / e };
        match self {
            SetDescriptor::WholeSpace | SetDescriptor::Prism => None,
            SetDescriptor::Box { radius } => Some(radius * n.powf(inv(p))),
            SetDescriptor::Ball {
                radius,
                norm_exponent: q,
            } => {
                // ‖x‖_p ≤ n^{max(0, 1/p - 1/q)} ‖x‖_q.
                Some(radius * n.powf((inv(p) - inv(*q)).max(0.0)))
            }
            // ‖x‖_p ≤ ‖x‖₁ = 1 on the simplex.
            SetDescriptor::Simplex => Some(1.0),
            SetDescriptor::Intersection(parts) => parts
                .iter()
                .filter_map(|s| s.norm_radius(p, dimension))
                .reduce(f64::min),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::sample_in;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Central finite-difference gradient of `b`, the independent oracle
    /// for `bregman_gradient`.
    fn fd_gradient(g: &BregmanGeometry, x: &[f64]) -> Vec<f64> {
        let h = 1e-6 * (1.0 + lp_norm(x, 2.0));
        (0..x.len())
            .map(|j| {
                let mut hi = x.to_vec();
                let mut lo = x.to_vec();
                hi[j] += h;
                lo[j] -= h;
                (g.value(&hi).unwrap() - g.value(&lo).unwrap()) / (2.0 * h)
            })
            .collect()
    }

    #[test]
    fn quadratic_bregman_is_half_squared_distance() {
        let g = BregmanGeometry::half_squared_euclidean(2, 2.0).unwrap();
        let b = g.bregman_value(&[1.0, 2.0], &[0.0, 0.0]).unwrap();
        assert!((b - 2.5).abs() < 1e-15);
    }

    #[test]
    fn bregman_value_at_identical_points_is_zero() {
        let quad = BregmanGeometry::half_squared_euclidean(3, 2.0).unwrap();
        let ent = BregmanGeometry::negative_entropy(3, 1.0).unwrap();
        let x = [0.2, 0.5, 0.3];
        assert_eq!(quad.bregman_value(&x, &x).unwrap(), 0.0);
        assert_eq!(ent.bregman_value(&x, &x).unwrap(), 0.0);
    }

    #[test]
    fn entropy_bregman_matches_kl_oracle() {
        // Both points sum to one, so B reduces to Σ x ln(x/y) = 0.5 ln(4/3).
        let g = BregmanGeometry::negative_entropy(2, 1.0).unwrap();
        let b = g.bregman_value(&[0.5, 0.5], &[0.25, 0.75]).unwrap();
        let expected = 0.5 * (4.0f64 / 3.0).ln();
        assert!((b - expected).abs() < 1e-14, "got {b}, want {expected}");
        assert!((expected - 0.143841).abs() < 1e-6);
    }

    #[test]
    fn quadratic_gradient_is_identity() {
        let g = BregmanGeometry::half_squared_euclidean(2, 2.0).unwrap();
        assert_eq!(g.bregman_gradient(&[3.0, -1.0]).unwrap(), vec![3.0, -1.0]);
    }

    #[test]
    fn entropy_gradient_examples() {
        let g = BregmanGeometry::negative_entropy(3, 1.0).unwrap();
        assert_eq!(
            g.bregman_gradient(&[1.0, 1.0, 1.0]).unwrap(),
            vec![1.0, 1.0, 1.0]
        );
        let g2 = BregmanGeometry::negative_entropy(2, 1.0).unwrap();
        let want = 1.0 - 2.0f64.ln();
        for (got, fd) in g2
            .bregman_gradient(&[0.5, 0.5])
            .unwrap()
            .iter()
            .zip(fd_gradient(&g2, &[0.5, 0.5]))
        {
            assert!((got - want).abs() < 1e-12);
            assert!((got - fd).abs() <= 1e-5 * (1.0 + fd.abs()));
        }
    }

    #[test]
    fn entropy_gradient_rejects_boundary() {
        let g = BregmanGeometry::negative_entropy(2, 1.0).unwrap();
        assert!(matches!(
            g.bregman_gradient(&[0.0, 1.0]),
            Err(Error::Domain(_))
        ));
        // The value itself stays finite on the boundary.
        assert_eq!(g.value(&[0.0, 1.0]).unwrap(), 0.0);
        assert!(g.value(&[-0.1, 1.0]).is_err());
    }

    #[test]
    fn gradient_matches_finite_differences_on_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let quad = BregmanGeometry::half_squared_euclidean(4, 3.0).unwrap();
        let ent = BregmanGeometry::negative_entropy(3, 1.0).unwrap();
        for _ in 0..50 {
            let x = sample_in(&SetDescriptor::Box { radius: 2.0 }, 4, &mut rng).unwrap();
            for (a, b) in quad.bregman_gradient(&x).unwrap().iter().zip(fd_gradient(&quad, &x)) {
                assert!((a - b).abs() <= 1e-5 * (1.0 + b.abs()));
            }
            let w = sample_in(&SetDescriptor::Simplex, 3, &mut rng).unwrap();
            for (a, b) in ent.bregman_gradient(&w).unwrap().iter().zip(fd_gradient(&ent, &w)) {
                assert!((a - b).abs() <= 1e-5 * (1.0 + b.abs()));
            }
        }
    }

    #[test]
    fn bregman_nonnegative_and_zero_only_at_equal_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let quad = BregmanGeometry::half_squared_euclidean(3, 2.0).unwrap();
        let ent = BregmanGeometry::negative_entropy(3, 1.0).unwrap();
        for _ in 0..1000 {
            let x = sample_in(&SetDescriptor::Box { radius: 3.0 }, 3, &mut rng).unwrap();
            let y = sample_in(&SetDescriptor::Box { radius: 3.0 }, 3, &mut rng).unwrap();
            assert!(quad.bregman_value(&x, &y).unwrap() >= -1e-12);
            let a = sample_in(&SetDescriptor::Simplex, 3, &mut rng).unwrap();
            let b = sample_in(&SetDescriptor::Simplex, 3, &mut rng).unwrap();
            let v = ent.bregman_value(&a, &b).unwrap();
            assert!(v >= -1e-12);
            if lp_dist(&a, &b, 1.0) > 1e-6 {
                assert!(v > 0.0);
            }
        }
    }

    #[test]
    fn b_is_convex_on_random_segments() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let quad = BregmanGeometry::half_squared_euclidean(3, 2.0).unwrap();
        let ent = BregmanGeometry::negative_entropy(3, 1.0).unwrap();
        for _ in 0..1000 {
            let lambda: f64 = rng.gen_range(0.01..0.99);
            let x = sample_in(&SetDescriptor::Box { radius: 5.0 }, 3, &mut rng).unwrap();
            let y = sample_in(&SetDescriptor::Box { radius: 5.0 }, 3, &mut rng).unwrap();
            let m = convex_combination(&x, &y, lambda);
            let bx = quad.value(&x).unwrap();
            let by = quad.value(&y).unwrap();
            assert!(
                quad.value(&m).unwrap()
                    <= lambda * bx + (1.0 - lambda) * by + 1e-12 * (1.0 + bx.abs() + by.abs())
            );
            let a = sample_in(&SetDescriptor::Simplex, 3, &mut rng).unwrap();
            let b = sample_in(&SetDescriptor::Simplex, 3, &mut rng).unwrap();
            let mab = convex_combination(&a, &b, lambda);
            let ba = ent.value(&a).unwrap();
            let bb = ent.value(&b).unwrap();
            assert!(
                ent.value(&mab).unwrap()
                    <= lambda * ba + (1.0 - lambda) * bb + 1e-12 * (1.0 + ba.abs() + bb.abs())
            );
        }
    }

    #[test]
    fn quadratic_strong_convexity_is_one_for_all_r() {
        for r in [2.0, 3.0, 10.0] {
            let g = BregmanGeometry::half_squared_euclidean(5, r).unwrap();
            let sc = g
                .strong_convexity_parameter(&SetDescriptor::Box { radius: 4.0 })
                .unwrap();
            assert_eq!(sc.mu, 1.0);
            assert_eq!(sc.provenance, MuProvenance::Analytic);
        }
    }

    #[test]
    fn entropy_on_simplex_has_parameter_one() {
        let g = BregmanGeometry::negative_entropy(3, 1.0).unwrap();
        let sc = g.strong_convexity_parameter(&SetDescriptor::Simplex).unwrap();
        assert_eq!(sc.mu, 1.0);
        // Sampled-ratio oracle cross-check: the sampled minimum must not
        // undercut the Pinsker-type analytic value.
        let sampled = g.sampled_mu(&SetDescriptor::Simplex, 2000, 1.0).unwrap();
        assert!(sampled >= 1.0 - 1e-9, "sampled ratio {sampled} below 1");
    }

    #[test]
    fn entropy_on_unbounded_set_is_not_strongly_convex() {
        let g = BregmanGeometry::negative_entropy(3, 2.0).unwrap();
        assert!(matches!(
            g.strong_convexity_parameter(&SetDescriptor::Prism),
            Err(Error::NotStronglyConvex(_))
        ));
    }

    #[test]
    fn entropy_on_prism_ball_estimate_is_valid_on_fresh_samples() {
        let g = BregmanGeometry::negative_entropy(3, 2.0).unwrap();
        let set = SetDescriptor::Intersection(vec![
            SetDescriptor::Prism,
            SetDescriptor::Ball {
                radius: 4.0,
                norm_exponent: 2.0,
            },
        ]);
        let sc = g.strong_convexity_parameter(&set).unwrap();
        assert!(sc.mu > 0.0);
        assert!(matches!(sc.provenance, MuProvenance::Sampled { .. }));
        // Strong-convexity lower bound B(x,y) >= 0.5 mu ||x-y||^2 on fresh
        // samples (the two-point consequence used by the step analysis).
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..1000 {
            let x = sample_in(&set, 3, &mut rng).unwrap();
            let y = sample_in(&set, 3, &mut rng).unwrap();
            let b = g.bregman_value(&x, &y).unwrap();
            let d = lp_dist(&x, &y, 2.0);
            assert!(b >= 0.5 * sc.mu * d * d - 1e-10);
        }
    }

    #[test]
    fn box_nesting_under_radius_growth() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let small = SetDescriptor::Box { radius: 1.5 };
        let large = SetDescriptor::Box { radius: 2.5 };
        for _ in 0..200 {
            let x = sample_in(&small, 4, &mut rng).unwrap();
            assert!(large.contains(&x, 0.0));
        }
    }

    #[test]
    fn intersection_normalization_merges_boxes() {
        let s = SetDescriptor::Intersection(vec![
            SetDescriptor::WholeSpace,
            SetDescriptor::Box { radius: 3.0 },
            SetDescriptor::Intersection(vec![SetDescriptor::Box { radius: 2.0 }]),
        ]);
        assert_eq!(s.normalized(), SetDescriptor::Box { radius: 2.0 });
        assert_eq!(SetDescriptor::WholeSpace.normalized(), SetDescriptor::WholeSpace);
    }

    #[test]
    fn prism_membership_matches_inequalities() {
        let p = SetDescriptor::Prism;
        assert!(p.contains(&[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 0.0));
        assert!(p.contains(&[1.0, 1.0, 1.0], 0.0));
        assert!(!p.contains(&[0.2, 0.2, 0.2], 0.0)); // sum < 1
        assert!(!p.contains(&[-0.1, 0.55, 0.56], 0.0)); // violates a face
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(512))]

            /// B(x, y) >= 0 with equality only on the diagonal, for both
            /// geometries.
            #[test]
            fn bregman_divergence_is_nonnegative(
                x0 in -4.0f64..4.0, x1 in -4.0f64..4.0,
                y0 in -4.0f64..4.0, y1 in -4.0f64..4.0,
            ) {
                let quad = BregmanGeometry::half_squared_euclidean(2, 2.0).unwrap();
                let b = quad.bregman_value(&[x0, x1], &[y0, y1]).unwrap();
                prop_assert!(b >= -1e-12);

                let ent = BregmanGeometry::negative_entropy(2, 1.0).unwrap();
                let sx = x0.abs() + x1.abs() + 1e-6;
                let sy = y0.abs() + y1.abs() + 1e-6;
                let px = [(x0.abs() + 5e-7) / sx, (x1.abs() + 5e-7) / sx];
                let py = [(y0.abs() + 5e-7) / sy, (y1.abs() + 5e-7) / sy];
                let kl = ent.bregman_value(&px, &py).unwrap();
                prop_assert!(kl >= -1e-12);
                // Pinsker-type lower bound with the certified mu = 1
                let d1 = (px[0] - py[0]).abs() + (px[1] - py[1]).abs();
                prop_assert!(kl >= 0.5 * d1 * d1 - 1e-10);
            }

            /// Normalization neither changes membership nor is it
            /// sensitive to repeated application.
            #[test]
            fn normalization_preserves_membership(
                x0 in -3.0f64..3.0, x1 in -3.0f64..3.0, x2 in -3.0f64..3.0,
                r1 in 0.1f64..4.0, r2 in 0.1f64..4.0,
            ) {
                let set = SetDescriptor::Intersection(vec![
                    SetDescriptor::Box { radius: r1 },
                    SetDescriptor::WholeSpace,
                    SetDescriptor::Intersection(vec![
                        SetDescriptor::Box { radius: r2 },
                        SetDescriptor::Ball { radius: 2.0, norm_exponent: 2.0 },
                    ]),
                ]);
                let x = [x0, x1, x2];
                let norm = set.normalized();
                prop_assert_eq!(set.contains(&x, 0.0), norm.contains(&x, 0.0));
                prop_assert_eq!(norm.normalized(), norm);
            }
        }
    }
}
