//! Concrete smooth terms, nonsmooth terms and constraint sets: the ℓp
//! residual with ℓ1 regularization, and the simplex power objective with a
//! max-of-linear term.

use rand::seq::index::sample as index_sample;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::extreal::ExtReal;
use crate::geometry::{BregmanGeometry, SetDescriptor};
use crate::linalg::{dot, lp_norm, Matrix};
use crate::sampling::sample_in;
use crate::{Error, Result};

/// Smooth convex term `f`.
#[derive(Clone, Debug)]
pub enum SmoothTerm {
    /// `f(x) = (1/p) ‖Ax - c‖_p^p` with `p ≥ 2`. `sigma_upper` caches a
    /// certified upper bound on the spectral norm of `A`.
    LpResidual {
        a: Matrix,
        c: Vec<f64>,
        p: f64,
        sigma_upper: f64,
    },
    /// `f(w) = (4/15) [(w₁+w₂)^{5/2} + (w₂+w₃)^{5/2} + (w₃+w₁)^{5/2}]`
    /// on the nonnegative orthant of ℝ³.
    SimplexPower,
}

impl SmoothTerm {
    pub fn lp_residual(a: Matrix, c: Vec<f64>, p: f64) -> Result<Self> {
        if !(p >= 2.0) || !p.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "lp residual requires finite p >= 2, got {p}"
            )));
        }
        if c.len() != a.rows() {
            return Err(Error::InvalidParameter(format!(
                "offset has length {}, matrix has {} rows",
                c.len(),
                a.rows()
            )));
        }
        let sigma_upper = crate::linalg::spectral_norm_upper(&a, 1e-10);
        Ok(SmoothTerm::LpResidual { a, c, p, sigma_upper })
    }

    pub fn dimension(&self) -> Option<usize> {
        match self {
            SmoothTerm::LpResidual { a, .. } => Some(a.cols()),
            SmoothTerm::SimplexPower => Some(3),
        }
    }

    /// Raw value of `f`; the domain gate lives on [`CompositeProblem`].
    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            SmoothTerm::LpResidual { a, c, p, .. } => {
                let r = a.matvec(x);
                r.iter()
                    .zip(c)
                    .map(|(ri, ci)| (ri - ci).abs().powf(*p))
                    .sum::<f64>()
                    / p
            }
            SmoothTerm::SimplexPower => {
                let s = |t: f64| t.max(0.0).powf(2.5);
                4.0 / 15.0 * (s(x[0] + x[1]) + s(x[1] + x[2]) + s(x[2] + x[0]))
            }
        }
    }

    /// Raw gradient of `f`.
    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        match self {
            SmoothTerm::LpResidual { a, c, p, .. } => {
                let r = a.matvec(x);
                // sign(u)|u|^{p-1}: continuous at 0 for p >= 2, and exactly
                // u itself when p = 2.
                let s: Vec<f64> = r
                    .iter()
                    .zip(c)
                    .map(|(ri, ci)| {
                        let u = ri - ci;
                        if *p == 2.0 {
                            u
                        } else {
                            u.signum() * u.abs().powf(p - 1.0)
                        }
                    })
                    .collect();
                a.t_matvec(&s)
            }
            SmoothTerm::SimplexPower => {
                let s = |t: f64| t.max(0.0).powf(1.5);
                let p12 = s(x[0] + x[1]);
                let p23 = s(x[1] + x[2]);
                let p31 = s(x[2] + x[0]);
                vec![
                    2.0 / 3.0 * (p12 + p31),
                    2.0 / 3.0 * (p12 + p23),
                    2.0 / 3.0 * (p23 + p31),
                ]
            }
        }
    }
}

/// Convex, possibly nonsmooth term `g`.
#[derive(Clone, Debug)]
pub enum NonsmoothTerm {
    /// `g(x) = λ ‖x‖₁`, `λ ≥ 0` (zero selects the smooth-only problem).
    ScaledL1 { lambda: f64 },
    /// `g(w) = max_i Σ_j a_{ij} w_j` over a small row set. Construction
    /// enforces the admissibility conditions `Σ_j a_{ij} ≤ 1` per row and
    /// `max_i min_j a_{ij} ≥ 0.27`, which keep the minimizers of the
    /// simplex benchmark away from the boundary of the zone.
    MaxLinear { rows: Vec<Vec<f64>> },
}

impl NonsmoothTerm {
    pub fn scaled_l1(lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0) {
            return Err(Error::InvalidParameter("lambda must be nonnegative".into()));
        }
        Ok(NonsmoothTerm::ScaledL1 { lambda })
    }

    pub fn max_linear(rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() || rows.iter().any(|r| r.len() != 3) {
            return Err(Error::InvalidParameter(
                "max-linear needs at least one row of width 3".into(),
            ));
        }
        for (i, r) in rows.iter().enumerate() {
            if r.iter().sum::<f64>() > 1.0 + 1e-12 {
                return Err(Error::InvalidParameter(format!(
                    "row {i} has coefficient sum {} > 1",
                    r.iter().sum::<f64>()
                )));
            }
        }
        let best_min = rows
            .iter()
            .map(|r| r.iter().cloned().fold(f64::INFINITY, f64::min))
            .fold(f64::NEG_INFINITY, f64::max);
        if best_min < 0.27 {
            return Err(Error::InvalidParameter(format!(
                "max over rows of min coefficient is {best_min} < 0.27"
            )));
        }
        Ok(NonsmoothTerm::MaxLinear { rows })
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            NonsmoothTerm::ScaledL1 { lambda } => lambda * lp_norm(x, 1.0),
            NonsmoothTerm::MaxLinear { rows } => rows
                .iter()
                .map(|r| dot(r, x))
                .fold(f64::NEG_INFINITY, f64::max),
        }
    }

    /// Rows within an absolute `1e-12`-scaled tie tolerance of the maximum.
    pub fn active_rows(&self, x: &[f64]) -> Vec<usize> {
        match self {
            NonsmoothTerm::ScaledL1 { .. } => Vec::new(),
            NonsmoothTerm::MaxLinear { rows } => {
                let vals: Vec<f64> = rows.iter().map(|r| dot(r, x)).collect();
                let top = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let tol = 1e-12 * (1.0 + top.abs());
                vals.iter()
                    .enumerate()
                    .filter_map(|(i, v)| (top - v <= tol).then_some(i))
                    .collect()
            }
        }
    }

    /// A deterministic subgradient: the mean of the active rows for the
    /// max-linear term, the sign vector (zero at zeros) for ℓ1.
    pub fn subgradient(&self, x: &[f64]) -> Vec<f64> {
        match self {
            NonsmoothTerm::ScaledL1 { lambda } => {
                x.iter().map(|&v| lambda * sign0(v)).collect()
            }
            NonsmoothTerm::MaxLinear { rows } => {
                let active = self.active_rows(x);
                let mut g = vec![0.0; 3];
                for &i in &active {
                    for (gj, aj) in g.iter_mut().zip(&rows[i]) {
                        *gj += aj / active.len() as f64;
                    }
                }
                g
            }
        }
    }

    /// Upper bound on the dual-norm distance from `d` to `∂g̃(x)`, where
    /// `g̃` adds the indicator of `set` (so the normal cone of active faces
    /// is included). Zero exactly when `d` is a subgradient.
    pub fn subdifferential_distance(
        &self,
        x: &[f64],
        set: &SetDescriptor,
        d: &[f64],
        dual_p: f64,
    ) -> Result<f64> {
        match (self, set.normalized()) {
            (NonsmoothTerm::ScaledL1 { lambda }, SetDescriptor::WholeSpace) => {
                Ok(l1_box_gap(x, d, *lambda, f64::INFINITY, dual_p))
            }
            (NonsmoothTerm::ScaledL1 { lambda }, SetDescriptor::Box { radius }) => {
                Ok(l1_box_gap(x, d, *lambda, radius, dual_p))
            }
            (NonsmoothTerm::MaxLinear { rows }, SetDescriptor::Simplex) => {
                Ok(maxlinear_simplex_gap(rows, x, d, dual_p))
            }
            (term, set) => Err(Error::ProxFailure(format!(
                "no subdifferential oracle for {term:?} over {set:?}"
            ))),
        }
    }

    /// Membership oracle for the subdifferential within `tol`.
    pub fn in_subdifferential(
        &self,
        x: &[f64],
        set: &SetDescriptor,
        d: &[f64],
        dual_p: f64,
        tol: f64,
    ) -> Result<bool> {
        Ok(self.subdifferential_distance(x, set, d, dual_p)? <= tol)
    }
}

fn sign0(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Per-coordinate interval distance for `λ∂‖·‖₁(x) + N_{[-ρ,ρ]ⁿ}(x)`,
/// aggregated in the dual norm. Face activity is detected exactly: the
/// closed-form prox emits exact `0` and `±ρ` coordinates.
fn l1_box_gap(x: &[f64], d: &[f64], lambda: f64, rho: f64, dual_p: f64) -> f64 {
    let gaps: Vec<f64> = x
        .iter()
        .zip(d)
        .map(|(&xj, &dj)| {
            let (mut lo, mut hi) = if xj == 0.0 {
                (-lambda, lambda)
            } else if xj > 0.0 {
                (lambda, lambda)
            } else {
                (-lambda, -lambda)
            };
            if xj >= rho {
                hi = f64::INFINITY;
            }
            if xj <= -rho {
                lo = f64::NEG_INFINITY;
            }
            if dj < lo {
                lo - dj
            } else if dj > hi {
                dj - hi
            } else {
                0.0
            }
        })
        .collect();
    lp_norm(&gaps, dual_p)
}

/// Distance bound from `d` to `conv{a_i active} + span(𝟙) - cone{e_j : x_j
/// on the zero face}` on the simplex: a tiny projected least-squares
/// problem, solved by alternating closed-form updates in ν and s with
/// projected gradient steps in θ. Returns the dual norm of the residual at
/// the minimizer, an upper bound on the true dual distance.
fn maxlinear_simplex_gap(rows: &[Vec<f64>], x: &[f64], d: &[f64], dual_p: f64) -> f64 {
    let n = x.len();
    let active: Vec<&Vec<f64>> = {
        let vals: Vec<f64> = rows.iter().map(|r| dot(r, x)).collect();
        let top = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let tol = 1e-12 * (1.0 + top.abs());
        rows.iter()
            .zip(&vals)
            .filter_map(|(r, v)| (top - v <= tol).then_some(r))
            .collect()
    };
    let zero_face: Vec<bool> = x.iter().map(|&v| v == 0.0).collect();
    let m = active.len();

    let mut theta = vec![1.0 / m as f64; m];
    let mut s = vec![0.0; n];
    let mut residual = vec![0.0; n];
    for _ in 0..400 {
        // residual(θ, ν, s) = d - Σ θ_i a_i - ν·1 + s (s supported on the
        // zero face, s >= 0).
        let mut w = d.to_vec();
        for (t, a) in theta.iter().zip(&active) {
            for (wj, aj) in w.iter_mut().zip(*a) {
                *wj -= t * aj;
            }
        }
        let nu = (w.iter().sum::<f64>() + s.iter().sum::<f64>()) / n as f64;
        for j in 0..n {
            s[j] = if zero_face[j] { (nu - w[j]).max(0.0) } else { 0.0 };
        }
        for j in 0..n {
            residual[j] = w[j] - nu + s[j];
        }
        if m > 1 {
            // gradient of ½‖residual‖² w.r.t. θ is -A·residual; the Gram
            // spectral norm is at most Σ‖a_i‖², which caps the stable step
            let grad: Vec<f64> = active.iter().map(|a| -dot(a, &residual)).collect();
            let step = 0.9 / active.iter().map(|a| dot(a, a)).sum::<f64>().max(1e-12);
            for (t, g) in theta.iter_mut().zip(&grad) {
                *t -= step * g;
            }
            project_onto_simplex(&mut theta);
        }
    }
    lp_norm(&residual, dual_p)
}

/// Euclidean projection onto the probability simplex (sort-based).
fn project_onto_simplex(v: &mut [f64]) {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut css = 0.0;
    let mut rho = 0;
    let mut theta = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        css += ui;
        let t = (css - 1.0) / (i + 1) as f64;
        if ui - t > 0.0 {
            rho = i;
            theta = t;
        }
    }
    let _ = rho;
    for x in v.iter_mut() {
        *x = (*x - theta).max(0.0);
    }
}

/// A composite minimization problem `min F = f + g` over `C ⊆ dom(b)`.
#[derive(Clone, Debug)]
pub struct CompositeProblem {
    smooth: SmoothTerm,
    nonsmooth: NonsmoothTerm,
    constraint: SetDescriptor,
    geometry: BregmanGeometry,
    witness: Vec<f64>,
}

impl CompositeProblem {
    pub fn new(
        smooth: SmoothTerm,
        nonsmooth: NonsmoothTerm,
        constraint: SetDescriptor,
        geometry: BregmanGeometry,
    ) -> Result<Self> {
        if let Some(d) = smooth.dimension() {
            if d != geometry.dimension() {
                return Err(Error::InvalidParameter(format!(
                    "smooth term dimension {d} != geometry dimension {}",
                    geometry.dimension()
                )));
            }
        }
        // Sampled check that the constraint sits inside dom(b).
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0002);
        for _ in 0..100 {
            let x = sample_in(&constraint, geometry.dimension(), &mut rng)?;
            if !geometry.in_domain(&x) {
                return Err(Error::Domain(format!(
                    "constraint {constraint:?} is not contained in dom(b): witness {x:?}"
                )));
            }
        }
        let witness = find_zone_witness(&constraint, &geometry, &mut rng)?;
        Ok(CompositeProblem {
            smooth,
            nonsmooth,
            constraint,
            geometry,
            witness,
        })
    }

    pub fn smooth(&self) -> &SmoothTerm {
        &self.smooth
    }

    pub fn nonsmooth(&self) -> &NonsmoothTerm {
        &self.nonsmooth
    }

    pub fn constraint(&self) -> &SetDescriptor {
        &self.constraint
    }

    pub fn geometry(&self) -> &BregmanGeometry {
        &self.geometry
    }

    /// A stored interior point of `C ∩ U`.
    pub fn zone_witness(&self) -> &[f64] {
        &self.witness
    }

    /// `f(x)` for `x ∈ dom(b)`.
    pub fn smooth_value(&self, x: &[f64]) -> Result<f64> {
        if !self.geometry.in_domain(x) {
            return Err(Error::Domain("smooth term evaluated outside dom(b)".into()));
        }
        Ok(self.smooth.value(x))
    }

    /// `f'(x)` for `x ∈ U`.
    pub fn smooth_gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        if !self.geometry.in_zone(x) {
            return Err(Error::Domain(
                "smooth gradient evaluated outside the zone U".into(),
            ));
        }
        Ok(self.smooth.gradient(x))
    }

    /// `g(x)` for `x ∈ C`.
    pub fn nonsmooth_value(&self, x: &[f64]) -> Result<f64> {
        if !self.constraint.contains(x, MEMBERSHIP_TOL) {
            return Err(Error::Domain(
                "nonsmooth term evaluated outside the constraint".into(),
            ));
        }
        Ok(self.nonsmooth.value(x))
    }

    /// `F(x) = f(x) + g(x)` on `C`, structural `+∞` elsewhere.
    pub fn objective_value(&self, x: &[f64]) -> ExtReal {
        if !self.constraint.contains(x, MEMBERSHIP_TOL) || !self.geometry.in_domain(x) {
            return ExtReal::Infinite;
        }
        ExtReal::Finite(self.smooth.value(x) + self.nonsmooth.value(x))
    }
}

/// Feasibility slack used when gating evaluations on set membership;
/// absorbs normalization round-off of interior iterates.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

fn find_zone_witness(
    constraint: &SetDescriptor,
    geometry: &BregmanGeometry,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<f64>> {
    let n = geometry.dimension();
    let bary = vec![1.0 / n as f64; n];
    let origin = vec![0.0; n];
    let ones = vec![1.0; n];
    for cand in [bary, ones, origin] {
        if constraint.contains(&cand, 0.0) && geometry.in_zone(&cand) {
            return Ok(cand);
        }
    }
    for _ in 0..1000 {
        let x = sample_in(constraint, n, rng)?;
        if geometry.in_zone(&x) {
            return Ok(x);
        }
    }
    Err(Error::InvalidParameter(
        "constraint has no discoverable interior point in the zone".into(),
    ))
}

/// A reproducible random ℓp–ℓ1 instance together with its generation
/// metadata.
#[derive(Clone, Debug)]
pub struct GeneratedInstance {
    pub problem: CompositeProblem,
    pub x_true: Vec<f64>,
    pub noise_scale: f64,
    pub seed: u64,
    pub density: f64,
}

/// Seeded ℓp–ℓ1 instance: `A` has standard normal entries scaled by
/// `1/√m`, `x_true` has a `density` fraction of standard normal entries,
/// and `c = A x_true + noise` with the noise norm fixed at 1% of
/// `‖A x_true‖₂`.
pub fn generate_instance(
    seed: u64,
    n: usize,
    m: usize,
    p: f64,
    lambda: f64,
    density: f64,
) -> Result<GeneratedInstance> {
    if n == 0 || m == 0 {
        return Err(Error::InvalidParameter("n and m must be >= 1".into()));
    }
    if !(p >= 2.0) {
        return Err(Error::InvalidParameter("p must be >= 2".into()));
    }
    if !(lambda > 0.0) {
        return Err(Error::InvalidParameter("lambda must be positive".into()));
    }
    if !(0.0..=1.0).contains(&density) {
        return Err(Error::InvalidParameter("density must be in [0, 1]".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = 1.0 / (m as f64).sqrt();
    let data: Vec<f64> = (0..m * n)
        .map(|_| rng.sample::<f64, _>(StandardNormal) * scale)
        .collect();
    let a = Matrix::new(m, n, data)?;

    let nnz = (density * n as f64).round() as usize;
    let mut x_true = vec![0.0; n];
    for idx in index_sample(&mut rng, n, nnz) {
        x_true[idx] = rng.sample::<f64, _>(StandardNormal);
    }

    let ax = a.matvec(&x_true);
    let noise_scale = 0.01 * lp_norm(&ax, 2.0);
    let e: Vec<f64> = (0..m).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let ne = lp_norm(&e, 2.0);
    let c: Vec<f64> = ax
        .iter()
        .zip(&e)
        .map(|(axi, ei)| axi + if ne > 0.0 { noise_scale * ei / ne } else { 0.0 })
        .collect();

    let geometry = BregmanGeometry::half_squared_euclidean(n, 2.0)?;
    let problem = CompositeProblem::new(
        SmoothTerm::lp_residual(a, c, p)?,
        NonsmoothTerm::scaled_l1(lambda)?,
        SetDescriptor::WholeSpace,
        geometry,
    )?;
    Ok(GeneratedInstance {
        problem,
        x_true,
        noise_scale,
        seed,
        density,
    })
}
