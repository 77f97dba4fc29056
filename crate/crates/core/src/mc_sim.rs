//! Monte-Carlo verification of the heat-semigroup Hessian estimates:
//! projected Euler-Maruyama paths on the sphere and for the
//! Ornstein-Uhlenbeck process, damped parallel transport Q_t, the
//! operator-valued correction process W_t, and the representation-formula
//! Hessian estimator with batch-means confidence intervals.

use crate::bounds::{verdict, InequalityVerdict};
use crate::geometry::{curvature_constants, ModelSpace, PotentialSpec, SpaceKind};
use crate::measures::stream_rng;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum McError {
    #[error("step {0} too large: the projected integrator needs step <= 1e-2")]
    StepTooLarge(f64),
    #[error("preset not supported here: {0}")]
    PresetUnsupported(String),
    #[error("variance blowup: ci {ci} vs value {value}")]
    VarianceBlowup { value: f64, ci: f64 },
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),
}

/// Monte-Carlo budget and reproducibility knobs.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct McConfig {
    pub seed: u64,
    pub count: usize,
    pub step: f64,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            seed: 7,
            count: 20_000,
            step: 1e-3,
        }
    }
}

/// Analytic test field with closed-form gradient and Hessian.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldPreset {
    /// Last ambient coordinate on the sphere (degree-1 zonal harmonic).
    ZonalCoordinate,
    /// f(x) = x on the line.
    Coordinate,
    /// f(x) = x^2 on the line.
    Square,
    /// f(x) = sin x on the line.
    Sine,
}

/// One simulated path with its transported frame and damping factors.
#[derive(Debug, Clone)]
pub struct PathBundle {
    pub times: Vec<f64>,
    /// Ambient coordinates per step.
    pub positions: Vec<Vec<f64>>,
    /// Parallel-transported orthonormal tangent frame per step.
    pub frame: Vec<Vec<Vec<f64>>>,
    /// Scalar damping: on these constant-curvature presets the damped
    /// transport is Q_t = q(t) x (parallel transport).
    pub q: Vec<f64>,
    pub seed: u64,
    pub step: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Estimator {
    /// Path average of Hess_f(Q_t v, Q_t w) + <grad f(X_t), W_t(v,w)>.
    Representation,
    /// Closed-form spectral / Mehler differentiation value (no paths).
    FiniteDifferenceSpectral,
}

#[derive(Debug, Clone)]
pub struct HessianEstimate {
    pub point: Vec<f64>,
    pub v: Vec<f64>,
    pub w: Vec<f64>,
    pub t: f64,
    pub value: f64,
    pub ci_halfwidth: f64,
    pub estimator: Estimator,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller on open-interval uniforms
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen::<f64>();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Parallel transport along the minimizing geodesic between unit vectors
/// a and b: v -> v - <v,b>/(1+<a,b>) (a+b).
fn transport(v: &mut [f64], a: &[f64], b: &[f64]) {
    let c = dot(a, b);
    let coef = dot(v, b) / (1.0 + c);
    for i in 0..v.len() {
        v[i] -= coef * (a[i] + b[i]);
    }
}

fn project_tangent(v: &mut [f64], x: &[f64]) {
    let c = dot(v, x);
    for i in 0..v.len() {
        v[i] -= c * x[i];
    }
}

fn normalize(v: &mut [f64]) {
    let n = dot(v, v).sqrt();
    for vi in v.iter_mut() {
        *vi /= n;
    }
}

/// Per-path state of the sphere integrator: position, the transported
/// direction pair, the scalar damping and the W_t correction vector.
struct SphereWalk {
    n: usize,
    x: Vec<f64>,
    pv: Vec<f64>,
    pw: Vec<f64>,
    wt: Vec<f64>,
    q: f64,
}

impl SphereWalk {
    fn new(n: usize, x0: &[f64], v: &[f64], w: &[f64]) -> Self {
        SphereWalk {
            n,
            x: x0.to_vec(),
            pv: v.to_vec(),
            pw: w.to_vec(),
            wt: vec![0.0; x0.len()],
            q: 1.0,
        }
    }

    fn step(&mut self, h: f64, rng: &mut ChaCha8Rng) {
        let dim = self.x.len();
        let ric = (self.n - 1) as f64; // Ric = (n-1) g on the unit sphere
        // tangent Brownian increment
        let mut db = vec![0.0; dim];
        for d in db.iter_mut() {
            *d = normal(rng) * h.sqrt();
        }
        project_tangent(&mut db, &self.x);
        // covariant Ito update of W_t at the current point, with
        // R(db, Qv)Qw = q^2 (<v,w> db - <db,w> v) in constant curvature
        let q2 = self.q * self.q;
        let vw = dot(&self.pv, &self.pw);
        let dbw = dot(&db, &self.pw);
        for i in 0..dim {
            self.wt[i] += q2 * (vw * db[i] - dbw * self.pv[i]) - 0.5 * ric * self.wt[i] * h;
        }
        // projected Euler step
        let old = self.x.clone();
        for i in 0..dim {
            self.x[i] += db[i];
        }
        normalize(&mut self.x);
        // transport the carried vectors to the new point
        transport(&mut self.pv, &old, &self.x);
        transport(&mut self.pw, &old, &self.x);
        transport(&mut self.wt, &old, &self.x);
        project_tangent(&mut self.pv, &self.x);
        project_tangent(&mut self.pw, &self.x);
        project_tangent(&mut self.wt, &self.x);
        self.q *= (-0.5 * ric * h).exp();
    }
}

/// Simulate full path bundles (with frames); intended for invariant checks
/// on modest path counts. The Hessian estimator streams paths instead.
pub fn simulate_paths(
    space: &ModelSpace,
    x0: &[f64],
    t: f64,
    step: f64,
    count: usize,
    seed: u64,
) -> Result<Vec<PathBundle>, McError> {
    if step > 1e-2 {
        return Err(McError::StepTooLarge(step));
    }
    let steps = (t / step).ceil().max(1.0) as usize;
    let h = t / steps as f64;
    match space.kind {
        SpaceKind::SphereN(n) => {
            let dim = n + 1;
            assert_eq!(x0.len(), dim, "sphere point has n+1 ambient coordinates");
            (0..count as u64)
                .map(|p| {
                    let mut rng = stream_rng(seed, p);
                    // initial frame: complete x0 to an orthonormal basis
                    let mut frame0: Vec<Vec<f64>> = Vec::new();
                    for i in 0..dim {
                        let mut e = vec![0.0; dim];
                        e[i] = 1.0;
                        project_tangent(&mut e, x0);
                        for f in &frame0 {
                            let c = dot(&e, f);
                            for (ei, fi) in e.iter_mut().zip(f) {
                                *ei -= c * fi;
                            }
                        }
                        if dot(&e, &e) > 1e-6 {
                            normalize(&mut e);
                            frame0.push(e);
                        }
                        if frame0.len() == n {
                            break;
                        }
                    }
                    let mut walk =
                        SphereWalk::new(n, x0, &frame0[0], &frame0[frame0.len() - 1]);
                    let mut frame = frame0;
                    let mut bundle = PathBundle {
                        times: vec![0.0],
                        positions: vec![x0.to_vec()],
                        frame: vec![frame.clone()],
                        q: vec![1.0],
                        seed,
                        step: h,
                    };
                    for k in 1..=steps {
                        let old = walk.x.clone();
                        walk.step(h, &mut rng);
                        let defect = (dot(&walk.x, &walk.x).sqrt() - 1.0).abs();
                        if defect > 1e-8 {
                            return Err(McError::StepTooLarge(step));
                        }
                        for f in frame.iter_mut() {
                            transport(f, &old, &walk.x);
                            project_tangent(f, &walk.x);
                        }
                        // re-orthonormalize (Gram-Schmidt) to bound drift
                        for i in 0..frame.len() {
                            for j in 0..i {
                                let c = dot(&frame[i], &frame[j]);
                                let prev = frame[j].clone();
                                for (a, b) in frame[i].iter_mut().zip(&prev) {
                                    *a -= c * b;
                                }
                            }
                            normalize(&mut frame[i]);
                        }
                        bundle.times.push(k as f64 * h);
                        bundle.positions.push(walk.x.clone());
                        bundle.frame.push(frame.clone());
                        bundle.q.push(walk.q);
                    }
                    Ok(bundle)
                })
                .collect()
        }
        SpaceKind::EuclideanN(n) => {
            let k = match space.potential {
                PotentialSpec::Quadratic { k } => k,
                _ => {
                    return Err(McError::PresetUnsupported(
                        "euclidean simulation needs a quadratic potential".into(),
                    ))
                }
            };
            assert_eq!(x0.len(), n);
            Ok((0..count as u64)
                .map(|p| {
                    let mut rng = stream_rng(seed, p);
                    let mut x = x0.to_vec();
                    let frame: Vec<Vec<f64>> = (0..n)
                        .map(|i| {
                            let mut e = vec![0.0; n];
                            e[i] = 1.0;
                            e
                        })
                        .collect();
                    let mut bundle = PathBundle {
                        times: vec![0.0],
                        positions: vec![x.clone()],
                        frame: vec![frame.clone()],
                        q: vec![1.0],
                        seed,
                        step: h,
                    };
                    let mut q = 1.0;
                    for s in 1..=steps {
                        for xi in x.iter_mut() {
                            *xi += -0.5 * k * *xi * h + normal(&mut rng) * h.sqrt();
                        }
                        q *= (-0.5 * k * h).exp();
                        bundle.times.push(s as f64 * h);
                        bundle.positions.push(x.clone());
                        bundle.frame.push(frame.clone());
                        bundle.q.push(q);
                    }
                    bundle
                })
                .collect())
        }
        SpaceKind::Line => Err(McError::PresetUnsupported(
            "path simulation supports the sphere and quadratic euclidean presets".into(),
        )),
    }
}

fn batch_ci(values: &[f64]) -> (f64, f64) {
    let nb = 32.min(values.len());
    let per = values.len() / nb;
    let means: Vec<f64> = (0..nb)
        .map(|b| {
            let lo = b * per;
            let hi = if b == nb - 1 { values.len() } else { lo + per };
            values[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect();
    let mean = means.iter().sum::<f64>() / nb as f64;
    let var = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (nb as f64 - 1.0);
    (mean, 1.96 * (var / nb as f64).sqrt())
}

fn one_sphere_value(
    n: usize,
    x0: &[f64],
    v: &[f64],
    w: &[f64],
    t: f64,
    h: f64,
    rng: &mut ChaCha8Rng,
) -> f64 {
    let steps = (t / h).round().max(1.0) as usize;
    let dt = t / steps as f64;
    let mut walk = SphereWalk::new(n, x0, v, w);
    for _ in 0..steps {
        walk.step(dt, rng);
    }
    let dim = x0.len();
    let u = walk.x[dim - 1];
    // f = last coordinate: Hess_f = -u g on tangent vectors, grad f = e - u x
    let hess_term = -u * walk.q * walk.q * dot(&walk.pv, &walk.pw);
    let grad_term = walk.wt[dim - 1] - u * dot(&walk.x, &walk.wt);
    hess_term + grad_term
}

/// Representation-formula Monte-Carlo estimate of Hess_{P_t f}(v, w) at x.
pub fn hessian_estimate(
    space: &ModelSpace,
    f: FieldPreset,
    x: &[f64],
    v: &[f64],
    w: &[f64],
    t: f64,
    mc: &McConfig,
) -> Result<HessianEstimate, McError> {
    if mc.step > 1e-2 {
        return Err(McError::StepTooLarge(mc.step));
    }
    let values: Vec<f64> = match (space.kind, f) {
        (SpaceKind::SphereN(n), FieldPreset::ZonalCoordinate) => (0..mc.count as u64)
            .into_par_iter()
            .map(|p| {
                let mut rng = stream_rng(mc.seed, p);
                one_sphere_value(n, x, v, w, t, mc.step, &mut rng)
            })
            .collect(),
        (SpaceKind::EuclideanN(1), preset) => {
            let k = match space.potential {
                PotentialSpec::Quadratic { k } => k,
                _ => {
                    return Err(McError::PresetUnsupported(
                        "euclidean estimator needs a quadratic potential".into(),
                    ))
                }
            };
            let fpp = |y: f64| match preset {
                FieldPreset::Coordinate => 0.0,
                FieldPreset::Square => 2.0,
                FieldPreset::Sine => -y.sin(),
                FieldPreset::ZonalCoordinate => f64::NAN,
            };
            if matches!(preset, FieldPreset::ZonalCoordinate) {
                return Err(McError::PresetUnsupported(
                    "zonal coordinate field lives on the sphere".into(),
                ));
            }
            let steps = (t / mc.step).round().max(1.0) as usize;
            let dt = t / steps as f64;
            (0..mc.count as u64)
                .into_par_iter()
                .map(|p| {
                    let mut rng = stream_rng(mc.seed, p);
                    let mut y = x[0];
                    for _ in 0..steps {
                        y += -0.5 * k * y * dt + normal(&mut rng) * dt.sqrt();
                    }
                    // flat space: W = 0, Q = e^{-Kt/2} id
                    (-k * t).exp() * fpp(y) * v[0] * w[0]
                })
                .collect()
        }
        _ => {
            return Err(McError::PresetUnsupported(format!(
                "no estimator for {f:?} on {:?}",
                space.kind
            )))
        }
    };
    let (value, ci) = batch_ci(&values);
    if !value.is_finite() || ci > 10.0 * value.abs().max(0.05) {
        return Err(McError::VarianceBlowup { value, ci });
    }
    Ok(HessianEstimate {
        point: x.to_vec(),
        v: v.to_vec(),
        w: w.to_vec(),
        t,
        value,
        ci_halfwidth: ci.max(f64::MIN_POSITIVE),
        estimator: Estimator::Representation,
    })
}

/// Closed-form value of Hess_{P_t f}(v, w) where a spectral or Mehler
/// oracle exists; None otherwise.
pub fn hessian_oracle(
    space: &ModelSpace,
    f: FieldPreset,
    x: &[f64],
    v: &[f64],
    w: &[f64],
    t: f64,
) -> Option<f64> {
    match (space.kind, f) {
        (SpaceKind::SphereN(n), FieldPreset::ZonalCoordinate) => {
            // P_t u = e^{-nt/2} u for the degree-1 zonal harmonic, whose
            // Hessian is -u g
            let u = x[x.len() - 1];
            Some(-(-0.5 * n as f64 * t).exp() * u * dot(v, w))
        }
        (SpaceKind::EuclideanN(1), preset) => {
            let k = match space.potential {
                PotentialSpec::Quadratic { k } => k,
                _ => return None,
            };
            let scale = (-k * t).exp() * v[0] * w[0];
            match preset {
                FieldPreset::Coordinate => Some(0.0),
                FieldPreset::Square => Some(2.0 * scale),
                // (P_t sin)'' = -e^{-Kt} P_t sin by the gradient commutation
                FieldPreset::Sine => {
                    Some(-scale * crate::semigroup::mehler_apply(k, &|y: f64| y.sin(), t, x[0]))
                }
                FieldPreset::ZonalCoordinate => None,
            }
        }
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HessianBoundKind {
    TypeIOp,
    TypeIHs,
    TypeIIOp,
    TypeIIHs,
}

/// a / (e^{at} - 1), continuous through a = 0.
fn rate_over_expm1(a: f64, t: f64) -> f64 {
    if a.abs() < 1e-12 {
        1.0 / t
    } else {
        a / (a * t).exp_m1()
    }
}

/// Monte-Carlo moments of the gradient field at time t:
/// (P_t |grad f|^2, its ci, P_t |grad f|, its ci).
fn gradient_moments(
    space: &ModelSpace,
    f: FieldPreset,
    x: &[f64],
    t: f64,
    mc: &McConfig,
) -> Result<(f64, f64, f64, f64), McError> {
    let pairs: Vec<(f64, f64)> = match (space.kind, f) {
        (SpaceKind::SphereN(n), FieldPreset::ZonalCoordinate) => {
            let steps = (t / mc.step).round().max(1.0) as usize;
            let dt = t / steps as f64;
            (0..mc.count as u64)
                .into_par_iter()
                .map(|p| {
                    // offset stream: independent of the estimator paths
                    let mut rng = stream_rng(mc.seed ^ 0x9E37_79B9, p);
                    let mut walk = SphereWalk::new(n, x, x, x);
                    for _ in 0..steps {
                        walk.step(dt, &mut rng);
                    }
                    let u = walk.x[x.len() - 1];
                    let g2 = (1.0 - u * u).max(0.0);
                    (g2, g2.sqrt())
                })
                .collect()
        }
        (SpaceKind::EuclideanN(1), preset) => {
            let k = match space.potential {
                PotentialSpec::Quadratic { k } => k,
                _ => {
                    return Err(McError::PresetUnsupported(
                        "euclidean moments need a quadratic potential".into(),
                    ))
                }
            };
            let fp = move |y: f64| match preset {
                FieldPreset::Coordinate => 1.0,
                FieldPreset::Square => 2.0 * y,
                FieldPreset::Sine => y.cos(),
                FieldPreset::ZonalCoordinate => f64::NAN,
            };
            let steps = (t / mc.step).round().max(1.0) as usize;
            let dt = t / steps as f64;
            (0..mc.count as u64)
                .into_par_iter()
                .map(|p| {
                    let mut rng = stream_rng(mc.seed ^ 0x9E37_79B9, p);
                    let mut y = x[0];
                    for _ in 0..steps {
                        y += -0.5 * k * y * dt + normal(&mut rng) * dt.sqrt();
                    }
                    let g = fp(y).abs();
                    (g * g, g)
                })
                .collect()
        }
        _ => {
            return Err(McError::PresetUnsupported(format!(
                "no gradient moments for {f:?} on {:?}",
                space.kind
            )))
        }
    };
    let m2: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let m1: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let (v2, c2) = batch_ci(&m2);
    let (v1, c1) = batch_ci(&m1);
    Ok((v2, c2, v1, c1))
}

/// Check one Hessian estimate of the semigroup against its Monte-Carlo
/// left-hand side: |Hess P_t f| in operator or Hilbert-Schmidt norm.
pub fn verify_hessian_bound(
    space: &ModelSpace,
    f: FieldPreset,
    x: &[f64],
    t: f64,
    which: HessianBoundKind,
    mc: &McConfig,
) -> Result<InequalityVerdict, McError> {
    let consts = curvature_constants(space)
        .map_err(|e| McError::HypothesisViolated(e.to_string()))?;
    let k = consts.k;
    if k <= 0.0 {
        return Err(McError::HypothesisViolated("needs K > 0".into()));
    }
    let n = consts.dimension as f64;
    let hs = matches!(which, HessianBoundKind::TypeIHs | HessianBoundKind::TypeIIHs);
    if hs && !consts.ric_exact {
        return Err(McError::HypothesisViolated(
            "the HS variants need Ric_V = K exactly".into(),
        ));
    }
    // LHS: our presets have Hess P_t f = c(x) g (sphere zonal) or a scalar
    // second derivative (1-D), so one directional estimate determines both
    // norms: op = |c|, HS = |c| sqrt(n)
    let (v, w) = principal_directions(space, x);
    let est = hessian_estimate(space, f, x, &v, &w, t, mc)?;
    let lhs_scale = if hs && matches!(space.kind, SpaceKind::SphereN(_)) {
        n.sqrt()
    } else {
        1.0
    };
    let lhs = est.value.abs() * lhs_scale;
    let (m2, c2, m1, c1) = gradient_moments(space, f, x, t, mc)?;
    let alpha = match which {
        HessianBoundKind::TypeIOp | HessianBoundKind::TypeIIOp => consts.alpha1,
        HessianBoundKind::TypeIHs | HessianBoundKind::TypeIIHs => consts.alpha2,
    };
    let beta_coef = if hs { n * consts.beta } else { consts.beta };
    let j = (k * t).exp_m1() / k;
    let rhs = match which {
        HessianBoundKind::TypeIOp | HessianBoundKind::TypeIHs => {
            let rate = ((-k * t).exp() * rate_over_expm1(k - 2.0 * alpha, t)).sqrt();
            rate * (m2.sqrt() + j.sqrt() * beta_coef / k * m1)
        }
        HessianBoundKind::TypeIIOp | HessianBoundKind::TypeIIHs => {
            let damp = (-0.5 * k * t).exp();
            damp * (1.0 / j.sqrt() + alpha / k.sqrt()) * m2.sqrt() + damp * beta_coef / k * m1
        }
    };
    // first-order error propagation through the RHS shape
    let d_m2 = if m2 > 0.0 { c2 / (2.0 * m2.sqrt()) } else { c2 };
    let rhs_ci = match which {
        HessianBoundKind::TypeIOp | HessianBoundKind::TypeIHs => {
            let rate = ((-k * t).exp() * rate_over_expm1(k - 2.0 * alpha, t)).sqrt();
            rate * (d_m2 + j.sqrt() * beta_coef / k * c1)
        }
        HessianBoundKind::TypeIIOp | HessianBoundKind::TypeIIHs => {
            let damp = (-0.5 * k * t).exp();
            damp * (1.0 / j.sqrt() + alpha / k.sqrt()) * d_m2 + damp * beta_coef / k * c1
        }
    };
    Ok(verdict(
        &format!("hessian-{which:?}-t={t}"),
        lhs,
        rhs,
        est.ci_halfwidth * lhs_scale + rhs_ci,
    ))
}

fn principal_directions(space: &ModelSpace, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
    match space.kind {
        SpaceKind::SphereN(_) => {
            let mut e = vec![0.0; x.len()];
            e[0] = 1.0;
            project_tangent(&mut e, x);
            normalize(&mut e);
            (e.clone(), e)
        }
        _ => {
            let e = vec![1.0; x.len()];
            (e.clone(), e)
        }
    }
}
