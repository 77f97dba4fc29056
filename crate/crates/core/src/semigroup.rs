//! Heat-semigroup evaluation P_t h together with de Bruijn's identity and
//! the Fisher-information decay check.
//!
//! Generator convention: P_t = e^{tL/2} with L = Laplacian + grad V, so all
//! eigenvalue factors and Ornstein-Uhlenbeck variances carry the 1/2.

use crate::bounds::{verdict, InequalityVerdict};
use crate::geometry::{curvature_constants, ModelSpace, PotentialSpec, SpaceKind};
use crate::measures::MeasurePair;
use crate::numerics::gauss_legendre;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SemigroupError {
    #[error("backend {backend:?} does not apply to this space/potential")]
    BackendMismatch { backend: Backend },
    #[error("PDE step lost positivity even at the minimum step size")]
    StepRejected,
    #[error("spectral tail {0:.3e} above tolerance at maximum degree")]
    TruncationError(f64),
    #[error("Fisher tail bound exceeds tolerance at maximum horizon")]
    TailTooFat,
    #[error("de Bruijn / Fisher decay require K > 0, got {0}")]
    NonPositiveK(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    /// Exact Gaussian-convolution representation for V = K|x|^2/2.
    MehlerOu,
    /// Crank-Nicolson for d_t u = (u'' - V'u')/2 with no-flux boundaries.
    Line1dPde,
    /// Gegenbauer coefficient decay for zonal densities on S^n.
    SphereZonal,
}

#[derive(Debug, Clone)]
pub struct SemigroupEngine {
    pub backend: Backend,
    pub space: ModelSpace,
    pub t_grid: Vec<f64>,
    pub tol: f64,
}

impl SemigroupEngine {
    pub fn new(backend: Backend, space: ModelSpace) -> Result<Self, SemigroupError> {
        let compatible = match backend {
            Backend::MehlerOu => {
                matches!(space.potential, PotentialSpec::Quadratic { .. })
                    && !matches!(space.kind, SpaceKind::SphereN(_))
            }
            Backend::Line1dPde => {
                matches!(space.kind, SpaceKind::Line | SpaceKind::EuclideanN(1))
            }
            Backend::SphereZonal => matches!(space.kind, SpaceKind::SphereN(_)),
        };
        if !compatible {
            return Err(SemigroupError::BackendMismatch { backend });
        }
        Ok(SemigroupEngine {
            backend,
            space,
            t_grid: vec![0.1, 0.25, 0.5, 1.0, 2.0],
            tol: 1e-6,
        })
    }

    pub fn with_t_grid(mut self, t_grid: Vec<f64>) -> Self {
        self.t_grid = t_grid;
        self
    }
}

/// State of the evolved density at time t, on the backend's grid.
#[derive(Debug, Clone)]
pub struct FlowSnapshot {
    pub t: f64,
    pub nodes: Vec<f64>,
    pub h_t: Vec<f64>,
    /// Fisher information of nu^t relative to mu.
    pub fisher: f64,
    /// Mass of P_t h against mu (should stay 1).
    pub mass: f64,
}

/// P_t f(x) for the OU semigroup via the Mehler formula:
/// X_t = x e^{-Kt/2} + sqrt((1-e^{-Kt})/K) * xi with xi standard normal.
pub fn mehler_apply(k: f64, f: &dyn Fn(f64) -> f64, t: f64, x: f64) -> f64 {
    if t == 0.0 {
        return f(x);
    }
    let decay = (-0.5 * k * t).exp();
    let s = ((1.0 - (-k * t).exp()) / k).sqrt();
    let (gx, gw) = gauss_legendre(96);
    // integrate against the standard normal on [-10, 10]
    let norm = (2.0 * std::f64::consts::PI).sqrt();
    gx.iter()
        .zip(&gw)
        .map(|(&xi, &w)| {
            let z = 10.0 * xi;
            10.0 * w * (-0.5 * z * z).exp() / norm * f(x * decay + s * z)
        })
        .sum()
}

/// d/dx P_t f = e^{-Kt/2} P_t f' for the OU semigroup.
pub fn mehler_grad(k: f64, df: &dyn Fn(f64) -> f64, t: f64, x: f64) -> f64 {
    (-0.5 * k * t).exp() * mehler_apply(k, df, t, x)
}

pub fn evolve(
    engine: &SemigroupEngine,
    pair: &MeasurePair,
    t: f64,
) -> Result<FlowSnapshot, SemigroupError> {
    assert!(t >= 0.0, "time must be nonnegative");
    match engine.backend {
        Backend::MehlerOu => evolve_mehler(engine, pair, t),
        Backend::Line1dPde => {
            let mut state = PdeState::init(engine, pair);
            state.advance(t)?;
            Ok(state.snapshot())
        }
        Backend::SphereZonal => {
            let spectral = ZonalSpectral::project(engine, pair)?;
            Ok(spectral.snapshot(pair, t))
        }
    }
}

fn evolve_mehler(
    engine: &SemigroupEngine,
    pair: &MeasurePair,
    t: f64,
) -> Result<FlowSnapshot, SemigroupError> {
    let k = match engine.space.potential {
        PotentialSpec::Quadratic { k } => k,
        _ => unreachable!("checked at engine construction"),
    };
    let nodes = pair.grid.nodes.clone();
    let h = |x: f64| pair.h_at(x);
    let dh = |x: f64| pair.dh_at(x);
    let h_t: Vec<f64> = nodes.iter().map(|&x| mehler_apply(k, &h, t, x)).collect();
    let grad: Vec<f64> = nodes.iter().map(|&x| mehler_grad(k, &dh, t, x)).collect();
    let fisher = pair.grid.integrate_values_mu(
        &h_t.iter()
            .zip(&grad)
            .map(|(&v, &g)| if v > 1e-300 { g * g / v } else { 0.0 })
            .collect::<Vec<_>>(),
    );
    let mass = pair.grid.integrate_values_mu(&h_t);
    Ok(FlowSnapshot {
        t,
        nodes,
        h_t,
        fisher,
        mass,
    })
}

/// Crank-Nicolson march of u_t = L u / 2 in flux form on a uniform grid.
/// The flux discretization conserves the mu-mass of u exactly, and the
/// no-flux boundary keeps P_t symmetric on the truncated domain.
struct PdeState {
    nodes: Vec<f64>,
    dx: f64,
    /// unnormalized e^{-V} at the nodes
    rho: Vec<f64>,
    /// mu-weights (trapezoid * normalized rho)
    mu_w: Vec<f64>,
    u: Vec<f64>,
    t: f64,
    dt: f64,
}

impl PdeState {
    fn init(engine: &SemigroupEngine, pair: &MeasurePair) -> Self {
        let m = pair.grid.nodes.len().max(256);
        let (a, b) = pair.domain;
        let dx = (b - a) / (m - 1) as f64;
        let nodes: Vec<f64> = (0..m).map(|i| a + dx * i as f64).collect();
        let rho: Vec<f64> = nodes
            .iter()
            .map(|&x| (-engine.space.potential.value(x)).exp())
            .collect();
        let mut mu_w: Vec<f64> = rho.iter().map(|&r| r * dx).collect();
        mu_w[0] *= 0.5;
        mu_w[m - 1] *= 0.5;
        let z: f64 = mu_w.iter().sum();
        mu_w.iter_mut().for_each(|w| *w /= z);
        let u: Vec<f64> = nodes.iter().map(|&x| pair.h_at(x)).collect();
        let dt = (1e-3f64).min(dx * dx);
        PdeState {
            nodes,
            dx,
            rho,
            mu_w,
            u,
            t: 0.0,
            dt,
        }
    }

    /// One CN step of size dt; returns false if positivity was lost.
    fn step(&mut self, dt: f64) -> bool {
        let m = self.u.len();
        let co = dt / (4.0 * self.dx * self.dx); // dt/2 * 1/2 * 1/dx^2
        // rho at half points
        let mut lower = vec![0.0; m];
        let mut diag = vec![0.0; m];
        let mut upper = vec![0.0; m];
        let mut rhs = vec![0.0; m];
        for i in 0..m {
            let rl = if i > 0 {
                0.5 * (self.rho[i - 1] + self.rho[i])
            } else {
                0.0
            };
            let ru = if i + 1 < m {
                0.5 * (self.rho[i] + self.rho[i + 1])
            } else {
                0.0
            };
            let cl = co * rl / self.rho[i];
            let cu = co * ru / self.rho[i];
            lower[i] = -cl;
            upper[i] = -cu;
            diag[i] = 1.0 + cl + cu;
            rhs[i] = self.u[i] * (1.0 - cl - cu)
                + if i > 0 { cl * self.u[i - 1] } else { 0.0 }
                + if i + 1 < m { cu * self.u[i + 1] } else { 0.0 };
        }
        // Thomas solve
        let mut cp = vec![0.0; m];
        let mut dp = vec![0.0; m];
        cp[0] = upper[0] / diag[0];
        dp[0] = rhs[0] / diag[0];
        for i in 1..m {
            let denom = diag[i] - lower[i] * cp[i - 1];
            cp[i] = upper[i] / denom;
            dp[i] = (rhs[i] - lower[i] * dp[i - 1]) / denom;
        }
        let mut next = vec![0.0; m];
        next[m - 1] = dp[m - 1];
        for i in (0..m - 1).rev() {
            next[i] = dp[i] - cp[i] * next[i + 1];
        }
        if next.iter().any(|&v| v < -1e-10) {
            return false;
        }
        self.u = next;
        true
    }

    fn advance(&mut self, target: f64) -> Result<(), SemigroupError> {
        while self.t < target - 1e-15 {
            let mut dt = self.dt.min(target - self.t);
            let saved = self.u.clone();
            loop {
                if self.step(dt) {
                    break;
                }
                self.u = saved.clone();
                dt *= 0.5;
                if dt < 1e-9 {
                    return Err(SemigroupError::StepRejected);
                }
            }
            self.t += dt;
        }
        Ok(())
    }

    fn fisher(&self) -> f64 {
        let m = self.u.len();
        let mut total = 0.0;
        for i in 0..m {
            let du = if i >= 2 && i + 2 < m {
                (-self.u[i + 2] + 8.0 * self.u[i + 1] - 8.0 * self.u[i - 1] + self.u[i - 2])
                    / (12.0 * self.dx)
            } else if i == 0 {
                (-3.0 * self.u[0] + 4.0 * self.u[1] - self.u[2]) / (2.0 * self.dx)
            } else if i == m - 1 {
                (3.0 * self.u[m - 1] - 4.0 * self.u[m - 2] + self.u[m - 3]) / (2.0 * self.dx)
            } else {
                (self.u[i + 1] - self.u[i - 1]) / (2.0 * self.dx)
            };
            if self.u[i] > 1e-300 {
                total += self.mu_w[i] * du * du / self.u[i];
            }
        }
        total
    }

    fn snapshot(&self) -> FlowSnapshot {
        let mass = self
            .u
            .iter()
            .zip(&self.mu_w)
            .map(|(&u, &w)| u * w)
            .sum();
        FlowSnapshot {
            t: self.t,
            nodes: self.nodes.clone(),
            h_t: self.u.clone(),
            fisher: self.fisher(),
            mass,
        }
    }
}

/// Gegenbauer expansion of a zonal density; degree-l coefficients decay as
/// e^{-t l(l+n-1)/2}.
struct ZonalSpectral {
    n: usize,
    degree: usize,
    coeffs: Vec<f64>,
    /// basis[l][j] = C_l^lambda(u_j) on the pair grid
    basis: Vec<Vec<f64>>,
    dbasis: Vec<Vec<f64>>,
}

/// Gegenbauer values C_l^lambda(u) for l = 0..=lmax; lambda = 1/2 gives
/// the Legendre polynomials.
pub(crate) fn gegenbauer(lambda: f64, lmax: usize, u: f64) -> Vec<f64> {
    let mut c = Vec::with_capacity(lmax + 1);
    c.push(1.0);
    if lmax >= 1 {
        c.push(2.0 * lambda * u);
    }
    for l in 2..=lmax {
        let lf = l as f64;
        let next =
            (2.0 * u * (lf + lambda - 1.0) * c[l - 1] - (lf + 2.0 * lambda - 2.0) * c[l - 2]) / lf;
        c.push(next);
    }
    c
}

impl ZonalSpectral {
    fn project(engine: &SemigroupEngine, pair: &MeasurePair) -> Result<Self, SemigroupError> {
        let n = engine.space.dimension();
        let lambda = (n as f64 - 1.0) / 2.0;
        let mut degree = 128usize;
        loop {
            let basis: Vec<Vec<f64>> = {
                let mut per_l = vec![Vec::with_capacity(pair.grid.nodes.len()); degree + 1];
                for &u in &pair.grid.nodes {
                    let vals = gegenbauer(lambda, degree, u);
                    for (l, v) in vals.into_iter().enumerate() {
                        per_l[l].push(v);
                    }
                }
                per_l
            };
            let dbasis: Vec<Vec<f64>> = {
                // d/du C_l^lambda = 2 lambda C_{l-1}^{lambda+1}
                let mut per_l = vec![vec![0.0; pair.grid.nodes.len()]; degree + 1];
                for (j, &u) in pair.grid.nodes.iter().enumerate() {
                    let up = gegenbauer(lambda + 1.0, degree.saturating_sub(1), u);
                    for l in 1..=degree {
                        per_l[l][j] = 2.0 * lambda * up[l - 1];
                    }
                }
                per_l
            };
            let mut coeffs = Vec::with_capacity(degree + 1);
            for b in &basis {
                let num = pair.grid.integrate_values_mu(
                    &b.iter()
                        .zip(&pair.grid.h)
                        .map(|(&bv, &hv)| bv * hv)
                        .collect::<Vec<_>>(),
                );
                let den = pair
                    .grid
                    .integrate_values_mu(&b.iter().map(|&bv| bv * bv).collect::<Vec<_>>());
                coeffs.push(num / den);
            }
            // spectral tail: sup-norm contribution of the top decade
            let tail: f64 = (degree - 8..=degree)
                .map(|l| {
                    coeffs[l].abs()
                        * basis[l].iter().fold(0.0f64, |m, &v| m.max(v.abs()))
                })
                .sum();
            if tail < engine.tol.min(1e-10).max(1e-12) || tail < 1e-10 {
                return Ok(ZonalSpectral {
                    n,
                    degree,
                    coeffs,
                    basis,
                    dbasis,
                });
            }
            degree *= 2;
            if degree > 512 {
                return Err(SemigroupError::TruncationError(tail));
            }
        }
    }

    fn snapshot(&self, pair: &MeasurePair, t: f64) -> FlowSnapshot {
        let nf = self.n as f64;
        let m = pair.grid.nodes.len();
        let mut h_t = vec![0.0; m];
        let mut dh_t = vec![0.0; m];
        for l in 0..=self.degree {
            let lf = l as f64;
            let factor = self.coeffs[l] * (-0.5 * t * lf * (lf + nf - 1.0)).exp();
            if factor == 0.0 {
                continue;
            }
            for j in 0..m {
                h_t[j] += factor * self.basis[l][j];
                dh_t[j] += factor * self.dbasis[l][j];
            }
        }
        let fisher = pair.grid.integrate_values_mu(
            &pair
                .grid
                .nodes
                .iter()
                .enumerate()
                .map(|(j, &u)| {
                    if h_t[j] > 1e-300 {
                        (1.0 - u * u) * dh_t[j] * dh_t[j] / h_t[j]
                    } else {
                        0.0
                    }
                })
                .collect::<Vec<_>>(),
        );
        let mass = pair.grid.integrate_values_mu(&h_t);
        FlowSnapshot {
            t,
            nodes: pair.grid.nodes.clone(),
            h_t,
            fisher,
            mass,
        }
    }
}

/// H(nu|mu) = (1/2) int_0^inf I(nu^t|mu) dt, integrated numerically with the
/// tail bounded by e^{-KT} I_0 / (2K).
pub fn de_bruijn_entropy(
    engine: &SemigroupEngine,
    pair: &MeasurePair,
) -> Result<f64, SemigroupError> {
    let k = curvature_constants(&engine.space)
        .map_err(|_| SemigroupError::BackendMismatch {
            backend: engine.backend,
        })?
        .k;
    if k <= 0.0 {
        return Err(SemigroupError::NonPositiveK(k));
    }
    let i0 = evolve(engine, pair, 0.0)?.fisher;
    if i0 == 0.0 {
        return Ok(0.0);
    }
    let tol = engine.tol.max(1e-9);
    // horizon with tail e^{-KT} I0 / (2K) < tol/2
    let t_max = ((i0 / (k * tol)).ln() / k).max(1.0);
    if t_max > 200.0 {
        return Err(SemigroupError::TailTooFat);
    }
    // substitute s = 1 - e^{-Kt}: the integrand I(t)/(K(1-s)) is bounded
    // and smooth, so a fixed Gauss rule converges fast
    let (gx, gw) = gauss_legendre(96);
    let s_max = 1.0 - (-k * t_max).exp();
    let times: Vec<f64> = gx
        .iter()
        .map(|&xi| {
            let s = 0.5 * s_max * (xi + 1.0);
            -(1.0 - s).ln() / k
        })
        .collect();
    let fishers = fisher_at_times(engine, pair, &times)?;
    let mut integral = 0.0;
    for ((&xi, &w), i_t) in gx.iter().zip(&gw).zip(&fishers) {
        let s = 0.5 * s_max * (xi + 1.0);
        integral += 0.5 * s_max * w * i_t / (k * (1.0 - s));
    }
    Ok(0.5 * integral)
}

/// Fisher information at an increasing list of times. The PDE backend
/// marches once and records along the way; other backends evaluate directly.
fn fisher_at_times(
    engine: &SemigroupEngine,
    pair: &MeasurePair,
    times: &[f64],
) -> Result<Vec<f64>, SemigroupError> {
    match engine.backend {
        Backend::Line1dPde => {
            let mut state = PdeState::init(engine, pair);
            let mut out = Vec::with_capacity(times.len());
            for &t in times {
                state.advance(t)?;
                out.push(state.fisher());
            }
            Ok(out)
        }
        _ => times
            .iter()
            .map(|&t| Ok(evolve(engine, pair, t)?.fisher))
            .collect(),
    }
}

/// Check I(nu^t|mu) <= e^{-Kt} I(nu|mu) at every time of the engine grid.
pub fn fisher_decay_check(
    engine: &SemigroupEngine,
    pair: &MeasurePair,
    k: f64,
) -> Result<Vec<InequalityVerdict>, SemigroupError> {
    if k <= 0.0 {
        return Err(SemigroupError::NonPositiveK(k));
    }
    let i0 = evolve(engine, pair, 0.0)?.fisher;
    let mut times = engine.t_grid.clone();
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let fishers = fisher_at_times(engine, pair, &times)?;
    Ok(times
        .iter()
        .zip(&fishers)
        .map(|(&t, &i_t)| {
            verdict(
                &format!("fisher-decay t={t}"),
                i_t,
                (-k * t).exp() * i0,
                1e-6 * (1.0 + i0),
            )
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::entropy;
    use crate::measures::{make_pair, DensitySpec};
    use approx::assert_relative_eq;

    fn gaussian_pair(spec: DensitySpec) -> MeasurePair {
        make_pair(&ModelSpace::gaussian(1, 1.0), spec, 2048).unwrap()
    }

    fn mehler_engine() -> SemigroupEngine {
        SemigroupEngine::new(Backend::MehlerOu, ModelSpace::gaussian(1, 1.0)).unwrap()
    }

    #[test]
    fn identity_at_t0() {
        let pair = gaussian_pair(DensitySpec::GaussianScale { sigma2: 2.0 });
        let snap = evolve(&mehler_engine(), &pair, 0.0).unwrap();
        for (j, &x) in snap.nodes.iter().enumerate() {
            assert_relative_eq!(snap.h_t[j], pair.h_at(x), epsilon = 1e-12);
        }
    }

    #[test]
    fn constant_density_is_invariant() {
        let pair = gaussian_pair(DensitySpec::Identity);
        for &t in &[0.3, 1.0] {
            let snap = evolve(&mehler_engine(), &pair, t).unwrap();
            for &v in &snap.h_t {
                assert_relative_eq!(v, 1.0, epsilon = 1e-9);
            }
            assert!(snap.fisher.abs() < 1e-12);
        }
    }

    #[test]
    fn mehler_gaussian_scale_variance_ode() {
        // sigma_t^2 = 1 + (sigma_0^2 - 1) e^{-t} for K = 1
        let s0 = 2.0;
        let t = 0.7;
        let st = 1.0 + (s0 - 1.0) * (-t as f64).exp();
        let pair = gaussian_pair(DensitySpec::GaussianScale { sigma2: s0 });
        let oracle = gaussian_pair(DensitySpec::GaussianScale { sigma2: st });
        let snap = evolve(&mehler_engine(), &pair, t).unwrap();
        for (j, &x) in snap.nodes.iter().enumerate() {
            if x.abs() < 6.0 {
                assert_relative_eq!(snap.h_t[j], oracle.h_at(x), epsilon = 1e-8);
            }
        }
        // Fisher of the evolved flow matches (sigma^2-1)^2/sigma^2
        assert_relative_eq!(snap.fisher, (st - 1.0).powi(2) / st, epsilon = 1e-8);
    }

    #[test]
    fn mass_conserved_all_backends() {
        let pair = gaussian_pair(DensitySpec::GaussianShift { m: 1.0 });
        for backend in [Backend::MehlerOu, Backend::Line1dPde] {
            let engine = SemigroupEngine::new(backend, ModelSpace::gaussian(1, 1.0)).unwrap();
            for &t in &[0.2, 1.0] {
                let snap = evolve(&engine, &pair, t).unwrap();
                assert!((snap.mass - 1.0).abs() < 1e-6, "{backend:?}: {}", snap.mass);
            }
        }
        let sphere = ModelSpace::sphere(2).unwrap();
        let pair = make_pair(&sphere, DensitySpec::SphereVonMises { kappa: 1.0 }, 256).unwrap();
        let engine = SemigroupEngine::new(Backend::SphereZonal, sphere).unwrap();
        let snap = evolve(&engine, &pair, 0.5).unwrap();
        assert!((snap.mass - 1.0).abs() < 1e-6);
    }

    #[test]
    fn zonal_degree_one_decay() {
        // h = 1 + c u has l = 1 eigenvalue l(l+n-1) = 2, so factor e^{-t}
        let sphere = ModelSpace::sphere(2).unwrap();
        let kappa = 0.8;
        let pair = make_pair(&sphere, DensitySpec::SphereVonMises { kappa: 1e-6 }, 256).unwrap();
        // small kappa: h ~ 1 + kappa u in first order; use exact series instead
        let _ = kappa;
        let engine = SemigroupEngine::new(Backend::SphereZonal, sphere).unwrap();
        let t = 0.9;
        let snap0 = evolve(&engine, &pair, 0.0).unwrap();
        let snap = evolve(&engine, &pair, t).unwrap();
        // compare linear coefficient: c(t)/c(0) = e^{-t}
        let c0: f64 = pair.grid.integrate_values_mu(
            &snap0
                .nodes
                .iter()
                .zip(&snap0.h_t)
                .map(|(&u, &h)| 3.0 * u * h)
                .collect::<Vec<_>>(),
        );
        let ct: f64 = pair.grid.integrate_values_mu(
            &snap
                .nodes
                .iter()
                .zip(&snap.h_t)
                .map(|(&u, &h)| 3.0 * u * h)
                .collect::<Vec<_>>(),
        );
        assert_relative_eq!(ct / c0, (-t as f64).exp(), epsilon = 1e-8);
    }

    #[test]
    fn pde_matches_mehler_on_gaussian() {
        let pair = gaussian_pair(DensitySpec::GaussianScale { sigma2: 2.0 });
        let t = 0.5;
        let mehler = evolve(&mehler_engine(), &pair, t).unwrap();
        let engine = SemigroupEngine::new(Backend::Line1dPde, ModelSpace::gaussian(1, 1.0)).unwrap();
        let pde = evolve(&engine, &pair, t).unwrap();
        assert_relative_eq!(pde.fisher, mehler.fisher, max_relative = 1e-3);
    }

    #[test]
    fn semigroup_property_pde() {
        let pair = gaussian_pair(DensitySpec::GaussianShift { m: 1.0 });
        let engine = SemigroupEngine::new(Backend::Line1dPde, ModelSpace::gaussian(1, 1.0)).unwrap();
        let (s, t) = (0.3, 0.4);
        let direct = evolve(&engine, &pair, s + t).unwrap();
        let mut state = PdeState::init(&engine, &pair);
        state.advance(s).unwrap();
        state.advance(s + t).unwrap();
        let composed = state.snapshot();
        let sup = direct
            .h_t
            .iter()
            .zip(&composed.h_t)
            .map(|(&a, &b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(sup < 1e-6, "sup difference {sup}");
    }

    #[test]
    fn semigroup_property_mehler_via_family() {
        // P_t applied to the time-s density of a scale family equals the
        // time-(s+t) density: compare pointwise on a common set of points
        let s0 = 3.0f64;
        let (s, t) = (0.4, 0.6);
        let sigma_s = 1.0 + (s0 - 1.0) * (-s as f64).exp();
        let h_of = |sigma2: f64| {
            move |x: f64| (x * x / 2.0 * (1.0 - 1.0 / sigma2)).exp() / sigma2.sqrt()
        };
        let h0 = h_of(s0);
        let hs = h_of(sigma_s);
        let mut sup: f64 = 0.0;
        for i in 0..=60 {
            let x = -3.0 + 0.1 * i as f64;
            let direct = mehler_apply(1.0, &h0, s + t, x);
            let composed = mehler_apply(1.0, &hs, t, x);
            sup = sup.max((direct - composed).abs());
        }
        assert!(sup < 1e-6, "sup difference {sup}");
    }

    #[test]
    fn symmetry_of_p_t() {
        // int (P_t f) g dmu = int f (P_t g) dmu
        let pair = gaussian_pair(DensitySpec::Identity);
        let t = 0.8;
        let f = |x: f64| (x * 0.7).cos();
        let g = |x: f64| 1.0 / (1.0 + x * x);
        let lhs = pair
            .grid
            .integrate_mu(|x| mehler_apply(1.0, &f, t, x) * g(x));
        let rhs = pair
            .grid
            .integrate_mu(|x| f(x) * mehler_apply(1.0, &g, t, x));
        assert_relative_eq!(lhs, rhs, epsilon = 1e-6);
    }

    #[test]
    fn de_bruijn_matches_entropy_gaussian() {
        for spec in [
            DensitySpec::GaussianScale { sigma2: 2.0 },
            DensitySpec::GaussianShift { m: 1.0 },
        ] {
            let pair = gaussian_pair(spec);
            let h_direct = entropy(&pair);
            let h_flow = de_bruijn_entropy(&mehler_engine(), &pair).unwrap();
            assert!(
                (h_flow - h_direct).abs() <= (1e-4f64).max(1e-3 * h_direct),
                "{spec:?}: {h_flow} vs {h_direct}"
            );
        }
    }

    #[test]
    fn fisher_decay_shift_is_exact() {
        let pair = gaussian_pair(DensitySpec::GaussianShift { m: 1.0 });
        let verdicts = fisher_decay_check(&mehler_engine(), &pair, 1.0).unwrap();
        for v in verdicts {
            assert!(v.holds, "{v:?}");
            assert!(v.margin.abs() < 1e-6, "shift decay should be tight: {v:?}");
        }
    }

    #[test]
    fn fisher_decay_scale_is_strict() {
        let pair = gaussian_pair(DensitySpec::GaussianScale { sigma2: 2.0 });
        let t = 0.5;
        let i0 = evolve(&mehler_engine(), &pair, 0.0).unwrap().fisher;
        let i_t = evolve(&mehler_engine(), &pair, t).unwrap().fisher;
        assert!(i_t < (-t as f64).exp() * i0);
    }
}
