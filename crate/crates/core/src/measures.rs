//! Reference measure mu = e^{-V} vol and test measure nu = h mu.
//!
//! 1-D measures live on a truncated domain with composite Gauss-Legendre
//! panels; spherical measures are zonal and discretized in the axial
//! coordinate u = <x, pole>. Densities are handled in log form.

use crate::geometry::{ModelSpace, PotentialSpec, SpaceKind};
use crate::numerics::gauss_legendre;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeasureError {
    #[error("normalization diverges on the extended domain")]
    NonIntegrable,
    #[error("density non-positive at grid node x = {0}")]
    NegativeDensity(f64),
    #[error("rejection sampler acceptance rate below 1e-4")]
    RejectionStall,
    #[error("density family {family} is not valid on this space: {reason}")]
    IncompatibleFamily { family: String, reason: String },
}

/// Density descriptor of nu relative to mu.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum DensitySpec {
    /// nu = mu.
    Identity,
    /// Centered Gaussian with variance scaled by sigma2 (flat spaces).
    GaussianScale { sigma2: f64 },
    /// Gaussian shifted by m (flat spaces).
    GaussianShift { m: f64 },
    /// Shifted copy of the quartic reference measure (line).
    QuarticTilt { a: f64, shift: f64 },
    /// h proportional to exp(kappa * <x, pole>) on the sphere.
    SphereVonMises { kappa: f64 },
}

impl DensitySpec {
    /// Unnormalized log h; the coordinate is x in 1-D and u = <x, pole>
    /// on the sphere.
    fn log_h_raw(&self, space: &ModelSpace, x: f64) -> f64 {
        match *self {
            DensitySpec::Identity => 0.0,
            DensitySpec::GaussianScale { sigma2 } => {
                let k = quadratic_k(space);
                -0.5 * sigma2.ln() + 0.5 * k * x * x * (1.0 - 1.0 / sigma2)
            }
            DensitySpec::GaussianShift { m } => {
                let k = quadratic_k(space);
                k * m * x - 0.5 * k * m * m
            }
            DensitySpec::QuarticTilt { a, shift } => {
                let u = PotentialSpec::Quartic { a };
                space.potential.value(x) - u.value(x - shift)
            }
            DensitySpec::SphereVonMises { kappa } => kappa * x,
        }
    }

    /// d/dx of log h (d/du on the sphere).
    fn dlog_h_raw(&self, space: &ModelSpace, x: f64) -> f64 {
        match *self {
            DensitySpec::Identity => 0.0,
            DensitySpec::GaussianScale { sigma2 } => {
                quadratic_k(space) * x * (1.0 - 1.0 / sigma2)
            }
            DensitySpec::GaussianShift { m } => quadratic_k(space) * m,
            DensitySpec::QuarticTilt { a, shift } => {
                let u = PotentialSpec::Quartic { a };
                space.potential.grad(x) - u.grad(x - shift)
            }
            DensitySpec::SphereVonMises { kappa } => kappa,
        }
    }

    fn check_compat(&self, space: &ModelSpace) -> Result<(), MeasureError> {
        let bad = |reason: &str| Err(MeasureError::IncompatibleFamily {
            family: format!("{self:?}"),
            reason: reason.into(),
        });
        match self {
            DensitySpec::Identity => Ok(()),
            DensitySpec::GaussianScale { sigma2 } => {
                if *sigma2 <= 0.0 {
                    return bad("sigma2 must be positive");
                }
                match space.potential {
                    PotentialSpec::Quadratic { .. } => Ok(()),
                    _ => bad("gaussian families need a quadratic potential"),
                }
            }
            DensitySpec::GaussianShift { .. } => match space.potential {
                PotentialSpec::Quadratic { .. } => Ok(()),
                _ => bad("gaussian families need a quadratic potential"),
            },
            DensitySpec::QuarticTilt { a, .. } => match space.potential {
                PotentialSpec::Quartic { a: sa } if (sa - a).abs() < 1e-12 => Ok(()),
                _ => bad("quartic tilt needs the matching quartic potential"),
            },
            DensitySpec::SphereVonMises { .. } => match space.kind {
                SpaceKind::SphereN(_) => Ok(()),
                _ => bad("von Mises family lives on the sphere"),
            },
        }
    }
}

fn quadratic_k(space: &ModelSpace) -> f64 {
    match space.potential {
        PotentialSpec::Quadratic { k } => k,
        _ => panic!("gaussian density family on non-quadratic potential"),
    }
}

/// Quadrature grid: nodes, raw Gauss-Legendre weights and panel boundaries.
#[derive(Debug, Clone)]
pub struct Grid {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub panel_edges: Vec<f64>,
    /// Base measure density at each node (mu-pdf in 1-D, axial mu density
    /// on the sphere), already normalized.
    pub mu_density: Vec<f64>,
    /// Normalized density of nu relative to mu at each node.
    pub h: Vec<f64>,
}

impl Grid {
    /// Integral of f against mu on the grid.
    pub fn integrate_mu(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .zip(&self.mu_density)
            .map(|((&x, &w), &d)| w * d * f(x))
            .sum()
    }

    /// Integral of f against nu on the grid.
    pub fn integrate_nu(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .zip(self.mu_density.iter().zip(&self.h))
            .map(|((&x, &w), (&d, &h))| w * d * h * f(x))
            .sum()
    }

    /// Integral of node values against mu.
    pub fn integrate_values_mu(&self, values: &[f64]) -> f64 {
        values
            .iter()
            .zip(&self.weights)
            .zip(&self.mu_density)
            .map(|((&v, &w), &d)| w * d * v)
            .sum()
    }
}

/// mu = e^{-V} vol (normalized) together with nu = h mu.
#[derive(Debug, Clone)]
pub struct MeasurePair {
    pub space: ModelSpace,
    pub spec: DensitySpec,
    pub grid: Grid,
    /// log of the computed partition function of mu.
    pub log_z_mu: f64,
    /// log of the computed normalization of h.
    pub log_c_nu: f64,
    pub domain: (f64, f64),
}

const NODES_PER_PANEL: usize = 24;
/// log-density drop relative to the mode at which the domain is truncated;
/// e^{-45} per side is far below the 1e-12 tail-mass target.
const TAIL_LOG_DROP: f64 = 45.0;

pub fn make_pair(
    space: &ModelSpace,
    spec: DensitySpec,
    resolution: usize,
) -> Result<MeasurePair, MeasureError> {
    assert!(resolution >= 64, "resolution must be at least 64");
    spec.check_compat(space)?;
    match space.kind {
        SpaceKind::EuclideanN(1) | SpaceKind::Line => make_pair_1d(space, spec, resolution),
        SpaceKind::SphereN(_) => make_pair_sphere(space, spec, resolution),
        SpaceKind::EuclideanN(n) => Err(MeasureError::IncompatibleFamily {
            family: format!("{spec:?}"),
            reason: format!("grids are 1-D or spherical; R^{n} unsupported"),
        }),
    }
}

fn make_pair_1d(
    space: &ModelSpace,
    spec: DensitySpec,
    resolution: usize,
) -> Result<MeasurePair, MeasureError> {
    // Expand the domain by doubling until both log-densities have dropped
    // far below their mode values at the endpoints.
    let log_mu = |x: f64| -space.potential.value(x);
    let log_nu = |x: f64| -space.potential.value(x) + spec.log_h_raw(space, x);
    let mode_mu = log_mu(0.0).max(log_mu(1.0)).max(log_mu(-1.0));
    let mode_nu = (-20..=20)
        .map(|i| log_nu(i as f64 * 0.5))
        .fold(f64::NEG_INFINITY, f64::max);
    let mut half = 2.0;
    loop {
        let ok = [half, -half].iter().all(|&e| {
            log_mu(e) < mode_mu - TAIL_LOG_DROP && log_nu(e) < mode_nu - TAIL_LOG_DROP
        });
        if ok {
            break;
        }
        half *= 2.0;
        if half > 1e6 {
            return Err(MeasureError::NonIntegrable);
        }
    }
    let (a, b) = (-half, half);

    let panels = (resolution / NODES_PER_PANEL).max(8);
    let (gx, gw) = gauss_legendre(NODES_PER_PANEL);
    let mut nodes = Vec::with_capacity(panels * NODES_PER_PANEL);
    let mut weights = Vec::with_capacity(panels * NODES_PER_PANEL);
    let mut panel_edges = Vec::with_capacity(panels + 1);
    for p in 0..panels {
        let pa = a + (b - a) * p as f64 / panels as f64;
        let pb = a + (b - a) * (p + 1) as f64 / panels as f64;
        panel_edges.push(pa);
        let c = 0.5 * (pb - pa);
        let d = 0.5 * (pa + pb);
        for (xi, wi) in gx.iter().zip(&gw) {
            nodes.push(c * xi + d);
            weights.push(c * wi);
        }
    }
    panel_edges.push(b);

    // normalize mu, then h
    let z_mu: f64 = nodes
        .iter()
        .zip(&weights)
        .map(|(&x, &w)| w * log_mu(x).exp())
        .sum();
    if !z_mu.is_finite() || z_mu <= 0.0 {
        return Err(MeasureError::NonIntegrable);
    }
    let log_z_mu = z_mu.ln();
    let mu_density: Vec<f64> = nodes.iter().map(|&x| (log_mu(x) - log_z_mu).exp()).collect();
    let c_nu: f64 = nodes
        .iter()
        .zip(&weights)
        .zip(&mu_density)
        .map(|((&x, &w), &d)| w * d * spec.log_h_raw(space, x).exp())
        .sum();
    if !c_nu.is_finite() || c_nu <= 0.0 {
        return Err(MeasureError::NonIntegrable);
    }
    let log_c_nu = c_nu.ln();
    let h: Vec<f64> = nodes
        .iter()
        .map(|&x| (spec.log_h_raw(space, x) - log_c_nu).exp())
        .collect();
    if let Some(i) = h.iter().position(|&v| v <= 0.0) {
        return Err(MeasureError::NegativeDensity(nodes[i]));
    }

    Ok(MeasurePair {
        space: space.clone(),
        spec,
        grid: Grid {
            nodes,
            weights,
            panel_edges,
            mu_density,
            h,
        },
        log_z_mu,
        log_c_nu,
        domain: (a, b),
    })
}

/// Zonal grid in the axial coordinate u on [-1, 1]; mu_density carries the
/// normalized surface factor (1-u^2)^{(n-2)/2}.
fn make_pair_sphere(
    space: &ModelSpace,
    spec: DensitySpec,
    resolution: usize,
) -> Result<MeasurePair, MeasureError> {
    let n = space.dimension();
    let (gx, gw) = gauss_legendre(resolution);
    let raw: Vec<f64> = gx
        .iter()
        .map(|&u| (1.0 - u * u).powf((n as f64 - 2.0) / 2.0))
        .collect();
    let z: f64 = raw.iter().zip(&gw).map(|(&r, &w)| r * w).sum();
    let mu_density: Vec<f64> = raw.iter().map(|&r| r / z).collect();
    let c_nu: f64 = gx
        .iter()
        .zip(&gw)
        .zip(&mu_density)
        .map(|((&u, &w), &d)| w * d * spec.log_h_raw(space, u).exp())
        .sum();
    let log_c_nu = c_nu.ln();
    let h: Vec<f64> = gx
        .iter()
        .map(|&u| (spec.log_h_raw(space, u) - log_c_nu).exp())
        .collect();
    Ok(MeasurePair {
        space: space.clone(),
        spec,
        grid: Grid {
            nodes: gx,
            weights: gw,
            panel_edges: vec![-1.0, 1.0],
            mu_density,
            h,
        },
        log_z_mu: z.ln(),
        log_c_nu,
        domain: (-1.0, 1.0),
    })
}

impl MeasurePair {
    /// Normalized relative density h at an arbitrary coordinate.
    pub fn h_at(&self, x: f64) -> f64 {
        (self.spec.log_h_raw(&self.space, x) - self.log_c_nu).exp()
    }

    /// Analytic derivative of h (in x for 1-D, in u on the sphere).
    pub fn dh_at(&self, x: f64) -> f64 {
        self.h_at(x) * self.spec.dlog_h_raw(&self.space, x)
    }

    /// Normalized mu-density at x (1-D only).
    pub fn mu_pdf(&self, x: f64) -> f64 {
        (-self.space.potential.value(x) - self.log_z_mu).exp()
    }

    /// Normalized nu-density at x (1-D only).
    pub fn nu_pdf(&self, x: f64) -> f64 {
        self.mu_pdf(x) * self.h_at(x)
    }

    pub fn is_sphere(&self) -> bool {
        matches!(self.space.kind, SpaceKind::SphereN(_))
    }

    /// Total mu-mass on the grid (should be 1 by construction).
    pub fn mu_mass(&self) -> f64 {
        self.grid.integrate_mu(|_| 1.0)
    }

    /// Total nu-mass on the grid (should be 1 by construction).
    pub fn nu_mass(&self) -> f64 {
        self.grid.integrate_nu(|_| 1.0)
    }

    /// CDF/quantile accessor for a 1-D marginal.
    pub fn cdf(&self, which: Which) -> Cdf1D<'_> {
        Cdf1D::new(self, which)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Which {
    Mu,
    Nu,
}

/// Exact-to-quadrature CDF for a 1-D measure: panel integrals accumulated
/// at panel edges, sub-panel integrals by a local Gauss rule.
pub struct Cdf1D<'a> {
    pair: &'a MeasurePair,
    which: Which,
    edges: Vec<f64>,
    cumulative: Vec<f64>,
    total: f64,
    gl: (Vec<f64>, Vec<f64>),
}

impl<'a> Cdf1D<'a> {
    fn new(pair: &'a MeasurePair, which: Which) -> Self {
        let edges = pair.grid.panel_edges.clone();
        let gl = gauss_legendre(16);
        let mut cumulative = vec![0.0; edges.len()];
        let pdf = |x: f64| match which {
            Which::Mu => pair.mu_pdf(x),
            Which::Nu => pair.nu_pdf(x),
        };
        for i in 1..edges.len() {
            let (a, b) = (edges[i - 1], edges[i]);
            let c = 0.5 * (b - a);
            let d = 0.5 * (a + b);
            let panel: f64 = gl
                .0
                .iter()
                .zip(&gl.1)
                .map(|(&x, &w)| w * pdf(c * x + d))
                .sum::<f64>()
                * c;
            cumulative[i] = cumulative[i - 1] + panel;
        }
        let total = *cumulative.last().unwrap();
        Cdf1D {
            pair,
            which,
            edges,
            cumulative,
            total,
        gl,
        }
    }

    fn pdf(&self, x: f64) -> f64 {
        match self.which {
            Which::Mu => self.pair.mu_pdf(x),
            Which::Nu => self.pair.nu_pdf(x),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x <= self.edges[0] {
            return 0.0;
        }
        if x >= *self.edges.last().unwrap() {
            return 1.0;
        }
        let i = self.edges.partition_point(|&e| e <= x) - 1;
        let (a, b) = (self.edges[i], x);
        let c = 0.5 * (b - a);
        let d = 0.5 * (a + b);
        let partial: f64 = self
            .gl
            .0
            .iter()
            .zip(&self.gl.1)
            .map(|(&t, &w)| w * self.pdf(c * t + d))
            .sum::<f64>()
            * c;
        ((self.cumulative[i] + partial) / self.total).clamp(0.0, 1.0)
    }

    /// Quantile by bracketed Newton on the smooth CDF.
    pub fn quantile(&self, q: f64) -> f64 {
        let q = q.clamp(0.0, 1.0);
        let target = q * self.total;
        let i = self
            .cumulative
            .partition_point(|&c| c <= target)
            .clamp(1, self.edges.len() - 1);
        let (mut lo, mut hi) = (self.edges[i - 1], self.edges[i]);
        let mut x = 0.5 * (lo + hi);
        for _ in 0..60 {
            let f = self.eval(x) - q;
            if f > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let p = self.pdf(x);
            let mut next = if p > 1e-300 { x - f / p } else { 0.5 * (lo + hi) };
            if !(lo..=hi).contains(&next) {
                next = 0.5 * (lo + hi);
            }
            if (next - x).abs() < 1e-14 * (1.0 + x.abs()) {
                return next;
            }
            x = next;
        }
        x
    }
}

/// Independent RNG stream keyed by (seed, index), so parallel sampling is
/// deterministic and order-independent.
pub fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    // splitmix64 over the combined key
    let mut z = seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    let mut out = [0u8; 32];
    for chunk in out.chunks_mut(8) {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut w = z;
        w = (w ^ (w >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        w = (w ^ (w >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        w ^= w >> 31;
        chunk.copy_from_slice(&w.to_le_bytes());
    }
    ChaCha8Rng::from_seed(out)
}

/// i.i.d. samples from mu or nu; 1-D via inverse CDF, sphere via rejection
/// from the uniform axial law. Returns the sampled coordinate (x or u).
pub fn sample(
    pair: &MeasurePair,
    which: Which,
    count: usize,
    seed: u64,
) -> Result<Vec<f64>, MeasureError> {
    assert!(count >= 1);
    if pair.is_sphere() {
        return sample_sphere_axial(pair, which, count, seed);
    }
    let cdf = pair.cdf(which);
    Ok((0..count)
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64);
            cdf.quantile(rng.gen::<f64>())
        })
        .collect())
}

fn sample_sphere_axial(
    pair: &MeasurePair,
    which: Which,
    count: usize,
    seed: u64,
) -> Result<Vec<f64>, MeasureError> {
    let n = pair.space.dimension() as f64;
    let h_max = match which {
        Which::Mu => 1.0,
        Which::Nu => pair
            .grid
            .nodes
            .iter()
            .map(|&u| pair.h_at(u))
            .fold(0.0, f64::max)
            * 1.000001,
    };
    let mut out = Vec::with_capacity(count);
    let mut draws = 0u64;
    for i in 0..count {
        let mut rng = stream_rng(seed, i as u64);
        loop {
            draws += 1;
            if draws > 10_000 * (count as u64) {
                return Err(MeasureError::RejectionStall);
            }
            // uniform axial coordinate: sample an ambient gaussian direction
            let v: Vec<f64> = (0..=n as usize)
                .map(|_| {
                    // Box-Muller
                    let u1: f64 = rng.gen::<f64>().max(1e-300);
                    let u2: f64 = rng.gen();
                    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
                })
                .collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            let u = v[v.len() - 1] / norm;
            let accept = match which {
                Which::Mu => true,
                Which::Nu => rng.gen::<f64>() * h_max <= pair.h_at(u),
            };
            if accept {
                out.push(u);
                break;
            }
        }
    }
    Ok(out)
}

/// Closed-form functionals for oracle families, where available.
#[derive(Debug, Clone, Copy, Default)]
pub struct ClosedForms {
    pub entropy: Option<f64>,
    pub fisher: Option<f64>,
    pub w2: Option<f64>,
    pub s2: Option<f64>,
}

/// Oracle values for the preset families on a reference with Hess_V = k.
pub fn closed_forms(spec: &DensitySpec, k: f64) -> ClosedForms {
    match *spec {
        DensitySpec::Identity => ClosedForms {
            entropy: Some(0.0),
            fisher: Some(0.0),
            w2: Some(0.0),
            s2: Some(0.0),
        },
        DensitySpec::GaussianScale { sigma2 } => ClosedForms {
            entropy: Some(0.5 * (sigma2 - 1.0 - sigma2.ln())),
            fisher: Some(k * (sigma2 - 1.0).powi(2) / sigma2),
            w2: Some((sigma2.sqrt() - 1.0).abs() / k.sqrt()),
            s2: Some((sigma2 - 1.0).abs()),
        },
        DensitySpec::GaussianShift { m } => ClosedForms {
            entropy: Some(0.5 * k * m * m),
            fisher: Some(k * k * m * m),
            w2: Some(m.abs()),
            s2: None,
        },
        _ => ClosedForms::default(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn gaussian_pair(spec: DensitySpec) -> MeasurePair {
        make_pair(&ModelSpace::gaussian(1, 1.0), spec, 2048).unwrap()
    }

    #[test]
    fn identity_pair_masses() {
        let pair = gaussian_pair(DensitySpec::Identity);
        assert_relative_eq!(pair.mu_mass(), 1.0, epsilon = 1e-10);
        assert_relative_eq!(pair.nu_mass(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn gaussian_scale_normalizers_are_one() {
        let pair = gaussian_pair(DensitySpec::GaussianScale { sigma2: 2.0 });
        assert_relative_eq!(pair.log_c_nu.exp(), 1.0, epsilon = 1e-10);
        assert_relative_eq!(
            pair.log_z_mu.exp(),
            (2.0 * std::f64::consts::PI).sqrt(),
            epsilon = 1e-10
        );
        assert_relative_eq!(pair.nu_mass(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn von_mises_normalizes() {
        let space = ModelSpace::sphere(2).unwrap();
        let pair = make_pair(&space, DensitySpec::SphereVonMises { kappa: 1.0 }, 256).unwrap();
        assert_relative_eq!(pair.nu_mass(), 1.0, epsilon = 1e-10);
        // n = 2: axial marginal of uniform is uniform on [-1,1], so
        // c_nu = sinh(1)/1
        assert_relative_eq!(pair.log_c_nu.exp(), 1f64.sinh(), epsilon = 1e-10);
    }

    #[test]
    fn grid_refinement_stable() {
        for spec in [
            DensitySpec::GaussianScale { sigma2: 2.0 },
            DensitySpec::GaussianShift { m: 1.0 },
        ] {
            let lo = gaussian_pair_res(spec, 1024);
            let hi = gaussian_pair_res(spec, 2048);
            assert!((lo.log_c_nu.exp() - hi.log_c_nu.exp()).abs() < 1e-9);
            assert!((lo.log_z_mu.exp() - hi.log_z_mu.exp()).abs() < 1e-9);
        }
        let space = ModelSpace::line(PotentialSpec::Quartic { a: 1.0 });
        let spec = DensitySpec::QuarticTilt { a: 1.0, shift: 0.3 };
        let lo = make_pair(&space, spec, 1024).unwrap();
        let hi = make_pair(&space, spec, 2048).unwrap();
        assert!((lo.log_c_nu.exp() - hi.log_c_nu.exp()).abs() < 1e-9);
    }

    fn gaussian_pair_res(spec: DensitySpec, res: usize) -> MeasurePair {
        make_pair(&ModelSpace::gaussian(1, 1.0), spec, res).unwrap()
    }

    #[test]
    fn sampler_mean_and_variance() {
        let pair = gaussian_pair(DensitySpec::Identity);
        let xs = sample(&pair, Which::Mu, 100_000, 7).unwrap();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        assert!(mean.abs() < 4.0 / (xs.len() as f64).sqrt());

        let pair = gaussian_pair(DensitySpec::GaussianScale { sigma2: 2.0 });
        let xs = sample(&pair, Which::Nu, 100_000, 11).unwrap();
        let var = xs.iter().map(|x| x * x).sum::<f64>() / xs.len() as f64;
        assert!((var - 2.0).abs() / 2.0 < 0.05);
    }

    #[test]
    fn uniform_sphere_axial_mean() {
        let space = ModelSpace::sphere(2).unwrap();
        let pair = make_pair(&space, DensitySpec::SphereVonMises { kappa: 0.0 }, 256).unwrap();
        let us = sample(&pair, Which::Nu, 10_000, 3).unwrap();
        let mean = us.iter().sum::<f64>() / us.len() as f64;
        assert!(mean.abs() < 0.05);
    }

    #[test]
    fn sampler_matches_grid_cdf_ks() {
        let pair = gaussian_pair(DensitySpec::GaussianShift { m: 1.0 });
        let mut xs = sample(&pair, Which::Nu, 100_000, 5).unwrap();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let cdf = pair.cdf(Which::Nu);
        let n = xs.len() as f64;
        let ks = xs
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let e = cdf.eval(x);
                (e - i as f64 / n).abs().max((e - (i as f64 + 1.0) / n).abs())
            })
            .fold(0.0, f64::max);
        assert!(ks < 0.01, "KS statistic {ks}");
    }

    #[test]
    fn sampling_is_deterministic() {
        let pair = gaussian_pair(DensitySpec::Identity);
        let a = sample(&pair, Which::Mu, 100, 99).unwrap();
        let b = sample(&pair, Which::Mu, 100, 99).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn quantile_inverts_cdf() {
        let pair = gaussian_pair(DensitySpec::GaussianScale { sigma2: 4.0 });
        let cdf = pair.cdf(Which::Nu);
        for &q in &[0.01, 0.2, 0.5, 0.8, 0.99] {
            let x = cdf.quantile(q);
            assert_relative_eq!(cdf.eval(x), q, epsilon = 1e-10);
        }
    }

    #[test]
    fn incompatible_family_rejected() {
        let space = ModelSpace::line(PotentialSpec::Quartic { a: 1.0 });
        assert!(make_pair(&space, DensitySpec::GaussianScale { sigma2: 2.0 }, 256).is_err());
    }
}
