//! Scalar functionals of a measure pair: relative entropy H, Fisher
//! information I, Wasserstein distance W2, Stein kernels and the Stein
//! discrepancy S_p, plus the moment-bound ratio.

use crate::measures::{stream_rng, DensitySpec, MeasurePair, Which};
use crate::numerics::gauss_legendre;
use crate::semigroup::gegenbauer;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FunctionalError {
    #[error("sinkhorn failed to converge: marginal violation {0:.3e}")]
    SinkhornDiverged(f64),
    #[error("stein identity residual {residual:.3e} exceeds tolerance {tol:.1e}")]
    IdentityResidualHigh { residual: f64, tol: f64 },
    #[error("stein kernel unavailable: {0}")]
    KernelUnavailable(String),
    #[error("test function is not 1-Lipschitz: sup |grad f| = {0}")]
    NotLipschitz(f64),
}

/// H(nu|mu) = int h log h dmu.
pub fn entropy(pair: &MeasurePair) -> f64 {
    pair.grid.integrate_values_mu(
        &pair
            .grid
            .h
            .iter()
            .map(|&h| if h > 1e-300 { h * h.ln() } else { 0.0 })
            .collect::<Vec<_>>(),
    )
}

/// I(nu|mu) = int |grad h|^2 / h dmu, with the analytic derivative of h.
/// On the sphere the zonal gradient is |grad h|^2 = (1-u^2) h'(u)^2.
pub fn fisher(pair: &MeasurePair) -> f64 {
    let sphere = pair.is_sphere();
    pair.grid.integrate_mu(|x| {
        let h = pair.h_at(x);
        if h <= 1e-300 {
            return 0.0;
        }
        // h (d log h)^2 rather than (dh)^2 / h: squaring dh first can
        // overflow in far tails where h itself is still representable
        let dlog = pair.dh_at(x) / h;
        let g2 = if sphere {
            (1.0 - x * x) * dlog * dlog
        } else {
            dlog * dlog
        };
        h * g2
    })
}

#[derive(Debug, Clone, Copy)]
pub struct W2Result {
    pub value: f64,
    /// Discretization error estimate (quadrature cross-check in 1-D,
    /// epsilon-extrapolation for Sinkhorn).
    pub error: f64,
}

/// W2 between nu and mu: quantile coupling in 1-D, debiased entropic OT
/// with squared geodesic cost on the sphere.
pub fn wasserstein2(pair: &MeasurePair) -> Result<W2Result, FunctionalError> {
    if matches!(pair.spec, DensitySpec::Identity) {
        return Ok(W2Result {
            value: 0.0,
            error: 0.0,
        });
    }
    if pair.is_sphere() {
        return wasserstein2_sphere(pair);
    }
    let cdf_mu = pair.cdf(Which::Mu);
    let cdf_nu = pair.cdf(Which::Nu);
    // transport-map form on the mu grid: W2^2 = int (T(x) - x)^2 dmu
    let w2_sq = pair.grid.integrate_mu(|x| {
        let t = cdf_nu.quantile(cdf_mu.eval(x));
        (t - x) * (t - x)
    });
    // cross-check with the quantile form int_0^1 (Q_nu - Q_mu)^2 dq
    let (gx, gw) = gauss_legendre(128);
    let coarse_sq: f64 = gx
        .iter()
        .zip(&gw)
        .map(|(&xi, &w)| {
            let q = 0.5 * (xi + 1.0);
            let d = cdf_nu.quantile(q) - cdf_mu.quantile(q);
            0.5 * w * d * d
        })
        .sum();
    let value = w2_sq.max(0.0).sqrt();
    Ok(W2Result {
        value,
        error: (value - coarse_sq.max(0.0).sqrt()).abs(),
    })
}

fn wasserstein2_sphere(pair: &MeasurePair) -> Result<W2Result, FunctionalError> {
    let n = pair.space.dimension();
    let m = 256usize;
    // deterministic quasi-uniform support: normalized Gaussian directions
    let points: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            let mut rng = stream_rng(0x5EED_07, i as u64);
            let v: Vec<f64> = (0..=n)
                .map(|_| {
                    let u1: f64 = rng.gen::<f64>().max(1e-300);
                    let u2: f64 = rng.gen();
                    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
                })
                .collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.into_iter().map(|x| x / norm).collect()
        })
        .collect();
    let a = vec![1.0 / m as f64; m];
    // nu reweights the same support by h(u) with u the axial coordinate
    let mut b: Vec<f64> = points.iter().map(|p| pair.h_at(p[n])).collect();
    let zb: f64 = b.iter().sum();
    b.iter_mut().for_each(|v| *v /= zb);
    let cost: Vec<Vec<f64>> = points
        .iter()
        .map(|p| {
            points
                .iter()
                .map(|q| {
                    let dot = p
                        .iter()
                        .zip(q)
                        .map(|(&x, &y)| x * y)
                        .sum::<f64>()
                        .clamp(-1.0, 1.0);
                    dot.acos().powi(2)
                })
                .collect()
        })
        .collect();
    let eps = 5e-3;
    let fine = sinkhorn_debiased(&a, &b, &cost, eps)?;
    let coarse = sinkhorn_debiased(&a, &b, &cost, 2.0 * eps)?;
    Ok(W2Result {
        value: fine,
        error: (fine - coarse).abs(),
    })
}

/// Debiased entropic OT divergence on a shared support:
/// sqrt(max(OT(a,b) - OT(a,a)/2 - OT(b,b)/2, 0)).
pub fn sinkhorn_debiased(
    a: &[f64],
    b: &[f64],
    cost: &[Vec<f64>],
    eps_min: f64,
) -> Result<f64, FunctionalError> {
    let ab = sinkhorn_ot(a, b, cost, eps_min)?;
    // the self-transport terms have equal optimal potentials, so a damped
    // fixed-point on a single potential is much cheaper than alternation
    let aa = sinkhorn_symmetric(a, cost, eps_min)?;
    let bb = sinkhorn_symmetric(b, cost, eps_min)?;
    Ok((ab - 0.5 * aa - 0.5 * bb).max(0.0).sqrt())
}

/// Log-domain Sinkhorn with geometric epsilon-scaling down to eps_min;
/// returns the dual objective sum(a f) + sum(b g).
fn sinkhorn_ot(
    a: &[f64],
    b: &[f64],
    cost: &[Vec<f64>],
    eps_min: f64,
) -> Result<f64, FunctionalError> {
    let (na, nb) = (a.len(), b.len());
    let log_a: Vec<f64> = a.iter().map(|&v| v.max(1e-300).ln()).collect();
    let log_b: Vec<f64> = b.iter().map(|&v| v.max(1e-300).ln()).collect();
    let mut f = vec![0.0; na];
    let mut g = vec![0.0; nb];
    let mut eps = 1.0f64;
    let mut violation = f64::INFINITY;
    loop {
        eps = eps.max(eps_min);
        // empirically the iteration count to a fixed marginal defect grows
        // like 1/eps, so a flat per-level budget starves the last levels
        let budget = (30.0 / eps).clamp(500.0, 30_000.0) as usize;
        for it in 0..budget {
            // f-update: rows exact; g-update: columns exact
            f = (0..na)
                .into_par_iter()
                .map(|i| {
                    -eps * log_sum_exp((0..nb).map(|j| log_b[j] + (g[j] - cost[i][j]) / eps))
                })
                .collect();
            g = (0..nb)
                .into_par_iter()
                .map(|j| {
                    -eps * log_sum_exp((0..na).map(|i| log_a[i] + (f[i] - cost[i][j]) / eps))
                })
                .collect();
            // row-marginal defect (columns are exact after the g-update);
            // the check costs a full matrix pass, so do it sparsely
            if it % 8 == 7 || it + 1 == budget {
                violation = (0..na)
                    .into_par_iter()
                    .map(|i| {
                        let row: f64 = (0..nb)
                            .map(|j| {
                                (log_a[i] + log_b[j] + (f[i] + g[j] - cost[i][j]) / eps).exp()
                            })
                            .sum();
                        (row - a[i]).abs()
                    })
                    .sum();
                if violation < 1e-9 {
                    break;
                }
            }
        }
        if eps <= eps_min {
            break;
        }
        eps *= 0.5;
    }
    if violation > 1e-6 {
        return Err(FunctionalError::SinkhornDiverged(violation));
    }
    Ok(f.iter().zip(a).map(|(&fi, &ai)| fi * ai).sum::<f64>()
        + g.iter().zip(b).map(|(&gj, &bj)| gj * bj).sum::<f64>())
}

/// OT(a, a) for a symmetric cost: the two optimal potentials coincide, so
/// iterate the damped fixed-point f <- (f + T(f))/2, which converges
/// geometrically at every epsilon level.
fn sinkhorn_symmetric(
    a: &[f64],
    cost: &[Vec<f64>],
    eps_min: f64,
) -> Result<f64, FunctionalError> {
    let n = a.len();
    let log_a: Vec<f64> = a.iter().map(|&v| v.max(1e-300).ln()).collect();
    let mut f = vec![0.0; n];
    let mut eps = 1.0f64;
    loop {
        eps = eps.max(eps_min);
        for _ in 0..2000 {
            let upd: Vec<f64> = (0..n)
                .into_par_iter()
                .map(|i| {
                    -eps * log_sum_exp((0..n).map(|j| log_a[j] + (f[j] - cost[i][j]) / eps))
                })
                .collect();
            let mut delta = 0.0f64;
            for i in 0..n {
                let next = 0.5 * (f[i] + upd[i]);
                delta = delta.max((next - f[i]).abs());
                f[i] = next;
            }
            if delta < 1e-12 {
                break;
            }
        }
        if eps <= eps_min {
            break;
        }
        eps *= 0.5;
    }
    let violation: f64 = (0..n)
        .into_par_iter()
        .map(|i| {
            let row: f64 = (0..n)
                .map(|j| (log_a[i] + log_a[j] + (f[i] + f[j] - cost[i][j]) / eps).exp())
                .sum();
            (row - a[i]).abs()
        })
        .sum();
    if violation > 1e-6 {
        return Err(FunctionalError::SinkhornDiverged(violation));
    }
    Ok(2.0 * f.iter().zip(a).map(|(&fi, &ai)| fi * ai).sum::<f64>())
}

fn log_sum_exp(terms: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = terms.collect();
    let m = v.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|&t| (t - m).exp()).sum::<f64>().ln()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelConstruction {
    /// tau(x) = (1/p_nu(x)) int_x^inf V'(y) p_nu(y) dy  (1-D canonical kernel)
    Explicit1D,
    /// tau = sigma^2 * id for centered Gaussian scale families
    ClosedFormGaussian,
    /// tau = s(u) * id with s a low-degree zonal expansion (sphere)
    LeastSquaresBasis,
}

/// A Stein kernel evaluated on the grid. The kernel is scalar throughout:
/// tau itself in 1-D, the multiple of the identity tensor on the sphere.
#[derive(Debug, Clone)]
pub struct SteinKernelField {
    pub construction: KernelConstruction,
    pub values: Vec<f64>,
    /// Worst defect of the defining identity over the test basis.
    pub residual: f64,
}

/// Build a Stein kernel with the natural construction for the pair:
/// closed form for Gaussian scale families, explicit integral elsewhere in
/// 1-D, constrained least squares on the sphere.
pub fn stein_kernel(pair: &MeasurePair) -> Result<SteinKernelField, FunctionalError> {
    let construction = if pair.is_sphere() {
        KernelConstruction::LeastSquaresBasis
    } else {
        match pair.spec {
            DensitySpec::Identity | DensitySpec::GaussianScale { .. } => {
                KernelConstruction::ClosedFormGaussian
            }
            _ => KernelConstruction::Explicit1D,
        }
    };
    stein_kernel_with(pair, construction)
}

pub fn stein_kernel_with(
    pair: &MeasurePair,
    construction: KernelConstruction,
) -> Result<SteinKernelField, FunctionalError> {
    match construction {
        KernelConstruction::ClosedFormGaussian => {
            let sigma2 = match pair.spec {
                DensitySpec::Identity => 1.0,
                DensitySpec::GaussianScale { sigma2 } => sigma2,
                _ => {
                    return Err(FunctionalError::KernelUnavailable(
                        "closed form only for centered Gaussian scale families".into(),
                    ))
                }
            };
            let values = vec![sigma2; pair.grid.nodes.len()];
            let t: Vec<f64> = pair
                .grid
                .nodes
                .iter()
                .map(|&x| sigma2 * pair.nu_pdf(x))
                .collect();
            finish_1d(pair, construction, values, &t)
        }
        KernelConstruction::Explicit1D => {
            if pair.is_sphere() {
                return Err(FunctionalError::KernelUnavailable(
                    "explicit integral kernel is one-dimensional".into(),
                ));
            }
            let t = explicit_t_values(pair);
            let values: Vec<f64> = pair
                .grid
                .nodes
                .iter()
                .zip(&t)
                .map(|(&x, &ti)| {
                    let p = pair.nu_pdf(x);
                    if p > 1e-280 {
                        ti / p
                    } else {
                        0.0
                    }
                })
                .collect();
            finish_1d(pair, construction, values, &t)
        }
        KernelConstruction::LeastSquaresBasis => stein_kernel_sphere(pair),
    }
}

fn finish_1d(
    pair: &MeasurePair,
    construction: KernelConstruction,
    values: Vec<f64>,
    t: &[f64],
) -> Result<SteinKernelField, FunctionalError> {
    let residual = identity_residual_1d(pair, t);
    if residual > 1e-6 {
        return Err(FunctionalError::IdentityResidualHigh {
            residual,
            tol: 1e-6,
        });
    }
    Ok(SteinKernelField {
        construction,
        values,
        residual,
    })
}

/// T(x) = int_x^inf V'(y) p_nu(y) dy at the grid nodes, with Laplace tail
/// corrections beyond the truncated domain. The cumulative sum runs from
/// whichever endpoint is nearer so tail values never suffer cancellation
/// against the O(1) central mass.
fn explicit_t_values(pair: &MeasurePair) -> Vec<f64> {
    let edges = &pair.grid.panel_edges;
    let np = edges.len() - 1;
    let (gx, gw) = gauss_legendre(16);
    let integrand = |y: f64| pair.space.potential.grad(y) * pair.nu_pdf(y);
    let panel_int = |a: f64, b: f64| -> f64 {
        let c = 0.5 * (b - a);
        let d = 0.5 * (a + b);
        gx.iter()
            .zip(&gw)
            .map(|(&xi, &w)| w * integrand(c * xi + d))
            .sum::<f64>()
            * c
    };
    // decay rates of p_nu at the endpoints for the Laplace tail estimates
    let slope = |x: f64, sign: f64| {
        let d_log_p = -pair.space.potential.grad(x)
            + pair.dh_at(x) / pair.h_at(x).max(1e-300);
        (sign * d_log_p).max(1e-8)
    };
    let (a, b) = pair.domain;
    let tail_right = integrand(b) / slope(b, -1.0);
    let tail_left = integrand(a) / slope(a, 1.0);
    let panels: Vec<f64> = (0..np).map(|j| panel_int(edges[j], edges[j + 1])).collect();
    // cum_r[j] = int from edges[j] to +inf ; cum_l[j] = int from -inf to edges[j]
    let mut cum_r = vec![tail_right; np + 1];
    for j in (0..np).rev() {
        cum_r[j] = cum_r[j + 1] + panels[j];
    }
    let mut cum_l = vec![tail_left; np + 1];
    for j in 0..np {
        cum_l[j + 1] = cum_l[j] + panels[j];
    }
    let total = cum_r[0] + tail_left;
    // split at the mode of p_nu
    let mode = pair
        .grid
        .nodes
        .iter()
        .cloned()
        .max_by(|x, y| pair.nu_pdf(*x).partial_cmp(&pair.nu_pdf(*y)).unwrap())
        .unwrap();
    pair.grid
        .nodes
        .iter()
        .map(|&x| {
            let j = edges.partition_point(|&e| e <= x).clamp(1, np) - 1;
            if x >= mode {
                panel_int(x, edges[j + 1]) + cum_r[j + 1]
            } else {
                total - (cum_l[j] + panel_int(edges[j], x))
            }
        })
        .collect()
}

fn poly_eval(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &v| acc * x + v)
}

fn poly_deriv(c: &[f64]) -> Vec<f64> {
    c.iter()
        .enumerate()
        .skip(1)
        .map(|(k, &v)| k as f64 * v)
        .collect()
}

/// For f = g(x) e^{-c x^2}: returns the polynomial of f' / e^{-c x^2}.
fn envelope_deriv(g: &[f64], c: f64) -> Vec<f64> {
    let mut out = poly_deriv(g);
    out.resize(g.len() + 1, 0.0);
    for (k, &v) in g.iter().enumerate() {
        out[k + 1] -= 2.0 * c * v;
    }
    out
}

/// 12-function test basis: monomials x^0..x^5 and Hermite polynomials
/// He_1..He_6, each damped by a Gaussian envelope so that boundary terms
/// at the truncated domain are negligible.
fn test_basis(pair: &MeasurePair) -> (Vec<Vec<f64>>, f64) {
    let (a, b) = pair.domain;
    let c = 36.0 / a.abs().min(b.abs()).powi(2);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(12);
    for k in 0..6usize {
        let mut mono = vec![0.0; k + 1];
        mono[k] = 1.0;
        basis.push(mono);
    }
    // He_{k+1} = x He_k - k He_{k-1}
    let mut he_prev = vec![1.0];
    let mut he = vec![0.0, 1.0];
    for k in 1..=6usize {
        basis.push(he.clone());
        let mut next = vec![0.0; he.len() + 1];
        for (i, &v) in he.iter().enumerate() {
            next[i + 1] += v;
        }
        for (i, &v) in he_prev.iter().enumerate() {
            next[i] -= k as f64 * v;
        }
        he_prev = std::mem::take(&mut he);
        he = next;
    }
    (basis, c)
}

/// max_phi | int V' phi' dnu - int tau phi'' dnu | over the test basis.
/// The second integral uses the unnormalized form T = tau p_nu directly,
/// so far-tail ratios tau = T/p_nu never enter.
fn identity_residual_1d(pair: &MeasurePair, t: &[f64]) -> f64 {
    let (basis, c) = test_basis(pair);
    let mut worst = 0.0f64;
    for g in &basis {
        let g1 = envelope_deriv(g, c);
        let g2 = envelope_deriv(&g1, c);
        let lhs = pair.grid.integrate_nu(|x| {
            pair.space.potential.grad(x) * poly_eval(&g1, x) * (-c * x * x).exp()
        });
        let rhs: f64 = pair
            .grid
            .nodes
            .iter()
            .zip(&pair.grid.weights)
            .zip(t)
            .map(|((&x, &w), &ti)| w * ti * poly_eval(&g2, x) * (-c * x * x).exp())
            .sum();
        worst = worst.max((lhs - rhs).abs());
    }
    worst
}

/// On the sphere V = 0, so the defining identity asks int <tau, Hess_f> dnu
/// to vanish. We take tau = s(u) id with s expanded in Gegenbauer
/// polynomials and solve the KKT system of
///   minimize int (s-1)^2 dnu  s.t.  int s C_l dnu = 0, l = 1..L_c,
/// since <s id, Hess_f>_HS = s (Laplacian f) = -l(l+n-1) s C_l for the
/// zonal harmonics f = C_l(u).
fn stein_kernel_sphere(pair: &MeasurePair) -> Result<SteinKernelField, FunctionalError> {
    let n = pair.space.dimension();
    let lambda = (n as f64 - 1.0) / 2.0;
    let n_basis = 9usize; // degrees 0..8
    let l_c = 6usize;
    let nodes = &pair.grid.nodes;
    let vals: Vec<Vec<f64>> = {
        let mut per_l = vec![Vec::with_capacity(nodes.len()); n_basis];
        for &u in nodes {
            for (l, v) in gegenbauer(lambda, n_basis - 1, u).into_iter().enumerate() {
                per_l[l].push(v);
            }
        }
        per_l
    };
    let nu_dot = |f: &[f64], g: &[f64]| -> f64 {
        pair.grid.integrate_values_mu(
            &f.iter()
                .zip(g)
                .zip(&pair.grid.h)
                .map(|((&a, &b), &h)| a * b * h)
                .collect::<Vec<_>>(),
        )
    };
    let ones = vec![1.0; nodes.len()];
    let dim = n_basis + l_c;
    let mut kkt = DMatrix::zeros(dim, dim);
    let mut rhs = DVector::zeros(dim);
    for j in 0..n_basis {
        for k in 0..n_basis {
            kkt[(j, k)] = nu_dot(&vals[j], &vals[k]);
        }
        rhs[j] = nu_dot(&vals[j], &ones);
        for l in 1..=l_c {
            let a = nu_dot(&vals[l], &vals[j]);
            kkt[(j, n_basis + l - 1)] = a;
            kkt[(n_basis + l - 1, j)] = a;
        }
    }
    let sol = kkt
        .lu()
        .solve(&rhs)
        .ok_or_else(|| FunctionalError::KernelUnavailable("singular KKT system".into()))?;
    let s: Vec<f64> = (0..nodes.len())
        .map(|i| (0..n_basis).map(|j| sol[j] * vals[j][i]).sum())
        .collect();
    let nf = n as f64;
    let residual = (1..=l_c)
        .map(|l| {
            let lf = l as f64;
            lf * (lf + nf - 1.0) * nu_dot(&s, &vals[l]).abs()
        })
        .fold(0.0f64, f64::max);
    if residual > 1e-3 {
        return Err(FunctionalError::IdentityResidualHigh {
            residual,
            tol: 1e-3,
        });
    }
    Ok(SteinKernelField {
        construction: KernelConstruction::LeastSquaresBasis,
        values: s,
        residual,
    })
}

/// (int |v|^p dnu)^{1/p} over grid values, via log-sum-exp so large
/// kernels in deep tails cannot overflow.
fn lp_norm_nu(pair: &MeasurePair, values: &[f64], p: f64) -> f64 {
    // drop nodes carrying a vanishing share of the nu-mass: explicit
    // kernels are quotients of two underflowing quantities out there, so
    // the values are pure roundoff noise amplified by 1/density
    let max_base = pair
        .grid
        .weights
        .iter()
        .zip(&pair.grid.mu_density)
        .zip(&pair.grid.h)
        .map(|((&w, &d), &h)| w * d * h)
        .fold(0.0f64, f64::max);
    let floor = 1e-12 * max_base;
    let terms: Vec<f64> = pair
        .grid
        .weights
        .iter()
        .zip(&pair.grid.mu_density)
        .zip(&pair.grid.h)
        .zip(values)
        .filter_map(|(((&w, &d), &h), &v)| {
            let base = w * d * h;
            if base <= floor || v == 0.0 {
                None
            } else {
                Some(base.ln() + p * v.abs().ln())
            }
        })
        .collect();
    if terms.is_empty() {
        return 0.0;
    }
    (log_sum_exp(terms.into_iter()) / p).exp()
}

/// S_p upper bound (int |tau - id|_HS^p dnu)^{1/p} for the constructed
/// kernel; an upper bound for the infimum over all kernels, which is the
/// monotone direction for every inequality that consumes it.
pub fn stein_discrepancy(pair: &MeasurePair, kernel: &SteinKernelField, p: f64) -> f64 {
    assert!(p >= 1.0, "stein discrepancy needs p >= 1");
    let n = pair.space.dimension() as f64;
    let dev: Vec<f64> = kernel.values.iter().map(|&v| v - 1.0).collect();
    let hs_scale = if pair.is_sphere() { n.sqrt() } else { 1.0 };
    hs_scale * lp_norm_nu(pair, &dev, p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentFunction {
    /// x in 1-D; the axial coordinate u = <x, pole> on the sphere.
    Coordinate,
    /// |x| in 1-D; the polar angle arccos u on the sphere.
    GeodesicToPole,
}

/// Ratio (int |f - nu(f)|^p dnu)^{1/p} / (S_p + sqrt(p) (int |tau|_op^{p/2} dnu)^{1/p})
/// for a 1-Lipschitz f; boundedness of this ratio over p is the testable
/// content of the moment bound.
pub fn moment_ratio(
    pair: &MeasurePair,
    kernel: &SteinKernelField,
    f: MomentFunction,
    p: u32,
) -> Result<f64, FunctionalError> {
    assert!(p >= 2 && p % 2 == 0, "moment ratio needs even p >= 2");
    let sphere = pair.is_sphere();
    let (f_vals, sup_grad): (Vec<f64>, f64) = match f {
        MomentFunction::Coordinate => (
            pair.grid.nodes.clone(),
            if sphere {
                pair.grid
                    .nodes
                    .iter()
                    .map(|&u| (1.0 - u * u).sqrt())
                    .fold(0.0, f64::max)
            } else {
                1.0
            },
        ),
        MomentFunction::GeodesicToPole => (
            pair.grid
                .nodes
                .iter()
                .map(|&x| if sphere { x.clamp(-1.0, 1.0).acos() } else { x.abs() })
                .collect(),
            1.0,
        ),
    };
    if sup_grad > 1.0 + 1e-9 {
        return Err(FunctionalError::NotLipschitz(sup_grad));
    }
    let mean = pair.grid.integrate_values_mu(
        &f_vals
            .iter()
            .zip(&pair.grid.h)
            .map(|(&v, &h)| v * h)
            .collect::<Vec<_>>(),
    );
    let centered: Vec<f64> = f_vals.iter().map(|&v| v - mean).collect();
    let pf = p as f64;
    let numerator = lp_norm_nu(pair, &centered, pf);
    let s_p = stein_discrepancy(pair, kernel, pf);
    // (int |tau|_op^{p/2} dnu)^{1/p} = lp-norm with exponent p/2, re-rooted
    let op_half = lp_norm_nu(pair, &kernel.values, pf / 2.0).powf(0.5);
    Ok(numerator / (s_p + pf.sqrt() * op_half))
}

/// The functional digest consumed by bound verdicts and reports.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FunctionalReport {
    pub entropy: f64,
    pub fisher: f64,
    pub w2: f64,
    pub w2_error: f64,
    pub s2: f64,
    pub kernel_residual: f64,
}

pub fn functional_report(pair: &MeasurePair) -> Result<FunctionalReport, FunctionalError> {
    let kernel = stein_kernel(pair)?;
    let w2 = wasserstein2(pair)?;
    Ok(FunctionalReport {
        entropy: entropy(pair),
        fisher: fisher(pair),
        w2: w2.value,
        w2_error: w2.error,
        s2: stein_discrepancy(pair, &kernel, 2.0),
        kernel_residual: kernel.residual,
    })
}
