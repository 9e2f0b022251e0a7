//! Closed-form evidence lower bound.

use std::f64::consts::PI;

use statrs::function::gamma::{digamma, ln_gamma};

use super::state::SideState;
use super::updates::{g_moments, SideData};
use super::{Hyperparameters, WeightMode};
use crate::error::{Error, Result};
use crate::linalg::{frobenius_dot, spd_logdet, Matrix};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// `E_q[ln Gamma(x; prior_shape, prior_scale)]` for `q = Gamma(shape, scale)`.
fn gamma_cross(shape: f64, scale: f64, prior_shape: f64, prior_scale: f64) -> f64 {
    let e_ln = digamma(shape) + scale.ln();
    let e = shape * scale;
    (prior_shape - 1.0) * e_ln - e / prior_scale - ln_gamma(prior_shape) - prior_shape * prior_scale.ln()
}

fn gamma_entropy(shape: f64, scale: f64) -> f64 {
    shape + scale.ln() + ln_gamma(shape) + (1.0 - shape) * digamma(shape)
}

/// `E_q[ln N(x; 0, 1/prec)]` given `E[ln prec]`, `E[prec]`, `E[x^2]`.
fn normal_precision_cross(e_ln_prec: f64, e_prec: f64, e_x2: f64) -> f64 {
    -0.5 * LN_2PI + 0.5 * e_ln_prec - 0.5 * e_prec * e_x2
}

fn gaussian_entropy(dim: usize, logdet_cov: f64) -> f64 {
    0.5 * dim as f64 * (1.0 + LN_2PI) + 0.5 * logdet_cov
}

fn check(v: f64, what: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::numerical(what, format!("non-finite bound term ({v})")))
    }
}

/// Contribution of one side: priors, conditionals of `G` and `H`, entropies.
pub(super) fn side_terms(
    st: &SideState,
    data: &SideData<'_>,
    hp: &Hyperparameters,
    mode: WeightMode,
    label: &str,
) -> Result<f64> {
    let (n, r) = st.a_mean.shape();
    let p = st.n_views();
    let nf = n as f64;
    let mut total = 0.0;

    // lambda and A
    let mut t = 0.0;
    for s in 0..r {
        for i in 0..n {
            let (a, b) = (st.lambda_shape[(i, s)], st.lambda_scale[(i, s)]);
            let a2 = st.a_mean[(i, s)].powi(2) + st.a_cov[s][(i, i)];
            t += gamma_cross(a, b, hp.alpha_lambda, hp.beta_lambda) + gamma_entropy(a, b);
            t += normal_precision_cross(digamma(a) + b.ln(), a * b, a2);
        }
        t += gaussian_entropy(n, spd_logdet(&st.a_cov[s], &format!("q(A_{label})"))?);
    }
    total += check(t, &format!("q(A_{label})"))?;

    // G | A
    let inv_g2 = 1.0 / (hp.sigma_g * hp.sigma_g);
    let mut t = 0.0;
    for (m, g) in st.g_mean.iter().enumerate() {
        let ka = data.kernels.matrix(m) * &st.a_mean;
        for s in 0..r {
            let var = st.g_var[(m, s)];
            let gc = g.column(s);
            let kac = ka.column(s);
            let sq = gc.norm_squared() + nf * var - 2.0 * gc.dot(&kac) + kac.norm_squared();
            t += -0.5 * nf * (LN_2PI + (hp.sigma_g * hp.sigma_g).ln()) - 0.5 * inv_g2 * sq;
            t += 0.5 * nf * (1.0 + LN_2PI + var.ln());
        }
    }
    for s in 0..r {
        // sum_m tr(K_m Sigma_s K_m) = tr(Sigma_s sum_m K_m^2)
        t -= 0.5 * inv_g2 * frobenius_dot(&st.a_cov[s], data.kk);
    }
    total += check(t, &format!("q(G_{label})"))?;

    // eta and e
    let mut t = 0.0;
    let weight_cols: Vec<usize> = match mode {
        WeightMode::ComponentWise => (0..r).collect(),
        WeightMode::SharedAcrossComponents => vec![0],
    };
    for &s in &weight_cols {
        for m in 0..p {
            let (a, b) = (st.eta_shape[(m, s)], st.eta_scale[(m, s)]);
            let e2 = st.e_mean[(m, s)].powi(2) + st.e_cov[s][(m, m)];
            t += gamma_cross(a, b, hp.alpha_eta, hp.beta_eta) + gamma_entropy(a, b);
            t += normal_precision_cross(digamma(a) + b.ln(), a * b, e2);
        }
        t += gaussian_entropy(p, spd_logdet(&st.e_cov[s], &format!("q(e_{label})"))?);
    }
    total += check(t, &format!("q(e_{label})"))?;

    // H | G, e
    let inv_h2 = 1.0 / (hp.sigma_h * hp.sigma_h);
    let f = st.combined_g();
    let mut t = 0.0;
    for s in 0..r {
        let (gg, _) = g_moments(st, s);
        let hc = st.h_mean.column(s);
        let h2: f64 = hc.norm_squared() + (0..n).map(|i| st.h_cov[i][(s, s)]).sum::<f64>();
        let cross = hc.dot(&f.column(s));
        let fe2 = frobenius_dot(&st.e_second_moment(s), &gg);
        t += -0.5 * nf * (LN_2PI + (hp.sigma_h * hp.sigma_h).ln()) - 0.5 * inv_h2 * (h2 - 2.0 * cross + fe2);
    }
    for (i, c) in st.h_cov.iter().enumerate() {
        let ld = spd_logdet(c, &format!("q(H_{label}) row {i}"))?;
        t += gaussian_entropy(r, ld);
    }
    total += check(t, &format!("q(H_{label})"))?;

    Ok(total)
}

/// Expected log-likelihood of the observed responses.
pub(super) fn likelihood_term(
    x: &SideState,
    z: &SideState,
    row_obs: &[Vec<(usize, f64)>],
    hp: &Hyperparameters,
) -> Result<f64> {
    let inv_y2 = 1.0 / (hp.sigma_y * hp.sigma_y);
    let zz: Vec<Matrix> = (0..z.n_samples()).map(|j| z.h_second_moment(j)).collect();
    let c = -0.5 * (2.0 * PI * hp.sigma_y * hp.sigma_y).ln();
    let mut t = 0.0;
    for (i, obs) in row_obs.iter().enumerate() {
        if obs.is_empty() {
            continue;
        }
        let xx = x.h_second_moment(i);
        let hx = x.h_mean.row(i);
        for &(j, y) in obs {
            let mean = hx.dot(&z.h_mean.row(j));
            let e_sq = frobenius_dot(&xx, &zz[j]);
            t += c - 0.5 * inv_y2 * (y * y - 2.0 * y * mean + e_sq);
        }
    }
    check(t, "likelihood")
}
