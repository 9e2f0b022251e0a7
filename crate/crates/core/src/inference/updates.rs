//! Closed-form coordinate updates. Each function sets one factor to the exact
//! optimum of the bound with every other factor held fixed.

use nalgebra::DVector;

use super::state::SideState;
use super::{Hyperparameters, WeightMode};
use crate::error::Result;
use crate::kernelviews::KernelSet;
use crate::linalg::{spd_inverse, Matrix};

/// Per-side inputs that do not change during inference.
pub(super) struct SideData<'a> {
    pub kernels: &'a KernelSet,
    /// `sum_m K_m K_m`.
    pub kk: &'a Matrix,
    /// Observed `(other index, response)` pairs for each sample of this side.
    pub obs: &'a [Vec<(usize, f64)>],
}

pub(super) fn update_lambda(st: &mut SideState, hp: &Hyperparameters) {
    let (n, r) = st.a_mean.shape();
    for s in 0..r {
        for i in 0..n {
            let a2 = st.a_mean[(i, s)].powi(2) + st.a_cov[s][(i, i)];
            st.lambda_shape[(i, s)] = hp.alpha_lambda + 0.5;
            st.lambda_scale[(i, s)] = 1.0 / (1.0 / hp.beta_lambda + 0.5 * a2);
        }
    }
}

pub(super) fn update_a(st: &mut SideState, data: &SideData<'_>, hp: &Hyperparameters, factor: &str) -> Result<()> {
    let (n, r) = st.a_mean.shape();
    let inv_g2 = 1.0 / (hp.sigma_g * hp.sigma_g);
    // sum_m K_m E[G_m]
    let mut kg = Matrix::zeros(n, r);
    for (k, g) in data.kernels.kernels().iter().zip(&st.g_mean) {
        kg.gemm(1.0, &k.values, g, 1.0);
    }
    let lambda = st.lambda_mean();
    for s in 0..r {
        let mut prec = data.kk * inv_g2;
        for i in 0..n {
            prec[(i, i)] += lambda[(i, s)];
        }
        let (cov, _) = spd_inverse(&prec, factor)?;
        let mean = &cov * kg.column(s) * inv_g2;
        st.a_mean.set_column(s, &mean);
        st.a_cov[s] = cov;
    }
    Ok(())
}

pub(super) fn update_g(st: &mut SideState, data: &SideData<'_>, hp: &Hyperparameters, m: usize) {
    let r = st.n_components();
    let p = st.n_views();
    let inv_g2 = 1.0 / (hp.sigma_g * hp.sigma_g);
    let inv_h2 = 1.0 / (hp.sigma_h * hp.sigma_h);
    let ka = data.kernels.matrix(m) * &st.a_mean;
    for s in 0..r {
        let eee = st.e_second_moment(s);
        let var = 1.0 / (inv_g2 + eee[(m, m)] * inv_h2);
        let mut rhs = ka.column(s) * inv_g2 + st.h_mean.column(s) * (st.e_mean[(m, s)] * inv_h2);
        for o in (0..p).filter(|&o| o != m) {
            rhs.axpy(-eee[(m, o)] * inv_h2, &st.g_mean[o].column(s), 1.0);
        }
        st.g_mean[m].set_column(s, &(rhs * var));
        st.g_var[(m, s)] = var;
    }
}

pub(super) fn update_eta(st: &mut SideState, hp: &Hyperparameters, mode: WeightMode) {
    let (p, r) = st.e_mean.shape();
    for m in 0..p {
        for s in 0..r {
            let src = match mode {
                WeightMode::ComponentWise => s,
                WeightMode::SharedAcrossComponents => 0,
            };
            let e2 = st.e_mean[(m, src)].powi(2) + st.e_cov[src][(m, m)];
            st.eta_shape[(m, s)] = hp.alpha_eta + 0.5;
            st.eta_scale[(m, s)] = 1.0 / (1.0 / hp.beta_eta + 0.5 * e2);
        }
    }
}

/// `(E[G^s]^T E[G^s] + N diag(var_s), E[G^s]^T E[h_s])` for component `s`.
pub(super) fn g_moments(st: &SideState, s: usize) -> (Matrix, DVector<f64>) {
    let n = st.n_samples() as f64;
    let gs = st.g_component(s);
    let mut m = gs.transpose() * &gs;
    for v in 0..st.n_views() {
        m[(v, v)] += n * st.g_var[(v, s)];
    }
    let b = gs.transpose() * st.h_mean.column(s);
    (m, b)
}

pub(super) fn update_e(st: &mut SideState, hp: &Hyperparameters, mode: WeightMode, factor: &str) -> Result<()> {
    let (p, r) = st.e_mean.shape();
    let inv_h2 = 1.0 / (hp.sigma_h * hp.sigma_h);
    let eta = st.eta_mean();
    match mode {
        WeightMode::ComponentWise => {
            for s in 0..r {
                let (gg, gh) = g_moments(st, s);
                let mut prec = gg * inv_h2;
                for m in 0..p {
                    prec[(m, m)] += eta[(m, s)];
                }
                let (cov, _) = spd_inverse(&prec, factor)?;
                let mean = &cov * gh * inv_h2;
                st.e_mean.set_column(s, &mean);
                st.e_cov[s] = cov;
            }
        }
        WeightMode::SharedAcrossComponents => {
            let mut prec = Matrix::from_diagonal(&eta.column(0).into_owned());
            let mut rhs = DVector::zeros(p);
            for s in 0..r {
                let (gg, gh) = g_moments(st, s);
                prec += gg * inv_h2;
                rhs += gh * inv_h2;
            }
            let (cov, _) = spd_inverse(&prec, factor)?;
            let mean = &cov * rhs;
            for s in 0..r {
                st.e_mean.set_column(s, &mean);
                st.e_cov[s] = cov.clone();
            }
        }
    }
    Ok(())
}

pub(super) fn update_h(
    st: &mut SideState,
    other: &SideState,
    data: &SideData<'_>,
    hp: &Hyperparameters,
    factor: &str,
) -> Result<()> {
    let (n, r) = st.h_mean.shape();
    let inv_h2 = 1.0 / (hp.sigma_h * hp.sigma_h);
    let inv_y2 = 1.0 / (hp.sigma_y * hp.sigma_y);
    let f = st.combined_g();
    let other_second: Vec<Matrix> = (0..other.n_samples()).map(|j| other.h_second_moment(j)).collect();
    for i in 0..n {
        let mut prec = Matrix::identity(r, r) * inv_h2;
        let mut rhs = f.row(i).transpose() * inv_h2;
        for &(j, y) in &data.obs[i] {
            for (a, b) in prec.iter_mut().zip(other_second[j].iter()) {
                *a += inv_y2 * b;
            }
            rhs.axpy(y * inv_y2, &other.h_mean.row(j).transpose(), 1.0);
        }
        let (cov, _) = spd_inverse(&prec, factor)?;
        let mean = &cov * rhs;
        st.h_mean.set_row(i, &mean.transpose());
        st.h_cov[i] = cov;
    }
    Ok(())
}
