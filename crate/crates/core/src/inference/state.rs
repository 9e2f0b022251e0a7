use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::WeightMode;
use crate::linalg::Matrix;
use crate::serde_matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    X,
    Z,
}

impl Side {
    pub fn label(self) -> &'static str {
        match self {
            Side::X => "x",
            Side::Z => "z",
        }
    }
}

/// One variational factor of one side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Factor {
    Lambda,
    A,
    /// `q(G_m)` of view `m`.
    G(usize),
    Eta,
    E,
    H,
}

impl Factor {
    pub fn name(self, side: Side) -> String {
        let s = side.label();
        match self {
            Factor::Lambda => format!("q(Lambda_{s})"),
            Factor::A => format!("q(A_{s})"),
            Factor::G(m) => format!("q(G_{s},{m})"),
            Factor::Eta => format!("q(eta_{s})"),
            Factor::E => format!("q(e_{s})"),
            Factor::H => format!("q(H_{s})"),
        }
    }
}

/// Variational parameters of one side of the factorisation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SideState {
    /// Gamma shape of `q(lambda)`, `N x R`.
    #[serde(with = "serde_matrix")]
    pub lambda_shape: Matrix,
    /// Gamma scale of `q(lambda)`, `N x R`.
    #[serde(with = "serde_matrix")]
    pub lambda_scale: Matrix,
    /// Mean of `q(A)`, `N x R`.
    #[serde(with = "serde_matrix")]
    pub a_mean: Matrix,
    /// One `N x N` covariance per component.
    #[serde(with = "serde_matrix::vec")]
    pub a_cov: Vec<Matrix>,
    /// Mean of `q(G_m)`, one `N x R` matrix per view.
    #[serde(with = "serde_matrix::vec")]
    pub g_mean: Vec<Matrix>,
    /// Variance of every entry of `G_m[:, s]`, stored `P x R`.
    #[serde(with = "serde_matrix")]
    pub g_var: Matrix,
    /// Gamma shape of `q(eta)`, `P x R`.
    #[serde(with = "serde_matrix")]
    pub eta_shape: Matrix,
    /// Gamma scale of `q(eta)`, `P x R`.
    #[serde(with = "serde_matrix")]
    pub eta_scale: Matrix,
    /// Mean of `q(e)`, `P x R`.
    #[serde(with = "serde_matrix")]
    pub e_mean: Matrix,
    /// One `P x P` covariance per component (identical copies when weights
    /// are shared across components).
    #[serde(with = "serde_matrix::vec")]
    pub e_cov: Vec<Matrix>,
    /// Mean of `q(H)`, `N x R`.
    #[serde(with = "serde_matrix")]
    pub h_mean: Matrix,
    /// One `R x R` covariance per row.
    #[serde(with = "serde_matrix::vec")]
    pub h_cov: Vec<Matrix>,
}

impl SideState {
    pub fn n_samples(&self) -> usize {
        self.a_mean.nrows()
    }

    pub fn n_components(&self) -> usize {
        self.a_mean.ncols()
    }

    pub fn n_views(&self) -> usize {
        self.g_mean.len()
    }

    /// `E[lambda]`, `N x R`.
    pub fn lambda_mean(&self) -> Matrix {
        self.lambda_shape.component_mul(&self.lambda_scale)
    }

    /// `E[eta]`, `P x R`.
    pub fn eta_mean(&self) -> Matrix {
        self.eta_shape.component_mul(&self.eta_scale)
    }

    /// `E[e e^T]` for component `s`, `P x P`.
    pub fn e_second_moment(&self, s: usize) -> Matrix {
        let mu = self.e_mean.column(s);
        mu * mu.transpose() + &self.e_cov[s]
    }

    /// `E[h_i h_i^T]`, `R x R`.
    pub fn h_second_moment(&self, i: usize) -> Matrix {
        let mu = self.h_mean.row(i);
        mu.transpose() * mu + &self.h_cov[i]
    }

    /// `N x P` matrix whose column `m` is `E[G_m[:, s]]`.
    pub fn g_component(&self, s: usize) -> Matrix {
        let n = self.n_samples();
        let p = self.n_views();
        Matrix::from_fn(n, p, |i, m| self.g_mean[m][(i, s)])
    }

    /// `sum_m E[e_m^s] E[G_m[i, s]]`, `N x R`.
    pub fn combined_g(&self) -> Matrix {
        let mut f = Matrix::zeros(self.n_samples(), self.n_components());
        for (m, g) in self.g_mean.iter().enumerate() {
            for s in 0..self.n_components() {
                let w = self.e_mean[(m, s)];
                f.column_mut(s).axpy(w, &g.column(s), 1.0);
            }
        }
        f
    }

    pub(crate) fn all_finite(&self) -> bool {
        let mats = [
            &self.lambda_shape,
            &self.lambda_scale,
            &self.a_mean,
            &self.g_var,
            &self.eta_shape,
            &self.eta_scale,
            &self.e_mean,
            &self.h_mean,
        ];
        mats.iter().all(|m| m.iter().all(|v| v.is_finite()))
            && [&self.a_cov, &self.g_mean, &self.e_cov, &self.h_cov]
                .iter()
                .all(|v| v.iter().all(|m| m.iter().all(|x| x.is_finite())))
    }

    /// Multiplies the parameters of `factor` by random relative perturbations
    /// of size `rel`. Covariances are perturbed as `(I + rel E) C (I + rel E)^T`
    /// so they stay positive definite; positive parameters stay positive.
    ///
    /// With tied weights the perturbation of `q(eta)` and `q(e)` is drawn once
    /// and copied to every component.
    pub fn perturb<R: Rng>(&mut self, factor: Factor, mode: WeightMode, rel: f64, rng: &mut R) {
        fn scale_pos<R: Rng>(m: &mut Matrix, rel: f64, rng: &mut R) {
            for v in m.iter_mut() {
                let u: f64 = rng.sample(StandardNormal);
                *v *= (rel * u).exp();
            }
        }
        fn shift<R: Rng>(m: &mut Matrix, rel: f64, rng: &mut R) {
            let rms = (m.norm_squared() / m.len().max(1) as f64).sqrt().max(1e-12);
            for v in m.iter_mut() {
                let u: f64 = rng.sample(StandardNormal);
                *v += rel * u * v.abs().max(rms);
            }
        }
        fn congruence<R: Rng>(c: &mut Matrix, rel: f64, rng: &mut R) {
            let n = c.nrows();
            let e = Matrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
            let t = Matrix::identity(n, n) + e * rel;
            let mut out = &t * &*c * t.transpose();
            crate::linalg::symmetrize(&mut out);
            *c = out;
        }
        match factor {
            Factor::Lambda => {
                scale_pos(&mut self.lambda_shape, rel, rng);
                scale_pos(&mut self.lambda_scale, rel, rng);
            }
            Factor::A => {
                shift(&mut self.a_mean, rel, rng);
                for c in &mut self.a_cov {
                    congruence(c, rel, rng);
                }
            }
            Factor::G(m) => {
                shift(&mut self.g_mean[m], rel, rng);
                let mut row = self.g_var.row(m).into_owned();
                for v in row.iter_mut() {
                    let u: f64 = rng.sample(StandardNormal);
                    *v *= (rel * u).exp();
                }
                self.g_var.set_row(m, &row);
            }
            Factor::Eta => {
                scale_pos(&mut self.eta_shape, rel, rng);
                scale_pos(&mut self.eta_scale, rel, rng);
            }
            Factor::E => {
                shift(&mut self.e_mean, rel, rng);
                for c in &mut self.e_cov {
                    congruence(c, rel, rng);
                }
            }
            Factor::H => {
                shift(&mut self.h_mean, rel, rng);
                for c in &mut self.h_cov {
                    congruence(c, rel, rng);
                }
            }
        }
        if mode == WeightMode::SharedAcrossComponents && matches!(factor, Factor::Eta | Factor::E) {
            self.tie_weights();
        }
    }

    /// Copies component 0 of `q(eta)` and `q(e)` to every component.
    pub fn tie_weights(&mut self) {
        let shape = self.eta_shape.column(0).into_owned();
        let scale = self.eta_scale.column(0).into_owned();
        let mean = self.e_mean.column(0).into_owned();
        for s in 1..self.n_components() {
            self.eta_shape.set_column(s, &shape);
            self.eta_scale.set_column(s, &scale);
            self.e_mean.set_column(s, &mean);
            self.e_cov[s] = self.e_cov[0].clone();
        }
    }
}

/// All variational parameters of a model plus the bound history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariationalState {
    pub x: SideState,
    pub z: SideState,
    pub elbo_trace: Vec<f64>,
    pub sweep_count: usize,
}

impl VariationalState {
    pub fn side(&self, side: Side) -> &SideState {
        match side {
            Side::X => &self.x,
            Side::Z => &self.z,
        }
    }

    pub fn side_mut(&mut self, side: Side) -> &mut SideState {
        match side {
            Side::X => &mut self.x,
            Side::Z => &mut self.z,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.x.all_finite() && self.z.all_finite()
    }

    /// `E[H_x] E[H_z]^T`.
    pub fn mean_prediction(&self) -> Matrix {
        &self.x.h_mean * self.z.h_mean.transpose()
    }

    /// Largest absolute difference over every variational parameter.
    pub fn max_abs_diff(&self, other: &VariationalState) -> f64 {
        fn d(a: &Matrix, b: &Matrix) -> f64 {
            a.iter().zip(b.iter()).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
        }
        fn dv(a: &[Matrix], b: &[Matrix]) -> f64 {
            a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max(d(x, y)))
        }
        let side = |a: &SideState, b: &SideState| {
            [
                d(&a.lambda_shape, &b.lambda_shape),
                d(&a.lambda_scale, &b.lambda_scale),
                d(&a.a_mean, &b.a_mean),
                dv(&a.a_cov, &b.a_cov),
                dv(&a.g_mean, &b.g_mean),
                d(&a.g_var, &b.g_var),
                d(&a.eta_shape, &b.eta_shape),
                d(&a.eta_scale, &b.eta_scale),
                d(&a.e_mean, &b.e_mean),
                dv(&a.e_cov, &b.e_cov),
                d(&a.h_mean, &b.h_mean),
                dv(&a.h_cov, &b.h_cov),
            ]
            .into_iter()
            .fold(0.0f64, f64::max)
        };
        side(&self.x, &other.x).max(side(&self.z, &other.z))
    }
}
