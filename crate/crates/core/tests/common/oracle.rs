//! Independent Monte Carlo estimate of the bound for `P = R = 1` on both
//! sides, sampling every factor of `q` and scoring with library densities.

use cwkbmf::inference::{Hyperparameters, Side, SideState, VariationalState};
use cwkbmf::linalg::Matrix;
use nalgebra::{Cholesky, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{Continuous, Gamma, Normal};

use super::Instance;

fn normal_ln(x: f64, mean: f64, var: f64) -> f64 {
    Normal::new(mean, var.sqrt()).unwrap().ln_pdf(x)
}

/// Gamma with shape/scale, evaluated through statrs' shape/rate form.
fn gamma_ln(x: f64, shape: f64, scale: f64) -> f64 {
    Gamma::new(shape, 1.0 / scale).unwrap().ln_pdf(x)
}

fn gamma_draw(rng: &mut ChaCha8Rng, shape: f64, scale: f64) -> f64 {
    rng.sample(rand_distr::Gamma::new(shape, scale).unwrap())
}

fn std_normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(rand_distr::StandardNormal)
}

/// Log density of `N(mean, cov)` at `x` and a draw from it.
struct Mvn {
    mean: DVector<f64>,
    chol: Matrix,
    log_norm: f64,
}

impl Mvn {
    fn new(mean: DVector<f64>, cov: &Matrix) -> Mvn {
        let chol = Cholesky::new(cov.clone()).unwrap().l();
        let n = mean.len() as f64;
        let logdet: f64 = 2.0 * chol.diagonal().iter().map(|v| v.ln()).sum::<f64>();
        let log_norm = -0.5 * n * (2.0 * std::f64::consts::PI).ln() - 0.5 * logdet;
        Mvn { mean, chol, log_norm }
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> DVector<f64> {
        let z = DVector::from_fn(self.mean.len(), |_, _| std_normal(rng));
        &self.mean + &self.chol * z
    }

    fn ln_pdf(&self, x: &DVector<f64>) -> f64 {
        let w = self.chol.solve_lower_triangular(&(x - &self.mean)).unwrap();
        self.log_norm - 0.5 * w.norm_squared()
    }
}

/// One sample of a side with `P = R = 1`: `(log p - log q)` of everything
/// but the response likelihood, and the sampled `h`.
fn sample_side(st: &SideState, k: &Matrix, hp: &Hyperparameters, q_a: &Mvn, rng: &mut ChaCha8Rng) -> (f64, Vec<f64>) {
    let n = st.a_mean.nrows();
    let mut lp = 0.0;
    let mut lq = 0.0;

    let lambda: Vec<f64> = (0..n)
        .map(|i| gamma_draw(rng, st.lambda_shape[(i, 0)], st.lambda_scale[(i, 0)]))
        .collect();
    for (i, &l) in lambda.iter().enumerate() {
        lp += gamma_ln(l, hp.alpha_lambda, hp.beta_lambda);
        lq += gamma_ln(l, st.lambda_shape[(i, 0)], st.lambda_scale[(i, 0)]);
    }

    let a = q_a.draw(rng);
    lq += q_a.ln_pdf(&a);
    for i in 0..n {
        lp += normal_ln(a[i], 0.0, 1.0 / lambda[i]);
    }

    let ka = k * &a;
    let gv = st.g_var[(0, 0)];
    let g: Vec<f64> = (0..n)
        .map(|i| st.g_mean[0][(i, 0)] + gv.sqrt() * std_normal(rng))
        .collect();
    for i in 0..n {
        lq += normal_ln(g[i], st.g_mean[0][(i, 0)], gv);
        lp += normal_ln(g[i], ka[i], hp.sigma_g * hp.sigma_g);
    }

    let eta = gamma_draw(rng, st.eta_shape[(0, 0)], st.eta_scale[(0, 0)]);
    lq += gamma_ln(eta, st.eta_shape[(0, 0)], st.eta_scale[(0, 0)]);
    lp += gamma_ln(eta, hp.alpha_eta, hp.beta_eta);

    let ev = st.e_cov[0][(0, 0)];
    let e = st.e_mean[(0, 0)] + ev.sqrt() * std_normal(rng);
    lq += normal_ln(e, st.e_mean[(0, 0)], ev);
    lp += normal_ln(e, 0.0, 1.0 / eta);

    let mut h = vec![0.0; n];
    for i in 0..n {
        let hv = st.h_cov[i][(0, 0)];
        h[i] = st.h_mean[(i, 0)] + hv.sqrt() * std_normal(rng);
        lq += normal_ln(h[i], st.h_mean[(i, 0)], hv);
        lp += normal_ln(h[i], e * g[i], hp.sigma_h * hp.sigma_h);
    }
    (lp - lq, h)
}

/// Mean and standard error of `ln p(Y, theta) - ln q(theta)` over `samples`
/// draws from `q`.
pub fn monte_carlo_bound(
    inst: &Instance,
    state: &VariationalState,
    hp: &Hyperparameters,
    samples: usize,
    seed: u64,
) -> (f64, f64) {
    let kx = inst.kx.matrix(0).clone();
    let kz = inst.kz.matrix(0).clone();
    let (sx, sz) = (state.side(Side::X), state.side(Side::Z));
    let qa_x = Mvn::new(sx.a_mean.column(0).into_owned(), &sx.a_cov[0]);
    let qa_z = Mvn::new(sz.a_mean.column(0).into_owned(), &sz.a_cov[0]);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut sum, mut sum2) = (0.0, 0.0);
    for _ in 0..samples {
        let (wx, hx) = sample_side(sx, &kx, hp, &qa_x, &mut rng);
        let (wz, hz) = sample_side(sz, &kz, hp, &qa_z, &mut rng);
        let mut w = wx + wz;
        for (i, j) in inst.y.observed() {
            w += normal_ln(inst.y.values[(i, j)], hx[i] * hz[j], hp.sigma_y * hp.sigma_y);
        }
        sum += w;
        sum2 += w * w;
    }
    let n = samples as f64;
    let mean = sum / n;
    (mean, ((sum2 / n - mean * mean) / (n - 1.0)).sqrt())
}
