use rand_distr::{Distribution, StandardNormal};

use super::elbo::{likelihood_term, side_terms};
use super::state::{Factor, Side, SideState, VariationalState};
use super::updates::{update_a, update_e, update_eta, update_g, update_h, update_lambda, SideData};
use super::{ModelConfig, ResponseMatrix, WeightMode};
use crate::error::{Error, Result};
use crate::kernelviews::KernelSet;
use crate::linalg::Matrix;
use crate::rng::{derive_seed, stream_rng};

/// Relative jitter up to which a kernel is still accepted as PSD.
const PSD_REPAIR_TOL: f64 = 1e-6;

/// A model bound to its data: kernels for both sides, the response matrix and
/// precomputed quantities. Drives initialisation, coordinate updates and the
/// bound evaluation. The response matrix is used as given (no normalisation;
/// see [`super::fit`] for that).
pub struct VariationalProblem<'a> {
    config: &'a ModelConfig,
    kx: &'a KernelSet,
    kz: &'a KernelSet,
    kk_x: Matrix,
    kk_z: Matrix,
    row_obs: Vec<Vec<(usize, f64)>>,
    col_obs: Vec<Vec<(usize, f64)>>,
    /// Responses with unobserved entries set to zero.
    y_filled: Matrix,
    row_ids: Vec<String>,
    col_ids: Vec<String>,
}

fn kernel_square_sum(k: &KernelSet) -> Matrix {
    let n = k.n_samples();
    let mut kk = Matrix::zeros(n, n);
    for kern in k.kernels() {
        kk.gemm(1.0, &kern.values, &kern.values, 1.0);
    }
    crate::linalg::symmetrize(&mut kk);
    kk
}

impl<'a> VariationalProblem<'a> {
    pub fn new(config: &'a ModelConfig, kx: &'a KernelSet, kz: &'a KernelSet, y: &ResponseMatrix) -> Result<Self> {
        config.validate()?;
        if kx.n_samples() != y.nrows() || kz.n_samples() != y.ncols() {
            return Err(Error::Dimension(format!(
                "kernels are {}x{} and {}x{} but the response matrix is {}x{}",
                kx.n_samples(),
                kx.n_samples(),
                kz.n_samples(),
                kz.n_samples(),
                y.nrows(),
                y.ncols()
            )));
        }
        for (label, ks) in [("x", kx), ("z", kz)] {
            for (name, k) in ks.names().iter().zip(ks.kernels()) {
                if !crate::linalg::is_psd_repairable(&k.values, PSD_REPAIR_TOL) {
                    return Err(Error::InvalidInput(format!(
                        "{label}-side kernel `{name}` is not positive semi-definite"
                    )));
                }
            }
        }
        let mut y_filled = Matrix::zeros(y.nrows(), y.ncols());
        for (i, j) in y.observed() {
            y_filled[(i, j)] = y.values[(i, j)];
        }
        let mut row_obs = vec![Vec::new(); y.nrows()];
        let mut col_obs = vec![Vec::new(); y.ncols()];
        for (i, j) in y.observed() {
            let v = y.values[(i, j)];
            row_obs[i].push((j, v));
            col_obs[j].push((i, v));
        }
        Ok(VariationalProblem {
            config,
            kx,
            kz,
            kk_x: kernel_square_sum(kx),
            kk_z: kernel_square_sum(kz),
            row_obs,
            col_obs,
            y_filled,
            row_ids: y.row_ids.clone(),
            col_ids: y.col_ids.clone(),
        })
    }

    pub fn config(&self) -> &ModelConfig {
        self.config
    }

    fn data(&self, side: Side) -> SideData<'_> {
        match side {
            Side::X => SideData {
                kernels: self.kx,
                kk: &self.kk_x,
                obs: &self.row_obs,
            },
            Side::Z => SideData {
                kernels: self.kz,
                kk: &self.kk_z,
                obs: &self.col_obs,
            },
        }
    }

    fn init_side(&self, side: Side) -> SideState {
        let hp = &self.config.hyper;
        let r = self.config.components;
        let kernels = self.data(side).kernels;
        let n = kernels.n_samples();
        let p = kernels.n_views();

        // Row i of A is drawn from a stream keyed by the sample's id, so that
        // permuting samples permutes the initial state.
        let root = derive_seed(derive_seed(self.config.seed, "init"), side.label());
        let ids = match side {
            Side::X => &self.row_ids,
            Side::Z => &self.col_ids,
        };
        let scale = 1.0 / (n as f64).sqrt();
        let mut a_mean = Matrix::zeros(n, r);
        for (i, id) in ids.iter().enumerate() {
            let mut rng = stream_rng(root, id);
            for s in 0..r {
                let z: f64 = StandardNormal.sample(&mut rng);
                a_mean[(i, s)] = z * scale;
            }
        }
        let g_mean: Vec<Matrix> = kernels.kernels().iter().map(|k| &k.values * &a_mean).collect();
        SideState {
            lambda_shape: Matrix::from_element(n, r, hp.alpha_lambda),
            lambda_scale: Matrix::from_element(n, r, hp.beta_lambda),
            a_mean,
            a_cov: vec![Matrix::identity(n, n); r],
            g_mean,
            g_var: Matrix::from_element(p, r, hp.sigma_g * hp.sigma_g),
            eta_shape: Matrix::from_element(p, r, hp.alpha_eta),
            eta_scale: Matrix::from_element(p, r, hp.beta_eta),
            e_mean: Matrix::from_element(p, r, 1.0 / p as f64),
            e_cov: vec![Matrix::identity(p, p); r],
            h_mean: self.spectral_start(side),
            h_cov: vec![Matrix::identity(r, r) * (hp.sigma_h * hp.sigma_h); n],
        }
    }

    /// Rank-`R` factor of the zero-filled responses, `U sqrt(S)` for the x
    /// side and `V sqrt(S)` for the z side. Each singular pair is signed so
    /// that its left vector sums to a non-negative value, which keeps the
    /// start invariant under row and column permutations. Components beyond
    /// the rank of the matrix start at zero.
    fn spectral_start(&self, side: Side) -> Matrix {
        let r = self.config.components;
        let svd = self.y_filled.clone().svd(true, true);
        let (u, v_t) = (svd.u.expect("requested U"), svd.v_t.expect("requested V^T"));
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
        let n = match side {
            Side::X => u.nrows(),
            Side::Z => v_t.ncols(),
        };
        let mut h = Matrix::zeros(n, r);
        for (s, &k) in order.iter().take(r).enumerate() {
            let scale = svd.singular_values[k].sqrt();
            let sign = if u.column(k).iter().map(|v| v.powi(3)).sum::<f64>() >= 0.0 {
                1.0
            } else {
                -1.0
            };
            for i in 0..n {
                let v = match side {
                    Side::X => u[(i, k)],
                    Side::Z => v_t[(k, i)],
                };
                h[(i, s)] = sign * scale * v;
            }
        }
        h
    }

    /// Deterministic starting point: priors for the gamma factors, random
    /// projection means, uniform kernel weights, and latent factors from a
    /// truncated SVD of the observed responses.
    pub fn initialize(&self) -> VariationalState {
        VariationalState {
            x: self.init_side(Side::X),
            z: self.init_side(Side::Z),
            elbo_trace: Vec::new(),
            sweep_count: 0,
        }
    }

    /// Sets `factor` of `side` to its optimum given every other factor.
    pub fn update_factor(&self, state: &mut VariationalState, side: Side, factor: Factor) -> Result<()> {
        let hp = &self.config.hyper;
        let mode = self.config.weight_mode;
        let data = self.data(side);
        let name = factor.name(side);
        let (st, other) = match side {
            Side::X => (&mut state.x, &state.z),
            Side::Z => (&mut state.z, &state.x),
        };
        match factor {
            Factor::Lambda => update_lambda(st, hp),
            Factor::A => update_a(st, &data, hp, &name)?,
            Factor::G(m) => {
                if m >= st.n_views() {
                    return Err(Error::InvalidInput(format!("{name}: no such view")));
                }
                update_g(st, &data, hp, m)
            }
            Factor::Eta => update_eta(st, hp, mode),
            Factor::E => update_e(st, hp, mode, &name)?,
            Factor::H => update_h(st, other, &data, hp, &name)?,
        }
        if !state.side(side).all_finite() {
            return Err(Error::numerical(name, "update produced non-finite moments"));
        }
        Ok(())
    }

    /// Update order within one side.
    pub fn factor_order(&self, side: Side) -> Vec<Factor> {
        let p = self.data(side).kernels.n_views();
        let mut order = vec![Factor::Lambda, Factor::A];
        order.extend((0..p).map(Factor::G));
        order.extend([Factor::Eta, Factor::E, Factor::H]);
        order
    }

    /// One coordinate-ascent pass: every x-side factor, then every z-side
    /// factor, in [`Self::factor_order`].
    pub fn update_sweep(&self, state: &mut VariationalState) -> Result<()> {
        for side in [Side::X, Side::Z] {
            for factor in self.factor_order(side) {
                self.update_factor(state, side, factor)?;
            }
        }
        state.sweep_count += 1;
        Ok(())
    }

    pub fn elbo(&self, state: &VariationalState) -> Result<f64> {
        let hp = &self.config.hyper;
        let mode = self.config.weight_mode;
        let x = side_terms(&state.x, &self.data(Side::X), hp, mode, "x")?;
        let z = side_terms(&state.z, &self.data(Side::Z), hp, mode, "z")?;
        let lik = likelihood_term(&state.x, &state.z, &self.row_obs, hp)?;
        Ok(x + z + lik)
    }

    /// Runs sweeps until `max_sweeps` or until the relative change of the
    /// bound drops below `elbo_rel_tol`, appending to the trace.
    pub fn run(&self, state: &mut VariationalState) -> Result<()> {
        if state.elbo_trace.is_empty() {
            state.elbo_trace.push(self.elbo(state)?);
        }
        for _ in 0..self.config.max_sweeps {
            self.update_sweep(state)?;
            let prev = *state.elbo_trace.last().expect("trace is non-empty");
            let cur = self.elbo(state)?;
            state.elbo_trace.push(cur);
            if ((cur - prev) / prev.abs().max(f64::MIN_POSITIVE)).abs() < self.config.elbo_rel_tol {
                break;
            }
        }
        Ok(())
    }

    pub fn weight_mode(&self) -> WeightMode {
        self.config.weight_mode
    }
}
