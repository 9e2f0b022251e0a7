use crate::error::{Error, Result};
use crate::linalg::{max_asymmetry, Matrix};

/// Tolerance on `|K - K^T|` for a training kernel.
pub const SYMMETRY_TOL: f64 = 1e-10;

/// A kernel matrix together with the Gaussian width it was computed with.
///
/// `width` is `None` for kernels that were not produced by the Gaussian
/// family (e.g. the identity kernel used when a side has no side data).
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    pub values: Matrix,
    pub width: Option<f64>,
}

impl Kernel {
    pub fn precomputed(values: Matrix) -> Self {
        Kernel { values, width: None }
    }

    pub fn identity(n: usize) -> Self {
        Kernel::precomputed(Matrix::identity(n, n))
    }

    /// Divides the kernel by the mean of its diagonal.
    pub fn trace_normalize(&mut self) {
        let n = self.values.nrows().min(self.values.ncols());
        if n == 0 {
            return;
        }
        let mean_diag = self.values.diagonal().sum() / n as f64;
        if mean_diag > 0.0 {
            self.values /= mean_diag;
        }
    }
}

fn check_finite(values: &Matrix, what: &str) -> Result<()> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!("{what} contains non-finite values")));
    }
    Ok(())
}

fn gaussian(sq_dist: f64, width: f64) -> f64 {
    (-sq_dist / (2.0 * width * width)).exp()
}

fn row_sq_norms(x: &Matrix) -> Vec<f64> {
    x.row_iter().map(|r| r.norm_squared()).collect()
}

/// Gaussian kernel `exp(-|x_i - x_j|^2 / (2 w^2))` with the width set to the
/// view dimensionality `w = d`.
pub fn gaussian_kernel(view_values: &Matrix) -> Result<Kernel> {
    gaussian_kernel_with_width(view_values, view_values.ncols() as f64)
}

pub fn gaussian_kernel_with_width(view_values: &Matrix, width: f64) -> Result<Kernel> {
    let (n, d) = view_values.shape();
    if n < 2 {
        return Err(Error::InvalidInput(format!("kernel needs at least 2 samples, got {n}")));
    }
    if d == 0 {
        return Err(Error::InvalidInput("kernel view has no features".into()));
    }
    if !(width.is_finite() && width > 0.0) {
        return Err(Error::InvalidInput(format!(
            "kernel width must be positive, got {width}"
        )));
    }
    check_finite(view_values, "view")?;

    let gram = view_values * view_values.transpose();
    let norms = row_sq_norms(view_values);
    let mut values = Matrix::zeros(n, n);
    for i in 0..n {
        values[(i, i)] = 1.0;
        for j in (i + 1)..n {
            let sq = (norms[i] + norms[j] - 2.0 * gram[(i, j)]).max(0.0);
            let v = gaussian(sq, width);
            values[(i, j)] = v;
            values[(j, i)] = v;
        }
    }
    Ok(Kernel {
        values,
        width: Some(width),
    })
}

/// Kernel between training rows and new rows (`N_train x M`) at a fixed width.
pub fn cross_kernel(train_values: &Matrix, new_values: &Matrix, width: f64) -> Result<Kernel> {
    if train_values.ncols() != new_values.ncols() {
        return Err(Error::Dimension(format!(
            "cross kernel: training view has {} features, new view has {}",
            train_values.ncols(),
            new_values.ncols()
        )));
    }
    if !(width.is_finite() && width > 0.0) {
        return Err(Error::InvalidInput(format!(
            "kernel width must be positive, got {width}"
        )));
    }
    check_finite(train_values, "training view")?;
    check_finite(new_values, "new view")?;
    let (n, m) = (train_values.nrows(), new_values.nrows());
    if m == 0 {
        return Ok(Kernel {
            values: Matrix::zeros(n, 0),
            width: Some(width),
        });
    }
    let gram = train_values * new_values.transpose();
    let tn = row_sq_norms(train_values);
    let nn = row_sq_norms(new_values);
    let values = Matrix::from_fn(n, m, |i, j| {
        gaussian((tn[i] + nn[j] - 2.0 * gram[(i, j)]).max(0.0), width)
    });
    Ok(Kernel {
        values,
        width: Some(width),
    })
}

/// Ordered collection of training kernels describing one side of the
/// factorisation. All kernels share the same sample axis.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSet {
    names: Vec<String>,
    kernels: Vec<Kernel>,
}

impl KernelSet {
    pub fn new(names: Vec<String>, kernels: Vec<Kernel>) -> Result<Self> {
        if names.len() != kernels.len() {
            return Err(Error::Dimension(format!(
                "{} view names for {} kernels",
                names.len(),
                kernels.len()
            )));
        }
        if kernels.is_empty() {
            return Err(Error::InvalidInput("kernel set has no views".into()));
        }
        let n = kernels[0].values.nrows();
        for (name, k) in names.iter().zip(&kernels) {
            let (r, c) = k.values.shape();
            if r != n || c != n {
                return Err(Error::Dimension(format!(
                    "kernel `{name}` is {r}x{c}, expected {n}x{n}"
                )));
            }
            check_finite(&k.values, &format!("kernel `{name}`"))?;
            let asym = max_asymmetry(&k.values);
            if asym > SYMMETRY_TOL {
                return Err(Error::InvalidInput(format!(
                    "kernel `{name}` is not symmetric (max asymmetry {asym:e})"
                )));
            }
        }
        Ok(KernelSet { names, kernels })
    }

    /// Unnamed views `view0, view1, ...`.
    pub fn from_matrices(matrices: Vec<Matrix>) -> Result<Self> {
        let names = (0..matrices.len()).map(|i| format!("view{i}")).collect();
        KernelSet::new(names, matrices.into_iter().map(Kernel::precomputed).collect())
    }

    pub fn identity(n: usize) -> Self {
        KernelSet {
            names: vec!["identity".into()],
            kernels: vec![Kernel::identity(n)],
        }
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn kernels(&self) -> &[Kernel] {
        &self.kernels
    }

    pub fn matrix(&self, m: usize) -> &Matrix {
        &self.kernels[m].values
    }

    pub fn n_views(&self) -> usize {
        self.kernels.len()
    }

    pub fn n_samples(&self) -> usize {
        self.kernels[0].values.nrows()
    }

    pub fn widths(&self) -> Vec<Option<f64>> {
        self.kernels.iter().map(|k| k.width).collect()
    }

    /// Training block `K[idx, idx]` of every view.
    pub fn restrict(&self, idx: &[usize]) -> KernelSet {
        let kernels = self
            .kernels
            .iter()
            .map(|k| Kernel {
                values: k.values.select_rows(idx).select_columns(idx),
                width: k.width,
            })
            .collect();
        KernelSet {
            names: self.names.clone(),
            kernels,
        }
    }

    /// Cross blocks `K[train, new]` of every view.
    pub fn cross(&self, train: &[usize], new: &[usize]) -> Vec<Kernel> {
        self.kernels
            .iter()
            .map(|k| Kernel {
                values: k.values.select_rows(train).select_columns(new),
                width: k.width,
            })
            .collect()
    }

    /// Permutes the sample axis: result row `i` is input row `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> KernelSet {
        self.restrict(perm)
    }

    /// Fails if some kernel is not positive semi-definite up to a relative
    /// diagonal jitter of `rel_tol`.
    pub fn check_psd(&self, rel_tol: f64) -> Result<()> {
        for (name, k) in self.names.iter().zip(&self.kernels) {
            if !crate::linalg::is_psd_repairable(&k.values, rel_tol) {
                return Err(Error::InvalidInput(format!(
                    "kernel `{name}` is not positive semi-definite"
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_rows_give_unit_entries() {
        let x = Matrix::from_row_slice(2, 2, &[0.3, -1.0, 0.3, -1.0]);
        let k = gaussian_kernel(&x).unwrap();
        assert_eq!(k.values[(0, 1)], 1.0);
    }

    #[test]
    fn one_dimensional_unit_distance() {
        let x = Matrix::from_row_slice(2, 1, &[0.0, 1.0]);
        let k = gaussian_kernel(&x).unwrap();
        assert!((k.values[(0, 1)] - (-0.5f64).exp()).abs() < 1e-15);
        assert!((k.values[(0, 1)] - 0.60653).abs() < 1e-5);
        assert_eq!(k.width, Some(1.0));
    }

    #[test]
    fn two_dimensional_width_is_dimension() {
        let x = Matrix::from_row_slice(2, 2, &[0.0, 0.0, 2.0, 0.0]);
        let k = gaussian_kernel(&x).unwrap();
        assert!((k.values[(0, 1)] - (-0.5f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn too_few_samples_or_nan_rejected() {
        assert!(gaussian_kernel(&Matrix::zeros(1, 3)).is_err());
        let mut x = Matrix::zeros(3, 2);
        x[(0, 0)] = f64::INFINITY;
        assert!(gaussian_kernel(&x).is_err());
    }

    #[test]
    fn cross_kernel_identical_row_and_empty() {
        let train = Matrix::from_row_slice(3, 2, &[0.0, 1.0, 2.0, -1.0, 0.5, 0.5]);
        let new = Matrix::from_row_slice(1, 2, &[2.0, -1.0]);
        let k = cross_kernel(&train, &new, 2.0).unwrap();
        assert_eq!(k.values.shape(), (3, 1));
        assert_eq!(k.values[(1, 0)], 1.0);
        assert!(k.values[(0, 0)] < 1.0 && k.values[(0, 0)] > 0.0);

        let empty = cross_kernel(&train, &Matrix::zeros(0, 2), 2.0).unwrap();
        assert_eq!(empty.values.shape(), (3, 0));

        assert!(cross_kernel(&train, &Matrix::zeros(1, 3), 2.0).is_err());
    }

    #[test]
    fn cross_kernel_matches_pairwise_formula() {
        let train = Matrix::from_row_slice(3, 2, &[0.1, -0.7, 1.3, 0.2, -0.4, 2.2]);
        let new = Matrix::from_row_slice(2, 2, &[0.9, 0.9, -1.5, 0.3]);
        let w = 2.0;
        let k = cross_kernel(&train, &new, w).unwrap();
        for i in 0..3 {
            for j in 0..2 {
                let d0 = train[(i, 0)] - new[(j, 0)];
                let d1 = train[(i, 1)] - new[(j, 1)];
                let expect = (-(d0 * d0 + d1 * d1) / (2.0 * w * w)).exp();
                assert!((k.values[(i, j)] - expect).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn kernel_set_rejects_asymmetric_and_mismatched() {
        let mut a = Matrix::identity(3, 3);
        a[(0, 1)] = 0.5;
        assert!(KernelSet::from_matrices(vec![a]).is_err());
        let b = KernelSet::from_matrices(vec![Matrix::identity(3, 3), Matrix::identity(2, 2)]);
        assert!(b.is_err());
        assert!(KernelSet::from_matrices(vec![]).is_err());
    }

    #[test]
    fn psd_check_flags_indefinite_kernel() {
        let k = Matrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        let set = KernelSet::from_matrices(vec![k]).unwrap();
        assert!(set.check_psd(1e-8).is_err());
        assert!(KernelSet::identity(4).check_psd(1e-8).is_ok());
    }

    #[test]
    fn trace_normalisation_is_identity_for_gaussian() {
        let x = Matrix::from_row_slice(3, 1, &[0.0, 1.0, 3.0]);
        let mut k = gaussian_kernel(&x).unwrap();
        let before = k.values.clone();
        k.trace_normalize();
        assert_eq!(before, k.values);
    }
}
