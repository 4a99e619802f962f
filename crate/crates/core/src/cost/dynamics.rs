//! Transport cost under linear time-invariant prior dynamics
//! `x' = A x + B u`: minimum control energy between two states over
//! `[t0, t1]`, via the state-transition matrix and controllability Gramian.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Relative eigenvalue floor below which the Gramian counts as singular.
const CONTROLLABILITY_RATIO: f64 = 1e-10;
/// Absolute eigenvalue floor for the inverse square root.
const EIGEN_FLOOR: f64 = 1e-12;
const TAYLOR_ORDER: usize = 18;

#[derive(Debug, Clone, PartialEq)]
pub struct DynamicsSpec {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub t0: f64,
    pub t1: f64,
    /// Simpson panels; must be even and positive.
    pub quadrature_steps: usize,
}

impl DynamicsSpec {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, t0: f64, t1: f64) -> Result<Self> {
        let spec = Self {
            a,
            b,
            t0,
            t1,
            quadrature_steps: 1000,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_steps(mut self, steps: usize) -> Result<Self> {
        self.quadrature_steps = steps;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.a.nrows();
        if n == 0 || self.a.ncols() != n {
            return Err(Error::dims("drift matrix columns", n, self.a.ncols()));
        }
        if self.b.nrows() != n {
            return Err(Error::dims("input matrix rows", n, self.b.nrows()));
        }
        if self.b.ncols() == 0 {
            return Err(Error::dims("input matrix columns", 1, 0));
        }
        if self.a.iter().chain(self.b.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "dynamics matrices".into(),
            });
        }
        if !(self.t1 > self.t0) || !self.t0.is_finite() || !self.t1.is_finite() {
            return Err(Error::invalid("t1", "must be finite and greater than t0"));
        }
        if self.quadrature_steps == 0 || !self.quadrature_steps.is_multiple_of(2) {
            return Err(Error::invalid("quadrature_steps", "must be a positive even integer"));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }
}

/// State transition `Phi = exp(A (t1 - t0))` and Gramian
/// `M = int_{t0}^{t1} Phi(t1, s) B B^T Phi(t1, s)^T ds`.
#[derive(Debug, Clone, PartialEq)]
pub struct Gramian {
    pub phi: DMatrix<f64>,
    pub m: DMatrix<f64>,
}

/// Matrix exponential: scaling and squaring around a degree-18 Taylor
/// polynomial.
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let norm = (0..n)
        .map(|j| a.column(j).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let x = a / 2f64.powi(squarings);

    // Horner: I + X/1 (I + X/2 (I + ... (I + X/18)))
    let id = DMatrix::<f64>::identity(n, n);
    let mut e = id.clone();
    for k in (1..=TAYLOR_ORDER).rev() {
        e = &id + (&x * &e) / k as f64;
    }
    for _ in 0..squarings {
        e = &e * &e;
    }
    e
}

pub fn wpd_gramian(spec: &DynamicsSpec) -> Result<Gramian> {
    spec.validate()?;
    let horizon = spec.t1 - spec.t0;
    let steps = spec.quadrature_steps;
    let h = horizon / steps as f64;
    let bbt = &spec.b * spec.b.transpose();
    let n = spec.dim();

    // Substituting sigma = t1 - s turns the integrand into e^{A sigma} BB^T e^{A^T sigma}.
    let mut m = DMatrix::<f64>::zeros(n, n);
    for k in 0..=steps {
        let weight = if k == 0 || k == steps {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let e = expm(&(&spec.a * (k as f64 * h)));
        m += (&e * &bbt * e.transpose()) * weight;
    }
    m *= h / 3.0;
    let m = (&m + m.transpose()) * 0.5;

    let eig = SymmetricEigen::new(m.clone()).eigenvalues;
    let max_eig = eig.max();
    let min_eig = eig.min();
    if !(max_eig > 0.0) || min_eig <= CONTROLLABILITY_RATIO * max_eig {
        return Err(Error::NotControllable { min_eig, max_eig });
    }
    Ok(Gramian {
        phi: expm(&(&spec.a * horizon)),
        m,
    })
}

fn check_inputs(x: &[f64], y: &[f64], phi: &DMatrix<f64>, m: &DMatrix<f64>) -> Result<()> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::dims("Gramian columns", n, m.ncols()));
    }
    if phi.nrows() != n || phi.ncols() != n {
        return Err(Error::dims("transition matrix", n, phi.nrows().max(phi.ncols())));
    }
    if x.len() != n {
        return Err(Error::dims("initial state", n, x.len()));
    }
    if y.len() != n {
        return Err(Error::dims("final state", n, y.len()));
    }
    Ok(())
}

/// `0.5 (y - Phi x)^T M^-1 (y - Phi x)`.
pub fn wpd_cost(x: &[f64], y: &[f64], phi: &DMatrix<f64>, m: &DMatrix<f64>) -> Result<f64> {
    check_inputs(x, y, phi, m)?;
    let r = DVector::from_column_slice(y) - phi * DVector::from_column_slice(x);
    let chol = m.clone().cholesky().ok_or(Error::SingularGramian)?;
    let z = chol.solve(&r);
    Ok(0.5 * r.dot(&z))
}

/// Maps `(x, y)` to `(M^-1/2 Phi x, M^-1/2 y)`, under which the dynamics
/// cost becomes `0.5 |y_hat - x_hat|^2`.
pub fn whiten(x: &[f64], y: &[f64], phi: &DMatrix<f64>, m: &DMatrix<f64>) -> Result<(Vec<f64>, Vec<f64>)> {
    check_inputs(x, y, phi, m)?;
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    if eig.eigenvalues.iter().any(|&l| !(l >= EIGEN_FLOOR)) {
        return Err(Error::SingularGramian);
    }
    let inv_sqrt = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()));
    let w = &eig.eigenvectors * inv_sqrt * eig.eigenvectors.transpose();
    let xh = &w * (phi * DVector::from_column_slice(x));
    let yh = &w * DVector::from_column_slice(y);
    Ok((xh.as_slice().to_vec(), yh.as_slice().to_vec()))
}
