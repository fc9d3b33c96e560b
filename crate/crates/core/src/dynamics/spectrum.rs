//! Eigen-decomposition of the system matrix
//!
//! ```text
//!     | 1    1   1 |
//! J = | -k   g   0 |      (g = gamma, k = kappa)
//!     | 0    0   1 |
//! ```
//!
//! acting on `(Y, mu, xi)`. Its eigenvalues are `1` and
//! `lambda_pm = (g + 1)/2 +- sqrt((1 - g)^2 - 4k)/2`.

use crate::linalg::Mat3;
use crate::{Error, Result};

/// Relative size of the discriminant treated as zero.
const DEGENERACY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemSpectrum {
    pub lambda_plus: f64,
    pub lambda_minus: f64,
    pub j: Mat3,
    /// Eigenvectors as columns, ordered as `lambda`.
    pub q: Mat3,
    /// Diagonal of `Lambda`: `(1, lambda_plus, lambda_minus)`.
    pub lambda: [f64; 3],
    /// `None` when the spectrum is degenerate.
    pub q_inverse: Option<Mat3>,
    pub degenerate: bool,
}

pub fn system_matrix(gamma: f64, kappa: f64) -> Mat3 {
    [[1.0, 1.0, 1.0], [-kappa, gamma, 0.0], [0.0, 0.0, 1.0]]
}

/// Checks `0 < gamma < 1` and `0 < kappa <= (1 - gamma)^2 / 4`.
pub fn check_momentum_constraint(gamma: f64, kappa: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::Constraint(alloc::format!(
            "gamma = {gamma} must lie in (0, 1)"
        )));
    }
    let bound = (1.0 - gamma) * (1.0 - gamma) / 4.0;
    if !(kappa > 0.0 && kappa <= bound * (1.0 + DEGENERACY_TOLERANCE)) {
        return Err(Error::Constraint(alloc::format!(
            "kappa = {kappa} must lie in (0, (1-gamma)^2/4 = {bound}]"
        )));
    }
    Ok(())
}

pub fn spectrum(gamma: f64, kappa: f64) -> Result<SystemSpectrum> {
    check_momentum_constraint(gamma, kappa)?;
    let one_minus = 1.0 - gamma;
    let disc = one_minus * one_minus - 4.0 * kappa;
    let degenerate = disc <= DEGENERACY_TOLERANCE * one_minus * one_minus;
    let root = if degenerate { 0.0 } else { libm::sqrt(disc) };
    let lambda_plus = 0.5 * (gamma + 1.0) + 0.5 * root;
    let lambda_minus = 0.5 * (gamma + 1.0) - 0.5 * root;

    let q = [
        [one_minus, 1.0, 1.0],
        [-kappa, lambda_plus - 1.0, lambda_minus - 1.0],
        [kappa, 0.0, 0.0],
    ];
    let q_inverse = (!degenerate).then(|| {
        let det = kappa * (lambda_minus - lambda_plus);
        let adj = [
            [0.0, 0.0, lambda_minus - lambda_plus],
            [
                kappa * (lambda_minus - 1.0),
                -kappa,
                one_minus * (1.0 - lambda_minus) - kappa,
            ],
            [
                kappa * (1.0 - lambda_plus),
                kappa,
                kappa - one_minus * (1.0 - lambda_plus),
            ],
        ];
        adj.map(|row| row.map(|v| v / det))
    });

    Ok(SystemSpectrum {
        lambda_plus,
        lambda_minus,
        j: system_matrix(gamma, kappa),
        q,
        lambda: [1.0, lambda_plus, lambda_minus],
        q_inverse,
        degenerate,
    })
}

impl SystemSpectrum {
    /// `Q Lambda^k Q^{-1}`; `None` for a degenerate spectrum.
    pub fn power(&self, k: u32) -> Option<Mat3> {
        let qi = self.q_inverse?;
        let mut scaled = self.q;
        for row in scaled.iter_mut() {
            for (c, cell) in row.iter_mut().enumerate() {
                *cell *= libm::pow(self.lambda[c], f64::from(k));
            }
        }
        Some(crate::linalg::mat3_mul(&scaled, &qi))
    }

    /// `-1 / log(lambda_plus)`, the decay scale of the initial-condition
    /// transients in months.
    pub fn damping_scale(&self) -> f64 {
        -1.0 / libm::log(self.lambda_plus)
    }
}
