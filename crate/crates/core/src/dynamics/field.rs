use nalgebra::{Matrix4, Vector4};

use super::forms::MagneticForm;
use super::hamiltonian::Hamiltonian;
use super::state::{ChartCoords, ChartJacobian, CotangentState, PhaseTangent};
use crate::sphere::{Chart, ChartFrame};
use crate::Error;

/// Smallest `sin(theta)` at which a chart is still used for assembly.
pub const CHART_SIN_FLOOR: f64 = 1e-6;

/// Matrix of `omega_sigma` in chart coordinates: `omega(w1, w2) = w1^T M w2`.
pub fn omega_matrix(sigma: &MagneticForm, frame: &ChartFrame) -> Matrix4<f64> {
    let s12 = sigma.chart_coefficient(frame);
    let mut m = Matrix4::zeros();
    m[(2, 0)] = 1.0;
    m[(0, 2)] = -1.0;
    m[(3, 1)] = 1.0;
    m[(1, 3)] = -1.0;
    m[(0, 1)] = -s12;
    m[(1, 0)] = s12;
    m
}

/// The Hamiltonian vector field in chart coordinates together with the
/// residual `max_i |omega(X, e_i) + dH(e_i)|` of the solve.
#[derive(Clone, Copy, Debug)]
pub struct ChartField {
    pub value: f64,
    pub x_dot: [f64; 4],
    pub residual: f64,
}

/// Solves `iota_X omega_sigma = -dH` at chart coordinates `x`.
pub fn chart_field(
    h: &Hamiltonian,
    sigma: &MagneticForm,
    chart: Chart,
    x: &ChartCoords,
) -> Result<ChartField, Error> {
    let jac = ChartJacobian::new(chart, x);
    if jac.frame.sin_t.abs() < CHART_SIN_FLOOR {
        return Err(Error::ChartDegenerate);
    }
    let (value, dh) = h.chart_partials_with(&jac);
    let m = omega_matrix(sigma, &jac.frame);
    let rhs = -Vector4::from(dh);
    let mt = m.transpose();
    let sol = mt.lu().solve(&rhs).ok_or(Error::Singular)?;
    let residual = (mt * sol - rhs).amax();
    Ok(ChartField {
        value,
        x_dot: [sol[0], sol[1], sol[2], sol[3]],
        residual,
    })
}

/// `X_{H,sigma}` at `state`, as an ambient phase tangent.
pub fn ham_vector_field(
    h: &Hamiltonian,
    sigma: &MagneticForm,
    state: &CotangentState,
) -> Result<PhaseTangent, Error> {
    let state = state.rechart();
    let x = state.coords();
    let f = chart_field(h, sigma, state.chart(), &x)?;
    Ok(ChartJacobian::new(state.chart(), &x).push(&f.x_dot))
}
