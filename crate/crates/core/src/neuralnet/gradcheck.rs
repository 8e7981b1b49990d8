//! Central finite-difference checks of backpropagated gradients.

use super::{mse_grad, mse_loss, Mlp};

/// Magnitude below which gradient entries are compared in absolute terms.
/// At `h = 1e-6` the central difference carries about `1e-11` of roundoff,
/// which would swamp a purely relative comparison of near-zero entries.
pub const RELATIVE_ERROR_FLOOR: f64 = 1e-4;

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let scale = analytic.abs().max(numeric.abs()).max(RELATIVE_ERROR_FLOOR);
    (analytic - numeric).abs() / scale
}

/// Worst [`relative_error`] over paired entries. Non-finite entries count as
/// infinitely wrong.
pub fn max_relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    analytic
        .iter()
        .zip(numeric)
        .map(|(&a, &n)| {
            let e = relative_error(a, n);
            if e.is_nan() {
                f64::INFINITY
            } else {
                e
            }
        })
        .fold(0.0, f64::max)
}

/// Central differences `(L(p + h e_i) - L(p - h e_i)) / 2h` for every entry of `params`.
pub fn numeric_gradient<F>(params: &[f64], h: f64, mut loss: F) -> Vec<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    let mut probe = params.to_vec();
    (0..params.len())
        .map(|i| {
            let orig = probe[i];
            probe[i] = orig + h;
            let up = loss(&probe);
            probe[i] = orig - h;
            let down = loss(&probe);
            probe[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Compares backprop against central differences of the MSE loss of `net`
/// on one sample, over every parameter. Returns the worst relative error.
pub fn gradient_check(net: &Mlp, input: &[f64], target: &[f64], h: f64) -> f64 {
    assert!(h > 0.0, "finite-difference step must be positive");
    let (out, cache) = net.forward(input).expect("input width matches network");
    let upstream = mse_grad(&out, target).expect("target width matches network");
    let analytic = net
        .backward(&cache, &upstream)
        .expect("cache matches")
        .params;

    let mut probe = net.clone();
    let numeric = numeric_gradient(&net.params_flat(), h, |p| {
        probe.set_params_flat(p).expect("same parameter count");
        let (out, _) = probe.forward(input).expect("input width matches network");
        mse_loss(&out, target).expect("target width matches network")
    });
    max_relative_error(&analytic, &numeric)
}
