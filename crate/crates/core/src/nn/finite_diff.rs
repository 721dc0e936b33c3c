use crate::scalar::Scalar;

use super::grad::GradientSet;
use super::network::Network;

/// Central-difference gradient of `loss` with respect to every network parameter.
///
/// Test oracle only: costs two loss evaluations per parameter.
pub fn finite_diff_gradient<S, F>(net: &Network<S>, mut loss: F, step: S) -> GradientSet<S>
where
    S: Scalar,
    F: FnMut(&Network<S>) -> S,
{
    let mut probe = net.clone();
    let mut grad = GradientSet::zeros_like(net);
    let two_h = step + step;
    for l in 0..net.layers().len() {
        for bias in [false, true] {
            let len = if bias { net.layers()[l].bias().len() } else { net.layers()[l].weights().len() };
            for i in 0..len {
                let original = param(&probe, l, bias, i);
                set_param(&mut probe, l, bias, i, original + step);
                let up = loss(&probe);
                set_param(&mut probe, l, bias, i, original - step);
                let down = loss(&probe);
                set_param(&mut probe, l, bias, i, original);
                let g = &mut grad.layers_mut()[l];
                let target = if bias { &mut g.bias[i] } else { &mut g.weights[i] };
                *target = (up - down) / two_h;
            }
        }
    }
    grad
}

fn param<S: Scalar>(net: &Network<S>, l: usize, bias: bool, i: usize) -> S {
    let layer = &net.layers()[l];
    if bias {
        layer.bias()[i]
    } else {
        layer.weights()[i]
    }
}

fn set_param<S: Scalar>(net: &mut Network<S>, l: usize, bias: bool, i: usize, value: S) {
    let layer = &mut net.layers_mut()[l];
    if bias {
        layer.bias_mut()[i] = value;
    } else {
        layer.weights_mut()[i] = value;
    }
}

/// `|a - b| / max(|a|, |b|, floor)`: relative error that degrades to an absolute
/// error of `floor` scale near zero.
pub fn relative_error<S: Scalar>(a: S, b: S, floor: S) -> S {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}
