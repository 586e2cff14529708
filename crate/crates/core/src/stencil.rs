//! Finite-difference derivatives on a [`FieldFrame`].

use crate::field::FieldFrame;

/// Centered differences inside, second-order one-sided differences at the
/// two edge nodes.
pub fn first_derivative(frame: &FieldFrame) -> FieldFrame {
    let v = frame.values();
    let n = v.len();
    let h = frame.grid().dx();
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        d[i] = (v[i + 1] - v[i - 1]) / (2.0 * h);
    }
    d[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h);
    d[n - 1] = (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * h);
    FieldFrame::new(*frame.grid(), d).expect("differences of finite values are finite")
}

/// Three-point second difference inside; edge nodes copy their interior
/// neighbour.
pub fn second_derivative(frame: &FieldFrame) -> FieldFrame {
    let v = frame.values();
    let n = v.len();
    let h2 = frame.grid().dx().powi(2);
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        d[i] = (v[i + 1] - 2.0 * v[i] + v[i - 1]) / h2;
    }
    d[0] = d[1];
    d[n - 1] = d[n - 2];
    FieldFrame::new(*frame.grid(), d).expect("differences of finite values are finite")
}
