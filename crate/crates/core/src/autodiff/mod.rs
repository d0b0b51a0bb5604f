//! Minimal reverse-mode automatic differentiation over dense 2-D `f64`
//! tensors.
//!
//! Operations are recorded on a [`Tape`] as they execute. Calling
//! [`Tape::backward`] on a 1×1 result walks the tape in reverse and leaves
//! `∂root/∂leaf` on every leaf created with `requires_grad`.
//!
//! ```
//! use consurv::autodiff::{Tape, Tensor};
//!
//! let mut tape = Tape::new();
//! let x = tape.param(Tensor::scalar(3.0));
//! let y = tape.mul(x, x).unwrap();
//! tape.backward(y).unwrap();
//! assert_eq!(tape.grad(x).data(), &[6.0]);
//! ```

mod gradcheck;
mod tape;
mod tensor;

pub use gradcheck::{grad_check, grad_check_all};
pub use tape::{sigmoid, Axis, Tape, Var, LOG_FLOOR};
pub use tensor::Tensor;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AutodiffError {
    #[error("{op}: incompatible shapes {left:?} and {right:?}")]
    DimensionMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("tensor of shape {rows}x{cols} cannot hold {len} values")]
    BadLength {
        rows: usize,
        cols: usize,
        len: usize,
    },
    #[error("rows have different lengths")]
    RaggedRows,
    #[error("{0}: reduction over an empty tensor")]
    EmptyReduction(&'static str),
    #[error("backward needs a 1x1 root, got {0:?}")]
    NonScalarRoot((usize, usize)),
    #[error("non-finite value at node {node} ({op})")]
    NonFinite { node: usize, op: &'static str },
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn t(rows: &[&[f64]]) -> Tensor {
        Tensor::from_rows(rows).unwrap()
    }

    #[test]
    fn identity_matmul() {
        let mut tape = Tape::new();
        let i = tape.constant(Tensor::identity(2));
        let m = tape.constant(t(&[&[1.5, -2.0], &[0.25, 7.0]]));
        let out = tape.matmul(i, m).unwrap();
        assert_eq!(tape.value(out), tape.value(m));
    }

    #[test]
    fn zero_matmul_annihilates() {
        let mut tape = Tape::new();
        let z = tape.constant(Tensor::zeros(2, 3));
        let m = tape.constant(t(&[&[1.0, 2.0], &[3.0, 4.0], &[5.0, 6.0]]));
        let out = tape.matmul(z, m).unwrap();
        assert!(tape.value(out).data().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn matmul_shape_mismatch() {
        let mut tape = Tape::new();
        let a = tape.constant(Tensor::zeros(2, 3));
        let b = tape.constant(Tensor::zeros(2, 3));
        assert!(matches!(
            tape.matmul(a, b),
            Err(AutodiffError::DimensionMismatch { op: "matmul", .. })
        ));
    }

    #[test]
    fn matmul_backward_rules() {
        let mut tape = Tape::new();
        let a = tape.param(t(&[&[1.0, 2.0], &[3.0, 4.0]]));
        let b = tape.param(t(&[&[5.0], &[6.0]]));
        let c = tape.matmul(a, b).unwrap();
        let s = tape.sum(c, None).unwrap();
        tape.backward(s).unwrap();
        // g = ones(2,1): a.grad = g bᵀ, b.grad = aᵀ g
        assert_eq!(tape.grad(a).data(), &[5.0, 6.0, 5.0, 6.0]);
        assert_eq!(tape.grad(b).data(), &[4.0, 6.0]);
    }

    #[test]
    fn sigmoid_at_zero() {
        let mut tape = Tape::new();
        let x = tape.param(Tensor::scalar(0.0));
        let s = tape.sigmoid(x);
        assert_eq!(tape.item(s), 0.5);
        tape.backward(s).unwrap();
        assert_eq!(tape.grad(x).item(), Some(0.25));
    }

    #[test]
    fn log_exp_inverse() {
        let xs: Vec<f64> = (0..=200).map(|i| -10.0 + 0.1 * i as f64).collect();
        let mut tape = Tape::new();
        let x = tape.constant(Tensor::column(xs.clone()));
        let e = tape.exp(x);
        let l = tape.log(e);
        for (a, b) in tape.value(l).data().iter().zip(&xs) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn log_clamps_and_reports() {
        let mut tape = Tape::new();
        let x = tape.constant(Tensor::column(vec![0.0, -1.0, 2.0]));
        let l = tape.log(x);
        assert_eq!(tape.value(l).get(0, 0), LOG_FLOOR.ln());
        assert_eq!(tape.value(l).get(1, 0), LOG_FLOOR.ln());
        assert!(tape.diagnostics()[0].contains("2 non-positive"));
    }

    #[test]
    fn nan_is_reported_not_hidden() {
        let mut tape = Tape::new();
        let x = tape.constant(Tensor::scalar(f64::NAN));
        let l = tape.log(x);
        assert!(tape.item(l).is_nan());
        assert!(tape.diagnostics().iter().any(|d| d.contains("NaN")));
        assert!(tape.check_finite(l).is_err());
    }

    #[test]
    fn reductions() {
        let mut tape = Tape::new();
        let x = tape.constant(Tensor::column(vec![1.0, 2.0, 3.0]));
        let s = tape.sum(x, None).unwrap();
        assert_eq!(tape.item(s), 6.0);
        let m = tape.mean(x, None).unwrap();
        assert_eq!(tape.item(m), 2.0);

        let single = tape.constant(Tensor::scalar(-3.5));
        let l = tape.logsumexp(single, Axis::Cols).unwrap();
        assert_eq!(tape.item(l), -3.5);

        let big = tape.constant(t(&[&[1000.0, 1000.0]]));
        let l = tape.logsumexp(big, Axis::Cols).unwrap();
        assert_abs_diff_eq!(tape.item(l), 1000.0 + 2f64.ln(), epsilon = 1e-12);

        let empty = tape.constant(Tensor::zeros(0, 3));
        assert!(matches!(
            tape.sum(empty, None),
            Err(AutodiffError::EmptyReduction(_))
        ));
    }

    #[test]
    fn axis_reductions_shape() {
        let mut tape = Tape::new();
        let x = tape.constant(t(&[&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]]));
        let r = tape.sum(x, Some(Axis::Rows)).unwrap();
        assert_eq!(tape.value(r).data(), &[5.0, 7.0, 9.0]);
        let c = tape.mean(x, Some(Axis::Cols)).unwrap();
        assert_eq!(tape.value(c).data(), &[2.0, 5.0]);
    }

    #[test]
    fn backward_on_square() {
        let mut tape = Tape::new();
        let x = tape.param(Tensor::scalar(3.0));
        let y = tape.mul(x, x).unwrap();
        tape.backward(y).unwrap();
        assert_eq!(tape.grad(x).item(), Some(6.0));
    }

    #[test]
    fn constant_root_has_zero_grads() {
        let mut tape = Tape::new();
        let x = tape.param(Tensor::scalar(3.0));
        let c = tape.scalar(4.0);
        let y = tape.scale(c, 2.0);
        tape.backward(y).unwrap();
        assert_eq!(tape.grad(x).item(), Some(0.0));
    }

    #[test]
    fn fan_out_accumulates() {
        let mut tape = Tape::new();
        let x = tape.param(Tensor::scalar(1.7));
        let y = tape.add(x, x).unwrap();
        tape.backward(y).unwrap();
        assert_eq!(tape.grad(x).item(), Some(2.0));
    }

    #[test]
    fn non_scalar_root_rejected() {
        let mut tape = Tape::new();
        let x = tape.param(Tensor::zeros(2, 1));
        assert_eq!(tape.backward(x), Err(AutodiffError::NonScalarRoot((2, 1))));
    }

    #[test]
    fn shared_subexpression_matches_expanded_graph() {
        // f = (a*b) * (a*b) + exp(a*b), once with a*b shared, once rebuilt.
        let a0 = t(&[&[0.3, -0.7]]);
        let b0 = t(&[&[1.1, 0.4]]);
        let run = |shared: bool| {
            let mut tape = Tape::new();
            let a = tape.param(a0.clone());
            let b = tape.param(b0.clone());
            let p1 = tape.mul(a, b).unwrap();
            let (p2, p3) = if shared {
                (p1, p1)
            } else {
                (tape.mul(a, b).unwrap(), tape.mul(a, b).unwrap())
            };
            let sq = tape.mul(p1, p2).unwrap();
            let e = tape.exp(p3);
            let s = tape.add(sq, e).unwrap();
            let root = tape.sum(s, None).unwrap();
            tape.backward(root).unwrap();
            (tape.grad(a), tape.grad(b))
        };
        let (ga1, gb1) = run(true);
        let (ga2, gb2) = run(false);
        for (x, y) in ga1
            .data()
            .iter()
            .zip(ga2.data())
            .chain(gb1.data().iter().zip(gb2.data()))
        {
            assert_abs_diff_eq!(x, y, epsilon = 1e-14);
        }
    }

    #[test]
    fn broadcast_gradients_reduce() {
        // row bias broadcast over rows
        let mut tape = Tape::new();
        let x = tape.constant(t(&[&[1.0, 2.0], &[3.0, 4.0], &[5.0, 6.0]]));
        let b = tape.param(t(&[&[0.5, -0.5]]));
        let y = tape.add(x, b).unwrap();
        let s = tape.sum(y, None).unwrap();
        tape.backward(s).unwrap();
        assert_eq!(tape.grad(b).data(), &[3.0, 3.0]);
    }

    #[test]
    fn weighted_logsumexp_skips_empty_rows() {
        let mut tape = Tape::new();
        let x = tape.param(t(&[&[1.0, 2.0], &[3.0, 4.0]]));
        let w = t(&[&[0.0, 0.0], &[1.0, 2.0]]);
        let l = tape.weighted_logsumexp(x, w).unwrap();
        assert_eq!(tape.value(l).get(0, 0), 0.0);
        let expect = (3f64.exp() + 2.0 * 4f64.exp()).ln();
        assert_abs_diff_eq!(tape.value(l).get(1, 0), expect, epsilon = 1e-12);
        let s = tape.sum(l, None).unwrap();
        tape.backward(s).unwrap();
        assert_eq!(&tape.grad(x).data()[..2], &[0.0, 0.0]);
    }

    #[test]
    fn quadratic_grad_check_is_exact() {
        let theta = t(&[&[0.3, -1.2, 2.5]]);
        let err = grad_check(
            |tape, th| {
                let sq = tape.mul(th, th)?;
                let lin = tape.scale(th, 3.0);
                let s = tape.add(sq, lin)?;
                tape.sum(s, None)
            },
            &theta,
            1e-5,
        )
        .unwrap();
        assert!(err < 1e-9, "{err}");
    }

    #[test]
    fn grad_check_flags_nan() {
        let theta = Tensor::scalar(-1.0);
        let err = grad_check(|tape, th| Ok(tape.sqrt(th)), &theta, 1e-5).unwrap();
        assert!(err.is_infinite());
    }

    #[test]
    fn composite_ops_pass_grad_check() {
        let a = t(&[&[0.3, -0.2, 0.9], &[1.1, 0.5, -0.4]]);
        let b = t(&[&[0.7, 0.1], &[-0.3, 0.8], &[0.2, 0.6]]);
        let err = grad_check_all(
            |tape, p| {
                let m = tape.matmul(p[0], p[1])?;
                let s = tape.sigmoid(m);
                let om = tape.one_minus(s);
                let l = tape.log(om);
                let sq = tape.mul(p[0], p[0])?;
                let n = tape.sum(sq, Some(Axis::Cols))?;
                let r = tape.sqrt(n);
                let d = tape.div(p[0], r)?;
                let tr = tape.transpose(d);
                let lse = tape.logsumexp(tr, Axis::Rows)?;
                let w = tape.weighted_logsumexp(l, t(&[&[1.0, 0.5], &[0.0, 2.0]]))?;
                let a = tape.mean(lse, None)?;
                let b = tape.mean(w, None)?;
                let relu = tape.relu(m);
                let c = tape.sum(relu, None)?;
                let ab = tape.add(a, b)?;
                tape.add(ab, c)
            },
            &[a, b],
            1e-5,
        )
        .unwrap();
        assert!(err < 1e-6, "{err}");
    }

    proptest! {
        #[test]
        fn forward_is_deterministic(vals in proptest::collection::vec(-5.0f64..5.0, 6)) {
            let run = || {
                let mut tape = Tape::new();
                let x = tape.constant(Tensor::new(2, 3, vals.clone()).unwrap());
                let xt = tape.transpose(x);
                let m = tape.matmul(x, xt).unwrap();
                let l = tape.logsumexp(m, Axis::Cols).unwrap();
                let s = tape.sum(l, None).unwrap();
                tape.item(s)
            };
            prop_assert_eq!(run().to_bits(), run().to_bits());
        }
    }
}
