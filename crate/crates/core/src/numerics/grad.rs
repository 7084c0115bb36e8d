use super::param::ParamVector;
use super::tape::{NodeId, Tape};
use crate::{Error, Result};

/// Loss value, gradient, and gradient norm for one evaluation.
#[derive(Debug, Clone)]
pub struct GradReport {
    pub loss: f64,
    pub grad: ParamVector,
    pub grad_norm: f64,
}

/// Evaluates `loss_fn` at `params` and returns the exact reverse-mode
/// gradient. The closure records a scalar loss on the tape.
pub fn grad_of<F>(params: &ParamVector, loss_fn: F) -> Result<GradReport>
where
    F: FnOnce(&mut Tape) -> NodeId,
{
    let mut tape = Tape::new(params);
    let loss_node = loss_fn(&mut tape);
    let loss = tape.scalar(loss_node);
    if !loss.is_finite() {
        return Err(Error::Numerical { context: "loss".into() });
    }
    let grad = tape.backward(loss_node);
    if let Some(seg) = grad.first_non_finite_segment() {
        return Err(Error::Numerical { context: format!("grad:{seg}") });
    }
    let grad_norm = grad.norm();
    Ok(GradReport { loss, grad, grad_norm })
}

/// Loss-only evaluation (no backward sweep).
pub fn eval_loss<F>(params: &ParamVector, loss_fn: F) -> Result<f64>
where
    F: FnOnce(&mut Tape) -> NodeId,
{
    let mut tape = Tape::new(params);
    let loss_node = loss_fn(&mut tape);
    let loss = tape.scalar(loss_node);
    if !loss.is_finite() {
        return Err(Error::Numerical { context: "loss".into() });
    }
    Ok(loss)
}

/// Cosine similarity of two gradients with identical layouts.
///
/// Near-zero gradients are reported as [`Error::DegenerateGradient`] so the
/// caller can exclude the pair from statistics instead of fabricating a value.
pub fn cosine(g1: &ParamVector, g2: &ParamVector) -> Result<f64> {
    if !g1.layout().same_as(g2.layout()) {
        return Err(Error::Layout("cosine: gradient layouts differ".into()));
    }
    let n1 = g1.norm();
    let n2 = g2.norm();
    if n1 < 1e-12 {
        return Err(Error::DegenerateGradient { context: "cosine:lhs".into(), norm: n1 });
    }
    if n2 < 1e-12 {
        return Err(Error::DegenerateGradient { context: "cosine:rhs".into(), norm: n2 });
    }
    Ok((g1.dot(g2) / (n1 * n2)).clamp(-1.0, 1.0))
}

/// Central-difference check of `grad_of` over every coordinate.
///
/// Returns the worst relative error with denominator
/// `max(|analytic|, |numeric|, 1e-8)`.
pub fn finite_diff_check<F>(params: &ParamVector, loss_fn: F, step: f64) -> Result<f64>
where
    F: Fn(&mut Tape) -> NodeId,
{
    if !(step > 0.0 && step <= 1e-2) {
        return Err(Error::Config(format!("finite-diff step {step} outside (0, 1e-2]")));
    }
    let report = grad_of(params, &loss_fn)?;
    let mut worst: f64 = 0.0;
    let n = params.values().len();
    for i in 0..n {
        let mut plus = params.clone();
        plus.values_mut()[i] += step;
        let mut minus = params.clone();
        minus.values_mut()[i] -= step;
        let lp = eval_loss(&plus, &loss_fn)?;
        let lm = eval_loss(&minus, &loss_fn)?;
        let numeric = (lp - lm) / (2.0 * step);
        let analytic = report.grad.values()[i];
        let denom = analytic.abs().max(numeric.abs()).max(1e-8);
        worst = worst.max((analytic - numeric).abs() / denom);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{Layout, Segment};

    fn vec_params(values: &[f64]) -> ParamVector {
        let layout = Layout::new(vec![Segment::new("p", 1, values.len())]).unwrap();
        let mut pv = ParamVector::zeros(layout);
        pv.seg_mut("p").copy_from_slice(values);
        pv
    }

    #[test]
    fn quadratic_loss_and_grad() {
        // loss = 0.5 ||p||^2 at p = (3, 4) -> loss 12.5, grad (3, 4)
        let pv = vec_params(&[3.0, 4.0]);
        let report = grad_of(&pv, |tape| {
            let p = tape.param("p");
            let sq = tape.square(p);
            let s = tape.sum_all(sq);
            tape.scale(s, 0.5)
        })
        .unwrap();
        assert!((report.loss - 12.5).abs() < 1e-12);
        assert_eq!(report.grad.seg("p"), &[3.0, 4.0]);
        assert!((report.grad_norm - 5.0).abs() < 1e-12);
    }

    #[test]
    fn constant_loss_has_zero_gradient() {
        let pv = vec_params(&[1.0, 2.0, 3.0]);
        let report = grad_of(&pv, |tape| {
            let c = tape.constant(ndarray::Array2::from_elem((1, 1), 7.0));
            // touch the params so a Param node exists but contributes nothing
            let p = tape.param("p");
            let z = tape.scale(p, 0.0);
            let zs = tape.sum_all(z);
            tape.add(c, zs)
        })
        .unwrap();
        assert_eq!(report.loss, 7.0);
        assert!(report.grad.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn cosine_identities() {
        let g = vec_params(&[1.0, 2.0, -1.0]);
        let mut neg = g.clone();
        neg.scale(-1.0);
        assert!((cosine(&g, &g).unwrap() - 1.0).abs() < 1e-12);
        assert!((cosine(&g, &neg).unwrap() + 1.0).abs() < 1e-12);
        let a = vec_params(&[1.0, 0.0, 0.0]);
        let b = vec_params(&[1.0, 1.0, 0.0]);
        assert!((cosine(&a, &b).unwrap() - 1.0 / 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn cosine_scale_invariance_and_symmetry() {
        let a = vec_params(&[0.3, -1.2, 2.0]);
        let b = vec_params(&[1.0, 0.4, -0.5]);
        let mut a5 = a.clone();
        a5.scale(5.0);
        let c1 = cosine(&a, &b).unwrap();
        assert!((cosine(&a5, &b).unwrap() - c1).abs() < 1e-12);
        assert!((cosine(&b, &a).unwrap() - c1).abs() < 1e-12);
        assert!(c1.abs() <= 1.0);
    }

    #[test]
    fn cosine_rejects_degenerate() {
        let g = vec_params(&[1.0, 0.0]);
        let z = vec_params(&[0.0, 0.0]);
        assert!(matches!(cosine(&g, &z), Err(Error::DegenerateGradient { .. })));
    }

    #[test]
    fn finite_diff_on_quadratic_is_tight() {
        let pv = vec_params(&[0.7, -1.3, 2.1]);
        let err = finite_diff_check(
            &pv,
            |tape| {
                let p = tape.param("p");
                let sq = tape.square(p);
                let s = tape.sum_all(sq);
                tape.scale(s, 0.5)
            },
            1e-5,
        )
        .unwrap();
        assert!(err < 1e-8, "err = {err}");
    }

    #[test]
    fn finite_diff_zero_function() {
        let pv = vec_params(&[1.0, 2.0]);
        let err = finite_diff_check(
            &pv,
            |tape| {
                let p = tape.param("p");
                let z = tape.scale(p, 0.0);
                tape.sum_all(z)
            },
            1e-5,
        )
        .unwrap();
        assert_eq!(err, 0.0);
    }

    #[test]
    fn finite_diff_rejects_bad_step() {
        let pv = vec_params(&[1.0]);
        let f = |tape: &mut Tape| {
            let p = tape.param("p");
            tape.sum_all(p)
        };
        assert!(finite_diff_check(&pv, f, 0.0).is_err());
        assert!(finite_diff_check(&pv, f, 0.5).is_err());
    }

    #[test]
    fn tanh_mlp_matches_finite_differences() {
        // composite: loss = mean(tanh(W x + b)^2) over a fixed batch
        let layout = Layout::new(vec![
            Segment::new("w", 3, 4),
            Segment::new("b", 1, 4),
        ])
        .unwrap();
        let mut pv = ParamVector::zeros(layout);
        for (i, v) in pv.values_mut().iter_mut().enumerate() {
            *v = ((i as f64) * 0.37).sin() * 0.8;
        }
        let x = ndarray::Array2::from_shape_fn((5, 3), |(r, c)| ((r * 3 + c) as f64 * 0.21).cos());
        let err = finite_diff_check(
            &pv,
            move |tape| {
                let xc = tape.constant(x.clone());
                let w = tape.param("w");
                let b = tape.param("b");
                let h = tape.matmul(xc, w);
                let h = tape.add_row(h, b);
                let h = tape.tanh(h);
                let h = tape.square(h);
                tape.mean_all(h)
            },
            1e-5,
        )
        .unwrap();
        assert!(err < 1e-6, "err = {err}");
    }
}
