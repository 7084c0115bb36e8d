use rand::seq::SliceRandom;
use rand::Rng;

use crate::numerics::ParamVector;
use crate::{Error, Result};

/// Gradient surgery: each gradient is projected off every other gradient it
/// conflicts with (negative inner product), visiting both the gradients and
/// their partners in rng-shuffled order; the result is the mean of the
/// projected gradients. Projections are taken against the original,
/// unmodified partners.
pub fn pcgrad_combine(grads: &[(String, ParamVector)], rng: &mut impl Rng) -> Result<ParamVector> {
    if grads.len() < 2 {
        return Err(Error::Grouping(format!(
            "pcgrad needs at least 2 gradients, got {}",
            grads.len()
        )));
    }
    let layout = grads[0].1.layout();
    for (id, g) in grads {
        if !g.layout().same_as(layout) {
            return Err(Error::Layout(format!("pcgrad: layout mismatch for `{id}`")));
        }
        let norm = g.norm();
        if norm < 1e-12 {
            return Err(Error::DegenerateGradient { context: format!("pcgrad:{id}"), norm });
        }
    }

    let mut order: Vec<usize> = (0..grads.len()).collect();
    order.shuffle(rng);
    let mut mean = ParamVector::zeros(layout.clone());
    for &i in &order {
        let mut gi = grads[i].1.clone();
        let mut partners: Vec<usize> = (0..grads.len()).filter(|&j| j != i).collect();
        partners.shuffle(rng);
        for j in partners {
            let gj = &grads[j].1;
            let dot = gi.dot(gj);
            if dot < 0.0 {
                let nj2 = gj.dot(gj);
                gi.add_scaled(gj, -dot / nj2);
            }
        }
        mean.add_scaled(&gi, 1.0 / grads.len() as f64);
    }
    Ok(mean)
}
