use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;

use super::config::LatentConfig;
use super::layout;
use crate::datasets::RobotBatch;
use crate::envs::{ObsBundle, A_MAX};
use crate::numerics::{NodeId, ParamSource, Tape};
use crate::{Error, Result};

/// One robot's network inputs. Per-joint rows are stored j-major: row
/// `j * n + b` holds joint `j` of sample `b`, so each layer is a single
/// matrix product over all joints and samples at once.
#[derive(Debug, Clone)]
pub struct NetInputs {
    pub n: usize,
    pub n_joints: usize,
    pub n_feet: usize,
    pub o_g: Array2<f64>,
    pub o_j: Array2<f64>,
    pub o_f: Array2<f64>,
    pub d_j: Array2<f64>,
    pub d_f: Array2<f64>,
}

impl NetInputs {
    /// Single-sample inputs from one observation.
    pub fn from_obs(obs: &ObsBundle) -> Self {
        let j = obs.o_j.len();
        let f = obs.o_f.len();
        NetInputs {
            n: 1,
            n_joints: j,
            n_feet: f,
            o_g: Array2::from_shape_fn((1, 3), |(_, c)| obs.o_g[c]),
            o_j: Array2::from_shape_fn((j, 3), |(r, c)| obs.o_j[r][c]),
            o_f: Array2::from_shape_fn((f, 2), |(r, c)| obs.o_f[r][c]),
            d_j: Array2::from_shape_fn((j, 4), |(r, c)| obs.d_j[r][c]),
            d_f: Array2::from_shape_fn((f, 2), |(r, c)| obs.d_f[r][c]),
        }
    }

    /// Batched inputs from a sampled minibatch; `next` selects the successor
    /// observations.
    pub fn from_batch(batch: &RobotBatch, next: bool) -> Self {
        let n = batch.len();
        let j = batch.n_joints;
        let f = batch.n_feet;
        let (o_g, o_j, o_f) = if next {
            (&batch.next_o_g, &batch.next_o_j, &batch.next_o_f)
        } else {
            (&batch.o_g, &batch.o_j, &batch.o_f)
        };
        NetInputs {
            n,
            n_joints: j,
            n_feet: f,
            o_g: o_g.clone(),
            o_j: Array2::from_shape_fn((j * n, 3), |(r, c)| o_j[(r % n, (r / n) * 3 + c)]),
            o_f: Array2::from_shape_fn((f * n, 2), |(r, c)| o_f[(r % n, (r / n) * 2 + c)]),
            d_j: batch.d_j.clone(),
            d_f: batch.d_f.clone(),
        }
    }

    fn validate(&self) -> Result<()> {
        let checks = [
            ("o_g", self.o_g.dim(), (self.n, 3)),
            ("o_j", self.o_j.dim(), (self.n_joints * self.n, 3)),
            ("o_f", self.o_f.dim(), (self.n_feet * self.n, 2)),
            ("d_j", self.d_j.dim(), (self.n_joints, 4)),
            ("d_f", self.d_f.dim(), (self.n_feet, 2)),
        ];
        for (name, got, want) in checks {
            if got != want {
                return Err(Error::Shape(format!(
                    "{name}: got {got:?}, expected {want:?}"
                )));
            }
        }
        if self.n == 0 || self.n_joints == 0 || self.n_feet == 0 {
            return Err(Error::Shape("empty batch, joint set, or foot set".into()));
        }
        Ok(())
    }
}

/// Encoder outputs: the pooled fixed-width latent and the per-joint latents
/// (j-major, `(J * n, l_d)`).
#[derive(Debug, Clone, Copy)]
pub struct Encoded {
    pub zbar: NodeId,
    pub z_j: NodeId,
}

/// Descriptor-gated attention encoder. Per latent dimension the joint
/// attention weights are a softmax over joints of the descriptor MLP output
/// divided by the temperature; each joint's observation features are gated by
/// its weights and the gated latents are summed in joint order. Feet are
/// pooled the same way, and the pooled latent is
/// `[o_g, joint pool, foot pool]`.
pub fn encode(
    tape: &mut Tape,
    src: &ParamSource<'_>,
    cfg: &LatentConfig,
    inp: &NetInputs,
) -> Result<Encoded> {
    inp.validate()?;
    let inv_temp = 1.0 / (cfg.tau_att + cfg.eps_att);

    let d_j = tape.constant(inp.d_j.clone());
    let logits_j = layout::phi_joint(cfg).forward(tape, src, d_j);
    let logits_j = tape.scale(logits_j, inv_temp);
    let att_j = tape.softmax_cols(logits_j);
    let o_j = tape.constant(inp.o_j.clone());
    let feat_j = layout::psi_joint(cfg).forward(tape, src, o_j);
    let z_j = tape.gate_rows(feat_j, att_j);
    let pool_j = tape.sum_blocks(z_j, inp.n_joints);

    let d_f = tape.constant(inp.d_f.clone());
    let logits_f = layout::phi_foot(cfg).forward(tape, src, d_f);
    let logits_f = tape.scale(logits_f, inv_temp);
    let att_f = tape.softmax_cols(logits_f);
    let o_f = tape.constant(inp.o_f.clone());
    let feat_f = layout::psi_foot(cfg).forward(tape, src, o_f);
    let z_f = tape.gate_rows(feat_f, att_f);
    let pool_f = tape.sum_blocks(z_f, inp.n_feet);

    let o_g = tape.constant(inp.o_g.clone());
    let zbar = tape.concat_cols(&[o_g, pool_j, pool_f]);
    Ok(Encoded { zbar, z_j })
}

/// Actor outputs: per-joint Gaussian means `(n, J)` and scales `(1, J)`.
/// The scale depends only on the joint descriptors, never on the state.
#[derive(Debug, Clone, Copy)]
pub struct ActorOut {
    pub mu: NodeId,
    pub sigma: NodeId,
}

pub fn actor_forward(
    tape: &mut Tape,
    src: &ParamSource<'_>,
    cfg: &LatentConfig,
    inp: &NetInputs,
    enc: Encoded,
) -> Result<ActorOut> {
    inp.validate()?;
    let j = inp.n_joints;

    let zact = layout::core(cfg).forward(tape, src, enc.zbar);
    let d_j = tape.constant(inp.d_j.clone());
    let d_a = layout::action_descriptor(cfg).forward(tape, src, d_j);

    let d_a_rep = tape.repeat_rows(d_a, inp.n);
    let zact_tiled = tape.tile_blocks(zact, j);
    let mu_in = tape.concat_cols(&[d_a_rep, zact_tiled, enc.z_j]);
    let mu_col = layout::mu_head(cfg).forward(tape, src, mu_in);
    let mu = tape.blocks_to_cols(mu_col, j);

    let sig_raw = layout::sigma_head(cfg).forward(tape, src, d_a);
    let sig_pos = tape.softplus(sig_raw);
    let sig_col = tape.add_scalar(sig_pos, 1e-4);
    let sigma = tape.blocks_to_cols(sig_col, j);

    Ok(ActorOut { mu, sigma })
}

/// State-value head over the pooled latent: `(n, 1)`.
pub fn v_forward(
    tape: &mut Tape,
    src: &ParamSource<'_>,
    cfg: &LatentConfig,
    zbar: NodeId,
) -> Result<NodeId> {
    let got = tape.value(zbar).ncols();
    if got != cfg.zbar_dim() {
        return Err(Error::Shape(format!(
            "value input width {got}, expected {}",
            cfg.zbar_dim()
        )));
    }
    Ok(layout::value_head(cfg).forward(tape, src, zbar))
}

/// Zero-pads a `(n, J)` action block on the right to `(n, d_max)`.
pub fn pad_action(tape: &mut Tape, action: NodeId, d_max: usize) -> Result<NodeId> {
    let (n, j) = tape.value(action).dim();
    if j > d_max {
        return Err(Error::Shape(format!("action width {j} exceeds maximum {d_max}")));
    }
    if j == d_max {
        return Ok(action);
    }
    let zeros = tape.constant(Array2::zeros((n, d_max - j)));
    Ok(tape.concat_cols(&[action, zeros]))
}

/// Twin state-action values over the pooled latent and the encoded
/// zero-padded action; the two heads share no parameters.
pub fn q_forward(
    tape: &mut Tape,
    src: &ParamSource<'_>,
    cfg: &LatentConfig,
    zbar: NodeId,
    action: NodeId,
) -> Result<(NodeId, NodeId)> {
    let got = tape.value(zbar).ncols();
    if got != cfg.zbar_dim() {
        return Err(Error::Shape(format!(
            "q input width {got}, expected {}",
            cfg.zbar_dim()
        )));
    }
    let padded = pad_action(tape, action, cfg.d_max)?;
    let z_a = layout::action_encoder(cfg).forward(tape, src, padded);
    let q_in = tape.concat_cols(&[zbar, z_a]);
    let q1 = layout::q_head(cfg, 1).forward(tape, src, q_in);
    let q2 = layout::q_head(cfg, 2).forward(tape, src, q_in);
    Ok((q1, q2))
}

/// Diagonal-Gaussian log density of `actions` `(n, J)` under the actor
/// output, summed over joints: `(n, 1)`.
pub fn gaussian_log_prob(tape: &mut Tape, out: ActorOut, actions: NodeId) -> NodeId {
    let (_, j) = tape.value(out.mu).dim();
    let diff = tape.sub(actions, out.mu);
    let ones = tape.constant(Array2::from_elem((1, j), 1.0));
    let inv_sigma = tape.div(ones, out.sigma);
    let z = tape.mul_row(diff, inv_sigma);
    let sq = tape.square(z);
    let quad = tape.row_sums(sq);
    let quad = tape.scale(quad, -0.5);
    let ln_sigma = tape.ln(out.sigma);
    let ln_sum = tape.row_sums(ln_sigma);
    let neg_ln = tape.scale(ln_sum, -1.0);
    let lp = tape.add_row(quad, neg_ln);
    tape.add_scalar(lp, -0.5 * (j as f64) * (2.0 * std::f64::consts::PI).ln())
}

/// Deterministic policy action: the mean clipped to the torque bound.
pub fn deterministic_action(tape: &Tape, out: ActorOut) -> Array2<f64> {
    tape.value(out.mu).mapv(|m| m.clamp(-A_MAX, A_MAX))
}

/// One Gaussian action sample per row of the actor output.
pub fn sample_actions(tape: &Tape, out: ActorOut, rng: &mut impl Rng) -> Array2<f64> {
    let mu = tape.value(out.mu);
    let sigma = tape.value(out.sigma);
    Array2::from_shape_fn(mu.dim(), |(r, c)| {
        let eps: f64 = rng.sample(StandardNormal);
        mu[(r, c)] + sigma[(0, c)] * eps
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::{make_suite, observe, reset};
    use crate::nets::{actor_layout, init_params, q_layout, value_layout, LatentConfig};
    use crate::numerics::finite_diff_check;
    use crate::rng::stream;

    fn tiny_cfg(d_max: usize) -> LatentConfig {
        LatentConfig {
            l_d: 3,
            tau_att: 1.0,
            eps_att: 1e-6,
            core_widths: vec![5, 4],
            value_widths: vec![6, 5],
            l_a: 3,
            d_max,
            enc_hidden: 4,
            head_hidden: 4,
        }
    }

    fn fake_inputs(n: usize, j: usize, f: usize) -> NetInputs {
        let fill = |rows: usize, cols: usize, phase: f64| {
            Array2::from_shape_fn((rows, cols), |(r, c)| {
                ((r * cols + c) as f64 * 0.37 + phase).sin()
            })
        };
        NetInputs {
            n,
            n_joints: j,
            n_feet: f,
            o_g: fill(n, 3, 0.0),
            o_j: fill(j * n, 3, 1.0),
            o_f: fill(f * n, 2, 2.0),
            d_j: fill(j, 4, 3.0),
            d_f: fill(f, 2, 4.0),
        }
    }

    #[test]
    fn single_joint_attention_weight_is_one() {
        let cfg = tiny_cfg(4);
        let params = init_params(&actor_layout(&cfg).unwrap(), 0, "actor");
        let inp = fake_inputs(2, 1, 1);
        let mut tape = Tape::new(&params);
        let enc = encode(&mut tape, &ParamSource::Live, &cfg, &inp).unwrap();
        let o_j = tape.constant(inp.o_j.clone());
        let direct = layout::psi_joint(&cfg).forward(&mut tape, &ParamSource::Live, o_j);
        let zbar = tape.value(enc.zbar).clone();
        let direct = tape.value(direct);
        for b in 0..2 {
            for c in 0..cfg.l_d {
                assert_eq!(zbar[(b, 3 + c)], direct[(b, c)]);
            }
        }
    }

    #[test]
    fn joint_permutation_leaves_latent_unchanged() {
        let cfg = tiny_cfg(4);
        let params = init_params(&actor_layout(&cfg).unwrap(), 1, "actor");
        let inp = fake_inputs(2, 3, 2);
        let jperm = [2usize, 0, 1];
        let fperm = [1usize, 0];
        let mut perm = inp.clone();
        for (new_j, &old_j) in jperm.iter().enumerate() {
            for b in 0..inp.n {
                for c in 0..3 {
                    perm.o_j[(new_j * inp.n + b, c)] = inp.o_j[(old_j * inp.n + b, c)];
                }
            }
            for c in 0..4 {
                perm.d_j[(new_j, c)] = inp.d_j[(old_j, c)];
            }
        }
        for (new_f, &old_f) in fperm.iter().enumerate() {
            for b in 0..inp.n {
                for c in 0..2 {
                    perm.o_f[(new_f * inp.n + b, c)] = inp.o_f[(old_f * inp.n + b, c)];
                }
            }
            for c in 0..2 {
                perm.d_f[(new_f, c)] = inp.d_f[(old_f, c)];
            }
        }

        let mut t1 = Tape::new(&params);
        let e1 = encode(&mut t1, &ParamSource::Live, &cfg, &inp).unwrap();
        let a1 = actor_forward(&mut t1, &ParamSource::Live, &cfg, &inp, e1).unwrap();
        let mut t2 = Tape::new(&params);
        let e2 = encode(&mut t2, &ParamSource::Live, &cfg, &perm).unwrap();
        let a2 = actor_forward(&mut t2, &ParamSource::Live, &cfg, &perm, e2).unwrap();

        let z1 = t1.value(e1.zbar);
        let z2 = t2.value(e2.zbar);
        for (a, b) in z1.iter().zip(z2.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
        let m1 = t1.value(a1.mu);
        let m2 = t2.value(a2.mu);
        let s1 = t1.value(a1.sigma);
        let s2 = t2.value(a2.sigma);
        for (new_j, &old_j) in jperm.iter().enumerate() {
            for b in 0..inp.n {
                assert!((m1[(b, old_j)] - m2[(b, new_j)]).abs() < 1e-12);
            }
            assert!((s1[(0, old_j)] - s2[(0, new_j)]).abs() < 1e-12);
        }
    }

    #[test]
    fn latent_width_constant_across_suite() {
        let suite = make_suite(0);
        let d_max = suite.iter().map(|s| s.n_joints).max().unwrap();
        let cfg = tiny_cfg(d_max);
        let params = init_params(&actor_layout(&cfg).unwrap(), 2, "actor");
        let mut widths = Vec::new();
        for spec in &suite {
            let mut rng = stream(7, &format!("reset:{}", spec.id));
            let state = reset(spec, 1.0, &mut rng);
            let inp = NetInputs::from_obs(&observe(spec, &state));
            let mut tape = Tape::new(&params);
            let enc = encode(&mut tape, &ParamSource::Live, &cfg, &inp).unwrap();
            widths.push(tape.value(enc.zbar).ncols());
            let out = actor_forward(&mut tape, &ParamSource::Live, &cfg, &inp, enc).unwrap();
            assert_eq!(tape.value(out.mu).ncols(), spec.n_joints);
            assert_eq!(tape.value(out.sigma).dim(), (1, spec.n_joints));
        }
        assert!(widths.iter().all(|&w| w == cfg.zbar_dim()));
    }

    #[test]
    fn sigma_ignores_state_and_forward_is_pure() {
        let cfg = tiny_cfg(4);
        let params = init_params(&actor_layout(&cfg).unwrap(), 3, "actor");
        let a = fake_inputs(2, 3, 2);
        let mut b = fake_inputs(2, 3, 2);
        b.o_g += 0.5;
        b.o_j += 0.3;
        b.o_f -= 0.2;

        let run = |inp: &NetInputs| {
            let mut tape = Tape::new(&params);
            let enc = encode(&mut tape, &ParamSource::Live, &cfg, inp).unwrap();
            let out = actor_forward(&mut tape, &ParamSource::Live, &cfg, inp, enc).unwrap();
            (tape.value(out.mu).clone(), tape.value(out.sigma).clone())
        };
        let (mu_a, sig_a) = run(&a);
        let (mu_b, sig_b) = run(&b);
        let (mu_a2, sig_a2) = run(&a);
        assert_eq!(sig_a, sig_b);
        assert_ne!(mu_a, mu_b);
        assert_eq!(mu_a, mu_a2);
        assert_eq!(sig_a, sig_a2);
        assert!(sig_a.iter().all(|s| *s >= 1e-4));
    }

    #[test]
    fn log_prob_matches_direct_formula() {
        let cfg = tiny_cfg(4);
        let params = init_params(&actor_layout(&cfg).unwrap(), 4, "actor");
        let inp = fake_inputs(3, 2, 1);
        let actions = Array2::from_shape_fn((3, 2), |(r, c)| (r as f64) * 0.4 - (c as f64) * 0.7);
        let mut tape = Tape::new(&params);
        let enc = encode(&mut tape, &ParamSource::Live, &cfg, &inp).unwrap();
        let out = actor_forward(&mut tape, &ParamSource::Live, &cfg, &inp, enc).unwrap();
        let act = tape.constant(actions.clone());
        let lp = gaussian_log_prob(&mut tape, out, act);
        let mu = tape.value(out.mu).clone();
        let sigma = tape.value(out.sigma).clone();
        for r in 0..3 {
            let mut want = 0.0;
            for c in 0..2 {
                let s = sigma[(0, c)];
                let z = (actions[(r, c)] - mu[(r, c)]) / s;
                want += -0.5 * z * z - s.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln();
            }
            let got = tape.value(lp)[(r, 0)];
            assert!(got.is_finite());
            assert!((got - want).abs() < 1e-12, "row {r}: {got} vs {want}");
        }
    }

    #[test]
    fn action_padding_appends_zeros() {
        let cfg = tiny_cfg(8);
        let params = init_params(&q_layout(&cfg).unwrap(), 5, "q");
        let mut tape = Tape::new(&params);
        let action = tape.constant(Array2::from_shape_fn((2, 2), |(r, c)| (r + c) as f64 + 1.0));
        let padded = pad_action(&mut tape, action, 8).unwrap();
        let v = tape.value(padded);
        assert_eq!(v.dim(), (2, 8));
        assert_eq!(v[(0, 0)], 1.0);
        assert_eq!(v[(1, 1)], 3.0);
        assert!(v.slice(ndarray::s![.., 2..]).iter().all(|x| *x == 0.0));

        let same = pad_action(&mut tape, action, 2).unwrap();
        assert_eq!(tape.value(same), tape.value(action));
        assert!(matches!(pad_action(&mut tape, action, 1), Err(Error::Shape(_))));
    }

    #[test]
    fn twin_heads_disagree_generically() {
        let cfg = tiny_cfg(4);
        let params = init_params(&q_layout(&cfg).unwrap(), 6, "q");
        let inp = fake_inputs(2, 3, 2);
        let mut tape = Tape::new(&params);
        let enc = encode(&mut tape, &ParamSource::Live, &cfg, &inp).unwrap();
        let action = tape.constant(Array2::from_shape_fn((2, 3), |(r, c)| (r * 3 + c) as f64 * 0.1));
        let (q1, q2) = q_forward(&mut tape, &ParamSource::Live, &cfg, enc.zbar, action).unwrap();
        assert_ne!(tape.value(q1), tape.value(q2));
        assert_eq!(tape.value(q1).dim(), (2, 1));
    }

    #[test]
    fn zero_weight_padding_slots_never_matter() {
        let narrow = tiny_cfg(2);
        let wide = tiny_cfg(4);
        let p_narrow = init_params(&q_layout(&narrow).unwrap(), 7, "q");
        let layout_wide = q_layout(&wide).unwrap();
        let mut p_wide = crate::numerics::ParamVector::zeros(layout_wide);
        for seg in p_narrow.layout().segments().to_vec() {
            if seg.name == "fa.w0" {
                let src = p_narrow.seg("fa.w0").to_vec();
                p_wide.seg_mut("fa.w0")[..src.len()].copy_from_slice(&src);
            } else {
                let src = p_narrow.seg(&seg.name).to_vec();
                p_wide.seg_mut(&seg.name).copy_from_slice(&src);
            }
        }

        let inp = fake_inputs(3, 2, 1);
        let run = |cfg: &LatentConfig, params: &crate::numerics::ParamVector| {
            let mut tape = Tape::new(params);
            let enc = encode(&mut tape, &ParamSource::Live, cfg, &inp).unwrap();
            let action =
                tape.constant(Array2::from_shape_fn((3, 2), |(r, c)| (r + 2 * c) as f64 * 0.3));
            let (q1, q2) = q_forward(&mut tape, &ParamSource::Live, cfg, enc.zbar, action).unwrap();
            (tape.value(q1).clone(), tape.value(q2).clone())
        };
        let (a1, a2) = run(&narrow, &p_narrow);
        let (b1, b2) = run(&wide, &p_wide);
        for (a, b) in a1.iter().zip(b1.iter()).chain(a2.iter().zip(b2.iter())) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn shape_mismatches_are_rejected() {
        let cfg = tiny_cfg(4);
        let params = init_params(&actor_layout(&cfg).unwrap(), 8, "actor");
        let mut bad = fake_inputs(2, 3, 2);
        bad.d_j = Array2::zeros((2, 4));
        let mut tape = Tape::new(&params);
        assert!(matches!(
            encode(&mut tape, &ParamSource::Live, &cfg, &bad),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn actor_gradient_passes_finite_differences() {
        let cfg = tiny_cfg(2);
        let params = init_params(&actor_layout(&cfg).unwrap(), 9, "actor");
        let inp = fake_inputs(2, 2, 1);
        let actions = Array2::from_shape_fn((2, 2), |(r, c)| (r as f64) * 0.2 + (c as f64) * 0.1);
        let err = finite_diff_check(
            &params,
            move |tape| {
                let enc = encode(tape, &ParamSource::Live, &cfg, &inp).unwrap();
                let out = actor_forward(tape, &ParamSource::Live, &cfg, &inp, enc).unwrap();
                let act = tape.constant(actions.clone());
                let lp = gaussian_log_prob(tape, out, act);
                let m = tape.mean_all(lp);
                tape.scale(m, -1.0)
            },
            1e-5,
        )
        .unwrap();
        assert!(err < 1e-4, "err = {err}");
    }

    #[test]
    fn value_gradient_passes_finite_differences() {
        let cfg = tiny_cfg(2);
        let params = init_params(&value_layout(&cfg).unwrap(), 10, "value");
        let inp = fake_inputs(2, 2, 1);
        let err = finite_diff_check(
            &params,
            move |tape| {
                let enc = encode(tape, &ParamSource::Live, &cfg, &inp).unwrap();
                let v = v_forward(tape, &ParamSource::Live, &cfg, enc.zbar).unwrap();
                let sq = tape.square(v);
                tape.mean_all(sq)
            },
            1e-5,
        )
        .unwrap();
        assert!(err < 1e-4, "err = {err}");
    }

    #[test]
    fn q_gradient_passes_finite_differences() {
        let cfg = tiny_cfg(3);
        let params = init_params(&q_layout(&cfg).unwrap(), 11, "q");
        let inp = fake_inputs(2, 2, 1);
        let actions = Array2::from_shape_fn((2, 2), |(r, c)| (r as f64) * 0.3 - (c as f64) * 0.2);
        let err = finite_diff_check(
            &params,
            move |tape| {
                let enc = encode(tape, &ParamSource::Live, &cfg, &inp).unwrap();
                let act = tape.constant(actions.clone());
                let (q1, q2) =
                    q_forward(tape, &ParamSource::Live, &cfg, enc.zbar, act).unwrap();
                let s = tape.add(q1, q2);
                let sq = tape.square(s);
                tape.mean_all(sq)
            },
            1e-5,
        )
        .unwrap();
        assert!(err < 1e-4, "err = {err}");
    }

    #[test]
    fn sampling_and_deterministic_action_shapes() {
        let cfg = tiny_cfg(4);
        let params = init_params(&actor_layout(&cfg).unwrap(), 12, "actor");
        let inp = fake_inputs(2, 3, 2);
        let mut tape = Tape::new(&params);
        let enc = encode(&mut tape, &ParamSource::Live, &cfg, &inp).unwrap();
        let out = actor_forward(&mut tape, &ParamSource::Live, &cfg, &inp, enc).unwrap();
        let det = deterministic_action(&tape, out);
        assert_eq!(det.dim(), (2, 3));
        assert!(det.iter().all(|a| a.abs() <= A_MAX));
        let mut rng = stream(0, "sample");
        let sampled = sample_actions(&tape, out, &mut rng);
        assert_eq!(sampled.dim(), (2, 3));
        assert_ne!(sampled, det);
    }
}
