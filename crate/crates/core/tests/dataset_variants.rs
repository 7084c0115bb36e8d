//! Cross-variant dataset invariants over the full 16-robot suite.

use xembod::datasets::{gen_expert, gen_mixture, gen_replay, Direction, RobotShard};
use xembod::envs::make_suite;

fn mean_return(s: &RobotShard) -> f64 {
    let n = s.episodes().len();
    (0..n).map(|k| s.episode_return(k)).sum::<f64>() / n as f64
}

#[test]
fn variant_return_ordering_per_robot() {
    let suite = make_suite(0);
    let steps = 20000;
    let (exp, _) = gen_expert(&suite, Direction::Forward, steps, 0).unwrap();
    let (rep, _) = gen_replay(&suite, Direction::Forward, steps, 0).unwrap();
    let (mix, _) = gen_mixture(&suite, Direction::Forward, steps, 0.7, 0).unwrap();
    for ((e, r), m) in exp.iter().zip(&rep).zip(&mix) {
        let (me, mr, mm) = (mean_return(e), mean_return(r), mean_return(m));
        assert!(
            me > mr && mr > mm,
            "{}: expert {me:.1}, replay {mr:.1}, mixture70 {mm:.1}",
            e.robot_id
        );
    }
}

#[test]
fn variants_reproducible_bit_exactly() {
    let suite: Vec<_> = make_suite(0).into_iter().take(2).collect();
    let a = gen_replay(&suite, Direction::Backward, 3000, 9).unwrap();
    let b = gen_replay(&suite, Direction::Backward, 3000, 9).unwrap();
    assert_eq!(a.0, b.0);
    assert_eq!(a.1, b.1);
    let a = gen_mixture(&suite, Direction::Forward, 3000, 0.3, 9).unwrap();
    let b = gen_mixture(&suite, Direction::Forward, 3000, 0.3, 9).unwrap();
    assert_eq!(a.0, b.0);
    assert_eq!(a.1, b.1);
}
