//! Property tests for point-maze motion: integration never tunnels through
//! a wall, never leaves the arena, and episode rollouts have the advertised
//! shape. The segment-intersection oracle here is written independently of
//! the maze's own collision code on purpose.

use proptest::prelude::*;
use ramp_core::env::{rollout_episode, Environment, Maze, MazeSpec, Wall};
use ramp_core::rng;

/// Strict proper intersection of segment `p -> q` with the wall segment.
/// Touching an endpoint or sliding along the wall line is allowed; passing
/// through to the other side is not.
fn crosses(p: [f64; 2], q: [f64; 2], w: &Wall) -> bool {
    fn orient(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
        (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    }
    let d1 = orient(w.a, w.b, p);
    let d2 = orient(w.a, w.b, q);
    let d3 = orient(p, q, w.a);
    let d4 = orient(p, q, w.b);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn test_step_never_tunnels_or_escapes(
        name in prop::sample::select(vec!["easy", "u", "hard"]),
        u in 0.001f64..0.999,
        v in 0.001f64..0.999,
        ax in -3.0f64..3.0,
        ay in -3.0f64..3.0,
        dt in 0.005f64..0.3,
    ) {
        let mut spec = MazeSpec::builtin(name).unwrap();
        spec.dt = dt; // long steps stress the collision handling
        let x = spec.bounds_min[0] + u * (spec.bounds_max[0] - spec.bounds_min[0]);
        let y = spec.bounds_min[1] + v * (spec.bounds_max[1] - spec.bounds_min[1]);
        prop_assume!(spec.is_free([x, y]));

        let maze = Maze::new(spec.clone());
        let (p, r) = maze.step_state([x, y], [ax, ay]).unwrap();

        prop_assert!(spec.in_bounds(p), "left the arena: {p:?}");
        prop_assert!(spec.is_free(p), "landed inside a wall: {p:?}");
        for w in &spec.walls {
            prop_assert!(!crosses([x, y], p, w), "tunnelled {:?} -> {p:?} through {w:?}", [x, y]);
        }

        // Goal-progress reward is 1-Lipschitz in the displacement.
        let moved = ((p[0] - x).powi(2) + (p[1] - y).powi(2)).sqrt();
        prop_assert!(r.abs() <= moved + 1e-12, "reward {r} exceeds displacement {moved}");
    }

    #[test]
    fn test_step_rejects_states_on_walls(
        name in prop::sample::select(vec!["easy", "u", "hard"]),
        pick in 0.0f64..1.0,
        t in 0.05f64..0.95,
    ) {
        let spec = MazeSpec::builtin(name).unwrap();
        prop_assume!(!spec.walls.is_empty());
        let w = &spec.walls[(pick * spec.walls.len() as f64) as usize % spec.walls.len()];
        let p = [w.a[0] + t * (w.b[0] - w.a[0]), w.a[1] + t * (w.b[1] - w.a[1])];
        prop_assert!(!spec.is_free(p), "point on a wall counted as free: {p:?}");
        let maze = Maze::new(spec.clone());
        prop_assert!(maze.step_state(p, [0.1, 0.1]).is_err());
    }
}

#[test]
fn test_rollout_shape_and_chaining() {
    for name in MazeSpec::builtin_names() {
        let mut spec = MazeSpec::builtin(name).unwrap();
        spec.horizon = 37;
        let maze = Maze::new(spec.clone());
        let mut rng = rng::seeded(5);
        let ep = rollout_episode(&maze, |_, r| maze.random_action(r), &mut rng);

        assert_eq!(ep.len(), 37, "{name}: rollout length");
        assert_eq!(ep[0].s.as_slice(), &spec.start, "{name}: episodes start at the spec start");
        for (i, t) in ep.iter().enumerate() {
            assert_eq!(t.done, i == 36, "{name}: done only on the last transition");
            let p = [t.s_next.as_slice()[0], t.s_next.as_slice()[1]];
            assert!(spec.is_free(p), "{name}: landing state not free");
        }
        for pair in ep.windows(2) {
            assert_eq!(pair[0].s_next, pair[1].s, "{name}: transitions must chain");
        }
    }
}
