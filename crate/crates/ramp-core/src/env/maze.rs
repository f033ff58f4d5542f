//! Continuous point mazes with Euler integration and axis-aligned walls.
//!
//! Dynamics: `s' = clamp(s + a * dt)` with per-axis collision resolution.
//! The extrinsic reward is the decrease in Euclidean distance to the goal,
//! `r = |g - s| - |g - s'|`, so episode returns telescope to the net
//! progress made toward the goal.

use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{ActionVec, Environment, StateVec};
use crate::error::{Error, Result};

/// Axis-aligned wall segment with `a <= b` componentwise. Exactly one axis
/// may have nonzero extent; a vertical wall has `a[0] == b[0]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Wall {
    pub a: [f64; 2],
    pub b: [f64; 2],
}

impl Wall {
    fn new(p: [f64; 2], q: [f64; 2]) -> Option<Wall> {
        if p[0] != q[0] && p[1] != q[1] {
            return None;
        }
        if p == q {
            return None;
        }
        let a = [p[0].min(q[0]), p[1].min(q[1])];
        let b = [p[0].max(q[0]), p[1].max(q[1])];
        Some(Wall { a, b })
    }

    pub fn is_vertical(&self) -> bool {
        self.a[0] == self.b[0]
    }

    /// Whether `p` lies exactly on the segment.
    fn contains(&self, p: [f64; 2]) -> bool {
        if self.is_vertical() {
            p[0] == self.a[0] && p[1] >= self.a[1] && p[1] <= self.b[1]
        } else {
            p[1] == self.a[1] && p[0] >= self.a[0] && p[0] <= self.b[0]
        }
    }

    /// Whether the directed segment `s -> p` crosses (or ends on) the wall.
    /// A segment that starts on the wall's supporting line is not a crossing;
    /// callers reject starting states inside walls up front.
    fn crossed_by(&self, s: [f64; 2], p: [f64; 2]) -> bool {
        let (norm, tan) = if self.is_vertical() { (0, 1) } else { (1, 0) };
        let w = self.a[norm];
        let ds = s[norm] - w;
        let dp = p[norm] - w;
        if ds == 0.0 {
            return false;
        }
        if ds * dp > 0.0 {
            return false;
        }
        let t = (w - s[norm]) / (p[norm] - s[norm]);
        let c = s[tan] + t * (p[tan] - s[tan]);
        c >= self.a[tan] && c <= self.b[tan]
    }
}

/// Maze geometry and episode parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct MazeSpec {
    pub bounds_min: [f64; 2],
    pub bounds_max: [f64; 2],
    pub walls: Vec<Wall>,
    pub start: [f64; 2],
    pub goal: [f64; 2],
    pub dt: f64,
    pub horizon: usize,
}

impl MazeSpec {
    /// Parses the line-oriented maze definition format:
    ///
    /// ```text
    /// bounds x1 y1 x2 y2
    /// wall x1 y1 x2 y2
    /// start x y
    /// goal x y
    /// dt v
    /// horizon T
    /// ```
    ///
    /// Blank lines and `#` comments are allowed. Any malformed or unknown
    /// line aborts with its line number. `wall` may repeat; the other
    /// directives may not. `dt` defaults to 0.01 and `horizon` to 200.
    pub fn parse(text: &str) -> Result<MazeSpec> {
        let fail = |line: usize, msg: String| Error::MazeParse { line, msg };
        let mut bounds: Option<([f64; 2], [f64; 2])> = None;
        let mut walls = Vec::new();
        let mut start: Option<[f64; 2]> = None;
        let mut goal: Option<[f64; 2]> = None;
        let mut dt: Option<f64> = None;
        let mut horizon: Option<usize> = None;

        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let mut parts = content.split_whitespace();
            let keyword = parts.next().unwrap();
            let args: Vec<&str> = parts.collect();
            let nums = |n: usize| -> Result<Vec<f64>> {
                if args.len() != n {
                    return Err(fail(
                        line,
                        format!("`{keyword}` takes {n} arguments, got {}", args.len()),
                    ));
                }
                args.iter()
                    .map(|a| {
                        a.parse::<f64>().map_err(|_| {
                            fail(line, format!("`{a}` is not a number in `{keyword}`"))
                        })
                    })
                    .collect()
            };
            let once_ok = |seen: bool| -> Result<()> {
                if seen {
                    Err(fail(line, format!("duplicate `{keyword}` directive")))
                } else {
                    Ok(())
                }
            };
            match keyword {
                "bounds" => {
                    once_ok(bounds.is_some())?;
                    let v = nums(4)?;
                    if v[0] >= v[2] || v[1] >= v[3] {
                        return Err(fail(line, "bounds must satisfy x1 < x2, y1 < y2".into()));
                    }
                    bounds = Some(([v[0], v[1]], [v[2], v[3]]));
                }
                "wall" => {
                    let v = nums(4)?;
                    let w = Wall::new([v[0], v[1]], [v[2], v[3]]).ok_or_else(|| {
                        fail(line, "wall must be axis-aligned with nonzero length".into())
                    })?;
                    walls.push(w);
                }
                "start" => {
                    once_ok(start.is_some())?;
                    let v = nums(2)?;
                    start = Some([v[0], v[1]]);
                }
                "goal" => {
                    once_ok(goal.is_some())?;
                    let v = nums(2)?;
                    goal = Some([v[0], v[1]]);
                }
                "dt" => {
                    once_ok(dt.is_some())?;
                    let v = nums(1)?;
                    if !(v[0] > 0.0) {
                        return Err(fail(line, "dt must be positive".into()));
                    }
                    dt = Some(v[0]);
                }
                "horizon" => {
                    once_ok(horizon.is_some())?;
                    if args.len() != 1 {
                        return Err(fail(line, "`horizon` takes 1 argument".into()));
                    }
                    let t: usize = args[0]
                        .parse()
                        .map_err(|_| fail(line, format!("`{}` is not a positive integer", args[0])))?;
                    if t == 0 {
                        return Err(fail(line, "horizon must be at least 1".into()));
                    }
                    horizon = Some(t);
                }
                other => {
                    return Err(fail(line, format!("unknown directive `{other}`")));
                }
            }
        }

        let (bounds_min, bounds_max) =
            bounds.ok_or_else(|| Error::Config("maze definition missing `bounds`".into()))?;
        let spec = MazeSpec {
            bounds_min,
            bounds_max,
            walls,
            start: start.ok_or_else(|| Error::Config("maze definition missing `start`".into()))?,
            goal: goal.ok_or_else(|| Error::Config("maze definition missing `goal`".into()))?,
            dt: dt.unwrap_or(0.01),
            horizon: horizon.unwrap_or(200),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_file<P: AsRef<Path>>(path: P) -> Result<MazeSpec> {
        let text = std::fs::read_to_string(path)?;
        MazeSpec::parse(&text)
    }

    /// One of the shipped layouts: `easy` (open room), `u` (single barrier,
    /// the free space forms a U), `hard` (three-corridor serpentine).
    pub fn builtin(name: &str) -> Option<MazeSpec> {
        let text = match name {
            "easy" => include_str!("../../mazes/easy.maze"),
            "u" => include_str!("../../mazes/u.maze"),
            "hard" => include_str!("../../mazes/hard.maze"),
            _ => return None,
        };
        Some(MazeSpec::parse(text).expect("shipped maze layouts parse"))
    }

    pub fn builtin_names() -> &'static [&'static str] {
        &["easy", "u", "hard"]
    }

    fn validate(&self) -> Result<()> {
        for w in &self.walls {
            for p in [w.a, w.b] {
                if !self.in_bounds(p) {
                    return Err(Error::Config(format!(
                        "wall endpoint ({}, {}) outside bounds",
                        p[0], p[1]
                    )));
                }
            }
        }
        for (name, p) in [("start", self.start), ("goal", self.goal)] {
            if !self.is_free(p) {
                return Err(Error::Config(format!(
                    "{name} ({}, {}) is not in free space",
                    p[0], p[1]
                )));
            }
        }
        Ok(())
    }

    pub fn in_bounds(&self, p: [f64; 2]) -> bool {
        p[0] >= self.bounds_min[0]
            && p[0] <= self.bounds_max[0]
            && p[1] >= self.bounds_min[1]
            && p[1] <= self.bounds_max[1]
    }

    /// Inside the bounds and not on any wall segment.
    pub fn is_free(&self, p: [f64; 2]) -> bool {
        self.in_bounds(p) && !self.walls.iter().any(|w| w.contains(p))
    }

    fn clamp(&self, p: [f64; 2]) -> [f64; 2] {
        [
            p[0].clamp(self.bounds_min[0], self.bounds_max[0]),
            p[1].clamp(self.bounds_min[1], self.bounds_max[1]),
        ]
    }
}

/// A maze environment ready to step.
#[derive(Clone, Debug)]
pub struct Maze {
    spec: MazeSpec,
}

impl Maze {
    pub fn new(spec: MazeSpec) -> Maze {
        Maze { spec }
    }

    pub fn spec(&self) -> &MazeSpec {
        &self.spec
    }

    /// Applies one Euler step with per-axis collision resolution.
    ///
    /// The full displacement `a * dt` is attempted; if the (bounds-clamped)
    /// move crosses a wall, the displacement component normal to that wall is
    /// cancelled and the tangential component kept. The result never crosses
    /// a wall and never leaves the bounds. Actions are clamped to
    /// `[-1, 1]` per axis. Returns the next state and the goal-distance
    /// decrease reward.
    pub fn step_state(&self, s: [f64; 2], a: [f64; 2]) -> Result<([f64; 2], f64)> {
        if !self.spec.is_free(s) {
            return Err(Error::OutsideFreeSpace(format!("({}, {})", s[0], s[1])));
        }
        let mut d = [
            a[0].clamp(-1.0, 1.0) * self.spec.dt,
            a[1].clamp(-1.0, 1.0) * self.spec.dt,
        ];
        let mut p = s;
        // Two cancellations at most (one per axis); the third pass confirms
        // the zero displacement is clean.
        for _ in 0..3 {
            p = self.spec.clamp([s[0] + d[0], s[1] + d[1]]);
            let mut hit_v = false;
            let mut hit_h = false;
            for w in &self.spec.walls {
                if w.crossed_by(s, p) {
                    if w.is_vertical() {
                        hit_v = true;
                    } else {
                        hit_h = true;
                    }
                }
            }
            if !hit_v && !hit_h {
                break;
            }
            if hit_v {
                d[0] = 0.0;
            }
            if hit_h {
                d[1] = 0.0;
            }
        }
        let g = self.spec.goal;
        let dist = |q: [f64; 2]| ((g[0] - q[0]).powi(2) + (g[1] - q[1]).powi(2)).sqrt();
        Ok((p, dist(s) - dist(p)))
    }
}

impl Environment for Maze {
    fn state_dim(&self) -> usize {
        2
    }

    fn action_dim(&self) -> usize {
        2
    }

    fn horizon(&self) -> usize {
        self.spec.horizon
    }

    fn reset(&self, _rng: &mut ChaCha8Rng) -> StateVec {
        self.spec.start.into()
    }

    fn step(&self, s: &StateVec, a: &ActionVec, _rng: &mut ChaCha8Rng) -> (StateVec, f64) {
        let (p, r) = self
            .step_state([s.0[0], s.0[1]], [a.0[0], a.0[1]])
            .expect("maze rollouts keep states in free space");
        (p.into(), r)
    }

    fn random_action(&self, rng: &mut ChaCha8Rng) -> ActionVec {
        ActionVec(vec![rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0)])
    }
}
