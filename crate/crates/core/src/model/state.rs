use serde::{Deserialize, Serialize};
use std::fmt;

use super::{BoundsCheck, Pitch, Team};

/// Players per side.
pub const SQUAD_SIZE: usize = 11;

/// Continuous coordinates in a state vector: ball plus 22 players, x and y each.
pub const COORDINATE_COUNT: usize = 2 * (1 + 2 * SQUAD_SIZE);

/// Slack around the pitch rectangle allowed by [`BoundsCheck::Reject`].
pub const BOUNDS_MARGIN: f64 = 5.0;

/// A point on the pitch, in meters.
///
/// Equality is bitwise on both coordinates, so `0.0` and `-0.0` are
/// different positions. Every distinct wire encoding is a distinct value.
#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub const fn new(x: f64, y: f64) -> Self {
        Position { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn distance_to(&self, other: &Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// Moves towards `target` by at most `max_step` meters.
    pub fn step_towards(&self, target: &Position, max_step: f64) -> Position {
        let dist = self.distance_to(target);
        if dist <= max_step || dist == 0.0 {
            return *target;
        }
        let f = max_step / dist;
        Position::new(self.x + (target.x - self.x) * f, self.y + (target.y - self.y) * f)
    }

    pub fn clamped_to(&self, pitch: &Pitch) -> Position {
        Position::new(self.x.clamp(0.0, pitch.length), self.y.clamp(0.0, pitch.width))
    }
}

impl PartialEq for Position {
    fn eq(&self, other: &Self) -> bool {
        self.x.to_bits() == other.x.to_bits() && self.y.to_bits() == other.y.to_bits()
    }
}

impl Eq for Position {}

/// One snapshot of the match: ball, both squads, and who touched the ball last.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateVector {
    pub ball: Position,
    /// Index `i` holds shirt `i + 1`.
    pub home: [Position; SQUAD_SIZE],
    pub guest: [Position; SQUAD_SIZE],
    pub possessing_team: Team,
    /// Shirt number in `1..=11`.
    pub possessing_player: u8,
}

impl StateVector {
    /// Everything at the origin, ball with home shirt 1.
    pub fn zeroed() -> Self {
        StateVector {
            ball: Position::default(),
            home: [Position::default(); SQUAD_SIZE],
            guest: [Position::default(); SQUAD_SIZE],
            possessing_team: Team::Home,
            possessing_player: 1,
        }
    }

    pub fn squad(&self, team: Team) -> &[Position; SQUAD_SIZE] {
        match team {
            Team::Home => &self.home,
            Team::Guest => &self.guest,
        }
    }

    pub fn squad_mut(&mut self, team: Team) -> &mut [Position; SQUAD_SIZE] {
        match team {
            Team::Home => &mut self.home,
            Team::Guest => &mut self.guest,
        }
    }

    /// Position of `shirt` (1-based) in `team`.
    pub fn player(&self, team: Team, shirt: u8) -> Position {
        self.squad(team)[usize::from(shirt) - 1]
    }

    pub fn possessor(&self) -> Position {
        self.player(self.possessing_team, self.possessing_player)
    }

    /// Ball x, ball y, home 1..11 (x, y), guest 1..11 (x, y).
    pub fn coordinates(&self) -> [f64; COORDINATE_COUNT] {
        let mut out = [0.0; COORDINATE_COUNT];
        let points = std::iter::once(&self.ball).chain(&self.home).chain(&self.guest);
        for (i, p) in points.enumerate() {
            out[2 * i] = p.x;
            out[2 * i + 1] = p.y;
        }
        out
    }

    /// Inverse of [`StateVector::coordinates`].
    pub fn from_coordinates(
        coords: &[f64; COORDINATE_COUNT],
        possessing_team: Team,
        possessing_player: u8,
    ) -> Self {
        let at = |i: usize| Position::new(coords[2 * i], coords[2 * i + 1]);
        StateVector {
            ball: at(0),
            home: std::array::from_fn(|i| at(1 + i)),
            guest: std::array::from_fn(|i| at(1 + SQUAD_SIZE + i)),
            possessing_team,
            possessing_player,
        }
    }

    fn positions(&self) -> impl Iterator<Item = &Position> {
        std::iter::once(&self.ball).chain(&self.home).chain(&self.guest)
    }
}

/// Euclidean distance over the 46 continuous coordinates. Possession does
/// not contribute.
pub fn distance(a: &StateVector, b: &StateVector) -> f64 {
    let mut acc = 0.0;
    for (p, q) in a.positions().zip(b.positions()) {
        let dx = p.x - q.x;
        let dy = p.y - q.y;
        acc += dx * dx + dy * dy;
    }
    acc.sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, thiserror::Error)]
pub enum InvalidReason {
    #[error("non-finite coordinate")]
    NonFinite,
    #[error("possessing player outside 1..=11")]
    BadPossession,
    #[error("position outside the pitch margin")]
    OutOfBounds,
}

/// Checks a state vector without altering it.
pub fn validate_state_vector(
    s: &StateVector,
    pitch: &Pitch,
    bounds: BoundsCheck,
) -> Result<(), InvalidReason> {
    if !s.positions().all(Position::is_finite) {
        return Err(InvalidReason::NonFinite);
    }
    if !(1..=SQUAD_SIZE as u8).contains(&s.possessing_player) {
        return Err(InvalidReason::BadPossession);
    }
    if bounds == BoundsCheck::Reject {
        let inside = |p: &Position| {
            (-BOUNDS_MARGIN..=pitch.length + BOUNDS_MARGIN).contains(&p.x)
                && (-BOUNDS_MARGIN..=pitch.width + BOUNDS_MARGIN).contains(&p.y)
        };
        if !s.positions().all(inside) {
            return Err(InvalidReason::OutOfBounds);
        }
    }
    Ok(())
}

// 4-4-2 for the home side as fractions of (length, width); guest is mirrored
// about the halfway line.
const KICKOFF_442: [(f64, f64); SQUAD_SIZE] = [
    (0.05, 0.50),
    (0.20, 0.20),
    (0.20, 0.40),
    (0.20, 0.60),
    (0.20, 0.80),
    (0.35, 0.20),
    (0.35, 0.40),
    (0.35, 0.60),
    (0.35, 0.80),
    (0.46, 0.40),
    (0.46, 0.60),
];

/// The deterministic kickoff lineup for `pitch`: ball on the centre spot,
/// both sides in a 4-4-2 in their own half, Home in possession.
pub fn make_kickoff_lineup(pitch: &Pitch) -> StateVector {
    let home: [Position; SQUAD_SIZE] = std::array::from_fn(|i| {
        let (fx, fy) = KICKOFF_442[i];
        Position::new(fx * pitch.length, fy * pitch.width)
    });
    let guest = home.map(|p| Position::new(pitch.length - p.x, p.y));
    let ball = pitch.center();

    let mut possessing_player = 1;
    let mut best = f64::INFINITY;
    for (i, p) in home.iter().enumerate() {
        let d = p.distance_to(&ball);
        if d < best {
            best = d;
            possessing_player = i as u8 + 1;
        }
    }

    StateVector { ball, home, guest, possessing_team: Team::Home, possessing_player }
}

impl fmt::Display for StateVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "ball ({:.2}, {:.2}) {} #{}",
            self.ball.x, self.ball.y, self.possessing_team, self.possessing_player
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn random_state(rng: &mut impl Rng) -> StateVector {
        let mut p = || Position::new(rng.random_range(-20.0..130.0), rng.random_range(-20.0..90.0));
        StateVector {
            ball: p(),
            home: std::array::from_fn(|_| p()),
            guest: std::array::from_fn(|_| p()),
            possessing_team: Team::Guest,
            possessing_player: 3,
        }
    }

    // Flattens by explicit field access, independent of `coordinates`.
    fn oracle_distance(a: &StateVector, b: &StateVector) -> f64 {
        let mut xs = vec![a.ball.x - b.ball.x, a.ball.y - b.ball.y];
        for i in 0..SQUAD_SIZE {
            xs.push(a.home[i].x - b.home[i].x);
            xs.push(a.home[i].y - b.home[i].y);
        }
        for i in 0..SQUAD_SIZE {
            xs.push(a.guest[i].x - b.guest[i].x);
            xs.push(a.guest[i].y - b.guest[i].y);
        }
        assert_eq!(xs.len(), 46);
        let mut total = 0.0;
        for d in xs {
            total += d * d;
        }
        total.sqrt()
    }

    #[test]
    fn distance_identity_and_345() {
        let a = make_kickoff_lineup(&Pitch::default());
        assert_eq!(distance(&a, &a), 0.0);

        let mut a = StateVector::zeroed();
        let mut b = a;
        a.ball = Position::new(0.0, 0.0);
        b.ball = Position::new(3.0, 4.0);
        assert_eq!(distance(&a, &b), 5.0);
    }

    #[test]
    fn distance_ignores_possession() {
        let a = StateVector::zeroed();
        let mut b = a;
        b.possessing_team = Team::Guest;
        b.possessing_player = 9;
        assert_eq!(distance(&a, &b), 0.0);
    }

    #[test]
    fn distance_matches_coordinate_loop_oracle() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(0xD15);
        for _ in 0..100 {
            let a = random_state(&mut rng);
            let b = random_state(&mut rng);
            let got = distance(&a, &b);
            let want = oracle_distance(&a, &b);
            assert!(((got - want) / want).abs() <= 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn coordinates_round_trip() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        let s = random_state(&mut rng);
        let c = s.coordinates();
        assert_eq!(c[0], s.ball.x);
        assert_eq!(c[3], s.home[0].y);
        assert_eq!(c[24], s.guest[0].x);
        assert_eq!(StateVector::from_coordinates(&c, s.possessing_team, s.possessing_player), s);
    }

    #[test]
    fn validation_cases() {
        let pitch = Pitch::new(105.0, 68.0);
        let zero = StateVector::zeroed();
        assert_eq!(validate_state_vector(&zero, &pitch, BoundsCheck::Off), Ok(()));

        let mut nan = zero;
        nan.ball.x = f64::NAN;
        assert_eq!(validate_state_vector(&nan, &pitch, BoundsCheck::Off), Err(InvalidReason::NonFinite));
        let mut inf = zero;
        inf.guest[10].y = f64::NEG_INFINITY;
        assert_eq!(validate_state_vector(&inf, &pitch, BoundsCheck::Off), Err(InvalidReason::NonFinite));

        let mut far = zero;
        far.ball = Position::new(-100.0, 0.0);
        assert_eq!(
            validate_state_vector(&far, &pitch, BoundsCheck::Reject),
            Err(InvalidReason::OutOfBounds)
        );
        assert_eq!(validate_state_vector(&far, &pitch, BoundsCheck::Off), Ok(()));

        let mut edge = zero;
        edge.ball = Position::new(-5.0, 73.0);
        assert_eq!(validate_state_vector(&edge, &pitch, BoundsCheck::Reject), Ok(()));

        for bad in [0u8, 12, 255] {
            let mut s = zero;
            s.possessing_player = bad;
            assert_eq!(
                validate_state_vector(&s, &pitch, BoundsCheck::Off),
                Err(InvalidReason::BadPossession)
            );
        }
    }

    #[test]
    fn kickoff_lineup() {
        let pitch = Pitch::new(105.0, 68.0);
        let k = make_kickoff_lineup(&pitch);
        assert_eq!(k.ball, Position::new(52.5, 34.0));
        assert_eq!(validate_state_vector(&k, &pitch, BoundsCheck::Reject), Ok(()));
        assert_eq!(k, make_kickoff_lineup(&pitch));
        assert_eq!(k.possessing_team, Team::Home);
        // Shirts 10 and 11 tie for nearest; lowest wins.
        assert_eq!(k.possessing_player, 10);
        for i in 0..SQUAD_SIZE {
            assert!(k.home[i].x < pitch.length / 2.0);
            assert_eq!(k.guest[i].x, pitch.length - k.home[i].x);
            assert_eq!(k.guest[i].y, k.home[i].y);
        }
    }

    #[test]
    fn signed_zero_positions_differ() {
        assert_ne!(Position::new(0.0, 1.0), Position::new(-0.0, 1.0));
    }

    proptest::proptest! {
        #[test]
        fn distance_is_a_metric(seed in proptest::prelude::any::<u64>()) {
            let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
            let a = random_state(&mut rng);
            let b = random_state(&mut rng);
            let c = random_state(&mut rng);
            proptest::prop_assert_eq!(distance(&a, &b), distance(&b, &a));
            proptest::prop_assert_eq!(distance(&a, &a), 0.0);
            proptest::prop_assert!(distance(&a, &c) <= distance(&a, &b) + distance(&b, &c) + 1e-9);
        }
    }
}
