//! Bipartitions of a planar point set that a line avoiding every point can
//! realize, enumerated exactly by a rotating sweep and, as an oracle, by
//! brute-force hull disjointness.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

/// Largest set accepted by [`separations_bruteforce`].
pub const BRUTEFORCE_MAX_POINTS: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq)]
struct IPoint {
    x: BigInt,
    y: BigInt,
}

impl IPoint {
    fn sub(&self, o: &IPoint) -> IPoint {
        IPoint {
            x: &self.x - &o.x,
            y: &self.y - &o.y,
        }
    }
}

fn cross(a: &IPoint, b: &IPoint) -> BigInt {
    &a.x * &b.y - &a.y * &b.x
}

/// Sign of the turn `a → b → c`.
fn orient(a: &IPoint, b: &IPoint, c: &IPoint) -> Ordering {
    cross(&b.sub(a), &c.sub(a)).cmp(&BigInt::zero())
}

/// Pairwise-distinct points with exact rational coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    points: Vec<(BigRational, BigRational)>,
    /// The same points scaled by the common denominator.
    scaled: Vec<IPoint>,
}

impl PointSet {
    pub fn new(points: Vec<(BigRational, BigRational)>) -> Result<Self> {
        for i in 0..points.len() {
            for j in i + 1..points.len() {
                if points[i] == points[j] {
                    return Err(Error::DuplicatePoints { first: i, second: j });
                }
            }
        }
        let lcm = points.iter().fold(BigInt::one(), |acc, (x, y)| {
            acc.lcm(x.denom()).lcm(y.denom())
        });
        let scale = |v: &BigRational| v.numer() * (&lcm / v.denom());
        let scaled = points
            .iter()
            .map(|(x, y)| IPoint { x: scale(x), y: scale(y) })
            .collect();
        Ok(Self { points, scaled })
    }

    pub fn from_integers(points: &[(i64, i64)]) -> Result<Self> {
        Self::new(
            points
                .iter()
                .map(|&(x, y)| (BigRational::from_integer(x.into()), BigRational::from_integer(y.into())))
                .collect(),
        )
    }

    /// Parses `x,y` lines of integers or `p/q` rationals. Blank lines and
    /// lines starting with `#` are skipped; a first line containing letters
    /// is treated as a header.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut points = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 2 {
                return Err(Error::Parse(format!(
                    "line {}: expected two comma-separated values",
                    lineno + 1
                )));
            }
            let parsed = (fields[0].parse::<BigRational>(), fields[1].parse::<BigRational>());
            match parsed {
                (Ok(x), Ok(y)) => points.push((x, y)),
                _ if lineno == 0 && line.chars().any(|c| c.is_ascii_alphabetic()) => continue,
                _ => {
                    return Err(Error::Parse(format!(
                        "line {}: coordinates must be integers or p/q rationals",
                        lineno + 1
                    )))
                }
            }
        }
        Self::new(points)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[(BigRational, BigRational)] {
        &self.points
    }

    /// Applies `p ↦ M p + t` with a rational matrix.
    pub fn transformed(&self, m: [[BigRational; 2]; 2], t: [BigRational; 2]) -> Result<Self> {
        Self::new(
            self.points
                .iter()
                .map(|(x, y)| {
                    (
                        &m[0][0] * x + &m[0][1] * y + &t[0],
                        &m[1][0] * x + &m[1][1] * y + &t[1],
                    )
                })
                .collect(),
        )
    }
}

/// Line-separable bipartitions, each stored as the sorted 0-based indices of
/// the side containing the first point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeparationFamily {
    pub partitions: BTreeSet<Vec<usize>>,
    /// Number of distinct directions spanned by pairs of points, `#D(A)`.
    pub direction_count: usize,
    pub point_count: usize,
}

impl SeparationFamily {
    pub fn len(&self) -> usize {
        self.partitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.partitions.is_empty()
    }

    /// `(N+1)(n+1)` for this set.
    pub fn sweep_bound(&self) -> u128 {
        (self.direction_count as u128 + 1) * (self.point_count as u128 + 1)
    }

    /// One line per partition: the 1-based indices of the first point's side.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for side in &self.partitions {
            let mut first = true;
            for &i in side {
                if !first {
                    out.push(' ');
                }
                first = false;
                let _ = write!(out, "{}", i + 1);
            }
            out.push('\n');
        }
        out
    }
}

/// `(n(n−1)/2 + 1)(n+1)`.
pub fn count_bound(n: u64) -> u128 {
    let n = n as u128;
    (n * n.saturating_sub(1) / 2 + 1) * (n + 1)
}

/// Canonical direction of `v` on the projective line: angle in `[0, π)`.
fn canonical_direction(v: IPoint) -> IPoint {
    if v.y.is_negative() || (v.y.is_zero() && v.x.is_negative()) {
        IPoint { x: -v.x, y: -v.y }
    } else {
        v
    }
}

/// Distinct pair directions, sorted by angle in `[0, π)`.
fn pair_directions(points: &[IPoint]) -> Vec<IPoint> {
    let mut dirs: Vec<IPoint> = Vec::new();
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            dirs.push(canonical_direction(points[j].sub(&points[i])));
        }
    }
    // For directions in [0, π), a precedes b exactly when b turns left of a.
    dirs.sort_by(|a, b| cross(b, a).cmp(&BigInt::zero()));
    dirs.dedup_by(|a, b| cross(a, b).is_zero());
    dirs
}

/// One direction strictly inside every circular gap between consecutive
/// pair directions. The sum of two adjacent direction vectors (the mediant
/// of their slopes) lies strictly between them.
fn gap_directions(dirs: &[IPoint]) -> Vec<IPoint> {
    match dirs.len() {
        0 => vec![IPoint { x: BigInt::one(), y: BigInt::zero() }],
        1 => vec![IPoint { x: -dirs[0].y.clone(), y: dirs[0].x.clone() }],
        k => {
            let mut out: Vec<IPoint> = dirs
                .windows(2)
                .map(|w| IPoint { x: &w[0].x + &w[1].x, y: &w[0].y + &w[1].y })
                .collect();
            out.push(IPoint {
                x: &dirs[k - 1].x - &dirs[0].x,
                y: &dirs[k - 1].y - &dirs[0].y,
            });
            out
        }
    }
}

fn canonical_side(side: &[usize], n: usize) -> Vec<usize> {
    let mut side = side.to_vec();
    side.sort_unstable();
    if side.first() == Some(&0) {
        side
    } else {
        let mut complement = Vec::with_capacity(n - side.len());
        let mut k = 0;
        for i in 0..n {
            if k < side.len() && side[k] == i {
                k += 1;
            } else {
                complement.push(i);
            }
        }
        complement
    }
}

/// Rotating sweep: for one direction inside each gap of the pair directions,
/// order the points along the normal and emit the `n + 1` prefix splits.
pub fn enumerate_separations(set: &PointSet) -> SeparationFamily {
    let pts = &set.scaled;
    let n = pts.len();
    let dirs = pair_directions(pts);
    let mut partitions = BTreeSet::new();
    if n > 0 {
        for w in gap_directions(&dirs) {
            // The direction avoids every pair direction, so projections onto
            // the normal (-w.y, w.x) are pairwise distinct.
            let proj: Vec<BigInt> = pts.iter().map(|p| &w.x * &p.y - &w.y * &p.x).collect();
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| proj[a].cmp(&proj[b]));
            for r in 0..=n {
                partitions.insert(canonical_side(&order[..r], n));
            }
        }
    }
    SeparationFamily {
        partitions,
        direction_count: dirs.len(),
        point_count: n,
    }
}

/// Convex hull in counter-clockwise order without collinear vertices.
/// Degenerate inputs give one or two vertices.
fn convex_hull(points: &[&IPoint]) -> Vec<IPoint> {
    let mut pts: Vec<&IPoint> = points.to_vec();
    pts.sort_by(|a, b| a.x.cmp(&b.x).then_with(|| a.y.cmp(&b.y)));
    pts.dedup();
    if pts.len() <= 2 {
        return pts.into_iter().cloned().collect();
    }
    let mut hull: Vec<&IPoint> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &&IPoint>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for p in iter {
            while hull.len() >= start + 2
                && orient(hull[hull.len() - 2], hull[hull.len() - 1], p) != Ordering::Greater
            {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    if hull.len() == 2 && hull[0] == hull[1] {
        hull.pop();
    }
    hull.into_iter().cloned().collect()
}

fn on_segment(p: &IPoint, a: &IPoint, b: &IPoint) -> bool {
    orient(a, b, p) == Ordering::Equal
        && p.x >= a.x.clone().min(b.x.clone())
        && p.x <= a.x.clone().max(b.x.clone())
        && p.y >= a.y.clone().min(b.y.clone())
        && p.y <= a.y.clone().max(b.y.clone())
}

fn segments_intersect(a: &IPoint, b: &IPoint, c: &IPoint, d: &IPoint) -> bool {
    let o1 = orient(a, b, c);
    let o2 = orient(a, b, d);
    let o3 = orient(c, d, a);
    let o4 = orient(c, d, b);
    if o1 != o2 && o3 != o4 && o1 != Ordering::Equal && o2 != Ordering::Equal
        && o3 != Ordering::Equal && o4 != Ordering::Equal
    {
        return true;
    }
    on_segment(c, a, b) || on_segment(d, a, b) || on_segment(a, c, d) || on_segment(b, c, d)
}

fn in_hull(p: &IPoint, hull: &[IPoint]) -> bool {
    match hull.len() {
        0 => false,
        1 => *p == hull[0],
        2 => on_segment(p, &hull[0], &hull[1]),
        k => (0..k).all(|i| orient(&hull[i], &hull[(i + 1) % k], p) != Ordering::Less),
    }
}

fn edges(hull: &[IPoint]) -> Vec<(&IPoint, &IPoint)> {
    match hull.len() {
        0 | 1 => Vec::new(),
        2 => vec![(&hull[0], &hull[1])],
        k => (0..k).map(|i| (&hull[i], &hull[(i + 1) % k])).collect(),
    }
}

fn hulls_intersect(a: &[IPoint], b: &[IPoint]) -> bool {
    a.iter().any(|p| in_hull(p, b))
        || b.iter().any(|p| in_hull(p, a))
        || edges(a)
            .iter()
            .any(|(p, q)| edges(b).iter().any(|(r, s)| segments_intersect(p, q, r, s)))
}

/// Oracle: every subset whose hull is disjoint from the hull of its
/// complement. Limited to [`BRUTEFORCE_MAX_POINTS`] points.
pub fn separations_bruteforce(set: &PointSet) -> Result<SeparationFamily> {
    let n = set.len();
    if n > BRUTEFORCE_MAX_POINTS {
        return Err(Error::TooManyPoints {
            count: n,
            max: BRUTEFORCE_MAX_POINTS,
        });
    }
    let pts = &set.scaled;
    let mut partitions = BTreeSet::new();
    if n > 0 {
        // Subsets containing the first point: bit 0 always set.
        for rest in 0u32..(1 << (n - 1)) {
            let mask = (rest << 1) | 1;
            let (side, other): (Vec<usize>, Vec<usize>) =
                (0..n).partition(|&i| mask >> i & 1 == 1);
            let separable = other.is_empty() || {
                let ha = convex_hull(&side.iter().map(|&i| &pts[i]).collect::<Vec<_>>());
                let hb = convex_hull(&other.iter().map(|&i| &pts[i]).collect::<Vec<_>>());
                !hulls_intersect(&ha, &hb)
            };
            if separable {
                partitions.insert(side);
            }
        }
    }
    Ok(SeparationFamily {
        partitions,
        direction_count: pair_directions(pts).len(),
        point_count: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(points: &[(i64, i64)]) -> PointSet {
        PointSet::from_integers(points).unwrap()
    }

    #[test]
    fn single_and_pair() {
        let one = set(&[(3, 4)]);
        let fam = enumerate_separations(&one);
        assert_eq!(fam.len(), 1);
        assert_eq!(fam.partitions.iter().next().unwrap(), &vec![0]);
        assert_eq!(separations_bruteforce(&one).unwrap(), fam);

        let two = set(&[(0, 0), (1, 5)]);
        let fam = enumerate_separations(&two);
        assert_eq!(fam.len(), 2);
        assert_eq!(fam.direction_count, 1);
        assert_eq!(separations_bruteforce(&two).unwrap().partitions, fam.partitions);
    }

    #[test]
    fn triangle_and_collinear() {
        // Oracle expectations checked by hand over the 2^3 subsets.
        let tri = set(&[(0, 0), (4, 0), (1, 3)]);
        assert_eq!(separations_bruteforce(&tri).unwrap().len(), 4);
        assert_eq!(enumerate_separations(&tri).len(), 4);

        let line = set(&[(0, 0), (1, 1), (2, 2)]);
        let brute = separations_bruteforce(&line).unwrap();
        assert_eq!(brute.len(), 3);
        assert!(!brute.partitions.contains(&vec![0, 2]));
        assert_eq!(enumerate_separations(&line).partitions, brute.partitions);
    }

    #[test]
    fn square_excludes_diagonals() {
        let sq = set(&[(0, 0), (1, 0), (1, 1), (0, 1)]);
        let brute = separations_bruteforce(&sq).unwrap();
        // All, four singletons and two adjacent pairs containing a_1.
        assert_eq!(brute.len(), 1 + 4 + 2);
        assert!(!brute.partitions.contains(&vec![0, 2]));
        assert_eq!(enumerate_separations(&sq).partitions, brute.partitions);
    }

    #[test]
    fn count_bound_values() {
        assert_eq!(count_bound(3), 16);
        assert_eq!(count_bound(1), 2);
        assert_eq!(count_bound(5), 66);
    }

    #[test]
    fn duplicates_and_limits() {
        assert!(matches!(
            PointSet::from_integers(&[(1, 1), (2, 2), (1, 1)]),
            Err(Error::DuplicatePoints { first: 0, second: 2 })
        ));
        let many: Vec<(i64, i64)> = (0..17).map(|i| (i, i * i)).collect();
        assert!(matches!(
            separations_bruteforce(&set(&many)),
            Err(Error::TooManyPoints { count: 17, .. })
        ));
    }

    #[test]
    fn rational_csv() {
        let ps = PointSet::from_csv("x,y\n1/2,0\n0,1/3\n\n# note\n-1,2\n").unwrap();
        assert_eq!(ps.len(), 3);
        assert!(PointSet::from_csv("0.5,1\n").is_err());
        assert!(PointSet::from_csv("1,2\n3\n").is_err());
        assert_eq!(
            enumerate_separations(&ps).partitions,
            separations_bruteforce(&ps).unwrap().partitions
        );
    }

    #[test]
    fn text_output_uses_one_based_indices() {
        let fam = enumerate_separations(&set(&[(0, 0), (1, 0)]));
        assert_eq!(fam.to_text(), "1\n1 2\n");
    }

    #[test]
    fn hull_degenerate_cases() {
        let p = |x: i64, y: i64| IPoint { x: x.into(), y: y.into() };
        let a = [p(0, 0), p(2, 2)];
        let b = [p(1, 1)];
        assert!(hulls_intersect(&convex_hull(&a.iter().collect::<Vec<_>>()), &b));
        let c = [p(3, 3), p(4, 4)];
        let hc = convex_hull(&c.iter().collect::<Vec<_>>());
        let ha = convex_hull(&a.iter().collect::<Vec<_>>());
        assert!(!hulls_intersect(&ha, &hc));
        let cross_seg = [p(0, 2), p(2, 0)];
        let hx = convex_hull(&cross_seg.iter().collect::<Vec<_>>());
        assert!(hulls_intersect(&ha, &hx));
        let col = [p(0, 0), p(1, 1), p(2, 2), p(3, 3)];
        assert_eq!(convex_hull(&col.iter().collect::<Vec<_>>()).len(), 2);
    }
}
