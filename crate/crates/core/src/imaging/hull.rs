use super::{BinaryMask, Point};
use crate::error::{Error, Result};

#[inline]
fn cross(o: Point, a: Point, b: Point) -> i64 {
    let (ox, oy) = (o.x as i64, o.y as i64);
    (a.x as i64 - ox) * (b.y as i64 - oy) - (a.y as i64 - oy) * (b.x as i64 - ox)
}

/// Convex hull of the set pixels of `mask` (monotone chain).
///
/// Vertices come out counter-clockwise with respect to (x, y) axes, starting
/// at the smallest point by (x, then y). Collinear points are dropped.
pub fn convex_hull(mask: &BinaryMask) -> Result<Vec<Point>> {
    // Only the extreme set pixels of each row can be hull vertices.
    let mut pts = Vec::new();
    for y in 0..mask.height() {
        let row: Vec<usize> = (0..mask.width()).filter(|&x| mask.is_set(x, y)).collect();
        if let (Some(&first), Some(&last)) = (row.first(), row.last()) {
            pts.push(Point::new(first, y));
            if last != first {
                pts.push(Point::new(last, y));
            }
        }
    }
    if pts.is_empty() {
        return Err(Error::EmptyRegion("mask has no set pixels".into()));
    }
    Ok(hull_of_points(pts))
}

pub(crate) fn hull_of_points(mut pts: Vec<Point>) -> Vec<Point> {
    pts.sort_unstable_by_key(|p| (p.x, p.y));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }

    let mut lower: Vec<Point> = Vec::with_capacity(pts.len());
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Point> = Vec::with_capacity(pts.len());
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mask_of(w: usize, h: usize, pts: &[(usize, usize)]) -> BinaryMask {
        BinaryMask::from_fn(w, h, |x, y| pts.contains(&(x, y))).unwrap()
    }

    fn p(x: usize, y: usize) -> Point {
        Point::new(x, y)
    }

    #[test]
    fn square_drops_interior() {
        let m = mask_of(3, 3, &[(0, 0), (0, 2), (2, 0), (2, 2), (1, 1)]);
        assert_eq!(convex_hull(&m).unwrap(), vec![p(0, 0), p(2, 0), p(2, 2), p(0, 2)]);
    }

    #[test]
    fn collinear_segment() {
        let m = mask_of(3, 1, &[(0, 0), (1, 0), (2, 0)]);
        assert_eq!(convex_hull(&m).unwrap(), vec![p(0, 0), p(2, 0)]);
    }

    #[test]
    fn single_point() {
        let m = mask_of(5, 6, &[(3, 4)]);
        assert_eq!(convex_hull(&m).unwrap(), vec![p(3, 4)]);
    }

    #[test]
    fn empty_mask_is_error() {
        let m = BinaryMask::filled(4, 4, false).unwrap();
        assert!(matches!(convex_hull(&m), Err(Error::EmptyRegion(_))));
    }

    fn inside_or_on(hull: &[Point], q: Point) -> bool {
        match hull.len() {
            1 => hull[0] == q,
            2 => {
                cross(hull[0], hull[1], q) == 0
                    && q.x >= hull[0].x.min(hull[1].x)
                    && q.x <= hull[0].x.max(hull[1].x)
                    && q.y >= hull[0].y.min(hull[1].y)
                    && q.y <= hull[0].y.max(hull[1].y)
            }
            n => (0..n).all(|i| cross(hull[i], hull[(i + 1) % n], q) >= 0),
        }
    }

    fn brute_extreme_points(pts: &[Point]) -> Vec<Point> {
        // A point is a hull vertex iff it lies in no triangle of other points
        // and on no segment between two other points.
        let mut out = Vec::new();
        'outer: for (i, &q) in pts.iter().enumerate() {
            for (a, &pa) in pts.iter().enumerate() {
                for (b, &pb) in pts.iter().enumerate() {
                    if a == i || b == i || a == b {
                        continue;
                    }
                    if cross(pa, pb, q) == 0
                        && q.x >= pa.x.min(pb.x)
                        && q.x <= pa.x.max(pb.x)
                        && q.y >= pa.y.min(pb.y)
                        && q.y <= pa.y.max(pb.y)
                    {
                        continue 'outer;
                    }
                    for (c, &pc) in pts.iter().enumerate() {
                        if c == i || c == a || c == b || cross(pa, pb, pc) == 0 {
                            continue;
                        }
                        let s1 = cross(pa, pb, q);
                        let s2 = cross(pb, pc, q);
                        let s3 = cross(pc, pa, q);
                        if (s1 >= 0 && s2 >= 0 && s3 >= 0) || (s1 <= 0 && s2 <= 0 && s3 <= 0) {
                            continue 'outer;
                        }
                    }
                }
            }
            out.push(q);
        }
        out.sort();
        out
    }

    proptest! {
        #[test]
        fn hull_matches_brute_force(bits in proptest::collection::vec(proptest::bool::weighted(0.2), 6 * 6)) {
            prop_assume!(bits.iter().any(|&b| b));
            let m = BinaryMask::from_fn(6, 6, |x, y| bits[y * 6 + x]).unwrap();
            let hull = convex_hull(&m).unwrap();
            let all: Vec<Point> = (0..6).flat_map(|y| (0..6).map(move |x| p(x, y))).filter(|q| m.is_set(q.x, q.y)).collect();

            // convexity and orientation
            let n = hull.len();
            if n >= 3 {
                for i in 0..n {
                    prop_assert!(cross(hull[i], hull[(i + 1) % n], hull[(i + 2) % n]) > 0);
                }
            }
            for &q in &all {
                prop_assert!(inside_or_on(&hull, q));
            }
            // start vertex
            prop_assert_eq!(hull[0], *all.iter().min_by_key(|q| (q.x, q.y)).unwrap());
            // same vertex set as the oracle
            let mut sorted = hull.clone();
            sorted.sort();
            prop_assert_eq!(sorted, brute_extreme_points(&all));
        }
    }
}
