use super::Trajectory;
use crate::geometry::Vec2;
use crate::{Error, Result};

/// Linear interpolation at `target_len` stations evenly spaced in arc length.
/// The first and last input points are reproduced exactly.
pub fn resample(points: &[Vec2], target_len: usize) -> Result<Trajectory> {
    if points.len() < 2 {
        return Err(Error::Precondition(format!(
            "resampling needs at least 2 points, got {}",
            points.len()
        )));
    }
    if target_len < 2 {
        return Err(Error::Precondition(format!("target length must be >= 2, got {target_len}")));
    }
    let mut cumulative = Vec::with_capacity(points.len());
    let mut acc = 0.0;
    cumulative.push(0.0);
    for w in points.windows(2) {
        acc += w[0].distance(w[1]);
        cumulative.push(acc);
    }
    let total = acc;
    if !(total > 1e-12) {
        return Err(Error::Precondition("cannot resample: all points coincide".into()));
    }
    let last = points.len() - 1;
    let mut out = Vec::with_capacity(target_len);
    let mut seg = 0;
    for k in 0..target_len {
        if k == 0 {
            out.push(points[0]);
            continue;
        }
        if k == target_len - 1 {
            out.push(points[last]);
            continue;
        }
        let s = total * k as f64 / (target_len - 1) as f64;
        while seg + 1 < last && cumulative[seg + 1] < s {
            seg += 1;
        }
        let len = cumulative[seg + 1] - cumulative[seg];
        let t = if len > 0.0 { (s - cumulative[seg]) / len } else { 0.0 };
        out.push(points[seg].lerp(points[seg + 1], t));
    }
    Trajectory::with_len(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn arc_length(p: &[Vec2]) -> f64 {
        p.windows(2).map(|w| w[0].distance(w[1])).sum()
    }

    #[test]
    fn segment_evenly_spaced() {
        let r = resample(&[Vec2::new(0.0, 0.0), Vec2::new(29.0, 0.0)], 30).unwrap();
        for (k, p) in r.waypoints().iter().enumerate() {
            assert!((p.x - k as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn own_length_is_identity_for_even_spacing() {
        let pts: Vec<Vec2> = (0..30).map(|k| Vec2::new(0.5 * k as f64, -0.25 * k as f64)).collect();
        let r = resample(&pts, 30).unwrap();
        for (a, b) in r.waypoints().iter().zip(&pts) {
            assert!(a.distance(*b) < 1e-9);
        }
    }

    /// Arc-length coordinate of `q` along `path`, scanning segments forward from `from_seg`.
    fn station_on(path: &[Vec2], q: Vec2, from_seg: usize) -> (f64, usize) {
        let mut acc: f64 = path[..=from_seg].windows(2).map(|w| w[0].distance(w[1])).sum();
        for i in from_seg..path.len() - 1 {
            let (a, b) = (path[i], path[i + 1]);
            let len = a.distance(b);
            let t = ((q - a).dot(b - a) / (len * len)).clamp(0.0, 1.0);
            if (a + (b - a) * t).distance(q) < 1e-9 {
                return (acc + t * len, i);
            }
            acc += len;
        }
        panic!("{q:?} is not on the input path");
    }

    #[test]
    fn upsampling_follows_arc_length_parameterization() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let mut p = Vec2::ZERO;
            let mut h = 0.0f64;
            let pts: Vec<Vec2> = (0..15)
                .map(|_| {
                    h += rng.gen_range(-0.5..0.5);
                    p += Vec2::new(h.cos(), h.sin()) * rng.gen_range(0.5..2.0);
                    p
                })
                .collect();
            let total = arc_length(&pts);
            let r = resample(&pts, 30).unwrap();
            assert_eq!(r.len(), 30);
            assert_eq!(r.waypoints()[0], pts[0]);
            assert_eq!(r.endpoint(), pts[14]);
            let mut seg = 0;
            for (k, &q) in r.waypoints().iter().enumerate() {
                let (station, s) = station_on(&pts, q, seg);
                seg = s;
                assert!((station - total * k as f64 / 29.0).abs() < 1e-6);
            }
            // Chords cut corners, never lengthen the path.
            assert!(arc_length(r.waypoints()) <= total + 1e-9);
        }
    }

    #[test]
    fn degenerate_input_rejected() {
        assert!(resample(&[Vec2::new(1.0, 1.0); 4], 30).is_err());
        assert!(resample(&[Vec2::new(1.0, 1.0)], 30).is_err());
    }
}
