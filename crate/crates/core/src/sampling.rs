//! Deterministic low-discrepancy sample points.

use serde::{Deserialize, Serialize};

use crate::chart::{ChartMetric, End, Interval, Point};
use crate::error::{Error, Result};

const PRIMES: [u32; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// How many points to draw and where to cut infinite coordinate ranges.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplePlan {
    pub interior: usize,
    pub boundary: usize,
    /// Infinite ends of a coordinate range are replaced by `±far`.
    pub far: f64,
}

impl Default for SamplePlan {
    fn default() -> Self {
        SamplePlan { interior: 200, boundary: 16, far: 10.0 }
    }
}

/// Radical inverse of `index` in `base`; lies in (0, 1) for `index ≥ 1`.
pub fn radical_inverse(mut index: u64, base: u32) -> f64 {
    let b = base as f64;
    let mut inv = 1.0 / b;
    let mut out = 0.0;
    while index > 0 {
        out += (index % base as u64) as f64 * inv;
        index /= base as u64;
        inv /= b;
    }
    out
}

/// The `index`-th Halton point in `[0,1]^dim`, `index ≥ 1`.
pub fn halton(index: u64, dim: usize) -> Vec<f64> {
    assert!(dim <= PRIMES.len(), "Halton sequence supports up to {} dimensions", PRIMES.len());
    PRIMES[..dim].iter().map(|&p| radical_inverse(index, p)).collect()
}

fn place(iv: Interval, u: f64) -> f64 {
    iv.lo + (iv.hi - iv.lo) * u
}

fn check_far(plan: &SamplePlan) -> Result<()> {
    if !(plan.far > 0.0 && plan.far.is_finite()) {
        return Err(Error::InvalidParameter("sample cutoff `far` must be positive".into()));
    }
    Ok(())
}

/// Points strictly inside the (truncated) coordinate box.
pub fn interior_points(metric: &ChartMetric, plan: &SamplePlan) -> Result<Vec<Point>> {
    check_far(plan)?;
    let boxes: Vec<Interval> = metric.domain().iter().map(|iv| iv.truncated(plan.far)).collect();
    Ok((1..=plan.interior as u64)
        .map(|k| {
            let u = halton(k, boxes.len());
            Point::new(boxes.iter().zip(&u).map(|(iv, &x)| place(*iv, x)).collect::<Vec<_>>())
        })
        .collect())
}

/// Points on the designated boundary face.
pub fn face_points(metric: &ChartMetric, plan: &SamplePlan) -> Result<Vec<Point>> {
    check_far(plan)?;
    let face = metric.face().ok_or(Error::NoBoundaryFace)?;
    let frozen = metric.face_value()?;
    let boxes: Vec<Interval> = metric.domain().iter().map(|iv| iv.truncated(plan.far)).collect();
    let free = boxes.len() - 1;
    Ok((1..=plan.boundary as u64)
        .map(|k| {
            let mut u = halton(k, free).into_iter();
            let coords: Vec<f64> = boxes
                .iter()
                .enumerate()
                .map(|(i, iv)| if i == face.coord { frozen } else { place(*iv, u.next().unwrap_or(0.5)) })
                .collect();
            Point::new(coords)
        })
        .collect())
}

/// Interior points of a one-dimensional range, for radial engines.
pub fn radial_points(domain: Interval, count: usize, far: f64) -> Vec<f64> {
    let iv = domain.truncated(far);
    (1..=count as u64).map(|k| place(iv, radical_inverse(k, 2))).collect()
}

/// Points along the coordinate line normal to the face, through the middle
/// of the other coordinate ranges, from the face inward.
pub fn normal_line(metric: &ChartMetric, count: usize, far: f64) -> Result<Vec<Point>> {
    let face = metric.face().ok_or(Error::NoBoundaryFace)?;
    let boxes: Vec<Interval> = metric.domain().iter().map(|iv| iv.truncated(far)).collect();
    let iv = boxes[face.coord];
    let count = count.max(2);
    Ok((0..count)
        .map(|k| {
            let u = k as f64 / (count - 1) as f64;
            let s = match face.end {
                End::Lower => place(iv, u),
                End::Upper => place(iv, 1.0 - u),
            };
            Point::new(
                boxes
                    .iter()
                    .enumerate()
                    .map(|(i, b)| if i == face.coord { s } else { 0.5 * (b.lo + b.hi) })
                    .collect::<Vec<_>>(),
            )
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radical_inverse_base_two() {
        let v: Vec<f64> = (1..=4).map(|k| radical_inverse(k, 2)).collect();
        assert_eq!(v, [0.5, 0.25, 0.75, 0.125]);
    }

    #[test]
    fn interior_points_avoid_the_box_boundary() {
        let g = ChartMetric::euclidean(
            vec!["x".into(), "y".into()],
            vec![Interval::new(0.0, 1.0), Interval::new(2.0, f64::INFINITY)],
        )
        .unwrap();
        let pts = interior_points(&g, &SamplePlan::default()).unwrap();
        assert_eq!(pts.len(), 200);
        for p in &pts {
            assert!(p.0[0] > 0.0 && p.0[0] < 1.0);
            assert!(p.0[1] > 2.0 && p.0[1] < 10.0);
        }
        assert_eq!(pts, interior_points(&g, &SamplePlan::default()).unwrap());
    }
}
