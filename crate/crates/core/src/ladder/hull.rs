use serde::{Deserialize, Serialize};

use super::{LadderError, RQPoint};

/// Upper-left concave frontier of a shot's encodes.
///
/// Points are sorted by strictly increasing bits and quality, and the
/// marginal quality per bit strictly decreases along the curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexHullCurve {
    points: Vec<RQPoint>,
}

impl ConvexHullCurve {
    pub fn points(&self) -> &[RQPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn first(&self) -> &RQPoint {
        &self.points[0]
    }

    pub fn last(&self) -> &RQPoint {
        &self.points[self.points.len() - 1]
    }

    /// Quality reachable with `bits` on the piecewise-linear frontier, or
    /// `None` below the cheapest point.
    pub fn frontier_quality(&self, bits: f64) -> Option<f64> {
        let first = self.first();
        if bits < first.bits as f64 {
            return None;
        }
        for pair in self.points.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            if bits <= b.bits as f64 {
                let span = (b.bits - a.bits) as f64;
                let frac = (bits - a.bits as f64) / span;
                return Some(a.quality + frac * (b.quality - a.quality));
            }
        }
        Some(self.last().quality)
    }
}

/// (b - a) x (c - a) in the (bits, quality) plane.
fn cross(a: &RQPoint, b: &RQPoint, c: &RQPoint) -> f64 {
    let (abx, aby) = ((b.bits as f64) - (a.bits as f64), b.quality - a.quality);
    let (acx, acy) = ((c.bits as f64) - (a.bits as f64), c.quality - a.quality);
    abx * acy - aby * acx
}

pub fn build_convex_hull(points: &[RQPoint]) -> Result<ConvexHullCurve, LadderError> {
    if points.is_empty() {
        return Err(LadderError::NoEncodePoints);
    }
    points.iter().try_for_each(RQPoint::validate)?;

    let mut sorted = points.to_vec();
    // Best quality first within equal bits; remaining ties broken on the
    // encode parameters so the output does not depend on input order.
    sorted.sort_by(|a, b| {
        a.bits
            .cmp(&b.bits)
            .then(b.quality.total_cmp(&a.quality))
            .then(a.resolution_height.cmp(&b.resolution_height))
            .then(a.qp.cmp(&b.qp))
    });
    sorted.dedup_by(|later, earlier| later.bits == earlier.bits);

    // Upper hull, dropping collinear middles so slopes strictly decrease.
    let mut hull: Vec<RQPoint> = Vec::with_capacity(sorted.len());
    for p in sorted {
        while hull.len() >= 2 && cross(&hull[hull.len() - 2], &hull[hull.len() - 1], &p) >= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }

    // Everything after the best quality is dominated.
    let best = hull
        .iter()
        .enumerate()
        .fold(0, |best, (i, p)| if p.quality > hull[best].quality { i } else { best });
    hull.truncate(best + 1);

    Ok(ConvexHullCurve { points: hull })
}
