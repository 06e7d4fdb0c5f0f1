use super::optimizer::{sweep_points, HullShot, SweepPoint};
use super::LadderError;

/// Bit budgets whose selections are equally spaced in mean quality.
#[derive(Debug, Clone, PartialEq)]
pub struct Ladder {
    /// Total-bit budgets, strictly increasing.
    pub budgets: Vec<u64>,
    /// Mean quality achieved at each budget.
    pub qualities: Vec<f64>,
    /// Equally spaced quality targets the rungs were fitted to.
    pub targets: Vec<f64>,
    /// Set when every selection has the same quality, in which case the
    /// cheapest and the top budget coincide and a single rung is returned.
    pub flat: bool,
}

impl Ladder {
    /// Budgets expressed as average bitrates in Kbps over `content_duration`.
    pub fn bitrates_kbps(&self, content_duration: f64) -> Vec<f64> {
        self.budgets
            .iter()
            .map(|&b| b as f64 / content_duration / 1000.0)
            .collect()
    }
}

/// Builds `n_rungs` budgets between the cheapest selection and the selection
/// with every shot at its top hull point.
///
/// Targets are equally spaced in mean quality. Quality as a function of
/// budget is linearly interpolated on the sweep-point grid to invert each
/// target into a budget, and each rung is then placed on the sweep point
/// nearest to its target, keeping rungs distinct and ordered. Rung budgets
/// are therefore exactly achievable totals and their selections land within
/// half a sweep gap of the target.
pub fn build_bitrate_ladder(shots: &[HullShot], n_rungs: usize) -> Result<Ladder, LadderError> {
    if n_rungs < 2 {
        return Err(LadderError::TooFewRungs(n_rungs));
    }
    let sweep = sweep_points(shots)?;
    let lo = &sweep[0];
    let hi = &sweep[sweep.len() - 1];

    if sweep.len() == 1 {
        return Ok(Ladder {
            budgets: vec![lo.total_bits],
            qualities: vec![lo.mean_quality],
            targets: vec![lo.mean_quality],
            flat: true,
        });
    }
    if sweep.len() < n_rungs {
        return Err(LadderError::TooManyRungs {
            requested: n_rungs,
            available: sweep.len(),
        });
    }

    let (q_lo, q_hi) = (lo.mean_quality, hi.mean_quality);
    let step = (q_hi - q_lo) / (n_rungs - 1) as f64;
    let targets: Vec<f64> = (0..n_rungs)
        .map(|i| {
            if i == n_rungs - 1 {
                q_hi
            } else {
                q_lo + step * i as f64
            }
        })
        .collect();

    let mut picks = Vec::with_capacity(n_rungs);
    let mut next_free = 0usize;
    for (i, &target) in targets.iter().enumerate() {
        let budget = interpolate_budget(&sweep, target);
        // Leave room for the remaining rungs.
        let last_allowed = sweep.len() - (n_rungs - i);
        let idx = nearest_sweep_point(&sweep, target, budget).clamp(next_free, last_allowed);
        picks.push(idx);
        next_free = idx + 1;
    }

    Ok(Ladder {
        budgets: picks.iter().map(|&i| sweep[i].total_bits).collect(),
        qualities: picks.iter().map(|&i| sweep[i].mean_quality).collect(),
        targets,
        flat: false,
    })
}

/// Budget at which the piecewise-linear quality(budget) curve through the
/// sweep points reaches `target`.
fn interpolate_budget(sweep: &[SweepPoint], target: f64) -> f64 {
    let idx = sweep.partition_point(|p| p.mean_quality < target);
    if idx == 0 {
        return sweep[0].total_bits as f64;
    }
    if idx == sweep.len() {
        return sweep[sweep.len() - 1].total_bits as f64;
    }
    let (a, b) = (&sweep[idx - 1], &sweep[idx]);
    let frac = (target - a.mean_quality) / (b.mean_quality - a.mean_quality);
    a.total_bits as f64 + frac * (b.total_bits - a.total_bits) as f64
}

/// The sweep point bracketing `budget` whose quality is closest to `target`;
/// ties go to the cheaper point.
fn nearest_sweep_point(sweep: &[SweepPoint], target: f64, budget: f64) -> usize {
    let upper = sweep.partition_point(|p| (p.total_bits as f64) < budget);
    if upper == 0 {
        return 0;
    }
    if upper == sweep.len() {
        return sweep.len() - 1;
    }
    let lower = upper - 1;
    let d_lower = (target - sweep[lower].mean_quality).abs();
    let d_upper = (sweep[upper].mean_quality - target).abs();
    if d_upper < d_lower {
        upper
    } else {
        lower
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ladder::{build_convex_hull, RQPoint};
    use proptest::prelude::*;

    fn shot(id: u32, duration: f64, pts: &[(u64, f64)]) -> HullShot {
        let points: Vec<_> = pts.iter().map(|&(b, q)| RQPoint::new(720, 30, b, q)).collect();
        HullShot {
            shot_id: id,
            duration,
            hull: build_convex_hull(&points).unwrap(),
        }
    }

    #[test]
    fn vertices_already_equally_spaced() {
        let shots = [shot(0, 4.0, &[(100, 0.0), (200, 50.0), (400, 100.0)])];
        let l = build_bitrate_ladder(&shots, 3).unwrap();
        assert_eq!(l.budgets, vec![100, 200, 400]);
        assert_eq!(l.qualities, vec![0.0, 50.0, 100.0]);
        assert!(!l.flat);
    }

    #[test]
    fn two_rungs_are_end_points() {
        let shots = [
            shot(0, 2.0, &[(100, 10.0), (300, 40.0), (900, 70.0)]),
            shot(1, 3.0, &[(50, 20.0), (120, 35.0), (700, 90.0)]),
        ];
        let l = build_bitrate_ladder(&shots, 2).unwrap();
        assert_eq!(l.budgets, vec![150, 1600]);
    }

    #[test]
    fn too_few_rungs() {
        let shots = [shot(0, 1.0, &[(100, 0.0), (200, 50.0)])];
        assert_eq!(build_bitrate_ladder(&shots, 1), Err(LadderError::TooFewRungs(1)));
    }

    #[test]
    fn single_operating_point_is_flat() {
        let shots = [shot(0, 1.0, &[(100, 50.0), (200, 40.0)])];
        let l = build_bitrate_ladder(&shots, 4).unwrap();
        assert!(l.flat);
        assert_eq!(l.budgets, vec![100]);
    }

    #[test]
    fn more_rungs_than_operating_points() {
        let shots = [shot(0, 1.0, &[(100, 0.0), (200, 50.0)])];
        assert!(matches!(
            build_bitrate_ladder(&shots, 3),
            Err(LadderError::TooManyRungs { requested: 3, available: 2 })
        ));
    }

    /// Many shots with dense hulls: a fine sweep grid.
    fn dense_shots() -> impl Strategy<Value = Vec<HullShot>> {
        prop::collection::vec((1.0f64..3.0, 200.0f64..3000.0), 8..14).prop_map(|v| {
            v.into_iter()
                .enumerate()
                .map(|(i, (d, c))| {
                    let pts: Vec<(u64, f64)> = (1..=90)
                        .map(|k| {
                            let kbps = 60.0 * 1.05f64.powi(k);
                            let q = 100.0 * (1.0 - (-kbps / c).exp());
                            ((kbps * d * 1000.0) as u64, q)
                        })
                        .collect();
                    shot(i as u32, d, &pts)
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn rungs_equally_spaced_within_half_a_point(shots in dense_shots(), n in 3usize..8) {
            let l = build_bitrate_ladder(&shots, n).unwrap();
            prop_assert_eq!(l.budgets.len(), n);
            for w in l.budgets.windows(2) {
                prop_assert!(w[1] > w[0]);
            }
            for (q, t) in l.qualities.iter().zip(&l.targets) {
                prop_assert!((q - t).abs() <= 0.5, "quality {} target {}", q, t);
            }
        }
    }
}
