//! Excision, intensity-weighted DBSCAN and centroid estimation on the
//! aggregated Cartesian map.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::fusion::CartesianMap;
use crate::geometry::Point2;
use crate::scenario::{DetectionConfig, DistanceUnit, GridConfig};

/// Relative slack on the neighborhood radius so that pixels lying exactly on
/// it are not lost to rounding.
const EPS_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExcisionSpec {
    pub gamma_d: f64,
    pub gamma: f64,
}

/// Zeroes pixels below `gamma_d` times the peak.
pub fn excise(map: &CartesianMap, gamma_d: f64) -> Result<(CartesianMap, ExcisionSpec)> {
    if !(gamma_d > 0.0 && gamma_d < 1.0) {
        return Err(Error::Dimension(format!("gamma_d = {gamma_d} outside (0, 1)")));
    }
    let peak = map.max();
    if !(peak > 0.0) {
        return Err(Error::NoSignal);
    }
    let gamma = gamma_d * peak;
    let values = map
        .values
        .iter()
        .map(|&v| if v >= gamma { v } else { 0.0 })
        .collect();
    Ok((
        CartesianMap {
            grid: map.grid.clone(),
            values,
        },
        ExcisionSpec { gamma_d, gamma },
    ))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterParams {
    /// Neighborhood radius in meters.
    pub eps_m: f64,
    /// Minimum summed weight around a core pixel.
    pub min_weight: u64,
    /// Value corresponding to unit weight.
    pub weight_scale: f64,
}

impl ClusterParams {
    pub fn from_config(cfg: &DetectionConfig, grid: &GridConfig, gamma: f64) -> Self {
        let eps_m = match cfg.xi_d_unit {
            DistanceUnit::Meters => cfg.xi_d,
            DistanceUnit::Pixels => cfg.xi_d * grid.dx_m.min(grid.dy_m),
        };
        ClusterParams {
            eps_m,
            min_weight: cfg.n_d.max(1),
            weight_scale: gamma,
        }
    }

    pub fn weight(&self, value: f64) -> u64 {
        if value > 0.0 {
            (value / self.weight_scale).ceil().max(1.0) as u64
        } else {
            0
        }
    }
}

/// Pixel offsets within the neighborhood radius, the center included.
pub fn neighbor_offsets(grid: &GridConfig, eps_m: f64) -> Vec<(isize, isize)> {
    let limit = eps_m * (1.0 + EPS_SLACK);
    let rx = (limit / grid.dx_m).floor() as isize;
    let ry = (limit / grid.dy_m).floor() as isize;
    let mut out = Vec::new();
    for dy in -ry..=ry {
        for dx in -rx..=rx {
            let d = (dx as f64 * grid.dx_m).hypot(dy as f64 * grid.dy_m);
            if d <= limit {
                out.push((dx, dy));
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    /// Row-major pixel indices in discovery order.
    pub pixels: Vec<usize>,
}

/// Weighted DBSCAN over the nonzero pixels, seeded in row-major order.
pub fn cluster(map: &CartesianMap, params: &ClusterParams) -> Vec<Cluster> {
    let grid = &map.grid;
    let (nx, ny) = (grid.nx as isize, grid.ny as isize);
    let offsets = neighbor_offsets(grid, params.eps_m);
    let weights: Vec<u64> = map.values.iter().map(|&v| params.weight(v)).collect();
    let neighbors = |idx: usize| {
        let (x, y) = ((idx % grid.nx) as isize, (idx / grid.nx) as isize);
        offsets.iter().filter_map(move |&(dx, dy)| {
            let (qx, qy) = (x + dx, y + dy);
            (qx >= 0 && qx < nx && qy >= 0 && qy < ny).then(|| (qy * nx + qx) as usize)
        })
    };
    let core: Vec<bool> = (0..map.values.len())
        .map(|i| {
            weights[i] > 0
                && neighbors(i).map(|q| weights[q]).sum::<u64>() >= params.min_weight
        })
        .collect();

    const UNSEEN: usize = usize::MAX;
    let mut label = vec![UNSEEN; map.values.len()];
    let mut clusters = Vec::new();
    let mut queue = VecDeque::new();
    for seed in 0..map.values.len() {
        if !core[seed] || label[seed] != UNSEEN {
            continue;
        }
        let id = clusters.len();
        let mut members = vec![seed];
        label[seed] = id;
        queue.push_back(seed);
        while let Some(p) = queue.pop_front() {
            for q in neighbors(p) {
                if weights[q] == 0 || label[q] != UNSEEN {
                    continue;
                }
                label[q] = id;
                members.push(q);
                if core[q] {
                    queue.push_back(q);
                }
            }
        }
        clusters.push(Cluster { pixels: members });
    }
    clusters
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub position_m: Point2,
    /// Sum of map values over the cluster.
    pub mass: f64,
    pub pixels: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DetectionSet {
    pub detections: Vec<Detection>,
}

impl DetectionSet {
    pub fn positions(&self) -> Vec<Point2> {
        self.detections.iter().map(|d| d.position_m).collect()
    }

    pub fn len(&self) -> usize {
        self.detections.len()
    }

    pub fn is_empty(&self) -> bool {
        self.detections.is_empty()
    }
}

/// Value-weighted centroid of each cluster.
pub fn estimate_positions(clusters: &[Cluster], map: &CartesianMap) -> DetectionSet {
    let grid = &map.grid;
    let detections = clusters
        .iter()
        .map(|c| {
            let (mut sx, mut sy, mut mass) = (0.0, 0.0, 0.0);
            for &i in &c.pixels {
                let v = map.values[i];
                let p = grid.pixel_center(i % grid.nx, i / grid.nx);
                sx += v * p.x;
                sy += v * p.y;
                mass += v;
            }
            assert!(mass > 0.0, "cluster without mass");
            Detection {
                position_m: Point2::new(sx / mass, sy / mass),
                mass,
                pixels: c.pixels.len(),
            }
        })
        .collect();
    DetectionSet { detections }
}

/// Excise, cluster and estimate with the configured parameters. An all-zero
/// map yields no detections.
pub fn detect(map: &CartesianMap, cfg: &DetectionConfig) -> Result<DetectionSet> {
    let (excised, spec) = match excise(map, cfg.gamma_d) {
        Ok(v) => v,
        Err(Error::NoSignal) => return Ok(DetectionSet::default()),
        Err(e) => return Err(e),
    };
    let params = ClusterParams::from_config(cfg, &map.grid, spec.gamma);
    let clusters = cluster(&excised, &params);
    Ok(estimate_positions(&clusters, &excised))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid(n: usize, d: f64) -> GridConfig {
        GridConfig {
            nx: n,
            ny: n,
            dx_m: d,
            dy_m: d,
            origin_m: Point2::ORIGIN,
        }
    }

    fn map_from(g: &GridConfig, mut f: impl FnMut(usize, usize) -> f64) -> CartesianMap {
        let mut values = vec![0.0; g.len()];
        for iy in 0..g.ny {
            for ix in 0..g.nx {
                values[iy * g.nx + ix] = f(ix, iy);
            }
        }
        CartesianMap {
            grid: g.clone(),
            values,
        }
    }

    #[test]
    fn excision_examples() {
        let g = grid(4, 1.0);
        let m = map_from(&g, |x, y| (x + y) as f64);
        let (e, spec) = excise(&m, 0.5).unwrap();
        assert_eq!(spec.gamma, 3.0);
        assert!(e.values.iter().all(|&v| v == 0.0 || v >= 3.0));
        let uniform = map_from(&g, |_, _| 2.0);
        assert_eq!(excise(&uniform, 0.05).unwrap().0, uniform);
        let single = map_from(&g, |x, y| if (x, y) == (1, 2) { 5.0 } else { 0.0 });
        assert_eq!(excise(&single, 0.05).unwrap().0, single);
        assert!(matches!(excise(&map_from(&g, |_, _| 0.0), 0.05), Err(Error::NoSignal)));
    }

    #[test]
    fn empty_map_has_no_clusters() {
        let g = grid(5, 1.0);
        let p = ClusterParams {
            eps_m: 1.5,
            min_weight: 1,
            weight_scale: 1.0,
        };
        assert!(cluster(&map_from(&g, |_, _| 0.0), &p).is_empty());
    }

    #[test]
    fn dense_blob_is_one_cluster() {
        let g = grid(20, 0.5);
        let m = map_from(&g, |x, y| {
            if (8..12).contains(&x) && (8..12).contains(&y) {
                1.0
            } else {
                0.0
            }
        });
        let p = ClusterParams {
            eps_m: 1.0,
            min_weight: 5,
            weight_scale: 1.0,
        };
        let c = cluster(&m, &p);
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].pixels.len(), 16);
    }

    #[test]
    fn centroid_examples() {
        let g = GridConfig {
            nx: 2,
            ny: 1,
            dx_m: 1.0,
            dy_m: 1.0,
            origin_m: Point2::ORIGIN,
        };
        let m = CartesianMap {
            grid: g,
            values: vec![1.0, 3.0],
        };
        let d = estimate_positions(&[Cluster { pixels: vec![0, 1] }], &m);
        assert!((d.detections[0].position_m.x - 0.75).abs() < 1e-15);
        assert_eq!(d.detections[0].mass, 4.0);
        let d = estimate_positions(&[Cluster { pixels: vec![1] }], &m);
        assert_eq!(d.detections[0].position_m, Point2::new(1.0, 0.0));
    }

    #[test]
    fn symmetric_blob_centroid() {
        let g = grid(61, 0.1);
        let center = Point2::new(3.0, 2.7);
        let m = map_from(&g, |x, y| {
            let p = g.pixel_center(x, y);
            (-(p.distance(center).powi(2)) / 0.5).exp()
        });
        let cfg = DetectionConfig {
            far: 1e-2,
            gamma_res_m2: 5.0,
            gamma_d: 0.05,
            xi_d: 2.0,
            xi_d_unit: DistanceUnit::Meters,
            n_d: 50,
            p_0: 2,
            apply_masks: true,
        };
        let d = detect(&m, &cfg).unwrap();
        assert_eq!(d.len(), 1);
        assert!(d.detections[0].position_m.distance(center) <= 0.1);
    }

    /// Plain DBSCAN over explicitly replicated points, brute-force neighbors.
    fn duplicated_dbscan(map: &CartesianMap, p: &ClusterParams) -> Vec<Vec<usize>> {
        let g = &map.grid;
        let mut pts: Vec<(usize, Point2)> = Vec::new();
        for (i, &v) in map.values.iter().enumerate() {
            for _ in 0..p.weight(v) {
                pts.push((i, g.pixel_center(i % g.nx, i / g.nx)));
            }
        }
        let limit = p.eps_m * (1.0 + EPS_SLACK);
        let near = |a: usize| -> Vec<usize> {
            (0..pts.len())
                .filter(|&b| pts[a].1.distance(pts[b].1) <= limit)
                .collect()
        };
        let n = pts.len();
        let mut label = vec![usize::MAX; n];
        let mut visited = vec![false; n];
        let mut clusters: Vec<Vec<usize>> = Vec::new();
        for s in 0..n {
            if visited[s] {
                continue;
            }
            visited[s] = true;
            let nb = near(s);
            if (nb.len() as u64) < p.min_weight {
                continue;
            }
            let id = clusters.len();
            clusters.push(Vec::new());
            label[s] = id;
            let mut queue: VecDeque<usize> = nb.into_iter().collect();
            while let Some(q) = queue.pop_front() {
                if label[q] == usize::MAX {
                    label[q] = id;
                }
                if visited[q] {
                    continue;
                }
                visited[q] = true;
                let nq = near(q);
                if nq.len() as u64 >= p.min_weight {
                    queue.extend(nq);
                }
            }
        }
        for (k, &(pix, _)) in pts.iter().enumerate() {
            if label[k] != usize::MAX {
                clusters[label[k]].push(pix);
            }
        }
        clusters
            .into_iter()
            .map(|mut c| {
                c.sort_unstable();
                c.dedup();
                c
            })
            .filter(|c| !c.is_empty())
            .collect()
    }

    fn sorted(c: &[Cluster]) -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = c
            .iter()
            .map(|c| {
                let mut v = c.pixels.clone();
                v.sort_unstable();
                v
            })
            .collect();
        out.sort();
        out
    }

    #[test]
    fn weighted_equals_duplicated_dbscan() {
        let g = grid(30, 0.2);
        for seed in 0..6 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let blobs: Vec<(Point2, f64)> = (0..4)
                .map(|_| {
                    (
                        Point2::new(rng.gen_range(0.5..5.5), rng.gen_range(0.5..5.5)),
                        rng.gen_range(1.0..4.0),
                    )
                })
                .collect();
            let m = map_from(&g, |x, y| {
                let p = g.pixel_center(x, y);
                let v: f64 = blobs
                    .iter()
                    .map(|(c, a)| a * (-(p.distance(*c).powi(2)) / 0.15).exp())
                    .sum();
                if v > 0.3 { v } else { 0.0 }
            });
            let params = ClusterParams {
                eps_m: 0.45,
                min_weight: 12,
                weight_scale: 0.3,
            };
            let fast = cluster(&m, &params);
            let mut oracle = duplicated_dbscan(&m, &params);
            oracle.sort();
            let fast_sorted = sorted(&fast);
            // border pixels reachable from two clusters go to whichever is
            // expanded first; both implementations expand in row-major order
            assert_eq!(fast_sorted, oracle, "seed {seed}");
        }
    }

    #[test]
    fn pixel_units_scale_the_radius() {
        let g = grid(10, 0.1);
        let cfg = DetectionConfig {
            far: 1e-2,
            gamma_res_m2: 5.0,
            gamma_d: 0.05,
            xi_d: 2.0,
            xi_d_unit: DistanceUnit::Pixels,
            n_d: 1,
            p_0: 2,
            apply_masks: true,
        };
        let p = ClusterParams::from_config(&cfg, &g, 1.0);
        assert!((p.eps_m - 0.2).abs() < 1e-15);
        assert_eq!(neighbor_offsets(&g, p.eps_m).len(), 13);
    }

    proptest! {
        #[test]
        fn clustering_is_scale_invariant(seed in 0u64..500) {
            let g = grid(16, 0.25);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = map_from(&g, |_, _| if rng.gen::<f64>() < 0.4 { rng.gen_range(0.0..4.0) } else { 0.0 });
            if m.max() == 0.0 {
                return Ok(());
            }
            let run = |m: &CartesianMap| {
                let (e, spec) = excise(m, 0.05).unwrap();
                let p = ClusterParams { eps_m: 0.6, min_weight: 6, weight_scale: spec.gamma };
                let c = cluster(&e, &p);
                (c.clone(), estimate_positions(&c, &e))
            };
            let (ca, da) = run(&m);
            let (cb, db) = run(&m.scaled(2.0));
            prop_assert_eq!(&ca, &cb);
            for (a, b) in da.detections.iter().zip(&db.detections) {
                prop_assert!(a.position_m.distance(b.position_m) < 1e-12);
            }
            // estimates inside the cluster's bounding box
            for (c, d) in ca.iter().zip(&da.detections) {
                let xs: Vec<f64> = c.pixels.iter().map(|&i| g.pixel_center(i % g.nx, i / g.nx).x).collect();
                let ys: Vec<f64> = c.pixels.iter().map(|&i| g.pixel_center(i % g.nx, i / g.nx).y).collect();
                let (x0, x1) = (xs.iter().cloned().fold(f64::MAX, f64::min), xs.iter().cloned().fold(f64::MIN, f64::max));
                let (y0, y1) = (ys.iter().cloned().fold(f64::MAX, f64::min), ys.iter().cloned().fold(f64::MIN, f64::max));
                prop_assert!(d.position_m.x >= x0 - 1e-12 && d.position_m.x <= x1 + 1e-12);
                prop_assert!(d.position_m.y >= y0 - 1e-12 && d.position_m.y <= y1 + 1e-12);
            }
        }
    }
}
