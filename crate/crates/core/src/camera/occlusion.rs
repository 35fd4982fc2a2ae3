//! Line-of-sight tests against the heightmap and actor bodies.

use nalgebra::{Rotation2, Vector3};

use crate::world::{ActorBox, HeightMap};

/// True when the segment `from -> to` is blocked by terrain or by any of the
/// given actor bodies. Symmetric in its endpoints.
pub fn occlusion_test(from: &Vector3<f64>, to: &Vector3<f64>, heightmap: &HeightMap, blockers: &[ActorBox]) -> bool {
    terrain_blocks(from, to, heightmap) || blockers.iter().any(|b| segment_hits_box(from, to, b))
}

fn canonical<'a>(a: &'a Vector3<f64>, b: &'a Vector3<f64>) -> (&'a Vector3<f64>, &'a Vector3<f64>) {
    let ka = (a.x, a.y, a.z);
    let kb = (b.x, b.y, b.z);
    if ka.partial_cmp(&kb) == Some(std::cmp::Ordering::Greater) {
        (b, a)
    } else {
        (a, b)
    }
}

/// Grid walk (Amanatides-Woo) over every cell the segment's ground track
/// crosses; blocked when the segment dips below a cell's elevation anywhere
/// inside that cell. Indices outside the grid are clamped to the border.
pub fn terrain_blocks(from: &Vector3<f64>, to: &Vector3<f64>, heightmap: &HeightMap) -> bool {
    // walk in a fixed endpoint order so blocked(a, b) == blocked(b, a) bit for bit
    let (a, b) = canonical(from, to);
    let ga = heightmap.to_grid(a.xy());
    let gb = heightmap.to_grid(b.xy());
    let d = gb - ga;
    let z_at = |s: f64| a.z + s * (b.z - a.z);

    let mut cx = ga.x.floor() as i64;
    let mut cy = ga.y.floor() as i64;
    let axis = |origin: f64, delta: f64, cell: i64| -> (i64, f64, f64) {
        if delta > 0.0 {
            (1, ((cell + 1) as f64 - origin) / delta, 1.0 / delta)
        } else if delta < 0.0 {
            (-1, (cell as f64 - origin) / delta, -1.0 / delta)
        } else {
            (0, f64::INFINITY, f64::INFINITY)
        }
    };
    let (step_x, mut next_x, delta_x) = axis(ga.x, d.x, cx);
    let (step_y, mut next_y, delta_y) = axis(ga.y, d.y, cy);

    let mut s0 = 0.0;
    loop {
        let s1 = next_x.min(next_y).min(1.0);
        let z_low = z_at(s0).min(z_at(s1));
        if z_low < heightmap.elevation_clamped(cx, cy) {
            return true;
        }
        if s1 >= 1.0 {
            return false;
        }
        // crossing exactly through a corner steps both axes at once
        if next_x <= next_y {
            cx += step_x;
            next_x += delta_x;
        }
        if next_y <= s1 {
            cy += step_y;
            next_y += delta_y;
        }
        s0 = s1;
    }
}

/// Segment against the actor's yaw-aligned box `[-w/2, w/2] x [-d/2, d/2] x [0, h]`.
pub fn segment_hits_box(from: &Vector3<f64>, to: &Vector3<f64>, body: &ActorBox) -> bool {
    let (a, b) = canonical(from, to);
    let inv = Rotation2::new(-body.yaw);
    let la = inv * (a.xy() - body.center);
    let lb = inv * (b.xy() - body.center);
    let p = [la.x, la.y, a.z];
    let dir = [lb.x - la.x, lb.y - la.y, b.z - a.z];
    let lo = [-body.half_extents.x, -body.half_extents.y, 0.0];
    let hi = [body.half_extents.x, body.half_extents.y, body.body_height];

    let (mut enter, mut exit) = (0.0_f64, 1.0_f64);
    for k in 0..3 {
        if dir[k] == 0.0 {
            if p[k] < lo[k] || p[k] > hi[k] {
                return false;
            }
            continue;
        }
        let t1 = (lo[k] - p[k]) / dir[k];
        let t2 = (hi[k] - p[k]) / dir[k];
        enter = enter.max(t1.min(t2));
        exit = exit.min(t1.max(t2));
        if enter > exit {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn map_with(cells: &[(usize, usize, f64)], n: usize) -> HeightMap {
        let mut e = vec![0.0; n * n];
        for &(x, y, h) in cells {
            e[y * n + x] = h;
        }
        HeightMap::new(n, n, 1.0, e, [0.0, 0.0]).unwrap()
    }

    /// Dense sampling along the segment, `per_cell` samples per unit of ground
    /// track (at least `per_cell` in total).
    fn sampled_blocked(a: &Vector3<f64>, b: &Vector3<f64>, hm: &HeightMap, per_cell: usize) -> bool {
        let ga = hm.to_grid(a.xy());
        let gb = hm.to_grid(b.xy());
        let span = (gb - ga).abs().max().ceil().max(1.0) as usize;
        let n = span * per_cell;
        (0..=n).any(|i| {
            let s = i as f64 / n as f64;
            let p = a + (b - a) * s;
            let g = hm.to_grid(p.xy());
            p.z < hm.elevation_clamped(g.x.floor() as i64, g.y.floor() as i64)
        })
    }

    #[test]
    fn flat_world_is_clear() {
        let hm = map_with(&[], 10);
        let a = Vector3::new(0.5, 0.5, 5.0);
        let b = Vector3::new(9.5, 7.5, 0.5);
        assert!(!occlusion_test(&a, &b, &hm, &[]));
    }

    #[test]
    fn wall_on_segment_blocks() {
        let hm = map_with(&[(5, 2, 20.0)], 10);
        let a = Vector3::new(1.5, 2.5, 5.0);
        let b = Vector3::new(8.5, 2.5, 5.0);
        assert!(occlusion_test(&a, &b, &hm, &[]));
        assert!(occlusion_test(&b, &a, &hm, &[]));
        // a lower wall the segment passes over
        let low = map_with(&[(5, 2, 4.0)], 10);
        assert!(!occlusion_test(&a, &b, &low, &[]));
    }

    #[test]
    fn corner_crossing_ignores_touching_cells() {
        // diagonal through cell corners: walls on the off-diagonal cells only
        let hm = map_with(&[(1, 0, 50.0), (0, 1, 50.0)], 4);
        let a = Vector3::new(0.5, 0.5, 1.0);
        let b = Vector3::new(3.5, 3.5, 1.0);
        assert!(!terrain_blocks(&a, &b, &hm));
    }

    #[test]
    fn vertical_segment_in_one_cell() {
        let hm = map_with(&[(2, 2, 3.0)], 5);
        let a = Vector3::new(2.5, 2.5, 10.0);
        assert!(terrain_blocks(&a, &Vector3::new(2.5, 2.5, 1.0), &hm));
        assert!(!terrain_blocks(&a, &Vector3::new(2.5, 2.5, 4.0), &hm));
    }

    #[test]
    fn actor_box_blocks() {
        let hm = map_with(&[], 20);
        let body = ActorBox {
            center: Vector2::new(10.0, 10.0),
            yaw: 0.6,
            half_extents: Vector2::new(0.5, 0.3),
            body_height: 1.8,
        };
        let a = Vector3::new(2.0, 10.0, 1.0);
        let b = Vector3::new(18.0, 10.0, 1.0);
        assert!(occlusion_test(&a, &b, &hm, &[body]));
        assert!(occlusion_test(&b, &a, &hm, &[body]));
        // passes above the head
        let over = Vector3::new(18.0, 10.0, 2.5);
        assert!(!segment_hits_box(&Vector3::new(2.0, 10.0, 2.5), &over, &body));
        // passes beside
        assert!(!segment_hits_box(
            &Vector3::new(2.0, 12.0, 1.0),
            &Vector3::new(18.0, 12.0, 1.0),
            &body
        ));
    }

    #[test]
    fn dda_matches_dense_sampling() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 12;
        let mut disagreements = 0;
        for _ in 0..2000 {
            let walls: Vec<_> = (0..10)
                .map(|_| (rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0.0..8.0)))
                .collect();
            let hm = map_with(&walls, n);
            let mut pt = || {
                Vector3::new(
                    rng.gen_range(0.0..n as f64),
                    rng.gen_range(0.0..n as f64),
                    rng.gen_range(0.0..8.0),
                )
            };
            let (a, b) = (pt(), pt());
            let exact = terrain_blocks(&a, &b, &hm);
            let sampled = sampled_blocked(&a, &b, &hm, 100);
            assert_eq!(exact, terrain_blocks(&b, &a, &hm), "asymmetric");
            if sampled {
                assert!(exact, "sampling found a block the grid walk missed");
            } else if exact {
                // only a graze thinner than the sampling pitch may differ
                assert!(
                    sampled_blocked(&a, &b, &hm, 20_000),
                    "grid walk reported a phantom block"
                );
                disagreements += 1;
            }
        }
        assert!(disagreements < 20, "{disagreements} grazing disagreements");
    }
}
