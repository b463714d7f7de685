//! Cell list plus Verlet list against the O(N²) search, and how often a
//! list with a given skin has to be rebuilt while spheres drift.
//!
//! ```text
//! cargo run --release --example neighbor_search
//! ```

use std::time::Instant;

use msdem::neighbor::{brute_force_pairs, build_cell_list, build_verlet, needs_rebuild, GlobalSphere};
use msdem::Vec3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> msdem::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 4000;
    let side = 30.0;
    let spheres: Vec<GlobalSphere> = (0..n)
        .map(|g| GlobalSphere {
            gid: g,
            particle: g,
            local: 0,
            center: Vec3::new(rng.gen(), rng.gen(), rng.gen()) * side,
            radius: rng.gen_range(0.3..0.5),
        })
        .collect();

    let t = Instant::now();
    let grid = build_cell_list(&spheres, 2.0)?;
    let list = build_verlet(&grid, &spheres, 0.1, 0.0)?;
    let hybrid = t.elapsed();
    let t = Instant::now();
    let brute = brute_force_pairs(&spheres, 0.1, 0.0);
    let direct = t.elapsed();
    println!("{n} spheres in {} cells: {} pairs", grid.occupied(), list.pairs.len());
    println!("hybrid {hybrid:?}, brute force {direct:?}, identical: {}", list.pairs == brute);

    let velocities: Vec<Vec3> =
        (0..n).map(|_| Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    let dt = 1e-3;
    println!("skin,rebuilds_per_1000_steps");
    for skin in [0.02, 0.05, 0.1, 0.2] {
        let mut moving = spheres.clone();
        let mut list = build_verlet(&build_cell_list(&moving, 2.0)?, &moving, skin, 0.0)?;
        let mut rebuilds = 0;
        for _ in 0..1000 {
            for (s, v) in moving.iter_mut().zip(&velocities) {
                s.center += v * dt;
            }
            let centers: Vec<Vec3> = moving.iter().map(|s| s.center).collect();
            if needs_rebuild(&centers, &list.reference, skin) {
                list = build_verlet(&build_cell_list(&moving, 2.0)?, &moving, skin, 0.0)?;
                rebuilds += 1;
            }
        }
        println!("{skin},{rebuilds}");
    }
    Ok(())
}
