//! Uniform spatial hash over active agent positions.
//!
//! Buckets are keyed by (region, cell); the bucket cell edge equals the
//! interaction cutoff so a neighbor query scans at most the 3x3 block
//! around an agent. Candidates are returned in ascending id order, which
//! makes hashed force sums bit-identical to brute-force sums.

use std::collections::HashMap;

use crate::dynamics::Agent;
use crate::vec2::Vec2;

#[derive(Debug, Default)]
pub struct SpatialHash {
    cell: f64,
    buckets: HashMap<(usize, i32, i32), Vec<u32>>,
}

impl SpatialHash {
    pub fn new(cell: f64) -> SpatialHash {
        assert!(cell > 0.0);
        SpatialHash {
            cell,
            buckets: HashMap::new(),
        }
    }

    fn key(&self, region: usize, p: Vec2) -> (usize, i32, i32) {
        (
            region,
            (p.x / self.cell).floor() as i32,
            (p.y / self.cell).floor() as i32,
        )
    }

    /// Rebuild from the active agents (`region_of` maps an agent to its
    /// region index).
    pub fn rebuild<'a>(
        &mut self,
        agents: impl Iterator<Item = (u32, &'a Agent)>,
        region_of: impl Fn(&Agent) -> usize,
    ) {
        self.buckets.clear();
        for (idx, agent) in agents {
            let key = self.key(region_of(agent), agent.position);
            self.buckets.entry(key).or_default().push(idx);
        }
    }

    /// Indices of all active agents in the 3x3 bucket block around `p`
    /// within the same region, ascending, excluding `exclude`.
    pub fn candidates(&self, region: usize, p: Vec2, exclude: u32) -> Vec<u32> {
        let (_, cx, cy) = self.key(region, p);
        let mut out = Vec::new();
        for dy in -1..=1 {
            for dx in -1..=1 {
                if let Some(bucket) = self.buckets.get(&(region, cx + dx, cy + dy)) {
                    out.extend(bucket.iter().copied().filter(|&i| i != exclude));
                }
            }
        }
        out.sort_unstable();
        out
    }
}
