use super::TemporalGraph;

/// Per-epoch and per-room occupancy series.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyStats {
    /// `[epoch][room]` head counts.
    pub people_per_room_per_epoch: Vec<Vec<u32>>,
    pub people_per_epoch: Vec<u32>,
    pub rooms_occupied_per_epoch: Vec<u32>,
    /// People divided by occupied rooms; 0 for an epoch with nobody present.
    pub mean_density_per_epoch: Vec<f64>,
    /// Number of epochs each room was non-empty.
    pub room_occupancy_counts: Vec<u32>,
    pub room_count: usize,
}

impl OccupancyStats {
    pub(super) fn compute(graph: &TemporalGraph) -> Self {
        let rooms = graph.room_count();
        let mut matrix = Vec::with_capacity(graph.epoch_count());
        let mut people = Vec::with_capacity(graph.epoch_count());
        let mut occupied = Vec::with_capacity(graph.epoch_count());
        let mut density = Vec::with_capacity(graph.epoch_count());
        let mut room_counts = vec![0u32; rooms];

        for snap in graph.snapshots() {
            let mut row = vec![0u32; rooms];
            let mut rooms_used = 0u32;
            for (room, members) in snap.occupied_rooms() {
                row[room.index()] = members.len() as u32;
                room_counts[room.index()] += 1;
                rooms_used += 1;
            }
            let total: u32 = row.iter().sum();
            people.push(total);
            occupied.push(rooms_used);
            density.push(if rooms_used > 0 { f64::from(total) / f64::from(rooms_used) } else { 0.0 });
            matrix.push(row);
        }

        Self {
            people_per_room_per_epoch: matrix,
            people_per_epoch: people,
            rooms_occupied_per_epoch: occupied,
            mean_density_per_epoch: density,
            room_occupancy_counts: room_counts,
            room_count: rooms,
        }
    }

    pub fn max_people(&self) -> u32 {
        self.people_per_epoch.iter().copied().max().unwrap_or(0)
    }

    pub fn max_mean_density(&self) -> f64 {
        self.mean_density_per_epoch.iter().copied().fold(0.0, f64::max)
    }

    /// Largest fraction of all known rooms occupied at the same epoch.
    pub fn max_occupied_fraction(&self) -> f64 {
        if self.room_count == 0 {
            return 0.0;
        }
        let max = self.rooms_occupied_per_epoch.iter().copied().max().unwrap_or(0);
        f64::from(max) / self.room_count as f64
    }
}

#[cfg(test)]
mod tests {
    use crate::graph::{ContactRecord, TemporalGraph};

    #[test]
    fn single_record() {
        let g = TemporalGraph::from_records(vec![ContactRecord::new(0, "A", "r1")], 20).unwrap();
        let s = g.occupancy_stats();
        assert_eq!(s.people_per_epoch, vec![1]);
        assert_eq!(s.rooms_occupied_per_epoch, vec![1]);
        assert_eq!(s.mean_density_per_epoch, vec![1.0]);
        assert_eq!(s.room_occupancy_counts, vec![1]);
    }

    #[test]
    fn toy_counts() {
        let g = TemporalGraph::from_records(
            vec![
                ContactRecord::new(0, "A", "r1"),
                ContactRecord::new(0, "B", "r1"),
                ContactRecord::new(0, "C", "r2"),
                ContactRecord::new(2, "A", "r2"),
            ],
            20,
        )
        .unwrap();
        let s = g.occupancy_stats();
        assert_eq!(s.people_per_room_per_epoch, vec![vec![2, 1], vec![0, 0], vec![0, 1]]);
        assert_eq!(s.people_per_epoch, vec![3, 0, 1]);
        assert_eq!(s.rooms_occupied_per_epoch, vec![2, 0, 1]);
        assert_eq!(s.mean_density_per_epoch, vec![1.5, 0.0, 1.0]);
        assert_eq!(s.room_occupancy_counts, vec![1, 2]);
        assert_eq!(s.max_occupied_fraction(), 1.0);
        assert_eq!(s.max_mean_density(), 1.5);
    }
}
