//! Room-level temporal contact graph.
//!
//! Persons and rooms are interned into dense ids assigned in ascending order
//! of their textual identifiers, so comparing ids compares identifiers. Each
//! epoch stores only its non-empty rooms.

mod ingest;
mod stats;
mod synthetic;

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

pub use ingest::{DatasetFormat, Delimiter, TimeColumn};
pub use stats::OccupancyStats;
pub use synthetic::SyntheticSpec;

pub const DEFAULT_DELTA_T_SECONDS: u32 = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PersonId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RoomId(pub u32);

impl PersonId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl RoomId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// One observation: `person` was in `room` during `epoch`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ContactRecord {
    pub epoch: u32,
    pub person: String,
    pub room: String,
}

impl ContactRecord {
    pub fn new(epoch: u32, person: impl Into<String>, room: impl Into<String>) -> Self {
        Self { epoch, person: person.into(), room: room.into() }
    }
}

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(
        "line {line}: person {person:?} already placed in room {first_room:?} at epoch {epoch}, \
         conflicting room {second_room:?}"
    )]
    Conflict { line: usize, epoch: u32, person: String, first_room: String, second_room: String },
    #[error("unknown person {0:?}")]
    UnknownPerson(String),
    #[error("epoch {epoch} outside graph range 0..{epochs}")]
    EpochOutOfRange { epoch: u32, epochs: u32 },
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Occupants of every non-empty room during one epoch.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Snapshot {
    rooms: BTreeMap<RoomId, Vec<PersonId>>,
    placement: Vec<(PersonId, RoomId)>,
}

impl Snapshot {
    fn from_placement(mut placement: Vec<(PersonId, RoomId)>) -> Self {
        placement.sort_unstable();
        placement.dedup();
        let mut rooms: BTreeMap<RoomId, Vec<PersonId>> = BTreeMap::new();
        for &(person, room) in &placement {
            rooms.entry(room).or_default().push(person);
        }
        Self { rooms, placement }
    }

    pub fn room_of(&self, person: PersonId) -> Option<RoomId> {
        self.placement
            .binary_search_by_key(&person, |&(p, _)| p)
            .ok()
            .map(|idx| self.placement[idx].1)
    }

    /// Occupants of `room` in ascending id order; empty if the room is unoccupied.
    pub fn occupants(&self, room: RoomId) -> &[PersonId] {
        self.rooms.get(&room).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Everyone sharing `person`'s room, excluding `person`, in ascending id order.
    pub fn neighbors(&self, person: PersonId) -> impl Iterator<Item = PersonId> + '_ {
        let members = self.room_of(person).map(|room| self.occupants(room)).unwrap_or(&[]);
        members.iter().copied().filter(move |&p| p != person)
    }

    pub fn occupied_rooms(&self) -> impl Iterator<Item = (RoomId, &[PersonId])> + '_ {
        self.rooms.iter().map(|(&room, members)| (room, members.as_slice()))
    }

    pub fn present(&self) -> impl Iterator<Item = PersonId> + '_ {
        self.placement.iter().map(|&(p, _)| p)
    }

    pub fn present_count(&self) -> usize {
        self.placement.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemporalGraph {
    persons: Vec<String>,
    rooms: Vec<String>,
    snapshots: Vec<Snapshot>,
    delta_t_seconds: u32,
}

impl TemporalGraph {
    pub fn empty(delta_t_seconds: u32) -> Self {
        Self { persons: Vec::new(), rooms: Vec::new(), snapshots: Vec::new(), delta_t_seconds }
    }

    /// Builds a graph from records. Identical duplicates collapse; a person
    /// placed in two rooms during one epoch is a [`GraphError::Conflict`]
    /// reported against the record's 1-based position.
    pub fn from_records<I>(records: I, delta_t_seconds: u32) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = ContactRecord>,
    {
        let numbered = records.into_iter().enumerate().map(|(idx, rec)| (idx + 1, rec));
        Self::build(numbered, std::iter::empty(), delta_t_seconds)
    }

    pub(crate) fn build<I, R>(records: I, declared_rooms: R, delta_t_seconds: u32) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (usize, ContactRecord)>,
        R: IntoIterator<Item = String>,
    {
        let mut placed: BTreeMap<(u32, String), (String, usize)> = BTreeMap::new();
        let mut room_names: BTreeSet<String> = declared_rooms.into_iter().collect();
        for (line, rec) in records {
            match placed.get(&(rec.epoch, rec.person.clone())) {
                Some((room, _)) if *room == rec.room => continue,
                Some((room, _)) => {
                    return Err(GraphError::Conflict {
                        line,
                        epoch: rec.epoch,
                        person: rec.person,
                        first_room: room.clone(),
                        second_room: rec.room,
                    });
                }
                None => {
                    room_names.insert(rec.room.clone());
                    placed.insert((rec.epoch, rec.person), (rec.room, line));
                }
            }
        }

        let persons: Vec<String> = placed
            .keys()
            .map(|(_, person)| person.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let rooms: Vec<String> = room_names.into_iter().collect();
        let person_ids: BTreeMap<&str, PersonId> =
            persons.iter().enumerate().map(|(i, p)| (p.as_str(), PersonId(i as u32))).collect();
        let room_ids: BTreeMap<&str, RoomId> =
            rooms.iter().enumerate().map(|(i, r)| (r.as_str(), RoomId(i as u32))).collect();

        let epochs = placed.keys().map(|(epoch, _)| epoch + 1).max().unwrap_or(0) as usize;
        let mut per_epoch: Vec<Vec<(PersonId, RoomId)>> = vec![Vec::new(); epochs];
        for ((epoch, person), (room, _)) in &placed {
            per_epoch[*epoch as usize].push((person_ids[person.as_str()], room_ids[room.as_str()]));
        }
        let snapshots = per_epoch.into_iter().map(Snapshot::from_placement).collect();

        Ok(Self { persons, rooms, snapshots, delta_t_seconds })
    }

    pub fn person_count(&self) -> usize {
        self.persons.len()
    }

    pub fn room_count(&self) -> usize {
        self.rooms.len()
    }

    /// Number of epochs, `0..epoch_count()`.
    pub fn epoch_count(&self) -> usize {
        self.snapshots.len()
    }

    pub fn delta_t_seconds(&self) -> u32 {
        self.delta_t_seconds
    }

    pub fn persons(&self) -> &[String] {
        &self.persons
    }

    pub fn rooms(&self) -> &[String] {
        &self.rooms
    }

    pub fn person_ids(&self) -> impl Iterator<Item = PersonId> {
        (0..self.persons.len() as u32).map(PersonId)
    }

    pub fn person_name(&self, id: PersonId) -> &str {
        &self.persons[id.index()]
    }

    pub fn room_name(&self, id: RoomId) -> &str {
        &self.rooms[id.index()]
    }

    pub fn person_id(&self, name: &str) -> Option<PersonId> {
        self.persons.binary_search_by(|p| p.as_str().cmp(name)).ok().map(|i| PersonId(i as u32))
    }

    pub fn room_id(&self, name: &str) -> Option<RoomId> {
        self.rooms.binary_search_by(|r| r.as_str().cmp(name)).ok().map(|i| RoomId(i as u32))
    }

    pub fn snapshot(&self, epoch: u32) -> Result<&Snapshot, GraphError> {
        self.snapshots
            .get(epoch as usize)
            .ok_or(GraphError::EpochOutOfRange { epoch, epochs: self.snapshots.len() as u32 })
    }

    pub fn snapshots(&self) -> &[Snapshot] {
        &self.snapshots
    }

    /// Co-room occupants of `person` at `epoch`, excluding the person, by name.
    /// Empty when the person is absent that epoch.
    pub fn neighborhood(&self, person: &str, epoch: u32) -> Result<BTreeSet<String>, GraphError> {
        let id = self.person_id(person).ok_or_else(|| GraphError::UnknownPerson(person.to_owned()))?;
        let snapshot = self.snapshot(epoch)?;
        Ok(snapshot.neighbors(id).map(|p| self.person_name(p).to_owned()).collect())
    }

    /// All records in canonical (epoch, room, person) order.
    pub fn records(&self) -> impl Iterator<Item = ContactRecord> + '_ {
        self.snapshots.iter().enumerate().flat_map(move |(epoch, snap)| {
            snap.occupied_rooms().flat_map(move |(room, members)| {
                members.iter().map(move |&p| {
                    ContactRecord::new(epoch as u32, self.person_name(p), self.room_name(room))
                })
            })
        })
    }

    pub fn occupancy_stats(&self) -> OccupancyStats {
        OccupancyStats::compute(self)
    }
}
