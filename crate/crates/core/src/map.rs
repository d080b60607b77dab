//! Standard-map topology.
//!
//! The map is loaded from an embedded, checksummed text file
//! (`data/standard.map`). Locations are indexed alphabetically by name, so a
//! province always precedes its coasts (`BUL`, `BUL/EC`, `BUL/SC`). That index
//! is the row order of every tensor produced by [`crate::features`].

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::matrix::Matrix;
use crate::power::Power;

const STANDARD_MAP: &str = include_str!("../data/standard.map");

/// Index of a location in the map's alphabetical location table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LocId(pub u8);

impl LocId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LocKind {
    Land,
    Water,
    Coastal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Coast {
    North,
    South,
    East,
}

impl Coast {
    pub fn tag(self) -> &'static str {
        match self {
            Coast::North => "NC",
            Coast::South => "SC",
            Coast::East => "EC",
        }
    }

    fn from_tag(tag: &str) -> Option<Coast> {
        match tag {
            "NC" => Some(Coast::North),
            "SC" => Some(Coast::South),
            "EC" => Some(Coast::East),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum UnitKind {
    Army,
    Fleet,
}

impl UnitKind {
    pub fn letter(self) -> &'static str {
        match self {
            UnitKind::Army => "A",
            UnitKind::Fleet => "F",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MapError {
    #[error("map data line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("map integrity violation: {0}")]
    Integrity(String),
    #[error("unknown location `{0}`")]
    UnknownLocation(String),
    #[error("malformed coast tag in `{0}`")]
    MalformedCoast(String),
}

#[derive(Debug, Clone)]
struct LocInfo {
    name: String,
    kind: LocKind,
    coast: Option<Coast>,
    province: LocId,
    x: i32,
    y: i32,
}

/// Immutable map topology. Cheap to share; see [`standard_map`].
#[derive(Debug, Clone)]
pub struct MapGraph {
    name: String,
    version: u32,
    locs: Vec<LocInfo>,
    by_name: HashMap<String, LocId>,
    army_adj: Vec<Vec<LocId>>,
    fleet_adj: Vec<Vec<LocId>>,
    coasts: Vec<Vec<LocId>>,
    supply_center: Vec<bool>,
    home: [Vec<LocId>; Power::COUNT],
    opening: Vec<(Power, UnitKind, LocId)>,
    /// Union graph over all locations: both adjacency relations plus
    /// coast/parent identification.
    neighbours: Vec<Vec<LocId>>,
    distance: Vec<u8>,
    /// Water locations bordering any coast of a province.
    seas: Vec<Vec<LocId>>,
    province_neighbours: Vec<Vec<LocId>>,
}

/// The standard map, parsed once per process.
pub fn standard_map() -> &'static MapGraph {
    static MAP: OnceLock<MapGraph> = OnceLock::new();
    MAP.get_or_init(|| load_standard_map().expect("embedded standard map is valid"))
}

/// Parses and validates the embedded standard map.
pub fn load_standard_map() -> Result<MapGraph, MapError> {
    MapGraph::parse(STANDARD_MAP)
}

pub const NUM_LOCATIONS: usize = 81;

impl MapGraph {
    /// Parses the map text format and checks every structural invariant.
    ///
    /// Fails on the first violated invariant with a message naming it.
    pub fn parse(text: &str) -> Result<MapGraph, MapError> {
        verify_checksum(text)?;

        let mut header = None;
        let mut raw_locs: Vec<(String, LocKind, i32, i32)> = Vec::new();
        let mut army_lines = Vec::new();
        let mut fleet_lines = Vec::new();
        let mut sc_names = Vec::new();
        let mut home_lines = Vec::new();
        let mut unit_lines = Vec::new();

        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            let err = |message: &str| MapError::Parse {
                line: line_no,
                message: message.to_string(),
            };
            match parts[0] {
                "map" => {
                    if parts.len() != 3 {
                        return Err(err("expected `map <name> <version>`"));
                    }
                    let version = parts[2].parse().map_err(|_| err("bad version"))?;
                    header = Some((parts[1].to_string(), version));
                }
                "loc" => {
                    if parts.len() != 5 {
                        return Err(err("expected `loc <name> <kind> <x> <y>`"));
                    }
                    let kind = match parts[2] {
                        "land" => LocKind::Land,
                        "water" => LocKind::Water,
                        "coast" => LocKind::Coastal,
                        _ => return Err(err("unknown location kind")),
                    };
                    let x = parts[3].parse().map_err(|_| err("bad x coordinate"))?;
                    let y = parts[4].parse().map_err(|_| err("bad y coordinate"))?;
                    raw_locs.push((parts[1].to_string(), kind, x, y));
                }
                "army" | "fleet" => {
                    if parts.len() < 2 {
                        return Err(err("adjacency line without location"));
                    }
                    let entry = (
                        line_no,
                        parts[1].to_string(),
                        parts[2..].iter().map(|s| s.to_string()).collect::<Vec<_>>(),
                    );
                    if parts[0] == "army" {
                        army_lines.push(entry);
                    } else {
                        fleet_lines.push(entry);
                    }
                }
                "sc" => sc_names.extend(parts[1..].iter().map(|s| (line_no, s.to_string()))),
                "home" => {
                    if parts.len() < 2 {
                        return Err(err("home line without power"));
                    }
                    let power: Power = parts[1].parse().map_err(|_| err("unknown power"))?;
                    home_lines.push((
                        line_no,
                        power,
                        parts[2..].iter().map(|s| s.to_string()).collect::<Vec<_>>(),
                    ));
                }
                "unit" => {
                    if parts.len() != 4 {
                        return Err(err("expected `unit <POWER> <A|F> <loc>`"));
                    }
                    let power: Power = parts[1].parse().map_err(|_| err("unknown power"))?;
                    let kind = match parts[2] {
                        "A" => UnitKind::Army,
                        "F" => UnitKind::Fleet,
                        _ => return Err(err("unit kind must be A or F")),
                    };
                    unit_lines.push((line_no, power, kind, parts[3].to_string()));
                }
                "checksum" => {}
                other => return Err(err(&format!("unknown directive `{other}`"))),
            }
        }

        let (name, version) =
            header.ok_or_else(|| MapError::Integrity("missing `map` header".into()))?;

        raw_locs.sort_by(|a, b| a.0.cmp(&b.0));
        if raw_locs.len() > u8::MAX as usize {
            return Err(MapError::Integrity("too many locations".into()));
        }
        let mut by_name = HashMap::new();
        for (i, (n, ..)) in raw_locs.iter().enumerate() {
            if by_name.insert(n.clone(), LocId(i as u8)).is_some() {
                return Err(MapError::Integrity(format!("duplicate location {n}")));
            }
        }

        let mut locs = Vec::with_capacity(raw_locs.len());
        for (i, (n, kind, x, y)) in raw_locs.iter().enumerate() {
            let (province, coast) = match n.split_once('/') {
                Some((parent, tag)) => {
                    let coast =
                        Coast::from_tag(tag).ok_or_else(|| MapError::MalformedCoast(n.clone()))?;
                    let parent_id = *by_name.get(parent).ok_or_else(|| {
                        MapError::Integrity(format!("coast {n} has no parent province"))
                    })?;
                    (parent_id, Some(coast))
                }
                None => (LocId(i as u8), None),
            };
            locs.push(LocInfo {
                name: n.clone(),
                kind: *kind,
                coast,
                province,
                x: *x,
                y: *y,
            });
        }

        let n = locs.len();
        let lookup = |line: usize, s: &str| -> Result<LocId, MapError> {
            by_name.get(s).copied().ok_or_else(|| MapError::Parse {
                line,
                message: format!("unknown location `{s}`"),
            })
        };

        let mut army_adj = vec![Vec::new(); n];
        for (line, from, to) in &army_lines {
            let f = lookup(*line, from)?;
            for t in to {
                army_adj[f.index()].push(lookup(*line, t)?);
            }
        }
        let mut fleet_adj = vec![Vec::new(); n];
        for (line, from, to) in &fleet_lines {
            let f = lookup(*line, from)?;
            for t in to {
                fleet_adj[f.index()].push(lookup(*line, t)?);
            }
        }
        for adj in army_adj.iter_mut().chain(fleet_adj.iter_mut()) {
            adj.sort();
            adj.dedup();
        }

        let mut supply_center = vec![false; n];
        for (line, s) in &sc_names {
            supply_center[lookup(*line, s)?.index()] = true;
        }

        let mut home: [Vec<LocId>; Power::COUNT] = Default::default();
        for (line, power, provs) in &home_lines {
            for p in provs {
                home[power.index()].push(lookup(*line, p)?);
            }
            home[power.index()].sort();
        }

        let mut opening = Vec::new();
        for (line, power, kind, loc) in &unit_lines {
            opening.push((*power, *kind, lookup(*line, loc)?));
        }

        let mut coasts = vec![Vec::new(); n];
        for (i, l) in locs.iter().enumerate() {
            if l.coast.is_some() {
                coasts[l.province.index()].push(LocId(i as u8));
            }
        }

        let mut map = MapGraph {
            name,
            version,
            locs,
            by_name,
            army_adj,
            fleet_adj,
            coasts,
            supply_center,
            home,
            opening,
            neighbours: Vec::new(),
            distance: Vec::new(),
            seas: Vec::new(),
            province_neighbours: Vec::new(),
        };
        map.derive_tables();
        map.validate()?;
        Ok(map)
    }

    fn derive_tables(&mut self) {
        let n = self.locs.len();
        let mut neighbours: Vec<BTreeSet<LocId>> = vec![BTreeSet::new(); n];
        for i in 0..n {
            for &j in self.army_adj[i].iter().chain(&self.fleet_adj[i]) {
                neighbours[i].insert(j);
                neighbours[j.index()].insert(LocId(i as u8));
            }
            let parent = self.locs[i].province;
            if parent.index() != i {
                neighbours[i].insert(parent);
                neighbours[parent.index()].insert(LocId(i as u8));
            }
        }
        self.neighbours = neighbours
            .into_iter()
            .map(|s| s.into_iter().collect())
            .collect();

        let mut distance = vec![u8::MAX; n * n];
        for s in 0..n {
            let mut queue = VecDeque::from([s]);
            distance[s * n + s] = 0;
            while let Some(u) = queue.pop_front() {
                let du = distance[s * n + u];
                for v in &self.neighbours[u] {
                    let slot = &mut distance[s * n + v.index()];
                    if *slot == u8::MAX {
                        *slot = du + 1;
                        queue.push_back(v.index());
                    }
                }
            }
        }
        self.distance = distance;

        let mut seas = vec![Vec::new(); n];
        let mut prov_nb: Vec<BTreeSet<LocId>> = vec![BTreeSet::new(); n];
        for i in 0..n {
            let p = self.locs[i].province;
            for &j in self.army_adj[i].iter().chain(&self.fleet_adj[i]) {
                let q = self.locs[j.index()].province;
                if q != p {
                    prov_nb[p.index()].insert(q);
                }
                if self.locs[j.index()].kind == LocKind::Water
                    && self.locs[i].kind != LocKind::Water
                {
                    seas[p.index()].push(j);
                }
            }
        }
        for s in seas.iter_mut() {
            s.sort();
            s.dedup();
        }
        self.seas = seas;
        self.province_neighbours = prov_nb
            .into_iter()
            .map(|s| s.into_iter().collect())
            .collect();
    }

    fn validate(&self) -> Result<(), MapError> {
        let fail = |m: String| Err(MapError::Integrity(m));
        let n = self.locs.len();
        if n != NUM_LOCATIONS {
            return fail(format!("expected {NUM_LOCATIONS} locations, found {n}"));
        }
        let provinces = self.provinces().count();
        if provinces != 75 {
            return fail(format!("expected 75 provinces, found {provinces}"));
        }
        let scs = self.supply_centers().count();
        if scs != 34 {
            return fail(format!("expected 34 supply centers, found {scs}"));
        }
        for (i, l) in self.locs.iter().enumerate() {
            let id = LocId(i as u8);
            if l.coast.is_some() {
                if l.kind != LocKind::Coastal {
                    return fail(format!("{} carries a coast but is not coastal", l.name));
                }
                if self.locs[l.province.index()].kind != LocKind::Coastal {
                    return fail(format!("parent of {} is not a coastal province", l.name));
                }
                if !self.army_adj[i].is_empty() {
                    return fail(format!("coast {} has army adjacencies", l.name));
                }
                if self.supply_center[i] {
                    return fail(format!("coast {} is marked as a supply center", l.name));
                }
            }
            for &j in &self.army_adj[i] {
                let other = &self.locs[j.index()];
                if l.kind == LocKind::Water || other.kind == LocKind::Water {
                    return fail(format!(
                        "army adjacency {} - {} touches water",
                        l.name, other.name
                    ));
                }
                if other.coast.is_some() {
                    return fail(format!(
                        "army adjacency {} - {} targets a coast",
                        l.name, other.name
                    ));
                }
                if !self.army_adj[j.index()].contains(&id) {
                    return fail(format!(
                        "army adjacency {} - {} is not symmetric",
                        l.name, other.name
                    ));
                }
            }
            for &j in &self.fleet_adj[i] {
                let other = &self.locs[j.index()];
                for loc in [l, other] {
                    if loc.kind == LocKind::Land || self.is_split(loc) {
                        return fail(format!(
                            "fleet adjacency {} - {} uses {}",
                            l.name, other.name, loc.name
                        ));
                    }
                }
                if !self.fleet_adj[j.index()].contains(&id) {
                    return fail(format!(
                        "fleet adjacency {} - {} is not symmetric",
                        l.name, other.name
                    ));
                }
            }
        }
        for p in Power::ALL {
            for h in &self.home[p.index()] {
                if !self.supply_center[h.index()] {
                    return fail(format!(
                        "home center {} of {p} is not a supply center",
                        self.name(*h)
                    ));
                }
            }
        }
        let mut seen = BTreeSet::new();
        for (p, kind, loc) in &self.opening {
            if !self.can_occupy(*loc, *kind) {
                return fail(format!(
                    "opening unit {p} {} {} cannot stand there",
                    kind.letter(),
                    self.name(*loc)
                ));
            }
            if !seen.insert(self.province(*loc)) {
                return fail(format!(
                    "two opening units in {}",
                    self.name(self.province(*loc))
                ));
            }
        }
        if self.distance.contains(&u8::MAX) {
            return fail("location graph is disconnected".into());
        }
        Ok(())
    }

    fn is_split(&self, l: &LocInfo) -> bool {
        l.coast.is_none() && !self.coasts[l.province.index()].is_empty()
    }

    pub fn name_of_map(&self) -> &str {
        &self.name
    }

    pub fn version(&self) -> u32 {
        self.version
    }

    pub fn len(&self) -> usize {
        self.locs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.locs.is_empty()
    }

    pub fn locations(&self) -> impl Iterator<Item = LocId> + '_ {
        (0..self.locs.len()).map(|i| LocId(i as u8))
    }

    /// Locations that are whole provinces (i.e. not a coast of a split province).
    pub fn provinces(&self) -> impl Iterator<Item = LocId> + '_ {
        self.locations()
            .filter(|l| self.locs[l.index()].coast.is_none())
    }

    pub fn supply_centers(&self) -> impl Iterator<Item = LocId> + '_ {
        self.locations().filter(|l| self.supply_center[l.index()])
    }

    pub fn name(&self, loc: LocId) -> &str {
        &self.locs[loc.index()].name
    }

    pub fn kind(&self, loc: LocId) -> LocKind {
        self.locs[loc.index()].kind
    }

    pub fn coast(&self, loc: LocId) -> Option<Coast> {
        self.locs[loc.index()].coast
    }

    /// The province a location belongs to; a province is its own parent.
    #[inline]
    pub fn province(&self, loc: LocId) -> LocId {
        self.locs[loc.index()].province
    }

    /// Coast locations of a split province (empty otherwise).
    pub fn coasts(&self, province: LocId) -> &[LocId] {
        &self.coasts[province.index()]
    }

    pub fn has_split_coasts(&self, province: LocId) -> bool {
        !self.coasts[province.index()].is_empty()
    }

    pub fn is_supply_center(&self, loc: LocId) -> bool {
        self.supply_center[self.province(loc).index()]
    }

    pub fn home_centers(&self, power: Power) -> &[LocId] {
        &self.home[power.index()]
    }

    pub fn home_power(&self, province: LocId) -> Option<Power> {
        Power::ALL
            .into_iter()
            .find(|p| self.home[p.index()].contains(&province))
    }

    pub fn opening_units(&self) -> &[(Power, UnitKind, LocId)] {
        &self.opening
    }

    pub fn coordinates(&self, loc: LocId) -> (i32, i32) {
        let l = &self.locs[loc.index()];
        (l.x, l.y)
    }

    /// Resolves a location name, case-insensitively. Accepts `SPA/NC` and `SPA(NC)`.
    pub fn loc(&self, name: &str) -> Result<LocId, MapError> {
        let mut upper = name.trim().to_ascii_uppercase();
        if let Some(open) = upper.find('(') {
            if !upper.ends_with(')') {
                return Err(MapError::MalformedCoast(name.to_string()));
            }
            upper = format!("{}/{}", &upper[..open], &upper[open + 1..upper.len() - 1]);
        }
        if let Some((_, tag)) = upper.split_once('/') {
            if Coast::from_tag(tag).is_none() {
                return Err(MapError::MalformedCoast(name.to_string()));
            }
        }
        self.by_name
            .get(&upper)
            .copied()
            .ok_or_else(|| MapError::UnknownLocation(name.to_string()))
    }

    /// Single-step destinations for a unit of `kind` standing on `loc`.
    pub fn adjacent(&self, loc: LocId, kind: UnitKind) -> &[LocId] {
        match kind {
            UnitKind::Army => &self.army_adj[loc.index()],
            UnitKind::Fleet => &self.fleet_adj[loc.index()],
        }
    }

    /// Name-based variant of [`MapGraph::adjacent`].
    pub fn adjacent_by_name(&self, name: &str, kind: UnitKind) -> Result<Vec<LocId>, MapError> {
        Ok(self.adjacent(self.loc(name)?, kind).to_vec())
    }

    pub fn is_adjacent(&self, from: LocId, to: LocId, kind: UnitKind) -> bool {
        self.adjacent(from, kind).binary_search(&to).is_ok()
    }

    /// Whether a unit of `kind` on `from` can move into some location of `province`.
    pub fn reaches_province(&self, from: LocId, kind: UnitKind, province: LocId) -> bool {
        self.adjacent(from, kind)
            .iter()
            .any(|&d| self.province(d) == province)
    }

    /// Whether a unit of `kind` may stand on `loc`.
    pub fn can_occupy(&self, loc: LocId, kind: UnitKind) -> bool {
        let l = &self.locs[loc.index()];
        match kind {
            UnitKind::Army => l.kind != LocKind::Water && l.coast.is_none(),
            UnitKind::Fleet => l.kind != LocKind::Land && !self.is_split(l),
        }
    }

    /// Water locations bordering any coast of `province`.
    pub fn seas(&self, province: LocId) -> &[LocId] {
        &self.seas[self.province(province).index()]
    }

    /// Neighbours in the undirected union graph (both unit kinds plus coast/parent links).
    pub fn neighbours(&self, loc: LocId) -> &[LocId] {
        &self.neighbours[loc.index()]
    }

    /// Province-level neighbours of a province.
    pub fn province_neighbours(&self, province: LocId) -> &[LocId] {
        &self.province_neighbours[self.province(province).index()]
    }

    /// Shortest-path length in the union graph.
    #[inline]
    pub fn distance(&self, a: LocId, b: LocId) -> u8 {
        self.distance[a.index() * self.locs.len() + b.index()]
    }

    pub fn diameter(&self) -> u8 {
        self.distance.iter().copied().max().unwrap_or(0)
    }

    /// Symmetric-normalised adjacency with self loops over the union graph,
    /// rows and columns in location-index order.
    pub fn normalized_adjacency(&self) -> Matrix {
        let lists: Vec<Vec<usize>> = self
            .neighbours
            .iter()
            .map(|nb| nb.iter().map(|l| l.index()).collect())
            .collect();
        normalize_adjacency(&lists)
    }
}

impl fmt::Display for LocId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// `D^{-1/2} (A + I) D^{-1/2}` for an undirected graph given as neighbour lists.
/// `D` is the degree matrix of `A + I`.
pub fn normalize_adjacency(neighbours: &[Vec<usize>]) -> Matrix {
    let n = neighbours.len();
    let degree: Vec<f64> = neighbours
        .iter()
        .enumerate()
        .map(|(i, nb)| (nb.iter().filter(|&&j| j != i).count() + 1) as f64)
        .collect();
    let mut m = Matrix::zeros(n, n);
    for i in 0..n {
        m.set(i, i, 1.0 / degree[i]);
        for &j in &neighbours[i] {
            if j != i {
                m.set(i, j, 1.0 / (degree[i] * degree[j]).sqrt());
            }
        }
    }
    m
}

fn verify_checksum(text: &str) -> Result<(), MapError> {
    let Some(pos) = text.find("\nchecksum ") else {
        return Err(MapError::Integrity("missing checksum line".into()));
    };
    let body = &text[..=pos];
    let stated = text[pos + 1..]
        .lines()
        .next()
        .and_then(|l| l.split_whitespace().nth(1))
        .unwrap_or("");
    let digest = Sha256::digest(body.as_bytes());
    let actual: String = digest.iter().map(|b| format!("{b:02x}")).collect();
    if actual != stated {
        return Err(MapError::Integrity(format!(
            "checksum mismatch: file states {stated}, content hashes to {actual}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map() -> &'static MapGraph {
        standard_map()
    }

    #[test]
    fn standard_counts() {
        let m = map();
        assert_eq!(m.len(), 81);
        assert_eq!(m.provinces().count(), 75);
        assert_eq!(m.supply_centers().count(), 34);
    }

    #[test]
    fn germany_home_centers() {
        let m = map();
        let names: Vec<_> = m
            .home_centers(Power::Germany)
            .iter()
            .map(|l| m.name(*l))
            .collect();
        assert_eq!(names, ["BER", "KIE", "MUN"]);
    }

    #[test]
    fn union_graph_diameter_is_eight() {
        assert_eq!(map().diameter(), 8);
    }

    #[test]
    fn location_order_is_alphabetical() {
        let m = map();
        let names: Vec<_> = m.locations().map(|l| m.name(l).to_string()).collect();
        let mut sorted = names.clone();
        sorted.sort();
        assert_eq!(names, sorted);
        assert_eq!(m.name(LocId(0)), "ADR");
        assert_eq!(m.loc("BUL").unwrap().0 + 1, m.loc("BUL/EC").unwrap().0);
    }

    #[test]
    fn armies_never_touch_water() {
        let m = map();
        let mao = m.loc("MAO").unwrap();
        assert!(m.adjacent(mao, UnitKind::Army).is_empty());
        for l in m.locations() {
            for d in m.adjacent(l, UnitKind::Army) {
                assert_ne!(m.kind(*d), LocKind::Water);
            }
        }
    }

    #[test]
    fn split_coasts_are_distinct() {
        let m = map();
        let nc = m.loc("SPA/NC").unwrap();
        let sc = m.loc("SPA/SC").unwrap();
        let from_nc: Vec<_> = m
            .adjacent(nc, UnitKind::Fleet)
            .iter()
            .map(|l| m.name(*l))
            .collect();
        assert_eq!(from_nc, ["GAS", "MAO", "POR"]);
        for only_south in ["LYO", "MAR", "WES"] {
            let l = m.loc(only_south).unwrap();
            assert!(m.is_adjacent(sc, l, UnitKind::Fleet));
            assert!(!m.is_adjacent(nc, l, UnitKind::Fleet));
        }
    }

    #[test]
    fn name_lookup() {
        let m = map();
        assert_eq!(m.loc("spa(nc)").unwrap(), m.loc("SPA/NC").unwrap());
        assert!(matches!(m.loc("XYZ"), Err(MapError::UnknownLocation(_))));
        assert!(matches!(m.loc("SPA/WC"), Err(MapError::MalformedCoast(_))));
        assert!(matches!(
            m.adjacent_by_name("ATL", UnitKind::Army),
            Err(MapError::UnknownLocation(_))
        ));
    }

    #[test]
    fn corrupted_data_is_rejected() {
        let tampered = STANDARD_MAP.replace("army PAR BRE BUR GAS PIC", "army PAR BRE BUR GAS");
        match MapGraph::parse(&tampered) {
            Err(MapError::Integrity(m)) => assert!(m.contains("checksum")),
            other => panic!("expected integrity error, got {other:?}"),
        }
    }

    #[test]
    fn asymmetric_adjacency_names_the_edge() {
        let tampered = STANDARD_MAP.replace("army PAR BRE BUR GAS PIC", "army PAR BRE BUR GAS");
        let body_end = tampered.find("\nchecksum ").unwrap() + 1;
        let body = &tampered[..body_end];
        let digest: String = Sha256::digest(body.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect();
        let resigned = format!("{body}checksum {digest}\n");
        match MapGraph::parse(&resigned) {
            Err(MapError::Integrity(m)) => assert!(m.contains("PIC - PAR"), "{m}"),
            other => panic!("expected integrity error, got {other:?}"),
        }
    }

    #[test]
    fn isolated_node_normalises_to_one() {
        let m = normalize_adjacency(&[vec![]]);
        assert_eq!(m.get(0, 0), 1.0);
    }

    #[test]
    fn normalized_adjacency_is_symmetric_with_bounded_spectrum() {
        let a = map().normalized_adjacency();
        assert!(a.max_abs_diff(&a.transpose()) <= 1e-12);
        assert!(a.data.iter().all(|&x| x >= 0.0));
        let ev = a.symmetric_eigenvalues();
        assert!(
            ev[0] >= -1.0 - 1e-9 && ev[80] <= 1.0 + 1e-9,
            "{:?}",
            (ev[0], ev[80])
        );
        // The top eigenvalue of a connected normalised graph is exactly 1.
        assert!((ev[80] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn normalisation_recovers_degrees() {
        // Entry (i,j) = 1/sqrt(d_i d_j) where d = degree + 1; recover d_i from the diagonal.
        let m = map();
        let a = m.normalized_adjacency();
        for l in m.locations() {
            let i = l.index();
            let d = 1.0 / a.get(i, i);
            assert!((d - (m.neighbours(l).len() as f64 + 1.0)).abs() < 1e-9);
        }
    }
}
