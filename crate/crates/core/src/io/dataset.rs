//! Tab-separated ratings and relations keyed by opaque string ids.
//!
//! Ratings lines are `user<TAB>item<TAB>rating`; signed relation lines are
//! `truster<TAB>trustee<TAB>sign` with sign 1 or -1. Lines starting with `#`
//! and blank lines are skipped.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use log::warn;

use crate::data::{Edge, Rating, RatingScale, Sign, SocialGraph, SparseRatings};
use crate::error::{Error, Result};

/// Bijection between external ids and dense indices, in first-seen order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IdMap {
    ids: Vec<String>,
    index: HashMap<String, usize>,
}

impl IdMap {
    pub fn new() -> Self {
        IdMap::default()
    }

    pub fn from_ids(ids: Vec<String>) -> Result<Self> {
        let mut map = IdMap::new();
        for id in ids {
            if map.index.contains_key(&id) {
                return Err(Error::invalid(format!("id `{id}` listed twice")));
            }
            map.insert(&id);
        }
        Ok(map)
    }

    pub fn insert(&mut self, id: &str) -> usize {
        if let Some(&idx) = self.index.get(id) {
            return idx;
        }
        let idx = self.ids.len();
        self.ids.push(id.to_string());
        self.index.insert(id.to_string(), idx);
        idx
    }

    pub fn get(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn id(&self, index: usize) -> &str {
        &self.ids[index]
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// One `index<TAB>id` line per entry.
    pub fn write(&self, path: &Path) -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        for (idx, id) in self.ids.iter().enumerate() {
            writeln!(out, "{idx}\t{id}")?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let mut ids = Vec::new();
        for (n, line) in BufReader::new(File::open(path)?).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let (idx, id) = line.split_once('\t').ok_or_else(|| Error::Parse {
                line: n + 1,
                message: "expected `index<TAB>id`".into(),
            })?;
            if idx.trim().parse::<usize>().ok() != Some(ids.len()) {
                return Err(Error::Parse {
                    line: n + 1,
                    message: format!("expected index {}", ids.len()),
                });
            }
            ids.push(id.to_string());
        }
        IdMap::from_ids(ids)
    }
}

/// How ids not yet in a map are handled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IdPolicy {
    Extend,
    Frozen,
}

fn resolve(map: &mut IdMap, id: &str, policy: IdPolicy, kind: &str, line: usize) -> Result<usize> {
    match policy {
        IdPolicy::Extend => Ok(map.insert(id)),
        IdPolicy::Frozen => map.get(id).ok_or_else(|| Error::Parse {
            line,
            message: format!("unknown {kind} `{id}`"),
        }),
    }
}

fn data_lines(reader: impl BufRead) -> impl Iterator<Item = Result<(usize, String)>> {
    reader.lines().enumerate().filter_map(|(n, line)| match line {
        Err(e) => Some(Err(e.into())),
        Ok(l) => {
            let t = l.trim();
            (!t.is_empty() && !t.starts_with('#')).then(|| Ok((n + 1, t.to_string())))
        }
    })
}

fn fields(text: &str, line: usize, expected: usize) -> Result<Vec<&str>> {
    let f: Vec<&str> = text.split('\t').map(str::trim).collect();
    if f.len() != expected || f.iter().any(|s| s.is_empty()) {
        return Err(Error::Parse {
            line,
            message: format!("expected {expected} tab-separated fields"),
        });
    }
    Ok(f)
}

/// Raw parsed ratings, indexed through `users` and `items`.
#[derive(Debug, Clone)]
pub struct ParsedRatings {
    pub entries: Vec<Rating>,
}

pub fn parse_ratings(
    reader: impl BufRead,
    users: &mut IdMap,
    items: &mut IdMap,
    policy: IdPolicy,
    scale: RatingScale,
) -> Result<ParsedRatings> {
    let mut entries = Vec::new();
    for item in data_lines(reader) {
        let (line, text) = item?;
        let f = fields(&text, line, 3)?;
        let value: f64 = f[2].parse().map_err(|_| Error::Parse {
            line,
            message: format!("invalid rating `{}`", f[2]),
        })?;
        if !value.is_finite() || !scale.contains(value) {
            return Err(Error::Parse {
                line,
                message: format!("rating {value} outside [{}, {}]", scale.min, scale.max),
            });
        }
        let user = resolve(users, f[0], policy, "user", line)?;
        let item = resolve(items, f[1], policy, "item", line)?;
        entries.push(Rating { user, item, value });
    }
    Ok(ParsedRatings { entries })
}

/// Where the relations come from.
#[derive(Debug, Clone, Copy)]
pub enum SocialSource<'a> {
    None,
    Signed(&'a Path),
    Split {
        trust: &'a Path,
        distrust: Option<&'a Path>,
    },
}

/// Parsed relations with the line each came from.
pub fn parse_social(
    reader: impl BufRead,
    users: &mut IdMap,
    policy: IdPolicy,
    fixed_sign: Option<Sign>,
    file: &str,
) -> Result<Vec<(Edge, String)>> {
    let mut out = Vec::new();
    for item in data_lines(reader) {
        let (line, text) = item?;
        let f = match fixed_sign {
            Some(_) => fields(&text, line, 2)?,
            None => fields(&text, line, 3)?,
        };
        let sign = match fixed_sign {
            Some(s) => s,
            None => f[2]
                .parse::<i64>()
                .ok()
                .and_then(Sign::from_value)
                .ok_or_else(|| Error::Parse {
                    line,
                    message: format!("sign must be 1 or -1, got `{}`", f[2]),
                })?,
        };
        if f[0] == f[1] {
            return Err(Error::Parse {
                line,
                message: format!("self-relation on user `{}`", f[0]),
            });
        }
        let from = resolve(users, f[0], policy, "user", line)?;
        let to = resolve(users, f[1], policy, "user", line)?;
        out.push((Edge { from, to, sign }, format!("{file}:{line}")));
    }
    Ok(out)
}

/// Builds a graph, rejecting contradictory signs (citing both lines) and
/// dropping identical repeats. Returns the number of repeats dropped.
pub fn build_graph(n_users: usize, edges: &[(Edge, String)]) -> Result<(SocialGraph, usize)> {
    let mut first_seen: HashMap<(usize, usize), (Sign, &str)> = HashMap::new();
    let mut graph = SocialGraph::new(n_users);
    let mut repeats = 0;
    for (edge, origin) in edges {
        match first_seen.get(&(edge.from, edge.to)) {
            Some(&(sign, _)) if sign == edge.sign => repeats += 1,
            Some(&(_, earlier)) => {
                return Err(Error::invalid(format!(
                    "contradictory relation signs at {earlier} and {origin}"
                )))
            }
            None => {
                first_seen.insert((edge.from, edge.to), (edge.sign, origin));
                graph.add_edge(edge.from, edge.to, edge.sign)?;
            }
        }
    }
    Ok((graph, repeats))
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub ratings: SparseRatings,
    pub graph: SocialGraph,
    pub users: IdMap,
    pub items: IdMap,
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::invalid(format!("cannot open {}: {e}", path.display())))
}

/// Loads ratings and relations into one shared user index. Users that only
/// appear in relations get indices after every rating user.
pub fn load_dataset(ratings: &Path, social: SocialSource<'_>, scale: RatingScale) -> Result<Dataset> {
    let mut users = IdMap::new();
    let mut items = IdMap::new();
    let parsed = parse_ratings(open(ratings)?, &mut users, &mut items, IdPolicy::Extend, scale)
        .map_err(|e| with_file(e, ratings))?;
    if parsed.entries.is_empty() {
        warn!("{} holds no ratings", ratings.display());
    }

    let mut edges = Vec::new();
    let mut read = |path: &Path, sign: Option<Sign>| -> Result<()> {
        let name = path.display().to_string();
        let e = parse_social(open(path)?, &mut users, IdPolicy::Extend, sign, &name)
            .map_err(|e| with_file(e, path))?;
        edges.extend(e);
        Ok(())
    };
    match social {
        SocialSource::None => {}
        SocialSource::Signed(path) => read(path, None)?,
        SocialSource::Split { trust, distrust } => {
            read(trust, Some(Sign::Trust))?;
            if let Some(d) = distrust {
                read(d, Some(Sign::Distrust))?;
            }
        }
    }

    let (ratings_set, dropped) =
        SparseRatings::new_last_wins(users.len(), items.len(), parsed.entries, scale)?;
    if dropped > 0 {
        warn!("{dropped} duplicate ratings resolved by keeping the last occurrence");
    }
    let (graph, repeats) = build_graph(users.len(), &edges)?;
    if repeats > 0 {
        warn!("{repeats} duplicate relations ignored");
    }
    Ok(Dataset {
        ratings: ratings_set,
        graph,
        users,
        items,
    })
}

pub(crate) fn with_file(e: Error, path: &Path) -> Error {
    match e {
        Error::Parse { line, message } => Error::Parse {
            line,
            message: format!("{}: {message}", path.display()),
        },
        other => other,
    }
}

/// Reads ratings whose ids must already be in the given maps.
pub fn load_ratings_with(
    path: &Path,
    users: &IdMap,
    items: &IdMap,
    scale: RatingScale,
) -> Result<SparseRatings> {
    let mut u = users.clone();
    let mut i = items.clone();
    let parsed = parse_ratings(open(path)?, &mut u, &mut i, IdPolicy::Frozen, scale)
        .map_err(|e| with_file(e, path))?;
    let (r, dropped) = SparseRatings::new_last_wins(users.len(), items.len(), parsed.entries, scale)?;
    if dropped > 0 {
        warn!("{dropped} duplicate ratings resolved by keeping the last occurrence");
    }
    Ok(r)
}

fn format_value(v: f64) -> String {
    // shortest representation that parses back to the same value
    format!("{v}")
}

pub fn write_ratings(path: &Path, ratings: &SparseRatings, users: &IdMap, items: &IdMap) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for r in ratings.entries() {
        writeln!(
            out,
            "{}\t{}\t{}",
            users.id(r.user),
            items.id(r.item),
            format_value(r.value)
        )?;
    }
    out.flush()?;
    Ok(())
}

/// One signed `from<TAB>to<TAB>sign` line per relation.
pub fn write_social(path: &Path, graph: &SocialGraph, users: &IdMap) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for e in graph.edges() {
        writeln!(out, "{}\t{}\t{}", users.id(e.from), users.id(e.to), e.sign.value())?;
    }
    out.flush()?;
    Ok(())
}

/// Ids `u0, u1, ...` for generated data.
pub fn numbered_ids(prefix: &str, count: usize) -> IdMap {
    IdMap::from_ids((0..count).map(|i| format!("{prefix}{i}")).collect()).expect("distinct ids")
}
