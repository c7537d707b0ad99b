//! Rating datasets: MovieLens `u.data`, the restaurant-consumer
//! `rating_final.csv`, and dense ground truth built from either by
//! low-rank completion.

mod completion;

pub use completion::{complete_matrix, Completion, CompletionOptions};

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Deduplicated `(user, item, rating)` triples with dense 0-based indices.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseRatings {
    pub triples: Vec<(usize, usize, f64)>,
    pub n_users: usize,
    pub n_items: usize,
    pub rating_range: (f64, f64),
}

impl SparseRatings {
    /// Checks indices, rating range and uniqueness of every pair.
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.rating_range;
        if !(lo <= hi) {
            return Err(Error::invalid(format!("empty rating range [{lo}, {hi}]")));
        }
        let mut seen = std::collections::HashSet::with_capacity(self.triples.len());
        for &(u, i, r) in &self.triples {
            if u >= self.n_users || i >= self.n_items {
                return Err(Error::invalid(format!("pair ({u}, {i}) out of bounds")));
            }
            if !(lo..=hi).contains(&r) {
                return Err(Error::invalid(format!("rating {r} outside [{lo}, {hi}]")));
            }
            if !seen.insert((u, i)) {
                return Err(Error::invalid(format!("duplicate pair ({u}, {i})")));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }
}

const MOVIELENS_RANGE: (f64, f64) = (1.0, 5.0);
const RC_RANGE: (f64, f64) = (0.0, 2.0);

/// Loads a MovieLens `u.data` file: `user\titem\trating\ttimestamp`, 1-based ids.
///
/// A repeated `(user, item)` keeps the rating with the latest timestamp, at the
/// position of its first occurrence. Dimensions are the largest ids seen.
pub fn load_movielens(path: impl AsRef<Path>) -> Result<SparseRatings> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };

    let mut triples: Vec<(usize, usize, f64)> = Vec::new();
    let mut stamps: Vec<u64> = Vec::new();
    let mut index: HashMap<(usize, usize), usize> = HashMap::new();
    let (mut n_users, mut n_items) = (0, 0);
    for (k, line) in BufReader::new(file).lines().enumerate() {
        let lineno = k + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.trim_end_matches('\r').split('\t').collect();
        if fields.len() != 4 {
            return Err(parse_err(lineno, format!("expected 4 tab-separated fields, found {}", fields.len())));
        }
        let id = |s: &str, what: &str| -> Result<usize> {
            match s.trim().parse::<usize>() {
                Ok(v) if v >= 1 => Ok(v),
                _ => Err(parse_err(lineno, format!("invalid {what} id `{s}`"))),
            }
        };
        let user = id(fields[0], "user")?;
        let item = id(fields[1], "item")?;
        let rating = match fields[2].trim().parse::<u8>() {
            Ok(r) if (1..=5).contains(&r) => f64::from(r),
            _ => return Err(parse_err(lineno, format!("rating `{}` not in 1..=5", fields[2]))),
        };
        let stamp = fields[3]
            .trim()
            .parse::<u64>()
            .map_err(|_| parse_err(lineno, format!("invalid timestamp `{}`", fields[3])))?;

        n_users = n_users.max(user);
        n_items = n_items.max(item);
        let key = (user - 1, item - 1);
        match index.get(&key) {
            Some(&pos) => {
                if stamp >= stamps[pos] {
                    stamps[pos] = stamp;
                    triples[pos].2 = rating;
                }
            }
            None => {
                index.insert(key, triples.len());
                triples.push((key.0, key.1, rating));
                stamps.push(stamp);
            }
        }
    }
    if triples.is_empty() {
        return Err(parse_err(0, "no ratings".into()));
    }
    Ok(SparseRatings {
        triples,
        n_users,
        n_items,
        rating_range: MOVIELENS_RANGE,
    })
}

/// Loads a restaurant-consumer `rating_final.csv` with columns `userID`,
/// `placeID` and `rating` in any order; other columns are ignored.
///
/// Identifiers are re-indexed in order of first appearance. A repeated pair
/// keeps its last rating.
pub fn load_rc(path: impl AsRef<Path>) -> Result<SparseRatings> {
    let path = path.as_ref();
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| parse_err(1, format!("missing column `{name}`")))
    };
    let (cu, cp, cr) = (column("userID")?, column("placeID")?, column("rating")?);

    let mut users: HashMap<String, usize> = HashMap::new();
    let mut items: HashMap<String, usize> = HashMap::new();
    let mut index: HashMap<(usize, usize), usize> = HashMap::new();
    let mut triples = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let lineno = record.position().map_or(0, |p| p.line() as usize);
        let field = |c: usize| {
            record
                .get(c)
                .ok_or_else(|| parse_err(lineno, format!("missing field {}", c + 1)))
        };
        let rating = match field(cr)?.parse::<u8>() {
            Ok(r) if r <= 2 => f64::from(r),
            _ => return Err(parse_err(lineno, format!("rating `{}` not in {{0, 1, 2}}", field(cr)?))),
        };
        let next = users.len();
        let u = *users.entry(field(cu)?.to_string()).or_insert(next);
        let next = items.len();
        let i = *items.entry(field(cp)?.to_string()).or_insert(next);
        match index.get(&(u, i)) {
            Some(&pos) => triples[pos] = (u, i, rating),
            None => {
                index.insert((u, i), triples.len());
                triples.push((u, i, rating));
            }
        }
    }
    if triples.is_empty() {
        return Err(parse_err(1, "no ratings".into()));
    }
    Ok(SparseRatings {
        triples,
        n_users: users.len(),
        n_items: items.len(),
        rating_range: RC_RANGE,
    })
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::io(path, source),
        kind => Error::Parse {
            path: path.to_path_buf(),
            line,
            message: format!("{kind:?}"),
        },
    }
}

/// Writes triples in `u.data` layout with 1-based ids and zero timestamps.
pub fn write_movielens(path: impl AsRef<Path>, ratings: &SparseRatings) -> Result<()> {
    let path = path.as_ref();
    let write = || -> std::io::Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        for &(u, i, r) in &ratings.triples {
            writeln!(out, "{}\t{}\t{}\t0", u + 1, i + 1, r)?;
        }
        out.flush()
    };
    write().map_err(|e| Error::io(path, e))
}

/// Writes triples in `rating_final.csv` layout, using the dense indices as ids.
pub fn write_rc(path: impl AsRef<Path>, ratings: &SparseRatings) -> Result<()> {
    let path = path.as_ref();
    let mut out = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    let mut write = || -> std::result::Result<(), csv::Error> {
        out.write_record(["userID", "placeID", "rating"])?;
        for &(u, i, r) in &ratings.triples {
            out.write_record([format!("U{u}"), i.to_string(), r.to_string()])?;
        }
        out.flush()?;
        Ok(())
    };
    write().map_err(|e| csv_error(path, e))
}
