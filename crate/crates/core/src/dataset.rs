//! On-disk query datasets.
//!
//! One TSV file per split. The first line is a header carrying the
//! generation seed and the checksums of the three graph overlays; every
//! following line is `structure\tquery\teasy\thard` with answer ids
//! comma-separated (empty field for no answers).

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::kg::{EntityId, GraphSplits};
use crate::query::{parse_query, structure_of, AnswerSet, Structure};
use crate::sampler::{QueryDataset, QueryInstance, Split};

const MAGIC: &str = "#betae-queries v1";

/// Provenance recorded at the top of each split file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetHeader {
    pub split: String,
    pub seed: u64,
    pub checksums: BTreeMap<String, String>,
}

impl DatasetHeader {
    pub fn new(split: Split, seed: u64, graphs: &GraphSplits) -> Self {
        let checksums = [("train", &graphs.train), ("valid", &graphs.valid), ("test", &graphs.test)]
            .into_iter()
            .map(|(k, g)| (k.to_string(), g.checksum()))
            .collect();
        Self { split: split.name().into(), seed, checksums }
    }

    fn render(&self) -> String {
        let mut line = format!("{MAGIC}\tsplit={}\tseed={}", self.split, self.seed);
        for (k, v) in &self.checksums {
            line.push_str(&format!("\tgraph_{k}={v}"));
        }
        line
    }

    fn parse(line: &str, path: &Path) -> Result<Self> {
        let mut fields = line.split('\t');
        if fields.next() != Some(MAGIC) {
            return Err(Error::format(path, 1, "missing query dataset header"));
        }
        let mut split = None;
        let mut seed = None;
        let mut checksums = BTreeMap::new();
        for field in fields {
            let (k, v) = field
                .split_once('=')
                .ok_or_else(|| Error::format(path, 1, format!("malformed header field {field:?}")))?;
            match k {
                "split" => split = Some(v.to_string()),
                "seed" => {
                    seed = Some(v.parse().map_err(|_| Error::format(path, 1, format!("invalid seed {v:?}")))?)
                }
                _ => {
                    if let Some(name) = k.strip_prefix("graph_") {
                        checksums.insert(name.to_string(), v.to_string());
                    }
                }
            }
        }
        Ok(Self {
            split: split.ok_or_else(|| Error::format(path, 1, "header lacks split"))?,
            seed: seed.ok_or_else(|| Error::format(path, 1, "header lacks seed"))?,
            checksums,
        })
    }

    /// Fails when the dataset was generated from different graph files.
    pub fn check_graphs(&self, graphs: &GraphSplits) -> Result<()> {
        let current = DatasetHeader::new(Split::Train, self.seed, graphs);
        for (k, v) in &self.checksums {
            if current.checksums.get(k) != Some(v) {
                return Err(Error::Config(format!(
                    "query dataset was generated from a different {k} graph (checksum mismatch)"
                )));
            }
        }
        Ok(())
    }
}

fn join_ids(s: &AnswerSet) -> String {
    s.iter().map(|v| v.0.to_string()).collect::<Vec<_>>().join(",")
}

fn parse_ids(field: &str, path: &Path, line: usize) -> Result<AnswerSet> {
    if field.is_empty() {
        return Ok(AnswerSet::new());
    }
    field
        .split(',')
        .map(|s| {
            s.parse::<u32>()
                .map(EntityId)
                .map_err(|_| Error::format(path, line, format!("invalid entity id {s:?}")))
        })
        .collect()
}

pub fn write_split(path: &Path, header: &DatasetHeader, instances: &[QueryInstance]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut write = || -> std::io::Result<()> {
        writeln!(w, "{}", header.render())?;
        for inst in instances {
            writeln!(w, "{}\t{}\t{}\t{}", inst.structure, inst.query, join_ids(&inst.easy), join_ids(&inst.hard))?;
        }
        w.flush()
    };
    write().map_err(|e| Error::io(path, e))
}

pub fn read_split(path: &Path) -> Result<(DatasetHeader, Vec<QueryInstance>)> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let first = lines
        .next()
        .ok_or_else(|| Error::format(path, 1, "empty query file"))?
        .map_err(|e| Error::io(path, e))?;
    let header = DatasetHeader::parse(&first, path)?;
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let lineno = i + 2;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let [structure, query, easy, hard] = fields[..] else {
            return Err(Error::format(path, lineno, format!("expected 4 tab-separated fields, found {}", fields.len())));
        };
        let structure: Structure =
            structure.parse().map_err(|e: Error| Error::format(path, lineno, e.to_string()))?;
        let query = parse_query(query).map_err(|e| Error::format(path, lineno, e.to_string()))?;
        if structure_of(&query).ok() != Some(structure) {
            return Err(Error::format(path, lineno, format!("query {query} is not of structure {structure}")));
        }
        out.push(QueryInstance {
            query,
            structure,
            easy: parse_ids(easy, path, lineno)?,
            hard: parse_ids(hard, path, lineno)?,
        });
    }
    Ok((header, out))
}

fn split_file(dir: &Path, split: Split) -> std::path::PathBuf {
    dir.join(format!("{}.queries.tsv", split.name()))
}

/// Writes `train`, `valid` and `test` query files into `dir`.
pub fn save_dataset(dir: &Path, dataset: &QueryDataset, graphs: &GraphSplits) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for split in Split::ALL {
        let header = DatasetHeader::new(split, dataset.seed, graphs);
        write_split(&split_file(dir, split), &header, dataset.split(split))?;
    }
    Ok(())
}

/// Reads the three split files from `dir`. When `graphs` is given, the
/// recorded checksums must match.
pub fn load_dataset(dir: &Path, graphs: Option<&GraphSplits>) -> Result<QueryDataset> {
    let mut dataset = QueryDataset::default();
    for split in Split::ALL {
        let path = split_file(dir, split);
        let (header, instances) = read_split(&path)?;
        if let Some(g) = graphs {
            header.check_graphs(g)?;
        }
        dataset.seed = header.seed;
        *dataset.split_mut(split) = instances;
    }
    Ok(dataset)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::Triple;
    use crate::sampler::{generate_dataset, GenerateConfig};

    fn graphs() -> GraphSplits {
        let all: Vec<Triple> =
            (0..30u32).flat_map(|i| [Triple::new(i, 0, (i + 1) % 30), Triple::new(i, 1, (i * 7 + 2) % 30)]).collect();
        let (train, rest) = all.split_at(48);
        GraphSplits::build(train, &rest[..6], &rest[6..], 30, 2)
    }

    #[test]
    fn round_trip() {
        let g = graphs();
        let ds = generate_dataset(&g, &GenerateConfig::standard(20, 3), 9).dataset;
        let dir = tempfile::tempdir().unwrap();
        save_dataset(dir.path(), &ds, &g).unwrap();
        let back = load_dataset(dir.path(), Some(&g)).unwrap();
        assert_eq!(back, ds);
    }

    #[test]
    fn checksum_mismatch_is_reported() {
        let g = graphs();
        let ds = generate_dataset(&g, &GenerateConfig::standard(5, 1), 1).dataset;
        let dir = tempfile::tempdir().unwrap();
        save_dataset(dir.path(), &ds, &g).unwrap();
        let other = GraphSplits::build(&[Triple::new(0, 0, 1)], &[], &[], 30, 2);
        assert!(matches!(load_dataset(dir.path(), Some(&other)), Err(Error::Config(_))));
    }

    #[test]
    fn bad_line_reports_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.tsv");
        fs::write(&path, format!("{MAGIC}\tsplit=test\tseed=1\n1p\t(p 0 (e 1))\t2\t\n2p\t(p 0 (e 1))\t\t\n")).unwrap();
        match read_split(&path) {
            Err(Error::Format { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }
}
