#![allow(dead_code)]

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use patchbench::corpus::{split_ids, write_canonical, RepairInstance};
use patchbench::LanguageId;

/// `n` Java instances whose fix flips `+` to `-`.
pub fn java_instances(n: usize) -> Vec<RepairInstance> {
    (0..n)
        .map(|i| {
            RepairInstance::new(
                format!("j{i:04}"),
                LanguageId::Java,
                format!("int f{i}(int x) {{ return x + {i}; }}"),
                format!("int f{i}(int x) {{ return x - {i}; }}"),
            )
        })
        .collect()
}

pub fn write_dataset(dir: &Path, name: &str, instances: &[RepairInstance]) -> PathBuf {
    let path = dir.join(format!("{name}.jsonl"));
    write_canonical(instances, std::fs::File::create(&path).unwrap()).unwrap();
    path
}

/// Oracle table answering the fixed code for the first `covered` test ids
/// of the seed's split.
pub fn oracle_table(dir: &Path, instances: &[RepairInstance], seed: u64, covered: usize) -> (PathBuf, Vec<String>) {
    let ids: Vec<String> = instances.iter().map(|i| i.id.clone()).collect();
    let split = split_ids(&ids, seed).unwrap();
    let by_id: HashMap<&str, &RepairInstance> = instances.iter().map(|i| (i.id.as_str(), i)).collect();
    let table: HashMap<&str, &str> =
        split.test[..covered].iter().map(|id| (id.as_str(), by_id[id.as_str()].fixed_code.as_str())).collect();
    let path = dir.join("oracle.json");
    std::fs::write(&path, serde_json::to_string(&table).unwrap()).unwrap();
    (path, split.test)
}
