#![allow(dead_code)]

pub mod gen;

use std::path::PathBuf;

use past_lift::syntax::{parse, SourceFile};
use past_lift::Ptrs;

pub const CORPUS: [&str; 16] = [
    "rd", "r1", "r2", "r3", "srw", "srw2", "s1", "s2", "s3", "s4", "s5", "s6", "s7", "s8", "s2bar",
    "s2prime",
];

pub fn corpus_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("corpus").join(name)
}

pub fn source(name: &str) -> SourceFile {
    let path = corpus_path(&format!("{name}.ptrs"));
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    parse(&text).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn load(name: &str) -> Ptrs {
    source(name).system
}
