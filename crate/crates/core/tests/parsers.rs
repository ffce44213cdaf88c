//! The fuzz corpus seeds parse, and mutated or arbitrary input is rejected
//! without panicking. A stable stand-in for the cargo-fuzz targets.

use proptest::prelude::*;
use slag_core::catalog::parse_registry;
use slag_core::frame::io::read_immersion_csv;
use slag_core::geometry::{AmbientSpace, HolomorphicFn};
use slag_core::kfield::io::{read_csv, read_meta};
use slag_core::kfield::Bc;
use std::path::PathBuf;

fn seeds(target: &str) -> Vec<(String, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fuzz/corpus")
        .join(target);
    let mut out: Vec<_> = std::fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let p = e.unwrap().path();
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read(&p).unwrap(),
            )
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "{target}");
    out
}

fn run_all(data: &[u8]) {
    for bc in [Bc::Periodic, Bc::Dirichlet] {
        let _ = read_csv(data, bc);
    }
    let _ = read_meta(data);
    for amb in [AmbientSpace::flat(4), AmbientSpace::sphere(5)] {
        let _ = read_immersion_csv(data, amb);
    }
    if let Ok(s) = std::str::from_utf8(data) {
        let _ = parse_registry(s);
        let _ = HolomorphicFn::parse(s);
    }
}

#[test]
fn corpus_seeds_are_valid() {
    for (name, data) in seeds("kfields_csv") {
        if name.ends_with(".json") {
            read_meta(data.as_slice()).unwrap();
        } else {
            read_csv(data.as_slice(), Bc::Periodic).unwrap_or_else(|e| panic!("{name}: {e}"));
        }
    }
    for (name, data) in seeds("immersion_csv") {
        let amb = if name.starts_with("flat") {
            AmbientSpace::flat(4)
        } else {
            AmbientSpace::sphere(5)
        };
        read_immersion_csv(data.as_slice(), amb).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
    for (name, data) in seeds("registry_json") {
        parse_registry(std::str::from_utf8(&data).unwrap()).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
    for (name, data) in seeds("holomorphic") {
        HolomorphicFn::parse(std::str::from_utf8(&data).unwrap()).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}

fn all_seeds() -> Vec<Vec<u8>> {
    ["kfields_csv", "immersion_csv", "registry_json", "holomorphic"]
        .iter()
        .flat_map(|t| seeds(t).into_iter().map(|s| s.1))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn arbitrary_bytes_do_not_panic(data in proptest::collection::vec(any::<u8>(), 0..256)) {
        run_all(&data);
    }

    #[test]
    fn mutated_seeds_do_not_panic(
        which in 0usize..64,
        edits in proptest::collection::vec((any::<prop::sample::Index>(), any::<u8>(), 0u8..3), 1..8),
    ) {
        let all = all_seeds();
        let mut data = all[which % all.len()].clone();
        for (at, byte, op) in edits {
            if data.is_empty() {
                data.push(byte);
                continue;
            }
            let i = at.index(data.len());
            match op {
                0 => data[i] = byte,
                1 => data.insert(i, byte),
                _ => {
                    data.remove(i);
                }
            }
        }
        run_all(&data);
    }
}
