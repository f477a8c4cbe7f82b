use std::fs;
use std::path::{Path, PathBuf};

use primparse::toy::{bundled, BUNDLED};

fn files(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            out.extend(files(&path));
        } else {
            out.push(path);
        }
    }
    out.sort();
    out
}

#[test]
fn checked_in_corpora_match_the_generators() {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data");
    let tmp = tempfile::tempdir().unwrap();
    for name in BUNDLED {
        let fresh = tmp.path().join(name);
        bundled(name).unwrap().write(&fresh).unwrap();
        let written = files(&fresh);
        let stored = files(&data.join(name));
        let rel = |p: &PathBuf, root: &Path| p.strip_prefix(root).unwrap().to_path_buf();
        assert_eq!(
            written.iter().map(|p| rel(p, &fresh)).collect::<Vec<_>>(),
            stored
                .iter()
                .map(|p| rel(p, &data.join(name)))
                .collect::<Vec<_>>(),
            "{name}: file sets differ; rerun `primparse export --out data`"
        );
        for (a, b) in written.iter().zip(&stored) {
            assert!(
                fs::read(a).unwrap() == fs::read(b).unwrap(),
                "{} is stale; rerun `primparse export --out data`",
                b.display()
            );
        }
    }
}
