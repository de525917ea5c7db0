//! Download helper for the SuiteSparse Matrix Collection.
//!
//! Matrices are fetched by name as Matrix Market tarballs, unpacked, and
//! cached as plain `.mtx` files; a cached file short-circuits the network
//! entirely, so populating the cache directory by hand works offline.

use std::io::Read;
use std::path::{Path, PathBuf};

use crate::{Error, Result};

/// Mirror bases serving `<base>/<group>/<name>.tar.gz`.
pub const COLLECTION_BASES: [&str; 2] = [
    "https://suitesparse-collection-website.herokuapp.com/MM",
    "https://sparse.tamu.edu/MM",
];

/// Collection group and canonical name for the benchmark matrices, keyed by
/// lowercase name. Accepts the common misspellings from the literature.
const KNOWN_MATRICES: &[(&str, &str, &str)] = &[
    ("poli", "Grund", "poli"),
    ("muu", "MathWorks", "Muu"),
    ("poli3", "Grund", "poli3"),
    ("ex29", "FIDAP", "ex29"),
    ("kim1", "Kim", "kim1"),
    ("bodyy4", "Pothen", "bodyy4"),
    ("qpband", "GHS_indef", "qpband"),
    ("rajat07", "Rajat", "rajat07"),
    ("tols4000", "Bai", "tols4000"),
    ("obstclae", "GHS_psdef", "obstclae"),
    ("obstalae", "GHS_psdef", "obstclae"),
    ("spmsrtls", "GHS_indef", "spmsrtls"),
    ("blckhole", "HB", "blckhole"),
    ("linverse", "GHS_indef", "linverse"),
    ("torsion1", "GHS_psdef", "torsion1"),
    ("poli_large", "Grund", "poli_large"),
    ("polilarge", "Grund", "poli_large"),
    ("jagmesh4", "HB", "jagmesh4"),
    ("bcsstm39", "Boeing", "bcsstm39"),
    ("crystm03", "Boeing", "crystm03"),
    ("chem97ztz", "Bates", "Chem97ZtZ"),
    ("wathen100", "GHS_psdef", "wathen100"),
];

/// Resolves a matrix name to its `(group, canonical_name)`. Explicit
/// `group/name` references pass through untouched.
pub fn resolve(name: &str) -> Option<(String, String)> {
    if let Some((group, bare)) = name.split_once('/') {
        return Some((group.to_string(), bare.to_string()));
    }
    let lower = name.to_lowercase();
    KNOWN_MATRICES
        .iter()
        .find(|(key, _, _)| *key == lower)
        .map(|(_, group, canonical)| (group.to_string(), canonical.to_string()))
}

/// Path the cached `.mtx` for `name` would live at.
pub fn cached_path(name: &str, cache_dir: &Path) -> Option<PathBuf> {
    resolve(name).map(|(_, canonical)| cache_dir.join(format!("{canonical}.mtx")))
}

/// Returns the local path of `name`, downloading and unpacking it on a cache
/// miss. `name` is either a known benchmark name or `group/name`.
pub fn fetch_matrix(name: &str, cache_dir: &Path) -> Result<PathBuf> {
    let (group, canonical) = resolve(name).ok_or_else(|| Error::Fetch {
        name: name.to_string(),
        msg: "unknown matrix; use an explicit group/name reference".to_string(),
    })?;
    let dest = cache_dir.join(format!("{canonical}.mtx"));
    if dest.is_file() {
        return Ok(dest);
    }
    std::fs::create_dir_all(cache_dir)?;

    let mut last_err = String::new();
    for base in COLLECTION_BASES {
        let url = format!("{base}/{group}/{canonical}.tar.gz");
        match download_and_extract(&url, &canonical, &dest) {
            Ok(()) => return Ok(dest),
            Err(e) => last_err = format!("{url}: {e}"),
        }
    }
    Err(Error::Fetch {
        name: name.to_string(),
        msg: last_err,
    })
}

fn download_and_extract(url: &str, canonical: &str, dest: &Path) -> Result<()> {
    let response = ureq::get(url).call().map_err(|e| Error::Fetch {
        name: canonical.to_string(),
        msg: e.to_string(),
    })?;
    let mut compressed = Vec::new();
    response
        .into_reader()
        .take(512 * 1024 * 1024)
        .read_to_end(&mut compressed)?;

    let gz = flate2::read::GzDecoder::new(compressed.as_slice());
    let mut archive = tar::Archive::new(gz);
    let wanted = format!("{canonical}.mtx");
    for entry in archive.entries()? {
        let mut entry = entry?;
        let path = entry.path()?.into_owned();
        let matches = path
            .file_name()
            .map(|f| f.to_string_lossy() == wanted.as_str())
            .unwrap_or(false);
        if matches {
            let mut contents = Vec::new();
            entry.read_to_end(&mut contents)?;
            std::fs::write(dest, contents)?;
            return Ok(());
        }
    }
    Err(Error::Fetch {
        name: canonical.to_string(),
        msg: format!("archive at {url} does not contain {wanted}"),
    })
}
