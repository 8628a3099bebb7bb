use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::{Path, PathBuf};

use super::grid::{read_grid, GRID_EXTENSION};
use super::relationship::{family_of, RelationshipRecord};
use super::submission::split_pair_id;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Images loaded from an `images/<family>/<person>/<name>.grid` tree.
#[derive(Clone, Debug, Default)]
pub struct KinshipDataset {
    pub names: Vec<String>,
    pub persons: Vec<String>,
    pub images: Vec<Tensor>,
    index: HashMap<String, usize>,
}

fn collect_grids(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.is_dir() {
            collect_grids(&path, out)?;
        } else if path.extension().is_some_and(|e| e == GRID_EXTENSION) {
            out.push(path);
        }
    }
    Ok(())
}

impl KinshipDataset {
    /// Loads every `.grid` file under `root`, in sorted path order. The person
    /// id is the last two directory components, `<family>/<person>`.
    pub fn load_dir(root: &Path) -> Result<Self> {
        let mut paths = Vec::new();
        collect_grids(root, &mut paths)?;
        paths.sort();
        let mut set = KinshipDataset::default();
        for path in paths {
            let name = path.file_name().unwrap().to_string_lossy().into_owned();
            let rel = path
                .parent()
                .and_then(|p| p.strip_prefix(root).ok())
                .unwrap_or(Path::new(""));
            let parts: Vec<String> = rel
                .components()
                .map(|c| c.as_os_str().to_string_lossy().into_owned())
                .collect();
            if parts.len() < 2 {
                return Err(Error::Contract(format!(
                    "{}: expected <family>/<person>/<image> layout",
                    path.display()
                )));
            }
            let person = parts[parts.len() - 2..].join("/");
            let image = read_grid(&path)?;
            set.push(name, person, image)?;
        }
        Ok(set)
    }

    pub fn push(&mut self, name: String, person: String, image: Tensor) -> Result<usize> {
        if self.index.contains_key(&name) {
            return Err(Error::Duplicate(name));
        }
        if let Some(first) = self.images.first() {
            if first.shape() != image.shape() {
                return Err(Error::dim("dataset image", first.shape(), image.shape()));
            }
        }
        let i = self.images.len();
        self.index.insert(name.clone(), i);
        self.names.push(name);
        self.persons.push(person);
        self.images.push(image);
        Ok(i)
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    /// Person id to image indices, leaving out the listed families.
    pub fn person_images(
        &self,
        exclude_families: &HashSet<String>,
    ) -> BTreeMap<String, Vec<usize>> {
        let mut out: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (i, p) in self.persons.iter().enumerate() {
            if !exclude_families.contains(family_of(p)) {
                out.entry(p.clone()).or_default().push(i);
            }
        }
        out
    }

    /// Image index pairs for `img_a-img_b` ids; errors list unknown names.
    pub fn resolve_pairs<S: AsRef<str>>(&self, ids: &[S]) -> Result<Vec<(usize, usize)>> {
        let mut missing = Vec::new();
        let mut out = Vec::with_capacity(ids.len());
        for id in ids {
            let (a, b) = split_pair_id(id.as_ref())?;
            match (self.index_of(a), self.index_of(b)) {
                (Some(i), Some(j)) => out.push((i, j)),
                (x, y) => {
                    if x.is_none() {
                        missing.push(a.to_string());
                    }
                    if y.is_none() {
                        missing.push(b.to_string());
                    }
                }
            }
        }
        if !missing.is_empty() {
            let shown: Vec<_> = missing.iter().take(10).cloned().collect();
            return Err(Error::Join(format!(
                "{} image name(s) not in dataset: {}",
                missing.len(),
                shown.join(", ")
            )));
        }
        Ok(out)
    }

    /// Families that appear in any of the given image pairs.
    pub fn families_of_pairs(&self, pairs: &[(usize, usize)]) -> HashSet<String> {
        pairs
            .iter()
            .flat_map(|&(a, b)| [a, b])
            .map(|i| family_of(&self.persons[i]).to_string())
            .collect()
    }
}

/// Relations with neither person in an excluded family.
pub fn filter_relations(
    relations: &[RelationshipRecord],
    exclude_families: &HashSet<String>,
) -> Vec<RelationshipRecord> {
    relations
        .iter()
        .filter(|r| {
            !exclude_families.contains(family_of(&r.person_a))
                && !exclude_families.contains(family_of(&r.person_b))
        })
        .cloned()
        .collect()
}
