//! Bundled element-name dictionary backing strict-path mode.
//!
//! Names are checked per resource type when the focus item is a resource, and
//! against the union of all known element names for nested elements. Choice
//! elements are listed as `value[x]` and accept any `valueFoo` spelling.

use std::collections::{HashMap, HashSet};
use std::sync::LazyLock;

#[derive(serde::Deserialize)]
struct Raw {
    resources: HashMap<String, Vec<String>>,
    elements: Vec<String>,
}

pub(crate) struct ElementDictionary {
    resources: HashMap<String, HashSet<String>>,
    all: HashSet<String>,
}

static DICTIONARY: LazyLock<ElementDictionary> = LazyLock::new(|| {
    let raw: Raw = serde_json::from_str(include_str!("elements.json")).expect("bundled element dictionary parses");
    let mut all: HashSet<String> = raw.elements.into_iter().collect();
    let resources = raw
        .resources
        .into_iter()
        .map(|(ty, names)| {
            all.extend(names.iter().cloned());
            (ty, names.into_iter().collect())
        })
        .collect();
    ElementDictionary { resources, all }
});

fn matches(names: &HashSet<String>, name: &str) -> bool {
    if names.contains(name) || names.contains(&format!("{name}[x]")) {
        return true;
    }
    // valueQuantity against value[x]
    name.char_indices()
        .filter(|(_, c)| c.is_ascii_uppercase())
        .any(|(i, _)| names.contains(&format!("{}[x]", &name[..i])))
}

impl ElementDictionary {
    pub(crate) fn get() -> &'static ElementDictionary {
        &DICTIONARY
    }

    pub(crate) fn knows_resource(&self, resource_type: &str) -> bool {
        self.resources.contains_key(resource_type)
    }

    pub(crate) fn knows_element(&self, owner_resource: Option<&str>, name: &str) -> bool {
        match owner_resource.and_then(|t| self.resources.get(t)) {
            Some(names) => matches(names, name),
            None => matches(&self.all, name),
        }
    }
}
